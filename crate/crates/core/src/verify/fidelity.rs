//! Integrated flows of the focus-focus moment map against their closed
//! forms `g₁ᵗ(z) = (e^{−t}z₁, e^{t}z₂)` and `g₂ᵗ(z) = (e^{it}z₁, e^{it}z₂)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geom::flow::{default_steps, integrate, integrate_order4, Hamiltonian};
use crate::models::{focus_focus, FibrationModel};
use crate::verify::checks::dist_max;

/// Worst deviations over the sampled times and starting points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowFidelity {
    pub g1_error: f64,
    pub g2_error: f64,
    /// `max |H(flow) − H(start)|` for the implicit midpoint rule.
    pub energy_drift: f64,
    pub samples: usize,
}

fn closed_form(component: usize, t: f64, x: &[f64]) -> Result<Vec<f64>> {
    let tau = match component {
        0 => Complex64::new((-t).exp(), 0.0),
        _ => Complex64::from_polar(1.0, t),
    };
    let z = focus_focus::scale(
        tau,
        [Complex64::new(x[0], x[1]), Complex64::new(x[2], x[3])],
    )?;
    Ok(focus_focus::to_point(z).coords)
}

/// Compares both component flows with their closed forms at `times`
/// from each of `starts`. The comparison uses the fourth-order scheme;
/// the energy drift is measured on the plain midpoint rule.
pub fn flow_fidelity(
    model: &FibrationModel,
    starts: &[Vec<f64>],
    times: &[f64],
) -> Result<FlowFidelity> {
    let s = model.chart.symplectic();
    let mut out = FlowFidelity {
        g1_error: 0.0,
        g2_error: 0.0,
        energy_drift: 0.0,
        samples: 0,
    };
    for i in 0..2 {
        let mut e = [0.0; 2];
        e[i] = 1.0;
        let h = model.fibration.linear_functional(&e);
        for x in starts {
            for &t in times {
                let y = integrate_order4(&s, &h, x, t, default_steps(t))?;
                let err = dist_max(&y, &closed_form(i, t, x)?);
                if i == 0 {
                    out.g1_error = out.g1_error.max(err);
                } else {
                    out.g2_error = out.g2_error.max(err);
                }
                let m = integrate(&s, &h, x, t, default_steps(t))?;
                out.energy_drift = out.energy_drift.max((h.value(&m)? - h.value(x)?).abs());
                out.samples += 1;
            }
        }
    }
    Ok(out)
}
