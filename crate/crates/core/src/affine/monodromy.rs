//! Monodromy of the period lattice around loops in the base.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::models::{FibrationModel, Section};
use crate::semiflat::chart::SemiflatChart;
use crate::semiflat::theta::{lattice_probe, refine_period, LatticeOptions};

/// Default number of loop steps.
pub const LOOP_STEPS: usize = 720;
/// Largest accepted distance from an integer after transport.
pub const ROUNDING_THRESHOLD: f64 = 1e-3;
/// Largest per-step change of coefficients; beyond it the loop is too
/// coarse for the continuation to be trusted.
const STEP_DRIFT: f64 = 0.25;

/// Circle `center + radius (cos t, sin t)` in the `(axes.0, axes.1)` plane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopSpec {
    pub center: Vec<f64>,
    pub radius: f64,
    pub axes: (usize, usize),
    /// `+1` counterclockwise, `−1` clockwise.
    pub orientation: i8,
    pub steps: usize,
}

impl LoopSpec {
    /// Counterclockwise loop in the first two base coordinates.
    pub fn circle(center: Vec<f64>, radius: f64) -> Self {
        LoopSpec {
            center,
            radius,
            axes: (0, 1),
            orientation: 1,
            steps: LOOP_STEPS,
        }
    }

    pub fn reversed(&self) -> Self {
        LoopSpec {
            orientation: -self.orientation,
            ..self.clone()
        }
    }

    pub fn point(&self, k: usize) -> Vec<f64> {
        let t = self.orientation as f64 * TAU * k as f64 / self.steps as f64;
        let mut b = self.center.clone();
        b[self.axes.0] += self.radius * t.cos();
        b[self.axes.1] += self.radius * t.sin();
        b
    }
}

/// Integer matrix whose columns express the transported periods in the
/// initial basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonodromyMatrix {
    pub entries: Vec<Vec<i64>>,
    pub basis: Vec<String>,
    pub lp: LoopSpec,
    /// Distance from an integer of the final change of basis.
    pub residual: f64,
    /// Largest per-step coefficient change during transport.
    pub max_step_drift: f64,
}

impl MonodromyMatrix {
    pub fn n(&self) -> usize {
        self.entries.len()
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |i, j| self.entries[i][j] as f64)
    }

    pub fn determinant(&self) -> i64 {
        self.matrix().determinant().round() as i64
    }

    pub fn is_identity(&self) -> bool {
        (0..self.n()).all(|i| (0..self.n()).all(|j| self.entries[i][j] == (i == j) as i64))
    }

    /// `(M − I)ⁿ = 0`.
    pub fn is_unipotent(&self) -> bool {
        let n = self.n();
        let a = self.matrix() - DMatrix::identity(n, n);
        let mut p = DMatrix::identity(n, n);
        for _ in 0..n {
            p *= &a;
        }
        p.amax() < 0.5
    }
}

fn round_checked(c: &DMatrix<f64>, residual: &mut f64) -> DMatrix<f64> {
    for x in c.iter() {
        *residual = residual.max((x - x.round()).abs());
    }
    c.map(|x| x.round())
}

fn finish(
    p0: &DMatrix<f64>,
    last: &DMatrix<f64>,
    basis: Vec<String>,
    lp: &LoopSpec,
    drift: f64,
) -> Result<MonodromyMatrix> {
    let inv = p0
        .clone()
        .try_inverse()
        .ok_or(GeomError::SingularPeriodMatrix)?;
    let mut residual = 0.0;
    let m = round_checked(&(inv * last), &mut residual);
    if residual > ROUNDING_THRESHOLD {
        return Err(GeomError::NonInteger { residual });
    }
    let n = m.nrows();
    let entries = (0..n)
        .map(|i| (0..n).map(|j| m[(i, j)] as i64).collect())
        .collect();
    Ok(MonodromyMatrix {
        entries,
        basis,
        lp: lp.clone(),
        residual,
        max_step_drift: drift,
    })
}

/// Transports the closed-form period basis of `chart` around `lp`: at each
/// step the previous basis is re-expressed in the (principal-branch) periods
/// and rounded, which realizes the continuous continuation.
pub fn monodromy(chart: &SemiflatChart, lp: &LoopSpec) -> Result<MonodromyMatrix> {
    if lp.center.len() != chart.n {
        return Err(GeomError::DimensionMismatch {
            expected: chart.n,
            got: lp.center.len(),
        });
    }
    let p0 = chart.period_matrix(&lp.point(0))?;
    let mut current = p0.clone();
    let mut drift = 0f64;
    for k in 1..=lp.steps {
        let p = chart.period_matrix(&lp.point(k))?;
        let inv = p
            .clone()
            .try_inverse()
            .ok_or(GeomError::SingularPeriodMatrix)?;
        let c = round_checked(&(inv * &current), &mut drift);
        if drift > STEP_DRIFT {
            return Err(GeomError::Continuation(format!(
                "period basis jumped by {drift:.3} in one step"
            )));
        }
        current = p * c;
    }
    let basis = (1..=chart.n).map(|i| format!("lambda{i}")).collect();
    finish(&p0, &current, basis, lp, drift)
}

/// Monodromy computed on a model: the lattice is found by
/// [`lattice_probe`] at the start and each generator is then continued by
/// Newton along the loop.
pub fn monodromy_of_model(
    model: &FibrationModel,
    sigma: &Section,
    lp: &LoopSpec,
) -> Result<MonodromyMatrix> {
    let b0 = lp.point(0);
    let p0 = lattice_probe(model, sigma, &b0, LatticeOptions::default())?;
    let n = model.base_dim;
    let mut current = p0.clone();
    let mut drift = 0f64;
    for k in 1..=lp.steps {
        let b = lp.point(k);
        let cols: Vec<_> = (0..n)
            .map(|j| refine_period(model, sigma, &b, current.column(j).as_slice()))
            .collect::<Result<_>>()?;
        let next = DMatrix::from_fn(n, n, |i, j| cols[j][i]);
        drift = drift.max((&next - &current).amax() / current.amax());
        current = next;
    }
    let basis = (1..=n).map(|i| format!("period{i}")).collect();
    finish(&p0, &current, basis, lp, drift)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semiflat::chart::Polynomial;

    #[test]
    fn nodal_loop() {
        let chart = SemiflatChart::nodal(Polynomial::zero());
        let m = monodromy(&chart, &LoopSpec::circle(vec![0.0, 0.0], 0.5)).unwrap();
        assert_eq!(m.entries, vec![vec![1, 0], vec![1, 1]]);
        assert!(m.is_unipotent());
        let off = monodromy(&chart, &LoopSpec::circle(vec![0.6, 0.0], 0.3)).unwrap();
        assert!(off.is_identity());
    }
}
