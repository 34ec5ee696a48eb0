//! The map `Θ̃(b, ξ)`: flow a section point along the fibre by the
//! Hamiltonian `⟨ξ, f⟩`. Its kernel is the period lattice.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::geom::fiber::smallest_singular_value;
use crate::geom::flow::integrate_order4;
use crate::geom::map::SmoothMap;
use crate::geom::symplectic::PhasePoint;
use crate::models::{FibrationModel, Section};

/// Integration density for `Θ̃`: steps per unit of `max(1, |ξ|∞)`.
pub const THETA_STEPS_PER_UNIT: usize = 200;
/// Largest tolerated drift `|f(Θ̃(b, ξ)) − b|`.
pub const THETA_DRIFT: f64 = 1e-8;

/// Which Hamiltonian realizes `dh = ξ` at `b`.
#[derive(Clone, Debug, PartialEq)]
pub enum Realization {
    /// `h(y) = ⟨ξ, y⟩`.
    Affine,
    /// `h(y) = ⟨ξ, y⟩ + ½ (y − b)ᵀ Q (y − b)`; same differential at `b`.
    Quadratic(DMatrix<f64>),
}

fn steps_for(xi: &[f64]) -> usize {
    let size = xi.iter().map(|v| v.abs()).fold(1.0, f64::max);
    (size * THETA_STEPS_PER_UNIT as f64).ceil() as usize
}

/// Time-one flow of `⟨ξ, f⟩` from `x`.
pub fn fiberwise_translation(model: &FibrationModel, xi: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    if xi.len() != model.base_dim {
        return Err(GeomError::DimensionMismatch {
            expected: model.base_dim,
            got: xi.len(),
        });
    }
    if xi.iter().all(|v| *v == 0.0) {
        return Ok(x.to_vec());
    }
    let h = model.fibration.linear_functional(xi);
    integrate_order4(&model.chart.symplectic(), &h, x, 1.0, steps_for(xi))
}

/// `Θ̃(b, ξ)` for the affine realization.
pub fn build_theta(
    model: &FibrationModel,
    sigma: &Section,
    b: &[f64],
    xi: &[f64],
) -> Result<PhasePoint> {
    build_theta_with(model, sigma, b, xi, &Realization::Affine)
}

pub fn build_theta_with(
    model: &FibrationModel,
    sigma: &Section,
    b: &[f64],
    xi: &[f64],
    how: &Realization,
) -> Result<PhasePoint> {
    if xi.len() != model.base_dim || b.len() != model.base_dim {
        return Err(GeomError::DimensionMismatch {
            expected: model.base_dim,
            got: xi.len().min(b.len()),
        });
    }
    let start = sigma.eval(b)?;
    if xi.iter().all(|v| *v == 0.0) {
        return model.point(start);
    }
    let h: SmoothMap = match how {
        Realization::Affine => model.fibration.linear_functional(xi),
        Realization::Quadratic(q) => model.fibration.quadratic_functional(xi, b, q.clone()),
    };
    // fast fibres can need a finer step; refine twice before giving up
    let mut drift = f64::INFINITY;
    for refine in 0..3 {
        let out = integrate_order4(
            &model.chart.symplectic(),
            &h,
            &start,
            1.0,
            steps_for(xi) << refine,
        )?;
        drift = model
            .fibration
            .eval(&out)?
            .iter()
            .zip(b)
            .map(|(a, c)| (a - c).abs())
            .fold(0.0, f64::max);
        if drift <= THETA_DRIFT {
            return model.point(out);
        }
    }
    Err(GeomError::NonConvergence {
        what: "theta flow drifted off the fibre".into(),
        iterations: 3,
        residual: drift,
    })
}

/// Difference `a − b` with angle coordinates wrapped to `(−p/2, p/2]`.
fn wrapped_diff(model: &FibrationModel, a: &[f64], b: &[f64]) -> DVector<f64> {
    DVector::from_iterator(
        a.len(),
        a.iter().zip(b).enumerate().map(|(i, (x, y))| {
            let d = x - y;
            match model.periodic.iter().find(|(j, _)| *j == i) {
                Some(&(_, p)) => d - p * (d / p).round(),
                None => d,
            }
        }),
    )
}

/// `[X_{f₁}, …, X_{fₙ}]` at `x`; since the components commute this is
/// the derivative of `Θ̃(b, ·)`.
fn flow_jacobian(model: &FibrationModel, x: &[f64]) -> Result<DMatrix<f64>> {
    let d = model.fibration.jacobian_lenient(x)?;
    let s = model.chart.symplectic();
    let cols: Vec<DVector<f64>> = (0..model.base_dim)
        .map(|i| s.hamiltonian_vector(&d.row(i).transpose()))
        .collect();
    Ok(DMatrix::from_columns(&cols))
}

/// Gauss–Newton for `Θ̃(b, ξ) = target` from `xi0`.
fn newton_theta(
    model: &FibrationModel,
    sigma: &Section,
    b: &[f64],
    target: &[f64],
    xi0: &[f64],
    tol: f64,
) -> Result<Vec<f64>> {
    let mut xi = DVector::from_column_slice(xi0);
    let mut last = f64::INFINITY;
    for it in 0..40 {
        let y = build_theta(model, sigma, b, xi.as_slice())?;
        let r = wrapped_diff(model, &y.coords, target);
        let res = r.amax();
        if res <= tol {
            return Ok(xi.as_slice().to_vec());
        }
        if it > 8 && res > 0.5 * last {
            // stalled at the integration noise floor
            if res <= 100.0 * tol {
                return Ok(xi.as_slice().to_vec());
            }
            return Err(GeomError::NonConvergence {
                what: "theta inversion".into(),
                iterations: it,
                residual: res,
            });
        }
        last = res;
        let j = flow_jacobian(model, &y.coords)?;
        let step = j
            .svd(true, true)
            .solve(&r, 1e-12)
            .map_err(|e| GeomError::Continuation(e.to_string()))?;
        // cap the step so a poor start cannot jump across many periods
        let size = step.amax();
        let step = if size > 1.0 { step / size } else { step };
        xi -= step;
    }
    Err(GeomError::NonConvergence {
        what: "theta inversion".into(),
        iterations: 40,
        residual: last,
    })
}

/// Newton-corrects an approximate period `xi` at `b`.
pub fn refine_period(
    model: &FibrationModel,
    sigma: &Section,
    b: &[f64],
    xi: &[f64],
) -> Result<Vec<f64>> {
    let target = sigma.eval(b)?;
    newton_theta(model, sigma, b, &target, xi, 1e-9)
}

/// Options for [`lattice_probe`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeOptions {
    /// Starts cover `[−radius, radius]ⁿ`.
    pub radius: f64,
    /// Grid points per axis.
    pub grid: usize,
    pub tol: f64,
}

impl Default for LatticeOptions {
    fn default() -> Self {
        LatticeOptions {
            radius: 8.0,
            grid: 9,
            tol: 1e-9,
        }
    }
}

/// Period matrix at `b` (columns are lattice generators): solves
/// `Θ̃(b, ξ) = σ(b)` from a grid of starts, then keeps the shortest
/// independent solutions and checks every other solution is an integer
/// combination of them.
pub fn lattice_probe(
    model: &FibrationModel,
    sigma: &Section,
    b: &[f64],
    opts: LatticeOptions,
) -> Result<DMatrix<f64>> {
    let n = model.base_dim;
    let target = sigma.eval(b)?;
    let axis: Vec<f64> = (0..opts.grid)
        .map(|k| -opts.radius + 2.0 * opts.radius * k as f64 / (opts.grid - 1).max(1) as f64)
        .collect();
    let mut starts: Vec<Vec<f64>> = vec![Vec::new()];
    for _ in 0..n {
        starts = starts
            .into_iter()
            .flat_map(|p| axis.iter().map(move |&a| [p.clone(), vec![a]].concat()))
            .collect();
    }
    starts.retain(|s| s.iter().any(|v| v.abs() > 1e-9));

    let found: Vec<Vec<f64>> = starts
        .par_iter()
        .filter_map(|s| newton_theta(model, sigma, b, &target, s, opts.tol).ok())
        .collect();
    let mut sols: Vec<DVector<f64>> = Vec::new();
    for v in found {
        let v = DVector::from_vec(v);
        if v.amax() < 1e-3
            || sols
                .iter()
                .any(|w| (w - &v).amax() < 1e-5 || (w + &v).amax() < 1e-5)
        {
            continue;
        }
        sols.push(v);
    }
    sols.sort_by(|a, b| {
        a.norm()
            .total_cmp(&b.norm())
            .then(a.as_slice().partial_cmp(b.as_slice()).unwrap())
    });

    let mut basis: Vec<DVector<f64>> = Vec::new();
    for v in &sols {
        let mut trial = basis.clone();
        trial.push(v.clone());
        let m = DMatrix::from_columns(&trial);
        if smallest_singular_value(&m) > 1e-3 * v.norm() {
            basis = trial;
            if basis.len() == n {
                break;
            }
        }
    }
    if basis.len() < n {
        return Err(GeomError::Continuation(format!(
            "found {} of {n} independent periods",
            basis.len()
        )));
    }
    // orient each generator consistently: first non-negligible entry positive
    for v in basis.iter_mut() {
        if let Some(x) = v.iter().find(|x| x.abs() > 1e-6) {
            if *x < 0.0 {
                *v = -v.clone();
            }
        }
    }
    let p = DMatrix::from_columns(&basis);
    let lu = p.clone().lu();
    for v in &sols {
        let c = lu.solve(v).ok_or(GeomError::SingularPeriodMatrix)?;
        let off = c.iter().map(|x| (x - x.round()).abs()).fold(0.0, f64::max);
        if off > 1e-3 {
            return Err(GeomError::NonInteger { residual: off });
        }
    }
    Ok(p)
}

/// Solves `Θ̃(f(x), ξ) = x` for `ξ`, starting from a coarse grid of the
/// fundamental domain of `periods`.
pub fn invert_theta(
    model: &FibrationModel,
    sigma: &Section,
    x: &[f64],
    periods: &DMatrix<f64>,
) -> Result<Vec<f64>> {
    let n = model.base_dim;
    let b = model.fibration.eval(x)?;
    let mut starts: Vec<Vec<f64>> = vec![Vec::new()];
    for _ in 0..n {
        starts = starts
            .into_iter()
            .flat_map(|p| (0..4).map(move |k| [p.clone(), vec![k as f64 / 4.0 - 0.375]].concat()))
            .collect();
    }
    let mut scored: Vec<(f64, Vec<f64>)> = starts
        .into_iter()
        .filter_map(|c| {
            let xi = (periods * DVector::from_vec(c)).as_slice().to_vec();
            let y = build_theta(model, sigma, &b, &xi).ok()?;
            Some((wrapped_diff(model, &y.coords, x).amax(), xi))
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut last = GeomError::Continuation("no usable start for theta inversion".into());
    for (_, xi0) in scored.iter().take(6) {
        match newton_theta(model, sigma, &b, x, xi0, 1e-9) {
            Ok(xi) => return Ok(xi),
            Err(e) => last = e,
        }
    }
    Err(last)
}

/// `Θ ∘ (−id) ∘ Θ⁻¹` at `x`.
pub fn theta_negation(
    model: &FibrationModel,
    sigma: &Section,
    x: &[f64],
    periods: &DMatrix<f64>,
) -> Result<PhasePoint> {
    let b = model.fibration.eval(x)?;
    let xi = invert_theta(model, sigma, x, periods)?;
    let neg: Vec<f64> = xi.iter().map(|v| -v).collect();
    build_theta(model, sigma, &b, &neg)
}

/// Periods of the nodal model `(μ, log|1 + z₁z₂|)` by quadrature over the
/// circle `1 + w = e^{b₂} e^{iφ}`, `w = z₁z₂`. Columns are `(2π, 0)` (the
/// μ-orbit) and `(Δ, T)`, where `T` is the return time of the `f₂` flow and
/// `Δ` the angle of `z₁` it accumulates.
pub fn nodal_period_oracle(b: &[f64]) -> Result<DMatrix<f64>> {
    let (mu, r) = (b[0], b[1].exp());
    let m = 4096;
    let (mut t, mut delta) = (0.0, 0.0);
    for k in 0..m {
        let phi = TAU * (k as f64 + 0.5) / m as f64;
        let one_w = num_complex::Complex64::from_polar(r, phi);
        let w = one_w - 1.0;
        let s = (mu * mu + w.norm_sqr()).sqrt();
        if s == 0.0 {
            return Err(GeomError::Domain {
                what: "singular nodal fibre".into(),
            });
        }
        let dt = r * r / (2.0 * s);
        t += dt;
        delta += -(w / one_w).re / (s + mu) * dt;
    }
    let h = TAU / m as f64;
    let delta = (delta * h + PI).rem_euclid(TAU) - PI;
    Ok(DMatrix::from_column_slice(2, 2, &[TAU, 0.0, delta, t * h]))
}

/// How far `b`'s columns are from an integer unimodular recombination of
/// `a`'s: `max |c − round(c)|` over `c = a⁻¹ b`, or `∞` when the change of
/// basis is not invertible over ℤ.
pub fn lattice_mismatch(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let Some(inv) = a.clone().try_inverse() else {
        return f64::INFINITY;
    };
    let c = inv * b;
    let off = c.iter().map(|x| (x - x.round()).abs()).fold(0.0, f64::max);
    let det = c.map(|x| x.round()).determinant();
    if (det.abs() - 1.0).abs() > 1e-9 {
        return f64::INFINITY;
    }
    off
}
