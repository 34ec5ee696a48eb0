//! Pointwise residual checks over sample clouds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geom::fiber::lagrangian_residual;
use crate::geom::map::{pullback_residual, SmoothMap};
use crate::geom::symplectic::PhasePoint;
use crate::models::FibrationModel;
use crate::verify::cloud::SampleCloud;

/// Largest residual over a cloud.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub max: f64,
    pub samples: usize,
}

impl Residual {
    pub fn within(&self, tol: f64) -> bool {
        self.max <= tol
    }
}

fn max_over<F>(cloud: &SampleCloud, f: F) -> Result<Residual>
where
    F: Fn(&PhasePoint) -> Result<f64> + Sync,
{
    let values: Vec<f64> = cloud.points.par_iter().map(&f).collect::<Result<_>>()?;
    let max = values.iter().copied().fold(0.0, f64::max);
    Ok(Residual {
        max,
        samples: values.len(),
    })
}

pub fn dist_max(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Distance with angle coordinates compared modulo their period.
pub fn dist_periodic(a: &[f64], b: &[f64], periodic: &[(usize, f64)]) -> f64 {
    let mut d = 0f64;
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        let mut e = (x - y).abs();
        if let Some(&(_, p)) = periodic.iter().find(|(j, _)| *j == i) {
            e = e.rem_euclid(p);
            e = e.min(p - e);
        }
        d = d.max(e);
    }
    d
}

/// `max |f(φ(x)) − f(x)|`.
pub fn verify_fiber_preserving<M>(
    model: &FibrationModel,
    map: M,
    cloud: &SampleCloud,
) -> Result<Residual>
where
    M: Fn(&PhasePoint) -> Result<PhasePoint> + Sync,
{
    max_over(cloud, |x| {
        let y = map(x)?;
        Ok(dist_max(&model.eval(&y)?, &model.eval(x)?))
    })
}

/// `max |φ(φ(x)) − x|` (angles modulo their period).
pub fn verify_involution<M>(
    map: M,
    cloud: &SampleCloud,
    periodic: &[(usize, f64)],
) -> Result<Residual>
where
    M: Fn(&PhasePoint) -> Result<PhasePoint> + Sync,
{
    max_over(cloud, |x| {
        Ok(dist_periodic(&map(&map(x)?)?.coords, &x.coords, periodic))
    })
}

/// `max |φ(t⁻¹(x)) − t(φ(x))|`.
pub fn verify_commutation<P, T, U>(phi: P, t: T, t_inv: U, cloud: &SampleCloud) -> Result<Residual>
where
    P: Fn(&PhasePoint) -> Result<PhasePoint> + Sync,
    T: Fn(&PhasePoint) -> Result<PhasePoint> + Sync,
    U: Fn(&PhasePoint) -> Result<PhasePoint> + Sync,
{
    max_over(cloud, |x| {
        Ok(dist_max(&phi(&t_inv(x)?)?.coords, &t(&phi(x)?)?.coords))
    })
}

/// `max ‖(Dφ)ᵀ J (Dφ) − sign·J‖`.
pub fn verify_pullback(map: &SmoothMap, cloud: &SampleCloud, sign: f64) -> Result<Residual> {
    max_over(cloud, |x| {
        pullback_residual(&x.chart.symplectic(), map, &x.coords, sign)
    })
}

/// `max lagrangian_residual` over the cloud.
pub fn verify_lagrangian(
    model: &FibrationModel,
    cloud: &SampleCloud,
    tol: f64,
) -> Result<Residual> {
    let s = model.chart.symplectic();
    max_over(cloud, |x| lagrangian_residual(&s, &model.fibration, x, tol))
}
