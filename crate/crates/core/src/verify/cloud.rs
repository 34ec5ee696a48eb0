use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::geom::symplectic::PhasePoint;
use crate::models::FibrationModel;

/// Seeded sample of domain points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleCloud {
    pub points: Vec<PhasePoint>,
    pub seed: u64,
    pub region: Vec<(f64, f64)>,
}

/// Uniform point of a box.
pub fn uniform_in(rng: &mut impl Rng, region: &[(f64, f64)]) -> Vec<f64> {
    region
        .iter()
        .map(|&(lo, hi)| rng.random_range(lo..hi))
        .collect()
}

/// Pre-generates `n` candidates from the seed; filtering then runs in
/// parallel, so the result does not depend on the worker count.
pub fn candidates(seed: u64, region: &[(f64, f64)], n: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| uniform_in(&mut rng, region)).collect()
}

impl SampleCloud {
    /// Up to `n` domain points of the model, drawn from `region`.
    pub fn domain(
        model: &FibrationModel,
        region: &[(f64, f64)],
        n: usize,
        seed: u64,
    ) -> Result<Self> {
        Self::filtered(model, region, n, seed, |_| true)
    }

    /// `n` domain points at which `f` is regular with margin `tol` and which
    /// lie off any seam by at least `seam_margin`.
    pub fn regular(
        model: &FibrationModel,
        n: usize,
        seed: u64,
        tol: f64,
        seam_margin: f64,
    ) -> Result<Self> {
        Self::filtered(model, &model.region.clone(), n, seed, |x| {
            if let Some(mu) = model.fibration.seam_value(&x.coords) {
                if mu.abs() < seam_margin {
                    return false;
                }
            }
            model.is_regular(x, tol).map(|r| r.regular).unwrap_or(false)
        })
    }

    pub fn filtered<F>(
        model: &FibrationModel,
        region: &[(f64, f64)],
        n: usize,
        seed: u64,
        keep: F,
    ) -> Result<Self>
    where
        F: Fn(&PhasePoint) -> bool + Sync,
    {
        if region.len() != model.ambient_dim() {
            return Err(GeomError::DimensionMismatch {
                expected: model.ambient_dim(),
                got: region.len(),
            });
        }
        let mut points = Vec::with_capacity(n);
        let mut batch_seed = seed;
        let mut attempts = 0;
        while points.len() < n {
            attempts += 1;
            if attempts > 64 {
                return Err(GeomError::Coverage(format!(
                    "only {} of {n} admissible points found in the region",
                    points.len()
                )));
            }
            let batch = candidates(batch_seed, region, 2 * n.max(16));
            batch_seed = batch_seed
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let kept: Vec<PhasePoint> = batch
                .into_par_iter()
                .filter_map(|c| {
                    if !model.in_domain(&c) {
                        return None;
                    }
                    let p = PhasePoint::new(model.chart, c).ok()?;
                    keep(&p).then_some(p)
                })
                .collect();
            points.extend(kept.into_iter().take(n - points.len()));
        }
        Ok(SampleCloud {
            points,
            seed,
            region: region.to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `n` seeded base points from `region` accepted by `keep`.
pub fn base_points<F>(region: &[(f64, f64)], n: usize, seed: u64, keep: F) -> Vec<Vec<f64>>
where
    F: Fn(&[f64]) -> bool,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let mut tries = 0;
    while out.len() < n && tries < 1000 * n.max(1) {
        tries += 1;
        let b = uniform_in(&mut rng, region);
        if keep(&b) {
            out.push(b);
        }
    }
    out
}
