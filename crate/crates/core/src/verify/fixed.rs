//! Fixed points of an involution on a single fibre.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::geom::fiber::{min_norm_solve, solve_fiber_point, SolveOptions};
use crate::geom::flow::{default_steps, fiber_walk};
use crate::geom::symplectic::PhasePoint;
use crate::models::{FibrationModel, Symmetry};
use crate::verify::checks::dist_periodic;
use crate::verify::cloud::uniform_in;

fn stacked_residual(
    model: &FibrationModel,
    sym: &Symmetry,
    b: &[f64],
    x: &[f64],
) -> Result<DVector<f64>> {
    let fx = model.fibration.eval(x)?;
    let px = sym.map.eval(x)?;
    let n = b.len();
    let m = x.len();
    let mut r = DVector::zeros(n + m);
    for i in 0..n {
        r[i] = fx[i] - b[i];
    }
    for i in 0..m {
        r[n + i] = x[i] - px[i];
    }
    Ok(r)
}

/// Gauss–Newton on `(f(x) − b, x − φ(x))` from `seed`. Returns the fixed
/// point on `f⁻¹(b)` when the residual drops below `tol`.
pub fn fixed_point_on_fiber(
    model: &FibrationModel,
    sym: &Symmetry,
    b: &[f64],
    seed: &[f64],
    tol: f64,
) -> Result<Vec<f64>> {
    let m = seed.len();
    let n = b.len();
    let mut x = DVector::from_column_slice(seed);
    let mut r = stacked_residual(model, sym, b, seed)?;
    let mut res = r.amax();
    for it in 0..60 {
        if res <= tol {
            return Ok(x.as_slice().to_vec());
        }
        let df = model.fibration.jacobian_lenient(x.as_slice())?;
        let dp = sym.map.jacobian(x.as_slice())?;
        let mut jac = DMatrix::zeros(n + m, m);
        jac.view_mut((0, 0), (n, m)).copy_from(&df);
        jac.view_mut((n, 0), (m, m))
            .copy_from(&(DMatrix::identity(m, m) - dp));
        let step = min_norm_solve(&jac, &r)?;
        let mut lambda = 1.0;
        loop {
            let trial = &x - &step * lambda;
            if model.in_domain(trial.as_slice()) {
                if let Ok(rt) = stacked_residual(model, sym, b, trial.as_slice()) {
                    let nt = rt.amax();
                    if nt < res {
                        x = trial;
                        r = rt;
                        res = nt;
                        break;
                    }
                }
            }
            lambda *= 0.5;
            if lambda < 1e-6 {
                return Err(GeomError::NonConvergence {
                    what: "fixed point on fibre".into(),
                    iterations: it,
                    residual: res,
                });
            }
        }
    }
    if res <= tol {
        Ok(x.as_slice().to_vec())
    } else {
        Err(GeomError::NonConvergence {
            what: "fixed point on fibre".into(),
            iterations: 60,
            residual: res,
        })
    }
}

/// Options for [`fiber_fixed_count`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedCountOptions {
    /// Independent solves of `f(x) = b` from random ambient seeds.
    pub anchors: usize,
    /// Fibre walks per anchor.
    pub walks: usize,
    /// Walk covectors are drawn from `[−walk_radius, walk_radius]ⁿ`.
    pub walk_radius: f64,
    pub seed: u64,
    /// Exploration is repeated with fresh seeds and a growing walk radius
    /// until a round finds nothing new and every fixed point has been
    /// reached `min_hits` times, for at most `rounds` rounds.
    pub min_hits: usize,
    pub rounds: usize,
}

impl Default for FixedCountOptions {
    fn default() -> Self {
        FixedCountOptions {
            anchors: 16,
            walks: 8,
            walk_radius: 3.0,
            seed: 7,
            min_hits: 4,
            rounds: 4,
        }
    }
}

/// Fixed points found on one fibre.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedCount {
    pub count: usize,
    pub points: Vec<Vec<f64>>,
    /// Fibre points explored.
    pub starts: usize,
    /// Starts whose Gauss–Newton run reached a fixed point.
    pub converged: usize,
    /// How many starts landed on the least visited fixed point; a low value
    /// signals weak coverage.
    pub min_hits: usize,
}

/// Counts fixed points of `sym` on `f⁻¹(b)`: fibre points are generated by
/// solving `f(x) = b` from random seeds and walking along the fibre with
/// random covectors; each is then pushed onto the fixed set by Gauss–Newton
/// and the results are clustered.
pub fn fiber_fixed_count(
    model: &FibrationModel,
    sym: &Symmetry,
    b: &[f64],
    opts: FixedCountOptions,
) -> Result<FixedCount> {
    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut hits: Vec<usize> = Vec::new();
    let (mut starts, mut converged) = (0, 0);
    let mut last_err = None;
    for round in 0..opts.rounds.max(1) {
        let seed = opts.seed.wrapping_add(0x9e37_79b9 * round as u64);
        let scale = (1 + round) as f64;
        let wider = FixedCountOptions {
            walk_radius: opts.walk_radius * scale,
            ..opts
        };
        let results = match explore(model, sym, b, &wider, seed, scale) {
            Ok(r) => r,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        starts += results.len();
        let before = points.len();
        for p in results.into_iter().flatten() {
            converged += 1;
            match points
                .iter()
                .position(|q| dist_periodic(q, &p, &model.periodic) < 1e-6)
            {
                Some(i) => hits[i] += 1,
                None => {
                    points.push(p);
                    hits.push(1);
                }
            }
        }
        let settled = round > 0 && points.len() == before;
        if settled && hits.iter().all(|&h| h >= opts.min_hits) {
            break;
        }
    }
    if points.is_empty() {
        if let Some(e) = last_err {
            return Err(e);
        }
    }
    Ok(FixedCount {
        count: points.len(),
        points,
        starts,
        converged,
        min_hits: hits.iter().copied().min().unwrap_or(0),
    })
}

/// One round: anchors on the fibre, walks from each, Gauss–Newton from all.
fn explore(
    model: &FibrationModel,
    sym: &Symmetry,
    b: &[f64],
    opts: &FixedCountOptions,
    seed: u64,
    scale: f64,
) -> Result<Vec<Option<Vec<f64>>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let region: Vec<(f64, f64)> = model
        .region
        .iter()
        .map(|&(lo, hi)| (lo * scale, hi * scale))
        .collect();
    let seeds: Vec<Vec<f64>> = (0..opts.anchors * 8)
        .map(|_| uniform_in(&mut rng, &region))
        .collect();
    let walks: Vec<Vec<f64>> = (0..opts.anchors * opts.walks)
        .map(|_| {
            (0..model.base_dim)
                .map(|_| rng.random_range(-opts.walk_radius..opts.walk_radius))
                .collect()
        })
        .collect();

    let solve = SolveOptions {
        tol: 1e-11,
        max_iter: 200,
        rank_tol: 1e-6,
    };
    let anchors: Vec<Vec<f64>> = seeds
        .par_iter()
        .filter_map(|s| {
            if !model.in_domain(s) {
                return None;
            }
            let out = solve_fiber_point(&model.fibration, b, s, solve).ok()?;
            (!out.near_critical).then_some(out.point)
        })
        .collect();
    let anchors: Vec<Vec<f64>> = anchors.into_iter().take(opts.anchors).collect();
    if anchors.is_empty() {
        return Err(GeomError::Coverage(
            "no point of the fibre was found".into(),
        ));
    }

    let mut starts: Vec<Vec<f64>> = anchors.clone();
    let walked: Vec<Vec<f64>> = (0..anchors.len() * opts.walks)
        .into_par_iter()
        .filter_map(|k| {
            let a = &anchors[k / opts.walks];
            let xi = &walks[k];
            let p = PhasePoint::new(model.chart, a.clone()).ok()?;
            let size = xi.iter().map(|v| v.abs()).fold(0.0, f64::max);
            let steps = default_steps(size).max(200);
            fiber_walk(&model.fibration, &p, xi, 1.0, steps, 1e-8)
                .ok()
                .map(|q| q.coords)
        })
        .collect();
    starts.extend(walked);

    Ok(starts
        .par_iter()
        .map(|s| fixed_point_on_fiber(model, sym, b, s, 1e-11).ok())
        .collect())
}
