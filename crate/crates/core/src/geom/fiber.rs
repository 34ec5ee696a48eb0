use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::geom::map::SmoothMap;
use crate::geom::symplectic::{PhasePoint, SymplecticStructure};

/// Ordered tangent vectors at a base point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub base: PhasePoint,
    pub vectors: Vec<Vec<f64>>,
}

impl Frame {
    /// Builds a frame, rejecting families whose smallest singular value is
    /// at most `tol`.
    pub fn new(base: PhasePoint, vectors: Vec<Vec<f64>>, tol: f64) -> Result<Self> {
        let dim = base.coords.len();
        if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
            return Err(GeomError::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
        let frame = Frame { base, vectors };
        let sigma = smallest_singular_value(&frame.matrix().transpose());
        if !frame.vectors.is_empty() && sigma <= tol {
            return Err(GeomError::RankDeficient {
                sigma_min: sigma,
                tol,
            });
        }
        Ok(frame)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Vectors as the columns of a `2n × k` matrix.
    pub fn matrix(&self) -> DMatrix<f64> {
        let rows = self.base.coords.len();
        DMatrix::from_fn(rows, self.vectors.len(), |i, j| self.vectors[j][i])
    }

    /// Largest `|ω(v_i, v_j)|`.
    pub fn omega_residual(&self, s: &SymplecticStructure) -> f64 {
        let m = self.matrix();
        (m.transpose() * &s.pairing * m).amax()
    }
}

/// Singular values in decreasing order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// `σ_min` of a `rows × cols` matrix over its `min(rows, cols)` values.
pub fn smallest_singular_value(m: &DMatrix<f64>) -> f64 {
    singular_values(m).last().copied().unwrap_or(0.0)
}

/// Orthonormal basis of `ker M` for a wide matrix `M` (`m × N`, `m < N`)
/// together with the singular values of `M`. Fails when `σ_m ≤ tol·max(1, σ₁)`.
pub fn kernel_basis(m: &DMatrix<f64>, tol: f64) -> Result<(Vec<DVector<f64>>, Vec<f64>)> {
    let (rows, cols) = m.shape();
    // pad to square so the SVD returns a full right basis
    let mut sq = DMatrix::zeros(cols, cols);
    sq.view_mut((0, 0), (rows, cols)).copy_from(m);
    let svd = sq.svd(false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sv: Vec<f64> = order[..rows]
        .iter()
        .map(|&i| svd.singular_values[i])
        .collect();
    let top = sv.first().copied().unwrap_or(0.0).max(1.0);
    let smallest = sv.last().copied().unwrap_or(0.0);
    if smallest <= tol * top {
        return Err(GeomError::RankDeficient {
            sigma_min: smallest,
            tol,
        });
    }
    let basis = order[rows..]
        .iter()
        .map(|&i| vt.row(i).transpose())
        .collect();
    Ok((basis, sv))
}

/// Orthonormal frame of `T_x f⁻¹(f(x)) = ker Df(x)` computed by SVD.
pub fn fiber_tangent_frame(f: &SmoothMap, x: &PhasePoint, tol: f64) -> Result<Frame> {
    let d = f.jacobian_lenient(&x.coords)?;
    let (basis, _) = kernel_basis(&d, tol)?;
    Ok(Frame {
        base: x.clone(),
        vectors: basis.into_iter().map(|v| v.as_slice().to_vec()).collect(),
    })
}

/// `max |ω(v_i, v_j)|` over an orthonormal fibre frame at `x`.
pub fn lagrangian_residual(
    s: &SymplecticStructure,
    f: &SmoothMap,
    x: &PhasePoint,
    tol: f64,
) -> Result<f64> {
    Ok(fiber_tangent_frame(f, x, tol)?.omega_residual(s))
}

/// Outcome of a fibre solve.
#[derive(Clone, Debug, PartialEq)]
pub struct FiberSolve {
    pub point: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    /// Smallest singular value of `Df` at the solution.
    pub sigma_min: f64,
    /// Set when `sigma_min` fell below the rank monitor threshold.
    pub near_critical: bool,
}

/// Options for [`solve_fiber_point`].
#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub rank_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-10,
            max_iter: 100,
            rank_tol: 1e-6,
        }
    }
}

fn residual_of(f: &SmoothMap, x: &[f64], b: &[f64]) -> Result<(DVector<f64>, f64)> {
    let y = f.eval(x)?;
    let r = DVector::from_iterator(b.len(), y.iter().zip(b).map(|(a, c)| a - c));
    let n = r.amax();
    Ok((r, n))
}

/// Gauss–Newton on `|f(x) − b|²` with minimum-norm steps and backtracking.
pub fn solve_fiber_point(
    f: &SmoothMap,
    b: &[f64],
    seed: &[f64],
    opts: SolveOptions,
) -> Result<FiberSolve> {
    if b.len() != f.dim_out() {
        return Err(GeomError::DimensionMismatch {
            expected: f.dim_out(),
            got: b.len(),
        });
    }
    let mut x = DVector::from_column_slice(seed);
    let (mut r, mut res) = residual_of(f, seed, b)?;
    let mut iterations = 0;
    while res > opts.tol {
        if iterations >= opts.max_iter {
            return Err(GeomError::NonConvergence {
                what: "fibre solve".into(),
                iterations,
                residual: res,
            });
        }
        iterations += 1;
        let d = f.jacobian_lenient(x.as_slice())?;
        let step = min_norm_solve(&d, &r)?;
        let mut lambda = 1.0;
        loop {
            let trial = &x - &step * lambda;
            if f.in_domain(trial.as_slice()) {
                if let Ok((rt, nt)) = residual_of(f, trial.as_slice(), b) {
                    if nt < res || lambda < 1e-3 && nt.is_finite() && nt < 10.0 * res {
                        x = trial;
                        r = rt;
                        res = nt;
                        break;
                    }
                }
            }
            lambda *= 0.5;
            if lambda < 1e-8 {
                return Err(GeomError::NonConvergence {
                    what: "fibre solve line search".into(),
                    iterations,
                    residual: res,
                });
            }
        }
    }
    let sigma_min = smallest_singular_value(&f.jacobian_lenient(x.as_slice())?);
    Ok(FiberSolve {
        point: x.as_slice().to_vec(),
        residual: res,
        iterations,
        sigma_min,
        near_critical: sigma_min < opts.rank_tol,
    })
}

/// Minimum-norm solution of `D δ = r` for a wide `D`, via the SVD
/// pseudo-inverse (robust near rank drops).
pub fn min_norm_solve(d: &DMatrix<f64>, r: &DVector<f64>) -> Result<DVector<f64>> {
    let svd = d.clone().svd(true, true);
    let top = svd.singular_values.max();
    svd.solve(r, 1e-13 * top.max(1e-300))
        .map_err(|e| GeomError::Continuation(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::symplectic::ChartId;

    fn coordinate_map(idx: [usize; 2]) -> SmoothMap {
        SmoothMap::from_fn("coords", 4, 2, move |x| vec![x[idx[0]], x[idx[1]]])
    }

    #[test]
    fn kernel_of_coordinate_projection() {
        let f = coordinate_map([0, 1]);
        let p = PhasePoint::new(ChartId::Standard(2), vec![0.0; 4]).unwrap();
        let frame = fiber_tangent_frame(&f, &p, 1e-10).unwrap();
        assert_eq!(frame.len(), 2);
        for v in &frame.vectors {
            assert!(v[0].abs() < 1e-9 && v[1].abs() < 1e-9);
        }
        let s = SymplecticStructure::standard(2);
        assert!((frame.omega_residual(&s) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn symplectic_pair_fibres_are_not_lagrangian() {
        let p = PhasePoint::new(ChartId::Standard(2), vec![0.2, 0.1, -0.4, 0.3]).unwrap();
        let s = SymplecticStructure::standard(2);
        // ker (x₁, y₂) = span(∂y₁, ∂x₂) is isotropic
        let r = lagrangian_residual(&s, &coordinate_map([0, 3]), &p, 1e-10).unwrap();
        assert!(r < 1e-9);
        // ker (x₁, y₁) = span(∂x₂, ∂y₂) is a symplectic plane
        let r = lagrangian_residual(&s, &coordinate_map([0, 1]), &p, 1e-10).unwrap();
        assert!((r - 1.0).abs() < 1e-9);
    }

    #[test]
    fn frame_rejects_dependent_vectors() {
        let p = PhasePoint::new(ChartId::Standard(1), vec![0.0, 0.0]).unwrap();
        assert!(Frame::new(p.clone(), vec![vec![1.0, 0.0], vec![2.0, 0.0]], 1e-10).is_err());
        assert!(Frame::new(p, vec![vec![1.0, 0.0], vec![0.0, 1.0]], 1e-10).is_ok());
    }

    #[test]
    fn solve_from_exact_seed() {
        let f = coordinate_map([0, 2]);
        let seed = [0.1, 0.2, 0.3, 0.4];
        let out = solve_fiber_point(&f, &[0.1, 0.3], &seed, SolveOptions::default()).unwrap();
        assert_eq!(out.point, seed.to_vec());
        assert_eq!(out.iterations, 0);
    }
}
