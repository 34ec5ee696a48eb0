//! Phases of Lagrangian planes against a holomorphic volume form, the
//! index of a transverse graded pair, and how an anti-holomorphic
//! involution acts on gradings.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::geom::fiber::Frame;
use crate::geom::symplectic::{ChartId, PhasePoint, SymplecticStructure};
use crate::models::{FibrationModel, ModelKind, Section, Symmetry};

/// Largest `|ω(vᵢ, vⱼ)|` accepted for a Lagrangian frame.
pub const LAGRANGIAN_TOL: f64 = 1e-8;
/// Eigenvalues of `W` this close to 1 mean the planes share a direction.
pub const TRANSVERSE_TOL: f64 = 1e-8;

/// `Ω = c(z) dz₁ ∧ … ∧ dz_n` on `ℂⁿ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolumeKind {
    /// `c ≡ 1`.
    Standard,
    /// `c = 1/(z₁⋯z_n)`, i.e. `dlog z₁ ∧ … ∧ dlog z_n`.
    Logarithmic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HolomorphicVolume {
    pub n: usize,
    pub kind: VolumeKind,
}

/// Vectors of `ℝ²ⁿ` read as vectors of `ℂⁿ`, as the columns of a matrix.
fn complex_columns(vectors: &[Vec<f64>]) -> DMatrix<Complex64> {
    let n = vectors.first().map_or(0, |v| v.len() / 2);
    DMatrix::from_fn(n, vectors.len(), |i, j| {
        Complex64::new(vectors[j][2 * i], vectors[j][2 * i + 1])
    })
}

impl HolomorphicVolume {
    pub fn standard(n: usize) -> Self {
        HolomorphicVolume {
            n,
            kind: VolumeKind::Standard,
        }
    }

    pub fn logarithmic(n: usize) -> Self {
        HolomorphicVolume {
            n,
            kind: VolumeKind::Logarithmic,
        }
    }

    /// The volume form the grading checks use for a model.
    pub fn for_model(model: &FibrationModel) -> Self {
        let n = model.ambient_dim() / 2;
        match model.kind {
            ModelKind::ToricReference => Self::logarithmic(n),
            _ => Self::standard(n),
        }
    }

    pub fn coefficient(&self, x: &[f64]) -> Result<Complex64> {
        match self.kind {
            VolumeKind::Standard => Ok(Complex64::new(1.0, 0.0)),
            VolumeKind::Logarithmic => {
                let p: Complex64 = (0..self.n)
                    .map(|j| Complex64::new(x[2 * j], x[2 * j + 1]))
                    .product();
                if p.norm() == 0.0 {
                    return Err(GeomError::LogOfZero("logarithmic volume form".into()));
                }
                Ok(p.inv())
            }
        }
    }

    /// `Ω_x(v₁, …, v_n)`.
    pub fn eval(&self, x: &[f64], vectors: &[Vec<f64>]) -> Result<Complex64> {
        if vectors.len() != self.n
            || vectors.iter().any(|v| v.len() != 2 * self.n)
            || x.len() != 2 * self.n
        {
            return Err(GeomError::DimensionMismatch {
                expected: self.n,
                got: vectors.len(),
            });
        }
        Ok(self.coefficient(x)? * complex_columns(vectors).determinant())
    }
}

/// A Lagrangian plane with its phase data `Ω(frame) = ψ e^{iπθ}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradedPlane {
    pub frame: Frame,
    pub theta: f64,
    pub psi: f64,
}

fn require_complex(chart: ChartId) -> Result<()> {
    if !chart.has_compatible_complex_structure() {
        return Err(GeomError::Config(format!(
            "chart {chart:?} carries no compatible complex structure"
        )));
    }
    Ok(())
}

/// Gram–Schmidt keeping orientation.
fn orthonormalize(vectors: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut w = DVector::from_column_slice(v);
        for _ in 0..2 {
            for u in &out {
                w -= u * u.dot(&w);
            }
        }
        let n = w.norm();
        if n < 1e-12 {
            return Err(GeomError::RankDeficient {
                sigma_min: n,
                tol: 1e-12,
            });
        }
        out.push(w / n);
    }
    Ok(out.into_iter().map(|v| v.as_slice().to_vec()).collect())
}

/// `θ` reduced to `[0, 2)`.
pub fn mod2(theta: f64) -> f64 {
    let r = theta.rem_euclid(2.0);
    if r >= 2.0 {
        0.0
    } else {
        r
    }
}

/// Distance between two phases modulo `m`.
pub fn phase_distance(a: f64, b: f64, m: f64) -> f64 {
    let d = (a - b).rem_euclid(m);
    d.min(m - d).abs()
}

/// Phase of a Lagrangian plane: orthonormalizes the frame (keeping its
/// orientation) and returns `(ψ, θ mod 2)` with `Ω(frame) = ψ e^{iπθ}`.
pub fn phase_of_plane(omega: &HolomorphicVolume, frame: &Frame) -> Result<GradedPlane> {
    require_complex(frame.base.chart)?;
    let s = frame.base.chart.symplectic();
    let residual = frame.omega_residual(&s);
    if residual > LAGRANGIAN_TOL * frame.matrix().amax().powi(2).max(1.0) {
        return Err(GeomError::NonLagrangian { residual });
    }
    let vectors = orthonormalize(&frame.vectors)?;
    let value = omega.eval(&frame.base.coords, &vectors)?;
    let psi = value.norm();
    if psi == 0.0 {
        return Err(GeomError::NonTransverse { gap: 0.0 });
    }
    let theta = mod2(value.arg() / std::f64::consts::PI);
    Ok(GradedPlane {
        frame: Frame {
            base: frame.base.clone(),
            vectors,
        },
        theta,
        psi,
    })
}

/// Index of a transverse graded pair: with unitary representatives
/// `U₁, U₂` of the planes, the eigenvalues of `W = (U₂U₂ᵀ)(U₁U₁ᵀ)⁻¹` are
/// `e^{2πiα_k}` with `α_k ∈ (0, 1)`, and the index is `Σα_k − θ₂ + θ₁`.
pub fn intersection_index(p1: &GradedPlane, p2: &GradedPlane) -> Result<f64> {
    let u1 = complex_columns(&orthonormalize(&p1.frame.vectors)?);
    let u2 = complex_columns(&orthonormalize(&p2.frame.vectors)?);
    if u1.shape() != u2.shape() || u1.nrows() != u1.ncols() {
        return Err(GeomError::DimensionMismatch {
            expected: u1.nrows(),
            got: u2.ncols(),
        });
    }
    let a = &u1 * u1.transpose();
    let b = &u2 * u2.transpose();
    let inv = a
        .try_inverse()
        .ok_or(GeomError::NonTransverse { gap: 0.0 })?;
    let w = b * inv;
    let eig = w
        .schur()
        .eigenvalues()
        .ok_or_else(|| GeomError::Continuation("complex Schur decomposition failed".into()))?;
    let mut alpha = 0.0;
    for l in eig.iter() {
        let gap = (l - Complex64::new(1.0, 0.0)).norm();
        if gap < TRANSVERSE_TOL {
            return Err(GeomError::NonTransverse { gap });
        }
        alpha += (l.arg() / std::f64::consts::TAU).rem_euclid(1.0);
    }
    Ok(alpha - p2.theta + p1.theta)
}

/// The plane spanned by the real coordinate directions, rotated by
/// `e^{iπ aⱼ}` in the `j`-th coordinate, graded by the lift `θ = Σaⱼ` of
/// its phase for the standard volume form.
pub fn rotated_real_plane(n: usize, angles: &[f64]) -> Result<GradedPlane> {
    let vectors: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut v = vec![0.0; 2 * n];
            let a = angles.get(j).copied().unwrap_or(0.0) * std::f64::consts::PI;
            v[2 * j] = a.cos();
            v[2 * j + 1] = a.sin();
            v
        })
        .collect();
    let base = PhasePoint::new(ChartId::Standard(n), vec![0.0; 2 * n])?;
    let mut plane = phase_of_plane(&HolomorphicVolume::standard(n), &Frame { base, vectors })?;
    let lift: f64 = angles.iter().take(n).sum();
    debug_assert!(phase_distance(plane.theta, lift, 2.0) < 1e-9);
    plane.theta = lift;
    Ok(plane)
}

/// `h(x)` with `φ*Ω = h Ω̄`, from two frames; fails if they disagree.
pub fn h_field(sym: &Symmetry, omega: &HolomorphicVolume, x: &[f64]) -> Result<Complex64> {
    let n = omega.n;
    let y = sym.map.eval(x)?;
    let d = sym.map.jacobian(x)?;
    let push = |vs: &[Vec<f64>]| -> Vec<Vec<f64>> {
        vs.iter()
            .map(|v| (&d * DVector::from_column_slice(v)).as_slice().to_vec())
            .collect()
    };
    let ratio = |vs: &[Vec<f64>]| -> Result<Complex64> {
        let num = omega.eval(&y, &push(vs))?;
        let den = omega.eval(x, vs)?.conj();
        if den.norm() < 1e-12 {
            return Err(GeomError::NonTransverse { gap: den.norm() });
        }
        Ok(num / den)
    };
    let real: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut v = vec![0.0; 2 * n];
            v[2 * j] = 1.0;
            v
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mixed: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..2 * n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let h1 = ratio(&real)?;
    let h2 = ratio(&mixed)?;
    let discrepancy = (h1 - h2).norm();
    if discrepancy > 1e-9 * h1.norm().max(1.0) {
        return Err(GeomError::FrameDependence { discrepancy });
    }
    Ok(h1)
}

/// `|h(φ(x))·h(x) − 1|`, which vanishes when `φ` is an involution.
pub fn h_involution_residual(sym: &Symmetry, omega: &HolomorphicVolume, x: &[f64]) -> Result<f64> {
    let y = sym.map.eval(x)?;
    Ok((h_field(sym, omega, &y)? * h_field(sym, omega, x)? - 1.0).norm())
}

/// Fibre tangent frame `(X_{f₁}, …, X_{f_n})` at `x`; its order fixes an
/// orientation of every fibre.
pub fn hamiltonian_frame(model: &FibrationModel, x: &[f64]) -> Result<Frame> {
    let d = model.fibration.jacobian_lenient(x)?;
    let s: SymplecticStructure = model.chart.symplectic();
    let vectors = (0..model.base_dim)
        .map(|i| {
            s.hamiltonian_vector(&d.row(i).transpose())
                .as_slice()
                .to_vec()
        })
        .collect();
    Frame::new(model.point(x.to_vec())?, vectors, 1e-10)
}

/// Tangent frame `(∂σ/∂b₁, …)` of a section at `b`, by central differences.
pub fn section_frame(model: &FibrationModel, sigma: &Section, b: &[f64]) -> Result<Frame> {
    let x = sigma.eval(b)?;
    let h = 1e-6;
    let mut vectors = Vec::with_capacity(b.len());
    for i in 0..b.len() {
        let mut p = b.to_vec();
        let mut m = b.to_vec();
        p[i] += h;
        m[i] -= h;
        let (xp, xm) = (sigma.eval(&p)?, sigma.eval(&m)?);
        vectors.push(
            xp.iter()
                .zip(&xm)
                .map(|(a, c)| (a - c) / (2.0 * h))
                .collect(),
        );
    }
    Frame::new(model.point(x)?, vectors, 1e-10)
}

/// Outcome of [`grading_census`]. Deviations are distances modulo 1
/// (or 2 for the shift check).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradingCensus {
    pub model: String,
    pub volume: VolumeKind,
    /// `max dist(θ_σ, ℤ)` over sampled section points.
    pub section_deviation: f64,
    pub section_samples: usize,
    /// `max dist(θ_y, n/2 + ℤ)` over sampled fixed points on fibres.
    pub fixed_fiber_deviation: f64,
    pub fixed_samples: usize,
    /// `max dist(θ(φx), n + arg h(x)/π − θ(x))` mod 2 over fibre frames.
    pub shift_deviation: f64,
    pub shift_samples: usize,
    /// Largest spread of θ along single fibres; nonzero means the fibres
    /// are not special Lagrangian for Ω. Skipped for flow-built models.
    pub fiber_spread: Option<f64>,
}

/// Samples section points, fixed points of the involution and generic fibre
/// points of a conjugation-type model and reports the phase arithmetic.
pub fn grading_census(
    model: &FibrationModel,
    omega: &HolomorphicVolume,
    samples: usize,
    seed: u64,
) -> Result<GradingCensus> {
    require_complex(model.chart)?;
    let sym = model.involution_symmetry();
    let n = model.base_dim as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = model.base_region.clone();
    let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        base.iter()
            .map(|&(lo, hi)| rng.random_range(lo..hi))
            .collect()
    };

    let mut section_deviation = 0f64;
    let mut section_samples = 0;
    let mut fixed_fiber_deviation = 0f64;
    let mut fixed_samples = 0;
    for sigma in &model.sections {
        for _ in 0..samples {
            let b = draw(&mut rng);
            if !sigma.in_domain(&b) {
                continue;
            }
            let Ok(fr) = section_frame(model, sigma, &b) else {
                continue;
            };
            let Ok(g) = phase_of_plane(omega, &fr) else {
                continue;
            };
            section_deviation = section_deviation.max(phase_distance(g.theta, 0.0, 1.0));
            section_samples += 1;
            // σ(b) is fixed by the involution, so the fibre frame there is a
            // fixed-point fibre frame
            let x = &fr.base.coords;
            if sym
                .map
                .eval(x)
                .map(|y| y.iter().zip(x).all(|(a, c)| (a - c).abs() < 1e-12))
                .unwrap_or(false)
            {
                if let Ok(g) = hamiltonian_frame(model, x).and_then(|f| phase_of_plane(omega, &f)) {
                    fixed_fiber_deviation =
                        fixed_fiber_deviation.max(phase_distance(g.theta, n / 2.0, 1.0));
                    fixed_samples += 1;
                }
            }
        }
    }

    let mut shift_deviation = 0f64;
    let mut shift_samples = 0;
    let mut fiber_spread = (!model.flow_built).then_some(0f64);
    let mut tries = 0;
    while shift_samples < samples && tries < 50 * samples.max(1) {
        tries += 1;
        let x: Vec<f64> = model
            .region
            .iter()
            .map(|&(lo, hi)| rng.random_range(lo..hi))
            .collect();
        if !model.in_domain(&x) {
            continue;
        }
        let Ok(y) = sym.map.eval(&x) else { continue };
        let (Ok(fx), Ok(fy)) = (hamiltonian_frame(model, &x), hamiltonian_frame(model, &y)) else {
            continue;
        };
        let (Ok(gx), Ok(gy)) = (phase_of_plane(omega, &fx), phase_of_plane(omega, &fy)) else {
            continue;
        };
        // Dφ X_{f_i} = −X_{f_i} since φ is anti-symplectic and preserves f
        let Ok(h) = h_field(sym, omega, &x) else {
            continue;
        };
        let expected = n + h.arg() / std::f64::consts::PI - gx.theta;
        shift_deviation = shift_deviation.max(phase_distance(gy.theta, expected, 2.0));
        shift_samples += 1;
        // spread along the fibre through x, sampled by short fibre walks
        if let Some(spread) = fiber_spread.as_mut().filter(|_| shift_samples <= 8) {
            let p = model.point(x.clone())?;
            for k in 0..4 {
                let xi: Vec<f64> = (0..model.base_dim)
                    .map(|i| 0.3 * ((k + i) as f64 + 1.0))
                    .collect();
                let Ok(q) =
                    crate::geom::flow::fiber_walk(&model.fibration, &p, &xi, 1.0, 300, 1e-8)
                else {
                    continue;
                };
                if let Ok(g) =
                    hamiltonian_frame(model, &q.coords).and_then(|f| phase_of_plane(omega, &f))
                {
                    *spread = spread.max(phase_distance(g.theta, gx.theta, 2.0));
                }
            }
        }
    }
    Ok(GradingCensus {
        model: model.name.clone(),
        volume: omega.kind,
        section_deviation,
        section_samples,
        fixed_fiber_deviation,
        fixed_samples,
        shift_deviation,
        shift_samples,
        fiber_spread,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_and_imaginary_planes() {
        let re = rotated_real_plane(3, &[]).unwrap();
        assert!((re.psi - 1.0).abs() < 1e-15 && re.theta.abs() < 1e-15);
        let im = rotated_real_plane(3, &[0.5, 0.5, 0.5]).unwrap();
        assert!(phase_distance(im.theta, 1.5, 2.0) < 1e-12);
        let q = rotated_real_plane(2, &[0.25]).unwrap();
        assert!((q.theta - 0.25).abs() < 1e-12);
    }

    #[test]
    fn index_of_real_against_imaginary() {
        for n in 1..=3 {
            let re = rotated_real_plane(n, &[]).unwrap();
            let im = rotated_real_plane(n, &vec![0.5; n]).unwrap();
            assert!(intersection_index(&re, &im).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn quarter_rotation_shifts_phase() {
        let a = rotated_real_plane(3, &[0.25, 0.0, 0.5]).unwrap();
        assert!((a.theta - 0.75).abs() < 1e-12);
    }

    #[test]
    fn single_eigenphase_and_duality() {
        let a = rotated_real_plane(1, &[]).unwrap();
        let mut b = rotated_real_plane(1, &[1.0 / 3.0]).unwrap();
        b.theta = a.theta;
        let d = intersection_index(&a, &b).unwrap();
        assert!((d - 1.0 / 3.0).abs() < 1e-12);
        let e = intersection_index(&b, &a).unwrap();
        assert!((d + e - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_transverse_is_rejected() {
        let a = rotated_real_plane(2, &[]).unwrap();
        let b = rotated_real_plane(2, &[1.0 / 3.0]).unwrap();
        assert!(matches!(
            intersection_index(&a, &b),
            Err(GeomError::NonTransverse { .. })
        ));
    }
}
