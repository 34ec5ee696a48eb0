//! Closed-form pieces of the focus-focus local model: the ℂ* action, the
//! gluing map to the semiflat chart, the section translation and the
//! reduced map `G_t`.

use num_complex::Complex64;

use crate::error::{GeomError, Result};
use crate::geom::symplectic::{ChartId, PhasePoint};

/// `(z₁, z₂) ↦ (τ z₁, τ̄⁻¹ z₂)`.
pub fn scale(tau: Complex64, z: [Complex64; 2]) -> Result<[Complex64; 2]> {
    if tau == Complex64::new(0.0, 0.0) || !tau.is_finite() {
        return Err(GeomError::Domain {
            what: "C* action (tau = 0)".into(),
        });
    }
    Ok([tau * z[0], z[1] / tau.conj()])
}

/// `q(z₁, z₂) = z₁ z̄₂`.
pub fn q(z: [Complex64; 2]) -> Complex64 {
    z[0] * z[1].conj()
}

/// `Σ₁(b) = (1, b̄)`.
pub fn sigma1(b: Complex64) -> [Complex64; 2] {
    [Complex64::new(1.0, 0.0), b.conj()]
}

/// `Σ₂(b) = (b, 1)`.
pub fn sigma2(b: Complex64) -> [Complex64; 2] {
    [b, Complex64::new(1.0, 0.0)]
}

pub fn to_point(z: [Complex64; 2]) -> PhasePoint {
    PhasePoint {
        coords: vec![z[0].re, z[0].im, z[1].re, z[1].im],
        chart: ChartId::FocusFocus,
    }
}

pub fn from_point(p: &PhasePoint) -> [Complex64; 2] {
    [p.complex(0), p.complex(1)]
}

/// The ℂ* parameter `τ = exp(−a₁ + i a₂)` of a covector `a` relative to a
/// reference section.
pub fn tau_of(alpha: [f64; 2], reference: [f64; 2]) -> Complex64 {
    let a = [alpha[0] - reference[0], alpha[1] - reference[1]];
    Complex64::from_polar((-a[0]).exp(), a[1])
}

/// Which piece `U′_j` of the gluing domain a point is read in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GlueRegion {
    /// `|b| < |τ| < 1`, reference section the graph of `dH`.
    One,
    /// `1 < |τ| < 1/|b|`, reference section zero.
    Two,
}

impl GlueRegion {
    pub fn from_index(j: usize) -> Result<Self> {
        match j {
            1 => Ok(GlueRegion::One),
            2 => Ok(GlueRegion::Two),
            _ => Err(GeomError::Region(format!("no gluing region {j}"))),
        }
    }
}

/// `g|_{U′_j} = φ_j ∘ ψ_j⁻¹`: sends `(b, α) ∈ T*B/Λ` to `τ · Σ_j(b)` where
/// `τ` is read off `α` relative to `L₁ = dH` (region 1) or `L₂ = 0`
/// (region 2). `alpha` is used as given, without lattice reduction.
pub fn glue_map(
    region: GlueRegion,
    b: [f64; 2],
    alpha: [f64; 2],
    dh: [f64; 2],
) -> Result<PhasePoint> {
    let bc = Complex64::new(b[0], b[1]);
    let nb = bc.norm();
    if nb >= 1.0 {
        return Err(GeomError::Region(format!("|b| = {nb} is not < 1")));
    }
    type Section = fn(Complex64) -> [Complex64; 2];
    let (reference, section): ([f64; 2], Section) = match region {
        GlueRegion::One => (dh, sigma1),
        GlueRegion::Two => ([0.0, 0.0], sigma2),
    };
    let tau = tau_of(alpha, reference);
    let nt = tau.norm();
    let ok = match region {
        GlueRegion::One => nb < nt && nt < 1.0,
        GlueRegion::Two => 1.0 < nt && nt * nb < 1.0,
    };
    if !ok {
        return Err(GeomError::Region(format!(
            "|tau| = {nt} outside region {region:?} at |b| = {nb}"
        )));
    }
    Ok(to_point(scale(tau, section(bc))?))
}

/// The ℂ² extension `(τ(b) z₁, τ̄(b)⁻¹ z₂)` of the fibrewise translation by
/// `σ′ = s₁ db₁ + s₂ db₂`, where `τ = e^{−s₁ + i s₂}` and `b = q(z)`.
pub fn section_translation_extension<F>(sigma_prime: F, z: [Complex64; 2]) -> Result<[Complex64; 2]>
where
    F: Fn([f64; 2]) -> [f64; 2],
{
    let b = q(z);
    let s = sigma_prime([b.re, b.im]);
    scale(Complex64::from_polar((-s[0]).exp(), s[1]), z)
}

/// `G_t(u₁, u₂) = (log|u₂|, log|u₁ / √(|t| + √(t² + |u₁|²)) − 1|)`.
pub fn reduced_gt(t: f64, u1: Complex64, u2: Complex64) -> Result<[f64; 2]> {
    let n2 = u2.norm();
    if n2 == 0.0 {
        return Err(GeomError::LogOfZero("G_t first component (u2 = 0)".into()));
    }
    let rho = (t.abs() + (t * t + u1.norm_sqr()).sqrt()).sqrt();
    if rho == 0.0 {
        return Err(GeomError::LogOfZero("G_t (t = u1 = 0)".into()));
    }
    let w = (u1 / rho - 1.0).norm();
    if w == 0.0 {
        return Err(GeomError::LogOfZero("G_t second component".into()));
    }
    Ok([n2.ln(), w.ln()])
}

/// One-sided `t`-derivatives of `G_t` at `t`, from the right and from the
/// left, by first-order differences of step `h`.
pub fn reduced_gt_one_sided(
    t: f64,
    u1: Complex64,
    u2: Complex64,
    h: f64,
) -> Result<([f64; 2], [f64; 2])> {
    let c = reduced_gt(t, u1, u2)?;
    let p = reduced_gt(t + h, u1, u2)?;
    let m = reduced_gt(t - h, u1, u2)?;
    Ok((
        [(p[0] - c[0]) / h, (p[1] - c[1]) / h],
        [(c[0] - m[0]) / h, (c[1] - m[1]) / h],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn scaling_preserves_q() {
        let z = [c(1.0, 0.0), c(1.0, 0.0)];
        let w = scale(c(2.0, 0.0), z).unwrap();
        assert_eq!(w, [c(2.0, 0.0), c(0.5, 0.0)]);
        assert_eq!(q(w), q(z));
        assert!(scale(c(0.0, 0.0), z).is_err());
    }

    #[test]
    fn glue_region_one_example() {
        let dh = [0.0, 0.0];
        let alpha = [-(0.5f64.ln()), 0.0];
        let p = glue_map(GlueRegion::One, [0.1, 0.0], alpha, dh).unwrap();
        let z = from_point(&p);
        assert!((z[0] - c(0.5, 0.0)).norm() < 1e-15);
        assert!((q(z) - c(0.1, 0.0)).norm() < 1e-15);
        // |τ| = 1 sits on the boundary
        assert!(glue_map(GlueRegion::One, [0.1, 0.0], [0.0, 0.3], dh).is_err());
    }

    #[test]
    fn gt_examples() {
        let g = reduced_gt(0.0, c(4.0, 0.0), c(1.0, 0.0)).unwrap();
        assert_eq!(g, [0.0, 0.0]);
        let a = reduced_gt(0.3, c(0.4, 0.7), c(1.5, -0.2)).unwrap();
        let b = reduced_gt(0.3, c(0.4, -0.7), c(1.5, 0.2)).unwrap();
        assert!((a[0] - b[0]).abs() < 1e-15 && (a[1] - b[1]).abs() < 1e-15);
        assert!(reduced_gt(0.0, c(1.0, 0.0), c(1.0, 0.0)).is_err());
        let (right, left) = reduced_gt_one_sided(0.0, c(2.0, 0.0), c(1.0, 0.0), 1e-7).unwrap();
        assert!((right[1] - left[1]).abs() > 0.1);
    }
}
