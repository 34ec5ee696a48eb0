//! Thin-leg symplectomorphisms `Φ = Ψ ∘ Φ_H` built from the time-one flow of
//! a cut-off rotation Hamiltonian.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, SQRT_2};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geom::flow::{integrate, Hamiltonian, STEPS_PER_UNIT};
use crate::geom::symplectic::ChartId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThinLegVariant {
    /// Pinches the horizontal leg only.
    OneLeg,
    /// Pinches all three legs.
    ThreeLeg,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThinLegParams {
    pub variant: ThinLegVariant,
    /// Inner radius² of the cut-off.
    pub eps: f64,
    /// Threshold on `|u₂|²` beyond which the far leg is pinched.
    pub m: f64,
    pub steps: usize,
}

impl Default for ThinLegParams {
    fn default() -> Self {
        ThinLegParams {
            variant: ThinLegVariant::OneLeg,
            eps: 0.25,
            m: 16.0,
            steps: STEPS_PER_UNIT,
        }
    }
}

/// Quintic smoothstep `k` with `k = 1` on `[0, ε]` and `k = 0` on `[2ε, ∞)`;
/// returns `(k, k')`.
pub fn cutoff(s: f64, eps: f64) -> (f64, f64) {
    let (v, d) = smoothstep((s - eps) / eps);
    (1.0 - v, -d / eps)
}

/// `6t⁵ − 15t⁴ + 10t³` clamped to `[0, 1]`, with its derivative.
fn smoothstep(t: f64) -> (f64, f64) {
    if t <= 0.0 {
        (0.0, 0.0)
    } else if t >= 1.0 {
        (1.0, 0.0)
    } else {
        let t2 = t * t;
        (
            t2 * t * (10.0 - 15.0 * t + 6.0 * t2),
            30.0 * t2 * (1.0 - t) * (1.0 - t),
        )
    }
}

/// `H₀ = π/4 · Im(u₁ ū₂)` and its gradient in `(x₁, y₁, x₂, y₂)`.
fn h0(x: &[f64]) -> (f64, [f64; 4]) {
    let (x1, y1, x2, y2) = (x[0], x[1], x[2], x[3]);
    (
        FRAC_PI_4 * (y1 * x2 - x1 * y2),
        [
            -FRAC_PI_4 * y2,
            FRAC_PI_4 * x2,
            FRAC_PI_4 * y1,
            -FRAC_PI_4 * x1,
        ],
    )
}

/// The cut-off Hamiltonian `H` whose time-one flow is `Φ_H`.
#[derive(Clone, Copy, Debug)]
pub struct ThinLegHamiltonian {
    pub params: ThinLegParams,
}

/// Second leg centre `p = (0, √2)`.
const P2: f64 = SQRT_2;

impl ThinLegHamiltonian {
    fn terms(&self, x: &[f64]) -> (f64, [f64; 4]) {
        let eps = self.params.eps;
        let mut val = 0.0;
        let mut grad = [0.0; 4];
        // rotation about the origin
        let s: f64 = x.iter().map(|c| c * c).sum();
        if s < 2.0 * eps {
            let (k, dk) = cutoff(s, eps);
            let (h, g) = h0(x);
            val += k * h;
            for i in 0..4 {
                grad[i] += k * g[i] + h * dk * 2.0 * x[i];
            }
        }
        if self.params.variant == ThinLegVariant::ThreeLeg {
            // inverse rotation about p
            let y = [x[0], x[1], x[2] - P2, x[3]];
            let s: f64 = y.iter().map(|c| c * c).sum();
            if s < 2.0 * eps {
                let (k, dk) = cutoff(s, eps);
                let (h, g) = h0(&y);
                val -= k * h;
                for i in 0..4 {
                    grad[i] -= k * g[i] + h * dk * 2.0 * y[i];
                }
            }
            // translation by (1, 1)/√2 on the far leg
            let m = self.params.m;
            let s2 = x[2] * x[2] + x[3] * x[3];
            let (c, dc) = smoothstep((s2 - 0.5 * m) / (0.5 * m));
            if c > 0.0 {
                let l = -(x[1] + x[3]) * FRAC_1_SQRT_2;
                val += c * l;
                let dc = dc / (0.5 * m);
                grad[1] -= c * FRAC_1_SQRT_2;
                grad[3] -= c * FRAC_1_SQRT_2;
                grad[2] += l * dc * 2.0 * x[2];
                grad[3] += l * dc * 2.0 * x[3];
            }
        }
        (val, grad)
    }

    /// Whether `H` vanishes identically near the flow line through `x`, in
    /// which case `Φ_H(x) = x`.
    pub fn is_inert(&self, x: &[f64]) -> bool {
        let eps = self.params.eps;
        let s: f64 = x.iter().map(|c| c * c).sum();
        if s < 2.0 * eps {
            return false;
        }
        if self.params.variant == ThinLegVariant::ThreeLeg {
            let sp = x[0] * x[0] + x[1] * x[1] + (x[2] - P2).powi(2) + x[3] * x[3];
            let s2 = x[2] * x[2] + x[3] * x[3];
            if sp < 2.0 * eps || s2 > 0.5 * self.params.m {
                return false;
            }
        }
        true
    }
}

impl Hamiltonian for ThinLegHamiltonian {
    fn dim(&self) -> usize {
        4
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.terms(x).0)
    }
    fn gradient(&self, x: &[f64]) -> Result<DVector<f64>> {
        Ok(DVector::from_column_slice(&self.terms(x).1))
    }
}

fn to_real(u: [Complex64; 2]) -> [f64; 4] {
    [u[0].re, u[0].im, u[1].re, u[1].im]
}

/// `Φ_H`: time-one flow of the cut-off Hamiltonian on `(ℂ², −ω_std)`.
pub fn phi_h(u: [Complex64; 2], params: &ThinLegParams) -> Result<[Complex64; 2]> {
    let x = to_real(u);
    let h = ThinLegHamiltonian { params: *params };
    if h.is_inert(&x) {
        return Ok(u);
    }
    let s = ChartId::ThinLegU.symplectic();
    let y = integrate(&s, &h, &x, 1.0, params.steps)?;
    Ok([Complex64::new(y[0], y[1]), Complex64::new(y[2], y[3])])
}

/// `Φ_H⁻¹`: time-minus-one flow.
pub fn phi_h_inverse(u: [Complex64; 2], params: &ThinLegParams) -> Result<[Complex64; 2]> {
    let x = to_real(u);
    let h = ThinLegHamiltonian { params: *params };
    if h.is_inert(&x) {
        return Ok(u);
    }
    let s = ChartId::ThinLegU.symplectic();
    let y = integrate(&s, &h, &x, -1.0, params.steps)?;
    Ok([Complex64::new(y[0], y[1]), Complex64::new(y[2], y[3])])
}

/// `Ψ(v) = (v₁ − v₂, v₁ + v₂ − √2)/√2`.
pub fn psi(v: [Complex64; 2]) -> [Complex64; 2] {
    [
        (v[0] - v[1]) * FRAC_1_SQRT_2,
        (v[0] + v[1] - SQRT_2) * FRAC_1_SQRT_2,
    ]
}

/// `Ψ⁻¹(w) = ((w₁ + w₂ + 1)/√2, (w₂ − w₁ + 1)/√2)`.
pub fn psi_inverse(w: [Complex64; 2]) -> [Complex64; 2] {
    [
        (w[0] + w[1] + 1.0) * FRAC_1_SQRT_2,
        (w[1] - w[0] + 1.0) * FRAC_1_SQRT_2,
    ]
}

/// `Φ = Ψ ∘ Φ_H`.
pub fn thin_leg_phi(u: [Complex64; 2], params: &ThinLegParams) -> Result<[Complex64; 2]> {
    Ok(psi(phi_h(u, params)?))
}

/// `Φ⁻¹ = Φ_H⁻¹ ∘ Ψ⁻¹`.
pub fn thin_leg_phi_inverse(w: [Complex64; 2], params: &ThinLegParams) -> Result<[Complex64; 2]> {
    phi_h_inverse(psi_inverse(w), params)
}

/// Exact `Φ_H` for the one-leg Hamiltonian. Along a flow line `s = |u|²`
/// and `h = H₀(u)` are conserved, so the flow is the exponential of the
/// constant matrix `k(s) A₀ + h k'(s) A_s`.
pub fn phi_h_one_leg_exact(u: [Complex64; 2], eps: f64) -> [Complex64; 2] {
    let x = to_real(u);
    let s: f64 = x.iter().map(|c| c * c).sum();
    let (k, dk) = cutoff(s, eps);
    let (h, _) = h0(&x);
    let j = ChartId::ThinLegU.symplectic().hamiltonian_operator();
    let hess0 = DMatrix::from_row_slice(
        4,
        4,
        &[
            0.0, 0.0, 0.0, -FRAC_PI_4, //
            0.0, 0.0, FRAC_PI_4, 0.0, //
            0.0, FRAC_PI_4, 0.0, 0.0, //
            -FRAC_PI_4, 0.0, 0.0, 0.0,
        ],
    );
    let hess_s = DMatrix::<f64>::identity(4, 4) * 2.0;
    let a = &j * (hess0 * k + hess_s * (h * dk));
    let y = a.exp() * DVector::from_column_slice(&x);
    [Complex64::new(y[0], y[1]), Complex64::new(y[2], y[3])]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: [Complex64; 2], b: [Complex64; 2], tol: f64) -> bool {
        (a[0] - b[0]).norm() <= tol && (a[1] - b[1]).norm() <= tol
    }

    #[test]
    fn cutoff_limits() {
        assert_eq!(cutoff(0.1, 0.25), (1.0, 0.0));
        assert_eq!(cutoff(0.6, 0.25), (0.0, 0.0));
        let (k, _) = cutoff(0.375, 0.25);
        assert!((k - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_differences() {
        for variant in [ThinLegVariant::OneLeg, ThinLegVariant::ThreeLeg] {
            let h = ThinLegHamiltonian {
                params: ThinLegParams {
                    variant,
                    m: 4.0,
                    ..Default::default()
                },
            };
            for x in [
                [0.3, -0.2, 0.25, 0.1],
                [0.1, 0.2, 1.2, 0.3],
                [0.5, -0.1, 1.6, 0.6],
            ] {
                let g = h.gradient(&x).unwrap();
                for i in 0..4 {
                    let mut xp = x;
                    let mut xm = x;
                    xp[i] += 1e-6;
                    xm[i] -= 1e-6;
                    let fd = (h.value(&xp).unwrap() - h.value(&xm).unwrap()) / 2e-6;
                    assert!((fd - g[i]).abs() < 1e-7, "{variant:?} {x:?} {i}");
                }
            }
        }
    }

    #[test]
    fn inner_region_is_rotation_and_phi_matches_leg_formula() {
        let p = ThinLegParams::default();
        let u = [Complex64::new(0.1, 0.0), Complex64::new(0.0, 0.0)];
        let phi = thin_leg_phi(u, &p).unwrap();
        assert!(close(
            phi,
            [Complex64::new(0.0, 0.0), Complex64::new(-0.9, 0.0)],
            1e-6
        ));
    }

    #[test]
    fn numeric_flow_matches_exact_exponential() {
        let p = ThinLegParams::default();
        for u in [
            [Complex64::new(0.3, 0.1), Complex64::new(-0.2, 0.25)],
            [Complex64::new(0.4, -0.3), Complex64::new(0.1, 0.2)],
        ] {
            let a = phi_h(u, &p).unwrap();
            let b = phi_h_one_leg_exact(u, p.eps);
            assert!(close(a, b, 1e-6), "{a:?} {b:?}");
        }
    }

    #[test]
    fn inverse_round_trip() {
        let p = ThinLegParams::default();
        let u = [Complex64::new(0.3, 0.1), Complex64::new(-0.2, 0.25)];
        let back = thin_leg_phi_inverse(thin_leg_phi(u, &p).unwrap(), &p).unwrap();
        assert!(close(back, u, 1e-10));
    }
}
