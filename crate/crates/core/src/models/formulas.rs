//! Fibration formulas written once over [`Scalar`] so that they can be
//! differentiated in forward mode.

use std::f64::consts::SQRT_2;

use crate::dual::{cz, Cx, Scalar};
use crate::geom::map::GenericEval;

/// `q = z₁ z̄₂` as `(Re q, Im q)`.
pub struct FocusFocusQ;

impl GenericEval for FocusFocusQ {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let q = cz(x, 0) * cz(x, 1).conj();
        vec![q.re, q.im]
    }
}

/// `((|z₁|² − |z₂|²)/2, log|1 + z₁z₂|)`.
pub struct Nodal;

impl GenericEval for Nodal {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let (z1, z2) = (cz(x, 0), cz(x, 1));
        let w = (z1 * z2).add_f(1.0, 0.0);
        vec![
            (z1.norm_sqr() - z2.norm_sqr()) * 0.5,
            w.norm_sqr().ln() * 0.5,
        ]
    }
}

/// Nodal model times a cylinder with `z₃ = r + iθ`: `(μ, log|1 + z₁z₂|, r)`.
pub struct GenericSingular;

impl GenericEval for GenericSingular {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let mut v = Nodal.eval(&x[..4]);
        v.push(x[4]);
        v
    }
}

/// `(log|1 + z₁z₂z₃|, |z₁|² − |z₂|², |z₁|² − |z₃|²)`.
pub struct PositiveProper;

impl GenericEval for PositiveProper {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let (z1, z2, z3) = (cz(x, 0), cz(x, 1), cz(x, 2));
        let w = (z1 * z2 * z3).add_f(1.0, 0.0);
        let n1 = z1.norm_sqr();
        vec![
            w.norm_sqr().ln() * 0.5,
            n1 - z2.norm_sqr(),
            n1 - z3.norm_sqr(),
        ]
    }
}

/// `(Im z₁z₂z₃, |z₁|² − |z₂|², |z₁|² − |z₃|²)`.
pub struct HarveyLawson;

impl GenericEval for HarveyLawson {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let (z1, z2, z3) = (cz(x, 0), cz(x, 1), cz(x, 2));
        let n1 = z1.norm_sqr();
        vec![(z1 * z2 * z3).im, n1 - z2.norm_sqr(), n1 - z3.norm_sqr()]
    }
}

/// `(|z₁|² − |z₂|²)/2`.
pub fn moment<S: Scalar>(x: &[S]) -> S {
    (cz(x, 0).norm_sqr() - cz(x, 1).norm_sqr()) * 0.5
}

/// Branch of `γ`: `z₁z₂/|z₁|` on the plus side, `z₁z₂/|z₂|` on the minus
/// side. The value at `z₁ = z₂ = 0` is 0.
pub fn gamma_branch<S: Scalar>(x: &[S], plus: bool) -> Cx<S> {
    let (z1, z2) = (cz(x, 0), cz(x, 1));
    let den = if plus { z1.norm_sqr() } else { z2.norm_sqr() };
    if den.re() == 0.0 {
        return Cx::cst(0.0, 0.0);
    }
    (z1 * z2).scale(S::one() / den.sqrt())
}

/// `(γ, z₃)` on the chosen branch.
pub fn pi_branch<S: Scalar>(x: &[S], plus: bool) -> (Cx<S>, Cx<S>) {
    (gamma_branch(x, plus), cz(x, 2))
}

/// `Ψ(v) = (v₁ − v₂, v₁ + v₂ − √2)/√2`.
pub fn psi<S: Scalar>(v1: Cx<S>, v2: Cx<S>) -> (Cx<S>, Cx<S>) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    (
        (v1 - v2).scale_f(s),
        (v1 + v2).add_f(-SQRT_2, 0.0).scale_f(s),
    )
}

/// One branch of `(μ, log|γ − z₃|/√2, log|γ + z₃ − √2|/√2)`.
pub struct NegativeAmoebaBranch {
    pub plus: bool,
}

impl GenericEval for NegativeAmoebaBranch {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let (g, z3) = pi_branch(x, self.plus);
        let (w1, w2) = psi(g, z3);
        vec![
            moment(x),
            w1.norm_sqr().ln() * 0.5,
            w2.norm_sqr().ln() * 0.5,
        ]
    }
}

/// `(|z₁|²/2, |z₂|²/2)`.
pub struct Toric;

impl GenericEval for Toric {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        vec![cz(x, 0).norm_sqr() * 0.5, cz(x, 1).norm_sqr() * 0.5]
    }
}

/// Complex conjugation on ℂⁿ.
pub struct Conjugation(pub usize);

impl GenericEval for Conjugation {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        (0..self.0)
            .flat_map(|j| [x[2 * j], -x[2 * j + 1]])
            .collect()
    }
}

/// `(z₁, z₂) ↦ (z̄₂, z̄₁)`.
pub struct SwapConjugate;

impl GenericEval for SwapConjugate {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        vec![x[2], -x[3], x[0], -x[1]]
    }
}

/// `(z₁, z₂, z₃) ↦ (−z̄₁, z̄₂, z̄₃)`.
pub struct HarveyLawsonInvolution;

impl GenericEval for HarveyLawsonInvolution {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        vec![-x[0], x[1], x[2], -x[3], x[4], -x[5]]
    }
}

/// Conjugation of the nodal factor and `θ ↦ −θ` on the cylinder, with the
/// representative `2π·round(θ/π) − θ` so that fixed angles are 0 and π.
pub struct CylinderConjugation;

impl GenericEval for CylinderConjugation {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let shift = reflect_shift(x[5].re());
        vec![x[0], -x[1], x[2], -x[3], x[4], -x[5] + shift]
    }
}

/// `2π·round(θ/π)`.
pub fn reflect_shift(theta: f64) -> f64 {
    2.0 * std::f64::consts::PI * (theta / std::f64::consts::PI).round()
}

/// `(z₁, z₂) ↦ (τ z₁, τ̄⁻¹ z₂)` in the focus-focus chart.
pub struct FocusFocusScaling {
    pub re: f64,
    pub im: f64,
}

impl GenericEval for FocusFocusScaling {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let tau = Cx::<S>::cst(self.re, self.im);
        let n = self.re * self.re + self.im * self.im;
        // τ̄⁻¹ = τ / |τ|²
        let tau_bar_inv = Cx::<S>::cst(self.re / n, self.im / n);
        let a = tau * cz(x, 0);
        let b = tau_bar_inv * cz(x, 1);
        vec![a.re, a.im, b.re, b.im]
    }
}
