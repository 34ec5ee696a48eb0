//! Forward-mode dual numbers and the scalar interface model evaluators are
//! written against.
//!
//! Evaluators implement [`crate::geom::GenericEval`] once, generically over
//! [`Scalar`]; the kernel instantiates them at `f64`, [`Dual1`] (first
//! derivatives) and [`Dual2`] (second derivatives, via nesting).

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Real scalar arithmetic needed by the catalog maps.
pub trait Scalar:
    Copy
    + Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn cst(v: f64) -> Self;
    /// Primal value.
    fn re(&self) -> f64;
    fn sqrt(self) -> Self;
    fn ln(self) -> Self;
    fn exp(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn atan2(self, x: Self) -> Self;

    fn zero() -> Self {
        Self::cst(0.0)
    }
    fn one() -> Self {
        Self::cst(1.0)
    }
    fn abs(self) -> Self {
        if self.re() < 0.0 {
            -self
        } else {
            self
        }
    }
    fn powi(self, k: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..k {
            acc = acc * self;
        }
        acc
    }
}

impl Scalar for f64 {
    fn cst(v: f64) -> Self {
        v
    }
    fn re(&self) -> f64 {
        *self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn atan2(self, x: Self) -> Self {
        f64::atan2(self, x)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
}

/// Dual number `v + d·ε` with `ε² = 0`, generic over its component type so
/// that `Dual<Dual<f64>>` carries mixed second derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<T> {
    pub v: T,
    pub d: T,
}

pub type Dual1 = Dual<f64>;
pub type Dual2 = Dual<Dual<f64>>;

impl<T: Scalar> Dual<T> {
    pub fn new(v: T, d: T) -> Self {
        Dual { v, d }
    }
    pub fn constant(v: T) -> Self {
        Dual { v, d: T::zero() }
    }
    pub fn variable(v: T) -> Self {
        Dual { v, d: T::one() }
    }
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Dual::new(self.v + o.v, self.d + o.d)
    }
}
impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Dual::new(self.v - o.v, self.d - o.d)
    }
}
impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Dual::new(self.v * o.v, self.d * o.v + self.v * o.d)
    }
}
impl<T: Scalar> Div for Dual<T> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let q = self.v / o.v;
        Dual::new(q, (self.d - q * o.d) / o.v)
    }
}
impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual::new(-self.v, -self.d)
    }
}
impl<T: Scalar> Add<f64> for Dual<T> {
    type Output = Self;
    fn add(self, o: f64) -> Self {
        Dual::new(self.v + o, self.d)
    }
}
impl<T: Scalar> Sub<f64> for Dual<T> {
    type Output = Self;
    fn sub(self, o: f64) -> Self {
        Dual::new(self.v - o, self.d)
    }
}
impl<T: Scalar> Mul<f64> for Dual<T> {
    type Output = Self;
    fn mul(self, o: f64) -> Self {
        Dual::new(self.v * o, self.d * o)
    }
}
impl<T: Scalar> Div<f64> for Dual<T> {
    type Output = Self;
    fn div(self, o: f64) -> Self {
        Dual::new(self.v / o, self.d / o)
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    fn cst(v: f64) -> Self {
        Dual::constant(T::cst(v))
    }
    fn re(&self) -> f64 {
        self.v.re()
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        Dual::new(s, self.d / (s * 2.0))
    }
    fn ln(self) -> Self {
        Dual::new(self.v.ln(), self.d / self.v)
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        Dual::new(e, self.d * e)
    }
    fn sin(self) -> Self {
        Dual::new(self.v.sin(), self.d * self.v.cos())
    }
    fn cos(self) -> Self {
        Dual::new(self.v.cos(), -(self.d * self.v.sin()))
    }
    fn atan2(self, x: Self) -> Self {
        let r2 = x.v * x.v + self.v * self.v;
        Dual::new(self.v.atan2(x.v), (x.v * self.d - self.v * x.d) / r2)
    }
}

/// Minimal complex arithmetic over a [`Scalar`], used by evaluators that
/// need to differentiate through complex expressions.
#[derive(Clone, Copy, Debug)]
pub struct Cx<S> {
    pub re: S,
    pub im: S,
}

impl<S: Scalar> Cx<S> {
    pub fn new(re: S, im: S) -> Self {
        Cx { re, im }
    }
    pub fn real(re: S) -> Self {
        Cx { re, im: S::zero() }
    }
    pub fn cst(re: f64, im: f64) -> Self {
        Cx {
            re: S::cst(re),
            im: S::cst(im),
        }
    }
    pub fn conj(self) -> Self {
        Cx::new(self.re, -self.im)
    }
    pub fn norm_sqr(self) -> S {
        self.re * self.re + self.im * self.im
    }
    pub fn abs(self) -> S {
        self.norm_sqr().sqrt()
    }
    pub fn scale(self, s: S) -> Self {
        Cx::new(self.re * s, self.im * s)
    }
    pub fn scale_f(self, s: f64) -> Self {
        Cx::new(self.re * s, self.im * s)
    }
    pub fn add_f(self, re: f64, im: f64) -> Self {
        Cx::new(self.re + re, self.im + im)
    }
    pub fn arg(self) -> S {
        self.im.atan2(self.re)
    }
}

impl<S: Scalar> Add for Cx<S> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Cx::new(self.re + o.re, self.im + o.im)
    }
}
impl<S: Scalar> Sub for Cx<S> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Cx::new(self.re - o.re, self.im - o.im)
    }
}
impl<S: Scalar> Mul for Cx<S> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Cx::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }
}
impl<S: Scalar> Neg for Cx<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Cx::new(-self.re, -self.im)
    }
}

/// Reads complex coordinate `j` from a real vector laid out as
/// `(Re z_1, Im z_1, Re z_2, ...)`.
pub fn cz<S: Scalar>(x: &[S], j: usize) -> Cx<S> {
    Cx::new(x[2 * j], x[2 * j + 1])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f<S: Scalar>(x: S) -> S {
        (x * x + 1.0).ln() * x.sin() + x.exp().sqrt()
    }

    #[test]
    fn first_derivative_matches_hand_formula() {
        let x = 0.7_f64;
        let d = f(Dual1::variable(x)).d;
        let expect = 2.0 * x / (x * x + 1.0) * x.sin()
            + (x * x + 1.0).ln() * x.cos()
            + 0.5 * (x / 2.0).exp();
        assert!((d - expect).abs() < 1e-14);
    }

    #[test]
    fn nested_dual_gives_second_derivative() {
        // d²/dx² of x³ at 2 is 12
        let x = Dual2::new(Dual1::variable(2.0), Dual1::new(1.0, 0.0));
        let y = x * x * x;
        assert!((y.d.d - 12.0).abs() < 1e-12);
        assert!((y.v.v - 8.0).abs() < 1e-12);
    }

    #[test]
    fn atan2_derivative() {
        let y = Dual1::variable(1.0);
        let x = Dual1::constant(2.0);
        let a = y.atan2(x);
        assert!((a.d - 2.0 / 5.0).abs() < 1e-15);
    }
}
