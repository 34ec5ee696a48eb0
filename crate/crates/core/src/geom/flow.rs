//! Implicit-midpoint integration of Hamiltonian vector fields.

use nalgebra::{DMatrix, DVector};

use crate::error::{GeomError, Result};
use crate::geom::map::SmoothMap;
use crate::geom::symplectic::{PhasePoint, SymplecticStructure};

/// Default number of integration steps per unit of flow time.
pub const STEPS_PER_UNIT: usize = 1000;
/// Tolerance of the inner solve of each midpoint step.
pub const INNER_TOL: f64 = 1e-12;

const MAX_PICARD: usize = 60;
const MAX_NEWTON: usize = 30;

/// A function whose Hamiltonian flow can be integrated.
pub trait Hamiltonian: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> Result<f64>;
    fn gradient(&self, x: &[f64]) -> Result<DVector<f64>>;
    /// Hessian, if cheaply available. Used by the Newton fallback only.
    fn hessian(&self, _x: &[f64]) -> Option<Result<DMatrix<f64>>> {
        None
    }
    fn in_domain(&self, _x: &[f64]) -> bool {
        true
    }
}

impl Hamiltonian for SmoothMap {
    fn dim(&self) -> usize {
        self.dim_in()
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.eval(x)?[0])
    }
    fn gradient(&self, x: &[f64]) -> Result<DVector<f64>> {
        Ok(self.jacobian_lenient(x)?.row(0).transpose())
    }
    fn hessian(&self, x: &[f64]) -> Option<Result<DMatrix<f64>>> {
        Some(SmoothMap::hessian(self, x))
    }
    fn in_domain(&self, x: &[f64]) -> bool {
        SmoothMap::in_domain(self, x)
    }
}

/// Zero Hamiltonian on ℝ^{dim}.
#[derive(Clone, Copy, Debug)]
pub struct ZeroHamiltonian(pub usize);

impl Hamiltonian for ZeroHamiltonian {
    fn dim(&self) -> usize {
        self.0
    }
    fn value(&self, _x: &[f64]) -> Result<f64> {
        Ok(0.0)
    }
    fn gradient(&self, _x: &[f64]) -> Result<DVector<f64>> {
        Ok(DVector::zeros(self.0))
    }
}

/// Number of steps the default density assigns to flow time `t`.
pub fn default_steps(t: f64) -> usize {
    ((t.abs() * STEPS_PER_UNIT as f64).ceil() as usize).max(1)
}

fn field(
    s: &SymplecticStructure,
    h: &dyn Hamiltonian,
    x: &[f64],
    step: usize,
) -> Result<DVector<f64>> {
    if !h.in_domain(x) {
        return Err(GeomError::DomainExit { step });
    }
    let g = h.gradient(x)?;
    Ok(s.hamiltonian_vector(&g))
}

/// One implicit-midpoint step `y = x + dt·X((x + y)/2)`.
fn midpoint_step(
    s: &SymplecticStructure,
    h: &dyn Hamiltonian,
    x: &DVector<f64>,
    dt: f64,
    step: usize,
) -> Result<DVector<f64>> {
    let mut y = x + field(s, h, x.as_slice(), step)? * dt;
    let mut prev = f64::INFINITY;
    for _ in 0..MAX_PICARD {
        let m = (x + &y) * 0.5;
        let next = x + field(s, h, m.as_slice(), step)? * dt;
        let delta = (&next - &y).amax();
        y = next;
        if delta <= INNER_TOL * y.amax().max(1.0) {
            // one more sweep lands well below the tolerance
            let m = (x + &y) * 0.5;
            return Ok(x + field(s, h, m.as_slice(), step)? * dt);
        }
        if delta > 0.5 * prev {
            break;
        }
        prev = delta;
    }
    newton_step(s, h, x, y, dt, step)
}

fn newton_step(
    s: &SymplecticStructure,
    h: &dyn Hamiltonian,
    x: &DVector<f64>,
    mut y: DVector<f64>,
    dt: f64,
    step: usize,
) -> Result<DVector<f64>> {
    let k = s.hamiltonian_operator();
    let n = x.len();
    for _ in 0..MAX_NEWTON {
        let m = (x + &y) * 0.5;
        let r = &y - x - field(s, h, m.as_slice(), step)? * dt;
        if r.amax() <= INNER_TOL * y.amax().max(1.0) {
            return Ok(y);
        }
        let hess = match h.hessian(m.as_slice()) {
            Some(hs) => hs?,
            None => fd_hessian(h, m.as_slice())?,
        };
        let jac = DMatrix::identity(n, n) - (&k * hess) * (0.5 * dt);
        let delta = jac
            .lu()
            .solve(&r)
            .ok_or(GeomError::NewtonDivergence { step })?;
        y -= delta;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(GeomError::NewtonDivergence { step });
        }
    }
    Err(GeomError::NewtonDivergence { step })
}

fn fd_hessian(h: &dyn Hamiltonian, x: &[f64]) -> Result<DMatrix<f64>> {
    let n = x.len();
    let mut out = DMatrix::zeros(n, n);
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    for j in 0..n {
        let e = 1e-5 * x[j].abs().max(1.0);
        xp[j] = x[j] + e;
        xm[j] = x[j] - e;
        let col = (h.gradient(&xp)? - h.gradient(&xm)?) / (2.0 * e);
        out.set_column(j, &col);
        xp[j] = x[j];
        xm[j] = x[j];
    }
    Ok((&out + out.transpose()) * 0.5)
}

/// Integrates the flow of `h` for time `t` in `steps` implicit-midpoint
/// steps, calling `monitor` after every step.
pub fn integrate_monitored(
    s: &SymplecticStructure,
    h: &dyn Hamiltonian,
    x0: &[f64],
    t: f64,
    steps: usize,
    monitor: &mut dyn FnMut(usize, &[f64]) -> Result<()>,
) -> Result<Vec<f64>> {
    if x0.len() != s.dim() {
        return Err(GeomError::DimensionMismatch {
            expected: s.dim(),
            got: x0.len(),
        });
    }
    if h.dim() != s.dim() {
        return Err(GeomError::DimensionMismatch {
            expected: s.dim(),
            got: h.dim(),
        });
    }
    if !h.in_domain(x0) {
        return Err(GeomError::DomainExit { step: 0 });
    }
    if t == 0.0 {
        return Ok(x0.to_vec());
    }
    let steps = steps.max(1);
    let dt = t / steps as f64;
    let mut x = DVector::from_column_slice(x0);
    for k in 0..steps {
        x = midpoint_step(s, h, &x, dt, k)?;
        if !h.in_domain(x.as_slice()) {
            return Err(GeomError::DomainExit { step: k + 1 });
        }
        monitor(k + 1, x.as_slice())?;
    }
    Ok(x.as_slice().to_vec())
}

/// Fourth-order flow: each of the `steps` steps is the symmetric triple
/// jump of three implicit-midpoint substeps. Symmetric, so it inherits the
/// reversibility of the midpoint rule.
pub fn integrate_order4(
    s: &SymplecticStructure,
    h: &dyn Hamiltonian,
    x0: &[f64],
    t: f64,
    steps: usize,
) -> Result<Vec<f64>> {
    if x0.len() != s.dim() || h.dim() != s.dim() {
        return Err(GeomError::DimensionMismatch {
            expected: s.dim(),
            got: x0.len().min(h.dim()),
        });
    }
    if !h.in_domain(x0) {
        return Err(GeomError::DomainExit { step: 0 });
    }
    if t == 0.0 {
        return Ok(x0.to_vec());
    }
    let cbrt2 = 2f64.cbrt();
    let g1 = 1.0 / (2.0 - cbrt2);
    let g2 = -cbrt2 / (2.0 - cbrt2);
    let steps = steps.max(1);
    let dt = t / steps as f64;
    let mut x = DVector::from_column_slice(x0);
    for k in 0..steps {
        for g in [g1, g2, g1] {
            x = midpoint_step(s, h, &x, g * dt, k)?;
        }
        if !h.in_domain(x.as_slice()) {
            return Err(GeomError::DomainExit { step: k + 1 });
        }
    }
    Ok(x.as_slice().to_vec())
}

/// Time-`t` flow of `h` on raw coordinates.
pub fn integrate(
    s: &SymplecticStructure,
    h: &dyn Hamiltonian,
    x0: &[f64],
    t: f64,
    steps: usize,
) -> Result<Vec<f64>> {
    integrate_monitored(s, h, x0, t, steps, &mut |_, _| Ok(()))
}

/// Time-`t` flow of `h` starting at `x0`, integrated with `steps`
/// implicit-midpoint steps. The vector field is `X_H = −J⁻¹∇H`.
pub fn hamiltonian_flow(
    h: &dyn Hamiltonian,
    x0: &PhasePoint,
    t: f64,
    steps: usize,
) -> Result<PhasePoint> {
    let s = x0.chart.symplectic();
    let coords = integrate(&s, h, &x0.coords, t, steps)?;
    PhasePoint::new(x0.chart, coords)
}

/// Flows `x0` along the fibre of `f` by the Hamiltonian `Σ direction_i f_i`.
/// The smallest singular value of `Df` is monitored along the way and the
/// walk fails if it drops below `rank_tol`.
pub fn fiber_walk(
    f: &SmoothMap,
    x0: &PhasePoint,
    direction: &[f64],
    t: f64,
    steps: usize,
    rank_tol: f64,
) -> Result<PhasePoint> {
    if direction.len() != f.dim_out() {
        return Err(GeomError::DimensionMismatch {
            expected: f.dim_out(),
            got: direction.len(),
        });
    }
    if direction.iter().all(|d| *d == 0.0) || t == 0.0 {
        return Ok(x0.clone());
    }
    let s = x0.chart.symplectic();
    let h = f.linear_functional(direction);
    let every = (steps / 16).max(1);
    let mut monitor = |k: usize, x: &[f64]| -> Result<()> {
        if k.is_multiple_of(every) {
            let sigma = crate::geom::fiber::smallest_singular_value(&f.jacobian_lenient(x)?);
            if sigma < rank_tol {
                return Err(GeomError::RankDeficient {
                    sigma_min: sigma,
                    tol: rank_tol,
                });
            }
        }
        Ok(())
    };
    let coords = integrate_monitored(&s, &h, &x0.coords, t, steps, &mut monitor)?;
    PhasePoint::new(x0.chart, coords)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual::{cz, Scalar};
    use crate::geom::map::GenericEval;
    use crate::geom::symplectic::ChartId;

    struct Harmonic;
    impl GenericEval for Harmonic {
        fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
            vec![cz(x, 0).norm_sqr() * 0.5]
        }
    }

    #[test]
    fn zero_hamiltonian_returns_start() {
        let p = PhasePoint::new(ChartId::Standard(1), vec![0.3, -0.7]).unwrap();
        let q = hamiltonian_flow(&ZeroHamiltonian(2), &p, 1.0, 100).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn harmonic_oscillator_rotates_clockwise() {
        // X_H = −J⁻¹∇H with H = |z|²/2 gives ż = −i z
        let h = SmoothMap::from_generic("harmonic", 2, 1, Harmonic);
        let p = PhasePoint::new(ChartId::Standard(1), vec![1.0, 0.0]).unwrap();
        let t = std::f64::consts::FRAC_PI_2;
        let q = hamiltonian_flow(&h, &p, t, default_steps(t)).unwrap();
        assert!((q.coords[0]).abs() < 1e-6);
        assert!((q.coords[1] + 1.0).abs() < 1e-6);
        assert!((h.value(&q.coords).unwrap() - 0.5).abs() < 1e-13);
    }

    #[test]
    fn order4_beats_midpoint() {
        let h = SmoothMap::from_generic("harmonic", 2, 1, Harmonic);
        let s = SymplecticStructure::standard(1);
        let a = integrate(&s, &h, &[1.0, 0.0], 1.0, 50).unwrap();
        let b = integrate_order4(&s, &h, &[1.0, 0.0], 1.0, 50).unwrap();
        let exact = [1f64.cos(), -1f64.sin()];
        let err = |v: &[f64]| (v[0] - exact[0]).abs().max((v[1] - exact[1]).abs());
        assert!(err(&b) < 1e-8 && err(&b) < err(&a) / 100.0);
    }

    #[test]
    fn negative_time_inverts() {
        let h = SmoothMap::from_generic("harmonic", 2, 1, Harmonic);
        let p = PhasePoint::new(ChartId::Standard(1), vec![0.4, 0.9]).unwrap();
        let q = hamiltonian_flow(&h, &p, 0.7, 50).unwrap();
        let r = hamiltonian_flow(&h, &q, -0.7, 50).unwrap();
        for (a, b) in p.coords.iter().zip(&r.coords) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
