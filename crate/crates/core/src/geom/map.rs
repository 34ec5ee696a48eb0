use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::dual::{Dual, Dual1, Dual2, Scalar};
use crate::error::{GeomError, Result};
use crate::geom::symplectic::SymplecticStructure;

/// A map written once against the [`Scalar`] interface.
pub trait GenericEval: Send + Sync + 'static {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S>;
}

type Eval<S> = Arc<dyn Fn(&[S]) -> Vec<S> + Send + Sync>;
type Pred = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;
type SeamFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Cube root of machine epsilon, the central-difference step scale.
pub const FD_STEP: f64 = 6.055454452393343e-6;
/// Points with `|μ|` below this are treated as lying on a seam.
pub const SEAM_TOL: f64 = 1e-14;

#[derive(Clone)]
struct Evaluators {
    plain: Eval<f64>,
    dual: Option<Eval<Dual1>>,
    dual2: Option<Eval<Dual2>>,
}

impl Evaluators {
    fn generic<G: GenericEval>(g: Arc<G>) -> Self {
        let g1 = g.clone();
        let g2 = g.clone();
        Evaluators {
            plain: Arc::new(move |x: &[f64]| g.eval(x)),
            dual: Some(Arc::new(move |x: &[Dual1]| g1.eval(x))),
            dual2: Some(Arc::new(move |x: &[Dual2]| g2.eval(x))),
        }
    }

    fn plain<F>(f: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Evaluators {
            plain: Arc::new(f),
            dual: None,
            dual2: None,
        }
    }

    fn post<P: Post>(&self, p: Arc<P>) -> Self {
        let inner = self.plain.clone();
        let p0 = p.clone();
        let plain: Eval<f64> = Arc::new(move |x: &[f64]| p0.apply(&inner(x)));
        let dual = self.dual.as_ref().map(|d| {
            let d = d.clone();
            let p1 = p.clone();
            Arc::new(move |x: &[Dual1]| p1.apply(&d(x))) as Eval<Dual1>
        });
        let dual2 = self.dual2.as_ref().map(|d| {
            let d = d.clone();
            let p2 = p.clone();
            Arc::new(move |x: &[Dual2]| p2.apply(&d(x))) as Eval<Dual2>
        });
        Evaluators { plain, dual, dual2 }
    }
}

/// Post-composition applied to the output of a map, generic in the scalar.
trait Post: Send + Sync + 'static {
    fn apply<S: Scalar>(&self, y: &[S]) -> Vec<S>;
}

/// `y ↦ ⟨c, y⟩ + ½ (y − b)ᵀ Q (y − b)`.
struct Functional {
    lin: Vec<f64>,
    quad: Option<(Vec<f64>, DMatrix<f64>)>,
}

impl Post for Functional {
    fn apply<S: Scalar>(&self, y: &[S]) -> Vec<S> {
        let mut acc = S::zero();
        for (c, yi) in self.lin.iter().zip(y) {
            if *c != 0.0 {
                acc = acc + *yi * *c;
            }
        }
        if let Some((center, q)) = &self.quad {
            let d: Vec<S> = y.iter().zip(center).map(|(yi, ci)| *yi - *ci).collect();
            for i in 0..d.len() {
                for k in 0..d.len() {
                    if q[(i, k)] != 0.0 {
                        acc = acc + d[i] * d[k] * (0.5 * q[(i, k)]);
                    }
                }
            }
        }
        vec![acc]
    }
}

#[derive(Clone)]
enum Kernel {
    Smooth(Evaluators),
    /// Branch chosen by the sign of `seam`: `plus` where `seam ≥ 0`.
    Piecewise {
        seam: SeamFn,
        plus: Evaluators,
        minus: Evaluators,
    },
}

/// Side of a seam `μ = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

/// Evaluable map `ℝ^{dim_in} → ℝ^{dim_out}` with a domain predicate.
///
/// Evaluation outside the domain is an error; evaluators never hand back
/// non-finite values. Maps built from a [`GenericEval`] are differentiated
/// in forward mode, all others by central differences.
#[derive(Clone)]
pub struct SmoothMap {
    name: String,
    dim_in: usize,
    dim_out: usize,
    domain: Pred,
    kernel: Kernel,
}

impl fmt::Debug for SmoothMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothMap")
            .field("name", &self.name)
            .field("dim_in", &self.dim_in)
            .field("dim_out", &self.dim_out)
            .field("piecewise", &self.is_piecewise())
            .field("dual", &self.has_dual())
            .finish()
    }
}

impl SmoothMap {
    pub fn from_generic<G: GenericEval>(name: &str, dim_in: usize, dim_out: usize, g: G) -> Self {
        SmoothMap {
            name: name.to_string(),
            dim_in,
            dim_out,
            domain: Arc::new(|_| true),
            kernel: Kernel::Smooth(Evaluators::generic(Arc::new(g))),
        }
    }

    pub fn from_fn<F>(name: &str, dim_in: usize, dim_out: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        SmoothMap {
            name: name.to_string(),
            dim_in,
            dim_out,
            domain: Arc::new(|_| true),
            kernel: Kernel::Smooth(Evaluators::plain(f)),
        }
    }

    /// Piecewise map whose branches are restrictions of smooth maps.
    pub fn piecewise_generic<G: GenericEval, K: GenericEval, M>(
        name: &str,
        dim_in: usize,
        dim_out: usize,
        seam: M,
        plus: G,
        minus: K,
    ) -> Self
    where
        M: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        SmoothMap {
            name: name.to_string(),
            dim_in,
            dim_out,
            domain: Arc::new(|_| true),
            kernel: Kernel::Piecewise {
                seam: Arc::new(seam),
                plus: Evaluators::generic(Arc::new(plus)),
                minus: Evaluators::generic(Arc::new(minus)),
            },
        }
    }

    pub fn piecewise_fn<F, G, M>(
        name: &str,
        dim_in: usize,
        dim_out: usize,
        seam: M,
        plus: F,
        minus: G,
    ) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        M: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        SmoothMap {
            name: name.to_string(),
            dim_in,
            dim_out,
            domain: Arc::new(|_| true),
            kernel: Kernel::Piecewise {
                seam: Arc::new(seam),
                plus: Evaluators::plain(plus),
                minus: Evaluators::plain(minus),
            },
        }
    }

    pub fn with_domain<P>(mut self, pred: P) -> Self
    where
        P: Fn(&[f64]) -> bool + Send + Sync + 'static,
    {
        self.domain = Arc::new(pred);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn dim_in(&self) -> usize {
        self.dim_in
    }
    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn is_piecewise(&self) -> bool {
        matches!(self.kernel, Kernel::Piecewise { .. })
    }

    pub fn has_dual(&self) -> bool {
        match &self.kernel {
            Kernel::Smooth(e) => e.dual.is_some(),
            Kernel::Piecewise { plus, minus, .. } => plus.dual.is_some() && minus.dual.is_some(),
        }
    }

    pub fn in_domain(&self, x: &[f64]) -> bool {
        x.len() == self.dim_in && x.iter().all(|c| c.is_finite()) && (self.domain)(x)
    }

    /// Value of the seam function, for piecewise maps.
    pub fn seam_value(&self, x: &[f64]) -> Option<f64> {
        match &self.kernel {
            Kernel::Smooth(_) => None,
            Kernel::Piecewise { seam, .. } => Some(seam(x)),
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim_in {
            return Err(GeomError::DimensionMismatch {
                expected: self.dim_in,
                got: x.len(),
            });
        }
        if !self.in_domain(x) {
            return Err(GeomError::Domain {
                what: self.name.clone(),
            });
        }
        Ok(())
    }

    fn active(&self, x: &[f64]) -> &Evaluators {
        match &self.kernel {
            Kernel::Smooth(e) => e,
            Kernel::Piecewise { seam, plus, minus } => {
                if seam(x) >= 0.0 {
                    plus
                } else {
                    minus
                }
            }
        }
    }

    fn branch(&self, side: Side) -> &Evaluators {
        match (&self.kernel, side) {
            (Kernel::Smooth(e), _) => e,
            (Kernel::Piecewise { plus, .. }, Side::Plus) => plus,
            (Kernel::Piecewise { minus, .. }, Side::Minus) => minus,
        }
    }

    fn finish(&self, y: Vec<f64>) -> Result<Vec<f64>> {
        if y.iter().any(|v| !v.is_finite()) {
            return Err(GeomError::NonFinite {
                what: self.name.clone(),
            });
        }
        Ok(y)
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let y = (self.active(x).plain)(x);
        self.finish(y)
    }

    /// Evaluates the smooth extension of one branch of a piecewise map.
    pub fn eval_branch(&self, x: &[f64], side: Side) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let y = (self.branch(side).plain)(x);
        self.finish(y)
    }

    /// Jacobian (`dim_out × dim_in`). Forward mode when available, central
    /// differences otherwise. Fails on seam points of piecewise maps.
    pub fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_input(x)?;
        if let Some(mu) = self.seam_value(x) {
            if mu.abs() < SEAM_TOL {
                return Err(GeomError::SeamPoint { mu });
            }
        }
        let e = self.active(x);
        match &e.dual {
            Some(d) => self.forward_jacobian(d, x),
            None => self.central_jacobian(x, 1.0),
        }
    }

    /// Jacobian of the smooth extension of the branch on `side`.
    pub fn jacobian_one_sided(&self, x: &[f64], side: Side) -> Result<DMatrix<f64>> {
        self.check_input(x)?;
        let e = self.branch(side);
        match &e.dual {
            Some(d) => self.forward_jacobian(d, x),
            None => {
                let plain = e.plain.clone();
                self.fd_with(x, 1.0, &*plain, false)
            }
        }
    }

    /// Jacobian that falls back to the one-sided variant on the side the
    /// point lies on when the plain Jacobian trips over a seam.
    pub fn jacobian_lenient(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        match self.jacobian(x) {
            Err(GeomError::SeamPoint { .. }) | Err(GeomError::SeamStraddle { .. }) => {
                let side = if self.seam_value(x).unwrap_or(0.0) >= 0.0 {
                    Side::Plus
                } else {
                    Side::Minus
                };
                self.jacobian_one_sided(x, side)
            }
            other => other,
        }
    }

    fn forward_jacobian(&self, d: &Eval<Dual1>, x: &[f64]) -> Result<DMatrix<f64>> {
        let mut jac = DMatrix::zeros(self.dim_out, self.dim_in);
        let mut seed: Vec<Dual1> = x.iter().map(|&v| Dual::constant(v)).collect();
        for j in 0..self.dim_in {
            seed[j].d = 1.0;
            let y = d(&seed);
            seed[j].d = 0.0;
            for (i, yi) in y.iter().enumerate() {
                if !yi.d.is_finite() || !yi.v.is_finite() {
                    return Err(GeomError::NonFinite {
                        what: format!("{} (derivative)", self.name),
                    });
                }
                jac[(i, j)] = yi.d;
            }
        }
        Ok(jac)
    }

    /// Central differences with step `scale · ε^{1/3} · max(1, |x_j|)`.
    pub fn central_jacobian(&self, x: &[f64], scale: f64) -> Result<DMatrix<f64>> {
        self.check_input(x)?;
        let plain = self.active(x).plain.clone();
        self.fd_with(x, scale, &*plain, true)
    }

    fn fd_with(
        &self,
        x: &[f64],
        scale: f64,
        f: &(dyn Fn(&[f64]) -> Vec<f64> + Send + Sync),
        guard_seam: bool,
    ) -> Result<DMatrix<f64>> {
        let mut jac = DMatrix::zeros(self.dim_out, self.dim_in);
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        for j in 0..self.dim_in {
            let h = scale * FD_STEP * x[j].abs().max(1.0);
            xp[j] = x[j] + h;
            xm[j] = x[j] - h;
            if !self.in_domain(&xp) || !self.in_domain(&xm) {
                return Err(GeomError::Domain {
                    what: format!("{} (difference stencil)", self.name),
                });
            }
            if guard_seam {
                if let (Some(a), Some(b)) = (self.seam_value(&xp), self.seam_value(&xm)) {
                    if (a >= 0.0) != (b >= 0.0) {
                        return Err(GeomError::SeamStraddle { coord: j });
                    }
                }
            }
            let yp = f(&xp);
            let ym = f(&xm);
            for i in 0..self.dim_out {
                let v = (yp[i] - ym[i]) / (2.0 * h);
                if !v.is_finite() {
                    return Err(GeomError::NonFinite {
                        what: format!("{} (difference)", self.name),
                    });
                }
                jac[(i, j)] = v;
            }
            xp[j] = x[j];
            xm[j] = x[j];
        }
        Ok(jac)
    }

    /// Richardson-extrapolated central differences from steps `h` and `h/2`.
    pub fn richardson_jacobian(&self, x: &[f64], scale: f64) -> Result<DMatrix<f64>> {
        let coarse = self.central_jacobian(x, scale)?;
        let fine = self.central_jacobian(x, scale / 2.0)?;
        Ok((fine * 4.0 - coarse) / 3.0)
    }

    /// Gradient of a scalar map.
    pub fn gradient(&self, x: &[f64]) -> Result<DVector<f64>> {
        let j = self.jacobian(x)?;
        Ok(j.row(0).transpose())
    }

    /// Hessian of a scalar map (nested duals, else differences of the
    /// gradient).
    pub fn hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_input(x)?;
        let n = self.dim_in;
        if let Some(d2) = &self.active(x).dual2 {
            let mut h = DMatrix::zeros(n, n);
            let mut seed: Vec<Dual2> = x
                .iter()
                .map(|&v| Dual::constant(Dual::constant(v)))
                .collect();
            for i in 0..n {
                for j in i..n {
                    seed[i].d.v = 1.0;
                    seed[j].v.d = 1.0;
                    let y = d2(&seed)[0];
                    seed[i].d.v = 0.0;
                    seed[j].v.d = 0.0;
                    h[(i, j)] = y.d.d;
                    h[(j, i)] = y.d.d;
                }
            }
            if h.iter().any(|v| !v.is_finite()) {
                return Err(GeomError::NonFinite {
                    what: format!("{} (hessian)", self.name),
                });
            }
            return Ok(h);
        }
        let mut h = DMatrix::zeros(n, n);
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        for j in 0..n {
            let step = 1e-4 * x[j].abs().max(1.0);
            xp[j] = x[j] + step;
            xm[j] = x[j] - step;
            let gp = self.gradient(&xp)?;
            let gm = self.gradient(&xm)?;
            for i in 0..n {
                h[(i, j)] = (gp[i] - gm[i]) / (2.0 * step);
            }
            xp[j] = x[j];
            xm[j] = x[j];
        }
        Ok((&h + h.transpose()) * 0.5)
    }

    /// Scalar map `⟨c, self(x)⟩`.
    pub fn linear_functional(&self, coeffs: &[f64]) -> SmoothMap {
        self.post_compose(
            Functional {
                lin: coeffs.to_vec(),
                quad: None,
            },
            "lin",
        )
    }

    /// Scalar map `⟨c, y⟩ + ½ (y − b)ᵀ Q (y − b)` with `y = self(x)`.
    pub fn quadratic_functional(
        &self,
        coeffs: &[f64],
        center: &[f64],
        q: DMatrix<f64>,
    ) -> SmoothMap {
        self.post_compose(
            Functional {
                lin: coeffs.to_vec(),
                quad: Some((center.to_vec(), q)),
            },
            "quad",
        )
    }

    fn post_compose<P: Post>(&self, p: P, tag: &str) -> SmoothMap {
        let p = Arc::new(p);
        let kernel = match &self.kernel {
            Kernel::Smooth(e) => Kernel::Smooth(e.post(p)),
            Kernel::Piecewise { seam, plus, minus } => Kernel::Piecewise {
                seam: seam.clone(),
                plus: plus.post(p.clone()),
                minus: minus.post(p),
            },
        };
        SmoothMap {
            name: format!("{}({})", tag, self.name),
            dim_in: self.dim_in,
            dim_out: 1,
            domain: self.domain.clone(),
            kernel,
        }
    }
}

/// Identity on ℝⁿ.
pub fn identity_map(n: usize) -> SmoothMap {
    struct Id;
    impl GenericEval for Id {
        fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
            x.to_vec()
        }
    }
    SmoothMap::from_generic("identity", n, n, Id)
}

/// Jacobian of `m` at `x` (see [`SmoothMap::jacobian`]).
pub fn jacobian(m: &SmoothMap, x: &[f64]) -> Result<DMatrix<f64>> {
    m.jacobian(x)
}

/// `‖(Dm)ᵀ J (Dm) − sign·J‖_max` for a self-map of `(ℝ^{2n}, ω)`.
pub fn pullback_residual(
    s: &SymplecticStructure,
    m: &SmoothMap,
    x: &[f64],
    sign: f64,
) -> Result<f64> {
    pullback_residual_between(s, s, m, x, sign)
}

/// `‖(Dm)ᵀ J_dst (Dm) − sign·J_src‖_max` for a map between two symplectic
/// coordinate spaces of the same dimension.
pub fn pullback_residual_between(
    src: &SymplecticStructure,
    dst: &SymplecticStructure,
    m: &SmoothMap,
    x: &[f64],
    sign: f64,
) -> Result<f64> {
    if m.dim_in() != src.dim() {
        return Err(GeomError::DimensionMismatch {
            expected: src.dim(),
            got: m.dim_in(),
        });
    }
    if m.dim_out() != dst.dim() {
        return Err(GeomError::DimensionMismatch {
            expected: dst.dim(),
            got: m.dim_out(),
        });
    }
    let d = m.jacobian(x)?;
    Ok(pullback_of_jacobian(src, dst, &d, sign))
}

/// Same residual computed from an already available Jacobian.
pub fn pullback_of_jacobian(
    src: &SymplecticStructure,
    dst: &SymplecticStructure,
    d: &DMatrix<f64>,
    sign: f64,
) -> f64 {
    let pulled = d.transpose() * &dst.pairing * d;
    (pulled - &src.pairing * sign).amax()
}
