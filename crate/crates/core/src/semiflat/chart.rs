//! `T*B/Λ` charts: period lattices, reduced coordinates and the fibrewise
//! algebra of translations and negation.

use std::f64::consts::TAU;
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};

/// Monomial `coeff · Π bᵢ^{powers[i]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coeff: f64,
    pub powers: Vec<u32>,
}

/// Polynomial potential on the base.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub terms: Vec<Term>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Polynomial { terms: Vec::new() }
    }

    pub fn value(&self, b: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                t.coeff
                    * t.powers
                        .iter()
                        .zip(b)
                        .map(|(&p, &x)| x.powi(p as i32))
                        .product::<f64>()
            })
            .sum()
    }

    pub fn gradient(&self, b: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; b.len()];
        for t in &self.terms {
            for (i, gi) in g.iter_mut().enumerate() {
                let p = t.powers.get(i).copied().unwrap_or(0);
                if p == 0 {
                    continue;
                }
                let mut v = t.coeff * p as f64 * b[i].powi(p as i32 - 1);
                for (j, (&q, &x)) in t.powers.iter().zip(b).enumerate() {
                    if j != i {
                        v *= x.powi(q as i32);
                    }
                }
                *gi += v;
            }
        }
        g
    }
}

/// Built-in period families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeriodSet {
    /// `λ₁ = −log|b| db₁ + Arg b db₂ + dH`, `λ₂ = 2π db₂` on the punctured disk.
    Nodal,
    /// The nodal periods times `2π dr` over `D × (0, 1)`.
    GenericSingular,
    /// `2π dbᵢ`.
    Torus,
}

/// Declarative chart description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartSpec {
    pub name: String,
    pub n: usize,
    #[serde(default)]
    pub h: Polynomial,
    pub periods: PeriodSet,
}

/// Action-angle chart `T*B/Λ` with lattice spanned by closed 1-forms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemiflatChart {
    pub name: String,
    pub n: usize,
    pub h: Polynomial,
    pub periods: PeriodSet,
}

impl SemiflatChart {
    pub fn new(spec: ChartSpec) -> Result<Self> {
        let need = match spec.periods {
            PeriodSet::Nodal => Some(2),
            PeriodSet::GenericSingular => Some(3),
            PeriodSet::Torus => None,
        };
        if let Some(n) = need {
            if spec.n != n {
                return Err(GeomError::Config(format!(
                    "{:?} periods need n = {n}",
                    spec.periods
                )));
            }
        }
        if spec.h.terms.iter().any(|t| t.powers.len() > spec.n) {
            return Err(GeomError::Config(
                "potential uses more variables than the base".into(),
            ));
        }
        Ok(SemiflatChart {
            name: spec.name,
            n: spec.n,
            h: spec.h,
            periods: spec.periods,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ChartSpec =
            serde_json::from_str(text).map_err(|e| GeomError::Config(e.to_string()))?;
        Self::new(spec)
    }

    /// Nodal chart with potential `h`.
    pub fn nodal(h: Polynomial) -> Self {
        SemiflatChart {
            name: "nodal".into(),
            n: 2,
            h,
            periods: PeriodSet::Nodal,
        }
    }

    pub fn generic_singular(h: Polynomial) -> Self {
        SemiflatChart {
            name: "generic_singular".into(),
            n: 3,
            h,
            periods: PeriodSet::GenericSingular,
        }
    }

    pub fn torus(n: usize) -> Self {
        SemiflatChart {
            name: format!("torus{n}"),
            n,
            h: Polynomial::zero(),
            periods: PeriodSet::Torus,
        }
    }

    pub fn in_domain(&self, b: &[f64]) -> bool {
        if b.len() != self.n || b.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match self.periods {
            PeriodSet::Nodal => {
                let r = b[0].hypot(b[1]);
                r > 0.0 && r < 1.0
            }
            PeriodSet::GenericSingular => {
                let r = b[0].hypot(b[1]);
                r > 0.0 && r < 1.0 && b[2] > 0.0 && b[2] < 1.0
            }
            PeriodSet::Torus => true,
        }
    }

    fn check(&self, b: &[f64]) -> Result<()> {
        if b.len() != self.n {
            return Err(GeomError::DimensionMismatch {
                expected: self.n,
                got: b.len(),
            });
        }
        if !self.in_domain(b) {
            return Err(GeomError::Domain {
                what: format!("{} chart", self.name),
            });
        }
        Ok(())
    }

    /// `dH(b)`.
    pub fn dh(&self, b: &[f64]) -> Vec<f64> {
        self.h.gradient(b)
    }

    /// `λᵢ(b)`, using the principal branch of `Arg`.
    pub fn period(&self, i: usize, b: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.n];
        match self.periods {
            PeriodSet::Torus => v[i] = TAU,
            PeriodSet::Nodal | PeriodSet::GenericSingular => match i {
                0 => {
                    let dh = self.dh(b);
                    v[0] = -b[0].hypot(b[1]).ln() + dh[0];
                    v[1] = b[1].atan2(b[0]) + dh[1];
                    if self.n == 3 {
                        v[2] = dh[2];
                    }
                }
                1 => v[1] = TAU,
                _ => v[2] = TAU,
            },
        }
        v
    }

    /// Period matrix with columns `λ₁(b), …, λₙ(b)`.
    pub fn period_matrix(&self, b: &[f64]) -> Result<DMatrix<f64>> {
        self.check(b)?;
        let cols: Vec<DVector<f64>> = (0..self.n)
            .map(|i| DVector::from_vec(self.period(i, b)))
            .collect();
        Ok(DMatrix::from_columns(&cols))
    }

    /// Largest `|∂_j λᵢ,k − ∂_k λᵢ,j|` at `b`, by central differences.
    pub fn period_curl(&self, i: usize, b: &[f64]) -> f64 {
        one_form_curl(&|x: &[f64]| self.period(i, x), b)
    }

    /// Coefficients of `alpha` in the period basis at `b`.
    fn coefficients(&self, b: &[f64], alpha: &[f64]) -> Result<Vec<f64>> {
        let p = self.period_matrix(b)?;
        if alpha.len() != self.n {
            return Err(GeomError::DimensionMismatch {
                expected: self.n,
                got: alpha.len(),
            });
        }
        let lu = p.lu();
        if lu.determinant().abs() < 1e-14 {
            return Err(GeomError::SingularPeriodMatrix);
        }
        let c = lu
            .solve(&DVector::from_column_slice(alpha))
            .ok_or(GeomError::SingularPeriodMatrix)?;
        Ok(c.as_slice().to_vec())
    }
}

fn one_form_curl(eta: &dyn Fn(&[f64]) -> Vec<f64>, b: &[f64]) -> f64 {
    let n = b.len();
    let h = 1e-5;
    let mut d = vec![vec![0.0; n]; n];
    for (j, row) in d.iter_mut().enumerate() {
        let mut p = b.to_vec();
        let mut m = b.to_vec();
        p[j] += h;
        m[j] -= h;
        let (ep, em) = (eta(&p), eta(&m));
        for k in 0..n {
            row[k] = (ep[k] - em[k]) / (2.0 * h);
        }
    }
    let mut worst = 0f64;
    for (j, row) in d.iter().enumerate() {
        for (k, other) in d.iter().enumerate().skip(j + 1) {
            worst = worst.max((row[k] - other[j]).abs());
        }
    }
    worst
}

/// Bits of resolution of a reduced coordinate.
const TURN_BITS: u32 = 40;
const TURN_SHIFT: u32 = 64 - TURN_BITS;

/// A point of `ℝ/ℤ` on a grid of `2⁻⁴⁰`, stored in the top bits of a `u64`
/// so that wrapping integer arithmetic is exact addition modulo one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Turn(u64);

impl Turn {
    /// Nearest grid point to `x mod 1`; odd, so `from_f64(−x) = −from_f64(x)`.
    pub fn from_f64(x: f64) -> Self {
        let y = x - x.round();
        let k = (y * (1u64 << TURN_BITS) as f64).round() as i64;
        Turn((k as u64) << TURN_SHIFT)
    }

    /// Representative in `[0, 1)`.
    pub fn value(self) -> f64 {
        (self.0 >> TURN_SHIFT) as f64 / (1u64 << TURN_BITS) as f64
    }
}

impl Add for Turn {
    type Output = Turn;
    fn add(self, o: Turn) -> Turn {
        Turn(self.0.wrapping_add(o.0))
    }
}

impl Neg for Turn {
    type Output = Turn;
    fn neg(self) -> Turn {
        Turn(self.0.wrapping_neg())
    }
}

impl Sub for Turn {
    type Output = Turn;
    fn sub(self, o: Turn) -> Turn {
        Turn(self.0.wrapping_sub(o.0))
    }
}

impl fmt::Display for Turn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// Point of `T*B/Λ`: a covector representative and its reduced
/// coefficients in the period basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberPoint {
    pub b: Vec<f64>,
    /// `Σ cᵢ λᵢ(b)` for the reduced coefficients.
    pub alpha: Vec<f64>,
    pub turns: Vec<Turn>,
}

impl FiberPoint {
    pub fn new(chart: &SemiflatChart, b: &[f64], alpha: &[f64]) -> Result<Self> {
        let c = chart.coefficients(b, alpha)?;
        Self::from_turns(chart, b, c.into_iter().map(Turn::from_f64).collect())
    }

    pub fn from_turns(chart: &SemiflatChart, b: &[f64], turns: Vec<Turn>) -> Result<Self> {
        let p = chart.period_matrix(b)?;
        let c = DVector::from_iterator(turns.len(), turns.iter().map(|t| t.value()));
        let alpha = (p * c).as_slice().to_vec();
        Ok(FiberPoint {
            b: b.to_vec(),
            alpha,
            turns,
        })
    }

    /// Reduced coefficients in `[0, 1)ⁿ`.
    pub fn reduced(&self) -> Vec<f64> {
        self.turns.iter().map(|t| t.value()).collect()
    }
}

/// Reduced coefficients of `alpha` at `b`.
pub fn reduce(chart: &SemiflatChart, b: &[f64], alpha: &[f64]) -> Result<Vec<f64>> {
    Ok(FiberPoint::new(chart, b, alpha)?.reduced())
}

/// Fibrewise negation `(b, α) ↦ (b, −α)`.
pub fn minus_id(chart: &SemiflatChart, p: &FiberPoint) -> Result<FiberPoint> {
    FiberPoint::from_turns(chart, &p.b, p.turns.iter().map(|t| -*t).collect())
}

type FormFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A 1-form on the base.
#[derive(Clone)]
pub struct OneForm {
    pub name: String,
    eval: FormFn,
}

impl fmt::Debug for OneForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OneForm({})", self.name)
    }
}

impl OneForm {
    pub fn new<F>(name: &str, f: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        OneForm {
            name: name.to_string(),
            eval: Arc::new(f),
        }
    }

    pub fn constant(v: Vec<f64>) -> Self {
        OneForm::new("constant", move |_| v.clone())
    }

    pub fn zero(n: usize) -> Self {
        OneForm::new("zero", move |_| vec![0.0; n])
    }

    /// The `i`-th period of `chart`.
    pub fn period(chart: &SemiflatChart, i: usize) -> Self {
        let c = chart.clone();
        OneForm::new(&format!("lambda{}", i + 1), move |b| c.period(i, b))
    }

    /// `dH` of a polynomial potential.
    pub fn exact(h: Polynomial) -> Self {
        OneForm::new("dH", move |b| h.gradient(b))
    }

    pub fn scaled(&self, s: f64) -> Self {
        let e = self.eval.clone();
        OneForm::new(&format!("{s}*{}", self.name), move |b| {
            e(b).into_iter().map(|v| s * v).collect()
        })
    }

    pub fn eval(&self, b: &[f64]) -> Vec<f64> {
        (self.eval)(b)
    }

    /// Numeric exterior derivative at `b` (largest component).
    pub fn curl(&self, b: &[f64]) -> f64 {
        one_form_curl(&|x: &[f64]| self.eval(x), b)
    }
}

fn shift(chart: &SemiflatChart, b: &[f64], v: &[f64]) -> Result<Vec<Turn>> {
    Ok(chart
        .coefficients(b, v)?
        .into_iter()
        .map(Turn::from_f64)
        .collect())
}

/// Fibrewise translation `T_η(b, α) = (b, α + η(b))`.
pub fn translate(chart: &SemiflatChart, eta: &OneForm, p: &FiberPoint) -> Result<FiberPoint> {
    let d = shift(chart, &p.b, &eta.eval(&p.b))?;
    FiberPoint::from_turns(
        chart,
        &p.b,
        p.turns.iter().zip(d).map(|(t, e)| *t + e).collect(),
    )
}

/// `ι(b, α) = (b, dH(b) − α)`.
pub fn iota_h(chart: &SemiflatChart, p: &FiberPoint) -> Result<FiberPoint> {
    let d = shift(chart, &p.b, &chart.dh(&p.b))?;
    FiberPoint::from_turns(
        chart,
        &p.b,
        p.turns.iter().zip(d).map(|(t, e)| e - *t).collect(),
    )
}

/// Tolerance on the numeric curl of a translating 1-form.
pub const CLOSED_TOL: f64 = 1e-6;

/// Translation by a section `σ′`, which must be closed to give a
/// symplectomorphism.
pub fn section_translation(
    chart: &SemiflatChart,
    sigma_prime: &OneForm,
    p: &FiberPoint,
) -> Result<FiberPoint> {
    let curl = sigma_prime.curl(&p.b);
    if curl > CLOSED_TOL {
        return Err(GeomError::NotClosed { curl });
    }
    translate(chart, sigma_prime, p)
}
