//! Catalog of explicit local fibrations with their sections, group actions
//! and fibre-preserving involutions.

pub mod focus_focus;
pub mod formulas;
pub mod thin_leg;

use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dual::{cz, Scalar};
use crate::error::{GeomError, Result};
use crate::geom::fiber::singular_values;
use crate::geom::flow::{default_steps, integrate};
use crate::geom::map::{GenericEval, Side, SmoothMap};
use crate::geom::symplectic::{ChartId, PhasePoint};
use formulas::*;
use thin_leg::{thin_leg_phi, thin_leg_phi_inverse, ThinLegParams};

/// Declared type of a symmetry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryKind {
    Symplectic,
    AntiSymplectic,
}

impl SymmetryKind {
    /// `+1` or `−1`, the sign expected in `φ*ω = ±ω`.
    pub fn sign(self) -> f64 {
        match self {
            SymmetryKind::Symplectic => 1.0,
            SymmetryKind::AntiSymplectic => -1.0,
        }
    }
}

/// A named self-map of the phase space.
#[derive(Clone, Debug)]
pub struct Symmetry {
    pub name: String,
    pub kind: SymmetryKind,
    pub map: SmoothMap,
    pub involution: bool,
}

impl Symmetry {
    pub fn apply(&self, x: &PhasePoint) -> Result<PhasePoint> {
        PhasePoint::new(x.chart, self.map.eval(&x.coords)?)
    }
}

type SectionFn = Arc<dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync>;
type BasePred = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// A section `σ: B → X` with `f ∘ σ = id`.
#[derive(Clone)]
pub struct Section {
    pub name: String,
    map: SectionFn,
    domain: BasePred,
}

impl std::fmt::Debug for Section {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Section").field("name", &self.name).finish()
    }
}

impl Section {
    fn new<F, P>(name: &str, map: F, domain: P) -> Self
    where
        F: Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
        P: Fn(&[f64]) -> bool + Send + Sync + 'static,
    {
        Section {
            name: name.to_string(),
            map: Arc::new(map),
            domain: Arc::new(domain),
        }
    }

    pub fn in_domain(&self, b: &[f64]) -> bool {
        b.iter().all(|v| v.is_finite()) && (self.domain)(b)
    }

    /// Phase-space coordinates of `σ(b)`.
    pub fn eval(&self, b: &[f64]) -> Result<Vec<f64>> {
        if !self.in_domain(b) {
            return Err(GeomError::Domain {
                what: format!("section {}", self.name),
            });
        }
        (self.map)(b)
    }
}

/// Shape of the discriminant locus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Discriminant {
    /// A single point (the origin).
    Point,
    /// The line `b₁ = b₂ = 0`.
    Line,
    /// The trivalent graph `{b₁ = 0, b₂ = b₃ ≥ 0} ∪ {b₁ = b₂ = 0, b₃ ≤ 0} ∪ {b₁ = b₃ = 0, b₂ ≤ 0}`.
    Trivalent,
    /// `{0} × Log{v₁ + v₂ + 1 = 0}`.
    Amoeba,
    /// Thin-legged amoeba; no closed form.
    PinchedAmoeba,
    /// Coordinate hyperplanes of the moment image.
    Boundary,
}

/// Parameters of a group element acting on a model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GroupElement {
    Cstar {
        tau_re: f64,
        tau_im: f64,
    },
    /// `s` is an angle in turns, reduced to `[0, 1)`.
    CstarTimesS1 {
        tau_re: f64,
        tau_im: f64,
        s: f64,
    },
    /// `t₂, t₃` are angles in turns, reduced to `[0, 1)`.
    RTimesT2 {
        t1: f64,
        t2: f64,
        t3: f64,
    },
}

fn turns(a: f64) -> f64 {
    let r = a.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

impl GroupElement {
    pub fn cstar(tau: Complex64) -> Result<Self> {
        check_tau(tau)?;
        Ok(GroupElement::Cstar {
            tau_re: tau.re,
            tau_im: tau.im,
        })
    }
    pub fn cstar_s1(tau: Complex64, s: f64) -> Result<Self> {
        check_tau(tau)?;
        Ok(GroupElement::CstarTimesS1 {
            tau_re: tau.re,
            tau_im: tau.im,
            s: turns(s),
        })
    }
    pub fn r_t2(t1: f64, t2: f64, t3: f64) -> Self {
        GroupElement::RTimesT2 {
            t1,
            t2: turns(t2),
            t3: turns(t3),
        }
    }
    pub fn kind_name(&self) -> &'static str {
        match self {
            GroupElement::Cstar { .. } => "cstar",
            GroupElement::CstarTimesS1 { .. } => "cstar_times_s1",
            GroupElement::RTimesT2 { .. } => "r_times_t2",
        }
    }
}

fn check_tau(tau: Complex64) -> Result<()> {
    if tau.norm() == 0.0 || !tau.is_finite() {
        return Err(GeomError::Domain {
            what: "group element (tau must be nonzero)".into(),
        });
    }
    Ok(())
}

/// Which catalog entry a model is.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    FfNonproper,
    Nodal,
    GenericSingular,
    PositiveProper,
    HarveyLawson,
    NegativeAmoeba,
    NegativeThin(ThinLegParams),
    ToricReference,
}

/// Rank report of `Df` at a point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub regular: bool,
    /// Singular values in decreasing order (of the active branch).
    pub singular_values: Vec<f64>,
    /// For seam points: singular values of both one-sided Jacobians.
    pub one_sided: Option<(Vec<f64>, Vec<f64>)>,
}

/// An evaluable Lagrangian fibration `f: X → B` with its symmetries.
#[derive(Clone, Debug)]
pub struct FibrationModel {
    pub name: String,
    pub kind: ModelKind,
    pub chart: ChartId,
    pub base_dim: usize,
    pub fibration: SmoothMap,
    pub sections: Vec<Section>,
    pub symmetries: Vec<Symmetry>,
    pub discriminant: Discriminant,
    /// Default sampling box in phase space.
    pub region: Vec<(f64, f64)>,
    /// Default sampling box of base points for sections.
    pub base_region: Vec<(f64, f64)>,
    /// Whether evaluating `f` involves a numerical flow.
    pub flow_built: bool,
    /// Real zero sets excluded from the domain; fixed-locus censuses keep
    /// their samples away from them.
    pub guards: Vec<SmoothMap>,
    /// Coordinates that are angles, with their period.
    pub periodic: Vec<(usize, f64)>,
}

/// Tunable model parameters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub thin: ThinLegParams,
}

pub const MODEL_NAMES: [&str; 8] = [
    "ff_nonproper",
    "nodal",
    "generic_singular",
    "positive_proper",
    "harvey_lawson",
    "negative_amoeba",
    "negative_thin",
    "toric_reference",
];

/// All catalog models with default parameters.
pub fn catalog() -> Vec<FibrationModel> {
    catalog_with(&ModelParams::default())
}

pub fn catalog_with(params: &ModelParams) -> Vec<FibrationModel> {
    MODEL_NAMES
        .iter()
        .map(|n| build(n, params).expect("catalog names resolve"))
        .collect()
}

/// Looks a model up by name.
pub fn model_by_name(name: &str, params: &ModelParams) -> Result<FibrationModel> {
    build(name, params)
}

fn build(name: &str, params: &ModelParams) -> Result<FibrationModel> {
    Ok(match name {
        "ff_nonproper" => ff_nonproper(),
        "nodal" => nodal(),
        "generic_singular" => generic_singular(),
        "positive_proper" => positive_proper(),
        "harvey_lawson" => harvey_lawson(),
        "negative_amoeba" => negative_amoeba(),
        "negative_thin" => negative_thin(params.thin),
        "toric_reference" => toric_reference(),
        other => return Err(GeomError::UnknownModel(other.to_string())),
    })
}

fn anti(name: &str, map: SmoothMap) -> Symmetry {
    Symmetry {
        name: name.to_string(),
        kind: SymmetryKind::AntiSymplectic,
        map,
        involution: true,
    }
}

fn cube(n: usize, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    vec![(lo, hi); n]
}

fn ff_nonproper() -> FibrationModel {
    FibrationModel {
        name: "ff_nonproper".into(),
        kind: ModelKind::FfNonproper,
        chart: ChartId::FocusFocus,
        base_dim: 2,
        fibration: SmoothMap::from_generic("q", 4, 2, FocusFocusQ),
        sections: vec![
            Section::new(
                "sigma1",
                |b| Ok(vec![1.0, 0.0, b[0], -b[1]]),
                |b| b[0] * b[0] + b[1] * b[1] < 1.0,
            ),
            Section::new(
                "sigma2",
                |b| Ok(vec![b[0], b[1], 1.0, 0.0]),
                |b| b[0] * b[0] + b[1] * b[1] < 1.0,
            ),
        ],
        symmetries: vec![anti(
            "iota",
            SmoothMap::from_generic("swap_conj", 4, 4, SwapConjugate),
        )],
        discriminant: Discriminant::Point,
        region: cube(4, -2.0, 2.0),
        base_region: cube(2, -0.7, 0.7),
        flow_built: false,
        guards: vec![],
        periodic: vec![],
    }
}

struct NodalGuard;
impl GenericEval for NodalGuard {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        vec![(cz(x, 0) * cz(x, 1)).re + 1.0]
    }
}

struct PositiveGuard;
impl GenericEval for PositiveGuard {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        vec![(cz(x, 0) * cz(x, 1) * cz(x, 2)).re + 1.0]
    }
}

fn nonzero_one_plus_z1z2(x: &[f64]) -> bool {
    let (a, b, c, d) = (x[0], x[1], x[2], x[3]);
    let re = 1.0 + a * c - b * d;
    let im = a * d + b * c;
    re * re + im * im > 1e-24
}

/// Real solution `(x₁, x₂)` of the nodal equations on the branch
/// `1 + x₁x₂ = −e^{b₂}` with `sign(x₁) = sign`.
pub fn nodal_real_section(b: &[f64], sign: f64) -> [f64; 2] {
    let p = -(1.0 + b[1].exp());
    let x1sq = b[0] + (b[0] * b[0] + p * p).sqrt();
    let x1 = sign * x1sq.sqrt();
    [x1, p / x1]
}

fn nodal() -> FibrationModel {
    let sec = |name: &str, sign: f64| {
        Section::new(
            name,
            move |b| {
                let [x1, x2] = nodal_real_section(b, sign);
                Ok(vec![x1, 0.0, x2, 0.0])
            },
            |_| true,
        )
    };
    FibrationModel {
        name: "nodal".into(),
        kind: ModelKind::Nodal,
        chart: ChartId::Standard(2),
        base_dim: 2,
        fibration: SmoothMap::from_generic("nodal", 4, 2, Nodal).with_domain(nonzero_one_plus_z1z2),
        sections: vec![sec("s_plus", 1.0), sec("s_minus", -1.0)],
        symmetries: vec![anti(
            "conjugation",
            SmoothMap::from_generic("conj", 4, 4, Conjugation(2)),
        )],
        discriminant: Discriminant::Point,
        region: cube(4, -3.0, 3.0),
        base_region: cube(2, -2.0, 2.0),
        flow_built: false,
        guards: vec![SmoothMap::from_generic("re(1+z1z2)", 4, 1, NodalGuard)],
        periodic: vec![],
    }
}

struct CylGuard;
impl GenericEval for CylGuard {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        NodalGuard.eval(&x[..4])
    }
}

fn generic_singular() -> FibrationModel {
    let sec = |name: &str, sign: f64, theta: f64| {
        Section::new(
            name,
            move |b| {
                let [x1, x2] = nodal_real_section(b, sign);
                Ok(vec![x1, 0.0, x2, 0.0, b[2], theta])
            },
            |_| true,
        )
    };
    FibrationModel {
        name: "generic_singular".into(),
        kind: ModelKind::GenericSingular,
        chart: ChartId::Standard(3),
        base_dim: 3,
        fibration: SmoothMap::from_generic("generic_singular", 6, 3, GenericSingular)
            .with_domain(|x| nonzero_one_plus_z1z2(&x[..4])),
        sections: vec![
            sec("s_plus_0", 1.0, 0.0),
            sec("s_minus_0", -1.0, 0.0),
            sec("s_plus_pi", 1.0, PI),
            sec("s_minus_pi", -1.0, PI),
        ],
        symmetries: vec![anti(
            "conjugation",
            SmoothMap::from_generic("cyl_conj", 6, 6, CylinderConjugation),
        )],
        discriminant: Discriminant::Line,
        region: {
            let mut r = cube(4, -3.0, 3.0);
            r.push((0.05, 0.95));
            r.push((-PI, PI));
            r
        },
        base_region: vec![(-2.0, 2.0), (-2.0, 2.0), (0.05, 0.95)],
        flow_built: false,
        guards: vec![SmoothMap::from_generic("re(1+z1z2)", 6, 1, CylGuard)],
        periodic: vec![(5, 2.0 * PI)],
    }
}

/// Real point of the positive model over `b` on the branch
/// `1 + x₁x₂x₃ = −e^{b₁}` with the given signs (their product must be −1).
pub fn positive_real_section(b: &[f64], signs: [f64; 3]) -> Result<[f64; 3]> {
    let p2 = (1.0 + b[0].exp()).powi(2);
    // s = x₁² solves s (s − b₂)(s − b₃) = P² on s > max(0, b₂, b₃)
    let lo = 0f64.max(b[1]).max(b[2]);
    let g = |s: f64| s * (s - b[1]) * (s - b[2]) - p2;
    let mut hi = lo + 1.0;
    while g(hi) < 0.0 {
        hi = lo + 2.0 * (hi - lo);
    }
    let mut a = lo;
    let mut s = hi;
    for _ in 0..200 {
        let mid = 0.5 * (a + s);
        if g(mid) < 0.0 {
            a = mid;
        } else {
            s = mid;
        }
        if s - a <= 1e-16 * s.max(1.0) {
            break;
        }
    }
    // polish with Newton
    for _ in 0..3 {
        let d = (s - b[1]) * (s - b[2]) + s * (s - b[2]) + s * (s - b[1]);
        let next = s - g(s) / d;
        if next > lo {
            s = next;
        }
    }
    let x1 = signs[0] * s.sqrt();
    let x2 = signs[1] * (s - b[1]).max(0.0).sqrt();
    let x3 = signs[2] * (s - b[2]).max(0.0).sqrt();
    Ok([x1, x2, x3])
}

fn positive_proper() -> FibrationModel {
    let patterns: [(&str, [f64; 3]); 4] = [
        ("s_mpp", [-1.0, 1.0, 1.0]),
        ("s_pmp", [1.0, -1.0, 1.0]),
        ("s_ppm", [1.0, 1.0, -1.0]),
        ("s_mmm", [-1.0, -1.0, -1.0]),
    ];
    let sections = patterns
        .iter()
        .map(|&(name, signs)| {
            Section::new(
                name,
                move |b| {
                    let x = positive_real_section(b, signs)?;
                    Ok(vec![x[0], 0.0, x[1], 0.0, x[2], 0.0])
                },
                |_| true,
            )
        })
        .collect();
    FibrationModel {
        name: "positive_proper".into(),
        kind: ModelKind::PositiveProper,
        chart: ChartId::Standard(3),
        base_dim: 3,
        fibration: SmoothMap::from_generic("positive", 6, 3, PositiveProper).with_domain(|x| {
            let z = [
                Complex64::new(x[0], x[1]),
                Complex64::new(x[2], x[3]),
                Complex64::new(x[4], x[5]),
            ];
            (z[0] * z[1] * z[2] + 1.0).norm_sqr() > 1e-24
        }),
        sections,
        symmetries: vec![anti(
            "conjugation",
            SmoothMap::from_generic("conj", 6, 6, Conjugation(3)),
        )],
        discriminant: Discriminant::Trivalent,
        region: cube(6, -2.0, 2.0),
        base_region: cube(3, -2.0, 2.0),
        flow_built: false,
        guards: vec![SmoothMap::from_generic("re(1+z1z2z3)", 6, 1, PositiveGuard)],
        periodic: vec![],
    }
}

fn harvey_lawson() -> FibrationModel {
    FibrationModel {
        name: "harvey_lawson".into(),
        kind: ModelKind::HarveyLawson,
        chart: ChartId::Standard(3),
        base_dim: 3,
        fibration: SmoothMap::from_generic("harvey_lawson", 6, 3, HarveyLawson),
        sections: vec![],
        symmetries: vec![anti(
            "iota",
            SmoothMap::from_generic("hl_involution", 6, 6, HarveyLawsonInvolution),
        )],
        discriminant: Discriminant::Trivalent,
        region: cube(6, -2.0, 2.0),
        base_region: cube(3, -2.0, 2.0),
        flow_built: false,
        guards: vec![],
        periodic: vec![],
    }
}

struct NegGuard {
    plus: bool,
    second: bool,
}
impl GenericEval for NegGuard {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let (g, z3) = pi_branch(x, self.plus);
        if self.second {
            vec![(g + z3).re - SQRT_2]
        } else {
            vec![(g - z3).re]
        }
    }
}

fn neg_guard(second: bool) -> SmoothMap {
    SmoothMap::piecewise_generic(
        if second {
            "re(gamma+z3-sqrt2)"
        } else {
            "re(gamma-z3)"
        },
        6,
        1,
        moment,
        NegGuard { plus: true, second },
        NegGuard {
            plus: false,
            second,
        },
    )
}

/// `γ` with the branch chosen by the sign of `μ`.
pub fn gamma(x: &[f64]) -> Complex64 {
    let g = gamma_branch(x, moment(x) >= 0.0);
    Complex64::new(g.re, g.im)
}

/// Real `(x₁, x₂)` with `μ = b₁`, `γ = g ≥ 0` and `sign(x₁) = sign(x₂) = sign`.
fn real_pair_with_gamma(b1: f64, g: f64, sign: f64) -> [f64; 2] {
    let x1 = (g * g + (2.0 * b1).max(0.0)).sqrt();
    let x2 = (g * g + (-2.0 * b1).max(0.0)).sqrt();
    [sign * x1, sign * x2]
}

fn negative_amoeba() -> FibrationModel {
    let sec = |name: &str, sign: f64| {
        Section::new(
            name,
            move |b| {
                // γ − x₃ = √2 e^{b₂}, γ + x₃ − √2 = √2 e^{b₃}
                let a = SQRT_2 * b[1].exp();
                let c = SQRT_2 * b[2].exp();
                let g = 0.5 * (a + c + SQRT_2);
                let x3 = g - a;
                let [x1, x2] = real_pair_with_gamma(b[0], g, sign);
                Ok(vec![x1, 0.0, x2, 0.0, x3, 0.0])
            },
            |_| true,
        )
    };
    let domain = |x: &[f64]| {
        let g = gamma(x);
        let z3 = Complex64::new(x[4], x[5]);
        (g - z3).norm() > 1e-12 && (g + z3 - SQRT_2).norm() > 1e-12
    };
    FibrationModel {
        name: "negative_amoeba".into(),
        kind: ModelKind::NegativeAmoeba,
        chart: ChartId::Standard(3),
        base_dim: 3,
        fibration: SmoothMap::piecewise_generic(
            "negative_amoeba",
            6,
            3,
            moment,
            NegativeAmoebaBranch { plus: true },
            NegativeAmoebaBranch { plus: false },
        )
        .with_domain(domain),
        sections: vec![sec("s3", -1.0), sec("s4", 1.0)],
        symmetries: vec![anti(
            "conjugation",
            SmoothMap::from_generic("conj", 6, 6, Conjugation(3)),
        )],
        discriminant: Discriminant::Amoeba,
        region: cube(6, -3.0, 3.0),
        base_region: cube(3, -2.0, 2.0),
        flow_built: false,
        guards: vec![neg_guard(false), neg_guard(true)],
        periodic: vec![],
    }
}

fn thin_branch(x: &[f64], plus: bool, params: &ThinLegParams) -> Vec<f64> {
    let (g, z3) = pi_branch(x, plus);
    let u = [Complex64::new(g.re, g.im), Complex64::new(z3.re, z3.im)];
    match thin_leg_phi(u, params) {
        Ok(w) => vec![moment(x), w[0].norm().ln(), w[1].norm().ln()],
        Err(_) => vec![f64::NAN; 3],
    }
}

fn negative_thin(params: ThinLegParams) -> FibrationModel {
    let p = params;
    let sec = move |name: &str, sign: f64| {
        Section::new(
            name,
            move |b| {
                let w = [
                    Complex64::new(b[1].exp(), 0.0),
                    Complex64::new(b[2].exp(), 0.0),
                ];
                let u = thin_leg_phi_inverse(w, &p)?;
                let g = u[0].re;
                if g <= 0.0 {
                    return Err(GeomError::Domain {
                        what: "thin-leg real section (gamma <= 0)".into(),
                    });
                }
                let [x1, x2] = real_pair_with_gamma(b[0], g, sign);
                Ok(vec![x1, 0.0, x2, 0.0, u[1].re, 0.0])
            },
            |_| true,
        )
    };
    let (pa, pb) = (params, params);
    let fibration = SmoothMap::piecewise_fn(
        "negative_thin",
        6,
        3,
        moment,
        move |x| thin_branch(x, true, &pa),
        move |x| thin_branch(x, false, &pb),
    );
    let pg = params;
    let guard = move |second: bool| {
        let q = pg;
        let f = move |plus: bool| {
            move |x: &[f64]| {
                let (g, _) = pi_branch(x, plus);
                let u = [Complex64::new(g.re, g.im), Complex64::new(x[4], x[5])];
                match thin_leg_phi(u, &q) {
                    Ok(w) => vec![if second { w[1].re } else { w[0].re }],
                    Err(_) => vec![f64::NAN],
                }
            }
        };
        SmoothMap::piecewise_fn(
            if second { "re(phi2)" } else { "re(phi1)" },
            6,
            1,
            moment,
            f(true),
            f(false),
        )
    };
    FibrationModel {
        name: "negative_thin".into(),
        kind: ModelKind::NegativeThin(params),
        chart: ChartId::Standard(3),
        base_dim: 3,
        fibration,
        sections: vec![sec("s3", -1.0), sec("s4", 1.0)],
        symmetries: vec![anti(
            "conjugation",
            SmoothMap::from_generic("conj", 6, 6, Conjugation(3)),
        )],
        discriminant: Discriminant::PinchedAmoeba,
        region: cube(6, -0.7, 0.7),
        base_region: vec![(-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)],
        flow_built: true,
        guards: vec![guard(false), guard(true)],
        periodic: vec![],
    }
}

fn toric_reference() -> FibrationModel {
    FibrationModel {
        name: "toric_reference".into(),
        kind: ModelKind::ToricReference,
        chart: ChartId::Standard(2),
        base_dim: 2,
        fibration: SmoothMap::from_generic("toric", 4, 2, Toric),
        sections: vec![Section::new(
            "positive_real",
            |b| Ok(vec![(2.0 * b[0]).sqrt(), 0.0, (2.0 * b[1]).sqrt(), 0.0]),
            |b| b[0] > 0.0 && b[1] > 0.0,
        )],
        symmetries: vec![anti(
            "conjugation",
            SmoothMap::from_generic("conj", 4, 4, Conjugation(2)),
        )],
        discriminant: Discriminant::Boundary,
        region: cube(4, -2.0, 2.0),
        base_region: cube(2, 0.1, 2.0),
        flow_built: false,
        guards: vec![],
        periodic: vec![],
    }
}

impl FibrationModel {
    pub fn ambient_dim(&self) -> usize {
        self.chart.dim()
    }

    fn check_chart(&self, x: &PhasePoint) -> Result<()> {
        if x.chart != self.chart {
            return Err(GeomError::Domain {
                what: format!("{} expects chart {:?}", self.name, self.chart),
            });
        }
        Ok(())
    }

    pub fn in_domain(&self, x: &[f64]) -> bool {
        self.fibration.in_domain(x)
    }

    /// `f(x)`.
    pub fn eval(&self, x: &PhasePoint) -> Result<Vec<f64>> {
        self.check_chart(x)?;
        self.fibration.eval(&x.coords)
    }

    pub fn point(&self, coords: Vec<f64>) -> Result<PhasePoint> {
        PhasePoint::new(self.chart, coords)
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    /// The model's named anti-symplectic involution.
    pub fn involution_symmetry(&self) -> &Symmetry {
        self.symmetries
            .iter()
            .find(|s| s.involution && s.kind == SymmetryKind::AntiSymplectic)
            .expect("every catalog model declares an involution")
    }

    pub fn involution(&self, x: &PhasePoint) -> Result<PhasePoint> {
        self.check_chart(x)?;
        if !self.in_domain(&x.coords) {
            return Err(GeomError::Domain {
                what: self.name.clone(),
            });
        }
        self.involution_symmetry().apply(x)
    }

    /// Numerical flow of the Hamiltonian `f_i` for time `t`.
    pub fn component_flow(&self, i: usize, x: &[f64], t: f64) -> Result<Vec<f64>> {
        let mut e = vec![0.0; self.base_dim];
        e[i] = 1.0;
        let h = self.fibration.linear_functional(&e);
        integrate(&self.chart.symplectic(), &h, x, t, default_steps(t))
    }

    /// Group action realized by the Hamiltonian flows of the model.
    pub fn group_action(&self, g: &GroupElement, x: &PhasePoint) -> Result<PhasePoint> {
        self.check_chart(x)?;
        let mismatch = || GeomError::KindMismatch {
            model: self.name.clone(),
            got: g.kind_name().to_string(),
        };
        let c = &x.coords;
        let out = match (self.kind, *g) {
            (ModelKind::FfNonproper, GroupElement::Cstar { tau_re, tau_im }) => {
                let z =
                    focus_focus::scale(Complex64::new(tau_re, tau_im), focus_focus::from_point(x))?;
                return Ok(focus_focus::to_point(z));
            }
            (ModelKind::Nodal, GroupElement::Cstar { tau_re, tau_im }) => {
                self.nodal_cstar(Complex64::new(tau_re, tau_im), c)?
            }
            (ModelKind::GenericSingular, GroupElement::CstarTimesS1 { tau_re, tau_im, s }) => {
                let mut y = self.nodal_cstar(Complex64::new(tau_re, tau_im), c)?;
                y[5] += 2.0 * PI * s;
                y
            }
            (
                ModelKind::PositiveProper | ModelKind::HarveyLawson,
                GroupElement::RTimesT2 { t1, t2, t3 },
            ) => {
                let y = self.component_flow(0, c, t1)?;
                let z: Vec<Complex64> = (0..3)
                    .map(|j| Complex64::new(y[2 * j], y[2 * j + 1]))
                    .collect();
                // flows of |z₁|² − |z_k|² for time π t_k rotate with period one
                let r2 = Complex64::from_polar(1.0, 2.0 * PI * t2);
                let r3 = Complex64::from_polar(1.0, 2.0 * PI * t3);
                let w = [z[0] / (r2 * r3), z[1] * r2, z[2] * r3];
                w.iter().flat_map(|c| [c.re, c.im]).collect()
            }
            _ => return Err(mismatch()),
        };
        PhasePoint::new(self.chart, out)
    }

    /// ℂ* action of the nodal factor: the flow of `f₂` for time `−log|τ|`
    /// followed by the flow of `μ` for time `−Arg τ`.
    fn nodal_cstar(&self, tau: Complex64, c: &[f64]) -> Result<Vec<f64>> {
        check_tau(tau)?;
        let mut y = if tau.norm() == 1.0 {
            c.to_vec()
        } else {
            self.component_flow(1, c, -tau.norm().ln())?
        };
        // μ-flow rotates (z₁, z₂) ↦ (e^{−it} z₁, e^{it} z₂)
        let r = Complex64::from_polar(1.0, tau.arg());
        let z1 = Complex64::new(y[0], y[1]) * r;
        let z2 = Complex64::new(y[2], y[3]) / r;
        y[0] = z1.re;
        y[1] = z1.im;
        y[2] = z2.re;
        y[3] = z2.im;
        Ok(y)
    }

    /// Whether `rank Df(x) = base_dim` with margin `tol` (relative to the
    /// largest singular value). On a seam both one-sided Jacobians are
    /// checked and reported.
    pub fn is_regular(&self, x: &PhasePoint, tol: f64) -> Result<RankReport> {
        self.check_chart(x)?;
        let full = |sv: &[f64]| {
            let top = sv.first().copied().unwrap_or(0.0).max(1.0);
            sv.len() == self.base_dim && sv.last().copied().unwrap_or(0.0) > tol * top
        };
        match self.fibration.jacobian(&x.coords) {
            Ok(d) => {
                let sv = singular_values(&d);
                Ok(RankReport {
                    regular: full(&sv),
                    singular_values: sv,
                    one_sided: None,
                })
            }
            Err(GeomError::SeamPoint { .. }) | Err(GeomError::SeamStraddle { .. }) => {
                let p = singular_values(&self.fibration.jacobian_one_sided(&x.coords, Side::Plus)?);
                let m =
                    singular_values(&self.fibration.jacobian_one_sided(&x.coords, Side::Minus)?);
                let regular = full(&p) && full(&m);
                let active = if self.fibration.seam_value(&x.coords).unwrap_or(0.0) >= 0.0 {
                    p.clone()
                } else {
                    m.clone()
                };
                Ok(RankReport {
                    regular,
                    singular_values: active,
                    one_sided: Some((p, m)),
                })
            }
            Err(e) => Err(e),
        }
    }

    /// Smallest guard distance estimate `|g(x)| / ‖∇g(x)‖`.
    pub fn guard_distance(&self, x: &[f64]) -> f64 {
        let mut best = f64::INFINITY;
        for g in &self.guards {
            let v = match g.eval(x) {
                Ok(v) => v[0],
                Err(_) => return 0.0,
            };
            let n = match g.jacobian_lenient(x) {
                Ok(d) => d.norm(),
                Err(_) => return 0.0,
            };
            let d = if n > 0.0 { v.abs() / n } else { v.abs() };
            best = best.min(d);
        }
        best
    }

    /// Signs of the guards at `x`.
    pub fn guard_signs(&self, x: &[f64]) -> Vec<bool> {
        self.guards
            .iter()
            .map(|g| g.eval(x).map(|v| v[0] >= 0.0).unwrap_or(false))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::map::pullback_residual;

    #[test]
    fn catalog_has_all_names() {
        let cat = catalog();
        assert_eq!(cat.len(), 8);
        let nodal = cat.iter().find(|m| m.name == "nodal").unwrap();
        assert_eq!(nodal.ambient_dim(), 4);
        let pos = cat.iter().find(|m| m.name == "positive_proper").unwrap();
        assert_eq!(pos.base_dim, 3);
        assert!(model_by_name("nope", &ModelParams::default()).is_err());
    }

    #[test]
    fn evaluation_examples() {
        let m = nodal();
        assert_eq!(
            m.eval(&m.point(vec![0.0; 4]).unwrap()).unwrap(),
            vec![0.0, 0.0]
        );
        let m = positive_proper();
        assert_eq!(
            m.eval(&m.point(vec![0.0; 6]).unwrap()).unwrap(),
            vec![0.0, 0.0, 0.0]
        );
        let m = negative_amoeba();
        let v = m
            .eval(&m.point(vec![1.0, 0.0, 1.0, 0.0, 0.0, 0.0]).unwrap())
            .unwrap();
        let expect = [0.0, -0.5 * 2f64.ln(), ((SQRT_2 - 1.0) / SQRT_2).ln()];
        for (a, b) in v.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
        let m = nodal();
        let bad = m.point(vec![1.0, 0.0, -1.0, 0.0]).unwrap();
        assert!(matches!(m.eval(&bad), Err(GeomError::Domain { .. })));
    }

    #[test]
    fn involution_examples() {
        let m = nodal();
        let y = m
            .involution(&m.point(vec![1.0, 1.0, 2.0, 0.0]).unwrap())
            .unwrap();
        assert_eq!(y.coords, vec![1.0, -1.0, 2.0, 0.0]);
        let m = harvey_lawson();
        let y = m
            .involution(&m.point(vec![1.0, 0.0, 0.0, 1.0, 1.0, 0.0]).unwrap())
            .unwrap();
        assert_eq!(y.coords, vec![-1.0, 0.0, 0.0, -1.0, 1.0, 0.0]);
    }

    #[test]
    fn ff_group_action_example() {
        let m = ff_nonproper();
        let x = focus_focus::to_point([Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)]);
        let g = GroupElement::cstar(Complex64::new(2.0, 0.0)).unwrap();
        let y = m.group_action(&g, &x).unwrap();
        assert_eq!(y.coords, vec![2.0, 0.0, 0.5, 0.0]);
        assert_eq!(m.eval(&y).unwrap(), m.eval(&x).unwrap());
        let id = GroupElement::cstar(Complex64::new(1.0, 0.0)).unwrap();
        assert_eq!(m.group_action(&id, &x).unwrap(), x);
        let bad = GroupElement::r_t2(0.0, 0.0, 0.0);
        assert!(matches!(
            m.group_action(&bad, &x),
            Err(GeomError::KindMismatch { .. })
        ));
        assert!(GroupElement::cstar(Complex64::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn ff_scaling_is_symplectic() {
        let s = ChartId::FocusFocus.symplectic();
        let m = SmoothMap::from_generic("scale", 4, 4, FocusFocusScaling { re: 2.0, im: 0.0 });
        assert!(pullback_residual(&s, &m, &[0.3, -0.1, 0.8, 0.2], 1.0).unwrap() <= 1e-9);
    }

    #[test]
    fn regularity_examples() {
        let m = nodal();
        assert!(
            !m.is_regular(&m.point(vec![0.0; 4]).unwrap(), 1e-8)
                .unwrap()
                .regular
        );
        assert!(
            m.is_regular(&m.point(vec![1.0, 0.0, 1.0, 0.0]).unwrap(), 1e-8)
                .unwrap()
                .regular
        );
        let m = harvey_lawson();
        assert!(
            !m.is_regular(&m.point(vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap(), 1e-8)
                .unwrap()
                .regular
        );
    }

    #[test]
    fn angles_reduce_to_unit_interval() {
        match GroupElement::r_t2(0.3, 1.25, -0.25) {
            GroupElement::RTimesT2 { t2, t3, .. } => {
                assert!((t2 - 0.25).abs() < 1e-15);
                assert!((t3 - 0.75).abs() < 1e-15);
            }
            _ => unreachable!(),
        }
    }
}
