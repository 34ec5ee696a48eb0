//! Verification suites over the model catalog, producing a
//! [`VerificationReport`].

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::affine::{
    amoeba_raster, complement_components, discriminant_probe, discriminant_violation, monodromy,
    monodromy_of_model, near_boundary, sampled_amoeba, AmoebaRaster, AmoebaSpec, LoopSpec,
    MonodromyMatrix,
};
use crate::error::{GeomError, Result};
use crate::geom::fiber::Frame;
use crate::geom::symplectic::{ChartId, PhasePoint};
use crate::grading::{
    grading_census, h_involution_residual, intersection_index, phase_distance, phase_of_plane,
    rotated_real_plane, GradedPlane, HolomorphicVolume,
};
use crate::models::{model_by_name, FibrationModel, ModelKind, ModelParams, Symmetry, MODEL_NAMES};
use crate::report::{num, Basis, Record, Status, Timings, VerificationReport};
use crate::semiflat::{
    build_theta, build_theta_with, lattice_mismatch, lattice_probe, minus_id, nodal_period_oracle,
    theta_negation, translate, FiberPoint, LatticeOptions, OneForm, Polynomial, Realization,
    SemiflatChart,
};
use crate::verify::{
    dist_max, fiber_fixed_count, fixed_locus_census, flow_fidelity, verify_fiber_preserving,
    verify_involution, verify_lagrangian, verify_pullback, CensusOptions, CensusResult,
    FixedCountOptions, SampleCloud,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Lagrangian,
    Involution,
    Census,
    Monodromy,
    Amoeba,
    Grading,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Lagrangian,
        Suite::Involution,
        Suite::Census,
        Suite::Monodromy,
        Suite::Amoeba,
        Suite::Grading,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Lagrangian => "lagrangian",
            Suite::Involution => "involution",
            Suite::Census => "census",
            Suite::Monodromy => "monodromy",
            Suite::Amoeba => "amoeba",
            Suite::Grading => "grading",
        }
    }

    fn default_samples(self) -> usize {
        match self {
            Suite::Lagrangian | Suite::Involution => 1000,
            Suite::Census => 200_000,
            Suite::Monodromy | Suite::Amoeba => 0,
            Suite::Grading => 100,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = GeomError;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| GeomError::UnknownSuite(s.to_string()))
    }
}

/// Parses a comma separated suite list; `all` selects every suite.
pub fn parse_suites(s: &str) -> Result<Vec<Suite>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if part == "all" {
            out.extend(Suite::ALL);
        } else {
            out.push(part.parse()?);
        }
    }
    if out.is_empty() {
        return Err(GeomError::UnknownSuite(s.to_string()));
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// What to run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// A catalog name or `all`.
    pub model: String,
    pub suites: Vec<Suite>,
    /// Overrides every suite's default sample count.
    pub samples: Option<usize>,
    pub seed: u64,
    /// Threshold for identities of closed-form maps.
    pub tol_structural: f64,
    /// Threshold for anything through an integrator or a solver.
    pub tol_numeric: f64,
    /// Phase-space sampling box replacing the model default.
    pub region: Option<Vec<(f64, f64)>>,
    /// Side of the amoeba raster.
    pub grid: usize,
    pub params: ModelParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: "all".into(),
            suites: Suite::ALL.to_vec(),
            samples: None,
            seed: 42,
            tol_structural: 1e-12,
            tol_numeric: 1e-6,
            region: None,
            grid: 256,
            params: ModelParams::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples == Some(0) {
            return Err(GeomError::Config("samples must be at least 1".into()));
        }
        if !(self.tol_structural > 0.0 && self.tol_numeric > 0.0) {
            return Err(GeomError::Config("tolerances must be positive".into()));
        }
        if self.grid < 8 {
            return Err(GeomError::Config("grid must be at least 8".into()));
        }
        if self.suites.is_empty() {
            return Err(GeomError::Config("no suite selected".into()));
        }
        for m in self.models()? {
            if let Some(r) = &self.region {
                if r.len() != m.ambient_dim() {
                    return Err(GeomError::Config(format!(
                        "region has {} intervals, {} lives in dimension {}",
                        r.len(),
                        m.name,
                        m.ambient_dim()
                    )));
                }
                if r.iter()
                    .any(|(lo, hi)| lo.partial_cmp(hi) != Some(std::cmp::Ordering::Less))
                {
                    return Err(GeomError::Config(
                        "region intervals must have lo < hi".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn models(&self) -> Result<Vec<FibrationModel>> {
        if self.model == "all" {
            MODEL_NAMES
                .iter()
                .map(|n| model_by_name(n, &self.params))
                .collect()
        } else {
            Ok(vec![model_by_name(&self.model, &self.params)?])
        }
    }

    fn samples(&self, suite: Suite) -> usize {
        self.samples.unwrap_or(suite.default_samples())
    }

    fn region(&self, model: &FibrationModel) -> Vec<(f64, f64)> {
        self.region.clone().unwrap_or_else(|| model.region.clone())
    }
}

/// A finished run: the report and the amoeba raster when it was computed.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: VerificationReport,
    pub amoeba: Option<AmoebaRaster>,
    /// Nodal chart monodromy, when the monodromy suite ran.
    pub monodromy: Option<MonodromyMatrix>,
}

enum Task<'a> {
    Global(Suite),
    Model(Suite, &'a FibrationModel),
}

impl Task<'_> {
    fn key(&self) -> String {
        match self {
            Task::Global(s) => format!("{s}/*"),
            Task::Model(s, m) => format!("{s}/{}", m.name),
        }
    }
}

struct TaskOutput {
    records: Vec<Record>,
    amoeba: Option<AmoebaRaster>,
    monodromy: Option<MonodromyMatrix>,
}

impl From<Vec<Record>> for TaskOutput {
    fn from(records: Vec<Record>) -> Self {
        TaskOutput {
            records,
            amoeba: None,
            monodromy: None,
        }
    }
}

/// Runs the configured suites. Tasks run on the current rayon pool; the
/// records are sorted by name, so the report does not depend on scheduling.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let models = config.models()?;
    let start = Instant::now();
    let mut tasks = Vec::new();
    for &s in &config.suites {
        if matches!(
            s,
            Suite::Involution | Suite::Monodromy | Suite::Amoeba | Suite::Grading
        ) {
            tasks.push(Task::Global(s));
        }
        tasks.extend(models.iter().map(|m| Task::Model(s, m)));
    }
    let results: Vec<(String, f64, TaskOutput)> = tasks
        .par_iter()
        .map(|t| {
            let t0 = Instant::now();
            let out = match t {
                Task::Global(s) => global_task(*s, config),
                Task::Model(s, m) => model_task(*s, m, config).into(),
            };
            (t.key(), t0.elapsed().as_secs_f64() * 1e3, out)
        })
        .collect();
    let mut timings = Timings::default();
    let mut records = Vec::new();
    let mut amoeba = None;
    let mut monodromy = None;
    for (key, ms, out) in results {
        timings.tasks.insert(key, ms);
        records.extend(out.records);
        amoeba = amoeba.or(out.amoeba);
        monodromy = monodromy.or(out.monodromy);
    }
    timings.total_ms = start.elapsed().as_secs_f64() * 1e3;
    let echo = serde_json::to_value(config).map_err(|e| GeomError::Config(e.to_string()))?;
    Ok(RunOutput {
        report: VerificationReport::new(echo, records, timings),
        amoeba,
        monodromy,
    })
}

fn global_task(suite: Suite, config: &RunConfig) -> TaskOutput {
    match suite {
        Suite::Involution => semiflat_records(config).into(),
        Suite::Monodromy => {
            let mut matrix = None;
            let records = chart_monodromy_records(&mut matrix);
            TaskOutput {
                records,
                amoeba: None,
                monodromy: matrix,
            }
        }
        Suite::Amoeba => amoeba_records(config),
        Suite::Grading => index_records(config).into(),
        Suite::Lagrangian | Suite::Census => Vec::new().into(),
    }
}

fn model_task(suite: Suite, m: &FibrationModel, config: &RunConfig) -> Vec<Record> {
    match suite {
        Suite::Lagrangian => lagrangian_records(m, config),
        Suite::Involution => involution_records(m, config),
        Suite::Census => census_records(m, config),
        Suite::Monodromy => model_monodromy_records(m),
        Suite::Amoeba => discriminant_records(m),
        Suite::Grading => grading_records(m, config),
    }
}

/// Unwraps `r` or turns the error into a failing record.
macro_rules! attempt {
    ($out:ident, $r:expr, $name:expr, $anchor:expr, $basis:expr) => {
        match $r {
            Ok(v) => v,
            Err(e) => {
                $out.push(Record::error($name, $anchor, &e, $basis));
                return $out;
            }
        }
    };
}

// ---- lagrangian ----

fn lagrangian_records(m: &FibrationModel, config: &RunConfig) -> Vec<Record> {
    let mut out = Vec::new();
    let name = format!("lagrangian/{}/residual", m.name);
    let anchor = "generic fibres are Lagrangian";
    let n = config.samples(Suite::Lagrangian);
    let cloud = attempt!(
        out,
        SampleCloud::regular(m, n, config.seed, 1e-4, 1e-3),
        name,
        anchor,
        Basis::Claimed
    );
    let r = attempt!(
        out,
        verify_lagrangian(m, &cloud, 1e-10),
        name,
        anchor,
        Basis::Claimed
    );
    out.push(
        Record::residual(&name, anchor, r.max, config.tol_numeric, Basis::Claimed)
            .with_note(format!("{} points", r.samples)),
    );

    if m.kind == ModelKind::FfNonproper {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let starts: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..4).map(|_| rng.random_range(-1.5..1.5)).collect())
            .collect();
        let times: Vec<f64> = (0..=8).map(|k| -2.0 + 0.5 * k as f64).collect();
        let name = "lagrangian/ff_nonproper/flow";
        let ff = attempt!(
            out,
            flow_fidelity(m, &starts, &times),
            name,
            "component flows",
            Basis::Claimed
        );
        out.push(Record::residual(
            "lagrangian/ff_nonproper/flow_g1",
            "flow of the first component is (e^-t z1, e^t z2)",
            ff.g1_error,
            1e-8,
            Basis::Claimed,
        ));
        out.push(Record::residual(
            "lagrangian/ff_nonproper/flow_g2",
            "flow of the second component is (e^it z1, e^it z2)",
            ff.g2_error,
            1e-8,
            Basis::Claimed,
        ));
        out.push(Record::residual(
            "lagrangian/ff_nonproper/energy_drift",
            "midpoint rule conserves the quadratic Hamiltonians",
            ff.energy_drift,
            1e-10,
            Basis::Derived,
        ));
    }
    out
}

// ---- involution ----

fn involution_records(m: &FibrationModel, config: &RunConfig) -> Vec<Record> {
    let mut out = Vec::new();
    let region = config.region(m);
    let n = config.samples(Suite::Involution);
    // closed-form maps are checked at their structural thresholds, flows at the numeric one
    // angles are compared modulo their period, which costs an ulp
    let (tol_f, tol_omega, tol_sq) = if m.flow_built {
        (config.tol_numeric, config.tol_numeric, 1e-8)
    } else if m.periodic.is_empty() {
        (1e-10, config.tol_structural, 0.0)
    } else {
        (1e-10, config.tol_structural, config.tol_structural)
    };
    for sym in m.symmetries.iter().filter(|s| s.involution) {
        let base = format!("involution/{}/{}", m.name, sym.name);
        let keep = |x: &PhasePoint| {
            sym.map
                .eval(&x.coords)
                .map(|y| m.in_domain(&y))
                .unwrap_or(false)
        };
        let cloud = attempt!(
            out,
            SampleCloud::filtered(m, &region, n, config.seed, keep),
            format!("{base}/cloud"),
            "sampling",
            Basis::Trivial
        );
        let apply = |x: &PhasePoint| sym.apply(x);
        match verify_fiber_preserving(m, apply, &cloud) {
            Ok(r) => out.push(Record::residual(
                format!("{base}/fiber_preserving"),
                "f o phi = f",
                r.max,
                tol_f,
                Basis::Claimed,
            )),
            Err(e) => out.push(Record::error(
                format!("{base}/fiber_preserving"),
                "f o phi = f",
                &e,
                Basis::Claimed,
            )),
        }
        match verify_pullback(&sym.map, &cloud, sym.kind.sign()) {
            Ok(r) => out.push(Record::residual(
                format!("{base}/anti_symplectic"),
                "phi* omega = -omega",
                r.max,
                tol_omega,
                Basis::Claimed,
            )),
            Err(e) => out.push(Record::error(
                format!("{base}/anti_symplectic"),
                "phi* omega = -omega",
                &e,
                Basis::Claimed,
            )),
        }
        match verify_involution(apply, &cloud, &m.periodic) {
            Ok(r) => out.push(Record::residual(
                format!("{base}/square"),
                "phi o phi = id",
                r.max,
                tol_sq,
                Basis::Claimed,
            )),
            Err(e) => out.push(Record::error(
                format!("{base}/square"),
                "phi o phi = id",
                &e,
                Basis::Claimed,
            )),
        }
        // the identity is symplectic, so it must fail the anti-symplectic test
        if let Ok(r) = verify_pullback(
            &crate::geom::map::identity_map(m.ambient_dim()),
            &cloud,
            -1.0,
        ) {
            out.push(Record::new(
                format!("{base}/negative_control"),
                "a symplectic map fails the anti-symplectic test",
                Status::from_bool(r.max > 1.0),
                num(r.max),
                json!("> 1"),
                Basis::Trivial,
            ));
        }
    }
    if m.kind == ModelKind::Nodal {
        out.extend(theta_records(m, config));
    }
    out
}

/// Number of fibre points at which the reconstructed involution is compared.
const THETA_POINTS: usize = 100;

fn theta_records(m: &FibrationModel, config: &RunConfig) -> Vec<Record> {
    let mut out = Vec::new();
    let anchor = "Theta o (-id) o Theta^-1 is the involution";
    let sigma = m.section("s_plus").expect("nodal model has s_plus");
    let bases = [[0.3, 0.2], [-0.4, 0.5], [0.5, 0.5], [-0.5, 0.3]];
    let mut lattice_gap = 0f64;
    let mut lattices = Vec::new();
    for b in &bases {
        let name = "involution/nodal/lattice";
        let p = attempt!(
            out,
            lattice_probe(m, sigma, b, LatticeOptions::default()),
            name,
            "period lattice",
            Basis::Derived
        );
        let oracle = attempt!(
            out,
            nodal_period_oracle(b),
            name,
            "period lattice",
            Basis::Derived
        );
        lattice_gap = lattice_gap.max(lattice_mismatch(&p, &oracle));
        lattices.push(p);
    }
    out.push(Record::residual(
        "involution/nodal/lattice_vs_quadrature",
        "probed lattice equals the quadrature periods",
        lattice_gap,
        1e-6,
        Basis::Derived,
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x7e7a);
    let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, -0.5]);
    let jobs: Vec<(usize, [f64; 2])> = (0..THETA_POINTS)
        .map(|k| {
            (
                k % bases.len(),
                [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)],
            )
        })
        .collect();
    let results: Vec<Result<(f64, f64)>> = jobs
        .par_iter()
        .map(|(i, xi)| {
            let b = &bases[*i];
            let x = build_theta(m, sigma, b, xi)?;
            let y = theta_negation(m, sigma, &x.coords, &lattices[*i])?;
            let c = m.involution(&x)?;
            let x2 = build_theta_with(m, sigma, b, xi, &Realization::Quadratic(q.clone()))?;
            Ok((
                dist_max(&y.coords, &c.coords),
                dist_max(&x2.coords, &x.coords),
            ))
        })
        .collect();
    let (mut neg, mut real) = (0f64, 0f64);
    for r in results {
        let (a, b) = attempt!(
            out,
            r,
            "involution/nodal/theta_negation",
            anchor,
            Basis::Claimed
        );
        neg = neg.max(a);
        real = real.max(b);
    }
    out.push(
        Record::residual(
            "involution/nodal/theta_negation",
            anchor,
            neg,
            1e-5,
            Basis::Claimed,
        )
        .with_note(format!("{THETA_POINTS} points")),
    );
    out.push(Record::residual(
        "involution/nodal/theta_realizations",
        "Theta does not depend on the Hamiltonian realizing dh",
        real,
        config.tol_numeric,
        Basis::Claimed,
    ));
    out
}

fn semiflat_records(config: &RunConfig) -> Vec<Record> {
    let charts = [
        (
            SemiflatChart::nodal(Polynomial::zero()),
            vec![(-0.9, 0.9); 2],
        ),
        (
            SemiflatChart::generic_singular(Polynomial::zero()),
            vec![(-0.9, 0.9), (-0.9, 0.9), (0.05, 0.95)],
        ),
        (SemiflatChart::torus(3), vec![(-2.0, 2.0); 3]),
    ];
    let n = config.samples(Suite::Involution);
    let mut out = Vec::new();
    for (chart, region) in charts {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5e31);
        let eta = OneForm::new("eta", |b: &[f64]| {
            b.iter()
                .enumerate()
                .map(|(i, v)| (i as f64 + 1.0) * v + 0.3)
                .collect()
        });
        let neg_eta = eta.scaled(-1.0);
        let (mut commute, mut square, mut tried) = (0usize, 0usize, 0usize);
        let mut errors = 0usize;
        while tried < n {
            let b: Vec<f64> = region
                .iter()
                .map(|&(lo, hi)| rng.random_range(lo..hi))
                .collect();
            if !chart.in_domain(&b) {
                continue;
            }
            tried += 1;
            let alpha: Vec<f64> = (0..chart.n)
                .map(|_| rng.random_range(-10.0..10.0))
                .collect();
            let step = || -> Result<(bool, bool)> {
                let p = FiberPoint::new(&chart, &b, &alpha)?;
                let lhs = translate(&chart, &eta, &minus_id(&chart, &p)?)?;
                let rhs = minus_id(&chart, &translate(&chart, &neg_eta, &p)?)?;
                let twice = translate(&chart, &eta, &minus_id(&chart, &lhs)?)?;
                Ok((lhs.turns == rhs.turns, twice.turns == p.turns))
            };
            match step() {
                Ok((a, s)) => {
                    commute += a as usize;
                    square += s as usize;
                }
                Err(_) => errors += 1,
            }
        }
        let base = format!("involution/semiflat/{}", chart.name);
        out.push(Record::count(
            format!("{base}/translate_negate"),
            "T_eta o (-id) = (-id) o T_-eta on reduced coefficients",
            commute as i64,
            n as i64,
            Basis::Claimed,
        ));
        let mut sq = Record::count(
            format!("{base}/square"),
            "(T_eta o (-id))^2 = id on reduced coefficients",
            square as i64,
            n as i64,
            Basis::Claimed,
        );
        if errors > 0 {
            sq = sq.with_note(format!("{errors} evaluation errors"));
        }
        out.push(sq);
    }
    out
}

// ---- census ----

/// Known points of the fixed locus of the negative model, one per component.
pub const NEGATIVE_PROBES: [[f64; 6]; 5] = [
    [0.0, 0.0, 0.0, 0.0, 2.0, 0.0],
    [0.0, 0.0, 0.0, 0.0, -1.0, 0.0],
    [-1.0, 0.0, -1.0, 0.0, 0.5, 0.0],
    [1.0, 0.0, 1.0, 0.0, 0.5, 0.0],
    [0.0, 0.0, 0.0, 0.0, 0.5, 0.0],
];

/// Claimed `(components, sections)` of the fixed locus, where stated.
fn census_claim(kind: ModelKind) -> Option<(usize, Option<usize>)> {
    match kind {
        ModelKind::Nodal => Some((3, Some(2))),
        ModelKind::PositiveProper => Some((5, Some(4))),
        ModelKind::NegativeAmoeba => Some((5, None)),
        ModelKind::GenericSingular => Some((7, Some(6))),
        _ => None,
    }
}

fn census_records(m: &FibrationModel, config: &RunConfig) -> Vec<Record> {
    let mut out = fixed_count_records(m, config);
    let Some((want_c, want_s)) = census_claim(m.kind) else {
        return out;
    };
    let sym = m.involution_symmetry();
    let region = config.region(m);
    let mut opts = CensusOptions {
        n_samples: config.samples(Suite::Census),
        seed: config.seed,
        ..Default::default()
    };
    if m.kind == ModelKind::NegativeAmoeba {
        opts.probes = NEGATIVE_PROBES.iter().map(|p| p.to_vec()).collect();
    }
    let base = format!("census/{}", m.name);
    let anchor = "components of the fixed locus";
    let first = attempt!(
        out,
        fixed_locus_census(m, sym, &region, &opts),
        format!("{base}/components"),
        anchor,
        Basis::Claimed
    );
    let doubled = CensusOptions {
        n_samples: 2 * opts.n_samples,
        ..opts.clone()
    };
    let second = attempt!(
        out,
        fixed_locus_census(m, sym, &region, &doubled),
        format!("{base}/stability"),
        anchor,
        Basis::Derived
    );

    // a mismatch on the generic-singular model is recorded, not failed
    let soft = m.kind == ModelKind::GenericSingular;
    let grade = |ok: bool| match (ok, soft) {
        (true, _) => Status::Pass,
        (false, true) => Status::Finding,
        (false, false) => Status::Fail,
    };
    let summary = |r: &CensusResult| {
        json!({
            "components": r.component_count,
            "sections": r.section_count(),
            "fixed_samples": r.fixed_samples,
            "eps_link": r.eps_link,
            "sizes": r.components.iter().map(|c| c.sample_count).collect::<Vec<_>>(),
        })
    };
    out.push(
        Record::new(
            format!("{base}/components"),
            anchor,
            grade(first.component_count == want_c),
            summary(&first),
            json!(want_c),
            Basis::Claimed,
        )
        .with_note(format!("{} samples, seed {}", first.n_samples, first.seed)),
    );
    if let Some(s) = want_s {
        out.push(Record::new(
            format!("{base}/sections"),
            "components that are sections",
            grade(first.section_count() == s),
            json!(first.section_count()),
            json!(s),
            Basis::Claimed,
        ));
    }
    let stable = first.component_count == second.component_count
        && first.section_count() == second.section_count();
    out.push(Record::new(
        format!("{base}/stability"),
        "census unchanged when the sample count doubles",
        Status::from_bool(stable),
        json!([first.component_count, second.component_count]),
        json!("equal"),
        Basis::Derived,
    ));
    if !opts.probes.is_empty() {
        let comps: Vec<Option<usize>> = first.probe_components.clone();
        let mut seen: Vec<usize> = comps.iter().flatten().copied().collect();
        seen.sort_unstable();
        seen.dedup();
        let ok = comps.iter().all(Option::is_some) && seen.len() == comps.len();
        out.push(Record::new(
            format!("{base}/probes_distinct"),
            "the five known fixed points lie in distinct components",
            Status::from_bool(ok),
            json!(comps),
            json!("5 distinct"),
            Basis::Claimed,
        ));
    }
    out
}

/// Generic fibres per model for the fixed-point count.
const FIXED_FIBRES: usize = 10;

fn fixed_count_records(m: &FibrationModel, config: &RunConfig) -> Vec<Record> {
    let mut out = Vec::new();
    // the thin-leg fibration is flow-built and its fibres are too expensive to explore
    if matches!(m.kind, ModelKind::NegativeThin(_)) {
        return out;
    }
    let n = m.base_dim as u32;
    // non-compact fibres: the focus-focus ones are cylinders and the
    // Harvey-Lawson ones are T² × ℝ, so only the torus factor contributes
    let (want, basis) = match m.kind {
        ModelKind::FfNonproper => (2usize, Basis::Derived),
        ModelKind::HarveyLawson => (4usize, Basis::Derived),
        _ => (2usize.pow(n), Basis::Claimed),
    };
    let keep = |b: &[f64]| discriminant_violation(m.discriminant, b).is_none_or(|v| v > 0.15);
    let bases = crate::verify::cloud::base_points(&m.base_region, FIXED_FIBRES, config.seed, keep);
    let sym = m.involution_symmetry();
    let results: Vec<Result<usize>> = bases
        .par_iter()
        .enumerate()
        .map(|(k, b)| {
            let opts = FixedCountOptions {
                seed: config.seed.wrapping_add(k as u64),
                ..Default::default()
            };
            fiber_fixed_count(m, sym, b, opts).map(|r| r.count)
        })
        .collect();
    let mut counts = Vec::new();
    let mut note = None;
    for r in results {
        match r {
            Ok(c) => counts.push(json!(c)),
            Err(e) => {
                counts.push(Value::Null);
                note = Some(e.to_string());
            }
        }
    }
    let ok = counts.len() == FIXED_FIBRES && counts.iter().all(|c| c.as_u64() == Some(want as u64));
    let mut rec = Record::new(
        format!("census/{}/fixed_per_fibre", m.name),
        "the involution fixes 2^n points of a smooth fibre",
        Status::from_bool(ok),
        Value::Array(counts),
        json!(want),
        basis,
    );
    if let Some(n) = note {
        rec = rec.with_note(n);
    }
    out.push(rec);
    out
}

// ---- monodromy ----

/// Leaves the nodal chart matrix in `export` when it could be computed.
fn chart_monodromy_records(export: &mut Option<MonodromyMatrix>) -> Vec<Record> {
    let mut out = Vec::new();
    let chart = SemiflatChart::nodal(Polynomial::zero());
    let anchor = "monodromy around the node is lambda1 -> lambda1 + lambda2";
    let lp = LoopSpec::circle(vec![0.0, 0.0], 0.5);
    let m = attempt!(
        out,
        monodromy(&chart, &lp),
        "monodromy/chart/nodal",
        anchor,
        Basis::Derived
    );
    *export = Some(m.clone());
    let want = vec![vec![1i64, 0], vec![1, 1]];
    out.push(
        Record::new(
            "monodromy/chart/nodal",
            anchor,
            Status::from_bool(m.entries == want && m.residual <= 1e-3),
            json!(m.entries),
            json!(want),
            Basis::Derived,
        )
        .with_note(format!("rounding residual {:.1e}", m.residual)),
    );
    out.push(Record::new(
        "monodromy/chart/nodal_unipotent",
        "the nodal monodromy is unipotent",
        Status::from_bool(m.is_unipotent()),
        json!(m.is_unipotent()),
        json!(true),
        Basis::Derived,
    ));
    if let Ok(r) = monodromy(&chart, &lp.reversed()) {
        let prod = m.matrix() * r.matrix();
        let ok = (prod - DMatrix::identity(2, 2)).amax() == 0.0;
        out.push(Record::new(
            "monodromy/chart/nodal_reversed",
            "the reversed loop gives the inverse",
            Status::from_bool(ok),
            json!(r.entries),
            json!([[1, 0], [-1, 1]]),
            Basis::Trivial,
        ));
    }
    let off = attempt!(
        out,
        monodromy(&chart, &LoopSpec::circle(vec![0.55, 0.1], 0.3)),
        "monodromy/chart/non_enclosing",
        "loops not enclosing the node are trivial",
        Basis::Derived
    );
    out.push(Record::new(
        "monodromy/chart/non_enclosing",
        "loops not enclosing the node are trivial",
        Status::from_bool(off.is_identity()),
        json!(off.entries),
        json!([[1, 0], [0, 1]]),
        Basis::Derived,
    ));
    let gs = SemiflatChart::generic_singular(Polynomial::zero());
    let lp3 = LoopSpec::circle(vec![0.0, 0.0, 0.5], 0.5);
    let m3 = attempt!(
        out,
        monodromy(&gs, &lp3),
        "monodromy/chart/generic_singular",
        "edge monodromy",
        Basis::Derived
    );
    let want3 = vec![vec![1i64, 0, 0], vec![1, 1, 0], vec![0, 0, 1]];
    out.push(Record::new(
        "monodromy/chart/generic_singular",
        "monodromy around the discriminant line is the nodal one times the identity",
        Status::from_bool(m3.entries == want3),
        json!(m3.entries),
        json!(want3),
        Basis::Derived,
    ));
    out
}

fn model_monodromy_records(m: &FibrationModel) -> Vec<Record> {
    let mut out = Vec::new();
    let (sigma, lp, want) = match m.kind {
        ModelKind::Nodal => (
            "s_plus",
            LoopSpec {
                steps: 60,
                ..LoopSpec::circle(vec![0.0, 0.3], 0.5)
            },
            vec![vec![1i64, 0], vec![1, 1]],
        ),
        _ => return out,
    };
    let name = format!("monodromy/{}/loop", m.name);
    let anchor = "monodromy of the probed lattice around the singular value";
    let s = m.section(sigma).expect("section exists");
    let r = attempt!(
        out,
        monodromy_of_model(m, s, &lp),
        name,
        anchor,
        Basis::Derived
    );
    out.push(
        Record::new(
            &name,
            anchor,
            Status::from_bool(r.entries == want),
            json!(r.entries),
            json!(want),
            Basis::Derived,
        )
        .with_note(format!("rounding residual {:.1e}", r.residual)),
    );
    out
}

// ---- amoeba ----

fn amoeba_records(config: &RunConfig) -> TaskOutput {
    let mut out = Vec::new();
    let spec = match AmoebaSpec::square(4.0, config.grid) {
        Ok(s) => s,
        Err(e) => {
            out.push(Record::error(
                "amoeba/raster",
                "amoeba raster",
                &e,
                Basis::Derived,
            ));
            return out.into();
        }
    };
    let raster = amoeba_raster(&spec);
    let oracle = sampled_amoeba(&spec, 4, 32768);
    let near = near_boundary(&spec);
    let total = raster.inside.len();
    let bad = (0..total)
        .filter(|&k| raster.inside[k] != oracle[k] && !near[k])
        .count();
    let diff = (0..total)
        .filter(|&k| raster.inside[k] != oracle[k])
        .count();
    out.push(
        Record::count(
            "amoeba/oracle_disagreement",
            "membership agrees with the sampled curve away from the boundary",
            bad as i64,
            0,
            Basis::Derived,
        )
        .with_note(format!(
            "{diff} disagreeing cells in total, all within one cell of the boundary when 0 above"
        )),
    );
    let cc = complement_components(&raster);
    out.push(
        Record::count(
            "amoeba/unbounded_complement",
            "the complement has three unbounded components",
            cc.unbounded as i64,
            3,
            Basis::Claimed,
        )
        .with_note(format!("{} complement components in the window", cc.total)),
    );
    out.push(Record::new(
        "amoeba/swap_symmetric",
        "the amoeba is symmetric under swapping coordinates",
        Status::from_bool(raster.is_swap_symmetric()),
        json!(raster.is_swap_symmetric()),
        json!(true),
        Basis::Trivial,
    ));
    TaskOutput {
        records: out,
        amoeba: Some(raster),
        monodromy: None,
    }
}

fn discriminant_records(m: &FibrationModel) -> Vec<Record> {
    let mut out = Vec::new();
    let name = format!("amoeba/{}/discriminant", m.name);
    let anchor = "critical values lie on the discriminant";
    let p = attempt!(out, discriminant_probe(m, 6), name, anchor, Basis::Derived);
    let rec = match p.max_violation {
        Some(v) => Record::residual(&name, anchor, v, 1e-9, Basis::Derived),
        None => Record::new(
            &name,
            anchor,
            Status::Pass,
            Value::Null,
            Value::Null,
            Basis::Derived,
        )
        .with_note("no closed-form descriptor"),
    };
    out.push(rec);
    out.push(Record::count(
        format!("amoeba/{}/critical_rank", m.name),
        "sampled critical points drop rank",
        p.rank_deficient as i64,
        p.crit_images.len() as i64,
        Basis::Derived,
    ));
    out
}

// ---- grading ----

fn grading_records(m: &FibrationModel, config: &RunConfig) -> Vec<Record> {
    let mut out = Vec::new();
    let omega = HolomorphicVolume::for_model(m);
    let sym: &Symmetry = m.involution_symmetry();
    let n = config.samples(Suite::Grading);
    let base = format!("grading/{}", m.name);

    // h(φ(x)) h(x) = 1
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9ad);
    let region = config.region(m);
    let (mut worst, mut count, mut tries) = (0f64, 0usize, 0usize);
    let mut err = None;
    while count < n && tries < 100 * n {
        tries += 1;
        let x: Vec<f64> = region
            .iter()
            .map(|&(lo, hi)| rng.random_range(lo..hi))
            .collect();
        if !m.in_domain(&x) || omega.coefficient(&x).is_err() {
            continue;
        }
        match h_involution_residual(sym, &omega, &x) {
            Ok(r) => {
                worst = worst.max(r);
                count += 1;
            }
            Err(e) => err = Some(e),
        }
    }
    let mut rec = Record::residual(
        format!("{base}/h_involution"),
        "h o phi = 1/h",
        worst,
        1e-9,
        Basis::Claimed,
    )
    .with_note(format!("{count} points"));
    if let Some(e) = err {
        rec = rec.with_status(Status::Fail).with_note(e.to_string());
    }
    out.push(rec);

    if !matches!(m.chart, ChartId::Standard(_)) {
        return out;
    }
    let g = attempt!(
        out,
        grading_census(m, &omega, n, config.seed),
        format!("{base}/census"),
        "phases",
        Basis::Claimed
    );
    let nn = m.base_dim as f64;
    let sampled = |name: &str, anchor: &str, dev: f64, samples: usize| {
        let r = Record::residual(format!("{base}/{name}"), anchor, dev, 1e-9, Basis::Claimed);
        if samples == 0 {
            r.with_note("no points sampled")
        } else {
            r.with_note(format!("{samples} points"))
        }
    };
    out.push(sampled(
        "section_phase",
        "theta of a real section is an integer",
        g.section_deviation,
        g.section_samples,
    ));
    out.push(sampled(
        "fixed_fiber_phase",
        &format!("theta of a fibre at a fixed point is {} mod 1", nn / 2.0),
        g.fixed_fiber_deviation,
        g.fixed_samples,
    ));
    out.push(sampled(
        "involution_shift",
        "phi shifts fibre phases to n - theta",
        g.shift_deviation,
        g.shift_samples,
    ));
    if let Some(spread) = g.fiber_spread {
        let special = spread <= 1e-9;
        out.push(
            Record::new(
                format!("{base}/fiber_phase_spread"),
                "variation of theta along a fibre",
                if special {
                    Status::Pass
                } else {
                    Status::Finding
                },
                num(spread),
                json!("0 for special Lagrangian fibres"),
                Basis::Derived,
            )
            .with_note(if special {
                "fibres are special Lagrangian"
            } else {
                "fibres are not special Lagrangian for this form"
            }),
        );
    }
    out
}

/// Random Lagrangian plane `U·ℝⁿ` for a random unitary `U`.
fn random_plane(n: usize, rng: &mut ChaCha8Rng) -> Result<GradedPlane> {
    let a = DMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let u = a.qr().q();
    let vectors = (0..n)
        .map(|k| (0..n).flat_map(|j| [u[(j, k)].re, u[(j, k)].im]).collect())
        .collect();
    let base = PhasePoint::new(ChartId::Standard(n), vec![0.0; 2 * n])?;
    let mut g = phase_of_plane(&HolomorphicVolume::standard(n), &Frame { base, vectors })?;
    g.theta = rng.random_range(0.0..2.0);
    Ok(g)
}

fn index_records(config: &RunConfig) -> Vec<Record> {
    let mut out = Vec::new();
    let mut worst_zero = 0f64;
    let mut worst_phase = 0f64;
    for n in 1..=4 {
        let (re, im) = match (
            rotated_real_plane(n, &[]),
            rotated_real_plane(n, &vec![0.5; n]),
        ) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => {
                out.push(Record::error(
                    "grading/index/real_imaginary",
                    "index",
                    &e,
                    Basis::Claimed,
                ));
                return out;
            }
        };
        worst_phase = worst_phase
            .max(re.theta)
            .max(phase_distance(im.theta, n as f64 / 2.0, 2.0));
        match intersection_index(&re, &im) {
            Ok(d) => worst_zero = worst_zero.max(d.abs()),
            Err(e) => {
                out.push(Record::error(
                    "grading/index/real_imaginary",
                    "index",
                    &e,
                    Basis::Claimed,
                ));
                return out;
            }
        }
    }
    out.push(Record::residual(
        "grading/phase/real_imaginary",
        "theta(R^n) = 0, theta((iR)^n) = n/2",
        worst_phase,
        1e-12,
        Basis::Trivial,
    ));
    out.push(Record::residual(
        "grading/index/real_imaginary",
        "index(R^n, (iR)^n; 0, n/2) = 0 for n = 1 to 4",
        worst_zero,
        1e-9,
        Basis::Claimed,
    ));

    let third = (|| -> Result<f64> {
        let a = rotated_real_plane(1, &[])?;
        let mut b = rotated_real_plane(1, &[1.0 / 3.0])?;
        b.theta = a.theta;
        intersection_index(&a, &b)
    })();
    match third {
        Ok(d) => out.push(Record::residual(
            "grading/index/one_third",
            "rotating the line by e^(i pi/3) with equal phases gives index 1/3",
            (d - 1.0 / 3.0).abs(),
            1e-12,
            Basis::Derived,
        )),
        Err(e) => out.push(Record::error(
            "grading/index/one_third",
            "index 1/3",
            &e,
            Basis::Derived,
        )),
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x1d);
    let mut worst = 0f64;
    let mut pairs = 0;
    let mut skipped = 0;
    for k in 0..300 {
        let n = 1 + k % 3;
        let (Ok(a), Ok(b)) = (random_plane(n, &mut rng), random_plane(n, &mut rng)) else {
            continue;
        };
        match (intersection_index(&a, &b), intersection_index(&b, &a)) {
            (Ok(d), Ok(e)) => {
                worst = worst.max((d + e - n as f64).abs());
                pairs += 1;
            }
            _ => skipped += 1,
        }
    }
    out.push(
        Record::residual(
            "grading/index/duality",
            "index(L1, L2) + index(L2, L1) = n",
            worst,
            1e-9,
            Basis::Derived,
        )
        .with_note(format!("{pairs} transverse pairs, {skipped} skipped")),
    );
    out
}
