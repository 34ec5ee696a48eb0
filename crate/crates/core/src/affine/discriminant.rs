//! Discriminant descriptors and their cross-check against critical points.

use serde::{Deserialize, Serialize};

use crate::affine::amoeba::{amoeba_membership, amoeba_slack};
use crate::error::Result;
use crate::models::{Discriminant, FibrationModel, ModelKind};

/// Distance-like violation of `b ∈ Δ` for an analytic descriptor, or `None`
/// when the descriptor has no formula.
pub fn discriminant_violation(kind: Discriminant, b: &[f64]) -> Option<f64> {
    let v = match kind {
        Discriminant::Point => b.iter().map(|x| x.abs()).fold(0.0, f64::max),
        Discriminant::Line => b[0].abs().max(b[1].abs()),
        Discriminant::Trivalent => {
            let (p, q) = (b[1], b[2]);
            // rays {p = q ≥ 0}, {q = 0 ≥ p}, {p = 0 ≥ q}
            let diag = if p + q >= 0.0 {
                (p - q).abs() / 2f64.sqrt()
            } else {
                p.hypot(q)
            };
            let r2 = if p <= 0.0 { q.abs() } else { p.hypot(q) };
            let r3 = if q <= 0.0 { p.abs() } else { p.hypot(q) };
            b[0].abs() + diag.min(r2).min(r3)
        }
        Discriminant::Amoeba => {
            let x = [b[1], b[2]];
            b[0].abs()
                + if amoeba_membership(x) {
                    0.0
                } else {
                    amoeba_slack(x).max(0.0)
                }
        }
        Discriminant::Boundary => {
            if b.iter().any(|x| *x < 0.0) {
                b.iter().map(|x| (-x).max(0.0)).fold(0.0, f64::max)
            } else {
                b.iter().copied().fold(f64::INFINITY, f64::min)
            }
        }
        Discriminant::PinchedAmoeba => return None,
    };
    Some(v)
}

/// Outcome of [`discriminant_probe`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscriminantProbe {
    pub descriptor: Discriminant,
    /// Points of `Δ` generated from the descriptor.
    pub points: Vec<Vec<f64>>,
    /// `f` of sampled critical points.
    pub crit_images: Vec<Vec<f64>>,
    /// Sampled critical points at which `Df` indeed drops rank.
    pub rank_deficient: usize,
    /// Largest descriptor violation over `crit_images`, if there is a formula.
    pub max_violation: Option<f64>,
}

fn grid(lo: f64, hi: f64, k: usize) -> impl Iterator<Item = f64> + Clone {
    (0..k).map(move |i| lo + (hi - lo) * (i as f64 + 0.5) / k as f64)
}

/// Ambient points of `Crit f` known in closed form for each model.
fn critical_samples(model: &FibrationModel, k: usize) -> Vec<Vec<f64>> {
    let axis = || grid(-2.0, 2.0, k);
    let plane = || axis().flat_map(move |a| axis().map(move |b| (a, b)));
    match model.kind {
        ModelKind::FfNonproper | ModelKind::Nodal => vec![vec![0.0; 4]],
        ModelKind::GenericSingular => {
            let (lo, hi) = model.region[4];
            grid(lo, hi, k)
                .flat_map(|r| grid(-3.0, 3.0, 4).map(move |t| vec![0.0, 0.0, 0.0, 0.0, r, t]))
                .collect()
        }
        ModelKind::PositiveProper | ModelKind::HarveyLawson => (0..3)
            .flat_map(|j| {
                plane().map(move |(a, b)| {
                    let mut x = vec![0.0; 6];
                    x[2 * j] = a;
                    x[2 * j + 1] = b;
                    x
                })
            })
            .collect(),
        ModelKind::NegativeAmoeba | ModelKind::NegativeThin(_) => {
            let s = if matches!(model.kind, ModelKind::NegativeThin(_)) {
                0.3
            } else {
                1.0
            };
            plane()
                .map(|(a, b)| vec![0.0, 0.0, 0.0, 0.0, s * a, s * b])
                .filter(|x| model.in_domain(x))
                .collect()
        }
        ModelKind::ToricReference => (0..2)
            .flat_map(|j| {
                plane().map(move |(a, b)| {
                    let mut x = vec![0.0; 4];
                    x[2 * j] = a;
                    x[2 * j + 1] = b;
                    x
                })
            })
            .collect(),
    }
}

/// Points of `Δ` drawn from the descriptor.
fn descriptor_points(kind: Discriminant, k: usize) -> Vec<Vec<f64>> {
    match kind {
        Discriminant::Point => vec![vec![0.0, 0.0]],
        Discriminant::Line => grid(0.0, 1.0, k).map(|r| vec![0.0, 0.0, r]).collect(),
        Discriminant::Trivalent => grid(0.0, 2.0, k)
            .flat_map(|t| [vec![0.0, t, t], vec![0.0, -t, 0.0], vec![0.0, 0.0, -t]])
            .collect(),
        Discriminant::Amoeba => grid(-3.0, 3.0, k)
            .flat_map(|p| grid(-3.0, 3.0, k).map(move |q| vec![0.0, p, q]))
            .filter(|b| amoeba_membership([b[1], b[2]]))
            .collect(),
        Discriminant::Boundary => grid(0.0, 2.0, k)
            .flat_map(|t| [vec![0.0, t], vec![t, 0.0]])
            .collect(),
        Discriminant::PinchedAmoeba => Vec::new(),
    }
}

/// Evaluates the model's discriminant descriptor and cross-checks it: the
/// images of sampled critical points must satisfy it.
pub fn discriminant_probe(model: &FibrationModel, resolution: usize) -> Result<DiscriminantProbe> {
    let crit = critical_samples(model, resolution.max(1));
    let mut images = Vec::with_capacity(crit.len());
    let mut rank_deficient = 0;
    for x in &crit {
        let p = model.point(x.clone())?;
        if !model.is_regular(&p, 1e-8)?.regular {
            rank_deficient += 1;
        }
        images.push(model.eval(&p)?);
    }
    let max_violation = images
        .iter()
        .map(|b| discriminant_violation(model.discriminant, b))
        .try_fold(0.0, |acc: f64, v| v.map(|v| acc.max(v)));
    Ok(DiscriminantProbe {
        descriptor: model.discriminant,
        points: descriptor_points(model.discriminant, resolution.max(1)),
        crit_images: images,
        rank_deficient,
        max_violation,
    })
}
