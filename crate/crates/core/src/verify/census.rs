//! Monte-Carlo census of the fixed locus of an involution.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::models::{FibrationModel, Symmetry};
use crate::verify::checks::{dist_max, dist_periodic};
use crate::verify::cloud::candidates;
use crate::verify::fixed::fixed_point_on_fiber;

/// Census parameters. `eps_link = None` uses four times the sampling
/// spacing estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CensusOptions {
    pub n_samples: usize,
    pub seed: u64,
    pub eps_fix: f64,
    pub eps_link: Option<f64>,
    /// Samples closer than `guard_margin · eps_link` to a guard are dropped.
    pub guard_margin: f64,
    /// Fibres tested per component for the section flag.
    pub fibre_tests: usize,
    /// Points whose component is reported (e.g. the known seeds of a model).
    pub probes: Vec<Vec<f64>>,
}

impl Default for CensusOptions {
    fn default() -> Self {
        CensusOptions {
            n_samples: 200_000,
            seed: 42,
            eps_fix: 1e-9,
            eps_link: None,
            guard_margin: 0.75,
            fibre_tests: 32,
            probes: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentSummary {
    pub representative: Vec<f64>,
    pub sample_count: usize,
    /// `f` restricted to the component met every tested fibre once.
    pub section_flag: bool,
    /// Histogram of preimage counts over tested fibres: entry `k` counts
    /// fibres met `k` times.
    pub fibre_counts: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CensusResult {
    pub component_count: usize,
    pub components: Vec<ComponentSummary>,
    pub n_samples: usize,
    pub seed: u64,
    pub fixed_samples: usize,
    pub eps_link: f64,
    /// Components discarded as noise.
    pub dropped_components: usize,
    /// Component index of each probe point.
    pub probe_components: Vec<Option<usize>>,
}

impl CensusResult {
    pub fn section_count(&self) -> usize {
        self.components.iter().filter(|c| c.section_flag).count()
    }
}

/// Pushes `x` onto the fixed set by `x ← ½(x + φ(x))`.
fn project(model: &FibrationModel, sym: &Symmetry, x: &[f64], eps_fix: f64) -> Option<Vec<f64>> {
    let mut y = x.to_vec();
    for _ in 0..50 {
        if !model.in_domain(&y) {
            return None;
        }
        let p = sym.map.eval(&y).ok()?;
        if dist_periodic(&p, &y, &model.periodic) <= eps_fix {
            return Some(y);
        }
        y = y.iter().zip(&p).map(|(a, b)| 0.5 * (a + b)).collect();
    }
    None
}

/// Coordinates used for distances: angles become points of a circle.
fn embed(model: &FibrationModel, x: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len() + model.periodic.len());
    for (i, &v) in x.iter().enumerate() {
        match model.periodic.iter().find(|(j, _)| *j == i) {
            Some(&(_, p)) => {
                let r = p / std::f64::consts::TAU;
                let a = v / r;
                out.push(r * a.cos());
                out.push(r * a.sin());
            }
            None => out.push(v),
        }
    }
    out
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Hash grid over embedded points with cells of side `cell`.
struct Grid {
    cell: f64,
    dims: Vec<usize>,
    cells: HashMap<Vec<i64>, Vec<usize>>,
}

impl Grid {
    fn new(points: &[Vec<f64>], dims: Vec<usize>, cell: f64) -> Self {
        let mut cells: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells
                .entry(Self::key_of(&dims, cell, p))
                .or_default()
                .push(i);
        }
        Grid { cell, dims, cells }
    }

    fn key_of(dims: &[usize], cell: f64, p: &[f64]) -> Vec<i64> {
        dims.iter().map(|&d| (p[d] / cell).floor() as i64).collect()
    }

    fn key(&self, p: &[f64]) -> Vec<i64> {
        Self::key_of(&self.dims, self.cell, p)
    }

    /// Cell keys within `reach` cells of `key` in every direction.
    fn around(&self, key: &[i64], reach: i64) -> Vec<Vec<i64>> {
        let mut out = vec![Vec::with_capacity(key.len())];
        for &k in key {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    (-reach..=reach).map(move |o| {
                        let mut q = prefix.clone();
                        q.push(k + o);
                        q
                    })
                })
                .collect();
        }
        out
    }

    /// Points within `radius` of `p`.
    fn within(&self, points: &[Vec<f64>], p: &[f64], radius: f64) -> Vec<usize> {
        let reach = (radius / self.cell).ceil() as i64;
        let r2 = radius * radius;
        let mut out = Vec::new();
        for k in self.around(&self.key(p), reach) {
            if let Some(ids) = self.cells.get(&k) {
                out.extend(ids.iter().copied().filter(|&i| dist2(&points[i], p) <= r2));
            }
        }
        out
    }
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

/// Four times the spacing of `n` points spread over the fixed locus, whose
/// volume is estimated from the extents of the embedded samples.
fn default_link(points: &[Vec<f64>], base_dim: usize) -> f64 {
    let dim = points[0].len();
    let mut extents: Vec<f64> = (0..dim)
        .map(|d| {
            let (lo, hi) = points
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                    (lo.min(p[d]), hi.max(p[d]))
                });
            hi - lo
        })
        .collect();
    extents.sort_by(|a, b| b.total_cmp(a));
    let vol: f64 = extents
        .iter()
        .take(base_dim)
        .map(|e| e.max(1e-12))
        .product();
    4.0 * (vol / points.len() as f64).powf(1.0 / base_dim as f64)
}

/// Links every pair of points closer than `eps`. Cells have side
/// `eps/√d` so that points sharing a cell are always linked.
fn link_components(points: &[Vec<f64>], dims: &[usize], eps: f64) -> UnionFind {
    let d = dims.len().max(1);
    let cell = eps / (d as f64).sqrt();
    let grid = Grid::new(points, dims.to_vec(), cell);
    let mut uf = UnionFind::new(points.len());
    let mut keys: Vec<&Vec<i64>> = grid.cells.keys().collect();
    keys.sort();
    for k in &keys {
        let ids = &grid.cells[*k];
        for w in ids.windows(2) {
            uf.union(w[0], w[1]);
        }
    }
    let reach = (d as f64).sqrt().ceil() as i64;
    let eps2 = eps * eps;
    for k in &keys {
        let ids = &grid.cells[*k];
        for nk in grid.around(k, reach) {
            if nk <= **k {
                continue;
            }
            let Some(other) = grid.cells.get(&nk) else {
                continue;
            };
            if uf.find(ids[0]) == uf.find(other[0]) {
                continue;
            }
            'pairs: for &i in ids {
                for &j in other {
                    if dist2(&points[i], &points[j]) <= eps2 {
                        uf.union(i, j);
                        break 'pairs;
                    }
                }
            }
        }
    }
    uf
}

/// Samples the fixed locus of `sym` inside `region`, links samples closer
/// than `eps_link` and reports the connected components. A component is
/// flagged as a section when, over the tested fibres, it meets at least 90%
/// of them exactly once.
pub fn fixed_locus_census(
    model: &FibrationModel,
    sym: &Symmetry,
    region: &[(f64, f64)],
    opts: &CensusOptions,
) -> Result<CensusResult> {
    if region.len() != model.ambient_dim() {
        return Err(GeomError::DimensionMismatch {
            expected: model.ambient_dim(),
            got: region.len(),
        });
    }
    let raw = candidates(opts.seed, region, opts.n_samples);
    let fixed: Vec<Vec<f64>> = raw
        .par_iter()
        .filter_map(|x| project(model, sym, x, opts.eps_fix))
        .filter(|y| {
            model
                .fibration
                .eval(y)
                .map(|v| v.iter().all(|c| c.is_finite()))
                .unwrap_or(false)
        })
        .collect();
    let needed = 64;
    if fixed.len() < needed {
        return Err(GeomError::TooFewFixedSamples {
            found: fixed.len(),
            needed,
        });
    }
    let embedded: Vec<Vec<f64>> = fixed.iter().map(|x| embed(model, x)).collect();
    let eps_link = opts
        .eps_link
        .unwrap_or_else(|| default_link(&embedded, model.base_dim));

    // drop samples near the guards, where the fixed set touches the removed locus
    let margin = opts.guard_margin * eps_link;
    let keep: Vec<bool> = fixed
        .par_iter()
        .map(|x| model.guards.is_empty() || model.guard_distance(x) > margin)
        .collect();
    let (fixed, embedded): (Vec<Vec<f64>>, Vec<Vec<f64>>) = fixed
        .into_iter()
        .zip(embedded)
        .zip(&keep)
        .filter(|(_, k)| **k)
        .map(|(p, _)| p)
        .unzip();
    if fixed.len() < needed {
        return Err(GeomError::TooFewFixedSamples {
            found: fixed.len(),
            needed,
        });
    }

    // grid over the coordinates that actually vary on the fixed set
    let dim = embedded[0].len();
    let dims: Vec<usize> = (0..dim)
        .filter(|&d| {
            let (lo, hi) = embedded
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                    (lo.min(p[d]), hi.max(p[d]))
                });
            hi - lo > 1e-9
        })
        .collect();
    let mut uf = link_components(&embedded, &dims, eps_link);

    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..fixed.len() {
        let r = uf.find(i);
        groups.entry(r).or_default().push(i);
    }
    let mut groups: Vec<Vec<usize>> = groups.into_values().collect();
    groups.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    let min_size = (fixed.len() / 1000).max(10);
    let total = groups.len();
    groups.retain(|g| g.len() >= min_size);
    let dropped_components = total - groups.len();

    let mut label = vec![usize::MAX; fixed.len()];
    for (c, g) in groups.iter().enumerate() {
        for &i in g {
            label[i] = c;
        }
    }
    let values: Vec<Vec<f64>> = fixed
        .par_iter()
        .map(|x| model.fibration.eval(x).unwrap_or_default())
        .collect();
    let grid = Grid::new(
        &embedded,
        dims.clone(),
        eps_link / (dims.len().max(1) as f64).sqrt(),
    );
    let ctx = Ctx {
        model,
        sym,
        fixed: &fixed,
        embedded: &embedded,
        values: &values,
        label: &label,
        grid: &grid,
        eps_link,
    };

    let components: Vec<ComponentSummary> = groups
        .iter()
        .enumerate()
        .map(|(c, g)| ctx.summarize(c, g, opts.fibre_tests))
        .collect();
    let probe_components = opts.probes.iter().map(|p| ctx.locate(p, true)).collect();

    Ok(CensusResult {
        component_count: components.len(),
        components,
        n_samples: opts.n_samples,
        seed: opts.seed,
        fixed_samples: fixed.len(),
        eps_link,
        dropped_components,
        probe_components,
    })
}

struct Ctx<'a> {
    model: &'a FibrationModel,
    sym: &'a Symmetry,
    fixed: &'a [Vec<f64>],
    embedded: &'a [Vec<f64>],
    values: &'a [Vec<f64>],
    label: &'a [usize],
    grid: &'a Grid,
    eps_link: f64,
}

impl Ctx<'_> {
    /// Component of the nearest sample within `2·eps_link` that lies on the
    /// same side of every guard, optionally falling back to a full scan.
    fn locate(&self, x: &[f64], full_scan: bool) -> Option<usize> {
        let e = embed(self.model, x);
        let signs = self.model.guard_signs(x);
        let best = |ids: &mut dyn Iterator<Item = usize>| {
            ids.filter(|&i| {
                self.label[i] != usize::MAX && self.model.guard_signs(&self.fixed[i]) == signs
            })
            .min_by(|&a, &b| dist2(&self.embedded[a], &e).total_cmp(&dist2(&self.embedded[b], &e)))
        };
        let near = self.grid.within(self.embedded, &e, 2.0 * self.eps_link);
        best(&mut near.into_iter())
            .or_else(|| {
                if full_scan {
                    best(&mut (0..self.fixed.len()))
                } else {
                    None
                }
            })
            .map(|i| self.label[i])
    }

    fn summarize(&self, c: usize, members: &[usize], tests: usize) -> ComponentSummary {
        let dim = self.embedded[members[0]].len();
        let centroid: Vec<f64> = (0..dim)
            .map(|d| {
                members.iter().map(|&i| self.embedded[i][d]).sum::<f64>() / members.len() as f64
            })
            .collect();
        let rep = *members
            .iter()
            .min_by(|&&a, &&b| {
                dist2(&self.embedded[a], &centroid).total_cmp(&dist2(&self.embedded[b], &centroid))
            })
            .expect("components are non-empty");

        let tests = tests.min(members.len());
        let picks: Vec<usize> = (0..tests)
            .map(|k| members[k * members.len() / tests])
            .collect();
        let counts: Vec<usize> = picks
            .par_iter()
            .filter_map(|&p| self.preimages(c, members, p))
            .collect();
        let top = counts.iter().copied().max().unwrap_or(0);
        let mut hist = vec![0; top + 1];
        for &k in &counts {
            hist[k] += 1;
        }
        let ones = hist.get(1).copied().unwrap_or(0);
        let section_flag = counts.len() >= tests.min(8) && ones * 10 >= counts.len() * 9;
        ComponentSummary {
            representative: self.fixed[rep].clone(),
            sample_count: members.len(),
            section_flag,
            fibre_counts: hist,
        }
    }

    /// Number of distinct fixed points of component `c` over `f(x_p)`,
    /// found by Gauss–Newton from the members whose values are nearest.
    fn preimages(&self, c: usize, members: &[usize], p: usize) -> Option<usize> {
        const SEEDS: usize = 24;
        let b = &self.values[p];
        let mut near: Vec<(f64, usize)> = members
            .iter()
            .map(|&i| (dist_max(&self.values[i], b), i))
            .collect();
        let k = SEEDS.min(near.len());
        near.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0));
        near.truncate(k);
        near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let mut found: Vec<Vec<f64>> = Vec::new();
        for &(_, i) in &near {
            let Ok(x) = fixed_point_on_fiber(self.model, self.sym, b, &self.fixed[i], 1e-10) else {
                continue;
            };
            if found
                .iter()
                .any(|q| dist_periodic(q, &x, &self.model.periodic) < 1e-6)
            {
                continue;
            }
            if self.locate(&x, false) == Some(c) {
                found.push(x);
            }
        }
        (!found.is_empty()).then_some(found.len())
    }
}
