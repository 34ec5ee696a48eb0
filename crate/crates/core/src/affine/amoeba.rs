//! The amoeba of `v₁ + v₂ + 1 = 0`: membership, rasters, contours and a
//! sampling oracle.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};

/// `max(r₁ − r₂ − 1, r₂ − r₁ − 1, 1 − r₁ − r₂)` with `rᵢ = e^{xᵢ}`; the
/// amoeba is `{slack ≤ 0}`.
pub fn amoeba_slack(x: [f64; 2]) -> f64 {
    let (r1, r2) = (x[0].exp(), x[1].exp());
    (r1 - r2 - 1.0).max(r2 - r1 - 1.0).max(1.0 - r1 - r2)
}

/// Whether `x = Log(v)` for some `v` with `v₁ + v₂ + 1 = 0`: the moduli
/// `r₁, r₂, 1` must satisfy the triangle inequalities.
pub fn amoeba_membership(x: [f64; 2]) -> bool {
    let (r1, r2) = (x[0].exp(), x[1].exp());
    r1 <= r2 + 1.0 && r2 <= r1 + 1.0 && 1.0 <= r1 + r2
}

/// Raster window and resolution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmoebaSpec {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub nx: usize,
    pub ny: usize,
}

impl AmoebaSpec {
    pub fn new(lo: [f64; 2], hi: [f64; 2], nx: usize, ny: usize) -> Result<Self> {
        if lo.iter().chain(&hi).any(|v| !v.is_finite()) || hi[0] <= lo[0] || hi[1] <= lo[1] {
            return Err(GeomError::Config(
                "amoeba window must be a finite non-empty box".into(),
            ));
        }
        if nx < 2 || ny < 2 {
            return Err(GeomError::Config(
                "amoeba raster needs at least 2 cells per axis".into(),
            ));
        }
        Ok(AmoebaSpec { lo, hi, nx, ny })
    }

    /// Square `n × n` grid on `[−half, half]²`.
    pub fn square(half: f64, n: usize) -> Result<Self> {
        Self::new([-half, -half], [half, half], n, n)
    }

    pub fn cell(&self) -> [f64; 2] {
        [
            (self.hi[0] - self.lo[0]) / self.nx as f64,
            (self.hi[1] - self.lo[1]) / self.ny as f64,
        ]
    }

    /// Centre of cell `(i, j)`; `i` indexes `x₁`, `j` indexes `x₂`.
    pub fn center(&self, i: usize, j: usize) -> [f64; 2] {
        let c = self.cell();
        [
            self.lo[0] + (i as f64 + 0.5) * c[0],
            self.lo[1] + (j as f64 + 0.5) * c[1],
        ]
    }

    fn index_of(&self, x: [f64; 2]) -> Option<(usize, usize)> {
        let c = self.cell();
        let i = ((x[0] - self.lo[0]) / c[0]).floor();
        let j = ((x[1] - self.lo[1]) / c[1]).floor();
        (i >= 0.0 && j >= 0.0 && (i as usize) < self.nx && (j as usize) < self.ny)
            .then_some((i as usize, j as usize))
    }
}

/// Cell-centre membership, stored row by row (`j` major).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmoebaRaster {
    pub spec: AmoebaSpec,
    pub inside: Vec<bool>,
    /// Boundary polylines from marching squares on [`amoeba_slack`].
    pub contour: Vec<Vec<[f64; 2]>>,
}

impl AmoebaRaster {
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.inside[j * self.spec.nx + i]
    }

    pub fn inside_count(&self) -> usize {
        self.inside.iter().filter(|v| **v).count()
    }

    /// Plain-text PGM (P2): amoeba cells black, complement white, top row
    /// at the largest `x₂`.
    pub fn to_pgm(&self) -> String {
        let AmoebaSpec { nx, ny, .. } = self.spec;
        let mut out = format!("P2\n{nx} {ny}\n255\n");
        for j in (0..ny).rev() {
            let row: Vec<&str> = (0..nx)
                .map(|i| if self.get(i, j) { "0" } else { "255" })
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    /// CSV `polyline,x1,x2` of the contour vertices.
    pub fn contour_csv(&self) -> String {
        let mut out = String::from("polyline,x1,x2\n");
        for (k, line) in self.contour.iter().enumerate() {
            for p in line {
                let _ = writeln!(out, "{k},{},{}", p[0], p[1]);
            }
        }
        out
    }

    /// Whether the raster is unchanged by swapping the axes.
    pub fn is_swap_symmetric(&self) -> bool {
        let AmoebaSpec { nx, ny, lo, hi } = self.spec;
        if nx != ny || lo[0] != lo[1] || hi[0] != hi[1] {
            return false;
        }
        (0..nx).all(|i| (0..ny).all(|j| self.get(i, j) == self.get(j, i)))
    }
}

pub fn amoeba_raster(spec: &AmoebaSpec) -> AmoebaRaster {
    let inside: Vec<bool> = (0..spec.nx * spec.ny)
        .into_par_iter()
        .map(|k| amoeba_membership(spec.center(k % spec.nx, k / spec.nx)))
        .collect();
    AmoebaRaster {
        spec: *spec,
        inside,
        contour: contour(spec),
    }
}

/// Components of the complement under 4-connectivity, and how many of them
/// touch the window border (the unbounded ones, for a large window).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplementCount {
    pub total: usize,
    pub unbounded: usize,
}

pub fn complement_components(r: &AmoebaRaster) -> ComplementCount {
    let AmoebaSpec { nx, ny, .. } = r.spec;
    let mut seen = vec![false; nx * ny];
    let mut count = ComplementCount {
        total: 0,
        unbounded: 0,
    };
    let mut stack = Vec::new();
    for start in 0..nx * ny {
        if seen[start] || r.inside[start] {
            continue;
        }
        count.total += 1;
        let mut border = false;
        seen[start] = true;
        stack.push(start);
        while let Some(k) = stack.pop() {
            let (i, j) = (k % nx, k / nx);
            if i == 0 || j == 0 || i == nx - 1 || j == ny - 1 {
                border = true;
            }
            let mut push = |ii: usize, jj: usize| {
                let q = jj * nx + ii;
                if !seen[q] && !r.inside[q] {
                    seen[q] = true;
                    stack.push(q);
                }
            };
            if i > 0 {
                push(i - 1, j);
            }
            if i + 1 < nx {
                push(i + 1, j);
            }
            if j > 0 {
                push(i, j - 1);
            }
            if j + 1 < ny {
                push(i, j + 1);
            }
        }
        if border {
            count.unbounded += 1;
        }
    }
    count
}

fn lerp(a: [f64; 2], b: [f64; 2], fa: f64, fb: f64) -> [f64; 2] {
    let t = if fa == fb { 0.5 } else { fa / (fa - fb) };
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

/// Marching squares on the zero set of [`amoeba_slack`] over the lattice of
/// cell centres, with segments chained into polylines.
fn contour(spec: &AmoebaSpec) -> Vec<Vec<[f64; 2]>> {
    let (nx, ny) = (spec.nx, spec.ny);
    let vals: Vec<f64> = (0..nx * ny)
        .map(|k| amoeba_slack(spec.center(k % nx, k / nx)))
        .collect();
    let v = |i: usize, j: usize| vals[j * nx + i];
    let mut segments: Vec<([f64; 2], [f64; 2])> = Vec::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let p = [
                spec.center(i, j),
                spec.center(i + 1, j),
                spec.center(i + 1, j + 1),
                spec.center(i, j + 1),
            ];
            let f = [v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1)];
            // crossing points on the four edges, in order
            let mut cross = Vec::with_capacity(4);
            for e in 0..4 {
                let (a, b) = (e, (e + 1) % 4);
                if (f[a] <= 0.0) != (f[b] <= 0.0) {
                    cross.push(lerp(p[a], p[b], f[a], f[b]));
                }
            }
            match cross.len() {
                2 => segments.push((cross[0], cross[1])),
                4 => {
                    // saddle: decide by the centre value
                    let mid = amoeba_slack([(p[0][0] + p[2][0]) / 2.0, (p[0][1] + p[2][1]) / 2.0]);
                    if (mid <= 0.0) == (f[0] <= 0.0) {
                        segments.push((cross[0], cross[1]));
                        segments.push((cross[2], cross[3]));
                    } else {
                        segments.push((cross[0], cross[3]));
                        segments.push((cross[1], cross[2]));
                    }
                }
                _ => {}
            }
        }
    }
    chain(segments)
}

fn chain(segments: Vec<([f64; 2], [f64; 2])>) -> Vec<Vec<[f64; 2]>> {
    let key = |p: [f64; 2]| ((p[0] * 1e9).round() as i64, (p[1] * 1e9).round() as i64);
    let mut ends: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (k, (a, b)) in segments.iter().enumerate() {
        ends.entry(key(*a)).or_default().push(k);
        ends.entry(key(*b)).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let mut line = vec![segments[start].0, segments[start].1];
        // extend forward from the tail, then backward from the head
        for forward in [true, false] {
            loop {
                let tip = if forward {
                    *line.last().unwrap()
                } else {
                    line[0]
                };
                let Some(&next) = ends
                    .get(&key(tip))
                    .and_then(|c| c.iter().find(|&&s| !used[s]))
                else {
                    break;
                };
                used[next] = true;
                let (a, b) = segments[next];
                let other = if key(a) == key(tip) { b } else { a };
                if forward {
                    line.push(other);
                } else {
                    line.insert(0, other);
                }
            }
        }
        lines.push(line);
    }
    lines
}

/// Raster built only from sampled points of `Log(Σ)`: `v₂ = e^{s + iθ}`
/// runs over a grid in `(s, θ)`, `v₁ = −1 − v₂`, and every cell hit by some
/// `(log|v₁|, log|v₂|)` is marked.
pub fn sampled_amoeba(spec: &AmoebaSpec, per_cell: usize, angles: usize) -> Vec<bool> {
    let cell = spec.cell();
    let ds = cell[1] / per_cell.max(1) as f64;
    let s_count = ((spec.hi[1] - spec.lo[1]) / ds).ceil() as usize + 1;
    let hits: Vec<(usize, usize)> = (0..s_count)
        .into_par_iter()
        .flat_map_iter(|k| {
            let s = spec.lo[1] + (k as f64 + 0.5) * ds;
            (0..angles).filter_map(move |m| {
                let th = TAU * (m as f64 + 0.5) / angles as f64;
                let v2 = Complex64::from_polar(s.exp(), th);
                let v1 = -1.0 - v2;
                spec.index_of([v1.norm().ln(), s])
            })
        })
        .collect();
    let mut out = vec![false; spec.nx * spec.ny];
    for (i, j) in hits {
        out[j * spec.nx + i] = true;
    }
    out
}

/// Cells whose 3×3 neighbourhood the boundary passes through, detected by
/// a sign change of the slack on a sub-grid.
pub fn near_boundary(spec: &AmoebaSpec) -> Vec<bool> {
    let cell = spec.cell();
    (0..spec.nx * spec.ny)
        .into_par_iter()
        .map(|k| {
            let c = spec.center(k % spec.nx, k / spec.nx);
            let mut neg = false;
            let mut pos = false;
            for a in 0..=12 {
                for b in 0..=12 {
                    let x = [
                        c[0] + (a as f64 / 12.0 * 3.0 - 1.5) * cell[0],
                        c[1] + (b as f64 / 12.0 * 3.0 - 1.5) * cell[1],
                    ];
                    if amoeba_slack(x) <= 0.0 {
                        neg = true;
                    } else {
                        pos = true;
                    }
                }
            }
            neg && pos
        })
        .collect()
}
