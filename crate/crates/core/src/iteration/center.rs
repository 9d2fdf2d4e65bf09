use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::geometry::{Point, Space};

/// Largest grid evaluated in one refinement level.
const MAX_GRID_POINTS: usize = 4_000_000;

/// Candidate set for [`asymptotic_center`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CenterSearch {
    /// Coordinate grid on the box `[lo, hi]` (vector or disk coordinates).
    /// Each refinement level re-grids `best +- step` with a tenth of the step.
    Grid {
        lo: Vec<f64>,
        hi: Vec<f64>,
        step: f64,
        #[serde(default)]
        refine: usize,
    },
    /// Grid on the bounding box of the tail widened by `margin`.
    TailBox {
        margin: f64,
        step: f64,
        #[serde(default)]
        refine: usize,
    },
    Candidates { points: Vec<Point> },
    /// Tree vertices plus `per_edge` evenly spaced interior points per edge.
    TreeSamples { per_edge: usize },
}

/// Best candidate for `min_c max_n d(c, x_n)` over the tail, and its value.
pub fn asymptotic_center(space: &Space, tail: &[Point], search: &CenterSearch) -> Result<(Point, f64)> {
    if tail.is_empty() {
        return Err(domain("asymptotic center needs a nonempty tail"));
    }
    for x in tail {
        space.check_point(x)?;
    }
    let radius = |c: &Point| -> Result<f64> {
        tail.iter()
            .try_fold(0.0f64, |m, x| Ok(m.max(space.distance(c, x)?)))
    };
    match search {
        CenterSearch::Candidates { points } => best_of(points.iter().cloned(), radius),
        CenterSearch::TreeSamples { per_edge } => {
            let tree = space
                .tree_ref()
                .ok_or_else(|| domain("tree samples need a metric tree"))?;
            let mut cands = Vec::new();
            for (e, edge) in tree.edges().iter().enumerate() {
                for k in 0..=per_edge + 1 {
                    cands.push(Point::tree(e, edge.length * k as f64 / (per_edge + 1) as f64));
                }
            }
            best_of(cands.into_iter(), radius)
        }
        CenterSearch::Grid { lo, hi, step, refine } => grid_search(space, lo.clone(), hi.clone(), *step, *refine, radius),
        CenterSearch::TailBox { margin, step, refine } => {
            let dim = tail[0].components().len();
            let mut lo = vec![f64::INFINITY; dim];
            let mut hi = vec![f64::NEG_INFINITY; dim];
            for x in tail {
                for (k, c) in x.components().iter().enumerate() {
                    lo[k] = lo[k].min(c - margin);
                    hi[k] = hi[k].max(c + margin);
                }
            }
            grid_search(space, lo, hi, *step, *refine, radius)
        }
    }
}

fn best_of(cands: impl Iterator<Item = Point>, radius: impl Fn(&Point) -> Result<f64>) -> Result<(Point, f64)> {
    let mut best: Option<(Point, f64)> = None;
    for c in cands {
        let r = radius(&c)?;
        if best.as_ref().is_none_or(|(_, b)| r < *b) {
            best = Some((c, r));
        }
    }
    best.ok_or_else(|| domain("empty search set"))
}

fn grid_search(
    space: &Space,
    mut lo: Vec<f64>,
    mut hi: Vec<f64>,
    mut step: f64,
    refine: usize,
    radius: impl Fn(&Point) -> Result<f64>,
) -> Result<(Point, f64)> {
    let make = |c: Vec<f64>| -> Option<Point> {
        let p = match space {
            Space::PoincareDisk if c.len() == 2 => Point::disk(c[0], c[1]),
            Space::Euclidean { .. } | Space::Lp { .. } => Point::vector(c),
            _ => return None,
        };
        space.check_point(&p).ok().map(|_| p)
    };
    if !matches!(space, Space::Euclidean { .. } | Space::Lp { .. } | Space::PoincareDisk) {
        return Err(domain("grid search needs coordinates; use tree samples on trees"));
    }
    if !(step > 0.0) || lo.len() != hi.len() || lo.iter().zip(&hi).any(|(a, b)| !(a <= b)) {
        return Err(domain("grid needs lo <= hi and a positive step"));
    }
    let mut best: Option<(Point, f64)> = None;
    for _ in 0..=refine {
        let counts: Vec<usize> = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| ((b - a) / step + 1e-9).floor() as usize + 1)
            .collect();
        let total = counts.iter().try_fold(1usize, |acc, c| acc.checked_mul(*c));
        if total.is_none_or(|t| t > MAX_GRID_POINTS) {
            return Err(domain("grid too fine for the search box"));
        }
        let mut idx = vec![0usize; lo.len()];
        let level = loop {
            let c: Vec<f64> = idx.iter().zip(&lo).map(|(i, a)| a + *i as f64 * step).collect();
            if let Some(p) = make(c) {
                let r = radius(&p)?;
                if best.as_ref().is_none_or(|(_, b)| r < *b) {
                    best = Some((p, r));
                }
            }
            let mut k = 0;
            loop {
                if k == idx.len() {
                    break;
                }
                idx[k] += 1;
                if idx[k] < counts[k] {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == idx.len() {
                break best.clone();
            }
        };
        let Some((p, _)) = level else {
            return Err(domain("empty search set"));
        };
        let c = p.components();
        lo = c.iter().map(|v| v - step).collect();
        hi = c.iter().map(|v| v + step).collect();
        step /= 10.0;
    }
    best.ok_or_else(|| domain("empty search set"))
}
