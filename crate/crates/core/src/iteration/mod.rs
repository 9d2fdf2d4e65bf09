//! Iterative schemes and orbit diagnostics.

mod center;
pub mod inequalities;

pub use center::{asymptotic_center, CenterSearch};

use serde::{Deserialize, Serialize};

use crate::error::{domain, GeoError, Result};
use crate::geometry::{Point, Space};
use crate::mappings::Mapping;
use crate::sets::ConvexSet;

/// Points kept in a trace before thinning starts.
pub const DEFAULT_POINT_CAP: usize = 10_000;

/// Longest period searched by [`periodic_point_probe`].
pub const MAX_PERIOD: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Picard,
    AlternatingProjection,
    Parallel,
}

impl Scheme {
    /// First gap index from which the gaps are nonincreasing. An alternating
    /// run only settles into the sets after its first projection.
    pub fn monotone_from(self) -> usize {
        match self {
            Scheme::AlternatingProjection => 1,
            _ => 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// A gap fell to `eps_stop`.
    Converged,
    /// `n_max` steps were taken.
    MaxSteps,
}

/// Recorded orbit `x_0, x_1, ...` with every gap `d(x_n, x_{n+1})`.
///
/// Points are kept in full up to the cap; past it the stride doubles and only
/// iterates on the stride are retained (plus the final iterate).
/// `point_indices[k]` is the iterate number of `points[k]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitTrace {
    pub scheme: Scheme,
    pub points: Vec<Point>,
    pub point_indices: Vec<usize>,
    pub gaps: Vec<f64>,
    pub stop: StopReason,
    pub config_digest: String,
}

impl OrbitTrace {
    /// A trace from explicit points, gaps computed in `space`.
    pub fn from_points(space: &Space, scheme: Scheme, points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(domain("a trace needs at least one point"));
        }
        let gaps = points
            .windows(2)
            .map(|w| space.distance(&w[0], &w[1]))
            .collect::<Result<_>>()?;
        Ok(OrbitTrace {
            scheme,
            point_indices: (0..points.len()).collect(),
            points,
            gaps,
            stop: StopReason::MaxSteps,
            config_digest: String::new(),
        })
    }

    pub fn with_digest(mut self, digest: impl Into<String>) -> Self {
        self.config_digest = digest.into();
        self
    }

    pub fn steps(&self) -> usize {
        self.gaps.len()
    }

    pub fn is_thinned(&self) -> bool {
        self.points.len() != self.gaps.len() + 1
    }

    pub fn first_point(&self) -> &Point {
        &self.points[0]
    }

    pub fn last_point(&self) -> &Point {
        self.points.last().expect("trace is nonempty")
    }

    /// Stored points whose successor iterate is also stored, as
    /// `(iterate number, x_n, x_{n+1})`.
    pub fn consecutive(&self) -> impl Iterator<Item = (usize, &Point, &Point)> + '_ {
        (0..self.points.len().saturating_sub(1)).filter_map(move |k| {
            let n = self.point_indices[k];
            (self.point_indices[k + 1] == n + 1).then(|| (n, &self.points[k], &self.points[k + 1]))
        })
    }

    /// Last quarter of the stored points (at least one).
    pub fn tail(&self) -> &[Point] {
        let len = self.points.len();
        &self.points[len - (len / 4).max(1)..]
    }
}

/// Least `n` such that every recorded gap from `n` on is at most `eps`.
///
/// On nonincreasing gap sequences this is the first `n` with
/// `gaps[n] <= eps`. `None` when the last gap is still above `eps`.
pub fn regularity_index(trace: &OrbitTrace, eps: f64) -> Result<Option<usize>> {
    if !(eps > 0.0) {
        return Err(domain(format!("eps must be positive, got {eps}")));
    }
    let gaps = &trace.gaps;
    match gaps.iter().rposition(|g| !(*g <= eps)) {
        None => Ok(Some(0)),
        Some(k) if k + 1 < gaps.len() => Ok(Some(k + 1)),
        Some(_) => Ok(None),
    }
}

/// The last gap: along an orbit of a nonexpansive map the gaps decrease to
/// the minimal displacement, so this is an anytime upper estimate of it.
pub fn minimal_displacement_estimate(trace: &OrbitTrace) -> f64 {
    trace.gaps.last().copied().unwrap_or(0.0)
}

struct Recorder {
    points: Vec<Point>,
    indices: Vec<usize>,
    gaps: Vec<f64>,
    cap: usize,
    stride: usize,
    last: Point,
}

impl Recorder {
    fn new(x0: Point, cap: usize) -> Self {
        Recorder {
            points: vec![x0.clone()],
            indices: vec![0],
            gaps: Vec::new(),
            cap: cap.max(2),
            stride: 1,
            last: x0,
        }
    }

    fn push(&mut self, space: &Space, x: Point) -> Result<f64> {
        let step = self.gaps.len() + 1;
        if !x.is_finite() {
            return Err(GeoError::NumericFailure {
                step,
                detail: format!("non-finite iterate {:?}", x.components()),
            });
        }
        let gap = space.distance(&self.last, &x)?;
        if !gap.is_finite() {
            return Err(GeoError::NumericFailure {
                step,
                detail: "non-finite gap".into(),
            });
        }
        self.gaps.push(gap);
        if step.is_multiple_of(self.stride) {
            self.points.push(x.clone());
            self.indices.push(step);
            if self.points.len() > self.cap {
                self.stride *= 2;
                let keep: Vec<bool> = self.indices.iter().map(|i| i % self.stride == 0).collect();
                let mut it = keep.iter();
                self.points.retain(|_| *it.next().unwrap());
                self.indices.retain(|i| i % self.stride == 0);
            }
        }
        self.last = x;
        Ok(gap)
    }

    fn finish(mut self, scheme: Scheme, stop: StopReason) -> OrbitTrace {
        let n = self.gaps.len();
        if self.indices.last() != Some(&n) {
            self.points.push(self.last);
            self.indices.push(n);
        }
        OrbitTrace {
            scheme,
            points: self.points,
            point_indices: self.indices,
            gaps: self.gaps,
            stop,
            config_digest: String::new(),
        }
    }
}

fn check_limits(n_max: usize, eps_stop: f64) -> Result<()> {
    if n_max < 1 {
        return Err(domain("n_max must be at least 1"));
    }
    if !(eps_stop >= 0.0) {
        return Err(domain(format!("eps_stop must be >= 0, got {eps_stop}")));
    }
    Ok(())
}

/// Picard iterates `T^n x0` until a gap is at most `eps_stop` or `n_max`
/// steps have been taken.
pub fn picard_orbit(space: &Space, m: &Mapping, x0: &Point, n_max: usize, eps_stop: f64) -> Result<OrbitTrace> {
    picard_orbit_capped(space, m, x0, n_max, eps_stop, DEFAULT_POINT_CAP)
}

pub fn picard_orbit_capped(
    space: &Space,
    m: &Mapping,
    x0: &Point,
    n_max: usize,
    eps_stop: f64,
    point_cap: usize,
) -> Result<OrbitTrace> {
    check_limits(n_max, eps_stop)?;
    m.validate(space)?;
    space.check_point(x0)?;
    let scheme = match m {
        Mapping::Composite { .. } => Scheme::Parallel,
        _ => Scheme::Picard,
    };
    let mut rec = Recorder::new(x0.clone(), point_cap);
    for step in 1..=n_max {
        let next = m.apply(space, &rec.last).map_err(|e| at_step(e, step))?;
        if rec.push(space, next)? <= eps_stop {
            return Ok(rec.finish(scheme, StopReason::Converged));
        }
    }
    Ok(rec.finish(scheme, StopReason::MaxSteps))
}

/// `x_{2n-1} = P_A x_{2n-2}`, `x_{2n} = P_B x_{2n-1}`; each projection is one
/// step. Stopping on a small gap is only allowed once the orbit lies in the
/// sets, that is from the second step on.
pub fn alternating_projections(
    space: &Space,
    a: &ConvexSet,
    b: &ConvexSet,
    x0: &Point,
    n_max: usize,
    eps_stop: f64,
) -> Result<OrbitTrace> {
    alternating_projections_capped(space, a, b, x0, n_max, eps_stop, DEFAULT_POINT_CAP)
}

pub fn alternating_projections_capped(
    space: &Space,
    a: &ConvexSet,
    b: &ConvexSet,
    x0: &Point,
    n_max: usize,
    eps_stop: f64,
    point_cap: usize,
) -> Result<OrbitTrace> {
    check_limits(n_max, eps_stop)?;
    a.validate(space)?;
    b.validate(space)?;
    space.check_point(x0)?;
    let mut rec = Recorder::new(x0.clone(), point_cap);
    for step in 1..=n_max {
        let set = if step % 2 == 1 { a } else { b };
        let next = set.project(space, &rec.last).map_err(|e| at_step(e, step))?.projected;
        if rec.push(space, next)? <= eps_stop && step >= 2 {
            return Ok(rec.finish(Scheme::AlternatingProjection, StopReason::Converged));
        }
    }
    Ok(rec.finish(Scheme::AlternatingProjection, StopReason::MaxSteps))
}

fn at_step(e: GeoError, step: usize) -> GeoError {
    match e {
        GeoError::NumericFailure { .. } => e,
        other => GeoError::NumericFailure {
            step,
            detail: other.to_string(),
        },
    }
}

/// Outcome of [`periodic_point_probe`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PeriodicReport {
    /// `(n, k)` with `d(x_n, x_{n+k}) <= tol`, `k >= 2`, while `gaps[n] > tol`.
    pub hits: Vec<(usize, usize)>,
    pub pairs_checked: usize,
}

impl PeriodicReport {
    pub fn first(&self) -> Option<(usize, usize)> {
        self.hits.first().copied()
    }

    pub fn passed(&self) -> bool {
        self.hits.is_empty()
    }
}

/// Looks for iterates that return to themselves after `k >= 2` steps without
/// being fixed. Periods up to [`MAX_PERIOD`] on unthinned stretches.
pub fn periodic_point_probe(space: &Space, trace: &OrbitTrace, tol: f64) -> Result<PeriodicReport> {
    let mut rep = PeriodicReport::default();
    let idx = &trace.point_indices;
    for s in 0..trace.points.len() {
        let n = idx[s];
        if n >= trace.gaps.len() || trace.gaps[n] <= tol {
            continue;
        }
        for k in 2..=MAX_PERIOD {
            let t = s + k;
            if t >= idx.len() || idx[t] != n + k {
                break;
            }
            rep.pairs_checked += 1;
            if space.distance(&trace.points[s], &trace.points[t])? <= tol {
                rep.hits.push((n, k));
            }
        }
    }
    Ok(rep)
}
