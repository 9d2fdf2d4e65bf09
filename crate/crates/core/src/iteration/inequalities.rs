//! Orbit-level inequalities: gap monotonicity, Fejér descent towards a
//! common point, the quadratic descent for projections and the
//! firmly-nonexpansive chain inequality.

use crate::error::{domain, Result};
use crate::geometry::{Point, Space};
use crate::report::InequalityReport;

use super::OrbitTrace;

/// Largest admissible value of `((1 + lambda) / lambda)^n` in [`lemma_fn`].
pub const LEMMA_FN_FACTOR_CAP: f64 = 1e15;

/// `gaps[n+1] <= gaps[n] + tol` from the scheme's monotone start.
pub fn gap_monotonicity(trace: &OrbitTrace, tol: f64) -> InequalityReport {
    let mut rep = InequalityReport::new("gap-monotonicity", tol);
    let start = trace.scheme.monotone_from();
    for w in trace.gaps.windows(2).skip(start) {
        rep.record(w[1], w[0]);
    }
    rep
}

/// `d(x_{n+1}, p) <= d(x_n, p) + tol` along the stored points.
pub fn fejer_descent(space: &Space, trace: &OrbitTrace, p: &Point, tol: f64) -> Result<InequalityReport> {
    let mut rep = InequalityReport::new("fejer-descent", tol);
    let d: Vec<f64> = trace
        .points
        .iter()
        .map(|x| space.distance(x, p))
        .collect::<Result<_>>()?;
    for w in d.windows(2) {
        rep.record(w[1], w[0]);
    }
    Ok(rep)
}

/// `gaps[n]^2 <= d(x_n, p)^2 - d(x_{n+1}, p)^2 + tol` for every projection
/// step of an orbit with `p` in all the sets. The tolerance is scaled by
/// `max(1, d(x_0, p))^2`.
pub fn projection_descent(space: &Space, trace: &OrbitTrace, p: &Point, tol: f64) -> Result<InequalityReport> {
    let scale = space.distance(trace.first_point(), p)?.max(1.0);
    let mut rep = InequalityReport::new("projection-descent", tol * scale * scale);
    for (n, x, y) in trace.consecutive() {
        let (dx, dy) = (space.distance(x, p)?, space.distance(y, p)?);
        rep.record(trace.gaps[n].powi(2), dx * dx - dy * dy);
    }
    Ok(rep)
}

/// Largest `n` with `((1 + lambda) / lambda)^n <= LEMMA_FN_FACTOR_CAP`.
pub fn lemma_fn_cap(lambda: f64) -> usize {
    let base = (1.0 + lambda) / lambda;
    (LEMMA_FN_FACTOR_CAP.ln() / base.ln()).floor() as usize
}

/// For a `lambda`-firmly nonexpansive map, over `i >= 1` and
/// `1 <= n <= lemma_fn_cap(lambda)`:
/// `n g_i <= d(x_i, x_{i+n}) + n (1 + ((1+lambda)/lambda)^n) (g_i - g_{i+n}) + tol`.
///
/// Gap differences below zero are rounding noise (monotonicity is checked
/// separately) and are clamped to zero before the large factor multiplies
/// them. The tolerance is scaled by `max(1, n g_i)`.
pub fn lemma_fn(space: &Space, trace: &OrbitTrace, lambda: f64, tol: f64) -> Result<InequalityReport> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(domain(format!("lambda must lie in (0, 1), got {lambda}")));
    }
    if trace.is_thinned() {
        return Err(domain("the chain inequality needs an unthinned trace"));
    }
    let base = (1.0 + lambda) / lambda;
    let cap = lemma_fn_cap(lambda);
    let g = &trace.gaps;
    let pts = &trace.points;
    let mut rep = InequalityReport::new("lemma-fn", tol);
    for i in 1..g.len() {
        for n in 1..=cap {
            if i + n >= g.len() {
                break;
            }
            let nf = n as f64;
            let lhs = nf * g[i];
            let diff = (g[i] - g[i + n]).max(0.0);
            let rhs = space.distance(&pts[i], &pts[i + n])? + nf * (1.0 + base.powi(n as i32)) * diff;
            // scale-relative slack
            let s = lhs.max(1.0);
            rep.record(lhs / s, rhs / s);
        }
    }
    Ok(rep)
}
