//! Closed convex sets of the model spaces and their metric projections.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{construction, domain, unsupported, Result};
use crate::geometry::{normed, Point, Space};
use crate::sampling::Sampler;

/// Size of the point sample used to verify a projection's optimality.
pub const VERIFICATION_SAMPLE: usize = 64;
/// Seed of that sample.
pub const VERIFICATION_SEED: u64 = 0x005e_ed0f_5e75;

/// A nonempty closed convex subset of a model space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConvexSet {
    /// Closed metric ball; a zero radius gives a single point.
    Ball { center: Point, radius: f64 },
    /// `{x : <normal, x> <= offset}`; normed spaces only.
    HalfSpace { normal: Vec<f64>, offset: f64 },
    /// The geodesic segment between two points.
    Segment { a: Point, b: Point },
    /// The subtree spanned by a connected set of named vertices.
    Subtree { vertices: Vec<String> },
}

/// Result of a metric projection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionReport {
    pub projected: Point,
    pub dist_to_set: f64,
    /// Zero for closed-form projections.
    pub iterations_used: usize,
}

impl ConvexSet {
    pub fn ball(center: Point, radius: f64) -> Self {
        ConvexSet::Ball { center, radius }
    }

    pub fn half_space(normal: impl Into<Vec<f64>>, offset: f64) -> Self {
        ConvexSet::HalfSpace {
            normal: normal.into(),
            offset,
        }
    }

    pub fn segment(a: Point, b: Point) -> Self {
        ConvexSet::Segment { a, b }
    }

    pub fn subtree<S: Into<String>>(vertices: impl IntoIterator<Item = S>) -> Self {
        ConvexSet::Subtree {
            vertices: vertices.into_iter().map(Into::into).collect(),
        }
    }

    /// Check that the set is a well-formed nonempty convex subset of `space`.
    pub fn validate(&self, space: &Space) -> Result<()> {
        match self {
            ConvexSet::Ball { center, radius } => {
                space.check_point(center)?;
                if !(*radius >= 0.0 && radius.is_finite()) {
                    return Err(construction(format!("ball radius must be >= 0, got {radius}")));
                }
                Ok(())
            }
            ConvexSet::HalfSpace { normal, offset } => {
                let dim = space.dim().ok_or_else(|| {
                    unsupported(format!("half-spaces need a normed space, not {space}"))
                })?;
                if normal.len() != dim {
                    return Err(construction(format!(
                        "half-space normal has {} entries, space has dimension {dim}",
                        normal.len()
                    )));
                }
                if normal.iter().all(|c| *c == 0.0) || !offset.is_finite() {
                    return Err(construction("half-space needs a nonzero normal and finite offset"));
                }
                Ok(())
            }
            ConvexSet::Segment { a, b } => {
                space.check_point(a)?;
                space.check_point(b)
            }
            ConvexSet::Subtree { vertices } => {
                let tree = space
                    .tree_ref()
                    .ok_or_else(|| unsupported(format!("subtrees need a tree space, not {space}")))?;
                let ids = subtree_ids(tree, vertices)?;
                // connectivity of the induced subgraph
                let mut seen = vec![false; tree.vertex_count()];
                let member = |v: usize| ids.contains(&v);
                let mut stack = vec![ids[0]];
                seen[ids[0]] = true;
                let mut count = 0;
                while let Some(v) = stack.pop() {
                    count += 1;
                    for &(nb, _) in tree.neighbours(v) {
                        if member(nb) && !seen[nb] {
                            seen[nb] = true;
                            stack.push(nb);
                        }
                    }
                }
                if count != ids.len() {
                    return Err(construction("subtree vertex set is not connected"));
                }
                Ok(())
            }
        }
    }

    /// Metric projection of `x` onto the set.
    pub fn project(&self, space: &Space, x: &Point) -> Result<ProjectionReport> {
        space.check_point(x)?;
        let (projected, iterations_used) = match self {
            ConvexSet::Ball { center, radius } => {
                let d = space.distance(center, x)?;
                if d <= *radius {
                    (x.clone(), 0)
                } else {
                    // radial: the nearest point lies on the geodesic from the center
                    (space.convex_combination(center, x, radius / d)?, 0)
                }
            }
            ConvexSet::HalfSpace { normal, offset } => {
                let p = space
                    .norm_exponent()
                    .ok_or_else(|| unsupported(format!("half-spaces need a normed space, not {space}")))?;
                if normal.len() != space.dim().unwrap_or(0) {
                    return Err(domain("half-space normal does not match the dimension"));
                }
                let c = x.coords().unwrap();
                let excess = normed::dot(normal, c) - offset;
                if excess <= 0.0 {
                    (x.clone(), 0)
                } else {
                    let q = normed::dual_exponent(p);
                    let dual_norm = if q.is_infinite() {
                        normal.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
                    } else {
                        normed::norm(normal, q)
                    };
                    let u = normed::norming_direction(normal, p);
                    let step = excess / dual_norm;
                    let y: Vec<f64> = c.iter().zip(&u).map(|(xi, ui)| xi - step * ui).collect();
                    (Point::vector(y), 0)
                }
            }
            ConvexSet::Segment { a, b } => match space {
                Space::Euclidean { .. } => {
                    let (ca, cb, cx) = (a.coords().unwrap(), b.coords().unwrap(), x.coords().unwrap());
                    let ab: Vec<f64> = cb.iter().zip(ca).map(|(q, p)| q - p).collect();
                    let ax: Vec<f64> = cx.iter().zip(ca).map(|(q, p)| q - p).collect();
                    let len2 = normed::dot(&ab, &ab);
                    let t = if len2 == 0.0 {
                        0.0
                    } else {
                        (normed::dot(&ax, &ab) / len2).clamp(0.0, 1.0)
                    };
                    (space.convex_combination(a, b, t)?, 0)
                }
                Space::PoincareDisk => (space.disk_project_segment(a, b, x), 0),
                Space::MetricTree(_) => {
                    // the gate is the median of a, b and x
                    let dab = space.distance(a, b)?;
                    if dab == 0.0 {
                        (a.clone(), 0)
                    } else {
                        let s = (space.distance(a, x)? + dab - space.distance(x, b)?) / 2.0;
                        (space.convex_combination(a, b, (s / dab).clamp(0.0, 1.0))?, 0)
                    }
                }
                Space::Lp { .. } => {
                    let r = project_segment_search(space, a, b, x, 1e-12)?;
                    (r.projected, r.iterations_used)
                }
            },
            ConvexSet::Subtree { vertices } => {
                let tree = space
                    .tree_ref()
                    .ok_or_else(|| unsupported(format!("subtrees need a tree space, not {space}")))?;
                let ids = subtree_ids(tree, vertices)?;
                let Point::Tree { edge, offset } = *x else { unreachable!() };
                let e = tree.edges()[edge];
                let inside = (ids.contains(&e.u) && ids.contains(&e.v))
                    || tree.vertex_at(edge, offset).is_some_and(|v| ids.contains(&v));
                if inside {
                    (x.clone(), 0)
                } else {
                    let gate = ids
                        .iter()
                        .copied()
                        .min_by(|&v, &w| {
                            tree.distance_to_vertex(edge, offset, v)
                                .total_cmp(&tree.distance_to_vertex(edge, offset, w))
                        })
                        .unwrap();
                    let (ge, go) = tree.vertex_location(gate);
                    (Point::tree(ge, go), 0)
                }
            }
        };
        let dist_to_set = space.distance(x, &projected)?;
        Ok(ProjectionReport {
            projected,
            dist_to_set,
            iterations_used,
        })
    }

    pub fn distance_to(&self, space: &Space, x: &Point) -> Result<f64> {
        Ok(self.project(space, x)?.dist_to_set)
    }

    /// `dist(x, set) <= tol`.
    pub fn membership(&self, space: &Space, x: &Point, tol: f64) -> Result<bool> {
        Ok(self.distance_to(space, x)? <= tol)
    }

    /// Seeded sample of points of the set.
    pub fn sample_members(&self, space: &Space, n: usize, seed: u64) -> Result<Vec<Point>> {
        self.validate(space)?;
        let mut s = Sampler::new(space, seed);
        let mut out = Vec::with_capacity(n);
        match self {
            ConvexSet::Ball { center, radius } => {
                for _ in 0..n {
                    if *radius == 0.0 {
                        out.push(center.clone());
                    } else {
                        out.push(s.point_near(center, *radius));
                    }
                }
            }
            ConvexSet::HalfSpace { .. } => {
                for _ in 0..n {
                    let p = s.point();
                    out.push(self.project(space, &p)?.projected);
                }
            }
            ConvexSet::Segment { a, b } => {
                for _ in 0..n {
                    let t = s.rng().gen_range(0.0..=1.0);
                    out.push(space.convex_combination(a, b, t)?);
                }
            }
            ConvexSet::Subtree { vertices } => {
                let tree = space.tree_ref().unwrap();
                let ids = subtree_ids(tree, vertices)?;
                let inner: Vec<usize> = tree
                    .edges()
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| ids.contains(&e.u) && ids.contains(&e.v))
                    .map(|(i, _)| i)
                    .collect();
                for _ in 0..n {
                    if inner.is_empty() {
                        let (e, o) = tree.vertex_location(ids[0]);
                        out.push(Point::tree(e, o));
                    } else {
                        let e = inner[s.rng().gen_range(0..inner.len())];
                        let len = tree.edges()[e].length;
                        out.push(Point::tree(e, s.rng().gen_range(0.0..=len)));
                    }
                }
            }
        }
        Ok(out)
    }

    /// Largest amount by which the projection of `x` is farther from `x`
    /// than some point of the fixed verification sample. Nonpositive up to
    /// rounding for a correct projection.
    pub fn optimality_gap(&self, space: &Space, x: &Point) -> Result<f64> {
        let report = self.project(space, x)?;
        let sample = self.sample_members(space, VERIFICATION_SAMPLE, VERIFICATION_SEED)?;
        let mut worst = f64::NEG_INFINITY;
        for s in &sample {
            worst = worst.max(report.dist_to_set - space.distance(x, s)?);
        }
        Ok(worst)
    }
}

fn subtree_ids(tree: &crate::geometry::MetricTree, names: &[String]) -> Result<Vec<usize>> {
    if names.is_empty() {
        return Err(construction("subtree needs at least one vertex"));
    }
    names
        .iter()
        .map(|n| {
            tree.vertex_index(n)
                .ok_or_else(|| construction(format!("unknown vertex {n:?}")))
        })
        .collect()
}

/// Nearest point of the segment `[a, b]` to `x` by golden-section search on
/// the segment parameter. Works in any model space.
pub fn project_segment_search(
    space: &Space,
    a: &Point,
    b: &Point,
    x: &Point,
    tol: f64,
) -> Result<ProjectionReport> {
    let f = |s: f64| -> Result<f64> { space.distance(x, &space.convex_combination(a, b, s)?) };
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    let mut iters = 0;
    while hi - lo > tol {
        iters += 1;
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d)?;
        }
    }
    let mut best = (lo + hi) / 2.0;
    let mut best_val = f(best)?;
    for cand in [0.0, 1.0] {
        let v = f(cand)?;
        if v < best_val {
            best = cand;
            best_val = v;
        }
    }
    Ok(ProjectionReport {
        projected: space.convex_combination(a, b, best)?,
        dist_to_set: best_val,
        iterations_used: iters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::MetricTree;
    use crate::sampling::Sampler;

    fn e2() -> Space {
        Space::euclidean(2).unwrap()
    }

    #[test]
    fn euclidean_ball_radial_projection() {
        let set = ConvexSet::ball(Point::vector([0.0, 0.0]), 1.0);
        let r = set.project(&e2(), &Point::vector([2.0, 0.0])).unwrap();
        assert_eq!(r.projected, Point::vector([1.0, 0.0]));
        assert_eq!(r.dist_to_set, 1.0);
        assert_eq!(r.iterations_used, 0);
    }

    #[test]
    fn euclidean_half_space_projection() {
        let set = ConvexSet::half_space([1.0, 0.0], 0.0);
        let r = set.project(&e2(), &Point::vector([1.0, 1.0])).unwrap();
        assert_eq!(r.projected, Point::vector([0.0, 1.0]));
        assert_eq!(r.dist_to_set, 1.0);
    }

    #[test]
    fn tree_subtree_gate_point() {
        let s = Space::tree(MetricTree::tripod());
        let set = ConvexSet::subtree(["o", "b"]);
        let a = s.vertex_point("a").unwrap();
        let r = set.project(&s, &a).unwrap();
        assert_eq!(s.distance(&r.projected, &s.vertex_point("o").unwrap()).unwrap(), 0.0);
        assert_eq!(r.dist_to_set, 1.0);
    }

    #[test]
    fn membership_examples() {
        let ball = ConvexSet::ball(Point::vector([0.0, 0.0]), 1.0);
        assert!(ball.membership(&e2(), &Point::vector([0.5, 0.0]), 1e-9).unwrap());
        assert!(!ball.membership(&e2(), &Point::vector([1.0 + 1e-3, 0.0]), 1e-9).unwrap());

        let s = Space::tree(MetricTree::tripod());
        let t = s.tree_ref().unwrap();
        let (o, b) = (t.vertex_index("o").unwrap(), t.vertex_index("b").unwrap());
        let edge = t
            .edges()
            .iter()
            .position(|e| (e.u == o && e.v == b) || (e.u == b && e.v == o))
            .unwrap();
        let mid = Point::tree(edge, 0.5);
        assert!(ConvexSet::subtree(["o", "b"]).membership(&s, &mid, 1e-9).unwrap());
    }

    #[test]
    fn half_space_in_disk_is_unsupported() {
        let set = ConvexSet::half_space([1.0, 0.0], 0.0);
        let r = set.project(&Space::disk(), &Point::disk(0.1, 0.1));
        assert!(matches!(r, Err(crate::GeoError::Unsupported(_))));
    }

    #[test]
    fn disconnected_subtree_rejected() {
        let s = Space::tree(MetricTree::tripod());
        assert!(ConvexSet::subtree(["a", "b"]).validate(&s).is_err());
        assert!(ConvexSet::subtree(["a", "o", "b"]).validate(&s).is_ok());
        assert!(ConvexSet::subtree(["zz"]).validate(&s).is_err());
    }

    #[test]
    fn disk_segment_closed_form_matches_search() {
        let s = Space::disk();
        let mut smp = Sampler::new(&s, 5);
        for _ in 0..50 {
            let (a, b, x) = (smp.point(), smp.point(), smp.point());
            let seg = ConvexSet::segment(a.clone(), b.clone());
            let closed = seg.project(&s, &x).unwrap();
            let search = project_segment_search(&s, &a, &b, &x, 1e-10).unwrap();
            assert!(closed.dist_to_set <= search.dist_to_set + 1e-9);
            assert!(s.distance(&closed.projected, &search.projected).unwrap() < 1e-5);
        }
    }

    #[test]
    fn disk_segment_projection_matches_dense_grid() {
        let s = Space::disk();
        let a = Point::disk(-0.5, 0.0);
        let b = Point::disk(0.5, 0.0);
        let x = Point::disk(0.3, 0.5);
        let closed = ConvexSet::segment(a.clone(), b.clone()).project(&s, &x).unwrap();
        let n = 200_000;
        let best = (0..=n)
            .map(|i| s.convex_combination(&a, &b, i as f64 / n as f64).unwrap())
            .min_by(|p, q| s.distance(&x, p).unwrap().total_cmp(&s.distance(&x, q).unwrap()))
            .unwrap();
        assert!(s.distance(&closed.projected, &best).unwrap() < 1e-5);
    }

    #[test]
    fn lp_half_space_projection_is_optimal() {
        for p in [1.5, 3.0, 4.0] {
            let s = Space::lp(3, p).unwrap();
            let set = ConvexSet::half_space([1.0, -2.0, 0.5], 0.3);
            let mut smp = Sampler::new(&s, 9);
            for _ in 0..30 {
                let x = smp.point();
                let r = set.project(&s, &x).unwrap();
                assert!(set.membership(&s, &r.projected, 1e-9).unwrap());
                assert!(set.optimality_gap(&s, &x).unwrap() <= 1e-9);
            }
        }
    }

    #[test]
    fn projections_are_members_idempotent_and_optimal() {
        let tree = Space::tree(MetricTree::tripod());
        let cases: Vec<(Space, ConvexSet)> = vec![
            (e2(), ConvexSet::ball(Point::vector([0.3, -0.2]), 0.7)),
            (e2(), ConvexSet::half_space([0.6, 0.8], 0.1)),
            (e2(), ConvexSet::segment(Point::vector([-1.0, 0.0]), Point::vector([0.5, 1.0]))),
            (Space::lp(2, 4.0).unwrap(), ConvexSet::segment(Point::vector([-1.0, 0.0]), Point::vector([0.5, 1.0]))),
            (Space::lp(2, 4.0).unwrap(), ConvexSet::ball(Point::vector([0.2, 0.1]), 0.5)),
            (Space::disk(), ConvexSet::ball(Point::disk(0.2, 0.1), 0.8)),
            (Space::disk(), ConvexSet::segment(Point::disk(-0.3, 0.4), Point::disk(0.6, -0.2))),
            (tree.clone(), ConvexSet::subtree(["o", "c"])),
            (tree.clone(), ConvexSet::ball(Point::tree(1, 0.5), 0.75)),
            (tree.clone(), ConvexSet::segment(Point::tree(0, 0.8), Point::tree(2, 0.3))),
        ];
        for (space, set) in cases {
            let tol = space.tol();
            let mut smp = Sampler::new(&space, 21);
            for _ in 0..40 {
                let x = smp.point();
                let r = set.project(&space, &x).unwrap();
                assert!(set.membership(&space, &r.projected, tol).unwrap(), "{set:?}");
                let again = set.project(&space, &r.projected).unwrap();
                assert!(space.distance(&again.projected, &r.projected).unwrap() <= tol);
                assert!(set.optimality_gap(&space, &x).unwrap() <= tol, "{set:?} at {x:?}");
                assert!((r.dist_to_set - space.distance(&x, &r.projected).unwrap()).abs() <= tol);
            }
        }
    }
}
