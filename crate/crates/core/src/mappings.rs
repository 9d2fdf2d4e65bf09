//! Nonexpansive self-maps built from projections: averaged mappings
//! `T_lambda x = W(x, Tx, lambda)` and the weighted composite of averaged
//! retractions, plus sampling checks for (firm) nonexpansiveness.

use serde::{Deserialize, Serialize};

use crate::error::{construction, domain, Result};
use crate::geometry::{Point, Space};
use crate::report::InequalityReport;
use crate::sampling::PairSampler;
use crate::sets::ConvexSet;

/// Default grid of `lambda` values for firmness checks.
pub const DEFAULT_LAMBDA_GRID: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

const WEIGHT_SUM_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mapping {
    Identity,
    /// Metric projection onto a closed convex set.
    Projection { set: ConvexSet },
    /// `x -> W(x, base(x), lambda)`.
    Averaged { base: Box<Mapping>, lambda: f64 },
    /// Weighted composite of the averaged retractions
    /// `T_i x = W(x, P_i x, lambda_i)`.
    Composite {
        retractions: Vec<Mapping>,
        lambdas: Vec<f64>,
        weights: Vec<f64>,
    },
    /// `x -> W(anchor, x, c)`; in normed spaces any `c >= 0` (expansive for
    /// `c > 1`). Test helper, not a library mapping.
    Scale { c: f64, anchor: Point },
    /// Rotation about the origin of the Euclidean plane. Test helper.
    Rotation { angle: f64 },
}

impl Mapping {
    pub fn projection(set: ConvexSet) -> Self {
        Mapping::Projection { set }
    }

    pub fn averaged(base: Mapping, lambda: f64) -> Result<Self> {
        let m = Mapping::Averaged {
            base: Box::new(base),
            lambda,
        };
        m.check_structure()?;
        Ok(m)
    }

    pub fn composite(retractions: Vec<Mapping>, lambdas: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let m = Mapping::Composite {
            retractions,
            lambdas,
            weights,
        };
        m.check_structure()?;
        Ok(m)
    }

    /// Structural validation independent of the space.
    pub fn check_structure(&self) -> Result<()> {
        match self {
            Mapping::Identity | Mapping::Projection { .. } | Mapping::Rotation { .. } => Ok(()),
            Mapping::Averaged { base, lambda } => {
                if !(*lambda > 0.0 && *lambda < 1.0) {
                    return Err(construction(format!("averaging lambda must lie in (0, 1), got {lambda}")));
                }
                base.check_structure()
            }
            Mapping::Composite {
                retractions,
                lambdas,
                weights,
            } => {
                let r = retractions.len();
                if r < 2 || lambdas.len() != r || weights.len() != r {
                    return Err(construction(format!(
                        "composite needs r >= 2 retractions with matching lists, got {} / {} / {}",
                        r,
                        lambdas.len(),
                        weights.len()
                    )));
                }
                if let Some(l) = lambdas.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
                    return Err(construction(format!("composite lambda {l} outside (0, 1)")));
                }
                if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && **w < 1.0)) {
                    return Err(construction(format!("composite weight {w} outside (0, 1)")));
                }
                let sum: f64 = weights.iter().sum();
                if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
                    return Err(construction(format!("composite weights sum to {sum}, not 1")));
                }
                retractions.iter().try_for_each(Mapping::check_structure)
            }
            Mapping::Scale { c, .. } => {
                if !(*c >= 0.0 && c.is_finite()) {
                    return Err(construction(format!("scale factor must be >= 0, got {c}")));
                }
                Ok(())
            }
        }
    }

    /// Full validation against a space.
    pub fn validate(&self, space: &Space) -> Result<()> {
        self.check_structure()?;
        match self {
            Mapping::Projection { set } => set.validate(space),
            Mapping::Averaged { base, .. } => base.validate(space),
            Mapping::Composite { retractions, .. } => {
                retractions.iter().try_for_each(|m| m.validate(space))
            }
            Mapping::Scale { c, anchor } => {
                space.check_point(anchor)?;
                if !space.is_normed() && *c > 1.0 {
                    return Err(construction("scale factors above 1 need a normed space"));
                }
                Ok(())
            }
            Mapping::Rotation { .. } => match space {
                Space::Euclidean { dim: 2 } => Ok(()),
                _ => Err(construction("rotations are only defined on euclidean:2")),
            },
            Mapping::Identity => Ok(()),
        }
    }

    /// False if a test-only helper appears anywhere in the mapping.
    pub fn is_library(&self) -> bool {
        match self {
            Mapping::Identity | Mapping::Projection { .. } => true,
            Mapping::Averaged { base, .. } => base.is_library(),
            Mapping::Composite { retractions, .. } => retractions.iter().all(Mapping::is_library),
            Mapping::Scale { .. } | Mapping::Rotation { .. } => false,
        }
    }

    /// The projection sets of a composite's retractions (identity entries
    /// contribute nothing).
    pub fn composite_sets(&self) -> Vec<&ConvexSet> {
        match self {
            Mapping::Composite { retractions, .. } => retractions
                .iter()
                .filter_map(|m| match m {
                    Mapping::Projection { set } => Some(set),
                    _ => None,
                })
                .collect(),
            _ => Vec::new(),
        }
    }

    pub fn apply(&self, space: &Space, x: &Point) -> Result<Point> {
        match self {
            Mapping::Identity => {
                space.check_point(x)?;
                Ok(x.clone())
            }
            Mapping::Projection { set } => Ok(set.project(space, x)?.projected),
            Mapping::Averaged { base, lambda } => {
                let tx = base.apply(space, x)?;
                space.convex_combination(x, &tx, *lambda)
            }
            Mapping::Composite {
                retractions,
                lambdas,
                weights,
            } => {
                let r = retractions.len();
                let t: Vec<Point> = retractions
                    .iter()
                    .zip(lambdas)
                    .map(|(p, l)| space.convex_combination(x, &p.apply(space, x)?, *l))
                    .collect::<Result<_>>()?;
                // tail[j] = alpha_{j+1} + ... + alpha_r (0-based)
                let mut tail = vec![0.0; r + 1];
                for j in (0..r).rev() {
                    tail[j] = tail[j + 1] + weights[j];
                }
                let mut s = t[r - 1].clone();
                for i in 1..=r.saturating_sub(2) {
                    // S_i = W(T_{r-i} x, S_{i-1} x, a_{r-i+1} / a_{r-i})
                    let k = r - i - 1;
                    let ratio = (tail[k + 1] / tail[k]).clamp(0.0, 1.0);
                    s = space.convex_combination(&t[k], &s, ratio)?;
                }
                space.convex_combination(&t[0], &s, tail[1].clamp(0.0, 1.0))
            }
            Mapping::Scale { c, anchor } => {
                if let (Some(a), Some(p)) = (anchor.coords(), x.coords()) {
                    if space.is_normed() {
                        space.check_point(x)?;
                        return Ok(Point::vector(
                            a.iter().zip(p).map(|(ai, pi)| ai + c * (pi - ai)).collect::<Vec<_>>(),
                        ));
                    }
                }
                if *c > 1.0 {
                    return Err(domain("scale factors above 1 need a normed space"));
                }
                space.convex_combination(anchor, x, *c)
            }
            Mapping::Rotation { angle } => match (space, x) {
                (Space::Euclidean { dim: 2 }, Point::Vector { coords }) if coords.len() == 2 => {
                    let (s, c) = angle.sin_cos();
                    Ok(Point::vector([
                        c * coords[0] - s * coords[1],
                        s * coords[0] + c * coords[1],
                    ]))
                }
                _ => Err(domain("rotations are only defined on euclidean:2")),
            },
        }
    }
}

/// Result of a sampled (firm) nonexpansiveness check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirmnessReport {
    pub holds: bool,
    pub worst_violation: f64,
    pub witness_pair: Option<(Point, Point)>,
    pub lambda_grid: Vec<f64>,
    pub samples: usize,
}

impl FirmnessReport {
    fn new(lambda_grid: Vec<f64>) -> Self {
        FirmnessReport {
            holds: true,
            worst_violation: f64::NEG_INFINITY,
            witness_pair: None,
            lambda_grid,
            samples: 0,
        }
    }

    fn record(&mut self, violation: f64, x: &Point, y: &Point) {
        self.samples += 1;
        if violation > self.worst_violation {
            self.worst_violation = violation;
            self.witness_pair = Some((x.clone(), y.clone()));
        }
    }

    fn finish(mut self, tol: f64) -> Self {
        self.holds = self.worst_violation <= tol;
        self
    }
}

/// Max over sampled pairs of `d(Tx, Ty) - d(x, y)`.
pub fn check_nonexpansive(
    space: &Space,
    m: &Mapping,
    pairs: &PairSampler,
    n_pairs: usize,
) -> Result<FirmnessReport> {
    let mut rep = FirmnessReport::new(Vec::new());
    for (x, y) in pairs.draw(space, n_pairs) {
        let v = space.distance(&m.apply(space, &x)?, &m.apply(space, &y)?)? - space.distance(&x, &y)?;
        rep.record(v, &x, &y);
    }
    Ok(rep.finish(space.tol()))
}

/// Max over sampled pairs and grid values of
/// `d(Tx, Ty) - d(W(x, Tx, lambda), W(y, Ty, lambda))`.
pub fn check_lambda_firm(
    space: &Space,
    m: &Mapping,
    lambda_grid: &[f64],
    pairs: &PairSampler,
    n_pairs: usize,
) -> Result<FirmnessReport> {
    if lambda_grid.is_empty() {
        return Err(domain("lambda grid must be nonempty"));
    }
    if let Some(l) = lambda_grid.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
        return Err(domain(format!("grid lambda {l} outside (0, 1)")));
    }
    let mut rep = FirmnessReport::new(lambda_grid.to_vec());
    for (x, y) in pairs.draw(space, n_pairs) {
        let (tx, ty) = (m.apply(space, &x)?, m.apply(space, &y)?);
        let lhs = space.distance(&tx, &ty)?;
        let mut worst = f64::NEG_INFINITY;
        for &l in lambda_grid {
            let rhs = space.distance(
                &space.convex_combination(&x, &tx, l)?,
                &space.convex_combination(&y, &ty, l)?,
            )?;
            worst = worst.max(lhs - rhs);
        }
        rep.record(worst, &x, &y);
    }
    Ok(rep.finish(space.tol()))
}

/// `d(T^2 x, Tx) <= d(Tx, x)` on the given points.
pub fn check_descent(space: &Space, m: &Mapping, points: &[Point]) -> Result<InequalityReport> {
    let mut rep = InequalityReport::new("descent", space.tol());
    for x in points {
        let tx = m.apply(space, x)?;
        let ttx = m.apply(space, &tx)?;
        rep.record(space.distance(&ttx, &tx)?, space.distance(&tx, x)?);
    }
    Ok(rep)
}

/// For an averaged mapping `T_lambda`, checks on sampled pairs
/// `d(T x, T y) <= (1-l) d(T x, y) + l(1-l) d(x, T y) + (1-l)^2 d(y, T y) + l^2 d(x, y)`.
pub fn check_averaged_inequality(
    space: &Space,
    m: &Mapping,
    pairs: &PairSampler,
    n_pairs: usize,
) -> Result<InequalityReport> {
    let Mapping::Averaged { lambda, .. } = m else {
        return Err(domain("averaged inequality needs an averaged mapping"));
    };
    let l = *lambda;
    let mut rep = InequalityReport::new("averaged-lemma", space.tol());
    for (x, y) in pairs.draw(space, n_pairs) {
        let (tx, ty) = (m.apply(space, &x)?, m.apply(space, &y)?);
        let lhs = space.distance(&tx, &ty)?;
        let rhs = (1.0 - l) * space.distance(&tx, &y)?
            + l * (1.0 - l) * space.distance(&x, &ty)?
            + (1.0 - l) * (1.0 - l) * space.distance(&y, &ty)?
            + l * l * space.distance(&x, &y)?;
        rep.record(lhs, rhs);
    }
    Ok(rep)
}

/// One candidate's outcome in [`fixed_point_set_probe`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointEntry {
    pub candidate: Point,
    pub displacement: f64,
    pub fixed: bool,
    pub in_all_sets: bool,
}

impl FixedPointEntry {
    pub fn consistent(&self) -> bool {
        self.fixed == self.in_all_sets
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointProbe {
    pub entries: Vec<FixedPointEntry>,
    /// Candidates that are fixed but outside some set.
    pub fixed_not_member: usize,
    /// Candidates in every set that are not fixed.
    pub member_not_fixed: usize,
}

impl FixedPointProbe {
    pub fn passed(&self) -> bool {
        self.fixed_not_member == 0 && self.member_not_fixed == 0
    }
}

/// Tests `d(x, Tx) <= tol` against membership in every set at `10 tol`.
pub fn fixed_point_set_probe(
    space: &Space,
    composite: &Mapping,
    sets: &[ConvexSet],
    candidates: &[Point],
    tol: f64,
) -> Result<FixedPointProbe> {
    let mut probe = FixedPointProbe {
        entries: Vec::with_capacity(candidates.len()),
        fixed_not_member: 0,
        member_not_fixed: 0,
    };
    for x in candidates {
        let displacement = space.distance(x, &composite.apply(space, x)?)?;
        let fixed = displacement <= tol;
        let mut in_all_sets = true;
        for s in sets {
            if !s.membership(space, x, 10.0 * tol)? {
                in_all_sets = false;
                break;
            }
        }
        match (fixed, in_all_sets) {
            (true, false) => probe.fixed_not_member += 1,
            (false, true) => probe.member_not_fixed += 1,
            _ => {}
        }
        probe.entries.push(FixedPointEntry {
            candidate: x.clone(),
            displacement,
            fixed,
            in_all_sets,
        });
    }
    Ok(probe)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::MetricTree;
    use std::f64::consts::PI;

    fn e(dim: usize) -> Space {
        Space::euclidean(dim).unwrap()
    }

    #[test]
    fn composite_two_retractions_hand_computed() {
        // T1 x = x; T2 x = W(x, 0, 1/2) = (0.5, 0); Tx = W(T1 x, T2 x, a2 = 1/2)
        let m = Mapping::composite(
            vec![
                Mapping::Identity,
                Mapping::projection(ConvexSet::ball(Point::vector([0.0, 0.0]), 0.0)),
            ],
            vec![0.5, 0.5],
            vec![0.5, 0.5],
        )
        .unwrap();
        let tx = m.apply(&e(2), &Point::vector([1.0, 0.0])).unwrap();
        assert_eq!(tx, Point::vector([0.75, 0.0]));
    }

    #[test]
    fn composite_of_identities_fixes_everything() {
        let third = 1.0 / 3.0;
        let m = Mapping::composite(
            vec![Mapping::Identity, Mapping::Identity, Mapping::Identity],
            vec![0.5; 3],
            vec![third, third, 1.0 - 2.0 * third],
        )
        .unwrap();
        assert_eq!(m.apply(&e(1), &Point::vector([5.0])).unwrap(), Point::vector([5.0]));
    }

    #[test]
    fn averaged_half_turn_is_midpoint() {
        let m = Mapping::averaged(Mapping::Rotation { angle: PI }, 0.5).unwrap();
        let y = m.apply(&e(2), &Point::vector([1.0, 0.0])).unwrap();
        let c = y.coords().unwrap();
        assert!(c[0].abs() < 1e-15 && c[1].abs() < 1e-15);
    }

    #[test]
    fn construction_errors() {
        assert!(Mapping::averaged(Mapping::Identity, 1.0).is_err());
        assert!(Mapping::averaged(Mapping::Identity, 0.0).is_err());
        let bad_sum = Mapping::composite(
            vec![Mapping::Identity, Mapping::Identity],
            vec![0.5, 0.5],
            vec![0.5, 0.6],
        );
        assert!(matches!(bad_sum, Err(crate::GeoError::Construction(_))));
        let bad_len = Mapping::composite(vec![Mapping::Identity, Mapping::Identity], vec![0.5], vec![0.5, 0.5]);
        assert!(bad_len.is_err());
        let single = Mapping::composite(vec![Mapping::Identity], vec![0.5], vec![1.0]);
        assert!(single.is_err());
    }

    #[test]
    fn composite_in_normed_space_is_weighted_mean() {
        let sets = [
            ConvexSet::half_space([1.0, 0.2, 0.0], 0.1),
            ConvexSet::ball(Point::vector([0.5, 0.5, 0.5]), 0.9),
            ConvexSet::segment(Point::vector([-1.0, 0.0, 1.0]), Point::vector([1.0, 1.0, 0.0])),
            ConvexSet::half_space([0.0, -1.0, 1.0], 0.4),
        ];
        let lambdas = vec![0.3, 0.6, 0.5, 0.8];
        let weights = vec![0.1, 0.2, 0.3, 0.4];
        for p in [2.0, 4.0] {
            let space = if p == 2.0 { e(3) } else { Space::lp(3, p).unwrap() };
            let m = Mapping::composite(
                sets.iter().cloned().map(Mapping::projection).collect(),
                lambdas.clone(),
                weights.clone(),
            )
            .unwrap();
            let mut smp = crate::sampling::Sampler::new(&space, 4);
            for _ in 0..50 {
                let x = smp.point();
                let tx = m.apply(&space, &x).unwrap();
                let xc = x.coords().unwrap();
                let mut mean = vec![0.0; 3];
                for ((set, l), w) in sets.iter().zip(&lambdas).zip(&weights) {
                    let px = set.project(&space, &x).unwrap().projected;
                    for (k, pk) in px.coords().unwrap().iter().enumerate() {
                        mean[k] += w * ((1.0 - l) * xc[k] + l * pk);
                    }
                }
                assert!(space.distance(&tx, &Point::vector(mean)).unwrap() < 1e-9);
            }
        }
    }

    #[test]
    fn nonexpansive_checks() {
        let ball = Mapping::projection(ConvexSet::ball(Point::vector([0.0, 0.0]), 1.0));
        let r = check_nonexpansive(&e(2), &ball, &PairSampler::seeded(1), 1000).unwrap();
        assert!(r.holds);
        assert_eq!(r.samples, 1000);

        let id = check_nonexpansive(&e(2), &Mapping::Identity, &PairSampler::seeded(1), 100).unwrap();
        assert!(id.holds && id.worst_violation <= 0.0);
    }

    #[test]
    fn expanding_scale_is_caught() {
        let m = Mapping::Scale {
            c: 1.5,
            anchor: Point::vector([0.0]),
        };
        assert!(!m.is_library());
        // the witness pair alone: d(Tx, Ty) - d(x, y) = 1.5 - 1
        let only = PairSampler::seeded(0).with_pairs([(Point::vector([0.0]), Point::vector([1.0]))]);
        let r = check_nonexpansive(&e(1), &m, &only, 0).unwrap();
        assert!(!r.holds);
        assert!((r.worst_violation - 0.5).abs() < 1e-15);

        let r = check_nonexpansive(&e(1), &m, &PairSampler::seeded(2), 500).unwrap();
        let (x, y) = r.witness_pair.clone().unwrap();
        let d = e(1).distance(&x, &y).unwrap();
        assert!((r.worst_violation - 0.5 * d).abs() < 1e-12);
    }

    #[test]
    fn firmness_checks() {
        let hs = Mapping::projection(ConvexSet::half_space([1.0, 0.0], 0.0));
        let r = check_lambda_firm(&e(2), &hs, &[0.1, 0.5, 0.9], &PairSampler::seeded(3), 1000).unwrap();
        assert!(r.holds);

        // quarter turn: d(Tx, Ty) = sqrt 2, midpoints (0.5, 0.5), (-0.5, 0.5) at distance 1
        let rot = Mapping::Rotation { angle: PI / 2.0 };
        let pairs = PairSampler::seeded(0).with_pairs([(Point::vector([1.0, 0.0]), Point::vector([0.0, 1.0]))]);
        let r = check_lambda_firm(&e(2), &rot, &[0.5], &pairs, 0).unwrap();
        assert!(!r.holds);
        assert!((r.worst_violation - (2f64.sqrt() - 1.0)).abs() < 1e-12);

        let r = check_lambda_firm(&e(2), &Mapping::Identity, &DEFAULT_LAMBDA_GRID, &PairSampler::seeded(4), 100).unwrap();
        assert!(r.holds);
        assert!(check_lambda_firm(&e(2), &Mapping::Identity, &[], &PairSampler::seeded(4), 1).is_err());
    }

    #[test]
    fn projections_are_firm_in_cat0_models() {
        let tree = Space::tree(MetricTree::tripod());
        let cases = [
            (Space::disk(), Mapping::projection(ConvexSet::ball(Point::disk(0.1, -0.2), 0.6))),
            (Space::disk(), Mapping::projection(ConvexSet::segment(Point::disk(-0.5, 0.0), Point::disk(0.4, 0.4)))),
            (tree.clone(), Mapping::projection(ConvexSet::subtree(["o", "a"]))),
            (tree, Mapping::projection(ConvexSet::ball(Point::tree(2, 0.5), 0.7))),
        ];
        for (space, m) in cases {
            let r = check_lambda_firm(&space, &m, &[0.1, 0.5, 0.9], &PairSampler::seeded(8), 500).unwrap();
            assert!(r.holds, "{m:?}: {}", r.worst_violation);
            let r = check_nonexpansive(&space, &m, &PairSampler::seeded(9), 500).unwrap();
            assert!(r.holds);
        }
    }

    #[test]
    fn fixed_point_probe_on_quadrant() {
        let sets = vec![ConvexSet::half_space([1.0, 0.0], 0.0), ConvexSet::half_space([0.0, 1.0], 0.0)];
        let m = Mapping::composite(
            sets.iter().cloned().map(Mapping::projection).collect(),
            vec![0.5, 0.5],
            vec![0.5, 0.5],
        )
        .unwrap();
        let cands = [Point::vector([-1.0, -1.0]), Point::vector([1.0, 0.0]), Point::vector([0.0, 0.0])];
        let probe = fixed_point_set_probe(&e(2), &m, &sets, &cands, 1e-9).unwrap();
        assert!(probe.passed());
        assert!(probe.entries[0].fixed && probe.entries[0].in_all_sets);
        assert!(!probe.entries[1].fixed && !probe.entries[1].in_all_sets);
        assert!(probe.entries[1].displacement > 0.0);
        assert!(probe.entries[2].fixed && probe.entries[2].in_all_sets);
    }

    #[test]
    fn averaged_descent_and_inequality() {
        let base = Mapping::projection(ConvexSet::segment(Point::disk(-0.6, 0.1), Point::disk(0.3, 0.5)));
        let m = Mapping::averaged(base, 0.3).unwrap();
        let pts = PairSampler::seeded(12).draw_points(&Space::disk(), 300);
        assert!(check_descent(&Space::disk(), &m, &pts).unwrap().holds());
        let r = check_averaged_inequality(&Space::disk(), &m, &PairSampler::seeded(13), 300).unwrap();
        assert!(r.holds(), "{r:?}");
    }
}
