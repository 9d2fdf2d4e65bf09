//! Sampling verifiers for the axioms and inequalities of geodesic spaces.
//!
//! Every checker is deterministic in `(seed, n)`. Violations are compared
//! with `tol * max(1, diameter of the sample)`; the quadratic inequalities
//! (CN, Ptolemy) use the square of that scale.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, unsupported, Result};
use crate::geometry::{ModulusOfConvexity, Point, Space};
use crate::sampling::{default_radius, random_point};

/// Relative tolerance for the additive identities of "lies between".
pub const TOL_BETWEEN: f64 = 1e-8;

/// Minimum pairwise separation (relative) in betweenness configurations.
pub const MIN_SEPARATION: f64 = 1e-3;

/// Smallest `eps` used by the uniform convexity check.
pub const MIN_CONVEXITY_EPS: f64 = 0.01;

const T_GRID: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

/// What the checkers need from a space. Implemented by [`Space`]; test
/// fixtures implement it for metrics that are not model spaces.
pub trait Geometry {
    fn distance(&self, x: &Point, y: &Point) -> Result<f64>;
    /// The convexity mapping `W(x, y, t)`.
    fn geodesic(&self, x: &Point, y: &Point, t: f64) -> Result<Point>;
    fn random_point(&self, rng: &mut ChaCha8Rng) -> Point;
    fn tol(&self) -> f64;

    /// Point at distance `len` beyond `y` on a geodesic ray from `x` through `y`.
    fn extend(&self, _x: &Point, _y: &Point, _len: f64, _rng: &mut ChaCha8Rng) -> Result<Option<Point>> {
        Ok(None)
    }

    fn modulus(&self) -> Option<ModulusOfConvexity> {
        None
    }
}

impl Geometry for Space {
    fn distance(&self, x: &Point, y: &Point) -> Result<f64> {
        Space::distance(self, x, y)
    }

    fn geodesic(&self, x: &Point, y: &Point, t: f64) -> Result<Point> {
        self.convex_combination(x, y, t)
    }

    fn random_point(&self, rng: &mut ChaCha8Rng) -> Point {
        random_point(self, default_radius(self), rng)
    }

    fn tol(&self) -> f64 {
        Space::tol(self)
    }

    fn extend(&self, x: &Point, y: &Point, len: f64, rng: &mut ChaCha8Rng) -> Result<Option<Point>> {
        match self.extend_geodesic(x, y, len, rng)? {
            Some(p) if self.check_point(&p).is_ok() && p.is_finite() => Ok(Some(p)),
            _ => Ok(None),
        }
    }

    fn modulus(&self) -> Option<ModulusOfConvexity> {
        Space::modulus(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Property {
    W1,
    W2,
    W3,
    W4,
    ConvexMetric,
    Busemann,
    Cn,
    Ptolemy,
    Betweenness,
    WeakBetweenness,
    UniformConvexity,
    Metric,
}

impl Property {
    pub const ALL: [Property; 12] = [
        Property::W1,
        Property::W2,
        Property::W3,
        Property::W4,
        Property::ConvexMetric,
        Property::Busemann,
        Property::Cn,
        Property::Ptolemy,
        Property::Betweenness,
        Property::WeakBetweenness,
        Property::UniformConvexity,
        Property::Metric,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::W1 => "w1",
            Property::W2 => "w2",
            Property::W3 => "w3",
            Property::W4 => "w4",
            Property::ConvexMetric => "convex-metric",
            Property::Busemann => "busemann",
            Property::Cn => "cn",
            Property::Ptolemy => "ptolemy",
            Property::Betweenness => "betweenness",
            Property::WeakBetweenness => "weak-betweenness",
            Property::UniformConvexity => "uniform-convexity",
            Property::Metric => "metric",
        }
    }

    /// Parses a comma-separated list. `w-axioms` expands to W1-W4 and `all`
    /// to every property.
    pub fn parse_list(s: &str) -> Result<Vec<Property>> {
        let mut out = Vec::new();
        for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            match item {
                "all" => out.extend(Property::ALL),
                "w-axioms" => out.extend([Property::W1, Property::W2, Property::W3, Property::W4]),
                _ => match Property::ALL.iter().find(|p| p.name() == item) {
                    Some(p) => out.push(*p),
                    None => return Err(domain(format!("unknown property `{item}`"))),
                },
            }
        }
        if out.is_empty() {
            return Err(domain("no properties requested"));
        }
        let mut seen = std::collections::BTreeSet::new();
        out.retain(|p| seen.insert(*p));
        Ok(out)
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub property: Property,
    pub samples_tested: usize,
    pub samples_skipped: usize,
    /// Largest scale-normalized violation; negative when all samples had slack.
    pub max_violation: f64,
    pub tolerance: f64,
    /// Points of the worst sample, with its scalar parameters (t, r, eps).
    pub witness: Option<Vec<Point>>,
    pub parameters: Vec<f64>,
    pub passed: bool,
}

impl CheckReport {
    fn new(property: Property, tolerance: f64) -> Self {
        CheckReport {
            property,
            samples_tested: 0,
            samples_skipped: 0,
            max_violation: f64::NEG_INFINITY,
            tolerance,
            witness: None,
            parameters: Vec::new(),
            passed: true,
        }
    }

    /// `violation` is already divided by the sample's scale.
    fn record(&mut self, violation: f64, pts: &[&Point], params: &[f64]) {
        self.samples_tested += 1;
        if violation > self.max_violation || violation.is_nan() {
            self.max_violation = violation;
            self.witness = Some(pts.iter().map(|p| (*p).clone()).collect());
            self.parameters = params.to_vec();
        }
    }

    fn finish(mut self) -> Self {
        self.passed = self.samples_tested > 0 && self.max_violation <= self.tolerance;
        self
    }

    pub fn verdict(&self) -> String {
        format!(
            "{:<18} {}  samples={} max_violation={:.3e} tol={:.1e}",
            self.property.name(),
            if self.passed { "PASS" } else { "FAIL" },
            self.samples_tested,
            self.max_violation,
            self.tolerance
        )
    }
}

fn scale<G: Geometry + ?Sized>(g: &G, pts: &[&Point]) -> Result<f64> {
    let mut s = 1.0f64;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            s = s.max(g.distance(pts[i], pts[j])?);
        }
    }
    Ok(s)
}

fn pick_t(rng: &mut ChaCha8Rng, i: usize) -> f64 {
    if i.is_multiple_of(2) {
        T_GRID[(i / 2) % T_GRID.len()]
    } else {
        rng.gen::<f64>()
    }
}

/// `d(z, W(x,y,t)) - (1-t) d(z,x) - t d(z,y)`.
pub fn w1_violation<G: Geometry + ?Sized>(g: &G, x: &Point, y: &Point, z: &Point, t: f64) -> Result<f64> {
    let m = g.geodesic(x, y, t)?;
    Ok(g.distance(z, &m)? - (1.0 - t) * g.distance(z, x)? - t * g.distance(z, y)?)
}

/// `|d(W(x,y,t), W(x,y,s)) - |t-s| d(x,y)|`.
pub fn w2_violation<G: Geometry + ?Sized>(g: &G, x: &Point, y: &Point, t: f64, s: f64) -> Result<f64> {
    let a = g.geodesic(x, y, t)?;
    let b = g.geodesic(x, y, s)?;
    Ok((g.distance(&a, &b)? - (t - s).abs() * g.distance(x, y)?).abs())
}

/// `d(W(x,y,t), W(y,x,1-t))`.
pub fn w3_violation<G: Geometry + ?Sized>(g: &G, x: &Point, y: &Point, t: f64) -> Result<f64> {
    g.distance(&g.geodesic(x, y, t)?, &g.geodesic(y, x, 1.0 - t)?)
}

/// `d(W(x,z,t), W(y,w,t)) - (1-t) d(x,y) - t d(z,w)`.
pub fn w4_violation<G: Geometry + ?Sized>(g: &G, x: &Point, y: &Point, z: &Point, w: &Point, t: f64) -> Result<f64> {
    let a = g.geodesic(x, z, t)?;
    let b = g.geodesic(y, w, t)?;
    Ok(g.distance(&a, &b)? - (1.0 - t) * g.distance(x, y)? - t * g.distance(z, w)?)
}

/// `d(x,m)^2 - (1-t) d(x,y1)^2 - t d(x,y2)^2 + t(1-t) d(y1,y2)^2` with
/// `m = W(y1, y2, t)`.
pub fn cn_violation<G: Geometry + ?Sized>(g: &G, x: &Point, y1: &Point, y2: &Point, t: f64) -> Result<f64> {
    let m = g.geodesic(y1, y2, t)?;
    let sq = |a: &Point, b: &Point| -> Result<f64> { Ok(g.distance(a, b)?.powi(2)) };
    Ok(sq(x, &m)? - (1.0 - t) * sq(x, y1)? - t * sq(x, y2)? + t * (1.0 - t) * sq(y1, y2)?)
}

/// `d(x,z) d(y,w) - d(x,y) d(z,w) - d(x,w) d(y,z)`.
pub fn ptolemy_violation<G: Geometry + ?Sized>(g: &G, x: &Point, y: &Point, z: &Point, w: &Point) -> Result<f64> {
    let d = |a: &Point, b: &Point| g.distance(a, b);
    Ok(d(x, z)? * d(y, w)? - d(x, y)? * d(z, w)? - d(x, w)? * d(y, z)?)
}

/// `|d(a,c) - d(a,b) - d(b,c)|`: zero iff `b` lies between `a` and `c`.
pub fn between_defect<G: Geometry + ?Sized>(g: &G, a: &Point, b: &Point, c: &Point) -> Result<f64> {
    Ok((g.distance(a, c)? - g.distance(a, b)? - g.distance(b, c)?).abs())
}

/// `d(W(x,y,1/2), a) - (1 - delta(r, eps)) r`.
pub fn uniform_convexity_violation<G: Geometry + ?Sized>(
    g: &G,
    modulus: &ModulusOfConvexity,
    a: &Point,
    x: &Point,
    y: &Point,
    r: f64,
    eps: f64,
) -> Result<f64> {
    let m = g.geodesic(x, y, 0.5)?;
    Ok(g.distance(&m, a)? - (1.0 - modulus.eval(r, eps)?) * r)
}

fn separated<G: Geometry + ?Sized>(g: &G, pts: &[&Point]) -> Result<bool> {
    let s = scale(g, pts)?;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            if g.distance(pts[i], pts[j])? < MIN_SEPARATION * s {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// A point within distance `r` of `center`, biased to the boundary sphere.
fn point_near<G: Geometry + ?Sized>(g: &G, center: &Point, r: f64, rng: &mut ChaCha8Rng) -> Result<Option<Point>> {
    let target = g.random_point(rng);
    let d = g.distance(center, &target)?;
    if d == 0.0 {
        return Ok(None);
    }
    let s = r * (1.0 - rng.gen::<f64>().powi(3));
    if s <= d {
        Ok(Some(g.geodesic(center, &target, s / d)?))
    } else {
        match g.extend(center, &target, s - d, rng)? {
            Some(p) if g.distance(center, &p)? <= r => Ok(Some(p)),
            _ => Ok(None),
        }
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// W1: distance to a point is convex along the convexity mapping.
pub fn check_w1<G: Geometry + ?Sized>(g: &G, n: usize, seed: u64) -> Result<CheckReport> {
    convex_like(g, Property::W1, n, seed)
}

/// `d(x, W(y,z,t)) <= (1-t) d(x,y) + t d(x,z)`.
pub fn check_convex_metric<G: Geometry + ?Sized>(g: &G, n: usize, seed: u64) -> Result<CheckReport> {
    convex_like(g, Property::ConvexMetric, n, seed)
}

fn convex_like<G: Geometry + ?Sized>(g: &G, prop: Property, n: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = rng(seed);
    let mut rep = CheckReport::new(prop, g.tol());
    for i in 0..n {
        let (x, y, z) = (g.random_point(&mut rng), g.random_point(&mut rng), g.random_point(&mut rng));
        let t = pick_t(&mut rng, i);
        // W1 with base point z on the geodesic [x, y]
        let v = w1_violation(g, &x, &y, &z, t)?;
        rep.record(v / scale(g, &[&x, &y, &z])?, &[&z, &x, &y], &[t]);
    }
    Ok(rep.finish())
}

pub fn check_w2<G: Geometry + ?Sized>(g: &G, n: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = rng(seed);
    let mut rep = CheckReport::new(Property::W2, g.tol());
    for i in 0..n {
        let (x, y) = (g.random_point(&mut rng), g.random_point(&mut rng));
        let t = pick_t(&mut rng, i);
        let s = rng.gen::<f64>();
        let v = w2_violation(g, &x, &y, t, s)?;
        rep.record(v / scale(g, &[&x, &y])?, &[&x, &y], &[t, s]);
    }
    Ok(rep.finish())
}

pub fn check_w3<G: Geometry + ?Sized>(g: &G, n: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = rng(seed);
    let mut rep = CheckReport::new(Property::W3, g.tol());
    for i in 0..n {
        let (x, y) = (g.random_point(&mut rng), g.random_point(&mut rng));
        let t = pick_t(&mut rng, i);
        let v = w3_violation(g, &x, &y, t)?;
        rep.record(v / scale(g, &[&x, &y])?, &[&x, &y], &[t]);
    }
    Ok(rep.finish())
}

pub fn check_w4<G: Geometry + ?Sized>(g: &G, n: usize, seed: u64) -> Result<CheckReport> {
    quadruple_convexity(g, Property::W4, n, seed)
}

/// Distance between two geodesics is convex in the common parameter.
pub fn check_busemann<G: Geometry + ?Sized>(g: &G, n: usize, seed: u64) -> Result<CheckReport> {
    quadruple_convexity(g, Property::Busemann, n, seed)
}

fn quadruple_convexity<G: Geometry + ?Sized>(g: &G, prop: Property, n: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = rng(seed);
    let mut rep = CheckReport::new(prop, g.tol());
    for i in 0..n {
        let pts: Vec<Point> = (0..4).map(|_| g.random_point(&mut rng)).collect();
        let (x, y, z, w) = (&pts[0], &pts[1], &pts[2], &pts[3]);
        // Busemann samples share a start point half the time
        let y = if prop == Property::Busemann && i % 2 == 1 { x } else { y };
        let t = pick_t(&mut rng, i);
        let v = w4_violation(g, x, y, z, w, t)?;
        rep.record(v / scale(g, &[x, y, z, w])?, &[x, y, z, w], &[t]);
    }
    Ok(rep.finish())
}

pub fn check_cn_inequality<G: Geometry + ?Sized>(g: &G, n: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = rng(seed);
    let mut rep = CheckReport::new(Property::Cn, g.tol());
    for i in 0..n {
        let (x, y1, y2) = (g.random_point(&mut rng), g.random_point(&mut rng), g.random_point(&mut rng));
        let t = pick_t(&mut rng, i);
        let v = cn_violation(g, &x, &y1, &y2, t)?;
        rep.record(v / scale(g, &[&x, &y1, &y2])?.powi(2), &[&x, &y1, &y2], &[t]);
    }
    Ok(rep.finish())
}

pub fn check_ptolemy<G: Geometry + ?Sized>(g: &G, n: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = rng(seed);
    let mut rep = CheckReport::new(Property::Ptolemy, g.tol());
    for _ in 0..n {
        let pts: Vec<Point> = (0..4).map(|_| g.random_point(&mut rng)).collect();
        let r: Vec<&Point> = pts.iter().collect();
        let v = ptolemy_violation(g, r[0], r[1], r[2], r[3])?;
        rep.record(v / scale(g, &r)?.powi(2), &r, &[]);
    }
    Ok(rep.finish())
}

/// Builds `x, y, z, w` with `y` between `x` and `z` and `z` between `y`
/// and `w`: by extending geodesics where the space allows it, otherwise by
/// placing `y` and `z` in order on a geodesic from `x` to `w`.
fn betweenness_config<G: Geometry + ?Sized>(g: &G, rng: &mut ChaCha8Rng) -> Result<Option<[Point; 4]>> {
    let x = g.random_point(rng);
    let y = g.random_point(rng);
    let d = g.distance(&x, &y)?;
    if d > 0.0 {
        let l1 = d * rng.gen_range(0.05..1.0);
        if let Some(z) = g.extend(&x, &y, l1, rng)? {
            let l2 = d * rng.gen_range(0.05..1.0);
            if let Some(w) = g.extend(&y, &z, l2, rng)? {
                return Ok(Some([x, y, z, w]));
            }
        }
    }
    let w = y;
    let s1 = rng.gen_range(0.05..0.95);
    let y = g.geodesic(&x, &w, s1)?;
    let z = g.geodesic(&y, &w, rng.gen_range(0.05..0.95))?;
    Ok(Some([x, y, z, w]))
}

/// If `y` is between `x`, `z` and `z` between `y`, `w`, then `y` and `z`
/// are between `x` and `w`.
pub fn check_betweenness_property<G: Geometry + ?Sized>(g: &G, n: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = rng(seed);
    let mut rep = CheckReport::new(Property::Betweenness, TOL_BETWEEN);
    let mut attempts = 0;
    while rep.samples_tested < n {
        attempts += 1;
        if attempts > 20 * n + 100 {
            return Err(domain("could not build separated betweenness configurations"));
        }
        let Some([x, y, z, w]) = betweenness_config(g, &mut rng)? else {
            continue;
        };
        let pts = [&x, &y, &z, &w];
        if !separated(g, &pts)? {
            rep.samples_skipped += 1;
            continue;
        }
        let s = scale(g, &pts)?;
        // the hypotheses hold by construction up to rounding
        let concl = between_defect(g, &x, &y, &w)?.max(between_defect(g, &x, &z, &w)?);
        rep.record(concl / s, &pts, &[]);
    }
    Ok(rep.finish())
}

/// `y` between `x, z` and `z` between `x, w` iff `y` between `x, w` and
/// `z` between `y, w`; both directions on constructed configurations.
pub fn check_weak_betweenness<G: Geometry + ?Sized>(g: &G, n: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = rng(seed);
    let mut rep = CheckReport::new(Property::WeakBetweenness, TOL_BETWEEN);
    let mut attempts = 0;
    while rep.samples_tested < n {
        attempts += 1;
        if attempts > 20 * n + 100 {
            return Err(domain("could not build separated betweenness configurations"));
        }
        let x = g.random_point(&mut rng);
        let w = g.random_point(&mut rng);
        let forward = rep.samples_tested.is_multiple_of(2);
        let (y, z) = if forward {
            // z on [x, w], y on [x, z]
            let z = g.geodesic(&x, &w, rng.gen_range(0.05..0.95))?;
            (g.geodesic(&x, &z, rng.gen_range(0.05..0.95))?, z)
        } else {
            // y on [x, w], z on [y, w]
            let y = g.geodesic(&x, &w, rng.gen_range(0.05..0.95))?;
            let z = g.geodesic(&y, &w, rng.gen_range(0.05..0.95))?;
            (y, z)
        };
        let pts = [&x, &y, &z, &w];
        if !separated(g, &pts)? {
            rep.samples_skipped += 1;
            continue;
        }
        let s = scale(g, &pts)?;
        let concl = if forward {
            between_defect(g, &x, &y, &w)?.max(between_defect(g, &y, &z, &w)?)
        } else {
            between_defect(g, &x, &y, &z)?.max(between_defect(g, &x, &z, &w)?)
        };
        rep.record(concl / s, &pts, &[forward as u8 as f64]);
    }
    Ok(rep.finish())
}

/// Midpoint inequality with the declared modulus, `eps = d(x,y)/r` per sample.
pub fn check_uniform_convexity<G: Geometry + ?Sized>(g: &G, n: usize, seed: u64) -> Result<CheckReport> {
    let modulus = g
        .modulus()
        .ok_or_else(|| unsupported("space declares no modulus of uniform convexity"))?;
    let mut rng = rng(seed);
    let mut rep = CheckReport::new(Property::UniformConvexity, g.tol());
    let mut attempts = 0;
    while rep.samples_tested < n {
        attempts += 1;
        if attempts > 20 * n + 100 {
            break;
        }
        let a = g.random_point(&mut rng);
        let r = rng.gen_range(0.05..1.5);
        let (Some(x), Some(y)) = (point_near(g, &a, r, &mut rng)?, point_near(g, &a, r, &mut rng)?) else {
            continue;
        };
        let eps = (g.distance(&x, &y)? / r).min(2.0);
        if eps < MIN_CONVEXITY_EPS {
            rep.samples_skipped += 1;
            continue;
        }
        let v = uniform_convexity_violation(g, &modulus, &a, &x, &y, r, eps)?;
        rep.record(v / scale(g, &[&a, &x, &y])?, &[&a, &x, &y], &[r, eps]);
    }
    Ok(rep.finish())
}

/// Symmetry, identity and the triangle inequality.
pub fn check_metric_axioms<G: Geometry + ?Sized>(g: &G, n: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = rng(seed);
    let mut rep = CheckReport::new(Property::Metric, g.tol());
    for _ in 0..n {
        let (x, y, z) = (g.random_point(&mut rng), g.random_point(&mut rng), g.random_point(&mut rng));
        let dxy = g.distance(&x, &y)?;
        let v = (dxy - g.distance(&y, &x)?)
            .abs()
            .max(g.distance(&x, &x)?)
            .max(dxy - g.distance(&x, &z)? - g.distance(&z, &y)?)
            .max(-dxy);
        rep.record(v / scale(g, &[&x, &y, &z])?, &[&x, &y, &z], &[]);
    }
    Ok(rep.finish())
}

pub fn check_property<G: Geometry + ?Sized>(g: &G, prop: Property, n: usize, seed: u64) -> Result<CheckReport> {
    if n == 0 {
        return Err(domain("need at least one sample"));
    }
    match prop {
        Property::W1 => check_w1(g, n, seed),
        Property::W2 => check_w2(g, n, seed),
        Property::W3 => check_w3(g, n, seed),
        Property::W4 => check_w4(g, n, seed),
        Property::ConvexMetric => check_convex_metric(g, n, seed),
        Property::Busemann => check_busemann(g, n, seed),
        Property::Cn => check_cn_inequality(g, n, seed),
        Property::Ptolemy => check_ptolemy(g, n, seed),
        Property::Betweenness => check_betweenness_property(g, n, seed),
        Property::WeakBetweenness => check_weak_betweenness(g, n, seed),
        Property::UniformConvexity => check_uniform_convexity(g, n, seed),
        Property::Metric => check_metric_axioms(g, n, seed),
    }
}
