//! Model geodesic spaces: distance, the convexity mapping `W(x, y, t)` and
//! moduli of uniform convexity.
//!
//! Four models are provided, all uniquely geodesic and Busemann convex:
//! Euclidean space, the Poincaré disk, finite metric trees, and
//! finite-dimensional `l_p` with linear interpolation as its convexity
//! mapping.

pub(crate) mod disk;
pub(crate) mod normed;
pub mod tree;

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{construction, domain, unsupported, Result};
pub use tree::{MetricTree, TreeSpec};

use disk::C;

/// Largest disk radius the samplers produce.
pub const DISK_SAMPLE_MAX_RADIUS: f64 = 0.999;

/// A point of a model space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Point {
    /// Coordinates in Euclidean or `l_p` space.
    Vector { coords: Vec<f64> },
    /// A point `u + iv` of the open unit disk.
    Disk { u: f64, v: f64 },
    /// A location on a tree edge, `offset` measured from the edge's `u` end.
    Tree { edge: usize, offset: f64 },
}

impl Point {
    pub fn vector(coords: impl Into<Vec<f64>>) -> Self {
        Point::Vector {
            coords: coords.into(),
        }
    }

    pub fn disk(u: f64, v: f64) -> Self {
        Point::Disk { u, v }
    }

    pub fn tree(edge: usize, offset: f64) -> Self {
        Point::Tree { edge, offset }
    }

    pub fn coords(&self) -> Option<&[f64]> {
        match self {
            Point::Vector { coords } => Some(coords),
            _ => None,
        }
    }

    /// Flat list of the numbers describing this point (used for CSV export
    /// and finiteness checks).
    pub fn components(&self) -> Vec<f64> {
        match self {
            Point::Vector { coords } => coords.clone(),
            Point::Disk { u, v } => vec![*u, *v],
            Point::Tree { edge, offset } => vec![*edge as f64, *offset],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.components().iter().all(|c| c.is_finite())
    }

    fn as_c(&self) -> Option<C> {
        match self {
            Point::Disk { u, v } => Some(C::new(*u, *v)),
            _ => None,
        }
    }

    fn from_c(z: C) -> Self {
        Point::Disk { u: z.re, v: z.im }
    }

    fn as_loc(&self) -> Option<(usize, f64)> {
        match self {
            Point::Tree { edge, offset } => Some((*edge, *offset)),
            _ => None,
        }
    }
}

/// Modulus of uniform convexity `delta(r, eps)`.
///
/// Every model here has a modulus that does not depend on `r`: `eps^2 / 8`
/// for the CAT(0) models and the Hanner-type lower bounds for `l_p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModulusOfConvexity {
    /// `eps^2 / 8`.
    Cat0,
    /// `(p - 1) eps^2 / 8` for `1 < p <= 2`, `eps^p / (p 2^p)` for `p > 2`.
    Lp { p: f64 },
}

impl ModulusOfConvexity {
    pub fn eval(&self, r: f64, eps: f64) -> Result<f64> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(domain(format!("modulus radius must be positive, got {r}")));
        }
        if !(eps > 0.0 && eps <= 2.0) {
            return Err(domain(format!("modulus eps must lie in (0, 2], got {eps}")));
        }
        Ok(self.eval_unchecked(eps))
    }

    pub(crate) fn eval_unchecked(&self, eps: f64) -> f64 {
        match *self {
            ModulusOfConvexity::Cat0 => eps * eps / 8.0,
            ModulusOfConvexity::Lp { p } if p <= 2.0 => (p - 1.0) / 8.0 * eps * eps,
            ModulusOfConvexity::Lp { p } => eps.powf(p) / (p * 2f64.powf(p)),
        }
    }

    /// `delta~` with `delta(r, eps) = eps * delta~(r, eps)`, increasing in eps.
    pub fn tilde_eval(&self, eps: f64) -> f64 {
        match *self {
            ModulusOfConvexity::Cat0 => eps / 8.0,
            ModulusOfConvexity::Lp { p } if p <= 2.0 => (p - 1.0) / 8.0 * eps,
            ModulusOfConvexity::Lp { p } => eps.powf(p - 1.0) / (p * 2f64.powf(p)),
        }
    }

    /// All supported moduli decrease (weakly) in `r`.
    pub fn is_monotone_in_r(&self) -> bool {
        true
    }

    pub fn is_radius_free(&self) -> bool {
        true
    }
}

/// A model geodesic space `(X, d, W)`.
#[derive(Clone, Debug, PartialEq)]
pub enum Space {
    Euclidean { dim: usize },
    PoincareDisk,
    MetricTree(Arc<MetricTree>),
    Lp { dim: usize, p: f64 },
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Space::Euclidean { dim } => write!(f, "euclidean:{dim}"),
            Space::PoincareDisk => write!(f, "disk"),
            Space::MetricTree(t) => write!(f, "tree({} vertices)", t.vertex_count()),
            Space::Lp { dim, p } => write!(f, "lp:{p}:{dim}"),
        }
    }
}

impl Space {
    pub fn euclidean(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(construction("dimension must be at least 1"));
        }
        Ok(Space::Euclidean { dim })
    }

    pub fn disk() -> Self {
        Space::PoincareDisk
    }

    pub fn tree(tree: MetricTree) -> Self {
        Space::MetricTree(Arc::new(tree))
    }

    pub fn lp(dim: usize, p: f64) -> Result<Self> {
        if dim == 0 {
            return Err(construction("dimension must be at least 1"));
        }
        if !(p >= 1.0 && p.is_finite()) {
            return Err(construction(format!("l_p needs 1 <= p < inf, got {p}")));
        }
        Ok(Space::Lp { dim, p })
    }

    /// Parse `euclidean:<dim>`, `disk`, `lp:<p>:<dim>` or `tree:tripod`.
    /// Trees loaded from files are resolved by the caller.
    pub fn parse(spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.split(':').collect();
        let bad = || construction(format!("unrecognised space spec {spec:?}"));
        match parts.as_slice() {
            ["euclidean", dim] => Space::euclidean(dim.parse().map_err(|_| bad())?),
            ["disk"] | ["poincare"] => Ok(Space::disk()),
            ["lp", p, dim] => Space::lp(
                dim.parse().map_err(|_| bad())?,
                p.parse().map_err(|_| bad())?,
            ),
            ["tree", "tripod"] => Ok(Space::tree(MetricTree::tripod())),
            _ => Err(bad()),
        }
    }

    /// Numerical tolerance for geometric identities in this space.
    pub fn tol(&self) -> f64 {
        match self {
            Space::PoincareDisk => 1e-6,
            _ => 1e-9,
        }
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            Space::Euclidean { dim } | Space::Lp { dim, .. } => Some(*dim),
            _ => None,
        }
    }

    /// Exponent of the norm for normed models.
    pub fn norm_exponent(&self) -> Option<f64> {
        match self {
            Space::Euclidean { .. } => Some(2.0),
            Space::Lp { p, .. } => Some(*p),
            _ => None,
        }
    }

    pub fn is_normed(&self) -> bool {
        self.norm_exponent().is_some()
    }

    /// Whether the space satisfies the CN inequality.
    pub fn is_cat0(&self) -> bool {
        match self {
            Space::Lp { p, .. } => *p == 2.0,
            _ => true,
        }
    }

    pub fn tree_ref(&self) -> Option<&MetricTree> {
        match self {
            Space::MetricTree(t) => Some(t),
            _ => None,
        }
    }

    pub fn modulus(&self) -> Option<ModulusOfConvexity> {
        match self {
            Space::Lp { p, .. } if *p == 1.0 => None,
            Space::Lp { p, .. } => Some(ModulusOfConvexity::Lp { p: *p }),
            _ => Some(ModulusOfConvexity::Cat0),
        }
    }

    pub fn modulus_eval(&self, r: f64, eps: f64) -> Result<f64> {
        self.modulus()
            .ok_or_else(|| unsupported(format!("{self} has no modulus of uniform convexity")))?
            .eval(r, eps)
    }

    /// Check that `x` is a well-formed point of this space.
    pub fn check_point(&self, x: &Point) -> Result<()> {
        match (self, x) {
            (Space::Euclidean { dim } | Space::Lp { dim, .. }, Point::Vector { coords }) => {
                if coords.len() != *dim {
                    return Err(domain(format!(
                        "expected {dim} coordinates, got {}",
                        coords.len()
                    )));
                }
                Ok(())
            }
            (Space::PoincareDisk, Point::Disk { u, v }) => {
                if u * u + v * v >= 1.0 {
                    return Err(domain(format!("({u}, {v}) is not inside the unit disk")));
                }
                Ok(())
            }
            (Space::MetricTree(t), Point::Tree { edge, offset }) => {
                let e = t
                    .edges()
                    .get(*edge)
                    .ok_or_else(|| domain(format!("tree has no edge {edge}")))?;
                if !(*offset >= 0.0 && *offset <= e.length) {
                    return Err(domain(format!(
                        "offset {offset} outside edge {edge} of length {}",
                        e.length
                    )));
                }
                Ok(())
            }
            _ => Err(domain(format!("point {x:?} does not belong to {self}"))),
        }
    }

    pub fn distance(&self, x: &Point, y: &Point) -> Result<f64> {
        match (self, x, y) {
            (Space::Euclidean { .. } | Space::Lp { .. }, Point::Vector { coords: a }, Point::Vector { coords: b }) => {
                if a.len() != b.len() {
                    return Err(domain("coordinate vectors of different lengths"));
                }
                Ok(normed::distance(a, b, self.norm_exponent().unwrap()))
            }
            (Space::PoincareDisk, Point::Disk { .. }, Point::Disk { .. }) => {
                Ok(disk::distance(x.as_c().unwrap(), y.as_c().unwrap()))
            }
            (Space::MetricTree(t), Point::Tree { .. }, Point::Tree { .. }) => {
                Ok(t.distance(x.as_loc().unwrap(), y.as_loc().unwrap()))
            }
            _ => Err(domain(format!("points {x:?} and {y:?} do not both belong to {self}"))),
        }
    }

    /// `W(x, y, t)`: the point on the geodesic from `x` to `y` at distance
    /// `t d(x, y)` from `x`. Returns `x` itself for `t = 0` and `y` itself
    /// for `t = 1`.
    pub fn convex_combination(&self, x: &Point, y: &Point, t: f64) -> Result<Point> {
        if !(0.0..=1.0).contains(&t) {
            return Err(domain(format!("convex combination parameter {t} outside [0, 1]")));
        }
        // validates kinds
        self.distance(x, y)?;
        if t == 0.0 {
            return Ok(x.clone());
        }
        if t == 1.0 {
            return Ok(y.clone());
        }
        Ok(match self {
            Space::Euclidean { .. } | Space::Lp { .. } => {
                Point::vector(normed::lerp(x.coords().unwrap(), y.coords().unwrap(), t))
            }
            Space::PoincareDisk => {
                Point::from_c(disk::geodesic_point(x.as_c().unwrap(), y.as_c().unwrap(), t))
            }
            Space::MetricTree(tr) => {
                let (p, q) = (x.as_loc().unwrap(), y.as_loc().unwrap());
                let (e, o) = tr.walk(p, q, t * tr.distance(p, q));
                Point::tree(e, o)
            }
        })
    }

    /// A point `w` with `y` on the geodesic from `x` to `w` and `d(y, w)` at
    /// most `len`. Trees branch at random and may stop early at a leaf;
    /// `None` when `x = y` gives no direction.
    pub fn extend_geodesic<R: Rng + ?Sized>(
        &self,
        x: &Point,
        y: &Point,
        len: f64,
        rng: &mut R,
    ) -> Result<Option<Point>> {
        if self.distance(x, y)? == 0.0 {
            return Ok(None);
        }
        Ok(match self {
            Space::Euclidean { .. } | Space::Lp { .. } => {
                let (a, b) = (x.coords().unwrap(), y.coords().unwrap());
                let d = normed::distance(a, b, self.norm_exponent().unwrap());
                let s = len / d;
                Some(Point::vector(
                    a.iter().zip(b).map(|(p, q)| q + s * (q - p)).collect::<Vec<_>>(),
                ))
            }
            Space::PoincareDisk => {
                disk::extend(x.as_c().unwrap(), y.as_c().unwrap(), len).map(Point::from_c)
            }
            Space::MetricTree(t) => {
                let (e, o) = t.extend(x.as_loc().unwrap(), y.as_loc().unwrap(), len, rng);
                Some(Point::tree(e, o))
            }
        })
    }

    /// The point of a tree at a named vertex.
    pub fn vertex_point(&self, name: &str) -> Result<Point> {
        let t = self
            .tree_ref()
            .ok_or_else(|| unsupported(format!("{self} has no named vertices")))?;
        let v = t
            .vertex_index(name)
            .ok_or_else(|| domain(format!("unknown vertex {name:?}")))?;
        let (e, o) = t.vertex_location(v);
        Ok(Point::tree(e, o))
    }

    pub(crate) fn disk_project_segment(&self, a: &Point, b: &Point, z: &Point) -> Point {
        Point::from_c(disk::project_segment(
            a.as_c().unwrap(),
            b.as_c().unwrap(),
            z.as_c().unwrap(),
        ))
    }
}
