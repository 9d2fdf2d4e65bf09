//! Seeded, space-aware samplers.
//!
//! Euclidean and `l_p` points are uniform in a Euclidean ball around the
//! origin, disk points uniform in a Euclidean disk of radius 0.9, tree points
//! uniform over edges (edge first, then offset).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{Point, Space, DISK_SAMPLE_MAX_RADIUS};

pub const DEFAULT_NORMED_RADIUS: f64 = 2.0;
pub const DEFAULT_DISK_RADIUS: f64 = 0.9;

pub struct Sampler<'a> {
    space: &'a Space,
    rng: ChaCha8Rng,
    radius: f64,
}

impl<'a> Sampler<'a> {
    pub fn new(space: &'a Space, seed: u64) -> Self {
        Sampler {
            space,
            rng: ChaCha8Rng::seed_from_u64(seed),
            radius: default_radius(space),
        }
    }

    /// Sampling radius: Euclidean radius for normed spaces and the disk
    /// (capped at 0.999 there); ignored for trees.
    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = match self.space {
            Space::PoincareDisk => radius.min(DISK_SAMPLE_MAX_RADIUS),
            _ => radius,
        };
        self
    }

    pub fn space(&self) -> &Space {
        self.space
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }

    pub fn point(&mut self) -> Point {
        random_point(self.space, self.radius, &mut self.rng)
    }

    /// A point at distance at most `r` from `center`, biased towards the
    /// boundary sphere.
    pub fn point_near(&mut self, center: &Point, r: f64) -> Point {
        loop {
            let target = self.point();
            let d = self.space.distance(center, &target).expect("sampled point");
            if d == 0.0 {
                continue;
            }
            let s = r * (1.0 - self.rng.gen::<f64>().powi(3));
            let p = if s <= d {
                self.space
                    .convex_combination(center, &target, s / d)
                    .expect("valid parameter")
            } else {
                match self
                    .space
                    .extend_geodesic(center, &target, s - d, &mut self.rng)
                    .expect("same space")
                {
                    Some(p) => p,
                    None => continue,
                }
            };
            if self.space.check_point(&p).is_ok() && within_sampling_region(self.space, &p) {
                return p;
            }
        }
    }

    pub fn pair(&mut self) -> (Point, Point) {
        (self.point(), self.point())
    }
}

fn within_sampling_region(space: &Space, p: &Point) -> bool {
    match (space, p) {
        (Space::PoincareDisk, Point::Disk { u, v }) => {
            u * u + v * v <= DISK_SAMPLE_MAX_RADIUS * DISK_SAMPLE_MAX_RADIUS
        }
        _ => true,
    }
}

fn ball_coords<R: Rng + ?Sized>(dim: usize, radius: f64, rng: &mut R) -> Vec<f64> {
    // Gaussian direction via Box-Muller, radius ~ U^(1/dim)
    let mut g: Vec<f64> = (0..dim)
        .map(|_| {
            let u1: f64 = 1.0 - rng.gen::<f64>();
            let u2: f64 = rng.gen();
            (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
        })
        .collect();
    let len = g.iter().map(|c| c * c).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let r = radius * rng.gen::<f64>().powf(1.0 / dim as f64);
    for c in g.iter_mut() {
        *c *= r / len;
    }
    g
}

/// One sample from the space's default distribution; `radius` is the
/// Euclidean radius of the ball (normed spaces, disk) and is ignored on trees.
pub fn random_point<R: Rng + ?Sized>(space: &Space, radius: f64, rng: &mut R) -> Point {
    match space {
        Space::Euclidean { dim } | Space::Lp { dim, .. } => Point::vector(ball_coords(*dim, radius, rng)),
        Space::PoincareDisk => {
            let c = ball_coords(2, radius.min(DISK_SAMPLE_MAX_RADIUS), rng);
            Point::disk(c[0], c[1])
        }
        Space::MetricTree(t) => {
            let e = rng.gen_range(0..t.edges().len());
            let len = t.edges()[e].length;
            Point::tree(e, rng.gen_range(0.0..=len))
        }
    }
}

/// Default sampling radius for the space.
pub fn default_radius(space: &Space) -> f64 {
    match space {
        Space::PoincareDisk => DEFAULT_DISK_RADIUS,
        _ => DEFAULT_NORMED_RADIUS,
    }
}

/// Source of point pairs for mapping checks: seeded random pairs plus any
/// explicitly supplied witnesses.
#[derive(Clone, Debug, Default)]
pub struct PairSampler {
    pub seed: u64,
    pub radius: Option<f64>,
    pub extra: Vec<(Point, Point)>,
}

impl PairSampler {
    pub fn seeded(seed: u64) -> Self {
        PairSampler {
            seed,
            ..Default::default()
        }
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = Some(radius);
        self
    }

    pub fn with_pairs(mut self, pairs: impl IntoIterator<Item = (Point, Point)>) -> Self {
        self.extra.extend(pairs);
        self
    }

    /// The explicit pairs followed by `n` random ones.
    pub fn draw(&self, space: &Space, n: usize) -> Vec<(Point, Point)> {
        let mut s = Sampler::new(space, self.seed);
        if let Some(r) = self.radius {
            s = s.with_radius(r);
        }
        let mut out = self.extra.clone();
        out.extend((0..n).map(|_| s.pair()));
        out
    }

    /// `n` random single points (plus the first entry of every explicit pair).
    pub fn draw_points(&self, space: &Space, n: usize) -> Vec<Point> {
        let mut s = Sampler::new(space, self.seed);
        if let Some(r) = self.radius {
            s = s.with_radius(r);
        }
        let mut out: Vec<Point> = self.extra.iter().map(|(x, _)| x.clone()).collect();
        out.extend((0..n).map(|_| s.point()));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::MetricTree;

    #[test]
    fn samples_are_deterministic_and_in_region() {
        for space in [
            Space::euclidean(3).unwrap(),
            Space::disk(),
            Space::tree(MetricTree::tripod()),
            Space::lp(2, 4.0).unwrap(),
        ] {
            let a: Vec<Point> = {
                let mut s = Sampler::new(&space, 11);
                (0..50).map(|_| s.point()).collect()
            };
            let b: Vec<Point> = {
                let mut s = Sampler::new(&space, 11);
                (0..50).map(|_| s.point()).collect()
            };
            assert_eq!(a, b);
            for p in &a {
                space.check_point(p).unwrap();
            }
        }
    }

    #[test]
    fn point_near_stays_in_ball() {
        for space in [Space::euclidean(2).unwrap(), Space::disk(), Space::tree(MetricTree::tripod())] {
            let mut s = Sampler::new(&space, 3);
            let c = s.point();
            for _ in 0..200 {
                let p = s.point_near(&c, 0.7);
                assert!(space.distance(&c, &p).unwrap() <= 0.7 + 1e-9);
            }
        }
    }
}
