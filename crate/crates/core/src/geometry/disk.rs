//! Poincaré disk model of the hyperbolic plane.
//!
//! Points are complex numbers of modulus < 1. Geodesics through the origin
//! are diameters, so most constructions translate one endpoint to the origin
//! with a disk automorphism, work radially, and translate back.

use std::ops::{Add, Mul, Sub};

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct C {
    pub re: f64,
    pub im: f64,
}

impl C {
    pub fn new(re: f64, im: f64) -> Self {
        C { re, im }
    }

    pub fn conj(self) -> Self {
        C::new(self.re, -self.im)
    }

    pub fn abs(self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn norm_sqr(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    pub fn scale(self, s: f64) -> Self {
        C::new(self.re * s, self.im * s)
    }

    pub fn div(self, o: C) -> C {
        let d = o.norm_sqr();
        C::new(
            (self.re * o.re + self.im * o.im) / d,
            (self.im * o.re - self.re * o.im) / d,
        )
    }
}

impl Add for C {
    type Output = C;
    fn add(self, o: C) -> C {
        C::new(self.re + o.re, self.im + o.im)
    }
}

impl Sub for C {
    type Output = C;
    fn sub(self, o: C) -> C {
        C::new(self.re - o.re, self.im - o.im)
    }
}

impl Mul for C {
    type Output = C;
    fn mul(self, o: C) -> C {
        C::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }
}

const ONE: C = C { re: 1.0, im: 0.0 };

/// Automorphism sending `a` to the origin.
pub(crate) fn to_origin(a: C, z: C) -> C {
    (z - a).div(ONE - a.conj() * z)
}

/// Inverse of [`to_origin`].
pub(crate) fn from_origin(a: C, w: C) -> C {
    (w + a).div(ONE + a.conj() * w)
}

pub(crate) fn distance(z: C, w: C) -> f64 {
    if z == w {
        return 0.0;
    }
    let num = (z - w).abs();
    let den = (ONE - z.conj() * w).abs();
    let ratio = (num / den).min(1.0);
    2.0 * ratio.atanh()
}

/// Point at hyperbolic distance `s` from the origin in the direction of `dir`.
fn radial(dir: C, s: f64) -> C {
    let rho = dir.abs();
    dir.scale((s / 2.0).tanh() / rho)
}

/// The point W(x, y, t) on the geodesic from `x` to `y`.
pub(crate) fn geodesic_point(x: C, y: C, t: f64) -> C {
    if t == 0.0 || x == y {
        return x;
    }
    if t == 1.0 {
        return y;
    }
    let y0 = to_origin(x, y);
    let d = 2.0 * y0.abs().min(1.0).atanh();
    from_origin(x, radial(y0, t * d))
}

/// The point beyond `y` on the geodesic ray from `x` through `y`, at distance
/// `len` from `y`.
pub(crate) fn extend(x: C, y: C, len: f64) -> Option<C> {
    if x == y {
        return None;
    }
    let y0 = to_origin(x, y);
    let d = 2.0 * y0.abs().min(1.0).atanh();
    Some(from_origin(x, radial(y0, d + len)))
}

/// Nearest point of the geodesic segment `[a, b]` to `z`.
///
/// `a` is moved to the origin and `b` rotated onto the positive real axis.
/// Perpendiculars to a diameter are Euclidean-perpendicular chords in the
/// Klein model, so the foot is read off there and clamped to the segment.
pub(crate) fn project_segment(a: C, b: C, z: C) -> C {
    if a == b {
        return a;
    }
    let b0 = to_origin(a, b);
    let rho = b0.abs();
    let rot = b0.scale(1.0 / rho);
    let z0 = to_origin(a, z) * rot.conj();
    let klein = 2.0 * z0.re / (1.0 + z0.norm_sqr());
    let foot = klein / (1.0 + (1.0 - klein * klein).max(0.0).sqrt());
    if foot <= 0.0 {
        a
    } else if foot >= rho {
        b
    } else {
        from_origin(a, rot.scale(foot))
    }
}
