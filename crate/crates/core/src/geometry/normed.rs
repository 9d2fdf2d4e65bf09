//! Finite-dimensional sequence spaces with the p-norm. The Euclidean space is
//! the p = 2 instance; its convexity mapping is linear interpolation.

pub(crate) fn norm(v: &[f64], p: f64) -> f64 {
    if p == 2.0 {
        // scaled to avoid overflow for large coordinates
        let scale = v.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        if scale == 0.0 || !scale.is_finite() {
            return scale;
        }
        let s: f64 = v.iter().map(|c| (c / scale) * (c / scale)).sum();
        return scale * s.sqrt();
    }
    let scale = v.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let s: f64 = v.iter().map(|c| (c.abs() / scale).powf(p)).sum();
    scale * s.powf(1.0 / p)
}

pub(crate) fn distance(x: &[f64], y: &[f64], p: f64) -> f64 {
    let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    norm(&diff, p)
}

pub(crate) fn lerp(x: &[f64], y: &[f64], t: f64) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| (1.0 - t) * a + t * b).collect()
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Dual exponent q with 1/p + 1/q = 1 (infinite for p = 1).
pub(crate) fn dual_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else {
        p / (p - 1.0)
    }
}

/// Unit vector `u` (in the p-norm) attaining `<n, u> = ||n||_q`.
pub(crate) fn norming_direction(n: &[f64], p: f64) -> Vec<f64> {
    if p == 2.0 {
        let len = norm(n, 2.0);
        return n.iter().map(|c| c / len).collect();
    }
    if p == 1.0 {
        let (j, _) = n
            .iter()
            .enumerate()
            .fold((0, 0.0_f64), |(bj, bv), (j, c)| if c.abs() > bv { (j, c.abs()) } else { (bj, bv) });
        let mut u = vec![0.0; n.len()];
        u[j] = n[j].signum();
        return u;
    }
    let q = dual_exponent(p);
    let raw: Vec<f64> = n.iter().map(|c| c.signum() * c.abs().powf(q - 1.0)).collect();
    let len = norm(&raw, p);
    raw.iter().map(|c| c / len).collect()
}
