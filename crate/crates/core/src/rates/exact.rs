//! Exact rationals from decimal inputs and directed-rounding fixed-point
//! bounds for `e^n` and rational powers.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{domain, Result};

/// Precision ceiling (bits) for interval refinement.
const MAX_PREC: u64 = 1 << 20;

/// The exact rational whose shortest round-trip decimal is `x`, so `0.1`
/// becomes `1/10` rather than the nearest binary fraction.
pub(crate) fn rational(x: f64) -> Result<BigRational> {
    if !x.is_finite() {
        return Err(domain(format!("non-finite input {x}")));
    }
    let s = format!("{x:e}");
    let (mant, exp) = s.split_once('e').expect("exponent form");
    let exp: i64 = exp.parse().expect("integer exponent");
    let neg = mant.starts_with('-');
    let mant = mant.trim_start_matches('-');
    let (int, frac) = mant.split_once('.').unwrap_or((mant, ""));
    let digits: BigInt = format!("{int}{frac}").parse().expect("decimal digits");
    let shift = exp - frac.len() as i64;
    let ten = BigInt::from(10u8);
    let mut r = if shift >= 0 {
        BigRational::from_integer(digits * num_traits::pow(ten, shift as usize))
    } else {
        BigRational::new(digits, num_traits::pow(ten, (-shift) as usize))
    };
    if neg {
        r = -r;
    }
    Ok(r)
}

pub(crate) fn int(n: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub(crate) fn floor_u(r: &BigRational) -> BigUint {
    let f = r.floor().to_integer();
    if f.is_negative() {
        BigUint::zero()
    } else {
        f.magnitude().clone()
    }
}

pub(crate) fn ceil_u(r: &BigRational) -> BigUint {
    let c = r.ceil().to_integer();
    if c.is_negative() {
        BigUint::zero()
    } else {
        c.magnitude().clone()
    }
}

/// Bounds `lo <= e * 2^prec <= hi`.
fn e_bounds(prec: u64) -> (BigUint, BigUint) {
    let one = BigUint::one() << prec;
    let mut term = one.clone();
    let mut sum = one;
    let mut k = 1u32;
    while !term.is_zero() {
        term /= k;
        sum += &term;
        k += 1;
    }
    // each nested floor loses < 2, the dropped tail is < 4
    let hi = &sum + BigUint::from(2 * k + 4);
    (sum, hi)
}

fn mul_floor(a: &BigUint, b: &BigUint, prec: u64) -> BigUint {
    (a * b) >> prec
}

fn mul_ceil(a: &BigUint, b: &BigUint, prec: u64) -> BigUint {
    let p = a * b;
    let q = &p >> prec;
    if (q.clone() << prec) == p {
        q
    } else {
        q + 1u32
    }
}

/// Bounds `lo <= e^n * 2^prec <= hi`.
pub(crate) fn exp_bounds(n: u64, prec: u64) -> (BigUint, BigUint) {
    let (e_lo, e_hi) = e_bounds(prec);
    let one = BigUint::one() << prec;
    let (mut lo, mut hi) = (one.clone(), one);
    let (mut b_lo, mut b_hi) = (e_lo, e_hi);
    let mut k = n;
    while k > 0 {
        if k & 1 == 1 {
            lo = mul_floor(&lo, &b_lo, prec);
            hi = mul_ceil(&hi, &b_hi, prec);
        }
        k >>= 1;
        if k > 0 {
            b_lo = mul_floor(&b_lo, &b_lo, prec);
            b_hi = mul_ceil(&b_hi, &b_hi, prec);
        }
    }
    (lo, hi)
}

fn scaled(v: &BigUint, prec: u64) -> BigRational {
    BigRational::new(BigInt::from(v.clone()), BigInt::from(BigUint::one() << prec))
}

/// `ceil(c * (shift + e^n))` for rational `c > 0` and integer `shift >= 0`.
///
/// `c (shift + e^n)` is irrational for `n >= 1`, so raising the precision
/// separates the two ceilings.
pub(crate) fn ceil_scaled_exp(c: &BigRational, shift: u64, n: u64) -> Result<BigUint> {
    if n == 0 {
        return Ok(ceil_u(&(c * int(shift + 1))));
    }
    let c_bits = c.numer().bits().saturating_sub(c.denom().bits());
    let mut prec = 64 + 2 * n + c_bits;
    while prec <= MAX_PREC {
        let (lo, hi) = exp_bounds(n, prec);
        let s = int(shift);
        let a = ceil_u(&(c * (&s + scaled(&lo, prec))));
        let b = ceil_u(&(c * (&s + scaled(&hi, prec))));
        if a == b {
            return Ok(a);
        }
        prec *= 2;
    }
    Err(domain("exponential bound did not resolve"))
}

/// Bounds `lo <= x^p * 2^prec <= hi` for rational `x > 0`, `p > 0`.
fn pow_bounds(x: &BigRational, p: &BigRational, prec: u64) -> Result<(BigUint, BigUint)> {
    let a = p.numer().to_u32().ok_or_else(|| domain("exponent numerator too large"))?;
    let c = p.denom().to_u32().ok_or_else(|| domain("exponent denominator too large"))?;
    let n = x.numer().magnitude().pow(a);
    let d = x.denom().magnitude().pow(a);
    let q = (n << (prec * c as u64)).div_floor(&d);
    let lo = q.nth_root(c);
    let hi = &lo + 2u32;
    Ok((lo, hi))
}

/// `floor(a / x^p)` for positive rationals `a`, `x`, `p`.
///
/// Exact when `p` is an integer. Otherwise interval refinement; if the
/// bracket never closes (the quotient is an integer to within the precision
/// ceiling) the upper floor is returned, which keeps a rate bound valid.
pub(crate) fn floor_div_pow(a: &BigRational, x: &BigRational, p: &BigRational) -> Result<BigUint> {
    if p.is_integer() {
        let e = p.to_integer().to_i32().ok_or_else(|| domain("exponent too large"))?;
        return Ok(floor_u(&(a / num_traits::pow(x.clone(), e as usize))));
    }
    let mut prec = 128u64;
    let mut last = None;
    while prec <= 4096 {
        let (lo, hi) = pow_bounds(x, p, prec)?;
        if !lo.is_zero() {
            let up = floor_u(&(a / scaled(&lo, prec)));
            let down = floor_u(&(a / scaled(&hi, prec)));
            if up == down {
                return Ok(up);
            }
            last = Some(up);
        }
        prec *= 2;
    }
    last.ok_or_else(|| domain("power bound did not resolve"))
}
