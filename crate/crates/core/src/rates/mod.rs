//! Rates of asymptotic regularity as exact integers.
//!
//! Inputs are read as the decimals they print as, all floors and ceilings are
//! taken on exact rationals, and exponentials are bracketed with directed
//! rounding, so a bound is never under-reported.

mod exact;

use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{domain, unsupported, Result};
use crate::geometry::ModulusOfConvexity;
use crate::iteration::{regularity_index, OrbitTrace, Scheme};

use exact::{ceil_scaled_exp, ceil_u, floor_div_pow, floor_u, int, rational};

/// Bounds whose decimal logarithm exceeds this are not materialized.
pub const SATURATION_LOG10: f64 = 300.0;

const WEIGHT_SUM_TOL: f64 = 1e-12;

/// A nonnegative integer, or a marker for one too large to write out.
#[derive(Clone, Debug, PartialEq)]
pub enum ExtendedCount {
    Exact(BigUint),
    Saturated { log10: f64 },
}

impl ExtendedCount {
    pub fn exact(n: u64) -> Self {
        ExtendedCount::Exact(BigUint::from(n))
    }

    pub fn is_saturated(&self) -> bool {
        matches!(self, ExtendedCount::Saturated { .. })
    }

    pub fn as_u64(&self) -> Option<u64> {
        match self {
            ExtendedCount::Exact(n) => n.to_u64(),
            ExtendedCount::Saturated { .. } => None,
        }
    }

    /// Decimal logarithm (exact values: of the value itself, `-inf` for 0).
    pub fn log10(&self) -> f64 {
        match self {
            ExtendedCount::Exact(n) if n.is_zero() => f64::NEG_INFINITY,
            ExtendedCount::Exact(n) => log10_big(n),
            ExtendedCount::Saturated { log10 } => *log10,
        }
    }

    /// `n <= self`; saturated bounds admit everything.
    pub fn admits(&self, n: u64) -> bool {
        match self {
            ExtendedCount::Exact(b) => BigUint::from(n) <= *b,
            ExtendedCount::Saturated { .. } => true,
        }
    }

    fn from_big(n: BigUint) -> Self {
        let l = log10_big(&n);
        if l > SATURATION_LOG10 {
            ExtendedCount::Saturated { log10: l }
        } else {
            ExtendedCount::Exact(n)
        }
    }
}

impl PartialOrd for ExtendedCount {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        use ExtendedCount::*;
        match (self, other) {
            (Exact(a), Exact(b)) => a.partial_cmp(b),
            (Exact(_), Saturated { .. }) => Some(std::cmp::Ordering::Less),
            (Saturated { .. }, Exact(_)) => Some(std::cmp::Ordering::Greater),
            (Saturated { log10: a }, Saturated { log10: b }) => a.partial_cmp(b),
        }
    }
}

impl fmt::Display for ExtendedCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedCount::Exact(n) => write!(f, "{n}"),
            ExtendedCount::Saturated { log10 } => write!(f, "saturated(≈10^{})", log10.floor()),
        }
    }
}

impl Serialize for ExtendedCount {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

fn log10_big(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        return n.to_f64().unwrap_or(f64::INFINITY).log10();
    }
    let shift = bits - 64;
    (n >> shift).to_f64().unwrap().log10() + shift as f64 * std::f64::consts::LOG10_2
}

fn check_eps_b(eps: f64, b: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(domain(format!("eps must be positive, got {eps}")));
    }
    if !(b > 0.0 && b.is_finite()) {
        return Err(domain(format!("b must be positive, got {b}")));
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(domain(format!("lambda must lie in (0, 1), got {lambda}")));
    }
    Ok(())
}

fn saturated_if(log10: f64) -> Option<ExtendedCount> {
    (log10.is_nan() || log10 > SATURATION_LOG10).then_some(ExtendedCount::Saturated { log10 })
}

/// Rate for averaged maps on a set of diameter at most `b`:
/// `K M ceil(2 b e^{K(M+1)})`, `K = max(ceil(1/lambda), ceil(1/(1-lambda)))`,
/// `M = ceil(lambda (1 + 2b) / eps)`.
pub fn averaged_rate(eps: f64, b: f64, lambda: f64) -> Result<ExtendedCount> {
    check_eps_b(eps, b)?;
    check_lambda(lambda)?;
    let (e, br, l) = (rational(eps)?, rational(b)?, rational(lambda)?);
    let one = int(1);
    let k = ceil_u(&(&one / &l)).max(ceil_u(&(&one / (&one - &l))));
    let m = ceil_u(&(&l * (&one + int(2) * &br) / &e));
    let (kf, mf) = (k.to_f64().unwrap(), m.to_f64().unwrap_or(f64::INFINITY));
    let est = (kf * mf).log10() + (2.0 * b).log10() + kf * (mf + 1.0) * std::f64::consts::LOG10_E;
    if let Some(s) = saturated_if(est) {
        return Ok(s);
    }
    let n = (&k * (&m + 1u32)).to_u64().expect("small exponent");
    let c = ceil_scaled_exp(&(int(2) * &br), 0, n)?;
    Ok(ExtendedCount::from_big(k * m * c))
}

/// Rate for `lambda`-firmly nonexpansive maps:
/// `M ceil(2 b (1 + e^{KM}) / eps)`, `K = ceil(1/lambda)`, `M = ceil(4b/eps)`.
pub fn firmly_rate(eps: f64, b: f64, lambda: f64) -> Result<ExtendedCount> {
    check_eps_b(eps, b)?;
    check_lambda(lambda)?;
    let (e, br, l) = (rational(eps)?, rational(b)?, rational(lambda)?);
    let k = ceil_u(&(int(1) / &l));
    let m = ceil_u(&(int(4) * &br / &e));
    let (kf, mf) = (k.to_f64().unwrap(), m.to_f64().unwrap_or(f64::INFINITY));
    let est = mf.log10() + (2.0 * b / eps).log10() + kf * mf * std::f64::consts::LOG10_E;
    if let Some(s) = saturated_if(est) {
        return Ok(s);
    }
    let n = (&k * &m).to_u64().expect("small exponent");
    let c = ceil_scaled_exp(&(int(2) * &br / &e), 1, n)?;
    Ok(ExtendedCount::from_big(m * c))
}

/// Rate for alternating projections: `floor(b^2 / eps^2)` for `eps < 2b`,
/// otherwise 0.
pub fn ap_rate(eps: f64, b: f64) -> Result<ExtendedCount> {
    check_eps_b(eps, b)?;
    let (e, br) = (rational(eps)?, rational(b)?);
    if e >= int(2) * &br {
        return Ok(ExtendedCount::exact(0));
    }
    if let Some(s) = saturated_if(2.0 * (b.log10() - eps.log10())) {
        return Ok(s);
    }
    Ok(ExtendedCount::from_big(floor_u(&(&br * &br / (&e * &e)))))
}

/// `K = min_i alpha_i lambda_i (1 - lambda_i)`, exact.
fn parallel_k(lambdas: &[f64], alphas: &[f64]) -> Result<BigRational> {
    if lambdas.len() != alphas.len() || lambdas.len() < 2 {
        return Err(domain("need r >= 2 lambdas and weights of equal length"));
    }
    for &l in lambdas {
        check_lambda(l)?;
    }
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
        return Err(domain(format!("weight {a} outside (0, 1)")));
    }
    let sum: f64 = alphas.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(domain(format!("weights sum to {sum}, not 1")));
    }
    let mut k: Option<BigRational> = None;
    for (l, a) in lambdas.iter().zip(alphas) {
        let l = rational(*l)?;
        let v = rational(*a)? * &l * (int(1) - &l);
        k = Some(match k {
            Some(cur) if cur <= v => cur,
            _ => v,
        });
    }
    Ok(k.expect("nonempty"))
}

/// `min_i alpha_i lambda_i (1 - lambda_i)` as a float.
pub fn parallel_constant(lambdas: &[f64], alphas: &[f64]) -> Result<f64> {
    Ok(parallel_k(lambdas, alphas)?.to_f64().unwrap_or(0.0))
}

/// Decimal exponent `p` of an `l_p` modulus, with `p > 1` enforced.
fn lp_exponent(m: &ModulusOfConvexity) -> Result<Option<BigRational>> {
    match *m {
        ModulusOfConvexity::Cat0 => Ok(None),
        ModulusOfConvexity::Lp { p } if p > 1.0 && p.is_finite() => Ok(Some(rational(p)?)),
        ModulusOfConvexity::Lp { p } => Err(unsupported(format!("l_{p} has no modulus of uniform convexity"))),
    }
}

fn parallel_common(
    eps: f64,
    b: f64,
    modulus: &ModulusOfConvexity,
    lambdas: &[f64],
    alphas: &[f64],
    refined: bool,
) -> Result<ExtendedCount> {
    check_eps_b(eps, b)?;
    let k = parallel_k(lambdas, alphas)?;
    let p = lp_exponent(modulus)?;
    let (e, br) = (rational(eps)?, rational(b)?);
    if e >= int(2) * &br {
        return Ok(ExtendedCount::exact(0));
    }
    // float magnitude first so absurd inputs never reach big powers
    let kf = k.to_f64().unwrap();
    let est = if refined {
        (b / (2.0 * eps * kf * modulus.tilde_eval(eps / b))).log10()
    } else {
        (b / (eps * kf * modulus.eval_unchecked(eps / b))).log10()
    };
    if let Some(s) = saturated_if(est) {
        return Ok(s);
    }
    let two = int(2);
    let ratio = &e / &br;
    let value = match p {
        // delta = ratio^2 / 8, delta~ = ratio / 8
        None if refined => floor_u(&(int(4) * &br * &br / (&e * &e * &k))),
        None => floor_u(&(int(8) * &br / (&e * &k * &ratio * &ratio))),
        Some(p) if p <= two => {
            let pm1 = &p - int(1);
            if refined {
                floor_u(&(int(4) * &br * &br / (&e * &e * &k * pm1)))
            } else {
                floor_u(&(int(8) * &br / (&e * &k * pm1 * &ratio * &ratio)))
            }
        }
        // delta = (ratio/2)^p / p, delta~ = delta / ratio
        Some(p) => {
            let half = &ratio / &two;
            if refined {
                floor_div_pow(&(&p / (&two * &k)), &half, &p)?
            } else {
                floor_div_pow(&(&br * &p / (&e * &k)), &half, &p)?
            }
        }
    };
    Ok(ExtendedCount::from_big(value))
}

/// Rate for the parallel scheme: `floor(b / (eps K delta(b, eps/b)))` for
/// `eps < 2b`, otherwise 0.
pub fn parallel_rate(
    eps: f64,
    b: f64,
    modulus: &ModulusOfConvexity,
    lambdas: &[f64],
    alphas: &[f64],
) -> Result<ExtendedCount> {
    parallel_common(eps, b, modulus, lambdas, alphas, false)
}

/// Refined rate `floor(b / (2 eps K delta~(b, eps/b)))` with
/// `delta = eps * delta~`; quadratic in `1/eps` for CAT(0) spaces.
pub fn parallel_rate_refined(
    eps: f64,
    b: f64,
    modulus: &ModulusOfConvexity,
    lambdas: &[f64],
    alphas: &[f64],
) -> Result<ExtendedCount> {
    parallel_common(eps, b, modulus, lambdas, alphas, true)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateFormula {
    Averaged,
    Firmly,
    Ap,
    Parallel,
    ParallelRefined,
}

impl RateFormula {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "averaged" => RateFormula::Averaged,
            "firmly" => RateFormula::Firmly,
            "ap" => RateFormula::Ap,
            "parallel" => RateFormula::Parallel,
            "parallel_refined" | "parallel-refined" | "refined" => RateFormula::ParallelRefined,
            _ => return Err(domain(format!("unknown rate formula `{s}`"))),
        })
    }

    pub fn fits(self, scheme: Scheme) -> bool {
        matches!(
            (self, scheme),
            (RateFormula::Averaged | RateFormula::Firmly, Scheme::Picard)
                | (RateFormula::Ap, Scheme::AlternatingProjection)
                | (RateFormula::Parallel | RateFormula::ParallelRefined, Scheme::Parallel)
        )
    }
}

/// Everything a rate formula may need.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateInputs {
    pub eps: f64,
    pub b: f64,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub lambdas: Vec<f64>,
    #[serde(default)]
    pub alphas: Vec<f64>,
    #[serde(default)]
    pub modulus: Option<ModulusOfConvexity>,
    /// `d(y, Ty)` for the auxiliary point of the firmly-nonexpansive rate;
    /// the certified gap level is `eps + offset`.
    #[serde(default)]
    pub offset: f64,
}

impl RateInputs {
    pub fn new(eps: f64, b: f64) -> Self {
        RateInputs {
            eps,
            b,
            lambda: None,
            lambdas: Vec::new(),
            alphas: Vec::new(),
            modulus: None,
            offset: 0.0,
        }
    }

    pub fn bound(&self, formula: RateFormula) -> Result<ExtendedCount> {
        let lambda = || self.lambda.ok_or_else(|| domain("formula needs lambda"));
        let modulus = || self.modulus.ok_or_else(|| domain("formula needs a modulus"));
        match formula {
            RateFormula::Averaged => averaged_rate(self.eps, self.b, lambda()?),
            RateFormula::Firmly => firmly_rate(self.eps, self.b, lambda()?),
            RateFormula::Ap => ap_rate(self.eps, self.b),
            RateFormula::Parallel => parallel_rate(self.eps, self.b, &modulus()?, &self.lambdas, &self.alphas),
            RateFormula::ParallelRefined => {
                parallel_rate_refined(self.eps, self.b, &modulus()?, &self.lambdas, &self.alphas)
            }
        }
    }
}

/// An observed regularity index paired with a theoretical bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegularityCertificate {
    pub epsilon: f64,
    pub offset: f64,
    pub b: f64,
    /// `None` when the trace never settled below `epsilon + offset`.
    pub observed_index: Option<usize>,
    pub bound: ExtendedCount,
    pub bound_log10: f64,
    pub bound_formula: RateFormula,
    pub passes: bool,
}

/// Certifies `regularity_index(trace, eps + offset) <= bound`. A trace that
/// never reaches the level passes only against a saturated bound.
pub fn certify(trace: &OrbitTrace, inputs: &RateInputs, formula: RateFormula) -> Result<RegularityCertificate> {
    if !formula.fits(trace.scheme) {
        return Err(domain(format!(
            "formula {formula:?} does not apply to a {:?} trace",
            trace.scheme
        )));
    }
    if !(inputs.offset >= 0.0) {
        return Err(domain("offset must be >= 0"));
    }
    let bound = inputs.bound(formula)?;
    let observed_index = regularity_index(trace, inputs.eps + inputs.offset)?;
    let passes = match observed_index {
        Some(n) => bound.admits(n as u64),
        None => bound.is_saturated(),
    };
    Ok(RegularityCertificate {
        epsilon: inputs.eps,
        offset: inputs.offset,
        b: inputs.b,
        observed_index,
        bound_log10: bound.log10(),
        bound,
        bound_formula: formula,
        passes,
    })
}
