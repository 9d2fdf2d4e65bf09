//! Run configurations: resolve a JSON description into a space, sets and a
//! mapping, run the scheme, certify it and collect the orbit diagnostics.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::canonical;
use crate::error::{GeoError, Result};
use crate::geometry::{MetricTree, ModulusOfConvexity, Point, Space, TreeSpec};
use crate::iteration::inequalities::{fejer_descent, gap_monotonicity, lemma_fn, projection_descent};
use crate::iteration::{
    alternating_projections_capped, asymptotic_center, minimal_displacement_estimate, periodic_point_probe,
    picard_orbit_capped, CenterSearch, OrbitTrace, PeriodicReport, DEFAULT_POINT_CAP,
};
use crate::mappings::{check_averaged_inequality, check_descent, check_nonexpansive, FirmnessReport, Mapping};
use crate::rates::{certify, RateFormula, RateInputs, RegularityCertificate};
use crate::report::InequalityReport;
use crate::sampling::PairSampler;
use crate::sets::ConvexSet;

/// Samples used by the mapping-level checks of a run.
pub const RUN_CHECK_SAMPLES: usize = 256;

fn config_err(msg: impl Into<String>) -> GeoError {
    GeoError::Config(msg.into())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    Picard,
    #[serde(alias = "ap", alias = "alternating_projection")]
    AlternatingProjections,
    Parallel,
}

/// A point given as a tree vertex name, bare coordinates, or a tagged point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointSpec {
    Vertex { vertex: String },
    Coords(Vec<f64>),
    Point(Point),
}

impl PointSpec {
    pub fn resolve(&self, space: &Space) -> Result<Point> {
        let p = match self {
            PointSpec::Vertex { vertex } => space.vertex_point(vertex)?,
            PointSpec::Coords(c) => match space {
                Space::PoincareDisk if c.len() == 2 => Point::disk(c[0], c[1]),
                _ => Point::vector(c.clone()),
            },
            PointSpec::Point(p) => p.clone(),
        };
        space.check_point(&p)?;
        Ok(p)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSpec {
    #[serde(default)]
    pub formula: Option<RateFormula>,
    /// Upper bound `b`; derived from `common_point` when absent.
    #[serde(default)]
    pub b: Option<f64>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub modulus: Option<ModulusOfConvexity>,
    /// Auxiliary points `y` for the firmly-nonexpansive rate.
    #[serde(default)]
    pub candidates: Vec<PointSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// `euclidean:d`, `disk`, `lp:p:d`, `tree:tripod` or `tree:<file.json>`.
    pub space: String,
    pub scheme: SchemeName,
    #[serde(default)]
    pub sets: Vec<ConvexSet>,
    #[serde(default)]
    pub mapping: Option<Mapping>,
    #[serde(default)]
    pub lambdas: Vec<f64>,
    #[serde(default)]
    pub weights: Vec<f64>,
    pub x0: PointSpec,
    #[serde(default)]
    pub eps: Vec<f64>,
    pub n_max: usize,
    #[serde(default)]
    pub eps_stop: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub rate: Option<RateSpec>,
    /// A known point of every set (or a fixed point of the mapping).
    #[serde(default)]
    pub common_point: Option<PointSpec>,
    #[serde(default)]
    pub center: Option<CenterSearch>,
    #[serde(default)]
    pub point_cap: Option<usize>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| config_err(format!("cannot parse config: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

/// Resolves a space spec; `tree:<file>` is read relative to `base_dir`.
pub fn resolve_space(spec: &str, base_dir: &Path) -> Result<(Space, Option<TreeSpec>)> {
    if let Some(rest) = spec.strip_prefix("tree:") {
        if rest == "tripod" {
            let t = MetricTree::tripod();
            let s = t.to_spec();
            return Ok((Space::tree(t), Some(s)));
        }
        let path = base_dir.join(rest);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| config_err(format!("cannot read tree file {}: {e}", path.display())))?;
        let ts: TreeSpec =
            serde_json::from_str(&text).map_err(|e| config_err(format!("bad tree file {}: {e}", path.display())))?;
        return Ok((Space::tree(MetricTree::from_spec(&ts)?), Some(ts)));
    }
    Ok((Space::parse(spec)?, None))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CenterReport {
    pub center: Point,
    pub radius: f64,
    /// Distance from the center to the last iterate.
    pub distance_to_last: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunOutput {
    pub config_digest: String,
    pub trace: OrbitTrace,
    pub certificates: Vec<RegularityCertificate>,
    pub reports: Vec<InequalityReport>,
    pub firmness: Option<FirmnessReport>,
    pub periodic: PeriodicReport,
    pub minimal_displacement: f64,
    pub center: Option<CenterReport>,
    pub passed: bool,
}

#[derive(Serialize)]
struct DigestPayload<'a> {
    config: &'a RunConfig,
    tree: Option<&'a TreeSpec>,
}

/// Resolved pieces of a config, before running.
struct Plan {
    space: Space,
    tree: Option<TreeSpec>,
    mapping: Option<Mapping>,
    x0: Point,
    common: Option<Point>,
}

fn plan(cfg: &RunConfig, base_dir: &Path) -> Result<Plan> {
    let (space, tree) = resolve_space(&cfg.space, base_dir)?;
    for s in &cfg.sets {
        s.validate(&space)?;
    }
    let x0 = cfg.x0.resolve(&space)?;
    let common = cfg.common_point.as_ref().map(|p| p.resolve(&space)).transpose()?;
    if cfg.n_max == 0 {
        return Err(config_err("n_max must be at least 1"));
    }
    if let Some(e) = cfg.eps.iter().find(|e| !(**e > 0.0)) {
        return Err(config_err(format!("eps values must be positive, got {e}")));
    }
    let mapping = match cfg.scheme {
        SchemeName::AlternatingProjections => {
            if cfg.sets.len() != 2 {
                return Err(config_err("alternating projections need exactly two sets"));
            }
            None
        }
        SchemeName::Picard => {
            let m = cfg.mapping.clone().ok_or_else(|| config_err("picard runs need a mapping"))?;
            m.validate(&space)?;
            Some(m)
        }
        SchemeName::Parallel => {
            let m = match &cfg.mapping {
                Some(m @ Mapping::Composite { .. }) => m.clone(),
                Some(_) => return Err(config_err("parallel runs need a composite mapping")),
                None => Mapping::composite(
                    cfg.sets.iter().cloned().map(Mapping::projection).collect(),
                    cfg.lambdas.clone(),
                    cfg.weights.clone(),
                )?,
            };
            m.validate(&space)?;
            Some(m)
        }
    };
    if let Some(p) = &common {
        let sets: Vec<&ConvexSet> = match (&cfg.scheme, &mapping) {
            (SchemeName::Parallel, Some(m)) => m.composite_sets(),
            _ => cfg.sets.iter().collect(),
        };
        for s in sets {
            if !s.membership(&space, p, 10.0 * space.tol())? {
                return Err(config_err("common_point is not in every set"));
            }
        }
    }
    Ok(Plan {
        space,
        tree,
        mapping,
        x0,
        common,
    })
}

/// Validates the config without running it; returns the digest.
pub fn validate_config(cfg: &RunConfig, base_dir: &Path) -> Result<String> {
    let p = plan(cfg, base_dir)?;
    canonical::digest(&DigestPayload {
        config: cfg,
        tree: p.tree.as_ref(),
    })
}

fn b_from(spec: Option<&RateSpec>, space: &Space, x0: &Point, common: Option<&Point>) -> Result<Option<f64>> {
    if let Some(b) = spec.and_then(|r| r.b) {
        if !(b > 0.0) {
            return Err(config_err(format!("b must be positive, got {b}")));
        }
        return Ok(Some(b));
    }
    match common {
        Some(p) => Ok(Some(space.distance(x0, p)?.max(f64::MIN_POSITIVE))),
        None => Ok(None),
    }
}

/// Runs a configuration. `seed_override` replaces the config's seed before
/// the digest is taken.
pub fn run_config(cfg: &RunConfig, base_dir: &Path, seed_override: Option<u64>) -> Result<RunOutput> {
    let mut cfg = cfg.clone();
    if let Some(s) = seed_override {
        cfg.seed = s;
    }
    let Plan {
        space,
        tree,
        mapping,
        x0,
        common,
    } = plan(&cfg, base_dir)?;
    let digest = canonical::digest(&DigestPayload {
        config: &cfg,
        tree: tree.as_ref(),
    })?;
    let cap = cfg.point_cap.unwrap_or(DEFAULT_POINT_CAP);
    let trace = match (&cfg.scheme, &mapping) {
        (SchemeName::AlternatingProjections, _) => {
            alternating_projections_capped(&space, &cfg.sets[0], &cfg.sets[1], &x0, cfg.n_max, cfg.eps_stop, cap)?
        }
        (_, Some(m)) => picard_orbit_capped(&space, m, &x0, cfg.n_max, cfg.eps_stop, cap)?,
        (_, None) => unreachable!("picard and parallel plans carry a mapping"),
    }
    .with_digest(digest.clone());

    let tol = space.tol();
    let rate = cfg.rate.as_ref();
    let mut certificates = Vec::new();
    let mut reports = vec![gap_monotonicity(&trace, tol * trace.gaps.first().copied().unwrap_or(1.0).max(1.0))];

    if let Some(p) = &common {
        reports.push(fejer_descent(&space, &trace, p, tol)?);
        if cfg.scheme == SchemeName::AlternatingProjections {
            reports.push(projection_descent(&space, &trace, p, tol)?);
        }
    }

    // formula, inputs and certified level per eps
    let formula = match (cfg.scheme, rate.and_then(|r| r.formula)) {
        (_, Some(f)) => Some(f),
        (SchemeName::AlternatingProjections, None) => Some(RateFormula::Ap),
        (SchemeName::Parallel, None) if space.is_normed() => Some(RateFormula::ParallelRefined),
        (SchemeName::Parallel, None) => Some(RateFormula::Parallel),
        (SchemeName::Picard, None) => match &mapping {
            Some(Mapping::Averaged { .. }) if rate.is_some() => Some(RateFormula::Averaged),
            _ => None,
        },
    };
    if let Some(formula) = formula.filter(|_| !cfg.eps.is_empty()) {
        let mut inputs = RateInputs::new(0.0, 0.0);
        inputs.modulus = rate.and_then(|r| r.modulus).or_else(|| space.modulus());
        inputs.lambda = rate.and_then(|r| r.lambda).or(match &mapping {
            Some(Mapping::Averaged { lambda, .. }) => Some(*lambda),
            _ => None,
        });
        if let Some(Mapping::Composite { lambdas, weights, .. }) = &mapping {
            inputs.lambdas = lambdas.clone();
            inputs.alphas = weights.clone();
        }
        let mut b = b_from(rate, &space, &x0, common.as_ref())?;
        if formula == RateFormula::Firmly {
            let m = mapping.as_ref().expect("picard mapping");
            let tx0 = m.apply(&space, &x0)?;
            let mut ys = vec![x0.clone()];
            for c in rate.map(|r| r.candidates.as_slice()).unwrap_or(&[]) {
                ys.push(c.resolve(&space)?);
            }
            // auxiliary point with the smallest displacement
            let mut best: Option<(f64, f64)> = None;
            for y in &ys {
                let off = space.distance(y, &m.apply(&space, y)?)?;
                let by = space.distance(&x0, y)?.max(space.distance(&x0, &tx0)?);
                if best.is_none_or(|(o, _)| off < o) {
                    best = Some((off, by));
                }
            }
            let (off, by) = best.expect("x0 is a candidate");
            inputs.offset = off;
            if b.is_none() {
                b = Some(by.max(f64::MIN_POSITIVE));
            }
            if let Some(l) = inputs.lambda {
                if !trace.is_thinned() {
                    reports.push(lemma_fn(&space, &trace, l, tol)?);
                }
            }
        }
        let b = b.ok_or_else(|| config_err("certificates need rate.b or a common_point"))?;
        inputs.b = b;
        for &eps in &cfg.eps {
            inputs.eps = eps;
            certificates.push(certify(&trace, &inputs, formula)?);
        }
    }

    let mut firmness = None;
    if let Some(m) = &mapping {
        let pairs = PairSampler::seeded(cfg.seed);
        firmness = Some(check_nonexpansive(&space, m, &pairs, RUN_CHECK_SAMPLES)?);
        let pts = pairs.draw_points(&space, RUN_CHECK_SAMPLES);
        let mut d = check_descent(&space, m, &pts)?;
        if !m.is_library() {
            // helper mappings may expand; keep the numbers, not the verdict
            d.violations = 0;
        }
        reports.push(d);
        if let Mapping::Averaged { .. } = m {
            reports.push(check_averaged_inequality(&space, m, &pairs, RUN_CHECK_SAMPLES)?);
        }
    }

    let periodic = periodic_point_probe(&space, &trace, tol)?;
    let center = match &cfg.center {
        Some(search) => {
            let (c, r) = asymptotic_center(&space, trace.tail(), search)?;
            let d = space.distance(&c, trace.last_point())?;
            Some(CenterReport {
                center: c,
                radius: r,
                distance_to_last: d,
            })
        }
        None => None,
    };
    let passed = certificates.iter().all(|c| c.passes) && reports.iter().all(|r| r.holds()) && periodic.passed();
    Ok(RunOutput {
        config_digest: digest,
        minimal_displacement: minimal_displacement_estimate(&trace),
        trace,
        certificates,
        reports,
        firmness,
        periodic,
        center,
        passed,
    })
}

impl RunOutput {
    /// `(file name, contents)` for trace.csv, trace.json, certificates.json
    /// and reports.json. JSON files are canonical.
    pub fn files(&self) -> Result<Vec<(&'static str, String)>> {
        #[derive(Serialize)]
        struct TraceFile<'a> {
            config_digest: &'a str,
            trace: &'a OrbitTrace,
            certificates: &'a [RegularityCertificate],
        }
        #[derive(Serialize)]
        struct ReportsFile<'a> {
            config_digest: &'a str,
            reports: &'a [InequalityReport],
            firmness: &'a Option<FirmnessReport>,
            periodic: &'a PeriodicReport,
            minimal_displacement: f64,
            center: &'a Option<CenterReport>,
            passed: bool,
        }
        let trace_json = canonical::to_canonical(&TraceFile {
            config_digest: &self.config_digest,
            trace: &self.trace,
            certificates: &self.certificates,
        })?;
        let certs = canonical::to_canonical(&self.certificates)?;
        let reports = canonical::to_canonical(&ReportsFile {
            config_digest: &self.config_digest,
            reports: &self.reports,
            firmness: &self.firmness,
            periodic: &self.periodic,
            minimal_displacement: self.minimal_displacement,
            center: &self.center,
            passed: self.passed,
        })?;
        Ok(vec![
            ("trace.csv", trace_csv(&self.trace)),
            ("trace.json", trace_json),
            ("certificates.json", certs),
            ("reports.json", reports),
        ])
    }
}

/// Columns `n, gap, c0, c1, ...`; coordinates only for stored iterates.
pub fn trace_csv(trace: &OrbitTrace) -> String {
    let width = trace.first_point().components().len();
    let mut out = String::from("n,gap");
    for k in 0..width {
        out.push_str(&format!(",c{k}"));
    }
    out.push('\n');
    let mut stored = trace.point_indices.iter().zip(&trace.points).peekable();
    for n in 0..=trace.steps() {
        out.push_str(&n.to_string());
        out.push(',');
        if let Some(g) = trace.gaps.get(n) {
            out.push_str(&format!("{g:.16e}"));
        }
        match stored.peek() {
            Some((i, p)) if **i == n => {
                for c in p.components() {
                    out.push_str(&format!(",{c:.16e}"));
                }
                stored.next();
            }
            _ => out.push_str(&",".repeat(width)),
        }
        out.push('\n');
    }
    out
}
