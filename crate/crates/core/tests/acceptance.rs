//! End-to-end acceptance run. Prints one line per criterion and exits
//! nonzero if any criterion fails.

use std::path::Path;
use std::time::Instant;

use geofix::checks::{check_property, cn_violation, Property};
use geofix::config::{run_config, PointSpec, RateSpec, RunConfig, RunOutput, SchemeName};
use geofix::iteration::{alternating_projections, asymptotic_center, minimal_displacement_estimate, CenterSearch};
use geofix::mappings::{check_descent, fixed_point_set_probe, Mapping};
use geofix::rates::{
    ap_rate, averaged_rate, firmly_rate, parallel_rate, parallel_rate_refined, ExtendedCount, RateFormula,
};
use geofix::sampling::random_point;
use geofix::sets::ConvexSet;
use geofix::{MetricTree, ModulusOfConvexity, Point, Space};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn here() -> &'static Path {
    Path::new(".")
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- run generators

const TRIPOD: &str = "tree:tripod";

fn space_of(spec: &str) -> Space {
    if spec == TRIPOD {
        Space::tree(MetricTree::tripod())
    } else {
        Space::parse(spec).unwrap()
    }
}

fn base_config(space: &str, scheme: SchemeName, x0: Point, seed: u64) -> RunConfig {
    RunConfig {
        space: space.to_string(),
        scheme,
        sets: Vec::new(),
        mapping: None,
        lambdas: Vec::new(),
        weights: Vec::new(),
        x0: PointSpec::Point(x0),
        eps: vec![0.1, 0.01],
        n_max: 20_000,
        eps_stop: 1e-12,
        seed,
        rate: None,
        common_point: None,
        center: None,
        point_cap: None,
    }
}

/// A closed convex set containing `p` with some slack around it.
fn set_through(space: &Space, p: &Point, rng: &mut ChaCha8Rng) -> ConvexSet {
    let slack = rng.gen_range(0.05..0.4);
    match space {
        Space::Euclidean { dim } if rng.gen_bool(0.5) => {
            let n: Vec<f64> = ball_dir(*dim, rng);
            let off: f64 = n.iter().zip(p.coords().unwrap()).map(|(a, b)| a * b).sum();
            ConvexSet::half_space(n, off + slack)
        }
        Space::MetricTree(t) if rng.gen_bool(0.3) => {
            let (e, _) = match p {
                Point::Tree { edge, offset } => (*edge, *offset),
                _ => unreachable!(),
            };
            let edge = &t.edges()[e];
            ConvexSet::subtree([t.vertex_name(edge.u), t.vertex_name(edge.v)])
        }
        _ => {
            let c = random_point(space, 0.6, rng);
            let r = space.distance(&c, p).unwrap() + slack;
            ConvexSet::ball(c, r)
        }
    }
}

fn ball_dir(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.1 && n <= 1.0 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

fn start_point(space: &Space, rng: &mut ChaCha8Rng) -> Point {
    match space {
        Space::PoincareDisk => random_point(space, 0.8, rng),
        _ => random_point(space, 3.0, rng),
    }
}

struct Generated {
    label: String,
    cfg: RunConfig,
    common: Point,
    out: RunOutput,
}

fn run(label: String, cfg: RunConfig, common: Point) -> Result<Generated, String> {
    let out = run_config(&cfg, here(), None).map_err(|e| format!("{label}: {e}"))?;
    Ok(Generated {
        label,
        cfg,
        common,
        out,
    })
}

fn ap_runs() -> Result<Vec<Generated>, String> {
    let mut out = Vec::new();
    for i in 0..20u64 {
        let spec = if i < 10 { "euclidean:2" } else { "disk" };
        let space = space_of(spec);
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + i);
        let p = random_point(&space, 0.5, &mut rng);
        let mut cfg = base_config(spec, SchemeName::AlternatingProjections, start_point(&space, &mut rng), i);
        cfg.sets = vec![set_through(&space, &p, &mut rng), set_through(&space, &p, &mut rng)];
        for s in &cfg.sets {
            ensure(s.membership(&space, &p, 0.0).unwrap(), || format!("ap {i}: common point outside"))?;
        }
        cfg.common_point = Some(PointSpec::Point(p.clone()));
        out.push(run(format!("ap-{spec}-{i}"), cfg, p)?);
    }
    Ok(out)
}

fn parallel_runs(eps_stop: f64, n_max: usize, seed0: u64, count: u64) -> Result<Vec<Generated>, String> {
    let mut out = Vec::new();
    for i in 0..count {
        let spec = ["euclidean:2", "disk", TRIPOD][(i % 3) as usize];
        let space = space_of(spec);
        let mut rng = ChaCha8Rng::seed_from_u64(seed0 + i);
        let r = rng.gen_range(2..=4usize);
        let p = random_point(&space, 0.5, &mut rng);
        let mut cfg = base_config(spec, SchemeName::Parallel, start_point(&space, &mut rng), i);
        cfg.sets = (0..r).map(|_| set_through(&space, &p, &mut rng)).collect();
        cfg.lambdas = (0..r).map(|_| rng.gen_range(0.2..0.8)).collect();
        let raw: Vec<f64> = (0..r).map(|_| rng.gen_range(0.5..1.5)).collect();
        let total: f64 = raw.iter().sum();
        cfg.weights = raw.iter().map(|w| w / total).collect();
        cfg.eps_stop = eps_stop;
        cfg.n_max = n_max;
        cfg.common_point = Some(PointSpec::Point(p.clone()));
        out.push(run(format!("parallel-{spec}-{i}"), cfg, p)?);
    }
    Ok(out)
}

/// Picard runs of projections (firmly nonexpansive) and averaged maps.
fn picard_runs() -> Result<Vec<Generated>, String> {
    let mut out = Vec::new();
    for i in 0..12u64 {
        let spec = ["euclidean:2", "disk", TRIPOD][(i % 3) as usize];
        let space = space_of(spec);
        let mut rng = ChaCha8Rng::seed_from_u64(3000 + i);
        let p = random_point(&space, 0.5, &mut rng);
        let set = set_through(&space, &p, &mut rng);
        let x0 = start_point(&space, &mut rng);
        let mut cfg = base_config(spec, SchemeName::Picard, x0.clone(), i);
        let lambda = rng.gen_range(0.3..0.7);
        if i < 6 {
            // in the plane an averaged projection is still firmly nonexpansive
            cfg.mapping = Some(match spec {
                "euclidean:2" => Mapping::averaged(Mapping::projection(set.clone()), lambda).unwrap(),
                _ => Mapping::projection(set.clone()),
            });
            cfg.rate = Some(RateSpec {
                formula: Some(RateFormula::Firmly),
                lambda: Some(0.5),
                ..Default::default()
            });
        } else {
            let base = if spec == "euclidean:2" && i % 2 == 0 {
                Mapping::Rotation {
                    angle: rng.gen_range(0.5..2.5),
                }
            } else {
                Mapping::projection(set.clone())
            };
            let fixed = match base {
                Mapping::Rotation { .. } => Point::vector([0.0, 0.0]),
                _ => p.clone(),
            };
            cfg.mapping = Some(Mapping::averaged(base, lambda).unwrap());
            // the orbit stays in the ball about a fixed point through x0
            let b = 2.0 * space.distance(&x0, &fixed).unwrap();
            cfg.rate = Some(RateSpec {
                formula: Some(RateFormula::Averaged),
                b: Some(b.max(1e-3)),
                ..Default::default()
            });
            cfg.eps = vec![0.5, 0.1];
            out.push(run(format!("averaged-{spec}-{i}"), cfg, fixed)?);
            continue;
        }
        cfg.sets = vec![set];
        cfg.common_point = Some(PointSpec::Point(p.clone()));
        out.push(run(format!("firmly-{spec}-{i}"), cfg, p)?);
    }
    Ok(out)
}

// ---------------------------------------------------------------- criteria

fn criterion_1() -> Outcome {
    use Property::*;
    let n = 10_000;
    let spaces = [
        Space::euclidean(2).unwrap(),
        Space::disk(),
        Space::tree(MetricTree::tripod()),
        Space::lp(3, 4.0).unwrap(),
        Space::lp(3, 1.5).unwrap(),
    ];
    let mut count = 0;
    for (k, space) in spaces.iter().enumerate() {
        let cat0 = space.is_cat0();
        for prop in [W1, W2, W3, W4, ConvexMetric, Busemann, WeakBetweenness, Betweenness, UniformConvexity] {
            let r = check_property(space, prop, n, 40 + k as u64).map_err(|e| format!("{space}: {e}"))?;
            ensure(r.passed, || format!("{space}: {}", r.verdict()))?;
            count += 1;
        }
        if cat0 {
            for prop in [Cn, Ptolemy] {
                let r = check_property(space, prop, n, 40 + k as u64).map_err(|e| e.to_string())?;
                ensure(r.passed, || format!("{space}: {}", r.verdict()))?;
                count += 1;
            }
        }
    }
    let l4 = Space::lp(3, 4.0).unwrap();
    let r = check_property(&l4, Cn, n, 41).map_err(|e| e.to_string())?;
    ensure(!r.passed && r.witness.is_some(), || "cn passed on l4".into())?;
    let v = cn_violation(
        &l4,
        &Point::vector([0.0, 0.0, 0.0]),
        &Point::vector([1.0, 1.0, 0.0]),
        &Point::vector([1.0, -1.0, 0.0]),
        0.5,
    )
    .map_err(|e| e.to_string())?;
    ensure((v - (2.0 - 2f64.sqrt())).abs() < 1e-12, || format!("pinned cn witness gives {v}"))?;
    Ok(format!(
        "{count} property checks at n={n} pass; cn fails on l4 (sampled {:.3e}, pinned {v:.6})",
        r.max_violation
    ))
}

/// Exact rational `num / den` with a floor, for the polynomial rates.
fn floor_frac(num: u128, den: u128) -> u64 {
    (num / den) as u64
}

/// `ceil(x)` for an `x` that must not sit within `1e-9` of an integer.
fn safe_ceil(x: f64) -> Result<u64, String> {
    ensure((x - x.round()).abs() > 1e-9 * x.max(1.0), || format!("{x} too close to an integer"))?;
    Ok(x.ceil() as u64)
}

fn criterion_2() -> Outcome {
    let e = std::f64::consts::E;
    let cat0 = ModulusOfConvexity::Cat0;
    let half = [0.5, 0.5];

    // averaged: K = 2, M = ceil(0.5 * 3 / 1) = 2, K M ceil(2 e^{K(M+1)})
    let averaged_oracle = 2 * 2 * safe_ceil(2.0 * e.powi(6))?;
    // firmly: K = 2, M = 4b/eps
    let firmly_oracle = |m: u64, eps: f64| -> Result<u64, String> {
        Ok(m * safe_ceil(2.0 * (1.0 + e.powi(2 * m as i32)) / eps)?)
    };
    // parallel, eps = 1/2, b = 1, K = 1/8: b / (eps K delta(eps/b)) with delta = r^2/8
    let parallel_oracle = floor_frac(8 * 8 * 2 * 4, 1);
    // refined: b / (2 eps K delta~), delta~ = r/8  ->  4 b^2 / (eps^2 K)
    let refined_oracle = floor_frac(4 * 4 * 8, 1);
    // l_4 refined: p / (2 K (r/2)^p) = 4 / (1/4 * 1/256)
    let lp_oracle = floor_frac(4 * 4 * 256, 1);

    let cases: Vec<(&str, ExtendedCount, u64)> = vec![
        ("ap(0.1, 1)", ap_rate(0.1, 1.0).unwrap(), floor_frac(100, 1)),
        ("ap(3, 1)", ap_rate(3.0, 1.0).unwrap(), 0),
        ("firmly(1, 1, 0.5)", firmly_rate(1.0, 1.0, 0.5).unwrap(), firmly_oracle(4, 1.0)?),
        ("firmly(2, 1, 0.5)", firmly_rate(2.0, 1.0, 0.5).unwrap(), firmly_oracle(2, 2.0)?),
        ("averaged(1, 1, 0.5)", averaged_rate(1.0, 1.0, 0.5).unwrap(), averaged_oracle),
        ("parallel(0.5, 1)", parallel_rate(0.5, 1.0, &cat0, &half, &half).unwrap(), parallel_oracle),
        (
            "parallel_refined(0.5, 1)",
            parallel_rate_refined(0.5, 1.0, &cat0, &half, &half).unwrap(),
            refined_oracle,
        ),
        (
            "lp4 refined(0.5, 1)",
            parallel_rate_refined(0.5, 1.0, &ModulusOfConvexity::Lp { p: 4.0 }, &half, &half).unwrap(),
            lp_oracle,
        ),
    ];
    let published = [100, 0, 23856, 112, 3228, 512, 128, 4096];
    let mut shown = Vec::new();
    for ((name, got, oracle), want) in cases.into_iter().zip(published) {
        ensure(got.as_u64() == Some(oracle) && oracle == want, || {
            format!("{name}: library {got}, oracle {oracle}, expected {want}")
        })?;
        shown.push(format!("{want}"));
    }
    Ok(format!("8/8 exact: {}", shown.join(" ")))
}

fn certificate_failures(runs: &[Generated]) -> Vec<String> {
    let mut bad = Vec::new();
    for g in runs {
        for c in &g.out.certificates {
            if !c.passes {
                bad.push(format!(
                    "{} eps={} observed={:?} bound={}",
                    g.label, c.epsilon, c.observed_index, c.bound
                ));
            }
        }
    }
    bad
}

fn criterion_3(ap: &[Generated], par: &[Generated]) -> Outcome {
    let mut n_certs = 0;
    for g in ap.iter().chain(par) {
        ensure(g.out.certificates.len() == 2, || format!("{}: missing certificates", g.label))?;
        n_certs += g.out.certificates.len();
        let want = match (g.cfg.scheme, g.cfg.space.as_str()) {
            (SchemeName::AlternatingProjections, _) => RateFormula::Ap,
            (_, "euclidean:2") => RateFormula::ParallelRefined,
            _ => RateFormula::Parallel,
        };
        for c in &g.out.certificates {
            ensure(c.bound_formula == want, || format!("{}: formula {:?}", g.label, c.bound_formula))?;
        }
    }
    let bad = certificate_failures(ap)
        .into_iter()
        .chain(certificate_failures(par))
        .collect::<Vec<_>>();
    ensure(bad.is_empty(), || bad.join("; "))?;
    let worst = ap
        .iter()
        .chain(par)
        .flat_map(|g| &g.out.certificates)
        .filter_map(|c| c.observed_index.map(|n| n as f64 / c.bound.as_u64().unwrap_or(u64::MAX).max(1) as f64))
        .fold(0.0f64, f64::max);
    Ok(format!(
        "{} ap + {} parallel runs, {n_certs} certificates, 0 failures (max observed/bound {worst:.3})",
        ap.len(),
        par.len()
    ))
}

fn criterion_4(all: &[&Generated]) -> Outcome {
    let mut names = std::collections::BTreeMap::<String, usize>::new();
    for g in all {
        for r in &g.out.reports {
            ensure(r.holds(), || {
                format!("{}: {} violations={} max={:.3e}", g.label, r.name, r.violations, r.max_violation)
            })?;
            *names.entry(r.name.clone()).or_default() += r.samples;
        }
        ensure(g.out.periodic.passed(), || format!("{}: periodic point {:?}", g.label, g.out.periodic.first()))?;
        // descent along the orbit itself, for every scheme
        let space = space_of(&g.cfg.space);
        let map = match (&g.cfg.scheme, &g.cfg.mapping) {
            (SchemeName::AlternatingProjections, _) => None,
            (SchemeName::Parallel, None) => Some(
                Mapping::composite(
                    g.cfg.sets.iter().cloned().map(Mapping::projection).collect(),
                    g.cfg.lambdas.clone(),
                    g.cfg.weights.clone(),
                )
                .unwrap(),
            ),
            (_, m) => m.clone(),
        };
        if let Some(m) = map {
            let pts: Vec<Point> = g.out.trace.points.iter().take(200).cloned().collect();
            let r = check_descent(&space, &m, &pts).map_err(|e| e.to_string())?;
            ensure(r.holds(), || format!("{}: orbit descent {:.3e}", g.label, r.max_violation))?;
            *names.entry("orbit-descent".into()).or_default() += r.samples;
        }
    }
    for required in [
        "gap-monotonicity",
        "fejer-descent",
        "projection-descent",
        "lemma-fn",
        "averaged-lemma",
        "descent",
        "orbit-descent",
    ] {
        ensure(names.get(required).is_some_and(|n| *n > 0), || format!("no samples for {required}"))?;
    }
    let total: usize = names.values().sum();
    Ok(format!("{} traces, {} suites, {total} samples, 0 violations", all.len(), names.len()))
}

fn criterion_5() -> Outcome {
    let runs = parallel_runs(1e-11, 200_000, 5000, 10)?;
    let mut members = 0;
    for g in &runs {
        let space = space_of(&g.cfg.space);
        let last_gap = minimal_displacement_estimate(&g.out.trace);
        ensure(last_gap <= 1e-10, || format!("{}: stalled at gap {last_gap:.3e}", g.label))?;
        let limit = g.out.trace.last_point().clone();
        for s in &g.cfg.sets {
            let d = s.distance_to(&space, &limit).unwrap();
            ensure(d <= 1e-8, || format!("{}: limit {d:.3e} from a set", g.label))?;
        }
        // points of the intersection: perturbations of the common point kept if inside every set
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut cands = Vec::new();
        while cands.len() < 20 {
            let q = match &space {
                Space::MetricTree(_) => random_point(&space, 0.0, &mut rng),
                _ => {
                    let d = random_point(&space, 1.0, &mut rng);
                    let t = rng.gen_range(0.0..0.3);
                    space.convex_combination(&g.common, &d, t).unwrap()
                }
            };
            if g.cfg.sets.iter().all(|s| s.membership(&space, &q, 0.0).unwrap()) {
                cands.push(q);
            }
        }
        let composite = Mapping::composite(
            g.cfg.sets.iter().cloned().map(Mapping::projection).collect(),
            g.cfg.lambdas.clone(),
            g.cfg.weights.clone(),
        )
        .unwrap();
        let probe = fixed_point_set_probe(&space, &composite, &g.cfg.sets, &cands, 1e-9).unwrap();
        ensure(probe.member_not_fixed == 0, || format!("{}: member not fixed", g.label))?;
        members += cands.len();
    }
    Ok(format!("10 composites: limits within 1e-8 of every set, {members} intersection points fixed"))
}

fn criterion_6(ap: &[Generated]) -> Outcome {
    let mut worst_e = 0.0f64;
    let mut worst_d = 0.0f64;
    let mut used = 0;
    for g in ap {
        if !g.out.trace.gaps.last().is_some_and(|x| *x <= 1e-9) {
            continue;
        }
        let space = space_of(&g.cfg.space);
        let search = CenterSearch::TailBox {
            margin: 1e-3,
            step: 1e-4,
            refine: 3,
        };
        let (c, _) = asymptotic_center(&space, g.out.trace.tail(), &search).map_err(|e| e.to_string())?;
        let d = space.distance(&c, g.out.trace.last_point()).unwrap();
        if let Space::PoincareDisk = space {
            ensure(d <= 1e-4, || format!("{}: center {d:.3e} from limit", g.label))?;
            worst_d = worst_d.max(d);
        } else {
            ensure(d <= 1e-6, || format!("{}: center {d:.3e} from limit", g.label))?;
            worst_e = worst_e.max(d);
        }
        used += 1;
    }
    ensure(used >= 10, || format!("only {used} convergent ap runs"))?;

    let line = Space::euclidean(1).unwrap();
    let tail: Vec<Point> = (0..40).map(|n| Point::vector([(n % 2) as f64])).collect();
    let search = CenterSearch::Grid {
        lo: vec![-1.0],
        hi: vec![2.0],
        step: 1e-3,
        refine: 0,
    };
    let (c, r) = asymptotic_center(&line, &tail, &search).map_err(|e| e.to_string())?;
    let mid = c.coords().unwrap()[0];
    ensure((mid - 0.5).abs() <= 1e-3 && (r - 0.5).abs() <= 1e-3, || format!("two-point center {mid}, {r}"))?;
    Ok(format!(
        "{used} runs: euclidean {worst_e:.1e}, disk {worst_d:.1e}; two-point center {mid:.4} radius {r:.4}"
    ))
}

fn criterion_7(ap: &[Generated], par: &[Generated]) -> Outcome {
    let e2 = Space::euclidean(2).unwrap();
    let a = ConvexSet::half_space([1.0, 0.0], 0.0);
    let b = ConvexSet::half_space([-1.0, 0.0], -1.0);
    let t = alternating_projections(&e2, &a, &b, &Point::vector([2.5, -0.7]), 200, 0.0).map_err(|e| e.to_string())?;
    let est = minimal_displacement_estimate(&t);
    ensure((est - 1.0).abs() <= 1e-6, || format!("disjoint fixture estimate {est}"))?;
    let mut worst = 0.0f64;
    for g in ap.iter().chain(par) {
        worst = worst.max(g.out.minimal_displacement);
    }
    ensure(worst <= 1e-6, || format!("nonempty intersection estimate {worst:.3e}"))?;
    Ok(format!("disjoint half-planes {est:.9} after 200 steps; {} feasible runs <= {worst:.1e}", ap.len() + par.len()))
}

fn criterion_8(all: &[&Generated]) -> Outcome {
    let mut bytes = 0;
    for g in all {
        let again = run_config(&g.cfg, here(), None).map_err(|e| e.to_string())?;
        let (f1, f2) = (g.out.files().unwrap(), again.files().unwrap());
        ensure(f1 == f2, || format!("{}: outputs differ", g.label))?;
        bytes += f1.iter().map(|(_, s)| s.len()).sum::<usize>();
    }
    let g = all[0];
    let other = run_config(&g.cfg, here(), Some(g.cfg.seed + 1)).unwrap();
    ensure(other.config_digest != g.out.config_digest, || "seed does not reach the digest".into())?;
    Ok(format!("{} configs re-run, {bytes} bytes identical", all.len()))
}

fn report(n: usize, name: &str, start: Instant, res: Outcome) -> bool {
    let secs = start.elapsed().as_secs_f64();
    match res {
        Ok(detail) => {
            println!("criterion {n} {name:<26} PASS  {secs:6.2}s  {detail}");
            true
        }
        Err(why) => {
            println!("criterion {n} {name:<26} FAIL  {secs:6.2}s  {why}");
            false
        }
    }
}

fn main() {
    let mut ok = true;
    let t = Instant::now();
    ok &= report(1, "axiom-suite", t, criterion_1());
    let t = Instant::now();
    ok &= report(2, "rate-formulas", t, criterion_2());

    let t = Instant::now();
    let generated = ap_runs().and_then(|ap| Ok((ap, parallel_runs(1e-12, 20_000, 2000, 20)?, picard_runs()?)));
    let (ap, par, picard) = match generated {
        Ok(g) => g,
        Err(e) => {
            for (n, name) in [(3, "certification"), (4, "orbit-inequalities"), (6, "asymptotic-center"), (7, "minimal-displacement"), (8, "determinism")] {
                report(n, name, t, Err(format!("run generation failed: {e}")));
            }
            let t = Instant::now();
            report(5, "fixed-point-set", t, criterion_5());
            std::process::exit(1);
        }
    };
    ok &= report(3, "certification", t, criterion_3(&ap, &par));
    let all: Vec<&Generated> = ap.iter().chain(&par).chain(&picard).collect();
    let t = Instant::now();
    ok &= report(4, "orbit-inequalities", t, criterion_4(&all));
    let t = Instant::now();
    ok &= report(5, "fixed-point-set", t, criterion_5());
    let t = Instant::now();
    ok &= report(6, "asymptotic-center", t, criterion_6(&ap));
    let t = Instant::now();
    ok &= report(7, "minimal-displacement", t, criterion_7(&ap, &par));
    let t = Instant::now();
    ok &= report(8, "determinism", t, criterion_8(&all));
    if !ok {
        std::process::exit(1);
    }
}
