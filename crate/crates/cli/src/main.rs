use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use geofix::canonical;
use geofix::checks::{check_property, Property};
use geofix::config::{run_config, RunConfig, RunOutput};
use geofix::iteration::{asymptotic_center, CenterSearch};
use geofix::rates::{RateFormula, RateInputs};
use geofix::{GeoError, ModulusOfConvexity, Space};

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser)]
#[command(name = "geofix", version, about = "Fixed-point iterations and rate certificates in geodesic spaces")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample the geometric axioms and inequalities of a space.
    Check {
        /// euclidean:d, disk, lp:p:d or tree:tripod
        #[arg(long)]
        space: String,
        /// Comma-separated property names, `w-axioms` or `all`.
        #[arg(long, default_value = "all")]
        props: String,
        #[arg(short, long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for reports.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a configured iteration and certify it.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Directory for trace.csv, trace.json, certificates.json, reports.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a rate of asymptotic regularity.
    Rate {
        /// averaged, firmly, ap, parallel or parallel_refined
        formula: String,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        b: f64,
        #[arg(long)]
        lambda: Option<f64>,
        /// Comma-separated lambda_i of a parallel scheme.
        #[arg(long, value_delimiter = ',')]
        lambdas: Vec<f64>,
        /// Comma-separated weights alpha_i of a parallel scheme.
        #[arg(long, value_delimiter = ',')]
        alphas: Vec<f64>,
        /// cat0 or lp:<p>
        #[arg(long, default_value = "cat0")]
        modulus: String,
    },
    /// Asymptotic center of the tail of a configured run.
    Center {
        #[arg(long)]
        config: PathBuf,
        /// Candidate search as JSON; overrides the config's `center`.
        #[arg(long)]
        search: Option<String>,
    },
}

struct Failure {
    code: u8,
    msg: String,
}

impl From<GeoError> for Failure {
    fn from(e: GeoError) -> Self {
        let code = match e {
            GeoError::NumericFailure { .. } => EXIT_NUMERIC,
            _ => EXIT_USAGE,
        };
        Failure { code, msg: e.to_string() }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: EXIT_USAGE,
        msg: format!("cannot write {}: {e}", path.display()),
    }
}

fn seed_override() -> Result<Option<u64>, Failure> {
    match std::env::var("GEOFIX_SEED") {
        Ok(s) => s.trim().parse().map(Some).map_err(|_| Failure {
            code: EXIT_USAGE,
            msg: format!("GEOFIX_SEED is not an integer: `{s}`"),
        }),
        Err(_) => Ok(None),
    }
}

fn write_files(dir: &Path, files: &[(&str, String)]) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
    for (name, body) in files {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| io_failure(&path, e))?;
    }
    Ok(())
}

fn parse_modulus(s: &str) -> Result<ModulusOfConvexity, Failure> {
    let usage = || Failure {
        code: EXIT_USAGE,
        msg: format!("unknown modulus `{s}` (expected cat0 or lp:<p>)"),
    };
    match s {
        "cat0" | "cat(0)" => Ok(ModulusOfConvexity::Cat0),
        _ => {
            let p = s.strip_prefix("lp:").ok_or_else(usage)?;
            Ok(ModulusOfConvexity::Lp {
                p: p.parse().map_err(|_| usage())?,
            })
        }
    }
}

fn cmd_check(space: &str, props: &str, n: usize, seed: u64, out: Option<&Path>) -> Result<u8, Failure> {
    let space = Space::parse(space)?;
    let props = Property::parse_list(props)?;
    let seed = seed_override()?.unwrap_or(seed);
    let mut reports = Vec::new();
    for p in props {
        let r = check_property(&space, p, n, seed)?;
        println!("{}", r.verdict());
        if !r.passed {
            if let Some(w) = &r.witness {
                println!("  witness {} params {:?}", serde_json::to_string(w).unwrap_or_default(), r.parameters);
            }
        }
        reports.push(r);
    }
    if let Some(dir) = out {
        write_files(dir, &[("reports.json", canonical::to_canonical(&reports)?)])?;
    }
    Ok(if reports.iter().all(|r| r.passed) { 0 } else { EXIT_FAIL })
}

fn load(config: &Path) -> Result<(RunConfig, PathBuf), Failure> {
    let cfg = RunConfig::from_file(config)?;
    let base = config.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, base))
}

fn summarize(out: &RunOutput) {
    println!("digest {}", out.config_digest);
    println!(
        "steps {} stop {:?} last_gap {:.3e} min_displacement {:.3e}",
        out.trace.steps(),
        out.trace.stop,
        out.trace.gaps.last().copied().unwrap_or(0.0),
        out.minimal_displacement
    );
    for c in &out.certificates {
        let obs = c.observed_index.map_or("not reached".to_string(), |n| n.to_string());
        println!(
            "certificate eps={} formula={:?} observed={} bound={} {}",
            c.epsilon,
            c.bound_formula,
            obs,
            c.bound,
            if c.passes { "PASS" } else { "FAIL" }
        );
    }
    for r in &out.reports {
        println!(
            "report {:<22} {} samples={} violations={}",
            r.name,
            if r.holds() { "PASS" } else { "FAIL" },
            r.samples,
            r.violations
        );
    }
    if let Some(c) = &out.center {
        println!("center radius {:.6e} distance_to_last {:.3e}", c.radius, c.distance_to_last);
    }
}

fn cmd_run(config: &Path, out_dir: Option<&Path>) -> Result<u8, Failure> {
    let (cfg, base) = load(config)?;
    let out = run_config(&cfg, &base, seed_override()?)?;
    summarize(&out);
    if let Some(dir) = out_dir {
        write_files(dir, &out.files()?)?;
    }
    Ok(if out.passed { 0 } else { EXIT_FAIL })
}

#[allow(clippy::too_many_arguments)]
fn cmd_rate(
    formula: &str,
    eps: f64,
    b: f64,
    lambda: Option<f64>,
    lambdas: Vec<f64>,
    alphas: Vec<f64>,
    modulus: &str,
) -> Result<u8, Failure> {
    let formula = RateFormula::parse(formula)?;
    let mut inputs = RateInputs::new(eps, b);
    inputs.lambda = lambda;
    inputs.lambdas = lambdas;
    inputs.alphas = alphas;
    inputs.modulus = Some(parse_modulus(modulus)?);
    println!("{}", inputs.bound(formula)?);
    Ok(0)
}

fn cmd_center(config: &Path, search: Option<&str>) -> Result<u8, Failure> {
    let (mut cfg, base) = load(config)?;
    let search: CenterSearch = match search {
        Some(s) => serde_json::from_str(s).map_err(|e| Failure {
            code: EXIT_USAGE,
            msg: format!("bad --search: {e}"),
        })?,
        None => cfg.center.clone().unwrap_or(if cfg.space.starts_with("tree:") {
            CenterSearch::TreeSamples { per_edge: 1000 }
        } else {
            CenterSearch::TailBox {
                margin: 0.1,
                step: 0.01,
                refine: 4,
            }
        }),
    };
    cfg.center = None;
    cfg.eps.clear();
    let out = run_config(&cfg, &base, seed_override()?)?;
    let (space, _) = geofix::config::resolve_space(&cfg.space, &base)?;
    let (c, r) = asymptotic_center(&space, out.trace.tail(), &search)?;
    let d = space.distance(&c, out.trace.last_point())?;
    println!("{}", serde_json::to_string(&c).unwrap_or_default());
    println!("radius {r:.9e} distance_to_last {d:.9e}");
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let res = match cli.cmd {
        Cmd::Check {
            space,
            props,
            n,
            seed,
            out,
        } => cmd_check(&space, &props, n, seed, out.as_deref()),
        Cmd::Run { config, out } => cmd_run(&config, out.as_deref()),
        Cmd::Rate {
            formula,
            eps,
            b,
            lambda,
            lambdas,
            alphas,
            modulus,
        } => cmd_rate(&formula, eps, b, lambda, lambdas, alphas, &modulus),
        Cmd::Center { config, search } => cmd_center(&config, search.as_deref()),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("geofix: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
