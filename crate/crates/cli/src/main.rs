//! blowlab: construct blow-up solutions of the bad Boussinesq equation from
//! explicit scattering data and verify their quantitative behaviour.
//!
//! Subcommands: profile {check, show}, eval, verify, fit, cache {ls, purge}.
//! Exit status is 0 iff every selected check passed.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;

use blowlab_core::cache::CacheDir;
use blowlab_core::contour::GridPolicy;
use blowlab_core::error::Error;
use blowlab_core::kernel::KernelOperator;
use blowlab_core::scattering::ScatteringProfile;
use blowlab_core::series::{self, Mode};
use blowlab_core::solution::{self, EvalOptions};
use blowlab_core::verify::{self, LadderSpec};

#[derive(Parser)]
#[command(name = "blowlab", version, about = "Blow-up solutions of the bad Boussinesq equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Thread count for parallel sweeps (1 forces sequential execution).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Disable the grid/operator cache.
    #[arg(long, global = true)]
    no_cache: bool,
    /// Cache directory (default: $BLOWLAB_CACHE_DIR or ./.blowlab-cache).
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Validate or display a profile configuration.
    Profile {
        #[command(subcommand)]
        action: ProfileAction,
    },
    /// Evaluate u and derivatives on an (x, t) grid, exporting CSV + manifest.
    Eval(EvalArgs),
    /// Run verification suites; exit 0 iff all selected criteria pass.
    Verify(VerifyArgs),
    /// Fit the blow-up exponent along a t-ladder.
    Fit(FitArgs),
    /// Inspect or clear the binary caches.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Subcommand)]
enum ProfileAction {
    /// Run the L1-budget and blow-up-time criterion checks.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the resolved profile (canonical form and content hash).
    Show {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    config: PathBuf,
    /// x values: comma list; items may be `a..b:n` for n linearly spaced points.
    #[arg(long, allow_hyphen_values = true)]
    xs: String,
    /// t values: same syntax as --xs.
    #[arg(long, allow_hyphen_values = true)]
    ts: String,
    /// Max derivative order q1 + 2 q2.
    #[arg(long, default_value_t = 0)]
    order: u32,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Output CSV path (a .manifest.json sidecar is written next to it).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    config: PathBuf,
    /// Suite: pde | symmetry | norms | oracles | all.
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Optional JSON report path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    config: PathBuf,
    /// Ladder of gaps T-t as `start:end:rungs` (geometric).
    #[arg(long, default_value = "1e-1:1e-6:6")]
    ladder: String,
    #[arg(long, default_value_t = 0)]
    q1: u32,
    #[arg(long, default_value_t = 0)]
    q2: u32,
    /// Fit without dividing out the LOG(l) correction.
    #[arg(long)]
    uncorrected: bool,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Output JSON path (fit, envelope and plot-ready ladder columns).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CacheAction {
    /// List cache files and sizes.
    Ls,
    /// Delete all cache files.
    Purge,
}

#[derive(Serialize)]
struct CriterionResult {
    name: String,
    pass: bool,
    detail: String,
}

#[derive(Serialize)]
struct RunManifest {
    schema: &'static str,
    tool_version: &'static str,
    command: String,
    profile_hash: String,
    grid_policy: serde_json::Value,
    wall_clock_secs: f64,
    criteria: Vec<CriterionResult>,
    outputs: Vec<String>,
}

fn main() {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n <= 1 {
            blowlab_core::set_parallel(false);
        } else {
            // rayon sizes its global pool from this on first use.
            blowlab_core::set_parallel(true);
            std::env::set_var("RAYON_NUM_THREADS", n.to_string());
        }
    }
    let code = match run(&cli) {
        Ok(pass) => {
            if pass {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    };
    std::process::exit(code);
}

fn cache_for(cli: &Cli) -> Result<Option<CacheDir>, Error> {
    if cli.no_cache {
        return Ok(None);
    }
    let cache = match &cli.cache_dir {
        Some(dir) => CacheDir::new(dir.clone())?,
        None => CacheDir::from_env_or(Path::new(".blowlab-cache"))?,
    };
    Ok(Some(cache))
}

fn load_profile(path: &Path) -> Result<ScatteringProfile, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    ScatteringProfile::parse_config(&text)
}

fn parse_values(spec: &str) -> Result<Vec<f64>, Error> {
    let mut out = Vec::new();
    for item in spec.split(',') {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        if let Some((range, n)) = item.split_once(':') {
            let (a, b) = range
                .split_once("..")
                .ok_or_else(|| Error::Config(format!("bad range '{item}'")))?;
            let a: f64 = a.parse().map_err(|_| Error::Config(format!("bad number '{a}'")))?;
            let b: f64 = b.parse().map_err(|_| Error::Config(format!("bad number '{b}'")))?;
            let n: usize = n.parse().map_err(|_| Error::Config(format!("bad count '{n}'")))?;
            if n < 2 {
                out.push(a);
            } else {
                for i in 0..n {
                    out.push(a + (b - a) * i as f64 / (n - 1) as f64);
                }
            }
        } else {
            out.push(item.parse().map_err(|_| Error::Config(format!("bad number '{item}'")))?);
        }
    }
    if out.is_empty() {
        return Err(Error::Config(format!("empty value list '{spec}'")));
    }
    Ok(out)
}

fn parse_ladder(spec: &str) -> Result<LadderSpec, Error> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!("ladder must be start:end:rungs, got '{spec}'")));
    }
    let start: f64 = parts[0].parse().map_err(|_| Error::Config("bad ladder start".into()))?;
    let end: f64 = parts[1].parse().map_err(|_| Error::Config("bad ladder end".into()))?;
    let rungs: usize = parts[2].parse().map_err(|_| Error::Config("bad ladder rungs".into()))?;
    Ok(LadderSpec::new(start, end, rungs))
}

fn write_manifest(
    out: &Path,
    command: &str,
    profile: &ScatteringProfile,
    tol: f64,
    started: Instant,
    criteria: Vec<CriterionResult>,
    outputs: Vec<String>,
) -> Result<PathBuf, Error> {
    let manifest = RunManifest {
        schema: "blowlab.run.v1",
        tool_version: blowlab_core::VERSION,
        command: command.to_string(),
        profile_hash: profile.content_hash(),
        grid_policy: serde_json::json!({
            "tol": tol,
            "panel_width0": 0.5,
            "panel_ratio": 1.5,
            "nodes_per_panel": 16,
            "min_nodes_per_period": 8.0,
            "validated_window": solution::DEFAULT_WINDOW,
        }),
        wall_clock_secs: started.elapsed().as_secs_f64(),
        criteria,
        outputs,
    };
    let path = out.with_extension("manifest.json");
    // Manifests are append-only: one JSON object per line.
    use std::io::Write;
    let mut f = std::fs::OpenOptions::new().create(true).append(true).open(&path)?;
    writeln!(f, "{}", serde_json::to_string(&manifest).expect("manifest serializes"))?;
    Ok(path)
}

fn run(cli: &Cli) -> Result<bool, Error> {
    match &cli.command {
        Command::Profile { action } => match action {
            ProfileAction::Check { config } => {
                let profile = load_profile(config)?;
                let report = profile.validate();
                println!("profile hash      : {}", profile.content_hash());
                println!(
                    "L1 budget         : {:.6e} <= 1/M = {:.6e}  [{}]",
                    report.l1_budget,
                    report.l1_limit,
                    if report.l1_pass { "pass" } else { "FAIL" }
                );
                println!(
                    "blow-up criterion : decay below T {}, growth above T {}  [{}]",
                    report.before_t.decreasing,
                    report.after_t.increasing,
                    if report.blowup_time_pass { "pass" } else { "FAIL" }
                );
                Ok(report.pass())
            }
            ProfileAction::Show { config } => {
                let profile = load_profile(config)?;
                print!("{}", profile.canonical_config());
                println!("# eta = {}", profile.eta());
                println!("# content_hash = {}", profile.content_hash());
                Ok(true)
            }
        },
        Command::Eval(args) => {
            let started = Instant::now();
            let profile = load_profile(&args.config)?;
            let xs = parse_values(&args.xs)?;
            let ts = parse_values(&args.ts)?;
            let opts = EvalOptions { cache: cache_for(cli)?, ..Default::default() };
            let cells = solution::u_grid_opts(&profile, &xs, &ts, args.order, args.tol, &opts);
            let mut buf = Vec::new();
            solution::write_cells_csv(&cells, &mut buf)?;
            std::fs::write(&args.out, &buf)?;
            let n_err = cells.iter().filter(|c| c.error.is_some()).count();
            let criteria = vec![CriterionResult {
                name: "eval.cells_ok".into(),
                pass: n_err == 0,
                detail: format!("{} cells, {} errors", cells.len(), n_err),
            }];
            let manifest = write_manifest(
                &args.out,
                "eval",
                &profile,
                args.tol,
                started,
                criteria,
                vec![args.out.display().to_string()],
            )?;
            println!("wrote {} ({} cells) + {}", args.out.display(), cells.len(), manifest.display());
            Ok(n_err == 0)
        }
        Command::Verify(args) => {
            let started = Instant::now();
            let profile = load_profile(&args.config)?;
            let criteria = run_suites(&profile, &args.suite, args.tol, cache_for(cli)?)?;
            let pass = criteria.iter().all(|c| c.pass);
            for c in &criteria {
                println!("[{}] {}: {}", if c.pass { "pass" } else { "FAIL" }, c.name, c.detail);
            }
            if let Some(out) = &args.out {
                let report = serde_json::json!({
                    "schema": "blowlab.verify.v1",
                    "profile_hash": profile.content_hash(),
                    "suite": args.suite,
                    "tol": args.tol,
                    "pass": pass,
                    "criteria": criteria,
                });
                std::fs::write(out, serde_json::to_string_pretty(&report).unwrap())?;
                write_manifest(
                    out,
                    "verify",
                    &profile,
                    args.tol,
                    started,
                    criteria,
                    vec![out.display().to_string()],
                )?;
            }
            Ok(pass)
        }
        Command::Fit(args) => {
            let started = Instant::now();
            let profile = load_profile(&args.config)?;
            let ladder = parse_ladder(&args.ladder)?;
            let fit = verify::fit_blowup_lenient(
                &profile,
                args.q1,
                args.q2,
                &ladder,
                !args.uncorrected,
                args.tol,
            )?;
            let pass = fit.r2 >= 0.99;
            println!(
                "delta_hat = {:.5} (target {:.5}), r2 = {:.6}, sign {}",
                fit.delta_hat,
                fit.target_delta,
                fit.r2,
                if fit.sign_ok { "ok" } else { "MISMATCH" }
            );
            for r in &fit.rungs {
                println!(
                    "  T-t = {:.3e}  value = {:+.8e}  prediction = {}  ratio = {}",
                    r.gap,
                    r.value,
                    r.prediction.map_or("n/a".into(), |p| format!("{p:+.8e}")),
                    r.ratio.map_or("n/a".into(), |p| format!("{p:.4}")),
                );
            }
            if !pass {
                eprintln!("fit error: regression r2 = {} < 0.99 (partial data retained)", fit.r2);
            }
            if let Some(out) = &args.out {
                std::fs::write(out, serde_json::to_string_pretty(&fit).unwrap())?;
                write_manifest(
                    out,
                    "fit",
                    &profile,
                    args.tol,
                    started,
                    vec![CriterionResult {
                        name: "fit.r2".into(),
                        pass,
                        detail: format!("r2 = {}", fit.r2),
                    }],
                    vec![out.display().to_string()],
                )?;
            }
            Ok(pass)
        }
        Command::Cache { action } => {
            let cache = match &cli.cache_dir {
                Some(dir) => CacheDir::new(dir.clone())?,
                None => CacheDir::from_env_or(Path::new(".blowlab-cache"))?,
            };
            match action {
                CacheAction::Ls => {
                    let files = cache.ls()?;
                    for (p, size) in &files {
                        println!("{:>12}  {}", size, p.display());
                    }
                    println!("{} files in {}", files.len(), cache.root().display());
                }
                CacheAction::Purge => {
                    let n = cache.purge()?;
                    println!("removed {n} cache files from {}", cache.root().display());
                }
            }
            Ok(true)
        }
    }
}

fn run_suites(
    profile: &ScatteringProfile,
    suite: &str,
    tol: f64,
    cache: Option<CacheDir>,
) -> Result<Vec<CriterionResult>, Error> {
    let mut out = Vec::new();
    let all = suite == "all";
    let is_zero = profile.is_zero();
    if !(all || ["pde", "symmetry", "norms", "oracles"].contains(&suite)) {
        return Err(Error::Config(format!(
            "unknown suite '{suite}' (expected pde|symmetry|norms|oracles|all)"
        )));
    }
    let big_t = profile.t_blowup();

    if all || suite == "pde" {
        let pts: Vec<(f64, f64)> = [-3.0, -1.0, 0.5, 2.0]
            .iter()
            .flat_map(|&dx| {
                [0.2, 0.6].iter().map(move |&g| (profile.x0() + dx, big_t * (1.0 - g)))
            })
            .collect();
        let rep = verify::pde_residual(profile, &pts, tol.min(1e-8))?;
        let pass = rep.pass(1e-6);
        out.push(CriterionResult {
            name: "pde.residual".into(),
            pass,
            detail: format!("max rel residual = {:.3e} over {} points", rep.max_rel, pts.len()),
        });
    }
    if all || suite == "symmetry" {
        let ks: Vec<Complex64> = (0..40)
            .map(|i| {
                let th = 0.21 + 0.157 * i as f64;
                let r = 0.15 * 1.18f64.powi(i);
                Complex64::from_polar(r, th)
            })
            .collect();
        let rep = verify::symmetry_audit(profile, profile.x0(), big_t * 0.5, &ks, tol.min(1e-9))?;
        let pass = rep.max_pair_diff < 1e-9 && rep.far_dev_large < 1e-5 && rep.far_dev_small < 1e-5;
        out.push(CriterionResult {
            name: "symmetry.m_inversion".into(),
            pass,
            detail: format!(
                "max |m(k)-m(1/k)| = {:.3e} over {} points; |m-1| far = {:.3e}/{:.3e}",
                rep.max_pair_diff, rep.n_evaluated, rep.far_dev_small, rep.far_dev_large
            ),
        });
    }
    if all || suite == "norms" {
        let policy = GridPolicy::for_window(profile.x0(), 4.0);
        let mut worst = 0.0f64;
        let mut worst_term = 0.0f64;
        let mut resid = 0.0f64;
        for i in 0..3 {
            for jj in 0..3 {
                let x = profile.x0() - 4.0 + 4.0 * i as f64;
                let t = big_t * (0.1 + 0.35 * jj as f64);
                let grid = match &cache {
                    Some(c) => c.load_or_build_grid(profile, t, tol.min(1e-9), 2, &policy)?.0,
                    None => blowlab_core::contour::build_grid_with_policy(
                        profile,
                        t,
                        tol.min(1e-9),
                        2,
                        &policy,
                    )?,
                };
                let op = KernelOperator::assemble(profile, &grid, x, t)?;
                worst = worst.max(op.norm_est);
                for (j, sup) in series::term_sups(&op, 10).iter().enumerate() {
                    worst_term =
                        worst_term.max(sup * profile.m_const().powi(j as i32 + 1));
                }
                resid = resid.max(series::fixed_point_residual(&op)?);
            }
        }
        let bound = 1.0 / profile.m_const() + 1e-10;
        let pass = worst <= bound && (is_zero || worst_term <= 1.01) && resid < 1e-12;
        out.push(CriterionResult {
            name: "norms.kernel_and_terms".into(),
            pass,
            detail: format!(
                "norm_est max = {:.6e} (bound {:.6e}); max M^j sup|m_j| = {:.4}; fixed-point residual = {:.2e}",
                worst, bound, worst_term, resid
            ),
        });
    }
    if all || suite == "oracles" {
        let (x, t) = (profile.x0() + 0.4, big_t * 0.5);
        let policy = GridPolicy::for_window(profile.x0(), 1.0);
        let grid =
            blowlab_core::contour::build_grid_with_policy(profile, t, 1e-10, 3, &policy)?;
        let op = KernelOperator::assemble(profile, &grid, x, t)?;
        let mut worst = 0.0f64;
        for j in 1..=3 {
            let oracle = verify::nested_tensor_m1_term(profile, x, t, j)?;
            let term = verify::series_m1_term(&op, j);
            let denom = oracle.norm().max(1e-300);
            if is_zero {
                worst = worst.max((term - oracle).norm());
            } else {
                worst = worst.max((term - oracle).norm() / denom);
            }
        }
        // derivative recursion vs finite differences
        let h = 1e-4;
        let d10 = series::derivative_m1(&op, 1, 0, Mode::Direct)?.value;
        let at = |xx: f64| -> Result<Complex64, Error> {
            let opx = KernelOperator::assemble(profile, &grid, xx, t)?;
            Ok(series::m1_series(&opx, Mode::Direct)?.value)
        };
        let fd = (at(x + h)? - at(x - h)?) / (2.0 * h);
        let fd_err = if is_zero { 0.0 } else { (d10 - fd).norm() / d10.norm().max(1e-300) };
        // leading vs series j=1
        let s = solution::u_eval_opts(
            profile,
            x,
            t,
            0,
            1e-10,
            &EvalOptions { mode: Some(Mode::Neumann { jmax: 1 }), ..Default::default() },
        )?;
        let lead_err = (s.value(0, 0) - s.leading[&(0, 0)]).abs()
            / (1.0 + s.leading[&(0, 0)].abs());
        let pass = worst < 1e-9 && fd_err < 1e-6 && lead_err < 1e-9;
        out.push(CriterionResult {
            name: "oracles.closure".into(),
            pass,
            detail: format!(
                "tensor j<=3 rel = {:.3e}; FD rel = {:.3e}; leading vs j1 = {:.3e}",
                worst, fd_err, lead_err
            ),
        });
    }
    Ok(out)
}
