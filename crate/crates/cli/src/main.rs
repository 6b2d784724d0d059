//! `hcgas` command-line driver.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error,
//! 3 resource or budget error. `HCGAS_THREADS` caps the worker pool.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use hcgas::experiments::{
    central_ball, corner_cube, dyadic_sizes, poisson_grid, rows_to_csv, run_grid, summarize,
    LinearStatistic, Statistic,
};
use hcgas::verify::{self, Suite};
use hcgas::zfun::{build_tables, log_partition, LevelTables, DEFAULT_DEPTH_PAD};
use hcgas::{
    base_level, count_ground_states, energy_increment, ground_energy, ground_state_weight,
    is_ground_state, log_z_ground, induce_tree, Error, SamplerState,
};

const THREADS_VAR: &str = "HCGAS_THREADS";

#[derive(Parser, Debug)]
#[command(name = "hcgas", version, about = "Hierarchical Coulomb gas: exact ground states, partition functions and perfect samples")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Ground-state energy, increment, count and base level.
    Ground {
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 3)]
        d: u32,
        #[arg(long)]
        json: bool,
    },
    /// Log partition function with bracket slacks.
    Logz {
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 3)]
        d: u32,
        /// Convergence tolerance on log Z when deepening the tables.
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Fixed depth padding; skips the convergence loop.
        #[arg(long)]
        depth_pad: Option<u32>,
        /// Table cache file, read if present and written otherwise.
        #[arg(long)]
        cache: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Exact Gibbs samples written as point CSV files.
    Sample {
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 3)]
        d: u32,
        #[arg(long, default_value_t = 1)]
        reps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_DEPTH_PAD)]
        depth_pad: u32,
        /// Output directory; one `sample_<i>.csv` per replica.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Self-check to run instead of writing samples.
        #[arg(long, value_enum)]
        verify: Option<SampleCheck>,
    },
    /// Number-variance and linear-statistic experiments.
    Experiment {
        #[arg(long, value_enum)]
        suite: ExperimentSuite,
        /// Comma-separated sizes; defaults to 2^8..2^13.
        #[arg(long, value_delimiter = ',')]
        ns: Vec<u64>,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 3)]
        d: u32,
        #[arg(long, default_value_t = 4000)]
        reps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output prefix; writes `<out>.csv` and `<out>.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Invariant suites; exit 1 if any check fails.
    Verify {
        #[arg(long, value_parser = Suite::NAMES)]
        suite: String,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SampleCheck {
    /// beta = 0 composition law is multinomial.
    Multinomial,
    /// Large beta yields ground states only.
    Ground,
    /// Sampled points induce the sampled tree.
    Roundtrip,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ExperimentSuite {
    Hyper,
    Boundary,
    Linear,
    Baseline,
}

enum Failure {
    Verification(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(Error::Io(e))
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidDimension(_) | Error::InvalidArgument(_) | Error::Parse(_) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(v) = std::env::var(THREADS_VAR) {
        match v.parse::<usize>() {
            Ok(t) if t > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
            }
            _ => {
                eprintln!("error: {THREADS_VAR} must be a positive integer, got {v:?}");
                return ExitCode::from(2);
            }
        }
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Ground { n, d, json } => cmd_ground(n, d, json),
        Command::Logz {
            n,
            beta,
            d,
            tol,
            depth_pad,
            cache,
            json,
        } => cmd_logz(n, beta, d, tol, depth_pad, cache.as_deref(), json),
        Command::Sample {
            n,
            beta,
            d,
            reps,
            seed,
            depth_pad,
            out,
            verify,
        } => cmd_sample(n, beta, d, reps, seed, depth_pad, out.as_deref(), verify),
        Command::Experiment {
            suite,
            ns,
            beta,
            d,
            reps,
            seed,
            out,
        } => cmd_experiment(suite, ns, beta, d, reps, seed, out.as_deref()),
        Command::Verify { suite } => cmd_verify(&suite),
    }
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn cmd_ground(n: u64, d: u32, as_json: bool) -> Result<(), Failure> {
    let l = ground_energy(n, d)?;
    let dn = energy_increment(n, d)?;
    let h = base_level(n, d);
    let count = match count_ground_states(n, d) {
        Ok(b) => json!({ "b": b.to_string() }),
        Err(Error::Budget { .. }) | Err(Error::Overflow(_)) => {
            json!({ "log_gsw": ground_state_weight(n, d)?.ln() })
        }
        Err(e) => return Err(e.into()),
    };
    if as_json {
        let mut v = json!({
            "n": n, "d": d, "L": l.to_string(), "D": dn.to_string(), "h": h,
        });
        v.as_object_mut()
            .unwrap()
            .extend(count.as_object().unwrap().clone());
        print_json(&v);
    } else {
        println!("# n={n} d={d}");
        println!("L = {l}");
        println!("D = {dn}");
        match count.get("b") {
            Some(b) => println!("b = {}", b.as_str().unwrap()),
            None => println!("log GSW = {:?}", count["log_gsw"].as_f64().unwrap()),
        }
        println!("h = {h}");
    }
    Ok(())
}

fn cached_tables(n: u64, beta: f64, d: u32, pad: u32, cache: Option<&Path>) -> Result<LevelTables, Error> {
    if let Some(path) = cache {
        if path.exists() {
            return LevelTables::load(path, Some((n, beta, d, pad)));
        }
        let t = build_tables(n, beta, d, pad)?;
        t.save(path)?;
        return Ok(t);
    }
    build_tables(n, beta, d, pad)
}

fn cmd_logz(
    n: u64,
    beta: f64,
    d: u32,
    tol: f64,
    depth_pad: Option<u32>,
    cache: Option<&Path>,
    as_json: bool,
) -> Result<(), Failure> {
    let (log_z, delta, pad, depth) = match depth_pad {
        Some(pad) => {
            let t = cached_tables(n, beta, d, pad, cache)?;
            (t.log_z(n, 0).ln(), None, pad, t.depth())
        }
        None => {
            if cache.is_some() {
                return Err(Error::InvalidArgument("--cache needs an explicit --depth-pad".into()).into());
            }
            let c = log_partition(n, beta, d, tol)?;
            (c.log_z.ln(), Some(c.delta), c.depth_pad, c.depth)
        }
    };
    let top = -beta * ground_energy(n, d)? as f64;
    let top = if top == 0.0 { 0.0 } else { top };
    let ground = log_z_ground(n, beta, d)?.ln();
    let lower = log_z - ground;
    let upper = top - log_z;
    if as_json {
        print_json(&json!({
            "n": n, "beta": beta, "d": d, "tol": tol, "depth_pad": pad, "depth": depth,
            "log_z": log_z, "delta": delta, "lower_slack": lower, "upper_slack": upper,
        }));
    } else {
        println!("# n={n} beta={beta:?} d={d} tol={tol:?} depth_pad={pad} depth={depth}");
        println!("log_z = {log_z:?}");
        if let Some(delta) = delta {
            println!("delta = {delta:?}");
        }
        println!("lower_slack = {lower:?}");
        println!("upper_slack = {upper:?}");
    }
    let slack = 1e-9 * (1.0 + top.abs());
    if lower < -slack || upper < -slack {
        return Err(Failure::Verification(format!(
            "log Z outside [log Z_ground, -beta L_n]: slacks {lower:e}, {upper:e}"
        )));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_sample(
    n: u64,
    beta: f64,
    d: u32,
    reps: u64,
    seed: u64,
    pad: u32,
    out: Option<&Path>,
    check: Option<SampleCheck>,
) -> Result<(), Failure> {
    if let Some(check) = check {
        let (ok, what) = match check {
            SampleCheck::Multinomial => {
                let p = verify::composition_p_value(n.min(4), 0.0, d, 20_000, seed)?;
                (p > 1e-3, format!("beta=0 composition chi-square p = {p:.4}"))
            }
            SampleCheck::Ground => {
                let bad = verify::non_ground_samples(n.clamp(2, 64), beta.max(50.0), d, reps.max(100), seed)?;
                (bad == 0, format!("{bad} non-ground samples"))
            }
            SampleCheck::Roundtrip => {
                let t = build_tables(n, beta, d, pad)?;
                let mut s = SamplerState::new(&t, seed, 0);
                let mut ok = true;
                for _ in 0..reps {
                    let tree = s.sample_partition(n)?;
                    let cfg = s.sample_points(&tree)?;
                    ok &= induce_tree(&cfg)? == tree;
                }
                (ok, format!("{reps} tree round trips"))
            }
        };
        println!("{} {what}", if ok { "PASS" } else { "FAIL" });
        return if ok { Ok(()) } else { Err(Failure::Verification(what)) };
    }
    let t = build_tables(n, beta, d, pad)?;
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
    }
    for i in 0..reps {
        let mut s = SamplerState::new(&t, seed, i);
        let cfg = s.sample_configuration(n)?;
        let tree = induce_tree(&cfg)?;
        let meta = format!("{},ground={}", s.metadata(n), is_ground_state(&tree));
        let csv = cfg.to_csv(Some(&meta));
        match out {
            Some(dir) => fs::write(dir.join(format!("sample_{i}.csv")), csv)?,
            None => {
                let mut o = std::io::stdout().lock();
                o.write_all(csv.as_bytes())?;
            }
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_experiment(
    suite: ExperimentSuite,
    ns: Vec<u64>,
    beta: f64,
    d: u32,
    reps: u64,
    seed: u64,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let ns = if ns.is_empty() { dyadic_sizes(8, 13) } else { ns };
    let (rows, beta) = match suite {
        ExperimentSuite::Hyper => (run_grid(&[Statistic::Count(corner_cube(d))], &ns, beta, d, reps, seed)?, beta),
        ExperimentSuite::Boundary => (run_grid(&[Statistic::Count(central_ball(d))], &ns, beta, d, reps, seed)?, beta),
        ExperimentSuite::Linear => (
            run_grid(&[Statistic::Linear(LinearStatistic::X1)], &ns, beta, d, reps, seed)?,
            beta,
        ),
        ExperimentSuite::Baseline => {
            let stats = [
                Statistic::Count(corner_cube(d)),
                Statistic::Count(central_ball(d)),
                Statistic::Linear(LinearStatistic::X1),
            ];
            (poisson_grid(&stats, &ns, d, reps, seed)?, 0.0)
        }
    };
    let fits = summarize(&rows)?;
    let summary = json!({
        "suite": format!("{suite:?}").to_lowercase(),
        "ns": ns, "beta": beta, "d": d, "reps": reps, "seed": seed,
        "rows": rows, "fits": fits,
    });
    let csv = rows_to_csv(&rows);
    match out {
        Some(prefix) => {
            fs::write(prefix.with_extension("csv"), &csv)?;
            fs::write(
                prefix.with_extension("json"),
                serde_json::to_string_pretty(&summary).expect("serializable"),
            )?;
            for f in &fits {
                println!(
                    "{}: slope {:?} +/- {:?} (95% CI [{:?}, {:?}])",
                    f.stat, f.slope, f.slope_se, f.ci_low, f.ci_high
                );
            }
        }
        None => {
            print!("{csv}");
            print_json(&json!({ "fits": fits }));
        }
    }
    Ok(())
}

fn cmd_verify(suite: &str) -> Result<(), Failure> {
    let suite: Suite = suite.parse()?;
    let report = verify::run(suite);
    println!("{report}");
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Verification("one or more checks failed".into()))
    }
}
