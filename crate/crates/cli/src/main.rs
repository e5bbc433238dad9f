use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use onebit_core::classical::{one_bit_bound_bruteforce_with_limit, BoundResult};
use onebit_core::experiments::{
    self, default_sigma_grid, format_sig12, log_grid, noise_sweep, structure_report,
    violation_threshold, write_bounds_csv, write_sweep_csv, DEFAULT_SWEEP_RESTARTS, DEFAULT_TRIALS,
};
use onebit_core::{
    local_bound, make_truncated_xor_game, maximally_entangled_state, ns_bound, one_bit_bound,
    seesaw_optimize, BellFunctional, Error, QuantumModel, SeesawConfig,
};
use serde_json::json;

/// Brute-force candidates allowed by `verify` without `--force`.
const VERIFY_LIMIT: u64 = 10_000_000;

#[derive(Parser)]
#[command(
    name = "onebit",
    version,
    about = "Bounds and quantum violations for one-bit Bell scenarios"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for every randomised step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the truncated XOR-d functional.
    Game {
        #[arg(long)]
        d: usize,
        /// Output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact local, one-bit and no-signaling bounds of a functional.
    Bounds(BoundsArgs),
    /// Compare the bipartition one-bit bound against brute force.
    Verify {
        functional: PathBuf,
        /// Lift the brute-force size guard.
        #[arg(long)]
        force: bool,
    },
    /// Optimise measurements on the maximally entangled state.
    Seesaw {
        functional: PathBuf,
        #[command(flatten)]
        seesaw: SeesawArgs,
        /// Write the best model as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit 1 unless the score beats the one-bit bound.
        #[arg(long)]
        require_violation: bool,
    },
    /// Noise-robustness sweep; writes CSV.
    Sweep {
        #[arg(long, default_value_t = 5)]
        d: usize,
        /// Explicit noise levels, comma separated.
        #[arg(long, value_delimiter = ',', conflicts_with_all = ["sigma_min", "sigma_max", "points"])]
        sigmas: Option<Vec<f64>>,
        #[arg(long, requires_all = ["sigma_max", "points"])]
        sigma_min: Option<f64>,
        #[arg(long)]
        sigma_max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        #[arg(long, default_value_t = DEFAULT_SWEEP_RESTARTS)]
        restarts: usize,
        #[arg(long, default_value_t = 500)]
        sweeps: usize,
        /// CSV output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Structure report of a saved model.
    Report {
        model: PathBuf,
        /// Functional to score against (default: the XOR game matching the model).
        #[arg(long)]
        functional: Option<PathBuf>,
    },
}

#[derive(Args)]
struct BoundsArgs {
    /// Functional JSON file.
    #[arg(required_unless_present = "table")]
    functional: Option<PathBuf>,
    /// Bounds to compute.
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "local,onebit,ns"
    )]
    which: Vec<Which>,
    /// Tabulate the XOR games for d in MIN..=MAX as CSV instead.
    #[arg(long, num_args = 2, value_names = ["MIN", "MAX"], conflicts_with = "functional")]
    table: Option<Vec<usize>>,
    #[command(flatten)]
    seesaw: SeesawArgs,
}

#[derive(Args)]
struct SeesawArgs {
    #[arg(long, default_value_t = 50)]
    restarts: usize,
    #[arg(long, default_value_t = 500)]
    sweeps: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

impl SeesawArgs {
    fn config(&self, seed: u64) -> SeesawConfig {
        SeesawConfig {
            restarts: self.restarts,
            sweeps_max: self.sweeps,
            improvement_tol: self.tol,
            rng_seed: seed,
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Which {
    Local,
    Onebit,
    Ns,
}

enum Failure {
    Semantic,
    Error(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Error(e.into())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Error(e.into())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Semantic) => ExitCode::from(1),
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Game { d, out } => cmd_game(cli, *d, out.as_deref()),
        Command::Bounds(args) => cmd_bounds(cli, args),
        Command::Verify { functional, force } => cmd_verify(cli, functional, *force),
        Command::Seesaw {
            functional,
            seesaw,
            out,
            require_violation,
        } => cmd_seesaw(cli, functional, seesaw, out.as_deref(), *require_violation),
        Command::Sweep {
            d,
            sigmas,
            sigma_min,
            sigma_max,
            points,
            trials,
            restarts,
            sweeps,
            out,
        } => {
            let grid = match (sigmas, sigma_min, sigma_max, points) {
                (Some(s), ..) => s.clone(),
                (None, Some(lo), Some(hi), Some(n)) => log_grid(*lo, *hi, *n),
                _ => default_sigma_grid(),
            };
            let config = SeesawConfig {
                restarts: *restarts,
                sweeps_max: *sweeps,
                rng_seed: cli.seed,
                ..SeesawConfig::default()
            };
            cmd_sweep(cli, *d, &grid, *trials, &config, out.as_deref())
        }
        Command::Report { model, functional } => cmd_report(cli, model, functional.as_deref()),
    }
}

fn read_functional(path: &Path) -> Result<BellFunctional, Failure> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

fn write_to(path: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> Outcome) -> Outcome {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            body(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn cmd_game(cli: &Cli, d: usize, out: Option<&Path>) -> Outcome {
    let game = make_truncated_xor_game(d)?;
    write_to(out, |w| {
        serde_json::to_writer(&mut *w, &game)?;
        writeln!(w)?;
        Ok(())
    })?;
    let dim = game.scenario().probability_dimension();
    let line = if cli.json {
        json!({ "probability_dimension": dim }).to_string()
    } else {
        format!("probability dimension {dim}")
    };
    // keep stdout clean when it carries the functional itself
    if out.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
    Ok(())
}

fn describe(name: &str, r: &BoundResult) -> String {
    let mut line = format!("{name} {}", r.value);
    if let Some(p) = &r.witness_partition {
        line += &format!(" partition {p}");
    }
    if let Some(w) = &r.witness_onebit {
        line += &format!(
            " alice {:?} comm {:?} bob {:?}",
            w.alice_outputs, w.comm, w.bob_outputs
        );
    } else if let Some(w) = &r.witness_local {
        line += &format!(" alice {:?} bob {:?}", w.alice_outputs, w.bob_outputs);
    }
    line
}

fn cmd_bounds(cli: &Cli, args: &BoundsArgs) -> Outcome {
    if let Some(range) = &args.table {
        let rows = experiments::bounds_table(range[0], range[1], &args.seesaw.config(cli.seed))?;
        if cli.json {
            println!("{}", serde_json::to_string(&rows)?);
        } else {
            write_bounds_csv(&rows, io::stdout().lock())?;
        }
        return Ok(());
    }
    let functional = read_functional(
        args.functional
            .as_deref()
            .expect("clap enforces functional or table"),
    )?;
    let mut record = serde_json::Map::new();
    for which in [Which::Local, Which::Onebit, Which::Ns] {
        if !args.which.contains(&which) {
            continue;
        }
        match which {
            Which::Local => {
                let r = local_bound(&functional);
                if !cli.json {
                    println!("{}", describe("local", &r));
                }
                record.insert("local".into(), serde_json::to_value(&r)?);
            }
            Which::Onebit => {
                let r = one_bit_bound(&functional)?;
                if !cli.json {
                    println!("{}", describe("onebit", &r));
                }
                record.insert("onebit".into(), serde_json::to_value(&r)?);
            }
            Which::Ns => {
                let v = ns_bound(&functional);
                if !cli.json {
                    println!("ns {v}");
                }
                // rationals go out as strings so non-integer values stay exact
                let value = if v.is_integer() {
                    serde_json::Value::Number(v.to_integer().to_string().parse()?)
                } else {
                    serde_json::Value::String(v.to_string())
                };
                record.insert("ns".into(), json!({ "value": value }));
            }
        }
    }
    if cli.json {
        println!("{}", serde_json::Value::Object(record));
    }
    Ok(())
}

fn cmd_verify(cli: &Cli, path: &Path, force: bool) -> Outcome {
    let functional = read_functional(path)?;
    let limit = if force { u64::MAX } else { VERIFY_LIMIT };
    let brute = one_bit_bound_bruteforce_with_limit(&functional, limit)?;
    let fast = one_bit_bound(&functional)?.value;
    let matched = brute == fast;
    if cli.json {
        println!(
            "{}",
            json!({ "match": matched, "bipartition": fast.to_string().parse::<serde_json::Number>()?,
                    "bruteforce": brute.to_string().parse::<serde_json::Number>()? })
        );
    } else if matched {
        println!("MATCH {fast}");
    } else {
        println!("MISMATCH bipartition {fast} bruteforce {brute}");
    }
    if matched {
        Ok(())
    } else {
        Err(Failure::Semantic)
    }
}

fn cmd_seesaw(
    cli: &Cli,
    path: &Path,
    args: &SeesawArgs,
    out: Option<&Path>,
    require_violation: bool,
) -> Outcome {
    let functional = read_functional(path)?;
    let d = functional.scenario().o_a();
    let state = maximally_entangled_state(d)?;
    let (score, model) = seesaw_optimize(&functional, &state, &args.config(cli.seed))?;
    let bound = one_bit_bound(&functional)?.value;
    let violated = bound
        .to_string()
        .parse::<f64>()
        .is_ok_and(|b| score > b + 1e-9);
    if let Some(p) = out {
        write_to(Some(p), |w| {
            serde_json::to_writer_pretty(&mut *w, &model)?;
            writeln!(w)?;
            Ok(())
        })?;
    }
    if cli.json {
        println!(
            "{}",
            json!({ "score": score, "one_bit_bound": bound.to_string().parse::<serde_json::Number>()?, "violation": violated })
        );
    } else {
        println!("score {}", format_sig12(score));
        println!("one-bit bound {bound}");
        println!("violation {}", if violated { "yes" } else { "no" });
    }
    if require_violation && !violated {
        return Err(Failure::Semantic);
    }
    Ok(())
}

fn cmd_sweep(
    cli: &Cli,
    d: usize,
    grid: &[f64],
    trials: usize,
    config: &SeesawConfig,
    out: Option<&Path>,
) -> Outcome {
    let rows = noise_sweep(d, grid, trials, config)?;
    write_to(out, |w| Ok(write_sweep_csv(&rows, w)?))?;
    let bound = one_bit_bound(&make_truncated_xor_game(d)?)?.value;
    let threshold = violation_threshold(&rows, bound.to_string().parse().unwrap_or(f64::INFINITY));
    let summary = if cli.json {
        serde_json::to_string(&threshold)?
    } else {
        let show = |v: Option<f64>| v.map_or_else(|| "none".to_string(), format_sig12);
        format!(
            "rows {} beyond one-bit bound {} ({}); smallest violating fidelity {}; largest non-violating fidelity {}",
            rows.len(),
            threshold.violating_rows,
            bound,
            show(threshold.min_violating_fidelity),
            show(threshold.max_nonviolating_fidelity)
        )
    };
    // the CSV may be on stdout
    if out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    Ok(())
}

fn cmd_report(cli: &Cli, model_path: &Path, functional: Option<&Path>) -> Outcome {
    let model: QuantumModel = serde_json::from_reader(BufReader::new(File::open(model_path)?))?;
    let functional = match functional {
        Some(p) => read_functional(p)?,
        None => make_truncated_xor_game(model.state.local_dim())?,
    };
    let report = structure_report(&model, &functional)?;
    if cli.json {
        println!("{}", serde_json::to_string(&report)?);
    } else {
        println!("score {}", format_sig12(report.score));
        println!("one-bit bound {}", report.one_bit_bound);
        println!(
            "beats one-bit bound {}",
            if report.beats_one_bit { "yes" } else { "no" }
        );
        println!("w {}", format_sig12(report.w));
        println!("fit residual {:.3e}", report.residual_l2);
        match report.mub_deviation {
            Some(m) => println!("mub deviation {}", format_sig12(m)),
            None => println!("mub deviation n/a"),
        }
        println!(
            "neighbor overlap spread {}",
            format_sig12(report.neighbor_overlap_spread)
        );
        println!(
            "neighbor overlap relative spread {}",
            format_sig12(report.neighbor_overlap_relative_spread)
        );
        println!(
            "normalization residual {:.3e}",
            report.normalization_residual
        );
        println!("no-signaling residual {:.3e}", report.no_signaling_residual);
    }
    Ok(())
}
