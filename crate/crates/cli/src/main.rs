use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qcqp::generators::{generate, InstanceSpec};
use qcqp::suggest::SuggestMethod;
use qcqp_cli::commands::{brute, parse_family, parse_improve_list};
use qcqp_cli::pipeline::{compute_bound, run_pipeline, BoundMethod, PipelineConfig};
use qcqp_cli::{load_problem, problem_to_json};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "qcqp", version, about = "Suggest-and-improve heuristics and bounds for nonconvex QCQPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuggestArg {
    Random,
    Spectral,
    Sdr,
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundArg {
    Spectral,
    Sdr,
}

#[derive(Subcommand)]
enum Command {
    /// Run suggest, then the improve sequence on every candidate, and report
    /// the best point.
    Solve {
        problem: PathBuf,
        /// JSON pipeline config; the flags below override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        suggest: Option<SuggestArg>,
        /// Comma-separated improve methods: cd, admm, ccp, convex, sign,
        /// balanced-sign, scale, clique.
        #[arg(long)]
        improve: Option<String>,
        #[arg(long)]
        candidates: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; 0 uses every core.
        #[arg(long)]
        parallel: Option<usize>,
        /// Iteration cap for each improve call.
        #[arg(long)]
        max_iter: Option<usize>,
        /// Wall-clock cap per candidate, in seconds.
        #[arg(long)]
        time_limit: Option<f64>,
        /// Cutting-plane round cap for the sdr suggest method.
        #[arg(long)]
        max_rounds: Option<usize>,
        /// Record wall and CPU times in the report.
        #[arg(long)]
        timings: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Lower bound from a relaxation: {bound, valid, trace}.
    Bound {
        problem: PathBuf,
        #[arg(long, value_enum, default_value = "spectral")]
        method: BoundArg,
        /// Comma-separated spectral weights; all ones by default.
        #[arg(long, value_delimiter = ',')]
        lambda: Option<Vec<f64>>,
        #[arg(long)]
        max_rounds: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a random instance as a problem file.
    Generate {
        /// boolean-ls, partitioning, max-cut, max-bisection, max-clique,
        /// 3sat or beamforming.
        #[arg(long)]
        family: String,
        #[arg(long)]
        n: usize,
        /// Rows (boolean-ls), clauses (3sat) or gain users (beamforming);
        /// defaults to n.
        #[arg(long)]
        m: Option<usize>,
        /// Interference users (beamforming).
        #[arg(long, default_value_t = 0)]
        l: usize,
        #[arg(long, default_value_t = 0.5)]
        density: f64,
        #[arg(long, default_value_t = 20.0)]
        tau: f64,
        #[arg(long, default_value_t = 2.0)]
        eta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustive minimization: {x, objective, violation, points}.
    Brute {
        problem: PathBuf,
        /// Grid search `lo,hi,steps` instead of Boolean enumeration.
        #[arg(long, allow_hyphen_values = true, value_name = "LO,HI,STEPS")]
        grid: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Solver(String),
}

fn emit(text: String, out: Option<PathBuf>) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(&path, text + "\n").map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            use std::io::Write;
            // A closed pipe (e.g. `| head`) is not an error worth reporting.
            match writeln!(std::io::stdout().lock(), "{text}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                    Err(Failure::Usage(format!("cannot write to stdout: {e}")))
                }
                _ => Ok(()),
            }
        }
    }
}

fn parse_grid(s: &str) -> Result<(f64, f64, usize), String> {
    let usage = || format!("--grid expects lo,hi,steps with integer steps >= 1, got {s:?}");
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [lo, hi, steps] = parts[..] else { return Err(usage()) };
    let lo: f64 = lo.parse().map_err(|_| usage())?;
    let hi: f64 = hi.parse().map_err(|_| usage())?;
    let steps: usize = steps.parse().map_err(|_| usage())?;
    if steps == 0 || !lo.is_finite() || !hi.is_finite() {
        return Err(usage());
    }
    Ok((lo, hi, steps))
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("reports serialize")
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Solve {
            problem,
            config,
            suggest,
            improve,
            candidates,
            seed,
            parallel,
            max_iter,
            time_limit,
            max_rounds,
            timings,
            out,
        } => {
            let p = load_problem(&problem).map_err(|e| Failure::Usage(e.to_string()))?;
            let mut cfg = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
                    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("config: {e}")))?
                }
                None => PipelineConfig::default(),
            };
            if let Some(s) = suggest {
                cfg.suggest.method = match s {
                    SuggestArg::Random => SuggestMethod::Random,
                    SuggestArg::Spectral => SuggestMethod::Spectral,
                    SuggestArg::Sdr => SuggestMethod::Sdr,
                };
            }
            if let Some(list) = improve {
                cfg.improve = parse_improve_list(&list).map_err(Failure::Usage)?;
            }
            if let Some(k) = candidates {
                cfg.candidates = k;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(w) = parallel {
                cfg.parallelism = w;
            }
            if max_iter.is_some() {
                cfg.budgets.max_iter = max_iter;
            }
            if time_limit.is_some() {
                cfg.budgets.time_limit_s = time_limit;
            }
            if let Some(r) = max_rounds {
                cfg.suggest.cutting_plane.max_rounds = r;
            }
            cfg.timings |= timings;
            if cfg.candidates == 0 {
                return Err(Failure::Usage("--candidates must be at least 1".into()));
            }
            let report = run_pipeline(&p, &cfg).map_err(|e| Failure::Solver(e.to_string()))?;
            emit(to_json(&report), out)
        }
        Command::Bound {
            problem,
            method,
            lambda,
            max_rounds,
            out,
        } => {
            let p = load_problem(&problem).map_err(|e| Failure::Usage(e.to_string()))?;
            let mut cfg = PipelineConfig::default().suggest;
            if let Some(l) = &lambda {
                if l.len() != p.num_constraints() {
                    return Err(Failure::Usage(format!(
                        "--lambda has {} weights but the problem has {} constraints",
                        l.len(),
                        p.num_constraints()
                    )));
                }
            }
            cfg.lambda = lambda;
            if let Some(r) = max_rounds {
                cfg.cutting_plane.max_rounds = r;
            }
            let method = match method {
                BoundArg::Spectral => BoundMethod::Spectral,
                BoundArg::Sdr => BoundMethod::Sdr,
            };
            let report = compute_bound(&p, method, &cfg).map_err(|e| Failure::Solver(e.to_string()))?;
            emit(to_json(&report), out)
        }
        Command::Generate {
            family,
            n,
            m,
            l,
            density,
            tau,
            eta,
            seed,
            out,
        } => {
            let family = parse_family(&family).map_err(Failure::Usage)?;
            let spec = InstanceSpec {
                family,
                n,
                m: m.unwrap_or(n),
                l,
                density,
                tau,
                eta,
                seed,
            };
            let p = generate(&spec).map_err(|e| Failure::Usage(e.to_string()))?;
            emit(problem_to_json(&p), out)
        }
        Command::Brute { problem, grid, out } => {
            let p = load_problem(&problem).map_err(|e| Failure::Usage(e.to_string()))?;
            let grid = grid.as_deref().map(parse_grid).transpose().map_err(Failure::Usage)?;
            let report = brute(&p, grid).map_err(Failure::Solver)?;
            emit(to_json(&report), out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
