//! `csdp`: run sweeps, the acceptance report, model checks and single releases.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use csdp::cmc::{load_model, spectral_check, stationary_default, AoiVector};
use csdp::experiment::{
    run, run_acceptance, AcceptanceConfig, ExperimentConfig, OutputFormat, RunOptions, BUNDLED,
    DEFAULT_ROOT_SEED, EXIT_CONFIG, EXIT_OK, EXIT_VIOLATION,
};
use csdp::mechanism::{append_results_log, release, LogRecord, SequenceDatabase};
use csdp::query::{BuiltinQuery, QuerySpec};
use csdp::CsdpError;

#[derive(Parser)]
#[command(name = "csdp", version, about = "Correlated-sequence differential privacy experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep from a config file or a bundled config name.
    Run {
        #[arg(long, value_name = "PATH|NAME")]
        config: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        cap: Option<usize>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Evaluate every acceptance criterion and print the report.
    Acceptance {
        #[arg(long, default_value_t = DEFAULT_ROOT_SEED)]
        seed: u64,
        /// Also write acceptance.txt and acceptance.json here.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Check a model file and print its stationary and spectral summary.
    ValidateModel {
        path: PathBuf,
    },
    /// Release one aged, noised query answer from a sequence database.
    Release {
        /// CSV with one column per sequence and one row per time step.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        states: usize,
        /// 1-based time index.
        #[arg(long)]
        t: usize,
        /// Per-sequence ages, comma separated.
        #[arg(long, value_delimiter = ',')]
        age: Vec<usize>,
        #[arg(long, default_value = "mean")]
        query: String,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = DEFAULT_ROOT_SEED)]
        seed: u64,
        /// Append the release to this results log.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// List the bundled sweep configs.
    Configs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run {
            config,
            seed,
            out,
            threads,
            cap,
            format,
        } => cmd_run(&config, RunOptions {
            seed,
            out,
            threads,
            cap,
            format: format.map(Into::into),
        }),
        Command::Acceptance { seed, out, threads } => cmd_acceptance(seed, out.as_deref(), threads),
        Command::ValidateModel { path } => cmd_validate(&path),
        Command::Release {
            data,
            states,
            t,
            age,
            query,
            eps,
            seed,
            log,
        } => cmd_release(&data, states, t, age, &query, eps, seed, log.as_deref()),
        Command::Configs => {
            for (name, text) in BUNDLED {
                let about = text.lines().next().unwrap_or("").trim_start_matches("# ");
                println!("{name:6} {about}");
            }
            EXIT_OK
        }
    };
    ExitCode::from(code as u8)
}

fn fail(e: &CsdpError) -> i32 {
    eprintln!("error: {e}");
    EXIT_CONFIG
}

fn cmd_run(config: &str, options: RunOptions) -> i32 {
    let cfg = match ExperimentConfig::resolve(config) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    match run(&cfg, &options) {
        Ok(out) => {
            println!("{}: {} rows -> {}", out.summary.name, out.summary.rows, out.table.display());
            for n in &out.summary.notes {
                println!("note: {n}");
            }
            for v in &out.summary.violations {
                println!("violation: {v}");
            }
            out.exit_code()
        }
        Err(e) => fail(&e),
    }
}

fn cmd_acceptance(seed: u64, out: Option<&Path>, threads: Option<usize>) -> i32 {
    let config = AcceptanceConfig {
        root_seed: seed,
        ..Default::default()
    };
    let report = match threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run_acceptance(&config)),
            Err(e) => {
                eprintln!("error: field `threads`: {e}");
                return EXIT_CONFIG;
            }
        },
        None => run_acceptance(&config),
    };
    print!("{}", report.body());
    if let Some(dir) = out {
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        let written = fs::create_dir_all(dir)
            .and_then(|_| fs::write(dir.join("acceptance.txt"), report.body()))
            .and_then(|_| fs::write(dir.join("acceptance.json"), json + "\n"));
        if let Err(e) = written {
            eprintln!("error: {}: {e}", dir.display());
            return EXIT_CONFIG;
        }
    }
    if report.all_pass() {
        EXIT_OK
    } else {
        EXIT_VIOLATION
    }
}

fn cmd_validate(path: &Path) -> i32 {
    let model = match load_model::<f64>(path) {
        Ok(m) => m,
        Err(e) => return fail(&e),
    };
    println!(
        "{}: valid, {} sequences, {} states",
        path.display(),
        model.num_sequences(),
        model.num_states()
    );
    match stationary_default(&model) {
        Ok(pi) => {
            for (j, block) in pi.blocks().iter().enumerate() {
                let v: Vec<String> = block.iter().map(|p| format!("{p:.6}")).collect();
                println!("stationary marginal {}: {}", j + 1, v.join(" "));
            }
        }
        Err(e) => return fail(&e),
    }
    match spectral_check(&model) {
        Ok(r) => {
            println!(
                "dominant modulus {:.6}, second modulus {:.6}",
                r.dominant_modulus, r.second_modulus
            );
            if r.bound_violated || !r.dominant_is_one || r.no_spectral_gap {
                println!("spectral check failed");
                return EXIT_VIOLATION;
            }
            EXIT_OK
        }
        Err(e) => fail(&e),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_release(
    data: &Path,
    states: usize,
    t: usize,
    age: Vec<usize>,
    query: &str,
    eps: f64,
    seed: u64,
    log: Option<&Path>,
) -> i32 {
    let result = (|| -> csdp::Result<()> {
        let db = SequenceDatabase::load_csv(data, states)?;
        let kind: BuiltinQuery = query
            .parse()
            .map_err(|_| CsdpError::Config(format!("field `query`: unknown query `{query}`")))?;
        let space = csdp::cmc::StateSpace::new(db.num_sequences(), states)?;
        let q = QuerySpec::<f64>::builtin(kind, space);
        let age = if age.is_empty() {
            AoiVector::zeros(db.num_sequences())
        } else {
            AoiVector::new(age)
        };
        let out = release(&db, t, &age, &q, eps, seed)?;
        let values: Vec<String> = out.value.iter().map(|v| v.to_string()).collect();
        println!("{}", values.join(","));
        if let Some(path) = log {
            append_results_log(path, &[LogRecord::new(t, &q, eps, &out, &age)])?;
        }
        Ok(())
    })();
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => fail(&e),
    }
}
