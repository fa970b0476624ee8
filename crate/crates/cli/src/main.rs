use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use grsk::specfun::SolvableParams;
use grsk::{Error, Result};
use grsk_cli::acceptance::{self, Budget};
use grsk_cli::commands::{self, LaplaceMethod};
use grsk_cli::parse;
use grsk_cli::report::{self, Format, Output};

#[derive(Parser)]
#[command(name = "grsk", version, about = "Geometric RSK and log-gamma polymer experiments")]
struct Cli {
    /// Master seed. The GRSK_SEED environment variable takes precedence.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Worker threads for replica loops (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for the report file `<command>.<format>`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Insertion and the path/minor constructions.
    #[command(subcommand)]
    Rsk(RskCmd),
    /// Randomized consistency checks.
    #[command(subcommand)]
    Verify(VerifyCmd),
    /// Whittaker functions.
    #[command(subcommand)]
    Whittaker(WhittakerCmd),
    /// Laplace transform of the polymer partition function.
    Laplace {
        #[arg(long = "N", default_value_t = 2)]
        big_n: usize,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        s: f64,
        #[arg(long, value_enum, default_value_t = LaplaceMethod::Both)]
        method: LaplaceMethod,
        /// JSON file `{"theta_hat": [...], "theta": [...]}`.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long, default_value_t = 200_000)]
        replicas: usize,
    },
    /// Stationary ratio process after several insertion steps.
    Burke {
        #[arg(long = "N", default_value_t = 4)]
        big_n: usize,
        #[arg(long, default_value_t = 2)]
        j: usize,
        #[arg(long, default_value_t = 5)]
        steps: usize,
        #[arg(long, default_value_t = 100_000)]
        replicas: usize,
    },
    /// Free energy of the homogeneous point-to-point polymer.
    FreeEnergy {
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 200)]
        replicas: usize,
        /// Comma-separated sizes for a descriptive variance-exponent fit.
        #[arg(long)]
        fit: Option<String>,
    },
    /// Coupled zero-temperature limit.
    Tropical {
        #[arg(long, default_value = "0.5,0.2,0.1,0.05")]
        eps: String,
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long = "N", default_value_t = 4)]
        big_n: usize,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, default_value_t = 2000)]
        replicas: usize,
    },
    /// Top eigenvalue of the Laguerre ensemble against exponential LPP.
    Lue {
        #[arg(long = "N", default_value_t = 2)]
        big_n: usize,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 100_000)]
        replicas: usize,
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Run the acceptance criteria.
    Acceptance {
        #[arg(long, value_enum, default_value_t = Budget::Quick)]
        budget: Budget,
        /// Run only these criteria (comma-separated ids).
        #[arg(long)]
        only: Option<String>,
    },
}

#[derive(Subcommand)]
enum RskCmd {
    /// Insert a word into an array, or evolve a weight matrix from the empty array.
    Insert {
        #[arg(long)]
        matrix: PathBuf,
        /// Exact rational arithmetic (the default for tagged files).
        #[arg(long, conflicts_with = "float")]
        rational: bool,
        /// Floating-point arithmetic (the default for weight matrices).
        #[arg(long)]
        float: bool,
    },
    /// `τ_{k,ℓ}(n)` by minors and by paths.
    Tau {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        l: usize,
        #[arg(long)]
        n: Option<usize>,
    },
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// Insertion evolution against the minor-determinant construction.
    Equivalence {
        #[arg(long, default_value_t = 5)]
        n: usize,
        #[arg(long = "N", default_value_t = 4)]
        big_n: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
}

#[derive(Subcommand)]
enum WhittakerCmd {
    /// Evaluate `Ψ_λ(y)`; complex entries such as `0.1+2i` are accepted.
    Eval {
        #[arg(long = "N")]
        big_n: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
        #[arg(long)]
        y: String,
        /// Monte Carlo samples when N exceeds the quadrature range.
        #[arg(long, default_value_t = 200_000)]
        samples: usize,
    },
    /// Both sides of the Bump–Stade identity.
    BumpStade {
        #[arg(long = "N", default_value_t = 2)]
        big_n: usize,
        #[arg(long, default_value_t = 1.0)]
        s: f64,
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        nu: Option<String>,
    },
}

fn seed(cli_seed: u64) -> Result<u64> {
    match std::env::var("GRSK_SEED") {
        Ok(v) => v.trim().parse().map_err(|_| Error::Parse(format!("GRSK_SEED={v:?} is not a u64"))),
        Err(_) => Ok(cli_seed),
    }
}

fn check_len(what: &str, got: usize, want: Option<usize>) -> Result<()> {
    match want {
        Some(w) if w != got => Err(Error::Parse(format!("{what} has {got} entries but --N is {w}"))),
        _ => Ok(()),
    }
}

fn params_or(path: Option<&std::path::Path>, n: usize, big_n: usize) -> Result<SolvableParams> {
    let p = commands::load_params(path, || commands::default_params(n, big_n))?;
    p.validate(n)?;
    if p.size() != big_n {
        return Err(Error::Contract(format!("parameter file has N = {}, expected {big_n}", p.size())));
    }
    Ok(p)
}

fn run(command: &Command, seed: u64) -> Result<Output> {
    Ok(match command {
        Command::Rsk(RskCmd::Insert { matrix, rational, float }) => {
            let exact = if *rational { Some(true) } else if *float { Some(false) } else { None };
            commands::rsk_insert(matrix, exact)?
        }
        Command::Rsk(RskCmd::Tau { matrix, k, l, n }) => commands::rsk_tau(matrix, *k, *l, *n)?,
        Command::Verify(VerifyCmd::Equivalence { n, big_n, trials }) => {
            commands::verify_equivalence(*n, *big_n, *trials, seed)?
        }
        Command::Whittaker(WhittakerCmd::Eval { big_n, lambda, y, samples }) => {
            let lambda = parse::complexes(lambda)?;
            let y = parse::floats(y)?;
            check_len("--lambda", lambda.len(), *big_n)?;
            commands::whittaker_eval_cmd(&lambda, &y, *samples, seed)?
        }
        Command::Whittaker(WhittakerCmd::BumpStade { big_n, s, lambda, nu }) => {
            let (dl, dn) = commands::default_bump_stade(*big_n)?;
            let lambda = lambda.as_deref().map(parse::complexes).transpose()?.unwrap_or(dl);
            let nu = nu.as_deref().map(parse::complexes).transpose()?.unwrap_or(dn);
            check_len("--lambda", lambda.len(), Some(*big_n))?;
            check_len("--nu", nu.len(), Some(*big_n))?;
            commands::bump_stade_cmd(*s, &lambda, &nu)?
        }
        Command::Laplace { big_n, n, s, method, params, replicas } => {
            let p = params_or(params.as_deref(), *n, *big_n)?;
            commands::laplace_cmd(&p, *n, *s, *method, *replicas, seed)?
        }
        Command::Burke { big_n, j, steps, replicas } => {
            let p = commands::burke_params(*big_n, *steps)?;
            commands::burke_cmd(&p, *j, *steps, *replicas, seed)?
        }
        Command::FreeEnergy { gamma, n, replicas, fit } => {
            let ns: Option<Vec<usize>> = fit
                .as_deref()
                .map(|s| {
                    s.split(',')
                        .map(|t| t.trim().parse::<usize>().map_err(|e| Error::Parse(format!("--fit {t:?}: {e}"))))
                        .collect()
                })
                .transpose()?;
            commands::free_energy_cmd(*gamma, *n, *replicas, ns.as_deref(), seed)?
        }
        Command::Tropical { eps, n, big_n, gamma, replicas } => {
            let p = SolvableParams::homogeneous(*gamma, *n, *big_n)?;
            commands::tropical_cmd(&p, *n, &parse::floats(eps)?, *replicas, seed)?
        }
        Command::Lue { big_n, n, replicas, params } => {
            let p = match params {
                Some(_) => params_or(params.as_deref(), *n, *big_n)?,
                None => SolvableParams::homogeneous(1.0, *n, *big_n)?,
            };
            commands::lue_cmd(&p, *n, *replicas, seed)?
        }
        Command::Acceptance { budget, only } => {
            let ids: Vec<usize> = match only {
                Some(s) => s
                    .split(',')
                    .map(|t| match t.trim().parse::<usize>() {
                        Ok(i) if (1..=acceptance::CRITERIA).contains(&i) => Ok(i),
                        _ => Err(Error::Parse(format!("--only: no criterion {t:?}"))),
                    })
                    .collect::<Result<_>>()?,
                None => acceptance::criteria(*budget),
            };
            let results: Vec<_> = ids
                .into_iter()
                .map(|id| {
                    let start = std::time::Instant::now();
                    let r = acceptance::run_one(id, *budget, seed);
                    eprintln!("{} ({:.1}s)", acceptance::summary_line(&r), start.elapsed().as_secs_f64());
                    r
                })
                .collect();
            let r = acceptance::summarize(*budget, seed, results);
            let ok = r.failed.is_empty();
            Output::new(&r)?.with_ok(ok)
        }
    })
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Rsk(RskCmd::Insert { .. }) => "rsk-insert",
        Command::Rsk(RskCmd::Tau { .. }) => "rsk-tau",
        Command::Verify(_) => "verify-equivalence",
        Command::Whittaker(WhittakerCmd::Eval { .. }) => "whittaker-eval",
        Command::Whittaker(WhittakerCmd::BumpStade { .. }) => "whittaker-bump-stade",
        Command::Laplace { .. } => "laplace",
        Command::Burke { .. } => "burke",
        Command::FreeEnergy { .. } => "free-energy",
        Command::Tropical { .. } => "tropical",
        Command::Lue { .. } => "lue",
        Command::Acceptance { .. } => "acceptance",
    }
}

fn emit(cli: &Cli, name: &str, text: &str) -> Result<()> {
    print!("{text}");
    if let Some(dir) = &cli.out {
        let ext = match cli.format {
            Format::Json => "json",
            Format::Csv => "csv",
        };
        std::fs::create_dir_all(dir).map_err(|e| Error::Parse(format!("{}: {e}", dir.display())))?;
        let path = dir.join(format!("{name}.{ext}"));
        std::fs::write(&path, text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn fail(name: &str, e: &Error) -> ExitCode {
    print!("{}", report::error_json(name, e));
    match e {
        Error::Parse(_) => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = command_name(&cli.command);
    let seed = match seed(cli.seed) {
        Ok(s) => s,
        Err(e) => return fail(name, &e),
    };
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            return fail(name, &Error::Contract(format!("thread pool: {e}")));
        }
    }
    let out = match run(&cli.command, seed) {
        Ok(r) => r,
        Err(e) => return fail(name, &e),
    };
    let text = match report::render(name, seed, &out, cli.format) {
        Ok(t) => t,
        Err(e) => return fail(name, &e),
    };
    if let Err(e) = emit(&cli, name, &text) {
        return fail(name, &e);
    }
    if out.ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
