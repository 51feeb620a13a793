use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use grsk_toda::critical::{self, critical_point};
use grsk_toda::flows::{self, Field, FlowConfig, LaxPath};
use grsk_toda::grsk::TrianglePath;
use grsk_toda::stochastic::{self, SdeConfig, MIN_KS_REPLICAS};
use grsk_toda::verify::{self, Suite, VerifyOptions};
use grsk_toda::{io as emit, tau, triangle, Error, Execution, LaxMatrix, Triangle};
use serde_json::json;

const EXIT_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "grsk-toda", version, about = "Geometric RSK and Toda lattice experiments and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    params: Params,
}

#[derive(Args, Clone, Default)]
struct Params {
    /// Dimension; inferred from --lambda when omitted.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Spectrum / drift vector, comma separated.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    lambda: Option<Vec<f64>>,
    /// Final time (default 2).
    #[arg(long, global = true)]
    t_end: Option<f64>,
    /// Time step (default 0.01).
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Noise variance.
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// Random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Replicas per sample (default 10000).
    #[arg(long, global = true)]
    replicas: Option<usize>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Reduced instance and replica counts.
    #[arg(long, global = true)]
    quick: bool,
    /// File of key=value lines supplying defaults for the flags above.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run every loop on one thread.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run a property suite and print a JSON report.
    Verify {
        /// factorization, grsk, flows, critical, tau, stochastic or all.
        suite: String,
    },
    /// Emit a trajectory as CSV.
    Flow(FlowArgs),
    /// Run a seeded two-sample law comparison.
    Simulate(SimulateArgs),
    /// Minimizer of the potential over a bottom row, as JSON.
    Critical {
        /// Bottom row, comma separated (default zeros).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Option<Vec<f64>>,
        /// Also emit the gradient-flow trajectory as CSV to this file.
        #[arg(long)]
        gradient_flow: Option<PathBuf>,
    },
    /// Tau functions on a time grid as CSV.
    Tau {
        /// Emit the bottom row x_k = log τ_k − log τ_{k−1} instead.
        #[arg(long)]
        solution: bool,
    },
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Start {
    /// b(0) = I: the triangle is defined for t > 0 only.
    Identity,
    /// The zero triangle.
    Zero,
    /// The minimizer over the bottom row --x.
    Critical,
    /// A Lax matrix given by --p and --q; Toda trajectory only.
    Lax,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Output {
    Triangle,
    Bottom,
    Lax,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Method {
    /// Minors of the linear flow.
    Exact,
    /// RK4 on the triangle ODE.
    Rk4,
    /// RK4 on the local triangle ODE.
    Local,
}

#[derive(Args)]
struct FlowArgs {
    #[arg(long, value_enum, default_value = "zero")]
    start: Start,
    #[arg(long, value_enum, default_value = "bottom")]
    output: Output,
    #[arg(long, value_enum, default_value = "exact")]
    method: Method,
    /// Bottom row for --start critical.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x: Option<Vec<f64>>,
    /// Lax diagonal for --start lax.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    p: Option<Vec<f64>>,
    /// Lax subdiagonal (positive) for --start lax.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    q: Option<Vec<f64>>,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Test {
    /// Path transform against the diffusion with the Whittaker drift.
    Generator,
    /// Same with the drift doubled; should be rejected.
    Control,
    /// Geometric RSK dynamics against the local dynamics.
    Marginals,
    /// Path transform against the geometric RSK dynamics.
    PiSde,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value = "generator")]
    test: Test,
    /// Start time of the stepped side.
    #[arg(long, default_value_t = 0.1)]
    t0: f64,
    /// Bottom row for --test marginals (default zeros).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x: Option<Vec<f64>>,
    /// Also write both samples as CSV to this file.
    #[arg(long)]
    samples: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Run(String),
    Closed,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Invalid(_) | Error::Range(_) => Failure::Usage(e.to_string()),
            Error::OutputClosed => Failure::Closed,
            other => Failure::Run(other.to_string()),
        }
    }
}

type Outcome = std::result::Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) | Err(Failure::Closed) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAILED),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_FAILED)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    let params = with_config(cli.params)?;
    match cli.command {
        Command::Verify { suite } => cmd_verify(&suite, &params),
        Command::Flow(args) => cmd_flow(&args, &params),
        Command::Simulate(args) => cmd_simulate(&args, &params),
        Command::Critical { x, gradient_flow } => cmd_critical(x, gradient_flow.as_deref(), &params),
        Command::Tau { solution } => cmd_tau(solution, &params),
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Fills flags left unset on the command line from `--config`.
fn with_config(mut p: Params) -> std::result::Result<Params, Failure> {
    let Some(path) = p.config.clone() else { return Ok(p) };
    let text = std::fs::read_to_string(&path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let mut map = HashMap::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) =
            line.split_once('=').ok_or_else(|| usage(format!("{}:{}: expected key=value", path.display(), k + 1)))?;
        map.insert(key.trim().replace('_', "-"), value.trim().to_string());
    }
    fn parse<T: std::str::FromStr>(key: &str, v: &str) -> std::result::Result<T, Failure> {
        v.parse().map_err(|_| usage(format!("config value for {key} is not valid: {v}")))
    }
    for (key, v) in &map {
        match key.as_str() {
            "n" => p.n = p.n.or(Some(parse(key, v)?)),
            "lambda" => {
                if p.lambda.is_none() {
                    p.lambda = Some(v.split(',').map(|s| parse(key, s.trim())).collect::<std::result::Result<_, _>>()?);
                }
            }
            "t-end" => p.t_end = p.t_end.or(Some(parse(key, v)?)),
            "dt" => p.dt = p.dt.or(Some(parse(key, v)?)),
            "eps" => p.eps = p.eps.or(Some(parse(key, v)?)),
            "seed" => p.seed = p.seed.or(Some(parse(key, v)?)),
            "replicas" => p.replicas = p.replicas.or(Some(parse(key, v)?)),
            "out" => p.out = p.out.take().or(Some(PathBuf::from(v))),
            "quick" => p.quick |= parse::<bool>(key, v)?,
            "sequential" => p.sequential |= parse::<bool>(key, v)?,
            other => return Err(usage(format!("unknown config key '{other}'"))),
        }
    }
    Ok(p)
}

impl Params {
    fn exec(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }

    fn lambda(&self, default_n: usize) -> std::result::Result<Vec<f64>, Failure> {
        match (&self.lambda, self.n) {
            (Some(l), Some(n)) if l.len() != n => {
                Err(usage(format!("--lambda has {} entries but --n is {n}", l.len())))
            }
            (Some(l), _) if l.is_empty() => Err(usage("--lambda is empty")),
            (Some(l), _) => Ok(l.clone()),
            (None, Some(0)) => Err(usage("--n must be positive")),
            (None, n) => Ok(vec![0.0; n.unwrap_or(default_n)]),
        }
    }

    fn sink(&self) -> std::result::Result<Box<dyn Write>, Failure> {
        open_sink(self.out.as_deref())
    }
}

fn open_sink(path: Option<&Path>) -> std::result::Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::Run(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn cmd_verify(suite: &str, params: &Params) -> Outcome {
    let suite: Suite = suite.parse().map_err(|e: Error| usage(e.to_string()))?;
    let defaults = VerifyOptions::default();
    let opts = VerifyOptions { quick: params.quick, seed: params.seed.unwrap_or(defaults.seed), exec: params.exec() };
    let report = verify::run_suite(suite, &opts);
    for c in report.checks.iter().filter(|c| !c.pass) {
        eprintln!("FAIL {}: residual {:e}, tolerance {:e}", c.check, c.max_residual, c.tolerance);
    }
    emit::write_json(params.sink()?, &report)?;
    Ok(report.pass)
}

fn time_grid(params: &Params, from_zero: bool) -> std::result::Result<Vec<f64>, Failure> {
    let t_end = params.t_end.unwrap_or(2.0);
    let dt = params.dt.unwrap_or(1e-2);
    if !(t_end > 0.0 && dt > 0.0 && dt <= t_end) {
        return Err(usage(format!("need 0 < dt ≤ t-end, got dt = {dt}, t-end = {t_end}")));
    }
    let steps = (t_end / dt).round().max(1.0) as usize;
    let first = if from_zero { 0 } else { 1 };
    Ok((first..=steps).map(|k| t_end * k as f64 / steps as f64).collect())
}

fn cmd_flow(args: &FlowArgs, params: &Params) -> Outcome {
    let out = params.sink()?;
    if args.start == Start::Lax {
        let (Some(p), Some(q)) = (&args.p, &args.q) else {
            return Err(usage("--start lax needs --p and --q"));
        };
        if args.output != Output::Lax {
            return Err(usage("--start lax only produces --output lax"));
        }
        let m0 = LaxMatrix::new(p.clone(), q.clone())?;
        let cfg = FlowConfig::new(params.dt.unwrap_or(1e-2), params.t_end.unwrap_or(2.0))?;
        let path = match args.method {
            Method::Exact => flows::toda_trajectory_factorized(&m0, &cfg)?,
            _ => flows::toda_trajectory_rk4(&m0, &cfg)?,
        };
        emit::write_lax_path(out, &path)?;
        return Ok(true);
    }
    let lambda = params.lambda(2)?;
    let n = lambda.len();
    let path = match args.start {
        Start::Identity => {
            if args.method != Method::Exact {
                return Err(usage("--start identity is singular at t = 0; use --method exact"));
            }
            let times = time_grid(params, false)?;
            let states = times
                .iter()
                .map(|&t| triangle::f_map(&tau::b_explicit_matrix(&lambda, t)?))
                .collect::<grsk_toda::Result<Vec<_>>>()?;
            TrianglePath { times, states }
        }
        Start::Zero | Start::Critical => {
            let x0 = if args.start == Start::Zero {
                Triangle::zeros(n)
            } else {
                let x = args.x.clone().unwrap_or_else(|| vec![0.0; n]);
                if x.len() != n {
                    return Err(usage(format!("--x has {} entries, expected {n}", x.len())));
                }
                critical_point(&x, &lambda)?
            };
            match args.method {
                Method::Exact => {
                    let times = time_grid(params, true)?;
                    let states = times
                        .iter()
                        .map(|&t| flows::s_flow(&x0, &lambda, t))
                        .collect::<grsk_toda::Result<Vec<_>>>()?;
                    TrianglePath { times, states }
                }
                Method::Rk4 | Method::Local => {
                    let field = if args.method == Method::Rk4 { Field::Rsk } else { Field::Local };
                    let cfg = FlowConfig::new(params.dt.unwrap_or(1e-3), params.t_end.unwrap_or(2.0))?;
                    flows::integrate_triangle(&x0, &lambda, &cfg, field)?
                }
            }
        }
        Start::Lax => unreachable!(),
    };
    match args.output {
        Output::Triangle => emit::write_triangle_path(out, &path)?,
        Output::Bottom => emit::write_bottom_rows(out, &path)?,
        Output::Lax => {
            let states = path.states.iter().map(|s| triangle::g_lambda(s, &lambda)).collect::<grsk_toda::Result<_>>()?;
            emit::write_lax_path(out, &LaxPath { times: path.times, states })?
        }
    }
    Ok(true)
}

fn cmd_simulate(args: &SimulateArgs, params: &Params) -> Outcome {
    let lambda = params.lambda(2)?;
    let cfg = SdeConfig {
        eps: params.eps.unwrap_or(1.0),
        lambda,
        dt: params.dt.unwrap_or(1e-3),
        t_end: params.t_end.unwrap_or(1.0),
        replicas: params.replicas.unwrap_or(10_000),
        seed: params.seed.unwrap_or(VerifyOptions::default().seed),
    };
    cfg.validate()?;
    let n = cfg.n();
    if n > 3 || (matches!(args.test, Test::Generator | Test::Control) && n != 2) {
        return Err(usage("the generator comparison runs at n = 2 and the others at n ≤ 3"));
    }
    let exec = params.exec();
    let x = args.x.clone().unwrap_or_else(|| vec![0.0; n]);
    let pair = match args.test {
        Test::Generator => stochastic::generator_samples(&cfg, args.t0, 1.0, exec)?,
        Test::Control => stochastic::generator_samples(&cfg, args.t0, 2.0, exec)?,
        Test::Marginals => stochastic::marginal_samples(&cfg, &x, exec)?,
        Test::PiSde => stochastic::pi_vs_sde_samples(&cfg, args.t0, exec)?,
    };
    if cfg.replicas < MIN_KS_REPLICAS {
        eprintln!(
            "warning: {} replicas are too few for a KS comparison (need {MIN_KS_REPLICAS}); writing samples only",
            cfg.replicas
        );
        let target = args.samples.as_deref().or(params.out.as_deref());
        emit::write_sample_pair(open_sink(target)?, &pair)?;
        return Ok(true);
    }
    if let Some(path) = &args.samples {
        emit::write_sample_pair(open_sink(Some(path))?, &pair)?;
    }
    let (name, same, threshold) = match args.test {
        Test::Generator => ("generator", true, 0.01),
        Test::Control => ("generator_modified_drift", false, 1e-4),
        Test::Marginals => ("rsk_vs_local_marginals", true, 0.01),
        Test::PiSde => ("pi_vs_rsk_sde", true, 0.01),
    };
    let report = stochastic::StatReport::from_samples(name, &cfg, &pair.first, &pair.second, same, threshold)?;
    emit::write_json(params.sink()?, &report)?;
    Ok(report.pass)
}

fn cmd_critical(x: Option<Vec<f64>>, flow_out: Option<&Path>, params: &Params) -> Outcome {
    let lambda = params.lambda(x.as_ref().map_or(2, Vec::len))?;
    let x = x.unwrap_or_else(|| vec![0.0; lambda.len()]);
    if x.len() != lambda.len() {
        return Err(usage(format!("--x has {} entries, λ has {}", x.len(), lambda.len())));
    }
    let xs = critical_point(&x, &lambda)?;
    let residual = critical::critical_residual(&xs, &lambda)?;
    let report = json!({
        "x": x,
        "lambda": lambda,
        "triangle": xs.rows(),
        "residual": residual.max_abs(),
        "u": critical::u_lambda(&x, &lambda)?,
        "grad_u": critical::grad_u(&x, &lambda)?,
        "grad_u_finite_difference": critical::grad_u_finite_difference(&x, &lambda, 1e-5)?,
        "lax_matrix": triangle::g_lambda(&xs, &lambda)?,
    });
    if let Some(path) = flow_out {
        let cfg = FlowConfig::new(params.dt.unwrap_or(1e-2), params.t_end.unwrap_or(1.0))?;
        let (times, states) = critical::gradient_flow(&x, &lambda, &cfg)?;
        emit::write_solution(open_sink(Some(path))?, &times, &states)?;
    }
    emit::write_json(params.sink()?, &report)?;
    Ok(true)
}

fn cmd_tau(solution: bool, params: &Params) -> Outcome {
    let lambda = params.lambda(3)?;
    let times = time_grid(params, false)?;
    let table = tau::tau_table(&lambda, &times)?;
    if solution {
        emit::write_solution(params.sink()?, &table.times, &table.solution)?;
    } else {
        emit::write_tau_table(params.sink()?, &table)?;
    }
    Ok(true)
}
