use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kinflux::diagnostics::{sweep_verdict, torus_verdict, whole_space_verdict};
use kinflux::{
    compute_equilibrium, shortest_paths_with, spectral_gap, CertificateInput, CertificateReport, DomainMode,
    NetworkError, PathSelection, ReactionNetwork, Simulation, SolverConfig, SolverError, Status, Verdict,
};
use serde_json::{json, Value};
use tempfile::NamedTempFile;

const EXIT_IO: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_VERDICT: u8 = 3;

const DEFAULT_EPS_LIST: [f64; 4] = [1.0, 0.5, 0.25, 0.125];

#[derive(Parser)]
#[command(
    name = "kinflux",
    version,
    about = "Decay certificates and simulations for linear reaction-transport kinetics"
)]
struct Cli {
    /// Worker threads for the solver (default: all cores).
    #[arg(long, global = true, env = "KINFLUX_THREADS")]
    threads: Option<usize>,
    /// Seed for randomized procedures. The pipeline itself is deterministic.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a network and print its full certificate report as JSON.
    Analyze(AnalyzeArgs),
    /// Compare the certified coercivity constant with the discrete spectral gap.
    Coercivity(CoercivityArgs),
    /// Run a torus or whole-space simulation and check it against the certificate.
    Simulate(SimulateArgs),
    /// Run a diffusive-scaling sweep against the limiting heat equation.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum PathMode {
    Lexicographic,
    MaxBottleneck,
}

impl From<PathMode> for PathSelection {
    fn from(m: PathMode) -> Self {
        match m {
            PathMode::Lexicographic => PathSelection::Lexicographic,
            PathMode::MaxBottleneck => PathSelection::MaxBottleneck,
        }
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    network: PathBuf,
    /// Write the report here instead of standard output.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Torus side length L.
    #[arg(long, default_value_t = 2.0 * std::f64::consts::PI)]
    box_size: f64,
    /// Total mass M used by the whole-space constants.
    #[arg(long, default_value_t = 1.0)]
    mass: f64,
    #[arg(long)]
    nash_constant: Option<f64>,
    #[arg(long, value_enum, default_value_t = PathMode::Lexicographic)]
    paths: PathMode,
}

#[derive(Args)]
struct CoercivityArgs {
    network: PathBuf,
    /// Gauss-Hermite nodes per velocity direction.
    #[arg(long, default_value_t = 16)]
    quad: usize,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long, value_enum, default_value_t = PathMode::Lexicographic)]
    paths: PathMode,
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    nash_constant: Option<f64>,
    #[arg(long)]
    quad: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
}

impl Overrides {
    fn apply(&self, config: &mut SolverConfig) {
        if let Some(c) = self.nash_constant {
            config.nash_constant = Some(c);
        }
        if let Some(q) = self.quad {
            config.quad_order = q;
        }
        if let Some(dt) = self.dt {
            config.dt = dt;
        }
        if let Some(t) = self.t_end {
            config.t_end = t;
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    config: PathBuf,
    /// Directory for diagnostics.csv, verdict.json and certificate.json.
    #[arg(short, long, default_value = ".")]
    out_dir: PathBuf,
    /// Allowed distance of the fitted whole-space exponent from -d/2.
    #[arg(long, default_value_t = 0.15)]
    exponent_tolerance: f64,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct SweepArgs {
    config: PathBuf,
    /// Comma-separated epsilons; defaults to the config's list, then 1,0.5,0.25,0.125.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    eps_list: Option<Vec<f64>>,
    /// Directory for sweep.csv and verdict.json.
    #[arg(short, long, default_value = ".")]
    out_dir: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl From<NetworkError> for Failure {
    fn from(e: NetworkError) -> Self {
        let code = match e {
            NetworkError::Io(_) | NetworkError::Parse(_) => EXIT_IO,
            _ => EXIT_INVALID,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<SolverError> for Failure {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Io(_) | SolverError::Parse(_) => Failure::new(EXIT_IO, e.to_string()),
            SolverError::Network(inner) => inner.into(),
            SolverError::NonFinite { .. } => Failure::new(EXIT_VERDICT, e.to_string()),
            _ => Failure::new(EXIT_INVALID, e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(EXIT_INVALID);
        }
    }
    let result = match &cli.command {
        Command::Analyze(args) => analyze(args),
        Command::Coercivity(args) => coercivity(args),
        Command::Simulate(args) => simulate(args),
        Command::Sweep(args) => sweep(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

/// Loads a network and rejects inadmissible ones, listing every violation.
fn load_network(path: &Path) -> Result<ReactionNetwork, Failure> {
    let net = ReactionNetwork::load(path).map_err(|e| {
        let f = Failure::from(e);
        Failure::new(f.code, format!("{}: {}", path.display(), f.message))
    })?;
    let verdict = net.validate();
    if !verdict.is_ok() {
        for v in &verdict.violations {
            eprintln!("violation: {v}");
        }
        return Err(Failure::new(EXIT_INVALID, format!("{}: {verdict}", path.display())));
    }
    Ok(net)
}

fn analyze(args: &AnalyzeArgs) -> Result<(), Failure> {
    let net = load_network(&args.network)?;
    let eq = compute_equilibrium(&net)?;
    let paths = shortest_paths_with(&net, &eq, args.paths.into())?;
    let input = CertificateInput {
        dim: args.dim,
        box_size: args.box_size,
        total_mass: args.mass,
        nash_constant: args.nash_constant,
    };
    let report =
        CertificateReport::new(&net, &eq, &paths, &input).map_err(|e| Failure::new(EXIT_INVALID, e.to_string()))?;
    let one_based = |nodes: &[usize]| nodes.iter().map(|k| k + 1).collect::<Vec<_>>();
    let path_rows: Vec<Value> = paths
        .iter()
        .map(|(to, from, p)| json!({ "from": from + 1, "to": to + 1, "length": p.len(), "mu": p.mu, "nodes": one_based(&p.nodes) }))
        .collect();
    let cycles: Vec<Value> = (0..net.n_species())
        .map(|i| {
            let c = paths.cycle(i);
            json!({ "species": i + 1, "length": c.len(), "mu": c.mu, "nodes": one_based(&c.nodes) })
        })
        .collect();
    let doc = json!({
        "network": net.to_file_repr(),
        "equilibrium": { "eta": eq.eta, "K": eq.outflow },
        "certificate": report.annotated(),
        "paths": path_rows,
        "cycles": cycles,
    });
    let text = serde_json::to_string_pretty(&doc).expect("report serializes") + "\n";
    match &args.output {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::new(EXIT_IO, e.to_string())),
    }
}

/// Shortest representation after rounding to 12 significant digits.
fn short(x: f64) -> String {
    let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    format!("{rounded:?}")
}

fn coercivity(args: &CoercivityArgs) -> Result<(), Failure> {
    let net = load_network(&args.network)?;
    let eq = compute_equilibrium(&net)?;
    let paths = shortest_paths_with(&net, &eq, args.paths.into())?;
    let input = CertificateInput { dim: args.dim, ..CertificateInput::default() };
    let report =
        CertificateReport::new(&net, &eq, &paths, &input).map_err(|e| Failure::new(EXIT_INVALID, e.to_string()))?;
    let gap = spectral_gap(&net, &eq, args.dim, args.quad).map_err(|e| Failure::new(EXIT_INVALID, e.to_string()))?;
    let pass = gap >= report.lambda_m - 1e-8;
    println!(
        "gamma1={} lambda_m={} gamma2={} gap={} {}",
        short(report.gamma1),
        short(report.lambda_m),
        short(report.gamma2),
        short(gap),
        if pass { "PASS" } else { "FAIL" }
    );
    if pass {
        Ok(())
    } else {
        Err(Failure::new(EXIT_VERDICT, format!("spectral gap {gap} is below lambda_m = {}", report.lambda_m)))
    }
}

fn load_config(path: &Path, overrides: &Overrides) -> Result<(SolverConfig, ReactionNetwork), Failure> {
    let mut config = SolverConfig::load(path)?;
    overrides.apply(&mut config);
    let net = load_network(&config.network)?;
    Ok((config, net))
}

fn simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let (config, net) = load_config(&args.config, &args.overrides)?;
    let domain = config.domain;
    let sim = Simulation::new(&net, config)?;
    let out = sim.run()?;
    if let Some(w) = out.series.negativity_warning() {
        eprintln!("warning: {w}");
    }
    let verdict = match domain {
        DomainMode::Torus => torus_verdict(&out.series, &out.report),
        DomainMode::WholeSpace => whole_space_verdict(&out.series, out.report.dimension, args.exponent_tolerance),
    };
    let mut csv = Vec::new();
    out.series.write_csv(&mut csv).map_err(|e| Failure::new(EXIT_IO, e.to_string()))?;
    fs::create_dir_all(&args.out_dir).map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", args.out_dir.display())))?;
    write_atomic(&args.out_dir.join("diagnostics.csv"), &csv)?;
    write_json(&args.out_dir.join("certificate.json"), &out.report.annotated())?;
    finish(&args.out_dir, &verdict)
}

fn sweep(args: &SweepArgs) -> Result<(), Failure> {
    let (config, net) = load_config(&args.config, &args.overrides)?;
    let eps_list = match (&args.eps_list, &config.eps_list) {
        (Some(list), _) => list.clone(),
        (None, Some(list)) => list.clone(),
        (None, None) => DEFAULT_EPS_LIST.to_vec(),
    };
    if eps_list.is_empty() {
        return Err(Failure::new(EXIT_INVALID, "the epsilon list is empty"));
    }
    let sim = Simulation::new(&net, config)?;
    let table = sim.run_epsilon_sweep(&eps_list)?;
    let verdict = sweep_verdict(&table);
    let mut csv = Vec::new();
    table.write_csv(&mut csv).map_err(|e| Failure::new(EXIT_IO, e.to_string()))?;
    fs::create_dir_all(&args.out_dir).map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", args.out_dir.display())))?;
    write_atomic(&args.out_dir.join("sweep.csv"), &csv)?;
    finish(&args.out_dir, &verdict)
}

/// Writes the verdict, echoes one line per check and maps failure to exit 3.
fn finish(out_dir: &Path, verdict: &Verdict) -> Result<(), Failure> {
    write_json(&out_dir.join("verdict.json"), &serde_json::to_value(verdict).expect("verdict serializes"))?;
    let show = |v: Option<f64>| v.map_or("-".to_string(), short);
    for c in &verdict.checks {
        let status = match c.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Inconclusive => "INCONCLUSIVE",
        };
        let reason = c.reason.as_deref().map(|r| format!(" ({r})")).unwrap_or_default();
        println!("{status} {} observed={} bound={}{reason}", c.name, show(c.observed), show(c.bound));
    }
    if verdict.passed() {
        Ok(())
    } else {
        Err(Failure::new(EXIT_VERDICT, "verdict failed"))
    }
}

fn write_json(path: &Path, value: &Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("json serializes") + "\n";
    write_atomic(path, text.as_bytes())
}

/// Temp file in the target directory, then rename over the destination.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let io_err = |e: io::Error| Failure::new(EXIT_IO, format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(bytes).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}
