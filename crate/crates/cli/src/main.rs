//! Command-line front end: loads channel specs, runs the solvers, bounds,
//! region enumeration, and Monte-Carlo simulations, and emits CSV.
//!
//! Exit codes: 0 on success, 1 on any input error (bad flags, unreadable or
//! invalid spec files), 2 when the run succeeded but some rows were
//! infeasible or degenerate (those rows are marked in the `status` column).
//! All output is byte-deterministic given the inputs, flags, and seed; the
//! `CAPDIST_THREADS` environment variable caps internal parallelism without
//! affecting output.

use capdist::{mac, rayleigh, sim, solver, ChannelSpec, MacChannelSpec, RayleighQuery};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "capdist", version, about = "capacity-distortion toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Units {
    Nats,
    Bits,
}

impl Units {
    /// Factor applied to rate-like quantities (nats -> requested unit).
    fn rate_factor(self) -> f64 {
        match self {
            Units::Nats => 1.0,
            Units::Bits => 1.0 / std::f64::consts::LN_2,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Capacity-distortion curve of a channel spec over a distortion grid.
    Capdist(CapdistArgs),
    /// Monte-Carlo simulation of the decode-then-estimate scheme.
    Simulate(SimulateArgs),
    /// Rayleigh fading capacity-distortion bounds.
    Rayleigh(RayleighArgs),
    /// Two-user MAC rate region at one distortion budget.
    Mac(MacArgs),
    /// Echo a validated channel spec back out as canonical JSON.
    DumpSpec(DumpSpecArgs),
}

#[derive(Args)]
struct CapdistArgs {
    /// Channel spec JSON file.
    #[arg(long)]
    channel: PathBuf,
    /// Smallest distortion target (default: the spec's d_min).
    #[arg(long)]
    dmin: Option<f64>,
    /// Largest distortion target (default: the spec's d_max).
    #[arg(long)]
    dmax: Option<f64>,
    /// Number of grid points.
    #[arg(long, default_value_t = 21)]
    points: usize,
    /// Also enforce the spec's input_cost vector against this budget.
    #[arg(long)]
    input_cost_limit: Option<f64>,
    #[arg(long, value_enum, default_value = "nats")]
    units: Units,
    /// Output path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    channel: PathBuf,
    /// Comma-separated input distribution for the codebook composition
    /// (default: the capacity-achieving distribution).
    #[arg(long)]
    input_pmf: Option<String>,
    /// Comma-separated block lengths.
    #[arg(long)]
    blocklengths: String,
    /// Rate in nats per channel use; message count becomes ceil(e^{nR}).
    #[arg(long, conflicts_with = "messages")]
    rate: Option<f64>,
    /// Fixed message count per block length.
    #[arg(long)]
    messages: Option<usize>,
    #[arg(long)]
    trials: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value = "nats")]
    units: Units,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RayleighArgs {
    /// Comma-separated linear SNR values.
    #[arg(long)]
    rho_list: String,
    /// Distortion scaling exponent: D = kappa * rho^(-alpha).
    #[arg(long, requires = "kappa")]
    alpha: Option<f64>,
    #[arg(long, requires = "alpha")]
    kappa: Option<f64>,
    /// Explicit distortion grid, applied to every rho (alternative to
    /// --alpha/--kappa).
    #[arg(long, conflicts_with = "alpha")]
    dmin: Option<f64>,
    #[arg(long, conflicts_with = "alpha")]
    dmax: Option<f64>,
    #[arg(long, default_value_t = 1)]
    points: usize,
    #[arg(long, value_enum, default_value = "nats")]
    units: Units,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MacArgs {
    /// MAC channel spec JSON file.
    #[arg(long)]
    mac_channel: PathBuf,
    /// Distortion budget.
    #[arg(long)]
    distortion: f64,
    #[arg(long, default_value_t = 51)]
    grid_steps: usize,
    #[arg(long, value_enum, default_value = "nats")]
    units: Units,
    /// Output CSV path; boundary certificates land next to it in
    /// `<out>.certs.json`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DumpSpecArgs {
    #[arg(long)]
    channel: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Outcome of a successful run.
enum RunStatus {
    Clean,
    /// Some rows were infeasible or degenerate.
    Partial,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // clap would exit 2 on usage errors; the contract reserves 2 for
            // partial infeasibility, so remap everything to 1 except the
            // help/version paths
            use clap::error::ErrorKind;
            let _ = err.print();
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    configure_threads();
    match run(cli.command) {
        Ok(RunStatus::Clean) => ExitCode::SUCCESS,
        Ok(RunStatus::Partial) => ExitCode::from(2),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn configure_threads() {
    if let Ok(value) = std::env::var("CAPDIST_THREADS") {
        if let Ok(n) = value.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn run(command: Command) -> Result<RunStatus, String> {
    match command {
        Command::Capdist(args) => cmd_capdist(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Rayleigh(args) => cmd_rayleigh(args),
        Command::Mac(args) => cmd_mac(args),
        Command::DumpSpec(args) => cmd_dump_spec(args),
    }
}

/// 12-significant-digit decimal rendering, stable across platforms.
fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}

fn load_channel(path: &Path) -> Result<ChannelSpec, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    ChannelSpec::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, String> {
    text.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<T>()
                .map_err(|_| format!("invalid {what} entry: {tok:?}"))
        })
        .collect()
}

fn grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>, String> {
    if points == 0 {
        return Err("grid needs at least one point".into());
    }
    if hi < lo {
        return Err(format!("grid bounds out of order: {lo} > {hi}"));
    }
    if points == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect())
}

fn emit(out: Option<&Path>, content: &str) -> Result<(), String> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn cmd_capdist(args: CapdistArgs) -> Result<RunStatus, String> {
    let spec = load_channel(&args.channel)?;
    let profile = capdist::estimation_profile(&spec);
    let lo = args.dmin.unwrap_or(profile.d_min);
    let hi = args.dmax.unwrap_or(profile.d_max.max(lo));
    let targets = grid(lo, hi, args.points)?;
    let factor = args.units.rate_factor();

    let mut csv = String::from("D,value,lambda_d,lambda_v,distortion_attained,cost_attained,active_d,active_v,converged,iterations,status");
    for label in &spec.input_alphabet {
        let _ = write!(csv, ",p_{label}");
    }
    csv.push('\n');

    let mut partial = false;
    for &d in &targets {
        let result = match args.input_cost_limit {
            Some(v) => solver::capacity_distortion_cost(&spec, d, v),
            None => solver::capacity_distortion(&spec, d),
        };
        match result {
            Ok(sol) => {
                let _ = write!(
                    csv,
                    "{},{},{},{},{},{},{},{},{},{},OK",
                    sig12(d),
                    sig12(sol.value * factor),
                    sig12(sol.lambda_d * factor),
                    sig12(sol.lambda_v * factor),
                    sig12(sol.distortion_attained),
                    sig12(sol.cost_attained),
                    sol.active_d,
                    sol.active_v,
                    sol.converged,
                    sol.iterations,
                );
                for p in &sol.input_pmf {
                    let _ = write!(csv, ",{}", sig12(*p));
                }
                csv.push('\n');
            }
            Err(solver::SolverError::InfeasibleDistortion { .. })
            | Err(solver::SolverError::InfeasibleConstraints { .. }) => {
                partial = true;
                let _ = write!(csv, "{},,,,,,,,,,INFEASIBLE", sig12(d));
                for _ in &spec.input_alphabet {
                    csv.push(',');
                }
                csv.push('\n');
            }
            Err(e) => return Err(e.to_string()),
        }
    }
    emit(args.out.as_deref(), &csv)?;
    Ok(if partial {
        RunStatus::Partial
    } else {
        RunStatus::Clean
    })
}

fn cmd_simulate(args: SimulateArgs) -> Result<RunStatus, String> {
    let spec = load_channel(&args.channel)?;
    let input_pmf = match &args.input_pmf {
        Some(text) => {
            let pmf: Vec<f64> = parse_list(text, "input-pmf")?;
            if pmf.len() != spec.num_inputs() {
                return Err(format!(
                    "input-pmf has {} entries, channel has {} inputs",
                    pmf.len(),
                    spec.num_inputs()
                ));
            }
            pmf
        }
        None => solver::unconstrained_capacity(&spec).input_pmf,
    };
    let block_lengths: Vec<usize> = parse_list(&args.blocklengths, "blocklengths")?;
    if block_lengths.is_empty() {
        return Err("blocklengths list is empty".into());
    }
    let factor = args.units.rate_factor();

    let mut csv =
        String::from("n,messages,rate,trials,pe_hat,pe_se,dbar_hat,dbar_se,genie_dbar_hat,genie_se,bound,seed\n");
    for &n in &block_lengths {
        let messages = match (args.rate, args.messages) {
            (Some(rate), None) => {
                if rate <= 0.0 {
                    return Err(format!("rate must be positive, got {rate}"));
                }
                (n as f64 * rate).exp().ceil() as usize
            }
            (None, Some(m)) => m,
            _ => return Err("exactly one of --rate and --messages is required".into()),
        };
        let codebook = sim::build_codebook(&input_pmf, n, messages, args.seed)
            .map_err(|e| e.to_string())?;
        let report =
            sim::simulate(&spec, &codebook, args.trials, args.seed).map_err(|e| e.to_string())?;
        let rate = (messages as f64).ln() / n as f64;
        let _ = writeln!(
            csv,
            "{n},{messages},{},{},{},{},{},{},{},{},{},{}",
            sig12(rate * factor),
            report.trials,
            sig12(report.pe_hat),
            sig12(report.pe_std_err),
            sig12(report.dbar_hat),
            sig12(report.dbar_std_err),
            sig12(report.genie_dbar_hat),
            sig12(report.genie_std_err),
            sig12(report.bound),
            args.seed,
        );
    }
    emit(args.out.as_deref(), &csv)?;
    Ok(RunStatus::Clean)
}

fn cmd_rayleigh(args: RayleighArgs) -> Result<RunStatus, String> {
    let rhos: Vec<f64> = parse_list(&args.rho_list, "rho-list")?;
    if rhos.is_empty() {
        return Err("rho-list is empty".into());
    }
    let factor = args.units.rate_factor();

    // (rho, D, window alpha if defined)
    let mut queries: Vec<(f64, f64, Option<f64>)> = Vec::new();
    match (args.alpha, args.kappa, args.dmin) {
        (Some(alpha), Some(kappa), None) => {
            if alpha >= 1.0 {
                return Err(
                    "alpha = 1 sits in the bounded-capacity regime: D ~ kappa/rho keeps the \
                     capacity finite and no double-log window exists"
                        .into(),
                );
            }
            if alpha < 0.0 {
                return Err(format!("alpha must lie in [0, 1), got {alpha}"));
            }
            for &rho in &rhos {
                queries.push((rho, kappa * rho.powf(-alpha), Some(alpha)));
            }
        }
        (None, None, Some(dmin)) => {
            let dmax = args.dmax.unwrap_or(dmin);
            for &rho in &rhos {
                for &d in &grid(dmin, dmax, args.points)? {
                    queries.push((rho, d, None));
                }
            }
        }
        _ => return Err("provide either --alpha with --kappa, or a --dmin/--dmax/--points grid".into()),
    }

    let mut csv = String::from("rho,D,lower,upper,window_lo,window_hi,window_width,status\n");
    let mut partial = false;
    for (rho, d, alpha) in queries {
        let query = RayleighQuery::new(rho, d).map_err(|e| e.to_string())?;
        let upper = rayleigh::upper_bound(&query);
        let window = match alpha {
            Some(a) => Some(rayleigh::asymptotic_window(rho, a).map_err(|e| e.to_string())?),
            None => None,
        };
        let (w_lo, w_hi, w_width) = match window {
            Some((lo, hi)) => (
                sig12(lo * factor),
                sig12(hi * factor),
                sig12((hi - lo) * factor),
            ),
            None => (String::new(), String::new(), String::new()),
        };
        match rayleigh::lower_bound(&query) {
            Ok(lower) => {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{w_lo},{w_hi},{w_width},OK",
                    sig12(rho),
                    sig12(d),
                    sig12(lower * factor),
                    sig12(upper * factor),
                );
            }
            Err(rayleigh::RayleighError::DegenerateConstruction(_)) => {
                partial = true;
                let _ = writeln!(
                    csv,
                    "{},{},,{},{w_lo},{w_hi},{w_width},DEGENERATE",
                    sig12(rho),
                    sig12(d),
                    sig12(upper * factor),
                );
            }
            Err(e) => return Err(e.to_string()),
        }
    }
    emit(args.out.as_deref(), &csv)?;
    Ok(if partial {
        RunStatus::Partial
    } else {
        RunStatus::Clean
    })
}

fn cmd_mac(args: MacArgs) -> Result<RunStatus, String> {
    let text = std::fs::read_to_string(&args.mac_channel)
        .map_err(|e| format!("cannot read {}: {e}", args.mac_channel.display()))?;
    let spec = MacChannelSpec::from_json(&text)
        .map_err(|e| format!("{}: {e}", args.mac_channel.display()))?;
    let region = mac::mac_region_compute(&spec, args.distortion, args.grid_steps)
        .map_err(|e| e.to_string())?;
    let factor = args.units.rate_factor();

    let mut csv = String::from("R1,R2,certificate\n");
    for (id, point) in region.points.iter().enumerate() {
        let _ = writeln!(
            csv,
            "{},{},{id}",
            sig12(point.r1 * factor),
            sig12(point.r2 * factor)
        );
    }
    emit(Some(&args.out), &csv)?;

    let mut cert_path = args.out.clone().into_os_string();
    cert_path.push(".certs.json");
    let json = serde_json::to_string_pretty(&region).expect("region serializes");
    std::fs::write(&cert_path, json)
        .map_err(|e| format!("cannot write {}: {e}", PathBuf::from(&cert_path).display()))?;

    Ok(if region.grid_too_coarse {
        RunStatus::Partial
    } else {
        RunStatus::Clean
    })
}

fn cmd_dump_spec(args: DumpSpecArgs) -> Result<RunStatus, String> {
    let spec = load_channel(&args.channel)?;
    let mut json = spec.to_json();
    json.push('\n');
    emit(args.out.as_deref(), &json)?;
    Ok(RunStatus::Clean)
}
