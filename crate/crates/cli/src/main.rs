use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gsp_srukf::analysis::{error_dynamics_at, lyapunov_residual, solve_lyapunov, spectral_radius};
use gsp_srukf::bench::{
    emit_csv, format_sig, run_experiment, trial_seed, ExperimentConfig, PAPER_SCALE_TRIALS,
};
use gsp_srukf::filter::{FilterState, FilterVariant, GainMode, SigmaPointFilter};
use gsp_srukf::graph::{generate_topology, GftBasis, TopologyModel};
use gsp_srukf::model::{benchmark_initial_state, simulate_trajectory, BenchmarkModel};
use gsp_srukf::noise::NoiseSpec;
use gsp_srukf::Error;
use nalgebra::DMatrix;

#[derive(Parser)]
#[command(
    name = "gsp-bench",
    version,
    about = "Robust graph sigma-point filter benchmark"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo experiment and write CSV results.
    Run(RunArgs),
    /// Steady-state error analysis of one filter at its final gain.
    Analyze(AnalyzeArgs),
    /// Generate a connected topology and save its edge list.
    Graph(GraphArgs),
}

#[derive(Args)]
struct Overrides {
    /// TOML configuration file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    steps: Option<usize>,
    /// State dimension.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    phi: Option<f64>,
    /// Measurement variance assumed by the filters.
    #[arg(long)]
    nominal_r: Option<f64>,
    #[arg(long, value_parser = parse_gain_mode)]
    gain_mode: Option<GainMode>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Overrides,
    /// Comma-separated filter names.
    #[arg(long, value_delimiter = ',')]
    filters: Option<Vec<FilterVariant>>,
    #[arg(long)]
    trials: Option<usize>,
    /// Use the full-scale trial count.
    #[arg(long, conflicts_with = "trials")]
    paper_scale: bool,
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    common: Overrides,
    #[arg(long, default_value = "gsp-gr-srukf")]
    filter: FilterVariant,
}

#[derive(Args)]
struct GraphArgs {
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// erdos_renyi, ring or random_geometric.
    #[arg(long, default_value = "erdos_renyi")]
    model: String,
    /// Edge probability for erdos_renyi.
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    /// Connection radius for random_geometric.
    #[arg(long, default_value_t = 0.5)]
    radius: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Destination file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_gain_mode(s: &str) -> Result<GainMode, String> {
    match s {
        "full" => Ok(GainMode::Full),
        "diagonal" => Ok(GainMode::Diagonal),
        _ => Err(format!("unknown gain mode '{s}' (full, diagonal)")),
    }
}

fn load_config(o: &Overrides) -> gsp_srukf::Result<ExperimentConfig> {
    let mut cfg = match &o.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            ExperimentConfig::from_toml(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(s) = &o.scenario {
        cfg.scenario = s.clone();
        cfg.measurement_noise = None;
    }
    if let Some(v) = o.seed {
        cfg.seed = v;
    }
    if let Some(v) = o.steps {
        cfg.steps = v;
    }
    if let Some(v) = o.n {
        cfg.n = v;
    }
    if let Some(v) = o.phi {
        cfg.phi = v;
    }
    if let Some(v) = o.nominal_r {
        cfg.nominal_r = v;
    }
    if let Some(v) = o.gain_mode {
        cfg.filter.gain_mode = v;
    }
    Ok(cfg)
}

fn run(args: RunArgs) -> gsp_srukf::Result<()> {
    let mut cfg = load_config(&args.common)?;
    if let Some(f) = args.filters {
        cfg.filters = f;
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if args.paper_scale {
        cfg.trials = PAPER_SCALE_TRIALS;
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    if let Some(out) = args.out {
        cfg.output = out.to_string_lossy().into_owned();
    }
    cfg.validate()?;
    let result = run_experiment(&cfg)?;
    emit_csv(&result, &cfg, cfg.output.as_ref())?;
    for f in &result.filters {
        println!(
            "{:<18} armse {:>14}  failures {}",
            f.variant.name(),
            format_sig(f.armse, 9),
            f.failures
        );
    }
    eprintln!(
        "{} trials in {:.2?}, written to {}",
        cfg.trials, result.elapsed, cfg.output
    );
    Ok(())
}

fn analyze(args: AnalyzeArgs) -> gsp_srukf::Result<()> {
    let cfg = load_config(&args.common)?;
    cfg.validate()?;
    let topology = generate_topology(cfg.n, cfg.graph.model, cfg.graph.seed)?;
    let basis = GftBasis::from_topology(&topology)?;
    let model = BenchmarkModel::new(cfg.n, cfg.phi, cfg.process_variance, cfg.nominal_r)?;
    let process = NoiseSpec::Gaussian {
        mean: 0.0,
        variance: cfg.process_variance,
    };
    let x0 = benchmark_initial_state(cfg.n);
    let traj = simulate_trajectory(
        &model,
        &process,
        &cfg.measurement_noise()?,
        &x0,
        cfg.steps,
        trial_seed(cfg.seed, 0),
    )?;

    let fc = cfg.filter_config(args.filter);
    let filter = SigmaPointFilter::new(&model, &basis, fc)?;
    let mut state = FilterState::new(
        x0,
        &(DMatrix::identity(cfg.n, cfg.n) * cfg.init_variance),
        &fc,
    )?;
    let mut last = None;
    for i in 0..traj.steps() {
        let (next, report) = filter.step(&state, &traj.measurement(i))?;
        last = Some((report, state.step + 1));
        state = next;
    }
    let (report, step) = last.expect("at least one step");
    let dynamics = error_dynamics_at(
        &model,
        filter.basis(),
        &state.x_hat,
        step,
        &report.h_v,
        &report.gain_v,
    )?;
    let rho = spectral_radius(&dynamics.a_mat);
    println!("filter {}", args.filter);
    println!("spectral_radius {}", format_sig(rho, 9));
    let delta = solve_lyapunov(&dynamics)?;
    let diag: Vec<String> = delta.diagonal().iter().map(|v| format_sig(*v, 9)).collect();
    println!("delta_diag {}", diag.join(" "));
    println!(
        "residual {}",
        format_sig(lyapunov_residual(&dynamics, &delta), 3)
    );
    Ok(())
}

fn graph(args: GraphArgs) -> gsp_srukf::Result<()> {
    let model = match args.model.as_str() {
        "erdos_renyi" => TopologyModel::ErdosRenyi { p: args.p },
        "ring" => TopologyModel::Ring,
        "random_geometric" => TopologyModel::RandomGeometric {
            radius: args.radius,
        },
        other => return Err(Error::Config(format!("unknown graph model '{other}'"))),
    };
    let text = generate_topology(args.n, model, args.seed)?.to_edge_list();
    match args.out {
        Some(path) => {
            fs::write(&path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn fail(kind: &str, message: &str) -> ExitCode {
    eprintln!(
        "{}",
        serde_json::json!({ "error": kind, "message": message })
    );
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            return fail(
                "UsageError",
                e.to_string().lines().next().unwrap_or_default(),
            )
        }
    };
    let outcome = match cli.command {
        Command::Run(a) => run(a),
        Command::Analyze(a) => analyze(a),
        Command::Graph(a) => graph(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), &e.to_string()),
    }
}
