//! Command-line front end: scenario runs, tilt-range analysis,
//! saturation calibration, and metric replay.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use tilthex_core::analysis::{
    attainable_force_set, hover_efficiency_curve, hover_lateral_radius, rank_sweep,
};
use tilthex_core::controller::{calibrate_lateral_bound, calibrate_regularization, Controller};
use tilthex_core::drivetrain::DrivetrainParams;
use tilthex_core::vehicle::VehicleParams;
use tilthex_core::Vec3;
use tilthex_harness::config::{GainsFile, ParamsFile, TuningConfig};
use tilthex_harness::log::RunLog;
use tilthex_harness::metrics::{compute_metrics, Metrics, MetricsConfig, RegimeMetrics};
use tilthex_harness::runner::{run_scenario, RunError, RunOptions};
use tilthex_harness::scenario::ScenarioSpec;

#[derive(Parser)]
#[command(
    name = "tilthex",
    version,
    about = "Synchronized-tilt hexarotor simulator and analysis tools"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file; write the log and its metrics.
    Run(RunArgs),
    /// Sweep the tilt range: efficiency, allocation rank, force sets.
    Analyze(AnalyzeArgs),
    /// Fit the lateral saturation bound and write a gains file.
    Calibrate(CalibrateArgs),
    /// Recompute metrics from an existing log.
    ReplayMetrics(ReplayArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum LogFormat {
    Csv,
    Json,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario TOML file.
    #[arg(long)]
    scenario: PathBuf,
    /// Vehicle/drivetrain TOML; defaults describe the reference platform.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Gains/tuning TOML; defaults are the stock controller.
    #[arg(long)]
    gains: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Overrides the scenario's noise seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Log every n-th control step.
    #[arg(long, default_value_t = 1)]
    log_every: usize,
    #[arg(long, value_enum, default_value_t = LogFormat::Csv)]
    format: LogFormat,
    /// Settling window excluded from steady-state metrics, s.
    #[arg(long, default_value_t = 2.0)]
    blanking: f64,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Tilt grid spacing for the efficiency and radius sweeps, deg.
    #[arg(long, default_value_t = 0.5)]
    step_deg: f64,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Safety factor applied to the fitted radius.
    #[arg(long, default_value_t = 0.9)]
    margin: f64,
    /// Tilt below which the lateral bound is pinned to zero, deg.
    #[arg(long, default_value_t = 2.0)]
    dead_zone_deg: f64,
    /// Calibration grid spacing, deg.
    #[arg(long, default_value_t = 0.5)]
    step_deg: f64,
    /// Per-propeller hover thrust bias allowed at zero tilt, N.
    #[arg(long, default_value_t = 5e-7)]
    hover_bias: f64,
}

#[derive(Args)]
struct ReplayArgs {
    /// Log CSV produced by `tilthex run`.
    #[arg(long)]
    log: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    blanking: f64,
    /// Tilt separating the level and tilted regimes, deg.
    #[arg(long, default_value_t = 2.0)]
    dead_zone_deg: f64,
    /// Write the metrics JSON here as well as to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> Result<()> {
    // Exit quietly when the stdout consumer goes away (head, less);
    // the runtime's default handler turns EPIPE into a panic.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Analyze(args) => analyze(args),
        Command::Calibrate(args) => calibrate(args),
        Command::ReplayMetrics(args) => replay_metrics(args),
    }
}

fn load_params(path: &Option<PathBuf>) -> Result<(VehicleParams, DrivetrainParams)> {
    let file = match path {
        Some(p) => ParamsFile::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => ParamsFile::default(),
    };
    Ok(file.build()?)
}

fn load_controller(path: &Option<PathBuf>) -> Result<Controller> {
    let file = match path {
        Some(p) => GainsFile::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => GainsFile::default(),
    };
    Ok(file.build())
}

fn regime_line(name: &str, m: &Option<RegimeMetrics>) -> String {
    match m {
        None => format!("  {name:8} (no steady samples)"),
        Some(m) => format!(
            "  {name:8} {:6} samples  |e_p| mean {:.3} mm max {:.3} mm  attitude mean {:.4} deg max {:.4} deg",
            m.samples,
            m.mean_position_error * 1e3,
            m.max_position_error * 1e3,
            m.mean_attitude_error_deg,
            m.max_attitude_error_deg,
        ),
    }
}

fn print_metrics(metrics: &Metrics) {
    println!(
        "{:.1} s logged, {} rows blanked, {} clamp steps, {} laterally saturated steps",
        metrics.duration, metrics.blanked, metrics.clamp_steps, metrics.lateral_saturated_steps
    );
    println!("{}", regime_line("level", &metrics.untilted));
    println!("{}", regime_line("tilted", &metrics.tilted));
    println!("{}", regime_line("overall", &metrics.overall));
    println!(
        "  max per-rotor tilt spread {:.4} deg",
        metrics.max_tilt_divergence.to_degrees()
    );
}

fn run(args: RunArgs) -> Result<()> {
    let spec: ScenarioSpec = toml::from_str(
        &fs::read_to_string(&args.scenario)
            .with_context(|| format!("reading {}", args.scenario.display()))?,
    )
    .with_context(|| format!("parsing {}", args.scenario.display()))?;
    let (vehicle, drivetrain) = load_params(&args.params)?;
    let controller = load_controller(&args.gains)?;
    let options = RunOptions {
        seed: args.seed,
        log_every: args.log_every,
    };

    fs::create_dir_all(&args.out_dir)?;
    let write_log = |log: &RunLog, name: &str| -> Result<PathBuf> {
        let path = match args.format {
            LogFormat::Csv => args.out_dir.join(format!("{name}.csv")),
            LogFormat::Json => args.out_dir.join(format!("{name}.json")),
        };
        let file = fs::File::create(&path)?;
        let mut out = std::io::BufWriter::new(file);
        match args.format {
            LogFormat::Csv => log.write_csv(&mut out)?,
            LogFormat::Json => log.write_json(&mut out)?,
        }
        out.flush()?;
        Ok(path)
    };

    match run_scenario(&spec, &vehicle, &drivetrain, &controller, &options) {
        Ok(log) => {
            let log_path = write_log(&log, &spec.name)?;
            let cfg = MetricsConfig {
                blanking: args.blanking,
                ..MetricsConfig::default()
            };
            let metrics = compute_metrics(&log, &cfg);
            let metrics_path = args.out_dir.join(format!("{}.metrics.json", spec.name));
            fs::write(&metrics_path, serde_json::to_string_pretty(&metrics)?)?;
            println!(
                "{}: wrote {} and {}",
                spec.name,
                log_path.display(),
                metrics_path.display()
            );
            print_metrics(&metrics);
            Ok(())
        }
        Err(RunError::Diverged { error, log }) => {
            let log_path = write_log(&log, &format!("{}.partial", spec.name))?;
            bail!("{error}; partial log written to {}", log_path.display());
        }
        Err(e) => Err(e.into()),
    }
}

fn degree_grid(start: f64, end: f64, step: f64) -> Vec<f64> {
    let n = ((end - start) / step).round() as usize;
    (0..=n)
        .map(|k| (start + k as f64 * step).to_radians())
        .collect()
}

#[derive(Serialize)]
struct ForceSetSummary {
    alpha_deg: f64,
    dim: usize,
    volume: f64,
    max_z: f64,
    hover_lateral_radius: f64,
    vertices: Vec<[f64; 3]>,
}

fn analyze(args: AnalyzeArgs) -> Result<()> {
    let (vehicle, _) = load_params(&args.params)?;
    fs::create_dir_all(&args.out_dir)?;
    let max_deg = vehicle.tilt_max.to_degrees();

    let grid = degree_grid(0.0, max_deg, args.step_deg);
    let curve = hover_efficiency_curve(&grid, &vehicle)?;
    let mut text = String::from("alpha_deg,thrust,efficiency\n");
    for s in &curve {
        text.push_str(&format!(
            "{},{},{}\n",
            s.alpha.to_degrees(),
            s.thrust,
            s.efficiency
        ));
    }
    let path = args.out_dir.join("efficiency.csv");
    fs::write(&path, text)?;
    println!(
        "efficiency: {} points, {:.4} at level, {:.4} at {:.0} deg -> {}",
        curve.len(),
        curve.first().map(|s| s.efficiency).unwrap_or(f64::NAN),
        curve.last().map(|s| s.efficiency).unwrap_or(f64::NAN),
        max_deg,
        path.display()
    );

    // Fine grid through the negative range where the allocation rank
    // dips, coarse grid across the flight range.
    let mut rank_grid = degree_grid(-4.0, 0.0, 0.01);
    rank_grid.extend(degree_grid(args.step_deg, max_deg, args.step_deg));
    let ranks = rank_sweep(&rank_grid, 1e-4, &vehicle);
    let mut text = String::from("alpha_deg,rank,sv_ratio\n");
    for s in &ranks {
        text.push_str(&format!(
            "{},{},{}\n",
            s.alpha.to_degrees(),
            s.rank,
            s.sv_ratio
        ));
    }
    let path = args.out_dir.join("rank.csv");
    fs::write(&path, text)?;
    let min_rank = ranks.iter().map(|s| s.rank).min().unwrap_or(0);
    println!(
        "rank: {} points, minimum rank {} -> {}",
        ranks.len(),
        min_rank,
        path.display()
    );

    let mut sets = Vec::new();
    for deg in [0.0, 10.0, 20.0, 30.0, max_deg] {
        let alpha = deg.to_radians();
        let set = attainable_force_set(alpha, &vehicle, &Vec3::zeros())?;
        let radius = if alpha > 0.0 {
            hover_lateral_radius(alpha, &vehicle)?
        } else {
            0.0
        };
        sets.push(ForceSetSummary {
            alpha_deg: deg,
            dim: set.dim,
            volume: set.volume(),
            max_z: set
                .vertices
                .iter()
                .map(|v| v.z)
                .fold(f64::NEG_INFINITY, f64::max),
            hover_lateral_radius: radius,
            vertices: set.vertices.iter().map(|v| [v.x, v.y, v.z]).collect(),
        });
    }
    let path = args.out_dir.join("force_sets.json");
    fs::write(&path, serde_json::to_string_pretty(&sets)?)?;
    for s in &sets {
        println!(
            "force set at {:>4.1} deg: dim {}, volume {:9.2} N^3, max z {:6.2} N, lateral radius {:.3} N",
            s.alpha_deg, s.dim, s.volume, s.max_z, s.hover_lateral_radius
        );
    }
    println!("force sets -> {}", path.display());
    Ok(())
}

fn calibrate(args: CalibrateArgs) -> Result<()> {
    let (vehicle, _) = load_params(&args.params)?;
    fs::create_dir_all(&args.out_dir)?;
    let dead_zone = args.dead_zone_deg.to_radians();
    let grid = degree_grid(0.0, vehicle.tilt_max.to_degrees(), args.step_deg);

    let saturation = calibrate_lateral_bound(&vehicle, &grid, args.margin, dead_zone)?;
    let regularization = calibrate_regularization(&vehicle, 0.02, args.hover_bias);

    let mut text = String::from("alpha_deg,radius,bound\n");
    for &alpha in &grid {
        if alpha < dead_zone {
            continue;
        }
        let radius = hover_lateral_radius(alpha, &vehicle)?;
        text.push_str(&format!(
            "{},{},{}\n",
            alpha.to_degrees(),
            radius,
            saturation.lateral_bound(alpha)
        ));
    }
    let samples_path = args.out_dir.join("lateral_radius.csv");
    fs::write(&samples_path, text)?;

    let gains = GainsFile {
        controller: TuningConfig {
            saturation_poly: saturation.poly,
            saturation_margin: saturation.margin,
            dead_zone_deg: args.dead_zone_deg,
            tikhonov_k1: regularization.k1,
            tikhonov_k2: regularization.k2,
            ..TuningConfig::default()
        },
        ..GainsFile::default()
    };
    let gains_path = args.out_dir.join("gains.toml");
    fs::write(&gains_path, gains.to_toml()?)?;

    println!(
        "saturation poly [{:.6}, {:.6}, {:.6}] (radius in N, tilt in rad), margin {}",
        saturation.poly[0], saturation.poly[1], saturation.poly[2], saturation.margin
    );
    println!(
        "regularization k1 = {:.3e}, k2 = {:.3e} (hover bias {} N)",
        regularization.k1, regularization.k2, args.hover_bias
    );
    println!(
        "wrote {} and {}",
        gains_path.display(),
        samples_path.display()
    );
    Ok(())
}

fn replay_metrics(args: ReplayArgs) -> Result<()> {
    let log = RunLog::read_csv_file(&args.log)
        .with_context(|| format!("reading {}", args.log.display()))?;
    if log.rows.is_empty() {
        bail!("{} holds no rows", args.log.display());
    }
    let cfg = MetricsConfig {
        blanking: args.blanking,
        dead_zone_deg: args.dead_zone_deg,
    };
    let metrics = compute_metrics(&log, &cfg);
    let text = serde_json::to_string_pretty(&metrics)?;
    if let Some(path) = &args.out {
        if let Some(dir) = path
            .parent()
            .filter(|d| !Path::new(d).as_os_str().is_empty())
        {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, &text)?;
    }
    println!("{text}");
    Ok(())
}
