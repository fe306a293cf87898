//! Command-line front end for the estimation pipeline.

use clap::Parser;
use std::path::PathBuf;
use std::process::ExitCode;
use uio_drem::pipeline::{exit_code_for, run_scenario, RunReport};
use uio_drem::scenario::ScenarioConfig;
use uio_drem::sweep::{sweep, sweep_csv, SweepSpec};

/// Simulate the three-stage adaptive estimation pipeline on a configured
/// scenario and write time series and metric reports as CSV.
#[derive(Debug, Parser)]
#[command(name = "uio-drem", version, about)]
struct Cli {
    /// TOML scenario file (see README for the schema)
    #[arg(long, value_name = "PATH", conflicts_with = "scenario")]
    config: Option<PathBuf>,

    /// builtin scenario name (default: paper_sec5)
    #[arg(long, value_name = "NAME")]
    scenario: Option<String>,

    /// output directory for timeseries.csv, report.csv and config_echo
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,

    /// override the noise seed
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,

    /// disable measurement noise
    #[arg(long)]
    no_noise: bool,

    /// override the horizon t_end, seconds
    #[arg(long, value_name = "SECONDS")]
    duration: Option<f64>,

    /// override the integration step, seconds
    #[arg(long, value_name = "SECONDS")]
    dt: Option<f64>,

    /// sweep one scalar config field: FIELD=a:b:n
    #[arg(long, value_name = "FIELD=a:b:n")]
    sweep: Option<String>,
}

fn load_config(cli: &Cli) -> uio_drem::Result<ScenarioConfig> {
    let mut cfg = match (&cli.config, &cli.scenario) {
        (Some(path), _) => ScenarioConfig::from_path(path)?,
        (None, Some(name)) => ScenarioConfig::builtin(name)?,
        (None, None) => ScenarioConfig::builtin("paper_sec5")?,
    };
    if let Some(seed) = cli.seed {
        cfg.noise.seed = seed;
    }
    if cli.no_noise {
        cfg.noise.enabled = false;
    }
    if let Some(t_end) = cli.duration {
        cfg.sim.t_end = t_end;
    }
    if let Some(dt) = cli.dt {
        cfg.sim.dt = dt;
    }
    Ok(cfg)
}

fn print_report(r: &RunReport) {
    println!("scenario           {}", r.scenario);
    if let Some(seed) = r.seed {
        println!("noise seed         {seed}");
    }
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
    println!("first unclamped    {} s", opt(r.first_unclamped));
    println!(
        "freeze time        {} s{}",
        opt(r.freeze_time),
        if r.freeze_deferred { " (deferred)" } else { "" }
    );
    println!("stage-2 unclamped  {} s", opt(r.stage2_first_unclamped));
    println!("observer start     {} s", opt(r.observer_started_at));
    println!("|xi0 error|        {:.6e}", r.metrics.xi0_error);
    println!("|omega error|      {:.6e}", r.metrics.omega_error);
    println!("sup |f err| (tail) {:.6e}", r.metrics.f_sup_error_last20);
    println!("|x err| at end     {:.6e}", r.metrics.x_error_final);
    println!("rms x err (tail)   {:.6e}", r.metrics.x_rms_last20);
    println!("wall time          {:.3} s", r.wall_secs);
    if let Some(p) = &r.timeseries_path {
        println!("time series        {}", p.display());
    }
}

fn run(cli: &Cli) -> uio_drem::Result<()> {
    let cfg = load_config(cli)?;
    if let Some(spec_text) = &cli.sweep {
        let spec = SweepSpec::parse(spec_text)?;
        let rows = sweep(&cfg, &spec);
        std::fs::create_dir_all(&cli.out)
            .map_err(|e| uio_drem::Error::Io(format!("{}: {e}", cli.out.display())))?;
        let table = sweep_csv(&spec, &rows);
        let path = cli.out.join("report.csv");
        std::fs::write(&path, &table)
            .map_err(|e| uio_drem::Error::Io(format!("{}: {e}", path.display())))?;
        std::fs::write(cli.out.join("config_echo"), cfg.to_toml())
            .map_err(|e| uio_drem::Error::Io(e.to_string()))?;
        let failures = rows.iter().filter(|r| r.outcome.is_err()).count();
        println!(
            "sweep {}: {} points, {} failed, table at {}",
            spec.field,
            rows.len(),
            failures,
            path.display()
        );
        for row in &rows {
            match &row.outcome {
                Ok(r) => println!(
                    "  {} = {:<12.6} omega_err {:.3e}  x_err {:.3e}",
                    spec.field, row.value, r.metrics.omega_error, r.metrics.x_error_final
                ),
                Err(e) => println!("  {} = {:<12.6} FAILED: {e}", spec.field, row.value),
            }
        }
        Ok(())
    } else {
        let report = run_scenario(&cfg, Some(&cli.out))?;
        print_report(&report);
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e) as u8)
        }
    }
}
