//! Command-line front end: solve steady states, scan resonance lines, run
//! detuning sweeps, and compare the unreduced equation against the
//! adiabatically eliminated one.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use opmag::analytics::spin_temperature_report;
use opmag::config::{Calibration, ScenarioConfig, PRESET_NAMES};
use opmag::effective::EffectiveSystem;
use opmag::{io_err, Error, Result};
use opmag::response::{extract_resonance, ScanPoint};
use opmag::steady::SteadyOptions;
use opmag::sweep::{
    resonance_at, response_file_name, run_sweep, run_validation, write_plot_script,
    write_populations_csv, write_report_json, write_response_csv, write_sweep_csv,
    VALIDATION_RATIOS,
};

#[derive(Parser)]
#[command(
    name = "opmag",
    version,
    about = "Optically pumped magnetometer simulator",
    propagate_version = true
)]
struct Cli {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario JSON file.
    #[arg(long, global = true, conflicts_with = "preset", value_name = "PATH")]
    config: Option<PathBuf>,
    /// Embedded scenario name (see `opmag presets`).
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".", value_name = "DIR")]
    out: PathBuf,
    /// Worker threads for sweeps (default: one per core).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Light-shift calibration: `off`, or a far-detuned reference in Hz.
    #[arg(long, global = true, value_name = "HZ|off")]
    calibrate: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the pumped steady state at one detuning and print it.
    Steady {
        /// Override the scenario's pump detuning, Hz.
        #[arg(long, value_name = "HZ")]
        delta_hz: Option<f64>,
    },
    /// Locate the magnetic-resonance line at one detuning and write its scan.
    Response {
        /// Override the scenario's pump detuning, Hz.
        #[arg(long, value_name = "HZ")]
        delta_hz: Option<f64>,
    },
    /// Run the configured detuning sweep and write its artifacts.
    Sweep,
    /// Compare unreduced and eliminated steady states on a small atom.
    Validate,
    /// List the embedded scenarios, or print one as JSON with --preset.
    Presets,
}

impl ScenarioArgs {
    /// The scenario these flags select, with the calibration override
    /// already applied.
    fn scenario(&self) -> Result<ScenarioConfig> {
        let mut config = match (&self.config, &self.preset) {
            (Some(path), _) => ScenarioConfig::load(path)?,
            (None, Some(name)) => ScenarioConfig::preset(name)?,
            (None, None) => {
                return Err(Error::Config(
                    "no scenario selected: pass --config <path> or --preset <name>".into(),
                ))
            }
        };
        if let Some(mode) = self.calibration_override()? {
            config.calibration = mode;
        }
        Ok(config)
    }

    fn calibration_override(&self) -> Result<Option<Calibration>> {
        let Some(raw) = &self.calibrate else {
            return Ok(None);
        };
        if raw.eq_ignore_ascii_case("off") {
            return Ok(Some(Calibration::None));
        }
        let delta_ref_hz: f64 = raw.parse().map_err(|_| {
            Error::Config(format!(
                "--calibrate takes `off` or a reference detuning in Hz, got `{raw}`"
            ))
        })?;
        if !delta_ref_hz.is_finite() {
            return Err(Error::Config(
                "--calibrate reference must be finite".into(),
            ));
        }
        Ok(Some(Calibration::FarDetunedReference { delta_ref_hz }))
    }

    /// Ensure the output directory exists and return it.
    fn out_dir(&self) -> Result<&Path> {
        fs::create_dir_all(&self.out).map_err(io_err(&self.out))?;
        Ok(&self.out)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Steady { delta_hz } => steady_command(&cli.scenario, *delta_hz),
        Command::Response { delta_hz } => response_command(&cli.scenario, *delta_hz),
        Command::Sweep => sweep_command(&cli.scenario),
        Command::Validate => validate_command(&cli.scenario),
        Command::Presets => presets_command(&cli.scenario),
    }
}

fn steady_command(args: &ScenarioArgs, delta_hz: Option<f64>) -> Result<()> {
    let config = args.scenario()?;
    let mut params = config.to_params()?;
    if let Some(delta) = delta_hz {
        params.pump_detuning_hz = delta;
    }
    let system = EffectiveSystem::build(params)?;
    let steady = system.steady_state(&config.steady_options())?;

    println!("pump detuning        {:.6e} Hz", params.pump_detuning_hz);
    println!("steady <S_z>         {:.16e}", steady.mean_sz);
    println!("residual transverse  {:.3e}", steady.transverse);
    println!("kernel solves        {}", steady.iterations);
    println!("relative residual    {:.3e}", steady.residual);
    if steady.degenerate {
        println!("note: pump is off; this is one member of a degenerate stationary family");
    }
    println!("populations:");
    let populations: Vec<f64> = (0..params.atom.ground_dim())
        .map(|i| steady.rho[(i, i)].re)
        .collect();
    for (level, p) in system.basis().ground_levels().iter().zip(&populations) {
        println!("  f={} m={:>4}   {:.16e}", level.f, level.m.to_string(), p);
    }
    let fit = spin_temperature_report(system.basis(), &populations);
    println!(
        "spin-temperature fit: beta = {:.6e}, multiplet mismatch = {:.3e} (worst at m = {}), ladder spread = {:.3e}",
        fit.beta, fit.max_cross_multiplet_deviation, fit.worst_m, fit.ratio_spread
    );
    Ok(())
}

fn response_command(args: &ScenarioArgs, delta_hz: Option<f64>) -> Result<()> {
    let config = args.scenario()?;
    let mut params = config.to_params()?;
    if let Some(delta) = delta_hz {
        params.pump_detuning_hz = delta;
    }
    let opts = config.steady_options();
    let system = EffectiveSystem::build(params)?;
    let steady = system.steady_state(&opts)?;
    let mut summary = match extract_resonance(&system, &steady) {
        Ok(summary) => summary,
        // The failed scan is still worth keeping: write it out so the window
        // can be inspected before re-running.
        Err(err @ Error::WindowTooSmall { .. }) => {
            if let Error::WindowTooSmall { ref scan, .. } = err {
                let out = args.out_dir()?;
                let path = out.join(response_file_name(params.pump_detuning_hz));
                let points: Vec<ScanPoint> = scan
                    .iter()
                    .map(|&(omega_hz, re)| ScanPoint {
                        omega_hz,
                        chi: Complex64::new(re, f64::NAN),
                    })
                    .collect();
                write_response_csv(&path, &points)?;
                eprintln!("notice: failed scan written to {}", path.display());
            }
            return Err(err);
        }
        Err(err) => return Err(err),
    };
    if let Calibration::FarDetunedReference { delta_ref_hz } = config.calibration {
        let reference = resonance_at(&params, delta_ref_hz, &opts)?;
        summary.light_shift_hz -= reference.light_shift_hz;
    }

    let out = args.out_dir()?;
    let path = out.join(response_file_name(params.pump_detuning_hz));
    write_response_csv(&path, &summary.scan)?;

    println!("pump detuning        {:.6e} Hz", params.pump_detuning_hz);
    println!("larmor reference     {:.6e} Hz", params.larmor_reference_hz());
    println!("resonance centre     {:.16e} Hz", summary.omega0_hz);
    println!("light shift          {:.16e} Hz", summary.light_shift_hz);
    println!("linewidth (HWHM)     {:.16e} Hz", summary.linewidth_hz);
    println!(
        "rf amplitude         {}",
        if summary.rf_capped {
            "capped to stay in the linear regime"
        } else {
            "as configured"
        }
    );
    println!("scan written to      {}", path.display());
    Ok(())
}

fn sweep_command(args: &ScenarioArgs) -> Result<()> {
    let config = args.scenario()?;
    let points = run_sweep(&config, args.threads)?;
    let out = args.out_dir()?;

    let sweep_path = out.join("sweep.csv");
    write_sweep_csv(&sweep_path, &points)?;
    println!("sweep written to     {}", sweep_path.display());

    if config.outputs.is_empty() {
        eprintln!("notice: no outputs selected in the scenario; skipping plot script");
    } else {
        let plot_path = out.join("plot.gp");
        write_plot_script(&plot_path, &config.outputs, "sweep.csv")?;
        println!("plot script          {}", plot_path.display());
    }

    if config.outputs.populations {
        let system = EffectiveSystem::build(config.to_params()?)?;
        let path = out.join("populations.csv");
        write_populations_csv(&path, system.basis(), &points)?;
        println!("populations          {}", path.display());
    }

    if config.outputs.response_curve {
        for point in points.iter().filter(|p| !p.scan.is_empty()) {
            write_response_csv(&out.join(response_file_name(point.delta_hz)), &point.scan)?;
        }
        println!("per-point scans      {}", out.join("response_*.csv").display());
    }

    let failed = points.iter().filter(|p| !p.is_ok()).count();
    if failed > 0 {
        eprintln!(
            "notice: {failed} of {} points failed; see the status column",
            points.len()
        );
    }
    Ok(())
}

fn validate_command(args: &ScenarioArgs) -> Result<()> {
    // The validation scenario is built in; a config, when given, only
    // adjusts the solver.
    let opts = match (&args.config, &args.preset) {
        (None, None) => SteadyOptions::default(),
        _ => args.scenario()?.steady_options(),
    };
    let report = run_validation(&opts, &VALIDATION_RATIOS)?;

    let out = args.out_dir()?;
    let path = out.join("report.json");
    write_report_json(&path, &report)?;

    println!("error slope          {:.4}", report.error_slope);
    println!("excited-pop slope    {:.4}", report.excited_population_slope);
    println!("smallest rung error  {:.3e}", report.smallest_rung_error);
    println!("zero-drive error     {:.3e}", report.zero_drive_error);
    for rung in &report.rungs {
        println!(
            "  omega/gamma = {:.0e}: <S_z> full {:.8e} vs eliminated {:.8e}",
            rung.omega_ratio, rung.sz_full, rung.sz_effective
        );
    }
    println!("report written to    {}", path.display());
    Ok(())
}

fn presets_command(args: &ScenarioArgs) -> Result<()> {
    if let Some(name) = &args.preset {
        let preset = ScenarioConfig::preset(name)?;
        println!("{}", preset.to_json_pretty());
        return Ok(());
    }
    for name in PRESET_NAMES {
        println!("{name}");
    }
    Ok(())
}
