//! `ltm` — simulate, fit, and analyze two-media laser threshold magnetometry.
//!
//! Exit codes: 0 success, 1 domain error (`error: ...` on stderr), 2 usage
//! error. All outputs are deterministic for identical arguments and inputs;
//! synthetic noise is driven entirely by `--seed`.

use std::error::Error;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use ltm::calibration::{fit_mecsel_params, fit_rabi, fit_singlet_coupling};
use ltm::config::{emit_config, load_config, set_field};
use ltm::io;
use ltm::laser::{extract_threshold, sweep_mecsel_pump, sweep_nv_pump, uniform_grid};
use ltm::odmr::{fit_lorentzians, model_in_watts, synthesize_odmr, SpectralLine};
use ltm::params::ModelParams;
use ltm::sensitivity::{analyze_report, psnl_pointwise, sensor_tradeoff_analysis};

#[derive(Parser)]
#[command(
    name = "ltm",
    version,
    about = "Two-media laser threshold magnetometry: simulate, fit, analyze",
    after_help = "Plot files written by --plot-data use whitespace-separated columns:\n\
                  power curves: pump_w output_w; ODMR fits: frequency_hz output_w model_w;\n\
                  sensitivity sweeps: frequency_hz eta_t_per_sqrthz."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep a pump power and write the laser power curve as CSV
    SimulatePower(SimulatePowerArgs),
    /// Sweep the microwave frequency and write the ODMR spectrum as CSV
    SimulateOdmr(SimulateOdmrArgs),
    /// Extract threshold and slope efficiency from a power-curve CSV
    FitThreshold(FitThresholdArgs),
    /// Fit model parameters to a measured power curve (staged)
    Calibrate(CalibrateArgs),
    /// Fit a sum of Lorentzian dips to an ODMR CSV
    FitOdmr(FitOdmrArgs),
    /// Photon-shot-noise-limited sensitivity and dynamic range
    Sensitivity(SensitivityArgs),
    /// Dynamic-range/sensitivity trade-off across a sensor registry
    CompareSensors(CompareSensorsArgs),
}

#[derive(Args)]
struct ParamArgs {
    /// Model config file (`key = value`, SI units); defaults apply if omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key after loading, e.g. --set nv.Lambda_NV=0
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct OutputArgs {
    /// Output file (stdout if omitted)
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Also write a gnuplot-style .dat file next to the output
    #[arg(long)]
    plot_data: bool,
    /// Omit `#` metadata comments from CSV outputs
    #[arg(long)]
    no_meta: bool,
}

#[derive(Args)]
struct SimulatePowerArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Sweep grid as LO:HI:N in watts, e.g. 0:2.5:101
    #[arg(long)]
    range: String,
    /// Which pump to sweep
    #[arg(long, value_enum, default_value_t = SweepAxisArg::Mecsel)]
    sweep: SweepAxisArg,
    /// Curve label stored in the CSV metadata
    #[arg(long, default_value = "simulated")]
    label: String,
    /// Relative Gaussian noise added to the outputs
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Noise seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
    /// Validate inputs and print the resolved parameters without computing
    #[arg(long)]
    dry_run: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepAxisArg {
    Mecsel,
    Nv,
}

#[derive(Args)]
struct SimulateOdmrArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Frequency grid as LO:HI:N in Hz, e.g. 2.80e9:2.94e9:201
    #[arg(long)]
    range: String,
    /// Resonance centers in Hz, comma separated
    #[arg(long, value_delimiter = ',')]
    centers: Vec<f64>,
    /// Ensemble weights per center (default: equal)
    #[arg(long, value_delimiter = ',')]
    weights: Option<Vec<f64>>,
    #[arg(long, default_value = "odmr")]
    label: String,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
    /// Validate inputs and print the resolved parameters without computing
    #[arg(long)]
    dry_run: bool,
}

#[derive(Args)]
struct FitThresholdArgs {
    /// Power-curve CSV (header pump_w,output_w)
    input: PathBuf,
    /// Number of lasing points in the threshold line fit
    #[arg(long, default_value_t = 10)]
    n_points: usize,
    #[command(flatten)]
    output: OutputArgs,
    /// Validate the input file without fitting
    #[arg(long)]
    dry_run: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum StageArg {
    /// Fit L_eg and G_eg on an NV-unpumped sweep
    Mecsel,
    /// Fit G_S on an off-resonant NV-pumped sweep
    Singlet,
    /// Fit Omega on a resonant sweep
    Rabi,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Measured power-curve CSV
    input: PathBuf,
    #[arg(long, value_enum)]
    stage: StageArg,
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Validate inputs and print the resolved parameters without fitting
    #[arg(long)]
    dry_run: bool,
}

#[derive(Args)]
struct FitOdmrArgs {
    /// ODMR CSV (header frequency_hz,output_w)
    input: PathBuf,
    /// Number of Lorentzian dips to fit
    #[arg(long)]
    k: usize,
    /// Wavelength for the watts → photon-rate conversion, m
    #[arg(long, default_value_t = 1042e-9)]
    wavelength: f64,
    #[command(flatten)]
    output: OutputArgs,
    /// Validate the input file without fitting
    #[arg(long)]
    dry_run: bool,
}

#[derive(Args)]
struct SensitivityArgs {
    /// Fit report JSON from `fit-odmr` (alternative to the explicit inputs)
    #[arg(long, conflicts_with_all = ["fwhm", "contrast", "baseline", "baseline_watts"])]
    fit: Option<PathBuf>,
    /// FWHM linewidth, Hz
    #[arg(long)]
    fwhm: Option<f64>,
    /// ODMR contrast in (0, 1]
    #[arg(long)]
    contrast: Option<f64>,
    /// Baseline photon rate, photons/s
    #[arg(long, conflicts_with = "baseline_watts")]
    baseline: Option<f64>,
    /// Baseline power, W (converted via --wavelength)
    #[arg(long)]
    baseline_watts: Option<f64>,
    /// Wavelength for power → photon-rate conversion, m
    #[arg(long, default_value_t = 1042e-9)]
    wavelength: f64,
    #[command(flatten)]
    output: OutputArgs,
    /// Validate the inputs without computing the report
    #[arg(long)]
    dry_run: bool,
}

#[derive(Args)]
struct CompareSensorsArgs {
    /// Sensor registry CSV
    input: PathBuf,
    /// Name of the reference sensor row (excluded from the trend fit)
    #[arg(long)]
    reference: String,
    #[command(flatten)]
    output: OutputArgs,
    /// Validate the registry without fitting the trend
    #[arg(long)]
    dry_run: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn usage_error(message: String) -> ! {
    // invalid argument values are usage errors (exit 2), like clap's own
    eprintln!("error: {message}");
    std::process::exit(2);
}

fn resolve_params(args: &ParamArgs) -> Result<ModelParams, Box<dyn Error>> {
    let mut params = match &args.config {
        Some(path) => load_config(path)?,
        None => ModelParams::default(),
    };
    for entry in &args.overrides {
        let Some((key, value)) = entry.split_once('=') else {
            usage_error(format!("--set expects KEY=VALUE, got `{entry}`"));
        };
        let parsed: f64 = match value.trim().parse() {
            Ok(v) => v,
            Err(_) => usage_error(format!("--set {key}: `{value}` is not a number")),
        };
        if set_field(&mut params, key.trim(), parsed).is_err() {
            usage_error(format!("--set: unknown parameter key `{}`", key.trim()));
        }
    }
    params.validate()?;
    Ok(params)
}

fn parse_range(range: &str) -> Vec<f64> {
    let parts: Vec<&str> = range.split(':').collect();
    if parts.len() != 3 {
        usage_error(format!("--range expects LO:HI:N, got `{range}`"));
    }
    let lo: f64 = parts[0]
        .parse()
        .unwrap_or_else(|_| usage_error(format!("--range: `{}` is not a number", parts[0])));
    let hi: f64 = parts[1]
        .parse()
        .unwrap_or_else(|_| usage_error(format!("--range: `{}` is not a number", parts[1])));
    let n: usize = parts[2]
        .parse()
        .unwrap_or_else(|_| usage_error(format!("--range: `{}` is not a count", parts[2])));
    if n < 2 || hi <= lo {
        usage_error(format!("--range: need LO < HI and N >= 2, got `{range}`"));
    }
    uniform_grid(lo, hi, n)
}

fn write_output(path: Option<&Path>, content: &str) -> Result<(), Box<dyn Error>> {
    match path {
        Some(p) => fs::write(p, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn plot_path(output: &OutputArgs) -> Option<PathBuf> {
    if !output.plot_data {
        return None;
    }
    match &output.output {
        Some(p) => Some(p.with_extension("dat")),
        None => usage_error("--plot-data needs --output to derive the .dat path".to_string()),
    }
}

fn apply_noise(points: &mut [(f64, f64)], relative_sigma: f64, seed: u64) {
    if relative_sigma == 0.0 {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, relative_sigma).expect("finite sigma");
    for point in points.iter_mut() {
        point.1 = (point.1 * (1.0 + normal.sample(&mut rng))).max(0.0);
    }
}

fn print_dry_run(params: &ModelParams) {
    println!("# resolved parameters (dry run, nothing computed)");
    print!("{}", emit_config(params));
}

fn execute(cli: Cli) -> Result<(), Box<dyn Error>> {
    match cli.command {
        Command::SimulatePower(args) => {
            let params = resolve_params(&args.params)?;
            let grid = parse_range(&args.range);
            if args.dry_run {
                print_dry_run(&params);
                return Ok(());
            }
            let mut curve = match args.sweep {
                SweepAxisArg::Mecsel => sweep_mecsel_pump(&params, &grid)?,
                SweepAxisArg::Nv => sweep_nv_pump(&params, &grid)?,
            };
            curve.label = args.label.clone();
            apply_noise(&mut curve.points, args.noise, args.seed);
            write_output(
                args.output.output.as_deref(),
                &io::write_power_curve_csv(&curve, !args.output.no_meta),
            )?;
            if let Some(dat) = plot_path(&args.output) {
                fs::write(dat, io::power_curve_plot_data(&curve))?;
            }
            Ok(())
        }
        Command::SimulateOdmr(args) => {
            let params = resolve_params(&args.params)?;
            let grid = parse_range(&args.range);
            if args.centers.is_empty() {
                usage_error("--centers needs at least one resonance".to_string());
            }
            let weights = match &args.weights {
                Some(w) => {
                    if w.len() != args.centers.len() {
                        usage_error("--weights must match --centers in length".to_string());
                    }
                    w.clone()
                }
                None => vec![1.0 / args.centers.len() as f64; args.centers.len()],
            };
            let lines: Vec<SpectralLine> = args
                .centers
                .iter()
                .zip(weights.iter())
                .map(|(&center, &weight)| SpectralLine { center, weight })
                .collect();
            if args.dry_run {
                print_dry_run(&params);
                return Ok(());
            }
            let mut spectrum = synthesize_odmr(&params, &grid, &lines)?;
            spectrum.label = args.label.clone();
            apply_noise(&mut spectrum.points, args.noise, args.seed);
            write_output(
                args.output.output.as_deref(),
                &io::write_odmr_csv(&spectrum, !args.output.no_meta),
            )?;
            if let Some(dat) = plot_path(&args.output) {
                fs::write(dat, io::odmr_plot_data(&spectrum, None))?;
            }
            Ok(())
        }
        Command::FitThreshold(args) => {
            let text = fs::read_to_string(&args.input)?;
            let curve = io::parse_power_curve_csv(&text)?;
            if args.dry_run {
                println!(
                    "# dry run: `{}` parses as a {} sweep with {} points",
                    args.input.display(),
                    curve.swept_axis,
                    curve.points.len()
                );
                return Ok(());
            }
            let fit = extract_threshold(&curve, args.n_points)?;
            let json = serde_json::to_string_pretty(&fit)?;
            write_output(args.output.output.as_deref(), &format!("{json}\n"))?;
            Ok(())
        }
        Command::Calibrate(args) => {
            let params = resolve_params(&args.params)?;
            let text = fs::read_to_string(&args.input)?;
            let curve = io::parse_power_curve_csv(&text)?;
            if args.dry_run {
                print_dry_run(&params);
                return Ok(());
            }
            let result = match args.stage {
                StageArg::Mecsel => fit_mecsel_params(&curve, &params)?,
                StageArg::Singlet => fit_singlet_coupling(&curve, &params)?,
                StageArg::Rabi => fit_rabi(&curve, &params)?,
            };
            let json = io::calibration_report_json(&result, text.as_bytes());
            write_output(args.output.output.as_deref(), &format!("{json}\n"))?;
            Ok(())
        }
        Command::FitOdmr(args) => {
            let text = fs::read_to_string(&args.input)?;
            let spectrum = io::parse_odmr_csv(&text)?;
            if args.dry_run {
                println!(
                    "# dry run: `{}` parses as an ODMR spectrum with {} points",
                    args.input.display(),
                    spectrum.points.len()
                );
                return Ok(());
            }
            let fit = fit_lorentzians(&spectrum, args.k, None, args.wavelength)?;
            let json = io::fit_report_json(&fit);
            write_output(args.output.output.as_deref(), &format!("{json}\n"))?;
            if let Some(dat) = plot_path(&args.output) {
                let freqs = spectrum.frequencies();
                let model = model_in_watts(&fit, &freqs, args.wavelength)?;
                fs::write(dat, io::odmr_plot_data(&spectrum, Some(&model)))?;
            }
            Ok(())
        }
        Command::Sensitivity(args) => {
            let constants = ltm::constants::PhysicalConstants::default();
            let fit = if let Some(path) = &args.fit {
                let report: io::FitReport = serde_json::from_str(&fs::read_to_string(path)?)?;
                report.into_fit()
            } else {
                let (Some(fwhm), Some(contrast)) = (args.fwhm, args.contrast) else {
                    usage_error(
                        "pass --fit FILE or --fwhm with --contrast and a baseline".to_string(),
                    );
                };
                let baseline = match (args.baseline, args.baseline_watts) {
                    (Some(rate), _) => rate,
                    (None, Some(watts)) => {
                        watts / ltm::params::photon_energy_with(args.wavelength, &constants)?
                    }
                    (None, None) => {
                        usage_error("pass --baseline (photons/s) or --baseline-watts".to_string())
                    }
                };
                ltm::odmr::LorentzianFit::from_parts(
                    baseline,
                    vec![ltm::odmr::Resonance {
                        center: 0.0,
                        fwhm,
                        contrast,
                    }],
                )
            };
            if args.dry_run {
                println!("# dry run: analyzing {} resonance(s)", fit.resonances.len());
                return Ok(());
            }
            let report = analyze_report(&fit, &constants)?;
            let json = io::sensitivity_report_json(&report);
            write_output(args.output.output.as_deref(), &format!("{json}\n"))?;
            if let Some(dat) = plot_path(&args.output) {
                // dense pointwise sweep over the analyzed dip
                let deepest = fit
                    .resonances
                    .iter()
                    .cloned()
                    .max_by(|a, b| a.contrast.total_cmp(&b.contrast))
                    .expect("non-empty fit");
                let lo = deepest.center - 2.0 * deepest.fwhm;
                let hi = deepest.center + 2.0 * deepest.fwhm;
                let points: Vec<(f64, f64)> = (0..=400)
                    .map(|i| {
                        let nu = lo + (hi - lo) * i as f64 / 400.0;
                        (nu, psnl_pointwise(&fit, nu, &constants))
                    })
                    .collect();
                fs::write(dat, io::sensitivity_plot_data(&points))?;
            }
            Ok(())
        }
        Command::CompareSensors(args) => {
            let text = fs::read_to_string(&args.input)?;
            let registry = io::parse_sensor_registry_csv(&text)?;
            let Some(reference) = registry.iter().find(|p| p.name == args.reference).cloned()
            else {
                usage_error(format!(
                    "--reference: no sensor named `{}` in the registry",
                    args.reference
                ));
            };
            if args.dry_run {
                println!(
                    "# dry run: {} sensors, reference `{}`",
                    registry.len(),
                    reference.name
                );
                return Ok(());
            }
            let others: Vec<_> = registry
                .iter()
                .filter(|p| p.name != args.reference)
                .cloned()
                .collect();
            let analysis = sensor_tradeoff_analysis(&others, &reference)?;
            let json = io::tradeoff_report_json(&analysis);
            write_output(args.output.output.as_deref(), &format!("{json}\n"))?;
            Ok(())
        }
    }
}
