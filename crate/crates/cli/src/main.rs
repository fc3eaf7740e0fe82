//! `esomit` command-line front end.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 I/O error,
//! 4 numerical failure. `ESOMIT_THREADS` caps the worker pool.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use esomit::appendix::{crosscheck_appendix, CrosscheckReport};
use esomit::config::CONVENTION_KEY;
use esomit::eigen::{classify_point, eigen_split_of, es_coupling, DEFAULT_TOLERANCE};
use esomit::export::{
    fmt_f64, write_crosscheck_csv, write_delay_csv, write_eigen_csv, write_json, write_spectrum_csv, write_spectrum_json, write_sweep_csv,
    write_sweep_json, EigenRow,
};
use esomit::feasibility::{
    check_ranges, coupling_from_nanoparticle, fiber_coupling_rate, FiberCouplingSpec, NanoparticleCoupling, NanoparticleSpec, RangeReport,
};
use esomit::presets::{catalog, preset, preset_spectrum, sweep_1d, sweep_phase, Constraint, Grid, Preset, SweepAxis, DEFAULT_PHASES};
use esomit::response::SpectrumTable;
use esomit::units::Dimension;
use esomit::{Cavity, Error, FrequencyConvention, ModelConfig, Phase, RawParams, Result};

#[derive(Parser)]
#[command(
    name = "esomit",
    version,
    about = "Exceptional-surface optomechanics: eigenvalues, OMIT spectra and group delays"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalue splittings and phase class along a J or phi3 grid.
    Eigen(EigenArgs),
    /// Probe transmission spectrum.
    Spectrum(RunArgs),
    /// Group delay with the unwrapped transmission phase.
    Delay(RunArgs),
    /// One spectrum per value of a swept parameter.
    Sweep(SweepArgs),
    /// One spectrum per loop phase phi3.
    PhaseSweep(PhaseArgs),
    /// Compares the direct solve with the closed-form response.
    Crosscheck(RunArgs),
    /// Lists the preset catalog.
    Presets(PresetsArgs),
    /// Checks rates against reported experimental ranges.
    Feasibility(FeasibilityArgs),
}

#[derive(Args)]
struct Source {
    /// Named parameter set.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Configuration file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one parameter, e.g. `--set "J = 0.5 MHz"`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Whether MHz means 1e6 rad/s (angular) or 2pi 1e6 rad/s (cyclic).
    #[arg(long)]
    convention: Option<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Output {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Timestamp recorded in JSON metadata. Nothing time-dependent is written otherwise.
    #[arg(long)]
    timestamp: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    /// Probe detuning grid `min:max:count`, e.g. `-5MHz:5MHz:2001`.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EigenAxis {
    #[value(name = "J", alias = "j")]
    J,
    #[value(name = "phi3")]
    Phi3,
}

#[derive(Args)]
struct EigenArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, value_enum, default_value_t = EigenAxis::J)]
    axis: EigenAxis,
    /// Axis grid `min:max:count`. Defaults to 0..2J* (J) or 0..2pi (phi3) with 201 points.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    source: Source,
    /// Swept parameter: gamma0, gamma1, gamma2, J, t0, phi3, Pc or delta_a.
    #[arg(long)]
    axis: Option<String>,
    /// Axis values `min:max:count`.
    #[arg(long, allow_hyphen_values = true)]
    values: Option<String>,
    /// Tie parameters to the swept one: gamma2-on-line, gamma2-equals-gamma1 or j-on-es. Repeatable.
    #[arg(long = "constraint")]
    constraints: Vec<String>,
    /// Probe detuning grid `min:max:count`.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct PhaseArgs {
    #[command(flatten)]
    source: Source,
    /// Comma-separated loop phases, e.g. `1.3pi,1.5pi`.
    #[arg(long)]
    phases: Option<String>,
    /// Probe detuning grid `min:max:count`.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct PresetsArgs {
    #[arg(long)]
    convention: Option<String>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct FeasibilityArgs {
    #[command(flatten)]
    source: Source,
    /// Nanoparticle polarizability [m^3].
    #[arg(long, requires_all = ["f_at_r", "v_m"])]
    alpha_pol: Option<f64>,
    /// Normalized field at the nanoparticle, in [0, 1].
    #[arg(long)]
    f_at_r: Option<f64>,
    /// Mode volume [m^3].
    #[arg(long)]
    v_m: Option<f64>,
    /// Fiber mode overlap factor.
    #[arg(long, requires = "index")]
    eta: Option<f64>,
    /// Refractive index for the fiber coupling rate.
    #[arg(long)]
    index: Option<f64>,
    #[command(flatten)]
    output: Output,
}

fn parse_convention(text: Option<&str>) -> Result<Option<FrequencyConvention>> {
    text.map(str::parse).transpose()
}

fn custom(raw: RawParams) -> Result<Preset> {
    let config = ModelConfig::from_raw(&raw)?;
    let mhz = config.convention.mhz();
    Ok(Preset {
        name: "custom".to_string(),
        description: "user configuration".to_string(),
        raw,
        config,
        grid: Grid::new(-5.0 * mhz, 5.0 * mhz, 2001)?,
        sweep: None,
        phases: None,
        notes: Vec::new(),
    })
}

/// Builds the parameter set from exactly one of preset or file, plus inline overrides.
fn resolve(source: &Source) -> Result<Preset> {
    let convention = parse_convention(source.convention.as_deref())?;
    let (named, mut raw) = match (&source.preset, &source.config) {
        (Some(name), _) => {
            let p = preset(name, convention.unwrap_or_default())?;
            let raw = p.raw.clone();
            (Some(p), raw)
        }
        (None, Some(path)) => (None, RawParams::parse(&std::fs::read_to_string(path)?)?),
        (None, None) if !source.overrides.is_empty() => (None, RawParams::new()),
        (None, None) => return Err(Error::Invalid("one of --preset, --config or --set is required".to_string())),
    };
    for assignment in &source.overrides {
        raw.set(assignment)?;
    }
    if let Some(c) = convention {
        raw.insert(CONVENTION_KEY, &c.to_string())?;
    }
    match named {
        Some(mut p) => {
            p.config = ModelConfig::from_raw(&raw)?;
            p.raw = raw;
            p.notes.extend(source.overrides.iter().map(|a| format!("override {}", a.trim())));
            Ok(p)
        }
        None => custom(raw),
    }
}

fn probe_grid(p: &Preset, grid: Option<&str>) -> Result<Vec<f64>> {
    match grid {
        Some(text) => Ok(Grid::parse(text, Dimension::Frequency, p.config.convention)?.values()),
        None => Ok(p.grid.values()),
    }
}

fn emit(out: Option<&PathBuf>, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            write(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
        }
    }
    Ok(())
}

fn write_table(table: &SpectrumTable, output: &Output, delay: bool) -> Result<()> {
    emit(output.out.as_ref(), |w| match (output.format, delay) {
        (Format::Csv, false) => write_spectrum_csv(table, w),
        (Format::Csv, true) => write_delay_csv(table, w),
        (Format::Json, _) => write_spectrum_json(table, output.timestamp.as_deref(), w),
    })
}

fn run_spectrum(args: &RunArgs, delay: bool) -> Result<()> {
    let p = resolve(&args.source)?;
    let grid = probe_grid(&p, args.grid.as_deref())?;
    let table = preset_spectrum(&p, &grid)?;
    write_table(&table, &args.output, delay)
}

#[derive(Serialize)]
struct EigenDoc<'a> {
    axis: &'a str,
    rows: &'a [EigenRow],
}

fn run_eigen(args: &EigenArgs) -> Result<()> {
    let p = resolve(&args.source)?;
    let params = &p.config.params;
    let (key, dimension) = match args.axis {
        EigenAxis::J => ("J", Dimension::Frequency),
        EigenAxis::Phi3 => ("phi3_pi", Dimension::Angle),
    };
    let grid = match &args.grid {
        Some(text) => Grid::parse(text, dimension, p.config.convention)?,
        None => match args.axis {
            EigenAxis::J => {
                let j_star = es_coupling(params.t0, params.gamma1, params.gamma2);
                let top = if j_star > 0.0 {
                    2.0 * j_star
                } else {
                    2.0 * p.config.convention.mhz()
                };
                Grid::new(0.0, top, 201)?
            }
            EigenAxis::Phi3 => Grid::new(0.0, 2.0 * std::f64::consts::PI, 201)?,
        },
    };
    let rows: Vec<EigenRow> = grid
        .values()
        .into_iter()
        .map(|v| {
            let mut point = params.clone();
            let axis_value = match args.axis {
                EigenAxis::J => {
                    point.j = v;
                    v
                }
                EigenAxis::Phi3 => {
                    let phase = Phase::from_radians(v);
                    point.phi3 = phase;
                    phase.pi_units()
                }
            };
            EigenRow::new(axis_value, &eigen_split_of(&point), classify_point(&point, DEFAULT_TOLERANCE).kind)
        })
        .collect();
    emit(args.output.out.as_ref(), |w| match args.output.format {
        Format::Csv => write_eigen_csv(key, &rows, w),
        Format::Json => write_json(&EigenDoc { axis: key, rows: &rows }, w),
    })
}

fn run_sweep(args: &SweepArgs) -> Result<()> {
    let p = resolve(&args.source)?;
    let spec = p.sweep.clone();
    let axis: SweepAxis = match (&args.axis, &spec) {
        (Some(a), _) => a.parse()?,
        (None, Some(s)) => s.axis,
        (None, None) => {
            return Err(Error::Invalid(format!(
                "preset `{}` has no sweep; pass --axis and --values",
                p.name
            )))
        }
    };
    let values = match (&args.values, &spec) {
        (Some(text), _) => Grid::parse(text, axis.dimension(), p.config.convention)?.values(),
        (None, Some(s)) if s.axis == axis => s.grid.values(),
        _ => return Err(Error::Invalid(format!("--values is required to sweep {axis}"))),
    };
    let constraints: Vec<Constraint> = if !args.constraints.is_empty() {
        args.constraints.iter().map(|c| c.parse()).collect::<Result<_>>()?
    } else {
        spec.filter(|s| s.axis == axis).map(|s| s.constraints).unwrap_or_default()
    };
    let grid = probe_grid(&p, args.grid.as_deref())?;
    let tables = sweep_1d(&p, axis, &values, &constraints, &grid)?;
    write_sweep(axis.key(), &values, &tables, &args.output)
}

fn write_sweep(axis: &str, values: &[f64], tables: &[SpectrumTable], output: &Output) -> Result<()> {
    emit(output.out.as_ref(), |w| match output.format {
        Format::Csv => write_sweep_csv(axis, values, tables, w),
        Format::Json => write_sweep_json(axis, values, tables, output.timestamp.as_deref(), w),
    })
}

fn run_phase_sweep(args: &PhaseArgs) -> Result<()> {
    let p = resolve(&args.source)?;
    let phases: Vec<Phase> = match (&args.phases, &p.phases) {
        (Some(text), _) => text.split(',').map(|s| Phase::parse("phases", s)).collect::<Result<_>>()?,
        (None, Some(list)) => list.clone(),
        (None, None) => DEFAULT_PHASES.iter().map(|&x| Phase::from_pi(x)).collect(),
    };
    let grid = probe_grid(&p, args.grid.as_deref())?;
    let tables = sweep_phase(&p, &phases, &grid)?;
    let values: Vec<f64> = phases.iter().map(|ph| ph.pi_units()).collect();
    write_sweep("phi3_pi", &values, &tables, &args.output)
}

fn run_crosscheck(args: &RunArgs) -> Result<()> {
    let p = resolve(&args.source)?;
    let grid = probe_grid(&p, args.grid.as_deref())?;
    let report: CrosscheckReport = crosscheck_appendix(&Cavity::new(p.config.params.clone()), &p.config.drive, &grid)?;
    eprintln!(
        "{}: {:?}, cw max {} median {}, ccw max {} median {}",
        p.name,
        report.verdict,
        fmt_f64(report.cw.max),
        fmt_f64(report.cw.median),
        fmt_f64(report.ccw.max),
        fmt_f64(report.ccw.median)
    );
    emit(args.output.out.as_ref(), |w| match args.output.format {
        Format::Csv => write_crosscheck_csv(&report, w),
        Format::Json => write_json(&report, w),
    })
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn run_presets(args: &PresetsArgs) -> Result<()> {
    let convention = parse_convention(args.convention.as_deref())?.unwrap_or_default();
    let presets = catalog(convention)?;
    emit(args.output.out.as_ref(), |w| match args.output.format {
        Format::Json => write_json(&presets, w),
        Format::Csv => {
            let mut wtr = csv::Writer::from_writer(w);
            wtr.write_record(["name", "class", "J", "gamma1", "gamma2", "t0", "phi3_pi", "description"])
                .map_err(csv_error)?;
            for p in &presets {
                let q = &p.config.params;
                wtr.write_record([
                    p.name.clone(),
                    classify_point(q, DEFAULT_TOLERANCE).kind.label().to_string(),
                    fmt_f64(q.j),
                    fmt_f64(q.gamma1),
                    fmt_f64(q.gamma2),
                    fmt_f64(q.t0),
                    fmt_f64(q.phi3.pi_units()),
                    p.description.clone(),
                ])
                .map_err(csv_error)?;
            }
            wtr.flush()?;
            Ok(())
        }
    })
}

#[derive(Serialize)]
struct FeasibilityDoc {
    ranges: RangeReport,
    nanoparticle: Option<NanoparticleCoupling>,
    fiber_gamma: Option<f64>,
}

fn run_feasibility(args: &FeasibilityArgs) -> Result<()> {
    let p = resolve(&args.source)?;
    let params = &p.config.params;
    let nanoparticle = match (args.alpha_pol, args.f_at_r, args.v_m) {
        (Some(alpha_pol), Some(f_at_r), Some(v_m)) => Some(coupling_from_nanoparticle(
            &NanoparticleSpec { alpha_pol, f_at_r, v_m },
            params.omega0,
        )?),
        _ => None,
    };
    let fiber_gamma = match (args.eta, args.index) {
        (Some(eta), Some(n)) => Some(fiber_coupling_rate(&FiberCouplingSpec {
            eta,
            n,
            radius: params.radius,
        })?),
        _ => None,
    };
    let ranges = check_ranges(params, p.config.convention);
    for w in &ranges.warnings {
        eprintln!("warning: {w}");
    }
    let doc = FeasibilityDoc {
        ranges,
        nanoparticle,
        fiber_gamma,
    };
    emit(args.output.out.as_ref(), |w| match args.output.format {
        Format::Json => write_json(&doc, w),
        Format::Csv => {
            let flag = |b: Option<bool>| b.map(|b| b.to_string()).unwrap_or_default();
            let mut wtr = csv::Writer::from_writer(w);
            wtr.write_record(["range", "gamma1_in", "gamma2_in", "j_in"]).map_err(csv_error)?;
            for r in &doc.ranges.rows {
                wtr.write_record([r.label.clone(), flag(r.gamma1_in), flag(r.gamma2_in), flag(r.j_in)])
                    .map_err(csv_error)?;
            }
            wtr.write_record([
                "overall".to_string(),
                doc.ranges.gamma1_in_range.to_string(),
                doc.ranges.gamma2_in_range.to_string(),
                doc.ranges.j_in_range.to_string(),
            ])
            .map_err(csv_error)?;
            wtr.flush()?;
            Ok(())
        }
    })
}

fn configure_threads() -> Result<()> {
    let Ok(text) = std::env::var("ESOMIT_THREADS") else {
        return Ok(());
    };
    let threads: usize = text
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Invalid(format!("ESOMIT_THREADS must be a positive integer, got `{text}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Invalid(e.to_string()))
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => 3,
        Error::Row { source, .. } => exit_code(source),
        e if e.is_numerical() => 4,
        _ => 2,
    }
}

fn run(cli: &Cli) -> Result<()> {
    configure_threads()?;
    match &cli.command {
        Command::Eigen(a) => run_eigen(a),
        Command::Spectrum(a) => run_spectrum(a, false),
        Command::Delay(a) => run_spectrum(a, true),
        Command::Sweep(a) => run_sweep(a),
        Command::PhaseSweep(a) => run_phase_sweep(a),
        Command::Crosscheck(a) => run_crosscheck(a),
        Command::Presets(a) => run_presets(a),
        Command::Feasibility(a) => run_feasibility(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
