//! Command-line frontend.
//!
//! Single results are printed as JSON, tables as CSV. Exit codes: 0 on
//! success, 1 for domain, config and I/O errors, 2 for numerical failures,
//! 64 for usage errors.

pub mod sweep;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::hydrogen::{
    calibrate, hydrogen_gaussian_rate, hydrogen_gaussian_rate_quadrature, hydrogen_series_constants_with,
    velocity_spread, FitConfig, HbarConvention,
};
use crate::quad::QuadratureSpec;
use crate::rates::{
    classical_rate, coherent_pair_rate, excite_rate, large_mass_rate, spont_rate, spont_rate_series, RateResult,
};
use crate::templates::{critical_kinematics, series_constants, t_excite, t_spont, threshold_by_bisection};
use crate::units::{DetectorParams, HydrogenParams, KeyValueConfig, UnitSystem};
use crate::wavepackets::{fraction_above, MomentumDensity, Packet};

use sweep::{emit_csv, evaluate_rows, write_csv, Grid, Scale, SweepResult, VERSION};

pub const JOBS_ENV: &str = "UDW_DELOCAL_JOBS";
const EXIT_USAGE: i32 = 64;

#[derive(Parser, Debug)]
#[command(
    name = "udw-delocal",
    version,
    about = "Rates of delocalizing Unruh-deWitt detectors"
)]
struct Cli {
    /// Relative tolerance of every quadrature.
    #[arg(long, global = true, default_value_t = 1e-10)]
    rel_tol: f64,
    /// Subdivision budget of every quadrature.
    #[arg(long = "max-subdiv", global = true, default_value_t = 1 << 16)]
    max_subdiv: usize,
    /// Flat `key = value` parameter file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Series constants and critical kinematics as JSON.
    Constants(DetectorArgs),
    /// Template values on a momentum grid as CSV.
    Template {
        #[arg(long, value_enum)]
        kind: TemplateKind,
        /// `start:stop:points[:log]`
        #[arg(long = "p-grid")]
        p_grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        detector: DetectorArgs,
    },
    /// One rate as JSON.
    Rate {
        #[arg(value_enum)]
        kind: RateKind,
        #[command(flatten)]
        detector: DetectorArgs,
        #[command(flatten)]
        density: DensityArgs,
    },
    /// Excitation threshold, closed form and by bisection.
    Threshold {
        #[command(flatten)]
        detector: DetectorArgs,
        #[command(flatten)]
        density: DensityArgs,
    },
    /// Harmonic hydrogen atom (SI units).
    Hydrogen {
        #[command(subcommand)]
        command: HydrogenCommand,
    },
    /// Rates over a one-parameter grid as CSV.
    Sweep(SweepArgs),
}

#[derive(Subcommand, Debug)]
enum HydrogenCommand {
    /// C, D, p0, L0, v0 and the fit residual.
    Constants(HydrogenArgs),
    /// Series rate of a Gaussian packet of width L (m).
    Rate {
        #[arg(long = "L")]
        width: f64,
        /// Length convention for L0 = hbar'/p0.
        #[arg(long, default_value = "planck")]
        convention: String,
        /// Also integrate the full template over the packet.
        #[arg(long)]
        quadrature: bool,
        #[command(flatten)]
        hydrogen: HydrogenArgs,
    },
    /// Scan Omega (and the recoil-mass convention) against the reference C and D.
    Calibrate(HydrogenArgs),
}

#[derive(Args, Debug, Clone, Default)]
struct DetectorArgs {
    /// Energy gap E.
    #[arg(long = "E", allow_hyphen_values = true)]
    gap: Option<f64>,
    /// Detector mass M.
    #[arg(long = "M", allow_hyphen_values = true)]
    mass: Option<f64>,
    /// Wave speed c.
    #[arg(long = "c", allow_hyphen_values = true)]
    wave_speed: Option<f64>,
    /// Coupling lambda.
    #[arg(long = "lambda", allow_hyphen_values = true)]
    coupling: Option<f64>,
}

#[derive(Args, Debug, Clone, Default)]
struct DensityArgs {
    /// gaussian, hermite111, coherent_pair or mixed_pair.
    #[arg(long)]
    density: Option<String>,
    /// Packet width L.
    #[arg(long = "L", allow_hyphen_values = true)]
    width: Option<f64>,
    /// Half separation x0 of a pair.
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<f64>,
    #[arg(long = "alpha-re", allow_hyphen_values = true)]
    alpha_re: Option<f64>,
    #[arg(long = "alpha-im", allow_hyphen_values = true)]
    alpha_im: Option<f64>,
}

#[derive(Args, Debug, Clone, Default)]
struct HydrogenArgs {
    /// Gap hbar*Omega in eV.
    #[arg(long = "omega-eV")]
    omega_ev: Option<f64>,
    /// Omega in rad/s.
    #[arg(long = "omega")]
    omega: Option<f64>,
    /// total, reduced or electron.
    #[arg(long)]
    recoil: Option<String>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, value_enum)]
    var: SweepVar,
    #[arg(long, value_enum, default_value = "linear")]
    scale: Scale,
    #[arg(long, allow_hyphen_values = true)]
    start: f64,
    #[arg(long, allow_hyphen_values = true)]
    stop: f64,
    #[arg(long)]
    points: usize,
    /// Comma-separated rate kinds; may be empty.
    #[arg(long = "rate", value_enum, value_delimiter = ',', num_args = 0..)]
    rates: Vec<SweepRate>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to $UDW_DELOCAL_JOBS, then the core count.
    #[arg(long)]
    jobs: Option<usize>,
    /// L0 convention for hydrogen series rates.
    #[arg(long, default_value = "planck")]
    convention: String,
    #[command(flatten)]
    detector: DetectorArgs,
    #[command(flatten)]
    density: DensityArgs,
    #[command(flatten)]
    hydrogen: HydrogenArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TemplateKind {
    Spont,
    Excite,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum RateKind {
    Spont,
    Series,
    Excite,
    Classical,
    LargeMass,
    Coherent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVar {
    #[value(name = "L")]
    L,
    #[value(name = "M")]
    M,
    #[value(name = "E")]
    E,
    #[value(name = "c")]
    C,
    #[value(name = "x0")]
    X0,
    #[value(name = "alpha_re")]
    AlphaRe,
    #[value(name = "alpha_im")]
    AlphaIm,
    #[value(name = "omega")]
    Omega,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SweepRate {
    Spont,
    Series,
    Excite,
    Classical,
    LargeMass,
    Coherent,
    HydrogenSeries,
    HydrogenQuadrature,
}

impl SweepRate {
    fn name(self) -> &'static str {
        match self {
            SweepRate::Spont => "spont",
            SweepRate::Series => "series",
            SweepRate::Excite => "excite",
            SweepRate::Classical => "classical",
            SweepRate::LargeMass => "large_mass",
            SweepRate::Coherent => "coherent",
            SweepRate::HydrogenSeries => "hydrogen_series",
            SweepRate::HydrogenQuadrature => "hydrogen_quadrature",
        }
    }

    fn is_hydrogen(self) -> bool {
        matches!(self, SweepRate::HydrogenSeries | SweepRate::HydrogenQuadrature)
    }

    /// Column names with units.
    fn columns(self) -> Vec<String> {
        let n = self.name();
        let unit = if self.is_hydrogen() { "1/s" } else { "E" };
        let mut cols = vec![format!("{n}_rate [{unit}]"), format!("{n}_error [rel]")];
        match self {
            SweepRate::Spont | SweepRate::Series | SweepRate::Coherent => cols.push(format!("{n}_moment2 [E^2]")),
            SweepRate::Excite => cols.push(format!("{n}_threshold_fraction [1]")),
            SweepRate::HydrogenSeries => cols.push(format!("{n}_relative_increase [1]")),
            _ => {}
        }
        cols
    }
}

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_numeric() {
                2
            } else {
                1
            }
        }
    }
}

struct Context {
    spec: QuadratureSpec,
    file: KeyValueConfig,
}

impl Context {
    fn new(cli: &Cli) -> Result<Self> {
        let spec = QuadratureSpec {
            rel_tol: cli.rel_tol,
            max_subdivisions: cli.max_subdiv,
            ..QuadratureSpec::default()
        };
        let file = match &cli.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                KeyValueConfig::parse(&text)?
            }
            None => KeyValueConfig::default(),
        };
        Ok(Self { spec, file })
    }

    /// Natural-unit configuration: defaults, then the file, then flags.
    fn natural(&self, det: &DetectorArgs, dens: &DensityArgs) -> Result<KeyValueConfig> {
        if self.file.unit_system()? == Some(UnitSystem::Si) {
            return Err(Error::Config("the scalar model needs unit_system = natural".into()));
        }
        let mut cfg = DetectorParams::default().to_config();
        cfg.merge(&self.file);
        cfg.set("unit_system", UnitSystem::Natural.to_string());
        for (key, v) in [
            ("gap_E", det.gap),
            ("mass_M", det.mass),
            ("wave_speed_c", det.wave_speed),
            ("coupling_lambda", det.coupling),
            ("L", dens.width),
            ("x0", dens.x0),
            ("alpha_re", dens.alpha_re),
            ("alpha_im", dens.alpha_im),
        ] {
            if let Some(v) = v {
                cfg.set_f64(key, v);
            }
        }
        if let Some(name) = &dens.density {
            cfg.set("density", name.clone());
        }
        for key in ["L", "x0"] {
            cfg.reject_suffixed(key)?;
        }
        Ok(cfg)
    }

    fn si(&self, args: &HydrogenArgs) -> Result<KeyValueConfig> {
        if self.file.unit_system()? == Some(UnitSystem::Natural) {
            return Err(Error::Config("the hydrogen model needs unit_system = si".into()));
        }
        let mut cfg = self.file.clone();
        cfg.set("unit_system", UnitSystem::Si.to_string());
        match (args.omega_ev, args.omega) {
            (Some(_), Some(_)) => return Err(Error::Config("give --omega-eV or --omega, not both".into())),
            (Some(ev), None) => {
                cfg.remove("omega_rad_s");
                cfg.set_f64("omega_eV", ev);
            }
            (None, Some(w)) => {
                cfg.remove("omega_eV");
                cfg.set_f64("omega_rad_s", w);
            }
            (None, None) => {}
        }
        if let Some(r) = &args.recoil {
            cfg.set("recoil_mass", r.clone());
        }
        if cfg.get("L").is_some() {
            return Err(Error::Config("hydrogen widths are in metres: use `L_m`".into()));
        }
        Ok(cfg)
    }
}

fn density_from_config(cfg: &KeyValueConfig) -> Result<MomentumDensity> {
    let width = cfg
        .get_f64("L")?
        .ok_or_else(|| Error::Config("missing packet width `L` (flag --L)".into()))?;
    let x0 = cfg.get_f64("x0")?.unwrap_or(0.0);
    let alpha = Complex64::new(
        cfg.get_f64("alpha_re")?.unwrap_or(1.0),
        cfg.get_f64("alpha_im")?.unwrap_or(0.0),
    );
    let packet = match cfg.get("density").unwrap_or("gaussian") {
        "gaussian" => Packet::Gaussian { width },
        "hermite111" => Packet::Hermite111 { width },
        "coherent_pair" => Packet::CoherentPair {
            width,
            x0,
            alpha_re: alpha.re,
            alpha_im: alpha.im,
        },
        "mixed_pair" => Packet::MixedPair { width, x0 },
        other => return Err(Error::Config(format!("unknown density `{other}`"))),
    };
    MomentumDensity::from_packet(packet)
}

fn print_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    writeln!(out, "{text}").map_err(|source| Error::Io {
        path: "<stdout>".into(),
        source,
    })
}

fn write_table(result: &SweepResult, path: Option<&PathBuf>, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => emit_csv(result, p),
        None => write_csv(result, out).map_err(|source| Error::Io {
            path: "<stdout>".into(),
            source,
        }),
    }
}

fn parse_p_grid(text: &str) -> Result<Grid> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || Error::Config(format!("--p-grid expects start:stop:points[:log|linear], got `{text}`"));
    if !(3..=4).contains(&parts.len()) {
        return Err(bad());
    }
    let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let stop: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let points: usize = parts[2].trim().parse().map_err(|_| bad())?;
    let scale = match parts.get(3).map(|s| s.trim()) {
        None | Some("linear") => Scale::Linear,
        Some("log") => Scale::Log,
        Some(_) => return Err(bad()),
    };
    Grid::new(start, stop, points, scale)
}

fn rate_json(kind: &str, r: &RateResult) -> Value {
    let mut v = serde_json::to_value(r).expect("serializable");
    v["kind"] = json!(kind);
    v
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let ctx = Context::new(&cli)?;
    match &cli.command {
        Command::Constants(det) => {
            let cfg = ctx.natural(det, &DensityArgs::default())?;
            let params = DetectorParams::from_config(&cfg)?;
            let sc = series_constants(&params)?;
            let kin = critical_kinematics(&params);
            print_json(
                out,
                &json!({
                    "E": params.gap, "M": params.mass, "c": params.wave_speed, "lambda": params.coupling,
                    "A": sc.a, "B": sc.b, "p0": sc.p0, "L0": sc.l0,
                    "v_crit": kin.v_crit, "p_threshold": kin.p_threshold,
                }),
            )
        }
        Command::Template {
            kind,
            p_grid,
            out: path,
            detector,
        } => {
            let mut cfg = ctx.natural(detector, &DensityArgs::default())?;
            let params = DetectorParams::from_config(&cfg)?;
            let grid = parse_p_grid(p_grid)?;
            let (name, f): (&str, fn(f64, &DetectorParams) -> f64) = match kind {
                TemplateKind::Spont => ("T_spont", t_spont),
                TemplateKind::Excite => ("T_excite", t_excite),
            };
            cfg.set("template", name);
            cfg.set("p_grid", p_grid.clone());
            let rows = grid.values().into_iter().map(|p| vec![p, f(p, &params)]).collect();
            let table = SweepResult {
                version: VERSION.into(),
                config_hash: cfg.canonical_hash(),
                columns: vec!["p [E]".into(), format!("{name} [1]")],
                rows,
            };
            write_table(&table, path.as_ref(), out)
        }
        Command::Rate {
            kind,
            detector,
            density,
        } => {
            let cfg = ctx.natural(detector, density)?;
            let params = DetectorParams::from_config(&cfg)?;
            let result = match kind {
                RateKind::Classical => classical_rate(&params),
                RateKind::LargeMass => large_mass_rate(&params),
                RateKind::Spont => spont_rate(&density_from_config(&cfg)?, &params, &ctx.spec)?,
                RateKind::Series => spont_rate_series(&density_from_config(&cfg)?, &params, &ctx.spec)?,
                RateKind::Excite => excite_rate(&density_from_config(&cfg)?, &params, &ctx.spec)?,
                RateKind::Coherent => {
                    let (width, x0, alpha) = coherent_inputs(&cfg)?;
                    coherent_pair_rate(width, x0, alpha, &params)?
                }
            };
            let name = kind.to_possible_value().unwrap().get_name().to_string();
            print_json(out, &rate_json(&name, &result))
        }
        Command::Threshold { detector, density } => {
            let cfg = ctx.natural(detector, density)?;
            let params = DetectorParams::from_config(&cfg)?;
            let kin = critical_kinematics(&params);
            let mut v = json!({
                "v_crit": kin.v_crit,
                "p_threshold": kin.p_threshold,
                "p_threshold_bisection": threshold_by_bisection(&params),
            });
            if cfg.get("L").is_some() {
                let d = density_from_config(&cfg)?;
                v["fraction_above"] = json!(fraction_above(&d, kin.p_threshold, &ctx.spec)?);
            }
            print_json(out, &v)
        }
        Command::Hydrogen { command } => run_hydrogen(&ctx, command, out),
        Command::Sweep(args) => run_sweep(&ctx, &cli, args, out),
    }
}

fn coherent_inputs(cfg: &KeyValueConfig) -> Result<(f64, f64, Complex64)> {
    Ok((
        cfg.get_f64("L")?
            .ok_or_else(|| Error::Config("missing packet width `L` (flag --L)".into()))?,
        cfg.get_f64("x0")?.unwrap_or(0.0),
        Complex64::new(
            cfg.get_f64("alpha_re")?.unwrap_or(1.0),
            cfg.get_f64("alpha_im")?.unwrap_or(0.0),
        ),
    ))
}

fn run_hydrogen(ctx: &Context, command: &HydrogenCommand, out: &mut dyn Write) -> Result<()> {
    match command {
        HydrogenCommand::Constants(args) => {
            let hp = HydrogenParams::from_config(&ctx.si(args)?)?;
            let s = hydrogen_series_constants_with(&hp, &FitConfig::default(), &ctx.spec)?;
            print_json(
                out,
                &json!({
                    "omega_rad_s": hp.omega, "gap_eV": hp.gap_ev(), "recoil_mass": hp.recoil,
                    "C": s.c, "D": s.d, "p0": s.p0, "L0": s.l0, "L0_planck": s.l0_planck, "v0": s.v0,
                    "fit_residual": s.residual, "fit_quartic": s.quartic,
                }),
            )
        }
        HydrogenCommand::Rate {
            width,
            convention,
            quadrature,
            hydrogen,
        } => {
            let hp = HydrogenParams::from_config(&ctx.si(hydrogen)?)?;
            let convention: HbarConvention = convention.parse()?;
            let s = hydrogen_series_constants_with(&hp, &FitConfig::default(), &ctx.spec)?;
            let r = hydrogen_gaussian_rate(*width, &hp, &s, convention)?;
            let mut v = serde_json::to_value(&r).expect("serializable");
            v["fit_residual"] = json!(s.residual);
            v["velocity_spread"] = json!(velocity_spread(*width, &hp, convention));
            if *quadrature {
                v["quadrature"] = json!(hydrogen_gaussian_rate_quadrature(*width, &hp, &ctx.spec)?);
            }
            print_json(out, &v)
        }
        HydrogenCommand::Calibrate(args) => {
            let hp = HydrogenParams::from_config(&ctx.si(args)?)?;
            print_json(out, &calibrate(&hp, &ctx.spec)?)
        }
    }
}

fn default_jobs() -> usize {
    std::env::var(JOBS_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .filter(|&n: &usize| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn run_sweep(ctx: &Context, cli: &Cli, args: &SweepArgs, out: &mut dyn Write) -> Result<()> {
    let grid = Grid::new(args.start, args.stop, args.points, args.scale)?;
    let hydrogen = args.rates.iter().any(|r| r.is_hydrogen());
    let scalar = args.rates.iter().any(|r| !r.is_hydrogen());
    if hydrogen && scalar {
        return Err(Error::Config("hydrogen and scalar rates cannot share a sweep".into()));
    }
    let var_ok = match args.var {
        SweepVar::Omega => !scalar,
        SweepVar::M | SweepVar::E | SweepVar::C | SweepVar::X0 | SweepVar::AlphaRe | SweepVar::AlphaIm => !hydrogen,
        SweepVar::L => true,
    };
    if !var_ok {
        return Err(Error::Config(format!(
            "--var {:?} does not apply to the requested rates",
            args.var
        )));
    }
    let var_name = args.var.to_possible_value().unwrap().get_name().to_string();

    let mut cfg = if hydrogen {
        let mut c = ctx.si(&args.hydrogen)?;
        HydrogenParams::from_config(&c)?;
        c.set("L0_convention", args.convention.clone());
        if let Some(l) = args.density.width {
            c.set_f64("L_m", l);
        }
        c
    } else {
        let c = ctx.natural(&args.detector, &args.density)?;
        DetectorParams::from_config(&c)?;
        c
    };
    cfg.set("sweep_var", var_name.clone());
    cfg.set("sweep_scale", format!("{:?}", args.scale).to_lowercase());
    cfg.set_f64("sweep_start", args.start);
    cfg.set_f64("sweep_stop", args.stop);
    cfg.set("sweep_points", args.points.to_string());
    cfg.set(
        "sweep_rates",
        args.rates.iter().map(|r| r.name()).collect::<Vec<_>>().join(","),
    );
    cfg.set_f64("rel_tol", cli.rel_tol);
    cfg.set("max_subdiv", cli.max_subdiv.to_string());

    let unit = match (args.var, hydrogen) {
        (SweepVar::L, true) => "m",
        (SweepVar::Omega, _) => "rad/s",
        (SweepVar::L | SweepVar::X0, false) => "1/E",
        (SweepVar::E, _) => "E",
        (SweepVar::M, _) => "E/c^2",
        (SweepVar::C, _) => "c",
        _ => "1",
    };
    let mut columns = vec![format!("{var_name} [{unit}]")];
    for r in &args.rates {
        columns.extend(r.columns());
    }
    let values = if args.rates.is_empty() {
        Vec::new()
    } else {
        grid.values()
    };
    let convention: HbarConvention = args.convention.parse()?;
    let jobs = args.jobs.unwrap_or_else(default_jobs);
    let spec = ctx.spec;
    let base = cfg.clone();
    let rows = evaluate_rows(&values, jobs, |x| {
        let mut point = base.clone();
        let key = match (args.var, hydrogen) {
            (SweepVar::L, true) => "L_m",
            (SweepVar::L, false) => "L",
            (SweepVar::M, _) => "mass_M",
            (SweepVar::E, _) => "gap_E",
            (SweepVar::C, _) => "wave_speed_c",
            (SweepVar::X0, _) => "x0",
            (SweepVar::AlphaRe, _) => "alpha_re",
            (SweepVar::AlphaIm, _) => "alpha_im",
            (SweepVar::Omega, _) => "omega_rad_s",
        };
        if key == "omega_rad_s" {
            point.remove("omega_eV");
        }
        point.set_f64(key, x);
        let mut row = vec![x];
        for &r in &args.rates {
            row.extend(sweep_point(r, &point, convention, &spec)?);
        }
        Ok(row)
    })?;
    let table = SweepResult {
        version: VERSION.into(),
        config_hash: cfg.canonical_hash(),
        columns,
        rows,
    };
    write_table(&table, args.out.as_ref(), out)
}

fn sweep_point(
    kind: SweepRate,
    cfg: &KeyValueConfig,
    convention: HbarConvention,
    spec: &QuadratureSpec,
) -> Result<Vec<f64>> {
    if kind.is_hydrogen() {
        let hp = HydrogenParams::from_config(cfg)?;
        let width = cfg
            .get_f64("L_m")?
            .ok_or_else(|| Error::Config("missing packet width `L_m` (flag --L, metres)".into()))?;
        return Ok(match kind {
            SweepRate::HydrogenSeries => {
                let s = hydrogen_series_constants_with(&hp, &FitConfig::default(), spec)?;
                let r = hydrogen_gaussian_rate(width, &hp, &s, convention)?;
                vec![r.result.rate, 0.0, r.relative_increase]
            }
            _ => {
                let r = hydrogen_gaussian_rate_quadrature(width, &hp, spec)?;
                vec![r.rate, r.estimated_error]
            }
        });
    }
    let params = DetectorParams::from_config(cfg)?;
    let with_moment = |r: RateResult| vec![r.rate, r.estimated_error, r.diagnostics.moment2.unwrap_or(f64::NAN)];
    Ok(match kind {
        SweepRate::Spont => with_moment(spont_rate(&density_from_config(cfg)?, &params, spec)?),
        SweepRate::Series => with_moment(spont_rate_series(&density_from_config(cfg)?, &params, spec)?),
        SweepRate::Coherent => {
            let (width, x0, alpha) = coherent_inputs(cfg)?;
            with_moment(coherent_pair_rate(width, x0, alpha, &params)?)
        }
        SweepRate::Excite => {
            let r = excite_rate(&density_from_config(cfg)?, &params, spec)?;
            vec![
                r.rate,
                r.estimated_error,
                r.diagnostics.threshold_fraction.unwrap_or(f64::NAN),
            ]
        }
        SweepRate::Classical => {
            let r = classical_rate(&params);
            vec![r.rate, r.estimated_error]
        }
        SweepRate::LargeMass => {
            let r = large_mass_rate(&params);
            vec![r.rate, r.estimated_error]
        }
        SweepRate::HydrogenSeries | SweepRate::HydrogenQuadrature => unreachable!(),
    })
}
