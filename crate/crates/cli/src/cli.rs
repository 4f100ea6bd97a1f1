//! Argument definitions and command dispatch.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use mensura_core::data::{cherry_dataset, load_csv, Dataset, SourceUnits};
use mensura_core::geometry::{
    honer_volume, smalian_volume, solid_volume, stem_volume, LogSegment, SolidModel, HONER_CHERRY,
};
use mensura_core::pi::{exponent_strings, pi_basis, VariableSpec};
use mensura_core::propagate::{
    da_volume, transmit, CrossTerm, ErrorModel, DEFAULT_CV_D, DEFAULT_CV_H, DEFAULT_RHO_DH,
};
use mensura_core::units::{convert, Unit};
use serde::Serialize;

use crate::error::CliError;
use crate::plot;
use crate::report::{analyze, AnalysisOptions, Value};
use crate::table::{sig6, to_csv, to_json};

#[derive(Debug, Parser)]
#[command(name = "mensura", version, about = "Dimensional analysis of tree volume data")]
pub struct Cli {
    /// Output format; `text` is the default for pi, volume and propagate,
    /// `json` for analyze.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write output files into this directory instead of stdout.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Use the delta-method cross term 2ρ|∂V/∂d||∂V/∂h|σdσh.
    #[arg(long, global = true)]
    pub standard_delta: bool,
    /// Unit of diameters in input data and flags.
    #[arg(long, global = true, default_value = "in", value_name = "UNIT")]
    pub dbh_unit: String,
    /// Unit of heights in input data and flags.
    #[arg(long, global = true, default_value = "ft", value_name = "UNIT")]
    pub height_unit: String,
    /// Unit of volumes in input data and output.
    #[arg(long, global = true, default_value = "ft3", value_name = "UNIT")]
    pub volume_unit: String,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Text => "txt",
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the full analysis and print the report.
    Analyze {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        errors: ErrorArgs,
    },
    /// Write a figure as SVG together with the CSV of its points.
    Plot {
        #[arg(value_enum)]
        kind: PlotKind,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        errors: ErrorArgs,
        /// Formulation for pi-scatter.
        #[arg(long, default_value_t = 'a')]
        formulation: char,
        /// Second dataset for species-compare, in the same units.
        #[arg(long, value_name = "PATH")]
        compare: Option<PathBuf>,
        /// Grid points per axis for contours.
        #[arg(long, default_value_t = 41)]
        steps: usize,
        /// Form factor for contours; defaults to the fitted one.
        #[arg(long)]
        gamma: Option<f64>,
    },
    /// Print a basis of dimensionless groups for `name:dimension` variables.
    Pi {
        #[arg(required = true, value_name = "NAME:DIM")]
        vars: Vec<String>,
    },
    /// Evaluate a volume model for one tree.
    Volume {
        #[arg(long, value_enum)]
        solid: Solid,
        /// Diameter, in --dbh-unit.
        #[arg(long)]
        d: Option<f64>,
        /// Height, in --height-unit.
        #[arg(long)]
        h: Option<f64>,
        /// Top/bottom diameter ratio for a frustum.
        #[arg(long)]
        lambda: Option<f64>,
        /// Form factor for `da`.
        #[arg(long)]
        gamma: Option<f64>,
        /// A log as SMALL,LARGE,LENGTH (diameters in --dbh-unit, length in
        /// --height-unit); repeat for a stem.
        #[arg(long = "log", value_name = "SMALL,LARGE,LENGTH")]
        logs: Vec<String>,
    },
    /// Transmitted variance of V for one tree.
    Propagate {
        /// Diameter, in --dbh-unit.
        #[arg(long)]
        d: f64,
        /// Height, in --height-unit.
        #[arg(long)]
        h: f64,
        #[arg(long, default_value_t = 0.302)]
        gamma: f64,
        #[command(flatten)]
        errors: ErrorArgs,
    },
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct DataArgs {
    /// Use an embedded dataset.
    #[arg(long, value_enum)]
    pub builtin: Option<Builtin>,
    /// Read `dbh,height,volume` rows from a CSV file.
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Builtin {
    Cherry,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct ErrorArgs {
    /// Coefficient of variation of diameter measurements.
    #[arg(long, default_value_t = DEFAULT_CV_D)]
    pub cv_d: f64,
    /// Coefficient of variation of height measurements.
    #[arg(long, default_value_t = DEFAULT_CV_H)]
    pub cv_h: f64,
    /// Correlation between diameter and height errors.
    #[arg(long, default_value_t = DEFAULT_RHO_DH, allow_negative_numbers = true)]
    pub rho: f64,
}

impl ErrorArgs {
    fn model(&self) -> Result<ErrorModel, CliError> {
        ErrorModel::new(self.cv_d, self.cv_h, self.rho).map_err(CliError::usage)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlotKind {
    Pairs,
    PiScatter,
    Ellipse,
    Contours,
    SpeciesCompare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Solid {
    Cylinder,
    Cone,
    Frustum,
    Da,
    Honer,
    Smalian,
}

impl Cli {
    fn units(&self) -> Result<SourceUnits, CliError> {
        SourceUnits::parse(&self.dbh_unit, &self.height_unit, &self.volume_unit).map_err(CliError::usage)
    }

    fn cross(&self) -> CrossTerm {
        if self.standard_delta {
            CrossTerm::StandardDelta
        } else {
            CrossTerm::AsPrinted
        }
    }
}

/// The dataset and whether the published cherry figures apply to it.
pub fn load_dataset(data: &DataArgs, units: &SourceUnits) -> Result<(Dataset, bool), CliError> {
    match (&data.builtin, &data.csv) {
        (Some(Builtin::Cherry), _) => Ok((cherry_dataset(), true)),
        (None, Some(path)) => Ok((load_csv(path, units)?, false)),
        (None, None) => Err(CliError::usage("one of --builtin or --csv is required")),
    }
}

fn emit(cli: &Cli, stem: &str, body: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match &cli.out {
        Some(dir) => {
            let path = write_file(dir, stem, body)?;
            writeln!(stdout, "{}", path.display())?;
        }
        None => stdout.write_all(body.as_bytes())?,
    }
    Ok(())
}

fn write_file(dir: &Path, name: &str, body: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::data(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, body).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn render<T: Serialize>(format: Format, value: &T, text: impl FnOnce() -> String) -> Result<String, CliError> {
    match format {
        Format::Json => to_json(value),
        Format::Csv => to_csv(value),
        Format::Text => Ok(text()),
    }
}

/// Execute a parsed command line, writing results to `stdout`.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let units = cli.units()?;
    match &cli.command {
        Command::Analyze { data, errors } => {
            let (ds, references) = load_dataset(data, &units)?;
            let opts = AnalysisOptions { error_model: errors.model()?, cross: cli.cross(), references };
            let report = analyze(&ds, &opts)?;
            let format = cli.format.unwrap_or(Format::Json);
            if format == Format::Text {
                return Err(CliError::usage("analyze supports --format json or csv"));
            }
            let body = render(format, &report, String::new)?;
            emit(cli, &format!("report.{}", format.extension()), &body, stdout)
        }
        Command::Plot { kind, data, errors, formulation, compare, steps, gamma } => {
            let (ds, _) = load_dataset(data, &units)?;
            let output = match kind {
                PlotKind::Pairs => plot::pairs(&ds),
                PlotKind::PiScatter => plot::pi_scatter(&ds, *formulation)?,
                PlotKind::Ellipse => plot::ellipse(&ds)?,
                PlotKind::Contours => {
                    let g = match gamma {
                        Some(g) => *g,
                        None => {
                            let opts = AnalysisOptions {
                                error_model: errors.model()?,
                                cross: cli.cross(),
                                references: false,
                            };
                            analyze(&ds, &opts)?.geometry.gamma0.value
                        }
                    };
                    let grid = plot::dataset_grid(&ds, g, &errors.model()?, cli.cross(), *steps)?;
                    plot::contours(&grid, ds.name())?
                }
                PlotKind::SpeciesCompare => {
                    let path = compare
                        .as_ref()
                        .ok_or_else(|| CliError::usage("species-compare needs --compare PATH"))?;
                    plot::species_compare(&ds, &load_csv(path, &units)?)?
                }
            };
            let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
            for (ext, body) in [("svg", &output.svg), ("csv", &output.csv)] {
                let path = write_file(&dir, &format!("{}.{ext}", output.name), body)?;
                writeln!(stdout, "{}", path.display())?;
            }
            Ok(())
        }
        Command::Pi { vars } => {
            let specs = vars
                .iter()
                .map(|v| VariableSpec::parse(v))
                .collect::<Result<Vec<_>, _>>()
                .map_err(CliError::usage)?;
            let basis = pi_basis(&specs).map_err(CliError::usage)?;
            let format = cli.format.unwrap_or(Format::Text);
            let rows: Vec<BTreeMap<String, String>> = basis
                .groups()
                .iter()
                .map(|g| {
                    let mut row = exponent_strings(g);
                    row.insert("group".into(), g.to_string());
                    row
                })
                .collect();
            let body = match format {
                Format::Csv => to_csv(&rows)?,
                _ => render(format, &basis, || {
                    let plural = |n: usize| if n == 1 { "" } else { "s" };
                    let mut s = format!(
                        "{} variable{}, {} dimensionless group{}\n",
                        specs.len(),
                        plural(specs.len()),
                        basis.len(),
                        plural(basis.len())
                    );
                    for (i, g) in basis.groups().iter().enumerate() {
                        s.push_str(&format!("pi{i} = {g}\n"));
                    }
                    s
                })?,
            };
            emit(cli, &format!("pi.{}", format.extension()), &body, stdout)
        }
        Command::Volume { solid, d, h, lambda, gamma, logs } => {
            let result = volume(*solid, *d, *h, *lambda, *gamma, logs, &units)?;
            let format = cli.format.unwrap_or(Format::Text);
            let body = render(format, &result, || {
                format!("{} volume = {} {}\n", result.solid_name(), sig6(result.volume.value), result.volume.unit)
            })?;
            emit(cli, &format!("volume.{}", format.extension()), &body, stdout)
        }
        Command::Propagate { d, h, gamma, errors } => {
            let ft = Unit::foot();
            let d_ft = convert(*d, &units.dbh, &ft).map_err(CliError::usage)?;
            let h_ft = convert(*h, &units.height, &ft).map_err(CliError::usage)?;
            let em = errors.model()?;
            let b = transmit(*gamma, d_ft, h_ft, &em, cli.cross()).map_err(CliError::usage)?;
            let result = PointBudget {
                d: Value::new(d_ft, "ft"),
                h: Value::new(h_ft, "ft"),
                gamma0: Value::new(*gamma, "1"),
                cross_term: cli.cross(),
                volume: Value::new(da_volume(*gamma, d_ft, h_ft), "ft3"),
                dv_dd: Value::new(b.dv_dd, "ft2"),
                dv_dh: Value::new(b.dv_dh, "ft2"),
                term_d: Value::new(b.term_d, "ft6"),
                term_h: Value::new(b.term_h, "ft6"),
                term_cross: Value::new(b.term_cross, "ft6"),
                total: Value::new(b.total, "ft6"),
                sigma_v: Value::new(b.sigma_v, "ft3"),
            };
            let format = cli.format.unwrap_or(Format::Text);
            let body = render(format, &result, || result.text())?;
            emit(cli, &format!("propagate.{}", format.extension()), &body, stdout)
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VolumeResult {
    pub solid: Solid,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parameter: Option<Value>,
    pub volume: Value,
}

impl VolumeResult {
    fn solid_name(&self) -> &'static str {
        match self.solid {
            Solid::Cylinder => "cylinder",
            Solid::Cone => "cone",
            Solid::Frustum => "frustum",
            Solid::Da => "da",
            Solid::Honer => "honer",
            Solid::Smalian => "smalian",
        }
    }
}

fn parse_log(s: &str, units: &SourceUnits) -> Result<LogSegment, CliError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::usage(format!("--log expects SMALL,LARGE,LENGTH, got '{s}'")))?;
    if nums.len() != 3 {
        return Err(CliError::usage(format!("--log expects SMALL,LARGE,LENGTH, got '{s}'")));
    }
    let ft = Unit::foot();
    let c = |v: f64, u: &Unit| convert(v, u, &ft).map_err(CliError::usage);
    LogSegment::new(c(nums[0], &units.dbh)?, c(nums[1], &units.dbh)?, c(nums[2], &units.height)?)
        .map_err(CliError::usage)
}

/// Evaluate one volume model; inputs are in the flag units and the result
/// in the volume unit.
pub fn volume(
    solid: Solid,
    d: Option<f64>,
    h: Option<f64>,
    lambda: Option<f64>,
    gamma: Option<f64>,
    logs: &[String],
    units: &SourceUnits,
) -> Result<VolumeResult, CliError> {
    let ft = Unit::foot();
    let ft3 = Unit::cubic_foot();
    let need = |v: Option<f64>, flag: &str| v.ok_or_else(|| CliError::usage(format!("--solid {solid:?} needs --{flag}").to_lowercase()));
    let geometry = CliError::usage;
    let (mut d_ft, mut h_ft, mut parameter) = (None, None, None);
    let v_ft3 = if solid == Solid::Smalian {
        if logs.is_empty() {
            return Err(CliError::usage("--solid smalian needs at least one --log"));
        }
        let segs = logs.iter().map(|l| parse_log(l, units)).collect::<Result<Vec<_>, _>>()?;
        if segs.len() == 1 {
            smalian_volume(&segs[0]).map_err(geometry)?
        } else {
            stem_volume(&segs).map_err(geometry)?
        }
    } else {
        let d = convert(need(d, "d")?, &units.dbh, &ft).map_err(CliError::usage)?;
        let h = convert(need(h, "h")?, &units.height, &ft).map_err(CliError::usage)?;
        d_ft = Some(Value::new(d, "ft"));
        h_ft = Some(Value::new(h, "ft"));
        match solid {
            Solid::Cylinder => solid_volume(&SolidModel::cylinder(), d, h).map_err(geometry)?,
            Solid::Cone => solid_volume(&SolidModel::cone(), d, h).map_err(geometry)?,
            Solid::Frustum => {
                let l = need(lambda, "lambda")?;
                parameter = Some(Value::new(l, "1"));
                solid_volume(&SolidModel::frustum(l).map_err(geometry)?, d, h).map_err(geometry)?
            }
            Solid::Da => {
                let g = need(gamma, "gamma")?;
                parameter = Some(Value::new(g, "1"));
                if !(d > 0.0 && h > 0.0) {
                    return Err(CliError::usage("diameter and height must be positive"));
                }
                da_volume(g, d, h)
            }
            Solid::Honer => honer_volume(d * 12.0, h, &HONER_CHERRY).map_err(geometry)?,
            Solid::Smalian => unreachable!("handled above"),
        }
    };
    let out = convert(v_ft3, &ft3, &units.volume).map_err(CliError::usage)?;
    Ok(VolumeResult {
        solid,
        d: d_ft,
        h: h_ft,
        parameter,
        volume: Value::new(out, units.volume.name()),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PointBudget {
    pub d: Value,
    pub h: Value,
    pub gamma0: Value,
    pub cross_term: CrossTerm,
    pub volume: Value,
    pub dv_dd: Value,
    pub dv_dh: Value,
    pub term_d: Value,
    pub term_h: Value,
    pub term_cross: Value,
    pub total: Value,
    pub sigma_v: Value,
}

impl PointBudget {
    fn text(&self) -> String {
        let rows = [
            ("d", &self.d),
            ("h", &self.h),
            ("V", &self.volume),
            ("dV/dd", &self.dv_dd),
            ("dV/dh", &self.dv_dh),
            ("term_d", &self.term_d),
            ("term_h", &self.term_h),
            ("term_cross", &self.term_cross),
            ("var_V", &self.total),
            ("sigma_V", &self.sigma_v),
        ];
        rows.iter()
            .map(|(k, v)| format!("{k:<10} {} {}\n", sig6(v.value), v.unit))
            .collect()
    }
}
