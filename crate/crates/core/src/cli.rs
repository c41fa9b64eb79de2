//! Command-line front end.
//!
//! Every subcommand writes either CSV (header row, `{:.16e}` floats) or JSON
//! with a `header` block that echoes the resolved parameters and every
//! numeric default. Exit status: 0 success, 1 bad arguments, 2 numeric failure.

use std::f64::consts::PI;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::continuation::{
    classify_levels_with, find_exceptional_with, locate_hint, sweep_with, ClassifyOptions, EpOptions, Parameter,
    SweepOptions,
};
use crate::error::Error;
use crate::model::{scale_params, PhysicalParams, ScaledParams};
use crate::oracle::{oracle_spectrum, GridSpec};
use crate::secular::{eval_m_scaled, eval_n_scaled, SigmaTau};
use crate::shallow::{solve_levels, ShallowParams};
use crate::spectrum::{default_r_max, scan_roots_with, Root, ScanOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "ptwell", version, about = "Real spectrum of the PT-symmetric square well")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Real roots R_n below R_max.
    Spectrum {
        #[command(flatten)]
        params: ParamArgs,
        /// Window end; defaults to 8.5 pi / max(lambda, 1).
        #[arg(long)]
        rmax: Option<f64>,
        #[arg(long, default_value_t = 1)]
        refine: usize,
        #[arg(long, default_value_t = 1e-9)]
        accept_residual: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Follows the real roots while Z or lambda changes.
    Sweep {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_parser = parse_parameter)]
        param: Parameter,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long, default_value_t = 41)]
        steps: usize,
        #[arg(long)]
        rmax: Option<f64>,
        #[arg(long, default_value_t = 10)]
        max_depth: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Locates an exceptional point (double real root) from a hint.
    Ep {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_parser = parse_parameter)]
        free: Parameter,
        /// Starting value of the free parameter.
        #[arg(long)]
        hint: f64,
        /// Starting R; found from a scan at the hint when omitted.
        #[arg(long)]
        r_hint: Option<f64>,
        #[arg(long)]
        rmax: Option<f64>,
        #[arg(long, default_value_t = 100)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Flags each level robust or fragile by continuation in Z.
    Classify {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 50.0)]
        z_cap: f64,
        #[arg(long)]
        rmax: Option<f64>,
        #[arg(long, default_value_t = 0.25)]
        max_step: f64,
        #[arg(long)]
        window: Option<f64>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Secular function on a (sigma, tau) grid with R = sqrt(tau^2 - sigma^2).
    ///
    /// The value is N e^{-2 sigma} sin(lambda R) + R M e^{-2 sigma} cos(lambda R),
    /// so `--lambda` is the doubled ratio 2 ell / (L - ell). Points with
    /// tau < sigma and values outside the clip window are written as null.
    NodalGrid {
        #[arg(long)]
        lambda: f64,
        #[arg(long, value_parser = parse_range)]
        sigma: (f64, f64),
        #[arg(long, value_parser = parse_range)]
        tau: (f64, f64),
        #[arg(long, default_value_t = 201)]
        n_sigma: usize,
        #[arg(long, default_value_t = 201)]
        n_tau: usize,
        /// `hi` for [-hi, hi] or `lo:hi`.
        #[arg(long, value_parser = parse_clip)]
        clip: Option<(f64, f64)>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Levels of the shallow well (L -> infinity).
    Shallow {
        #[arg(long, default_value_t = PI)]
        ell: f64,
        /// Square root of the step height.
        #[arg(long = "T")]
        t: f64,
        #[arg(long, default_value_t = 12)]
        n_max: u32,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Finite-difference eigenvalues.
    Oracle {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Analytic energies against the finite-difference oracle.
    Compare {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
}

/// Physical `--L --ell --g` or scaled `--lambda --Z [--scale]`.
#[derive(Debug, Args)]
pub struct ParamArgs {
    #[arg(long = "L", conflicts_with_all = ["lambda", "z", "scale"], requires_all = ["ell", "g"])]
    pub l: Option<f64>,
    #[arg(long, requires = "l")]
    pub ell: Option<f64>,
    #[arg(long, requires = "l")]
    pub g: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long = "Z")]
    pub z: Option<f64>,
    #[arg(long)]
    pub scale: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long, default_value_t = 800)]
    pub n: usize,
    /// Energy ceiling; defaults to 4 pi^2 / L^2.
    #[arg(long)]
    pub emax: Option<f64>,
    /// Skip Richardson extrapolation.
    #[arg(long)]
    pub no_extrapolate: bool,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Written to stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

fn parse_parameter(s: &str) -> Result<Parameter, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_f64(s: &str) -> Result<f64, String> {
    s.trim().parse::<f64>().map_err(|e| format!("'{s}': {e}"))
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got '{s}'"))?;
    let (a, b) = (parse_f64(a)?, parse_f64(b)?);
    if !(a < b) {
        return Err(format!("empty range {a}:{b}"));
    }
    Ok((a, b))
}

fn parse_clip(s: &str) -> Result<(f64, f64), String> {
    if s.contains(':') {
        return parse_range(s);
    }
    let h = parse_f64(s)?;
    if !(h > 0.0) {
        return Err(format!("clip half-width must be positive, got {h}"));
    }
    Ok((-h, h))
}

/// Failure of a subcommand, carrying its exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_input_error() { EXIT_USAGE } else { EXIT_NUMERIC };
        Failure { code, message: e.to_string() }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: msg.into() }
}

impl ParamArgs {
    /// Resolves the active group; `z_default` fills a missing `--Z`.
    fn resolve(&self, z_default: Option<f64>) -> Result<(ScaledParams, PhysicalParams), Failure> {
        if let Some(l) = self.l {
            let p = PhysicalParams::new(l, self.ell.unwrap_or(f64::NAN), self.g.unwrap_or(f64::NAN))?;
            return Ok((scale_params(&p)?, p));
        }
        let lambda = self.lambda.ok_or_else(|| usage("give either --L --ell --g or --lambda --Z"))?;
        let z = self.z.or(z_default).ok_or_else(|| usage("--Z is required with --lambda"))?;
        let s = ScaledParams::new(lambda, z, self.scale.unwrap_or(1.0))?;
        Ok((s, s.to_physical()))
    }
}

fn params_json(s: &ScaledParams, p: &PhysicalParams) -> Value {
    json!({ "L": p.l, "ell": p.ell, "g": p.g, "lambda": s.lambda, "Z": s.z, "scale": s.scale })
}

fn header(command: &str, params: Value, options: Value) -> Value {
    json!({
        "tool": "ptwell",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "parameters": params,
        "options": options,
    })
}

fn fmt(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "null".into()
    }
}

struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(columns: &[&'static str]) -> Self {
        Table { columns: columns.to_vec(), rows: Vec::new() }
    }

    fn to_csv(&self) -> Result<Vec<u8>, Failure> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Failure { code: EXIT_NUMERIC, message: e.to_string() };
        w.write_record(&self.columns).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        w.into_inner().map_err(|e| Failure { code: EXIT_NUMERIC, message: e.to_string() })
    }
}

struct Report {
    table: Table,
    json: Value,
}

fn roots_table(roots: &[Root]) -> Table {
    let mut t = Table::new(&["index", "R", "sigma", "tau", "energy", "residual", "stability"]);
    for r in roots {
        t.rows.push(vec![
            r.index.to_string(),
            fmt(r.r),
            fmt(r.sigma),
            fmt(r.tau),
            fmt(r.energy),
            fmt(r.residual),
            r.stability.as_str().to_string(),
        ]);
    }
    t
}

fn check_positive(name: &str, v: f64) -> Result<(), Failure> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(usage(format!("{name} must be positive, got {v}")))
    }
}

fn execute(cmd: &Command) -> Result<Report, Failure> {
    match cmd {
        Command::Spectrum { params, rmax, refine, accept_residual, .. } => {
            let (s, p) = params.resolve(None)?;
            let r_max = rmax.unwrap_or_else(|| default_r_max(s.lambda));
            check_positive("--rmax", r_max)?;
            check_positive("--accept-residual", *accept_residual)?;
            let opts =
                ScanOptions { refine: (*refine).max(1), accept_residual: *accept_residual, ..Default::default() };
            let spec = scan_roots_with(&s, r_max, &opts);
            Ok(Report {
                table: roots_table(&spec.roots),
                json: json!({
                    "header": header("spectrum", params_json(&s, &p), json!({ "rmax": r_max, "scan": opts })),
                    "roots": spec.roots,
                    "diagnostics": spec.diagnostics,
                }),
            })
        }
        Command::Sweep { params, param, from, to, steps, rmax, max_depth, .. } => {
            let (s, p) = params.resolve(None)?;
            let r_max = rmax.unwrap_or_else(|| default_r_max(s.lambda.max(from.max(*to))));
            check_positive("--rmax", r_max)?;
            let opts = SweepOptions { max_depth: *max_depth, ..Default::default() };
            let branch = sweep_with(&s, *param, (*from, *to), *steps, r_max, &opts)?;
            let mut t = Table::new(&["param", "track_id", "R", "status"]);
            for tr in &branch.tracks {
                for &(x, r) in &tr.points {
                    t.rows.push(vec![fmt(x), tr.id.to_string(), fmt(r), tr.status.label().to_string()]);
                }
            }
            let options =
                json!({ "param": param, "from": from, "to": to, "steps": steps, "rmax": r_max, "sweep": opts });
            Ok(Report {
                table: t,
                json: json!({
                    "header": header("sweep", params_json(&s, &p), options),
                    "tracks": branch.tracks,
                    "mergers": branch.mergers,
                    "births": branch.births,
                }),
            })
        }
        Command::Ep { params, free, hint, r_hint, rmax, max_iter, tol, .. } => {
            let z_default = (*free == Parameter::Z).then_some(*hint);
            let (base, _) = params.resolve(z_default)?;
            let s = free.set(&base, *hint);
            s.validate()?;
            check_positive("--tol", *tol)?;
            let r_max = rmax.unwrap_or_else(|| default_r_max(s.lambda));
            let r0 = match r_hint {
                Some(r) => *r,
                None => locate_hint(&s, r_max)?,
            };
            let opts = EpOptions { max_iterations: *max_iter, tolerance: *tol };
            let ep = find_exceptional_with(&s, r0, *free, &opts)?;
            let mut t = Table::new(&[
                "lambda",
                "Z",
                "free",
                "R",
                "residual_value",
                "residual_derivative",
                "real_side",
                "iterations",
            ]);
            t.rows.push(vec![
                fmt(ep.lambda),
                fmt(ep.z),
                ep.free.to_string(),
                fmt(ep.r_double),
                fmt(ep.residual_value),
                fmt(ep.residual_derivative),
                fmt(ep.real_side),
                ep.iterations.to_string(),
            ]);
            let options = json!({ "free": free, "hint": hint, "r_hint": r0, "rmax": r_max, "ep": opts });
            Ok(Report {
                table: t,
                json: json!({
                    "header": header("ep", params_json(&s, &s.to_physical()), options),
                    "exceptional_point": ep,
                }),
            })
        }
        Command::Classify { params, z_cap, rmax, max_step, window, .. } => {
            let (s, p) = params.resolve(None)?;
            let r_max = rmax.unwrap_or_else(|| default_r_max(s.lambda));
            check_positive("--rmax", r_max)?;
            let opts = ClassifyOptions { max_step: *max_step, window: *window };
            let spec = classify_levels_with(&s, *z_cap, r_max, &opts)?;
            let options = json!({ "z_cap": z_cap, "rmax": r_max, "classify": opts });
            Ok(Report {
                table: roots_table(&spec.roots),
                json: json!({
                    "header": header("classify", params_json(&s, &p), options),
                    "roots": spec.roots,
                }),
            })
        }
        Command::NodalGrid { lambda, sigma, tau, n_sigma, n_tau, clip, .. } => {
            if !(lambda.is_finite() && *lambda >= 0.0) {
                return Err(usage(format!("--lambda must be >= 0, got {lambda}")));
            }
            if *n_sigma < 2 || *n_tau < 2 {
                return Err(usage("grids need at least 2 points per axis"));
            }
            if sigma.0 < 0.0 {
                return Err(usage("sigma must be >= 0"));
            }
            let axis = |(a, b): (f64, f64), n: usize, i: usize| a + (b - a) * i as f64 / (n - 1) as f64;
            let mut t = Table::new(&["sigma", "tau", "D"]);
            let mut values = Vec::with_capacity(n_sigma * n_tau);
            for i in 0..*n_sigma {
                let sg = axis(*sigma, *n_sigma, i);
                for j in 0..*n_tau {
                    let ta = axis(*tau, *n_tau, j);
                    let d = nodal_value(sg, ta, *lambda).filter(|&d| clip.is_none_or(|(lo, hi)| d >= lo && d <= hi));
                    t.rows.push(vec![fmt(sg), fmt(ta), d.map_or_else(|| "null".to_string(), fmt)]);
                    values.push(json!({ "sigma": sg, "tau": ta, "D": d }));
                }
            }
            let options = json!({
                "lambda": lambda,
                "lambda_convention": "2 ell / (L - ell)",
                "sigma": [sigma.0, sigma.1],
                "tau": [tau.0, tau.1],
                "n_sigma": n_sigma,
                "n_tau": n_tau,
                "clip": clip.map(|(a, b)| vec![a, b]),
            });
            Ok(Report {
                table: t,
                json: json!({ "header": header("nodal-grid", Value::Null, options), "grid": values }),
            })
        }
        Command::Shallow { ell, t, n_max, .. } => {
            let sp = ShallowParams::new(*ell, *t)?;
            let levels = solve_levels(&sp, *n_max)?;
            let mut tab =
                Table::new(&["n", "omega", "eta", "k", "energy", "R", "alpha", "p", "q", "G_plus", "G_minus"]);
            for l in &levels {
                tab.rows.push(vec![
                    l.n.to_string(),
                    fmt(l.omega),
                    fmt(l.eta),
                    fmt(l.k),
                    fmt(l.energy),
                    fmt(l.r),
                    fmt(l.alpha),
                    fmt(l.p),
                    fmt(l.q),
                    fmt(l.g_plus),
                    fmt(l.g_minus),
                ]);
            }
            Ok(Report {
                table: tab,
                json: json!({
                    "header": header("shallow", json!({ "ell": ell, "T": t }), json!({ "n_max": n_max })),
                    "levels": levels,
                }),
            })
        }
        Command::Oracle { params, grid, .. } => {
            let (s, p) = params.resolve(None)?;
            let spec = grid_spec(&p, grid)?;
            let o = oracle_spectrum(&p, &spec)?;
            let mut t = Table::new(&["index", "energy", "energy_extrapolated"]);
            for (i, &e) in o.eigenvalues.iter().enumerate() {
                let x = o.extrapolated.as_ref().and_then(|v| v.get(i).copied()).unwrap_or(f64::NAN);
                t.rows.push(vec![(i + 1).to_string(), fmt(e), fmt(x)]);
            }
            Ok(Report {
                table: t,
                json: json!({
                    "header": header("oracle", params_json(&s, &p), json!({ "grid": spec })),
                    "oracle": o,
                }),
            })
        }
        Command::Compare { params, grid, .. } => {
            let (s, p) = params.resolve(None)?;
            let spec = grid_spec(&p, grid)?;
            let o = oracle_spectrum(&p, &spec)?;
            let reference = o.extrapolated.clone().unwrap_or_else(|| o.eigenvalues.clone());
            let r_max = (spec.e_max.sqrt() * s.scale) * 1.05;
            let analytic = scan_roots_with(&s, r_max, &ScanOptions::default());
            let mut t = Table::new(&["index", "energy_analytic", "energy_oracle", "relative_error"]);
            let mut rows = Vec::new();
            for r in analytic.roots.iter().filter(|r| r.energy <= spec.e_max) {
                let near =
                    reference.iter().copied().min_by(|a, b| (a - r.energy).abs().total_cmp(&(b - r.energy).abs()));
                let rel = near.map_or(f64::NAN, |e| (e - r.energy).abs() / r.energy);
                t.rows.push(vec![r.index.to_string(), fmt(r.energy), fmt(near.unwrap_or(f64::NAN)), fmt(rel)]);
                rows.push(json!({ "index": r.index, "energy_analytic": r.energy, "energy_oracle": near, "relative_error": rel }));
            }
            Ok(Report {
                table: t,
                json: json!({
                    "header": header("compare", params_json(&s, &p), json!({ "grid": spec, "rmax": r_max })),
                    "comparison": rows,
                }),
            })
        }
    }
}

fn grid_spec(p: &PhysicalParams, g: &GridArgs) -> Result<GridSpec, Failure> {
    let e_max = g.emax.unwrap_or(4.0 * PI * PI / (p.l * p.l));
    let spec = GridSpec::new(g.n, e_max)?;
    Ok(if g.no_extrapolate { spec } else { spec.with_halving() })
}

/// Scaled secular value at `(sigma, tau)`; `None` where `tau < sigma`.
pub fn nodal_value(sigma: f64, tau: f64, lambda: f64) -> Option<f64> {
    if tau < sigma {
        return None;
    }
    let r = ((tau - sigma) * (tau + sigma)).sqrt();
    let st = SigmaTau::new(sigma, tau);
    let (s, c) = (lambda * r).sin_cos();
    Some(eval_n_scaled(st) * s + r * eval_m_scaled(st) * c)
}

fn output_of(cmd: &Command) -> &OutputArgs {
    match cmd {
        Command::Spectrum { out, .. }
        | Command::Sweep { out, .. }
        | Command::Ep { out, .. }
        | Command::Classify { out, .. }
        | Command::NodalGrid { out, .. }
        | Command::Shallow { out, .. }
        | Command::Oracle { out, .. }
        | Command::Compare { out, .. } => out,
    }
}

/// Parses `args` (program name first), runs the command and returns the exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    match emit(&cli.command, stdout) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn emit(cmd: &Command, stdout: &mut dyn Write) -> Result<(), Failure> {
    let report = execute(cmd)?;
    let out = output_of(cmd);
    let bytes = match out.format {
        Format::Csv => report.table.to_csv()?,
        Format::Json => {
            let mut b = serde_json::to_vec_pretty(&report.json)
                .map_err(|e| Failure { code: EXIT_NUMERIC, message: e.to_string() })?;
            b.push(b'\n');
            b
        }
    };
    let io = |e: std::io::Error| Failure { code: EXIT_NUMERIC, message: e.to_string() };
    match &out.output {
        Some(path) => fs::write(path, bytes).map_err(io),
        None => stdout.write_all(&bytes).map_err(io),
    }
}
