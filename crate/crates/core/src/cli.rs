//! Command-line front end.
//!
//! Every command loads a parameter set (a JSON file, a named figure, or the
//! Fig4 defaults), applies `--set key=value` overrides and `--delta`, then
//! emits CSV or JSON. CSV output starts with `#` lines recording the
//! command, all parameters and the damping convention. Output depends only
//! on the arguments, so repeated runs are byte-identical.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::estimate::{estimate_from_smax, estimate_from_spectrum, EstimateConfig, SpectrumData};
use crate::noise::{
    closed_form_left_peak, default_grid, left_peak_frequency, smax_sweep, spectrum_a, spectrum_b, uniform_grid,
    Resonator, SpectrumSeries, VACUUM_FLOOR,
};
use crate::oracle::{self, Integrator, Segmentation, SimConfig, Window};
use crate::params::{canonical_figure_params, Figure, ParamFile};
use crate::sagnac::SagnacConfig;
use crate::spectrum::{eigenvalues, eigenvalues_numeric, mode_matrix, real_imag_sweep, require_stable, DampingConvention};
use crate::steady::{convergence_time, integrate_mean_field, photon_number_sweep, steady_state};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "wgm-gyro", version, about = "Coupled gain/loss resonator gyroscope model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Supermode eigenvalues over a sweep of the Sagnac shift.
    Eigen {
        #[command(flatten)]
        common: Common,
        /// Shift grid start:stop:count.
        #[arg(long, default_value = "-10:10:401", allow_hyphen_values = true)]
        grid: Grid,
    },
    /// Mean photon numbers over a sweep of the drive detuning.
    Steady {
        #[command(flatten)]
        common: Common,
        /// Detuning grid start:stop:count.
        #[arg(long, default_value = "-10:10:2001", allow_hyphen_values = true)]
        grid: Grid,
    },
    /// Analytic output noise spectrum of one resonator.
    Noise {
        #[command(flatten)]
        common: Common,
        /// Frequency grid start:stop:count; defaults to 4001 points over +-2(J + delta).
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<Grid>,
        #[arg(long, default_value = "a")]
        resonator: ResonatorArg,
    },
    /// Left-peak maxima of both spectra over a sweep of the shift.
    Smax {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "0:4:41", allow_hyphen_values = true)]
        grid: Grid,
    },
    /// Monte-Carlo estimate of an output spectrum.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Recovers the shift (and rotation rate) from a spectrum CSV.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// CSV with an `omega` column, a spectrum column (`S_est` or
        /// `S_total`) and optionally `stderr`.
        #[arg(long)]
        input: PathBuf,
        /// Coupling; overrides the parameter set.
        #[arg(long = "J")]
        coupling: Option<f64>,
        #[arg(long, default_value = "a")]
        resonator: ResonatorArg,
        /// Sagnac configuration JSON for reporting the rotation rate.
        #[arg(long)]
        sagnac: Option<PathBuf>,
        #[arg(long, default_value = "frequency")]
        channel: ChannelArg,
        /// Skip the least-squares refinement.
        #[arg(long)]
        no_refine: bool,
        /// Fit half-window in units of kappa_b.
        #[arg(long, default_value_t = 2.0)]
        window: f64,
    },
    /// Writes the datasets behind every figure into a directory.
    Figures {
        #[arg(long)]
        all: bool,
        /// Restrict to one figure.
        #[arg(long)]
        figure: Option<Figure>,
        #[arg(short = 'o', long = "output", default_value = "figures")]
        output: PathBuf,
        #[arg(long, default_value = "csv")]
        format: Format,
    },
    /// Fast internal consistency checks.
    SelfTest {
        /// Negative control: compares eigenvalues of different conventions.
        #[arg(long)]
        break_convention: bool,
    },
    /// Converts a rotation rate into the Sagnac shift.
    Sagnac {
        /// JSON configuration; otherwise a silica microsphere is assumed.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-3)]
        radius_m: f64,
        #[arg(long, default_value_t = 2.0 * std::f64::consts::PI * 1e6)]
        kappa_b_si: f64,
        /// Angular velocity, rad/s (or Hz with --hz).
        rotation: f64,
        #[arg(long)]
        hz: bool,
    },
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Parameter JSON file.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Start from the parameters of a figure (default Fig4).
    #[arg(long)]
    pub figure: Option<Figure>,
    /// Override one parameter, e.g. `--set gain=1.2`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Sagnac shift, overriding the parameter set.
    #[arg(long, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    #[arg(short = 'o', long = "output")]
    pub output: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    pub format: Format,
    /// Convention of the eigenvalue matrix; `eigen` defaults to paperH,
    /// everything else to drift.
    #[arg(long)]
    pub convention: Option<DampingConvention>,
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 256)]
    pub traj: usize,
    #[arg(long, default_value_t = 1 << 14)]
    pub steps: usize,
    /// Time step; defaults to 0.05 (exact, capped at its step limit) or the Euler stability limit.
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, default_value = "exact")]
    pub integrator: IntegratorArg,
    /// Periodogram segment length; defaults to the whole trajectory.
    #[arg(long)]
    pub segment: Option<usize>,
    #[arg(long, default_value = "rect")]
    pub window: Window,
    #[arg(long, default_value = "a")]
    pub resonator: ResonatorArg,
    /// Also write the raw trajectories to this binary file.
    #[arg(long)]
    pub dump: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ResonatorArg {
    A,
    B,
}

impl From<ResonatorArg> for Resonator {
    fn from(r: ResonatorArg) -> Self {
        match r {
            ResonatorArg::A => Resonator::A,
            ResonatorArg::B => Resonator::B,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IntegratorArg {
    Exact,
    Euler,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChannelArg {
    Frequency,
    Height,
}

/// `start:stop:count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        uniform_grid(self.start, self.stop, self.count)
    }
}

impl std::str::FromStr for Grid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("grid '{s}' is not start:stop:count"));
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, c] = parts[..] else { return Err(bad()) };
        let grid = Grid {
            start: a.trim().parse().map_err(|_| bad())?,
            stop: b.trim().parse().map_err(|_| bad())?,
            count: c.trim().parse().map_err(|_| bad())?,
        };
        if grid.count == 0 || !grid.start.is_finite() || !grid.stop.is_finite() {
            return Err(bad());
        }
        Ok(grid)
    }
}

/// Exit status for an error: 1 I/O, 2 invalid input, 3 no stationary
/// state, 4 estimation failure, 5 failed self-test.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) => 1,
        Error::Invalid(_)
        | Error::Argument(_)
        | Error::Parse(_)
        | Error::Json(_)
        | Error::StepTooLarge { .. }
        | Error::DegenerateDispersion(_) => 2,
        Error::Unstable(_) | Error::Singular(_) | Error::StepRejected { .. } => 3,
        Error::NoPeak(_)
        | Error::AmbiguousPeak { .. }
        | Error::OutOfRange { .. }
        | Error::HeightOutOfRange { .. }
        | Error::InsufficientData(_) => 4,
        Error::SelfTest(_) => 5,
    }
}

impl Common {
    fn load(&self) -> Result<ParamFile> {
        let mut file = match (&self.params, self.figure) {
            (Some(path), _) => ParamFile::from_json(&fs::read_to_string(path)?)?,
            (None, fig) => {
                let (p, d) = canonical_figure_params(fig.unwrap_or(Figure::Fig4));
                ParamFile::join(&p, &d)
            }
        };
        for item in &self.overrides {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("override '{item}' is not key=value")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("override '{item}' has a non-numeric value")))?;
            file.set(key.trim(), value)?;
        }
        if let Some(d) = self.delta {
            file.delta = d;
        }
        Ok(file)
    }
}

enum Cell {
    Num(f64),
    Bool(bool),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v}"),
            Cell::Bool(b) => format!("{b}"),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Empty => Value::Null,
        }
    }
}

struct Table {
    command: &'static str,
    params: ParamFile,
    convention: DampingConvention,
    notes: Vec<String>,
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(command: &'static str, params: ParamFile, convention: DampingConvention, columns: &[&'static str]) -> Self {
        Self { command, params, convention, notes: Vec::new(), columns: columns.to_vec(), rows: Vec::new() }
    }

    fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut out = format!(
                    "# wgm-gyro {}\n# params {}\n# convention {}\n",
                    self.command,
                    self.params.to_json(),
                    self.convention
                );
                for n in &self.notes {
                    out.push_str(&format!("# {n}\n"));
                }
                out.push_str(&self.columns.join(","));
                out.push('\n');
                for row in &self.rows {
                    out.push_str(&row.iter().map(Cell::csv).collect::<Vec<_>>().join(","));
                    out.push('\n');
                }
                out
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| Value::Object(self.columns.iter().map(|c| c.to_string()).zip(r.iter().map(Cell::json)).collect()))
                    .collect();
                let doc = json!({
                    "schema": SCHEMA,
                    "command": self.command,
                    "params": serde_json::to_value(self.params).expect("numeric"),
                    "convention": self.convention.name(),
                    "notes": self.notes,
                    "rows": rows,
                });
                let mut s = serde_json::to_string_pretty(&doc).expect("json value");
                s.push('\n');
                s
            }
        }
    }
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(path, text)?;
        }
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn eigen_table(file: ParamFile, grid: &[f64], convention: DampingConvention) -> Result<Table> {
    let (p, _) = file.split();
    p.with_delta(0.0).ensure_valid()?;
    let mut t = Table::new("eigen", file, convention, &["delta", "reE_plus", "imE_plus", "reE_minus", "imE_minus"]);
    for r in real_imag_sweep(&p, grid, convention)? {
        t.rows.push(vec![
            Cell::Num(r.delta),
            Cell::Num(r.e_plus.re),
            Cell::Num(r.e_plus.im),
            Cell::Num(r.e_minus.re),
            Cell::Num(r.e_minus.im),
        ]);
    }
    Ok(t)
}

fn steady_table(file: ParamFile, grid: &[f64], convention: DampingConvention) -> Result<Table> {
    let (p, d) = file.split();
    p.ensure_valid()?;
    require_stable(&p)?;
    let mut t = Table::new("steady", file, convention, &["delta", "detuning", "n_a", "n_b", "valid"]);
    for r in photon_number_sweep(&p, &d, grid, &[p.delta]) {
        t.rows.push(vec![Cell::Num(r.delta), Cell::Num(r.detuning), Cell::Num(r.n_a), Cell::Num(r.n_b), Cell::Bool(r.valid)]);
    }
    Ok(t)
}

fn noise_table(file: ParamFile, grid: Option<&[f64]>, res: Resonator, convention: DampingConvention) -> Result<Table> {
    let (p, d) = file.split();
    let grid = grid.map_or_else(|| default_grid(&p), <[f64]>::to_vec);
    p.ensure_valid()?;
    require_stable(&p)?;
    let detuning = d.detuning(&p);
    let s: SpectrumSeries = match res {
        Resonator::A => spectrum_a(&p, detuning, &grid)?,
        Resonator::B => spectrum_b(&p, detuning, &grid)?,
    };
    let mut t = Table::new("noise", file, convention, &["omega", "S_total", "S1", "S2", "S3"]);
    t.notes.push(format!("resonator {}", if res == Resonator::A { "a" } else { "b" }));
    for i in 0..s.len() {
        let s3 = s.s3.as_ref().map_or(Cell::Empty, |v| Cell::Num(v[i]));
        t.rows.push(vec![Cell::Num(s.omega[i]), Cell::Num(s.total[i]), Cell::Num(s.s1[i]), Cell::Num(s.s2[i]), s3]);
    }
    Ok(t)
}

fn smax_table(file: ParamFile, grid: &[f64], convention: DampingConvention) -> Result<Table> {
    let (p, _) = file.split();
    let sweep = smax_sweep(&p, grid)?;
    let mut t = Table::new("smax", file, convention, &["delta", "S_a_max", "S_b_max", "omega_peak_a", "omega_peak_b"]);
    if let Some(b) = sweep.stability_boundary {
        t.notes.push(format!("stability boundary at delta = {b}"));
    }
    if !sweep.excluded.is_empty() {
        t.notes.push(format!("excluded (unstable) shifts: {}", sweep.excluded.len()));
    }
    for r in sweep.rows {
        t.rows.push(vec![
            Cell::Num(r.delta),
            Cell::Num(r.s_a_max),
            Cell::Num(r.s_b_max),
            Cell::Num(r.omega_peak_a),
            Cell::Num(r.omega_peak_b),
        ]);
    }
    Ok(t)
}

fn oracle_table(file: ParamFile, sim: &SimArgs, convention: DampingConvention) -> Result<Table> {
    let (p, d) = file.split();
    let detuning = d.detuning(&p);
    let integrator = match sim.integrator {
        IntegratorArg::Exact => Integrator::ExactOu,
        IntegratorArg::Euler => Integrator::EulerMaruyama,
    };
    let dt = match (sim.dt, integrator) {
        (Some(dt), _) => dt,
        (None, Integrator::ExactOu) => 0.05f64.min(oracle::exact_step_limit(&p, detuning)),
        (None, Integrator::EulerMaruyama) => oracle::euler_step_limit(&p, detuning),
    };
    let cfg = SimConfig { integrator, detuning, ..SimConfig::new(dt, sim.steps, sim.traj, sim.seed) };
    let batch = oracle::simulate(&p, &cfg)?;
    if let Some(path) = &sim.dump {
        let mut w = std::io::BufWriter::new(fs::File::create(path)?);
        oracle::write_batch(&batch, &mut w)?;
        w.flush()?;
    }
    let seg = Segmentation { segment_len: sim.segment.unwrap_or(sim.steps), window: sim.window };
    let res = Resonator::from(sim.resonator);
    let est = oracle::estimate_spectrum(&batch, res, seg)?;
    let mut t = Table::new("oracle", file, convention, &["omega", "S_est", "stderr"]);
    t.notes.push(format!(
        "resonator {} dt {} steps {} traj {} seed {} integrator {:?} segments {} window {:?}",
        if res == Resonator::A { "a" } else { "b" },
        dt,
        sim.steps,
        sim.traj,
        sim.seed,
        integrator,
        est.n_segments,
        sim.window
    ));
    for i in 0..est.omega.len() {
        t.rows.push(vec![Cell::Num(est.omega[i]), Cell::Num(est.s_est[i]), Cell::Num(est.stderr[i])]);
    }
    Ok(t)
}

/// Reads `omega`, a spectrum column and optional `stderr` from a CSV that
/// may carry `#` comment lines.
pub fn read_spectrum_csv(text: &str) -> Result<SpectrumData> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
    let col = |names: &[&str]| names.iter().find_map(|n| headers.iter().position(|h| h == *n));
    let w = col(&["omega"]).ok_or_else(|| Error::Parse("spectrum CSV lacks an 'omega' column".into()))?;
    let s = col(&["S_est", "S_total", "S"])
        .ok_or_else(|| Error::Parse("spectrum CSV lacks an 'S_est' or 'S_total' column".into()))?;
    let e = col(&["stderr"]);
    let mut data = SpectrumData { stderr: e.map(|_| Vec::new()), ..Default::default() };
    let num = |rec: &csv::StringRecord, i: usize| -> Result<f64> {
        rec.get(i)
            .unwrap_or("")
            .parse()
            .map_err(|_| Error::Parse(format!("non-numeric field in row {:?}", rec.position().map(|p| p.line()))))
    };
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let (wv, sv) = (num(&rec, w)?, num(&rec, s)?);
        if !sv.is_finite() {
            continue;
        }
        data.omega.push(wv);
        data.s.push(sv);
        if let (Some(i), Some(v)) = (e, data.stderr.as_mut()) {
            v.push(num(&rec, i)?);
        }
    }
    Ok(data)
}

#[allow(clippy::too_many_arguments)]
fn estimate_json(
    file: ParamFile,
    input: &Path,
    coupling: Option<f64>,
    res: Resonator,
    sagnac: Option<&Path>,
    channel: ChannelArg,
    refine: bool,
    window: f64,
) -> Result<String> {
    let (mut p, _) = file.split();
    if let Some(j) = coupling {
        p.coupling = j;
    }
    let data = read_spectrum_csv(&fs::read_to_string(input)?)?;
    let sagnac = sagnac.map(|s| SagnacConfig::from_json(&fs::read_to_string(s)?)).transpose()?;
    let cfg = EstimateConfig { window, refine, resonator: res, ..Default::default() };
    let result = match channel {
        ChannelArg::Frequency => estimate_from_spectrum(&data, &p, &cfg, sagnac.as_ref())?,
        ChannelArg::Height => estimate_from_smax(&data, &p, &cfg, 4.0, sagnac.as_ref())?,
    };
    let mut doc = serde_json::to_value(result)?;
    doc["schema"] = json!(SCHEMA);
    let mut s = serde_json::to_string_pretty(&doc)?;
    s.push('\n');
    Ok(s)
}

/// Outcome of one self-test check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Fast invariants: closed-form against iterative eigenvalues, integrated
/// against closed-form steady state, the vacuum floor, and the left-peak
/// inverse. `break_convention` feeds the iterative solver the wrong
/// damping convention, which must make the first check fail.
pub fn self_test(break_convention: bool) -> Vec<Check> {
    let (p, d) = canonical_figure_params(Figure::Fig3a);
    let mut checks = Vec::new();

    let mut worst = 0.0f64;
    for conv in [DampingConvention::PaperH, DampingConvention::FullH, DampingConvention::Drift] {
        let closed = eigenvalues(&p, conv);
        let other = if break_convention { DampingConvention::FullH } else { conv };
        let other = if break_convention && conv == other { DampingConvention::Drift } else { other };
        let (a, b) = eigenvalues_numeric(&mode_matrix(&p, other));
        let scale = closed.e_plus.norm().max(closed.e_minus.norm());
        worst = worst.max(((a - closed.e_plus).norm()).max((b - closed.e_minus).norm()) / scale);
    }
    checks.push(Check {
        name: "eigenvalues: closed form vs iterative solver",
        passed: worst < 1e-10,
        detail: format!("max relative error {worst:e}"),
    });

    let detail = match (
        steady_state(&p, &d),
        integrate_mean_field(&p, &d, convergence_time(&p), 0.01, Default::default(), Default::default()),
    ) {
        (Ok(s), Ok(traj)) => {
            let e = traj.last();
            let err = (e.alpha - s.alpha).norm().max((e.beta - s.beta).norm());
            (err < 1e-8, format!("max deviation {err:e}"))
        }
        (a, b) => (false, format!("{:?} / {:?}", a.err(), b.err())),
    };
    checks.push(Check { name: "steady state: ODE endpoint vs closed form", passed: detail.0, detail: detail.1 });

    let grid = uniform_grid(-1000.0, 1000.0, 20001);
    let lowest = [spectrum_a(&p, 0.0, &grid), spectrum_b(&p, 0.0, &grid)]
        .into_iter()
        .filter_map(|s| s.ok())
        .flat_map(|s| s.total)
        .fold(f64::INFINITY, f64::min);
    checks.push(Check {
        name: "vacuum floor",
        passed: lowest >= VACUUM_FLOOR - 1e-9,
        detail: format!("minimum {lowest}"),
    });

    let mut worst = 0.0f64;
    for k in 0..=40 {
        let delta = 0.1 * k as f64;
        let w = closed_form_left_peak(&p.with_delta(delta), 0.0);
        let back = crate::estimate::delta_from_left_peak(w, p.coupling).unwrap_or(f64::NAN);
        worst = worst.max((back - delta).abs());
    }
    checks.push(Check {
        name: "left-peak inverse round trip",
        passed: worst < 1e-10,
        detail: format!("max error {worst:e}"),
    });

    let refined = left_peak_frequency(&p, Resonator::A);
    let off = (refined.refined - refined.closed_form).abs();
    checks.push(Check {
        name: "refined left peak near closed form",
        passed: off < 0.25 * p.kappa_b(),
        detail: format!("offset {off}"),
    });
    checks
}

fn figures(which: &[Figure], dir: &Path, format: Format) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let ext = if format == Format::Csv { "csv" } else { "json" };
    let mut written = Vec::new();
    let mut put = |name: String, table: Table| -> Result<()> {
        let path = dir.join(format!("{name}.{ext}"));
        fs::write(&path, table.render(format))?;
        written.push(path);
        Ok(())
    };
    let join = |f: Figure| {
        let (p, d) = canonical_figure_params(f);
        ParamFile::join(&p, &d)
    };
    let spectrum_grid = uniform_grid(-12.0, 12.0, 4801);
    for &fig in which {
        match fig {
            Figure::Fig2 => put(
                "fig2_eigen".into(),
                eigen_table(join(fig), &uniform_grid(-10.0, 10.0, 401), DampingConvention::PaperH)?,
            )?,
            Figure::Fig3a | Figure::Fig3b => {
                let name = format!("{}_photon", fig.name().to_lowercase());
                put(name, steady_table(join(fig), &uniform_grid(-10.0, 10.0, 2001), DampingConvention::Drift)?)?
            }
            Figure::Fig4 => {
                for res in [Resonator::A, Resonator::B] {
                    let tag = if res == Resonator::A { "a" } else { "b" };
                    for delta in [0.0, 1.0, 2.0, 3.0] {
                        let mut file = join(fig);
                        file.delta = delta;
                        let t = noise_table(file, Some(&spectrum_grid), res, DampingConvention::Drift)?;
                        put(format!("fig4_spectrum_{tag}_delta{delta}"), t)?;
                    }
                }
                put("fig4_smax".into(), smax_table(join(fig), &uniform_grid(0.0, 4.0, 41), DampingConvention::Drift)?)?;
            }
            Figure::Fig5Gain | Figure::Fig5NoGain => {
                for res in [Resonator::A, Resonator::B] {
                    let tag = if res == Resonator::A { "a" } else { "b" };
                    let t = noise_table(join(fig), Some(&spectrum_grid), res, DampingConvention::Drift)?;
                    put(format!("{}_spectrum_{tag}", fig.name().to_lowercase()), t)?;
                }
            }
        }
    }
    Ok(written)
}

/// Runs one command. Self-test failures surface as [`Error::SelfTest`].
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Eigen { common, grid } => {
            let conv = common.convention.unwrap_or(DampingConvention::PaperH);
            let t = eigen_table(common.load()?, &grid.points(), conv)?;
            emit(&t.render(common.format), common.output.as_deref())
        }
        Command::Steady { common, grid } => {
            let t = steady_table(common.load()?, &grid.points(), common.convention.unwrap_or_default())?;
            emit(&t.render(common.format), common.output.as_deref())
        }
        Command::Noise { common, grid, resonator } => {
            let points = grid.map(|g| g.points());
            let t = noise_table(common.load()?, points.as_deref(), resonator.into(), common.convention.unwrap_or_default())?;
            emit(&t.render(common.format), common.output.as_deref())
        }
        Command::Smax { common, grid } => {
            let t = smax_table(common.load()?, &grid.points(), common.convention.unwrap_or_default())?;
            emit(&t.render(common.format), common.output.as_deref())
        }
        Command::Oracle { common, sim } => {
            let t = oracle_table(common.load()?, &sim, common.convention.unwrap_or_default())?;
            emit(&t.render(common.format), common.output.as_deref())
        }
        Command::Estimate { common, input, coupling, resonator, sagnac, channel, no_refine, window } => {
            let text = estimate_json(
                common.load()?,
                &input,
                coupling,
                resonator.into(),
                sagnac.as_deref(),
                channel,
                !no_refine,
                window,
            )?;
            emit(&text, common.output.as_deref())
        }
        Command::Figures { all, figure, output, format } => {
            let which: Vec<Figure> = match (all, figure) {
                (_, Some(f)) => vec![f],
                (true, None) => Figure::ALL.to_vec(),
                (false, None) => return Err(Error::Argument("pass --all or --figure".into())),
            };
            for path in figures(&which, &output, format)? {
                eprintln!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::SelfTest { break_convention } => {
            let checks = self_test(break_convention);
            let mut out = String::new();
            for c in &checks {
                out.push_str(&format!("{} {} ({})\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail));
            }
            emit(&out, None)?;
            match checks.iter().filter(|c| !c.passed).count() {
                0 => Ok(()),
                n => Err(Error::SelfTest(n)),
            }
        }
        Command::Sagnac { config, radius_m, kappa_b_si, rotation, hz } => {
            let cfg = match config {
                Some(path) => SagnacConfig::from_json(&fs::read_to_string(path)?)?,
                None => SagnacConfig::silica_microsphere(radius_m, kappa_b_si),
            };
            cfg.check()?;
            let shift = if hz { cfg.shift_from_rotation_hz(rotation) } else { cfg.shift_from_rotation(rotation) };
            let doc = json!({
                "schema": SCHEMA,
                "delta_rad_s": shift.rad_s,
                "delta_hz": shift.rad_s / (2.0 * std::f64::consts::PI),
                "delta": shift.scaled,
            });
            emit(&format!("{}\n", serde_json::to_string_pretty(&doc)?), None)
        }
    }
}
