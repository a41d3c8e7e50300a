//! Time-domain Monte-Carlo oracle for the output spectra.
//!
//! The fluctuation dynamics are linear, and only symmetrized second moments
//! are needed. So every quantum noise port (vacuum loss ports and the
//! inverted gain port alike) is replaced by a classical complex white noise
//! with `<xi(t) xi*(s)> = delta(t - s) / 2`. The Langevin equations
//!
//! ```text
//! da/dt = M (a, b) + sum_p sqrt(rate_p) xi_p,   a_out = a_in + sqrt(kx_a) a
//! ```
//!
//! are integrated, the output is formed from the stored input noise, and
//! the spectrum is estimated from segment-averaged periodograms. Output
//! sample `k` is the average of the output field over step `k`.

use std::io::{Read, Write};

use nalgebra::{Matrix2, SMatrix, SVector};
use num_complex::Complex64;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::noise::{Resonator, SpectrumTerms};
use crate::params::{Diagnostic, SystemParams};
use crate::spectrum::{drift_matrix, require_stable};

/// Symmetrized strength of every port, vacuum or inverted.
pub const SYMMETRIZED_STRENGTH: f64 = 0.5;

type C = Complex64;
type Mat2x5 = SMatrix<C, 2, 5>;
type Mat6 = SMatrix<C, 6, 6>;
type Mat6x5 = SMatrix<C, 6, 5>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoisePort {
    AWaveguide,
    AEnvironment,
    AGain,
    BWaveguide,
    BEnvironment,
}

impl NoisePort {
    pub const ALL: [NoisePort; 5] = [
        NoisePort::AWaveguide,
        NoisePort::AEnvironment,
        NoisePort::AGain,
        NoisePort::BWaveguide,
        NoisePort::BEnvironment,
    ];

    pub fn label(self) -> &'static str {
        match self {
            NoisePort::AWaveguide => "a_wg",
            NoisePort::AEnvironment => "a_env",
            NoisePort::AGain => "a_gain",
            NoisePort::BWaveguide => "b_wg",
            NoisePort::BEnvironment => "b_env",
        }
    }

    pub fn rate(self, params: &SystemParams) -> f64 {
        match self {
            NoisePort::AWaveguide => params.res_a.kappa_ex,
            NoisePort::AEnvironment => params.res_a.kappa_0,
            NoisePort::AGain => params.res_a.gain,
            NoisePort::BWaveguide => params.res_b.kappa_ex,
            NoisePort::BEnvironment => params.res_b.kappa_0,
        }
    }

    fn mode(self) -> usize {
        match self {
            NoisePort::AWaveguide | NoisePort::AEnvironment | NoisePort::AGain => 0,
            NoisePort::BWaveguide | NoisePort::BEnvironment => 1,
        }
    }
}

/// Coupling of the five ports into the two modes.
fn port_matrix(params: &SystemParams) -> Mat2x5 {
    let mut c = Mat2x5::zeros();
    for (j, port) in NoisePort::ALL.iter().enumerate() {
        c[(port.mode(), j)] = C::from(port.rate(params).sqrt());
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integrator {
    #[default]
    EulerMaruyama,
    /// Exact Gaussian transition of the linear system over one step,
    /// sampled jointly with the step-averaged field and input noise.
    ExactOu,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub n_steps: usize,
    pub n_traj: usize,
    pub seed: u64,
    pub integrator: Integrator,
    /// Detuning of the bare resonators from the frame frequency.
    pub detuning: f64,
    /// Keep intracavity fields and input noise, not just the outputs.
    pub record_intracavity: bool,
}

impl SimConfig {
    pub fn new(dt: f64, n_steps: usize, n_traj: usize, seed: u64) -> Self {
        Self {
            dt,
            n_steps,
            n_traj,
            seed,
            integrator: Integrator::default(),
            detuning: 0.0,
            record_intracavity: false,
        }
    }

    pub fn with_integrator(self, integrator: Integrator) -> Self {
        Self { integrator, ..self }
    }

    pub fn recording_intracavity(self) -> Self {
        Self { record_intracavity: true, ..self }
    }
}

/// One trajectory. `a`, `b`, `a_in`, `b_in` are empty unless intracavity
/// recording was requested.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    /// Intracavity fields at the start of each step.
    pub a: Vec<C>,
    pub b: Vec<C>,
    /// Step-averaged waveguide input noise.
    pub a_in: Vec<C>,
    pub b_in: Vec<C>,
    /// Step-averaged output fields.
    pub a_out: Vec<C>,
    pub b_out: Vec<C>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryBatch {
    pub dt: f64,
    pub n_steps: usize,
    pub n_traj: usize,
    pub seed: u64,
    pub detuning: f64,
    pub trajectories: Vec<Trajectory>,
}

fn mat_exp_series(x: &Matrix2<C>) -> (Matrix2<C>, Matrix2<C>) {
    // exp(x) and phi1(x) = sum x^k/(k+1)!, for ||x|| <= 1
    let mut exp = Matrix2::identity();
    let mut phi = Matrix2::identity();
    let mut term = Matrix2::<C>::identity();
    for k in 1..40 {
        term = term * x / C::from(k as f64);
        exp += term;
        phi += term / C::from((k + 1) as f64);
    }
    (exp, phi)
}

fn norm1(m: &Matrix2<C>) -> f64 {
    (0..2).map(|j| m[(0, j)].norm() + m[(1, j)].norm()).fold(0.0, f64::max)
}

fn max_eig_modulus(m: &Matrix2<C>) -> f64 {
    let tr = m.trace();
    let root = (tr * tr / 4.0 - m.determinant()).sqrt();
    (tr / 2.0 + root).norm().max((tr / 2.0 - root).norm())
}

/// Gauss-Legendre nodes and weights on [-1, 1].
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Per-step transition of the exact backend.
struct ExactStep {
    phi: Matrix2<C>,
    mean_map: Matrix2<C>,
    /// Square root of the joint covariance of
    /// (state noise [2], step-average noise [2], averaged waveguide input [2]).
    root: Mat6,
}

impl ExactStep {
    fn new(m: &Matrix2<C>, ports: &Mat2x5, dt: f64) -> Self {
        let (phi, mean_map) = mat_exp_series(&(m * C::from(dt)));
        let mut select = SMatrix::<C, 2, 5>::zeros();
        select[(0, 0)] = C::from(1.0 / dt);
        select[(1, 3)] = C::from(1.0 / dt);
        let kernel = |tau: f64| {
            let (e, p) = mat_exp_series(&(m * C::from(tau)));
            let mut k = Mat6x5::zeros();
            k.fixed_view_mut::<2, 5>(0, 0).copy_from(&(e * ports));
            k.fixed_view_mut::<2, 5>(2, 0).copy_from(&(p * C::from(tau / dt) * ports));
            k.fixed_view_mut::<2, 5>(4, 0).copy_from(&select);
            k
        };
        let mut cov = Mat6::zeros();
        for (x, w) in gauss_legendre(16) {
            let tau = 0.5 * dt * (x + 1.0);
            let k = kernel(tau);
            cov += k * k.adjoint() * C::from(0.5 * dt * w);
        }
        cov *= C::from(SYMMETRIZED_STRENGTH);
        let cov = (cov + cov.adjoint()) * C::from(0.5);
        let eig = nalgebra::SymmetricEigen::new(cov);
        let mut root = eig.eigenvectors;
        for j in 0..6 {
            let s = eig.eigenvalues[j].max(0.0).sqrt();
            for i in 0..6 {
                root[(i, j)] *= s;
            }
        }
        Self { phi, mean_map, root }
    }
}

fn complex_normal(rng: &mut ChaCha12Rng) -> C {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn run_trajectory(
    index: usize,
    cfg: &SimConfig,
    m: &Matrix2<C>,
    ports: &Mat2x5,
    exact: Option<&ExactStep>,
    burn_in: usize,
    out_gain: (f64, f64),
) -> Trajectory {
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let dt = cfg.dt;
    let em_scale = (SYMMETRIZED_STRENGTH * dt).sqrt();
    let mut state = SVector::<C, 2>::zeros();
    let n = cfg.n_steps;
    let mut tr = Trajectory {
        a_out: Vec::with_capacity(n),
        b_out: Vec::with_capacity(n),
        ..Default::default()
    };
    if cfg.record_intracavity {
        tr.a.reserve(n);
        tr.b.reserve(n);
        tr.a_in.reserve(n);
        tr.b_in.reserve(n);
    }
    for step in 0..burn_in + n {
        let start = state;
        let (mean, input) = match exact {
            Some(ex) => {
                let xi = SVector::<C, 6>::from_fn(|_, _| complex_normal(&mut rng));
                let z = ex.root * xi;
                state = ex.phi * start + z.fixed_rows::<2>(0);
                (ex.mean_map * start + z.fixed_rows::<2>(2), z.fixed_rows::<2>(4).into_owned())
            }
            None => {
                let dw = SVector::<C, 5>::from_fn(|_, _| complex_normal(&mut rng) * em_scale);
                state = start + m * start * C::from(dt) + ports * dw;
                ((start + state) * C::from(0.5), SVector::<C, 2>::new(dw[0] / dt, dw[3] / dt))
            }
        };
        if step < burn_in {
            continue;
        }
        tr.a_out.push(input[0] + mean[0] * out_gain.0);
        tr.b_out.push(input[1] + mean[1] * out_gain.1);
        if cfg.record_intracavity {
            tr.a.push(start[0]);
            tr.b.push(start[1]);
            tr.a_in.push(input[0]);
            tr.b_in.push(input[1]);
        }
    }
    tr
}

/// Ratio of `dt` to the step limit of Euler-Maruyama, `0.01 / max|lambda|`.
pub fn euler_step_limit(params: &SystemParams, detuning: f64) -> f64 {
    0.01 / max_eig_modulus(&drift_matrix(params, detuning))
}

/// Largest step for the exact backend: `||M dt||_1 <= 1`.
pub fn exact_step_limit(params: &SystemParams, detuning: f64) -> f64 {
    1.0 / norm1(&drift_matrix(params, detuning))
}

/// Simulates `n_traj` independent stationary trajectories.
///
/// Each trajectory starts empty and runs ten slowest relaxation times of
/// burn-in before recording. Trajectory `i` draws from ChaCha stream `i` of
/// `seed`, so results do not depend on scheduling.
pub fn simulate(params: &SystemParams, cfg: &SimConfig) -> Result<TrajectoryBatch> {
    let diags: Vec<Diagnostic> = params
        .validate()
        .into_iter()
        .filter(|d| !matches!(d, Diagnostic::NonPositiveDecayB(_)))
        .collect();
    if !diags.is_empty() {
        return Err(Error::Invalid(diags));
    }
    if !(cfg.dt > 0.0) || cfg.n_steps == 0 || cfg.n_traj == 0 {
        return Err(Error::Argument("need dt > 0, n_steps > 0 and n_traj > 0".into()));
    }
    let ports = port_matrix(params);
    let m = drift_matrix(params, cfg.detuning);
    let silent = ports.iter().all(|c| *c == C::from(0.0));
    if silent {
        // nothing couples in or out: every record is identically zero
        let zeros = vec![C::from(0.0); cfg.n_steps];
        let rec = if cfg.record_intracavity { zeros.clone() } else { Vec::new() };
        let t = Trajectory {
            a: rec.clone(),
            b: rec.clone(),
            a_in: rec.clone(),
            b_in: rec,
            a_out: zeros.clone(),
            b_out: zeros,
        };
        return Ok(TrajectoryBatch {
            dt: cfg.dt,
            n_steps: cfg.n_steps,
            n_traj: cfg.n_traj,
            seed: cfg.seed,
            detuning: cfg.detuning,
            trajectories: vec![t; cfg.n_traj],
        });
    }
    let burn_in = {
        let s = require_stable(params)?;
        (10.0 / (s.max_real().abs() * cfg.dt)).ceil() as usize
    };
    let exact = match cfg.integrator {
        Integrator::EulerMaruyama => {
            let limit = euler_step_limit(params, cfg.detuning);
            if cfg.dt > limit {
                return Err(Error::StepTooLarge { dt: cfg.dt, limit });
            }
            None
        }
        Integrator::ExactOu => {
            let limit = exact_step_limit(params, cfg.detuning);
            if cfg.dt > limit {
                return Err(Error::StepTooLarge { dt: cfg.dt, limit });
            }
            Some(ExactStep::new(&m, &ports, cfg.dt))
        }
    };
    let gain = (params.res_a.kappa_ex.sqrt(), params.res_b.kappa_ex.sqrt());
    let run = |i: usize| run_trajectory(i, cfg, &m, &ports, exact.as_ref(), burn_in, gain);

    #[cfg(feature = "parallel")]
    let trajectories: Vec<Trajectory> = {
        use rayon::prelude::*;
        (0..cfg.n_traj).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let trajectories: Vec<Trajectory> = (0..cfg.n_traj).map(run).collect();

    Ok(TrajectoryBatch {
        dt: cfg.dt,
        n_steps: cfg.n_steps,
        n_traj: cfg.n_traj,
        seed: cfg.seed,
        detuning: cfg.detuning,
        trajectories,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    #[default]
    Rectangular,
    Hann,
}

impl std::str::FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rect" | "rectangular" => Ok(Window::Rectangular),
            "hann" => Ok(Window::Hann),
            _ => Err(Error::Parse(format!("unknown window '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segmentation {
    pub segment_len: usize,
    pub window: Window,
}

pub const MIN_SEGMENT_LEN: usize = 1 << 12;
pub const MIN_SEGMENTS: usize = 16;

/// Segment-averaged periodogram estimate with per-bin standard errors.
///
/// Each bin is `dt |sum_k w_k y_k e^{i w t_k}|^2 / sum_k w_k^2`, so white
/// input noise of strength 1/2 reads exactly 1/2.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumEstimate {
    pub resonator: Resonator,
    pub omega: Vec<f64>,
    pub s_est: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n_segments: usize,
    pub segment_len: usize,
    pub dt: f64,
}

impl SpectrumEstimate {
    pub fn mean_stderr(&self) -> f64 {
        self.stderr.iter().sum::<f64>() / self.stderr.len() as f64
    }
}

fn window_weights(window: Window, n: usize) -> Vec<f64> {
    match window {
        Window::Rectangular => vec![1.0; n],
        Window::Hann => (0..n)
            .map(|k| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos())
            .collect(),
    }
}

pub fn estimate_spectrum(batch: &TrajectoryBatch, field: Resonator, seg: Segmentation) -> Result<SpectrumEstimate> {
    let len = seg.segment_len;
    if len < MIN_SEGMENT_LEN {
        return Err(Error::InsufficientData(format!("segment length {len} < {MIN_SEGMENT_LEN}")));
    }
    let per_traj = batch.n_steps / len;
    let n_segments = per_traj * batch.trajectories.len();
    if n_segments < MIN_SEGMENTS {
        return Err(Error::InsufficientData(format!("{n_segments} segments < {MIN_SEGMENTS}")));
    }
    let w = window_weights(seg.window, len);
    let norm = batch.dt / w.iter().map(|x| x * x).sum::<f64>();
    let fft = FftPlanner::<f64>::new().plan_fft_inverse(len);

    let partial = |tr: &Trajectory| {
        let y = match field {
            Resonator::A => &tr.a_out,
            Resonator::B => &tr.b_out,
        };
        let mut sum = vec![0.0; len];
        let mut sum_sq = vec![0.0; len];
        let mut buf = vec![C::from(0.0); len];
        for s in 0..per_traj {
            for (k, b) in buf.iter_mut().enumerate() {
                *b = y[s * len + k] * w[k];
            }
            fft.process(&mut buf);
            for (m, b) in buf.iter().enumerate() {
                let p = norm * b.norm_sqr();
                sum[m] += p;
                sum_sq[m] += p * p;
            }
        }
        (sum, sum_sq)
    };

    #[cfg(feature = "parallel")]
    let parts: Vec<(Vec<f64>, Vec<f64>)> = {
        use rayon::prelude::*;
        batch.trajectories.par_iter().map(partial).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<(Vec<f64>, Vec<f64>)> = batch.trajectories.iter().map(partial).collect();

    let mut sum = vec![0.0; len];
    let mut sum_sq = vec![0.0; len];
    for (s, q) in &parts {
        for m in 0..len {
            sum[m] += s[m];
            sum_sq[m] += q[m];
        }
    }
    let nseg = n_segments as f64;
    let df = 2.0 * std::f64::consts::PI / (len as f64 * batch.dt);
    let mut out = SpectrumEstimate {
        resonator: field,
        omega: Vec::with_capacity(len),
        s_est: Vec::with_capacity(len),
        stderr: Vec::with_capacity(len),
        n_segments,
        segment_len: len,
        dt: batch.dt,
    };
    // ascending frequency: bins len/2..len are the negative frequencies
    for m in (len / 2..len).chain(0..len / 2) {
        let mean = sum[m] / nseg;
        let var = ((sum_sq[m] - nseg * mean * mean) / (nseg - 1.0)).max(0.0);
        let signed = if m >= len / 2 { m as f64 - len as f64 } else { m as f64 };
        out.omega.push(signed * df);
        out.s_est.push(mean);
        out.stderr.push((var / nseg).sqrt());
    }
    Ok(out)
}

/// Stationary covariance `P = <x x^dagger>` of the intracavity fields,
/// solving `M P + P M^dagger + C C^dagger / 2 = 0`.
pub fn stationary_covariance(params: &SystemParams, detuning: f64) -> Result<Matrix2<C>> {
    require_stable(params)?;
    let m = drift_matrix(params, detuning);
    let ports = port_matrix(params);
    let q = ports * ports.adjoint() * C::from(SYMMETRIZED_STRENGTH);
    // vec(P) with index 2*i + j
    let mut a = SMatrix::<C, 4, 4>::zeros();
    let mut rhs = SVector::<C, 4>::zeros();
    for i in 0..2 {
        for j in 0..2 {
            let row = 2 * i + j;
            for k in 0..2 {
                a[(row, 2 * k + j)] += m[(i, k)];
                a[(row, 2 * i + k)] += m[(j, k)].conj();
            }
            rhs[row] = -q[(i, j)];
        }
    }
    let x = a.lu().solve(&rhs).ok_or(Error::Singular(0.0))?;
    Ok(Matrix2::new(x[0], x[1], x[2], x[3]))
}

/// Expected estimator value when comparing with the analytic spectrum:
/// the sum of the per-source terms.
pub fn analytic_reference(terms: SpectrumTerms) -> f64 {
    terms.total()
}

const MAGIC: &[u8; 8] = b"WGMTRAJ1";

fn put_f64(w: &mut impl Write, v: f64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn put_u64(w: &mut impl Write, v: u64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn get_f64(r: &mut impl Read) -> std::io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn get_u64(r: &mut impl Read) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

/// Little-endian dump: magic, dt, n_steps, n_traj, seed, detuning, flags,
/// then per trajectory the recorded series as (re, im) pairs.
pub fn write_batch(batch: &TrajectoryBatch, w: &mut impl Write) -> Result<()> {
    let intracavity = batch.trajectories.first().is_some_and(|t| !t.a.is_empty());
    w.write_all(MAGIC)?;
    put_f64(w, batch.dt)?;
    put_u64(w, batch.n_steps as u64)?;
    put_u64(w, batch.n_traj as u64)?;
    put_u64(w, batch.seed)?;
    put_f64(w, batch.detuning)?;
    w.write_all(&[intracavity as u8])?;
    for t in &batch.trajectories {
        let mut series = vec![&t.a_out, &t.b_out];
        if intracavity {
            series.extend([&t.a, &t.b, &t.a_in, &t.b_in]);
        }
        for s in series {
            for z in s {
                put_f64(w, z.re)?;
                put_f64(w, z.im)?;
            }
        }
    }
    Ok(())
}

pub fn read_batch(r: &mut impl Read) -> Result<TrajectoryBatch> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Parse("not a trajectory dump".into()));
    }
    let dt = get_f64(r)?;
    let n_steps = get_u64(r)? as usize;
    let n_traj = get_u64(r)? as usize;
    let seed = get_u64(r)?;
    let detuning = get_f64(r)?;
    let mut flag = [0u8; 1];
    r.read_exact(&mut flag)?;
    let read_series = |r: &mut dyn Read| -> Result<Vec<C>> {
        let mut r = r;
        (0..n_steps).map(|_| Ok(C::new(get_f64(&mut r)?, get_f64(&mut r)?))).collect()
    };
    let mut trajectories = Vec::with_capacity(n_traj);
    for _ in 0..n_traj {
        let mut t = Trajectory { a_out: read_series(r)?, b_out: read_series(r)?, ..Default::default() };
        if flag[0] != 0 {
            t.a = read_series(r)?;
            t.b = read_series(r)?;
            t.a_in = read_series(r)?;
            t.b_in = read_series(r)?;
        }
        trajectories.push(t);
    }
    Ok(TrajectoryBatch { dt, n_steps, n_traj, seed, detuning, trajectories })
}
