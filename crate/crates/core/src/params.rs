//! Dimensionless parameter model shared by every other module.
//!
//! All rates, frequencies, couplings and drive amplitudes are expressed in
//! units of the total decay rate of the passive resonator, so in the
//! canonical system `kappa_b = 1`. Only [`crate::sagnac`] deals with SI units.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The spinning resonator with gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonatorA {
    pub omega: f64,
    /// Coupling rate to the waveguide.
    pub kappa_ex: f64,
    /// Intrinsic loss rate to the environment.
    pub kappa_0: f64,
    /// Pump gain rate `g`.
    pub gain: f64,
}

impl ResonatorA {
    pub fn total_loss(&self) -> f64 {
        self.kappa_ex + self.kappa_0
    }

    /// `g_a = g - kappa_a`. Positive means the resonator amplifies on its own.
    pub fn net_gain(&self) -> f64 {
        self.gain - self.total_loss()
    }
}

/// The stationary passive resonator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonatorB {
    pub omega: f64,
    pub kappa_ex: f64,
    pub kappa_0: f64,
}

impl ResonatorB {
    pub fn total_loss(&self) -> f64 {
        self.kappa_ex + self.kappa_0
    }
}

/// Coherent drives on both resonators, sharing one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Drive {
    pub eta_a: f64,
    pub eta_b: f64,
    pub omega_d: f64,
}

impl Drive {
    pub fn new(eta_a: f64, eta_b: f64, omega_d: f64) -> Self {
        Self { eta_a, eta_b, omega_d }
    }

    /// Undriven, with the frame rotating at the bare frequency.
    pub fn resonant(omega_bar: f64) -> Self {
        Self::new(0.0, 0.0, omega_bar)
    }

    /// Detuning `omega_bar - omega_d` of the bare resonators from the drive.
    pub fn detuning(&self, params: &SystemParams) -> f64 {
        params.omega_bar() - self.omega_d
    }

    /// Drive whose frequency gives the requested detuning.
    pub fn with_detuning(self, params: &SystemParams, detuning: f64) -> Self {
        Self { omega_d: params.omega_bar() - detuning, ..self }
    }

    pub fn scaled(self, k: f64) -> Self {
        Self { eta_a: k * self.eta_a, eta_b: k * self.eta_b, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub res_a: ResonatorA,
    pub res_b: ResonatorB,
    /// Inter-resonator coupling `J`.
    pub coupling: f64,
    /// Sagnac-Fizeau shift of resonator a.
    pub delta: f64,
}

/// A violated parameter invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    UnequalFrequencies { omega_a: f64, omega_b: f64 },
    NegativeRate { name: &'static str, value: f64 },
    NonPositiveDecayB(f64),
    NegativeCoupling(f64),
    NegativeShift(f64),
    NegativeDrive { name: &'static str, value: f64 },
    NonFinite(&'static str),
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::UnequalFrequencies { omega_a, omega_b } => {
                write!(f, "unequal bare frequencies (omega_a = {omega_a}, omega_b = {omega_b})")
            }
            Diagnostic::NegativeRate { name, value } => write!(f, "negative rate {name} = {value}"),
            Diagnostic::NonPositiveDecayB(k) => write!(f, "total decay of b must be positive, got {k}"),
            Diagnostic::NegativeCoupling(j) => write!(f, "negative coupling J = {j}"),
            Diagnostic::NegativeShift(d) => write!(f, "negative Sagnac shift delta = {d}"),
            Diagnostic::NegativeDrive { name, value } => write!(f, "negative drive {name} = {value}"),
            Diagnostic::NonFinite(name) => write!(f, "non-finite value for {name}"),
        }
    }
}

impl SystemParams {
    /// Builds a validated parameter set with a common bare frequency.
    pub fn new(res_a: ResonatorA, res_b: ResonatorB, coupling: f64, delta: f64) -> Result<Self> {
        let p = Self { res_a, res_b, coupling, delta };
        p.ensure_valid()?;
        Ok(p)
    }

    pub fn omega_bar(&self) -> f64 {
        self.res_a.omega
    }

    pub fn net_gain(&self) -> f64 {
        self.res_a.net_gain()
    }

    pub fn kappa_b(&self) -> f64 {
        self.res_b.total_loss()
    }

    pub fn with_delta(self, delta: f64) -> Self {
        Self { delta, ..self }
    }

    pub fn with_gain(mut self, gain: f64) -> Self {
        self.res_a.gain = gain;
        self
    }

    pub fn with_coupling(self, coupling: f64) -> Self {
        Self { coupling, ..self }
    }

    /// Every violated invariant; empty when the parameters are usable.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let finite = [
            ("omega_a", self.res_a.omega),
            ("omega_b", self.res_b.omega),
            ("kappa_ex_a", self.res_a.kappa_ex),
            ("kappa_0_a", self.res_a.kappa_0),
            ("gain", self.res_a.gain),
            ("kappa_ex_b", self.res_b.kappa_ex),
            ("kappa_0_b", self.res_b.kappa_0),
            ("J", self.coupling),
            ("delta", self.delta),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                out.push(Diagnostic::NonFinite(name));
            }
        }
        if self.res_a.omega != self.res_b.omega {
            out.push(Diagnostic::UnequalFrequencies {
                omega_a: self.res_a.omega,
                omega_b: self.res_b.omega,
            });
        }
        let rates = [
            ("kappa_ex_a", self.res_a.kappa_ex),
            ("kappa_0_a", self.res_a.kappa_0),
            ("gain", self.res_a.gain),
            ("kappa_ex_b", self.res_b.kappa_ex),
            ("kappa_0_b", self.res_b.kappa_0),
        ];
        for (name, value) in rates {
            if value < 0.0 {
                out.push(Diagnostic::NegativeRate { name, value });
            }
        }
        if !(self.kappa_b() > 0.0) && self.res_b.kappa_ex >= 0.0 && self.res_b.kappa_0 >= 0.0 {
            out.push(Diagnostic::NonPositiveDecayB(self.kappa_b()));
        }
        if self.coupling < 0.0 {
            out.push(Diagnostic::NegativeCoupling(self.coupling));
        }
        if self.delta < 0.0 {
            out.push(Diagnostic::NegativeShift(self.delta));
        }
        out
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let d = self.validate();
        if d.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(d))
        }
    }

    /// Rescales every rate and frequency from `kappa_b` units to SI (rad/s).
    pub fn to_si(&self, kappa_b_si: f64) -> Self {
        self.scaled(kappa_b_si)
    }

    /// Inverse of [`SystemParams::to_si`].
    pub fn from_si(&self, kappa_b_si: f64) -> Self {
        self.scaled(1.0 / kappa_b_si)
    }

    fn scaled(&self, k: f64) -> Self {
        Self {
            res_a: ResonatorA {
                omega: k * self.res_a.omega,
                kappa_ex: k * self.res_a.kappa_ex,
                kappa_0: k * self.res_a.kappa_0,
                gain: k * self.res_a.gain,
            },
            res_b: ResonatorB {
                omega: k * self.res_b.omega,
                kappa_ex: k * self.res_b.kappa_ex,
                kappa_0: k * self.res_b.kappa_0,
            },
            coupling: k * self.coupling,
            delta: k * self.delta,
        }
    }
}

pub fn validate_drive(drive: &Drive) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for (name, value) in [("eta_a", drive.eta_a), ("eta_b", drive.eta_b)] {
        if !value.is_finite() {
            out.push(Diagnostic::NonFinite(name));
        } else if value < 0.0 {
            out.push(Diagnostic::NegativeDrive { name, value });
        }
    }
    if !drive.omega_d.is_finite() {
        out.push(Diagnostic::NonFinite("omega_d"));
    }
    out
}

/// Parameter sets used for the figures of the reference study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Figure {
    Fig2,
    Fig3a,
    Fig3b,
    Fig4,
    Fig5Gain,
    Fig5NoGain,
}

impl Figure {
    pub const ALL: [Figure; 6] = [
        Figure::Fig2,
        Figure::Fig3a,
        Figure::Fig3b,
        Figure::Fig4,
        Figure::Fig5Gain,
        Figure::Fig5NoGain,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig2 => "Fig2",
            Figure::Fig3a => "Fig3a",
            Figure::Fig3b => "Fig3b",
            Figure::Fig4 => "Fig4",
            Figure::Fig5Gain => "Fig5_gain",
            Figure::Fig5NoGain => "Fig5_nogain",
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parse(format!("unknown figure '{s}'")))
    }
}

/// Exact parameters of a figure in `kappa_b = 1` units.
///
/// Figures that only quote the net gain `g_a` use the loss split
/// `kappa_ex,a = kappa_0,a = 0.5`, so `g = g_a + 1 = 1.5`. The Sagnac shift
/// defaults to 2 where a figure sweeps it; drives are zero where the figure
/// concerns only fluctuations.
pub fn canonical_figure_params(figure: Figure) -> (SystemParams, Drive) {
    let port = 0.5;
    let base = |gain: f64, delta: f64| SystemParams {
        res_a: ResonatorA { omega: 0.0, kappa_ex: port, kappa_0: port, gain },
        res_b: ResonatorB { omega: 0.0, kappa_ex: port, kappa_0: port },
        coupling: 5.0,
        delta,
    };
    match figure {
        Figure::Fig2 => (base(1.5, 0.0), Drive::resonant(0.0)),
        Figure::Fig3a => (base(1.5, 2.0), Drive::new(0.2, 0.0, 0.0)),
        Figure::Fig3b => (base(1.5, 2.0), Drive::new(0.2, 0.2, 0.0)),
        Figure::Fig4 | Figure::Fig5Gain => (base(1.5, 2.0), Drive::resonant(0.0)),
        Figure::Fig5NoGain => (base(0.0, 2.0), Drive::resonant(0.0)),
    }
}

/// Flat JSON parameter file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamFile {
    pub omega_bar: f64,
    pub kappa_ex_a: f64,
    pub kappa_0_a: f64,
    pub gain: f64,
    pub kappa_ex_b: f64,
    pub kappa_0_b: f64,
    #[serde(rename = "J")]
    pub coupling: f64,
    pub delta: f64,
    pub eta_a: f64,
    pub eta_b: f64,
    pub omega_d: f64,
}

impl ParamFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain numeric struct serializes")
    }

    /// Applies a `key=value` override, rejecting unknown keys.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        let mut map = match serde_json::to_value(*self)? {
            serde_json::Value::Object(m) => m,
            _ => unreachable!(),
        };
        if !map.contains_key(key) {
            return Err(Error::Parse(format!("unknown parameter key '{key}'")));
        }
        let v = serde_json::Number::from_f64(value)
            .ok_or_else(|| Error::Parse(format!("non-finite value for '{key}'")))?;
        map.insert(key.to_string(), serde_json::Value::Number(v));
        *self = serde_json::from_value(serde_json::Value::Object(map))?;
        Ok(())
    }

    pub fn split(&self) -> (SystemParams, Drive) {
        let p = SystemParams {
            res_a: ResonatorA {
                omega: self.omega_bar,
                kappa_ex: self.kappa_ex_a,
                kappa_0: self.kappa_0_a,
                gain: self.gain,
            },
            res_b: ResonatorB { omega: self.omega_bar, kappa_ex: self.kappa_ex_b, kappa_0: self.kappa_0_b },
            coupling: self.coupling,
            delta: self.delta,
        };
        (p, Drive::new(self.eta_a, self.eta_b, self.omega_d))
    }

    pub fn join(params: &SystemParams, drive: &Drive) -> Self {
        Self {
            omega_bar: params.omega_bar(),
            kappa_ex_a: params.res_a.kappa_ex,
            kappa_0_a: params.res_a.kappa_0,
            gain: params.res_a.gain,
            kappa_ex_b: params.res_b.kappa_ex,
            kappa_0_b: params.res_b.kappa_0,
            coupling: params.coupling,
            delta: params.delta,
            eta_a: drive.eta_a,
            eta_b: drive.eta_b,
            omega_d: drive.omega_d,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform() -> SystemParams {
        canonical_figure_params(Figure::Fig4).0.with_delta(0.0)
    }

    #[test]
    fn uniform_rates_are_valid() {
        assert!(uniform().validate().is_empty());
    }

    #[test]
    fn unequal_frequencies_flagged() {
        let mut p = uniform();
        p.res_a.omega = 1.0;
        p.res_b.omega = 2.0;
        let d = p.validate();
        assert_eq!(d.len(), 1);
        assert!(d[0].to_string().contains("unequal bare frequencies"));
        assert!(SystemParams::new(p.res_a, p.res_b, 5.0, 0.0).is_err());
    }

    #[test]
    fn negative_rate_flagged() {
        let mut p = uniform();
        p.res_b.kappa_ex = -0.1;
        let d = p.validate();
        assert!(d.iter().any(|d| d.to_string().contains("negative rate")));
    }

    #[test]
    fn net_gain_derived_from_rates() {
        let (p, _) = canonical_figure_params(Figure::Fig2);
        assert_eq!(p.net_gain(), 0.5);
        assert_eq!(p.coupling, 5.0);
        assert_eq!(p.kappa_b(), 1.0);
    }

    #[test]
    fn figure_parameter_sets() {
        let (p, d) = canonical_figure_params(Figure::Fig3b);
        assert_eq!((d.eta_a, d.eta_b), (0.2, 0.2));
        assert_eq!(p.net_gain(), 0.5);
        let (p, d) = canonical_figure_params(Figure::Fig3a);
        assert_eq!((d.eta_a, d.eta_b), (0.2, 0.0));
        assert_eq!(p.coupling, 5.0);
        let (p, _) = canonical_figure_params(Figure::Fig5Gain);
        assert_eq!(p.res_a.gain, 1.5);
        assert_eq!(p.delta, 2.0);
        for r in [p.res_a.kappa_ex, p.res_a.kappa_0, p.res_b.kappa_ex, p.res_b.kappa_0] {
            assert_eq!(r, 0.5);
        }
        let (p, _) = canonical_figure_params(Figure::Fig5NoGain);
        assert_eq!(p.res_a.gain, 0.0);
        assert_eq!("fig5_GAIN".parse::<Figure>().unwrap(), Figure::Fig5Gain);
    }

    #[test]
    fn param_file_rejects_unknown_keys() {
        let (p, d) = canonical_figure_params(Figure::Fig3a);
        let text = ParamFile::join(&p, &d).to_json();
        let back = ParamFile::from_json(&text).unwrap();
        assert_eq!(back.split(), (p, d));

        let bad = text.replace("\"delta\"", "\"Delta\"");
        assert!(ParamFile::from_json(&bad).is_err());

        let mut f = back;
        f.set("J", 3.0).unwrap();
        assert_eq!(f.coupling, 3.0);
        assert!(f.set("coupling", 3.0).is_err());
    }

    #[test]
    fn negative_drive_flagged() {
        let d = validate_drive(&Drive::new(-0.1, 0.0, 0.0));
        assert_eq!(d.len(), 1);
    }
}
