//! Rotation-induced Sagnac-Fizeau shift of the spinning resonator.
//!
//! `Delta = (n R Omega omega_a / c) (1 - 1/n^2 - (lambda/n) dn/dlambda)`,
//! linear in the angular velocity `Omega` (rad/s).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Below this magnitude the dispersion factor is treated as zero.
const DISPERSION_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SagnacConfig {
    /// Refractive index, > 1.
    pub n: f64,
    #[serde(rename = "R_m")]
    pub radius_m: f64,
    pub lambda_m: f64,
    #[serde(default)]
    pub dn_dlambda: f64,
    pub omega_a_rad_s: f64,
    /// Decay rate of the passive resonator used as the frequency unit.
    #[serde(rename = "kappa_b_SI")]
    pub kappa_b_si: f64,
}

/// A shift expressed both in rad/s and in `kappa_b` units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shift {
    pub rad_s: f64,
    pub scaled: f64,
}

impl SagnacConfig {
    /// Silica microsphere near 1550 nm with `omega_a = 2 pi c / lambda`.
    pub fn silica_microsphere(radius_m: f64, kappa_b_si: f64) -> Self {
        let lambda_m = 1.55e-6;
        Self {
            n: 1.44,
            radius_m,
            lambda_m,
            dn_dlambda: 0.0,
            omega_a_rad_s: 2.0 * PI * SPEED_OF_LIGHT / lambda_m,
            kappa_b_si,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<()> {
        let ok = self.n > 1.0
            && self.radius_m > 0.0
            && self.lambda_m > 0.0
            && self.omega_a_rad_s > 0.0
            && self.kappa_b_si > 0.0
            && self.dispersion_factor().is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Parse(format!("invalid Sagnac configuration {self:?}")))
        }
    }

    /// `1 - 1/n^2 - (lambda/n) dn/dlambda`.
    pub fn dispersion_factor(&self) -> f64 {
        1.0 - 1.0 / (self.n * self.n) - self.lambda_m / self.n * self.dn_dlambda
    }

    fn rad_s_per_rotation(&self) -> f64 {
        self.n * self.radius_m * self.omega_a_rad_s / SPEED_OF_LIGHT * self.dispersion_factor()
    }

    pub fn shift_from_rotation(&self, omega_rot: f64) -> Shift {
        let rad_s = self.rad_s_per_rotation() * omega_rot;
        Shift { rad_s, scaled: rad_s / self.kappa_b_si }
    }

    /// Same as [`shift_from_rotation`](Self::shift_from_rotation) with a cyclic rotation rate in Hz.
    pub fn shift_from_rotation_hz(&self, rotation_hz: f64) -> Shift {
        self.shift_from_rotation(2.0 * PI * rotation_hz)
    }

    /// Angular velocity (rad/s) that produces the shift `delta_rad_s`.
    pub fn rotation_from_shift(&self, delta_rad_s: f64) -> Result<f64> {
        let d = self.dispersion_factor();
        if d.abs() < DISPERSION_FLOOR {
            return Err(Error::DegenerateDispersion(d));
        }
        Ok(delta_rad_s / self.rad_s_per_rotation())
    }

    /// Inverse map for a shift given in `kappa_b` units.
    pub fn rotation_from_scaled_shift(&self, delta: f64) -> Result<f64> {
        self.rotation_from_shift(delta * self.kappa_b_si)
    }
}
