//! Radio propagation: deterministic path loss, log-normal shadowing and
//! small-scale fading, plus the receivability decision.

pub mod fading;
pub mod presets;
pub mod special;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Result, SimError};
use crate::kernel::RngStream;

pub use fading::{envelope_pdf, fading_gain};
pub use special::{bessel_i0, bessel_i0_scaled, gamma, ln_gamma};

/// Speed of light as used by the legacy simulator's wavelength defaults.
pub const LIGHT_SPEED: f64 = 3.0e8;

/// Transmitter/receiver physical-layer constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioParams {
    /// Transmit power, W.
    pub pt: f64,
    pub gt: f64,
    pub gr: f64,
    /// System loss factor, >= 1.
    pub loss: f64,
    /// Wavelength, m.
    pub lambda: f64,
    /// Antenna heights, m.
    pub ht: f64,
    pub hr: f64,
    /// Minimum decodable power, W.
    pub rx_thresh: f64,
    /// Carrier-sense power, W.
    pub cs_thresh: f64,
}

impl Default for RadioParams {
    /// 914 MHz, 1.5 m antennas, nominal 250 m range under Two-Ray.
    fn default() -> Self {
        RadioParams {
            pt: 0.281_838_15,
            gt: 1.0,
            gr: 1.0,
            loss: 1.0,
            lambda: LIGHT_SPEED / 914.0e6,
            ht: 1.5,
            hr: 1.5,
            rx_thresh: 3.652e-10,
            cs_thresh: 1.559e-11,
        }
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("pt", self.pt),
            ("gt", self.gt),
            ("gr", self.gr),
            ("loss", self.loss),
            ("lambda", self.lambda),
            ("ht", self.ht),
            ("hr", self.hr),
            ("rx_thresh", self.rx_thresh),
            ("cs_thresh", self.cs_thresh),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SimError::Domain(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.loss < 1.0 {
            return Err(SimError::Domain(format!("system loss must be >= 1, got {}", self.loss)));
        }
        if self.cs_thresh > self.rx_thresh {
            return Err(SimError::Domain("cs_thresh must not exceed rx_thresh".into()));
        }
        Ok(())
    }
}

/// Which propagation model applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PropagationKind {
    FreeSpace,
    TwoRay,
    Shadowing,
    Rayleigh,
    Rice,
    Nakagami,
}

impl PropagationKind {
    pub const ALL: [PropagationKind; 6] = [
        PropagationKind::FreeSpace,
        PropagationKind::TwoRay,
        PropagationKind::Shadowing,
        PropagationKind::Rayleigh,
        PropagationKind::Rice,
        PropagationKind::Nakagami,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PropagationKind::FreeSpace => "freespace",
            PropagationKind::TwoRay => "tworay",
            PropagationKind::Shadowing => "shadowing",
            PropagationKind::Rayleigh => "rayleigh",
            PropagationKind::Rice => "rice",
            PropagationKind::Nakagami => "nakagami",
        }
    }

    pub fn is_deterministic(self) -> bool {
        matches!(self, PropagationKind::FreeSpace | PropagationKind::TwoRay)
    }

    pub fn is_small_scale_fading(self) -> bool {
        matches!(self, PropagationKind::Rayleigh | PropagationKind::Rice | PropagationKind::Nakagami)
    }
}

impl fmt::Display for PropagationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PropagationKind {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        PropagationKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| SimError::Config(format!("unknown propagation model `{s}`")))
    }
}

/// Deterministic mean underneath the small-scale fading models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeanModel {
    FreeSpace,
    TwoRay,
}

impl FromStr for MeanModel {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "freespace" => Ok(MeanModel::FreeSpace),
            "tworay" => Ok(MeanModel::TwoRay),
            other => Err(SimError::Config(format!("unknown fading mean model `{other}`"))),
        }
    }
}

/// A propagation model and its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingSpec {
    pub kind: PropagationKind,
    /// Path-loss exponent (Shadowing).
    pub beta: f64,
    /// Shadowing deviation, dB.
    pub sigma_db: f64,
    /// Shadowing reference distance, m.
    pub d0: f64,
    /// Rice factor: direct-path power over scattered power.
    pub rice_k: f64,
    /// Nakagami shape, >= 1/2.
    pub nakagami_m: f64,
    /// Mean envelope power: P for Rayleigh/Rice, Ω = E[r²] for Nakagami.
    pub mean_power: f64,
    pub mean_model: MeanModel,
}

impl FadingSpec {
    pub fn new(kind: PropagationKind) -> Self {
        FadingSpec {
            kind,
            beta: 2.7,
            sigma_db: 4.0,
            d0: 1.0,
            rice_k: 5.0,
            nakagami_m: 0.75,
            mean_power: 1.0,
            mean_model: MeanModel::TwoRay,
        }
    }

    pub fn rayleigh(mean_power: f64) -> Self {
        FadingSpec { mean_power, ..FadingSpec::new(PropagationKind::Rayleigh) }
    }

    pub fn rice(k: f64, mean_power: f64) -> Self {
        FadingSpec { rice_k: k, mean_power, ..FadingSpec::new(PropagationKind::Rice) }
    }

    pub fn nakagami(m: f64, omega: f64) -> Self {
        FadingSpec { nakagami_m: m, mean_power: omega, ..FadingSpec::new(PropagationKind::Nakagami) }
    }

    pub fn shadowing(beta: f64, sigma_db: f64) -> Self {
        FadingSpec { beta, sigma_db, ..FadingSpec::new(PropagationKind::Shadowing) }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(SimError::Domain(what.to_owned()));
        if !(self.beta > 0.0) {
            return bad("beta must be positive");
        }
        if !(self.sigma_db >= 0.0) {
            return bad("sigma_db must be non-negative");
        }
        if !(self.d0 > 0.0) {
            return bad("d0 must be positive");
        }
        if !(self.rice_k >= 0.0) {
            return bad("rice K must be non-negative");
        }
        if !(self.nakagami_m >= 0.5) {
            return bad("nakagami m must be >= 1/2");
        }
        if !(self.mean_power > 0.0) {
            return bad("mean power must be positive");
        }
        Ok(())
    }
}

/// One received-power draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSample {
    pub deterministic_w: f64,
    pub gain: f64,
    pub received_w: f64,
}

impl PowerSample {
    pub fn receivable(&self, rp: &RadioParams) -> bool {
        self.received_w >= rp.rx_thresh
    }
}

fn check_distance(d: f64) -> Result<()> {
    if d > 0.0 && d.is_finite() {
        Ok(())
    } else {
        Err(SimError::Domain(format!("distance must be positive, got {d}")))
    }
}

/// Free-space (Friis) received power.
pub fn friis_power(rp: &RadioParams, d: f64) -> Result<f64> {
    check_distance(d)?;
    let four_pi = 4.0 * PI;
    Ok(rp.pt * rp.gt * rp.gr * rp.lambda * rp.lambda / (four_pi * four_pi * d * d * rp.loss))
}

/// Distance at which the free-space and two-ray predictions meet.
pub fn crossover_distance(rp: &RadioParams) -> f64 {
    4.0 * PI * rp.ht * rp.hr / rp.lambda
}

/// Two-ray ground reflection; falls back to Friis below the crossover.
pub fn two_ray_power(rp: &RadioParams, d: f64) -> Result<f64> {
    check_distance(d)?;
    if d < crossover_distance(rp) {
        return friis_power(rp, d);
    }
    let h2 = rp.ht * rp.ht * rp.hr * rp.hr;
    Ok(rp.pt * rp.gt * rp.gr * h2 / (d * d * d * d * rp.loss))
}

/// Mean of [Pr(d)/Pr(d0)] in dB.
pub fn shadowing_mean_db(beta: f64, d: f64, d0: f64) -> Result<f64> {
    check_distance(d)?;
    check_distance(d0)?;
    Ok(-10.0 * beta * (d / d0).log10())
}

/// Log-normal shadowing: reference power from Friis at `d0`, mean path
/// loss with exponent beta, plus a fresh N(0, σ²) dB term.
pub fn shadowing_sample(spec: &FadingSpec, rp: &RadioParams, d: f64, rng: &mut RngStream) -> Result<PowerSample> {
    if spec.kind != PropagationKind::Shadowing {
        return Err(SimError::Domain(format!("shadowing_sample called with {}", spec.kind)));
    }
    let reference = friis_power(rp, spec.d0)?;
    let mean_db = shadowing_mean_db(spec.beta, d, spec.d0)?;
    let x_db = if spec.sigma_db > 0.0 {
        let z: f64 = StandardNormal.sample(rng);
        spec.sigma_db * z
    } else {
        0.0
    };
    let deterministic_w = reference * 10f64.powf(mean_db / 10.0);
    let gain = 10f64.powf(x_db / 10.0);
    Ok(PowerSample { deterministic_w, gain, received_w: deterministic_w * gain })
}

fn mean_power(model: MeanModel, rp: &RadioParams, d: f64) -> Result<f64> {
    match model {
        MeanModel::FreeSpace => friis_power(rp, d),
        MeanModel::TwoRay => two_ray_power(rp, d),
    }
}

/// Received power at distance `d` under `spec`, drawing any randomness
/// from `rng`.
pub fn received_power(spec: &FadingSpec, rp: &RadioParams, d: f64, rng: &mut RngStream) -> Result<PowerSample> {
    let unit = |w: f64| PowerSample { deterministic_w: w, gain: 1.0, received_w: w };
    match spec.kind {
        PropagationKind::FreeSpace => friis_power(rp, d).map(unit),
        PropagationKind::TwoRay => two_ray_power(rp, d).map(unit),
        PropagationKind::Shadowing => shadowing_sample(spec, rp, d, rng),
        PropagationKind::Rayleigh | PropagationKind::Rice | PropagationKind::Nakagami => {
            let deterministic_w = mean_power(spec.mean_model, rp, d)?;
            let gain = fading_gain(spec, rng)?;
            Ok(PowerSample { deterministic_w, gain, received_w: deterministic_w * gain })
        }
    }
}
