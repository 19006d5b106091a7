//! Envelope densities and power-gain samplers for Rayleigh, Rice and
//! Nakagami fading.
//!
//! A gain `g = x² / E[x²]` is the multiplicative factor applied to the mean
//! received power, so every sampler has `E[g] = 1`.

use rand_distr::{Distribution, Gamma, StandardNormal};

use super::special::{bessel_i0_scaled, ln_gamma};
use super::{FadingSpec, PropagationKind};
use crate::error::{Result, SimError};
use crate::kernel::RngStream;

fn require_fading(spec: &FadingSpec) -> Result<()> {
    if spec.kind.is_small_scale_fading() {
        Ok(())
    } else {
        Err(SimError::Domain(format!("{} is not a small-scale fading model", spec.kind)))
    }
}

/// Density of the received envelope `x`.
///
/// Rayleigh: `2x/P · exp(-x²/P)`.
/// Rice: `2x(K+1)/P · exp(-K - (K+1)x²/P) · I₀(2x·sqrt(K(K+1)/P))`.
/// Nakagami: `2 m^m x^(2m-1) / (Γ(m) Ω^m) · exp(-m x²/Ω)`.
pub fn envelope_pdf(spec: &FadingSpec, x: f64) -> Result<f64> {
    require_fading(spec)?;
    if x < 0.0 {
        return Ok(0.0);
    }
    let p = spec.mean_power;
    let density = match spec.kind {
        PropagationKind::Rayleigh => 2.0 * x / p * (-x * x / p).exp(),
        PropagationKind::Rice => {
            let k = spec.rice_k;
            let z = 2.0 * x * (k * (k + 1.0) / p).sqrt();
            // I₀(z) = e^z · i0e(z); fold e^z into the exponent.
            let exponent = -k - (k + 1.0) * x * x / p + z;
            2.0 * x * (k + 1.0) / p * exponent.exp() * bessel_i0_scaled(z)
        }
        PropagationKind::Nakagami => {
            let m = spec.nakagami_m;
            let omega = p;
            if x == 0.0 {
                // x^(2m-1) is 1 at m = 1/2 and 0 above it.
                if m == 0.5 {
                    2.0 * m.powf(m) / ((ln_gamma(m)).exp() * omega.powf(m))
                } else {
                    0.0
                }
            } else {
                let ln = std::f64::consts::LN_2 + m * m.ln() + (2.0 * m - 1.0) * x.ln()
                    - ln_gamma(m)
                    - m * omega.ln()
                    - m * x * x / omega;
                ln.exp()
            }
        }
        _ => unreachable!(),
    };
    Ok(density)
}

/// Draws one power gain with unit mean.
///
/// Rayleigh: `-ln U`. Rice: `((ν+a)² + b²)/P` with `ν² = KP/(K+1)` and
/// `a, b ~ N(0, P/(2(K+1)))`. Nakagami: `Gamma(m, 1/m)`.
pub fn fading_gain(spec: &FadingSpec, rng: &mut RngStream) -> Result<f64> {
    require_fading(spec)?;
    let g = match spec.kind {
        PropagationKind::Rayleigh => -(1.0 - rng.uniform()).ln(),
        PropagationKind::Rice => {
            let (k, p) = (spec.rice_k, spec.mean_power);
            let nu = (k * p / (k + 1.0)).sqrt();
            let sigma = (p / (2.0 * (k + 1.0))).sqrt();
            let a: f64 = StandardNormal.sample(rng);
            let b: f64 = StandardNormal.sample(rng);
            let i = nu + sigma * a;
            let q = sigma * b;
            (i * i + q * q) / p
        }
        PropagationKind::Nakagami => {
            let m = spec.nakagami_m;
            let dist = Gamma::new(m, 1.0 / m).map_err(|e| SimError::Domain(e.to_string()))?;
            dist.sample(rng)
        }
        _ => unreachable!(),
    };
    Ok(g)
}

/// Draws one envelope amplitude `x = sqrt(g · E[x²])`.
pub fn envelope_sample(spec: &FadingSpec, rng: &mut RngStream) -> Result<f64> {
    Ok((fading_gain(spec, rng)? * spec.mean_power).sqrt())
}
