//! Terminal payoffs `G(m)` and their bound constants.
//!
//! Two payoffs are provided, each scaled by `δ_G`:
//!
//! * smoothing: the Fourier multiplier `1/(1 + |k|^{1+d+γ})`, linear in `m`;
//! * truncation: `(χ_n m)²·sin(x₁ + … + x_d)`, where `χ_n` keeps modes with
//!   Euclidean `|k| ≤ n`.
//!
//! The constants satisfy, for `β = αT`,
//! `‖G(m)‖_{B_{1,β}} ≤ c_G ‖m‖_{PM^β} Ψ₁(‖m‖_{PM^β})` and
//! `‖G(m₁)−G(m₂)‖_{B_{1,β}} ≤ c̃_G ‖m₁−m₂‖_{PM^β} Ψ₂(‖m₁‖_{PM^β}+‖m₂‖_{PM^β})`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{convolve, sin_mode, ModeSet, SpectralField, VectorField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayoffKind {
    Truncation,
    Smoothing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayoffSpec {
    pub kind: PayoffKind,
    /// Truncation radius of `χ_n` (truncation kind).
    #[serde(default)]
    pub n: u32,
    /// Smoothing exponent `γ > 0` (smoothing kind).
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Overall scale `δ_G ≥ 0`.
    pub delta_g: f64,
}

fn default_gamma() -> f64 {
    1.0
}

impl PayoffSpec {
    pub fn smoothing(gamma: f64, delta_g: f64) -> Self {
        Self {
            kind: PayoffKind::Smoothing,
            n: 0,
            gamma,
            delta_g,
        }
    }

    pub fn truncation(n: u32, delta_g: f64) -> Self {
        Self {
            kind: PayoffKind::Truncation,
            n,
            gamma: default_gamma(),
            delta_g,
        }
    }

    pub fn with_delta(mut self, delta_g: f64) -> Self {
        self.delta_g = delta_g;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta_g >= 0.0 && self.delta_g.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "payoff scale delta_g must be finite and >= 0, got {}",
                self.delta_g
            )));
        }
        if self.kind == PayoffKind::Smoothing && !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "smoothing exponent gamma must be positive, got {}",
                self.gamma
            )));
        }
        Ok(())
    }

    fn smoothing_symbol(&self, dim: usize, r: f64) -> f64 {
        1.0 / (1.0 + r.powf(1.0 + dim as f64 + self.gamma))
    }
}

/// `sin(x₁ + … + x_d)`.
fn diagonal_sine(modes: ModeSet) -> SpectralField {
    sin_mode(modes, &vec![1; modes.dim()]).expect("mode (1,..,1) is always stored")
}

/// `G(m)`.
pub fn apply_payoff(spec: &PayoffSpec, m: &SpectralField) -> Result<SpectralField> {
    spec.validate()?;
    let modes = m.modes();
    match spec.kind {
        PayoffKind::Smoothing => {
            let d = modes.dim();
            Ok(m.apply_symbol(|k| spec.delta_g * spec.smoothing_symbol(d, k.norm())))
        }
        PayoffKind::Truncation => {
            let low = m.low_pass(spec.n as f64);
            let sq = convolve(&low, &low)?;
            Ok(convolve(&sq, &diagonal_sine(modes))?.scale(spec.delta_g))
        }
    }
}

/// `∇G(m)`.
pub fn grad_payoff(spec: &PayoffSpec, m: &SpectralField) -> Result<VectorField> {
    Ok(apply_payoff(spec, m)?.gradient())
}

/// A nonnegative function of a norm, as used in the payoff bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum Psi {
    Constant { value: f64 },
    Affine { intercept: f64, slope: f64 },
}

impl Psi {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            Psi::Constant { value } => value,
            Psi::Affine { intercept, slope } => intercept + slope * r,
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            Psi::Constant { value } => format!("Psi(r) = {value}"),
            Psi::Affine { intercept, slope } => format!("Psi(r) = {intercept} + {slope}*r"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PayoffConstants {
    pub c_g: f64,
    pub c_g_tilde: f64,
    pub psi1: Psi,
    pub psi2: Psi,
    pub derivation: String,
}

/// Constants over the stored modes `|k|_∞ ≤ K` for the weight `β = αT`.
pub fn payoff_constants(spec: &PayoffSpec, modes: ModeSet, beta: f64) -> Result<PayoffConstants> {
    spec.validate()?;
    if !(beta >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "weight beta must be >= 0, got {beta}"
        )));
    }
    let d = modes.dim();
    match spec.kind {
        PayoffKind::Smoothing => {
            let sum: f64 = modes
                .modes()
                .map(|k| {
                    let r = k.norm();
                    (1.0 + r) * spec.smoothing_symbol(d, r)
                })
                .sum();
            let c = spec.delta_g * sum;
            Ok(PayoffConstants {
                c_g: c,
                c_g_tilde: c,
                psi1: Psi::Constant { value: 1.0 },
                psi2: Psi::Constant { value: 1.0 },
                derivation: format!(
                    "linear multiplier: c_G = c~_G = delta_G * sum_(|k|_inf<=K) (1+|k|)/(1+|k|^(1+d+gamma)) = {c}; Psi1 = Psi2 = 1"
                ),
            })
        }
        PayoffKind::Truncation => {
            let sqrt_d = (d as f64).sqrt();
            let sine_norm = (1.0 + sqrt_d) * (beta * sqrt_d).exp();
            let radius = spec.n as f64;
            let kept: f64 = modes
                .modes()
                .map(|k| k.norm())
                .filter(|&r| r <= radius)
                .map(|r| 1.0 + r)
                .sum();
            let c = spec.delta_g * sine_norm * kept * kept;
            Ok(PayoffConstants {
                c_g: c,
                c_g_tilde: c,
                psi1: Psi::Affine {
                    intercept: 0.0,
                    slope: 1.0,
                },
                psi2: Psi::Affine {
                    intercept: 0.0,
                    slope: 1.0,
                },
                derivation: format!(
                    "B_(1,beta) is an algebra; ||sin||_(B_(1,beta)) = (1+sqrt d)e^(beta sqrt d) = {sine_norm}; \
                     ||chi_n m||_(B_(1,beta)) <= N_n ||m||_(PM^beta) with N_n = sum_(|k|<=n) (1+|k|) = {kept}; \
                     a^2-b^2 = (a-b)(a+b) gives c_G = c~_G = delta_G * {sine_norm} * N_n^2 = {c}, Psi1(r) = Psi2(r) = r"
                ),
            })
        }
    }
}

/// `c_G` summed over all of `ℤ^d` instead of the stored box, for the smoothing
/// payoff (the truncation payoff's constant does not depend on `K` once
/// `K ≥ n`). This is an upper refinement of the discrete constant.
pub fn continuum_c_g(spec: &PayoffSpec, dim: usize) -> Option<f64> {
    match spec.kind {
        PayoffKind::Smoothing => Some(spec.delta_g * smoothing_continuum_sum(dim, spec.gamma)),
        PayoffKind::Truncation => None,
    }
}

/// `Σ_{k∈ℤ^d} (1+|k|)/(1+|k|^{1+d+γ})`: exact sum over `|k| ≤ R` plus the
/// radial integral bound of the tail.
fn smoothing_continuum_sum(d: usize, gamma: f64) -> f64 {
    let cutoff: i64 = match d {
        1 => 4000,
        2 => 120,
        _ => 30,
    };
    let r_max = cutoff as f64;
    let modes = ModeSet::new(d, cutoff as usize).expect("valid dimension");
    let s = 1.0 + d as f64 + gamma;
    let mut sum = 0.0;
    for k in modes.modes() {
        let r = k.norm();
        if r <= r_max {
            sum += (1.0 + r) / (1.0 + r.powf(s));
        }
    }
    let surface = match d {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 4.0 * PI,
    };
    // ∫_R^∞ (1+r) r^{d-1} / r^{1+d+γ} dr
    let tail = surface * (r_max.powf(-1.0 - gamma) / (1.0 + gamma) + r_max.powf(-gamma) / gamma);
    sum + tail
}
