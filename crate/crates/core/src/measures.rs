//! Initial distributions: Dirac masses, finite Dirac sums and band-limited
//! densities, plus the weak-* pairing and the `PM^0` distance.
//!
//! A Dirac mass at `x₀` with weight `w` has coefficients `w·e^{-ik·x₀}`, all of
//! modulus `w`. Pairing with a test function `φ = Σ φ_k e^{ik·x}` is
//! `Σ_k φ_k m_{-k}`, so `⟨δ_{x₀}, φ⟩ = φ(x₀)`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{norm_pm, ModeSet, SpectralField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    Dirac,
    DiracSum,
    BandLimitedDensity,
}

/// One entry of a band-limited density's coefficient table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffEntry {
    pub k: Vec<i64>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// Description of an initial measure `m₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    pub kind: MeasureKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub locations: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coeffs: Vec<CoeffEntry>,
}

impl MeasureSpec {
    pub fn dirac(location: Vec<f64>, weight: f64) -> Self {
        Self {
            kind: MeasureKind::Dirac,
            locations: vec![location],
            weights: vec![weight],
            coeffs: Vec::new(),
        }
    }

    pub fn dirac_sum(locations: Vec<Vec<f64>>, weights: Vec<f64>) -> Self {
        Self {
            kind: MeasureKind::DiracSum,
            locations,
            weights,
            coeffs: Vec::new(),
        }
    }

    pub fn density(coeffs: Vec<CoeffEntry>) -> Self {
        Self {
            kind: MeasureKind::BandLimitedDensity,
            locations: Vec::new(),
            weights: Vec::new(),
            coeffs,
        }
    }

    /// Total mass of a Dirac sum, or the zero mode of a density.
    pub fn total_mass(&self) -> f64 {
        match self.kind {
            MeasureKind::Dirac | MeasureKind::DiracSum => self.weights.iter().sum(),
            MeasureKind::BandLimitedDensity => self
                .coeffs
                .iter()
                .filter(|e| e.k.iter().all(|&c| c == 0))
                .map(|e| e.re)
                .sum(),
        }
    }

    /// Checks the spec against dimension `d` without building coefficients.
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self.kind {
            MeasureKind::Dirac | MeasureKind::DiracSum => {
                if self.locations.is_empty() {
                    return Err(Error::InvalidArgument("measure has no locations".into()));
                }
                if self.kind == MeasureKind::Dirac && self.locations.len() != 1 {
                    return Err(Error::InvalidArgument(
                        "a dirac measure takes exactly one location".into(),
                    ));
                }
                if self.locations.len() != self.weights.len() {
                    return Err(Error::InvalidArgument(format!(
                        "{} locations but {} weights",
                        self.locations.len(),
                        self.weights.len()
                    )));
                }
                if let Some(w) = self.weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
                    return Err(Error::InvalidArgument(format!(
                        "measure weights must be positive, got {w}"
                    )));
                }
                for x in &self.locations {
                    if x.len() != dim {
                        return Err(Error::InvalidArgument(format!(
                            "location {x:?} does not have {dim} components"
                        )));
                    }
                    if x.iter().any(|c| !(0.0..=TAU).contains(c)) {
                        return Err(Error::InvalidArgument(format!(
                            "location {x:?} lies outside [0, 2π]^{dim}"
                        )));
                    }
                }
                if !self.coeffs.is_empty() {
                    return Err(Error::InvalidArgument(
                        "coefficient table given for an atomic measure".into(),
                    ));
                }
            }
            MeasureKind::BandLimitedDensity => {
                if self.coeffs.is_empty() {
                    return Err(Error::InvalidArgument("density has no coefficients".into()));
                }
                if !self.locations.is_empty() || !self.weights.is_empty() {
                    return Err(Error::InvalidArgument(
                        "locations or weights given for a density".into(),
                    ));
                }
                for e in &self.coeffs {
                    if e.k.len() != dim {
                        return Err(Error::InvalidArgument(format!(
                            "mode {:?} does not have {dim} components",
                            e.k
                        )));
                    }
                    if !(e.re.is_finite() && e.im.is_finite()) {
                        return Err(Error::InvalidArgument(format!(
                            "non-finite coefficient at mode {:?}",
                            e.k
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Fourier coefficients of the measure on the mode set `modes`.
pub fn realize(spec: &MeasureSpec, modes: ModeSet) -> Result<SpectralField> {
    spec.validate(modes.dim())?;
    match spec.kind {
        MeasureKind::Dirac | MeasureKind::DiracSum => {
            Ok(SpectralField::from_fn(modes, true, |k| {
                spec.locations
                    .iter()
                    .zip(&spec.weights)
                    .map(|(x, &w)| {
                        let phase: f64 = k
                            .components()
                            .iter()
                            .zip(x)
                            .map(|(&kn, &xn)| kn as f64 * xn)
                            .sum();
                        Complex64::from_polar(w, -phase)
                    })
                    .sum()
            }))
        }
        MeasureKind::BandLimitedDensity => {
            let mut coeffs = vec![Complex64::new(0.0, 0.0); modes.len()];
            for e in &spec.coeffs {
                let idx = modes.index_of(&e.k).ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "density mode {:?} exceeds truncation K = {}",
                        e.k,
                        modes.trunc()
                    ))
                })?;
                coeffs[idx] += Complex64::new(e.re, e.im);
            }
            SpectralField::from_coeffs(modes, coeffs, true)
        }
    }
}

/// `‖a − b‖_{PM^0}`.
pub fn pm0_distance(a: &SpectralField, b: &SpectralField) -> Result<f64> {
    Ok(norm_pm(&a.sub(b)?, 0.0))
}

/// `⟨m, φ⟩ = Σ_k φ_k m_{-k}`. Real when both inputs are real.
pub fn pair_with_test(m: &SpectralField, phi: &SpectralField) -> Result<Complex64> {
    if m.modes() != phi.modes() {
        return Err(Error::Mismatch(format!(
            "pairing needs equal mode sets: (d={}, K={}) vs (d={}, K={})",
            m.dim(),
            m.trunc(),
            phi.dim(),
            phi.trunc()
        )));
    }
    Ok(pair_raw(m, phi))
}

pub(crate) fn pair_raw(m: &SpectralField, phi: &SpectralField) -> Complex64 {
    let mc = m.coeffs();
    let len = mc.len();
    let mut acc: Complex64 = phi
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, p)| p * mc[len - 1 - i])
        .sum();
    if m.is_real() && phi.is_real() {
        acc.im = 0.0;
    }
    acc
}
