//! Seeded random fields for property checks and bound experiments.

use num_complex::Complex64;
use rand::Rng;

use crate::spectral::{
    ModeSet, SpaceTimeField, SpaceTimeVector, SpectralField, TimeGrid, VectorField,
};

/// How amplitudes vary along the time grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeProfile {
    /// Independent draws per slice.
    Rough,
    /// Quadratic polynomial in `t` with random spatial coefficients.
    Smooth,
}

/// A random field with amplitudes `U(-1,1)·e^{-λ|k|}` for a random decay rate
/// `λ ∈ [0, 1.5)`, restricted to `|k|_∞ ≤ band`.
pub fn field(modes: ModeSet, band: usize, real: bool, rng: &mut impl Rng) -> SpectralField {
    let decay = rng.gen_range(0.0..1.5);
    let band = band as i64;
    SpectralField::from_fn(modes, real, |k| {
        let re = rng.gen_range(-1.0..1.0);
        let im = rng.gen_range(-1.0..1.0);
        if k.sup_norm() > band {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(re, im) * (-decay * k.norm()).exp()
        }
    })
}

pub fn vector(modes: ModeSet, band: usize, real: bool, rng: &mut impl Rng) -> VectorField {
    VectorField::new(
        (0..modes.dim())
            .map(|_| field(modes, band, real, rng))
            .collect(),
    )
    .expect("components share modes")
}

pub fn space_time(
    grid: TimeGrid,
    modes: ModeSet,
    band: usize,
    real: bool,
    profile: TimeProfile,
    rng: &mut impl Rng,
) -> SpaceTimeField {
    let slices = match profile {
        TimeProfile::Rough => (0..grid.len())
            .map(|_| field(modes, band, real, rng))
            .collect(),
        TimeProfile::Smooth => {
            let a = field(modes, band, real, rng);
            let b = field(modes, band, real, rng);
            let c = field(modes, band, real, rng);
            let h = grid.horizon();
            grid.times()
                .map(|t| {
                    let s = t / h;
                    a.axpy(s, &b)
                        .and_then(|f| f.axpy(s * s, &c))
                        .expect("same modes")
                })
                .collect()
        }
    };
    SpaceTimeField::from_slices(grid, slices).expect("slices share modes")
}

pub fn space_time_vector(
    grid: TimeGrid,
    modes: ModeSet,
    band: usize,
    real: bool,
    profile: TimeProfile,
    rng: &mut impl Rng,
) -> SpaceTimeVector {
    SpaceTimeVector::new(
        (0..modes.dim())
            .map(|_| space_time(grid, modes, band, real, profile, rng))
            .collect(),
    )
    .expect("components share grid and modes")
}

/// Rescales `f` so that `norm(f) = target`. Zero fields are returned unchanged.
pub fn with_norm<T>(
    f: T,
    norm: impl Fn(&T) -> f64,
    scale: impl Fn(&T, f64) -> T,
    target: f64,
) -> T {
    let n = norm(&f);
    if n == 0.0 {
        f
    } else {
        scale(&f, target / n)
    }
}
