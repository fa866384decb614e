//! Nonlocal nonseparable Hamiltonians `H_i(v, m) = g_i(v)·∫ f_i(v) m dx` with
//! polynomial `f_i`, `g_i`.
//!
//! `f₁`, `g₁`, `f₂` are scalar polynomials in the components of `v`; `g₂` is
//! vector valued with one polynomial per component. Products are alias-free
//! convolutions, so every polynomial maps the Wiener algebra into itself.

use std::collections::HashMap;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::pair_raw;
use crate::random;
use crate::spectral::{
    convolve, norm_b, ModeSet, SpaceTimeField, SpaceTimeVector, SpectralField, VectorField,
};

/// Default cap on the total degree of a polynomial.
pub const DEFAULT_MAX_DEGREE: u32 = 4;

/// `coeff · Π_n v_n^{powers[n]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    pub coeff: f64,
    pub powers: Vec<u32>,
}

impl Monomial {
    pub fn degree(&self) -> u32 {
        self.powers.iter().sum()
    }
}

/// A real polynomial in the `d` components of `v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polynomial {
    pub terms: Vec<Monomial>,
}

impl Polynomial {
    pub fn new(terms: Vec<Monomial>) -> Self {
        Self { terms }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::new(vec![Monomial {
            coeff: c,
            powers: vec![0; dim],
        }])
    }

    /// `c·v_n`.
    pub fn linear(dim: usize, n: usize, c: f64) -> Self {
        let mut powers = vec![0; dim];
        powers[n] = 1;
        Self::new(vec![Monomial { coeff: c, powers }])
    }

    /// `|v|² = Σ_n v_n²`.
    pub fn norm_sq(dim: usize) -> Self {
        Self::new(
            (0..dim)
                .map(|n| {
                    let mut powers = vec![0; dim];
                    powers[n] = 2;
                    Monomial { coeff: 1.0, powers }
                })
                .collect(),
        )
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(Monomial::degree).max().unwrap_or(0)
    }

    fn validate(&self, dim: usize, max_degree: u32) -> Result<()> {
        for t in &self.terms {
            if t.powers.len() != dim {
                return Err(Error::InvalidArgument(format!(
                    "monomial powers {:?} do not have {dim} entries",
                    t.powers
                )));
            }
            if !t.coeff.is_finite() {
                return Err(Error::InvalidArgument(
                    "non-finite monomial coefficient".into(),
                ));
            }
        }
        let degree = self.degree();
        if degree > max_degree {
            return Err(Error::DegreeOverflow {
                degree,
                max: max_degree,
            });
        }
        Ok(())
    }

    /// Evaluates on one time slice of `v`, reusing powers across monomials.
    pub fn eval(&self, v: &VectorField) -> SpectralField {
        let mut cache = PowerCache::new(v);
        self.eval_cached(&mut cache)
    }

    fn eval_cached(&self, cache: &mut PowerCache<'_>) -> SpectralField {
        let modes = cache.v.modes();
        let mut acc = SpectralField::zeros(modes);
        for t in &self.terms {
            if t.coeff == 0.0 {
                continue;
            }
            let mut prod: Option<SpectralField> = None;
            for (n, &p) in t.powers.iter().enumerate() {
                if p == 0 {
                    continue;
                }
                let factor = cache.power(n, p);
                prod = Some(match prod {
                    None => factor,
                    Some(q) => convolve(&q, &factor).expect("same modes"),
                });
            }
            let term = prod.unwrap_or_else(|| SpectralField::constant(modes, 1.0));
            acc = acc.axpy(t.coeff, &term).expect("same modes");
        }
        acc
    }
}

/// Memoized powers `v_n^p` of one vector slice.
struct PowerCache<'a> {
    v: &'a VectorField,
    powers: HashMap<(usize, u32), SpectralField>,
}

impl<'a> PowerCache<'a> {
    fn new(v: &'a VectorField) -> Self {
        Self {
            v,
            powers: HashMap::new(),
        }
    }

    fn power(&mut self, n: usize, p: u32) -> SpectralField {
        if p == 1 {
            return self.v.component(n).clone();
        }
        if let Some(f) = self.powers.get(&(n, p)) {
            return f.clone();
        }
        let lower = self.power(n, p - 1);
        let f = convolve(&lower, self.v.component(n)).expect("same modes");
        self.powers.insert((n, p), f.clone());
        f
    }
}

/// A polynomial map of `v`: one component for scalar maps, `d` for vector maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PolyMap {
    pub components: Vec<Polynomial>,
}

impl PolyMap {
    pub fn scalar(p: Polynomial) -> Self {
        Self {
            components: vec![p],
        }
    }

    pub fn vector(components: Vec<Polynomial>) -> Self {
        Self { components }
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.components
            .iter()
            .map(Polynomial::degree)
            .max()
            .unwrap_or(0)
    }

    pub fn validate(&self, dim: usize, max_degree: u32) -> Result<()> {
        self.components
            .iter()
            .try_for_each(|p| p.validate(dim, max_degree))
    }

    /// Evaluates at one time, one output field per component.
    pub fn eval_slice(&self, v: &VectorField) -> Vec<SpectralField> {
        let mut cache = PowerCache::new(v);
        self.components
            .iter()
            .map(|p| p.eval_cached(&mut cache))
            .collect()
    }

    /// `(B_β)^n` norm of the image: sum of component norms.
    pub fn image_norm_b(&self, v: &VectorField, beta: f64) -> f64 {
        self.eval_slice(v).iter().map(|f| norm_b(f, beta)).sum()
    }
}

/// Slice-wise evaluation of a polynomial map on a space-time vector field.
pub fn eval_poly(map: &PolyMap, v: &SpaceTimeVector) -> Result<Vec<SpaceTimeField>> {
    let grid = v.grid();
    let per_time: Vec<Vec<SpectralField>> = (0..grid.len())
        .into_par_iter()
        .map(|i| map.eval_slice(&v.at(i)))
        .collect();
    let mut comps: Vec<Vec<SpectralField>> = vec![Vec::with_capacity(grid.len()); map.len()];
    for slice in per_time {
        for (c, f) in comps.iter_mut().zip(slice) {
            c.push(f);
        }
    }
    comps
        .into_iter()
        .map(|s| SpaceTimeField::from_slices(grid, s))
        .collect()
}

/// `A(t) = Σ_k f_k(t) m_{-k}(t)` on every grid time. Real inputs give real output.
pub fn pairing_a(f_of_v: &SpaceTimeField, m: &SpaceTimeField) -> Result<Vec<Complex64>> {
    f_of_v.check_compatible(m)?;
    Ok(f_of_v
        .slices()
        .iter()
        .zip(m.slices())
        .map(|(f, mu)| pair_raw(mu, f))
        .collect())
}

/// Growth and Lipschitz constants of one function `h`:
/// `‖h(v)‖ ≤ c‖v‖^p` and `‖h(v₁)−h(v₂)‖ ≤ c̃‖v₁−v₂‖(‖v₁‖^p̃ + ‖v₂‖^p̃)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FnConstants {
    pub c: f64,
    pub p: f64,
    pub c_tilde: f64,
    pub p_tilde: f64,
}

impl FnConstants {
    pub const fn new(c: f64, p: f64, c_tilde: f64, p_tilde: f64) -> Self {
        Self {
            c,
            p,
            c_tilde,
            p_tilde,
        }
    }

    fn validate(&self, which: &str) -> Result<()> {
        let ok = [self.c, self.p, self.c_tilde, self.p_tilde]
            .iter()
            .all(|x| x.is_finite() && *x >= 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "constants for {which} must be finite and nonnegative"
            )))
        }
    }

    /// `c·r^p` with the convention `0^0 = 1`.
    pub fn growth(&self, r: f64) -> f64 {
        self.c * r.powf(self.p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthConstants {
    pub f1: FnConstants,
    pub g1: FnConstants,
    pub f2: FnConstants,
    pub g2: FnConstants,
}

impl GrowthConstants {
    pub fn validate(&self) -> Result<()> {
        self.f1.validate("f1")?;
        self.g1.validate("g1")?;
        self.f2.validate("f2")?;
        self.g2.validate("g2")
    }
}

/// The four polynomial maps together with their declared constants.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSpec {
    pub name: String,
    pub f1: PolyMap,
    pub g1: PolyMap,
    pub f2: PolyMap,
    pub g2: PolyMap,
    pub constants: Option<GrowthConstants>,
}

/// Built-in Hamiltonians selectable by name.
pub const BUILTIN_NAMES: [&str; 2] = ["example-quartic", "example-quadratic"];

fn g2_gradient_like(dim: usize) -> PolyMap {
    PolyMap::vector((0..dim).map(|n| Polynomial::linear(dim, n, 2.0)).collect())
}

const QUADRATIC_G: [FnConstants; 2] = [
    // g1 = |v|²
    FnConstants::new(1.0, 2.0, 1.0, 1.0),
    // g2 = 2v
    FnConstants::new(2.0, 1.0, 1.0, 0.0),
];

impl HamiltonianSpec {
    /// `f₁ = g₁ = f₂ = |v|²`, `g₂ = 2v`.
    pub fn example_quartic(dim: usize) -> Self {
        let sq = PolyMap::scalar(Polynomial::norm_sq(dim));
        let quad = FnConstants::new(1.0, 2.0, 1.0, 1.0);
        Self {
            name: BUILTIN_NAMES[0].into(),
            f1: sq.clone(),
            g1: sq.clone(),
            f2: sq,
            g2: g2_gradient_like(dim),
            constants: Some(GrowthConstants {
                f1: quad,
                g1: QUADRATIC_G[0],
                f2: quad,
                g2: QUADRATIC_G[1],
            }),
        }
    }

    /// `f₁ = f₂ = 1`, `g₁ = |v|²`, `g₂ = 2v`, so `H₁ = |v|²·mass`.
    pub fn example_quadratic(dim: usize) -> Self {
        let one = PolyMap::scalar(Polynomial::constant(dim, 1.0));
        let unit = FnConstants::new(1.0, 0.0, 0.0, 0.0);
        Self {
            name: BUILTIN_NAMES[1].into(),
            f1: one.clone(),
            g1: PolyMap::scalar(Polynomial::norm_sq(dim)),
            f2: one,
            g2: g2_gradient_like(dim),
            constants: Some(GrowthConstants {
                f1: unit,
                g1: QUADRATIC_G[0],
                f2: unit,
                g2: QUADRATIC_G[1],
            }),
        }
    }

    pub fn builtin(name: &str, dim: usize) -> Result<Self> {
        match name {
            "example-quartic" => Ok(Self::example_quartic(dim)),
            "example-quadratic" => Ok(Self::example_quadratic(dim)),
            other => Err(Error::Config(format!(
                "unknown hamiltonian '{other}', expected one of {BUILTIN_NAMES:?}"
            ))),
        }
    }

    pub fn validate(&self, dim: usize, max_degree: u32) -> Result<()> {
        for (which, map, len) in [
            ("f1", &self.f1, 1),
            ("g1", &self.g1, 1),
            ("f2", &self.f2, 1),
            ("g2", &self.g2, dim),
        ] {
            if map.len() != len {
                return Err(Error::InvalidArgument(format!(
                    "{which} must have {len} component(s), got {}",
                    map.len()
                )));
            }
            map.validate(dim, max_degree)?;
        }
        if let Some(c) = &self.constants {
            c.validate()?;
        }
        Ok(())
    }
}

/// The declared constant table; custom specs without one are rejected.
pub fn growth_constants(spec: &HamiltonianSpec) -> Result<GrowthConstants> {
    spec.constants.ok_or_else(|| {
        Error::MissingConstants(format!(
            "hamiltonian '{}' declares no growth/Lipschitz constants",
            spec.name
        ))
    })
}

/// `H₁` and `H₂` on the full grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianValues {
    pub h1: SpaceTimeField,
    pub h2: SpaceTimeVector,
    /// `A₁(t)`, `A₂(t)` on the grid.
    pub a1: Vec<Complex64>,
    pub a2: Vec<Complex64>,
}

/// Evaluates both Hamiltonians. Maps shared between `f₁, g₁, f₂` are evaluated
/// once.
pub fn eval_hamiltonians(
    spec: &HamiltonianSpec,
    v: &SpaceTimeVector,
    m: &SpaceTimeField,
) -> Result<HamiltonianValues> {
    check_shapes(v, m)?;
    let grid = v.grid();
    let per_time: Vec<_> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let vi = v.at(i);
            let mi = m.slice(i);
            let mut cache = PowerCache::new(&vi);
            let f1 = spec.f1.components[0].eval_cached(&mut cache);
            let g1 = if spec.g1 == spec.f1 {
                f1.clone()
            } else {
                spec.g1.components[0].eval_cached(&mut cache)
            };
            let f2 = if spec.f2 == spec.f1 {
                f1.clone()
            } else {
                spec.f2.components[0].eval_cached(&mut cache)
            };
            let a1 = pair_raw(mi, &f1);
            let a2 = pair_raw(mi, &f2);
            let h1 = g1.scale_complex(a1);
            let h2: Vec<SpectralField> = spec
                .g2
                .components
                .iter()
                .map(|p| p.eval_cached(&mut cache).scale_complex(a2))
                .collect();
            (h1, h2, a1, a2)
        })
        .collect();

    let mut h1 = Vec::with_capacity(grid.len());
    let mut h2: Vec<Vec<SpectralField>> = vec![Vec::with_capacity(grid.len()); spec.g2.len()];
    let mut a1 = Vec::with_capacity(grid.len());
    let mut a2 = Vec::with_capacity(grid.len());
    for (x1, x2, y1, y2) in per_time {
        h1.push(x1);
        for (c, f) in h2.iter_mut().zip(x2) {
            c.push(f);
        }
        a1.push(y1);
        a2.push(y2);
    }
    Ok(HamiltonianValues {
        h1: SpaceTimeField::from_slices(grid, h1)?,
        h2: SpaceTimeVector::new(
            h2.into_iter()
                .map(|s| SpaceTimeField::from_slices(grid, s))
                .collect::<Result<Vec<_>>>()?,
        )?,
        a1,
        a2,
    })
}

fn check_shapes(v: &SpaceTimeVector, m: &SpaceTimeField) -> Result<()> {
    if v.dim() != m.modes().dim() {
        return Err(Error::Mismatch(format!(
            "v has {} components in dimension {}",
            v.dim(),
            m.modes().dim()
        )));
    }
    v.component(0).check_compatible(m)
}

/// `H₁(v, m) = g₁(v)·A₁(t)`.
pub fn eval_h1(
    spec: &HamiltonianSpec,
    v: &SpaceTimeVector,
    m: &SpaceTimeField,
) -> Result<SpaceTimeField> {
    check_shapes(v, m)?;
    let f = eval_poly(&spec.f1, v)?.remove(0);
    let g = eval_poly(&spec.g1, v)?.remove(0);
    let a = pairing_a(&f, m)?;
    scale_in_time(&g, &a)
}

/// `H₂(v, m) = g₂(v)·A₂(t)`.
pub fn eval_h2(
    spec: &HamiltonianSpec,
    v: &SpaceTimeVector,
    m: &SpaceTimeField,
) -> Result<SpaceTimeVector> {
    check_shapes(v, m)?;
    let f = eval_poly(&spec.f2, v)?.remove(0);
    let a = pairing_a(&f, m)?;
    SpaceTimeVector::new(
        eval_poly(&spec.g2, v)?
            .iter()
            .map(|g| scale_in_time(g, &a))
            .collect::<Result<Vec<_>>>()?,
    )
}

fn scale_in_time(g: &SpaceTimeField, a: &[Complex64]) -> Result<SpaceTimeField> {
    SpaceTimeField::from_slices(
        g.grid(),
        g.slices()
            .iter()
            .zip(a)
            .map(|(s, &ai)| s.scale_complex(ai))
            .collect(),
    )
}

/// The two Lipschitz constants of `H₁` and `H₂` on the balls of radius `ρ₁`
/// (for `ν`) and `ρ₂` (for `μ`).
pub fn lipschitz_bound(c: &GrowthConstants, rho1: f64, rho2: f64) -> Result<(f64, f64)> {
    if !(rho1 > 0.0 && rho2 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "radii must be positive, got ({rho1}, {rho2})"
        )));
    }
    let bracket = |f: &FnConstants, g: &FnConstants| {
        2.0 * f.c * g.c_tilde * rho1.powf(f.p + g.p_tilde) * rho2
            + 2.0 * g.c * f.c_tilde * rho1.powf(g.p + f.p_tilde) * rho2
            + f.c * g.c * rho1.powf(f.p + g.p)
    };
    Ok((bracket(&c.f1, &c.g1), bracket(&c.f2, &c.g2)))
}

/// Worst observed ratio (observed / declared) of the growth and Lipschitz
/// bounds for each of `f₁, g₁, f₂, g₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantCheck {
    pub growth: [f64; 4],
    pub lipschitz: [f64; 4],
}

impl ConstantCheck {
    /// Names of the functions whose declared constants were exceeded.
    pub fn violations(&self, slack: f64) -> Vec<String> {
        let names = ["f1", "g1", "f2", "g2"];
        let mut out = Vec::new();
        for (i, name) in names.iter().enumerate() {
            if self.growth[i] > 1.0 + slack {
                out.push(format!("{name} growth (ratio {:.4})", self.growth[i]));
            }
            if self.lipschitz[i] > 1.0 + slack {
                out.push(format!("{name} Lipschitz (ratio {:.4})", self.lipschitz[i]));
            }
        }
        out
    }
}

/// Samples random `v` with `(B_β)^d` norm at most `max_norm` and compares each
/// map's image against its declared constants.
pub fn sample_constants(
    spec: &HamiltonianSpec,
    modes: ModeSet,
    beta: f64,
    max_norm: f64,
    trials: usize,
    rng: &mut impl Rng,
) -> Result<ConstantCheck> {
    let consts = growth_constants(spec)?;
    let maps = [&spec.f1, &spec.g1, &spec.f2, &spec.g2];
    let table = [consts.f1, consts.g1, consts.f2, consts.g2];
    let mut check = ConstantCheck {
        growth: [0.0; 4],
        lipschitz: [0.0; 4],
    };
    let band = modes.trunc() / 2;
    let norm = |v: &VectorField| v.norm_b(beta);
    for _ in 0..trials {
        let r1 = rng.gen_range(0.0..max_norm);
        let r2 = rng.gen_range(0.0..max_norm);
        let v1 = random::with_norm(
            random::vector(modes, band.max(1), true, rng),
            norm,
            |v, s| v.scale(s),
            r1,
        );
        let v2 = random::with_norm(
            random::vector(modes, band.max(1), true, rng),
            norm,
            |v, s| v.scale(s),
            r2,
        );
        let (n1, n2) = (norm(&v1), norm(&v2));
        let dv = v1.sub(&v2)?;
        for (i, (map, c)) in maps.iter().zip(&table).enumerate() {
            let img1 = map.eval_slice(&v1);
            let img2 = map.eval_slice(&v2);
            let lhs: f64 = img1.iter().map(|f| norm_b(f, beta)).sum();
            check.growth[i] = check.growth[i].max(ratio(lhs, c.growth(n1)));
            let diff: f64 = img1
                .iter()
                .zip(&img2)
                .map(|(a, b)| a.sub(b).map(|d| norm_b(&d, beta)))
                .sum::<Result<f64>>()?;
            let bound = c.c_tilde * norm(&dv) * (n1.powf(c.p_tilde) + n2.powf(c.p_tilde));
            check.lipschitz[i] = check.lipschitz[i].max(ratio(diff, bound));
        }
    }
    Ok(check)
}

/// `lhs / rhs`, treating `0/0` as 0 and `x/0` as infinite.
pub(crate) fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs <= 1e-300 {
        0.0
    } else if rhs <= 0.0 {
        f64::INFINITY
    } else {
        lhs / rhs
    }
}
