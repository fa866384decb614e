//! Lipschitz dependence of the solution on `m₀` in the `PM⁰` norm.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::{pm0_distance, realize, CoeffEntry, MeasureKind, MeasureSpec};
use crate::solver::{picard_solve, smallness_check, Problem, SmallnessReport};

/// The constant in `‖v₁−v₂‖ + ‖m₁−m₂‖ ≤ 4‖m₀¹−m₀²‖_{PM⁰}`.
pub const DEPENDENCE_CONSTANT: f64 = 4.0;
/// Relative slack for discretization error.
pub const DEPENDENCE_SLACK: f64 = 1.02;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DependenceReport {
    /// `‖v₁−v₂‖_{(B_{αT})^d}`.
    pub v_distance: f64,
    /// `‖m₁−m₂‖_{PM^α}`.
    pub m_distance: f64,
    /// `‖m₀¹−m₀²‖_{PM⁰}`.
    pub data_distance: f64,
    /// `(v_distance + m_distance) / data_distance`, or 0 when both vanish.
    pub ratio: f64,
    pub allowed: f64,
    pub pass: bool,
    pub iterations_a: usize,
    pub iterations_b: usize,
}

fn require_smallness(label: &str, rep: &SmallnessReport) -> Result<()> {
    if rep.pass {
        Ok(())
    } else {
        Err(Error::Smallness(format!(
            "problem {label} fails {} at delta_g = {}",
            rep.failed().join(", "),
            rep.delta_g
        )))
    }
}

/// Solves the problem from `m0_a` and from `m0_b` and compares the solution
/// distance with the data distance. Refuses to run unless both problems pass
/// the smallness verifier.
pub fn continuous_dependence_experiment(
    problem: &Problem,
    m0_a: &MeasureSpec,
    m0_b: &MeasureSpec,
) -> Result<DependenceReport> {
    let modes = problem.modes();
    let pa = problem.with_m0(realize(m0_a, modes)?)?;
    let pb = problem.with_m0(realize(m0_b, modes)?)?;
    require_smallness("a", &smallness_check(&pa)?)?;
    require_smallness("b", &smallness_check(&pb)?)?;
    let (sa, sb) = rayon::join(|| picard_solve(&pa), || picard_solve(&pb));
    let (sa, sb) = (sa?, sb?);
    let (v_distance, m_distance) = problem.norms(&sa.v.sub(&sb.v)?, &sa.m.sub(&sb.m)?);
    let data_distance = pm0_distance(pa.m0(), pb.m0())?;
    let lhs = v_distance + m_distance;
    let ratio = if lhs == 0.0 { 0.0 } else { lhs / data_distance };
    let allowed = DEPENDENCE_CONSTANT * DEPENDENCE_SLACK;
    Ok(DependenceReport {
        v_distance,
        m_distance,
        data_distance,
        ratio,
        allowed,
        pass: ratio <= allowed,
        iterations_a: sa.iterations,
        iterations_b: sb.iterations,
    })
}

/// `(1−s)m₀ + s·(2m₀)`: every Dirac keeps its location and the added copy
/// doubles its weight, so the data distance is `s‖m₀‖_{PM⁰}` for one Dirac.
pub fn dirac_weight_perturbation(m0: &MeasureSpec, s: f64) -> Result<MeasureSpec> {
    if !matches!(m0.kind, MeasureKind::Dirac | MeasureKind::DiracSum) {
        return Err(Error::InvalidArgument(
            "weight perturbation needs Dirac data".into(),
        ));
    }
    let mut locations = m0.locations.clone();
    locations.extend(m0.locations.iter().cloned());
    let mut weights: Vec<f64> = m0.weights.iter().map(|w| (1.0 - s) * w).collect();
    weights.extend(m0.weights.iter().map(|w| 2.0 * s * w));
    Ok(MeasureSpec::dirac_sum(locations, weights))
}

/// Adds `eps·cos(x₁)`, i.e. `eps/2` at `k = ±e₁`, to a band-limited density.
pub fn density_mode_perturbation(m0: &MeasureSpec, dim: usize, eps: f64) -> Result<MeasureSpec> {
    if m0.kind != MeasureKind::BandLimitedDensity {
        return Err(Error::InvalidArgument(
            "mode perturbation needs density data".into(),
        ));
    }
    let mut coeffs = m0.coeffs.clone();
    for sign in [1, -1] {
        let mut k = vec![0i64; dim];
        k[0] = sign;
        match coeffs.iter_mut().find(|c| c.k == k) {
            Some(c) => c.re += 0.5 * eps,
            None => coeffs.push(CoeffEntry {
                k,
                re: 0.5 * eps,
                im: 0.0,
            }),
        }
    }
    Ok(MeasureSpec::density(coeffs))
}

/// The default second datum: a weight perturbation for Dirac data (default
/// size 0.01) and a single-mode perturbation for densities (default 1e-3).
pub fn default_partner(m0: &MeasureSpec, dim: usize, size: Option<f64>) -> Result<MeasureSpec> {
    match m0.kind {
        MeasureKind::BandLimitedDensity => density_mode_perturbation(m0, dim, size.unwrap_or(1e-3)),
        _ => dirac_weight_perturbation(m0, size.unwrap_or(0.01)),
    }
}
