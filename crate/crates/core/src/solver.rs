//! The fixed-point map `𝒯 = (𝒯₁, 𝒯₂)`, Picard iteration and the smallness
//! verifier.
//!
//! ```text
//! 𝒯₁(ν, μ)(t) = e^{Δ(T−t)} ∇G(Ω(ν, μ)) + I⁻(H₁(ν, μ))(t)
//! 𝒯₂(ν, μ)(t) = e^{Δt} m₀ + I⁺(μ, H₂(ν, μ))(t)
//! ```
//!
//! `ν` is measured in `(B_{αT})^d` and `μ` in `PM^α`. The iteration starts at the
//! centre of the ball `X`, `(e^{Δ(T−t)}∇G(e^{ΔT}m₀), e^{Δt}m₀)`.

use serde::{Deserialize, Serialize};

use crate::duhamel::QuadratureScheme;
use crate::error::{Error, Result};
use crate::hamiltonian::{eval_hamiltonians, growth_constants, GrowthConstants, HamiltonianSpec};
use crate::payoff::{grad_payoff, payoff_constants, PayoffConstants, PayoffSpec};
use crate::spectral::{
    heat_semigroup, norm_pm, st_norm_pm_alpha, ModeSet, SpaceTimeField, SpaceTimeVector,
    SpectralField, TimeGrid,
};

/// Which of the two `Υ` constants enters the contraction verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpsilonChoice {
    /// `max(Υ, Υ̃)`.
    #[default]
    Conservative,
    Upsilon,
    UpsilonTilde,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub contraction_target: f64,
    pub upsilon: UpsilonChoice,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 200,
            contraction_target: 0.5,
            upsilon: UpsilonChoice::Conservative,
        }
    }
}

/// A fully specified discrete problem.
#[derive(Debug, Clone)]
pub struct Problem {
    modes: ModeSet,
    grid: TimeGrid,
    alpha: f64,
    m0: SpectralField,
    hamiltonian: HamiltonianSpec,
    payoff: PayoffSpec,
    settings: SolverSettings,
    quad: QuadratureScheme,
    heat_m0: SpaceTimeField,
}

impl Problem {
    pub fn new(
        grid: TimeGrid,
        alpha: f64,
        m0: SpectralField,
        hamiltonian: HamiltonianSpec,
        payoff: PayoffSpec,
        settings: SolverSettings,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::InvalidArgument(format!(
                "alpha must lie in α∈[0,1), got {alpha}"
            )));
        }
        if !(settings.tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be positive, got {}",
                settings.tol
            )));
        }
        if settings.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        if !(settings.contraction_target > 0.0 && settings.contraction_target < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "contraction target must lie in (0,1), got {}",
                settings.contraction_target
            )));
        }
        payoff.validate()?;
        let modes = m0.modes();
        hamiltonian.validate(modes.dim(), u32::MAX)?;
        Ok(Self {
            modes,
            grid,
            alpha,
            quad: QuadratureScheme::new(modes, grid),
            heat_m0: SpaceTimeField::heat_flow(grid, &m0),
            m0,
            hamiltonian,
            payoff,
            settings,
        })
    }

    pub fn modes(&self) -> ModeSet {
        self.modes
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// The fixed weight `β = αT` of the `B_β` norms.
    pub fn beta(&self) -> f64 {
        self.alpha * self.grid.horizon()
    }

    pub fn m0(&self) -> &SpectralField {
        &self.m0
    }

    pub fn hamiltonian(&self) -> &HamiltonianSpec {
        &self.hamiltonian
    }

    pub fn payoff(&self) -> &PayoffSpec {
        &self.payoff
    }

    pub fn settings(&self) -> &SolverSettings {
        &self.settings
    }

    /// The same problem with another payoff scale.
    pub fn with_delta_g(&self, delta_g: f64) -> Result<Self> {
        let payoff = self.payoff.with_delta(delta_g);
        payoff.validate()?;
        Ok(Self {
            payoff,
            ..self.clone()
        })
    }

    /// The same problem with other initial data.
    pub fn with_m0(&self, m0: SpectralField) -> Result<Self> {
        if m0.modes() != self.modes {
            return Err(Error::Mismatch("new m0 has a different mode set".into()));
        }
        Ok(Self {
            heat_m0: SpaceTimeField::heat_flow(self.grid, &m0),
            m0,
            ..self.clone()
        })
    }

    /// The same problem on a uniform grid with `steps` steps.
    pub fn with_time_steps(&self, steps: usize) -> Result<Self> {
        let grid = TimeGrid::new(self.grid.horizon(), steps)?;
        Ok(Self {
            grid,
            quad: QuadratureScheme::new(self.modes, grid),
            heat_m0: SpaceTimeField::heat_flow(grid, &self.m0),
            ..self.clone()
        })
    }

    pub fn with_settings(&self, settings: SolverSettings) -> Self {
        Self {
            settings,
            ..self.clone()
        }
    }

    /// `t ↦ e^{Δt} m₀`.
    pub fn heat_m0(&self) -> &SpaceTimeField {
        &self.heat_m0
    }

    /// `t ↦ e^{Δ(T−t)} ∇G(m_T)`.
    pub fn terminal_transport(&self, m_terminal: &SpectralField) -> Result<SpaceTimeVector> {
        let grad = grad_payoff(&self.payoff, m_terminal)?;
        let horizon = self.grid.horizon();
        let slices = self
            .grid
            .times()
            .map(|t| {
                let lag = (horizon - t).max(0.0);
                Ok(grad.map(|c| heat_semigroup(c, lag).expect("nonnegative lag")))
            })
            .collect::<Result<Vec<_>>>()?;
        SpaceTimeVector::from_time_slices(self.grid, slices)
    }

    /// Centre of the ball `X`.
    pub fn ball_center(&self) -> Result<Iterate> {
        Ok(Iterate {
            v: self.terminal_transport(self.heat_m0.last())?,
            m: self.heat_m0.clone(),
        })
    }

    /// `(B_{αT})^d` norm of a `ν` and `PM^α` norm of a `μ`.
    pub fn norms(&self, v: &SpaceTimeVector, m: &SpaceTimeField) -> (f64, f64) {
        (v.norm_b(self.beta()), st_norm_pm_alpha(m, self.alpha))
    }

    fn check_iterate(&self, v: &SpaceTimeVector, m: &SpaceTimeField) -> Result<()> {
        if m.grid() != self.grid || m.modes() != self.modes {
            return Err(Error::Mismatch("m does not match the problem grid".into()));
        }
        if v.dim() != self.modes.dim() || v.grid() != self.grid || v.modes() != self.modes {
            return Err(Error::Mismatch("v does not match the problem grid".into()));
        }
        Ok(())
    }
}

/// A pair `(ν, μ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Iterate {
    pub v: SpaceTimeVector,
    pub m: SpaceTimeField,
}

/// Image of the map together with `Ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct MapOutput {
    pub v: SpaceTimeVector,
    pub m: SpaceTimeField,
    pub omega: SpectralField,
}

/// Evaluates `𝒯₁` and `𝒯₂` at once; `I⁺` is computed a single time and `Ω` is
/// the final slice of `𝒯₂`.
pub fn apply_map(
    problem: &Problem,
    nu: &SpaceTimeVector,
    mu: &SpaceTimeField,
) -> Result<MapOutput> {
    problem.check_iterate(nu, mu)?;
    let h = eval_hamiltonians(&problem.hamiltonian, nu, mu)?;
    let ip = problem.quad.i_plus(mu, &h.h2)?;
    let m = problem.heat_m0.add(&ip)?;
    let omega = m.last().clone();
    let v = problem
        .terminal_transport(&omega)?
        .add(&problem.quad.i_minus(&h.h1)?)?;
    Ok(MapOutput { v, m, omega })
}

pub fn t1(problem: &Problem, nu: &SpaceTimeVector, mu: &SpaceTimeField) -> Result<SpaceTimeVector> {
    Ok(apply_map(problem, nu, mu)?.v)
}

pub fn t2(problem: &Problem, nu: &SpaceTimeVector, mu: &SpaceTimeField) -> Result<SpaceTimeField> {
    Ok(apply_map(problem, nu, mu)?.m)
}

/// `(‖v − 𝒯₁(v,m)‖_{(B_{αT})^d}, ‖m − 𝒯₂(v,m)‖_{PM^α})`.
pub fn residual(problem: &Problem, v: &SpaceTimeVector, m: &SpaceTimeField) -> Result<(f64, f64)> {
    let out = apply_map(problem, v, m)?;
    Ok(problem.norms(&v.sub(&out.v)?, &m.sub(&out.m)?))
}

/// Result of a converged Picard run.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub v: SpaceTimeVector,
    pub m: SpaceTimeField,
    /// Number of map evaluations, including the final residual check.
    pub iterations: usize,
    /// Combined update norm after each map evaluation.
    pub updates: Vec<f64>,
    /// Ratios of successive update norms.
    pub ratios: Vec<f64>,
    pub v_residual: f64,
    pub m_residual: f64,
    pub smallness: SmallnessReport,
}

impl SolveReport {
    /// Largest ratio of successive updates, ignoring updates at or below `floor`.
    pub fn worst_ratio(&self, floor: f64) -> Option<f64> {
        self.updates
            .windows(2)
            .filter(|w| w[0] > floor && w[1] > floor)
            .map(|w| w[1] / w[0])
            .reduce(f64::max)
    }
}

/// Picard iteration from the ball centre.
pub fn picard_solve(problem: &Problem) -> Result<SolveReport> {
    let start = problem.ball_center()?;
    picard_solve_from(problem, start)
}

/// Picard iteration from a caller-supplied start.
///
/// Each step replaces both components with the map image of the previous pair.
/// Once the combined update drops below `tol`, the next map evaluation checks
/// the accepted iterate's residuals; both must be at most `tol`.
pub fn picard_solve_from(problem: &Problem, start: Iterate) -> Result<SolveReport> {
    problem.check_iterate(&start.v, &start.m)?;
    let smallness = smallness_check(problem)?;
    let ball = 10.0 * (smallness.r0 + smallness.r1);
    let tol = problem.settings.tol;

    let mut x = start;
    let mut updates = Vec::new();
    let mut candidate = false;
    for evals in 1..=problem.settings.max_iter {
        let y = apply_map(problem, &x.v, &x.m)?;
        let (dv, dm) = problem.norms(&x.v.sub(&y.v)?, &x.m.sub(&y.m)?);
        let update = dv + dm;
        updates.push(update);
        if candidate && dv <= tol && dm <= tol {
            let ratios = updates.windows(2).map(|w| w[1] / w[0]).collect();
            return Ok(SolveReport {
                v: x.v,
                m: x.m,
                iterations: evals,
                updates,
                ratios,
                v_residual: dv,
                m_residual: dm,
                smallness,
            });
        }
        candidate = update < tol;
        let (nv, nm) = problem.norms(&y.v, &y.m);
        if nv + nm > ball {
            return Err(Error::NotConverged {
                iterations: evals,
                last_update: update,
                diverging: true,
            });
        }
        x = Iterate { v: y.v, m: y.m };
    }
    let last = updates.last().copied().unwrap_or(f64::NAN);
    let growing = updates.len() >= 2 && updates[updates.len() - 1] > updates[updates.len() - 2];
    Err(Error::NotConverged {
        iterations: problem.settings.max_iter,
        last_update: last,
        diverging: growing,
    })
}

/// Which hypothesis of the existence theorem a configuration corresponds to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// Superlinear Hamiltonians made contractive by a small payoff.
    SmallPayoff,
    /// Contraction carried by small Hamiltonian constants.
    SmallHamiltonian,
}

impl Route {
    pub fn label(&self) -> &'static str {
        match self {
            Route::SmallPayoff => "small_payoff",
            Route::SmallHamiltonian => "small_hamiltonian",
        }
    }
}

/// One inequality `lhs ≤ rhs` of the existence proof.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallnessCondition {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmallnessReport {
    pub delta_g: f64,
    pub r0: f64,
    /// Exact discrete norm of the ball centre's `v` component.
    pub r1: f64,
    /// `c_G R₀ Ψ₁(R₀)`.
    pub r1_payoff_bound: f64,
    pub upsilon: f64,
    pub upsilon_tilde: f64,
    pub upsilon_choice: UpsilonChoice,
    pub payoff: PayoffConstants,
    /// Payoff part of the `𝒯₁` Lipschitz constant.
    pub lip_t1_payoff: f64,
    /// `I⁻` part of the `𝒯₁` Lipschitz constant.
    pub lip_t1_hamiltonian: f64,
    pub lip_t2: f64,
    /// `lip_t1_payoff + lip_t1_hamiltonian + lip_t2`.
    pub contraction_constant: f64,
    pub contraction_target: f64,
    pub conditions: Vec<SmallnessCondition>,
    pub route: Route,
    pub pass: bool,
}

impl SmallnessReport {
    pub fn failed(&self) -> Vec<&'static str> {
        self.conditions
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name)
            .collect()
    }
}

/// Inputs of the verifier that do not depend on `δ_G`.
#[derive(Debug, Clone)]
pub struct SmallnessInputs {
    dim: usize,
    alpha: f64,
    r0: f64,
    /// `R₁` at `δ_G = 1`; `R₁` is linear in `δ_G`.
    r1_unit: f64,
    hamiltonian: GrowthConstants,
    /// Payoff constants at `δ_G = 1`; all scale linearly in `δ_G`.
    payoff_unit: PayoffConstants,
    target: f64,
    upsilon: UpsilonChoice,
}

impl SmallnessInputs {
    pub fn new(problem: &Problem) -> Result<Self> {
        let unit = problem.with_delta_g(1.0)?;
        let r1_unit = unit
            .terminal_transport(problem.heat_m0.last())?
            .norm_b(problem.beta());
        Ok(Self {
            dim: problem.modes.dim(),
            alpha: problem.alpha,
            r0: norm_pm(&problem.m0, 0.0),
            r1_unit,
            hamiltonian: growth_constants(&problem.hamiltonian)?,
            payoff_unit: payoff_constants(&unit.payoff, problem.modes, problem.beta())?,
            target: problem.settings.contraction_target,
            upsilon: problem.settings.upsilon,
        })
    }

    /// Evaluates every condition at payoff scale `δ_G`.
    pub fn evaluate(&self, delta_g: f64) -> SmallnessReport {
        let h = &self.hamiltonian;
        let (f1, g1, f2, g2) = (&h.f1, &h.g1, &h.f2, &h.g2);
        let a = self.alpha;
        let r0 = self.r0;
        let r1 = delta_g * self.r1_unit;
        let pc = PayoffConstants {
            c_g: delta_g * self.payoff_unit.c_g,
            c_g_tilde: delta_g * self.payoff_unit.c_g_tilde,
            ..self.payoff_unit.clone()
        };
        let inv = 1.0 / (1.0 - a);
        let ball_v = 2.0 * r1;
        let ball_m = r0 + r1;

        // R₁ ≤ c_G R₀ Ψ₁(R₀) is how the proof bounds R₁ inside Υ; the exact
        // discrete R₁ is used when it is larger (possible for d > 1).
        let r1_payoff_bound = pc.c_g * r0 * pc.psi1.eval(r0);
        let r1_in_upsilon = r1_payoff_bound.max(r1);
        let omega_excess =
            (r0 + r1_in_upsilon).powi(2) * f2.c * g2.c * (2.0 * r1_in_upsilon).powf(f2.p + g2.p);
        let upsilon = pc.psi2.eval(2.0 * r0 + inv * omega_excess);
        let upsilon_tilde = pc.psi2.eval(2.0 * r0 + 2.0 * inv * omega_excess);
        let upsilon_used = match self.upsilon {
            UpsilonChoice::Conservative => upsilon.max(upsilon_tilde),
            UpsilonChoice::Upsilon => upsilon,
            UpsilonChoice::UpsilonTilde => upsilon_tilde,
        };

        let t1_payoff_self =
            pc.c_g_tilde * g2.c * f2.c * upsilon * inv * ball_v.powf(g2.p + f2.p) * ball_m.powi(2);
        let t1_ham_self = self.dim as f64 * f1.c * g1.c * ball_v.powf(f1.p + g1.p) * ball_m;
        let t2_self = f2.c * g2.c * inv * ball_v.powf(f2.p + g2.p) * ball_m.powi(2);

        let h2_bracket = f2.c * g2.c * ball_v.powf(f2.p + g2.p)
            + f2.c * g2.c_tilde * ball_v.powf(f2.p + g2.p_tilde) * ball_m
            + f2.c_tilde * g2.c * ball_v.powf(f2.p_tilde + g2.p) * ball_m;
        let lip_t1_payoff = pc.c_g_tilde * upsilon_used * 2.0 * inv * ball_m * h2_bracket;
        let lip_t1_hamiltonian = self.dim as f64
            * (2.0 * f1.c * g1.c_tilde * ball_v.powf(f1.p + g1.p_tilde) * ball_m
                + 2.0 * g1.c * f1.c_tilde * ball_v.powf(g1.p + f1.p_tilde) * ball_m
                + f1.c * g1.c * ball_v.powf(f1.p + g1.p));
        let lip_t2 = 2.0 * inv * ball_m * h2_bracket;
        let q = lip_t1_payoff + lip_t1_hamiltonian + lip_t2;

        let cond = |name, lhs: f64, rhs: f64| SmallnessCondition {
            name,
            lhs,
            rhs,
            pass: lhs <= rhs,
        };
        let conditions = vec![
            cond("t1_payoff_self_map", t1_payoff_self, r1 / 4.0),
            cond("t1_hamiltonian_self_map", t1_ham_self, r1 / 4.0),
            cond("t2_self_map", t2_self, r1 / 2.0),
            cond("contraction", q, self.target),
        ];
        let pass = conditions.iter().all(|c| c.pass);

        let superlinear = f1.p + g1.p > 1.0
            && f2.p + g2.p > 1.0
            && f1.p + g1.p_tilde > 0.0
            && f1.p_tilde + g1.p > 0.0
            && f2.p + g2.p_tilde > 0.0
            && f2.p_tilde + g2.p > 0.0;
        SmallnessReport {
            delta_g,
            r0,
            r1,
            r1_payoff_bound,
            upsilon,
            upsilon_tilde,
            upsilon_choice: self.upsilon,
            payoff: pc,
            lip_t1_payoff,
            lip_t1_hamiltonian,
            lip_t2,
            contraction_constant: q,
            contraction_target: self.target,
            conditions,
            route: if superlinear {
                Route::SmallPayoff
            } else {
                Route::SmallHamiltonian
            },
            pass,
        }
    }
}

/// The verifier's report at the problem's own `δ_G`.
pub fn smallness_check(problem: &Problem) -> Result<SmallnessReport> {
    Ok(SmallnessInputs::new(problem)?.evaluate(problem.payoff.delta_g))
}

/// Largest `δ_G` for which every condition passes, by doubling then bisection.
/// `None` when the conditions already fail at `δ_G = 0`.
pub fn max_passing_delta_g(problem: &Problem) -> Result<Option<f64>> {
    let inputs = SmallnessInputs::new(problem)?;
    let passes = |d: f64| inputs.evaluate(d).pass;
    if !passes(0.0) {
        return Ok(None);
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while passes(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e15 {
            return Ok(Some(f64::INFINITY));
        }
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if passes(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo))
}
