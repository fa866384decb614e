//! TOML run configuration.
//!
//! Five sections: `[problem]` (required), `[hamiltonian]` (required),
//! `[payoff]` (required), `[solver]` and `[experiment]` (optional). Unknown keys
//! are rejected.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{
    sample_constants, GrowthConstants, HamiltonianSpec, PolyMap, DEFAULT_MAX_DEGREE,
};
use crate::measures::{realize, MeasureSpec};
use crate::payoff::PayoffSpec;
use crate::solver::{max_passing_delta_g, Problem, SolverSettings, UpsilonChoice};
use crate::spectral::{ModeSet, TimeGrid, MAX_DIM};
use crate::verify::{dyadic_sequence, BoundMatrix, TestFunction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub problem: ProblemSection,
    pub hamiltonian: HamiltonianSection,
    pub payoff: PayoffSpec,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub dim: usize,
    #[serde(default = "defaults::trunc")]
    pub trunc: usize,
    #[serde(default = "defaults::time_steps")]
    pub time_steps: usize,
    pub horizon: f64,
    pub alpha: f64,
    pub m0: MeasureSpec,
}

/// Either a built-in `name` or the four polynomial maps with their constants.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f1: Option<PolyMap>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g1: Option<PolyMap>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f2: Option<PolyMap>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g2: Option<PolyMap>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<GrowthConstants>,
    #[serde(default = "defaults::max_degree")]
    pub max_degree: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "defaults::tol")]
    pub tol: f64,
    #[serde(default = "defaults::max_iter")]
    pub max_iter: usize,
    #[serde(default = "defaults::contraction_target")]
    pub contraction_target: f64,
    #[serde(default)]
    pub upsilon: UpsilonChoice,
    /// When set, `δ_G` becomes this fraction of the largest passing value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_g_fraction: Option<f64>,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            tol: defaults::tol(),
            max_iter: defaults::max_iter(),
            contraction_target: defaults::contraction_target(),
            upsilon: UpsilonChoice::default(),
            delta_g_fraction: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(default)]
    pub seed: u64,
    /// Random trials per bound-suite cell.
    #[serde(default = "defaults::trials")]
    pub trials: usize,
    #[serde(default = "defaults::product_trials")]
    pub product_trials: usize,
    #[serde(default = "defaults::dims")]
    pub dims: Vec<usize>,
    #[serde(default = "defaults::truncs")]
    pub truncs: Vec<usize>,
    #[serde(default = "defaults::alphas")]
    pub alphas: Vec<f64>,
    /// Time steps of the bound-suite grid.
    #[serde(default = "defaults::bound_time_steps")]
    pub bound_time_steps: usize,
    /// Second datum for the continuous-dependence run; derived from `m0`
    /// when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m0_b: Option<MeasureSpec>,
    /// Size of the derived perturbation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<f64>,
    /// Dirac shifts for the weak-* run.
    #[serde(default = "defaults::eps")]
    pub eps: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub test_functions: Vec<TestFunction>,
    /// Probe times as fractions of the horizon.
    #[serde(default = "defaults::probe_fractions")]
    pub probe_fractions: Vec<f64>,
    /// Time resolutions for the oracle refinement study.
    #[serde(default = "defaults::refinement_steps")]
    pub refinement_steps: Vec<usize>,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            seed: 0,
            trials: defaults::trials(),
            product_trials: defaults::product_trials(),
            dims: defaults::dims(),
            truncs: defaults::truncs(),
            alphas: defaults::alphas(),
            bound_time_steps: defaults::bound_time_steps(),
            m0_b: None,
            perturbation: None,
            eps: defaults::eps(),
            test_functions: Vec::new(),
            probe_fractions: defaults::probe_fractions(),
            refinement_steps: defaults::refinement_steps(),
        }
    }
}

mod defaults {
    pub fn trunc() -> usize {
        16
    }
    pub fn time_steps() -> usize {
        128
    }
    pub fn max_degree() -> u32 {
        super::DEFAULT_MAX_DEGREE
    }
    pub fn tol() -> f64 {
        1e-10
    }
    pub fn max_iter() -> usize {
        200
    }
    pub fn contraction_target() -> f64 {
        0.5
    }
    pub fn trials() -> usize {
        100
    }
    pub fn product_trials() -> usize {
        1000
    }
    pub fn dims() -> Vec<usize> {
        vec![1, 2]
    }
    pub fn truncs() -> Vec<usize> {
        vec![4, 8]
    }
    pub fn alphas() -> Vec<f64> {
        vec![0.25, 0.5, 0.75]
    }
    pub fn bound_time_steps() -> usize {
        16
    }
    pub fn eps() -> Vec<f64> {
        super::dyadic_sequence(6)
    }
    pub fn probe_fractions() -> Vec<f64> {
        vec![0.5]
    }
    pub fn refinement_steps() -> Vec<usize> {
        vec![64, 128, 256]
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ProblemConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| invalid(e.to_string()))
    }

    /// Checks every numeric field against its invariant.
    pub fn validate(&self) -> Result<()> {
        let p = &self.problem;
        if !(1..=MAX_DIM).contains(&p.dim) {
            return Err(invalid(format!(
                "dim must be between 1 and {MAX_DIM}, got {}",
                p.dim
            )));
        }
        if p.trunc == 0 {
            return Err(invalid("trunc must be at least 1"));
        }
        if p.time_steps == 0 {
            return Err(invalid("time_steps must be at least 1"));
        }
        if !(p.horizon > 0.0 && p.horizon.is_finite()) {
            return Err(invalid(format!(
                "horizon T must be positive, got {}",
                p.horizon
            )));
        }
        if !(0.0..1.0).contains(&p.alpha) {
            return Err(invalid(format!(
                "alpha must satisfy α∈[0,1), got {}",
                p.alpha
            )));
        }
        p.m0.validate(p.dim)
            .map_err(|e| invalid(format!("m0: {e}")))?;
        self.payoff
            .validate()
            .map_err(|e| invalid(format!("payoff: {e}")))?;
        self.hamiltonian_spec()?;

        let s = &self.solver;
        if !(s.tol > 0.0 && s.tol.is_finite()) {
            return Err(invalid(format!("tol must be positive, got {}", s.tol)));
        }
        if s.max_iter == 0 {
            return Err(invalid("max_iter must be at least 1"));
        }
        if !(s.contraction_target > 0.0 && s.contraction_target < 1.0) {
            return Err(invalid(format!(
                "contraction_target must lie in (0,1), got {}",
                s.contraction_target
            )));
        }
        if let Some(f) = s.delta_g_fraction {
            if !(f > 0.0 && f <= 1.0) {
                return Err(invalid(format!(
                    "delta_g_fraction must lie in (0,1], got {f}"
                )));
            }
        }

        let e = &self.experiment;
        if e.trials == 0 || e.product_trials == 0 || e.bound_time_steps == 0 {
            return Err(invalid("experiment trial and step counts must be positive"));
        }
        if e.dims.iter().any(|d| !(1..=MAX_DIM).contains(d)) || e.truncs.contains(&0) {
            return Err(invalid(
                "experiment dims must lie in 1..=3 and truncs be positive",
            ));
        }
        if e.alphas.iter().any(|a| !(0.0..1.0).contains(a)) {
            return Err(invalid("experiment alphas must satisfy α∈[0,1)"));
        }
        if let Some(m) = &e.m0_b {
            m.validate(p.dim)
                .map_err(|e| invalid(format!("m0_b: {e}")))?;
        }
        if let Some(s) = e.perturbation {
            if !(s > 0.0 && s < 1.0) {
                return Err(invalid(format!("perturbation must lie in (0,1), got {s}")));
            }
        }
        if e.eps.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(invalid("eps values must be finite and nonnegative"));
        }
        if e.probe_fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(invalid("probe_fractions must lie in [0,1]"));
        }
        if e.refinement_steps.contains(&0) {
            return Err(invalid("refinement_steps must be positive"));
        }
        for f in &e.test_functions {
            if f.k.len() != p.dim {
                return Err(invalid(format!(
                    "test function {} has the wrong dimension",
                    f.label()
                )));
            }
        }
        Ok(())
    }

    /// The Hamiltonian named or spelled out in `[hamiltonian]`.
    pub fn hamiltonian_spec(&self) -> Result<HamiltonianSpec> {
        let h = &self.hamiltonian;
        let dim = self.problem.dim;
        let maps = [&h.f1, &h.g1, &h.f2, &h.g2];
        let spec = match (
            &h.name,
            maps.iter().all(|m| m.is_some()),
            maps.iter().any(|m| m.is_some()),
        ) {
            (Some(name), _, false) => {
                let mut spec =
                    HamiltonianSpec::builtin(name, dim).map_err(|e| invalid(e.to_string()))?;
                if h.constants.is_some() {
                    spec.constants = h.constants;
                }
                spec
            }
            (name, true, _) => HamiltonianSpec {
                name: name.clone().unwrap_or_else(|| "custom".into()),
                f1: h.f1.clone().expect("checked"),
                g1: h.g1.clone().expect("checked"),
                f2: h.f2.clone().expect("checked"),
                g2: h.g2.clone().expect("checked"),
                constants: h.constants,
            },
            _ => {
                return Err(invalid(
                    "[hamiltonian] needs either `name` or all of f1, g1, f2, g2",
                ))
            }
        };
        spec.validate(dim, h.max_degree)
            .map_err(|e| invalid(format!("hamiltonian: {e}")))?;
        if spec.constants.is_none() {
            return Err(invalid(
                "a custom hamiltonian needs a [hamiltonian.constants] table",
            ));
        }
        Ok(spec)
    }

    pub fn test_functions(&self) -> Vec<TestFunction> {
        if self.experiment.test_functions.is_empty() {
            crate::verify::default_test_functions(self.problem.dim)
        } else {
            self.experiment.test_functions.clone()
        }
    }

    pub fn probe_times(&self) -> Vec<f64> {
        self.experiment
            .probe_fractions
            .iter()
            .map(|f| f * self.problem.horizon)
            .collect()
    }

    pub fn bound_matrix(&self) -> BoundMatrix {
        BoundMatrix {
            dims: self.experiment.dims.clone(),
            truncs: self.experiment.truncs.clone(),
            alphas: self.experiment.alphas.clone(),
            horizon: self.problem.horizon,
            time_steps: self.experiment.bound_time_steps,
            product_trials: self.experiment.product_trials,
            radius: 1.0,
        }
    }

    /// Builds the discrete problem. Declared constants of a custom Hamiltonian
    /// are spot-checked on random inputs, and `delta_g_fraction` is resolved
    /// by bisection.
    pub fn build(&self, seed: u64) -> Result<Problem> {
        let p = &self.problem;
        let modes = ModeSet::new(p.dim, p.trunc)?;
        let grid = TimeGrid::new(p.horizon, p.time_steps)?;
        let spec = self.hamiltonian_spec()?;
        if self.hamiltonian.name.is_none() || self.hamiltonian.constants.is_some() {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let check = sample_constants(&spec, modes, p.alpha * p.horizon, 2.0, 50, &mut rng)?;
            let bad = check.violations(1e-9);
            if !bad.is_empty() {
                return Err(invalid(format!(
                    "declared hamiltonian constants are violated: {}",
                    bad.join("; ")
                )));
            }
        }
        let settings = SolverSettings {
            tol: self.solver.tol,
            max_iter: self.solver.max_iter,
            contraction_target: self.solver.contraction_target,
            upsilon: self.solver.upsilon,
        };
        let problem = Problem::new(
            grid,
            p.alpha,
            realize(&p.m0, modes)?,
            spec,
            self.payoff,
            settings,
        )?;
        match self.solver.delta_g_fraction {
            None => Ok(problem),
            Some(fraction) => match max_passing_delta_g(&problem)? {
                Some(t) if t.is_finite() => problem.with_delta_g(fraction * t),
                Some(_) => Ok(problem),
                None => Err(Error::Smallness(
                    "no payoff scale passes the smallness conditions".into(),
                )),
            },
        }
    }
}

pub fn parse_config(path: &Path) -> Result<ProblemConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ProblemConfig::from_toml_str(&text)
}
