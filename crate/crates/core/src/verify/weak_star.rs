//! Weak-* stability under Dirac translation: `δ_{x₀+εe₁} → δ_{x₀}` converges
//! weakly-* but stays at `PM⁰` distance near 2.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{pair_with_test, pm0_distance, realize, MeasureKind, MeasureSpec};
use crate::solver::{picard_solve, smallness_check, Problem, SolveReport};
use crate::spectral::{cos_mode, evaluate, sin_mode, ModeSet, SpectralField};

/// Points per axis of the physical sample grid for the `v` error.
pub const SAMPLES_PER_AXIS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Wave {
    Cos,
    Sin,
}

/// `cos(k·x)` or `sin(k·x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestFunction {
    pub wave: Wave,
    pub k: Vec<i64>,
}

impl TestFunction {
    pub fn cos(k: Vec<i64>) -> Self {
        Self { wave: Wave::Cos, k }
    }

    pub fn sin(k: Vec<i64>) -> Self {
        Self { wave: Wave::Sin, k }
    }

    pub fn realize(&self, modes: ModeSet) -> Result<SpectralField> {
        if self.k.len() != modes.dim() {
            return Err(Error::InvalidArgument(format!(
                "test function wave vector {:?} has the wrong dimension",
                self.k
            )));
        }
        match self.wave {
            Wave::Cos => cos_mode(modes, &self.k),
            Wave::Sin => sin_mode(modes, &self.k),
        }
    }

    pub fn label(&self) -> String {
        let name = match self.wave {
            Wave::Cos => "cos",
            Wave::Sin => "sin",
        };
        let k: Vec<String> = self.k.iter().map(i64::to_string).collect();
        format!("{name}({})", k.join(" "))
    }
}

/// `cos x₁`, `sin x₁`, `cos 2x₁`.
pub fn default_test_functions(dim: usize) -> Vec<TestFunction> {
    let e = |a: i64| {
        let mut k = vec![0; dim];
        k[0] = a;
        k
    };
    vec![
        TestFunction::cos(e(1)),
        TestFunction::sin(e(1)),
        TestFunction::cos(e(2)),
    ]
}

/// `ε_n = 2^{−n}` for `n = 1..=count`.
pub fn dyadic_sequence(count: u32) -> Vec<f64> {
    (1..=count as i32).map(|n| 2f64.powi(-n)).collect()
}

/// `|⟨mⁿ(t) − m^∞(t), φ⟩|` for one sequence member, probe time and test function.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairingRow {
    pub n: usize,
    pub eps: f64,
    pub time: f64,
    pub function: String,
    pub pairing_error: f64,
}

/// Per-member distances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemberRow {
    pub n: usize,
    pub eps: f64,
    /// Sup of `|vⁿ − v^∞|` over grid times, components and the sample grid.
    pub v_sup_error: f64,
    /// `‖m₀ⁿ − m₀^∞‖_{PM⁰}`.
    pub data_distance: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakStarReport {
    pub pairings: Vec<PairingRow>,
    pub members: Vec<MemberRow>,
}

impl WeakStarReport {
    /// Pairing errors of one (test function, time) cell in sequence order.
    pub fn pairing_series(&self, function: &str, time: f64) -> Vec<f64> {
        self.pairings
            .iter()
            .filter(|r| r.function == function && r.time == time)
            .map(|r| r.pairing_error)
            .collect()
    }

    /// Every pairing series and the `v` series are strictly decreasing.
    pub fn monotone(&self) -> bool {
        let mut cells: Vec<(&str, f64)> = Vec::new();
        for r in &self.pairings {
            if !cells.contains(&(r.function.as_str(), r.time)) {
                cells.push((r.function.as_str(), r.time));
            }
        }
        let pairings_ok = cells
            .iter()
            .all(|&(f, t)| strictly_decreasing(&self.pairing_series(f, t)));
        let v: Vec<f64> = self.members.iter().map(|m| m.v_sup_error).collect();
        pairings_ok && strictly_decreasing(&v)
    }

    /// Largest `last / first` over all pairing series.
    pub fn worst_reduction(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in self.pairings.iter().filter(|r| r.n == 1) {
            let s = self.pairing_series(&r.function, r.time);
            if let (Some(first), Some(last)) = (s.first(), s.last()) {
                worst = worst.max(if *first == 0.0 { 0.0 } else { last / first });
            }
        }
        worst
    }

    pub fn min_data_distance(&self) -> f64 {
        self.members
            .iter()
            .map(|m| m.data_distance)
            .fold(f64::INFINITY, f64::min)
    }
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

fn shifted(base: &MeasureSpec, eps: f64) -> MeasureSpec {
    let mut loc = base.locations[0].clone();
    loc[0] = (loc[0] + eps).rem_euclid(TAU);
    MeasureSpec::dirac(loc, base.weights[0])
}

/// Solves from `δ_{x₀+ε_n e₁}` for every `ε_n` and from the limit datum
/// `base = δ_{x₀}`, then compares pairings at the probe times, `v` on the
/// physical sample grid, and the data in `PM⁰`.
pub fn weak_star_experiment(
    problem: &Problem,
    base: &MeasureSpec,
    eps_sequence: &[f64],
    test_functions: &[TestFunction],
    probe_times: &[f64],
) -> Result<WeakStarReport> {
    if base.kind != MeasureKind::Dirac {
        return Err(Error::InvalidArgument(
            "the weak-* experiment starts from a single Dirac mass".into(),
        ));
    }
    if eps_sequence.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
        return Err(Error::InvalidArgument(
            "eps values must be finite and nonnegative".into(),
        ));
    }
    let modes = problem.modes();
    let grid = problem.grid();
    let phis = test_functions
        .iter()
        .map(|f| f.realize(modes))
        .collect::<Result<Vec<_>>>()?;
    let probes: Vec<usize> = probe_times.iter().map(|&t| grid.nearest(t)).collect();

    let data: Vec<MeasureSpec> = std::iter::once(base.clone())
        .chain(eps_sequence.iter().map(|&e| shifted(base, e)))
        .collect();
    let problems = data
        .iter()
        .map(|m| problem.with_m0(realize(m, modes)?))
        .collect::<Result<Vec<_>>>()?;
    for (i, p) in problems.iter().enumerate() {
        let rep = smallness_check(p)?;
        if !rep.pass {
            return Err(Error::Smallness(format!(
                "sequence member {i} fails {}",
                rep.failed().join(", ")
            )));
        }
    }
    let solutions: Vec<SolveReport> = problems
        .par_iter()
        .map(picard_solve)
        .collect::<Result<_>>()?;
    let (limit, members) = solutions
        .split_first()
        .expect("limit problem is always present");
    let points = sample_points(modes.dim());

    let mut pairings = Vec::new();
    let mut rows = Vec::new();
    for (n, (sol, eps)) in members.iter().zip(eps_sequence).enumerate() {
        for &i in &probes {
            let dm = sol.m.slice(i).sub(limit.m.slice(i))?;
            for (f, phi) in test_functions.iter().zip(&phis) {
                pairings.push(PairingRow {
                    n: n + 1,
                    eps: *eps,
                    time: grid.time(i),
                    function: f.label(),
                    pairing_error: pair_with_test(&dm, phi)?.norm(),
                });
            }
        }
        let dv = sol.v.sub(&limit.v)?;
        let v_sup_error = (0..grid.len())
            .into_par_iter()
            .map(|i| {
                dv.at(i)
                    .components()
                    .iter()
                    .flat_map(|c| points.iter().map(move |x| evaluate(c, x).norm()))
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max);
        rows.push(MemberRow {
            n: n + 1,
            eps: *eps,
            v_sup_error,
            data_distance: pm0_distance(problems[n + 1].m0(), problems[0].m0())?,
            iterations: sol.iterations,
        });
    }
    Ok(WeakStarReport {
        pairings,
        members: rows,
    })
}

/// Uniform grid with [`SAMPLES_PER_AXIS`] points per axis on `[0, 2π)^d`.
fn sample_points(dim: usize) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = (0..SAMPLES_PER_AXIS)
        .map(|j| TAU * j as f64 / SAMPLES_PER_AXIS as f64)
        .collect();
    let mut points = vec![Vec::new()];
    for _ in 0..dim {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    points
}
