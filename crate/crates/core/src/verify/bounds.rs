//! Random-input checks of the operator, product and Hamiltonian inequalities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::duhamel::QuadratureScheme;
use crate::error::Result;
use crate::hamiltonian::{
    eval_hamiltonians, growth_constants, lipschitz_bound, ratio, sample_constants, HamiltonianSpec,
    BUILTIN_NAMES,
};
use crate::random::{self, TimeProfile};
use crate::spectral::{
    convolve, norm_b, st_norm_b, st_norm_pm_alpha, ModeSet, SpaceTimeField, SpaceTimeVector,
    TimeGrid,
};

/// Relative slack on the Duhamel operator bounds.
pub const OPERATOR_SLACK: f64 = 1.05;
/// Absolute slack on exact discrete inequalities.
pub const EXACT_SLACK: f64 = 1e-12;

/// Which inequality a cell checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// `‖I⁺(μ,h)‖_{PM^α} ≤ ‖μ‖_{PM^α}‖h‖_{(B_{αT})^d}/(1−α)`.
    IPlus,
    /// `‖I⁻(h)‖_{(B_{αT})^d} ≤ d‖h‖_{B_{αT}}`.
    IMinus,
    /// `‖fg‖_{B_β} ≤ ‖f‖_{B_β}‖g‖_{B_β}`.
    Algebra,
    /// `‖fg‖_{PM^α} ≤ ‖f‖_{B_{αT}}‖g‖_{PM^α}` in space-time.
    Product,
    /// Declared growth constants of `f₁, g₁, f₂, g₂`.
    Growth,
    /// Declared Lipschitz constants of `f₁, g₁, f₂, g₂`.
    FnLipschitz,
    /// Lipschitz bounds of `H₁` and `H₂` on the balls of radius `ρ₁, ρ₂`.
    HamiltonianLipschitz,
}

/// Shape of the random test matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundMatrix {
    pub dims: Vec<usize>,
    pub truncs: Vec<usize>,
    pub alphas: Vec<f64>,
    pub horizon: f64,
    pub time_steps: usize,
    /// Trials for the two product cells, which are much cheaper.
    pub product_trials: usize,
    /// Radii `ρ₁ = ρ₂` for the Hamiltonian cells.
    pub radius: f64,
}

impl Default for BoundMatrix {
    fn default() -> Self {
        Self {
            dims: vec![1, 2],
            truncs: vec![4, 8],
            alphas: vec![0.25, 0.5, 0.75],
            horizon: 1.0,
            time_steps: 16,
            product_trials: 1000,
            radius: 1.0,
        }
    }
}

/// One row of the bound report. `worst_ratio` is the largest observed
/// `lhs / rhs` with the theoretical constant left out of `rhs`, so the cell
/// passes when `worst_ratio ≤ allowed`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCell {
    pub bound: BoundKind,
    pub detail: String,
    pub dim: usize,
    pub trunc: usize,
    pub alpha: f64,
    pub trials: usize,
    pub worst_ratio: f64,
    pub theory_constant: f64,
    pub allowed: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
struct CellPlan {
    bound: BoundKind,
    detail: String,
    dim: usize,
    trunc: usize,
    alpha: f64,
    trials: usize,
}

fn plan(trials: usize, matrix: &BoundMatrix) -> Vec<CellPlan> {
    let mut cells = Vec::new();
    let cell = |bound, detail: &str, dim, trunc, alpha, trials| CellPlan {
        bound,
        detail: detail.to_string(),
        dim,
        trunc,
        alpha,
        trials,
    };
    for &dim in &matrix.dims {
        for &trunc in &matrix.truncs {
            for &alpha in &matrix.alphas {
                cells.push(cell(BoundKind::IPlus, "", dim, trunc, alpha, trials));
                cells.push(cell(BoundKind::IMinus, "", dim, trunc, alpha, trials));
            }
            let mid = matrix
                .alphas
                .get(matrix.alphas.len() / 2)
                .copied()
                .unwrap_or(0.5);
            cells.push(cell(
                BoundKind::Algebra,
                "",
                dim,
                trunc,
                mid,
                matrix.product_trials,
            ));
            cells.push(cell(
                BoundKind::Product,
                "",
                dim,
                trunc,
                mid,
                matrix.product_trials,
            ));
        }
    }
    let trunc = matrix.truncs.first().copied().unwrap_or(4);
    let alpha = matrix
        .alphas
        .get(matrix.alphas.len() / 2)
        .copied()
        .unwrap_or(0.5);
    for &dim in &matrix.dims {
        for name in BUILTIN_NAMES {
            cells.push(cell(BoundKind::Growth, name, dim, trunc, alpha, trials));
            cells.push(cell(
                BoundKind::FnLipschitz,
                name,
                dim,
                trunc,
                alpha,
                trials,
            ));
            cells.push(cell(
                BoundKind::HamiltonianLipschitz,
                name,
                dim,
                trunc,
                alpha,
                trials,
            ));
        }
    }
    cells
}

/// Runs every cell of the matrix. Cells are independent and seeded from
/// `seed` and their position, so the report does not depend on scheduling.
pub fn bound_suite(trials: usize, matrix: &BoundMatrix, seed: u64) -> Result<Vec<BoundCell>> {
    plan(trials, matrix)
        .into_par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            run_cell(&p, matrix, &mut rng)
        })
        .collect()
}

fn run_cell(p: &CellPlan, matrix: &BoundMatrix, rng: &mut ChaCha8Rng) -> Result<BoundCell> {
    let modes = ModeSet::new(p.dim, p.trunc)?;
    let grid = TimeGrid::new(matrix.horizon, matrix.time_steps)?;
    let beta = p.alpha * grid.horizon();
    let band = p.trunc;
    let (worst, theory, allowed) = match p.bound {
        BoundKind::IPlus => {
            let q = QuadratureScheme::new(modes, grid);
            let mut worst = 0.0f64;
            for _ in 0..p.trials {
                let mu = random::space_time(grid, modes, band, false, TimeProfile::Rough, rng);
                let h =
                    random::space_time_vector(grid, modes, band, false, TimeProfile::Rough, rng);
                let lhs = st_norm_pm_alpha(&q.i_plus(&mu, &h)?, p.alpha);
                worst = worst.max(ratio(lhs, st_norm_pm_alpha(&mu, p.alpha) * h.norm_b(beta)));
            }
            let c = 1.0 / (1.0 - p.alpha);
            (worst, c, c * OPERATOR_SLACK)
        }
        BoundKind::IMinus => {
            let q = QuadratureScheme::new(modes, grid);
            let mut worst = 0.0f64;
            for _ in 0..p.trials {
                let h = random::space_time(grid, modes, band, false, TimeProfile::Rough, rng);
                let lhs = q.i_minus(&h)?.norm_b(beta);
                worst = worst.max(ratio(lhs, st_norm_b(&h, beta)));
            }
            let c = p.dim as f64;
            (worst, c, c * OPERATOR_SLACK)
        }
        BoundKind::Algebra => {
            let mut worst = 0.0f64;
            for _ in 0..p.trials {
                let f = random::field(modes, band, rng.gen(), rng);
                let g = random::field(modes, band, rng.gen(), rng);
                let b = rng.gen_range(0.0..2.0);
                let lhs = norm_b(&convolve(&f, &g)?, b);
                worst = worst.max(ratio(lhs, norm_b(&f, b) * norm_b(&g, b)));
            }
            (worst, 1.0, 1.0 + EXACT_SLACK)
        }
        BoundKind::Product => {
            let short = TimeGrid::new(matrix.horizon, 4)?;
            let mut worst = 0.0f64;
            for _ in 0..p.trials {
                let f = random::space_time(short, modes, band, false, TimeProfile::Rough, rng);
                let g = random::space_time(short, modes, band, false, TimeProfile::Rough, rng);
                let lhs = st_norm_pm_alpha(&f.product(&g)?, p.alpha);
                let rhs = st_norm_b(&f, p.alpha * short.horizon()) * st_norm_pm_alpha(&g, p.alpha);
                worst = worst.max(ratio(lhs, rhs));
            }
            (worst, 1.0, 1.0 + EXACT_SLACK)
        }
        BoundKind::Growth | BoundKind::FnLipschitz => {
            let spec = HamiltonianSpec::builtin(&p.detail, p.dim)?;
            let check = sample_constants(&spec, modes, beta, 2.0 * matrix.radius, p.trials, rng)?;
            let table = if p.bound == BoundKind::Growth {
                check.growth
            } else {
                check.lipschitz
            };
            (
                table.into_iter().fold(0.0, f64::max),
                1.0,
                1.0 + EXACT_SLACK,
            )
        }
        BoundKind::HamiltonianLipschitz => {
            let spec = HamiltonianSpec::builtin(&p.detail, p.dim)?;
            let worst =
                hamiltonian_lipschitz(&spec, grid, modes, p.alpha, matrix.radius, p.trials, rng)?;
            (worst, 1.0, 1.0 + EXACT_SLACK)
        }
    };
    Ok(BoundCell {
        bound: p.bound,
        detail: p.detail.clone(),
        dim: p.dim,
        trunc: p.trunc,
        alpha: p.alpha,
        trials: p.trials,
        worst_ratio: worst,
        theory_constant: theory,
        allowed,
        pass: worst <= allowed,
    })
}

/// Worst ratio of `‖Hᵢ(ν₁,μ₁) − Hᵢ(ν₂,μ₂)‖` to its Lipschitz bound, over both
/// Hamiltonians, for random pairs inside the balls of radius `radius`.
fn hamiltonian_lipschitz(
    spec: &HamiltonianSpec,
    grid: TimeGrid,
    modes: ModeSet,
    alpha: f64,
    radius: f64,
    trials: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let beta = alpha * grid.horizon();
    let (l1, l2) = lipschitz_bound(&growth_constants(spec)?, radius, radius)?;
    let band = (modes.trunc() / 2).max(1);
    let draw_v = |rng: &mut ChaCha8Rng| {
        let r = radius * rng.gen_range(0.0..=1.0);
        let v = random::space_time_vector(grid, modes, band, true, TimeProfile::Smooth, rng);
        random::with_norm(
            v,
            |v: &SpaceTimeVector| v.norm_b(beta),
            |v, s| v.scale(s),
            r,
        )
    };
    let draw_m = |rng: &mut ChaCha8Rng| {
        let r = radius * rng.gen_range(0.0..=1.0);
        let m = random::space_time(grid, modes, band, true, TimeProfile::Smooth, rng);
        random::with_norm(
            m,
            |m: &SpaceTimeField| st_norm_pm_alpha(m, alpha),
            |m, s| m.scale(s),
            r,
        )
    };
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let (v1, v2) = (draw_v(rng), draw_v(rng));
        let (m1, m2) = (draw_m(rng), draw_m(rng));
        let a = eval_hamiltonians(spec, &v1, &m1)?;
        let b = eval_hamiltonians(spec, &v2, &m2)?;
        let dist = v1.sub(&v2)?.norm_b(beta) + st_norm_pm_alpha(&m1.sub(&m2)?, alpha);
        worst = worst
            .max(ratio(st_norm_b(&a.h1.sub(&b.h1)?, beta), l1 * dist))
            .max(ratio(a.h2.sub(&b.h2)?.norm_b(beta), l2 * dist));
    }
    Ok(worst)
}

/// Writes the cells as CSV; columns follow the field order of [`BoundCell`].
pub fn write_csv(
    cells: &[BoundCell],
    out: impl std::io::Write,
) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for c in cells {
        w.serialize(c)?;
    }
    w.flush()?;
    Ok(())
}
