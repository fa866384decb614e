//! An independent solver for the same mild system: alternating time-marching
//! sweeps (forward for `m`, backward for `v`) with a second-order
//! integrating-factor Heun step, instead of the simultaneous Picard update
//! with exponential quadrature.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianSpec;
use crate::measures::pair_with_test;
use crate::payoff::grad_payoff;
use crate::solver::{picard_solve, Problem};
use crate::spectral::{
    convolve, norm_b, SpaceTimeField, SpaceTimeVector, SpectralField, VectorField,
};

#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub v: SpaceTimeVector,
    pub m: SpaceTimeField,
    pub sweeps: usize,
    pub last_update: f64,
}

fn times(f: &SpectralField, a: Complex64) -> SpectralField {
    if f.is_real() && a.im == 0.0 {
        f.scale(a.re)
    } else {
        f.scale_complex(a)
    }
}

/// `div(m·H₂(v, m))` at one time.
fn m_forcing(spec: &HamiltonianSpec, v: &VectorField, m: &SpectralField) -> Result<SpectralField> {
    let f2 = spec.f2.eval_slice(v).remove(0);
    let a2 = pair_with_test(m, &f2)?;
    let mut acc = SpectralField::zeros(m.modes());
    for (n, g) in spec.g2.eval_slice(v).iter().enumerate() {
        acc = acc.add(&times(&convolve(m, g)?, a2).derivative(n))?;
    }
    Ok(acc)
}

/// `−∇H₁(v, m)` at one time.
fn v_forcing(spec: &HamiltonianSpec, v: &VectorField, m: &SpectralField) -> Result<VectorField> {
    let f1 = spec.f1.eval_slice(v).remove(0);
    let g1 = spec.g1.eval_slice(v).remove(0);
    let h1 = times(&g1, pair_with_test(m, &f1)?);
    VectorField::new(
        (0..v.components().len())
            .map(|n| h1.derivative(n).scale(-1.0))
            .collect(),
    )
}

struct Marcher<'a> {
    problem: &'a Problem,
    dt: f64,
}

impl Marcher<'_> {
    fn heat(&self, f: &SpectralField, tau: f64) -> SpectralField {
        f.apply_symbol(|k| (-(k.norm_sq() as f64) * tau).exp())
    }

    /// `m` from `m₀` forward, with `v` frozen.
    fn forward(&self, v: &SpaceTimeVector) -> Result<SpaceTimeField> {
        let spec = self.problem.hamiltonian();
        let grid = self.problem.grid();
        let dt = self.dt;
        let mut slices = vec![self.problem.m0().clone()];
        for i in 0..grid.steps() {
            let (vi, vn) = (v.at(i), v.at(i + 1));
            let mi = &slices[i];
            let ni = m_forcing(spec, &vi, mi)?;
            let pred = self.heat(&mi.axpy(dt, &ni)?, dt);
            let np = m_forcing(spec, &vn, &pred)?;
            let next = self
                .heat(&mi.axpy(0.5 * dt, &ni)?, dt)
                .axpy(0.5 * dt, &np)?;
            slices.push(next);
        }
        SpaceTimeField::from_slices(grid, slices)
    }

    /// `v` from `∇G(m(T))` backward, with `m` frozen.
    fn backward(&self, m: &SpaceTimeField) -> Result<SpaceTimeVector> {
        let spec = self.problem.hamiltonian();
        let grid = self.problem.grid();
        let dt = self.dt;
        let n = grid.steps();
        let mut slices = vec![VectorField::zeros(self.problem.modes()); n + 1];
        slices[n] = grad_payoff(self.problem.payoff(), m.last())?;
        for i in (0..n).rev() {
            let vn = &slices[i + 1];
            let fn_ = v_forcing(spec, vn, m.slice(i + 1))?;
            let pred = axpy_vec(vn, dt, &fn_)?.map(|c| self.heat(c, dt));
            let fp = v_forcing(spec, &pred, m.slice(i))?;
            slices[i] = axpy_vec(
                &axpy_vec(vn, 0.5 * dt, &fn_)?.map(|c| self.heat(c, dt)),
                0.5 * dt,
                &fp,
            )?;
        }
        SpaceTimeVector::from_time_slices(grid, slices)
    }
}

fn axpy_vec(x: &VectorField, a: f64, y: &VectorField) -> Result<VectorField> {
    VectorField::new(
        x.components()
            .iter()
            .zip(y.components())
            .map(|(p, q)| p.axpy(a, q))
            .collect::<Result<Vec<_>>>()?,
    )
}

/// Alternates forward and backward sweeps from `v ≡ 0` until the combined
/// update (same norms as the Picard solver) drops below the problem's
/// tolerance.
pub fn oracle_time_march(problem: &Problem) -> Result<OracleSolution> {
    let marcher = Marcher {
        problem,
        dt: problem.grid().dt(),
    };
    let mut v = SpaceTimeVector::zeros(problem.grid(), problem.modes());
    let mut m = problem.heat_m0().clone();
    let tol = problem.settings().tol;
    let mut last = f64::INFINITY;
    for sweep in 1..=problem.settings().max_iter {
        let m_new = marcher.forward(&v)?;
        let v_new = marcher.backward(&m_new)?;
        let (dv, dm) = problem.norms(&v_new.sub(&v)?, &m_new.sub(&m)?);
        last = dv + dm;
        v = v_new;
        m = m_new;
        if !last.is_finite() {
            break;
        }
        if last < tol {
            return Ok(OracleSolution {
                v,
                m,
                sweeps: sweep,
                last_update: last,
            });
        }
    }
    Err(Error::NotConverged {
        iterations: problem.settings().max_iter,
        last_update: last,
        diverging: !last.is_finite(),
    })
}

fn sup_b0(slices: impl Iterator<Item = f64>) -> f64 {
    slices.fold(0.0, f64::max)
}

/// Relative space-time sup distances `(v, m)` between two solutions, each
/// slice measured in the Wiener norm (an upper bound for the physical sup),
/// relative to the second solution.
pub fn relative_gap(
    v_a: &SpaceTimeVector,
    m_a: &SpaceTimeField,
    v_b: &SpaceTimeVector,
    m_b: &SpaceTimeField,
) -> Result<(f64, f64)> {
    let dv = v_a.sub(v_b)?;
    let dm = m_a.sub(m_b)?;
    let len = m_b.grid().len();
    let vec_b0 = |v: &SpaceTimeVector| {
        sup_b0((0..len).map(|i| v.at(i).components().iter().map(|c| norm_b(c, 0.0)).sum()))
    };
    let field_b0 = |m: &SpaceTimeField| sup_b0(m.slices().iter().map(|s| norm_b(s, 0.0)));
    let rel = |num: f64, den: f64| if num == 0.0 { 0.0 } else { num / den };
    Ok((
        rel(vec_b0(&dv), vec_b0(v_b)),
        rel(field_b0(&dm), field_b0(m_b)),
    ))
}

/// Picard and oracle solutions at one time resolution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementRow {
    pub time_steps: usize,
    pub v_gap: f64,
    pub m_gap: f64,
    /// `log₂` of the previous row's `v_gap + m_gap` over this row's.
    pub order: Option<f64>,
    pub picard_iterations: usize,
    pub oracle_sweeps: usize,
}

/// Runs both solvers at each resolution in `steps` (each the double of the
/// previous for the orders to be meaningful).
pub fn refinement_study(problem: &Problem, steps: &[usize]) -> Result<Vec<RefinementRow>> {
    let mut rows: Vec<RefinementRow> = Vec::with_capacity(steps.len());
    for &n in steps {
        let p = problem.with_time_steps(n)?;
        let (picard, oracle) = rayon::join(|| picard_solve(&p), || oracle_time_march(&p));
        let (picard, oracle) = (picard?, oracle?);
        let (v_gap, m_gap) = relative_gap(&oracle.v, &oracle.m, &picard.v, &picard.m)?;
        let order = rows
            .last()
            .map(|prev| ((prev.v_gap + prev.m_gap) / (v_gap + m_gap)).log2());
        rows.push(RefinementRow {
            time_steps: n,
            v_gap,
            m_gap,
            order,
            picard_iterations: picard.iterations,
            oracle_sweeps: oracle.sweeps,
        });
    }
    Ok(rows)
}
