//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary so the verdict lines are always printed. It exits
//! non-zero when a criterion fails, except those listed in
//! `KNOWN_UNATTAINABLE`, which are still evaluated at full strength and
//! reported as FAIL.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spectral_mfg::hamiltonian::HamiltonianSpec;
use spectral_mfg::measures::{realize, CoeffEntry, MeasureSpec};
use spectral_mfg::payoff::PayoffSpec;
use spectral_mfg::random::{self, TimeProfile};
use spectral_mfg::solver::{
    max_passing_delta_g, picard_solve, picard_solve_from, Iterate, Problem, SolveReport,
    SolverSettings,
};
use spectral_mfg::spectral::{st_norm_pm_alpha, ModeSet, SpectralField, TimeGrid};
use spectral_mfg::verify::dependence::{density_mode_perturbation, dirac_weight_perturbation};
use spectral_mfg::verify::{
    bound_suite, continuous_dependence_experiment, default_test_functions, dyadic_sequence,
    oracle_time_march, refinement_study, relative_gap, weak_star_experiment, BoundCell, BoundKind,
    BoundMatrix,
};

/// The `PM⁰` distance between `δ_0` and `δ_ε` at `K = 64` is
/// `max_{|k|≤64} 2|sin(kε/2)|`, which is about 1.68 at `ε = 2⁻⁵` and 0.96 at
/// `ε = 2⁻⁶`; no solver change can lift it to 1.9.
const KNOWN_UNATTAINABLE: &[&str] = &["7c"];

const SEED: u64 = 20_240_601;

struct Verdict {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn verdict(id: &'static str, pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        id,
        pass,
        detail: detail.into(),
    }
}

type Outcome = Result<Vec<Verdict>, String>;

fn dirac() -> MeasureSpec {
    MeasureSpec::dirac(vec![0.0], 1.0)
}

fn smooth_density() -> MeasureSpec {
    let e = |k: i64, re: f64| CoeffEntry {
        k: vec![k],
        re,
        im: 0.0,
    };
    MeasureSpec::density(vec![
        e(0, 1.0),
        e(1, 0.3),
        e(-1, 0.3),
        e(2, 0.1),
        e(-2, 0.1),
    ])
}

/// Quartic example, smoothing payoff `γ = 1`, `d = 1`, `T = 1`, `α = 0.5`.
fn problem(m0: &MeasureSpec, trunc: usize, steps: usize, delta_g: f64) -> Result<Problem, String> {
    let modes = ModeSet::new(1, trunc).map_err(|e| e.to_string())?;
    Problem::new(
        TimeGrid::new(1.0, steps).map_err(|e| e.to_string())?,
        0.5,
        realize(m0, modes).map_err(|e| e.to_string())?,
        HamiltonianSpec::example_quartic(1),
        PayoffSpec::smoothing(1.0, delta_g),
        SolverSettings::default(),
    )
    .map_err(|e| e.to_string())
}

/// The same problem at `fraction` of the largest passing `δ_G`.
fn at_threshold(p: Problem, fraction: f64) -> Result<Problem, String> {
    let t = max_passing_delta_g(&p)
        .map_err(|e| e.to_string())?
        .ok_or("no passing delta_g")?;
    p.with_delta_g(fraction * t).map_err(|e| e.to_string())
}

fn solve(p: &Problem) -> Result<SolveReport, String> {
    picard_solve(p).map_err(|e| e.to_string())
}

fn worst_cell<'a>(cells: &'a [BoundCell], kinds: &[BoundKind]) -> (bool, String) {
    let chosen: Vec<&'a BoundCell> = cells.iter().filter(|c| kinds.contains(&c.bound)).collect();
    let pass = !chosen.is_empty() && chosen.iter().all(|c| c.pass);
    let worst = chosen
        .iter()
        .max_by(|a, b| (a.worst_ratio / a.allowed).total_cmp(&(b.worst_ratio / b.allowed)))
        .map(|c| {
            format!(
                "{} cells, tightest {:?} {} d={} K={} alpha={}: ratio {:.4e} vs allowed {:.6}",
                chosen.len(),
                c.bound,
                c.detail,
                c.dim,
                c.trunc,
                c.alpha,
                c.worst_ratio,
                c.allowed
            )
        })
        .unwrap_or_else(|| "no cells".into());
    (pass, worst)
}

/// Criteria 1 to 3 share one run of the bound suite.
fn bounds() -> Outcome {
    let matrix = BoundMatrix::default();
    let start = Instant::now();
    let cells = bound_suite(100, &matrix, SEED).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let trials_ok = cells.iter().all(|c| c.trials >= 100);

    let (ops, ops_detail) = worst_cell(&cells, &[BoundKind::IPlus, BoundKind::IMinus]);
    let grid_ok = [1, 2].iter().all(|d| {
        [4, 8].iter().all(|k| {
            [0.25, 0.5, 0.75].iter().all(|a| {
                [BoundKind::IPlus, BoundKind::IMinus].iter().all(|b| {
                    cells
                        .iter()
                        .any(|c| c.bound == *b && c.dim == *d && c.trunc == *k && c.alpha == *a)
                })
            })
        })
    });
    let c1 = ops && grid_ok && trials_ok && elapsed < Duration::from_secs(60);

    let (prod, prod_detail) = worst_cell(&cells, &[BoundKind::Algebra, BoundKind::Product]);
    let pairs_ok = cells
        .iter()
        .filter(|c| matches!(c.bound, BoundKind::Algebra | BoundKind::Product))
        .all(|c| c.trials >= 1000 && c.trunc <= 8);

    let kinds = [
        BoundKind::Growth,
        BoundKind::FnLipschitz,
        BoundKind::HamiltonianLipschitz,
    ];
    let (ham, ham_detail) = worst_cell(&cells, &kinds);
    let both = ["example-quartic", "example-quadratic"].iter().all(|n| {
        cells
            .iter()
            .any(|c| c.bound == BoundKind::HamiltonianLipschitz && c.detail == *n)
    });

    Ok(vec![
        verdict(
            "1",
            c1,
            format!("{ops_detail}; whole suite {:.1?}", elapsed),
        ),
        verdict("2", prod && pairs_ok, prod_detail),
        verdict("3", ham && both, ham_detail),
    ])
}

fn existence(reports: &mut Vec<(String, Problem, SolveReport)>) -> Outcome {
    let p = at_threshold(problem(&dirac(), 8, 64, 0.0)?, 1.0)?;
    let start = Instant::now();
    let rep = solve(&p)?;
    let elapsed = start.elapsed();
    let q = rep.smallness.contraction_constant;
    let worst = rep.worst_ratio(0.0).unwrap_or(0.0);
    let monotone = rep.updates.windows(2).skip(1).all(|w| w[1] <= w[0]);
    let pass = rep.smallness.pass
        && worst <= q + 0.05
        && monotone
        && rep.v_residual <= 1e-10
        && rep.m_residual <= 1e-10
        && rep.iterations <= 50
        && elapsed < Duration::from_secs(30);
    let detail = format!(
        "delta_G={:.6} q={:.4} worst ratio {:.3e}, {} iterations, residuals ({:.1e}, {:.1e}), {:.2?}",
        p.payoff().delta_g,
        q,
        worst,
        rep.iterations,
        rep.v_residual,
        rep.m_residual,
        elapsed
    );

    // Uniqueness: a second start inside the ball, away from its centre.
    let centre = p.ball_center().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let beta = p.beta();
    let r1 = rep.smallness.r1;
    let bump_v =
        random::space_time_vector(p.grid(), p.modes(), 4, true, TimeProfile::Smooth, &mut rng);
    let bump_v = bump_v.scale(0.5 * r1 / bump_v.norm_b(beta));
    let bump_m = random::space_time(p.grid(), p.modes(), 4, true, TimeProfile::Smooth, &mut rng)
        .map(|s| {
            s.sub(&SpectralField::constant(s.modes(), s.mean().re))
                .unwrap()
        });
    let bump_m = bump_m.scale(0.5 * r1 / st_norm_pm_alpha(&bump_m, p.alpha()));
    let start = Iterate {
        v: centre.v.add(&bump_v).map_err(|e| e.to_string())?,
        m: centre.m.add(&bump_m).map_err(|e| e.to_string())?,
    };
    let other = picard_solve_from(&p, start).map_err(|e| e.to_string())?;
    let (dv, dm) = p.norms(
        &rep.v.sub(&other.v).map_err(|e| e.to_string())?,
        &rep.m.sub(&other.m).map_err(|e| e.to_string())?,
    );
    let uniq = dv + dm <= 1e-9;

    reports.push(("existence".into(), p.clone(), rep));
    reports.push(("second start".into(), p, other));
    Ok(vec![
        verdict("4", pass, detail),
        verdict(
            "5",
            uniq,
            format!("distance between fixed points {:.2e}", dv + dm),
        ),
    ])
}

fn dependence(reports: &mut Vec<(String, Problem, SolveReport)>) -> Outcome {
    let mut lines = Vec::new();
    let mut all = true;
    let a = dirac();
    let b = dirac_weight_perturbation(&a, 0.01).map_err(|e| e.to_string())?;
    let c = smooth_density();
    let d = density_mode_perturbation(&c, 1, 1e-3).map_err(|e| e.to_string())?;
    for (label, x, y) in [("dirac weight", &a, &b), ("density mode", &c, &d)] {
        let p = at_threshold(problem(x, 8, 64, 0.0)?, 0.5)?;
        let rep = continuous_dependence_experiment(&p, x, y).map_err(|e| e.to_string())?;
        all &= rep.pass && rep.ratio > 0.0;
        lines.push(format!("{label}: ratio {:.4}", rep.ratio));
        for (tag, m) in [("a", x), ("b", y)] {
            let modes = p.modes();
            let q = p
                .with_m0(realize(m, modes).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
            let s = solve(&q)?;
            reports.push((format!("{label} {tag}"), q, s));
        }
    }
    Ok(vec![verdict("6", all, lines.join("; "))])
}

fn weak_star(reports: &mut Vec<(String, Problem, SolveReport)>) -> Outcome {
    let base = dirac();
    let p = at_threshold(problem(&base, 64, 64, 0.0)?, 0.5)?;
    let eps = dyadic_sequence(6);
    let tests = default_test_functions(1);
    let rep = weak_star_experiment(&p, &base, &eps, &tests, &[0.5]).map_err(|e| e.to_string())?;

    let mut pair_ok = true;
    let mut pair_lines = Vec::new();
    for f in &tests {
        let s = rep.pairing_series(&f.label(), 0.5);
        let mono = s.windows(2).all(|w| w[1] < w[0]);
        let reduction = s.last().unwrap() / s.first().unwrap();
        pair_ok &= s.len() == 6 && mono && reduction <= 0.2;
        pair_lines.push(format!("{} last/first {:.3e}", f.label(), reduction));
    }
    let v: Vec<f64> = rep.members.iter().map(|m| m.v_sup_error).collect();
    let v_ok = v.windows(2).all(|w| w[1] < w[0]);
    let dist: Vec<String> = rep
        .members
        .iter()
        .map(|m| format!("{:.3}", m.data_distance))
        .collect();
    let dist_ok = rep.min_data_distance() >= 1.9;

    for (n, e) in std::iter::once(0.0).chain(eps.iter().copied()).enumerate() {
        let m = MeasureSpec::dirac(vec![e], 1.0);
        let q = p
            .with_m0(realize(&m, p.modes()).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let s = solve(&q)?;
        reports.push((format!("weak-* member {n}"), q, s));
    }
    Ok(vec![
        verdict(
            "7a",
            pair_ok,
            format!("pairing errors at T/2 monotone: {}", pair_lines.join(", ")),
        ),
        verdict(
            "7b",
            v_ok,
            format!(
                "v sup errors {:?}",
                v.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>()
            ),
        ),
        verdict(
            "7c",
            dist_ok,
            format!("PM0 data distances at K=64: [{}]", dist.join(", ")),
        ),
    ])
}

fn invariants(reports: &[(String, Problem, SolveReport)]) -> Outcome {
    let mut worst_mass = 0.0f64;
    let mut worst_sym = 0.0f64;
    let mut real = true;
    for (_, p, rep) in reports {
        let mass = p.m0().mean();
        for s in rep.m.slices() {
            worst_mass = worst_mass.max((s.mean() - mass).norm());
        }
        worst_sym = worst_sym
            .max(rep.m.symmetry_defect())
            .max(rep.v.symmetry_defect());
        real &= rep.m.is_real() && rep.v.is_real();
    }
    let pass = worst_mass <= 1e-12 && worst_sym <= 1e-12 && real;
    Ok(vec![verdict(
        "8",
        pass,
        format!(
            "{} solutions: mass drift {:.1e}, symmetry defect {:.1e}",
            reports.len(),
            worst_mass,
            worst_sym
        ),
    )])
}

fn oracle(reports: &mut Vec<(String, Problem, SolveReport)>) -> Outcome {
    let p = at_threshold(problem(&smooth_density(), 8, 256, 0.0)?, 0.5)?;
    let rep = solve(&p)?;
    let or = oracle_time_march(&p).map_err(|e| e.to_string())?;
    let (gv, gm) = relative_gap(&or.v, &or.m, &rep.v, &rep.m).map_err(|e| e.to_string())?;
    let rows = refinement_study(&p, &[64, 128, 256]).map_err(|e| e.to_string())?;
    let orders: Vec<f64> = rows.iter().filter_map(|r| r.order).collect();
    let pass = gv <= 1e-4 && gm <= 1e-4 && orders.len() == 2 && orders.iter().all(|o| *o >= 1.8);
    reports.push(("oracle reference".into(), p, rep));
    Ok(vec![verdict(
        "9",
        pass,
        format!(
            "relative gaps v {:.2e}, m {:.2e} at N_t=256; orders {:?}",
            gv,
            gm,
            orders.iter().map(|o| format!("{o:.3}")).collect::<Vec<_>>()
        ),
    )])
}

fn degenerate(reports: &mut Vec<(String, Problem, SolveReport)>) -> Outcome {
    let mut pass = true;
    let mut worst = 0.0f64;
    let mut iters = 0;
    for m0 in [dirac(), smooth_density()] {
        let p = problem(&m0, 8, 64, 0.0)?;
        let rep = solve(&p)?;
        let v_err = rep.v.norm_b(0.0);
        let m_err = rep
            .m
            .sub(p.heat_m0())
            .map_err(|e| e.to_string())?
            .slices()
            .iter()
            .flat_map(|s| s.coeffs().iter().map(|c| c.norm()))
            .fold(0.0, f64::max);
        worst = worst.max(v_err).max(m_err);
        iters = iters.max(rep.iterations);
        pass &= rep.iterations <= 2 && v_err <= 1e-13 && m_err <= 1e-13;
        reports.push(("zero payoff".into(), p, rep));
    }
    Ok(vec![verdict(
        "10",
        pass,
        format!("max iterations {iters}, max deviation {worst:.1e}"),
    )])
}

fn main() {
    let mut reports = Vec::new();
    let mut verdicts = Vec::new();
    let mut record = |ids: &[&'static str], outcome: Outcome| match outcome {
        Ok(v) => verdicts.extend(v),
        Err(e) => verdicts.extend(
            ids.iter()
                .map(|id| verdict(id, false, format!("error: {e}"))),
        ),
    };
    record(&["1", "2", "3"], bounds());
    record(&["4", "5"], existence(&mut reports));
    record(&["6"], dependence(&mut reports));
    record(&["7a", "7b", "7c"], weak_star(&mut reports));
    record(&["9"], oracle(&mut reports));
    record(&["10"], degenerate(&mut reports));
    record(&["8"], invariants(&reports));

    let order = [
        "1", "2", "3", "4", "5", "6", "7a", "7b", "7c", "8", "9", "10",
    ];
    verdicts.sort_by_key(|v| order.iter().position(|o| *o == v.id));
    let mut unexpected = Vec::new();
    for v in &verdicts {
        let tag = if v.pass { "PASS" } else { "FAIL" };
        let note = if !v.pass && KNOWN_UNATTAINABLE.contains(&v.id) {
            " [known unattainable]"
        } else {
            ""
        };
        println!("criterion {:<3} {tag}{note}  {}", v.id, v.detail);
        if !v.pass && !KNOWN_UNATTAINABLE.contains(&v.id) {
            unexpected.push(v.id);
        }
    }
    if unexpected.is_empty() {
        println!("acceptance: all attainable criteria pass");
    } else {
        println!("acceptance: unexpected failures {unexpected:?}");
        std::process::exit(1);
    }
}
