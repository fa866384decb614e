//! Duhamel integrals of the mild formulation and the terminal map `Ω`.
//!
//! ```text
//! I⁺(μ, h)(t) =  ∫₀^t e^{Δ(t−s)} div(μ h)(s) ds
//! I⁻(h)(t)    = −∫_t^T e^{Δ(s−t)} ∇h(s) ds
//! Ω(ν, μ)     =  e^{ΔT} m₀ + I⁺(μ, H₂(ν, μ))(T)
//! ```
//!
//! Time integrals use an exponential integrator: on each grid interval the heat
//! kernel `e^{−|k|²(t−s)}` is integrated exactly against the linear interpolant
//! of the integrand. The weights stay bounded for stiff modes, so the discrete
//! operators inherit the continuum norm bounds up to a small interpolation
//! factor.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hamiltonian::{eval_hamiltonians, HamiltonianSpec};
use crate::spectral::{
    convolve, heat_semigroup, ModeSet, SpaceTimeField, SpaceTimeVector, SpectralField, TimeGrid,
};

/// `φ₁(z) = (1 − e^{−z})/z`.
pub fn phi1(z: f64) -> f64 {
    if z == 0.0 {
        1.0
    } else {
        -(-z).exp_m1() / z
    }
}

/// `ψ(z) = (1 − (1+z)e^{−z})/z² = ∫₀¹ r e^{−zr} dr`.
pub fn psi(z: f64) -> f64 {
    if z < 0.5 {
        // Σ (−1)^n (n+1) z^n / (n+2)!
        let mut sum = 0.0;
        let mut fact = 2.0; // (n+2)!
        let mut zn = 1.0;
        for n in 0..30 {
            let term = (n as f64 + 1.0) * zn / fact;
            sum += if n % 2 == 0 { term } else { -term };
            if term < 1e-18 {
                break;
            }
            zn *= z;
            fact *= n as f64 + 3.0;
        }
        sum
    } else {
        (1.0 - (1.0 + z) * (-z).exp()) / (z * z)
    }
}

/// Per-mode propagator and interpolation weights for one `(modes, grid)` pair.
///
/// For `λ = |k|²` and step `Δ`, the interval integral
/// `∫ e^{−λ|t_end−s|} f(s) ds` of the linear interpolant of `f` is
/// `w_far·f(far end) + w_near·f(near end)`, where "near" is the end the kernel
/// is evaluated at.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureScheme {
    grid: TimeGrid,
    modes: ModeSet,
    propagator: Vec<f64>,
    w_far: Vec<f64>,
    w_near: Vec<f64>,
}

impl QuadratureScheme {
    pub fn new(modes: ModeSet, grid: TimeGrid) -> Self {
        let dt = grid.dt();
        let mut propagator = Vec::with_capacity(modes.len());
        let mut w_far = Vec::with_capacity(modes.len());
        let mut w_near = Vec::with_capacity(modes.len());
        for lam in modes.norms_sq() {
            let z = lam * dt;
            let (p1, ps) = (phi1(z), psi(z));
            propagator.push((-z).exp());
            w_far.push(dt * ps);
            w_near.push(dt * (p1 - ps));
        }
        Self {
            grid,
            modes,
            propagator,
            w_far,
            w_near,
        }
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn modes(&self) -> ModeSet {
        self.modes
    }

    pub fn weights(&self) -> (&[f64], &[f64]) {
        (&self.w_far, &self.w_near)
    }

    fn check(&self, f: &SpaceTimeField) -> Result<()> {
        if f.grid() != self.grid || f.modes() != self.modes {
            return Err(Error::Mismatch(
                "field does not match the quadrature grid or mode set".into(),
            ));
        }
        Ok(())
    }

    /// `∫₀^t e^{−|k|²(t−s)} f_k(s) ds` on every grid time.
    pub fn forward_integral(&self, f: &SpaceTimeField) -> Result<SpaceTimeField> {
        self.check(f)?;
        let n = self.grid.steps();
        let mut acc = vec![Complex64::new(0.0, 0.0); self.modes.len()];
        let mut out = Vec::with_capacity(n + 1);
        out.push(SpectralField::zeros(self.modes));
        for i in 0..n {
            let (a, b) = (f.slice(i).coeffs(), f.slice(i + 1).coeffs());
            for (j, x) in acc.iter_mut().enumerate() {
                *x = *x * self.propagator[j] + a[j] * self.w_far[j] + b[j] * self.w_near[j];
            }
            out.push(self.field_from(&acc, f.slice(i).is_real() && f.slice(i + 1).is_real()));
        }
        SpaceTimeField::from_slices(self.grid, out)
    }

    /// `∫_t^T e^{−|k|²(s−t)} f_k(s) ds` on every grid time.
    pub fn backward_integral(&self, f: &SpaceTimeField) -> Result<SpaceTimeField> {
        self.check(f)?;
        let n = self.grid.steps();
        let mut acc = vec![Complex64::new(0.0, 0.0); self.modes.len()];
        let mut out = vec![SpectralField::zeros(self.modes); n + 1];
        for i in (0..n).rev() {
            let (near, far) = (f.slice(i).coeffs(), f.slice(i + 1).coeffs());
            for (j, x) in acc.iter_mut().enumerate() {
                *x = *x * self.propagator[j] + far[j] * self.w_far[j] + near[j] * self.w_near[j];
            }
            out[i] = self.field_from(&acc, f.slice(i).is_real() && f.slice(i + 1).is_real());
        }
        SpaceTimeField::from_slices(self.grid, out)
    }

    fn field_from(&self, acc: &[Complex64], real: bool) -> SpectralField {
        // Mirrored modes share λ, so the recursion keeps exact symmetry.
        if real {
            SpectralField::from_coeffs(self.modes, acc.to_vec(), true)
        } else {
            SpectralField::from_coeffs(self.modes, acc.to_vec(), false)
        }
        .expect("recursion keeps finite, correctly sized coefficients")
    }

    /// `I⁺(μ, h)`.
    pub fn i_plus(&self, mu: &SpaceTimeField, h: &SpaceTimeVector) -> Result<SpaceTimeField> {
        self.check(mu)?;
        if h.dim() != self.modes.dim() {
            return Err(Error::Mismatch(format!(
                "h has {} components in dimension {}",
                h.dim(),
                self.modes.dim()
            )));
        }
        for c in h.components() {
            self.check(c)?;
        }
        let div: Vec<SpectralField> = (0..self.grid.len())
            .into_par_iter()
            .map(|i| {
                let mut acc = SpectralField::zeros(self.modes);
                for (n, hn) in h.components().iter().enumerate() {
                    let prod = convolve(mu.slice(i), hn.slice(i)).expect("checked shapes");
                    acc = acc.add(&prod.derivative(n)).expect("same modes");
                }
                acc
            })
            .collect();
        self.forward_integral(&SpaceTimeField::from_slices(self.grid, div)?)
    }

    /// `I⁻(h)`, one component per spatial direction.
    pub fn i_minus(&self, h: &SpaceTimeField) -> Result<SpaceTimeVector> {
        let integral = self.backward_integral(h)?;
        SpaceTimeVector::new(
            (0..self.modes.dim())
                .map(|n| integral.map(|f| f.derivative(n).scale(-1.0)))
                .collect(),
        )
    }
}

/// `I⁺(μ, h)` with a freshly built quadrature.
pub fn i_plus(mu: &SpaceTimeField, h: &SpaceTimeVector) -> Result<SpaceTimeField> {
    QuadratureScheme::new(mu.modes(), mu.grid()).i_plus(mu, h)
}

/// `I⁻(h)` with a freshly built quadrature.
pub fn i_minus(h: &SpaceTimeField) -> Result<SpaceTimeVector> {
    QuadratureScheme::new(h.modes(), h.grid()).i_minus(h)
}

/// `Ω(ν, μ) = e^{ΔT} m₀ + I⁺(μ, H₂(ν, μ))(T)`.
pub fn omega(
    nu: &SpaceTimeVector,
    mu: &SpaceTimeField,
    m0: &SpectralField,
    spec: &HamiltonianSpec,
) -> Result<SpectralField> {
    if m0.modes() != mu.modes() {
        return Err(Error::Mismatch("m0 and mu have different mode sets".into()));
    }
    let h = eval_hamiltonians(spec, nu, mu)?;
    let ip = i_plus(mu, &h.h2)?;
    heat_semigroup(m0, mu.grid().horizon())?.add(ip.last())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{realize, MeasureSpec};
    use crate::random::{self, TimeProfile};
    use crate::spectral::{norm_pm, st_norm_b, st_norm_pm_alpha};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single(modes: ModeSet, k: &[i64], c: Complex64) -> SpectralField {
        let mut v = vec![Complex64::new(0.0, 0.0); modes.len()];
        v[modes.index_of(k).unwrap()] = c;
        SpectralField::from_coeffs(modes, v, false).unwrap()
    }

    #[test]
    fn psi_series_matches_closed_form_near_switch() {
        for z in [0.3, 0.49, 0.5, 0.51, 0.7] {
            let closed = (1.0 - (1.0 + z) * (-z as f64).exp()) / (z * z);
            let series = {
                let mut s = 0.0;
                let mut f = 2.0;
                for n in 0..40 {
                    s += (-1f64).powi(n) * (n as f64 + 1.0) * z.powi(n) / f;
                    f *= n as f64 + 3.0;
                }
                s
            };
            assert!((psi(z) - closed).abs() < 1e-14, "z={z}");
            assert!((series - closed).abs() < 1e-14);
        }
        assert_eq!(psi(0.0), 0.5);
        assert_eq!(phi1(0.0), 1.0);
    }

    #[test]
    fn weights_are_nonnegative_and_exact_for_constants() {
        let modes = ModeSet::new(2, 8).unwrap();
        let grid = TimeGrid::new(1.0, 16).unwrap();
        let q = QuadratureScheme::new(modes, grid);
        let (far, near) = q.weights();
        for (j, k) in modes.modes().enumerate() {
            assert!(far[j] >= 0.0 && near[j] >= 0.0);
            let lam = k.norm_sq() as f64;
            let exact = if lam == 0.0 {
                grid.dt()
            } else {
                -(-lam * grid.dt()).exp_m1() / lam
            };
            assert!((far[j] + near[j] - exact).abs() < 1e-16);
        }
    }

    #[test]
    fn i_plus_kills_the_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let modes = ModeSet::new(2, 4).unwrap();
        let grid = TimeGrid::new(0.8, 8).unwrap();
        let mu = random::space_time(grid, modes, 4, false, TimeProfile::Rough, &mut rng);
        let h = random::space_time_vector(grid, modes, 4, false, TimeProfile::Rough, &mut rng);
        let out = i_plus(&mu, &h).unwrap();
        for s in out.slices() {
            assert_eq!(s.mean(), Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn i_plus_stationary_closed_form() {
        let modes = ModeSet::new(1, 5).unwrap();
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let w = Complex64::new(0.3, -0.2);
        let mu = SpaceTimeField::constant(grid, &SpectralField::constant(modes, 1.0));
        for k in [1i64, 3, -5] {
            let h = SpaceTimeVector::new(vec![SpaceTimeField::constant(
                grid,
                &single(modes, &[k], w),
            )])
            .unwrap();
            let out = i_plus(&mu, &h).unwrap();
            let lam = (k * k) as f64;
            for (i, t) in grid.times().enumerate() {
                let expect = Complex64::new(0.0, k as f64) * w * (1.0 - (-lam * t).exp()) / lam;
                assert!((out.slice(i).get(&[k]) - expect).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn i_minus_constant_and_closed_form() {
        let modes = ModeSet::new(2, 4).unwrap();
        let grid = TimeGrid::new(0.7, 14).unwrap();
        let h0 = SpaceTimeField::constant(grid, &SpectralField::constant(modes, 2.5));
        let out = i_minus(&h0).unwrap();
        assert_eq!(out.norm_b(0.0), 0.0);

        let c = Complex64::new(-0.4, 0.9);
        let k = [2i64, -1];
        let h = SpaceTimeField::constant(grid, &single(modes, &k, c));
        let out = i_minus(&h).unwrap();
        let lam = 5.0;
        for (i, t) in grid.times().enumerate() {
            for n in 0..2 {
                let expect =
                    -Complex64::new(0.0, k[n] as f64) * c * (1.0 - (-lam * (0.7 - t)).exp()) / lam;
                assert!((out.component(n).slice(i).get(&k) - expect).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn operators_preserve_reality() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let modes = ModeSet::new(2, 4).unwrap();
        let grid = TimeGrid::new(1.0, 6).unwrap();
        let mu = random::space_time(grid, modes, 4, true, TimeProfile::Rough, &mut rng);
        let h = random::space_time_vector(grid, modes, 4, true, TimeProfile::Rough, &mut rng);
        let a = i_plus(&mu, &h).unwrap();
        assert!(a.is_real() && a.symmetry_defect() == 0.0);
        let b = i_minus(&mu).unwrap();
        assert!(b.is_real() && b.symmetry_defect() == 0.0);
    }

    #[test]
    fn operator_bounds_hold_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let alpha = 0.5;
        let grid = TimeGrid::new(1.0, 32).unwrap();
        let beta = alpha * grid.horizon();
        for d in [1, 2] {
            let modes = ModeSet::new(d, 8).unwrap();
            let q = QuadratureScheme::new(modes, grid);
            for _ in 0..10 {
                let mu = random::space_time(grid, modes, 8, false, TimeProfile::Rough, &mut rng);
                let h =
                    random::space_time_vector(grid, modes, 8, false, TimeProfile::Rough, &mut rng);
                let lhs = st_norm_pm_alpha(&q.i_plus(&mu, &h).unwrap(), alpha);
                let rhs = h.norm_b(beta) * st_norm_pm_alpha(&mu, alpha) / (1.0 - alpha);
                assert!(lhs <= 1.05 * rhs);
                let g = random::space_time(grid, modes, 8, false, TimeProfile::Rough, &mut rng);
                let lhs = q.i_minus(&g).unwrap().norm_b(beta);
                assert!(lhs <= 1.05 * d as f64 * st_norm_b(&g, beta));
            }
        }
    }

    fn refinement_gap(n: usize, seed: u64) -> f64 {
        let modes = ModeSet::new(1, 6).unwrap();
        let coarse = TimeGrid::new(1.0, n).unwrap();
        let fine = TimeGrid::new(1.0, 2 * n).unwrap();
        let build = |grid: TimeGrid| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mu = random::space_time(grid, modes, 6, true, TimeProfile::Smooth, &mut rng);
            let h = random::space_time_vector(grid, modes, 6, true, TimeProfile::Smooth, &mut rng);
            i_plus(&mu, &h).unwrap()
        };
        let (a, b) = (build(coarse), build(fine));
        (0..coarse.len())
            .map(|i| {
                a.slice(i)
                    .sub(b.slice(2 * i))
                    .map(|d| norm_pm(&d, 0.0))
                    .unwrap()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn refinement_order_is_two() {
        let e1 = refinement_gap(16, 4);
        let e2 = refinement_gap(32, 4);
        let e3 = refinement_gap(64, 4);
        let o1 = (e1 / e2).log2();
        let o2 = (e2 / e3).log2();
        assert!(o1 >= 1.8 && o2 >= 1.8, "orders {o1} {o2}");
    }

    #[test]
    fn omega_examples() {
        let modes = ModeSet::new(1, 6).unwrap();
        let grid = TimeGrid::new(1.0, 8).unwrap();
        let spec = HamiltonianSpec::example_quartic(1);
        let m0 = realize(&MeasureSpec::dirac(vec![0.0], 1.0), modes).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mu = random::space_time(grid, modes, 6, true, TimeProfile::Rough, &mut rng);
        let om = omega(&SpaceTimeVector::zeros(grid, modes), &mu, &m0, &spec).unwrap();
        for k in -6..=6i64 {
            assert!((om.get(&[k]).re - (-((k * k) as f64)).exp()).abs() < 1e-16);
        }

        let alpha = 0.5;
        for _ in 0..10 {
            let nu = random::space_time_vector(grid, modes, 3, true, TimeProfile::Rough, &mut rng)
                .scale(0.3);
            let mu = random::space_time(grid, modes, 6, true, TimeProfile::Rough, &mut rng);
            let om = omega(&nu, &mu, &m0, &spec).unwrap();
            let h2 = crate::hamiltonian::eval_h2(&spec, &nu, &mu).unwrap();
            let rhs =
                norm_pm(&m0, 0.0) + st_norm_pm_alpha(&mu, alpha) * h2.norm_b(alpha) / (1.0 - alpha);
            assert!(norm_pm(&om, alpha * grid.horizon()) <= rhs * 1.05);
        }
    }
}
