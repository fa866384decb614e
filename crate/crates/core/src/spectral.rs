//! Truncated Fourier representation of periodic fields on the torus `[0, 2π]^d`.
//!
//! A field is stored as a dense array of complex amplitudes `f_k` for every
//! lattice mode with `|k|_∞ ≤ K`, under the series convention
//! `f(x) = Σ_k f_k e^{ik·x}`. All exponential weights use the Euclidean length
//! `|k|`. Products are alias-free: the full linear convolution is formed and
//! then cut back to the stored box.
//!
//! Fields flagged as real carry exact conjugate symmetry `f_{-k} = conj(f_k)`.
//! Every operation that preserves reality in exact arithmetic also preserves it
//! bit-for-bit here, by computing one half of the lattice and mirroring.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 3;

/// Tolerance used when a caller asserts conjugate symmetry of raw coefficients.
pub const REALITY_TOL: f64 = 1e-14;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A lattice mode `k ∈ ℤ^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeIndex {
    comps: [i64; MAX_DIM],
    dim: usize,
}

impl ModeIndex {
    pub fn new(k: &[i64]) -> Self {
        assert!(
            !k.is_empty() && k.len() <= MAX_DIM,
            "mode must have 1..=3 components"
        );
        let mut comps = [0; MAX_DIM];
        comps[..k.len()].copy_from_slice(k);
        Self {
            comps,
            dim: k.len(),
        }
    }

    pub fn components(&self) -> &[i64] {
        &self.comps[..self.dim]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `|k|²`, exact.
    pub fn norm_sq(&self) -> i64 {
        self.components().iter().map(|c| c * c).sum()
    }

    /// Euclidean length `|k|`.
    pub fn norm(&self) -> f64 {
        (self.norm_sq() as f64).sqrt()
    }

    pub fn sup_norm(&self) -> i64 {
        self.components().iter().map(|c| c.abs()).max().unwrap_or(0)
    }
}

/// The set of stored modes `{k ∈ ℤ^d : |k|_∞ ≤ K}` and its flat layout.
///
/// Mode `k` lives at `Σ_n (k_n + K)·(2K+1)^n`, so `-k` sits at `len - 1 - idx`
/// and `k = 0` is the centre.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeSet {
    dim: usize,
    trunc: usize,
}

impl ModeSet {
    pub fn new(dim: usize, trunc: usize) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidArgument(format!(
                "dimension must be 1, 2 or 3, got {dim}"
            )));
        }
        if trunc == 0 {
            return Err(Error::InvalidArgument(
                "truncation K must be at least 1".into(),
            ));
        }
        Ok(Self { dim, trunc })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn trunc(&self) -> usize {
        self.trunc
    }

    /// Number of modes along one axis, `2K+1`.
    pub fn side(&self) -> usize {
        2 * self.trunc + 1
    }

    pub fn len(&self) -> usize {
        self.side().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat index of the zero mode.
    pub fn center(&self) -> usize {
        (self.len() - 1) / 2
    }

    /// Flat index of `-k` given the flat index of `k`.
    pub fn mirror(&self, idx: usize) -> usize {
        self.len() - 1 - idx
    }

    pub fn index_of(&self, k: &[i64]) -> Option<usize> {
        if k.len() != self.dim {
            return None;
        }
        let kk = self.trunc as i64;
        let side = self.side();
        let mut idx = 0usize;
        let mut stride = 1usize;
        for &c in k {
            if c < -kk || c > kk {
                return None;
            }
            idx += (c + kk) as usize * stride;
            stride *= side;
        }
        Some(idx)
    }

    pub fn mode(&self, mut idx: usize) -> ModeIndex {
        let side = self.side();
        let kk = self.trunc as i64;
        let mut comps = [0i64; MAX_DIM];
        for c in comps.iter_mut().take(self.dim) {
            *c = (idx % side) as i64 - kk;
            idx /= side;
        }
        ModeIndex {
            comps,
            dim: self.dim,
        }
    }

    pub fn modes(&self) -> impl Iterator<Item = ModeIndex> + '_ {
        (0..self.len()).map(move |i| self.mode(i))
    }

    /// `|k|` for every stored mode, in layout order.
    pub fn norms(&self) -> Vec<f64> {
        self.modes().map(|k| k.norm()).collect()
    }

    /// `|k|²` for every stored mode, in layout order.
    pub fn norms_sq(&self) -> Vec<f64> {
        self.modes().map(|k| k.norm_sq() as f64).collect()
    }

    fn check_same(&self, other: &ModeSet) -> Result<()> {
        if self != other {
            return Err(Error::Mismatch(format!(
                "mode sets differ: (d={}, K={}) vs (d={}, K={})",
                self.dim, self.trunc, other.dim, other.trunc
            )));
        }
        Ok(())
    }
}

/// Truncated Fourier coefficients of a scalar field or measure on the torus.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    modes: ModeSet,
    coeffs: Vec<Complex64>,
    real: bool,
}

impl SpectralField {
    pub fn zeros(modes: ModeSet) -> Self {
        Self {
            modes,
            coeffs: vec![ZERO; modes.len()],
            real: true,
        }
    }

    /// The constant field `c` (only the zero mode is set).
    pub fn constant(modes: ModeSet, c: f64) -> Self {
        let mut f = Self::zeros(modes);
        f.coeffs[modes.center()] = Complex64::new(c, 0.0);
        f
    }

    /// Builds a field from raw coefficients in layout order.
    ///
    /// With `real = true` the coefficients must be conjugate symmetric to within
    /// [`REALITY_TOL`]; they are then symmetrized exactly.
    pub fn from_coeffs(modes: ModeSet, coeffs: Vec<Complex64>, real: bool) -> Result<Self> {
        if coeffs.len() != modes.len() {
            return Err(Error::Mismatch(format!(
                "expected {} coefficients, got {}",
                modes.len(),
                coeffs.len()
            )));
        }
        if let Some(bad) = coeffs
            .iter()
            .position(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(Error::InvalidArgument(format!(
                "non-finite amplitude at mode {:?}",
                modes.mode(bad).components()
            )));
        }
        let mut f = Self {
            modes,
            coeffs,
            real: false,
        };
        if real {
            let defect = f.symmetry_defect();
            if defect > REALITY_TOL {
                return Err(Error::InvalidArgument(format!(
                    "coefficients are not conjugate symmetric (defect {defect:e})"
                )));
            }
            f.symmetrize();
        }
        Ok(f)
    }

    /// Builds a field from a function of the mode. The result is flagged real
    /// only when `real` is set, in which case `f(-k)` is replaced by `conj(f(k))`.
    pub fn from_fn(modes: ModeSet, real: bool, mut f: impl FnMut(&ModeIndex) -> Complex64) -> Self {
        let coeffs: Vec<Complex64> = modes.modes().map(|k| f(&k)).collect();
        let mut out = Self {
            modes,
            coeffs,
            real: false,
        };
        if real {
            out.symmetrize();
        }
        out
    }

    /// Like [`Self::from_coeffs`] but infers the reality flag from exact symmetry.
    pub fn from_coeffs_inferred(modes: ModeSet, coeffs: Vec<Complex64>) -> Result<Self> {
        let mut f = Self::from_coeffs(modes, coeffs, false)?;
        f.real = f.symmetry_defect() == 0.0;
        Ok(f)
    }

    fn symmetrize(&mut self) {
        let len = self.coeffs.len();
        let c = self.modes.center();
        for i in c + 1..len {
            let j = len - 1 - i;
            let avg = (self.coeffs[i] + self.coeffs[j].conj()) * 0.5;
            self.coeffs[i] = avg;
            self.coeffs[j] = avg.conj();
        }
        self.coeffs[c].im = 0.0;
        self.real = true;
    }

    /// `max_k |f_{-k} - conj(f_k)|`.
    pub fn symmetry_defect(&self) -> f64 {
        let len = self.coeffs.len();
        (0..len)
            .map(|i| (self.coeffs[len - 1 - i] - self.coeffs[i].conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn modes(&self) -> ModeSet {
        self.modes
    }

    pub fn dim(&self) -> usize {
        self.modes.dim
    }

    pub fn trunc(&self) -> usize {
        self.modes.trunc
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Amplitude of mode `k`, zero outside the stored box.
    pub fn get(&self, k: &[i64]) -> Complex64 {
        self.modes
            .index_of(k)
            .map(|i| self.coeffs[i])
            .unwrap_or(ZERO)
    }

    /// Amplitude of the zero mode.
    pub fn mean(&self) -> Complex64 {
        self.coeffs[self.modes.center()]
    }

    fn with_coeffs(&self, coeffs: Vec<Complex64>, real: bool) -> Self {
        Self {
            modes: self.modes,
            coeffs,
            real,
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.with_coeffs(self.coeffs.iter().map(|c| c * s).collect(), self.real)
    }

    /// Multiplication by a complex scalar; reality survives only for real `s`.
    pub fn scale_complex(&self, s: Complex64) -> Self {
        self.with_coeffs(
            self.coeffs.iter().map(|c| c * s).collect(),
            self.real && s.im == 0.0,
        )
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.modes.check_same(&other.modes)?;
        Ok(self.with_coeffs(
            self.coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
            self.real && other.real,
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.modes.check_same(&other.modes)?;
        Ok(self.with_coeffs(
            self.coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
            self.real && other.real,
        ))
    }

    /// `self + s·other`.
    pub fn axpy(&self, s: f64, other: &Self) -> Result<Self> {
        self.modes.check_same(&other.modes)?;
        Ok(self.with_coeffs(
            self.coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b * s)
                .collect(),
            self.real && other.real,
        ))
    }

    /// Pointwise multiplication by a real radial symbol `σ(|k|², |k|)`.
    pub fn apply_symbol(&self, symbol: impl Fn(&ModeIndex) -> f64) -> Self {
        let coeffs = self
            .modes
            .modes()
            .zip(&self.coeffs)
            .map(|(k, c)| c * symbol(&k))
            .collect();
        self.with_coeffs(coeffs, self.real)
    }

    /// Partial derivative `∂_n`, the multiplier `i k_n`.
    pub fn derivative(&self, axis: usize) -> Self {
        assert!(axis < self.dim(), "axis out of range");
        let coeffs = self
            .modes
            .modes()
            .zip(&self.coeffs)
            .map(|(k, c)| c * Complex64::new(0.0, k.components()[axis] as f64))
            .collect();
        self.with_coeffs(coeffs, self.real)
    }

    pub fn gradient(&self) -> VectorField {
        VectorField {
            components: (0..self.dim()).map(|n| self.derivative(n)).collect(),
        }
    }

    /// Zeroes every mode with `|k| > radius` (Euclidean).
    pub fn low_pass(&self, radius: f64) -> Self {
        self.apply_symbol(|k| if k.norm() <= radius { 1.0 } else { 0.0 })
    }

    pub fn conj_reflect_defect(&self) -> f64 {
        self.symmetry_defect()
    }
}

/// `‖f‖_{PM^β} = sup_k e^{β|k|}|f_k|` over the stored modes.
pub fn norm_pm(f: &SpectralField, beta: f64) -> f64 {
    debug_assert!(beta >= 0.0);
    f.modes
        .modes()
        .zip(&f.coeffs)
        .map(|(k, c)| (beta * k.norm()).exp() * c.norm())
        .fold(0.0, f64::max)
}

/// `‖f‖_{B_β} = Σ_k e^{β|k|}|f_k|`.
pub fn norm_b(f: &SpectralField, beta: f64) -> f64 {
    debug_assert!(beta >= 0.0);
    f.modes
        .modes()
        .zip(&f.coeffs)
        .map(|(k, c)| (beta * k.norm()).exp() * c.norm())
        .sum()
}

/// `‖f‖_{B_{1,β}} = Σ_k (1+|k|) e^{β|k|}|f_k|`.
pub fn norm_b1(f: &SpectralField, beta: f64) -> f64 {
    debug_assert!(beta >= 0.0);
    f.modes
        .modes()
        .zip(&f.coeffs)
        .map(|(k, c)| {
            let r = k.norm();
            (1.0 + r) * (beta * r).exp() * c.norm()
        })
        .sum()
}

/// Alias-free product: the full linear convolution `Σ_j f_{k-j} g_j`, cut back
/// to `|k|_∞ ≤ K`.
pub fn convolve(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    f.modes.check_same(&g.modes)?;
    let modes = f.modes;
    let len = modes.len();
    let real = f.real && g.real;
    let mut out = vec![ZERO; len];
    // With two real factors only the upper half (including k = 0) is summed.
    let start = if real { modes.center() } else { 0 };
    for (idx, slot) in out.iter_mut().enumerate().skip(start) {
        *slot = conv_at(modes, &f.coeffs, &g.coeffs, idx);
    }
    if real {
        let c = modes.center();
        for idx in c + 1..len {
            out[len - 1 - idx] = out[idx].conj();
        }
        out[c].im = 0.0;
    }
    Ok(SpectralField {
        modes,
        coeffs: out,
        real,
    })
}

/// One output coefficient of the truncated convolution. The summation order is
/// fixed (odometer over `j`, first axis fastest).
fn conv_at(modes: ModeSet, f: &[Complex64], g: &[Complex64], idx: usize) -> Complex64 {
    let k = modes.mode(idx);
    let kk = modes.trunc as i64;
    let side = modes.side();
    let d = modes.dim;
    let mut lo = [0i64; MAX_DIM];
    let mut hi = [0i64; MAX_DIM];
    for n in 0..d {
        let kn = k.comps[n];
        lo[n] = (kn - kk).max(-kk);
        hi[n] = (kn + kk).min(kk);
    }
    let mut j = lo;
    let mut acc = ZERO;
    loop {
        // flat indices of j and k - j
        let mut gj = 0usize;
        let mut fk = 0usize;
        let mut stride = 1usize;
        for n in 0..d {
            gj += (j[n] + kk) as usize * stride;
            fk += (k.comps[n] - j[n] + kk) as usize * stride;
            stride *= side;
        }
        // innermost axis is contiguous: g walks forward, f walks backward
        let run = (hi[0] - j[0]) as usize;
        for s in 0..=run {
            acc += f[fk - s] * g[gj + s];
        }
        // advance the odometer over axes 1..d
        let mut n = 1;
        loop {
            if n >= d {
                return acc;
            }
            if j[n] < hi[n] {
                j[n] += 1;
                for m in 1..n {
                    j[m] = lo[m];
                }
                break;
            }
            n += 1;
        }
        j[0] = lo[0];
    }
}

/// Heat semigroup `e^{Δt}`: multiplies `f_k` by `e^{-|k|² t}`.
pub fn heat_semigroup(f: &SpectralField, t: f64) -> Result<SpectralField> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "heat semigroup needs t >= 0, got {t}"
        )));
    }
    if t == 0.0 {
        return Ok(f.clone());
    }
    Ok(f.apply_symbol(|k| (-(k.norm_sq() as f64) * t).exp()))
}

/// Partial-sum evaluation `Σ_k f_k e^{ik·x}`. The imaginary part is dropped for
/// real fields.
pub fn evaluate(f: &SpectralField, x: &[f64]) -> Complex64 {
    assert_eq!(
        x.len(),
        f.dim(),
        "point dimension must match field dimension"
    );
    let mut acc = ZERO;
    for (k, c) in f.modes.modes().zip(&f.coeffs) {
        if c.re == 0.0 && c.im == 0.0 {
            continue;
        }
        let phase: f64 = k
            .components()
            .iter()
            .zip(x)
            .map(|(&kn, &xn)| kn as f64 * xn)
            .sum();
        acc += c * Complex64::from_polar(1.0, phase);
    }
    if f.real {
        acc.im = 0.0;
    }
    acc
}

/// Trigonometric test fields.
pub fn cos_mode(modes: ModeSet, k: &[i64]) -> Result<SpectralField> {
    trig(modes, k, Complex64::new(0.5, 0.0))
}

/// `sin(k·x)`: `-i/2` at `k`, `+i/2` at `-k`.
pub fn sin_mode(modes: ModeSet, k: &[i64]) -> Result<SpectralField> {
    trig(modes, k, Complex64::new(0.0, -0.5))
}

fn trig(modes: ModeSet, k: &[i64], amp: Complex64) -> Result<SpectralField> {
    let i = modes
        .index_of(k)
        .ok_or_else(|| Error::InvalidArgument(format!("mode {k:?} is not stored")))?;
    let mut coeffs = vec![ZERO; modes.len()];
    let j = modes.mirror(i);
    if i == j {
        coeffs[i] = Complex64::new(2.0 * amp.re, 0.0);
    } else {
        coeffs[i] += amp;
        coeffs[j] += amp.conj();
    }
    SpectralField::from_coeffs(modes, coeffs, true)
}

/// Uniform time grid `t_i = i·T/N`, `i = 0..=N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "time horizon must be positive, got {horizon}"
            )));
        }
        if steps == 0 {
            return Err(Error::InvalidArgument("time grid needs N_t >= 1".into()));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, i: usize) -> f64 {
        if i == self.steps {
            self.horizon
        } else {
            self.horizon * i as f64 / self.steps as f64
        }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.time(i))
    }

    /// Index of the grid time nearest to `t`.
    pub fn nearest(&self, t: f64) -> usize {
        let i = (t / self.dt()).round();
        (i.max(0.0) as usize).min(self.steps)
    }
}

/// A field sampled on a uniform time grid, one [`SpectralField`] per grid time.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    grid: TimeGrid,
    slices: Vec<SpectralField>,
}

impl SpaceTimeField {
    pub fn from_slices(grid: TimeGrid, slices: Vec<SpectralField>) -> Result<Self> {
        if slices.len() != grid.len() {
            return Err(Error::Mismatch(format!(
                "expected {} time slices, got {}",
                grid.len(),
                slices.len()
            )));
        }
        let modes = slices[0].modes;
        for s in &slices {
            modes.check_same(&s.modes)?;
        }
        Ok(Self { grid, slices })
    }

    pub fn zeros(grid: TimeGrid, modes: ModeSet) -> Self {
        Self::constant(grid, &SpectralField::zeros(modes))
    }

    pub fn constant(grid: TimeGrid, f: &SpectralField) -> Self {
        Self {
            grid,
            slices: vec![f.clone(); grid.len()],
        }
    }

    /// Builds slice `i` from `(i, t_i)`.
    pub fn from_fn(grid: TimeGrid, mut f: impl FnMut(usize, f64) -> SpectralField) -> Result<Self> {
        let slices = (0..grid.len()).map(|i| f(i, grid.time(i))).collect();
        Self::from_slices(grid, slices)
    }

    /// `t ↦ e^{Δt} f`.
    pub fn heat_flow(grid: TimeGrid, f: &SpectralField) -> Self {
        let slices = grid
            .times()
            .map(|t| heat_semigroup(f, t).expect("grid times are nonnegative"))
            .collect();
        Self { grid, slices }
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn modes(&self) -> ModeSet {
        self.slices[0].modes
    }

    pub fn slices(&self) -> &[SpectralField] {
        &self.slices
    }

    pub fn slice(&self, i: usize) -> &SpectralField {
        &self.slices[i]
    }

    pub fn last(&self) -> &SpectralField {
        self.slices.last().expect("grid has at least two times")
    }

    pub fn is_real(&self) -> bool {
        self.slices.iter().all(|s| s.real)
    }

    pub fn into_slices(self) -> Vec<SpectralField> {
        self.slices
    }

    pub(crate) fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Mismatch(format!(
                "time grids differ: {:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        self.modes().check_same(&other.modes())
    }

    pub fn map(&self, f: impl Fn(&SpectralField) -> SpectralField) -> Self {
        Self {
            grid: self.grid,
            slices: self.slices.iter().map(f).collect(),
        }
    }

    pub fn zip_with(
        &self,
        other: &Self,
        f: impl Fn(&SpectralField, &SpectralField) -> Result<SpectralField>,
    ) -> Result<Self> {
        self.check_compatible(other)?;
        let slices = self
            .slices
            .iter()
            .zip(&other.slices)
            .map(|(a, b)| f(a, b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid: self.grid,
            slices,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, SpectralField::add)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, SpectralField::sub)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|f| f.scale(s))
    }

    /// Slice-wise alias-free product.
    pub fn product(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, convolve)
    }

    /// Largest conjugate-symmetry defect over all slices.
    pub fn symmetry_defect(&self) -> f64 {
        self.slices
            .iter()
            .map(SpectralField::symmetry_defect)
            .fold(0.0, f64::max)
    }
}

/// `‖f‖_{PM^α} = sup_k sup_t e^{αt|k|}|f_k(t)|`, the time sup taken on the grid.
pub fn st_norm_pm_alpha(f: &SpaceTimeField, alpha: f64) -> f64 {
    let norms = f.modes().norms();
    let mut best = 0.0f64;
    for (i, s) in f.slices.iter().enumerate() {
        let t = f.grid.time(i);
        for (r, c) in norms.iter().zip(&s.coeffs) {
            best = best.max((alpha * t * r).exp() * c.norm());
        }
    }
    best
}

/// `‖f‖_{B_β} = Σ_k sup_t e^{β|k|}|f_k(t)|` with a fixed weight `β`.
pub fn st_norm_b(f: &SpaceTimeField, beta: f64) -> f64 {
    let norms = f.modes().norms();
    let mut sup = vec![0.0f64; norms.len()];
    for s in &f.slices {
        for (m, c) in sup.iter_mut().zip(&s.coeffs) {
            *m = m.max(c.norm());
        }
    }
    norms
        .iter()
        .zip(&sup)
        .map(|(r, m)| (beta * r).exp() * m)
        .sum()
}

/// A vector of spatial fields (e.g. `∇G`).
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    components: Vec<SpectralField>,
}

impl VectorField {
    pub fn new(components: Vec<SpectralField>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidArgument("vector field needs components".into()))?;
        for c in &components {
            first.modes.check_same(&c.modes)?;
        }
        Ok(Self { components })
    }

    pub fn zeros(modes: ModeSet) -> Self {
        Self {
            components: vec![SpectralField::zeros(modes); modes.dim()],
        }
    }

    pub fn components(&self) -> &[SpectralField] {
        &self.components
    }

    pub fn component(&self, n: usize) -> &SpectralField {
        &self.components[n]
    }

    pub fn modes(&self) -> ModeSet {
        self.components[0].modes
    }

    pub fn map(&self, f: impl Fn(&SpectralField) -> SpectralField) -> Self {
        Self {
            components: self.components.iter().map(f).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|c| c.scale(s))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.components.len() != other.components.len() {
            return Err(Error::Mismatch("vector lengths differ".into()));
        }
        Ok(Self {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.sub(b))
                .collect::<Result<Vec<_>>>()?,
        })
    }

    /// `Σ_n ‖v_n‖_{B_β}`.
    pub fn norm_b(&self, beta: f64) -> f64 {
        self.components.iter().map(|c| norm_b(c, beta)).sum()
    }
}

/// A vector of space-time fields sharing grid and modes (e.g. `v = ∇u`).
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeVector {
    components: Vec<SpaceTimeField>,
}

impl SpaceTimeVector {
    pub fn new(components: Vec<SpaceTimeField>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidArgument("vector field needs components".into()))?;
        for c in &components {
            first.check_compatible(c)?;
        }
        Ok(Self { components })
    }

    pub fn zeros(grid: TimeGrid, modes: ModeSet) -> Self {
        Self {
            components: vec![SpaceTimeField::zeros(grid, modes); modes.dim()],
        }
    }

    /// Stacks per-time vector fields into per-component space-time fields.
    pub fn from_time_slices(grid: TimeGrid, slices: Vec<VectorField>) -> Result<Self> {
        if slices.len() != grid.len() {
            return Err(Error::Mismatch(format!(
                "expected {} time slices, got {}",
                grid.len(),
                slices.len()
            )));
        }
        let d = slices[0].components.len();
        let mut comps: Vec<Vec<SpectralField>> = vec![Vec::with_capacity(grid.len()); d];
        for v in slices {
            if v.components.len() != d {
                return Err(Error::Mismatch("ragged vector slices".into()));
            }
            for (n, c) in v.components.into_iter().enumerate() {
                comps[n].push(c);
            }
        }
        let components = comps
            .into_iter()
            .map(|s| SpaceTimeField::from_slices(grid, s))
            .collect::<Result<Vec<_>>>()?;
        Self::new(components)
    }

    pub fn components(&self) -> &[SpaceTimeField] {
        &self.components
    }

    pub fn component(&self, n: usize) -> &SpaceTimeField {
        &self.components[n]
    }

    pub fn into_components(self) -> Vec<SpaceTimeField> {
        self.components
    }

    pub fn grid(&self) -> TimeGrid {
        self.components[0].grid
    }

    pub fn modes(&self) -> ModeSet {
        self.components[0].modes()
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    /// The vector field at grid time `i`.
    pub fn at(&self, i: usize) -> VectorField {
        VectorField {
            components: self
                .components
                .iter()
                .map(|c| c.slices[i].clone())
                .collect(),
        }
    }

    pub fn zip_with(
        &self,
        other: &Self,
        f: impl Fn(&SpaceTimeField, &SpaceTimeField) -> Result<SpaceTimeField>,
    ) -> Result<Self> {
        if self.components.len() != other.components.len() {
            return Err(Error::Mismatch("vector lengths differ".into()));
        }
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| f(a, b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { components })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, SpaceTimeField::add)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, SpaceTimeField::sub)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            components: self.components.iter().map(|c| c.scale(s)).collect(),
        }
    }

    /// `Σ_n ‖v_n‖_{B_β}`, the `(B_β)^d` norm.
    pub fn norm_b(&self, beta: f64) -> f64 {
        self.components.iter().map(|c| st_norm_b(c, beta)).sum()
    }

    pub fn is_real(&self) -> bool {
        self.components.iter().all(SpaceTimeField::is_real)
    }

    pub fn symmetry_defect(&self) -> f64 {
        self.components
            .iter()
            .map(SpaceTimeField::symmetry_defect)
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, LN_2, PI};

    fn m1(k: usize) -> ModeSet {
        ModeSet::new(1, k).unwrap()
    }

    fn single(modes: ModeSet, k: &[i64], c: f64) -> SpectralField {
        let i = modes.index_of(k).unwrap();
        let mut v = vec![ZERO; modes.len()];
        v[i] = Complex64::new(c, 0.0);
        SpectralField::from_coeffs(modes, v, false).unwrap()
    }

    fn cosx(k: usize) -> SpectralField {
        cos_mode(m1(k), &[1]).unwrap()
    }

    #[test]
    fn layout_mirror_and_center() {
        for d in 1..=3 {
            let m = ModeSet::new(d, 2).unwrap();
            assert_eq!(m.mode(m.center()).norm_sq(), 0);
            for i in 0..m.len() {
                let k = m.mode(i);
                let neg: Vec<i64> = k.components().iter().map(|c| -c).collect();
                assert_eq!(m.index_of(&neg), Some(m.mirror(i)));
                assert_eq!(m.index_of(k.components()), Some(i));
            }
        }
        assert!(ModeSet::new(4, 2).is_err());
        assert!(ModeSet::new(1, 0).is_err());
    }

    #[test]
    fn norm_pm_examples() {
        assert_eq!(norm_pm(&SpectralField::constant(m1(4), 2.0), 1.0), 2.0);
        let dirac = SpectralField::from_fn(m1(4), true, |_| Complex64::new(1.0, 0.0));
        assert_eq!(norm_pm(&dirac, 0.0), 1.0);
        let f = single(m1(4), &[1], 0.5);
        assert!((norm_pm(&f, 1.0) - 0.5 * E).abs() < 1e-15);
        assert!((0.5 * E - 1.359140914).abs() < 1e-9);
    }

    #[test]
    fn norm_b_examples() {
        assert_eq!(norm_b(&SpectralField::constant(m1(4), 2.0), 3.0), 2.0);
        assert!((norm_b(&cosx(4), 0.0) - 1.0).abs() < 1e-15);
        assert!((norm_b(&cosx(4), 1.0) - E).abs() < 1e-15);
    }

    #[test]
    fn norm_b1_examples() {
        for beta in [0.0, 0.7, 3.0] {
            assert_eq!(norm_b1(&SpectralField::constant(m1(4), 1.0), beta), 1.0);
        }
        assert!((norm_b1(&cosx(4), 0.0) - 2.0).abs() < 1e-15);
        let m2 = ModeSet::new(2, 3).unwrap();
        let f = single(m2, &[1, 0], 1.0);
        assert!((norm_b1(&f, LN_2) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn st_norm_examples() {
        let grid = TimeGrid::new(1.0, 8).unwrap();
        let c = SpaceTimeField::constant(grid, &SpectralField::constant(m1(3), 3.0));
        assert_eq!(st_norm_pm_alpha(&c, 0.5), 3.0);

        let dirac = SpectralField::from_fn(m1(6), true, |_| Complex64::new(1.0, 0.0));
        let flow = SpaceTimeField::heat_flow(grid, &dirac);
        assert!((st_norm_pm_alpha(&flow, 0.5) - 1.0).abs() < 1e-15);

        let f = SpaceTimeField::from_fn(grid, |i, _| {
            if i == grid.steps() {
                single(m1(3), &[1], 1.0)
            } else {
                SpectralField::zeros(m1(3))
            }
        })
        .unwrap();
        assert!((st_norm_pm_alpha(&f, 0.5) - 0.5f64.exp()).abs() < 1e-15);
        assert!((0.5f64.exp() - 1.648721).abs() < 1e-6);
    }

    #[test]
    fn st_norm_b_examples() {
        let grid = TimeGrid::new(1.0, 4).unwrap();
        assert_eq!(st_norm_b(&SpaceTimeField::zeros(grid, m1(3)), 1.0), 0.0);
        let one = SpaceTimeField::constant(grid, &single(m1(3), &[1], 1.0));
        assert_eq!(st_norm_b(&one, 0.0), 1.0);
        // k=+1 carries 0.5 at t_1, k=-1 carries 0.5 at t_3
        let f = SpaceTimeField::from_fn(grid, |i, _| match i {
            1 => single(m1(3), &[1], 0.5),
            3 => single(m1(3), &[-1], 0.5),
            _ => SpectralField::zeros(m1(3)),
        })
        .unwrap();
        assert!((st_norm_b(&f, 1.0) - E).abs() < 1e-15);
    }

    #[test]
    fn convolve_examples() {
        let e1 = single(m1(4), &[1], 1.0);
        let p = convolve(&e1, &e1).unwrap();
        assert_eq!(p, single(m1(4), &[2], 1.0));

        let c = cosx(4);
        let sq = convolve(&c, &c).unwrap();
        assert!(sq.is_real());
        assert!((sq.get(&[0]).re - 0.5).abs() < 1e-16);
        assert!((sq.get(&[2]).re - 0.25).abs() < 1e-16);
        assert!((sq.get(&[-2]).re - 0.25).abs() < 1e-16);
        assert_eq!(sq.get(&[1]), ZERO);
    }

    #[test]
    fn convolve_truncates_without_wraparound() {
        let top = single(m1(2), &[2], 1.0);
        let p = convolve(&top, &top).unwrap();
        assert!(p.coeffs().iter().all(|c| *c == ZERO));
    }

    #[test]
    fn convolve_rejects_mismatch() {
        assert!(convolve(&cosx(4), &cosx(3)).is_err());
    }

    #[test]
    fn heat_examples() {
        let f = cosx(4);
        assert_eq!(heat_semigroup(&f, 0.0).unwrap(), f);
        let g = heat_semigroup(&single(m1(4), &[2], 1.0), 0.25).unwrap();
        assert!((g.get(&[2]).re - (-1.0f64).exp()).abs() < 1e-16);
        assert!(((-1.0f64).exp() - 0.367879).abs() < 1e-6);
        let dirac = SpectralField::from_fn(m1(4), true, |_| Complex64::new(1.0, 0.0));
        let h = heat_semigroup(&dirac, 0.1).unwrap();
        for k in -4..=4i64 {
            assert!((h.get(&[k]).re - (-0.1 * (k * k) as f64).exp()).abs() < 1e-16);
        }
        assert!(heat_semigroup(&f, -1.0).is_err());
    }

    #[test]
    fn evaluate_examples() {
        let one = SpectralField::constant(m1(2), 1.0);
        assert_eq!(evaluate(&one, &[1.234]).re, 1.0);
        assert!((evaluate(&cosx(3), &[0.0]).re - 1.0).abs() < 1e-15);
        assert!((evaluate(&cosx(3), &[PI]).re + 1.0).abs() < 1e-15);
    }

    #[test]
    fn sin_mode_is_real_and_evaluates() {
        let s = sin_mode(m1(3), &[1]).unwrap();
        assert!(s.is_real());
        assert!((evaluate(&s, &[PI / 2.0]).re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn real_flag_requires_symmetry() {
        let m = m1(2);
        let mut v = vec![ZERO; m.len()];
        v[m.index_of(&[1]).unwrap()] = Complex64::new(1.0, 0.0);
        assert!(SpectralField::from_coeffs(m, v.clone(), true).is_err());
        v[m.index_of(&[-1]).unwrap()] = Complex64::new(1.0, 1e-15);
        let f = SpectralField::from_coeffs(m, v, true).unwrap();
        assert_eq!(f.symmetry_defect(), 0.0);
    }

    #[test]
    fn nonfinite_amplitude_rejected() {
        let m = m1(1);
        let v = vec![Complex64::new(f64::NAN, 0.0); m.len()];
        assert!(SpectralField::from_coeffs(m, v, false).is_err());
    }

    #[test]
    fn grid_times_are_uniform_and_end_at_horizon() {
        let g = TimeGrid::new(0.3, 7).unwrap();
        assert_eq!(g.time(0), 0.0);
        assert_eq!(g.time(7), 0.3);
        assert_eq!(g.nearest(0.15), 4);
        assert!(TimeGrid::new(0.0, 3).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn field_strategy(
            modes: ModeSet,
            band: i64,
            real: bool,
        ) -> impl Strategy<Value = SpectralField> {
            proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), modes.len()).prop_map(
                move |v| {
                    SpectralField::from_fn(modes, real, |k| {
                        if k.sup_norm() > band {
                            return ZERO;
                        }
                        let i = modes.index_of(k.components()).unwrap();
                        Complex64::new(v[i].0, v[i].1)
                    })
                },
            )
        }

        /// Samples on an `m`-point-per-axis grid, multiplies pointwise and
        /// transforms back with a naive DFT.
        fn physical_product(f: &SpectralField, g: &SpectralField, m: usize) -> Vec<Complex64> {
            let modes = f.modes();
            let d = modes.dim();
            let npts = m.pow(d as u32);
            let point = |mut p: usize| -> Vec<f64> {
                (0..d)
                    .map(|_| {
                        let x = (p % m) as f64 * TAU / m as f64;
                        p /= m;
                        x
                    })
                    .collect()
            };
            let samples: Vec<(Vec<f64>, Complex64)> = (0..npts)
                .map(|p| {
                    let x = point(p);
                    let fv = raw_eval(f, &x);
                    let gv = raw_eval(g, &x);
                    (x, fv * gv)
                })
                .collect();
            modes
                .modes()
                .map(|k| {
                    let s: Complex64 = samples
                        .iter()
                        .map(|(x, v)| {
                            let ph: f64 = k
                                .components()
                                .iter()
                                .zip(x)
                                .map(|(&a, b)| a as f64 * b)
                                .sum();
                            v * Complex64::from_polar(1.0, -ph)
                        })
                        .sum();
                    s / npts as f64
                })
                .collect()
        }

        fn raw_eval(f: &SpectralField, x: &[f64]) -> Complex64 {
            f.modes()
                .modes()
                .zip(f.coeffs())
                .map(|(k, c)| {
                    let ph: f64 = k
                        .components()
                        .iter()
                        .zip(x)
                        .map(|(&a, b)| a as f64 * b)
                        .sum();
                    c * Complex64::from_polar(1.0, ph)
                })
                .sum()
        }

        use std::f64::consts::TAU;

        fn st_strategy(modes: ModeSet, grid: TimeGrid) -> impl Strategy<Value = SpaceTimeField> {
            proptest::collection::vec(
                field_strategy(modes, modes.trunc() as i64, true),
                grid.len(),
            )
            .prop_map(move |s| SpaceTimeField::from_slices(grid, s).unwrap())
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn convolution_matches_physical_oracle(
                f in field_strategy(ModeSet::new(2, 4).unwrap(), 4, false),
                g in field_strategy(ModeSet::new(2, 4).unwrap(), 4, false),
            ) {
                let direct = convolve(&f, &g).unwrap();
                let oracle = physical_product(&f, &g, 16);
                for (a, b) in direct.coeffs().iter().zip(&oracle) {
                    prop_assert!((a - b).norm() < 1e-12, "{a} vs {b}");
                }
            }

            #[test]
            fn real_convolution_matches_physical_oracle(
                f in field_strategy(ModeSet::new(1, 6).unwrap(), 6, true),
                g in field_strategy(ModeSet::new(1, 6).unwrap(), 6, true),
            ) {
                let direct = convolve(&f, &g).unwrap();
                prop_assert!(direct.is_real());
                prop_assert_eq!(direct.symmetry_defect(), 0.0);
                let oracle = physical_product(&f, &g, 24);
                for (a, b) in direct.coeffs().iter().zip(&oracle) {
                    prop_assert!((a - b).norm() < 1e-12);
                }
            }

            #[test]
            fn banach_algebra_inequality(
                f in field_strategy(ModeSet::new(2, 5).unwrap(), 5, false),
                g in field_strategy(ModeSet::new(2, 5).unwrap(), 5, false),
                beta in 0.0f64..2.0,
            ) {
                let p = convolve(&f, &g).unwrap();
                prop_assert!(norm_b(&p, beta) <= norm_b(&f, beta) * norm_b(&g, beta) + 1e-12);
            }

            #[test]
            fn space_time_product_estimate(
                f in st_strategy(ModeSet::new(1, 6).unwrap(), TimeGrid::new(1.3, 4).unwrap()),
                g in st_strategy(ModeSet::new(1, 6).unwrap(), TimeGrid::new(1.3, 4).unwrap()),
                alpha in 0.0f64..0.99,
                extra in 0.0f64..0.5,
            ) {
                let beta = alpha * 1.3 + extra;
                let p = f.product(&g).unwrap();
                let lhs = st_norm_pm_alpha(&p, alpha);
                prop_assert!(lhs <= st_norm_b(&f, beta) * st_norm_pm_alpha(&g, alpha) + 1e-12);
            }

            #[test]
            fn semigroup_laws(
                f in field_strategy(ModeSet::new(2, 4).unwrap(), 4, true),
                s in 0.0f64..1.0,
                t in 0.0f64..1.0,
                beta in 0.0f64..2.0,
            ) {
                prop_assert_eq!(&heat_semigroup(&f, 0.0).unwrap(), &f);
                let two = heat_semigroup(&heat_semigroup(&f, s).unwrap(), t).unwrap();
                let one = heat_semigroup(&f, s + t).unwrap();
                for (a, b) in two.coeffs().iter().zip(one.coeffs()) {
                    prop_assert!((a - b).norm() < 1e-14);
                }
                prop_assert!(norm_pm(&one, beta) <= norm_pm(&f, beta));
                prop_assert!(one.is_real());
                prop_assert!(one.symmetry_defect() <= 1e-14);
            }

            #[test]
            fn reality_is_preserved(
                f in field_strategy(ModeSet::new(3, 2).unwrap(), 2, true),
                g in field_strategy(ModeSet::new(3, 2).unwrap(), 2, true),
            ) {
                let outs = [
                    convolve(&f, &g).unwrap(),
                    f.add(&g).unwrap(),
                    f.sub(&g).unwrap(),
                    f.scale(-0.3),
                    f.derivative(2),
                    heat_semigroup(&f, 0.2).unwrap(),
                ];
                for o in &outs {
                    prop_assert!(o.is_real());
                    prop_assert!(o.symmetry_defect() <= 1e-14);
                }
                prop_assert_eq!(evaluate(&f, &[0.1, 0.2, 0.3]).im, 0.0);
            }

            #[test]
            fn product_evaluates_pointwise_for_band_limited_inputs(
                f in field_strategy(ModeSet::new(2, 6).unwrap(), 3, true),
                g in field_strategy(ModeSet::new(2, 6).unwrap(), 3, true),
                x in proptest::collection::vec(0.0..TAU, 2),
            ) {
                let lhs = evaluate(&convolve(&f, &g).unwrap(), &x);
                let rhs = evaluate(&f, &x) * evaluate(&g, &x);
                prop_assert!((lhs - rhs).norm() < 1e-10);
            }
        }
    }
}
