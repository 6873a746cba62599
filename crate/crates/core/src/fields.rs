//! Real periodic fields stored as Hermitian-symmetric Fourier coefficients.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{MhdError, Result};
use crate::grid::{Grid, NormedMeasure};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A scalar (`components == 1`) or vector field on a [`Grid`].
///
/// Coefficients are component-major: component `c` occupies
/// `coeffs[c * N .. (c + 1) * N]` in the grid's flat wavevector order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    components: usize,
    zero_mean: bool,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: &Grid, components: usize, zero_mean: bool) -> Self {
        Self {
            grid: grid.clone(),
            components,
            zero_mean,
            coeffs: vec![ZERO; components * grid.size()],
        }
    }

    pub fn from_coeffs(
        grid: &Grid,
        components: usize,
        zero_mean: bool,
        coeffs: Vec<Complex64>,
    ) -> Result<Self> {
        if components == 0 || coeffs.len() != components * grid.size() {
            return Err(MhdError::ComponentMismatch {
                expected: components * grid.size(),
                found: coeffs.len(),
            });
        }
        let mut f = Self {
            grid: grid.clone(),
            components,
            zero_mean,
            coeffs,
        };
        if zero_mean {
            f.clear_mean();
        }
        Ok(f)
    }

    /// Samples `value(x, component)` on the grid and transforms.
    pub fn from_fn(grid: &Grid, components: usize, value: impl Fn(&[f64; 3], usize) -> f64) -> Self {
        let n = grid.size();
        let mut coeffs = vec![ZERO; components * n];
        for c in 0..components {
            let slot = &mut coeffs[c * n..(c + 1) * n];
            for (i, v) in slot.iter_mut().enumerate() {
                *v = Complex64::new(value(&grid.point(i), c), 0.0);
            }
            grid.forward(slot);
        }
        Self {
            grid: grid.clone(),
            components,
            zero_mean: false,
            coeffs,
        }
    }

    /// Scalar field `amplitude · cos(m·x)` set directly in coefficient space.
    pub fn cosine_mode(grid: &Grid, mode: [i64; 3], amplitude: f64) -> Self {
        let mut f = Self::zeros(grid, 1, true);
        let idx = grid.index_of(mode);
        let neg = grid.negated_index(idx);
        f.coeffs[idx] += Complex64::new(0.5 * amplitude, 0.0);
        f.coeffs[neg] += Complex64::new(0.5 * amplitude, 0.0);
        f.symmetrize();
        f
    }

    pub fn from_physical(grid: &Grid, values: &[Vec<f64>]) -> Result<Self> {
        let n = grid.size();
        let mut coeffs = Vec::with_capacity(values.len() * n);
        for comp in values {
            if comp.len() != n {
                return Err(MhdError::ComponentMismatch {
                    expected: n,
                    found: comp.len(),
                });
            }
            let mut buf: Vec<Complex64> = comp.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            grid.forward(&mut buf);
            coeffs.extend(buf);
        }
        Self::from_coeffs(grid, values.len(), false, coeffs)
    }

    /// Physical values per component (real part of the synthesis).
    pub fn to_physical(&self) -> Vec<Vec<f64>> {
        (0..self.components)
            .map(|c| {
                let mut buf = self.component(c).to_vec();
                self.grid.inverse(&mut buf);
                buf.into_iter().map(|v| v.re).collect()
            })
            .collect()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn is_vector(&self) -> bool {
        self.components == self.grid.dim()
    }

    pub fn zero_mean(&self) -> bool {
        self.zero_mean
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        let n = self.grid.size();
        &self.coeffs[c * n..(c + 1) * n]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        let n = self.grid.size();
        &mut self.coeffs[c * n..(c + 1) * n]
    }

    pub fn set_zero_mean(&mut self, zero_mean: bool) {
        self.zero_mean = zero_mean;
        if zero_mean {
            self.clear_mean();
        }
    }

    pub fn with_zero_mean(mut self) -> Self {
        self.set_zero_mean(true);
        self
    }

    fn clear_mean(&mut self) {
        let n = self.grid.size();
        for c in 0..self.components {
            self.coeffs[c * n] = ZERO;
        }
    }

    /// Enforces `coeffs(-k) = conj(coeffs(k))`, clears Nyquist planes and,
    /// for zero-mean fields, the `k = 0` mode.
    pub fn symmetrize(&mut self) {
        let grid = self.grid.clone();
        let n = grid.size();
        for c in 0..self.components {
            let slot = &mut self.coeffs[c * n..(c + 1) * n];
            for idx in 0..n {
                if grid.is_nyquist(idx) {
                    slot[idx] = ZERO;
                    continue;
                }
                let neg = grid.negated_index(idx);
                if neg < idx {
                    continue;
                }
                let avg = 0.5 * (slot[idx] + slot[neg].conj());
                slot[idx] = avg;
                slot[neg] = avg.conj();
            }
        }
        if self.zero_mean {
            self.clear_mean();
        }
    }

    /// Largest violation of Hermitian symmetry.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.grid.size();
        let mut worst: f64 = 0.0;
        for c in 0..self.components {
            let slot = self.component(c);
            for idx in 0..n {
                let neg = self.grid.negated_index(idx);
                worst = worst.max((slot[idx] - slot[neg].conj()).norm());
            }
        }
        worst
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(MhdError::GridMismatch);
        }
        if self.components != other.components {
            return Err(MhdError::ComponentMismatch {
                expected: self.components,
                found: other.components,
            });
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for v in out.coeffs.iter_mut() {
            *v *= factor;
        }
        out
    }

    /// `self + factor · other`.
    pub fn axpy(&self, factor: f64, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *a += factor * b;
        }
        out.zero_mean = self.zero_mean && other.zero_mean;
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    /// Coefficientwise real multiplier `m(idx)` applied to every component.
    pub fn apply_multiplier(&self, multiplier: impl Fn(usize) -> f64) -> Self {
        let n = self.grid.size();
        let mut out = self.clone();
        for idx in 0..n {
            let m = multiplier(idx);
            for c in 0..self.components {
                out.coeffs[c * n + idx] *= m;
            }
        }
        out
    }

    /// Same multiplier but read from a precomputed table.
    pub fn apply_table(&self, table: &[f64]) -> Self {
        self.apply_multiplier(|idx| table[idx])
    }

    /// `sqrt(Σ_k |f̂(k)|²)`, equal to the L² norm under the normalized measure.
    pub fn spectral_l2(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_coeff_distance(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Spectral derivative `∂_axis` of every component (zero on Nyquist planes).
    pub fn derivative(&self, axis: usize) -> Self {
        let grid = &self.grid;
        let n = grid.size();
        let half = (grid.n() / 2) as i64;
        let mut out = self.clone();
        for idx in 0..n {
            let m = grid.mode(idx)[axis];
            let factor = if m == half {
                ZERO
            } else {
                Complex64::new(0.0, grid.wavevector(idx)[axis])
            };
            for c in 0..self.components {
                out.coeffs[c * n + idx] *= factor;
            }
        }
        out.zero_mean = true;
        out
    }

    pub fn divergence(&self) -> Result<Self> {
        let d = self.grid.dim();
        if self.components != d {
            return Err(MhdError::ComponentMismatch {
                expected: d,
                found: self.components,
            });
        }
        let n = self.grid.size();
        let mut out = SpectralField::zeros(&self.grid, 1, true);
        for a in 0..d {
            let da = self.derivative(a);
            for (o, v) in out.coeffs.iter_mut().zip(&da.coeffs[a * n..(a + 1) * n]) {
                *o += v;
            }
        }
        Ok(out)
    }

    /// Gradient: component `c * d + a` holds `∂_a f_c`.
    pub fn gradient(&self) -> Self {
        let d = self.grid.dim();
        let n = self.grid.size();
        let mut out = SpectralField::zeros(&self.grid, self.components * d, true);
        for a in 0..d {
            let da = self.derivative(a);
            for c in 0..self.components {
                let dst = (c * d + a) * n;
                out.coeffs[dst..dst + n].copy_from_slice(da.component(c));
            }
        }
        out
    }

    /// Copy with every mode outside the 2/3-rule box removed.
    pub fn dealiased(&self) -> Self {
        let grid = self.grid.clone();
        self.apply_multiplier(|idx| if grid.is_dealiased(idx) { 1.0 } else { 0.0 })
    }

    /// Pointwise Euclidean magnitude across components.
    pub fn pointwise_magnitude(&self) -> Vec<f64> {
        let phys = self.to_physical();
        let n = self.grid.size();
        (0..n)
            .map(|i| phys.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
            .collect()
    }

    /// Modes with `|k| > k_max` removed.
    pub fn band_limited(&self, k_max: f64) -> Self {
        let grid = self.grid.clone();
        self.apply_multiplier(|idx| {
            if grid.wavevector_norm(idx) <= k_max {
                1.0
            } else {
                0.0
            }
        })
    }
}

/// Real inner product `⟨v, w⟩ = Σ_k Re(v̂(k) · conj(ŵ(k)))` (normalized measure).
pub fn inner_product(v: &SpectralField, w: &SpectralField) -> Result<f64> {
    v.check_compatible(w)?;
    Ok(v.coeffs
        .iter()
        .zip(&w.coeffs)
        .map(|(a, b)| (a * b.conj()).re)
        .sum())
}

/// Leray projection: `ŵ(k) = (I - k kᵀ/|k|²) v̂(k)` for `k ≠ 0`, `ŵ(0) = v̂(0)`.
pub fn leray_project(v: &SpectralField) -> Result<SpectralField> {
    let grid = v.grid();
    let d = grid.dim();
    if v.components() != d {
        return Err(MhdError::ComponentMismatch {
            expected: d,
            found: v.components(),
        });
    }
    let n = grid.size();
    let mut out = v.clone();
    for idx in 1..n {
        let k = grid.wavevector(idx);
        let k2: f64 = k[..d].iter().map(|x| x * x).sum();
        let mut kv = ZERO;
        for a in 0..d {
            kv += k[a] * v.coeffs[a * n + idx];
        }
        if kv == ZERO {
            continue;
        }
        for a in 0..d {
            out.coeffs[a * n + idx] -= kv * (k[a] / k2);
        }
    }
    Ok(out)
}

/// Cheap upper bound on `max_x |div v(x)|`: the ℓ¹ norm of the divergence coefficients.
pub fn divergence_bound(v: &SpectralField) -> Result<f64> {
    Ok(v.divergence()?.coeffs.iter().map(|c| c.norm()).sum())
}

fn check_pair(a: &SpectralField, b: &SpectralField) -> Result<()> {
    if a.grid() != b.grid() {
        return Err(MhdError::GridMismatch);
    }
    let d = a.grid().dim();
    for f in [a, b] {
        if f.components() != d {
            return Err(MhdError::ComponentMismatch {
                expected: d,
                found: f.components(),
            });
        }
    }
    Ok(())
}

fn finish_product(grid: &Grid, physical: Vec<Vec<f64>>) -> SpectralField {
    let mut out = SpectralField::from_physical(grid, &physical).expect("sizes match by construction");
    out = out.dealiased();
    out.symmetrize();
    out
}

/// `u·∇b` evaluated in conservative form `∂_k (u_k b_i)` with 2/3-rule dealiasing.
///
/// Requires `div u = 0` to within `1e-8 (1 + ‖u‖_{L²})`.
pub fn advect(u: &SpectralField, b: &SpectralField) -> Result<SpectralField> {
    check_pair(u, b)?;
    let div = divergence_bound(u)?;
    if div > 1e-8 * (1.0 + u.spectral_l2()) {
        return Err(MhdError::NotDivergenceFree(div));
    }
    Ok(advect_unchecked(u, b))
}

pub(crate) fn advect_unchecked(u: &SpectralField, b: &SpectralField) -> SpectralField {
    let grid = u.grid();
    let d = grid.dim();
    let n = grid.size();
    let up = u.dealiased().to_physical();
    let bp = b.dealiased().to_physical();
    let mut out = SpectralField::zeros(grid, d, false);
    for i in 0..d {
        for k in 0..d {
            let prod: Vec<f64> = (0..n).map(|x| up[k][x] * bp[i][x]).collect();
            let flux = finish_product(grid, vec![prod]).derivative(k);
            for (o, v) in out.component_mut(i).iter_mut().zip(flux.component(0)) {
                *o += v;
            }
        }
    }
    out
}

/// `(a·∇)c` in non-conservative form `a_k ∂_k c_i`, dealiased; valid without
/// any divergence constraint on `a`.
pub fn convective(a: &SpectralField, c: &SpectralField) -> Result<SpectralField> {
    check_pair(a, c)?;
    let grid = a.grid();
    let d = grid.dim();
    let n = grid.size();
    let ap = a.dealiased().to_physical();
    let grad = c.dealiased().gradient().to_physical();
    let mut phys = vec![vec![0.0; n]; d];
    for (i, out) in phys.iter_mut().enumerate() {
        for k in 0..d {
            let g = &grad[i * d + k];
            for x in 0..n {
                out[x] += ap[k][x] * g[x];
            }
        }
    }
    Ok(finish_product(grid, phys))
}

/// Dealiased pointwise product of two scalar fields.
pub fn scalar_product(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    if f.grid() != g.grid() {
        return Err(MhdError::GridMismatch);
    }
    for h in [f, g] {
        if h.components() != 1 {
            return Err(MhdError::ComponentMismatch {
                expected: 1,
                found: h.components(),
            });
        }
    }
    let fp = f.dealiased().to_physical();
    let gp = g.dealiased().to_physical();
    let prod: Vec<f64> = fp[0].iter().zip(&gp[0]).map(|(a, b)| a * b).collect();
    Ok(finish_product(f.grid(), vec![prod]))
}

/// Lᵖ norm under the normalized measure; `p = f64::INFINITY` gives the grid maximum.
pub fn lp_norm(f: &SpectralField, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(MhdError::InvalidExponent(p));
    }
    let mag = f.pointwise_magnitude();
    Ok(lp_of_values(&mag, p, NormedMeasure::for_grid(f.grid())))
}

pub(crate) fn lp_of_values(values: &[f64], p: f64, measure: NormedMeasure) -> f64 {
    if p.is_infinite() {
        return values.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    if p == 2.0 {
        return (values.iter().map(|v| v * v).sum::<f64>() * measure.cell_volume).sqrt();
    }
    if p == 1.0 {
        return values.iter().map(|v| v.abs()).sum::<f64>() * measure.cell_volume;
    }
    // scale out the maximum so large p does not overflow
    let max = values.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    if max == 0.0 {
        return 0.0;
    }
    let sum: f64 = values.iter().map(|v| (v.abs() / max).powf(p)).sum();
    max * (sum * measure.cell_volume).powf(1.0 / p)
}

/// Seeded random divergence-free, zero-mean vector field with
/// `|coeffs(k)| ∝ |k|^{-decay}` on the dealiased, non-Nyquist modes.
pub fn sample_divergence_free(grid: &Grid, seed: u64, decay_exponent: f64) -> Result<SpectralField> {
    if !(decay_exponent > 0.0) {
        return Err(MhdError::Domain(format!(
            "decay exponent must be positive, got {decay_exponent}"
        )));
    }
    let d = grid.dim();
    let n = grid.size();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = vec![ZERO; d * n];
    for c in 0..d {
        for idx in 0..n {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            if idx == 0 || grid.is_nyquist(idx) || !grid.is_dealiased(idx) {
                continue;
            }
            let amp = grid.wavevector_norm(idx).powf(-decay_exponent);
            coeffs[c * n + idx] = Complex64::new(re, im) * amp;
        }
    }
    let mut f = SpectralField::from_coeffs(grid, d, true, coeffs)?;
    f.symmetrize();
    leray_project(&f)
}

/// Seeded random zero-mean scalar field with the same spectral envelope.
pub fn sample_scalar(grid: &Grid, seed: u64, decay_exponent: f64) -> Result<SpectralField> {
    if !(decay_exponent > 0.0) {
        return Err(MhdError::Domain(format!(
            "decay exponent must be positive, got {decay_exponent}"
        )));
    }
    let n = grid.size();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = vec![ZERO; n];
    for (idx, slot) in coeffs.iter_mut().enumerate() {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        if idx == 0 || grid.is_nyquist(idx) || !grid.is_dealiased(idx) {
            continue;
        }
        *slot = Complex64::new(re, im) * grid.wavevector_norm(idx).powf(-decay_exponent);
    }
    let mut f = SpectralField::from_coeffs(grid, 1, true, coeffs)?;
    f.symmetrize();
    Ok(f)
}
