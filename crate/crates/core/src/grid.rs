//! Periodic grid on the torus `[0, L)^d` and the FFT plumbing shared by all fields.
//!
//! Flat indices are row-major over `n^d` points; the last axis is contiguous.
//! Integer wavenumbers follow the usual FFT order `0, 1, .., n/2, -n/2+1, .., -1`,
//! so the Nyquist index `n/2` is reported as `+n/2`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{MhdError, Result};

struct FftPlans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

#[derive(Clone)]
pub struct Grid {
    dim: usize,
    n: usize,
    length: f64,
    plans: Arc<FftPlans>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .field("length", &self.length)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n && self.length == other.length
    }
}

impl Grid {
    pub fn new(dim: usize, n: usize, length: f64) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(MhdError::InvalidGrid(format!("dimension {dim} not in {{2, 3}}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(MhdError::InvalidGrid(format!(
                "n = {n} must be a power of two >= 8"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(MhdError::InvalidGrid(format!("period length {length}")));
        }
        let mut planner = FftPlanner::new();
        let plans = FftPlans {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        };
        Ok(Self {
            dim,
            n,
            length,
            plans: Arc::new(plans),
        })
    }

    /// The default `2π`-periodic grid.
    pub fn periodic(dim: usize, n: usize) -> Result<Self> {
        Self::new(dim, n, 2.0 * std::f64::consts::PI)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Number of grid points (and of Fourier coefficients per component).
    pub fn size(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// `2π / L`: the physical size of one integer wavenumber step.
    pub fn wavenumber_unit(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.length
    }

    fn axis_index(&self, idx: usize, axis: usize) -> usize {
        let stride = self.n.pow((self.dim - 1 - axis) as u32);
        (idx / stride) % self.n
    }

    fn signed(&self, i: usize) -> i64 {
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Integer wavevector at a flat index (unused trailing entries are 0).
    pub fn mode(&self, idx: usize) -> [i64; 3] {
        let mut m = [0i64; 3];
        for (a, slot) in m.iter_mut().enumerate().take(self.dim) {
            *slot = self.signed(self.axis_index(idx, a));
        }
        m
    }

    /// Physical wavevector `k = m · 2π/L`.
    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        let unit = self.wavenumber_unit();
        let m = self.mode(idx);
        [m[0] as f64 * unit, m[1] as f64 * unit, m[2] as f64 * unit]
    }

    pub fn wavevector_norm(&self, idx: usize) -> f64 {
        let k = self.wavevector(idx);
        (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt()
    }

    /// True when any axis sits on the Nyquist index `n/2`.
    pub fn is_nyquist(&self, idx: usize) -> bool {
        let half = (self.n / 2) as i64;
        self.mode(idx)[..self.dim].iter().any(|&m| m == half)
    }

    /// Kept by the 2/3 dealiasing rule: `|m_a| <= n/3` on every axis.
    pub fn is_dealiased(&self, idx: usize) -> bool {
        let cut = (self.n / 3) as i64;
        self.mode(idx)[..self.dim].iter().all(|&m| m.abs() <= cut)
    }

    /// Flat index of an integer wavevector (entries are taken modulo `n`).
    pub fn index_of(&self, mode: [i64; 3]) -> usize {
        let n = self.n as i64;
        mode[..self.dim]
            .iter()
            .fold(0usize, |acc, &m| acc * self.n + m.rem_euclid(n) as usize)
    }

    /// Flat index of the wavevector `-k`.
    pub fn negated_index(&self, idx: usize) -> usize {
        let mut out = 0;
        for a in 0..self.dim {
            let i = self.axis_index(idx, a);
            let neg = (self.n - i) % self.n;
            out = out * self.n + neg;
        }
        out
    }

    /// Physical coordinates of a grid point.
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let h = self.spacing();
        let mut x = [0.0; 3];
        for (a, slot) in x.iter_mut().enumerate().take(self.dim) {
            *slot = self.axis_index(idx, a) as f64 * h;
        }
        x
    }

    /// Largest resolved wavenumber magnitude along an axis, `n/2 · 2π/L`.
    pub fn axis_cutoff(&self) -> f64 {
        (self.n / 2) as f64 * self.wavenumber_unit()
    }

    /// Normalized forward transform: `f̂(k) = (1/N) Σ_x f(x) e^{-ik·x}`.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, true);
        let scale = 1.0 / self.size() as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    /// Synthesis `f(x) = Σ_k f̂(k) e^{ik·x}`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, false);
    }

    fn transform(&self, data: &mut [Complex64], forward: bool) {
        debug_assert_eq!(data.len(), self.size());
        let fft = if forward {
            &self.plans.forward
        } else {
            &self.plans.inverse
        };
        let n = self.n;
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        // contiguous last axis: every chunk of n is one line
        fft.process_with_scratch(data, &mut scratch);
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for axis in 0..self.dim - 1 {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            let block = stride * n;
            for base in (0..data.len()).step_by(block) {
                for offset in 0..stride {
                    let start = base + offset;
                    for (i, v) in line.iter_mut().enumerate() {
                        *v = data[start + i * stride];
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for (i, v) in line.iter().enumerate() {
                        data[start + i * stride] = *v;
                    }
                }
            }
        }
    }
}

/// Normalized measure on the torus: total mass 1, so every cell weighs `1/N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormedMeasure {
    pub cell_volume: f64,
}

impl NormedMeasure {
    pub fn for_grid(grid: &Grid) -> Self {
        Self {
            cell_volume: 1.0 / grid.size() as f64,
        }
    }
}
