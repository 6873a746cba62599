//! Littlewood–Paley filter bank: the radial profiles `χ`, `φ = χ(·/2) - χ`,
//! and the homogeneous block operators `Δ̇_j` and `Ṡ_j` on a resolved band.

use crate::error::{MhdError, Result};
use crate::fields::SpectralField;
use crate::grid::Grid;

/// Inner radius of the annulus `𝒞`; `χ ≡ 1` on the ball of this radius.
pub const ANNULUS_INNER: f64 = 3.0 / 4.0;
/// Outer radius of the annulus `𝒞`.
pub const ANNULUS_OUTER: f64 = 8.0 / 3.0;
/// Support radius of `χ`.
pub const CHI_SUPPORT: f64 = 4.0 / 3.0;

fn mollifier(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// Smooth step from `exp(-1/x)`: 0 for `x <= 0`, 1 for `x >= 1`.
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let a = mollifier(x);
    a / (a + mollifier(1.0 - x))
}

/// Low-pass profile: 1 on `[0, 3/4]`, 0 on `[4/3, ∞)`, smooth and nonincreasing.
pub fn chi(r: f64) -> f64 {
    smooth_step((CHI_SUPPORT - r) / (CHI_SUPPORT - ANNULUS_INNER))
}

/// Annular profile `φ(r) = χ(r/2) - χ(r)`, supported in `(3/4, 8/3)`.
pub fn phi(r: f64) -> f64 {
    chi(0.5 * r) - chi(r)
}

/// Resolved dyadic band of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct BandRange {
    pub j_min: i32,
    pub j_max: i32,
}

impl BandRange {
    /// `j_min`: smallest `j` whose annulus `2^j 𝒞` meets a resolved wavevector;
    /// `j_max`: largest `j` with `2^j · 8/3 <= n/2` (in wavenumber units).
    pub fn for_grid(grid: &Grid) -> Self {
        let unit = grid.wavenumber_unit();
        // smallest nonzero |k| on the lattice is one unit
        let k_min = unit;
        let mut j_min = 0;
        while ANNULUS_OUTER * 2f64.powi(j_min - 1) > k_min {
            j_min -= 1;
        }
        while ANNULUS_OUTER * 2f64.powi(j_min) <= k_min {
            j_min += 1;
        }
        let cutoff = grid.axis_cutoff();
        let mut j_max = 0;
        while ANNULUS_OUTER * 2f64.powi(j_max + 1) <= cutoff {
            j_max += 1;
        }
        while ANNULUS_OUTER * 2f64.powi(j_max) > cutoff {
            j_max -= 1;
        }
        Self { j_min, j_max }
    }

    pub fn bands(&self) -> impl Iterator<Item = i32> + Clone {
        self.j_min..=self.j_max
    }

    pub fn count(&self) -> usize {
        (self.j_max - self.j_min + 1).max(0) as usize
    }

    pub fn contains(&self, j: i32) -> bool {
        (self.j_min..=self.j_max).contains(&j)
    }

    /// Conservative range `[2^{j_min+1}, 2^{j_max-1}]` on which the partition
    /// of unity is certified.
    pub fn safe_range(&self) -> (f64, f64) {
        (2f64.powi(self.j_min + 1), 2f64.powi(self.j_max - 1))
    }

    /// Full range on which the truncated sum `Σ φ(2^{-j}|k|)` is exactly one:
    /// `[(4/3) 2^{j_min}, (3/4) 2^{j_max+1}]`.
    pub fn reconstruction_range(&self) -> (f64, f64) {
        (
            CHI_SUPPORT * 2f64.powi(self.j_min),
            ANNULUS_INNER * 2f64.powi(self.j_max + 1),
        )
    }
}

/// Tabulated multipliers `φ(2^{-j}|k|)` for every band and resolved wavevector.
#[derive(Debug, Clone)]
pub struct FilterBank {
    grid: Grid,
    band: BandRange,
    kmag: Vec<f64>,
    phi_table: Vec<Vec<f64>>,
}

impl FilterBank {
    pub fn new(grid: &Grid) -> Result<Self> {
        let band = BandRange::for_grid(grid);
        if band.count() < 3 {
            return Err(MhdError::GridTooSmall(format!(
                "n = {} resolves only bands {}..={}; need at least three",
                grid.n(),
                band.j_min,
                band.j_max
            )));
        }
        let kmag: Vec<f64> = (0..grid.size()).map(|i| grid.wavevector_norm(i)).collect();
        let phi_table = band
            .bands()
            .map(|j| {
                let scale = 2f64.powi(-j);
                kmag.iter().map(|&k| phi(k * scale)).collect()
            })
            .collect();
        Ok(Self {
            grid: grid.clone(),
            band,
            kmag,
            phi_table,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn band(&self) -> BandRange {
        self.band
    }

    pub fn j_min(&self) -> i32 {
        self.band.j_min
    }

    pub fn j_max(&self) -> i32 {
        self.band.j_max
    }

    pub fn kmag(&self) -> &[f64] {
        &self.kmag
    }

    fn check_band(&self, j: i32) -> Result<()> {
        if self.band.contains(j) {
            Ok(())
        } else {
            Err(MhdError::BandOutOfRange {
                j,
                j_min: self.band.j_min,
                j_max: self.band.j_max,
            })
        }
    }

    /// `φ(2^{-j}|k|)` over the grid's flat index.
    pub fn multiplier(&self, j: i32) -> Result<&[f64]> {
        self.check_band(j)?;
        Ok(&self.phi_table[(j - self.band.j_min) as usize])
    }

    /// `φ(2^{-j}|k|)` at an arbitrary radius.
    pub fn phi_at(&self, j: i32, k: f64) -> f64 {
        phi(k * 2f64.powi(-j))
    }

    /// In-band sum `Σ_j φ(2^{-j} r)`.
    pub fn partition_sum(&self, r: f64) -> f64 {
        self.band.bands().map(|j| self.phi_at(j, r)).sum()
    }

    pub fn partition_square_sum(&self, r: f64) -> f64 {
        self.band.bands().map(|j| self.phi_at(j, r).powi(2)).sum()
    }

    fn check_field(&self, f: &SpectralField) -> Result<()> {
        if f.grid() != &self.grid {
            return Err(MhdError::GridMismatch);
        }
        Ok(())
    }

    /// `Δ̇_j f`: coefficientwise product with `φ(2^{-j}|k|)`.
    pub fn lp_block(&self, f: &SpectralField, j: i32) -> Result<SpectralField> {
        self.check_field(f)?;
        let table = self.multiplier(j)?;
        let mut out = f.apply_table(table);
        out.set_zero_mean(true);
        Ok(out)
    }

    /// `Ṡ_j f = Σ_{j_min <= j' < j} Δ̇_{j'} f`, applied as the telescoped
    /// multiplier `χ(2^{-j}|k|) - χ(2^{-j_min}|k|)`.
    pub fn low_cutoff(&self, f: &SpectralField, j: i32) -> Result<SpectralField> {
        self.check_field(f)?;
        if j < self.band.j_min || j > self.band.j_max + 1 {
            return Err(MhdError::BandOutOfRange {
                j,
                j_min: self.band.j_min,
                j_max: self.band.j_max + 1,
            });
        }
        let hi = 2f64.powi(-j);
        let lo = 2f64.powi(-self.band.j_min);
        let mut out = if j == self.band.j_min {
            f.scaled(0.0)
        } else {
            f.apply_multiplier(|idx| {
                let k = self.kmag[idx];
                chi(k * hi) - chi(k * lo)
            })
        };
        out.set_zero_mean(true);
        Ok(out)
    }

    /// Sorted distinct resolved `|k|` values (non-Nyquist, nonzero).
    pub fn distinct_radii(&self) -> Vec<f64> {
        let mut radii: Vec<f64> = (1..self.grid.size())
            .filter(|&i| !self.grid.is_nyquist(i))
            .map(|i| self.kmag[i])
            .collect();
        radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
        radii.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        radii
    }

    /// Rows `(j, |k|, φ(2^{-j}|k|))` over distinct resolved radii.
    pub fn phi_rows(&self) -> Vec<(i32, f64, f64)> {
        let radii = self.distinct_radii();
        let mut rows = Vec::new();
        for j in self.band.bands() {
            for &r in &radii {
                rows.push((j, r, self.phi_at(j, r)));
            }
        }
        rows
    }

    /// Worst `|Σ_j φ - 1|` over resolved radii in the safe range.
    pub fn partition_deviation(&self) -> f64 {
        let (lo, hi) = self.band.safe_range();
        self.distinct_radii()
            .into_iter()
            .filter(|&r| r >= lo && r <= hi)
            .map(|r| (self.partition_sum(r) - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `(min, max)` of `Σ_j φ²` over resolved radii in the safe range.
    pub fn square_sum_bounds(&self) -> (f64, f64) {
        let (lo, hi) = self.band.safe_range();
        self.distinct_radii()
            .into_iter()
            .filter(|&r| r >= lo && r <= hi)
            .map(|r| self.partition_square_sum(r))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::sample_scalar;

    fn bank() -> FilterBank {
        FilterBank::new(&Grid::periodic(2, 64).unwrap()).unwrap()
    }

    #[test]
    fn band_range_for_standard_grids() {
        let b = BandRange::for_grid(&Grid::periodic(2, 64).unwrap());
        assert_eq!((b.j_min, b.j_max), (-1, 3));
        let b8 = BandRange::for_grid(&Grid::periodic(2, 8).unwrap());
        assert!(b8.j_min <= 0 && 0 <= b8.j_max);
        let b128 = BandRange::for_grid(&Grid::periodic(3, 128).unwrap());
        assert_eq!((b128.j_min, b128.j_max), (-1, 4));
    }

    #[test]
    fn too_small_grid_is_rejected() {
        let g = Grid::periodic(2, 8).unwrap();
        assert!(matches!(FilterBank::new(&g), Err(MhdError::GridTooSmall(_))));
        assert!(FilterBank::new(&Grid::periodic(2, 16).unwrap()).is_ok());
    }

    #[test]
    fn chi_and_phi_profiles() {
        assert_eq!(chi(0.0), 1.0);
        assert_eq!(chi(0.75), 1.0);
        assert_eq!(chi(4.0 / 3.0), 0.0);
        assert!(chi(1.0) > 0.0 && chi(1.0) < 1.0);
        for i in 0..2000 {
            let r = i as f64 * 0.002;
            let v = phi(r);
            assert!((0.0..=1.0).contains(&v));
            if r <= ANNULUS_INNER || r >= ANNULUS_OUTER {
                assert_eq!(v, 0.0);
            }
            // exactly one on [4/3, 3/2]
            if (4.0 / 3.0..=1.5).contains(&r) {
                assert_eq!(v, 1.0);
            }
        }
    }

    #[test]
    fn interior_partition_of_unity() {
        let b = bank();
        assert!((b.partition_sum(4.0) - 1.0).abs() < 1e-10);
        for j in b.band().bands() {
            assert_eq!(b.multiplier(j).unwrap()[0], 0.0);
        }
    }

    #[test]
    fn mode_at_one_point_four_octaves() {
        let b = bank();
        for j in 0..=b.j_max() {
            let r = 1.4 * 2f64.powi(j);
            assert_eq!(b.phi_at(j, r), 1.0);
            for jp in b.band().bands().filter(|jp| (jp - j).abs() >= 2) {
                assert_eq!(b.phi_at(jp, r), 0.0);
            }
        }
    }

    #[test]
    fn blocks_out_of_range_error() {
        let b = bank();
        let f = sample_scalar(b.grid(), 1, 2.0).unwrap();
        assert!(matches!(b.lp_block(&f, 4), Err(MhdError::BandOutOfRange { .. })));
        assert!(matches!(b.low_cutoff(&f, 5), Err(MhdError::BandOutOfRange { .. })));
        assert!(b.low_cutoff(&f, 4).is_ok());
    }

    #[test]
    fn low_cutoff_edges() {
        let b = bank();
        let g = b.grid().clone();
        let (_, hi) = b.band().reconstruction_range();
        let f = sample_scalar(&g, 5, 1.0).unwrap().band_limited(hi);
        let empty = b.low_cutoff(&f, b.j_min()).unwrap();
        assert_eq!(empty.spectral_l2(), 0.0);
        let full = b.low_cutoff(&f, b.j_max() + 1).unwrap();
        assert_eq!(full, f);
    }

    #[test]
    fn low_cutoff_is_block_local() {
        let b = bank();
        let g = b.grid().clone();
        for j0 in 0..=b.j_max() {
            let m = 1i64 << j0;
            let f = SpectralField::cosine_mode(&g, [m, m, 0], 1.0);
            assert_eq!(b.low_cutoff(&f, j0).unwrap().spectral_l2(), 0.0);
            let up = b.low_cutoff(&f, j0 + 1).unwrap();
            assert_eq!(up, f);
        }
    }

    #[test]
    fn low_cutoff_matches_block_sum() {
        let b = bank();
        let f = sample_scalar(b.grid(), 9, 1.0).unwrap();
        for j in b.j_min()..=b.j_max() + 1 {
            let mut acc = f.scaled(0.0);
            for jp in b.j_min()..j {
                acc = acc.add(&b.lp_block(&f, jp).unwrap()).unwrap();
            }
            let direct = b.low_cutoff(&f, j).unwrap();
            assert!(direct.max_coeff_distance(&acc).unwrap() < 1e-14);
        }
    }
}
