//! Homogeneous Besov norms, Chemin–Lerner space-time norms, dyadic tail sums
//! and the measured product-estimate ratio.
//!
//! Every sum over `j ∈ ℤ` is truncated to the filter bank's resolved band.

use serde::Serialize;

use crate::dyadic::{BandRange, FilterBank};
use crate::error::{MhdError, Result};
use crate::fields::{lp_norm, scalar_product, SpectralField};

/// Selects `Ḃ^s_{p,r}`; `p` and `r` may be `f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BesovIndex {
    pub s: f64,
    pub p: f64,
    pub r: f64,
}

impl BesovIndex {
    pub fn new(s: f64, p: f64, r: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(MhdError::InvalidExponent(p));
        }
        if r.is_nan() || r < 1.0 {
            return Err(MhdError::InvalidExponent(r));
        }
        if !s.is_finite() {
            return Err(MhdError::Domain(format!("regularity s = {s}")));
        }
        Ok(Self { s, p, r })
    }

    /// `Ḃ^{d/p + shift}_{p,1}`, the scale of the solution spaces.
    pub fn critical(dim: usize, p: f64, shift: f64) -> Result<Self> {
        Self::new(dim as f64 / p + shift, p, 1.0)
    }
}

/// `‖Δ̇_j f‖_{Lᵖ}` for every in-band `j`, ascending from `j_min`.
///
/// For `p = 2` the block norms come from Parseval on the coefficients.
pub fn block_norms(f: &SpectralField, p: f64, bank: &FilterBank) -> Result<Vec<f64>> {
    if f.grid() != bank.grid() {
        return Err(MhdError::GridMismatch);
    }
    if p.is_nan() || p < 1.0 {
        return Err(MhdError::InvalidExponent(p));
    }
    bank.band()
        .bands()
        .map(|j| {
            if p == 2.0 {
                let table = bank.multiplier(j)?;
                let n = f.grid().size();
                let mut acc = 0.0;
                for c in 0..f.components() {
                    let slot = &f.coeffs()[c * n..(c + 1) * n];
                    for (v, m) in slot.iter().zip(table) {
                        if *m != 0.0 {
                            acc += m * m * v.norm_sqr();
                        }
                    }
                }
                Ok(acc.sqrt())
            } else {
                lp_norm(&bank.lp_block(f, j)?, p)
            }
        })
        .collect()
}

/// `ℓʳ` norm of `2^{js} b_j` over the band (summed in ascending `j`).
pub fn weighted_lr(blocks: &[f64], band: BandRange, s: f64, r: f64) -> f64 {
    let weighted = band.bands().zip(blocks).map(|(j, b)| 2f64.powf(s * j as f64) * b);
    if r.is_infinite() {
        weighted.fold(0.0, f64::max)
    } else if r == 1.0 {
        weighted.sum()
    } else {
        weighted.map(|v| v.powf(r)).sum::<f64>().powf(1.0 / r)
    }
}

pub fn besov_norm(f: &SpectralField, idx: BesovIndex, bank: &FilterBank) -> Result<f64> {
    let blocks = block_norms(f, idx.p, bank)?;
    Ok(weighted_lr(&blocks, bank.band(), idx.s, idx.r))
}

/// Norm value together with the band it was truncated to.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BesovReport {
    pub s: f64,
    pub p: f64,
    pub r: f64,
    pub value: f64,
    pub band: [i32; 2],
    /// Set when the field carries energy outside the range where the
    /// truncated partition of unity is exact.
    pub tail_warning: bool,
}

pub fn besov_report(f: &SpectralField, idx: BesovIndex, bank: &FilterBank) -> Result<BesovReport> {
    let value = besov_norm(f, idx, bank)?;
    let (lo, hi) = bank.band().reconstruction_range();
    let n = f.grid().size();
    let mut outside = 0.0;
    let mut total = 0.0;
    for c in 0..f.components() {
        for (i, v) in f.component(c).iter().enumerate().skip(1) {
            let e = v.norm_sqr();
            total += e;
            let k = bank.kmag()[i % n];
            if k < lo || k > hi {
                outside += e;
            }
        }
    }
    Ok(BesovReport {
        s: idx.s,
        p: idx.p,
        r: idx.r,
        value,
        band: [bank.j_min(), bank.j_max()],
        tail_warning: outside > 1e-24 + 1e-12 * total,
    })
}

/// Per-time block norms `‖Δ̇_j f(t)‖_{Lᵖ}` on a strictly increasing time grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormTrace {
    pub times: Vec<f64>,
    pub p: f64,
    pub band: BandRange,
    /// `blocks[i][j - j_min]` at time `times[i]`.
    pub blocks: Vec<Vec<f64>>,
}

impl NormTrace {
    pub fn new(times: Vec<f64>, p: f64, band: BandRange, blocks: Vec<Vec<f64>>) -> Result<Self> {
        if times.is_empty() {
            return Err(MhdError::EmptyTrace);
        }
        if times.len() != blocks.len() {
            return Err(MhdError::InvalidTimeGrid(format!(
                "{} times for {} block rows",
                times.len(),
                blocks.len()
            )));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(MhdError::InvalidTimeGrid("times must increase strictly".into()));
        }
        if blocks
            .iter()
            .any(|row| row.len() != band.count() || row.iter().any(|v| !(*v >= 0.0)))
        {
            return Err(MhdError::InvalidTimeGrid("block rows must be nonnegative and span the band".into()));
        }
        Ok(Self { times, p, band, blocks })
    }

    pub fn from_fields(times: Vec<f64>, fields: &[SpectralField], p: f64, bank: &FilterBank) -> Result<Self> {
        let blocks = fields
            .iter()
            .map(|f| block_norms(f, p, bank))
            .collect::<Result<Vec<_>>>()?;
        Self::new(times, p, bank.band(), blocks)
    }

    /// `(t, j, ‖Δ̇_j f(t)‖_p)` rows.
    pub fn rows(&self) -> Vec<(f64, i32, f64)> {
        let mut out = Vec::with_capacity(self.times.len() * self.band.count());
        for (t, row) in self.times.iter().zip(&self.blocks) {
            for (j, v) in self.band.bands().zip(row) {
                out.push((*t, j, *v));
            }
        }
        out
    }

    /// Besov norm at every node.
    pub fn besov_series(&self, s: f64, r: f64) -> Vec<f64> {
        self.blocks
            .iter()
            .map(|row| weighted_lr(row, self.band, s, r))
            .collect()
    }

    fn check(&self, idx: &BesovIndex) -> Result<()> {
        if idx.p != self.p {
            return Err(MhdError::Domain(format!(
                "trace holds L^{} blocks, index asks for p = {}",
                self.p, idx.p
            )));
        }
        Ok(())
    }
}

/// Trapezoidal `L^q` norm in time; `q = ∞` is the maximum over nodes.
pub fn time_lq(values: &[f64], times: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        return values.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    let mut acc = 0.0;
    for i in 1..times.len() {
        let h = times[i] - times[i - 1];
        acc += 0.5 * h * (values[i].abs().powf(q) + values[i - 1].abs().powf(q));
    }
    acc.powf(1.0 / q)
}

/// `‖f‖_{L̃^q_T(Ḃ^s_{p,r})}`: time norm inside the block sum.
pub fn chemin_lerner_norm(trace: &NormTrace, q: f64, idx: BesovIndex) -> Result<f64> {
    trace.check(&idx)?;
    if q.is_nan() || q < 1.0 {
        return Err(MhdError::InvalidExponent(q));
    }
    let per_band: Vec<f64> = (0..trace.band.count())
        .map(|b| {
            let series: Vec<f64> = trace.blocks.iter().map(|row| row[b]).collect();
            time_lq(&series, &trace.times, q)
        })
        .collect();
    Ok(weighted_lr(&per_band, trace.band, idx.s, idx.r))
}

/// `‖f‖_{L^q_T(Ḃ^s_{p,r})}`: time norm of the Besov norm.
pub fn lq_besov_norm(trace: &NormTrace, q: f64, idx: BesovIndex) -> Result<f64> {
    trace.check(&idx)?;
    if q.is_nan() || q < 1.0 {
        return Err(MhdError::InvalidExponent(q));
    }
    let series = trace.besov_series(idx.s, idx.r);
    Ok(time_lq(&series, &trace.times, q))
}

/// Two-sided dyadic tail `Σ_{|j| >= j0} 2^{(d/p-1)j} ‖Δ̇_j f‖_{Lᵖ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailSum {
    pub value: f64,
    /// `j0` lies beyond every resolved band; the value 0 certifies nothing.
    pub truncated: bool,
}

pub fn tail_from_blocks(blocks: &[f64], band: BandRange, j0: i32, dim: usize, p: f64) -> TailSum {
    let s = dim as f64 / p - 1.0;
    let reach = band.j_min.abs().max(band.j_max);
    let value = band
        .bands()
        .zip(blocks)
        .filter(|(j, _)| j.abs() >= j0)
        .map(|(j, b)| 2f64.powf(s * j as f64) * b)
        .sum();
    TailSum {
        value,
        truncated: j0 > reach,
    }
}

pub fn tail_sum(f: &SpectralField, j0: i32, p: f64, bank: &FilterBank) -> Result<TailSum> {
    if j0 < 0 {
        return Err(MhdError::Domain(format!("tail index j0 = {j0} must be >= 0")));
    }
    let blocks = block_norms(f, p, bank)?;
    Ok(tail_from_blocks(&blocks, bank.band(), j0, f.grid().dim(), p))
}

/// Least in-band `j0 >= 0` whose tail falls strictly below `threshold`.
pub fn smallest_j0_from_blocks(blocks: &[f64], band: BandRange, threshold: f64, dim: usize, p: f64) -> Result<i32> {
    if !(threshold > 0.0) {
        return Err(MhdError::Domain(format!("threshold {threshold} must be positive")));
    }
    let reach = band.j_min.abs().max(band.j_max);
    (0..=reach)
        .find(|&j0| tail_from_blocks(blocks, band, j0, dim, p).value < threshold)
        .ok_or(MhdError::UnresolvableTail { threshold })
}

pub fn smallest_j0(f: &SpectralField, threshold: f64, p: f64, bank: &FilterBank) -> Result<i32> {
    let blocks = block_norms(f, p, bank)?;
    smallest_j0_from_blocks(&blocks, bank.band(), threshold, f.grid().dim(), p)
}

/// `‖fg‖_{Ḃ^{s1+s2-d/p}_{p,∞}} / (‖f‖_{Ḃ^{s1}_{p,∞}} ‖g‖_{Ḃ^{s2}_{p,1}})` with a dealiased product.
pub fn product_ratio(
    f: &SpectralField,
    g: &SpectralField,
    s1: f64,
    s2: f64,
    p: f64,
    bank: &FilterBank,
) -> Result<f64> {
    let d = f.grid().dim() as f64;
    if s1 > d / p || s2 > d / p {
        return Err(MhdError::Domain(format!("need s1, s2 <= d/p = {}", d / p)));
    }
    if s1 + s2 <= d * (2.0 / p - 1.0).max(0.0) {
        return Err(MhdError::Domain(format!(
            "need s1 + s2 > d max(0, 2/p - 1) = {}",
            d * (2.0 / p - 1.0).max(0.0)
        )));
    }
    let fg = scalar_product(f, g)?;
    let num = besov_norm(&fg, BesovIndex::new(s1 + s2 - d / p, p, f64::INFINITY)?, bank)?;
    let den = besov_norm(f, BesovIndex::new(s1, p, f64::INFINITY)?, bank)?
        * besov_norm(g, BesovIndex::new(s2, p, 1.0)?, bank)?;
    if den == 0.0 {
        return Err(MhdError::ZeroDenominator);
    }
    Ok(num / den)
}
