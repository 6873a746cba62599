//! Explicit lifespan estimate for the Picard scheme and its stability under
//! convergence of the initial data.

use serde::{Serialize, Serializer};

use crate::besov::{besov_norm, block_norms, smallest_j0_from_blocks, tail_from_blocks, weighted_lr, BesovIndex};
use crate::dyadic::{BandRange, FilterBank};
use crate::error::{MhdError, Result};
use crate::fields::{divergence_bound, SpectralField};

/// Writes non-finite values as the strings `"inf"`, `"-inf"`, `"nan"`.
pub fn serialize_f64<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    SmallData,
    LargeData,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateConstants {
    pub c1: f64,
    pub c2: f64,
    pub c: f64,
    /// Branch threshold `min{1/(4C1), c}`.
    pub c_bar: f64,
    pub a: f64,
    pub branch: Branch,
}

/// `c = min{1/12, ln(3/2)/C2, 1/(8C1)}`.
pub fn small_constant(c1: f64, c2: f64) -> f64 {
    (1.0f64 / 12.0).min(1.5f64.ln() / c2).min(1.0 / (8.0 * c1))
}

/// Constants for data with `E0` and `‖u0‖_{Ḃ^{d/p-1}_{p,1}} = u0_norm`.
pub fn derive_constants(c1: f64, c2: f64, e0: f64, u0_norm: f64) -> Result<EstimateConstants> {
    if !(c1.is_finite() && c1 > 0.0 && c2.is_finite() && c2 > 0.0) {
        return Err(MhdError::Domain(format!("constants C1 = {c1}, C2 = {c2} must be positive")));
    }
    if !(e0 >= 0.0 && u0_norm >= 0.0) || !e0.is_finite() || !u0_norm.is_finite() {
        return Err(MhdError::Domain(format!("norms E0 = {e0}, |u0| = {u0_norm}")));
    }
    let c = small_constant(c1, c2);
    let c_bar = (1.0 / (4.0 * c1)).min(c);
    let (branch, a) = if u0_norm <= c_bar {
        (Branch::SmallData, (e0 / (4.0 * c1)).sqrt().min(c))
    } else {
        (Branch::LargeData, (c_bar / (4.0 * c1)).sqrt().min(c))
    };
    debug_assert!(c <= 1.0 / 12.0 && (c2 * c).exp() <= 1.5 * (1.0 + 1e-15) && 4.0 * c * c1 <= 0.5);
    Ok(EstimateConstants { c1, c2, c, c_bar, a, branch })
}

/// `T0 = min{a/(72 C1 E0²), 1/(36 C1 E0)}`.
pub fn t0_formula(a: f64, c1: f64, e0: f64) -> f64 {
    if e0 == 0.0 {
        return f64::INFINITY;
    }
    (a / (72.0 * c1 * e0 * e0)).min(1.0 / (36.0 * c1 * e0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LifespanReport {
    pub e0: f64,
    pub u0_norm: f64,
    pub b0_norm: f64,
    pub constants: EstimateConstants,
    pub branch: Branch,
    pub j0: Option<i32>,
    #[serde(serialize_with = "serialize_f64")]
    pub t0: f64,
    pub t1: Option<f64>,
    pub t2: Option<f64>,
    #[serde(serialize_with = "serialize_f64")]
    pub t: f64,
}

/// The norm-level inputs of the estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct LifespanInputs {
    /// `‖Δ̇_j u0‖_{Lᵖ}` over the band.
    pub u0_blocks: Vec<f64>,
    pub u0_norm: f64,
    pub b0_norm: f64,
    pub band: BandRange,
    pub dim: usize,
    pub p: f64,
}

impl LifespanInputs {
    pub fn measure(u0: &SpectralField, b0: &SpectralField, p: f64, bank: &FilterBank) -> Result<Self> {
        let d = u0.grid().dim() as f64;
        let u0_blocks = block_norms(u0, p, bank)?;
        let u0_norm = weighted_lr(&u0_blocks, bank.band(), d / p - 1.0, 1.0);
        let b0_norm = besov_norm(b0, BesovIndex::critical(u0.grid().dim(), p, 0.0)?, bank)?;
        Ok(Self {
            u0_blocks,
            u0_norm,
            b0_norm,
            band: bank.band(),
            dim: u0.grid().dim(),
            p,
        })
    }

    pub fn e0(&self) -> f64 {
        self.b0_norm + self.u0_norm
    }
}

/// Evaluates the estimate from measured norms; `j0_override` replaces the
/// smallest admissible `j0` on the large-data branch.
pub fn lifespan_from_inputs(inputs: &LifespanInputs, c1: f64, c2: f64, j0_override: Option<i32>) -> Result<LifespanReport> {
    let e0 = inputs.e0();
    let constants = derive_constants(c1, c2, e0, inputs.u0_norm)?;
    let t0 = t0_formula(constants.a, c1, e0);
    let mut report = LifespanReport {
        e0,
        u0_norm: inputs.u0_norm,
        b0_norm: inputs.b0_norm,
        constants,
        branch: constants.branch,
        j0: None,
        t0,
        t1: None,
        t2: None,
        t: t0,
    };
    if constants.branch == Branch::SmallData {
        return Ok(report);
    }
    let quarter = constants.a / 4.0;
    let j0 = match j0_override {
        Some(j) => j,
        None => smallest_j0_from_blocks(&inputs.u0_blocks, inputs.band, quarter, inputs.dim, inputs.p)?,
    };
    let scale = 4f64.powi(j0) * inputs.u0_norm;
    let t1 = quarter / scale;
    let t2 = quarter * quarter / (scale * inputs.u0_norm);
    report.j0 = Some(j0);
    report.t1 = Some(t1);
    report.t2 = Some(t2);
    report.t = t0.min(t1).min(t2);
    Ok(report)
}

pub(crate) fn check_datum(f: &SpectralField, name: &str) -> Result<()> {
    if !f.zero_mean() {
        return Err(MhdError::Domain(format!("{name} must have zero mean")));
    }
    let div = divergence_bound(f)?;
    if div > 1e-8 * (1.0 + f.spectral_l2()) {
        return Err(MhdError::NotDivergenceFree(div));
    }
    Ok(())
}

pub fn lifespan_estimate(
    u0: &SpectralField,
    b0: &SpectralField,
    c1: f64,
    c2: f64,
    p: f64,
    bank: &FilterBank,
) -> Result<LifespanReport> {
    check_datum(u0, "u0")?;
    check_datum(b0, "b0")?;
    let inputs = LifespanInputs::measure(u0, b0, p, bank)?;
    lifespan_from_inputs(&inputs, c1, c2, None)
}

/// Where a `j0ⁿ` came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum J0Source {
    /// Before the sequence is within `ε = a/8` of the limit: least admissible `j0` of the datum itself.
    Direct,
    /// Staircase level `m`: the limit's least `j` with tail `< a/4 - ε/m`.
    Staircase { m: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct J0Entry {
    pub n: usize,
    pub j0: i32,
    pub source: J0Source,
    /// `‖u0ⁿ - u0‖_{Ḃ^{d/p-1}_{p,1}}`
    pub distance: f64,
    /// Tail of `u0ⁿ` from `j0ⁿ`; always `< a/4`.
    pub tail: f64,
}

/// The staircase assignment of `j0ⁿ` for a sequence converging to `limit`.
///
/// `N_{ε/m}` is the first index from which every later distance is `<= ε/m`,
/// and `j0ⁿ = j̄^m` for the largest `m` with `N_{ε/m} <= n`.
pub fn j0n_sequence(data: &[SpectralField], limit: &SpectralField, a: f64, p: f64, bank: &FilterBank) -> Result<Vec<J0Entry>> {
    if !(a.is_finite() && a > 0.0) {
        return Err(MhdError::Domain(format!("a = {a}")));
    }
    if data.is_empty() {
        return Err(MhdError::EmptyTrace);
    }
    let dim = limit.grid().dim();
    let band = bank.band();
    let idx = BesovIndex::critical(dim, p, -1.0)?;
    let eps = a / 8.0;
    let quarter = a / 4.0;

    let limit_blocks = block_norms(limit, p, bank)?;
    let j0 = smallest_j0_from_blocks(&limit_blocks, band, quarter, dim, p)?;
    let limit_tail = tail_from_blocks(&limit_blocks, band, j0, dim, p).value;
    // j̄^m = j0 for every m >= m_star
    let m_star = (eps / (quarter - limit_tail)).floor() as u64 + 1;

    let distances = data
        .iter()
        .map(|f| besov_norm(&f.sub(limit)?, idx, bank))
        .collect::<Result<Vec<_>>>()?;
    if *distances.last().unwrap() > eps {
        return Err(MhdError::NotConverging(format!(
            "last distance {} exceeds a/8 = {eps}",
            distances.last().unwrap()
        )));
    }
    // suffix maximum: N_δ = first n with suffix_max[n] <= δ
    let mut suffix_max = distances.clone();
    for i in (0..suffix_max.len().saturating_sub(1)).rev() {
        suffix_max[i] = suffix_max[i].max(suffix_max[i + 1]);
    }
    let level_for = |n: usize| -> Option<u64> {
        let d = suffix_max[n];
        if d > eps {
            return None;
        }
        // largest m with ε/m >= d, capped where the staircase has settled
        if d == 0.0 {
            return Some(m_star);
        }
        Some(((eps / d).floor() as u64).clamp(1, m_star))
    };

    let mut bar_cache: Vec<Option<i32>> = vec![None; m_star as usize + 1];
    let mut bar = |m: u64| -> Result<i32> {
        if m >= m_star {
            return Ok(j0);
        }
        if let Some(v) = bar_cache[m as usize] {
            return Ok(v);
        }
        let v = smallest_j0_from_blocks(&limit_blocks, band, quarter - eps / m as f64, dim, p)?;
        bar_cache[m as usize] = Some(v);
        Ok(v)
    };

    let mut out = Vec::with_capacity(data.len());
    for (n, f) in data.iter().enumerate() {
        let blocks = block_norms(f, p, bank)?;
        let (j, source) = match level_for(n) {
            Some(m) => (bar(m)?, J0Source::Staircase { m }),
            None => (smallest_j0_from_blocks(&blocks, band, quarter, dim, p)?, J0Source::Direct),
        };
        let tail = tail_from_blocks(&blocks, band, j, dim, p).value;
        out.push(J0Entry {
            n,
            j0: j,
            source,
            distance: distances[n],
            tail,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub branch: Branch,
    pub j0: Option<i32>,
    #[serde(serialize_with = "serialize_f64")]
    pub t: f64,
    #[serde(serialize_with = "serialize_f64")]
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub limit: LifespanReport,
    pub rows: Vec<ConvergenceRow>,
}

/// `Tⁿ` for each datum with `j0ⁿ` taken from [`j0n_sequence`], and `|Tⁿ - T|`.
pub fn lifespan_convergence(
    u_seq: &[SpectralField],
    b_seq: &[SpectralField],
    limit: (&SpectralField, &SpectralField),
    c1: f64,
    c2: f64,
    p: f64,
    bank: &FilterBank,
) -> Result<ConvergenceTable> {
    if u_seq.len() != b_seq.len() {
        return Err(MhdError::Domain(format!(
            "{} velocity data but {} magnetic data",
            u_seq.len(),
            b_seq.len()
        )));
    }
    let limit_report = lifespan_estimate(limit.0, limit.1, c1, c2, p, bank)?;
    // on the large-data branch `a` does not depend on the datum
    let c = small_constant(c1, c2);
    let c_bar = (1.0 / (4.0 * c1)).min(c);
    let a_large = (c_bar / (4.0 * c1)).sqrt().min(c);
    let j0s = j0n_sequence(u_seq, limit.0, a_large, p, bank)?;
    let mut rows = Vec::with_capacity(u_seq.len());
    for ((u, b), entry) in u_seq.iter().zip(b_seq).zip(&j0s) {
        check_datum(u, "u0")?;
        check_datum(b, "b0")?;
        let inputs = LifespanInputs::measure(u, b, p, bank)?;
        let report = lifespan_from_inputs(&inputs, c1, c2, Some(entry.j0))?;
        let gap = if report.t == limit_report.t {
            0.0
        } else {
            (report.t - limit_report.t).abs()
        };
        rows.push(ConvergenceRow {
            n: entry.n,
            branch: report.branch,
            j0: report.j0,
            t: report.t,
            gap,
        });
    }
    Ok(ConvergenceTable {
        limit: limit_report,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::sample_divergence_free;
    use crate::grid::Grid;

    fn bank() -> FilterBank {
        FilterBank::new(&Grid::periodic(2, 64).unwrap()).unwrap()
    }

    #[test]
    fn constants_unit() {
        let k = derive_constants(1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(k.c, 1.0 / 12.0);
        assert_eq!(k.c_bar, 1.0 / 12.0);
        assert_eq!(k.branch, Branch::LargeData);
        assert_eq!(k.a, (1.0f64 / 48.0).sqrt().min(1.0 / 12.0));
        let big = derive_constants(1.0, 1e6, 1.0, 1.0).unwrap();
        assert!(big.c < 1e-6);
        assert!(derive_constants(0.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn t0_arithmetic() {
        let v = t0_formula(1.0 / 12.0, 1.0, 1.0);
        assert_eq!(v, 1.0 / 864.0);
        assert!(t0_formula(0.1, 1.0, 0.0).is_infinite());
    }

    #[test]
    fn zero_datum_is_immortal() {
        let b = bank();
        let z = SpectralField::zeros(b.grid(), 2, true);
        let r = lifespan_estimate(&z, &z, 1.0, 1.0, 2.0, &b).unwrap();
        assert_eq!(r.branch, Branch::SmallData);
        assert!(r.t.is_infinite());
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"t\":\"inf\""));
    }

    #[test]
    fn small_datum_uses_t0() {
        let b = bank();
        let f = sample_divergence_free(b.grid(), 1, 2.0).unwrap();
        let idx = BesovIndex::critical(2, 2.0, -1.0).unwrap();
        let u0 = f.scaled(1e-3 / besov_norm(&f, idx, &b).unwrap());
        let z = SpectralField::zeros(b.grid(), 2, true);
        let r = lifespan_estimate(&u0, &z, 1.0, 1.0, 2.0, &b).unwrap();
        assert_eq!(r.branch, Branch::SmallData);
        assert_eq!(r.t, r.t0);
        assert_eq!(r.j0, None);
    }

    #[test]
    fn large_datum_uses_min() {
        let b = bank();
        let u0 = sample_divergence_free(b.grid(), 2, 3.0).unwrap().scaled(1.0);
        let idx = BesovIndex::critical(2, 2.0, -1.0).unwrap();
        let u0 = u0.scaled(0.5 / besov_norm(&u0, idx, &b).unwrap());
        let z = SpectralField::zeros(b.grid(), 2, true);
        match lifespan_estimate(&u0, &z, 1.0, 1.0, 2.0, &b) {
            Ok(r) => {
                assert_eq!(r.branch, Branch::LargeData);
                let (t1, t2) = (r.t1.unwrap(), r.t2.unwrap());
                assert_eq!(r.t, r.t0.min(t1).min(t2));
            }
            Err(MhdError::UnresolvableTail { .. }) => {}
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn rejects_compressible_datum() {
        let b = bank();
        let g = b.grid();
        let u0 = SpectralField::from_fn(g, 2, |x, c| if c == 0 { x[0].sin() } else { 0.0 }).with_zero_mean();
        let z = SpectralField::zeros(g, 2, true);
        assert!(matches!(
            lifespan_estimate(&u0, &z, 1.0, 1.0, 2.0, &b),
            Err(MhdError::NotDivergenceFree(_))
        ));
    }

    #[test]
    fn constant_sequence_settles_on_limit_j0() {
        let b = bank();
        let u0 = sample_divergence_free(b.grid(), 3, 2.5).unwrap();
        let idx = BesovIndex::critical(2, 2.0, -1.0).unwrap();
        let u0 = u0.scaled(0.06 / besov_norm(&u0, idx, &b).unwrap());
        let seq = vec![u0.clone(); 4];
        let a = 0.2;
        let entries = j0n_sequence(&seq, &u0, a, 2.0, &b).unwrap();
        let j0 = crate::besov::smallest_j0(&u0, a / 4.0, 2.0, &b).unwrap();
        for e in entries {
            assert_eq!(e.j0, j0);
            assert!(e.tail < a / 4.0);
        }
    }
}
