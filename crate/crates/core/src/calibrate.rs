//! Empirical estimates of the smoothing constant `C1` and transport constant
//! `C2` over a seeded corpus, plus the shared corpus generator.

use rayon::prelude::*;
use serde::Serialize;

use crate::besov::{besov_norm, lq_besov_norm, BesovIndex, NormTrace};
use crate::dyadic::FilterBank;
use crate::error::{MhdError, Result};
use crate::fields::{sample_divergence_free, SpectralField};
use crate::heat::duhamel_solve;
use crate::lifespan::serialize_f64;
use crate::solver::transport_march;

/// A seeded divergence-free sample; `norm` rescales it in `Ḃ^{d/p + shift}_{p,1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorpusEntry {
    pub seed: u64,
    pub decay: f64,
    /// Target norm and the shift of the regularity index relative to `d/p`.
    pub norm: f64,
    pub shift: f64,
}

impl CorpusEntry {
    pub fn realize(&self, p: f64, bank: &FilterBank) -> Result<SpectralField> {
        let f = sample_divergence_free(bank.grid(), self.seed, self.decay)?;
        let idx = BesovIndex::critical(bank.grid().dim(), p, self.shift)?;
        let n = besov_norm(&f, idx, bank)?;
        if n == 0.0 || self.norm == 0.0 {
            return Ok(f.scaled(0.0));
        }
        Ok(f.scaled(self.norm / n))
    }
}

/// The standard corpus: `count` seeds from `first_seed`, decay exponent 2.
pub fn standard_corpus(first_seed: u64, count: usize, norm: f64, shift: f64) -> Vec<CorpusEntry> {
    (0..count as u64)
        .map(|i| CorpusEntry {
            seed: first_seed + i,
            decay: 2.0,
            norm,
            shift,
        })
        .collect()
}

/// Small-data pairs `(u0, b0)` with `‖u0‖_{Ḃ^{d/p-1}} = ‖b0‖_{Ḃ^{d/p}} = size`.
pub fn small_data_pairs(first_seed: u64, count: usize, size: f64, p: f64, bank: &FilterBank) -> Result<Vec<(SpectralField, SpectralField)>> {
    (0..count as u64)
        .map(|i| {
            let seed = first_seed + 2 * i;
            let u = CorpusEntry { seed, decay: 3.0, norm: size, shift: -1.0 }.realize(p, bank)?;
            let b = CorpusEntry { seed: seed + 1, decay: 3.0, norm: size, shift: 0.0 }.realize(p, bank)?;
            Ok((u, b))
        })
        .collect()
}

/// `(‖u‖_{L^∞_T Ḃ^s} + ‖u‖_{L²_T Ḃ^{s+1}} + ‖u‖_{L¹_T Ḃ^{s+2}}) / (‖u0‖_{Ḃ^s} + ‖G‖_{L¹_T Ḃ^s})`
/// for `u_t - Δu = G` with `G` constant in time; `None` when the data vanish.
pub fn smoothing_constant_ratio(
    u0: &SpectralField,
    forcing: &SpectralField,
    s: f64,
    p: f64,
    t_end: f64,
    dt: f64,
    bank: &FilterBank,
) -> Result<Option<f64>> {
    let traj = duhamel_solve(u0, |_| forcing.clone(), t_end, dt)?;
    let trace = traj.norm_trace(p, bank)?;
    let idx = |shift: f64| BesovIndex::new(s + shift, p, 1.0);
    let lhs = lq_besov_norm(&trace, f64::INFINITY, idx(0.0)?)?
        + lq_besov_norm(&trace, 2.0, idx(1.0)?)?
        + lq_besov_norm(&trace, 1.0, idx(2.0)?)?;
    let g_trace = NormTrace::from_fields(traj.times.clone(), &vec![forcing.clone(); traj.times.len()], p, bank)?;
    let rhs = besov_norm(u0, idx(0.0)?, bank)? + lq_besov_norm(&g_trace, 1.0, idx(0.0)?)?;
    Ok(if rhs == 0.0 { None } else { Some(lhs / rhs) })
}

/// Least `C ≥ 0` with `‖f(t)‖ ≤ e^{C V(t)}(‖f0‖ + ∫_0^t e^{-C V}‖g‖)` at every node.
pub fn minimal_transport_constant(f_norm: &[f64], g_norm: &[f64], v: &[f64], times: &[f64]) -> f64 {
    let worst = |c: f64| {
        let mut integral = 0.0;
        let mut m: f64 = 0.0;
        for i in 0..times.len() {
            if i > 0 {
                let h = times[i] - times[i - 1];
                integral += 0.5 * h * ((-c * v[i]).exp() * g_norm[i] + (-c * v[i - 1]).exp() * g_norm[i - 1]);
            }
            if f_norm[i] > 0.0 {
                m = m.max(f_norm[i] / ((c * v[i]).exp() * (f_norm[0] + integral)));
            }
        }
        m
    };
    if worst(0.0) <= 1.0 {
        return 0.0;
    }
    let mut hi = 1.0;
    while worst(hi) > 1.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return f64::INFINITY;
        }
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if worst(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Transport of `b0` by the frozen velocity `u` with no source; returns the
/// least admissible transport constant.
pub fn transport_constant_ratio(
    u: &SpectralField,
    b0: &SpectralField,
    p: f64,
    t_end: f64,
    dt: f64,
    bank: &FilterBank,
) -> Result<Option<f64>> {
    let steps = (t_end / dt).ceil().max(1.0) as usize;
    let times: Vec<f64> = (0..=steps).map(|i| t_end * i as f64 / steps as f64).collect();
    let us = vec![u.clone(); times.len()];
    let zero = SpectralField::zeros(b0.grid(), b0.components(), true);
    let gs = vec![zero; times.len()];
    let traj = transport_march(b0, &us, &gs, &times, 0.5)?;
    let crit = BesovIndex::critical(bank.grid().dim(), p, 0.0)?;
    let f_norm: Vec<f64> = traj.par_iter().map(|b| besov_norm(b, crit, bank)).collect::<Result<_>>()?;
    if f_norm[0] == 0.0 {
        return Ok(None);
    }
    let grad = besov_norm(&u.gradient(), crit, bank)?;
    let v: Vec<f64> = times.iter().map(|t| t * grad).collect();
    let g = vec![0.0; times.len()];
    Ok(Some(minimal_transport_constant(&f_norm, &g, &v, &times)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationReport {
    pub c1: f64,
    pub c2: f64,
    pub c1_measured: Option<f64>,
    #[serde(serialize_with = "serialize_opt")]
    pub c2_measured: Option<f64>,
    pub headroom: f64,
    pub floor: [f64; 2],
    pub c1_ratios: Vec<Option<f64>>,
    pub c2_ratios: Vec<Option<f64>>,
    pub warnings: Vec<String>,
}

fn serialize_opt<S: serde::Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(x) => serialize_f64(x, s),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationSettings {
    pub p: f64,
    pub t_end: f64,
    pub dt: f64,
    pub headroom: f64,
    pub floor: [f64; 2],
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        Self {
            p: 2.0,
            t_end: 0.5,
            dt: 0.01,
            headroom: 1.1,
            floor: [1.0, 1.0],
        }
    }
}

/// Suggested `(C1, C2)`: the worst measured ratios times the headroom, never
/// below the floor. Each entry supplies the datum; the forcing and magnetic
/// field use the next two seeds.
pub fn calibrate_constants(corpus: &[CorpusEntry], settings: &CalibrationSettings, bank: &FilterBank) -> Result<CalibrationReport> {
    if corpus.is_empty() {
        return Err(MhdError::Config("calibration corpus is empty".into()));
    }
    let p = settings.p;
    let d = bank.grid().dim() as f64;
    let rows: Vec<(Option<f64>, Option<f64>)> = corpus
        .par_iter()
        .map(|e| {
            let u0 = e.realize(p, bank)?;
            let forcing = CorpusEntry { seed: e.seed.wrapping_add(1000), ..*e }.realize(p, bank)?;
            let b0 = CorpusEntry { seed: e.seed.wrapping_add(2000), shift: 0.0, ..*e }.realize(p, bank)?;
            let r1 = smoothing_constant_ratio(&u0, &forcing, d / p - 1.0, p, settings.t_end, settings.dt, bank)?;
            let r2 = if u0.spectral_l2() == 0.0 {
                None
            } else {
                transport_constant_ratio(&u0, &b0, p, settings.t_end, settings.dt, bank)?
            };
            Ok((r1, r2))
        })
        .collect::<Result<_>>()?;
    let c1_ratios: Vec<Option<f64>> = rows.iter().map(|r| r.0).collect();
    let c2_ratios: Vec<Option<f64>> = rows.iter().map(|r| r.1).collect();
    let worst = |v: &[Option<f64>]| v.iter().flatten().cloned().fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))));
    let c1_measured = worst(&c1_ratios);
    let c2_measured = worst(&c2_ratios);
    let mut warnings = Vec::new();
    if c1_measured.is_none() {
        warnings.push("no corpus entry produced a smoothing ratio; C1 falls back to the floor".to_string());
    }
    if c2_measured.is_none() {
        warnings.push("no corpus entry produced a transport ratio; C2 falls back to the floor".to_string());
    }
    let pick = |m: Option<f64>, floor: f64| m.map_or(floor, |x| (x * settings.headroom).max(floor));
    Ok(CalibrationReport {
        c1: pick(c1_measured, settings.floor[0]),
        c2: pick(c2_measured, settings.floor[1]),
        c1_measured,
        c2_measured,
        headroom: settings.headroom,
        floor: settings.floor,
        c1_ratios,
        c2_ratios,
        warnings,
    })
}
