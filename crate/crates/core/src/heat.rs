//! Heat semigroup, forced heat equation `u_t - Δu = G`, and the free-evolution
//! norms that enter the lifespan estimate.

use serde::Serialize;

use crate::besov::{lq_besov_norm, BesovIndex, NormTrace};
use crate::dyadic::FilterBank;
use crate::error::{MhdError, Result};
use crate::fields::{lp_norm, SpectralField};
use crate::grid::Grid;
use crate::quadrature::integrate;

fn ksq_table(grid: &Grid) -> Vec<f64> {
    (0..grid.size())
        .map(|i| {
            let k = grid.wavevector_norm(i);
            k * k
        })
        .collect()
}

/// `e^{tΔ} f`: multiplies every coefficient by `exp(-t|k|²)`.
pub fn heat_propagate(f: &SpectralField, t: f64) -> Result<SpectralField> {
    if t.is_nan() || t < 0.0 {
        return Err(MhdError::NegativeTime(t));
    }
    if t == 0.0 {
        return Ok(f.clone());
    }
    let table: Vec<f64> = ksq_table(f.grid()).iter().map(|w| (-t * w).exp()).collect();
    Ok(f.apply_table(&table))
}

/// Uniform nodes `0, dt, .., T`; `dt` must divide `T`.
pub fn uniform_nodes(t_end: f64, dt: f64) -> Result<Vec<f64>> {
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(MhdError::InvalidTimeGrid(format!("horizon T = {t_end}")));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(MhdError::InvalidTimeGrid(format!("step dt = {dt}")));
    }
    if dt > t_end && t_end > 0.0 {
        return Err(MhdError::InvalidTimeGrid(format!("dt = {dt} exceeds T = {t_end}")));
    }
    let steps = (t_end / dt).round();
    if (steps * dt - t_end).abs() > 1e-9 * t_end.max(dt) {
        return Err(MhdError::InvalidTimeGrid(format!("dt = {dt} does not divide T = {t_end}")));
    }
    let steps = steps as usize;
    Ok((0..=steps)
        .map(|i| if i == steps { t_end } else { i as f64 * dt })
        .collect())
}

/// `φ1(z) = (1 - e^{-z})/z`.
fn phi1(z: f64) -> f64 {
    if z == 0.0 {
        1.0
    } else {
        -(-z).exp_m1() / z
    }
}

/// `ψ2(z) = (1 - e^{-z}(1 + z))/z²`, by its series near zero.
fn psi2(z: f64) -> f64 {
    if z < 0.5 {
        // Σ (-1)^m (m+1)/(m+2)! z^m
        let mut term = 0.5; // m = 0: 1/2!
        let mut fact = 2.0;
        let mut acc = 0.0;
        let mut zm = 1.0;
        for m in 0..25u32 {
            if m > 0 {
                fact *= (m + 2) as f64;
                zm *= -z;
                term = (m + 1) as f64 / fact;
            }
            acc += term * zm;
        }
        acc
    } else {
        (1.0 - (-z).exp() * (1.0 + z)) / (z * z)
    }
}

/// One exponential-integrator step over `h` with forcing linear in time:
/// `u ← e^{-h|k|²}u + h[ψ2 G_n + (φ1 - ψ2) G_{n+1}]`.
#[derive(Debug, Clone)]
pub struct DuhamelStepper {
    h: f64,
    decay: Vec<f64>,
    w_start: Vec<f64>,
    w_end: Vec<f64>,
}

impl DuhamelStepper {
    pub fn new(grid: &Grid, h: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(MhdError::InvalidTimeGrid(format!("step {h}")));
        }
        let ksq = ksq_table(grid);
        let mut decay = Vec::with_capacity(ksq.len());
        let mut w_start = Vec::with_capacity(ksq.len());
        let mut w_end = Vec::with_capacity(ksq.len());
        for w in ksq {
            let z = h * w;
            let (p1, p2) = (phi1(z), psi2(z));
            decay.push((-z).exp());
            w_start.push(h * p2);
            w_end.push(h * (p1 - p2));
        }
        Ok(Self { h, decay, w_start, w_end })
    }

    pub fn step_size(&self) -> f64 {
        self.h
    }

    pub fn step(&self, u: &SpectralField, g_start: &SpectralField, g_end: &SpectralField) -> Result<SpectralField> {
        check_forcing(u, g_start)?;
        check_forcing(u, g_end)?;
        let n = u.grid().size();
        let mut out = u.clone();
        out.set_zero_mean(u.zero_mean() && g_start.zero_mean() && g_end.zero_mean());
        for c in 0..u.components() {
            let (u_c, a, b) = (u.component(c), g_start.component(c), g_end.component(c));
            let o = out.component_mut(c);
            for i in 0..n {
                o[i] = u_c[i] * self.decay[i] + a[i] * self.w_start[i] + b[i] * self.w_end[i];
            }
        }
        if out.zero_mean() {
            for c in 0..out.components() {
                out.component_mut(c)[0] = num_complex::Complex64::new(0.0, 0.0);
            }
        }
        Ok(out)
    }
}

fn check_forcing(u: &SpectralField, g: &SpectralField) -> Result<()> {
    if u.grid() != g.grid() {
        return Err(MhdError::GridMismatch);
    }
    if u.components() != g.components() {
        return Err(MhdError::ComponentMismatch {
            expected: u.components(),
            found: g.components(),
        });
    }
    if !g.is_finite() {
        return Err(MhdError::NonFinite("forcing".into()));
    }
    Ok(())
}

/// Snapshots of a solution on a uniform time grid.
#[derive(Debug, Clone)]
pub struct HeatTrajectory {
    pub times: Vec<f64>,
    pub dt: f64,
    pub snapshots: Vec<SpectralField>,
}

impl HeatTrajectory {
    pub fn final_state(&self) -> &SpectralField {
        self.snapshots.last().expect("trajectory holds the initial node")
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("trajectory holds the initial node")
    }

    pub fn norm_trace(&self, p: f64, bank: &FilterBank) -> Result<NormTrace> {
        NormTrace::from_fields(self.times.clone(), &self.snapshots, p, bank)
    }
}

/// Solves `u_t - Δu = G`, `u(0) = u0` on `[0, T]` with step `dt`.
pub fn duhamel_solve<F>(u0: &SpectralField, mut forcing: F, t_end: f64, dt: f64) -> Result<HeatTrajectory>
where
    F: FnMut(f64) -> SpectralField,
{
    let times = uniform_nodes(t_end, dt)?;
    let mut snapshots = Vec::with_capacity(times.len());
    snapshots.push(u0.clone());
    if times.len() == 1 {
        return Ok(HeatTrajectory { times, dt, snapshots });
    }
    let stepper = DuhamelStepper::new(u0.grid(), times[1] - times[0])?;
    let mut g_prev = forcing(times[0]);
    for &t in &times[1..] {
        let g_next = forcing(t);
        let next = stepper.step(snapshots.last().unwrap(), &g_prev, &g_next)?;
        snapshots.push(next);
        g_prev = g_next;
    }
    Ok(HeatTrajectory { times, dt, snapshots })
}

/// As [`duhamel_solve`] with the forcing given at every node.
pub fn duhamel_from_nodes(u0: &SpectralField, forcing: &[SpectralField], t_end: f64, dt: f64) -> Result<HeatTrajectory> {
    let times = uniform_nodes(t_end, dt)?;
    if forcing.len() != times.len() {
        return Err(MhdError::InvalidTimeGrid(format!(
            "{} forcing nodes for {} time nodes",
            forcing.len(),
            times.len()
        )));
    }
    let mut i = 0;
    duhamel_solve(
        u0,
        |_| {
            i += 1;
            forcing[i - 1].clone()
        },
        t_end,
        dt,
    )
}

/// `‖u‖_{L¹_T Ḃ^{s+2}_{p,1}} / (‖u0‖_{Ḃ^s_{p,1}} + ‖G‖_{L¹_T Ḃ^s_{p,1}})` for a computed trajectory.
pub fn smoothing_ratio(
    traj: &HeatTrajectory,
    forcing: &[SpectralField],
    s: f64,
    p: f64,
    bank: &FilterBank,
) -> Result<f64> {
    let u_trace = traj.norm_trace(p, bank)?;
    let g_trace = NormTrace::from_fields(traj.times.clone(), forcing, p, bank)?;
    let lhs = lq_besov_norm(&u_trace, 1.0, BesovIndex::new(s + 2.0, p, 1.0)?)?;
    let u0 = crate::besov::besov_norm(&traj.snapshots[0], BesovIndex::new(s, p, 1.0)?, bank)?;
    let g = lq_besov_norm(&g_trace, 1.0, BesovIndex::new(s, p, 1.0)?)?;
    if u0 + g == 0.0 {
        return Err(MhdError::ZeroDenominator);
    }
    Ok(lhs / (u0 + g))
}

/// `‖e^{tΔ}u0‖` in `L¹_T Ḃ^{d/p+1}_{p,1}` and `L²_T Ḃ^{d/p}_{p,1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FreeEvolution {
    pub l1: f64,
    pub l2: f64,
}

impl FreeEvolution {
    /// The `A_T` norm: sum of both pieces.
    pub fn total(&self) -> f64 {
        self.l1 + self.l2
    }
}

/// Per band, the `(|k|², φ_j²|û|²)` pairs with equal `|k|²` merged.
fn band_spectra(u0: &SpectralField, bank: &FilterBank) -> Result<Vec<Vec<(f64, f64)>>> {
    let ksq = ksq_table(u0.grid());
    let n = u0.grid().size();
    bank.band()
        .bands()
        .map(|j| {
            let table = bank.multiplier(j)?;
            let mut pairs: Vec<(f64, f64)> = Vec::new();
            for i in 0..n {
                if table[i] == 0.0 {
                    continue;
                }
                let mass: f64 = (0..u0.components()).map(|c| u0.component(c)[i].norm_sqr()).sum();
                if mass > 0.0 {
                    pairs.push((ksq[i], table[i] * table[i] * mass));
                }
            }
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut merged: Vec<(f64, f64)> = Vec::new();
            for (w, m) in pairs {
                match merged.last_mut() {
                    Some(last) if (last.0 - w).abs() <= 1e-12 * w => last.1 += m,
                    _ => merged.push((w, m)),
                }
            }
            Ok(merged)
        })
        .collect()
}

/// Free-evolution norms with the time integrals done by adaptive quadrature of
/// the exact block norms (closed-form per mode for `p = 2`).
pub fn free_evolution_at(u0: &SpectralField, t_end: f64, p: f64, bank: &FilterBank) -> Result<FreeEvolution> {
    if t_end.is_nan() || t_end < 0.0 {
        return Err(MhdError::NegativeTime(t_end));
    }
    if !t_end.is_finite() {
        return Err(MhdError::InvalidTimeGrid("infinite horizon".into()));
    }
    if u0.grid() != bank.grid() {
        return Err(MhdError::GridMismatch);
    }
    if t_end == 0.0 {
        return Ok(FreeEvolution { l1: 0.0, l2: 0.0 });
    }
    let d = u0.grid().dim() as f64;
    let weights_l1: Vec<f64> = bank.band().bands().map(|j| 2f64.powf((d / p + 1.0) * j as f64)).collect();
    let weights_l2: Vec<f64> = bank.band().bands().map(|j| 2f64.powf(d / p * j as f64)).collect();

    let block_at: Box<dyn Fn(f64) -> Vec<f64>> = if p == 2.0 {
        let spectra = band_spectra(u0, bank)?;
        Box::new(move |t: f64| {
            spectra
                .iter()
                .map(|pairs| pairs.iter().map(|(w, m)| m * (-2.0 * t * w).exp()).sum::<f64>().sqrt())
                .collect()
        })
    } else {
        let blocks = bank
            .band()
            .bands()
            .map(|j| bank.lp_block(u0, j))
            .collect::<Result<Vec<_>>>()?;
        Box::new(move |t: f64| {
            blocks
                .iter()
                .map(|b| lp_norm(&heat_propagate(b, t).expect("t >= 0"), p).expect("valid p"))
                .collect()
        })
    };
    let (rel, abs) = if p == 2.0 { (1e-13, 1e-300) } else { (1e-9, 1e-300) };

    let mut l1 = 0.0;
    for (b, w) in weights_l1.iter().enumerate() {
        if *w == 0.0 {
            continue;
        }
        let v = integrate(|t| block_at(t)[b], 0.0, t_end, rel, abs)?;
        l1 += w * v;
    }
    let sq = integrate(
        |t| {
            let s: f64 = block_at(t).iter().zip(&weights_l2).map(|(v, w)| v * w).sum();
            s * s
        },
        0.0,
        t_end,
        rel,
        abs,
    )?;
    Ok(FreeEvolution { l1, l2: sq.sqrt() })
}
