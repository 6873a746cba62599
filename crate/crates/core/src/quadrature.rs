//! Adaptive Gauss–Kronrod (7/15) quadrature on finite intervals.

use crate::error::{MhdError, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: u32 = 48;

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// `∫_a^b f` to within `max(abs_tol, rel_tol·|I|)`, bisecting the worst panels.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(MhdError::Domain(format!("integration limits [{a}, {b}]")));
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    // stack of (a, b, estimate, error, depth)
    let (v0, e0) = kronrod(&mut f, lo, hi);
    let mut panels = vec![(lo, hi, v0, e0, 0u32)];
    let mut total = v0;
    let mut err = e0;
    while err > abs_tol.max(rel_tol * total.abs()) {
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .expect("nonempty");
        let (pa, pb, pv, pe, depth) = panels.swap_remove(worst);
        if depth >= MAX_DEPTH {
            // cannot refine further; accept what is there
            panels.push((pa, pb, pv, 0.0, depth));
            err -= pe;
            continue;
        }
        let mid = 0.5 * (pa + pb);
        let (lv, le) = kronrod(&mut f, pa, mid);
        let (rv, re) = kronrod(&mut f, mid, pb);
        total += lv + rv - pv;
        err += le + re - pe;
        panels.push((pa, mid, lv, le, depth + 1));
        panels.push((mid, pb, rv, re, depth + 1));
        if !total.is_finite() {
            return Err(MhdError::NonFinite("quadrature".into()));
        }
    }
    // re-sum to shed the drift of the running total
    Ok(sign * panels.iter().map(|p| p.2).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_and_transcendentals() {
        let v = integrate(|x| x.powi(5) - 3.0 * x, 0.0, 2.0, 1e-14, 0.0).unwrap();
        assert!((v - (64.0 / 6.0 - 6.0)).abs() < 1e-13);
        let v = integrate(f64::exp, 0.0, 1.0, 1e-13, 0.0).unwrap();
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-13);
        let v = integrate(|x| 1.0 / x, 1e-6, 1.0, 1e-12, 0.0).unwrap();
        assert!((v - 1e6f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn orientation_and_empty() {
        assert_eq!(integrate(|x| x, 1.0, 1.0, 1e-12, 0.0).unwrap(), 0.0);
        let v = integrate(|x| x, 1.0, 0.0, 1e-12, 0.0).unwrap();
        assert!((v + 0.5).abs() < 1e-15);
    }

    #[test]
    fn sqrt_singularity() {
        let v = integrate(f64::sqrt, 0.0, 1.0, 1e-12, 0.0).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-11);
    }
}
