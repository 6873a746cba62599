use std::sync::OnceLock;

use mhd_core::besov::{besov_norm, BesovIndex};
use mhd_core::calibrate::{calibrate_constants, CalibrationSettings, CorpusEntry};
use mhd_core::dyadic::FilterBank;
use mhd_core::fields::{sample_divergence_free, SpectralField};
use mhd_core::heat::heat_propagate;
use mhd_core::lifespan::{lifespan_estimate, lifespan_from_inputs, LifespanInputs};
use mhd_core::osgood::{inverse_bound, log_display_bound, OsgoodModulus};
use mhd_core::snapshot::{read_fields, write_fields};
use mhd_core::Grid;
use proptest::prelude::*;

fn bank() -> &'static FilterBank {
    static BANK: OnceLock<FilterBank> = OnceLock::new();
    BANK.get_or_init(|| FilterBank::new(&Grid::periodic(2, 32).unwrap()).unwrap())
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn besov_norm_is_homogeneous(seed in 0u64..10_000, lambda in -50.0f64..50.0, s in -1.5f64..2.0, r in 1.0f64..4.0) {
        let f = sample_divergence_free(bank().grid(), seed, 2.0).unwrap();
        let idx = BesovIndex::new(s, 2.0, r).unwrap();
        let n = besov_norm(&f, idx, bank()).unwrap();
        let m = besov_norm(&f.scaled(lambda), idx, bank()).unwrap();
        prop_assert!(rel_close(m, lambda.abs() * n, 1e-12));
    }

    #[test]
    fn heat_flow_dissipates(seed in 0u64..10_000, t1 in 0.0f64..0.5, dt in 0.0f64..0.5) {
        let f = sample_divergence_free(bank().grid(), seed, 1.0).unwrap();
        let a = heat_propagate(&f, t1).unwrap();
        let b = heat_propagate(&f, t1 + dt).unwrap();
        prop_assert!(b.spectral_l2() <= a.spectral_l2() * (1.0 + 1e-14));
        prop_assert!(a.spectral_l2() <= f.spectral_l2() * (1.0 + 1e-14));
        // semigroup
        let c = heat_propagate(&a, dt).unwrap();
        prop_assert!(c.sub(&b).unwrap().spectral_l2() <= 1e-13 * f.spectral_l2());
    }

    #[test]
    fn osgood_bounds_are_monotone(rho in 1e-4f64..0.3, g1 in 0.0f64..1.0, dg in 0.0f64..1.0, c in 0.5f64..5.0) {
        let m = OsgoodModulus::logarithmic(c, 1.0).unwrap();
        let lo = inverse_bound(rho, g1, &m).unwrap();
        let hi = inverse_bound(rho, g1 + dg, &m).unwrap();
        prop_assert!(hi >= lo * (1.0 - 1e-12));
        prop_assert!(lo >= rho * (1.0 - 1e-12));
        let bigger = inverse_bound(rho * 1.5, g1, &m).unwrap();
        prop_assert!(bigger >= lo * (1.0 - 1e-12));
        if let (Ok(a), Ok(b)) = (log_display_bound(rho, g1, c), log_display_bound(rho, g1 + dg, c)) {
            prop_assert!(b >= a * (1.0 - 1e-12));
        }
    }

    #[test]
    fn larger_data_live_shorter(seed in 0u64..1000, size in 0.001f64..0.5, lambda in 1.0f64..4.0) {
        let u = CorpusEntry { seed, decay: 3.0, norm: size, shift: -1.0 }.realize(2.0, bank()).unwrap();
        let b = CorpusEntry { seed: seed + 1, decay: 3.0, norm: size, shift: 0.0 }.realize(2.0, bank()).unwrap();
        let small = lifespan_estimate(&u, &b, 1.0, 1.0, 2.0, bank());
        let large = lifespan_estimate(&u.scaled(lambda), &b.scaled(lambda), 1.0, 1.0, 2.0, bank());
        if let (Ok(s), Ok(l)) = (small, large) {
            prop_assert!(l.t <= s.t);
        }
    }

    #[test]
    fn small_branch_depends_only_on_e0(split in 0.0f64..1.0, e0 in 1e-4f64..0.08) {
        let band = bank().band();
        let make = |frac: f64| LifespanInputs {
            u0_blocks: vec![0.0; band.count()],
            u0_norm: frac * e0,
            b0_norm: e0 - frac * e0,
            band,
            dim: 2,
            p: 2.0,
        };
        let (x, y) = (make(split), make(0.5));
        prop_assume!(x.e0() == y.e0());
        let a = lifespan_from_inputs(&x, 1.0, 1.0, None).unwrap();
        let b = lifespan_from_inputs(&y, 1.0, 1.0, None).unwrap();
        prop_assert_eq!(a.t, b.t);
    }

    #[test]
    fn snapshot_round_trip(seed in any::<u64>(), decay in 0.0f64..4.0) {
        let u = sample_divergence_free(bank().grid(), seed, decay).unwrap();
        let mut buf = Vec::new();
        write_fields(&mut buf, &[&u]).unwrap();
        let back = read_fields(buf.as_slice()).unwrap();
        prop_assert_eq!(&back[0], &u);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn calibration_grows_with_corpus(first in 0u64..500, extra in 1usize..3) {
        let settings = CalibrationSettings { t_end: 0.1, dt: 0.01, ..Default::default() };
        let entry = |s: u64| CorpusEntry { seed: s, decay: 2.0, norm: 1.0, shift: -1.0 };
        let base: Vec<CorpusEntry> = (0..2).map(|i| entry(first + i)).collect();
        let mut sup = base.clone();
        sup.extend((0..extra as u64).map(|i| entry(first + 100 + i)));
        let r1 = calibrate_constants(&base, &settings, bank()).unwrap();
        let r2 = calibrate_constants(&sup, &settings, bank()).unwrap();
        prop_assert!(r2.c1 >= r1.c1 && r2.c2 >= r1.c2);
    }
}

#[test]
fn zero_data_live_forever() {
    let z = SpectralField::zeros(bank().grid(), 2, true);
    let r = lifespan_estimate(&z, &z, 1.0, 1.0, 2.0, bank()).unwrap();
    assert!(r.t.is_infinite());
}
