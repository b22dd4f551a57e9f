//! Checks against reference computations that share no code with the crate.

use std::f64::consts::{PI, TAU};

use gam_core::golden::golden_angle_phase;
use gam_core::link::{measure_ser, ml_detect, transmit, SimRun};
use gam_core::mi::{mi_grid, output_density, GridControls};
use gam_core::par::Exec;
use gam_core::{db_to_linear, Constellation};
use num_bigint::BigUint;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::erf::erfc;

/// `frac(n·(3 − √5)/2)` from a 60-digit integer square root.
fn golden_frac_bigint(n: u64) -> f64 {
    let digits = 60u32;
    let scale = BigUint::from(10u32).pow(digits);
    let root5 = (BigUint::from(5u32) * &scale * &scale).sqrt();
    let numer = (BigUint::from(3u32) * &scale - root5) * BigUint::from(n);
    let denom = BigUint::from(2u32) * &scale;
    let rem = numer % &denom;
    // keep 18 significant digits of rem/denom
    let shift = BigUint::from(10u32).pow(digits - 18);
    let top: u64 = (rem / (BigUint::from(2u32) * shift)).try_into().unwrap();
    top as f64 / 1e18
}

#[test]
fn golden_phase_matches_bigint_reference() {
    let f = golden_frac_bigint(1000);
    assert!((f - 0.966_011_250_105_151_8).abs() < 1e-16);
    assert!((golden_angle_phase(1000) - 6.069_627_693_230_874).abs() < 1e-12);
    for n in [1u64, 2, 3, 1000, 65_537, 1_000_003, 987_654_321, 1 << 36] {
        let expect = TAU * golden_frac_bigint(n);
        let got = golden_angle_phase(n);
        let err = (got - expect).abs().min(TAU - (got - expect).abs());
        assert!(err < 1e-12, "n={n}: {got} vs {expect}");
    }
}

#[test]
fn density_matches_direct_sum() {
    let c = Constellation::qam(4, 1.0).unwrap();
    let s2 = 0.1;
    let direct = |y: Complex64| -> f64 {
        c.points()
            .iter()
            .map(|x| 0.25 * (-(y - x).norm_sqr() / s2).exp() / (PI * s2))
            .sum()
    };
    for x in c.points() {
        let d = output_density(*x, &c, s2);
        assert!((d - direct(*x)).abs() <= 1e-12 * direct(*x));
    }
    let one = Constellation::custom(vec![Complex64::new(0.0, 0.0)]).unwrap();
    assert!((output_density(Complex64::new(0.0, 0.0), &one, 1.0) - 1.0 / PI).abs() < 1e-15);
    let y = Complex64::from_polar(0.5, 0.7);
    let expect = (-1.0f64).exp() / (PI * 0.25);
    assert!((output_density(y, &one, 0.25) - expect).abs() < 1e-15);
}

/// MI of `±a` over a real Gaussian channel of variance `v`, by a fine
/// trapezoid rule on the one-dimensional output density.
fn bpsk_mi_1d(a: f64, v: f64) -> f64 {
    let s = v.sqrt();
    let lo = -a - 14.0 * s;
    let hi = a + 14.0 * s;
    let m = 400_000;
    let h = (hi - lo) / m as f64;
    let g = |y: f64, mu: f64| (-(y - mu).powi(2) / (2.0 * v)).exp() / (2.0 * PI * v).sqrt();
    let mut acc = 0.0;
    for i in 0..=m {
        let y = lo + i as f64 * h;
        let f = 0.5 * (g(y, a) + g(y, -a));
        let w = if i == 0 || i == m { 0.5 } else { 1.0 };
        if f > 0.0 {
            acc -= w * f * f.log2();
        }
    }
    acc * h - 0.5 * (2.0 * PI * std::f64::consts::E * v).log2()
}

#[test]
fn two_point_mi_matches_scalar_integral() {
    let c = Constellation::psk(2, 1.0).unwrap();
    assert!(c.points().iter().all(|p| p.im.abs() < 1e-15 && (p.re.abs() - 1.0).abs() < 1e-15));
    for snr_db in [0.0, -3.0, 6.0] {
        let s2 = 1.0 / db_to_linear(snr_db);
        // the imaginary axis carries no information
        let expect = bpsk_mi_1d(1.0, s2 / 2.0);
        let got = mi_grid(&c, s2, &GridControls::default()).unwrap().bits;
        assert!((got - expect).abs() < 1e-4, "{snr_db} dB: {got} vs {expect}");
    }
    // reference value from 40-digit adaptive quadrature
    assert!((bpsk_mi_1d(1.0, 0.5) - 0.721_451_590_790_388_1).abs() < 1e-9);
}

#[test]
fn two_point_ser_matches_erfc() {
    let c = Constellation::psk(2, 1.0).unwrap();
    for (i, snr_db) in [0.0, 3.0, 6.0].into_iter().enumerate() {
        let run = SimRun {
            constellation: &c,
            snr_db,
            n_symbols: 200_000,
            seed: 100 + i as u64,
        };
        let r = measure_ser(&run, Exec::default()).unwrap();
        // Q(√(2S)) with per-axis noise variance σ²/2
        let expect = 0.5 * erfc(db_to_linear(snr_db).sqrt());
        assert!(
            (r.ser - expect).abs() <= 3.0 * r.ci95_halfwidth,
            "{snr_db} dB: {} vs {expect} (ci {})",
            r.ser,
            r.ci95_halfwidth
        );
    }
}

fn brute_force_nearest(y: Complex64, pts: &[Complex64]) -> usize {
    let mut best = (f64::INFINITY, usize::MAX);
    for (k, x) in pts.iter().enumerate() {
        let d = (y.re - x.re).powi(2) + (y.im - x.im).powi(2);
        if d < best.0 {
            best = (d, k);
        }
    }
    best.1
}

#[test]
fn detection_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for c in [
        Constellation::qam(16, 1.0).unwrap(),
        Constellation::disc_gam(64, 1.0).unwrap(),
        Constellation::gb_gam_hr(256, 1.0).unwrap(),
    ] {
        for _ in 0..2000 {
            let y = Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            assert_eq!(ml_detect(y, &c), brute_force_nearest(y, c.points()));
        }
        for (k, x) in c.points().iter().enumerate() {
            assert_eq!(ml_detect(*x, &c), k);
        }
    }
    let qam = Constellation::qam(4, 1.0).unwrap();
    assert_eq!(ml_detect(Complex64::new(0.0, 0.0), &qam), 0);
}

#[test]
fn ser_falls_with_snr() {
    let c = Constellation::qam(16, 1.0).unwrap();
    let mut prev: Option<(f64, f64)> = None;
    for (i, snr_db) in (0..=20).step_by(4).enumerate() {
        let run = SimRun {
            constellation: &c,
            snr_db: snr_db as f64,
            n_symbols: 20_000,
            seed: i as u64,
        };
        let r = measure_ser(&run, Exec::default()).unwrap();
        if let Some((ser, ci)) = prev {
            assert!(r.ser <= ser + 3.0 * (ci + r.ci95_halfwidth));
        }
        prev = Some((r.ser, r.ci95_halfwidth));
    }
}

#[test]
fn transmit_is_reproducible() {
    let c = Constellation::disc_gam(16, 1.0).unwrap();
    let run = SimRun {
        constellation: &c,
        snr_db: 10.0,
        n_symbols: 10_000,
        seed: 42,
    };
    let a: Vec<_> = transmit(&run).unwrap().collect();
    let b: Vec<_> = transmit(&run).unwrap().collect();
    assert_eq!(a, b);
    assert_eq!(a.len(), 10_000);
}
