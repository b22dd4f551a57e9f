use gam_core::metrics::gb_hr_papr;
use gam_core::optimize::{objective, objective_gradient, solve_g1, G1Problem, G1Result, Init};
use gam_core::{db_to_linear, Constellation, IndexBase, Scheme};

/// `‖a/‖a‖ − b/‖b‖‖`.
fn profile_distance(a: &[f64], b: &[f64]) -> f64 {
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    a.iter()
        .zip(b)
        .map(|(x, y)| (x / na - y / nb).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn assert_feasible(r: &G1Result, p: &G1Problem) {
    let n = r.radii.len() as f64;
    let mean = r.radii.iter().map(|x| x * x).sum::<f64>() / n;
    assert!((mean / p.sigma2 - p.snr_linear).abs() <= 1e-6 * p.snr_linear);
    assert!(r.radii[0] >= 0.0);
    assert!(r.radii.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(r.constraint_residuals.monotonic_violation, 0.0);
    assert!(r.constraint_residuals.power_eq.abs() <= 1e-6 * p.snr_linear);
}

#[test]
fn results_are_feasible_and_never_worse() {
    for n in [2usize, 4, 8, 16] {
        for snr_db in [0.0, 10.0] {
            for init in [Init::FromHr, Init::FromDisc] {
                let mut p = G1Problem::new(n, db_to_linear(snr_db));
                p.init = init.clone();
                let r = solve_g1(&p).unwrap();
                assert_feasible(&r, &p);
                assert!(r.mi_bits >= r.init_mi_bits - 1e-9, "n={n} {snr_db} dB {init:?}");
                assert!(r.mi_bits <= (n as f64).log2() + 1e-9);
            }
        }
    }
}

#[test]
fn equal_radii_start_does_not_regress() {
    for snr_db in [-5.0, 5.0, 20.0] {
        let s = db_to_linear(snr_db);
        let mut p = G1Problem::new(2, s);
        p.init = Init::Custom(vec![s.sqrt(); 2]);
        let r = solve_g1(&p).unwrap();
        assert_feasible(&r, &p);
        assert!(r.mi_bits >= r.init_mi_bits - 1e-9);
    }
}

#[test]
fn papr_cap_is_honoured() {
    for n in [8usize, 16] {
        let mut p = G1Problem::new(n, db_to_linear(10.0));
        p.papr_cap = Some(2.0);
        let r = solve_g1(&p).unwrap();
        assert_feasible(&r, &p);
        assert!(r.papr <= 2.0 * (1.0 + 1e-6), "papr {}", r.papr);
        assert!(r.constraint_residuals.papr_slack.unwrap() >= -2.0 * 1e-6);
    }
}

#[test]
fn optimized_papr_not_above_start() {
    let r = solve_g1(&G1Problem::new(16, 3.0)).unwrap();
    assert!(r.mi_bits > r.init_mi_bits);
    assert!(r.papr <= gb_hr_papr(16), "{} vs {}", r.papr, gb_hr_papr(16));
}

#[test]
fn rejects_bad_problems() {
    let mut p = G1Problem::new(4, 1.0);
    p.papr_cap = Some(0.5);
    assert!(solve_g1(&p).is_err());
    assert!(solve_g1(&G1Problem::new(4, 0.0)).is_err());
    assert!(solve_g1(&G1Problem::new(4, -1.0)).is_err());
    let mut p = G1Problem::new(4, 1.0);
    p.init = Init::Custom(vec![1.0, 0.5, 2.0, 3.0]);
    assert!(solve_g1(&p).is_err());
}

#[test]
fn single_point_gradient_vanishes() {
    let grid = G1Problem::new(1, 1.0).controls.grid;
    let g = objective_gradient(&[1.0], IndexBase::One, 1.0, &grid).unwrap();
    assert!(g[0].abs() < 1e-9, "{g:?}");
    assert!(objective(&[1.0], IndexBase::One, 1.0, &grid).unwrap().abs() < 1e-9);
}

#[test]
fn gradient_matches_central_differences_at_equal_radii() {
    let grid = G1Problem::new(4, 1.0).controls.grid;
    let radii = vec![1.0; 4];
    let g = objective_gradient(&radii, IndexBase::Zero, 1.0, &grid).unwrap();
    let h = 1e-4;
    for k in 0..4 {
        let mut up = radii.clone();
        let mut dn = radii.clone();
        up[k] += h;
        dn[k] -= h;
        let fd = (objective(&up, IndexBase::Zero, 1.0, &grid).unwrap()
            - objective(&dn, IndexBase::Zero, 1.0, &grid).unwrap())
            / (2.0 * h);
        assert!((g[k] - fd).abs() <= 1e-3 * fd.abs(), "k={k}: {} vs {fd}", g[k]);
    }
}

#[test]
fn result_builds_g1_constellation() {
    let r = solve_g1(&G1Problem::new(8, 10.0)).unwrap();
    let c = r.constellation(2.0).unwrap();
    assert_eq!(c.scheme(), Scheme::GbGamG1);
    assert!((c.mean_power() - 2.0).abs() < 1e-9);
    let hr = Constellation::gb_gam_hr(8, 1.0).unwrap();
    for (a, b) in c.points().iter().zip(hr.points()) {
        if a.norm() > 1e-9 && b.norm() > 1e-9 {
            assert!((a.arg() - b.arg()).abs() < 1e-12);
        }
    }
    let json = serde_json::to_string(&r).unwrap();
    let back: G1Result = serde_json::from_str(&json).unwrap();
    assert_eq!(back.radii.len(), 8);
}

fn tight(n: usize, snr_db: f64) -> G1Problem {
    let mut p = G1Problem::new(n, db_to_linear(snr_db));
    p.controls.tolerance_bits = 1e-13;
    p.controls.gradient_tolerance = 1e-15;
    p.controls.max_iterations = 3000;
    p
}

#[test]
fn profile_tends_to_disc_at_high_snr() {
    let disc = Constellation::disc_gam(16, 1.0).unwrap().radii();
    let mid = solve_g1(&tight(16, 4.8)).unwrap();
    let high = solve_g1(&tight(16, 25.0)).unwrap();
    let d_mid = profile_distance(&mid.radii, &disc);
    let d_high = profile_distance(&high.radii, &disc);
    assert!(d_high < d_mid, "{d_high} vs {d_mid}");
    assert!(d_high <= 0.1, "distance to disc profile {d_high}");
}

#[test]
fn profile_tends_to_hr_at_low_snr() {
    let hr = Constellation::gb_gam_hr(16, 1.0).unwrap().radii();
    let mid = solve_g1(&tight(16, 4.8)).unwrap();
    let low = solve_g1(&tight(16, -5.0)).unwrap();
    let d_mid = profile_distance(&mid.radii, &hr);
    let d_low = profile_distance(&low.radii, &hr);
    assert!(d_low < d_mid, "{d_low} vs {d_mid}");
    assert!(d_low <= 0.1, "distance to HR profile {d_low}");
}
