use approx::assert_relative_eq;
use nonlocal_fisher::analysis::{
    self, connectivity_condition, k0_constant, rapid_speed_threshold, turing_analysis, MuCritical, Thresholds,
};
use nonlocal_fisher::Kernel;
use proptest::prelude::*;
use std::f64::consts::PI;

/// Simpson oracle for `1/∫φ(1 − µz²/2)₊` with the kink at `√(2/µ)` as a node.
fn k0_oracle(kernel: &Kernel, mu: f64, reach: f64) -> f64 {
    let kink = (2.0 / mu).sqrt().min(reach);
    let n = 20_000;
    let h = kink / n as f64;
    let f = |z: f64| kernel.eval(z) * (1.0 - mu * z * z / 2.0).max(0.0);
    let mut s = f(0.0) + f(kink);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    1.0 / (2.0 * s * h / 3.0)
}

#[test]
fn top_hat_closed_forms() {
    let k = Kernel::top_hat(1.0).unwrap();
    let t = Thresholds::new(&k, 1.0).unwrap();
    assert_eq!(t.c_star, 2.0);
    assert_relative_eq!(t.k0, 1.2, max_relative = 1e-12);
    assert_relative_eq!(t.c_bar, 1.2 / 3f64.sqrt(), max_relative = 1e-12);
    let t = Thresholds::new(&k, 10.0).unwrap();
    assert_relative_eq!(t.k0, 1.5 * 5f64.sqrt(), max_relative = 1e-12);
    assert_relative_eq!(t.c_bar, 15.0 * (5.0f64 / 3.0).sqrt(), max_relative = 1e-12);
}

#[test]
fn k0_matches_simpson_oracle() {
    let cases = [
        (Kernel::top_hat(1.0).unwrap(), 1.0),
        (Kernel::gaussian(1.0).unwrap(), 1.0),
        (Kernel::gaussian(1.0).unwrap(), 5.0),
        (Kernel::laplace(1.0).unwrap(), 2.0),
        (Kernel::power_tail(5.0).unwrap(), 0.5),
    ];
    for (kernel, mu) in cases {
        let reach = if let Kernel::TopHat { halfwidth } = kernel { halfwidth } else { f64::INFINITY };
        let oracle = k0_oracle(&kernel, mu, reach);
        assert_relative_eq!(k0_constant(&kernel, mu).unwrap(), oracle, max_relative = 1e-9);
    }
}

#[test]
fn top_hat_mu_critical_matches_brute_force() {
    let n = 1_000_000;
    let brute = (0..n)
        .map(|i| {
            let k = PI + (i as f64 + 0.5) * PI / n as f64;
            k.powi(3) / -k.sin()
        })
        .fold(f64::INFINITY, f64::min);
    let report = turing_analysis(&Kernel::top_hat(1.0).unwrap(), 1.0).unwrap();
    let mu_crit = report.mu_critical.value().unwrap();
    assert_relative_eq!(mu_crit, brute, max_relative = 1e-6);
    assert!(!report.unstable);
    assert!(turing_analysis(&Kernel::top_hat(1.0).unwrap(), 90.0).unwrap().unstable);
}

#[test]
fn positive_transforms_are_stable_for_all_mu() {
    for kernel in [Kernel::gaussian(1.0).unwrap(), Kernel::laplace(1.0).unwrap()] {
        // Dense grid: the transform never goes negative (the Gaussian underflows to 0).
        let min = (1..=1_000_000)
            .map(|i| kernel.fourier(i as f64 * 1e-4).re)
            .fold(f64::INFINITY, f64::min);
        assert!(min >= 0.0);
        let report = turing_analysis(&kernel, 1e3).unwrap();
        assert_eq!(report.mu_critical, MuCritical::StableForAllMu);
        assert!(!report.unstable);
    }
}

#[test]
fn condition_examples() {
    assert!(connectivity_condition(2.0, 1.0, 1.0 / 3.0, 1.0));
    assert!(!connectivity_condition(0.5, 1.0, 1.0 / 3.0, 1.0));
    assert!(connectivity_condition(-2.0, 1.0, 1.0 / 3.0, 1.0));
    assert!(analysis::bistable_condition(1.0, 1.0 / 3.0, 1.0));
    assert!(!analysis::bistable_condition(3.0, 1.0, 2.0));
}

fn any_kernel() -> impl Strategy<Value = Kernel> {
    prop_oneof![
        (0.2f64..3.0).prop_map(|a| Kernel::top_hat(a).unwrap()),
        (0.2f64..3.0).prop_map(|s| Kernel::gaussian(s).unwrap()),
        (0.2f64..3.0).prop_map(|b| Kernel::laplace(b).unwrap()),
        (4.0f64..9.0).prop_map(|p| Kernel::power_tail(p).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn c_bar_recomposes_exactly(kernel in any_kernel(), mu in 0.05f64..50.0) {
        let c_bar = rapid_speed_threshold(&kernel, mu).unwrap();
        let recomposed = mu * kernel.moment(2).unwrap().sqrt() * k0_constant(&kernel, mu).unwrap();
        prop_assert_eq!(c_bar, recomposed);
        let t = Thresholds::new(&kernel, mu).unwrap();
        prop_assert_eq!(t.c_bar, c_bar);
        prop_assert_eq!(t.c_star, 2.0 * mu.sqrt());
        prop_assert!(t.k0 >= 1.0);
    }

    #[test]
    fn k0_is_nondecreasing_in_mu(kernel in any_kernel(), mu in 0.05f64..20.0, factor in 1.0f64..4.0) {
        let lo = k0_constant(&kernel, mu).unwrap();
        let hi = k0_constant(&kernel, mu * factor).unwrap();
        prop_assert!(hi >= lo * (1.0 - 1e-12), "{kernel}: K0({mu})={lo} > K0({})={hi}", mu * factor);
    }

    #[test]
    fn growth_at_zero_is_minus_mu(kernel in any_kernel(), mu in 0.05f64..100.0) {
        prop_assert!((analysis::dispersion_growth(&kernel, mu, 0.0) + mu).abs() <= 1e-12 * mu);
    }

    #[test]
    fn instability_is_monotone_in_mu(a in 0.3f64..3.0, mu in 1.0f64..400.0, factor in 1.0f64..3.0) {
        let kernel = Kernel::top_hat(a).unwrap();
        let low = turing_analysis(&kernel, mu).unwrap();
        let high = turing_analysis(&kernel, mu * factor).unwrap();
        prop_assert!(!low.unstable || high.unstable);
        prop_assert_eq!(low.unstable, low.lambda_max > 0.0);
    }

    #[test]
    fn top_hat_mu_critical_scales_inversely_with_width_squared(a in 0.3f64..3.0) {
        let unit = turing_analysis(&Kernel::top_hat(1.0).unwrap(), 1.0).unwrap().mu_critical.value().unwrap();
        let scaled = turing_analysis(&Kernel::top_hat(a).unwrap(), 1.0).unwrap().mu_critical.value().unwrap();
        prop_assert!((scaled * a * a - unit).abs() <= 1e-8 * unit);
    }
}
