use approx::assert_relative_eq;
use nonlocal_fisher::Kernel;
use proptest::prelude::*;

/// Composite Simpson on `[a, b]`, `panels` even.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut s = f(a) + f(b);
    for i in 1..panels {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// `2∫₀^∞ g(z) φ(z) dz` for even φ, via `z = t/(1-t)` so the fat tails are covered.
fn half_line_oracle(kernel: &Kernel, g: impl Fn(f64) -> f64) -> f64 {
    let integrand = |t: f64| {
        if t >= 1.0 {
            return 0.0;
        }
        let z = t / (1.0 - t);
        g(z) * kernel.eval(z) / ((1.0 - t) * (1.0 - t))
    };
    2.0 * simpson(integrand, 0.0, 1.0, 200_000)
}

fn families() -> Vec<Kernel> {
    vec![
        Kernel::gaussian(0.7).unwrap(),
        Kernel::gaussian(2.0).unwrap(),
        Kernel::laplace(0.5).unwrap(),
        Kernel::laplace(1.5).unwrap(),
        Kernel::power_tail(5.0).unwrap(),
        Kernel::power_tail(7.5).unwrap(),
    ]
}

#[test]
fn smooth_families_match_simpson_oracle() {
    for kernel in families() {
        for order in 0..=2u32 {
            let oracle = half_line_oracle(&kernel, |z| z.powi(order as i32));
            let closed = kernel.moment(order).unwrap();
            assert_relative_eq!(closed, oracle, max_relative = 1e-7);
        }
    }
}

#[test]
fn top_hat_moments_match_simpson_oracle() {
    for a in [0.3, 1.0, 2.5] {
        let k = Kernel::top_hat(a).unwrap();
        for order in 0..=2u32 {
            let oracle = simpson(|z| z.abs().powi(order as i32) * 0.5 / a, -a, a, 2000);
            assert_relative_eq!(k.moment(order).unwrap(), oracle, max_relative = 1e-12);
        }
    }
}

#[test]
fn transform_examples() {
    assert_relative_eq!(Kernel::gaussian(1.0).unwrap().fourier(2.0).re, (-2.0f64).exp(), max_relative = 1e-14);
    assert!(Kernel::top_hat(1.0).unwrap().fourier(std::f64::consts::PI).re.abs() < 1e-15);
    let gauss = Kernel::gaussian(1.0).unwrap();
    let by_quad = gauss.fourier_by_quadrature(2.0).unwrap();
    assert_relative_eq!(by_quad.re, 0.1353352832366127, max_relative = 1e-8);
}

#[test]
fn power_tail_truncation_radius() {
    // Two-sided tail mass (1+R)^{-4}.
    let k = Kernel::power_tail(5.0).unwrap();
    let r = k.tail_radius(1e-6);
    assert_relative_eq!((1.0 + r).powi(-4), 1e-6, max_relative = 1e-6);
    let tab = k.tabulate(0.01, 1e-6).unwrap();
    assert!(tab.tail_mass() <= 1e-6);
    assert!(tab.radius() >= r);
}

#[test]
fn top_hat_tabulation_has_no_tail() {
    let tab = Kernel::top_hat(1.0).unwrap().tabulate(0.01, 1e-12).unwrap();
    assert_relative_eq!(tab.radius(), 1.0, max_relative = 1e-12);
    assert_eq!(tab.tail_mass(), 0.0);
}

#[test]
fn fat_tail_past_cap_is_rejected() {
    let k = Kernel::power_tail(1.5).unwrap();
    assert!(k.tabulate(0.1, 1e-10).is_err());
}

fn any_kernel() -> impl Strategy<Value = Kernel> {
    prop_oneof![
        (0.1f64..3.0).prop_map(|a| Kernel::top_hat(a).unwrap()),
        (0.1f64..3.0).prop_map(|s| Kernel::gaussian(s).unwrap()),
        (0.1f64..3.0).prop_map(|b| Kernel::laplace(b).unwrap()),
        (4.0f64..9.0).prop_map(|p| Kernel::power_tail(p).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn quadrature_moments_match_closed_form(kernel in any_kernel(), order in 0u32..=2) {
        let closed = kernel.moment(order).unwrap();
        let quad = kernel.moment_by_quadrature(order).unwrap();
        prop_assert!((closed - quad).abs() <= 1e-8 * closed.abs(), "{kernel}: {closed} vs {quad}");
    }

    #[test]
    fn transform_is_bounded_real_and_even(kernel in any_kernel(), k in 0.0f64..40.0) {
        let closed = kernel.fourier(k);
        prop_assert!(closed.norm() <= 1.0 + 1e-12);
        prop_assert_eq!(closed.re, kernel.fourier(-k).re);
        let quad = kernel.fourier_by_quadrature(k).unwrap();
        prop_assert!(quad.im.abs() < 1e-10, "{kernel}: im {}", quad.im);
        prop_assert!(quad.norm() <= 1.0 + 1e-8);
        prop_assert!((quad.re - closed.re).abs() < 1e-8, "{kernel} k={k}: {} vs {}", quad.re, closed.re);
    }

    #[test]
    fn transform_at_zero_is_one(kernel in any_kernel()) {
        prop_assert!((kernel.fourier(0.0).re - 1.0).abs() < 1e-8);
        prop_assert!((kernel.fourier_by_quadrature(0.0).unwrap().re - 1.0).abs() < 1e-8);
    }

    #[test]
    fn tabulation_has_unit_discrete_mass(
        kernel in any_kernel(),
        spacing in 0.005f64..0.2,
        tol_exp in 4i32..12,
    ) {
        let tol = 10f64.powi(-tol_exp);
        let tab = kernel.tabulate(spacing, tol).unwrap();
        prop_assert!((tab.discrete_mass() - 1.0).abs() <= 1e-12);
        prop_assert!(tab.tail_mass() <= tol);
        prop_assert!(tab.weights().iter().all(|&w| w >= 0.0));
    }

    #[test]
    fn first_moment_is_bounded_by_second(kernel in any_kernel()) {
        let (m1, m2) = (kernel.moment(1).unwrap(), kernel.moment(2).unwrap());
        prop_assert!(m1 <= m2.sqrt() * (1.0 + 1e-12), "{kernel}: m1={m1}, m2={m2}");
    }

    #[test]
    fn spec_round_trips(kernel in any_kernel()) {
        let parsed: Kernel = kernel.to_string().parse().unwrap();
        prop_assert_eq!(parsed, kernel);
    }
}
