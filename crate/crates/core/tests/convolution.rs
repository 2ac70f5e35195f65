use nonlocal_fisher::convolution::{Convolver, Method};
use nonlocal_fisher::{Grid, Kernel};
use proptest::prelude::*;

fn any_kernel() -> impl Strategy<Value = (Kernel, f64)> {
    prop_oneof![
        (0.5f64..2.0).prop_map(|a| (Kernel::top_hat(a).unwrap(), 1e-10)),
        (0.5f64..2.0).prop_map(|s| (Kernel::gaussian(s).unwrap(), 1e-10)),
        (0.3f64..1.0).prop_map(|b| (Kernel::laplace(b).unwrap(), 1e-10)),
        (5.0f64..8.0).prop_map(|p| (Kernel::power_tail(p).unwrap(), 1e-6)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fft_matches_direct_sum(
        (kernel, tol) in any_kernel(),
        n in prop::sample::select(vec![400usize, 1000, 2048]),
        seed in prop::collection::vec(0.0f64..1.0, 2048),
        pads in (0.0f64..1.0, 0.0f64..1.0),
    ) {
        let grid = Grid::new(40.0, n).unwrap();
        let tab = kernel.tabulate(grid.spacing(), tol).unwrap();
        let mut direct = Convolver::new(&grid, &tab, Method::Direct).unwrap();
        let mut fast = Convolver::new(&grid, &tab, Method::Fft).unwrap();
        let u = &seed[..n];
        let (mut a, mut b) = (vec![0.0; n], vec![0.0; n]);
        direct.apply(u, pads.0, pads.1, &mut a);
        fast.apply(u, pads.0, pads.1, &mut b);
        let err = a.iter().zip(&b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        prop_assert!(err <= 1e-12, "{kernel}: {err:e}");
    }

    #[test]
    fn constants_are_preserved((kernel, tol) in any_kernel(), level in 0.0f64..2.0) {
        let grid = Grid::new(40.0, 800).unwrap();
        let tab = kernel.tabulate(grid.spacing(), tol).unwrap();
        let mut conv = Convolver::new(&grid, &tab, Method::Auto).unwrap();
        let mut out = vec![0.0; 800];
        conv.apply(&[level; 800], level, level, &mut out);
        prop_assert!(out.iter().all(|v| (v - level).abs() <= 1e-14));
    }
}
