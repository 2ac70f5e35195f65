//! Adaptive Gauss-Kronrod quadrature.
//!
//! A 7-point Gauss / 15-point Kronrod pair drives a global adaptive scheme:
//! the interval with the largest error estimate is bisected until the summed
//! estimate meets the tolerance or the subdivision cap is hit. Integrands with
//! kinks should be split at the kinks by the caller (see [`integrate_pieces`]);
//! the scheme then converges at full order on each smooth piece.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

/// Default cap on the number of subintervals of one adaptive run.
pub const DEFAULT_MAX_SUBDIVISIONS: usize = 2000;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("subdivision cap of {cap} reached (estimate {estimate:e}, error {error:e})")]
    SubdivisionLimit {
        cap: usize,
        estimate: f64,
        error: f64,
    },
    #[error("integrand returned a non-finite value")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub subdivisions: usize,
}

/// Tolerances for one adaptive run. Converged when `error <= max(abs, rel * |value|)`.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_subdivisions: usize,
}

impl Tolerance {
    pub fn relative(rel: f64) -> Self {
        Self {
            abs: 0.0,
            rel,
            max_subdivisions: DEFAULT_MAX_SUBDIVISIONS,
        }
    }

    pub fn new(abs: f64, rel: f64) -> Self {
        Self {
            abs,
            rel,
            max_subdivisions: DEFAULT_MAX_SUBDIVISIONS,
        }
    }
}

/// One 15-point Kronrod panel. Returns (estimate, error estimate).
pub fn gauss_kronrod_15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        let sum = f1 + f2;
        kronrod += WGK[j] * sum;
        // Gauss nodes are the odd-indexed Kronrod nodes.
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    (value, error)
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive integration of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: Tolerance,
) -> Result<Quadrature, QuadratureError> {
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            error: 0.0,
            subdivisions: 0,
        });
    }
    let (value, error) = gauss_kronrod_15(&f, a, b);
    if !value.is_finite() {
        return Err(QuadratureError::NonFinite);
    }
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    let mut subdivisions = 1;

    loop {
        if total_err <= tol.abs.max(tol.rel * total.abs()) {
            break;
        }
        if subdivisions >= tol.max_subdivisions {
            // Round-off floor: the remaining error cannot be reduced further.
            if total_err <= 50.0 * f64::EPSILON * total.abs().max(tol.abs) {
                break;
            }
            return Err(QuadratureError::SubdivisionLimit {
                cap: tol.max_subdivisions,
                estimate: total,
                error: total_err,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1) = gauss_kronrod_15(&f, worst.a, mid);
        let (v2, e2) = gauss_kronrod_15(&f, mid, worst.b);
        if !(v1.is_finite() && v2.is_finite()) {
            return Err(QuadratureError::NonFinite);
        }
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
        subdivisions += 1;
    }

    // Re-sum from the panels to shed the drift of the running total.
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let error: f64 = heap.iter().map(|p| p.error).sum();
    Ok(Quadrature {
        value,
        error,
        subdivisions,
    })
}

/// Integrates over consecutive pieces `[p0, p1], [p1, p2], ...`.
///
/// `points` must be sorted; duplicates are skipped. Each piece gets the
/// relative tolerance against the grand total, so a piece that contributes
/// little is not over-resolved.
pub fn integrate_pieces<F: Fn(f64) -> f64>(
    f: F,
    points: &[f64],
    tol: Tolerance,
) -> Result<Quadrature, QuadratureError> {
    let mut value = 0.0;
    let mut error = 0.0;
    let mut subdivisions = 0;
    for w in points.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let q = integrate(&f, w[0], w[1], tol)?;
        value += q.value;
        error += q.error;
        subdivisions += q.subdivisions;
    }
    Ok(Quadrature {
        value,
        error,
        subdivisions,
    })
}

/// Integrates `f` over `[a, ∞)` through the map `z = a + s / (1 - s)`, `s ∈ [0, 1)`.
///
/// Kronrod nodes never touch `s = 1`, so the map's endpoint singularity is
/// never evaluated. The integrand must decay fast enough for the mapped
/// integrand to stay bounded.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    tol: Tolerance,
) -> Result<Quadrature, QuadratureError> {
    let mapped = |s: f64| {
        let one_minus = 1.0 - s;
        let z = a + s / one_minus;
        let v = f(z);
        if v == 0.0 {
            0.0
        } else {
            v / (one_minus * one_minus)
        }
    };
    integrate(mapped, 0.0, 1.0, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact_on_one_panel() {
        let (v, e) = gauss_kronrod_15(&|x: f64| x.powi(20) - 3.0 * x.powi(7), -1.0, 2.0);
        let exact = (2f64.powi(21) + 1.0) / 21.0 - 3.0 * (2f64.powi(8) - 1.0) / 8.0;
        assert!((v - exact).abs() < 1e-9 * exact.abs());
        assert!(e.is_finite());
    }

    #[test]
    fn adaptive_handles_peaks() {
        let q = integrate(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, Tolerance::relative(1e-12)).unwrap();
        let exact = 2.0 * 100.0 * (100.0f64).atan();
        assert!((q.value - exact).abs() < 1e-10 * exact);
    }

    #[test]
    fn kink_split_converges_quickly() {
        let f = |x: f64| (1.0 - x * x).max(0.0);
        let q = integrate_pieces(f, &[-2.0, -1.0, 1.0, 2.0], Tolerance::relative(1e-13)).unwrap();
        assert!((q.value - 4.0 / 3.0).abs() < 1e-13);
        assert!(q.subdivisions <= 3);
    }

    #[test]
    fn semi_infinite_gaussian() {
        let q = integrate_to_infinity(|z| (-z * z).exp(), 0.0, Tolerance::relative(1e-12)).unwrap();
        assert!((q.value - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn subdivision_cap_is_reported() {
        let tol = Tolerance {
            abs: 0.0,
            rel: 1e-14,
            max_subdivisions: 3,
        };
        let err = integrate(|x: f64| x.abs().sqrt(), -1.0, 1.0, tol).unwrap_err();
        assert!(matches!(err, QuadratureError::SubdivisionLimit { cap: 3, .. }));
    }
}
