//! Explicit speed thresholds, the tail-limit sufficient conditions, and the
//! linear stability of the uniform state `u ≡ 1`.
//!
//! Thresholds: the minimal KPP speed `c* = 2√µ`, the a-priori sup bound
//! `K₀ = (∫ φ(z)(1 − µz²/2)₊ dz)⁻¹`, and the rapid-wave threshold
//! `c̄ = µ √m₂ K₀`. Waves faster than `c̄` satisfy `µ √m₂ ‖u‖∞ < |c|`, which
//! forces both tail limits into `{0, 1}`.
//!
//! Linearizing about `u ≡ 1` gives mode growth rates `λ(k) = −k² − µ Re φ̂(k)`;
//! `u ≡ 1` is Turing unstable exactly when some `k` has `λ(k) > 0`.

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::kernel::{Kernel, KernelError};
use crate::quadrature::{self, Tolerance};

const K0_REL_TOL: f64 = 1e-13;
/// Points in the geometric wavenumber scan.
pub const SCAN_POINTS: usize = 4096;
/// Ratio between the largest and smallest scanned wavenumber.
const SCAN_DECADES: f64 = 1e5;
/// Transform values within this band of zero cannot be signed when the
/// transform comes from quadrature.
const QUADRATURE_SIGN_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("slope at the origin must be positive, got mu = {0}")]
    NonpositiveMu(f64),
    #[error("the K0 integral {0:e} underflows; the kernel vanishes near the origin")]
    DegenerateIntegral(f64),
    #[error("cannot certify the sign of the kernel transform on (0, {k_max}]: min Re = {min_re:e}")]
    InconclusiveScan { k_max: f64, min_re: f64 },
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

fn check_mu(mu: f64) -> Result<(), AnalysisError> {
    if mu > 0.0 && mu.is_finite() {
        Ok(())
    } else {
        Err(AnalysisError::NonpositiveMu(mu))
    }
}

/// `c* = 2√µ`.
pub fn critical_speed(mu: f64) -> Result<f64, AnalysisError> {
    check_mu(mu)?;
    Ok(2.0 * mu.sqrt())
}

/// `∫ φ(z) (1 − µz²/2)₊ dz`, split at the kink `|z| = √(2/µ)` and at the kernel's own breakpoints.
pub fn k0_integral(kernel: &Kernel, mu: f64) -> Result<f64, AnalysisError> {
    check_mu(mu)?;
    let kink = (2.0 / mu).sqrt();
    let (lo, hi) = kernel.support();
    let (lo, hi) = (lo.max(-kink), hi.min(kink));
    let mut points = vec![lo];
    points.extend(kernel_kinks(kernel).into_iter().filter(|&p| p > lo && p < hi));
    if kernel.support().1.is_infinite() {
        // Dyadic panels keep the mass near the origin visible when the kink is far out.
        let mut r = 0.125 * kernel.tail_radius(0.5).max(1e-3);
        while r < hi {
            points.push(r);
            points.push(-r);
            r *= 2.0;
        }
        points.sort_by(f64::total_cmp);
    }
    points.push(hi);
    let integrand = |z: f64| {
        let weight = 1.0 - 0.5 * mu * z * z;
        if weight <= 0.0 {
            0.0
        } else {
            kernel.eval(z) * weight
        }
    };
    let q = quadrature::integrate_pieces(integrand, &points, Tolerance::new(1e-300, K0_REL_TOL))
        .map_err(KernelError::from)?;
    if !(q.value > f64::MIN_POSITIVE) {
        return Err(AnalysisError::DegenerateIntegral(q.value));
    }
    Ok(q.value)
}

fn kernel_kinks(kernel: &Kernel) -> Vec<f64> {
    match kernel {
        Kernel::TopHat { halfwidth } => vec![-halfwidth, 0.0, *halfwidth],
        Kernel::Tabulated(s) => {
            let n = (s.values().len() - 1) / 2;
            (0..s.values().len())
                .map(|j| (j as f64 - n as f64) * s.spacing())
                .collect()
        }
        _ => vec![0.0],
    }
}

/// `K₀(φ, µ)`, the a-priori bound on `‖u‖∞` for waves.
pub fn k0_constant(kernel: &Kernel, mu: f64) -> Result<f64, AnalysisError> {
    Ok(1.0 / k0_integral(kernel, mu)?)
}

/// `c̄ = µ √m₂ K₀`.
pub fn rapid_speed_threshold(kernel: &Kernel, mu: f64) -> Result<f64, AnalysisError> {
    check_mu(mu)?;
    let m2 = kernel.moment(2)?;
    let k0 = k0_constant(kernel, mu)?;
    Ok(mu * m2.sqrt() * k0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    pub mu: f64,
    pub m1: f64,
    pub m2: f64,
    pub c_star: f64,
    pub k0: f64,
    pub c_bar: f64,
}

impl Thresholds {
    pub fn new(kernel: &Kernel, mu: f64) -> Result<Self, AnalysisError> {
        let c_star = critical_speed(mu)?;
        let m1 = kernel.moment(1)?;
        let m2 = kernel.moment(2)?;
        let k0 = k0_constant(kernel, mu)?;
        Ok(Self {
            mu,
            m1,
            m2,
            c_star,
            k0,
            c_bar: mu * m2.sqrt() * k0,
        })
    }

    /// Local reaction `µu(1 − u)`: the kernel is a Dirac mass, so both moments
    /// vanish, `K₀ = 1` and `c̄ = 0`.
    pub fn local(mu: f64) -> Result<Self, AnalysisError> {
        Ok(Self {
            mu,
            m1: 0.0,
            m2: 0.0,
            c_star: critical_speed(mu)?,
            k0: 1.0,
            c_bar: 0.0,
        })
    }
}

/// Condition forcing the tail limits of a wave into `{0, 1}`: `µ √m₂ M < |c|`.
pub fn connectivity_condition(c: f64, mu: f64, m2: f64, sup_norm: f64) -> bool {
    mu * m2.sqrt() * sup_norm < c.abs()
}

/// Bistable analogue: `√m₂ M² < |c|`.
pub fn bistable_condition(c: f64, m2: f64, sup_norm: f64) -> bool {
    m2.sqrt() * sup_norm * sup_norm < c.abs()
}

/// Growth rate of the mode `e^{ikx}` about `u ≡ 1`.
pub fn dispersion_growth(kernel: &Kernel, mu: f64, k: f64) -> f64 {
    -k * k - mu * kernel.fourier(k).re
}

/// `(k, λ(k))` on the given wavenumbers.
pub fn dispersion_curve(kernel: &Kernel, mu: f64, ks: &[f64]) -> Vec<(f64, f64)> {
    ks.iter().map(|&k| (k, dispersion_growth(kernel, mu, k))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuCritical {
    Finite(f64),
    StableForAllMu,
}

impl MuCritical {
    pub fn value(self) -> Option<f64> {
        match self {
            MuCritical::Finite(v) => Some(v),
            MuCritical::StableForAllMu => None,
        }
    }
}

impl Serialize for MuCritical {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            MuCritical::Finite(v) => s.serialize_f64(*v),
            MuCritical::StableForAllMu => s.serialize_str("stable for all mu"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DispersionReport {
    pub unstable: bool,
    /// Most unstable wavenumber, when unstable.
    pub k_max: Option<f64>,
    pub lambda_max: f64,
    pub mu_critical: MuCritical,
    /// Wavenumber realizing `mu_critical`.
    pub k_critical: Option<f64>,
    /// Smallest `Re φ̂` seen on the scan; nonnegative certifies stability on the range.
    pub margin: f64,
    /// Upper end of the scanned range.
    pub scan_k_max: f64,
}

/// Default upper scan bound `max(50, 20/√m₂)`.
pub fn default_scan_k_max(kernel: &Kernel) -> Result<f64, AnalysisError> {
    let m2 = kernel.moment(2)?;
    Ok(if m2 > 0.0 { 50f64.max(20.0 / m2.sqrt()) } else { 50.0 })
}

/// Geometric grid on `[k_max / 1e5, k_max]`.
pub fn scan_grid(k_max: f64, points: usize) -> Vec<f64> {
    let k_min = k_max / SCAN_DECADES;
    let ratio = SCAN_DECADES.powf(1.0 / (points - 1) as f64);
    let mut ks: Vec<f64> = (0..points).map(|j| k_min * ratio.powi(j as i32)).collect();
    ks[points - 1] = k_max;
    ks
}

pub fn turing_analysis(kernel: &Kernel, mu: f64) -> Result<DispersionReport, AnalysisError> {
    let k_max = default_scan_k_max(kernel)?;
    turing_analysis_on(kernel, mu, k_max)
}

/// Grid-and-refine stability analysis on `(0, k_max]`.
pub fn turing_analysis_on(kernel: &Kernel, mu: f64, k_max: f64) -> Result<DispersionReport, AnalysisError> {
    check_mu(mu)?;
    let ks = scan_grid(k_max, SCAN_POINTS);
    let re: Vec<f64> = ks.iter().map(|&k| kernel.fourier(k).re).collect();
    let margin = re.iter().copied().fold(f64::INFINITY, f64::min);
    let sign_tol = if kernel.has_closed_form_transform() {
        0.0
    } else {
        QUADRATURE_SIGN_TOL
    };

    // Threshold: inf of k²/(−Re φ̂) over the negative band.
    let threshold = |k: f64, r: f64| if r < -sign_tol { k * k / -r } else { f64::INFINITY };
    let best = ks
        .iter()
        .zip(&re)
        .enumerate()
        .map(|(j, (&k, &r))| (j, threshold(k, r)))
        .filter(|(_, g)| g.is_finite())
        .min_by(|a, b| a.1.total_cmp(&b.1));

    let (mu_critical, k_critical) = match best {
        Some((j, _)) => {
            let (a, b) = bracket(&ks, j);
            let g = |k: f64| threshold(k, kernel.fourier(k).re);
            let (k_star, g_star) = golden_min(g, a, b);
            let grid_best = threshold(ks[j], re[j]);
            if grid_best < g_star {
                (MuCritical::Finite(grid_best), Some(ks[j]))
            } else {
                (MuCritical::Finite(g_star), Some(k_star))
            }
        }
        None if sign_tol == 0.0 || margin > sign_tol => (MuCritical::StableForAllMu, None),
        None => return Err(AnalysisError::InconclusiveScan { k_max, min_re: margin }),
    };

    let growth = |k: f64| dispersion_growth(kernel, mu, k);
    let (j, _) = ks
        .iter()
        .zip(&re)
        .map(|(&k, &r)| -k * k - mu * r)
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("scan grid is never empty");
    let (a, b) = bracket(&ks, j);
    let (mut k_best, neg) = golden_min(|k| -growth(k), a, b);
    let mut lambda_max = -neg;
    let grid_lambda = growth(ks[j]);
    if grid_lambda > lambda_max {
        lambda_max = grid_lambda;
        k_best = ks[j];
    }
    // The threshold witness is unstable for every µ above mu_critical; using
    // it keeps the verdict consistent with mu_critical and monotone in µ.
    if let Some(kc) = k_critical {
        let lc = growth(kc);
        if lc > lambda_max {
            lambda_max = lc;
            k_best = kc;
        }
    }
    if -mu > lambda_max {
        lambda_max = -mu;
        k_best = 0.0;
    }
    let unstable = lambda_max > 0.0;
    Ok(DispersionReport {
        unstable,
        k_max: unstable.then_some(k_best),
        lambda_max,
        mu_critical,
        k_critical,
        margin,
        scan_k_max: k_max,
    })
}

fn bracket(ks: &[f64], j: usize) -> (f64, f64) {
    let lo = if j == 0 { ks[0] } else { ks[j - 1] };
    let hi = if j + 1 == ks.len() { ks[j] } else { ks[j + 1] };
    (lo, hi)
}

/// Golden-section minimization on `[a, b]`; returns `(argmin, min)`.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= 1e-14 * (a.abs() + b.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}
