//! Quantities extracted from computed profiles: front position and speed,
//! norms, far-field classification, tail conditions and the energy audit.

use serde::Serialize;
use thiserror::Error;

use crate::analysis::{self, Thresholds};
use crate::convolution::{convolve, ConvolutionError};
use crate::grid::Field;
use crate::kernel::TabulatedKernel;
use crate::solver::{ModelParams, Reaction, SimConfig, Trajectory};

pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-3;
pub const DEFAULT_WINDOW_FRACTION: f64 = 0.2;
pub const DEFAULT_SPEED_WINDOW: f64 = 0.5;
pub const DEFAULT_K0_TOL: f64 = 1e-2;
/// Largest RMS residual of the position fit for a lab-frame speed to be trusted.
pub const DEFAULT_FIT_TOL: f64 = 1e-2;
pub const MIN_SPEED_SAMPLES: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("profile never crosses level {level}")]
    NoCrossing { level: f64 },
    #[error("speed fit needs at least {need} samples in the window, got {got}")]
    InsufficientSamples { got: usize, need: usize },
    #[error("interval [{a}, {b}] is not inside the grid [{lo}, {hi}]")]
    OutOfRange { a: f64, b: f64, lo: f64, hi: f64 },
    #[error(transparent)]
    Convolution(#[from] ConvolutionError),
}

/// Rightmost crossing of `u = level`, linearly interpolated between nodes.
pub fn front_position(profile: &Field, level: f64) -> Result<f64, DiagnosticsError> {
    let u = profile.values();
    let g = profile.grid();
    for j in (0..u.len() - 1).rev() {
        let (a, b) = (u[j] - level, u[j + 1] - level);
        if b == 0.0 {
            // A node exactly at the level counts only if the profile leaves it.
            if a != 0.0 {
                return Ok(g.x(j + 1));
            }
            continue;
        }
        if a * b < 0.0 || a == 0.0 {
            let s = a / (a - b);
            return Ok(g.x(j) + s * g.spacing());
        }
    }
    Err(DiagnosticsError::NoCrossing { level })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpeedFit {
    pub speed: f64,
    pub intercept: f64,
    /// RMS of the fit residuals.
    pub residual: f64,
    pub samples: usize,
}

/// Least-squares slope of `positions` against `times` over the trailing
/// `window` fraction of the time span.
pub fn measure_speed(times: &[f64], positions: &[f64], window: f64) -> Result<SpeedFit, DiagnosticsError> {
    assert_eq!(times.len(), positions.len());
    let insufficient = |got| DiagnosticsError::InsufficientSamples {
        got,
        need: MIN_SPEED_SAMPLES,
    };
    let (Some(&t0), Some(&t1)) = (times.first(), times.last()) else {
        return Err(insufficient(0));
    };
    let start = t1 - window.clamp(0.0, 1.0) * (t1 - t0);
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(positions)
        .filter(|(&t, _)| t >= start - 1e-12 * (t1 - t0).abs())
        .map(|(&t, &x)| (t, x))
        .collect();
    if pts.len() < MIN_SPEED_SAMPLES {
        return Err(insufficient(pts.len()));
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let xm = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt = pts.iter().map(|p| (p.0 - tm).powi(2)).sum::<f64>();
    let stx = pts.iter().map(|p| (p.0 - tm) * (p.1 - xm)).sum::<f64>();
    let speed = if stt > 0.0 { stx / stt } else { 0.0 };
    let intercept = xm - speed * tm;
    let residual = (pts
        .iter()
        .map(|p| (p.1 - intercept - speed * p.0).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(SpeedFit {
        speed,
        intercept,
        residual,
        samples: pts.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum TailState {
    One,
    Zero,
    Wavetrain { mean: f64, amplitude: f64 },
    Undetermined,
}

impl TailState {
    pub fn is_uniform(&self) -> bool {
        matches!(self, TailState::One | TailState::Zero)
    }
}

fn window_nodes(profile: &Field, side: Side, window: f64) -> &[f64] {
    let u = profile.values();
    let h = profile.grid().spacing();
    let count = ((window / h).round() as usize).clamp(1, u.len());
    match side {
        Side::Left => &u[..count],
        Side::Right => &u[u.len() - count..],
    }
}

/// Classifies the outermost `window` (a length) on `side`.
///
/// Windows longer than `L` cannot isolate one side and give `Undetermined`.
pub fn classify_tail(profile: &Field, side: Side, window: f64, tol: f64) -> TailState {
    if !(window > 0.0 && window <= profile.grid().half_length()) {
        return TailState::Undetermined;
    }
    let w = window_nodes(profile, side, window);
    let mean = w.iter().sum::<f64>() / w.len() as f64;
    let max = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = w.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = max - min;
    if spread < tol && (mean - 1.0).abs() < tol {
        TailState::One
    } else if spread < tol && mean.abs() < tol {
        TailState::Zero
    } else if spread >= tol && min > tol {
        TailState::Wavetrain {
            mean,
            amplitude: 0.5 * spread,
        }
    } else {
        TailState::Undetermined
    }
}

/// `u′` by centered differences, one-sided second-order stencils at the ends.
pub fn derivative(profile: &Field) -> Vec<f64> {
    let u = profile.values();
    let n = u.len();
    let h = profile.grid().spacing();
    let mut d = vec![0.0; n];
    d[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h);
    d[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * h);
    for j in 1..n - 1 {
        d[j] = (u[j + 1] - u[j - 1]) / (2.0 * h);
    }
    d
}

/// Trapezoid integral over `[a, b]` of nodal values `f`, with the integrand
/// linearly interpolated at non-node endpoints.
fn trapezoid(profile: &Field, f: &[f64], a: f64, b: f64) -> f64 {
    let g = profile.grid();
    let h = g.spacing();
    let x0 = g.x(0);
    let interp = |x: f64| point(profile, f, x);
    if b <= a {
        return 0.0;
    }
    // Nodes strictly inside (a, b).
    let first = (((a - x0) / h).floor() as isize + 1).max(0) as usize;
    let last_excl = (((b - x0) / h).ceil() as isize).min(f.len() as isize).max(0) as usize;
    if first >= last_excl {
        return 0.5 * (interp(a) + interp(b)) * (b - a);
    }
    let mut sum = 0.5 * (interp(a) + f[first]) * (g.x(first) - a);
    for j in first..last_excl - 1 {
        sum += 0.5 * (f[j] + f[j + 1]) * h;
    }
    sum += 0.5 * (f[last_excl - 1] + interp(b)) * (b - g.x(last_excl - 1));
    sum
}

fn check_interval(profile: &Field, a: f64, b: f64) -> Result<(), DiagnosticsError> {
    let g = profile.grid();
    let (lo, hi) = (g.x(0), g.x(g.n_points() - 1));
    if a < lo - 1e-12 || b > hi + 1e-12 || a > b {
        return Err(DiagnosticsError::OutOfRange { a, b, lo, hi });
    }
    Ok(())
}

/// `∫_a^b u′²` with [`derivative`] and the trapezoid rule. Zero outside the grid.
pub fn l2_gradient(profile: &Field, a: f64, b: f64) -> f64 {
    let g = profile.grid();
    let (a, b) = (a.max(g.x(0)), b.min(g.x(g.n_points() - 1)));
    let d2: Vec<f64> = derivative(profile).iter().map(|d| d * d).collect();
    trapezoid(profile, &d2, a, b)
}

fn potential(x: f64) -> f64 {
    x * x / 2.0 - x * x * x / 3.0
}

fn energy_audit_with_offset(
    profile: &Field,
    c: f64,
    mu: f64,
    kernel: &TabulatedKernel,
    a: f64,
    b: f64,
    offset: f64,
) -> Result<f64, DiagnosticsError> {
    check_interval(profile, a, b)?;
    let u = profile.values();
    let n = u.len();
    let conv = convolve(profile, kernel, u[0], u[n - 1])?;
    let du = derivative(profile);
    let du2: Vec<f64> = du.iter().map(|d| d * d).collect();
    let work: Vec<f64> = (0..n)
        .map(|j| du[j] * u[j] * (u[j] - conv.values()[j]))
        .collect();
    let bracket: Vec<f64> = (0..n)
        .map(|j| -0.5 * du2[j] - mu * (potential(u[j]) + offset))
        .collect();
    let lhs = c * trapezoid(profile, &du2, a, b);
    let rhs = point(profile, &bracket, b) - point(profile, &bracket, a) - mu * trapezoid(profile, &work, a, b);
    Ok((lhs - rhs).abs())
}

/// Nodal values `f` linearly interpolated at `x`.
fn point(profile: &Field, f: &[f64], x: f64) -> f64 {
    let g = profile.grid();
    let s = (x - g.x(0)) / g.spacing();
    let j = (s.floor().max(0.0) as usize).min(f.len() - 2);
    let t = s - j as f64;
    (1.0 - t) * f[j] + t * f[j + 1]
}

/// `|LHS − RHS|` of the integrated energy identity for the wave equation
/// `−cu′ = u″ + µu(1 − φ ∗ u)` on `[a, b]`:
/// `c∫u′² = [−½u′² − µW(u)]_a^b − µ∫u′u(u − φ∗u)`, `W(x) = x²/2 − x³/3`.
///
/// The convolution extends the profile by its edge values.
pub fn energy_audit(
    profile: &Field,
    c: f64,
    mu: f64,
    kernel: &TabulatedKernel,
    a: f64,
    b: f64,
) -> Result<f64, DiagnosticsError> {
    energy_audit_with_offset(profile, c, mu, kernel, a, b, 0.0)
}

/// Mean `|u′|` over the outermost `fraction` of the domain on each side.
pub fn edge_slopes(profile: &Field, fraction: f64) -> (f64, f64) {
    let d = derivative(profile);
    let count = ((fraction * d.len() as f64).round() as usize).clamp(1, d.len());
    let mean = |s: &[f64]| s.iter().map(|v| v.abs()).sum::<f64>() / s.len() as f64;
    (mean(&d[..count]), mean(&d[d.len() - count..]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnosticsConfig {
    pub classify_tol: f64,
    /// Classification window as a fraction of the domain length `2L`.
    pub window_fraction: f64,
    pub speed_window: f64,
    pub k0_tol: f64,
    pub fit_tol: f64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            classify_tol: DEFAULT_CLASSIFY_TOL,
            window_fraction: DEFAULT_WINDOW_FRACTION,
            speed_window: DEFAULT_SPEED_WINDOW,
            k0_tol: DEFAULT_K0_TOL,
            fit_tol: DEFAULT_FIT_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaveReport {
    /// Frame speed in the moving frame, fitted front speed in the lab frame.
    pub c_measured: Option<f64>,
    /// RMS residual of the front-position fit.
    pub c_fit_residual: Option<f64>,
    /// `false` when a lab-frame fit is missing or its residual exceeds the tolerance.
    pub c_reliable: bool,
    pub sup_norm: f64,
    pub deriv_sup: f64,
    pub l2_grad: f64,
    pub left_state: TailState,
    pub right_state: TailState,
    /// `µ√m₂ M < |c|`; Fisher modes only.
    pub condition_8: Option<bool>,
    /// `√m₂ M² < |c|`; bistable mode only.
    pub condition_12: Option<bool>,
    /// `M ≤ K₀ + tol`; Fisher modes only.
    pub k0_bound_ok: Option<bool>,
    /// Fisher modes only.
    pub energy_residual: Option<f64>,
    pub steady_residual: f64,
    /// Mean `|u′|` over the outermost 5% on each side.
    pub edge_slope_left: f64,
    pub edge_slope_right: f64,
}

/// Assembles a [`WaveReport`] from the final profile and the sample series.
/// Failures of individual diagnostics become `None` or `Undetermined`.
pub fn build_report(
    trajectory: &Trajectory,
    params: &ModelParams,
    config: &SimConfig,
    thresholds: Option<&Thresholds>,
    diag: &DiagnosticsConfig,
) -> WaveReport {
    let profile = &trajectory.final_field;
    let g = profile.grid();
    let (lo, hi) = (g.x(0), g.x(g.n_points() - 1));
    let sup_norm = profile.sup_norm();
    let deriv_sup = derivative(profile).iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let l2_grad = l2_gradient(profile, lo, hi);
    let window = diag.window_fraction * 2.0 * g.half_length();
    let left_state = classify_tail(profile, Side::Left, window, diag.classify_tol);
    let right_state = classify_tail(profile, Side::Right, window, diag.classify_tol);

    let (c_measured, c_fit_residual, c_reliable) = if config.frame_speed != 0.0 {
        (Some(config.frame_speed), None, true)
    } else {
        let (ts, xs): (Vec<f64>, Vec<f64>) = trajectory
            .samples
            .iter()
            .filter_map(|s| s.front_x.map(|x| (s.t, x)))
            .unzip();
        match measure_speed(&ts, &xs, diag.speed_window) {
            Ok(fit) => (Some(fit.speed), Some(fit.residual), fit.residual < diag.fit_tol),
            Err(_) => (None, None, false),
        }
    };

    let m2 = params.m2().unwrap_or(f64::NAN);
    let fisher_mu = params.reaction.mu();
    let condition_8 = match (fisher_mu, c_measured) {
        (Some(mu), Some(c)) => Some(analysis::connectivity_condition(c, mu, m2, sup_norm)),
        _ => None,
    };
    let condition_12 = match (params.reaction, c_measured) {
        (Reaction::NonlocalBistable { .. }, Some(c)) => Some(analysis::bistable_condition(c, m2, sup_norm)),
        _ => None,
    };
    let k0_bound_ok = match (fisher_mu, thresholds) {
        (Some(_), Some(t)) => Some(sup_norm <= t.k0 + diag.k0_tol),
        _ => None,
    };

    let energy_residual = fisher_mu.and_then(|mu| {
        let table = params.tabulate(g.spacing(), config.tail_tolerance).ok()?;
        let reach = table.radius() + g.spacing();
        let (a, b) = (lo + reach, hi - reach);
        if a >= b {
            return None;
        }
        energy_audit(profile, config.frame_speed, mu, &table, a, b).ok()
    });
    let (edge_slope_left, edge_slope_right) = edge_slopes(profile, 0.05);

    WaveReport {
        c_measured,
        c_fit_residual,
        c_reliable,
        sup_norm,
        deriv_sup,
        l2_grad,
        left_state,
        right_state,
        condition_8,
        condition_12,
        k0_bound_ok,
        energy_residual,
        steady_residual: trajectory.steady_residual,
        edge_slope_left,
        edge_slope_right,
    }
}
