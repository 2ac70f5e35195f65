//! Dispersal kernels: evaluation, validation of the standing hypotheses,
//! moments, Fourier transforms and discretization for convolution.
//!
//! Fourier convention: `φ̂(k) = ∫ φ(z) e^{-ikz} dz`, no `2π` prefactor, so a
//! unit-mass kernel has `φ̂(0) = 1`. This convention is used everywhere in the
//! crate.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::quadrature::{self, QuadratureError, Tolerance};

/// Mass tolerance for kernels with a closed-form density.
pub const ANALYTIC_MASS_TOL: f64 = 1e-10;
/// Mass tolerance for sampled kernels.
pub const TABULATED_MASS_TOL: f64 = 1e-8;
/// Default largest truncation radius accepted by [`Kernel::tabulate`].
pub const DEFAULT_RADIUS_CAP: f64 = 2000.0;

const MOMENT_REL_TOL: f64 = 1e-12;
/// Tail mass ignored when a transform is computed by quadrature.
const FOURIER_TAIL_MASS: f64 = 1e-13;

/// The four standing hypotheses on a dispersal kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    Nonnegative,
    PositiveAtOrigin,
    UnitMass,
    FiniteSecondMoment,
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Hypothesis::Nonnegative => "nonnegativity (phi >= 0)",
            Hypothesis::PositiveAtOrigin => "positivity at the origin (phi(0) > 0)",
            Hypothesis::UnitMass => "unit mass (integral of phi = 1)",
            Hypothesis::FiniteSecondMoment => "finite second moment (integral of z^2 phi < inf)",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("invalid kernel: violates {hypothesis}")]
    InvalidKernel { hypothesis: Hypothesis },
    #[error("moment of order {order} diverges")]
    DivergentMoment { order: u32 },
    #[error("truncation radius {radius} exceeds the cap {cap}")]
    TruncationFailure { radius: f64, cap: f64 },
    #[error("invalid kernel parameter: {0}")]
    InvalidParameter(String),
    #[error("cannot parse kernel spec `{spec}`: {reason}")]
    Parse { spec: String, reason: String },
    #[error("cannot read kernel table {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Kernel density sampled on a symmetric grid `{-nh, ..., nh}`, linearly
/// interpolated between samples and zero outside.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSamples {
    spacing: f64,
    values: Vec<f64>,
}

impl KernelSamples {
    /// `values` has odd length `2n + 1`; entry `j` is the density at `(j - n) * spacing`.
    pub fn new(spacing: f64, values: Vec<f64>) -> Result<Self, KernelError> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(KernelError::InvalidParameter(format!(
                "sample spacing must be positive, got {spacing}"
            )));
        }
        if values.len() % 2 == 0 || values.len() < 3 {
            return Err(KernelError::InvalidParameter(format!(
                "need an odd number (>= 3) of samples on a symmetric grid, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(KernelError::InvalidParameter("non-finite sample".into()));
        }
        Ok(Self { spacing, values })
    }

    /// Reads a two-column CSV `offset,density`. A non-numeric first line is
    /// treated as a header. Offsets must be uniformly spaced and symmetric.
    pub fn from_csv(path: &Path) -> Result<Self, KernelError> {
        let text = std::fs::read_to_string(path).map_err(|source| KernelError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let bad = |reason: String| KernelError::Parse {
            spec: path.display().to_string(),
            reason,
        };
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let (Some(a), Some(b)) = (cols.next(), cols.next()) else {
                return Err(bad(format!("line {}: expected two columns", lineno + 1)));
            };
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(z), Ok(v)) => rows.push((z, v)),
                _ if rows.is_empty() => continue, // header
                _ => return Err(bad(format!("line {}: not numeric", lineno + 1))),
            }
        }
        if rows.len() < 3 {
            return Err(bad("fewer than three samples".into()));
        }
        let spacing = rows[1].0 - rows[0].0;
        let n = (rows.len() - 1) / 2;
        for (j, &(z, _)) in rows.iter().enumerate() {
            let expected = (j as f64 - n as f64) * spacing;
            if (z - expected).abs() > 1e-9 * spacing.max(1.0) {
                return Err(bad(format!(
                    "offset {z} breaks the symmetric uniform grid (expected {expected})"
                )));
            }
        }
        Self::new(spacing, rows.into_iter().map(|(_, v)| v).collect())
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn half_count(&self) -> usize {
        (self.values.len() - 1) / 2
    }

    pub fn radius(&self) -> f64 {
        self.half_count() as f64 * self.spacing
    }

    fn node(&self, j: usize) -> f64 {
        (j as f64 - self.half_count() as f64) * self.spacing
    }

    fn eval(&self, z: f64) -> f64 {
        let r = self.radius();
        if !(z >= -r && z <= r) {
            return 0.0;
        }
        let pos = (z + r) / self.spacing;
        let j = (pos.floor() as usize).min(self.values.len() - 2);
        let t = pos - j as f64;
        self.values[j] * (1.0 - t) + self.values[j + 1] * t
    }

    fn is_even(&self) -> bool {
        let v = &self.values;
        (0..v.len() / 2).all(|j| v[j] == v[v.len() - 1 - j])
    }
}

/// A dispersal kernel φ.
#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    /// Uniform density `1/(2a)` on `[-a, a]`.
    TopHat { halfwidth: f64 },
    Gaussian { sigma: f64 },
    /// `e^{-|z|/b} / (2b)`.
    Laplace { scale: f64 },
    /// `(p-1)/2 · (1+|z|)^{-p}`; unit mass for `p > 1`, finite second moment for `p > 3`.
    PowerTail { exponent: f64 },
    Tabulated(KernelSamples),
}

fn positive(name: &str, v: f64) -> Result<f64, KernelError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(KernelError::InvalidParameter(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

impl Kernel {
    pub fn top_hat(halfwidth: f64) -> Result<Self, KernelError> {
        Ok(Kernel::TopHat {
            halfwidth: positive("a", halfwidth)?,
        })
    }

    pub fn gaussian(sigma: f64) -> Result<Self, KernelError> {
        Ok(Kernel::Gaussian {
            sigma: positive("sigma", sigma)?,
        })
    }

    pub fn laplace(scale: f64) -> Result<Self, KernelError> {
        Ok(Kernel::Laplace {
            scale: positive("b", scale)?,
        })
    }

    /// Exponents in `(1, 3]` build a normalizable kernel that fails validation.
    pub fn power_tail(exponent: f64) -> Result<Self, KernelError> {
        if !(exponent > 1.0 && exponent.is_finite()) {
            return Err(KernelError::InvalidParameter(format!(
                "power-tail exponent must exceed 1 to normalize, got {exponent}"
            )));
        }
        Ok(Kernel::PowerTail { exponent })
    }

    /// Parses `tophat:a=1`, `gaussian:sigma=0.5`, `laplace:b=1`, `powertail:p=5`
    /// or `tabulated:file=PATH`.
    pub fn from_spec(spec: &str) -> Result<Self, KernelError> {
        let bad = |reason: &str| KernelError::Parse {
            spec: spec.to_string(),
            reason: reason.to_string(),
        };
        let (family, args) = spec.split_once(':').ok_or_else(|| bad("missing `family:`"))?;
        let (key, value) = args
            .split_once('=')
            .ok_or_else(|| bad("expected `key=value`"))?;
        let (key, value) = (key.trim(), value.trim());
        let number = || {
            value
                .parse::<f64>()
                .map_err(|_| bad(&format!("`{value}` is not a number")))
        };
        match (family.trim().to_ascii_lowercase().as_str(), key) {
            ("tophat", "a") => Kernel::top_hat(number()?),
            ("gaussian", "sigma") => Kernel::gaussian(number()?),
            ("laplace", "b") => Kernel::laplace(number()?),
            ("powertail", "p") => Kernel::power_tail(number()?),
            ("tabulated", "file") => Ok(Kernel::Tabulated(KernelSamples::from_csv(Path::new(value))?)),
            _ => Err(bad("unknown family or parameter")),
        }
    }

    pub fn eval(&self, z: f64) -> f64 {
        match self {
            Kernel::TopHat { halfwidth: a } => {
                if z.abs() <= *a {
                    0.5 / a
                } else {
                    0.0
                }
            }
            Kernel::Gaussian { sigma } => {
                let s = z / sigma;
                (-0.5 * s * s).exp() / (sigma * (2.0 * PI).sqrt())
            }
            Kernel::Laplace { scale } => (-z.abs() / scale).exp() / (2.0 * scale),
            Kernel::PowerTail { exponent: p } => 0.5 * (p - 1.0) * (1.0 + z.abs()).powf(-p),
            Kernel::Tabulated(s) => s.eval(z),
        }
    }

    /// Closed interval outside which φ vanishes (infinite for full-line families).
    pub fn support(&self) -> (f64, f64) {
        match self {
            Kernel::TopHat { halfwidth } => (-halfwidth, *halfwidth),
            Kernel::Tabulated(s) => (-s.radius(), s.radius()),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Points where φ fails to be smooth; quadratures split there.
    fn breakpoints(&self) -> Vec<f64> {
        match self {
            Kernel::TopHat { halfwidth } => vec![-halfwidth, 0.0, *halfwidth],
            Kernel::Gaussian { .. } | Kernel::Laplace { .. } | Kernel::PowerTail { .. } => vec![0.0],
            Kernel::Tabulated(s) => (0..s.values.len()).map(|j| s.node(j)).collect(),
        }
    }

    pub fn is_even(&self) -> bool {
        match self {
            Kernel::Tabulated(s) => s.is_even(),
            _ => true,
        }
    }

    /// True when [`Kernel::fourier`] uses a closed form.
    pub fn has_closed_form_transform(&self) -> bool {
        matches!(
            self,
            Kernel::TopHat { .. } | Kernel::Gaussian { .. } | Kernel::Laplace { .. }
        )
    }

    /// Two-sided mass outside `[-radius, radius]`.
    pub fn tail_mass(&self, radius: f64) -> f64 {
        let r = radius.max(0.0);
        match self {
            Kernel::TopHat { halfwidth } => (1.0 - r / halfwidth).max(0.0),
            Kernel::Gaussian { sigma } => erfc(r / (sigma * SQRT_2)),
            Kernel::Laplace { scale } => (-r / scale).exp(),
            Kernel::PowerTail { exponent: p } => (1.0 + r).powf(1.0 - p),
            Kernel::Tabulated(s) => {
                if r >= s.radius() {
                    return 0.0;
                }
                let total = self.integrate_line(|z| self.eval(z)).unwrap_or(1.0);
                let inner = quadrature::integrate_pieces(
                    |z| self.eval(z),
                    &clip_points(&self.breakpoints(), -r, r),
                    Tolerance::new(1e-15, 1e-13),
                )
                .map(|q| q.value)
                .unwrap_or(total);
                (total - inner).max(0.0)
            }
        }
    }

    /// Smallest radius whose two-sided tail mass is at most `tol`.
    pub fn tail_radius(&self, tol: f64) -> f64 {
        match self {
            Kernel::TopHat { halfwidth } => *halfwidth,
            Kernel::Tabulated(s) => s.radius(),
            Kernel::Laplace { scale } => scale * (1.0 / tol).ln().max(0.0),
            Kernel::PowerTail { exponent: p } => (tol.powf(-1.0 / (p - 1.0)) - 1.0).max(0.0),
            Kernel::Gaussian { sigma } => {
                if tol >= 1.0 {
                    return 0.0;
                }
                // erfc is monotone; bracket then bisect.
                let mut hi = *sigma;
                while self.tail_mass(hi) > tol {
                    hi *= 2.0;
                }
                let mut lo = 0.0;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.tail_mass(mid) > tol {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= 1e-14 * hi {
                        break;
                    }
                }
                hi
            }
        }
    }

    fn integrate_line<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64, QuadratureError> {
        let tol = Tolerance::new(1e-300, MOMENT_REL_TOL);
        let bps = self.breakpoints();
        let (lo, hi) = self.support();
        let mut total = 0.0;
        if lo.is_finite() {
            total += quadrature::integrate_pieces(&f, &clip_points(&bps, lo, hi), tol)?.value;
        } else {
            let first = bps[0];
            let last = *bps.last().expect("breakpoints are never empty");
            total += quadrature::integrate_to_infinity(|y| f(-y), -first, tol)?.value;
            total += quadrature::integrate_pieces(&f, &bps, tol)?.value;
            total += quadrature::integrate_to_infinity(&f, last, tol)?.value;
        }
        Ok(total)
    }

    /// Total mass by quadrature.
    pub fn mass(&self) -> Result<f64, KernelError> {
        Ok(self.integrate_line(|z| self.eval(z))?)
    }

    /// `m_i = ∫ |z|^i φ(z) dz`, in closed form for the analytic families.
    pub fn moment(&self, order: u32) -> Result<f64, KernelError> {
        let i = order as f64;
        match self {
            Kernel::TopHat { halfwidth: a } => Ok(a.powi(order as i32) / (i + 1.0)),
            Kernel::Gaussian { sigma } => Ok(sigma.powi(order as i32)
                * (0.5 * i * 2f64.ln() + ln_gamma(0.5 * (i + 1.0))).exp()
                / PI.sqrt()),
            Kernel::Laplace { scale } => {
                Ok(scale.powi(order as i32) * (1..=order).map(f64::from).product::<f64>())
            }
            Kernel::PowerTail { exponent: p } => {
                if *p <= i + 1.0 {
                    return Err(KernelError::DivergentMoment { order });
                }
                // i! Γ(p-i-1) / Γ(p-1)
                Ok((ln_gamma(i + 1.0) + ln_gamma(p - i - 1.0) - ln_gamma(p - 1.0)).exp())
            }
            Kernel::Tabulated(_) => self.moment_by_quadrature(order),
        }
    }

    /// Moment by adaptive quadrature, regardless of family.
    pub fn moment_by_quadrature(&self, order: u32) -> Result<f64, KernelError> {
        if let Kernel::PowerTail { exponent: p } = self {
            if *p <= order as f64 + 1.0 {
                return Err(KernelError::DivergentMoment { order });
            }
        }
        Ok(self.integrate_line(|z| {
            let v = self.eval(z);
            if v == 0.0 {
                0.0
            } else {
                z.abs().powi(order as i32) * v
            }
        })?)
    }

    /// `φ̂(k) = ∫ φ(z) e^{-ikz} dz`.
    pub fn fourier(&self, k: f64) -> Complex64 {
        match self {
            Kernel::TopHat { halfwidth: a } => {
                let x = k * a;
                if x.abs() < 1e-8 {
                    Complex64::new(1.0 - x * x / 6.0, 0.0)
                } else {
                    Complex64::new(x.sin() / x, 0.0)
                }
            }
            Kernel::Gaussian { sigma } => Complex64::new((-0.5 * sigma * sigma * k * k).exp(), 0.0),
            Kernel::Laplace { scale } => Complex64::new(1.0 / (1.0 + scale * scale * k * k), 0.0),
            Kernel::PowerTail { .. } | Kernel::Tabulated(_) => self
                .fourier_by_quadrature(k)
                .expect("oscillatory panels of a validated kernel converge"),
        }
    }

    /// Transform by piecewise adaptive quadrature over the support, truncated
    /// where the remaining tail mass is below `1e-13`.
    pub fn fourier_by_quadrature(&self, k: f64) -> Result<Complex64, KernelError> {
        let (lo, hi) = self.support();
        let (lo, hi) = if lo.is_finite() {
            (lo, hi)
        } else {
            let r = self.tail_radius(FOURIER_TAIL_MASS);
            (-r, r)
        };
        let mut points = clip_points(&self.breakpoints(), lo, hi);
        // At most one period per panel keeps the integrand non-oscillatory.
        let panel = if k == 0.0 { f64::INFINITY } else { (2.0 * PI / k.abs()).min(4.0) };
        points = refine_points(&points, panel);
        let tol = Tolerance::new(1e-16, 1e-12);
        let re = quadrature::integrate_pieces(|z| self.eval(z) * (k * z).cos(), &points, tol)?.value;
        // Evaluated even for even kernels so the cancellation is measured.
        let im = quadrature::integrate_pieces(|z| -self.eval(z) * (k * z).sin(), &points, tol)?.value;
        Ok(Complex64::new(re, im))
    }

    /// Checks the four standing hypotheses.
    pub fn validate(&self) -> ValidationReport {
        let nonnegative = match self {
            Kernel::Tabulated(s) => s.values.iter().all(|&v| v >= 0.0),
            _ => true,
        };
        let at_origin = self.eval(0.0);
        let mass = self.mass().unwrap_or(f64::NAN);
        let mass_tol = match self {
            Kernel::Tabulated(_) => TABULATED_MASS_TOL,
            _ => ANALYTIC_MASS_TOL,
        };
        let second_moment = self.moment(2).ok();
        ValidationReport {
            nonnegative,
            positive_at_origin: at_origin > 0.0,
            unit_mass: (mass - 1.0).abs() <= mass_tol,
            finite_second_moment: second_moment.is_some_and(f64::is_finite),
            mass,
            second_moment,
        }
    }

    /// Samples the kernel at spacing `spacing` for discrete convolution.
    pub fn tabulate(&self, spacing: f64, tail_tolerance: f64) -> Result<TabulatedKernel, KernelError> {
        self.tabulate_with_cap(spacing, tail_tolerance, DEFAULT_RADIUS_CAP)
    }

    pub fn tabulate_with_cap(
        &self,
        spacing: f64,
        tail_tolerance: f64,
        radius_cap: f64,
    ) -> Result<TabulatedKernel, KernelError> {
        positive("spacing", spacing)?;
        if !(tail_tolerance > 0.0 && tail_tolerance < 1.0) {
            return Err(KernelError::InvalidParameter(format!(
                "tail tolerance must lie in (0, 1), got {tail_tolerance}"
            )));
        }
        let radius = self.tail_radius(tail_tolerance);
        if radius > radius_cap {
            return Err(KernelError::TruncationFailure {
                radius,
                cap: radius_cap,
            });
        }
        // Round up to whole cells; the slack guards against 1/0.01 = 100.000...01.
        let half = ((radius / spacing) - 1e-9).ceil().max(0.0) as usize;
        let grid_radius = half as f64 * spacing;
        let mut weights: Vec<f64> = (0..=2 * half)
            .map(|j| {
                let z = (j as f64 - half as f64) * spacing;
                let trapezoid = if j == 0 || j == 2 * half { 0.5 } else { 1.0 };
                trapezoid * self.eval(z) * spacing
            })
            .collect();
        if half == 0 {
            weights[0] = 1.0;
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(KernelError::InvalidKernel {
                hypothesis: Hypothesis::PositiveAtOrigin,
            });
        }
        for w in &mut weights {
            *w /= total;
        }
        let residual = 1.0 - weights.iter().sum::<f64>();
        weights[half] += residual;
        Ok(TabulatedKernel {
            spacing,
            half_width: half,
            weights,
            tail_mass: self.tail_mass(grid_radius),
        })
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::TopHat { halfwidth } => write!(f, "tophat:a={halfwidth}"),
            Kernel::Gaussian { sigma } => write!(f, "gaussian:sigma={sigma}"),
            Kernel::Laplace { scale } => write!(f, "laplace:b={scale}"),
            Kernel::PowerTail { exponent } => write!(f, "powertail:p={exponent}"),
            Kernel::Tabulated(s) => write!(f, "tabulated:<{} samples, h={}>", s.values.len(), s.spacing),
        }
    }
}

impl FromStr for Kernel {
    type Err = KernelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Kernel::from_spec(s)
    }
}

fn clip_points(points: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let mut out = vec![lo];
    out.extend(points.iter().copied().filter(|&p| p > lo && p < hi));
    out.push(hi);
    out
}

fn refine_points(points: &[f64], max_len: f64) -> Vec<f64> {
    let mut out = vec![points[0]];
    for w in points.windows(2) {
        let n = ((w[1] - w[0]) / max_len).ceil().max(1.0) as usize;
        for j in 1..=n {
            out.push(w[0] + (w[1] - w[0]) * j as f64 / n as f64);
        }
    }
    out
}

/// Pass/fail for each standing hypothesis plus the measured quantities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub nonnegative: bool,
    pub positive_at_origin: bool,
    pub unit_mass: bool,
    pub finite_second_moment: bool,
    pub mass: f64,
    /// `None` when the second moment diverges.
    pub second_moment: Option<f64>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.first_failure().is_none()
    }

    pub fn first_failure(&self) -> Option<Hypothesis> {
        [
            (self.nonnegative, Hypothesis::Nonnegative),
            (self.positive_at_origin, Hypothesis::PositiveAtOrigin),
            (self.unit_mass, Hypothesis::UnitMass),
            (self.finite_second_moment, Hypothesis::FiniteSecondMoment),
        ]
        .into_iter()
        .find(|(ok, _)| !ok)
        .map(|(_, h)| h)
    }

    /// `Err(InvalidKernel)` naming the first violated hypothesis.
    pub fn check(&self) -> Result<(), KernelError> {
        match self.first_failure() {
            None => Ok(()),
            Some(hypothesis) => Err(KernelError::InvalidKernel { hypothesis }),
        }
    }
}

/// Kernel quadrature weights on offsets `-R, ..., R` (`R = half_width · spacing`).
///
/// Weights are trapezoid-weighted samples renormalized to unit discrete mass,
/// so that convolution maps constants to themselves. `tail_mass` records the
/// continuous mass that fell outside `[-R, R]` before renormalization.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedKernel {
    spacing: f64,
    half_width: usize,
    weights: Vec<f64>,
    tail_mass: f64,
}

impl TabulatedKernel {
    /// Builds a table directly from weights (odd length, centered).
    pub fn from_weights(spacing: f64, weights: Vec<f64>) -> Result<Self, KernelError> {
        positive("spacing", spacing)?;
        if weights.len() % 2 == 0 {
            return Err(KernelError::InvalidParameter("weights must have odd length".into()));
        }
        Ok(Self {
            spacing,
            half_width: weights.len() / 2,
            weights,
            tail_mass: 0.0,
        })
    }

    /// The delta kernel: convolution is the identity.
    pub fn identity(spacing: f64) -> Self {
        Self {
            spacing,
            half_width: 0,
            weights: vec![1.0],
            tail_mass: 0.0,
        }
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Number of cells on each side of the center.
    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn radius(&self) -> f64 {
        self.half_width as f64 * self.spacing
    }

    /// Weight at offset `(j - half_width) · spacing`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn discrete_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Discrete transform `Σ w_j e^{-ik z_j}` of the table.
    pub fn fourier(&self, k: f64) -> Complex64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(j, &w)| {
                let z = (j as f64 - self.half_width as f64) * self.spacing;
                Complex64::from_polar(w, -k * z)
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn parses_every_family() {
        assert_eq!(Kernel::from_spec("tophat:a=1").unwrap(), Kernel::TopHat { halfwidth: 1.0 });
        assert_eq!(
            Kernel::from_spec("gaussian:sigma=0.5").unwrap(),
            Kernel::Gaussian { sigma: 0.5 }
        );
        assert_eq!(Kernel::from_spec("laplace:b=1").unwrap(), Kernel::Laplace { scale: 1.0 });
        assert_eq!(
            Kernel::from_spec("powertail:p=5").unwrap(),
            Kernel::PowerTail { exponent: 5.0 }
        );
        assert!(Kernel::from_spec("tophat:b=1").is_err());
        assert!(Kernel::from_spec("gaussian").is_err());
        assert!(Kernel::from_spec("gaussian:sigma=-1").is_err());
        assert!(Kernel::from_spec("powertail:p=1").is_err());
    }

    #[test]
    fn display_round_trips() {
        for spec in ["tophat:a=1.5", "gaussian:sigma=0.25", "laplace:b=2", "powertail:p=5"] {
            let k = Kernel::from_spec(spec).unwrap();
            assert_eq!(k.to_string(), spec);
        }
    }

    #[test]
    fn eval_examples() {
        let top = Kernel::top_hat(1.0).unwrap();
        assert_eq!(top.eval(0.0), 0.5);
        assert_eq!(top.eval(2.0), 0.0);
        assert_relative_eq!(Kernel::power_tail(5.0).unwrap().eval(0.0), 2.0, max_relative = 1e-15);
    }

    #[test]
    fn validation_examples() {
        let report = Kernel::top_hat(1.0).unwrap().validate();
        assert!(report.passed(), "{report:?}");
        let report = Kernel::power_tail(2.5).unwrap().validate();
        assert_eq!(report.first_failure(), Some(Hypothesis::FiniteSecondMoment));
        assert!(report.unit_mass);
        assert!(matches!(
            report.check(),
            Err(KernelError::InvalidKernel {
                hypothesis: Hypothesis::FiniteSecondMoment
            })
        ));
        let samples = KernelSamples::new(0.5, vec![0.0, 0.5, 1.5, 0.5, -0.5]).unwrap();
        let report = Kernel::Tabulated(samples).validate();
        assert_eq!(report.first_failure(), Some(Hypothesis::Nonnegative));
    }

    #[test]
    fn tabulated_samples_interpolate() {
        // Triangle on [-1, 1] sampled at h = 0.5: unit mass, m2 = 1/6.
        let s = KernelSamples::new(0.5, vec![0.0, 0.5, 1.0, 0.5, 0.0]).unwrap();
        let k = Kernel::Tabulated(s);
        assert_relative_eq!(k.eval(0.25), 0.75, max_relative = 1e-15);
        assert_eq!(k.eval(1.5), 0.0);
        assert!(k.validate().passed());
        assert_relative_eq!(k.moment(2).unwrap(), 1.0 / 6.0, max_relative = 1e-12);
        // sinc^2 transform of the triangle.
        let kk = 3.0f64;
        let exact = (2.0 * (1.0 - kk.cos())) / (kk * kk);
        assert_relative_eq!(k.fourier(kk).re, exact, max_relative = 1e-10);
    }

    #[test]
    fn divergent_moments_are_errors() {
        let k = Kernel::power_tail(3.0).unwrap();
        assert!(matches!(k.moment(2), Err(KernelError::DivergentMoment { order: 2 })));
        assert!(k.moment(1).is_ok());
        assert!(matches!(
            k.moment_by_quadrature(2),
            Err(KernelError::DivergentMoment { order: 2 })
        ));
    }

    #[test]
    fn tabulation_of_compact_kernel() {
        let t = Kernel::top_hat(1.0).unwrap().tabulate(0.01, 1e-12).unwrap();
        assert_eq!(t.half_width(), 100);
        assert_relative_eq!(t.radius(), 1.0, max_relative = 1e-12);
        assert_eq!(t.tail_mass(), 0.0);
        assert!((t.discrete_mass() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn truncation_cap_is_enforced() {
        let k = Kernel::power_tail(3.5).unwrap();
        let err = k.tabulate_with_cap(0.1, 1e-12, 100.0).unwrap_err();
        assert!(matches!(err, KernelError::TruncationFailure { .. }));
        assert!(k.tabulate(0.1, 0.0).is_err());
        assert!(k.tabulate(-0.1, 1e-3).is_err());
    }

    #[test]
    fn csv_loading() {
        let dir = std::env::temp_dir().join(format!("nlf-kernel-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("tri.csv");
        std::fs::write(&path, "offset,density\n-1,0\n-0.5,0.5\n0,1\n0.5,0.5\n1,0\n").unwrap();
        let spec = format!("tabulated:file={}", path.display());
        let k = Kernel::from_spec(&spec).unwrap();
        assert!(k.validate().passed());
        std::fs::write(&path, "-1,0\n0,1\n0.7,0\n").unwrap();
        assert!(Kernel::from_spec(&spec).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }
}
