//! Time evolution of `∂t u = ∂xx u + c ∂x u + f(u, φ ∗ u)` on `[−L, L)`.
//!
//! With `c = 0` this is the lab-frame equation. With `c ≠ 0` the coordinates
//! travel at speed `c`, and a stationary profile solves the wave equation
//! `−cu′ = u″ + f(u, φ ∗ u)`.
//!
//! Spatial discretization: second-order centered differences for `u″` and
//! `u′`, ghost values equal to the pads, and the same pads extending `u` for
//! the convolution. With pads matching a uniform state, `u ≡ 0`, `u ≡ 1`
//! (and `u ≡ α` in the bistable mode) are exact discrete equilibria.
//!
//! Two steppers: classical RK4 (default, time accurate) and a first-order
//! IMEX Euler that treats diffusion and advection implicitly. IMEX Euler
//! has the same discrete steady states as RK4 and is meant for relaxation.

use serde::Serialize;
use thiserror::Error;

use crate::analysis::{self, AnalysisError};
use crate::convolution::{ConvolutionError, Convolver, Method};
use crate::diagnostics;
use crate::grid::{Field, Grid, GridError};
use crate::kernel::{Kernel, KernelError, TabulatedKernel};
use crate::tridiagonal::TridiagonalLu;

/// Default kernel tail mass discarded by tabulation.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-10;
/// Level whose rightmost crossing defines the front.
pub const FRONT_LEVEL: f64 = 0.5;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("time step {dt} violates the {stepper:?} stability bound (largest stable step about {limit:e})")]
    UnstableTimeStep { dt: f64, limit: f64, stepper: Stepper },
    #[error("blow-up at step {step} (t = {time}): {reason}")]
    BlowUp { step: usize, time: f64, reason: String },
    #[error(transparent)]
    Convolution(#[from] ConvolutionError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reaction {
    /// `µ u (1 − φ ∗ u)`
    NonlocalFisher { mu: f64 },
    /// `µ u (1 − u)`; the kernel is ignored.
    LocalFisher { mu: f64 },
    /// `u (u − α)(1 − φ ∗ u)`
    NonlocalBistable { alpha: f64 },
}

impl Reaction {
    #[inline]
    pub fn rate(&self, u: f64, conv: f64) -> f64 {
        match *self {
            Reaction::NonlocalFisher { mu } => mu * u * (1.0 - conv),
            Reaction::LocalFisher { mu } => mu * u * (1.0 - u),
            Reaction::NonlocalBistable { alpha } => u * (u - alpha) * (1.0 - conv),
        }
    }

    pub fn mu(&self) -> Option<f64> {
        match *self {
            Reaction::NonlocalFisher { mu } | Reaction::LocalFisher { mu } => Some(mu),
            Reaction::NonlocalBistable { .. } => None,
        }
    }

    pub fn is_nonlocal(&self) -> bool {
        !matches!(self, Reaction::LocalFisher { .. })
    }

    /// Rough bound on `|∂f/∂u|` near the uniform states, for explicit stability.
    fn stiffness(&self) -> f64 {
        match *self {
            Reaction::NonlocalFisher { mu } | Reaction::LocalFisher { mu } => mu,
            Reaction::NonlocalBistable { .. } => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub reaction: Reaction,
    /// Required for the nonlocal reactions, ignored by `LocalFisher`.
    pub kernel: Option<Kernel>,
}

impl ModelParams {
    pub fn nonlocal_fisher(mu: f64, kernel: Kernel) -> Self {
        Self {
            reaction: Reaction::NonlocalFisher { mu },
            kernel: Some(kernel),
        }
    }

    pub fn local_fisher(mu: f64) -> Self {
        Self {
            reaction: Reaction::LocalFisher { mu },
            kernel: None,
        }
    }

    pub fn nonlocal_bistable(alpha: f64, kernel: Kernel) -> Self {
        Self {
            reaction: Reaction::NonlocalBistable { alpha },
            kernel: Some(kernel),
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        match self.reaction {
            Reaction::NonlocalFisher { mu } | Reaction::LocalFisher { mu } => {
                if !(mu > 0.0 && mu.is_finite()) {
                    return Err(SolverError::InvalidModel(format!("mu must be positive, got {mu}")));
                }
            }
            Reaction::NonlocalBistable { alpha } => {
                if !(alpha > 0.0 && alpha < 1.0) {
                    return Err(SolverError::InvalidModel(format!(
                        "alpha must lie in (0, 1), got {alpha}"
                    )));
                }
            }
        }
        if self.reaction.is_nonlocal() {
            let kernel = self
                .kernel
                .as_ref()
                .ok_or_else(|| SolverError::InvalidModel("nonlocal reaction needs a kernel".into()))?;
            kernel.validate().check()?;
        }
        Ok(())
    }

    /// Kernel moment `m₂`, zero for the local reaction.
    pub fn m2(&self) -> Result<f64, SolverError> {
        match (&self.reaction, &self.kernel) {
            (Reaction::LocalFisher { .. }, _) | (_, None) => Ok(0.0),
            (_, Some(k)) => Ok(k.moment(2)?),
        }
    }

    /// `c*, K₀, c̄` for the Fisher modes; `None` for the bistable mode.
    pub fn thresholds(&self) -> Result<Option<analysis::Thresholds>, SolverError> {
        Ok(match (&self.reaction, &self.kernel) {
            (Reaction::LocalFisher { mu }, _) => Some(analysis::Thresholds::local(*mu)?),
            (Reaction::NonlocalFisher { mu }, Some(k)) => Some(analysis::Thresholds::new(k, *mu)?),
            _ => None,
        })
    }

    /// Tabulates the kernel at `spacing`, or the identity for the local reaction.
    pub fn tabulate(&self, spacing: f64, tail_tolerance: f64) -> Result<TabulatedKernel, SolverError> {
        match (&self.reaction, &self.kernel) {
            (Reaction::LocalFisher { .. }, _) => Ok(TabulatedKernel::identity(spacing)),
            (_, Some(k)) => Ok(k.tabulate(spacing, tail_tolerance)?),
            (_, None) => Err(SolverError::InvalidModel("nonlocal reaction needs a kernel".into())),
        }
    }
}

/// Free-function form of [`Reaction::rate`].
pub fn reaction_term(u: f64, conv: f64, params: &ModelParams) -> f64 {
    params.reaction.rate(u, conv)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Stepper {
    #[default]
    Rk4,
    ImexEuler,
}

impl std::str::FromStr for Stepper {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rk4" => Ok(Stepper::Rk4),
            "imex-euler" | "imex" => Ok(Stepper::ImexEuler),
            _ => Err(format!("unknown stepper `{s}` (expected rk4 or imex-euler)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    /// Frame speed `c`; zero for the lab frame.
    pub frame_speed: f64,
    pub dt: f64,
    pub t_final: f64,
    pub left_pad: f64,
    pub right_pad: f64,
    /// Stop once `‖Δu‖∞ / dt` falls below this.
    pub steady_tol: f64,
    /// Steps between summary samples.
    pub record_every: usize,
    /// Steps between stored full profiles; `0` stores none.
    pub snapshot_every: usize,
    pub stepper: Stepper,
    /// Shift the profile back toward the center when a lab-frame front nears a boundary.
    pub recenter: bool,
    pub tail_tolerance: f64,
    /// Abort when `|u|` exceeds this; `None` uses `10 K₀` (10 without a `K₀`).
    pub blowup_threshold: Option<f64>,
}

impl SimConfig {
    /// Lab-frame defaults for a grid: RK4, `dt` from [`default_dt`], pads `(1, 0)`.
    pub fn lab(grid: &Grid, reaction: &Reaction, t_final: f64) -> Self {
        let stepper = Stepper::Rk4;
        Self {
            frame_speed: 0.0,
            dt: default_dt(grid, reaction, 0.0, stepper),
            t_final,
            left_pad: 1.0,
            right_pad: 0.0,
            steady_tol: 0.0,
            record_every: 1,
            snapshot_every: 0,
            stepper,
            recenter: true,
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
            blowup_threshold: None,
        }
    }

    pub fn validate(&self, grid: &Grid, reaction: &Reaction) -> Result<(), SolverError> {
        let bad = |m: String| Err(SolverError::InvalidConfig(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return bad(format!("t_final must be nonnegative, got {}", self.t_final));
        }
        if !(self.frame_speed.is_finite() && self.left_pad.is_finite() && self.right_pad.is_finite()) {
            return bad("frame speed and pads must be finite".into());
        }
        if !(self.steady_tol >= 0.0) {
            return bad(format!("steady_tol must be nonnegative, got {}", self.steady_tol));
        }
        if self.record_every == 0 {
            return bad("record_every must be at least 1".into());
        }
        if !(self.tail_tolerance > 0.0 && self.tail_tolerance < 1.0) {
            return bad(format!("tail tolerance must lie in (0, 1), got {}", self.tail_tolerance));
        }
        if !stable_time_step(self.dt, grid, reaction, self.frame_speed, self.stepper) {
            return Err(SolverError::UnstableTimeStep {
                dt: self.dt,
                limit: default_dt(grid, reaction, self.frame_speed, self.stepper),
                stepper: self.stepper,
            });
        }
        Ok(())
    }
}

fn rk4_amplification(re: f64, im: f64) -> f64 {
    // |1 + z + z²/2 + z³/6 + z⁴/24|
    let z = num_complex::Complex64::new(re, im);
    let z2 = z * z;
    (1.0 + z + z2 / 2.0 + z2 * z / 6.0 + z2 * z2 / 24.0).norm()
}

/// Checks `dt` against the stepper's stability region on the symbol of the
/// discrete operator, `−(4/Δx²) sin²(θ/2) + i (c/Δx) sin θ`, shifted by the
/// reaction stiffness. Positive (physical) growth is not an instability.
pub fn stable_time_step(dt: f64, grid: &Grid, reaction: &Reaction, frame_speed: f64, stepper: Stepper) -> bool {
    let h = grid.spacing();
    let kappa = reaction.stiffness();
    match stepper {
        Stepper::ImexEuler => dt * kappa <= 1.0,
        Stepper::Rk4 => {
            (0..=1024).all(|j| {
                let theta = std::f64::consts::PI * j as f64 / 1024.0;
                let s = (0.5 * theta).sin();
                let re = -4.0 / (h * h) * s * s;
                let im = frame_speed / h * theta.sin();
                [0.0, -kappa].iter().all(|shift| rk4_amplification(dt * (re + shift), dt * im) <= 1.0 + 1e-12)
            })
        }
    }
}

/// Largest value `≤ x` with three significant digits.
fn round_down_3(x: f64) -> f64 {
    let scale = 10f64.powi(x.log10().floor() as i32 - 2);
    (x / scale).floor() * scale
}

/// `0.2 Δx²` for RK4, halved until the stability check passes; `0.5/κ` (capped at 0.01) for IMEX Euler.
/// Rounded down to three significant digits.
pub fn default_dt(grid: &Grid, reaction: &Reaction, frame_speed: f64, stepper: Stepper) -> f64 {
    match stepper {
        Stepper::Rk4 => {
            let h = grid.spacing();
            let mut dt = round_down_3(0.2 * h * h);
            while !stable_time_step(dt, grid, reaction, frame_speed, stepper) {
                dt = round_down_3(0.5 * dt);
            }
            dt
        }
        Stepper::ImexEuler => round_down_3((0.5 / reaction.stiffness()).min(0.01)),
    }
}

/// The discrete right-hand side on one grid with fixed pads and frame speed.
#[derive(Debug)]
pub struct Discretization {
    grid: Grid,
    reaction: Reaction,
    frame_speed: f64,
    left_pad: f64,
    right_pad: f64,
    convolver: Option<Convolver>,
    conv: Vec<f64>,
    tail_mass: f64,
}

impl Discretization {
    pub fn new(
        grid: Grid,
        params: &ModelParams,
        frame_speed: f64,
        (left_pad, right_pad): (f64, f64),
        tail_tolerance: f64,
    ) -> Result<Self, SolverError> {
        params.validate()?;
        let (convolver, tail_mass) = if params.reaction.is_nonlocal() {
            let table = params.tabulate(grid.spacing(), tail_tolerance)?;
            let c = Convolver::new(&grid, &table, Method::Auto)?;
            (Some(c), table.tail_mass())
        } else {
            (None, 0.0)
        };
        Ok(Self {
            grid,
            reaction: params.reaction,
            frame_speed,
            left_pad,
            right_pad,
            convolver,
            conv: vec![0.0; grid.n_points()],
            tail_mass,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn pads(&self) -> (f64, f64) {
        (self.left_pad, self.right_pad)
    }

    /// `φ ∗ u` (or `u` itself for the local reaction).
    pub fn convolution(&mut self, u: &[f64]) -> &[f64] {
        match &mut self.convolver {
            Some(c) => c.apply(u, self.left_pad, self.right_pad, &mut self.conv),
            None => self.conv.copy_from_slice(u),
        }
        &self.conv
    }

    /// Reaction term only.
    pub fn reaction_into(&mut self, u: &[f64], out: &mut [f64]) {
        let reaction = self.reaction;
        let conv = self.convolution(u);
        for ((o, &ui), &ci) in out.iter_mut().zip(u).zip(conv) {
            *o = reaction.rate(ui, ci);
        }
    }

    /// Full operator `u″ + c u′ + f(u, φ ∗ u)`.
    pub fn rhs(&mut self, u: &[f64], out: &mut [f64]) {
        self.reaction_into(u, out);
        let n = u.len();
        let h = self.grid.spacing();
        let diff = 1.0 / (h * h);
        let adv = self.frame_speed / (2.0 * h);
        let at = |j: isize| -> f64 {
            if j < 0 {
                self.left_pad
            } else if j as usize >= n {
                self.right_pad
            } else {
                u[j as usize]
            }
        };
        for j in 0..n {
            let (l, c, r) = (at(j as isize - 1), u[j], at(j as isize + 1));
            out[j] += diff * (r - 2.0 * c + l) + adv * (r - l);
        }
    }

    /// Discrete `L²` norm `(Σ r_j² Δx)^{1/2}` of the operator over nodes `1..N−1`.
    pub fn residual_norm(&mut self, u: &[f64]) -> f64 {
        let mut r = vec![0.0; u.len()];
        self.rhs(u, &mut r);
        let h = self.grid.spacing();
        (r[1..r.len() - 1].iter().map(|v| v * v).sum::<f64>() * h).sqrt()
    }
}

enum StepperState {
    Rk4 {
        k: [Vec<f64>; 4],
        stage: Vec<f64>,
    },
    Imex {
        lu: TridiagonalLu,
        reaction: Vec<f64>,
        /// Boundary contributions of the implicit stencil.
        left_inflow: f64,
        right_inflow: f64,
    },
}

/// Owns the discretization and stepper buffers for one run.
pub struct Solver {
    disc: Discretization,
    config: SimConfig,
    state: StepperState,
    blowup: f64,
    steps: usize,
}

impl Solver {
    pub fn new(grid: Grid, params: &ModelParams, config: &SimConfig) -> Result<Self, SolverError> {
        params.validate()?;
        config.validate(&grid, &params.reaction)?;
        let disc = Discretization::new(
            grid,
            params,
            config.frame_speed,
            (config.left_pad, config.right_pad),
            config.tail_tolerance,
        )?;
        let n = grid.n_points();
        let state = match config.stepper {
            Stepper::Rk4 => StepperState::Rk4 {
                k: [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]],
                stage: vec![0.0; n],
            },
            Stepper::ImexEuler => {
                let h = grid.spacing();
                let dt = config.dt;
                let lower = dt * (1.0 / (h * h) - config.frame_speed / (2.0 * h));
                let upper = dt * (1.0 / (h * h) + config.frame_speed / (2.0 * h));
                let lu = TridiagonalLu::factor(
                    vec![-lower; n - 1],
                    vec![1.0 + 2.0 * dt / (h * h); n],
                    vec![-upper; n - 1],
                );
                StepperState::Imex {
                    lu,
                    reaction: vec![0.0; n],
                    left_inflow: lower * config.left_pad,
                    right_inflow: upper * config.right_pad,
                }
            }
        };
        let blowup = match config.blowup_threshold {
            Some(b) => b,
            None => 10.0 * params.thresholds()?.map_or(1.0, |t| t.k0),
        };
        Ok(Self {
            disc,
            config: config.clone(),
            state,
            blowup,
            steps: 0,
        })
    }

    pub fn discretization(&mut self) -> &mut Discretization {
        &mut self.disc
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.config.dt
    }

    /// Advances `u` by one `dt`.
    pub fn step(&mut self, u: &mut [f64]) -> Result<(), SolverError> {
        let dt = self.config.dt;
        match &mut self.state {
            StepperState::Rk4 { k, stage } => {
                let [k1, k2, k3, k4] = k;
                self.disc.rhs(u, k1);
                for ((s, &ui), &ki) in stage.iter_mut().zip(u.iter()).zip(k1.iter()) {
                    *s = ui + 0.5 * dt * ki;
                }
                self.disc.rhs(stage, k2);
                for ((s, &ui), &ki) in stage.iter_mut().zip(u.iter()).zip(k2.iter()) {
                    *s = ui + 0.5 * dt * ki;
                }
                self.disc.rhs(stage, k3);
                for ((s, &ui), &ki) in stage.iter_mut().zip(u.iter()).zip(k3.iter()) {
                    *s = ui + dt * ki;
                }
                self.disc.rhs(stage, k4);
                for (j, ui) in u.iter_mut().enumerate() {
                    *ui += dt / 6.0 * (k1[j] + 2.0 * (k2[j] + k3[j]) + k4[j]);
                }
            }
            StepperState::Imex {
                lu,
                reaction,
                left_inflow,
                right_inflow,
            } => {
                self.disc.reaction_into(u, reaction);
                for (ui, &r) in u.iter_mut().zip(reaction.iter()) {
                    *ui += dt * r;
                }
                u[0] += *left_inflow;
                let last = u.len() - 1;
                u[last] += *right_inflow;
                lu.solve(u);
            }
        }
        self.steps += 1;
        for &v in u.iter() {
            if !v.is_finite() {
                return Err(self.blow_up("non-finite value".into()));
            }
            if v.abs() > self.blowup {
                return Err(self.blow_up(format!("|u| = {} exceeds {}", v.abs(), self.blowup)));
            }
        }
        Ok(())
    }

    fn blow_up(&self, reason: String) -> SolverError {
        SolverError::BlowUp {
            step: self.steps,
            time: self.time(),
            reason,
        }
    }
}

/// One step of `state` under `params` and `config`.
pub fn step(state: &Field, params: &ModelParams, config: &SimConfig) -> Result<Field, SolverError> {
    let mut solver = Solver::new(*state.grid(), params, config)?;
    let mut out = state.clone();
    solver.step(out.values_mut())?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    FinalTime,
    SteadyTol,
    BlowUp,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowUpInfo {
    pub step: usize,
    pub time: f64,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    /// Lab coordinates in the lab frame, frame coordinates otherwise.
    pub front_x: Option<f64>,
    pub sup_norm: f64,
    pub l2_grad: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub snapshots: Vec<(f64, Field)>,
    pub final_field: Field,
    pub final_time: f64,
    pub steps: usize,
    pub stop_reason: StopReason,
    pub frame_speed: f64,
    pub pads: (f64, f64),
    /// Accumulated recentering shift: lab position = grid position + offset.
    pub offset: f64,
    /// Operator residual of the final profile with the run's pads.
    pub steady_residual: f64,
    /// Last measured `‖Δu‖∞ / dt`.
    pub last_change_rate: f64,
    pub tail_mass: f64,
    /// Set when the run stopped on [`StopReason::BlowUp`]; `final_field` is then the offending state.
    pub blow_up: Option<BlowUpInfo>,
}

fn sample(field: &Field, t: f64, offset: f64) -> Sample {
    let g = field.grid();
    Sample {
        t,
        front_x: diagnostics::front_position(field, FRONT_LEVEL).ok().map(|x| x + offset),
        sup_norm: field.sup_norm(),
        l2_grad: diagnostics::l2_gradient(field, g.x(0), g.x(g.n_points() - 1)),
    }
}

/// Runs until `t_final` or until the change rate drops below `steady_tol`.
pub fn evolve(initial: Field, params: &ModelParams, config: &SimConfig) -> Result<Trajectory, SolverError> {
    let trajectory = evolve_recording(initial, params, config)?;
    match trajectory.blow_up {
        Some(BlowUpInfo { step, time, reason }) => Err(SolverError::BlowUp { step, time, reason }),
        None => Ok(trajectory),
    }
}

/// Like [`evolve`], but a blow-up ends the run with [`StopReason::BlowUp`]
/// and the partial trajectory instead of an error.
pub fn evolve_recording(initial: Field, params: &ModelParams, config: &SimConfig) -> Result<Trajectory, SolverError> {
    let grid = *initial.grid();
    let mut solver = Solver::new(grid, params, config)?;
    let total_steps = (config.t_final / config.dt - 1e-9).ceil().max(0.0) as usize;
    let h = grid.spacing();
    let lab = config.frame_speed == 0.0;

    let mut field = initial;
    let mut prev = field.values().to_vec();
    let mut offset = 0.0;
    let mut samples = vec![sample(&field, 0.0, offset)];
    let mut snapshots = Vec::new();
    if config.snapshot_every > 0 {
        snapshots.push((0.0, field.clone()));
    }
    let mut stop_reason = StopReason::FinalTime;
    let mut change_rate = f64::INFINITY;
    let mut blow_up = None;

    for n in 1..=total_steps {
        prev.copy_from_slice(field.values());
        match solver.step(field.values_mut()) {
            Ok(()) => {}
            Err(SolverError::BlowUp { step, time, reason }) => {
                samples.push(sample(&field, time, offset));
                blow_up = Some(BlowUpInfo { step, time, reason });
                stop_reason = StopReason::BlowUp;
                break;
            }
            Err(e) => return Err(e),
        }
        let t = n as f64 * config.dt;
        change_rate = field
            .values()
            .iter()
            .zip(&prev)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            / config.dt;

        if lab && config.recenter {
            if let Ok(front) = diagnostics::front_position(&field, FRONT_LEVEL) {
                // Keeps the front in [-3L/4, 0] so the leading edge has at least L of room.
                let l = grid.half_length();
                if front > 0.0 || front < -0.75 * l {
                    let cells = ((front + 0.5 * l) / h).round() as isize;
                    field.shift_cells(cells, config.left_pad, config.right_pad);
                    offset += cells as f64 * h;
                }
            }
        }

        let steady = change_rate < config.steady_tol;
        let last = n == total_steps || steady;
        if n % config.record_every == 0 || last {
            samples.push(sample(&field, t, offset));
        }
        if config.snapshot_every > 0 && (n % config.snapshot_every == 0 || last) {
            snapshots.push((t, field.clone()));
        }
        if steady {
            stop_reason = StopReason::SteadyTol;
            break;
        }
    }

    let steady_residual = solver.discretization().residual_norm(field.values());
    let tail_mass = solver.discretization().tail_mass();
    Ok(Trajectory {
        samples,
        snapshots,
        final_time: solver.time(),
        steps: solver.steps(),
        final_field: field,
        stop_reason,
        frame_speed: config.frame_speed,
        pads: (config.left_pad, config.right_pad),
        offset,
        steady_residual,
        last_change_rate: change_rate,
        tail_mass,
        blow_up,
    })
}

/// Discrete `L²` norm of `u″ + c u′ + f(u, φ ∗ u)` over the interior nodes,
/// with the given pads outside the grid.
pub fn steady_residual(
    profile: &Field,
    c: f64,
    params: &ModelParams,
    pads: (f64, f64),
    tail_tolerance: f64,
) -> Result<f64, SolverError> {
    let mut disc = Discretization::new(*profile.grid(), params, c, pads, tail_tolerance)?;
    Ok(disc.residual_norm(profile.values()))
}

/// Slow spatial decay rate of the linearization at `u = 0` in a frame moving
/// at `c ≥ 2√µ`: the smaller root of `r² − c r + µ = 0`.
pub fn leading_edge_decay(c: f64, mu: f64) -> Option<f64> {
    let disc = c * c - 4.0 * mu;
    if c <= 0.0 || disc < -1e-12 * c * c {
        return None;
    }
    let root = disc.max(0.0).sqrt();
    // 2µ/(c + √·) avoids cancellation for c ≫ 2√µ.
    Some(2.0 * mu / (c + root))
}

/// Initial profile and right pad for moving-frame relaxation at speed `c`.
///
/// A wave with `c > 2√µ` is carried by its leading edge `e^{−r x}` with `r`
/// from [`leading_edge_decay`]. In the co-moving frame that edge flows in
/// through the right boundary, so the right pad is set to the edge value at
/// `x = L`; this pins the front near `anchor`. The initial profile is the
/// mollified step of width `1/r` centered at `anchor`.
pub fn anchored_wave_setup(grid: &Grid, c: f64, mu: f64, anchor: f64) -> Option<(Field, f64)> {
    let r = leading_edge_decay(c, mu)?;
    let width = 1.0 / r;
    let field = Field::mollified_step(*grid, anchor, width);
    let pad = crate::grid::logistic_step((grid.half_length() - anchor) / width);
    Some((field, pad))
}

/// Slow decay rate of `1 − u` behind a wave at speed `c`, from the local
/// approximation `λ² + cλ − µ = 0`.
pub fn trailing_edge_decay(c: f64, mu: f64) -> f64 {
    2.0 * mu / (c.abs() + (c * c + 4.0 * mu).sqrt())
}

/// Default half-length for lab-frame runs: `max(40, 10√m₂, 4R)` with `R` the
/// kernel truncation radius.
pub fn default_half_length(params: &ModelParams, tail_tolerance: f64) -> Result<f64, SolverError> {
    let m2 = params.m2()?;
    let reach = match (&params.reaction, &params.kernel) {
        (Reaction::LocalFisher { .. }, _) | (_, None) => 0.0,
        (_, Some(k)) => k.tail_radius(tail_tolerance),
    };
    Ok(40f64.max(10.0 * m2.sqrt()).max(4.0 * reach))
}

/// Default grid for moving-frame relaxation at speed `c`: the lab-frame
/// half-length, enlarged so both exponential tails fall well below the
/// classification tolerance inside the outer windows, and a power-of-two
/// point count with `Δx ≤ min(1/16, 1/(4√µ))`.
pub fn default_wave_grid(params: &ModelParams, c: f64, tail_tolerance: f64) -> Result<Grid, SolverError> {
    let mu = params.reaction.mu().unwrap_or(1.0);
    let ahead = leading_edge_decay(c, mu).unwrap_or(0.5 * c.abs()).max(1e-3);
    let behind = trailing_edge_decay(c, mu);
    let half = default_half_length(params, tail_tolerance)?.max(20.0 / ahead.min(behind));
    let half = (half / 4.0).ceil() * 4.0;
    Ok(Grid::new(half, default_wave_points(half, mu))?)
}

/// Power-of-two point count giving `Δx ≤ min(1/16, 1/(4√µ))`, at least 1024.
pub fn default_wave_points(half_length: f64, mu: f64) -> usize {
    let dx = (1.0 / 16.0f64).min(0.25 / mu.sqrt());
    ((2.0 * half_length / dx).ceil() as usize).next_power_of_two().max(1024)
}

/// Even point count giving `Δx ≤ min(0.1, 1/(4√µ))` for lab-frame runs.
pub fn default_lab_points(half_length: f64, mu: f64) -> usize {
    let dx = 0.1f64.min(0.25 / mu.sqrt());
    let n = (2.0 * half_length / dx).ceil() as usize;
    (n + n % 2).max(crate::grid::MIN_POINTS)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn top_hat_model(mu: f64) -> ModelParams {
        ModelParams::nonlocal_fisher(mu, Kernel::top_hat(1.0).unwrap())
    }

    #[test]
    fn reaction_examples() {
        assert_eq!(reaction_term(1.0, 1.0, &top_hat_model(1.0)), 0.0);
        assert_eq!(reaction_term(0.5, 0.25, &top_hat_model(2.0)), 0.75);
        let bistable = ModelParams::nonlocal_bistable(0.3, Kernel::top_hat(1.0).unwrap());
        assert_eq!(reaction_term(0.3, 0.9, &bistable), 0.0);
        // Local mode ignores the convolution.
        assert_eq!(reaction_term(0.5, 123.0, &ModelParams::local_fisher(2.0)), 0.5);
    }

    #[test]
    fn model_validation() {
        assert!(ModelParams::local_fisher(0.0).validate().is_err());
        assert!(ModelParams::nonlocal_bistable(1.0, Kernel::top_hat(1.0).unwrap())
            .validate()
            .is_err());
        let missing = ModelParams {
            reaction: Reaction::NonlocalFisher { mu: 1.0 },
            kernel: None,
        };
        assert!(missing.validate().is_err());
        let fat = ModelParams::nonlocal_fisher(1.0, Kernel::power_tail(2.5).unwrap());
        assert!(matches!(fat.validate(), Err(SolverError::Kernel(KernelError::InvalidKernel { .. }))));
    }

    #[test]
    fn rk4_bound_is_checked() {
        let g = Grid::new(10.0, 200).unwrap();
        let r = Reaction::NonlocalFisher { mu: 1.0 };
        let h = g.spacing();
        assert!(stable_time_step(0.2 * h * h, &g, &r, 0.0, Stepper::Rk4));
        assert!(!stable_time_step(0.8 * h * h, &g, &r, 0.0, Stepper::Rk4));
        // Strong advection needs a smaller step than diffusion alone.
        let dt = default_dt(&g, &r, 500.0, Stepper::Rk4);
        assert!(dt < 0.2 * h * h);
        assert!(stable_time_step(dt, &g, &r, 500.0, Stepper::Rk4));
        let mut cfg = SimConfig::lab(&g, &r, 1.0);
        cfg.dt = 0.8 * h * h;
        assert!(matches!(
            cfg.validate(&g, &r),
            Err(SolverError::UnstableTimeStep { .. })
        ));
    }

    #[test]
    fn uniform_states_are_fixed_points_of_one_step() {
        let g = Grid::new(10.0, 200).unwrap();
        let params = top_hat_model(3.0);
        for stepper in [Stepper::Rk4, Stepper::ImexEuler] {
            for v in [0.0, 1.0] {
                let mut cfg = SimConfig::lab(&g, &params.reaction, 1.0);
                cfg.stepper = stepper;
                cfg.dt = default_dt(&g, &params.reaction, 2.0, stepper);
                cfg.frame_speed = 2.0;
                cfg.left_pad = v;
                cfg.right_pad = v;
                let out = step(&Field::constant(g, v), &params, &cfg).unwrap();
                assert!(out.values().iter().all(|x| (x - v).abs() < 1e-14), "{stepper:?} {v}");
            }
        }
    }

    #[test]
    fn blow_up_is_detected() {
        let g = Grid::new(10.0, 64).unwrap();
        let params = ModelParams::local_fisher(1.0);
        let mut cfg = SimConfig::lab(&g, &params.reaction, 1.0);
        cfg.left_pad = 0.0;
        let err = step(&Field::constant(g, 50.0), &params, &cfg).unwrap_err();
        assert!(matches!(err, SolverError::BlowUp { step: 1, .. }));
        let err = step(&Field::constant(g, f64::NAN), &params, &cfg).unwrap_err();
        assert!(matches!(err, SolverError::BlowUp { .. }));
    }

    #[test]
    fn evolve_stops_on_steady_state() {
        let g = Grid::new(10.0, 200).unwrap();
        let params = top_hat_model(1.0);
        let mut cfg = SimConfig::lab(&g, &params.reaction, 10.0);
        cfg.left_pad = 1.0;
        cfg.right_pad = 1.0;
        cfg.steady_tol = 1e-10;
        let traj = evolve(Field::constant(g, 1.0), &params, &cfg).unwrap();
        assert_eq!(traj.stop_reason, StopReason::SteadyTol);
        assert_eq!(traj.steps, 1);
        assert!(traj.steady_residual < 1e-12);
    }

    #[test]
    fn leading_edge_decay_roots() {
        let r = leading_edge_decay(2.0, 1.0).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        let r = leading_edge_decay(10.0, 4.0).unwrap();
        assert!((r * r - 10.0 * r + 4.0).abs() < 1e-12);
        assert!(leading_edge_decay(1.0, 1.0).is_none());
    }
}
