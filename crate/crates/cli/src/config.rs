//! Run configuration: flags and JSON files share the same kebab-case keys,
//! flags win, and the resolved configuration is written back out as
//! `config.json` so a run can be repeated exactly.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use nonlocal_fisher::analysis::Thresholds;
use nonlocal_fisher::diagnostics::DiagnosticsConfig;
use nonlocal_fisher::solver::{self, Discretization, ModelParams, SimConfig, Stepper};
use nonlocal_fisher::{Field, Grid, Kernel};
use serde::{Deserialize, Serialize};

use crate::Failure;

pub const DEFAULT_TAIL_TOL: f64 = 1e-10;
pub const DEFAULT_CONVERGE_TOL: f64 = 1e-4;
pub const DEFAULT_LAB_T_FINAL: f64 = 50.0;
pub const DEFAULT_WAVE_T_FINAL: f64 = 200.0;
pub const DEFAULT_WAVE_STEADY_TOL: f64 = 1e-7;
pub const DEFAULT_OUTPUT_DIR: &str = "out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReactionKind {
    NonlocalFisher,
    LocalFisher,
    NonlocalBistable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpeedUnits {
    Absolute,
    /// Multiples of `c* = 2√µ`.
    Cstar,
    /// Multiples of `c̄ = µ√m₂K₀`.
    Cbar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepperKind {
    Rk4,
    ImexEuler,
}

impl From<StepperKind> for Stepper {
    fn from(s: StepperKind) -> Self {
        match s {
            StepperKind::Rk4 => Stepper::Rk4,
            StepperKind::ImexEuler => Stepper::ImexEuler,
        }
    }
}

/// Every setting of a single run. Unset fields take defaults during resolution.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunArgs {
    /// Kernel spec: tophat:a=, gaussian:sigma=, laplace:b=, powertail:p=, tabulated:file=
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long, value_enum)]
    pub reaction: Option<ReactionKind>,
    #[arg(long)]
    pub mu: Option<f64>,
    /// Interior equilibrium of the bistable reaction.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Frame speed, in the units of --c-units.
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<f64>,
    #[arg(long, value_enum)]
    pub c_units: Option<SpeedUnits>,
    #[arg(long)]
    pub half_length: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_final: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub left_pad: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub right_pad: Option<f64>,
    /// Stop once the sup-norm change per unit time drops below this.
    #[arg(long)]
    pub steady_tol: Option<f64>,
    /// Steps between summary rows.
    #[arg(long)]
    pub record_every: Option<usize>,
    /// Steps between snapshot files; 0 writes none.
    #[arg(long)]
    pub snapshot_every: Option<usize>,
    #[arg(long, value_enum)]
    pub stepper: Option<StepperKind>,
    /// Kernel mass discarded by truncation.
    #[arg(long)]
    pub tail_tol: Option<f64>,
    #[arg(long)]
    pub blowup_threshold: Option<f64>,
    /// Width of the initial mollified step.
    #[arg(long)]
    pub init_width: Option<f64>,
    /// Center of the initial step; defaults to `-L/2` in the lab frame and 0 in the moving frame.
    #[arg(long, allow_hyphen_values = true)]
    pub init_center: Option<f64>,
    #[arg(long)]
    pub classify_tol: Option<f64>,
    /// Tail classification window as a fraction of the domain length.
    #[arg(long)]
    pub window_fraction: Option<f64>,
    /// Trailing fraction of the run used for the speed fit.
    #[arg(long)]
    pub speed_window: Option<f64>,
    #[arg(long)]
    pub k0_tol: Option<f64>,
    #[arg(long)]
    pub fit_tol: Option<f64>,
    /// Largest steady residual for a run to count as converged.
    #[arg(long)]
    pub converge_tol: Option<f64>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

macro_rules! merge_fields {
    ($a:ident, $b:ident; $($f:ident),*) => {
        RunArgs { $($f: $a.$f.or($b.$f)),* }
    };
}

impl RunArgs {
    /// Field-wise `self` over `fallback`.
    pub fn or(self, fallback: RunArgs) -> RunArgs {
        let (a, b) = (self, fallback);
        merge_fields!(a, b; kernel, reaction, mu, alpha, c, c_units, half_length, points, dt,
            t_final, left_pad, right_pad, steady_tol, record_every, snapshot_every, stepper,
            tail_tol, blowup_threshold, init_width, init_center, classify_tol, window_fraction,
            speed_window, k0_tol, fit_tol, converge_tol, output_dir)
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Validation(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Validation(format!("config {}: {e}", path.display())))
}

/// Flags over the optional config file.
pub fn load_run_args(flags: RunArgs, config: Option<&Path>) -> Result<RunArgs, Failure> {
    Ok(match config {
        Some(p) => flags.or(read_json(p)?),
        None => flags,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    Lab,
    Moving,
}

/// A fully validated run.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    /// Every field set; written as `config.json`.
    pub echo: RunArgs,
    pub params: ModelParams,
    pub grid: Grid,
    pub sim: SimConfig,
    pub diag: DiagnosticsConfig,
    pub initial: Field,
    pub thresholds: Option<Thresholds>,
    pub converge_tol: f64,
    pub output_dir: PathBuf,
    /// Non-fatal remarks for stderr.
    pub warnings: Vec<String>,
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Validation(msg.into())
}

pub fn model_params(args: &RunArgs) -> Result<ModelParams, Failure> {
    let reaction = args.reaction.unwrap_or(ReactionKind::NonlocalFisher);
    let kernel = || -> Result<Kernel, Failure> {
        let spec = args
            .kernel
            .as_deref()
            .ok_or_else(|| invalid("--kernel is required for nonlocal reactions"))?;
        Kernel::from_spec(spec).map_err(|e| invalid(e.to_string()))
    };
    let mu = || args.mu.ok_or_else(|| invalid("--mu is required for Fisher reactions"));
    let params = match reaction {
        ReactionKind::NonlocalFisher => ModelParams::nonlocal_fisher(mu()?, kernel()?),
        ReactionKind::LocalFisher => ModelParams::local_fisher(mu()?),
        ReactionKind::NonlocalBistable => ModelParams::nonlocal_bistable(
            args.alpha
                .ok_or_else(|| invalid("--alpha is required for the bistable reaction"))?,
            kernel()?,
        ),
    };
    params.validate().map_err(|e| invalid(e.to_string()))?;
    Ok(params)
}

/// Converts a speed in `units` to an absolute speed.
pub fn absolute_speed(value: f64, units: SpeedUnits, thresholds: Option<&Thresholds>) -> Result<f64, Failure> {
    match units {
        SpeedUnits::Absolute => Ok(value),
        SpeedUnits::Cstar => thresholds
            .map(|t| value * t.c_star)
            .ok_or_else(|| invalid("c-units cstar needs a Fisher reaction")),
        SpeedUnits::Cbar => match thresholds {
            Some(t) if t.c_bar > 0.0 => Ok(value * t.c_bar),
            _ => Err(invalid("c-units cbar needs the nonlocal Fisher reaction")),
        },
    }
}

pub fn resolve(args: RunArgs, frame: Frame) -> Result<ResolvedRun, Failure> {
    let params = model_params(&args)?;
    let thresholds = params.thresholds().map_err(|e| invalid(e.to_string()))?;
    let mu = params.reaction.mu();
    let mut warnings = Vec::new();

    let c = match frame {
        Frame::Lab => {
            if args.c.is_some_and(|c| c != 0.0) {
                return Err(invalid("simulate runs in the lab frame; use `wave` for a moving frame"));
            }
            0.0
        }
        Frame::Moving => {
            let raw = args.c.ok_or_else(|| invalid("--c is required for wave runs"))?;
            let c = absolute_speed(raw, args.c_units.unwrap_or(SpeedUnits::Absolute), thresholds.as_ref())?;
            if !(c.is_finite() && c != 0.0) {
                return Err(invalid(format!("frame speed must be finite and nonzero, got {c}")));
            }
            if let Some(t) = &thresholds {
                if c.abs() < t.c_star {
                    warnings.push(format!(
                        "c = {c} is below c* = {}; waves are only expected for c >= c*",
                        t.c_star
                    ));
                }
            }
            c
        }
    };

    let tail_tol = args.tail_tol.unwrap_or(DEFAULT_TAIL_TOL);
    let mu_or_one = mu.unwrap_or(1.0);
    let grid = {
        let default_half = || -> Result<f64, Failure> {
            match frame {
                Frame::Lab => solver::default_half_length(&params, tail_tol),
                Frame::Moving => solver::default_wave_grid(&params, c, tail_tol).map(|g| g.half_length()),
            }
            .map_err(|e| invalid(e.to_string()))
        };
        let half = match args.half_length {
            Some(l) => l,
            None => default_half()?,
        };
        let points = args.points.unwrap_or_else(|| match frame {
            Frame::Lab => solver::default_lab_points(half, mu_or_one),
            Frame::Moving => solver::default_wave_points(half, mu_or_one),
        });
        Grid::new(half, points).map_err(|e| invalid(e.to_string()))?
    };

    let stepper: Stepper = args
        .stepper
        .unwrap_or(match frame {
            Frame::Lab => StepperKind::Rk4,
            Frame::Moving => StepperKind::ImexEuler,
        })
        .into();
    let dt = args
        .dt
        .unwrap_or_else(|| solver::default_dt(&grid, &params.reaction, c, stepper));

    // Lab-frame fronts move right, so they start in the left half.
    let init_center = args.init_center.unwrap_or(match frame {
        Frame::Lab => -0.5 * grid.half_length(),
        Frame::Moving => 0.0,
    });
    let anchored = match (frame, mu) {
        (Frame::Moving, Some(mu)) if c > 0.0 => solver::leading_edge_decay(c, mu),
        _ => None,
    };
    let init_width = args
        .init_width
        .unwrap_or_else(|| anchored.map_or(1.0, |r| 1.0 / r));
    let left_pad = args.left_pad.unwrap_or(1.0);
    let right_pad = args.right_pad.unwrap_or_else(|| {
        anchored.map_or(0.0, |r| {
            nonlocal_fisher::grid::logistic_step((grid.half_length() - init_center) * r)
        })
    });
    if !(init_width > 0.0 && init_width.is_finite()) {
        return Err(invalid(format!("init-width must be positive, got {init_width}")));
    }
    let initial = Field::mollified_step(grid, init_center, init_width);

    let t_final = args.t_final.unwrap_or(match frame {
        Frame::Lab => DEFAULT_LAB_T_FINAL,
        Frame::Moving => DEFAULT_WAVE_T_FINAL,
    });
    let steady_tol = args.steady_tol.unwrap_or(match frame {
        Frame::Lab => 0.0,
        Frame::Moving => DEFAULT_WAVE_STEADY_TOL,
    });
    let record_every = args.record_every.unwrap_or(match frame {
        Frame::Lab => ((0.1 / dt).round() as usize).max(1),
        Frame::Moving => 100,
    });

    let sim = SimConfig {
        frame_speed: c,
        dt,
        t_final,
        left_pad,
        right_pad,
        steady_tol,
        record_every,
        snapshot_every: args.snapshot_every.unwrap_or(0),
        stepper,
        recenter: frame == Frame::Lab,
        tail_tolerance: tail_tol,
        blowup_threshold: args.blowup_threshold,
    };
    sim.validate(&grid, &params.reaction)
        .map_err(|e| invalid(e.to_string()))?;
    // Tabulates the kernel and checks that its stencil fits the domain.
    Discretization::new(grid, &params, c, (left_pad, right_pad), tail_tol).map_err(|e| invalid(e.to_string()))?;

    let defaults = DiagnosticsConfig::default();
    let diag = DiagnosticsConfig {
        classify_tol: args.classify_tol.unwrap_or(defaults.classify_tol),
        window_fraction: args.window_fraction.unwrap_or(defaults.window_fraction),
        speed_window: args.speed_window.unwrap_or(defaults.speed_window),
        k0_tol: args.k0_tol.unwrap_or(defaults.k0_tol),
        fit_tol: args.fit_tol.unwrap_or(defaults.fit_tol),
    };
    if !(diag.window_fraction > 0.0 && diag.window_fraction <= 0.5) {
        return Err(invalid(format!(
            "window-fraction must lie in (0, 0.5], got {}",
            diag.window_fraction
        )));
    }
    if !(diag.speed_window > 0.0 && diag.speed_window <= 1.0) {
        return Err(invalid(format!("speed-window must lie in (0, 1], got {}", diag.speed_window)));
    }
    let converge_tol = args.converge_tol.unwrap_or(DEFAULT_CONVERGE_TOL);
    let output_dir = args
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));

    let echo = RunArgs {
        kernel: params.kernel.as_ref().map(|k| k.to_string()),
        reaction: args.reaction.or(Some(ReactionKind::NonlocalFisher)),
        mu,
        alpha: args.alpha,
        c: Some(c),
        c_units: Some(SpeedUnits::Absolute),
        half_length: Some(grid.half_length()),
        points: Some(grid.n_points()),
        dt: Some(dt),
        t_final: Some(t_final),
        left_pad: Some(left_pad),
        right_pad: Some(right_pad),
        steady_tol: Some(steady_tol),
        record_every: Some(record_every),
        snapshot_every: Some(sim.snapshot_every),
        stepper: Some(args.stepper.unwrap_or(match stepper {
            Stepper::Rk4 => StepperKind::Rk4,
            Stepper::ImexEuler => StepperKind::ImexEuler,
        })),
        tail_tol: Some(tail_tol),
        blowup_threshold: args.blowup_threshold,
        init_width: Some(init_width),
        init_center: Some(init_center),
        classify_tol: Some(diag.classify_tol),
        window_fraction: Some(diag.window_fraction),
        speed_window: Some(diag.speed_window),
        k0_tol: Some(diag.k0_tol),
        fit_tol: Some(diag.fit_tol),
        converge_tol: Some(converge_tol),
        output_dir: Some(output_dir.clone()),
    };

    Ok(ResolvedRun {
        echo,
        params,
        grid,
        sim,
        diag,
        initial,
        thresholds,
        converge_tol,
        output_dir,
        warnings,
    })
}

/// A list of numbers: `1,2,5`, `a:b:n` (n evenly spaced values), or a JSON array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ValueList {
    Values(Vec<f64>),
    Text(String),
}

impl ValueList {
    pub fn values(&self) -> Result<Vec<f64>, Failure> {
        match self {
            ValueList::Values(v) => Ok(v.clone()),
            ValueList::Text(s) => parse_list(s),
        }
    }
}

impl std::str::FromStr for ValueList {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(ValueList::Text(s.to_string()))
    }
}

pub fn parse_list(s: &str) -> Result<Vec<f64>, Failure> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| invalid(format!("`{t}` is not a number in list `{s}`")))
    };
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(invalid(format!("range `{s}` must be start:end:count")));
        }
        let (a, b) = (num(parts[0])?, num(parts[1])?);
        let n: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| invalid(format!("range `{s}`: count must be a positive integer")))?;
        return Ok(match n {
            0 => Vec::new(),
            1 => vec![a],
            _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
        });
    }
    s.split(',').map(num).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_and_ranges() {
        assert_eq!(parse_list("1, 2,5").unwrap(), vec![1.0, 2.0, 5.0]);
        assert_eq!(parse_list("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(parse_list("").unwrap().is_empty());
        assert!(parse_list("1,x").is_err());
        assert!(parse_list("0:1").is_err());
    }

    #[test]
    fn flags_override_file_values() {
        let flags = RunArgs {
            mu: Some(2.0),
            ..Default::default()
        };
        let file = RunArgs {
            mu: Some(1.0),
            kernel: Some("tophat:a=1".into()),
            ..Default::default()
        };
        let merged = flags.or(file);
        assert_eq!(merged.mu, Some(2.0));
        assert_eq!(merged.kernel.as_deref(), Some("tophat:a=1"));
    }

    #[test]
    fn echo_resolves_to_itself() {
        let args = RunArgs {
            kernel: Some("gaussian:sigma=1".into()),
            mu: Some(1.0),
            c: Some(2.0),
            c_units: Some(SpeedUnits::Cstar),
            ..Default::default()
        };
        let first = resolve(args, Frame::Moving).unwrap();
        let json = serde_json::to_string(&first.echo).unwrap();
        let again: RunArgs = serde_json::from_str(&json).unwrap();
        let second = resolve(again, Frame::Moving).unwrap();
        assert_eq!(first.echo, second.echo);
        assert_eq!(first.sim, second.sim);
        assert_eq!(first.initial, second.initial);
    }

    #[test]
    fn validation_failures() {
        let no_kernel = RunArgs {
            mu: Some(1.0),
            ..Default::default()
        };
        assert!(matches!(resolve(no_kernel, Frame::Lab), Err(Failure::Validation(_))));
        let lab_speed = RunArgs {
            reaction: Some(ReactionKind::LocalFisher),
            mu: Some(1.0),
            c: Some(3.0),
            ..Default::default()
        };
        assert!(matches!(resolve(lab_speed, Frame::Lab), Err(Failure::Validation(_))));
        let bad_dt = RunArgs {
            reaction: Some(ReactionKind::LocalFisher),
            mu: Some(1.0),
            dt: Some(1.0),
            ..Default::default()
        };
        assert!(matches!(resolve(bad_dt, Frame::Lab), Err(Failure::Validation(_))));
    }
}
