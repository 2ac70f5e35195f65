use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nonlocal_fisher::analysis::{self, DispersionReport, Thresholds};
use nonlocal_fisher::diagnostics::{self, TailState, WaveReport};
use nonlocal_fisher::kernel::{Kernel, TabulatedKernel, ValidationReport};
use nonlocal_fisher::solver::{self, BlowUpInfo, SimConfig, StopReason, Trajectory};
use nonlocal_fisher::grid::format_float as ff;
use nonlocal_fisher::Field;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{
    self, load_run_args, parse_list, read_json, resolve, Frame, ReactionKind, ResolvedRun, RunArgs, SpeedUnits,
    StepperKind, ValueList,
};
use crate::Failure;

#[derive(Debug, Parser)]
#[command(name = "nlfisher", version, about = "Traveling waves of the nonlocal Fisher-KPP equation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a kernel and print its moments (or its transform as CSV).
    KernelInfo(KernelInfoArgs),
    /// Print c*, K0 and c-bar for a kernel and growth rate.
    Thresholds(ThresholdArgs),
    /// Turing analysis of the uniform state u = 1.
    Dispersion(DispersionArgs),
    /// Lab-frame evolution from a mollified step.
    Simulate(RunCmd),
    /// Moving-frame relaxation to a traveling wave.
    Wave(RunCmd),
    /// One wave run per (mu, c) cell.
    Sweep(SweepCmd),
    /// Energy-identity audit of a stored profile.
    Audit(AuditArgs),
}

#[derive(Debug, Args)]
pub struct KernelInfoArgs {
    #[arg(long)]
    pub kernel: String,
    /// Emit `k,re,im` CSV on `k0:k1:n` instead of the JSON summary.
    #[arg(long)]
    pub fourier: Option<String>,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long, value_enum)]
    pub reaction: Option<ReactionKind>,
    #[arg(long)]
    pub mu: f64,
}

#[derive(Debug, Args)]
pub struct DispersionArgs {
    #[arg(long)]
    pub kernel: String,
    #[arg(long)]
    pub mu: f64,
    /// Upper end of the wavenumber scan.
    #[arg(long)]
    pub kmax: Option<f64>,
    /// Write `k,lambda` on the scan grid to this file.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Points in the CSV.
    #[arg(long, default_value_t = 1000)]
    pub points: usize,
}

#[derive(Debug, Args)]
pub struct RunCmd {
    /// JSON file with the same keys as the flags; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}

/// Sweep settings. Per-cell settings not listed here take the `wave` defaults.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SweepArgs {
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long, value_enum)]
    pub reaction: Option<ReactionKind>,
    /// Growth rates: `1,5,90` or `start:end:count`.
    #[arg(long)]
    pub mu: Option<ValueList>,
    /// Frame speeds in --c-units: `1,1.5,3` or `start:end:count`.
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<ValueList>,
    #[arg(long, value_enum)]
    pub c_units: Option<SpeedUnits>,
    /// Concurrent cells.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long)]
    pub half_length: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_final: Option<f64>,
    #[arg(long)]
    pub steady_tol: Option<f64>,
    #[arg(long)]
    pub record_every: Option<usize>,
    #[arg(long, value_enum)]
    pub stepper: Option<StepperKind>,
    #[arg(long)]
    pub tail_tol: Option<f64>,
    #[arg(long)]
    pub blowup_threshold: Option<f64>,
    #[arg(long)]
    pub classify_tol: Option<f64>,
    #[arg(long)]
    pub window_fraction: Option<f64>,
    #[arg(long)]
    pub k0_tol: Option<f64>,
    #[arg(long)]
    pub converge_tol: Option<f64>,
}

impl SweepArgs {
    fn or(self, b: SweepArgs) -> SweepArgs {
        let a = self;
        SweepArgs {
            kernel: a.kernel.or(b.kernel),
            reaction: a.reaction.or(b.reaction),
            mu: a.mu.or(b.mu),
            c: a.c.or(b.c),
            c_units: a.c_units.or(b.c_units),
            jobs: a.jobs.or(b.jobs),
            output_dir: a.output_dir.or(b.output_dir),
            half_length: a.half_length.or(b.half_length),
            points: a.points.or(b.points),
            dt: a.dt.or(b.dt),
            t_final: a.t_final.or(b.t_final),
            steady_tol: a.steady_tol.or(b.steady_tol),
            record_every: a.record_every.or(b.record_every),
            stepper: a.stepper.or(b.stepper),
            tail_tol: a.tail_tol.or(b.tail_tol),
            blowup_threshold: a.blowup_threshold.or(b.blowup_threshold),
            classify_tol: a.classify_tol.or(b.classify_tol),
            window_fraction: a.window_fraction.or(b.window_fraction),
            k0_tol: a.k0_tol.or(b.k0_tol),
            converge_tol: a.converge_tol.or(b.converge_tol),
        }
    }
}

#[derive(Debug, Args)]
pub struct SweepCmd {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub sweep: SweepArgs,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    /// Profile CSV with header `x,u`.
    #[arg(long)]
    pub profile: PathBuf,
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long, value_enum)]
    pub reaction: Option<ReactionKind>,
    #[arg(long)]
    pub mu: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub c: f64,
    /// Left end of the audit interval; defaults to one kernel radius inside the grid.
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    #[arg(long)]
    pub tail_tol: Option<f64>,
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), Failure> {
    match cli.command {
        Command::KernelInfo(a) => kernel_info(a, out),
        Command::Thresholds(a) => thresholds(a, out),
        Command::Dispersion(a) => dispersion(a, out),
        Command::Simulate(a) => single_run(a, Frame::Lab, out),
        Command::Wave(a) => single_run(a, Frame::Moving, out),
        Command::Sweep(a) => sweep(a, out),
        Command::Audit(a) => audit(a, out),
    }
}

fn invalid(e: impl ToString) -> Failure {
    Failure::Validation(e.to_string())
}

fn print_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Io(e.to_string()))?;
    writeln!(out, "{text}")?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Io(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn valid_kernel(spec: &str) -> Result<Kernel, Failure> {
    let kernel = Kernel::from_spec(spec).map_err(invalid)?;
    kernel.validate().check().map_err(|e| invalid(format!("{spec}: {e}")))?;
    Ok(kernel)
}

#[derive(Serialize)]
struct KernelInfo {
    kernel: String,
    validation: ValidationReport,
    m0: f64,
    m1: f64,
    m2: f64,
    even: bool,
    /// Radius beyond which at most 1e-10 of the mass lies.
    tail_radius: f64,
}

fn kernel_info(args: KernelInfoArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let kernel = valid_kernel(&args.kernel)?;
    if let Some(range) = args.fourier {
        let ks = parse_list(&range)?;
        if !range.contains(':') || ks.is_empty() {
            return Err(invalid(format!("--fourier expects k0:k1:n, got `{range}`")));
        }
        let mut csv = String::from("k,re,im\n");
        for k in ks {
            let f = kernel.fourier(k);
            let _ = writeln!(csv, "{},{},{}", ff(k), ff(f.re), ff(f.im));
        }
        out.write_all(csv.as_bytes())?;
        return Ok(());
    }
    let moment = |i| kernel.moment(i).map_err(invalid);
    let info = KernelInfo {
        kernel: kernel.to_string(),
        validation: kernel.validate(),
        m0: moment(0)?,
        m1: moment(1)?,
        m2: moment(2)?,
        even: kernel.is_even(),
        tail_radius: kernel.tail_radius(config::DEFAULT_TAIL_TOL),
    };
    print_json(out, &info)
}

fn thresholds(args: ThresholdArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let t = match args.reaction.unwrap_or(ReactionKind::NonlocalFisher) {
        ReactionKind::LocalFisher => Thresholds::local(args.mu).map_err(invalid)?,
        ReactionKind::NonlocalFisher => {
            let spec = args.kernel.ok_or_else(|| invalid("--kernel is required"))?;
            Thresholds::new(&valid_kernel(&spec)?, args.mu).map_err(invalid)?
        }
        ReactionKind::NonlocalBistable => return Err(invalid("thresholds are defined for Fisher reactions only")),
    };
    print_json(out, &t)
}

#[derive(Serialize)]
struct DispersionOutput {
    kernel: String,
    mu: f64,
    #[serde(flatten)]
    report: DispersionReport,
}

fn dispersion(args: DispersionArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let kernel = valid_kernel(&args.kernel)?;
    let k_max = match args.kmax {
        Some(k) if k > 0.0 && k.is_finite() => k,
        Some(k) => return Err(invalid(format!("--kmax must be positive, got {k}"))),
        None => analysis::default_scan_k_max(&kernel).map_err(invalid)?,
    };
    let report = analysis::turing_analysis_on(&kernel, args.mu, k_max).map_err(invalid)?;
    if let Some(path) = &args.csv {
        if args.points < 2 {
            return Err(invalid("--points must be at least 2"));
        }
        let mut csv = String::from("k,lambda\n");
        for (k, l) in analysis::dispersion_curve(&kernel, args.mu, &analysis::scan_grid(k_max, args.points)) {
            let _ = writeln!(csv, "{},{}", ff(k), ff(l));
        }
        std::fs::write(path, csv).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    }
    print_json(
        out,
        &DispersionOutput {
            kernel: kernel.to_string(),
            mu: args.mu,
            report,
        },
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct GridEcho {
    pub half_length: f64,
    pub n_points: usize,
    pub spacing: f64,
}

/// Contents of `report.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    #[serde(flatten)]
    pub wave: WaveReport,
    /// Stopped on the steady tolerance with `steady_residual` below the convergence tolerance.
    pub converged: bool,
    pub stop_reason: StopReason,
    pub blow_up: Option<BlowUpInfo>,
    pub final_time: f64,
    pub steps: usize,
    pub frame_speed: f64,
    /// Final front position (lab coordinates in the lab frame).
    pub front_x: Option<f64>,
    pub offset: f64,
    pub tail_mass: f64,
    pub kernel: Option<String>,
    pub grid: GridEcho,
    pub config: SimConfig,
    pub thresholds: Option<Thresholds>,
}


fn write_summary(path: &Path, traj: &Trajectory) -> Result<(), Failure> {
    let mut s = String::from("t,front_x,sup_norm,l2_grad\n");
    for sm in &traj.samples {
        let front = sm.front_x.map_or("nan".to_string(), ff);
        let _ = writeln!(s, "{},{},{},{}", ff(sm.t), front, ff(sm.sup_norm), ff(sm.l2_grad));
    }
    std::fs::write(path, s).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

/// Runs a resolved configuration and writes every output file.
pub fn execute(run: &ResolvedRun) -> Result<RunReport, Failure> {
    let dir = &run.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
    write_json(&dir.join("config.json"), &run.echo)?;
    let traj = solver::evolve_recording(run.initial.clone(), &run.params, &run.sim).map_err(invalid)?;
    let wave = diagnostics::build_report(&traj, &run.params, &run.sim, run.thresholds.as_ref(), &run.diag);

    write_summary(&dir.join("summary.csv"), &traj)?;
    let io = |e: nonlocal_fisher::grid::GridError| Failure::Io(e.to_string());
    traj.final_field.write_csv(&dir.join("profile.csv")).map_err(io)?;
    for (t, snap) in &traj.snapshots {
        snap.write_csv(&dir.join(format!("snap_t{}.csv", ff((t * 1e9).round() / 1e9)))).map_err(io)?;
    }
    let g = traj.final_field.grid();
    let report = RunReport {
        converged: traj.stop_reason == StopReason::SteadyTol && wave.steady_residual < run.converge_tol,
        wave,
        stop_reason: traj.stop_reason,
        blow_up: traj.blow_up.clone(),
        final_time: traj.final_time,
        steps: traj.steps,
        frame_speed: traj.frame_speed,
        front_x: traj.samples.last().and_then(|s| s.front_x),
        offset: traj.offset,
        tail_mass: traj.tail_mass,
        kernel: run.params.kernel.as_ref().map(|k| k.to_string()),
        grid: GridEcho {
            half_length: g.half_length(),
            n_points: g.n_points(),
            spacing: g.spacing(),
        },
        config: run.sim.clone(),
        thresholds: run.thresholds,
    };
    write_json(&dir.join("report.json"), &report)?;
    Ok(report)
}

fn blow_up_failure(info: &BlowUpInfo) -> Failure {
    Failure::BlowUp(format!(
        "blow-up at step {} (t = {}): {}",
        info.step, info.time, info.reason
    ))
}

fn single_run(cmd: RunCmd, frame: Frame, out: &mut dyn Write) -> Result<(), Failure> {
    let args = load_run_args(cmd.run, cmd.config.as_deref())?;
    let resolved = resolve(args, frame)?;
    for w in &resolved.warnings {
        eprintln!("warning: {w}");
    }
    let report = execute(&resolved)?;
    print_json(out, &report)?;
    match &report.blow_up {
        Some(info) => Err(blow_up_failure(info)),
        None => Ok(()),
    }
}

#[derive(Debug, Clone)]
struct Cell {
    index: usize,
    mu: f64,
    c: f64,
    args: RunArgs,
}

/// One line of `sweep.csv`.
#[derive(Debug, Clone, Default)]
struct SweepRow {
    index: usize,
    kernel: String,
    mu: f64,
    c_input: f64,
    c: Option<f64>,
    thresholds: Option<Thresholds>,
    report: Option<RunReport>,
    error: Option<String>,
    dir: String,
}

const SWEEP_HEADER: &str = "index,kernel,mu,c_input,c,c_star,c_bar,k0,stop_reason,converged,steady_residual,\
left_state,left_mean,left_amplitude,right_state,condition_8,sup_norm,k0_bound_ok,energy_residual,dir,error";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or(String::new(), |v| v.to_string())
}

fn optf(v: Option<f64>) -> String {
    v.map_or(String::new(), ff)
}

fn state_name(s: &TailState) -> &'static str {
    match s {
        TailState::One => "one",
        TailState::Zero => "zero",
        TailState::Wavetrain { .. } => "wavetrain",
        TailState::Undetermined => "undetermined",
    }
}

impl SweepRow {
    fn to_csv(&self) -> String {
        let t = self.thresholds.as_ref();
        let r = self.report.as_ref();
        let (left_mean, left_amp) = match r.map(|r| r.wave.left_state) {
            Some(TailState::Wavetrain { mean, amplitude }) => (Some(mean), Some(amplitude)),
            _ => (None, None),
        };
        let stop = r.map(|r| match r.stop_reason {
            StopReason::FinalTime => "final_time",
            StopReason::SteadyTol => "steady_tol",
            StopReason::BlowUp => "blow_up",
        });
        [
            self.index.to_string(),
            csv_field(&self.kernel),
            ff(self.mu),
            ff(self.c_input),
            optf(self.c),
            optf(t.map(|t| t.c_star)),
            optf(t.map(|t| t.c_bar)),
            optf(t.map(|t| t.k0)),
            opt(stop),
            opt(r.map(|r| r.converged)),
            optf(r.map(|r| r.wave.steady_residual)),
            opt(r.map(|r| state_name(&r.wave.left_state))),
            optf(left_mean),
            optf(left_amp),
            opt(r.map(|r| state_name(&r.wave.right_state))),
            opt(r.and_then(|r| r.wave.condition_8)),
            optf(r.map(|r| r.wave.sup_norm)),
            opt(r.and_then(|r| r.wave.k0_bound_ok)),
            optf(r.and_then(|r| r.wave.energy_residual)),
            csv_field(&self.dir),
            csv_field(self.error.as_deref().unwrap_or("")),
        ]
        .join(",")
    }
}

fn run_cell(cell: &Cell) -> SweepRow {
    let mut row = SweepRow {
        index: cell.index,
        kernel: cell.args.kernel.clone().unwrap_or_default(),
        mu: cell.mu,
        c_input: cell.c,
        dir: cell
            .args
            .output_dir
            .as_ref()
            .map(|d| d.display().to_string())
            .unwrap_or_default(),
        ..Default::default()
    };
    let resolved = match resolve(cell.args.clone(), Frame::Moving) {
        Ok(r) => r,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    row.thresholds = resolved.thresholds;
    row.c = Some(resolved.sim.frame_speed);
    match execute(&resolved) {
        Ok(report) => {
            row.error = report.blow_up.as_ref().map(|b| blow_up_failure(b).to_string());
            row.report = Some(report);
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

#[derive(Serialize)]
struct SweepSummary {
    rows: usize,
    converged: usize,
    failures: usize,
    csv: PathBuf,
}

fn sweep(cmd: SweepCmd, out: &mut dyn Write) -> Result<(), Failure> {
    let args = match &cmd.config {
        Some(p) => cmd.sweep.clone().or(read_json(p)?),
        None => cmd.sweep.clone(),
    };
    let reaction = args.reaction.unwrap_or(ReactionKind::NonlocalFisher);
    if reaction == ReactionKind::NonlocalBistable {
        return Err(invalid("sweeps are defined over (mu, c) for Fisher reactions"));
    }
    if reaction == ReactionKind::NonlocalFisher {
        valid_kernel(args.kernel.as_deref().ok_or_else(|| invalid("--kernel is required"))?)?;
    }
    let mus = args.mu.as_ref().ok_or_else(|| invalid("--mu is required"))?.values()?;
    let cs = args.c.as_ref().ok_or_else(|| invalid("--c is required"))?.values()?;
    if mus.is_empty() || cs.is_empty() {
        return Err(invalid("sweep needs at least one mu and one c value"));
    }
    if mus.iter().chain(&cs).any(|v| !v.is_finite()) {
        return Err(invalid("sweep values must be finite"));
    }
    let jobs = args.jobs.unwrap_or(1);
    if jobs == 0 {
        return Err(invalid("--jobs must be at least 1"));
    }
    let root = args
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(config::DEFAULT_OUTPUT_DIR));
    let c_units = args.c_units.unwrap_or(SpeedUnits::Cstar);

    let mut pairs: Vec<(f64, f64)> = mus.iter().flat_map(|&m| cs.iter().map(move |&c| (m, c))).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let cells: Vec<Cell> = pairs
        .into_iter()
        .enumerate()
        .map(|(index, (mu, c))| Cell {
            index,
            mu,
            c,
            args: RunArgs {
                kernel: args.kernel.clone(),
                reaction: Some(reaction),
                mu: Some(mu),
                c: Some(c),
                c_units: Some(c_units),
                half_length: args.half_length,
                points: args.points,
                dt: args.dt,
                t_final: args.t_final,
                steady_tol: args.steady_tol,
                record_every: args.record_every,
                stepper: args.stepper,
                tail_tol: args.tail_tol,
                blowup_threshold: args.blowup_threshold,
                classify_tol: args.classify_tol,
                window_fraction: args.window_fraction,
                k0_tol: args.k0_tol,
                converge_tol: args.converge_tol,
                output_dir: Some(root.join(format!("cell_{index:03}"))),
                ..Default::default()
            },
        })
        .collect();

    std::fs::create_dir_all(&root).map_err(|e| Failure::Io(format!("{}: {e}", root.display())))?;
    let echo = SweepArgs {
        mu: Some(ValueList::Values(mus)),
        c: Some(ValueList::Values(cs)),
        c_units: Some(c_units),
        jobs: Some(jobs),
        output_dir: Some(root.clone()),
        reaction: Some(reaction),
        ..args.clone()
    };
    write_json(&root.join("config.json"), &echo)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Failure::Io(e.to_string()))?;
    let rows: Vec<SweepRow> = pool.install(|| cells.par_iter().map(run_cell).collect());

    let mut csv = String::from(SWEEP_HEADER);
    csv.push('\n');
    for row in &rows {
        csv.push_str(&row.to_csv());
        csv.push('\n');
    }
    let path = root.join("sweep.csv");
    std::fs::write(&path, csv).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    print_json(
        out,
        &SweepSummary {
            rows: rows.len(),
            converged: rows
                .iter()
                .filter(|r| r.report.as_ref().is_some_and(|r| r.converged))
                .count(),
            failures: rows.iter().filter(|r| r.error.is_some()).count(),
            csv: path,
        },
    )
}

#[derive(Serialize)]
struct AuditOutput {
    profile: PathBuf,
    c: f64,
    mu: f64,
    a: f64,
    b: f64,
    energy_residual: f64,
}

fn audit(args: AuditArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let profile = Field::read_csv(&args.profile).map_err(invalid)?;
    let g = *profile.grid();
    let tail_tol = args.tail_tol.unwrap_or(config::DEFAULT_TAIL_TOL);
    let table: TabulatedKernel = match args.reaction.unwrap_or(ReactionKind::NonlocalFisher) {
        ReactionKind::LocalFisher => TabulatedKernel::identity(g.spacing()),
        ReactionKind::NonlocalFisher => {
            let spec = args.kernel.as_deref().ok_or_else(|| invalid("--kernel is required"))?;
            valid_kernel(spec)?.tabulate(g.spacing(), tail_tol).map_err(invalid)?
        }
        ReactionKind::NonlocalBistable => return Err(invalid("the energy identity holds for Fisher reactions only")),
    };
    if !(args.mu > 0.0) {
        return Err(invalid(format!("mu must be positive, got {}", args.mu)));
    }
    let reach = table.radius() + g.spacing();
    let a = args.a.unwrap_or(g.x(0) + reach);
    let b = args.b.unwrap_or(g.x(g.n_points() - 1) - reach);
    let residual = diagnostics::energy_audit(&profile, args.c, args.mu, &table, a, b).map_err(invalid)?;
    print_json(
        out,
        &AuditOutput {
            profile: args.profile,
            c: args.c,
            mu: args.mu,
            a,
            b,
            energy_residual: residual,
        },
    )
}
