//! One function per command. Each writes its files into an [`OutputDir`],
//! echoes the effective scenario and finishes with the manifest.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use syzygy_core::events::{scan_events, Monitor, Which};
use syzygy_core::integrator::{integrate, IntegratorConfig, StepStats, Termination, Trajectory};
use syzygy_core::lab::{
    find_theta, minf_oracle, verify_theorem1, verify_theorem2_periodic, verify_theorem3, LabConfig, MinFConfig,
    MinFResult, Outcome, Theorem2Config, Theorem2Report, TheoremReport, ThetaVector,
};
use syzygy_core::orbits::InitialCondition;
use syzygy_core::{Error, Masses};

use crate::output::{events_csv, trajectory_csv, Manifest, OutputDir};
use crate::scenario::{IcSource, Scenario, SweepTheorem, SCHEMA_VERSION};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    /// Trajectory samples and conservation drift.
    Simulate,
    /// Position syzygies and velocity alignments.
    Events,
    /// Syzygy before T1 at zero angular momentum.
    VerifyThm1,
    /// Syzygy on a theta-rigid periodic orbit.
    VerifyThm2,
    /// Generalised syzygy before T for an antisymmetric start.
    VerifyThm3,
    /// Theorem 1 or 3 over every sampled initial condition.
    Sweep,
    /// Brute-force minimisation against the closed form.
    OracleMinf,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Events => "events",
            Command::VerifyThm1 => "verify-thm1",
            Command::VerifyThm2 => "verify-thm2",
            Command::VerifyThm3 => "verify-thm3",
            Command::Sweep => "sweep",
            Command::OracleMinf => "oracle-minf",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    HypothesisNotMet,
    CollisionStop,
    /// A theorem falsifier.
    Violation,
    /// An individual sweep entry failed with an error.
    Failed,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Failed => 1,
            Status::HypothesisNotMet => 2,
            Status::CollisionStop => 3,
            Status::Violation => 4,
        }
    }

    fn from_exit_code(code: i32) -> Self {
        match code {
            0 => Status::Ok,
            2 => Status::HypothesisNotMet,
            3 => Status::CollisionStop,
            4 => Status::Violation,
            _ => Status::Failed,
        }
    }

    fn from_termination(t: &Termination) -> Self {
        if t.is_completed() {
            Status::Ok
        } else {
            Status::CollisionStop
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    pub status: Status,
    pub manifest: Manifest,
}

#[derive(Serialize)]
struct IcSummary<'a> {
    provenance: &'a str,
    masses: Masses,
    energy: f64,
    angular_momentum: f64,
    period: Option<f64>,
}

impl<'a> From<&'a InitialCondition> for IcSummary<'a> {
    fn from(ic: &'a InitialCondition) -> Self {
        Self {
            provenance: &ic.provenance,
            masses: ic.masses,
            energy: ic.energy,
            angular_momentum: ic.angular_momentum,
            period: ic.period,
        }
    }
}

/// Common wrapper of every JSON report.
#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    command: &'static str,
    initial_condition: IcSummary<'a>,
    status: Status,
    exit_code: i32,
    message: Option<String>,
    report: Option<T>,
}

impl<'a, T: Serialize> Envelope<'a, T> {
    fn new(cmd: Command, ic: &'a InitialCondition, status: Status, message: Option<String>, report: Option<T>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: cmd.name(),
            initial_condition: ic.into(),
            status,
            exit_code: status.exit_code(),
            message,
            report,
        }
    }
}

fn dense(cfg: &IntegratorConfig) -> IntegratorConfig {
    IntegratorConfig { dense: true, ..*cfg }
}

fn lab_config(scn: &Scenario) -> LabConfig {
    LabConfig { integrator: scn.integrator, detector: scn.detector, momentum_tol: scn.params.momentum_tol }
}

/// Runs `cmd` on `scn`, writing into `out`. `workers` sizes the sweep pool.
pub fn run_command(cmd: Command, scn: &Scenario, out: &Path, workers: usize) -> Result<RunOutcome, CliError> {
    let mut dir = OutputDir::create(out)?;
    dir.write("scenario.json", scn.canonical_json().as_bytes())?;
    let status = match cmd {
        Command::Simulate => simulate(scn, &mut dir)?,
        Command::Events => events(scn, &mut dir)?,
        Command::VerifyThm1 | Command::VerifyThm3 => verify_bounded(cmd, scn, &mut dir)?,
        Command::VerifyThm2 => verify_periodic(scn, &mut dir)?,
        Command::Sweep => sweep(scn, &mut dir, workers)?,
        Command::OracleMinf => oracle_minf(scn, &mut dir)?,
    };
    Ok(RunOutcome { status, manifest: dir.finish()? })
}

#[derive(Serialize)]
struct RunSummary {
    t_target: f64,
    t_reached: f64,
    termination: Termination,
    stats: StepStats,
    energy_drift: f64,
    momentum_drift: f64,
}

impl From<&Trajectory> for RunSummary {
    fn from(traj: &Trajectory) -> Self {
        let (energy_drift, momentum_drift) = traj.drift_report();
        Self {
            t_target: traj.t_target,
            t_reached: traj.t_end(),
            termination: traj.termination,
            stats: traj.stats,
            energy_drift,
            momentum_drift,
        }
    }
}

fn run_span(scn: &Scenario, ic: &InitialCondition) -> Result<Trajectory, CliError> {
    let t_end = scn.params.t_end.or(ic.period).unwrap_or(10.0);
    Ok(integrate(&ic.masses, &ic.state, t_end, &dense(&scn.integrator))?)
}

fn simulate(scn: &Scenario, dir: &mut OutputDir) -> Result<Status, CliError> {
    let ic = scn.initial_condition(0)?;
    let traj = run_span(scn, &ic)?;
    dir.write("trajectory.csv", trajectory_csv(&traj, scn.params.samples)?.as_bytes())?;
    let status = Status::from_termination(&traj.termination);
    dir.write_json("summary.json", &Envelope::new(Command::Simulate, &ic, status, None, Some(RunSummary::from(&traj))))?;
    Ok(status)
}

#[derive(Serialize)]
struct EventSummary {
    which: Which,
    count: usize,
    identically_zero: Vec<Monitor>,
    run: RunSummary,
}

fn events(scn: &Scenario, dir: &mut OutputDir) -> Result<Status, CliError> {
    let ic = scn.initial_condition(0)?;
    let traj = run_span(scn, &ic)?;
    let scan = scan_events(&traj, scn.params.which, &scn.detector);
    dir.write("events.csv", events_csv(&scan.events).as_bytes())?;
    let status = Status::from_termination(&traj.termination);
    let summary = EventSummary {
        which: scn.params.which,
        count: scan.events.len(),
        identically_zero: scan.identically_zero,
        run: RunSummary::from(&traj),
    };
    dir.write_json("events.json", &Envelope::new(Command::Events, &ic, status, None, Some(summary)))?;
    Ok(status)
}

/// Report or hypothesis failure for one bounded-time theorem run.
fn bounded_run(
    theorem: SweepTheorem,
    ic: &InitialCondition,
    cfg: &LabConfig,
) -> Result<(Status, Option<String>, Option<TheoremReport>), CliError> {
    let run = match theorem {
        SweepTheorem::Theorem1 => verify_theorem1(&ic.masses, &ic.state, cfg),
        SweepTheorem::Theorem3 => verify_theorem3(&ic.masses, &ic.state, cfg),
    };
    match run {
        Ok(r) => Ok((Status::from_exit_code(r.outcome.exit_code()), None, Some(r))),
        Err(Error::HypothesisNotMet(msg)) => Ok((Status::HypothesisNotMet, Some(msg), None)),
        Err(e) => Err(e.into()),
    }
}

fn verify_bounded(cmd: Command, scn: &Scenario, dir: &mut OutputDir) -> Result<Status, CliError> {
    let theorem = if cmd == Command::VerifyThm1 { SweepTheorem::Theorem1 } else { SweepTheorem::Theorem3 };
    let ic = scn.initial_condition(0)?;
    let (status, message, report) = bounded_run(theorem, &ic, &lab_config(scn))?;
    dir.write_json("report.json", &Envelope::new(cmd, &ic, status, message, report))?;
    Ok(status)
}

fn verify_periodic(scn: &Scenario, dir: &mut OutputDir) -> Result<Status, CliError> {
    let ic = scn.initial_condition(0)?;
    let period = scn
        .params
        .period
        .or(ic.period)
        .ok_or_else(|| CliError::Scenario("params.period: required when the initial condition has no known period".into()))?;
    let traj = integrate(&ic.masses, &ic.state, period, &dense(&scn.integrator))?;
    let (status, message, report) = theorem2(scn, &traj)?;
    dir.write_json("report.json", &Envelope::new(Command::VerifyThm2, &ic, status, message, report))?;
    Ok(status)
}

fn theorem2(scn: &Scenario, traj: &Trajectory) -> Result<(Status, Option<String>, Option<Theorem2Report>), CliError> {
    let not_met = |msg: String| Ok((Status::HypothesisNotMet, Some(msg), None));
    if !traj.termination.is_completed() {
        return Ok((Status::CollisionStop, Some(format!("{:?}", traj.termination)), None));
    }
    let rigidity = scn.params.rigidity;
    let theta = match scn.params.theta {
        Some(th) => match ThetaVector::new(th) {
            Ok(t) => t,
            Err(e) => return not_met(e.to_string()),
        },
        None => match find_theta(traj, &rigidity) {
            Ok(Some(t)) => t,
            Ok(None) => return not_met("no rigidity weights exist for this orbit".into()),
            Err(e) => return not_met(e.to_string()),
        },
    };
    let cfg = Theorem2Config { rigidity, detector: scn.detector, ..Theorem2Config::default() };
    match verify_theorem2_periodic(traj, &theta, &cfg) {
        Ok(r) => Ok((Status::from_exit_code(r.exit_code()), None, Some(r))),
        Err(e @ (Error::HypothesisNotMet(_) | Error::NotPeriodic(_))) => not_met(e.to_string()),
        Err(e) => Err(e.into()),
    }
}

#[derive(Serialize)]
struct SweepEntry {
    ic_id: usize,
    seed: Option<u64>,
    status: Status,
    exit_code: i32,
    message: Option<String>,
    report: Option<TheoremReport>,
}

#[derive(Serialize)]
struct SweepAggregate {
    schema_version: u32,
    command: &'static str,
    theorem: SweepTheorem,
    count: usize,
    event_found: usize,
    collision_stop: usize,
    violation: usize,
    hypothesis_not_met: usize,
    failed: usize,
    /// Largest `t0 / bound` among runs that found their event.
    max_event_ratio: f64,
    violations: Vec<usize>,
    status: Status,
    exit_code: i32,
}

fn sweep_entry(scn: &Scenario, id: usize, cfg: &LabConfig) -> SweepEntry {
    let seed = match &scn.initial_condition {
        IcSource::Sampler(s) => Some(s.seed.wrapping_add(id as u64)),
        _ => None,
    };
    let run = scn.initial_condition(id).and_then(|ic| bounded_run(scn.params.theorem, &ic, cfg));
    let (status, message, report) = match run {
        Ok(r) => r,
        Err(e) => (Status::Failed, Some(e.to_string()), None),
    };
    SweepEntry { ic_id: id, seed, status, exit_code: status.exit_code(), message, report }
}

fn sweep(scn: &Scenario, dir: &mut OutputDir, workers: usize) -> Result<Status, CliError> {
    let cfg = lab_config(scn);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build()?;
    let mut entries: Vec<SweepEntry> =
        pool.install(|| (0..scn.ic_count()).into_par_iter().map(|id| sweep_entry(scn, id, &cfg)).collect());
    entries.sort_by_key(|e| e.ic_id);

    let count = |s: Status| entries.iter().filter(|e| e.status == s).count();
    let violations: Vec<usize> = entries.iter().filter(|e| e.status == Status::Violation).map(|e| e.ic_id).collect();
    let max_event_ratio = entries
        .iter()
        .filter_map(|e| e.report.as_ref())
        .filter_map(|r| match r.outcome {
            Outcome::EventFound { t0, .. } => Some(t0 / r.bound),
            _ => None,
        })
        .fold(0.0, f64::max);
    let status = if !violations.is_empty() {
        Status::Violation
    } else if count(Status::Failed) > 0 {
        Status::Failed
    } else {
        Status::Ok
    };
    let aggregate = SweepAggregate {
        schema_version: SCHEMA_VERSION,
        command: Command::Sweep.name(),
        theorem: scn.params.theorem,
        count: entries.len(),
        event_found: entries
            .iter()
            .filter(|e| matches!(e.report, Some(TheoremReport { outcome: Outcome::EventFound { .. }, .. })))
            .count(),
        collision_stop: count(Status::CollisionStop),
        violation: violations.len(),
        hypothesis_not_met: count(Status::HypothesisNotMet),
        failed: count(Status::Failed),
        max_event_ratio,
        violations,
        status,
        exit_code: status.exit_code(),
    };
    dir.write_json("sweep_reports.json", &entries)?;
    dir.write_json("aggregate.json", &aggregate)?;
    Ok(status)
}

#[derive(Serialize)]
struct MinFReport {
    schema_version: u32,
    command: &'static str,
    masses: Masses,
    config: MinFConfig,
    result: MinFResult,
    value_agrees: bool,
    argmin_agrees: bool,
}

fn oracle_minf(scn: &Scenario, dir: &mut OutputDir) -> Result<Status, CliError> {
    let result = minf_oracle(&scn.masses, scn.params.minf_level, &scn.params.minf)?;
    dir.write_json(
        "minf.json",
        &MinFReport {
            schema_version: SCHEMA_VERSION,
            command: Command::OracleMinf.name(),
            masses: scn.masses,
            config: scn.params.minf,
            value_agrees: result.value_rel_err <= 1e-4,
            argmin_agrees: result.argmin_rel_err <= 1e-2,
            result,
        },
    )?;
    Ok(Status::Ok)
}
