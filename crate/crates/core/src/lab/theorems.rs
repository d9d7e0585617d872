//! Time-bound experiments: a syzygy within `T1` for zero angular momentum and
//! a generalised syzygy within `T` for antisymmetric starts.

use serde::{Deserialize, Serialize};

use crate::conley::{energy_bounds, trace_bound_check};
use crate::error::{Error, Result};
use crate::events::{
    antisymmetry_indicator, refine_on_trajectory, scan_events, step_has_zero, DetectorConfig,
    EventKind, Monitor, Which,
};
use crate::integrator::{integrate_until, interpolate, IntegratorConfig, Termination, Trajectory};
use crate::state::{angular_momentum, angular_momentum_scale, total_energy, BodyState, Masses};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoremId {
    Theorem1,
    Theorem2,
    Theorem3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LabConfig {
    pub integrator: IntegratorConfig,
    pub detector: DetectorConfig,
    /// `|I| <= momentum_tol * scale` counts as zero angular momentum.
    pub momentum_tol: f64,
}

impl Default for LabConfig {
    fn default() -> Self {
        Self {
            integrator: IntegratorConfig::default(),
            detector: DetectorConfig::default(),
            momentum_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Hypotheses {
    pub alpha: f64,
    pub angular_momentum: f64,
    pub angular_momentum_scale: f64,
    /// `delta1 * delta2` at the start (antisymmetric runs only).
    pub antisymmetry: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome {
    EventFound { t0: f64, kind: EventKind },
    /// Integration ended before the bound without an event.
    CollisionStop { t_stop: f64, termination: Termination },
    /// Collision-free up to the bound with no event.
    Violation { t_checked: f64 },
}

impl Outcome {
    /// Process exit status: 0 found, 3 collision stop, 4 violation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Outcome::EventFound { .. } => 0,
            Outcome::CollisionStop { .. } => 3,
            Outcome::Violation { .. } => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    pub energy_drift: f64,
    pub momentum_drift: f64,
    pub steps: usize,
    pub rejected: usize,
    /// Smallest `(bound - tr A) / |tr A|` over accepted steps.
    pub min_trace_margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoremReport {
    pub theorem: TheoremId,
    pub hypotheses: Hypotheses,
    pub bound: f64,
    pub outcome: Outcome,
    pub diagnostics: Diagnostics,
}

fn energy_alpha(m: &Masses, ic: &BodyState) -> Result<f64> {
    let h = total_energy(m, ic)?;
    if h >= 0.0 {
        return Err(Error::HypothesisNotMet(format!("energy must be negative, got H = {h}")));
    }
    Ok(-h)
}

/// Syzygy within `T1 = sqrt(2) pi Sigma / alpha^{3/2}` for zero angular momentum.
pub fn verify_theorem1(m: &Masses, ic: &BodyState, cfg: &LabConfig) -> Result<TheoremReport> {
    let alpha = energy_alpha(m, ic)?;
    let k = angular_momentum(m, ic);
    let scale = angular_momentum_scale(m, ic);
    if k.abs() > cfg.momentum_tol * scale {
        return Err(Error::HypothesisNotMet(format!(
            "angular momentum must vanish, got I = {k:e} (scale {scale:e})"
        )));
    }
    let bound = energy_bounds(m, alpha)?.t1;
    let hypotheses = Hypotheses { alpha, angular_momentum: k, angular_momentum_scale: scale, antisymmetry: None };
    run_bounded(TheoremId::Theorem1, m, ic, bound, Which::Delta1, hypotheses, cfg)
}

/// Generalised syzygy within `T = pi Sigma / alpha^{3/2}` for antisymmetric starts.
pub fn verify_theorem3(m: &Masses, ic: &BodyState, cfg: &LabConfig) -> Result<TheoremReport> {
    let alpha = energy_alpha(m, ic)?;
    let ind = antisymmetry_indicator(m, ic, cfg.detector.tol_event);
    if !ind.is_antisymmetric {
        return Err(Error::HypothesisNotMet(format!(
            "start must be antisymmetric, got delta1 * delta2 = {:e}",
            ind.value
        )));
    }
    let bound = energy_bounds(m, alpha)?.t_gen;
    let hypotheses = Hypotheses {
        alpha,
        angular_momentum: angular_momentum(m, ic),
        angular_momentum_scale: angular_momentum_scale(m, ic),
        antisymmetry: Some(ind.value),
    };
    run_bounded(TheoremId::Theorem3, m, ic, bound, Which::Both, hypotheses, cfg)
}

fn run_bounded(
    theorem: TheoremId,
    m: &Masses,
    ic: &BodyState,
    bound: f64,
    which: Which,
    hypotheses: Hypotheses,
    cfg: &LabConfig,
) -> Result<TheoremReport> {
    let mut icfg = cfg.integrator;
    icfg.dense = true;
    let samples = cfg.detector.samples_per_step;
    let monitors = which.monitors();
    let t_bound = ic.t + bound;
    let traj = integrate_until(m, ic, t_bound, &icfg, |k0, k1| {
        monitors.iter().any(|&mon| step_has_zero(m, k0, k1, mon, samples))
    })?;

    let outcome = match first_event(&traj, which, &cfg.detector) {
        Some((t0, kind)) if t0 <= t_bound => Outcome::EventFound { t0: t0 - ic.t, kind },
        _ => match traj.termination {
            Termination::Completed => Outcome::Violation { t_checked: traj.t_end() - ic.t },
            termination => Outcome::CollisionStop { t_stop: traj.t_end() - ic.t, termination },
        },
    };
    Ok(TheoremReport { theorem, hypotheses, bound, outcome, diagnostics: diagnostics(&traj) })
}

/// First certified zero: a sign change, or a touching zero whose value is
/// within the event tolerance.
fn first_event(traj: &Trajectory, which: Which, det: &DetectorConfig) -> Option<(f64, EventKind)> {
    let m = &traj.masses;
    let initial = traj.initial();
    for &mon in which.monitors() {
        let (v, sc) = mon.eval(m, initial);
        if v.abs() <= det.tol_event * sc {
            return Some((initial.t, kind_of(mon)));
        }
    }
    let scan = scan_events(traj, which, det);
    let scale = |mon: Monitor| {
        traj.knots.iter().fold(0.0f64, |a, k| a.max(mon.eval(m, &k.state).1))
    };
    let found = scan.events.iter().find(|e| {
        if !e.grazing {
            return true;
        }
        match e.kind {
            EventKind::PositionSyzygy => e.delta1.abs() <= det.tol_event * scale(Monitor::Delta1),
            EventKind::VelocityAlignment => e.delta2.abs() <= det.tol_event * scale(Monitor::Delta2),
            EventKind::Simultaneous => true,
        }
    });
    if let Some(e) = found {
        return Some((e.t, e.kind));
    }
    if let Termination::Stopped { .. } = traj.termination {
        return last_step_zero(traj, which, det.samples_per_step);
    }
    None
}

fn kind_of(mon: Monitor) -> EventKind {
    match mon {
        Monitor::Delta1 => EventKind::PositionSyzygy,
        Monitor::Delta2 => EventKind::VelocityAlignment,
    }
}

/// Zero inside the step that fired the stop condition.
fn last_step_zero(traj: &Trajectory, which: Which, samples: usize) -> Option<(f64, EventKind)> {
    let n = traj.knots.len();
    if n < 2 {
        return None;
    }
    let (k0, k1) = (&traj.knots[n - 2], &traj.knots[n - 1]);
    let m = &traj.masses;
    let samples = samples.max(1);
    let h = k1.t() - k0.t();
    let mut best: Option<(f64, EventKind)> = None;
    for &mon in which.monitors() {
        let mut t_prev = k0.t();
        let mut v_prev = mon.eval(m, &k0.state).0;
        for j in 1..=samples {
            let t = if j == samples { k1.t() } else { k0.t() + h * j as f64 / samples as f64 };
            let v = mon.eval(m, &interpolate(k0, k1, t)).0;
            if v == 0.0 || v * v_prev < 0.0 {
                let tz = refine_on_trajectory(traj, mon, t_prev, t).unwrap_or(t);
                if best.map_or(true, |(tb, _)| tz < tb) {
                    best = Some((tz, kind_of(mon)));
                }
                break;
            }
            t_prev = t;
            v_prev = v;
        }
    }
    best
}

fn diagnostics(traj: &Trajectory) -> Diagnostics {
    let (energy_drift, momentum_drift) = traj.drift_report();
    let min_trace_margin = traj
        .knots
        .iter()
        .filter_map(|k| trace_bound_check(&traj.masses, &k.state).ok())
        .map(|b| b.margin / b.trace_a.abs())
        .fold(f64::INFINITY, f64::min);
    Diagnostics {
        energy_drift,
        momentum_drift,
        steps: traj.stats.accepted,
        rejected: traj.stats.rejected,
        min_trace_margin,
    }
}
