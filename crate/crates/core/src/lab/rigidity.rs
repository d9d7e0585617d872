//! Theta-rigidity of periodic orbits and the periodic-integral argument
//! forcing a syzygy.
//!
//! With `g = (rho_2 - rho_1, rho_0 - rho_2, rho_1 - rho_0)` the oriented
//! areas obey `dS_i/dt = m_i delta1 g_i`, so for `S(t; theta) = theta . g`
//! the combination `sum theta_i S_i / m_i` has derivative `delta1 S`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{scan_events, DetectorConfig, EventKind, Which};
use crate::integrator::Trajectory;
use crate::orbits::state_distance;
use crate::state::{mass_weighted_frame, pairwise_geometry_unchecked, BodyState, Masses, OPPOSITE_PAIRS as PAIRS};
use crate::state::accelerations_unchecked;

use super::fd::{self, GL5};

/// Differences of the inverse cubed distances entering `dS_i/dt`.
pub fn rho_differences(rho: &[f64; 3]) -> [f64; 3] {
    [rho[2] - rho[1], rho[0] - rho[2], rho[1] - rho[0]]
}

/// Certificate vector, normalised to sum zero and unit max-norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct ThetaVector([f64; 3]);

impl ThetaVector {
    /// Removes the `(1, 1, 1)` component and rescales; fails for multiples of it.
    pub fn new(theta: [f64; 3]) -> Result<Self> {
        if theta.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidConfig(format!("theta must be finite, got {theta:?}")));
        }
        let mean = theta.iter().sum::<f64>() / 3.0;
        let p = theta.map(|x| x - mean);
        let norm = p.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let size = theta.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if norm <= 1e-12 * size || norm == 0.0 {
            return Err(Error::InvalidConfig(format!("theta {theta:?} has no component off (1, 1, 1)")));
        }
        Ok(Self(p.map(|x| x / norm)))
    }

    pub fn components(&self) -> [f64; 3] {
        self.0
    }

    /// `S = theta . g`.
    pub fn apply(&self, rho: &[f64; 3]) -> f64 {
        s_value(&self.0, rho)
    }
}

impl TryFrom<[f64; 3]> for ThetaVector {
    type Error = Error;
    fn try_from(v: [f64; 3]) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ThetaVector> for [f64; 3] {
    fn from(t: ThetaVector) -> Self {
        t.0
    }
}

/// `S(t; theta)` for an arbitrary, unnormalised `theta`.
pub fn s_value(theta: &[f64; 3], rho: &[f64; 3]) -> f64 {
    let g = rho_differences(rho);
    theta[0] * g[0] + theta[1] * g[1] + theta[2] * g[2]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RigidityConfig {
    /// Uniform samples over the period, in addition to the accepted steps.
    pub grid: usize,
    /// Tolerance on `S`, relative to the largest `rho` met.
    pub tol_s: f64,
    /// Periodicity residual accepted as a closed orbit.
    pub periodic_tol: f64,
    /// Beyond this residual the input is rejected as non-periodic; in between
    /// the verdict is inconclusive.
    pub reject_tol: f64,
}

impl Default for RigidityConfig {
    fn default() -> Self {
        Self { grid: 4096, tol_s: 1e-9, periodic_tol: 1e-8, reject_tol: 1e-4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rigidity {
    Rigid,
    NotRigid,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RigidityCheck {
    pub verdict: Rigidity,
    pub min_s: f64,
    pub max_s: f64,
    /// `|theta|_inf * max rho`, the unit of `tol_s`.
    pub scale: f64,
    pub periodicity_residual: f64,
}

/// Endpoint mismatch of a trajectory meant to cover one period.
pub fn periodicity_of(traj: &Trajectory) -> f64 {
    state_distance(traj.initial(), traj.last())
}

fn check_periodic(traj: &Trajectory, cfg: &RigidityConfig) -> Result<f64> {
    if !traj.termination.is_completed() {
        return Err(Error::Terminated(traj.termination));
    }
    let res = periodicity_of(traj);
    if !(res <= cfg.reject_tol) {
        return Err(Error::NotPeriodic(res));
    }
    Ok(res)
}

/// Sample states on the uniform grid and at every accepted step.
fn sample_states(traj: &Trajectory, grid: usize) -> Vec<BodyState> {
    let (t0, t1) = (traj.t_start(), traj.t_end());
    let mut out: Vec<BodyState> = traj.knots.iter().map(|k| k.state).collect();
    let n = grid.max(2);
    for i in 0..n {
        let t = t0 + (t1 - t0) * i as f64 / (n - 1) as f64;
        out.push(traj.dense_eval(t).expect("grid inside trajectory"));
    }
    out
}

fn rho_of(s: &BodyState) -> [f64; 3] {
    pairwise_geometry_unchecked(s).rho
}

pub fn theta_rigidity_check(traj: &Trajectory, theta: &[f64; 3], cfg: &RigidityConfig) -> Result<RigidityCheck> {
    let res = check_periodic(traj, cfg)?;
    let states = sample_states(traj, cfg.grid);
    let mut min_s = f64::INFINITY;
    let mut max_s = f64::NEG_INFINITY;
    let mut max_rho = 0.0f64;
    for s in &states {
        let rho = rho_of(s);
        max_rho = rho.iter().fold(max_rho, |a, &r| a.max(r));
        let v = s_value(theta, &rho);
        min_s = min_s.min(v);
        max_s = max_s.max(v);
    }
    let scale = theta.iter().fold(0.0f64, |a, x| a.max(x.abs())) * max_rho;
    let rigid = min_s >= -cfg.tol_s * scale && max_s > 10.0 * cfg.tol_s * scale;
    let verdict = if !rigid {
        Rigidity::NotRigid
    } else if res <= cfg.periodic_tol {
        Rigidity::Rigid
    } else {
        Rigidity::Inconclusive
    };
    Ok(RigidityCheck { verdict, min_s, max_s, scale, periodicity_residual: res })
}

/// Searches for `theta` with `theta . g >= 0` on every sample and strictly
/// positive somewhere.
///
/// `g` lies in the plane orthogonal to `(1, 1, 1)`, so the problem is
/// two-dimensional: a feasible direction exists exactly when the sampled
/// directions of `g` fit in a closed half-plane, and the bisector of the
/// smallest arc containing them is then the most robust choice.
pub fn find_theta(traj: &Trajectory, cfg: &RigidityConfig) -> Result<Option<ThetaVector>> {
    check_periodic(traj, cfg)?;
    let states = sample_states(traj, cfg.grid);
    let rhos: Vec<[f64; 3]> = states.iter().map(rho_of).collect();
    let max_rho = rhos.iter().flatten().fold(0.0f64, |a, &r| a.max(r));
    let e1 = [1.0 / 2f64.sqrt(), -1.0 / 2f64.sqrt(), 0.0];
    let e2 = [1.0 / 6f64.sqrt(), 1.0 / 6f64.sqrt(), -2.0 / 6f64.sqrt()];
    let dot = |a: &[f64; 3], b: &[f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let floor = cfg.tol_s * max_rho;
    let mut angles: Vec<f64> = rhos
        .iter()
        .map(rho_differences)
        .filter_map(|g| {
            let (u, v) = (dot(&g, &e1), dot(&g, &e2));
            (u.hypot(v) > floor).then(|| v.atan2(u))
        })
        .collect();
    if angles.is_empty() {
        return Ok(None);
    }
    angles.sort_by(f64::total_cmp);
    // Largest gap between consecutive directions, including the wrap-around.
    let n = angles.len();
    let (mut gap, mut after) = (angles[0] + std::f64::consts::TAU - angles[n - 1], 0usize);
    for i in 1..n {
        let d = angles[i] - angles[i - 1];
        if d > gap {
            gap = d;
            after = i;
        }
    }
    if gap < std::f64::consts::PI {
        return Ok(None);
    }
    // The occupied arc runs from angles[after] counter-clockwise for TAU - gap.
    let mid = angles[after] + 0.5 * (std::f64::consts::TAU - gap);
    let (c, s) = (mid.cos(), mid.sin());
    let theta = ThetaVector::new(std::array::from_fn(|i| c * e1[i] + s * e2[i]))?;
    let check = theta_rigidity_check(traj, &theta.components(), cfg)?;
    Ok((check.verdict == Rigidity::Rigid).then_some(theta))
}

/// `integral of delta1 S dt` over the trajectory by 5-point Gauss-Legendre per step.
pub fn period_integral(traj: &Trajectory, theta: &[f64; 3]) -> f64 {
    let m = &traj.masses;
    traj.knots
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0].t(), w[1].t());
            let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
            h * GL5
                .iter()
                .map(|(x, wt)| {
                    let s = traj.dense_eval(c + h * x).expect("node inside step");
                    wt * mass_weighted_frame(m, &s).delta1 * s_value(theta, &rho_of(&s))
                })
                .sum::<f64>()
        })
        .sum()
}

/// `sum theta_i S_i / m_i`.
pub fn weighted_area_sum(m: &Masses, s: &BodyState, theta: &[f64; 3]) -> f64 {
    let f = mass_weighted_frame(m, s);
    (0..3).map(|i| theta[i] * f.s[i] / m.get(i)).sum()
}

/// Largest relative finite-difference error of `dS_i/dt = m_i delta1 g_i`
/// over `samples` interior times, with step `h`.
///
/// Each residual is divided by the size of the terms involved: the
/// cross-product operands `|w_i| |wddot_i|` of `dS_i/dt = w_i x wddot_i`
/// plus `m_i |delta1| (rho_j + rho_k)`, floored at `1e-3` of the largest
/// size over the samples.
pub fn area_rate_error(traj: &Trajectory, samples: usize, h: f64) -> f64 {
    let m = &traj.masses;
    let times = fd::interior_times(traj.t_start(), traj.t_end(), 2.0 * h, samples);
    let mut rows = Vec::with_capacity(times.len() * 3);
    for &t in &times {
        let at = |tt: f64| traj.dense_eval(tt).expect("stencil inside trajectory");
        let s = at(t);
        let f = mass_weighted_frame(m, &s);
        let rho = rho_of(&s);
        let g = rho_differences(&rho);
        let wdd = operand_sizes(m, &s);
        for i in 0..3 {
            let fd_rate = fd::first(|tt| mass_weighted_frame(m, &at(tt)).s[i], t, h);
            let exact = m.get(i) * f.delta1 * g[i];
            let size = wdd[i] + m.get(i) * f.delta1.abs() * (rho[PAIRS[i].0] + rho[PAIRS[i].1]);
            rows.push(((fd_rate - exact).abs(), size));
        }
    }
    relative_max(&rows)
}

/// Largest relative finite-difference error of `d/dt sum theta_i S_i / m_i = delta1 S`,
/// normalised as in [`area_rate_error`].
pub fn weighted_rate_error(traj: &Trajectory, theta: &[f64; 3], samples: usize, h: f64) -> f64 {
    let m = &traj.masses;
    let times = fd::interior_times(traj.t_start(), traj.t_end(), 2.0 * h, samples);
    let rows: Vec<(f64, f64)> = times
        .iter()
        .map(|&t| {
            let at = |tt: f64| traj.dense_eval(tt).expect("stencil inside trajectory");
            let s = at(t);
            let d1 = mass_weighted_frame(m, &s).delta1;
            let rho = rho_of(&s);
            let fd_rate = fd::first(|tt| weighted_area_sum(m, &at(tt), theta), t, h);
            let wdd = operand_sizes(m, &s);
            let size = (0..3)
                .map(|i| theta[i].abs() * (wdd[i] / m.get(i) + d1.abs() * (rho[PAIRS[i].0] + rho[PAIRS[i].1])))
                .sum::<f64>();
            ((fd_rate - d1 * s_value(theta, &rho)).abs(), size)
        })
        .collect();
    relative_max(&rows)
}

/// `|w_i| |wddot_i| = m_i^2 |r_i| |a_i|`.
fn operand_sizes(m: &Masses, s: &BodyState) -> [f64; 3] {
    let acc = accelerations_unchecked(m, &s.pos);
    std::array::from_fn(|i| m.get(i) * m.get(i) * s.pos[i].norm() * acc[i].norm())
}

/// `max residual / max(size, 1e-3 max size)` over `(residual, size)` rows.
pub(crate) fn relative_max(rows: &[(f64, f64)]) -> f64 {
    let top = rows.iter().fold(0.0f64, |a, r| a.max(r.1));
    if top == 0.0 {
        return rows.iter().fold(0.0f64, |a, r| a.max(r.0));
    }
    let floor = 1e-3 * top;
    rows.iter().fold(0.0f64, |a, &(res, size)| a.max(res / size.max(floor)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "conclusion", rename_all = "snake_case")]
pub enum Theorem2Outcome {
    /// First zero of `delta1` on the period.
    SyzygyFound { t0: f64 },
    /// `delta1` vanishes along the whole period.
    SyzygyEverywhere,
    /// No zero found: the period integral must then be nonzero while the
    /// periodic weighted area sum forces it to vanish.
    SyzygyFree { integral: f64, delta1_sign: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Theorem2Report {
    pub theta: ThetaVector,
    pub rigidity: RigidityCheck,
    pub outcome: Theorem2Outcome,
    /// `integral of delta1 S dt` over the period.
    pub period_integral: f64,
    pub area_rate_error: f64,
    pub weighted_rate_error: f64,
}

impl Theorem2Report {
    /// 0 when a syzygy is exhibited, 4 for a syzygy-free rigid orbit.
    pub fn exit_code(&self) -> i32 {
        match self.outcome {
            Theorem2Outcome::SyzygyFree { .. } => 4,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Theorem2Config {
    pub rigidity: RigidityConfig,
    pub detector: DetectorConfig,
    /// Finite-difference sample count.
    pub fd_samples: usize,
    /// Finite-difference step as a fraction of the period.
    pub fd_step: f64,
}

impl Default for Theorem2Config {
    fn default() -> Self {
        Self {
            rigidity: RigidityConfig::default(),
            detector: DetectorConfig::default(),
            fd_samples: 100,
            fd_step: 1e-4,
        }
    }
}

/// Runs the syzygy argument on one period of a periodic trajectory.
pub fn verify_theorem2_periodic(traj: &Trajectory, theta: &ThetaVector, cfg: &Theorem2Config) -> Result<Theorem2Report> {
    let th = theta.components();
    let rigidity = theta_rigidity_check(traj, &th, &cfg.rigidity)?;
    if rigidity.verdict != Rigidity::Rigid {
        return Err(Error::HypothesisNotMet(format!(
            "orbit is not certified theta-rigid ({:?}, min S = {:e}, max S = {:e})",
            rigidity.verdict, rigidity.min_s, rigidity.max_s
        )));
    }
    let h = cfg.fd_step * (traj.t_end() - traj.t_start());
    let integral = period_integral(traj, &th);
    let scan = scan_events(traj, Which::Delta1, &cfg.detector);
    let outcome = if !scan.identically_zero.is_empty() {
        Theorem2Outcome::SyzygyEverywhere
    } else if let Some(e) = scan.events.iter().find(|e| e.kind != EventKind::VelocityAlignment) {
        Theorem2Outcome::SyzygyFound { t0: e.t - traj.t_start() }
    } else {
        let d1 = mass_weighted_frame(&traj.masses, traj.initial()).delta1;
        Theorem2Outcome::SyzygyFree { integral, delta1_sign: d1.signum() }
    };
    Ok(Theorem2Report {
        theta: *theta,
        rigidity,
        outcome,
        period_integral: integral,
        area_rate_error: area_rate_error(traj, cfg.fd_samples, h),
        weighted_rate_error: weighted_rate_error(traj, &th, cfg.fd_samples, h),
    })
}
