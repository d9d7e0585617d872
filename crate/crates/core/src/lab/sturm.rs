//! Comparison diagnostic on a syzygy-free window of a zero-momentum solution.
//!
//! `delta = sqrt|delta1|` satisfies `delta'' = eta delta` with
//! `eta = tr(A)/2 - (d delta1^2 - 4 delta1 delta2) / (4 delta1^2)`. At zero
//! angular momentum the discriminant is non-negative and `tr(A)/2 <= -zeta^2`,
//! so zeros of `delta1` can be at most `pi / zeta` apart.

use serde::{Deserialize, Serialize};

use crate::conley::{energy_bounds, trace_a};
use crate::error::{Error, Result};
use crate::events::{scan_events, DetectorConfig, Which};
use crate::integrator::Trajectory;
use crate::state::{
    angular_momentum, angular_momentum_scale, mass_weighted_frame, pairwise_geometry_unchecked, total_energy, BodyState,
    Masses,
};

use super::fd;
use super::rigidity::relative_max;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SturmConfig {
    pub samples: usize,
    pub momentum_tol: f64,
    pub detector: DetectorConfig,
}

impl Default for SturmConfig {
    fn default() -> Self {
        Self { samples: 200, momentum_tol: 1e-10, detector: DetectorConfig::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SturmSample {
    pub t: f64,
    pub eta: f64,
    pub half_trace: f64,
    /// `d delta1^2 - 4 delta1 delta2`.
    pub discriminant: f64,
    /// `d delta1^2 + 4 |delta1 delta2|`.
    pub discriminant_scale: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SturmReport {
    pub window: [f64; 2],
    pub alpha: f64,
    pub zeta_sq: f64,
    /// `pi / zeta`, the longest possible syzygy-free window.
    pub max_window: f64,
    pub samples: Vec<SturmSample>,
    /// Largest `eta - tr(A)/2`.
    pub max_eta_excess: f64,
    /// Smallest `-tr(A) / (2 zeta^2)`.
    pub min_trace_ratio: f64,
    /// Smallest discriminant relative to its scale.
    pub min_discriminant: f64,
    /// Smallest `(-zeta^2 - eta) / zeta^2`.
    pub min_margin: f64,
    /// Relative error of `delta'' = eta delta` by finite differences.
    pub fd_error: f64,
    /// Closest approach of two bodies over the samples, relative to the
    /// initial system size. Close encounters limit the finite-difference
    /// accuracy, since positions carry absolute rather than relative error.
    pub min_separation: f64,
}

struct LocalTerms {
    eta: f64,
    half_trace: f64,
    quotient: f64,
    discriminant: f64,
    discriminant_scale: f64,
    delta: f64,
    delta1: f64,
    delta1_dot: f64,
    delta1_scale: f64,
}

fn local_terms(m: &Masses, s: &BodyState) -> LocalTerms {
    let f = mass_weighted_frame(m, s);
    let half_trace = 0.5 * trace_a(m, &pairwise_geometry_unchecked(s));
    let d1dot = f.delta1_dot();
    let discriminant = d1dot * d1dot - 4.0 * f.delta1 * f.delta2;
    let quotient = discriminant / (4.0 * f.delta1 * f.delta1);
    LocalTerms {
        eta: half_trace - quotient,
        half_trace,
        quotient,
        discriminant,
        discriminant_scale: d1dot * d1dot + 4.0 * (f.delta1 * f.delta2).abs(),
        delta: f.delta1.abs().sqrt(),
        delta1: f.delta1,
        delta1_dot: d1dot,
        delta1_scale: f.delta1_scale(),
    }
}

/// Second-difference step for `delta`. The local time scale is the shortest of
/// the window, `|delta1 / delta1'|` and `|eta|^{-1/2}`; the step balances the
/// `h^4` truncation error against rounding in `delta`, which grows like
/// `scale / |delta1|` near a syzygy. Rounded down to a power of two.
fn fd_step(span: f64, x: &LocalTerms) -> f64 {
    let tau = span.min((x.delta1 / x.delta1_dot).abs()).min(x.eta.abs().sqrt().recip());
    let noise = 16.0 * f64::EPSILON * (x.delta1_scale / x.delta1.abs()).max(1.0);
    2f64.powi((tau * noise.powf(1.0 / 6.0)).log2().floor() as i32)
}

pub fn sturm_diagnostic(traj: &Trajectory, t_a: f64, t_b: f64, cfg: &SturmConfig) -> Result<SturmReport> {
    let m = &traj.masses;
    let s0 = traj.initial();
    let k = angular_momentum(m, s0);
    let k_scale = angular_momentum_scale(m, s0);
    if k.abs() > cfg.momentum_tol * k_scale {
        return Err(Error::HypothesisNotMet(format!("angular momentum must vanish, got I = {k:e}")));
    }
    let h0 = total_energy(m, s0)?;
    if h0 >= 0.0 {
        return Err(Error::HypothesisNotMet(format!("energy must be negative, got H = {h0}")));
    }
    if !(t_a < t_b) {
        return Err(Error::InvalidConfig(format!("empty window [{t_a}, {t_b}]")));
    }
    for t in [t_a, t_b] {
        if t < traj.t_start() || t > traj.t_end() {
            return Err(Error::OutOfRange { t, start: traj.t_start(), end: traj.t_end() });
        }
    }
    let bounds = energy_bounds(m, -h0)?;
    let d1_at = |t: f64| mass_weighted_frame(m, &traj.dense_eval(t).expect("inside window")).delta1;

    // Any zero of delta1 in the closed window invalidates it.
    let scan = scan_events(traj, Which::Delta1, &cfg.detector);
    let hit = !scan.identically_zero.is_empty()
        || scan.events.iter().any(|e| e.t >= t_a && e.t <= t_b && !e.grazing);
    let sign = d1_at(t_a).signum();
    let grid = fd::interior_times(t_a, t_b, 0.0, cfg.samples.max(2));
    if hit || sign == 0.0 || grid.iter().any(|&t| d1_at(t) * sign <= 0.0) {
        return Err(Error::WindowInvalid(t_a, t_b));
    }

    let span = (t_b - t_a).min(bounds.t1);
    let delta_at = |t: f64| d1_at(t).abs().sqrt();
    let mut samples = Vec::with_capacity(cfg.samples);
    let mut fd_rows = Vec::with_capacity(cfg.samples);
    let size = s0.size();
    let mut min_separation = f64::INFINITY;
    for t_grid in fd::interior_times(t_a, t_b, 0.0, cfg.samples) {
        let at_grid = local_terms(m, &traj.dense_eval(t_grid)?);
        let h = fd_step(span, &at_grid);
        // Snapping to a multiple of the power-of-two step makes every stencil
        // node exactly representable.
        let t = (t_grid / h).round() * h;
        if t - 2.0 * h < t_a || t + 2.0 * h > t_b {
            continue;
        }
        let state = traj.dense_eval(t)?;
        min_separation = min_separation.min(state.min_distance().0 / size);
        let x = local_terms(m, &state);
        let dd = fd::second(delta_at, t, h);
        fd_rows.push(((dd - x.eta * x.delta).abs(), (x.half_trace.abs() + x.quotient.abs()) * x.delta));
        samples.push(SturmSample {
            t,
            eta: x.eta,
            half_trace: x.half_trace,
            discriminant: x.discriminant,
            discriminant_scale: x.discriminant_scale,
            delta: x.delta,
        });
    }
    let zeta_sq = bounds.zeta_sq;
    let fold_min = |it: &mut dyn Iterator<Item = f64>| it.fold(f64::INFINITY, f64::min);
    Ok(SturmReport {
        window: [t_a, t_b],
        alpha: bounds.alpha,
        zeta_sq,
        max_window: bounds.t1,
        max_eta_excess: samples.iter().map(|s| s.eta - s.half_trace).fold(f64::NEG_INFINITY, f64::max),
        min_trace_ratio: fold_min(&mut samples.iter().map(|s| -s.half_trace / zeta_sq)),
        min_discriminant: fold_min(&mut samples.iter().map(|s| {
            if s.discriminant_scale > 0.0 { s.discriminant / s.discriminant_scale } else { 0.0 }
        })),
        min_margin: fold_min(&mut samples.iter().map(|s| (-zeta_sq - s.eta) / zeta_sq)),
        fd_error: relative_max(&fd_rows),
        min_separation,
        samples,
    })
}
