//! Adaptive integration of the planar three-body equations with dense output.
//!
//! Steps are taken with the Dormand–Prince 5(4) pair under a PI step-size
//! controller. Each accepted step stores a [`Knot`] holding the state, the
//! accelerations and their time derivatives, so that positions and
//! velocities can be interpolated between knots by quintic Hermite
//! polynomials which match the knots exactly up to second order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{
    accelerations_unchecked, angular_momentum, jerks_unchecked, kinetic_energy,
    pairwise_geometry_unchecked, potential_energy, BodyState, Masses, Vec2, OPPOSITE_PAIRS,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    /// First trial step; chosen automatically when absent.
    pub initial_step: Option<f64>,
    pub max_steps: usize,
    /// Integration stops once a mutual distance drops below this fraction of
    /// the initial system size.
    pub collision_ratio: f64,
    /// Keep every accepted step. When off only the endpoints are retained.
    pub dense: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            initial_step: None,
            max_steps: 2_000_000,
            collision_ratio: 1e-8,
            dense: true,
        }
    }
}

impl IntegratorConfig {
    pub fn with_rtol(mut self, rtol: f64) -> Self {
        self.rtol = rtol;
        self
    }

    pub fn with_atol(mut self, atol: f64) -> Self {
        self.atol = atol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.rtol < 1e-2) {
            return Err(Error::InvalidConfig(format!("rtol must lie in (0, 1e-2), got {}", self.rtol)));
        }
        if !(self.atol > 0.0 && self.atol.is_finite()) {
            return Err(Error::InvalidConfig(format!("atol must be positive, got {}", self.atol)));
        }
        if let Some(h) = self.initial_step {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidConfig(format!("initial_step must be positive, got {h}")));
            }
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidConfig("max_steps must be positive".into()));
        }
        if !(self.collision_ratio >= 0.0 && self.collision_ratio < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "collision_ratio must lie in [0, 1), got {}",
                self.collision_ratio
            )));
        }
        Ok(())
    }
}

/// An accepted step endpoint with the derivatives used for interpolation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Knot {
    pub state: BodyState,
    pub acc: [Vec2; 3],
    pub jerk: [Vec2; 3],
}

impl Knot {
    pub fn new(m: &Masses, state: BodyState) -> Self {
        Self {
            acc: accelerations_unchecked(m, &state.pos),
            jerk: jerks_unchecked(m, &state.pos, &state.vel),
            state,
        }
    }

    #[inline]
    pub fn t(&self) -> f64 {
        self.state.t
    }
}

/// Quintic Hermite interpolation between two knots.
///
/// Positions use `(r, v, a)` at both ends, velocities `(v, a, jerk)`.
pub fn interpolate(k0: &Knot, k1: &Knot, t: f64) -> BodyState {
    if t == k0.t() {
        return k0.state;
    }
    if t == k1.t() {
        return k1.state;
    }
    let h = k1.t() - k0.t();
    let s = (t - k0.t()) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let s5 = s4 * s;
    let h0 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
    let h1 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
    let h2 = 0.5 * s2 - 1.5 * s3 + 1.5 * s4 - 0.5 * s5;
    let h3 = 0.5 * s3 - s4 + 0.5 * s5;
    let h4 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
    let h5 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
    let hh = h * h;
    let quintic = |p0: &Vec2, d0: &Vec2, dd0: &Vec2, p1: &Vec2, d1: &Vec2, dd1: &Vec2| {
        p0 * h0 + d0 * (h1 * h) + dd0 * (h2 * hh) + dd1 * (h3 * hh) + d1 * (h4 * h) + p1 * h5
    };
    let (a, b) = (&k0.state, &k1.state);
    let pos = [0, 1, 2].map(|i| quintic(&a.pos[i], &a.vel[i], &k0.acc[i], &b.pos[i], &b.vel[i], &k1.acc[i]));
    let vel = [0, 1, 2].map(|i| quintic(&a.vel[i], &k0.acc[i], &k0.jerk[i], &b.vel[i], &k1.acc[i], &k1.jerk[i]));
    BodyState::new(t, pos, vel)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Conservation drift after an accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Drift {
    pub t: f64,
    /// `|H(t) - H(0)| / |H(0)|` (absolute when `H(0) = 0`).
    pub energy: f64,
    /// `|I(t) - I(0)|`.
    pub momentum: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    /// The caller's stop condition fired.
    Stopped { t: f64 },
    CollisionApproach { t: f64, min_distance: f64, bodies: [usize; 2] },
    StepFailure { t: f64, step: f64 },
    MaxSteps { t: f64 },
}

impl Termination {
    pub fn is_completed(&self) -> bool {
        matches!(self, Termination::Completed)
    }
}

/// Accepted steps with dense output and conservation record.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub masses: Masses,
    pub knots: Vec<Knot>,
    pub drift: Vec<Drift>,
    pub stats: StepStats,
    pub termination: Termination,
    /// Requested end time.
    pub t_target: f64,
    /// Distance below which integration stops.
    pub collision_distance: f64,
    pub energy0: f64,
    pub momentum0: f64,
}

impl Trajectory {
    pub fn t_start(&self) -> f64 {
        self.knots[0].t()
    }

    pub fn t_end(&self) -> f64 {
        self.knots[self.knots.len() - 1].t()
    }

    pub fn initial(&self) -> &BodyState {
        &self.knots[0].state
    }

    pub fn last(&self) -> &BodyState {
        &self.knots[self.knots.len() - 1].state
    }

    /// Accepted step times.
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.knots.iter().map(Knot::t)
    }

    /// Index `i` of the step `[knots[i], knots[i + 1]]` containing `t`.
    pub fn segment_index(&self, t: f64) -> Result<usize> {
        let (t0, t1) = (self.t_start(), self.t_end());
        if !(t >= t0 && t <= t1) {
            return Err(Error::OutOfRange { t, start: t0, end: t1 });
        }
        if self.knots.len() == 1 {
            return Ok(0);
        }
        let i = self.knots.partition_point(|k| k.t() <= t);
        Ok(i.saturating_sub(1).min(self.knots.len() - 2))
    }

    /// State at `t` from the dense output.
    pub fn dense_eval(&self, t: f64) -> Result<BodyState> {
        let i = self.segment_index(t)?;
        if self.knots.len() == 1 {
            return Ok(self.knots[0].state);
        }
        Ok(interpolate(&self.knots[i], &self.knots[i + 1], t))
    }

    /// `(max relative energy drift, max absolute angular momentum drift)`.
    pub fn drift_report(&self) -> (f64, f64) {
        self.drift
            .iter()
            .fold((0.0, 0.0), |(e, l), d| (f64::max(e, d.energy), f64::max(l, d.momentum)))
    }
}

// Dormand–Prince 5(4) tableau (autonomous system, so the nodes are not needed).
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

type Flat = [f64; 12];

fn rhs(m: &Masses, y: &Flat) -> Flat {
    let s = BodyState::from_flat(0.0, y);
    let acc = accelerations_unchecked(m, &s.pos);
    let mut f = [0.0; 12];
    f[..6].copy_from_slice(&y[6..]);
    for i in 0..3 {
        f[6 + 2 * i] = acc[i].x;
        f[7 + 2 * i] = acc[i].y;
    }
    f
}

#[inline]
fn combo(y: &Flat, h: f64, terms: &[(f64, &Flat)]) -> Flat {
    let mut out = *y;
    for (c, k) in terms {
        for j in 0..12 {
            out[j] += h * c * k[j];
        }
    }
    out
}

fn scaled_rms(v: &Flat, y0: &Flat, y1: &Flat, cfg: &IntegratorConfig) -> f64 {
    let sum: f64 = (0..12)
        .map(|j| {
            let sk = cfg.atol + cfg.rtol * y0[j].abs().max(y1[j].abs());
            (v[j] / sk).powi(2)
        })
        .sum();
    (sum / 12.0).sqrt()
}

fn initial_step(m: &Masses, y0: &Flat, f0: &Flat, cfg: &IntegratorConfig, span: f64) -> f64 {
    let d0 = scaled_rms(y0, y0, y0, cfg);
    let d1 = scaled_rms(f0, y0, y0, cfg);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(span);
    let y1 = combo(y0, h0, &[(1.0, f0)]);
    let f1 = rhs(m, &y1);
    let diff: Flat = std::array::from_fn(|j| f1[j] - f0[j]);
    let d2 = scaled_rms(&diff, y0, y0, cfg) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span)
}

/// Step cap keeping any pair from closing more than a tenth of the current
/// minimum separation within one step.
fn separation_cap(s: &BodyState) -> f64 {
    let (dmin, _, _) = s.min_distance();
    let vrel = OPPOSITE_PAIRS
        .iter()
        .map(|&(a, b)| (s.vel[a] - s.vel[b]).norm())
        .fold(0.0, f64::max);
    if vrel > 0.0 {
        0.1 * dmin / vrel
    } else {
        f64::INFINITY
    }
}

fn energy(m: &Masses, s: &BodyState) -> f64 {
    kinetic_energy(m, s) - potential_energy(m, &pairwise_geometry_unchecked(s))
}

/// Integrates from `ic` to `t_end`; see [`integrate_until`].
pub fn integrate(m: &Masses, ic: &BodyState, t_end: f64, cfg: &IntegratorConfig) -> Result<Trajectory> {
    integrate_until(m, ic, t_end, cfg, |_, _| false)
}

/// Integrates from `ic` towards `t_end`, calling `stop(previous, current)`
/// after each accepted step; integration ends early when it returns `true`.
///
/// Collision approach, step-size underflow and exhaustion of the step
/// budget end the integration and are reported in
/// [`Trajectory::termination`]; the partial trajectory is returned.
pub fn integrate_until<F>(
    m: &Masses,
    ic: &BodyState,
    t_end: f64,
    cfg: &IntegratorConfig,
    mut stop: F,
) -> Result<Trajectory>
where
    F: FnMut(&Knot, &Knot) -> bool,
{
    cfg.validate()?;
    let (d, a, b) = ic.min_distance();
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::CollisionInput(a, b, d));
    }
    if !(t_end >= ic.t) {
        return Err(Error::InvalidConfig(format!("t_end {t_end} precedes start {}", ic.t)));
    }
    let collision_distance = cfg.collision_ratio * ic.size();
    if d < collision_distance {
        return Err(Error::CollisionApproach(a, b, d));
    }

    let energy0 = energy(m, ic);
    let momentum0 = angular_momentum(m, ic);
    let first = Knot::new(m, *ic);
    let mut traj = Trajectory {
        masses: *m,
        knots: vec![first],
        drift: vec![Drift { t: ic.t, energy: 0.0, momentum: 0.0 }],
        stats: StepStats::default(),
        termination: Termination::Completed,
        t_target: t_end,
        collision_distance,
        energy0,
        momentum0,
    };
    if t_end == ic.t {
        return Ok(traj);
    }

    let mut t = ic.t;
    let mut y = ic.to_flat();
    let mut k1 = rhs(m, &y);
    traj.stats.evaluations += 1;
    let mut h = cfg
        .initial_step
        .unwrap_or_else(|| initial_step(m, &y, &k1, cfg, t_end - t));
    let mut prev = first;
    let mut last = first;
    let mut fac_old = 1e-4_f64;
    const SAFETY: f64 = 0.9;
    const BETA: f64 = 0.04;
    let expo = 0.2 - 0.75 * BETA;

    loop {
        if traj.stats.accepted >= cfg.max_steps {
            traj.termination = Termination::MaxSteps { t };
            break;
        }
        let cap = separation_cap(&BodyState::from_flat(t, &y));
        h = h.min(cap);
        let remaining = t_end - t;
        let last_step = h >= remaining * (1.0 - 1e-12);
        if last_step {
            h = remaining;
        }
        if h <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
            traj.termination = Termination::StepFailure { t, step: h };
            break;
        }

        let k2 = rhs(m, &combo(&y, h, &[(A21, &k1)]));
        let k3 = rhs(m, &combo(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = rhs(m, &combo(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = rhs(m, &combo(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = rhs(m, &combo(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y_new = combo(&y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = rhs(m, &y_new);
        traj.stats.evaluations += 6;
        let err_vec: Flat = std::array::from_fn(|j| {
            h * (E1 * k1[j] + E3 * k3[j] + E4 * k4[j] + E5 * k5[j] + E6 * k6[j] + E7 * k7[j])
        });
        let err = scaled_rms(&err_vec, &y, &y_new, cfg);

        if !err.is_finite() {
            traj.stats.rejected += 1;
            h *= 0.25;
            continue;
        }
        let fac11 = err.powf(expo);
        if err <= 1.0 {
            let fac = (fac11 / fac_old.powf(BETA) / SAFETY).clamp(0.1, 5.0);
            fac_old = err.max(1e-4);
            t = if last_step { t_end } else { t + h };
            y = y_new;
            k1 = k7;
            traj.stats.accepted += 1;
            let state = BodyState::from_flat(t, &y);
            let knot = Knot::new(m, state);
            traj.drift.push(Drift {
                t,
                energy: {
                    let dh = (energy(m, &state) - energy0).abs();
                    if energy0 != 0.0 { dh / energy0.abs() } else { dh }
                },
                momentum: (angular_momentum(m, &state) - momentum0).abs(),
            });
            if cfg.dense {
                traj.knots.push(knot);
            }
            let fired = stop(&prev, &knot);
            prev = knot;
            last = knot;

            let (dmin, a, b) = state.min_distance();
            if dmin < collision_distance {
                traj.termination = Termination::CollisionApproach { t, min_distance: dmin, bodies: [a, b] };
                break;
            }
            if fired {
                traj.termination = Termination::Stopped { t };
                break;
            }
            if last_step {
                break;
            }
            h /= fac;
        } else {
            traj.stats.rejected += 1;
            h /= (fac11 / SAFETY).min(10.0);
        }
    }
    if !cfg.dense && last.t() != traj.knots[0].t() {
        traj.knots.push(last);
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::Masses;

    fn unit() -> Masses {
        Masses::equal(1.0).unwrap()
    }

    fn generic() -> BodyState {
        crate::state::reduce_to_barycentric(
            &unit(),
            &BodyState::from_arrays(
                0.0,
                [[-1.0, 0.1], [0.6, 0.4], [0.2, -0.8]],
                [[0.1, -0.3], [0.2, 0.25], [-0.3, 0.1]],
            ),
        )
        .unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(IntegratorConfig::default().validate().is_ok());
        assert!(IntegratorConfig::default().with_rtol(0.1).validate().is_err());
        assert!(IntegratorConfig::default().with_rtol(0.0).validate().is_err());
        assert!(IntegratorConfig::default().with_atol(-1.0).validate().is_err());
    }

    #[test]
    fn zero_length_trajectory() {
        let s = generic();
        let tr = integrate(&unit(), &s, 0.0, &IntegratorConfig::default()).unwrap();
        assert_eq!(tr.knots.len(), 1);
        assert_eq!(tr.drift_report(), (0.0, 0.0));
        assert_eq!(tr.dense_eval(0.0).unwrap(), s);
    }

    #[test]
    fn dense_eval_hits_knots_and_rejects_outside() {
        let tr = integrate(&unit(), &generic(), 1.0, &IntegratorConfig::default()).unwrap();
        assert!(tr.termination.is_completed());
        assert_eq!(tr.t_end(), 1.0);
        for k in &tr.knots {
            assert_eq!(tr.dense_eval(k.t()).unwrap(), k.state);
        }
        assert_eq!(tr.dense_eval(1.0).unwrap(), *tr.last());
        assert!(matches!(tr.dense_eval(1.5), Err(Error::OutOfRange { .. })));
        assert!(matches!(tr.dense_eval(-0.1), Err(Error::OutOfRange { .. })));
        let (e, l) = tr.drift_report();
        assert!(e >= 0.0 && l >= 0.0);
        assert!(tr.times().zip(tr.times().skip(1)).all(|(a, b)| b > a));
    }

    #[test]
    fn interpolant_matches_reintegration() {
        let cfg = IntegratorConfig::default();
        let tr = integrate(&unit(), &generic(), 2.0, &cfg).unwrap();
        let tight = IntegratorConfig::default().with_rtol(1e-13).with_atol(1e-15);
        for i in (0..tr.knots.len() - 1).step_by(7) {
            let (k0, k1) = (&tr.knots[i], &tr.knots[i + 1]);
            let tm = 0.5 * (k0.t() + k1.t());
            let dense = tr.dense_eval(tm).unwrap();
            let re = integrate(&unit(), &k0.state, tm, &tight).unwrap();
            let exact = re.last();
            for b in 0..3 {
                let scale = exact.pos[b].norm().max(1.0);
                assert!((dense.pos[b] - exact.pos[b]).norm() <= 10.0 * cfg.rtol * scale);
                let vscale = exact.vel[b].norm().max(1.0);
                assert!((dense.vel[b] - exact.vel[b]).norm() <= 10.0 * cfg.rtol * vscale);
            }
        }
    }

    #[test]
    fn head_on_stops_before_contact() {
        let s = crate::state::reduce_to_barycentric(
            &unit(),
            &BodyState::from_arrays(
                0.0,
                [[-0.5, 0.0], [0.5, 0.0], [0.0, 50.0]],
                [[0.5, 0.0], [-0.5, 0.0], [0.0, 0.0]],
            ),
        )
        .unwrap();
        let tr = integrate(&unit(), &s, 10.0, &IntegratorConfig::default()).unwrap();
        match tr.termination {
            Termination::CollisionApproach { min_distance, bodies, t } => {
                assert_eq!(bodies, [0, 1]);
                assert!(min_distance > 0.0 && min_distance < tr.collision_distance);
                assert!(t < 10.0);
            }
            other => panic!("unexpected termination {other:?}"),
        }
    }

    #[test]
    fn stop_callback_ends_integration() {
        let tr = integrate_until(&unit(), &generic(), 5.0, &IntegratorConfig::default(), |_, k| k.t() > 0.3)
            .unwrap();
        assert!(matches!(tr.termination, Termination::Stopped { t } if t > 0.3 && t < 5.0));
    }

    #[test]
    fn max_steps_is_reported() {
        let cfg = IntegratorConfig { max_steps: 5, ..Default::default() };
        let tr = integrate(&unit(), &generic(), 50.0, &cfg).unwrap();
        assert!(matches!(tr.termination, Termination::MaxSteps { .. }));
        assert_eq!(tr.knots.len(), 6);
    }

    #[test]
    fn sparse_mode_keeps_endpoints() {
        let cfg = IntegratorConfig { dense: false, ..Default::default() };
        let tr = integrate(&unit(), &generic(), 1.0, &cfg).unwrap();
        assert_eq!(tr.knots.len(), 2);
        assert_eq!(tr.t_end(), 1.0);
        assert!(tr.drift.len() > 2);
    }
}
