//! Location of syzygies (`delta1 = 0`) and velocity alignments (`delta2 = 0`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{interpolate, Knot, Trajectory};
use crate::state::{
    angular_momentum, kinetic_energy, mass_weighted_frame, pair_determinants,
    pairwise_geometry_unchecked, potential_energy, BodyState, Masses, OPPOSITE_PAIRS,
};

/// Which determinant is monitored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monitor {
    Delta1,
    Delta2,
}

impl Monitor {
    /// `(value, scale)` at a state; the scale is the largest pair product `|w_j||w_k|` or its velocity analogue.
    pub fn eval(self, m: &Masses, s: &BodyState) -> (f64, f64) {
        let f = mass_weighted_frame(m, s);
        match self {
            Monitor::Delta1 => (f.delta1, f.delta1_scale()),
            Monitor::Delta2 => (f.delta2, f.delta2_scale()),
        }
    }

    fn kind(self) -> EventKind {
        match self {
            Monitor::Delta1 => EventKind::PositionSyzygy,
            Monitor::Delta2 => EventKind::VelocityAlignment,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Which {
    Delta1,
    Delta2,
    Both,
}

impl Which {
    pub fn monitors(self) -> &'static [Monitor] {
        match self {
            Which::Delta1 => &[Monitor::Delta1],
            Which::Delta2 => &[Monitor::Delta2],
            Which::Both => &[Monitor::Delta1, Monitor::Delta2],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    PositionSyzygy,
    VelocityAlignment,
    Simultaneous,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::PositionSyzygy => "position_syzygy",
            EventKind::VelocityAlignment => "velocity_alignment",
            EventKind::Simultaneous => "simultaneous",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
    /// Body lying between the other two at a position syzygy.
    pub middle_body: Option<usize>,
    pub delta1: f64,
    pub delta2: f64,
    pub energy: f64,
    pub angular_momentum: f64,
    /// A touching zero without a sign change.
    pub grazing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorConfig {
    /// Zeros are certified when `|f| <= tol_event * scale`.
    pub tol_event: f64,
    /// Local minima of `|f|` below `tol_graze * scale` are reported as grazing.
    pub tol_graze: f64,
    /// Position and velocity zeros closer than this merge into one event.
    pub simultaneous_dt: f64,
    /// Dense-output samples per accepted step.
    pub samples_per_step: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            tol_event: 1e-11,
            tol_graze: 1e-7,
            simultaneous_dt: 1e-10,
            samples_per_step: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventScan {
    pub events: Vec<Event>,
    /// Monitors that vanish along the whole trajectory (e.g. `delta1` on a
    /// collinear solution); they produce no events.
    pub identically_zero: Vec<Monitor>,
}

/// Width below which a bracket is considered resolved.
#[inline]
pub fn time_resolution(t: f64) -> f64 {
    1e-12 * t.abs().max(1.0)
}

/// Illinois-modified regula falsi on a sign-changing bracket.
pub fn refine_event_time<F: FnMut(f64) -> f64>(mut f: F, t_lo: f64, t_hi: f64) -> Result<f64> {
    let (mut a, mut b) = (t_lo, t_hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !(fa * fb < 0.0) {
        return Err(Error::NoSignChange(t_lo, t_hi));
    }
    let mut side = 0i8;
    for _ in 0..200 {
        if (b - a).abs() <= time_resolution(0.5 * (a + b)) {
            break;
        }
        let mut c = (a * fb - b * fa) / (fb - fa);
        if !(c > a.min(b) && c < a.max(b)) {
            c = 0.5 * (a + b);
        }
        let fc = f(c);
        if fc == 0.0 {
            return Ok(c);
        }
        if fc * fb < 0.0 {
            a = b;
            fa = fb;
            b = c;
            fb = fc;
            side = 0;
        } else {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        }
    }
    Ok(if f(a).abs() < f(b).abs() { a } else { b })
}

fn golden_min<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..120 {
        if (b - a).abs() <= time_resolution(a) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc < fd { (c, fc) } else { (d, fd) }
}

struct Sample {
    t: f64,
    v: f64,
}

fn sample_monitor(traj: &Trajectory, monitor: Monitor, per_step: usize) -> (Vec<Sample>, f64) {
    let m = &traj.masses;
    let per_step = per_step.max(1);
    let mut out = Vec::with_capacity(traj.knots.len() * per_step + 1);
    let mut scale = 0.0f64;
    let n = traj.knots.len();
    for i in 0..n.saturating_sub(1) {
        let (k0, k1) = (&traj.knots[i], &traj.knots[i + 1]);
        let h = k1.t() - k0.t();
        for j in 0..per_step {
            let t = k0.t() + h * (j as f64) / (per_step as f64);
            let (v, sc) = monitor.eval(m, &interpolate(k0, k1, t));
            scale = scale.max(sc);
            out.push(Sample { t, v });
        }
    }
    let last = &traj.knots[n - 1];
    let (v, sc) = monitor.eval(m, &last.state);
    out.push(Sample { t: last.t(), v });
    (out, scale.max(sc))
}

fn segment_fn<'a>(traj: &'a Trajectory, monitor: Monitor) -> impl FnMut(f64) -> f64 + 'a {
    move |t| {
        let s = traj.dense_eval(t).expect("time inside trajectory");
        monitor.eval(&traj.masses, &s).0
    }
}

/// Zero of `monitor` inside `[t_lo, t_hi]` on the dense output.
pub fn refine_on_trajectory(traj: &Trajectory, monitor: Monitor, t_lo: f64, t_hi: f64) -> Result<f64> {
    refine_event_time(segment_fn(traj, monitor), t_lo, t_hi)
}

/// `(time, grazing)` of every zero of a single monitor, plus whether the
/// monitor vanishes identically.
fn monitor_zeros(traj: &Trajectory, monitor: Monitor, cfg: &DetectorConfig) -> (Vec<(f64, bool)>, bool) {
    let (samples, scale) = sample_monitor(traj, monitor, cfg.samples_per_step);
    // Collinear solutions drift off the line through their own instability,
    // so the whole-trajectory test uses the grazing band.
    if samples.iter().all(|s| s.v.abs() <= cfg.tol_graze * scale) {
        return (Vec::new(), true);
    }
    let graze = cfg.tol_graze * scale;
    let n = samples.len();
    let mut zeros = Vec::new();
    for k in 0..n {
        let s = &samples[k];
        if s.v == 0.0 {
            let crossing = k > 0 && k + 1 < n && samples[k - 1].v * samples[k + 1].v < 0.0;
            let boundary = k == 0 || k + 1 == n;
            zeros.push((s.t, !(crossing || boundary)));
            continue;
        }
        if k + 1 < n && s.v * samples[k + 1].v < 0.0 {
            if let Ok(t) = refine_on_trajectory(traj, monitor, s.t, samples[k + 1].t) {
                zeros.push((t, false));
            }
            continue;
        }
        // Interior local minimum of |f| without a sign change on either side.
        if k > 0 && k + 1 < n && s.v.abs() < graze {
            let (p, q) = (&samples[k - 1], &samples[k + 1]);
            let is_min = s.v.abs() <= p.v.abs() && s.v.abs() <= q.v.abs();
            if is_min && p.v * s.v > 0.0 && q.v * s.v > 0.0 {
                let sign = s.v.signum();
                let mut f = segment_fn(traj, monitor);
                let (tm, fm) = golden_min(|t| sign * f(t), p.t, q.t);
                if fm < 0.0 {
                    // Two transversal crossings hidden between samples.
                    if let Ok(t) = refine_on_trajectory(traj, monitor, p.t, tm) {
                        zeros.push((t, false));
                    }
                    if let Ok(t) = refine_on_trajectory(traj, monitor, tm, q.t) {
                        zeros.push((t, false));
                    }
                } else {
                    zeros.push((tm, true));
                }
            }
        }
    }
    zeros.sort_by(|a, b| a.0.total_cmp(&b.0));
    zeros.dedup_by(|a, b| (a.0 - b.0).abs() <= time_resolution(a.0) && a.1 == b.1);
    (zeros, false)
}

fn make_event(traj: &Trajectory, t: f64, kind: EventKind, grazing: bool, cfg: &DetectorConfig) -> Event {
    let m = &traj.masses;
    let s = traj.dense_eval(t).expect("event inside trajectory");
    let f = mass_weighted_frame(m, &s);
    let middle_body = match kind {
        EventKind::VelocityAlignment => None,
        _ => classify_middle_body(m, &s, cfg.tol_graze).ok(),
    };
    Event {
        t,
        kind,
        middle_body,
        delta1: f.delta1,
        delta2: f.delta2,
        energy: kinetic_energy(m, &s) - potential_energy(m, &pairwise_geometry_unchecked(&s)),
        angular_momentum: angular_momentum(m, &s),
        grazing,
    }
}

/// All zeros of the selected determinants along `traj`, ordered by time.
pub fn scan_events(traj: &Trajectory, which: Which, cfg: &DetectorConfig) -> EventScan {
    let mut tagged = Vec::new();
    let mut identically_zero = Vec::new();
    for &monitor in which.monitors() {
        let (zeros, degenerate) = monitor_zeros(traj, monitor, cfg);
        if degenerate {
            identically_zero.push(monitor);
        }
        tagged.extend(zeros.into_iter().map(|(t, g)| (t, monitor.kind(), g)));
    }
    tagged.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut events: Vec<Event> = Vec::with_capacity(tagged.len());
    for (t, kind, grazing) in tagged {
        if let Some(prev) = events.last_mut() {
            let merges = (t - prev.t).abs() <= cfg.simultaneous_dt
                && prev.kind != kind
                && prev.kind != EventKind::Simultaneous;
            if merges {
                *prev = make_event(traj, prev.t, EventKind::Simultaneous, prev.grazing && grazing, cfg);
                continue;
            }
        }
        events.push(make_event(traj, t, kind, grazing, cfg));
    }
    EventScan { events, identically_zero }
}

/// Whether `monitor` changes sign (or hits zero) inside the step `[k0, k1]`,
/// checked on `samples` interior points of the interpolant.
pub fn step_has_zero(m: &Masses, k0: &Knot, k1: &Knot, monitor: Monitor, samples: usize) -> bool {
    let n = samples.max(1);
    let h = k1.t() - k0.t();
    let mut prev = monitor.eval(m, &k0.state).0;
    for j in 1..=n {
        let v = if j == n {
            monitor.eval(m, &k1.state).0
        } else {
            monitor.eval(m, &interpolate(k0, k1, k0.t() + h * j as f64 / n as f64)).0
        };
        if v == 0.0 || prev * v < 0.0 {
            return true;
        }
        prev = v;
    }
    false
}

/// Sign of `delta1 * delta2` together with the unweighted pair products.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AntisymmetryIndicator {
    /// `delta1 * delta2`.
    pub value: f64,
    /// `det[r_j; r_k] det[v_j; v_k]` for pairs `(0,1)`, `(1,2)`, `(0,2)`.
    pub pair_products: [f64; 3],
    pub is_antisymmetric: bool,
}

pub const INDICATOR_PAIRS: [(usize, usize); 3] = [(0, 1), (1, 2), (0, 2)];

pub fn antisymmetry_indicator(m: &Masses, s: &BodyState, tol_event: f64) -> AntisymmetryIndicator {
    let f = mass_weighted_frame(m, s);
    let value = f.delta1 * f.delta2;
    let pair_products = INDICATOR_PAIRS.map(|(j, k)| {
        let (p, v) = pair_determinants(s, j, k);
        p * v
    });
    AntisymmetryIndicator {
        value,
        pair_products,
        is_antisymmetric: value < 0.0
            && f.delta1.abs() > tol_event * f.delta1_scale()
            && f.delta2.abs() > tol_event * f.delta2_scale(),
    }
}

/// The body between the other two at a (near) collinear configuration.
///
/// `tol` is relative to the largest `|w_j||w_k|`; larger `|delta1|` is `NotASyzygy`.
pub fn classify_middle_body(m: &Masses, s: &BodyState, tol: f64) -> Result<usize> {
    let f = mass_weighted_frame(m, s);
    if f.delta1.abs() > tol * f.delta1_scale() {
        return Err(Error::NotASyzygy(f.delta1));
    }
    let (a, b) = OPPOSITE_PAIRS
        .iter()
        .copied()
        .max_by(|x, y| {
            let dx = (s.pos[x.0] - s.pos[x.1]).norm();
            let dy = (s.pos[y.0] - s.pos[y.1]).norm();
            dx.total_cmp(&dy)
        })
        .expect("three pairs");
    let axis = s.pos[a] - s.pos[b];
    let len = axis.norm();
    if len == 0.0 {
        return Err(Error::Degenerate("coincident bodies"));
    }
    let u = axis / len;
    let mut proj: Vec<(f64, usize)> = (0..3).map(|i| (s.pos[i].dot(&u), i)).collect();
    proj.sort_by(|x, y| x.0.total_cmp(&y.0));
    let gap = (proj[1].0 - proj[0].0).min(proj[2].0 - proj[1].0);
    if gap <= 1e-15 * len {
        return Err(Error::Degenerate("coincident projections"));
    }
    Ok(proj[1].1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit() -> Masses {
        Masses::equal(1.0).unwrap()
    }

    fn at_rest(pos: [[f64; 2]; 3]) -> BodyState {
        BodyState::from_arrays(0.0, pos, [[0.0; 2]; 3])
    }

    #[test]
    fn linear_root_is_exact() {
        let t = refine_event_time(|t| 3.0 * (t - 0.3), 0.0, 1.0).unwrap();
        assert!((t - 0.3).abs() <= 1e-15);
    }

    #[test]
    fn cubic_root() {
        // (t - 0.7)(t^2 + 1) has a single real root.
        let t = refine_event_time(|t| (t - 0.7) * (t * t + 1.0), 0.0, 2.0).unwrap();
        assert!((t - 0.7).abs() <= 1e-12);
        // t^3 - 2 on [1, 2]: closed form 2^(1/3).
        let t = refine_event_time(|t| t * t * t - 2.0, 1.0, 2.0).unwrap();
        assert!((t - 2f64.cbrt()).abs() <= 1e-12);
    }

    #[test]
    fn same_sign_bracket_is_rejected() {
        assert!(matches!(
            refine_event_time(|t| t * t + 1.0, -1.0, 1.0),
            Err(Error::NoSignChange(..))
        ));
    }

    #[test]
    fn middle_body_examples() {
        let m = unit();
        assert_eq!(classify_middle_body(&m, &at_rest([[-1.0, 0.0], [0.0, 0.0], [1.0, 0.0]]), 1e-11).unwrap(), 1);
        assert_eq!(classify_middle_body(&m, &at_rest([[0.0, 0.0], [-1.0, 0.0], [1.0, 0.0]]), 1e-11).unwrap(), 0);
        let r = 1.0 / 3f64.sqrt();
        let tri = [90.0f64, 210.0, 330.0].map(|d| [r * d.to_radians().cos(), r * d.to_radians().sin()]);
        assert!(matches!(
            classify_middle_body(&m, &at_rest(tri), 1e-11),
            Err(Error::NotASyzygy(_))
        ));
    }

    #[test]
    fn indicator_examples() {
        let s = BodyState::from_arrays(
            0.0,
            [[1.0, 0.0], [0.0, 1.0], [-1.0, -1.0]],
            [[0.0, 1.0], [1.0, 0.0], [-1.0, -1.0]],
        );
        let ind = antisymmetry_indicator(&unit(), &s, 1e-11);
        assert_eq!(ind.value, -1.0);
        assert!(ind.is_antisymmetric);
        for p in ind.pair_products {
            assert_relative_eq!(p, -1.0, max_relative = 1e-15);
        }

        let collinear = BodyState::from_arrays(
            0.0,
            [[-1.0, 0.0], [0.0, 0.0], [1.0, 0.0]],
            [[0.0, 1.0], [0.3, -0.2], [-0.3, -0.8]],
        );
        let ind = antisymmetry_indicator(&unit(), &collinear, 1e-11);
        assert!(!ind.is_antisymmetric);
    }
}
