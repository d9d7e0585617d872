//! Fixture orbits and random initial conditions.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{integrate, IntegratorConfig};
use crate::state::{
    accelerations_unchecked, angular_momentum, mass_weighted_frame, reduce_to_barycentric,
    total_energy, BodyState, Masses, Vec2,
};

/// A fixture: masses, initial state and whatever is known about the orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialCondition {
    pub masses: Masses,
    pub state: BodyState,
    pub provenance: String,
    pub period: Option<f64>,
    pub energy: f64,
    pub angular_momentum: f64,
}

impl InitialCondition {
    /// Reduces `state` to the barycentric frame and records its invariants.
    pub fn new(masses: Masses, state: BodyState, provenance: impl Into<String>, period: Option<f64>) -> Result<Self> {
        let state = reduce_to_barycentric(&masses, &state)?;
        Ok(Self {
            energy: total_energy(&masses, &state)?,
            angular_momentum: angular_momentum(&masses, &state),
            masses,
            state,
            provenance: provenance.into(),
            period,
        })
    }
}

/// Counter-clockwise rigid rotation velocity `omega z x r`.
fn rotation_velocity(r: &Vec2, omega: f64) -> Vec2 {
    Vec2::new(-r.y, r.x) * omega
}

/// Equilateral configuration of side `side` in rigid rotation with
/// `omega^2 = M / side^3`. Body 0 starts straight above the triangle's centre.
pub fn lagrange_circular(m: &Masses, side: f64) -> Result<InitialCondition> {
    if !(side > 0.0 && side.is_finite()) {
        return Err(Error::InvalidConfig(format!("side must be positive, got {side}")));
    }
    let radius = side / 3f64.sqrt();
    let vertices = [90.0f64, 210.0, 330.0].map(|deg| {
        let a = deg.to_radians();
        Vec2::new(radius * a.cos(), radius * a.sin())
    });
    let placed = reduce_to_barycentric(m, &BodyState::new(0.0, vertices, [Vec2::zeros(); 3]))?;
    let omega = (m.total() / side.powi(3)).sqrt();
    let vel = placed.pos.map(|r| rotation_velocity(&r, omega));
    InitialCondition::new(
        *m,
        BodyState::new(0.0, placed.pos, vel),
        format!("lagrange_circular(side={side})"),
        Some(2.0 * PI / omega),
    )
}

/// Bodies on a line in the order `(left, middle, right)`.
fn collinear_order(middle: usize) -> Result<[usize; 3]> {
    match middle {
        0 => Ok([1, 0, 2]),
        1 => Ok([0, 1, 2]),
        2 => Ok([0, 2, 1]),
        _ => Err(Error::InvalidConfig(format!("middle body must be 0, 1 or 2, got {middle}"))),
    }
}

/// Barycentric positions on the x axis for `left = 0`, `middle = 1`,
/// `right = 1 + ratio`, indexed in line order.
fn line_positions(mass: [f64; 3], ratio: f64) -> [f64; 3] {
    let q = [0.0, 1.0, 1.0 + ratio];
    let c = (0..3).map(|i| mass[i] * q[i]).sum::<f64>() / mass.iter().sum::<f64>();
    q.map(|x| x - c)
}

fn line_accelerations(mass: [f64; 3], q: [f64; 3]) -> [f64; 3] {
    std::array::from_fn(|i| {
        (0..3)
            .filter(|&j| j != i)
            .map(|j| {
                let d = q[j] - q[i];
                mass[j] * d.signum() / (d * d)
            })
            .sum()
    })
}

/// Ratio `|right - middle| / |middle - left|` of the collinear central
/// configuration, found by bisection on the condition that the two outer
/// bodies feel accelerations proportional to their positions.
pub fn euler_ratio(m: &Masses, middle: usize) -> Result<f64> {
    let order = collinear_order(middle)?;
    let mass = order.map(|i| m.get(i));
    let mismatch = |x: f64| {
        let q = line_positions(mass, x);
        let a = line_accelerations(mass, q);
        a[0] * q[2] - a[2] * q[0]
    };
    let (mut lo, mut hi) = (1e-6, 1e6);
    let (flo, fhi) = (mismatch(lo), mismatch(hi));
    if flo.signum() == fhi.signum() {
        return Err(Error::Degenerate("no collinear central configuration bracketed"));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mismatch(mid).signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Collinear central configuration in rigid rotation.
///
/// `middle` selects the central body; the other two sit on the x axis in
/// index order, the lower index at distance `spacing` to the left of the
/// central one.
pub fn euler_circular(m: &Masses, middle: usize, spacing: f64) -> Result<InitialCondition> {
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::InvalidConfig(format!("spacing must be positive, got {spacing}")));
    }
    let order = collinear_order(middle)?;
    let mass = order.map(|i| m.get(i));
    let ratio = euler_ratio(m, middle)?;
    let q = line_positions(mass, ratio).map(|x| x * spacing);
    let a = line_accelerations(mass, q);
    // The body farthest from the centre of mass gives the best-conditioned rate.
    let far = if q[0].abs() > q[2].abs() { 0 } else { 2 };
    let omega = (-a[far] / q[far]).sqrt();
    let mut pos = [Vec2::zeros(); 3];
    let mut vel = [Vec2::zeros(); 3];
    for (slot, &body) in order.iter().enumerate() {
        pos[body] = Vec2::new(q[slot], 0.0);
        vel[body] = rotation_velocity(&pos[body], omega);
    }
    InitialCondition::new(
        *m,
        BodyState::new(0.0, pos, vel),
        format!("euler_circular(middle={middle}, spacing={spacing})"),
        Some(2.0 * PI / omega),
    )
}

/// Published approximate figure-eight data: body 0 at `POS`, body 1 at `-POS`,
/// body 2 at the origin with velocity `VEL`, bodies 0 and 1 moving with `-VEL/2`.
pub mod figure_eight_guess {
    pub const POS: [f64; 2] = [0.97000436, -0.24308753];
    pub const VEL: [f64; 2] = [-0.93240737, -0.86473146];
    pub const PERIOD: f64 = 6.32591398;
}

/// Figure-eight data after shooting refinement from [`figure_eight_guess`]
/// (see [`refine_figure_eight`]). The start is an Euler configuration.
pub mod figure_eight_refined {
    pub const POS: [f64; 2] = [0.97000436, -0.24308753];
    pub const VEL: [f64; 2] = [-0.93240736813899, -0.8647314618349874];
    pub const PERIOD: f64 = 6.325914009782326;
}

fn figure_eight_state(pos: [f64; 2], vel: [f64; 2]) -> BodyState {
    let p = Vec2::new(pos[0], pos[1]);
    let v = Vec2::new(vel[0], vel[1]);
    BodyState::new(0.0, [p, -p, Vec2::zeros()], [v * -0.5, v * -0.5, v])
}

/// Result of the periodicity shooting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FigureEightFit {
    pub vel: [f64; 2],
    pub period: f64,
    pub residual: f64,
    pub iterations: usize,
}

fn shooting_residual(m: &Masses, vel: [f64; 2], period: f64, cfg: &IntegratorConfig) -> Result<(DVector<f64>, BodyState)> {
    let s0 = figure_eight_state(figure_eight_guess::POS, vel);
    let tr = integrate(m, &s0, period, cfg)?;
    if !tr.termination.is_completed() {
        return Err(Error::Terminated(tr.termination));
    }
    let (a, b) = (tr.last().to_flat(), s0.to_flat());
    Ok((DVector::from_iterator(12, (0..12).map(|j| a[j] - b[j])), *tr.last()))
}

/// Gauss–Newton shooting on the initial velocity of the central body and the
/// period, keeping the published positions (which fix scale and orientation).
pub fn refine_figure_eight(vel: [f64; 2], period: f64, max_iter: usize) -> Result<FigureEightFit> {
    let m = Masses::equal(1.0)?;
    let cfg = IntegratorConfig::default().with_rtol(1e-13).with_atol(1e-15);
    let (mut v, mut t) = (vel, period);
    let (mut r, mut end) = shooting_residual(&m, v, t, &cfg)?;
    let mut iterations = 0;
    while iterations < max_iter && r.amax() > 1e-12 {
        iterations += 1;
        let mut jac = DMatrix::zeros(12, 3);
        let h = 1e-7;
        for c in 0..2 {
            let (mut vp, mut vm) = (v, v);
            vp[c] += h;
            vm[c] -= h;
            let (rp, _) = shooting_residual(&m, vp, t, &cfg)?;
            let (rm, _) = shooting_residual(&m, vm, t, &cfg)?;
            jac.set_column(c, &((rp - rm) / (2.0 * h)));
        }
        let acc = accelerations_unchecked(&m, &end.pos);
        let mut dt = DVector::zeros(12);
        for i in 0..3 {
            dt[2 * i] = end.vel[i].x;
            dt[2 * i + 1] = end.vel[i].y;
            dt[6 + 2 * i] = acc[i].x;
            dt[7 + 2 * i] = acc[i].y;
        }
        jac.set_column(2, &dt);
        let step = jac
            .svd(true, true)
            .solve(&(-&r), 1e-12)
            .map_err(|e| Error::Degenerate(if e.is_empty() { "shooting" } else { "shooting solve failed" }))?;
        v = [v[0] + step[0], v[1] + step[1]];
        t += step[2];
        (r, end) = shooting_residual(&m, v, t, &cfg)?;
    }
    Ok(FigureEightFit { vel: v, period: t, residual: r.amax(), iterations })
}

/// The zero-angular-momentum figure-eight choreography (equal unit masses).
///
/// The refined orbit starts at an Euler configuration; the fixture is that
/// orbit advanced by a twelfth of its period so that `t = 0` sits between
/// two syzygies.
pub fn figure_eight() -> Result<InitialCondition> {
    let m = Masses::equal(1.0)?;
    let period = figure_eight_refined::PERIOD;
    let start = figure_eight_state(figure_eight_refined::POS, figure_eight_refined::VEL);
    let cfg = IntegratorConfig::default().with_rtol(1e-13).with_atol(1e-15);
    let tr = integrate(&m, &start, period / 12.0, &cfg)?;
    let mut s = *tr.last();
    s.t = 0.0;
    InitialCondition::new(m, s, "figure_eight(phase=1/12)", Some(period))
}

/// Constraints for [`random_ic`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerSpec {
    pub masses: Masses,
    pub negative_energy: bool,
    pub zero_momentum: bool,
    pub antisymmetric: bool,
    /// All velocities zero.
    pub free_fall: bool,
    pub min_separation: f64,
    /// Positions are drawn from `[-box_half, box_half]^2`.
    pub box_half: f64,
    /// Velocity components are drawn from `[-speed, speed]`.
    pub speed: f64,
    pub max_attempts: usize,
}

impl Default for SamplerSpec {
    fn default() -> Self {
        Self {
            masses: Masses::equal(1.0).expect("unit masses"),
            negative_energy: true,
            zero_momentum: false,
            antisymmetric: false,
            free_fall: false,
            min_separation: 0.1,
            box_half: 1.0,
            speed: 1.0,
            max_attempts: 10_000,
        }
    }
}

/// Removes the rigid rotation `omega = I / sum m_i |r_i|^2`, leaving zero
/// angular momentum and unchanged linear momentum.
pub fn remove_rotation(m: &Masses, s: &BodyState) -> BodyState {
    let inertia: f64 = (0..3).map(|i| m.get(i) * s.pos[i].norm_squared()).sum();
    let omega = angular_momentum(m, s) / inertia;
    let vel = [0, 1, 2].map(|i| s.vel[i] - rotation_velocity(&s.pos[i], omega));
    BodyState::new(s.t, s.pos, vel)
}

fn sample_positions(rng: &mut ChaCha8Rng, spec: &SamplerSpec) -> Result<[Vec2; 3]> {
    for _ in 0..spec.max_attempts {
        let p = [0, 1, 2].map(|_| {
            Vec2::new(
                rng.gen_range(-spec.box_half..=spec.box_half),
                rng.gen_range(-spec.box_half..=spec.box_half),
            )
        });
        let ok = (0..3).all(|i| (p[i] - p[(i + 1) % 3]).norm() >= spec.min_separation);
        if ok {
            return Ok(p);
        }
    }
    Err(Error::SamplerExhausted(spec.max_attempts))
}

fn sample_velocities(rng: &mut ChaCha8Rng, spec: &SamplerSpec) -> [Vec2; 3] {
    [0, 1, 2].map(|_| Vec2::new(rng.gen_range(-spec.speed..=spec.speed), rng.gen_range(-spec.speed..=spec.speed)))
}

/// Seeded random initial condition satisfying `spec`.
pub fn random_ic(seed: u64, spec: &SamplerSpec) -> Result<InitialCondition> {
    if spec.free_fall && spec.antisymmetric {
        return Err(Error::InvalidConfig("free fall states have zero velocity determinant".into()));
    }
    if !(spec.min_separation >= 0.0 && spec.box_half > 0.0 && spec.speed >= 0.0) {
        return Err(Error::InvalidConfig("sampler box, speed and separation must be non-negative".into()));
    }
    let m = &spec.masses;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pos = sample_positions(&mut rng, spec)?;
    let placed = reduce_to_barycentric(m, &BodyState::new(0.0, pos, [Vec2::zeros(); 3]))?;
    for _ in 0..spec.max_attempts {
        let vel = if spec.free_fall { [Vec2::zeros(); 3] } else { sample_velocities(&mut rng, spec) };
        let mut s = reduce_to_barycentric(m, &BodyState::new(0.0, placed.pos, vel))?;
        if spec.zero_momentum {
            s = remove_rotation(m, &s);
        }
        if spec.negative_energy {
            let mut guard = 0;
            while total_energy(m, &s)? >= 0.0 {
                s = s.with_scaled_velocities(0.8);
                guard += 1;
                if guard > 400 {
                    return Err(Error::SamplerExhausted(guard));
                }
            }
        }
        if spec.antisymmetric {
            let f = mass_weighted_frame(m, &s);
            if !(f.delta1 * f.delta2 < 0.0) {
                continue;
            }
        }
        return InitialCondition::new(*m, s, format!("random(seed={seed})"), None);
    }
    Err(Error::SamplerExhausted(spec.max_attempts))
}

/// Scale-normalised distance between the state after `period` and the start:
/// `max_i max(|dr_i| / max_j |r_j|, |dv_i| / max_j |v_j|)`.
pub fn periodicity_residual(m: &Masses, s: &BodyState, period: f64, cfg: &IntegratorConfig) -> Result<f64> {
    if period == 0.0 {
        return Ok(0.0);
    }
    let tr = integrate(m, s, s.t + period, cfg)?;
    if !tr.termination.is_completed() {
        return Err(Error::Terminated(tr.termination));
    }
    Ok(state_distance(s, tr.last()))
}

/// Scale-normalised distance used for periodicity.
pub fn state_distance(a: &BodyState, b: &BodyState) -> f64 {
    let ps = a.pos.iter().map(|p| p.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let vs = a.vel.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let vs = if vs > 0.0 { vs } else { 1.0 };
    (0..3)
        .map(|i| ((a.pos[i] - b.pos[i]).norm() / ps).max((a.vel[i] - b.vel[i]).norm() / vs))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conley::{angular_momentum_routes, identity_residuals};
    use crate::state::{pairwise_geometry, BARYCENTRIC_TOL};
    use approx::assert_relative_eq;

    fn unit() -> Masses {
        Masses::equal(1.0).unwrap()
    }

    #[test]
    fn lagrange_unit_values() {
        let ic = lagrange_circular(&unit(), 1.0).unwrap();
        assert_relative_eq!(ic.energy, -1.5, max_relative = 1e-14);
        assert_relative_eq!(ic.angular_momentum, 3f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(ic.period.unwrap(), 2.0 * PI / 3f64.sqrt(), max_relative = 1e-15);
        let f = mass_weighted_frame(&unit(), &ic.state);
        assert_relative_eq!(f.delta1, 1.0 / (2.0 * 3f64.sqrt()), max_relative = 1e-14);
        let g = pairwise_geometry(&ic.state).unwrap();
        for r in g.rho {
            assert_relative_eq!(r, 1.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn lagrange_is_equilateral_for_any_masses() {
        let m = Masses::new(0.3, 1.1, 2.5).unwrap();
        let ic = lagrange_circular(&m, 1.7).unwrap();
        let g = pairwise_geometry(&ic.state).unwrap();
        for d in g.d {
            assert_relative_eq!(d, 1.7, max_relative = 1e-14);
        }
        assert!(ic.state.is_barycentric(&m));
    }

    #[test]
    fn euler_equal_masses() {
        assert_relative_eq!(euler_ratio(&unit(), 1).unwrap(), 1.0, max_relative = 1e-14);
        let d = 0.8;
        let ic = euler_circular(&unit(), 1, d).unwrap();
        assert!(ic.state.pos[1].norm() < 1e-15);
        assert_relative_eq!(ic.state.pos[0].x, -d, max_relative = 1e-14);
        assert_relative_eq!(ic.state.pos[2].x, d, max_relative = 1e-14);
        let omega = 2.0 * PI / ic.period.unwrap();
        assert_relative_eq!(omega * omega, 1.25 / d.powi(3), max_relative = 1e-14);
        assert_eq!(mass_weighted_frame(&unit(), &ic.state).delta1, 0.0);
    }

    #[test]
    fn euler_ratio_matches_quintic() {
        // Roots of the Euler quintic in the ratio x = |right - middle| / |middle - left|
        // with masses listed left, middle, right (30-digit evaluation).
        let m = Masses::new(1.0, 2.0, 3.0).unwrap();
        assert_relative_eq!(euler_ratio(&m, 1).unwrap(), 1.280_947_927_989_485, max_relative = 1e-13);
        assert_relative_eq!(euler_ratio(&m, 0).unwrap(), 1.138_140_722_946_987, max_relative = 1e-13);
        let quintic = |ma: f64, mb: f64, mc: f64, x: f64| {
            (ma + mb) * x.powi(5) + (3.0 * ma + 2.0 * mb) * x.powi(4) + (3.0 * ma + mb) * x.powi(3)
                - (mb + 3.0 * mc) * x * x
                - (2.0 * mb + 3.0 * mc) * x
                - (mb + mc)
        };
        let x = euler_ratio(&m, 2).unwrap();
        assert!(quintic(1.0, 3.0, 2.0, x).abs() < 1e-12);
        assert!(euler_circular(&m, 3, 1.0).is_err());
    }

    #[test]
    fn figure_eight_fixture() {
        let ic = figure_eight().unwrap();
        assert!(ic.angular_momentum.abs() <= 1e-10);
        assert!(ic.energy < 0.0);
        let f = mass_weighted_frame(&ic.masses, &ic.state);
        assert!(f.delta1.abs() > 0.1 * f.delta1_scale());
    }

    #[test]
    fn figure_eight_refinement_reproduces_shipped_values() {
        let fit = refine_figure_eight(figure_eight_guess::VEL, figure_eight_guess::PERIOD, 8).unwrap();
        assert!(fit.residual < 1e-11, "residual {}", fit.residual);
        assert!((fit.vel[0] - figure_eight_refined::VEL[0]).abs() < 1e-10);
        assert!((fit.vel[1] - figure_eight_refined::VEL[1]).abs() < 1e-10);
        assert!((fit.period - figure_eight_refined::PERIOD).abs() < 1e-10);
    }

    #[test]
    fn sampler_is_deterministic() {
        let spec = SamplerSpec { zero_momentum: true, ..Default::default() };
        let a = random_ic(42, &spec).unwrap();
        let b = random_ic(42, &spec).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.state, random_ic(43, &spec).unwrap().state);
    }

    #[test]
    fn sampler_constraints_hold() {
        for seed in 0..50 {
            let spec = SamplerSpec { zero_momentum: true, ..Default::default() };
            let ic = random_ic(seed, &spec).unwrap();
            let scale = crate::state::angular_momentum_scale(&ic.masses, &ic.state).max(1.0);
            assert!(ic.angular_momentum.abs() <= 1e-12 * scale);
            assert!(ic.energy < 0.0);
            assert!(ic.state.is_barycentric(&ic.masses));

            let spec = SamplerSpec { antisymmetric: true, ..Default::default() };
            let ic = random_ic(seed, &spec).unwrap();
            let f = mass_weighted_frame(&ic.masses, &ic.state);
            assert!(f.delta1 * f.delta2 < 0.0);
            assert!(ic.energy < 0.0);

            let spec = SamplerSpec { free_fall: true, ..Default::default() };
            let ic = random_ic(seed, &spec).unwrap();
            assert_eq!(ic.angular_momentum, 0.0);
            let r = identity_residuals(&ic.masses, &ic.state, 0.0);
            assert_eq!(r.discriminant, 0.0);
        }
    }

    #[test]
    fn sampler_rejects_impossible_specs() {
        let spec = SamplerSpec { free_fall: true, antisymmetric: true, ..Default::default() };
        assert!(matches!(random_ic(1, &spec), Err(Error::InvalidConfig(_))));
        let spec = SamplerSpec { min_separation: 10.0, max_attempts: 20, ..Default::default() };
        assert!(matches!(random_ic(1, &spec), Err(Error::SamplerExhausted(20))));
    }

    #[test]
    fn generators_are_barycentric_fixed_points() {
        let m = Masses::new(0.5, 1.0, 2.0).unwrap();
        let ics = [
            lagrange_circular(&m, 1.3).unwrap(),
            euler_circular(&m, 0, 0.7).unwrap(),
            random_ic(9, &SamplerSpec { masses: m, ..Default::default() }).unwrap(),
        ];
        for ic in ics {
            let again = reduce_to_barycentric(&m, &ic.state).unwrap();
            for i in 0..3 {
                assert!((again.pos[i] - ic.state.pos[i]).norm() <= BARYCENTRIC_TOL);
                assert!((again.vel[i] - ic.state.vel[i]).norm() <= BARYCENTRIC_TOL);
            }
            let routes = angular_momentum_routes(&m, &ic.state);
            assert_relative_eq!(routes[0], routes[1], epsilon = 1e-13, max_relative = 1e-12);
            assert_relative_eq!(routes[0], routes[2], epsilon = 1e-13, max_relative = 1e-12);
        }
    }

    #[test]
    fn rotation_removal_is_idempotent() {
        let s = random_ic(5, &SamplerSpec::default()).unwrap().state;
        let once = remove_rotation(&unit(), &s);
        let twice = remove_rotation(&unit(), &once);
        for i in 0..3 {
            assert!((once.vel[i] - twice.vel[i]).norm() <= 1e-14);
        }
    }

    #[test]
    fn velocity_scaling_lowers_energy() {
        let s = random_ic(11, &SamplerSpec::default()).unwrap().state;
        let mut last = f64::INFINITY;
        for lambda in [1.0, 0.8, 0.5, 0.2, 0.0] {
            let h = total_energy(&unit(), &s.with_scaled_velocities(lambda)).unwrap();
            assert!(h < last);
            last = h;
        }
    }

    #[test]
    fn periodicity_examples() {
        let ic = lagrange_circular(&unit(), 1.0).unwrap();
        let cfg = IntegratorConfig::default().with_rtol(1e-12).with_atol(1e-14);
        let p = ic.period.unwrap();
        assert!(periodicity_residual(&ic.masses, &ic.state, p, &cfg).unwrap() <= 1e-8);
        assert!(periodicity_residual(&ic.masses, &ic.state, 1.1 * p, &cfg).unwrap() >= 1e-2);
        assert_eq!(periodicity_residual(&ic.masses, &ic.state, 0.0, &cfg).unwrap(), 0.0);
    }
}
