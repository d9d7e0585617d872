use syzygy_core::integrator::{integrate, IntegratorConfig, Termination};
use syzygy_core::orbits::{euler_circular, figure_eight, lagrange_circular, periodicity_residual, state_distance};
use syzygy_core::state::{
    angular_momentum, mass_weighted_frame, pairwise_geometry, total_energy, BodyState, Masses, Vec2,
};

#[test]
fn rotating_triangle_keeps_its_sides() {
    for m in [Masses::equal(1.0).unwrap(), Masses::new(1.0, 2.0, 3.0).unwrap()] {
        let ic = lagrange_circular(&m, 1.0).unwrap();
        let period = ic.period.unwrap();
        let traj = integrate(&m, &ic.state, 3.0 * period, &IntegratorConfig::default()).unwrap();
        assert!(traj.termination.is_completed());
        let rho0 = pairwise_geometry(&ic.state).unwrap().rho;
        for k in 0..=3000 {
            let s = traj.dense_eval(3.0 * period * k as f64 / 3000.0).unwrap();
            let rho = pairwise_geometry(&s).unwrap().rho;
            for i in 0..3 {
                assert!((rho[i] / rho0[i] - 1.0).abs() <= 1e-8, "rho drift at sample {k}");
            }
        }
        let (energy, _) = traj.drift_report();
        assert!(energy <= 1e-9, "energy drift {energy:e}");
        assert!(periodicity_residual(&m, &ic.state, period, &IntegratorConfig::default()).unwrap() <= 1e-8);
    }
}

#[test]
fn equal_mass_triangle_invariants() {
    let ic = lagrange_circular(&Masses::equal(1.0).unwrap(), 1.0).unwrap();
    assert!((ic.energy + 1.5).abs() < 1e-14);
    assert!((ic.angular_momentum - 3f64.sqrt()).abs() < 1e-14);
}

#[test]
fn figure_eight_conserves_over_ten_periods() {
    let ic = figure_eight().unwrap();
    let period = ic.period.unwrap();
    let cfg = IntegratorConfig::default().with_rtol(1e-11).with_atol(1e-13);
    let traj = integrate(&ic.masses, &ic.state, 10.0 * period, &cfg).unwrap();
    let (energy, momentum) = traj.drift_report();
    assert!(energy <= 1e-8, "energy drift {energy:e}");
    assert!(momentum <= 1e-9, "momentum drift {momentum:e}");
    assert!(ic.energy < 0.0);
    assert!(ic.angular_momentum.abs() <= 1e-10);
}

#[test]
fn figure_eight_closes_after_one_period() {
    let ic = figure_eight().unwrap();
    let cfg = IntegratorConfig::default().with_rtol(1e-12).with_atol(1e-14);
    let period = ic.period.unwrap();
    assert!(periodicity_residual(&ic.masses, &ic.state, period, &cfg).unwrap() <= 1e-8);
    assert!(periodicity_residual(&ic.masses, &ic.state, 1.1 * period, &cfg).unwrap() >= 1e-2);
    assert_eq!(periodicity_residual(&ic.masses, &ic.state, 0.0, &cfg).unwrap(), 0.0);
}

#[test]
fn collinear_orbit_stays_collinear() {
    for middle in 0..3 {
        let ic = euler_circular(&Masses::new(1.0, 2.0, 3.0).unwrap(), middle, 1.0).unwrap();
        let cfg = IntegratorConfig::default().with_rtol(1e-12).with_atol(1e-14);
        let traj = integrate(&ic.masses, &ic.state, ic.period.unwrap(), &cfg).unwrap();
        for k in 0..=1000 {
            let s = traj.dense_eval(ic.period.unwrap() * k as f64 / 1000.0).unwrap();
            let f = mass_weighted_frame(&ic.masses, &s);
            assert!(f.delta1.abs() <= 1e-10 * f.delta1_scale(), "middle {middle}, sample {k}");
        }
    }
}

#[test]
fn tightening_tolerance_converges_monotonically() {
    let ic = figure_eight().unwrap();
    let t = ic.period.unwrap();
    let run = |rtol: f64| {
        let cfg = IntegratorConfig::default().with_rtol(rtol).with_atol(rtol * 1e-2);
        integrate(&ic.masses, &ic.state, t, &cfg).unwrap()
    };
    let reference = *run(1e-13).last();
    let ladder = [1e-8, 1e-9, 1e-10, 1e-11];
    let errors: Vec<f64> = ladder.iter().map(|&r| state_distance(run(r).last(), &reference)).collect();
    for w in errors.windows(2) {
        assert!(w[1] < w[0], "errors {errors:?}");
    }
    let drifts: Vec<f64> = ladder.iter().map(|&r| run(r).drift_report().0).collect();
    assert!(drifts[3] < drifts[0], "drifts {drifts:?}");
}

#[test]
fn reversing_velocities_retraces_the_path() {
    let ic = figure_eight().unwrap();
    let rtol = 1e-11;
    let cfg = IntegratorConfig::default().with_rtol(rtol).with_atol(1e-13);
    let span = 2.5;
    let fwd = integrate(&ic.masses, &ic.state, span, &cfg).unwrap();
    let mut back_start = fwd.last().with_scaled_velocities(-1.0);
    back_start.t = 0.0;
    let back = integrate(&ic.masses, &back_start, span, &cfg).unwrap();
    let returned = back.last().with_scaled_velocities(-1.0);
    let mut origin = ic.state;
    origin.t = returned.t;
    assert!(state_distance(&returned, &origin) <= 100.0 * rtol * 10.0, "{:e}", state_distance(&returned, &origin));
}

#[test]
fn head_on_pair_stops_before_contact() {
    let m = Masses::equal(1.0).unwrap();
    let s = BodyState::new(
        0.0,
        [Vec2::new(-1.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 50.0)],
        [Vec2::new(0.5, 0.0), Vec2::new(-0.5, 0.0), Vec2::zeros()],
    );
    let traj = integrate(&m, &s, 10.0, &IntegratorConfig::default()).unwrap();
    match traj.termination {
        Termination::CollisionApproach { min_distance, bodies, .. } => {
            assert!(min_distance > 0.0);
            assert_eq!(bodies, [0, 1]);
        }
        other => panic!("expected collision approach, got {other:?}"),
    }
    assert!(traj.last().min_distance().0 > 0.0);
}

#[test]
fn drift_starts_at_zero_and_stays_non_negative() {
    let ic = figure_eight().unwrap();
    let empty = integrate(&ic.masses, &ic.state, 0.0, &IntegratorConfig::default()).unwrap();
    assert_eq!(empty.drift_report(), (0.0, 0.0));
    let traj = integrate(&ic.masses, &ic.state, 1.0, &IntegratorConfig::default()).unwrap();
    assert!(traj.drift.iter().all(|d| d.energy >= 0.0 && d.momentum >= 0.0));
    let end = traj.dense_eval(traj.t_end()).unwrap();
    assert_eq!(&end, traj.last());
    let h = total_energy(&ic.masses, &end).unwrap();
    assert!((h / ic.energy - 1.0).abs() <= 1e-9);
    assert!(angular_momentum(&ic.masses, &end).abs() <= 1e-10);
}
