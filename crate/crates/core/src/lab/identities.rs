//! Finite-difference checks of the differential identities satisfied along
//! a solution of `Xddot = A X`.
//!
//! With `P = Xdot adj(X)`:
//! - `d^2 delta1/dt^2 = tr(A) delta1 + 2 delta2`,
//! - `dP/dt = sum (delta1 rho_i - delta2 / M) A_i`,
//! - `dC/dt + C^2 = A` for `C = Xdot X^{-1}` wherever `delta1 != 0`,
//! - `d/dt (P - tr(P)/2 I) = delta1 ((rho_0 - rho_2) At_0 + (rho_1 - rho_2) At_1)`.

use serde::{Deserialize, Serialize};

use crate::conley::{build_matrices, max_abs, MassBasis};
use crate::integrator::Trajectory;
use crate::state::{mass_weighted_frame, pairwise_geometry_unchecked, BodyState, Mat2};

use super::fd;
use super::rigidity::relative_max;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdentityConfig {
    pub samples: usize,
    /// Step as a fraction of the time scale.
    pub step: f64,
    /// Characteristic time; the trajectory length when absent.
    pub timescale: Option<f64>,
    /// Riccati residuals are only taken where `|delta1|` exceeds this
    /// fraction of its largest sampled value.
    pub riccati_threshold: f64,
}

impl Default for IdentityConfig {
    fn default() -> Self {
        Self { samples: 100, step: 1e-4, timescale: None, riccati_threshold: 0.1 }
    }
}

/// `(residual, size of the balanced terms)` pairs at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentitySample {
    pub t: f64,
    pub eqdf: (f64, f64),
    pub meqs: (f64, f64),
    pub riccati: Option<(f64, f64)>,
    pub final_reduced: (f64, f64),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct IdentityMaxima {
    pub eqdf: f64,
    pub meqs: f64,
    pub riccati: f64,
    pub final_reduced: f64,
}

impl IdentityMaxima {
    pub fn worst(&self) -> f64 {
        self.eqdf.max(self.meqs).max(self.riccati).max(self.final_reduced)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub step: f64,
    pub samples: Vec<IdentitySample>,
    /// Relative maxima at the configured step.
    pub maxima: IdentityMaxima,
    /// Relative maxima at half the step.
    pub maxima_half_step: IdentityMaxima,
}

/// Residuals at time `t` with finite-difference step `h`.
pub fn identity_sample(traj: &Trajectory, t: f64, h: f64) -> IdentitySample {
    let m = &traj.masses;
    let basis = MassBasis::new(m);
    let at = |tt: f64| -> BodyState { traj.dense_eval(tt).expect("stencil inside trajectory") };
    let s = at(t);
    let f = mass_weighted_frame(m, &s);
    let g = pairwise_geometry_unchecked(&s);
    let a = build_matrices(m, &g).a;
    let tr = a.trace();
    let inv_m = 1.0 / m.total();

    let d1_dd = fd::first(|tt| mass_weighted_frame(m, &at(tt)).delta1_dot(), t, h);
    let eqdf = ((d1_dd - tr * f.delta1 - 2.0 * f.delta2).abs(), (tr * f.delta1).abs() + 2.0 * f.delta2.abs());

    let p_dot: Mat2 = fd::first(|tt| mass_weighted_frame(m, &at(tt)).xdot_xadj(), t, h);
    let coef: [f64; 3] = std::array::from_fn(|i| f.delta1 * g.rho[i] - f.delta2 * inv_m);
    let rhs = basis.combine(&coef);
    let meqs_size = (0..3).map(|i| coef[i].abs() * max_abs(&basis.a[i])).sum::<f64>();
    let meqs = (max_abs(&(p_dot - rhs)), meqs_size);

    let riccati = f.x.try_inverse().map(|x_inv| {
        let c = f.xdot * x_inv;
        let c_dot: Mat2 = fd::first(
            |tt| {
                let ff = mass_weighted_frame(m, &at(tt));
                ff.xdot * ff.x.try_inverse().unwrap_or_else(Mat2::zeros)
            },
            t,
            h,
        );
        let c2 = c * c;
        (max_abs(&(c_dot + c2 - a)), max_abs(&c_dot) + max_abs(&c2) + max_abs(&a))
    });

    let traceless = |tt: f64| {
        let p = mass_weighted_frame(m, &at(tt)).xdot_xadj();
        p - Mat2::identity() * (0.5 * p.trace())
    };
    let r_dot: Mat2 = fd::first(traceless, t, h);
    let rhs = (basis.traceless[0] * (g.rho[0] - g.rho[2]) + basis.traceless[1] * (g.rho[1] - g.rho[2])) * f.delta1;
    let size = f.delta1.abs() * (0..3).map(|i| g.rho[i] * max_abs(&basis.traceless[i])).sum::<f64>();
    let final_reduced = (max_abs(&(r_dot - rhs)), size);

    IdentitySample { t, eqdf, meqs, riccati, final_reduced }
}

fn maxima(samples: &[IdentitySample], riccati_threshold: f64, traj: &Trajectory) -> IdentityMaxima {
    let d1: Vec<f64> = samples
        .iter()
        .map(|s| mass_weighted_frame(&traj.masses, &traj.dense_eval(s.t).expect("sample time")).delta1.abs())
        .collect();
    let d1_max = d1.iter().fold(0.0f64, |a, &x| a.max(x));
    let riccati: Vec<(f64, f64)> = samples
        .iter()
        .zip(&d1)
        .filter(|(_, &d)| d > riccati_threshold * d1_max)
        .filter_map(|(s, _)| s.riccati)
        .collect();
    let col = |get: fn(&IdentitySample) -> (f64, f64)| relative_max(&samples.iter().map(get).collect::<Vec<_>>());
    IdentityMaxima {
        eqdf: col(|s| s.eqdf),
        meqs: col(|s| s.meqs),
        riccati: relative_max(&riccati),
        final_reduced: col(|s| s.final_reduced),
    }
}

/// Identity residuals at evenly spaced interior times, at step `h` and `h/2`.
pub fn trajectory_identity_checks(traj: &Trajectory, cfg: &IdentityConfig) -> IdentityReport {
    let span = traj.t_end() - traj.t_start();
    let h = cfg.step * cfg.timescale.unwrap_or(span);
    let times = fd::interior_times(traj.t_start(), traj.t_end(), 2.0 * h, cfg.samples);
    let full: Vec<IdentitySample> = times.iter().map(|&t| identity_sample(traj, t, h)).collect();
    let half: Vec<IdentitySample> = times.iter().map(|&t| identity_sample(traj, t, 0.5 * h)).collect();
    IdentityReport {
        step: h,
        maxima: maxima(&full, cfg.riccati_threshold, traj),
        maxima_half_step: maxima(&half, cfg.riccati_threshold, traj),
        samples: full,
    }
}
