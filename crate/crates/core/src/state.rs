//! Planar three-body state, barycentric reduction and pointwise quantities.
//!
//! Bodies are indexed `0, 1, 2` throughout the crate. Mutual-distance
//! quantities are indexed by the body *opposite* the side:
//!
//! | index | pair     | distance          |
//! |-------|----------|-------------------|
//! | 0     | (2, 1)   | `|r_2 - r_1|`     |
//! | 1     | (0, 2)   | `|r_0 - r_2|`     |
//! | 2     | (1, 0)   | `|r_1 - r_0|`     |
//!
//! so `rho[0] = |r_2 - r_1|^-3` and so on. This is the only place the
//! convention is spelled out; everything else goes through [`OPPOSITE_PAIRS`].

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec2 = Vector2<f64>;
pub type Mat2 = Matrix2<f64>;

/// Side `i` of the triangle joins these two bodies (body `i` is opposite).
pub const OPPOSITE_PAIRS: [(usize, usize); 3] = [(2, 1), (0, 2), (1, 0)];

/// Tolerance on the barycentric constraints, relative to `max(|r_i|, 1)`.
pub const BARYCENTRIC_TOL: f64 = 1e-12;

#[inline]
pub fn cross(a: &Vec2, b: &Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Masses of the three bodies in units with `G = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct Masses([f64; 3]);

impl Masses {
    pub fn new(m1: f64, m2: f64, m3: f64) -> Result<Self> {
        let m = [m1, m2, m3];
        if m.iter().all(|x| x.is_finite() && *x > 0.0) {
            Ok(Self(m))
        } else {
            Err(Error::InvalidMasses(m))
        }
    }

    pub fn equal(m: f64) -> Result<Self> {
        Self::new(m, m, m)
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    #[inline]
    pub fn as_array(&self) -> [f64; 3] {
        self.0
    }

    /// `M = m1 + m2 + m3`.
    #[inline]
    pub fn total(&self) -> f64 {
        self.0[0] + self.0[1] + self.0[2]
    }

    /// `m_i + m_j`.
    #[inline]
    pub fn pair_sum(&self, i: usize, j: usize) -> f64 {
        self.0[i] + self.0[j]
    }

    /// Product of the two masses on side `i` (the gradient of `U` in the
    /// reciprocal distances).
    #[inline]
    pub fn side_product(&self, i: usize) -> f64 {
        let (a, b) = OPPOSITE_PAIRS[i];
        self.0[a] * self.0[b]
    }

    /// Sum of the two masses on side `i`.
    #[inline]
    pub fn side_sum(&self, i: usize) -> f64 {
        let (a, b) = OPPOSITE_PAIRS[i];
        self.pair_sum(a, b)
    }
}

impl TryFrom<[f64; 3]> for Masses {
    type Error = Error;
    fn try_from(m: [f64; 3]) -> Result<Self> {
        Self::new(m[0], m[1], m[2])
    }
}

impl From<Masses> for [f64; 3] {
    fn from(m: Masses) -> Self {
        m.0
    }
}

/// Positions and velocities of the three bodies at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyState {
    pub t: f64,
    pub pos: [Vec2; 3],
    pub vel: [Vec2; 3],
}

impl BodyState {
    /// Raw state, no reduction applied.
    pub fn new(t: f64, pos: [Vec2; 3], vel: [Vec2; 3]) -> Self {
        Self { t, pos, vel }
    }

    /// Builds a state from raw coordinates and reduces it to the barycentric frame.
    pub fn barycentric(m: &Masses, t: f64, pos: [Vec2; 3], vel: [Vec2; 3]) -> Result<Self> {
        reduce_to_barycentric(m, &Self::new(t, pos, vel))
    }

    pub fn from_arrays(t: f64, pos: [[f64; 2]; 3], vel: [[f64; 2]; 3]) -> Self {
        Self::new(
            t,
            pos.map(|p| Vec2::new(p[0], p[1])),
            vel.map(|v| Vec2::new(v[0], v[1])),
        )
    }

    /// Length scale `max(|r_i|, 1)` used by the barycentric tolerances.
    pub fn position_scale(&self) -> f64 {
        self.pos.iter().map(|p| p.norm()).fold(1.0, f64::max)
    }

    /// Largest mutual distance.
    pub fn size(&self) -> f64 {
        OPPOSITE_PAIRS
            .iter()
            .map(|&(a, b)| (self.pos[a] - self.pos[b]).norm())
            .fold(0.0, f64::max)
    }

    /// Smallest mutual distance and the pair realising it.
    pub fn min_distance(&self) -> (f64, usize, usize) {
        OPPOSITE_PAIRS
            .iter()
            .map(|&(a, b)| ((self.pos[a] - self.pos[b]).norm(), a.min(b), a.max(b)))
            .fold((f64::INFINITY, 0, 0), |acc, x| if x.0 < acc.0 { x } else { acc })
    }

    pub fn is_barycentric(&self, m: &Masses) -> bool {
        let (p, v) = momenta(m, self);
        let tol = BARYCENTRIC_TOL * self.position_scale() * m.total();
        p.norm() <= tol && v.norm() <= tol
    }

    /// Same positions, velocities multiplied by `lambda`.
    pub fn with_scaled_velocities(&self, lambda: f64) -> Self {
        Self::new(self.t, self.pos, self.vel.map(|v| v * lambda))
    }

    /// Flat `[x0, y0, x1, y1, x2, y2, vx0, vy0, ...]` layout.
    pub fn to_flat(&self) -> [f64; 12] {
        let mut y = [0.0; 12];
        for i in 0..3 {
            y[2 * i] = self.pos[i].x;
            y[2 * i + 1] = self.pos[i].y;
            y[6 + 2 * i] = self.vel[i].x;
            y[6 + 2 * i + 1] = self.vel[i].y;
        }
        y
    }

    pub fn from_flat(t: f64, y: &[f64; 12]) -> Self {
        let pos = [0, 1, 2].map(|i| Vec2::new(y[2 * i], y[2 * i + 1]));
        let vel = [0, 1, 2].map(|i| Vec2::new(y[6 + 2 * i], y[6 + 2 * i + 1]));
        Self::new(t, pos, vel)
    }
}

/// `(sum m_i r_i, sum m_i v_i)`.
pub fn momenta(m: &Masses, s: &BodyState) -> (Vec2, Vec2) {
    let mut p = Vec2::zeros();
    let mut v = Vec2::zeros();
    for i in 0..3 {
        p += s.pos[i] * m.get(i);
        v += s.vel[i] * m.get(i);
    }
    (p, v)
}

fn check_distinct(s: &BodyState) -> Result<()> {
    let (d, a, b) = s.min_distance();
    if d > 0.0 && d.is_finite() {
        Ok(())
    } else {
        Err(Error::CollisionInput(a, b, d))
    }
}

/// Shifts positions and velocities by the mass-weighted means.
pub fn reduce_to_barycentric(m: &Masses, raw: &BodyState) -> Result<BodyState> {
    check_distinct(raw)?;
    let (p, v) = momenta(m, raw);
    let mt = m.total();
    let (cp, cv) = (p / mt, v / mt);
    Ok(BodyState::new(
        raw.t,
        raw.pos.map(|r| r - cp),
        raw.vel.map(|u| u - cv),
    ))
}

/// Mutual distances and their powers, indexed by the opposite body.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairwiseGeometry {
    /// Mutual distances.
    pub d: [f64; 3],
    /// `d_i^-3`.
    pub rho: [f64; 3],
    /// `d_i^-1`, i.e. `rho_i^(1/3)`.
    pub inv: [f64; 3],
}

pub fn pairwise_geometry(s: &BodyState) -> Result<PairwiseGeometry> {
    check_distinct(s)?;
    Ok(pairwise_geometry_unchecked(s))
}

pub(crate) fn pairwise_geometry_unchecked(s: &BodyState) -> PairwiseGeometry {
    let d = OPPOSITE_PAIRS.map(|(a, b)| (s.pos[a] - s.pos[b]).norm());
    let inv = d.map(|x| 1.0 / x);
    let rho = inv.map(|x| x * x * x);
    PairwiseGeometry { d, rho, inv }
}

/// Gravitational accelerations written exactly as the complex equations of
/// motion: `a_0 = m_1 z_10 rho_2 - m_2 z_02 rho_1` and cyclic, `z_ij = z_i - z_j`.
pub fn accelerations(m: &Masses, s: &BodyState) -> Result<[Vec2; 3]> {
    let (d, a, b) = s.min_distance();
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::CollisionApproach(a, b, d));
    }
    Ok(accelerations_unchecked(m, &s.pos))
}

#[inline]
pub(crate) fn accelerations_unchecked(m: &Masses, r: &[Vec2; 3]) -> [Vec2; 3] {
    let z10 = r[1] - r[0];
    let z02 = r[0] - r[2];
    let z21 = r[2] - r[1];
    let rho = |z: &Vec2| {
        let d2 = z.norm_squared();
        1.0 / (d2 * d2.sqrt())
    };
    let (rho0, rho1, rho2) = (rho(&z21), rho(&z02), rho(&z10));
    [
        z10 * (m.get(1) * rho2) - z02 * (m.get(2) * rho1),
        z21 * (m.get(2) * rho0) - z10 * (m.get(0) * rho2),
        z02 * (m.get(0) * rho1) - z21 * (m.get(1) * rho0),
    ]
}

/// Time derivative of the accelerations.
pub(crate) fn jerks_unchecked(m: &Masses, r: &[Vec2; 3], v: &[Vec2; 3]) -> [Vec2; 3] {
    let mut j = [Vec2::zeros(); 3];
    for i in 0..3 {
        for k in 0..3 {
            if k == i {
                continue;
            }
            let dr = r[k] - r[i];
            let dv = v[k] - v[i];
            let d2 = dr.norm_squared();
            let inv3 = 1.0 / (d2 * d2.sqrt());
            let rv = dr.dot(&dv) / d2;
            j[i] += (dv - dr * (3.0 * rv)) * (m.get(k) * inv3);
        }
    }
    j
}

pub fn kinetic_energy(m: &Masses, s: &BodyState) -> f64 {
    (0..3).map(|i| 0.5 * m.get(i) * s.vel[i].norm_squared()).sum()
}

/// `U = sum_i (product of side-i masses) / d_i`.
pub fn potential_energy(m: &Masses, g: &PairwiseGeometry) -> f64 {
    (0..3).map(|i| m.side_product(i) * g.inv[i]).sum()
}

/// `H = K - U`.
pub fn total_energy(m: &Masses, s: &BodyState) -> Result<f64> {
    let g = pairwise_geometry(s)?;
    Ok(kinetic_energy(m, s) - potential_energy(m, &g))
}

/// `sum_i m_i r_i x v_i`.
pub fn angular_momentum(m: &Masses, s: &BodyState) -> f64 {
    (0..3).map(|i| m.get(i) * cross(&s.pos[i], &s.vel[i])).sum()
}

/// Magnitude used to judge whether an angular momentum is "zero":
/// `sum_i m_i |r_i| |v_i|`.
pub fn angular_momentum_scale(m: &Masses, s: &BodyState) -> f64 {
    (0..3)
        .map(|i| m.get(i) * s.pos[i].norm() * s.vel[i].norm())
        .sum()
}

/// Mass-weighted configuration `w_k = m_k z_k` restricted to bodies 0 and 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassWeightedFrame {
    /// Rows `(X_k, Y_k)` for `k = 0, 1`.
    pub x: Mat2,
    /// Rows `(dX_k, dY_k)` for `k = 0, 1`.
    pub xdot: Mat2,
    /// `det X`.
    pub delta1: f64,
    /// `det Xdot`.
    pub delta2: f64,
    /// Oriented areas `S_k = X_k dY_k - dX_k Y_k` of all three bodies.
    pub s: [f64; 3],
}

impl MassWeightedFrame {
    #[inline]
    pub fn a(&self) -> f64 {
        self.s[0]
    }

    #[inline]
    pub fn b(&self) -> f64 {
        self.s[1]
    }

    /// Adjugate of `X`.
    pub fn x_adj(&self) -> Mat2 {
        adjugate(&self.x)
    }

    /// `Xdot adj(X)`, whose trace is `d(delta1)/dt` and determinant `delta1 * delta2`.
    pub fn xdot_xadj(&self) -> Mat2 {
        self.xdot * self.x_adj()
    }

    /// `d(delta1)/dt`.
    pub fn delta1_dot(&self) -> f64 {
        self.xdot_xadj().trace()
    }

    /// Scale of `delta1`: the largest `|w_j| |w_k|` over the three pairs,
    /// each of which has `det[w_j; w_k] = +-delta1`.
    pub fn delta1_scale(&self) -> f64 {
        pair_scale(&self.x)
    }

    /// Scale of `delta2`, as [`Self::delta1_scale`] for the velocities.
    pub fn delta2_scale(&self) -> f64 {
        pair_scale(&self.xdot)
    }
}

fn pair_scale(rows: &Mat2) -> f64 {
    let n0 = rows.row(0).norm();
    let n1 = rows.row(1).norm();
    let n2 = (rows.row(0) + rows.row(1)).norm();
    (n0 * n1).max(n0 * n2).max(n1 * n2)
}

pub fn adjugate(x: &Mat2) -> Mat2 {
    Mat2::new(x[(1, 1)], -x[(0, 1)], -x[(1, 0)], x[(0, 0)])
}

pub fn mass_weighted_frame(m: &Masses, s: &BodyState) -> MassWeightedFrame {
    let w = [0, 1, 2].map(|k| s.pos[k] * m.get(k));
    let wd = [0, 1, 2].map(|k| s.vel[k] * m.get(k));
    let x = Mat2::new(w[0].x, w[0].y, w[1].x, w[1].y);
    let xdot = Mat2::new(wd[0].x, wd[0].y, wd[1].x, wd[1].y);
    MassWeightedFrame {
        x,
        xdot,
        delta1: x.determinant(),
        delta2: xdot.determinant(),
        s: [0, 1, 2].map(|k| cross(&w[k], &wd[k])),
    }
}

/// Unweighted `(det[r_j; r_k], det[v_j; v_k])` for a pair of bodies.
pub fn pair_determinants(s: &BodyState, j: usize, k: usize) -> (f64, f64) {
    (cross(&s.pos[j], &s.pos[k]), cross(&s.vel[j], &s.vel[k]))
}

/// Twice the signed area of the triangle, `(r_1 - r_0) x (r_2 - r_0)`.
pub fn doubled_area(s: &BodyState) -> f64 {
    cross(&(s.pos[1] - s.pos[0]), &(s.pos[2] - s.pos[0]))
}
