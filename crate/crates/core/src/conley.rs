//! Matrix form of the planar three-body problem.
//!
//! In mass-weighted coordinates the configuration matrix `X` (rows `w_0`,
//! `w_1`) obeys `X'' = A X` where `A` depends on the mutual distances only
//! through `rho = d^-3`, linearly: `A = sum_i rho_i A_i` with constant mass
//! matrices `A_i`. This module builds those matrices, the invariant pairing
//! matrix `L`, the energy-dependent bounds, and evaluates the pointwise
//! algebraic identities between them.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::state::{
    angular_momentum, kinetic_energy, mass_weighted_frame, pairwise_geometry, potential_energy,
    BodyState, Mat2, Masses, PairwiseGeometry,
};

/// Mass-dependent constant matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassBasis {
    /// `A_0, A_1, A_2` with `A = sum rho_i A_i`.
    pub a: [Mat2; 3],
    /// Traceless parts `A_i - tr(A_i)/2 I`.
    pub traceless: [Mat2; 3],
    /// Matrix with `<L, A_i> = 0`; `<Xdot adj X, L>` is the angular momentum.
    pub l: Mat2,
    /// `diag(1, -1)`.
    pub j: Mat2,
}

impl MassBasis {
    pub fn new(m: &Masses) -> Self {
        let (m1, m2, m3) = (m.get(0), m.get(1), m.get(2));
        let a = [
            Mat2::new(0.0, 0.0, -m2, -(m3 + m2)),
            Mat2::new(-(m1 + m3), -m1, 0.0, 0.0),
            Mat2::new(-m2, m1, m2, -m1),
        ];
        let traceless = a.map(|ai| ai - Mat2::identity() * (ai.trace() / 2.0));
        let l = Mat2::new(-1.0 / m3, 1.0 / m1 + 1.0 / m3, -1.0 / m2 - 1.0 / m3, 1.0 / m3);
        Self {
            a,
            traceless,
            l,
            j: Mat2::new(1.0, 0.0, 0.0, -1.0),
        }
    }

    /// `sum_i rho_i A_i`.
    pub fn combine(&self, rho: &[f64; 3]) -> Mat2 {
        self.a[0] * rho[0] + self.a[1] * rho[1] + self.a[2] * rho[2]
    }
}

/// `<A, B> = tr(A^T B)`.
#[inline]
pub fn inner(a: &Mat2, b: &Mat2) -> f64 {
    a.component_mul(b).sum()
}

/// Max-absolute-entry norm.
#[inline]
pub fn max_abs(a: &Mat2) -> f64 {
    a.amax()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConleyMatrices {
    pub a: Mat2,
    pub basis: MassBasis,
    pub trace_a: f64,
}

/// Builds `A` entry by entry from the equations of motion.
pub fn build_matrices(m: &Masses, g: &PairwiseGeometry) -> ConleyMatrices {
    let (m1, m2, m3) = (m.get(0), m.get(1), m.get(2));
    let [r1, r2, r3] = g.rho;
    let a = Mat2::new(
        -m2 * r3 - (m1 + m3) * r2,
        m1 * (r3 - r2),
        m2 * (r3 - r1),
        -m1 * r3 - (m3 + m2) * r1,
    );
    ConleyMatrices {
        a,
        basis: MassBasis::new(m),
        trace_a: trace_a(m, g),
    }
}

/// `tr A = -(sum_i (side-i mass sum) rho_i)`.
pub fn trace_a(m: &Masses, g: &PairwiseGeometry) -> f64 {
    -(0..3).map(|i| m.side_sum(i) * g.rho[i]).sum::<f64>()
}

/// `Sigma = sum_i (m_j m_k)^{3/2} / (m_j + m_k)^{1/2}` over the three sides.
pub fn sigma_constant(m: &Masses) -> f64 {
    (0..3)
        .map(|i| m.side_product(i).powf(1.5) / m.side_sum(i).sqrt())
        .sum()
}

/// Bounds derived from the energy level `H = -alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyBounds {
    pub alpha: f64,
    pub sigma: f64,
    /// `-alpha^3 / Sigma^2`, an upper bound on `tr A`.
    pub trace_bound: f64,
    /// `alpha^3 / (2 Sigma^2)`.
    pub zeta_sq: f64,
    /// `alpha^3 / Sigma^2`.
    pub theta_sq: f64,
    /// Syzygy time bound for zero angular momentum, `sqrt(2) pi Sigma / alpha^{3/2}`.
    pub t1: f64,
    /// Generalised-syzygy time bound for antisymmetric starts, `pi Sigma / alpha^{3/2}`.
    pub t_gen: f64,
}

pub fn energy_bounds(m: &Masses, alpha: f64) -> Result<EnergyBounds> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::NotNegativeEnergy(-alpha));
    }
    let sigma = sigma_constant(m);
    let a3 = alpha * alpha * alpha;
    let s2 = sigma * sigma;
    let a32 = alpha * alpha.sqrt();
    Ok(EnergyBounds {
        alpha,
        sigma,
        trace_bound: -a3 / s2,
        zeta_sq: a3 / (2.0 * s2),
        theta_sq: a3 / s2,
        t1: std::f64::consts::SQRT_2 * PI * sigma / a32,
        t_gen: PI * sigma / a32,
    })
}

/// Pointwise comparison of `tr A` with `-alpha^3 / Sigma^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceBound {
    pub trace_a: f64,
    pub bound: f64,
    /// `bound - tr A`, non-negative whenever the energy is negative.
    pub margin: f64,
    pub alpha: f64,
}

pub fn trace_bound_check(m: &Masses, s: &BodyState) -> Result<TraceBound> {
    let g = pairwise_geometry(s)?;
    let h = kinetic_energy(m, s) - potential_energy(m, &g);
    if h >= 0.0 {
        return Err(Error::NotNegativeEnergy(h));
    }
    let alpha = -h;
    let sigma = sigma_constant(m);
    let bound = -alpha.powi(3) / (sigma * sigma);
    let tr = trace_a(m, &g);
    Ok(TraceBound {
        trace_a: tr,
        bound,
        margin: bound - tr,
        alpha,
    })
}

/// Coefficients `beta = (m_2/m_0 + 1)/2`, `gamma = (m_2/m_1 + 1)/2` of the
/// zero-momentum quadratic form (both exceed 1/2).
pub fn quadratic_coefficients(m: &Masses) -> (f64, f64) {
    (
        0.5 * (m.get(2) / m.get(0) + 1.0),
        0.5 * (m.get(2) / m.get(1) + 1.0),
    )
}

/// `beta^2 a^2 + (2 beta gamma - 1) a b + gamma^2 b^2`, which equals `-det R`
/// for the traceless part `R` of `Xdot adj X` at zero angular momentum.
pub fn quadratic_form(m: &Masses, a: f64, b: f64) -> f64 {
    let (beta, gamma) = quadratic_coefficients(m);
    beta * beta * a * a + (2.0 * beta * gamma - 1.0) * a * b + gamma * gamma * b * b
}

/// Residuals of the pointwise identities of the matrix formulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityResiduals {
    /// `|Xdot adj X - (d delta1/2) I - (b/m_1) At_0 + (a/m_0) At_1 + k (m_2/2) J|_max`.
    pub form: f64,
    /// `|det(Xdot adj X) - delta1 delta2|`.
    pub det: f64,
    /// `|<Xdot adj X, L> - k|`.
    pub momentum: f64,
    /// `d delta1^2 - 4 delta1 delta2`; non-negative when `k = 0`.
    pub discriminant: f64,
    /// Quadratic form in `(a, b)`, equal to `discriminant / 4` when `k = 0`.
    pub quadratic: f64,
    /// `max(1, |Xdot adj X|_max, |k| m_2)` normalising the matrix residuals.
    pub scale: f64,
}

pub fn identity_residuals(m: &Masses, s: &BodyState, k: f64) -> IdentityResiduals {
    let f = mass_weighted_frame(m, s);
    let basis = MassBasis::new(m);
    let p = f.xdot_xadj();
    let d1dot = p.trace();
    let (a, b) = (f.a(), f.b());
    let rhs = basis.traceless[0] * (b / m.get(1)) - basis.traceless[1] * (a / m.get(0))
        - basis.j * (k * m.get(2) / 2.0);
    let lhs = p - Mat2::identity() * (d1dot / 2.0);
    IdentityResiduals {
        form: max_abs(&(lhs - rhs)),
        det: (p.determinant() - f.delta1 * f.delta2).abs(),
        momentum: (inner(&p, &basis.l) - k).abs(),
        discriminant: d1dot * d1dot - 4.0 * f.delta1 * f.delta2,
        quadratic: quadratic_form(m, a, b),
        scale: max_abs(&p).max(k.abs() * m.get(2)).max(1.0),
    }
}

/// Angular momentum through the matrix pairing, `<Xdot adj X, L>`.
pub fn matrix_angular_momentum(m: &Masses, s: &BodyState) -> f64 {
    inner(&mass_weighted_frame(m, s).xdot_xadj(), &MassBasis::new(m).l)
}

/// Angular momentum through the oriented areas, `sum S_i / m_i`.
pub fn area_angular_momentum(m: &Masses, s: &BodyState) -> f64 {
    let f = mass_weighted_frame(m, s);
    (0..3).map(|i| f.s[i] / m.get(i)).sum()
}

/// The three routes to the angular momentum: direct, areas, matrix pairing.
pub fn angular_momentum_routes(m: &Masses, s: &BodyState) -> [f64; 3] {
    [
        angular_momentum(m, s),
        area_angular_momentum(m, s),
        matrix_angular_momentum(m, s),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit() -> Masses {
        Masses::equal(1.0).unwrap()
    }

    fn geom(rho: [f64; 3]) -> PairwiseGeometry {
        let inv = rho.map(f64::cbrt);
        PairwiseGeometry {
            d: inv.map(|x| 1.0 / x),
            rho,
            inv,
        }
    }

    #[test]
    fn equilateral_equal_masses_gives_minus_three_identity() {
        let c = build_matrices(&unit(), &geom([1.0; 3]));
        assert_eq!(c.a, Mat2::identity() * -3.0);
        assert_eq!(c.trace_a, -6.0);
    }

    #[test]
    fn equal_mass_trace() {
        let rho = [0.3, 1.7, 4.2];
        let c = build_matrices(&unit(), &geom(rho));
        assert_relative_eq!(c.trace_a, -2.0 * rho.iter().sum::<f64>(), max_relative = 1e-15);
        assert_relative_eq!(c.a.trace(), c.trace_a, max_relative = 1e-15);
    }

    #[test]
    fn basis_sums() {
        let m = Masses::new(1.0, 2.0, 3.0).unwrap();
        let b = MassBasis::new(&m);
        let s = b.a[0] + b.a[1] + b.a[2] + Mat2::identity() * m.total();
        assert_eq!(s, Mat2::zeros());
        assert_eq!(b.traceless[0] + b.traceless[1] + b.traceless[2], Mat2::zeros());
        for ai in &b.a {
            assert!(inner(&b.l, ai).abs() < 1e-15);
        }
        // Traceless parts as written out explicitly.
        assert_eq!(b.traceless[0], Mat2::new(2.5, 0.0, -2.0, -2.5));
        assert_eq!(b.traceless[1], Mat2::new(-2.0, -1.0, 0.0, 2.0));
    }

    #[test]
    fn sigma_values() {
        assert_relative_eq!(sigma_constant(&unit()), 3.0 / 2f64.sqrt(), max_relative = 1e-15);
        let m = 2.7;
        assert_relative_eq!(
            sigma_constant(&Masses::equal(m).unwrap()),
            3.0 * m.powf(2.5) / 2f64.sqrt(),
            max_relative = 1e-14
        );
        // 40-digit evaluation: 10.80374006327076136723966295567236175249
        let s = sigma_constant(&Masses::new(1.0, 2.0, 3.0).unwrap());
        assert_relative_eq!(s, 10.803_740_063_270_761, max_relative = 1e-15);
    }

    #[test]
    fn bounds_examples() {
        let b = energy_bounds(&unit(), 1.0).unwrap();
        assert_relative_eq!(b.t1, 3.0 * PI, max_relative = 1e-15);
        assert_relative_eq!(b.t_gen, 3.0 * PI / 2f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(b.trace_bound, -2.0 / 9.0, max_relative = 1e-15);
        let b = energy_bounds(&unit(), 1.5).unwrap();
        // 40-digit evaluation: 5.130199320647456382176145438684025645869
        assert_relative_eq!(b.t1, 5.130_199_320_647_456, max_relative = 1e-14);
        assert!(matches!(energy_bounds(&unit(), 0.0), Err(Error::NotNegativeEnergy(_))));
        assert!(matches!(energy_bounds(&unit(), -1.0), Err(Error::NotNegativeEnergy(_))));
    }

    #[test]
    fn bound_relations() {
        let m = Masses::new(0.4, 1.3, 2.2).unwrap();
        for alpha in [0.01, 0.7, 3.0, 40.0] {
            let b = energy_bounds(&m, alpha).unwrap();
            assert_relative_eq!(b.t1 * b.zeta_sq.sqrt(), PI, max_relative = 1e-14);
            assert_relative_eq!(b.t_gen * b.theta_sq.sqrt(), PI, max_relative = 1e-14);
            assert_relative_eq!(b.t1, 2f64.sqrt() * b.t_gen, max_relative = 1e-14);
        }
    }

    #[test]
    fn trace_bound_is_tight_for_equilateral_rest() {
        let r = 1.0 / 3f64.sqrt();
        let pos = [90.0f64, 210.0, 330.0].map(|deg| {
            let a = deg.to_radians();
            [r * a.cos(), r * a.sin()]
        });
        let s = BodyState::from_arrays(0.0, pos, [[0.0; 2]; 3]);
        let tb = trace_bound_check(&unit(), &s).unwrap();
        assert_relative_eq!(tb.alpha, 3.0, max_relative = 1e-14);
        assert_relative_eq!(tb.trace_a, -6.0, max_relative = 1e-14);
        assert_relative_eq!(tb.bound, -6.0, max_relative = 1e-14);
        assert!(tb.margin.abs() < 1e-13);

        let moving = BodyState::new(0.0, s.pos, [0, 1, 2].map(|i| s.pos[(i + 1) % 3] * 0.1));
        let moving = crate::state::reduce_to_barycentric(&unit(), &moving).unwrap();
        assert!(trace_bound_check(&unit(), &moving).unwrap().margin > 0.0);
    }

    #[test]
    fn trace_bound_rejects_positive_energy() {
        let s = BodyState::from_arrays(
            0.0,
            [[-1.0, 0.0], [0.0, 1.0], [1.0, -1.0]],
            [[10.0, 0.0], [0.0, -10.0], [-10.0, 10.0]],
        );
        assert!(matches!(trace_bound_check(&unit(), &s), Err(Error::NotNegativeEnergy(_))));
    }

    #[test]
    fn residuals_vanish_at_rest() {
        let s = BodyState::from_arrays(0.0, [[-1.0, 0.2], [0.3, 0.5], [0.7, -0.7]], [[0.0; 2]; 3]);
        let r = identity_residuals(&unit(), &s, 0.0);
        assert_eq!(r.form, 0.0);
        assert_eq!(r.det, 0.0);
        assert_eq!(r.momentum, 0.0);
        assert_eq!(r.discriminant, 0.0);
    }

    #[test]
    fn identity_matrix_case() {
        let s = BodyState::from_arrays(
            0.0,
            [[1.0, 0.0], [0.0, 1.0], [-1.0, -1.0]],
            [[0.0, 1.0], [1.0, 0.0], [-1.0, -1.0]],
        );
        let k = matrix_angular_momentum(&unit(), &s);
        assert_eq!(k, 0.0);
        let r = identity_residuals(&unit(), &s, k);
        assert_eq!(r.discriminant, 4.0);
        assert!(r.form < 1e-15);
        assert_relative_eq!(r.quadratic * 4.0, r.discriminant, max_relative = 1e-15);
    }
}
