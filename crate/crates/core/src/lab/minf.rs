//! Brute-force minimisation of `F(r) = sum (m_j + m_k) r_i^3` on the simplex
//! `{ sum m_j m_k r_i = s, r_i >= 0 }`, compared with its closed form.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::conley::sigma_constant;
use crate::error::{Error, Result};
use crate::state::Masses;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MinFConfig {
    /// Uniform simplex samples.
    pub samples: usize,
    /// Coordinate-descent iterations after sampling.
    pub refine_steps: usize,
    pub seed: u64,
}

impl Default for MinFConfig {
    fn default() -> Self {
        Self { samples: 1_000_000, refine_steps: 200, seed: 0x5eed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinFResult {
    pub s: f64,
    pub sigma: f64,
    pub min_value: f64,
    pub argmin: [f64; 3],
    /// `s^3 / Sigma^2`.
    pub closed_value: f64,
    pub closed_argmin: [f64; 3],
    pub value_rel_err: f64,
    /// `|argmin - r*|_inf / |r*|_inf`.
    pub argmin_rel_err: f64,
}

/// `F(r)`.
pub fn objective(m: &Masses, r: &[f64; 3]) -> f64 {
    (0..3).map(|i| m.side_sum(i) * r[i].powi(3)).sum()
}

/// `U(r) = sum m_j m_k r_i`.
pub fn constraint(m: &Masses, r: &[f64; 3]) -> f64 {
    (0..3).map(|i| m.side_product(i) * r[i]).sum()
}

/// `r* = (s / Sigma) (sqrt(m_j m_k / (m_j + m_k)))_i`.
pub fn closed_argmin(m: &Masses, s: f64) -> [f64; 3] {
    let sigma = sigma_constant(m);
    std::array::from_fn(|i| s / sigma * (m.side_product(i) / m.side_sum(i)).sqrt())
}

/// Point on the constraint simplex with barycentric weights `lambda`.
fn point(m: &Masses, s: f64, lambda: &[f64; 3]) -> [f64; 3] {
    std::array::from_fn(|i| lambda[i] * s / m.side_product(i))
}

pub fn minf_oracle(m: &Masses, s: f64, cfg: &MinFConfig) -> Result<MinFResult> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::InvalidConfig(format!("s must be positive, got {s}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let f = |l: &[f64; 3]| objective(m, &point(m, s, l));

    // Vertices first, then uniform samples from sorted uniform spacings.
    let mut best = [1.0, 0.0, 0.0];
    let mut best_f = f(&best);
    for v in [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] {
        let fv = f(&v);
        if fv < best_f {
            best = v;
            best_f = fv;
        }
    }
    for _ in 0..cfg.samples {
        let (u, v): (f64, f64) = (rng.gen(), rng.gen());
        let (lo, hi) = if u < v { (u, v) } else { (v, u) };
        let l = [lo, hi - lo, 1.0 - hi];
        let fl = f(&l);
        if fl < best_f {
            best = l;
            best_f = fl;
        }
    }

    // Coordinate descent along the simplex edges with step halving.
    let mut step = 1.0 / (cfg.samples.max(1) as f64).sqrt();
    for _ in 0..cfg.refine_steps {
        let mut improved = false;
        for (i, j) in [(0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)] {
            let mut l = best;
            let d = step.min(l[j]);
            if d <= 0.0 {
                continue;
            }
            l[i] += d;
            l[j] -= d;
            let fl = f(&l);
            if fl < best_f {
                best = l;
                best_f = fl;
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }

    let argmin = point(m, s, &best);
    let closed = closed_argmin(m, s);
    let sigma = sigma_constant(m);
    let closed_value = s.powi(3) / (sigma * sigma);
    let r_inf = closed.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let diff = (0..3).fold(0.0f64, |a, i| a.max((argmin[i] - closed[i]).abs()));
    Ok(MinFResult {
        s,
        sigma,
        min_value: best_f,
        argmin,
        closed_value,
        closed_argmin: closed,
        value_rel_err: (best_f - closed_value).abs() / closed_value,
        argmin_rel_err: diff / r_inf,
    })
}
