//! Central finite differences on the dense output.

use std::ops::{Add, Mul, Sub};

/// Five-point first derivative.
pub fn first<T, F>(mut f: F, t: f64, h: f64) -> T
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
    F: FnMut(f64) -> T,
{
    let (m2, m1, p1, p2) = (f(t - 2.0 * h), f(t - h), f(t + h), f(t + 2.0 * h));
    ((m2 - p2) + (p1 - m1) * 8.0) * (1.0 / (12.0 * h))
}

/// Five-point second derivative.
pub fn second<T, F>(mut f: F, t: f64, h: f64) -> T
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
    F: FnMut(f64) -> T,
{
    let (m2, m1, c, p1, p2) = (f(t - 2.0 * h), f(t - h), f(t), f(t + h), f(t + 2.0 * h));
    ((m1 + p1) * 16.0 - (m2 + p2) - c * 30.0) * (1.0 / (12.0 * h * h))
}

/// `n` evenly spaced interior times of `[a, b]` keeping `margin` clear of both ends.
pub fn interior_times(a: f64, b: f64, margin: f64, n: usize) -> Vec<f64> {
    // Pad by a few ulps so that `t +- margin` stays inside `[a, b]` after rounding.
    let margin = margin + 4.0 * f64::EPSILON * a.abs().max(b.abs());
    let (lo, hi) = (a + margin, b - margin);
    if n == 0 || hi <= lo {
        return Vec::new();
    }
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Gauss–Legendre 5-point nodes and weights on `[-1, 1]`.
pub const GL5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_of_sine() {
        let h = 1e-3;
        for t in [0.0, 0.4, 2.0] {
            assert!((first(f64::sin, t, h) - t.cos()).abs() < 1e-12);
            assert!((second(f64::sin, t, h) + t.sin()).abs() < 1e-9);
        }
    }

    #[test]
    fn gauss_legendre_is_exact_for_degree_nine() {
        let f = |x: f64| x.powi(9) + 3.0 * x.powi(8) - x.powi(2) + 1.0;
        let q: f64 = GL5.iter().map(|(x, w)| w * f(*x)).sum();
        let exact = 3.0 * 2.0 / 9.0 - 2.0 / 3.0 + 2.0;
        assert!((q - exact).abs() < 1e-14);
    }

    #[test]
    fn interior_times_stay_inside() {
        let ts = interior_times(0.0, 1.0, 0.1, 5);
        assert_eq!(ts.len(), 5);
        assert!((ts[0] - 0.1).abs() < 1e-14 && ts[0] - 0.1 >= 0.0);
        assert!((ts[4] - 0.9).abs() < 1e-14 && ts[4] + 0.1 <= 1.0);
        let (a, b) = (0.0, 3.6275987284684357);
        for t in interior_times(a, b, 2e-4, 7) {
            assert!(t - 2e-4 >= a && t + 2e-4 <= b);
        }
        assert!(interior_times(0.0, 0.1, 0.1, 3).is_empty());
    }
}
