//! Confluent hypergeometric, Laguerre and Hermite-function evaluation.

use num_complex::Complex64;

/// Above this argument the series is summed in scaled form `e^{-z} 1F1`.
const SCALED_THRESHOLD: f64 = 30.0;
const MAX_TERMS: usize = 100_000;

/// Kummer's function `1F1(a; b; z)` for real arguments, `b > 0`.
///
/// Negative `z` goes through Kummer's transformation so that the summed
/// series never alternates for positive `a`.
pub fn hyp1f1(a: f64, b: f64, z: f64) -> f64 {
    if a <= 0.0 && a == a.round() {
        return terminating(a, b, z);
    }
    if z < 0.0 {
        return z.exp() * hyp1f1(b - a, b, -z);
    }
    if z > SCALED_THRESHOLD && a > 0.0 {
        return hyp1f1_scaled(a, b, z) * z.exp();
    }
    series(a, b, z)
}

/// `e^{-z} 1F1(a; b; z)` for `z >= 0`, `a, b > 0`; finite for any `z`.
pub fn hyp1f1_scaled(a: f64, b: f64, z: f64) -> f64 {
    assert!(z >= 0.0 && a > 0.0 && b > 0.0, "hyp1f1_scaled needs a, b > 0, z >= 0");
    if z <= SCALED_THRESHOLD {
        return (-z).exp() * series(a, b, z);
    }
    // Positive terms summed in log space, normalized by the largest term.
    let mut logs = Vec::with_capacity(64);
    let mut lt = 0.0f64;
    let mut k = 0usize;
    let mut peak = 0.0f64;
    loop {
        logs.push(lt);
        peak = peak.max(lt);
        let kf = k as f64;
        lt += ((a + kf) * z / ((b + kf) * (kf + 1.0))).ln();
        k += 1;
        if (lt < peak - 40.0 && kf > z) || k > MAX_TERMS {
            break;
        }
    }
    let s: f64 = logs.iter().map(|&l| (l - peak).exp()).sum();
    (peak - z + s.ln()).exp()
}

/// Polynomial case `a = -n` by the downward contiguous relation in `a`,
/// `(b-a) M(a-1) = a M(a+1) - (2a - b + z) M(a)`, which avoids the
/// cancellation of the alternating power series.
fn terminating(a: f64, b: f64, z: f64) -> f64 {
    let n = (-a) as u64;
    let mut up = 1.0; // M(0)
    if n == 0 {
        return up;
    }
    let mut cur = 1.0 - z / b; // M(-1)
    for k in 1..n {
        let ak = -(k as f64);
        let next = (ak * up - (2.0 * ak - b + z) * cur) / (b - ak);
        up = cur;
        cur = next;
    }
    cur
}

fn series(a: f64, b: f64, z: f64) -> f64 {
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    for k in 0..MAX_TERMS {
        let kf = k as f64;
        term *= (a + kf) * z / ((b + kf) * (kf + 1.0));
        sum += term;
        if term == 0.0 || (term.abs() <= 1e-17 * sum.abs() && kf > z) {
            break;
        }
    }
    sum
}

/// Complex-argument `1F1(a; b; z)` by direct series; intended for moderate `|z|`.
pub fn hyp1f1_complex(a: f64, b: f64, z: Complex64) -> Complex64 {
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let r = z.norm();
    for k in 0..MAX_TERMS {
        let kf = k as f64;
        term *= z * ((a + kf) / ((b + kf) * (kf + 1.0)));
        sum += term;
        if term.norm() <= 1e-17 * sum.norm().max(1e-300) && kf > r {
            break;
        }
    }
    sum
}

/// Generalized Laguerre polynomial `L_n^{(alpha)}(x)` by upward recurrence.
pub fn laguerre(n: u32, alpha: f64, x: f64) -> f64 {
    let mut l0 = 1.0;
    if n == 0 {
        return l0;
    }
    let mut l1 = 1.0 + alpha - x;
    for k in 1..n {
        let kf = k as f64;
        let l2 = ((2.0 * kf + 1.0 + alpha - x) * l1 - (kf + alpha) * l0) / (kf + 1.0);
        l0 = l1;
        l1 = l2;
    }
    l1
}

/// Normalized oscillator eigenfunctions `phi_0..=phi_nmax` at `x`:
/// `phi_n(x) = (2^n n! sqrt(pi))^{-1/2} H_n(x) e^{-x^2/2}`.
pub fn hermite_functions(nmax: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(nmax + 1);
    hermite_each(nmax, x, |_, v| out.push(v));
    out
}

/// `phi_n(x)` alone, without allocation.
pub fn hermite_function(n: usize, x: f64) -> f64 {
    let mut last = 0.0;
    hermite_each(n, x, |k, v| {
        if k == n {
            last = v;
        }
    });
    last
}

/// Calls `f(n, phi_n(x))` for `n = 0..=nmax` in order.
///
/// Running rescaling keeps high orders finite where `phi_0` underflows.
pub fn hermite_each(nmax: usize, x: f64, mut f: impl FnMut(usize, f64)) {
    let log0 = -0.5 * x * x - 0.25 * std::f64::consts::PI.ln();
    let mut scale_log = 0.0f64;
    let mut factor = log0.exp();
    let mut prev = 0.0f64;
    let mut cur = 1.0f64;
    let emit = |n: usize, v: f64, factor: f64, scale_log: f64, f: &mut dyn FnMut(usize, f64)| {
        if v == 0.0 {
            f(n, 0.0)
        } else if factor > 0.0 && factor.is_finite() {
            f(n, v * factor)
        } else {
            f(n, v * (log0 + scale_log).exp())
        }
    };
    emit(0, cur, factor, scale_log, &mut f);
    for n in 0..nmax {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * x * cur - (nf / (nf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > 1e150 {
            prev *= 1e-150;
            cur *= 1e-150;
            scale_log += 150.0 * std::f64::consts::LN_10;
            factor = (log0 + scale_log).exp();
        }
        emit(n + 1, cur, factor, scale_log, &mut f);
    }
}

/// `n!` as a float.
pub fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// `ln n!`.
pub fn ln_factorial(n: u32) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Falling factorial `n (n-1) ... (n-k+1)`; zero when `k > n`.
pub fn falling(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    ((n - k + 1)..=n).fold(1.0, |acc, j| acc * j as f64)
}

pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid() -> impl Iterator<Item = f64> {
        (0..=200).map(|i| i as f64 * 0.05)
    }

    #[test]
    fn identity_exp() {
        for x in grid() {
            assert_relative_eq!(hyp1f1(1.0, 1.0, x), x.exp(), max_relative = 1e-10);
        }
    }

    #[test]
    fn identity_exp_linear() {
        for x in grid() {
            assert_relative_eq!(hyp1f1(2.0, 1.0, x), x.exp() * (1.0 + x), max_relative = 1e-10);
        }
    }

    #[test]
    fn identity_laguerre() {
        for n in 0..=12u32 {
            for x in grid() {
                let lhs = hyp1f1(n as f64 + 1.0, 1.0, -x);
                let rhs = (-x).exp() * laguerre(n, 0.0, x);
                assert!(
                    (lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1e-12 * (-x).exp()),
                    "n={n} x={x}: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn scaled_matches_plain_across_threshold() {
        for &z in &[29.0, 30.5, 45.0, 80.0, 200.0] {
            for m in [0u32, 1, 5, 20] {
                let a = m as f64 + 1.0;
                let plain = series(a, 1.0, z) * (-z).exp();
                assert_relative_eq!(hyp1f1_scaled(a, 1.0, z), plain, max_relative = 1e-12);
            }
        }
        // Far beyond overflow of the unscaled value: 1F1(1;1;z) = e^z.
        assert_relative_eq!(hyp1f1_scaled(1.0, 1.0, 2000.0), 1.0, max_relative = 1e-10);
    }

    #[test]
    fn terminating_series_is_a_polynomial() {
        // 1F1(-2; 3; z) = 1 - 2z/3 + z^2/12
        let z = 1.7;
        assert_relative_eq!(hyp1f1(-2.0, 3.0, z), 1.0 - 2.0 * z / 3.0 + z * z / 12.0, max_relative = 1e-14);
        assert_eq!(hyp1f1(0.0, 2.0, 5.0), 1.0);
    }

    #[test]
    fn laguerre_small_orders() {
        let x = 0.7;
        assert_relative_eq!(laguerre(2, 0.0, x), 0.5 * (x * x - 4.0 * x + 2.0), epsilon = 1e-15);
        assert_relative_eq!(laguerre(1, 2.0, x), 3.0 - x, epsilon = 1e-15);
    }

    #[test]
    fn complex_series_matches_real() {
        let z = Complex64::new(2.3, 0.0);
        assert_relative_eq!(hyp1f1_complex(3.0, 1.0, z).re, hyp1f1(3.0, 1.0, 2.3), max_relative = 1e-14);
        // 1F1(1;1;z) = e^z off the real axis.
        let z = Complex64::new(0.4, -1.3);
        let d = hyp1f1_complex(1.0, 1.0, z) - z.exp();
        assert!(d.norm() < 1e-14);
    }

    #[test]
    fn hermite_orthonormal() {
        let n = 40;
        let h = 0.01;
        let mut gram = vec![vec![0.0; n + 1]; n + 1];
        let mut x = -15.0;
        while x <= 15.0 {
            let v = hermite_functions(n, x);
            for i in 0..=n {
                for j in 0..=n {
                    gram[i][j] += h * v[i] * v[j];
                }
            }
            x += h;
        }
        for i in 0..=n {
            for j in 0..=n {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((gram[i][j] - expect).abs() < 1e-9, "({i},{j}) = {}", gram[i][j]);
            }
        }
    }

    #[test]
    fn hermite_high_order_far_tail_finite() {
        let v = hermite_functions(300, 40.0);
        assert!(v.iter().all(|x| x.is_finite()));
        assert_eq!(v[0], 0.0);
        let v = hermite_functions(300, 24.0);
        assert!(v[300].abs() > 0.0);
    }

    #[test]
    fn combinatorics() {
        assert_eq!(factorial(5), 120.0);
        assert_eq!(falling(5, 2), 20.0);
        assert_eq!(falling(2, 3), 0.0);
        assert_eq!(binomial(6, 2), 15.0);
        assert_relative_eq!(ln_factorial(20), factorial(20).ln(), max_relative = 1e-14);
    }
}
