//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's own metric, sampler or ranking code.

#![allow(dead_code, clippy::needless_range_loop)]

use driftbench::corpus::Sample;

/// Metric values in `Metric::ALL` order, computed with plain nested loops.
/// `None` if any required cell is absent.
pub fn brute_metrics(rows: &[Vec<Option<f64>>]) -> [Option<f64>; 5] {
    let n = rows.len();
    let tri = |keep: &dyn Fn(usize, usize) -> bool| -> Option<f64> {
        let mut total = 0.0;
        let mut count = 0usize;
        for i in 0..n {
            for j in 0..n {
                if keep(i, j) {
                    total += rows[i][j]?;
                    count += 1;
                }
            }
        }
        Some(total / count as f64)
    };
    [
        tri(&|i, j| i >= j),
        tri(&|i, j| i > j),
        tri(&|i, j| i < j),
        tri(&|i, j| i == j),
        tri(&|i, j| j == i + 1),
    ]
}

/// Expected number of buffer entries from each bucket after feeding buckets
/// of the given sizes through a fixed-alpha reservoir of capacity `k`.
/// Assumes the temporary set never exceeds `k`.
pub fn reservoir_expectation(sizes: &[usize], k: usize, alpha: f64) -> Vec<f64> {
    let mut c = vec![0.0; sizes.len()];
    let mut len = 0.0f64;
    let mut seen = 0usize;
    for (t, &s) in sizes.iter().enumerate() {
        let i = seen + s;
        let fill = (s as f64).min(k as f64 - len);
        c[t] += fill;
        len += fill;
        let rest = s as f64 - fill;
        let p = (alpha * k as f64 / i as f64).min(1.0);
        let expected_t = rest * p;
        if expected_t > 0.0 {
            for v in c.iter_mut() {
                *v *= 1.0 - expected_t / k as f64;
            }
            c[t] += expected_t;
        }
        seen = i;
    }
    c
}

/// Standard normal CDF by composite Simpson integration of the density.
pub fn normal_cdf(x: f64) -> f64 {
    let lo = -12.0;
    if x <= lo {
        return 0.0;
    }
    let n = 20_000;
    let h = (x - lo) / n as f64;
    let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = pdf(lo) + pdf(x);
    for m in 1..n {
        let w = if m % 2 == 1 { 4.0 } else { 2.0 };
        s += w * pdf(lo + m as f64 * h);
    }
    s * h / 3.0
}

pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n).sqrt())
}

/// Samples with sequential ids; bucket `t` gets timestamp `t`.
pub fn id_stream(sizes: &[usize]) -> Vec<Vec<Sample>> {
    let mut next = 0u64;
    sizes
        .iter()
        .enumerate()
        .map(|(t, &s)| {
            (0..s)
                .map(|_| {
                    next += 1;
                    Sample::new(next - 1, t as i64, vec![0.0], 0)
                })
                .collect()
        })
        .collect()
}
