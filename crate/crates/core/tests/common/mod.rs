//! Brute-force reference implementations shared by the integration tests.
#![allow(dead_code)]

use lacunary::harness::experiments::{alpha_bits, sample_alpha};
use lacunary::kernels::{delta_k, tent};
use lacunary::random_model::RngSpec;
use lacunary::{BigFloat, FracPointSet, SequenceSpec, WindowParams};

pub const TWO_POW_64: f64 = 18_446_744_073_709_551_616.0;

/// Signed circular difference `a - b` reduced to [-1/2, 1/2).
pub fn circ_diff(a: u64, b: u64) -> f64 {
    a.wrapping_sub(b) as i64 as f64 / TWO_POW_64
}

pub fn alpha(spec: &SequenceSpec, n: usize, seed: u64, stream: u64) -> BigFloat {
    sample_alpha(1.0, 2.0, alpha_bits(spec, n), RngSpec::new(seed, stream)).unwrap()
}

/// Neumaier compensated sum.
#[derive(Default)]
pub struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        self.carry += if self.sum.abs() >= x.abs() {
            (self.sum - t) + x
        } else {
            (x - t) + self.sum
        };
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// `(1/N) sum_{i != j} tent(N (x_i - x_j) / L)`; needs `L/N <= 1/2`.
pub fn naive_pair(points: &FracPointSet, w: &WindowParams) -> f64 {
    let x = points.fixed();
    let mut acc = Compensated::default();
    for i in 0..x.len() {
        for j in 0..x.len() {
            if i != j {
                acc.add(tent(circ_diff(x[i], x[j]) / w.window_len));
            }
        }
    }
    acc.value() / x.len() as f64
}

/// `(1/N) sum over ordered distinct triples of delta_3`; needs `L/N <= 1/2`.
pub fn naive_triple(points: &FracPointSet, w: &WindowParams) -> f64 {
    let x = points.fixed();
    let n = x.len();
    let mut acc = Compensated::default();
    for i in 0..n {
        for j in 0..n {
            if j == i {
                continue;
            }
            let t1 = circ_diff(x[i], x[j]) / w.window_len;
            if t1.abs() >= 1.0 {
                continue;
            }
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                let t2 = circ_diff(x[i], x[k]) / w.window_len;
                acc.add(delta_k(&[t1, t2]).unwrap());
            }
        }
    }
    acc.value() / n as f64
}

/// Exact `integral_0^1 (S(x) - L)^2 dx` from the breakpoints of the
/// piecewise-constant counting function; needs `L/N < 1/2`.
pub fn naive_variance(points: &FracPointSet, w: &WindowParams) -> f64 {
    let h = 0.5 * w.window_len;
    let vals = points.values();
    let mut cuts: Vec<f64> = vec![0.0, 1.0];
    for &v in &vals {
        for c in [v - h, v + h] {
            cuts.push(c.rem_euclid(1.0));
        }
    }
    cuts.sort_by(f64::total_cmp);
    let mut acc = 0.0;
    for pair in cuts.windows(2) {
        let len = pair[1] - pair[0];
        if len <= 0.0 {
            continue;
        }
        let mid = 0.5 * (pair[0] + pair[1]);
        let count = vals
            .iter()
            .filter(|&&v| {
                let d = (v - mid).rem_euclid(1.0);
                d.min(1.0 - d) <= h
            })
            .count() as f64;
        acc += len * (count - w.l_value).powi(2);
    }
    acc
}

/// Number of points within the closed window of half-width `L/(2N)`
/// around `x`, by direct scan.
pub fn naive_count(points: &FracPointSet, w: &WindowParams, x: f64) -> usize {
    let xf = (x * TWO_POW_64).round();
    let xf = if xf >= TWO_POW_64 { 0 } else { xf as u64 };
    let half = (0.5 * w.window_len * TWO_POW_64) as u128;
    points
        .fixed()
        .iter()
        .map(|&p| {
            let d = p.wrapping_sub(xf) as u128;
            let up = d;
            let down = (1u128 << 64) - d;
            // a point at distance exactly 1/2 turn with half = 1/2 counts twice
            (up <= half) as usize + (d != 0 && down <= half) as usize
        })
        .sum()
}
