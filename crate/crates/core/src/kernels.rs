//! Tent kernels, their Fourier transform, and the moment bookkeeping that
//! links correlation functions to moments of the counting function.

use std::f64::consts::PI;

use thiserror::Error;

/// Largest supported `k - 1` for [`delta_k`].
pub const MAX_DELTA_DIM: usize = 8;
/// Largest supported order for Stirling numbers and Poisson moments.
pub const MAX_STIRLING_ORDER: u32 = 30;
/// Below this `|x|`, [`tent_hat`] uses its Taylor series.
pub const TENT_HAT_SERIES_CUTOFF: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("delta_k needs at least one argument")]
    EmptyArguments,
    #[error("delta_k dimension {0} exceeds {MAX_DELTA_DIM}")]
    DimensionTooLarge(usize),
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("overflow evaluating {0}")]
    Overflow(String),
}

/// `max(1 - |t|, 0)`.
pub fn tent(t: f64) -> f64 {
    (1.0 - t.abs()).max(0.0)
}

/// Fourier transform of the tent, `sin^2(pi x) / (pi x)^2`, equal to 1 at 0.
pub fn tent_hat(x: f64) -> f64 {
    if x.abs() < TENT_HAT_SERIES_CUTOFF {
        // sinc^2 = 1 - y/3 + 2y^2/45 - y^3/315 with y = (pi x)^2
        let y = (PI * x) * (PI * x);
        1.0 - y / 3.0 + 2.0 * y * y / 45.0 - y * y * y / 315.0
    } else {
        let s = (PI * x).sin();
        (s * s) / ((PI * x) * (PI * x))
    }
}

/// The (k-1)-dimensional kernel
/// `max(1 - (max(0, t) - min(0, t)), 0)` for `t = (t_1, .., t_(k-1))`.
pub fn delta_k(ts: &[f64]) -> Result<f64, KernelError> {
    if ts.is_empty() {
        return Err(KernelError::EmptyArguments);
    }
    if ts.len() > MAX_DELTA_DIM {
        return Err(KernelError::DimensionTooLarge(ts.len()));
    }
    let (lo, hi) = ts
        .iter()
        .fold((0.0f64, 0.0f64), |(lo, hi), &t| (lo.min(t), hi.max(t)));
    Ok((1.0 - (hi - lo)).max(0.0))
}

/// Stirling number of the second kind `S(k, j)`, exact.
pub fn stirling2(k: u32, j: u32) -> Result<u128, KernelError> {
    if k > MAX_STIRLING_ORDER || j > k {
        return Err(KernelError::OutOfRange(format!(
            "stirling2 needs 0 <= j <= k <= {MAX_STIRLING_ORDER}, got k={k}, j={j}"
        )));
    }
    Ok(stirling2_row(k)[j as usize])
}

/// Row `S(k, 0..=k)` from `S(k, j) = j S(k-1, j) + S(k-1, j-1)`.
fn stirling2_row(k: u32) -> Vec<u128> {
    let mut row = vec![1u128];
    for m in 1..=k as usize {
        let mut next = vec![0u128; m + 1];
        for j in 1..=m {
            let stay = if j < m { j as u128 * row[j] } else { 0 };
            next[j] = stay + row[j - 1];
        }
        row = next;
    }
    row
}

/// k-th moment of a Poisson variable with mean `l`: `sum_j S(k, j) l^j`.
pub fn poisson_moment(k: u32, l: f64) -> Result<f64, KernelError> {
    if k == 0 || k > MAX_STIRLING_ORDER {
        return Err(KernelError::OutOfRange(format!(
            "poisson_moment order must be in 1..={MAX_STIRLING_ORDER}, got {k}"
        )));
    }
    if !(l >= 0.0 && l.is_finite()) {
        return Err(KernelError::OutOfRange(format!("L must be >= 0, got {l}")));
    }
    let row = stirling2_row(k);
    // Horner in l over the row (S(k, 0) = 0 for k >= 1)
    Ok(row.iter().rev().fold(0.0, |acc, &s| acc * l + s as f64))
}

/// k-th moment of a standard Gaussian: 0 for odd k, `(k-1)!!` for even k.
pub fn normal_moment(k: u32) -> f64 {
    if k % 2 == 1 {
        0.0
    } else {
        (1..k).step_by(2).map(|i| i as f64).product()
    }
}

/// `C_k(N) = (1 - 1/N)(1 - 2/N)...(1 - (k-1)/N)`.
pub fn ck_factor(k: usize, n: usize) -> Result<f64, KernelError> {
    if k == 0 || k > n {
        return Err(KernelError::OutOfRange(format!(
            "ck_factor needs 1 <= k <= N, got k={k}, N={n}"
        )));
    }
    let nf = n as f64;
    Ok((1..k).map(|i| 1.0 - i as f64 / nf).product())
}

/// Moment generating function of `(Y - L) / sqrt(L)` for `Y ~ Poisson(L)`:
/// `exp(-t sqrt(L) + L (e^(t / sqrt(L)) - 1))`.
pub fn normalized_poisson_mgf(t: f64, l: f64) -> Result<f64, KernelError> {
    if !(l > 0.0 && l.is_finite()) || !t.is_finite() {
        return Err(KernelError::OutOfRange(format!(
            "normalized_poisson_mgf needs L > 0 and finite t, got t={t}, L={l}"
        )));
    }
    let root = l.sqrt();
    let exponent = -t * root + l * (t / root).exp_m1();
    if !exponent.is_finite() || exponent > f64::MAX.ln() {
        return Err(KernelError::Overflow(format!(
            "normalized_poisson_mgf(t={t}, L={l})"
        )));
    }
    Ok(exponent.exp())
}

/// Moments of a Poisson and a standard Gaussian side by side.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    pub max_order: u32,
    pub l_value: f64,
    /// `poisson[k - 1]` is the k-th moment.
    pub poisson: Vec<f64>,
    pub normal: Vec<f64>,
}

impl MomentTable {
    pub fn new(max_order: u32, l_value: f64) -> Result<Self, KernelError> {
        let poisson = (1..=max_order)
            .map(|k| poisson_moment(k, l_value))
            .collect::<Result<Vec<_>, _>>()?;
        let normal = (1..=max_order).map(normal_moment).collect();
        Ok(MomentTable {
            max_order,
            l_value,
            poisson,
            normal,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tent_values() {
        assert_eq!(tent(0.0), 1.0);
        assert_eq!(tent(0.5), 0.5);
        assert_eq!(tent(-2.0), 0.0);
        assert_eq!(tent(1.0), 0.0);
    }

    #[test]
    fn tent_hat_values() {
        assert_eq!(tent_hat(0.0), 1.0);
        assert!(tent_hat(1.0).abs() < 1e-30);
        let expect = 4.0 / (PI * PI);
        assert!((tent_hat(0.5) - expect).abs() < 1e-15);
        assert!((tent_hat(0.5) - 0.405285).abs() < 1e-6);
    }

    #[test]
    fn tent_hat_branches_agree_at_cutoff() {
        let x = TENT_HAT_SERIES_CUTOFF;
        let s = (PI * x).sin();
        let direct = s * s / ((PI * x) * (PI * x));
        for y in [x * (1.0 - 1e-12), x * 0.5, x * 0.999] {
            let s = (PI * y).sin();
            let d = s * s / ((PI * y) * (PI * y));
            assert!((tent_hat(y) - d).abs() < 1e-14);
        }
        assert!((tent_hat(x) - direct).abs() < 1e-14);
        assert_eq!(tent_hat(-3e-5), tent_hat(3e-5));
    }

    #[test]
    fn delta_k_values() {
        assert_eq!(delta_k(&[0.3]).unwrap(), tent(0.3));
        assert!((delta_k(&[0.3, -0.2]).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(delta_k(&[0.9, -0.9]).unwrap(), 0.0);
        assert_eq!(delta_k(&[]), Err(KernelError::EmptyArguments));
        assert_eq!(delta_k(&[0.0; 9]), Err(KernelError::DimensionTooLarge(9)));
        assert_eq!(delta_k(&[0.0; 8]).unwrap(), 1.0);
    }

    #[test]
    fn delta_2_is_tent_on_grid() {
        for i in 0..10_000 {
            let t = -1.5 + 3.0 * i as f64 / 9_999.0;
            assert_eq!(delta_k(&[t]).unwrap(), tent(t));
        }
    }

    /// Partition count by brute force: assign each element a block label
    /// in restricted-growth form.
    fn partitions_brute(k: u32, j: u32) -> u128 {
        fn rec(pos: u32, k: u32, used: u32, j: u32) -> u128 {
            if pos == k {
                return u128::from(used == j);
            }
            let mut total = 0;
            for b in 0..=used.min(j.saturating_sub(1)) {
                let used2 = if b == used { used + 1 } else { used };
                if used2 <= j {
                    total += rec(pos + 1, k, used2, j);
                }
            }
            total
        }
        rec(0, k, 0, j)
    }

    #[test]
    fn stirling_values() {
        assert_eq!(stirling2(3, 1).unwrap(), 1);
        assert_eq!(stirling2(3, 2).unwrap(), 3);
        assert_eq!(stirling2(4, 2).unwrap(), 7);
        assert_eq!(stirling2(0, 0).unwrap(), 1);
        assert_eq!(stirling2(5, 0).unwrap(), 0);
        assert!(stirling2(31, 2).is_err());
        assert!(stirling2(3, 4).is_err());
        for k in 0..=8 {
            for j in 0..=k {
                assert_eq!(stirling2(k, j).unwrap(), partitions_brute(k, j), "S({k},{j})");
            }
        }
    }

    #[test]
    fn bell_numbers() {
        let bell = |k: u32| (0..=k).map(|j| stirling2(k, j).unwrap()).sum::<u128>();
        assert_eq!(bell(4), 15);
        assert_eq!(bell(5), 52);
        // Bell(30) = 846749014511809332450147
        assert_eq!(bell(30), 846_749_014_511_809_332_450_147);
    }

    #[test]
    fn poisson_moment_values() {
        assert_eq!(poisson_moment(1, 5.0).unwrap(), 5.0);
        assert_eq!(poisson_moment(2, 5.0).unwrap(), 30.0);
        assert_eq!(poisson_moment(3, 2.0).unwrap(), 22.0);
        for k in 1..=10 {
            assert_eq!(poisson_moment(k, 0.0).unwrap(), 0.0);
        }
        assert!(poisson_moment(0, 1.0).is_err());
        assert!(poisson_moment(31, 1.0).is_err());
        assert!(poisson_moment(2, -1.0).is_err());
    }

    #[test]
    fn normal_moments() {
        let got: Vec<f64> = (1..=6).map(normal_moment).collect();
        assert_eq!(got, vec![0.0, 1.0, 0.0, 3.0, 0.0, 15.0]);
    }

    #[test]
    fn ck_values() {
        assert_eq!(ck_factor(2, 2).unwrap(), 0.5);
        assert!((ck_factor(3, 10).unwrap() - 0.72).abs() < 1e-15);
        assert_eq!(ck_factor(2, 1_000_000).unwrap(), 1.0 - 1e-6);
        assert!(ck_factor(3, 2).is_err());
    }

    #[test]
    fn mgf_values() {
        assert_eq!(normalized_poisson_mgf(0.0, 7.0).unwrap(), 1.0);
        let e_half = 0.5f64.exp();
        assert!((normalized_poisson_mgf(1.0, 1e6).unwrap() - e_half).abs() < 1e-2);
        let expect = (std::f64::consts::E - 2.0).exp();
        assert!((normalized_poisson_mgf(1.0, 1.0).unwrap() - expect).abs() < 1e-14);
        assert!((expect - 2.0509).abs() < 1e-4);
        assert!(matches!(
            normalized_poisson_mgf(1e4, 1.0),
            Err(KernelError::Overflow(_))
        ));
        assert!(normalized_poisson_mgf(1.0, 0.0).is_err());
    }

    #[test]
    fn mgf_approaches_gaussian() {
        for t in [-2.0, -1.0, 1.0, 2.0] {
            let target = (t * t / 2.0f64).exp();
            let errs: Vec<f64> = [1e2, 1e4, 1e6]
                .iter()
                .map(|&l| (normalized_poisson_mgf(t, l).unwrap() - target).abs())
                .collect();
            assert!(errs[0] > errs[1] && errs[1] > errs[2], "t={t}: {errs:?}");
        }
    }

    #[test]
    fn moment_table_shape() {
        let t = MomentTable::new(6, 3.0).unwrap();
        assert_eq!(t.poisson[0], 3.0);
        assert_eq!(t.normal, vec![0.0, 1.0, 0.0, 3.0, 0.0, 15.0]);
    }
}
