//! Deterministic checks of the documented invariants against independent
//! references.

mod common;

use common::*;
use lacunary::kernels::{delta_k, poisson_moment, tent};
use lacunary::random_model::{binomial_variance_reference, iid_points, RngSpec};
use lacunary::sequence::{
    fractional_parts_wide, frac_points_with_precision, narrow, wide_precision,
};
use lacunary::stats::{
    count_moment, counts_on_grid, k_level_correlation, mean_count, number_variance_exact,
    pair_correlation,
};
use lacunary::harness::experiments::binomial_moment_reference;
use lacunary::{frac_points, BigFloat, SequenceSpec, WindowParams};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};


/// Nearest-rounded exact value, to compare with the stored rounding.
fn exact_frac_rounded(m: &BigInt, e: i64, num: &BigInt, den: &BigInt) -> u64 {
    let (p, q) = if e >= 0 {
        (m * num * (BigInt::one() << e as usize), den.clone())
    } else {
        (m * num, den * (BigInt::one() << (-e) as usize))
    };
    let r = ((p % &q) + &q) % &q;
    let scaled: BigInt = ((r << 65usize) / &q + 1) >> 1usize;
    let v = if scaled >= (BigInt::one() << 64usize) { BigInt::zero() } else { scaled };
    v.to_u64_digits().1.first().copied().unwrap_or(0)
}

#[test]
fn fractional_parts_match_exact_rationals() {
    // a_n = 2^n and a_n = 1.5^(n-1), n <= 200, alpha a long dyadic
    let specs = [
        (SequenceSpec::powers_of_two(), 2i64, 1i64),
        (SequenceSpec::geometric(1.0, 1.5), 3, 2),
    ];
    for (spec, num_base, den_base) in specs {
        for stream in 0..4 {
            let n = 200;
            let alpha = alpha(&spec, n, 99, stream);
            let pts = frac_points(&spec, &alpha, n).unwrap();
            let (m, e) = (alpha.mantissa().clone(), alpha.exponent());
            let mut expect: Vec<u64> = (1..=n)
                .map(|k| {
                    let (num, den) = if num_base == 2 {
                        (BigInt::one() << k, BigInt::one())
                    } else {
                        (
                            BigInt::from(num_base).pow(k as u32 - 1),
                            BigInt::from(den_base).pow(k as u32 - 1),
                        )
                    };
                    exact_frac_rounded(&m, e, &num, &den)
                })
                .collect();
            expect.sort_unstable();
            for (got, want) in pts.fixed().iter().zip(&expect) {
                let d = got.wrapping_sub(*want) as i64;
                assert!(d.abs() <= 1, "{got} vs {want}");
            }
        }
    }
}

#[test]
fn fractional_parts_negative_alpha_exact() {
    let spec = SequenceSpec::powers_of_two();
    let alpha = alpha(&spec, 100, 3, 0).neg();
    assert!(alpha.mantissa().is_negative());
    let pts = frac_points(&spec, &alpha, 100).unwrap();
    let mut expect: Vec<u64> = (1..=100)
        .map(|k| exact_frac_rounded(alpha.mantissa(), alpha.exponent(), &(BigInt::one() << k), &BigInt::one()))
        .collect();
    expect.sort_unstable();
    for (got, want) in pts.fixed().iter().zip(&expect) {
        assert!((got.wrapping_sub(*want) as i64).abs() <= 1);
    }
}

#[test]
fn doubling_precision_changes_nothing() {
    for spec in [
        SequenceSpec::powers_of_two(),
        SequenceSpec::geometric(1.0, 1.5),
        SequenceSpec::geometric_plus_poly(1.0, 3.0, 2),
        SequenceSpec::custom_ratios(1.0, vec![2.0, 1.25, 3.5]),
    ] {
        let n = 300;
        let alpha = alpha(&spec, n, 5, 1);
        let bits = wide_precision(&spec, &alpha, n) as u32;
        let a = frac_points_with_precision(&spec, &alpha, n, bits).unwrap();
        let b = frac_points_with_precision(&spec, &alpha, n, 2 * bits).unwrap();
        for (x, y) in a.fixed().iter().zip(b.fixed()) {
            assert!((x.wrapping_sub(*y) as i64).abs() <= 1, "{:?}", spec.kind);
        }
    }
}

#[test]
fn sorted_points_are_the_multiset_of_fractional_parts() {
    let spec = SequenceSpec::geometric(1.0, 1.5);
    let n = 500;
    let alpha = alpha(&spec, n, 8, 0);
    let bits = wide_precision(&spec, &alpha, n) as u32;
    let mut raw: Vec<u64> = fractional_parts_wide(&spec, &alpha, n, bits)
        .unwrap()
        .into_iter()
        .map(narrow)
        .collect();
    raw.sort_unstable();
    let pts = frac_points(&spec, &alpha, n).unwrap();
    assert_eq!(pts.fixed(), &raw[..]);
    assert!(pts.fixed().windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn kernels_integrate_to_one() {
    // midpoint rule over [-1, 1]^(k-1)
    let m = 2000;
    let h = 2.0 / m as f64;
    let tent_int: f64 = (0..m).map(|i| tent(-1.0 + (i as f64 + 0.5) * h) * h).sum();
    assert!((tent_int - 1.0).abs() < 1e-3);

    let m = 400;
    let h = 2.0 / m as f64;
    let mut acc = 0.0;
    for i in 0..m {
        for j in 0..m {
            let t = [-1.0 + (i as f64 + 0.5) * h, -1.0 + (j as f64 + 0.5) * h];
            acc += delta_k(&t).unwrap() * h * h;
        }
    }
    assert!((acc - 1.0).abs() < 1e-3, "k=3: {acc}");

    let m = 120;
    let h = 2.0 / m as f64;
    let mut acc = 0.0;
    for i in 0..m {
        for j in 0..m {
            for l in 0..m {
                let t = [
                    -1.0 + (i as f64 + 0.5) * h,
                    -1.0 + (j as f64 + 0.5) * h,
                    -1.0 + (l as f64 + 0.5) * h,
                ];
                acc += delta_k(&t).unwrap() * h * h * h;
            }
        }
    }
    assert!((acc - 1.0).abs() < 1e-3, "k=4: {acc}");

    for i in 0..10_000 {
        let t = -1.5 + 3.0 * i as f64 / 10_000.0;
        assert_eq!(delta_k(&[t]).unwrap(), tent(t));
    }
}

#[test]
fn mean_count_is_exactly_l() {
    for (n, l) in [(64usize, 1.0), (1000, 7.3), (4096, 27.857), (10, 10.0)] {
        let pts = iid_points(n, RngSpec::new(1, n as u64));
        let w = WindowParams::new(n, l).unwrap();
        let m = mean_count(&pts, &w).unwrap();
        assert!((m - l).abs() <= l * f64::EPSILON, "{m} vs {l}");
    }
}

#[test]
fn k_two_is_the_pair_correlation() {
    for s in 0..10u64 {
        let spec = if s % 2 == 0 { SequenceSpec::powers_of_two() } else { SequenceSpec::geometric(1.0, 1.5) };
        let n = 256 << (s % 3);
        let a = alpha(&spec, n, s, 0);
        let pts = frac_points(&spec, &a, n).unwrap();
        let w = WindowParams::new(n, 1.0 + s as f64).unwrap();
        assert_eq!(
            k_level_correlation(&pts, &w, 2).unwrap().value,
            pair_correlation(&pts, &w).unwrap().value
        );
    }
}

#[test]
fn variance_identity_against_exact_integral() {
    for s in 0..12u64 {
        let n = [16usize, 50, 128][s as usize % 3];
        let l = [0.5, 2.0, 5.5][(s / 3) as usize % 3];
        let pts = if s % 2 == 0 {
            iid_points(n, RngSpec::new(s, 0))
        } else {
            let spec = SequenceSpec::geometric(1.0, 1.5);
            frac_points(&spec, &alpha(&spec, n, s, 0), n).unwrap()
        };
        let w = WindowParams::new(n, l).unwrap();
        let fast = number_variance_exact(&pts, &w).unwrap().value;
        let slow = naive_variance(&pts, &w);
        assert!((fast - slow).abs() < 1e-9 * slow.max(1.0), "{fast} vs {slow}");
    }
}

#[test]
fn clt_grid_riemann_sum_is_l() {
    let spec = SequenceSpec::powers_of_two();
    for (n, grid) in [(1024usize, 4096usize), (4096, 10_000), (1000, 1000)] {
        let pts = frac_points(&spec, &alpha(&spec, n, 2, 0), n).unwrap();
        let w = WindowParams::new(n, (n as f64).ln().powi(2)).unwrap();
        let total: usize = counts_on_grid(&pts, &w, grid).unwrap().iter().sum();
        let avg = total as f64 / grid as f64;
        assert!((avg - w.l_value).abs() <= 2.0 * n as f64 / grid as f64, "{avg}");
    }
}

#[test]
fn iid_variance_matches_binomial() {
    for (n, l) in [(256usize, 4.0), (1024, 8.0), (4096, 16.0)] {
        let draws = 1000;
        let vals: Vec<f64> = (0..draws)
            .map(|i| {
                let pts = iid_points(n, RngSpec::new(17, i));
                number_variance_exact(&pts, &WindowParams::new(n, l).unwrap())
                    .unwrap()
                    .value
            })
            .collect();
        let mean = vals.iter().sum::<f64>() / draws as f64;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (draws as f64 - 1.0)).sqrt();
        let z = (mean - binomial_variance_reference(n, l)) / (sd / (draws as f64).sqrt());
        assert!(z.abs() < 4.0, "N={n}: z = {z}");
    }
}

#[test]
fn iid_count_moments_approach_poisson() {
    let l = 4.0;
    let draws = 1000u64;
    for k in 2..=4usize {
        let mut prev_gap = f64::INFINITY;
        for n in [256usize, 1024, 4096] {
            let reference = binomial_moment_reference(k, n, l);
            let gap = (reference - poisson_moment(k as u32, l).unwrap()).abs();
            assert!(gap < prev_gap, "finite-N moment not approaching the limit");
            prev_gap = gap;
            let w = WindowParams::new(n, l).unwrap();
            let vals: Vec<f64> = (0..draws)
                .map(|i| count_moment(&iid_points(n, RngSpec::new(23, i)), &w, k).unwrap().value)
                .collect();
            let mean = vals.iter().sum::<f64>() / draws as f64;
            let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (draws as f64 - 1.0)).sqrt();
            let z = (mean - reference) / (sd / (draws as f64).sqrt());
            assert!(z.abs() < 4.0, "k={k}, N={n}: z = {z}");
        }
    }
}

#[test]
fn iid_points_are_uniform() {
    let n = 100_000;
    let pts = iid_points(n, RngSpec::new(42, 0));
    let mean = pts.values().iter().sum::<f64>() / n as f64;
    assert!((mean - 0.5).abs() < 4.0 / (12.0 * n as f64).sqrt());

    let n = 1000;
    let mut exceed = 0;
    for seed in 0..100 {
        let v = iid_points(n, RngSpec::new(seed, 0)).values();
        let ks = v
            .iter()
            .enumerate()
            .map(|(i, &x)| (x - i as f64 / n as f64).max((i + 1) as f64 / n as f64 - x))
            .fold(0.0, f64::max);
        if ks >= 1.95 / (n as f64).sqrt() {
            exceed += 1;
        }
    }
    assert!(exceed <= 1, "{exceed} of 100 seeds exceed the 0.999 KS quantile");
    assert_eq!(iid_points(50, RngSpec::new(9, 9)), iid_points(50, RngSpec::new(9, 9)));
    assert_ne!(iid_points(50, RngSpec::new(9, 9)), iid_points(50, RngSpec::new(9, 10)));
}

#[test]
fn bigfloat_rounding_is_nearest_even() {
    // 0b1011 rounded to 3 bits is a tie -> 0b1100 (even)
    let x = BigFloat::from_u64(0b1011);
    assert_eq!(x.round(3), BigFloat::from_u64(0b1100));
    let x = BigFloat::from_u64(0b1001);
    assert_eq!(x.round(3), BigFloat::from_u64(0b1000));
    let x = BigFloat::from_u64(0b10011);
    assert_eq!(x.round(3), BigFloat::from_u64(0b10100));
}
