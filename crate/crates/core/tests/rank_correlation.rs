mod support;

use chronobench::stats::average_ranks;
use chronobench::{kendall_tau, spearman_rho, PairedSample};
use proptest::prelude::*;
use support::oracles::{kendall_by_pairs, permutations, spearman_by_d2};

fn sample(x: &[f64], y: &[f64]) -> PairedSample<f64> {
    PairedSample::new(x.to_vec(), y.to_vec()).unwrap()
}

#[test]
fn kendall_matches_pair_counting_on_all_permutations() {
    for n in 2..=6 {
        let x: Vec<f64> = (0..n).map(|i| i as f64).collect();
        for perm in permutations(n) {
            let y: Vec<f64> = perm.iter().map(|&i| i as f64).collect();
            let s = sample(&x, &y);
            assert_eq!(kendall_tau(&s).unwrap(), kendall_by_pairs(&x, &y), "{perm:?}");
        }
    }
}

#[test]
fn spearman_matches_rank_difference_formula() {
    for n in 2..=6 {
        let x: Vec<f64> = (0..n).map(|i| (i * i) as f64 + 0.5).collect();
        for perm in permutations(n) {
            let y: Vec<f64> = perm.iter().map(|&i| 10.0 - i as f64).collect();
            let got = spearman_rho(&sample(&x, &y)).unwrap();
            let want = spearman_by_d2(&x, &y);
            assert!((got - want).abs() < 1e-12, "{perm:?}: {got} vs {want}");
        }
    }
}

#[test]
fn three_point_swap_is_exact() {
    let s = sample(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]);
    assert_eq!(kendall_tau(&s).unwrap(), 1.0 / 3.0);
    assert_eq!(spearman_rho(&s).unwrap(), 0.5);
}

#[test]
fn ties_use_tau_b_and_average_ranks() {
    // tau-b by hand: 8 concordant, 0 discordant, one tie in x and one in y.
    let s = sample(&[1.0, 2.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 3.0, 4.0]);
    let tau = kendall_tau(&s).unwrap();
    assert!((tau - 8.0 / 9.0).abs() < 1e-12);
    assert_eq!(average_ranks(&[10.0, 20.0, 20.0, 5.0]), vec![2.0, 3.5, 3.5, 1.0]);
}

#[test]
fn degenerate_inputs_are_errors() {
    assert!(PairedSample::new(vec![1.0], vec![1.0]).is_err());
    assert!(PairedSample::new(vec![1.0, 2.0], vec![1.0]).is_err());
    assert!(PairedSample::new(vec![1.0, f64::NAN], vec![1.0, 2.0]).is_err());
    assert!(kendall_tau(&sample(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0])).is_err());
    assert!(spearman_rho(&sample(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0])).is_err());
}

proptest! {
    #[test]
    fn coefficients_are_bounded_and_symmetric(
        pairs in prop::collection::vec((0u8..6, 0u8..6), 3..40)
    ) {
        let x: Vec<f64> = pairs.iter().map(|p| f64::from(p.0)).collect();
        let y: Vec<f64> = pairs.iter().map(|p| f64::from(p.1)).collect();
        let (Ok(s), Ok(t)) = (PairedSample::new(x.clone(), y.clone()), PairedSample::new(y, x)) else {
            return Ok(());
        };
        if let (Ok(a), Ok(b)) = (kendall_tau(&s), kendall_tau(&t)) {
            prop_assert!((-1.0..=1.0).contains(&a));
            prop_assert!((a - b).abs() < 1e-12);
        }
        if let (Ok(a), Ok(b)) = (spearman_rho(&s), spearman_rho(&t)) {
            prop_assert!((-1.0..=1.0).contains(&a));
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn kendall_fast_path_matches_quadratic_count_with_ties(
        pairs in prop::collection::vec((0u8..5, 0u8..5), 2..30)
    ) {
        let x: Vec<f64> = pairs.iter().map(|p| f64::from(p.0)).collect();
        let y: Vec<f64> = pairs.iter().map(|p| f64::from(p.1)).collect();
        let n = x.len();
        let (mut c, mut d, mut tx, mut ty) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..n {
            for j in i + 1..n {
                let (dx, dy) = (x[i] - x[j], y[i] - y[j]);
                if dx == 0.0 { tx += 1.0; }
                if dy == 0.0 { ty += 1.0; }
                if dx * dy > 0.0 { c += 1.0; } else if dx * dy < 0.0 { d += 1.0; }
            }
        }
        let n0 = (n * (n - 1) / 2) as f64;
        let denom = ((n0 - tx) * (n0 - ty)).sqrt();
        let s = PairedSample::new(x, y).unwrap();
        match kendall_tau(&s) {
            Ok(tau) => prop_assert!((tau - (c - d) / denom).abs() < 1e-12),
            Err(_) => prop_assert!(denom == 0.0),
        }
    }
}
