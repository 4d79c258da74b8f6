mod support;

use std::time::Instant;

use chronobench::{
    chscore, chscore_from_visibility, coherence_components, CHScoreConfig, MissingSeries, VisibilityMatrix,
};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;
use support::oracles::{coherence_reference, inject_spike, random_visibility, relative_error};

fn score(vis: &[Vec<bool>], cfg: &CHScoreConfig<f64>) -> chronobench::CoherenceReport {
    let matrix = VisibilityMatrix::new(vis.to_vec(), None).unwrap();
    chscore_from_visibility(&matrix, cfg).unwrap()
}

#[test]
fn matches_reference_on_random_matrices() {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let start = Instant::now();
    for case in 0..1000 {
        let vis = random_visibility(&mut rng, 6, 9);
        for raw in [false, true] {
            let cfg = CHScoreConfig {
                clamp_negative_max: !raw,
                ..CHScoreConfig::default()
            };
            let report = score(&vis, &cfg);
            let (expected, parts) = coherence_reference(&vis, 0.1, 1e-6, raw);
            assert!(
                relative_error(report.score, expected) <= 1e-12,
                "case {case} raw={raw}: {} vs {expected} for {vis:?}",
                report.score
            );
            for (got, want) in report.components.as_array().iter().zip(parts) {
                assert!((got - want).abs() <= 1e-12, "case {case}: component {got} vs {want}");
            }
        }
    }
    assert!(start.elapsed().as_secs_f64() < 5.0);
}

#[test]
fn hand_worked_series() {
    let cfg = CHScoreConfig::<f64> {
        threshold: 0.3,
        ..CHScoreConfig::default()
    };
    let series = MissingSeries::from_fractions(vec![0.0, 0.25, 0.75]).unwrap();
    let c = coherence_components(&series, &cfg);
    let expected = [1.0 / 3.0, 0.125, 1.0 / 3.0, 0.5, 0.5];
    for (got, want) in c.as_array().iter().zip(expected) {
        assert!((got - want).abs() < 1e-15, "{got} vs {want}");
    }
    assert!((chscore(&c, &cfg) - 0.55814).abs() < 1e-5);

    // Same series from a 4-point grid: 0, 1 and 3 points hidden.
    let vis = vec![
        vec![true; 4],
        vec![false, true, true, true],
        vec![false, false, false, true],
    ];
    let report = score(&vis, &cfg);
    assert!((report.score - 0.55814).abs() < 1e-5);
}

#[test]
fn perfect_video_hits_epsilon_ceiling() {
    let report = score(&vec![vec![true; 9]; 5], &CHScoreConfig::default());
    assert_eq!(report.components.sum(), 0.0);
    assert!((report.score - 1e6).abs() < 1e-6);
}

#[test]
fn single_frame_has_only_mean_term() {
    let vis = vec![vec![false, true, true, true]];
    let report = score(&vis, &CHScoreConfig::default());
    assert_eq!(report.components.as_array(), [0.25, 0.0, 0.0, 0.0, 0.0]);
    assert_eq!(report.score, 1.0 / (0.25 + 1e-6));
}

#[test]
fn improving_visibility_is_clamped_unless_raw() {
    let series = MissingSeries::from_fractions(vec![0.5, 0.2]).unwrap();
    let clamped = coherence_components(&series, &CHScoreConfig::<f64>::default());
    assert_eq!(clamped.m_missed, 0.0);
    let raw = coherence_components(
        &series,
        &CHScoreConfig {
            clamp_negative_max: false,
            ..CHScoreConfig::default()
        },
    );
    assert!((raw.m_missed + 0.3).abs() < 1e-15);
}

#[test]
fn cut_threshold_is_strict() {
    let cfg = CHScoreConfig {
        threshold: 0.25,
        ..CHScoreConfig::default()
    };
    let series = MissingSeries::from_fractions(vec![0.0, 0.25, 0.75]).unwrap();
    let c = coherence_components(&series, &cfg);
    assert_eq!(c.r_cut, 1.0 / 3.0);
    assert_eq!(c.c_missed, 0.5);
}

#[test]
fn flicker_spike_lowers_score() {
    let mut rng = StdRng::seed_from_u64(7);
    let cfg = CHScoreConfig::<f64>::default();
    let mut cases = 0;
    while cases < 100 {
        let vis = random_visibility(&mut rng, 6, 9);
        let Some(spiked) = inject_spike(&vis, cfg.threshold) else {
            continue;
        };
        let before = score(&vis, &cfg).score;
        let after = score(&spiked, &cfg).score;
        assert!(after < before, "{vis:?}: {before} -> {after}");
        cases += 1;
    }
}

#[test]
fn single_precision_tracks_double() {
    let mut rng = StdRng::seed_from_u64(99);
    for _ in 0..200 {
        let vis = random_visibility(&mut rng, 6, 9);
        let matrix = VisibilityMatrix::new(vis, None).unwrap();
        let d = chscore_from_visibility::<f64>(&matrix, &CHScoreConfig::default()).unwrap();
        let s = chscore_from_visibility::<f32>(&matrix, &CHScoreConfig::default()).unwrap();
        assert!(relative_error(d.score, f64::from(s.score)) < 1e-4);
    }
}

proptest! {
    #[test]
    fn clamped_components_are_non_negative(
        rows in (1usize..12, 1usize..30).prop_flat_map(|(f, n)| prop::collection::vec(prop::collection::vec(any::<bool>(), n), f))
    ) {
        let report = score(&rows, &CHScoreConfig::default());
        for c in report.components.as_array() {
            prop_assert!(c >= 0.0);
        }
        prop_assert!(report.score > 0.0 && report.score <= 1e6);
    }

    #[test]
    fn payload_json_roundtrips(
        rows in (1usize..6, 1usize..10).prop_flat_map(|(f, n)| prop::collection::vec(prop::collection::vec(any::<bool>(), n), f))
    ) {
        let matrix = VisibilityMatrix::new(rows, None).unwrap();
        let back = VisibilityMatrix::from_json(matrix.to_json().as_bytes()).unwrap();
        prop_assert_eq!(back, matrix);
    }
}
