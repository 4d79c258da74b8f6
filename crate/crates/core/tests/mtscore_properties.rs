use chronobench::mtscore::{parse_rubric_reply, ReplyError, RetrievalSentenceSet, Rubric};
use chronobench::{classify_video, mtscore_coarse, sample_frames_uniform, RetrievalProfile, VideoClass};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

// Independently computed SHA-256 of the canonical texts.
const SENTENCES_SHA256: &str = "03cb145a9db01fd0cd039f4d48d0ad6858ad69341fe3471f3247189d8e2804fa";
const RUBRIC_SHA256: &str = "443c3389cb8fec120b0916d806d8d904c0d2982962dc86d648d1158eb5cff47b";

/// Four units in the last place of 1.0. Scaled inputs are already rounded,
/// so bitwise equality after scaling is not achievable in general.
const ULPS: f64 = 4.0 * f64::EPSILON;

fn random_probs(rng: &mut StdRng) -> Vec<f64> {
    let raw: Vec<f64> = (0..10).map(|_| rng.random_range(0.0..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|p| p / total).collect()
}

fn profile(probs: &[f64]) -> RetrievalProfile<f64> {
    RetrievalProfile::from_sentence_probs(probs).unwrap()
}

fn swapped(probs: &[f64]) -> Vec<f64> {
    probs[5..].iter().chain(&probs[..5]).copied().collect()
}

#[test]
fn canonical_text_checksums() {
    assert_eq!(RetrievalSentenceSet::canonical().checksum(), SENTENCES_SHA256);
    assert_eq!(Rubric::canonical().checksum(), RUBRIC_SHA256);
    assert_eq!(RetrievalSentenceSet::canonical().all().count(), 10);
}

#[test]
fn coarse_score_is_scale_invariant() {
    let mut rng = StdRng::seed_from_u64(1);
    for _ in 0..1000 {
        let probs = random_probs(&mut rng);
        let base = mtscore_coarse(&profile(&probs)).unwrap();
        for c in [0.1, 1.0, 7.3] {
            let scaled: Vec<f64> = probs.iter().map(|p| p * c).collect();
            let s = mtscore_coarse(&profile(&scaled)).unwrap();
            assert!((s - base).abs() <= ULPS, "c={c}: {s} vs {base}");
            if c == 1.0 {
                assert_eq!(s, base);
            }
        }
    }
}

#[test]
fn coarse_score_complement() {
    let mut rng = StdRng::seed_from_u64(2);
    for _ in 0..1000 {
        let probs = random_probs(&mut rng);
        let s = mtscore_coarse(&profile(&probs)).unwrap();
        let t = mtscore_coarse(&profile(&swapped(&probs))).unwrap();
        assert_eq!(s + t, 1.0, "{s} + {t}");
    }
}

#[test]
fn symmetric_profiles_score_one_half() {
    let mut rng = StdRng::seed_from_u64(3);
    for _ in 0..1000 {
        let half: Vec<f64> = (0..5).map(|_| rng.random_range(0.0..1.0)).collect();
        let probs: Vec<f64> = half.iter().chain(&half).copied().collect();
        assert_eq!(mtscore_coarse(&profile(&probs)).unwrap(), 0.5);
    }
    assert_eq!(mtscore_coarse(&profile(&[0.1; 10])).unwrap(), 0.5);
}

#[test]
fn coarse_examples() {
    let p = RetrievalProfile::<f64>::new(vec![0.2, 0.1, 0.05, 0.03, 0.02], vec![0.02; 5]).unwrap();
    assert!((mtscore_coarse(&p).unwrap() - 0.8).abs() < 1e-15);
    assert!(mtscore_coarse(&profile(&[0.0; 10])).is_err());
}

#[test]
fn vote_agrees_with_coarse_score() {
    let mut rng = StdRng::seed_from_u64(4);
    for _ in 0..1000 {
        let p = profile(&random_probs(&mut rng));
        let general = classify_video(&p).unwrap() == VideoClass::General;
        assert_eq!(general, mtscore_coarse(&p).unwrap() < 0.5);
    }
    let boundary = profile(&[0.1; 10]);
    assert_eq!(classify_video(&boundary).unwrap(), VideoClass::Metamorphic);
    let unnormalized = profile(&[0.2; 10]);
    assert!(classify_video(&unnormalized).is_err());
}

#[test]
fn vote_examples() {
    let general = RetrievalProfile::new(vec![0.08; 5], vec![0.12; 5]).unwrap();
    assert_eq!(classify_video(&general).unwrap(), VideoClass::General);
    let meta = RetrievalProfile::new(vec![0.12; 5], vec![0.08; 5]).unwrap();
    assert_eq!(classify_video(&meta).unwrap(), VideoClass::Metamorphic);
}

#[test]
fn sampling_matches_rounded_spacing() {
    for frames in 1..200usize {
        for t in 2..12usize {
            let got = sample_frames_uniform(frames, t).unwrap();
            if frames <= t {
                assert_eq!(got, (0..frames).collect::<Vec<_>>());
                continue;
            }
            let expected: Vec<usize> = (0..t)
                .map(|k| (k as f64 * (frames - 1) as f64 / (t - 1) as f64).round() as usize)
                .collect();
            assert_eq!(got, expected, "frames={frames} t={t}");
            assert!(got.windows(2).all(|w| w[0] < w[1]));
            assert_eq!((got[0], got[t - 1]), (0, frames - 1));
        }
    }
    assert_eq!(sample_frames_uniform(100, 5).unwrap(), [0, 25, 50, 74, 99]);
    assert_eq!(sample_frames_uniform(100, 8).unwrap(), [0, 14, 28, 42, 57, 71, 85, 99]);
    assert!(sample_frames_uniform(0, 8).is_err());
    assert!(sample_frames_uniform(10, 1).is_err());
}

#[test]
fn reply_parsing_rules() {
    assert_eq!(parse_rubric_reply("3"), Ok(3));
    assert_eq!(parse_rubric_reply("Score: 4 — significant change."), Ok(4));
    assert_eq!(parse_rubric_reply("excellent"), Err(ReplyError::NoInteger));
    assert_eq!(parse_rubric_reply("6"), Err(ReplyError::OutOfRange(6)));
    assert_eq!(parse_rubric_reply("0/5"), Err(ReplyError::OutOfRange(0)));
}
