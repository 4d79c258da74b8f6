use std::sync::Mutex;

use chronobench::backend::{Captioner, FrameCaptionQuery, Summarizer, SummaryQuery};
use chronobench::curation::{
    caption_clip, filter_metamorphic, merge_similar_clips, split_sequence, Clip, ClipBoundary, ClipFeature,
    CurationConfig, CurationError, FramePosition,
};
use chronobench::frames::{Frame, FrameSequence};
use chronobench::protocol::ProtocolError;
use chronobench::RetrievalProfile;

fn solid(rgb: [u8; 3]) -> Frame {
    let (h, w) = (8, 8);
    let data = rgb.iter().flat_map(|&v| std::iter::repeat_n(v, h * w)).collect();
    Frame::new(h, w, 3, data).unwrap()
}

fn two_scenes() -> FrameSequence {
    let frames = (0..40)
        .map(|i| {
            if i < 20 {
                solid([200, 40, 10])
            } else {
                solid([10, 60, 220])
            }
        })
        .collect();
    FrameSequence::new(frames).unwrap()
}

fn identical_features(b: &ClipBoundary) -> Vec<ClipFeature<f64>> {
    (0..b.clips().len())
        .flat_map(|i| {
            [FramePosition::First, FramePosition::Last].map(|frame_position| ClipFeature {
                clip_index: i,
                frame_position,
                boundary_feature: vec![0.6, 0.8],
            })
        })
        .collect()
}

#[test]
fn two_scene_sequence_splits_and_rejoins() {
    let cfg = CurationConfig::default();
    let seq = two_scenes();
    let split = split_sequence(&seq, cfg.tau_per_sample).unwrap();
    assert_eq!(split.clips(), [Clip { start: 0, end: 20 }, Clip { start: 20, end: 40 }]);

    let merged = merge_similar_clips(&split, &identical_features(&split), cfg.eta).unwrap();
    assert_eq!(merged.clips(), [Clip { start: 0, end: 40 }]);

    // Re-running either stage changes nothing.
    assert_eq!(split_sequence(&seq, cfg.tau_per_sample).unwrap(), split);
    let again = merge_similar_clips(&merged, &identical_features(&merged), cfg.eta).unwrap();
    assert_eq!(again, merged);
}

#[test]
fn distant_features_keep_clips_apart() {
    let split = split_sequence(&two_scenes(), 30.0).unwrap();
    let mut feats = identical_features(&split);
    for f in &mut feats {
        if f.clip_index == 1 {
            f.boundary_feature = vec![0.8, -0.6];
        }
    }
    let merged = merge_similar_clips(&split, &feats, 0.5).unwrap();
    assert_eq!(merged.clips().len(), 2);

    feats.retain(|f| !(f.clip_index == 1 && f.frame_position == FramePosition::First));
    assert!(matches!(
        merge_similar_clips(&split, &feats, 0.5),
        Err(CurationError::MissingFeature { clip: 1, .. })
    ));
}

#[test]
fn gradual_change_stays_one_clip() {
    let frames = (0..30u8).map(|i| solid([i * 3, 100, 100])).collect();
    let seq = FrameSequence::new(frames).unwrap();
    assert_eq!(split_sequence(&seq, 30.0).unwrap().clips().len(), 1);
}

#[test]
fn planar_file_roundtrip_preserves_split() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scenes.frames");
    let seq = two_scenes();
    seq.write_planar(std::fs::File::create(&path).unwrap()).unwrap();
    let back = FrameSequence::open(&path).unwrap();
    assert_eq!(back, seq);
    assert_eq!(FrameSequence::planar_frame_count(&path).unwrap(), 40);
    assert_eq!(split_sequence(&back, 30.0).unwrap().clips().len(), 2);
}

#[test]
fn image_directory_loads_in_name_order() {
    let dir = tempfile::tempdir().unwrap();
    for i in 0..6u32 {
        let v = if i < 3 { 20 } else { 230 };
        let img = image::RgbImage::from_pixel(4, 5, image::Rgb([v, v, v]));
        img.save(dir.path().join(format!("{i:03}.png"))).unwrap();
    }
    let seq = FrameSequence::open(dir.path()).unwrap();
    assert_eq!(seq.len(), 6);
    assert_eq!(seq.shape(), (5, 4, 3));
    let split = split_sequence(&seq, 30.0).unwrap();
    assert_eq!(split.clips(), [Clip { start: 0, end: 3 }, Clip { start: 3, end: 6 }]);
}

#[test]
fn voting_filter_over_batch() {
    let gen_share = |g: f64| RetrievalProfile::new(vec![(1.0 - g) / 5.0; 5], vec![g / 5.0; 5]).unwrap();
    let profiles = [gen_share(0.6), gen_share(0.3), gen_share(0.51)];
    let kept = filter_metamorphic(&["a", "b", "c"], &profiles).unwrap();
    assert_eq!(kept, ["b"]);
    let kept = filter_metamorphic(&["a"], &[gen_share(0.1)]).unwrap();
    assert_eq!(kept, ["a"]);
}

struct Echo {
    positions: Mutex<Vec<usize>>,
    summary: &'static str,
}

impl Captioner for Echo {
    fn describe_frame(&self, q: &FrameCaptionQuery) -> Result<String, ProtocolError> {
        self.positions.lock().unwrap().push(q.position);
        Ok(format!("frame {}", q.position))
    }
}

impl Summarizer for Echo {
    fn summarize(&self, q: &SummaryQuery) -> Result<String, ProtocolError> {
        if self.summary.is_empty() {
            return Ok(String::new());
        }
        Ok(q.prompt.clone())
    }
}

#[test]
fn captioning_samples_and_summarizes() {
    let seq = FrameSequence::new((0..100).map(|i| solid([i as u8, 0, 0])).collect()).unwrap();
    let echo = Echo {
        positions: Mutex::new(Vec::new()),
        summary: "ok",
    };
    let summary = caption_clip(&seq, 8, &echo, &echo).unwrap();
    assert_eq!(*echo.positions.lock().unwrap(), [0, 14, 28, 42, 57, 71, 85, 99]);
    assert!(summary.contains("Frame 0: frame 0") && summary.contains("Frame 99: frame 99"));

    let two = seq.slice(0, 2).unwrap();
    let summary = caption_clip(&two, 2, &echo, &echo).unwrap();
    assert!(summary.contains("Frame 0:") && summary.contains("Frame 1:"));

    let silent = Echo {
        positions: Mutex::new(Vec::new()),
        summary: "",
    };
    assert!(matches!(
        caption_clip(&two, 2, &silent, &silent),
        Err(CurationError::EmptyCaption)
    ));
}
