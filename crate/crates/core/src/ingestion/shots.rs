use serde::{Deserialize, Serialize};

use super::descriptor::FrameFeature;
use crate::error::{Error, Result};

/// Default boundary threshold on the L1 distance between consecutive frames.
pub const DEFAULT_SHOT_THRESHOLD: f64 = 0.4;

/// A run of consecutive frames, inclusive on both ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shot {
    pub start_idx: usize,
    pub end_idx: usize,
    pub keyframe_idx: usize,
}

impl Shot {
    fn spanning(start_idx: usize, end_idx: usize) -> Self {
        Shot {
            start_idx,
            end_idx,
            keyframe_idx: (start_idx + end_idx) / 2,
        }
    }

    pub fn len(&self) -> usize {
        self.end_idx - self.start_idx + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Histogram-difference shot segmentation: a boundary goes before frame `i`
/// whenever the L1 distance to frame `i - 1` exceeds `theta`.
pub fn detect_shots(frames: &[FrameFeature], theta: f64) -> Result<Vec<Shot>> {
    if frames.is_empty() {
        return Err(Error::EmptyFrames);
    }
    if !(theta > 0.0 && theta <= 2.0) {
        return Err(Error::InvalidArgument(format!("shot threshold {theta} outside (0, 2]")));
    }
    let mut shots = Vec::new();
    let mut start = 0;
    for i in 1..frames.len() {
        if l1_distance(&frames[i - 1].hist, &frames[i].hist) > theta {
            shots.push(Shot::spanning(start, i - 1));
            start = i;
        }
    }
    shots.push(Shot::spanning(start, frames.len() - 1));
    Ok(shots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn frame(t: f64, hist: Vec<f64>) -> FrameFeature {
        FrameFeature { t, hist }
    }

    /// 0.4 background spread over 4 bins plus 0.6 on one peak bin.
    fn peaked(bin: usize) -> Vec<f64> {
        let mut h = vec![0.1; 4];
        h[bin] += 0.6;
        h
    }

    #[test]
    fn constant_frames_form_one_shot() {
        let frames: Vec<_> = (0..10).map(|i| frame(i as f64, vec![0.25; 4])).collect();
        let shots = detect_shots(&frames, 0.4).unwrap();
        assert_eq!(
            shots,
            vec![Shot {
                start_idx: 0,
                end_idx: 9,
                keyframe_idx: 4
            }]
        );
    }

    #[test]
    fn single_jump_splits_in_two() {
        // |0.7-0.1| + |0.1-0.7| = 1.2 between frames 4 and 5.
        assert!((l1_distance(&peaked(0), &peaked(1)) - 1.2).abs() < 1e-12);
        let frames: Vec<_> = (0..10)
            .map(|i| frame(i as f64, peaked(if i < 5 { 0 } else { 1 })))
            .collect();
        let shots = detect_shots(&frames, 0.4).unwrap();
        assert_eq!(shots.len(), 2);
        assert_eq!((shots[0].start_idx, shots[0].end_idx), (0, 4));
        assert_eq!((shots[1].start_idx, shots[1].end_idx), (5, 9));
        assert_eq!(shots[1].keyframe_idx, 7);
    }

    #[test]
    fn single_frame_is_one_shot() {
        let shots = detect_shots(&[frame(0.0, vec![1.0])], 0.4).unwrap();
        assert_eq!(
            shots,
            vec![Shot {
                start_idx: 0,
                end_idx: 0,
                keyframe_idx: 0
            }]
        );
    }

    #[test]
    fn empty_and_bad_threshold() {
        assert!(matches!(detect_shots(&[], 0.4), Err(Error::EmptyFrames)));
        let f = [frame(0.0, vec![1.0])];
        assert!(detect_shots(&f, 0.0).is_err());
        assert!(detect_shots(&f, 2.5).is_err());
    }

    fn normalized(raw: Vec<f64>) -> Vec<f64> {
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / s).collect()
    }

    fn arb_frames() -> impl Strategy<Value = Vec<FrameFeature>> {
        prop::collection::vec(prop::collection::vec(0.01f64..1.0, 6), 1..40).prop_map(|hs| {
            hs.into_iter()
                .enumerate()
                .map(|(i, h)| frame(i as f64, normalized(h)))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn shots_partition_frames(frames in arb_frames(), theta in 0.05f64..2.0) {
            let shots = detect_shots(&frames, theta).unwrap();
            let mut next = 0;
            for s in &shots {
                prop_assert_eq!(s.start_idx, next);
                prop_assert!(s.start_idx <= s.keyframe_idx && s.keyframe_idx <= s.end_idx);
                next = s.end_idx + 1;
            }
            prop_assert_eq!(next, frames.len());
        }

        #[test]
        fn maximal_threshold_never_splits(frames in arb_frames()) {
            prop_assert_eq!(detect_shots(&frames, 2.0).unwrap().len(), 1);
        }
    }
}
