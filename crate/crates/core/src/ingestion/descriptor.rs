use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default colour-histogram dimension.
pub const HIST_DIM: usize = 48;

const HIST_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameFeature {
    pub t: f64,
    pub hist: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranscriptSegment {
    pub t0: f64,
    pub t1: f64,
    pub text: String,
}

/// Stand-in for a raw video: precomputed per-frame histograms plus the
/// speech transcript, captions and tags an extractor would otherwise
/// recover through ASR/OCR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VideoDescriptor {
    pub id: String,
    pub uri: String,
    pub title: String,
    pub duration_s: f64,
    pub frames: Vec<FrameFeature>,
    #[serde(default)]
    pub transcript: Vec<TranscriptSegment>,
    #[serde(default)]
    pub captions: Vec<String>,
    #[serde(default)]
    pub tags: Vec<String>,
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
}

impl VideoDescriptor {
    pub fn from_json(text: &str) -> Result<Self> {
        let desc: VideoDescriptor = serde_json::from_str(text)
            .map_err(|e| Error::InvalidDescriptor(format!("malformed descriptor JSON: {e}")))?;
        desc.validate()?;
        Ok(desc)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("descriptor serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::InvalidDescriptor("empty id".into()));
        }
        if self.frames.is_empty() {
            return Err(Error::InvalidDescriptor(format!("{}: no frames", self.id)));
        }
        let dim = self.frames[0].hist.len();
        if dim == 0 {
            return Err(Error::InvalidDescriptor(format!("{}: empty histogram", self.id)));
        }
        let mut prev_t = f64::NEG_INFINITY;
        for (i, frame) in self.frames.iter().enumerate() {
            if !frame.t.is_finite() || frame.t < prev_t {
                return Err(Error::InvalidDescriptor(format!(
                    "{}: frame {i} out of time order",
                    self.id
                )));
            }
            prev_t = frame.t;
            if frame.hist.len() != dim {
                return Err(Error::InvalidDescriptor(format!(
                    "{}: frame {i} has {} bins, expected {dim}",
                    self.id,
                    frame.hist.len()
                )));
            }
            if frame.hist.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidDescriptor(format!(
                    "{}: frame {i} has a negative or non-finite bin",
                    self.id
                )));
            }
            let sum: f64 = frame.hist.iter().sum();
            if (sum - 1.0).abs() > HIST_SUM_TOLERANCE {
                return Err(Error::InvalidDescriptor(format!(
                    "{}: frame {i} histogram sums to {sum}",
                    self.id
                )));
            }
        }
        if !(self.duration_s >= prev_t) {
            return Err(Error::InvalidDescriptor(format!(
                "{}: duration {} precedes last frame at {prev_t}",
                self.id, self.duration_s
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn uniform(d: usize) -> Vec<f64> {
        vec![1.0 / d as f64; d]
    }

    pub(crate) fn descriptor(id: &str, frames: usize) -> VideoDescriptor {
        VideoDescriptor {
            id: id.into(),
            uri: format!("file:///{id}.json"),
            title: "World Cup Final".into(),
            duration_s: frames as f64,
            frames: (0..frames)
                .map(|i| FrameFeature {
                    t: i as f64,
                    hist: uniform(HIST_DIM),
                })
                .collect(),
            transcript: vec![],
            captions: vec![],
            tags: vec![],
            meta: BTreeMap::new(),
        }
    }

    #[test]
    fn valid_descriptor_passes() {
        descriptor("v1", 10).validate().unwrap();
    }

    #[test]
    fn json_field_names_are_snake_case() {
        let d = descriptor("v1", 1);
        let v: serde_json::Value = serde_json::from_str(&d.to_json()).unwrap();
        for key in [
            "id",
            "uri",
            "title",
            "duration_s",
            "frames",
            "transcript",
            "captions",
            "tags",
            "meta",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert!(v["frames"][0].get("t").is_some());
        assert!(v["frames"][0].get("hist").is_some());
        assert_eq!(VideoDescriptor::from_json(&d.to_json()).unwrap(), d);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{"id":"x","uri":"u","title":"t","duration_s":1,"frames":[{"t":0,"hist":[1.0]}],"extra":1}"#;
        assert_eq!(
            VideoDescriptor::from_json(text).unwrap_err().code(),
            "InvalidDescriptor"
        );
    }

    #[test]
    fn rejects_non_normalized_histogram() {
        let mut d = descriptor("v1", 3);
        d.frames[1].hist = vec![0.8 / HIST_DIM as f64; HIST_DIM];
        assert!(matches!(d.validate(), Err(Error::InvalidDescriptor(_))));
    }

    #[test]
    fn rejects_unsorted_frames_and_empty_id() {
        let mut d = descriptor("v1", 3);
        d.frames.swap(0, 2);
        assert!(d.validate().is_err());
        let mut d = descriptor("v1", 3);
        d.id.clear();
        assert!(d.validate().is_err());
    }

    #[test]
    fn rejects_duration_before_last_frame() {
        let mut d = descriptor("v1", 3);
        d.duration_s = 1.0;
        assert!(d.validate().is_err());
    }
}
