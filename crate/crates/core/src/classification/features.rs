use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ingestion::MetadataRecord;
use crate::text::{l2_normalize, smoothed_idf};

/// Dense term index plus per-term IDF, fitted on a training corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub index: BTreeMap<String, usize>,
    pub idf: Vec<f64>,
}

impl Vocabulary {
    pub fn fit<'a>(records: impl IntoIterator<Item = &'a MetadataRecord>) -> Self {
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        let mut n = 0;
        for r in records {
            n += 1;
            for term in r.text_terms.keys() {
                *df.entry(term.as_str()).or_default() += 1;
            }
        }
        let mut index = BTreeMap::new();
        let mut idf = Vec::with_capacity(df.len());
        for (i, (term, count)) in df.into_iter().enumerate() {
            index.insert(term.to_string(), i);
            idf.push(smoothed_idf(n, count));
        }
        Vocabulary { index, idf }
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }
}

/// `[L2-normalized TF-IDF over the vocabulary | mean keyframe histogram]`.
///
/// Out-of-vocabulary terms are dropped; a record without in-vocabulary
/// terms gets an all-zero text block.
pub fn build_features(record: &MetadataRecord, vocab: &Vocabulary, visual_dim: usize) -> Vec<f64> {
    let mut text = vec![0.0; vocab.len()];
    for (term, &count) in &record.text_terms {
        if let Some(&i) = vocab.index.get(term) {
            text[i] = count as f64 * vocab.idf[i];
        }
    }
    l2_normalize(&mut text);
    text.extend(record.mean_keyframe_hist(visual_dim));
    text
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::ingestion::{MediaInfo, Shot, ShotRecord};

    pub(crate) fn record(id: &str, terms: &[(&str, u32)], hist: Vec<f64>) -> MetadataRecord {
        MetadataRecord {
            doc_id: id.into(),
            uri: String::new(),
            title: String::new(),
            media_info: MediaInfo {
                duration_s: 1.0,
                format: None,
                frame_count: 1,
            },
            shots: vec![ShotRecord {
                shot: Shot {
                    start_idx: 0,
                    end_idx: 0,
                    keyframe_idx: 0,
                },
                start_t: 0.0,
                end_t: 0.0,
                keyframe_hist: hist,
            }],
            text_terms: terms.iter().map(|(t, c)| (t.to_string(), *c)).collect(),
            meta: BTreeMap::new(),
            concepts: vec![],
        }
    }

    fn vocab() -> Vocabulary {
        Vocabulary::fit(&[
            record("a", &[("goal", 1), ("match", 1)], vec![0.25; 4]),
            record("b", &[("vote", 1), ("match", 1)], vec![0.25; 4]),
        ])
    }

    #[test]
    fn vocabulary_is_dense_and_sorted() {
        let v = vocab();
        assert_eq!(
            v.index.iter().map(|(k, &i)| (k.as_str(), i)).collect::<Vec<_>>(),
            vec![("goal", 0), ("match", 1), ("vote", 2)]
        );
        assert!(v.idf[1] < v.idf[0], "shared term has lower idf");
    }

    #[test]
    fn empty_text_gives_zero_block_and_uniform_visual() {
        let r = record("x", &[], vec![0.25; 4]);
        let f = build_features(&r, &vocab(), 4);
        assert_eq!(&f[..3], &[0.0, 0.0, 0.0]);
        assert_eq!(&f[3..], &[0.25; 4]);
    }

    #[test]
    fn single_term_is_unit_one_hot() {
        let r = record("x", &[("vote", 7), ("unseen", 3)], vec![0.25; 4]);
        let f = build_features(&r, &vocab(), 4);
        assert_eq!(&f[..3], &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn same_terms_different_hists() {
        let a = build_features(&record("a", &[("goal", 2)], vec![1.0, 0.0, 0.0, 0.0]), &vocab(), 4);
        let b = build_features(&record("b", &[("goal", 2)], vec![0.0, 0.0, 0.5, 0.5]), &vocab(), 4);
        assert_eq!(a[..3], b[..3]);
        assert_ne!(a[3..], b[3..]);
    }
}
