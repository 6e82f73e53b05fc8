use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Device {
    #[default]
    Desktop,
    Mobile,
    Tablet,
    Other,
}

impl FromStr for Device {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "desktop" => Ok(Device::Desktop),
            "mobile" => Ok(Device::Mobile),
            "tablet" => Ok(Device::Tablet),
            "other" => Ok(Device::Other),
            other => Err(Error::InvalidArgument(format!("unknown device `{other}`"))),
        }
    }
}

/// Where, when and on what the user interacts. Recorded, not yet used for
/// ranking.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextTriplet {
    pub location: String,
    pub time: u64,
    pub device: Device,
}

impl ContextTriplet {
    pub fn new(location: &str, time: u64, device: Device) -> Result<Self> {
        let location = if location.is_empty() {
            "??".to_string()
        } else {
            location.to_ascii_uppercase()
        };
        let valid = location == "??" || (location.len() == 2 && location.chars().all(|c| c.is_ascii_alphabetic()));
        if !valid {
            return Err(Error::InvalidArgument(format!(
                "location `{location}` is not a two-letter country code"
            )));
        }
        Ok(ContextTriplet { location, time, device })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub query: String,
    pub step: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvatarProfile {
    pub user_id: String,
    pub language: String,
    pub context: ContextTriplet,
    /// domain -> concept id -> weight; each vector sums to 1 or is all zero.
    pub prefs: BTreeMap<String, BTreeMap<String, f64>>,
    /// community id -> degree in (0, 1].
    pub memberships: BTreeMap<String, f64>,
    pub history: BTreeMap<String, Vec<HistoryEntry>>,
}

impl AvatarProfile {
    pub fn domain_prefs(&self, domain: &str) -> Option<&BTreeMap<String, f64>> {
        self.prefs.get(domain)
    }

    /// Up to `m` concepts with positive weight for `domain`, heaviest first
    /// (ties by id).
    pub fn top_concepts(&self, domain: &str, m: usize) -> Vec<(String, f64)> {
        let mut items: Vec<(String, f64)> = self
            .prefs
            .get(domain)
            .into_iter()
            .flatten()
            .filter(|(_, w)| **w > 0.0)
            .map(|(c, w)| (c.clone(), *w))
            .collect();
        items.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        items.truncate(m);
        items
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackEvent {
    pub user_id: String,
    pub doc_id: String,
    pub rating: i64,
    pub step: u64,
}

impl FeedbackEvent {
    pub fn validate(&self) -> Result<()> {
        if !(0..=5).contains(&self.rating) {
            return Err(Error::InvalidRating(self.rating));
        }
        Ok(())
    }
}

/// Rescales to unit L1 mass; leaves an all-zero vector untouched.
pub(crate) fn l1_normalize(v: &mut BTreeMap<String, f64>) {
    let total: f64 = v.values().sum();
    if total > 0.0 {
        v.values_mut().for_each(|w| *w /= total);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn context_location_rules() {
        assert_eq!(ContextTriplet::new("fr", 0, Device::Mobile).unwrap().location, "FR");
        assert_eq!(ContextTriplet::new("", 0, Device::Other).unwrap().location, "??");
        assert!(ContextTriplet::new("FRA", 0, Device::Desktop).is_err());
        assert!(ContextTriplet::new("F1", 0, Device::Desktop).is_err());
    }

    #[test]
    fn device_parsing() {
        assert_eq!("Tablet".parse::<Device>().unwrap(), Device::Tablet);
        assert!("watch".parse::<Device>().is_err());
    }

    #[test]
    fn normalization_keeps_zero_vectors() {
        let mut v: BTreeMap<String, f64> = [("a".to_string(), 0.0)].into();
        l1_normalize(&mut v);
        assert_eq!(v["a"], 0.0);
        let mut v: BTreeMap<String, f64> = [("a".to_string(), 1.0), ("b".to_string(), 3.0)].into();
        l1_normalize(&mut v);
        assert_eq!((v["a"], v["b"]), (0.25, 0.75));
    }
}
