use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StagePerformance {
    pub name: String,
    pub p: f64,
}

/// Local performance of each pipeline stage and their product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceReport {
    pub stages: Vec<StagePerformance>,
    pub n: usize,
    pub p_global: f64,
}

/// P = product of the stage performances P_i, each in [0, 1].
pub fn global_performance<S: AsRef<str>>(stages: &[(S, f64)]) -> Result<PerformanceReport> {
    for (name, p) in stages {
        if !(0.0..=1.0).contains(p) {
            return Err(Error::OutOfRangePerformance {
                stage: name.as_ref().to_string(),
                value: *p,
            });
        }
    }
    Ok(PerformanceReport {
        stages: stages
            .iter()
            .map(|(name, p)| StagePerformance {
                name: name.as_ref().to_string(),
                p: *p,
            })
            .collect(),
        n: stages.len(),
        p_global: stages.iter().map(|(_, p)| p).product(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(global_performance(&[("a", 1.0), ("b", 1.0)]).unwrap().p_global, 1.0);
        let r = global_performance(&[("a", 0.9), ("b", 0.8)]).unwrap();
        assert!((r.p_global - 0.72).abs() < 1e-15);
        assert_eq!(r.n, 2);
        assert_eq!(global_performance(&[("a", 0.3), ("b", 0.0)]).unwrap().p_global, 0.0);
        assert_eq!(global_performance::<&str>(&[]).unwrap().p_global, 1.0);
    }

    #[test]
    fn out_of_range() {
        for bad in [1.5, -0.1, f64::NAN] {
            assert!(matches!(
                global_performance(&[("map", bad)]),
                Err(Error::OutOfRangePerformance { .. })
            ));
        }
    }

    proptest! {
        #[test]
        fn bounded_by_min(ps in prop::collection::vec(0.0f64..=1.0, 1..8)) {
            let stages: Vec<(String, f64)> = ps.iter().enumerate().map(|(i, p)| (i.to_string(), *p)).collect();
            let r = global_performance(&stages).unwrap();
            let min = ps.iter().cloned().fold(1.0, f64::min);
            prop_assert!(r.p_global <= min + 1e-15);
            let mut rev = stages.clone();
            rev.reverse();
            prop_assert!((global_performance(&rev).unwrap().p_global - r.p_global).abs() < 1e-12);
        }
    }
}
