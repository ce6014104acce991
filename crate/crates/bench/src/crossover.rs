use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::config::FINGERPRINT_KEYS;
use crate::run::BenchRecord;
use crate::{BenchError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CrossoverRow {
    pub vector_index: usize,
    pub fixed_time_s: f64,
    pub adaptive_time_s: f64,
    pub fixed_iters: usize,
    pub adaptive_iters: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossoverReport {
    /// First vector index where the adaptive cumulative time is below the fixed one.
    pub m_min_time: Option<usize>,
    /// Same on cumulative Arnoldi steps, setup included.
    pub m_min_iters: Option<usize>,
    pub rows: Vec<CrossoverRow>,
}

impl CrossoverReport {
    pub fn render(&self) -> String {
        let show = |m: Option<usize>| m.map_or_else(|| format!("none within M = {}", self.rows.len()), |i| i.to_string());
        let mut s = String::new();
        let _ = writeln!(s, "{:>6} {:>14} {:>14} {:>10} {:>10}", "index", "fixed_time_s", "adapt_time_s", "fixed_it", "adapt_it");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:>6} {:>14.6} {:>14.6} {:>10} {:>10}",
                r.vector_index, r.fixed_time_s, r.adaptive_time_s, r.fixed_iters, r.adaptive_iters
            );
        }
        let _ = writeln!(s, "M_min (time): {}", show(self.m_min_time));
        let _ = writeln!(s, "M_min (iterations): {}", show(self.m_min_iters));
        s
    }
}

type Parsed = (Vec<BenchRecord>, BTreeMap<String, String>);

/// Compares cumulative cost curves of a fixed-shift run and an adaptive run.
///
/// Configuration keys recorded in both summaries must agree.
pub fn crossover_report(fixed: &Parsed, adaptive: &Parsed) -> Result<CrossoverReport> {
    for key in FINGERPRINT_KEYS {
        if let (Some(a), Some(b)) = (fixed.1.get(*key), adaptive.1.get(*key)) {
            if a != b {
                return Err(BenchError::Mismatch(format!("{key}: {a} vs {b}")));
            }
        }
    }
    let (f, a) = (&fixed.0, &adaptive.0);
    if f.len() != a.len() {
        return Err(BenchError::Mismatch(format!("{} rows vs {} rows", f.len(), a.len())));
    }

    let mut rows = Vec::new();
    let (mut fi, mut ai) = (0, 0);
    let mut m_time = None;
    let mut m_iters = None;
    for (rf, ra) in f.iter().zip(a) {
        if rf.vector_index != ra.vector_index {
            return Err(BenchError::Mismatch(format!(
                "row index {} vs {}",
                rf.vector_index, ra.vector_index
            )));
        }
        fi += rf.arnoldi_iters;
        ai += ra.arnoldi_iters;
        if rf.vector_index == 0 {
            continue;
        }
        if m_time.is_none() && ra.cumulative_time_s < rf.cumulative_time_s {
            m_time = Some(rf.vector_index);
        }
        if m_iters.is_none() && ai < fi {
            m_iters = Some(rf.vector_index);
        }
        rows.push(CrossoverRow {
            vector_index: rf.vector_index,
            fixed_time_s: rf.cumulative_time_s,
            adaptive_time_s: ra.cumulative_time_s,
            fixed_iters: fi,
            adaptive_iters: ai,
        });
    }
    Ok(CrossoverReport {
        m_min_time: m_time,
        m_min_iters: m_iters,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(setup: (usize, f64), per: (usize, f64), m: usize) -> Vec<BenchRecord> {
        let mut cum = setup.1;
        let mut out = vec![BenchRecord {
            vector_index: 0,
            delta_used: 0.1,
            arnoldi_iters: setup.0,
            lu_count: 1,
            wall_time_s: setup.1,
            residual_norm: 0.0,
            cumulative_time_s: cum,
        }];
        for i in 1..=m {
            cum += per.1;
            out.push(BenchRecord {
                vector_index: i,
                delta_used: 0.1,
                arnoldi_iters: per.0,
                lu_count: 1,
                wall_time_s: per.1,
                residual_norm: 1e-7,
                cumulative_time_s: cum,
            });
        }
        out
    }

    #[test]
    fn cheaper_from_start() {
        let f = (curve((0, 0.0), (10, 1.0), 5), BTreeMap::new());
        let a = (curve((0, 0.0), (5, 0.5), 5), BTreeMap::new());
        let r = crossover_report(&f, &a).unwrap();
        assert_eq!(r.m_min_time, Some(1));
        assert_eq!(r.m_min_iters, Some(1));
    }

    #[test]
    fn identical_curves_never_cross() {
        let f = (curve((0, 0.2), (10, 1.0), 5), BTreeMap::new());
        let r = crossover_report(&f, &f.clone()).unwrap();
        assert_eq!(r.m_min_time, None);
        assert!(r.render().contains("none within M = 5"));
    }

    #[test]
    fn offset_delays_crossover() {
        let f = (curve((0, 0.0), (100, 1.0), 10), BTreeMap::new());
        let a = (curve((350, 3.5), (50, 0.5), 10), BTreeMap::new());
        let r = crossover_report(&f, &a).unwrap();
        assert_eq!(r.m_min_iters, Some(8));
        assert_eq!(r.m_min_time, Some(8));
    }

    #[test]
    fn mismatched_configs_rejected() {
        let mut s1 = BTreeMap::new();
        s1.insert("seed".to_string(), "1".to_string());
        let mut s2 = s1.clone();
        s2.insert("seed".to_string(), "2".to_string());
        let c = curve((0, 0.0), (1, 1.0), 2);
        assert!(matches!(
            crossover_report(&(c.clone(), s1), &(c.clone(), s2)),
            Err(BenchError::Mismatch(_))
        ));
        let short = curve((0, 0.0), (1, 1.0), 1);
        assert!(crossover_report(&(c, BTreeMap::new()), &(short, BTreeMap::new())).is_err());
    }
}
