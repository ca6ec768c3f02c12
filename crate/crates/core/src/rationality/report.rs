//! Pass rates by treatment, exact and power-corrected.

use std::fmt::Write as _;

use super::power::{HmiMode, PowerCalibration};
use crate::data::Treatment;
use crate::error::{Error, Result};
use crate::estimate::two_proportion_z_test;

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectOutcome {
    pub session_id: u32,
    pub subject_id: u32,
    pub treatment: Treatment,
    pub hmi: f64,
    /// `None` when the learning index was not computed.
    pub hmi_learning: Option<f64>,
}

impl SubjectOutcome {
    pub fn index(&self, mode: HmiMode) -> Option<f64> {
        match mode {
            HmiMode::Standard => Some(self.hmi),
            HmiMode::Learning => self.hmi_learning,
        }
    }

    /// Zero drops is the same event under either index.
    pub fn passes_exact(&self) -> bool {
        self.hmi == 1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PassRateRow {
    pub treatment: Treatment,
    pub subjects: usize,
    pub exact: f64,
    /// Pass rate at each significance level of the table, in order.
    pub powered: Vec<f64>,
    /// HMI threshold used at each level.
    pub thresholds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PassRateTable {
    pub mode: HmiMode,
    pub levels: Vec<f64>,
    pub rows: Vec<PassRateRow>,
    /// Two-proportion test of FP against NCSP for the exact column and then
    /// each level; present when both treatments were tested.
    pub p_values: Option<Vec<f64>>,
}

/// Tabulates pass rates. Every treatment present needs a calibration of the
/// same mode when `levels` is non-empty.
pub fn pass_rate_report(
    subjects: &[SubjectOutcome],
    mode: HmiMode,
    calibrations: &[(Treatment, PowerCalibration)],
    levels: &[f64],
) -> Result<PassRateTable> {
    if subjects.is_empty() {
        return Err(Error::UndefinedStatistic("no subjects to report".into()));
    }
    let mut counts: Vec<(Treatment, usize, usize, Vec<usize>, Vec<f64>)> = Vec::new();
    for t in Treatment::ALL {
        let group: Vec<&SubjectOutcome> = subjects.iter().filter(|s| s.treatment == t).collect();
        if group.is_empty() {
            continue;
        }
        let exact = group.iter().filter(|s| s.passes_exact()).count();
        let mut passing = Vec::new();
        let mut thresholds = Vec::new();
        if !levels.is_empty() {
            let cal = calibrations
                .iter()
                .find(|(ct, c)| *ct == t && c.mode == mode)
                .map(|(_, c)| c)
                .ok_or_else(|| Error::Domain(format!("no {mode:?} calibration for {t}")))?;
            let idx: Vec<f64> = group
                .iter()
                .map(|s| {
                    s.index(mode)
                        .ok_or_else(|| Error::Domain("learning index missing for a subject".into()))
                })
                .collect::<Result<_>>()?;
            for &p in levels {
                let th = cal.threshold(p)?;
                passing.push(idx.iter().filter(|&&h| h >= th).count());
                thresholds.push(th);
            }
        }
        counts.push((t, group.len(), exact, passing, thresholds));
    }

    let rows = counts
        .iter()
        .map(|(t, n, exact, passing, thresholds)| PassRateRow {
            treatment: *t,
            subjects: *n,
            exact: *exact as f64 / *n as f64,
            powered: passing.iter().map(|&c| c as f64 / *n as f64).collect(),
            thresholds: thresholds.clone(),
        })
        .collect();

    let find = |t: Treatment| counts.iter().find(|c| c.0 == t);
    let p_values = match (find(Treatment::Fp), find(Treatment::Ncsp)) {
        (Some(f), Some(g)) => {
            let mut ps = vec![two_proportion_z_test(f.2, f.1, g.2, g.1)?];
            for i in 0..levels.len() {
                ps.push(two_proportion_z_test(f.3[i], f.1, g.3[i], g.1)?);
            }
            Some(ps)
        }
        _ => None,
    };
    Ok(PassRateTable {
        mode,
        levels: levels.to_vec(),
        rows,
        p_values,
    })
}

/// `0.10` → `"p10"`, `0.05` → `"p05"`, `0.025` → `"p2.5"`.
pub fn level_label(p: f64) -> String {
    let pct = 100.0 * p;
    if (pct - pct.round()).abs() < 1e-9 {
        format!("p{:02}", pct.round() as u64)
    } else {
        format!("p{}", crate::io::fmt_sig12(pct))
    }
}

impl PassRateTable {
    /// Plain-text table: one row per treatment, then the test of the difference.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let title = match self.mode {
            HmiMode::Standard => "Consistency with expected utility maximization",
            HmiMode::Learning => {
                "Consistency with expected utility maximization, learning-weighted"
            }
        };
        let _ = writeln!(out, "{title}");
        let _ = write!(out, "{:<10} {:>5} {:>10}", "", "N", "exact");
        for p in &self.levels {
            let _ = write!(out, " {:>8}", format!("p={p}"));
        }
        out.push('\n');
        for r in &self.rows {
            let _ = write!(
                out,
                "{:<10} {:>5} {:>9.1}%",
                r.treatment.as_str(),
                r.subjects,
                100.0 * r.exact
            );
            for x in &r.powered {
                let _ = write!(out, " {:>7.1}%", 100.0 * x);
            }
            out.push('\n');
        }
        if let Some(ps) = &self.p_values {
            let _ = write!(out, "{:<10} {:>5} {:>10.4}", "p-value", "", ps[0]);
            for p in &ps[1..] {
                let _ = write!(out, " {:>8.4}", p);
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome(t: Treatment, h: f64) -> SubjectOutcome {
        SubjectOutcome {
            session_id: 1,
            subject_id: 1,
            treatment: t,
            hmi: h,
            hmi_learning: Some(h),
        }
    }

    fn cal(mode: HmiMode) -> PowerCalibration {
        PowerCalibration::from_sample(mode, (0..100).map(|i| i as f64 / 100.0).collect()).unwrap()
    }

    #[test]
    fn all_consistent() {
        let subs: Vec<_> = (0..5).map(|_| outcome(Treatment::Fp, 1.0)).collect();
        let cals = [(Treatment::Fp, cal(HmiMode::Standard))];
        let t = pass_rate_report(&subs, HmiMode::Standard, &cals, &[0.10, 0.05]).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].exact, 1.0);
        assert_eq!(t.rows[0].powered, vec![1.0, 1.0]);
        assert_eq!(t.rows[0].thresholds, vec![0.9, 0.95]);
        assert!(t.p_values.is_none());
        assert!(t.render().contains("FP"));
    }

    #[test]
    fn treatment_difference() {
        let mut subs: Vec<_> = (0..30).map(|_| outcome(Treatment::Fp, 1.0)).collect();
        subs.extend((0..30).map(|_| outcome(Treatment::Ncsp, 0.5)));
        let cals = [
            (Treatment::Fp, cal(HmiMode::Standard)),
            (Treatment::Ncsp, cal(HmiMode::Standard)),
        ];
        let t = pass_rate_report(&subs, HmiMode::Standard, &cals, &[0.10]).unwrap();
        let p = t.p_values.unwrap();
        assert_eq!(p.len(), 2);
        assert!(p[0] < 0.01);
        assert!(pass_rate_report(&[], HmiMode::Standard, &cals, &[0.1]).is_err());
    }

    #[test]
    fn missing_calibration() {
        let subs = [outcome(Treatment::Ncsp, 1.0)];
        let cals = [(Treatment::Fp, cal(HmiMode::Standard))];
        assert!(pass_rate_report(&subs, HmiMode::Standard, &cals, &[0.1]).is_err());
        let t = pass_rate_report(&subs, HmiMode::Standard, &cals, &[]).unwrap();
        assert!(t.rows[0].powered.is_empty());
        let wrong_mode = [(Treatment::Ncsp, cal(HmiMode::Learning))];
        assert!(pass_rate_report(&subs, HmiMode::Standard, &wrong_mode, &[0.1]).is_err());
    }

    #[test]
    fn labels() {
        assert_eq!(level_label(0.10), "p10");
        assert_eq!(level_label(0.05), "p05");
        assert_eq!(level_label(0.01), "p01");
        assert_eq!(level_label(0.025), "p2.5");
    }
}
