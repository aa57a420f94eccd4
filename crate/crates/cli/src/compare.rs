//! Side-by-side comparison of two runs.

use std::fmt::Write as _;

use crate::output::{fmt_f64, StepRow};

pub struct Comparison {
    pub csv: String,
    pub verdict: String,
}

/// Merges two step tables; `a` and `b` label the runs in the verdict.
pub fn compare(
    a: &str,
    rows_a: &[StepRow],
    b: &str,
    rows_b: &[StepRow],
) -> Result<Comparison, String> {
    if rows_a.len() != rows_b.len() {
        return Err(format!(
            "step counts differ: {a} has {}, {b} has {}",
            rows_a.len(),
            rows_b.len()
        ));
    }
    if rows_a.is_empty() {
        return Err("no steps to compare".into());
    }
    let mut csv = String::from(
        "step,survival_a,survival_b,survival_diff,se_survival_a,se_survival_b,\
         unphys_weight_a,unphys_weight_b,unphys_weight_diff\n",
    );
    for (ra, rb) in rows_a.iter().zip(rows_b) {
        if ra.step != rb.step {
            return Err(format!("step mismatch: {} vs {}", ra.step, rb.step));
        }
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            ra.step,
            fmt_f64(ra.mean_survival),
            fmt_f64(rb.mean_survival),
            fmt_f64(ra.mean_survival - rb.mean_survival),
            fmt_f64(ra.se_survival),
            fmt_f64(rb.se_survival),
            fmt_f64(ra.mean_unphys_weight),
            fmt_f64(rb.mean_unphys_weight),
            fmt_f64(ra.mean_unphys_weight - rb.mean_unphys_weight),
        );
    }
    let (la, lb) = (rows_a.last().unwrap(), rows_b.last().unwrap());
    let diff = la.mean_survival - lb.mean_survival;
    let se = la.se_survival.hypot(lb.se_survival);
    let (winner, hi, lo) = if diff > 0.0 {
        (Some(a), la, lb)
    } else if diff < 0.0 {
        (Some(b), lb, la)
    } else {
        (None, la, lb)
    };
    let step = la.step;
    let verdict = match winner {
        Some(w) => {
            let z = if se > 0.0 {
                format!("{:.2} combined standard errors", diff.abs() / se)
            } else {
                "no standard error available".to_string()
            };
            format!(
                "{w} retained higher survival at step {step}: {:.6} vs {:.6} ({z})",
                hi.mean_survival, lo.mean_survival
            )
        }
        None => format!(
            "tie at step {step}: both runs have survival {:.6}",
            la.mean_survival
        ),
    };
    Ok(Comparison { csv, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(surv: &[f64]) -> Vec<StepRow> {
        surv.iter()
            .enumerate()
            .map(|(i, &s)| StepRow {
                step: i + 1,
                mean_survival: s,
                se_survival: 0.01,
                mean_unphys_weight: 1.0 - s,
                se_unphys_weight: 0.01,
                zeno_fail_rate: 0.0,
            })
            .collect()
    }

    #[test]
    fn identical_runs_have_zero_difference() {
        let r = rows(&[0.9, 0.8, 0.7]);
        let c = compare("x", &r, "y", &r).unwrap();
        for line in c.csv.lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            assert_eq!(cols[3].parse::<f64>().unwrap(), 0.0);
            assert_eq!(cols[8].parse::<f64>().unwrap(), 0.0);
        }
        assert!(c.verdict.starts_with("tie"));
    }

    #[test]
    fn verdict_is_symmetric() {
        let (ra, rb) = (rows(&[0.9, 0.8]), rows(&[0.9, 0.5]));
        let ab = compare("haar", &ra, "none", &rb).unwrap().verdict;
        let ba = compare("none", &rb, "haar", &ra).unwrap().verdict;
        assert_eq!(ab, ba);
        assert!(ab.starts_with("haar retained higher survival at step 2"));
    }

    #[test]
    fn mismatched_steps() {
        assert!(compare("a", &rows(&[0.9]), "b", &rows(&[0.9, 0.8])).is_err());
    }
}
