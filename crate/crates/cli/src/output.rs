//! CSV and manifest files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use gauge_drift::engine::{fit_growth, FitError};
use gauge_drift::EnsembleStats;
use toml::{Table, Value};

use crate::config::RunConfig;

pub const STEPS_FILE: &str = "steps.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const MANIFEST_FILE: &str = "manifest.toml";

pub const STEPS_HEADER: [&str; 6] = [
    "step",
    "mean_survival",
    "se_survival",
    "mean_unphys_weight",
    "se_unphys_weight",
    "zeno_fail_rate",
];

/// 17 significant digits, round-trip exact.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn steps_csv(stats: &EnsembleStats) -> String {
    let mut out = STEPS_HEADER.join(",");
    out.push('\n');
    for s in 0..stats.steps() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            s + 1,
            fmt_f64(stats.mean_survival[s]),
            fmt_f64(stats.se_survival[s]),
            fmt_f64(stats.mean_unphysical[s]),
            fmt_f64(stats.se_unphysical[s]),
            fmt_f64(stats.zeno_fail_rate[s]),
        );
    }
    out
}

pub fn summary_csv(mode: &str, stats: &EnsembleStats) -> String {
    let last = stats.steps() - 1;
    let infidelity: Vec<f64> = stats.mean_survival.iter().map(|s| 1.0 - s).collect();
    let mut out = String::from(
        "mode,quantity,status,slope,intercept,first_step,last_step,points,residual,\
         final_mean_survival,final_se_survival,final_zeno_fail_rate\n",
    );
    for (name, series) in [
        ("mean_unphys_weight", &stats.mean_unphysical),
        ("infidelity", &infidelity),
    ] {
        let fit_cols = match fit_growth(series) {
            Ok(f) => format!(
                "ok,{},{},{},{},{},{}",
                fmt_f64(f.slope),
                fmt_f64(f.intercept),
                f.first_step,
                f.last_step,
                f.points,
                fmt_f64(f.residual)
            ),
            Err(FitError::TooFewPoints { found, .. }) => format!("too-few-points,,,,,{found},"),
        };
        let _ = writeln!(
            out,
            "{mode},{name},{fit_cols},{},{},{}",
            fmt_f64(stats.mean_survival[last]),
            fmt_f64(stats.se_survival[last]),
            fmt_f64(stats.zeno_fail_rate[last]),
        );
    }
    out
}

pub struct Manifest<'a> {
    pub config: &'a RunConfig,
    pub duration_seconds: f64,
    pub threads: usize,
    pub outputs: Vec<PathBuf>,
}

impl Manifest<'_> {
    pub fn to_toml(&self) -> String {
        let mut t = Table::new();
        t.insert("tool".into(), Value::String("gauge-drift".into()));
        t.insert(
            "version".into(),
            Value::String(env!("CARGO_PKG_VERSION").into()),
        );
        t.insert("seed".into(), Value::Integer(self.config.seed as i64));
        t.insert(
            "duration_seconds".into(),
            Value::Float(self.duration_seconds),
        );
        t.insert("threads".into(), Value::Integer(self.threads as i64));
        t.insert(
            "outputs".into(),
            Value::Array(
                self.outputs
                    .iter()
                    .map(|p| Value::String(p.display().to_string()))
                    .collect(),
            ),
        );
        let config = Table::try_from(self.config).expect("config serializes");
        t.insert("config".into(), Value::Table(config));
        toml::to_string(&t).expect("manifest serializes")
    }
}

/// One parsed row of `steps.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRow {
    pub step: usize,
    pub mean_survival: f64,
    pub se_survival: f64,
    pub mean_unphys_weight: f64,
    pub se_unphys_weight: f64,
    pub zeno_fail_rate: f64,
}

pub fn read_steps(path: &Path) -> Result<Vec<StepRow>, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| format!("{}: empty file", path.display()))?;
    if header.split(',').collect::<Vec<_>>() != STEPS_HEADER {
        return Err(format!("{}: unexpected header `{header}`", path.display()));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = |what: &str| format!("{}:{}: {what}", path.display(), i + 2);
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != STEPS_HEADER.len() {
                return Err(bad("wrong number of columns"));
            }
            let num = |k: usize| {
                cols[k]
                    .parse::<f64>()
                    .map_err(|_| bad(&format!("bad number `{}`", cols[k])))
            };
            Ok(StepRow {
                step: cols[0].parse().map_err(|_| bad("bad step"))?,
                mean_survival: num(1)?,
                se_survival: num(2)?,
                mean_unphys_weight: num(3)?,
                se_unphys_weight: num(4)?,
                zeno_fail_rate: num(5)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_roundtrip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 0.9999999999999999, 0.0, 123456.789] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().replace(['.', '-'], "");
            assert_eq!(mantissa.len(), 17, "{s}");
        }
    }
}
