use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::compare::{Components, Evidence, Hypothesis, TTest};
use super::{CvResult, Protocol};

pub const SCHEMA_VERSION: &str = "skilldecomp.report/1";

/// Display order of known models; anything else follows in input order.
const ROW_ORDER: [&str; 7] = ["LR-P", "LR-C", "LR-P-C", "LR-PC", "LR-P-C-PC", "TrueSkill", "BL-MC"];

/// "`a` beats `b`" under the two-standard-deviation rule, with a paired t-test
/// when both sides come from the same folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseEntry {
    pub a: String,
    pub b: String,
    pub rule: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ttest: Option<TTest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub schema_version: String,
    /// Effective configuration of the run.
    pub config: serde_json::Value,
    pub std_denominator: String,
    pub results: Vec<CvResult>,
    pub pairwise: Vec<PairwiseEntry>,
    /// Absent when a model the verdict needs was not run.
    pub components: Option<Components>,
    pub evidence: Vec<Evidence>,
    pub hypothesis: Option<Hypothesis>,
}

impl ComparisonReport {
    pub fn result(&self, name: &str) -> Option<&CvResult> {
        self.results.iter().find(|r| r.model_name == name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    fn ordered_results(&self) -> Vec<&CvResult> {
        let mut rows: Vec<&CvResult> = ROW_ORDER.iter().filter_map(|n| self.result(n)).collect();
        rows.extend(self.results.iter().filter(|r| !ROW_ORDER.contains(&r.model_name.as_str())));
        rows
    }

    /// Aligned plain-text table: model, mean ± std in percent, best C.
    pub fn to_text(&self) -> String {
        let rows: Vec<[String; 3]> = self
            .ordered_results()
            .into_iter()
            .map(|r| {
                let note = match (r.best_c, r.protocol) {
                    (Some(c), _) => format!("C={c}"),
                    (None, Protocol::ChronologicalHoldout) => "hold-out".into(),
                    (None, Protocol::CrossValidation) => String::new(),
                };
                [
                    r.model_name.clone(),
                    format!("{:.2}% ± {:.2}%", 100.0 * r.mean, 100.0 * r.std),
                    note,
                ]
            })
            .collect();
        let header = ["Model".to_string(), "Accuracy".to_string(), "Note".to_string()];
        let width = |k: usize| {
            rows.iter()
                .chain(std::iter::once(&header))
                .map(|r| r[k].chars().count())
                .max()
                .unwrap_or(0)
        };
        let (w0, w1) = (width(0), width(1));
        let mut out = String::new();
        for r in std::iter::once(&header).chain(&rows) {
            let line = format!("{:<w0$}  {:<w1$}  {}", r[0], r[1], r[2]);
            writeln!(out, "{}", line.trim_end()).unwrap();
        }
        match (&self.components, &self.hypothesis) {
            (Some(c), Some(h)) => {
                writeln!(
                    out,
                    "\nplayer_base={} champion_base={} champion_specific={}\nhypothesis: {h}",
                    c.player_base, c.champion_base, c.champion_specific
                )
                .unwrap();
            }
            _ => writeln!(out, "\nhypothesis: not evaluated").unwrap(),
        }
        out
    }

    /// `model,fold,accuracy` rows for plotting.
    pub fn fold_csv(&self) -> String {
        let mut out = String::from("model,fold,accuracy\n");
        for r in self.ordered_results() {
            for (k, a) in r.per_fold_accuracy.iter().enumerate() {
                writeln!(out, "{},{k},{a}", r.model_name).unwrap();
            }
        }
        out
    }
}
