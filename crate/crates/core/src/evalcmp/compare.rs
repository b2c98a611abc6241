use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{CvResult, EvalError};
use crate::stats::{mean, sample_std};

/// `mean_a − mean_b > 2·(std_a + std_b)`.
pub fn significant(a: &CvResult, b: &CvResult) -> bool {
    a.mean - b.mean > 2.0 * (a.std + b.std)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    /// `mean(d) / (sd(d)/√k)` over fold differences `d = a − b`; ±∞ when `sd(d) = 0`.
    #[serde(with = "extended_float")]
    pub t: f64,
    pub df: usize,
    pub p_value: f64,
    /// Two-sided rejection at `alpha`.
    pub significant: bool,
}

/// JSON has no infinities; write them as the strings "inf" and "-inf".
mod extended_float {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        match *x {
            f64::INFINITY => s.serialize_str("inf"),
            f64::NEG_INFINITY => s.serialize_str("-inf"),
            x => s.serialize_f64(x),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Tag(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Tag(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Tag(t) if t == "-inf" => Ok(f64::NEG_INFINITY),
            Repr::Tag(t) => Err(de::Error::custom(format!("not a number: {t:?}"))),
        }
    }
}

/// Paired t-test on matched fold accuracies.
pub fn paired_ttest(a: &CvResult, b: &CvResult, alpha: f64) -> Result<TTest, EvalError> {
    let (k, kb) = (a.per_fold_accuracy.len(), b.per_fold_accuracy.len());
    if k != kb || k < 2 {
        return Err(EvalError::FoldMismatch { a: k, b: kb });
    }
    let diffs: Vec<f64> = a
        .per_fold_accuracy
        .iter()
        .zip(&b.per_fold_accuracy)
        .map(|(x, y)| x - y)
        .collect();
    let (m, sd) = (mean(&diffs), sample_std(&diffs));
    let df = k - 1;
    let t = if sd == 0.0 {
        if m == 0.0 {
            0.0
        } else {
            m.signum() * f64::INFINITY
        }
    } else {
        m / (sd / (k as f64).sqrt())
    };
    let dist = StudentsT::new(0.0, 1.0, df as f64).expect("df >= 1");
    let p_value = if t.is_infinite() {
        0.0
    } else {
        2.0 * dist.cdf(-t.abs())
    };
    let critical = dist.inverse_cdf(1.0 - alpha / 2.0);
    Ok(TTest {
        t,
        df,
        p_value,
        significant: t.abs() > critical,
    })
}

/// Which test decides a single "a beats b" question.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignificanceMode {
    /// The two-standard-deviation rule.
    #[default]
    Rule,
    /// Paired t-test with a positive mean difference.
    Ttest,
    /// Both of the above.
    Both,
}

/// How the two pieces of evidence for a base component combine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conjunction {
    #[default]
    And,
    Or,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerdictOptions {
    pub mode: SignificanceMode,
    pub conjunction: Conjunction,
    pub alpha: f64,
}

impl Default for VerdictOptions {
    fn default() -> Self {
        Self {
            mode: SignificanceMode::Rule,
            conjunction: Conjunction::And,
            alpha: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Components {
    pub player_base: bool,
    pub champion_base: bool,
    pub champion_specific: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hypothesis {
    H1,
    H2,
    H3,
    H4,
    H5,
    H6,
    H7,
    None,
}

impl Hypothesis {
    pub fn from_components(c: Components) -> Self {
        match (c.player_base, c.champion_base, c.champion_specific) {
            (true, false, false) => Self::H1,
            (false, true, false) => Self::H2,
            (false, false, true) => Self::H3,
            (true, true, false) => Self::H4,
            (true, false, true) => Self::H5,
            (false, true, true) => Self::H6,
            (true, true, true) => Self::H7,
            (false, false, false) => Self::None,
        }
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// One "better than" check feeding a component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub component: String,
    pub better: String,
    pub worse: String,
    pub mean_difference: f64,
    /// `2·(std_better + std_worse)`.
    pub rule_margin: f64,
    pub rule: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ttest: Option<TTest>,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub components: Components,
    pub evidence: Vec<Evidence>,
    pub hypothesis: Hypothesis,
}

fn find<'a>(results: &'a [CvResult], name: &str) -> Result<&'a CvResult, EvalError> {
    results
        .iter()
        .find(|r| r.model_name == name)
        .ok_or_else(|| EvalError::MissingModel(name.into()))
}

fn evidence(
    component: &str,
    a: &CvResult,
    b: &CvResult,
    options: &VerdictOptions,
) -> Result<Evidence, EvalError> {
    let rule = significant(a, b);
    let ttest = match options.mode {
        SignificanceMode::Rule => None,
        _ => Some(paired_ttest(a, b, options.alpha)?),
    };
    let by_t = ttest.is_some_and(|t| t.significant && t.t > 0.0);
    let significant = match options.mode {
        SignificanceMode::Rule => rule,
        SignificanceMode::Ttest => by_t,
        SignificanceMode::Both => rule && by_t,
    };
    Ok(Evidence {
        component: component.into(),
        better: a.model_name.clone(),
        worse: b.model_name.clone(),
        mean_difference: a.mean - b.mean,
        rule_margin: 2.0 * (a.std + b.std),
        rule,
        ttest,
        significant,
    })
}

/// Component tests over results named LR-P, LR-C, LR-P-C, LR-P-C-PC and BL-MC.
///
/// champion base: LR-C > BL-MC and LR-P-C > LR-P;
/// player base: LR-P > BL-MC and LR-P-C > LR-C;
/// specific: LR-P-C-PC > LR-P-C.
pub fn verdict(results: &[CvResult], options: &VerdictOptions) -> Result<Verdict, EvalError> {
    let p = find(results, "LR-P")?;
    let c = find(results, "LR-C")?;
    let pc = find(results, "LR-P-C")?;
    let full = find(results, "LR-P-C-PC")?;
    let bl = find(results, "BL-MC")?;
    let evidence = vec![
        evidence("player_base", p, bl, options)?,
        evidence("player_base", pc, c, options)?,
        evidence("champion_base", c, bl, options)?,
        evidence("champion_base", pc, p, options)?,
        evidence("champion_specific", full, pc, options)?,
    ];
    let combine = |x: bool, y: bool| match options.conjunction {
        Conjunction::And => x && y,
        Conjunction::Or => x || y,
    };
    let components = Components {
        player_base: combine(evidence[0].significant, evidence[1].significant),
        champion_base: combine(evidence[2].significant, evidence[3].significant),
        champion_specific: evidence[4].significant,
    };
    Ok(Verdict {
        components,
        evidence,
        hypothesis: Hypothesis::from_components(components),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(name: &str, mean: f64, std: f64) -> CvResult {
        CvResult::from_summary(name, mean, std)
    }

    #[test]
    fn rule_examples() {
        assert!(significant(&s("a", 0.6024, 0.0016), &s("b", 0.5882, 0.0020)));
        assert!(!significant(&s("a", 0.5966, 0.0042), &s("b", 0.5953, 0.0039)));
        let a = s("a", 0.6, 0.01);
        assert!(!significant(&a, &a));
    }

    #[test]
    fn every_component_combination_maps() {
        let all = [
            ((true, false, false), Hypothesis::H1),
            ((false, true, false), Hypothesis::H2),
            ((false, false, true), Hypothesis::H3),
            ((true, true, false), Hypothesis::H4),
            ((true, false, true), Hypothesis::H5),
            ((false, true, true), Hypothesis::H6),
            ((true, true, true), Hypothesis::H7),
            ((false, false, false), Hypothesis::None),
        ];
        for ((p, c, pc), h) in all {
            let comp = Components {
                player_base: p,
                champion_base: c,
                champion_specific: pc,
            };
            assert_eq!(Hypothesis::from_components(comp), h);
        }
    }

    #[test]
    fn indistinguishable_models_give_none() {
        let rs: Vec<CvResult> = ["LR-P", "LR-C", "LR-P-C", "LR-P-C-PC", "BL-MC"]
            .iter()
            .map(|n| s(n, 0.52, 0.01))
            .collect();
        assert_eq!(verdict(&rs, &VerdictOptions::default()).unwrap().hypothesis, Hypothesis::None);
    }

    #[test]
    fn missing_model_is_named() {
        let rs = vec![s("LR-P", 0.5, 0.0)];
        assert_eq!(
            verdict(&rs, &VerdictOptions::default()),
            Err(EvalError::MissingModel("LR-C".into()))
        );
    }

    #[test]
    fn or_mode_needs_one_piece_of_evidence() {
        let rs = vec![
            s("LR-P", 0.50, 0.001),
            s("LR-C", 0.60, 0.001),
            s("LR-P-C", 0.60, 0.001),
            s("LR-P-C-PC", 0.60, 0.001),
            s("BL-MC", 0.50, 0.001),
        ];
        // LR-P-C beats LR-P but not LR-C: champion evidence both true, player evidence both false
        let and = verdict(&rs, &VerdictOptions::default()).unwrap();
        assert_eq!(and.hypothesis, Hypothesis::H2);
        let mut rs2 = rs.clone();
        rs2[0] = s("LR-P", 0.55, 0.001);
        let and2 = verdict(&rs2, &VerdictOptions::default()).unwrap();
        assert!(!and2.components.player_base);
        let or = verdict(
            &rs2,
            &VerdictOptions {
                conjunction: Conjunction::Or,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(or.components.player_base);
        assert_eq!(or.hypothesis, Hypothesis::H4);
    }

    #[test]
    fn identical_folds_give_zero_t() {
        let a = CvResult::from_folds("a", vec![0.5, 0.6, 0.55], None);
        let t = paired_ttest(&a, &a, 0.05).unwrap();
        assert_eq!(t.t, 0.0);
        assert!(!t.significant);
        assert_eq!(t.p_value, 1.0);
    }

    #[test]
    fn constant_positive_difference_is_infinite() {
        let a = CvResult::from_folds("a", vec![0.6, 0.7, 0.65], None);
        let b = CvResult::from_folds("b", vec![0.5, 0.6, 0.55], None);
        let t = paired_ttest(&a, &b, 0.05).unwrap();
        // 0.6-0.5 and 0.7-0.6 differ in the last ulp, so allow a huge finite t too
        assert!(t.t > 1e10, "{}", t.t);
        assert!(t.significant);
        let exact = CvResult::from_folds("a", vec![0.75, 0.5, 0.25], None);
        let shifted = CvResult::from_folds("b", vec![0.5, 0.25, 0.0], None);
        assert_eq!(paired_ttest(&exact, &shifted, 0.05).unwrap().t, f64::INFINITY);
    }

    #[test]
    fn ten_fold_hand_computation() {
        let a = CvResult::from_folds(
            "a",
            vec![0.61, 0.58, 0.60, 0.63, 0.59, 0.62, 0.60, 0.57, 0.61, 0.60],
            None,
        );
        let b = CvResult::from_folds(
            "b",
            vec![0.58, 0.57, 0.59, 0.60, 0.59, 0.58, 0.57, 0.56, 0.60, 0.58],
            None,
        );
        // d = .03 .01 .01 .03 0 .04 .03 .01 .01 .02; mean .019, Σ(d-mean)² = .00149
        let sd = (0.00149f64 / 9.0).sqrt();
        let want = 0.019 / (sd / 10f64.sqrt());
        let t = paired_ttest(&a, &b, 0.05).unwrap();
        assert!((t.t - want).abs() < 1e-9, "{} {want}", t.t);
        assert_eq!(t.df, 9);
        // t(9) two-sided 5% critical value 2.262
        assert!(t.significant);
        // two-sided p for t ≈ 4.67 at 9 df
        assert!(t.p_value < 0.002 && t.p_value > 0.0005, "{}", t.p_value);
    }

    #[test]
    fn infinite_t_survives_json() {
        let t = TTest {
            t: f64::INFINITY,
            df: 2,
            p_value: 0.0,
            significant: true,
        };
        let text = serde_json::to_string(&t).unwrap();
        assert!(text.contains(r#""t":"inf""#), "{text}");
        assert_eq!(serde_json::from_str::<TTest>(&text).unwrap(), t);
    }

    #[test]
    fn fold_mismatch() {
        let a = CvResult::from_folds("a", vec![0.5, 0.6], None);
        let b = CvResult::from_folds("b", vec![0.5, 0.6, 0.7], None);
        assert_eq!(paired_ttest(&a, &b, 0.05), Err(EvalError::FoldMismatch { a: 2, b: 3 }));
    }

    proptest! {
        #[test]
        fn rule_is_never_true_both_ways(ma in 0.0..1.0f64, sa in 0.0..0.1f64, mb in 0.0..1.0f64, sb in 0.0..0.1f64) {
            let (a, b) = (s("a", ma, sa), s("b", mb, sb));
            prop_assert!(!(significant(&a, &b) && significant(&b, &a)));
            prop_assert!(!significant(&a, &a));
        }
    }
}
