//! Confusion-matrix evaluation and the model comparison table.
//!
//! Counts are accumulated micro-style over every (sample, label) slot, with
//! per-label sub-counts retained so macro-style numbers can be inspected
//! too.

use serde::{Deserialize, Serialize};

use crate::corpus::IntentLabel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Counts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    fn add(&mut self, other: &Counts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.tn += other.tn;
        self.fn_ += other.fn_;
    }
}

/// Per-label and aggregated confusion counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub per_label: Vec<Counts>,
    pub total: Counts,
}

/// Threshold predictions and count every (sample, label) slot. Predicted
/// positive means probability >= threshold.
pub fn confusion(
    predictions: &[Vec<f64>],
    targets: &[Vec<f64>],
    threshold: f64,
) -> Result<ConfusionCounts> {
    if predictions.len() != targets.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: targets.len(),
        });
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "threshold must lie strictly between 0 and 1, got {threshold}"
        )));
    }
    let mut per_label = vec![Counts::default(); IntentLabel::COUNT];
    for (y, t) in predictions.iter().zip(targets) {
        if y.len() != IntentLabel::COUNT || t.len() != IntentLabel::COUNT {
            return Err(Error::LengthMismatch {
                left: y.len(),
                right: IntentLabel::COUNT,
            });
        }
        for (slot, (&p, &truth)) in y.iter().zip(t).enumerate() {
            let predicted = p >= threshold;
            let actual = truth >= 0.5;
            let c = &mut per_label[slot];
            match (predicted, actual) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
    }
    let mut total = Counts::default();
    for c in &per_label {
        total.add(c);
    }
    Ok(ConfusionCounts { per_label, total })
}

/// Per-label metric breakdown.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelMetrics {
    pub label: String,
    pub counts: Counts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Flags raised when a metric's denominator was zero (the metric itself is
/// reported as 0).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZeroDenominators {
    pub precision: bool,
    pub recall: bool,
    pub f1: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model: String,
    pub variant: String,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub per_label: Vec<LabelMetrics>,
    pub zero_denominators: ZeroDenominators,
}

fn ratio(num: u64, den: u64, flag: &mut bool) -> f64 {
    if den == 0 {
        *flag = true;
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Micro-averaged accuracy/precision/recall/F1 from confusion counts, with
/// the per-label breakdown attached. `model` and `variant` identifiers start
/// empty; callers set them for reporting.
pub fn metrics(counts: &ConfusionCounts) -> Result<MetricsReport> {
    let t = &counts.total;
    if t.total() == 0 {
        return Err(Error::EmptyCounts);
    }
    let mut flags = ZeroDenominators::default();
    let accuracy = (t.tp + t.tn) as f64 / t.total() as f64;
    let precision = ratio(t.tp, t.tp + t.fp, &mut flags.precision);
    let recall = ratio(t.tp, t.tp + t.fn_, &mut flags.recall);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        flags.f1 = true;
        0.0
    };

    let per_label = counts
        .per_label
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let mut sink = false;
            let p = ratio(c.tp, c.tp + c.fp, &mut sink);
            let r = ratio(c.tp, c.tp + c.fn_, &mut sink);
            let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
            LabelMetrics {
                label: IntentLabel::from_index(i)
                    .map(|l| l.name().to_string())
                    .unwrap_or_else(|| format!("label{i}")),
                counts: *c,
                precision: p,
                recall: r,
                f1: f,
            }
        })
        .collect();

    Ok(MetricsReport {
        model: String::new(),
        variant: String::new(),
        accuracy,
        precision,
        recall,
        f1,
        per_label,
        zero_denominators: flags,
    })
}

/// One row of the comparison table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model: String,
    pub variant: String,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Comparison of several evaluated models: intent-highlight scale variants
/// first, then the plain baselines, each group sorted by F1 descending
/// (ties resolved by model identifier).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Comparison {
    pub highlight_variants: Vec<ComparisonRow>,
    pub baselines: Vec<ComparisonRow>,
}

fn is_highlight_variant(report: &MetricsReport) -> bool {
    report.variant.starts_with("scale")
}

pub fn compare_models(reports: &[MetricsReport]) -> Result<Comparison> {
    if reports.is_empty() {
        return Err(Error::EmptyData);
    }
    let row = |r: &MetricsReport| ComparisonRow {
        model: r.model.clone(),
        variant: r.variant.clone(),
        accuracy: r.accuracy,
        precision: r.precision,
        recall: r.recall,
        f1: r.f1,
    };
    let sort = |rows: &mut Vec<ComparisonRow>| {
        rows.sort_by(|a, b| {
            b.f1.partial_cmp(&a.f1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.model.cmp(&b.model))
        });
    };
    let mut highlight_variants: Vec<ComparisonRow> = reports
        .iter()
        .filter(|r| is_highlight_variant(r))
        .map(row)
        .collect();
    let mut baselines: Vec<ComparisonRow> = reports
        .iter()
        .filter(|r| !is_highlight_variant(r))
        .map(row)
        .collect();
    sort(&mut highlight_variants);
    sort(&mut baselines);
    Ok(Comparison {
        highlight_variants,
        baselines,
    })
}

impl Comparison {
    /// Aligned text table, grouped like the published comparison layout.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<24} {:>9} {:>10} {:>8} {:>9}\n",
            "Model", "Accuracy", "Precision", "Recall", "F1-score"
        ));
        out.push_str(&"-".repeat(64));
        out.push('\n');
        let mut emit_group = |title: &str, rows: &[ComparisonRow]| {
            if rows.is_empty() {
                return;
            }
            out.push_str(&format!("[{title}]\n"));
            for r in rows {
                let name = if r.variant.is_empty() {
                    r.model.clone()
                } else {
                    format!("{} ({})", r.model, r.variant)
                };
                out.push_str(&format!(
                    "{:<24} {:>9.4} {:>10.4} {:>8.4} {:>9.4}\n",
                    name, r.accuracy, r.precision, r.recall, r.f1
                ));
            }
        };
        emit_group("intent highlight", &self.highlight_variants);
        emit_group("baselines", &self.baselines);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    #[test]
    fn exact_predictions_have_no_errors() {
        let targets: Vec<Vec<f64>> = vec![
            vec![1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
            vec![0.0; 10],
        ];
        let counts = confusion(&targets, &targets, 0.5).unwrap();
        assert_eq!(counts.total.fp, 0);
        assert_eq!(counts.total.fn_, 0);
        assert_eq!(counts.total.tp, 3);
        assert_eq!(counts.total.tn, 17);
    }

    #[test]
    fn threshold_rule_example() {
        let mut t = vec![0.0; 10];
        t[0] = 1.0;
        let mut y = vec![0.1; 10];
        y[0] = 0.6;
        y[1] = 0.6;
        let counts = confusion(&[y], &[t], 0.5).unwrap();
        assert_eq!(counts.total.tp, 1);
        assert_eq!(counts.total.fp, 1);
        assert_eq!(counts.total.tn, 8);
        assert_eq!(counts.total.fn_, 0);
    }

    #[test]
    fn random_counts_match_double_loop_oracle() {
        let mut rng = SplitMix64::new(77);
        let preds: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..10).map(|_| rng.next_f64()).collect())
            .collect();
        let targets: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..10).map(|_| f64::from(rng.below(2) as u32)).collect())
            .collect();
        let counts = confusion(&preds, &targets, 0.5).unwrap();

        // Exhaustive recount.
        let (mut tp, mut fp, mut tn, mut fn_) = (0u64, 0u64, 0u64, 0u64);
        for s in 0..20 {
            for l in 0..10 {
                let p = preds[s][l] >= 0.5;
                let a = targets[s][l] >= 0.5;
                match (p, a) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, false) => tn += 1,
                    (false, true) => fn_ += 1,
                }
            }
        }
        assert_eq!(counts.total, Counts { tp, fp, tn, fn_ });

        // Micro total equals the sum of per-label counts.
        let mut sum = Counts::default();
        for c in &counts.per_label {
            sum.add(c);
        }
        assert_eq!(sum, counts.total);
        assert_eq!(counts.total.total(), 200);
    }

    #[test]
    fn metrics_all_correct_is_all_ones() {
        let targets: Vec<Vec<f64>> =
            vec![vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]];
        let counts = confusion(&targets, &targets, 0.5).unwrap();
        let m = metrics(&counts).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.precision, 1.0);
        assert_eq!(m.recall, 1.0);
        assert_eq!(m.f1, 1.0);
    }

    #[test]
    fn metrics_hand_case() {
        let counts = ConfusionCounts {
            per_label: vec![
                Counts {
                    tp: 2,
                    fp: 1,
                    tn: 6,
                    fn_: 1,
                };
                1
            ],
            total: Counts {
                tp: 2,
                fp: 1,
                tn: 6,
                fn_: 1,
            },
        };
        let m = metrics(&counts).unwrap();
        assert!((m.precision - 0.6667).abs() < 1e-4);
        assert!((m.recall - 0.6667).abs() < 1e-4);
        assert!((m.f1 - 0.6667).abs() < 1e-4);
        assert!((m.accuracy - 0.8).abs() < 1e-12);
    }

    #[test]
    fn zero_denominators_flag_and_zero() {
        let counts = ConfusionCounts {
            per_label: vec![Counts {
                tp: 0,
                fp: 0,
                tn: 5,
                fn_: 0,
            }],
            total: Counts {
                tp: 0,
                fp: 0,
                tn: 5,
                fn_: 0,
            },
        };
        let m = metrics(&counts).unwrap();
        assert_eq!(m.precision, 0.0);
        assert_eq!(m.recall, 0.0);
        assert_eq!(m.f1, 0.0);
        assert!(m.zero_denominators.precision);
        assert!(m.zero_denominators.recall);
        assert!(m.zero_denominators.f1);
        assert_eq!(m.accuracy, 1.0);
    }

    #[test]
    fn f1_lies_between_precision_and_recall() {
        let mut rng = SplitMix64::new(5);
        for _ in 0..200 {
            let counts = ConfusionCounts {
                per_label: vec![],
                total: Counts {
                    tp: rng.below(20) as u64 + 1,
                    fp: rng.below(20) as u64,
                    tn: rng.below(20) as u64,
                    fn_: rng.below(20) as u64,
                },
            };
            let m = metrics(&counts).unwrap();
            for v in [m.accuracy, m.precision, m.recall, m.f1] {
                assert!((0.0..=1.0).contains(&v));
            }
            if m.precision > 0.0 && m.recall > 0.0 {
                assert!(m.f1 <= m.precision.max(m.recall) + 1e-12);
                assert!(m.f1 >= m.precision.min(m.recall) - 1e-12);
            }
        }
    }

    #[test]
    fn empty_counts_error() {
        let counts = ConfusionCounts {
            per_label: vec![Counts::default()],
            total: Counts::default(),
        };
        assert!(matches!(metrics(&counts), Err(Error::EmptyCounts)));
    }

    fn report(model: &str, variant: &str, f1: f64) -> MetricsReport {
        MetricsReport {
            model: model.to_string(),
            variant: variant.to_string(),
            accuracy: 0.9,
            precision: f1,
            recall: f1,
            f1,
            per_label: vec![],
            zero_denominators: ZeroDenominators::default(),
        }
    }

    #[test]
    fn compare_sorts_by_f1_within_groups() {
        let reports = vec![
            report("m-lstm", "lstm", 0.78),
            report("m-x2", "scale_x2", 0.82),
            report("m-x10", "scale_x10", 0.79),
            report("m-cnn", "cnn", 0.72),
            report("m-x4", "scale_x4", 0.80),
        ];
        let cmp = compare_models(&reports).unwrap();
        let hv: Vec<&str> = cmp
            .highlight_variants
            .iter()
            .map(|r| r.variant.as_str())
            .collect();
        assert_eq!(hv, ["scale_x2", "scale_x4", "scale_x10"]);
        let bl: Vec<&str> = cmp.baselines.iter().map(|r| r.variant.as_str()).collect();
        assert_eq!(bl, ["lstm", "cnn"]);
    }

    #[test]
    fn compare_breaks_ties_by_model_id() {
        let reports = vec![report("zeta", "lstm", 0.8), report("alpha", "cnn", 0.8)];
        let cmp = compare_models(&reports).unwrap();
        assert_eq!(cmp.baselines[0].model, "alpha");
        assert_eq!(cmp.baselines[1].model, "zeta");
    }

    #[test]
    fn single_report_renders_one_row() {
        let cmp = compare_models(&[report("only", "scale_x2", 0.82)]).unwrap();
        let text = cmp.render_text();
        assert_eq!(
            text.lines().filter(|l| l.contains("only")).count(),
            1,
            "{text}"
        );
    }
}
