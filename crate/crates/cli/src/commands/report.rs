use std::path::PathBuf;

use anyhow::{bail, Context, Result};

use crate::config::PipelineConfig;
use crate::records::{Detection, DetectionsFile};

use super::{ensure_parent, require_input};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    Json,
    Html,
}

pub struct ReportArgs {
    pub detections: Option<PathBuf>,
    pub format: ReportFormat,
    pub out: Option<PathBuf>,
}

pub fn run(cfg: &PipelineConfig, args: &ReportArgs) -> Result<()> {
    let detections_path = args
        .detections
        .clone()
        .unwrap_or_else(|| cfg.detections.clone());
    require_input(&detections_path, "detect")?;
    let text = std::fs::read_to_string(&detections_path)
        .with_context(|| format!("cannot read {}", detections_path.display()))?;
    let file: DetectionsFile = serde_json::from_str(&text)?;
    if file.artifact != "detections" {
        bail!(
            "{}: expected a detections artifact, found `{}`",
            detections_path.display(),
            file.artifact
        );
    }
    if file.results.is_empty() {
        bail!("no detection results to report");
    }

    let out = args.out.clone().unwrap_or_else(|| match args.format {
        ReportFormat::Json => cfg.report.with_extension("json"),
        ReportFormat::Html => cfg.report.with_extension("html"),
    });
    ensure_parent(&out)?;
    match args.format {
        ReportFormat::Json => {
            std::fs::write(&out, serde_json::to_string_pretty(&file)?)
                .with_context(|| format!("cannot write {}", out.display()))?;
        }
        ReportFormat::Html => {
            std::fs::write(&out, render_html(&file))
                .with_context(|| format!("cannot write {}", out.display()))?;
        }
    }
    crate::out::line(format!("report: {} contracts -> {}", file.results.len(), out.display()));
    Ok(())
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Static single-file report: labels at or above the threshold get the red
/// chip, the rest render in green; functions are listed strongest first.
fn render_html(file: &DetectionsFile) -> String {
    let mut html = String::from(
        "<!doctype html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>Intent detection report</title>\n<style>\n\
         body { font-family: sans-serif; margin: 2rem; color: #222; }\n\
         h2 { font-family: monospace; }\n\
         .label { display: inline-block; padding: 0.2rem 0.6rem; margin: 0.1rem; border-radius: 4px; }\n\
         .label.positive { background: #c0392b; color: #fff; font-weight: bold; }\n\
         .label.negative { color: #1e8449; }\n\
         table { border-collapse: collapse; margin: 1rem 0 2rem; }\n\
         th, td { border: 1px solid #ccc; padding: 0.3rem 0.7rem; text-align: left; }\n\
         tr.scaled td { background: #fdeaea; }\n\
         </style>\n</head>\n<body>\n<h1>Intent detection report</h1>\n",
    );
    html.push_str(&format!(
        "<p>decision threshold: {:.2}</p>\n",
        file.threshold
    ));
    for d in &file.results {
        html.push_str(&render_contract(d, file.threshold));
    }
    html.push_str("</body>\n</html>\n");
    html
}

fn render_contract(d: &Detection, threshold: f64) -> String {
    let mut s = format!("<section>\n<h2>{}</h2>\n<div>\n", escape(&d.address));
    for lp in &d.probabilities {
        let class = if lp.probability >= threshold {
            "positive"
        } else {
            "negative"
        };
        s.push_str(&format!(
            "<span class=\"label {class}\">{} {:.3}</span>\n",
            escape(&lp.label),
            lp.probability
        ));
    }
    s.push_str("</div>\n<table>\n<tr><th>#</th><th>owner</th><th>function</th><th>kind</th><th>strength</th><th>cluster</th></tr>\n");
    for (i, f) in d.functions.iter().enumerate() {
        let class = if f.scaled { " class=\"scaled\"" } else { "" };
        let shown_name = if f.name.is_empty() { "(unnamed)" } else { &f.name };
        s.push_str(&format!(
            "<tr{class}><td>{}</td><td>{}</td><td>{}</td><td>{:?}</td><td>{:.4}</td><td>{}</td></tr>\n",
            i + 1,
            escape(&f.owner),
            escape(shown_name),
            f.kind,
            f.distance,
            f.cluster
        ));
    }
    s.push_str("</table>\n</section>\n");
    s
}
