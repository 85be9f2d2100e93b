//! Report rendering: human tables, CSV for the binned stats, and structured
//! JSON passthrough. All formats are deterministic functions of the report.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::io::{EvalReport, ReportDoc};
use crate::metrics::BinnedStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Table,
    Csv,
    Structured,
}

pub fn render(doc: &ReportDoc, format: ReportFormat) -> String {
    match format {
        ReportFormat::Structured => {
            let mut s = serde_json::to_string_pretty(doc).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Table => match doc {
            ReportDoc::Eval { report } => render_table(report, "eval"),
            ReportDoc::Track { raw, smoothed } => {
                let mut out = render_table(raw, "raw detections");
                out.push('\n');
                out.push_str(&render_table(smoothed, "smoothed tracks"));
                out.push('\n');
                out.push_str(&render_track_delta(raw, smoothed));
                out
            }
        },
        ReportFormat::Csv => match doc {
            ReportDoc::Eval { report } => render_csv(&[("eval", report)]),
            ReportDoc::Track { raw, smoothed } => {
                render_csv(&[("raw", raw), ("smoothed", smoothed)])
            }
        },
    }
}

fn opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.4}"),
        None => "-".to_string(),
    }
}

fn render_table(r: &EvalReport, title: &str) -> String {
    let mut out = String::new();
    writeln!(out, "== {title}: {} ({} frames) ==", r.sequence_id, r.n_frames).unwrap();
    writeln!(
        out,
        "mAP@0.5: {}   mAP@0.5:0.95: {}   precision: {:.4}   recall: {:.4}",
        opt(r.map50),
        opt(r.map50_95),
        r.precision,
        r.recall
    )
    .unwrap();
    if !r.per_class_ap50.is_empty() {
        let per: Vec<String> =
            r.per_class_ap50.iter().map(|(c, ap)| format!("{c} {ap:.4}")).collect();
        writeln!(out, "AP@0.5 per class: {}", per.join(", ")).unwrap();
    }
    match &r.summary {
        Some(s) => writeln!(
            out,
            "E (weighted): {} m   MDE: {:.2} m   outliers: {:.1}%   MAPE: {}   matches: {}",
            opt(r.weighted_error_m),
            s.mde_m,
            s.outlier_rate * 100.0,
            opt(s.mape),
            s.count
        )
        .unwrap(),
        None => writeln!(out, "distance metrics: absent (no matched pairs with distances)").unwrap(),
    }
    if let Some(binned) = &r.binned {
        out.push_str(&binned_table(binned));
    }
    writeln!(
        out,
        "config: iou={:.2} outlier_rel={:.2} class_aware={}",
        r.config.iou_threshold, r.config.outlier_rel_threshold, r.config.class_aware
    )
    .unwrap();
    out
}

fn binned_table(b: &BinnedStats) -> String {
    let mut out = String::new();
    writeln!(out, "{:>14} {:>10} {:>10} {:>9} {:>7}", "range (m)", "E (m)", "MDE (m)", "outl (%)", "n").unwrap();
    for bin in &b.bins {
        let (mde, outl, n) = match &bin.summary {
            Some(s) => (format!("{:.2}", s.mde_m), format!("{:.1}", s.outlier_rate * 100.0), s.count),
            None => ("-".to_string(), "-".to_string(), 0),
        };
        let e = bin.weighted_error_m.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".to_string());
        writeln!(out, "{:>14} {:>10} {:>10} {:>9} {:>7}", format!("{}-{}", bin.lo_m, bin.hi_m), e, mde, outl, n)
            .unwrap();
    }
    out
}

fn render_track_delta(raw: &EvalReport, smoothed: &EvalReport) -> String {
    let mut out = String::new();
    if let (Some(r), Some(s)) = (&raw.summary, &smoothed.summary) {
        let mde_pct = if r.mde_m > 0.0 { (s.mde_m - r.mde_m) / r.mde_m * 100.0 } else { 0.0 };
        let outl_pct = if r.outlier_rate > 0.0 {
            (s.outlier_rate - r.outlier_rate) / r.outlier_rate * 100.0
        } else {
            0.0
        };
        writeln!(
            out,
            "smoothing: MDE {:.2} -> {:.2} m ({mde_pct:+.1}%), outliers {:.1}% -> {:.1}% ({outl_pct:+.1}%)",
            r.mde_m,
            s.mde_m,
            r.outlier_rate * 100.0,
            s.outlier_rate * 100.0
        )
        .unwrap();
    }
    out
}

fn render_csv(sections: &[(&str, &EvalReport)]) -> String {
    let mut out = String::from("section,bin_lo_m,bin_hi_m,weighted_error_m,mde_m,outlier_rate,mape,count\n");
    for (name, r) in sections {
        if let Some(s) = &r.summary {
            writeln!(
                out,
                "{name},overall,overall,{},{},{},{},{}",
                csv_opt(r.weighted_error_m),
                s.mde_m,
                s.outlier_rate,
                csv_opt(s.mape),
                s.count
            )
            .unwrap();
        }
        if let Some(binned) = &r.binned {
            for bin in &binned.bins {
                let (mde, outl, mape, n) = match &bin.summary {
                    Some(s) => {
                        (s.mde_m.to_string(), s.outlier_rate.to_string(), csv_opt(s.mape), s.count)
                    }
                    None => ("".to_string(), "".to_string(), "".to_string(), 0),
                };
                writeln!(
                    out,
                    "{name},{},{},{},{mde},{outl},{mape},{n}",
                    bin.lo_m,
                    bin.hi_m,
                    csv_opt(bin.weighted_error_m)
                )
                .unwrap();
            }
        }
    }
    out
}

fn csv_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}
