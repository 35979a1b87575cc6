//! Report files (machine-readable CSV) and aligned stdout tables.

use vscreen_core::metrics::SummaryRow;
use vscreen_core::{MetricsReport64, Result, SummaryRow64};

pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub const PER_TARGET_HEADER: &str = "target_id,pathway,scheme,ef1,ef10,roc_auc,bedroc,alpha,\
actives_remaining_pct,accuracy,precision,recall,specificity,f1,balanced_accuracy,mcc,policy";

pub fn per_target_csv(reports: &[MetricsReport64]) -> String {
    let mut out = String::from(PER_TARGET_HEADER);
    out.push('\n');
    for r in reports {
        let c = &r.classical;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.target_id,
            r.pathway,
            r.scheme,
            fmt_f64(r.ef1),
            fmt_f64(r.ef10),
            fmt_opt(r.roc_auc),
            fmt_opt(r.bedroc),
            fmt_f64(r.alpha),
            fmt_f64(r.actives_remaining_pct),
            fmt_f64(c.accuracy),
            fmt_f64(c.precision),
            fmt_f64(c.recall),
            fmt_f64(c.specificity),
            fmt_f64(c.f1),
            fmt_f64(c.balanced_accuracy),
            fmt_f64(c.mcc),
            c.policy,
        ));
    }
    out
}

/// Parse a per-target metrics file written by [`per_target_csv`].
pub fn parse_per_target_csv(text: &str) -> Result<Vec<MetricsReport64>> {
    use vscreen_core::metrics::{ClassicalMetrics, MetricsReport};
    use vscreen_core::Error;

    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != PER_TARGET_HEADER {
        return Err(Error::Validation(format!(
            "unexpected per-target metrics header: `{header}`"
        )));
    }
    let mut out = Vec::new();
    for (no, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 17 {
            return Err(Error::Parse {
                path: "per-target metrics".into(),
                row: no + 1,
                message: format!("expected 17 columns, got {}", cols.len()),
            });
        }
        let req = |i: usize| -> Result<f64> {
            cols[i].parse().map_err(|_| Error::Parse {
                path: "per-target metrics".into(),
                row: no + 1,
                message: format!("bad number `{}`", cols[i]),
            })
        };
        let opt = |i: usize| -> Result<Option<f64>> {
            if cols[i].is_empty() {
                Ok(None)
            } else {
                req(i).map(Some)
            }
        };
        out.push(MetricsReport {
            target_id: cols[0].to_string(),
            pathway: cols[1].to_string(),
            scheme: cols[2].to_string(),
            ef1: req(3)?,
            ef10: req(4)?,
            roc_auc: opt(5)?,
            bedroc: opt(6)?,
            alpha: req(7)?,
            actives_remaining_pct: req(8)?,
            classical: ClassicalMetrics {
                accuracy: req(9)?,
                precision: req(10)?,
                recall: req(11)?,
                specificity: req(12)?,
                f1: req(13)?,
                balanced_accuracy: req(14)?,
                mcc: req(15)?,
                true_pos: 0,
                false_pos: 0,
                true_neg: 0,
                false_neg: 0,
                policy: cols[16].to_string(),
            },
        });
    }
    Ok(out)
}

pub const SUMMARY_HEADER: &str = "pathway,scheme,median_ef1,mean_ef1,median_ef10,mean_ef10,\
median_roc_auc,mean_roc_auc,median_bedroc,mean_bedroc,median_actives_remaining_pct,\
mean_actives_remaining_pct,success_times,n_targets";

pub fn summary_csv(rows: &[SummaryRow64]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.pathway,
            r.scheme,
            fmt_f64(r.median_ef1),
            fmt_f64(r.mean_ef1),
            fmt_f64(r.median_ef10),
            fmt_f64(r.mean_ef10),
            fmt_opt(r.median_roc_auc),
            fmt_opt(r.mean_roc_auc),
            fmt_opt(r.median_bedroc),
            fmt_opt(r.mean_bedroc),
            fmt_f64(r.median_actives_remaining_pct),
            fmt_f64(r.mean_actives_remaining_pct),
            r.success_times,
            r.n_targets,
        ));
    }
    out
}

/// Aligned human-readable table mirroring the summary file.
pub fn render_summary_table(rows: &[SummaryRow64]) -> String {
    let mut table: Vec<Vec<String>> = vec![vec![
        "pathway".into(),
        "scheme".into(),
        "EF1%".into(),
        "EF10%".into(),
        "ROC-AUC".into(),
        "BEDROC".into(),
        "actives-left".into(),
        "success".into(),
    ]];
    let disp = |v: f64| format!("{v:.4}");
    let disp_opt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
    for r in rows {
        table.push(vec![
            r.pathway.clone(),
            r.scheme.clone(),
            disp(r.median_ef1),
            disp(r.median_ef10),
            disp_opt(r.median_roc_auc),
            disp_opt(r.median_bedroc),
            format!("{:.1}%", r.median_actives_remaining_pct),
            format!("{}", r.success_times),
        ]);
    }
    render_aligned(&table)
}

pub fn render_aligned(rows: &[Vec<String>]) -> String {
    if rows.is_empty() {
        return String::new();
    }
    let cols = rows[0].len();
    let mut widths = vec![0usize; cols];
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    for (idx, row) in rows.iter().enumerate() {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(i, cell)| format!("{:<width$}", cell, width = widths[i]))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
        if idx == 0 {
            let total: usize = widths.iter().sum::<usize>() + 2 * (cols - 1);
            out.push_str(&"-".repeat(total));
            out.push('\n');
        }
    }
    out
}

/// Median-sorted aggregation of per-target reports into summary rows, in
/// deterministic (pathway, scheme) order.
pub fn summarize(reports: &[MetricsReport64]) -> Result<Vec<SummaryRow64>> {
    let mut keys: Vec<(String, String)> = Vec::new();
    for r in reports {
        let key = (r.pathway.clone(), r.scheme.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.sort();
    let mut rows: Vec<SummaryRow<f64>> = Vec::new();
    for (pathway, scheme) in keys {
        let group: Vec<&MetricsReport64> = reports
            .iter()
            .filter(|r| r.pathway == pathway && r.scheme == scheme)
            .collect();
        rows.push(vscreen_core::metrics::aggregate(&group, &pathway, &scheme)?);
    }
    Ok(rows)
}
