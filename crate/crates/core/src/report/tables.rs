use super::metrics::{format_2dp, format_dp, Comparison, MetricsReport};

/// A table rendered both as aligned text and as CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedTable {
    pub text: String,
    pub csv: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tables {
    /// Makespan, tardiness, late jobs and runtime per report.
    pub quality: RenderedTable,
    /// Model size and solver outcome per report.
    pub solver: RenderedTable,
}

const QUALITY: [&str; 7] = [
    "Label",
    "Makespan [d]",
    "Total tard. [d]",
    "Avg. tard. [d]",
    "Max tard. [d]",
    "Late jobs",
    "Runtime [s]",
];

const SOLVER: [&str; 8] = [
    "Label",
    "Seq. literals",
    "Tasks/machine (min-avg-max)",
    "Runtime [s]",
    "Status",
    "Objective value",
    "Best bound",
    "Gap [%]",
];

fn render(header: &[&str], rows: &[Vec<String>]) -> RenderedTable {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: &mut dyn Iterator<Item = &str>| {
        let mut out = String::new();
        for (i, (cell, w)) in cells.zip(&widths).enumerate() {
            if i == 0 {
                out.push_str(&format!("{cell:<w$}"));
            } else {
                out.push_str(&format!("  {cell:>w$}"));
            }
        }
        out.push('\n');
        out
    };
    let mut text = line(&mut header.iter().copied());
    text.push_str(&line(&mut widths.iter().map(|&w| "-".repeat(w)).collect::<Vec<_>>().iter().map(String::as_str)));
    for row in rows {
        text.push_str(&line(&mut row.iter().map(String::as_str)));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv write");
    for row in rows {
        w.write_record(row).expect("in-memory csv write");
    }
    let csv = String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("utf-8");
    RenderedTable { text, csv }
}

/// Quality and solver tables, one row per labelled report. A comparison
/// appends an improvement row (percent, one decimal) to the quality table.
pub fn render_tables(reports: &[(String, MetricsReport)], comparison: Option<&Comparison>) -> Tables {
    let mut quality: Vec<Vec<String>> = reports
        .iter()
        .map(|(label, m)| {
            vec![
                label.clone(),
                format_2dp(m.makespan_days),
                format_2dp(m.total_tardiness_days),
                format_2dp(m.avg_tardiness_days),
                format_2dp(m.max_tardiness_days),
                m.late_jobs.to_string(),
                format_dp(m.runtime_seconds, 0),
            ]
        })
        .collect();
    if let Some(c) = comparison {
        let mut row = vec!["Improvement [%]".to_string()];
        row.extend(
            c.rows
                .iter()
                .map(|r| r.improvement_percent.map_or_else(|| "n/a".to_string(), |v| format_dp(v, 1))),
        );
        quality.push(row);
    }
    let solver: Vec<Vec<String>> = reports
        .iter()
        .map(|(label, m)| {
            vec![
                label.clone(),
                m.seq_literals.to_string(),
                format!(
                    "{}-{}-{}",
                    m.tasks_per_machine_min,
                    format_2dp(m.tasks_per_machine_mean),
                    m.tasks_per_machine_max
                ),
                format_dp(m.runtime_seconds, 0),
                m.status.clone(),
                m.objective_value.to_string(),
                m.best_bound.to_string(),
                format_2dp(m.gap_percent),
            ]
        })
        .collect();
    Tables {
        quality: render(&QUALITY, &quality),
        solver: render(&SOLVER, &solver),
    }
}
