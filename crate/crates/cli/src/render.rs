//! Text rendering of a merge trace in the worked-example layout: remaining
//! inputs and register rows print lowest-value first, and the output column
//! accumulates the merged sequence.

use flims_core::{CycleTrace, Record};

fn rev_vals(slice: &[Record]) -> String {
    let mut parts: Vec<String> = slice.iter().map(|r| r.0.to_string()).collect();
    parts.reverse();
    parts.join(" ")
}

fn rev_lanes(lanes: &[Option<u64>]) -> String {
    let mut parts: Vec<String> = lanes
        .iter()
        .map(|o| o.map_or_else(|| "-".to_string(), |v| v.to_string()))
        .collect();
    parts.reverse();
    parts.join(" ")
}

/// Renders the per-cycle table. `a` and `b` are the original inputs; the
/// remaining-input columns are reconstructed from the cumulative dequeues.
pub fn render_trace(a: &[Record], b: &[Record], trace: &CycleTrace) -> String {
    let mut rows: Vec<[String; 6]> = Vec::with_capacity(trace.cycles.len() + 1);
    rows.push([
        "cycle".into(),
        "input A".into(),
        "input B".into(),
        "cA".into(),
        "cB".into(),
        "output".into(),
    ]);
    let mut consumed_a = 0usize;
    let mut consumed_b = 0usize;
    let mut emitted: Vec<u64> = Vec::new();
    for c in &trace.cycles {
        if let Some(out) = &c.out {
            emitted.extend(out.iter().flatten());
        }
        let mut out_col: Vec<String> = emitted.iter().map(|v| v.to_string()).collect();
        out_col.reverse();
        rows.push([
            c.cycle.to_string(),
            rev_vals(&a[consumed_a..]),
            rev_vals(&b[consumed_b..]),
            rev_lanes(&c.ca),
            rev_lanes(&c.cb),
            out_col.join(" "),
        ]);
        consumed_a += c.deq_a.len();
        consumed_b += c.deq_b.len();
    }

    let mut widths = [0usize; 6];
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row.iter()) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let line: Vec<String> = row
            .iter()
            .zip(widths.iter())
            .map(|(cell, w)| format!("{cell:<w$}"))
            .collect();
        out.push_str(line.join(" | ").trim_end());
        out.push('\n');
        if i == 0 {
            let sep: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
            out.push_str(&sep.join("-+-"));
            out.push('\n');
        }
    }
    out
}
