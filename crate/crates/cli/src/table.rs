use std::fmt::Write;

use drillguide::report::Report;

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.2}"))
}

pub fn render(report: &Report) -> String {
    let mut s = String::new();
    if report.sessions.is_empty() {
        s.push_str("no sessions\n");
        return s;
    }
    writeln!(
        s,
        "{:<16} {:<10} {:<9} {:>7} {:>8} {:>8} {:>8} {:>8} {:>9} {:>8}",
        "session", "subject", "condition", "removed", "green%", "yellow%", "red%", "anat%", "time_s", "breaches"
    )
    .unwrap();
    for m in &report.sessions {
        let c = &m.completion_pct;
        writeln!(
            s,
            "{:<16} {:<10} {:<9} {:>7} {:>8} {:>8} {:>8} {:>8} {:>9.3} {:>8}",
            m.session_id,
            m.subject,
            m.condition.as_str(),
            m.voxels_removed,
            pct(c.green),
            pct(c.yellow),
            pct(c.red),
            pct(c.anatomy),
            m.drill_time_s,
            m.breach_count
        )
        .unwrap();
    }
    if !report.tests.is_empty() {
        s.push('\n');
        writeln!(
            s,
            "{:<18} {:<20} {:>3} {:>12} {:>10} {:>10}",
            "metric", "alternative", "n", "mean_diff", "t", "p"
        )
        .unwrap();
        for t in &report.tests {
            let name = serde_json::to_value(t.metric).unwrap();
            writeln!(
                s,
                "{:<18} {:<20} {:>3} {:>12.4} {:>10.4} {:>10.4}",
                name.as_str().unwrap_or_default(),
                t.alternative,
                t.result.n,
                t.result.mean_diff,
                t.result.t_stat,
                t.result.p_one_sided
            )
            .unwrap();
        }
    }
    s
}
