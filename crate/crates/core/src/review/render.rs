use super::{
    AgreementReport, LabelCooccurrence, LabelCount, MetricsReport, StripeReport, StripeRow,
};
use crate::pairs::StripeScheme;

fn pct(v: Option<f64>) -> String {
    v.map(|r| format!("{:.0}%", r * 100.0))
        .unwrap_or_else(|| "–".into())
}

fn stripe_cells(row: &StripeRow) -> (String, String) {
    match row.stripe {
        None => ("Total".into(), String::new()),
        Some(s) => (
            s.cm_interval()
                .map(|i| format!("cm_s {i}"))
                .unwrap_or_default(),
            format!("cd_s {}", s.cd_interval()),
        ),
    }
}

pub fn stripes_markdown(reports: &[StripeReport]) -> String {
    let mut out = String::new();
    for rep in reports {
        let grid = rep.rows.first().and_then(|r| r.stripe).map(|s| s.scheme)
            == Some(StripeScheme::CandidateGrid);
        out.push_str(&format!("### {} sample\n\n", rep.set));
        if grid {
            out.push_str("| Comment similarity | Code similarity | Judged | Val. Rate | Same name | Val. Rate′ |\n");
            out.push_str("|---|---|---:|---:|---:|---:|\n");
        } else {
            out.push_str("| Code similarity | Judged | Val. Rate | Same name | Val. Rate′ |\n");
            out.push_str("|---|---:|---:|---:|---:|\n");
        }
        for row in rep.rows.iter().chain(std::iter::once(&rep.total)) {
            let (cm, cd) = stripe_cells(row);
            let rest = format!(
                "{} | {} | {} | {} |",
                row.judged,
                pct(row.validation_rate),
                row.same_name,
                pct(row.same_name_validation_rate)
            );
            if grid {
                out.push_str(&format!("| {cm} | {cd} | {rest}\n"));
            } else if row.stripe.is_none() {
                out.push_str(&format!("| {cm} | {rest}\n"));
            } else {
                out.push_str(&format!("| {cd} | {rest}\n"));
            }
        }
        out.push('\n');
    }
    out
}

pub fn metrics_markdown(m: &MetricsReport) -> String {
    let f = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "–".into());
    let mut out = String::from("| Metric | Value |\n|---|---:|\n");
    for (name, value) in [
        ("TP", m.matrix.tp.to_string()),
        ("FP", m.matrix.fp.to_string()),
        ("FN", m.matrix.fn_.to_string()),
        ("TN", m.matrix.tn.to_string()),
        ("Precision", f(m.precision)),
        ("Recall", f(m.recall)),
        ("F1", f(m.f1)),
        ("Specificity", f(m.specificity)),
        ("Accuracy", f(m.accuracy)),
        ("Val. Rate", pct(m.validation_rate)),
        ("Val. Rate′", pct(m.same_name_validation_rate)),
    ] {
        out.push_str(&format!("| {name} | {value} |\n"));
    }
    out
}

fn label_rows(out: &mut String, title: &str, rows: &[LabelCount]) {
    out.push_str(&format!("| {title} | Count | % |\n|---|---:|---:|\n"));
    for r in rows {
        let names: Vec<&str> = r.labels.iter().map(|l| l.as_str()).collect();
        out.push_str(&format!(
            "| {} | {} | {:.1}% |\n",
            names.join(", "),
            r.count,
            r.percentage
        ));
    }
    out.push('\n');
}

pub fn labels_markdown(c: &LabelCooccurrence) -> String {
    let mut out = format!(
        "Type-4 judgments: {} (unlabeled: {})\n\n",
        c.total, c.unlabeled
    );
    label_rows(&mut out, "Label", &c.singles);
    label_rows(&mut out, "Label pair", &c.pairs);
    label_rows(&mut out, "Label triplet", &c.triplets);
    if c.four_plus_total > 0 {
        label_rows(&mut out, "Four or more labels", &c.four_plus);
    }
    out
}

pub fn agreement_markdown(a: &AgreementReport) -> String {
    format!(
        "| | {b} clone | {b} not clone |\n|---|---:|---:|\n| {a_} clone | {} | {} |\n| {a_} not clone | {} | {} |\n\n\
         κ = {:.4} (p_o = {:.4}, p_e = {:.4}, N = {}, conflicts = {})\n",
        a.table.both_clone,
        a.table.first_only,
        a.table.second_only,
        a.table.neither,
        a.kappa,
        a.observed_agreement,
        a.expected_agreement,
        a.jointly_judged,
        a.conflicts.len(),
        a_ = a.raters[0],
        b = a.raters[1],
    )
}
