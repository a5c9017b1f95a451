use std::fmt::Write as _;
use std::path::Path;

use super::experiment::ReportRow;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "cell,dataset,split,victim,attack,rca,bca,asr,target_rate,spr_db,n";

fn decimal(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.6}")
    }
}

/// CSV table with six fractional digits; an absent target rate is left empty.
pub fn report_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let e = &r.report;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.cell,
            r.dataset,
            r.split,
            r.victim,
            r.attack,
            decimal(e.rca),
            decimal(e.bca),
            decimal(e.asr),
            e.target_rate.map(decimal).unwrap_or_default(),
            decimal(e.spr_db),
            e.n
        );
    }
    out
}

/// JSON mirror of the CSV, including per-class and per-fold figures.
pub fn report_json(rows: &[ReportRow]) -> String {
    serde_json::to_string_pretty(rows).expect("report rows serialize")
}

/// Writes `stem.csv` and `stem.json`.
pub fn write_report(rows: &[ReportRow], stem: impl AsRef<Path>) -> Result<()> {
    let stem = stem.as_ref();
    let csv = stem.with_extension("csv");
    let json = stem.with_extension("json");
    std::fs::write(&csv, report_csv(rows)).map_err(|e| Error::io(&csv, e))?;
    std::fs::write(&json, report_json(rows) + "\n").map_err(|e| Error::io(&json, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::EvalReport;

    fn row(spr: f64, target: Option<f64>) -> ReportRow {
        let report = EvalReport {
            rca: 0.86,
            bca: 0.7,
            per_class_rca: vec![Some(0.9), Some(0.5)],
            asr: 0.0,
            target_rate: target,
            spr_db: spr,
            n: 100,
        };
        ReportRow {
            cell: "m/clean".into(),
            dataset: "synthetic".into(),
            split: "loso".into(),
            victim: "m".into(),
            attack: "clean".into(),
            folds: vec![report.clone()],
            report,
        }
    }

    #[test]
    fn csv_has_header_and_six_digits() {
        let csv = report_csv(&[row(f64::INFINITY, None), row(20.0, Some(0.25))]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "m/clean,synthetic,loso,m,clean,0.860000,0.700000,0.000000,,inf,100");
        assert_eq!(lines[2], "m/clean,synthetic,loso,m,clean,0.860000,0.700000,0.000000,0.250000,20.000000,100");
    }

    #[test]
    fn json_mirror_keeps_per_class_values() {
        let v: serde_json::Value = serde_json::from_str(&report_json(&[row(f64::INFINITY, None)])).unwrap();
        assert_eq!(v[0]["report"]["per_class_rca"][1], 0.5);
        assert_eq!(v[0]["report"]["spr_db"], "inf");
    }
}
