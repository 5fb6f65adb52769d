//! Report serialization. Both formats carry the same rows; reals are written
//! with 17 significant digits, non-finite reals as `inf`, `-inf` or `NaN`.

use hgibbs::experiments::ExperimentReport;
use std::io::{self, Write};

/// One report line. Fields that do not apply to a row kind are empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub kind: &'static str,
    pub label: String,
    pub value: Option<f64>,
    pub stderr: Option<f64>,
    pub n_samples: Option<u64>,
    pub seed: Option<u64>,
    pub passed: Option<bool>,
    pub text: Option<String>,
}

pub const COLUMNS: [&str; 8] = ["kind", "label", "value", "stderr", "n_samples", "seed", "passed", "text"];

impl Row {
    fn new(kind: &'static str, label: impl Into<String>) -> Self {
        Row { kind, label: label.into(), value: None, stderr: None, n_samples: None, seed: None, passed: None, text: None }
    }

    fn with_text(mut self, t: impl ToString) -> Self {
        self.text = Some(t.to_string());
        self
    }

    /// Cells in [`COLUMNS`] order.
    pub fn cells(&self) -> [String; 8] {
        [
            self.kind.to_string(),
            self.label.clone(),
            self.value.map(fmt_real).unwrap_or_default(),
            self.stderr.map(fmt_real).unwrap_or_default(),
            self.n_samples.map(|n| n.to_string()).unwrap_or_default(),
            self.seed.map(|n| n.to_string()).unwrap_or_default(),
            self.passed.map(|b| b.to_string()).unwrap_or_default(),
            self.text.clone().unwrap_or_default(),
        ]
    }
}

pub fn fmt_real(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

/// Run-level metadata recorded ahead of the report body.
pub struct Meta<'a> {
    pub version: &'a str,
    pub seed: u64,
    pub threads: usize,
}

pub fn rows(report: &ExperimentReport, meta: &Meta) -> Vec<Row> {
    let mut out = vec![
        Row::new("meta", "experiment").with_text(&report.name),
        Row::new("meta", "version").with_text(meta.version),
        Row { seed: Some(meta.seed), ..Row::new("meta", "seed") },
        Row::new("meta", "threads").with_text(meta.threads),
        // Chunked seeding makes results independent of the thread count.
        Row::new("meta", "mode").with_text(if meta.threads == 1 { "single-threaded" } else { "multi-threaded" }),
    ];
    out.extend(report.config.iter().map(|(k, v)| Row::new("config", k).with_text(v)));
    out.extend(report.estimates.iter().map(|(l, e)| Row {
        value: Some(e.mean),
        stderr: Some(e.stderr),
        n_samples: Some(e.n_samples),
        seed: Some(e.seed),
        ..Row::new("estimate", l)
    }));
    out.extend(report.values.iter().map(|(l, v)| Row { value: Some(*v), ..Row::new("value", l) }));
    out.extend(report.checks.iter().map(|c| Row { passed: Some(c.passed), ..Row::new("check", &c.label).with_text(&c.detail) }));
    out
}

pub fn write_json_lines<W: Write>(rows: &[Row], mut w: W) -> io::Result<()> {
    for r in rows {
        let mut fields = vec![format!("\"kind\":{}", json_str(r.kind)), format!("\"label\":{}", json_str(&r.label))];
        let mut real = |name: &str, x: Option<f64>| {
            if let Some(x) = x {
                let v = if x.is_finite() { fmt_real(x) } else { json_str(&fmt_real(x)) };
                fields.push(format!("\"{name}\":{v}"));
            }
        };
        real("value", r.value);
        real("stderr", r.stderr);
        if let Some(n) = r.n_samples {
            fields.push(format!("\"n_samples\":{n}"));
        }
        if let Some(s) = r.seed {
            fields.push(format!("\"seed\":{s}"));
        }
        if let Some(p) = r.passed {
            fields.push(format!("\"passed\":{p}"));
        }
        if let Some(t) = &r.text {
            fields.push(format!("\"text\":{}", json_str(t)));
        }
        writeln!(w, "{{{}}}", fields.join(","))?;
    }
    Ok(())
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

pub fn write_csv<W: Write>(rows: &[Row], w: W) -> io::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(COLUMNS)?;
    for r in rows {
        wr.write_record(r.cells())?;
    }
    wr.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use hgibbs::McEstimate;

    fn sample() -> ExperimentReport {
        let mut r = ExperimentReport::new("demo");
        r.echo("k", 2);
        r.estimate("p", McEstimate { mean: 0.1, stderr: 1e-3, n_samples: 10, seed: 4 });
        r.value("D", f64::INFINITY);
        r.value("nan", f64::NAN);
        r.check("ok", true, "detail with \"quotes\", commas");
        r
    }

    #[test]
    fn reals_have_seventeen_digits() {
        assert_eq!(fmt_real(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_real(0.1).parse::<f64>().unwrap(), 0.1);
        assert_eq!(fmt_real(-f64::INFINITY), "-inf");
    }

    #[test]
    fn json_lines_are_valid_json() {
        let rows = rows(&sample(), &Meta { version: "0", seed: 4, threads: 1 });
        let mut buf = Vec::new();
        write_json_lines(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), rows.len());
        for line in text.lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            assert!(v["kind"].is_string());
        }
        assert!(text.contains("\"value\":\"inf\""));
        assert!(text.contains("\"value\":\"NaN\""));
    }

    #[test]
    fn csv_quotes_awkward_text() {
        let rows = rows(&sample(), &Meta { version: "0", seed: 4, threads: 1 });
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let mut rd = csv::Reader::from_reader(buf.as_slice());
        let recs: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
        assert_eq!(recs.len(), rows.len());
        assert_eq!(&recs.last().unwrap()[7], "detail with \"quotes\", commas");
    }
}
