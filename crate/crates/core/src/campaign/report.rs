use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::{CampaignConfig, Suite};
use crate::bosonic::SweepRow;
use crate::error::{Error, Result};
use crate::theorems::{Aux, CheckReport};

pub const SCHEMA_VERSION: u32 = 1;

/// Non-finite values are written as the strings `"inf"`, `"-inf"`, `"nan"`.
mod fnum {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_str(super::non_finite_label(*x))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => super::parse_non_finite(&t).ok_or_else(|| de::Error::custom(format!("bad number {t:?}"))),
        }
    }
}

fn non_finite_label(x: f64) -> &'static str {
    if x.is_nan() {
        "nan"
    } else if x > 0.0 {
        "inf"
    } else {
        "-inf"
    }
}

fn parse_non_finite(t: &str) -> Option<f64> {
    match t {
        "nan" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => None,
    }
}

fn num_value(x: f64) -> Value {
    if x.is_finite() {
        Value::from(x)
    } else {
        Value::from(non_finite_label(x))
    }
}

fn aux_value(a: &Aux) -> Value {
    match a {
        Aux::Num(x) => num_value(*x),
        Aux::List(v) => Value::Array(v.iter().map(|&x| num_value(x)).collect()),
        Aux::Flag(b) => Value::Bool(*b),
        Aux::Text(s) => Value::String(s.clone()),
    }
}

/// One evaluated check. All logarithmic quantities are in bits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub suite: Suite,
    pub check: String,
    /// `None` for the fixed instances every run evaluates.
    pub trial: Option<u64>,
    pub seed: u64,
    pub dims: Vec<usize>,
    #[serde(with = "fnum")]
    pub lhs_bits: f64,
    #[serde(with = "fnum")]
    pub rhs_bits: f64,
    #[serde(with = "fnum")]
    pub slack_bits: f64,
    pub holds: bool,
    #[serde(with = "fnum")]
    pub tol: f64,
    pub aux: BTreeMap<String, Value>,
}

impl Row {
    pub fn from_report(suite: Suite, seed: u64, trial: Option<u64>, dims: &[usize], rep: &CheckReport) -> Self {
        Self {
            suite,
            check: rep.name.clone(),
            trial,
            seed,
            dims: dims.to_vec(),
            lhs_bits: rep.lhs,
            rhs_bits: rep.rhs,
            slack_bits: rep.slack,
            holds: rep.holds,
            tol: rep.tol,
            aux: rep.aux.iter().map(|(k, v)| (k.clone(), aux_value(v))).collect(),
        }
    }

    /// A trial that could not be evaluated.
    pub fn error(suite: Suite, seed: u64, trial: Option<u64>, dims: &[usize], err: &Error) -> Self {
        let mut aux = BTreeMap::new();
        aux.insert("error".to_string(), Value::String(err.to_string()));
        Self {
            suite,
            check: "error".into(),
            trial,
            seed,
            dims: dims.to_vec(),
            lhs_bits: f64::NAN,
            rhs_bits: f64::NAN,
            slack_bits: f64::NAN,
            holds: false,
            tol: 0.0,
            aux,
        }
    }

    /// Re-evaluates the pass flag against `tol`; recorded values are untouched.
    pub fn retolerate(&mut self, tol: f64) {
        self.tol = tol;
        self.holds = self.slack_bits >= -tol;
    }

    pub fn aux_num(&self, key: &str) -> Option<f64> {
        self.aux.get(key).and_then(Value::as_f64)
    }

    pub fn aux_flag(&self, key: &str) -> Option<bool> {
        self.aux.get(key).and_then(Value::as_bool)
    }

    fn dims_label(&self) -> String {
        self.dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("x")
    }

    /// How to rerun the trial that produced this row.
    pub fn reproducer(&self, config: &CampaignConfig) -> String {
        let mut cmd = format!("qrecover verify {} --seed {}", self.suite, self.seed);
        if let Some(pool) = &config.dims {
            let pool: Vec<String> = pool.iter().map(|d| d.to_string()).collect();
            write!(cmd, " --dims {}", pool.join(",")).ok();
        }
        if let Some(trials) = config.trials {
            write!(cmd, " --trials {trials}").ok();
        }
        match self.trial {
            Some(t) => write!(cmd, " --trial {t}").ok(),
            None => None,
        };
        format!(
            "suite={} check={} trial={} seed={} dims=[{}]\n  rerun: {cmd}",
            self.suite,
            self.check,
            self.trial.map_or("fixed".to_string(), |t| t.to_string()),
            self.seed,
            self.dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(", "),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub suite: Suite,
    pub checks: usize,
    pub passed: usize,
    pub failed: usize,
    /// Smallest `lhs - rhs` over the suite's rows, in bits.
    #[serde(with = "fnum")]
    pub worst_slack_bits: f64,
    pub worst_check: String,
    pub worst_trial: Option<u64>,
    /// Rows whose quadrature met near-zero node fidelities.
    pub low_confidence: usize,
}

pub fn summarize(rows: &[Row]) -> Vec<SuiteSummary> {
    let mut by_suite: BTreeMap<Suite, SuiteSummary> = BTreeMap::new();
    for row in rows {
        let s = by_suite.entry(row.suite).or_insert_with(|| SuiteSummary {
            suite: row.suite,
            checks: 0,
            passed: 0,
            failed: 0,
            worst_slack_bits: f64::INFINITY,
            worst_check: String::new(),
            worst_trial: None,
            low_confidence: 0,
        });
        s.checks += 1;
        if row.holds {
            s.passed += 1;
        } else {
            s.failed += 1;
        }
        // NaN is the worst possible slack
        let worse = row.slack_bits.is_nan() && !s.worst_slack_bits.is_nan() || row.slack_bits < s.worst_slack_bits;
        if worse || s.worst_check.is_empty() {
            s.worst_slack_bits = row.slack_bits;
            s.worst_check = row.check.clone();
            s.worst_trial = row.trial;
        }
        if row.aux_flag("low_confidence") == Some(true) {
            s.low_confidence += 1;
        }
    }
    by_suite.into_values().collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub all_pass: bool,
    pub configs: Vec<CampaignConfig>,
    pub summary: Vec<SuiteSummary>,
    pub rows: Vec<Row>,
}

impl Report {
    pub fn new(configs: Vec<CampaignConfig>, rows: Vec<Row>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            all_pass: rows.iter().all(|r| r.holds),
            configs,
            summary: summarize(&rows),
            rows,
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(|r| !r.holds)
    }

    /// Deterministic JSON: sorted keys, every float with 17 significant digits.
    pub fn to_json(&self) -> Result<String> {
        let value = serde_json::to_value(self)?;
        let mut out = String::new();
        write_value(&mut out, &value, 0);
        out.push('\n');
        Ok(out)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let report: Self = serde_json::from_str(s)?;
        if report.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidConfig(format!(
                "report schema version {} is not {SCHEMA_VERSION}",
                report.schema_version
            )));
        }
        Ok(report)
    }

    /// Columns `suite, check, trial, seed, dims, lhs_bits, rhs_bits,
    /// slack_bits, holds, aux`, preceded by a `# schema_version` line and
    /// followed by `#`-prefixed summary lines.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["suite", "check", "trial", "seed", "dims", "lhs_bits", "rhs_bits", "slack_bits", "holds", "aux"])
            .map_err(csv_err)?;
        for r in &self.rows {
            let aux = serde_json::to_string(&r.aux)?;
            w.write_record([
                r.suite.name().to_string(),
                r.check.clone(),
                r.trial.map_or(String::new(), |t| t.to_string()),
                r.seed.to_string(),
                r.dims_label(),
                float17(r.lhs_bits),
                float17(r.rhs_bits),
                float17(r.slack_bits),
                r.holds.to_string(),
                aux,
            ])
            .map_err(csv_err)?;
        }
        let body = String::from_utf8(w.into_inner().map_err(|e| Error::InvalidConfig(e.to_string()))?)
            .expect("csv output is utf-8");
        let mut out = format!("# schema_version: {SCHEMA_VERSION}\n{body}");
        for s in &self.summary {
            writeln!(
                out,
                "# summary suite={} checks={} passed={} failed={} worst_slack_bits={} worst_check={} worst_trial={} low_confidence={}",
                s.suite,
                s.checks,
                s.passed,
                s.failed,
                float17(s.worst_slack_bits),
                s.worst_check,
                s.worst_trial.map_or("fixed".into(), |t| t.to_string()),
                s.low_confidence
            )
            .ok();
        }
        Ok(out)
    }
}

/// Concatenates reports, keeping each suite's rows together in suite order.
pub fn merge(reports: Vec<Report>) -> Result<Report> {
    if reports.is_empty() {
        return Err(Error::InvalidConfig("nothing to merge".into()));
    }
    let mut configs = Vec::new();
    let mut rows = Vec::new();
    for r in reports {
        if r.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidConfig(format!("cannot merge schema version {}", r.schema_version)));
        }
        configs.extend(r.configs);
        rows.extend(r.rows);
    }
    rows.sort_by_key(|r| r.suite);
    Ok(Report::new(configs, rows))
}

/// Bosonic sweep CSV: `kind, parameter, n_max, guard, lhs, rhs, slack, leakage`.
pub fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["kind", "parameter", "n_max", "guard", "lhs", "rhs", "slack", "leakage"])
        .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.kind.clone(),
            r.parameter.clone(),
            r.n_max.to_string(),
            r.guard.to_string(),
            float17(r.lhs),
            float17(r.rhs),
            float17(r.slack),
            float17(r.leakage),
        ])
        .map_err(csv_err)?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| Error::InvalidConfig(e.to_string()))?)
        .expect("csv output is utf-8");
    Ok(format!("# schema_version: {SCHEMA_VERSION}\n{body}"))
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidConfig(format!("csv: {e}"))
}

pub fn float17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        non_finite_label(x).to_string()
    }
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

/// Pretty printer that keeps rows and short arrays on one line.
fn write_value(out: &mut String, v: &Value, level: usize) {
    match v {
        Value::Object(map) if level < 2 => {
            out.push_str("{\n");
            let n = map.len();
            for (i, (k, val)) in map.iter().enumerate() {
                indent(out, level + 1);
                write!(out, "{}: ", Value::String(k.clone())).ok();
                write_value(out, val, level + 1);
                out.push_str(if i + 1 < n { ",\n" } else { "\n" });
            }
            indent(out, level);
            out.push('}');
        }
        Value::Array(items) if level < 2 && items.iter().any(|x| x.is_object()) => {
            out.push_str("[\n");
            let n = items.len();
            for (i, val) in items.iter().enumerate() {
                indent(out, level + 1);
                write_value(out, val, level + 2);
                out.push_str(if i + 1 < n { ",\n" } else { "\n" });
            }
            indent(out, level);
            out.push(']');
        }
        Value::Object(map) => {
            out.push('{');
            for (i, (k, val)) in map.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write!(out, "{}: ", Value::String(k.clone())).ok();
                write_value(out, val, level);
            }
            out.push('}');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, val) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_value(out, val, level);
            }
            out.push(']');
        }
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&float17(n.as_f64().expect("f64 number")));
            } else {
                write!(out, "{n}").ok();
            }
        }
        other => {
            write!(out, "{other}").ok();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_rows() -> Vec<Row> {
        let a = CheckReport::new("a", 1.0, 0.5, 1e-8).with("fidelity", 0.25).with("flag", true);
        let b = CheckReport::new("b", 0.0, f64::INFINITY, 1e-8).with("list", vec![1.0, f64::NAN]);
        vec![
            Row::from_report(Suite::Recovery, 3, Some(0), &[2, 3], &a),
            Row::from_report(Suite::Recovery, 3, Some(1), &[2], &b),
            Row::from_report(Suite::EntropyGain, 3, None, &[2], &a),
        ]
    }

    #[test]
    fn json_round_trip_preserves_values() {
        let report = Report::new(vec![CampaignConfig::default()], sample_rows());
        let s = report.to_json().unwrap();
        assert!(s.contains("1.0000000000000000e0"), "{s}");
        assert!(s.contains("\"inf\""));
        let back = Report::from_json(&s).unwrap();
        assert_eq!(back.rows.len(), 3);
        assert_eq!(back.rows[0], report.rows[0]);
        assert!(back.rows[1].rhs_bits.is_infinite());
        assert_eq!(back.to_json().unwrap(), s);
    }

    #[test]
    fn summary_counts_and_worst() {
        let report = Report::new(vec![], sample_rows());
        assert!(!report.all_pass);
        let rec = report.summary.iter().find(|s| s.suite == Suite::Recovery).unwrap();
        assert_eq!((rec.checks, rec.passed, rec.failed), (2, 1, 1));
        assert_eq!(rec.worst_check, "b");
        assert_eq!(rec.worst_trial, Some(1));
        assert!(rec.worst_slack_bits.is_infinite() && rec.worst_slack_bits < 0.0);
    }

    #[test]
    fn csv_layout() {
        let report = Report::new(vec![], sample_rows());
        let csv = report.to_csv().unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "# schema_version: 1");
        assert_eq!(
            lines.next().unwrap(),
            "suite,check,trial,seed,dims,lhs_bits,rhs_bits,slack_bits,holds,aux"
        );
        assert!(lines.next().unwrap().starts_with("recovery,a,0,3,2x3,1.0000000000000000e0,"));
        assert!(csv.contains("# summary suite=recovery checks=2 passed=1 failed=1"));
    }

    #[test]
    fn merge_groups_suites() {
        let r1 = Report::new(vec![CampaignConfig::default()], sample_rows());
        let r2 = Report::new(vec![CampaignConfig::default()], sample_rows());
        let m = merge(vec![r1, r2]).unwrap();
        assert_eq!(m.rows.len(), 6);
        assert_eq!(m.configs.len(), 2);
        assert!(m.rows[..2].iter().all(|r| r.suite == Suite::EntropyGain));
        assert!(merge(vec![]).is_err());
    }

    #[test]
    fn retolerate_keeps_values() {
        let mut row = sample_rows().remove(0);
        let before = row.slack_bits;
        row.retolerate(0.0);
        assert_eq!(row.slack_bits, before);
        assert!(row.holds);
    }
}
