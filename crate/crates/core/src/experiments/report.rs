//! Scenario reports: rows, assertions and their CSV/JSON forms.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

/// JSON has no infinities or NaN, so non-finite values are written as the
/// strings `inf`, `-inf` and `NaN`.
mod float_text {
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    fn parse<E: serde::de::Error>(r: Repr) -> Result<f64, E> {
        match r {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => t.parse().map_err(|_| E::custom(format!("not a number: {t:?}"))),
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&v.to_string())
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        parse(Repr::deserialize(d)?)
    }

    pub mod vec {
        use super::*;
        use serde::ser::SerializeSeq;

        pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
            struct One(f64);
            impl serde::Serialize for One {
                fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                    super::serialize(&self.0, s)
                }
            }
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for &x in v {
                seq.serialize_element(&One(x))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
            Vec::<Repr>::deserialize(d)?.into_iter().map(parse).collect()
        }
    }
}

/// One measured value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub case: String,
    pub family: String,
    pub dim: usize,
    pub half_width: f64,
    pub cell_exponent: u32,
    pub metric: String,
    #[serde(with = "float_text")]
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    AtMost,
    AtLeast,
}

impl Relation {
    pub fn holds(&self, observed: f64, threshold: f64) -> bool {
        match self {
            Relation::AtMost => observed <= threshold,
            Relation::AtLeast => observed >= threshold,
        }
    }
}

/// A pass/fail check computed from rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    #[serde(with = "float_text")]
    pub observed: f64,
    pub relation: Relation,
    #[serde(with = "float_text")]
    pub threshold: f64,
    pub pass: bool,
}

impl Assertion {
    pub fn new(name: impl Into<String>, observed: f64, relation: Relation, threshold: f64) -> Self {
        Assertion {
            name: name.into(),
            observed,
            relation,
            threshold,
            pass: relation.holds(observed, threshold),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: String,
    pub count: usize,
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

/// Values of one `(case, family, metric)` series along the refinement or
/// domain axis, with successive ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    pub case: String,
    pub family: String,
    pub metric: String,
    #[serde(with = "float_text::vec")]
    pub values: Vec<f64>,
    /// `1` where both neighbours are zero.
    #[serde(with = "float_text::vec")]
    pub factors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: String,
    pub seed: u64,
    pub rows: Vec<Row>,
    pub assertions: Vec<Assertion>,
    pub errors: Vec<String>,
    pub metrics: Vec<MetricSummary>,
    pub trends: Vec<Trend>,
    pub pass: bool,
}

impl Report {
    pub fn new(scenario: &str, seed: u64, rows: Vec<Row>, mut assertions: Vec<Assertion>, errors: Vec<String>) -> Self {
        assertions.push(Assertion::new("case-errors", errors.len() as f64, Relation::AtMost, 0.0));
        let pass = assertions.iter().all(|a| a.pass);
        let metrics = summarize(&rows);
        let trends = trends(&rows);
        Report {
            scenario: scenario.to_string(),
            seed,
            rows,
            assertions,
            errors,
            metrics,
            trends,
            pass,
        }
    }

    pub fn assertion(&self, name: &str) -> Option<&Assertion> {
        self.assertions.iter().find(|a| a.name == name)
    }

    /// Rows with the given metric, in report order.
    pub fn values(&self, metric: &str) -> Vec<f64> {
        self.rows.iter().filter(|r| r.metric == metric).map(|r| r.value).collect()
    }

    pub fn failures(&self) -> Vec<&Assertion> {
        self.assertions.iter().filter(|a| !a.pass).collect()
    }

    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()
    }

    pub fn write_json(&self, path: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        fs::write(path, text)
    }

    /// Writes `<scenario>.csv` and `<scenario>.json` into `dir`.
    pub fn write_to(&self, dir: &Path, csv: bool, json: bool) -> std::io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut out = Vec::new();
        if csv {
            let p = dir.join(format!("{}.csv", self.scenario));
            self.write_csv(&p)?;
            out.push(p);
        }
        if json {
            let p = dir.join(format!("{}.json", self.scenario));
            self.write_json(&p)?;
            out.push(p);
        }
        Ok(out)
    }

    /// One line per assertion.
    pub fn render(&self) -> String {
        let mut s = format!(
            "{} (seed {}): {}\n",
            self.scenario,
            self.seed,
            if self.pass { "PASS" } else { "FAIL" }
        );
        for a in &self.assertions {
            let rel = match a.relation {
                Relation::AtMost => "<=",
                Relation::AtLeast => ">=",
            };
            s.push_str(&format!(
                "  [{}] {}: {:.6e} {} {:.6e}\n",
                if a.pass { "ok" } else { "FAIL" },
                a.name,
                a.observed,
                rel,
                a.threshold
            ));
        }
        for e in &self.errors {
            s.push_str(&format!("  error: {e}\n"));
        }
        s
    }
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn summarize(rows: &[Row]) -> Vec<MetricSummary> {
    let mut by: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in rows {
        if r.value.is_finite() {
            by.entry(&r.metric).or_default().push(r.value);
        }
    }
    by.into_iter()
        .map(|(m, mut v)| {
            v.sort_by(f64::total_cmp);
            MetricSummary {
                metric: m.to_string(),
                count: v.len(),
                min: v[0],
                median: median(&v),
                max: v[v.len() - 1],
            }
        })
        .collect()
}

/// `(half_width bits, cell_exponent, value)` per `(case, family, metric)`.
type Series<'a> = BTreeMap<(&'a str, &'a str, &'a str), Vec<(u64, u32, f64)>>;

fn trends(rows: &[Row]) -> Vec<Trend> {
    let mut by: Series = BTreeMap::new();
    for r in rows {
        by.entry((&r.case, &r.family, &r.metric))
            .or_default()
            .push((r.half_width.to_bits(), r.cell_exponent, r.value));
    }
    by.into_iter()
        .filter(|(_, v)| v.len() > 1)
        .map(|((case, family, metric), mut v)| {
            v.sort_by(|a, b| f64::from_bits(a.0).total_cmp(&f64::from_bits(b.0)).then(a.1.cmp(&b.1)));
            let values: Vec<f64> = v.iter().map(|t| t.2).collect();
            let factors = values
                .windows(2)
                .map(|w| if w[0] == 0.0 && w[1] == 0.0 { 1.0 } else { w[1] / w[0] })
                .collect();
            Trend {
                case: case.to_string(),
                family: family.to_string(),
                metric: metric.to_string(),
                values,
                factors,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(case: &str, l: f64, metric: &str, value: f64) -> Row {
        Row {
            case: case.into(),
            family: "t0".into(),
            dim: 1,
            half_width: l,
            cell_exponent: 4,
            metric: metric.into(),
            value,
        }
    }

    #[test]
    fn verdict_and_summaries() {
        let rows = vec![
            row("a", 2.0, "x", 2.0),
            row("a", 1.0, "x", 1.0),
            row("a", 4.0, "x", 8.0),
            row("b", 1.0, "y", 5.0),
        ];
        let r = Report::new("demo", 1, rows, vec![Assertion::new("small", 0.5, Relation::AtMost, 1.0)], vec![]);
        assert!(r.pass);
        let t = &r.trends[0];
        assert_eq!(t.values, vec![1.0, 2.0, 8.0]);
        assert_eq!(t.factors, vec![2.0, 4.0]);
        assert_eq!(r.metrics[0].median, 2.0);
        let bad = Report::new("demo", 1, vec![], vec![], vec!["boom".into()]);
        assert!(!bad.pass);
        assert!(bad.render().contains("error: boom"));
    }

    #[test]
    fn writes_csv_and_json() {
        let dir = tempfile::tempdir().unwrap();
        let r = Report::new("demo", 3, vec![row("a", 1.0, "x", 0.25)], vec![], vec![]);
        let files = r.write_to(dir.path(), true, true).unwrap();
        let csv = fs::read_to_string(&files[0]).unwrap();
        assert_eq!(
            csv.lines().next().unwrap(),
            "case,family,dim,half_width,cell_exponent,metric,value"
        );
        assert!(csv.contains("a,t0,1,1.0,4,x,0.25"));
        let back: Report = serde_json::from_str(&fs::read_to_string(&files[1]).unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn non_finite_values_survive_json() {
        let rows = vec![row("a", 1.0, "x", f64::INFINITY), row("a", 2.0, "x", 1.0)];
        let r = Report::new("demo", 0, rows, vec![Assertion::new("big", f64::INFINITY, Relation::AtMost, 1.0)], vec![]);
        let text = serde_json::to_string(&r).unwrap();
        let back: Report = serde_json::from_str(&text).unwrap();
        assert_eq!(back.rows[0].value, f64::INFINITY);
        assert_eq!(back.assertions[0].observed, f64::INFINITY);
        assert!(!back.pass);
    }
}
