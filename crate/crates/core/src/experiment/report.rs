//! CSV traces, the summary table and the paired comparison.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::solver::{Method, RunRecord};

pub const TRACE_HEADER: [&str; 12] = [
    "run_id",
    "estimator",
    "seed",
    "t",
    "loss",
    "eta",
    "gamma",
    "boosted",
    "k_t",
    "lmo_calls_cum",
    "grad_samples_cum",
    "gap",
];

pub const SUMMARY_HEADER: [&str; 10] = [
    "run_id",
    "estimator",
    "method",
    "seed",
    "iterations",
    "final_loss",
    "final_gap",
    "boosting_percentage",
    "total_lmo_calls",
    "total_samples",
];

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_float(v: Option<f64>) -> String {
    v.map(float).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse {
            line,
            message: format!("{other:?}"),
        },
    }
}

pub fn write_trace<W: Write>(w: W, run_id: &str, estimator: &str, seed: u64, rec: &RunRecord) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TRACE_HEADER).map_err(csv_err)?;
    for r in &rec.rows {
        out.write_record([
            run_id.to_string(),
            estimator.to_string(),
            seed.to_string(),
            r.t.to_string(),
            float(r.loss),
            float(r.eta),
            float(r.gamma),
            u8::from(r.boosted).to_string(),
            r.lmo_calls.to_string(),
            r.lmo_calls_cum.to_string(),
            r.grad_samples_cum.to_string(),
            opt_float(r.gap),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub run_id: String,
    pub estimator: String,
    pub method: Method,
    pub seed: u64,
    pub iterations: usize,
    pub final_loss: f64,
    pub final_gap: Option<f64>,
    pub boosting_percentage: f64,
    pub total_lmo_calls: u64,
    pub total_samples: u64,
}

pub fn write_summary<W: Write>(w: W, rows: &[SummaryRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SUMMARY_HEADER).map_err(csv_err)?;
    for r in rows {
        out.write_record([
            r.run_id.clone(),
            r.estimator.clone(),
            r.method.name().to_string(),
            r.seed.to_string(),
            r.iterations.to_string(),
            float(r.final_loss),
            opt_float(r.final_gap),
            float(r.boosting_percentage),
            r.total_lmo_calls.to_string(),
            r.total_samples.to_string(),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_summary<R: Read>(r: R) -> Result<Vec<SummaryRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.iter().ne(SUMMARY_HEADER) {
        return Err(Error::Parse {
            line: 1,
            message: format!("unexpected summary header `{}`", header.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let bad = |what: &str| Error::Parse {
            line,
            message: format!("bad {what}"),
        };
        let f = |i: usize| -> Result<f64> { rec[i].parse().map_err(|_| bad(SUMMARY_HEADER[i])) };
        let u = |i: usize| -> Result<u64> { rec[i].parse().map_err(|_| bad(SUMMARY_HEADER[i])) };
        let method = match &rec[2] {
            "bsfw" => Method::Bsfw,
            "sfw" => Method::Sfw,
            _ => return Err(bad("method")),
        };
        rows.push(SummaryRow {
            run_id: rec[0].to_string(),
            estimator: rec[1].to_string(),
            method,
            seed: u(3)?,
            iterations: u(4)? as usize,
            final_loss: f(5)?,
            final_gap: if rec[6].is_empty() { None } else { Some(f(6)?) },
            boosting_percentage: f(7)?,
            total_lmo_calls: u(8)?,
            total_samples: u(9)?,
        });
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorComparison {
    pub estimator: String,
    pub pairs: usize,
    pub bsfw_median_loss: f64,
    pub sfw_median_loss: f64,
    /// Seeds where BSFW ends strictly lower.
    pub bsfw_wins: usize,
    pub ties: usize,
    pub mean_boosting_percentage: f64,
    /// BSFW did not win a majority of seeds.
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub estimators: Vec<EstimatorComparison>,
}

impl Comparison {
    pub fn total_wins(&self) -> usize {
        self.estimators.iter().map(|e| e.bsfw_wins).sum()
    }

    pub fn total_pairs(&self) -> usize {
        self.estimators.iter().map(|e| e.pairs).sum()
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Pairs BSFW and SFW rows by (estimator, seed). Every pair must exist and
/// must have consumed the same number of gradient samples.
pub fn compare(rows: &[SummaryRow]) -> Result<Comparison> {
    if rows.is_empty() {
        return Err(Error::Invariant("empty summary".into()));
    }
    let mut groups: BTreeMap<&str, BTreeMap<u64, [Option<&SummaryRow>; 2]>> = BTreeMap::new();
    for r in rows {
        let slot = match r.method {
            Method::Bsfw => 0,
            Method::Sfw => 1,
        };
        let entry = groups.entry(&r.estimator).or_default().entry(r.seed).or_default();
        if entry[slot].replace(r).is_some() {
            return Err(Error::Invariant(format!("duplicate row `{}`", r.run_id)));
        }
    }
    let mut estimators = Vec::new();
    for (name, seeds) in groups {
        let mut b = Vec::new();
        let mut s = Vec::new();
        let mut pct = Vec::new();
        let (mut wins, mut ties) = (0, 0);
        for (seed, pair) in seeds {
            let [Some(rb), Some(rs)] = pair else {
                return Err(Error::Invariant(format!("unmatched pair for {name}, seed {seed}")));
            };
            if rb.total_samples != rs.total_samples {
                return Err(Error::Invariant(format!(
                    "{name}, seed {seed}: budgets differ ({} vs {})",
                    rb.total_samples, rs.total_samples
                )));
            }
            if rb.final_loss < rs.final_loss {
                wins += 1;
            } else if rb.final_loss == rs.final_loss {
                ties += 1;
            }
            b.push(rb.final_loss);
            s.push(rs.final_loss);
            pct.push(rb.boosting_percentage);
        }
        let pairs = b.len();
        estimators.push(EstimatorComparison {
            estimator: name.to_string(),
            pairs,
            bsfw_median_loss: median(&b),
            sfw_median_loss: median(&s),
            bsfw_wins: wins,
            ties,
            mean_boosting_percentage: pct.iter().sum::<f64>() / pairs as f64,
            flagged: 2 * wins <= pairs,
        });
    }
    Ok(Comparison { estimators })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(est: &str, method: Method, seed: u64, loss: f64) -> SummaryRow {
        SummaryRow {
            run_id: format!("{est}-{}-{seed}", method.name()),
            estimator: est.into(),
            method,
            seed,
            iterations: 10,
            final_loss: loss,
            final_gap: None,
            boosting_percentage: 50.0,
            total_lmo_calls: 30,
            total_samples: 100,
        }
    }

    #[test]
    fn wins_and_medians() {
        let mut rows = Vec::new();
        for seed in 0..5 {
            let b = if seed < 4 { 0.5 } else { 0.9 };
            rows.push(row("saga", Method::Bsfw, seed, b));
            rows.push(row("saga", Method::Sfw, seed, 0.8));
        }
        let c = compare(&rows).unwrap();
        let e = &c.estimators[0];
        assert_eq!(e.bsfw_wins, 4);
        assert_eq!(e.pairs, 5);
        assert_eq!(e.bsfw_median_loss, 0.5);
        assert_eq!(e.sfw_median_loss, 0.8);
        assert!(!e.flagged);
    }

    #[test]
    fn errors() {
        assert!(compare(&[]).is_err());
        let lone = [row("saga", Method::Bsfw, 0, 1.0)];
        assert!(matches!(compare(&lone), Err(Error::Invariant(_))));
        let mut uneven = vec![row("saga", Method::Bsfw, 0, 1.0), row("saga", Method::Sfw, 0, 1.0)];
        uneven[1].total_samples = 7;
        assert!(compare(&uneven).is_err());
    }

    #[test]
    fn median_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0, 4.0]), 2.5);
    }

    #[test]
    fn summary_round_trip() {
        let mut rows = vec![row("sarah", Method::Sfw, 3, 0.125)];
        rows[0].final_gap = Some(1e-3);
        let mut buf = Vec::new();
        write_summary(&mut buf, &rows).unwrap();
        assert_eq!(read_summary(buf.as_slice()).unwrap(), rows);
        assert!(read_summary("a,b\n1,2\n".as_bytes()).is_err());
    }
}
