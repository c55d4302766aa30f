//! Scalar summaries of an accuracy matrix.
//!
//! With `R[i][j]` the accuracy of the model trained through bucket `i` on
//! bucket `j`:
//!
//! | metric            | cells averaged          |
//! |-------------------|-------------------------|
//! | accuracy          | `i >= j`                |
//! | backward transfer | `i > j`                 |
//! | forward transfer  | `i < j`                 |
//! | in-domain         | `i == j`                |
//! | next-domain       | `j == i + 1`            |
//!
//! Backward transfer is the plain lower-triangle mean, not the
//! diagonal-subtracted variant. A metric that touches an absent cell is
//! itself absent.

use std::fmt;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::protocol::{AccuracyMatrix, ProtocolKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Accuracy,
    BackwardTransfer,
    ForwardTransfer,
    InDomain,
    NextDomain,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::Accuracy,
        Metric::BackwardTransfer,
        Metric::ForwardTransfer,
        Metric::InDomain,
        Metric::NextDomain,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::BackwardTransfer => "backward_transfer",
            Metric::ForwardTransfer => "forward_transfer",
            Metric::InDomain => "in_domain",
            Metric::NextDomain => "next_domain",
        }
    }

    /// Metrics published for a protocol. Streaming repurposes test sets as
    /// training data, so only the strictly-future metrics are meaningful.
    pub fn reported_for(kind: ProtocolKind) -> &'static [Metric] {
        match kind {
            ProtocolKind::Iid => &Metric::ALL,
            ProtocolKind::Streaming => &[Metric::NextDomain, Metric::ForwardTransfer],
        }
    }

    fn includes(self, row: usize, col: usize) -> bool {
        match self {
            Metric::Accuracy => row >= col,
            Metric::BackwardTransfer => row > col,
            Metric::ForwardTransfer => row < col,
            Metric::InDomain => row == col,
            Metric::NextDomain => col == row + 1,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Neumaier-compensated running sum.
#[derive(Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(self) -> f64 {
        self.sum + self.carry
    }
}

/// The five summaries of one matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub protocol: ProtocolKind,
    pub accuracy: Option<f64>,
    pub backward_transfer: Option<f64>,
    pub forward_transfer: Option<f64>,
    pub in_domain: Option<f64>,
    pub next_domain: Option<f64>,
}

impl MetricReport {
    pub fn get(&self, m: Metric) -> Option<f64> {
        match m {
            Metric::Accuracy => self.accuracy,
            Metric::BackwardTransfer => self.backward_transfer,
            Metric::ForwardTransfer => self.forward_transfer,
            Metric::InDomain => self.in_domain,
            Metric::NextDomain => self.next_domain,
        }
    }

    /// `key=value` lines, `NA` for absent metrics.
    pub fn render(&self) -> String {
        let mut out = format!("protocol={}\n", self.protocol);
        for m in Metric::ALL {
            let _ = writeln!(out, "{}={}", m, fmt_opt(self.get(m)));
        }
        out
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.6}"))
}

fn mean_over(r: &AccuracyMatrix, metric: Metric) -> Option<f64> {
    let n = r.size();
    let mut sum = CompensatedSum::default();
    let mut count = 0usize;
    for i in 0..n {
        for j in 0..n {
            if metric.includes(i, j) {
                sum.add(r.get(i, j)?);
                count += 1;
            }
        }
    }
    (count > 0).then(|| sum.total() / count as f64)
}

/// Summarizes one accuracy matrix.
pub fn compute_metrics(r: &AccuracyMatrix) -> Result<MetricReport> {
    if r.size() < 2 {
        return Err(Error::invalid("metrics need an accuracy matrix with N >= 2"));
    }
    let reported = Metric::reported_for(r.kind());
    let value = |m: Metric| if reported.contains(&m) { mean_over(r, m) } else { None };
    Ok(MetricReport {
        protocol: r.kind(),
        accuracy: value(Metric::Accuracy),
        backward_transfer: value(Metric::BackwardTransfer),
        forward_transfer: value(Metric::ForwardTransfer),
        in_domain: value(Metric::InDomain),
        next_domain: value(Metric::NextDomain),
    })
}

/// Mean and population standard deviation over seeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        let &first = values.first()?;
        let n = values.len() as f64;
        // Shifted by the first value so identical inputs give std exactly 0.
        let mut s = CompensatedSum::default();
        values.iter().for_each(|&v| s.add(v - first));
        let offset = s.total() / n;
        let mut sq = CompensatedSum::default();
        values
            .iter()
            .for_each(|&v| sq.add((v - first - offset) * (v - first - offset)));
        Some(Summary {
            mean: first + offset,
            std: (sq.total() / n).sqrt(),
        })
    }
}

/// Per-metric mean ± std across seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateReport {
    pub protocol: ProtocolKind,
    pub n_seeds: usize,
    pub summaries: Vec<(Metric, Option<Summary>)>,
}

impl AggregateReport {
    pub fn get(&self, m: Metric) -> Option<Summary> {
        self.summaries.iter().find(|(k, _)| *k == m).and_then(|(_, s)| *s)
    }

    pub fn render(&self) -> String {
        let mut out = format!("protocol={}\nn_seeds={}\n", self.protocol, self.n_seeds);
        for (m, s) in &self.summaries {
            let _ = writeln!(out, "{m}.mean={}", fmt_opt(s.map(|s| s.mean)));
            let _ = writeln!(out, "{m}.std={}", fmt_opt(s.map(|s| s.std)));
        }
        out
    }

    /// `cell,metric,mean,std` rows for the metrics reported by this protocol.
    pub fn csv_rows(&self, cell: &str) -> Vec<String> {
        Metric::reported_for(self.protocol)
            .iter()
            .map(|&m| {
                let s = self.get(m);
                format!(
                    "{cell},{m},{},{}",
                    fmt_opt(s.map(|s| s.mean)),
                    fmt_opt(s.map(|s| s.std))
                )
            })
            .collect()
    }
}

/// Header of the summary CSV.
pub const CSV_HEADER: &str = "cell,metric,mean,std";

/// Combines per-seed reports of a single protocol.
pub fn aggregate(reports: &[MetricReport]) -> Result<AggregateReport> {
    let first = reports
        .first()
        .ok_or_else(|| Error::invalid("aggregate needs at least one report"))?;
    if reports.iter().any(|r| r.protocol != first.protocol) {
        return Err(Error::invalid("cannot aggregate reports of different protocols"));
    }
    let summaries = Metric::ALL
        .iter()
        .map(|&m| {
            let values: Option<Vec<f64>> = reports.iter().map(|r| r.get(m)).collect();
            (m, values.and_then(|v| Summary::of(&v)))
        })
        .collect();
    Ok(AggregateReport {
        protocol: first.protocol,
        n_seeds: reports.len(),
        summaries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iid(rows: &[&[f64]]) -> AccuracyMatrix {
        AccuracyMatrix::from_rows(
            ProtocolKind::Iid,
            rows.iter().map(|r| r.iter().map(|&v| Some(v)).collect()).collect(),
        )
        .unwrap()
    }

    fn close(a: Option<f64>, b: f64) -> bool {
        a.is_some_and(|a| (a - b).abs() < 1e-12)
    }

    #[test]
    fn constant_matrix() {
        let ones = [1.0; 4];
        let r = compute_metrics(&iid(&[&ones, &ones, &ones, &ones])).unwrap();
        for m in Metric::ALL {
            assert_eq!(r.get(m), Some(1.0), "{m}");
        }
    }

    #[test]
    fn identity_matrix() {
        let r = compute_metrics(&iid(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]])).unwrap();
        assert!(close(r.in_domain, 1.0));
        assert!(close(r.next_domain, 0.0));
        assert!(close(r.accuracy, 0.5));
        assert!(close(r.backward_transfer, 0.0));
        assert!(close(r.forward_transfer, 0.0));
    }

    #[test]
    fn worked_three_by_three() {
        let r = compute_metrics(&iid(&[&[0.9, 0.8, 0.7], &[0.85, 0.9, 0.8], &[0.8, 0.85, 0.9]])).unwrap();
        assert!(close(r.in_domain, 0.9));
        assert!(close(r.next_domain, 0.8));
        assert!(close(r.accuracy, 5.2 / 6.0));
        assert!(close(r.backward_transfer, 2.5 / 3.0));
        assert!(close(r.forward_transfer, 2.3 / 3.0));
    }

    #[test]
    fn streaming_reports_only_future_metrics() {
        let mut m = AccuracyMatrix::new(ProtocolKind::Streaming, 3).unwrap();
        m.set(0, 1, 0.5).unwrap();
        m.set(0, 2, 0.25).unwrap();
        m.set(1, 2, 0.75).unwrap();
        let r = compute_metrics(&m).unwrap();
        assert!(close(r.next_domain, 0.625));
        assert!(close(r.forward_transfer, 0.5));
        assert_eq!((r.accuracy, r.backward_transfer, r.in_domain), (None, None, None));
    }

    #[test]
    fn absent_cell_makes_metric_absent() {
        let mut m = AccuracyMatrix::new(ProtocolKind::Streaming, 3).unwrap();
        m.set(0, 1, 0.5).unwrap();
        m.set(1, 2, 0.5).unwrap();
        let r = compute_metrics(&m).unwrap();
        assert!(close(r.next_domain, 0.5));
        assert_eq!(r.forward_transfer, None);
    }

    #[test]
    fn aggregate_examples() {
        let base = compute_metrics(&iid(&[&[0.9, 0.8], &[0.7, 0.6]])).unwrap();
        let one = aggregate(std::slice::from_ref(&base)).unwrap();
        for m in Metric::ALL {
            let s = one.get(m).unwrap();
            assert_eq!((s.mean, s.std), (base.get(m).unwrap(), 0.0));
        }

        let same = aggregate(&[base.clone(), base.clone(), base.clone()]).unwrap();
        assert!(Metric::ALL.iter().all(|&m| same.get(m).unwrap().std == 0.0));

        let mut hi = base.clone();
        let mut lo = base.clone();
        lo.next_domain = Some(0.8);
        hi.next_domain = Some(0.9);
        let s = aggregate(&[lo, hi]).unwrap().get(Metric::NextDomain).unwrap();
        assert!((s.mean - 0.85).abs() < 1e-12 && (s.std - 0.05).abs() < 1e-12);

        let mut other = base.clone();
        other.protocol = ProtocolKind::Streaming;
        assert!(aggregate(&[base, other]).is_err());
        assert!(aggregate(&[]).is_err());
    }

    #[test]
    fn csv_rows_follow_protocol() {
        let r = compute_metrics(&iid(&[&[1.0, 0.5], &[0.5, 1.0]])).unwrap();
        let agg = aggregate(&[r]).unwrap();
        let rows = agg.csv_rows("cellA");
        assert_eq!(rows.len(), 5);
        assert_eq!(rows[0], "cellA,accuracy,0.833333,0.000000");
    }
}
