//! Timestamped samples, equal-size time buckets, iid splits, feature files
//! and the synthetic rotating-class stream.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::seed;

/// One labeled, timestamped feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: u64,
    pub timestamp: i64,
    pub features: Vec<f64>,
    pub label: usize,
}

impl Sample {
    pub fn new(id: u64, timestamp: i64, features: Vec<f64>, label: usize) -> Self {
        Self {
            id,
            timestamp,
            features,
            label,
        }
    }

    pub fn dim(&self) -> usize {
        self.features.len()
    }
}

/// A contiguous time period of the stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Bucket {
    pub index: usize,
    pub samples: Vec<Sample>,
}

impl Bucket {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn first_timestamp(&self) -> Option<i64> {
        self.samples.first().map(|s| s.timestamp)
    }

    pub fn last_timestamp(&self) -> Option<i64> {
        self.samples.last().map(|s| s.timestamp)
    }
}

/// Time-ordered partition of a sample set into equal-size buckets.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalStream {
    pub buckets: Vec<Bucket>,
    pub dim: usize,
    pub num_classes: usize,
    /// Samples discarded from the tail so that every bucket has equal size.
    pub dropped: usize,
}

impl TemporalStream {
    pub fn len(&self) -> usize {
        self.buckets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buckets.is_empty()
    }

    pub fn bucket_size(&self) -> usize {
        self.buckets.first().map_or(0, Bucket::len)
    }

    /// Widens the label space, e.g. when a header declares classes that no
    /// sample happens to use.
    pub fn with_num_classes(mut self, num_classes: usize) -> Result<Self> {
        if num_classes < self.num_classes {
            return Err(Error::invalid(format!(
                "stream uses {} classes, cannot narrow to {num_classes}",
                self.num_classes
            )));
        }
        self.num_classes = num_classes;
        Ok(self)
    }

    /// One line per bucket: `index<TAB>first_ts<TAB>last_ts<TAB>count`.
    pub fn manifest(&self) -> String {
        let mut out = String::new();
        for b in &self.buckets {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}",
                b.index,
                b.first_timestamp().unwrap_or_default(),
                b.last_timestamp().unwrap_or_default(),
                b.len()
            );
        }
        out
    }

    /// All samples in stream order.
    pub fn samples(&self) -> impl Iterator<Item = &Sample> {
        self.buckets.iter().flat_map(|b| b.samples.iter())
    }
}

fn check_samples(samples: &[Sample]) -> Result<(usize, usize)> {
    let dim = samples.first().map_or(0, Sample::dim);
    if dim == 0 {
        return Err(Error::invalid("samples must have at least one feature"));
    }
    let mut max_label = 0;
    let mut ids = std::collections::HashSet::with_capacity(samples.len());
    for s in samples {
        if s.dim() != dim {
            return Err(Error::invalid(format!(
                "sample {} has dimension {}, expected {dim}",
                s.id,
                s.dim()
            )));
        }
        if s.features.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("sample {} has a non-finite feature", s.id)));
        }
        if !ids.insert(s.id) {
            return Err(Error::invalid(format!("duplicate sample id {}", s.id)));
        }
        max_label = max_label.max(s.label);
    }
    Ok((dim, max_label + 1))
}

/// `(bucket size, dropped)` for splitting `len` samples into `n` buckets.
pub fn bucket_plan(len: usize, n: usize) -> (usize, usize) {
    (len / n, len % n)
}

/// Sorts by `(timestamp, id)` and cuts the first `⌊len/n⌋·n` samples into
/// `n` contiguous buckets of equal size. The remainder is dropped.
pub fn bucketize(mut samples: Vec<Sample>, n: usize) -> Result<TemporalStream> {
    if n == 0 {
        return Err(Error::invalid("bucket count must be at least 1"));
    }
    if samples.len() < n {
        return Err(Error::invalid(format!(
            "{} samples cannot fill {n} buckets",
            samples.len()
        )));
    }
    let (dim, num_classes) = check_samples(&samples)?;
    samples.sort_by_key(|s| (s.timestamp, s.id));

    let (size, dropped) = bucket_plan(samples.len(), n);
    samples.truncate(size * n);

    let mut buckets = Vec::with_capacity(n);
    let mut rest = samples.into_iter();
    for index in 0..n {
        buckets.push(Bucket {
            index,
            samples: rest.by_ref().take(size).collect(),
        });
    }
    Ok(TemporalStream {
        buckets,
        dim,
        num_classes,
        dropped,
    })
}

/// Number of training samples `⌈fraction·len⌉` for an iid split.
pub fn train_count(len: usize, fraction: f64) -> usize {
    // Guard against 0.7 * 10 = 7.000000000000001 style products.
    let raw = fraction * len as f64;
    ((raw - 1e-9).ceil().max(0.0) as usize).min(len)
}

/// Seeded uniform train/test split of one bucket.
pub fn split_iid(bucket: &Bucket, train_fraction: f64, seed: u64) -> Result<(Vec<Sample>, Vec<Sample>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    if bucket.is_empty() {
        return Err(Error::invalid(format!("bucket {} is empty", bucket.index)));
    }
    let mut order: Vec<usize> = (0..bucket.len()).collect();
    order.shuffle(&mut seed::rng(seed, 0));
    let n_train = train_count(bucket.len(), train_fraction);
    let pick = |idx: &[usize]| idx.iter().map(|&i| bucket.samples[i].clone()).collect::<Vec<_>>();
    Ok((pick(&order[..n_train]), pick(&order[n_train..])))
}

/// Parameters of the synthetic stream whose class means rotate on a circle.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftConfig {
    pub num_classes: usize,
    pub dim: usize,
    pub num_buckets: usize,
    pub per_class: usize,
    pub radius: f64,
    /// Rotation of every class mean per bucket, in radians.
    pub drift: f64,
    /// Standard deviation of the isotropic noise.
    pub noise: f64,
    pub seed: u64,
}

impl Default for DriftConfig {
    fn default() -> Self {
        Self {
            num_classes: 4,
            dim: 8,
            num_buckets: 10,
            per_class: 200,
            radius: 1.0,
            drift: PI / 20.0,
            noise: 0.3,
            seed: 0,
        }
    }
}

impl DriftConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes == 0 || self.num_buckets == 0 || self.per_class == 0 {
            return Err(Error::invalid("class, bucket and per-class counts must be at least 1"));
        }
        if self.dim < 2 {
            return Err(Error::invalid("drift stream needs dimension >= 2"));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::invalid("radius must be finite and positive"));
        }
        if !(self.noise.is_finite() && self.noise > 0.0) {
            return Err(Error::invalid("noise must be finite and positive"));
        }
        if !(self.drift.is_finite() && self.drift >= 0.0) {
            return Err(Error::invalid("drift rate must be finite and non-negative"));
        }
        Ok(())
    }

    /// Class mean of `class` in bucket `bucket`.
    pub fn class_mean(&self, class: usize, bucket: usize) -> Vec<f64> {
        let angle = 2.0 * PI * class as f64 / self.num_classes as f64 + bucket as f64 * self.drift;
        let mut mean = vec![0.0; self.dim];
        mean[0] = self.radius * angle.cos();
        mean[1] = self.radius * angle.sin();
        mean
    }

    pub fn bucket_size(&self) -> usize {
        self.num_classes * self.per_class
    }
}

/// Draws the rotating-means stream. Within a bucket the class order is
/// shuffled, then ids and timestamps are assigned sequentially, so
/// `bucketize` on the flattened samples reproduces the same buckets.
pub fn generate_drift_stream(cfg: &DriftConfig) -> Result<TemporalStream> {
    cfg.validate()?;
    let mut rng = seed::rng(cfg.seed, 0);
    let noise = Normal::new(0.0, cfg.noise).map_err(|e| Error::invalid(e.to_string()))?;
    let size = cfg.bucket_size();

    let mut buckets = Vec::with_capacity(cfg.num_buckets);
    for t in 0..cfg.num_buckets {
        let mut draws = Vec::with_capacity(size);
        for c in 0..cfg.num_classes {
            let mean = cfg.class_mean(c, t);
            for _ in 0..cfg.per_class {
                let x: Vec<f64> = mean.iter().map(|m| m + noise.sample(&mut rng)).collect();
                draws.push((c, x));
            }
        }
        draws.shuffle(&mut rng);
        let samples = draws
            .into_iter()
            .enumerate()
            .map(|(pos, (label, features))| {
                let id = (t * size + pos) as u64;
                Sample::new(id, id as i64, features, label)
            })
            .collect();
        buckets.push(Bucket { index: t, samples });
    }
    Ok(TemporalStream {
        buckets,
        dim: cfg.dim,
        num_classes: cfg.num_classes,
        dropped: 0,
    })
}

/// Contents of a feature file.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFile {
    pub dim: usize,
    pub num_classes: usize,
    pub samples: Vec<Sample>,
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let rest = line.strip_prefix('#')?;
    let mut dim = None;
    let mut classes = None;
    for tok in rest.split_whitespace() {
        let (k, v) = tok.split_once('=')?;
        match k {
            "d" => dim = v.parse().ok(),
            "C" => classes = v.parse().ok(),
            _ => return None,
        }
    }
    Some((dim?, classes?))
}

pub(crate) fn parse_vector(text: &str) -> std::result::Result<Vec<f64>, String> {
    text.split(',')
        .map(|t| {
            let v: f64 = t.trim().parse().map_err(|_| format!("bad number `{}`", t.trim()))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format!("non-finite value `{}`", t.trim()))
            }
        })
        .collect()
}

/// Scales `v` to unit L2 norm; zero vectors are rejected.
pub fn l2_normalize(v: &mut [f64]) -> std::result::Result<(), String> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err("zero vector cannot be normalized".into());
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Ok(())
}

/// Parses feature-file text. `source_name` only labels diagnostics.
pub fn parse_feature_text(text: &str, normalize: bool, source_name: &str) -> Result<FeatureFile> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(source_name, 1, "missing `#d=<d> C=<C>` header"))?;
    let (dim, num_classes) =
        parse_header(header.trim()).ok_or_else(|| Error::parse(source_name, 1, format!("bad header `{header}`")))?;
    if dim == 0 || num_classes == 0 {
        return Err(Error::parse(source_name, 1, "d and C must be positive"));
    }

    let mut samples = Vec::new();
    let mut ids = std::collections::HashSet::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let err = |msg: String| Error::parse(source_name, lineno, msg);
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(err(format!("expected 4 tab-separated fields, found {}", fields.len())));
        }
        let id: u64 = fields[0]
            .trim()
            .parse()
            .map_err(|_| err(format!("bad id `{}`", fields[0])))?;
        let timestamp: i64 = fields[1]
            .trim()
            .parse()
            .map_err(|_| err(format!("bad timestamp `{}`", fields[1])))?;
        let label: usize = fields[2]
            .trim()
            .parse()
            .map_err(|_| err(format!("bad label `{}`", fields[2])))?;
        if label >= num_classes {
            return Err(err(format!("label {label} outside [0, {num_classes})")));
        }
        let mut features = parse_vector(fields[3]).map_err(err)?;
        if features.len() != dim {
            return Err(err(format!(
                "record has dimension {}, header says {dim}",
                features.len()
            )));
        }
        if normalize {
            l2_normalize(&mut features).map_err(err)?;
        }
        if !ids.insert(id) {
            return Err(err(format!("duplicate id {id}")));
        }
        samples.push(Sample::new(id, timestamp, features, label));
    }
    Ok(FeatureFile {
        dim,
        num_classes,
        samples,
    })
}

/// Reads a feature file from disk.
pub fn load_feature_file(path: impl AsRef<Path>, normalize: bool) -> Result<FeatureFile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_feature_text(&text, normalize, &path.display().to_string())
}

/// Renders samples in feature-file format. Reals use Rust's shortest
/// round-trip formatting.
pub fn format_feature_file(dim: usize, num_classes: usize, samples: &[Sample]) -> String {
    let mut out = format!("#d={dim} C={num_classes}\n");
    for s in samples {
        let feats: Vec<String> = s.features.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}\t{}\t{}\t{}", s.id, s.timestamp, s.label, feats.join(","));
    }
    out
}

/// Index-to-name table for reports; one `index<TAB>name` line per class.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClassNames(pub Vec<String>);

impl ClassNames {
    pub fn name(&self, label: usize) -> Option<&str> {
        self.0.get(label).map(String::as_str)
    }

    pub fn render(&self) -> String {
        self.0.iter().enumerate().fold(String::new(), |mut out, (i, n)| {
            let _ = writeln!(out, "{i}\t{n}");
            out
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(n: usize) -> Vec<Sample> {
        (0..n)
            .map(|i| Sample::new(i as u64, (n - i) as i64, vec![i as f64], i % 3))
            .collect()
    }

    #[test]
    fn bucketize_counts() {
        let s = bucketize(flat(1000), 1).unwrap();
        assert_eq!((s.len(), s.bucket_size(), s.dropped), (1, 1000, 0));

        let s = bucketize(flat(1000), 11).unwrap();
        assert_eq!((s.len(), s.bucket_size(), s.dropped), (11, 90, 10));
    }

    #[test]
    fn bucket_plan_at_full_scale() {
        // 11 equal buckets of 713,626 keep 7,849,886 samples; the 114
        // remaining of 7,850,000 downloads are not bucketed.
        assert_eq!(bucket_plan(7_849_886, 11), (713_626, 0));
        assert_eq!(11 * 713_626 + 114, 7_850_000);
        assert_eq!(bucket_plan(7_850_000, 11), (713_636, 4));
        assert_eq!(bucket_plan(1000, 11), (90, 10));
    }

    #[test]
    fn bucketize_sorts_and_breaks_ties_by_id() {
        let samples = vec![
            Sample::new(5, 2, vec![0.0], 0),
            Sample::new(3, 2, vec![0.0], 0),
            Sample::new(9, 1, vec![0.0], 0),
            Sample::new(1, 3, vec![0.0], 0),
        ];
        let s = bucketize(samples, 2).unwrap();
        let ids: Vec<u64> = s.samples().map(|x| x.id).collect();
        assert_eq!(ids, vec![9, 3, 5, 1]);
        assert_eq!(s.manifest(), "0\t1\t2\t2\n1\t2\t3\t2\n");
    }

    #[test]
    fn bucketize_rejects_bad_counts() {
        assert!(matches!(bucketize(flat(3), 0), Err(Error::InvalidArgument(_))));
        assert!(matches!(bucketize(flat(3), 4), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn split_sizes() {
        let b = Bucket {
            index: 0,
            samples: flat(3300),
        };
        let (tr, te) = split_iid(&b, 0.7, 1).unwrap();
        assert_eq!((tr.len(), te.len()), (2310, 990));

        let b = Bucket {
            index: 0,
            samples: flat(10),
        };
        let (tr, te) = split_iid(&b, 0.5, 99).unwrap();
        assert_eq!((tr.len(), te.len()), (5, 5));
        let mut ids: Vec<u64> = tr.iter().chain(&te).map(|s| s.id).collect();
        ids.sort_unstable();
        assert_eq!(ids, (0..10).collect::<Vec<_>>());
        assert_eq!(split_iid(&b, 0.5, 99).unwrap(), (tr, te));
    }

    #[test]
    fn split_errors() {
        let empty = Bucket {
            index: 0,
            samples: vec![],
        };
        assert!(split_iid(&empty, 0.7, 0).is_err());
        let b = Bucket {
            index: 0,
            samples: flat(4),
        };
        assert!(split_iid(&b, 1.0, 0).is_err());
        assert!(split_iid(&b, 0.0, 0).is_err());
    }

    #[test]
    fn feature_file_parsing() {
        let text = "#d=4 C=2\n1\t10\t0\t1,2,3,4\n2\t11\t1\t0,0,0,1\n3\t12\t1\t-1,0.5,2,3\n";
        let f = parse_feature_text(text, false, "mem").unwrap();
        assert_eq!(f.samples.len(), 3);
        assert!(f.samples.iter().all(|s| s.dim() == 4));

        let bad = "#d=4 C=2\n1\t10\t0\t1,2,3,4\n2\t11\t1\t0,0,1\n";
        match parse_feature_text(bad, false, "mem") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn feature_file_normalizes() {
        let f = parse_feature_text("#d=2 C=1\n0\t0\t0\t3,4\n", true, "mem").unwrap();
        let v = &f.samples[0].features;
        assert!((v[0] - 0.6).abs() < 1e-15 && (v[1] - 0.8).abs() < 1e-15);

        let zero = parse_feature_text("#d=2 C=1\n0\t0\t0\t0,0\n", true, "mem");
        assert!(matches!(zero, Err(Error::Parse { line: 2, .. })));
        let nan = parse_feature_text("#d=2 C=1\n0\t0\t0\tNaN,1\n", false, "mem");
        assert!(matches!(nan, Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn feature_file_round_trip() {
        let samples = vec![
            Sample::new(4, -3, vec![0.1, 1e-7, -2.5], 1),
            Sample::new(8, 9, vec![1.0 / 3.0, 0.0, 7.0], 0),
        ];
        let text = format_feature_file(3, 2, &samples);
        assert_eq!(parse_feature_text(&text, false, "mem").unwrap().samples, samples);
    }

    #[test]
    fn drift_stream_shape_and_determinism() {
        let cfg = DriftConfig {
            num_buckets: 3,
            per_class: 5,
            ..DriftConfig::default()
        };
        let a = generate_drift_stream(&cfg).unwrap();
        assert_eq!(a.len(), 3);
        assert_eq!(a.bucket_size(), 20);
        assert_eq!(a, generate_drift_stream(&cfg).unwrap());

        let rebuilt = bucketize(a.samples().cloned().collect(), 3).unwrap();
        assert_eq!(rebuilt.buckets, a.buckets);
    }

    #[test]
    fn drift_config_validation() {
        let bad = DriftConfig {
            dim: 1,
            ..DriftConfig::default()
        };
        assert!(generate_drift_stream(&bad).is_err());
        let bad = DriftConfig {
            noise: 0.0,
            ..DriftConfig::default()
        };
        assert!(generate_drift_stream(&bad).is_err());
    }
}
