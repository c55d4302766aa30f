//! Bucket-level biased reservoir sampling.
//!
//! A whole bucket is treated as arriving at one instant. With `i` the number
//! of samples seen including the current bucket, each incoming sample either
//! fills free capacity or is accepted into a temporary set `T` with
//! probability `min(1, α·k/i)`. The buffer is then shuffled, its first `|T|`
//! entries dropped and `T` appended.
//!
//! `α = 1` is classic reservoir sampling. Larger `α` biases the buffer toward
//! recent buckets, and the dynamic policy `α = c·i/k` makes the acceptance
//! probability the constant `c`. At `c = 1` every sample is accepted, which
//! turns the buffer into a queue of the most recent buckets when buckets are
//! at least `k` large.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::corpus::Sample;
use crate::error::{Error, Result};

/// How the acceptance probability is scaled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaPolicy {
    /// Constant `α`.
    Fixed(f64),
    /// `α = c·i/k`, stored as the coefficient `c`.
    Dynamic(f64),
}

impl AlphaPolicy {
    pub fn fixed(alpha: f64) -> Result<Self> {
        Self::check(alpha).map(|_| AlphaPolicy::Fixed(alpha))
    }

    pub fn dynamic(coefficient: f64) -> Result<Self> {
        Self::check(coefficient).map(|_| AlphaPolicy::Dynamic(coefficient))
    }

    fn check(v: f64) -> Result<()> {
        if v.is_finite() && v > 0.0 {
            Ok(())
        } else {
            Err(Error::invalid(format!("alpha must be finite and positive, got {v}")))
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            AlphaPolicy::Fixed(v) | AlphaPolicy::Dynamic(v) => v,
        }
    }

    /// `α` in effect after `seen` samples with capacity `capacity`.
    pub fn effective_alpha(&self, seen: u64, capacity: usize) -> f64 {
        match *self {
            AlphaPolicy::Fixed(a) => a,
            AlphaPolicy::Dynamic(c) => c * seen as f64 / capacity as f64,
        }
    }
}

impl fmt::Display for AlphaPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlphaPolicy::Fixed(v) => write!(f, "fixed:{v}"),
            AlphaPolicy::Dynamic(v) => write!(f, "dynamic:{v}"),
        }
    }
}

impl FromStr for AlphaPolicy {
    type Err = Error;

    /// Parses `fixed:<value>` or `dynamic:<coefficient>`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, value) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| Error::invalid(format!("expected `fixed:<v>` or `dynamic:<c>`, got `{s}`")))?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("bad alpha value `{value}`")))?;
        match kind.trim() {
            "fixed" => AlphaPolicy::fixed(v),
            "dynamic" => AlphaPolicy::dynamic(v),
            other => Err(Error::invalid(format!("unknown alpha kind `{other}`"))),
        }
    }
}

/// `min(1, α·k/i)` for `i` seen samples and capacity `k`.
pub fn acceptance_probability(policy: AlphaPolicy, seen: u64, capacity: usize) -> f64 {
    debug_assert!(seen >= 1 && capacity >= 1);
    match policy {
        // (c·i/k)·(k/i) cancels to c exactly.
        AlphaPolicy::Dynamic(c) => c.min(1.0),
        AlphaPolicy::Fixed(a) => (a * capacity as f64 / seen as f64).min(1.0),
    }
}

/// Bounded sample store maintained across buckets.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayBuffer {
    capacity: usize,
    entries: Vec<Sample>,
    seen: u64,
    dim: Option<usize>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::invalid("buffer capacity must be at least 1"));
        }
        Ok(Self {
            capacity,
            entries: Vec::with_capacity(capacity),
            seen: 0,
            dim: None,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Total samples observed over all processed buckets.
    pub fn seen(&self) -> u64 {
        self.seen
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Sample] {
        &self.entries
    }

    /// Owned copy of the entries, in buffer order.
    pub fn snapshot(&self) -> Vec<Sample> {
        self.entries.clone()
    }

    /// Processes one bucket.
    ///
    /// The buffer is only shuffled when `T` is non-empty; with nothing to
    /// replace the shuffle cannot change the stored set, and skipping it
    /// keeps under-capacity buffers in arrival order.
    pub fn update<R: Rng + ?Sized>(&mut self, bucket: &[Sample], policy: AlphaPolicy, rng: &mut R) -> Result<()> {
        if bucket.is_empty() {
            return Err(Error::invalid("cannot update buffer with an empty bucket"));
        }
        let dim = self.dim.unwrap_or(bucket[0].dim());
        if let Some(bad) = bucket.iter().find(|s| s.dim() != dim) {
            return Err(Error::invalid(format!(
                "sample {} has dimension {}, buffer holds dimension {dim}",
                bad.id,
                bad.dim()
            )));
        }

        let seen = self.seen + bucket.len() as u64;
        let p_accept = acceptance_probability(policy, seen, self.capacity);
        let mut accepted = Vec::new();
        for s in bucket {
            if self.entries.len() < self.capacity {
                self.entries.push(s.clone());
            } else if rng.random::<f64>() < p_accept {
                accepted.push(s.clone());
            }
        }

        if !accepted.is_empty() {
            self.entries.shuffle(rng);
            let drop = accepted.len().min(self.entries.len());
            self.entries.drain(..drop);
            self.entries.extend(accepted);
            if self.entries.len() > self.capacity {
                let excess = self.entries.len() - self.capacity;
                self.entries.drain(..excess);
            }
        }

        self.seen = seen;
        self.dim = Some(dim);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    fn bucket(start: u64, n: usize) -> Vec<Sample> {
        (start..start + n as u64)
            .map(|id| Sample::new(id, id as i64, vec![id as f64], 0))
            .collect()
    }

    fn ids(b: &ReplayBuffer) -> Vec<u64> {
        b.entries().iter().map(|s| s.id).collect()
    }

    #[test]
    fn acceptance_examples() {
        let p = acceptance_probability(AlphaPolicy::Fixed(1.0), 1000, 100);
        assert!((p - 0.1).abs() < 1e-15);
        for i in [100, 101, 5000, 1_000_000] {
            assert_eq!(acceptance_probability(AlphaPolicy::Dynamic(1.0), i, 100), 1.0);
        }
        assert_eq!(acceptance_probability(AlphaPolicy::Fixed(5.0), 200, 100), 1.0);
        let p = acceptance_probability(AlphaPolicy::Dynamic(0.25), 400, 100);
        assert!((p - 0.25).abs() < 1e-15);
    }

    #[test]
    fn policy_syntax() {
        assert_eq!("fixed:5.0".parse::<AlphaPolicy>().unwrap(), AlphaPolicy::Fixed(5.0));
        assert_eq!(
            "dynamic:0.75".parse::<AlphaPolicy>().unwrap(),
            AlphaPolicy::Dynamic(0.75)
        );
        assert!("fixed:-1".parse::<AlphaPolicy>().is_err());
        assert!("fixed:0".parse::<AlphaPolicy>().is_err());
        assert!("linear:1".parse::<AlphaPolicy>().is_err());
        assert!("1.0".parse::<AlphaPolicy>().is_err());
        let p = AlphaPolicy::Dynamic(0.5);
        assert_eq!(p.to_string().parse::<AlphaPolicy>().unwrap(), p);
    }

    #[test]
    fn under_capacity_bucket_kept_in_order() {
        let mut buf = ReplayBuffer::new(100).unwrap();
        assert!(buf.snapshot().is_empty());
        let b = bucket(0, 60);
        buf.update(&b, AlphaPolicy::Fixed(1.0), &mut seed::rng(3, 0)).unwrap();
        assert_eq!(buf.snapshot(), b);
        assert_eq!(buf.seen(), 60);
    }

    #[test]
    fn dynamic_one_replaces_full_bucket() {
        let mut buf = ReplayBuffer::new(100).unwrap();
        let mut rng = seed::rng(11, 0);
        buf.update(&bucket(0, 100), AlphaPolicy::Dynamic(1.0), &mut rng)
            .unwrap();
        let second = bucket(100, 100);
        buf.update(&second, AlphaPolicy::Dynamic(1.0), &mut rng).unwrap();
        assert_eq!(buf.snapshot(), second);
    }

    #[test]
    fn oversized_bucket_keeps_most_recent() {
        let mut buf = ReplayBuffer::new(50).unwrap();
        let mut rng = seed::rng(0, 0);
        buf.update(&bucket(0, 50), AlphaPolicy::Dynamic(1.0), &mut rng).unwrap();
        buf.update(&bucket(50, 130), AlphaPolicy::Dynamic(1.0), &mut rng)
            .unwrap();
        assert_eq!(ids(&buf), (130..180).collect::<Vec<_>>());
    }

    #[test]
    fn first_bucket_larger_than_capacity() {
        let mut buf = ReplayBuffer::new(100).unwrap();
        buf.update(&bucket(0, 200), AlphaPolicy::Fixed(1.0), &mut seed::rng(1, 0))
            .unwrap();
        assert_eq!(buf.len(), 100);
        assert_eq!(buf.seen(), 200);
        let mut got = ids(&buf);
        got.sort_unstable();
        got.dedup();
        assert_eq!(got.len(), 100);
    }

    #[test]
    fn rejects_mismatched_dimension() {
        let mut buf = ReplayBuffer::new(10).unwrap();
        let mut rng = seed::rng(0, 0);
        buf.update(&bucket(0, 5), AlphaPolicy::Fixed(1.0), &mut rng).unwrap();
        let wide = vec![Sample::new(99, 0, vec![0.0, 1.0], 0)];
        assert!(matches!(
            buf.update(&wide, AlphaPolicy::Fixed(1.0), &mut rng),
            Err(Error::InvalidArgument(_))
        ));
        assert!(buf.update(&[], AlphaPolicy::Fixed(1.0), &mut rng).is_err());
        assert!(ReplayBuffer::new(0).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let run = |s| {
            let mut buf = ReplayBuffer::new(30).unwrap();
            let mut rng = seed::rng(s, 0);
            for t in 0..5 {
                buf.update(&bucket(t * 40, 40), AlphaPolicy::Fixed(2.0), &mut rng)
                    .unwrap();
            }
            ids(&buf)
        };
        assert_eq!(run(4), run(4));
        assert_ne!(run(4), run(5));
    }
}
