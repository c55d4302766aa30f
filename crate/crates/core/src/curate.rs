//! Dataset curation over precomputed, unit-normalized embeddings.
//!
//! Each class has a query vector. Embeddings are ranked per class by cosine
//! score. The top `per_class_top` become that class's candidates, with any id
//! claimed by two classes discarded everywhere and replaced from each class's
//! remaining ranking. The lowest scorers form an extra background class.
//! Finally every class is subsampled to `final_per_class`.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::IndexedRandom;

use crate::corpus::{l2_normalize, parse_vector, Sample};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub id: u64,
    pub vector: Vec<f64>,
}

impl EmbeddingRecord {
    /// Normalizes `vector` to unit length.
    pub fn normalized(id: u64, mut vector: Vec<f64>) -> Result<Self> {
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("embedding {id} has a non-finite component")));
        }
        l2_normalize(&mut vector).map_err(|e| Error::invalid(format!("embedding {id}: {e}")))?;
        Ok(Self { id, vector })
    }
}

/// A named class and its query embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassQuery {
    pub name: String,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurationSpec {
    pub queries: Vec<ClassQuery>,
    pub per_class_top: usize,
    pub background_low_per_class: usize,
    pub final_per_class: usize,
}

impl CurationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.queries.is_empty() {
            return Err(Error::invalid("curation needs at least one query class"));
        }
        if self.per_class_top == 0 || self.background_low_per_class == 0 || self.final_per_class == 0 {
            return Err(Error::invalid("curation counts must be at least 1"));
        }
        if self.final_per_class > self.per_class_top {
            return Err(Error::invalid("final_per_class must not exceed per_class_top"));
        }
        Ok(())
    }
}

/// Ids with scores, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    entries: Vec<(u64, f64)>,
}

impl Ranking {
    pub fn entries(&self) -> &[(u64, f64)] {
        &self.entries
    }

    pub fn ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.iter().map(|e| e.0)
    }

    pub fn score(&self, id: u64) -> Option<f64> {
        self.entries.iter().find(|e| e.0 == id).map(|e| e.1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Scores every embedding against `query`, descending, ties by ascending id.
pub fn cosine_rank(embeddings: &[EmbeddingRecord], query: &[f64]) -> Result<Ranking> {
    let mut entries = Vec::with_capacity(embeddings.len());
    for e in embeddings {
        if e.vector.len() != query.len() {
            return Err(Error::invalid(format!(
                "embedding {} has dimension {}, query has {}",
                e.id,
                e.vector.len(),
                query.len()
            )));
        }
        let score: f64 = e.vector.iter().zip(query).map(|(a, b)| a * b).sum();
        entries.push((e.id, score));
    }
    entries.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(Ranking { entries })
}

/// Ranks all embeddings for every query in `spec`, in spec order.
pub fn rank_all(embeddings: &[EmbeddingRecord], spec: &CurationSpec) -> Result<Vec<Ranking>> {
    use rayon::prelude::*;
    spec.queries
        .par_iter()
        .map(|q| cosine_rank(embeddings, &q.vector))
        .collect()
}

fn class_name(spec: &CurationSpec, c: usize) -> String {
    spec.queries
        .get(c)
        .map_or_else(|| format!("class{c}"), |q| q.name.clone())
}

/// Per-class labeled ids, pairwise disjoint, each in rank order.
///
/// Classes take their `per_class_top` heads. Every id held by two or more
/// classes is discarded from all of them for good, and the affected classes
/// refill from their next unused candidates. Rounds repeat until no id is
/// shared; classes are visited in spec order.
pub fn select_labeled(rankings: &[Ranking], spec: &CurationSpec) -> Result<Vec<Vec<u64>>> {
    spec.validate()?;
    if rankings.len() != spec.queries.len() {
        return Err(Error::invalid(format!(
            "{} rankings for {} classes",
            rankings.len(),
            spec.queries.len()
        )));
    }
    let universe = rankings.iter().map(Ranking::len).max().unwrap_or(0);
    let mut discarded: HashSet<u64> = HashSet::new();
    let mut cursors = vec![0usize; rankings.len()];
    let mut selected: Vec<Vec<u64>> = vec![Vec::new(); rankings.len()];

    for _round in 0..=universe {
        for (c, ranking) in rankings.iter().enumerate() {
            let sel = &mut selected[c];
            while sel.len() < spec.per_class_top {
                let Some(&(id, _)) = ranking.entries.get(cursors[c]) else {
                    return Err(Error::Shortage {
                        class: class_name(spec, c),
                        available: sel.len(),
                        required: spec.per_class_top,
                    });
                };
                cursors[c] += 1;
                if !discarded.contains(&id) {
                    sel.push(id);
                }
            }
        }

        let mut owners: HashMap<u64, usize> = HashMap::new();
        for id in selected.iter().flatten() {
            *owners.entry(*id).or_default() += 1;
        }
        let shared: Vec<u64> = owners.into_iter().filter(|&(_, n)| n > 1).map(|(id, _)| id).collect();
        if shared.is_empty() {
            return Ok(selected);
        }
        discarded.extend(shared);
        for sel in &mut selected {
            sel.retain(|id| !discarded.contains(id));
        }
    }
    Err(Error::invalid(format!(
        "discard-and-replace did not settle within {} rounds",
        universe + 1
    )))
}

/// Union over classes of each class's `background_low_per_class` lowest-scoring
/// ids, after excluding every labeled id.
pub fn assemble_background(rankings: &[Ranking], labeled: &[Vec<u64>], spec: &CurationSpec) -> Result<BTreeSet<u64>> {
    spec.validate()?;
    let taken: HashSet<u64> = labeled.iter().flatten().copied().collect();
    let mut background = BTreeSet::new();
    for (c, ranking) in rankings.iter().enumerate() {
        let lows: Vec<u64> = ranking
            .entries
            .iter()
            .rev()
            .map(|e| e.0)
            .filter(|id| !taken.contains(id))
            .take(spec.background_low_per_class)
            .collect();
        if lows.len() < spec.background_low_per_class {
            return Err(Error::Shortage {
                class: format!("background from {}", class_name(spec, c)),
                available: lows.len(),
                required: spec.background_low_per_class,
            });
        }
        background.extend(lows);
    }
    Ok(background)
}

/// A curated, balanced set of `(id, label)` pairs. Background is the last
/// label, `queries.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct CuratedSet {
    pub class_names: Vec<String>,
    pub members: Vec<Vec<u64>>,
}

impl CuratedSet {
    pub fn labeled_ids(&self) -> impl Iterator<Item = (u64, usize)> + '_ {
        self.members
            .iter()
            .enumerate()
            .flat_map(|(label, ids)| ids.iter().map(move |&id| (id, label)))
    }

    /// Joins with embeddings and timestamps into samples sorted by
    /// `(timestamp, id)`. Ids without a timestamp get 0.
    pub fn to_samples(&self, embeddings: &[EmbeddingRecord], timestamps: &HashMap<u64, i64>) -> Result<Vec<Sample>> {
        let by_id: HashMap<u64, &EmbeddingRecord> = embeddings.iter().map(|e| (e.id, e)).collect();
        let mut out = Vec::new();
        for (id, label) in self.labeled_ids() {
            let e = by_id
                .get(&id)
                .ok_or_else(|| Error::invalid(format!("curated id {id} has no embedding")))?;
            out.push(Sample::new(
                id,
                timestamps.get(&id).copied().unwrap_or(0),
                e.vector.clone(),
                label,
            ));
        }
        out.sort_by_key(|s| (s.timestamp, s.id));
        Ok(out)
    }
}

/// Seeded subsample of `final_per_class` ids from every labeled class and the
/// background. `rejected` ids are dropped first.
pub fn finalize_bucket(
    labeled: &[Vec<u64>],
    background: &BTreeSet<u64>,
    rejected: &HashSet<u64>,
    spec: &CurationSpec,
    seed: u64,
) -> Result<CuratedSet> {
    spec.validate()?;
    let mut rng = seed::rng(seed, 0);
    let mut class_names: Vec<String> = (0..labeled.len()).map(|c| class_name(spec, c)).collect();
    class_names.push("background".to_string());

    let pools = labeled
        .iter()
        .cloned()
        .chain(std::iter::once(background.iter().copied().collect()));
    let mut members = Vec::with_capacity(class_names.len());
    for (c, pool) in pools.enumerate() {
        let mut pool: Vec<u64> = pool.into_iter().filter(|id| !rejected.contains(id)).collect();
        if pool.len() < spec.final_per_class {
            return Err(Error::Shortage {
                class: class_names[c].clone(),
                available: pool.len(),
                required: spec.final_per_class,
            });
        }
        pool.sort_unstable();
        let mut chosen: Vec<u64> = pool.choose_multiple(&mut rng, spec.final_per_class).copied().collect();
        chosen.sort_unstable();
        members.push(chosen);
    }
    Ok(CuratedSet { class_names, members })
}

/// Full pipeline: rank, select, background, finalize.
pub fn curate(
    embeddings: &[EmbeddingRecord],
    spec: &CurationSpec,
    rejected: &HashSet<u64>,
    seed: u64,
) -> Result<CuratedSet> {
    spec.validate()?;
    let rankings = rank_all(embeddings, spec)?;
    let labeled = select_labeled(&rankings, spec)?;
    let background = assemble_background(&rankings, &labeled, spec)?;
    finalize_bucket(&labeled, &background, rejected, spec, seed)
}

/// Parses `#m=<m>` followed by `id<TAB>v1,...,vm` lines, normalizing each vector.
pub fn parse_embeddings(text: &str, source_name: &str) -> Result<Vec<EmbeddingRecord>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(source_name, 1, "missing `#m=<m>` header"))?;
    let m: usize = header
        .trim()
        .strip_prefix("#m=")
        .and_then(|v| v.trim().parse().ok())
        .filter(|&m| m > 0)
        .ok_or_else(|| Error::parse(source_name, 1, format!("bad header `{header}`")))?;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in lines {
        let err = |msg: String| Error::parse(source_name, idx + 1, msg);
        let (id, vec) = line
            .split_once('\t')
            .ok_or_else(|| err("expected `id<TAB>vector`".into()))?;
        let id: u64 = id.trim().parse().map_err(|_| err(format!("bad id `{id}`")))?;
        let v = parse_vector(vec).map_err(err)?;
        if v.len() != m {
            return Err(err(format!("vector has dimension {}, header says {m}", v.len())));
        }
        if !seen.insert(id) {
            return Err(err(format!("duplicate id {id}")));
        }
        out.push(EmbeddingRecord::normalized(id, v).map_err(|e| err(e.to_string()))?);
    }
    Ok(out)
}

/// Parses `class_name<TAB>v1,...` lines into normalized queries.
pub fn parse_queries(text: &str, source_name: &str) -> Result<Vec<ClassQuery>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| Error::parse(source_name, idx + 1, msg);
        let (name, vec) = line
            .split_once('\t')
            .ok_or_else(|| err("expected `class_name<TAB>vector`".into()))?;
        let mut v = parse_vector(vec).map_err(err)?;
        l2_normalize(&mut v).map_err(err)?;
        out.push(ClassQuery {
            name: name.trim().to_string(),
            vector: v,
        });
    }
    if let Some(first) = out.first() {
        let m = first.vector.len();
        if let Some(bad) = out.iter().find(|q| q.vector.len() != m) {
            return Err(Error::parse(
                source_name,
                0,
                format!("query `{}` has inconsistent dimension", bad.name),
            ));
        }
    }
    Ok(out)
}

/// Parses one id per line.
pub fn parse_id_list(text: &str, source_name: &str) -> Result<HashSet<u64>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(i, l)| {
            l.trim()
                .parse::<u64>()
                .map_err(|_| Error::parse(source_name, i + 1, format!("bad id `{}`", l.trim())))
        })
        .collect()
}

/// Parses `id<TAB>timestamp` lines.
pub fn parse_timestamps(text: &str, source_name: &str) -> Result<HashMap<u64, i64>> {
    let mut out = HashMap::new();
    for (i, l) in text.lines().enumerate() {
        if l.trim().is_empty() || l.starts_with('#') {
            continue;
        }
        let err = || Error::parse(source_name, i + 1, format!("expected `id<TAB>timestamp`, got `{l}`"));
        let (id, ts) = l.split_once('\t').ok_or_else(err)?;
        out.insert(
            id.trim().parse().map_err(|_| err())?,
            ts.trim().parse().map_err(|_| err())?,
        );
    }
    Ok(out)
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Renders a ranking as `id<TAB>score` lines.
pub fn render_ranking(r: &Ranking) -> String {
    r.entries.iter().fold(String::new(), |mut out, (id, s)| {
        let _ = writeln!(out, "{id}\t{s:.6}");
        out
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ranking(ids: &[u64]) -> Ranking {
        let n = ids.len() as f64;
        Ranking {
            entries: ids
                .iter()
                .enumerate()
                .map(|(i, &id)| (id, 1.0 - i as f64 / n))
                .collect(),
        }
    }

    fn spec(classes: usize, top: usize, low: usize, fin: usize) -> CurationSpec {
        CurationSpec {
            queries: (0..classes)
                .map(|c| ClassQuery {
                    name: format!("c{c}"),
                    vector: vec![1.0],
                })
                .collect(),
            per_class_top: top,
            background_low_per_class: low,
            final_per_class: fin,
        }
    }

    #[test]
    fn self_similarity_and_orthogonality() {
        let e = vec![
            EmbeddingRecord::normalized(1, vec![1.0, 0.0]).unwrap(),
            EmbeddingRecord::normalized(2, vec![0.0, 3.0]).unwrap(),
        ];
        let r = cosine_rank(&e, &[0.0, 1.0]).unwrap();
        assert_eq!(r.entries(), &[(2, 1.0), (1, 0.0)]);
        assert!(cosine_rank(&e, &[1.0]).is_err());
    }

    #[test]
    fn ties_break_by_id() {
        let e: Vec<_> = [5u64, 2, 9]
            .iter()
            .map(|&id| EmbeddingRecord::normalized(id, vec![1.0, 1.0]).unwrap())
            .collect();
        let r = cosine_rank(&e, &[1.0, 0.0]).unwrap();
        assert_eq!(r.ids().collect::<Vec<_>>(), vec![2, 5, 9]);
    }

    #[test]
    fn disjoint_heads_taken_verbatim() {
        let r = [ranking(&[1, 2, 3, 4, 5]), ranking(&[5, 4, 3, 2, 1])];
        assert_eq!(
            select_labeled(&r, &spec(2, 2, 1, 1)).unwrap(),
            vec![vec![1, 2], vec![5, 4]]
        );
    }

    #[test]
    fn shared_head_is_discarded_and_replaced() {
        // Both classes rank id 1 first. Round 1: A={1,2}, B={1,4}; 1 is
        // shared and discarded. Round 2: A={2,3}, B={4,5}; no conflicts.
        let r = [ranking(&[1, 2, 3, 4, 5]), ranking(&[1, 4, 5, 2, 3])];
        assert_eq!(
            select_labeled(&r, &spec(2, 2, 1, 1)).unwrap(),
            vec![vec![2, 3], vec![4, 5]]
        );
    }

    #[test]
    fn cascading_conflicts_settle_or_run_short() {
        // A: 1 2 3 4 5, B: 1 3 2 5 4, top 2.
        // R1: A={1,2} B={1,3} -> drop 1. R2: A={2,3} B={3,2} -> drop 2,3.
        // R3: A={4,5} (cursor past 3), B={5,4} -> drop 4,5. R4: A exhausted.
        let r = [ranking(&[1, 2, 3, 4, 5]), ranking(&[1, 3, 2, 5, 4])];
        assert!(matches!(
            select_labeled(&r, &spec(2, 2, 1, 1)),
            Err(Error::Shortage { ref class, .. }) if class == "c0"
        ));

        // With top 1: R1: A={1} B={1} -> drop 1. R2: A={2} B={3}. Done.
        assert_eq!(select_labeled(&r, &spec(2, 1, 1, 1)).unwrap(), vec![vec![2], vec![3]]);
    }

    #[test]
    fn background_is_set_union_of_lows() {
        let r = [ranking(&[1, 2, 3, 4, 5, 6]), ranking(&[2, 1, 3, 4, 6, 5])];
        let labeled = vec![vec![1], vec![2]];
        let bg = assemble_background(&r, &labeled, &spec(2, 1, 2, 1)).unwrap();
        assert_eq!(bg, BTreeSet::from([5, 6]));

        let bg = assemble_background(&r, &labeled, &spec(2, 1, 3, 1)).unwrap();
        assert_eq!(bg, BTreeSet::from([4, 5, 6]));

        assert!(assemble_background(&r, &labeled, &spec(2, 1, 5, 1)).is_err());
    }

    #[test]
    fn finalize_balances_and_is_deterministic() {
        let labeled = vec![vec![1, 2, 3], vec![4, 5, 6, 7]];
        let bg = BTreeSet::from([8, 9, 10]);
        let s = spec(2, 4, 1, 3);
        let a = finalize_bucket(&labeled, &bg, &HashSet::new(), &s, 1).unwrap();
        assert_eq!(a.members[0], vec![1, 2, 3]);
        assert!(a.members.iter().all(|m| m.len() == 3));
        assert_eq!(a.class_names.last().unwrap(), "background");
        assert_eq!(a, finalize_bucket(&labeled, &bg, &HashSet::new(), &s, 1).unwrap());

        let rejected = HashSet::from([9]);
        assert!(matches!(
            finalize_bucket(&labeled, &bg, &rejected, &s, 1),
            Err(Error::Shortage { ref class, .. }) if class == "background"
        ));
    }

    #[test]
    fn embedding_file_parsing() {
        let e = parse_embeddings("#m=2\n7\t3,4\n8\t0,1\n", "mem").unwrap();
        assert_eq!(e[0].vector, vec![0.6, 0.8]);
        assert!(matches!(
            parse_embeddings("#m=2\n7\t3,4,5\n", "mem"),
            Err(Error::Parse { line: 2, .. })
        ));
        let q = parse_queries("cat\t1,0\ndog\t0,2\n", "mem").unwrap();
        assert_eq!(q[1].vector, vec![0.0, 1.0]);
        assert_eq!(parse_id_list("3\n\n4\n", "mem").unwrap(), HashSet::from([3, 4]));
        assert_eq!(parse_timestamps("3\t100\n", "mem").unwrap()[&3], 100);
    }
}
