//! Seeded synthetic tagging data with a small-world user network.

use std::collections::HashSet;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Zipf;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, CorpusBuilder};
use crate::socialgraph::SimilarityGraph;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GraphModel {
    /// Watts–Strogatz: ring lattice of `degree` neighbours, each edge
    /// rewired with probability `rewire`.
    SmallWorld { degree: usize, rewire: f64 },
}

impl Default for GraphModel {
    fn default() -> Self {
        GraphModel::SmallWorld {
            degree: 10,
            rewire: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub seed: u64,
    pub users: usize,
    pub items: usize,
    pub tags: usize,
    pub triples: usize,
    pub graph: GraphModel,
    /// Zipf exponent of tag and item popularity.
    pub zipf: f64,
    /// Probability that a triple copies a network neighbour's (item, tag).
    pub homophily: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            seed: 7,
            users: 2_000,
            items: 3_000,
            tags: 500,
            triples: 30_000,
            graph: GraphModel::default(),
            zipf: 1.0,
            homophily: 0.6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("users, items and tags must all be at least 1")]
    EmptyDimension,
    #[error("{0} distinct triples cannot be drawn from {1} possible ones")]
    TooManyTriples(usize, u128),
    #[error("degree {degree} is not an even number below the user count {users}")]
    Degree { degree: usize, users: usize },
    #[error("{0} must lie in [0, 1]")]
    Probability(&'static str),
    #[error("cannot form {0} distinct tags")]
    Vocabulary(usize),
}

fn names(prefix: char, n: usize) -> Vec<String> {
    let width = n.saturating_sub(1).to_string().len().max(6);
    (0..n).map(|i| format!("{prefix}{i:0width$}")).collect()
}

fn vocabulary(rng: &mut impl Rng, n: usize) -> Result<Vec<String>, SynthError> {
    const LETTERS: &[u8] = b"abcdefghijklmnopqrstuvwxyz";
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while out.len() < n {
        attempts += 1;
        if attempts > n * 100 + 1000 {
            return Err(SynthError::Vocabulary(n));
        }
        let len = rng.random_range(3..=8);
        let t: String = (0..len)
            .map(|_| LETTERS[rng.random_range(0..LETTERS.len())] as char)
            .collect();
        if seen.insert(t.clone()) {
            out.push(t);
        }
    }
    Ok(out)
}

fn small_world(rng: &mut impl Rng, users: &[String], degree: usize, rewire: f64) -> SimilarityGraph {
    let n = users.len();
    let mut edges: HashSet<(usize, usize)> = HashSet::new();
    for a in 0..n {
        for step in 1..=degree / 2 {
            let mut b = (a + step) % n;
            if rng.random_bool(rewire) {
                b = rng.random_range(0..n);
            }
            if a != b {
                edges.insert((a.min(b), a.max(b)));
            }
        }
    }
    let mut sorted: Vec<(usize, usize)> = edges.into_iter().collect();
    sorted.sort_unstable();
    let weighted: Vec<(&str, &str, f64)> = sorted
        .into_iter()
        .map(|(a, b)| (users[a].as_str(), users[b].as_str(), 1.0 - rng.random::<f64>() * 0.95))
        .collect();
    SimilarityGraph::from_edges_and_users(weighted, users.iter().map(String::as_str)).expect("weights in (0, 1]")
}

/// Triples in generation order, which stands in for time order.
pub type TripleStream = Vec<(String, String, String)>;

/// Draws a corpus and a network. Tags and items follow Zipf popularity;
/// with probability `homophily` a user re-tags what a network neighbour
/// tagged, picking the neighbour in proportion to the edge weight.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<(Corpus, SimilarityGraph), SynthError> {
    let (stream, graph) = generate_synthetic_stream(spec)?;
    let mut b = CorpusBuilder::new();
    for (u, i, t) in &stream {
        b.add(u, i, t).expect("generated names are valid");
    }
    Ok((b.build(), graph))
}

pub fn generate_synthetic_stream(spec: &SynthSpec) -> Result<(TripleStream, SimilarityGraph), SynthError> {
    if spec.users == 0 || spec.items == 0 || spec.tags == 0 {
        return Err(SynthError::EmptyDimension);
    }
    let capacity = spec.users as u128 * spec.items as u128 * spec.tags as u128;
    if spec.triples as u128 > capacity / 2 {
        return Err(SynthError::TooManyTriples(spec.triples, capacity));
    }
    let GraphModel::SmallWorld { degree, rewire } = spec.graph;
    if degree % 2 == 1 || (degree >= spec.users && degree > 0) {
        return Err(SynthError::Degree {
            degree,
            users: spec.users,
        });
    }
    if !(0.0..=1.0).contains(&rewire) {
        return Err(SynthError::Probability("rewire"));
    }
    if !(0.0..=1.0).contains(&spec.homophily) {
        return Err(SynthError::Probability("homophily"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let users = names('u', spec.users);
    let items = names('i', spec.items);
    let tags = vocabulary(&mut rng, spec.tags)?;
    let graph = small_world(&mut rng, &users, degree, rewire);
    // Zero-padded names sort like their indices, so graph ids are indices.
    let neighbours: Vec<Vec<(usize, f64)>> = (0..spec.users)
        .map(|u| {
            graph
                .neighbors(crate::ids::GraphUserId(u as u32))
                .iter()
                .map(|(v, w)| (v.index(), *w))
                .collect()
        })
        .collect();
    let tag_zipf = Zipf::new(spec.tags as f64, spec.zipf).expect("valid zipf");
    let item_zipf = Zipf::new(spec.items as f64, spec.zipf).expect("valid zipf");
    // Shuffle rank -> id so popularity is not tied to name order.
    let mut tag_of_rank: Vec<usize> = (0..spec.tags).collect();
    tag_of_rank.shuffle(&mut rng);
    let mut item_of_rank: Vec<usize> = (0..spec.items).collect();
    item_of_rank.shuffle(&mut rng);

    let mut seen: HashSet<(u32, u32, u32)> = HashSet::with_capacity(spec.triples);
    let mut by_user: Vec<Vec<(u32, u32)>> = vec![Vec::new(); spec.users];
    let mut order: Vec<(u32, u32, u32)> = Vec::with_capacity(spec.triples);
    let mut attempts = 0usize;
    while order.len() < spec.triples {
        attempts += 1;
        if attempts > spec.triples * 50 + 1000 {
            return Err(SynthError::TooManyTriples(spec.triples, capacity));
        }
        let u = rng.random_range(0..spec.users);
        let copied = if rng.random_bool(spec.homophily) && !neighbours[u].is_empty() {
            // Stronger ties are copied more often.
            let &(v, _) = neighbours[u]
                .choose_weighted(&mut rng, |n| n.1)
                .expect("positive weights");
            by_user[v].choose(&mut rng).copied()
        } else {
            None
        };
        let (i, t) = copied.unwrap_or_else(|| {
            let t = tag_of_rank[tag_zipf.sample(&mut rng) as usize - 1];
            // Items are drawn from a tag-specific rotation of the popularity
            // ranking, so each tag has its own head items.
            let r = item_zipf.sample(&mut rng) as usize - 1;
            let i = item_of_rank[(r + t * 7919) % spec.items];
            (i as u32, t as u32)
        });
        if seen.insert((u as u32, i, t)) {
            by_user[u].push((i, t));
            order.push((u as u32, i, t));
        }
    }
    let stream = order
        .into_iter()
        .map(|(u, i, t)| {
            (
                users[u as usize].clone(),
                items[i as usize].clone(),
                tags[t as usize].clone(),
            )
        })
        .collect();
    Ok((stream, graph))
}

/// Writes the triples in generation order and the network as TSV.
pub fn write_synthetic(
    spec: &SynthSpec,
    triples: impl std::io::Write,
    edges: impl std::io::Write,
) -> Result<(), Box<dyn std::error::Error>> {
    use std::io::Write;
    let (stream, g) = generate_synthetic_stream(spec)?;
    let mut w = std::io::BufWriter::new(triples);
    for (u, i, t) in &stream {
        writeln!(w, "{u}\t{i}\t{t}")?;
    }
    w.flush()?;
    g.write_tsv(std::io::BufWriter::new(edges))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthSpec {
        SynthSpec {
            users: 300,
            items: 400,
            tags: 200,
            triples: 6_000,
            ..SynthSpec::default()
        }
    }

    #[test]
    fn deterministic() {
        let mut a = (Vec::new(), Vec::new());
        let mut b = (Vec::new(), Vec::new());
        write_synthetic(&small(), &mut a.0, &mut a.1).unwrap();
        write_synthetic(&small(), &mut b.0, &mut b.1).unwrap();
        assert_eq!(a, b);
        assert!(!a.0.is_empty());
    }

    #[test]
    fn empty_and_infeasible() {
        let (c, _) = generate_synthetic(&SynthSpec { triples: 0, ..small() }).unwrap();
        assert!(c.is_empty());
        assert!(matches!(
            generate_synthetic(&SynthSpec {
                users: 2,
                items: 2,
                tags: 2,
                triples: 100,
                ..small()
            }),
            Err(SynthError::TooManyTriples(..))
        ));
        assert_eq!(
            generate_synthetic(&SynthSpec { users: 0, ..small() }).unwrap_err(),
            SynthError::EmptyDimension
        );
    }

    #[test]
    fn sizes_and_weights() {
        let (c, g) = generate_synthetic(&small()).unwrap();
        assert_eq!(c.num_triples(), 6_000);
        assert_eq!(g.num_users(), 300);
        assert!(g.edges().all(|(_, _, w)| w > 0.0 && w <= 1.0));
    }

    /// Least-squares slope of log frequency against log rank.
    fn loglog_slope(mut counts: Vec<usize>, top: usize) -> f64 {
        counts.sort_unstable_by(|a, b| b.cmp(a));
        let pts: Vec<(f64, f64)> = counts
            .iter()
            .take(top)
            .enumerate()
            .map(|(r, &c)| (((r + 1) as f64).ln(), (c as f64).ln()))
            .collect();
        let n = pts.len() as f64;
        let (mx, my) = (
            pts.iter().map(|p| p.0).sum::<f64>() / n,
            pts.iter().map(|p| p.1).sum::<f64>() / n,
        );
        let cov: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let var: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        cov / var
    }

    #[test]
    fn tag_frequencies_follow_zipf() {
        let spec = SynthSpec::default();
        let (c, _) = generate_synthetic(&spec).unwrap();
        let mut counts = vec![0usize; c.tags().len()];
        for t in c.triples() {
            counts[t.tag.index()] += 1;
        }
        let slope = loglog_slope(counts, 100);
        assert!((slope + spec.zipf).abs() <= 0.2, "slope {slope}");
    }
}
