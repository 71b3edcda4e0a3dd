//! Seeded random datasets for property and equivalence tests.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use topks_core::corpus::CorpusBuilder;
use topks_core::socialgraph::SimilarityGraph;
use topks_core::Dataset;

#[derive(Debug, Clone, Copy)]
pub struct Limits {
    pub users: usize,
    pub items: usize,
    pub tags: usize,
    pub triples: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            users: 50,
            items: 300,
            tags: 80,
            triples: 3000,
        }
    }
}

/// Short tags over a tiny alphabet so that prefixes are widely shared.
pub fn random_tag(rng: &mut impl Rng) -> String {
    let len = rng.random_range(1..=4);
    (0..len).map(|_| ['a', 'b', 'c', 'd'][rng.random_range(0..4)]).collect()
}

/// Edge weights drawn partly from a coarse grid, so equal proximities and
/// equal scores actually occur.
pub fn random_weight(rng: &mut impl Rng) -> f64 {
    if rng.random_bool(0.5) {
        [0.25, 0.5, 0.75, 1.0][rng.random_range(0..4)]
    } else {
        1.0 - rng.random::<f64>()
    }
}

pub fn random_graph(rng: &mut impl Rng, n: usize, density: f64) -> SimilarityGraph {
    let names: Vec<String> = (0..n).map(|i| format!("u{i:02}")).collect();
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(density) {
                edges.push((names[a].clone(), names[b].clone(), random_weight(rng)));
            }
        }
    }
    SimilarityGraph::from_edges_and_users(edges, names).expect("valid weights")
}

/// A random dataset within `limits`, plus a seeker name (which may be
/// missing from the network a small fraction of the time).
pub fn random_instance(seed: u64, limits: Limits) -> (Dataset, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let users = rng.random_range(2..=limits.users);
    let items = rng.random_range(1..=limits.items);
    let ntags = rng.random_range(1..=limits.tags);
    let triples = rng.random_range(1..=limits.triples);
    let tags: Vec<String> = (0..ntags).map(|_| random_tag(&mut rng)).collect();
    let mut b = CorpusBuilder::new();
    for _ in 0..triples {
        // Skewed item and tag choice gives long and short lists alike.
        let u = rng.random_range(0..users);
        let i = (rng.random::<f64>().powi(2) * items as f64) as usize;
        let t = (rng.random::<f64>().powi(2) * ntags as f64) as usize;
        b.add(&format!("u{u:02}"), &format!("i{i:03}"), &tags[t.min(ntags - 1)])
            .expect("valid");
    }
    let density = rng.random_range(0.02..0.3);
    let graph = random_graph(&mut rng, users, density);
    let seeker = if rng.random_bool(0.05) {
        "nobody".to_string()
    } else {
        format!("u{:02}", rng.random_range(0..users))
    };
    (Dataset::new(b.build(), graph), seeker)
}
