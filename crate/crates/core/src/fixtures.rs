//! The small fashion-tagging network used throughout the tests and docs.

use crate::corpus::CorpusBuilder;
use crate::dataset::Dataset;
use crate::socialgraph::SimilarityGraph;

pub const RUNNING_EDGES: [(&str, &str, f64); 9] = [
    ("Alice", "Bob", 0.9),
    ("Bob", "Danny", 0.9),
    ("Alice", "Carol", 0.6),
    ("Alice", "Frank", 0.4),
    ("Alice", "Eve", 0.3),
    ("Alice", "George", 0.2),
    ("Alice", "Ida", 0.16),
    ("Alice", "Jim", 0.07),
    ("Alice", "Holly", 0.01),
];

/// Tagging triples of the running example. Users outside the network
/// (Pat, Quinn, ...) only shape the global term frequencies.
pub const RUNNING_TRIPLES: [(&str, &str, &str); 22] = [
    ("Bob", "i6", "glasses"),
    ("Carol", "i6", "glasses"),
    ("Bob", "i6", "style"),
    ("Carol", "i4", "style"),
    ("Ida", "i4", "style"),
    ("Jim", "i4", "style"),
    ("Eve", "i4", "glasses"),
    ("George", "i4", "gloomy"),
    ("Danny", "i4", "grunge"),
    ("Frank", "i4", "goth"),
    ("Holly", "i4", "goth"),
    ("Zoe", "i1", "glasses"),
    ("Pat", "i2", "street"),
    ("Quinn", "i2", "street"),
    ("Rex", "i2", "street"),
    ("Sam", "i2", "street"),
    ("Pat", "i2", "stud"),
    ("Quinn", "i2", "stud"),
    ("Rex", "i2", "style"),
    ("Sam", "i5", "stud"),
    ("Tess", "i3", "hipster"),
    ("Tess", "i3", "hippie"),
];

pub fn running_graph() -> SimilarityGraph {
    SimilarityGraph::from_edges(RUNNING_EDGES).expect("valid edges")
}

pub fn running_example() -> Dataset {
    let mut b = CorpusBuilder::new();
    for (u, i, t) in RUNNING_TRIPLES {
        b.add(u, i, t).expect("valid triple");
    }
    Dataset::new(b.build(), running_graph())
}
