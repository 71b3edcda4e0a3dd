//! Weighted user networks and the best-first extended-proximity iterator.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::io::BufRead;

use crate::corpus::{Corpus, Diagnostic};
use crate::ids::{GraphUserId, Interner};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EdgeError {
    #[error("expected 3 tab-separated fields, found {0}")]
    FieldCount(usize),
    #[error("weight {0:?} is not a number in (0, 1]")]
    Weight(String),
    #[error("self-loop on {0:?}")]
    SelfLoop(String),
}

/// Undirected graph with proximity weights in (0, 1].
#[derive(Debug, Clone, Default)]
pub struct SimilarityGraph {
    users: Interner,
    adjacency: Vec<Vec<(GraphUserId, f64)>>,
}

impl SimilarityGraph {
    /// Builds a graph from named, undirected edges. Parallel edges keep the
    /// largest weight. Weights must lie in (0, 1]; self-loops are rejected.
    pub fn from_edges<S: AsRef<str>>(edges: impl IntoIterator<Item = (S, S, f64)>) -> Result<Self, EdgeError> {
        let mut named: Vec<(String, String, f64)> = Vec::new();
        for (a, b, w) in edges {
            let (a, b) = (a.as_ref().trim().to_string(), b.as_ref().trim().to_string());
            if !(w > 0.0 && w <= 1.0) {
                return Err(EdgeError::Weight(w.to_string()));
            }
            if a == b {
                return Err(EdgeError::SelfLoop(a));
            }
            named.push((a, b, w));
        }
        Ok(Self::from_valid_edges(named, std::iter::empty::<String>()))
    }

    /// Like [`SimilarityGraph::from_edges`] but also registers isolated users.
    pub fn from_edges_and_users<S: AsRef<str>>(
        edges: impl IntoIterator<Item = (S, S, f64)>,
        users: impl IntoIterator<Item = S>,
    ) -> Result<Self, EdgeError> {
        let g = Self::from_edges(edges)?;
        let named: Vec<(String, String, f64)> = g.named_edges().map(|(a, b, w)| (a.into(), b.into(), w)).collect();
        let extra: Vec<String> = users.into_iter().map(|u| u.as_ref().trim().to_string()).collect();
        Ok(Self::from_valid_edges(named, extra))
    }

    fn from_valid_edges(edges: Vec<(String, String, f64)>, extra_users: impl IntoIterator<Item = String>) -> Self {
        let users = Interner::from_names(
            edges
                .iter()
                .flat_map(|(a, b, _)| [a.clone(), b.clone()])
                .chain(extra_users),
        );
        let mut best: HashMap<(u32, u32), f64> = HashMap::new();
        for (a, b, w) in &edges {
            let (x, y) = (users.get(a).unwrap(), users.get(b).unwrap());
            let key = (x.min(y), x.max(y));
            let slot = best.entry(key).or_insert(0.0);
            if *w > *slot {
                *slot = *w;
            }
        }
        let mut adjacency = vec![Vec::new(); users.len()];
        for (&(x, y), &w) in &best {
            adjacency[x as usize].push((GraphUserId(y), w));
            adjacency[y as usize].push((GraphUserId(x), w));
        }
        for adj in &mut adjacency {
            adj.sort_unstable_by_key(|e| e.0);
        }
        Self { users, adjacency }
    }

    /// Parses `userA<TAB>userB<TAB>weight` lines; bad lines become diagnostics.
    pub fn read<R: BufRead>(reader: R) -> std::io::Result<(Self, Vec<Diagnostic>)> {
        let mut edges = Vec::new();
        let mut diags = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            let parsed = if f.len() != 3 {
                Err(EdgeError::FieldCount(f.len()))
            } else {
                match f[2].trim().parse::<f64>() {
                    Ok(w) if w > 0.0 && w <= 1.0 => {
                        if f[0].trim() == f[1].trim() {
                            Err(EdgeError::SelfLoop(f[0].trim().to_string()))
                        } else {
                            Ok((f[0].trim().to_string(), f[1].trim().to_string(), w))
                        }
                    }
                    _ => Err(EdgeError::Weight(f[2].to_string())),
                }
            };
            match parsed {
                Ok(e) => edges.push(e),
                Err(e) => diags.push(Diagnostic {
                    line: n + 1,
                    message: e.to_string(),
                }),
            }
        }
        Ok((Self::from_valid_edges(edges, std::iter::empty()), diags))
    }

    pub fn write_tsv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        for (a, b, x) in self.named_edges() {
            writeln!(w, "{a}\t{b}\t{x}")?;
        }
        Ok(())
    }

    pub fn users(&self) -> &Interner {
        &self.users
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn user_id(&self, name: &str) -> Option<GraphUserId> {
        self.users.get(name).map(GraphUserId)
    }

    pub fn user_name(&self, id: GraphUserId) -> &str {
        self.users.name(id.0)
    }

    pub fn neighbors(&self, u: GraphUserId) -> &[(GraphUserId, f64)] {
        &self.adjacency[u.index()]
    }

    /// Each undirected edge once, with `a < b`.
    pub fn edges(&self) -> impl Iterator<Item = (GraphUserId, GraphUserId, f64)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(a, adj)| {
            adj.iter()
                .filter(move |(b, _)| b.index() > a)
                .map(move |&(b, w)| (GraphUserId(a as u32), b, w))
        })
    }

    pub fn named_edges(&self) -> impl Iterator<Item = (&str, &str, f64)> + '_ {
        self.edges().map(|(a, b, w)| (self.user_name(a), self.user_name(b), w))
    }

    /// Weight of edge `a`–`b`, if present.
    pub fn weight(&self, a: GraphUserId, b: GraphUserId) -> Option<f64> {
        let adj = &self.adjacency[a.index()];
        adj.binary_search_by_key(&b, |e| e.0).ok().map(|p| adj[p].1)
    }
}

/// Drops edges weighted below `theta`. Users are kept even when isolated.
pub fn filter_edges(g: &SimilarityGraph, theta: f64) -> SimilarityGraph {
    let edges: Vec<(String, String, f64)> = g
        .named_edges()
        .filter(|&(_, _, w)| w >= theta)
        .map(|(a, b, w)| (a.to_string(), b.to_string(), w))
        .collect();
    SimilarityGraph::from_valid_edges(edges, g.users.names().iter().cloned())
}

/// Feature sets whose Dice overlap defines a similarity network.
pub enum DiceSource<'a> {
    /// Neighbor sets in an existing network.
    CommonNeighbors(&'a SimilarityGraph),
    /// (item, tag) pairs of each user.
    ItemTagPairs(&'a Corpus),
    /// Tags of each user.
    Tags(&'a Corpus),
}

/// Builds the network `w(u,v) = 2|A_u ∩ A_v| / (|A_u| + |A_v|)`, omitting
/// zero-weight pairs.
pub fn dice_network(source: DiceSource<'_>) -> SimilarityGraph {
    // Feature sets as sorted, deduplicated u64 keys per user.
    let (names, sets): (Vec<String>, Vec<Vec<u64>>) = match source {
        DiceSource::CommonNeighbors(g) => (
            g.users.names().to_vec(),
            g.adjacency
                .iter()
                .map(|adj| adj.iter().map(|e| e.0 .0 as u64).collect())
                .collect(),
        ),
        DiceSource::ItemTagPairs(c) => {
            let sets = (0..c.users().len() as u32)
                .map(|u| {
                    let mut v: Vec<u64> = c
                        .p_space(crate::ids::UserId(u))
                        .iter()
                        .map(|t| ((t.item.0 as u64) << 32) | t.tag.0 as u64)
                        .collect();
                    v.dedup();
                    v
                })
                .collect();
            (c.users().names().to_vec(), sets)
        }
        DiceSource::Tags(c) => {
            let sets = (0..c.users().len() as u32)
                .map(|u| {
                    let mut v: Vec<u64> = c
                        .p_space(crate::ids::UserId(u))
                        .iter()
                        .map(|t| t.tag.0 as u64)
                        .collect();
                    v.sort_unstable();
                    v.dedup();
                    v
                })
                .collect();
            (c.users().names().to_vec(), sets)
        }
    };
    let mut holders: HashMap<u64, Vec<u32>> = HashMap::new();
    for (u, set) in sets.iter().enumerate() {
        for &f in set {
            holders.entry(f).or_default().push(u as u32);
        }
    }
    let mut common: HashMap<(u32, u32), u32> = HashMap::new();
    for users in holders.values() {
        for (i, &a) in users.iter().enumerate() {
            for &b in &users[i + 1..] {
                *common.entry((a, b)).or_default() += 1;
            }
        }
    }
    let edges: Vec<(String, String, f64)> = common
        .into_iter()
        .map(|((a, b), n)| {
            let w = 2.0 * n as f64 / (sets[a as usize].len() + sets[b as usize].len()) as f64;
            (names[a as usize].clone(), names[b as usize].clone(), w)
        })
        .collect();
    SimilarityGraph::from_valid_edges(edges, names.iter().cloned())
}

/// How edge weights combine along a path into extended proximity.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum ProximityAggregator {
    /// Product of edge weights.
    #[default]
    MaxProduct,
    /// Product of edge weights times `lambda^(hops - 1)`.
    ExpDecay(f64),
}

impl ProximityAggregator {
    /// Proximity of a path extended by one edge. `from_seeker` marks the first hop.
    #[inline]
    pub fn extend(self, path: f64, weight: f64, from_seeker: bool) -> f64 {
        if from_seeker {
            return weight;
        }
        match self {
            ProximityAggregator::MaxProduct => path * weight,
            ProximityAggregator::ExpDecay(lambda) => path * weight * lambda,
        }
    }
}

/// One visited user and its extended proximity to the seeker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProximityEntry {
    pub user: GraphUserId,
    pub proximity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Frontier(f64, Reverse<GraphUserId>);

impl Eq for Frontier {}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Best-first exploration state, detached from the graph it walks so it can
/// live inside long-running sessions. Users come out by non-increasing
/// proximity, ties by ascending id; the seeker itself is never yielded.
#[derive(Debug, Clone)]
pub struct ProximityFrontier {
    seeker: Option<GraphUserId>,
    aggregator: ProximityAggregator,
    heap: BinaryHeap<Frontier>,
    best: HashMap<GraphUserId, f64>,
    settled: HashSet<GraphUserId>,
    started: bool,
    yielded: usize,
}

impl ProximityFrontier {
    pub fn new(seeker: Option<GraphUserId>, aggregator: ProximityAggregator) -> Self {
        let mut settled = HashSet::new();
        if let Some(s) = seeker {
            settled.insert(s);
        }
        Self {
            seeker,
            aggregator,
            heap: BinaryHeap::new(),
            best: HashMap::new(),
            settled,
            started: false,
            yielded: 0,
        }
    }

    /// Restarts the exploration from the seeker.
    pub fn reset(&mut self) {
        *self = Self::new(self.seeker, self.aggregator);
    }

    pub fn seeker(&self) -> Option<GraphUserId> {
        self.seeker
    }

    /// Number of users yielded since the last reset.
    pub fn yielded(&self) -> usize {
        self.yielded
    }

    fn relax(&mut self, g: &SimilarityGraph, from: GraphUserId, path: f64) {
        let from_seeker = Some(from) == self.seeker;
        for &(v, w) in g.neighbors(from) {
            if self.settled.contains(&v) {
                continue;
            }
            let p = self.aggregator.extend(path, w, from_seeker);
            let slot = self.best.entry(v).or_insert(f64::NEG_INFINITY);
            if p > *slot {
                *slot = p;
                self.heap.push(Frontier(p, Reverse(v)));
            }
        }
    }

    fn start(&mut self, g: &SimilarityGraph) {
        if !self.started {
            self.started = true;
            if let Some(s) = self.seeker {
                self.relax(g, s, 1.0);
            }
        }
    }

    fn discard_stale(&mut self) {
        while let Some(top) = self.heap.peek() {
            let v = top.1 .0;
            if self.settled.contains(&v) || self.best.get(&v) != Some(&top.0) {
                self.heap.pop();
            } else {
                break;
            }
        }
    }

    /// Proximity of the next user to be yielded (the bound on every
    /// not-yet-visited user), without consuming it.
    pub fn peek(&mut self, g: &SimilarityGraph) -> Option<f64> {
        self.start(g);
        self.discard_stale();
        self.heap.peek().map(|f| f.0)
    }

    pub fn next(&mut self, g: &SimilarityGraph) -> Option<ProximityEntry> {
        self.start(g);
        self.discard_stale();
        let Frontier(p, Reverse(u)) = self.heap.pop()?;
        self.settled.insert(u);
        self.relax(g, u, p);
        self.yielded += 1;
        Some(ProximityEntry { user: u, proximity: p })
    }
}

/// Borrowing iterator over a seeker's proximity vector.
pub struct ProximityIterator<'g> {
    graph: &'g SimilarityGraph,
    frontier: ProximityFrontier,
}

impl<'g> ProximityIterator<'g> {
    pub fn max_proximity(&mut self) -> Option<f64> {
        self.frontier.peek(self.graph)
    }
}

impl Iterator for ProximityIterator<'_> {
    type Item = ProximityEntry;

    fn next(&mut self) -> Option<ProximityEntry> {
        self.frontier.next(self.graph)
    }
}

/// Lazily streams every user reachable from `seeker` by non-increasing
/// extended proximity. Unknown seekers yield nothing.
pub fn proximity_iterator<'g>(g: &'g SimilarityGraph, seeker: &str, agg: ProximityAggregator) -> ProximityIterator<'g> {
    ProximityIterator {
        graph: g,
        frontier: ProximityFrontier::new(g.user_id(seeker), agg),
    }
}
