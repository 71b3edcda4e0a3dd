//! Slow, obviously-correct reference implementations. Everything here is
//! computed by full enumeration and shares no code with the engine beyond
//! the data containers.

pub mod instances;

use std::collections::{BTreeMap, HashMap, HashSet};

use topks_core::corpus::Corpus;
use topks_core::engine::{EngineConfig, Query, ScoreTransform};
use topks_core::ids::{GraphUserId, ItemId, TagId, UserId};
use topks_core::socialgraph::{ProximityAggregator, SimilarityGraph};
use topks_core::Dataset;

/// Correctly rounded sum of non-negative finite floats, via a wide
/// fixed-point accumulator with unit 2^-1074.
pub fn exact_sum(xs: &[f64]) -> f64 {
    const WORDS: usize = 40;
    let mut acc = [0u64; WORDS];
    for &x in xs {
        assert!(x >= 0.0 && x.is_finite());
        if x == 0.0 {
            continue;
        }
        let bits = x.to_bits();
        let (exp, frac) = (bits >> 52, bits & ((1 << 52) - 1));
        let (m, shift) = if exp == 0 {
            (frac, 0)
        } else {
            (frac | (1 << 52), exp - 1)
        };
        // add m << shift
        let (w, b) = ((shift / 64) as usize, shift % 64);
        let wide = (m as u128) << b;
        let mut carry = 0u128;
        for (k, part) in [wide as u64, (wide >> 64) as u64].into_iter().enumerate() {
            let s = acc[w + k] as u128 + part as u128 + carry;
            acc[w + k] = s as u64;
            carry = s >> 64;
        }
        let mut k = w + 2;
        while carry > 0 {
            let s = acc[k] as u128 + carry;
            acc[k] = s as u64;
            carry = s >> 64;
            k += 1;
        }
    }
    let bit = |i: u64| (acc[(i / 64) as usize] >> (i % 64)) & 1;
    let Some(top) = (0..WORDS as u64 * 64).rev().find(|&i| bit(i) == 1) else {
        return 0.0;
    };
    if top < 53 {
        return f64::from_bits(acc[0]);
    }
    let shift = top - 52;
    let mut mant = 0u64;
    for i in (shift..=top).rev() {
        mant = (mant << 1) | bit(i);
    }
    let half = bit(shift - 1) == 1;
    let sticky = (0..shift - 1).any(|i| bit(i) == 1);
    if half && (sticky || mant & 1 == 1) {
        mant += 1;
    }
    f64::from_bits((shift << 52) + mant)
}

fn extend(agg: ProximityAggregator, path: Option<f64>, w: f64) -> f64 {
    match (path, agg) {
        (None, _) => w,
        (Some(p), ProximityAggregator::MaxProduct) => p * w,
        (Some(p), ProximityAggregator::ExpDecay(l)) => p * w * l,
    }
}

/// Extended proximity of every reachable user by enumerating all simple
/// paths from the seeker. Exponential; for small graphs only.
pub fn proximity_by_paths(
    g: &SimilarityGraph,
    seeker: GraphUserId,
    agg: ProximityAggregator,
) -> BTreeMap<GraphUserId, f64> {
    fn dfs(
        g: &SimilarityGraph,
        u: GraphUserId,
        path: Option<f64>,
        agg: ProximityAggregator,
        on_path: &mut HashSet<GraphUserId>,
        best: &mut BTreeMap<GraphUserId, f64>,
    ) {
        for &(v, w) in g.neighbors(u) {
            if on_path.contains(&v) {
                continue;
            }
            let p = extend(agg, path, w);
            let slot = best.entry(v).or_insert(f64::NEG_INFINITY);
            *slot = slot.max(p);
            on_path.insert(v);
            dfs(g, v, Some(p), agg, on_path, best);
            on_path.remove(&v);
        }
    }
    let mut best = BTreeMap::new();
    let mut on_path = HashSet::from([seeker]);
    dfs(g, seeker, None, agg, &mut on_path, &mut best);
    best
}

/// Extended proximity by repeated relaxation until nothing improves.
pub fn proximity_by_relaxation(
    g: &SimilarityGraph,
    seeker: GraphUserId,
    agg: ProximityAggregator,
) -> BTreeMap<GraphUserId, f64> {
    let mut best: BTreeMap<GraphUserId, f64> = BTreeMap::new();
    loop {
        let mut changed = false;
        for (a, b, w) in g.edges() {
            for (from, to) in [(a, b), (b, a)] {
                if to == seeker {
                    continue;
                }
                let path = if from == seeker {
                    None
                } else {
                    match best.get(&from) {
                        Some(&p) => Some(p),
                        None => continue,
                    }
                };
                let p = extend(agg, path, w);
                if best.get(&to).is_none_or(|&old| p > old) {
                    best.insert(to, p);
                    changed = true;
                }
            }
        }
        if !changed {
            return best;
        }
    }
}

/// Per-item exact score for a query, by complete enumeration of the
/// corpus. Items scoring zero are omitted.
pub fn scores(ds: &Dataset, seeker: Option<GraphUserId>, query: &Query, cfg: &EngineConfig) -> BTreeMap<ItemId, f64> {
    let c = ds.corpus();
    let prox: HashMap<UserId, f64> = match seeker {
        Some(s) => proximity_by_relaxation(ds.graph(), s, cfg.aggregator)
            .into_iter()
            .filter_map(|(g, p)| c.user_id(ds.graph().user_name(g)).map(|u| (u, p)))
            .collect(),
        None => HashMap::new(),
    };
    // (tag, item) -> (tf, sf contributions)
    let mut cells: HashMap<(TagId, ItemId), (u32, Vec<f64>)> = HashMap::new();
    for t in c.triples() {
        let cell = cells.entry((t.tag, t.item)).or_default();
        cell.0 += 1;
        if let Some(&p) = prox.get(&t.user) {
            cell.1.push(p);
        }
    }
    let fr = |tf: u32, sf: f64| {
        let x = cfg.alpha * cfg.tf_scale * tf as f64 + (1.0 - cfg.alpha) * sf;
        match cfg.transform {
            ScoreTransform::Identity => x,
            ScoreTransform::Log1p => x.ln_1p(),
        }
    };
    let cell = |tag: TagId, item: ItemId| -> (u32, f64) {
        cells
            .get(&(tag, item))
            .map_or((0, 0.0), |(tf, ps)| (*tf, exact_sum(ps)))
    };
    let mut completed: Vec<String> = Vec::new();
    for t in &query.completed {
        if !completed.contains(t) {
            completed.push(t.clone());
        }
    }
    let completions: Vec<TagId> = if query.prefix.is_empty() {
        Vec::new()
    } else {
        (0..c.tags().len() as u32)
            .map(TagId)
            .filter(|&t| c.tag_name(t).starts_with(query.prefix.as_str()))
            .collect()
    };
    let mut out = BTreeMap::new();
    for i in 0..c.items().len() as u32 {
        let item = ItemId(i);
        let mut total = 0.0;
        for t in &completed {
            let (tf, sf) = c.tag_id(t).map_or((0, 0.0), |tag| cell(tag, item));
            total += fr(tf, sf);
        }
        if !query.prefix.is_empty() {
            let (mut tf, mut sf) = (0u32, 0.0f64);
            for &t in &completions {
                let (a, b) = cell(t, item);
                tf = tf.max(a);
                sf = sf.max(b);
            }
            total += fr(tf, sf);
        }
        if total > 0.0 {
            out.insert(item, total);
        }
    }
    out
}

/// The k best items: score descending, then item id ascending.
pub fn top_k(scores: &BTreeMap<ItemId, f64>, k: usize) -> Vec<(ItemId, f64)> {
    let mut v: Vec<(ItemId, f64)> = scores.iter().map(|(&i, &s)| (i, s)).collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    v.truncate(k);
    v
}

/// Full drain of the virtual list for `prefix`: all postings of all
/// completions, best entry per item, ranked by tf then item then tag.
pub fn virtual_list(c: &Corpus, prefix: &str) -> Vec<(ItemId, TagId, u32)> {
    let mut best: BTreeMap<ItemId, (u32, TagId)> = BTreeMap::new();
    for t in 0..c.tags().len() as u32 {
        let tag = TagId(t);
        if !c.tag_name(tag).starts_with(prefix) {
            continue;
        }
        for &(item, tf) in c.postings(tag) {
            let e = best.entry(item).or_insert((tf, tag));
            if tf > e.0 || (tf == e.0 && tag < e.1) {
                *e = (tf, tag);
            }
        }
    }
    let mut v: Vec<(ItemId, TagId, u32)> = best.into_iter().map(|(i, (tf, t))| (i, t, tf)).collect();
    v.sort_by(|a, b| b.2.cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    v
}

/// Alternates the two support filters until neither removes anything.
pub fn naive_filter(c: &Corpus, min_users_per_item: usize, min_items_per_user: usize) -> Vec<(String, String, String)> {
    let mut triples: Vec<(String, String, String)> = c
        .named_triples()
        .map(|(u, i, t)| (u.to_string(), i.to_string(), t.to_string()))
        .collect();
    loop {
        let before = triples.len();
        let mut users_of: HashMap<&str, HashSet<&str>> = HashMap::new();
        for (u, i, _) in &triples {
            users_of.entry(i).or_default().insert(u);
        }
        let keep: Vec<bool> = triples
            .iter()
            .map(|(_, i, _)| users_of[i.as_str()].len() >= min_users_per_item)
            .collect();
        let mut it = keep.into_iter();
        triples.retain(|_| it.next().unwrap());
        let mut items_of: HashMap<&str, HashSet<&str>> = HashMap::new();
        for (u, i, _) in &triples {
            items_of.entry(u).or_default().insert(i);
        }
        let keep: Vec<bool> = triples
            .iter()
            .map(|(u, _, _)| items_of[u.as_str()].len() >= min_items_per_user)
            .collect();
        let mut it = keep.into_iter();
        triples.retain(|_| it.next().unwrap());
        if triples.len() == before {
            triples.sort();
            return triples;
        }
    }
}
