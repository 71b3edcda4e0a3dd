use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, HashMap, HashSet};
use std::ops::Range;
use std::time::Instant;

use super::sum::ExactSum;
use super::{EngineConfig, Keystroke, Query, ResultEntry, Status, TopKResult};
use crate::ctil::{Entry, ListCursor, VirtualListCursor};
use crate::dataset::Dataset;
use crate::ids::{GraphUserId, ItemId, TagId};
use crate::socialgraph::ProximityFrontier;

/// Relative slack applied to upper bounds of unresolved items before they
/// are compared with a lower bound; absorbs rounding in the bound itself.
const EPS: f64 = 1e-12;

/// Iterations between wall-clock checks.
const CLOCK_STRIDE: u64 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Social,
    Textual,
}

/// Score range of one candidate as seen by the instrumentation hooks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateBounds {
    pub item: ItemId,
    pub min: f64,
    pub max: f64,
}

/// What is known about one (item, tag) pair.
#[derive(Debug, Clone, Default)]
struct TermStats {
    sf: ExactSum,
    sf_value: f64,
    visited: u32,
    tf_exact: Option<u32>,
}

impl TermStats {
    fn visit(&mut self, proximity: f64) {
        self.sf.add(proximity);
        self.sf_value = self.sf.value();
        self.visited += 1;
    }

    fn has_data(&self) -> bool {
        self.visited > 0 || self.tf_exact.is_some()
    }

    /// Upper bound on sf given an upper bound on tf and the frontier bound.
    #[inline]
    fn sf_upper(&self, tf_hi: u32, mp: f64) -> f64 {
        if tf_hi > self.visited {
            self.sf_value + mp * (tf_hi - self.visited) as f64
        } else {
            self.sf_value
        }
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    /// Aligned with the completed terms.
    completed: Vec<TermStats>,
    /// Completions of the prefix met for this item.
    prefix: Vec<(TagId, TermStats)>,
    /// tf of the entry the prefix cursor emitted for this item, which is the
    /// item's max tf over all completions.
    emitted_tf: Option<u32>,
    lo: f64,
}

impl Candidate {
    fn new(terms: usize) -> Self {
        Self {
            completed: vec![TermStats::default(); terms],
            prefix: Vec::new(),
            emitted_tf: None,
            lo: 0.0,
        }
    }

    fn prefix_stats(&mut self, tag: TagId) -> &mut TermStats {
        let pos = match self.prefix.iter().position(|(t, _)| *t == tag) {
            Some(p) => p,
            None => {
                self.prefix.push((tag, TermStats::default()));
                self.prefix.len() - 1
            }
        };
        &mut self.prefix[pos].1
    }

    fn has_data(&self) -> bool {
        !self.prefix.is_empty() || self.completed.iter().any(TermStats::has_data)
    }
}

#[derive(Debug, Clone)]
struct CompletedTerm {
    name: String,
    cursor: Option<ListCursor>,
    /// Frontier positions already accounted for in this term's statistics.
    coverage: usize,
}

/// Values shared by every upper bound at one instant.
struct BoundContext {
    mp: f64,
    heads: Vec<u32>,
    prefix_head: Option<u32>,
}

#[derive(Debug, Clone, Copy)]
struct Lo(f64);

impl PartialEq for Lo {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Lo {}

impl PartialOrd for Lo {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Lo {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Complete run state for one seeker: candidates, list cursors, the
/// proximity frontier and completion bookkeeping. Owns no references, so it
/// can be kept across keystrokes and moved between threads.
#[derive(Debug, Clone)]
pub struct SearchState {
    seeker: Option<GraphUserId>,
    config: EngineConfig,
    completed: Vec<CompletedTerm>,
    prefix: String,
    range: Range<u32>,
    prefix_cursor: Option<VirtualListCursor>,
    frontier: ProximityFrontier,
    last_proximity: f64,
    candidates: HashMap<ItemId, Candidate>,
    by_lo: BTreeSet<(Reverse<Lo>, ItemId)>,
    seen_completions: BTreeSet<TagId>,
    touched: HashSet<ItemId>,
    blocker: Option<ItemId>,
    iterations: u64,
}

impl SearchState {
    /// Empty query for `seeker` (`None` when the network does not know them).
    pub fn new(seeker: Option<GraphUserId>, config: EngineConfig) -> Self {
        Self {
            seeker,
            frontier: ProximityFrontier::new(seeker, config.aggregator),
            config,
            completed: Vec::new(),
            prefix: String::new(),
            range: 0..0,
            prefix_cursor: None,
            last_proximity: f64::INFINITY,
            candidates: HashMap::new(),
            by_lo: BTreeSet::new(),
            seen_completions: BTreeSet::new(),
            touched: HashSet::new(),
            blocker: None,
            iterations: 0,
        }
    }

    pub fn with_query(ds: &Dataset, seeker: Option<GraphUserId>, query: &Query, config: EngineConfig) -> Self {
        let mut s = Self::new(seeker, config);
        for t in &query.completed {
            if !s.completed.iter().any(|c| &c.name == t) {
                s.completed.push(CompletedTerm {
                    name: t.clone(),
                    cursor: ds.index().tag_id(t).map(ListCursor::new),
                    coverage: 0,
                });
            }
        }
        s.set_prefix(ds, query.prefix.clone());
        s
    }

    pub fn seeker(&self) -> Option<GraphUserId> {
        self.seeker
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn query(&self) -> Query {
        Query {
            completed: self.completed.iter().map(|c| c.name.clone()).collect(),
            prefix: self.prefix.clone(),
        }
    }

    /// Users taken from the frontier since it was last (re)started.
    pub fn visited_users(&self) -> usize {
        self.frontier.yielded()
    }

    pub fn num_candidates(&self) -> usize {
        self.candidates.len()
    }

    /// Prefix completions met in p-spaces so far.
    pub fn seen_completions(&self) -> impl Iterator<Item = TagId> + '_ {
        self.seen_completions.iter().copied()
    }

    fn restart_frontier(&mut self) {
        self.frontier.reset();
        self.last_proximity = f64::INFINITY;
    }

    fn set_prefix(&mut self, ds: &Dataset, prefix: String) {
        self.range = if prefix.is_empty() {
            0..0
        } else {
            ds.index().completions(&prefix)
        };
        self.prefix_cursor = if prefix.is_empty() {
            None
        } else {
            ds.index().open_cursor(&prefix).ok()
        };
        self.prefix = prefix;
        let range = self.range.clone();
        self.seen_completions.retain(|t| range.contains(&t.0));
        for c in self.candidates.values_mut() {
            c.prefix.retain(|(t, _)| range.contains(&t.0));
            c.emitted_tf = None;
        }
        self.candidates.retain(|_, c| c.has_data());
        self.rebuild_lower_bounds();
    }

    /// Applies one keystroke to the query and the run state, without
    /// searching.
    pub fn apply(&mut self, ds: &Dataset, key: Keystroke) {
        match key {
            Keystroke::AppendChar(c) if c.is_whitespace() => self.apply(ds, Keystroke::NewTerm),
            Keystroke::AppendChar(c) => {
                if self.prefix.is_empty() {
                    // Users visited while no prefix was active never had
                    // their prefix triples read.
                    self.restart_frontier();
                }
                let mut p = self.prefix.clone();
                p.extend(c.to_lowercase());
                self.set_prefix(ds, p);
            }
            Keystroke::NewTerm => {
                if !self.prefix.is_empty() {
                    self.freeze_prefix(ds);
                }
                self.set_prefix(ds, String::new());
                self.restart_frontier();
            }
        }
        self.blocker = None;
    }

    fn freeze_prefix(&mut self, ds: &Dataset) {
        let name = self.prefix.clone();
        if self.completed.iter().any(|c| c.name == name) {
            return;
        }
        let tag = ds.index().tag_id(&name);
        self.completed.push(CompletedTerm {
            name,
            cursor: tag.map(ListCursor::new),
            coverage: self.frontier.yielded(),
        });
        for c in self.candidates.values_mut() {
            let stats = tag
                .and_then(|t| c.prefix.iter().position(|(x, _)| *x == t))
                .map(|p| c.prefix.swap_remove(p).1)
                .unwrap_or_default();
            // The prefix cursor's tf reading is a max over completions and
            // says nothing exact about this one tag.
            c.completed.push(stats);
        }
    }

    fn rebuild_lower_bounds(&mut self) {
        self.by_lo.clear();
        let ids: Vec<ItemId> = self.candidates.keys().copied().collect();
        for id in ids {
            let lo = self.lower(&self.candidates[&id]);
            self.candidates.get_mut(&id).unwrap().lo = lo;
            self.by_lo.insert((Reverse(Lo(lo)), id));
        }
        self.touched.clear();
    }

    fn refresh_touched(&mut self) {
        for id in std::mem::take(&mut self.touched) {
            let c = &self.candidates[&id];
            let (old, new) = (c.lo, self.lower(c));
            if old != new || !self.by_lo.contains(&(Reverse(Lo(old)), id)) {
                self.by_lo.remove(&(Reverse(Lo(old)), id));
                self.by_lo.insert((Reverse(Lo(new)), id));
                self.candidates.get_mut(&id).unwrap().lo = new;
            }
        }
    }

    fn candidate(&mut self, item: ItemId) -> &mut Candidate {
        let terms = self.completed.len();
        self.touched.insert(item);
        self.candidates.entry(item).or_insert_with(|| Candidate::new(terms))
    }

    // ---- bounds ----

    fn lower(&self, c: &Candidate) -> f64 {
        let cfg = &self.config;
        let mut total = 0.0;
        for s in &c.completed {
            total += cfg.term_score(s.tf_exact.unwrap_or(s.visited) as f64, s.sf_value);
        }
        if self.prefix_cursor.is_some() {
            let tf = c.emitted_tf.unwrap_or_else(|| {
                c.prefix
                    .iter()
                    .map(|(_, s)| s.tf_exact.unwrap_or(s.visited))
                    .max()
                    .unwrap_or(0)
            });
            let sf = c.prefix.iter().map(|(_, s)| s.sf_value).fold(0.0, f64::max);
            total += cfg.term_score(tf as f64, sf);
        }
        total
    }

    fn context(&mut self, ds: &Dataset) -> BoundContext {
        let idx = ds.index();
        BoundContext {
            mp: self.frontier.peek(ds.graph()).unwrap_or(0.0),
            heads: self
                .completed
                .iter()
                .map(|c| c.cursor.as_ref().map_or(0, |l| l.top_tf(idx)))
                .collect(),
            prefix_head: self.prefix_cursor.as_ref().map(|v| v.top_tf(idx)),
        }
    }

    fn upper(&self, c: &Candidate, ctx: &BoundContext) -> f64 {
        let cfg = &self.config;
        let mut total = 0.0;
        for (s, &head) in c.completed.iter().zip(&ctx.heads) {
            let tf = s.tf_exact.unwrap_or(head);
            total += cfg.term_score(tf as f64, s.sf_upper(tf, ctx.mp));
        }
        if let Some(vhead) = ctx.prefix_head {
            let tf = c.emitted_tf.unwrap_or(vhead);
            // Completions with no visited tagger yet can still reach mp * tf.
            let mut sf = ctx.mp * tf as f64;
            for (_, s) in &c.prefix {
                sf = sf.max(s.sf_upper(s.tf_exact.unwrap_or(tf), ctx.mp));
            }
            total += cfg.term_score(tf as f64, sf);
        }
        total
    }

    fn wildcard(&self, ctx: &BoundContext) -> f64 {
        let cfg = &self.config;
        ctx.heads
            .iter()
            .chain(ctx.prefix_head.iter())
            .map(|&h| cfg.term_score(h as f64, ctx.mp * h as f64))
            .sum()
    }

    /// Upper bound on the score of any item that is not yet a candidate.
    pub fn wildcard_upper(&mut self, ds: &Dataset) -> f64 {
        let ctx = self.context(ds);
        self.wildcard(&ctx)
    }

    /// Current score range of every candidate, by item id.
    pub fn candidate_bounds(&mut self, ds: &Dataset) -> Vec<CandidateBounds> {
        self.refresh_touched();
        let ctx = self.context(ds);
        let mut out: Vec<CandidateBounds> = self
            .candidates
            .iter()
            .map(|(&item, c)| CandidateBounds {
                item,
                min: c.lo,
                max: self.upper(c, &ctx),
            })
            .collect();
        out.sort_by_key(|b| b.item);
        out
    }

    // ---- steps ----

    fn social_available(&mut self, ds: &Dataset) -> bool {
        if self.config.alpha >= 1.0 {
            return false;
        }
        if self
            .config
            .max_visited_users
            .is_some_and(|cap| self.frontier.yielded() >= cap)
        {
            return false;
        }
        self.frontier.peek(ds.graph()).is_some()
    }

    fn textual_available(&self, ds: &Dataset) -> bool {
        if self.config.alpha <= 0.0 {
            return false;
        }
        let idx = ds.index();
        self.completed
            .iter()
            .any(|c| c.cursor.as_ref().is_some_and(|l| !l.is_exhausted(idx)))
            || self.prefix_cursor.as_ref().is_some_and(|v| !v.is_exhausted(idx))
    }

    /// Picks the branch with the larger potential gain, or `None` when
    /// neither can make progress.
    pub fn choose_branch(&mut self, ds: &Dataset) -> Option<Branch> {
        match (self.social_available(ds), self.textual_available(ds)) {
            (false, false) => None,
            (true, false) => Some(Branch::Social),
            (false, true) => Some(Branch::Textual),
            (true, true) => {
                let ctx = self.context(ds);
                let heads: f64 = ctx.heads.iter().chain(ctx.prefix_head.iter()).map(|&h| h as f64).sum();
                let social = (1.0 - self.config.alpha) * ctx.mp * heads;
                let textual = self.config.alpha * self.config.tf_scale * heads;
                Some(if social >= textual {
                    Branch::Social
                } else {
                    Branch::Textual
                })
            }
        }
    }

    /// One main-loop iteration. Returns the branch taken, or `None` when no
    /// progress is possible.
    pub fn step(&mut self, ds: &Dataset) -> Option<Branch> {
        let branch = self.choose_branch(ds)?;
        match branch {
            Branch::Social => self.social_step(ds),
            Branch::Textual => self.textual_step(ds),
        }
        self.process_ctil(ds);
        self.refresh_touched();
        self.iterations += 1;
        Some(branch)
    }

    fn social_step(&mut self, ds: &Dataset) {
        let Some(e) = self.frontier.next(ds.graph()) else {
            return;
        };
        debug_assert!(e.proximity <= self.last_proximity, "frontier order violated");
        self.last_proximity = e.proximity;
        let pos = self.frontier.yielded();
        let Some(user) = ds.corpus_user(e.user) else { return };
        let active: Vec<Option<TagId>> = self
            .completed
            .iter()
            .map(|c| {
                if pos > c.coverage {
                    c.cursor.as_ref().map(ListCursor::tag)
                } else {
                    None
                }
            })
            .collect();
        let has_prefix = self.prefix_cursor.is_some();
        for t in ds.corpus().p_space(user) {
            for (j, tag) in active.iter().enumerate() {
                if *tag == Some(t.tag) {
                    self.candidate(t.item).completed[j].visit(e.proximity);
                }
            }
            if has_prefix && self.range.contains(&t.tag.0) {
                self.seen_completions.insert(t.tag);
                self.candidate(t.item).prefix_stats(t.tag).visit(e.proximity);
            }
        }
        for c in &mut self.completed {
            c.coverage = c.coverage.max(pos);
        }
    }

    fn record_prefix_read(&mut self, e: Entry, skipped: Vec<Entry>) {
        let c = self.candidate(e.item);
        c.emitted_tf = Some(e.tf);
        c.prefix_stats(e.tag).tf_exact = Some(e.tf);
        for s in skipped {
            self.candidate(s.item).prefix_stats(s.tag).tf_exact = Some(s.tf);
        }
    }

    /// Consumes list heads that refer to candidates, recording exact tf.
    fn process_ctil(&mut self, ds: &Dataset) {
        let idx = ds.index();
        for j in 0..self.completed.len() {
            let Some(mut cur) = self.completed[j].cursor.take() else {
                continue;
            };
            while let Some(h) = cur.head(idx) {
                if !self.candidates.contains_key(&h.item) {
                    break;
                }
                cur.advance(idx);
                self.candidate(h.item).completed[j].tf_exact = Some(h.tf);
            }
            self.completed[j].cursor = Some(cur);
        }
        if let Some(mut cur) = self.prefix_cursor.take() {
            while let Some(h) = cur.head(idx) {
                if !self.candidates.contains_key(&h.item) {
                    break;
                }
                cur.advance(idx);
                let skipped = cur.take_skipped();
                self.record_prefix_read(h, skipped);
            }
            self.prefix_cursor = Some(cur);
        }
    }

    /// One sorted access on every query-term list.
    fn textual_step(&mut self, ds: &Dataset) {
        let idx = ds.index();
        for j in 0..self.completed.len() {
            let Some(mut cur) = self.completed[j].cursor.take() else {
                continue;
            };
            if let Some(h) = cur.advance(idx) {
                self.candidate(h.item).completed[j].tf_exact = Some(h.tf);
            }
            self.completed[j].cursor = Some(cur);
        }
        if let Some(mut cur) = self.prefix_cursor.take() {
            if let Some(h) = cur.advance(idx) {
                let skipped = cur.take_skipped();
                self.record_prefix_read(h, skipped);
            }
            self.prefix_cursor = Some(cur);
        }
    }

    // ---- termination and extraction ----

    /// Best `k` candidates by lower bound (ties by item id) with a positive
    /// lower bound.
    fn top_by_lower(&self) -> Vec<(ItemId, f64)> {
        self.by_lo
            .iter()
            .take(self.config.k)
            .take_while(|(Reverse(Lo(lo)), _)| *lo > 0.0)
            .map(|&(Reverse(Lo(lo)), id)| (id, lo))
            .collect()
    }

    /// Whether an item with range `[lo_j, hi_j]` could still rank above an
    /// item scoring at least `lo_i`.
    #[inline]
    fn could_outrank(lo_j: f64, hi_j: f64, id_j: ItemId, lo_i: f64, id_i: ItemId) -> bool {
        if lo_j == hi_j {
            hi_j > lo_i || (hi_j == lo_i && id_j < id_i)
        } else {
            hi_j * (1.0 + EPS) >= lo_i
        }
    }

    /// The stopping test: the current best `k` are resolved and nothing
    /// else, seen or unseen, can overtake them.
    pub fn termination_met(&mut self, ds: &Dataset) -> bool {
        self.refresh_touched();
        let ctx = self.context(ds);
        let wild = self.wildcard(&ctx);
        let top = self.top_by_lower();
        let short = top.len() < self.config.k;
        if short && wild > 0.0 {
            return false;
        }
        let (id_k, lo_k) = top.last().copied().unwrap_or((ItemId(u32::MAX), 0.0));
        if !short && wild * (1.0 + EPS) >= lo_k {
            return false;
        }
        for &(id, lo) in &top {
            if self.upper(&self.candidates[&id], &ctx) != lo {
                return false;
            }
        }
        let blocks = |this: &Self, id: ItemId, c: &Candidate| {
            let hi = this.upper(c, &ctx);
            if short {
                hi > 0.0
            } else {
                Self::could_outrank(c.lo, hi, id, lo_k, id_k)
            }
        };
        if let Some(b) = self.blocker {
            if let Some(c) = self.candidates.get(&b) {
                if !top.iter().any(|&(id, _)| id == b) && blocks(self, b, c) {
                    return false;
                }
            }
        }
        let in_top: HashSet<ItemId> = top.iter().map(|&(id, _)| id).collect();
        self.blocker = self
            .candidates
            .iter()
            .find(|&(id, c)| !in_top.contains(id) && blocks(self, *id, c))
            .map(|(&id, _)| id);
        self.blocker.is_none()
    }

    fn exact_result(&self) -> Vec<ResultEntry> {
        self.top_by_lower()
            .into_iter()
            .map(|(item, lo)| ResultEntry {
                item,
                min: lo,
                max: lo,
                status: Status::Guaranteed,
            })
            .collect()
    }

    /// Most likely top-k from the current bounds: items that provably belong
    /// first, then the rest by range midpoint.
    pub fn anytime_topk(&mut self, ds: &Dataset) -> Vec<ResultEntry> {
        self.refresh_touched();
        let ctx = self.context(ds);
        let wild = self.wildcard(&ctx);
        let k = self.config.k;
        let all: Vec<(ItemId, f64, f64)> = self
            .candidates
            .iter()
            .map(|(&id, c)| (id, c.lo, self.upper(c, &ctx)))
            .filter(|&(_, _, hi)| hi > 0.0)
            .collect();
        let hi_of: HashMap<ItemId, f64> = all.iter().map(|&(id, _, hi)| (id, hi)).collect();
        let mut out = Vec::with_capacity(k);
        for (id, lo) in self.top_by_lower() {
            if wild * (1.0 + EPS) >= lo {
                continue;
            }
            let mut rivals = 0;
            for &(j, lo_j, hi_j) in &all {
                if j != id && Self::could_outrank(lo_j, hi_j, j, lo, id) {
                    rivals += 1;
                    if rivals >= k {
                        break;
                    }
                }
            }
            if rivals < k {
                out.push(ResultEntry {
                    item: id,
                    min: lo,
                    max: hi_of[&id],
                    status: Status::Guaranteed,
                });
            }
        }
        let need = k - out.len();
        if need > 0 {
            let chosen: HashSet<ItemId> = out.iter().map(|e| e.item).collect();
            let mut rest: Vec<(ItemId, f64, f64)> = all.into_iter().filter(|(id, _, _)| !chosen.contains(id)).collect();
            let order = |a: &(ItemId, f64, f64), b: &(ItemId, f64, f64)| {
                let (ma, mb) = ((a.1 + a.2) / 2.0, (b.1 + b.2) / 2.0);
                mb.total_cmp(&ma).then(b.1.total_cmp(&a.1)).then(a.0.cmp(&b.0))
            };
            if rest.len() > need {
                rest.select_nth_unstable_by(need - 1, order);
                rest.truncate(need);
            }
            rest.sort_by(order);
            out.extend(rest.into_iter().map(|(item, min, max)| ResultEntry {
                item,
                min,
                max,
                status: Status::Possible,
            }));
        }
        out
    }

    /// Runs the main loop until termination, budget exhaustion or lack of
    /// work, and reports the best answer available.
    pub fn run(&mut self, ds: &Dataset) -> TopKResult {
        let start = Instant::now();
        let mut n: u64 = 0;
        let exact = loop {
            if self.termination_met(ds) {
                break true;
            }
            if self.step(ds).is_none() {
                break self.termination_met(ds);
            }
            n += 1;
            if n.is_multiple_of(CLOCK_STRIDE) && self.config.time_budget.is_some_and(|b| start.elapsed() >= b) {
                break false;
            }
        };
        let entries = if exact {
            self.exact_result()
        } else {
            self.anytime_topk(ds)
        };
        TopKResult {
            entries,
            exact,
            visited_users: self.frontier.yielded(),
            elapsed: start.elapsed(),
        }
    }

    /// Main-loop iterations since the state was created.
    pub fn iterations(&self) -> u64 {
        self.iterations
    }
}
