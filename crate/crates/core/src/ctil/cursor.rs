use std::collections::{HashMap, HashSet};

use super::trie::{better, Entry, NodeId};
use super::CtIlIndex;
use crate::ids::{ItemId, TagId};

/// Sorted-access cursor over one concrete inverted list.
#[derive(Debug, Clone)]
pub struct ListCursor {
    tag: TagId,
    pos: usize,
}

impl ListCursor {
    pub fn new(tag: TagId) -> Self {
        Self { tag, pos: 0 }
    }

    pub fn tag(&self) -> TagId {
        self.tag
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn head(&self, index: &CtIlIndex) -> Option<Entry> {
        index.list(self.tag).entry(self.pos)
    }

    /// Current head tf, 0 once exhausted.
    pub fn top_tf(&self, index: &CtIlIndex) -> u32 {
        self.head(index).map_or(0, |e| e.tf)
    }

    pub fn advance(&mut self, index: &CtIlIndex) -> Option<Entry> {
        let e = self.head(index)?;
        self.pos += 1;
        Some(e)
    }

    pub fn is_exhausted(&self, index: &CtIlIndex) -> bool {
        self.head(index).is_none()
    }
}

/// Ranked, per-item-deduplicated union of every list below a trie node.
///
/// The cursor owns an overlay of leaf positions and node scores, so the
/// shared index is never mutated. After every operation the cursor is
/// settled: its head belongs to an item not yet emitted, and every entry
/// still unread anywhere in the subtree ranks at or below that head.
#[derive(Debug, Clone)]
pub struct VirtualListCursor {
    prefix: String,
    root: NodeId,
    positions: HashMap<TagId, usize>,
    node_best: HashMap<NodeId, Option<Entry>>,
    emitted: HashSet<ItemId>,
    skipped: Vec<Entry>,
}

impl VirtualListCursor {
    pub(crate) fn new(index: &CtIlIndex, prefix: &str, root: NodeId) -> Self {
        let mut c = Self {
            prefix: prefix.to_string(),
            root,
            positions: HashMap::new(),
            node_best: HashMap::new(),
            emitted: HashSet::new(),
            skipped: Vec::new(),
        };
        c.settle(index);
        c
    }

    pub fn prefix(&self) -> &str {
        &self.prefix
    }

    fn best(&self, index: &CtIlIndex, node: NodeId) -> Option<Entry> {
        match self.node_best.get(&node) {
            Some(b) => *b,
            None => index.trie.node(node).initial_best,
        }
    }

    fn leaf_head(&self, index: &CtIlIndex, tag: TagId) -> Option<Entry> {
        index.list(tag).entry(self.positions.get(&tag).copied().unwrap_or(0))
    }

    /// Best not-yet-emitted entry, or `None` when exhausted.
    pub fn head(&self, index: &CtIlIndex) -> Option<Entry> {
        self.best(index, self.root)
    }

    /// Head tf, 0 once exhausted.
    pub fn top_tf(&self, index: &CtIlIndex) -> u32 {
        self.head(index).map_or(0, |e| e.tf)
    }

    pub fn is_exhausted(&self, index: &CtIlIndex) -> bool {
        self.head(index).is_none()
    }

    /// Emits the head and moves to the next entry of a not-yet-emitted item.
    pub fn advance(&mut self, index: &CtIlIndex) -> Option<Entry> {
        let e = self.head(index)?;
        self.pop_leaf(index, e.tag);
        self.emitted.insert(e.item);
        self.settle(index);
        Some(e)
    }

    /// Entries dropped by deduplication since the last call. Their tf values
    /// are exact facts the caller may want to keep.
    pub fn take_skipped(&mut self) -> Vec<Entry> {
        std::mem::take(&mut self.skipped)
    }

    pub fn was_emitted(&self, item: ItemId) -> bool {
        self.emitted.contains(&item)
    }

    pub fn emitted_count(&self) -> usize {
        self.emitted.len()
    }

    fn settle(&mut self, index: &CtIlIndex) {
        while let Some(e) = self.head(index) {
            if !self.emitted.contains(&e.item) {
                break;
            }
            self.pop_leaf(index, e.tag);
            self.skipped.push(e);
        }
    }

    fn pop_leaf(&mut self, index: &CtIlIndex, tag: TagId) {
        *self.positions.entry(tag).or_insert(0) += 1;
        let mut node = index.trie.leaf_of_tag[tag.index()];
        loop {
            let n = index.trie.node(node);
            let mut best = n.leaf.and_then(|t| self.leaf_head(index, t));
            for &c in &n.children {
                best = better(best, self.best(index, c));
            }
            self.node_best.insert(node, best);
            if node == self.root {
                break;
            }
            node = n.parent.expect("leaf below cursor root");
        }
    }

    /// Verifies that every node of the subtree holds the max of its
    /// children's and own leaf's current heads.
    pub fn heap_property_holds(&self, index: &CtIlIndex) -> bool {
        let mut stack = vec![self.root];
        while let Some(node) = stack.pop() {
            let n = index.trie.node(node);
            let mut expect = n.leaf.and_then(|t| self.leaf_head(index, t));
            for &c in &n.children {
                expect = better(expect, self.best(index, c));
                stack.push(c);
            }
            if expect != self.best(index, node) {
                return false;
            }
        }
        true
    }

    /// Max score (head tf) currently held by each node of the subtree, in
    /// preorder. Exposed for inspection and tests.
    pub fn node_scores(&self, index: &CtIlIndex) -> Vec<(NodeId, u32)> {
        let mut out = Vec::new();
        let mut stack = vec![self.root];
        while let Some(node) = stack.pop() {
            out.push((node, self.best(index, node).map_or(0, |e| e.tf)));
            stack.extend(index.trie.node(node).children.iter().rev());
        }
        out
    }
}
