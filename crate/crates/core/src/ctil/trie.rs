use std::cmp::{Ordering, Reverse};
use std::fmt::Write as _;

use crate::ids::{ItemId, TagId};

/// One (item, tag, tf) posting as exposed by a (possibly virtual) list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Entry {
    pub item: ItemId,
    pub tag: TagId,
    pub tf: u32,
}

impl Entry {
    /// Larger key = earlier in list order: higher tf, then lower item id,
    /// then lower tag id (tag ids follow lexicographic order).
    #[inline]
    pub fn rank_key(&self) -> (u32, Reverse<ItemId>, Reverse<TagId>) {
        (self.tf, Reverse(self.item), Reverse(self.tag))
    }

    /// `Greater` when `self` comes first.
    #[inline]
    pub fn precedes(&self, other: &Entry) -> Ordering {
        self.rank_key().cmp(&other.rank_key())
    }
}

pub(crate) fn better(a: Option<Entry>, b: Option<Entry>) -> Option<Entry> {
    match (a, b) {
        (Some(x), Some(y)) => Some(if y.precedes(&x) == Ordering::Greater { y } else { x }),
        (x, None) => x,
        (None, y) => y,
    }
}

pub type NodeId = u32;

#[derive(Debug, Clone)]
pub(crate) struct Node {
    pub label: String,
    pub children: Vec<NodeId>,
    pub leaf: Option<TagId>,
    pub parent: Option<NodeId>,
    /// Best list head among descendant leaves with every list at position 0.
    pub initial_best: Option<Entry>,
}

/// Patricia trie over the vocabulary. Edges carry character spans, so no
/// node other than a leaf has a single child.
#[derive(Debug, Clone, Default)]
pub struct CompletionTrie {
    pub(crate) nodes: Vec<Node>,
    pub(crate) leaf_of_tag: Vec<NodeId>,
}

impl CompletionTrie {
    /// `tags` must be sorted and distinct; `heads[t]` is the first entry of
    /// tag `t`'s list.
    pub(crate) fn build(tags: &[String], heads: &[Option<Entry>]) -> Self {
        let mut trie = CompletionTrie {
            nodes: Vec::new(),
            leaf_of_tag: vec![0; tags.len()],
        };
        if !tags.is_empty() {
            let chars: Vec<Vec<char>> = tags.iter().map(|t| t.chars().collect()).collect();
            trie.build_node(&chars, 0, tags.len(), 0, None, heads);
        }
        trie
    }

    fn build_node(
        &mut self,
        tags: &[Vec<char>],
        lo: usize,
        hi: usize,
        depth: usize,
        parent: Option<NodeId>,
        heads: &[Option<Entry>],
    ) -> NodeId {
        // Sorted input: the common prefix of the range is that of its ends.
        let (first, last) = (&tags[lo], &tags[hi - 1]);
        let mut end = depth;
        while end < first.len() && end < last.len() && first[end] == last[end] {
            end += 1;
        }
        let id = self.nodes.len() as NodeId;
        self.nodes.push(Node {
            label: first[depth..end].iter().collect(),
            children: Vec::new(),
            leaf: None,
            parent,
            initial_best: None,
        });
        let mut start = lo;
        let mut best = None;
        if first.len() == end {
            self.nodes[id as usize].leaf = Some(TagId(lo as u32));
            self.leaf_of_tag[lo] = id;
            best = heads[lo];
            start += 1;
        }
        let mut children = Vec::new();
        while start < hi {
            let c = tags[start][end];
            let mut stop = start + 1;
            while stop < hi && tags[stop][end] == c {
                stop += 1;
            }
            let child = self.build_node(tags, start, stop, end, Some(id), heads);
            best = better(best, self.nodes[child as usize].initial_best);
            children.push(child);
            start = stop;
        }
        let node = &mut self.nodes[id as usize];
        node.children = children;
        node.initial_best = best;
        id
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Highest node whose path extends `prefix`.
    pub fn locate(&self, prefix: &str) -> Option<NodeId> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut node = 0;
        let mut rest: &str = prefix;
        loop {
            let label = self.nodes[node as usize].label.as_str();
            if rest.len() <= label.len() {
                return label.starts_with(rest).then_some(node);
            }
            rest = rest.strip_prefix(label)?;
            let next = rest.chars().next()?;
            node = *self.nodes[node as usize]
                .children
                .iter()
                .find(|&&c| self.nodes[c as usize].label.starts_with(next))?;
        }
    }

    pub(crate) fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id as usize]
    }

    /// Indented dump: one node per line, `label [max_score]`, leaves marked `*`.
    pub fn dump(&self, tag_name: impl Fn(TagId) -> String) -> String {
        let mut out = String::new();
        if !self.nodes.is_empty() {
            self.dump_node(0, 0, &tag_name, &mut out);
        }
        out
    }

    fn dump_node(&self, id: NodeId, depth: usize, tag_name: &impl Fn(TagId) -> String, out: &mut String) {
        let n = &self.nodes[id as usize];
        let score = n.initial_best.map_or(0, |e| e.tf);
        let _ = write!(out, "{}{:?} [{}]", "  ".repeat(depth), n.label, score);
        if let Some(t) = n.leaf {
            let _ = write!(out, " * {}", tag_name(t));
        }
        out.push('\n');
        for &c in &n.children {
            self.dump_node(c, depth + 1, tag_name, out);
        }
    }
}
