//! The CT-IL index: a completion trie whose leaves are tf-ordered inverted
//! lists and whose nodes carry the best current list head below them.
//!
//! Every node of the trie can be read as a *virtual* inverted list, the
//! ranked union of the lists below it keeping only each item's best entry.
//! [`VirtualListCursor`] walks such a list lazily.

mod cursor;
mod trie;

pub use cursor::{ListCursor, VirtualListCursor};
pub use trie::{CompletionTrie, Entry, NodeId};

use crate::corpus::Corpus;
use crate::ids::{Interner, ItemId, TagId};

/// Items carrying one tag, sorted by tf descending then item id ascending.
#[derive(Debug, Clone)]
pub struct InvertedList {
    tag: TagId,
    entries: Vec<(ItemId, u32)>,
}

impl InvertedList {
    pub fn tag(&self) -> TagId {
        self.tag
    }

    pub fn entries(&self) -> &[(ItemId, u32)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, pos: usize) -> Option<Entry> {
        self.entries.get(pos).map(|&(item, tf)| Entry {
            item,
            tag: self.tag,
            tf,
        })
    }
}

#[derive(Debug, Clone)]
pub struct CtIlIndex {
    tags: Interner,
    lists: Vec<InvertedList>,
    trie: CompletionTrie,
}

/// Outcome of opening a cursor on a prefix no tag extends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("no tag completes the prefix")]
pub struct NoMatch;

impl CtIlIndex {
    pub fn build(c: &Corpus) -> Self {
        let lists: Vec<InvertedList> = (0..c.tags().len() as u32)
            .map(|t| {
                let tag = TagId(t);
                let mut entries = c.postings(tag).to_vec();
                entries.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
                InvertedList { tag, entries }
            })
            .collect();
        let heads: Vec<Option<Entry>> = lists.iter().map(|l| l.entry(0)).collect();
        let trie = CompletionTrie::build(c.tags().names(), &heads);
        Self {
            tags: c.tags().clone(),
            lists,
            trie,
        }
    }

    pub fn trie(&self) -> &CompletionTrie {
        &self.trie
    }

    pub fn list(&self, tag: TagId) -> &InvertedList {
        &self.lists[tag.index()]
    }

    pub fn tag_id(&self, tag: &str) -> Option<TagId> {
        self.tags.get(tag).map(TagId)
    }

    pub fn tag_name(&self, tag: TagId) -> &str {
        self.tags.name(tag.0)
    }

    pub fn num_tags(&self) -> usize {
        self.lists.len()
    }

    /// Tags extending `prefix`, as a contiguous id range.
    pub fn completions(&self, prefix: &str) -> std::ops::Range<u32> {
        self.tags.prefix_range(prefix)
    }

    pub fn open_list(&self, tag: TagId) -> ListCursor {
        ListCursor::new(tag)
    }

    /// Opens the virtual list for `prefix`, positioned on its best entry.
    pub fn open_cursor(&self, prefix: &str) -> Result<VirtualListCursor, NoMatch> {
        let node = self.trie.locate(prefix).ok_or(NoMatch)?;
        Ok(VirtualListCursor::new(self, prefix, node))
    }

    /// Head tf of `term`'s list with all cursors at their start: the concrete
    /// list when `term` is a vocabulary tag, the virtual list otherwise.
    pub fn top_tf(&self, term: &str) -> u32 {
        if let Some(t) = self.tag_id(term) {
            return self.list(t).entry(0).map_or(0, |e| e.tf);
        }
        self.trie
            .locate(term)
            .and_then(|n| self.trie.node(n).initial_best)
            .map_or(0, |e| e.tf)
    }

    /// Max score stored at the node reached by `prefix` (0 when absent).
    pub fn node_max_score(&self, prefix: &str) -> u32 {
        self.trie
            .locate(prefix)
            .and_then(|n| self.trie.node(n).initial_best)
            .map_or(0, |e| e.tf)
    }

    pub fn dump(&self) -> String {
        self.trie.dump(|t| self.tag_name(t).to_string())
    }
}
