//! Tagging triples: ingestion, filtering, tag expansion and the per-user /
//! per-tag access paths the search engine reads from.

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;

use crate::ids::{Interner, ItemId, TagId, UserId};

/// A single `Tagged(user, item, tag)` fact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub user: UserId,
    pub item: ItemId,
    pub tag: TagId,
}

/// A parse problem on one input line. Ingestion skips the line and keeps going.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TripleError {
    #[error("expected 3 tab-separated fields, found {0}")]
    FieldCount(usize),
    #[error("empty {0}")]
    Empty(&'static str),
    #[error("tag {0:?} contains whitespace")]
    TagWhitespace(String),
    #[error("invalid count {0:?}")]
    BadCount(String),
}

/// Canonical tag form: trimmed, lowercased, non-empty, no inner whitespace.
pub fn normalize_tag(raw: &str) -> Result<String, TripleError> {
    let tag = raw.trim().to_lowercase();
    if tag.is_empty() {
        return Err(TripleError::Empty("tag"));
    }
    if tag.chars().any(char::is_whitespace) {
        return Err(TripleError::TagWhitespace(tag));
    }
    Ok(tag)
}

/// Tag -> keyword co-occurrence counts used by [`expand_tags`].
#[derive(Debug, Clone, Default)]
pub struct Cooccurrence {
    table: HashMap<String, HashMap<String, u64>>,
}

impl Cooccurrence {
    pub fn insert(&mut self, tag: &str, keyword: &str, count: u64) -> Result<(), TripleError> {
        let tag = normalize_tag(tag)?;
        let keyword = normalize_tag(keyword)?;
        *self.table.entry(tag).or_default().entry(keyword).or_default() += count;
        Ok(())
    }

    /// Keywords for `tag`, by descending count then lexicographically.
    pub fn top_keywords(&self, tag: &str, max: usize) -> Vec<&str> {
        let Some(row) = self.table.get(tag) else {
            return Vec::new();
        };
        let mut kws: Vec<(&str, u64)> = row
            .iter()
            .filter(|(k, c)| **c > 0 && k.as_str() != tag)
            .map(|(k, c)| (k.as_str(), *c))
            .collect();
        kws.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        kws.into_iter().take(max).map(|(k, _)| k).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Parses `tag<TAB>keyword<TAB>count` lines.
    pub fn read<R: BufRead>(reader: R) -> std::io::Result<(Self, Vec<Diagnostic>)> {
        let mut out = Self::default();
        let mut diags = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            let line_no = n + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let res = if fields.len() != 3 {
                Err(TripleError::FieldCount(fields.len()))
            } else {
                fields[2]
                    .trim()
                    .parse::<u64>()
                    .map_err(|_| TripleError::BadCount(fields[2].to_string()))
                    .and_then(|c| out.insert(fields[0], fields[1], c))
            };
            if let Err(e) = res {
                diags.push(Diagnostic {
                    line: line_no,
                    message: e.to_string(),
                });
            }
        }
        Ok((out, diags))
    }
}

/// Accumulates string triples and interns them into a [`Corpus`].
#[derive(Debug, Default)]
pub struct CorpusBuilder {
    users: HashMap<String, u32>,
    items: HashMap<String, u32>,
    tags: HashMap<String, u32>,
    triples: Vec<[u32; 3]>,
    cooccurrence: Option<Cooccurrence>,
}

fn intern(map: &mut HashMap<String, u32>, name: &str) -> u32 {
    if let Some(&id) = map.get(name) {
        return id;
    }
    let id = map.len() as u32;
    map.insert(name.to_string(), id);
    id
}

impl CorpusBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_cooccurrence(mut self, table: Cooccurrence) -> Self {
        self.cooccurrence = Some(table);
        self
    }

    /// Adds one triple; the tag is normalized. Duplicates are allowed here and
    /// collapsed by [`CorpusBuilder::build`].
    pub fn add(&mut self, user: &str, item: &str, tag: &str) -> Result<(), TripleError> {
        let user = user.trim();
        let item = item.trim();
        if user.is_empty() {
            return Err(TripleError::Empty("user"));
        }
        if item.is_empty() {
            return Err(TripleError::Empty("item"));
        }
        let tag = normalize_tag(tag)?;
        let u = intern(&mut self.users, user);
        let i = intern(&mut self.items, item);
        let t = intern(&mut self.tags, &tag);
        self.triples.push([u, i, t]);
        Ok(())
    }

    pub fn build(self) -> Corpus {
        fn remap(map: HashMap<String, u32>) -> (Interner, Vec<u32>) {
            let mut old: Vec<(String, u32)> = map.into_iter().collect();
            old.sort_unstable();
            let mut to_new = vec![0u32; old.len()];
            for (new, (_, o)) in old.iter().enumerate() {
                to_new[*o as usize] = new as u32;
            }
            (Interner::from_names(old.into_iter().map(|(n, _)| n)), to_new)
        }
        let (users, umap) = remap(self.users);
        let (items, imap) = remap(self.items);
        let (tags, tmap) = remap(self.tags);
        let mut triples: Vec<Triple> = self
            .triples
            .into_iter()
            .map(|[u, i, t]| Triple {
                user: UserId(umap[u as usize]),
                item: ItemId(imap[i as usize]),
                tag: TagId(tmap[t as usize]),
            })
            .collect();
        triples.sort_unstable();
        triples.dedup();
        Corpus::from_parts(users, items, tags, triples, self.cooccurrence)
    }
}

/// An immutable, deduplicated set of tagging triples with its access paths.
#[derive(Debug, Clone)]
pub struct Corpus {
    users: Interner,
    items: Interner,
    tags: Interner,
    /// Sorted by (user, item, tag); a user's slice is its personal space.
    triples: Vec<Triple>,
    user_offsets: Vec<usize>,
    /// Per tag: (item, tf) sorted by item id.
    postings: Vec<Vec<(ItemId, u32)>>,
    cooccurrence: Option<Cooccurrence>,
}

impl Corpus {
    fn from_parts(
        users: Interner,
        items: Interner,
        tags: Interner,
        triples: Vec<Triple>,
        cooccurrence: Option<Cooccurrence>,
    ) -> Self {
        let mut user_offsets = vec![0usize; users.len() + 1];
        for t in &triples {
            user_offsets[t.user.index() + 1] += 1;
        }
        for u in 0..users.len() {
            user_offsets[u + 1] += user_offsets[u];
        }
        let mut counts: Vec<BTreeMap<ItemId, u32>> = vec![BTreeMap::new(); tags.len()];
        for t in &triples {
            *counts[t.tag.index()].entry(t.item).or_default() += 1;
        }
        let postings = counts.into_iter().map(|m| m.into_iter().collect()).collect();
        Self {
            users,
            items,
            tags,
            triples,
            user_offsets,
            postings,
            cooccurrence,
        }
    }

    pub fn empty() -> Self {
        CorpusBuilder::new().build()
    }

    pub fn users(&self) -> &Interner {
        &self.users
    }

    pub fn items(&self) -> &Interner {
        &self.items
    }

    pub fn tags(&self) -> &Interner {
        &self.tags
    }

    pub fn num_triples(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn user_id(&self, name: &str) -> Option<UserId> {
        self.users.get(name).map(UserId)
    }

    pub fn item_id(&self, name: &str) -> Option<ItemId> {
        self.items.get(name).map(ItemId)
    }

    pub fn tag_id(&self, name: &str) -> Option<TagId> {
        self.tags.get(name).map(TagId)
    }

    pub fn user_name(&self, id: UserId) -> &str {
        self.users.name(id.0)
    }

    pub fn item_name(&self, id: ItemId) -> &str {
        self.items.name(id.0)
    }

    pub fn tag_name(&self, id: TagId) -> &str {
        self.tags.name(id.0)
    }

    /// The personal space of `user`: its triples ordered by (item, tag).
    pub fn p_space(&self, user: UserId) -> &[Triple] {
        &self.triples[self.user_offsets[user.index()]..self.user_offsets[user.index() + 1]]
    }

    /// Number of distinct users who tagged `item` with `tag`.
    pub fn tf(&self, tag: TagId, item: ItemId) -> u32 {
        let list = &self.postings[tag.index()];
        list.binary_search_by_key(&item, |e| e.0)
            .map(|p| list[p].1)
            .unwrap_or(0)
    }

    /// (item, tf) pairs for `tag`, ordered by item id.
    pub fn postings(&self, tag: TagId) -> &[(ItemId, u32)] {
        &self.postings[tag.index()]
    }

    /// Tags extending `prefix`, as a contiguous id range.
    pub fn completions(&self, prefix: &str) -> std::ops::Range<u32> {
        self.tags.prefix_range(prefix)
    }

    pub fn cooccurrence(&self) -> Option<&Cooccurrence> {
        self.cooccurrence.as_ref()
    }

    /// Triples as owned name strings, in corpus order.
    pub fn named_triples(&self) -> impl Iterator<Item = (&str, &str, &str)> + '_ {
        self.triples
            .iter()
            .map(|t| (self.user_name(t.user), self.item_name(t.item), self.tag_name(t.tag)))
    }

    /// Copy of the corpus with the triples rejected by `keep` removed.
    pub fn retain(&self, mut keep: impl FnMut(&Triple) -> bool) -> Corpus {
        let mut b = CorpusBuilder::new();
        b.cooccurrence = self.cooccurrence.clone();
        for t in self.triples.iter().filter(|t| keep(t)) {
            b.add(self.user_name(t.user), self.item_name(t.item), self.tag_name(t.tag))
                .expect("corpus triples are already normalized");
        }
        b.build()
    }

    /// Writes the corpus as `user<TAB>item<TAB>tag` lines.
    pub fn write_tsv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        for (u, i, t) in self.named_triples() {
            writeln!(w, "{u}\t{i}\t{t}")?;
        }
        Ok(())
    }
}

/// `(user, item, tag)` as read from a file.
pub type NamedTriple = (String, String, String);

/// Result of reading a triple stream.
#[derive(Debug)]
pub struct Ingested {
    pub corpus: Corpus,
    pub diagnostics: Vec<Diagnostic>,
}

/// Reads raw `user<TAB>item<TAB>tag` lines, keeping line order. Lines starting
/// with `#` and blank lines are skipped; malformed lines produce diagnostics.
pub fn read_raw_triples<R: BufRead>(reader: R) -> std::io::Result<(Vec<NamedTriple>, Vec<Diagnostic>)> {
    let mut out = Vec::new();
    let mut diags = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = n + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            diags.push(Diagnostic {
                line: line_no,
                message: TripleError::FieldCount(fields.len()).to_string(),
            });
            continue;
        }
        let checked = if fields[0].trim().is_empty() {
            Err(TripleError::Empty("user"))
        } else if fields[1].trim().is_empty() {
            Err(TripleError::Empty("item"))
        } else {
            normalize_tag(fields[2])
        };
        match checked {
            Ok(tag) => out.push((fields[0].trim().to_string(), fields[1].trim().to_string(), tag)),
            Err(e) => diags.push(Diagnostic {
                line: line_no,
                message: e.to_string(),
            }),
        }
    }
    Ok((out, diags))
}

/// Parses a triple stream into a corpus.
pub fn ingest_triples<R: BufRead>(reader: R) -> std::io::Result<Ingested> {
    let (raw, diagnostics) = read_raw_triples(reader)?;
    let mut b = CorpusBuilder::new();
    for (u, i, t) in &raw {
        b.add(u, i, t).expect("validated by read_raw_triples");
    }
    Ok(Ingested {
        corpus: b.build(),
        diagnostics,
    })
}

/// Removes items tagged by fewer than `min_users_per_item` distinct users and
/// users tagging fewer than `min_items_per_user` distinct items, repeating
/// until neither rule removes anything.
pub fn filter_corpus(c: &Corpus, min_users_per_item: usize, min_items_per_user: usize) -> Corpus {
    fn distinct<T: Ord>(v: &mut Vec<T>) -> usize {
        v.sort_unstable();
        v.dedup();
        v.len()
    }
    let mut alive = vec![true; c.triples.len()];
    loop {
        let mut item_users: HashMap<ItemId, Vec<UserId>> = HashMap::new();
        let mut user_items: HashMap<UserId, Vec<ItemId>> = HashMap::new();
        for (t, _) in c.triples.iter().zip(&alive).filter(|(_, a)| **a) {
            item_users.entry(t.item).or_default().push(t.user);
            user_items.entry(t.user).or_default().push(t.item);
        }
        let item_ok: HashMap<ItemId, bool> = item_users
            .into_iter()
            .map(|(i, mut v)| (i, distinct(&mut v) >= min_users_per_item))
            .collect();
        let user_ok: HashMap<UserId, bool> = user_items
            .into_iter()
            .map(|(u, mut v)| (u, distinct(&mut v) >= min_items_per_user))
            .collect();
        let mut changed = false;
        for (t, a) in c.triples.iter().zip(alive.iter_mut()) {
            if *a && !(item_ok[&t.item] && user_ok[&t.user]) {
                *a = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut flags = alive.into_iter();
    c.retain(|_| flags.next().unwrap_or(false))
}

/// Adds, for every triple `(u, i, t)`, the triples `(u, i, w)` for the (at most)
/// `max_keywords` keywords `w` co-occurring most with `t`. Identity when the
/// corpus carries no co-occurrence table.
pub fn expand_tags(c: &Corpus, max_keywords: usize) -> Corpus {
    let Some(table) = c.cooccurrence.as_ref().filter(|t| !t.is_empty()) else {
        return c.clone();
    };
    let mut b = CorpusBuilder::new().with_cooccurrence(table.clone());
    for (u, i, t) in c.named_triples() {
        b.add(u, i, t).expect("normalized");
        for w in table.top_keywords(t, max_keywords) {
            b.add(u, i, w).expect("normalized");
        }
    }
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(lines: &str) -> Corpus {
        ingest_triples(lines.as_bytes()).unwrap().corpus
    }

    #[test]
    fn ingest_counts_distinct_taggers() {
        let c = corpus("Bob\ti6\tglasses\nCarol\ti6\tglasses\nBob\ti6\tstyle\n");
        let glasses = c.tag_id("glasses").unwrap();
        let style = c.tag_id("style").unwrap();
        let i6 = c.item_id("i6").unwrap();
        assert_eq!(c.tf(glasses, i6), 2);
        assert_eq!(c.tf(style, i6), 1);
        let bob = c.user_id("Bob").unwrap();
        let ps: Vec<_> = c
            .p_space(bob)
            .iter()
            .map(|t| (c.item_name(t.item), c.tag_name(t.tag)))
            .collect();
        assert_eq!(ps, vec![("i6", "glasses"), ("i6", "style")]);
    }

    #[test]
    fn empty_stream_is_valid() {
        let c = corpus("");
        assert_eq!(c.num_triples(), 0);
        assert_eq!(c.tags().len(), 0);
    }

    #[test]
    fn duplicates_collapse() {
        let once = corpus("u\ti\tt\n");
        let many = corpus(&"u\ti\tt\n".repeat(5));
        assert_eq!(many.num_triples(), 1);
        let (t, i) = (many.tag_id("t").unwrap(), many.item_id("i").unwrap());
        assert_eq!(
            many.tf(t, i),
            once.tf(once.tag_id("t").unwrap(), once.item_id("i").unwrap())
        );
    }

    #[test]
    fn malformed_lines_are_reported_and_skipped() {
        let input = "# header\nu1\ti1\tRock\nbroken line\nu2\ti1\t  \nu3\ti2\tjazz\n\nu4\ti3\ttwo words\n";
        let ing = ingest_triples(input.as_bytes()).unwrap();
        assert_eq!(ing.corpus.num_triples(), 2);
        let lines: Vec<usize> = ing.diagnostics.iter().map(|d| d.line).collect();
        assert_eq!(lines, vec![3, 4, 7]);
        assert!(ing.corpus.tag_id("rock").is_some(), "tags are lowercased");
    }

    #[test]
    fn filter_removes_single_tagger_items() {
        let c = corpus("a\ti1\tx\nb\ti2\tx\nc\ti3\ty\na\ti4\ty\n");
        assert!(filter_corpus(&c, 2, 2).is_empty());
    }

    #[test]
    fn filter_keeps_satisfying_corpus() {
        let c = corpus("a\ti1\tx\nb\ti1\tx\na\ti2\ty\nb\ti2\tz\n");
        let f = filter_corpus(&c, 2, 2);
        assert_eq!(f.triples(), c.triples());
    }

    #[test]
    fn expand_without_table_is_identity() {
        let c = corpus("a\ti1\tx\nb\ti1\ty\n");
        assert_eq!(expand_tags(&c, 5).triples(), c.triples());
    }

    #[test]
    fn top_keywords_tie_break() {
        let mut t = Cooccurrence::default();
        for (k, n) in [("b", 2), ("a", 2), ("c", 5), ("d", 1), ("e", 1), ("f", 1), ("g", 3)] {
            t.insert("x", k, n).unwrap();
        }
        assert_eq!(t.top_keywords("x", 5), vec!["c", "g", "a", "b", "d"]);
    }
}
