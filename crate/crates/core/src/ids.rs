//! Dense identifiers and string interning.

use std::collections::HashMap;
use std::fmt;

macro_rules! dense_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
        pub struct $name(pub u32);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

dense_id!(
    /// A user of the tagging corpus.
    UserId
);
dense_id!(
    /// A tagged item.
    ItemId
);
dense_id!(
    /// A vocabulary tag. Tag ids follow the lexicographic order of the tag text,
    /// so the completions of any prefix occupy a contiguous id range.
    TagId
);
dense_id!(
    /// A node of the similarity graph. Graph ids are interned separately from
    /// corpus users because the network may contain users with no triples.
    GraphUserId
);

/// Bidirectional string <-> dense id table.
///
/// Ids are assigned in ascending string order, which makes every id-based
/// tie-break equivalent to a tie-break on the identifier text.
#[derive(Debug, Clone, Default)]
pub struct Interner {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl Interner {
    /// Builds an interner from arbitrary names; duplicates are collapsed.
    pub fn from_names<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut names: Vec<String> = names.into_iter().map(Into::into).collect();
        names.sort_unstable();
        names.dedup();
        let index = names.iter().enumerate().map(|(i, n)| (n.clone(), i as u32)).collect();
        Self { names, index }
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Ids whose name starts with `prefix`, as a half-open range.
    pub fn prefix_range(&self, prefix: &str) -> std::ops::Range<u32> {
        let lo = self.names.partition_point(|n| n.as_str() < prefix);
        let hi = lo + self.names[lo..].partition_point(|n| n.starts_with(prefix));
        lo as u32..hi as u32
    }
}
