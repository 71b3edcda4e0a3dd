use std::sync::Arc;

use crate::corpus::Corpus;
use crate::ctil::CtIlIndex;
use crate::ids::{GraphUserId, UserId};
use crate::socialgraph::SimilarityGraph;

/// A corpus, its index and a user network, joined on user names. Immutable
/// once built and meant to be shared (e.g. behind an `Arc`) by sessions.
#[derive(Debug, Clone)]
pub struct Dataset {
    corpus: Corpus,
    index: CtIlIndex,
    graph: Arc<SimilarityGraph>,
    corpus_user: Vec<Option<UserId>>,
}

impl Dataset {
    pub fn new(corpus: Corpus, graph: SimilarityGraph) -> Self {
        Self::with_shared_graph(corpus, Arc::new(graph))
    }

    /// Like [`Dataset::new`], sharing a network with other datasets.
    pub fn with_shared_graph(corpus: Corpus, graph: Arc<SimilarityGraph>) -> Self {
        let index = CtIlIndex::build(&corpus);
        let corpus_user = graph.users().names().iter().map(|n| corpus.user_id(n)).collect();
        Self {
            corpus,
            index,
            graph,
            corpus_user,
        }
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn index(&self) -> &CtIlIndex {
        &self.index
    }

    pub fn graph(&self) -> &SimilarityGraph {
        &self.graph
    }

    pub fn shared_graph(&self) -> &Arc<SimilarityGraph> {
        &self.graph
    }

    /// Network id of a seeker, if the network knows them.
    pub fn seeker(&self, name: &str) -> Option<GraphUserId> {
        self.graph.user_id(name)
    }

    /// The corpus identity of a network user, when they tagged anything.
    #[inline]
    pub fn corpus_user(&self, u: GraphUserId) -> Option<UserId> {
        self.corpus_user[u.index()]
    }
}
