use std::sync::Arc;

use super::{ConfigError, EngineConfig, Keystroke, Query, SearchState, TopKResult};
use crate::dataset::Dataset;
use crate::ids::GraphUserId;

/// Runs a whole query from scratch for `seeker`, who may be unknown to the
/// network (social scores are then zero).
pub fn execute(
    ds: &Dataset,
    seeker: Option<GraphUserId>,
    query: &Query,
    config: &EngineConfig,
) -> Result<TopKResult, ConfigError> {
    config.validate()?;
    Ok(SearchState::with_query(ds, seeker, query, config.clone()).run(ds))
}

/// An as-you-type session: one seeker, a keystroke log and the run state
/// carried from one keystroke to the next.
#[derive(Debug, Clone)]
pub struct Session {
    data: Arc<Dataset>,
    state: SearchState,
    log: Vec<Keystroke>,
    last: Option<TopKResult>,
}

impl Session {
    pub fn new(data: Arc<Dataset>, seeker: Option<GraphUserId>, config: EngineConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        Ok(Self {
            state: SearchState::new(seeker, config),
            data,
            log: Vec::new(),
            last: None,
        })
    }

    pub fn dataset(&self) -> &Arc<Dataset> {
        &self.data
    }

    pub fn state(&self) -> &SearchState {
        &self.state
    }

    pub fn state_mut(&mut self) -> (&Dataset, &mut SearchState) {
        (&self.data, &mut self.state)
    }

    pub fn query(&self) -> Query {
        self.state.query()
    }

    pub fn log(&self) -> &[Keystroke] {
        &self.log
    }

    pub fn last_result(&self) -> Option<&TopKResult> {
        self.last.as_ref()
    }

    /// Updates the query without searching.
    pub fn apply(&mut self, key: Keystroke) {
        self.log.push(key);
        self.state.apply(&self.data, key);
    }

    /// Searches the current query within the configured budget.
    pub fn run(&mut self) -> TopKResult {
        let r = self.state.run(&self.data);
        self.last = Some(r.clone());
        r
    }

    pub fn keystroke(&mut self, key: Keystroke) -> TopKResult {
        self.apply(key);
        self.run()
    }

    /// Drops the last keystroke by replaying the rest of the log on a fresh
    /// state. Returns `None` when the log was already empty.
    pub fn backspace(&mut self) -> Option<TopKResult> {
        let mut log = std::mem::take(&mut self.log);
        log.pop()?;
        let seeker = self.state.seeker();
        self.state = SearchState::new(seeker, self.state.config().clone());
        for key in log {
            self.apply(key);
        }
        Some(self.run())
    }
}
