//! Early-terminating top-k search over the CT-IL index and the seeker's
//! proximity stream, with incremental keystroke sessions and anytime
//! answers.

mod session;
mod state;
mod sum;

pub use session::{execute, Session};
pub use state::{Branch, CandidateBounds, SearchState};
pub use sum::ExactSum;

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::ids::ItemId;
use crate::socialgraph::ProximityAggregator;

/// Monotone map applied to each per-term frequency before summing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScoreTransform {
    #[default]
    Identity,
    Log1p,
}

impl ScoreTransform {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            ScoreTransform::Identity => x,
            ScoreTransform::Log1p => x.ln_1p(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub k: usize,
    /// Weight of the textual (tf) side; 0 is purely social.
    pub alpha: f64,
    /// Multiplier on tf, used to put tf and sf on comparable scales.
    pub tf_scale: f64,
    pub aggregator: ProximityAggregator,
    pub transform: ScoreTransform,
    /// Wall-clock budget per run; `None` runs to termination.
    pub time_budget: Option<Duration>,
    pub max_visited_users: Option<usize>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            k: 20,
            alpha: 0.0,
            tf_scale: 1.0,
            aggregator: ProximityAggregator::MaxProduct,
            transform: ScoreTransform::Identity,
            time_budget: Some(Duration::from_millis(50)),
            max_visited_users: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("k must be at least 1")]
    ZeroK,
    #[error("alpha must lie in [0, 1], got {0}")]
    Alpha(f64),
    #[error("tf_scale must be positive and finite, got {0}")]
    TfScale(f64),
    #[error("decay factor must lie in (0, 1], got {0}")]
    Decay(f64),
}

impl EngineConfig {
    pub fn unbounded() -> Self {
        Self {
            time_budget: None,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.k == 0 {
            return Err(ConfigError::ZeroK);
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(ConfigError::Alpha(self.alpha));
        }
        if !(self.tf_scale > 0.0 && self.tf_scale.is_finite()) {
            return Err(ConfigError::TfScale(self.tf_scale));
        }
        if let ProximityAggregator::ExpDecay(l) = self.aggregator {
            if !(l > 0.0 && l <= 1.0) {
                return Err(ConfigError::Decay(l));
            }
        }
        Ok(())
    }

    /// Per-term score: `h(alpha * tf_scale * tf + (1 - alpha) * sf)`.
    #[inline]
    pub fn term_score(&self, tf: f64, sf: f64) -> f64 {
        self.transform
            .apply(self.alpha * self.tf_scale * tf + (1.0 - self.alpha) * sf)
    }
}

/// Completed terms plus the (possibly empty) prefix being typed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub completed: Vec<String>,
    pub prefix: String,
}

impl Query {
    pub fn new<S: Into<String>>(completed: impl IntoIterator<Item = S>, prefix: &str) -> Self {
        let mut q = Query {
            completed: Vec::new(),
            prefix: prefix.to_lowercase(),
        };
        for t in completed {
            let t = t.into().to_lowercase();
            if !q.completed.contains(&t) {
                q.completed.push(t);
            }
        }
        q
    }

    /// Splits typed text on whitespace; the last word is the prefix unless
    /// the text ends in whitespace.
    pub fn parse(text: &str) -> Self {
        let words: Vec<&str> = text.split_whitespace().collect();
        let ends_open = text.chars().last().is_some_and(|c| !c.is_whitespace());
        match words.split_last() {
            Some((last, rest)) if ends_open => Query::new(rest.iter().copied(), last),
            _ => Query::new(words, ""),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.completed.is_empty() && self.prefix.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Guaranteed,
    Possible,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResultEntry {
    pub item: ItemId,
    pub min: f64,
    pub max: f64,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopKResult {
    pub entries: Vec<ResultEntry>,
    /// The termination condition held: entries are the exact top-k.
    pub exact: bool,
    pub visited_users: usize,
    pub elapsed: Duration,
}

impl TopKResult {
    pub fn items(&self) -> Vec<ItemId> {
        self.entries.iter().map(|e| e.item).collect()
    }

    /// Zero-based position of `item`, if listed.
    pub fn rank_of(&self, item: ItemId) -> Option<usize> {
        self.entries.iter().position(|e| e.item == item)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Keystroke {
    AppendChar(char),
    NewTerm,
}

impl Keystroke {
    /// Events for typing `text` from an empty box.
    pub fn typing(text: &str) -> Vec<Keystroke> {
        text.chars()
            .map(|c| {
                if c.is_whitespace() {
                    Keystroke::NewTerm
                } else {
                    Keystroke::AppendChar(c)
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_queries() {
        assert_eq!(Query::parse("style gl"), Query::new(["style"], "gl"));
        assert_eq!(Query::parse("style "), Query::new(["style"], ""));
        assert_eq!(Query::parse("Style style GL"), Query::new(["style"], "gl"));
        assert!(Query::parse("  ").is_empty());
    }

    #[test]
    fn example_blend() {
        let cfg = EngineConfig {
            alpha: 0.2,
            ..EngineConfig::default()
        };
        assert!((cfg.term_score(2.0, 1.5) - 1.6).abs() < 1e-12);
        assert_eq!(Keystroke::typing("style gl").len(), 8);
    }

    #[test]
    fn validation() {
        assert_eq!(
            EngineConfig {
                k: 0,
                ..Default::default()
            }
            .validate(),
            Err(ConfigError::ZeroK)
        );
        assert!(EngineConfig {
            alpha: 1.5,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(EngineConfig::default().validate().is_ok());
    }
}
