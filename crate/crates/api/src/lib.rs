//! JSON bodies of the search service.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A score, written with exactly six fractional digits.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Score(pub f64);

impl Serialize for Score {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return Err(serde::ser::Error::custom("non-finite score"));
        }
        let raw =
            serde_json::value::RawValue::from_string(format!("{:.6}", self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Score {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        f64::deserialize(d).map(Score)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateSession {
    pub seeker: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget_ms: Option<u64>,
}

impl CreateSession {
    pub fn new(seeker: impl Into<String>) -> Self {
        Self {
            seeker: seeker.into(),
            k: None,
            alpha: None,
            budget_ms: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum KeystrokeEvent {
    Char { value: String },
    NewTerm,
    Backspace,
}

impl KeystrokeEvent {
    pub fn char(c: char) -> Self {
        KeystrokeEvent::Char { value: c.to_string() }
    }

    /// Events that type `text`: whitespace starts a new term.
    pub fn typing(text: &str) -> Vec<Self> {
        text.chars()
            .map(|c| {
                if c.is_whitespace() {
                    KeystrokeEvent::NewTerm
                } else {
                    Self::char(c)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Guaranteed,
    Possible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultItem {
    pub item: String,
    pub min: Score,
    pub max: Score,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopKResponse {
    pub items: Vec<ResultItem>,
    pub exact: bool,
    pub elapsed_ms: f64,
    pub visited_users: usize,
}

impl TopKResponse {
    pub fn empty() -> Self {
        Self {
            items: Vec::new(),
            exact: true,
            elapsed_ms: 0.0,
            visited_users: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub users: usize,
    pub items: usize,
    pub tags: usize,
    pub triples: usize,
    pub graph_users: usize,
    pub edges: usize,
    pub sessions: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scores_have_six_digits() {
        let item = ResultItem {
            item: "i6".into(),
            min: Score(2.4),
            max: Score(1.0 / 3.0),
            status: Status::Guaranteed,
        };
        assert_eq!(
            serde_json::to_string(&item).unwrap(),
            r#"{"item":"i6","min":2.400000,"max":0.333333,"status":"guaranteed"}"#
        );
        let back: ResultItem =
            serde_json::from_str(r#"{"item":"i6","min":2.4,"max":0.333333,"status":"guaranteed"}"#).unwrap();
        assert_eq!(back.min, Score(2.4));
        assert!(serde_json::to_string(&Score(f64::NAN)).is_err());
    }

    #[test]
    fn keystroke_events_are_tagged() {
        assert_eq!(
            serde_json::to_string(&KeystrokeEvent::char('s')).unwrap(),
            r#"{"event":"char","value":"s"}"#
        );
        assert_eq!(
            serde_json::to_string(&KeystrokeEvent::NewTerm).unwrap(),
            r#"{"event":"new_term"}"#
        );
        let b: KeystrokeEvent = serde_json::from_str(r#"{"event":"backspace"}"#).unwrap();
        assert_eq!(b, KeystrokeEvent::Backspace);
        assert_eq!(KeystrokeEvent::typing("a b").len(), 3);
    }

    #[test]
    fn create_omits_defaults() {
        assert_eq!(
            serde_json::to_string(&CreateSession::new("Alice")).unwrap(),
            r#"{"seeker":"Alice"}"#
        );
    }
}
