//! Typed client for the search service.

use reqwest::StatusCode;
use serde::de::DeserializeOwned;
use topks_api::{CreateSession, ErrorBody, Health, KeystrokeEvent, SessionCreated, TopKResponse};

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error(transparent)]
    Http(#[from] reqwest::Error),
    #[error("{status}: {message}")]
    Api { status: StatusCode, message: String },
}

impl ClientError {
    pub fn status(&self) -> Option<StatusCode> {
        match self {
            ClientError::Api { status, .. } => Some(*status),
            ClientError::Http(e) => e.status(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    /// `base` is the server root, e.g. `http://127.0.0.1:8080`.
    pub fn new(base: impl Into<String>) -> Self {
        Self {
            base: base.into().trim_end_matches('/').to_string(),
            http: reqwest::Client::new(),
        }
    }

    async fn decode<T: DeserializeOwned>(resp: reqwest::Response) -> Result<T, ClientError> {
        let status = resp.status();
        if status.is_success() {
            return Ok(resp.json().await?);
        }
        let text = resp.text().await?;
        let message = serde_json::from_str::<ErrorBody>(&text)
            .map(|b| b.error)
            .unwrap_or(text);
        Err(ClientError::Api { status, message })
    }

    pub async fn health(&self) -> Result<Health, ClientError> {
        Self::decode(self.http.get(format!("{}/health", self.base)).send().await?).await
    }

    pub async fn create_session(&self, req: &CreateSession) -> Result<String, ClientError> {
        let created: SessionCreated = Self::decode(
            self.http
                .post(format!("{}/sessions", self.base))
                .json(req)
                .send()
                .await?,
        )
        .await?;
        Ok(created.session_id)
    }

    pub async fn keystroke(&self, session: &str, event: &KeystrokeEvent) -> Result<TopKResponse, ClientError> {
        let url = format!("{}/sessions/{session}/keystroke", self.base);
        Self::decode(self.http.post(url).json(event).send().await?).await
    }

    /// Raw response body of a keystroke, for byte-level comparisons.
    pub async fn keystroke_raw(&self, session: &str, event: &KeystrokeEvent) -> Result<String, ClientError> {
        let url = format!("{}/sessions/{session}/keystroke", self.base);
        Ok(self
            .http
            .post(url)
            .json(event)
            .send()
            .await?
            .error_for_status()?
            .text()
            .await?)
    }

    pub async fn result(&self, session: &str) -> Result<TopKResponse, ClientError> {
        Self::decode(
            self.http
                .get(format!("{}/sessions/{session}/result", self.base))
                .send()
                .await?,
        )
        .await
    }

    pub async fn result_raw(&self, session: &str) -> Result<String, ClientError> {
        let url = format!("{}/sessions/{session}/result", self.base);
        Ok(self.http.get(url).send().await?.error_for_status()?.text().await?)
    }

    /// Sends the events typing `text`, returning one response per event.
    pub async fn type_text(&self, session: &str, text: &str) -> Result<Vec<TopKResponse>, ClientError> {
        let mut out = Vec::new();
        for e in KeystrokeEvent::typing(text) {
            out.push(self.keystroke(session, &e).await?);
        }
        Ok(out)
    }
}
