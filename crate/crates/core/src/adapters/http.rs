use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{AdapterError, ModelAdapter};
use crate::limit::InFlight;
use crate::model::Table;

#[derive(Debug, Serialize)]
pub struct PredictRequest<'a> {
    pub table: WireTable<'a>,
    pub question: &'a str,
}

#[derive(Debug, Serialize)]
pub struct WireTable<'a> {
    pub header: &'a [String],
    pub rows: &'a [Vec<String>],
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct PredictResponse {
    pub answers: Vec<String>,
}

/// A model reached over `POST {endpoint}/predict`.
pub struct HttpAdapter {
    name: String,
    url: String,
    http: reqwest::blocking::Client,
    gate: InFlight,
}

impl HttpAdapter {
    pub fn new(endpoint: &str, timeout: Duration, max_in_flight: usize) -> Result<Self, AdapterError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| AdapterError::Transport(e.to_string()))?;
        let base = endpoint.trim_end_matches('/');
        let url = if base.ends_with("/predict") {
            base.to_string()
        } else {
            format!("{base}/predict")
        };
        Ok(HttpAdapter {
            name: endpoint.to_string(),
            url,
            http,
            gate: InFlight::new(max_in_flight),
        })
    }
}

fn post_predict(
    http: &reqwest::blocking::Client,
    url: &str,
    table: &Table,
    question: &str,
) -> Result<Vec<String>, AdapterError> {
    let body = PredictRequest {
        table: WireTable {
            header: &table.header,
            rows: &table.rows,
        },
        question,
    };
    let resp = http.post(url).json(&body).send().map_err(|e| {
        if e.is_timeout() {
            AdapterError::Timeout
        } else {
            AdapterError::Transport(e.to_string())
        }
    })?;
    let status = resp.status();
    let text = resp.text().map_err(|e| AdapterError::Transport(e.to_string()))?;
    if !status.is_success() {
        return Err(AdapterError::Status {
            status: status.as_u16(),
            body: text,
        });
    }
    serde_json::from_str::<PredictResponse>(&text)
        .map(|r| r.answers)
        .map_err(|e| AdapterError::Malformed(e.to_string()))
}

/// One-off call of the model wire contract.
pub fn http_predict(
    endpoint: &str,
    table: &Table,
    question: &str,
    timeout: Duration,
) -> Result<Vec<String>, AdapterError> {
    let a = HttpAdapter::new(endpoint, timeout, 1)?;
    a.answer(table, question)
}

impl ModelAdapter for HttpAdapter {
    fn name(&self) -> &str {
        &self.name
    }

    fn answer(&self, table: &Table, question: &str) -> Result<Vec<String>, AdapterError> {
        let _permit = self.gate.acquire();
        post_predict(&self.http, &self.url, table, question)
    }
}
