use std::collections::BTreeMap;
use std::time::Duration;

use serde::Deserialize;
use url::Url;

use super::{CatalogError, CatalogProvider, CatalogRecord, RecordSource};
use crate::config::CatalogSettings;

/// Live provider: `GET {base_url}/search?q=...` returning a JSON list of
/// `{matched_name, attributes}` objects, best match first.
#[derive(Debug, Clone)]
pub struct HttpProvider {
    client: reqwest::blocking::Client,
    search_url: Url,
    token: Option<String>,
    retry_budget: u32,
}

#[derive(Deserialize)]
struct WireRecord {
    matched_name: String,
    #[serde(default)]
    attributes: BTreeMap<String, String>,
}

impl HttpProvider {
    pub fn new(settings: &CatalogSettings) -> Result<Self, CatalogError> {
        if settings.timeout_ms == 0 {
            return Err(CatalogError::Config("timeout must be positive".into()));
        }
        let base = Url::parse(&settings.base_url)
            .map_err(|e| CatalogError::Config(format!("base_url `{}`: {e}", settings.base_url)))?;
        if base.cannot_be_a_base() {
            return Err(CatalogError::Config(format!("base_url `{}` cannot carry a path", settings.base_url)));
        }
        // `{base_url}/search`, keeping any path prefix of the base
        let mut search_url = base.clone();
        search_url.set_path(&format!("{}/search", base.path().trim_end_matches('/')));
        search_url.set_query(None);
        let token = settings
            .credentials_env
            .as_deref()
            .and_then(|var| std::env::var(var).ok())
            .filter(|t| !t.is_empty());
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(settings.timeout_ms))
            .build()
            .map_err(|e| CatalogError::Config(e.to_string()))?;
        Ok(HttpProvider {
            client,
            search_url,
            token,
            retry_budget: settings.retry_budget,
        })
    }

    fn fetch(&self, query: &str) -> Result<Vec<CatalogRecord>, CatalogError> {
        let mut url = self.search_url.clone();
        url.query_pairs_mut().append_pair("q", query);
        let mut req = self.client.get(url);
        if let Some(token) = &self.token {
            req = req.bearer_auth(token);
        }
        let resp = req.send().map_err(|e| CatalogError::Network(e.to_string()))?;
        let status = resp.status();
        if status == reqwest::StatusCode::NOT_FOUND {
            return Ok(Vec::new());
        }
        if status.is_server_error() {
            return Err(CatalogError::Network(format!("server returned {status}")));
        }
        if !status.is_success() {
            return Err(CatalogError::BadResponse(format!("server returned {status}")));
        }
        let body = resp.bytes().map_err(|e| CatalogError::Network(e.to_string()))?;
        let records: Vec<WireRecord> =
            serde_json::from_slice(&body).map_err(|e| CatalogError::BadResponse(e.to_string()))?;
        Ok(records
            .into_iter()
            .map(|r| CatalogRecord {
                matched_name: r.matched_name,
                attributes: r.attributes,
                source: RecordSource::LiveHttp,
            })
            .collect())
    }
}

impl CatalogProvider for HttpProvider {
    fn search(&self, query: &str) -> Result<Vec<CatalogRecord>, CatalogError> {
        let mut attempt = 0;
        loop {
            match self.fetch(query) {
                Err(e) if e.is_retryable() && attempt < self.retry_budget => {
                    attempt += 1;
                    log::warn!("catalog query `{query}` failed ({e}); retry {attempt}/{}", self.retry_budget);
                }
                other => return other,
            }
        }
    }
}
