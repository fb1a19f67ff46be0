use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use serde::Deserialize;

use super::{CatalogError, CatalogProvider, CatalogRecord, RecordSource};

const FILE_SAFE: &AsciiSet = &NON_ALPHANUMERIC.remove(b'-').remove(b'_').remove(b'.');

/// Offline provider backed by a directory holding one JSON record per
/// part name. Never touches the network.
#[derive(Debug, Clone)]
pub struct FixtureProvider {
    dir: PathBuf,
}

#[derive(Deserialize)]
struct FixtureRecord {
    matched_name: String,
    #[serde(default)]
    attributes: std::collections::BTreeMap<String, String>,
}

impl FixtureProvider {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self, CatalogError> {
        let dir = dir.into();
        if !dir.is_dir() {
            return Err(CatalogError::Config(format!("fixture directory {} not found", dir.display())));
        }
        Ok(FixtureProvider { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// File name holding the record for `query`.
    pub fn file_name(query: &str) -> String {
        format!("{}.json", utf8_percent_encode(&query.trim().to_uppercase(), FILE_SAFE))
    }
}

impl CatalogProvider for FixtureProvider {
    fn search(&self, query: &str) -> Result<Vec<CatalogRecord>, CatalogError> {
        let path = self.dir.join(Self::file_name(query));
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(CatalogError::Config(format!("{}: {e}", path.display()))),
        };
        let rec: FixtureRecord = serde_json::from_slice(&bytes)
            .map_err(|e| CatalogError::BadResponse(format!("{}: {e}", path.display())))?;
        if rec.matched_name.trim().is_empty() {
            return Ok(Vec::new());
        }
        Ok(vec![CatalogRecord {
            matched_name: rec.matched_name,
            attributes: rec.attributes,
            source: RecordSource::OfflineFixture,
        }])
    }
}
