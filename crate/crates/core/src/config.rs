//! Runtime configuration: data tables plus catalog and solver settings.
//!
//! A configuration file is TOML; table paths inside it are resolved relative
//! to the file. [`Config::builtin`] uses the tables compiled into the crate
//! and disables catalog enrichment.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::eda::package::PackageAliases;
use crate::footprint::FactorTables;
use crate::inference::{DieCoefficientTable, ProcessNodeDataset};

pub const DEFAULT_FACTORS: &str = include_str!("../config/factors.json");
pub const DEFAULT_DIE_COEFFICIENTS: &str = include_str!("../config/die_coefficients.json");
pub const DEFAULT_PROCESS_NODES: &str = include_str!("../config/process_nodes.csv");
pub const DEFAULT_PACKAGE_ALIASES: &str = include_str!("../config/package_aliases.json");

pub const DEFAULT_TIME_BUDGET_MS: u64 = 10_000;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
}

impl ConfigError {
    fn invalid(path: &Path, message: impl ToString) -> Self {
        ConfigError::Invalid {
            path: path.to_path_buf(),
            message: message.to_string(),
        }
    }
}

/// All read-only lookup tables used by the pipeline.
#[derive(Debug, Clone)]
pub struct Tables {
    pub factors: FactorTables,
    pub die_coefficients: DieCoefficientTable,
    pub process_nodes: ProcessNodeDataset,
    pub package_aliases: PackageAliases,
}

impl Tables {
    pub fn builtin() -> Tables {
        let here = Path::new("<builtin>");
        Tables::parse(
            (here, DEFAULT_FACTORS),
            (here, DEFAULT_DIE_COEFFICIENTS),
            (here, DEFAULT_PROCESS_NODES),
            (here, DEFAULT_PACKAGE_ALIASES),
        )
        .expect("bundled tables are valid")
    }

    fn parse(
        factors: (&Path, &str),
        die: (&Path, &str),
        nodes: (&Path, &str),
        aliases: (&Path, &str),
    ) -> Result<Tables, ConfigError> {
        let factors_table: FactorTables =
            serde_json::from_str(factors.1).map_err(|e| ConfigError::invalid(factors.0, e))?;
        factors_table
            .validate()
            .map_err(|e| ConfigError::invalid(factors.0, e))?;
        Ok(Tables {
            factors: factors_table,
            die_coefficients: serde_json::from_str(die.1).map_err(|e| ConfigError::invalid(die.0, e))?,
            process_nodes: ProcessNodeDataset::from_csv(nodes.1.as_bytes())
                .map_err(|e| ConfigError::invalid(nodes.0, e))?,
            package_aliases: serde_json::from_str(aliases.1)
                .map_err(|e| ConfigError::invalid(aliases.0, e))?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    /// No enrichment; every part proceeds with file-derived data only.
    None,
    Fixture,
    Http,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogSettings {
    pub provider: ProviderKind,
    pub fixture_dir: Option<PathBuf>,
    pub base_url: String,
    /// Name of the environment variable holding the API token.
    pub credentials_env: Option<String>,
    pub timeout_ms: u64,
    pub retry_budget: u32,
    pub parallelism: usize,
}

impl Default for CatalogSettings {
    fn default() -> Self {
        CatalogSettings {
            provider: ProviderKind::None,
            fixture_dir: None,
            base_url: String::new(),
            credentials_env: None,
            timeout_ms: 5000,
            retry_budget: 2,
            parallelism: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverSettings {
    pub time_budget_ms: u64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            time_budget_ms: DEFAULT_TIME_BUDGET_MS,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Config {
    pub tables: Tables,
    pub catalog: CatalogSettings,
    pub solver: SolverSettings,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    tables: RawTables,
    #[serde(default)]
    catalog: RawCatalog,
    #[serde(default)]
    solver: RawSolver,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTables {
    factors: Option<PathBuf>,
    die_coefficients: Option<PathBuf>,
    process_nodes: Option<PathBuf>,
    package_aliases: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCatalog {
    provider: Option<ProviderKind>,
    fixture_dir: Option<PathBuf>,
    base_url: Option<String>,
    credentials_env: Option<String>,
    timeout_ms: Option<u64>,
    retry_budget: Option<u32>,
    parallelism: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    time_budget_ms: Option<u64>,
}

fn read_or_default(base: &Path, rel: &Option<PathBuf>, fallback: &'static str) -> Result<(PathBuf, String), ConfigError> {
    match rel {
        None => Ok((PathBuf::from("<builtin>"), fallback.to_string())),
        Some(rel) => {
            let path = base.join(rel);
            let text = fs::read_to_string(&path).map_err(|source| ConfigError::Io {
                path: path.clone(),
                source,
            })?;
            Ok((path, text))
        }
    }
}

impl Config {
    /// Built-in tables, no catalog provider, default solver budget.
    pub fn builtin() -> Config {
        Config {
            tables: Tables::builtin(),
            catalog: CatalogSettings::default(),
            solver: SolverSettings::default(),
        }
    }

    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let raw: RawConfig = toml::from_str(&text).map_err(|e| ConfigError::invalid(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));

        let factors = read_or_default(base, &raw.tables.factors, DEFAULT_FACTORS)?;
        let die = read_or_default(base, &raw.tables.die_coefficients, DEFAULT_DIE_COEFFICIENTS)?;
        let nodes = read_or_default(base, &raw.tables.process_nodes, DEFAULT_PROCESS_NODES)?;
        let aliases = read_or_default(base, &raw.tables.package_aliases, DEFAULT_PACKAGE_ALIASES)?;
        let tables = Tables::parse(
            (&factors.0, &factors.1),
            (&die.0, &die.1),
            (&nodes.0, &nodes.1),
            (&aliases.0, &aliases.1),
        )?;

        let defaults = CatalogSettings::default();
        let c = raw.catalog;
        let catalog = CatalogSettings {
            provider: c.provider.unwrap_or(defaults.provider),
            fixture_dir: c.fixture_dir.map(|d| base.join(d)),
            base_url: c.base_url.unwrap_or(defaults.base_url),
            credentials_env: c.credentials_env,
            timeout_ms: c.timeout_ms.unwrap_or(defaults.timeout_ms),
            retry_budget: c.retry_budget.unwrap_or(defaults.retry_budget),
            parallelism: c.parallelism.unwrap_or(defaults.parallelism).max(1),
        };
        if catalog.timeout_ms == 0 {
            return Err(ConfigError::invalid(path, "catalog.timeout_ms must be positive"));
        }
        if catalog.provider == ProviderKind::Fixture && catalog.fixture_dir.is_none() {
            return Err(ConfigError::invalid(path, "catalog.fixture_dir is required for the fixture provider"));
        }
        let solver = SolverSettings {
            time_budget_ms: raw.solver.time_budget_ms.unwrap_or(DEFAULT_TIME_BUDGET_MS),
        };
        Ok(Config { tables, catalog, solver })
    }

    /// The configuration file shipped with this crate, resolved against the
    /// source tree. Mostly useful for tests and examples.
    pub fn bundled_path() -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("config/delta-lca.toml")
    }
}
