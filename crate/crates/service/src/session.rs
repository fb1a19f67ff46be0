//! Session state and the synchronous operations on it. Everything here is
//! plain computation; the HTTP layer decides where it runs.

use serde::{Deserialize, Serialize};

use delta_lca_core::eda::Format;
use delta_lca_core::heuristics::{CancellationReport, HeuristicEdge};
use delta_lca_core::pipeline::{Direction, PipelineError};
use delta_lca_core::report::ComparisonReport;
use delta_lca_core::rules::{validate_rules, Comparator, RuleError, Selection, UserRule};
use delta_lca_core::solver::MatchResult;
use delta_lca_core::{DesignInventory, Engine};

use crate::error::ServiceError;

/// One uploaded design file.
#[derive(Debug, Clone)]
pub struct Upload {
    pub file_name: String,
    pub bytes: Vec<u8>,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    /// Rule ids in effect when the result was computed.
    pub rules: Vec<String>,
    pub result: MatchResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    /// Direction fixed when the session was created. `auto` is resolved
    /// once, so later rule edits keep working on the same inequality.
    pub direction: Direction,
    pub a: DesignInventory,
    pub b: DesignInventory,
    pub warnings: Vec<String>,
    pub rules: Vec<UserRule>,
    pub edges: Vec<HeuristicEdge>,
    pub report: ComparisonReport,
    pub latest: MatchResult,
    pub history: Vec<HistoryEntry>,
    #[serde(default)]
    next_rule: u64,
}

/// Response to session creation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub direction: Direction,
    pub a: DesignInventory,
    pub b: DesignInventory,
    pub warnings: Vec<String>,
    pub cancellation: CancellationReport,
    pub report: ComparisonReport,
    pub result: MatchResult,
}

/// A rule as submitted by a client; the id is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleDraft {
    #[serde(default)]
    pub rule_id: Option<String>,
    pub a_selection: Vec<Selection>,
    pub b_selection: Vec<Selection>,
    pub comparator: Comparator,
    #[serde(default)]
    pub note: String,
}

fn build(engine: &Engine, side: &str, upload: &Upload) -> Result<(DesignInventory, Vec<String>), ServiceError> {
    match engine.build_inventory(&upload.bytes, upload.format, &upload.file_name) {
        Ok(built) => Ok((built.inventory, built.warnings)),
        Err(PipelineError::Parse(e)) => Err(ServiceError::Parse {
            side: side.to_string(),
            file: upload.file_name.clone(),
            message: e.to_string(),
        }),
        Err(e) => Err(e.into()),
    }
}

impl Session {
    pub fn create(
        engine: &Engine,
        session_id: String,
        file_a: &Upload,
        file_b: &Upload,
        direction: Direction,
    ) -> Result<Session, ServiceError> {
        let (a, mut warnings) = build(engine, "A", file_a)?;
        let (b, warnings_b) = build(engine, "B", file_b)?;
        warnings.extend(warnings_b);
        let c = engine.compare_directed(&a, &b, &[], direction, None)?;
        let report = ComparisonReport::new(&c, &a, &b, &[], warnings.clone());
        Ok(Session {
            session_id,
            direction: c.direction,
            a,
            b,
            warnings,
            rules: Vec::new(),
            edges: c.edges,
            report,
            latest: c.result.clone(),
            history: vec![HistoryEntry {
                rules: Vec::new(),
                result: c.result,
            }],
            next_rule: 1,
        })
    }

    pub fn summary(&self) -> SessionSummary {
        SessionSummary {
            session_id: self.session_id.clone(),
            direction: self.direction,
            a: self.a.clone(),
            b: self.b.clone(),
            warnings: self.warnings.clone(),
            cancellation: self.report.cancellation.clone(),
            report: self.report.clone(),
            result: self.latest.clone(),
        }
    }

    pub fn inventory(&self, side: &str) -> Option<&DesignInventory> {
        match side {
            "a" | "A" => Some(&self.a),
            "b" | "B" => Some(&self.b),
            _ => None,
        }
    }

    /// Recomputes `edges`, `report` and `latest` for the current rules.
    fn recompute(&mut self, engine: &Engine, rules: &[UserRule]) -> Result<(), ServiceError> {
        let c = engine.compare_directed(&self.a, &self.b, rules, self.direction, None)?;
        self.report = ComparisonReport::new(&c, &self.a, &self.b, rules, self.warnings.clone());
        self.edges = c.edges;
        self.latest = c.result;
        Ok(())
    }

    /// Validates and stores a rule, refreshing the latest result. A rejected
    /// rule leaves the session untouched.
    pub fn add_rule(&mut self, engine: &Engine, draft: RuleDraft) -> Result<String, ServiceError> {
        let rule_id = match draft.rule_id {
            Some(id) => id,
            None => loop {
                let id = format!("r{}", self.next_rule);
                self.next_rule += 1;
                if self.rules.iter().all(|r| r.rule_id != id) {
                    break id;
                }
            },
        };
        let rule = UserRule {
            rule_id: rule_id.clone(),
            a_selection: draft.a_selection,
            b_selection: draft.b_selection,
            comparator: draft.comparator,
            note: draft.note,
        };
        let mut rules = self.rules.clone();
        rules.push(rule);
        validate_rules(&rules, &self.a, &self.b)?;
        self.recompute(engine, &rules)?;
        self.rules = rules;
        Ok(rule_id)
    }

    pub fn delete_rule(&mut self, engine: &Engine, rule_id: &str) -> Result<(), ServiceError> {
        let Some(pos) = self.rules.iter().position(|r| r.rule_id == rule_id) else {
            return Err(ServiceError::UnknownRule(rule_id.to_string()));
        };
        let mut rules = self.rules.clone();
        rules.remove(pos);
        self.recompute(engine, &rules)?;
        self.rules = rules;
        Ok(())
    }

    /// Reruns the comparison and records the result in the history.
    pub fn update(&mut self, engine: &Engine) -> Result<&MatchResult, ServiceError> {
        let rules = self.rules.clone();
        self.recompute(engine, &rules)?;
        self.history.push(HistoryEntry {
            rules: rules.into_iter().map(|r| r.rule_id).collect(),
            result: self.latest.clone(),
        });
        Ok(&self.latest)
    }
}

impl From<RuleError> for ServiceError {
    fn from(e: RuleError) -> Self {
        ServiceError::Pipeline(PipelineError::Rule(e))
    }
}
