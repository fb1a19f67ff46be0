//! End-to-end orchestration: parse, enrich, infer, estimate, cancel, build
//! edges, prune and solve.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{self, CatalogError, CatalogProvider, FixtureProvider, HttpProvider};
use crate::config::{Config, ProviderKind};
use crate::eda::{self, Format, ParseError};
use crate::footprint::estimate_part;
use crate::heuristics::{cancel_identical, generate_edges, prune_conflicts, CancellationReport, Conflict, HeuristicEdge};
use crate::inference::{infer_die_area, infer_process_node, PackageDims};
use crate::inventory::{
    expand_instances, validate_inventory, Category, DesignInventory, InventoryError, Part, PartInstance, Provenance,
    Side,
};
use crate::rules::{apply_rules, validate_rules, RuleCancellation, RuleError, UserRule};
use crate::solver::{build_problem, solve_with, Assignment, BuildError, ComparisonProblem, MatchResult, ProblemInstance, Solution, SolveOptions};

/// Part id of the synthetic substrate part added to every inventory.
pub const BOARD_PART_ID: &str = "BOARD";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Inventory(#[from] InventoryError),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error("catalog: {0}")]
    Catalog(#[from] CatalogError),
}

/// Which inequality to prove.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    #[default]
    AGeB,
    BGeA,
    /// Try A ≥ B, then B ≥ A, and keep whichever is proven (A ≥ B if neither).
    Auto,
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "a-ge-b" => Ok(Direction::AGeB),
            "b-ge-a" => Ok(Direction::BGeA),
            "auto" => Ok(Direction::Auto),
            other => Err(format!("unknown direction `{other}` (expected a-ge-b, b-ge-a or auto)")),
        }
    }
}

/// An inventory together with the notes collected while building it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuiltInventory {
    pub inventory: DesignInventory,
    pub warnings: Vec<String>,
}

/// Everything produced by one solve, in the roles actually used: when
/// `direction` is `b-ge-a`, design B sits on the A side of the problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub direction: Direction,
    pub cancellation: CancellationReport,
    pub rule_cancellations: Vec<RuleCancellation>,
    pub skipped_rules: Vec<String>,
    pub edges: Vec<HeuristicEdge>,
    pub conflicts: Vec<Conflict>,
    pub problem: ComparisonProblem,
    pub result: MatchResult,
}

pub struct Engine {
    config: Config,
    provider: Option<Box<dyn CatalogProvider>>,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine")
            .field("provider", &self.config.catalog.provider)
            .finish_non_exhaustive()
    }
}

impl Engine {
    /// Builds the catalog provider named in `config`.
    pub fn new(config: Config) -> Result<Engine, PipelineError> {
        let provider: Option<Box<dyn CatalogProvider>> = match config.catalog.provider {
            ProviderKind::None => None,
            ProviderKind::Fixture => {
                let dir = config.catalog.fixture_dir.clone().unwrap_or_default();
                Some(Box::new(FixtureProvider::new(dir)?))
            }
            ProviderKind::Http => Some(Box::new(HttpProvider::new(&config.catalog)?)),
        };
        Ok(Engine { config, provider })
    }

    /// Like [`Engine::new`] but never touches the network: an HTTP provider
    /// is replaced by the fixture directory (`fallback_dir` if the config
    /// names none).
    pub fn offline(mut config: Config, fallback_dir: Option<PathBuf>) -> Result<Engine, PipelineError> {
        if config.catalog.provider == ProviderKind::Http || config.catalog.fixture_dir.is_none() {
            config.catalog.fixture_dir = config.catalog.fixture_dir.or(fallback_dir);
        }
        config.catalog.provider = match config.catalog.fixture_dir {
            Some(_) => ProviderKind::Fixture,
            None => ProviderKind::None,
        };
        Engine::new(config)
    }

    pub fn with_provider(config: Config, provider: Box<dyn CatalogProvider>) -> Engine {
        Engine {
            config,
            provider: Some(provider),
        }
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    /// Parses a design file and completes it: catalog enrichment, silicon
    /// inference, footprint estimation and the substrate part.
    pub fn build_inventory(&self, bytes: &[u8], format: Format, source_name: &str) -> Result<BuiltInventory, PipelineError> {
        let inventory = eda::parse_design(bytes, format, source_name, &self.config.tables.package_aliases)?;
        self.complete(inventory)
    }

    /// Runs the enrichment stages on an already parsed inventory. Values
    /// already present are kept.
    pub fn complete(&self, mut inventory: DesignInventory) -> Result<BuiltInventory, PipelineError> {
        let mut warnings = Vec::new();
        add_board_part(&mut inventory);
        self.enrich(&mut inventory, &mut warnings);
        self.infer(&mut inventory, &mut warnings);
        self.estimate(&mut inventory, &mut warnings);
        let violations = validate_inventory(&inventory);
        if !violations.is_empty() {
            return Err(InventoryError::Invalid(violations).into());
        }
        Ok(BuiltInventory { inventory, warnings })
    }

    fn enrich(&self, inv: &mut DesignInventory, warnings: &mut Vec<String>) {
        let Some(provider) = self.provider.as_deref() else { return };
        let names: BTreeSet<String> = inv
            .parts
            .iter()
            .filter(|p| needs_catalog(p))
            .map(|p| p.name.trim().to_string())
            .filter(|n| !n.is_empty())
            .collect();
        let names: Vec<String> = names.into_iter().collect();
        let found = lookup_all(provider, &names, self.config.catalog.parallelism);

        let mut outage = None;
        let aliases = &self.config.tables.package_aliases;
        for part in inv.parts.iter_mut().filter(|p| needs_catalog(p)) {
            match found.get(part.name.trim()) {
                Some(Ok(Some(record))) => {
                    let mapped = catalog::map_attributes(record, aliases);
                    warnings.extend(mapped.warnings.iter().map(|w| format!("{}: {w}", part.part_id)));
                    merge_attributes(part, mapped, warnings);
                }
                Some(Ok(None)) | None => {}
                Some(Err(e)) => {
                    outage.get_or_insert_with(|| e.to_string());
                }
            }
        }
        if let Some(e) = outage {
            warnings.push(format!("catalog unavailable, affected parts keep file data only: {e}"));
        }
    }

    fn infer(&self, inv: &mut DesignInventory, warnings: &mut Vec<String>) {
        let tables = &self.config.tables;
        for part in inv.parts.iter_mut().filter(|p| p.category.is_ic()) {
            if part.attributes.die_area.is_none() {
                let dims = match part.package_dims {
                    Some([w, h]) => Some(PackageDims::Rect(w, h)),
                    None if part.package_area > 0.0 => Some(PackageDims::Square(part.package_area.sqrt())),
                    None => None,
                };
                if let Some(dims) = dims {
                    match infer_die_area(&part.package_type, dims, &tables.die_coefficients) {
                        Ok(est) => part.attributes.die_area = Some(est.die_area),
                        Err(e) => warnings.push(format!("{}: die area not inferred: {e}", part.part_id)),
                    }
                }
            }
            if part.attributes.process_node.is_none() {
                if let (Some(f), Some(c)) = (part.attributes.max_frequency, part.attributes.active_current_per_mhz) {
                    match infer_process_node(f, c, &tables.process_nodes) {
                        Ok(est) => part.attributes.process_node = Some(est.node_nm),
                        Err(e) => warnings.push(format!("{}: process node not inferred: {e}", part.part_id)),
                    }
                }
            }
        }
    }

    fn estimate(&self, inv: &mut DesignInventory, warnings: &mut Vec<String>) {
        let board = inv.board.clone();
        for part in inv.parts.iter_mut() {
            if part.known_footprint().is_some() {
                continue;
            }
            match estimate_part(part, &board, &self.config.tables.factors) {
                Ok((g, provenance)) => {
                    part.footprint_estimate = Some(g);
                    part.footprint_provenance = provenance;
                }
                Err(e) => {
                    part.footprint_estimate = None;
                    part.footprint_provenance = Provenance::Unknown;
                    if !matches!(part.category, Category::Misc) {
                        warnings.push(format!("{}: no footprint: {e}", part.part_id));
                    }
                }
            }
        }
    }

    /// Solves for `a ≥ b` with optional user rules. `warm` is a previous
    /// assignment for the same pair; it only speeds the search up.
    pub fn compare(
        &self,
        a: &DesignInventory,
        b: &DesignInventory,
        rules: &[UserRule],
        warm: Option<&Assignment>,
    ) -> Result<Comparison, PipelineError> {
        validate_rules(rules, a, b)?;
        let full_a = expand_instances(a, Side::A)?;
        let full_b = expand_instances(b, Side::B)?;
        let cancellation = cancel_identical(a, b);
        debug_assert!(cancellation.a.len() <= full_a.len() && cancellation.b.len() <= full_b.len());

        let applied = apply_rules(&cancellation.a, &cancellation.b, rules)?;
        let nodes = self.config.tables.factors.nodes();
        let generated = generate_edges(&applied.a, &applied.b, a, b, &nodes);
        let (mut edges, conflicts) = prune_conflicts(generated);
        edges.extend(applied.edges.iter().cloned());

        let problem = build_problem(instances(&applied.a, a), instances(&applied.b, b), &edges)?;
        let mut opts = SolveOptions::with_budget_ms(self.config.solver.time_budget_ms);
        if let Some(prev) = warm {
            let s = Solution::from_assignment(&problem, prev);
            if s.is_feasible(&problem) {
                opts.warm_start = Some(s);
            }
        }
        let result = solve_with(&problem, &opts);
        Ok(Comparison {
            direction: Direction::AGeB,
            cancellation: cancellation.report,
            rule_cancellations: applied.cancellations,
            skipped_rules: applied.skipped,
            edges,
            conflicts,
            problem,
            result,
        })
    }

    /// Like [`Engine::compare`] with direction handling. Rules are written
    /// in terms of the original A and B.
    pub fn compare_directed(
        &self,
        a: &DesignInventory,
        b: &DesignInventory,
        rules: &[UserRule],
        direction: Direction,
        warm: Option<&Assignment>,
    ) -> Result<Comparison, PipelineError> {
        let forward = |warm| self.compare(a, b, rules, warm);
        let backward = |warm| -> Result<Comparison, PipelineError> {
            let swapped: Vec<UserRule> = rules.iter().map(UserRule::swapped).collect();
            let mut c = self.compare(b, a, &swapped, warm)?;
            c.direction = Direction::BGeA;
            Ok(c)
        };
        match direction {
            Direction::AGeB => forward(warm),
            Direction::BGeA => backward(warm),
            Direction::Auto => {
                let first = forward(warm)?;
                if first.result.unmatched_b.is_empty() {
                    return Ok(first);
                }
                let second = backward(None)?;
                Ok(if second.result.unmatched_b.is_empty() { second } else { first })
            }
        }
    }
}

fn needs_catalog(part: &Part) -> bool {
    !matches!(
        part.category,
        Category::Passive(_) | Category::BoardSubstrate | Category::NonIcAggregate
    )
}

/// Looks each name up once, spreading the work over at most `parallelism`
/// threads. Results are keyed by name, so the order of completion does not
/// matter.
fn lookup_all(
    provider: &dyn CatalogProvider,
    names: &[String],
    parallelism: usize,
) -> BTreeMap<String, Result<Option<catalog::CatalogRecord>, CatalogError>> {
    let results = Mutex::new(BTreeMap::new());
    let workers = parallelism.clamp(1, names.len().max(1));
    let chunk = names.len().div_ceil(workers).max(1);
    std::thread::scope(|scope| {
        for group in names.chunks(chunk) {
            let results = &results;
            scope.spawn(move || {
                for name in group {
                    let r = catalog::lookup(name, provider);
                    results.lock().expect("lookup results").insert(name.clone(), r);
                }
            });
        }
    });
    results.into_inner().expect("lookup results")
}

/// Fills attributes the part does not have yet. File-derived package area
/// wins over catalog dimensions; the catalog's package family wins over the
/// footprint-name token.
fn merge_attributes(part: &mut Part, mapped: catalog::MappedAttributes, warnings: &mut Vec<String>) {
    let have = &mut part.attributes;
    let got = mapped.attributes;
    macro_rules! fill {
        ($($field:ident),*) => {
            $(if have.$field.is_none() {
                have.$field = got.$field;
            })*
        };
    }
    fill!(
        max_frequency,
        active_current_per_mhz,
        pin_count,
        core_architecture,
        memory_size,
        die_area,
        process_node,
        mass,
        supplier_package
    );
    if let Some(family) = mapped.package_type {
        if !part.package_type.is_empty() && part.package_type != family {
            warnings.push(format!(
                "{}: package `{}` from the layout, `{family}` from the catalog; using the catalog family",
                part.part_id, part.package_type
            ));
        }
        part.package_type = family;
    }
    if let Some([w, h]) = mapped.package_dims {
        if part.package_area <= 0.0 {
            part.package_area = w * h;
            part.package_dims = Some([w, h]);
        } else if part.package_dims.is_none() {
            let catalog_area = w * h;
            if (catalog_area - part.package_area).abs() > 0.25 * part.package_area {
                warnings.push(format!(
                    "{}: layout area {:.2} mm² differs from catalog {catalog_area:.2} mm²; keeping the layout value",
                    part.part_id, part.package_area
                ));
            }
        }
    }
}

/// Adds the substrate part unless the inventory already carries one.
pub fn add_board_part(inv: &mut DesignInventory) {
    if inv.parts.iter().any(|p| p.category == Category::BoardSubstrate) {
        return;
    }
    let mut board = Part::new(BOARD_PART_ID, "board", Category::BoardSubstrate).with_package(
        inv.board.substrate.clone(),
        inv.board.area,
    );
    board.designator_prefix = String::new();
    inv.parts.push(board);
}

fn instances(list: &[PartInstance], inv: &DesignInventory) -> Vec<ProblemInstance> {
    let weights: BTreeMap<_, _> = inv.parts.iter().map(|p| (&p.part_id, p.known_footprint())).collect();
    list.iter()
        .map(|i| ProblemInstance {
            id: i.instance_id.clone(),
            weight: weights.get(&i.part_id).copied().flatten(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inventory::{Attributes, BoardSpec, PassiveKind};
    use crate::solver::Verdict;

    fn ic(id: &str, die: f64, node: u32) -> Part {
        let mut p = Part::new(id, id, Category::Ic).with_package("QFN", 25.0);
        p.attributes = Attributes {
            die_area: Some(die),
            process_node: Some(node),
            ..Attributes::default()
        };
        p
    }

    fn design(id: &str, parts: Vec<Part>) -> DesignInventory {
        DesignInventory {
            design_id: id.to_string(),
            source_file: String::new(),
            board: BoardSpec::new(1000.0, 2),
            parts,
        }
    }

    fn engine() -> Engine {
        Engine::new(Config::builtin()).unwrap()
    }

    #[test]
    fn builtin_engine_estimates_known_parts() {
        let e = engine();
        let inv = design(
            "x",
            vec![
                Part::new("R_0402", "resistor 0402", Category::Passive(PassiveKind::Resistor))
                    .with_package("0402", 0.5)
                    .with_quantity(3),
                ic("U1", 4.0, 90),
            ],
        );
        let built = e.complete(inv).unwrap();
        let inv = built.inventory;
        assert_eq!(inv.parts.len(), 3);
        assert_eq!(inv.parts[0].footprint_estimate, Some(0.040));
        assert_eq!(inv.parts[2].part_id.as_str(), BOARD_PART_ID);
        assert!((inv.parts[2].footprint_estimate.unwrap() - 12.25).abs() < 1e-12);
    }

    #[test]
    fn self_comparison_is_proven_without_rules() {
        let e = engine();
        let inv = e
            .complete(design("x", vec![ic("U1", 4.0, 90), ic("U2", 9.0, 40)]))
            .unwrap()
            .inventory;
        let c = e.compare(&inv, &inv, &[], None).unwrap();
        assert_eq!(c.result.verdict, Verdict::Proven);
        assert!(c.result.unmatched_a.is_empty() && c.result.unmatched_b.is_empty());
        assert_eq!(c.cancellation.total(), 3);
    }

    #[test]
    fn direction_auto_picks_the_provable_side() {
        let e = engine();
        let small = e.complete(design("s", vec![ic("U1", 4.0, 90)])).unwrap().inventory;
        let big = e
            .complete(design("b", vec![ic("U1", 4.0, 90), ic("U9", 20.0, 28)]))
            .unwrap()
            .inventory;
        let forward = e.compare_directed(&small, &big, &[], Direction::AGeB, None).unwrap();
        assert_eq!(forward.result.verdict, Verdict::Inconclusive);
        let auto = e.compare_directed(&small, &big, &[], Direction::Auto, None).unwrap();
        assert_eq!(auto.direction, Direction::BGeA);
        assert_eq!(auto.result.verdict, Verdict::Proven);
    }

    #[test]
    fn direction_parses() {
        assert_eq!("auto".parse::<Direction>().unwrap(), Direction::Auto);
        assert_eq!("b-ge-a".parse::<Direction>().unwrap(), Direction::BGeA);
        assert!("up".parse::<Direction>().is_err());
    }
}
