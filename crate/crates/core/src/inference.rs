//! Inference of silicon specifications that vendors rarely publish: die area
//! from package geometry, and process node from public electrical figures.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fuzzy;

#[derive(Debug, Error, PartialEq)]
pub enum InferenceError {
    #[error("unknown package `{0}`")]
    UnknownPackage(String),
    #[error("package dimensions must be positive")]
    BadDimensions,
    #[error("process-node dataset is empty")]
    EmptyDataset,
    #[error("frequency and current per MHz must both be positive")]
    NonPositiveInput,
    #[error("invalid table: {0}")]
    InvalidTable(String),
}

/// Fraction of the package footprint occupied by silicon, per package family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, f64>", into = "BTreeMap<String, f64>")]
pub struct DieCoefficientTable {
    entries: BTreeMap<String, f64>,
}

impl DieCoefficientTable {
    pub fn new(entries: BTreeMap<String, f64>) -> Result<Self, InferenceError> {
        for (key, &coef) in &entries {
            if !(coef > 0.0 && coef <= 1.0) {
                return Err(InferenceError::InvalidTable(format!(
                    "coefficient for {key} must lie in (0, 1], got {coef}"
                )));
            }
        }
        Ok(DieCoefficientTable { entries })
    }

    pub fn get(&self, package_type: &str) -> Option<f64> {
        self.entries.get(package_type).copied()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Resolves a package name to a table key: exact (normalized) match
    /// first, then the fuzzy matcher.
    pub fn resolve(&self, package_type: &str) -> Option<&str> {
        let wanted = fuzzy::normalize(package_type);
        if let Some(key) = self.keys().find(|k| fuzzy::normalize(k) == wanted) {
            return Some(key);
        }
        fuzzy::best_match(package_type, self.keys()).map(|(key, _)| key)
    }
}

impl TryFrom<BTreeMap<String, f64>> for DieCoefficientTable {
    type Error = InferenceError;

    fn try_from(entries: BTreeMap<String, f64>) -> Result<Self, Self::Error> {
        DieCoefficientTable::new(entries)
    }
}

impl From<DieCoefficientTable> for BTreeMap<String, f64> {
    fn from(table: DieCoefficientTable) -> Self {
        table.entries
    }
}

/// Package outline as known to the caller. A single dimension means the
/// package is taken to be square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PackageDims {
    Square(f64),
    Rect(f64, f64),
}

impl PackageDims {
    pub fn area(self) -> f64 {
        match self {
            PackageDims::Square(side) => side * side,
            PackageDims::Rect(w, h) => w * h,
        }
    }

    fn is_valid(self) -> bool {
        match self {
            PackageDims::Square(side) => side.is_finite() && side > 0.0,
            PackageDims::Rect(w, h) => w.is_finite() && h.is_finite() && w > 0.0 && h > 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DieEstimate {
    /// mm²
    pub die_area: f64,
    pub matched_type: String,
}

pub fn infer_die_area(
    package_type: &str,
    dims: PackageDims,
    table: &DieCoefficientTable,
) -> Result<DieEstimate, InferenceError> {
    if !dims.is_valid() {
        return Err(InferenceError::BadDimensions);
    }
    let key = table
        .resolve(package_type)
        .ok_or_else(|| InferenceError::UnknownPackage(package_type.to_string()))?;
    let coef = table.get(key).expect("resolved key exists");
    Ok(DieEstimate {
        die_area: dims.area() * coef,
        matched_type: key.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessNodeRow {
    pub series: String,
    pub node_nm: u32,
    pub fmax_mhz: f64,
    pub ma_per_mhz: f64,
}

/// Reference MCU series with known process nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessNodeDataset {
    rows: Vec<ProcessNodeRow>,
}

impl ProcessNodeDataset {
    pub fn new(rows: Vec<ProcessNodeRow>) -> Result<Self, InferenceError> {
        for row in &rows {
            if !(14..=350).contains(&row.node_nm) {
                return Err(InferenceError::InvalidTable(format!(
                    "{}: node {} nm outside 14..=350",
                    row.series, row.node_nm
                )));
            }
            if !(row.fmax_mhz > 0.0 && row.ma_per_mhz > 0.0) {
                return Err(InferenceError::InvalidTable(format!(
                    "{}: frequency and current must be positive",
                    row.series
                )));
            }
        }
        Ok(ProcessNodeDataset { rows })
    }

    /// Reads `series,node_nm,fmax_mhz,ma_per_mhz` rows with a header line.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, InferenceError> {
        let mut csv = csv::Reader::from_reader(reader);
        let rows = csv
            .deserialize()
            .collect::<Result<Vec<ProcessNodeRow>, _>>()
            .map_err(|e| InferenceError::InvalidTable(e.to_string()))?;
        ProcessNodeDataset::new(rows)
    }

    pub fn rows(&self) -> &[ProcessNodeRow] {
        &self.rows
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeEstimate {
    pub node_nm: u32,
    pub neighbor: String,
    pub distance: f64,
}

const TIE_EPS: f64 = 1e-12;

/// Distance between two (MHz, mA/MHz) points, measured in decades on both axes.
pub fn log_distance(fmax_a: f64, cur_a: f64, fmax_b: f64, cur_b: f64) -> f64 {
    let df = fmax_a.log10() - fmax_b.log10();
    let dc = cur_a.log10() - cur_b.log10();
    (df * df + dc * dc).sqrt()
}

/// Nearest-neighbour classification in log-log space. Ties go to the smaller
/// node, then to the lexicographically smaller series name.
pub fn infer_process_node(
    max_frequency: f64,
    current_per_mhz: f64,
    dataset: &ProcessNodeDataset,
) -> Result<NodeEstimate, InferenceError> {
    if !(max_frequency > 0.0 && current_per_mhz > 0.0) {
        return Err(InferenceError::NonPositiveInput);
    }
    let mut best: Option<NodeEstimate> = None;
    for row in &dataset.rows {
        let distance = log_distance(max_frequency, current_per_mhz, row.fmax_mhz, row.ma_per_mhz);
        let better = match &best {
            None => true,
            Some(b) => {
                if distance < b.distance - TIE_EPS {
                    true
                } else if distance <= b.distance + TIE_EPS {
                    (row.node_nm, row.series.as_str()) < (b.node_nm, b.neighbor.as_str())
                } else {
                    false
                }
            }
        };
        if better {
            best = Some(NodeEstimate {
                node_nm: row.node_nm,
                neighbor: row.series.clone(),
                distance,
            });
        }
    }
    best.ok_or(InferenceError::EmptyDataset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table() -> DieCoefficientTable {
        DieCoefficientTable::new(BTreeMap::from([
            ("QFN".to_string(), 0.36),
            ("QFP".to_string(), 0.25),
            ("WLCSP".to_string(), 1.0),
            ("BGA".to_string(), 0.30),
        ]))
        .unwrap()
    }

    fn shipped_dataset() -> ProcessNodeDataset {
        ProcessNodeDataset::from_csv(include_str!("../config/process_nodes.csv").as_bytes()).unwrap()
    }

    #[test]
    fn die_area_from_rectangle() {
        let est = infer_die_area("QFN", PackageDims::Rect(5.0, 5.0), &table()).unwrap();
        // 25 mm² × 0.36
        assert!((est.die_area - 9.0).abs() < 1e-12);
        assert_eq!(est.matched_type, "QFN");
    }

    #[test]
    fn wlcsp_is_the_bare_die() {
        let est = infer_die_area("WLCSP", PackageDims::Rect(3.0, 3.0), &table()).unwrap();
        assert_eq!(est.die_area, 9.0);
    }

    #[test]
    fn single_dimension_means_square() {
        let est = infer_die_area("QFP", PackageDims::Square(7.0), &table()).unwrap();
        // 7² = 49, × 0.25
        assert!((est.die_area - 12.25).abs() < 1e-12);
    }

    #[test]
    fn fuzzy_package_resolution() {
        let est = infer_die_area("wlcsp-", PackageDims::Square(2.0), &table()).unwrap();
        assert_eq!(est.matched_type, "WLCSP");
        assert_eq!(
            infer_die_area("SOT", PackageDims::Square(2.0), &table()),
            Err(InferenceError::UnknownPackage("SOT".into()))
        );
        assert_eq!(
            infer_die_area("QFN", PackageDims::Rect(0.0, 2.0), &table()),
            Err(InferenceError::BadDimensions)
        );
    }

    #[test]
    fn coefficients_must_be_fractions() {
        let bad = BTreeMap::from([("QFN".to_string(), 1.2)]);
        assert!(DieCoefficientTable::new(bad).is_err());
    }

    #[test]
    fn exact_row_wins() {
        let ds = shipped_dataset();
        for row in ds.rows() {
            let est = infer_process_node(row.fmax_mhz, row.ma_per_mhz, &ds).unwrap();
            assert_eq!(est.distance, 0.0);
            assert_eq!(est.node_nm, row.node_nm, "{}", row.series);
        }
    }

    #[test]
    fn equidistant_rows_prefer_smaller_node() {
        let ds = ProcessNodeDataset::new(vec![
            ProcessNodeRow { series: "old".into(), node_nm: 180, fmax_mhz: 10.0, ma_per_mhz: 1.0 },
            ProcessNodeRow { series: "new".into(), node_nm: 90, fmax_mhz: 1000.0, ma_per_mhz: 1.0 },
        ])
        .unwrap();
        let est = infer_process_node(100.0, 1.0, &ds).unwrap();
        assert_eq!(est.node_nm, 90);
    }

    #[test]
    fn nearest_neighbour_matches_exhaustive_scan() {
        let ds = shipped_dataset();
        // Independent scan: sort all rows by (distance, node, series).
        let query = (48.0, 0.25);
        let mut scored: Vec<_> = ds
            .rows()
            .iter()
            .map(|r| {
                let d = ((query.0 as f64).ln() / 10f64.ln() - r.fmax_mhz.ln() / 10f64.ln()).powi(2)
                    + ((query.1 as f64).ln() / 10f64.ln() - r.ma_per_mhz.ln() / 10f64.ln()).powi(2);
                (d, r.node_nm, r.series.clone())
            })
            .collect();
        scored.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let est = infer_process_node(query.0, query.1, &ds).unwrap();
        assert_eq!(est.node_nm, scored[0].1);
        assert_eq!(est.neighbor, scored[0].2);
        assert_eq!(est.node_nm, 180);
    }

    #[test]
    fn empty_dataset_and_bad_inputs() {
        let ds = ProcessNodeDataset::new(vec![]).unwrap();
        assert_eq!(infer_process_node(48.0, 0.2, &ds), Err(InferenceError::EmptyDataset));
        assert_eq!(
            infer_process_node(0.0, 0.2, &shipped_dataset()),
            Err(InferenceError::NonPositiveInput)
        );
    }

    #[test]
    fn dataset_range_check() {
        let row = ProcessNodeRow { series: "x".into(), node_nm: 7, fmax_mhz: 1.0, ma_per_mhz: 1.0 };
        assert!(ProcessNodeDataset::new(vec![row]).is_err());
    }

    proptest! {
        #[test]
        fn die_never_exceeds_package(w in 0.1f64..50.0, h in 0.1f64..50.0, key in prop_oneof![Just("QFN"), Just("QFP"), Just("WLCSP"), Just("BGA")]) {
            let est = infer_die_area(key, PackageDims::Rect(w, h), &table()).unwrap();
            prop_assert!(est.die_area <= w * h);
        }

        #[test]
        fn doubling_dimensions_quadruples_die(w in 0.1f64..50.0, h in 0.1f64..50.0) {
            let t = table();
            let small = infer_die_area("QFN", PackageDims::Rect(w, h), &t).unwrap().die_area;
            let big = infer_die_area("QFN", PackageDims::Rect(2.0 * w, 2.0 * h), &t).unwrap().die_area;
            prop_assert_eq!(big, 4.0 * small);
        }

        #[test]
        fn node_is_from_dataset_and_order_independent(
            f in 1.0f64..1000.0,
            c in 0.01f64..1.0,
            seed in any::<u64>(),
        ) {
            let ds = shipped_dataset();
            let est = infer_process_node(f, c, &ds).unwrap();
            prop_assert!(ds.rows().iter().any(|r| r.node_nm == est.node_nm));

            let mut rows = ds.rows().to_vec();
            let n = rows.len();
            let mut s = seed;
            for i in (1..n).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                rows.swap(i, (s >> 33) as usize % (i + 1));
            }
            let shuffled = ProcessNodeDataset::new(rows).unwrap();
            prop_assert_eq!(infer_process_node(f, c, &shuffled).unwrap(), est);
        }
    }
}
