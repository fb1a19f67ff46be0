pub mod catalog;
pub mod config;
pub mod eda;
pub mod footprint;
pub mod fuzzy;
pub mod heuristics;
pub mod inference;
pub mod inventory;
pub mod pipeline;
pub mod report;
pub mod rules;
pub mod solver;

pub use inventory::{Category, DesignInventory, Part, PartId};
pub use pipeline::Engine;
