//! Bundled instance files.

use crate::environment::GroundTruthModel;

/// Source of the two-material worked example.
pub const EXAMPLE1_JSON: &str = include_str!("../fixtures/example1.json");

/// Source of the three-material, two-context remedial-course population.
pub const REMEDIAL_POPULATION_JSON: &str = include_str!("../fixtures/remedial_population.json");

/// The worked example with unit costs and an uncharged first material.
pub fn example1() -> GroundTruthModel<f64> {
    GroundTruthModel::from_json_str(EXAMPLE1_JSON).expect("bundled fixture is valid")
}

/// Text, easy question and hard question (0, 1, 2) for a "not confident" and
/// a "confident" context; costs are 0.04 per minute of 4, 2 and 3 minutes.
pub fn remedial_population() -> GroundTruthModel<f64> {
    GroundTruthModel::from_json_str(REMEDIAL_POPULATION_JSON).expect("bundled fixture is valid")
}
