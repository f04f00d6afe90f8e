//! Satisfiability-preserving variable and value elimination for binary CSPs,
//! driven by the absence of forbidden patterns.

pub mod ac;
pub mod catalog;
pub mod engine;
pub mod fixtures;
pub mod format;
pub mod model;
pub mod oracle;
pub mod pattern;
pub mod reconstruct;

pub use model::{Assignment, Constraint, Instance, ModelError, PartialAssignment, Solution, Value, VarId};
pub use pattern::{OccurrenceWitness, Pattern, PatternError, ValueMapping};
