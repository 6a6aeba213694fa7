//! Skylines, Skycubes, their concept-lattice materialization and emerging
//! Skycubes over pairs of relations.

pub mod bench;
pub mod cli;
pub mod emerging;
pub mod error;
pub mod fixtures;
pub mod lattice;
pub mod materialize;
pub mod partition;
pub mod persist;
pub mod relation;
pub mod schema;
pub mod skyline;

pub use error::{Error, Result};
pub use partition::Partition;
pub use relation::{load_relation, Relation, Row, RowId};
pub use schema::{Criterion, CriterionSet, Direction, Schema};
pub use skyline::{Skycube, SkycubeLimits, Skycuboid};
