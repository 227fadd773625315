//! Fact storage, query evaluation, signatures and detailed areas.

mod cube;
mod eval;
mod query;
mod signature;

pub use cube::DetailedCube;
pub(crate) use eval::{cell_distance_fast, RowKey, RowKeys};
pub use eval::{
    aggregate_rows, cell_distance, detailed_area, detailed_rows, evaluate, select_rows, Cell,
    CellSet,
};
pub use query::{AggFn, Aggregate, AtomicFilter, CubeQuery, SelectionCondition};
pub use signature::{
    condition_signature, covered_count, query_signature, FactoredSignature, MATERIALIZE_CAP,
};
