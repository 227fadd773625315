//! Goal-based and history-based relevance.
//!
//! History-based variants are the covered side of the matching novelty
//! partition, computed over the whole history regardless of measures.

use serde::{Deserialize, Serialize};

use crate::context::Goal;
use crate::engine::{condition_signature, covered_count, select_rows, CubeQuery, DetailedCube};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::mdm::Schema;
use crate::novelty::{fsdn, pden, pdsn, same_level_coverage, Basis, Coverage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Full,
    Partial,
}

/// Share of `q`'s detailed signature that falls inside the goal's.
pub fn gbdsr(schema: &Schema, q: &CubeQuery, goal: &Goal) -> (f64, Coverage) {
    multi_goal_gbdsr(schema, q, std::slice::from_ref(goal))
}

/// As [`gbdsr`] against the union of several goals' detailed signatures.
/// With no goals nothing is relevant.
pub fn multi_goal_gbdsr(schema: &Schema, q: &CubeQuery, goals: &[Goal]) -> (f64, Coverage) {
    let mine = condition_signature(schema, &q.condition, true);
    let boxes: Vec<_> = goals
        .iter()
        .map(|g| condition_signature(schema, &g.condition, true))
        .collect();
    let cov = Coverage::new(mine.cardinality(), covered_count(&mine, &boxes));
    (cov.relevance(), cov)
}

/// Relevance against beacon queries that all sit at `q`'s grouper levels.
///
/// Full mode asks whether some beacon is equivalent to `q`: the same
/// detailed signature (syntactic) or the same fact rows (extensional).
pub fn same_level_relevance(
    cube: &DetailedCube,
    q: &CubeQuery,
    beacons: &[&CubeQuery],
    mode: Mode,
    basis: Basis,
    exec: Exec,
) -> Result<f64> {
    if beacons.iter().any(|b| b.groupers != q.groupers) {
        return Err(Error::LevelMismatch);
    }
    q.validate(cube)?;
    match mode {
        Mode::Full => {
            let equivalent = match basis {
                Basis::Syntactic => {
                    let schema = cube.schema();
                    let mine = condition_signature(schema, &q.condition, true);
                    beacons
                        .iter()
                        .any(|b| condition_signature(schema, &b.condition, true) == mine)
                }
                Basis::Extensional => {
                    let mine = select_rows(cube, &q.condition, exec);
                    beacons
                        .iter()
                        .any(|b| select_rows(cube, &b.condition, exec) == mine)
                }
            };
            Ok(if equivalent { 1.0 } else { 0.0 })
        }
        Mode::Partial => {
            Ok(same_level_coverage(cube, q, beacons, basis, exec)?.relevance())
        }
    }
}

/// Relevance against the history at the base level. The full syntactic
/// variant is `1 - fsdn`; the partial ones are covered fractions of the
/// detailed signature or the detailed fact rows.
pub fn detailed_relevance(
    cube: &DetailedCube,
    q: &CubeQuery,
    history: &[&CubeQuery],
    mode: Mode,
    basis: Basis,
    exec: Exec,
) -> Result<f64> {
    let schema = cube.schema();
    match (mode, basis) {
        (Mode::Full, Basis::Syntactic) => Ok(1.0 - fsdn(schema, q, history)),
        (Mode::Full, Basis::Extensional) => {
            let cov = pden(cube, q, history, exec)?;
            Ok(if cov.total > 0 && cov.covered == cov.total { 1.0 } else { 0.0 })
        }
        (Mode::Partial, Basis::Syntactic) => Ok(pdsn(schema, q, history).relevance()),
        (Mode::Partial, Basis::Extensional) => Ok(pden(cube, q, history, exec)?.relevance()),
    }
}
