//! History- and belief-based novelty.
//!
//! Partial scores are `|novel| / |universe|`, where the universe is the
//! query's signature (syntactic) or its cells (extensional), at the query's
//! own levels (same-level) or at the base levels (detailed).

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::bitset::BitSet;
use crate::context::{Anchor, BeliefStore};
use crate::engine::{
    condition_signature, covered_count, evaluate, query_signature, select_rows, CubeQuery,
    DetailedCube, FactoredSignature, RowKey, RowKeys,
};
use crate::error::{Error, Result};
use crate::exec::{map_slice, Exec};
use crate::mdm::{Member, MemberId, Schema};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Syntactic,
    Extensional,
}

/// Sizes of a covered/novel split of some universe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub total: u128,
    pub covered: u128,
    /// Sum over covered elements of how many history queries contain them.
    pub covered_weight: f64,
}

impl Coverage {
    pub fn new(total: u128, covered: u128) -> Self {
        Coverage {
            total,
            covered,
            covered_weight: covered as f64,
        }
    }

    pub fn novel(&self) -> u128 {
        self.total - self.covered
    }

    /// Novel fraction; an empty universe counts as entirely novel.
    pub fn novelty(&self) -> f64 {
        if self.total == 0 {
            1.0
        } else {
            self.novel() as f64 / self.total as f64
        }
    }

    /// Covered fraction, defined as the complement of [`Coverage::novelty`]
    /// so that the two always sum to exactly 1.
    pub fn relevance(&self) -> f64 {
        1.0 - self.novelty()
    }

    /// Weighted novelty: novel elements weigh 1, covered elements weigh
    /// their occurrence count. 1 when nothing is covered.
    pub fn weighted_novelty(&self) -> f64 {
        if self.covered == 0 {
            return 1.0;
        }
        let novel = self.novel() as f64;
        novel / (novel + self.covered_weight)
    }
}

/// An explicit covered/novel split of a universe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveragePartition<T> {
    pub covered: Vec<T>,
    pub novel: Vec<T>,
    /// Occurrence count of each covered element, aligned with `covered`.
    pub weights: Vec<u32>,
}

impl<T> CoveragePartition<T> {
    pub fn coverage(&self) -> Coverage {
        Coverage {
            total: (self.covered.len() + self.novel.len()) as u128,
            covered: self.covered.len() as u128,
            covered_weight: self.weights.iter().map(|&w| w as f64).sum(),
        }
    }
}

/// Full same-level syntactic novelty: 0 iff some history query has the
/// identical definition.
pub fn fslsn(q: &CubeQuery, history: &[&CubeQuery]) -> f64 {
    if history.iter().any(|h| h.same_definition(q)) {
        0.0
    } else {
        1.0
    }
}

/// Per-dimension base member sets of a query's detailed signature.
fn detailed_sets(schema: &Schema, q: &CubeQuery) -> FactoredSignature {
    condition_signature(schema, &q.condition, true)
}

/// Members of `sig` (at `levels`) whose detailed region under `q` equals
/// their region under `other`, as a box. Such coordinates carry the same
/// facts in both queries.
fn compatible_box(
    schema: &Schema,
    q_sig: &FactoredSignature,
    q_detail: &FactoredSignature,
    other_detail: &FactoredSignature,
) -> FactoredSignature {
    let mut sets = Vec::with_capacity(schema.n_dims());
    for (d, dim) in schema.dims().iter().enumerate() {
        let level = q_sig.levels()[d];
        let rollup = dim.rollup(level);
        let mut diff = q_detail.set(d).clone();
        let mut other_only = other_detail.set(d).clone();
        other_only.difference_with(q_detail.set(d));
        diff.difference_with(other_detail.set(d));
        diff.union_with(&other_only);
        let mut keep = q_sig.set(d).clone();
        let dirty = BitSet::from_iter_in(keep.universe(), diff.iter().map(|b| rollup[b as usize]));
        keep.difference_with(&dirty);
        sets.push(keep);
    }
    FactoredSignature::new(q_sig.levels().to_vec(), sets)
}

/// Coverage of `q`'s coordinates (syntactic) or cells (extensional) by
/// queries at the same grouper levels. Callers pick the comparable set.
pub fn same_level_coverage(
    cube: &DetailedCube,
    q: &CubeQuery,
    comparable: &[&CubeQuery],
    basis: Basis,
    exec: Exec,
) -> Result<Coverage> {
    let schema = cube.schema();
    match basis {
        Basis::Syntactic => {
            let sig = query_signature(schema, q);
            let q_detail = detailed_sets(schema, q);
            let boxes: Vec<FactoredSignature> = comparable
                .iter()
                .map(|h| compatible_box(schema, &sig, &q_detail, &detailed_sets(schema, h)))
                .collect();
            Ok(Coverage::new(sig.cardinality(), covered_count(&sig, &boxes)))
        }
        Basis::Extensional => {
            q.validate(cube)?;
            let rows = select_rows(cube, &q.condition, exec);
            let others = map_slice(exec, comparable, |h| select_rows(cube, &h.condition, exec));
            let keys = RowKeys::new(cube, &q.groupers);
            let cells: HashSet<RowKey> = rows.iter().map(|r| keys.key(r as usize)).collect();
            let mut covered: HashSet<RowKey> = HashSet::new();
            for other in &others {
                let mut diff = rows.clone();
                diff.difference_with(other);
                let mut extra = other.clone();
                extra.difference_with(&rows);
                diff.union_with(&extra);
                let dirty: HashSet<RowKey> = diff.iter().map(|r| keys.key(r as usize)).collect();
                covered.extend(cells.iter().filter(|k| !dirty.contains(k)).cloned());
            }
            Ok(Coverage::new(cells.len() as u128, covered.len() as u128))
        }
    }
}

/// Partial same-level novelty against history queries with the same
/// groupers and aggregates. Fully novel when there are none.
pub fn same_level_novelty(
    cube: &DetailedCube,
    q: &CubeQuery,
    history: &[&CubeQuery],
    basis: Basis,
    exec: Exec,
) -> Result<Coverage> {
    let aggs = q.aggregate_multiset();
    let comparable: Vec<&CubeQuery> = history
        .iter()
        .copied()
        .filter(|h| h.groupers == q.groupers && h.aggregate_multiset() == aggs)
        .collect();
    same_level_coverage(cube, q, &comparable, basis, exec)
}

/// Full detailed syntactic novelty: 0 iff some history query's detailed
/// signature contains `q`'s.
pub fn fsdn(schema: &Schema, q: &CubeQuery, history: &[&CubeQuery]) -> f64 {
    let mine = detailed_sets(schema, q);
    if history
        .iter()
        .any(|h| mine.is_subset(&detailed_sets(schema, h)))
    {
        0.0
    } else {
        1.0
    }
}

/// Partial detailed syntactic novelty, counted on factored signatures.
pub fn pdsn(schema: &Schema, q: &CubeQuery, history: &[&CubeQuery]) -> Coverage {
    let mine = detailed_sets(schema, q);
    let boxes: Vec<FactoredSignature> = history.iter().map(|h| detailed_sets(schema, h)).collect();
    Coverage::new(mine.cardinality(), covered_count(&mine, &boxes))
}

/// Enumerates `q`'s detailed signature coordinate by coordinate and tests
/// each against the history's detailed signatures.
pub fn pdsn_partition(
    schema: &Schema,
    q: &CubeQuery,
    history: &[&CubeQuery],
    cap: u128,
) -> Result<CoveragePartition<Vec<MemberId>>> {
    let mine = detailed_sets(schema, q);
    if mine.cardinality() > cap {
        return Err(Error::SignatureTooLarge(mine.cardinality()));
    }
    let boxes: Vec<FactoredSignature> = history.iter().map(|h| detailed_sets(schema, h)).collect();
    let mut out = CoveragePartition {
        covered: Vec::new(),
        novel: Vec::new(),
        weights: Vec::new(),
    };
    for coord in mine.iter() {
        let hits = boxes.iter().filter(|b| b.contains(&coord)).count() as u32;
        if hits > 0 {
            out.covered.push(coord);
            out.weights.push(hits);
        } else {
            out.novel.push(coord);
        }
    }
    Ok(out)
}

/// Partial detailed extensional novelty over fact rows. The history should
/// already be restricted to queries with the same aggregates.
pub fn pden(
    cube: &DetailedCube,
    q: &CubeQuery,
    history: &[&CubeQuery],
    exec: Exec,
) -> Result<Coverage> {
    q.validate(cube)?;
    let rows = select_rows(cube, &q.condition, exec);
    let others = map_slice(exec, history, |h| select_rows(cube, &h.condition, exec));
    let mut union = BitSet::new(cube.n_rows());
    let mut weight = 0.0;
    for o in &others {
        union.union_with(o);
        weight += rows.intersection_len(o) as f64;
    }
    Ok(Coverage {
        total: rows.len() as u128,
        covered: rows.intersection_len(&union) as u128,
        covered_weight: weight,
    })
}

/// Row-level covered/novel split with occurrence counts.
pub fn pden_partition(
    cube: &DetailedCube,
    q: &CubeQuery,
    history: &[&CubeQuery],
    exec: Exec,
) -> Result<CoveragePartition<u32>> {
    q.validate(cube)?;
    let rows = select_rows(cube, &q.condition, exec);
    let others = map_slice(exec, history, |h| select_rows(cube, &h.condition, exec));
    let mut out = CoveragePartition {
        covered: Vec::new(),
        novel: Vec::new(),
        weights: Vec::new(),
    };
    for r in rows.iter() {
        let hits = others.iter().filter(|o| o.contains(r)).count() as u32;
        if hits > 0 {
            out.covered.push(r);
            out.weights.push(hits);
        } else {
            out.novel.push(r);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeliefMode {
    /// Beliefs anchored at the query's grouper levels, matched on its cells.
    SameLevel,
    /// Base-level beliefs, matched on the query's detailed cells.
    Detailed,
    /// Beliefs at or below the query's levels; a cell is covered when the
    /// known cells fully cover its detailed signature.
    Arbitrary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeliefNovelty {
    pub coverage: Coverage,
    /// Known anchors ignored because their levels do not suit the mode.
    pub skipped: usize,
}

/// True iff the base-level region of the cell at `levels`/`coord` lies in
/// the union of the regions of `known`. Every known cell must sit at or
/// below the cell's level on each dimension.
pub fn full_coverage(
    schema: &Schema,
    levels: &[usize],
    coord: &[MemberId],
    known: &[&Anchor],
) -> Result<bool> {
    for a in known {
        if a.levels.iter().zip(levels).any(|(al, l)| al > l) {
            return Err(Error::LevelMismatch);
        }
    }
    let base_box = |lv: &[usize], c: &[MemberId]| {
        let sets = schema
            .dims()
            .iter()
            .enumerate()
            .map(|(d, dim)| {
                let mut v = Vec::new();
                dim.desc_into(Member::new(lv[d], c[d]), 0, &mut v);
                BitSet::from_iter_in(dim.base_cardinality(), v)
            })
            .collect();
        FactoredSignature::new(vec![0; schema.n_dims()], sets)
    };
    let target = base_box(levels, coord);
    let inside: Vec<FactoredSignature> = known
        .iter()
        .filter(|a| {
            schema.dims().iter().enumerate().all(|(d, dim)| {
                dim.anc_unchecked(Member::new(a.levels[d], a.coord[d]), levels[d]).id == coord[d]
            })
        })
        .map(|a| base_box(&a.levels, &a.coord))
        .collect();
    Ok(covered_count(&target, &inside) == target.cardinality())
}

/// Belief-based novelty: the share of `q`'s cells not Π-known.
pub fn belief_novelty(
    cube: &DetailedCube,
    q: &CubeQuery,
    beliefs: &BeliefStore,
    pi: f64,
    mode: BeliefMode,
    exec: Exec,
) -> Result<BeliefNovelty> {
    let schema = cube.schema();
    let measures: Vec<usize> = q.aggregates.iter().map(|a| a.measure).collect();
    let known: BTreeSet<Anchor> = beliefs.restricted_to(&measures).known_cells(pi);
    let suits = |a: &Anchor| match mode {
        BeliefMode::SameLevel => a.levels == q.groupers,
        BeliefMode::Detailed => a.levels.iter().all(|&l| l == 0),
        BeliefMode::Arbitrary => a.levels.iter().zip(&q.groupers).all(|(l, g)| l <= g),
    };
    let kept: Vec<&Anchor> = known.iter().filter(|a| suits(a)).collect();
    let skipped = known.len() - kept.len();
    let coverage = match mode {
        BeliefMode::SameLevel => {
            let cells = evaluate(cube, q, exec)?;
            let coords: HashSet<&[MemberId]> = kept.iter().map(|a| a.coord.as_slice()).collect();
            let covered = cells
                .cells
                .iter()
                .filter(|c| coords.contains(c.coord.as_slice()))
                .count();
            Coverage::new(cells.len() as u128, covered as u128)
        }
        BeliefMode::Detailed => {
            q.validate(cube)?;
            let rows = select_rows(cube, &q.condition, exec);
            let coords: HashSet<&[MemberId]> = kept.iter().map(|a| a.coord.as_slice()).collect();
            let covered = rows
                .iter()
                .filter(|&r| coords.contains(cube.coord(r as usize).as_slice()))
                .count();
            Coverage::new(rows.len() as u128, covered as u128)
        }
        BeliefMode::Arbitrary => {
            let cells = evaluate(cube, q, exec)?;
            let flags = map_slice(exec, &cells.cells, |c| {
                full_coverage(schema, &q.groupers, &c.coord, &kept)
            });
            let mut covered = 0u128;
            for f in flags {
                covered += f? as u128;
            }
            Coverage::new(cells.len() as u128, covered)
        }
    };
    Ok(BeliefNovelty { coverage, skipped })
}

/// Occurrence counts of rows across the history, for callers that need the
/// per-row weights rather than their sum.
pub fn row_occurrences(
    cube: &DetailedCube,
    history: &[&CubeQuery],
    exec: Exec,
) -> HashMap<u32, u32> {
    let mut counts = HashMap::new();
    for rows in map_slice(exec, history, |h| select_rows(cube, &h.condition, exec)) {
        for r in rows.iter() {
            *counts.entry(r).or_insert(0) += 1;
        }
    }
    counts
}
