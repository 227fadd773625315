use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::cube::{DetailedCube, KeyPacker};
use super::query::{AggFn, CubeQuery, SelectionCondition};
use crate::bitset::BitSet;
use crate::error::{Error, Result};
use crate::exec::{map_range, Exec};
use crate::mdm::{Member, MemberId, Schema};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub coord: Vec<MemberId>,
    pub measures: Vec<f64>,
}

/// A query result: cells at fixed levels, sorted by coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSet {
    pub levels: Vec<usize>,
    pub measure_labels: Vec<String>,
    pub cells: Vec<Cell>,
}

impl CellSet {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn find(&self, coord: &[MemberId]) -> Option<&Cell> {
        self.cells
            .binary_search_by(|c| c.coord.as_slice().cmp(coord))
            .ok()
            .map(|i| &self.cells[i])
    }

    /// Same levels and coordinates, measures equal within a relative 1e-9.
    pub fn approx_eq(&self, other: &CellSet) -> bool {
        self.levels == other.levels
            && self.cells.len() == other.cells.len()
            && self.cells.iter().zip(&other.cells).all(|(a, b)| {
                a.coord == b.coord
                    && a.measures.len() == b.measures.len()
                    && a.measures.iter().zip(&b.measures).all(|(x, y)| {
                        x == y || (x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1.0)
                    })
            })
    }
}

/// Rows satisfying the condition, computed 64 rows at a time.
pub fn select_rows(cube: &DetailedCube, cond: &SelectionCondition, exec: Exec) -> BitSet {
    let schema = cube.schema();
    let n = cube.n_rows();
    let filters: Vec<(&[MemberId], BitSet)> = cond
        .atoms()
        .iter()
        .map(|a| {
            let mask = schema.dim(a.dim).base_mask(a.depth, a.values.iter().copied());
            (cube.column(a.dim), mask)
        })
        .collect();
    let words = map_range(exec, n.div_ceil(64), |w| {
        let lo = w * 64;
        let hi = (lo + 64).min(n);
        let mut word = if hi - lo == 64 { u64::MAX } else { (1u64 << (hi - lo)) - 1 };
        for (col, allowed) in &filters {
            let mut keep = 0u64;
            for (b, &m) in col[lo..hi].iter().enumerate() {
                keep |= (allowed.contains(m) as u64) << b;
            }
            word &= keep;
            if word == 0 {
                break;
            }
        }
        word
    });
    BitSet::from_words(words, n)
}

/// Grouping key of every row at the given levels.
pub(crate) struct RowKeys<'a> {
    cube: &'a DetailedCube,
    levels: &'a [usize],
    packer: KeyPacker,
}

impl<'a> RowKeys<'a> {
    pub(crate) fn new(cube: &'a DetailedCube, levels: &'a [usize]) -> Self {
        let schema = cube.schema();
        let cards: Vec<usize> = levels
            .iter()
            .enumerate()
            .map(|(d, &l)| schema.dim(d).cardinality(l))
            .collect();
        RowKeys {
            cube,
            levels,
            packer: KeyPacker::new(&cards),
        }
    }

    pub(crate) fn coord(&self, row: usize) -> Vec<MemberId> {
        let schema = self.cube.schema();
        self.levels
            .iter()
            .enumerate()
            .map(|(d, &l)| schema.dim(d).rollup(l)[self.cube.column(d)[row] as usize])
            .collect()
    }

    pub(crate) fn key(&self, row: usize) -> RowKey {
        let schema = self.cube.schema();
        let ids = self
            .levels
            .iter()
            .enumerate()
            .map(|(d, &l)| schema.dim(d).rollup(l)[self.cube.column(d)[row] as usize]);
        match self.packer.pack(ids) {
            Some(k) => RowKey::Packed(k),
            None => RowKey::Tuple(self.coord(row)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) enum RowKey {
    Packed(u128),
    Tuple(Vec<MemberId>),
}

#[derive(Clone)]
struct Acc {
    sum: f64,
    count: u64,
    min: f64,
    max: f64,
}

impl Acc {
    fn new() -> Self {
        Acc {
            sum: 0.0,
            count: 0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }

    fn push(&mut self, v: f64) {
        self.sum += v;
        self.count += 1;
        self.min = self.min.min(v);
        self.max = self.max.max(v);
    }

    fn finish(&self, f: AggFn) -> f64 {
        match f {
            AggFn::Sum => self.sum,
            AggFn::Avg => self.sum / self.count as f64,
            AggFn::Count => self.count as f64,
            AggFn::Min => self.min,
            AggFn::Max => self.max,
        }
    }
}

/// Groups the given rows at `q`'s grouper levels and applies its aggregates.
pub fn aggregate_rows(cube: &DetailedCube, q: &CubeQuery, rows: &BitSet) -> CellSet {
    let keys = RowKeys::new(cube, &q.groupers);
    let mut index: HashMap<RowKey, usize> = HashMap::new();
    let mut groups: Vec<(Vec<MemberId>, Vec<Acc>)> = Vec::new();
    for r in rows.iter() {
        let r = r as usize;
        let slot = *index.entry(keys.key(r)).or_insert_with(|| {
            groups.push((keys.coord(r), vec![Acc::new(); q.aggregates.len()]));
            groups.len() - 1
        });
        for (acc, a) in groups[slot].1.iter_mut().zip(&q.aggregates) {
            acc.push(cube.measure(a.measure)[r]);
        }
    }
    let mut cells: Vec<Cell> = groups
        .into_iter()
        .map(|(coord, accs)| Cell {
            coord,
            measures: accs
                .iter()
                .zip(&q.aggregates)
                .map(|(acc, a)| acc.finish(a.func))
                .collect(),
        })
        .collect();
    cells.sort_by(|a, b| a.coord.cmp(&b.coord));
    CellSet {
        levels: q.groupers.clone(),
        measure_labels: q.measure_labels(cube),
        cells,
    }
}

/// Filter, roll up, aggregate. Groups with no qualifying rows are absent.
pub fn evaluate(cube: &DetailedCube, q: &CubeQuery, exec: Exec) -> Result<CellSet> {
    q.validate(cube)?;
    let rows = select_rows(cube, &q.condition, exec);
    Ok(aggregate_rows(cube, q, &rows))
}

/// Base-level cells the query aggregates over.
pub fn detailed_area(cube: &DetailedCube, q: &CubeQuery, exec: Exec) -> Result<CellSet> {
    evaluate(cube, &q.detailed_proxy(cube.schema()), exec)
}

/// Detailed area as a row set. Coordinates are unique, so a row identifies
/// its detailed cell.
pub fn detailed_rows(cube: &DetailedCube, q: &CubeQuery, exec: Exec) -> Result<BitSet> {
    q.validate(cube)?;
    Ok(select_rows(cube, &q.condition, exec))
}

/// Mean of per-dimension hierarchy distances.
pub fn cell_distance(
    schema: &Schema,
    levels_a: &[usize],
    a: &[MemberId],
    levels_b: &[usize],
    b: &[MemberId],
) -> Result<f64> {
    let n = schema.n_dims();
    for len in [levels_a.len(), a.len(), levels_b.len(), b.len()] {
        if len != n {
            return Err(Error::DimensionMismatch { left: len, right: n });
        }
    }
    let mut total = 0.0;
    for d in 0..n {
        total += schema
            .dim(d)
            .value_distance(Member::new(levels_a[d], a[d]), Member::new(levels_b[d], b[d]))?;
    }
    Ok(total / n as f64)
}

/// Unchecked variant for hot loops over already validated cells.
pub(crate) fn cell_distance_fast(
    schema: &Schema,
    levels_a: &[usize],
    a: &[MemberId],
    levels_b: &[usize],
    b: &[MemberId],
) -> f64 {
    let n = a.len();
    let mut total = 0.0;
    for d in 0..n {
        total += schema.dim(d).value_distance_unchecked(
            Member::new(levels_a[d], a[d]),
            Member::new(levels_b[d], b[d]),
        );
    }
    total / n as f64
}
