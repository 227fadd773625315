//! How far a query lies from a collection of other queries.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::bitset::BitSet;
use crate::engine::{cell_distance_fast, select_rows, CellSet, CubeQuery, DetailedCube};
use crate::error::{Error, Result};
use crate::exec::{map_slice, Exec};
use crate::mdm::Schema;

/// Default cap on cell pairs compared by the value-based distances.
pub const PAIR_CAP: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceWeights {
    pub filter: f64,
    pub level: f64,
    pub measure: f64,
}

impl Default for DistanceWeights {
    fn default() -> Self {
        DistanceWeights {
            filter: 0.5,
            level: 0.35,
            measure: 0.15,
        }
    }
}

impl DistanceWeights {
    pub fn new(filter: f64, level: f64, measure: f64) -> Result<Self> {
        let w = DistanceWeights { filter, level, measure };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.filter, self.level, self.measure];
        if parts.iter().any(|x| !x.is_finite() || *x < 0.0)
            || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(Error::InvalidWeights);
        }
        Ok(())
    }
}

/// Component distances between two queries and their weighted sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueryDistance {
    pub filter: f64,
    pub level: f64,
    pub measure: f64,
    pub total: f64,
}

/// Statistic applied to a set of distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    Min,
    Max,
    Average,
    Median,
    /// k-th smallest, 1-based.
    Knn(usize),
}

impl Aggregation {
    /// Ties keep input order, so the k-th element is the same for any
    /// execution mode.
    pub fn apply(&self, values: &[f64]) -> Result<f64> {
        let n = values.len();
        if n == 0 {
            return Err(Error::EmptyCollection);
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.total_cmp(b));
        Ok(match *self {
            Aggregation::Min => sorted[0],
            Aggregation::Max => sorted[n - 1],
            Aggregation::Average => values.iter().sum::<f64>() / n as f64,
            Aggregation::Median => {
                if n % 2 == 1 {
                    sorted[n / 2]
                } else {
                    (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
                }
            }
            Aggregation::Knn(k) => {
                if k == 0 || k > n {
                    return Err(Error::KOutOfRange { k, n });
                }
                sorted[k - 1]
            }
        })
    }

    /// Parses `min`, `max`, `avg`/`average`, `median` or `knn:K`.
    pub fn parse(s: &str) -> Option<Aggregation> {
        let s = s.trim().to_ascii_lowercase();
        Some(match s.as_str() {
            "min" => Aggregation::Min,
            "max" => Aggregation::Max,
            "avg" | "average" | "mean" => Aggregation::Average,
            "median" => Aggregation::Median,
            _ => {
                let k = s.strip_prefix("knn:").or_else(|| s.strip_prefix("knn"))?;
                Aggregation::Knn(k.parse().ok()?)
            }
        })
    }
}

impl std::fmt::Display for Aggregation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Aggregation::Min => f.write_str("min"),
            Aggregation::Max => f.write_str("max"),
            Aggregation::Average => f.write_str("avg"),
            Aggregation::Median => f.write_str("median"),
            Aggregation::Knn(k) => write!(f, "knn:{k}"),
        }
    }
}

fn check_shape(schema: &Schema, q: &CubeQuery) -> Result<()> {
    let n = schema.n_dims();
    if q.groupers.len() != n || q.condition.atoms().iter().any(|a| a.dim >= n) {
        return Err(Error::SchemaMismatch);
    }
    Ok(())
}

/// Structural distance between two query definitions.
///
/// The filter part counts dimensions whose restriction (level and value
/// set, `{all}` when absent) differs; the level part averages grouper depth
/// differences over hierarchy heights; the measure part is the Jaccard
/// distance of the (function, measure) sets.
pub fn query_distance(
    schema: &Schema,
    a: &CubeQuery,
    b: &CubeQuery,
    w: &DistanceWeights,
) -> Result<QueryDistance> {
    check_shape(schema, a)?;
    check_shape(schema, b)?;
    w.validate()?;
    let n = schema.n_dims() as f64;
    let mut filter = 0.0;
    let mut level = 0.0;
    for (d, dim) in schema.dims().iter().enumerate() {
        if a.condition.restriction(schema, d) != b.condition.restriction(schema, d) {
            filter += 1.0;
        }
        level += a.groupers[d].abs_diff(b.groupers[d]) as f64 / dim.height().max(1) as f64;
    }
    filter /= n;
    level /= n;
    let ma: BTreeSet<_> = a.aggregates.iter().collect();
    let mb: BTreeSet<_> = b.aggregates.iter().collect();
    let union = ma.union(&mb).count();
    let measure = if union == 0 {
        0.0
    } else {
        1.0 - ma.intersection(&mb).count() as f64 / union as f64
    };
    Ok(QueryDistance {
        filter,
        level,
        measure,
        total: w.filter * filter + w.level * level + w.measure * measure,
    })
}

/// Aggregated structural distance from `q` to each collection member.
pub fn syntactic_peculiarity(
    schema: &Schema,
    q: &CubeQuery,
    others: &[&CubeQuery],
    agg: Aggregation,
    w: &DistanceWeights,
) -> Result<f64> {
    if others.is_empty() {
        return Err(Error::EmptyCollection);
    }
    let ds = others
        .iter()
        .map(|o| query_distance(schema, q, o, w).map(|d| d.total))
        .collect::<Result<Vec<_>>>()?;
    agg.apply(&ds)
}

fn pair_guard(a: &CellSet, b: &CellSet, cap: u128) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyResult);
    }
    let pairs = a.len() as u128 * b.len() as u128;
    if pairs > cap {
        return Err(Error::TooManyPairs { pairs, cap });
    }
    Ok(())
}

/// For each cell of `a`, the distance to its nearest cell in `b`.
fn nearest(schema: &Schema, a: &CellSet, b: &CellSet, exec: Exec) -> Vec<f64> {
    map_slice(exec, &a.cells, |c| {
        b.cells
            .iter()
            .map(|o| cell_distance_fast(schema, &a.levels, &c.coord, &b.levels, &o.coord))
            .fold(f64::INFINITY, f64::min)
    })
}

/// Mean distance from each cell of `a` to its closest relative in `b`.
pub fn closest_relative(
    schema: &Schema,
    a: &CellSet,
    b: &CellSet,
    cap: u128,
    exec: Exec,
) -> Result<f64> {
    pair_guard(a, b, cap)?;
    let mins = nearest(schema, a, b, exec);
    Ok(mins.iter().sum::<f64>() / mins.len() as f64)
}

/// Average of the two directed closest-relative distances.
pub fn closest_relative_symmetric(
    schema: &Schema,
    a: &CellSet,
    b: &CellSet,
    cap: u128,
    exec: Exec,
) -> Result<f64> {
    Ok((closest_relative(schema, a, b, cap, exec)? + closest_relative(schema, b, a, cap, exec)?) / 2.0)
}

/// Largest distance from a cell of `a` to its nearest cell in `b`.
pub fn directed_hausdorff(
    schema: &Schema,
    a: &CellSet,
    b: &CellSet,
    cap: u128,
    exec: Exec,
) -> Result<f64> {
    pair_guard(a, b, cap)?;
    Ok(nearest(schema, a, b, exec).into_iter().fold(0.0, f64::max))
}

pub fn hausdorff(schema: &Schema, a: &CellSet, b: &CellSet, cap: u128, exec: Exec) -> Result<f64> {
    Ok(directed_hausdorff(schema, a, b, cap, exec)?.max(directed_hausdorff(schema, b, a, cap, exec)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueDistance {
    ClosestRelative,
    Hausdorff,
}

/// Aggregated value distance from each collection result to `q`'s.
pub fn value_peculiarity(
    schema: &Schema,
    q: &CellSet,
    others: &[CellSet],
    kind: ValueDistance,
    agg: Aggregation,
    cap: u128,
    exec: Exec,
) -> Result<f64> {
    if others.is_empty() {
        return Err(Error::EmptyCollection);
    }
    let ds = others
        .iter()
        .map(|o| match kind {
            ValueDistance::ClosestRelative => closest_relative(schema, o, q, cap, exec),
            ValueDistance::Hausdorff => hausdorff(schema, o, q, cap, exec),
        })
        .collect::<Result<Vec<_>>>()?;
    agg.apply(&ds)
}

/// `1 - |a ∩ b| / |a ∪ b|`; two empty sets are at distance 0.
pub fn jaccard_distance(a: &BitSet, b: &BitSet) -> f64 {
    let union = a.union_len(b);
    if union == 0 {
        0.0
    } else {
        1.0 - a.intersection_len(b) as f64 / union as f64
    }
}

/// Jaccard distances between `q`'s fact rows and each collection member's,
/// in collection order.
pub fn jaccard_distances(
    cube: &DetailedCube,
    q: &CubeQuery,
    others: &[&CubeQuery],
    exec: Exec,
) -> Result<Vec<f64>> {
    q.validate(cube)?;
    for o in others {
        o.validate(cube)?;
    }
    let mine = select_rows(cube, &q.condition, exec);
    Ok(map_slice(exec, others, |o| {
        jaccard_distance(&mine, &select_rows(cube, &o.condition, exec))
    }))
}

/// The k-th smallest Jaccard distance between detailed areas.
pub fn jaccard_peculiarity(
    cube: &DetailedCube,
    q: &CubeQuery,
    others: &[&CubeQuery],
    k: usize,
    exec: Exec,
) -> Result<f64> {
    if others.is_empty() {
        return Err(Error::EmptyCollection);
    }
    if k == 0 || k > others.len() {
        return Err(Error::KOutOfRange { k, n: others.len() });
    }
    Aggregation::Knn(k).apply(&jaccard_distances(cube, q, others, exec)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{evaluate, AggFn, Aggregate, AtomicFilter, Cell, SelectionCondition};
    use crate::mdm::Dimension;

    fn schema() -> Schema {
        let geo = Dimension::from_csv(
            "Geo",
            "City,Country,Continent\nAthens,Greece,Europe\nThessaloniki,Greece,Europe\nParis,France,Europe\nToronto,Canada,America\n"
                .as_bytes(),
        )
        .unwrap();
        let t = Dimension::from_csv("Time", "Month,Year\nm1,y1\nm2,y1\nm3,y2\n".as_bytes()).unwrap();
        Schema::new(vec![geo, t])
    }

    fn q(atoms: Vec<AtomicFilter>, groupers: Vec<usize>, aggs: Vec<(AggFn, usize)>) -> CubeQuery {
        CubeQuery::new(
            SelectionCondition::new(atoms).unwrap(),
            groupers,
            aggs.into_iter().map(|(func, measure)| Aggregate { func, measure }).collect(),
        )
    }

    fn cells(levels: Vec<usize>, coords: &[[u32; 2]]) -> CellSet {
        CellSet {
            levels,
            measure_labels: vec![],
            cells: coords.iter().map(|c| Cell { coord: c.to_vec(), measures: vec![] }).collect(),
        }
    }

    #[test]
    fn structural_components() {
        let s = schema();
        let w = DistanceWeights::default();
        let a = q(vec![], vec![0, 0], vec![(AggFn::Avg, 0)]);
        let b = q(
            vec![AtomicFilter::new(0, 1, [0]), AtomicFilter::new(1, 1, [0])],
            vec![0, 0],
            vec![(AggFn::Avg, 0)],
        );
        let d = query_distance(&s, &a, &b, &w).unwrap();
        assert_eq!((d.filter, d.level, d.measure, d.total), (1.0, 0.0, 0.0, 0.5));
        assert_eq!(query_distance(&s, &a, &a, &w).unwrap().total, 0.0);
        // geo grouped 2 of 3 levels higher, time one of two; one shared aggregate of three
        let c = q(vec![], vec![2, 1], vec![(AggFn::Avg, 0), (AggFn::Sum, 0)]);
        let d = query_distance(&s, &a, &c, &w).unwrap();
        assert!((d.level - (2.0 / 3.0 + 0.5) / 2.0).abs() < 1e-12);
        assert!((d.measure - 0.5).abs() < 1e-12);
        assert_eq!(query_distance(&s, &a, &c, &w).unwrap(), query_distance(&s, &c, &a, &w).unwrap());
        assert!(matches!(DistanceWeights::new(0.5, 0.5, 0.5), Err(Error::InvalidWeights)));
        let bad = q(vec![], vec![0], vec![]);
        assert!(matches!(query_distance(&s, &a, &bad, &w), Err(Error::SchemaMismatch)));
    }

    #[test]
    fn aggregations() {
        let v = [0.3, 0.1, 0.3, 0.9];
        assert_eq!(Aggregation::Min.apply(&v).unwrap(), 0.1);
        assert_eq!(Aggregation::Max.apply(&v).unwrap(), 0.9);
        assert_eq!(Aggregation::Median.apply(&v).unwrap(), 0.3);
        assert_eq!(Aggregation::Knn(1).apply(&v).unwrap(), 0.1);
        assert_eq!(Aggregation::Knn(4).apply(&v).unwrap(), 0.9);
        assert!(matches!(Aggregation::Knn(5).apply(&v), Err(Error::KOutOfRange { k: 5, n: 4 })));
        assert!(matches!(Aggregation::Average.apply(&[]), Err(Error::EmptyCollection)));
        for a in [Aggregation::Min, Aggregation::Knn(3), Aggregation::Median, Aggregation::Average] {
            assert_eq!(Aggregation::parse(&a.to_string()), Some(a));
        }
    }

    #[test]
    fn value_distances() {
        let s = schema();
        let ex = Exec::Sequential;
        // Athens vs Canada on one of two dimensions
        let athens = s.dim(0).member(0, "Athens").unwrap().id;
        let canada = s.dim(0).member(1, "Canada").unwrap().id;
        let a = cells(vec![0, 0], &[[athens, 0]]);
        let b = cells(vec![1, 0], &[[canada, 0]]);
        assert!((closest_relative(&s, &a, &b, PAIR_CAP, ex).unwrap() - 5.0 / 12.0).abs() < 1e-12);
        assert_eq!(hausdorff(&s, &a, &a, PAIR_CAP, ex).unwrap(), 0.0);
        // b adds a far cell to a
        let wide = cells(vec![0, 0], &[[0, 0], [3, 2]]);
        let h_ab = directed_hausdorff(&s, &a, &wide, PAIR_CAP, ex).unwrap();
        let h_ba = directed_hausdorff(&s, &wide, &a, PAIR_CAP, ex).unwrap();
        assert!(h_ab <= h_ba);
        assert_eq!(hausdorff(&s, &a, &wide, PAIR_CAP, ex).unwrap(), h_ba);
        assert!(h_ba >= closest_relative(&s, &wide, &a, PAIR_CAP, ex).unwrap());
        let empty = cells(vec![0, 0], &[]);
        assert!(matches!(hausdorff(&s, &a, &empty, PAIR_CAP, ex), Err(Error::EmptyResult)));
        assert!(matches!(
            hausdorff(&s, &wide, &wide, 3, ex),
            Err(Error::TooManyPairs { pairs: 4, cap: 3 })
        ));
        let sym = closest_relative_symmetric(&s, &a, &wide, PAIR_CAP, ex).unwrap();
        assert_eq!(sym, closest_relative_symmetric(&s, &wide, &a, PAIR_CAP, ex).unwrap());
    }

    #[test]
    fn jaccard_by_rows() {
        let s = schema();
        let mut facts = String::from("City,Month,v\n");
        for c in ["Athens", "Thessaloniki", "Paris", "Toronto"] {
            for m in ["m1", "m2", "m3"] {
                facts.push_str(&format!("{c},{m},1\n"));
            }
        }
        let cube = DetailedCube::from_csv(s, facts.as_bytes()).unwrap();
        let all = q(vec![], vec![0, 0], vec![(AggFn::Sum, 0)]);
        let greece = q(vec![AtomicFilter::new(0, 1, [0])], vec![0, 0], vec![(AggFn::Sum, 0)]);
        let y2 = q(vec![AtomicFilter::new(1, 1, [1])], vec![0, 0], vec![(AggFn::Sum, 0)]);
        let ex = Exec::Sequential;
        let ds = jaccard_distances(&cube, &greece, &[&all, &y2], ex).unwrap();
        // 6 of 12 rows; Greece ∩ y2 = 2 rows of a 6 + 4 - 2 union
        assert_eq!(ds, vec![0.5, 1.0 - 2.0 / 8.0]);
        assert_eq!(jaccard_peculiarity(&cube, &greece, &[&all, &y2], 1, ex).unwrap(), 0.5);
        assert_eq!(jaccard_peculiarity(&cube, &all, &[&all], 1, ex).unwrap(), 0.0);
        assert!(matches!(
            jaccard_peculiarity(&cube, &all, &[&all], 2, ex),
            Err(Error::KOutOfRange { .. })
        ));
        let rq = evaluate(&cube, &greece, ex).unwrap();
        let r_all = evaluate(&cube, &all, ex).unwrap();
        let v = value_peculiarity(cube.schema(), &rq, &[rq.clone()], ValueDistance::Hausdorff, Aggregation::Average, PAIR_CAP, ex)
            .unwrap();
        assert_eq!(v, 0.0);
        let v = value_peculiarity(cube.schema(), &rq, &[r_all], ValueDistance::ClosestRelative, Aggregation::Min, PAIR_CAP, ex)
            .unwrap();
        assert!(v > 0.0 && v < 1.0);
    }
}
