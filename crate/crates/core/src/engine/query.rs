use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::cube::DetailedCube;
use crate::error::{Error, Result};
use crate::mdm::{Member, MemberId, Schema};

/// `Dim.Level IN {v1, ..., vk}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomicFilter {
    pub dim: usize,
    pub depth: usize,
    pub values: BTreeSet<MemberId>,
}

impl AtomicFilter {
    pub fn new(dim: usize, depth: usize, values: impl IntoIterator<Item = MemberId>) -> Self {
        AtomicFilter {
            dim,
            depth,
            values: values.into_iter().collect(),
        }
    }
}

/// Conjunction of atomic filters, at most one per dimension, kept sorted by
/// dimension. A dimension without an atom is unrestricted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct SelectionCondition {
    atoms: Vec<AtomicFilter>,
}

impl SelectionCondition {
    pub fn new(mut atoms: Vec<AtomicFilter>) -> Result<Self> {
        atoms.sort_by_key(|a| a.dim);
        for w in atoms.windows(2) {
            if w[0].dim == w[1].dim {
                return Err(Error::DuplicateDimensionAtom(w[0].dim.to_string()));
            }
        }
        Ok(SelectionCondition { atoms })
    }

    pub fn empty() -> Self {
        SelectionCondition::default()
    }

    pub fn atoms(&self) -> &[AtomicFilter] {
        &self.atoms
    }

    pub fn atom(&self, dim: usize) -> Option<&AtomicFilter> {
        self.atoms.iter().find(|a| a.dim == dim)
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// The `(depth, value set)` a dimension is restricted to, with absent
    /// atoms read as `ALL IN {all}`.
    pub fn restriction(&self, schema: &Schema, dim: usize) -> (usize, BTreeSet<MemberId>) {
        match self.atom(dim) {
            Some(a) => (a.depth, a.values.clone()),
            None => (schema.dim(dim).height(), BTreeSet::from([0])),
        }
    }

    /// Rewrites every atom to the base level via `desc`.
    pub fn detailed(&self, schema: &Schema) -> SelectionCondition {
        let atoms = self
            .atoms
            .iter()
            .map(|a| {
                let dim = schema.dim(a.dim);
                let mut base = Vec::new();
                for &v in &a.values {
                    dim.desc_into(Member::new(a.depth, v), 0, &mut base);
                }
                AtomicFilter::new(a.dim, 0, base)
            })
            .collect();
        SelectionCondition { atoms }
    }

    pub fn validate(&self, schema: &Schema) -> Result<()> {
        for a in &self.atoms {
            if a.dim >= schema.n_dims() {
                return Err(Error::UnknownDimension(a.dim.to_string()));
            }
            let dim = schema.dim(a.dim);
            if a.depth > dim.height() {
                return Err(Error::LevelNotInDimension {
                    dim: dim.name().to_string(),
                    depth: a.depth,
                });
            }
            if a.values.is_empty() {
                return Err(Error::InvalidQuery(format!(
                    "empty value set on {}.{}",
                    dim.name(),
                    dim.level(a.depth).name()
                )));
            }
            let card = dim.cardinality(a.depth);
            if let Some(&bad) = a.values.iter().find(|&&v| v as usize >= card) {
                return Err(Error::InvalidMember {
                    dim: dim.name().to_string(),
                    depth: a.depth,
                    id: bad,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggFn {
    Sum,
    Avg,
    Count,
    Min,
    Max,
}

impl AggFn {
    pub const ALL: [AggFn; 5] = [AggFn::Sum, AggFn::Avg, AggFn::Count, AggFn::Min, AggFn::Max];

    pub fn name(self) -> &'static str {
        match self {
            AggFn::Sum => "sum",
            AggFn::Avg => "avg",
            AggFn::Count => "count",
            AggFn::Min => "min",
            AggFn::Max => "max",
        }
    }

    pub fn parse(s: &str) -> Option<AggFn> {
        AggFn::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for AggFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Aggregate {
    pub func: AggFn,
    pub measure: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CubeQuery {
    pub condition: SelectionCondition,
    /// Grouper depth per dimension; the dimension's height means `ALL`.
    pub groupers: Vec<usize>,
    pub aggregates: Vec<Aggregate>,
}

impl CubeQuery {
    pub fn new(
        condition: SelectionCondition,
        groupers: Vec<usize>,
        aggregates: Vec<Aggregate>,
    ) -> Self {
        CubeQuery {
            condition,
            groupers,
            aggregates,
        }
    }

    pub fn validate(&self, cube: &DetailedCube) -> Result<()> {
        let schema = cube.schema();
        self.condition.validate(schema)?;
        if self.groupers.len() != schema.n_dims() {
            return Err(Error::DimensionMismatch {
                left: self.groupers.len(),
                right: schema.n_dims(),
            });
        }
        for (d, &g) in self.groupers.iter().enumerate() {
            if g > schema.dim(d).height() {
                return Err(Error::UnknownLevel(format!(
                    "depth {g} of {}",
                    schema.dim(d).name()
                )));
            }
        }
        if self.aggregates.is_empty() {
            return Err(Error::InvalidQuery("no aggregates".into()));
        }
        for a in &self.aggregates {
            if a.measure >= cube.measure_names().len() {
                return Err(Error::UnknownMeasure(format!("#{}", a.measure)));
            }
        }
        Ok(())
    }

    /// Same filter, base-level groupers and atoms, same aggregates.
    pub fn detailed_proxy(&self, schema: &Schema) -> CubeQuery {
        CubeQuery {
            condition: self.condition.detailed(schema),
            groupers: vec![0; self.groupers.len()],
            aggregates: self.aggregates.clone(),
        }
    }

    /// Aggregates as a sorted multiset.
    pub fn aggregate_multiset(&self) -> Vec<Aggregate> {
        let mut v = self.aggregates.clone();
        v.sort();
        v
    }

    /// Syntactic identity: atoms compared as (dimension, level, value set),
    /// same groupers and aggregates.
    pub fn same_definition(&self, other: &CubeQuery) -> bool {
        self.condition == other.condition
            && self.groupers == other.groupers
            && self.aggregate_multiset() == other.aggregate_multiset()
    }

    pub fn measure_labels(&self, cube: &DetailedCube) -> Vec<String> {
        self.aggregates
            .iter()
            .map(|a| format!("{}({})", a.func, cube.measure_names()[a.measure]))
            .collect()
    }
}
