//! Session context a query is assessed against: history, beliefs, goals,
//! expected values and expected labels.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::engine::{evaluate, CellSet, CubeQuery, DetailedCube, SelectionCondition};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::mdm::{MemberId, Schema};
use crate::surprise::LabelingScheme;

/// A real interval with open/closed ends; infinite ends allowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn new(lo: f64, lo_closed: bool, hi: f64, hi_closed: bool) -> Self {
        Interval {
            lo,
            hi,
            lo_closed,
            hi_closed,
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        let above = if self.lo_closed { v >= self.lo } else { v > self.lo };
        let below = if self.hi_closed { v <= self.hi } else { v < self.hi };
        above && below
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !(self.lo_closed && self.hi_closed))
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        if self.is_empty() || other.is_empty() {
            return false;
        }
        let (a, b) = if self.lo <= other.lo { (self, other) } else { (other, self) };
        if a.hi > b.lo {
            return true;
        }
        a.hi == b.lo && a.hi_closed && b.lo_closed
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}..{}{}",
            if self.lo_closed { '[' } else { '(' },
            self.lo,
            self.hi,
            if self.hi_closed { ']' } else { ')' }
        )
    }
}

/// A coordinate at stated levels; dimensions left unstated sit at `ALL`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Anchor {
    pub levels: Vec<usize>,
    pub coord: Vec<MemberId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BeliefTarget {
    Interval(Interval),
    Values(Vec<f64>),
    Label(String),
}

impl BeliefTarget {
    /// Whether an actual measure value falls under this statement.
    pub fn holds_for(&self, v: f64) -> Option<bool> {
        match self {
            BeliefTarget::Interval(i) => Some(i.contains(v)),
            BeliefTarget::Values(vs) => Some(vs.contains(&v)),
            BeliefTarget::Label(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefStatement {
    pub anchor: Anchor,
    pub measure: usize,
    pub target: BeliefTarget,
    pub probability: f64,
}

#[derive(Debug, Clone, Default)]
pub struct BeliefStore {
    statements: Vec<BeliefStatement>,
}

impl BeliefStore {
    pub fn new() -> Self {
        BeliefStore::default()
    }

    pub fn add(&mut self, s: BeliefStatement) -> Result<()> {
        if !(0.0..=1.0).contains(&s.probability) {
            return Err(Error::ProbabilityOutOfRange(s.probability));
        }
        self.statements.push(s);
        Ok(())
    }

    pub fn statements(&self) -> &[BeliefStatement] {
        &self.statements
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    /// Statements per anchor: each cell's probable active domain.
    pub fn by_anchor(&self) -> BTreeMap<&Anchor, Vec<&BeliefStatement>> {
        let mut m: BTreeMap<&Anchor, Vec<&BeliefStatement>> = BTreeMap::new();
        for s in &self.statements {
            m.entry(&s.anchor).or_default().push(s);
        }
        m
    }

    pub fn for_cell<'a>(
        &'a self,
        anchor: &'a Anchor,
        measure: usize,
    ) -> impl Iterator<Item = &'a BeliefStatement> + 'a {
        self.statements
            .iter()
            .filter(move |s| s.measure == measure && &s.anchor == anchor)
    }

    /// Only the statements about the given measures.
    pub fn restricted_to(&self, measures: &[usize]) -> BeliefStore {
        BeliefStore {
            statements: self
                .statements
                .iter()
                .filter(|s| measures.contains(&s.measure))
                .cloned()
                .collect(),
        }
    }

    /// Anchors owning at least one statement with probability `>= pi`.
    pub fn known_cells(&self, pi: f64) -> BTreeSet<Anchor> {
        self.statements
            .iter()
            .filter(|s| s.probability >= pi)
            .map(|s| s.anchor.clone())
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct HistoryEntry {
    pub query: CubeQuery,
    pub cached: Option<CellSet>,
    pub session: String,
    pub seq: u64,
}

#[derive(Debug, Clone, Default)]
pub struct QueryHistory {
    entries: Vec<HistoryEntry>,
}

impl QueryHistory {
    pub fn new() -> Self {
        QueryHistory::default()
    }

    /// Appends a validated query. A supplied result must match a fresh
    /// evaluation.
    pub fn append(
        &mut self,
        cube: &DetailedCube,
        query: CubeQuery,
        result: Option<CellSet>,
        session: &str,
    ) -> Result<()> {
        query.validate(cube)?;
        if let Some(r) = &result {
            if !r.approx_eq(&evaluate(cube, &query, Exec::default())?) {
                return Err(Error::CachedResultMismatch);
            }
        }
        let seq = self.entries.last().map_or(0, |e| e.seq + 1);
        self.entries.push(HistoryEntry {
            query,
            cached: result,
            session: session.to_string(),
            seq,
        });
        Ok(())
    }

    pub fn entries(&self) -> &[HistoryEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn queries(&self) -> Vec<&CubeQuery> {
        self.entries.iter().map(|e| &e.query).collect()
    }

    /// Session ids in order of first appearance.
    pub fn sessions(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for e in &self.entries {
            if !out.contains(&e.session.as_str()) {
                out.push(&e.session);
            }
        }
        out
    }

    pub fn session(&self, id: &str) -> QueryHistory {
        QueryHistory {
            entries: self
                .entries
                .iter()
                .filter(|e| e.session == id)
                .cloned()
                .collect(),
        }
    }

    /// Result of entry `i`, from the cache when present.
    pub fn result(&self, cube: &DetailedCube, i: usize, exec: Exec) -> Result<CellSet> {
        match &self.entries[i].cached {
            Some(c) => Ok(c.clone()),
            None => evaluate(cube, &self.entries[i].query, exec),
        }
    }
}

/// Entries whose aggregate(measure) multiset equals `q`'s.
pub fn filter_history_same_measures(history: &QueryHistory, q: &CubeQuery) -> QueryHistory {
    let key = q.aggregate_multiset();
    QueryHistory {
        entries: history
            .entries
            .iter()
            .filter(|e| e.query.aggregate_multiset() == key)
            .cloned()
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Goal {
    pub condition: SelectionCondition,
}

/// True when an expectation key names this result column: either the full
/// label (`avg(Amt)`) or the bare measure (`Amt`).
pub fn measure_key_matches(key: &str, label: &str) -> bool {
    if key.eq_ignore_ascii_case(label) {
        return true;
    }
    match (label.find('('), label.rfind(')')) {
        (Some(a), Some(b)) if a < b => key.eq_ignore_ascii_case(&label[a + 1..b]),
        _ => false,
    }
}

/// Coordinate columns `Dim.Level,...` followed by two value columns.
fn read_keyed_csv<R: Read>(
    schema: &Schema,
    reader: R,
) -> Result<(Vec<usize>, Vec<(Vec<MemberId>, String, String)>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.len() < 2 {
        return Err(Error::EmptyFile("expectation file header".into()));
    }
    let coord_cols = header.len() - 2;
    let mut levels = schema.top_levels();
    let mut dims = Vec::with_capacity(coord_cols);
    for h in &header[..coord_cols] {
        let (dim, level) = h
            .split_once('.')
            .ok_or_else(|| Error::UnknownLevel(h.clone()))?;
        let (d, depth) = schema.resolve_level(dim, level)?;
        levels[d] = depth;
        dims.push(d);
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let mut coord: Vec<MemberId> = vec![0; schema.n_dims()];
        for (i, &d) in dims.iter().enumerate() {
            let label = rec.get(i).unwrap_or("");
            let lvl = schema.dim(d).level(levels[d]);
            coord[d] = lvl.lookup(label).ok_or_else(|| Error::UnknownMember {
                level: header[i].clone(),
                member: label.to_string(),
            })?;
        }
        let key = rec.get(coord_cols).unwrap_or("").to_string();
        let val = rec.get(coord_cols + 1).unwrap_or("").to_string();
        rows.push((coord, key, val));
    }
    Ok((levels, rows))
}

/// Expected measure values per coordinate, from `coord...,measure,expected`.
#[derive(Debug, Clone, Default)]
pub struct ExpectedValues {
    pub levels: Vec<usize>,
    values: HashMap<Vec<MemberId>, Vec<(String, f64)>>,
}

impl ExpectedValues {
    pub fn new(levels: Vec<usize>) -> Self {
        ExpectedValues {
            levels,
            values: HashMap::new(),
        }
    }

    pub fn insert(&mut self, coord: Vec<MemberId>, measure: &str, value: f64) {
        self.values
            .entry(coord)
            .or_default()
            .push((measure.to_string(), value));
    }

    pub fn from_csv<R: Read>(schema: &Schema, reader: R) -> Result<ExpectedValues> {
        let (levels, rows) = read_keyed_csv(schema, reader)?;
        let mut out = ExpectedValues::new(levels);
        for (coord, key, val) in rows {
            let v: f64 = val
                .parse()
                .map_err(|_| Error::MalformedFacts(format!("expected value {val:?}")))?;
            out.insert(coord, &key, v);
        }
        Ok(out)
    }

    pub fn get(&self, coord: &[MemberId], label: &str) -> Option<f64> {
        self.values
            .get(coord)?
            .iter()
            .find(|(k, _)| measure_key_matches(k, label))
            .map(|&(_, v)| v)
    }

    pub fn len(&self) -> usize {
        self.values.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Expected labels per coordinate, from `coord...,measure,label`.
#[derive(Debug, Clone, Default)]
pub struct ExpectedLabels {
    pub levels: Vec<usize>,
    labels: HashMap<Vec<MemberId>, Vec<(String, String)>>,
}

impl ExpectedLabels {
    pub fn new(levels: Vec<usize>) -> Self {
        ExpectedLabels {
            levels,
            labels: HashMap::new(),
        }
    }

    pub fn insert(&mut self, coord: Vec<MemberId>, measure: &str, label: &str) {
        self.labels
            .entry(coord)
            .or_default()
            .push((measure.to_string(), label.to_string()));
    }

    pub fn from_csv<R: Read>(schema: &Schema, reader: R) -> Result<ExpectedLabels> {
        let (levels, rows) = read_keyed_csv(schema, reader)?;
        let mut out = ExpectedLabels::new(levels);
        for (coord, key, label) in rows {
            out.insert(coord, &key, &label);
        }
        Ok(out)
    }

    pub fn get(&self, coord: &[MemberId], label: &str) -> Option<&str> {
        self.labels
            .get(coord)?
            .iter()
            .find(|(k, _)| measure_key_matches(k, label))
            .map(|(_, v)| v.as_str())
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Everything a query is assessed against.
#[derive(Debug, Clone, Default)]
pub struct SessionContext {
    pub history: QueryHistory,
    pub beliefs: BeliefStore,
    pub goals: Vec<Goal>,
    pub expected: Option<ExpectedValues>,
    pub expected_labels: Option<ExpectedLabels>,
    pub labels: Option<LabelingScheme>,
}
