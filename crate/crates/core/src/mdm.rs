//! Dimension hierarchies: levels, interned members, roll-up links and the
//! hierarchy-path distance between members.
//!
//! Each dimension is a linear chain of levels, depth 0 being the most detailed
//! and the last depth being the synthesized `ALL` level with the single member
//! `all`. Members are dense `u32` ids per level.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use crate::bitset::BitSet;
use crate::error::{Error, Result};

pub type MemberId = u32;

pub const ALL_LEVEL: &str = "ALL";
pub const ALL_MEMBER: &str = "all";

/// A member reference inside a known dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Member {
    pub depth: usize,
    pub id: MemberId,
}

impl Member {
    pub fn new(depth: usize, id: MemberId) -> Self {
        Member { depth, id }
    }
}

#[derive(Debug, Clone)]
pub struct Level {
    name: String,
    depth: usize,
    labels: Vec<String>,
    index: HashMap<String, MemberId>,
}

impl Level {
    fn new(name: &str, depth: usize) -> Self {
        Level {
            name: name.to_string(),
            depth,
            labels: Vec::new(),
            index: HashMap::new(),
        }
    }

    fn intern(&mut self, label: &str) -> MemberId {
        if let Some(&id) = self.index.get(label) {
            return id;
        }
        let id = self.labels.len() as MemberId;
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), id);
        id
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn cardinality(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, id: MemberId) -> &str {
        &self.labels[id as usize]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn lookup(&self, label: &str) -> Option<MemberId> {
        self.index.get(label).copied()
    }
}

#[derive(Debug, Clone)]
pub struct Dimension {
    name: String,
    levels: Vec<Level>,
    /// `parents[d][id]` is the parent (at depth d+1) of member `id` at depth d.
    parents: Vec<Vec<MemberId>>,
    /// `children[d][id]` lists the members at depth d-1 under `id`; empty at d = 0.
    children: Vec<Vec<Vec<MemberId>>>,
    /// `rollup[d][base]` is the depth-d ancestor of base member `base`.
    rollup: Vec<Vec<MemberId>>,
}

impl Dimension {
    /// Builds a dimension from base-member roll-up paths. `level_names` go
    /// finest to coarsest and must not include `ALL`; each row holds one label
    /// per level.
    pub fn from_paths<S: AsRef<str>>(
        name: &str,
        level_names: &[S],
        rows: &[Vec<String>],
    ) -> Result<Dimension> {
        if level_names.is_empty() || rows.is_empty() {
            return Err(Error::EmptyFile(format!("dimension {name}")));
        }
        let h = level_names.len();
        let mut levels: Vec<Level> = level_names
            .iter()
            .enumerate()
            .map(|(d, n)| Level::new(n.as_ref().trim(), d))
            .collect();
        let mut all = Level::new(ALL_LEVEL, h);
        all.intern(ALL_MEMBER);
        levels.push(all);

        // parent assignments, with the label that first fixed each one
        let mut parents: Vec<Vec<Option<MemberId>>> = vec![Vec::new(); h];
        for row in rows {
            if row.len() != h {
                return Err(Error::MalformedFacts(format!(
                    "dimension {name}: expected {h} columns, got {}",
                    row.len()
                )));
            }
            let ids: Vec<MemberId> = row
                .iter()
                .enumerate()
                .map(|(d, label)| levels[d].intern(label.trim()))
                .collect();
            for d in 0..h {
                let parent = if d + 1 < h { ids[d + 1] } else { 0 };
                let slot = &mut parents[d];
                let id = ids[d] as usize;
                if slot.len() <= id {
                    slot.resize(id + 1, None);
                }
                match slot[id] {
                    None => slot[id] = Some(parent),
                    Some(p) if p == parent => {}
                    Some(p) => {
                        return Err(Error::InconsistentRollup {
                            dim: name.to_string(),
                            member: levels[d].label(ids[d]).to_string(),
                            first: levels[d + 1].label(p).to_string(),
                            second: levels[d + 1].label(parent).to_string(),
                        })
                    }
                }
            }
        }
        let parents: Vec<Vec<MemberId>> = parents
            .into_iter()
            .map(|v| v.into_iter().map(|p| p.expect("every member has a parent")).collect())
            .collect();

        let mut children: Vec<Vec<Vec<MemberId>>> = vec![Vec::new()];
        for d in 1..=h {
            let mut ch = vec![Vec::new(); levels[d].cardinality()];
            for (id, &p) in parents[d - 1].iter().enumerate() {
                ch[p as usize].push(id as MemberId);
            }
            children.push(ch);
        }

        let base_n = levels[0].cardinality();
        let mut rollup: Vec<Vec<MemberId>> = vec![(0..base_n as MemberId).collect()];
        for d in 1..=h {
            let prev = &rollup[d - 1];
            let next = prev.iter().map(|&m| parents[d - 1][m as usize]).collect();
            rollup.push(next);
        }

        Ok(Dimension {
            name: name.to_string(),
            levels,
            parents,
            children,
            rollup,
        })
    }

    /// Reads a hierarchy CSV: header row of level names finest to coarsest,
    /// then one row per base member with its full roll-up path.
    pub fn from_csv<R: Read>(name: &str, reader: R) -> Result<Dimension> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header.is_empty() || header.iter().all(|h| h.is_empty()) {
            return Err(Error::EmptyFile(format!("dimension {name}")));
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            rows.push(rec.iter().map(str::to_string).collect());
        }
        Dimension::from_paths(name, &header, &rows)
    }

    pub fn load(path: &Path) -> Result<Dimension> {
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("dim")
            .to_string();
        Dimension::from_csv(&name, std::fs::File::open(path)?)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn level(&self, depth: usize) -> &Level {
        &self.levels[depth]
    }

    /// Number of edges between the base level and `ALL`.
    pub fn height(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn all_depth(&self) -> usize {
        self.height()
    }

    pub fn base_cardinality(&self) -> usize {
        self.levels[0].cardinality()
    }

    pub fn cardinality(&self, depth: usize) -> usize {
        self.levels[depth].cardinality()
    }

    pub fn level_depth(&self, name: &str) -> Option<usize> {
        self.levels
            .iter()
            .position(|l| l.name.eq_ignore_ascii_case(name))
    }

    pub fn member(&self, depth: usize, label: &str) -> Option<Member> {
        self.levels
            .get(depth)?
            .lookup(label)
            .map(|id| Member::new(depth, id))
    }

    pub fn all_member(&self) -> Member {
        Member::new(self.height(), 0)
    }

    pub fn label(&self, m: Member) -> &str {
        self.levels[m.depth].label(m.id)
    }

    /// Roll-up table from base ids to the ids at `depth`.
    pub fn rollup(&self, depth: usize) -> &[MemberId] {
        &self.rollup[depth]
    }

    pub fn parent(&self, m: Member) -> Option<Member> {
        if m.depth >= self.height() {
            None
        } else {
            Some(Member::new(m.depth + 1, self.parents[m.depth][m.id as usize]))
        }
    }

    pub fn children(&self, m: Member) -> &[MemberId] {
        if m.depth == 0 {
            &[]
        } else {
            &self.children[m.depth][m.id as usize]
        }
    }

    fn check(&self, m: Member) -> Result<()> {
        if m.depth > self.height() {
            return Err(Error::LevelNotInDimension {
                dim: self.name.clone(),
                depth: m.depth,
            });
        }
        if m.id as usize >= self.levels[m.depth].cardinality() {
            return Err(Error::InvalidMember {
                dim: self.name.clone(),
                depth: m.depth,
                id: m.id,
            });
        }
        Ok(())
    }

    fn check_depth(&self, depth: usize) -> Result<()> {
        if depth > self.height() {
            Err(Error::LevelNotInDimension {
                dim: self.name.clone(),
                depth,
            })
        } else {
            Ok(())
        }
    }

    /// Ancestor of `m` at `to_depth`; `anc(m, m.depth) == m`.
    pub fn anc(&self, m: Member, to_depth: usize) -> Result<Member> {
        self.check(m)?;
        self.check_depth(to_depth)?;
        if to_depth < m.depth {
            return Err(Error::LevelBelowMember {
                dim: self.name.clone(),
                member: m.depth,
                target: to_depth,
            });
        }
        Ok(self.anc_unchecked(m, to_depth))
    }

    pub(crate) fn anc_unchecked(&self, m: Member, to_depth: usize) -> Member {
        let mut id = m.id;
        for d in m.depth..to_depth {
            id = self.parents[d][id as usize];
        }
        Member::new(to_depth, id)
    }

    /// All members at `to_depth` whose ancestor at `m`'s level is `m`, in id order.
    pub fn desc(&self, m: Member, to_depth: usize) -> Result<Vec<MemberId>> {
        self.check(m)?;
        self.check_depth(to_depth)?;
        if to_depth > m.depth {
            return Err(Error::LevelAboveMember {
                dim: self.name.clone(),
                member: m.depth,
                target: to_depth,
            });
        }
        let mut out = Vec::new();
        self.desc_into(m, to_depth, &mut out);
        out.sort_unstable();
        Ok(out)
    }

    pub(crate) fn desc_into(&self, m: Member, to_depth: usize, out: &mut Vec<MemberId>) {
        if m.depth == to_depth {
            out.push(m.id);
            return;
        }
        for &c in self.children(m) {
            self.desc_into(Member::new(m.depth - 1, c), to_depth, out);
        }
    }

    /// Base members lying under any of `values` at `depth`, as a mask over
    /// the base level.
    pub fn base_mask(&self, depth: usize, values: impl IntoIterator<Item = MemberId>) -> BitSet {
        let card = self.base_cardinality();
        if depth == 0 {
            return BitSet::from_iter_in(card, values);
        }
        let wanted = BitSet::from_iter_in(self.cardinality(depth), values);
        let mut out = BitSet::new(card);
        for (b, &m) in self.rollup[depth].iter().enumerate() {
            if wanted.contains(m) {
                out.insert(b as MemberId);
            }
        }
        out
    }

    /// Least common ancestor; may be one of the two members.
    pub fn lca(&self, a: Member, b: Member) -> Result<Member> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.lca_unchecked(a, b))
    }

    pub(crate) fn lca_unchecked(&self, a: Member, b: Member) -> Member {
        let start = a.depth.max(b.depth);
        let mut x = self.anc_unchecked(a, start);
        let mut y = self.anc_unchecked(b, start);
        while x != y {
            // both at the same depth below ALL, so parents exist
            x = self.parent(x).expect("below ALL");
            y = self.parent(y).expect("below ALL");
        }
        x
    }

    /// Hierarchy-path distance: edges from each member to their LCA, over
    /// twice the height of the hierarchy.
    pub fn value_distance(&self, a: Member, b: Member) -> Result<f64> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.value_distance_unchecked(a, b))
    }

    pub(crate) fn value_distance_unchecked(&self, a: Member, b: Member) -> f64 {
        if a == b {
            return 0.0;
        }
        let l = self.lca_unchecked(a, b);
        let hops = (l.depth - a.depth) + (l.depth - b.depth);
        hops as f64 / (2 * self.height()) as f64
    }
}

/// The dimensions of a cube, in fact-table column order.
#[derive(Debug, Clone)]
pub struct Schema {
    dims: Vec<Dimension>,
}

impl Schema {
    pub fn new(dims: Vec<Dimension>) -> Self {
        Schema { dims }
    }

    pub fn dims(&self) -> &[Dimension] {
        &self.dims
    }

    pub fn dim(&self, i: usize) -> &Dimension {
        &self.dims[i]
    }

    pub fn n_dims(&self) -> usize {
        self.dims.len()
    }

    pub fn dim_index(&self, name: &str) -> Option<usize> {
        self.dims
            .iter()
            .position(|d| d.name.eq_ignore_ascii_case(name))
    }

    /// Resolves `Dim.Level` to (dimension index, depth).
    pub fn resolve_level(&self, dim: &str, level: &str) -> Result<(usize, usize)> {
        let di = self
            .dim_index(dim)
            .ok_or_else(|| Error::UnknownDimension(dim.to_string()))?;
        let depth = self.dims[di]
            .level_depth(level)
            .ok_or_else(|| Error::UnknownLevel(format!("{dim}.{level}")))?;
        Ok((di, depth))
    }

    /// Resolves a bare level name that must be unique across dimensions.
    pub fn find_level(&self, level: &str) -> Result<(usize, usize)> {
        let mut hits = self
            .dims
            .iter()
            .enumerate()
            .filter_map(|(i, d)| d.level_depth(level).map(|depth| (i, depth)))
            .filter(|&(i, depth)| depth != self.dims[i].height() || level.eq_ignore_ascii_case(ALL_LEVEL));
        let first = hits
            .next()
            .ok_or_else(|| Error::UnknownLevel(level.to_string()))?;
        if hits.next().is_some() {
            return Err(Error::AmbiguousIdentifier(level.to_string()));
        }
        Ok(first)
    }

    /// Loads `<dir>/<Dim>.csv` for each name, preserving order.
    pub fn load_dir(dir: &Path, names: &[&str]) -> Result<Schema> {
        let mut dims = Vec::new();
        for n in names {
            dims.push(Dimension::load(&dir.join(format!("{n}.csv")))?);
        }
        Ok(Schema::new(dims))
    }

    /// The all-`ALL` level vector.
    pub fn top_levels(&self) -> Vec<usize> {
        self.dims.iter().map(|d| d.height()).collect()
    }
}
