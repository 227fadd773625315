//! Random small cubes and brute-force reference implementations.
//!
//! The oracles never call into the metric code: they keep their own parent
//! tables and fact list, enumerate the full base coordinate product, and
//! compute every quantity from explicit sets.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use cubeint::context::{Anchor, BeliefStatement, BeliefStore, BeliefTarget, Goal, Interval};
use cubeint::engine::{AggFn, Aggregate, AtomicFilter, CubeQuery, DetailedCube, SelectionCondition};
use cubeint::mdm::{Dimension, Schema};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Coord = Vec<u32>;

pub struct Instance {
    pub cube: DetailedCube,
    /// `parents[d][depth][id]`: parent id one level up; the top real level
    /// maps everything to the single `ALL` member 0.
    pub parents: Vec<Vec<Vec<u32>>>,
    /// `cards[d][depth]` for depth `0..=height`.
    pub cards: Vec<Vec<usize>>,
    pub facts: Vec<Coord>,
    pub measures: Vec<Vec<f64>>,
    pub q: CubeQuery,
    pub history: Vec<CubeQuery>,
    pub goal: Goal,
    pub beliefs: BeliefStore,
}

/// Sorted cut of `0..n` into `k` nonempty runs, as a parent map.
fn monotone_surjection(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<u32> {
    let cuts: BTreeSet<usize> = sample(rng, n - 1, k - 1).into_iter().map(|c| c + 1).collect();
    let mut out = Vec::with_capacity(n);
    let mut p = 0u32;
    for i in 0..n {
        if cuts.contains(&i) {
            p += 1;
        }
        out.push(p);
    }
    out
}

fn random_subset(rng: &mut ChaCha8Rng, n: usize) -> Vec<u32> {
    let k = rng.gen_range(1..=n);
    sample(rng, n, k).into_iter().map(|v| v as u32).collect()
}

impl Instance {
    pub fn n_dims(&self) -> usize {
        self.cards.len()
    }

    pub fn height(&self, d: usize) -> usize {
        self.cards[d].len() - 1
    }

    pub fn schema(&self) -> &Schema {
        self.cube.schema()
    }

    pub fn anc(&self, d: usize, from: usize, id: u32, to: usize) -> u32 {
        let mut id = id;
        for depth in from..to {
            id = self.parents[d][depth][id as usize];
        }
        id
    }

    /// Every base coordinate of the full product space.
    pub fn product(&self) -> Vec<Coord> {
        let mut out = vec![Vec::new()];
        for d in 0..self.n_dims() {
            let mut next = Vec::new();
            for prefix in &out {
                for m in 0..self.cards[d][0] as u32 {
                    let mut c = prefix.clone();
                    c.push(m);
                    next.push(c);
                }
            }
            out = next;
        }
        out
    }

    pub fn holds(&self, cond: &SelectionCondition, base: &[u32]) -> bool {
        cond.atoms()
            .iter()
            .all(|a| a.values.contains(&self.anc(a.dim, 0, base[a.dim], a.depth)))
    }

    /// Base coordinates of the product satisfying the condition.
    pub fn region(&self, cond: &SelectionCondition) -> BTreeSet<Coord> {
        self.product().into_iter().filter(|c| self.holds(cond, c)).collect()
    }

    /// Fact row indices satisfying the condition.
    pub fn rows(&self, cond: &SelectionCondition) -> BTreeSet<usize> {
        (0..self.facts.len()).filter(|&r| self.holds(cond, &self.facts[r])).collect()
    }

    pub fn key(&self, base: &[u32], levels: &[usize]) -> Coord {
        base.iter()
            .enumerate()
            .map(|(d, &m)| self.anc(d, 0, m, levels[d]))
            .collect()
    }

    /// Result cells of `q`: grouping key -> one value per aggregate.
    pub fn cells(&self, q: &CubeQuery) -> BTreeMap<Coord, Vec<f64>> {
        let mut groups: BTreeMap<Coord, Vec<usize>> = BTreeMap::new();
        for r in self.rows(&q.condition) {
            groups.entry(self.key(&self.facts[r], &q.groupers)).or_default().push(r);
        }
        groups
            .into_iter()
            .map(|(k, rows)| {
                let vals = q
                    .aggregates
                    .iter()
                    .map(|a| {
                        let xs: Vec<f64> = rows.iter().map(|&r| self.measures[a.measure][r]).collect();
                        match a.func {
                            AggFn::Sum => xs.iter().sum(),
                            AggFn::Avg => xs.iter().sum::<f64>() / xs.len() as f64,
                            AggFn::Count => xs.len() as f64,
                            AggFn::Min => xs.iter().cloned().fold(f64::INFINITY, f64::min),
                            AggFn::Max => xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                        }
                    })
                    .collect();
                (k, vals)
            })
            .collect()
    }

    /// Coordinates at `q`'s grouper levels that some base coordinate of its
    /// region rolls up to.
    pub fn signature(&self, q: &CubeQuery) -> BTreeSet<Coord> {
        self.region(&q.condition)
            .iter()
            .map(|c| self.key(c, &q.groupers))
            .collect()
    }

    /// Base coordinates under the cell `coord` at `levels`, whole product.
    pub fn under(&self, levels: &[usize], coord: &[u32]) -> BTreeSet<Coord> {
        self.product()
            .into_iter()
            .filter(|c| self.key(c, levels) == coord)
            .collect()
    }

    /// Hops to the lowest common ancestor over twice the height.
    pub fn value_distance(&self, d: usize, la: usize, a: u32, lb: usize, b: u32) -> f64 {
        let h = self.height(d);
        for top in la.max(lb)..=h {
            if self.anc(d, la, a, top) == self.anc(d, lb, b, top) {
                return ((top - la) + (top - lb)) as f64 / (2 * h) as f64;
            }
        }
        unreachable!("ALL is common")
    }

    pub fn cell_distance(&self, la: &[usize], a: &[u32], lb: &[usize], b: &[u32]) -> f64 {
        let n = self.n_dims();
        (0..n).map(|d| self.value_distance(d, la[d], a[d], lb[d], b[d])).sum::<f64>() / n as f64
    }
}

pub struct Limits {
    pub max_dims: usize,
    pub max_levels: usize,
    pub max_base: usize,
    pub max_rows: usize,
    pub max_history: usize,
}

pub const SMALL: Limits = Limits {
    max_dims: 4,
    max_levels: 3,
    max_base: 5,
    max_rows: 200,
    max_history: 6,
};

fn random_condition(rng: &mut ChaCha8Rng, cards: &[Vec<usize>], p_atom: f64) -> SelectionCondition {
    let mut atoms = Vec::new();
    for (d, c) in cards.iter().enumerate() {
        if rng.gen_bool(p_atom) {
            let depth = rng.gen_range(0..c.len() - 1);
            atoms.push(AtomicFilter::new(d, depth, random_subset(rng, c[depth])));
        }
    }
    SelectionCondition::new(atoms).expect("one atom per dimension")
}

fn random_aggregates(rng: &mut ChaCha8Rng) -> Vec<Aggregate> {
    let all: Vec<Aggregate> = AggFn::ALL
        .iter()
        .flat_map(|&func| (0..2).map(move |measure| Aggregate { func, measure }))
        .collect();
    let k = rng.gen_range(1..=2);
    sample(rng, all.len(), k).into_iter().map(|i| all[i]).collect()
}

fn random_query(rng: &mut ChaCha8Rng, cards: &[Vec<usize>]) -> CubeQuery {
    let groupers = cards.iter().map(|c| rng.gen_range(0..c.len())).collect();
    CubeQuery::new(random_condition(rng, cards, 0.6), groupers, random_aggregates(rng))
}

/// A history query that shares structure with `q` often enough for the
/// same-level and containment paths to be exercised.
fn related_query(rng: &mut ChaCha8Rng, cards: &[Vec<usize>], q: &CubeQuery) -> CubeQuery {
    let mut h = random_query(rng, cards);
    match rng.gen_range(0..10) {
        0 => h = q.clone(),
        1 | 2 => {
            h.groupers = q.groupers.clone();
            h.aggregates = q.aggregates.clone();
        }
        3 => {
            // widen or drop one of q's atoms
            let mut atoms: Vec<AtomicFilter> = q.condition.atoms().to_vec();
            if !atoms.is_empty() {
                let i = rng.gen_range(0..atoms.len());
                if rng.gen_bool(0.5) {
                    atoms.remove(i);
                } else {
                    let a = &atoms[i];
                    let extra = rng.gen_range(0..cards[a.dim][a.depth] as u32);
                    let mut values = a.values.clone();
                    values.insert(extra);
                    atoms[i] = AtomicFilter::new(a.dim, a.depth, values);
                }
            }
            h.condition = SelectionCondition::new(atoms).expect("one atom per dimension");
            h.groupers = q.groupers.clone();
            h.aggregates = q.aggregates.clone();
        }
        4..=6 => {
            // narrow one dimension to part of what q admits there
            let d = rng.gen_range(0..cards.len());
            let mut atoms: Vec<AtomicFilter> = q.condition.atoms().iter().filter(|a| a.dim != d).cloned().collect();
            let (depth, pool): (usize, Vec<u32>) = match q.condition.atoms().iter().find(|a| a.dim == d) {
                Some(a) => (a.depth, a.values.iter().copied().collect()),
                None => {
                    let depth = rng.gen_range(0..cards[d].len());
                    (depth, (0..cards[d][depth] as u32).collect())
                }
            };
            let mut values: BTreeSet<u32> = pool.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
            values.insert(pool[rng.gen_range(0..pool.len())]);
            atoms.push(AtomicFilter::new(d, depth, values));
            h.condition = SelectionCondition::new(atoms).expect("one atom per dimension");
        }
        _ => {}
    }
    h
}

fn random_beliefs(
    rng: &mut ChaCha8Rng,
    cards: &[Vec<usize>],
    q: &CubeQuery,
    facts: &[Coord],
) -> BeliefStore {
    let probs = [0.1, 0.3, 0.5, 0.7, 0.9];
    let mut store = BeliefStore::new();
    let n = rng.gen_range(0..=12);
    for _ in 0..n {
        let (levels, coord): (Vec<usize>, Coord) = match rng.gen_range(0..3) {
            // at q's levels
            0 => {
                let coord = q
                    .groupers
                    .iter()
                    .enumerate()
                    .map(|(d, &g)| rng.gen_range(0..cards[d][g] as u32))
                    .collect();
                (q.groupers.clone(), coord)
            }
            // on a fact's base coordinate
            1 if !facts.is_empty() => {
                (vec![0; cards.len()], facts[rng.gen_range(0..facts.len())].clone())
            }
            _ => {
                let levels: Vec<usize> = cards.iter().map(|c| rng.gen_range(0..c.len())).collect();
                let coord = levels
                    .iter()
                    .enumerate()
                    .map(|(d, &l)| rng.gen_range(0..cards[d][l] as u32))
                    .collect();
                (levels, coord)
            }
        };
        let lo = rng.gen_range(0..60) as f64;
        let target = if rng.gen_bool(0.5) {
            BeliefTarget::Interval(Interval::new(lo, true, lo + rng.gen_range(1..40) as f64, false))
        } else {
            BeliefTarget::Values(vec![lo, rng.gen_range(0..60) as f64])
        };
        store
            .add(BeliefStatement {
                anchor: Anchor { levels, coord },
                measure: rng.gen_range(0..2),
                target,
                probability: probs[rng.gen_range(0..probs.len())],
            })
            .expect("probability in range");
    }
    store
}

/// A random cube, query, history, goal and belief set within `lim`.
pub fn instance(seed: u64, lim: &Limits) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_dims = rng.gen_range(1..=lim.max_dims);
    let mut dims = Vec::new();
    let mut parents = Vec::new();
    let mut cards = Vec::new();
    for d in 0..n_dims {
        let levels = rng.gen_range(1..=lim.max_levels);
        let mut card = vec![rng.gen_range(2..=lim.max_base)];
        let mut par = Vec::new();
        for l in 0..levels {
            let n = card[l];
            let k = if l + 1 == levels { 1 } else { rng.gen_range(1..=n) };
            par.push(monotone_surjection(&mut rng, n, k));
            card.push(k);
        }
        let names: Vec<String> = (0..levels).map(|l| format!("L{l}")).collect();
        let rows: Vec<Vec<String>> = (0..card[0] as u32)
            .map(|b| {
                let mut id = b;
                (0..levels)
                    .map(|l| {
                        let label = format!("d{d}l{l}m{id}");
                        id = par[l][id as usize];
                        label
                    })
                    .collect()
            })
            .collect();
        let dim = Dimension::from_paths(&format!("D{d}"), &names, &rows).expect("valid hierarchy");
        for l in 0..levels {
            for id in 0..card[l] as u32 {
                assert_eq!(dim.level(l).lookup(&format!("d{d}l{l}m{id}")), Some(id));
            }
        }
        dims.push(dim);
        parents.push(par);
        cards.push(card);
    }
    let space: usize = cards.iter().map(|c| c[0]).product();
    let n_rows = rng.gen_range(1..=lim.max_rows.min(space));
    let mut facts: Vec<Coord> = sample(&mut rng, space, n_rows)
        .into_iter()
        .map(|mut i| {
            cards
                .iter()
                .map(|c| {
                    let m = (i % c[0]) as u32;
                    i /= c[0];
                    m
                })
                .collect()
        })
        .collect();
    facts.sort();
    let measures: Vec<Vec<f64>> = (0..2)
        .map(|_| (0..n_rows).map(|_| rng.gen_range(0..60) as f64).collect())
        .collect();
    let columns = (0..n_dims).map(|d| facts.iter().map(|f| f[d]).collect()).collect();
    let cube = DetailedCube::from_columns(
        Schema::new(dims),
        columns,
        vec!["m0".into(), "m1".into()],
        measures.clone(),
    )
    .expect("valid cube");

    let q = random_query(&mut rng, &cards);
    let n_hist = rng.gen_range(0..=lim.max_history);
    let history = (0..n_hist).map(|_| related_query(&mut rng, &cards, &q)).collect();
    let goal = Goal {
        condition: random_condition(&mut rng, &cards, 0.5),
    };
    let beliefs = random_beliefs(&mut rng, &cards, &q, &facts);
    Instance {
        cube,
        parents,
        cards,
        facts,
        measures,
        q,
        history,
        goal,
        beliefs,
    }
}

pub fn refs(qs: &[CubeQuery]) -> Vec<&CubeQuery> {
    qs.iter().collect()
}

/// `novel / total`, with an empty universe fully novel.
pub fn novel_share(total: usize, covered: usize) -> f64 {
    if total == 0 {
        1.0
    } else {
        (total - covered) as f64 / total as f64
    }
}

pub fn approx(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9
}
