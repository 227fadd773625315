//! Signatures as per-dimension member sets whose Cartesian product is the
//! coordinate set. Products are only materialized on request.

use std::collections::HashMap;

use super::query::{CubeQuery, SelectionCondition};
use crate::bitset::BitSet;
use crate::error::{Error, Result};
use crate::mdm::{Member, MemberId, Schema};

/// Default bound on materialized coordinate lists.
pub const MATERIALIZE_CAP: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactoredSignature {
    levels: Vec<usize>,
    sets: Vec<BitSet>,
}

impl FactoredSignature {
    pub fn new(levels: Vec<usize>, sets: Vec<BitSet>) -> Self {
        assert_eq!(levels.len(), sets.len());
        FactoredSignature { levels, sets }
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn sets(&self) -> &[BitSet] {
        &self.sets
    }

    pub fn set(&self, dim: usize) -> &BitSet {
        &self.sets[dim]
    }

    pub fn cardinality(&self) -> u128 {
        self.sets
            .iter()
            .fold(1u128, |acc, s| acc.saturating_mul(s.len() as u128))
    }

    pub fn is_empty(&self) -> bool {
        self.sets.iter().any(BitSet::is_empty)
    }

    pub fn contains(&self, coord: &[MemberId]) -> bool {
        coord.len() == self.sets.len() && self.sets.iter().zip(coord).all(|(s, &m)| s.contains(m))
    }

    /// Product inclusion, decided per dimension. Both signatures must be at
    /// the same levels.
    pub fn is_subset(&self, other: &FactoredSignature) -> bool {
        debug_assert_eq!(self.levels, other.levels);
        self.is_empty() || self.sets.iter().zip(&other.sets).all(|(a, b)| a.is_subset(b))
    }

    pub fn intersect(&self, other: &FactoredSignature) -> FactoredSignature {
        debug_assert_eq!(self.levels, other.levels);
        let sets = self
            .sets
            .iter()
            .zip(&other.sets)
            .map(|(a, b)| {
                let mut s = a.clone();
                s.intersect_with(b);
                s
            })
            .collect();
        FactoredSignature::new(self.levels.clone(), sets)
    }

    pub fn intersection_count(&self, other: &FactoredSignature) -> u128 {
        self.sets
            .iter()
            .zip(&other.sets)
            .fold(1u128, |acc, (a, b)| {
                acc.saturating_mul(a.intersection_len(b) as u128)
            })
    }

    /// Coordinates in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = Vec<MemberId>> + '_ {
        let members: Vec<Vec<MemberId>> = self.sets.iter().map(|s| s.iter().collect()).collect();
        let empty = members.iter().any(Vec::is_empty);
        let mut idx = vec![0usize; members.len()];
        let mut done = empty;
        std::iter::from_fn(move || {
            if done {
                return None;
            }
            let out = idx.iter().zip(&members).map(|(&i, m)| m[i]).collect();
            done = true;
            for d in (0..idx.len()).rev() {
                idx[d] += 1;
                if idx[d] < members[d].len() {
                    done = false;
                    break;
                }
                idx[d] = 0;
            }
            Some(out)
        })
    }

    pub fn materialize(&self, cap: u128) -> Result<Vec<Vec<MemberId>>> {
        let n = self.cardinality();
        if n > cap {
            return Err(Error::SignatureTooLarge(n));
        }
        Ok(self.iter().collect())
    }
}

/// Signature of a selection condition: the atom's value set per dimension
/// (or `{all}`), or with `detailed` the base-level descendants of those.
pub fn condition_signature(
    schema: &Schema,
    cond: &SelectionCondition,
    detailed: bool,
) -> FactoredSignature {
    let mut levels = Vec::with_capacity(schema.n_dims());
    let mut sets = Vec::with_capacity(schema.n_dims());
    for (d, dim) in schema.dims().iter().enumerate() {
        let (depth, values) = cond.restriction(schema, d);
        if detailed {
            levels.push(0);
            sets.push(dim.base_mask(depth, values));
        } else {
            levels.push(depth);
            sets.push(BitSet::from_iter_in(dim.cardinality(depth), values));
        }
    }
    FactoredSignature::new(levels, sets)
}

/// Coordinates at the query's grouper levels reachable from its detailed
/// signature. The image of a product under per-dimension maps is again a
/// product, so this stays factored.
pub fn query_signature(schema: &Schema, q: &CubeQuery) -> FactoredSignature {
    let mut sets = Vec::with_capacity(schema.n_dims());
    for (d, dim) in schema.dims().iter().enumerate() {
        let g = q.groupers[d];
        let (depth, values) = q.condition.restriction(schema, d);
        let mut out = BitSet::new(dim.cardinality(g));
        for v in values {
            let m = Member::new(depth, v);
            if g >= depth {
                out.insert(dim.anc_unchecked(m, g).id);
            } else {
                let mut below = Vec::new();
                dim.desc_into(m, g, &mut below);
                for b in below {
                    out.insert(b);
                }
            }
        }
        sets.push(out);
    }
    FactoredSignature::new(q.groupers.clone(), sets)
}

/// Exact `|target ∩ (b1 ∪ ... ∪ bk)|` for boxes at the target's levels.
///
/// Recurses over dimensions; at each dimension the target's members are
/// grouped by which still-active boxes contain them, and each group recurses
/// with that subset of boxes. Results are memoized per (dimension, box set).
pub fn covered_count(target: &FactoredSignature, boxes: &[FactoredSignature]) -> u128 {
    let clipped: Vec<FactoredSignature> = boxes
        .iter()
        .map(|b| b.intersect(target))
        .filter(|b| !b.is_empty())
        .collect();
    if clipped.is_empty() {
        return 0;
    }
    let active = BitSet::full(clipped.len());
    let mut memo = HashMap::new();
    union_count(0, &active, &clipped, &mut memo)
}

fn union_count(
    d: usize,
    active: &BitSet,
    boxes: &[FactoredSignature],
    memo: &mut HashMap<(usize, BitSet), u128>,
) -> u128 {
    if active.is_empty() {
        return 0;
    }
    let n = boxes[0].sets.len();
    if d == n {
        return 1;
    }
    if let Some(&v) = memo.get(&(d, active.clone())) {
        return v;
    }
    let first = active.iter().next().expect("nonempty");
    let mut members = boxes[first as usize].sets[d].clone();
    for i in active.iter() {
        members.union_with(&boxes[i as usize].sets[d]);
    }
    let mut groups: HashMap<BitSet, u128> = HashMap::new();
    for m in members.iter() {
        let mut mask = BitSet::new(boxes.len());
        for i in active.iter() {
            if boxes[i as usize].sets[d].contains(m) {
                mask.insert(i);
            }
        }
        *groups.entry(mask).or_default() += 1;
    }
    let total = groups
        .iter()
        .map(|(mask, &c)| c * union_count(d + 1, mask, boxes, memo))
        .sum();
    memo.insert((d, active.clone()), total);
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn sig(universes: &[usize], sets: &[Vec<u32>]) -> FactoredSignature {
        FactoredSignature::new(
            vec![0; universes.len()],
            universes
                .iter()
                .zip(sets)
                .map(|(&u, s)| BitSet::from_iter_in(u, s.iter().copied()))
                .collect(),
        )
    }

    #[test]
    fn iter_is_lexicographic_product() {
        let s = sig(&[3, 2], &[vec![0, 2], vec![1]]);
        assert_eq!(s.cardinality(), 2);
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![vec![0, 1], vec![2, 1]]);
        let e = sig(&[3, 2], &[vec![0], vec![]]);
        assert_eq!(e.iter().count(), 0);
        assert!(e.is_subset(&s));
    }

    #[test]
    fn materialize_respects_cap() {
        let s = sig(&[10, 10], &[(0..10).collect(), (0..10).collect()]);
        assert!(matches!(s.materialize(50), Err(Error::SignatureTooLarge(100))));
        assert_eq!(s.materialize(100).unwrap().len(), 100);
    }

    fn arb_box(u: usize, dims: usize) -> impl Strategy<Value = Vec<Vec<u32>>> {
        proptest::collection::vec(
            proptest::collection::btree_set(0..u as u32, 0..=u).prop_map(|s| s.into_iter().collect()),
            dims,
        )
    }

    proptest! {
        #[test]
        fn factored_membership_matches_materialized(b in arb_box(5, 3), probe in proptest::collection::vec(0u32..5, 3)) {
            let s = sig(&[5, 5, 5], &b);
            let mat: HashSet<Vec<u32>> = s.iter().collect();
            prop_assert_eq!(mat.len() as u128, s.cardinality());
            prop_assert_eq!(s.contains(&probe), mat.contains(&probe));
        }

        #[test]
        fn covered_count_matches_enumeration(
            t in arb_box(5, 3),
            bs in proptest::collection::vec(arb_box(5, 3), 0..5),
        ) {
            let target = sig(&[5, 5, 5], &t);
            let boxes: Vec<_> = bs.iter().map(|b| sig(&[5, 5, 5], b)).collect();
            let oracle = target.iter().filter(|c| boxes.iter().any(|b| b.contains(c))).count();
            prop_assert_eq!(covered_count(&target, &boxes), oracle as u128);
        }
    }
}
