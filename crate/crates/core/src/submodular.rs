//! Set functions over per-agent actions.
//!
//! The ground set is the union of every agent's action set. A joint decision
//! is an [`Assignment`] (at most one element per agent), but analysis
//! routines such as [`curvature`] work over arbitrary subsets of a ground
//! list, so [`SetFunction`] evaluates any canonical slice of elements.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the ground-set size for exhaustive structural checks.
pub const DEFAULT_EXHAUSTIVE_CAP: usize = 12;

/// Default cap on the joint action space scanned by [`brute_force_optimum`].
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

const CHECK_TOL: f64 = 1e-9;

/// One action of one agent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroundElement {
    pub agent: usize,
    pub action: usize,
}

impl GroundElement {
    pub fn new(agent: usize, action: usize) -> Self {
        Self { agent, action }
    }
}

impl fmt::Display for GroundElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.agent, self.action)
    }
}

/// Sorts and deduplicates a list of elements into canonical order.
pub fn canonical(mut elements: Vec<GroundElement>) -> Vec<GroundElement> {
    elements.sort_unstable();
    elements.dedup();
    elements
}

pub(crate) fn display_set(elements: &[GroundElement]) -> String {
    let inner: Vec<String> = elements.iter().map(ToString::to_string).collect();
    format!("{{{}}}", inner.join(", "))
}

/// A joint decision: at most one element per agent, kept in ascending agent order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment {
    elements: Vec<GroundElement>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    /// One element per agent, agent `i` playing `actions[i]`.
    pub fn from_actions(actions: &[usize]) -> Self {
        Self {
            elements: actions
                .iter()
                .enumerate()
                .map(|(agent, &action)| GroundElement { agent, action })
                .collect(),
        }
    }

    pub fn from_elements(elements: impl IntoIterator<Item = GroundElement>) -> Result<Self> {
        let mut out = Self::new();
        for e in elements {
            out.insert(e)?;
        }
        Ok(out)
    }

    pub fn insert(&mut self, element: GroundElement) -> Result<()> {
        match self
            .elements
            .binary_search_by_key(&element.agent, |e| e.agent)
        {
            Ok(_) => Err(Error::DuplicateAgent {
                agent: element.agent,
            }),
            Err(pos) => {
                self.elements.insert(pos, element);
                Ok(())
            }
        }
    }

    pub fn with(&self, element: GroundElement) -> Result<Self> {
        let mut out = self.clone();
        out.insert(element)?;
        Ok(out)
    }

    pub fn get(&self, agent: usize) -> Option<GroundElement> {
        self.elements
            .binary_search_by_key(&agent, |e| e.agent)
            .ok()
            .map(|i| self.elements[i])
    }

    pub fn contains_agent(&self, agent: usize) -> bool {
        self.get(agent).is_some()
    }

    /// Keeps only the agents accepted by `keep`.
    pub fn restrict(&self, mut keep: impl FnMut(usize) -> bool) -> Self {
        Self {
            elements: self
                .elements
                .iter()
                .copied()
                .filter(|e| keep(e.agent))
                .collect(),
        }
    }

    pub fn elements(&self) -> &[GroundElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &GroundElement> {
        self.elements.iter()
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&display_set(&self.elements))
    }
}

/// A non-negative set function over ground elements.
///
/// `value` receives elements in canonical order (see [`canonical`]).
pub trait SetFunction {
    fn value(&self, elements: &[GroundElement]) -> Result<f64>;

    /// Declared cap on the function value, used for reward normalization.
    fn upper_bound(&self) -> f64 {
        f64::INFINITY
    }
}

impl<F: SetFunction + ?Sized> SetFunction for &F {
    fn value(&self, elements: &[GroundElement]) -> Result<f64> {
        (**self).value(elements)
    }

    fn upper_bound(&self) -> f64 {
        (**self).upper_bound()
    }
}

fn with_element(set: &[GroundElement], e: GroundElement) -> Vec<GroundElement> {
    let mut v = set.to_vec();
    if let Err(pos) = v.binary_search(&e) {
        v.insert(pos, e);
    }
    v
}

/// `f(A ∪ {a}) − f(A)` for a joint assignment that has no element for `a`'s agent.
pub fn marginal_gain<F: SetFunction + ?Sized>(
    f: &F,
    a: GroundElement,
    assignment: &Assignment,
) -> Result<f64> {
    let extended = assignment.with(a)?;
    Ok(f.value(extended.elements())? - f.value(assignment.elements())?)
}

/// Marginal gain over an arbitrary canonical subset.
pub fn set_marginal<F: SetFunction + ?Sized>(
    f: &F,
    a: GroundElement,
    set: &[GroundElement],
) -> Result<f64> {
    Ok(f.value(&with_element(set, a))? - f.value(set)?)
}

/// Curvature of `f` over `ground`, with the elements that were left out of
/// the minimum because their singleton value is zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Curvature {
    pub kappa: f64,
    pub excluded: Vec<GroundElement>,
}

/// `1 − min_v [f(V) − f(V \ {v})] / f(v)` over the elements of `ground`.
///
/// Zero-valued singletons are skipped. If every singleton is zero the
/// function is identically zero on the ground set and the curvature is 0.
pub fn curvature<F: SetFunction + ?Sized>(f: &F, ground: &[GroundElement]) -> Result<Curvature> {
    let ground = canonical(ground.to_vec());
    let full = f.value(&ground)?;
    let mut min_ratio = f64::INFINITY;
    let mut excluded = Vec::new();
    for (idx, &v) in ground.iter().enumerate() {
        let single = f.value(&[v])?;
        if single <= 0.0 {
            excluded.push(v);
            continue;
        }
        let mut rest = ground.clone();
        rest.remove(idx);
        let ratio = (full - f.value(&rest)?) / single;
        min_ratio = min_ratio.min(ratio);
    }
    if !excluded.is_empty() {
        log::info!(
            "curvature: {} zero-valued singleton(s) excluded: {}",
            excluded.len(),
            display_set(&excluded)
        );
    }
    let kappa = if min_ratio.is_finite() {
        (1.0 - min_ratio).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(Curvature { kappa, excluded })
}

/// Centralization of information for agent `agent`:
/// `f(a_i) − f(a_i | {a_j : j outside the neighborhood, j ≠ i})`.
pub fn coin<F: SetFunction + ?Sized>(
    f: &F,
    agent: usize,
    assignment: &Assignment,
    neighborhood: &[usize],
) -> Result<f64> {
    let own = assignment
        .get(agent)
        .ok_or(Error::MissingAgent { agent })?;
    for &j in neighborhood {
        if !assignment.contains_agent(j) {
            return Err(Error::MissingAgent { agent: j });
        }
    }
    let outside = assignment.restrict(|j| j != agent && !neighborhood.contains(&j));
    let alone = f.value(&[own])?;
    let gain = marginal_gain(f, own, &outside)?;
    Ok(alone - gain)
}

/// All `2^n` values of `f` over subsets of `ground`, indexed by bitmask.
/// Bit `k` selects the `k`-th element of the canonical ground list.
pub struct SubsetTable {
    ground: Vec<GroundElement>,
    values: Vec<f64>,
}

impl SubsetTable {
    pub fn build<F: SetFunction + ?Sized>(f: &F, ground: &[GroundElement], cap: usize) -> Result<Self> {
        let ground = canonical(ground.to_vec());
        if ground.len() > cap {
            return Err(Error::CapExceeded {
                size: ground.len() as u128,
                cap: cap as u128,
            });
        }
        let n = ground.len();
        let mut values = Vec::with_capacity(1 << n);
        let mut buf = Vec::with_capacity(n);
        for mask in 0u32..(1u32 << n) {
            buf.clear();
            buf.extend(
                ground
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| mask & (1 << k) != 0)
                    .map(|(_, e)| *e),
            );
            values.push(f.value(&buf)?);
        }
        Ok(Self { ground, values })
    }

    pub fn len(&self) -> usize {
        self.ground.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ground.is_empty()
    }

    pub fn get(&self, mask: u32) -> f64 {
        self.values[mask as usize]
    }

    fn gain(&self, s: usize, mask: u32) -> f64 {
        self.get(mask | (1 << s)) - self.get(mask)
    }

    pub fn subset(&self, mask: u32) -> Vec<GroundElement> {
        self.ground
            .iter()
            .enumerate()
            .filter(|(k, _)| mask & (1 << k) != 0)
            .map(|(_, e)| *e)
            .collect()
    }
}

/// First violated condition found by a structural check.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    NotNormalized {
        value: f64,
    },
    NotMonotone {
        smaller: Vec<GroundElement>,
        larger: Vec<GroundElement>,
    },
    NotSubmodular {
        a: Vec<GroundElement>,
        b: Vec<GroundElement>,
        s: GroundElement,
    },
    NotSecondOrderSubmodular {
        a: Vec<GroundElement>,
        b: Vec<GroundElement>,
        c: Vec<GroundElement>,
        s: GroundElement,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NotNormalized { value } => write!(f, "f(empty) = {value}"),
            Violation::NotMonotone { smaller, larger } => write!(
                f,
                "f({}) > f({})",
                display_set(smaller),
                display_set(larger)
            ),
            Violation::NotSubmodular { a, b, s } => write!(
                f,
                "f({s} | {}) < f({s} | {})",
                display_set(a),
                display_set(b)
            ),
            Violation::NotSecondOrderSubmodular { a, b, c, s } => write!(
                f,
                "second-order inequality fails for A = {}, B = {}, C = {}, s = {s}",
                display_set(a),
                display_set(b),
                display_set(c)
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StructureReport {
    pub holds: bool,
    pub witness: Option<Violation>,
}

impl StructureReport {
    fn from_witness(witness: Option<Violation>) -> Self {
        Self {
            holds: witness.is_none(),
            witness,
        }
    }
}

fn lt(lhs: f64, rhs: f64) -> bool {
    lhs < rhs - CHECK_TOL * (1.0 + lhs.abs().max(rhs.abs()))
}

/// Exhaustively checks normalization, monotonicity and diminishing returns
/// over every `A ⊆ B ⊆ ground` and every `s ∈ ground`.
pub fn check_monotone_submodular<F: SetFunction + ?Sized>(
    f: &F,
    ground: &[GroundElement],
    cap: usize,
) -> Result<StructureReport> {
    let table = SubsetTable::build(f, ground, cap)?;
    Ok(StructureReport::from_witness(monotone_submodular_witness(&table)))
}

fn monotone_submodular_witness(table: &SubsetTable) -> Option<Violation> {
    let n = table.len();
    let empty = table.get(0);
    if empty.abs() > CHECK_TOL {
        return Some(Violation::NotNormalized { value: empty });
    }
    let full: u32 = (1u32 << n) - 1;
    for b in 0..=full {
        // walk every submask a of b, including b itself and 0
        let mut a = b;
        loop {
            if lt(table.get(b), table.get(a)) {
                return Some(Violation::NotMonotone {
                    smaller: table.subset(a),
                    larger: table.subset(b),
                });
            }
            for s in 0..n {
                if lt(table.gain(s, a), table.gain(s, b)) {
                    return Some(Violation::NotSubmodular {
                        a: table.subset(a),
                        b: table.subset(b),
                        s: table.ground[s],
                    });
                }
            }
            if a == 0 {
                break;
            }
            a = (a - 1) & b;
        }
    }
    None
}

/// Exhaustively checks
/// `f(s|C) − f(s|A∪C) ≥ f(s|B∪C) − f(s|A∪B∪C)` over disjoint `A, B, C` and every `s`.
pub fn check_second_order_submodular<F: SetFunction + ?Sized>(
    f: &F,
    ground: &[GroundElement],
    cap: usize,
) -> Result<StructureReport> {
    let table = SubsetTable::build(f, ground, cap)?;
    Ok(StructureReport::from_witness(second_order_witness(&table)))
}

fn second_order_witness(table: &SubsetTable) -> Option<Violation> {
    let n = table.len();
    let full: u32 = (1u32 << n) - 1;
    for c in 0..=full {
        let free_c = full & !c;
        let mut a = free_c;
        while a != 0 {
            let free_ab = free_c & !a;
            let mut b = free_ab;
            while b != 0 {
                for s in 0..n {
                    let lhs = table.gain(s, c) - table.gain(s, a | c);
                    let rhs = table.gain(s, b | c) - table.gain(s, a | b | c);
                    if lt(lhs, rhs) {
                        return Some(Violation::NotSecondOrderSubmodular {
                            a: table.subset(a),
                            b: table.subset(b),
                            c: table.subset(c),
                            s: table.ground[s],
                        });
                    }
                }
                b = (b - 1) & free_ab;
            }
            a = (a - 1) & free_c;
        }
    }
    None
}

/// Exact maximizer over the joint action space by full enumeration.
///
/// Assignments are scanned in lexicographic order of action indices and a
/// later assignment replaces the incumbent only when strictly better, so
/// ties resolve to the lowest indices.
pub fn brute_force_optimum<F: SetFunction + ?Sized>(
    f: &F,
    action_counts: &[usize],
    cap: u128,
) -> Result<(Assignment, f64)> {
    let size = action_counts
        .iter()
        .try_fold(1u128, |acc, &c| acc.checked_mul(c as u128))
        .unwrap_or(u128::MAX);
    if size > cap {
        return Err(Error::CapExceeded { size, cap });
    }
    if size == 0 {
        return Err(Error::InvalidArgument(
            "every agent needs at least one action".into(),
        ));
    }
    let mut actions = vec![0usize; action_counts.len()];
    let mut best = Assignment::from_actions(&actions);
    let mut best_value = f.value(best.elements())?;
    loop {
        // advance the odometer, last agent fastest
        let mut k = actions.len();
        loop {
            if k == 0 {
                return Ok((best, best_value));
            }
            k -= 1;
            actions[k] += 1;
            if actions[k] < action_counts[k] {
                break;
            }
            actions[k] = 0;
        }
        let candidate = Assignment::from_actions(&actions);
        let value = f.value(candidate.elements())?;
        if value > best_value {
            best = candidate;
            best_value = value;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Cardinality;

    impl SetFunction for Cardinality {
        fn value(&self, elements: &[GroundElement]) -> Result<f64> {
            Ok(elements.len() as f64)
        }
    }

    /// `min(|A|, 1)`
    struct AnyOf;

    impl SetFunction for AnyOf {
        fn value(&self, elements: &[GroundElement]) -> Result<f64> {
            Ok(elements.len().min(1) as f64)
        }
    }

    struct Squared;

    impl SetFunction for Squared {
        fn value(&self, elements: &[GroundElement]) -> Result<f64> {
            Ok((elements.len() * elements.len()) as f64)
        }
    }

    struct Scaled<F>(F, f64);

    impl<F: SetFunction> SetFunction for Scaled<F> {
        fn value(&self, elements: &[GroundElement]) -> Result<f64> {
            Ok(self.1 * self.0.value(elements)?)
        }
    }

    /// Weighted coverage: element `k` covers items `sets[k]`.
    struct Cover {
        ground: Vec<GroundElement>,
        sets: Vec<Vec<usize>>,
        weights: Vec<f64>,
    }

    impl SetFunction for Cover {
        fn value(&self, elements: &[GroundElement]) -> Result<f64> {
            let mut hit = vec![false; self.weights.len()];
            for e in elements {
                let k = self.ground.iter().position(|g| g == e).unwrap();
                for &item in &self.sets[k] {
                    hit[item] = true;
                }
            }
            Ok(hit
                .iter()
                .zip(&self.weights)
                .filter(|(h, _)| **h)
                .map(|(_, w)| w)
                .sum())
        }
    }

    fn chain_cover() -> Cover {
        Cover {
            ground: vec![ge(0, 0), ge(1, 0), ge(2, 0)],
            sets: vec![vec![0, 1], vec![1, 2], vec![3]],
            weights: vec![1.0; 4],
        }
    }

    fn ge(agent: usize, action: usize) -> GroundElement {
        GroundElement::new(agent, action)
    }

    fn ground(n: usize) -> Vec<GroundElement> {
        (0..n).map(|i| ge(i, 0)).collect()
    }

    fn three_cover() -> Cover {
        Cover {
            ground: vec![ge(0, 0), ge(1, 0), ge(2, 0)],
            sets: vec![vec![0, 1, 2], vec![2, 3], vec![3, 4, 5]],
            weights: vec![1.0, 2.0, 1.0, 1.5, 0.5, 1.0],
        }
    }

    #[test]
    fn assignment_rejects_duplicate_agent() {
        let a = Assignment::from_actions(&[1, 2]);
        assert!(matches!(
            a.with(ge(1, 0)),
            Err(Error::DuplicateAgent { agent: 1 })
        ));
        let b = Assignment::from_elements([ge(3, 0), ge(1, 4)]).unwrap();
        assert_eq!(b.elements(), &[ge(1, 4), ge(3, 0)]);
    }

    #[test]
    fn marginal_of_counting_function_is_one() {
        let a = Assignment::from_actions(&[0, 0]);
        assert_eq!(marginal_gain(&Cardinality, ge(2, 0), &a).unwrap(), 1.0);
        assert!(marginal_gain(&Cardinality, ge(0, 1), &a).is_err());
    }

    #[test]
    fn redundant_element_has_zero_gain() {
        let f = Cover {
            ground: vec![ge(0, 0), ge(1, 0)],
            sets: vec![vec![0, 1], vec![1]],
            weights: vec![1.0, 1.0],
        };
        let a = Assignment::from_elements([ge(0, 0)]).unwrap();
        assert_eq!(marginal_gain(&f, ge(1, 0), &a).unwrap(), 0.0);
    }

    #[test]
    fn curvature_of_modular_and_redundant_functions() {
        assert_eq!(curvature(&Cardinality, &ground(4)).unwrap().kappa, 0.0);
        assert_eq!(curvature(&AnyOf, &ground(2)).unwrap().kappa, 1.0);
    }

    #[test]
    fn curvature_of_small_cover_matches_leave_one_out() {
        // f(V) = 7; f(V\0) = 4, f(0) = 4 -> 0.75; f(V\1) = 7 -> 0;
        // f(V\2) = 4.5, f(2) = 3 -> 2.5/3. Min ratio 0 -> kappa 1.
        let f = three_cover();
        let k = curvature(&f, &f.ground).unwrap();
        assert_eq!(k.kappa, 1.0);
        assert!(k.excluded.is_empty());

        // chain {0,1}, {1,2}, {3}: ratios 1/2, 1/2, 1 -> kappa 1/2
        let g = chain_cover();
        assert_eq!(curvature(&g, &g.ground).unwrap().kappa, 0.5);
    }

    #[test]
    fn curvature_skips_zero_singletons() {
        let f = Cover {
            ground: vec![ge(0, 0), ge(1, 0), ge(2, 0)],
            sets: vec![vec![0], vec![1], vec![]],
            weights: vec![1.0, 1.0],
        };
        let k = curvature(&f, &f.ground).unwrap();
        assert_eq!(k.kappa, 0.0);
        assert_eq!(k.excluded, vec![ge(2, 0)]);
    }

    #[test]
    fn coin_with_full_neighborhood_is_zero() {
        let f = three_cover();
        let a = Assignment::from_actions(&[0, 0, 0]);
        assert_eq!(coin(&f, 1, &a, &[0, 2]).unwrap(), 0.0);
    }

    #[test]
    fn coin_of_fully_redundant_action_is_its_value() {
        let f = Cover {
            ground: vec![ge(0, 0), ge(1, 0)],
            sets: vec![vec![0, 1], vec![0, 1]],
            weights: vec![1.0, 2.0],
        };
        let a = Assignment::from_actions(&[0, 0]);
        assert_eq!(coin(&f, 0, &a, &[]).unwrap(), 3.0);
        assert!(matches!(
            coin(&f, 4, &a, &[]),
            Err(Error::MissingAgent { agent: 4 })
        ));
    }

    #[test]
    fn structural_checks_on_simple_functions() {
        assert!(check_monotone_submodular(&Cardinality, &ground(5), 12).unwrap().holds);
        let r = check_monotone_submodular(&Squared, &ground(2), 12).unwrap();
        assert!(!r.holds);
        assert!(matches!(r.witness, Some(Violation::NotSubmodular { .. })));
        assert!(check_second_order_submodular(&Cardinality, &ground(5), 12).unwrap().holds);
        let f = three_cover();
        assert!(check_monotone_submodular(&f, &f.ground, 12).unwrap().holds);
        assert!(check_second_order_submodular(&f, &f.ground, 12).unwrap().holds);
    }

    #[test]
    fn exhaustive_checks_refuse_large_ground_sets() {
        let err = check_monotone_submodular(&Cardinality, &ground(13), 12).unwrap_err();
        assert!(matches!(err, Error::CapExceeded { size: 13, cap: 12 }));
        assert!(check_second_order_submodular(&Cardinality, &ground(13), 12).is_err());
    }

    #[test]
    fn non_normalized_function_is_reported() {
        struct Offset;
        impl SetFunction for Offset {
            fn value(&self, e: &[GroundElement]) -> Result<f64> {
                Ok(1.0 + e.len() as f64)
            }
        }
        let r = check_monotone_submodular(&Offset, &ground(2), 12).unwrap();
        assert_eq!(r.witness, Some(Violation::NotNormalized { value: 1.0 }));
    }

    #[test]
    fn brute_force_single_agent() {
        struct Table;
        impl SetFunction for Table {
            fn value(&self, e: &[GroundElement]) -> Result<f64> {
                Ok(e.iter().map(|g| [1.0, 3.0, 2.0][g.action]).sum())
            }
        }
        let (a, v) = brute_force_optimum(&Table, &[3], DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(a, Assignment::from_actions(&[1]));
        assert_eq!(v, 3.0);
    }

    #[test]
    fn brute_force_ties_pick_lowest_indices() {
        let (a, v) = brute_force_optimum(&AnyOf, &[3, 3], DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(a, Assignment::from_actions(&[0, 0]));
        assert_eq!(v, 1.0);
        assert!(brute_force_optimum(&AnyOf, &[10, 10, 10], 999).is_err());
    }

    #[test]
    fn curvature_is_scale_invariant() {
        let f = chain_cover();
        let k1 = curvature(&f, &f.ground).unwrap().kappa;
        let g = Scaled(chain_cover(), 7.5);
        let k2 = curvature(&g, &f.ground).unwrap().kappa;
        assert!((k1 - k2).abs() < 1e-12);
    }
}
