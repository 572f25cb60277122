use serde::Serialize;

use crate::disjoint::DisjointSets;
use crate::error::{input, Result};
use crate::rule::{ChoiceRule, OutcomeId};
use crate::space::{product_factorization, ProductSet, ProfileSet};

/// Equivalence classes of agent `agent`'s types on a product set, under the
/// transitive closure of "equal outcome for some fixed opponent profile".
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InseparabilityPartition {
    pub agent: usize,
    pub base: ProductSet,
    /// Sorted classes, ordered by their smallest type.
    pub classes: Vec<Vec<usize>>,
}

impl InseparabilityPartition {
    pub fn class_of(&self, t: usize) -> Option<usize> {
        self.classes
            .iter()
            .position(|c| c.binary_search(&t).is_ok())
    }

    pub fn is_single_class(&self) -> bool {
        self.classes.len() == 1
    }
}

pub fn inseparability_classes(
    rule: &ChoiceRule,
    set: &ProductSet,
    agent: usize,
) -> InseparabilityPartition {
    let space = rule.space();
    let factor = set.factor(agent);
    let stride = space.stride(agent);
    let mut sets = DisjointSets::new(factor.len());
    let mut fiber: Vec<(OutcomeId, usize)> = Vec::with_capacity(factor.len());
    for base in set.bases_without(space, agent) {
        fiber.clear();
        fiber.extend(
            factor
                .iter()
                .enumerate()
                .map(|(pos, &t)| (rule.outcome(base + t * stride), pos)),
        );
        fiber.sort_unstable();
        for w in fiber.windows(2) {
            if w[0].0 == w[1].0 {
                sets.union(w[0].1, w[1].1);
            }
        }
    }
    let mut classes: Vec<Vec<usize>> = vec![];
    let mut root_class: Vec<Option<usize>> = vec![None; factor.len()];
    for (pos, &t) in factor.iter().enumerate() {
        let r = sets.find(pos);
        match root_class[r] {
            Some(c) => classes[c].push(t),
            None => {
                root_class[r] = Some(classes.len());
                classes.push(vec![t]);
            }
        }
    }
    InseparabilityPartition {
        agent,
        base: set.clone(),
        classes,
    }
}

/// As [`inseparability_classes`], for a profile set that must be a product.
pub fn inseparability_classes_of_set(
    rule: &ChoiceRule,
    set: &ProfileSet,
    agent: usize,
) -> Result<InseparabilityPartition> {
    if agent >= rule.space().agent_count() {
        return input(format!("no agent {}", agent + 1));
    }
    match product_factorization(rule.space(), set)? {
        Some(product) => Ok(inseparability_classes(rule, &product, agent)),
        None => input("inseparability needs a product set"),
    }
}

/// Some opponent profile in `set` gives `a` and `b` the same outcome.
pub fn directly_inseparable(
    rule: &ChoiceRule,
    set: &ProductSet,
    agent: usize,
    a: usize,
    b: usize,
) -> bool {
    let space = rule.space();
    let stride = space.stride(agent);
    set.bases_without(space, agent)
        .any(|base| rule.outcome(base + a * stride) == rule.outcome(base + b * stride))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::TypeSpace;
    use proptest::prelude::*;

    #[test]
    fn injective_rule_has_singleton_classes() {
        let s = TypeSpace::uniform(2, &["a", "b", "c"]).unwrap();
        let rule = ChoiceRule::from_fn(s.clone(), |p| format!("{}{}", p[0], p[1]));
        for agent in 0..2 {
            let part = inseparability_classes(&rule, &ProductSet::full(&s), agent);
            assert_eq!(part.classes, vec![vec![0], vec![1], vec![2]]);
        }
    }

    #[test]
    fn non_product_set_is_rejected() {
        let s = TypeSpace::uniform(2, &["a", "b"]).unwrap();
        let rule = ChoiceRule::from_fn(s, |_| "x".into());
        let diag = ProfileSet::from_indices(4, [0, 3]);
        assert!(inseparability_classes_of_set(&rule, &diag, 0).is_err());
    }

    fn rule_from(bits: &[u8], sizes: &[usize]) -> ChoiceRule {
        let s = TypeSpace::new(
            sizes
                .iter()
                .map(|&k| (0..k).map(|t| t.to_string()).collect())
                .collect(),
        )
        .unwrap();
        ChoiceRule::from_fn(s, |p| {
            let k: usize = p.iter().fold(0, |acc, &t| acc * 7 + t);
            (bits[k % bits.len()] % 3).to_string()
        })
    }

    proptest! {
        #[test]
        fn classes_are_closure_of_direct_edges(bits in proptest::collection::vec(any::<u8>(), 1..40), a in 1usize..4, b in 1usize..4, c in 1usize..3) {
            let rule = rule_from(&bits, &[a, b, c]);
            let full = ProductSet::full(rule.space());
            for agent in 0..3 {
                let part = inseparability_classes(&rule, &full, agent);
                let flat: usize = part.classes.iter().map(Vec::len).sum();
                prop_assert_eq!(flat, full.factor(agent).len());
                let k = full.factor(agent).len();
                // naive closure by repeated relaxation
                let mut reach = vec![vec![false; k]; k];
                for x in 0..k { for y in 0..k {
                    reach[x][y] = x == y || directly_inseparable(&rule, &full, agent, x, y);
                }}
                for m in 0..k { for x in 0..k { for y in 0..k {
                    if reach[x][m] && reach[m][y] { reach[x][y] = true; }
                }}}
                for x in 0..k { for y in 0..k {
                    prop_assert_eq!(reach[x][y], part.class_of(x) == part.class_of(y));
                }}
            }
        }

        #[test]
        fn shrinking_the_set_refines_classes(bits in proptest::collection::vec(any::<u8>(), 1..40), drop in 0usize..3) {
            let rule = rule_from(&bits, &[3, 3, 2]);
            let full = ProductSet::full(rule.space());
            let other = (drop + 1) % 3;
            let mut f = full.factor(other).to_vec();
            if f.len() > 1 { f.remove(0); }
            let small = full.with_factor(other, f);
            for agent in 0..3 {
                let big = inseparability_classes(&rule, &full, agent);
                let sub = inseparability_classes(&rule, &small, agent);
                for class in &sub.classes {
                    let first = big.class_of(class[0]);
                    prop_assert!(class.iter().all(|&t| big.class_of(t) == first));
                }
            }
        }
    }
}
