//! Seeded random rules for property suites.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::rule::ChoiceRule;
use crate::space::{ProductSet, TypeSpace};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RandomKind {
    /// Uniform table over a few outcomes.
    Table,
    /// Outcome is the tuple of independently drawn per-agent components.
    Bundle,
    /// Constant on the leaves of a random elicitation tree.
    Tree,
}

#[derive(Clone, Copy, Debug)]
pub struct RandomShape {
    pub max_agents: usize,
    pub max_types: usize,
    pub max_outcomes: usize,
}

impl Default for RandomShape {
    fn default() -> Self {
        RandomShape {
            max_agents: 3,
            max_types: 3,
            max_outcomes: 4,
        }
    }
}

fn random_space(rng: &mut ChaCha8Rng, shape: RandomShape, common: bool) -> TypeSpace {
    let n = rng.gen_range(1..=shape.max_agents.max(1));
    let m0 = rng.gen_range(2..=shape.max_types.max(2));
    let alphabets = (0..n)
        .map(|_| {
            let m = if common {
                m0
            } else {
                rng.gen_range(2..=shape.max_types.max(2))
            };
            (0..m).map(|t| format!("t{t}")).collect()
        })
        .collect();
    TypeSpace::new(alphabets).expect("small space")
}

fn tree_fill(
    rng: &mut ChaCha8Rng,
    space: &TypeSpace,
    set: &ProductSet,
    labels: &mut [String],
    outcomes: usize,
) {
    let splittable: Vec<usize> = (0..space.agent_count())
        .filter(|&i| set.factor(i).len() >= 2)
        .collect();
    if splittable.is_empty() || rng.gen_bool(0.25) {
        let x = format!("o{}", rng.gen_range(0..outcomes));
        for k in set.profiles(space) {
            labels[k] = x.clone();
        }
        return;
    }
    let agent = *splittable.choose(rng).expect("nonempty");
    let mut factor = set.factor(agent).to_vec();
    factor.shuffle(rng);
    let cut = rng.gen_range(1..factor.len());
    let (left, right) = factor.split_at(cut);
    for part in [left, right] {
        tree_fill(
            rng,
            space,
            &set.with_factor(agent, part.to_vec()),
            labels,
            outcomes,
        );
    }
}

/// A rule of the given kind drawn from `seed`.
pub fn random_rule(seed: u64, kind: RandomKind, shape: RandomShape) -> ChoiceRule {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let common = rng.gen_bool(0.5);
    let space = random_space(&mut rng, shape, common);
    let outcomes = rng.gen_range(2..=shape.max_outcomes.max(2));
    match kind {
        RandomKind::Table => {
            let table: Vec<usize> = (0..space.profile_count())
                .map(|_| rng.gen_range(0..outcomes))
                .collect();
            ChoiceRule::from_fn(space.clone(), |p| {
                format!("o{}", table[space.index_of(p).expect("in range")])
            })
        }
        RandomKind::Bundle => {
            let n = space.agent_count();
            let comps: Vec<Vec<usize>> = (0..n)
                .map(|_| {
                    (0..space.profile_count())
                        .map(|_| rng.gen_range(0..2))
                        .collect()
                })
                .collect();
            ChoiceRule::from_fn_with_components(space.clone(), |p| {
                let k = space.index_of(p).expect("in range");
                let parts: Vec<String> = (0..n).map(|i| format!("c{}", comps[i][k])).collect();
                (parts.join("/"), parts)
            })
            .expect("bundles determine components")
        }
        RandomKind::Tree => {
            let mut labels = vec![String::new(); space.profile_count()];
            tree_fill(
                &mut rng,
                &space,
                &ProductSet::full(&space),
                &mut labels,
                outcomes,
            );
            ChoiceRule::from_fn(space.clone(), |p| {
                labels[space.index_of(p).expect("in range")].clone()
            })
        }
    }
}

/// `count` rules cycling through the kinds, seeds derived from `seed`.
pub fn random_corpus(seed: u64, count: usize, shape: RandomShape) -> Vec<ChoiceRule> {
    let kinds = [RandomKind::Table, RandomKind::Bundle, RandomKind::Tree];
    (0..count)
        .map(|j| {
            random_rule(
                seed.wrapping_mul(1_000_003).wrapping_add(j as u64),
                kinds[j % 3],
                shape,
            )
        })
        .collect()
}
