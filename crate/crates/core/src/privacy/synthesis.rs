use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::checks::check_protocol_cp;
use super::inseparability::inseparability_classes;
use crate::error::{Error, Result};
use crate::protocol::{Implementation, Protocol, Query, TreeSpec};
use crate::rule::ChoiceRule;
use crate::space::{ProductSet, TypeSpace};

#[derive(Clone, Debug)]
pub enum Synthesis {
    Protocol(Protocol),
    /// `witness` is the product set at which the greedy construction got
    /// stuck; `minimized` is a locally minimal witness inside it.
    Witness {
        witness: ProductSet,
        minimized: ProductSet,
    },
}

impl Synthesis {
    pub fn is_protocol(&self) -> bool {
        matches!(self, Synthesis::Protocol(_))
    }

    pub fn witness(&self) -> Option<&ProductSet> {
        match self {
            Synthesis::Witness { witness, .. } => Some(witness),
            Synthesis::Protocol(_) => None,
        }
    }
}

pub fn synthesize_or_witness(rule: &ChoiceRule) -> Result<Synthesis> {
    synthesize_on(rule, &ProductSet::full(rule.space()))
}

/// Greedy synthesis of a CP elicitation protocol on the product set `set`.
pub fn synthesize_on(rule: &ChoiceRule, set: &ProductSet) -> Result<Synthesis> {
    let spec = match greedy(rule, set) {
        Ok(spec) => spec,
        Err(witness) => {
            if !witness_verify(rule, &witness) {
                return Err(Error::Internal(
                    "synthesis produced an invalid witness".into(),
                ));
            }
            let minimized = minimize_witness(rule, &witness);
            return Ok(Synthesis::Witness { witness, minimized });
        }
    };
    let space = rule.space();
    let protocol = Protocol::build_on(space, &set.to_profile_set(space), &spec)?;
    if protocol.implements(rule) != Implementation::Implements
        || !check_protocol_cp(&protocol, rule)?.holds()
    {
        return Err(Error::Internal(
            "synthesized protocol is not contextually private".into(),
        ));
    }
    Ok(Synthesis::Protocol(protocol))
}

fn greedy(rule: &ChoiceRule, set: &ProductSet) -> std::result::Result<TreeSpec, ProductSet> {
    if rule.constant_on_product(set).is_some() {
        return Ok(TreeSpec::Leaf);
    }
    let space = rule.space();
    for agent in 0..space.agent_count() {
        let part = inseparability_classes(rule, set, agent);
        if part.classes.len() < 2 {
            continue;
        }
        let class = part.classes[0].clone();
        let rest: Vec<usize> = set
            .factor(agent)
            .iter()
            .copied()
            .filter(|t| !class.contains(t))
            .collect();
        let yes = greedy(rule, &set.with_factor(agent, class.clone()))?;
        let no = greedy(rule, &set.with_factor(agent, rest))?;
        return Ok(TreeSpec::node(
            Query::binary_elicit(space, agent, &class),
            vec![yes, no],
        ));
    }
    Err(set.clone())
}

/// The rule is non-constant on `set` and no agent has two classes there.
pub fn witness_verify(rule: &ChoiceRule, set: &ProductSet) -> bool {
    rule.constant_on_product(set).is_none()
        && (0..rule.space().agent_count())
            .all(|i| inseparability_classes(rule, set, i).is_single_class())
}

/// As [`witness_verify`], validating raw factors first.
pub fn witness_verify_factors(rule: &ChoiceRule, factors: Vec<Vec<usize>>) -> Result<bool> {
    let set = ProductSet::new(rule.space(), factors)?;
    Ok(witness_verify(rule, &set))
}

/// Greedily drops types while the set stays a witness.
pub fn minimize_witness(rule: &ChoiceRule, set: &ProductSet) -> ProductSet {
    let mut current = set.clone();
    loop {
        let mut changed = false;
        for agent in 0..current.factors().len() {
            let mut pos = 0;
            while pos < current.factor(agent).len() && current.factor(agent).len() > 1 {
                let mut f = current.factor(agent).to_vec();
                f.remove(pos);
                let candidate = current.with_factor(agent, f);
                if witness_verify(rule, &candidate) {
                    current = candidate;
                    changed = true;
                } else {
                    pos += 1;
                }
            }
        }
        if !changed {
            return current;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleCaps {
    /// Largest number of product sets enumerated exhaustively.
    pub max_sets: u64,
    /// When the count exceeds `max_sets`: draw this many random sets with the seed.
    pub sample: Option<(u64, u64)>,
}

impl Default for OracleCaps {
    fn default() -> Self {
        OracleCaps {
            max_sets: 1 << 22,
            sample: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleOutcome {
    Found(ProductSet),
    NoneExists,
    NotFoundInSample,
}

/// Brute force over product subsets, with its own pairwise closure so that
/// it shares no code with the union-find path.
pub fn witness_oracle(rule: &ChoiceRule, caps: OracleCaps) -> Result<OracleOutcome> {
    let space = rule.space();
    if (0..space.agent_count()).any(|i| space.alphabet_len(i) > 32) {
        return Err(Error::Resource(
            "oracle alphabets are limited to 32 types".into(),
        ));
    }
    let radices: Vec<u64> = (0..space.agent_count())
        .map(|i| (1u64 << space.alphabet_len(i)) - 1)
        .collect();
    let total = radices
        .iter()
        .try_fold(1u64, |acc, &r| acc.checked_mul(r))
        .unwrap_or(u64::MAX);
    let decode = |mut code: u64| -> Vec<Vec<usize>> {
        let mut factors = vec![vec![]; radices.len()];
        for i in (0..radices.len()).rev() {
            let mask = code % radices[i] + 1;
            code /= radices[i];
            factors[i] = (0..64).filter(|t| mask >> t & 1 == 1).collect();
        }
        factors
    };
    if total <= caps.max_sets {
        let found = (0..total)
            .into_par_iter()
            .map(decode)
            .find_map_first(|f| naive_witness(rule, &f).then_some(f));
        return Ok(match found {
            Some(f) => OracleOutcome::Found(ProductSet::new(space, f)?),
            None => OracleOutcome::NoneExists,
        });
    }
    let Some((seed, draws)) = caps.sample else {
        return Err(Error::Resource(format!(
            "{total} product sets exceed the oracle cap of {}",
            caps.max_sets
        )));
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..draws {
        let f = decode(rng.gen_range(0..total));
        if naive_witness(rule, &f) {
            return Ok(OracleOutcome::Found(ProductSet::new(space, f)?));
        }
    }
    Ok(OracleOutcome::NotFoundInSample)
}

fn members(space: &TypeSpace, factors: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = vec![vec![]];
    for f in factors {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                f.iter().map(move |&t| {
                    let mut p = prefix.clone();
                    p.push(t);
                    p
                })
            })
            .collect();
    }
    debug_assert!(out.iter().all(|p| space.index_of(p).is_ok()));
    out
}

fn naive_witness(rule: &ChoiceRule, factors: &[Vec<usize>]) -> bool {
    let space = rule.space();
    let all = members(space, factors);
    let outcome = |p: &[usize]| rule.outcome(space.index_of(p).expect("valid profile"));
    let first = outcome(&all[0]);
    if all.iter().all(|p| outcome(p) == first) {
        return false;
    }
    for (i, factor) in factors.iter().enumerate() {
        let k = factor.len();
        let mut linked = vec![vec![false; k]; k];
        for p in all.iter().filter(|p| p[i] == factor[0]) {
            for a in 0..k {
                for b in 0..k {
                    let mut pa = p.clone();
                    let mut pb = p.clone();
                    pa[i] = factor[a];
                    pb[i] = factor[b];
                    if outcome(&pa) == outcome(&pb) {
                        linked[a][b] = true;
                    }
                }
            }
        }
        let mut seen = vec![false; k];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(a) = stack.pop() {
            for b in 0..k {
                if linked[a][b] && !seen[b] {
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
        if seen.contains(&false) {
            return false;
        }
    }
    true
}
