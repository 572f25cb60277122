//! Single- and multi-unit auctions with rank payments, and their protocols.

use num_rational::Rational64;

use super::{agent_list, fmt_value, grow, splits, BuiltProtocol};
use crate::error::{input, Error, Result};
use crate::protocol::{Protocol, Query};
use crate::rule::ChoiceRule;
use crate::space::{ProfileSet, TypeSpace};

/// Agents sorted by value, highest first, ties to the lower index.
pub(crate) fn ranking(values: &[Vec<Rational64>], profile: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..profile.len()).collect();
    order.sort_by(|&a, &b| {
        values[b][profile[b]]
            .cmp(&values[a][profile[a]])
            .then(a.cmp(&b))
    });
    order
}

/// The `k`-th highest value of a profile, `k` from 1.
pub(crate) fn order_stat(values: &[Vec<Rational64>], profile: &[usize], k: usize) -> Rational64 {
    let mut v: Vec<Rational64> = profile
        .iter()
        .enumerate()
        .map(|(i, &t)| values[i][t])
        .collect();
    v.sort_unstable_by(|a, b| b.cmp(a));
    v[k - 1]
}

pub(crate) fn auction_label(winners: &[usize], price: Rational64) -> String {
    format!("winners={};price={}", agent_list(winners), fmt_value(price))
}

/// The `units` highest bidders win and each pays the `k`-th highest value.
/// A winner's component is `(1,price)`, a loser's `(0,0)`.
pub fn rank_payment(
    space: &TypeSpace,
    values: &[Vec<Rational64>],
    k: usize,
    units: usize,
) -> Result<ChoiceRule> {
    let n = space.agent_count();
    if k == 0 || k > n {
        return input(format!("payment rank {k} needs 1 <= k <= n = {n}"));
    }
    if units == 0 || units > n {
        return input(format!("{units} units cannot be sold to {n} agents"));
    }
    ChoiceRule::from_fn_with_components(space.clone(), |p| {
        let mut winners = ranking(values, p)[..units].to_vec();
        winners.sort_unstable();
        let price = order_stat(values, p, k);
        let comps = (0..n)
            .map(|i| {
                if winners.contains(&i) {
                    format!("(1,{})", fmt_value(price))
                } else {
                    "(0,0)".to_string()
                }
            })
            .collect();
        (auction_label(&winners, price), comps)
    })
}

fn distinct_values(values: &[Vec<Rational64>]) -> Vec<Rational64> {
    let mut all: Vec<Rational64> = values.iter().flatten().copied().collect();
    all.sort_unstable();
    all.dedup();
    all
}

fn types_where(values: &[Rational64], pred: impl Fn(Rational64) -> bool) -> Vec<usize> {
    (0..values.len()).filter(|&t| pred(values[t])).collect()
}

fn elicit_split(space: &TypeSpace, agent: usize, yes: Vec<usize>) -> Query {
    Query::binary_elicit(space, agent, &yes)
}

/// Asks, for values in decreasing order and agents in index order, whether
/// the agent's value equals the current one.
pub fn descending_first_price(
    rule: &ChoiceRule,
    values: &[Vec<Rational64>],
) -> Result<BuiltProtocol> {
    let space = rule.space();
    let order = distinct_values(values);
    let next = |label: &ProfileSet| -> Result<Query> {
        for &v in order.iter().rev() {
            for (i, vals) in values.iter().enumerate() {
                let q = elicit_split(space, i, types_where(vals, |x| x == v));
                if splits(space, &q, label) {
                    return Ok(q);
                }
            }
        }
        Err(Error::Internal(
            "descending clock ran out of questions".into(),
        ))
    };
    let spec = grow(rule, &space.full_set(), &next)?;
    Ok(BuiltProtocol {
        protocol: Protocol::build(space, &spec)?,
        phase: None,
    })
}

/// Asks, for values in increasing order and agents in index order, whether
/// the agent's value exceeds the current one.
pub fn ascending_elicitation(
    rule: &ChoiceRule,
    values: &[Vec<Rational64>],
) -> Result<BuiltProtocol> {
    let space = rule.space();
    let order = distinct_values(values);
    let next = |label: &ProfileSet| -> Result<Query> {
        for &v in &order {
            for (i, vals) in values.iter().enumerate() {
                let q = elicit_split(space, i, types_where(vals, |x| x > v));
                if splits(space, &q, label) {
                    return Ok(q);
                }
            }
        }
        Err(Error::Internal(
            "ascending clock ran out of questions".into(),
        ))
    };
    let spec = grow(rule, &space.full_set(), &next)?;
    Ok(BuiltProtocol {
        protocol: Protocol::build(space, &spec)?,
        phase: None,
    })
}

/// Ascending count protocol on a common alphabet: at each value `t` ask
/// whether exactly `k` agents value above `t`; at the first yes, elicit
/// who does. Returns the protocol on `domain` and its counting phase.
pub fn count_ascending(
    rule: &ChoiceRule,
    values: &[Rational64],
    k: usize,
    domain: &ProfileSet,
) -> Result<BuiltProtocol> {
    let space = rule.space();
    if !space.is_common() {
        return input("count protocols require a common type alphabet");
    }
    let n = space.agent_count();
    if k == 0 || k >= n {
        return input(format!("count target {k} needs 1 <= k < n = {n}"));
    }
    let mut order = values.to_vec();
    order.sort_unstable();
    order.dedup();
    let count_query = |t: Rational64| Query::Count {
        subset: types_where(values, |x| x > t),
        cells: vec![vec![k], (0..=n).filter(|&c| c != k).collect()],
    };
    let yes_set = |t: Rational64| count_query(t).cell_sets(space).swap_remove(0);
    let next = |label: &ProfileSet| -> Result<Query> {
        let first = order
            .iter()
            .copied()
            .find(|&t| !yes_set(t).is_disjoint(label));
        let Some(t) = first else {
            return Err(Error::Internal(
                "a profile never reaches the target count".into(),
            ));
        };
        if !label.is_subset(&yes_set(t)) {
            return Ok(count_query(t));
        }
        let above = types_where(values, |x| x > t);
        (0..n)
            .map(|i| elicit_split(space, i, above.clone()))
            .find(|q| splits(space, q, label))
            .ok_or_else(|| Error::Internal("elicitation phase ran out of questions".into()))
    };
    let spec = grow(rule, domain, &next)?;
    let protocol = Protocol::build_on(space, domain, &spec)?;
    let mut phase = vec![];
    for id in 0..protocol.node_count() {
        if let Some(Query::Count { .. }) = protocol.node(id).query {
            phase.push(id);
            phase.extend_from_slice(protocol.children(id));
        }
    }
    phase.sort_unstable();
    phase.dedup();
    // every count answer was forced on `domain`
    let phase = (!phase.is_empty()).then_some(phase);
    Ok(BuiltProtocol { protocol, phase })
}
