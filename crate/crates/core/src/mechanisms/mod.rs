//! Built-in rules and protocols, economic side data, and property checks.
//!
//! Outcome labels are canonical strings. Allocation domains label an
//! outcome by the object of each agent (`"a,b,-"`), optionally followed by
//! `|` and extra data. Auctions use `"winners=2;price=3"` and double
//! auctions `"price=1;holders=1,2"`, agents numbered from 1.

pub mod auction;
pub mod builtin;
pub mod double_auction;
pub mod family;
pub mod matching;
pub mod osp;
pub mod properties;
pub mod school;

use crate::error::{input, Error, Result};
use crate::protocol::{NodeId, Protocol, Query, TreeSpec};
use crate::rule::ChoiceRule;
use crate::space::{ProfileSet, TypeSpace};
use num_rational::Rational64;

pub use builtin::{builtin_protocol, builtin_rule, BUILTIN_PROTOCOLS, BUILTIN_RULES};
pub use osp::{check_protocol_osp, OspFailure, OutcomePrefs};
pub use properties::{check_rule_property, Property, PropertyViolation};

/// Economic side data. Per-agent, per-type tables are indexed `[agent][type]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DomainModel {
    Auction {
        values: Vec<Vec<Rational64>>,
    },
    DoubleAuction {
        values: Vec<Vec<Rational64>>,
        sellers: Vec<bool>,
    },
    /// `prefs[agent][type]` lists object indices best first; unlisted
    /// objects and no object rank below all listed ones.
    Assignment {
        objects: Vec<String>,
        prefs: Vec<Vec<Vec<usize>>>,
    },
    House {
        objects: Vec<String>,
        prefs: Vec<Vec<Vec<usize>>>,
        endowment: Vec<usize>,
    },
    School {
        schools: Vec<String>,
        capacities: Vec<usize>,
        prefs: Vec<Vec<Vec<usize>>>,
        /// `scores[agent][type][school]`.
        scores: Vec<Vec<Vec<Rational64>>>,
    },
    /// `ranks[agent][type]` lists outcome labels best first.
    Outcomes {
        ranks: Vec<Vec<Vec<String>>>,
    },
}

impl DomainModel {
    pub fn kind(&self) -> &'static str {
        match self {
            DomainModel::Auction { .. } => "auction",
            DomainModel::DoubleAuction { .. } => "double-auction",
            DomainModel::Assignment { .. } => "assignment",
            DomainModel::House { .. } => "house",
            DomainModel::School { .. } => "school",
            DomainModel::Outcomes { .. } => "outcomes",
        }
    }

    /// Checks table shapes against `space` and the model invariants.
    pub fn validate(&self, space: &TypeSpace) -> Result<()> {
        let n = space.agent_count();
        let shape = |rows: usize, what: &str| -> Result<()> {
            if rows != n {
                return input(format!(
                    "model {what} given for {rows} agents, space has {n}"
                ));
            }
            Ok(())
        };
        let per_type = |lens: Vec<usize>, what: &str| -> Result<()> {
            for (i, &l) in lens.iter().enumerate() {
                if l != space.alphabet_len(i) {
                    return input(format!(
                        "model {what} for agent {} has {l} entries, agent has {} types",
                        i + 1,
                        space.alphabet_len(i)
                    ));
                }
            }
            Ok(())
        };
        let check_prefs = |prefs: &Vec<Vec<Vec<usize>>>, m: usize| -> Result<()> {
            shape(prefs.len(), "preferences")?;
            per_type(prefs.iter().map(Vec::len).collect(), "preferences")?;
            for list in prefs.iter().flatten() {
                if list.iter().any(|&o| o >= m) {
                    return input("preference lists an unknown object");
                }
                let mut sorted = list.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted.len() != list.len() {
                    return input("preference lists an object twice");
                }
            }
            Ok(())
        };
        match self {
            DomainModel::Auction { values } => {
                shape(values.len(), "values")?;
                per_type(values.iter().map(Vec::len).collect(), "values")
            }
            DomainModel::DoubleAuction { values, sellers } => {
                shape(values.len(), "values")?;
                per_type(values.iter().map(Vec::len).collect(), "values")?;
                shape(sellers.len(), "endowments")?;
                if !n.is_multiple_of(2) || sellers.iter().filter(|&&s| s).count() * 2 != n {
                    return input(
                        "a double auction needs an even number of agents, half of them sellers",
                    );
                }
                Ok(())
            }
            DomainModel::Assignment { objects, prefs } => check_prefs(prefs, objects.len()),
            DomainModel::House {
                objects,
                prefs,
                endowment,
            } => {
                check_prefs(prefs, objects.len())?;
                shape(endowment.len(), "endowments")?;
                let mut e = endowment.clone();
                e.sort_unstable();
                e.dedup();
                if e.len() != endowment.len() || endowment.iter().any(|&o| o >= objects.len()) {
                    return input("endowments must be distinct known objects");
                }
                Ok(())
            }
            DomainModel::School {
                schools,
                capacities,
                prefs,
                scores,
            } => {
                check_prefs(prefs, schools.len())?;
                if capacities.len() != schools.len() || capacities.contains(&0) {
                    return input("every school needs a positive capacity");
                }
                shape(scores.len(), "scores")?;
                per_type(scores.iter().map(Vec::len).collect(), "scores")?;
                if scores.iter().flatten().any(|s| s.len() != schools.len()) {
                    return input("each type needs one score per school");
                }
                Ok(())
            }
            DomainModel::Outcomes { ranks } => {
                shape(ranks.len(), "outcome rankings")?;
                per_type(ranks.iter().map(Vec::len).collect(), "outcome rankings")
            }
        }
    }

    /// Seats equal students.
    pub fn no_oversupply(&self, space: &TypeSpace) -> Option<bool> {
        match self {
            DomainModel::School { capacities, .. } => {
                Some(capacities.iter().sum::<usize>() == space.agent_count())
            }
            _ => None,
        }
    }
}

/// A rule with its optional model and restricted domain.
#[derive(Clone, Debug)]
pub struct Instance {
    pub rule: ChoiceRule,
    pub model: Option<DomainModel>,
    pub domain: Option<ProfileSet>,
}

impl Instance {
    pub fn new(rule: ChoiceRule) -> Self {
        Instance {
            rule,
            model: None,
            domain: None,
        }
    }

    pub fn domain(&self) -> ProfileSet {
        self.domain
            .clone()
            .unwrap_or_else(|| self.rule.space().full_set())
    }
}

/// A built protocol and, for counting protocols, its price-finding phase.
#[derive(Clone, Debug)]
pub struct BuiltProtocol {
    pub protocol: Protocol,
    pub phase: Option<Vec<NodeId>>,
}

/// Numeric value of a type label: the label itself, else its trailing
/// digits, else its position.
pub fn value_of_label(label: &str, position: usize) -> Rational64 {
    if let Ok(v) = label.parse::<Rational64>() {
        return v;
    }
    let digits: String = label
        .chars()
        .rev()
        .take_while(|c| c.is_ascii_digit())
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    digits
        .parse::<i64>()
        .map(Rational64::from_integer)
        .unwrap_or_else(|_| Rational64::from_integer(position as i64))
}

/// Values of every type of every agent, by [`value_of_label`].
pub fn label_values(space: &TypeSpace) -> Vec<Vec<Rational64>> {
    (0..space.agent_count())
        .map(|i| {
            space
                .alphabet(i)
                .iter()
                .enumerate()
                .map(|(t, l)| value_of_label(l, t))
                .collect()
        })
        .collect()
}

pub(crate) fn fmt_value(v: Rational64) -> String {
    v.to_string()
}

pub(crate) fn agent_list(agents: &[usize]) -> String {
    agents
        .iter()
        .map(|a| (a + 1).to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_agent_list(s: &str) -> Result<Vec<usize>> {
    if s.is_empty() {
        return Ok(vec![]);
    }
    s.split(',')
        .map(|x| match x.trim().parse::<usize>() {
            Ok(a) if a >= 1 => Ok(a - 1),
            _ => input(format!("bad agent number {x:?}")),
        })
        .collect()
}

fn field<'a>(label: &'a str, key: &str) -> Result<&'a str> {
    label
        .split(';')
        .find_map(|part| part.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .map_or_else(
            || input(format!("outcome {label:?} has no {key} field")),
            Ok,
        )
}

fn parse_price(s: &str) -> Result<Rational64> {
    s.parse::<Rational64>()
        .map_or_else(|_| input(format!("bad price {s:?}")), Ok)
}

/// `(winners, price)` of an auction outcome label.
pub fn parse_auction_outcome(label: &str) -> Result<(Vec<usize>, Rational64)> {
    Ok((
        parse_agent_list(field(label, "winners")?)?,
        parse_price(field(label, "price")?)?,
    ))
}

/// `(holders, price)` of a double-auction outcome label.
pub fn parse_double_auction_outcome(label: &str) -> Result<(Vec<usize>, Rational64)> {
    Ok((
        parse_agent_list(field(label, "holders")?)?,
        parse_price(field(label, "price")?)?,
    ))
}

/// Object index per agent of an allocation label; `-` is no object.
pub fn parse_allocation(label: &str, objects: &[String], n: usize) -> Result<Vec<Option<usize>>> {
    let body = label.split('|').next().unwrap_or("");
    let parts: Vec<&str> = body.split(',').collect();
    if parts.len() != n {
        return input(format!("allocation {label:?} does not name {n} objects"));
    }
    parts
        .iter()
        .map(|p| {
            if *p == "-" {
                Ok(None)
            } else {
                objects
                    .iter()
                    .position(|o| o == p)
                    .map(Some)
                    .map_or_else(|| input(format!("unknown object {p:?} in {label:?}")), Ok)
            }
        })
        .collect()
}

pub(crate) fn allocation_label(objects: &[String], alloc: &[Option<usize>]) -> String {
    alloc
        .iter()
        .map(|o| o.map_or("-".to_string(), |o| objects[o].clone()))
        .collect::<Vec<_>>()
        .join(",")
}

/// All allocations giving each agent at most one object, object `c` to at
/// most `capacities[c]` agents.
pub fn feasible_allocations(n: usize, capacities: &[usize]) -> Vec<Vec<Option<usize>>> {
    let mut out = vec![];
    let mut current = vec![None; n];
    let mut used = vec![0usize; capacities.len()];
    fn rec(
        i: usize,
        current: &mut Vec<Option<usize>>,
        used: &mut Vec<usize>,
        capacities: &[usize],
        out: &mut Vec<Vec<Option<usize>>>,
    ) {
        if i == current.len() {
            out.push(current.clone());
            return;
        }
        current[i] = None;
        rec(i + 1, current, used, capacities, out);
        for c in 0..capacities.len() {
            if used[c] < capacities[c] {
                used[c] += 1;
                current[i] = Some(c);
                rec(i + 1, current, used, capacities, out);
                used[c] -= 1;
            }
        }
        current[i] = None;
    }
    rec(0, &mut current, &mut used, capacities, &mut out);
    out
}

/// Position of `object` in a best-first list; no object or unlisted ones
/// rank after every listed object.
pub(crate) fn rank_of(pref: &[usize], object: Option<usize>) -> usize {
    object
        .and_then(|o| pref.iter().position(|&p| p == o))
        .unwrap_or(pref.len())
}

/// Builds the tree that asks `next(label)` at every label on which the rule
/// is not constant. Each asked query must split its label.
pub(crate) fn grow(
    rule: &ChoiceRule,
    label: &ProfileSet,
    next: &dyn Fn(&ProfileSet) -> Result<Query>,
) -> Result<TreeSpec> {
    if rule.constant_on(label).is_some() {
        return Ok(TreeSpec::Leaf);
    }
    let query = next(label)?;
    let mut children = vec![];
    let mut nonempty = 0;
    for cell in query.cell_sets(rule.space()) {
        let sub = cell.intersection(label);
        if sub.is_empty() {
            children.push(TreeSpec::Leaf);
        } else {
            nonempty += 1;
            children.push(grow(rule, &sub, next)?);
        }
    }
    if nonempty < 2 {
        return Err(Error::Internal(format!(
            "builder asked a query that does not split its label: {}",
            query.describe(rule.space())
        )));
    }
    Ok(TreeSpec::node(query, children))
}

/// Whether `query` splits `label` into at least two nonempty cells.
pub(crate) fn splits(space: &TypeSpace, query: &Query, label: &ProfileSet) -> bool {
    query
        .cell_sets(space)
        .iter()
        .filter(|c| !c.is_disjoint(label))
        .count()
        >= 2
}

/// Profiles whose k-th and (k+1)-th highest values differ.
pub fn restrict_distinct_order_stat(
    space: &TypeSpace,
    values: &[Vec<Rational64>],
    k: usize,
) -> Result<ProfileSet> {
    let n = space.agent_count();
    if k == 0 || k >= n {
        return input(format!("order statistic {k} needs 1 <= k < n = {n}"));
    }
    let set = ProfileSet::from_indices(
        space.profile_count(),
        (0..space.profile_count()).filter(|&p| {
            let mut v: Vec<Rational64> =
                (0..n).map(|i| values[i][space.coordinate(p, i)]).collect();
            v.sort_unstable_by(|a, b| b.cmp(a));
            v[k - 1] != v[k]
        }),
    );
    if set.is_empty() {
        return input("the restriction leaves no profiles");
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_values() {
        assert_eq!(value_of_label("3", 0), Rational64::from_integer(3));
        assert_eq!(value_of_label("3/2", 0), Rational64::new(3, 2));
        assert_eq!(value_of_label("θ7", 0), Rational64::from_integer(7));
        assert_eq!(value_of_label("low", 4), Rational64::from_integer(4));
    }

    #[test]
    fn outcome_parsing() {
        let (w, p) = parse_auction_outcome("winners=2,3;price=5").unwrap();
        assert_eq!((w, p), (vec![1, 2], Rational64::from_integer(5)));
        let (h, p) = parse_double_auction_outcome("price=1;holders=1,4").unwrap();
        assert_eq!((h, p), (vec![0, 3], Rational64::from_integer(1)));
        let objs = vec!["a".to_string(), "b".to_string()];
        assert_eq!(
            parse_allocation("b,-|cutoffs=1,2", &objs, 2).unwrap(),
            vec![Some(1), None]
        );
        assert!(parse_allocation("c,a", &objs, 2).is_err());
    }

    #[test]
    fn feasible_allocation_count() {
        // 2 agents, 2 unit objects: 3*3 - 2 (both on a, both on b) = 7
        assert_eq!(feasible_allocations(2, &[1, 1]).len(), 7);
        assert_eq!(feasible_allocations(2, &[2]).len(), 4);
    }
}
