//! Exhaustive property scans of a rule against its model.

use std::str::FromStr;

use num_rational::Rational64;
use serde::Serialize;

use super::osp::OutcomePrefs;
use super::school::blocking_pair;
use super::{
    feasible_allocations, parse_allocation, parse_auction_outcome, parse_double_auction_outcome,
    rank_of, DomainModel,
};
use crate::error::{input, Error, Result};
use crate::rule::ChoiceRule;
use crate::space::{ProfileIndex, ProfileSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Efficient,
    IndividuallyRational,
    Stable,
    Strategyproof,
}

impl FromStr for Property {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "efficient" => Ok(Property::Efficient),
            "ir" | "individually_rational" => Ok(Property::IndividuallyRational),
            "stable" => Ok(Property::Stable),
            "sp" | "strategyproof" => Ok(Property::Strategyproof),
            _ => input(format!("unknown rule property {s:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PropertyViolation {
    pub profile: ProfileIndex,
    /// The misreport for strategyproofness.
    pub deviation: Option<ProfileIndex>,
    pub agent: Option<usize>,
    pub detail: String,
}

fn violation(
    profile: ProfileIndex,
    agent: Option<usize>,
    detail: String,
) -> Option<PropertyViolation> {
    Some(PropertyViolation {
        profile,
        deviation: None,
        agent,
        detail,
    })
}

/// Scans every profile of `domain` (default: the whole space) and returns
/// the first violation.
pub fn check_rule_property(
    rule: &ChoiceRule,
    model: &DomainModel,
    property: Property,
    domain: Option<&ProfileSet>,
) -> Result<Option<PropertyViolation>> {
    let space = rule.space();
    model.validate(space)?;
    let full = space.full_set();
    let domain = domain.unwrap_or(&full);
    if domain.universe() != space.profile_count() {
        return input("domain is over a different profile space");
    }
    match property {
        Property::Strategyproof => {
            strategyproof(rule, &OutcomePrefs::from_model(rule, model)?, domain)
        }
        Property::Efficient => {
            for k in domain.iter() {
                if let Some(v) = efficient_at(rule, model, k)? {
                    return Ok(Some(v));
                }
            }
            Ok(None)
        }
        Property::IndividuallyRational => {
            for k in domain.iter() {
                if let Some(v) = ir_at(rule, model, k)? {
                    return Ok(Some(v));
                }
            }
            Ok(None)
        }
        Property::Stable => {
            let DomainModel::School { schools, .. } = model else {
                return input(format!(
                    "stability needs a school model, got {}",
                    model.kind()
                ));
            };
            for k in domain.iter() {
                let p = space.profile_of(k);
                let alloc =
                    parse_allocation(rule.outcome_label(rule.outcome(k)), schools, p.len())?;
                if let Some((i, c)) = blocking_pair(model, &p, &alloc)? {
                    return Ok(violation(
                        k,
                        Some(i),
                        format!("agent {} and {} block", i + 1, schools[c]),
                    ));
                }
            }
            Ok(None)
        }
    }
}

/// First profile and unilateral misreport, both in `domain`, that makes
/// an agent strictly better off.
pub fn strategyproof(
    rule: &ChoiceRule,
    prefs: &OutcomePrefs,
    domain: &ProfileSet,
) -> Result<Option<PropertyViolation>> {
    let space = rule.space();
    for k in domain.iter() {
        for i in 0..space.agent_count() {
            let t = space.coordinate(k, i);
            let truthful = prefs.utility(i, t, rule.outcome(k));
            for s in 0..space.alphabet_len(i) {
                let d = space.with_coordinate(k, i, s);
                if s != t && domain.contains(d) && prefs.utility(i, t, rule.outcome(d)) > truthful {
                    return Ok(Some(PropertyViolation {
                        profile: k,
                        deviation: Some(d),
                        agent: Some(i),
                        detail: format!(
                            "agent {} gains by reporting {} instead of {}",
                            i + 1,
                            space.alphabet(i)[s],
                            space.alphabet(i)[t]
                        ),
                    }));
                }
            }
        }
    }
    Ok(None)
}

fn top_sum(mut values: Vec<Rational64>, m: usize) -> Rational64 {
    values.sort_unstable_by(|a, b| b.cmp(a));
    values[..m].iter().copied().sum()
}

fn efficient_at(
    rule: &ChoiceRule,
    model: &DomainModel,
    k: ProfileIndex,
) -> Result<Option<PropertyViolation>> {
    let space = rule.space();
    let p = space.profile_of(k);
    let n = p.len();
    let label = rule.outcome_label(rule.outcome(k));
    match model {
        DomainModel::Auction { values } | DomainModel::DoubleAuction { values, .. } => {
            let (holders, _) = match model {
                DomainModel::Auction { .. } => parse_auction_outcome(label)?,
                _ => parse_double_auction_outcome(label)?,
            };
            let vals: Vec<Rational64> = (0..n).map(|i| values[i][p[i]]).collect();
            let m = match model {
                DomainModel::DoubleAuction { .. } => n / 2,
                _ => holders.len(),
            };
            if holders.is_empty() || holders.len() != m {
                return Ok(violation(
                    k,
                    None,
                    format!("{label} does not allocate the units"),
                ));
            }
            let got: Rational64 = holders.iter().map(|&i| vals[i]).sum();
            if got != top_sum(vals, m) {
                return Ok(violation(
                    k,
                    None,
                    format!("{label} does not maximize total value"),
                ));
            }
            Ok(None)
        }
        DomainModel::Assignment { objects, prefs } | DomainModel::House { objects, prefs, .. } => {
            pareto_at(k, label, objects, prefs, &p, &vec![1; objects.len()])
        }
        DomainModel::School {
            schools,
            capacities,
            prefs,
            ..
        } => pareto_at(k, label, schools, prefs, &p, capacities),
        DomainModel::Outcomes { .. } => {
            input("efficiency is not defined for outcome-ranking models")
        }
    }
}

fn pareto_at(
    k: ProfileIndex,
    label: &str,
    objects: &[String],
    prefs: &[Vec<Vec<usize>>],
    p: &[usize],
    capacities: &[usize],
) -> Result<Option<PropertyViolation>> {
    let alloc = parse_allocation(label, objects, p.len())?;
    let ranks = |a: &[Option<usize>]| -> Vec<usize> {
        (0..p.len())
            .map(|i| rank_of(&prefs[i][p[i]], a[i]))
            .collect()
    };
    let mine = ranks(&alloc);
    for other in feasible_allocations(p.len(), capacities) {
        let r = ranks(&other);
        if r.iter().zip(&mine).all(|(a, b)| a <= b) && r != mine {
            let better = super::allocation_label(objects, &other);
            return Ok(violation(
                k,
                None,
                format!("{better} Pareto-dominates {label}"),
            ));
        }
    }
    Ok(None)
}

fn ir_at(
    rule: &ChoiceRule,
    model: &DomainModel,
    k: ProfileIndex,
) -> Result<Option<PropertyViolation>> {
    let space = rule.space();
    let p = space.profile_of(k);
    let n = p.len();
    let label = rule.outcome_label(rule.outcome(k));
    let zero = Rational64::from_integer(0);
    match model {
        DomainModel::House {
            objects,
            prefs,
            endowment,
        } => {
            let alloc = parse_allocation(label, objects, n)?;
            for i in 0..n {
                if rank_of(&prefs[i][p[i]], alloc[i]) > rank_of(&prefs[i][p[i]], Some(endowment[i]))
                {
                    return Ok(violation(
                        k,
                        Some(i),
                        format!("agent {} prefers their endowment", i + 1),
                    ));
                }
            }
            Ok(None)
        }
        DomainModel::Auction { values } => {
            let (winners, price) = parse_auction_outcome(label)?;
            for &i in &winners {
                if values[i][p[i]] < price {
                    return Ok(violation(
                        k,
                        Some(i),
                        format!("agent {} pays above value", i + 1),
                    ));
                }
            }
            Ok(None)
        }
        DomainModel::DoubleAuction { values, sellers } => {
            let (holders, price) = parse_double_auction_outcome(label)?;
            for i in 0..n {
                let v = values[i][p[i]];
                let holds = holders.contains(&i);
                let ok = match (sellers[i], holds) {
                    (false, true) => v - price >= zero,
                    (false, false) => true,
                    (true, true) => true,
                    (true, false) => price >= v,
                };
                if !ok {
                    return Ok(violation(
                        k,
                        Some(i),
                        format!("agent {} loses by trading", i + 1),
                    ));
                }
            }
            Ok(None)
        }
        _ => input(format!(
            "individual rationality is not defined for {} models",
            model.kind()
        )),
    }
}
