//! Cardinal outcome preferences and obvious strategyproofness of
//! elicitation protocols.

use num_rational::Rational64;
use serde::Serialize;

use super::{
    parse_allocation, parse_auction_outcome, parse_double_auction_outcome, rank_of, DomainModel,
};
use crate::error::{input, Error, Result};
use crate::protocol::{NodeId, Protocol, QueryClass};
use crate::rule::{ChoiceRule, OutcomeId};
use crate::space::ProfileSet;

/// `utility[agent][type][outcome]`; higher is better.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutcomePrefs {
    utility: Vec<Vec<Vec<Rational64>>>,
}

impl OutcomePrefs {
    pub fn new(rule: &ChoiceRule, utility: Vec<Vec<Vec<Rational64>>>) -> Result<Self> {
        let space = rule.space();
        if utility.len() != space.agent_count()
            || utility.iter().enumerate().any(|(i, u)| {
                u.len() != space.alphabet_len(i)
                    || u.iter().any(|row| row.len() != rule.outcome_count())
            })
        {
            return input("utility table does not match the rule");
        }
        Ok(OutcomePrefs { utility })
    }

    /// Derives utilities from the model's reading of the outcome labels.
    pub fn from_model(rule: &ChoiceRule, model: &DomainModel) -> Result<Self> {
        let space = rule.space();
        model.validate(space)?;
        let n = space.agent_count();
        let labels = rule.outcome_labels();
        let int = |x: usize| Rational64::from_integer(x as i64);
        let mut utility = vec![];
        for i in 0..n {
            let mut per_type = vec![];
            for t in 0..space.alphabet_len(i) {
                let mut row = vec![];
                for label in labels {
                    let u = match model {
                        DomainModel::Auction { values } => {
                            let (winners, price) = parse_auction_outcome(label)?;
                            if winners.contains(&i) {
                                values[i][t] - price
                            } else {
                                Rational64::from_integer(0)
                            }
                        }
                        DomainModel::DoubleAuction { values, sellers } => {
                            let (holders, price) = parse_double_auction_outcome(label)?;
                            match (sellers[i], holders.contains(&i)) {
                                (false, true) => values[i][t] - price,
                                (false, false) => Rational64::from_integer(0),
                                (true, true) => values[i][t],
                                (true, false) => price,
                            }
                        }
                        DomainModel::Assignment { objects, prefs }
                        | DomainModel::House { objects, prefs, .. }
                        | DomainModel::School {
                            schools: objects,
                            prefs,
                            ..
                        } => {
                            let alloc = parse_allocation(label, objects, n)?;
                            -int(rank_of(&prefs[i][t], alloc[i]))
                        }
                        DomainModel::Outcomes { ranks } => {
                            match ranks[i][t].iter().position(|r| r == label) {
                                Some(r) => -int(r),
                                None => {
                                    return input(format!(
                                "outcome {label:?} is missing from the ranking of agent {} type {}",
                                i + 1,
                                space.alphabet(i)[t]
                            ))
                                }
                            }
                        }
                    };
                    row.push(u);
                }
                per_type.push(row);
            }
            utility.push(per_type);
        }
        Ok(OutcomePrefs { utility })
    }

    pub fn utility(&self, agent: usize, true_type: usize, outcome: OutcomeId) -> Rational64 {
        self.utility[agent][true_type][outcome as usize]
    }
}

/// A type of `agent` for which some deviation at a node may do strictly
/// better than the worst truthful continuation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OspGap {
    pub agent: usize,
    pub true_type: usize,
    /// Child positions.
    pub truthful_child: usize,
    pub deviation_child: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OspFailure {
    pub node: NodeId,
    pub agent: usize,
    pub true_type: usize,
    pub truthful_child: NodeId,
    pub deviation_child: NodeId,
}

/// Checks the obvious-dominance inequality at a node querying `agent`
/// whose children have labels `children`.
pub fn osp_failure_at(
    rule: &ChoiceRule,
    prefs: &OutcomePrefs,
    agent: usize,
    children: &[ProfileSet],
) -> Option<OspGap> {
    let space = rule.space();
    let m = space.alphabet_len(agent);
    for (c, child) in children.iter().enumerate() {
        let mut worst: Vec<Option<Rational64>> = vec![None; m];
        for k in child.iter() {
            let t = space.coordinate(k, agent);
            let u = prefs.utility(agent, t, rule.outcome(k));
            if worst[t].is_none_or(|w| u < w) {
                worst[t] = Some(u);
            }
        }
        for (t, w) in worst.iter().enumerate() {
            let Some(w) = *w else { continue };
            for (d, other) in children.iter().enumerate() {
                if d != c
                    && other
                        .iter()
                        .any(|k| prefs.utility(agent, t, rule.outcome(k)) > w)
                {
                    return Some(OspGap {
                        agent,
                        true_type: t,
                        truthful_child: c,
                        deviation_child: d,
                    });
                }
            }
        }
    }
    None
}

/// First node, in node order, where truthful play is not obviously
/// dominant. Every internal node must be an elicitation.
pub fn check_protocol_osp(
    p: &Protocol,
    rule: &ChoiceRule,
    prefs: &OutcomePrefs,
) -> Result<Option<OspFailure>> {
    p.ensure_implements(rule)?;
    for id in 0..p.node_count() {
        match p.classify(id) {
            QueryClass::Terminal => {}
            QueryClass::Elicit { agent } => {
                let kids = p.children(id);
                let labels: Vec<ProfileSet> = kids.iter().map(|&c| p.label(c).clone()).collect();
                if let Some(g) = osp_failure_at(rule, prefs, agent, &labels) {
                    return Ok(Some(OspFailure {
                        node: id,
                        agent: g.agent,
                        true_type: g.true_type,
                        truthful_child: kids[g.truthful_child],
                        deviation_child: kids[g.deviation_child],
                    }));
                }
            }
            _ => {
                return Err(Error::Unsupported(format!(
                    "obvious strategyproofness is defined for elicitation protocols; node {} is not one",
                    p.node(id).path
                )))
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{Query, TreeSpec};
    use crate::space::TypeSpace;

    fn ascending_clock() -> (ChoiceRule, OutcomePrefs) {
        // one bidder, posted price 1: buys iff value >= 1
        let space = TypeSpace::uniform(1, &["0", "1", "2"]).unwrap();
        let rule = ChoiceRule::from_fn(space.clone(), |p| {
            if p[0] >= 1 {
                "winners=1;price=1".into()
            } else {
                "winners=;price=0".into()
            }
        });
        let values = vec![vec![0.into(), 1.into(), 2.into()]];
        let prefs = OutcomePrefs::from_model(&rule, &DomainModel::Auction { values }).unwrap();
        (rule, prefs)
    }

    #[test]
    fn posted_price_is_obviously_strategyproof() {
        let (rule, prefs) = ascending_clock();
        let spec = TreeSpec::node(
            Query::Elicit {
                agent: 0,
                cells: vec![vec![0], vec![1, 2]],
            },
            vec![TreeSpec::Leaf, TreeSpec::Leaf],
        );
        let p = Protocol::build(rule.space(), &spec).unwrap();
        assert_eq!(check_protocol_osp(&p, &rule, &prefs).unwrap(), None);
    }

    #[test]
    fn misassigned_cell_fails() {
        // value 2 sent to the no-sale branch: a deviation earns 1
        let space = TypeSpace::uniform(1, &["0", "1", "2"]).unwrap();
        let rule = ChoiceRule::from_fn(space.clone(), |p| {
            if p[0] == 1 {
                "winners=1;price=1".into()
            } else {
                "winners=;price=0".into()
            }
        });
        let values = vec![vec![0.into(), 1.into(), 2.into()]];
        let prefs = OutcomePrefs::from_model(&rule, &DomainModel::Auction { values }).unwrap();
        let spec = TreeSpec::node(
            Query::Elicit {
                agent: 0,
                cells: vec![vec![0, 2], vec![1]],
            },
            vec![TreeSpec::Leaf, TreeSpec::Leaf],
        );
        let p = Protocol::build(rule.space(), &spec).unwrap();
        let f = check_protocol_osp(&p, &rule, &prefs).unwrap().unwrap();
        assert_eq!((f.agent, f.true_type), (0, 2));
    }
}
