use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{input, Error, Result};
use crate::protocol::{NodeId, Protocol};
use crate::rule::{ChoiceRule, OutcomeId};
use crate::space::{ProductSet, ProfileIndex, ProfileSet};

/// Two profiles differing only in `agent`'s type, with equal outcome (or
/// equal own component, for the individual check), reaching distinct leaves.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CpViolation {
    pub agent: usize,
    pub type_a: usize,
    pub type_b: usize,
    pub profile_a: ProfileIndex,
    pub profile_b: ProfileIndex,
    pub leaf_a: NodeId,
    pub leaf_b: NodeId,
    /// The shared outcome id, or the shared component id for the individual check.
    pub outcome: OutcomeId,
}

/// First violation per violating agent, in agent order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CpVerdict {
    pub violations: Vec<CpViolation>,
}

impl CpVerdict {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn first(&self) -> Option<&CpViolation> {
        self.violations.first()
    }

    pub fn violates_agent(&self, agent: usize) -> bool {
        self.violations.iter().any(|v| v.agent == agent)
    }
}

fn unilateral_scan(
    p: &Protocol,
    set: &ProfileSet,
    key: impl Fn(usize, ProfileIndex) -> OutcomeId + Sync,
) -> CpVerdict {
    let space = p.space();
    let violations = (0..space.agent_count())
        .into_par_iter()
        .filter_map(|agent| {
            for a in set.iter() {
                let ta = space.coordinate(a, agent);
                for tb in ta + 1..space.alphabet_len(agent) {
                    let b = space.with_coordinate(a, agent, tb);
                    if !set.contains(b) {
                        continue;
                    }
                    let (la, lb) = (p.leaf_of(a)?, p.leaf_of(b)?);
                    if la != lb && key(agent, a) == key(agent, b) {
                        return Some(CpViolation {
                            agent,
                            type_a: ta,
                            type_b: tb,
                            profile_a: a,
                            profile_b: b,
                            leaf_a: la,
                            leaf_b: lb,
                            outcome: key(agent, a),
                        });
                    }
                }
            }
            None
        })
        .collect();
    CpVerdict { violations }
}

pub fn check_protocol_cp(p: &Protocol, rule: &ChoiceRule) -> Result<CpVerdict> {
    p.ensure_implements(rule)?;
    Ok(unilateral_scan(p, p.domain(), |_, k| rule.outcome(k)))
}

/// CP violations among unilateral pairs with both profiles inside `set`.
pub fn cp_violations_within(
    p: &Protocol,
    rule: &ChoiceRule,
    set: &ProfileSet,
) -> Result<CpVerdict> {
    p.ensure_implements(rule)?;
    Ok(unilateral_scan(p, &set.intersection(p.domain()), |_, k| {
        rule.outcome(k)
    }))
}

pub fn check_protocol_icp(p: &Protocol, rule: &ChoiceRule) -> Result<CpVerdict> {
    if !rule.has_components() {
        return input("individual contextual privacy needs per-agent outcome components");
    }
    p.ensure_implements(rule)?;
    Ok(unilateral_scan(p, p.domain(), |agent, k| {
        rule.component(agent, k).expect("components present")
    }))
}

/// Two profiles with equal outcome that reach distinct leaves, split at `node`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GcpViolation {
    pub node: NodeId,
    pub profile_a: ProfileIndex,
    pub profile_b: ProfileIndex,
    pub outcome: OutcomeId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GcpVerdict {
    pub violation: Option<GcpViolation>,
}

impl GcpVerdict {
    pub fn holds(&self) -> bool {
        self.violation.is_none()
    }
}

/// Group contextual privacy, decided twice: over profile pairs, and by
/// disjointness of the children's reachable outcome sets at every query.
pub fn check_protocol_gcp(p: &Protocol, rule: &ChoiceRule) -> Result<GcpVerdict> {
    p.ensure_implements(rule)?;
    let mut first_at: HashMap<OutcomeId, (NodeId, ProfileIndex)> = HashMap::new();
    let mut by_pairs = None;
    for k in p.domain().iter() {
        let leaf = p.leaf_of(k).expect("domain profile has a leaf");
        let x = rule.outcome(k);
        match first_at.get(&x) {
            None => {
                first_at.insert(x, (leaf, k));
            }
            Some(&(l, a)) if l != leaf => {
                by_pairs = Some(GcpViolation {
                    node: p.earliest_departure(a, k)?,
                    profile_a: a,
                    profile_b: k,
                    outcome: x,
                });
                break;
            }
            Some(_) => {}
        }
    }

    let reach = outcome_sets(p, rule);
    let by_reach = (0..p.node_count()).find(|&v| {
        let ch = p.children(v);
        (0..ch.len()).any(|a| (a + 1..ch.len()).any(|b| !reach[ch[a]].is_disjoint(&reach[ch[b]])))
    });
    if by_pairs.is_some() != by_reach.is_some() {
        return Err(Error::Internal(format!(
            "group privacy by pairs ({}) disagrees with reachable outcome sets ({})",
            by_pairs.is_some(),
            by_reach.is_some()
        )));
    }
    Ok(GcpVerdict {
        violation: by_pairs,
    })
}

fn outcome_sets(p: &Protocol, rule: &ChoiceRule) -> Vec<BTreeSet<OutcomeId>> {
    p.nodes()
        .iter()
        .map(|n| n.label.iter().map(|k| rule.outcome(k)).collect())
        .collect()
}

/// A unilateral square for agents `agents` on which three corners share an
/// outcome and the fourth differs. Corners are listed as
/// `(θ_i, θ_j), (θ_i, θ_j'), (θ_i', θ_j), (θ_i', θ_j')`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CornersViolation {
    pub agents: (usize, usize),
    pub corners: [ProfileIndex; 4],
    pub shared: OutcomeId,
    pub odd: ProfileIndex,
}

pub fn corners_scan(rule: &ChoiceRule) -> Result<Option<CornersViolation>> {
    corners_scan_on(rule, &ProductSet::full(rule.space()))
}

pub fn corners_scan_on(rule: &ChoiceRule, set: &ProductSet) -> Result<Option<CornersViolation>> {
    let space = rule.space();
    let n = space.agent_count();
    if n < 2 {
        return input("the corners scan needs at least two agents");
    }
    for i in 0..n {
        for j in i + 1..n {
            for p00 in set.profiles(space) {
                let ti = space.coordinate(p00, i);
                let tj = space.coordinate(p00, j);
                for &ti2 in set.factor(i).iter().filter(|&&t| t > ti) {
                    for &tj2 in set.factor(j).iter().filter(|&&t| t > tj) {
                        let p10 = space.with_coordinate(p00, i, ti2);
                        let p01 = space.with_coordinate(p00, j, tj2);
                        let p11 = space.with_coordinate(p10, j, tj2);
                        let corners = [p00, p01, p10, p11];
                        let xs = corners.map(|k| rule.outcome(k));
                        for odd in 0..4 {
                            let others: Vec<OutcomeId> =
                                (0..4).filter(|&c| c != odd).map(|c| xs[c]).collect();
                            if others.iter().all(|&x| x == others[0]) && xs[odd] != others[0] {
                                return Ok(Some(CornersViolation {
                                    agents: (i, j),
                                    corners,
                                    shared: others[0],
                                    odd: corners[odd],
                                }));
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(None)
}

/// Agent `agent` changes type, keeps its own component, and agent `other`'s
/// component changes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BossyViolation {
    pub agent: usize,
    pub type_a: usize,
    pub type_b: usize,
    pub profile_a: ProfileIndex,
    pub profile_b: ProfileIndex,
    pub other: usize,
}

pub fn check_nonbossy(rule: &ChoiceRule) -> Result<Option<BossyViolation>> {
    if !rule.has_components() {
        return input("non-bossiness needs per-agent outcome components");
    }
    let space = rule.space();
    let n = space.agent_count();
    let comp = |i: usize, k: ProfileIndex| rule.component(i, k).expect("components present");
    for agent in 0..n {
        for a in 0..space.profile_count() {
            let ta = space.coordinate(a, agent);
            for tb in ta + 1..space.alphabet_len(agent) {
                let b = space.with_coordinate(a, agent, tb);
                if comp(agent, a) != comp(agent, b) {
                    continue;
                }
                if let Some(other) = (0..n).find(|&j| j != agent && comp(j, a) != comp(j, b)) {
                    return Ok(Some(BossyViolation {
                        agent,
                        type_a: ta,
                        type_b: tb,
                        profile_a: a,
                        profile_b: b,
                        other,
                    }));
                }
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

    fn space2() -> TypeSpace {
        TypeSpace::uniform(2, &["A", "B"]).unwrap()
    }

    fn reveal_all(s: &TypeSpace) -> Protocol {
        let e = |agent| Query::Elicit {
            agent,
            cells: vec![vec![0], vec![1]],
        };
        let inner = || TreeSpec::node(e(1), vec![TreeSpec::Leaf, TreeSpec::Leaf]);
        Protocol::build(s, &TreeSpec::node(e(0), vec![inner(), inner()])).unwrap()
    }

    #[test]
    fn constant_rule_root_only_is_private() {
        let s = space2();
        let rule = ChoiceRule::from_fn(s.clone(), |_| "x".into());
        let p = Protocol::build(&s, &TreeSpec::Leaf).unwrap();
        assert!(check_protocol_cp(&p, &rule).unwrap().holds());
        assert!(check_protocol_gcp(&p, &rule).unwrap().holds());
        assert_eq!(corners_scan(&rule).unwrap(), None);
    }

    #[test]
    fn non_implementing_protocol_is_a_precondition_error() {
        let s = space2();
        let rule = ChoiceRule::from_fn(s.clone(), |p| p[0].to_string());
        let p = Protocol::build(&s, &TreeSpec::Leaf).unwrap();
        assert!(matches!(
            check_protocol_cp(&p, &rule),
            Err(Error::NotImplemented { .. })
        ));
    }

    #[test]
    fn injective_rule_is_group_private() {
        let s = space2();
        let rule = ChoiceRule::from_fn(s.clone(), |p| format!("{}{}", p[0], p[1]));
        let p = reveal_all(&s);
        assert!(check_protocol_gcp(&p, &rule).unwrap().holds());
        assert!(check_protocol_cp(&p, &rule).unwrap().holds());
    }

    #[test]
    fn bossy_rule() {
        // agent 1 always gets "a"; agent 1's report flips agent 2's object
        let s = space2();
        let rule = ChoiceRule::from_fn_with_components(s.clone(), |p| {
            let other = if p[0] == 0 { "b" } else { "c" };
            (format!("a,{other}"), vec!["a".into(), other.into()])
        })
        .unwrap();
        let v = check_nonbossy(&rule).unwrap().unwrap();
        assert_eq!((v.agent, v.other), (0, 1));
        // the agent-1 query is CP for the bundle but not for agent 1's own object
        let p = Protocol::build(
            &s,
            &TreeSpec::node(
                Query::binary_elicit(&s, 0, &[0]),
                vec![TreeSpec::Leaf, TreeSpec::Leaf],
            ),
        )
        .unwrap();
        assert!(check_protocol_cp(&p, &rule).unwrap().holds());
        let icp = check_protocol_icp(&p, &rule).unwrap();
        assert!(icp.violates_agent(0));
    }

    #[test]
    fn missing_components_is_an_input_error() {
        let s = space2();
        let rule = ChoiceRule::from_fn(s.clone(), |_| "x".into());
        let p = Protocol::build(&s, &TreeSpec::Leaf).unwrap();
        assert!(matches!(
            check_protocol_icp(&p, &rule),
            Err(Error::Input(_))
        ));
        assert!(matches!(check_nonbossy(&rule), Err(Error::Input(_))));
    }

    #[test]
    fn corners_needs_two_agents() {
        let s = TypeSpace::uniform(1, &["A", "B"]).unwrap();
        let rule = ChoiceRule::from_fn(s, |_| "x".into());
        assert!(corners_scan(&rule).is_err());
    }
}
