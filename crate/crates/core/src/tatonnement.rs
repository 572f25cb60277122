//! Phases of a protocol and the tâtonnement condition: an initial phase
//! whose end nodes reach pairwise disjoint outcome sets, followed by
//! subtrees that are contextually private on their own labels.

use std::collections::{BTreeSet, VecDeque};

use serde::Serialize;

use crate::error::{input, Error, Result};
use crate::privacy::{check_protocol_cp, cp_violations_within, CpViolation};
use crate::protocol::{NodeId, Protocol, Query, QueryClass};
use crate::rule::{ChoiceRule, OutcomeId};

/// `reach[v]` is the set of outcomes of profiles in node `v`'s label.
pub fn outcome_reach(p: &Protocol, rule: &ChoiceRule) -> Vec<BTreeSet<OutcomeId>> {
    let mut reach: Vec<BTreeSet<OutcomeId>> = vec![BTreeSet::new(); p.node_count()];
    // children have larger ids than their parent
    for v in (0..p.node_count()).rev() {
        if p.is_leaf(v) {
            reach[v] = p.label(v).iter().map(|k| rule.outcome(k)).collect();
        } else {
            let merged: BTreeSet<OutcomeId> = p
                .children(v)
                .iter()
                .flat_map(|&c| reach[c].iter().copied())
                .collect();
            reach[v] = merged;
        }
    }
    reach
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Phase {
    pub nodes: BTreeSet<NodeId>,
    /// Nodes of the phase with no descendant in the phase.
    pub end: Vec<NodeId>,
    /// Contains the root.
    pub initial: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PhaseValidation {
    Valid(Phase),
    /// `above ≺ missing ≺ below` with `above` and `below` in the set.
    NotConvex {
        above: NodeId,
        missing: NodeId,
        below: NodeId,
    },
}

pub fn validate_phase(p: &Protocol, nodes: &[NodeId]) -> Result<PhaseValidation> {
    if nodes.is_empty() {
        return input("a phase needs at least one node");
    }
    if let Some(&bad) = nodes.iter().find(|&&v| v >= p.node_count()) {
        return input(format!("node {bad} is not in the protocol"));
    }
    let set: BTreeSet<NodeId> = nodes.iter().copied().collect();
    for &w in &set {
        let mut left_at: Option<NodeId> = None;
        let mut cur = w;
        while let Some(u) = p.node(cur).parent {
            match (set.contains(&u), left_at) {
                (false, None) => left_at = Some(u),
                (true, Some(missing)) => {
                    return Ok(PhaseValidation::NotConvex {
                        above: u,
                        missing,
                        below: w,
                    })
                }
                _ => {}
            }
            cur = u;
        }
    }
    let end = set
        .iter()
        .copied()
        .filter(|&v| !p.children(v).iter().any(|c| set.contains(c)))
        .collect();
    Ok(PhaseValidation::Valid(Phase {
        initial: set.contains(&p.root()),
        nodes: set,
        end,
    }))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EndOverlap {
    pub first: NodeId,
    pub second: NodeId,
    pub outcome: OutcomeId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TatonnementVerdict {
    pub phase: Phase,
    /// Two end nodes reaching a common outcome.
    pub end_overlap: Option<EndOverlap>,
    /// A CP violation inside the subtree of an end node.
    pub subtree_violation: Option<(NodeId, CpViolation)>,
}

impl TatonnementVerdict {
    pub fn holds(&self) -> bool {
        self.end_overlap.is_none() && self.subtree_violation.is_none()
    }
}

/// Checks the tâtonnement condition for the initial phase `nodes`. Every
/// non-end node of the phase must have all its children in the phase, so
/// that each profile passes through exactly one end node.
pub fn check_tatonnement(
    p: &Protocol,
    rule: &ChoiceRule,
    nodes: &[NodeId],
) -> Result<TatonnementVerdict> {
    p.ensure_implements(rule)?;
    let phase = match validate_phase(p, nodes)? {
        PhaseValidation::Valid(phase) => phase,
        PhaseValidation::NotConvex {
            above,
            missing,
            below,
        } => {
            return input(format!(
                "phase is not convex: {} is between {} and {} but not in the phase",
                p.node(missing).path,
                p.node(above).path,
                p.node(below).path
            ))
        }
    };
    if !phase.initial {
        return input("the phase does not contain the root");
    }
    for &v in &phase.nodes {
        let ch = p.children(v);
        let inside = ch.iter().filter(|c| phase.nodes.contains(c)).count();
        if inside != 0 && inside != ch.len() {
            return input(format!(
                "phase node {} has children both inside and outside the phase",
                p.node(v).path
            ));
        }
    }

    let reach = outcome_reach(p, rule);
    let mut end_overlap = None;
    'outer: for (a, &u) in phase.end.iter().enumerate() {
        for &w in &phase.end[a + 1..] {
            if let Some(&x) = reach[u].intersection(&reach[w]).next() {
                end_overlap = Some(EndOverlap {
                    first: u,
                    second: w,
                    outcome: x,
                });
                break 'outer;
            }
        }
    }
    let mut subtree_violation = None;
    for &v in &phase.end {
        let verdict = cp_violations_within(p, rule, p.label(v))?;
        if let Some(first) = verdict.violations.into_iter().next() {
            subtree_violation = Some((v, first));
            break;
        }
    }
    let verdict = TatonnementVerdict {
        phase,
        end_overlap,
        subtree_violation,
    };
    if verdict.holds() && !check_protocol_cp(p, rule)?.holds() {
        return Err(Error::Internal(
            "tâtonnement holds but the protocol is not contextually private".into(),
        ));
    }
    Ok(verdict)
}

fn pairwise_disjoint(reach: &[BTreeSet<OutcomeId>], nodes: &[NodeId]) -> bool {
    (0..nodes.len())
        .all(|a| (a + 1..nodes.len()).all(|b| reach[nodes[a]].is_disjoint(&reach[nodes[b]])))
}

fn is_counting(p: &Protocol, v: NodeId) -> bool {
    match &p.node(v).query {
        Some(Query::Count { .. }) | Some(Query::MultiCount { .. }) => true,
        Some(Query::Extensional { .. }) => matches!(
            p.classify(v),
            QueryClass::Count { .. }
                | QueryClass::MultiCount { .. }
                | QueryClass::MultiCountCapReached
        ),
        _ => false,
    }
}

/// Grows an initial phase from the root: the root is expanded when its
/// children reach disjoint outcome sets, then counting queries are expanded
/// under the same condition. Elicitation queries end the phase.
pub fn phase_discovery(p: &Protocol, rule: &ChoiceRule) -> Result<Option<Phase>> {
    p.ensure_implements(rule)?;
    let root = p.root();
    let reach = outcome_reach(p, rule);
    let mut nodes = BTreeSet::from([root]);
    if !p.is_leaf(root) {
        if !pairwise_disjoint(&reach, p.children(root)) {
            return Ok(None);
        }
        let mut queue: VecDeque<NodeId> = p.children(root).iter().copied().collect();
        nodes.extend(p.children(root));
        while let Some(v) = queue.pop_front() {
            if !p.is_leaf(v) && is_counting(p, v) && pairwise_disjoint(&reach, p.children(v)) {
                nodes.extend(p.children(v));
                queue.extend(p.children(v));
            }
        }
    }
    let list: Vec<NodeId> = nodes.into_iter().collect();
    match validate_phase(p, &list)? {
        PhaseValidation::Valid(phase) => Ok(Some(phase)),
        PhaseValidation::NotConvex { .. } => {
            Err(Error::Internal("discovered phase is not convex".into()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::TreeSpec;
    use crate::space::TypeSpace;

    fn three_level() -> (Protocol, ChoiceRule) {
        let s = TypeSpace::uniform(2, &["A", "B"]).unwrap();
        let e = |agent| Query::Elicit {
            agent,
            cells: vec![vec![0], vec![1]],
        };
        let inner = || TreeSpec::node(e(1), vec![TreeSpec::Leaf, TreeSpec::Leaf]);
        let p = Protocol::build(&s, &TreeSpec::node(e(0), vec![inner(), inner()])).unwrap();
        let rule = ChoiceRule::from_fn(s, |p| format!("{}{}", p[0], p[1]));
        (p, rule)
    }

    #[test]
    fn phase_validation_examples() {
        let (p, _) = three_level();
        match validate_phase(&p, &[0]).unwrap() {
            PhaseValidation::Valid(ph) => {
                assert!(ph.initial);
                assert_eq!(ph.end, vec![0]);
            }
            other => panic!("{other:?}"),
        }
        let all: Vec<_> = (0..p.node_count()).collect();
        assert!(matches!(
            validate_phase(&p, &all).unwrap(),
            PhaseValidation::Valid(_)
        ));
        let grandchild = p.children(p.children(0)[0])[0];
        assert!(matches!(
            validate_phase(&p, &[0, grandchild]).unwrap(),
            PhaseValidation::NotConvex { .. }
        ));
        assert!(validate_phase(&p, &[99]).is_err());
    }

    #[test]
    fn reach_is_union_of_children() {
        let (p, rule) = three_level();
        let reach = outcome_reach(&p, &rule);
        for v in 0..p.node_count() {
            if !p.is_leaf(v) {
                let u: BTreeSet<_> = p
                    .children(v)
                    .iter()
                    .flat_map(|&c| reach[c].clone())
                    .collect();
                assert_eq!(u, reach[v]);
            } else {
                assert_eq!(reach[v].len(), 1);
            }
        }
    }

    #[test]
    fn open_phase_is_rejected() {
        let (p, rule) = three_level();
        let child = p.children(0)[0];
        assert!(check_tatonnement(&p, &rule, &[0, child]).is_err());
        let v = check_tatonnement(&p, &rule, &[0]).unwrap();
        assert!(v.holds());
    }

    #[test]
    fn single_leaf_phase_is_root() {
        let s = TypeSpace::uniform(2, &["A", "B"]).unwrap();
        let p = Protocol::build(&s, &TreeSpec::Leaf).unwrap();
        let rule = ChoiceRule::from_fn(s, |_| "x".into());
        let ph = phase_discovery(&p, &rule).unwrap().unwrap();
        assert_eq!(ph.nodes, BTreeSet::from([0]));
    }
}
