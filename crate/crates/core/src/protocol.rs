//! Protocol trees: construction from query descriptors, validation, query
//! classification, execution and the implements relation.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use crate::error::{input, Error, Result};
use crate::rule::{ChoiceRule, OutcomeId};
use crate::space::{ProfileIndex, ProfileSet, TypeSpace};

pub type NodeId = usize;

/// A query descriptor. Cells are indexed in the order given; child `k` of a
/// node holds the profiles of the node label that fall in cell `k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Query {
    /// Cells partition agent `agent`'s alphabet.
    Elicit {
        agent: usize,
        cells: Vec<Vec<usize>>,
    },
    /// Cells partition `0..=n`, the number of agents whose type is in `subset`.
    Count {
        subset: Vec<usize>,
        cells: Vec<Vec<usize>>,
    },
    /// Cells partition `{0..=n}^l`, the vector of counts over `subsets`.
    MultiCount {
        subsets: Vec<Vec<usize>>,
        cells: Vec<Vec<Vec<usize>>>,
    },
    /// Explicit child profile sets.
    Extensional { cells: Vec<ProfileSet> },
}

/// Number of agents whose type lies in `mask`.
#[inline]
pub(crate) fn count_in(space: &TypeSpace, mask: &[bool], profile: ProfileIndex) -> usize {
    (0..space.agent_count())
        .filter(|&i| mask[space.coordinate(profile, i)])
        .count()
}

fn type_mask(space: &TypeSpace, subset: &[usize]) -> Vec<bool> {
    let mut mask = vec![false; space.alphabet_len(0)];
    for &t in subset {
        mask[t] = true;
    }
    mask
}

fn braces<T: fmt::Display>(items: impl IntoIterator<Item = T>) -> String {
    let parts: Vec<String> = items.into_iter().map(|x| x.to_string()).collect();
    format!("{{{}}}", parts.join(","))
}

impl Query {
    /// Binary elicitation: is agent `agent`'s type in `yes`?
    pub fn binary_elicit(space: &TypeSpace, agent: usize, yes: &[usize]) -> Query {
        let no = (0..space.alphabet_len(agent))
            .filter(|t| !yes.contains(t))
            .collect();
        Query::Elicit {
            agent,
            cells: vec![yes.to_vec(), no],
        }
    }

    pub fn cell_count(&self) -> usize {
        match self {
            Query::Elicit { cells, .. } | Query::Count { cells, .. } => cells.len(),
            Query::MultiCount { cells, .. } => cells.len(),
            Query::Extensional { cells } => cells.len(),
        }
    }

    /// Structural checks: indices in range, common alphabet for counts.
    pub fn check(&self, space: &TypeSpace) -> Result<()> {
        let n = space.agent_count();
        let check_subset = |subset: &[usize]| -> Result<()> {
            if !space.is_common() {
                return input("count queries require a common type alphabet");
            }
            match subset.iter().find(|&&t| t >= space.alphabet_len(0)) {
                Some(t) => input(format!("count subset type index {t} out of range")),
                None => Ok(()),
            }
        };
        match self {
            Query::Elicit { agent, cells } => {
                if *agent >= n {
                    return input(format!(
                        "elicitation of agent {} in a {n}-agent space",
                        agent + 1
                    ));
                }
                for cell in cells {
                    if let Some(t) = cell.iter().find(|&&t| t >= space.alphabet_len(*agent)) {
                        return input(format!(
                            "type index {t} out of range for agent {}",
                            agent + 1
                        ));
                    }
                }
            }
            Query::Count { subset, cells } => {
                check_subset(subset)?;
                if let Some(c) = cells.iter().flatten().find(|&&c| c > n) {
                    return input(format!("count value {c} exceeds agent count {n}"));
                }
            }
            Query::MultiCount { subsets, cells } => {
                if subsets.is_empty() {
                    return input("multi-count query needs at least one subset");
                }
                for s in subsets {
                    check_subset(s)?;
                }
                for v in cells.iter().flatten() {
                    if v.len() != subsets.len() {
                        return input(format!(
                            "count vector of length {} for {} subsets",
                            v.len(),
                            subsets.len()
                        ));
                    }
                    if let Some(c) = v.iter().find(|&&c| c > n) {
                        return input(format!("count value {c} exceeds agent count {n}"));
                    }
                }
            }
            Query::Extensional { cells } => {
                if cells.iter().any(|c| c.universe() != space.profile_count()) {
                    return input("extensional cell over a different profile space");
                }
            }
        }
        Ok(())
    }

    /// Profiles of the whole space falling in each cell.
    pub fn cell_sets(&self, space: &TypeSpace) -> Vec<ProfileSet> {
        let total = space.profile_count();
        match self {
            Query::Elicit { agent, cells } => cells
                .iter()
                .map(|cell| {
                    ProfileSet::from_indices(
                        total,
                        (0..total).filter(|&k| cell.contains(&space.coordinate(k, *agent))),
                    )
                })
                .collect(),
            Query::Count { subset, cells } => {
                let mask = type_mask(space, subset);
                let counts: Vec<usize> = (0..total).map(|k| count_in(space, &mask, k)).collect();
                cells
                    .iter()
                    .map(|cell| {
                        ProfileSet::from_indices(
                            total,
                            (0..total).filter(|&k| cell.contains(&counts[k])),
                        )
                    })
                    .collect()
            }
            Query::MultiCount { subsets, cells } => {
                let masks: Vec<Vec<bool>> = subsets.iter().map(|s| type_mask(space, s)).collect();
                let vectors: Vec<Vec<usize>> = (0..total)
                    .map(|k| masks.iter().map(|m| count_in(space, m, k)).collect())
                    .collect();
                cells
                    .iter()
                    .map(|cell| {
                        ProfileSet::from_indices(
                            total,
                            (0..total).filter(|&k| cell.contains(&vectors[k])),
                        )
                    })
                    .collect()
            }
            Query::Extensional { cells } => cells.clone(),
        }
    }

    pub fn describe(&self, space: &TypeSpace) -> String {
        let labels =
            |agent: usize, ts: &[usize]| braces(ts.iter().map(|&t| &space.alphabet(agent)[t]));
        match self {
            Query::Elicit { agent, cells } => {
                let parts: Vec<String> = cells.iter().map(|c| labels(*agent, c)).collect();
                format!("agent {} type in {}", agent + 1, parts.join(" | "))
            }
            Query::Count { subset, cells } => {
                let parts: Vec<String> = cells.iter().map(braces).collect();
                format!(
                    "#agents with type in {}: {}",
                    labels(0, subset),
                    parts.join(" | ")
                )
            }
            Query::MultiCount { subsets, cells } => {
                let subs: Vec<String> = subsets.iter().map(|s| labels(0, s)).collect();
                let parts: Vec<String> = cells
                    .iter()
                    .map(|c| {
                        braces(c.iter().map(|v| {
                            format!(
                                "({})",
                                v.iter()
                                    .map(|x| x.to_string())
                                    .collect::<Vec<_>>()
                                    .join(",")
                            )
                        }))
                    })
                    .collect();
                format!("counts over [{}]: {}", subs.join(", "), parts.join(" | "))
            }
            Query::Extensional { cells } => {
                let parts: Vec<String> = cells
                    .iter()
                    .map(|c| {
                        braces(
                            c.iter()
                                .map(|k| format!("({})", space.profile_labels(k).join(","))),
                        )
                    })
                    .collect();
                format!("extensional {}", parts.join(" | "))
            }
        }
    }
}

/// Tree of query descriptors, the input to [`Protocol::build`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TreeSpec {
    Leaf,
    Node {
        query: Query,
        children: Vec<TreeSpec>,
    },
}

impl TreeSpec {
    pub fn node(query: Query, children: Vec<TreeSpec>) -> TreeSpec {
        TreeSpec::Node { query, children }
    }
}

#[derive(Clone, Debug)]
pub struct Node {
    pub label: ProfileSet,
    pub parent: Option<NodeId>,
    pub query: Option<Query>,
    pub children: Vec<NodeId>,
    /// Cell index of each child within `query`.
    pub cells: Vec<usize>,
    pub path: String,
    pub depth: usize,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.query.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Defect {
    Overlap { path: String },
    NonExhaustive { path: String },
}

impl fmt::Display for Defect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Defect::Overlap { path } => write!(f, "overlap at node {path}"),
            Defect::NonExhaustive { path } => write!(f, "non-exhaustive at node {path}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub defects: Vec<Defect>,
    /// Paths of children dropped because their label was empty.
    pub pruned: Vec<String>,
    /// Paths of nodes whose query had a single nonempty cell.
    pub contracted: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.defects.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub node: NodeId,
    pub query: String,
    pub cell: usize,
    pub child: NodeId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transcript {
    pub profile: ProfileIndex,
    pub steps: Vec<Step>,
    pub leaf: NodeId,
    pub label: ProfileSet,
    pub outcome: Option<OutcomeId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Implementation {
    Implements,
    Counterexample {
        leaf: NodeId,
        first: ProfileIndex,
        second: ProfileIndex,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum QueryClass {
    Terminal,
    Elicit {
        agent: usize,
    },
    Count {
        subset: Vec<usize>,
        cells: Vec<Vec<usize>>,
    },
    MultiCount {
        subsets: Vec<Vec<usize>>,
    },
    /// Determined by the type histogram, but no arity up to the cap was
    /// found within the work budget.
    MultiCountCapReached,
    ExtensionalOnly,
}

const MULTICOUNT_WORK: usize = 4_000_000;

/// Advances `combo` (strictly increasing, values `< n`) to the next
/// combination in lexicographic order.
pub(crate) fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let r = combo.len();
    for i in (0..r).rev() {
        if combo[i] < n - r + i {
            combo[i] += 1;
            for j in i + 1..r {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[derive(Clone, Debug)]
pub struct Protocol {
    space: TypeSpace,
    nodes: Vec<Node>,
    report: ValidationReport,
    leaf_of: Vec<Option<NodeId>>,
}

struct Builder<'a> {
    space: &'a TypeSpace,
    nodes: Vec<Node>,
    report: ValidationReport,
}

impl Builder<'_> {
    fn add(
        &mut self,
        label: ProfileSet,
        parent: Option<NodeId>,
        spec: &TreeSpec,
        path: String,
        depth: usize,
    ) -> Result<NodeId> {
        let (query, specs) = match spec {
            TreeSpec::Leaf => {
                return Ok(self.push(Node {
                    label,
                    parent,
                    query: None,
                    children: vec![],
                    cells: vec![],
                    path,
                    depth,
                }))
            }
            TreeSpec::Node { query, children } => (query, children),
        };
        query.check(self.space)?;
        if specs.len() != query.cell_count() {
            return input(format!(
                "node {path} has {} cells but {} children",
                query.cell_count(),
                specs.len()
            ));
        }
        let labels: Vec<ProfileSet> = query
            .cell_sets(self.space)
            .iter()
            .map(|c| c.intersection(&label))
            .collect();
        let nonempty: Vec<usize> = (0..labels.len())
            .filter(|&k| !labels[k].is_empty())
            .collect();
        let total: usize = labels.iter().map(ProfileSet::len).sum();
        let union = labels
            .iter()
            .fold(ProfileSet::empty(label.universe()), |acc, l| acc.union(l));
        let overlap = total > union.len();
        let exhaustive = union == label;

        if nonempty.len() == 1 && exhaustive {
            let k = nonempty[0];
            self.report.contracted.push(path.clone());
            self.report.pruned.extend(
                (0..labels.len())
                    .filter(|&c| c != k)
                    .map(|c| format!("{path}/{c}")),
            );
            return self.add(label, parent, &specs[k], format!("{path}/{k}"), depth);
        }
        if overlap {
            self.report
                .defects
                .push(Defect::Overlap { path: path.clone() });
        }
        if !exhaustive {
            self.report
                .defects
                .push(Defect::NonExhaustive { path: path.clone() });
        }
        let id = self.push(Node {
            label,
            parent,
            query: Some(query.clone()),
            children: vec![],
            cells: vec![],
            path: path.clone(),
            depth,
        });
        for (k, child_label) in labels.into_iter().enumerate() {
            let child_path = format!("{path}/{k}");
            if child_label.is_empty() {
                self.report.pruned.push(child_path);
                continue;
            }
            let child = self.add(child_label, Some(id), &specs[k], child_path, depth + 1)?;
            self.nodes[id].children.push(child);
            self.nodes[id].cells.push(k);
        }
        Ok(id)
    }

    fn push(&mut self, node: Node) -> NodeId {
        self.nodes.push(node);
        self.nodes.len() - 1
    }
}

impl Protocol {
    pub fn build(space: &TypeSpace, spec: &TreeSpec) -> Result<Protocol> {
        Self::build_on(space, &space.full_set(), spec)
    }

    /// Builds a protocol whose root label is `domain` instead of the full space.
    pub fn build_on(space: &TypeSpace, domain: &ProfileSet, spec: &TreeSpec) -> Result<Protocol> {
        if domain.universe() != space.profile_count() {
            return input("domain is over a different profile space");
        }
        if domain.is_empty() {
            return input("protocol domain is empty");
        }
        let mut b = Builder {
            space,
            nodes: vec![],
            report: ValidationReport::default(),
        };
        b.add(domain.clone(), None, spec, "/tree".to_string(), 0)?;
        let mut leaf_of = vec![None; space.profile_count()];
        for (id, node) in b.nodes.iter().enumerate() {
            if node.is_leaf() {
                for k in node.label.iter() {
                    leaf_of[k] = Some(id);
                }
            }
        }
        Ok(Protocol {
            space: space.clone(),
            nodes: b.nodes,
            report: b.report,
            leaf_of,
        })
    }

    pub fn space(&self) -> &TypeSpace {
        &self.space
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn domain(&self) -> &ProfileSet {
        &self.nodes[0].label
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn label(&self, id: NodeId) -> &ProfileSet {
        &self.nodes[id].label
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id].children
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        self.nodes[id].is_leaf()
    }

    pub fn leaves(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).filter(|&id| self.nodes[id].is_leaf())
    }

    pub fn leaf_of(&self, profile: ProfileIndex) -> Option<NodeId> {
        self.leaf_of.get(profile).copied().flatten()
    }

    pub fn find_path(&self, path: &str) -> Option<NodeId> {
        self.nodes.iter().position(|n| n.path == path)
    }

    /// `id` and its ancestors, root first.
    pub fn ancestors(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = vec![id];
        let mut cur = id;
        while let Some(p) = self.nodes[cur].parent {
            out.push(p);
            cur = p;
        }
        out.reverse();
        out
    }

    /// True iff `u` is a strict ancestor of `v`.
    pub fn precedes(&self, u: NodeId, v: NodeId) -> bool {
        let mut cur = v;
        while let Some(p) = self.nodes[cur].parent {
            if p == u {
                return true;
            }
            cur = p;
        }
        false
    }

    pub fn validate(&self) -> ValidationReport {
        self.report.clone()
    }

    pub fn report(&self) -> &ValidationReport {
        &self.report
    }

    pub fn ensure_valid(&self) -> Result<()> {
        match self.report.defects.first() {
            None => Ok(()),
            Some(d) => input(d.to_string()),
        }
    }

    pub fn run(&self, profile: ProfileIndex, rule: Option<&ChoiceRule>) -> Result<Transcript> {
        self.ensure_valid()?;
        if !self.domain().contains(profile) {
            return input(format!(
                "profile ({}) is outside the protocol domain",
                self.space.profile_labels(profile).join(",")
            ));
        }
        let mut steps = vec![];
        let mut cur = self.root();
        while let Some(query) = &self.nodes[cur].query {
            let node = &self.nodes[cur];
            let pos = node
                .children
                .iter()
                .position(|&c| self.nodes[c].label.contains(profile))
                .ok_or_else(|| {
                    Error::Internal(format!("no child of {} holds the profile", node.path))
                })?;
            steps.push(Step {
                node: cur,
                query: query.describe(&self.space),
                cell: node.cells[pos],
                child: node.children[pos],
            });
            cur = node.children[pos];
        }
        let label = self.nodes[cur].label.clone();
        let outcome = match rule {
            None => None,
            Some(rule) => match rule.constant_on(&label) {
                Some(x) => Some(x),
                None => {
                    let first = label.first().expect("labels are nonempty");
                    let second = label
                        .iter()
                        .find(|&k| rule.outcome(k) != rule.outcome(first))
                        .expect("non-constant label");
                    return Err(Error::NotImplemented {
                        leaf: cur,
                        first,
                        second,
                    });
                }
            },
        };
        Ok(Transcript {
            profile,
            steps,
            leaf: cur,
            label,
            outcome,
        })
    }

    pub fn implements(&self, rule: &ChoiceRule) -> Implementation {
        for leaf in self.leaves() {
            let label = &self.nodes[leaf].label;
            if rule.constant_on(label).is_none() {
                let first = label.first().expect("labels are nonempty");
                let second = label
                    .iter()
                    .find(|&k| rule.outcome(k) != rule.outcome(first))
                    .expect("non-constant label");
                return Implementation::Counterexample {
                    leaf,
                    first,
                    second,
                };
            }
        }
        Implementation::Implements
    }

    /// Errors unless the protocol is valid and implements `rule`.
    pub fn ensure_implements(&self, rule: &ChoiceRule) -> Result<()> {
        self.ensure_valid()?;
        if rule.space() != &self.space {
            return input("rule and protocol are over different type spaces");
        }
        match self.implements(rule) {
            Implementation::Implements => Ok(()),
            Implementation::Counterexample {
                leaf,
                first,
                second,
            } => Err(Error::NotImplemented {
                leaf,
                first,
                second,
            }),
        }
    }

    /// The deepest common ancestor of the leaves reached by `a` and `b`.
    pub fn earliest_departure(&self, a: ProfileIndex, b: ProfileIndex) -> Result<NodeId> {
        let (la, lb) = match (self.leaf_of(a), self.leaf_of(b)) {
            (Some(x), Some(y)) => (x, y),
            _ => return input("profile outside the protocol domain"),
        };
        if la == lb {
            return Err(Error::NotSeparated(la));
        }
        let pa = self.ancestors(la);
        let pb = self.ancestors(lb);
        let common = pa.iter().zip(&pb).take_while(|(x, y)| x == y).count();
        Ok(pa[common - 1])
    }

    pub fn to_spec(&self) -> TreeSpec {
        self.spec_of(self.root())
    }

    fn spec_of(&self, id: NodeId) -> TreeSpec {
        let node = &self.nodes[id];
        match &node.query {
            None => TreeSpec::Leaf,
            Some(q) => {
                let mut children = vec![TreeSpec::Leaf; q.cell_count()];
                for (pos, &c) in node.children.iter().enumerate() {
                    children[node.cells[pos]] = self.spec_of(c);
                }
                TreeSpec::node(q.clone(), children)
            }
        }
    }

    /// The most specific query class the node's partition of its label admits.
    pub fn classify(&self, id: NodeId) -> QueryClass {
        let node = &self.nodes[id];
        if node.is_leaf() {
            return QueryClass::Terminal;
        }
        let space = &self.space;
        let mut child_of: HashMap<ProfileIndex, usize> = HashMap::new();
        for (pos, &c) in node.children.iter().enumerate() {
            for k in self.nodes[c].label.iter() {
                child_of.insert(k, pos);
            }
        }
        let members: Vec<(ProfileIndex, usize)> =
            node.label.iter().map(|k| (k, child_of[&k])).collect();

        for agent in 0..space.agent_count() {
            let mut by_type: Vec<Option<usize>> = vec![None; space.alphabet_len(agent)];
            let consistent = members.iter().all(|&(k, pos)| {
                let slot = &mut by_type[space.coordinate(k, agent)];
                *slot.get_or_insert(pos) == pos
            });
            if consistent {
                return QueryClass::Elicit { agent };
            }
        }
        if !space.is_common() {
            return QueryClass::ExtensionalOnly;
        }
        let n = space.agent_count();
        let m = space.alphabet_len(0);
        if m >= 20 {
            return QueryClass::ExtensionalOnly;
        }
        let mask_of = |bits: usize| -> Vec<bool> { (0..m).map(|t| bits >> t & 1 == 1).collect() };
        let subset_of =
            |bits: usize| -> Vec<usize> { (0..m).filter(|t| bits >> t & 1 == 1).collect() };

        for bits in 1..(1usize << m) - 1 {
            let mask = mask_of(bits);
            let mut by_count: Vec<Option<usize>> = vec![None; n + 1];
            let consistent = members
                .iter()
                .all(|&(k, pos)| *by_count[count_in(space, &mask, k)].get_or_insert(pos) == pos);
            if consistent {
                let mut cells = vec![vec![]; node.children.len()];
                for (c, pos) in by_count.iter().enumerate() {
                    // unobserved counts go to the first child
                    cells[pos.unwrap_or(0)].push(c);
                }
                return QueryClass::Count {
                    subset: subset_of(bits),
                    cells,
                };
            }
        }

        // histogram-determined is necessary for any multi-count
        let histogram = |k: ProfileIndex| -> Vec<usize> {
            let mut h = vec![0; m];
            for i in 0..n {
                h[space.coordinate(k, i)] += 1;
            }
            h
        };
        let mut by_hist: HashMap<Vec<usize>, usize> = HashMap::new();
        if !members
            .iter()
            .all(|&(k, pos)| *by_hist.entry(histogram(k)).or_insert(pos) == pos)
        {
            return QueryClass::ExtensionalOnly;
        }
        let masks: Vec<usize> = (1..(1usize << m) - 1).collect();
        let mut work = 0usize;
        for arity in 2..=m {
            let mut combo: Vec<usize> = (0..arity).collect();
            if arity > masks.len() {
                break;
            }
            loop {
                work += members.len();
                if work > MULTICOUNT_WORK {
                    return QueryClass::MultiCountCapReached;
                }
                let chosen: Vec<Vec<bool>> = combo.iter().map(|&c| mask_of(masks[c])).collect();
                let mut by_vec: HashMap<Vec<usize>, usize> = HashMap::new();
                let consistent = members.iter().all(|&(k, pos)| {
                    let v: Vec<usize> = chosen.iter().map(|mk| count_in(space, mk, k)).collect();
                    *by_vec.entry(v).or_insert(pos) == pos
                });
                if consistent {
                    return QueryClass::MultiCount {
                        subsets: combo.iter().map(|&c| subset_of(masks[c])).collect(),
                    };
                }
                if !next_combination(&mut combo, masks.len()) {
                    break;
                }
            }
        }
        QueryClass::MultiCountCapReached
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space2() -> TypeSpace {
        TypeSpace::uniform(2, &["A", "B"]).unwrap()
    }

    fn elicit(agent: usize) -> Query {
        Query::Elicit {
            agent,
            cells: vec![vec![0], vec![1]],
        }
    }

    fn full_reveal() -> TreeSpec {
        TreeSpec::node(
            elicit(0),
            vec![
                TreeSpec::node(elicit(1), vec![TreeSpec::Leaf, TreeSpec::Leaf]),
                TreeSpec::node(elicit(1), vec![TreeSpec::Leaf, TreeSpec::Leaf]),
            ],
        )
    }

    #[test]
    fn labels_partition_parent() {
        let s = space2();
        let p = Protocol::build(&s, &full_reveal()).unwrap();
        assert!(p.validate().is_ok());
        for node in p.nodes() {
            if node.is_leaf() {
                continue;
            }
            let sum: usize = node.children.iter().map(|&c| p.label(c).len()).sum();
            assert_eq!(sum, node.label.len());
        }
        assert_eq!(p.leaves().count(), 4);
    }

    #[test]
    fn overlap_and_gap_are_reported() {
        let s = space2();
        let overlap = TreeSpec::node(
            Query::Elicit {
                agent: 0,
                cells: vec![vec![0], vec![0, 1]],
            },
            vec![TreeSpec::Leaf, TreeSpec::Leaf],
        );
        let r = Protocol::build(&s, &overlap).unwrap().validate();
        assert_eq!(r.defects[0].to_string(), "overlap at node /tree");

        let gap = TreeSpec::node(
            Query::Extensional {
                cells: vec![
                    ProfileSet::from_indices(4, [0, 1]),
                    ProfileSet::from_indices(4, [2]),
                ],
            },
            vec![TreeSpec::Leaf, TreeSpec::Leaf],
        );
        let r = Protocol::build(&s, &gap).unwrap().validate();
        assert_eq!(r.defects[0].to_string(), "non-exhaustive at node /tree");
    }

    #[test]
    fn empty_cells_are_pruned_and_trivial_queries_contracted() {
        let s = space2();
        let domain = ProfileSet::from_indices(4, [0, 1]);
        let p = Protocol::build_on(&s, &domain, &full_reveal()).unwrap();
        assert!(p.validate().is_ok());
        assert_eq!(p.report().pruned, vec!["/tree/1".to_string()]);
        assert_eq!(p.report().contracted, vec!["/tree".to_string()]);
        assert_eq!(p.node(0).path, "/tree/0");
        assert_eq!(p.node_count(), 3);
    }

    #[test]
    fn single_node_run_has_empty_path() {
        let s = space2();
        let p = Protocol::build(&s, &TreeSpec::Leaf).unwrap();
        let rule = ChoiceRule::from_fn(s, |_| "x".into());
        let t = p.run(3, Some(&rule)).unwrap();
        assert!(t.steps.is_empty());
        assert_eq!(p.implements(&rule), Implementation::Implements);
    }

    #[test]
    fn earliest_departure_and_separation() {
        let s = space2();
        let p = Protocol::build(&s, &full_reveal()).unwrap();
        assert_eq!(p.earliest_departure(0, 2).unwrap(), 0);
        let second = p.earliest_departure(2, 3).unwrap();
        assert_eq!(p.node(second).path, "/tree/1");
        let shallow = Protocol::build(
            &s,
            &TreeSpec::node(elicit(0), vec![TreeSpec::Leaf, TreeSpec::Leaf]),
        )
        .unwrap();
        assert!(matches!(
            shallow.earliest_departure(0, 1),
            Err(Error::NotSeparated(_))
        ));
    }

    #[test]
    fn classification_examples() {
        let s = space2();
        let p = Protocol::build(&s, &full_reveal()).unwrap();
        assert_eq!(p.classify(0), QueryClass::Elicit { agent: 0 });
        assert_eq!(p.classify(1), QueryClass::Elicit { agent: 1 });

        let diag = TreeSpec::node(
            Query::Extensional {
                cells: vec![
                    ProfileSet::from_indices(4, [0, 3]),
                    ProfileSet::from_indices(4, [1, 2]),
                ],
            },
            vec![TreeSpec::Leaf, TreeSpec::Leaf],
        );
        let p = Protocol::build(&s, &diag).unwrap();
        assert_eq!(
            p.classify(0),
            QueryClass::Count {
                subset: vec![0],
                cells: vec![vec![0, 2], vec![1]],
            }
        );
    }

    #[test]
    fn count_query_classifies_as_count() {
        let s = TypeSpace::uniform(3, &["1", "2", "3"]).unwrap();
        let q = Query::Count {
            subset: vec![2],
            cells: vec![vec![1], vec![0, 2, 3]],
        };
        let p =
            Protocol::build(&s, &TreeSpec::node(q, vec![TreeSpec::Leaf, TreeSpec::Leaf])).unwrap();
        assert!(matches!(p.classify(0), QueryClass::Count { .. }));
    }

    #[test]
    fn multicount_needs_two_subsets() {
        // A = exactly one agent of each of types 0 and 1
        let s = TypeSpace::uniform(2, &["a", "b", "c"]).unwrap();
        let q = Query::MultiCount {
            subsets: vec![vec![0], vec![1]],
            cells: vec![
                vec![vec![1, 1]],
                (0..3)
                    .flat_map(|x| (0..3).map(move |y| vec![x, y]))
                    .filter(|v| v != &vec![1, 1])
                    .collect(),
            ],
        };
        let p =
            Protocol::build(&s, &TreeSpec::node(q, vec![TreeSpec::Leaf, TreeSpec::Leaf])).unwrap();
        assert_eq!(
            p.classify(0),
            QueryClass::MultiCount {
                subsets: vec![vec![0], vec![1]]
            }
        );
    }

    #[test]
    fn non_symmetric_split_is_extensional_only() {
        let s = space2();
        let q = Query::Extensional {
            cells: vec![
                ProfileSet::from_indices(4, [1]),
                ProfileSet::from_indices(4, [0, 2, 3]),
            ],
        };
        let p =
            Protocol::build(&s, &TreeSpec::node(q, vec![TreeSpec::Leaf, TreeSpec::Leaf])).unwrap();
        assert_eq!(p.classify(0), QueryClass::ExtensionalOnly);
    }

    #[test]
    fn count_requires_common_alphabet() {
        let s = TypeSpace::new(vec![vec!["a".into()], vec!["a".into(), "b".into()]]).unwrap();
        let q = Query::Count {
            subset: vec![0],
            cells: vec![vec![0], vec![1, 2]],
        };
        assert!(
            Protocol::build(&s, &TreeSpec::node(q, vec![TreeSpec::Leaf, TreeSpec::Leaf])).is_err()
        );
    }

    #[test]
    fn spec_round_trip() {
        let s = space2();
        let p = Protocol::build(&s, &full_reveal()).unwrap();
        let q = Protocol::build(&s, &p.to_spec()).unwrap();
        assert_eq!(p.node_count(), q.node_count());
        for k in 0..4 {
            assert_eq!(
                p.node(p.leaf_of(k).unwrap()).path,
                q.node(q.leaf_of(k).unwrap()).path
            );
        }
    }
}
