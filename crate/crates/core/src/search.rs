//! Exhaustive oracles over protocol space for tiny instances.
//!
//! States are the profile sets reachable from the domain. A state is won if
//! the rule is constant on it, or if some admissible query splits it into
//! won states. For contextual privacy a query is admissible when it splits
//! no unilateral pair with equal outcomes inside the state; every separated
//! pair is split at its earliest departure, whose label holds both profiles,
//! so the local test decides privacy of the finished tree exactly.

use std::collections::{HashMap, HashSet};
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::error::{input, Error, Result};
use crate::mechanisms::osp::{check_protocol_osp, osp_failure_at, OutcomePrefs};
use crate::privacy::check_protocol_cp;
use crate::protocol::{count_in, next_combination, Protocol, Query, TreeSpec};
use crate::rule::ChoiceRule;
use crate::space::{projections, ProfileIndex, ProfileSet, TypeSpace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct QueryFamily {
    pub elicit: bool,
    pub count: bool,
    /// Largest multi-count arity; 0 disables multi-count queries.
    pub multicount: usize,
    /// Largest number of cells per query.
    pub max_cells: usize,
    /// Count answers are the counts themselves, never a coarsening.
    pub exact_counts: bool,
}

impl QueryFamily {
    pub fn elicit() -> Self {
        QueryFamily {
            elicit: true,
            count: false,
            multicount: 0,
            max_cells: 2,
            exact_counts: false,
        }
    }

    pub fn elicit_count() -> Self {
        QueryFamily {
            count: true,
            ..Self::elicit()
        }
    }

    fn check(&self, space: &TypeSpace) -> Result<()> {
        if !self.elicit && !self.count && self.multicount == 0 {
            return input("the query family is empty");
        }
        if self.max_cells < 2 {
            return input("queries need at least two cells");
        }
        if (self.count || self.multicount > 0) && !space.is_common() {
            return input("count queries require a common type alphabet");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchBudget {
    pub max_states: usize,
    pub max_depth: usize,
    pub max_time: Option<Duration>,
    pub memoize: bool,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_states: 200_000,
            max_depth: 64,
            max_time: Some(Duration::from_secs(60)),
            memoize: true,
        }
    }
}

#[derive(Clone, Debug)]
pub enum SearchOutcome {
    Found(Protocol),
    ProvenNonexistent,
    BudgetExhausted,
}

#[derive(Clone, Debug)]
pub struct SearchReport {
    pub outcome: SearchOutcome,
    /// Distinct states expanded.
    pub states: usize,
    pub elapsed: Duration,
}

impl SearchReport {
    pub fn verdict(&self) -> &'static str {
        match self.outcome {
            SearchOutcome::Found(_) => "found",
            SearchOutcome::ProvenNonexistent => "proven-nonexistent",
            SearchOutcome::BudgetExhausted => "budget-exhausted",
        }
    }
}

/// Set partitions of `items` into `2..=max_blocks` blocks, in
/// restricted-growth order.
pub(crate) fn set_partitions<T: Copy>(items: &[T], max_blocks: usize) -> Vec<Vec<Vec<T>>> {
    let mut out = vec![];
    if items.len() < 2 {
        return out;
    }
    let mut rgs = vec![0usize; items.len()];
    loop {
        let blocks = rgs.iter().max().map_or(0, |m| m + 1);
        if blocks >= 2 && blocks <= max_blocks {
            let mut part = vec![vec![]; blocks];
            for (k, &b) in rgs.iter().enumerate() {
                part[b].push(items[k]);
            }
            out.push(part);
        }
        // next restricted growth string with block count bounded
        let mut i = items.len();
        loop {
            if i <= 1 {
                return out;
            }
            i -= 1;
            let prefix_max = rgs[..i].iter().copied().max().unwrap_or(0);
            if rgs[i] <= prefix_max && rgs[i] + 1 < max_blocks {
                rgs[i] += 1;
                for r in rgs.iter_mut().skip(i + 1) {
                    *r = 0;
                }
                break;
            }
        }
    }
}

/// Groupings of observed count values into answer cells.
fn count_partitions(observed: &[usize], family: &QueryFamily) -> Vec<Vec<Vec<usize>>> {
    if !family.exact_counts {
        return set_partitions(observed, family.max_cells);
    }
    if observed.len() < 2 || observed.len() > family.max_cells {
        return vec![];
    }
    vec![observed.iter().map(|&c| vec![c]).collect()]
}

/// Candidate queries at `state`, each with its nonempty children in cell order.
fn candidate_queries(
    space: &TypeSpace,
    state: &ProfileSet,
    family: &QueryFamily,
) -> Vec<(Query, Vec<ProfileSet>)> {
    let mut seen: HashSet<Vec<ProfileSet>> = HashSet::new();
    let mut out = vec![];
    let mut push = |query: Query, out: &mut Vec<(Query, Vec<ProfileSet>)>| {
        let children: Vec<ProfileSet> = query
            .cell_sets(space)
            .iter()
            .map(|c| c.intersection(state))
            .filter(|c| !c.is_empty())
            .collect();
        if children.len() < 2 {
            return;
        }
        let mut key = children.clone();
        key.sort();
        if seen.insert(key) {
            out.push((query, children));
        }
    };
    let n = space.agent_count();
    if family.elicit {
        let proj = projections(space, state);
        for (agent, present) in proj.iter().enumerate() {
            for part in set_partitions(present, family.max_cells) {
                let mut cells = part.clone();
                let absent = (0..space.alphabet_len(agent)).filter(|t| !present.contains(t));
                cells[0].extend(absent);
                cells[0].sort_unstable();
                push(Query::Elicit { agent, cells }, &mut out);
            }
        }
    }
    if !space.is_common() {
        return out;
    }
    let m = space.alphabet_len(0);
    // complement-canonical subsets: never contain the last type
    let masks: Vec<Vec<bool>> = (1usize..1 << (m - 1))
        .map(|bits| (0..m).map(|t| bits >> t & 1 == 1).collect())
        .collect();
    let subset_of = |mask: &[bool]| -> Vec<usize> { (0..m).filter(|&t| mask[t]).collect() };
    if family.count {
        for mask in &masks {
            let mut observed: Vec<usize> = state.iter().map(|k| count_in(space, mask, k)).collect();
            observed.sort_unstable();
            observed.dedup();
            for part in count_partitions(&observed, family) {
                let mut cells = part.clone();
                cells[0].extend((0..=n).filter(|c| !observed.contains(c)));
                cells[0].sort_unstable();
                push(
                    Query::Count {
                        subset: subset_of(mask),
                        cells,
                    },
                    &mut out,
                );
            }
        }
    }
    for arity in 2..=family.multicount.min(masks.len()) {
        let mut combo: Vec<usize> = (0..arity).collect();
        loop {
            let chosen: Vec<&Vec<bool>> = combo.iter().map(|&c| &masks[c]).collect();
            let mut observed: Vec<Vec<usize>> = state
                .iter()
                .map(|k| chosen.iter().map(|mk| count_in(space, mk, k)).collect())
                .collect();
            observed.sort();
            observed.dedup();
            let positions: Vec<usize> = (0..observed.len()).collect();
            for part in count_partitions(&positions, family) {
                let mut cells: Vec<Vec<Vec<usize>>> = part
                    .iter()
                    .map(|block| block.iter().map(|&p| observed[p].clone()).collect())
                    .collect();
                // unobserved vectors join the first cell
                let mut all = vec![vec![]];
                for _ in 0..arity {
                    all = all
                        .into_iter()
                        .flat_map(|v: Vec<usize>| {
                            (0..=n).map(move |c| {
                                let mut w = v.clone();
                                w.push(c);
                                w
                            })
                        })
                        .collect();
                }
                cells[0].extend(all.into_iter().filter(|v| !observed.contains(v)));
                push(
                    Query::MultiCount {
                        subsets: chosen.iter().map(|mk| subset_of(mk)).collect(),
                        cells,
                    },
                    &mut out,
                );
            }
            if !next_combination(&mut combo, masks.len()) {
                break;
            }
        }
    }
    out
}

/// True iff splitting `state` into `children` separates no unilateral pair
/// with equal outcomes.
fn cp_admissible(rule: &ChoiceRule, state: &ProfileSet, children: &[ProfileSet]) -> bool {
    let space = rule.space();
    let mut child_of: HashMap<ProfileIndex, usize> = HashMap::new();
    for (c, set) in children.iter().enumerate() {
        for k in set.iter() {
            child_of.insert(k, c);
        }
    }
    for a in state.iter() {
        for agent in 0..space.agent_count() {
            let ta = space.coordinate(a, agent);
            for tb in ta + 1..space.alphabet_len(agent) {
                let b = space.with_coordinate(a, agent, tb);
                if let Some(&cb) = child_of.get(&b) {
                    if cb != child_of[&a] && rule.outcome(a) == rule.outcome(b) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

enum Memo {
    Win(TreeSpec),
    Lose,
}

struct Exhausted;

struct Searcher<'a, F: Fn(&ProfileSet, &[ProfileSet], &Query) -> bool> {
    rule: &'a ChoiceRule,
    family: QueryFamily,
    budget: SearchBudget,
    admissible: F,
    memo: HashMap<ProfileSet, Memo>,
    expanded: usize,
    start: Instant,
}

impl<F: Fn(&ProfileSet, &[ProfileSet], &Query) -> bool> Searcher<'_, F> {
    fn solve(
        &mut self,
        state: &ProfileSet,
        depth: usize,
    ) -> std::result::Result<Option<TreeSpec>, Exhausted> {
        if self.rule.constant_on(state).is_some() {
            return Ok(Some(TreeSpec::Leaf));
        }
        if let Some(m) = self.memo.get(state) {
            return Ok(match m {
                Memo::Win(spec) => Some(spec.clone()),
                Memo::Lose => None,
            });
        }
        if depth >= self.budget.max_depth || self.expanded >= self.budget.max_states {
            return Err(Exhausted);
        }
        if let Some(limit) = self.budget.max_time {
            if self.start.elapsed() > limit {
                return Err(Exhausted);
            }
        }
        self.expanded += 1;
        let space = self.rule.space().clone();
        let mut result = None;
        'queries: for (query, children) in candidate_queries(&space, state, &self.family) {
            if !(self.admissible)(state, &children, &query) {
                continue;
            }
            let mut child_specs = vec![];
            for child in &children {
                match self.solve(child, depth + 1)? {
                    Some(spec) => child_specs.push((child.clone(), spec)),
                    None => continue 'queries,
                }
            }
            // align child specs with the query's cells
            let cell_sets = query.cell_sets(&space);
            let specs = cell_sets
                .iter()
                .map(|cell| {
                    child_specs
                        .iter()
                        .find(|(label, _)| label.is_subset(cell))
                        .map_or(TreeSpec::Leaf, |(_, s)| s.clone())
                })
                .collect();
            result = Some(TreeSpec::node(query, specs));
            break;
        }
        if self.budget.memoize {
            let entry = match &result {
                Some(spec) => Memo::Win(spec.clone()),
                None => Memo::Lose,
            };
            self.memo.insert(state.clone(), entry);
        }
        Ok(result)
    }
}

fn run_search<F: Fn(&ProfileSet, &[ProfileSet], &Query) -> bool>(
    rule: &ChoiceRule,
    domain: &ProfileSet,
    family: QueryFamily,
    budget: SearchBudget,
    admissible: F,
) -> Result<(Option<Protocol>, bool, usize, Duration)> {
    let space = rule.space();
    if domain.universe() != space.profile_count() || domain.is_empty() {
        return input("search domain must be a nonempty set of profiles of the rule's space");
    }
    let mut s = Searcher {
        rule,
        family,
        budget,
        admissible,
        memo: HashMap::new(),
        expanded: 0,
        start: Instant::now(),
    };
    let result = s.solve(domain, 0);
    let elapsed = s.start.elapsed();
    match result {
        Err(Exhausted) => Ok((None, true, s.expanded, elapsed)),
        Ok(None) => Ok((None, false, s.expanded, elapsed)),
        Ok(Some(spec)) => Ok((
            Some(Protocol::build_on(space, domain, &spec)?),
            false,
            s.expanded,
            elapsed,
        )),
    }
}

/// Decides whether a CP protocol built from `family` queries implements
/// `rule` on `domain`.
pub fn exhaustive_cp_search(
    rule: &ChoiceRule,
    domain: &ProfileSet,
    family: QueryFamily,
    budget: SearchBudget,
) -> Result<SearchReport> {
    family.check(rule.space())?;
    let (found, exhausted, states, elapsed) =
        run_search(rule, domain, family, budget, |state, children, _| {
            cp_admissible(rule, state, children)
        })?;
    let outcome = match (found, exhausted) {
        (Some(p), _) => {
            if !check_protocol_cp(&p, rule)?.holds() {
                return Err(Error::Internal(
                    "search returned a protocol that is not contextually private".into(),
                ));
            }
            SearchOutcome::Found(p)
        }
        (None, true) => SearchOutcome::BudgetExhausted,
        (None, false) => SearchOutcome::ProvenNonexistent,
    };
    Ok(SearchReport {
        outcome,
        states,
        elapsed,
    })
}

/// Decides whether an obviously strategyproof elicitation protocol
/// implements `rule` on `domain`. Queries may have any number of cells.
pub fn exhaustive_osp_search(
    rule: &ChoiceRule,
    domain: &ProfileSet,
    prefs: &OutcomePrefs,
    budget: SearchBudget,
) -> Result<SearchReport> {
    let space = rule.space();
    let max_cells = (0..space.agent_count())
        .map(|i| space.alphabet_len(i))
        .max()
        .unwrap_or(2)
        .max(2);
    let family = QueryFamily {
        elicit: true,
        count: false,
        multicount: 0,
        max_cells,
        exact_counts: false,
    };
    let (found, exhausted, states, elapsed) =
        run_search(rule, domain, family, budget, |state, children, query| {
            let Query::Elicit { agent, .. } = query else {
                return false;
            };
            osp_failure_at(rule, prefs, *agent, children).is_none() && !state.is_empty()
        })?;
    let outcome = match (found, exhausted) {
        (Some(p), _) => {
            if check_protocol_osp(&p, rule, prefs)?.is_some() {
                return Err(Error::Internal(
                    "search returned a protocol that is not obviously strategyproof".into(),
                ));
            }
            SearchOutcome::Found(p)
        }
        (None, true) => SearchOutcome::BudgetExhausted,
        (None, false) => SearchOutcome::ProvenNonexistent,
    };
    Ok(SearchReport {
        outcome,
        states,
        elapsed,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ObstructionEntry {
    /// "elicit" or "count".
    pub kind: &'static str,
    #[serde(skip)]
    pub query: Query,
    /// Induced partition of `S`, as positions into `S`.
    pub partition: Vec<Vec<usize>>,
    /// A unilateral same-outcome pair the query separates, as positions.
    pub violated: Option<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ObstructionReport {
    pub entries: Vec<ObstructionEntry>,
    /// The rule is non-constant on `S` and every separating query is violated.
    pub holds: bool,
    /// The rule is constant on `S`.
    pub vacuous: bool,
}

/// Lists every query of `family` that separates members of `profiles`,
/// one entry per distinct induced partition, with a violated pair if any.
pub fn obstruction_scan(
    rule: &ChoiceRule,
    profiles: &[ProfileIndex],
    family: QueryFamily,
) -> Result<ObstructionReport> {
    let space = rule.space();
    family.check(space)?;
    if profiles.is_empty() {
        return input("the obstruction set is empty");
    }
    if let Some(&k) = profiles.iter().find(|&&k| k >= space.profile_count()) {
        return input(format!("profile index {k} out of range"));
    }
    let set = ProfileSet::from_indices(space.profile_count(), profiles.iter().copied());
    let family = QueryFamily {
        max_cells: family.max_cells.max(profiles.len()),
        ..family
    };
    // per kind, so a count inducing an elicitation's partition is still listed
    let kinds = [
        QueryFamily {
            count: false,
            multicount: 0,
            ..family
        },
        QueryFamily {
            elicit: false,
            multicount: 0,
            ..family
        },
        QueryFamily {
            elicit: false,
            count: false,
            ..family
        },
    ];
    let candidates = kinds
        .iter()
        .filter(|f| f.elicit || f.count || f.multicount > 0)
        .flat_map(|f| candidate_queries(space, &set, f));
    let mut seen: HashSet<(&'static str, Vec<Vec<usize>>)> = HashSet::new();
    let mut entries = vec![];
    for (query, children) in candidates {
        let kind = match query {
            Query::Elicit { .. } => "elicit",
            Query::Count { .. } => "count",
            Query::MultiCount { .. } => "multicount",
            Query::Extensional { .. } => "extensional",
        };
        let partition: Vec<Vec<usize>> = children
            .iter()
            .map(|c| {
                (0..profiles.len())
                    .filter(|&p| c.contains(profiles[p]))
                    .collect()
            })
            .collect();
        let mut key = partition.clone();
        key.sort();
        if !seen.insert((kind, key)) {
            continue;
        }
        let cell_of = |p: usize| partition.iter().position(|b| b.contains(&p));
        let mut violated = None;
        'pairs: for a in 0..profiles.len() {
            for b in a + 1..profiles.len() {
                let (x, y) = (profiles[a], profiles[b]);
                let differing = (0..space.agent_count())
                    .filter(|&i| space.coordinate(x, i) != space.coordinate(y, i))
                    .count();
                if differing == 1 && cell_of(a) != cell_of(b) && rule.outcome(x) == rule.outcome(y)
                {
                    violated = Some((a, b));
                    break 'pairs;
                }
            }
        }
        entries.push(ObstructionEntry {
            kind,
            query,
            partition,
            violated,
        });
    }
    let vacuous = rule.constant_on(&set).is_some();
    let all_violated = entries.iter().all(|e| e.violated.is_some());
    Ok(ObstructionReport {
        holds: !vacuous && all_violated,
        vacuous,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partitions_are_counted_by_stirling_numbers() {
        let items = [0, 1, 2, 3];
        // S(4,2) = 7, S(4,3) = 6, S(4,4) = 1
        assert_eq!(set_partitions(&items, 2).len(), 7);
        assert_eq!(set_partitions(&items, 3).len(), 13);
        assert_eq!(set_partitions(&items, 4).len(), 14);
        assert!(set_partitions(&[7], 3).is_empty());
    }

    #[test]
    fn empty_family_is_rejected() {
        let s = TypeSpace::uniform(2, &["A", "B"]).unwrap();
        let rule = ChoiceRule::from_fn(s.clone(), |p| p[0].to_string());
        let family = QueryFamily {
            elicit: false,
            count: false,
            multicount: 0,
            max_cells: 2,
            exact_counts: false,
        };
        assert!(
            exhaustive_cp_search(&rule, &s.full_set(), family, SearchBudget::default()).is_err()
        );
    }

    #[test]
    fn dictator_rule_is_found() {
        let s = TypeSpace::uniform(2, &["A", "B", "C"]).unwrap();
        let rule = ChoiceRule::from_fn(s.clone(), |p| p[0].to_string());
        let r = exhaustive_cp_search(
            &rule,
            &s.full_set(),
            QueryFamily::elicit(),
            SearchBudget::default(),
        )
        .unwrap();
        assert!(matches!(r.outcome, SearchOutcome::Found(_)));
    }

    #[test]
    fn tiny_budget_is_reported_not_mistaken_for_nonexistence() {
        let s = TypeSpace::uniform(2, &["A", "B", "C"]).unwrap();
        let rule = ChoiceRule::from_fn(s.clone(), |p| format!("{}{}", p[0], p[1]));
        let budget = SearchBudget {
            max_states: 1,
            ..SearchBudget::default()
        };
        let r = exhaustive_cp_search(&rule, &s.full_set(), QueryFamily::elicit(), budget).unwrap();
        assert!(matches!(r.outcome, SearchOutcome::BudgetExhausted));
    }

    #[test]
    fn vacuous_obstruction() {
        let s = TypeSpace::uniform(2, &["A", "B"]).unwrap();
        let rule = ChoiceRule::from_fn(s, |_| "x".into());
        let r = obstruction_scan(&rule, &[0, 1, 2, 3], QueryFamily::elicit_count()).unwrap();
        assert!(r.vacuous);
        assert!(!r.holds);
        assert!(!r.entries.is_empty());
        assert!(r.entries.iter().all(|e| e.violated.is_some()));
    }
}
