//! Choice rules as total outcome tables over a type space.

use std::collections::HashMap;

use crate::error::{input, Result};
use crate::space::{product_factorization, ProductSet, ProfileIndex, ProfileSet, TypeSpace};

/// Canonical outcome identifier. Two profiles have equal outcomes iff their
/// ids are equal.
pub type OutcomeId = u32;

/// Per-agent outcome components: `table[i][k]` is agent `i`'s component at
/// profile `k`, an index into `labels[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Components {
    labels: Vec<Vec<String>>,
    table: Vec<Vec<OutcomeId>>,
}

impl Components {
    pub fn new(labels: Vec<Vec<String>>, table: Vec<Vec<OutcomeId>>) -> Self {
        Components { labels, table }
    }

    pub fn label(&self, agent: usize, id: OutcomeId) -> &str {
        &self.labels[agent][id as usize]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChoiceRule {
    space: TypeSpace,
    outcomes: Vec<String>,
    table: Vec<OutcomeId>,
    components: Option<Components>,
}

/// Interns labels in first-appearance order.
#[derive(Default)]
struct Interner {
    ids: HashMap<String, OutcomeId>,
    labels: Vec<String>,
}

impl Interner {
    fn intern(&mut self, label: String) -> OutcomeId {
        if let Some(&id) = self.ids.get(&label) {
            return id;
        }
        let id = self.labels.len() as OutcomeId;
        self.ids.insert(label.clone(), id);
        self.labels.push(label);
        id
    }
}

impl ChoiceRule {
    pub fn new(space: TypeSpace, outcomes: Vec<String>, table: Vec<OutcomeId>) -> Result<Self> {
        if table.len() != space.profile_count() {
            return input(format!(
                "rule table has {} entries, space has {} profiles",
                table.len(),
                space.profile_count()
            ));
        }
        if let Some(&bad) = table.iter().find(|&&x| x as usize >= outcomes.len()) {
            return input(format!("outcome id {bad} has no label"));
        }
        for (k, label) in outcomes.iter().enumerate() {
            if outcomes[..k].contains(label) {
                return input(format!("outcome {label:?} is listed twice"));
            }
        }
        Ok(ChoiceRule {
            space,
            outcomes,
            table,
            components: None,
        })
    }

    /// Builds a rule from a labelling function; ids follow first appearance
    /// in profile order.
    pub fn from_fn(space: TypeSpace, f: impl Fn(&[usize]) -> String) -> Self {
        let mut interner = Interner::default();
        let table = (0..space.profile_count())
            .map(|k| interner.intern(f(&space.profile_of(k))))
            .collect();
        ChoiceRule {
            space,
            outcomes: interner.labels,
            table,
            components: None,
        }
    }

    /// Like [`ChoiceRule::from_fn`], with `f` also returning one component
    /// label per agent.
    pub fn from_fn_with_components(
        space: TypeSpace,
        f: impl Fn(&[usize]) -> (String, Vec<String>),
    ) -> Result<Self> {
        let n = space.agent_count();
        let mut outcomes = Interner::default();
        let mut parts: Vec<Interner> = (0..n).map(|_| Interner::default()).collect();
        let mut table = Vec::with_capacity(space.profile_count());
        let mut comp_table = vec![Vec::with_capacity(space.profile_count()); n];
        for k in 0..space.profile_count() {
            let (label, comps) = f(&space.profile_of(k));
            if comps.len() != n {
                return input(format!("expected {n} components, got {}", comps.len()));
            }
            table.push(outcomes.intern(label));
            for (i, c) in comps.into_iter().enumerate() {
                comp_table[i].push(parts[i].intern(c));
            }
        }
        let rule = ChoiceRule {
            space,
            outcomes: outcomes.labels,
            table,
            components: None,
        };
        rule.with_components(Components {
            labels: parts.into_iter().map(|p| p.labels).collect(),
            table: comp_table,
        })
    }

    /// Attaches components, checking that each outcome determines them.
    pub fn with_components(mut self, components: Components) -> Result<Self> {
        let n = self.space.agent_count();
        if components.table.len() != n || components.labels.len() != n {
            return input(format!("components must be given for all {n} agents"));
        }
        for i in 0..n {
            if components.table[i].len() != self.table.len() {
                return input(format!("component table for agent {} is not total", i + 1));
            }
            if components.table[i]
                .iter()
                .any(|&c| c as usize >= components.labels[i].len())
            {
                return input(format!("component id out of range for agent {}", i + 1));
            }
            let mut seen: Vec<Option<OutcomeId>> = vec![None; self.outcomes.len()];
            for (k, &x) in self.table.iter().enumerate() {
                let c = components.table[i][k];
                match seen[x as usize] {
                    None => seen[x as usize] = Some(c),
                    Some(prev) if prev != c => {
                        return input(format!(
                            "outcome {:?} has two different components for agent {}",
                            self.outcomes[x as usize],
                            i + 1
                        ))
                    }
                    Some(_) => {}
                }
            }
        }
        self.components = Some(components);
        Ok(self)
    }

    pub fn space(&self) -> &TypeSpace {
        &self.space
    }

    pub fn outcome_count(&self) -> usize {
        self.outcomes.len()
    }

    pub fn outcome_labels(&self) -> &[String] {
        &self.outcomes
    }

    #[inline]
    pub fn outcome(&self, index: ProfileIndex) -> OutcomeId {
        self.table[index]
    }

    pub fn outcome_label(&self, id: OutcomeId) -> &str {
        &self.outcomes[id as usize]
    }

    pub fn outcome_id(&self, label: &str) -> Option<OutcomeId> {
        self.outcomes
            .iter()
            .position(|l| l == label)
            .map(|k| k as OutcomeId)
    }

    pub fn table(&self) -> &[OutcomeId] {
        &self.table
    }

    pub fn components(&self) -> Option<&Components> {
        self.components.as_ref()
    }

    pub fn has_components(&self) -> bool {
        self.components.is_some()
    }

    #[inline]
    pub fn component(&self, agent: usize, index: ProfileIndex) -> Option<OutcomeId> {
        self.components.as_ref().map(|c| c.table[agent][index])
    }

    /// The single outcome on `set` if the rule is constant there.
    pub fn constant_on(&self, set: &ProfileSet) -> Option<OutcomeId> {
        let mut it = set.iter();
        let first = self.outcome(it.next()?);
        it.all(|k| self.outcome(k) == first).then_some(first)
    }

    pub fn constant_on_product(&self, set: &ProductSet) -> Option<OutcomeId> {
        let mut it = set.profiles(&self.space);
        let first = self.outcome(it.next()?);
        it.all(|k| self.outcome(k) == first).then_some(first)
    }

    /// A view of the rule on a product set.
    pub fn restrict(&self, set: &ProfileSet) -> Result<RestrictedRule<'_>> {
        match product_factorization(&self.space, set)? {
            Some(product) => Ok(self.restrict_product(product)),
            None => input("restriction set is not a product set"),
        }
    }

    pub fn restrict_product(&self, product: ProductSet) -> RestrictedRule<'_> {
        RestrictedRule {
            rule: self,
            set: product,
        }
    }
}

/// A choice rule viewed on a product subset of its space. Outcome ids are
/// those of the underlying rule.
#[derive(Clone, Debug)]
pub struct RestrictedRule<'a> {
    pub rule: &'a ChoiceRule,
    pub set: ProductSet,
}

impl RestrictedRule<'_> {
    pub fn constant(&self) -> Option<OutcomeId> {
        self.rule.constant_on_product(&self.set)
    }

    pub fn is_constant(&self) -> bool {
        self.constant().is_some()
    }

    pub fn outcomes(&self) -> Vec<OutcomeId> {
        let mut out: Vec<_> = self
            .set
            .profiles(self.rule.space())
            .map(|k| self.rule.outcome(k))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fair() -> ChoiceRule {
        let space = TypeSpace::uniform(2, &["A", "B"]).unwrap();
        ChoiceRule::from_fn(space, |p| {
            if p == [1, 0] {
                "B,A".into()
            } else {
                "A,B".into()
            }
        })
    }

    #[test]
    fn restriction_reports_constancy() {
        let rule = fair();
        let s = rule.space().clone();
        assert!(!rule.restrict(&s.full_set()).unwrap().is_constant());
        let row = ProfileSet::from_indices(4, [0, 1]);
        let r = rule.restrict(&row).unwrap();
        assert_eq!(rule.outcome_label(r.constant().unwrap()), "A,B");
        for k in 0..4 {
            assert!(rule
                .restrict(&ProfileSet::from_indices(4, [k]))
                .unwrap()
                .is_constant());
        }
        let diag = ProfileSet::from_indices(4, [0, 3]);
        assert!(rule.restrict(&diag).is_err());
    }

    #[test]
    fn ids_follow_first_appearance() {
        let rule = fair();
        assert_eq!(
            rule.outcome_labels(),
            &["A,B".to_string(), "B,A".to_string()]
        );
        assert_eq!(rule.table(), &[0, 0, 1, 0]);
    }

    #[test]
    fn component_bundle_invariant() {
        let space = TypeSpace::uniform(2, &["A", "B"]).unwrap();
        let ok = ChoiceRule::from_fn_with_components(space.clone(), |p| {
            let o = if p[0] == 0 { "A,B" } else { "B,A" };
            (o.into(), o.split(',').map(String::from).collect())
        })
        .unwrap();
        assert_eq!(ok.component(1, 3), Some(1));
        // same outcome label, different components
        let bad = ChoiceRule::from_fn_with_components(space, |p| {
            ("x".into(), vec![p[0].to_string(), "c".into()])
        });
        assert!(bad.is_err());
    }

    #[test]
    fn table_must_be_total() {
        let space = TypeSpace::uniform(2, &["A", "B"]).unwrap();
        assert!(ChoiceRule::new(space.clone(), vec!["x".into()], vec![0; 3]).is_err());
        assert!(ChoiceRule::new(space.clone(), vec!["x".into()], vec![0, 0, 0, 1]).is_err());
        assert!(ChoiceRule::new(space, vec!["x".into()], vec![0; 4]).is_ok());
    }
}
