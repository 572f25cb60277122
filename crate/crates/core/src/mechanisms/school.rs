//! School choice with priority scores: stability, the two-student
//! instance, and the cutoff rule with its multi-count protocol.

use num_rational::Rational64;

use super::family::CompletionFamily;
use super::{
    allocation_label, feasible_allocations, grow, rank_of, splits, BuiltProtocol, DomainModel,
    Instance,
};
use crate::error::{input, Error, Result};
use crate::protocol::{Protocol, Query};
use crate::rule::ChoiceRule;
use crate::space::{ProfileIndex, ProfileSet, TypeSpace};

struct SchoolView<'a> {
    schools: &'a [String],
    capacities: &'a [usize],
    prefs: &'a [Vec<Vec<usize>>],
    scores: &'a [Vec<Vec<Rational64>>],
}

fn view(model: &DomainModel) -> Result<SchoolView<'_>> {
    match model {
        DomainModel::School {
            schools,
            capacities,
            prefs,
            scores,
        } => Ok(SchoolView {
            schools,
            capacities,
            prefs,
            scores,
        }),
        _ => input(format!("a school model is required, got {}", model.kind())),
    }
}

/// First blocking pair `(student, school)` of `alloc` at profile `p`:
/// justified envy or a wasted seat.
pub fn blocking_pair(
    model: &DomainModel,
    p: &[usize],
    alloc: &[Option<usize>],
) -> Result<Option<(usize, usize)>> {
    let v = view(model)?;
    let n = p.len();
    for i in 0..n {
        let pref = &v.prefs[i][p[i]];
        let own = rank_of(pref, alloc[i]);
        for &c in &pref[..own.min(pref.len())] {
            let seated: Vec<usize> = (0..n).filter(|&j| alloc[j] == Some(c)).collect();
            let wasted = seated.len() < v.capacities[c];
            let envy = seated
                .iter()
                .any(|&j| v.scores[j][p[j]][c] < v.scores[i][p[i]][c]);
            if wasted || envy {
                return Ok(Some((i, c)));
            }
        }
    }
    Ok(None)
}

fn stable_allocations(model: &DomainModel, p: &[usize]) -> Result<Vec<Vec<Option<usize>>>> {
    let v = view(model)?;
    let mut out = vec![];
    for a in feasible_allocations(p.len(), v.capacities) {
        if blocking_pair(model, p, &a)?.is_none() {
            out.push(a);
        }
    }
    Ok(out)
}

/// Two students, schools `a` and `b` with one seat each, both preferred in
/// that order. Types are scores, equal at both schools; in increasing
/// order they are `s2 < s1' < s2' < s1`.
pub fn two_student_model() -> Result<(TypeSpace, DomainModel)> {
    let space = TypeSpace::uniform(2, &["s2", "s1'", "s2'", "s1"])?;
    let score = |t: i64| vec![Rational64::from_integer(t); 2];
    let model = DomainModel::School {
        schools: vec!["a".into(), "b".into()],
        capacities: vec![1, 1],
        prefs: vec![vec![vec![0, 1]; 4]; 2],
        scores: vec![(1..=4).map(score).collect(); 2],
    };
    model.validate(&space)?;
    Ok((space, model))
}

/// The four profiles on which the two students' scores at `a` are
/// `(s1,s2)`, `(s1',s2)`, `(s1,s2')`, `(s1',s2')`, in that order.
pub fn score_square_profiles(space: &TypeSpace) -> Result<Vec<ProfileIndex>> {
    [["s1", "s2"], ["s1'", "s2"], ["s1", "s2'"], ["s1'", "s2'"]]
        .iter()
        .map(|p| space.parse_profile(p))
        .collect()
}

fn choices(objects: &[String], allocs: &[Vec<Option<usize>>]) -> Vec<(String, Vec<String>)> {
    allocs
        .iter()
        .map(|a| {
            let comps = a
                .iter()
                .map(|o| o.map_or("-".to_string(), |o| objects[o].clone()))
                .collect();
            (allocation_label(objects, a), comps)
        })
        .collect()
}

/// Rules choosing a stable allocation at every profile of `space`.
pub fn stable_family(space: &TypeSpace, model: &DomainModel) -> Result<CompletionFamily> {
    model.validate(space)?;
    let v = view(model)?;
    let options = (0..space.profile_count())
        .map(|k| {
            Ok(choices(
                v.schools,
                &stable_allocations(model, &space.profile_of(k))?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    CompletionFamily::new(space.clone(), options)
}

/// Cutoff data for a common alphabet whose types fix preferences and
/// scores identically for every student.
struct Market<'a> {
    v: SchoolView<'a>,
    levels: Vec<Rational64>,
    /// Cutoff vectors as level indices, by level sum then lexicographically.
    cutoffs: Vec<Vec<usize>>,
}

impl<'a> Market<'a> {
    fn new(space: &TypeSpace, model: &'a DomainModel) -> Result<Self> {
        model.validate(space)?;
        let v = view(model)?;
        if !space.is_common() {
            return input("the cutoff rule requires a common type alphabet");
        }
        if v.prefs.iter().any(|p| p != &v.prefs[0]) || v.scores.iter().any(|s| s != &v.scores[0]) {
            return input("the cutoff rule requires types to mean the same for every student");
        }
        let mut levels: Vec<Rational64> = v.scores[0].iter().flatten().copied().collect();
        levels.sort_unstable();
        levels.dedup();
        let c = v.schools.len();
        let total = levels
            .len()
            .checked_pow(c as u32)
            .filter(|&t| t <= 1 << 20)
            .ok_or_else(|| Error::Resource("too many cutoff vectors".into()))?;
        let mut cutoffs: Vec<Vec<usize>> = (0..total)
            .map(|mut x| {
                let mut s = vec![0; c];
                for d in s.iter_mut().rev() {
                    *d = x % levels.len();
                    x /= levels.len();
                }
                s
            })
            .collect();
        cutoffs.sort_by_key(|s| (s.iter().sum::<usize>(), s.clone()));
        Ok(Market { v, levels, cutoffs })
    }

    fn demand(&self, sigma: &[usize], t: usize) -> Option<usize> {
        self.v.prefs[0][t]
            .iter()
            .copied()
            .find(|&c| self.v.scores[0][t][c] >= self.levels[sigma[c]])
    }

    fn demand_subsets(&self, sigma: &[usize], m: usize) -> Vec<Vec<usize>> {
        (0..self.v.schools.len())
            .map(|c| {
                (0..m)
                    .filter(|&t| self.demand(sigma, t) == Some(c))
                    .collect()
            })
            .collect()
    }

    fn clears_counts(&self, sigma: &[usize], counts: &[usize]) -> bool {
        counts.iter().enumerate().all(|(c, &d)| {
            d <= self.v.capacities[c] && (sigma[c] == 0 || d == self.v.capacities[c])
        })
    }

    fn clears(&self, sigma: &[usize], p: &[usize]) -> bool {
        let mut counts = vec![0; self.v.schools.len()];
        for &t in p {
            if let Some(c) = self.demand(sigma, t) {
                counts[c] += 1;
            }
        }
        self.clears_counts(sigma, &counts)
    }

    fn cutoff_label(&self, sigma: &[usize]) -> String {
        sigma
            .iter()
            .map(|&l| self.levels[l].to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Student-proposing deferred acceptance, score ties to the lower index.
fn deferred_acceptance(v: &SchoolView<'_>, p: &[usize]) -> Vec<Option<usize>> {
    let n = p.len();
    let mut next = vec![0usize; n];
    let mut held: Vec<Vec<usize>> = vec![vec![]; v.schools.len()];
    let mut free: Vec<usize> = (0..n).rev().collect();
    while let Some(i) = free.pop() {
        let pref = &v.prefs[i][p[i]];
        let Some(&c) = pref.get(next[i]) else {
            continue;
        };
        next[i] += 1;
        held[c].push(i);
        held[c].sort_by(|&a, &b| {
            v.scores[b][p[b]][c]
                .cmp(&v.scores[a][p[a]][c])
                .then(a.cmp(&b))
        });
        if held[c].len() > v.capacities[c] {
            free.push(held[c].pop().expect("over capacity"));
        }
    }
    let mut alloc = vec![None; n];
    for (c, hs) in held.iter().enumerate() {
        for &i in hs {
            alloc[i] = Some(c);
        }
    }
    alloc
}

/// Profiles where no two students share a score at any school.
pub fn tie_free_profiles(space: &TypeSpace, model: &DomainModel) -> Result<ProfileSet> {
    let v = view(model)?;
    let n = space.agent_count();
    let set = ProfileSet::from_indices(
        space.profile_count(),
        (0..space.profile_count()).filter(|&k| {
            let p = space.profile_of(k);
            (0..v.schools.len()).all(|c| {
                (0..n).all(|i| (i + 1..n).all(|j| v.scores[i][p[i]][c] != v.scores[j][p[j]][c]))
            })
        }),
    );
    if set.is_empty() {
        return input("no tie-free profiles");
    }
    Ok(set)
}

/// Outcome `allocation|cutoffs=…` for the first market-clearing cutoff
/// vector; each student gets the school they demand there. Profiles with
/// no clearing vector fall back to deferred acceptance with
/// `cutoffs=none`.
pub fn cutoff_stable(space: &TypeSpace, model: &DomainModel) -> Result<ChoiceRule> {
    let market = Market::new(space, model)?;
    ChoiceRule::from_fn_with_components(space.clone(), |p| {
        let (alloc, tag) = match market.cutoffs.iter().find(|s| market.clears(s, p)) {
            Some(sigma) => (
                p.iter()
                    .map(|&t| market.demand(sigma, t))
                    .collect::<Vec<_>>(),
                market.cutoff_label(sigma),
            ),
            None => (deferred_acceptance(&market.v, p), "none".to_string()),
        };
        let comps = alloc
            .iter()
            .map(|o| o.map_or("-".to_string(), |o| market.v.schools[o].clone()))
            .collect();
        (
            format!(
                "{}|cutoffs={tag}",
                allocation_label(market.v.schools, &alloc)
            ),
            comps,
        )
    })
}

/// The two-student instance under the cutoff rule on tie-free profiles.
pub fn cutoff_stable_instance() -> Result<Instance> {
    let (space, model) = two_student_model()?;
    let rule = cutoff_stable(&space, &model)?;
    let domain = tie_free_profiles(&space, &model)?;
    Ok(Instance {
        rule,
        model: Some(model),
        domain: Some(domain),
    })
}

/// For each cutoff vector in order, a multi-count query on per-school
/// demand asks whether the market clears; on yes, each student is asked
/// which school they demand. The counting queries and their children form
/// the phase.
pub fn multicount_stable_matching(
    rule: &ChoiceRule,
    model: &DomainModel,
    domain: &ProfileSet,
) -> Result<BuiltProtocol> {
    let space = rule.space();
    let market = Market::new(space, model)?;
    let n = space.agent_count();
    let m = space.alphabet_len(0);
    let c = market.v.schools.len();
    let vectors: Vec<Vec<usize>> = (0..(n + 1).pow(c as u32))
        .map(|mut x| {
            let mut v = vec![0; c];
            for d in v.iter_mut().rev() {
                *d = x % (n + 1);
                x /= n + 1;
            }
            v
        })
        .collect();
    let clear_set = |sigma: &[usize]| {
        ProfileSet::from_indices(
            space.profile_count(),
            (0..space.profile_count()).filter(|&k| market.clears(sigma, &space.profile_of(k))),
        )
    };
    let next = |label: &ProfileSet| -> Result<Query> {
        let Some((sigma, yes)) = market
            .cutoffs
            .iter()
            .map(|s| (s, clear_set(s)))
            .find(|(_, yes)| !yes.is_disjoint(label))
        else {
            return Err(Error::Internal(
                "a profile clears at no cutoff vector".into(),
            ));
        };
        if !label.is_subset(&yes) {
            let (clear, rest): (Vec<Vec<usize>>, Vec<Vec<usize>>) = vectors
                .iter()
                .cloned()
                .partition(|v| market.clears_counts(sigma, v));
            return Ok(Query::MultiCount {
                subsets: market.demand_subsets(sigma, m),
                cells: vec![clear, rest],
            });
        }
        (0..n)
            .map(|i| {
                let mut cells: Vec<Vec<usize>> = vec![vec![]; c + 1];
                for t in 0..m {
                    cells[market.demand(sigma, t).unwrap_or(c)].push(t);
                }
                cells.retain(|x| !x.is_empty());
                Query::Elicit { agent: i, cells }
            })
            .find(|q| q.cell_count() >= 2 && splits(space, q, label))
            .ok_or_else(|| Error::Internal("demand elicitation ran out of questions".into()))
    };
    let spec = grow(rule, domain, &next)?;
    let protocol = Protocol::build_on(space, domain, &spec)?;
    let mut phase = vec![];
    for id in 0..protocol.node_count() {
        if let Some(Query::MultiCount { .. }) = protocol.node(id).query {
            phase.push(id);
            phase.extend_from_slice(protocol.children(id));
        }
    }
    phase.sort_unstable();
    phase.dedup();
    Ok(BuiltProtocol {
        protocol,
        phase: Some(phase),
    })
}
