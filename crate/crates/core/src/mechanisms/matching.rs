//! Object assignment without money: serial dictatorship, the tie-breaking
//! examples, house allocation with endowments, and small outcome-ranked
//! instances.

use super::family::CompletionFamily;
use super::{
    allocation_label, feasible_allocations, grow, rank_of, splits, BuiltProtocol, DomainModel,
    Instance,
};
use crate::error::{input, Error, Result};
use crate::protocol::{Protocol, Query, TreeSpec};
use crate::rule::ChoiceRule;
use crate::space::{ProfileSet, TypeSpace};

/// All strict orders of `objects`, labelled `"a>b>c"`, in lexicographic
/// order of object positions.
pub fn permutation_types(objects: &[String]) -> Vec<(String, Vec<usize>)> {
    let m = objects.len();
    let mut perm: Vec<usize> = (0..m).collect();
    let mut out = vec![];
    loop {
        let label = perm
            .iter()
            .map(|&o| objects[o].as_str())
            .collect::<Vec<_>>()
            .join(">");
        out.push((label, perm.clone()));
        // next permutation
        let Some(i) = (1..m).rev().find(|&i| perm[i - 1] < perm[i]) else {
            break;
        };
        let j = (i..m)
            .rev()
            .find(|&j| perm[j] > perm[i - 1])
            .expect("successor exists");
        perm.swap(i - 1, j);
        perm[i..].reverse();
    }
    out
}

/// Object-preference types given as `"a>b"` strings, one list per agent.
fn parse_pref_types(objects: &[String], alphabets: &[Vec<String>]) -> Result<Vec<Vec<Vec<usize>>>> {
    alphabets
        .iter()
        .map(|alpha| {
            alpha
                .iter()
                .map(|label| {
                    label
                        .split('>')
                        .map(|o| {
                            objects.iter().position(|x| x == o.trim()).map_or_else(
                                || input(format!("type {label:?} names an unknown object")),
                                Ok,
                            )
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// An assignment instance whose types are preference orders over `objects`.
pub fn assignment_model(
    objects: &[String],
    alphabets: &[Vec<String>],
) -> Result<(TypeSpace, DomainModel)> {
    let space = TypeSpace::new(alphabets.to_vec())?;
    let prefs = parse_pref_types(objects, alphabets)?;
    let model = DomainModel::Assignment {
        objects: objects.to_vec(),
        prefs,
    };
    model.validate(&space)?;
    Ok((space, model))
}

fn allocation_rule(
    space: &TypeSpace,
    objects: &[String],
    f: impl Fn(&[usize]) -> Vec<Option<usize>>,
) -> Result<ChoiceRule> {
    ChoiceRule::from_fn_with_components(space.clone(), |p| {
        let alloc = f(p);
        let comps = alloc
            .iter()
            .map(|o| o.map_or("-".to_string(), |o| objects[o].clone()))
            .collect();
        (allocation_label(objects, &alloc), comps)
    })
}

fn prefs_of(model: &DomainModel) -> Result<(&[String], &Vec<Vec<Vec<usize>>>)> {
    match model {
        DomainModel::Assignment { objects, prefs } | DomainModel::House { objects, prefs, .. } => {
            Ok((objects, prefs))
        }
        _ => input(format!(
            "an assignment model is required, got {}",
            model.kind()
        )),
    }
}

fn favorite(pref: &[usize], taken: &[bool]) -> Option<usize> {
    pref.iter().copied().find(|&o| !taken[o])
}

fn sd_allocation(
    prefs: &[Vec<Vec<usize>>],
    order: &[usize],
    m: usize,
    p: &[usize],
) -> Vec<Option<usize>> {
    let mut taken = vec![false; m];
    let mut alloc = vec![None; p.len()];
    for &i in order {
        if let Some(o) = favorite(&prefs[i][p[i]], &taken) {
            taken[o] = true;
            alloc[i] = Some(o);
        }
    }
    alloc
}

fn check_order(order: &[usize], n: usize) -> Result<()> {
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..n).collect::<Vec<_>>() {
        return input(format!(
            "dictator order must list each of the {n} agents once"
        ));
    }
    Ok(())
}

/// Agents pick their favorite remaining object in `order`.
pub fn serial_dictatorship(
    space: &TypeSpace,
    model: &DomainModel,
    order: &[usize],
) -> Result<ChoiceRule> {
    let (objects, prefs) = prefs_of(model)?;
    check_order(order, space.agent_count())?;
    allocation_rule(space, objects, |p| {
        sd_allocation(prefs, order, objects.len(), p)
    })
}

/// Asks each agent in `order` for their favorite remaining object.
pub fn serial_dictatorship_protocol(
    rule: &ChoiceRule,
    model: &DomainModel,
    order: &[usize],
) -> Result<BuiltProtocol> {
    let (objects, prefs) = prefs_of(model)?;
    check_order(order, rule.space().agent_count())?;
    let space = rule.space();
    let m = objects.len();
    let next = |label: &ProfileSet| -> Result<Query> {
        let first = label
            .first()
            .ok_or_else(|| Error::Internal("empty label".into()))?;
        let p = space.profile_of(first);
        let mut taken = vec![false; m];
        for &i in order {
            // group types by pick, objects in index order, no object last
            let mut cells: Vec<Vec<usize>> = vec![vec![]; m + 1];
            for t in 0..space.alphabet_len(i) {
                cells[favorite(&prefs[i][t], &taken).unwrap_or(m)].push(t);
            }
            cells.retain(|c| !c.is_empty());
            let q = Query::Elicit { agent: i, cells };
            if q.cell_count() >= 2 && splits(space, &q, label) {
                return Ok(q);
            }
            // pick is fixed on this label
            if let Some(o) = favorite(&prefs[i][p[i]], &taken) {
                taken[o] = true;
            }
        }
        Err(Error::Internal(
            "serial dictatorship ran out of questions".into(),
        ))
    };
    let spec = grow(rule, &space.full_set(), &next)?;
    Ok(BuiltProtocol {
        protocol: Protocol::build(space, &spec)?,
        phase: None,
    })
}

/// Pareto-optimal allocations among those in `candidates`, under the
/// object preferences of profile `p`.
pub fn pareto_optimal(
    prefs: &[Vec<Vec<usize>>],
    p: &[usize],
    candidates: &[Vec<Option<usize>>],
) -> Vec<Vec<Option<usize>>> {
    let ranks: Vec<Vec<usize>> = candidates
        .iter()
        .map(|a| {
            (0..p.len())
                .map(|i| rank_of(&prefs[i][p[i]], a[i]))
                .collect()
        })
        .collect();
    let dominates = |x: &[usize], y: &[usize]| x.iter().zip(y).all(|(a, b)| a <= b) && x != y;
    candidates
        .iter()
        .enumerate()
        .filter(|(k, _)| !ranks.iter().any(|r| dominates(r, &ranks[*k])))
        .map(|(_, a)| a.clone())
        .collect()
}

fn two_by_two() -> Result<(TypeSpace, DomainModel)> {
    let objects = vec!["A".to_string(), "B".to_string()];
    let space = TypeSpace::uniform(2, &["A", "B"])?;
    let model = DomainModel::Assignment {
        objects,
        prefs: vec![vec![vec![0, 1], vec![1, 0]]; 2],
    };
    Ok((space, model))
}

/// Two agents, two objects, types name the preferred object. Both
/// objects are always assigned.
pub fn efficient_assignment_family() -> Result<(CompletionFamily, DomainModel)> {
    let (space, model) = two_by_two()?;
    let (objects, prefs) = prefs_of(&model)?;
    let full: Vec<Vec<Option<usize>>> = feasible_allocations(2, &[1, 1])
        .into_iter()
        .filter(|a| a.iter().all(Option::is_some))
        .collect();
    let options = (0..space.profile_count())
        .map(|k| {
            let p = space.profile_of(k);
            pareto_optimal(prefs, &p, &full)
                .iter()
                .map(|a| {
                    let comps = a.iter().map(|o| objects[o.unwrap()].clone()).collect();
                    (allocation_label(objects, a), comps)
                })
                .collect()
        })
        .collect();
    Ok((CompletionFamily::new(space, options)?, model))
}

/// Favorites honored; the tie on A goes to agent 1, the tie on B to agent 2.
pub fn fair_tiebreak() -> Result<Instance> {
    let (space, model) = two_by_two()?;
    let (objects, _) = prefs_of(&model)?;
    let rule = allocation_rule(&space, objects, |p| match p {
        [1, 0] => vec![Some(1), Some(0)],
        _ => vec![Some(0), Some(1)],
    })?;
    Ok(Instance {
        rule,
        model: Some(model),
        domain: None,
    })
}

fn is_a(space: &TypeSpace, agent: usize) -> Query {
    Query::binary_elicit(space, agent, &[0])
}

/// Asks agent 1 whether their type is A, then agent 2 the same on both
/// branches.
pub fn fair_elicitation(rule: &ChoiceRule) -> Result<BuiltProtocol> {
    let space = rule.space();
    let second = || TreeSpec::node(is_a(space, 1), vec![TreeSpec::Leaf, TreeSpec::Leaf]);
    let spec = TreeSpec::node(is_a(space, 0), vec![second(), second()]);
    Ok(BuiltProtocol {
        protocol: Protocol::build(space, &spec)?,
        phase: None,
    })
}

/// Asks agent 2 only after agent 1 answered B.
pub fn fair_elicitation_one_branch(rule: &ChoiceRule) -> Result<BuiltProtocol> {
    let space = rule.space();
    let spec = TreeSpec::node(
        is_a(space, 0),
        vec![
            TreeSpec::Leaf,
            TreeSpec::node(is_a(space, 1), vec![TreeSpec::Leaf, TreeSpec::Leaf]),
        ],
    );
    Ok(BuiltProtocol {
        protocol: Protocol::build(space, &spec)?,
        phase: None,
    })
}

/// Three types per agent; outcome `x` on four cells, a distinct outcome
/// elsewhere. Agent 2 has a single inseparability class while agent 1
/// has two.
pub fn inseparable_corner_instance() -> Result<ChoiceRule> {
    let space = TypeSpace::uniform(2, &["θ1", "θ2", "θ3"])?;
    let x_cells = [(2, 0), (2, 1), (0, 1), (0, 2)];
    Ok(ChoiceRule::from_fn(space, |p| {
        if x_cells.contains(&(p[0], p[1])) {
            "x".to_string()
        } else {
            format!("y{}{}", p[0] + 1, p[1] + 1)
        }
    }))
}

/// Two relevant agents swapping endowments `a` and `b`; an optional third
/// agent always prefers and keeps `c`.
pub fn house_model(n: usize) -> Result<(TypeSpace, DomainModel)> {
    let (objects, alphabets): (Vec<String>, Vec<Vec<String>>) = match n {
        2 => (
            vec!["a".into(), "b".into()],
            vec![
                vec!["a>b".into(), "b>a".into()],
                vec!["b>a".into(), "a>b".into()],
            ],
        ),
        3 => (
            vec!["a".into(), "b".into(), "c".into()],
            vec![
                vec!["a>b>c".into(), "b>a>c".into()],
                vec!["b>a>c".into(), "a>b>c".into()],
                vec!["c>a>b".into()],
            ],
        ),
        _ => return input(format!("the house instance has 2 or 3 agents, not {n}")),
    };
    let space = TypeSpace::new(alphabets.clone())?;
    let prefs = parse_pref_types(&objects, &alphabets)?;
    let model = DomainModel::House {
        objects,
        prefs,
        endowment: (0..n).collect(),
    };
    model.validate(&space)?;
    Ok((space, model))
}

/// Rules choosing an individually rational, Pareto-efficient full
/// allocation at every profile.
pub fn house_ir_efficient_family(n: usize) -> Result<(CompletionFamily, DomainModel)> {
    let (space, model) = house_model(n)?;
    let DomainModel::House {
        objects,
        prefs,
        endowment,
    } = &model
    else {
        unreachable!()
    };
    let full: Vec<Vec<Option<usize>>> = feasible_allocations(n, &vec![1; n])
        .into_iter()
        .filter(|a| a.iter().all(Option::is_some))
        .collect();
    let options = (0..space.profile_count())
        .map(|k| {
            let p = space.profile_of(k);
            let ir: Vec<Vec<Option<usize>>> = full
                .iter()
                .filter(|a| {
                    (0..n).all(|i| {
                        rank_of(&prefs[i][p[i]], a[i])
                            <= rank_of(&prefs[i][p[i]], Some(endowment[i]))
                    })
                })
                .cloned()
                .collect();
            pareto_optimal(prefs, &p, &ir)
                .iter()
                .map(|a| {
                    let comps = a.iter().map(|o| objects[o.unwrap()].clone()).collect();
                    (allocation_label(objects, a), comps)
                })
                .collect()
        })
        .collect();
    Ok((CompletionFamily::new(space, options)?, model))
}

/// Everyone keeps their endowment.
pub fn keep_endowments(n: usize) -> Result<Instance> {
    let (space, model) = house_model(n)?;
    let DomainModel::House {
        objects, endowment, ..
    } = &model
    else {
        unreachable!()
    };
    let rule = allocation_rule(&space, objects, |_| {
        endowment.iter().map(|&o| Some(o)).collect()
    })?;
    Ok(Instance {
        rule,
        model: Some(model),
        domain: None,
    })
}

/// Two agents with a low and a high type, a distinct outcome per profile,
/// and preferences under which the rule is strategyproof yet no
/// elicitation order makes truth-telling obviously dominant.
pub fn non_clinching() -> Result<Instance> {
    let space = TypeSpace::uniform(2, &["lo", "hi"])?;
    let rule = ChoiceRule::from_fn(space, |p| format!("x{}", 1 + 2 * p[0] + p[1]));
    let r = |xs: [usize; 4]| xs.iter().map(|x| format!("x{x}")).collect::<Vec<_>>();
    let ranks = vec![
        vec![r([1, 3, 2, 4]), r([4, 2, 3, 1])],
        vec![r([1, 2, 3, 4]), r([4, 3, 2, 1])],
    ];
    Ok(Instance {
        rule,
        model: Some(DomainModel::Outcomes { ranks }),
        domain: None,
    })
}
