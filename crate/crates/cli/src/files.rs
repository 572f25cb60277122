//! Instance and protocol files, schema `cpv-1`.
//!
//! Profiles are written as lists of type labels, agents as 1-based numbers,
//! node references as tree paths (`/tree`, `/tree/0`, ...).

use std::path::Path;

use cpv_core::mechanisms::{builtin_rule, label_values, BuiltProtocol, DomainModel, Instance};
use cpv_core::rule::Components;
use cpv_core::{
    ChoiceRule, NodeId, OutcomeId, ProfileIndex, ProfileSet, Protocol, Query, TreeSpec, TypeSpace,
};
use serde_json::{json, Map, Value};

use crate::doc::{rational_json, Doc};
use crate::error::{CliError, Result};

pub const SCHEMA: &str = "cpv-1";

pub fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse {
        file: path.display().to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("values serialize");
    text.push('\n');
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn check_schema(doc: &Doc<'_>) -> Result<()> {
    let schema = doc.req("schema")?;
    if schema.str()? != SCHEMA {
        return schema.error(format!("unsupported schema, expected {SCHEMA:?}"));
    }
    Ok(())
}

fn profile_of(doc: &Doc<'_>, space: &TypeSpace) -> Result<ProfileIndex> {
    let items = doc.items()?;
    if items.len() != space.agent_count() {
        return doc.error(format!(
            "profile lists {} types, space has {} agents",
            items.len(),
            space.agent_count()
        ));
    }
    let mut coords = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        coords.push(item.lookup(space.alphabet(i), &format!("type for agent {}", i + 1))?);
    }
    Ok(space.index_of(&coords)?)
}

pub fn profile_json(space: &TypeSpace, k: ProfileIndex) -> Value {
    json!(space.profile_labels(k))
}

fn agent_of(doc: &Doc<'_>, n: usize) -> Result<usize> {
    let a = doc.usize()?;
    if a == 0 || a > n {
        return doc.error(format!("agent {a} outside 1..={n}"));
    }
    Ok(a - 1)
}

// Instances

pub fn load_instance(path: &Path) -> Result<Instance> {
    let value = read_json(path)?;
    instance_from_json(&path.display().to_string(), &value)
}

pub fn instance_from_json(file: &str, value: &Value) -> Result<Instance> {
    let doc = Doc::root(file, value);
    check_schema(&doc)?;
    let rule_doc = doc.req("rule")?;
    let mut inst = if let Some(name) = rule_doc.get("builtin")? {
        let params = rule_doc
            .get("params")?
            .map_or(Value::Null, |p| p.value().clone());
        let inst = builtin_rule(name.str()?, &params)?;
        if let Some(types) = doc.get("types")? {
            let declared = space_of(&doc, &types)?;
            if &declared != inst.rule.space() {
                return types.error("types differ from the builtin's type space");
            }
        }
        inst
    } else {
        let space = space_of(&doc, &doc.req("types")?)?;
        Instance::new(table_rule(&doc, &rule_doc, space)?)
    };
    if let Some(model) = doc.get("model")? {
        let parsed = model_from_json(&model, inst.rule.space(), &inst.rule)?;
        if let Err(e) = parsed.validate(inst.rule.space()) {
            return model.error(e.to_string());
        }
        inst.model = Some(parsed);
    }
    if let Some(domain) = doc.get("domain")? {
        let space = inst.rule.space();
        let mut set = ProfileSet::empty(space.profile_count());
        for item in domain.items()? {
            set.insert(profile_of(&item, space)?);
        }
        if set.is_empty() {
            return domain.error("the domain is empty");
        }
        inst.domain = Some(set);
    }
    Ok(inst)
}

fn space_of(doc: &Doc<'_>, types: &Doc<'_>) -> Result<TypeSpace> {
    let alphabets: Vec<Vec<String>> = types
        .items()?
        .iter()
        .map(Doc::strings)
        .collect::<Result<_>>()?;
    if let Some(agents) = doc.get("agents")? {
        if agents.usize()? != alphabets.len() {
            return agents.error(format!(
                "{} agents declared, {} alphabets given",
                agents.usize()?,
                alphabets.len()
            ));
        }
    }
    TypeSpace::new(alphabets).or_else(|e| types.error(e.to_string()))
}

fn table_rule(doc: &Doc<'_>, rule_doc: &Doc<'_>, space: TypeSpace) -> Result<ChoiceRule> {
    let declared = match doc.get("outcomes")? {
        Some(o) => Some(o.strings()?),
        None => None,
    };
    let mut outcomes: Vec<String> = declared.clone().unwrap_or_default();
    let table_doc = rule_doc.req("table")?;
    let rows = table_doc.items()?;
    let n = space.agent_count();
    let mut table: Vec<Option<OutcomeId>> = vec![None; space.profile_count()];
    let mut comp_labels: Vec<Vec<String>> = vec![vec![]; n];
    let mut comp_table: Vec<Vec<OutcomeId>> = vec![vec![0; space.profile_count()]; n];
    let mut with_components: Option<bool> = None;
    for row in &rows {
        let k = profile_of(&row.req("profile")?, &space)?;
        if table[k].is_some() {
            return row.error(format!(
                "profile ({}) appears twice",
                space.profile_labels(k).join(",")
            ));
        }
        let out = row.req("outcome")?;
        let id = match (out.value().as_u64(), &declared) {
            (Some(x), Some(d)) if (x as usize) < d.len() => x as usize,
            (Some(_), _) => return out.error("outcome index needs a matching \"outcomes\" list"),
            (None, Some(d)) => out.lookup(d, "outcome")?,
            (None, None) => {
                let label = out.str()?;
                match outcomes.iter().position(|o| o == label) {
                    Some(x) => x,
                    None => {
                        outcomes.push(label.to_string());
                        outcomes.len() - 1
                    }
                }
            }
        };
        table[k] = Some(id as OutcomeId);
        let comps = row.get("components")?;
        if *with_components.get_or_insert(comps.is_some()) != comps.is_some() {
            return row.error("either every row or no row lists components");
        }
        if let Some(comps) = comps {
            let labels = comps.strings()?;
            if labels.len() != n {
                return comps.error(format!("expected {n} components"));
            }
            for (i, label) in labels.into_iter().enumerate() {
                let id = match comp_labels[i].iter().position(|l| *l == label) {
                    Some(x) => x,
                    None => {
                        comp_labels[i].push(label);
                        comp_labels[i].len() - 1
                    }
                };
                comp_table[i][k] = id as OutcomeId;
            }
        }
    }
    if let Some(k) = table.iter().position(Option::is_none) {
        return table_doc.error(format!(
            "no row for profile ({})",
            space.profile_labels(k).join(",")
        ));
    }
    let table = table.into_iter().map(|x| x.expect("total")).collect();
    let rule =
        ChoiceRule::new(space, outcomes, table).or_else(|e| rule_doc.error(e.to_string()))?;
    if with_components == Some(true) {
        return rule
            .with_components(Components::new(comp_labels, comp_table))
            .or_else(|e| table_doc.error(e.to_string()));
    }
    Ok(rule)
}

fn per_agent_type<T>(
    doc: &Doc<'_>,
    space: &TypeSpace,
    mut f: impl FnMut(&Doc<'_>, usize) -> Result<T>,
) -> Result<Vec<Vec<T>>> {
    let agents = doc.items()?;
    if agents.len() != space.agent_count() {
        return doc.error(format!(
            "expected one entry per agent ({})",
            space.agent_count()
        ));
    }
    agents
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let types = a.items()?;
            if types.len() != space.alphabet_len(i) {
                return a.error(format!("expected one entry per type of agent {}", i + 1));
            }
            types.iter().map(|t| f(t, i)).collect()
        })
        .collect()
}

fn label_list(doc: &Doc<'_>, labels: &[String], what: &str) -> Result<Vec<usize>> {
    doc.items()?
        .iter()
        .map(|x| x.lookup(labels, what))
        .collect()
}

fn model_from_json(doc: &Doc<'_>, space: &TypeSpace, rule: &ChoiceRule) -> Result<DomainModel> {
    let kind = doc.req("kind")?;
    let values = |doc: &Doc<'_>| -> Result<_> {
        match doc.get("values")? {
            Some(v) => per_agent_type(&v, space, |d, _| d.rational()),
            None => Ok(label_values(space)),
        }
    };
    let n = space.agent_count();
    Ok(match kind.str()? {
        "auction" => DomainModel::Auction {
            values: values(doc)?,
        },
        "double_auction" => {
            let listed: Vec<usize> = match doc.get("sellers")? {
                Some(s) => s
                    .items()?
                    .iter()
                    .map(|a| agent_of(a, n))
                    .collect::<Result<_>>()?,
                None => (n / 2..n).collect(),
            };
            DomainModel::DoubleAuction {
                values: values(doc)?,
                sellers: (0..n).map(|i| listed.contains(&i)).collect(),
            }
        }
        "assignment" | "house" => {
            let objects = doc.req("objects")?.strings()?;
            let prefs = per_agent_type(&doc.req("prefs")?, space, |d, _| {
                label_list(d, &objects, "object")
            })?;
            if kind.str()? == "assignment" {
                DomainModel::Assignment { objects, prefs }
            } else {
                let endowment = label_list(&doc.req("endowment")?, &objects, "object")?;
                DomainModel::House {
                    objects,
                    prefs,
                    endowment,
                }
            }
        }
        "school" => {
            let schools = doc.req("schools")?.strings()?;
            let prefs = per_agent_type(&doc.req("prefs")?, space, |d, _| {
                label_list(d, &schools, "school")
            })?;
            let scores = per_agent_type(&doc.req("scores")?, space, |d, _| {
                d.items()?.iter().map(Doc::rational).collect()
            })?;
            DomainModel::School {
                capacities: doc.req("capacities")?.usizes()?,
                schools,
                prefs,
                scores,
            }
        }
        "outcomes" => {
            let ranks = per_agent_type(&doc.req("ranks")?, space, |d, _| {
                let labels = d.strings()?;
                if let Some(bad) = labels.iter().find(|l| rule.outcome_id(l).is_none()) {
                    return d.error(format!("unknown outcome {bad:?}"));
                }
                Ok(labels)
            })?;
            DomainModel::Outcomes { ranks }
        }
        other => return kind.error(format!("unknown model kind {other:?}")),
    })
}

fn model_to_json(model: &DomainModel) -> Value {
    let rationals = |v: &Vec<Vec<num_rational::Rational64>>| -> Value {
        v.iter()
            .map(|row| row.iter().copied().map(rational_json).collect::<Vec<_>>())
            .collect::<Vec<_>>()
            .into()
    };
    let named = |prefs: &Vec<Vec<Vec<usize>>>, labels: &[String]| -> Value {
        json!(prefs
            .iter()
            .map(|agent| agent
                .iter()
                .map(|list| list.iter().map(|&o| labels[o].clone()).collect::<Vec<_>>())
                .collect::<Vec<_>>())
            .collect::<Vec<_>>())
    };
    match model {
        DomainModel::Auction { values } => {
            json!({ "kind": "auction", "values": rationals(values) })
        }
        DomainModel::DoubleAuction { values, sellers } => json!({
            "kind": "double_auction",
            "values": rationals(values),
            "sellers": (0..sellers.len()).filter(|&i| sellers[i]).map(|i| i + 1).collect::<Vec<_>>(),
        }),
        DomainModel::Assignment { objects, prefs } => json!({
            "kind": "assignment",
            "objects": objects,
            "prefs": named(prefs, objects),
        }),
        DomainModel::House {
            objects,
            prefs,
            endowment,
        } => json!({
            "kind": "house",
            "objects": objects,
            "prefs": named(prefs, objects),
            "endowment": endowment.iter().map(|&o| objects[o].clone()).collect::<Vec<_>>(),
        }),
        DomainModel::School {
            schools,
            capacities,
            prefs,
            scores,
        } => json!({
            "kind": "school",
            "schools": schools,
            "capacities": capacities,
            "prefs": named(prefs, schools),
            "scores": scores
                .iter()
                .map(|agent| agent.iter().map(|t| t.iter().copied().map(rational_json).collect::<Vec<_>>()).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        }),
        DomainModel::Outcomes { ranks } => json!({ "kind": "outcomes", "ranks": ranks }),
    }
}

/// The instance with its rule written out as a table.
pub fn instance_to_json(inst: &Instance) -> Value {
    let rule = &inst.rule;
    let space = rule.space();
    let rows: Vec<Value> = (0..space.profile_count())
        .map(|k| {
            let mut row = Map::new();
            row.insert("profile".into(), profile_json(space, k));
            row.insert("outcome".into(), json!(rule.outcome_label(rule.outcome(k))));
            if let Some(c) = rule.components() {
                let parts: Vec<&str> = (0..space.agent_count())
                    .map(|i| c.label(i, rule.component(i, k).expect("components present")))
                    .collect();
                row.insert("components".into(), json!(parts));
            }
            Value::Object(row)
        })
        .collect();
    let mut out = Map::new();
    out.insert("schema".into(), json!(SCHEMA));
    out.insert("agents".into(), json!(space.agent_count()));
    out.insert("types".into(), json!(space.alphabets()));
    out.insert("outcomes".into(), json!(rule.outcome_labels()));
    out.insert("rule".into(), json!({ "table": rows }));
    if let Some(model) = &inst.model {
        out.insert("model".into(), model_to_json(model));
    }
    if let Some(domain) = &inst.domain {
        out.insert(
            "domain".into(),
            domain
                .iter()
                .map(|k| profile_json(space, k))
                .collect::<Vec<_>>()
                .into(),
        );
    }
    Value::Object(out)
}

// Protocols

/// A protocol over the instance's domain, with the phase named in its file.
pub struct LoadedProtocol {
    pub protocol: Protocol,
    pub phase: Option<Vec<NodeId>>,
}

pub fn load_protocol(path: &Path, inst: &Instance) -> Result<LoadedProtocol> {
    let value = read_json(path)?;
    protocol_from_json(&path.display().to_string(), &value, inst)
}

pub fn protocol_from_json(file: &str, value: &Value, inst: &Instance) -> Result<LoadedProtocol> {
    let doc = Doc::root(file, value);
    check_schema(&doc)?;
    let space = inst.rule.space();
    let spec = tree_from_json(&doc.req("tree")?, space)?;
    let protocol = Protocol::build_on(space, &inst.domain(), &spec)?;
    let report = protocol.validate();
    if !report.is_ok() {
        return Err(CliError::Defects {
            file: file.to_string(),
            defects: report.defects.iter().map(ToString::to_string).collect(),
        });
    }
    let phase = match doc.get("phase")? {
        None => None,
        Some(list) => Some(
            list.items()?
                .iter()
                .map(|item| node_ref(item, &protocol))
                .collect::<Result<Vec<_>>>()?,
        ),
    };
    Ok(LoadedProtocol { protocol, phase })
}

/// A node given by tree path or by id.
fn node_ref(doc: &Doc<'_>, p: &Protocol) -> Result<NodeId> {
    if let Some(id) = doc.value().as_u64() {
        return match (id as usize) < p.node_count() {
            true => Ok(id as usize),
            false => doc.error(format!("node {id} is not in the protocol")),
        };
    }
    let path = doc.str()?;
    p.find_path(path)
        .map_or_else(|| doc.error(format!("no node at path {path}")), Ok)
}

pub fn parse_node_refs(refs: &[String], p: &Protocol) -> Result<Vec<NodeId>> {
    refs.iter()
        .map(|r| match r.parse::<usize>() {
            Ok(id) if id < p.node_count() => Ok(id),
            _ => p
                .find_path(r)
                .ok_or_else(|| CliError::Usage(format!("no node {r} in the protocol"))),
        })
        .collect()
}

fn type_cells(doc: &Doc<'_>, alphabet: &[String]) -> Result<Vec<Vec<usize>>> {
    doc.items()?
        .iter()
        .map(|cell| label_list(cell, alphabet, "type"))
        .collect()
}

fn query_from_json(doc: &Doc<'_>, space: &TypeSpace) -> Result<Query> {
    let kind = doc.req("kind")?;
    let common = |d: &Doc<'_>| -> Result<()> {
        if !space.is_common() {
            return d.error("count queries require a common type alphabet");
        }
        Ok(())
    };
    let query = match kind.str()? {
        "elicit" => {
            let agent = agent_of(&doc.req("agent")?, space.agent_count())?;
            Query::Elicit {
                agent,
                cells: type_cells(&doc.req("cells")?, space.alphabet(agent))?,
            }
        }
        "count" => {
            common(doc)?;
            Query::Count {
                subset: label_list(&doc.req("subset")?, space.alphabet(0), "type")?,
                cells: doc
                    .req("cells")?
                    .items()?
                    .iter()
                    .map(Doc::usizes)
                    .collect::<Result<_>>()?,
            }
        }
        "multicount" => {
            common(doc)?;
            Query::MultiCount {
                subsets: type_cells(&doc.req("subsets")?, space.alphabet(0))?,
                cells: doc
                    .req("cells")?
                    .items()?
                    .iter()
                    .map(|cell| cell.items()?.iter().map(Doc::usizes).collect())
                    .collect::<Result<_>>()?,
            }
        }
        "extensional" => {
            let mut cells = vec![];
            for cell in doc.req("cells")?.items()? {
                let mut set = ProfileSet::empty(space.profile_count());
                for item in cell.items()? {
                    set.insert(profile_of(&item, space)?);
                }
                cells.push(set);
            }
            Query::Extensional { cells }
        }
        other => return kind.error(format!("unknown query kind {other:?}")),
    };
    if query.cell_count() < 2 {
        return doc.error("a query needs at least two cells");
    }
    query.check(space).or_else(|e| doc.error(e.to_string()))?;
    Ok(query)
}

fn tree_from_json(doc: &Doc<'_>, space: &TypeSpace) -> Result<TreeSpec> {
    let Some(query) = doc.get("query")? else {
        if doc.get("children")?.is_some() {
            return doc.error("children without a query");
        }
        return Ok(TreeSpec::Leaf);
    };
    let query = query_from_json(&query, space)?;
    let children_doc = doc.req("children")?;
    let children = children_doc.items()?;
    if children.len() != query.cell_count() {
        return children_doc.error(format!(
            "{} children for {} cells",
            children.len(),
            query.cell_count()
        ));
    }
    let children = children
        .iter()
        .map(|c| tree_from_json(c, space))
        .collect::<Result<Vec<_>>>()?;
    Ok(TreeSpec::node(query, children))
}

fn query_to_json(q: &Query, space: &TypeSpace) -> Value {
    let names = |agent: usize, ts: &[usize]| -> Vec<String> {
        ts.iter()
            .map(|&t| space.alphabet(agent)[t].clone())
            .collect()
    };
    match q {
        Query::Elicit { agent, cells } => json!({
            "kind": "elicit",
            "agent": agent + 1,
            "cells": cells.iter().map(|c| names(*agent, c)).collect::<Vec<_>>(),
        }),
        Query::Count { subset, cells } => json!({
            "kind": "count",
            "subset": names(0, subset),
            "cells": cells,
        }),
        Query::MultiCount { subsets, cells } => json!({
            "kind": "multicount",
            "subsets": subsets.iter().map(|s| names(0, s)).collect::<Vec<_>>(),
            "cells": cells,
        }),
        Query::Extensional { cells } => json!({
            "kind": "extensional",
            "cells": cells
                .iter()
                .map(|c| c.iter().map(|k| profile_json(space, k)).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        }),
    }
}

fn tree_to_json(spec: &TreeSpec, space: &TypeSpace) -> Value {
    match spec {
        TreeSpec::Leaf => json!({}),
        TreeSpec::Node { query, children } => json!({
            "query": query_to_json(query, space),
            "children": children.iter().map(|c| tree_to_json(c, space)).collect::<Vec<_>>(),
        }),
    }
}

/// The protocol file for `p`. Contracted queries are not written, so paths
/// below them change on reload; phase paths are taken from the reloaded tree.
/// Node ids are stable because building assigns them in the same preorder.
pub fn protocol_to_json(p: &Protocol, phase: Option<&[NodeId]>) -> Value {
    let spec = p.to_spec();
    let mut out = Map::new();
    out.insert("schema".into(), json!(SCHEMA));
    out.insert("tree".into(), tree_to_json(&spec, p.space()));
    if let Some(phase) = phase {
        let reloaded =
            Protocol::build_on(p.space(), p.domain(), &spec).expect("a built tree rebuilds");
        debug_assert!((0..p.node_count()).all(|v| reloaded.label(v) == p.label(v)));
        let paths: Vec<Value> = phase
            .iter()
            .map(|&v| json!(reloaded.node(v).path))
            .collect();
        out.insert("phase".into(), paths.into());
    }
    Value::Object(out)
}

pub fn built_protocol_to_json(built: &BuiltProtocol) -> Value {
    protocol_to_json(&built.protocol, built.phase.as_deref())
}

/// Labels keyed by profile, for parsing `run --profile`.
pub fn parse_profile_arg(arg: &str, space: &TypeSpace) -> Result<ProfileIndex> {
    let labels: Vec<&str> = arg.split(',').map(str::trim).collect();
    space
        .parse_profile(&labels)
        .map_err(|e| CliError::Usage(format!("--profile {arg:?}: {e}")))
}
