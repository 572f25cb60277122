//! JSON renderings of verdicts. Agents are numbered from 1, profiles are
//! label lists, nodes are tree paths. Maps serialize with sorted keys, and
//! no report carries timings, so equal inputs give byte-identical output.

use cpv_core::mechanisms::{OspFailure, PropertyViolation};
use cpv_core::privacy::{BossyViolation, CornersViolation, CpVerdict, GcpViolation};
use cpv_core::protocol::{Implementation, Transcript};
use cpv_core::search::SearchReport;
use cpv_core::tatonnement::{Phase, TatonnementVerdict};
use cpv_core::{
    ChoiceRule, NodeId, OutcomeId, ProductSet, ProfileIndex, ProfileSet, Protocol, TypeSpace,
};
use serde_json::{json, Value};

pub struct Render<'a> {
    pub rule: &'a ChoiceRule,
    pub protocol: Option<&'a Protocol>,
}

impl<'a> Render<'a> {
    fn space(&self) -> &'a TypeSpace {
        self.rule.space()
    }

    pub fn profile(&self, k: ProfileIndex) -> Value {
        json!(self.space().profile_labels(k))
    }

    pub fn profiles(&self, set: &ProfileSet) -> Value {
        set.iter()
            .map(|k| self.profile(k))
            .collect::<Vec<_>>()
            .into()
    }

    pub fn outcome(&self, x: OutcomeId) -> Value {
        json!(self.rule.outcome_label(x))
    }

    pub fn node(&self, v: NodeId) -> Value {
        match self.protocol {
            Some(p) => json!(p.node(v).path),
            None => json!(v),
        }
    }

    fn type_label(&self, agent: usize, t: usize) -> Value {
        json!(self.space().alphabet(agent)[t])
    }

    pub fn product(&self, set: &ProductSet) -> Value {
        json!(set.labels(self.space()))
    }

    pub fn implementation(&self, imp: &Implementation) -> Value {
        match imp {
            Implementation::Implements => json!({ "implements": true }),
            Implementation::Counterexample {
                leaf,
                first,
                second,
            } => json!({
                "implements": false,
                "leaf": self.node(*leaf),
                "profiles": [self.profile(*first), self.profile(*second)],
                "outcomes": [
                    self.outcome(self.rule.outcome(*first)),
                    self.outcome(self.rule.outcome(*second)),
                ],
            }),
        }
    }

    /// `component` selects component labels instead of outcome labels.
    pub fn cp(&self, verdict: &CpVerdict, component: bool) -> Value {
        let violations: Vec<Value> = verdict
            .violations
            .iter()
            .map(|v| {
                let shared = match (component, self.rule.components()) {
                    (true, Some(c)) => json!(c.label(v.agent, v.outcome)),
                    _ => self.outcome(v.outcome),
                };
                json!({
                    "agent": v.agent + 1,
                    "types": [self.type_label(v.agent, v.type_a), self.type_label(v.agent, v.type_b)],
                    "profiles": [self.profile(v.profile_a), self.profile(v.profile_b)],
                    "leaves": [self.node(v.leaf_a), self.node(v.leaf_b)],
                    if component { "component" } else { "outcome" }: shared,
                })
            })
            .collect();
        json!({ "holds": verdict.holds(), "violations": violations })
    }

    pub fn gcp(&self, v: &Option<GcpViolation>) -> Value {
        json!({
            "holds": v.is_none(),
            "violation": v.as_ref().map(|v| json!({
                "node": self.node(v.node),
                "profiles": [self.profile(v.profile_a), self.profile(v.profile_b)],
                "outcome": self.outcome(v.outcome),
            })),
        })
    }

    pub fn phase(&self, phase: &Phase) -> Value {
        json!({
            "nodes": phase.nodes.iter().map(|&v| self.node(v)).collect::<Vec<_>>(),
            "end": phase.end.iter().map(|&v| self.node(v)).collect::<Vec<_>>(),
            "initial": phase.initial,
        })
    }

    pub fn tatonnement(&self, t: &TatonnementVerdict, source: &str) -> Value {
        json!({
            "holds": t.holds(),
            "phase": self.phase(&t.phase),
            "phase_source": source,
            "end_overlap": t.end_overlap.as_ref().map(|o| json!({
                "nodes": [self.node(o.first), self.node(o.second)],
                "outcome": self.outcome(o.outcome),
            })),
            "subtree_violation": t.subtree_violation.as_ref().map(|(end, v)| json!({
                "end": self.node(*end),
                "violation": self.cp(&CpVerdict { violations: vec![v.clone()] }, false)["violations"][0].clone(),
            })),
        })
    }

    pub fn corners(&self, v: &Option<CornersViolation>) -> Value {
        json!({
            "holds": v.is_none(),
            "violation": v.as_ref().map(|v| json!({
                "agents": [v.agents.0 + 1, v.agents.1 + 1],
                "corners": v.corners.iter().map(|&k| self.profile(k)).collect::<Vec<_>>(),
                "shared": self.outcome(v.shared),
                "odd": self.profile(v.odd),
            })),
        })
    }

    pub fn nonbossy(&self, v: &Option<BossyViolation>) -> Value {
        json!({
            "holds": v.is_none(),
            "violation": v.as_ref().map(|v| json!({
                "agent": v.agent + 1,
                "types": [self.type_label(v.agent, v.type_a), self.type_label(v.agent, v.type_b)],
                "profiles": [self.profile(v.profile_a), self.profile(v.profile_b)],
                "affected": v.other + 1,
            })),
        })
    }

    pub fn property(&self, v: &Option<PropertyViolation>) -> Value {
        json!({
            "holds": v.is_none(),
            "violation": v.as_ref().map(|v| json!({
                "profile": self.profile(v.profile),
                "outcome": self.outcome(self.rule.outcome(v.profile)),
                "deviation": v.deviation.map(|k| self.profile(k)),
                "agent": v.agent.map(|i| i + 1),
                "detail": v.detail,
            })),
        })
    }

    pub fn osp(&self, v: &Option<OspFailure>) -> Value {
        json!({
            "holds": v.is_none(),
            "violation": v.as_ref().map(|v| json!({
                "node": self.node(v.node),
                "agent": v.agent + 1,
                "type": self.type_label(v.agent, v.true_type),
                "truthful_child": self.node(v.truthful_child),
                "deviation_child": self.node(v.deviation_child),
            })),
        })
    }

    pub fn transcript(&self, t: &Transcript) -> Value {
        json!({
            "profile": self.profile(t.profile),
            "steps": t.steps.iter().map(|s| json!({
                "node": self.node(s.node),
                "query": s.query,
                "cell": s.cell,
                "child": self.node(s.child),
            })).collect::<Vec<_>>(),
            "leaf": self.node(t.leaf),
            "label": self.profiles(&t.label),
            "outcome": t.outcome.map(|x| self.outcome(x)),
        })
    }

    pub fn search(&self, r: &SearchReport) -> Value {
        json!({ "verdict": r.verdict(), "states": r.states })
    }
}

/// Human-readable rendering: nested `key: value` lines.
pub fn pretty(value: &Value) -> String {
    let mut out = String::new();
    write_pretty(value, 0, &mut out);
    out
}

fn scalar(value: &Value) -> Option<String> {
    match value {
        Value::Null => Some("-".into()),
        Value::String(s) => Some(s.clone()),
        Value::Bool(_) | Value::Number(_) => Some(value.to_string()),
        Value::Array(items) if items.iter().all(|v| !v.is_object()) => {
            let parts: Vec<String> = items
                .iter()
                .map(|v| scalar(v).expect("not an object"))
                .collect();
            Some(format!("({})", parts.join(", ")))
        }
        _ => None,
    }
}

fn write_pretty(value: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                match scalar(v) {
                    Some(s) => out.push_str(&format!("{pad}{k}: {s}\n")),
                    None => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        write_pretty(v, indent + 1, out);
                    }
                }
            }
        }
        Value::Array(items) => {
            for item in items {
                match scalar(item) {
                    Some(s) => out.push_str(&format!("{pad}- {s}\n")),
                    None => {
                        out.push_str(&format!("{pad}-\n"));
                        write_pretty(item, indent + 1, out);
                    }
                }
            }
        }
        _ => out.push_str(&format!("{pad}{}\n", scalar(value).expect("scalar"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pretty_nests_objects_and_inlines_flat_arrays() {
        let v = json!({ "b": [1, "x"], "a": { "c": null }, "d": [{ "e": true }] });
        assert_eq!(pretty(&v), "a:\n  c: -\nb: (1, x)\nd:\n  -\n    e: true\n");
    }
}
