use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use cpv_core::mechanisms::{
    builtin_protocol, builtin_rule, check_protocol_osp, check_rule_property, Instance,
    OutcomePrefs, Property, BUILTIN_PROTOCOLS, BUILTIN_RULES,
};
use cpv_core::privacy::{
    check_nonbossy, check_protocol_cp, check_protocol_gcp, check_protocol_icp, corners_scan,
    synthesize_on, Synthesis,
};
use cpv_core::search::{exhaustive_cp_search, QueryFamily, SearchBudget, SearchOutcome};
use cpv_core::space::product_factorization;
use cpv_core::tatonnement::{check_tatonnement, phase_discovery};
use serde_json::{json, Value};

use crate::error::{CliError, Result};
use crate::files::{
    built_protocol_to_json, instance_to_json, load_instance, load_protocol, parse_node_refs,
    parse_profile_arg, protocol_to_json, write_json, LoadedProtocol,
};
use crate::report::Render;

#[derive(Parser, Debug)]
#[command(
    name = "cpv",
    version,
    about = "Check and synthesize contextually private protocols"
)]
pub struct Cli {
    /// Print a human-readable report instead of JSON.
    #[arg(long, global = true)]
    pub pretty: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Load an instance (and protocol) and report whether the protocol implements the rule.
    Validate {
        instance: PathBuf,
        #[arg(long)]
        protocol: Option<PathBuf>,
    },
    /// Check a privacy or economic property.
    Check {
        instance: PathBuf,
        #[arg(long)]
        protocol: Option<PathBuf>,
        #[arg(long, value_enum)]
        property: CheckProperty,
        /// Phase nodes for tatonnement, as tree paths or node ids.
        #[arg(long, value_delimiter = ',')]
        phase: Option<Vec<String>>,
    },
    /// Synthesize a contextually private elicitation protocol or print a witness.
    Synth {
        instance: PathBuf,
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Run a protocol on one profile.
    Run {
        instance: PathBuf,
        #[arg(long)]
        protocol: PathBuf,
        /// Comma-separated type labels, one per agent.
        #[arg(long)]
        profile: String,
    },
    /// Exhaustive search for a contextually private protocol over a query family.
    Enumerate {
        instance: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        queries: Vec<QueryKind>,
        #[arg(long, default_value_t = 200_000)]
        max_states: usize,
        #[arg(long, default_value_t = 64)]
        max_depth: usize,
        /// Wall-clock limit; 0 disables it.
        #[arg(long, default_value_t = 60)]
        max_seconds: u64,
        #[arg(long, default_value_t = 2)]
        max_cells: usize,
        /// Largest multi-count arity when multicount queries are enabled.
        #[arg(long, default_value_t = 2)]
        max_arity: usize,
        /// Count queries answer with the count itself.
        #[arg(long)]
        exact_counts: bool,
        #[arg(long)]
        no_memo: bool,
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Materialize a built-in rule or protocol.
    Builtin {
        #[arg(required_unless_present = "list")]
        name: Option<String>,
        /// JSON object of parameters.
        #[arg(long)]
        params: Option<String>,
        /// Write the instance file.
        #[arg(long)]
        emit: Option<PathBuf>,
        /// Write the protocol file, for built-in protocols.
        #[arg(long)]
        emit_protocol: Option<PathBuf>,
        #[arg(long)]
        list: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CheckProperty {
    Cp,
    Gcp,
    Icp,
    Tatonnement,
    Corners,
    Nonbossy,
    Efficient,
    Ir,
    Stable,
    Sp,
    Osp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum QueryKind {
    Elicit,
    Count,
    Multicount,
}

/// A report and its exit code.
pub struct Outcome {
    pub code: i32,
    pub report: Value,
}

fn verdict(holds: bool, report: Value) -> Outcome {
    Outcome {
        code: if holds { 0 } else { 1 },
        report,
    }
}

fn protocol_arg(path: &Option<PathBuf>, inst: &Instance, what: &str) -> Result<LoadedProtocol> {
    match path {
        Some(path) => load_protocol(path, inst),
        None => Err(CliError::Usage(format!("{what} needs --protocol"))),
    }
}

fn model_of<'a>(inst: &'a Instance, what: &str) -> Result<&'a cpv_core::mechanisms::DomainModel> {
    inst.model
        .as_ref()
        .ok_or_else(|| CliError::Usage(format!("{what} needs a \"model\" block in the instance")))
}

fn emit(path: &Option<PathBuf>, value: &Value) -> Result<Option<String>> {
    path.as_deref()
        .map(|p: &Path| write_json(p, value).map(|()| p.display().to_string()))
        .transpose()
}

pub fn execute(command: &Command) -> Result<Outcome> {
    match command {
        Command::Validate { instance, protocol } => {
            let inst = load_instance(instance)?;
            let space = inst.rule.space();
            let mut report = json!({
                "command": "validate",
                "agents": space.agent_count(),
                "profiles": space.profile_count(),
                "domain": inst.domain().len(),
                "outcomes": inst.rule.outcome_count(),
                "components": inst.rule.has_components(),
                "model": inst.model.as_ref().map(|m| m.kind()),
            });
            let Some(path) = protocol else {
                return Ok(verdict(true, report));
            };
            let loaded = load_protocol(path, &inst)?;
            let p = &loaded.protocol;
            let r = Render {
                rule: &inst.rule,
                protocol: Some(p),
            };
            let imp = r.implementation(&p.implements(&inst.rule));
            let implements = imp["implements"] == json!(true);
            report["nodes"] = json!(p.node_count());
            report["leaves"] = json!(p.leaves().count());
            report["pruned"] = json!(p.report().pruned);
            report["contracted"] = json!(p.report().contracted);
            report["implementation"] = imp;
            Ok(verdict(implements, report))
        }
        Command::Check {
            instance,
            protocol,
            property,
            phase,
        } => check(instance, protocol, *property, phase.as_deref()),
        Command::Synth {
            instance,
            emit: out,
        } => {
            let inst = load_instance(instance)?;
            let space = inst.rule.space();
            let Some(product) = product_factorization(space, &inst.domain())? else {
                return Err(CliError::Usage(
                    "synthesis needs a domain that is a product of type sets".into(),
                ));
            };
            let r = Render {
                rule: &inst.rule,
                protocol: None,
            };
            match synthesize_on(&inst.rule, &product)? {
                Synthesis::Protocol(p) => {
                    let emitted = emit(out, &protocol_to_json(&p, None))?;
                    Ok(verdict(
                        true,
                        json!({
                            "command": "synth",
                            "verdict": "protocol",
                            "nodes": p.node_count(),
                            "leaves": p.leaves().count(),
                            "emitted": emitted,
                        }),
                    ))
                }
                Synthesis::Witness { witness, minimized } => Ok(verdict(
                    false,
                    json!({
                        "command": "synth",
                        "verdict": "witness",
                        "witness": r.product(&witness),
                        "minimized": r.product(&minimized),
                    }),
                )),
            }
        }
        Command::Run {
            instance,
            protocol,
            profile,
        } => {
            let inst = load_instance(instance)?;
            let loaded = load_protocol(protocol, &inst)?;
            let k = parse_profile_arg(profile, inst.rule.space())?;
            let t = loaded.protocol.run(k, Some(&inst.rule))?;
            let r = Render {
                rule: &inst.rule,
                protocol: Some(&loaded.protocol),
            };
            let mut report = r.transcript(&t);
            report["command"] = json!("run");
            Ok(verdict(true, report))
        }
        Command::Enumerate {
            instance,
            queries,
            max_states,
            max_depth,
            max_seconds,
            max_cells,
            max_arity,
            exact_counts,
            no_memo,
            emit: out,
        } => {
            let inst = load_instance(instance)?;
            let family = QueryFamily {
                elicit: queries.contains(&QueryKind::Elicit),
                count: queries.contains(&QueryKind::Count),
                multicount: if queries.contains(&QueryKind::Multicount) {
                    *max_arity
                } else {
                    0
                },
                max_cells: *max_cells,
                exact_counts: *exact_counts,
            };
            let budget = SearchBudget {
                max_states: *max_states,
                max_depth: *max_depth,
                max_time: (*max_seconds > 0).then(|| std::time::Duration::from_secs(*max_seconds)),
                memoize: !no_memo,
            };
            let result = exhaustive_cp_search(&inst.rule, &inst.domain(), family, budget)?;
            let r = Render {
                rule: &inst.rule,
                protocol: None,
            };
            let mut report = r.search(&result);
            report["command"] = json!("enumerate");
            let code = match &result.outcome {
                SearchOutcome::Found(p) => {
                    report["nodes"] = json!(p.node_count());
                    report["emitted"] = json!(emit(out, &protocol_to_json(p, None))?);
                    0
                }
                SearchOutcome::ProvenNonexistent => 1,
                SearchOutcome::BudgetExhausted => 2,
            };
            Ok(Outcome { code, report })
        }
        Command::Builtin {
            name,
            params,
            emit: out,
            emit_protocol,
            list,
        } => {
            if *list {
                return Ok(verdict(
                    true,
                    json!({ "rules": BUILTIN_RULES, "protocols": BUILTIN_PROTOCOLS }),
                ));
            }
            let name = name
                .as_deref()
                .expect("clap requires a name without --list");
            let params: Value = match params {
                Some(text) => serde_json::from_str(text)
                    .map_err(|e| CliError::Usage(format!("--params is not valid JSON: {e}")))?,
                None => Value::Null,
            };
            let is_protocol = BUILTIN_PROTOCOLS.contains(&name);
            let (inst, built) = if is_protocol {
                let (inst, built) = builtin_protocol(name, &params)?;
                (inst, Some(built))
            } else {
                (builtin_rule(name, &params)?, None)
            };
            if emit_protocol.is_some() && built.is_none() {
                return Err(CliError::Usage(format!(
                    "{name} is not a built-in protocol"
                )));
            }
            let space = inst.rule.space();
            let emitted = emit(out, &instance_to_json(&inst))?;
            let emitted_protocol = match &built {
                Some(b) => emit(emit_protocol, &built_protocol_to_json(b))?,
                None => None,
            };
            Ok(verdict(
                true,
                json!({
                    "command": "builtin",
                    "name": name,
                    "agents": space.agent_count(),
                    "profiles": space.profile_count(),
                    "domain": inst.domain().len(),
                    "outcomes": inst.rule.outcome_count(),
                    "model": inst.model.as_ref().map(|m| m.kind()),
                    "protocol_nodes": built.as_ref().map(|b| b.protocol.node_count()),
                    "emitted": emitted,
                    "emitted_protocol": emitted_protocol,
                }),
            ))
        }
    }
}

fn check(
    instance: &Path,
    protocol: &Option<PathBuf>,
    property: CheckProperty,
    phase: Option<&[String]>,
) -> Result<Outcome> {
    let inst = load_instance(instance)?;
    let rule = &inst.rule;
    let name = format!("{property:?}").to_lowercase();
    let needs_protocol = matches!(
        property,
        CheckProperty::Cp
            | CheckProperty::Gcp
            | CheckProperty::Icp
            | CheckProperty::Tatonnement
            | CheckProperty::Osp
    );
    let loaded = if needs_protocol {
        Some(protocol_arg(
            protocol,
            &inst,
            &format!("--property {name}"),
        )?)
    } else {
        None
    };
    let p = loaded.as_ref().map(|l| &l.protocol);
    let r = Render { rule, protocol: p };
    let mut report = match property {
        CheckProperty::Cp => r.cp(&check_protocol_cp(p.expect("loaded"), rule)?, false),
        CheckProperty::Icp => r.cp(&check_protocol_icp(p.expect("loaded"), rule)?, true),
        CheckProperty::Gcp => r.gcp(&check_protocol_gcp(p.expect("loaded"), rule)?.violation),
        CheckProperty::Tatonnement => {
            let loaded = loaded.as_ref().expect("loaded");
            let p = &loaded.protocol;
            let (nodes, source) = match (phase, &loaded.phase) {
                (Some(refs), _) => (Some(parse_node_refs(refs, p)?), "flag"),
                (None, Some(nodes)) => (Some(nodes.clone()), "file"),
                (None, None) => (
                    phase_discovery(p, rule)?.map(|ph| ph.nodes.into_iter().collect()),
                    "discovered",
                ),
            };
            match nodes {
                Some(nodes) => r.tatonnement(&check_tatonnement(p, rule, &nodes)?, source),
                None => json!({
                    "holds": false,
                    "phase": null,
                    "phase_source": source,
                    "reason": "no initial phase whose end nodes reach disjoint outcome sets",
                }),
            }
        }
        CheckProperty::Corners => r.corners(&corners_scan(rule)?),
        CheckProperty::Nonbossy => r.nonbossy(&check_nonbossy(rule)?),
        CheckProperty::Efficient
        | CheckProperty::Ir
        | CheckProperty::Stable
        | CheckProperty::Sp => {
            let model = model_of(&inst, &format!("--property {name}"))?;
            let prop = match property {
                CheckProperty::Efficient => Property::Efficient,
                CheckProperty::Ir => Property::IndividuallyRational,
                CheckProperty::Stable => Property::Stable,
                _ => Property::Strategyproof,
            };
            r.property(&check_rule_property(
                rule,
                model,
                prop,
                Some(&inst.domain()),
            )?)
        }
        CheckProperty::Osp => {
            let prefs = OutcomePrefs::from_model(rule, model_of(&inst, "--property osp")?)?;
            r.osp(&check_protocol_osp(p.expect("loaded"), rule, &prefs)?)
        }
    };
    let holds = report["holds"] == json!(true);
    report["command"] = json!("check");
    report["property"] = json!(name);
    Ok(verdict(holds, report))
}
