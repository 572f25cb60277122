//! Name-and-parameter access to the built-in rules and protocols.

use serde_json::Value;

use super::auction::{
    ascending_elicitation, count_ascending, descending_first_price, rank_payment,
};
use super::double_auction::{double_auction_count, walrasian, PriceSelection};
use super::family::CompletionFamily;
use super::matching::{
    assignment_model, efficient_assignment_family, fair_elicitation, fair_elicitation_one_branch,
    fair_tiebreak, house_ir_efficient_family, inseparable_corner_instance, keep_endowments,
    non_clinching, permutation_types, serial_dictatorship, serial_dictatorship_protocol,
};
use super::school::{
    cutoff_stable_instance, multicount_stable_matching, stable_family, two_student_model,
};
use super::{label_values, restrict_distinct_order_stat, BuiltProtocol, DomainModel, Instance};
use crate::error::{input, Result};
use crate::space::TypeSpace;

pub const BUILTIN_RULES: &[&str] = &[
    "serial_dictatorship",
    "first_price",
    "second_price",
    "kth_price",
    "double_auction_walrasian",
    "fair_tiebreak_2x2",
    "efficient_assignment_2x2",
    "inseparable_corner_instance",
    "second_price_restricted",
    "house_ir_efficient_family",
    "keep_endowments",
    "school_stable_family",
    "school_cutoff_stable",
    "non_clinching",
];

pub const BUILTIN_PROTOCOLS: &[&str] = &[
    "serial_dictatorship",
    "descending_first_price",
    "ascending_elicitation_sp",
    "count_ascending_kplus1_price",
    "double_auction_count",
    "multicount_stable_matching",
    "fair_elicitation",
    "fair_elicitation_one_branch",
];

struct Params<'a> {
    value: &'a Value,
}

impl<'a> Params<'a> {
    fn new(value: &'a Value) -> Result<Self> {
        if !value.is_null() && !value.is_object() {
            return input("builtin parameters must be a JSON object");
        }
        Ok(Params { value })
    }

    fn get(&self, key: &str) -> Option<&'a Value> {
        self.value.get(key).filter(|v| !v.is_null())
    }

    fn usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.as_u64().map(|x| x as usize).map_or_else(
                || input(format!("parameter {key} must be a non-negative integer")),
                Ok,
            ),
        }
    }

    fn strings(&self, key: &str, default: &[&str]) -> Result<Vec<String>> {
        match self.get(key) {
            None => Ok(default.iter().map(|s| s.to_string()).collect()),
            Some(Value::Array(xs)) => xs
                .iter()
                .map(|x| match x {
                    Value::String(s) => Ok(s.clone()),
                    Value::Number(n) => Ok(n.to_string()),
                    _ => input(format!("parameter {key} must list strings")),
                })
                .collect(),
            Some(_) => input(format!("parameter {key} must be a list")),
        }
    }

    /// A list of agent numbers from 1, returned from 0.
    fn agents(&self, key: &str, default: Vec<usize>, n: usize) -> Result<Vec<usize>> {
        let Some(v) = self.get(key) else {
            return Ok(default);
        };
        let Some(xs) = v.as_array() else {
            return input(format!("parameter {key} must be a list of agent numbers"));
        };
        xs.iter()
            .map(|x| match x.as_u64() {
                Some(a) if a >= 1 && a as usize <= n => Ok(a as usize - 1),
                _ => input(format!("parameter {key} names an agent outside 1..={n}")),
            })
            .collect()
    }

    fn string(&self, key: &str, default: &str) -> Result<String> {
        match self.get(key) {
            None => Ok(default.to_string()),
            Some(Value::String(s)) => Ok(s.clone()),
            Some(_) => input(format!("parameter {key} must be a string")),
        }
    }
}

fn auction_instance(p: &Params<'_>, n_default: usize, k: usize, units: usize) -> Result<Instance> {
    let n = p.usize("n", n_default)?;
    let types = p.strings("types", &["1", "2", "3"])?;
    let space = TypeSpace::uniform(n, &types)?;
    let values = label_values(&space);
    let rule = rank_payment(&space, &values, k, units)?;
    let domain = match p.get("distinct_order_stat") {
        None => None,
        Some(_) => Some(restrict_distinct_order_stat(
            &space,
            &values,
            p.usize("distinct_order_stat", 0)?,
        )?),
    };
    Ok(Instance {
        rule,
        model: Some(DomainModel::Auction { values }),
        domain,
    })
}

fn sd_instance(p: &Params<'_>) -> Result<(Instance, Vec<usize>)> {
    let n = p.usize("n", 2)?;
    let default_objects: Vec<String> = ["a", "b", "c", "d"]
        .iter()
        .take(n.max(1))
        .map(|s| s.to_string())
        .collect();
    let objects = match p.get("objects") {
        None => default_objects,
        Some(_) => p.strings("objects", &[])?,
    };
    if objects.is_empty() || objects.len() > 5 {
        return input("serial dictatorship needs between 1 and 5 objects");
    }
    let order = p.agents("order", (0..n).collect(), n)?;
    let types: Vec<String> = permutation_types(&objects)
        .into_iter()
        .map(|(l, _)| l)
        .collect();
    let (space, model) = assignment_model(&objects, &vec![types; n])?;
    let rule = serial_dictatorship(&space, &model, &order)?;
    Ok((
        Instance {
            rule,
            model: Some(model),
            domain: None,
        },
        order,
    ))
}

fn family_member(family: CompletionFamily, model: DomainModel, p: &Params<'_>) -> Result<Instance> {
    let member = p.usize("member", 0)? as u64;
    Ok(Instance {
        rule: family.member(member)?,
        model: Some(model),
        domain: None,
    })
}

fn double_auction_instance(
    p: &Params<'_>,
    selection: PriceSelection,
    default_types: &[&str],
) -> Result<Instance> {
    let n = p.usize("n", 4)?;
    let types = p.strings("types", default_types)?;
    let space = TypeSpace::uniform(n, &types)?;
    let values = label_values(&space);
    let rule = walrasian(&space, &values, selection)?;
    let sellers_idx = p.agents("sellers", (n / 2..n).collect(), n)?;
    let sellers = (0..n).map(|i| sellers_idx.contains(&i)).collect();
    let model = DomainModel::DoubleAuction { values, sellers };
    model.validate(&space)?;
    Ok(Instance {
        rule,
        model: Some(model),
        domain: None,
    })
}

/// A built-in rule by name. `params` is a JSON object or null.
pub fn builtin_rule(name: &str, params: &Value) -> Result<Instance> {
    let p = Params::new(params)?;
    match name {
        "serial_dictatorship" => Ok(sd_instance(&p)?.0),
        "first_price" => auction_instance(&p, 2, 1, 1),
        "second_price" => auction_instance(&p, 3, 2, 1),
        "kth_price" => {
            let k = p.usize("k", 2)?;
            auction_instance(&p, k + 2, k, p.usize("units", 1)?)
        }
        "double_auction_walrasian" => {
            let selection = match p.string("price", "lower")?.as_str() {
                "lower" => PriceSelection::Lower,
                "upper" => PriceSelection::Upper,
                other => {
                    return input(format!(
                        "price selection must be lower or upper, not {other:?}"
                    ))
                }
            };
            double_auction_instance(&p, selection, &["0", "1"])
        }
        "fair_tiebreak_2x2" => fair_tiebreak(),
        "efficient_assignment_2x2" => {
            let (family, model) = efficient_assignment_family()?;
            family_member(family, model, &p)
        }
        "inseparable_corner_instance" => Ok(Instance::new(inseparable_corner_instance()?)),
        "second_price_restricted" => {
            let alphabets: Vec<Vec<String>> =
                [["θ5", "θ0", "θ2"], ["θ8", "θ7", "θ3"], ["θ6", "θ4", "θ1"]]
                    .iter()
                    .map(|a| a.iter().map(|s| s.to_string()).collect())
                    .collect();
            let space = TypeSpace::new(alphabets)?;
            let values = label_values(&space);
            let rule = rank_payment(&space, &values, 2, 1)?;
            Ok(Instance {
                rule,
                model: Some(DomainModel::Auction { values }),
                domain: None,
            })
        }
        "house_ir_efficient_family" => {
            let (family, model) = house_ir_efficient_family(p.usize("n", 3)?)?;
            family_member(family, model, &p)
        }
        "keep_endowments" => keep_endowments(p.usize("n", 2)?),
        "school_stable_family" => {
            let (space, model) = two_student_model()?;
            let family = stable_family(&space, &model)?;
            family_member(family, model, &p)
        }
        "school_cutoff_stable" => cutoff_stable_instance(),
        "non_clinching" => non_clinching(),
        _ => input(format!("unknown builtin rule {name:?}")),
    }
}

/// A built-in protocol with the instance it implements.
pub fn builtin_protocol(name: &str, params: &Value) -> Result<(Instance, BuiltProtocol)> {
    let p = Params::new(params)?;
    match name {
        "serial_dictatorship" => {
            let (inst, order) = sd_instance(&p)?;
            let built = serial_dictatorship_protocol(
                &inst.rule,
                inst.model.as_ref().expect("model"),
                &order,
            )?;
            Ok((inst, built))
        }
        "descending_first_price" => {
            let inst = auction_instance(&p, 2, 1, 1)?;
            let values = label_values(inst.rule.space());
            let built = descending_first_price(&inst.rule, &values)?;
            Ok((inst, built))
        }
        "ascending_elicitation_sp" => {
            let inst = auction_instance(&p, 3, 2, 1)?;
            let values = label_values(inst.rule.space());
            let built = ascending_elicitation(&inst.rule, &values)?;
            Ok((inst, built))
        }
        "count_ascending_kplus1_price" => {
            let k = p.usize("k", 1)?;
            let mut inst = auction_instance(&p, k + 2, k + 1, k)?;
            let values = label_values(inst.rule.space());
            let domain = restrict_distinct_order_stat(inst.rule.space(), &values, k)?;
            let built = count_ascending(&inst.rule, &values[0], k, &domain)?;
            inst.domain = Some(domain);
            Ok((inst, built))
        }
        "double_auction_count" => {
            let mut inst = double_auction_instance(&p, PriceSelection::Lower, &["0", "1", "2"])?;
            let space = inst.rule.space().clone();
            let values = label_values(&space);
            let domain = restrict_distinct_order_stat(&space, &values, space.agent_count() / 2)?;
            let built = double_auction_count(&inst.rule, &values[0], &domain)?;
            inst.domain = Some(domain);
            Ok((inst, built))
        }
        "multicount_stable_matching" => {
            let inst = cutoff_stable_instance()?;
            let built = multicount_stable_matching(
                &inst.rule,
                inst.model.as_ref().expect("model"),
                &inst.domain(),
            )?;
            Ok((inst, built))
        }
        "fair_elicitation" => {
            let inst = fair_tiebreak()?;
            let built = fair_elicitation(&inst.rule)?;
            Ok((inst, built))
        }
        "fair_elicitation_one_branch" => {
            let inst = fair_tiebreak()?;
            let built = fair_elicitation_one_branch(&inst.rule)?;
            Ok((inst, built))
        }
        _ => input(format!("unknown builtin protocol {name:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn every_rule_builds_with_defaults() {
        for name in BUILTIN_RULES {
            builtin_rule(name, &Value::Null).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn every_protocol_implements_its_rule() {
        for name in BUILTIN_PROTOCOLS {
            let (inst, built) =
                builtin_protocol(name, &Value::Null).unwrap_or_else(|e| panic!("{name}: {e}"));
            built.protocol.ensure_implements(&inst.rule).unwrap();
            assert!(built.protocol.validate().is_ok(), "{name}");
        }
    }

    #[test]
    fn bad_params() {
        assert!(builtin_rule("kth_price", &json!({"k": 5, "n": 3})).is_err());
        assert!(builtin_rule("first_price", &json!([1])).is_err());
        assert!(builtin_rule("nope", &Value::Null).is_err());
        assert!(builtin_rule("double_auction_walrasian", &json!({"price": "middle"})).is_err());
        assert!(builtin_rule("serial_dictatorship", &json!({"n": 2, "order": [1, 1]})).is_err());
    }

    #[test]
    fn second_price_table_size() {
        let inst =
            builtin_rule("second_price", &json!({"n": 3, "types": ["1", "2", "3"]})).unwrap();
        assert_eq!(inst.rule.table().len(), 27);
    }
}
