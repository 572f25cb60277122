//! Walrasian double auction with unit demand and supply.

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use super::auction::{count_ascending, order_stat, ranking};
use super::{agent_list, fmt_value, BuiltProtocol};
use crate::error::{input, Result};
use crate::rule::ChoiceRule;
use crate::space::{ProfileSet, TypeSpace};

/// Which end of the clearing interval is the price.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriceSelection {
    /// The `(m+1)`-th highest value, numerically the lower endpoint.
    Lower,
    /// The `m`-th highest value.
    Upper,
}

pub(crate) fn double_auction_label(holders: &[usize], price: Rational64) -> String {
    format!("price={};holders={}", fmt_value(price), agent_list(holders))
}

/// The `m = n/2` highest-value agents hold a unit after trade, at a price in
/// `[θ_(m+1), θ_(m)]` of the sorted-descending values.
pub fn walrasian(
    space: &TypeSpace,
    values: &[Vec<Rational64>],
    selection: PriceSelection,
) -> Result<ChoiceRule> {
    let n = space.agent_count();
    if n == 0 || !n.is_multiple_of(2) {
        return input(format!(
            "a double auction needs an even number of agents, got {n}"
        ));
    }
    let m = n / 2;
    ChoiceRule::from_fn_with_components(space.clone(), |p| {
        let mut holders = ranking(values, p)[..m].to_vec();
        holders.sort_unstable();
        let price = match selection {
            PriceSelection::Lower => order_stat(values, p, m + 1),
            PriceSelection::Upper => order_stat(values, p, m),
        };
        let comps = (0..n)
            .map(|i| format!("({},{})", u8::from(holders.contains(&i)), fmt_value(price)))
            .collect();
        (double_auction_label(&holders, price), comps)
    })
}

/// Count protocol for the lower-price rule on the domain where the two
/// middle values differ.
pub fn double_auction_count(
    rule: &ChoiceRule,
    values: &[Rational64],
    domain: &ProfileSet,
) -> Result<BuiltProtocol> {
    count_ascending(rule, values, rule.space().agent_count() / 2, domain)
}
