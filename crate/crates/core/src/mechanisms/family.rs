//! Rule families given by a set of admissible outcomes per profile.

use crate::error::{input, Error, Result};
use crate::rule::ChoiceRule;
use crate::space::TypeSpace;

/// An admissible outcome: label and one component label per agent.
pub type Choice = (String, Vec<String>);

/// Every rule choosing, at each profile, one of its admissible outcomes.
/// Members are numbered in mixed radix with profile 0 most significant and
/// options sorted by label.
#[derive(Clone, Debug)]
pub struct CompletionFamily {
    space: TypeSpace,
    options: Vec<Vec<Choice>>,
}

impl CompletionFamily {
    pub fn new(space: TypeSpace, mut options: Vec<Vec<Choice>>) -> Result<Self> {
        if options.len() != space.profile_count() {
            return input("one option list per profile is required");
        }
        for (k, list) in options.iter_mut().enumerate() {
            list.sort();
            list.dedup();
            if list.is_empty() {
                return input(format!(
                    "profile ({}) admits no outcome",
                    space.profile_labels(k).join(",")
                ));
            }
        }
        Ok(CompletionFamily { space, options })
    }

    pub fn options(&self, profile: usize) -> &[Choice] {
        &self.options[profile]
    }

    /// Number of members, if it fits in a `u64`.
    pub fn size(&self) -> Option<u64> {
        self.options
            .iter()
            .try_fold(1u64, |acc, l| acc.checked_mul(l.len() as u64))
    }

    pub fn member(&self, index: u64) -> Result<ChoiceRule> {
        let size = self
            .size()
            .ok_or_else(|| Error::Resource("family too large to index".into()))?;
        if index >= size {
            return input(format!(
                "member {index} out of range; the family has {size} members"
            ));
        }
        let mut digits = vec![0usize; self.options.len()];
        let mut rest = index;
        for (k, list) in self.options.iter().enumerate().rev() {
            digits[k] = (rest % list.len() as u64) as usize;
            rest /= list.len() as u64;
        }
        let space = self.space.clone();
        ChoiceRule::from_fn_with_components(space.clone(), |p| {
            let k = space.index_of(p).expect("profile in range");
            self.options[k][digits[k]].clone()
        })
    }

    pub fn members(&self) -> Result<Vec<ChoiceRule>> {
        let size = self
            .size()
            .ok_or_else(|| Error::Resource("family too large to enumerate".into()))?;
        (0..size).map(|m| self.member(m)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn choice(s: &str) -> Choice {
        (s.to_string(), vec![s.to_string()])
    }

    #[test]
    fn members_cover_every_combination() {
        let space = TypeSpace::uniform(1, &["a", "b"]).unwrap();
        let fam = CompletionFamily::new(
            space,
            vec![
                vec![choice("y"), choice("x")],
                vec![choice("z"), choice("x")],
            ],
        )
        .unwrap();
        assert_eq!(fam.size(), Some(4));
        let tables: Vec<Vec<String>> = fam
            .members()
            .unwrap()
            .iter()
            .map(|r| {
                (0..2)
                    .map(|k| r.outcome_label(r.outcome(k)).to_string())
                    .collect()
            })
            .collect();
        assert_eq!(
            tables,
            vec![
                vec!["x", "x"],
                vec!["x", "z"],
                vec!["y", "x"],
                vec!["y", "z"]
            ]
        );
        assert!(fam.member(4).is_err());
    }

    #[test]
    fn empty_options_rejected() {
        let space = TypeSpace::uniform(1, &["a"]).unwrap();
        assert!(CompletionFamily::new(space, vec![vec![]]).is_err());
    }
}
