//! Finite type spaces, mixed-radix profile indexing and profile sets.
//!
//! A profile is a vector of type indices, one per agent. Profiles are
//! addressed by a mixed-radix index in which agent 1 is the most
//! significant digit, so lexicographic order on profiles coincides with
//! numeric order on indices.

use serde::Serialize;

use crate::error::{input, Error, Result};

/// Index of a profile in the mixed-radix enumeration of a [`TypeSpace`].
pub type ProfileIndex = usize;

/// Default bound on the number of profiles a space may hold.
pub const DEFAULT_PROFILE_CAP: usize = 1 << 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeSpace {
    alphabets: Vec<Vec<String>>,
    strides: Vec<usize>,
    total: usize,
    common: bool,
}

impl TypeSpace {
    pub fn new(alphabets: Vec<Vec<String>>) -> Result<Self> {
        Self::with_cap(alphabets, DEFAULT_PROFILE_CAP)
    }

    pub fn with_cap(alphabets: Vec<Vec<String>>, cap: usize) -> Result<Self> {
        if alphabets.is_empty() {
            return input("a type space needs at least one agent");
        }
        for (i, alphabet) in alphabets.iter().enumerate() {
            if alphabet.is_empty() {
                return input(format!("agent {} has an empty type alphabet", i + 1));
            }
            for (k, label) in alphabet.iter().enumerate() {
                if alphabet[..k].contains(label) {
                    return input(format!("agent {} lists type {label:?} twice", i + 1));
                }
            }
        }
        let mut strides = vec![1usize; alphabets.len()];
        let mut total = 1usize;
        for i in (0..alphabets.len()).rev() {
            strides[i] = total;
            total = total
                .checked_mul(alphabets[i].len())
                .filter(|&t| t <= cap)
                .ok_or_else(|| {
                    Error::Resource(format!("type space exceeds the profile cap of {cap}"))
                })?;
        }
        let common = alphabets.iter().all(|a| a == &alphabets[0]);
        Ok(TypeSpace {
            alphabets,
            strides,
            total,
            common,
        })
    }

    /// All `n` agents share the same alphabet.
    pub fn uniform<S: AsRef<str>>(n: usize, labels: &[S]) -> Result<Self> {
        let alphabet: Vec<String> = labels.iter().map(|s| s.as_ref().to_string()).collect();
        Self::new(vec![alphabet; n])
    }

    pub fn agent_count(&self) -> usize {
        self.alphabets.len()
    }

    pub fn alphabet(&self, agent: usize) -> &[String] {
        &self.alphabets[agent]
    }

    pub fn alphabets(&self) -> &[Vec<String>] {
        &self.alphabets
    }

    pub fn alphabet_len(&self, agent: usize) -> usize {
        self.alphabets[agent].len()
    }

    /// True iff every agent has the same alphabet; count queries need this.
    pub fn is_common(&self) -> bool {
        self.common
    }

    pub fn profile_count(&self) -> usize {
        self.total
    }

    pub fn stride(&self, agent: usize) -> usize {
        self.strides[agent]
    }

    pub fn index_of(&self, profile: &[usize]) -> Result<ProfileIndex> {
        if profile.len() != self.agent_count() {
            return input(format!(
                "profile has {} entries, space has {} agents",
                profile.len(),
                self.agent_count()
            ));
        }
        let mut index = 0;
        for (i, &t) in profile.iter().enumerate() {
            if t >= self.alphabets[i].len() {
                return input(format!(
                    "type index {t} out of range for agent {} ({} types)",
                    i + 1,
                    self.alphabets[i].len()
                ));
            }
            index += t * self.strides[i];
        }
        Ok(index)
    }

    pub fn profile_of(&self, index: ProfileIndex) -> Vec<usize> {
        assert!(index < self.total, "profile index {index} out of range");
        (0..self.agent_count())
            .map(|i| self.coordinate(index, i))
            .collect()
    }

    #[inline]
    pub fn coordinate(&self, index: ProfileIndex, agent: usize) -> usize {
        (index / self.strides[agent]) % self.alphabets[agent].len()
    }

    /// The index obtained by replacing `agent`'s type in `index` with `value`.
    #[inline]
    pub fn with_coordinate(&self, index: ProfileIndex, agent: usize, value: usize) -> ProfileIndex {
        let current = self.coordinate(index, agent);
        index - current * self.strides[agent] + value * self.strides[agent]
    }

    pub fn type_index(&self, agent: usize, label: &str) -> Option<usize> {
        self.alphabets[agent].iter().position(|l| l == label)
    }

    pub fn parse_profile<S: AsRef<str>>(&self, labels: &[S]) -> Result<ProfileIndex> {
        if labels.len() != self.agent_count() {
            return input(format!(
                "profile has {} labels, space has {} agents",
                labels.len(),
                self.agent_count()
            ));
        }
        let mut profile = Vec::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            match self.type_index(i, l.as_ref()) {
                Some(t) => profile.push(t),
                None => return input(format!("unknown type {:?} for agent {}", l.as_ref(), i + 1)),
            }
        }
        self.index_of(&profile)
    }

    pub fn profile_labels(&self, index: ProfileIndex) -> Vec<String> {
        self.profile_of(index)
            .into_iter()
            .enumerate()
            .map(|(i, t)| self.alphabets[i][t].clone())
            .collect()
    }

    pub fn full_set(&self) -> ProfileSet {
        ProfileSet::full(self.total)
    }

    pub fn empty_set(&self) -> ProfileSet {
        ProfileSet::empty(self.total)
    }

    /// The sub-space spanned by the given per-agent factors, with labels kept.
    pub fn subspace(&self, product: &ProductSet) -> Result<TypeSpace> {
        let alphabets = product
            .factors()
            .iter()
            .enumerate()
            .map(|(i, f)| f.iter().map(|&t| self.alphabets[i][t].clone()).collect())
            .collect();
        TypeSpace::new(alphabets)
    }
}

/// A set of profiles, stored as a dense bit vector over profile indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProfileSet {
    universe: usize,
    words: Vec<u64>,
}

impl ProfileSet {
    pub fn empty(universe: usize) -> Self {
        ProfileSet {
            universe,
            words: vec![0; universe.div_ceil(64)],
        }
    }

    pub fn full(universe: usize) -> Self {
        let mut set = Self::empty(universe);
        for (w, word) in set.words.iter_mut().enumerate() {
            let lo = w * 64;
            let bits = (universe - lo).min(64);
            *word = if bits == 64 {
                u64::MAX
            } else {
                (1u64 << bits) - 1
            };
        }
        set
    }

    pub fn from_indices(universe: usize, indices: impl IntoIterator<Item = ProfileIndex>) -> Self {
        let mut set = Self::empty(universe);
        for i in indices {
            set.insert(i);
        }
        set
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    #[inline]
    pub fn insert(&mut self, index: ProfileIndex) {
        assert!(index < self.universe, "profile index {index} out of range");
        self.words[index / 64] |= 1u64 << (index % 64);
    }

    #[inline]
    pub fn remove(&mut self, index: ProfileIndex) {
        if index < self.universe {
            self.words[index / 64] &= !(1u64 << (index % 64));
        }
    }

    #[inline]
    pub fn contains(&self, index: ProfileIndex) -> bool {
        index < self.universe && self.words[index / 64] & (1u64 << (index % 64)) != 0
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn first(&self) -> Option<ProfileIndex> {
        self.iter().next()
    }

    pub fn iter(&self) -> impl Iterator<Item = ProfileIndex> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &word)| {
            let mut bits = word;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let tz = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(w * 64 + tz)
            })
        })
    }

    pub fn intersection(&self, other: &ProfileSet) -> ProfileSet {
        self.zip(other, |a, b| a & b)
    }

    pub fn union(&self, other: &ProfileSet) -> ProfileSet {
        self.zip(other, |a, b| a | b)
    }

    pub fn difference(&self, other: &ProfileSet) -> ProfileSet {
        self.zip(other, |a, b| a & !b)
    }

    pub fn is_disjoint(&self, other: &ProfileSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    pub fn is_subset(&self, other: &ProfileSet) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    fn zip(&self, other: &ProfileSet, f: impl Fn(u64, u64) -> u64) -> ProfileSet {
        assert_eq!(
            self.universe, other.universe,
            "profile sets over different spaces"
        );
        ProfileSet {
            universe: self.universe,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }
}

/// A product set `S_1 × … × S_n` given by its nonempty, sorted factors.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ProductSet {
    factors: Vec<Vec<usize>>,
}

impl ProductSet {
    pub fn new(space: &TypeSpace, mut factors: Vec<Vec<usize>>) -> Result<Self> {
        if factors.len() != space.agent_count() {
            return input(format!(
                "product set has {} factors, space has {} agents",
                factors.len(),
                space.agent_count()
            ));
        }
        for (i, f) in factors.iter_mut().enumerate() {
            f.sort_unstable();
            f.dedup();
            if f.is_empty() {
                return input(format!("factor for agent {} is empty", i + 1));
            }
            if let Some(&t) = f.iter().find(|&&t| t >= space.alphabet_len(i)) {
                return input(format!("type index {t} out of range for agent {}", i + 1));
            }
        }
        Ok(ProductSet { factors })
    }

    pub fn full(space: &TypeSpace) -> Self {
        ProductSet {
            factors: (0..space.agent_count())
                .map(|i| (0..space.alphabet_len(i)).collect())
                .collect(),
        }
    }

    pub fn factors(&self) -> &[Vec<usize>] {
        &self.factors
    }

    pub fn factor(&self, agent: usize) -> &[usize] {
        &self.factors[agent]
    }

    pub fn into_factors(self) -> Vec<Vec<usize>> {
        self.factors
    }

    pub fn cardinality(&self) -> usize {
        self.factors.iter().map(Vec::len).product()
    }

    /// Same set with `agent`'s factor replaced. The new factor must be nonempty.
    pub fn with_factor(&self, agent: usize, mut factor: Vec<usize>) -> ProductSet {
        factor.sort_unstable();
        factor.dedup();
        assert!(!factor.is_empty(), "empty factor");
        let mut factors = self.factors.clone();
        factors[agent] = factor;
        ProductSet { factors }
    }

    pub fn contains(&self, space: &TypeSpace, index: ProfileIndex) -> bool {
        (0..self.factors.len()).all(|i| {
            self.factors[i]
                .binary_search(&space.coordinate(index, i))
                .is_ok()
        })
    }

    /// Member indices in increasing (lexicographic) order.
    pub fn profiles<'a>(&'a self, space: &'a TypeSpace) -> impl Iterator<Item = ProfileIndex> + 'a {
        let n = self.factors.len();
        let mut digits = vec![0usize; n];
        let mut done = false;
        std::iter::from_fn(move || {
            if done {
                return None;
            }
            let index = (0..n)
                .map(|i| self.factors[i][digits[i]] * space.stride(i))
                .sum();
            // odometer step, last agent fastest
            let mut i = n;
            loop {
                if i == 0 {
                    done = true;
                    break;
                }
                i -= 1;
                digits[i] += 1;
                if digits[i] < self.factors[i].len() {
                    break;
                }
                digits[i] = 0;
            }
            Some(index)
        })
    }

    /// Indices of the members whose `agent` coordinate is zero-stripped: for
    /// each assignment of the other agents' types, the index with `agent`'s
    /// contribution removed. Adding `t * stride(agent)` recovers a member.
    pub fn bases_without<'a>(
        &'a self,
        space: &'a TypeSpace,
        agent: usize,
    ) -> impl Iterator<Item = ProfileIndex> + 'a {
        let first = self.factors[agent][0] * space.stride(agent);
        let n = self.factors.len();
        let mut digits = vec![0usize; n];
        let mut done = false;
        std::iter::from_fn(move || {
            if done {
                return None;
            }
            let index: usize = (0..n)
                .map(|i| self.factors[i][digits[i]] * space.stride(i))
                .sum();
            let mut i = n;
            loop {
                if i == 0 {
                    done = true;
                    break;
                }
                i -= 1;
                if i == agent {
                    continue;
                }
                digits[i] += 1;
                if digits[i] < self.factors[i].len() {
                    break;
                }
                digits[i] = 0;
            }
            Some(index - first)
        })
    }

    pub fn to_profile_set(&self, space: &TypeSpace) -> ProfileSet {
        ProfileSet::from_indices(space.profile_count(), self.profiles(space))
    }

    pub fn labels(&self, space: &TypeSpace) -> Vec<Vec<String>> {
        self.factors
            .iter()
            .enumerate()
            .map(|(i, f)| f.iter().map(|&t| space.alphabet(i)[t].clone()).collect())
            .collect()
    }
}

/// Per-agent projections of `set`, each sorted.
pub fn projections(space: &TypeSpace, set: &ProfileSet) -> Vec<Vec<usize>> {
    let mut seen: Vec<Vec<bool>> = (0..space.agent_count())
        .map(|i| vec![false; space.alphabet_len(i)])
        .collect();
    for index in set.iter() {
        for (i, s) in seen.iter_mut().enumerate() {
            s[space.coordinate(index, i)] = true;
        }
    }
    seen.into_iter()
        .map(|s| {
            s.iter()
                .enumerate()
                .filter(|(_, &b)| b)
                .map(|(t, _)| t)
                .collect()
        })
        .collect()
}

/// Returns the factors of `set` if it is a product of its projections,
/// `None` otherwise.
pub fn product_factorization(space: &TypeSpace, set: &ProfileSet) -> Result<Option<ProductSet>> {
    if set.is_empty() {
        return input("cannot factor an empty profile set");
    }
    let factors = projections(space, set);
    let product: usize = factors.iter().map(Vec::len).product();
    if product == set.len() {
        Ok(Some(ProductSet { factors }))
    } else {
        Ok(None)
    }
}
