//! Landmark maps and landmark evanescence probability distributions (LEPDs).
//!
//! A configuration is one presence bit per mapped landmark, in map order. An
//! [`Lepd`] answers exact probability and conditional queries for full and
//! partial assignments, samples configurations, and enumerates its support for
//! small maps. Probabilities are combined in log space and exposed on the
//! linear scale.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use nalgebra::Vector2;
use num_traits::Float;
use rand::Rng;
use smallvec::SmallVec;

use crate::error::{invalid, Error, Result};

/// Maximum landmark count accepted by [`Lepd::enumerate_support`].
pub const MAX_ENUMERATION_LANDMARKS: usize = 20;

const SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Landmark {
    pub id: String,
    pub position: Vector2<f64>,
}

impl Landmark {
    pub fn new(id: impl Into<String>, x: f64, y: f64) -> Self {
        Self {
            id: id.into(),
            position: Vector2::new(x, y),
        }
    }
}

/// An ordered collection of uniquely identified landmarks. The order fixes the
/// bit position of each landmark in a [`Configuration`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MapModel {
    landmarks: Vec<Landmark>,
}

impl MapModel {
    pub fn new(landmarks: Vec<Landmark>) -> Result<Self> {
        for (i, l) in landmarks.iter().enumerate() {
            if landmarks[..i].iter().any(|o| o.id == l.id) {
                return Err(invalid(format!("duplicate landmark id {:?}", l.id)));
            }
            if !(l.position.x.is_finite() && l.position.y.is_finite()) {
                return Err(invalid(format!("landmark {:?} has a non-finite position", l.id)));
            }
        }
        Ok(Self { landmarks })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.landmarks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.landmarks.is_empty()
    }

    pub fn landmarks(&self) -> &[Landmark] {
        &self.landmarks
    }

    pub fn get(&self, index: usize) -> Option<&Landmark> {
        self.landmarks.get(index)
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.landmarks.iter().position(|l| l.id == id)
    }
}

/// Presence bits for every mapped landmark.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration {
    bits: Vec<bool>,
}

impl Configuration {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn all_present(n: usize) -> Self {
        Self { bits: vec![true; n] }
    }

    pub fn none_present(n: usize) -> Self {
        Self { bits: vec![false; n] }
    }

    /// Bit `i` of `mask` is the presence of landmark `i`.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        Self {
            bits: (0..n).map(|i| (mask >> i) & 1 == 1).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, index: usize) -> bool {
        self.bits[index]
    }

    pub fn set(&mut self, index: usize, present: bool) {
        self.bits[index] = present;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count_present(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Configuration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(invalid(format!("configuration bit must be 0 or 1, got {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Bits(SmallVec<[u64; 2]>);

impl Bits {
    fn get(&self, i: usize) -> bool {
        self.0.get(i / 64).is_some_and(|w| (w >> (i % 64)) & 1 == 1)
    }

    fn set(&mut self, i: usize, value: bool) {
        let word = i / 64;
        if value {
            if self.0.len() <= word {
                self.0.resize(word + 1, 0);
            }
            self.0[word] |= 1 << (i % 64);
        } else if word < self.0.len() {
            self.0[word] &= !(1 << (i % 64));
            while self.0.last() == Some(&0) {
                self.0.pop();
            }
        }
    }

    fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(wi, &w)| {
            (0..64).filter(move |b| (w >> b) & 1 == 1).map(move |b| wi * 64 + b)
        })
    }
}

/// Presence bits for a subset of landmarks: the key of a consistent set.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PartialAssignment {
    known: Bits,
    present: Bits,
}

impl PartialAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_configuration(config: &Configuration) -> Self {
        let mut a = Self::new();
        for (i, &b) in config.bits().iter().enumerate() {
            a.insert(i, b);
        }
        a
    }

    /// The bits of `config` for the listed landmarks only.
    pub fn from_configuration_restricted(config: &Configuration, indices: &[usize]) -> Self {
        let mut a = Self::new();
        for &i in indices {
            a.insert(i, config.get(i));
        }
        a
    }

    pub fn get(&self, index: usize) -> Option<bool> {
        self.known.get(index).then(|| self.present.get(index))
    }

    /// Sets the bit for `index`, returning the previous bit if there was one.
    pub fn insert(&mut self, index: usize, present: bool) -> Option<bool> {
        let previous = self.get(index);
        self.known.set(index, true);
        self.present.set(index, present);
        previous
    }

    pub fn with(&self, index: usize, present: bool) -> Self {
        let mut a = self.clone();
        a.insert(index, present);
        a
    }

    pub fn len(&self) -> usize {
        self.known.count()
    }

    pub fn is_empty(&self) -> bool {
        self.known.0.is_empty()
    }

    /// `(index, bit)` pairs in ascending index order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, bool)> + '_ {
        self.known.ones().map(|i| (i, self.present.get(i)))
    }

    pub fn max_index(&self) -> Option<usize> {
        self.known.ones().last()
    }

    pub fn restricted_to(&self, indices: &[usize]) -> Self {
        let mut a = Self::new();
        for &i in indices {
            if let Some(b) = self.get(i) {
                a.insert(i, b);
            }
        }
        a
    }

    pub fn is_consistent_with(&self, config: &Configuration) -> bool {
        self.iter().all(|(i, b)| i < config.len() && config.get(i) == b)
    }
}

/// The structural form of an [`Lepd`].
#[derive(Debug, Clone, PartialEq)]
pub enum LepdModel {
    /// Probability table over full configurations.
    Explicit(Vec<(Configuration, f64)>),
    /// Exactly one landmark per group is present, chosen by the group weights.
    Mutex {
        groups: Vec<Vec<usize>>,
        weights: Vec<Vec<f64>>,
    },
    /// Per group, a latent wipe with probability `p_z` removes every landmark
    /// of the group; otherwise each member is present independently with
    /// probability `p_l`. A single group covering all landmarks is the plain
    /// latent model.
    Latent {
        groups: Vec<Vec<usize>>,
        p_z: f64,
        p_l: f64,
    },
    /// Independent per-landmark presence probabilities.
    Independent(Vec<f64>),
}

/// Landmark evanescence probability distribution over configurations of a
/// fixed number of landmarks.
#[derive(Debug, Clone, PartialEq)]
pub struct Lepd {
    n: usize,
    model: LepdModel,
}

impl Lepd {
    pub fn new(n: usize, model: LepdModel) -> Result<Self> {
        validate(n, &model)?;
        Ok(Self { n, model })
    }

    pub fn explicit(n: usize, table: Vec<(Configuration, f64)>) -> Result<Self> {
        Self::new(n, LepdModel::Explicit(table))
    }

    pub fn mutex(n: usize, groups: Vec<Vec<usize>>, weights: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(n, LepdModel::Mutex { groups, weights })
    }

    pub fn mutex_uniform(n: usize, groups: Vec<Vec<usize>>) -> Result<Self> {
        let weights = groups
            .iter()
            .map(|g| vec![1.0 / g.len() as f64; g.len()])
            .collect();
        Self::mutex(n, groups, weights)
    }

    /// Plain latent model: one latent variable shared by all landmarks.
    pub fn latent(n: usize, p_z: f64, p_l: f64) -> Result<Self> {
        let groups = if n == 0 { Vec::new() } else { vec![(0..n).collect()] };
        Self::latent_groups(n, groups, p_z, p_l)
    }

    pub fn latent_groups(n: usize, groups: Vec<Vec<usize>>, p_z: f64, p_l: f64) -> Result<Self> {
        Self::new(n, LepdModel::Latent { groups, p_z, p_l })
    }

    pub fn independent(p: Vec<f64>) -> Result<Self> {
        Self::new(p.len(), LepdModel::Independent(p))
    }

    /// Every landmark present with certainty.
    pub fn certain(n: usize) -> Self {
        Self {
            n,
            model: LepdModel::Independent(vec![1.0; n]),
        }
    }

    pub fn landmark_count(&self) -> usize {
        self.n
    }

    pub fn model(&self) -> &LepdModel {
        &self.model
    }

    /// p(ω) for a full configuration.
    pub fn prob(&self, config: &Configuration) -> Result<f64> {
        if config.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: config.len(),
            });
        }
        Ok(self.ln_marginal(&PartialAssignment::from_configuration(config)).exp())
    }

    /// Total probability of the configurations consistent with `assignment`.
    pub fn marginal(&self, assignment: &PartialAssignment) -> Result<f64> {
        self.check_assignment(assignment)?;
        Ok(self.ln_marginal(assignment).exp())
    }

    /// Natural log of [`Lepd::marginal`]; `-inf` for impossible assignments.
    pub fn ln_marginal_of(&self, assignment: &PartialAssignment) -> Result<f64> {
        self.check_assignment(assignment)?;
        Ok(self.ln_marginal(assignment))
    }

    /// p(ω_index = 1 | assignment).
    pub fn conditional(&self, index: usize, assignment: &PartialAssignment) -> Result<f64> {
        if index >= self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: index + 1,
            });
        }
        self.check_assignment(assignment)?;
        if assignment.get(index).is_some() {
            return Err(invalid(format!("landmark {index} is already conditioned")));
        }
        let denom = self.ln_marginal(assignment);
        if denom == f64::neg_infinity() {
            return Err(Error::ZeroProbabilityCondition);
        }
        let num = self.ln_marginal(&assignment.with(index, true));
        Ok((num - denom).exp().clamp(0.0, 1.0))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Configuration {
        let mut config = Configuration::none_present(self.n);
        match &self.model {
            LepdModel::Explicit(table) => {
                let u: f64 = rng.random();
                let mut cum = 0.0;
                let mut chosen = None;
                for (c, p) in table {
                    if *p <= 0.0 {
                        continue;
                    }
                    cum += p;
                    chosen = Some(c);
                    if u < cum {
                        break;
                    }
                }
                if let Some(c) = chosen {
                    config = c.clone();
                }
            }
            LepdModel::Mutex { groups, weights } => {
                for (group, w) in groups.iter().zip(weights) {
                    let u: f64 = rng.random();
                    let mut cum = 0.0;
                    let mut chosen = None;
                    for (&member, &wk) in group.iter().zip(w) {
                        if wk <= 0.0 {
                            continue;
                        }
                        cum += wk;
                        chosen = Some(member);
                        if u < cum {
                            break;
                        }
                    }
                    if let Some(m) = chosen {
                        config.set(m, true);
                    }
                }
            }
            LepdModel::Latent { groups, p_z, p_l } => {
                for group in groups {
                    let wiped = rng.random::<f64>() < *p_z;
                    for &m in group {
                        let present = rng.random::<f64>() < *p_l;
                        config.set(m, !wiped && present);
                    }
                }
            }
            LepdModel::Independent(p) => {
                for (i, &pi) in p.iter().enumerate() {
                    config.set(i, rng.random::<f64>() < pi);
                }
            }
        }
        config
    }

    /// All configurations with nonzero probability, with their probabilities.
    pub fn enumerate_support(&self) -> Result<Vec<(Configuration, f64)>> {
        if self.n > MAX_ENUMERATION_LANDMARKS {
            return Err(Error::Capacity {
                what: "landmark count for support enumeration",
                got: self.n,
                max: MAX_ENUMERATION_LANDMARKS,
            });
        }
        if let LepdModel::Explicit(table) = &self.model {
            let mut merged: BTreeMap<Configuration, f64> = BTreeMap::new();
            for (c, p) in table {
                *merged.entry(c.clone()).or_insert(0.0) += p;
            }
            return Ok(merged.into_iter().filter(|(_, p)| *p > 0.0).collect());
        }
        let mut support = Vec::new();
        for mask in 0..(1u64 << self.n) {
            let config = Configuration::from_mask(self.n, mask);
            let p = self.ln_marginal(&PartialAssignment::from_configuration(&config)).exp();
            if p > 0.0 {
                support.push((config, p));
            }
        }
        Ok(support)
    }

    fn check_assignment(&self, assignment: &PartialAssignment) -> Result<()> {
        match assignment.max_index() {
            Some(i) if i >= self.n => Err(Error::Dimension {
                expected: self.n,
                got: i + 1,
            }),
            _ => Ok(()),
        }
    }

    fn ln_marginal(&self, a: &PartialAssignment) -> f64 {
        match &self.model {
            LepdModel::Explicit(table) => table
                .iter()
                .filter(|(c, _)| a.is_consistent_with(c))
                .map(|(_, p)| *p)
                .sum::<f64>()
                .ln(),
            LepdModel::Mutex { groups, weights } => {
                let mut total = 0.0;
                for (group, w) in groups.iter().zip(weights) {
                    let mut ones = 0usize;
                    let mut one_weight = 0.0;
                    let mut open = 0.0;
                    for (&m, &wk) in group.iter().zip(w) {
                        match a.get(m) {
                            Some(true) => {
                                ones += 1;
                                one_weight = wk;
                            }
                            Some(false) => {}
                            None => open += wk,
                        }
                    }
                    total += match ones {
                        0 => open.ln(),
                        1 => one_weight.ln(),
                        _ => return f64::neg_infinity(),
                    };
                }
                total
            }
            LepdModel::Latent { groups, p_z, p_l } => {
                let mut total = 0.0;
                for group in groups {
                    let (mut ones, mut zeros) = (0usize, 0usize);
                    for &m in group {
                        match a.get(m) {
                            Some(true) => ones += 1,
                            Some(false) => zeros += 1,
                            None => {}
                        }
                    }
                    if ones + zeros == 0 {
                        continue;
                    }
                    let wiped = if ones == 0 { p_z.ln() } else { f64::neg_infinity() };
                    let kept = (1.0 - p_z).ln() + ln_pow(*p_l, ones) + ln_pow(1.0 - p_l, zeros);
                    total += ln_add_exp(wiped, kept);
                }
                total
            }
            LepdModel::Independent(p) => a
                .iter()
                .map(|(i, b)| if b { p[i].ln() } else { (1.0 - p[i]).ln() })
                .sum(),
        }
    }
}

/// `k * ln(p)` with the convention `0 * ln(0) = 0`.
fn ln_pow(p: f64, k: usize) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * p.ln()
    }
}

/// `ln(e^a + e^b)`.
pub(crate) fn ln_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::neg_infinity() {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

fn check_partition(n: usize, groups: &[Vec<usize>]) -> Result<()> {
    let mut seen = vec![false; n];
    for group in groups {
        if group.is_empty() {
            return Err(Error::InvalidLepd("empty landmark group".into()));
        }
        for &m in group {
            if m >= n {
                return Err(Error::InvalidLepd(format!("landmark index {m} out of range for {n} landmarks")));
            }
            if seen[m] {
                return Err(Error::InvalidLepd(format!("landmark {m} appears in more than one group")));
            }
            seen[m] = true;
        }
    }
    match seen.iter().position(|s| !s) {
        Some(m) => Err(Error::InvalidLepd(format!("landmark {m} is not covered by any group"))),
        None => Ok(()),
    }
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidLepd(format!("{name} must lie in [0, 1], got {p}")))
    }
}

fn validate(n: usize, model: &LepdModel) -> Result<()> {
    match model {
        LepdModel::Explicit(table) => {
            let mut sum = 0.0;
            for (c, p) in table {
                if c.len() != n {
                    return Err(Error::Dimension {
                        expected: n,
                        got: c.len(),
                    });
                }
                if !(p.is_finite() && *p >= 0.0) {
                    return Err(Error::InvalidLepd(format!("probability of {c} must be nonnegative, got {p}")));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > SUM_TOLERANCE {
                return Err(Error::InvalidLepd(format!("probabilities sum to {sum}, not 1")));
            }
        }
        LepdModel::Mutex { groups, weights } => {
            check_partition(n, groups)?;
            if weights.len() != groups.len() {
                return Err(Error::InvalidLepd("one weight vector is required per group".into()));
            }
            for (g, (group, w)) in groups.iter().zip(weights).enumerate() {
                if w.len() != group.len() {
                    return Err(Error::InvalidLepd(format!("group {g} has {} members but {} weights", group.len(), w.len())));
                }
                for &wk in w {
                    check_probability("mutex weight", wk)?;
                }
                let sum: f64 = w.iter().sum();
                if (sum - 1.0).abs() > SUM_TOLERANCE {
                    return Err(Error::InvalidLepd(format!("weights of group {g} sum to {sum}, not 1")));
                }
            }
        }
        LepdModel::Latent { groups, p_z, p_l } => {
            check_partition(n, groups)?;
            check_probability("p_z", *p_z)?;
            check_probability("p_l", *p_l)?;
        }
        LepdModel::Independent(p) => {
            if p.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: p.len(),
                });
            }
            for &pi in p {
                check_probability("presence probability", pi)?;
            }
        }
    }
    Ok(())
}
