//! Finite structures over the P/Q/R/S signature, random world sampling and
//! unknown-atom masking.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fol::{BinaryPred, Formula, UnaryPred};
use crate::rng;
use crate::semantics;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorldError {
    #[error("unary balance window unreachable after {retries} resamples (domain size {size})")]
    SamplingExhausted { retries: u32, size: usize },
    #[error("invalid sampling parameters: {0}")]
    InvalidParams(String),
}

/// A ground atom over domain-element indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GroundAtom {
    Unary(UnaryPred, usize),
    Binary(BinaryPred, usize, usize),
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroundAtom::Unary(p, a) => write!(f, "{}(a{})", p.name(), a),
            GroundAtom::Binary(p, a, b) => write!(f, "{}(a{},a{})", p.name(), a, b),
        }
    }
}

impl FromStr for GroundAtom {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("malformed ground atom `{s}`");
        let (head, rest) = s.split_once('(').ok_or_else(bad)?;
        let inner = rest.strip_suffix(')').ok_or_else(bad)?;
        let args = inner
            .split(',')
            .map(|a| {
                a.trim()
                    .strip_prefix('a')
                    .and_then(|n| n.parse::<usize>().ok())
                    .ok_or_else(bad)
            })
            .collect::<Result<Vec<_>, _>>()?;
        match (head, args.as_slice()) {
            ("P", [a]) => Ok(GroundAtom::Unary(UnaryPred::P, *a)),
            ("Q", [a]) => Ok(GroundAtom::Unary(UnaryPred::Q, *a)),
            ("R", [a, b]) => Ok(GroundAtom::Binary(BinaryPred::R, *a, *b)),
            ("S", [a, b]) => Ok(GroundAtom::Binary(BinaryPred::S, *a, *b)),
            _ => Err(bad()),
        }
    }
}

impl Serialize for GroundAtom {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GroundAtom {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// A fully specified finite structure with its target set. Closed world:
/// every atom not set is false.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct World {
    size: usize,
    unary: [Vec<bool>; 2],
    binary: [Vec<bool>; 2],
    target: Vec<bool>,
}

impl World {
    /// All atoms false, empty target.
    pub fn empty(size: usize) -> Self {
        World {
            size,
            unary: [vec![false; size], vec![false; size]],
            binary: [vec![false; size * size], vec![false; size * size]],
            target: vec![false; size],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn unary(&self, p: UnaryPred, a: usize) -> bool {
        self.unary[p.index()][a]
    }

    pub fn binary(&self, p: BinaryPred, a: usize, b: usize) -> bool {
        self.binary[p.index()][a * self.size + b]
    }

    pub fn atom(&self, atom: GroundAtom) -> bool {
        match atom {
            GroundAtom::Unary(p, a) => self.unary(p, a),
            GroundAtom::Binary(p, a, b) => self.binary(p, a, b),
        }
    }

    pub fn set_atom(&mut self, atom: GroundAtom, value: bool) {
        match atom {
            GroundAtom::Unary(p, a) => self.unary[p.index()][a] = value,
            GroundAtom::Binary(p, a, b) => self.binary[p.index()][a * self.size + b] = value,
        }
    }

    pub fn target(&self) -> &[bool] {
        &self.target
    }

    pub fn set_target(&mut self, target: Vec<bool>) {
        assert_eq!(target.len(), self.size, "target length must equal domain size");
        self.target = target;
    }

    /// Indices of target elements, ascending.
    pub fn target_members(&self) -> Vec<usize> {
        members(&self.target)
    }

    /// Every ground atom of the signature over this domain, in canonical order.
    pub fn all_atoms(&self) -> Vec<GroundAtom> {
        ground_atoms(self.size, &UnaryPred::ALL, &BinaryPred::ALL)
    }

    /// True atoms, in canonical order.
    pub fn true_atoms(&self) -> Vec<GroundAtom> {
        self.all_atoms()
            .into_iter()
            .filter(|a| self.atom(*a))
            .collect()
    }

    /// Number of `p`-successors of `a`.
    pub fn out_degree(&self, p: BinaryPred, a: usize) -> usize {
        (0..self.size).filter(|&b| self.binary(p, a, b)).count()
    }
}

pub(crate) fn members(flags: &[bool]) -> Vec<usize> {
    flags
        .iter()
        .enumerate()
        .filter_map(|(i, &t)| t.then_some(i))
        .collect()
}

/// Ground atoms of the given predicates over `0..size`, unary predicates
/// first, then binary, each in index order.
pub fn ground_atoms(size: usize, unary: &[UnaryPred], binary: &[BinaryPred]) -> Vec<GroundAtom> {
    let mut out = Vec::new();
    for &p in unary {
        out.extend((0..size).map(|a| GroundAtom::Unary(p, a)));
    }
    for &p in binary {
        for a in 0..size {
            out.extend((0..size).map(|b| GroundAtom::Binary(p, a, b)));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Truth {
    False,
    True,
    Unknown,
}

/// A world whose atoms are each known true, known false, or unknown. The
/// target is always fully known.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartialWorld {
    size: usize,
    unary: [Vec<Truth>; 2],
    binary: [Vec<Truth>; 2],
    target: Vec<bool>,
}

impl PartialWorld {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn truth(&self, atom: GroundAtom) -> Truth {
        match atom {
            GroundAtom::Unary(p, a) => self.unary[p.index()][a],
            GroundAtom::Binary(p, a, b) => self.binary[p.index()][a * self.size + b],
        }
    }

    pub fn set_truth(&mut self, atom: GroundAtom, truth: Truth) {
        match atom {
            GroundAtom::Unary(p, a) => self.unary[p.index()][a] = truth,
            GroundAtom::Binary(p, a, b) => self.binary[p.index()][a * self.size + b] = truth,
        }
    }

    pub fn target(&self) -> &[bool] {
        &self.target
    }

    pub fn target_members(&self) -> Vec<usize> {
        members(&self.target)
    }

    pub fn all_atoms(&self) -> Vec<GroundAtom> {
        ground_atoms(self.size, &UnaryPred::ALL, &BinaryPred::ALL)
    }

    fn atoms_with(&self, truth: Truth) -> Vec<GroundAtom> {
        self.all_atoms()
            .into_iter()
            .filter(|a| self.truth(*a) == truth)
            .collect()
    }

    /// Unknown atoms in canonical order.
    pub fn unknown_atoms(&self) -> Vec<GroundAtom> {
        self.atoms_with(Truth::Unknown)
    }

    pub fn known_true_atoms(&self) -> Vec<GroundAtom> {
        self.atoms_with(Truth::True)
    }

    pub fn known_false_atoms(&self) -> Vec<GroundAtom> {
        self.atoms_with(Truth::False)
    }

    pub fn is_fully_known(&self) -> bool {
        self.unary
            .iter()
            .chain(self.binary.iter())
            .all(|v| v.iter().all(|t| *t != Truth::Unknown))
    }

    /// Resolves every unknown atom with `assign` (called in canonical order).
    pub fn complete(&self, mut assign: impl FnMut(GroundAtom) -> bool) -> World {
        let mut world = World::empty(self.size);
        for atom in self.all_atoms() {
            let value = match self.truth(atom) {
                Truth::True => true,
                Truth::False => false,
                Truth::Unknown => assign(atom),
            };
            world.set_atom(atom, value);
        }
        world.target = self.target.clone();
        world
    }

    /// The extreme completion setting every unknown atom to `value`.
    pub fn complete_uniform(&self, value: bool) -> World {
        self.complete(|_| value)
    }

    /// The underlying world when nothing is unknown.
    pub fn to_world(&self) -> Option<World> {
        self.is_fully_known()
            .then(|| self.complete(|_| unreachable!("no unknown atoms")))
    }
}

impl From<&World> for PartialWorld {
    fn from(w: &World) -> Self {
        let lift = |v: &Vec<bool>| {
            v.iter()
                .map(|&b| if b { Truth::True } else { Truth::False })
                .collect::<Vec<_>>()
        };
        PartialWorld {
            size: w.size,
            unary: [lift(&w.unary[0]), lift(&w.unary[1])],
            binary: [lift(&w.binary[0]), lift(&w.binary[1])],
            target: w.target.clone(),
        }
    }
}

/// Parameters of the random world sampler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingParams {
    /// Inclusive domain-size range.
    pub domain: (usize, usize),
    pub p_unary: f64,
    /// Inclusive bounds on the fraction of elements satisfying each unary predicate.
    pub balance: (f64, f64),
    /// Exact number of distinct successors per element, per binary relation.
    pub out_degree: usize,
    pub balance_retries: u32,
}

impl Default for SamplingParams {
    fn default() -> Self {
        SamplingParams {
            domain: (5, 7),
            p_unary: 0.4,
            balance: (0.15, 0.85),
            out_degree: 2,
            balance_retries: 100,
        }
    }
}

impl SamplingParams {
    pub fn with_domain(min: usize, max: usize) -> Self {
        SamplingParams {
            domain: (min, max),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        let bad = |m: &str| Err(WorldError::InvalidParams(m.to_string()));
        if !(self.p_unary > 0.0 && self.p_unary < 1.0) {
            return bad("p_unary must lie in (0, 1)");
        }
        let (lo, hi) = self.balance;
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return bad("balance window must lie within [0, 1]");
        }
        if self.domain.0 == 0 || self.domain.0 > self.domain.1 {
            return bad("domain range must be non-empty and positive");
        }
        if self.out_degree >= self.domain.0 {
            return bad("out_degree must be smaller than every domain size");
        }
        Ok(())
    }
}

fn sample_unary(params: &SamplingParams, size: usize, rng: &mut impl Rng) -> Result<Vec<bool>, WorldError> {
    let (lo, hi) = params.balance;
    for _ in 0..=params.balance_retries {
        let values: Vec<bool> = (0..size).map(|_| rng.gen_bool(params.p_unary)).collect();
        let frac = values.iter().filter(|&&b| b).count() as f64 / size as f64;
        if lo <= frac && frac <= hi {
            return Ok(values);
        }
    }
    Err(WorldError::SamplingExhausted {
        retries: params.balance_retries,
        size,
    })
}

/// Samples a world and labels its target with the extension of `gold`.
pub fn sample_world_with(
    params: &SamplingParams,
    gold: &Formula,
    rng: &mut impl Rng,
) -> Result<World, WorldError> {
    params.validate()?;
    let size = rng.gen_range(params.domain.0..=params.domain.1);
    let mut world = World::empty(size);
    for p in UnaryPred::ALL {
        world.unary[p.index()] = sample_unary(params, size, rng)?;
    }
    for p in BinaryPred::ALL {
        for a in 0..size {
            let others: Vec<usize> = (0..size).filter(|&b| b != a).collect();
            for &b in others.choose_multiple(rng, params.out_degree) {
                world.set_atom(GroundAtom::Binary(p, a, b), true);
            }
        }
    }
    let target = semantics::extension(gold, &world).into_flags();
    world.target = target;
    Ok(world)
}

/// Deterministic in `(params, gold, seed)`.
pub fn sample_world(params: &SamplingParams, gold: &Formula, seed: u64) -> Result<World, WorldError> {
    sample_world_with(params, gold, &mut rng::rng(seed))
}

/// Number of atoms masked for a grid of `total` atoms at `rate`.
pub fn masked_count(rate: f64, total: usize) -> usize {
    // The epsilon absorbs representation error such as 0.29 * 100 = 28.999...
    ((rate * total as f64) + 1e-9).floor() as usize
}

/// Hides `floor(rate * total)` atoms of the eligible binary predicates,
/// chosen by a seeded shuffle of their full ground-atom grid.
pub fn mask_unknowns_with(
    world: &World,
    rate: f64,
    eligible: &[BinaryPred],
    rng: &mut impl Rng,
) -> PartialWorld {
    assert!((0.0..1.0).contains(&rate), "unknown rate must lie in [0, 1)");
    let mut partial = PartialWorld::from(world);
    let mut preds = eligible.to_vec();
    preds.sort();
    preds.dedup();
    let mut grid = ground_atoms(world.size, &[], &preds);
    grid.shuffle(rng);
    let count = masked_count(rate, grid.len());
    for atom in &grid[..count] {
        partial.set_truth(*atom, Truth::Unknown);
    }
    partial
}

pub fn mask_unknowns(world: &World, rate: f64, eligible: &[BinaryPred], seed: u64) -> PartialWorld {
    mask_unknowns_with(world, rate, eligible, &mut rng::rng(seed))
}
