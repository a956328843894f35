//! Problem instances and their on-disk JSON form.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fol::{BinaryPred, Family, Formula, UnaryPred};
use crate::world::{GroundAtom, PartialWorld, Truth, World};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed instance document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid instance: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    FullObs,
    Ci,
    Ec,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::FullObs, Task::Ci, Task::Ec];

    pub fn name(self) -> &'static str {
        match self {
            Task::FullObs => "fullobs",
            Task::Ci => "ci",
            Task::Ec => "ec",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Task::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown task `{s}` (expected fullobs, ci or ec)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Train,
    Yes,
    No,
}

/// One world as stored on disk. Atom lists hold known-true atoms only;
/// unknown atoms are listed separately and everything else is false.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldRecord {
    pub role: Role,
    pub domain_size: usize,
    #[serde(rename = "P")]
    pub p: Vec<usize>,
    #[serde(rename = "Q")]
    pub q: Vec<usize>,
    #[serde(rename = "R")]
    pub r: Vec<(usize, usize)>,
    #[serde(rename = "S")]
    pub s: Vec<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unknown: Vec<GroundAtom>,
    pub target_true: Vec<usize>,
    /// Unknown atoms that were true before masking.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hidden_true: Vec<GroundAtom>,
}

impl WorldRecord {
    fn from_parts(role: Role, pw: &PartialWorld, hidden: Option<&World>) -> Self {
        let unary = |p| {
            (0..pw.size())
                .filter(|&a| pw.truth(GroundAtom::Unary(p, a)) == Truth::True)
                .collect()
        };
        let binary = |p| {
            let mut out = Vec::new();
            for a in 0..pw.size() {
                for b in 0..pw.size() {
                    if pw.truth(GroundAtom::Binary(p, a, b)) == Truth::True {
                        out.push((a, b));
                    }
                }
            }
            out
        };
        let unknown = pw.unknown_atoms();
        let hidden_true = match hidden {
            Some(w) => unknown.iter().copied().filter(|a| w.atom(*a)).collect(),
            None => Vec::new(),
        };
        WorldRecord {
            role,
            domain_size: pw.size(),
            p: unary(UnaryPred::P),
            q: unary(UnaryPred::Q),
            r: binary(BinaryPred::R),
            s: binary(BinaryPred::S),
            unknown,
            target_true: pw.target_members(),
            hidden_true,
        }
    }

    pub fn from_world(role: Role, w: &World) -> Self {
        Self::from_parts(role, &PartialWorld::from(w), None)
    }

    /// A masked world, remembering the true values of its unknown atoms.
    pub fn from_masked(role: Role, pw: &PartialWorld, original: &World) -> Self {
        Self::from_parts(role, pw, Some(original))
    }

    fn check(&self) -> Result<(), FormatError> {
        let n = self.domain_size;
        let bad = |what: &str| Err(FormatError::Invalid(format!("{what} out of range for domain size {n}")));
        if n == 0 {
            return Err(FormatError::Invalid("empty domain".into()));
        }
        if self.p.iter().chain(&self.q).chain(&self.target_true).any(|&a| a >= n) {
            return bad("element index");
        }
        if self.r.iter().chain(&self.s).any(|&(a, b)| a >= n || b >= n) {
            return bad("edge");
        }
        let atom_ok = |atom: &GroundAtom| match *atom {
            GroundAtom::Unary(_, a) => a < n,
            GroundAtom::Binary(_, a, b) => a < n && b < n,
        };
        if !self.unknown.iter().chain(&self.hidden_true).all(atom_ok) {
            return bad("unknown atom");
        }
        Ok(())
    }

    /// The observed world; unknown atoms are marked unknown.
    pub fn partial(&self) -> PartialWorld {
        let mut w = World::empty(self.domain_size);
        for &a in &self.p {
            w.set_atom(GroundAtom::Unary(UnaryPred::P, a), true);
        }
        for &a in &self.q {
            w.set_atom(GroundAtom::Unary(UnaryPred::Q, a), true);
        }
        for &(a, b) in &self.r {
            w.set_atom(GroundAtom::Binary(BinaryPred::R, a, b), true);
        }
        for &(a, b) in &self.s {
            w.set_atom(GroundAtom::Binary(BinaryPred::S, a, b), true);
        }
        let mut target = vec![false; self.domain_size];
        for &a in &self.target_true {
            target[a] = true;
        }
        w.set_target(target);
        let mut pw = PartialWorld::from(&w);
        for atom in &self.unknown {
            pw.set_truth(*atom, Truth::Unknown);
        }
        pw
    }

    /// The world with unknown atoms false; exact when nothing is unknown.
    pub fn world(&self) -> World {
        self.partial().complete_uniform(false)
    }

    /// The pre-masking world, using `hidden_true` for unknown atoms.
    pub fn original(&self) -> World {
        self.partial().complete(|atom| self.hidden_true.contains(&atom))
    }

    pub fn target(&self) -> Vec<bool> {
        let mut t = vec![false; self.domain_size];
        for &a in &self.target_true {
            t[a] = true;
        }
        t
    }
}

/// A surviving or killed trap hypothesis of a contrastive instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrapRecord {
    pub formula: Formula,
    pub near_miss: bool,
    /// Indices (into the instance's worlds) of NO worlds this trap matches exactly.
    pub killed_by: Vec<usize>,
}

/// Extreme-completion outcomes of one masked world.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelevanceRecord {
    pub all_false: bool,
    pub all_true: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Per world, hypotheses it eliminated among those surviving before it.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub kill_counts: Vec<usize>,
    /// Survivors after each world.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub survivor_history: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub traps: Vec<TrapRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub relevance: Vec<RelevanceRecord>,
    /// Instance-level attempts spent before acceptance.
    pub attempts: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub task: Task,
    pub band: String,
    pub instance_id: String,
    pub seed: u64,
    pub gold_formula: Formula,
    pub gold_ast: usize,
    pub gold_qd: usize,
    pub family: Family,
    pub lift_hard: bool,
    pub subfamily: String,
    pub worlds: Vec<WorldRecord>,
    /// Held-out worlds, when generated.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub holdout: Vec<WorldRecord>,
    pub diagnostics: Diagnostics,
}

impl ProblemInstance {
    pub fn worlds_with(&self, role: Role) -> Vec<World> {
        self.worlds
            .iter()
            .filter(|w| w.role == role)
            .map(WorldRecord::world)
            .collect()
    }

    pub fn partial_worlds(&self) -> Vec<PartialWorld> {
        self.worlds.iter().map(WorldRecord::partial).collect()
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("instances always serialize");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self, FormatError> {
        let inst: ProblemInstance = serde_json::from_str(text)?;
        inst.check()?;
        Ok(inst)
    }

    fn check(&self) -> Result<(), FormatError> {
        self.gold_formula
            .validate()
            .map_err(|e| FormatError::Invalid(format!("gold formula: {e}")))?;
        if self.worlds.is_empty() {
            return Err(FormatError::Invalid("instance has no worlds".into()));
        }
        for w in self.worlds.iter().chain(&self.holdout) {
            w.check()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fol::parse;
    use crate::world::mask_unknowns;

    fn sample() -> ProblemInstance {
        let gold = parse("(exists y (and (R x y) (P y)))").unwrap();
        let mut w = World::empty(3);
        for atom in ["R(a0,a1)", "R(a1,a2)", "P(a1)", "S(a2,a0)"] {
            w.set_atom(atom.parse().unwrap(), true);
        }
        w.set_target(crate::semantics::extension(&gold, &w).into_flags());
        let pw = mask_unknowns(&w, 0.5, &[BinaryPred::R], 3);
        ProblemInstance {
            task: Task::Ec,
            band: "core".into(),
            instance_id: "ec_core_0000".into(),
            seed: 9,
            gold_ast: gold.ast_size(),
            gold_qd: 1,
            family: gold.classify_family(),
            lift_hard: false,
            subfamily: crate::pool::subfamily_key(&gold),
            gold_formula: gold,
            worlds: vec![WorldRecord::from_masked(Role::Train, &pw, &w)],
            holdout: Vec::new(),
            diagnostics: Diagnostics::default(),
        }
    }

    #[test]
    fn json_roundtrip_is_lossless_and_stable() {
        let inst = sample();
        let text = inst.to_json();
        let back = ProblemInstance::from_json(&text).unwrap();
        assert_eq!(back, inst);
        assert_eq!(back.to_json(), text);
        assert!(text.contains("\"task\": \"ec\""));
        assert!(text.contains("\"R(a"));
    }

    #[test]
    fn masked_world_restores_original() {
        let inst = sample();
        let rec = &inst.worlds[0];
        assert_eq!(rec.unknown.len(), 4);
        let original = rec.original();
        assert!(original.atom("R(a0,a1)".parse().unwrap()));
        assert!(original.atom("S(a2,a0)".parse().unwrap()));
        assert_eq!(original.target(), &[true, false, false]);
    }

    #[test]
    fn malformed_documents() {
        let text = sample().to_json();
        assert!(matches!(
            ProblemInstance::from_json(&text[..text.len() / 2]),
            Err(FormatError::Json(_))
        ));
        let out_of_range = text.replace("\"domain_size\": 3", "\"domain_size\": 1");
        assert!(matches!(
            ProblemInstance::from_json(&out_of_range),
            Err(FormatError::Invalid(_))
        ));
    }

    #[test]
    fn task_names() {
        assert_eq!("FullObs".parse::<Task>().unwrap(), Task::FullObs);
        assert!("bogus".parse::<Task>().is_err());
    }
}
