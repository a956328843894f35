use serde::{Deserialize, Serialize};

use crate::fol::BinaryPred;
use crate::instance::Task;
use crate::world::SamplingParams;

/// How unknown atoms must interact with the gold formula in an EC world.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relevance {
    /// Accept when the all-false or the all-true completion makes gold match.
    ExtremeOr,
    /// Reject when both extreme completions make gold match.
    MiddleAllowed,
}

impl Relevance {
    pub fn accepts(self, all_false: bool, all_true: bool) -> bool {
        match self {
            Relevance::ExtremeOr => all_false || all_true,
            Relevance::MiddleAllowed => !(all_false && all_true),
        }
    }
}

fn default_kill_candidates() -> usize {
    8
}

fn default_equivalence_bank() -> usize {
    64
}

/// Generation parameters of one task band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandConfig {
    pub task: Task,
    pub name: String,
    /// Inclusive domain-size range.
    pub domain: (usize, usize),
    /// Worlds per instance (FullObs, EC).
    #[serde(default)]
    pub worlds: usize,
    /// Inclusive YES / NO world-count ranges (CI).
    #[serde(default)]
    pub yes_worlds: (usize, usize),
    #[serde(default)]
    pub no_worlds: (usize, usize),
    /// Inclusive gold quantifier-depth range.
    pub qd: (usize, usize),
    /// Required share of lift-hard golds; unconstrained when absent.
    #[serde(default)]
    pub lift_fraction: Option<f64>,
    #[serde(default)]
    pub unknown_rate: f64,
    #[serde(default)]
    pub unknown_preds: Vec<BinaryPred>,
    #[serde(default)]
    pub relevance: Option<Relevance>,
    pub per_gold_cap: usize,
    pub per_subfamily_cap: usize,
    /// Whole-instance resamples before giving up on a gold.
    pub instance_retries: u32,
    /// Candidate worlds tried per world slot.
    pub world_retries: u32,
    /// Killing candidates compared per FullObs slot.
    #[serde(default = "default_kill_candidates")]
    pub kill_candidates: usize,
    /// Reference worlds used to set aside hypotheses indistinguishable
    /// from the gold before kill tracking (FullObs).
    #[serde(default = "default_equivalence_bank")]
    pub equivalence_bank: usize,
    /// Candidate worlds tried per NO world (CI).
    #[serde(default)]
    pub no_world_attempts: u32,
    /// Near-miss survivor band after the YES phase (CI).
    #[serde(default)]
    pub near_miss_band: (usize, usize),
    /// Total survivor band after the YES phase (CI).
    #[serde(default)]
    pub survivor_band: (usize, usize),
    /// Golds tried per instance slot, the first included.
    pub gold_attempts: u32,
    pub p_unary: f64,
    pub balance: (f64, f64),
    pub out_degree: usize,
}

impl BandConfig {
    fn base(task: Task, name: &str, domain: (usize, usize), qd: (usize, usize)) -> Self {
        BandConfig {
            task,
            name: name.to_string(),
            domain,
            worlds: 0,
            yes_worlds: (0, 0),
            no_worlds: (0, 0),
            qd,
            lift_fraction: None,
            unknown_rate: 0.0,
            unknown_preds: Vec::new(),
            relevance: None,
            per_gold_cap: 3,
            per_subfamily_cap: 6,
            instance_retries: 20,
            world_retries: 200,
            kill_candidates: default_kill_candidates(),
            equivalence_bank: default_equivalence_bank(),
            no_world_attempts: 0,
            near_miss_band: (0, 0),
            survivor_band: (0, 0),
            gold_attempts: 10,
            p_unary: 0.4,
            balance: (0.15, 0.85),
            out_degree: 2,
        }
    }

    fn fullobs(name: &str, domain: (usize, usize), k: usize, qd: (usize, usize)) -> Self {
        BandConfig {
            worlds: k,
            ..Self::base(Task::FullObs, name, domain, qd)
        }
    }

    fn ci(name: &str, lift: f64) -> Self {
        BandConfig {
            yes_worlds: (7, 8),
            no_worlds: (2, 3),
            lift_fraction: Some(lift),
            no_world_attempts: 500,
            near_miss_band: (1, 2),
            survivor_band: (2, 4),
            ..Self::base(Task::Ci, name, (7, 9), (1, 2))
        }
    }

    fn ec(name: &str, domain: (usize, usize), qd: usize, preds: &[BinaryPred], mode: Relevance) -> Self {
        BandConfig {
            worlds: 3,
            lift_fraction: Some(0.0),
            unknown_rate: 0.2,
            unknown_preds: preds.to_vec(),
            relevance: Some(mode),
            ..Self::base(Task::Ec, name, domain, (qd, qd))
        }
    }

    /// The built-in v1 bands.
    pub fn builtin_bands() -> Vec<BandConfig> {
        use BinaryPred::{R, S};
        vec![
            Self::fullobs("simple", (5, 7), 4, (1, 1)),
            Self::fullobs("easy", (5, 7), 6, (2, 2)),
            Self::fullobs("medium", (7, 10), 8, (2, 2)),
            Self::fullobs("hard", (8, 12), 10, (2, 2)),
            BandConfig {
                lift_fraction: Some(1.0),
                ..Self::fullobs("extreme", (8, 12), 10, (2, 2))
            },
            Self::ci("core", 0.0),
            Self::ci("lift_mix", 0.35),
            Self::ec("core", (6, 8), 1, &[R, S], Relevance::ExtremeOr),
            Self::ec("hard", (7, 9), 2, &[R], Relevance::MiddleAllowed),
        ]
    }

    pub fn builtin(task: Task, name: &str) -> Option<BandConfig> {
        Self::builtin_bands()
            .into_iter()
            .find(|b| b.task == task && b.name == name)
    }

    pub fn sampling(&self) -> SamplingParams {
        SamplingParams {
            domain: self.domain,
            p_unary: self.p_unary,
            balance: self.balance,
            out_degree: self.out_degree,
            ..SamplingParams::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct BandFile {
    band: Vec<BandConfig>,
}

/// Parses a band configuration file: a TOML document of `[[band]]` tables.
pub fn parse_bands(text: &str) -> Result<Vec<BandConfig>, toml::de::Error> {
    Ok(toml::from_str::<BandFile>(text)?.band)
}

pub fn bands_to_toml(bands: &[BandConfig]) -> String {
    toml::to_string(&BandFile {
        band: bands.to_vec(),
    })
    .expect("band configs serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_rows() {
        let simple = BandConfig::builtin(Task::FullObs, "simple").unwrap();
        assert_eq!((simple.worlds, simple.domain, simple.qd), (4, (5, 7), (1, 1)));
        let ci = BandConfig::builtin(Task::Ci, "core").unwrap();
        assert_eq!((ci.yes_worlds, ci.no_worlds, ci.domain), ((7, 8), (2, 3), (7, 9)));
        let hard = BandConfig::builtin(Task::Ec, "hard").unwrap();
        assert_eq!(hard.unknown_preds, vec![BinaryPred::R]);
        assert_eq!(hard.relevance, Some(Relevance::MiddleAllowed));
        assert!(BandConfig::builtin(Task::Ec, "extreme").is_none());
    }

    #[test]
    fn toml_roundtrip() {
        let bands = BandConfig::builtin_bands();
        assert_eq!(parse_bands(&bands_to_toml(&bands)).unwrap(), bands);
    }

    #[test]
    fn relevance_modes() {
        assert!(Relevance::ExtremeOr.accepts(true, false));
        assert!(!Relevance::ExtremeOr.accepts(false, false));
        assert!(Relevance::MiddleAllowed.accepts(false, false));
        assert!(!Relevance::MiddleAllowed.accepts(true, true));
    }
}
