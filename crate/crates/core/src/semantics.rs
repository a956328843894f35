//! Exact finite model checking.

use serde::{Deserialize, Serialize};
use tracing::warn;

use crate::fol::{Formula, Var};
use crate::world::{members, World};

/// Assignment of domain elements to the four variable names.
type Env = [usize; 4];

const UNBOUND: usize = usize::MAX;

fn eval(f: &Formula, w: &World, env: &mut Env) -> bool {
    match f {
        Formula::Unary(p, v) => w.unary(*p, env[v.index()]),
        Formula::Binary(p, a, b) => w.binary(*p, env[a.index()], env[b.index()]),
        Formula::Eq(a, b) => env[a.index()] == env[b.index()],
        Formula::Not(body) => !eval(body, w, env),
        Formula::And(children) => children.iter().all(|c| eval(c, w, env)),
        Formula::Or(children) => children.iter().any(|c| eval(c, w, env)),
        Formula::Forall(v, body) | Formula::Exists(v, body) => {
            let universal = matches!(f, Formula::Forall(..));
            let saved = env[v.index()];
            let mut result = universal;
            for d in 0..w.size() {
                env[v.index()] = d;
                if eval(body, w, env) != universal {
                    result = !universal;
                    break;
                }
            }
            env[v.index()] = saved;
            result
        }
    }
}

/// Whether `w ⊨ f[x := a]`. Panics if `f` has free variables other than `x`.
pub fn evaluate(f: &Formula, w: &World, a: usize) -> bool {
    assert!(a < w.size(), "element a{a} outside domain of size {}", w.size());
    let mut env = [UNBOUND; 4];
    env[Var::X.index()] = a;
    eval(f, w, &mut env)
}

/// Set of domain elements on which a formula holds.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Extension(Vec<bool>);

impl Extension {
    pub fn contains(&self, a: usize) -> bool {
        self.0[a]
    }

    pub fn members(&self) -> Vec<usize> {
        members(&self.0)
    }

    pub fn len(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_flags(&self) -> &[bool] {
        &self.0
    }

    pub fn into_flags(self) -> Vec<bool> {
        self.0
    }
}

pub fn extension(f: &Formula, w: &World) -> Extension {
    Extension((0..w.size()).map(|a| evaluate(f, w, a)).collect())
}

/// Exact match of the predicted extension against the world's target.
pub fn matches(f: &Formula, w: &World) -> bool {
    (0..w.size()).all(|a| evaluate(f, w, a) == w.target()[a])
}

pub fn solves_fullobs<'a>(f: &Formula, worlds: impl IntoIterator<Item = &'a World>) -> bool {
    let mut any = false;
    for w in worlds {
        any = true;
        if !matches(f, w) {
            return false;
        }
    }
    if !any {
        warn!("full-observation check over zero worlds is vacuously true");
    }
    true
}

pub fn solves_ci<'a>(
    f: &Formula,
    yes: impl IntoIterator<Item = &'a World>,
    no: impl IntoIterator<Item = &'a World>,
) -> bool {
    yes.into_iter().all(|w| matches(f, w)) && no.into_iter().all(|w| !matches(f, w))
}

/// Per-world false positives / negatives of a formula against the target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorProfile {
    pub false_positives: usize,
    pub false_negatives: usize,
    pub fp_rate: f64,
    pub fn_rate: f64,
}

impl ErrorProfile {
    pub fn mismatches(&self) -> usize {
        self.false_positives + self.false_negatives
    }

    pub fn is_exact(&self) -> bool {
        self.mismatches() == 0
    }
}

pub fn error_profile(f: &Formula, w: &World) -> ErrorProfile {
    let ext = extension(f, w);
    let (mut fp, mut fneg) = (0, 0);
    for a in 0..w.size() {
        match (ext.contains(a), w.target()[a]) {
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            _ => {}
        }
    }
    let n = w.size().max(1) as f64;
    ErrorProfile {
        false_positives: fp,
        false_negatives: fneg,
        fp_rate: fp as f64 / n,
        fn_rate: fneg as f64 / n,
    }
}

/// Mean mismatch count over NO worlds; `None` when there are none.
pub fn no_margin<'a>(f: &Formula, no: impl IntoIterator<Item = &'a World>) -> Option<f64> {
    let counts: Vec<usize> = no
        .into_iter()
        .map(|w| error_profile(f, w).mismatches())
        .collect();
    (!counts.is_empty()).then(|| counts.iter().sum::<usize>() as f64 / counts.len() as f64)
}
