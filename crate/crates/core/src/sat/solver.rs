use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::time::Instant;

use super::{Budget, Cnf, Lit, SolveResult};

fn lit_value(values: &[Option<bool>], l: Lit) -> Option<bool> {
    values[l.var()].map(|v| v == l.is_positive())
}

/// Luby restart sequence 1, 1, 2, 1, 1, 2, 4, ...
fn luby(mut i: u64) -> u64 {
    let (mut size, mut seq) = (1u64, 0u32);
    while size < i + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != i {
        size = (size - 1) >> 1;
        seq -= 1;
        i %= size;
    }
    1 << seq
}

const RESTART_BASE: u64 = 100;
const ACTIVITY_DECAY: f64 = 0.95;

/// Conflict-driven clause-learning search: two watched literals, first-UIP
/// learning, activity-ordered branching with phase saving, Luby restarts.
/// Fully deterministic.
pub struct Solver {
    num_vars: usize,
    clauses: Vec<Vec<Lit>>,
    watches: Vec<Vec<usize>>,
    values: Vec<Option<bool>>,
    level: Vec<usize>,
    reason: Vec<Option<usize>>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    order: BinaryHeap<(u64, Reverse<usize>)>,
    phase: Vec<bool>,
    seen: Vec<bool>,
    ok: bool,
    conflicts: u64,
}

impl Solver {
    pub fn new(num_vars: usize) -> Self {
        let mut s = Solver {
            num_vars,
            clauses: Vec::new(),
            watches: vec![Vec::new(); 2 * num_vars],
            values: vec![None; num_vars],
            level: vec![0; num_vars],
            reason: vec![None; num_vars],
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: vec![0.0; num_vars],
            var_inc: 1.0,
            order: BinaryHeap::new(),
            phase: vec![false; num_vars],
            seen: vec![false; num_vars],
            ok: true,
            conflicts: 0,
        };
        for v in 0..num_vars {
            s.order.push((0f64.to_bits(), Reverse(v)));
        }
        s
    }

    pub fn from_cnf(cnf: &Cnf) -> Self {
        let mut s = Solver::new(cnf.num_vars());
        for clause in cnf.clauses() {
            s.add_clause(clause);
        }
        s
    }

    pub fn conflicts(&self) -> u64 {
        self.conflicts
    }

    fn decision_level(&self) -> usize {
        self.trail_lim.len()
    }

    fn value(&self, l: Lit) -> Option<bool> {
        lit_value(&self.values, l)
    }

    /// Adds a clause before search. Returns false once the formula is known
    /// unsatisfiable.
    pub fn add_clause(&mut self, clause: &[Lit]) -> bool {
        if !self.ok {
            return false;
        }
        assert_eq!(self.decision_level(), 0, "clauses are added before search");
        let mut c: Vec<Lit> = clause.to_vec();
        c.sort();
        c.dedup();
        if c.windows(2).any(|w| w[0] == !w[1]) {
            return true;
        }
        if c.iter().any(|&l| self.value(l) == Some(true)) {
            return true;
        }
        c.retain(|&l| self.value(l).is_none());
        match c.len() {
            0 => self.ok = false,
            1 => {
                self.enqueue(c[0], None);
                if self.propagate().is_some() {
                    self.ok = false;
                }
            }
            _ => {
                let idx = self.clauses.len();
                self.watches[c[0].code()].push(idx);
                self.watches[c[1].code()].push(idx);
                self.clauses.push(c);
            }
        }
        self.ok
    }

    fn enqueue(&mut self, l: Lit, reason: Option<usize>) {
        let v = l.var();
        debug_assert!(self.values[v].is_none());
        self.values[v] = Some(l.is_positive());
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    /// Unit propagation; returns a conflicting clause if one arises.
    fn propagate(&mut self) -> Option<usize> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[false_lit.code()]);
            let (mut i, mut j) = (0, 0);
            let mut conflict = None;
            while i < ws.len() {
                let ci = ws[i];
                i += 1;
                let clause = &mut self.clauses[ci];
                if clause[0] == false_lit {
                    clause.swap(0, 1);
                }
                if lit_value(&self.values, clause[0]) == Some(true) {
                    ws[j] = ci;
                    j += 1;
                    continue;
                }
                let replacement =
                    (2..clause.len()).find(|&k| lit_value(&self.values, clause[k]) != Some(false));
                if let Some(k) = replacement {
                    clause.swap(1, k);
                    let watch = clause[1].code();
                    self.watches[watch].push(ci);
                    continue;
                }
                ws[j] = ci;
                j += 1;
                let first = clause[0];
                if lit_value(&self.values, first) == Some(false) {
                    conflict = Some(ci);
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.enqueue(first, Some(ci));
                }
            }
            ws.truncate(j);
            self.watches[false_lit.code()] = ws;
            if conflict.is_some() {
                self.qhead = self.trail.len();
                return conflict;
            }
        }
        None
    }

    fn bump(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
            self.order = (0..self.num_vars)
                .filter(|&u| self.values[u].is_none())
                .map(|u| (self.activity[u].to_bits(), Reverse(u)))
                .collect();
        }
        if self.values[v].is_none() {
            self.order.push((self.activity[v].to_bits(), Reverse(v)));
        }
    }

    /// First-UIP conflict analysis. Returns the learnt clause (asserting
    /// literal first, highest remaining level second) and the backjump level.
    fn analyze(&mut self, mut clause_idx: usize) -> (Vec<Lit>, usize) {
        let mut learnt = vec![Lit::pos(0)];
        let mut pending = 0usize;
        let mut idx = self.trail.len();
        let mut p: Option<Lit> = None;
        loop {
            let skip = usize::from(p.is_some());
            let clause = self.clauses[clause_idx].clone();
            for &q in &clause[skip..] {
                let v = q.var();
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.bump(v);
                    if self.level[v] >= self.decision_level() {
                        pending += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if self.seen[self.trail[idx].var()] {
                    break;
                }
            }
            let lit = self.trail[idx];
            self.seen[lit.var()] = false;
            p = Some(lit);
            pending -= 1;
            if pending == 0 {
                break;
            }
            clause_idx = self.reason[lit.var()].expect("implied literal has a reason");
        }
        learnt[0] = !p.expect("conflict analysis visits at least one literal");
        for l in &learnt[1..] {
            self.seen[l.var()] = false;
        }
        let mut backjump = 0;
        if learnt.len() > 1 {
            let (best, _) = learnt
                .iter()
                .enumerate()
                .skip(1)
                .max_by_key(|(i, l)| (self.level[l.var()], Reverse(*i)))
                .unwrap();
            learnt.swap(1, best);
            backjump = self.level[learnt[1].var()];
        }
        (learnt, backjump)
    }

    fn cancel_until(&mut self, level: usize) {
        if self.decision_level() <= level {
            return;
        }
        let start = self.trail_lim[level];
        for i in (start..self.trail.len()).rev() {
            let l = self.trail[i];
            let v = l.var();
            self.phase[v] = l.is_positive();
            self.values[v] = None;
            self.reason[v] = None;
            self.order.push((self.activity[v].to_bits(), Reverse(v)));
        }
        self.trail.truncate(start);
        self.trail_lim.truncate(level);
        self.qhead = start;
    }

    fn pick_branch(&mut self) -> Option<usize> {
        while let Some((bits, Reverse(v))) = self.order.pop() {
            if self.values[v].is_none() && bits == self.activity[v].to_bits() {
                return Some(v);
            }
        }
        (0..self.num_vars).find(|&v| self.values[v].is_none())
    }

    pub fn solve(&mut self, budget: Budget) -> SolveResult {
        if !self.ok || self.propagate().is_some() {
            self.ok = false;
            return SolveResult::Unsat;
        }
        let start = Instant::now();
        let mut restarts = 0u64;
        let mut since_restart = 0u64;
        loop {
            if let Some(conflict) = self.propagate() {
                self.conflicts += 1;
                since_restart += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    return SolveResult::Unsat;
                }
                let (learnt, backjump) = self.analyze(conflict);
                self.cancel_until(backjump);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], None);
                } else {
                    let idx = self.clauses.len();
                    self.watches[learnt[0].code()].push(idx);
                    self.watches[learnt[1].code()].push(idx);
                    let asserting = learnt[0];
                    self.clauses.push(learnt);
                    self.enqueue(asserting, Some(idx));
                }
                self.var_inc /= ACTIVITY_DECAY;
                if self.conflicts >= budget.max_conflicts || start.elapsed() >= budget.max_time {
                    self.cancel_until(0);
                    return SolveResult::Unknown {
                        conflicts: self.conflicts,
                    };
                }
            } else {
                if since_restart >= RESTART_BASE * luby(restarts) {
                    restarts += 1;
                    since_restart = 0;
                    self.cancel_until(0);
                    continue;
                }
                match self.pick_branch() {
                    None => {
                        let model = self.values.iter().map(|v| v.unwrap_or(false)).collect();
                        self.cancel_until(0);
                        return SolveResult::Sat(model);
                    }
                    Some(v) => {
                        self.trail_lim.push(self.trail.len());
                        let lit = Lit::new(v, self.phase[v]);
                        self.enqueue(lit, None);
                    }
                }
            }
        }
    }
}
