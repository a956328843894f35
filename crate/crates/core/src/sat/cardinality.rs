use super::{Cnf, Lit};

/// Adds clauses forcing at most `k` of `lits` to be true, using a sequential
/// counter with `(n - 1) * k` auxiliary variables.
pub fn at_most_k(cnf: &mut Cnf, lits: &[Lit], k: usize) {
    let n = lits.len();
    if k >= n {
        return;
    }
    if k == 0 {
        for &l in lits {
            cnf.add_clause([!l]);
        }
        return;
    }
    // s[i][j]: at least j + 1 of lits[0..=i] are true.
    let s: Vec<Vec<Lit>> = (0..n - 1)
        .map(|_| (0..k).map(|_| Lit::pos(cnf.new_var())).collect())
        .collect();
    cnf.add_clause([!lits[0], s[0][0]]);
    for j in 1..k {
        cnf.add_clause([!s[0][j]]);
    }
    for i in 1..n - 1 {
        cnf.add_clause([!lits[i], s[i][0]]);
        cnf.add_clause([!s[i - 1][0], s[i][0]]);
        for j in 1..k {
            cnf.add_clause([!lits[i], !s[i - 1][j - 1], s[i][j]]);
            cnf.add_clause([!s[i - 1][j], s[i][j]]);
        }
        cnf.add_clause([!lits[i], !s[i - 1][k - 1]]);
    }
    cnf.add_clause([!lits[n - 1], !s[n - 2][k - 1]]);
}
