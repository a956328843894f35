//! The model checker against an evaluator that works on printed formula
//! text, sharing nothing with the AST or the checker.

use std::collections::HashMap;

use induct_core::fol::{random_formula, FormulaShape};
use induct_core::rng;
use induct_core::semantics::extension;
use induct_core::world::{GroundAtom, World};
use rand::Rng;

#[derive(Debug)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn read(text: &str) -> Sexp {
    let spaced = text.replace('(', " ( ").replace(')', " ) ");
    let mut tokens = spaced.split_whitespace();
    fn go<'a>(tokens: &mut impl Iterator<Item = &'a str>) -> Sexp {
        match tokens.next().expect("balanced") {
            "(" => {
                let mut items = Vec::new();
                loop {
                    match go(tokens) {
                        Sexp::Atom(a) if a == ")" => return Sexp::List(items),
                        item => items.push(item),
                    }
                }
            }
            tok => Sexp::Atom(tok.to_string()),
        }
    }
    go(&mut tokens)
}

struct Structure {
    n: usize,
    unary: HashMap<(String, usize), bool>,
    binary: HashMap<(String, usize, usize), bool>,
}

fn name(s: &Sexp) -> &str {
    match s {
        Sexp::Atom(a) => a,
        Sexp::List(_) => panic!("expected a symbol"),
    }
}

fn holds(s: &Sexp, m: &Structure, env: &mut HashMap<String, usize>) -> bool {
    let Sexp::List(items) = s else { panic!("formula must be a list") };
    let head = name(&items[0]);
    match head {
        "not" => !holds(&items[1], m, env),
        "and" => items[1..].iter().all(|c| holds(c, m, env)),
        "or" => items[1..].iter().any(|c| holds(c, m, env)),
        "forall" | "exists" => {
            let v = name(&items[1]).to_string();
            let saved = env.get(&v).copied();
            let mut results = Vec::new();
            for a in 0..m.n {
                env.insert(v.clone(), a);
                results.push(holds(&items[2], m, env));
            }
            match saved {
                Some(old) => env.insert(v, old),
                None => env.remove(&v),
            };
            if head == "forall" {
                results.iter().all(|b| *b)
            } else {
                results.iter().any(|b| *b)
            }
        }
        "=" => env[name(&items[1])] == env[name(&items[2])],
        p if items.len() == 2 => m.unary[&(p.to_string(), env[name(&items[1])])],
        p => m.binary[&(p.to_string(), env[name(&items[1])], env[name(&items[2])])],
    }
}

#[test]
fn checker_agrees_with_text_evaluator() {
    let mut r = rng::rng(2024);
    let shape = FormulaShape {
        max_qd: 2,
        max_depth: 5,
        equality: true,
    };
    let mut quantified = 0;
    for _ in 0..1000 {
        let f = random_formula(&mut r, &shape);
        if f.quantifier_depth() > 0 {
            quantified += 1;
        }
        assert!(f.quantifier_depth() <= 2);
        let n = r.gen_range(1..=4);
        let mut w = World::empty(n);
        let mut m = Structure {
            n,
            unary: HashMap::new(),
            binary: HashMap::new(),
        };
        for atom in w.all_atoms() {
            let v = r.gen_bool(0.4);
            w.set_atom(atom, v);
            match atom {
                GroundAtom::Unary(p, a) => m.unary.insert((p.name().to_string(), a), v),
                GroundAtom::Binary(p, a, b) => m.binary.insert((p.name().to_string(), a, b), v),
            };
        }
        let sexp = read(&f.to_string());
        let ext = extension(&f, &w);
        for a in 0..n {
            let mut env = HashMap::from([("x".to_string(), a)]);
            assert_eq!(ext.contains(a), holds(&sexp, &m, &mut env), "{f} at a{a}");
        }
    }
    assert!(quantified > 500);
}
