use thiserror::Error;

use super::{BinaryPred, Formula, UnaryPred, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("`{head}` expects {expected} argument(s), found {found}")]
    Arity {
        head: String,
        expected: &'static str,
        found: usize,
    },
    #[error("free variables must be exactly {{x}}, found {{{found}}}")]
    FreeVariables { found: String },
    #[error("quantifier rebinds `{0}`, which is already in scope")]
    Shadowing(Var),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token<'a> {
    Open,
    Close,
    Symbol(&'a str),
}

fn tokenize(text: &str) -> Vec<Token<'_>> {
    let mut tokens = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        let delimiter = c == '(' || c == ')' || c.is_whitespace();
        if delimiter {
            if let Some(s) = start.take() {
                tokens.push(Token::Symbol(&text[s..i]));
            }
            match c {
                '(' => tokens.push(Token::Open),
                ')' => tokens.push(Token::Close),
                _ => {}
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        tokens.push(Token::Symbol(&text[s..]));
    }
    tokens
}

enum Sexp<'a> {
    Symbol(&'a str),
    List(Vec<Sexp<'a>>),
}

fn read_sexp<'a>(tokens: &[Token<'a>], pos: &mut usize) -> Result<Sexp<'a>, ParseError> {
    match tokens.get(*pos) {
        None => Err(ParseError::Syntax("unexpected end of input".into())),
        Some(Token::Close) => Err(ParseError::Syntax("unbalanced `)`".into())),
        Some(Token::Symbol(s)) => {
            *pos += 1;
            Ok(Sexp::Symbol(s))
        }
        Some(Token::Open) => {
            *pos += 1;
            let mut items = Vec::new();
            loop {
                match tokens.get(*pos) {
                    None => return Err(ParseError::Syntax("missing `)`".into())),
                    Some(Token::Close) => {
                        *pos += 1;
                        return Ok(Sexp::List(items));
                    }
                    Some(_) => items.push(read_sexp(tokens, pos)?),
                }
            }
        }
    }
}

fn var(sexp: &Sexp<'_>) -> Result<Var, ParseError> {
    match sexp {
        Sexp::Symbol(s) => Var::from_name(s).ok_or_else(|| ParseError::UnknownSymbol(s.to_string())),
        Sexp::List(_) => Err(ParseError::Syntax("expected a variable, found a list".into())),
    }
}

fn arity(head: &str, expected: &'static str, found: usize) -> ParseError {
    ParseError::Arity {
        head: head.to_string(),
        expected,
        found,
    }
}

fn build(sexp: &Sexp<'_>, scope: &mut Vec<Var>) -> Result<Formula, ParseError> {
    let items = match sexp {
        Sexp::Symbol(s) => {
            return Err(ParseError::Syntax(format!(
                "expected a parenthesized formula, found `{s}`"
            )))
        }
        Sexp::List(items) => items,
    };
    let (head, args) = match items.split_first() {
        Some((Sexp::Symbol(h), rest)) => (*h, rest),
        Some((Sexp::List(_), _)) => {
            return Err(ParseError::Syntax("formula head must be a symbol".into()))
        }
        None => return Err(ParseError::Syntax("empty list".into())),
    };
    match head {
        "P" | "Q" => {
            if args.len() != 1 {
                return Err(arity(head, "1", args.len()));
            }
            let p = if head == "P" { UnaryPred::P } else { UnaryPred::Q };
            Ok(Formula::Unary(p, var(&args[0])?))
        }
        "R" | "S" | "=" => {
            if args.len() != 2 {
                return Err(arity(head, "2", args.len()));
            }
            let (a, b) = (var(&args[0])?, var(&args[1])?);
            Ok(match head {
                "R" => Formula::Binary(BinaryPred::R, a, b),
                "S" => Formula::Binary(BinaryPred::S, a, b),
                _ => Formula::Eq(a, b),
            })
        }
        "not" => {
            if args.len() != 1 {
                return Err(arity(head, "1", args.len()));
            }
            Ok(Formula::not(build(&args[0], scope)?))
        }
        "and" | "or" => {
            if args.len() < 2 {
                return Err(arity(head, "2 or more", args.len()));
            }
            let children = args
                .iter()
                .map(|a| build(a, scope))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(if head == "and" {
                Formula::And(children)
            } else {
                Formula::Or(children)
            })
        }
        "forall" | "exists" => {
            if args.len() != 2 {
                return Err(arity(head, "2", args.len()));
            }
            let v = var(&args[0])?;
            if scope.contains(&v) {
                return Err(ParseError::Shadowing(v));
            }
            scope.push(v);
            let body = build(&args[1], scope);
            scope.pop();
            let body = body?;
            Ok(if head == "forall" {
                Formula::forall(v, body)
            } else {
                Formula::exists(v, body)
            })
        }
        other => Err(ParseError::UnknownSymbol(other.to_string())),
    }
}

fn parse_with_scope(text: &str, mut scope: Vec<Var>) -> Result<Formula, ParseError> {
    let tokens = tokenize(text);
    if tokens.is_empty() {
        return Err(ParseError::Syntax("empty input".into()));
    }
    let mut pos = 0;
    let sexp = read_sexp(&tokens, &mut pos)?;
    if pos != tokens.len() {
        return Err(ParseError::Syntax(
            "trailing input after the formula".into(),
        ));
    }
    build(&sexp, &mut scope)
}

/// Parses a solution formula: a single well-formed S-expression whose free
/// variables are exactly `{x}`.
pub fn parse(text: &str) -> Result<Formula, ParseError> {
    let formula = parse_with_scope(text, vec![Var::X])?;
    check_free(&formula)?;
    Ok(formula)
}

/// Parses any well-formed formula, including open subformulas such as
/// `(R y z)`. Rebinding inside the text is still rejected.
pub fn parse_open(text: &str) -> Result<Formula, ParseError> {
    parse_with_scope(text, Vec::new())
}

pub(super) fn check_free(formula: &Formula) -> Result<(), ParseError> {
    if formula.has_solution_shape() {
        return Ok(());
    }
    let found = formula
        .free_vars()
        .iter()
        .map(|v| v.name())
        .collect::<Vec<_>>()
        .join(", ");
    Err(ParseError::FreeVariables { found })
}

pub(super) fn check_binders(formula: &Formula, scope: &mut Vec<Var>) -> Result<(), ParseError> {
    match formula {
        Formula::Forall(v, body) | Formula::Exists(v, body) => {
            if scope.contains(v) {
                return Err(ParseError::Shadowing(*v));
            }
            scope.push(*v);
            let res = check_binders(body, scope);
            scope.pop();
            res
        }
        _ => formula
            .children()
            .iter()
            .try_for_each(|c| check_binders(c, scope)),
    }
}
