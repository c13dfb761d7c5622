//! The line-oriented `.pmc` model format.
//!
//! ```text
//! params p;
//! state s0 init reward 1;
//! state good absorbing;
//! target good;
//! transition s0 -> good : p;
//! transition s0 -> s0 : 1 - p;
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use num_traits::{Signed, Zero};

use super::lexer::{tokenize, Tok, Token};
use super::TextError;
use crate::model::{Chain, ModelError, RawModel, WeightedAutomaton};
use crate::polynomial::{ParameterSet, Polynomial, Rational};

#[derive(Debug, Clone)]
enum Expr {
    Num(Rational),
    Var(String, usize, usize),
    Neg(Box<Expr>),
    Bin(Box<Expr>, Tok, Box<Expr>),
}

#[derive(Debug)]
struct StateDecl {
    name: String,
    init: bool,
    absorbing: bool,
    reward: Rational,
    line: usize,
    col: usize,
}

#[derive(Debug)]
struct TransitionDecl {
    from: (String, usize, usize),
    to: (String, usize, usize),
    expr: Expr,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    end: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map_or(self.end, |t| (t.line, t.col))
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T, TextError> {
        let (line, col) = self.here();
        Err(TextError::Syntax {
            line,
            col,
            msg: msg.into(),
        })
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), TextError> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            self.error(format!("expected {what}"))
        }
    }

    fn ident(&mut self) -> Result<(String, usize, usize), TextError> {
        match self.toks.get(self.pos) {
            Some(Token {
                tok: Tok::Ident(s),
                line,
                col,
            }) => {
                let out = (s.clone(), *line, *col);
                self.pos += 1;
                Ok(out)
            }
            _ => self.error("expected identifier"),
        }
    }

    fn ident_list(&mut self) -> Result<Vec<(String, usize, usize)>, TextError> {
        let mut out = vec![self.ident()?];
        while self.peek() == Some(&Tok::Comma) {
            self.pos += 1;
            out.push(self.ident()?);
        }
        self.expect(Tok::Semi, "`;`")?;
        Ok(out)
    }

    fn signed_number(&mut self) -> Result<Rational, TextError> {
        let neg = if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            true
        } else {
            false
        };
        match self.next().map(|t| t.tok) {
            Some(Tok::Number(r)) => Ok(if neg { -r } else { r }),
            _ => {
                self.pos -= 1;
                self.error("expected a rational literal")
            }
        }
    }

    // expr := term (('+'|'-') term)*
    fn expr(&mut self) -> Result<Expr, TextError> {
        let mut lhs = self.term()?;
        while let Some(op @ (Tok::Plus | Tok::Minus)) = self.peek().cloned() {
            self.pos += 1;
            lhs = Expr::Bin(Box::new(lhs), op, Box::new(self.term()?));
        }
        Ok(lhs)
    }

    // term := factor ('*' factor)*
    fn term(&mut self) -> Result<Expr, TextError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    lhs = Expr::Bin(Box::new(lhs), Tok::Star, Box::new(self.factor()?));
                }
                Some(Tok::Slash) => return self.error("division is not supported in polynomials"),
                _ => return Ok(lhs),
            }
        }
    }

    // factor := '-' factor | number | ident | '(' expr ')'
    fn factor(&mut self) -> Result<Expr, TextError> {
        let (line, col) = self.here();
        match self.next().map(|t| t.tok) {
            Some(Tok::Minus) => Ok(Expr::Neg(Box::new(self.factor()?))),
            Some(Tok::Number(r)) => Ok(Expr::Num(r)),
            Some(Tok::Ident(s)) => Ok(Expr::Var(s, line, col)),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            _ => {
                self.pos -= 1;
                self.error("expected a number, parameter or `(`")
            }
        }
    }
}

fn lower(e: &Expr, params: &Arc<ParameterSet>) -> Result<Polynomial, TextError> {
    Ok(match e {
        Expr::Num(r) => Polynomial::constant(params, r.clone()),
        Expr::Var(name, line, col) => {
            Polynomial::var_named(params, name).map_err(|_| TextError::Syntax {
                line: *line,
                col: *col,
                msg: format!("unknown parameter `{name}`"),
            })?
        }
        Expr::Neg(inner) => lower(inner, params)?.neg(),
        Expr::Bin(a, op, b) => {
            let (a, b) = (lower(a, params)?, lower(b, params)?);
            match op {
                Tok::Plus => a.checked_add(&b),
                Tok::Minus => a.checked_sub(&b),
                _ => a.checked_mul(&b),
            }
            .map_err(ModelError::from)?
        }
    })
}

/// Parses a `.pmc` file into a raw model with its declared target set.
pub fn parse_model(text: &str) -> Result<RawModel, TextError> {
    let toks = tokenize(text)?;
    let end = (text.lines().count().max(1), 1);
    let mut p = Parser { toks, pos: 0, end };

    let mut params: Option<Vec<(String, usize, usize)>> = None;
    let mut states: Vec<StateDecl> = Vec::new();
    let mut targets: Vec<(String, usize, usize)> = Vec::new();
    let mut transitions: Vec<TransitionDecl> = Vec::new();

    while p.peek().is_some() {
        let (kw, line, col) = p.ident()?;
        match kw.as_str() {
            "params" => {
                if params.is_some() {
                    return Err(TextError::Syntax {
                        line,
                        col,
                        msg: "parameters declared twice".into(),
                    });
                }
                params = Some(p.ident_list()?);
            }
            "state" => {
                let (name, line, col) = p.ident()?;
                let mut decl = StateDecl {
                    name,
                    init: false,
                    absorbing: false,
                    reward: Rational::zero(),
                    line,
                    col,
                };
                let mut seen_reward = false;
                loop {
                    match p.peek() {
                        Some(Tok::Semi) => {
                            p.pos += 1;
                            break;
                        }
                        Some(Tok::Ident(m)) if m == "init" && !decl.init => {
                            p.pos += 1;
                            decl.init = true;
                        }
                        Some(Tok::Ident(m)) if m == "absorbing" && !decl.absorbing => {
                            p.pos += 1;
                            decl.absorbing = true;
                        }
                        Some(Tok::Ident(m)) if m == "reward" && !seen_reward => {
                            p.pos += 1;
                            decl.reward = p.signed_number()?;
                            seen_reward = true;
                        }
                        _ => return p.error("expected `init`, `absorbing`, `reward` or `;`"),
                    }
                }
                states.push(decl);
            }
            "target" => targets.extend(p.ident_list()?),
            "transition" => {
                let from = p.ident()?;
                p.expect(Tok::Arrow, "`->`")?;
                let to = p.ident()?;
                p.expect(Tok::Colon, "`:`")?;
                let expr = p.expr()?;
                p.expect(Tok::Semi, "`;`")?;
                transitions.push(TransitionDecl { from, to, expr });
            }
            "wfa" => {
                return Err(TextError::Syntax {
                    line,
                    col,
                    msg: "weighted-automaton files are output-only and cannot be loaded".into(),
                })
            }
            other => {
                return Err(TextError::Syntax {
                    line,
                    col,
                    msg: format!("unknown statement `{other}`"),
                })
            }
        }
    }

    let params = match params {
        Some(list) => ParameterSet::new(list.iter().map(|(n, _, _)| n.clone())).map_err(|e| {
            let (_, line, col) = list[0];
            TextError::Syntax {
                line,
                col,
                msg: e.to_string(),
            }
        })?,
        None => ParameterSet::empty(),
    };

    let mut index: HashMap<String, usize> = HashMap::new();
    for (i, s) in states.iter().enumerate() {
        if index.insert(s.name.clone(), i).is_some() {
            return Err(TextError::Syntax {
                line: s.line,
                col: s.col,
                msg: format!("duplicate state `{}`", s.name),
            });
        }
    }
    let lookup = |(name, line, col): &(String, usize, usize)| {
        index.get(name).copied().ok_or_else(|| TextError::Syntax {
            line: *line,
            col: *col,
            msg: format!("undeclared state `{name}`"),
        })
    };

    let inits: Vec<usize> = (0..states.len()).filter(|&i| states[i].init).collect();
    let initial = match inits.as_slice() {
        [i] => *i,
        [] => return Err(TextError::Semantic("no initial state declared".into())),
        _ => return Err(TextError::Semantic("more than one initial state".into())),
    };
    if targets.is_empty() {
        return Err(TextError::Semantic("no target state declared".into()));
    }
    let mut target_idx = Vec::new();
    for t in &targets {
        let i = lookup(t)?;
        if !target_idx.contains(&i) {
            target_idx.push(i);
        }
    }

    let mut rows: Vec<Vec<(usize, Polynomial)>> = vec![Vec::new(); states.len()];
    for tr in &transitions {
        let (s, t) = (lookup(&tr.from)?, lookup(&tr.to)?);
        let (_, line, col) = tr.from;
        if states[s].absorbing {
            return Err(TextError::Syntax {
                line,
                col,
                msg: format!(
                    "absorbing state `{}` cannot have transitions",
                    states[s].name
                ),
            });
        }
        if rows[s].iter().any(|(u, _)| *u == t) {
            return Err(TextError::Syntax {
                line,
                col,
                msg: format!(
                    "duplicate transition {} -> {}",
                    states[s].name, states[t].name
                ),
            });
        }
        let w = lower(&tr.expr, &params)?;
        if !w.is_zero() {
            rows[s].push((t, w));
        }
    }
    let one = Polynomial::one(&params);
    for (s, decl) in states.iter().enumerate() {
        if decl.absorbing {
            rows[s].push((s, one.clone()));
        }
        rows[s].sort_by_key(|(t, _)| *t);
    }

    let raw = RawModel {
        params,
        names: states.iter().map(|s| s.name.clone()).collect(),
        initial,
        absorbing: states.iter().map(|s| s.absorbing).collect(),
        rewards: states.iter().map(|s| s.reward.clone()).collect(),
        rows,
        targets: target_idx,
    };
    raw.validate()?;
    Ok(raw)
}

fn write_rational(out: &mut String, r: &Rational) {
    if r.is_negative() {
        out.push('-');
    }
    let r = r.abs();
    if r.is_integer() {
        let _ = write!(out, "{}", r.numer());
    } else {
        let _ = write!(out, "{}/{}", r.numer(), r.denom());
    }
}

fn write_chain(out: &mut String, chain: &Chain, targets: &[usize]) {
    let ps = chain.params();
    if !ps.is_empty() {
        let _ = writeln!(out, "params {};", ps.names().join(", "));
    }
    for s in 0..chain.num_states() {
        let _ = write!(out, "state {}", chain.name(s));
        if s == chain.initial() {
            out.push_str(" init");
        }
        if chain.is_absorbing(s) {
            out.push_str(" absorbing");
        }
        if !chain.reward(s).is_zero() {
            out.push_str(" reward ");
            write_rational(out, chain.reward(s));
        }
        out.push_str(";\n");
    }
    let names: Vec<&str> = targets.iter().map(|&t| chain.name(t)).collect();
    let _ = writeln!(out, "target {};", names.join(", "));
    for s in (0..chain.num_states()).filter(|&s| !chain.is_absorbing(s)) {
        for (t, w) in chain.row(s) {
            let _ = writeln!(
                out,
                "transition {} -> {} : {};",
                chain.name(s),
                chain.name(*t),
                w
            );
        }
    }
}

/// Serializes a chain in canonical form; parsing the result and
/// preprocessing it reproduces the same chain.
pub fn serialize_model(chain: &Chain) -> String {
    let mut out = String::new();
    write_chain(&mut out, chain, &[chain.good()]);
    out
}

/// Serializes a derived automaton in the output-only weighted dialect.
pub fn serialize_wfa(wfa: &WeightedAutomaton) -> String {
    let mut out = String::from("wfa;\n");
    let _ = writeln!(
        out,
        "# derivative w.r.t. {}; states d{}_* form the derivative copy",
        wfa.params().name(wfa.param()),
        wfa.params().name(wfa.param())
    );
    write_chain(&mut out, wfa.chain(), &[wfa.good()]);
    out
}
