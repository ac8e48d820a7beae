//! Reader for the line-oriented SID file format.
//!
//! ```text
//! # comment
//! rel a/1 r/2
//! pred A/0 B/2
//! A <- exists y1 y2 . B(y1,y2)
//! B(x1,x2) <- a(x1) * r(x1,x2)
//! ```
//!
//! A rule extends over as many lines as needed; it ends at the first atom
//! not followed by `*`.

use std::collections::BTreeSet;

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::syntax::{Atom, Formula, Rule, Sid, Var};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(usize),
    LParen,
    RParen,
    Comma,
    Star,
    Arrow,
    Eq,
    Neq,
    Dot,
    Slash,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    for (li, line) in text.lines().enumerate() {
        let line_no = li + 1;
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            let push = |out: &mut Vec<Token>, tok| out.push(Token { tok, line: line_no, col });
            match c {
                '#' => break,
                c if c.is_whitespace() => i += 1,
                '(' => {
                    push(&mut out, Tok::LParen);
                    i += 1
                }
                ')' => {
                    push(&mut out, Tok::RParen);
                    i += 1
                }
                ',' => {
                    push(&mut out, Tok::Comma);
                    i += 1
                }
                '*' => {
                    push(&mut out, Tok::Star);
                    i += 1
                }
                '.' => {
                    push(&mut out, Tok::Dot);
                    i += 1
                }
                '/' => {
                    push(&mut out, Tok::Slash);
                    i += 1
                }
                '=' => {
                    push(&mut out, Tok::Eq);
                    i += 1
                }
                '<' if chars.get(i + 1) == Some(&'-') => {
                    push(&mut out, Tok::Arrow);
                    i += 2
                }
                '!' if chars.get(i + 1) == Some(&'=') => {
                    push(&mut out, Tok::Neq);
                    i += 2
                }
                c if c.is_ascii_digit() => {
                    let start = i;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                    let s: String = chars[start..i].iter().collect();
                    let n = s.parse().map_err(|_| Error::Parse {
                        line: line_no,
                        column: col,
                        message: format!("bad number `{s}`"),
                    })?;
                    push(&mut out, Tok::Num(n));
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let start = i;
                    while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                        i += 1;
                    }
                    push(&mut out, Tok::Ident(chars[start..i].iter().collect()));
                }
                other => {
                    return Err(Error::Parse {
                        line: line_no,
                        column: col,
                        message: format!("unexpected character `{other}`"),
                    })
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug)]
struct RawAtom {
    atom: RawKind,
    line: usize,
    col: usize,
}

#[derive(Debug)]
enum RawKind {
    Emp,
    Eq(String, String),
    Neq(String, String),
    App(String, Vec<String>),
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.tok)
    }

    fn here(&self) -> (usize, usize) {
        match self.toks.get(self.pos).or(self.toks.last()) {
            Some(t) => (t.line, t.col),
            None => (1, 1),
        }
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        let (line, column) = self.here();
        Err(Error::Parse {
            line,
            column,
            message: message.into(),
        })
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&t) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.err(format!("expected {what}")),
        }
    }

    fn decls(&mut self) -> Result<Vec<(String, usize, usize, usize)>> {
        let mut out = Vec::new();
        while let (Some(Tok::Ident(_)), Some(Tok::Slash)) = (self.peek(), self.peek_at(1)) {
            let (line, col) = self.here();
            let name = self.ident("symbol name")?;
            self.expect(Tok::Slash, "`/`")?;
            let arity = match self.peek() {
                Some(Tok::Num(n)) => *n,
                _ => return self.err("expected arity"),
            };
            self.pos += 1;
            out.push((name, arity, line, col));
        }
        if out.is_empty() {
            return self.err("expected `name/arity`");
        }
        Ok(out)
    }

    fn var_list(&mut self) -> Result<Vec<String>> {
        let mut out = Vec::new();
        self.expect(Tok::LParen, "`(`")?;
        if self.peek() == Some(&Tok::RParen) {
            self.pos += 1;
            return Ok(out);
        }
        loop {
            out.push(self.ident("variable")?);
            match self.peek() {
                Some(Tok::Comma) => self.pos += 1,
                Some(Tok::RParen) => {
                    self.pos += 1;
                    return Ok(out);
                }
                _ => return self.err("expected `,` or `)`"),
            }
        }
    }

    fn atom(&mut self) -> Result<RawAtom> {
        let (line, col) = self.here();
        let name = self.ident("atom")?;
        let atom = match self.peek() {
            _ if name == "emp" => RawKind::Emp,
            Some(Tok::Eq) => {
                self.pos += 1;
                RawKind::Eq(name, self.ident("variable")?)
            }
            Some(Tok::Neq) => {
                self.pos += 1;
                RawKind::Neq(name, self.ident("variable")?)
            }
            Some(Tok::LParen) => RawKind::App(name, self.var_list()?),
            _ => RawKind::App(name, vec![]),
        };
        Ok(RawAtom { atom, line, col })
    }

    fn quantified_body(&mut self) -> Result<(Vec<String>, Vec<RawAtom>)> {
        let mut exists = Vec::new();
        if matches!(self.peek(), Some(Tok::Ident(s)) if s == "exists") {
            self.pos += 1;
            while let Some(Tok::Ident(_)) = self.peek() {
                exists.push(self.ident("variable")?);
            }
            self.expect(Tok::Dot, "`.` after quantified variables")?;
        }
        let mut atoms = vec![self.atom()?];
        while self.peek() == Some(&Tok::Star) {
            self.pos += 1;
            atoms.push(self.atom()?);
        }
        Ok((exists, atoms))
    }
}

struct RawRule {
    head: String,
    params: Vec<String>,
    exists: Vec<String>,
    body: Vec<RawAtom>,
    line: usize,
    col: usize,
}

fn resolve_atoms(
    raw: &[RawAtom],
    relations: &IndexMap<String, usize>,
    predicates: &IndexMap<String, usize>,
) -> Result<Vec<Atom<Var>>> {
    let mut out = Vec::new();
    for a in raw {
        let atom = match &a.atom {
            RawKind::Emp => Atom::Emp,
            RawKind::Eq(x, y) => Atom::Eq(x.clone(), y.clone()),
            RawKind::Neq(x, y) => Atom::Neq(x.clone(), y.clone()),
            RawKind::App(name, args) => {
                let (arity, is_rel) = if let Some(&n) = relations.get(name) {
                    (n, true)
                } else if let Some(&n) = predicates.get(name) {
                    (n, false)
                } else {
                    return Err(Error::UndeclaredSymbol {
                        line: a.line,
                        column: a.col,
                        symbol: name.clone(),
                    });
                };
                if arity != args.len() {
                    return Err(Error::Arity {
                        line: a.line,
                        column: a.col,
                        symbol: name.clone(),
                        expected: arity,
                        found: args.len(),
                    });
                }
                if is_rel {
                    Atom::Rel(name.clone(), args.clone())
                } else {
                    Atom::Pred(name.clone(), args.clone())
                }
            }
        };
        out.push(atom);
    }
    Ok(out)
}

/// Parse an SID file.
pub fn parse_sid(text: &str) -> Result<Sid> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let mut relations: IndexMap<String, usize> = IndexMap::new();
    let mut predicates: IndexMap<String, usize> = IndexMap::new();
    let mut raw_rules = Vec::new();
    while p.peek().is_some() {
        match p.peek() {
            Some(Tok::Ident(k)) if k == "rel" && matches!(p.peek_at(2), Some(Tok::Slash)) => {
                p.pos += 1;
                for (name, arity, line, col) in p.decls()? {
                    if arity == 0 {
                        return Err(Error::Parse {
                            line,
                            column: col,
                            message: format!("relation `{name}` must have positive arity"),
                        });
                    }
                    if relations.insert(name.clone(), arity).is_some() || predicates.contains_key(&name) {
                        return Err(Error::DuplicateDeclaration(name));
                    }
                }
            }
            Some(Tok::Ident(k)) if k == "pred" && matches!(p.peek_at(2), Some(Tok::Slash)) => {
                p.pos += 1;
                for (name, arity, _, _) in p.decls()? {
                    if predicates.insert(name.clone(), arity).is_some() || relations.contains_key(&name) {
                        return Err(Error::DuplicateDeclaration(name));
                    }
                }
            }
            Some(Tok::Ident(_)) => {
                let (line, col) = p.here();
                let head = p.ident("rule head")?;
                let params = if p.peek() == Some(&Tok::LParen) { p.var_list()? } else { vec![] };
                p.expect(Tok::Arrow, "`<-`")?;
                let (exists, body) = p.quantified_body()?;
                raw_rules.push(RawRule {
                    head,
                    params,
                    exists,
                    body,
                    line,
                    col,
                });
            }
            _ => return p.err("expected declaration or rule"),
        }
    }
    let mut rules = Vec::new();
    for r in raw_rules {
        let arity = match predicates.get(&r.head) {
            Some(&a) => a,
            None => {
                return Err(Error::UndeclaredSymbol {
                    line: r.line,
                    column: r.col,
                    symbol: r.head,
                })
            }
        };
        if arity != r.params.len() {
            return Err(Error::Arity {
                line: r.line,
                column: r.col,
                symbol: r.head,
                expected: arity,
                found: r.params.len(),
            });
        }
        let body = resolve_atoms(&r.body, &relations, &predicates)?;
        let rule = Rule {
            head: r.head,
            params: r.params,
            exists: r.exists,
            body,
        };
        check_rule(&rule)?;
        rules.push(rule);
    }
    Ok(Sid {
        relations,
        predicates,
        rules,
    })
}

/// Well-formedness of a single rule: distinct parameters, existentials
/// distinct and apart from parameters, and no free variable outside them.
pub fn check_rule(rule: &Rule) -> Result<()> {
    let mut seen = BTreeSet::new();
    for v in rule.params.iter().chain(rule.exists.iter()) {
        if !seen.insert(v) {
            return Err(Error::DuplicateParameter {
                head: rule.head.clone(),
                var: v.clone(),
            });
        }
    }
    for a in &rule.body {
        for v in a.vars() {
            if !seen.contains(v) {
                return Err(Error::UnboundVariable {
                    head: rule.head.clone(),
                    var: v.clone(),
                });
            }
        }
    }
    Ok(())
}

/// Parse a formula such as `exists x1 x2 . A(x1,x2)` against a signature.
pub fn parse_formula(text: &str, sid: &Sid) -> Result<Formula> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let (exists, raw) = p.quantified_body()?;
    if p.peek().is_some() {
        return p.err("trailing input after formula");
    }
    let atoms = resolve_atoms(&raw, &sid.relations, &sid.predicates)?;
    Ok(Formula { exists, atoms })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_rule() {
        let sid = parse_sid("rel a/1 r/2\npred A/0 B/2\nB(x1,x2) <- a(x1) * r(x1,x2)").unwrap();
        assert_eq!(sid.rules.len(), 1);
        assert_eq!(sid.rules[0].body.len(), 2);
    }

    #[test]
    fn duplicate_parameter() {
        let e = parse_sid("pred B/2\nB(x1,x1) <- emp").unwrap_err();
        assert!(matches!(e, Error::DuplicateParameter { .. }));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            parse_sid("rel a/1\npred A/0\nA <- exists y . a(y,y)").unwrap_err(),
            Error::Arity { .. }
        ));
        assert!(matches!(
            parse_sid("pred A/0\nA <- exists y . b(y)").unwrap_err(),
            Error::UndeclaredSymbol { .. }
        ));
        assert!(matches!(parse_sid("pred A/0\nA <- ").unwrap_err(), Error::Parse { .. }));
        assert!(matches!(
            parse_sid("rel a/1\npred A/0\nA <- a(z)").unwrap_err(),
            Error::UnboundVariable { .. }
        ));
    }

    #[test]
    fn multi_line_rules_and_comments() {
        let text = "rel e/2 # edges\npred A/0 B/1\nA <- exists y .\n  B(y)\nB(x1) <- exists y . e(x1,y)\n   * B(y)\nB(x1) <- emp\n";
        let sid = parse_sid(text).unwrap();
        assert_eq!(sid.rules.len(), 3);
        assert_eq!(sid.rules[1].body.len(), 2);
    }
}
