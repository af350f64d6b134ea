//! Infix grammar for catalog expressions.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Names: `x1`, `x2`, the scalar argument `y`/`t`/`u`/`v`, and `pi`.
//! Functions: `sin cos exp abs sign sqrt pow spow`.

use super::expr::{self, ScalarExpr};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Name(String),
    Op(char),
}

fn err(src: &str, pos: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        field: format!("expression `{src}` at column {}", pos + 1),
        message: msg.into(),
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text
                .parse::<f64>()
                .map_err(|_| err(src, start, format!("bad number `{text}`")))?;
            out.push((Tok::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Name(chars[start..i].iter().collect()), start));
        } else if "+-*/^(),".contains(c) {
            out.push((Tok::Op(c), i));
            i += 1;
        } else {
            return Err(err(src, i, format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn column(&self) -> usize {
        self.toks.get(self.pos).map_or(self.src.len(), |(_, c)| *c)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(err(self.src, self.column(), format!("expected `{c}`")))
        }
    }

    fn expr(&mut self) -> Result<ScalarExpr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = ScalarExpr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = ScalarExpr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<ScalarExpr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = ScalarExpr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = ScalarExpr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<ScalarExpr> {
        if self.eat('-') {
            Ok(match self.unary()? {
                ScalarExpr::Const(c) => ScalarExpr::Const(-c),
                e => ScalarExpr::Neg(Box::new(e)),
            })
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<ScalarExpr> {
        let base = self.atom()?;
        if self.eat('^') {
            let col = self.column();
            let k = self.constant(col, "exponent")?;
            return Ok(ScalarExpr::Pow(Box::new(base), k));
        }
        Ok(base)
    }

    /// Parse a unary expression that must fold to a constant.
    fn constant(&mut self, col: usize, what: &str) -> Result<f64> {
        let e = self.unary()?;
        if e.depends_on_value() || e.depends_on_coordinates() {
            return Err(err(self.src, col, format!("{what} must be constant")));
        }
        e.eval_scalar(0.0)
    }

    fn atom(&mut self) -> Result<ScalarExpr> {
        let col = self.column();
        let tok = self
            .toks
            .get(self.pos)
            .cloned()
            .ok_or_else(|| err(self.src, col, "unexpected end of input"))?
            .0;
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(ScalarExpr::Const(v)),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Op(c) => Err(err(self.src, col, format!("unexpected `{c}`"))),
            Tok::Name(name) => {
                if self.peek() == Some(&Tok::Op('(')) {
                    self.pos += 1;
                    return self.call(&name, col);
                }
                match name.as_str() {
                    "x1" => Ok(ScalarExpr::X1),
                    "x2" => Ok(ScalarExpr::X2),
                    "y" | "t" | "u" | "v" => Ok(ScalarExpr::Value),
                    "pi" => Ok(ScalarExpr::Const(std::f64::consts::PI)),
                    _ => Err(err(self.src, col, format!("unknown name `{name}`"))),
                }
            }
        }
    }

    fn call(&mut self, name: &str, col: usize) -> Result<ScalarExpr> {
        let arg = self.expr()?;
        let unary = |f: fn(Box<ScalarExpr>) -> ScalarExpr| Ok(f(Box::new(arg.clone())));
        let out = match name {
            "sin" => unary(ScalarExpr::Sin),
            "cos" => unary(ScalarExpr::Cos),
            "exp" => unary(ScalarExpr::Exp),
            "abs" => unary(ScalarExpr::Abs),
            "sign" => unary(ScalarExpr::Sign),
            "sqrt" => Ok(ScalarExpr::Pow(Box::new(arg.clone()), 0.5)),
            "pow" | "spow" => {
                self.expect(',')?;
                let kcol = self.column();
                let k = {
                    let e = self.expr()?;
                    if e.depends_on_value() || e.depends_on_coordinates() {
                        return Err(err(self.src, kcol, "exponent must be constant"));
                    }
                    e.eval_scalar(0.0)?
                };
                if name == "pow" {
                    Ok(expr::pow(arg.clone(), k))
                } else if k < 2.0 {
                    Err(err(self.src, kcol, format!("spow exponent {k} must be at least 2")))
                } else {
                    Ok(ScalarExpr::SignedPow(Box::new(arg.clone()), k))
                }
            }
            _ => Err(err(self.src, col, format!("unknown function `{name}`"))),
        }?;
        self.expect(')')?;
        Ok(out)
    }
}

pub(crate) fn parse_expr(src: &str) -> Result<ScalarExpr> {
    let toks = lex(src)?;
    if toks.is_empty() {
        return Err(err(src, 0, "empty expression"));
    }
    let mut p = Parser { src, toks, pos: 0 };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(err(src, p.column(), "trailing input"));
    }
    Ok(e)
}
