use std::fmt;

use crate::error::{Error, Result};

/// Variable a derivative is taken with respect to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Wrt {
    X1,
    X2,
    /// The scalar argument: the state `y` or the control variable `t`.
    Value,
}

/// Closed expression tree over coordinates and one scalar argument.
#[derive(Clone, Debug, PartialEq)]
pub enum ScalarExpr {
    Const(f64),
    X1,
    X2,
    /// The scalar argument (`y`, `t`, `u` or `v` in source text).
    Value,
    Neg(Box<ScalarExpr>),
    Add(Box<ScalarExpr>, Box<ScalarExpr>),
    Sub(Box<ScalarExpr>, Box<ScalarExpr>),
    Mul(Box<ScalarExpr>, Box<ScalarExpr>),
    Div(Box<ScalarExpr>, Box<ScalarExpr>),
    /// Power with a constant exponent.
    Pow(Box<ScalarExpr>, f64),
    Abs(Box<ScalarExpr>),
    Sin(Box<ScalarExpr>),
    Cos(Box<ScalarExpr>),
    Exp(Box<ScalarExpr>),
    /// Sign function; derivative zero almost everywhere.
    Sign(Box<ScalarExpr>),
    /// `|e|^(alpha-2) e`, alpha >= 2.
    SignedPow(Box<ScalarExpr>, f64),
}

use ScalarExpr as E;

fn is_integer(a: f64) -> bool {
    a.fract() == 0.0 && a.abs() < i32::MAX as f64
}

impl ScalarExpr {
    pub fn constant(c: f64) -> Self {
        E::Const(c)
    }

    pub fn parse(src: &str) -> Result<Self> {
        super::parse::parse_expr(src)
    }

    /// Evaluate at a point `x` with scalar argument `value`.
    pub fn eval(&self, x: [f64; 2], value: f64) -> Result<f64> {
        let r = match self {
            E::Const(c) => *c,
            E::X1 => x[0],
            E::X2 => x[1],
            E::Value => value,
            E::Neg(a) => -a.eval(x, value)?,
            E::Add(a, b) => a.eval(x, value)? + b.eval(x, value)?,
            E::Sub(a, b) => a.eval(x, value)? - b.eval(x, value)?,
            E::Mul(a, b) => a.eval(x, value)? * b.eval(x, value)?,
            E::Div(a, b) => {
                let den = b.eval(x, value)?;
                if den == 0.0 {
                    return Err(self.eval_error("division by zero"));
                }
                a.eval(x, value)? / den
            }
            E::Pow(a, k) => {
                let base = a.eval(x, value)?;
                if is_integer(*k) {
                    if base == 0.0 && *k < 0.0 {
                        return Err(self.eval_error("division by zero"));
                    }
                    base.powi(*k as i32)
                } else {
                    if base < 0.0 {
                        return Err(self.eval_error("negative base under fractional power"));
                    }
                    if base == 0.0 && *k < 0.0 {
                        return Err(self.eval_error("division by zero"));
                    }
                    base.powf(*k)
                }
            }
            E::Abs(a) => a.eval(x, value)?.abs(),
            E::Sin(a) => a.eval(x, value)?.sin(),
            E::Cos(a) => a.eval(x, value)?.cos(),
            E::Exp(a) => a.eval(x, value)?.exp(),
            E::Sign(a) => {
                let v = a.eval(x, value)?;
                if v > 0.0 {
                    1.0
                } else if v < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            E::SignedPow(a, alpha) => signed_pow(a.eval(x, value)?, *alpha),
        };
        Ok(r)
    }

    /// Evaluate without coordinates (for functions of the scalar argument only).
    pub fn eval_scalar(&self, t: f64) -> Result<f64> {
        self.eval([0.0, 0.0], t)
    }

    fn eval_error(&self, reason: &str) -> Error {
        Error::Eval { node: self.to_string(), reason: reason.to_string() }
    }

    /// Symbolic partial derivative.
    pub fn derivative(&self, wrt: Wrt) -> ScalarExpr {
        match self {
            E::Const(_) => E::Const(0.0),
            E::X1 => E::Const(if wrt == Wrt::X1 { 1.0 } else { 0.0 }),
            E::X2 => E::Const(if wrt == Wrt::X2 { 1.0 } else { 0.0 }),
            E::Value => E::Const(if wrt == Wrt::Value { 1.0 } else { 0.0 }),
            E::Neg(a) => neg(a.derivative(wrt)),
            E::Add(a, b) => add(a.derivative(wrt), b.derivative(wrt)),
            E::Sub(a, b) => sub(a.derivative(wrt), b.derivative(wrt)),
            E::Mul(a, b) => add(
                mul(a.derivative(wrt), (**b).clone()),
                mul((**a).clone(), b.derivative(wrt)),
            ),
            E::Div(a, b) => div(
                sub(
                    mul(a.derivative(wrt), (**b).clone()),
                    mul((**a).clone(), b.derivative(wrt)),
                ),
                pow((**b).clone(), 2.0),
            ),
            E::Pow(a, k) => mul(
                mul(E::Const(*k), pow((**a).clone(), k - 1.0)),
                a.derivative(wrt),
            ),
            E::Abs(a) => mul(E::Sign(a.clone()), a.derivative(wrt)),
            E::Sin(a) => mul(E::Cos(a.clone()), a.derivative(wrt)),
            E::Cos(a) => neg(mul(E::Sin(a.clone()), a.derivative(wrt))),
            E::Exp(a) => mul(E::Exp(a.clone()), a.derivative(wrt)),
            E::Sign(_) => E::Const(0.0),
            E::SignedPow(a, alpha) => mul(
                mul(E::Const(alpha - 1.0), pow(E::Abs(a.clone()), alpha - 2.0)),
                a.derivative(wrt),
            ),
        }
    }

    /// Whether the tree references the scalar argument.
    pub fn depends_on_value(&self) -> bool {
        self.any_node(&|e| matches!(e, E::Value))
    }

    pub fn depends_on_coordinates(&self) -> bool {
        self.any_node(&|e| matches!(e, E::X1 | E::X2))
    }

    fn any_node(&self, pred: &dyn Fn(&ScalarExpr) -> bool) -> bool {
        if pred(self) {
            return true;
        }
        match self {
            E::Const(_) | E::X1 | E::X2 | E::Value => false,
            E::Neg(a)
            | E::Pow(a, _)
            | E::Abs(a)
            | E::Sin(a)
            | E::Cos(a)
            | E::Exp(a)
            | E::Sign(a)
            | E::SignedPow(a, _) => a.any_node(pred),
            E::Add(a, b) | E::Sub(a, b) | E::Mul(a, b) | E::Div(a, b) => {
                a.any_node(pred) || b.any_node(pred)
            }
        }
    }

    /// Substitute the scalar argument by another expression.
    pub fn substitute_value(&self, by: &ScalarExpr) -> ScalarExpr {
        let s = |a: &ScalarExpr| Box::new(a.substitute_value(by));
        match self {
            E::Value => by.clone(),
            E::Const(_) | E::X1 | E::X2 => self.clone(),
            E::Neg(a) => E::Neg(s(a)),
            E::Add(a, b) => E::Add(s(a), s(b)),
            E::Sub(a, b) => E::Sub(s(a), s(b)),
            E::Mul(a, b) => E::Mul(s(a), s(b)),
            E::Div(a, b) => E::Div(s(a), s(b)),
            E::Pow(a, k) => E::Pow(s(a), *k),
            E::Abs(a) => E::Abs(s(a)),
            E::Sin(a) => E::Sin(s(a)),
            E::Cos(a) => E::Cos(s(a)),
            E::Exp(a) => E::Exp(s(a)),
            E::Sign(a) => E::Sign(s(a)),
            E::SignedPow(a, k) => E::SignedPow(s(a), *k),
        }
    }
}

pub(crate) fn signed_pow(t: f64, alpha: f64) -> f64 {
    if alpha == 2.0 {
        t
    } else if t == 0.0 {
        0.0
    } else {
        t.abs().powf(alpha - 2.0) * t
    }
}

// Light constant folding keeps derivative trees small.

pub(crate) fn neg(a: ScalarExpr) -> ScalarExpr {
    match a {
        E::Const(c) => E::Const(-c),
        E::Neg(inner) => *inner,
        other => E::Neg(Box::new(other)),
    }
}

pub(crate) fn add(a: ScalarExpr, b: ScalarExpr) -> ScalarExpr {
    match (a, b) {
        (E::Const(x), E::Const(y)) => E::Const(x + y),
        (E::Const(z), other) | (other, E::Const(z)) if z == 0.0 => other,
        (a, b) => E::Add(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn sub(a: ScalarExpr, b: ScalarExpr) -> ScalarExpr {
    match (a, b) {
        (E::Const(x), E::Const(y)) => E::Const(x - y),
        (a, E::Const(z)) if z == 0.0 => a,
        (E::Const(z), b) if z == 0.0 => neg(b),
        (a, b) => E::Sub(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn mul(a: ScalarExpr, b: ScalarExpr) -> ScalarExpr {
    match (a, b) {
        (E::Const(x), E::Const(y)) => E::Const(x * y),
        (E::Const(z), _) | (_, E::Const(z)) if z == 0.0 => E::Const(0.0),
        (E::Const(o), other) | (other, E::Const(o)) if o == 1.0 => other,
        (a, b) => E::Mul(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn div(a: ScalarExpr, b: ScalarExpr) -> ScalarExpr {
    match (a, b) {
        (E::Const(z), _) if z == 0.0 => E::Const(0.0),
        (a, E::Const(o)) if o == 1.0 => a,
        (a, b) => E::Div(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn pow(a: ScalarExpr, k: f64) -> ScalarExpr {
    match a {
        _ if k == 0.0 => E::Const(1.0),
        a if k == 1.0 => a,
        E::Const(c) if is_integer(k) || c >= 0.0 => E::Const(if is_integer(k) { c.powi(k as i32) } else { c.powf(k) }),
        a => E::Pow(Box::new(a), k),
    }
}

fn fmt_num(c: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if c < 0.0 {
        write!(f, "({c:?})")
    } else {
        write!(f, "{c:?}")
    }
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            E::Const(c) => fmt_num(*c, f),
            E::X1 => write!(f, "x1"),
            E::X2 => write!(f, "x2"),
            E::Value => write!(f, "y"),
            E::Neg(a) => write!(f, "(-{a})"),
            E::Add(a, b) => write!(f, "({a} + {b})"),
            E::Sub(a, b) => write!(f, "({a} - {b})"),
            E::Mul(a, b) => write!(f, "({a} * {b})"),
            E::Div(a, b) => write!(f, "({a} / {b})"),
            E::Pow(a, k) => {
                write!(f, "({a}^")?;
                fmt_num(*k, f)?;
                write!(f, ")")
            }
            E::Abs(a) => write!(f, "abs({a})"),
            E::Sin(a) => write!(f, "sin({a})"),
            E::Cos(a) => write!(f, "cos({a})"),
            E::Exp(a) => write!(f, "exp({a})"),
            E::Sign(a) => write!(f, "sign({a})"),
            E::SignedPow(a, k) => write!(f, "spow({a}, {k:?})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> ScalarExpr {
        ScalarExpr::parse(s).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(p("t + t^3").eval_scalar(1.0).unwrap(), 2.0);
        assert_eq!(p("spow(t, 4)").eval_scalar(-2.0).unwrap(), -8.0);
        assert_eq!(p("1").eval([0.3, -0.7], 5.0).unwrap(), 1.0);
    }

    #[test]
    fn division_by_zero_names_node() {
        let err = p("1 + 1/(x1 - 1)").eval([1.0, 0.0], 0.0).unwrap_err();
        match err {
            Error::Eval { node, .. } => assert!(node.contains('/'), "{node}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn signed_power_derivative() {
        let d = p("spow(t, 3.5)").derivative(Wrt::Value);
        let t: f64 = -1.7;
        let expected = 2.5 * t.abs().powf(1.5);
        assert!((d.eval_scalar(t).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn display_round_trips() {
        for src in ["x1 * sin(y) - exp(-2 * x2) / (1 + y^2)", "spow(y, 3) + abs(x1)^0.5", "-3 + sign(x1)"] {
            let e = p(src);
            let again = p(&e.to_string());
            for &(x, v) in &[([0.3, 0.4], 1.3), ([0.9, -0.2], -0.6)] {
                assert_eq!(e.eval(x, v).unwrap(), again.eval(x, v).unwrap());
            }
        }
    }

    #[test]
    fn dependency_queries() {
        assert!(p("y * x1").depends_on_value());
        assert!(!p("x1 + 2").depends_on_value());
        assert!(p("x2").depends_on_coordinates());
    }
}

impl std::str::FromStr for ScalarExpr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}
