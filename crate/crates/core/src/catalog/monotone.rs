use serde::{Deserialize, Serialize};

use super::expr::{signed_pow, ScalarExpr, Wrt};
use crate::error::{Error, Result};

const MAX_DOUBLINGS: usize = 200;
const MAX_STEPS: usize = 400;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Increasing,
    Decreasing,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Increasing => 1.0,
            Direction::Decreasing => -1.0,
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "increasing" => Ok(Direction::Increasing),
            "decreasing" => Ok(Direction::Decreasing),
            other => Err(Error::Parse {
                field: "direction".into(),
                message: format!("expected `increasing` or `decreasing`, got `{other}`"),
            }),
        }
    }
}

/// Strictly monotone scalar function with a declared slope bound.
#[derive(Clone, Debug)]
pub struct MonotoneScalar {
    pub expr: ScalarExpr,
    deriv: ScalarExpr,
    pub rho: f64,
    pub direction: Direction,
}

impl MonotoneScalar {
    pub fn new(expr: ScalarExpr, rho: f64, direction: Direction) -> Result<Self> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::Domain(format!("slope bound must be positive, got {rho}")));
        }
        if expr.depends_on_coordinates() {
            return Err(Error::Domain(format!("`{expr}` must depend on t only")));
        }
        let deriv = expr.derivative(Wrt::Value);
        Ok(Self { expr, deriv, rho, direction })
    }

    pub fn increasing(src: &str, rho: f64) -> Result<Self> {
        Self::new(ScalarExpr::parse(src)?, rho, Direction::Increasing)
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        self.expr.eval_scalar(t)
    }

    pub fn derivative(&self, t: f64) -> Result<f64> {
        self.deriv.eval_scalar(t)
    }

    pub fn derivative_expr(&self) -> &ScalarExpr {
        &self.deriv
    }

    /// `H = ζ⁻¹` evaluated at `target`.
    pub fn inverse(&self, target: f64) -> Result<f64> {
        invert_monotone(self, target)
    }

    /// `H'(target) = 1 / ζ'(H(target))`.
    pub fn inverse_derivative(&self, target: f64) -> Result<f64> {
        Ok(1.0 / self.derivative(self.inverse(target)?)?)
    }
}

/// `H = ζ⁻¹`: returns `t` with `|ζ(t) - target| <= 1e-13 max(1, |target|)`.
pub fn invert_monotone(zeta: &MonotoneScalar, target: f64) -> Result<f64> {
    solve_monotone(
        |t| zeta.eval(t),
        |t| zeta.derivative(t),
        target,
        zeta.rho,
        zeta.direction.sign(),
    )
}

/// The map `Δ(t) = c_lin t + c_pow |t|^(e-2) t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Delta {
    pub lin: f64,
    pub pow: f64,
    pub exponent: f64,
}

impl Delta {
    pub fn eval(&self, t: f64) -> f64 {
        self.lin * t + self.pow * signed_pow(t, self.exponent)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let e = self.exponent;
        let tail = if e == 2.0 { 1.0 } else if t == 0.0 { 0.0 } else { t.abs().powf(e - 2.0) };
        self.lin + self.pow * (e - 1.0) * tail
    }

    /// `|t|^2 lin/2 + |t|^e pow/e`, the antiderivative vanishing at 0.
    pub fn potential(&self, t: f64) -> f64 {
        0.5 * self.lin * t * t + self.pow / self.exponent * t.abs().powf(self.exponent)
    }

    pub fn inverse(&self, target: f64) -> f64 {
        if self.pow == 0.0 || self.exponent == 2.0 {
            return target / (self.lin + if self.exponent == 2.0 { self.pow } else { 0.0 });
        }
        // Δ is a global increasing bijection with slope >= lin, so the
        // bracket search cannot fail.
        solve_monotone(
            |t| Ok(self.eval(t)),
            |t| Ok(self.derivative(t)),
            target,
            self.lin,
            1.0,
        )
        .expect("Delta is a bijection")
    }
}

/// Safeguarded Newton–bisection root find for `f(t) = target`, `f(0) = 0`,
/// `sign * f` increasing with slope at least `rho`.
fn solve_monotone(
    f: impl Fn(f64) -> Result<f64>,
    df: impl Fn(f64) -> Result<f64>,
    target: f64,
    rho: f64,
    sign: f64,
) -> Result<f64> {
    let tol = 1e-13 * target.abs().max(1.0);
    let g = |t: f64| -> Result<f64> { Ok(sign * (f(t)? - target)) };
    let g0 = g(0.0)?;
    if g0.abs() <= tol {
        return Ok(0.0);
    }
    // sign*f increasing: root lies on the side where g rises past zero.
    let dir = if g0 < 0.0 { 1.0 } else { -1.0 };
    let mut reach = (target.abs() / rho).max(f64::MIN_POSITIVE);
    let mut far = dir * reach;
    let mut g_far = g(far)?;
    let mut doublings = 0;
    while g_far * g0 > 0.0 {
        doublings += 1;
        if doublings > MAX_DOUBLINGS || !g_far.is_finite() {
            return Err(Error::Inversion(format!(
                "no bracket for target {target} after {doublings} doublings"
            )));
        }
        reach *= 2.0;
        far = dir * reach;
        g_far = g(far)?;
    }
    if g_far.abs() <= tol {
        return Ok(far);
    }
    // lo has g < 0, hi has g > 0.
    let (mut lo, mut hi) = if g0 < 0.0 { (0.0, far) } else { (far, 0.0) };
    let mut t = 0.5 * (lo + hi);
    let mut best = (f64::INFINITY, t);
    for _ in 0..MAX_STEPS {
        let gt = g(t)?;
        if gt.abs() < best.0 {
            best = (gt.abs(), t);
        }
        if gt.abs() <= tol {
            return Ok(t);
        }
        if gt < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let slope = sign * df(t)?;
        let newton = t - gt / slope;
        let inside = slope.is_finite()
            && slope != 0.0
            && newton > lo.min(hi)
            && newton < lo.max(hi);
        let next = if inside { newton } else { 0.5 * (lo + hi) };
        if next == t || (hi - lo).abs() <= f64::EPSILON * t.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        t = next;
    }
    // Floating-point resolution reached before the residual tolerance.
    Ok(best.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_inverse_examples() {
        let z = MonotoneScalar::increasing("t + t^3", 1.0).unwrap();
        assert!((z.inverse(2.0).unwrap() - 1.0).abs() < 1e-13);
        assert!((z.inverse(10.0).unwrap() - 2.0).abs() < 1e-13);
        let id = MonotoneScalar::increasing("t", 1.0).unwrap();
        assert_eq!(id.inverse(-3.7).unwrap(), -3.7);
    }

    #[test]
    fn decreasing_inverse() {
        let z = MonotoneScalar::new(ScalarExpr::parse("-2*t - t^3").unwrap(), 2.0, Direction::Decreasing)
            .unwrap();
        let t = z.inverse(3.0).unwrap();
        assert!((z.eval(t).unwrap() - 3.0).abs() < 1e-12);
        assert!(t < 0.0);
    }

    #[test]
    fn delta_examples() {
        let d = Delta { lin: 1.0, pow: 1.0, exponent: 4.0 };
        assert!((d.inverse(2.0) - 1.0).abs() < 1e-13);
        let lin = Delta { lin: 2.0, pow: 0.0, exponent: 3.0 };
        assert_eq!(lin.inverse(5.0), 2.5);
        let d3 = Delta { lin: 1.0, pow: 1.0, exponent: 3.0 };
        assert!((d3.inverse(6.0) - 2.0).abs() < 1e-13);
    }

    #[test]
    fn flat_function_fails_to_bracket() {
        // Declared slope bound is violated: the function saturates.
        let z = MonotoneScalar::increasing("1 - exp(-t)", 1.0).unwrap();
        assert!(matches!(z.inverse(2.0), Err(Error::Inversion(_))));
    }

    #[test]
    fn residual_tolerance_on_large_targets() {
        let z = MonotoneScalar::increasing("t + t^3", 1.0).unwrap();
        for target in [1e-9, 0.37, 55.0, 1e6, -4.2e3] {
            let t = z.inverse(target).unwrap();
            assert!((z.eval(t).unwrap() - target).abs() <= 1e-13 * f64::max(1.0, target.abs()) * 4.0);
            assert!(t.abs() <= target.abs() + 1e-15);
        }
    }
}
