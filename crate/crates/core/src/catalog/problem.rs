use serde::{Deserialize, Serialize};

use super::expr::ScalarExpr;
use super::monotone::{Delta, Direction, MonotoneScalar};
use crate::error::{Error, Result};
use crate::geometry::DomainPreset;

/// All data of the control problem.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub preset: DomainPreset,
    /// Spatial dimension; only 2 is discretized.
    pub dimension: f64,
    pub p: f64,
    pub q: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub mu1: f64,
    pub mu2: f64,
    /// Domain running cost `L(x, y)`.
    pub cost_domain: ScalarExpr,
    /// Boundary running cost `ℓ(x, y)`.
    pub cost_boundary: ScalarExpr,
    pub a11: ScalarExpr,
    pub a12: ScalarExpr,
    pub a22: ScalarExpr,
    pub a0: ScalarExpr,
    /// Reaction term `f(x, y)`.
    pub reaction: ScalarExpr,
    pub g1: ScalarExpr,
    pub g2: ScalarExpr,
    pub zeta1: MonotoneScalar,
    pub zeta2: MonotoneScalar,
    /// Half-width of the sampling box used by the assumption checks.
    pub sample_box: f64,
}

impl ProblemSpec {
    /// `Δ₁` (i = 1) or `Δ₂` (i = 2).
    pub fn delta(&self, i: usize) -> Delta {
        match i {
            1 => Delta { lin: self.lambda1, pow: self.lambda2, exponent: self.p },
            _ => Delta { lin: self.mu1, pow: self.mu2, exponent: self.q },
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawSpec = toml::from_str(text).map_err(|e| Error::Parse {
            field: match e.span() {
                Some(span) => {
                    let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
                    format!("config line {line}")
                }
                None => "config".into(),
            },
            message: e.message().to_string(),
        })?;
        raw.build()
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        let raw = RawSpec {
            domain: RawDomain { preset: self.preset.name().into(), dimension: self.dimension },
            exponents: RawExponents { p: self.p, q: self.q },
            cost: RawCost {
                lambda1: self.lambda1,
                lambda2: self.lambda2,
                mu1: self.mu1,
                mu2: self.mu2,
                l: self.cost_domain.to_string(),
                ell: self.cost_boundary.to_string(),
            },
            pde: RawPde {
                a11: self.a11.to_string(),
                a12: self.a12.to_string(),
                a21: None,
                a22: self.a22.to_string(),
                a0: self.a0.to_string(),
                f: self.reaction.to_string(),
            },
            constraints: RawConstraints {
                g1: self.g1.to_string(),
                g2: self.g2.to_string(),
                zeta1: self.zeta1.expr.to_string(),
                zeta2: self.zeta2.expr.to_string(),
                rho1: self.zeta1.rho,
                rho2: self.zeta2.rho,
                zeta1_direction: self.zeta1.direction,
                zeta2_direction: self.zeta2.direction,
                sample_box: self.sample_box,
            },
        };
        toml::to_string(&raw).expect("plain tables serialize")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    domain: RawDomain,
    exponents: RawExponents,
    cost: RawCost,
    pde: RawPde,
    constraints: RawConstraints,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDomain {
    preset: String,
    #[serde(default = "two", alias = "N")]
    dimension: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExponents {
    p: f64,
    q: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCost {
    lambda1: f64,
    lambda2: f64,
    mu1: f64,
    mu2: f64,
    #[serde(rename = "L")]
    l: String,
    ell: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPde {
    a11: String,
    #[serde(default = "zero_expr")]
    a12: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a21: Option<String>,
    a22: String,
    a0: String,
    f: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstraints {
    g1: String,
    g2: String,
    zeta1: String,
    zeta2: String,
    rho1: f64,
    rho2: f64,
    #[serde(default = "increasing")]
    zeta1_direction: Direction,
    #[serde(default = "increasing")]
    zeta2_direction: Direction,
    #[serde(default = "default_box", rename = "box")]
    sample_box: f64,
}

fn two() -> f64 {
    2.0
}
fn zero_expr() -> String {
    "0".into()
}
fn increasing() -> Direction {
    Direction::Increasing
}
fn default_box() -> f64 {
    10.0
}

fn field_expr(field: &str, src: &str) -> Result<ScalarExpr> {
    ScalarExpr::parse(src).map_err(|e| match e {
        Error::Parse { field: inner, message } => Error::Parse {
            field: format!("{field} ({inner})"),
            message,
        },
        other => other,
    })
}

fn coefficient(field: &str, src: &str) -> Result<ScalarExpr> {
    let e = field_expr(field, src)?;
    if e.depends_on_value() {
        return Err(Error::Parse {
            field: field.into(),
            message: "coefficient must depend on x1, x2 only".into(),
        });
    }
    Ok(e)
}

impl RawSpec {
    fn build(self) -> Result<ProblemSpec> {
        let preset: DomainPreset = self.domain.preset.parse().map_err(|_| Error::Parse {
            field: "domain.preset".into(),
            message: format!("unknown preset `{}`", self.domain.preset),
        })?;
        let c = &self.constraints;
        let zeta = |field: &str, src: &str, rho: f64, dir: Direction| -> Result<MonotoneScalar> {
            MonotoneScalar::new(field_expr(field, src)?, rho, dir).map_err(|e| Error::Parse {
                field: field.into(),
                message: e.to_string(),
            })
        };
        let pde = &self.pde;
        if let Some(a21) = &pde.a21 {
            let a12 = coefficient("pde.a12", &pde.a12)?;
            let a21e = coefficient("pde.a21", a21)?;
            if a12 != a21e {
                return Err(Error::Parse {
                    field: "pde.a21".into(),
                    message: "coefficient matrix must be symmetric (a21 = a12)".into(),
                });
            }
        }
        let positive = [
            ("cost.lambda1", self.cost.lambda1),
            ("cost.lambda2", self.cost.lambda2),
            ("cost.mu1", self.cost.mu1),
            ("cost.mu2", self.cost.mu2),
        ];
        for (field, v) in positive {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Parse { field: field.into(), message: format!("must be nonnegative, got {v}") });
            }
        }
        if !(self.cost.lambda1 > 0.0 && self.cost.mu1 > 0.0) {
            return Err(Error::Parse {
                field: "cost".into(),
                message: "lambda1 and mu1 must be positive".into(),
            });
        }
        if !(c.sample_box > 0.0) {
            return Err(Error::Parse { field: "constraints.box".into(), message: "must be positive".into() });
        }
        Ok(ProblemSpec {
            preset,
            dimension: self.domain.dimension,
            p: self.exponents.p,
            q: self.exponents.q,
            lambda1: self.cost.lambda1,
            lambda2: self.cost.lambda2,
            mu1: self.cost.mu1,
            mu2: self.cost.mu2,
            cost_domain: field_expr("cost.L", &self.cost.l)?,
            cost_boundary: field_expr("cost.ell", &self.cost.ell)?,
            a11: coefficient("pde.a11", &pde.a11)?,
            a12: coefficient("pde.a12", &pde.a12)?,
            a22: coefficient("pde.a22", &pde.a22)?,
            a0: coefficient("pde.a0", &pde.a0)?,
            reaction: field_expr("pde.f", &pde.f)?,
            g1: field_expr("constraints.g1", &c.g1)?,
            g2: field_expr("constraints.g2", &c.g2)?,
            zeta1: zeta("constraints.zeta1", &c.zeta1, c.rho1, c.zeta1_direction)?,
            zeta2: zeta("constraints.zeta2", &c.zeta2, c.rho2, c.zeta2_direction)?,
            sample_box: c.sample_box,
        })
    }
}
