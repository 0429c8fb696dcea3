//! Coefficient pairs `(a, b)` for the energy density `a(u) u'^2 + b(u)`.
//!
//! Two concrete models are provided: the linear test model with
//! `a = 1/2`, `b = (u + 1)^2 / 2`, and the rod-on-cylinder model
//! parameterized by the cylinder radius `r` and the combined moment load
//! `alpha = 2M / (B r)`. Arbitrary models can be assembled from four
//! closures with [`CoefficientModel::custom`].

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

/// Evaluation is refused outside `|u| <= WORKING_RANGE`.
pub const WORKING_RANGE: f64 = 1e6;

/// The rod's `a(u)` decays like `|u|^-5`; its coercivity floor is taken at this slope.
pub const ROD_COERCIVITY_SLOPE: f64 = 100.0;

type Scalar = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Simple,
    Rod,
    Custom,
}

/// Values of `a`, `a'`, `b`, `b'` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub a: f64,
    pub da: f64,
    pub b: f64,
    pub db: f64,
}

#[derive(Clone)]
enum Evaluators {
    Simple,
    Rod {
        inv_r2: f64,
        alpha: f64,
    },
    Custom {
        a: Scalar,
        da: Scalar,
        b: Scalar,
        db: Scalar,
    },
}

/// Immutable coefficient model. Cheap to clone.
#[derive(Clone)]
pub struct CoefficientModel {
    kind: ModelKind,
    r: Option<f64>,
    alpha: Option<f64>,
    a0: f64,
    evals: Evaluators,
}

impl fmt::Debug for CoefficientModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientModel")
            .field("kind", &self.kind)
            .field("r", &self.r)
            .field("alpha", &self.alpha)
            .field("a0", &self.a0)
            .finish()
    }
}

fn rod_a(u: f64) -> f64 {
    (1.0 + u * u).powf(-2.5) / (4.0 * PI * PI)
}

impl CoefficientModel {
    /// `a = 1/2`, `b = (u+1)^2/2`; the Euler-Lagrange operator is `-u'' + u + 1`.
    pub fn simple() -> Self {
        CoefficientModel {
            kind: ModelKind::Simple,
            r: None,
            alpha: None,
            a0: 0.5,
            evals: Evaluators::Simple,
        }
    }

    /// Rod on a cylinder of radius `r` under combined moment load `alpha = 2M/(Br)`.
    pub fn rod(r: f64, alpha: f64) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::NonPositiveRadius(r));
        }
        if !alpha.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "alpha must be finite, got {alpha}"
            )));
        }
        Ok(CoefficientModel {
            kind: ModelKind::Rod,
            r: Some(r),
            alpha: Some(alpha),
            a0: rod_a(ROD_COERCIVITY_SLOPE),
            evals: Evaluators::Rod {
                inv_r2: 1.0 / (r * r),
                alpha,
            },
        })
    }

    /// Rod model from the bending stiffness `stiffness` and the applied moment `moment`.
    pub fn rod_from_loads(r: f64, moment: f64, stiffness: f64) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::NonPositiveRadius(r));
        }
        if !(stiffness > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "bending stiffness must be positive, got {stiffness}"
            )));
        }
        Self::rod(r, 2.0 * moment / (stiffness * r))
    }

    /// User-supplied model. `a0` is the claimed lower bound of `a` on the working range.
    pub fn custom<A, DA, B, DB>(a0: f64, a: A, da: DA, b: B, db: DB) -> Result<Self>
    where
        A: Fn(f64) -> f64 + Send + Sync + 'static,
        DA: Fn(f64) -> f64 + Send + Sync + 'static,
        B: Fn(f64) -> f64 + Send + Sync + 'static,
        DB: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(a0 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "a0 must be positive, got {a0}"
            )));
        }
        Ok(CoefficientModel {
            kind: ModelKind::Custom,
            r: None,
            alpha: None,
            a0,
            evals: Evaluators::Custom {
                a: Arc::new(a),
                da: Arc::new(da),
                b: Arc::new(b),
                db: Arc::new(db),
            },
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn radius(&self) -> Option<f64> {
        self.r
    }

    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    /// Lower bound of `a` used for coercivity checks.
    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn a(&self, u: f64) -> f64 {
        match &self.evals {
            Evaluators::Simple => 0.5,
            Evaluators::Rod { .. } => rod_a(u),
            Evaluators::Custom { a, .. } => a(u),
        }
    }

    pub fn da(&self, u: f64) -> f64 {
        match &self.evals {
            Evaluators::Simple => 0.0,
            Evaluators::Rod { .. } => -5.0 * u * (1.0 + u * u).powf(-3.5) / (4.0 * PI * PI),
            Evaluators::Custom { da, .. } => da(u),
        }
    }

    pub fn b(&self, u: f64) -> f64 {
        match &self.evals {
            Evaluators::Simple => 0.5 * (u + 1.0) * (u + 1.0),
            Evaluators::Rod { inv_r2, alpha } => {
                let q = 1.0 + u * u;
                let s = q.sqrt();
                inv_r2 * q.powf(-1.5) - alpha * (1.0 - u / s)
            }
            Evaluators::Custom { b, .. } => b(u),
        }
    }

    pub fn db(&self, u: f64) -> f64 {
        match &self.evals {
            Evaluators::Simple => u + 1.0,
            Evaluators::Rod { inv_r2, alpha } => {
                let q = 1.0 + u * u;
                -3.0 * u * inv_r2 * q.powf(-2.5) + alpha * q.powf(-1.5)
            }
            Evaluators::Custom { db, .. } => db(u),
        }
    }

    /// All four values at `u`, refusing slopes outside the working range.
    pub fn eval(&self, u: f64) -> Result<Coefficients> {
        if !(u.abs() <= WORKING_RANGE) {
            return Err(Error::OutOfRange {
                u,
                limit: WORKING_RANGE,
            });
        }
        Ok(Coefficients {
            a: self.a(u),
            da: self.da(u),
            b: self.b(u),
            db: self.db(u),
        })
    }

    /// Euler-Lagrange operator `-2a(u)u'' - a'(u)u'^2 + b'(u)` at a point.
    pub fn el_operator(&self, u: f64, up: f64, upp: f64) -> f64 {
        -2.0 * self.a(u) * upp - self.da(u) * up * up + self.db(u)
    }

    /// Checks `a(u) >= a0` at the given samples; returns the first offender.
    pub fn check_coercivity(&self, samples: &[f64]) -> std::result::Result<(), f64> {
        match samples.iter().find(|&&u| self.a(u) < self.a0) {
            Some(&u) => Err(u),
            None => Ok(()),
        }
    }
}

/// Finite-difference check of one point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DerivativeCheck {
    pub u: f64,
    pub err_da: f64,
    pub err_db: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DerivativeReport {
    pub points: Vec<DerivativeCheck>,
    pub tol: f64,
    pub passed: bool,
}

impl DerivativeReport {
    pub fn failures(&self) -> impl Iterator<Item = &DerivativeCheck> {
        self.points
            .iter()
            .filter(move |c| !(c.err_da <= self.tol && c.err_db <= self.tol))
    }

    pub fn max_error(&self) -> f64 {
        self.points
            .iter()
            .map(|c| c.err_da.max(c.err_db))
            .fold(0.0, f64::max)
    }
}

/// Compares `da`, `db` with central differences of `a`, `b`.
///
/// The error is relative to `max(1, |fd|)` so that vanishing derivatives
/// (e.g. `da = 0` for the simple model) are judged absolutely.
pub fn validate_derivatives(
    model: &CoefficientModel,
    grid: &[f64],
    h: f64,
    tol: f64,
) -> Result<DerivativeReport> {
    if !(h > 0.0) || !(tol > 0.0) {
        return Err(Error::InvalidArgument("h and tol must be positive".into()));
    }
    let points = grid
        .iter()
        .map(|&u| {
            let fd_a = (model.a(u + h) - model.a(u - h)) / (2.0 * h);
            let fd_b = (model.b(u + h) - model.b(u - h)) / (2.0 * h);
            DerivativeCheck {
                u,
                err_da: (model.da(u) - fd_a).abs() / fd_a.abs().max(1.0),
                err_db: (model.db(u) - fd_b).abs() / fd_b.abs().max(1.0),
            }
        })
        .collect::<Vec<_>>();
    let passed = points.iter().all(|c| c.err_da <= tol && c.err_db <= tol);
    Ok(DerivativeReport {
        points,
        tol,
        passed,
    })
}
