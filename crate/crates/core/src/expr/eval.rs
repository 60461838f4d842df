//! Pointwise evaluation.

use super::Expr;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound variable x{index}: binding supplies {supplied} value(s)")]
    UnboundVariable { index: u32, supplied: usize },
}

impl Expr {
    /// Evaluate at a point. `vars[k]` binds `x_{k+1}`.
    ///
    /// Domain violations (log of a non-positive value, square root of a
    /// negative, division by zero, fractional powers of negatives) and
    /// overflow all come back as NaN rather than an error, so callers can
    /// census validity over a whole support set. Placeholders have no value
    /// and also evaluate to NaN; substitute them first.
    pub fn evaluate(&self, vars: &[f64]) -> Result<f64, EvalError> {
        match self {
            Expr::Const(v) => Ok(*v),
            Expr::Placeholder(_) => Ok(f64::NAN),
            Expr::Var(v) => vars
                .get(*v as usize - 1)
                .copied()
                .ok_or(EvalError::UnboundVariable {
                    index: *v,
                    supplied: vars.len(),
                }),
            Expr::Unary(op, a) => Ok(op.apply(a.evaluate(vars)?)),
            Expr::Binary(op, a, b) => Ok(op.apply(a.evaluate(vars)?, b.evaluate(vars)?)),
        }
    }
}

// ---------------------------------------------------------------------------
