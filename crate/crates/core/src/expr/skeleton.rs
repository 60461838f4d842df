//! Symbolic skeletons: expressions with constants abstracted to placeholders.
//!
//! [`skeletonize`] replaces every concrete constant with an indexed
//! placeholder `c_i` (structure preserved). [`skeletonize_wrt`] produces the
//! *univariate* skeleton with respect to one variable: every maximal subtree
//! not containing that variable collapses to a single placeholder, remaining
//! constants are abstracted, and the result is reduced to canonical form.
//! Structural pow exponents (integers -3..=5, or Euler's `E`) are not
//! abstracted — `x^2` keeps its exponent.

use super::simplify::canonicalize;
use super::{parse, BinaryOp, Expr, EULER};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SkeletonError {
    #[error("concrete constant {value} at a non-structural position in a skeleton")]
    StrayConstant { value: f64 },
    #[error("skeleton has {expected} placeholder(s) but {got} value(s) were supplied")]
    ArityMismatch { expected: u32, got: usize },
}

/// An expression family: a tree over placeholders plus its canonical
/// serialization. Two skeletons describe the same family iff their canonical
/// keys agree.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    tree: Expr,
    canonical: Expr,
    key: String,
}

impl Skeleton {
    /// Wrap a placeholder tree. Concrete constants are only allowed as
    /// structural pow exponents. Placeholders are renumbered in preorder.
    pub fn new(tree: Expr) -> Result<Skeleton, SkeletonError> {
        validate(&tree, false)?;
        let tree = tree.reindex_placeholders();
        let canonical = canonicalize(&tree);
        let key = parse::to_prefix(&canonical);
        Ok(Skeleton {
            tree,
            canonical,
            key,
        })
    }

    /// The underlying placeholder tree (preorder-indexed).
    pub fn tree(&self) -> &Expr {
        &self.tree
    }

    /// Canonical form of the tree; identical for canonically equal skeletons.
    pub fn canonical_tree(&self) -> &Expr {
        &self.canonical
    }

    /// Canonical prefix serialization (the equality key).
    pub fn canonical_key(&self) -> &str {
        &self.key
    }

    /// Number of placeholders in the tree.
    pub fn n_constants(&self) -> u32 {
        self.tree.placeholder_count()
    }

    /// Substitute concrete values for the placeholders, yielding a concrete
    /// expression. `values.len()` must equal [`Skeleton::n_constants`].
    pub fn set_constants(&self, values: &[f64]) -> Result<Expr, SkeletonError> {
        let expected = self.n_constants();
        if values.len() != expected as usize {
            return Err(SkeletonError::ArityMismatch {
                expected,
                got: values.len(),
            });
        }
        Ok(self.tree.substitute_placeholders(values))
    }
}

impl std::fmt::Display for Skeleton {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&parse::to_prefix(&self.tree))
    }
}

fn validate(e: &Expr, pow_exponent: bool) -> Result<(), SkeletonError> {
    match e {
        Expr::Const(v) => {
            let structural = *v == EULER || (v.fract() == 0.0 && (-3.0..=5.0).contains(v));
            if pow_exponent && structural {
                Ok(())
            } else {
                Err(SkeletonError::StrayConstant { value: *v })
            }
        }
        Expr::Placeholder(_) | Expr::Var(_) => Ok(()),
        Expr::Unary(_, a) => validate(a, false),
        Expr::Binary(BinaryOp::Pow, a, b) => {
            validate(a, false)?;
            validate(b, true)
        }
        Expr::Binary(_, a, b) => {
            validate(a, false)?;
            validate(b, false)
        }
    }
}

/// κ: replace every concrete constant with a fresh placeholder, preserving
/// structure. Structural pow exponents stay. Existing placeholders are kept.
/// Idempotent up to canonical equality.
pub fn skeletonize(e: &Expr) -> Skeleton {
    let tree = abstract_constants(e);
    Skeleton::new(tree).expect("constant abstraction leaves no stray constants")
}

fn abstract_constants(e: &Expr) -> Expr {
    match e {
        Expr::Const(_) => Expr::Placeholder(1), // renumbered later
        Expr::Placeholder(_) | Expr::Var(_) => e.clone(),
        Expr::Unary(op, a) => Expr::Unary(*op, Box::new(abstract_constants(a))),
        Expr::Binary(BinaryOp::Pow, a, b) => {
            let keep = matches!(**b, Expr::Const(v)
                if v == EULER || (v.fract() == 0.0 && (-3.0..=5.0).contains(&v)));
            let b2 = if keep {
                (**b).clone()
            } else {
                abstract_constants(b)
            };
            Expr::Binary(BinaryOp::Pow, Box::new(abstract_constants(a)), Box::new(b2))
        }
        Expr::Binary(op, a, b) => Expr::Binary(
            *op,
            Box::new(abstract_constants(a)),
            Box::new(abstract_constants(b)),
        ),
    }
}

/// κ(·, x_v): the univariate skeleton with respect to `x_v`. Maximal
/// subtrees free of `x_v` collapse to single placeholders; what remains is
/// constant-abstracted, canonicalized, and renamed to the univariate
/// variable.
pub fn skeletonize_wrt(e: &Expr, v: u32) -> Skeleton {
    let collapsed = collapse_free(e, v);
    let abstracted = abstract_constants(&collapsed);
    let canonical = canonicalize(&abstracted).rename_var(v, 1);
    Skeleton::new(canonical).expect("collapse leaves no stray constants")
}

fn collapse_free(e: &Expr, v: u32) -> Expr {
    if !e.contains_var(v) {
        // Bare numeric leaves stay for constant abstraction (pow exponents
        // must survive); everything else is one unknown constant.
        if matches!(e, Expr::Const(_)) {
            return e.clone();
        }
        return Expr::Placeholder(1);
    }
    match e {
        Expr::Unary(op, a) => Expr::Unary(*op, Box::new(collapse_free(a, v))),
        Expr::Binary(op, a, b) => Expr::Binary(
            *op,
            Box::new(collapse_free(a, v)),
            Box::new(collapse_free(b, v)),
        ),
        _ => e.clone(), // Var(v) itself
    }
}

/// Same constant family?
pub fn canonical_equal(a: &Skeleton, b: &Skeleton) -> bool {
    a.canonical_key() == b.canonical_key()
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::build::*;

    fn skel(t: Expr) -> Skeleton {
        Skeleton::new(t).unwrap()
    }

    #[test]
    fn kappa_abstracts_constants_preserving_structure() {
        // κ(3x² + e^(2x) - 4) = c1·x² + e^(c2·x) + c3
        let f = add(
            mul(num(3.0), powi(x(), 2)),
            add(exp(mul(num(2.0), x())), num(-4.0)),
        );
        let k = skeletonize(&f);
        let want = add(
            mul(ph(1), powi(x(), 2)),
            add(exp(mul(ph(2), x())), ph(3)),
        );
        assert_eq!(k.tree(), &want);
        assert!(canonical_equal(&k, &skel(want)));
    }

    #[test]
    fn kappa_is_idempotent() {
        let f = add(mul(num(3.0), powi(x(), 2)), num(-4.0));
        let once = skeletonize(&f);
        let twice = skeletonize(once.tree());
        assert!(canonical_equal(&once, &twice));
    }

    #[test]
    fn univariate_kappa_collapses_foreign_subtrees() {
        // f = 3x1² + sqrt(x2+1)/e^(2x3);  κ(f, x1) = c1·x1² + c2
        let f = add(
            mul(num(3.0), powi(var(1), 2)),
            div(
                sqrt(add(var(2), num(1.0))),
                exp(mul(num(2.0), var(3))),
            ),
        );
        let k = skeletonize_wrt(&f, 1);
        let want = skel(add(mul(ph(1), powi(x(), 2)), ph(2)));
        assert!(canonical_equal(&k, &want), "got {k}");
        assert_eq!(k.n_constants(), 2);
    }

    #[test]
    fn univariate_kappa_keeps_pow_exponents() {
        // f = x1·log(x2⁴): κ(f,x1) = c1·x1, κ(f,x2) = c1·log(x2⁴)
        let f = mul(var(1), log(powi(var(2), 4)));
        let k1 = skeletonize_wrt(&f, 1);
        assert!(canonical_equal(&k1, &skel(mul(ph(1), x()))), "got {k1}");
        let k2 = skeletonize_wrt(&f, 2);
        assert!(
            canonical_equal(&k2, &skel(mul(ph(1), log(powi(x(), 4))))),
            "got {k2}"
        );
    }

    #[test]
    fn set_constants_round_trips() {
        let k = skel(add(mul(ph(1), x()), ph(2)));
        let t = k.set_constants(&[2.0, -3.0]).unwrap();
        assert_eq!(t.evaluate(&[5.0]).unwrap(), 7.0);
        assert_eq!(
            k.set_constants(&[1.0]),
            Err(SkeletonError::ArityMismatch {
                expected: 2,
                got: 1
            })
        );
    }

    #[test]
    fn canonical_equality_ignores_order_and_indexing() {
        // c1 + c2·x == c1·x + c2
        let a = skel(add(ph(1), mul(ph(2), x())));
        let b = skel(add(mul(ph(1), x()), ph(2)));
        assert!(canonical_equal(&a, &b));
        // c1·sin(x) != c1·cos(x)
        let s = skel(mul(ph(1), sin(x())));
        let c = skel(mul(ph(1), cos(x())));
        assert!(!canonical_equal(&s, &c));
    }

    #[test]
    fn stray_constants_are_rejected() {
        assert!(matches!(
            Skeleton::new(add(x(), num(1.5))),
            Err(SkeletonError::StrayConstant { .. })
        ));
        // structural pow exponent is fine
        assert!(Skeleton::new(powi(x(), 3)).is_ok());
        // integer outside a pow exponent is still stray
        assert!(Skeleton::new(add(x(), num(2.0))).is_err());
    }

    #[test]
    fn whole_tree_free_of_the_variable_collapses_to_c() {
        let f = mul(var(2), sin(var(3)));
        let k = skeletonize_wrt(&f, 1);
        assert_eq!(k.tree(), &ph(1));
    }
}
