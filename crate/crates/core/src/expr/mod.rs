//! Expression trees over a fixed operator vocabulary.
//!
//! An [`Expr`] is an immutable tree of unary/binary operators over variables
//! `x1, x2, ...`, concrete numeric constants, and indexed constant
//! placeholders `c1, c2, ...`. Trees serialize to whitespace-separated prefix
//! token strings (`add mul c x sin mul c x`), evaluate pointwise with IEEE
//! NaN as the "undefined" marker, and support simplification and skeleton
//! extraction (constants replaced by placeholders).

mod eval;
mod parse;
mod simplify;
mod skeleton;
mod token;

pub use eval::EvalError;
pub use parse::ParseError;
pub use simplify::simplify;
pub use skeleton::{
    canonical_equal, skeletonize, skeletonize_wrt, Skeleton, SkeletonError,
};
pub use token::{skeleton_to_tokens, tokens_to_tree, Token, VOCAB_SIZE};

/// Euler's number; serialized as the token `E`.
pub const EULER: f64 = std::f64::consts::E;

/// Unary operators, in vocabulary order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum UnaryOp {
    Abs,
    Acos,
    Asin,
    Atan,
    Cos,
    Cosh,
    Exp,
    Log,
    Sin,
    Sinh,
    Sqrt,
    Tan,
    Tanh,
}

impl UnaryOp {
    pub const ALL: [UnaryOp; 13] = [
        UnaryOp::Abs,
        UnaryOp::Acos,
        UnaryOp::Asin,
        UnaryOp::Atan,
        UnaryOp::Cos,
        UnaryOp::Cosh,
        UnaryOp::Exp,
        UnaryOp::Log,
        UnaryOp::Sin,
        UnaryOp::Sinh,
        UnaryOp::Sqrt,
        UnaryOp::Tan,
        UnaryOp::Tanh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Abs => "abs",
            UnaryOp::Acos => "acos",
            UnaryOp::Asin => "asin",
            UnaryOp::Atan => "atan",
            UnaryOp::Cos => "cos",
            UnaryOp::Cosh => "cosh",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sin => "sin",
            UnaryOp::Sinh => "sinh",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Tan => "tan",
            UnaryOp::Tanh => "tanh",
        }
    }

    pub fn from_name(s: &str) -> Option<UnaryOp> {
        UnaryOp::ALL.iter().copied().find(|op| op.name() == s)
    }

    /// Apply on a concrete value. Domain violations and overflow yield NaN.
    pub fn apply(self, v: f64) -> f64 {
        let out = match self {
            UnaryOp::Abs => v.abs(),
            UnaryOp::Acos => v.acos(),
            UnaryOp::Asin => v.asin(),
            UnaryOp::Atan => v.atan(),
            UnaryOp::Cos => v.cos(),
            UnaryOp::Cosh => v.cosh(),
            UnaryOp::Exp => v.exp(),
            UnaryOp::Log => v.ln(),
            UnaryOp::Sin => v.sin(),
            UnaryOp::Sinh => v.sinh(),
            UnaryOp::Sqrt => v.sqrt(),
            UnaryOp::Tan => v.tan(),
            UnaryOp::Tanh => v.tanh(),
        };
        if out.is_finite() {
            out
        } else {
            f64::NAN
        }
    }
}

/// Binary operators, in vocabulary order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BinaryOp {
    Add,
    Div,
    Mul,
    Pow,
}

impl BinaryOp {
    pub const ALL: [BinaryOp; 4] = [BinaryOp::Add, BinaryOp::Div, BinaryOp::Mul, BinaryOp::Pow];

    pub fn name(self) -> &'static str {
        match self {
            BinaryOp::Add => "add",
            BinaryOp::Div => "div",
            BinaryOp::Mul => "mul",
            BinaryOp::Pow => "pow",
        }
    }

    pub fn from_name(s: &str) -> Option<BinaryOp> {
        BinaryOp::ALL.iter().copied().find(|op| op.name() == s)
    }

    /// Apply on concrete values. Division by zero, fractional powers of
    /// negatives, and overflow yield NaN.
    pub fn apply(self, a: f64, b: f64) -> f64 {
        let out = match self {
            BinaryOp::Add => a + b,
            BinaryOp::Div => a / b,
            BinaryOp::Mul => a * b,
            BinaryOp::Pow => a.powf(b),
        };
        if out.is_finite() {
            out
        } else {
            f64::NAN
        }
    }
}

/// An immutable expression tree.
///
/// Variable and placeholder indices are 1-based. Placeholders stand for
/// unknown constants; they have no pointwise value (see [`Expr::evaluate`])
/// until substituted via [`Skeleton::set_constants`].
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// Concrete numeric constant.
    Const(f64),
    /// Constant placeholder `c_i`, `i >= 1`.
    Placeholder(u32),
    /// Variable `x_v`, `v >= 1`.
    Var(u32),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    /// Number of operator nodes (unary + binary).
    pub fn op_count(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Placeholder(_) | Expr::Var(_) => 0,
            Expr::Unary(_, a) => 1 + a.op_count(),
            Expr::Binary(_, a, b) => 1 + a.op_count() + b.op_count(),
        }
    }

    /// Total node count.
    pub fn node_count(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Placeholder(_) | Expr::Var(_) => 1,
            Expr::Unary(_, a) => 1 + a.node_count(),
            Expr::Binary(_, a, b) => 1 + a.node_count() + b.node_count(),
        }
    }

    /// Whether `x_v` occurs anywhere in the tree.
    pub fn contains_var(&self, v: u32) -> bool {
        match self {
            Expr::Var(i) => *i == v,
            Expr::Const(_) | Expr::Placeholder(_) => false,
            Expr::Unary(_, a) => a.contains_var(v),
            Expr::Binary(_, a, b) => a.contains_var(v) || b.contains_var(v),
        }
    }

    /// Whether any variable occurs in the tree.
    pub fn contains_any_var(&self) -> bool {
        match self {
            Expr::Var(_) => true,
            Expr::Const(_) | Expr::Placeholder(_) => false,
            Expr::Unary(_, a) => a.contains_any_var(),
            Expr::Binary(_, a, b) => a.contains_any_var() || b.contains_any_var(),
        }
    }

    /// Whether any placeholder occurs in the tree.
    pub fn contains_placeholder(&self) -> bool {
        match self {
            Expr::Placeholder(_) => true,
            Expr::Const(_) | Expr::Var(_) => false,
            Expr::Unary(_, a) => a.contains_placeholder(),
            Expr::Binary(_, a, b) => a.contains_placeholder() || b.contains_placeholder(),
        }
    }

    /// Sorted list of distinct variable indices.
    pub fn variables(&self) -> Vec<u32> {
        fn walk(e: &Expr, out: &mut Vec<u32>) {
            match e {
                Expr::Var(v) => {
                    if !out.contains(v) {
                        out.push(*v);
                    }
                }
                Expr::Const(_) | Expr::Placeholder(_) => {}
                Expr::Unary(_, a) => walk(a, out),
                Expr::Binary(_, a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out.sort_unstable();
        out
    }

    /// Number of distinct placeholders (assumes 1..=n indexing; returns the
    /// maximum placeholder index, 0 if none).
    pub fn placeholder_count(&self) -> u32 {
        match self {
            Expr::Placeholder(i) => *i,
            Expr::Const(_) | Expr::Var(_) => 0,
            Expr::Unary(_, a) => a.placeholder_count(),
            Expr::Binary(_, a, b) => a.placeholder_count().max(b.placeholder_count()),
        }
    }

    /// Renumber placeholders 1,2,... in left-to-right preorder.
    pub fn reindex_placeholders(&self) -> Expr {
        fn walk(e: &Expr, next: &mut u32) -> Expr {
            match e {
                Expr::Placeholder(_) => {
                    let i = *next;
                    *next += 1;
                    Expr::Placeholder(i)
                }
                Expr::Const(_) | Expr::Var(_) => e.clone(),
                Expr::Unary(op, a) => Expr::Unary(*op, Box::new(walk(a, next))),
                Expr::Binary(op, a, b) => {
                    Expr::Binary(*op, Box::new(walk(a, next)), Box::new(walk(b, next)))
                }
            }
        }
        let mut next = 1;
        walk(self, &mut next)
    }

    /// Replace each placeholder `c_i` with the concrete value `values[i-1]`.
    /// Indices beyond `values.len()` are left untouched.
    pub fn substitute_placeholders(&self, values: &[f64]) -> Expr {
        match self {
            Expr::Placeholder(i) => {
                let idx = (*i as usize).saturating_sub(1);
                match values.get(idx) {
                    Some(v) => Expr::Const(*v),
                    None => self.clone(),
                }
            }
            Expr::Const(_) | Expr::Var(_) => self.clone(),
            Expr::Unary(op, a) => {
                Expr::Unary(*op, Box::new(a.substitute_placeholders(values)))
            }
            Expr::Binary(op, a, b) => Expr::Binary(
                *op,
                Box::new(a.substitute_placeholders(values)),
                Box::new(b.substitute_placeholders(values)),
            ),
        }
    }

    /// Rename variable `from` to `to` everywhere.
    pub fn rename_var(&self, from: u32, to: u32) -> Expr {
        match self {
            Expr::Var(v) if *v == from => Expr::Var(to),
            Expr::Const(_) | Expr::Placeholder(_) | Expr::Var(_) => self.clone(),
            Expr::Unary(op, a) => Expr::Unary(*op, Box::new(a.rename_var(from, to))),
            Expr::Binary(op, a, b) => Expr::Binary(
                *op,
                Box::new(a.rename_var(from, to)),
                Box::new(b.rename_var(from, to)),
            ),
        }
    }
}

impl std::fmt::Display for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&parse::to_prefix(self))
    }
}

/// Terse constructors for building trees in registries and tests.
pub mod build {
    use super::{BinaryOp, Expr, UnaryOp};

    pub fn num(v: f64) -> Expr {
        Expr::Const(v)
    }
    pub fn ph(i: u32) -> Expr {
        Expr::Placeholder(i)
    }
    pub fn var(i: u32) -> Expr {
        Expr::Var(i)
    }
    /// `x1`, the univariate variable.
    pub fn x() -> Expr {
        Expr::Var(1)
    }
    pub fn un(op: UnaryOp, a: Expr) -> Expr {
        Expr::Unary(op, Box::new(a))
    }
    pub fn bin(op: BinaryOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }
    pub fn add(a: Expr, b: Expr) -> Expr {
        bin(BinaryOp::Add, a, b)
    }
    /// Right-nested sum of all terms.
    pub fn add_all(terms: Vec<Expr>) -> Expr {
        let mut it = terms.into_iter().rev();
        let last = it.next().expect("add_all needs at least one term");
        it.fold(last, |acc, t| add(t, acc))
    }
    pub fn sub(a: Expr, b: Expr) -> Expr {
        add(a, mul(num(-1.0), b))
    }
    pub fn mul(a: Expr, b: Expr) -> Expr {
        bin(BinaryOp::Mul, a, b)
    }
    pub fn div(a: Expr, b: Expr) -> Expr {
        bin(BinaryOp::Div, a, b)
    }
    pub fn pow(a: Expr, b: Expr) -> Expr {
        bin(BinaryOp::Pow, a, b)
    }
    /// `a` raised to a structural integer exponent.
    pub fn powi(a: Expr, k: i32) -> Expr {
        pow(a, num(k as f64))
    }
    pub fn abs(a: Expr) -> Expr {
        un(UnaryOp::Abs, a)
    }
    pub fn acos(a: Expr) -> Expr {
        un(UnaryOp::Acos, a)
    }
    pub fn asin(a: Expr) -> Expr {
        un(UnaryOp::Asin, a)
    }
    pub fn atan(a: Expr) -> Expr {
        un(UnaryOp::Atan, a)
    }
    pub fn cos(a: Expr) -> Expr {
        un(UnaryOp::Cos, a)
    }
    pub fn cosh(a: Expr) -> Expr {
        un(UnaryOp::Cosh, a)
    }
    pub fn exp(a: Expr) -> Expr {
        un(UnaryOp::Exp, a)
    }
    pub fn log(a: Expr) -> Expr {
        un(UnaryOp::Log, a)
    }
    pub fn sin(a: Expr) -> Expr {
        un(UnaryOp::Sin, a)
    }
    pub fn sinh(a: Expr) -> Expr {
        un(UnaryOp::Sinh, a)
    }
    pub fn sqrt(a: Expr) -> Expr {
        un(UnaryOp::Sqrt, a)
    }
    pub fn tan(a: Expr) -> Expr {
        un(UnaryOp::Tan, a)
    }
    pub fn tanh(a: Expr) -> Expr {
        un(UnaryOp::Tanh, a)
    }
}

/// Parse a whitespace-separated prefix token string.
pub fn parse_prefix(input: &str) -> Result<Expr, ParseError> {
    parse::parse_prefix(input)
}

/// Serialize a tree to its prefix token string.
pub fn to_prefix(e: &Expr) -> String {
    parse::to_prefix(e)
}
