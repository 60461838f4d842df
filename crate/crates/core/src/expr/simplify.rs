//! Structural simplification and canonical ordering.
//!
//! The engine works on an n-ary mirror of [`Expr`] (add/mul chains become
//! flat sums/products) and applies rules to a fixpoint:
//!
//! - numeric constant folding (only when the result is finite);
//! - additive/multiplicative identities (`u+0`, `1*u`, `u/1`) and guarded
//!   annihilation (`0*u` when `u` is total);
//! - division by a constant rewritten as multiplication;
//! - like-term merging (`x + 2x -> 3x`, `x*x -> x^2`) and pow-of-pow fusion;
//! - `log(exp(u)) -> u` and `exp(log(u)) -> u`;
//! - commutative chains sorted under a fixed total order.
//!
//! Two modes share the rule set. `Numeric` mode ([`simplify`]) never creates
//! or destroys placeholders, so a tree's placeholder count survives; it is
//! safe on concrete trees and on skeletons whose placeholder set must stay
//! put. `Canonical` mode ([`canonicalize`]) additionally absorbs structure
//! that is equivalent *as a constant family*: a placeholder swallows numeric
//! siblings and fellow placeholders in a chain (`c + 5 + c -> c`,
//! `-3 * c * u -> c * u`), constant subtrees containing a placeholder
//! collapse to a single placeholder, and a constant coefficient distributes
//! over a sum when every term can absorb it. Canonical mode is the basis of
//! skeleton identity: two skeletons are the same family iff their canonical
//! forms serialize identically (after preorder placeholder renumbering).

use super::{BinaryOp, Expr, UnaryOp};
use std::cmp::Ordering;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Mode {
    Numeric,
    Canonical,
}

/// Simplify a tree without touching its placeholder structure.
///
/// Placeholder indices are renumbered in preorder on the way out (their
/// positions, not their numbers, are what survives reordering).
pub fn simplify(e: &Expr) -> Expr {
    run(e, Mode::Numeric)
}

/// Full canonical form: simplification plus placeholder absorption and
/// preorder renumbering. Canonically equal skeletons map to identical trees.
pub(crate) fn canonicalize(e: &Expr) -> Expr {
    run(e, Mode::Canonical)
}

fn run(e: &Expr, mode: Mode) -> Expr {
    let mut s = to_s(e);
    for _ in 0..64 {
        let next = simp(&s, mode);
        if next == s {
            break;
        }
        s = next;
    }
    from_s(&s).reindex_placeholders()
}

// ---------------------------------------------------------------------------
// n-ary working form

#[derive(Debug, Clone, PartialEq)]
enum S {
    Num(f64),
    Ph,
    Var(u32),
    Un(UnaryOp, Box<S>),
    Pow(Box<S>, Box<S>),
    Div(Box<S>, Box<S>),
    Prod(Vec<S>),
    Sum(Vec<S>),
}

fn to_s(e: &Expr) -> S {
    match e {
        Expr::Const(v) => S::Num(*v),
        Expr::Placeholder(_) => S::Ph,
        Expr::Var(v) => S::Var(*v),
        Expr::Unary(op, a) => S::Un(*op, Box::new(to_s(a))),
        Expr::Binary(BinaryOp::Add, a, b) => {
            let mut terms = Vec::new();
            splice_sum(to_s(a), &mut terms);
            splice_sum(to_s(b), &mut terms);
            S::Sum(terms)
        }
        Expr::Binary(BinaryOp::Mul, a, b) => {
            let mut fs = Vec::new();
            splice_prod(to_s(a), &mut fs);
            splice_prod(to_s(b), &mut fs);
            S::Prod(fs)
        }
        Expr::Binary(BinaryOp::Div, a, b) => S::Div(Box::new(to_s(a)), Box::new(to_s(b))),
        Expr::Binary(BinaryOp::Pow, a, b) => S::Pow(Box::new(to_s(a)), Box::new(to_s(b))),
    }
}

fn splice_sum(s: S, out: &mut Vec<S>) {
    match s {
        S::Sum(ts) => out.extend(ts),
        other => out.push(other),
    }
}

fn splice_prod(s: S, out: &mut Vec<S>) {
    match s {
        S::Prod(fs) => out.extend(fs),
        other => out.push(other),
    }
}

fn from_s(s: &S) -> Expr {
    match s {
        S::Num(v) => Expr::Const(*v),
        S::Ph => Expr::Placeholder(1),
        S::Var(v) => Expr::Var(*v),
        S::Un(op, a) => Expr::Unary(*op, Box::new(from_s(a))),
        S::Pow(a, b) => Expr::Binary(BinaryOp::Pow, Box::new(from_s(a)), Box::new(from_s(b))),
        S::Div(a, b) => Expr::Binary(BinaryOp::Div, Box::new(from_s(a)), Box::new(from_s(b))),
        S::Sum(ts) => nest(BinaryOp::Add, ts, 0.0),
        S::Prod(fs) => nest(BinaryOp::Mul, fs, 1.0),
    }
}

/// Right-nested binarization; empty chains fall back to their identity.
fn nest(op: BinaryOp, items: &[S], identity: f64) -> Expr {
    match items.len() {
        0 => Expr::Const(identity),
        1 => from_s(&items[0]),
        _ => {
            let mut it = items.iter().rev();
            let mut acc = from_s(it.next().unwrap());
            for s in it {
                acc = Expr::Binary(op, Box::new(from_s(s)), Box::new(acc));
            }
            acc
        }
    }
}

fn has_var(s: &S) -> bool {
    match s {
        S::Var(_) => true,
        S::Num(_) | S::Ph => false,
        S::Un(_, a) => has_var(a),
        S::Pow(a, b) | S::Div(a, b) => has_var(a) || has_var(b),
        S::Sum(xs) | S::Prod(xs) => xs.iter().any(has_var),
    }
}

fn has_ph(s: &S) -> bool {
    match s {
        S::Ph => true,
        S::Num(_) | S::Var(_) => false,
        S::Un(_, a) => has_ph(a),
        S::Pow(a, b) | S::Div(a, b) => has_ph(a) || has_ph(b),
        S::Sum(xs) | S::Prod(xs) => xs.iter().any(has_ph),
    }
}

/// Conservatively: "defined and finite at every real input"? Not quite —
/// extreme-magnitude overflow is ignored — but good enough to guard
/// annihilation and zero-exponent rules against hiding genuine domain holes
/// (log, sqrt, tan, asin/acos, division, fractional powers).
fn is_total(s: &S) -> bool {
    match s {
        S::Num(_) | S::Ph | S::Var(_) => true,
        S::Un(op, a) => {
            matches!(
                op,
                UnaryOp::Abs
                    | UnaryOp::Atan
                    | UnaryOp::Cos
                    | UnaryOp::Cosh
                    | UnaryOp::Exp
                    | UnaryOp::Sin
                    | UnaryOp::Sinh
                    | UnaryOp::Tanh
            ) && is_total(a)
        }
        S::Pow(a, b) => {
            is_total(a) && matches!(**b, S::Num(k) if k.fract() == 0.0 && k >= 0.0)
        }
        S::Div(_, _) => false,
        S::Sum(xs) | S::Prod(xs) => xs.iter().all(is_total),
    }
}

// ---------------------------------------------------------------------------
// one simplification pass (bottom-up)

fn simp(s: &S, mode: Mode) -> S {
    // A variable-free subtree containing a placeholder is, as a family, just
    // one unknown constant.
    if mode == Mode::Canonical && !has_var(s) && has_ph(s) {
        return S::Ph;
    }
    match s {
        S::Num(_) | S::Ph | S::Var(_) => s.clone(),
        S::Un(op, a) => simp_un(*op, simp(a, mode)),
        S::Pow(a, b) => simp_pow(simp(a, mode), simp(b, mode)),
        S::Div(a, b) => simp_div(simp(a, mode), simp(b, mode), mode),
        S::Sum(ts) => simp_sum(ts.iter().map(|t| simp(t, mode)).collect(), mode),
        S::Prod(fs) => simp_prod(fs.iter().map(|f| simp(f, mode)).collect(), mode),
    }
}

fn simp_un(op: UnaryOp, a: S) -> S {
    if let S::Num(v) = a {
        let f = op.apply(v);
        if !f.is_nan() {
            return S::Num(norm_zero(f));
        }
        return S::Un(op, Box::new(a));
    }
    match (op, &a) {
        (UnaryOp::Log, S::Un(UnaryOp::Exp, u)) => (**u).clone(),
        (UnaryOp::Exp, S::Un(UnaryOp::Log, u)) => (**u).clone(),
        (UnaryOp::Abs, S::Un(UnaryOp::Abs, _)) => a.clone(),
        _ => S::Un(op, Box::new(a)),
    }
}

fn simp_pow(base: S, exp: S) -> S {
    if let (S::Num(b), S::Num(e)) = (&base, &exp) {
        let f = b.powf(*e);
        if f.is_finite() {
            return S::Num(norm_zero(f));
        }
    }
    if let S::Num(e) = exp {
        if e == 1.0 {
            return base;
        }
        if e == 0.0 && is_total(&base) {
            return S::Num(1.0);
        }
        if let S::Pow(b2, e2) = &base {
            if let S::Num(k2) = **e2 {
                return simp_pow((**b2).clone(), S::Num(e * k2));
            }
        }
    }
    S::Pow(Box::new(base), Box::new(exp))
}

fn simp_div(a: S, b: S, mode: Mode) -> S {
    if let S::Num(k) = b {
        if k != 0.0 && (1.0 / k).is_finite() {
            let mut fs = Vec::new();
            splice_prod(S::Num(1.0 / k), &mut fs);
            splice_prod(a, &mut fs);
            return simp_prod(fs, mode);
        }
    }
    if mode == Mode::Canonical && b == S::Ph {
        let mut fs = Vec::new();
        splice_prod(S::Ph, &mut fs);
        splice_prod(a, &mut fs);
        return simp_prod(fs, mode);
    }
    S::Div(Box::new(a), Box::new(b))
}

fn simp_sum(terms: Vec<S>, mode: Mode) -> S {
    let mut ts: Vec<S> = Vec::with_capacity(terms.len());
    for t in terms {
        splice_sum(t, &mut ts);
    }

    // Fold numeric terms; in canonical mode bare placeholders absorb them
    // and each other.
    let mut acc = 0.0;
    let mut ph_seen = false;
    ts.retain(|t| match t {
        S::Num(v) => {
            acc += v;
            false
        }
        S::Ph if mode == Mode::Canonical => {
            ph_seen = true;
            false
        }
        _ => true,
    });
    if ph_seen {
        ts.push(S::Ph);
    } else if acc != 0.0 || ts.is_empty() {
        ts.push(S::Num(norm_zero(acc)));
    }

    ts = merge_like_terms(ts, mode);
    ts.sort_by(cmp_s);
    match ts.len() {
        0 => S::Num(0.0),
        1 => ts.pop().unwrap(),
        _ => S::Sum(ts),
    }
}

/// Coefficient of a term in a sum: a concrete scale, or "some constant".
#[derive(Clone, Copy)]
enum Coeff {
    Num(f64),
    Ph,
}

fn merge_like_terms(ts: Vec<S>, mode: Mode) -> Vec<S> {
    let mut keys: Vec<String> = Vec::new();
    let mut merged: Vec<(Coeff, S)> = Vec::new();
    let mut opaque: Vec<S> = Vec::new();
    for t in ts {
        // Numeric mode must not fuse placeholders across terms.
        if mode == Mode::Numeric && has_ph(&t) {
            opaque.push(t);
            continue;
        }
        if matches!(t, S::Ph | S::Num(_)) {
            opaque.push(t);
            continue;
        }
        let (coeff, core) = split_coeff(t);
        let key = key_of(&core);
        match keys.iter().position(|k| *k == key) {
            Some(i) => merged[i].0 = join(merged[i].0, coeff),
            None => {
                keys.push(key);
                merged.push((coeff, core));
            }
        }
    }
    let mut out = opaque;
    for (coeff, core) in merged {
        match coeff {
            Coeff::Num(k) if k == 0.0 => {}
            Coeff::Num(k) if k == 1.0 => out.push(core),
            Coeff::Num(k) => {
                let mut fs = vec![S::Num(k)];
                splice_prod(core, &mut fs);
                out.push(S::Prod(fs));
            }
            Coeff::Ph => {
                let mut fs = vec![S::Ph];
                splice_prod(core, &mut fs);
                out.push(S::Prod(fs));
            }
        }
    }
    out
}

fn join(a: Coeff, b: Coeff) -> Coeff {
    match (a, b) {
        (Coeff::Num(x), Coeff::Num(y)) => Coeff::Num(x + y),
        _ => Coeff::Ph,
    }
}

/// Split `t` into (scalar coefficient, remaining core).
fn split_coeff(t: S) -> (Coeff, S) {
    if let S::Prod(fs) = t {
        let mut num = 1.0;
        let mut ph = false;
        let mut core: Vec<S> = Vec::new();
        for f in fs {
            match f {
                S::Num(v) => num *= v,
                S::Ph => ph = true,
                other => core.push(other),
            }
        }
        let core = match core.len() {
            0 => S::Num(1.0),
            1 => core.into_iter().next().unwrap(),
            _ => S::Prod(core),
        };
        let coeff = if ph { Coeff::Ph } else { Coeff::Num(num) };
        (coeff, core)
    } else {
        (Coeff::Num(1.0), t)
    }
}

fn simp_prod(factors: Vec<S>, mode: Mode) -> S {
    let mut fs: Vec<S> = Vec::with_capacity(factors.len());
    for f in factors {
        splice_prod(f, &mut fs);
    }

    let mut acc = 1.0;
    let mut ph_seen = false;
    fs.retain(|f| match f {
        S::Num(v) => {
            acc *= v;
            false
        }
        S::Ph if mode == Mode::Canonical => {
            ph_seen = true;
            false
        }
        _ => true,
    });
    if acc == 0.0 {
        // A zero factor annihilates the whole chain — even a placeholder
        // one (every family member is zero) — unless a remaining factor has
        // domain holes the zero would paper over.
        if fs.iter().all(is_total) {
            return S::Num(0.0);
        }
        fs.push(S::Num(0.0));
    } else if ph_seen {
        fs.push(S::Ph);
    } else if acc != 1.0 || fs.is_empty() {
        fs.push(S::Num(acc));
    }

    fs = merge_powers(fs, mode);

    if mode == Mode::Canonical {
        if let Some(out) = absorb_into_sum(&fs) {
            // Not yet normalized; the enclosing fixpoint re-simplifies.
            return out;
        }
    }

    fs.sort_by(cmp_s);
    match fs.len() {
        0 => S::Num(1.0),
        1 => fs.pop().unwrap(),
        _ => S::Prod(fs),
    }
}

/// `u * u -> u^2`, `u^a * u^b -> u^(a+b)` for integer exponents.
fn merge_powers(fs: Vec<S>, mode: Mode) -> Vec<S> {
    let mut keys: Vec<String> = Vec::new();
    let mut groups: Vec<(S, f64)> = Vec::new();
    let mut out: Vec<S> = Vec::new();
    for f in fs {
        let (base, k) = match &f {
            S::Pow(b, e) => match **e {
                S::Num(k) if k.fract() == 0.0 => ((**b).clone(), k),
                _ => {
                    out.push(f);
                    continue;
                }
            },
            S::Num(_) | S::Ph => {
                out.push(f);
                continue;
            }
            _ => (f.clone(), 1.0),
        };
        if mode == Mode::Numeric && has_ph(&base) {
            out.push(f);
            continue;
        }
        let key = key_of(&base);
        match keys.iter().position(|x| *x == key) {
            Some(i) => groups[i].1 += k,
            None => {
                keys.push(key);
                groups.push((base, k));
            }
        }
    }
    for (base, k) in groups {
        if k == 1.0 {
            out.push(base);
        } else if k == 0.0 && is_total(&base) {
            // u^0: drop the factor (guarded like pow's zero-exponent rule).
        } else {
            out.push(S::Pow(Box::new(base), Box::new(S::Num(k))));
        }
    }
    out
}

/// `k * (a + b + ...)` with `k` numeric or placeholder: push the coefficient
/// into the sum when every term has a scalar slot to take it, e.g.
/// `c * (c*x + c*sin(x))` and `0.2 * (c*x + c)`. This only ever shrinks the
/// tree. Returns the rewritten sum.
fn absorb_into_sum(fs: &[S]) -> Option<S> {
    let mut sum_idx = None;
    let mut coeff = None;
    let mut rest: Vec<S> = Vec::new();
    for (i, f) in fs.iter().enumerate() {
        match f {
            S::Sum(_) if sum_idx.is_none() => sum_idx = Some(i),
            S::Num(v) if coeff.is_none() => coeff = Some(Coeff::Num(*v)),
            S::Ph if coeff.is_none() => coeff = Some(Coeff::Ph),
            other => rest.push(other.clone()),
        }
    }
    let (Some(si), Some(coeff)) = (sum_idx, coeff) else {
        return None;
    };
    let S::Sum(terms) = &fs[si] else {
        return None;
    };
    if !terms.iter().all(can_absorb) {
        return None;
    }
    let new_terms: Vec<S> = terms.iter().map(|t| absorb(t, coeff)).collect();
    let new_sum = S::Sum(new_terms);
    if rest.is_empty() {
        Some(new_sum)
    } else {
        rest.push(new_sum);
        Some(S::Prod(rest))
    }
}

fn can_absorb(t: &S) -> bool {
    match t {
        S::Num(_) | S::Ph => true,
        S::Prod(fs) => fs.iter().any(|f| matches!(f, S::Num(_) | S::Ph)),
        _ => false,
    }
}

fn absorb(t: &S, coeff: Coeff) -> S {
    match (t, coeff) {
        (S::Num(v), Coeff::Num(k)) => S::Num(norm_zero(v * k)),
        (S::Num(_), Coeff::Ph) | (S::Ph, _) => S::Ph,
        (S::Prod(fs), Coeff::Num(k)) => {
            if fs.iter().any(|f| matches!(f, S::Ph)) {
                t.clone() // the placeholder factor already swallows any scale
            } else {
                let mut out: Vec<S> = Vec::with_capacity(fs.len());
                let mut done = false;
                for f in fs {
                    match f {
                        S::Num(v) if !done => {
                            out.push(S::Num(norm_zero(v * k)));
                            done = true;
                        }
                        other => out.push(other.clone()),
                    }
                }
                debug_assert!(done, "can_absorb admitted a term without a slot");
                S::Prod(out)
            }
        }
        (S::Prod(fs), Coeff::Ph) => {
            let mut out: Vec<S> = vec![S::Ph];
            out.extend(
                fs.iter()
                    .filter(|f| !matches!(f, S::Num(_) | S::Ph))
                    .cloned(),
            );
            match out.len() {
                1 => S::Ph,
                _ => S::Prod(out),
            }
        }
        _ => unreachable!("can_absorb guards absorb"),
    }
}

/// -0.0 and 0.0 must not produce distinct canonical trees.
fn norm_zero(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

// ---------------------------------------------------------------------------
// canonical order

fn rank(s: &S) -> u8 {
    match s {
        S::Num(_) => 0,
        S::Ph => 1,
        S::Var(_) => 2,
        S::Pow(_, _) => 3,
        S::Un(_, _) => 4,
        S::Div(_, _) => 5,
        S::Prod(_) => 6,
        S::Sum(_) => 7,
    }
}

fn cmp_s(a: &S, b: &S) -> Ordering {
    rank(a).cmp(&rank(b)).then_with(|| match (a, b) {
        (S::Num(x), S::Num(y)) => x.total_cmp(y),
        (S::Ph, S::Ph) => Ordering::Equal,
        (S::Var(x), S::Var(y)) => x.cmp(y),
        (S::Pow(ab, ae), S::Pow(bb, be)) => cmp_s(ab, bb).then_with(|| cmp_s(ae, be)),
        (S::Un(ao, ax), S::Un(bo, bx)) => (*ao as u8).cmp(&(*bo as u8)).then_with(|| cmp_s(ax, bx)),
        (S::Div(an, ad), S::Div(bn, bd)) => cmp_s(an, bn).then_with(|| cmp_s(ad, bd)),
        (S::Prod(xs), S::Prod(ys)) | (S::Sum(xs), S::Sum(ys)) => {
            for (x, y) in xs.iter().zip(ys.iter()) {
                let c = cmp_s(x, y);
                if c != Ordering::Equal {
                    return c;
                }
            }
            xs.len().cmp(&ys.len())
        }
        _ => unreachable!("rank dispatch"),
    })
}

/// Deterministic structural key (placeholders compare equal, numbers by bit
/// pattern).
fn key_of(s: &S) -> String {
    let mut out = String::new();
    write_key(s, &mut out);
    out
}

fn write_key(s: &S, out: &mut String) {
    use std::fmt::Write;
    match s {
        S::Num(v) => {
            let _ = write!(out, "N{:x};", v.to_bits());
        }
        S::Ph => out.push_str("C;"),
        S::Var(v) => {
            let _ = write!(out, "V{v};");
        }
        S::Un(op, a) => {
            let _ = write!(out, "U{}(", op.name());
            write_key(a, out);
            out.push(')');
        }
        S::Pow(a, b) => {
            out.push_str("P(");
            write_key(a, out);
            write_key(b, out);
            out.push(')');
        }
        S::Div(a, b) => {
            out.push_str("D(");
            write_key(a, out);
            write_key(b, out);
            out.push(')');
        }
        S::Prod(fs) => {
            out.push_str("M(");
            for f in fs {
                write_key(f, out);
            }
            out.push(')');
        }
        S::Sum(ts) => {
            out.push_str("A(");
            for t in ts {
                write_key(t, out);
            }
            out.push(')');
        }
    }
}

// ---------------------------------------------------------------------------
