//! Synthetic training data for skeleton prediction.
//!
//! A skeleton is turned into a collection of sets: constants are partially
//! fixed ([`select_constants`]), then for each set fresh constants are drawn
//! from U(-10,10) ([`sample_constants`]), a support is drawn from
//! U(-x_limit, x_limit) with x_limit ~ U(1,10) ([`sample_support`]), and the
//! pair is repaired ([`avoid_nans`]) until the function evaluates finitely
//! everywhere: arguments of log/sqrt get a horizontal offset, arguments of
//! the exp family get rescaled below 7, asin/acos arguments get rescaled
//! into [-1,1], and supports of tan/division get resampled away from
//! singular points. Sets whose repaired function no longer matches the
//! collection's skeleton are discarded and regenerated.

use crate::expr::{
    build, canonical_equal, parse_prefix, simplify, skeletonize, BinaryOp, Expr, Skeleton,
    SkeletonError, UnaryOp,
};
use rand::Rng;
use thiserror::Error;

/// Values with magnitude beyond this count as invalid and trigger repair.
pub const VALID_LIMIT: f64 = 1e12;
/// Post-repair minimum of a log argument over the support.
const LOG_MARGIN: f64 = 0.05;
/// Right domain bound for exp/sinh/cosh/tanh arguments.
const EXP_BOUND: f64 = 7.0;
/// Per-set and per-collection retry budgets for [`generate_sets`].
const SET_RETRIES: usize = 20;
const COLLECTION_RETRIES: usize = 200;
/// Maximum repair passes inside [`avoid_nans`].
const REPAIR_PASSES: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DataError {
    #[error("domain repair failed after {attempts} attempts ({context})")]
    RepairFailed { attempts: usize, context: String },
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
}

// ---------------------------------------------------------------------------
// types

/// Sampled input values for one variable, with the interval they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportSet {
    pub values: Vec<f64>,
    pub domain: (f64, f64),
}

/// A skeleton with concrete constants filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcreteFunction {
    pub tree: Expr,
    pub skeleton: Skeleton,
}

/// N_S (support, response) sets sharing one target skeleton. The target is
/// `None` for inference-time collections, where the skeleton is what the
/// model is asked to recover.
#[derive(Debug, Clone, PartialEq)]
pub struct SetCollection {
    pub sets: Vec<(SupportSet, Vec<f64>)>,
    pub target: Option<Skeleton>,
}

fn is_valid(v: f64) -> bool {
    v.is_finite() && v.abs() <= VALID_LIMIT
}

/// Evaluate a univariate tree over a slice; NaN marks undefined points.
pub fn eval_over(tree: &Expr, xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|&x| tree.evaluate(&[x]).unwrap_or(f64::NAN))
        .collect()
}

// ---------------------------------------------------------------------------
// sampling

/// Draw every placeholder independently from U(-10,10); draws with
/// |c| < 0.01 are rejected and redrawn so no multiplier degenerates to zero.
pub fn sample_constants<R: Rng>(skeleton: &Skeleton, rng: &mut R) -> ConcreteFunction {
    let n = skeleton.n_constants() as usize;
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        let mut c: f64 = rng.random_range(-10.0..10.0);
        while c.abs() < 0.01 {
            c = rng.random_range(-10.0..10.0);
        }
        values.push(c);
    }
    let tree = skeleton
        .set_constants(&values)
        .expect("value count matches placeholder count");
    ConcreteFunction {
        tree,
        skeleton: skeleton.clone(),
    }
}

/// Keep `n_f` randomly chosen placeholders; fix the rest to the value their
/// position makes neutral (multiplicative 1, additive 0) and simplify them
/// away. Placeholders in other positions (e.g. a bare numerator) have no
/// neutral value and are never dropped.
pub fn select_constants<R: Rng>(
    skeleton: &Skeleton,
    n_f: usize,
    rng: &mut R,
) -> Result<Skeleton, DataError> {
    let n_c = skeleton.n_constants() as usize;
    if n_f > n_c {
        return Err(SkeletonError::ArityMismatch {
            expected: skeleton.n_constants(),
            got: n_f,
        }
        .into());
    }
    if n_c < 2 || n_f == n_c {
        return Ok(skeleton.clone());
    }

    let mut droppable: Vec<(u32, f64)> = Vec::new();
    collect_droppable(skeleton.tree(), &mut droppable);
    // choose n_c - n_f placeholders to drop via partial Fisher-Yates
    let mut pool = droppable;
    let n_drop = (n_c - n_f).min(pool.len());
    let mut dropped: Vec<(u32, f64)> = Vec::with_capacity(n_drop);
    for _ in 0..n_drop {
        let i = rng.random_range(0..pool.len());
        dropped.push(pool.swap_remove(i));
    }

    let substituted = substitute_some(skeleton.tree(), &dropped);
    let simplified = simplify(&substituted);
    Ok(Skeleton::new(simplified)?)
}

/// Placeholders sitting directly in a product (neutral 1) or sum (neutral 0).
fn collect_droppable(e: &Expr, out: &mut Vec<(u32, f64)>) {
    match e {
        Expr::Binary(op, a, b) => {
            let neutral = match op {
                BinaryOp::Mul => Some(1.0),
                BinaryOp::Add => Some(0.0),
                _ => None,
            };
            for child in [a.as_ref(), b.as_ref()] {
                match child {
                    Expr::Placeholder(i) => {
                        if let Some(v) = neutral {
                            out.push((*i, v));
                        }
                    }
                    _ => collect_droppable(child, out),
                }
            }
        }
        Expr::Unary(_, a) => collect_droppable(a, out),
        _ => {}
    }
}

fn substitute_some(e: &Expr, dropped: &[(u32, f64)]) -> Expr {
    match e {
        Expr::Placeholder(i) => match dropped.iter().find(|(j, _)| j == i) {
            Some((_, v)) => Expr::Const(*v),
            None => e.clone(),
        },
        Expr::Unary(op, a) => Expr::Unary(*op, Box::new(substitute_some(a, dropped))),
        Expr::Binary(op, a, b) => Expr::Binary(
            *op,
            Box::new(substitute_some(a, dropped)),
            Box::new(substitute_some(b, dropped)),
        ),
        _ => e.clone(),
    }
}

/// n i.i.d. draws from U(-x_limit, x_limit), with x_limit ~ U(1,10) drawn
/// once per call.
pub fn sample_support<R: Rng>(n: usize, rng: &mut R) -> SupportSet {
    let x_limit = rng.random_range(1.0..10.0);
    let values = (0..n)
        .map(|_| rng.random_range(-x_limit..x_limit))
        .collect();
    SupportSet {
        values,
        domain: (-x_limit, x_limit),
    }
}

// ---------------------------------------------------------------------------
// domain repair

fn is_special_unary(op: UnaryOp) -> bool {
    matches!(
        op,
        UnaryOp::Log
            | UnaryOp::Sqrt
            | UnaryOp::Exp
            | UnaryOp::Sinh
            | UnaryOp::Cosh
            | UnaryOp::Tanh
            | UnaryOp::Asin
            | UnaryOp::Acos
            | UnaryOp::Tan
    )
}

/// Add `delta` into an existing additive constant when the argument has one,
/// else append a new `+ delta` node.
fn add_offset(a: Expr, delta: f64) -> Expr {
    match a {
        Expr::Binary(BinaryOp::Add, u, c) => match *c {
            Expr::Const(v) => build::add(*u, build::num(v + delta)),
            other => build::add(build::add(*u, other), build::num(delta)),
        },
        other => build::add(other, build::num(delta)),
    }
}

/// Scale into an existing multiplicative constant when possible, else wrap.
fn scale_by(a: Expr, s: f64) -> Expr {
    match a {
        Expr::Binary(BinaryOp::Mul, c, u) => match *c {
            Expr::Const(v) => build::mul(build::num(v * s), *u),
            other => match *u {
                Expr::Const(v) => build::mul(other, build::num(v * s)),
                w => build::mul(build::num(s), build::mul(other, w)),
            },
        },
        other => build::mul(build::num(s), other),
    }
}

struct Repairer<'a, R: Rng> {
    x: &'a mut Vec<f64>,
    domain: (f64, f64),
    sing: &'a mut Vec<f64>,
    rng: &'a mut R,
    changed: bool,
}

impl<R: Rng> Repairer<'_, R> {
    fn pass(&mut self, e: &Expr) -> Expr {
        match e {
            Expr::Unary(op, a) => {
                let a2 = self.pass(a);
                if !is_special_unary(*op) {
                    return Expr::Unary(*op, Box::new(a2));
                }
                let vals = eval_over(&Expr::Unary(*op, Box::new(a2.clone())), self.x);
                if *op == UnaryOp::Tan {
                    // poles where cos(arg) crosses zero
                    let bad = vals.iter().any(|&v| !is_valid(v));
                    self.enforce_clearance(&build::cos(a2.clone()), bad);
                    return Expr::Unary(*op, Box::new(a2));
                }
                let inn: Vec<f64> = eval_over(&a2, self.x)
                    .into_iter()
                    .filter(|v| v.is_finite())
                    .collect();
                if inn.is_empty() {
                    return Expr::Unary(*op, Box::new(a2)); // deeper repair pending
                }
                let min = inn.iter().cloned().fold(f64::INFINITY, f64::min);
                let max = inn.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let max_abs = inn.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                // The exp family is bounded to arguments <= 7 by convention,
                // even where IEEE evaluation would still be finite.
                let exp_family = matches!(
                    op,
                    UnaryOp::Exp | UnaryOp::Sinh | UnaryOp::Cosh | UnaryOp::Tanh
                );
                let violated =
                    vals.iter().any(|&v| !is_valid(v)) || (exp_family && max > EXP_BOUND);
                if !violated {
                    return Expr::Unary(*op, Box::new(a2));
                }
                let a3 = match op {
                    UnaryOp::Log if min <= 0.0 => {
                        self.changed = true;
                        add_offset(a2, LOG_MARGIN - min)
                    }
                    UnaryOp::Sqrt if min < 0.0 => {
                        self.changed = true;
                        add_offset(a2, -min)
                    }
                    UnaryOp::Exp | UnaryOp::Sinh | UnaryOp::Cosh | UnaryOp::Tanh
                        if max_abs > EXP_BOUND =>
                    {
                        self.changed = true;
                        scale_by(a2, EXP_BOUND / max_abs)
                    }
                    UnaryOp::Asin | UnaryOp::Acos if max_abs > 1.0 => {
                        self.changed = true;
                        scale_by(a2, 1.0 / max_abs)
                    }
                    _ => a2,
                };
                Expr::Unary(*op, Box::new(a3))
            }
            Expr::Binary(BinaryOp::Div, p, q) => {
                let p2 = self.pass(p);
                let q2 = self.pass(q);
                let vals = eval_over(&build::div(p2.clone(), q2.clone()), self.x);
                let bad = vals.iter().any(|&v| !is_valid(v));
                self.enforce_clearance(&q2, bad);
                build::div(p2, q2)
            }
            Expr::Binary(op, a, b) => {
                Expr::Binary(*op, Box::new(self.pass(a)), Box::new(self.pass(b)))
            }
            _ => e.clone(),
        }
    }

    /// Locate zero crossings of `g` (singular points of the enclosing
    /// operation) on a 10n grid. If any support value sits within the
    /// exclusion half-width 0.05·width/n of one — or `force` is set — the
    /// whole support is resampled uniformly over the remaining measure.
    fn enforce_clearance(&mut self, g: &Expr, force: bool) {
        let n = self.x.len().max(1);
        let (lo, hi) = self.domain;
        let width = hi - lo;
        let m = 10 * n;
        let grid: Vec<f64> = (0..=m).map(|i| lo + width * i as f64 / m as f64).collect();
        let gv = eval_over(g, &grid);
        let mut points: Vec<f64> = Vec::new();
        for i in 0..m {
            let (a, b) = (gv[i], gv[i + 1]);
            if !a.is_finite() || !b.is_finite() {
                continue;
            }
            if a == 0.0 {
                points.push(grid[i]);
            } else if a * b < 0.0 {
                points.push(0.5 * (grid[i] + grid[i + 1]));
            }
        }
        if gv[m].is_finite() && gv[m] == 0.0 {
            points.push(grid[m]);
        }
        let w = 0.05 * width / n as f64;
        let too_close = self
            .x
            .iter()
            .any(|v| points.iter().any(|p| (v - p).abs() <= w));
        if force || too_close {
            for i in 0..self.x.len() {
                let mut v = self.rng.random_range(lo..hi);
                for _ in 0..1000 {
                    if points.iter().all(|p| (v - p).abs() > w) {
                        break;
                    }
                    v = self.rng.random_range(lo..hi);
                }
                self.x[i] = v;
            }
            self.changed = true;
        }
        for p in points {
            if self.sing.iter().all(|q| (q - p).abs() > 1e-12) {
                self.sing.push(p);
            }
        }
    }
}

/// True when every exp/sinh/cosh/tanh argument stays within its declared
/// right bound over the support.
fn exp_domain_ok(tree: &Expr, xs: &[f64]) -> bool {
    match tree {
        Expr::Unary(op, a) => {
            if matches!(
                op,
                UnaryOp::Exp | UnaryOp::Sinh | UnaryOp::Cosh | UnaryOp::Tanh
            ) {
                let inn = eval_over(a, xs);
                if inn.iter().any(|v| v.is_finite() && *v > EXP_BOUND + 1e-9) {
                    return false;
                }
            }
            exp_domain_ok(a, xs)
        }
        Expr::Binary(_, a, b) => exp_domain_ok(a, xs) && exp_domain_ok(b, xs),
        _ => true,
    }
}

/// Repair (support, function) until every response is finite: offsets and
/// rescalings are folded into constants inside special-function arguments,
/// and supports are resampled away from singularities. Returns the repaired
/// pair plus the singular points that were avoided.
pub fn avoid_nans<R: Rng>(
    x: &SupportSet,
    f: &ConcreteFunction,
    rng: &mut R,
) -> Result<(SupportSet, ConcreteFunction, Vec<f64>), DataError> {
    let mut values = x.values.clone();
    let mut tree = f.tree.clone();
    let mut sing: Vec<f64> = Vec::new();
    for attempt in 0..REPAIR_PASSES {
        let mut rep = Repairer {
            x: &mut values,
            domain: x.domain,
            sing: &mut sing,
            rng,
            changed: false,
        };
        tree = rep.pass(&tree);
        let changed = rep.changed;
        let ys = eval_over(&tree, &values);
        if ys.iter().all(|&v| is_valid(v)) && exp_domain_ok(&tree, &values) {
            return Ok((
                SupportSet {
                    values,
                    domain: x.domain,
                },
                ConcreteFunction {
                    tree,
                    skeleton: f.skeleton.clone(),
                },
                sing,
            ));
        }
        if !changed {
            return Err(DataError::RepairFailed {
                attempts: attempt + 1,
                context: format!("no further repairs available for {}", f.tree),
            });
        }
    }
    Err(DataError::RepairFailed {
        attempts: REPAIR_PASSES,
        context: format!("repair did not converge for {}", f.tree),
    })
}

// ---------------------------------------------------------------------------
// set generation

/// Build N_S sets for one skeleton: constants are sub-selected once, then
/// each set gets fresh constants, a fresh support, and domain repair. The
/// first accepted set's (post-repair) skeleton becomes the collection
/// target; any later set whose repaired function deviates from it is
/// discarded and regenerated.
pub fn generate_sets<R: Rng>(
    skeleton_source: &Skeleton,
    n_s: usize,
    n: usize,
    rng: &mut R,
) -> Result<SetCollection, DataError> {
    let n_c = skeleton_source.n_constants() as usize;
    let n_f = if n_c < 2 { n_c } else { rng.random_range(2..=n_c) };
    let ex = select_constants(skeleton_source, n_f, rng)?;
    if n_s == 0 {
        return Ok(SetCollection {
            sets: Vec::new(),
            target: Some(skeletonize(&sample_constants(&ex, rng).tree)),
        });
    }

    let mut target: Option<Skeleton> = None;
    let mut sets: Vec<(SupportSet, Vec<f64>)> = Vec::with_capacity(n_s);
    let mut set_attempts = 0usize;
    let mut total_attempts = 0usize;
    while sets.len() < n_s {
        set_attempts += 1;
        total_attempts += 1;
        if set_attempts > SET_RETRIES || total_attempts > COLLECTION_RETRIES {
            return Err(DataError::RepairFailed {
                attempts: total_attempts,
                context: format!(
                    "set {} of {} for skeleton {}",
                    sets.len() + 1,
                    n_s,
                    skeleton_source
                ),
            });
        }
        let support = sample_support(n, rng);
        let f = sample_constants(&ex, rng);
        let (support, f, _) = match avoid_nans(&support, &f, rng) {
            Ok(t) => t,
            Err(_) => continue,
        };
        let kappa = skeletonize(&f.tree);
        if let Some(t) = &target {
            if !canonical_equal(&kappa, t) {
                continue;
            }
        }
        let ys = eval_over(&f.tree, &support.values);
        if !ys.iter().all(|&v| is_valid(v)) {
            continue;
        }
        if target.is_none() {
            target = Some(kappa);
        }
        sets.push((support, ys));
        set_attempts = 0;
    }
    debug_assert!(target.is_some(), "N_S >= 1 sets were produced");
    Ok(SetCollection { sets, target })
}

// ---------------------------------------------------------------------------
// training-record files

/// One collection per line:
/// `<skeleton prefix> ; <N_S> ; <n> ; <lo> <hi> <x1> <y1> ... <xn> <yn> ; ...`
/// with one `<lo> <hi> ...` block per set. A collection without a target
/// skeleton writes `?` in the first field.
pub fn record_line(c: &SetCollection) -> String {
    let n = c.sets.first().map_or(0, |(s, _)| s.values.len());
    let head = match &c.target {
        Some(t) => t.to_string(),
        None => "?".to_string(),
    };
    let mut out = format!("{} ; {} ; {}", head, c.sets.len(), n);
    for (support, ys) in &c.sets {
        out.push_str(" ;");
        out.push_str(&format!(" {:?} {:?}", support.domain.0, support.domain.1));
        for (x, y) in support.values.iter().zip(ys) {
            out.push_str(&format!(" {x:?} {y:?}"));
        }
    }
    out
}

pub fn parse_record_line(line: &str) -> Result<SetCollection, String> {
    let parts: Vec<&str> = line.split(';').map(|p| p.trim()).collect();
    if parts.len() < 3 {
        return Err("record needs `skeleton ; N_S ; n ; blocks...`".into());
    }
    let target = if parts[0] == "?" {
        None
    } else {
        let tree = parse_prefix(parts[0]).map_err(|e| e.to_string())?;
        Some(Skeleton::new(tree).map_err(|e| e.to_string())?)
    };
    let n_s: usize = parts[1].parse().map_err(|e| format!("bad N_S: {e}"))?;
    let n: usize = parts[2].parse().map_err(|e| format!("bad n: {e}"))?;
    if parts.len() != 3 + n_s {
        return Err(format!("expected {n_s} set blocks, found {}", parts.len() - 3));
    }
    let mut sets = Vec::with_capacity(n_s);
    for block in &parts[3..] {
        let nums: Vec<f64> = block
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| format!("bad number {t}: {e}")))
            .collect::<Result<_, _>>()?;
        if nums.len() != 2 + 2 * n {
            return Err(format!("block needs {} numbers, found {}", 2 + 2 * n, nums.len()));
        }
        let domain = (nums[0], nums[1]);
        let mut values = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for pair in nums[2..].chunks(2) {
            values.push(pair[0]);
            ys.push(pair[1]);
        }
        sets.push((SupportSet { values, domain }, ys));
    }
    Ok(SetCollection { sets, target })
}

pub fn records_to_string(cs: &[SetCollection]) -> String {
    let mut out = String::new();
    for c in cs {
        out.push_str(&record_line(c));
        out.push('\n');
    }
    out
}

pub fn records_from_string(s: &str) -> Result<Vec<SetCollection>, String> {
    s.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| parse_record_line(l).map_err(|e| format!("record {i}: {e}")))
        .collect()
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::build::*;
    use crate::gen::{generate_corpus, GenConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn skel(e: Expr) -> Skeleton {
        Skeleton::new(e).unwrap()
    }

    #[test]
    fn sample_constants_substitutes_each_placeholder() {
        let s = skel(mul(ph(1), x()));
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let f = sample_constants(&s, &mut rng);
        match &f.tree {
            Expr::Binary(BinaryOp::Mul, a, _) => match **a {
                Expr::Const(v) => {
                    assert!((-10.0..10.0).contains(&v) && v.abs() >= 0.01);
                }
                _ => panic!("constant not substituted"),
            },
            _ => panic!("structure changed"),
        }
        assert!(canonical_equal(&skeletonize(&f.tree), &s));
    }

    #[test]
    fn constant_draws_follow_uniform_minus10_10() {
        let s = skel(mul(ph(1), x()));
        let mut rng = ChaCha12Rng::seed_from_u64(0xC0);
        let mut sum = 0.0;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for _ in 0..10_000 {
            let f = sample_constants(&s, &mut rng);
            let v = match &f.tree {
                Expr::Binary(_, a, _) => match **a {
                    Expr::Const(v) => v,
                    _ => unreachable!(),
                },
                _ => unreachable!(),
            };
            sum += v;
            lo = lo.min(v);
            hi = hi.max(v);
            assert!(v.abs() >= 0.01);
        }
        let mean = sum / 10_000.0;
        assert!(mean.abs() < 0.35, "mean {mean}");
        assert!(lo > -10.0 && hi < 10.0);
    }

    #[test]
    fn skeletonize_inverts_sample_constants_on_random_skeletons() {
        let cfg = GenConfig {
            rng_seed: 5,
            ..GenConfig::default()
        };
        let corpus = generate_corpus(200, &cfg).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(77);
        for (i, entry) in corpus.entries.iter().enumerate() {
            let s = Skeleton::new(parse_prefix(entry).unwrap()).unwrap();
            for _ in 0..5 {
                let f = sample_constants(&s, &mut rng);
                assert!(
                    canonical_equal(&skeletonize(&f.tree), &s),
                    "entry {i}: {entry}"
                );
            }
        }
    }

    #[test]
    fn select_constants_keeps_everything_when_nothing_to_drop() {
        let s = skel(add(mul(ph(1), x()), ph(2)));
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let out = select_constants(&s, 2, &mut rng).unwrap();
        assert!(canonical_equal(&out, &s));
    }

    #[test]
    fn select_constants_drops_by_neutral_substitution() {
        // c1*sin(c2*x + c3) + c4, keeping {c2, c4} -> sin(c2*x) + c4
        let s = skel(add(
            mul(ph(1), sin(add(mul(ph(2), x()), ph(3)))),
            ph(4),
        ));
        let want = skel(add(sin(mul(ph(1), x())), ph(2)));
        let mut found = false;
        for seed in 0..200 {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let out = select_constants(&s, 2, &mut rng).unwrap();
            assert_eq!(out.n_constants(), 2, "seed {seed}: {out}");
            if canonical_equal(&out, &want) {
                found = true;
                break;
            }
        }
        assert!(found, "no seed dropped exactly c1 and c3");
    }

    #[test]
    fn select_constants_rejects_excess_arity() {
        let s = skel(add(mul(ph(1), x()), ph(2)));
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        assert!(matches!(
            select_constants(&s, 3, &mut rng),
            Err(DataError::Skeleton(SkeletonError::ArityMismatch { .. }))
        ));
    }

    #[test]
    fn support_respects_limits_and_seeds() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let s = sample_support(3000, &mut rng);
        assert_eq!(s.values.len(), 3000);
        let (lo, hi) = s.domain;
        assert!(lo >= -10.0 && hi <= 10.0 && lo == -hi);
        assert!(s.values.iter().all(|v| (lo..hi).contains(v)));

        let one = sample_support(1, &mut rng);
        assert_eq!(one.values.len(), 1);
        assert!((one.domain.0..one.domain.1).contains(&one.values[0]));

        let mut r1 = ChaCha12Rng::seed_from_u64(42);
        let mut r2 = ChaCha12Rng::seed_from_u64(42);
        assert_eq!(sample_support(64, &mut r1), sample_support(64, &mut r2));
    }

    fn fixed_support(n: usize, lo: f64, hi: f64, seed: u64) -> SupportSet {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        SupportSet {
            values: (0..n).map(|_| rng.random_range(lo..hi)).collect(),
            domain: (lo, hi),
        }
    }

    fn concrete(tree: Expr) -> ConcreteFunction {
        let skeleton = skeletonize(&tree);
        ConcreteFunction { tree, skeleton }
    }

    #[test]
    fn log_argument_gets_offset_to_margin() {
        let f = concrete(log(x()));
        let support = fixed_support(100, -5.0, 5.0, 1);
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let (s2, f2, _) = avoid_nans(&support, &f, &mut rng).unwrap();
        assert_eq!(s2.values, support.values, "log repair must not resample");
        let ys = eval_over(&f2.tree, &s2.values);
        assert!(ys.iter().all(|v| v.is_finite()));
        let inner = match &f2.tree {
            Expr::Unary(UnaryOp::Log, a) => a.clone(),
            _ => panic!("shape changed"),
        };
        let inn = eval_over(&inner, &s2.values);
        let min = inn.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((min - 0.05).abs() < 1e-9, "min inner = {min}");
    }

    #[test]
    fn exp_argument_scaled_under_bound() {
        let f = concrete(exp(x()));
        let support = fixed_support(100, -9.0, 9.0, 3);
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let (s2, f2, _) = avoid_nans(&support, &f, &mut rng).unwrap();
        let inner = match &f2.tree {
            Expr::Unary(UnaryOp::Exp, a) => a.clone(),
            _ => panic!("shape changed"),
        };
        let inn = eval_over(&inner, &s2.values);
        let max = inn.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(max <= 7.0 + 1e-9, "max inner = {max}");
        assert!(eval_over(&f2.tree, &s2.values).iter().all(|v| v.is_finite()));
    }

    #[test]
    fn repairs_fold_into_existing_constants() {
        // 2*log(1.5*x + 0.5): offset merges into 0.5; skeleton unchanged.
        let f = concrete(mul(
            num(2.0),
            log(add(mul(num(1.5), x()), num(0.5))),
        ));
        let support = fixed_support(50, -4.0, 4.0, 5);
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let (_, f2, _) = avoid_nans(&support, &f, &mut rng).unwrap();
        assert!(canonical_equal(&skeletonize(&f2.tree), &f.skeleton));
        assert_eq!(f2.tree.node_count(), f.tree.node_count());
    }

    #[test]
    fn singular_supports_are_resampled_clear_of_poles() {
        // -3.12*x / sin(1.45*x) - 2.2 has poles at k*pi/1.45
        let f = concrete(sub(
            div(mul(num(-3.12), x()), sin(mul(num(1.45), x()))),
            num(2.2),
        ));
        let support = fixed_support(200, -10.0, 10.0, 7);
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let (s2, f2, sing) = avoid_nans(&support, &f, &mut rng).unwrap();
        assert!(!sing.is_empty());
        let ys = eval_over(&f2.tree, &s2.values);
        assert!(ys.iter().all(|&v| is_valid(v)));
        // every detected pole should approximate some k*pi/1.45
        for p in &sing {
            let k = (p * 1.45 / std::f64::consts::PI).round();
            let true_pole = k * std::f64::consts::PI / 1.45;
            assert!((p - true_pole).abs() < 0.02, "spurious pole {p}");
        }
        let w = 0.05 * 20.0 / 200.0;
        for v in &s2.values {
            assert!(sing.iter().all(|p| (v - p).abs() > w));
        }
    }

    #[test]
    fn repair_touches_only_special_function_arguments() {
        fn same_outside_special(a: &Expr, b: &Expr) -> bool {
            match (a, b) {
                (Expr::Unary(oa, ia), Expr::Unary(ob, ib)) => {
                    oa == ob && (is_special_unary(*oa) || same_outside_special(ia, ib))
                }
                (Expr::Binary(oa, p, q), Expr::Binary(ob, r, s)) => {
                    oa == ob && same_outside_special(p, r) && same_outside_special(q, s)
                }
                _ => a == b,
            }
        }
        let cfg = GenConfig {
            rng_seed: 13,
            ..GenConfig::default()
        };
        let corpus = generate_corpus(60, &cfg).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(14);
        for entry in &corpus.entries {
            let s = Skeleton::new(parse_prefix(entry).unwrap()).unwrap();
            let f = sample_constants(&s, &mut rng);
            let support = sample_support(64, &mut rng);
            if let Ok((_, f2, _)) = avoid_nans(&support, &f, &mut rng) {
                assert!(
                    same_outside_special(&f.tree, &f2.tree),
                    "outside-node change for {entry}"
                );
            }
        }
    }

    #[test]
    fn linear_collection_is_exactly_linear() {
        let s = skel(add(mul(ph(1), x()), ph(2)));
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        let c = generate_sets(&s, 2, 4, &mut rng).unwrap();
        assert_eq!(c.sets.len(), 2);
        assert!(canonical_equal(c.target.as_ref().unwrap(), &s));
        for (support, ys) in &c.sets {
            let (x0, x1) = (support.values[0], support.values[1]);
            let (y0, y1) = (ys[0], ys[1]);
            let a = (y1 - y0) / (x1 - x0);
            let b = y0 - a * x0;
            for (x, y) in support.values.iter().zip(ys) {
                assert!((a * x + b - y).abs() < 1e-9 * (1.0 + y.abs()));
            }
        }
    }

    #[test]
    fn hazardous_skeleton_yields_finite_consistent_sets() {
        // c1*log(c2*x + c3) + c4*sin(c5*x + c6)
        let s = skel(add(
            mul(ph(1), log(add(mul(ph(2), x()), ph(3)))),
            mul(ph(4), sin(add(mul(ph(5), x()), ph(6)))),
        ));
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        let c = generate_sets(&s, 3, 128, &mut rng).unwrap();
        assert_eq!(c.sets.len(), 3);
        for (_, ys) in &c.sets {
            assert!(ys.iter().all(|&v| is_valid(v)));
        }
    }

    #[test]
    fn corpus_collections_are_finite_and_skeleton_consistent() {
        let cfg = GenConfig {
            rng_seed: 23,
            ..GenConfig::default()
        };
        let corpus = generate_corpus(100, &cfg).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(24);
        let mut produced = 0;
        for entry in &corpus.entries {
            let s = Skeleton::new(parse_prefix(entry).unwrap()).unwrap();
            let c = match generate_sets(&s, 10, 128, &mut rng) {
                Ok(c) => c,
                Err(_) => continue, // budget exhausted on a pathological draw
            };
            produced += c.sets.len();
            for (support, ys) in &c.sets {
                assert_eq!(support.values.len(), 128);
                assert!(ys.iter().all(|&v| is_valid(v)));
            }
        }
        assert!(produced >= 900, "only {produced} sets generated");
    }

    #[test]
    fn generate_sets_is_deterministic() {
        let s = skel(add(
            mul(ph(1), sin(add(mul(ph(2), x()), ph(3)))),
            ph(4),
        ));
        let mut r1 = ChaCha12Rng::seed_from_u64(55);
        let mut r2 = ChaCha12Rng::seed_from_u64(55);
        let a = generate_sets(&s, 5, 32, &mut r1).unwrap();
        let b = generate_sets(&s, 5, 32, &mut r2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn record_lines_round_trip() {
        let s = skel(add(mul(ph(1), x()), ph(2)));
        let mut rng = ChaCha12Rng::seed_from_u64(61);
        let a = generate_sets(&s, 3, 16, &mut rng).unwrap();
        let b = generate_sets(&s, 2, 8, &mut rng).unwrap();
        let text = records_to_string(&[a.clone(), b.clone()]);
        let back = records_from_string(&text).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].sets, a.sets);
        assert_eq!(back[1].sets, b.sets);
        assert_eq!(
            back[0].target.as_ref().unwrap().canonical_key(),
            a.target.as_ref().unwrap().canonical_key()
        );
    }
}
