//! Skeleton-similarity scoring by genetic constant fitting.
//!
//! Given an estimated skeleton and a concrete target function, a GA searches
//! the skeleton's constant vector to minimize the summed absolute error over
//! a test set drawn from an expanded domain. Repeating the fit against
//! freshly concretized targets and aggregating mean ± std yields a
//! structural-similarity score: canonically right skeletons reach ~0, wrong
//! ones can't.
//!
//! Skeleton evaluation runs on a small postfix VM over the whole test-point
//! buffer at once, with per-element semantics identical to
//! [`Expr::evaluate`] so fitted constants mean exactly what tree evaluation
//! says they mean.

use crate::data::{sample_constants, ConcreteFunction};
use crate::expr::{BinaryOp, Expr, Skeleton, UnaryOp, EULER};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Per-point charge when the estimate is undefined at a test point; large
/// enough that domain-invalid constants always lose.
pub const UNDEFINED_PENALTY: f64 = 1e6;

/// Targets are resampled where undefined; values beyond this are treated as
/// undefined too (mirrors the data generator's validity bound).
const TARGET_LIMIT: f64 = 1e12;

/// Constant draws for a target concretization before giving up on finding
/// one that is evaluable over the test domain (log/sqrt families reject
/// whole sign regions of the constant space).
const TARGET_REDRAWS: usize = 50;

/// Generations without improvement before the mutation step width halves,
/// and the floor it halves down to (as a fraction of the configured sigma).
const ANNEAL_AFTER: usize = 10;
const SIGMA_FLOOR: f64 = 1e-3;
const MAX_RESTARTS: usize = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub n_test: usize,
    pub repeats: usize,
    /// Test points are drawn U(expansion·lo, expansion·hi).
    pub expansion: f64,
    pub population: usize,
    pub tournament: usize,
    pub crossover_rate: f64,
    pub mutation_sigma: f64,
    pub mutation_rate: f64,
    /// Stop when the best objective improves by less than `stop_delta` over
    /// `stop_window` generations (or at `max_generations`).
    pub stop_window: usize,
    pub stop_delta: f64,
    pub max_generations: usize,
    /// Gene initialization range, matching the constant-sampling range.
    pub init_range: (f64, f64),
    pub rng_seed: u64,
}

impl Default for EvalConfig {
    fn default() -> EvalConfig {
        EvalConfig {
            n_test: 3000,
            repeats: 30,
            expansion: 2.0,
            population: 500,
            tournament: 3,
            crossover_rate: 0.5,
            mutation_sigma: 0.5,
            mutation_rate: 0.1,
            stop_window: 20,
            stop_delta: 1e-5,
            max_generations: 200,
            init_range: (-10.0, 10.0),
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalResult {
    /// Raw per-repeat error: Σ |f_target(x) − f_est(x)| over the test set.
    pub rs: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    /// Per-repeat error divided by (n_test · target value range).
    pub normalized_rs: Vec<f64>,
    pub normalized_mean: f64,
    /// Fitted constant vector per repeat.
    pub constants: Vec<Vec<f64>>,
}

// ---------------------------------------------------------------------------
// Postfix VM

enum Instr {
    X,
    Num(f64),
    Slot(usize),
    Un(UnaryOp),
    Bin(BinaryOp),
    /// `pow` with a structural integer exponent: one operand fewer, same
    /// `powf` semantics as the generic path.
    PowI(i32),
}

struct Compiled {
    instrs: Vec<Instr>,
    n_slots: usize,
    depth: usize,
}

fn compile(tree: &Expr) -> Compiled {
    fn emit(e: &Expr, out: &mut Vec<Instr>, n_slots: &mut usize, depth: &mut usize, cur: &mut usize) {
        let bump = |cur: &mut usize, depth: &mut usize| {
            *cur += 1;
            *depth = (*depth).max(*cur);
        };
        match e {
            Expr::Var(_) => {
                out.push(Instr::X);
                bump(cur, depth);
            }
            Expr::Const(v) => {
                out.push(Instr::Num(*v));
                bump(cur, depth);
            }
            Expr::Placeholder(i) => {
                let slot = (*i as usize).saturating_sub(1);
                *n_slots = (*n_slots).max(slot + 1);
                out.push(Instr::Slot(slot));
                bump(cur, depth);
            }
            Expr::Unary(op, a) => {
                emit(a, out, n_slots, depth, cur);
                out.push(Instr::Un(*op));
            }
            Expr::Binary(BinaryOp::Pow, a, b) => {
                if let Expr::Const(k) = **b {
                    if k != EULER && k.fract() == 0.0 && (-3.0..=5.0).contains(&k) {
                        emit(a, out, n_slots, depth, cur);
                        out.push(Instr::PowI(k as i32));
                        return;
                    }
                }
                emit(a, out, n_slots, depth, cur);
                emit(b, out, n_slots, depth, cur);
                out.push(Instr::Bin(BinaryOp::Pow));
                *cur -= 1;
            }
            Expr::Binary(op, a, b) => {
                emit(a, out, n_slots, depth, cur);
                emit(b, out, n_slots, depth, cur);
                out.push(Instr::Bin(*op));
                *cur -= 1;
            }
        }
    }
    let mut instrs = Vec::new();
    let (mut n_slots, mut depth, mut cur) = (0, 0, 0);
    emit(tree, &mut instrs, &mut n_slots, &mut depth, &mut cur);
    Compiled {
        instrs,
        n_slots,
        depth,
    }
}

/// Scratch buffers reused across objective evaluations.
struct Scratch {
    stack: Vec<Vec<f64>>,
}

impl Compiled {
    fn eval_into<'a>(&self, xs: &[f64], c: &[f64], scratch: &'a mut Scratch) -> &'a [f64] {
        let n = xs.len();
        while scratch.stack.len() < self.depth {
            scratch.stack.push(vec![0.0; n]);
        }
        for buf in scratch.stack.iter_mut() {
            buf.resize(n, 0.0);
        }
        let mut sp = 0usize;
        for instr in &self.instrs {
            match instr {
                Instr::X => {
                    scratch.stack[sp].copy_from_slice(xs);
                    sp += 1;
                }
                Instr::Num(v) => {
                    scratch.stack[sp].fill(*v);
                    sp += 1;
                }
                Instr::Slot(i) => {
                    scratch.stack[sp].fill(c[*i]);
                    sp += 1;
                }
                Instr::Un(op) => {
                    for v in scratch.stack[sp - 1].iter_mut() {
                        *v = op.apply(*v);
                    }
                }
                Instr::PowI(k) => {
                    let e = *k as f64;
                    for v in scratch.stack[sp - 1].iter_mut() {
                        let p = v.powf(e);
                        *v = if p.is_finite() { p } else { f64::NAN };
                    }
                }
                Instr::Bin(op) => {
                    let (lo, hi) = scratch.stack.split_at_mut(sp - 1);
                    let a = &mut lo[sp - 2];
                    let b = &hi[0];
                    for (va, vb) in a.iter_mut().zip(b) {
                        *va = op.apply(*va, *vb);
                    }
                    sp -= 1;
                }
            }
        }
        debug_assert_eq!(sp, 1);
        &scratch.stack[0]
    }

    /// Σ |yt − f_est(x; c)| with a fixed penalty per undefined point.
    fn objective(&self, xs: &[f64], yt: &[f64], c: &[f64], scratch: &mut Scratch) -> f64 {
        let out = self.eval_into(xs, c, scratch);
        let mut r = 0.0;
        for (v, t) in out.iter().zip(yt) {
            if v.is_finite() {
                r += (t - v).abs();
            } else {
                r += UNDEFINED_PENALTY;
            }
        }
        r
    }
}

// ---------------------------------------------------------------------------
// Test-set sampling

fn target_valid(v: f64) -> bool {
    v.is_finite() && v.abs() <= TARGET_LIMIT
}

/// Draw `n_test` points from the expanded domain, resampling any point where
/// the target is undefined.
fn sample_test_points<R: Rng>(
    target: &Expr,
    domain: (f64, f64),
    n_test: usize,
    expansion: f64,
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    let (lo, hi) = (expansion * domain.0, expansion * domain.1);
    let mut xs = Vec::with_capacity(n_test);
    let mut ys = Vec::with_capacity(n_test);
    let mut attempts = 0usize;
    let budget = 200 * n_test.max(1);
    while xs.len() < n_test && attempts < budget {
        attempts += 1;
        let x = rng.random_range(lo..hi);
        let y = target
            .evaluate(&[x])
            .unwrap_or(f64::NAN);
        if target_valid(y) {
            xs.push(x);
            ys.push(y);
        }
    }
    (xs, ys)
}

// ---------------------------------------------------------------------------
// The GA itself

fn genome_key(c: &[f64]) -> Vec<u64> {
    c.iter().map(|v| v.to_bits()).collect()
}

/// Fit the compiled estimate's constants against (xs, yt); returns the best
/// constant vector, its raw objective, and the objective normalized by
/// n_test times the target range.
fn fit_compiled<R: Rng>(
    compiled: &Compiled,
    xs: &[f64],
    yt: &[f64],
    config: &EvalConfig,
    rng: &mut R,
) -> (Vec<f64>, f64, f64) {
    let normalize = |r: f64| {
        let range = yt
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let span = (range.1 - range.0).max(1e-12);
        r / (xs.len().max(1) as f64 * span)
    };

    let mut scratch = Scratch { stack: Vec::new() };
    if xs.is_empty() {
        return (
            vec![0.0; compiled.n_slots],
            UNDEFINED_PENALTY * config.n_test as f64,
            f64::INFINITY,
        );
    }
    if compiled.n_slots == 0 {
        let r = compiled.objective(xs, yt, &[], &mut scratch);
        return (Vec::new(), r, normalize(r));
    }

    let n_c = compiled.n_slots;
    let (ilo, ihi) = config.init_range;
    let mut memo: HashMap<Vec<u64>, f64> = HashMap::new();
    let score = |c: &Vec<f64>, scratch: &mut Scratch, memo: &mut HashMap<Vec<u64>, f64>| {
        let key = genome_key(c);
        if let Some(&v) = memo.get(&key) {
            return v;
        }
        let v = compiled.objective(xs, yt, c, scratch);
        memo.insert(key, v);
        v
    };

    let mut pop: Vec<Vec<f64>> = (0..config.population)
        .map(|_| (0..n_c).map(|_| rng.random_range(ilo..ihi)).collect())
        .collect();
    let mut fitness: Vec<f64> = pop
        .iter()
        .map(|c| score(c, &mut scratch, &mut memo))
        .collect();

    let (mut best_c, mut best_r) = {
        let i = (0..pop.len()).min_by(|&a, &b| fitness[a].total_cmp(&fitness[b])).unwrap();
        (pop[i].clone(), fitness[i])
    };
    let mut history = vec![best_r];
    // Step width anneals on stagnation so late generations can polish
    // constants below the initial sigma's resolution.
    let mut sigma = config.mutation_sigma;
    let mut gauss = Normal::new(0.0, sigma).expect("positive sigma");
    let mut stagnant = 0usize;

    // Converged runs exit through the stagnation window; hitting the
    // generation cap instead usually means a bad basin (a large objective
    // keeps shedding nominal amounts each generation). One restart with a
    // fresh population re-rolls the basin; the incumbent stays in the
    // elite slot, so the result can only improve.
    'runs: for restart in 0..=MAX_RESTARTS {
        if restart > 0 {
            pop = (0..config.population)
                .map(|_| (0..n_c).map(|_| rng.random_range(ilo..ihi)).collect())
                .collect();
            pop[0] = best_c.clone();
            fitness = pop
                .iter()
                .map(|c| score(c, &mut scratch, &mut memo))
                .collect();
            for (c, &f) in pop.iter().zip(&fitness) {
                if f < best_r {
                    best_r = f;
                    best_c = c.clone();
                }
            }
            sigma = config.mutation_sigma;
            gauss = Normal::new(0.0, sigma).expect("positive sigma");
            stagnant = 0;
            history.clear();
            history.push(best_r);
        }
        for _gen in 0..config.max_generations {
            let mut children = Vec::with_capacity(pop.len());
            for _ in 0..pop.len() {
                let tournament = |rng: &mut R| -> usize {
                    let mut best = rng.random_range(0..pop.len());
                    for _ in 1..config.tournament {
                        let i = rng.random_range(0..pop.len());
                        if fitness[i] < fitness[best] {
                            best = i;
                        }
                    }
                    best
                };
                let p1 = tournament(rng);
                let p2 = tournament(rng);
                let mut child: Vec<f64> = (0..n_c)
                    .map(|g| {
                        if rng.random_bool(config.crossover_rate) {
                            pop[p1][g]
                        } else {
                            pop[p2][g]
                        }
                    })
                    .collect();
                for gene in child.iter_mut() {
                    if rng.random_bool(config.mutation_rate) {
                        *gene += gauss.sample(rng);
                    }
                }
                children.push(child);
            }
            // Elite of one: the replacement generation keeps the incumbent.
            children[0] = best_c.clone();
            let child_fitness: Vec<f64> = children
                .iter()
                .map(|c| score(c, &mut scratch, &mut memo))
                .collect();
            pop = children;
            fitness = child_fitness;
            let prev_best = best_r;
            for (c, &f) in pop.iter().zip(&fitness) {
                if f < best_r {
                    best_r = f;
                    best_c = c.clone();
                }
            }
            if prev_best - best_r >= config.stop_delta {
                stagnant = 0;
            } else {
                stagnant += 1;
                if stagnant % ANNEAL_AFTER == 0 {
                    sigma = (0.5 * sigma).max(config.mutation_sigma * SIGMA_FLOOR);
                    gauss = Normal::new(0.0, sigma).expect("positive sigma");
                }
            }
            history.push(best_r);
            if history.len() > config.stop_window {
                let window_ago = history[history.len() - 1 - config.stop_window];
                if window_ago - best_r < config.stop_delta {
                    break 'runs;
                }
            }
        }
    }
    let norm = normalize(best_r);
    (best_c, best_r, norm)
}

fn fit_one<R: Rng>(
    est: &Skeleton,
    f_target: &ConcreteFunction,
    domain: (f64, f64),
    config: &EvalConfig,
    rng: &mut R,
) -> (Vec<f64>, f64, f64) {
    let compiled = compile(est.tree());
    let (xs, yt) = sample_test_points(&f_target.tree, domain, config.n_test, config.expansion, rng);
    fit_compiled(&compiled, &xs, &yt, config, rng)
}

/// Concretize the target family so that it is actually evaluable: redraw
/// constants until a full test set of valid points exists (a log or sqrt
/// family rejects whole sign regions of its constant space, and a bad draw
/// can be undefined over the entire domain). Returns the last draw's test
/// set when every redraw fails.
fn concretize_target<R: Rng>(
    target: &Skeleton,
    domain: (f64, f64),
    config: &EvalConfig,
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    let mut last: Option<(Vec<f64>, Vec<f64>)> = None;
    for _ in 0..TARGET_REDRAWS {
        let f = sample_constants(target, rng);
        let (xs, ys) = sample_test_points(&f.tree, domain, config.n_test, config.expansion, rng);
        let full = xs.len() == config.n_test;
        last = Some((xs, ys));
        if full {
            break;
        }
    }
    last.expect("at least one target draw")
}

/// Fit the estimate's constants against one concrete target. Returns the
/// fitted constants and the raw error r.
pub fn fit_constants(
    est: &Skeleton,
    f_target: &ConcreteFunction,
    domain: (f64, f64),
    config: &EvalConfig,
) -> (Vec<f64>, f64) {
    let mut rng = ChaCha12Rng::seed_from_u64(config.rng_seed);
    let (c, r, _) = fit_one(est, f_target, domain, config, &mut rng);
    (c, r)
}

/// Score an estimated skeleton against a target family: `repeats`
/// independent concretizations of the target, each fitted from scratch.
/// Repeats run in parallel on seeded per-repeat RNG streams, so results are
/// deterministic in the seed.
pub fn evaluate_skeleton(
    est: &Skeleton,
    target: &Skeleton,
    domain: (f64, f64),
    config: &EvalConfig,
) -> EvalResult {
    let runs: Vec<(Vec<f64>, f64, f64)> = (0..config.repeats)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha12Rng::seed_from_u64(config.rng_seed);
            rng.set_stream(i as u64 + 1);
            let (xs, yt) = concretize_target(target, domain, config, &mut rng);
            let compiled = compile(est.tree());
            fit_compiled(&compiled, &xs, &yt, config, &mut rng)
        })
        .collect();
    let rs: Vec<f64> = runs.iter().map(|(_, r, _)| *r).collect();
    let normalized_rs: Vec<f64> = runs.iter().map(|(_, _, n)| *n).collect();
    let constants: Vec<Vec<f64>> = runs.into_iter().map(|(c, _, _)| c).collect();
    let mean = rs.iter().sum::<f64>() / rs.len().max(1) as f64;
    let var = rs.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / rs.len().max(1) as f64;
    let normalized_mean = normalized_rs.iter().sum::<f64>() / normalized_rs.len().max(1) as f64;
    EvalResult {
        rs,
        mean,
        std: var.sqrt(),
        normalized_rs,
        normalized_mean,
        constants,
    }
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::eval_over;
    use crate::expr::build::*;
    use crate::expr::skeletonize;

    fn skeleton_of(t: Expr) -> Skeleton {
        Skeleton::new(t).unwrap()
    }

    fn quick_config(seed: u64) -> EvalConfig {
        EvalConfig {
            n_test: 300,
            repeats: 3,
            population: 200,
            max_generations: 200,
            rng_seed: seed,
            ..EvalConfig::default()
        }
    }

    fn concrete(tree: Expr) -> ConcreteFunction {
        ConcreteFunction {
            skeleton: skeletonize(&tree),
            tree,
        }
    }

    #[test]
    fn vm_matches_tree_evaluation_bitwise() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let skeletons = [
            skeleton_of(add(mul(ph(1), x()), ph(2))),
            skeleton_of(mul(ph(1), log(mul(ph(2), powi(x(), 2))))),
            skeleton_of(div(sin(mul(ph(1), x())), add(powi(x(), 3), ph(2)))),
            skeleton_of(pow(add(x(), ph(1)), ph(2))),
            skeleton_of(exp(mul(ph(1), x()))),
        ];
        for skel in &skeletons {
            let compiled = compile(skel.tree());
            let mut scratch = Scratch { stack: Vec::new() };
            for _ in 0..20 {
                let c: Vec<f64> = (0..skel.n_constants())
                    .map(|_| rng.random_range(-3.0..3.0))
                    .collect();
                let xs: Vec<f64> = (0..17).map(|_| rng.random_range(-4.0..4.0)).collect();
                let via_vm = compiled.eval_into(&xs, &c, &mut scratch).to_vec();
                let tree = skel.set_constants(&c).unwrap();
                let via_tree = eval_over(&tree, &xs);
                for (a, b) in via_vm.iter().zip(&via_tree) {
                    assert!(
                        a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()),
                        "vm {a} vs tree {b}"
                    );
                }
            }
        }
    }

    #[test]
    fn realizable_linear_target_fits_to_zero() {
        let est = skeleton_of(add(mul(ph(1), x()), ph(2)));
        let f = concrete(add(mul(num(2.0), x()), num(-3.0)));
        let cfg = quick_config(2);
        let (c, r) = fit_constants(&est, &f, (-5.0, 5.0), &cfg);
        // r is a sum over n_test points; the per-point error must be tiny
        let per_point = r / cfg.n_test as f64;
        assert!(per_point < 0.05, "per-point error {per_point}");
        assert!((c[0] - 2.0).abs() < 0.1, "slope {}", c[0]);
        assert!((c[1] + 3.0).abs() < 0.3, "intercept {}", c[1]);
    }

    #[test]
    fn line_cannot_track_a_sine() {
        let est = skeleton_of(add(ph(1), mul(ph(2), x())));
        let f = concrete(sin(mul(num(5.0), x())));
        let cfg = quick_config(3);
        let (_, r) = fit_constants(&est, &f, (-5.0, 5.0), &cfg);
        // amplitude-1 sine over [-10,10]: a line leaves O(0.5) error per point
        assert!(r / cfg.n_test as f64 > 0.2, "r per point {}", r / cfg.n_test as f64);
    }

    #[test]
    fn log_reparameterization_is_recognized_as_equivalent() {
        // c1' + c2'·log(c3'·x²) can express c1·log(x⁴) with c1'=0, c2'=2c1, c3'=1
        let est = skeleton_of(add(ph(1), mul(ph(2), log(mul(ph(3), powi(x(), 2))))));
        let f = concrete(mul(num(0.5), log(powi(x(), 4))));
        let mut cfg = quick_config(4);
        cfg.population = 300;
        let (c, r) = fit_constants(&est, &f, (-5.0, 5.0), &cfg);
        let per_point = r / cfg.n_test as f64;
        assert!(per_point < 0.05, "per-point error {per_point}, c = {c:?}");
    }

    #[test]
    fn placeholder_free_estimate_short_circuits() {
        let est = skeleton_of(x());
        let f = concrete(mul(num(1.0), x()));
        let cfg = quick_config(5);
        let (c, r) = fit_constants(&est, &f, (-5.0, 5.0), &cfg);
        assert!(c.is_empty());
        assert_eq!(r, 0.0);
    }

    #[test]
    fn correct_skeleton_beats_a_bare_constant_by_10x() {
        let target = skeleton_of(add(ph(1), mul(ph(2), sin(mul(ph(3), x())))));
        let est_const = skeleton_of(ph(1));
        let mut cfg = quick_config(6);
        cfg.repeats = 3;
        cfg.population = 300;
        cfg.max_generations = 300;
        let right = evaluate_skeleton(&target, &target, (-5.0, 5.0), &cfg);
        let wrong = evaluate_skeleton(&est_const, &target, (-5.0, 5.0), &cfg);
        assert!(
            wrong.mean >= 10.0 * right.mean.max(1e-9),
            "wrong {} vs right {}",
            wrong.mean,
            right.mean
        );
    }

    #[test]
    fn undefined_target_points_are_resampled() {
        // log is undefined on half the expanded domain; fitting must still work
        let est = skeleton_of(mul(ph(1), log(x())));
        let f = concrete(mul(num(2.0), log(x())));
        let cfg = quick_config(7);
        let (c, r) = fit_constants(&est, &f, (-2.0, 5.0), &cfg);
        let per_point = r / cfg.n_test as f64;
        assert!(per_point < 0.05, "per-point error {per_point}");
        assert!((c[0] - 2.0).abs() < 0.1);
    }

    #[test]
    fn result_is_invariant_to_placeholder_indexing_and_deterministic() {
        let a = skeleton_of(add(mul(ph(1), x()), ph(2)));
        let b = skeleton_of(add(mul(ph(7), x()), ph(3))); // renumbered on construction
        let target = skeleton_of(add(mul(ph(1), x()), ph(2)));
        let mut cfg = quick_config(8);
        cfg.repeats = 2;
        cfg.max_generations = 60;
        let ra = evaluate_skeleton(&a, &target, (-5.0, 5.0), &cfg);
        let rb = evaluate_skeleton(&b, &target, (-5.0, 5.0), &cfg);
        assert_eq!(ra.rs, rb.rs);
        assert_eq!(ra.constants, rb.constants);
        let again = evaluate_skeleton(&a, &target, (-5.0, 5.0), &cfg);
        assert_eq!(ra.rs, again.rs);
        assert_eq!(ra.mean, again.mean);
        assert_eq!(ra.normalized_rs, again.normalized_rs);
    }

    #[test]
    fn eval_result_shape_and_aggregates_are_consistent() {
        let target = skeleton_of(mul(ph(1), x()));
        let mut cfg = quick_config(9);
        cfg.repeats = 4;
        cfg.max_generations = 40;
        let res = evaluate_skeleton(&target, &target, (-5.0, 5.0), &cfg);
        assert_eq!(res.rs.len(), 4);
        assert_eq!(res.constants.len(), 4);
        assert_eq!(res.normalized_rs.len(), 4);
        assert!(res.rs.iter().all(|&r| r >= 0.0));
        let mean = res.rs.iter().sum::<f64>() / 4.0;
        assert!((res.mean - mean).abs() < 1e-12);
        assert!(res.std >= 0.0);
        assert!(res.normalized_mean <= res.mean.max(1e-12));
    }
}
