//! C ABI for the symskel library.
//!
//! Conventions:
//! - Handles (`SkSkeleton`, `SkModel`) are opaque; create them through the
//!   `sk_*` constructors and release them with the matching `sk_*_free`.
//! - Every fallible call returns an `i32` status (`SK_OK` = 0). On failure a
//!   thread-local message is set; read it with [`sk_last_error`]. Out
//!   parameters are written only on success.
//! - Strings returned through `char **` out parameters are NUL-terminated,
//!   owned by the caller, and must be released with [`sk_string_free`].
//! - All entry points catch panics and convert them to `SK_ERR_PANIC`, so no
//!   unwinding crosses the boundary.
//!
//! The matching C header is `include/symskel.h`, maintained by hand and
//! drift-checked by the tests at the bottom of this file.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use symskel::bench::mssp_on_curves;
use symskel::expr::{canonical_equal, parse_prefix, skeletonize, skeletonize_wrt, to_prefix, Skeleton};
use symskel::ga::{evaluate_skeleton, EvalConfig};
use symskel::mst::{load_model, MSTError, MSTModel};

// ---------------------------------------------------------------------------
// Status codes and the per-thread error message

pub const SK_OK: i32 = 0;
pub const SK_ERR_NULL_ARG: i32 = 1;
pub const SK_ERR_UTF8: i32 = 2;
pub const SK_ERR_PARSE: i32 = 3;
pub const SK_ERR_IO: i32 = 4;
pub const SK_ERR_EVAL: i32 = 5;
pub const SK_ERR_DECODE: i32 = 6;
pub const SK_ERR_BAD_ARG: i32 = 7;
pub const SK_ERR_PANIC: i32 = 8;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn fail(code: i32, msg: &str) -> i32 {
    // NUL bytes cannot survive in a C string; replace rather than error out.
    let clean = msg.replace('\0', "?");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(clean).unwrap());
    code
}

fn ok() -> i32 {
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::default());
    SK_OK
}

/// Message for the most recent failing call on this thread, or an empty
/// string after a success. The pointer is valid until the next `sk_*` call
/// on the same thread; copy it if you need to keep it.
#[no_mangle]
pub extern "C" fn sk_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// ABI revision; bump on any breaking change to this surface.
#[no_mangle]
pub extern "C" fn sk_abi_version() -> u32 {
    1
}

// ---------------------------------------------------------------------------
// Guard rails

fn guarded(body: impl FnOnce() -> i32) -> i32 {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(code) => code,
        Err(_) => fail(SK_ERR_PANIC, "internal panic caught at the C boundary"),
    }
}

/// # Safety
/// `ptr` must be NULL or a valid NUL-terminated string.
unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, i32> {
    if ptr.is_null() {
        return Err(fail(SK_ERR_NULL_ARG, "string argument is NULL"));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| fail(SK_ERR_UTF8, "string argument is not valid UTF-8"))
}

/// # Safety
/// `ptr` must be NULL or valid for `len` reads.
unsafe fn read_slice<'a>(ptr: *const f64, len: usize, name: &str) -> Result<&'a [f64], i32> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(fail(SK_ERR_NULL_ARG, &format!("{name} is NULL")));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

fn mst_error_code(e: &MSTError) -> i32 {
    match e {
        MSTError::DecodeInvalid { .. } => SK_ERR_DECODE,
        MSTError::EmptySet => SK_ERR_BAD_ARG,
        _ => SK_ERR_IO,
    }
}

// ---------------------------------------------------------------------------
// Skeleton handles

/// Opaque expression-family handle.
pub struct SkSkeleton {
    inner: Skeleton,
}

/// Opaque trained-model handle.
pub struct SkModel {
    inner: MSTModel,
}

unsafe fn write_skeleton(out: *mut *mut SkSkeleton, sk: Skeleton) -> i32 {
    if out.is_null() {
        return fail(SK_ERR_NULL_ARG, "out pointer is NULL");
    }
    *out = Box::into_raw(Box::new(SkSkeleton { inner: sk }));
    ok()
}

/// Parse a skeleton from prefix notation, e.g. `"add c mul c x"`.
///
/// # Safety
/// `src` must be a valid NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sk_skeleton_parse(src: *const c_char, out: *mut *mut SkSkeleton) -> i32 {
    guarded(|| {
        let text = match read_str(src) {
            Ok(t) => t,
            Err(code) => return code,
        };
        let tree = match parse_prefix(text) {
            Ok(t) => t,
            Err(e) => return fail(SK_ERR_PARSE, &e.to_string()),
        };
        match Skeleton::new(tree) {
            Ok(sk) => write_skeleton(out, sk),
            Err(e) => fail(SK_ERR_PARSE, &e.to_string()),
        }
    })
}

/// Parse a concrete expression and reduce it to its skeleton.
///
/// `variable` = 0 abstracts every constant while keeping all variables;
/// `variable` = v ≥ 1 additionally treats every variable except x_v as a
/// constant and renames x_v to x, yielding a univariate skeleton.
///
/// # Safety
/// `src` must be a valid NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sk_skeletonize(
    src: *const c_char,
    variable: u32,
    out: *mut *mut SkSkeleton,
) -> i32 {
    guarded(|| {
        let text = match read_str(src) {
            Ok(t) => t,
            Err(code) => return code,
        };
        let tree = match parse_prefix(text) {
            Ok(t) => t,
            Err(e) => return fail(SK_ERR_PARSE, &e.to_string()),
        };
        let sk = if variable == 0 {
            skeletonize(&tree)
        } else {
            skeletonize_wrt(&tree, variable)
        };
        write_skeleton(out, sk)
    })
}

/// Release a skeleton handle. NULL is a no-op.
///
/// # Safety
/// `s` must be NULL or a pointer obtained from this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sk_skeleton_free(s: *mut SkSkeleton) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Release a string returned by this library. NULL is a no-op.
///
/// # Safety
/// `s` must be NULL or a string obtained from this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sk_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

unsafe fn write_string(out: *mut *mut c_char, text: String) -> i32 {
    if out.is_null() {
        return fail(SK_ERR_NULL_ARG, "out pointer is NULL");
    }
    match CString::new(text) {
        Ok(c) => {
            *out = c.into_raw();
            ok()
        }
        Err(_) => fail(SK_ERR_UTF8, "interior NUL in produced string"),
    }
}

/// Prefix rendering of the skeleton as parsed/built.
///
/// # Safety
/// `s` must be a live skeleton handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sk_skeleton_prefix(s: *const SkSkeleton, out: *mut *mut c_char) -> i32 {
    guarded(|| {
        if s.is_null() {
            return fail(SK_ERR_NULL_ARG, "skeleton handle is NULL");
        }
        write_string(out, to_prefix((*s).inner.tree()))
    })
}

/// Canonical key: equal keys mean the same expression family.
///
/// # Safety
/// `s` must be a live skeleton handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sk_skeleton_canonical_key(
    s: *const SkSkeleton,
    out: *mut *mut c_char,
) -> i32 {
    guarded(|| {
        if s.is_null() {
            return fail(SK_ERR_NULL_ARG, "skeleton handle is NULL");
        }
        write_string(out, (*s).inner.canonical_key().to_string())
    })
}

/// Number of constant placeholders (the arity of `sk_skeleton_eval`).
///
/// # Safety
/// `s` must be a live skeleton handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sk_skeleton_n_constants(s: *const SkSkeleton, out: *mut u32) -> i32 {
    guarded(|| {
        if s.is_null() || out.is_null() {
            return fail(SK_ERR_NULL_ARG, "argument is NULL");
        }
        *out = (*s).inner.n_constants();
        ok()
    })
}

/// Writes 1 to `*out` when the two skeletons describe the same family
/// (canonical equality), 0 otherwise.
///
/// # Safety
/// `a` and `b` must be live skeleton handles; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sk_skeleton_equal(
    a: *const SkSkeleton,
    b: *const SkSkeleton,
    out: *mut i32,
) -> i32 {
    guarded(|| {
        if a.is_null() || b.is_null() || out.is_null() {
            return fail(SK_ERR_NULL_ARG, "argument is NULL");
        }
        *out = canonical_equal(&(*a).inner, &(*b).inner) as i32;
        ok()
    })
}

/// Substitute `constants` for the placeholders (in c_1..c_k order) and
/// evaluate at each of the `n_points` entries of `xs`, writing to `ys`.
/// Points where the expression is undefined produce NaN. The skeleton must
/// be univariate (variable x); multivariate skeletons fail with SK_ERR_EVAL.
///
/// # Safety
/// `s` must be a live skeleton handle; array pointers must match the stated
/// lengths; `ys` must be writable for `n_points` values.
#[no_mangle]
pub unsafe extern "C" fn sk_skeleton_eval(
    s: *const SkSkeleton,
    constants: *const f64,
    n_constants: usize,
    xs: *const f64,
    n_points: usize,
    ys: *mut f64,
) -> i32 {
    guarded(|| {
        if s.is_null() {
            return fail(SK_ERR_NULL_ARG, "skeleton handle is NULL");
        }
        let cs = match read_slice(constants, n_constants, "constants") {
            Ok(v) => v,
            Err(code) => return code,
        };
        let px = match read_slice(xs, n_points, "xs") {
            Ok(v) => v,
            Err(code) => return code,
        };
        if n_points > 0 && ys.is_null() {
            return fail(SK_ERR_NULL_ARG, "ys is NULL");
        }
        let concrete = match (*s).inner.set_constants(cs) {
            Ok(t) => t,
            Err(e) => return fail(SK_ERR_BAD_ARG, &e.to_string()),
        };
        let out = std::slice::from_raw_parts_mut(ys, n_points);
        for (y, &x) in out.iter_mut().zip(px) {
            match concrete.evaluate(&[x]) {
                Ok(v) => *y = v,
                Err(e) => return fail(SK_ERR_EVAL, &e.to_string()),
            }
        }
        ok()
    })
}

// ---------------------------------------------------------------------------
// Skeleton scoring

/// Mirror of the evaluator configuration; `sk_eval_params_default` fills in
/// the library defaults. All fields are 8 bytes, so the struct packs without
/// padding on every supported platform.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SkEvalParams {
    pub n_test: u64,
    pub repeats: u64,
    pub population: u64,
    pub tournament: u64,
    pub stop_window: u64,
    pub max_generations: u64,
    pub seed: u64,
    pub expansion: f64,
    pub crossover_rate: f64,
    pub mutation_sigma: f64,
    pub mutation_rate: f64,
    pub stop_delta: f64,
    pub init_lo: f64,
    pub init_hi: f64,
}

/// Aggregate fit error of an estimated skeleton against a target family.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkEvalSummary {
    pub mean: f64,
    pub std_dev: f64,
    pub normalized_mean: f64,
}

fn params_to_config(p: &SkEvalParams) -> Result<EvalConfig, String> {
    if p.n_test == 0 || p.repeats == 0 || p.population == 0 || p.tournament == 0 {
        return Err("counts must be positive".into());
    }
    if p.max_generations == 0 || p.stop_window == 0 {
        return Err("generation limits must be positive".into());
    }
    if !(p.expansion >= 1.0) {
        return Err("expansion must be >= 1".into());
    }
    if !(p.init_lo < p.init_hi) {
        return Err("init range must satisfy lo < hi".into());
    }
    Ok(EvalConfig {
        n_test: p.n_test as usize,
        repeats: p.repeats as usize,
        expansion: p.expansion,
        population: p.population as usize,
        tournament: p.tournament as usize,
        crossover_rate: p.crossover_rate,
        mutation_sigma: p.mutation_sigma,
        mutation_rate: p.mutation_rate,
        stop_window: p.stop_window as usize,
        stop_delta: p.stop_delta,
        max_generations: p.max_generations as usize,
        init_range: (p.init_lo, p.init_hi),
        rng_seed: p.seed,
    })
}

fn config_to_params(c: &EvalConfig) -> SkEvalParams {
    SkEvalParams {
        n_test: c.n_test as u64,
        repeats: c.repeats as u64,
        population: c.population as u64,
        tournament: c.tournament as u64,
        stop_window: c.stop_window as u64,
        max_generations: c.max_generations as u64,
        seed: c.rng_seed,
        expansion: c.expansion,
        crossover_rate: c.crossover_rate,
        mutation_sigma: c.mutation_sigma,
        mutation_rate: c.mutation_rate,
        stop_delta: c.stop_delta,
        init_lo: c.init_range.0,
        init_hi: c.init_range.1,
    }
}

/// Fill `*out` with the library's default evaluator parameters.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sk_eval_params_default(out: *mut SkEvalParams) -> i32 {
    guarded(|| {
        if out.is_null() {
            return fail(SK_ERR_NULL_ARG, "out pointer is NULL");
        }
        *out = config_to_params(&EvalConfig::default());
        ok()
    })
}

/// Score `est` against the family `target` on the domain [lo, hi]: for each
/// repeat the target's placeholders are drawn at random, `est`'s constants
/// are fitted, and the absolute error over a fresh test set is accumulated.
/// Deterministic in `params->seed`. Pass `params` = NULL for the defaults
/// (which take minutes; shrink n_test/repeats/population for quick checks).
///
/// # Safety
/// `est` and `target` must be live skeleton handles; `params` NULL or valid;
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sk_evaluate(
    est: *const SkSkeleton,
    target: *const SkSkeleton,
    lo: f64,
    hi: f64,
    params: *const SkEvalParams,
    out: *mut SkEvalSummary,
) -> i32 {
    guarded(|| {
        if est.is_null() || target.is_null() || out.is_null() {
            return fail(SK_ERR_NULL_ARG, "argument is NULL");
        }
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return fail(SK_ERR_BAD_ARG, "domain must be finite with lo < hi");
        }
        let config = if params.is_null() {
            EvalConfig::default()
        } else {
            match params_to_config(&*params) {
                Ok(c) => c,
                Err(msg) => return fail(SK_ERR_BAD_ARG, &msg),
            }
        };
        let result = evaluate_skeleton(&(*est).inner, &(*target).inner, (lo, hi), &config);
        *out = SkEvalSummary {
            mean: result.mean,
            std_dev: result.std,
            normalized_mean: result.normalized_mean,
        };
        ok()
    })
}

// ---------------------------------------------------------------------------
// Model handles

/// Load a model checkpoint written by `symskel train-mst` (or `save_model`).
///
/// # Safety
/// `path` must be a valid NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sk_model_load(path: *const c_char, out: *mut *mut SkModel) -> i32 {
    guarded(|| {
        let text = match read_str(path) {
            Ok(t) => t,
            Err(code) => return code,
        };
        let model = match load_model(Path::new(text)) {
            Ok(m) => m,
            Err(e) => return fail(mst_error_code(&e), &e.to_string()),
        };
        if out.is_null() {
            return fail(SK_ERR_NULL_ARG, "out pointer is NULL");
        }
        *out = Box::into_raw(Box::new(SkModel { inner: model }));
        ok()
    })
}

/// Release a model handle. NULL is a no-op.
///
/// # Safety
/// `m` must be NULL or a pointer obtained from this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sk_model_free(m: *mut SkModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Predict the shared skeleton of `n_sets` curves that are believed to be
/// instances of one family. `xs` and `ys` hold the curves back to back:
/// curve s occupies indices [s*n_points, (s+1)*n_points). Each curve needs
/// at least two points. Fails with SK_ERR_DECODE when the model emits an
/// invalid sequence (typical for undertrained models).
///
/// # Safety
/// `m` must be a live model handle; `xs`/`ys` valid for `n_sets * n_points`
/// reads; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sk_model_predict_curves(
    m: *const SkModel,
    xs: *const f64,
    ys: *const f64,
    n_sets: usize,
    n_points: usize,
    out: *mut *mut SkSkeleton,
) -> i32 {
    guarded(|| {
        if m.is_null() {
            return fail(SK_ERR_NULL_ARG, "model handle is NULL");
        }
        if n_sets == 0 || n_points < 2 {
            return fail(SK_ERR_BAD_ARG, "need n_sets >= 1 and n_points >= 2");
        }
        let total = match n_sets.checked_mul(n_points) {
            Some(t) => t,
            None => return fail(SK_ERR_BAD_ARG, "n_sets * n_points overflows"),
        };
        let all_x = match read_slice(xs, total, "xs") {
            Ok(v) => v,
            Err(code) => return code,
        };
        let all_y = match read_slice(ys, total, "ys") {
            Ok(v) => v,
            Err(code) => return code,
        };
        let curves: Vec<(Vec<f64>, Vec<f64>)> = (0..n_sets)
            .map(|s| {
                let span = s * n_points..(s + 1) * n_points;
                (all_x[span.clone()].to_vec(), all_y[span].to_vec())
            })
            .collect();
        match mssp_on_curves(&curves, &(*m).inner) {
            Ok(sk) => write_skeleton(out, sk),
            Err(e) => fail(mst_error_code(&e), &e.to_string()),
        }
    })
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;
    use std::mem::size_of;
    use std::ptr;

    fn c(s: &str) -> CString {
        CString::new(s).unwrap()
    }

    fn parse(src: &str) -> *mut SkSkeleton {
        let mut h: *mut SkSkeleton = ptr::null_mut();
        let code = unsafe { sk_skeleton_parse(c(src).as_ptr(), &mut h) };
        assert_eq!(code, SK_OK, "parse {src}");
        assert!(!h.is_null());
        h
    }

    fn last_error_string() -> String {
        unsafe { CStr::from_ptr(sk_last_error()).to_str().unwrap().to_string() }
    }

    #[test]
    fn abi_version_and_struct_layout() {
        assert_eq!(sk_abi_version(), 1);
        // The header hard-codes these layouts; keep them in lock step.
        assert_eq!(size_of::<SkEvalParams>(), 14 * 8);
        assert_eq!(size_of::<SkEvalSummary>(), 3 * 8);
    }

    #[test]
    fn parse_inspect_free_round_trip() {
        let h = parse("add c mul c x");
        unsafe {
            let mut n = 0u32;
            assert_eq!(sk_skeleton_n_constants(h, &mut n), SK_OK);
            assert_eq!(n, 2);

            let mut text: *mut c_char = ptr::null_mut();
            assert_eq!(sk_skeleton_prefix(h, &mut text), SK_OK);
            assert_eq!(CStr::from_ptr(text).to_str().unwrap(), "add c mul c x");
            sk_string_free(text);

            let mut key: *mut c_char = ptr::null_mut();
            assert_eq!(sk_skeleton_canonical_key(h, &mut key), SK_OK);
            assert!(!CStr::from_ptr(key).to_str().unwrap().is_empty());
            sk_string_free(key);

            sk_skeleton_free(h);
        }
    }

    #[test]
    fn canonical_equality_across_operand_order() {
        let a = parse("add c mul c x");
        let b = parse("add mul c x c");
        let d = parse("add c mul c sin x");
        unsafe {
            let mut eq = -1;
            assert_eq!(sk_skeleton_equal(a, b, &mut eq), SK_OK);
            assert_eq!(eq, 1);
            assert_eq!(sk_skeleton_equal(a, d, &mut eq), SK_OK);
            assert_eq!(eq, 0);
            sk_skeleton_free(a);
            sk_skeleton_free(b);
            sk_skeleton_free(d);
        }
    }

    #[test]
    fn skeletonize_collapses_constants_and_other_variables() {
        // 3x^2 + exp(2x) - 4 reduces to c1 x^2 + exp(c2 x) + c3.
        let mut h: *mut SkSkeleton = ptr::null_mut();
        let src = c("add add mul 3 pow x 2 exp mul 2 x -4");
        assert_eq!(unsafe { sk_skeletonize(src.as_ptr(), 0, &mut h) }, SK_OK);
        let want = parse("add add mul c pow x 2 exp mul c x c");
        unsafe {
            let mut eq = 0;
            assert_eq!(sk_skeleton_equal(h, want, &mut eq), SK_OK);
            assert_eq!(eq, 1);
            sk_skeleton_free(h);
            sk_skeleton_free(want);
        }

        // With respect to x1, the x2/x3 factor of
        // 3 x1^2 + sqrt(x2 + 1) / exp(2 x3) is a constant.
        let mut h1: *mut SkSkeleton = ptr::null_mut();
        let src = c("add mul 3 pow x1 2 div sqrt add x2 1 exp mul 2 x3");
        assert_eq!(unsafe { sk_skeletonize(src.as_ptr(), 1, &mut h1) }, SK_OK);
        let want = parse("add mul c pow x 2 c");
        unsafe {
            let mut eq = 0;
            assert_eq!(sk_skeleton_equal(h1, want, &mut eq), SK_OK);
            assert_eq!(eq, 1);
            sk_skeleton_free(h1);
            sk_skeleton_free(want);
        }
    }

    #[test]
    fn eval_substitutes_constants_pointwise() {
        let h = parse("add c mul c x");
        let cs = [2.0, 3.0];
        let xs = [0.0, 1.0, 2.0];
        let mut ys = [0.0f64; 3];
        let code = unsafe {
            sk_skeleton_eval(h, cs.as_ptr(), cs.len(), xs.as_ptr(), xs.len(), ys.as_mut_ptr())
        };
        assert_eq!(code, SK_OK);
        assert_eq!(ys, [2.0, 5.0, 8.0]);

        // log goes NaN (not an error) left of its domain.
        let lg = parse("log x");
        let mut y1 = [0.0f64; 2];
        let code = unsafe {
            sk_skeleton_eval(lg, ptr::null(), 0, [-1.0, 1.0].as_ptr(), 2, y1.as_mut_ptr())
        };
        assert_eq!(code, SK_OK);
        assert!(y1[0].is_nan() && y1[1] == 0.0);

        // Wrong constant count is a bad argument.
        let code = unsafe {
            sk_skeleton_eval(h, cs.as_ptr(), 1, xs.as_ptr(), xs.len(), ys.as_mut_ptr())
        };
        assert_eq!(code, SK_ERR_BAD_ARG);
        assert!(!last_error_string().is_empty());
        unsafe {
            sk_skeleton_free(h);
            sk_skeleton_free(lg);
        }
    }

    #[test]
    fn error_paths_report_codes_and_messages() {
        let mut h: *mut SkSkeleton = ptr::null_mut();
        unsafe {
            assert_eq!(sk_skeleton_parse(ptr::null(), &mut h), SK_ERR_NULL_ARG);
            assert_eq!(sk_skeleton_parse(c("mul c").as_ptr(), &mut h), SK_ERR_PARSE);
            assert!(last_error_string().contains("mul") || !last_error_string().is_empty());

            let bad = [0x66u8, 0xfe, 0x00];
            assert_eq!(
                sk_skeleton_parse(bad.as_ptr() as *const c_char, &mut h),
                SK_ERR_UTF8
            );

            let mut m: *mut SkModel = ptr::null_mut();
            assert_eq!(
                sk_model_load(c("/nonexistent/model.bin").as_ptr(), &mut m),
                SK_ERR_IO
            );

            // A success clears the message.
            let ok_h = parse("mul c x");
            assert_eq!(last_error_string(), "");
            sk_skeleton_free(ok_h);
        }
    }

    #[test]
    fn evaluate_is_deterministic_and_near_zero_on_equality() {
        let est = parse("add c mul c x");
        let target = parse("add c mul c x");
        let mut p = SkEvalParams {
            n_test: 0,
            repeats: 0,
            population: 0,
            tournament: 0,
            stop_window: 0,
            max_generations: 0,
            seed: 0,
            expansion: 0.0,
            crossover_rate: 0.0,
            mutation_sigma: 0.0,
            mutation_rate: 0.0,
            stop_delta: 0.0,
            init_lo: 0.0,
            init_hi: 0.0,
        };
        unsafe {
            assert_eq!(sk_eval_params_default(&mut p), SK_OK);
            assert_eq!(p.n_test, 3000);
            assert_eq!(p.population, 500);

            // Shrink for test speed; the family is exactly realizable, so
            // even a small budget fits it to ~zero normalized error.
            p.n_test = 200;
            p.repeats = 2;
            p.population = 100;
            p.max_generations = 40;
            p.seed = 9;

            let mut s1 = SkEvalSummary { mean: -1.0, std_dev: -1.0, normalized_mean: -1.0 };
            let mut s2 = s1;
            assert_eq!(sk_evaluate(est, target, -5.0, 5.0, &p, &mut s1), SK_OK);
            assert_eq!(sk_evaluate(est, target, -5.0, 5.0, &p, &mut s2), SK_OK);
            assert_eq!(s1, s2);
            assert!(s1.normalized_mean < 1e-2, "normalized {}", s1.normalized_mean);
            assert!(s1.mean.is_finite() && s1.std_dev >= 0.0);

            // Domain and parameter validation.
            assert_eq!(sk_evaluate(est, target, 5.0, -5.0, &p, &mut s1), SK_ERR_BAD_ARG);
            p.population = 0;
            assert_eq!(sk_evaluate(est, target, -5.0, 5.0, &p, &mut s1), SK_ERR_BAD_ARG);

            sk_skeleton_free(est);
            sk_skeleton_free(target);
        }
    }

    #[test]
    fn model_round_trip_through_files_and_curves() {
        use symskel::mst::{save_model, MSTConfig, MSTModel};
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tiny.skmt");
        let model = MSTModel::new(MSTConfig {
            isab_blocks: 1,
            decoder_blocks: 1,
            d: 8,
            heads: 2,
            inducing: 2,
            k_seed: 2,
            max_len: 24,
            learning_rate: 0.05,
            grad_clip: 1.0,
            rng_seed: 7,
        });
        save_model(&model, &path).unwrap();

        let cpath = c(path.to_str().unwrap());
        let mut m: *mut SkModel = ptr::null_mut();
        unsafe {
            assert_eq!(sk_model_load(cpath.as_ptr(), &mut m), SK_OK);

            // Two curves, eight points each, packed back to back.
            let n = 8usize;
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for scale in [1.0, 2.0] {
                for i in 0..n {
                    let x = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
                    xs.push(x);
                    ys.push(scale * x);
                }
            }
            let mut sk: *mut SkSkeleton = ptr::null_mut();
            let code = sk_model_predict_curves(m, xs.as_ptr(), ys.as_ptr(), 2, n, &mut sk);
            // Untrained weights either decode to some valid skeleton or
            // produce a diagnosable invalid sequence; both are acceptable,
            // crashes are not.
            assert!(code == SK_OK || code == SK_ERR_DECODE, "code {code}");
            if code == SK_OK {
                sk_skeleton_free(sk);
            } else {
                assert!(!last_error_string().is_empty());
            }

            // Shape validation fires before the model runs.
            let code = sk_model_predict_curves(m, xs.as_ptr(), ys.as_ptr(), 2, 1, &mut sk);
            assert_eq!(code, SK_ERR_BAD_ARG);

            sk_model_free(m);
        }
    }

    #[test]
    fn header_declares_every_exported_symbol() {
        let header = include_str!("../include/symskel.h");
        for name in [
            "sk_abi_version",
            "sk_last_error",
            "sk_string_free",
            "sk_skeleton_parse",
            "sk_skeletonize",
            "sk_skeleton_free",
            "sk_skeleton_prefix",
            "sk_skeleton_canonical_key",
            "sk_skeleton_n_constants",
            "sk_skeleton_equal",
            "sk_skeleton_eval",
            "sk_eval_params_default",
            "sk_evaluate",
            "sk_model_load",
            "sk_model_free",
            "sk_model_predict_curves",
        ] {
            assert!(header.contains(name), "header is missing {name}");
        }
        for constant in [
            "SK_OK",
            "SK_ERR_NULL_ARG",
            "SK_ERR_UTF8",
            "SK_ERR_PARSE",
            "SK_ERR_IO",
            "SK_ERR_EVAL",
            "SK_ERR_DECODE",
            "SK_ERR_BAD_ARG",
            "SK_ERR_PANIC",
        ] {
            assert!(header.contains(constant), "header is missing {constant}");
        }
    }
}
