//! Symmetric curvature functions: construction, evaluation, analytic
//! gradients, inverse-concave duals and randomized certification.
//!
//! A speed function `f` acts on tuples of principal curvatures in the
//! positive cone. Every registry function is symmetric, homogeneous of
//! degree one, normalized to `f(1,...,1) = 1` and strictly increasing in
//! each argument. The registry grammar is
//!
//! ```text
//! arithmetic-mean | power-mean(<p>) | ek-root(<k>) | gauss-root
//!     | blend(<spec>,<spec>,<s>)
//! ```
//!
//! with `arithmetic-mean = (sum li)/n`, `power-mean(p) = ((sum li^p)/n)^(1/p)`
//! for `p > 0`, `ek-root(k)` the k-th root of the normalized elementary
//! symmetric polynomial `sigma_k / C(n,k)`, `gauss-root = (prod li)^(1/n)`
//! and `blend(F1,F2,s) = F1^s * F2^(1-s)` for `s` in `[0,1]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;
use thiserror::Error;

/// Evaluation dimension cap; enough for any desk-scale hypersurface and
/// small enough to keep gradient scratch buffers on the stack.
pub const MAX_DIMENSION: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurvatureError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("domain error: {0}")]
    Domain(String),
}

/// An ordered tuple of strictly positive principal curvatures.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenTuple(Vec<f64>);

impl EigenTuple {
    pub fn new(values: Vec<f64>) -> Result<EigenTuple, CurvatureError> {
        if values.is_empty() {
            return Err(CurvatureError::Domain("eigenvalue tuple is empty".into()));
        }
        if values.len() > MAX_DIMENSION {
            return Err(CurvatureError::Domain(format!(
                "tuple length {} exceeds supported dimension {}",
                values.len(),
                MAX_DIMENSION
            )));
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || v <= 0.0 {
                return Err(CurvatureError::Domain(format!(
                    "entry {i} = {v} is outside the positive cone"
                )));
            }
        }
        Ok(EigenTuple(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// `x^e` with fast paths for the exponents that dominate flow runs.
#[inline]
pub(crate) fn powfast(x: f64, e: f64) -> f64 {
    if e == 1.0 {
        x
    } else if e == 2.0 {
        x * x
    } else if e == 0.5 {
        x.sqrt()
    } else if e == 0.0 {
        1.0
    } else if e == 3.0 {
        x * x * x
    } else if e == -1.0 {
        1.0 / x
    } else if e == -2.0 {
        1.0 / (x * x)
    } else if e == 1.5 {
        x * x.sqrt()
    } else if e == -0.5 {
        1.0 / x.sqrt()
    } else if e == -1.5 {
        1.0 / (x * x.sqrt())
    } else if e == -2.5 {
        1.0 / (x * x * x.sqrt())
    } else {
        x.powf(e)
    }
}

/// Exact binomial coefficients via Pascal's triangle (fits f64 exactly for
/// n <= MAX_DIMENSION).
fn binomial(n: usize, k: usize) -> f64 {
    let mut row = [0u64; MAX_DIMENSION + 1];
    row[0] = 1;
    for i in 1..=n {
        for j in (1..=i.min(k)).rev() {
            row[j] += row[j - 1];
        }
    }
    row[k] as f64
}

/// Elementary symmetric polynomial `sigma_k` of the entries.
fn elem_sym(lam: &[f64], k: usize) -> f64 {
    let mut e = [0.0f64; MAX_DIMENSION + 1];
    e[0] = 1.0;
    for (i, &x) in lam.iter().enumerate() {
        let top = k.min(i + 1);
        for j in (1..=top).rev() {
            e[j] += x * e[j - 1];
        }
    }
    e[k]
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    ArithmeticMean,
    PowerMean(f64),
    EkRoot(usize),
    GaussRoot,
    Blend(Box<Node>, Box<Node>, f64),
    Dual(Box<Node>),
    /// Test-only hook: `c * f`. Not reachable from the grammar; used to
    /// exercise certification failures on unnormalized functions.
    Scaled(Box<Node>, f64),
}

impl Node {
    fn eval(&self, lam: &[f64]) -> f64 {
        let n = lam.len() as f64;
        match self {
            Node::ArithmeticMean => lam.iter().sum::<f64>() / n,
            Node::PowerMean(p) => {
                let s: f64 = lam.iter().map(|&x| powfast(x, *p)).sum();
                powfast(s / n, 1.0 / p)
            }
            Node::EkRoot(k) => {
                let e = elem_sym(lam, *k) / binomial(lam.len(), *k);
                powfast(e, 1.0 / *k as f64)
            }
            Node::GaussRoot => {
                let p: f64 = lam.iter().product();
                powfast(p, 1.0 / n)
            }
            Node::Blend(a, b, s) => powfast(a.eval(lam), *s) * powfast(b.eval(lam), 1.0 - s),
            Node::Dual(inner) => {
                let mut buf = [0.0f64; MAX_DIMENSION];
                for (o, &x) in buf.iter_mut().zip(lam) {
                    *o = 1.0 / x;
                }
                1.0 / inner.eval(&buf[..lam.len()])
            }
            Node::Scaled(inner, c) => c * inner.eval(lam),
        }
    }

    /// Value and gradient in one pass; `grad` must have the tuple's length.
    fn eval_grad(&self, lam: &[f64], grad: &mut [f64]) -> f64 {
        let m = lam.len();
        let n = m as f64;
        match self {
            Node::ArithmeticMean => {
                grad.fill(1.0 / n);
                lam.iter().sum::<f64>() / n
            }
            Node::PowerMean(p) => {
                let s: f64 = lam.iter().map(|&x| powfast(x, *p)).sum();
                let f = powfast(s / n, 1.0 / p);
                let scale = powfast(f, 1.0 - p) / n;
                for (g, &x) in grad.iter_mut().zip(lam) {
                    *g = scale * powfast(x, p - 1.0);
                }
                f
            }
            Node::EkRoot(k) => {
                let c = binomial(m, *k);
                let e = elem_sym(lam, *k) / c;
                let f = powfast(e, 1.0 / *k as f64);
                // d sigma_k / d li = sigma_{k-1} of the tuple without entry i
                let mut reduced = [0.0f64; MAX_DIMENSION];
                let scale = powfast(f, 1.0 - *k as f64) / (*k as f64 * c);
                for i in 0..m {
                    let mut len = 0;
                    for (j, &x) in lam.iter().enumerate() {
                        if j != i {
                            reduced[len] = x;
                            len += 1;
                        }
                    }
                    grad[i] = scale * elem_sym(&reduced[..len], *k - 1);
                }
                f
            }
            Node::GaussRoot => {
                let p: f64 = lam.iter().product();
                let f = powfast(p, 1.0 / n);
                for (g, &x) in grad.iter_mut().zip(lam) {
                    *g = f / (n * x);
                }
                f
            }
            Node::Blend(a, b, s) => {
                let fa = a.eval_grad(lam, grad);
                let mut gb = [0.0f64; MAX_DIMENSION];
                let fb = b.eval_grad(lam, &mut gb[..m]);
                let f = powfast(fa, *s) * powfast(fb, 1.0 - s);
                for i in 0..m {
                    grad[i] = f * (s * grad[i] / fa + (1.0 - s) * gb[i] / fb);
                }
                f
            }
            Node::Dual(inner) => {
                let mut mu = [0.0f64; MAX_DIMENSION];
                for (o, &x) in mu.iter_mut().zip(lam) {
                    *o = 1.0 / x;
                }
                let fin = inner.eval_grad(&mu[..m], grad);
                let f = 1.0 / fin;
                let f2 = f * f;
                for i in 0..m {
                    grad[i] = f2 * grad[i] * mu[i] * mu[i];
                }
                f
            }
            Node::Scaled(inner, c) => {
                let f = inner.eval_grad(lam, grad);
                for g in grad.iter_mut() {
                    *g *= c;
                }
                c * f
            }
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::ArithmeticMean => write!(f, "arithmetic-mean"),
            Node::PowerMean(p) => write!(f, "power-mean({p})"),
            Node::EkRoot(k) => write!(f, "ek-root({k})"),
            Node::GaussRoot => write!(f, "gauss-root"),
            Node::Blend(a, b, s) => write!(f, "blend({a},{b},{s})"),
            Node::Dual(inner) => write!(f, "dual({inner})"),
            Node::Scaled(inner, c) => write!(f, "scaled({inner},{c})"),
        }
    }
}

/// A certified symmetric speed function on the positive cone.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureFunction {
    node: Node,
    n: usize,
}

impl fmt::Display for CurvatureFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.node)
    }
}

impl CurvatureFunction {
    /// Parse a registry expression for dimension `n`.
    pub fn parse(spec: &str, n: usize) -> Result<CurvatureFunction, CurvatureError> {
        if n < 1 {
            return Err(CurvatureError::Domain("dimension must be at least 1".into()));
        }
        if n > MAX_DIMENSION {
            return Err(CurvatureError::Domain(format!(
                "dimension {n} exceeds supported maximum {MAX_DIMENSION}"
            )));
        }
        let cleaned: String = spec.chars().filter(|c| !c.is_whitespace()).collect();
        let mut parser = Parser {
            src: cleaned.as_bytes(),
            pos: 0,
            n,
        };
        let node = parser.parse_expr()?;
        if parser.pos != parser.src.len() {
            return Err(CurvatureError::Parse(format!(
                "trailing input at byte {}",
                parser.pos
            )));
        }
        Ok(CurvatureFunction { node, n })
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    /// Whether this instance is a dual `f*`.
    pub fn is_dual(&self) -> bool {
        matches!(self.node, Node::Dual(_))
    }

    /// Evaluate at a positive tuple. The value is finite and positive.
    pub fn eval(&self, lam: &EigenTuple) -> f64 {
        assert_eq!(lam.len(), self.n, "tuple length must equal the dimension");
        self.node.eval(lam.values())
    }

    /// Analytic gradient; entries are strictly positive on the cone and
    /// satisfy the degree-one Euler relation `sum li * df/dli = f`.
    pub fn grad(&self, lam: &EigenTuple) -> Vec<f64> {
        assert_eq!(lam.len(), self.n, "tuple length must equal the dimension");
        let mut out = vec![0.0; self.n];
        self.node.eval_grad(lam.values(), &mut out);
        out
    }

    /// The dual `f*(l) = 1 / f(1/l1, ..., 1/ln)`. Applying `dual` twice
    /// agrees with the original pointwise.
    pub fn dual(&self) -> CurvatureFunction {
        CurvatureFunction {
            node: Node::Dual(Box::new(self.node.clone())),
            n: self.n,
        }
    }

    #[inline]
    pub(crate) fn eval_slice(&self, lam: &[f64]) -> f64 {
        debug_assert_eq!(lam.len(), self.n);
        self.node.eval(lam)
    }

    #[inline]
    pub(crate) fn grad_slice(&self, lam: &[f64], out: &mut [f64]) -> f64 {
        debug_assert_eq!(lam.len(), self.n);
        self.node.eval_grad(lam, out)
    }

    /// Rescale by a constant. Breaks normalization on purpose; exists so
    /// certification failure paths can be exercised.
    #[doc(hidden)]
    pub fn scaled(&self, c: f64) -> CurvatureFunction {
        CurvatureFunction {
            node: Node::Scaled(Box::new(self.node.clone()), c),
            n: self.n,
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    n: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), CurvatureError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(CurvatureError::Parse(format!(
                "expected '{}' at byte {}",
                c as char, self.pos
            )))
        }
    }

    fn parse_name(&mut self) -> Result<String, CurvatureError> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_alphabetic() || c == b'-' {
                self.pos += 1;
            } else {
                break;
            }
        }
        if self.pos == start {
            return Err(CurvatureError::Parse(format!(
                "expected a function name at byte {start}"
            )));
        }
        Ok(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn parse_number(&mut self) -> Result<f64, CurvatureError> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() || c == b'.' {
                self.pos += 1;
            } else {
                break;
            }
        }
        if let Some(b'e' | b'E') = self.peek() {
            self.pos += 1;
            if let Some(b'+' | b'-') = self.peek() {
                self.pos += 1;
            }
            while let Some(c) = self.peek() {
                if c.is_ascii_digit() {
                    self.pos += 1;
                } else {
                    break;
                }
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos])
            .map_err(|_| CurvatureError::Parse("invalid number".into()))?;
        text.parse::<f64>()
            .map_err(|_| CurvatureError::Parse(format!("invalid number '{text}' at byte {start}")))
    }

    fn parse_expr(&mut self) -> Result<Node, CurvatureError> {
        let name = self.parse_name()?;
        match name.as_str() {
            "arithmetic-mean" => Ok(Node::ArithmeticMean),
            "gauss-root" => Ok(Node::GaussRoot),
            "power-mean" => {
                self.expect(b'(')?;
                let p = self.parse_number()?;
                self.expect(b')')?;
                if !p.is_finite() || p <= 0.0 {
                    return Err(CurvatureError::Domain(format!(
                        "power-mean exponent must be positive, got {p}"
                    )));
                }
                Ok(Node::PowerMean(p))
            }
            "ek-root" => {
                self.expect(b'(')?;
                let k = self.parse_number()?;
                self.expect(b')')?;
                if !k.is_finite() || k.fract() != 0.0 || k < 1.0 {
                    return Err(CurvatureError::Parse(format!(
                        "ek-root index must be a positive integer, got {k}"
                    )));
                }
                let k = k as usize;
                if k > self.n {
                    return Err(CurvatureError::Domain(format!(
                        "ek-root index {k} exceeds dimension {}",
                        self.n
                    )));
                }
                Ok(Node::EkRoot(k))
            }
            "blend" => {
                self.expect(b'(')?;
                let a = self.parse_expr()?;
                self.expect(b',')?;
                let b = self.parse_expr()?;
                self.expect(b',')?;
                let s = self.parse_number()?;
                self.expect(b')')?;
                if !(0.0..=1.0).contains(&s) {
                    return Err(CurvatureError::Domain(format!(
                        "blend weight must lie in [0,1], got {s}"
                    )));
                }
                Ok(Node::Blend(Box::new(a), Box::new(b), s))
            }
            other => Err(CurvatureError::Parse(format!(
                "unknown function '{other}'"
            ))),
        }
    }
}

/// Seeded sampling plan for randomized certification.
#[derive(Debug, Clone)]
pub struct SamplePlan {
    pub count: usize,
    /// Log-uniform sampling range per entry.
    pub log_range: (f64, f64),
    pub seed: u64,
}

impl Default for SamplePlan {
    fn default() -> Self {
        SamplePlan {
            count: 1000,
            log_range: (1e-2, 1e2),
            seed: 0x5eed_cafe,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub passed: bool,
    pub worst_residual: f64,
    pub witness: Option<EigenTuple>,
}

impl CheckResult {
    fn pass(worst: f64, witness: Option<EigenTuple>) -> CheckResult {
        CheckResult {
            passed: true,
            worst_residual: worst,
            witness,
        }
    }

    fn fail(worst: f64, witness: EigenTuple) -> CheckResult {
        CheckResult {
            passed: false,
            worst_residual: worst,
            witness: Some(witness),
        }
    }
}

/// Per-condition verdicts with worst-case residuals and witnesses.
#[derive(Debug, Clone)]
pub struct ConditionReport {
    pub normalization: CheckResult,
    pub homogeneity: CheckResult,
    pub monotonicity: CheckResult,
    pub symmetry: CheckResult,
    pub inverse_concavity: CheckResult,
    pub boundary_vanishing: CheckResult,
}

impl ConditionReport {
    pub fn all_pass(&self) -> bool {
        self.normalization.passed
            && self.homogeneity.passed
            && self.monotonicity.passed
            && self.symmetry.passed
            && self.inverse_concavity.passed
            && self.boundary_vanishing.passed
    }

    fn rows(&self) -> [(&'static str, &CheckResult); 6] {
        [
            ("normalization", &self.normalization),
            ("homogeneity", &self.homogeneity),
            ("monotonicity", &self.monotonicity),
            ("symmetry", &self.symmetry),
            ("inverse-concavity", &self.inverse_concavity),
            ("boundary-vanishing", &self.boundary_vanishing),
        ]
    }
}

impl fmt::Display for ConditionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, check) in self.rows() {
            let verdict = if check.passed { "PASS" } else { "FAIL" };
            write!(
                f,
                "{name}: {verdict} (worst residual {:.3e}",
                check.worst_residual
            )?;
            if let Some(w) = &check.witness {
                if !check.passed {
                    write!(f, ", witness {:?}", w.values())?;
                }
            }
            writeln!(f, ")")?;
        }
        Ok(())
    }
}

const NORMALIZATION_TOL: f64 = 1e-12;
const HOMOGENEITY_TOL: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-14;
const MIDPOINT_SLACK: f64 = 1e-10;
const BOUNDARY_DROP_TOL: f64 = 1e-3;
/// Minimal log-log decay order certifying power-law vanishing; covers
/// duals like the Gauss root whose boundary decay is only `eps^(1/n)`.
const BOUNDARY_ORDER_TOL: f64 = 0.1;

fn sample_tuple(rng: &mut ChaCha8Rng, n: usize, range: (f64, f64)) -> Vec<f64> {
    let (lo, hi) = (range.0.ln(), range.1.ln());
    (0..n).map(|_| rng.gen_range(lo..hi).exp()).collect()
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    fn heap(arr: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(arr.clone());
            return;
        }
        for i in 0..k {
            heap(arr, k - 1, out);
            if k.is_multiple_of(2) {
                arr.swap(i, k - 1);
            } else {
                arr.swap(0, k - 1);
            }
        }
    }
    heap(&mut idx, k, &mut out);
    out
}

/// Certify the standing conditions on a speed function by seeded sampling:
/// exact normalization, degree-one homogeneity, strict monotonicity,
/// permutation symmetry, midpoint concavity of the dual and vanishing of
/// the dual on the cone boundary.
pub fn check_condition(f: &CurvatureFunction, plan: &SamplePlan) -> ConditionReport {
    assert!(plan.count >= 1, "sample count must be at least 1");
    let n = f.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let samples: Vec<Vec<f64>> = (0..plan.count)
        .map(|_| sample_tuple(&mut rng, n, plan.log_range))
        .collect();
    let dual = f.dual();

    // normalization: f(1,...,1) = 1
    let ones = vec![1.0; n];
    let fn_ones = f.eval_slice(&ones);
    let norm_res = (fn_ones - 1.0).abs();
    let ones_tuple = EigenTuple::new(ones).expect("ones tuple is positive");
    let normalization = if norm_res <= NORMALIZATION_TOL {
        CheckResult::pass(norm_res, Some(ones_tuple))
    } else {
        CheckResult::fail(norm_res, ones_tuple)
    };

    // homogeneity: |f(k l) - k f(l)| / (k f(l))
    let mut homogeneity = CheckResult::pass(0.0, None);
    for lam in &samples {
        let k = rng.gen_range((0.1f64).ln()..(10.0f64).ln()).exp();
        let scaled: Vec<f64> = lam.iter().map(|&x| k * x).collect();
        let base = k * f.eval_slice(lam);
        let res = (f.eval_slice(&scaled) - base).abs() / base;
        if res > homogeneity.worst_residual {
            homogeneity.worst_residual = res;
            homogeneity.witness = Some(EigenTuple::new(lam.clone()).unwrap());
        }
    }
    homogeneity.passed = homogeneity.worst_residual <= HOMOGENEITY_TOL;

    // monotonicity: every gradient entry positive at every sample
    let mut monotonicity = CheckResult::pass(f64::INFINITY, None);
    let mut grad = vec![0.0; n];
    for lam in &samples {
        f.grad_slice(lam, &mut grad);
        let min = grad.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < monotonicity.worst_residual {
            monotonicity.worst_residual = min;
            monotonicity.witness = Some(EigenTuple::new(lam.clone()).unwrap());
        }
    }
    monotonicity.passed = monotonicity.worst_residual > 0.0;

    // symmetry on a small subset, all permutations (n is small)
    let mut symmetry = CheckResult::pass(0.0, None);
    let perms = permutations(n.min(5));
    for lam in samples.iter().take(3) {
        let base = f.eval_slice(lam);
        for perm in &perms {
            let permuted: Vec<f64> = perm.iter().map(|&i| lam[i]).collect();
            let res = (f.eval_slice(&permuted) - base).abs() / base.abs();
            if res > symmetry.worst_residual {
                symmetry.worst_residual = res;
                symmetry.witness = Some(EigenTuple::new(lam.clone()).unwrap());
            }
        }
    }
    symmetry.passed = symmetry.worst_residual <= SYMMETRY_TOL;

    // inverse concavity: midpoint test on the dual over sample pairs
    let mut inverse_concavity = CheckResult::pass(0.0, None);
    for pair in samples.chunks_exact(2) {
        let (x, y) = (&pair[0], &pair[1]);
        let mid: Vec<f64> = x.iter().zip(y).map(|(&a, &b)| 0.5 * (a + b)).collect();
        let gap = 0.5 * (dual.eval_slice(x) + dual.eval_slice(y)) - dual.eval_slice(&mid);
        if gap > inverse_concavity.worst_residual {
            inverse_concavity.worst_residual = gap;
            inverse_concavity.witness = Some(EigenTuple::new(x.clone()).unwrap());
        }
    }
    inverse_concavity.passed = inverse_concavity.worst_residual <= MIDPOINT_SLACK;

    // boundary vanishing of the dual along the canonical geometric ray
    // l1 = 1e-1 .. 1e-6 with the remaining entries fixed at 1
    let interior = dual.eval_slice(&vec![1.0; n]);
    let mut ray_vals = Vec::new();
    let mut ray_eps = Vec::new();
    for k in 1..=6 {
        let eps = 10f64.powi(-k);
        let mut lam = vec![1.0; n];
        lam[0] = eps;
        ray_vals.push(dual.eval_slice(&lam));
        ray_eps.push(eps);
    }
    let decreasing = ray_vals.windows(2).all(|w| w[1] < w[0]);
    let final_frac = ray_vals.last().unwrap() / interior;
    let order = (ray_vals[0].ln() - ray_vals[5].ln()) / (ray_eps[0].ln() - ray_eps[5].ln());
    let boundary_pass =
        decreasing && (final_frac < BOUNDARY_DROP_TOL || order >= BOUNDARY_ORDER_TOL);
    let mut witness = vec![1.0; n];
    witness[0] = 1e-6;
    let witness = EigenTuple::new(witness).unwrap();
    let boundary_vanishing = if boundary_pass {
        CheckResult::pass(final_frac, Some(witness))
    } else {
        CheckResult::fail(final_frac, witness)
    };

    ConditionReport {
        normalization,
        homogeneity,
        monotonicity,
        symmetry,
        inverse_concavity,
        boundary_vanishing,
    }
}

/// The named functions exercised by the certification suite for a given
/// dimension.
pub fn standard_registry(n: usize) -> Vec<(String, CurvatureFunction)> {
    let mut specs: Vec<String> = vec![
        "arithmetic-mean".into(),
        "power-mean(2)".into(),
        "power-mean(3.5)".into(),
        "gauss-root".into(),
        "blend(gauss-root,arithmetic-mean,0.5)".into(),
    ];
    for k in 2..=n {
        specs.push(format!("ek-root({k})"));
    }
    specs
        .into_iter()
        .map(|s| {
            let f = CurvatureFunction::parse(&s, n).expect("registry spec parses");
            (s, f)
        })
        .collect()
}
