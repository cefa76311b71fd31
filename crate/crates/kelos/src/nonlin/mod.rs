//! Admissible nonlinearities `f`, `g` and the monotone maps derived from
//! them: the primitive `F`, the gradient calibration `Γ`, and inverses.
//!
//! A nonlinearity is a continuous, strictly increasing function on `[0, ∞)`
//! with `h(0) = 0`. Two representations are supported: the power-log grammar
//! `s ↦ sᵖ · (log(e + s))^α`, for which growth exponents are known exactly
//! and convergence questions can be settled symbolically, and opaque user
//! callables, which are screened for monotonicity at construction and carry
//! a fitted growth descriptor.

pub(crate) mod quad;

use std::fmt;
use std::sync::{Arc, Mutex};

use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use quad::adaptive_simpson;

const E: f64 = std::f64::consts::E;
const LN_2: f64 = std::f64::consts::LN_2;

/// Errors from spec construction, evaluation and inversion.
#[derive(Debug, Clone, thiserror::Error)]
pub enum NonlinError {
    #[error("lead exponent must be positive and finite (got p = {p}): s^0 does not vanish at 0")]
    LeadExponentNotPositive { p: f64 },
    #[error("log exponent must be finite (got alpha = {alpha})")]
    LogExponentNotFinite { alpha: f64 },
    #[error("s^{p} (log(e+s))^{alpha} is not increasing on [0, inf)")]
    PowerLogNotIncreasing { p: f64, alpha: f64 },
    #[error("custom nonlinearity `{name}` must vanish at 0 (got {value})")]
    NonzeroAtOrigin { name: String, value: f64 },
    #[error("custom nonlinearity `{name}` is not strictly increasing near s = {s}")]
    NotIncreasing { name: String, s: f64 },
    #[error("custom nonlinearity `{name}` returned a non-finite value at s = {s}")]
    NonFinite { name: String, s: f64 },
    #[error("evaluation domain is [0, inf); got s = {s}")]
    NegativeArgument { s: f64 },
    #[error("dimension must satisfy N >= 2 (got {n})")]
    DimensionTooSmall { n: u32 },
    #[error("quadrature stalled: achieved error {achieved:e} above requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },
    #[error("no bracket: map appears bounded below y = {y} (map({hi:e}) = {map_hi:e})")]
    BracketNotFound { y: f64, hi: f64, map_hi: f64 },
}

/// How a [`GrowthDescriptor`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Exactness {
    /// Read off the power-log form; exact.
    Symbolic,
    /// Log-log least squares on the tail `[1e4, 1e9]`.
    Fitted { residual: f64 },
}

/// Asymptotic growth `h(s) ≈ s^lead · (log s)^log_exponent` as `s → ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthDescriptor {
    pub lead_exponent: f64,
    pub log_exponent: f64,
    pub exactness: Exactness,
}

#[derive(Clone)]
enum Form {
    PowerLog { p: f64, alpha: f64 },
    Custom { name: Arc<str>, func: Arc<dyn Fn(f64) -> f64 + Send + Sync> },
}

/// A validated monotone nonlinearity on `[0, ∞)`.
#[derive(Clone, Deserialize)]
#[serde(try_from = "SpecConfig")]
pub struct NonlinearitySpec {
    form: Form,
    descriptor: GrowthDescriptor,
}

/// Wire format: `{ "form": "powerlog", "p": 1.0, "alpha": 2.0 }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "lowercase", deny_unknown_fields)]
enum SpecConfig {
    Powerlog {
        p: f64,
        #[serde(default)]
        alpha: f64,
    },
}

impl TryFrom<SpecConfig> for NonlinearitySpec {
    type Error = NonlinError;
    fn try_from(cfg: SpecConfig) -> Result<Self, NonlinError> {
        match cfg {
            SpecConfig::Powerlog { p, alpha } => NonlinearitySpec::power_log(p, alpha),
        }
    }
}

impl Serialize for NonlinearitySpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match &self.form {
            Form::PowerLog { p, alpha } => {
                let mut s = serializer.serialize_struct("NonlinearitySpec", 3)?;
                s.serialize_field("form", "powerlog")?;
                s.serialize_field("p", p)?;
                s.serialize_field("alpha", alpha)?;
                s.end()
            }
            Form::Custom { name, .. } => {
                let mut s = serializer.serialize_struct("NonlinearitySpec", 2)?;
                s.serialize_field("form", "custom")?;
                s.serialize_field("name", name.as_ref())?;
                s.end()
            }
        }
    }
}

impl fmt::Debug for NonlinearitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.form {
            Form::PowerLog { p, alpha } => write!(f, "PowerLog(p={p}, alpha={alpha})"),
            Form::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl fmt::Display for NonlinearitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.form {
            Form::PowerLog { p, alpha } if *alpha == 0.0 => write!(f, "s^{p}"),
            Form::PowerLog { p, alpha } => write!(f, "s^{p} (log(e+s))^{alpha}"),
            Form::Custom { name, .. } => write!(f, "{name}"),
        }
    }
}

/// Strict monotonicity of `s^p (log(e+s))^α` on `[0, ∞)`.
///
/// The derivative has the sign of `φ(s) = p (e+s) log(e+s) + α s`. For
/// `α ≥ 0` or `2p + α ≥ 0` the expression is increasing from `φ(0) = pe > 0`.
/// Otherwise the interior minimum sits where `log(e+s*) + 1 = -α/p`, and
/// `φ(s*) = -p e^L - α e` with `L = -α/p - 1`.
fn power_log_is_increasing(p: f64, alpha: f64) -> bool {
    if alpha >= 0.0 || 2.0 * p + alpha >= 0.0 {
        return true;
    }
    let l = -alpha / p - 1.0;
    (-alpha) * E > p * l.exp()
}

const CUSTOM_SCREEN_POINTS: usize = 256;
const SCREEN_LO: f64 = 1e-6;
const SCREEN_HI: f64 = 1e9;

impl NonlinearitySpec {
    /// `s ↦ sᵖ (log(e+s))^α`; rejected unless strictly increasing with
    /// `h(0) = 0`, which requires `p > 0` and, for `α < 0`, the closed-form
    /// derivative-sign check.
    pub fn power_log(p: f64, alpha: f64) -> Result<Self, NonlinError> {
        if !(p > 0.0) || !p.is_finite() {
            return Err(NonlinError::LeadExponentNotPositive { p });
        }
        if !alpha.is_finite() {
            return Err(NonlinError::LogExponentNotFinite { alpha });
        }
        if !power_log_is_increasing(p, alpha) {
            return Err(NonlinError::PowerLogNotIncreasing { p, alpha });
        }
        Ok(Self {
            form: Form::PowerLog { p, alpha },
            descriptor: GrowthDescriptor {
                lead_exponent: p,
                log_exponent: alpha,
                exactness: Exactness::Symbolic,
            },
        })
    }

    /// Pure power `s ↦ sᵖ`.
    pub fn power(p: f64) -> Result<Self, NonlinError> {
        Self::power_log(p, 0.0)
    }

    /// Wrap a user callable. Screened on a geometric grid of
    /// [`CUSTOM_SCREEN_POINTS`] points spanning `[1e-6, 1e9]`: values must be
    /// finite, nonnegative and strictly increasing, and `h(0)` must vanish.
    /// The growth descriptor is fitted from the tail.
    pub fn custom<F>(name: &str, func: F) -> Result<Self, NonlinError>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let at_zero = func(0.0);
        if !at_zero.is_finite() || at_zero.abs() > 1e-12 {
            return Err(NonlinError::NonzeroAtOrigin {
                name: name.to_string(),
                value: at_zero,
            });
        }
        let ratio = SCREEN_HI / SCREEN_LO;
        let mut prev = 0.0f64;
        let mut prev_s = 0.0f64;
        for i in 0..CUSTOM_SCREEN_POINTS {
            let s = SCREEN_LO * ratio.powf(i as f64 / (CUSTOM_SCREEN_POINTS - 1) as f64);
            let v = func(s);
            if !v.is_finite() {
                return Err(NonlinError::NonFinite { name: name.to_string(), s });
            }
            if v <= prev {
                return Err(NonlinError::NotIncreasing {
                    name: name.to_string(),
                    s: prev_s,
                });
            }
            prev = v;
            prev_s = s;
        }
        let descriptor = fit_descriptor(&func);
        Ok(Self {
            form: Form::Custom {
                name: Arc::from(name),
                func: Arc::new(func),
            },
            descriptor,
        })
    }

    pub fn descriptor(&self) -> GrowthDescriptor {
        self.descriptor
    }

    /// `Some((p, α))` when the spec is in the power-log grammar.
    pub fn power_log_exponents(&self) -> Option<(f64, f64)> {
        match self.form {
            Form::PowerLog { p, alpha } => Some((p, alpha)),
            Form::Custom { .. } => None,
        }
    }

    /// `h(s)` with domain checking; `h(0) = 0` exactly.
    pub fn eval(&self, s: f64) -> Result<f64, NonlinError> {
        if s < 0.0 || s.is_nan() {
            return Err(NonlinError::NegativeArgument { s });
        }
        Ok(self.eval_at(s))
    }

    /// `h(s)` for `s ≥ 0`; negative arguments are clamped to 0. Used on hot
    /// paths (integrator trial stages may transiently probe below zero).
    pub(crate) fn eval_at(&self, s: f64) -> f64 {
        let s = s.max(0.0);
        if s == 0.0 {
            return 0.0;
        }
        match &self.form {
            Form::PowerLog { p, alpha } => {
                let base = s.powf(*p);
                if *alpha == 0.0 {
                    base
                } else {
                    base * (E + s).ln().powf(*alpha)
                }
            }
            Form::Custom { func, .. } => func(s),
        }
    }

    /// `ln h(e^{ln_s})`, exact for the power-log grammar at any scale.
    pub(crate) fn ln_eval(&self, ln_s: f64) -> f64 {
        match &self.form {
            Form::PowerLog { p, alpha } => {
                let ll = ln_log_e_plus(ln_s);
                p * ln_s + alpha * ll
            }
            Form::Custom { func, .. } => {
                // Callables cannot be probed beyond f64 range; saturate.
                let s = ln_s.min(690.0).exp();
                func(s).ln()
            }
        }
    }

    /// Solve `h(x) = e^{ln_y}` for `ln x` by bisection in log coordinates.
    pub(crate) fn ln_invert(&self, ln_y: f64) -> f64 {
        ln_bisect(|lx| self.ln_eval(lx), ln_y)
    }
}

/// `ln(log(e + s))` as a function of `ln s`.
fn ln_log_e_plus(ln_s: f64) -> f64 {
    if ln_s > 36.0 {
        // log(e+s) = ln_s + ln(1 + e·e^{-ln_s}); the correction is below 1e-15
        ln_s.ln()
    } else {
        (E + ln_s.exp()).ln().ln()
    }
}

/// Least-squares fit of `ln h = c + p ln s + α ln log(e+s)` over 32 tail
/// samples in `[1e4, 1e9]`.
fn fit_descriptor<F: Fn(f64) -> f64>(func: &F) -> GrowthDescriptor {
    const N: usize = 32;
    let (lo, hi) = (1e4f64, 1e9f64);
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    let mut rows = Vec::with_capacity(N);
    for i in 0..N {
        let s = lo * (hi / lo).powf(i as f64 / (N - 1) as f64);
        let row = [1.0, s.ln(), (E + s).ln().ln()];
        let y = func(s).ln();
        for j in 0..3 {
            for k in 0..3 {
                ata[j][k] += row[j] * row[k];
            }
            atb[j] += row[j] * y;
        }
        rows.push((row, y));
    }
    let sol = solve3(ata, atb);
    let mut ss = 0.0;
    for (row, y) in &rows {
        let pred = sol[0] * row[0] + sol[1] * row[1] + sol[2] * row[2];
        ss += (y - pred) * (y - pred);
    }
    GrowthDescriptor {
        lead_exponent: sol[1],
        log_exponent: sol[2],
        exactness: Exactness::Fitted {
            residual: (ss / N as f64).sqrt(),
        },
    }
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let m = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= m * a[col][k];
            }
            b[row] -= m * b[col];
        }
    }
    let mut x = [0.0f64; 3];
    for row in (0..3).rev() {
        let mut acc = b[row];
        for k in row + 1..3 {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    x
}

/// A strictly increasing map on `[0, ∞)` with `map(0) = 0`, evaluable
/// pointwise. Inversion goes through [`invert`].
pub trait MonotoneMap {
    fn value(&self, x: f64) -> f64;
}

impl<F: Fn(f64) -> f64> MonotoneMap for F {
    fn value(&self, x: f64) -> f64 {
        self(x)
    }
}

impl MonotoneMap for NonlinearitySpec {
    fn value(&self, x: f64) -> f64 {
        self.eval_at(x)
    }
}

/// Solve `map(x) = y` by bracketing bisection with geometric bracket growth.
///
/// Newton is deliberately avoided: the maps inverted here can have unbounded
/// derivative at blow-up scales. The result satisfies
/// `|map(x) - y| ≤ max(1e-10, 1e-12·y)` whenever f64 resolution permits;
/// the bracket is otherwise narrowed to relative width `1e-14`.
pub fn invert<M: MonotoneMap + ?Sized>(map: &M, y: f64) -> Result<f64, NonlinError> {
    if y < 0.0 || y.is_nan() {
        return Err(NonlinError::NegativeArgument { s: y });
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    let res_tol = 1e-10f64.max(1e-12 * y);

    let mut hi = 1.0f64;
    let mut map_hi = map.value(hi);
    let mut grow = 0;
    while map_hi < y {
        hi *= 2.0;
        map_hi = map.value(hi);
        grow += 1;
        if grow > 1100 || !hi.is_finite() {
            return Err(NonlinError::BracketNotFound { y, hi, map_hi });
        }
    }
    let mut lo = if hi > 1.0 { hi / 2.0 } else { 1.0 };
    while lo > 0.0 && map.value(lo) > y {
        lo /= 2.0;
        if lo < 1e-300 {
            lo = 0.0;
        }
    }

    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        x = 0.5 * (lo + hi);
        let v = map.value(x);
        if (v - y).abs() <= res_tol {
            return Ok(x);
        }
        if v < y {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Bisection for `f(ln x) = ln_y` over the whole f64 exponent range; `f`
/// must be increasing. Suits log-space inversions where direct values
/// overflow.
pub(crate) fn ln_bisect<F: Fn(f64) -> f64>(f: F, ln_y: f64) -> f64 {
    let mut lo = -745.0f64;
    let mut hi = 709.0f64;
    for _ in 0..90 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < ln_y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

const K_MIN: i32 = -60;
const K_MAX: i32 = 1020;

/// Primitive `F(t) = ∫₀ᵗ h(s) ds` of a nonlinearity, with `F(0) = 0`.
///
/// Pure powers use the closed form `t^{p+1}/(p+1)`; everything else goes
/// through adaptive quadrature with values cached at dyadic anchors so that
/// repeated evaluation along trajectories and integral tails stays cheap.
pub struct Primitive {
    spec: NonlinearitySpec,
    /// `anchors[i] = F(2^(K_MIN + i))`, grown lazily under the lock.
    anchors: Mutex<Vec<f64>>,
}

impl fmt::Debug for Primitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Primitive({:?})", self.spec)
    }
}

impl Primitive {
    pub fn new(spec: &NonlinearitySpec) -> Self {
        Self {
            spec: spec.clone(),
            anchors: Mutex::new(Vec::new()),
        }
    }

    pub fn spec(&self) -> &NonlinearitySpec {
        &self.spec
    }

    fn closed_form_exponent(&self) -> Option<f64> {
        match self.spec.form {
            Form::PowerLog { p, alpha } if alpha == 0.0 => Some(p),
            _ => None,
        }
    }

    /// `F(t)`, absolute tolerance `1e-10` with relative fallback `1e-12`.
    pub fn eval(&self, t: f64) -> Result<f64, NonlinError> {
        if t < 0.0 || t.is_nan() {
            return Err(NonlinError::NegativeArgument { s: t });
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        if let Some(p) = self.closed_form_exponent() {
            return Ok(t.powf(p + 1.0) / (p + 1.0));
        }
        let k = (t.log2().floor() as i32).clamp(K_MIN, K_MAX);
        if t <= 2f64.powi(K_MIN) {
            return self.head_integral(t);
        }
        let base = self.anchor(k)?;
        let a = 2f64.powi(k);
        let tol = (1e-14 * base.abs()).max(1e-15);
        let (seg, _) = adaptive_simpson(&|s| self.spec.eval_at(s), a, t, tol).map_err(|e| {
            NonlinError::Quadrature {
                achieved: e.achieved,
                requested: e.requested,
            }
        })?;
        Ok(base + seg)
    }

    /// `F(2^k)` from the dyadic cache, extending it as needed.
    fn anchor(&self, k: i32) -> Result<f64, NonlinError> {
        let idx = (k - K_MIN) as usize;
        let mut anchors = self.anchors.lock().unwrap();
        if anchors.is_empty() {
            let head = self.head_integral(2f64.powi(K_MIN))?;
            anchors.push(head);
        }
        while anchors.len() <= idx {
            let i = anchors.len() as i32 - 1;
            let a = 2f64.powi(K_MIN + i);
            let b = 2f64.powi(K_MIN + i + 1);
            let base = *anchors.last().unwrap();
            let tol = (1e-14 * base.abs()).max(1e-15);
            let (seg, _) =
                adaptive_simpson(&|s| self.spec.eval_at(s), a, b, tol).map_err(|e| {
                    NonlinError::Quadrature {
                        achieved: e.achieved,
                        requested: e.requested,
                    }
                })?;
            anchors.push(base + seg);
        }
        Ok(anchors[idx])
    }

    /// `∫₀ᵃ h` with the power substitution `s = a wᵐ` so the integrand is
    /// smooth at the origin even for sublinear leads.
    fn head_integral(&self, a: f64) -> Result<f64, NonlinError> {
        let lead = self.spec.descriptor().lead_exponent.max(0.05);
        let m = (4.0 / (lead + 1.0)).ceil().max(1.0);
        let integrand = |w: f64| {
            let s = a * w.powf(m);
            a * m * w.powf(m - 1.0) * self.spec.eval_at(s)
        };
        let (v, _) = adaptive_simpson(&integrand, 0.0, 1.0, 1e-15).map_err(|e| {
            NonlinError::Quadrature {
                achieved: e.achieved,
                requested: e.requested,
            }
        })?;
        Ok(v)
    }

    /// `ln F(e^{ln_t})`. Falls back to the tail expansion
    /// `F(t) ≈ t·h(t)/(p+1) · (1 - α/((p+1) log t))` once direct values
    /// leave f64 range; by then the relative error is `O(1/log² t)`.
    pub(crate) fn ln_eval(&self, ln_t: f64) -> f64 {
        if ln_t == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        if let Some(p) = self.closed_form_exponent() {
            return (p + 1.0) * ln_t - (p + 1.0).ln();
        }
        let d = self.spec.descriptor();
        let ln_h = self.spec.ln_eval(ln_t);
        if ln_h + ln_t < 700.0 && ln_t < 700.0 {
            match self.eval(ln_t.exp()) {
                Ok(v) => v.ln(),
                Err(_) => f64::NAN,
            }
        } else {
            let p1 = d.lead_exponent + 1.0;
            let le = ln_t.max(1.0);
            ln_h + ln_t - p1.ln() + (1.0 - d.log_exponent / (p1 * le)).ln()
        }
    }
}

impl MonotoneMap for Primitive {
    fn value(&self, x: f64) -> f64 {
        self.eval(x).unwrap_or(f64::NAN)
    }
}

/// The gradient calibration `Γ(s) = ∫₀^{2s} g(t) dt + 2N s²`.
///
/// Strictly increasing with `Γ(0) = 0`; its inverse measures how strongly
/// the gradient term can offset absorption in the minus-sign problem.
pub struct GammaFn {
    g_primitive: Primitive,
    n: u32,
}

impl fmt::Debug for GammaFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GammaFn(g={:?}, n={})", self.g_primitive.spec, self.n)
    }
}

impl GammaFn {
    pub fn new(g: &NonlinearitySpec, n: u32) -> Result<Self, NonlinError> {
        if n < 2 {
            return Err(NonlinError::DimensionTooSmall { n });
        }
        Ok(Self {
            g_primitive: Primitive::new(g),
            n,
        })
    }

    pub fn dimension(&self) -> u32 {
        self.n
    }

    pub fn eval(&self, s: f64) -> Result<f64, NonlinError> {
        if s < 0.0 || s.is_nan() {
            return Err(NonlinError::NegativeArgument { s });
        }
        Ok(self.g_primitive.eval(2.0 * s)? + 2.0 * self.n as f64 * s * s)
    }

    pub(crate) fn ln_eval(&self, ln_s: f64) -> f64 {
        let quad_part = (2.0 * self.n as f64).ln() + 2.0 * ln_s;
        log_add_exp(self.g_primitive.ln_eval(ln_s + LN_2), quad_part)
    }

    /// `ln Γ⁻¹(e^{ln_y})` by log-space bisection.
    pub(crate) fn ln_invert(&self, ln_y: f64) -> f64 {
        ln_bisect(|lx| self.ln_eval(lx), ln_y)
    }
}

impl MonotoneMap for GammaFn {
    fn value(&self, x: f64) -> f64 {
        self.eval(x).unwrap_or(f64::NAN)
    }
}

/// Everything derived from a pair `(f, g)` in dimension `N`: the primitive
/// `F`, the calibration `Γ`, and their inverses as monotone maps.
#[derive(Debug)]
pub struct DerivedFunctions {
    f: NonlinearitySpec,
    g: NonlinearitySpec,
    f_primitive: Primitive,
    gamma: GammaFn,
}

impl DerivedFunctions {
    pub fn new(f: &NonlinearitySpec, g: &NonlinearitySpec, n: u32) -> Result<Self, NonlinError> {
        Ok(Self {
            f: f.clone(),
            g: g.clone(),
            f_primitive: Primitive::new(f),
            gamma: GammaFn::new(g, n)?,
        })
    }

    pub fn f(&self) -> &NonlinearitySpec {
        &self.f
    }

    pub fn g(&self) -> &NonlinearitySpec {
        &self.g
    }

    pub fn f_primitive(&self) -> &Primitive {
        &self.f_primitive
    }

    pub fn gamma(&self) -> &GammaFn {
        &self.gamma
    }

    pub fn g_inverse(&self, y: f64) -> Result<f64, NonlinError> {
        invert(&self.g, y)
    }

    pub fn gamma_inverse(&self, y: f64) -> Result<f64, NonlinError> {
        invert(&self.gamma, y)
    }
}

/// Spec operation: the primitive `F` of `f` with `F(0) = 0`.
pub fn primitive(spec: &NonlinearitySpec) -> Primitive {
    Primitive::new(spec)
}

/// Spec operation: `Γ` built from `g` and the dimension.
pub fn gamma(spec_g: &NonlinearitySpec, n: u32) -> Result<GammaFn, NonlinError> {
    GammaFn::new(spec_g, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn powerlog(p: f64, alpha: f64) -> NonlinearitySpec {
        NonlinearitySpec::power_log(p, alpha).unwrap()
    }

    #[test]
    fn identity_evaluates_exactly() {
        let f = powerlog(1.0, 0.0);
        assert_eq!(f.eval(3.0).unwrap(), 3.0);
    }

    #[test]
    fn zero_lead_exponent_rejected() {
        // s^0 (log(e+s))^alpha equals 1 at the origin
        assert!(matches!(
            NonlinearitySpec::power_log(0.0, 1.0),
            Err(NonlinError::LeadExponentNotPositive { .. })
        ));
    }

    #[test]
    fn anchored_zero() {
        let f = powerlog(2.0, 1.0);
        assert_eq!(f.eval(0.0).unwrap(), 0.0);
    }

    #[test]
    fn negative_argument_rejected() {
        let f = powerlog(1.0, 0.0);
        assert!(matches!(
            f.eval(-1.0),
            Err(NonlinError::NegativeArgument { .. })
        ));
    }

    #[test]
    fn strongly_negative_log_exponent_rejected() {
        // p=0.1, alpha=-5: the derivative changes sign on (0, inf)
        assert!(matches!(
            NonlinearitySpec::power_log(0.1, -5.0),
            Err(NonlinError::PowerLogNotIncreasing { .. })
        ));
        // mild negative log exponent stays monotone
        assert!(NonlinearitySpec::power_log(1.0, -0.5).is_ok());
    }

    #[test]
    fn custom_decreasing_rejected() {
        let r = NonlinearitySpec::custom("decay", |s| s / (1.0 + s * s));
        assert!(matches!(r, Err(NonlinError::NotIncreasing { .. })));
    }

    #[test]
    fn custom_nonzero_origin_rejected() {
        let r = NonlinearitySpec::custom("shifted", |s| s + 1.0);
        assert!(matches!(r, Err(NonlinError::NonzeroAtOrigin { .. })));
    }

    #[test]
    fn custom_descriptor_fits_power() {
        let c = NonlinearitySpec::custom("square", |s| s * s).unwrap();
        let d = c.descriptor();
        assert!((d.lead_exponent - 2.0).abs() < 1e-6, "{d:?}");
        assert!(d.log_exponent.abs() < 1e-4, "{d:?}");
    }

    #[test]
    fn primitive_closed_forms() {
        let f1 = primitive(&powerlog(1.0, 0.0));
        assert!((f1.eval(2.0).unwrap() - 2.0).abs() < 1e-14);
        let f3 = primitive(&powerlog(3.0, 0.0));
        assert!((f3.eval(4.0).unwrap() - 64.0).abs() < 1e-12);
    }

    /// Independent oracle: composite Simpson on a fixed fine grid.
    fn simpson_oracle<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for i in 1..n {
            acc += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    }

    #[test]
    fn primitive_power_log_matches_fine_simpson() {
        let spec = powerlog(1.0, 1.0); // s log(e+s)
        let f = primitive(&spec);
        let oracle = simpson_oracle(|s: f64| s * (E + s).ln(), 0.0, 1.0, 1 << 20);
        assert!(
            (f.eval(1.0).unwrap() - oracle).abs() < 1e-10,
            "F(1) = {}, oracle = {}",
            f.eval(1.0).unwrap(),
            oracle
        );
    }

    #[test]
    fn gamma_hand_integrations() {
        // g(s)=s, N=3: Gamma(s) = 2s^2 + 6s^2
        let g1 = gamma(&powerlog(1.0, 0.0), 3).unwrap();
        assert!((g1.eval(1.0).unwrap() - 8.0).abs() < 1e-12);
        // g(s)=s^2, N=2: Gamma(1) = 8/3 + 4
        let g2 = gamma(&powerlog(2.0, 0.0), 2).unwrap();
        assert!((g2.eval(1.0).unwrap() - 20.0 / 3.0).abs() < 1e-12);
        assert_eq!(g2.eval(0.0).unwrap(), 0.0);
    }

    #[test]
    fn gamma_dimension_validated() {
        assert!(matches!(
            gamma(&powerlog(1.0, 0.0), 1),
            Err(NonlinError::DimensionTooSmall { .. })
        ));
    }

    #[test]
    fn invert_exact_roots() {
        let sq = |s: f64| 8.0 * s * s;
        let x = invert(&sq, 8.0).unwrap();
        assert!((x - 1.0).abs() < 1e-10);
        let cube = powerlog(3.0, 0.0);
        let x = invert(&cube, 27.0).unwrap();
        assert!((x - 3.0).abs() < 1e-9);
    }

    #[test]
    fn invert_gamma_round_trip() {
        let gm = gamma(&powerlog(1.0, 1.0), 2).unwrap();
        let y = gm.eval(5.0).unwrap();
        let x = invert(&gm, y).unwrap();
        assert!((x - 5.0).abs() < 1e-8 * 5.0, "got {x}");
    }

    #[test]
    fn invert_bounded_map_reports_bracket_failure() {
        let bounded = |s: f64| s / (1.0 + s);
        assert!(matches!(
            invert(&bounded, 2.0),
            Err(NonlinError::BracketNotFound { .. })
        ));
    }

    #[test]
    fn serde_round_trip_powerlog() {
        let json = r#"{ "form": "powerlog", "p": 1.0, "alpha": 2.0 }"#;
        let spec: NonlinearitySpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec.power_log_exponents(), Some((1.0, 2.0)));
        let back = serde_json::to_string(&spec).unwrap();
        assert!(back.contains("powerlog"));
    }

    #[test]
    fn serde_rejects_invalid_spec() {
        let json = r#"{ "form": "powerlog", "p": 0.0, "alpha": 1.0 }"#;
        assert!(serde_json::from_str::<NonlinearitySpec>(json).is_err());
        let json = r#"{ "form": "powerlog", "p": 1.0, "alpha": 1.0, "extra": 3 }"#;
        assert!(serde_json::from_str::<NonlinearitySpec>(json).is_err());
    }

    #[test]
    fn ln_eval_matches_direct_at_moderate_scale() {
        let spec = powerlog(1.5, 2.0);
        for &s in &[1e-4, 0.3, 7.0, 1e5, 1e9] {
            let direct = spec.eval(s).unwrap().ln();
            let ln = spec.ln_eval(s.ln());
            assert!((direct - ln).abs() < 1e-11 * direct.abs().max(1.0));
        }
    }

    prop_compose! {
        fn arb_powerlog()(p in 0.05f64..4.0, alpha in -1.0f64..4.0)
            -> NonlinearitySpec
        {
            // mildly negative alphas can fail the monotonicity screen; fall
            // back to the pure power in that case
            NonlinearitySpec::power_log(p, alpha)
                .unwrap_or_else(|_| NonlinearitySpec::power(p).unwrap())
        }
    }

    proptest! {
        #[test]
        fn monotone_on_geometric_grid(spec in arb_powerlog()) {
            let mut prev = 0.0;
            for i in 0..64 {
                let s = 1e-6 * (1e15f64).powf(i as f64 / 63.0);
                let v = spec.eval(s).unwrap();
                prop_assert!(v > prev, "not increasing at s={s}");
                prev = v;
            }
        }

        #[test]
        fn primitive_derivative_matches(spec in arb_powerlog(), t in 0.1f64..1e4) {
            let f = primitive(&spec);
            let h = 1e-6 * t;
            let fd = (f.eval(t + h).unwrap() - f.eval(t - h).unwrap()) / (2.0 * h);
            let exact = spec.eval(t).unwrap();
            prop_assert!(
                (fd - exact).abs() <= 1e-6 * exact.abs().max(1e-12),
                "FD {fd} vs f {exact} at t={t}"
            );
        }

        #[test]
        fn inverse_round_trip(spec in arb_powerlog(), x in 1e-4f64..1e6) {
            let y = spec.eval(x).unwrap();
            let back = invert(&spec, y).unwrap();
            prop_assert!(
                (back - x).abs() <= 1e-8 * x,
                "round trip {x} -> {y} -> {back}"
            );
        }

        #[test]
        fn primitive_below_secant_bound(spec in arb_powerlog(), t in 1e-3f64..1e6) {
            // F(t) <= f(t) * t since f is increasing
            let f = primitive(&spec);
            let bound = spec.eval(t).unwrap() * t;
            prop_assert!(f.eval(t).unwrap() <= bound * (1.0 + 1e-10));
        }

        #[test]
        fn gamma_dominates_secant_terms(spec in arb_powerlog(), t in 1e-3f64..1e5, n in 2u32..8) {
            // Gamma(t) >= t g(t) + 2N t^2
            let gm = gamma(&spec, n).unwrap();
            let lhs = gm.eval(t).unwrap();
            let rhs = t * spec.eval(t).unwrap() + 2.0 * n as f64 * t * t;
            prop_assert!(lhs >= rhs * (1.0 - 1e-9), "lhs {lhs} rhs {rhs}");
        }

        #[test]
        fn gamma_ln_eval_consistent(spec in arb_powerlog(), n in 2u32..6, s in 1e-2f64..1e7) {
            let gm = gamma(&spec, n).unwrap();
            let direct = gm.eval(s).unwrap().ln();
            let ln = gm.ln_eval(s.ln());
            prop_assert!((direct - ln).abs() < 1e-9 * direct.abs().max(1.0));
        }
    }
}
