//! Symmetric-space norm functionals on step functions: `L_p` and sup norms,
//! Orlicz (Luxemburg) norms with N-function machinery, Marcinkiewicz norms
//! for the weight family `φ_ε(t) = t·log_2^{1/2-ε}(2/t)`, and the sup-form
//! quasi-norm `Ψ_ε`.
//!
//! Logarithms are base 2 throughout the weight family. All functionals
//! depend on the argument only through its decreasing rearrangement, so they
//! are rearrangement-invariant by construction.

use serde::{Deserialize, Serialize};

use crate::dyadic::DyadicStep;
use crate::error::{ChaosError, Result};

/// Relative tolerance of the Luxemburg-norm bisection.
pub const ORLICZ_REL_TOL: f64 = 1e-10;
const ORLICZ_MAX_ITERS: u32 = 200;

/// Interior samples per cell for the Marcinkiewicz sup.
const MARCINKIEWICZ_SAMPLES_PER_CELL: usize = 64;

/// An N-function: convex, increasing, `A(0) = 0`, `A(u)/u -> 0` at zero and
/// `u/A(u) -> 0` at infinity. The two built-ins cover the exponential
/// integrability scale.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NFunction {
    /// `M(t) = e^t - 1`.
    #[serde(rename = "M")]
    ExpM,
    /// `N(t) = e^{t^2} - 1`.
    #[serde(rename = "N")]
    ExpSquareN,
}

impl NFunction {
    pub fn name(self) -> &'static str {
        match self {
            NFunction::ExpM => "M",
            NFunction::ExpSquareN => "N",
        }
    }

    pub fn eval(self, u: f64) -> f64 {
        match self {
            NFunction::ExpM => u.exp_m1(),
            NFunction::ExpSquareN => (u * u).exp_m1(),
        }
    }

    /// Closed-form Legendre conjugate where one is known.
    pub fn closed_form_conjugate(self, u: f64) -> Option<f64> {
        match self {
            // sup_v (uv - e^v + 1): maximizer v = ln u for u >= 1.
            NFunction::ExpM => Some(if u <= 1.0 { 0.0 } else { u * u.ln() - u + 1.0 }),
            NFunction::ExpSquareN => None,
        }
    }
}

impl std::fmt::Display for NFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Deserialize)]
struct RawNormSpec {
    tag: String,
    #[serde(default)]
    p: Option<f64>,
    #[serde(default)]
    epsilon: Option<f64>,
    #[serde(default)]
    nfunction: Option<NFunction>,
}

/// A tagged description of a symmetric-space norm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "lowercase")]
#[serde(try_from = "RawNormSpec")]
pub enum NormSpec {
    Lp { p: f64 },
    Sup,
    Orlicz { nfunction: NFunction },
    Marcinkiewicz { epsilon: f64 },
}

impl TryFrom<RawNormSpec> for NormSpec {
    type Error = ChaosError;

    fn try_from(raw: RawNormSpec) -> Result<Self> {
        let spec = match raw.tag.as_str() {
            "lp" => NormSpec::Lp {
                p: raw.p.unwrap_or(f64::NAN),
            },
            "sup" => NormSpec::Sup,
            "orlicz" => NormSpec::Orlicz {
                nfunction: raw.nfunction.ok_or(ChaosError::ParseError {
                    what: "orlicz nfunction",
                    expected: "M or N",
                })?,
            },
            "marcinkiewicz" => NormSpec::Marcinkiewicz {
                epsilon: raw.epsilon.unwrap_or(f64::NAN),
            },
            _ => {
                return Err(ChaosError::ParseError {
                    what: "norm tag",
                    expected: "lp | sup | orlicz | marcinkiewicz",
                })
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl NormSpec {
    pub const L1: NormSpec = NormSpec::Lp { p: 1.0 };
    pub const L2: NormSpec = NormSpec::Lp { p: 2.0 };
    pub const L4: NormSpec = NormSpec::Lp { p: 4.0 };

    pub fn orlicz_m() -> Self {
        NormSpec::Orlicz {
            nfunction: NFunction::ExpM,
        }
    }

    pub fn orlicz_n() -> Self {
        NormSpec::Orlicz {
            nfunction: NFunction::ExpSquareN,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            NormSpec::Lp { p } => {
                if p.is_nan() || p < 1.0 {
                    return Err(ChaosError::ParameterOutOfRange {
                        what: "exponent p",
                        value: p,
                        range: "p >= 1 (or infinity)",
                    });
                }
            }
            NormSpec::Marcinkiewicz { epsilon } => check_epsilon(epsilon)?,
            NormSpec::Sup | NormSpec::Orlicz { .. } => {}
        }
        Ok(())
    }
}

impl std::fmt::Display for NormSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NormSpec::Lp { p } if p.is_infinite() => write!(f, "Linf"),
            NormSpec::Lp { p } => write!(f, "L{p}"),
            NormSpec::Sup => write!(f, "sup"),
            NormSpec::Orlicz { nfunction } => write!(f, "Orlicz({nfunction})"),
            NormSpec::Marcinkiewicz { epsilon } => write!(f, "M(phi_{epsilon})"),
        }
    }
}

impl std::str::FromStr for NormSpec {
    type Err = ChaosError;

    /// Accepts `l1`, `l2`, `l4`, `lp:<p>`, `sup`/`linf`, `orlicz:M`,
    /// `orlicz:N`, `marcinkiewicz:<eps>` (alias `marc:<eps>`).
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let spec = match lower.as_str() {
            "l1" => NormSpec::L1,
            "l2" => NormSpec::L2,
            "l4" => NormSpec::L4,
            "sup" | "linf" => NormSpec::Sup,
            "orlicz:m" => NormSpec::orlicz_m(),
            "orlicz:n" => NormSpec::orlicz_n(),
            _ => {
                let invalid = || ChaosError::ParseError {
                    what: "norm spec string",
                    expected: "l1|l2|l4|lp:<p>|sup|orlicz:M|orlicz:N|marcinkiewicz:<eps>",
                };
                let (tag, arg) = lower.split_once(':').ok_or_else(invalid)?;
                let value: f64 = arg.parse().map_err(|_| invalid())?;
                match tag {
                    "lp" => NormSpec::Lp { p: value },
                    "marcinkiewicz" | "marc" => NormSpec::Marcinkiewicz { epsilon: value },
                    _ => return Err(invalid()),
                }
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(-0.5..0.5).contains(&epsilon) {
        return Err(ChaosError::ParameterOutOfRange {
            what: "epsilon",
            value: epsilon,
            range: "[-1/2, 1/2)",
        });
    }
    Ok(())
}

/// `(2^-level · Σ |v|^p)^{1/p}`; for `p = ∞` the sup norm.
pub fn lp_norm(x: &DyadicStep, p: f64) -> Result<f64> {
    NormSpec::Lp { p }.validate()?;
    Ok(lp_norm_slice(x.values(), p))
}

/// Largest absolute cell value.
pub fn sup_norm(x: &DyadicStep) -> f64 {
    x.max_abs()
}

fn lp_norm_slice(values: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return values.iter().fold(0.0, |acc, v| acc.max(v.abs()));
    }
    let mean = if p == 1.0 {
        values.iter().map(|v| v.abs()).sum::<f64>() / values.len() as f64
    } else if p == 2.0 {
        values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64
    } else if p == 4.0 {
        values.iter().map(|v| (v * v) * (v * v)).sum::<f64>() / values.len() as f64
    } else {
        values.iter().map(|v| v.abs().powf(p)).sum::<f64>() / values.len() as f64
    };
    if p == 1.0 {
        mean
    } else {
        mean.powf(1.0 / p)
    }
}

/// Numeric Legendre transform `sup{uv - f(v) : v >= 0}` for convex
/// increasing `f` with `f(0) = 0` and superlinear growth.
pub fn legendre_conjugate(f: impl Fn(f64) -> f64, u: f64) -> Result<f64> {
    if u < 0.0 {
        return Err(ChaosError::ParameterOutOfRange {
            what: "conjugate argument u",
            value: u,
            range: "u >= 0",
        });
    }
    let g = |v: f64| u * v - f(v);
    // Expand until the objective stops growing; superlinearity of f
    // guarantees termination.
    let mut hi = 1.0_f64;
    while g(2.0 * hi) > g(hi) && hi < 1e300 {
        hi *= 2.0;
    }
    hi *= 2.0;
    // Golden-section maximization of a concave function on [0, hi].
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0_f64, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..200 {
        if b - a <= 1e-12 * (1.0 + b.abs()) {
            break;
        }
        if gc >= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g(d);
        }
    }
    Ok(g(0.5 * (a + b)).max(g(0.0)))
}

/// The conjugate N-function `A*(u)`; closed form when available, numeric
/// maximization otherwise.
pub fn nfunction_conjugate(a: NFunction, u: f64) -> Result<f64> {
    if u < 0.0 {
        return Err(ChaosError::ParameterOutOfRange {
            what: "conjugate argument u",
            value: u,
            range: "u >= 0",
        });
    }
    if let Some(v) = a.closed_form_conjugate(u) {
        return Ok(v);
    }
    legendre_conjugate(|v| a.eval(v), u)
}

/// Solve `A(t) = 1` by doubling and bisection.
fn nfunction_inverse_at_one(a: NFunction) -> f64 {
    let mut hi = 1.0_f64;
    while a.eval(hi) < 1.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0_f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if a.eval(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Luxemburg norm by bisection on `λ` of the mean modular
/// `F(λ) = 2^-level · Σ A(|v|/λ)`; see [`orlicz_norm`].
pub(crate) fn orlicz_norm_of_values(values: &[f64], a: NFunction) -> Result<f64> {
    let sup = values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if sup == 0.0 {
        return Ok(0.0);
    }
    let inv_count = 1.0 / values.len() as f64;
    // Overflow of A counts as F > 1: the norm lies above such λ.
    let modular = |lambda: f64| -> f64 {
        let mut sum = 0.0;
        for &v in values {
            sum += a.eval(v.abs() / lambda);
            if !sum.is_finite() {
                return f64::INFINITY;
            }
        }
        sum * inv_count
    };

    let mut hi = sup / nfunction_inverse_at_one(a);
    // F(hi) <= A(sup/hi) = 1 up to rounding; widen upward if rounding left
    // the bracket invalid.
    let mut guard = 0;
    while modular(hi) > 1.0 {
        hi *= 1.0 + 1e-12;
        guard += 1;
        if guard > 64 {
            return Err(ChaosError::NonConvergence {
                what: "Luxemburg bisection bracket",
                iterations: guard,
            });
        }
    }
    let mut lo = hi * (0.5_f64).powi(60);
    if modular(lo) <= 1.0 {
        // Degenerate only for functions vanishing outside a null set of
        // cells; the norm is below the floor of the bracket.
        return Ok(lo);
    }
    let mut iterations = 0;
    while hi - lo > ORLICZ_REL_TOL * hi {
        iterations += 1;
        if iterations > ORLICZ_MAX_ITERS {
            return Err(ChaosError::NonConvergence {
                what: "Luxemburg bisection",
                iterations,
            });
        }
        let mid = 0.5 * (lo + hi);
        if modular(mid) <= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Luxemburg norm `inf{λ > 0 : ∫ A(|x|/λ) <= 1}`.
pub fn orlicz_norm(x: &DyadicStep, a: NFunction) -> Result<f64> {
    orlicz_norm_of_values(x.values(), a)
}

/// The weight `φ_ε(t) = t·log_2^{1/2-ε}(2/t)` on `(0, 1]`.
pub fn phi_weight(epsilon: f64, t: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    if !(t > 0.0 && t <= 1.0) {
        return Err(ChaosError::PointOutOfDomain { t });
    }
    Ok(t * (2.0 / t).log2().powf(0.5 - epsilon))
}

/// Marcinkiewicz norm value together with the sampling-error bound of the
/// sup search.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MarcinkiewiczEstimate {
    pub value: f64,
    /// Local Lipschitz estimate times the refined mesh width: an upper
    /// bound on how far the sampled sup can sit below the true sup.
    pub error_bound: f64,
}

/// `sup_{0<t<=1} (1/φ_ε(t)) ∫_0^t x*(s) ds` with the sampling error bound.
///
/// The primitive of the rearrangement is piecewise linear; the ratio to the
/// weight need not be unimodal per cell, so the sup is searched at every
/// cell endpoint plus 64 interior samples per cell, followed by one local
/// refinement pass around the best sample.
pub fn marcinkiewicz_norm_detailed(x: &DyadicStep, epsilon: f64) -> Result<MarcinkiewiczEstimate> {
    check_epsilon(epsilon)?;
    let decreasing = x.rearrangement();
    let values = decreasing.values();
    let n = values.len();
    let h = decreasing.cell_width();
    let q = 0.5 - epsilon;

    // prefix[c] = ∫_0^{c·h} x* exactly (sum of full cells).
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &v in values {
        acc += v * h;
        prefix.push(acc);
    }

    let ratio = |t: f64, cell: usize| -> f64 {
        let t_left = cell as f64 * h;
        let integral = prefix[cell] + values[cell] * (t - t_left);
        let weight = t * (2.0 / t).log2().powf(q);
        integral / weight
    };

    let mut best = (0.0_f64, h, 0usize); // (value, t, cell)
    let step = h / (MARCINKIEWICZ_SAMPLES_PER_CELL + 1) as f64;
    for cell in 0..n {
        let t_left = cell as f64 * h;
        let t_right = t_left + h;
        let g = ratio(t_right, cell);
        if g > best.0 {
            best = (g, t_right, cell);
        }
        for s in 1..=MARCINKIEWICZ_SAMPLES_PER_CELL {
            let t = t_left + s as f64 * step;
            let g = ratio(t, cell);
            if g > best.0 {
                best = (g, t, cell);
            }
        }
    }

    // One refinement pass in a window of one coarse sample spacing around
    // the best point, clipped to its cell.
    let (_, t_star, cell) = best;
    let t_left = cell as f64 * h;
    let t_right = t_left + h;
    let coarse = h / (MARCINKIEWICZ_SAMPLES_PER_CELL + 1) as f64;
    let win_lo = (t_star - coarse).max(t_left + 1e-3 * coarse);
    let win_hi = (t_star + coarse).min(t_right);
    let fine = (win_hi - win_lo) / (MARCINKIEWICZ_SAMPLES_PER_CELL + 1) as f64;
    let mut lipschitz = 0.0_f64;
    let mut previous = ratio(win_lo, cell);
    for s in 0..=MARCINKIEWICZ_SAMPLES_PER_CELL + 1 {
        let t = win_lo + s as f64 * fine;
        let g = ratio(t, cell);
        if g > best.0 {
            best = (g, t, cell);
        }
        if s > 0 {
            lipschitz = lipschitz.max((g - previous).abs() / fine);
        }
        previous = g;
    }

    Ok(MarcinkiewiczEstimate {
        value: best.0,
        error_bound: lipschitz * fine,
    })
}

/// Marcinkiewicz norm for the weight `φ_ε`.
pub fn marcinkiewicz_norm(x: &DyadicStep, epsilon: f64) -> Result<f64> {
    Ok(marcinkiewicz_norm_detailed(x, epsilon)?.value)
}

/// The sup-form quasi-norm `Ψ_ε(x) = sup_t x*(t)·t/φ_ε(t)
/// = sup_t x*(t)·log_2^{ε-1/2}(2/t)`.
///
/// The rearrangement is constant per cell and `t/φ_ε(t)` increases in `t`,
/// so the sup is attained at cell right endpoints and is evaluated exactly.
pub fn psi_quasinorm(x: &DyadicStep, epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    let decreasing = x.rearrangement();
    let h = decreasing.cell_width();
    let exponent = epsilon - 0.5;
    let mut best = 0.0_f64;
    for (cell, &v) in decreasing.values().iter().enumerate() {
        if v == 0.0 {
            break; // rearrangement is non-increasing
        }
        let t = (cell + 1) as f64 * h;
        best = best.max(v * (2.0 / t).log2().powf(exponent));
    }
    Ok(best)
}

/// Adaptive Simpson quadrature.
fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_simpson(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        return left + right + (left + right - whole) / 15.0;
    }
    adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    adaptive_simpson(&f, a, b, fa, fm, fb, whole, tol, 40)
}

/// `∫_0^∞ (y_low + z)^q 2^{-z} dz`: the tail integral of the weight-over-s
/// primitive after substituting `s = 2·2^{-(y_low+z)}` and factoring out
/// `2^{-y_low}`, which keeps the quadrature well scaled for tiny `t`.
fn shifted_weight_tail(q: f64, y_low: f64) -> f64 {
    let ln2 = std::f64::consts::LN_2;
    let integrand = |z: f64| (y_low + z).powf(q) * (-z * ln2).exp();
    // 2^{-z} decays below any f64 past z = 80.
    integrate(integrand, 0.0, 80.0, 1e-13 * (1.0 + y_low.powf(q)))
}

/// `∫_0^t log_2^q(2/s) ds`: the primitive behind the converse constant.
pub fn phi_over_s_primitive(q: f64, t: f64) -> f64 {
    let y_low = (2.0 / t).log2();
    2.0 * std::f64::consts::LN_2 * (-y_low).exp2() * shifted_weight_tail(q, y_low)
}

/// The constant `C_φ = sup_t (1/φ_ε(t)) ∫_0^t φ_ε(s)/s ds` relating the
/// Marcinkiewicz norm back to `Ψ_ε`: `‖x‖_{M(φ_ε)} <= C_φ·Ψ_ε(x)`.
pub fn marcinkiewicz_to_psi_constant(epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    let q = 0.5 - epsilon;
    let h = |x: f64| -> f64 {
        // t = 2^-x; the 2^{-y_low} factors of primitive and weight cancel.
        let y_low = x + 1.0;
        std::f64::consts::LN_2 * shifted_weight_tail(q, y_low) / y_low.powf(q)
    };
    let mut best = (0.0_f64, 0.0_f64);
    let mut x = 0.0;
    while x <= 60.0 {
        let v = h(x);
        if v > best.0 {
            best = (v, x);
        }
        x += 1.0 / 16.0;
    }
    // Refine around the best exponent.
    let (mut lo, mut hi) = ((best.1 - 1.0 / 16.0).max(0.0), best.1 + 1.0 / 16.0);
    for _ in 0..60 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if h(m1) >= h(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    Ok(h(0.5 * (lo + hi)).max(best.0))
}

/// Norm dispatch over the four families.
pub fn norm(x: &DyadicStep, spec: &NormSpec) -> Result<f64> {
    spec.validate()?;
    match *spec {
        NormSpec::Lp { p } => lp_norm(x, p),
        NormSpec::Sup => Ok(sup_norm(x)),
        NormSpec::Orlicz { nfunction } => orlicz_norm(x, nfunction),
        NormSpec::Marcinkiewicz { epsilon } => marcinkiewicz_norm(x, epsilon),
    }
}

/// Norm of raw cell values at a level; hot-loop variant of [`norm`] that
/// avoids constructing a step function per evaluation.
pub(crate) fn norm_of_values(level: u32, values: &[f64], spec: &NormSpec) -> Result<f64> {
    match *spec {
        NormSpec::Lp { p } => {
            if p.is_nan() || p < 1.0 {
                return Err(ChaosError::ParameterOutOfRange {
                    what: "exponent p",
                    value: p,
                    range: "p >= 1 (or infinity)",
                });
            }
            Ok(lp_norm_slice(values, p))
        }
        NormSpec::Sup => Ok(values.iter().fold(0.0, |acc, v| acc.max(v.abs()))),
        NormSpec::Orlicz { nfunction } => orlicz_norm_of_values(values, nfunction),
        NormSpec::Marcinkiewicz { epsilon } => {
            let step = DyadicStep::from_values_unchecked(level, values.to_vec());
            marcinkiewicz_norm(&step, epsilon)
        }
    }
}
