//! Explicit witness constructions: block sums of chaos elements, the
//! rearrangement lower bound for weighted block sums, optimally signed
//! blocks with small sup norm, the logarithmic lower-bound witnesses built
//! from them, the constant-1 sup-form interpolation inequality, and the
//! extremal step functions of the Marcinkiewicz scale.
//!
//! Block `k` of a [`BlockSpec`] with bounds `n_1 < n_2 < ...` sums the
//! chaos elements `r_i·r_j` over `n_k < i < j <= n_{k+1}`. The derived
//! checkpoints `t_k = 2^{-n_{k+1}}` decay doubly exponentially for the
//! powers-of-two bounds, so working levels are chosen as `n_{K+1}` to make
//! every checkpoint a cell endpoint; rearrangement evaluation there is
//! exact.

use serde::{Deserialize, Serialize};

use crate::constants::best_signs;
use crate::dyadic::{DyadicStep, MAX_LEVEL};
use crate::error::{ChaosError, Result};
use crate::spaces::{
    marcinkiewicz_norm, orlicz_norm, psi_quasinorm, sup_norm, NFunction, NormSpec,
};
use crate::walsh::{pair_values, ChaosCoeffs, ChaosPair, SignPattern};

/// Norm-evaluation budget for the randomized sign search on blocks too
/// large to enumerate.
pub const DEFAULT_ZK_BUDGET: u64 = 4000;

/// Margin tolerance for the analytic chain inequalities; absorbs the
/// rounding of mixed-sign cell sums.
const CHAIN_TOL: f64 = 1e-12;

#[derive(Deserialize)]
struct RawBlockSpec {
    n: Vec<u32>,
    c: Vec<f64>,
}

/// Block bounds `n_1 < n_2 < ... < n_{K+1}` and positive weights
/// `c_1, ..., c_K`. Derived quantities are recomputed on demand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBlockSpec")]
pub struct BlockSpec {
    n: Vec<u32>,
    c: Vec<f64>,
}

impl TryFrom<RawBlockSpec> for BlockSpec {
    type Error = ChaosError;

    fn try_from(raw: RawBlockSpec) -> Result<Self> {
        BlockSpec::new(raw.n, raw.c)
    }
}

impl BlockSpec {
    pub fn new(n: Vec<u32>, c: Vec<f64>) -> Result<Self> {
        if n.len() < 2 || c.len() + 1 != n.len() {
            return Err(ChaosError::ParameterOutOfRange {
                what: "block bound count",
                value: n.len() as f64,
                range: "one more bound than weights, at least two",
            });
        }
        if n[0] == 0 || n.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ChaosError::ParameterOutOfRange {
                what: "block bounds",
                value: 0.0,
                range: "strictly increasing positive integers",
            });
        }
        if c.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(ChaosError::ParameterOutOfRange {
                what: "block weights",
                value: f64::NAN,
                range: "finite positive reals",
            });
        }
        Ok(Self { n, c })
    }

    /// Bounds `n_k = 2^k` for `k = 1..=K+1`.
    pub fn powers_of_two(weights: Vec<f64>) -> Result<Self> {
        let blocks = weights.len() as u32;
        let n = (1..=blocks + 1).map(|k| 1u32 << k).collect();
        Self::new(n, weights)
    }

    pub fn blocks(&self) -> usize {
        self.c.len()
    }

    pub fn bounds(&self) -> &[u32] {
        &self.n
    }

    pub fn weights(&self) -> &[f64] {
        &self.c
    }

    /// Lower and upper index bound of block `k` (1-based).
    pub fn block_range(&self, k: usize) -> (u32, u32) {
        (self.n[k - 1], self.n[k])
    }

    /// Checkpoint `t_k = 2^{-n_{k+1}}`.
    pub fn t(&self, k: usize) -> f64 {
        (-(self.n[k] as f64)).exp2()
    }

    /// Pair count `m_k = (n_{k+1}-n_k)(n_{k+1}-n_k-1)/2` of block `k`.
    pub fn m(&self, k: usize) -> u64 {
        let width = (self.n[k] - self.n[k - 1]) as u64;
        width * (width - 1) / 2
    }
}

/// Pairs `lo < i < j <= hi` in linear order.
pub fn block_pairs(lo: u32, hi: u32) -> Vec<ChaosPair> {
    let mut pairs = Vec::new();
    for j in lo + 2..=hi {
        for i in lo + 1..j {
            pairs.push(ChaosPair::new(i, j).expect("i < j"));
        }
    }
    pairs.sort();
    pairs
}

/// `Σ θ_{i,j} r_i r_j` over `lo < i < j <= hi` (`θ = +1` when absent).
pub fn block_sum(lo: u32, hi: u32, signs: Option<&SignPattern>, level: u32) -> Result<DyadicStep> {
    if lo + 1 >= hi {
        return Err(ChaosError::ParameterOutOfRange {
            what: "block range",
            value: hi as f64,
            range: "hi >= lo + 2 (at least one pair)",
        });
    }
    if level > MAX_LEVEL {
        return Err(ChaosError::LevelTooLarge {
            level,
            max: MAX_LEVEL,
        });
    }
    if level + 1 < hi {
        return Err(ChaosError::LevelTooCoarse {
            what: format!("block sum up to r_{hi}"),
            level,
            required: hi - 1,
        });
    }
    let mut values = vec![0.0f64; 1 << level];
    for pair in block_pairs(lo, hi) {
        let sign = f64::from(signs.map_or(1, |s| s.get(pair)));
        for (v, b) in values.iter_mut().zip(pair_values(pair, level)) {
            *v += sign * b;
        }
    }
    Ok(DyadicStep::from_values_unchecked(level, values))
}

/// One checkpoint of the rearrangement lower bound.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub k: usize,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

/// The tail-positivity measure bound behind each checkpoint.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TailSetCheck {
    pub k: usize,
    pub measure: f64,
    pub required: f64,
    pub pass: bool,
}

/// Verification record of the block-sum rearrangement lower bound
/// `y*(t_k) >= Σ_{l<=k} m_l c_l`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockSumBoundReport {
    pub bounds: Vec<u32>,
    pub weights: Vec<f64>,
    pub level: u32,
    pub checkpoints: Vec<Checkpoint>,
    pub tail_sets: Vec<TailSetCheck>,
    /// Every checkpoint margin is nonnegative: the rearrangement bound.
    pub margins_pass: bool,
    /// Every tail-positivity set reaches measure `t_k`. This bound fails
    /// for single-block tails of width >= 5 (a width-`w` block sum is
    /// `(S^2-w)/2` for a `w`-term sign sum `S`, and `P(S^2 >= w)` drops
    /// below 1/2 from `w = 5` on), so it is reported per checkpoint rather
    /// than assumed.
    pub tail_sets_pass: bool,
    pub pass: bool,
}

/// Build `y = Σ_{k<=k_max} c_k y_k` from unsigned block sums and check the
/// rearrangement lower bound at every checkpoint, together with the
/// tail-positivity set bound: `|{t in (0, 2t_k): Σ_{l>k} c_l y_l(t) >= 0}|
/// >= t_k`.
pub fn block_sum_lower_bound(
    spec: &BlockSpec,
    k_max: usize,
    level: u32,
) -> Result<BlockSumBoundReport> {
    if k_max == 0 || k_max > spec.blocks() {
        return Err(ChaosError::ParameterOutOfRange {
            what: "block count k_max",
            value: k_max as f64,
            range: "1..=blocks",
        });
    }
    let needed = spec.n[k_max];
    if level < needed {
        return Err(ChaosError::LevelTooCoarse {
            what: "checkpoint grid".to_string(),
            level,
            required: needed,
        });
    }

    let blocks: Vec<DyadicStep> = (1..=k_max)
        .map(|k| {
            let (lo, hi) = spec.block_range(k);
            block_sum(lo, hi, None, level)
        })
        .collect::<Result<_>>()?;

    let mut y = DyadicStep::zero(level)?;
    for (k, block) in blocks.iter().enumerate() {
        y.axpy_in_place(spec.c[k], block);
    }
    let decreasing = y.rearrangement();

    let mut checkpoints = Vec::with_capacity(k_max);
    let mut rhs = 0.0;
    for k in 1..=k_max {
        rhs += spec.m(k) as f64 * spec.c[k - 1];
        let t = spec.t(k);
        let lhs = decreasing.value_at(t)?;
        checkpoints.push(Checkpoint {
            k,
            t,
            lhs,
            rhs,
            margin: lhs - rhs,
        });
    }

    let mut tail_sets = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let mut tail = DyadicStep::zero(level)?;
        for l in k + 1..=k_max {
            tail.axpy_in_place(spec.c[l - 1], &blocks[l - 1]);
        }
        // Cells inside (0, 2 t_k).
        let cells = 1usize << (level + 1 - spec.n[k]);
        let nonneg = tail.values()[..cells].iter().filter(|v| **v >= 0.0).count();
        let measure = nonneg as f64 * y.cell_width();
        let required = spec.t(k);
        tail_sets.push(TailSetCheck {
            k,
            measure,
            required,
            pass: measure >= required,
        });
    }

    let margins_pass = checkpoints.iter().all(|c| c.margin >= -CHAIN_TOL);
    let tail_sets_pass = tail_sets.iter().all(|t| t.pass);
    Ok(BlockSumBoundReport {
        bounds: spec.n[..=k_max].to_vec(),
        weights: spec.c[..k_max].to_vec(),
        level,
        checkpoints,
        tail_sets,
        margins_pass,
        tail_sets_pass,
        pass: margins_pass && tail_sets_pass,
    })
}

/// Result of minimizing the sup norm of a signed block.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockSignSearchResult {
    pub k: u32,
    pub pairs: usize,
    pub pattern: SignPattern,
    pub sup_norm: f64,
    /// `sup_norm / 2^{3k/2}`.
    pub ratio: f64,
    pub exhaustive: bool,
}

/// Minimize `‖Σ θ_{i,j} r_i r_j‖_∞` over signs on the block
/// `2^k < i < j <= 2^{k+1}`: exhaustive for `k <= 2`, seeded descent for
/// `k = 3`.
pub fn block_sign_search(k: u32, budget: u64, seed: u64) -> Result<BlockSignSearchResult> {
    if !(1..=3).contains(&k) {
        return Err(ChaosError::ParameterOutOfRange {
            what: "block index k",
            value: k as f64,
            range: "1..=3",
        });
    }
    let pairs = block_pairs(1 << k, 1 << (k + 1));
    let coeffs = ChaosCoeffs::from_entries(pairs.iter().map(|&p| (p, 1.0)));
    let exhaustive = pairs.len() <= crate::constants::EXHAUSTIVE_PATTERN_LIMIT;
    let (pattern, sup) = best_signs(&NormSpec::Sup, &coeffs, budget, seed)?;
    Ok(BlockSignSearchResult {
        k,
        pairs: pairs.len(),
        pattern,
        sup_norm: sup,
        ratio: sup / (1.5 * k as f64).exp2(),
        exhaustive,
    })
}

/// Record of the sup-form interpolation inequality
/// `sup_t x*(t) w(t)^u <= (sup_t x*(t))^{1-u} (sup_t x*(t) w(t))^u` with
/// `w(t) = log_2^{-1}(2/t)`, plus the assembled norm chain with its
/// end-to-end constant.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct InterpolationReport {
    pub u: f64,
    /// `ε = (1-2u)/2`, the Marcinkiewicz index matched to `u`.
    pub epsilon: f64,
    pub sup_form_lhs: f64,
    pub sup_form_rhs: f64,
    pub sup_form_pass: bool,
    pub sup_norm: f64,
    pub marcinkiewicz_half: f64,
    pub marcinkiewicz_eps: f64,
    /// `‖x‖_{M(φ_ε)} / (‖x‖_∞^{1-u}·‖x‖_{M(φ_{-1/2})}^u)`.
    pub end_to_end_c: f64,
}

/// Check the constant-1 sup-form inequality at cell right endpoints and
/// assemble the interpolation chain for the matched Marcinkiewicz index.
pub fn interpolation_check(x: &DyadicStep, u: f64) -> Result<InterpolationReport> {
    if !(u > 0.0 && u < 1.0) {
        return Err(ChaosError::ParameterOutOfRange {
            what: "interpolation exponent u",
            value: u,
            range: "(0, 1)",
        });
    }
    let epsilon = (1.0 - 2.0 * u) / 2.0;
    let sup = sup_norm(x);
    if sup == 0.0 {
        return Ok(InterpolationReport {
            u,
            epsilon,
            sup_form_lhs: 0.0,
            sup_form_rhs: 0.0,
            sup_form_pass: true,
            sup_norm: 0.0,
            marcinkiewicz_half: 0.0,
            marcinkiewicz_eps: 0.0,
            end_to_end_c: 0.0,
        });
    }
    // Ψ_ε with ε = (1-2u)/2 weighs by log_2^{-u}(2/t), and Ψ_{-1/2} weighs
    // by log_2^{-1}(2/t): exactly the two sides of the sup-form inequality.
    let sup_form_lhs = psi_quasinorm(x, epsilon)?;
    let weighted_sup = psi_quasinorm(x, -0.5)?;
    let sup_form_rhs = sup.powf(1.0 - u) * weighted_sup.powf(u);
    let sup_form_pass = sup_form_lhs <= sup_form_rhs * (1.0 + 1e-12);

    let marcinkiewicz_half = marcinkiewicz_norm(x, -0.5)?;
    let marcinkiewicz_eps = marcinkiewicz_norm(x, epsilon)?;
    let end_to_end_c = marcinkiewicz_eps / (sup.powf(1.0 - u) * marcinkiewicz_half.powf(u));
    Ok(InterpolationReport {
        u,
        epsilon,
        sup_form_lhs,
        sup_form_rhs,
        sup_form_pass,
        sup_norm: sup,
        marcinkiewicz_half,
        marcinkiewicz_eps,
        end_to_end_c,
    })
}

/// Per-block data shared by the two logarithmic witnesses.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockSearch {
    pub k: u32,
    pub sup_norm: f64,
    /// `‖z_k‖_∞ / 2^{3k/2}`.
    pub sup_ratio: f64,
    pub exhaustive: bool,
}

/// One logarithmic checkpoint: the rearrangement value against the
/// log-weight, and the analytic chain floor it must dominate.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LogCheckpoint {
    pub k: usize,
    pub t: f64,
    /// `y*(t_k)`.
    pub lhs: f64,
    /// `log_2^{exponent}(2/t_k)`.
    pub weight: f64,
    /// `lhs / weight`; the witnessed constant is the minimum of these.
    pub ratio: f64,
    /// The analytic chain floor the rearrangement value must dominate.
    #[serde(rename = "rhs")]
    pub chain_rhs: f64,
    /// `lhs - rhs`.
    pub margin: f64,
    #[serde(rename = "pass")]
    pub chain_pass: bool,
}

/// Witness record for the signed/unsigned block pair construction with
/// weights `c_k = 2^{-(3+2ε)k/2}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundedWitnessReport {
    pub epsilon: f64,
    pub level: u32,
    pub blocks: Vec<BlockSearch>,
    /// `‖x‖_∞` of the signed sum.
    pub x_sup: f64,
    /// Triangle bound `max_k(sup ratio)·Σ 2^{-εk}`.
    pub x_sup_bound: f64,
    pub x_sup_pass: bool,
    /// `m_k >= 2^{2k-2}` for every block used.
    pub pair_count_pass: bool,
    pub checkpoints: Vec<LogCheckpoint>,
    /// `min_k y*(t_k)/log_2^{1/2-ε}(2/t_k)`.
    pub witnessed_constant: f64,
    pub pass: bool,
}

fn powers_block_spec(k_max: usize, weights: Vec<f64>) -> Result<BlockSpec> {
    let n = (1..=k_max as u32 + 1).map(|k| 1u32 << k).collect();
    BlockSpec::new(n, weights)
}

fn signed_and_unsigned_sums(
    spec: &BlockSpec,
    patterns: &[SignPattern],
    weights: &[f64],
    level: u32,
) -> Result<(DyadicStep, DyadicStep)> {
    let mut signed = DyadicStep::zero(level)?;
    let mut unsigned = DyadicStep::zero(level)?;
    for k in 1..=weights.len() {
        let (lo, hi) = spec.block_range(k);
        let z = block_sum(lo, hi, Some(&patterns[k - 1]), level)?;
        let y = block_sum(lo, hi, None, level)?;
        signed.axpy_in_place(weights[k - 1], &z);
        unsigned.axpy_in_place(weights[k - 1], &y);
    }
    Ok((signed, unsigned))
}

/// Build `x = Σ 2^{-(3+2ε)k/2} z_k` from the searched signs, flip the signs
/// back to `y = Σ c_k y_k`, and report the rearrangement-versus-log ratios
/// at the checkpoints `t_k = 2^{-2^{k+1}}`.
pub fn log_witness_from_bounded(
    epsilon: f64,
    k_max: usize,
    level: u32,
    seed: u64,
) -> Result<BoundedWitnessReport> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(ChaosError::ParameterOutOfRange {
            what: "epsilon",
            value: epsilon,
            range: "(0, 1/2)",
        });
    }
    if !(1..=3).contains(&k_max) {
        return Err(ChaosError::ParameterOutOfRange {
            what: "block count k_max",
            value: k_max as f64,
            range: "1..=3",
        });
    }
    let needed = 1u32 << (k_max + 1);
    if level < needed {
        return Err(ChaosError::LevelTooCoarse {
            what: "checkpoint grid".to_string(),
            level,
            required: needed,
        });
    }

    let weights: Vec<f64> = (1..=k_max)
        .map(|k| (-(3.0 + 2.0 * epsilon) * k as f64 / 2.0).exp2())
        .collect();
    let spec = powers_block_spec(k_max, weights.clone())?;

    let mut blocks = Vec::with_capacity(k_max);
    let mut patterns = Vec::with_capacity(k_max);
    for k in 1..=k_max as u32 {
        let search = block_sign_search(k, DEFAULT_ZK_BUDGET, seed)?;
        blocks.push(BlockSearch {
            k,
            sup_norm: search.sup_norm,
            sup_ratio: search.ratio,
            exhaustive: search.exhaustive,
        });
        patterns.push(search.pattern);
    }

    let (x, y) = signed_and_unsigned_sums(&spec, &patterns, &weights, level)?;

    let x_sup = sup_norm(&x);
    let worst_ratio = blocks.iter().fold(0.0f64, |acc, b| acc.max(b.sup_ratio));
    let geometric: f64 = (1..=k_max).map(|k| (-epsilon * k as f64).exp2()).sum();
    let x_sup_bound = worst_ratio * geometric;
    let x_sup_pass = x_sup <= x_sup_bound + CHAIN_TOL;

    let pair_count_pass = (1..=k_max).all(|k| spec.m(k) >= 1u64 << (2 * k - 2));

    let decreasing = y.rearrangement();
    let mut checkpoints = Vec::with_capacity(k_max);
    let mut chain_rhs = 0.0;
    for k in 1..=k_max {
        let t = spec.t(k);
        let lhs = decreasing.value_at(t)?;
        let ell = 1.0 + (1u64 << (k + 1)) as f64; // log_2(2/t_k)
        let weight = ell.powf(0.5 - epsilon);
        chain_rhs += 0.25 * (2.0 * k as f64).exp2() * weights[k - 1];
        checkpoints.push(LogCheckpoint {
            k,
            t,
            lhs,
            weight,
            ratio: lhs / weight,
            chain_rhs,
            margin: lhs - chain_rhs,
            chain_pass: lhs >= chain_rhs - CHAIN_TOL,
        });
    }
    let witnessed_constant = checkpoints
        .iter()
        .map(|c| c.ratio)
        .fold(f64::INFINITY, f64::min);
    let pass = x_sup_pass
        && pair_count_pass
        && witnessed_constant > 0.0
        && checkpoints.iter().all(|c| c.chain_pass);
    Ok(BoundedWitnessReport {
        epsilon,
        level,
        blocks,
        x_sup,
        x_sup_bound,
        x_sup_pass,
        pair_count_pass,
        checkpoints,
        witnessed_constant,
        pass,
    })
}

/// Per-block norm comparisons feeding the Marcinkiewicz-scale witness.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BlockNorms {
    pub k: u32,
    /// `‖z_k‖_{M(φ_{-1/2})} / 2^k`.
    pub half_ratio: f64,
    /// `‖z_k‖_{M(φ_{-1/2})} / ‖z_k‖_{L_M}`: two independently computed
    /// norms of the same space, up to equivalence.
    pub marcinkiewicz_orlicz_ratio: f64,
    /// `‖z_k‖_{M(φ_ε)} / 2^{(3-u)k/2}`.
    pub interpolated_ratio: f64,
    pub sup_form_pass: bool,
}

/// Witness record for the Marcinkiewicz-scale construction with weights
/// `c_k = 2^{(u-3-2v)k/2}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScaleWitnessReport {
    pub epsilon: f64,
    pub delta: f64,
    pub u: f64,
    pub v: f64,
    pub level: u32,
    pub blocks: Vec<BlockSearch>,
    pub block_norms: Vec<BlockNorms>,
    pub checkpoints: Vec<LogCheckpoint>,
    /// `min_k y*(t_k)/log_2^{1/2+δ}(2/t_k)`.
    pub witnessed_constant: f64,
    pub pass: bool,
}

/// Build `x = Σ 2^{(u-3-2v)k/2} z_k` with `u = (1-2ε)/2`, verify the
/// per-block norm chain (the `2^k` scaling of the `M(φ_{-1/2})` norm, the
/// sup-form interpolation bound, the interpolated growth bound), and report
/// the rearrangement-versus-log ratios of `y = Σ c_k y_k` against the
/// exponent `1/2 + δ`.
pub fn log_witness_from_scale(
    epsilon: f64,
    delta: f64,
    v: Option<f64>,
    k_max: usize,
    level: u32,
    seed: u64,
) -> Result<ScaleWitnessReport> {
    if !(epsilon > -0.5 && epsilon < 0.5) {
        return Err(ChaosError::ParameterOutOfRange {
            what: "epsilon",
            value: epsilon,
            range: "(-1/2, 1/2)",
        });
    }
    let delta_hi = 0.25 - epsilon / 2.0;
    if !(delta > 0.0 && delta < delta_hi) {
        return Err(ChaosError::ParameterOutOfRange {
            what: "delta",
            value: delta,
            range: "(0, 1/4 - eps/2)",
        });
    }
    let v_hi = 0.25 - epsilon / 2.0 - delta;
    let v = v.unwrap_or(v_hi / 2.0);
    if !(v > 0.0 && v < v_hi) {
        return Err(ChaosError::ParameterOutOfRange {
            what: "v",
            value: v,
            range: "(0, 1/4 - eps/2 - delta)",
        });
    }
    if !(1..=3).contains(&k_max) {
        return Err(ChaosError::ParameterOutOfRange {
            what: "block count k_max",
            value: k_max as f64,
            range: "1..=3",
        });
    }
    let needed = 1u32 << (k_max + 1);
    if level < needed {
        return Err(ChaosError::LevelTooCoarse {
            what: "checkpoint grid".to_string(),
            level,
            required: needed,
        });
    }

    let u = (1.0 - 2.0 * epsilon) / 2.0;
    let weights: Vec<f64> = (1..=k_max)
        .map(|k| ((u - 3.0 - 2.0 * v) * k as f64 / 2.0).exp2())
        .collect();
    let spec = powers_block_spec(k_max, weights.clone())?;

    let mut blocks = Vec::with_capacity(k_max);
    let mut patterns = Vec::with_capacity(k_max);
    let mut block_norms = Vec::with_capacity(k_max);
    for k in 1..=k_max as u32 {
        let search = block_sign_search(k, DEFAULT_ZK_BUDGET, seed)?;
        let (lo, hi) = spec.block_range(k as usize);
        let z = block_sum(lo, hi, Some(&search.pattern), level)?;

        let marc_half = marcinkiewicz_norm(&z, -0.5)?;
        let orlicz = orlicz_norm(&z, NFunction::ExpM)?;
        let marc_eps = marcinkiewicz_norm(&z, epsilon)?;
        let interp = interpolation_check(&z, u)?;
        block_norms.push(BlockNorms {
            k,
            half_ratio: marc_half / (k as f64).exp2(),
            marcinkiewicz_orlicz_ratio: marc_half / orlicz,
            interpolated_ratio: marc_eps / ((3.0 - u) * k as f64 / 2.0).exp2(),
            sup_form_pass: interp.sup_form_pass,
        });

        blocks.push(BlockSearch {
            k,
            sup_norm: search.sup_norm,
            sup_ratio: search.ratio,
            exhaustive: search.exhaustive,
        });
        patterns.push(search.pattern);
    }

    let (_, y) = signed_and_unsigned_sums(&spec, &patterns, &weights, level)?;
    let decreasing = y.rearrangement();

    let mut checkpoints = Vec::with_capacity(k_max);
    let mut chain_rhs = 0.0;
    for k in 1..=k_max {
        let t = spec.t(k);
        let lhs = decreasing.value_at(t)?;
        let ell = 1.0 + (1u64 << (k + 1)) as f64;
        let weight = ell.powf(0.5 + delta);
        chain_rhs += 0.25 * (2.0 * k as f64).exp2() * weights[k - 1];
        checkpoints.push(LogCheckpoint {
            k,
            t,
            lhs,
            weight,
            ratio: lhs / weight,
            chain_rhs,
            margin: lhs - chain_rhs,
            chain_pass: lhs >= chain_rhs - CHAIN_TOL,
        });
    }
    let witnessed_constant = checkpoints
        .iter()
        .map(|c| c.ratio)
        .fold(f64::INFINITY, f64::min);
    let pass = witnessed_constant > 0.0
        && checkpoints.iter().all(|c| c.chain_pass)
        && block_norms.iter().all(|b| b.sup_form_pass);
    Ok(ScaleWitnessReport {
        epsilon,
        delta,
        u,
        v,
        level,
        blocks,
        block_norms,
        checkpoints,
        witnessed_constant,
        pass,
    })
}

/// The non-increasing step minorant of `log_2^{1/2-ε}(2/t)`: cell-wise
/// evaluation at cell right endpoints. The extremal element of the
/// Marcinkiewicz space with index `ε`.
pub fn log_weight_minorant(epsilon: f64, level: u32) -> Result<DyadicStep> {
    if !(epsilon > -0.5 && epsilon < 0.5) {
        return Err(ChaosError::ParameterOutOfRange {
            what: "epsilon",
            value: epsilon,
            range: "(-1/2, 1/2)",
        });
    }
    if level == 0 {
        return Err(ChaosError::LevelTooCoarse {
            what: "log-weight minorant".to_string(),
            level,
            required: 1,
        });
    }
    if level > MAX_LEVEL {
        return Err(ChaosError::LevelTooLarge {
            level,
            max: MAX_LEVEL,
        });
    }
    let n = 1usize << level;
    let h = (-(level as f64)).exp2();
    let q = 0.5 - epsilon;
    let values = (1..=n)
        .map(|c| (2.0 / (c as f64 * h)).log2().powf(q))
        .collect();
    Ok(DyadicStep::from_values_unchecked(level, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::equimeasurable;
    use crate::sampling::{stream_rng, uniform_in};
    use crate::spaces::lp_norm;
    use crate::walsh::rademacher;

    #[test]
    fn block_sum_base_cases() {
        // Only pair with 2 < i < j <= 4 is (3, 4).
        let b = block_sum(2, 4, None, 3).unwrap();
        let expected = rademacher(3, 3).unwrap().mul(&rademacher(4, 3).unwrap());
        assert!(b.approx_eq(&expected, 0.0));
        assert_eq!(sup_norm(&b), 1.0);

        // All Rademachers are +1 on the first cell, so the block sum equals
        // its pair count there.
        for (lo, hi) in [(2u32, 5u32), (4, 8), (2, 6)] {
            let level = hi;
            let b = block_sum(lo, hi, None, level).unwrap();
            let m = block_pairs(lo, hi).len() as f64;
            assert_eq!(b.values()[0], m);
            // Parseval: squared L_2 norm equals the pair count.
            let l2 = lp_norm(&b, 2.0).unwrap();
            assert!((l2 * l2 - m).abs() < 1e-10);
        }

        assert!(block_sum(3, 4, None, 8).is_err()); // no pairs
        assert!(block_sum(2, 6, None, 3).is_err()); // too coarse
    }

    #[test]
    fn block_split_by_second_index_is_equimeasurable() {
        // Split a block sum along the top index: both halves are multiples
        // of r_{j0} with disjoint lower factors, so f+g and f-g are exactly
        // equimeasurable.
        let level = 7;
        let j0 = 7u32;
        let mut f = DyadicStep::zero(level).unwrap();
        let mut g = DyadicStep::zero(level).unwrap();
        for i in 3..j0 {
            let pair = pair_values(ChaosPair::new(i, j0).unwrap(), level);
            let step = DyadicStep::from_values_unchecked(level, pair);
            if i <= 4 {
                f.axpy_in_place(1.0, &step);
            } else {
                g.axpy_in_place(1.0, &step);
            }
        }
        assert!(equimeasurable(&f.add(&g), &f.sub(&g), 0.0));
    }

    #[test]
    fn single_block_lower_bound_powers_of_two() {
        // Bounds 2 < 4: single pair (3,4), t_1 = 1/16, m_1 = 1.
        let spec = BlockSpec::powers_of_two(vec![0.9]).unwrap();
        assert_eq!(spec.bounds(), &[2, 4]);
        assert_eq!(spec.m(1), 1);
        assert_eq!(spec.t(1), 1.0 / 16.0);

        let report = block_sum_lower_bound(&spec, 1, 4).unwrap();
        assert!(report.pass);
        assert_eq!(report.checkpoints.len(), 1);
        let cp = &report.checkpoints[0];
        assert!((cp.rhs - 0.9).abs() < 1e-15);
        assert!(cp.lhs >= cp.rhs);
        // |y| = c_1 everywhere here, so y* is m_1 c_1 on all of (0, 1].
        assert_eq!(cp.lhs, 0.9);
    }

    #[test]
    fn two_block_lower_bound_explicit_quantities() {
        let spec = BlockSpec::powers_of_two(vec![0.7, 0.4]).unwrap();
        assert_eq!(spec.bounds(), &[2, 4, 8]);
        assert_eq!(spec.m(2), 6);
        assert_eq!(spec.t(2), (0.5f64).powi(8));

        let report = block_sum_lower_bound(&spec, 2, 8).unwrap();
        assert!(report.pass, "{report:?}");
        assert!((report.checkpoints[1].rhs - (0.7 + 6.0 * 0.4)).abs() < 1e-12);
    }

    #[test]
    fn lower_bound_holds_for_general_block_specs() {
        // Not just powers of two.
        let mut rng = stream_rng(61, 0);
        for trial in 0..20 {
            let n = match trial % 3 {
                0 => vec![1, 3, 6],
                1 => vec![2, 5, 9],
                _ => vec![1, 4, 7, 10],
            };
            let weights: Vec<f64> = (0..n.len() - 1)
                .map(|_| uniform_in(0.05, 2.0, &mut rng))
                .collect();
            let spec = BlockSpec::new(n.clone(), weights).unwrap();
            let level = *n.last().unwrap();
            let report = block_sum_lower_bound(&spec, spec.blocks(), level).unwrap();
            assert!(report.margins_pass, "bounds {n:?}: {report:?}");
        }
    }

    #[test]
    fn sign_search_minimum_for_the_single_pair_block() {
        let result = block_sign_search(1, 0, 0).unwrap();
        assert_eq!(result.pairs, 1);
        assert!(result.exhaustive);
        assert_eq!(result.sup_norm, 1.0);
        assert!((result.ratio - 1.0 / (8.0f64).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn sign_search_minimum_for_the_six_pair_block() {
        // Frozen from the exhaustive 64-pattern enumeration: values on each
        // cell are sums of six ±1 terms (even parity), and Parseval forces
        // sup >= sqrt(6), so the minimum is an even integer >= 4.
        let result = block_sign_search(2, 0, 0).unwrap();
        assert_eq!(result.pairs, 6);
        assert!(result.exhaustive);
        assert_eq!(result.sup_norm, 4.0);
        // L_2 floor for any k.
        assert!(result.sup_norm >= (result.pairs as f64).sqrt());
    }

    #[test]
    fn sign_search_k3_is_seeded_and_floored() {
        let a = block_sign_search(3, 2000, 11).unwrap();
        let b = block_sign_search(3, 2000, 11).unwrap();
        assert_eq!(a.sup_norm, b.sup_norm);
        assert_eq!(a.pattern, b.pattern);
        assert!(!a.exhaustive);
        assert_eq!(a.pairs, 28);
        assert!(a.sup_norm >= (28.0f64).sqrt() - 1e-12);
        assert!(block_sign_search(4, 0, 0).is_err());
    }

    #[test]
    fn interpolation_equality_cases() {
        // Constants: every sup sits at t = 1 where the weight is 1.
        let c = DyadicStep::constant(2.0).unwrap().refine(4).unwrap();
        let report = interpolation_check(&c, 0.5).unwrap();
        assert!(report.sup_form_pass);
        assert!((report.sup_form_lhs - report.sup_form_rhs).abs() < 1e-12);

        // Indicators: a single active cell value, so both sides reduce to
        // powers of the same weight.
        let ind = DyadicStep::indicator_prefix(4, 5).unwrap();
        for u in [0.25, 0.5, 0.75] {
            let report = interpolation_check(&ind, u).unwrap();
            assert!(report.sup_form_pass);
            assert!(
                (report.sup_form_lhs - report.sup_form_rhs).abs() <= 1e-12 * report.sup_form_rhs
            );
        }

        let zero = DyadicStep::zero(3).unwrap();
        let report = interpolation_check(&zero, 0.3).unwrap();
        assert!(report.sup_form_pass);
        assert!(interpolation_check(&c, 0.0).is_err());
        assert!(interpolation_check(&c, 1.0).is_err());
    }

    #[test]
    fn interpolation_sup_form_on_random_steps() {
        let mut rng = stream_rng(62, 0);
        for t in 0..500 {
            let level = 3 + (t % 4) as u32;
            let x = crate::sampling::random_step(level, 4.0, &mut rng);
            for u in [0.25, 0.5, 0.75] {
                let report = interpolation_check(&x, u).unwrap();
                assert!(
                    report.sup_form_lhs <= report.sup_form_rhs * (1.0 + 1e-12),
                    "u = {u}: lhs {} rhs {}",
                    report.sup_form_lhs,
                    report.sup_form_rhs
                );
            }
        }
    }

    #[test]
    fn bounded_log_witness_basic_run() {
        let report = log_witness_from_bounded(0.25, 2, 8, 0).unwrap();
        assert!(report.pass, "{report:?}");
        assert!(report.witnessed_constant > 0.0);
        assert_eq!(report.checkpoints.len(), 2);
        assert!(report.x_sup <= report.x_sup_bound + 1e-12);

        // Single-block variant.
        let small = log_witness_from_bounded(0.25, 1, 4, 0).unwrap();
        assert!(small.witnessed_constant > 0.0);

        assert!(log_witness_from_bounded(0.0, 2, 8, 0).is_err());
        assert!(log_witness_from_bounded(0.25, 2, 6, 0).is_err());
    }

    #[test]
    fn scale_log_witness_basic_run() {
        let report = log_witness_from_scale(0.0, 0.1, None, 2, 8, 0).unwrap();
        assert!(report.pass, "{report:?}");
        assert!(report.witnessed_constant > 0.0);
        assert!((report.u - 0.5).abs() < 1e-15);
        let v_hi = 0.25 - 0.1;
        assert!((report.v - v_hi / 2.0).abs() < 1e-15);
        for b in &report.block_norms {
            assert!(b.half_ratio > 0.0);
            assert!(b.marcinkiewicz_orlicz_ratio > 0.0);
            assert!(b.sup_form_pass);
        }

        assert!(log_witness_from_scale(0.0, 0.3, None, 2, 8, 0).is_err());
        assert!(log_witness_from_scale(0.0, 0.1, Some(0.3), 2, 8, 0).is_err());
    }

    #[test]
    fn xbar_examples_and_scale_membership() {
        // Last cell value: log_2(2/1) = 1 for every eps; and the matched
        // quasi-norm is 1 because the weights cancel on every cell.
        for eps in [-0.25, 0.0, 0.25] {
            let x = log_weight_minorant(eps, 5).unwrap();
            assert_eq!(*x.values().last().unwrap(), 1.0);
            assert!(x.values().windows(2).all(|w| w[0] >= w[1]));
            assert!((psi_quasinorm(&x, eps).unwrap() - 1.0).abs() < 1e-12);
        }

        // Bounded in its own space as the level grows, divergent in any
        // strictly finer space of the scale.
        let eps = 0.15;
        let own: Vec<f64> = (6..=14)
            .map(|level| {
                marcinkiewicz_norm(&log_weight_minorant(eps, level).unwrap(), eps).unwrap()
            })
            .collect();
        let spread = own.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            / own.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread < 1.5, "own-space norms should stay bounded: {own:?}");

        // In a strictly finer space the norm dominates the quasi-norm
        // value (level+1)^{delta-eps} attained on the first cell, so it
        // diverges at exactly that power-law rate.
        let delta = 0.35;
        let finer: Vec<f64> = (6..=14)
            .map(|level| {
                marcinkiewicz_norm(&log_weight_minorant(eps, level).unwrap(), delta).unwrap()
            })
            .collect();
        for (i, level) in (6..=14u32).enumerate() {
            let floor = ((level + 1) as f64).powf(delta - eps);
            assert!(
                finer[i] >= floor - 1e-9,
                "level {level}: norm {} below divergence floor {floor}",
                finer[i]
            );
        }
        assert!(finer.windows(2).all(|w| w[1] >= w[0] - 1e-9));
    }

    #[test]
    fn bounded_witness_constant_rises_with_epsilon() {
        // The log-weight denominator shrinks faster in eps than the
        // block-sum numerator, so the witnessed constant increases along
        // the sweep; every value stays strictly positive.
        let sweep: Vec<f64> = [0.05, 0.15, 0.25, 0.35, 0.45]
            .iter()
            .map(|&eps| {
                log_witness_from_bounded(eps, 2, 8, 0)
                    .unwrap()
                    .witnessed_constant
            })
            .collect();
        assert!(sweep.iter().all(|b| *b > 0.0));
        assert!(
            sweep.windows(2).all(|w| w[1] > w[0]),
            "sweep not increasing: {sweep:?}"
        );
    }

    #[test]
    fn composite_two_step_witness_chain() {
        // The two witnesses chained at matching indices: the first forces
        // the scale member with index 1/5, the second steps down to index
        // -1/10; the certifying norms stay bounded across levels.
        let first = log_witness_from_bounded(0.2, 2, 8, 0).unwrap();
        assert!(first.pass && first.witnessed_constant > 0.0);
        let second = log_witness_from_scale(0.2, 0.1, None, 2, 8, 0).unwrap();
        assert!(second.pass && second.witnessed_constant > 0.0);

        for eps in [0.2, -0.1] {
            let norms: Vec<f64> = (6..=12)
                .map(|level| {
                    marcinkiewicz_norm(&log_weight_minorant(eps, level).unwrap(), eps).unwrap()
                })
                .collect();
            let spread = norms.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                / norms.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(spread < 1.5, "eps {eps}: extremal norms drift: {norms:?}");
        }
    }

    #[test]
    fn block_spec_validation() {
        assert!(BlockSpec::new(vec![2, 4], vec![1.0]).is_ok());
        assert!(BlockSpec::new(vec![4, 2], vec![1.0]).is_err());
        assert!(BlockSpec::new(vec![2, 4, 8], vec![1.0]).is_err());
        assert!(BlockSpec::new(vec![2, 4], vec![-1.0]).is_err());
        assert!(BlockSpec::new(vec![0, 2], vec![1.0]).is_err());
    }
}
