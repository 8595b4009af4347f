//! Empirical estimators for the constants governing the chaos system:
//! partial-sum (basis) ratios, sign-multiplier (unconditionality) ratios,
//! `l_2`-equivalence ratios, random-sign averages, and best-sign searches.
//!
//! Randomized estimators draw from two coefficient families — i.i.d.
//! standard Gaussians and sparse `±1` entries of density 1/4 — because the
//! equivalence extremes in `L_1` come from structured, not generic,
//! coefficients. Every estimator takes an explicit 64-bit seed and gives
//! each trial its own derived stream, so results are independent of thread
//! scheduling. Sign-space enumeration walks Gray codes within fixed chunks
//! and reduces min/max with a lexicographic tie-break, which keeps parallel
//! runs bit-deterministic.

use serde::{Deserialize, Serialize};

use crate::error::{ChaosError, Result};
use crate::parallel::map_indices;
use crate::sampling::{gaussian_coeffs, prefix_pairs, sparse_pm_coeffs, stream_rng, unit_f64};
use crate::spaces::{norm_of_values, NormSpec};
use crate::walsh::{pair_values, ChaosCoeffs, ChaosPair, SignPattern};

/// Largest pair count enumerated exhaustively (2^20 patterns).
pub const EXHAUSTIVE_PATTERN_LIMIT: usize = 20;
/// Largest pair count for the exact random-sign average (2^14 norms).
pub const EXACT_RUC_LIMIT: usize = 14;
/// Sparse coefficient density used by the sampling families.
pub const SPARSE_DENSITY: f64 = 0.25;

const PATTERN_CHUNK_BITS: u32 = 12;

/// What attained an extreme ratio.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessDetail {
    /// Partial-sum ratio `‖P_m y‖ / ‖P_n y‖`.
    PrefixPair { m: u64, n: u64 },
    /// Sign pattern of a multiplier or search.
    Pattern(SignPattern),
    /// The coefficients alone.
    Coeffs,
}

/// A reproducible extreme: the coefficient family and the index or pattern
/// attaining the reported ratio.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Witness {
    #[serde(rename = "witness_coeffs")]
    pub coeffs: ChaosCoeffs,
    #[serde(rename = "witness_m_n_or_pattern")]
    pub detail: WitnessDetail,
}

/// Outcome of a constant estimation run. The headline witness (attaining
/// `max_ratio`) serializes flat into the report record.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstantReport {
    #[serde(rename = "spec")]
    pub norm_spec: NormSpec,
    #[serde(rename = "samples")]
    pub sample_count: usize,
    pub max_ratio: f64,
    pub min_ratio: f64,
    #[serde(flatten)]
    pub max_witness: Option<Witness>,
    pub min_witness: Option<Witness>,
    pub seed: u64,
    pub runtime_ms: u64,
}

fn draw_family(pairs: &[ChaosPair], seed: u64, trial: u64) -> ChaosCoeffs {
    let mut rng = stream_rng(seed, trial);
    if trial.is_multiple_of(2) {
        gaussian_coeffs(pairs, &mut rng)
    } else {
        sparse_pm_coeffs(pairs, SPARSE_DENSITY, &mut rng)
    }
}

/// Max and min of `‖P_m y‖ / ‖P_n y‖` over all `0 < m < n <= max_pairs`
/// and `trials` coefficient draws, with witnesses.
pub fn basis_constant(
    spec: &NormSpec,
    max_pairs: u64,
    trials: u64,
    seed: u64,
) -> Result<ConstantReport> {
    spec.validate()?;
    if max_pairs == 0 || max_pairs > 21 {
        return Err(ChaosError::ParameterOutOfRange {
            what: "max_pairs",
            value: max_pairs as f64,
            range: "1..=21",
        });
    }
    if trials == 0 {
        return Err(ChaosError::ParameterOutOfRange {
            what: "trials",
            value: 0.0,
            range: "trials >= 1",
        });
    }
    let start = std::time::Instant::now();
    let pairs = prefix_pairs(max_pairs);
    let level = 8u32.max(pairs.last().expect("max_pairs >= 1").j() - 1);
    let cells = 1usize << level;

    struct TrialExtreme {
        max_ratio: f64,
        max_mn: (u64, u64),
        min_ratio: f64,
        min_mn: (u64, u64),
        coeffs: ChaosCoeffs,
    }

    let per_trial: Vec<Result<TrialExtreme>> = map_indices(trials as usize, |t| {
        let coeffs = draw_family(&pairs, seed, t as u64);
        let mut acc = vec![0.0f64; cells];
        let mut prefix_norms = Vec::with_capacity(pairs.len());
        for &pair in &pairs {
            let a = coeffs.get(pair);
            if a != 0.0 {
                let basis = pair_values(pair, level);
                for (v, b) in acc.iter_mut().zip(basis.iter()) {
                    *v += a * b;
                }
            }
            prefix_norms.push(norm_of_values(level, &acc, spec)?);
        }
        let mut extreme = TrialExtreme {
            max_ratio: f64::NEG_INFINITY,
            max_mn: (0, 0),
            min_ratio: f64::INFINITY,
            min_mn: (0, 0),
            coeffs,
        };
        for n in 1..pairs.len() {
            let denom = prefix_norms[n];
            if denom == 0.0 {
                continue;
            }
            for (m, &num) in prefix_norms.iter().enumerate().take(n) {
                let ratio = num / denom;
                if ratio > extreme.max_ratio {
                    extreme.max_ratio = ratio;
                    extreme.max_mn = (m as u64 + 1, n as u64 + 1);
                }
                if ratio < extreme.min_ratio {
                    extreme.min_ratio = ratio;
                    extreme.min_mn = (m as u64 + 1, n as u64 + 1);
                }
            }
        }
        Ok(extreme)
    });

    let mut max_ratio = f64::NEG_INFINITY;
    let mut min_ratio = f64::INFINITY;
    let mut max_witness = None;
    let mut min_witness = None;
    for trial in per_trial {
        let trial = trial?;
        if trial.max_ratio > max_ratio {
            max_ratio = trial.max_ratio;
            max_witness = Some(Witness {
                coeffs: trial.coeffs.clone(),
                detail: WitnessDetail::PrefixPair {
                    m: trial.max_mn.0,
                    n: trial.max_mn.1,
                },
            });
        }
        if trial.min_ratio < min_ratio {
            min_ratio = trial.min_ratio;
            min_witness = Some(Witness {
                coeffs: trial.coeffs,
                detail: WitnessDetail::PrefixPair {
                    m: trial.min_mn.0,
                    n: trial.min_mn.1,
                },
            });
        }
    }
    Ok(ConstantReport {
        norm_spec: *spec,
        sample_count: trials as usize,
        max_ratio,
        min_ratio,
        max_witness,
        min_witness,
        seed,
        runtime_ms: start.elapsed().as_millis() as u64,
    })
}

/// Re-evaluate a prefix-pair witness ratio from a basis-constant report.
pub fn reevaluate_prefix_witness(spec: &NormSpec, witness: &Witness) -> Result<f64> {
    let WitnessDetail::PrefixPair { m, n } = witness.detail else {
        return Err(ChaosError::InvalidIndex {
            what: "witness detail",
            value: 0,
        });
    };
    let level = 8u32.max(witness.coeffs.max_index().saturating_sub(1));
    let num = crate::walsh::partial_sum(&witness.coeffs, m, level)?;
    let den = crate::walsh::partial_sum(&witness.coeffs, n, level)?;
    Ok(crate::spaces::norm(&num, spec)? / crate::spaces::norm(&den, spec)?)
}

/// Lexicographic order on patterns over the given pair count: the sign of
/// the first pair weighs most, `+1` before `-1`. Bit `b` set means pair `b`
/// carries `-1`.
fn pattern_lex_less(a: u64, b: u64, pair_count: usize) -> bool {
    for bit in 0..pair_count {
        let sa = (a >> bit) & 1;
        let sb = (b >> bit) & 1;
        if sa != sb {
            return sa < sb;
        }
    }
    false
}

/// Basis vectors `a_{i,j}·(r_i r_j)` for the pairs of `c` in linear order.
fn scaled_pair_basis(c: &ChaosCoeffs, level: u32) -> Vec<Vec<f64>> {
    c.iter()
        .map(|(pair, a)| {
            let mut values = pair_values(pair, level);
            for v in &mut values {
                *v *= a;
            }
            values
        })
        .collect()
}

fn synthesis_level(c: &ChaosCoeffs) -> u32 {
    c.max_index().saturating_sub(1).max(1)
}

/// Walk every sign pattern over `basis` in Gray-code order within fixed
/// chunks; `visit` sees the pattern mask and the current signed sum. The
/// per-chunk accumulators come back in chunk order.
fn scan_sign_patterns<A, V>(basis: &[Vec<f64>], visit: V) -> Result<Vec<A>>
where
    A: Send,
    V: Fn(u64, &[f64], &mut Option<A>) -> Result<()> + Sync + Send,
{
    let pair_count = basis.len();
    assert!(pair_count < 63, "pattern space must fit in u64");
    let total: u64 = 1 << pair_count;
    let chunk = (1u64 << PATTERN_CHUNK_BITS).min(total);
    let chunks = total.div_ceil(chunk);
    let cells = basis.first().map_or(0, Vec::len);

    let results: Vec<Result<Option<A>>> = map_indices(chunks as usize, |chunk_index| {
        let lo = chunk_index as u64 * chunk;
        let hi = (lo + chunk).min(total);
        // Signed sum for the Gray code of `lo`.
        let gray0 = lo ^ (lo >> 1);
        let mut values = vec![0.0f64; cells];
        for (b, vec) in basis.iter().enumerate() {
            let sign = if (gray0 >> b) & 1 == 1 { -1.0 } else { 1.0 };
            for (v, x) in values.iter_mut().zip(vec.iter()) {
                *v += sign * x;
            }
        }
        let mut acc = None;
        for t in lo..hi {
            let pattern = t ^ (t >> 1);
            visit(pattern, &values, &mut acc)?;
            if t + 1 < hi {
                let flip = (t + 1).trailing_zeros() as usize;
                let next = (t + 1) ^ ((t + 1) >> 1);
                let direction = if (next >> flip) & 1 == 1 { -2.0 } else { 2.0 };
                for (v, x) in values.iter_mut().zip(basis[flip].iter()) {
                    *v += direction * x;
                }
            }
        }
        Ok(acc)
    });

    let mut out = Vec::with_capacity(results.len());
    for r in results {
        if let Some(a) = r? {
            out.push(a);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy)]
struct PatternExtreme {
    max_norm: f64,
    max_pattern: u64,
    min_norm: f64,
    min_pattern: u64,
}

fn pattern_extremes(basis: &[Vec<f64>], level: u32, spec: &NormSpec) -> Result<PatternExtreme> {
    let pair_count = basis.len();
    let chunked = scan_sign_patterns(
        basis,
        |pattern, values, acc: &mut Option<PatternExtreme>| {
            let norm = norm_of_values(level, values, spec)?;
            let entry = acc.get_or_insert(PatternExtreme {
                max_norm: norm,
                max_pattern: pattern,
                min_norm: norm,
                min_pattern: pattern,
            });
            if norm > entry.max_norm
                || (norm == entry.max_norm
                    && pattern_lex_less(pattern, entry.max_pattern, pair_count))
            {
                entry.max_norm = norm;
                entry.max_pattern = pattern;
            }
            if norm < entry.min_norm
                || (norm == entry.min_norm
                    && pattern_lex_less(pattern, entry.min_pattern, pair_count))
            {
                entry.min_norm = norm;
                entry.min_pattern = pattern;
            }
            Ok(())
        },
    )?;

    let mut combined: Option<PatternExtreme> = None;
    for e in chunked {
        match &mut combined {
            None => combined = Some(e),
            Some(total) => {
                if e.max_norm > total.max_norm
                    || (e.max_norm == total.max_norm
                        && pattern_lex_less(e.max_pattern, total.max_pattern, pair_count))
                {
                    total.max_norm = e.max_norm;
                    total.max_pattern = e.max_pattern;
                }
                if e.min_norm < total.min_norm
                    || (e.min_norm == total.min_norm
                        && pattern_lex_less(e.min_pattern, total.min_pattern, pair_count))
                {
                    total.min_norm = e.min_norm;
                    total.min_pattern = e.min_pattern;
                }
            }
        }
    }
    combined.ok_or(ChaosError::EmptyCoefficients)
}

/// Exhaustive unconditionality ratio: max over all sign patterns of
/// `‖Σ θ_{i,j} a_{i,j} r_i r_j‖ / ‖Σ a_{i,j} r_i r_j‖`.
pub fn uncond_constant(spec: &NormSpec, c: &ChaosCoeffs) -> Result<ConstantReport> {
    spec.validate()?;
    if c.is_empty() {
        return Err(ChaosError::EmptyCoefficients);
    }
    if c.len() > EXHAUSTIVE_PATTERN_LIMIT {
        return Err(ChaosError::TooManyPairs {
            pairs: c.len(),
            limit: EXHAUSTIVE_PATTERN_LIMIT,
        });
    }
    let start = std::time::Instant::now();
    let level = synthesis_level(c);
    let basis = scaled_pair_basis(c, level);
    let base = norm_of_values(level, crate::walsh::synthesize(c, level)?.values(), spec)?;
    if base == 0.0 {
        return Err(ChaosError::EmptyCoefficients);
    }
    let extremes = pattern_extremes(&basis, level, spec)?;
    let pairs = c.pairs();
    Ok(ConstantReport {
        norm_spec: *spec,
        sample_count: 1usize << c.len(),
        max_ratio: extremes.max_norm / base,
        min_ratio: extremes.min_norm / base,
        max_witness: Some(Witness {
            coeffs: c.clone(),
            detail: WitnessDetail::Pattern(SignPattern::from_mask(&pairs, extremes.max_pattern)),
        }),
        min_witness: Some(Witness {
            coeffs: c.clone(),
            detail: WitnessDetail::Pattern(SignPattern::from_mask(&pairs, extremes.min_pattern)),
        }),
        seed: 0,
        runtime_ms: start.elapsed().as_millis() as u64,
    })
}

/// Distribution of `‖Σ a_{i,j} r_i r_j‖_X / ‖a‖_2` over random draws from
/// the Gaussian and sparse families.
pub fn equivalence_ratios(
    spec: &NormSpec,
    max_index: u32,
    trials: u64,
    seed: u64,
) -> Result<ConstantReport> {
    spec.validate()?;
    if !(2..=10).contains(&max_index) {
        return Err(ChaosError::ParameterOutOfRange {
            what: "max_index",
            value: max_index as f64,
            range: "2..=10",
        });
    }
    if trials == 0 {
        return Err(ChaosError::ParameterOutOfRange {
            what: "trials",
            value: 0.0,
            range: "trials >= 1",
        });
    }
    let start = std::time::Instant::now();
    let pairs = crate::sampling::all_pairs(max_index);
    let level = (max_index - 1).max(1);

    let per_trial: Vec<Result<(f64, ChaosCoeffs)>> = map_indices(trials as usize, |t| {
        // Redraw within the trial's own stream until the draw is nonzero;
        // only an all-zero sparse draw ever repeats.
        let mut rng = stream_rng(seed, t as u64);
        let coeffs = loop {
            let candidate = if t.is_multiple_of(2) {
                gaussian_coeffs(&pairs, &mut rng)
            } else {
                sparse_pm_coeffs(&pairs, SPARSE_DENSITY, &mut rng)
            };
            if candidate.l2_norm() > 0.0 {
                break candidate;
            }
        };
        let x = crate::walsh::synthesize(&coeffs, level)?;
        let ratio = norm_of_values(level, x.values(), spec)? / coeffs.l2_norm();
        Ok((ratio, coeffs))
    });

    let mut max_ratio = f64::NEG_INFINITY;
    let mut min_ratio = f64::INFINITY;
    let mut max_witness = None;
    let mut min_witness = None;
    for item in per_trial {
        let (ratio, coeffs) = item?;
        if ratio > max_ratio {
            max_ratio = ratio;
            max_witness = Some(Witness {
                coeffs: coeffs.clone(),
                detail: WitnessDetail::Coeffs,
            });
        }
        if ratio < min_ratio {
            min_ratio = ratio;
            min_witness = Some(Witness {
                coeffs,
                detail: WitnessDetail::Coeffs,
            });
        }
    }
    Ok(ConstantReport {
        norm_spec: *spec,
        sample_count: trials as usize,
        max_ratio,
        min_ratio,
        max_witness,
        min_witness,
        seed,
        runtime_ms: start.elapsed().as_millis() as u64,
    })
}

/// How to average `‖Σ ±a_{i,j} r_i r_j‖` over random signs.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub enum RucMode {
    /// Equal-weight average over all `2^pairs` sign assignments.
    Exact,
    /// Seeded sample mean over the given number of sign draws.
    MonteCarlo { samples: u64 },
}

/// The random-sign average with its sampling metadata.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RucEstimate {
    pub mean: f64,
    /// Standard error of the mean (Monte Carlo mode only).
    pub std_error: Option<f64>,
    pub min_norm: f64,
    pub max_norm: f64,
    pub samples: u64,
}

/// Average of `‖Σ θ a φ‖_X` over sign assignments: the random
/// unconditionality average of the coefficient family.
pub fn ruc_average(
    spec: &NormSpec,
    c: &ChaosCoeffs,
    mode: RucMode,
    seed: u64,
) -> Result<RucEstimate> {
    spec.validate()?;
    if c.is_empty() {
        return Err(ChaosError::EmptyCoefficients);
    }
    let level = synthesis_level(c);
    let basis = scaled_pair_basis(c, level);
    match mode {
        RucMode::Exact => {
            if c.len() > EXACT_RUC_LIMIT {
                return Err(ChaosError::TooManyPairs {
                    pairs: c.len(),
                    limit: EXACT_RUC_LIMIT,
                });
            }
            struct ChunkSum {
                sum: f64,
                count: u64,
                min: f64,
                max: f64,
            }
            let chunks = scan_sign_patterns(&basis, |_, values, acc: &mut Option<ChunkSum>| {
                let norm = norm_of_values(level, values, spec)?;
                let entry = acc.get_or_insert(ChunkSum {
                    sum: 0.0,
                    count: 0,
                    min: f64::INFINITY,
                    max: f64::NEG_INFINITY,
                });
                entry.sum += norm;
                entry.count += 1;
                entry.min = entry.min.min(norm);
                entry.max = entry.max.max(norm);
                Ok(())
            })?;
            let mut sum = 0.0;
            let mut count = 0;
            let mut min = f64::INFINITY;
            let mut max = f64::NEG_INFINITY;
            for chunk in chunks {
                sum += chunk.sum;
                count += chunk.count;
                min = min.min(chunk.min);
                max = max.max(chunk.max);
            }
            Ok(RucEstimate {
                mean: sum / count as f64,
                std_error: None,
                min_norm: min,
                max_norm: max,
                samples: count,
            })
        }
        RucMode::MonteCarlo { samples } => {
            if samples == 0 {
                return Err(ChaosError::ParameterOutOfRange {
                    what: "samples",
                    value: 0.0,
                    range: "samples >= 1",
                });
            }
            let cells = 1usize << level;
            let norms: Vec<Result<f64>> = map_indices(samples as usize, |s| {
                let mut rng = stream_rng(seed, s as u64);
                let mut values = vec![0.0f64; cells];
                for vec in &basis {
                    let sign = if unit_f64(&mut rng) < 0.5 { 1.0 } else { -1.0 };
                    for (v, x) in values.iter_mut().zip(vec.iter()) {
                        *v += sign * x;
                    }
                }
                norm_of_values(level, &values, spec)
            });
            let mut sum = 0.0;
            let mut min = f64::INFINITY;
            let mut max = f64::NEG_INFINITY;
            let mut collected = Vec::with_capacity(norms.len());
            for n in norms {
                let n = n?;
                sum += n;
                min = min.min(n);
                max = max.max(n);
                collected.push(n);
            }
            let mean = sum / samples as f64;
            let var = collected
                .iter()
                .map(|n| (n - mean) * (n - mean))
                .sum::<f64>()
                / (samples.max(2) - 1) as f64;
            Ok(RucEstimate {
                mean,
                std_error: Some((var / samples as f64).sqrt()),
                min_norm: min,
                max_norm: max,
                samples,
            })
        }
    }
}

/// Minimize `‖Σ θ a φ‖_X` over sign patterns: exhaustive for small pair
/// counts, otherwise seeded greedy bit-flip descent with restarts within
/// `budget` norm evaluations. Ties go to the lexicographically smallest
/// pattern, making the result deterministic.
pub fn best_signs(
    spec: &NormSpec,
    c: &ChaosCoeffs,
    budget: u64,
    seed: u64,
) -> Result<(SignPattern, f64)> {
    spec.validate()?;
    if c.is_empty() {
        return Err(ChaosError::EmptyCoefficients);
    }
    let level = synthesis_level(c);
    let basis = scaled_pair_basis(c, level);
    let pairs = c.pairs();

    if c.len() <= EXHAUSTIVE_PATTERN_LIMIT {
        let extremes = pattern_extremes(&basis, level, spec)?;
        return Ok((
            SignPattern::from_mask(&pairs, extremes.min_pattern),
            extremes.min_norm,
        ));
    }

    let pair_count = basis.len();
    let cells = basis[0].len();
    let mut evaluations = 0u64;
    let mut best: Option<(f64, u64)> = None;
    let mut restart = 0u64;
    let mut values = vec![0.0f64; cells];
    let mut candidate = vec![0.0f64; cells];

    while evaluations < budget {
        let mut rng = stream_rng(seed, restart);
        restart += 1;
        let mut pattern = 0u64;
        for b in 0..pair_count {
            if unit_f64(&mut rng) < 0.5 {
                pattern |= 1 << b;
            }
        }
        values.fill(0.0);
        for (b, vec) in basis.iter().enumerate() {
            let sign = if (pattern >> b) & 1 == 1 { -1.0 } else { 1.0 };
            for (v, x) in values.iter_mut().zip(vec.iter()) {
                *v += sign * x;
            }
        }
        let mut current = norm_of_values(level, &values, spec)?;
        evaluations += 1;

        loop {
            let mut improved: Option<(f64, usize)> = None;
            for (b, vec) in basis.iter().enumerate() {
                if evaluations >= budget {
                    break;
                }
                let direction = if (pattern >> b) & 1 == 1 { 2.0 } else { -2.0 };
                candidate.copy_from_slice(&values);
                for (v, x) in candidate.iter_mut().zip(vec.iter()) {
                    *v += direction * x;
                }
                let norm = norm_of_values(level, &candidate, spec)?;
                evaluations += 1;
                if norm < current && improved.is_none_or(|(n, _)| norm < n) {
                    improved = Some((norm, b));
                }
            }
            match improved {
                Some((norm, b)) => {
                    let direction = if (pattern >> b) & 1 == 1 { 2.0 } else { -2.0 };
                    for (v, x) in values.iter_mut().zip(basis[b].iter()) {
                        *v += direction * x;
                    }
                    pattern ^= 1 << b;
                    current = norm;
                }
                None => break,
            }
            if evaluations >= budget {
                break;
            }
        }

        let is_better = match best {
            None => true,
            Some((norm, pat)) => {
                current < norm || (current == norm && pattern_lex_less(pattern, pat, pair_count))
            }
        };
        if is_better {
            best = Some((current, pattern));
        }
    }

    let (norm, pattern) = best.ok_or(ChaosError::NonConvergence {
        what: "sign descent",
        iterations: 0,
    })?;
    Ok((SignPattern::from_mask(&pairs, pattern), norm))
}
