//! Step functions on the square `(0,1] × (0,1]`: the multiple Rademacher
//! system `r_i(s)·r_j(t)`, mixed norms `X[Y]` with outer `L_1` or `L_∞`,
//! the Orlicz norm over the product measure, and the comparison between the
//! line and square realizations of a chaos expansion.
//!
//! Values are stored row-major with rows indexed by the `t`-cell, so slices
//! `x(·, t)` are contiguous. The rearrangement of a square function sorts
//! the grid multiset by product measure into a one-dimensional decreasing
//! step at level `level_s + level_t`.

use serde::{Deserialize, Serialize};

use crate::dyadic::DyadicStep;
use crate::error::{ChaosError, Result};
use crate::parallel::map_indices;
use crate::spaces::{marcinkiewicz_norm, norm, orlicz_norm_of_values, NFunction, NormSpec};
use crate::walsh::{rademacher_sign, ChaosCoeffs};

const MAX_GRID_LEVEL: u32 = 26;

#[derive(Deserialize)]
struct RawDyadicStep2D {
    level_s: u32,
    level_t: u32,
    values: Vec<f64>,
}

/// A real function on the square constant on a `2^{level_s} × 2^{level_t}`
/// grid of half-open rectangles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDyadicStep2D")]
pub struct DyadicStep2D {
    level_s: u32,
    level_t: u32,
    /// Row-major, rows indexed by the t-cell: `values[t·2^{level_s} + s]`.
    values: Vec<f64>,
}

impl TryFrom<RawDyadicStep2D> for DyadicStep2D {
    type Error = ChaosError;

    fn try_from(raw: RawDyadicStep2D) -> Result<Self> {
        DyadicStep2D::new(raw.level_s, raw.level_t, raw.values)
    }
}

impl DyadicStep2D {
    pub fn new(level_s: u32, level_t: u32, values: Vec<f64>) -> Result<Self> {
        if level_s + level_t > MAX_GRID_LEVEL {
            return Err(ChaosError::LevelTooLarge {
                level: level_s + level_t,
                max: MAX_GRID_LEVEL,
            });
        }
        let expected = 1usize << (level_s + level_t);
        if values.len() != expected {
            return Err(ChaosError::LengthMismatch {
                level: level_s + level_t,
                expected,
                got: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(ChaosError::NonFiniteValue { index });
        }
        Ok(Self {
            level_s,
            level_t,
            values,
        })
    }

    pub(crate) fn from_values_unchecked(level_s: u32, level_t: u32, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), 1usize << (level_s + level_t));
        Self {
            level_s,
            level_t,
            values,
        }
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::new(0, 0, vec![c])
    }

    /// The separable function `f(s)·g(t)`.
    pub fn separable(f: &DyadicStep, g: &DyadicStep) -> Result<Self> {
        let ns = f.len();
        let mut values = Vec::with_capacity(ns * g.len());
        for &gt in g.values() {
            for &fs in f.values() {
                values.push(fs * gt);
            }
        }
        Self::new(f.level(), g.level(), values)
    }

    pub fn level_s(&self) -> u32 {
        self.level_s
    }

    pub fn level_t(&self) -> u32 {
        self.level_t
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cells_s(&self) -> usize {
        1 << self.level_s
    }

    pub fn cells_t(&self) -> usize {
        1 << self.level_t
    }

    /// The slice `x(·, t)` for a 0-based t-cell.
    pub fn slice_at_t(&self, t_cell: usize) -> DyadicStep {
        let ns = self.cells_s();
        let row = &self.values[t_cell * ns..(t_cell + 1) * ns];
        DyadicStep::from_values_unchecked(self.level_s, row.to_vec())
    }

    /// Integral over the square under the product measure.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.level_s != other.level_s || self.level_t != other.level_t {
            return Err(ChaosError::LengthMismatch {
                level: other.level_s + other.level_t,
                expected: self.values.len(),
                got: other.values.len(),
            });
        }
        let values = self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| a * b)
            .collect();
        Ok(Self::from_values_unchecked(
            self.level_s,
            self.level_t,
            values,
        ))
    }

    /// Grid values sorted by product measure into a one-dimensional
    /// decreasing step on `(0, 1]`.
    pub fn rearrangement_1d(&self) -> DyadicStep {
        let mut values: Vec<f64> = self.values.iter().map(|v| v.abs()).collect();
        values.sort_unstable_by(|a, b| b.total_cmp(a));
        DyadicStep::from_values_unchecked(self.level_s + self.level_t, values)
    }
}

/// The product `r_i(s)·r_j(t)` on the square at the given common level.
pub fn multiple_rademacher(i: u32, j: u32, level: u32) -> Result<DyadicStep2D> {
    if i == 0 || j == 0 {
        return Err(ChaosError::InvalidIndex {
            what: "Rademacher index",
            value: 0,
        });
    }
    if 2 * level > MAX_GRID_LEVEL {
        return Err(ChaosError::LevelTooLarge {
            level: 2 * level,
            max: MAX_GRID_LEVEL,
        });
    }
    let required = i.max(j).saturating_sub(1);
    if level < required {
        return Err(ChaosError::LevelTooCoarse {
            what: format!("r_{i}(s)·r_{j}(t)"),
            level,
            required,
        });
    }
    let n = 1usize << level;
    let mut values = Vec::with_capacity(n * n);
    for t_cell in 0..n {
        let tsign = rademacher_sign(j, level, t_cell);
        for s_cell in 0..n {
            values.push(rademacher_sign(i, level, s_cell) * tsign);
        }
    }
    DyadicStep2D::new(level, level, values)
}

/// `Σ a_{i,j} r_i(s) r_j(t)` on the square.
pub fn synthesize_2d(coeffs: &ChaosCoeffs, level: u32) -> Result<DyadicStep2D> {
    if 2 * level > MAX_GRID_LEVEL {
        return Err(ChaosError::LevelTooLarge {
            level: 2 * level,
            max: MAX_GRID_LEVEL,
        });
    }
    let required = coeffs.max_index().saturating_sub(1);
    if level < required {
        return Err(ChaosError::LevelTooCoarse {
            what: format!("square expansion with max index {}", coeffs.max_index()),
            level,
            required,
        });
    }
    let n = 1usize << level;
    let mut values = vec![0.0f64; n * n];
    for (pair, a) in coeffs.iter() {
        if a == 0.0 {
            continue;
        }
        for t_cell in 0..n {
            let tsign = a * rademacher_sign(pair.j(), level, t_cell);
            let row = &mut values[t_cell * n..(t_cell + 1) * n];
            for (s_cell, v) in row.iter_mut().enumerate() {
                *v += rademacher_sign(pair.i(), level, s_cell) * tsign;
            }
        }
    }
    DyadicStep2D::new(level, level, values)
}

/// Outer norm of the mixed-norm construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OuterNorm {
    L1,
    LInf,
}

/// Mixed norm `‖ t ↦ ‖x(·,t)‖_inner ‖_outer`: the inner norm is evaluated
/// exactly on every t-slice, then averaged or majorized over t.
pub fn mixed_norm(x: &DyadicStep2D, outer: OuterNorm, inner: &NormSpec) -> Result<f64> {
    inner.validate()?;
    let slice_norms: Vec<Result<f64>> =
        map_indices(x.cells_t(), |t_cell| norm(&x.slice_at_t(t_cell), inner));
    let mut collected = Vec::with_capacity(slice_norms.len());
    for n in slice_norms {
        collected.push(n?);
    }
    Ok(match outer {
        OuterNorm::L1 => collected.iter().sum::<f64>() / collected.len() as f64,
        OuterNorm::LInf => collected.iter().fold(0.0, |acc, v| acc.max(*v)),
    })
}

/// Luxemburg norm over the square's product measure.
pub fn orlicz_norm_2d(x: &DyadicStep2D, a: NFunction) -> Result<f64> {
    orlicz_norm_of_values(x.values(), a)
}

/// Norm of a square function for the four families; Marcinkiewicz norms go
/// through the product-measure rearrangement.
pub fn norm_2d(x: &DyadicStep2D, spec: &NormSpec) -> Result<f64> {
    spec.validate()?;
    match *spec {
        NormSpec::Lp { .. } | NormSpec::Sup => crate::spaces::norm(&x.rearrangement_1d(), spec),
        NormSpec::Orlicz { nfunction } => orlicz_norm_2d(x, nfunction),
        NormSpec::Marcinkiewicz { epsilon } => marcinkiewicz_norm(&x.rearrangement_1d(), epsilon),
    }
}

/// The three mixed/product Orlicz norms of one function and the two
/// imbedding comparisons between them.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MixedNormChain {
    pub linf_inner: f64,
    pub product: f64,
    pub l1_inner: f64,
    /// `‖x‖_{L_A(square)} <= ‖x‖_{L_∞[L_A]}`, constant 1.
    pub first_margin: f64,
    pub first_pass: bool,
    /// `‖x‖_{L_1[L_A]} / ‖x‖_{L_A(square)}`; bounded by a constant that is
    /// measured empirically, not asserted.
    pub l1_to_product_ratio: f64,
}

/// Evaluate the mixed-norm chain for one square function.
pub fn mixed_norm_chain(x: &DyadicStep2D, a: NFunction) -> Result<MixedNormChain> {
    let inner = NormSpec::Orlicz { nfunction: a };
    let linf_inner = mixed_norm(x, OuterNorm::LInf, &inner)?;
    let product = orlicz_norm_2d(x, a)?;
    let l1_inner = mixed_norm(x, OuterNorm::L1, &inner)?;
    let first_margin = linf_inner - product;
    Ok(MixedNormChain {
        linf_inner,
        product,
        l1_inner,
        first_margin,
        first_pass: product <= linf_inner * (1.0 + 1e-9) + 1e-15,
        l1_to_product_ratio: if product == 0.0 {
            0.0
        } else {
            l1_inner / product
        },
    })
}

/// Norms of the same coefficient family realized on the line
/// (`Σ a_{i,j} r_i r_j`) and on the square (`Σ a_{i,j} r_i(s) r_j(t)`).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LineSquareComparison {
    pub line_norm: f64,
    pub square_norm: f64,
    pub ratio: f64,
}

/// Compare the line and square realizations of a chaos expansion in one
/// norm.
pub fn compare_line_and_square(
    coeffs: &ChaosCoeffs,
    spec: &NormSpec,
    level: u32,
) -> Result<LineSquareComparison> {
    if coeffs.is_empty() {
        return Err(ChaosError::EmptyCoefficients);
    }
    let line = crate::walsh::synthesize(coeffs, level)?;
    let square = synthesize_2d(coeffs, level)?;
    let line_norm = norm(&line, spec)?;
    let square_norm = norm_2d(&square, spec)?;
    Ok(LineSquareComparison {
        line_norm,
        square_norm,
        ratio: line_norm / square_norm,
    })
}
