//! Exact arithmetic, measure, and rearrangement for step functions constant
//! on dyadic cells of `(0, 1]`.
//!
//! A [`DyadicStep`] at level `n` stores `2^n` values; cell `c` (1-based)
//! carries the constant value on `((c-1)·2^-n, c·2^-n]`. Endpoints form a
//! null set and are ignored throughout. Refining a step to a finer level
//! replicates cell values exactly, so two steps refined to a common level and
//! equal cell-by-cell represent the same function.

use serde::{Deserialize, Serialize};

use crate::error::{ChaosError, Result};

/// Finest representable resolution (2^30 cells).
pub const MAX_LEVEL: u32 = 30;

/// Default absolute tolerance for equimeasurability checks. All chaos
/// constructions here are exact in floating point; the tolerance only
/// absorbs accumulated rounding.
pub const DEFAULT_EQUIMEASURABLE_TOL: f64 = 1e-9;

#[derive(Deserialize)]
struct RawDyadicStep {
    level: u32,
    values: Vec<f64>,
}

/// A real function on `(0, 1]` constant on `2^level` equal dyadic cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDyadicStep")]
pub struct DyadicStep {
    level: u32,
    values: Vec<f64>,
}

impl TryFrom<RawDyadicStep> for DyadicStep {
    type Error = ChaosError;

    fn try_from(raw: RawDyadicStep) -> Result<Self> {
        DyadicStep::new(raw.level, raw.values)
    }
}

impl DyadicStep {
    /// Build a step function from explicit cell values.
    pub fn new(level: u32, values: Vec<f64>) -> Result<Self> {
        if level > MAX_LEVEL {
            return Err(ChaosError::LevelTooLarge {
                level,
                max: MAX_LEVEL,
            });
        }
        let expected = 1usize << level;
        if values.len() != expected {
            return Err(ChaosError::LengthMismatch {
                level,
                expected,
                got: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(ChaosError::NonFiniteValue { index });
        }
        Ok(Self { level, values })
    }

    /// Internal constructor for values produced by operations that preserve
    /// the invariants.
    pub(crate) fn from_values_unchecked(level: u32, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), 1usize << level);
        Self { level, values }
    }

    /// The constant function `c`.
    pub fn constant(c: f64) -> Result<Self> {
        Self::new(0, vec![c])
    }

    /// The zero function at the given level.
    pub fn zero(level: u32) -> Result<Self> {
        if level > MAX_LEVEL {
            return Err(ChaosError::LevelTooLarge {
                level,
                max: MAX_LEVEL,
            });
        }
        Ok(Self::from_values_unchecked(level, vec![0.0; 1 << level]))
    }

    /// Indicator of `(0, cells·2^-level]`.
    pub fn indicator_prefix(level: u32, cells: usize) -> Result<Self> {
        if level > MAX_LEVEL {
            return Err(ChaosError::LevelTooLarge {
                level,
                max: MAX_LEVEL,
            });
        }
        let n = 1usize << level;
        if cells > n {
            return Err(ChaosError::InvalidIndex {
                what: "indicator prefix length",
                value: cells as u64,
            });
        }
        let mut values = vec![0.0; n];
        values[..cells].fill(1.0);
        Ok(Self::from_values_unchecked(level, values))
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell width `2^-level`.
    pub fn cell_width(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    /// Replicate each cell value so the function is represented at a finer
    /// level; the function itself is unchanged. Coarsening is lossy and
    /// refused (averaging lives in [`crate::walsh::sigma_k`]).
    pub fn refine(&self, target: u32) -> Result<Self> {
        if target < self.level {
            return Err(ChaosError::CoarseningForbidden {
                level: self.level,
                target,
            });
        }
        if target > MAX_LEVEL {
            return Err(ChaosError::LevelTooLarge {
                level: target,
                max: MAX_LEVEL,
            });
        }
        if target == self.level {
            return Ok(self.clone());
        }
        let reps = 1usize << (target - self.level);
        let mut values = Vec::with_capacity(self.values.len() * reps);
        for &v in &self.values {
            values.extend(std::iter::repeat_n(v, reps));
        }
        Ok(Self::from_values_unchecked(target, values))
    }

    fn zip_with(&self, other: &Self, op: impl Fn(f64, f64) -> f64) -> Self {
        let level = self.level.max(other.level);
        let a = self.refine(level).expect("refining to max level");
        let b = other.refine(level).expect("refining to max level");
        let values = a
            .values
            .iter()
            .zip(b.values.iter())
            .map(|(&x, &y)| op(x, y))
            .collect();
        Self::from_values_unchecked(level, values)
    }

    /// Cell-wise sum at the common refinement.
    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    /// Cell-wise difference at the common refinement.
    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    /// Cell-wise product at the common refinement.
    pub fn mul(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a * b)
    }

    /// Cell-wise absolute value.
    pub fn abs(&self) -> Self {
        Self::from_values_unchecked(self.level, self.values.iter().map(|v| v.abs()).collect())
    }

    /// Cell-wise multiple `alpha · x`.
    pub fn scale(&self, alpha: f64) -> Self {
        Self::from_values_unchecked(self.level, self.values.iter().map(|v| alpha * v).collect())
    }

    /// In-place `self += alpha · other`, both already at the same level.
    pub(crate) fn axpy_in_place(&mut self, alpha: f64, other: &Self) {
        debug_assert_eq!(self.level, other.level);
        for (a, b) in self.values.iter_mut().zip(other.values.iter()) {
            *a += alpha * b;
        }
    }

    /// Lebesgue integral over `(0, 1]`: `2^-level · Σ values`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_width()
    }

    /// Largest absolute cell value (the essential sup).
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Non-increasing rearrangement of `|x|` at the same level.
    pub fn rearrangement(&self) -> Self {
        let mut values: Vec<f64> = self.values.iter().map(|v| v.abs()).collect();
        values.sort_unstable_by(|a, b| b.total_cmp(a));
        Self::from_values_unchecked(self.level, values)
    }

    /// Value at a point `t` in `(0, 1]` (the cell containing `t`).
    pub fn value_at(&self, t: f64) -> Result<f64> {
        if !(t > 0.0 && t <= 1.0) {
            return Err(ChaosError::PointOutOfDomain { t });
        }
        let n = self.values.len();
        let cell = (t * n as f64).ceil() as usize;
        let cell = cell.clamp(1, n);
        Ok(self.values[cell - 1])
    }

    /// Cell-by-cell comparison at the common refinement within `tol`.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        let level = self.level.max(other.level);
        let a = self.refine(level).expect("refining to max level");
        let b = other.refine(level).expect("refining to max level");
        a.values
            .iter()
            .zip(b.values.iter())
            .all(|(&x, &y)| (x - y).abs() <= tol)
    }
}

/// True iff `x` and `y` have rearrangements agreeing cell-by-cell within
/// `tol` at the common refinement.
pub fn equimeasurable(x: &DyadicStep, y: &DyadicStep, tol: f64) -> bool {
    x.rearrangement().approx_eq(&y.rearrangement(), tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_step, stream_rng};
    use proptest::prelude::*;

    #[test]
    fn construction_validates_length_and_finiteness() {
        assert!(DyadicStep::new(1, vec![1.0]).is_err());
        assert!(DyadicStep::new(1, vec![1.0, f64::NAN]).is_err());
        assert!(DyadicStep::new(0, vec![1.0]).is_ok());
        assert!(DyadicStep::new(1, vec![1.0, -1.0]).is_ok());
        let quad = DyadicStep::new(2, vec![3.0, 1.0, 1.0, 3.0]).unwrap();
        assert_eq!(quad.integral(), 2.0);
    }

    #[test]
    fn refine_replicates_cells() {
        let one = DyadicStep::constant(1.0).unwrap();
        let fine = one.refine(3).unwrap();
        assert_eq!(fine.level(), 3);
        assert!(fine.values().iter().all(|&v| v == 1.0));

        let two = DyadicStep::new(1, vec![1.0, -1.0]).unwrap();
        assert_eq!(two.refine(2).unwrap().values(), &[1.0, 1.0, -1.0, -1.0]);

        assert!(matches!(
            two.refine(0),
            Err(ChaosError::CoarseningForbidden { .. })
        ));
    }

    #[test]
    fn refine_preserves_integral_on_random_steps() {
        let mut rng = stream_rng(11, 0);
        for _ in 0..100 {
            let x = random_step(5, 2.0, &mut rng);
            let fine = x.refine(8).unwrap();
            assert!((x.integral() - fine.integral()).abs() < 1e-12);
        }
    }

    #[test]
    fn pointwise_identities() {
        let r2 = DyadicStep::new(1, vec![1.0, -1.0]).unwrap();
        let sq = r2.mul(&r2);
        assert!(sq.approx_eq(&DyadicStep::constant(1.0).unwrap(), 0.0));

        let cancel = r2.add(&r2.scale(-1.0));
        assert!(cancel.approx_eq(&DyadicStep::zero(0).unwrap(), 0.0));

        let a = DyadicStep::new(1, vec![-2.0, 3.0]).unwrap();
        assert_eq!(a.abs().values(), &[2.0, 3.0]);
    }

    #[test]
    fn integral_examples() {
        assert_eq!(DyadicStep::constant(2.5).unwrap().integral(), 2.5);
        let r2 = DyadicStep::new(1, vec![1.0, -1.0]).unwrap();
        assert_eq!(r2.integral(), 0.0);
        let quad = DyadicStep::new(2, vec![3.0, 1.0, 1.0, 3.0]).unwrap();
        assert_eq!(quad.integral(), 2.0);
    }

    #[test]
    fn rearrangement_sorts_absolute_values() {
        let x = DyadicStep::new(1, vec![-1.0, 1.0]).unwrap();
        assert_eq!(x.rearrangement().values(), &[1.0, 1.0]);

        let y = DyadicStep::new(2, vec![0.0, 3.0, -1.0, 2.0]).unwrap();
        assert_eq!(y.rearrangement().values(), &[3.0, 2.0, 1.0, 0.0]);
    }

    #[test]
    fn rearrangement_idempotent_and_lp_preserving() {
        let mut rng = stream_rng(12, 0);
        for _ in 0..100 {
            let x = random_step(6, 3.0, &mut rng);
            let r = x.rearrangement();
            assert_eq!(r.values(), r.rearrangement().values());
            for p in [1.0, 2.0, 4.0] {
                let lp = |s: &DyadicStep| {
                    (s.values().iter().map(|v| v.abs().powf(p)).sum::<f64>() / s.len() as f64)
                        .powf(1.0 / p)
                };
                assert!((lp(&x) - lp(&r)).abs() < 1e-12);
            }
            assert!((x.max_abs() - r.max_abs()).abs() == 0.0);
        }
    }

    #[test]
    fn equimeasurable_examples() {
        let mut rng = stream_rng(13, 0);
        let x = random_step(5, 2.0, &mut rng);
        assert!(equimeasurable(&x, &x.scale(-1.0), 0.0));

        let one = DyadicStep::constant(1.0).unwrap();
        let two = DyadicStep::constant(2.0).unwrap();
        assert!(!equimeasurable(&one, &two, DEFAULT_EQUIMEASURABLE_TOL));
    }

    #[test]
    fn equimeasurability_is_an_equivalence_relation() {
        let tol = DEFAULT_EQUIMEASURABLE_TOL;
        let mut rng = stream_rng(14, 0);
        for _ in 0..50 {
            let x = random_step(5, 2.0, &mut rng);
            // A measure-preserving cell permutation keeps the multiset.
            let mut shuffled = x.values().to_vec();
            shuffled.rotate_left(7);
            let y = DyadicStep::new(5, shuffled).unwrap();
            // Within-tolerance perturbation of the permuted function.
            let z = DyadicStep::new(5, y.values().iter().map(|v| v + 0.4 * tol).collect()).unwrap();

            assert!(equimeasurable(&x, &x, 0.0));
            assert_eq!(equimeasurable(&x, &y, tol), equimeasurable(&y, &x, tol));
            assert!(equimeasurable(&x, &y, tol) && equimeasurable(&y, &z, tol));
            assert!(equimeasurable(&x, &z, 2.0 * tol));
        }
    }

    #[test]
    fn value_at_reads_the_containing_cell() {
        let x = DyadicStep::new(2, vec![4.0, 3.0, 2.0, 1.0]).unwrap();
        assert_eq!(x.value_at(0.25).unwrap(), 4.0);
        assert_eq!(x.value_at(0.2500001).unwrap(), 3.0);
        assert_eq!(x.value_at(1.0).unwrap(), 1.0);
        assert!(x.value_at(0.0).is_err());
        assert!(x.value_at(1.5).is_err());
    }

    #[test]
    fn serde_round_trip_revalidates() {
        let x = DyadicStep::new(2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let json = serde_json::to_string(&x).unwrap();
        let back: DyadicStep = serde_json::from_str(&json).unwrap();
        assert_eq!(x, back);

        let bad = r#"{"level": 2, "values": [1.0, 2.0]}"#;
        assert!(serde_json::from_str::<DyadicStep>(bad).is_err());
    }

    proptest! {
        #[test]
        fn refinement_never_changes_the_function(
            level in 0u32..5,
            seed in 0u64..1000,
            extra in 0u32..3,
        ) {
            let mut rng = stream_rng(seed, 99);
            let x = random_step(level, 4.0, &mut rng);
            let fine = x.refine(level + extra).unwrap();
            prop_assert!(x.approx_eq(&fine, 0.0));
            prop_assert!((x.integral() - fine.integral()).abs() < 1e-12);
            prop_assert!(equimeasurable(&x, &fine, 1e-15));
        }

        #[test]
        fn rearrangement_is_nonincreasing_and_nonnegative(
            level in 0u32..6,
            seed in 0u64..1000,
        ) {
            let mut rng = stream_rng(seed, 98);
            let x = random_step(level, 4.0, &mut rng);
            let r = x.rearrangement();
            prop_assert!(r.values().windows(2).all(|w| w[0] >= w[1]));
            prop_assert!(r.values().iter().all(|&v| v >= 0.0));
        }
    }
}
