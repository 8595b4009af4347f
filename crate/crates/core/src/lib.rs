//! Exact dyadic step functions, order-2 Rademacher chaos expansions, and
//! symmetric-space norm experiments at desk scale.
//!
//! Modules:
//!
//! * [`dyadic`] — step functions on `(0, 1]`: arithmetic, measure,
//!   rearrangement, equimeasurability.
//! * [`walsh`] — Rademacher and Walsh-Paley systems, chaos
//!   analysis/synthesis, dyadic averaging, partial sums, sign multipliers.
//! * [`spaces`] — norm functionals: `L_p`, sup, Orlicz (Luxemburg) with
//!   N-function machinery, Marcinkiewicz norms, and the sup-form quasi-norm.
//! * [`constants`] — empirical estimators for basis, unconditionality, and
//!   `l_2`-equivalence constants, random-sign averages, and sign searches.
//! * [`constructions`] — explicit witness functions: block sums,
//!   rearrangement lower bounds, optimally signed blocks, interpolation
//!   checks.
//! * [`square`] — step functions on the square, mixed norms, and the
//!   multiple Rademacher system.
//! * [`sampling`] — pinned seeded generators for reproducible experiments.

pub mod constants;
pub mod constructions;
pub mod dyadic;
pub mod error;
pub mod parallel;
pub mod sampling;
pub mod spaces;
pub mod square;
pub mod walsh;

pub use dyadic::{equimeasurable, DyadicStep, DEFAULT_EQUIMEASURABLE_TOL};
pub use error::{ChaosError, Result};
pub use spaces::{NFunction, NormSpec};
pub use walsh::{ChaosCoeffs, ChaosPair, SignPattern};
