//! Transfinite sums over well-ordered index sets, integrals of step mappings with well-ordered
//! steps, regulated mappings approximated by such step mappings, gauge-based checks, and
//! monotone iteration for impulsive problems.
//!
//! Most types are generic over [`Scalar`] (`f32` or `f64`); the aliases at the crate root fix the
//! scalar. [`gallery`] and [`impulsive`] work in `f64`.

pub mod error;
pub mod gallery;
pub mod gauge;
pub mod impulsive;
pub mod ordinal;
pub mod regulated;
pub mod scalar;
pub mod spaces;
pub mod step;
pub mod transfinite;

pub use error::{Error, Result};
pub use gauge::{canonical_gauge, cousin_partition, hl_riemann_defect, Gauge, TaggedPartition};
pub use ordinal::{Cursor, Extent, Layer, OrdinalAddress, Run, SetSpec, WellOrderedSet};
pub use regulated::{
    build_partition, cd_primitive, discontinuities, g_epsilon_step, integrate_regulated, step_approximation,
    step_approximation_with, try_build_partition, AbsIntegral, CdPrimitive, CellRule, OscPartition, RegulatedConfig,
    RegulatedIntegral, RegulatedMapping, StepAsRegulated,
};
pub use scalar::{Extended, Scalar, Tri};
pub use spaces::{Ball, NormInterval, ValueRecord, VectorValue};
pub use step::{
    improper_limit, integrate_step, primitive, weighted_family, IntegrabilityVerdict, Mode, PrimitiveTrace, StepMapping,
};
pub use transfinite::{
    classify, partial_sum, partial_sum_table, sum, Basis, Family, Remainder, SumConfig, SummabilityReport, Verdict,
};

pub type Value64 = VectorValue<f64>;
pub type Value32 = VectorValue<f32>;
pub type Set64 = WellOrderedSet<f64>;
pub type Set32 = WellOrderedSet<f32>;
pub type Family64 = Family<f64>;
pub type Family32 = Family<f32>;
pub type Step64 = StepMapping<f64>;
pub type Step32 = StepMapping<f32>;
pub type SumConfig64 = SumConfig<f64>;
pub type SumConfig32 = SumConfig<f32>;
