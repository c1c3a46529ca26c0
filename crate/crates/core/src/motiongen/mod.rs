//! Parametric target-motion generators: eight families (straight line,
//! simple harmonic, circular arc, projectile, pendulum, inclined rolling,
//! impact response, hybrid), Fourier truncation and piecewise composition,
//! plus the subcategory catalog used for seeded sampling.

mod catalog;
mod config;
mod fourier;
mod generator;

pub use catalog::{rehash, Catalog, CatalogError, ObjectEntry, ParamRange, SubcategoryEntry, DEFAULT_CATALOG};
pub use config::{Family, FamilyParams, MicroOscillation, MotionConfig, Segment, GRAVITY};
pub use fourier::{fourier_eval, fourier_fit, fourier_residual, FourierSpec};
pub use generator::{Bounce, MotionGenerator, PENDULUM_SUBSTEP};

use crate::kinematics::Vec3;
use crate::Real;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MotionError {
    #[error("time {t} outside trajectory range [0, {duration}]")]
    TimeOutOfRange { t: f64, duration: f64 },
    #[error("invalid motion parameters: {0}")]
    InvalidParams(String),
    #[error("hybrid trajectory needs at least one segment")]
    EmptyHybrid,
    #[error("hybrid segments cannot themselves be hybrid")]
    NestedHybrid,
    #[error("unknown subcategory `{0}`")]
    UnknownSubcategory(String),
    #[error("{samples} samples cannot determine {harmonics} harmonics (need 2K+1)")]
    TooFewSamples { samples: usize, harmonics: usize },
}

/// One-shot evaluation; prefer building a [`MotionGenerator`] when sampling
/// many times.
pub fn position_at<T: Real>(config: &MotionConfig<T>, t: T) -> Result<Vec3<T>, MotionError> {
    MotionGenerator::new(config)?.position_at(t)
}

pub fn velocity_at<T: Real>(config: &MotionConfig<T>, t: T) -> Result<Vec3<T>, MotionError> {
    MotionGenerator::new(config)?.velocity_at(t)
}

/// Chains segments into one position-continuous hybrid trajectory whose
/// duration is the sum of the segment durations.
pub fn compose_hybrid<T: Real>(
    subcategory: impl Into<String>,
    seed: u64,
    segments: Vec<Segment<T>>,
    micro: Option<MicroOscillation<T>>,
) -> Result<MotionConfig<T>, MotionError> {
    if segments.is_empty() {
        return Err(MotionError::EmptyHybrid);
    }
    let duration = segments.iter().fold(T::zero(), |a, s| a + s.duration);
    let config = MotionConfig::new(subcategory, seed, duration, FamilyParams::Hybrid { segments, micro });
    MotionGenerator::new(&config)?;
    Ok(config)
}
