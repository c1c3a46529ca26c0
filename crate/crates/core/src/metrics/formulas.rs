use crate::kinematics::Vec3;
use crate::Real;

use super::MetricsError;

fn steps<T: Real>(track: &[Vec3<T>]) -> Result<Vec<Vec3<T>>, MetricsError> {
    if track.len() < 2 {
        return Err(MetricsError::TooFewPoints(track.len()));
    }
    Ok(track.windows(2).map(|w| w[1] - w[0]).collect())
}

/// `1 / (1 + CV)` of the step lengths, with the population standard
/// deviation. A motionless track scores 1.
pub fn q_smooth<T: Real>(track: &[Vec3<T>]) -> Result<T, MetricsError> {
    let d: Vec<T> = steps(track)?.into_iter().map(Vec3::norm).collect();
    let n = T::from_count(d.len());
    let mean = d.iter().fold(T::zero(), |a, &x| a + x) / n;
    if mean == T::zero() {
        return Ok(T::one());
    }
    let var = d.iter().fold(T::zero(), |a, &x| a + (x - mean) * (x - mean)) / n;
    Ok(T::one() / (T::one() + var.sqrt() / mean))
}

/// Mean cosine between each step and the overall displacement. Zero for a
/// closed track; zero-length steps contribute zero.
pub fn q_line<T: Real>(track: &[Vec3<T>]) -> Result<T, MetricsError> {
    let s = steps(track)?;
    let Some(axis) = (track[track.len() - 1] - track[0]).normalized() else {
        return Ok(T::zero());
    };
    let sum = s.iter().filter_map(|d| d.normalized()).fold(T::zero(), |a, u| a + u.dot(axis));
    Ok(sum / T::from_count(s.len()))
}

/// `1 - T/N` for completion at 1-based frame `T`; zero when the task never
/// completes.
pub fn r_time<T: Real>(frames: usize, completion: Option<usize>) -> Result<T, MetricsError> {
    match completion {
        None => Ok(T::zero()),
        Some(t) if t == 0 || t > frames => Err(MetricsError::CompletionOutOfRange { completion: t, frames }),
        Some(t) => Ok(T::one() - T::from_count(t) / T::from_count(frames)),
    }
}

/// Joint-wise grasp rule: same sign as the reference and at least 90% of
/// its magnitude. Reference joints equal to zero always pass. The boundary
/// is inclusive up to a relative rounding slack of 1e-12.
pub fn grasp_rule<T: Real>(pred: &[T], gt: &[T]) -> bool {
    pred.iter().zip(gt).all(|(&p, &g)| joint_ok(p, g))
}

pub(crate) fn joint_ok<T: Real>(p: T, g: T) -> bool {
    if g == T::zero() {
        return true;
    }
    p.signum() == g.signum() && p != T::zero() && p.abs() >= T::lit(0.9) * g.abs() * (T::one() - T::lit(1e-12))
}
