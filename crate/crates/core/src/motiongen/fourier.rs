use serde::{Deserialize, Serialize};

use super::MotionError;
use crate::Real;

/// Truncated trigonometric series
/// `a0 + sum_k (a_k cos(k w t) + b_k sin(k w t))`, `k = 1..=K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierSpec<T> {
    /// Fundamental angular frequency, rad/s.
    pub omega: T,
    pub a0: T,
    pub a: Vec<T>,
    pub b: Vec<T>,
}

impl<T: Real> FourierSpec<T> {
    pub fn harmonics(&self) -> usize {
        self.a.len()
    }

    pub fn eval(&self, t: T) -> T {
        self.a.iter().zip(&self.b).enumerate().fold(self.a0, |acc, (i, (&ak, &bk))| {
            let arg = T::from_count(i + 1) * self.omega * t;
            acc + ak * arg.cos() + bk * arg.sin()
        })
    }

    /// Time derivative of [`eval`](Self::eval).
    pub fn derivative(&self, t: T) -> T {
        self.a.iter().zip(&self.b).enumerate().fold(T::zero(), |acc, (i, (&ak, &bk))| {
            let kw = T::from_count(i + 1) * self.omega;
            let arg = kw * t;
            acc + kw * (bk * arg.cos() - ak * arg.sin())
        })
    }

    pub fn is_finite(&self) -> bool {
        self.omega.is_finite()
            && self.a0.is_finite()
            && self.a.iter().chain(&self.b).all(|c| c.is_finite())
            && self.a.len() == self.b.len()
    }
}

/// Discrete projection of `samples` (uniformly spaced over one `period`,
/// starting at `t = 0`) onto the first `k` harmonics.
pub fn fourier_fit<T: Real>(samples: &[T], k: usize, period: T) -> Result<FourierSpec<T>, MotionError> {
    let n = samples.len();
    if n < 2 * k + 1 {
        return Err(MotionError::TooFewSamples { samples: n, harmonics: k });
    }
    if !(period > T::zero()) || !period.is_finite() {
        return Err(MotionError::InvalidParams("fourier period must be positive".into()));
    }
    let nn = T::from_count(n);
    let two_pi = T::TAU();
    let a0 = samples.iter().fold(T::zero(), |s, &x| s + x) / nn;
    let mut a = Vec::with_capacity(k);
    let mut b = Vec::with_capacity(k);
    for h in 1..=k {
        let (mut ca, mut cb) = (T::zero(), T::zero());
        for (j, &x) in samples.iter().enumerate() {
            // reduce the phase index modulo n to keep the argument small
            let arg = two_pi * T::from_count((h * j) % n) / nn;
            ca = ca + x * arg.cos();
            cb = cb + x * arg.sin();
        }
        let two = T::lit(2.0);
        a.push(two * ca / nn);
        b.push(two * cb / nn);
    }
    Ok(FourierSpec { omega: two_pi / period, a0, a, b })
}

pub fn fourier_eval<T: Real>(spec: &FourierSpec<T>, t: T) -> T {
    spec.eval(t)
}

/// Root-mean-square difference between `samples` and the series evaluated
/// at the sample instants.
pub fn fourier_residual<T: Real>(samples: &[T], spec: &FourierSpec<T>, period: T) -> T {
    let n = T::from_count(samples.len().max(1));
    let sum = samples.iter().enumerate().fold(T::zero(), |acc, (j, &x)| {
        let t = period * T::from_count(j) / n;
        let e = x - spec.eval(t);
        acc + e * e
    });
    (sum / n).sqrt()
}
