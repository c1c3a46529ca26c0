use super::{FamilyParams, FourierSpec, MotionConfig, MotionError, Segment};
use crate::kinematics::Vec3;
use crate::Real;

/// RK4 substep used by the pendulum integrator, seconds.
pub const PENDULUM_SUBSTEP: f64 = 1e-3;

/// Evaluates a [`MotionConfig`] at arbitrary times in `[0, duration]`.
/// Built once; evaluation is read-only.
#[derive(Debug, Clone)]
pub struct MotionGenerator<T> {
    duration: T,
    kernel: Kernel<T>,
}

#[derive(Debug, Clone)]
enum Kernel<T> {
    Line { start: Vec3<T>, velocity: Vec3<T> },
    Harmonic { center: Vec3<T>, axis: Vec3<T>, amplitude: T, omega: T, phase: T },
    Circle { center: Vec3<T>, radius: T, u1: Vec3<T>, u2: Vec3<T>, omega: T, start_angle: T },
    Ballistic { start: Vec3<T>, velocity: Vec3<T>, gravity: T },
    Pendulum(PendulumCache<T>),
    Incline { origin: Vec3<T>, slope: Vec3<T>, speed: T, accel: T },
    Bounce(BounceTable<T>),
    Hybrid { pieces: Vec<Piece<T>>, micro: Option<(Vec3<T>, FourierSpec<T>)> },
}

#[derive(Debug, Clone)]
struct Piece<T> {
    start_time: T,
    offset: Vec3<T>,
    kernel: Kernel<T>,
}

#[derive(Debug, Clone)]
struct PendulumCache<T> {
    pivot: Vec3<T>,
    length: T,
    swing: Vec3<T>,
    /// g / L
    stiffness: T,
    substep: T,
    /// (angle, angular velocity) at every substep boundary.
    checkpoints: Vec<(T, T)>,
}

#[derive(Debug, Clone)]
struct BounceTable<T> {
    start: Vec3<T>,
    horizontal_velocity: Vec3<T>,
    gravity: T,
    /// (arc start time, arc start height, upward speed at arc start).
    arcs: Vec<(T, T, T)>,
    /// Time after which the target rests on the ground (vertical motion has
    /// died out), if reached within the horizon.
    rest_time: Option<T>,
    ground: T,
}

/// A bounce event: time, downward speed before and upward speed after.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounce<T> {
    pub time: T,
    pub speed_in: T,
    pub speed_out: T,
}

fn unit_ok<T: Real>(v: Vec3<T>) -> bool {
    (v.norm() - T::one()).abs() <= T::lit(1e-9)
}

fn horizontal_heading<T: Real>(azimuth: T) -> Vec3<T> {
    Vec3::new(azimuth.cos(), T::zero(), azimuth.sin())
}

fn invalid<T>(msg: &str) -> Result<T, MotionError> {
    Err(MotionError::InvalidParams(msg.to_string()))
}

impl<T: Real> MotionGenerator<T> {
    pub fn new(config: &MotionConfig<T>) -> Result<Self, MotionError> {
        if !(config.duration > T::zero()) || !config.duration.is_finite() {
            return invalid("duration must be positive");
        }
        let kernel = Kernel::build(&config.params, config.duration, true)?;
        if let FamilyParams::Hybrid { segments, .. } = &config.params {
            let total = segments.iter().fold(T::zero(), |a, s| a + s.duration);
            if config.duration > total + T::lit(1e-9) * total.max(T::one()) {
                return invalid("hybrid duration exceeds the sum of its segments");
            }
        }
        Ok(Self { duration: config.duration, kernel })
    }

    pub fn duration(&self) -> T {
        self.duration
    }

    fn check(&self, t: T) -> Result<(), MotionError> {
        let slack = T::lit(1e-9) * self.duration.max(T::one());
        if t >= T::zero() && t <= self.duration + slack {
            Ok(())
        } else {
            Err(MotionError::TimeOutOfRange { t: t.to_f64_lossy(), duration: self.duration.to_f64_lossy() })
        }
    }

    pub fn position_at(&self, t: T) -> Result<Vec3<T>, MotionError> {
        self.check(t)?;
        Ok(self.kernel.position(t))
    }

    pub fn velocity_at(&self, t: T) -> Result<Vec3<T>, MotionError> {
        self.check(t)?;
        Ok(self.kernel.velocity(t))
    }

    /// Bounce events within the horizon (impact-response trajectories only).
    pub fn bounces(&self) -> Vec<Bounce<T>> {
        match &self.kernel {
            Kernel::Bounce(table) => table
                .arcs
                .windows(2)
                .filter(|w| w[1].0 <= self.duration)
                .map(|w| {
                    let (t0, _, v0) = w[0];
                    let (t1, _, v1) = w[1];
                    let speed_in = table.gravity * (t1 - t0) - v0;
                    Bounce { time: t1, speed_in, speed_out: v1 }
                })
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Mechanical energy per unit mass of a pendulum, `0.5 L^2 w^2 - g L cos(theta)`.
    pub fn pendulum_energy(&self, t: T) -> Option<T> {
        match &self.kernel {
            Kernel::Pendulum(p) => {
                let (theta, w) = p.state(t);
                let g = p.stiffness * p.length;
                Some(T::lit(0.5) * p.length * p.length * w * w - g * p.length * theta.cos())
            }
            _ => None,
        }
    }

    /// Start times of hybrid segments after the first.
    pub fn joins(&self) -> Vec<T> {
        match &self.kernel {
            Kernel::Hybrid { pieces, .. } => pieces.iter().skip(1).map(|p| p.start_time).collect(),
            _ => Vec::new(),
        }
    }
}

impl<T: Real> Kernel<T> {
    fn build(params: &FamilyParams<T>, horizon: T, top_level: bool) -> Result<Self, MotionError> {
        let pos = |v: T| v > T::zero() && v.is_finite();
        let fin = |v: Vec3<T>| v.is_finite();
        Ok(match params {
            FamilyParams::StraightLine { start, velocity } => {
                if !fin(*start) || !fin(*velocity) {
                    return invalid("line parameters must be finite");
                }
                Kernel::Line { start: *start, velocity: *velocity }
            }
            FamilyParams::SimpleHarmonic { center, axis, amplitude, angular_frequency, phase } => {
                if !fin(*center)
                    || !unit_ok(*axis)
                    || !amplitude.is_finite()
                    || !angular_frequency.is_finite()
                    || !phase.is_finite()
                {
                    return invalid("harmonic parameters invalid (axis must be unit, values finite)");
                }
                Kernel::Harmonic { center: *center, axis: *axis, amplitude: *amplitude, omega: *angular_frequency, phase: *phase }
            }
            FamilyParams::CircularArc { center, radius, u1, u2, angular_velocity, start_angle } => {
                if !pos(*radius) || !fin(*center) || !angular_velocity.is_finite() || !start_angle.is_finite() {
                    return invalid("circular parameters invalid");
                }
                if !unit_ok(*u1) || !unit_ok(*u2) || u1.dot(*u2).abs() > T::lit(1e-9) {
                    return invalid("circular plane basis must be orthonormal");
                }
                Kernel::Circle {
                    center: *center,
                    radius: *radius,
                    u1: *u1,
                    u2: *u2,
                    omega: *angular_velocity,
                    start_angle: *start_angle,
                }
            }
            FamilyParams::Projectile { start, speed, launch_angle, azimuth, gravity } => {
                if !fin(*start) || !(*speed >= T::zero()) || !launch_angle.is_finite() || !azimuth.is_finite() || !pos(*gravity) {
                    return invalid("projectile parameters invalid");
                }
                let velocity =
                    horizontal_heading(*azimuth) * (*speed * launch_angle.cos()) + Vec3::unit_y() * (*speed * launch_angle.sin());
                Kernel::Ballistic { start: *start, velocity, gravity: *gravity }
            }
            FamilyParams::Pendulum { pivot, length, swing_direction, initial_angle, initial_angular_velocity, gravity } => {
                if !fin(*pivot)
                    || !pos(*length)
                    || !pos(*gravity)
                    || !initial_angle.is_finite()
                    || !initial_angular_velocity.is_finite()
                {
                    return invalid("pendulum parameters invalid");
                }
                if !unit_ok(*swing_direction) || swing_direction.y.abs() > T::lit(1e-9) {
                    return invalid("pendulum swing direction must be a horizontal unit vector");
                }
                Kernel::Pendulum(PendulumCache::build(
                    *pivot,
                    *length,
                    *swing_direction,
                    *gravity / *length,
                    *initial_angle,
                    *initial_angular_velocity,
                    horizon,
                ))
            }
            FamilyParams::InclinedRolling { origin, downhill, incline_angle, initial_speed, gravity } => {
                let half_pi = T::FRAC_PI_2();
                if !fin(*origin)
                    || !(*incline_angle > T::zero() && *incline_angle < half_pi)
                    || !initial_speed.is_finite()
                    || !pos(*gravity)
                {
                    return invalid("incline parameters invalid (angle must lie in (0, pi/2))");
                }
                let Some(heading) = downhill.horizontal().normalized() else {
                    return invalid("incline downhill direction must not be vertical");
                };
                let slope = heading * incline_angle.cos() - Vec3::unit_y() * incline_angle.sin();
                Kernel::Incline { origin: *origin, slope, speed: *initial_speed, accel: *gravity * incline_angle.sin() }
            }
            FamilyParams::ImpactResponse { start, speed, launch_angle, azimuth, gravity, ground_height, restitution } => {
                if !fin(*start)
                    || !(*speed >= T::zero())
                    || !pos(*gravity)
                    || !ground_height.is_finite()
                    || !launch_angle.is_finite()
                    || !azimuth.is_finite()
                {
                    return invalid("impact parameters invalid");
                }
                if !(*restitution > T::zero() && *restitution <= T::one()) {
                    return invalid("restitution must lie in (0, 1]");
                }
                if start.y < *ground_height {
                    return invalid("impact start below ground plane");
                }
                Kernel::Bounce(BounceTable::build(
                    *start,
                    *speed,
                    *launch_angle,
                    *azimuth,
                    *gravity,
                    *ground_height,
                    *restitution,
                    horizon,
                ))
            }
            FamilyParams::Hybrid { segments, micro } => {
                if !top_level {
                    return Err(MotionError::NestedHybrid);
                }
                if segments.is_empty() {
                    return Err(MotionError::EmptyHybrid);
                }
                let micro = match micro {
                    Some(m) if m.series.is_finite() && fin(m.axis) => Some((m.axis, m.series.clone())),
                    Some(_) => return invalid("micro-oscillation must be finite"),
                    None => None,
                };
                Kernel::Hybrid { pieces: build_pieces(segments)?, micro }
            }
        })
    }

    fn position(&self, t: T) -> Vec3<T> {
        let half = T::lit(0.5);
        match self {
            Kernel::Line { start, velocity } => *start + *velocity * t,
            Kernel::Harmonic { center, axis, amplitude, omega, phase } => {
                *center + *axis * (*amplitude * (*omega * t + *phase).sin())
            }
            Kernel::Circle { center, radius, u1, u2, omega, start_angle } => {
                let a = *start_angle + *omega * t;
                *center + (*u1 * a.cos() + *u2 * a.sin()) * *radius
            }
            Kernel::Ballistic { start, velocity, gravity } => *start + *velocity * t - Vec3::unit_y() * (half * *gravity * t * t),
            Kernel::Pendulum(p) => {
                let (theta, _) = p.state(t);
                p.pivot + (p.swing * theta.sin() - Vec3::unit_y() * theta.cos()) * p.length
            }
            Kernel::Incline { origin, slope, speed, accel } => *origin + *slope * (*speed * t + half * *accel * t * t),
            Kernel::Bounce(b) => b.position(t),
            Kernel::Hybrid { pieces, micro } => {
                let p = locate(pieces, t);
                let mut out = p.offset + p.kernel.position(t - p.start_time);
                if let Some((axis, series)) = micro {
                    out += *axis * (series.eval(t) - series.eval(T::zero()));
                }
                out
            }
        }
    }

    fn velocity(&self, t: T) -> Vec3<T> {
        match self {
            Kernel::Line { velocity, .. } => *velocity,
            Kernel::Harmonic { axis, amplitude, omega, phase, .. } => *axis * (*amplitude * *omega * (*omega * t + *phase).cos()),
            Kernel::Circle { radius, u1, u2, omega, start_angle, .. } => {
                let a = *start_angle + *omega * t;
                (*u2 * a.cos() - *u1 * a.sin()) * (*radius * *omega)
            }
            Kernel::Ballistic { velocity, gravity, .. } => *velocity - Vec3::unit_y() * (*gravity * t),
            Kernel::Pendulum(p) => {
                let (theta, w) = p.state(t);
                (p.swing * theta.cos() + Vec3::unit_y() * theta.sin()) * (p.length * w)
            }
            Kernel::Incline { slope, speed, accel, .. } => *slope * (*speed + *accel * t),
            Kernel::Bounce(b) => b.velocity(t),
            Kernel::Hybrid { pieces, micro } => {
                let p = locate(pieces, t);
                let mut out = p.kernel.velocity(t - p.start_time);
                if let Some((axis, series)) = micro {
                    out += *axis * series.derivative(t);
                }
                out
            }
        }
    }
}

fn build_pieces<T: Real>(segments: &[Segment<T>]) -> Result<Vec<Piece<T>>, MotionError> {
    let mut pieces: Vec<Piece<T>> = Vec::with_capacity(segments.len());
    let mut start_time = T::zero();
    let mut previous_end: Option<Vec3<T>> = None;
    for seg in segments {
        if !(seg.duration > T::zero()) || !seg.duration.is_finite() {
            return invalid("segment durations must be positive");
        }
        let kernel = Kernel::build(&seg.params, seg.duration, false)?;
        let offset = match previous_end {
            Some(end) => end - kernel.position(T::zero()),
            None => Vec3::zero(),
        };
        previous_end = Some(offset + kernel.position(seg.duration));
        pieces.push(Piece { start_time, offset, kernel });
        start_time = start_time + seg.duration;
    }
    Ok(pieces)
}

fn locate<T: Real>(pieces: &[Piece<T>], t: T) -> &Piece<T> {
    let idx = pieces.partition_point(|p| p.start_time <= t);
    &pieces[idx.saturating_sub(1)]
}

impl<T: Real> PendulumCache<T> {
    fn build(pivot: Vec3<T>, length: T, swing: Vec3<T>, stiffness: T, theta0: T, w0: T, horizon: T) -> Self {
        let substep = T::lit(PENDULUM_SUBSTEP);
        let steps = (horizon / substep).ceil().to_usize().unwrap_or(0) + 1;
        let mut checkpoints = Vec::with_capacity(steps + 1);
        let mut state = (theta0, w0);
        checkpoints.push(state);
        for _ in 0..steps {
            state = rk4(state, substep, stiffness);
            checkpoints.push(state);
        }
        Self { pivot, length, swing, stiffness, substep, checkpoints }
    }

    fn state(&self, t: T) -> (T, T) {
        let k = (t / self.substep).floor().to_usize().unwrap_or(0).min(self.checkpoints.len() - 1);
        let rest = t - T::from_count(k) * self.substep;
        if rest > T::zero() {
            rk4(self.checkpoints[k], rest, self.stiffness)
        } else {
            self.checkpoints[k]
        }
    }
}

fn rk4<T: Real>((theta, w): (T, T), h: T, stiffness: T) -> (T, T) {
    let f = |th: T, om: T| (om, -stiffness * th.sin());
    let half = T::lit(0.5);
    let (k1t, k1w) = f(theta, w);
    let (k2t, k2w) = f(theta + half * h * k1t, w + half * h * k1w);
    let (k3t, k3w) = f(theta + half * h * k2t, w + half * h * k2w);
    let (k4t, k4w) = f(theta + h * k3t, w + h * k3w);
    let sixth = h / T::lit(6.0);
    let two = T::lit(2.0);
    (theta + sixth * (k1t + two * k2t + two * k3t + k4t), w + sixth * (k1w + two * k2w + two * k3w + k4w))
}

impl<T: Real> BounceTable<T> {
    #[allow(clippy::too_many_arguments)]
    fn build(start: Vec3<T>, speed: T, launch: T, azimuth: T, gravity: T, ground: T, e: T, horizon: T) -> Self {
        let horizontal_velocity = horizontal_heading(azimuth) * (speed * launch.cos());
        let vy0 = speed * launch.sin();
        let h0 = start.y - ground;
        let mut arcs = vec![(T::zero(), start.y, vy0)];
        // first landing: h0 + vy0 t - g t^2 / 2 = 0
        let impact = (vy0 * vy0 + T::lit(2.0) * gravity * h0).sqrt();
        let mut t = (vy0 + impact) / gravity;
        let mut v_out = e * impact;
        let tiny = T::lit(1e-9);
        let mut rest_time = None;
        while t <= horizon {
            if v_out <= tiny {
                rest_time = Some(t);
                break;
            }
            arcs.push((t, ground, v_out));
            t = t + T::lit(2.0) * v_out / gravity;
            v_out = e * v_out;
        }
        // one arc past the horizon keeps the final bounce reportable
        if rest_time.is_none() {
            arcs.push((t, ground, v_out));
        }
        Self { start, horizontal_velocity, gravity, arcs, rest_time, ground }
    }

    fn arc(&self, t: T) -> (T, T, T) {
        let idx = self.arcs.partition_point(|a| a.0 <= t);
        self.arcs[idx.saturating_sub(1)]
    }

    fn position(&self, t: T) -> Vec3<T> {
        let mut p = self.start + self.horizontal_velocity * t;
        p.y = match self.rest_time {
            Some(r) if t >= r => self.ground,
            _ => {
                let (t0, y0, v0) = self.arc(t);
                let s = t - t0;
                (y0 + v0 * s - T::lit(0.5) * self.gravity * s * s).max(self.ground)
            }
        };
        p
    }

    fn velocity(&self, t: T) -> Vec3<T> {
        let mut v = self.horizontal_velocity;
        v.y = match self.rest_time {
            Some(r) if t >= r => T::zero(),
            _ => {
                let (t0, _, v0) = self.arc(t);
                v0 - self.gravity * (t - t0)
            }
        };
        v
    }
}
