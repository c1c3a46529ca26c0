use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Family, FamilyParams, FourierSpec, MicroOscillation, MotionConfig, Segment, GRAVITY};
use crate::kinematics::{ObjectShape, Quat, ShapeKind, Vec3};
use crate::DT;

/// The catalog shipped with the crate.
pub const DEFAULT_CATALOG: &str = include_str!("../../catalog/motions.toml");

/// Inclusive uniform range `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamRange(pub f64, pub f64);

impl ParamRange {
    pub fn midpoint(self) -> f64 {
        0.5 * (self.0 + self.1)
    }

    pub fn contains(self, x: f64) -> bool {
        x >= self.0 && x <= self.1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubcategoryEntry {
    pub id: String,
    pub family: Family,
    /// Structural variant (hybrid only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    pub weight: f64,
    /// Inclusive episode length range in frames.
    pub frames: [u32; 2],
    /// Fraction of the post-observation window at which the scripted
    /// controller intercepts.
    #[serde(default = "default_intercept_fraction")]
    pub intercept_fraction: f64,
    pub params: BTreeMap<String, ParamRange>,
}

fn default_intercept_fraction() -> f64 {
    0.6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectEntry {
    pub id: String,
    pub kind: String,
    pub params: BTreeMap<String, ParamRange>,
}

#[derive(Debug, Serialize)]
struct Body<'a> {
    version: u32,
    object: &'a [ObjectEntry],
    subcategory: &'a [SubcategoryEntry],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogFile {
    version: u32,
    checksum: String,
    object: Vec<ObjectEntry>,
    subcategory: Vec<SubcategoryEntry>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CatalogError {
    #[error("catalog parse error: {0}")]
    Parse(String),
    #[error("catalog checksum mismatch: file says {expected}, content hashes to {actual}")]
    Checksum { expected: String, actual: String },
    #[error("unknown subcategory `{0}`")]
    UnknownSubcategory(String),
    #[error("{entry}: missing parameter range `{key}`")]
    MissingParam { entry: String, key: String },
    #[error("invalid catalog: {0}")]
    Invalid(String),
    #[error("cannot read catalog {path}: {reason}")]
    Io { path: String, reason: String },
}

/// Versioned, checksummed table of motion subcategories and object
/// primitives with the parameter ranges they are sampled from.
#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    version: u32,
    checksum: String,
    objects: Vec<ObjectEntry>,
    subcategories: Vec<SubcategoryEntry>,
}

impl Catalog {
    pub fn builtin() -> Self {
        Self::from_toml_str(DEFAULT_CATALOG).expect("built-in catalog is valid")
    }

    pub fn load(path: &Path) -> Result<Self, CatalogError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CatalogError::Io { path: path.display().to_string(), reason: e.to_string() })?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, CatalogError> {
        let file: CatalogFile = toml::from_str(text).map_err(|e| CatalogError::Parse(e.to_string()))?;
        let actual = content_checksum(file.version, &file.object, &file.subcategory);
        if file.checksum != actual {
            return Err(CatalogError::Checksum { expected: file.checksum, actual });
        }
        let catalog = Self { version: file.version, checksum: actual, objects: file.object, subcategories: file.subcategory };
        catalog.validate()?;
        Ok(catalog)
    }

    fn validate(&self) -> Result<(), CatalogError> {
        if self.objects.is_empty() || self.subcategories.is_empty() {
            return Err(CatalogError::Invalid("catalog needs objects and subcategories".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for s in &self.subcategories {
            if !seen.insert(s.id.as_str()) {
                return Err(CatalogError::Invalid(format!("duplicate subcategory `{}`", s.id)));
            }
            if !(s.weight > 0.0) || s.frames[0] < 2 || s.frames[0] > s.frames[1] {
                return Err(CatalogError::Invalid(format!("{}: bad weight or frame range", s.id)));
            }
            if !(s.intercept_fraction > 0.0 && s.intercept_fraction < 1.0) {
                return Err(CatalogError::Invalid(format!("{}: intercept fraction must lie in (0, 1)", s.id)));
            }
            check_ranges(&s.id, &s.params)?;
            self.sample_config(&s.id, 0)?;
        }
        for (i, o) in self.objects.iter().enumerate() {
            check_ranges(&o.id, &o.params)?;
            sample_object_entry(o, &mut rng_for(&o.id, i as u64))?;
        }
        Ok(())
    }

    pub fn version(&self) -> u32 {
        self.version
    }

    /// Hex SHA-256 of the canonical catalog content.
    pub fn checksum(&self) -> &str {
        &self.checksum
    }

    pub fn subcategories(&self) -> &[SubcategoryEntry] {
        &self.subcategories
    }

    pub fn objects(&self) -> &[ObjectEntry] {
        &self.objects
    }

    pub fn subcategory(&self, id: &str) -> Result<&SubcategoryEntry, CatalogError> {
        self.subcategories.iter().find(|s| s.id == id).ok_or_else(|| CatalogError::UnknownSubcategory(id.to_string()))
    }

    /// Deterministic draw of a motion configuration.
    pub fn sample_config(&self, id: &str, seed: u64) -> Result<MotionConfig<f64>, CatalogError> {
        let entry = self.subcategory(id)?;
        let mut draw = Draw { entry: &entry.id, ranges: &entry.params, rng: rng_for(&entry.id, seed) };
        let frames = draw.rng.random_range(entry.frames[0]..=entry.frames[1]);
        let duration = f64::from(frames) * DT;
        let params = sample_params(entry, &mut draw, duration)?;
        Ok(MotionConfig::new(entry.id.clone(), seed, duration, params))
    }

    /// Deterministic draw of an object primitive, positioned at the origin,
    /// together with its catalog id.
    pub fn sample_object(&self, seed: u64) -> (&str, ObjectShape<f64>) {
        let mut rng = rng_for("object", seed);
        let entry = &self.objects[rng.random_range(0..self.objects.len())];
        (&entry.id, sample_object_entry(entry, &mut rng).expect("validated at load"))
    }

    /// Weighted choice among `selection` (all subcategories when empty).
    pub fn pick(&self, selection: &[String], seed: u64) -> Result<&SubcategoryEntry, CatalogError> {
        let pool: Vec<&SubcategoryEntry> = if selection.is_empty() {
            self.subcategories.iter().collect()
        } else {
            selection.iter().map(|id| self.subcategory(id)).collect::<Result<_, _>>()?
        };
        let total: f64 = pool.iter().map(|s| s.weight).sum();
        let mut x = rng_for("pick", seed).random_range(0.0..total);
        for s in &pool {
            if x < s.weight {
                return Ok(s);
            }
            x -= s.weight;
        }
        Ok(pool[pool.len() - 1])
    }
}

/// SHA-256 over the canonical JSON rendering of the catalog body.
fn content_checksum(version: u32, objects: &[ObjectEntry], subcategories: &[SubcategoryEntry]) -> String {
    let body = Body { version, object: objects, subcategory: subcategories };
    let json = serde_json::to_vec(&body).expect("catalog serializes");
    hex::encode(Sha256::digest(&json))
}

fn check_ranges(entry: &str, ranges: &BTreeMap<String, ParamRange>) -> Result<(), CatalogError> {
    for (k, r) in ranges {
        if !(r.0.is_finite() && r.1.is_finite() && r.0 <= r.1) {
            return Err(CatalogError::Invalid(format!("{entry}: range `{k}` must be finite with lo <= hi")));
        }
    }
    Ok(())
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

fn rng_for(stream: &str, seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(fnv1a(stream) ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

struct Draw<'a> {
    entry: &'a str,
    ranges: &'a BTreeMap<String, ParamRange>,
    rng: ChaCha8Rng,
}

impl Draw<'_> {
    fn get(&mut self, key: &str) -> Result<f64, CatalogError> {
        let r = self
            .ranges
            .get(key)
            .ok_or_else(|| CatalogError::MissingParam { entry: self.entry.to_string(), key: key.to_string() })?;
        Ok(if r.0 == r.1 { r.0 } else { self.rng.random_range(r.0..=r.1) })
    }

    fn deg(&mut self, key: &str) -> Result<f64, CatalogError> {
        Ok(self.get(key)?.to_radians())
    }

    fn point(&mut self, prefix: &str) -> Result<Vec3<f64>, CatalogError> {
        Ok(Vec3::new(self.get(&format!("{prefix}_x"))?, self.get(&format!("{prefix}_y"))?, self.get(&format!("{prefix}_z"))?))
    }

    fn sign(&mut self) -> f64 {
        if self.rng.random_bool(0.5) {
            1.0
        } else {
            -1.0
        }
    }
}

/// Unit vector from a heading in the ground plane and an elevation.
fn direction(azimuth: f64, elevation: f64) -> Vec3<f64> {
    Vec3::new(azimuth.cos() * elevation.cos(), elevation.sin(), azimuth.sin() * elevation.cos())
}

fn heading(azimuth: f64) -> Vec3<f64> {
    direction(azimuth, 0.0)
}

fn sample_params(entry: &SubcategoryEntry, d: &mut Draw, duration: f64) -> Result<FamilyParams<f64>, CatalogError> {
    Ok(match entry.family {
        Family::StraightLine => {
            let start = d.point("start")?;
            let speed = d.get("speed")?;
            let dir = direction(d.deg("azimuth_deg")?, d.deg("elevation_deg")?);
            FamilyParams::StraightLine { start, velocity: dir * speed }
        }
        Family::SimpleHarmonic => FamilyParams::SimpleHarmonic {
            center: d.point("center")?,
            axis: direction(d.deg("axis_azimuth_deg")?, d.deg("axis_elevation_deg")?),
            amplitude: d.get("amplitude")?,
            angular_frequency: d.get("angular_frequency")?,
            phase: d.deg("phase_deg")?,
        },
        Family::CircularArc => {
            let center = d.point("center")?;
            let radius = d.get("radius")?;
            let speed = d.get("angular_speed")? * d.sign();
            let start_angle = d.deg("start_angle_deg")?;
            let normal = direction(d.deg("heading_deg")?, std::f64::consts::FRAC_PI_2 - d.deg("tilt_deg")?);
            let (u1, u2) = plane_basis(normal);
            FamilyParams::CircularArc { center, radius, u1, u2, angular_velocity: speed, start_angle }
        }
        Family::Projectile => {
            let start = d.point("start")?;
            let peak = d.get("peak_height")?;
            let launch = d.deg("launch_deg")?;
            let speed = (2.0 * GRAVITY * peak).sqrt() / launch.sin();
            FamilyParams::Projectile { start, speed, launch_angle: launch, azimuth: d.deg("azimuth_deg")?, gravity: GRAVITY }
        }
        Family::Pendulum => FamilyParams::Pendulum {
            pivot: d.point("pivot")?,
            length: d.get("length")?,
            swing_direction: heading(d.deg("azimuth_deg")?),
            initial_angle: d.deg("initial_angle_deg")? * d.sign(),
            initial_angular_velocity: d.get("initial_angular_velocity")?,
            gravity: GRAVITY,
        },
        Family::InclinedRolling => FamilyParams::InclinedRolling {
            origin: d.point("origin")?,
            downhill: heading(d.deg("azimuth_deg")?),
            incline_angle: d.deg("incline_deg")?,
            initial_speed: d.get("initial_speed")?,
            gravity: GRAVITY,
        },
        Family::ImpactResponse => FamilyParams::ImpactResponse {
            start: d.point("start")?,
            speed: d.get("speed")?,
            launch_angle: d.deg("launch_deg")?,
            azimuth: d.deg("azimuth_deg")?,
            gravity: GRAVITY,
            ground_height: d.get("ground_height")?,
            restitution: d.get("restitution")?,
        },
        Family::Hybrid => sample_hybrid(entry, d, duration)?,
    })
}

/// Orthonormal `(u1, u2)` spanning the plane with the given normal, with
/// `u1 x u2 = normal`.
fn plane_basis(normal: Vec3<f64>) -> (Vec3<f64>, Vec3<f64>) {
    let n = normal.normalized().unwrap_or_else(Vec3::unit_y);
    let helper = if n.x.abs() < 0.9 { Vec3::unit_x() } else { Vec3::unit_z() };
    let u1 = (helper - n * helper.dot(n)).normalized().expect("helper not parallel");
    (u1, n.cross(u1))
}

fn line(start: Vec3<f64>, velocity: Vec3<f64>, duration: f64) -> Segment<f64> {
    Segment { params: FamilyParams::StraightLine { start, velocity }, duration }
}

fn tangent_arc(velocity: Vec3<f64>, radius: f64, ccw: bool, duration: f64) -> Segment<f64> {
    let params = FamilyParams::arc_tangent_to(velocity, Vec3::unit_y(), radius, ccw).expect("non-zero velocity");
    Segment { params, duration }
}

fn arc_end_velocity(seg: &Segment<f64>) -> Vec3<f64> {
    match &seg.params {
        FamilyParams::CircularArc { radius, u1, u2, angular_velocity, start_angle, .. } => {
            let a = start_angle + angular_velocity * seg.duration;
            (*u2 * a.cos() - *u1 * a.sin()) * (radius * angular_velocity)
        }
        _ => unreachable!("arc segment expected"),
    }
}

fn sample_hybrid(entry: &SubcategoryEntry, d: &mut Draw, duration: f64) -> Result<FamilyParams<f64>, CatalogError> {
    let variant = entry.variant.as_deref().unwrap_or("");
    let start = d.point("start")?;
    let speed = d.get("speed")?;
    let v0 = heading(d.deg("azimuth_deg")?) * speed;
    let segments = match variant {
        "line_arc" => {
            let d1 = duration * d.get("split")?;
            let ccw = d.sign() > 0.0;
            vec![line(start, v0, d1), tangent_arc(v0, d.get("radius")?, ccw, duration - d1)]
        }
        "arc_line" => {
            let d1 = duration * d.get("split")?;
            let ccw = d.sign() > 0.0;
            let arc = tangent_arc(v0, d.get("radius")?, ccw, d1);
            let v1 = arc_end_velocity(&arc);
            vec![arc, line(Vec3::zero(), v1, duration - d1)]
        }
        "lal" => {
            let d1 = duration * d.get("split")?;
            let d2 = duration * d.get("arc_fraction")?;
            let ccw = d.sign() > 0.0;
            let arc = tangent_arc(v0, d.get("radius")?, ccw, d2);
            let v2 = arc_end_velocity(&arc);
            vec![line(start, v0, d1), arc, line(Vec3::zero(), v2, duration - d1 - d2)]
        }
        "zigzag" => {
            let turn = d.deg("turn_deg")?;
            let third = duration / 3.0;
            let base = d.deg("azimuth_deg")?;
            let s = d.sign();
            vec![
                line(start, heading(base) * speed, third),
                line(Vec3::zero(), heading(base + s * turn) * speed, third),
                line(Vec3::zero(), heading(base) * speed, duration - 2.0 * third),
            ]
        }
        "stochastic" => {
            let count = d.rng.random_range(2..=4usize);
            let mut cuts: Vec<f64> = (0..count - 1).map(|_| d.rng.random_range(0.2..0.8)).collect();
            cuts.sort_by(f64::total_cmp);
            let mut bounds = vec![0.0];
            bounds.extend(cuts);
            bounds.push(1.0);
            let mut segs = Vec::with_capacity(count);
            let mut velocity = v0;
            for w in bounds.windows(2) {
                let seg_duration = duration * (w[1] - w[0]).max(0.05);
                let seg = match d.rng.random_range(0..3u8) {
                    0 => {
                        let v = heading(d.rng.random_range(0.0..std::f64::consts::TAU)) * speed;
                        line(Vec3::zero(), v, seg_duration)
                    }
                    1 => {
                        let ccw = d.sign() > 0.0;
                        tangent_arc(velocity, d.get("radius")?, ccw, seg_duration)
                    }
                    _ => Segment {
                        params: FamilyParams::SimpleHarmonic {
                            center: Vec3::zero(),
                            axis: heading(d.rng.random_range(0.0..std::f64::consts::TAU)),
                            amplitude: d.get("amplitude")?,
                            angular_frequency: d.get("angular_frequency")?,
                            phase: 0.0,
                        },
                        duration: seg_duration,
                    },
                };
                if let FamilyParams::CircularArc { .. } = seg.params {
                    velocity = arc_end_velocity(&seg);
                } else if let FamilyParams::StraightLine { velocity: v, .. } = seg.params {
                    velocity = v;
                }
                segs.push(seg);
            }
            // stretch the last piece so durations add up exactly
            let used: f64 = segs[..count - 1].iter().map(|s| s.duration).sum();
            segs[count - 1].duration = duration - used;
            translate(&mut segs[0].params, start);
            segs
        }
        other => return Err(CatalogError::Invalid(format!("{}: unknown hybrid variant `{other}`", entry.id))),
    };
    if segments.iter().any(|s| !(s.duration > 0.0)) {
        return Err(CatalogError::Invalid(format!("{}: segment fractions leave no room", entry.id)));
    }
    let micro = if variant == "stochastic" {
        let amp = d.get("micro_amplitude")?;
        let period = d.get("micro_period")?;
        let k = 3;
        let a = (0..k).map(|_| amp * d.rng.random_range(-1.0..1.0) / 3.0).collect();
        let b = (0..k).map(|_| amp * d.rng.random_range(-1.0..1.0) / 3.0).collect();
        Some(MicroOscillation {
            axis: Vec3::unit_y(),
            series: FourierSpec { omega: std::f64::consts::TAU / period, a0: 0.0, a, b },
        })
    } else {
        None
    };
    Ok(FamilyParams::Hybrid { segments, micro })
}

/// Moves a non-hybrid segment so that it begins at `by` rather than the
/// origin.
fn translate(params: &mut FamilyParams<f64>, by: Vec3<f64>) {
    match params {
        FamilyParams::StraightLine { start, .. } => *start += by,
        FamilyParams::CircularArc { center, .. } | FamilyParams::SimpleHarmonic { center, .. } => *center += by,
        _ => unreachable!("stochastic hybrids only draw lines, arcs and oscillations"),
    }
}

fn sample_object_entry(entry: &ObjectEntry, rng: &mut ChaCha8Rng) -> Result<ObjectShape<f64>, CatalogError> {
    let mut d = Draw { entry: &entry.id, ranges: &entry.params, rng: rng.clone() };
    let shape = match entry.kind.as_str() {
        "sphere" => ShapeKind::Sphere { radius: d.get("radius")? },
        "box" => ShapeKind::Box { half_extents: Vec3::new(d.get("half_x")?, d.get("half_y")?, d.get("half_z")?) },
        "cylinder" => ShapeKind::Cylinder { radius: d.get("radius")?, half_height: d.get("half_height")? },
        other => return Err(CatalogError::Invalid(format!("{}: unknown object kind `{other}`", entry.id))),
    };
    let yaw = d.rng.random_range(0.0..std::f64::consts::TAU);
    *rng = d.rng;
    ObjectShape::new(shape, Vec3::zero(), Quat::from_axis_angle(Vec3::unit_y(), yaw))
        .map_err(|e| CatalogError::Invalid(format!("{}: {e}", entry.id)))
}

/// Recomputes the checksum line of a catalog text. Used when editing the
/// catalog by hand.
pub fn rehash(text: &str) -> Result<String, CatalogError> {
    let file: CatalogFile = toml::from_str(text).map_err(|e| CatalogError::Parse(e.to_string()))?;
    Ok(content_checksum(file.version, &file.object, &file.subcategory))
}
