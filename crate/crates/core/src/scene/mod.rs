//! Floor-plan data model.
//!
//! Geometry is 2.5D: walls and door leaves are segments in plan view and act
//! as full-height opaque planes, while luminaires and sensors carry heights so
//! that distances and emission angles are computed in 3D.

mod file;
pub mod geometry;
pub mod ies;

use std::fmt;

use crate::error::SceneError;

pub use file::{load_scene, parse_scene, parse_scene_at, render_scene};
pub use geometry::{Point2, WallSegment};
pub use ies::{parse_ies, IesTable};

/// Largest luminaire count accepted; downstream enumeration is `2^n`.
pub const MAX_LUMINAIRES: usize = 24;

/// Grid points closer than this to a wall are dropped.
const WALL_CLEARANCE: f64 = 1e-6;

/// An angle stored in degrees, the unit used by scene files, so that
/// parse/render round-trips are exact.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Angle(f64);

impl Angle {
    pub const fn from_degrees(degrees: f64) -> Self {
        Self(degrees)
    }

    pub fn degrees(self) -> f64 {
        self.0
    }

    pub fn radians(self) -> f64 {
        self.0.to_radians()
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}°", self.0)
    }
}

/// Opening angles used when a door line lists none.
pub const DEFAULT_DOOR_ANGLES: [Angle; 3] = [
    Angle::from_degrees(0.0),
    Angle::from_degrees(45.0),
    Angle::from_degrees(90.0),
];

/// A hinged door. At angle 0 the leaf fills its doorway gap; opening rotates
/// the leaf counter-clockwise about the hinge.
#[derive(Debug, Clone, PartialEq)]
pub struct Door {
    pub label: String,
    pub hinge: Point2,
    pub leaf_length: f64,
    pub closed_heading: Angle,
    pub allowed_angles: Vec<Angle>,
}

impl Door {
    pub fn new(
        label: impl Into<String>,
        hinge: Point2,
        leaf_length: f64,
        closed_heading: Angle,
        allowed_angles: Vec<Angle>,
    ) -> Result<Self, SceneError> {
        let label = label.into();
        let invalid = |message: &str| SceneError::InvalidDoor {
            label: label.clone(),
            message: message.to_string(),
        };
        if !hinge.is_finite() || !closed_heading.0.is_finite() {
            return Err(SceneError::NonFinite);
        }
        if !(leaf_length.is_finite() && leaf_length > 0.0) {
            return Err(invalid("leaf length must be positive"));
        }
        if allowed_angles.is_empty() {
            return Err(invalid("at least one allowed angle is required"));
        }
        for (i, a) in allowed_angles.iter().enumerate() {
            if !(0.0..=90.0).contains(&a.degrees()) {
                return Err(invalid(&format!("angle {a} outside [0°, 90°]")));
            }
            if allowed_angles[..i].contains(a) {
                return Err(invalid(&format!("angle {a} listed twice")));
            }
        }
        Ok(Self {
            label,
            hinge,
            leaf_length,
            closed_heading,
            allowed_angles,
        })
    }

    /// Leaf geometry with the door opened by `angle`.
    pub fn leaf_segment(&self, angle: Angle) -> Result<WallSegment, SceneError> {
        if !self.allowed_angles.contains(&angle) {
            return Err(SceneError::AngleNotAllowed {
                label: self.label.clone(),
                degrees: angle.degrees(),
            });
        }
        Ok(self.leaf_at(angle))
    }

    fn leaf_at(&self, angle: Angle) -> WallSegment {
        let heading = self.closed_heading.radians() + angle.radians();
        let tip = Point2::new(
            self.hinge.x + self.leaf_length * heading.cos(),
            self.hinge.y + self.leaf_length * heading.sin(),
        );
        WallSegment {
            a: self.hinge,
            b: tip,
        }
    }
}

/// Free-function form of [`Door::leaf_segment`].
pub fn door_leaf_segment(door: &Door, angle: Angle) -> Result<WallSegment, SceneError> {
    door.leaf_segment(angle)
}

#[derive(Debug, Clone, PartialEq)]
pub enum PhotometricProfile {
    /// Uniform intensity in every direction.
    Isotropic,
    /// Downlight: intensity scales with the cosine of the angle from nadir.
    CosineLobe,
    /// Tabulated distribution; `source` is the path as written in the scene.
    Ies { source: String, table: IesTable },
}

impl PhotometricProfile {
    /// Fraction of peak intensity toward the given direction.
    pub fn relative_intensity(&self, vertical_deg: f64, horizontal_deg: f64) -> f64 {
        match self {
            Self::Isotropic => 1.0,
            Self::CosineLobe => vertical_deg.to_radians().cos().max(0.0),
            Self::Ies { table, .. } => {
                let peak = table.peak();
                if peak > 0.0 {
                    table.lookup(vertical_deg, horizontal_deg) / peak
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Luminaire {
    pub id: usize,
    pub label: String,
    pub position: Point2,
    pub mount_height: f64,
    /// Peak intensity in candela.
    pub intensity: f64,
    pub profile: PhotometricProfile,
}

impl Luminaire {
    /// Candela emitted toward a direction given by its polar angle from
    /// nadir and plan-view azimuth, both in degrees.
    pub fn intensity_toward(&self, vertical_deg: f64, horizontal_deg: f64) -> f64 {
        self.intensity
            * self
                .profile
                .relative_intensity(vertical_deg, horizontal_deg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SensorNormal {
    Omni,
    Directed([f64; 3]),
}

impl SensorNormal {
    pub fn directed(n: [f64; 3]) -> Result<Self, SceneError> {
        let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        if !len.is_finite() || (len - 1.0).abs() > 1e-6 {
            return Err(SceneError::NonUnitNormal);
        }
        Ok(Self::Directed(n))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidatePoint {
    pub position: Point2,
    pub height: f64,
    pub normal: SensorNormal,
}

/// Axis-aligned rectangle in plan view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub min: Point2,
    pub max: Point2,
}

impl Bounds {
    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub bounds: Bounds,
    pub spacing: f64,
    pub height: f64,
    pub normal: SensorNormal,
}

/// Row-major grid of cell centres covering `bounds`. A trailing partial cell
/// gets a point at its own centre.
pub fn make_grid(spec: &GridSpec) -> Result<Vec<CandidatePoint>, SceneError> {
    let b = spec.bounds;
    if !b.min.is_finite() || !b.max.is_finite() || !spec.height.is_finite() {
        return Err(SceneError::NonFinite);
    }
    if !(b.width() > 0.0 && b.height() > 0.0) {
        return Err(SceneError::InvalidGrid("empty bounds".into()));
    }
    if !(spec.spacing.is_finite() && spec.spacing > 0.0) {
        return Err(SceneError::InvalidGrid("spacing must be positive".into()));
    }
    let axis = |lo: f64, hi: f64| -> Vec<f64> {
        let cells = ((hi - lo) / spec.spacing).ceil().max(1.0) as usize;
        (0..cells)
            .map(|i| {
                let start = lo + i as f64 * spec.spacing;
                let end = (start + spec.spacing).min(hi);
                0.5 * (start + end)
            })
            .collect()
    };
    let xs = axis(b.min.x, b.max.x);
    let ys = axis(b.min.y, b.max.y);
    Ok(ys
        .iter()
        .flat_map(|&y| {
            xs.iter().map(move |&x| CandidatePoint {
                position: Point2::new(x, y),
                height: spec.height,
                normal: spec.normal,
            })
        })
        .collect())
}

/// One opening angle per door, in scene door order.
#[derive(Debug, Clone, PartialEq)]
pub struct DoorState {
    pub angles: Vec<Angle>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub ceiling_height: f64,
    pub walls: Vec<WallSegment>,
    pub doors: Vec<Door>,
    pub luminaires: Vec<Luminaire>,
    /// Grid declarations, kept so the scene can be rendered back to text.
    pub grids: Vec<GridSpec>,
    /// Individually declared sensor points.
    pub sensors: Vec<CandidatePoint>,
    /// Expanded grids followed by the individual sensors.
    pub candidates: Vec<CandidatePoint>,
}

impl Scene {
    pub fn new(
        ceiling_height: f64,
        walls: Vec<WallSegment>,
        doors: Vec<Door>,
        luminaires: Vec<Luminaire>,
        grids: Vec<GridSpec>,
        sensors: Vec<CandidatePoint>,
    ) -> Result<Self, SceneError> {
        if !(ceiling_height.is_finite() && ceiling_height > 0.0) {
            return Err(SceneError::NonFinite);
        }
        if luminaires.is_empty() {
            return Err(SceneError::NoLuminaires);
        }
        if luminaires.len() > MAX_LUMINAIRES {
            return Err(SceneError::TooManyLuminaires(luminaires.len()));
        }
        for (i, lum) in luminaires.iter().enumerate() {
            let invalid = |message: &str| SceneError::InvalidLuminaire {
                label: lum.label.clone(),
                message: message.to_string(),
            };
            if lum.id != i {
                return Err(invalid("ids must be contiguous from 0"));
            }
            if luminaires[..i].iter().any(|o| o.label == lum.label) {
                return Err(SceneError::DuplicateLuminaire(lum.label.clone()));
            }
            if !lum.position.is_finite() {
                return Err(SceneError::NonFinite);
            }
            if !(lum.intensity.is_finite() && lum.intensity >= 0.0) {
                return Err(invalid("intensity must be non-negative"));
            }
            if !(lum.mount_height > 0.0 && lum.mount_height <= ceiling_height) {
                return Err(invalid("mount height must lie in (0, ceiling]"));
            }
        }
        for (i, door) in doors.iter().enumerate() {
            if doors[..i].iter().any(|o| o.label == door.label) {
                return Err(SceneError::InvalidDoor {
                    label: door.label.clone(),
                    message: "duplicate door label".into(),
                });
            }
            let closed = door.leaf_at(Angle::from_degrees(0.0));
            if walls.iter().any(|w| w.blocks(closed.a, closed.b)) {
                return Err(SceneError::InvalidDoor {
                    label: door.label.clone(),
                    message: "closed leaf crosses a wall instead of filling a gap".into(),
                });
            }
        }
        for s in &sensors {
            validate_point(s)?;
        }

        let mut candidates = Vec::new();
        let footprint = footprint(&walls);
        for grid in &grids {
            for p in make_grid(grid)? {
                let on_wall = walls
                    .iter()
                    .any(|w| w.distance_to(p.position) <= WALL_CLEARANCE);
                let outside = footprint.is_some_and(|f| !f.contains(p.position));
                if !on_wall && !outside {
                    candidates.push(p);
                }
            }
        }
        candidates.extend(sensors.iter().copied());

        Ok(Self {
            ceiling_height,
            walls,
            doors,
            luminaires,
            grids,
            sensors,
            candidates,
        })
    }

    pub fn luminaire_count(&self) -> usize {
        self.luminaires.len()
    }

    /// Rebuilds the scene with every grid's spacing replaced.
    pub fn with_grid_spacing(&self, spacing: f64) -> Result<Self, SceneError> {
        let grids = self
            .grids
            .iter()
            .map(|g| GridSpec { spacing, ..*g })
            .collect();
        Self::new(
            self.ceiling_height,
            self.walls.clone(),
            self.doors.clone(),
            self.luminaires.clone(),
            grids,
            self.sensors.clone(),
        )
    }

    /// All door-angle combinations; the first door varies slowest.
    pub fn door_states(&self) -> Vec<DoorState> {
        enumerate_door_states(self)
    }

    /// Index into [`Scene::door_states`] of the state with every door at
    /// its widest allowed angle.
    pub fn open_door_state(&self) -> usize {
        self.door_states()
            .iter()
            .position(|s| {
                self.doors
                    .iter()
                    .zip(&s.angles)
                    .all(|(d, a)| d.allowed_angles.iter().all(|b| b.degrees() <= a.degrees()))
            })
            .expect("the widest angles form one of the enumerated states")
    }

    /// Walls plus door leaves for the given state.
    pub fn occluders(&self, state: &DoorState) -> Result<Vec<WallSegment>, SceneError> {
        if state.angles.len() != self.doors.len() {
            return Err(SceneError::DoorStateLength {
                expected: self.doors.len(),
                found: state.angles.len(),
            });
        }
        let mut out = self.walls.clone();
        for (door, &angle) in self.doors.iter().zip(&state.angles) {
            out.push(door.leaf_segment(angle)?);
        }
        Ok(out)
    }

    /// Human-readable label such as `bed=90,bath=45`.
    pub fn door_state_label(&self, state: &DoorState) -> String {
        self.doors
            .iter()
            .zip(&state.angles)
            .map(|(d, a)| format!("{}={}", d.label, a.degrees()))
            .collect::<Vec<_>>()
            .join(",")
    }
}

fn validate_point(p: &CandidatePoint) -> Result<(), SceneError> {
    if !p.position.is_finite() || !p.height.is_finite() {
        return Err(SceneError::NonFinite);
    }
    if let SensorNormal::Directed(n) = p.normal {
        SensorNormal::directed(n)?;
    }
    Ok(())
}

/// Bounding box of all walls, used to discard grid points outside the plan.
fn footprint(walls: &[WallSegment]) -> Option<Bounds> {
    let mut it = walls.iter().flat_map(|w| [w.a, w.b]);
    let first = it.next()?;
    let (min, max) = it.fold((first, first), |(lo, hi), p| {
        (
            Point2::new(lo.x.min(p.x), lo.y.min(p.y)),
            Point2::new(hi.x.max(p.x), hi.y.max(p.y)),
        )
    });
    Some(Bounds { min, max })
}

/// Cartesian product of every door's allowed angles in lexicographic order,
/// first door slowest. A scene without doors has a single empty state.
pub fn enumerate_door_states(scene: &Scene) -> Vec<DoorState> {
    let mut states = vec![DoorState { angles: Vec::new() }];
    for door in &scene.doors {
        states = states
            .into_iter()
            .flat_map(|s| {
                door.allowed_angles.iter().map(move |&a| {
                    let mut angles = s.angles.clone();
                    angles.push(a);
                    DoorState { angles }
                })
            })
            .collect();
    }
    states
}
