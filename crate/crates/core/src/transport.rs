//! Direct illuminance from each luminaire at candidate points, and the summed
//! readings a sensor would report for a light configuration.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::SceneError;
use crate::scene::{CandidatePoint, DoorState, Luminaire, Scene, SensorNormal, WallSegment};

/// Upper end of the modelled sensor's range, in lux.
pub const SENSOR_MAX_LUX: f64 = 88_000.0;

/// On/off state of every luminaire. Bit `i` of the index is luminaire `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LightConfig {
    mask: u32,
    n: u8,
}

impl LightConfig {
    pub fn from_index(p: u32, n: usize) -> Self {
        assert!(n <= 32, "at most 32 luminaires fit a configuration mask");
        let limit = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
        assert!(
            p <= limit,
            "configuration index {p} out of range for n = {n}"
        );
        Self {
            mask: p,
            n: n as u8,
        }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mask = bits
            .iter()
            .enumerate()
            .fold(0u32, |m, (i, &b)| if b { m | (1 << i) } else { m });
        Self::from_index(mask, bits.len())
    }

    pub fn all_off(n: usize) -> Self {
        Self::from_index(0, n)
    }

    /// Every configuration for `n` luminaires in ascending index order.
    pub fn all(n: usize) -> impl Iterator<Item = LightConfig> {
        (0..1u64 << n).map(move |p| Self::from_index(p as u32, n))
    }

    pub fn index(&self) -> u32 {
        self.mask
    }

    pub fn len(&self) -> usize {
        self.n as usize
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn is_on(&self, i: usize) -> bool {
        self.mask >> i & 1 == 1
    }

    pub fn bits(&self) -> Vec<bool> {
        (0..self.len()).map(|i| self.is_on(i)).collect()
    }

    pub fn count_on(&self) -> u32 {
        self.mask.count_ones()
    }
}

impl fmt::Display for LightConfig {
    /// `l_0 l_1 ... l_{n-1}` as a string of 0/1.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len() {
            f.write_str(if self.is_on(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    None,
    Gaussian { sigma: f64, seed: u64 },
}

impl NoiseModel {
    pub fn gaussian(sigma: f64, seed: u64) -> Self {
        assert!(
            sigma >= 0.0 && sigma.is_finite(),
            "sigma must be non-negative"
        );
        Self::Gaussian { sigma, seed }
    }

    /// Independent stream for one task, keyed by a stable hash of the parts.
    pub fn for_task(&self, parts: &[u64]) -> Self {
        match *self {
            Self::None => Self::None,
            Self::Gaussian { sigma, seed } => Self::Gaussian {
                sigma,
                seed: derive_seed(seed, parts),
            },
        }
    }

    fn sample(&self) -> f64 {
        match *self {
            Self::None => 0.0,
            Self::Gaussian { sigma: 0.0, .. } => 0.0,
            Self::Gaussian { sigma, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                Normal::new(0.0, sigma)
                    .expect("sigma validated at construction")
                    .sample(&mut rng)
            }
        }
    }
}

/// SplitMix64-style mixing of a seed with task identifiers.
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    parts.iter().fold(mix(seed), |acc, &p| mix(acc ^ mix(p)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContributionVector {
    pub values: Vec<f64>,
    pub point_index: usize,
    pub door_state_index: usize,
}

/// Per (candidate, door state) contribution vectors, stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct ContributionMatrix {
    n: usize,
    points: usize,
    door_states: usize,
    data: Vec<f64>,
}

impl ContributionMatrix {
    pub fn luminaire_count(&self) -> usize {
        self.n
    }

    pub fn point_count(&self) -> usize {
        self.points
    }

    pub fn door_state_count(&self) -> usize {
        self.door_states
    }

    pub fn values(&self, point: usize, door_state: usize) -> &[f64] {
        assert!(point < self.points && door_state < self.door_states);
        let start = (point * self.door_states + door_state) * self.n;
        &self.data[start..start + self.n]
    }

    pub fn vector(&self, point: usize, door_state: usize) -> ContributionVector {
        ContributionVector {
            values: self.values(point, door_state).to_vec(),
            point_index: point,
            door_state_index: door_state,
        }
    }
}

/// Illuminance (lux) on a sensor from one luminaire with the given
/// occluders in place.
fn illuminance(
    occluders: &[WallSegment],
    luminaire: &Luminaire,
    point: &CandidatePoint,
) -> Result<f64, SceneError> {
    let dx = point.position.x - luminaire.position.x;
    let dy = point.position.y - luminaire.position.y;
    let dz = point.height - luminaire.mount_height;
    let d2 = dx * dx + dy * dy + dz * dz;
    if d2.is_nan() || d2 <= 0.0 {
        return Err(SceneError::Degenerate(luminaire.id));
    }
    if occluders
        .iter()
        .any(|w| w.blocks(luminaire.position, point.position))
    {
        return Ok(0.0);
    }
    let d = d2.sqrt();
    let vertical = (-dz / d).clamp(-1.0, 1.0).acos().to_degrees();
    let horizontal = dy.atan2(dx).to_degrees();
    let intensity = luminaire.intensity_toward(vertical, horizontal);
    let cos_sensor = match point.normal {
        SensorNormal::Omni => 1.0,
        SensorNormal::Directed(n) => ((-dx * n[0] - dy * n[1] - dz * n[2]) / d).max(0.0),
    };
    Ok(intensity * cos_sensor / d2)
}

/// Contribution of a single luminaire at `point` under `door_state`.
pub fn contribution(
    scene: &Scene,
    door_state: &DoorState,
    luminaire: &Luminaire,
    point: &CandidatePoint,
) -> Result<f64, SceneError> {
    illuminance(&scene.occluders(door_state)?, luminaire, point)
}

fn values_at(
    scene: &Scene,
    occluders: &[WallSegment],
    point: &CandidatePoint,
) -> Result<Vec<f64>, SceneError> {
    scene
        .luminaires
        .iter()
        .map(|l| illuminance(occluders, l, point))
        .collect()
}

/// Contributions of every luminaire at `point`, indexed by luminaire id.
pub fn contribution_vector(
    scene: &Scene,
    door_state: &DoorState,
    point: &CandidatePoint,
) -> Result<Vec<f64>, SceneError> {
    values_at(scene, &scene.occluders(door_state)?, point)
}

/// Noiseless sum of the contributions of lit luminaires, summed in index
/// order. Every subset sum in the crate goes through this ordering.
pub fn config_sum(values: &[f64], config: LightConfig) -> f64 {
    values
        .iter()
        .enumerate()
        .filter(|(i, _)| config.is_on(*i))
        .fold(0.0, |acc, (_, v)| acc + v)
}

/// Sensor reading for `config`, with optional Gaussian jitter, clamped at 0.
pub fn reading(values: &[f64], config: LightConfig, noise: &NoiseModel) -> f64 {
    assert_eq!(
        values.len(),
        config.len(),
        "contribution/config length mismatch"
    );
    (config_sum(values, config) + noise.sample()).max(0.0)
}

/// Full contribution matrix over `candidates` × `door_states`, computed in
/// parallel over candidates. Output does not depend on scheduling.
pub fn sweep(
    scene: &Scene,
    door_states: &[DoorState],
    candidates: &[CandidatePoint],
) -> Result<ContributionMatrix, SceneError> {
    let occluders = door_states
        .iter()
        .map(|s| scene.occluders(s))
        .collect::<Result<Vec<_>, _>>()?;
    let n = scene.luminaire_count();
    let rows: Vec<Vec<f64>> = candidates
        .par_iter()
        .map(|p| {
            let mut row = Vec::with_capacity(occluders.len() * n);
            for occ in &occluders {
                row.extend(values_at(scene, occ, p)?);
            }
            Ok(row)
        })
        .collect::<Result<_, SceneError>>()?;
    Ok(ContributionMatrix {
        n,
        points: candidates.len(),
        door_states: door_states.len(),
        data: rows.concat(),
    })
}
