//! Light-sensor placement planning and light-state disaggregation.
//!
//! The pipeline runs from a floor plan ([`scene`]) through per-luminaire
//! direct illuminance ([`transport`]) to two consumers: recovering which
//! luminaires are on from a summed reading ([`inference`]), and choosing
//! sensor positions that can tell building states apart ([`planning`]).
//! [`ingest`] reduces logged sensor streams to the same inference inputs,
//! and [`report`] holds the CSV and image writers.

pub mod error;
pub mod inference;
pub mod ingest;
pub mod planning;
pub mod report;
pub mod scene;
pub mod transport;

pub use error::{CoverError, InferenceError, IngestError, ParseError, SceneError};
pub use inference::{
    fuse_votes, infer, jaccard_accuracy, perfect_sum, sensor_votes, InferenceResult,
    PerfectSumQuery, VoteVector,
};
pub use planning::{
    aggregate_distinctness, build_cover_instance, build_cover_instance_for, distinctness_vector,
    exact_min_cover, greedy_set_cover, resolved_luminaires, state_distinctness, CoverInstance,
    CoverSolution, DistinctnessVector, Membership, StateSpace,
};
pub use scene::{
    enumerate_door_states, load_scene, make_grid, parse_ies, parse_scene, Angle, CandidatePoint,
    Door, DoorState, IesTable, Luminaire, PhotometricProfile, Point2, Scene, WallSegment,
};
pub use transport::{
    contribution, contribution_vector, reading, sweep, ContributionMatrix, ContributionVector,
    LightConfig, NoiseModel,
};
