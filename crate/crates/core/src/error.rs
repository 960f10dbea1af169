use thiserror::Error;

/// Errors raised while reading a scene description or photometric file.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: {message}")]
    Semantic { line: usize, message: String },
    #[error("unsupported TILT mode `{0}` (only TILT=NONE is accepted)")]
    UnsupportedTilt(String),
    #[error("candela table truncated: expected {expected} values, found {found}")]
    TruncatedTable { expected: usize, found: usize },
    #[error("{which} angles are not strictly increasing")]
    NonMonotonicAngles { which: &'static str },
    #[error("{0}")]
    Invalid(String),
    #[error("could not read `{path}`: {message}")]
    Io { path: String, message: String },
}

/// Violations of a domain invariant detected after parsing or at construction.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("wall segment has zero length at ({x}, {y})")]
    ZeroLengthWall { x: f64, y: f64 },
    #[error("door `{label}`: {message}")]
    InvalidDoor { label: String, message: String },
    #[error("luminaire `{label}`: {message}")]
    InvalidLuminaire { label: String, message: String },
    #[error("duplicate luminaire label `{0}`")]
    DuplicateLuminaire(String),
    #[error("scene has no luminaires")]
    NoLuminaires,
    #[error("scene has {0} luminaires; at most {max} are supported", max = crate::scene::MAX_LUMINAIRES)]
    TooManyLuminaires(usize),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("candidate point normal is not unit length")]
    NonUnitNormal,
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("door state has {found} angles but the scene has {expected} doors")]
    DoorStateLength { expected: usize, found: usize },
    #[error("door `{label}` does not allow an angle of {degrees}°")]
    AngleNotAllowed { label: String, degrees: f64 },
    #[error("degenerate geometry: sensor coincides with luminaire {0}")]
    Degenerate(usize),
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{file} line {line}: {message}")]
    Malformed {
        file: &'static str,
        line: usize,
        message: String,
    },
    #[error("location {location}: missing baseline for configuration {config}")]
    MissingConfig { location: usize, config: u32 },
    #[error("command timestamps must be strictly increasing (line {0})")]
    CommandOrder(usize),
    #[error("location {location}: timestamps decrease at t={t}")]
    SampleOrder { location: usize, t: f64 },
    #[error("lux value {0} outside sensor range [0, 88000]")]
    OutOfRange(f64),
    #[error("bitmask {mask} does not fit {n} luminaires")]
    BadMask { mask: u64, n: usize },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoverError {
    #[error("universe has {size} elements; exact solver limit is {limit}")]
    TooLarge { size: usize, limit: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InferenceError {
    #[error("contributions must be finite and non-negative")]
    InvalidContribution,
    #[error("target and epsilon must be finite, epsilon non-negative")]
    InvalidTolerance,
    #[error("{0} luminaires exceeds the enumeration limit")]
    TooMany(usize),
    #[error("vote vectors disagree in length ({expected} vs {found})")]
    LengthMismatch { expected: usize, found: usize },
    #[error("no vote vectors to fuse")]
    NoVotes,
}
