//! Exact constructions and certificates for online bounded-space hypercube
//! bin packing lower bounds.
//!
//! The crate builds families of gapped, pairwise-separated codes over `[k]^d`,
//! places the corresponding open hypercubes inside the unit bin as an
//! ε-packing with a certified weight, derives the adversarial instance stream
//! that forces any bounded-space online algorithm to pay roughly the packing
//! weight per offline bin pair, and simulates a reference bounded-space
//! algorithm over such streams.
//!
//! Every quantity on a correctness path is an exact rational or big integer;
//! floating point never enters geometry, counting or certification. The one
//! irrational ingredient, the natural logarithm used to size the family and to
//! check the packing-weight target, is handled through outward-rounded
//! rational enclosures (see [`natlog`]).

pub mod adversary;
pub mod codes;
pub mod coordset;
pub mod geometry;
pub mod natlog;
pub mod packing;
pub mod rat;
pub mod rng;
pub mod simulator;

pub use adversary::{InstanceStream, OfflineCertificate, Scale};
pub use codes::{Code, CodeFamily, CodeRepr, FamilyKind, SizeCertificate, Word};
pub use coordset::CoordSet;
pub use geometry::{AxisBox, Interval};
pub use packing::{EpsilonPacking, PackingMode, PlacedCube, ValidationReport};
pub use rat::Rat;
pub use simulator::{ClassNextFit, SimMode, SimReport};

/// Resource limits that keep explicit enumeration and per-item expansion
/// within desk scale. All limits are inclusive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Caps {
    /// Maximum number of words a single code (or cubes a single packing) may
    /// materialize explicitly.
    pub explicit_words: u64,
    /// Maximum number of bad-word events handled by exact inclusion-exclusion
    /// counting (`2^ie_events` terms).
    pub ie_events: u32,
    /// Maximum total item count for per-item stream expansion.
    pub per_item: u64,
    /// Maximum total decimal digits across all segment counts of an instance.
    pub instance_decimal_digits: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            explicit_words: 1_000_000,
            ie_events: 20,
            per_item: 100_000,
            instance_decimal_digits: 1_000_000,
        }
    }
}

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid epsilon {eps}: {why}")]
    InvalidEps { eps: String, why: String },
    #[error("letter {letter} out of range [1,{k}]")]
    LetterOutOfRange { letter: u32, k: u32 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(
        "retries exhausted after {attempts} attempts: worst pair |F_{k} ∩ F_{k2}| = {size}, \
         need 26·|∩| < 7·{d}"
    )]
    RetriesExhausted {
        attempts: u64,
        k: u32,
        k2: u32,
        size: usize,
        d: usize,
    },
    #[error("{what} cap exceeded: need {needed}, cap {cap}")]
    CapExceeded {
        what: &'static str,
        needed: String,
        cap: String,
    },
    #[error("exact counts required: class {k} carries a lower-bound certificate")]
    InexactCount { k: u32 },
    #[error("unknown algorithm: {0}")]
    UnknownAlgorithm(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
