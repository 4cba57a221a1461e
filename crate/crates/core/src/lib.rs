//! Refinement of coarse semantic segmentations into full-resolution label maps.
//!
//! The pipeline has three blocks:
//!
//! 1. **Seed selection** ([`seeding`]): class probabilities estimated on a
//!    low-resolution image are bicubically upsampled ([`resample`]); pixels
//!    whose top-two class margin is small are discarded, and the remaining
//!    per-class regions are thinned and pruned ([`morphology`]) to drop
//!    pixels near object boundaries.
//! 2. **Edge weights** ([`weights`]): a full-resolution boundary probability
//!    map sets the weight of every 4-adjacency edge.
//! 3. **Propagation** ([`rw_solver`]): a seeded random walker labels the
//!    remaining pixels by solving grounded Laplacian systems.
//!
//! [`metrics`] evaluates results (IoU, boundary-distance error histograms,
//! seed quality) and [`experiments`] runs the robustness studies. Synthetic
//! scenes for testing live in [`fixture`].

pub mod error;
pub mod experiments;
pub mod fixture;
pub mod metrics;
pub mod morphology;
pub mod pipeline;
pub mod raster_io;
pub mod resample;
pub mod rng;
pub mod rw_solver;
pub mod seeding;
pub mod types;
pub mod weights;

pub use error::{Error, Result};
pub use pipeline::{refine, refine_with_seeds, Refinement};
pub use rw_solver::RwSolution;
pub use types::{
    BinaryMask, EdgeWeightGrid, ImageRgb, LabelMap, PipelineConfig, ProbMap, SeedSet, Validate,
    UNLABELED, WEIGHT_FLOOR,
};
