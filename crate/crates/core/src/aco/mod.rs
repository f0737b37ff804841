//! Continuous-domain ant colony optimization over random-key vectors.
//!
//! The pheromone model is a ranked archive of elite key vectors. Each ant
//! picks an archive member with probability proportional to a Gaussian rank
//! weight and samples every coordinate around it, with a spread given by the
//! archive's dispersion in that coordinate. The best ant of a generation is
//! refined with Nelder-Mead, and decoded objectives are memoized in a
//! bounded FIFO cache.

mod archive;
mod cache;
mod engine;
mod nelder_mead;
mod sampling;

pub use archive::{Archive, ArchiveEntry};
pub use cache::{DecodeCache, Q_MAX};
pub use engine::{decode_seed, Engine, EngineConfig, GenerationReport, InitReport};
pub use nelder_mead::{nelder_mead, NelderMeadConfig, NelderMeadResult};
pub use sampling::{rank_weights, sample_ant, selection_probs, sigma, SamplingConfig};
