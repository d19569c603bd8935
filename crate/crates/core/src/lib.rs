//! MIRA: a movie recommender organised as a cognitive cycle.
//!
//! A user id enters as a stimulus; declarative memory retrieves the user's
//! ratings and the most similar users; the workspace builds a histogram of the
//! neighbours' unseen movies labelled by a K-Means genre clustering; attention
//! keeps the movies in the user's preferred cluster; the highest-averaging
//! movies win and are returned as a ranked list.
//!
//! The numeric code is generic over [`Scalar`] (`f32` or `f64`). The aliases at
//! the crate root fix the scalar to `f64`, which is what the CLI and the
//! reported experiments use.

pub mod baseline;
pub mod clustering;
pub mod cycle;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod genre;
pub mod kmeans;
pub mod memory;
pub mod scalar;

pub use cycle::CycleConfig;
pub use dataset::{Catalog, Movie, MovieId, Rating, RatingsStore, UserId};
pub use error::{Error, Result};
pub use genre::{Genre, GenreSet};
pub use memory::UserHistory;
pub use scalar::Scalar;

pub type ClusterModel = clustering::ClusterModel<f64>;
pub type SimilarUser = memory::SimilarUser<f64>;
pub type RecommendationList = cycle::RecommendationList<f64>;
pub type RecommendationReport = cycle::RecommendationReport<f64>;
pub type CompetitionResult = cycle::CompetitionResult<f64>;
pub type PredictedRating = baseline::PredictedRating<f64>;
pub type PrecisionReport = evaluation::PrecisionReport<f64>;
pub type GridReport = evaluation::GridReport<f64>;
pub type ComparisonReport = evaluation::ComparisonReport<f64>;
pub type SessionReport = evaluation::SessionReport<f64>;

pub type ClusterModel32 = clustering::ClusterModel<f32>;
pub type RecommendationList32 = cycle::RecommendationList<f32>;
pub type PrecisionReport32 = evaluation::PrecisionReport<f32>;
