//! Comparison recommender: user-based collaborative filtering with cosine
//! similarity and a similarity-weighted mean prediction.
//!
//! This is a standard CF design used as the reference point for precision
//! comparisons; it is not a reimplementation of any particular system.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::cycle::{RecommendationItem, RecommendationList};
use crate::dataset::{Catalog, MovieId, RatingsStore, UserId};
use crate::error::{Error, Result};
use crate::memory::{self, SimilarUser};
use crate::scalar::{desc, Scalar};

pub const BASELINE_LABEL: &str = "baseline";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PredictedRating<T> {
    pub movie_id: MovieId,
    pub predicted: T,
}

fn clamp<T: Scalar>(x: T) -> T {
    x.max(T::one()).min(T::from_rating(5))
}

fn mean_of<T: Scalar>(values: impl Iterator<Item = u8>) -> Option<T> {
    let (sum, n) = values.fold((0u64, 0usize), |(s, n), v| (s + u64::from(v), n + 1));
    (n > 0).then(|| T::from_u64(sum).expect("sum fits") / T::from_count(n))
}

/// Similarity-weighted mean over the neighbours who rated `movie_id`.
///
/// When every contributing neighbour has zero similarity the plain mean of
/// their ratings is used. Returns `None` when no neighbour rated the movie.
fn neighbour_estimate<T: Scalar>(neighbours: &[SimilarUser<T>], movie_id: MovieId) -> Option<T> {
    let mut weighted = T::zero();
    let mut mass = T::zero();
    let mut raw = Vec::new();
    for n in neighbours {
        if let Some(v) = n.history.ratings.get(&movie_id) {
            let r = T::from_rating(*v);
            weighted = weighted + n.similarity * r;
            mass = mass + n.similarity;
            raw.push(*v);
        }
    }
    if raw.is_empty() {
        None
    } else if mass > T::zero() {
        Some(weighted / mass)
    } else {
        mean_of(raw.into_iter())
    }
}

fn global_estimate<T: Scalar>(store: &RatingsStore, movie_id: MovieId) -> T {
    store
        .movie(movie_id)
        .and_then(|raters| mean_of(raters.values().copied()))
        .or_else(|| mean_of(store.triples().map(|(_, _, v)| v)))
        .unwrap_or_else(|| T::from_rating(3))
}

pub fn predict_rating<T: Scalar>(
    store: &RatingsStore,
    user_id: UserId,
    movie_id: MovieId,
    n_neighbors: usize,
) -> Result<PredictedRating<T>> {
    let neighbours = memory::top_n_similar::<T>(store, user_id, n_neighbors)?;
    let predicted = neighbour_estimate(&neighbours, movie_id)
        .unwrap_or_else(|| global_estimate(store, movie_id));
    Ok(PredictedRating {
        movie_id,
        predicted: clamp(predicted),
    })
}

/// Top `n_recs` unwatched movies by predicted rating, restricted to movies at
/// least one neighbour rated; equal predictions go to the lower movie id.
pub fn baseline_recommend<T: Scalar>(
    store: &RatingsStore,
    catalog: &Catalog,
    user_id: UserId,
    n_recs: usize,
    n_neighbors: usize,
) -> Result<RecommendationList<T>> {
    let history = memory::fetch_user(store, user_id)?;
    let neighbours = memory::top_n_similar::<T>(store, user_id, n_neighbors)?;
    let candidates: BTreeSet<MovieId> = neighbours
        .iter()
        .flat_map(|n| n.history.ratings.keys().copied())
        .filter(|m| !history.has_watched(*m))
        .collect();

    let mut scored: Vec<(MovieId, T)> = candidates
        .into_iter()
        .map(|m| {
            let p = neighbour_estimate(&neighbours, m).expect("candidate rated by a neighbour");
            (m, clamp(p))
        })
        .collect();
    scored.sort_by(|a, b| desc(a.1, b.1).then(a.0.cmp(&b.0)));
    scored.truncate(n_recs);

    let items = scored
        .into_iter()
        .enumerate()
        .map(|(i, (m, p))| {
            let movie = catalog.get(m).ok_or_else(|| {
                Error::InternalConsistency(format!("recommended movie {m} missing from catalog"))
            })?;
            Ok(RecommendationItem {
                rank: i + 1,
                movie_id: m,
                title: movie.title.clone(),
                mean_rating: p,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(RecommendationList {
        user_id,
        cluster_label: BASELINE_LABEL.to_string(),
        items,
    })
}
