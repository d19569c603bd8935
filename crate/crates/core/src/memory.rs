//! Declarative memory: user lookup and cosine-similarity neighbour search over
//! the ratings store.
//!
//! Similarity is computed on raw rating vectors over the union of rated movies,
//! with unrated entries treated as zero (no mean-centering). Every other user
//! in the store is a candidate.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::dataset::{MovieId, RatingsStore, UserId};
use crate::error::{Error, Result};
use crate::scalar::{desc, Scalar};

/// A user's complete rating record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UserHistory {
    pub user_id: UserId,
    pub ratings: BTreeMap<MovieId, u8>,
}

impl UserHistory {
    pub fn len(&self) -> usize {
        self.ratings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratings.is_empty()
    }

    pub fn has_watched(&self, movie_id: MovieId) -> bool {
        self.ratings.contains_key(&movie_id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarUser<T> {
    pub user_id: UserId,
    pub similarity: T,
    pub history: UserHistory,
}

pub fn fetch_user(store: &RatingsStore, user_id: UserId) -> Result<UserHistory> {
    store
        .user(user_id)
        .map(|ratings| UserHistory {
            user_id,
            ratings: ratings.clone(),
        })
        .ok_or(Error::UnknownUser(user_id))
}

fn norm<T: Scalar>(ratings: &BTreeMap<MovieId, u8>) -> T {
    ratings
        .values()
        .map(|v| {
            let v = T::from_rating(*v);
            v * v
        })
        .fold(T::zero(), |acc, x| acc + x)
        .sqrt()
}

/// Dot product over co-rated movies, accumulated in ascending movie-id order.
fn dot<T: Scalar>(a: &BTreeMap<MovieId, u8>, b: &BTreeMap<MovieId, u8>) -> T {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut acc = T::zero();
    for (m, va) in small {
        if let Some(vb) = large.get(m) {
            acc = acc + T::from_rating(*va) * T::from_rating(*vb);
        }
    }
    acc
}

fn ratio<T: Scalar>(dot: T, norm_a: T, norm_b: T) -> T {
    let denom = norm_a * norm_b;
    if dot == T::zero() || denom == T::zero() {
        T::zero()
    } else {
        dot / denom
    }
}

/// Cosine of the angle between two rating vectors; 0 when no movie is shared.
pub fn cosine_similarity<T: Scalar>(a: &UserHistory, b: &UserHistory) -> T {
    ratio(
        dot::<T>(&a.ratings, &b.ratings),
        norm::<T>(&a.ratings),
        norm::<T>(&b.ratings),
    )
}

/// Cosine similarity of two dense vectors of equal length.
pub fn cosine_dense<T: Scalar>(a: &[T], b: &[T]) -> T {
    assert_eq!(a.len(), b.len(), "vectors must have equal length");
    let mut d = T::zero();
    let mut na = T::zero();
    let mut nb = T::zero();
    for (x, y) in a.iter().zip(b) {
        d = d + *x * *y;
        na = na + *x * *x;
        nb = nb + *y * *y;
    }
    ratio(d, na.sqrt(), nb.sqrt())
}

/// The `n` users most similar to `user_id`, highest similarity first, equal
/// similarities ordered by ascending user id. The query user is never returned.
pub fn top_n_similar<T: Scalar>(
    store: &RatingsStore,
    user_id: UserId,
    n: usize,
) -> Result<Vec<SimilarUser<T>>> {
    let query = store.user(user_id).ok_or(Error::UnknownUser(user_id))?;
    let query_norm = norm::<T>(query);

    let mut scored: Vec<(T, UserId)> = store
        .users()
        .filter(|(u, _)| *u != user_id)
        .map(|(u, ratings)| {
            let sim = ratio(dot::<T>(query, ratings), query_norm, norm::<T>(ratings));
            (sim, u)
        })
        .collect();
    scored.sort_by(|a, b| desc(a.0, b.0).then(a.1.cmp(&b.1)));
    scored.truncate(n);

    Ok(scored
        .into_iter()
        .map(|(similarity, u)| SimilarUser {
            user_id: u,
            similarity,
            history: fetch_user(store, u).expect("candidate drawn from store"),
        })
        .collect())
}
