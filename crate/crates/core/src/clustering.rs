//! Genre clustering: binary genre vectors, a K-Means model fitted over the
//! catalog, and the rules that map a movie or a user to a cluster.
//!
//! One model is fitted on the full catalog and shared by every cycle, so the
//! cluster of a similar user's movie and the cluster chosen for the main user
//! are directly comparable.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{Catalog, Movie, MovieId};
use crate::error::{Error, Result};
use crate::genre::{Genre, GenreSet, GENRE_COUNT};
use crate::kmeans::{self, KMeansFit, MAX_ITERATIONS};
use crate::memory::UserHistory;
use crate::scalar::Scalar;

/// 18-dimensional 0/1 vector, bit `i` set iff the movie carries genre `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GenreVector(GenreSet);

impl GenreVector {
    pub fn from_genres(genres: GenreSet) -> Self {
        GenreVector(genres)
    }

    pub fn bits(self) -> [u8; GENRE_COUNT] {
        let mut out = [0u8; GENRE_COUNT];
        for g in self.0.iter() {
            out[g.index()] = 1;
        }
        out
    }

    pub fn genres(self) -> GenreSet {
        self.0
    }

    pub fn to_point<T: Scalar>(self) -> Vec<T> {
        self.bits()
            .iter()
            .map(|b| if *b == 1 { T::one() } else { T::zero() })
            .collect()
    }
}

pub fn genre_vector(movie: &Movie) -> GenreVector {
    GenreVector(movie.genres)
}

/// Genre vectors for every movie in the catalog.
pub fn catalog_vectors(catalog: &Catalog) -> BTreeMap<MovieId, GenreVector> {
    catalog.iter().map(|m| (m.id, genre_vector(m))).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterModel<T> {
    pub k: usize,
    pub seed: u64,
    pub centroids: Vec<Vec<T>>,
    pub assignments: BTreeMap<MovieId, usize>,
    pub iterations_run: usize,
    pub converged: bool,
    /// Total within-cluster squared distance at return.
    pub inertia: T,
}

/// Audit dump written next to experiment outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDump<T> {
    pub k: usize,
    pub seed: u64,
    pub centroids: Vec<Vec<T>>,
    pub assignments: BTreeMap<MovieId, usize>,
}

impl<T: Scalar> ClusterModel<T> {
    pub fn cluster_of(&self, movie_id: MovieId) -> Option<usize> {
        self.assignments.get(&movie_id).copied()
    }

    pub fn dump(&self) -> ModelDump<T> {
        ModelDump {
            k: self.k,
            seed: self.seed,
            centroids: self.centroids.clone(),
            assignments: self.assignments.clone(),
        }
    }
}

/// Fits K-Means over `vectors` (visited in ascending movie id).
pub fn fit_kmeans<T: Scalar>(
    vectors: &BTreeMap<MovieId, GenreVector>,
    k: usize,
    seed: u64,
) -> Result<ClusterModel<T>> {
    fit_kmeans_traced(vectors, k, seed).map(|(model, _)| model)
}

/// Like [`fit_kmeans`], also returning the per-iteration cost trace.
pub fn fit_kmeans_traced<T: Scalar>(
    vectors: &BTreeMap<MovieId, GenreVector>,
    k: usize,
    seed: u64,
) -> Result<(ClusterModel<T>, Vec<T>)> {
    let ids: Vec<MovieId> = vectors.keys().copied().collect();
    let points: Vec<Vec<T>> = vectors.values().map(|v| v.to_point()).collect();
    let KMeansFit {
        centroids,
        labels,
        iterations,
        converged,
        cost_trace,
    } = kmeans::fit(&points, k, seed, MAX_ITERATIONS)?;
    let inertia = kmeans::partition_cost(&points, &labels, &centroids);
    let model = ClusterModel {
        k,
        seed,
        centroids,
        assignments: ids.into_iter().zip(labels).collect(),
        iterations_run: iterations,
        converged,
        inertia,
    };
    Ok((model, cost_trace))
}

/// Fits the shared model on the whole catalog.
pub fn fit_catalog<T: Scalar>(catalog: &Catalog, k: usize, seed: u64) -> Result<ClusterModel<T>> {
    fit_kmeans(&catalog_vectors(catalog), k, seed)
}

/// Nearest centroid by squared Euclidean distance, lowest index on ties.
pub fn assign_cluster<T: Scalar>(v: GenreVector, model: &ClusterModel<T>) -> usize {
    kmeans::nearest(&v.to_point::<T>(), &model.centroids)
}

fn movie_cluster<T: Scalar>(
    movie_id: MovieId,
    catalog: &Catalog,
    model: &ClusterModel<T>,
) -> Result<usize> {
    if let Some(c) = model.cluster_of(movie_id) {
        return Ok(c);
    }
    let movie = catalog.get(movie_id).ok_or_else(|| {
        Error::InternalConsistency(format!("movie {movie_id} missing from catalog"))
    })?;
    Ok(assign_cluster(genre_vector(movie), model))
}

/// The cluster the user most likely wants: the most frequent cluster among
/// movies rated 4 or 5 (all watched movies if there are none). Frequency ties
/// go to the higher mean rating over those movies, then the lower index.
pub fn user_cluster<T: Scalar>(
    history: &UserHistory,
    catalog: &Catalog,
    model: &ClusterModel<T>,
) -> Result<usize> {
    let liked: Vec<(MovieId, u8)> = history
        .ratings
        .iter()
        .filter(|(_, v)| **v >= 4)
        .map(|(m, v)| (*m, *v))
        .collect();
    let pool: Vec<(MovieId, u8)> = if liked.is_empty() {
        history.ratings.iter().map(|(m, v)| (*m, *v)).collect()
    } else {
        liked
    };
    if pool.is_empty() {
        return Err(Error::InternalConsistency(format!(
            "user {} has an empty history",
            history.user_id
        )));
    }

    // (count, rating sum) per cluster
    let mut tally = vec![(0usize, 0u64); model.k];
    for (m, v) in pool {
        let c = movie_cluster(m, catalog, model)?;
        tally[c].0 += 1;
        tally[c].1 += u64::from(v);
    }

    let mut best = 0;
    for c in 1..model.k {
        let (n, sum) = tally[c];
        let (bn, bsum) = tally[best];
        // compare sum/n > bsum/bn without division
        let better = n > bn || (n == bn && n > 0 && u128::from(sum) * (bn as u128) > u128::from(bsum) * (n as u128));
        if better {
            best = c;
        }
    }
    Ok(best)
}

/// Genres whose centroid component reaches `threshold`, joined by "/"; when none
/// do, the single largest component's genre.
pub fn cluster_label<T: Scalar>(centroid: &[T], threshold: T) -> String {
    let strong: Vec<&str> = Genre::ALL
        .iter()
        .zip(centroid)
        .filter(|(_, w)| **w >= threshold)
        .map(|(g, _)| g.name())
        .collect();
    if !strong.is_empty() {
        return strong.join("/");
    }
    let mut best = 0;
    for (i, w) in centroid.iter().enumerate() {
        if *w > centroid[best] {
            best = i;
        }
    }
    Genre::ALL[best].name().to_string()
}
