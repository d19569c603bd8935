//! Genre-precision evaluation.
//!
//! A user's preferred genres are the six genres with the most movies the user
//! rated 4 or 5 (a movie counts once for each of its genres). A recommended
//! movie is a hit when it carries at least one preferred genre, and precision
//! is hits divided by list length.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::baseline;
use crate::clustering::{self, ClusterModel};
use crate::cycle::{self, CycleConfig, RecommendationList};
use crate::dataset::{Catalog, RatingsStore, UserId};
use crate::error::{Error, Result};
use crate::genre::{Genre, GenreSet, GENRE_COUNT};
use crate::memory::{self, UserHistory};
use crate::scalar::Scalar;

pub const PREFERRED_GENRE_COUNT: usize = 6;
pub const LIKED_THRESHOLD: u8 = 4;
/// Number of users evaluated when none are named explicitly.
pub const DEFAULT_USER_COUNT: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PreferredGenres {
    pub user_id: UserId,
    pub genres: Vec<Genre>,
}

impl PreferredGenres {
    pub fn as_set(&self) -> GenreSet {
        self.genres.iter().copied().collect()
    }
}

/// Ranks genres by liked-movie count, then by total rated-movie count, then by
/// name, and keeps at most six with a nonzero liked count.
pub fn preferred_genres(history: &UserHistory, catalog: &Catalog) -> Result<PreferredGenres> {
    let mut liked = [0usize; GENRE_COUNT];
    let mut rated = [0usize; GENRE_COUNT];
    for (m, v) in &history.ratings {
        let movie = catalog.get(*m).ok_or_else(|| {
            Error::InternalConsistency(format!("rated movie {m} missing from catalog"))
        })?;
        for g in movie.genres.iter() {
            rated[g.index()] += 1;
            if *v >= LIKED_THRESHOLD {
                liked[g.index()] += 1;
            }
        }
    }
    let mut ranked: Vec<Genre> = Genre::ALL
        .into_iter()
        .filter(|g| liked[g.index()] > 0)
        .collect();
    ranked.sort_by(|a, b| {
        liked[b.index()]
            .cmp(&liked[a.index()])
            .then(rated[b.index()].cmp(&rated[a.index()]))
            .then(a.name().cmp(b.name()))
    });
    ranked.truncate(PREFERRED_GENRE_COUNT);
    Ok(PreferredGenres {
        user_id: history.user_id,
        genres: ranked,
    })
}

/// Fraction of recommended movies carrying a preferred genre; 0 for an empty list.
pub fn precision<T: Scalar>(
    recs: &RecommendationList<T>,
    preferred: &PreferredGenres,
    catalog: &Catalog,
) -> T {
    if recs.is_empty() {
        return T::zero();
    }
    let wanted = preferred.as_set();
    let hits = recs
        .movie_ids()
        .filter(|m| catalog.get(*m).is_some_and(|movie| movie.genres.intersects(wanted)))
        .count();
    T::from_count(hits) / T::from_count(recs.len())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrecisionReport<T> {
    pub config: CycleConfig,
    pub per_user: BTreeMap<UserId, T>,
    pub mean_precision: T,
}

impl<T: Scalar> PrecisionReport<T> {
    pub fn from_values(config: CycleConfig, per_user: BTreeMap<UserId, T>) -> Self {
        let mean_precision = arithmetic_mean(per_user.values().copied());
        PrecisionReport {
            config,
            per_user,
            mean_precision,
        }
    }
}

fn arithmetic_mean<T: Scalar>(values: impl Iterator<Item = T>) -> T {
    let (sum, n) = values.fold((T::zero(), 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        T::zero()
    } else {
        sum / T::from_count(n)
    }
}

/// Anything that turns a user id into a ranked list.
pub trait Recommender<T>: Sync {
    fn recommend(&self, user_id: UserId) -> Result<RecommendationList<T>>;
}

impl<T, F> Recommender<T> for F
where
    F: Fn(UserId) -> Result<RecommendationList<T>> + Sync,
{
    fn recommend(&self, user_id: UserId) -> Result<RecommendationList<T>> {
        self(user_id)
    }
}

pub struct MiraRecommender<'a, T> {
    pub store: &'a RatingsStore,
    pub catalog: &'a Catalog,
    pub model: &'a ClusterModel<T>,
    pub config: CycleConfig,
}

impl<T: Scalar> Recommender<T> for MiraRecommender<'_, T> {
    fn recommend(&self, user_id: UserId) -> Result<RecommendationList<T>> {
        cycle::run_cycle(self.store, self.catalog, self.model, &self.config, user_id)
    }
}

pub struct BaselineRecommender<'a> {
    pub store: &'a RatingsStore,
    pub catalog: &'a Catalog,
    pub n_recs: usize,
    pub n_neighbors: usize,
}

impl<T: Scalar> Recommender<T> for BaselineRecommender<'_> {
    fn recommend(&self, user_id: UserId) -> Result<RecommendationList<T>> {
        baseline::baseline_recommend(self.store, self.catalog, user_id, self.n_recs, self.n_neighbors)
    }
}

/// The default evaluation population: the most active raters.
pub fn default_users(store: &RatingsStore) -> Vec<UserId> {
    store.most_active_users(DEFAULT_USER_COUNT)
}

pub fn check_users(store: &RatingsStore, users: &[UserId]) -> Result<()> {
    match users.iter().find(|u| !store.contains_user(**u)) {
        Some(u) => Err(Error::UnknownUser(*u)),
        None => Ok(()),
    }
}

/// Precision of `recommender` for each user in `users`.
pub fn evaluate_users<T: Scalar, R: Recommender<T> + ?Sized>(
    recommender: &R,
    store: &RatingsStore,
    catalog: &Catalog,
    users: &[UserId],
    config: CycleConfig,
) -> Result<PrecisionReport<T>> {
    check_users(store, users)?;
    let values: Vec<(UserId, T)> = users
        .par_iter()
        .map(|&u| {
            let history = memory::fetch_user(store, u)?;
            let preferred = preferred_genres(&history, catalog)?;
            let recs = recommender.recommend(u)?;
            Ok((u, precision(&recs, &preferred, catalog)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PrecisionReport::from_values(config, values.into_iter().collect()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridCell<T> {
    pub k: usize,
    pub n_similar: usize,
    pub report: PrecisionReport<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridReport<T> {
    pub users: Vec<UserId>,
    pub cells: Vec<GridCell<T>>,
}

impl<T: Scalar> GridReport<T> {
    pub fn cell(&self, k: usize, n_similar: usize) -> Option<&PrecisionReport<T>> {
        self.cells
            .iter()
            .find(|c| c.k == k && c.n_similar == n_similar)
            .map(|c| &c.report)
    }

    /// `k,n_similar,user_id,precision` rows followed by one `MEAN` row per cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,n_similar,user_id,precision\n");
        for cell in &self.cells {
            for (u, p) in &cell.report.per_user {
                writeln!(out, "{},{},{},{}", cell.k, cell.n_similar, u, p).unwrap();
            }
            writeln!(out, "{},{},MEAN,{}", cell.k, cell.n_similar, cell.report.mean_precision).unwrap();
        }
        out
    }
}

/// Runs every (k, n_similar) combination over `users`, fitting one model per k.
pub fn run_grid<T: Scalar>(
    store: &RatingsStore,
    catalog: &Catalog,
    users: &[UserId],
    ks: &[usize],
    n_similars: &[usize],
    n_recs: usize,
    seed: u64,
) -> Result<GridReport<T>> {
    check_users(store, users)?;
    let ks: Vec<usize> = dedup_sorted(ks);
    let n_similars: Vec<usize> = dedup_sorted(n_similars);
    for &k in &ks {
        CycleConfig { k, n_similar: 1, n_recommendations: n_recs, seed }.validate()?;
    }
    for &n in &n_similars {
        CycleConfig { k: 1, n_similar: n, n_recommendations: n_recs, seed }.validate()?;
    }

    let models: Vec<ClusterModel<T>> = ks
        .par_iter()
        .map(|&k| clustering::fit_catalog(catalog, k, seed))
        .collect::<Result<_>>()?;

    let mut cells = Vec::with_capacity(ks.len() * n_similars.len());
    for (model, &k) in models.iter().zip(&ks) {
        for &n_similar in &n_similars {
            let config = CycleConfig { k, n_similar, n_recommendations: n_recs, seed };
            let mira = MiraRecommender { store, catalog, model, config };
            let report = evaluate_users(&mira, store, catalog, users, config)?;
            cells.push(GridCell { k, n_similar, report });
        }
    }
    Ok(GridReport {
        users: users.to_vec(),
        cells,
    })
}

fn dedup_sorted(values: &[usize]) -> Vec<usize> {
    let mut v = values.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport<T> {
    pub mira: PrecisionReport<T>,
    pub baseline: PrecisionReport<T>,
}

impl<T: Scalar> ComparisonReport<T> {
    /// `model,user_id,precision` rows followed by one `MEAN` row per model.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("model,user_id,precision\n");
        for (name, report) in [("mira", &self.mira), ("baseline", &self.baseline)] {
            for (u, p) in &report.per_user {
                writeln!(out, "{name},{u},{p}").unwrap();
            }
            writeln!(out, "{name},MEAN,{}", report.mean_precision).unwrap();
        }
        out
    }
}

/// Scores two recommenders on the same users with the same metric.
pub fn compare_recommenders<T: Scalar, A, B>(
    first: &A,
    second: &B,
    store: &RatingsStore,
    catalog: &Catalog,
    users: &[UserId],
    config: CycleConfig,
) -> Result<ComparisonReport<T>>
where
    A: Recommender<T> + ?Sized,
    B: Recommender<T> + ?Sized,
{
    Ok(ComparisonReport {
        mira: evaluate_users(first, store, catalog, users, config)?,
        baseline: evaluate_users(second, store, catalog, users, config)?,
    })
}

/// MIRA under `config` against the collaborative-filtering baseline with the
/// same list length and neighbour count.
pub fn compare_models<T: Scalar>(
    store: &RatingsStore,
    catalog: &Catalog,
    users: &[UserId],
    config: CycleConfig,
) -> Result<ComparisonReport<T>> {
    config.validate()?;
    check_users(store, users)?;
    let model = clustering::fit_catalog::<T>(catalog, config.k, config.seed)?;
    let mira = MiraRecommender { store, catalog, model: &model, config };
    let base = BaselineRecommender {
        store,
        catalog,
        n_recs: config.n_recommendations,
        n_neighbors: config.n_similar,
    };
    compare_recommenders(&mira, &base, store, catalog, users, config)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionReport<T> {
    pub report: PrecisionReport<T>,
    pub preferred: PreferredGenres,
    pub recommendations: RecommendationList<T>,
}

/// Recommends for a freshly ingested session user and scores the list against
/// that user's own preferred genres.
pub fn evaluate_session<T: Scalar>(
    store_with_session: &RatingsStore,
    catalog: &Catalog,
    session_user_id: UserId,
    config: CycleConfig,
) -> Result<SessionReport<T>> {
    config.validate()?;
    let history = memory::fetch_user(store_with_session, session_user_id)?;
    let model = clustering::fit_catalog::<T>(catalog, config.k, config.seed)?;
    let recommendations =
        cycle::run_cycle(store_with_session, catalog, &model, &config, session_user_id)?;
    let preferred = preferred_genres(&history, catalog)?;
    let p = precision(&recommendations, &preferred, catalog);
    Ok(SessionReport {
        report: PrecisionReport::from_values(config, [(session_user_id, p)].into_iter().collect()),
        preferred,
        recommendations,
    })
}
