//! The recommendation cycle: a stimulus (a user id) travels through sensory
//! memory, perceptual associative memory (PAM), declarative memory, the
//! workspace, the attention codelets, the global workspace and procedural
//! memory, in twelve fixed steps.
//!
//! Sensory memory and PAM hold no state in this model; they only route the
//! stimulus and the retrieved user data, so they appear here as steps of the
//! trace rather than as stores. Movies the main user has already rated never
//! enter the workspace.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::clustering::{self, ClusterModel};
use crate::dataset::{Catalog, MovieId, RatingsStore, UserId};
use crate::error::{Error, Result};
use crate::memory::{self, SimilarUser, UserHistory};
use crate::scalar::{desc, Scalar};

/// Centroid weight a genre needs to appear in a cluster's label.
pub const LABEL_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleConfig {
    pub k: usize,
    pub n_similar: usize,
    pub n_recommendations: usize,
    pub seed: u64,
}

impl Default for CycleConfig {
    fn default() -> Self {
        CycleConfig {
            k: 8,
            n_similar: 10,
            n_recommendations: 40,
            seed: 42,
        }
    }
}

impl CycleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if self.n_similar == 0 {
            return Err(Error::InvalidConfig("n_similar must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stimulus {
    pub user_id: UserId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HistogramEntry {
    /// Ratings given by similar users, in neighbour order.
    pub ratings: Vec<u8>,
    pub cluster: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct WorkspaceHistogram {
    pub entries: BTreeMap<MovieId, HistogramEntry>,
}

impl WorkspaceHistogram {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CompetitionResult<T> {
    pub winners: Vec<(MovieId, T)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationItem<T> {
    pub rank: usize,
    pub movie_id: MovieId,
    pub title: String,
    pub mean_rating: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationList<T> {
    pub user_id: UserId,
    pub cluster_label: String,
    pub items: Vec<RecommendationItem<T>>,
}

/// Wire form of a recommendation list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationReport<T> {
    pub user_id: UserId,
    pub cluster_label: String,
    pub config: CycleConfig,
    pub items: Vec<RecommendationItem<T>>,
}

impl<T: Scalar> RecommendationList<T> {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn movie_ids(&self) -> impl Iterator<Item = MovieId> + '_ {
        self.items.iter().map(|i| i.movie_id)
    }

    pub fn report(&self, config: CycleConfig) -> RecommendationReport<T> {
        RecommendationReport {
            user_id: self.user_id,
            cluster_label: self.cluster_label.clone(),
            config,
            items: self.items.clone(),
        }
    }
}

/// Step 1 and 2: accept a user id from the environment.
pub fn sense(user_id: i64) -> Result<Stimulus> {
    match UserId::try_from(user_id) {
        Ok(id) if id > 0 => Ok(Stimulus { user_id: id }),
        _ => Err(Error::InvalidStimulus(user_id)),
    }
}

/// Every movie watched by at least one similar user and not by the main user,
/// with all similar-user ratings of it and its cluster.
pub fn build_histogram<T: Scalar>(
    similar: &[SimilarUser<T>],
    catalog: &Catalog,
    model: &ClusterModel<T>,
    main_history: &UserHistory,
) -> Result<WorkspaceHistogram> {
    let mut ratings: BTreeMap<MovieId, Vec<u8>> = BTreeMap::new();
    for neighbour in similar {
        for (m, v) in &neighbour.history.ratings {
            if !main_history.has_watched(*m) {
                ratings.entry(*m).or_default().push(*v);
            }
        }
    }
    let mut entries = BTreeMap::new();
    for (m, rs) in ratings {
        let cluster = match model.cluster_of(m) {
            Some(c) => c,
            None => {
                let movie = catalog.get(m).ok_or_else(|| {
                    Error::InternalConsistency(format!("movie {m} missing from catalog"))
                })?;
                clustering::assign_cluster(clustering::genre_vector(movie), model)
            }
        };
        entries.insert(m, HistogramEntry { ratings: rs, cluster });
    }
    Ok(WorkspaceHistogram { entries })
}

/// The part of the histogram in the user's cluster.
pub fn attend(histogram: &WorkspaceHistogram, user_cluster: usize) -> WorkspaceHistogram {
    WorkspaceHistogram {
        entries: histogram
            .entries
            .iter()
            .filter(|(_, e)| e.cluster == user_cluster)
            .map(|(m, e)| (*m, e.clone()))
            .collect(),
    }
}

fn mean<T: Scalar>(ratings: &[u8]) -> T {
    let sum: u32 = ratings.iter().map(|v| u32::from(*v)).sum();
    T::from_u32(sum).expect("small sum") / T::from_count(ratings.len())
}

/// Averages each movie's ratings and keeps the `n` best; equal means go to the
/// lower movie id.
pub fn compete<T: Scalar>(attended: &WorkspaceHistogram, n: usize) -> CompetitionResult<T> {
    let mut scored: Vec<(MovieId, T)> = attended
        .entries
        .iter()
        .map(|(m, e)| (*m, mean::<T>(&e.ratings)))
        .collect();
    scored.sort_by(|a, b| desc(a.1, b.1).then(a.0.cmp(&b.0)));
    scored.truncate(n);
    CompetitionResult { winners: scored }
}

/// Attaches titles and ranks, and names the cluster after its dominant genres.
pub fn prepare<T: Scalar>(
    result: &CompetitionResult<T>,
    catalog: &Catalog,
    user_cluster: usize,
    model: &ClusterModel<T>,
    user_id: UserId,
) -> Result<RecommendationList<T>> {
    prepare_with_threshold(
        result,
        catalog,
        user_cluster,
        model,
        user_id,
        T::from_f64_lossy(LABEL_THRESHOLD),
    )
}

pub fn prepare_with_threshold<T: Scalar>(
    result: &CompetitionResult<T>,
    catalog: &Catalog,
    user_cluster: usize,
    model: &ClusterModel<T>,
    user_id: UserId,
    threshold: T,
) -> Result<RecommendationList<T>> {
    let centroid = model.centroids.get(user_cluster).ok_or_else(|| {
        Error::InternalConsistency(format!("cluster {user_cluster} outside model of k={}", model.k))
    })?;
    let items = result
        .winners
        .iter()
        .enumerate()
        .map(|(i, (m, score))| {
            let movie = catalog.get(*m).ok_or_else(|| {
                Error::InternalConsistency(format!("recommended movie {m} missing from catalog"))
            })?;
            Ok(RecommendationItem {
                rank: i + 1,
                movie_id: *m,
                title: movie.title.clone(),
                mean_rating: *score,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RecommendationList {
        user_id,
        cluster_label: clustering::cluster_label(centroid, threshold),
        items,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Module {
    Environment,
    SensoryMemory,
    PerceptualAssociativeMemory,
    DeclarativeMemory,
    Workspace,
    AttentionCodelets,
    GlobalWorkspace,
    ProceduralMemory,
}

impl fmt::Display for Module {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Module::Environment => "Environment",
            Module::SensoryMemory => "Sensory Memory",
            Module::PerceptualAssociativeMemory => "PAM",
            Module::DeclarativeMemory => "Declarative Memory",
            Module::Workspace => "Workspace",
            Module::AttentionCodelets => "Attention Codelets",
            Module::GlobalWorkspace => "Global Workspace",
            Module::ProceduralMemory => "Procedural Memory",
        };
        f.write_str(s)
    }
}

/// One message passed between modules during a cycle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub step: u8,
    pub name: &'static str,
    pub from: Module,
    pub to: Module,
    pub detail: String,
}

/// Everything a cycle produced on its way to the recommendation list.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleTrace<T> {
    pub steps: Vec<TraceStep>,
    pub similar_users: Vec<(UserId, T)>,
    pub user_cluster: usize,
    pub histogram_size: usize,
    pub attended_size: usize,
}

/// Runs one cycle for `user_id` and returns the ranked recommendations.
pub fn run_cycle<T: Scalar>(
    store: &RatingsStore,
    catalog: &Catalog,
    model: &ClusterModel<T>,
    config: &CycleConfig,
    user_id: UserId,
) -> Result<RecommendationList<T>> {
    run_cycle_traced(store, catalog, model, config, user_id).map(|(list, _)| list)
}

pub fn run_cycle_traced<T: Scalar>(
    store: &RatingsStore,
    catalog: &Catalog,
    model: &ClusterModel<T>,
    config: &CycleConfig,
    user_id: UserId,
) -> Result<(RecommendationList<T>, CycleTrace<T>)> {
    use Module::*;

    config.validate()?;
    if model.k != config.k || model.seed != config.seed {
        return Err(Error::InvalidConfig(format!(
            "model fitted with k={}, seed={} but the cycle expects k={}, seed={}",
            model.k, model.seed, config.k, config.seed
        )));
    }
    let mut steps = Vec::with_capacity(12);
    let mut log = |step, name, from, to, detail: String| {
        steps.push(TraceStep { step, name, from, to, detail });
    };

    let stimulus = sense(i64::from(user_id))?;
    log(1, "stimulus identification", Environment, SensoryMemory, format!("user {}", stimulus.user_id));
    log(2, "user id sending", SensoryMemory, PerceptualAssociativeMemory, format!("user {}", stimulus.user_id));
    log(3, "user data request", PerceptualAssociativeMemory, DeclarativeMemory, format!("user {}", stimulus.user_id));

    let history = memory::fetch_user(store, stimulus.user_id)?;
    log(4, "user data sending", DeclarativeMemory, PerceptualAssociativeMemory, format!("{} ratings", history.len()));
    log(5, "user data routing", PerceptualAssociativeMemory, Workspace, format!("{} ratings", history.len()));
    log(6, "similar users request", Workspace, DeclarativeMemory, format!("n = {}", config.n_similar));

    let similar = memory::top_n_similar::<T>(store, stimulus.user_id, config.n_similar)?;
    log(7, "similar users sending", DeclarativeMemory, Workspace, format!("{} users", similar.len()));

    let histogram = build_histogram(&similar, catalog, model, &history)?;
    log(8, "histogram generation", Workspace, AttentionCodelets, format!("{} movies", histogram.len()));

    let cluster = clustering::user_cluster(&history, catalog, model)?;
    let attended = attend(&histogram, cluster);
    log(9, "cluster identification", AttentionCodelets, GlobalWorkspace, format!("cluster {cluster}, {} movies", attended.len()));

    let result = compete::<T>(&attended, config.n_recommendations);
    log(10, "movie competition", GlobalWorkspace, ProceduralMemory, format!("{} winners", result.winners.len()));

    let list = prepare(&result, catalog, cluster, model, stimulus.user_id)?;
    log(11, "movie preparation", ProceduralMemory, Environment, format!("label {}", list.cluster_label));
    log(12, "recommendation commit", ProceduralMemory, Environment, format!("{} items", list.len()));

    let trace = CycleTrace {
        steps,
        similar_users: similar.iter().map(|s| (s.user_id, s.similarity)).collect(),
        user_cluster: cluster,
        histogram_size: histogram.len(),
        attended_size: attended.len(),
    };
    Ok((list, trace))
}
