use thiserror::Error;

use crate::dataset::{MovieId, UserId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("{source_name}:{line}: unknown genre token {token:?}")]
    UnknownGenre {
        source_name: String,
        line: usize,
        token: String,
    },

    #[error("{source_name}:{line}: duplicate rating for user {user_id}, movie {movie_id}")]
    DuplicateRating {
        source_name: String,
        line: usize,
        user_id: UserId,
        movie_id: MovieId,
    },

    #[error("{source_name}:{line}: duplicate movie id {movie_id}")]
    DuplicateMovie {
        source_name: String,
        line: usize,
        movie_id: MovieId,
    },

    #[error("ratings reference movie ids missing from the catalog: {}", join_ids(.0))]
    DanglingMovies(Vec<MovieId>),

    #[error("user {0} already present in the ratings store")]
    UserCollision(UserId),

    #[error("session file contains ratings for more than one user: {0} and {1}")]
    MixedSessionUsers(UserId, UserId),

    #[error("session file contains no ratings")]
    EmptySession,

    #[error("unknown user {0}")]
    UnknownUser(UserId),

    #[error("invalid stimulus: user id {0} is not a positive integer")]
    InvalidStimulus(i64),

    #[error("cannot fit {k} clusters to {distinct} distinct vectors")]
    Infeasible { k: usize, distinct: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("internal consistency error: {0}")]
    InternalConsistency(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by the request (bad user id, bad flags) rather than the data.
    pub fn is_query_error(&self) -> bool {
        matches!(
            self,
            Error::UnknownUser(_)
                | Error::InvalidStimulus(_)
                | Error::InvalidConfig(_)
                | Error::Infeasible { .. }
        )
    }
}

fn join_ids(ids: &[MovieId]) -> String {
    ids.iter()
        .map(|id| id.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}
