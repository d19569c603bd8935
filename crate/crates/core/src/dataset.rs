//! MovieLens-format ingestion: movie catalog, ratings store, and hand-authored
//! session files.
//!
//! Input bytes are decoded as UTF-8 with lossy replacement; the few Latin-1
//! titles in MovieLens 1M come through with replacement characters, which is
//! acceptable because titles are display-only.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{self, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genre::{Genre, GenreSet};

pub type UserId = u32;
pub type MovieId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Movie {
    pub id: MovieId,
    pub title: String,
    pub genres: GenreSet,
}

/// One rating record as it appears on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rating {
    pub user_id: UserId,
    pub movie_id: MovieId,
    pub value: u8,
    pub timestamp: Option<i64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Catalog {
    movies: BTreeMap<MovieId, Movie>,
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fails if `movie.id` is already present.
    pub fn insert(&mut self, movie: Movie) -> std::result::Result<(), Movie> {
        match self.movies.entry(movie.id) {
            Entry::Occupied(_) => Err(movie),
            Entry::Vacant(slot) => {
                slot.insert(movie);
                Ok(())
            }
        }
    }

    pub fn get(&self, id: MovieId) -> Option<&Movie> {
        self.movies.get(&id)
    }

    pub fn contains(&self, id: MovieId) -> bool {
        self.movies.contains_key(&id)
    }

    pub fn len(&self) -> usize {
        self.movies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.movies.is_empty()
    }

    /// Movies in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = &Movie> {
        self.movies.values()
    }

    pub fn ids(&self) -> impl Iterator<Item = MovieId> + '_ {
        self.movies.keys().copied()
    }
}

impl FromIterator<Movie> for Catalog {
    /// Later duplicates are dropped; use [`parse_movies`] for validated input.
    fn from_iter<I: IntoIterator<Item = Movie>>(iter: I) -> Self {
        let mut catalog = Catalog::new();
        for m in iter {
            let _ = catalog.insert(m);
        }
        catalog
    }
}

/// Sparse user/movie rating matrix with both orientations kept in sync.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RatingsStore {
    by_user: BTreeMap<UserId, BTreeMap<MovieId, u8>>,
    by_movie: BTreeMap<MovieId, BTreeMap<UserId, u8>>,
    timestamps: BTreeMap<(UserId, MovieId), i64>,
}

impl RatingsStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a store from in-memory records, enforcing value range and
    /// (user, movie) uniqueness. Referential integrity is not checked here.
    pub fn from_ratings<I: IntoIterator<Item = Rating>>(ratings: I) -> Result<Self> {
        let mut store = RatingsStore::new();
        for (i, r) in ratings.into_iter().enumerate() {
            store.push(r, "<memory>", i + 1)?;
        }
        Ok(store)
    }

    fn push(&mut self, r: Rating, source_name: &str, line: usize) -> Result<()> {
        if !(1..=5).contains(&r.value) {
            return Err(Error::Parse {
                source_name: source_name.to_string(),
                line,
                message: format!("rating value {} outside [1,5]", r.value),
            });
        }
        let row = self.by_user.entry(r.user_id).or_default();
        if row.contains_key(&r.movie_id) {
            return Err(Error::DuplicateRating {
                source_name: source_name.to_string(),
                line,
                user_id: r.user_id,
                movie_id: r.movie_id,
            });
        }
        row.insert(r.movie_id, r.value);
        self.by_movie
            .entry(r.movie_id)
            .or_default()
            .insert(r.user_id, r.value);
        if let Some(ts) = r.timestamp {
            self.timestamps.insert((r.user_id, r.movie_id), ts);
        }
        Ok(())
    }

    pub fn user(&self, user_id: UserId) -> Option<&BTreeMap<MovieId, u8>> {
        self.by_user.get(&user_id)
    }

    pub fn movie(&self, movie_id: MovieId) -> Option<&BTreeMap<UserId, u8>> {
        self.by_movie.get(&movie_id)
    }

    pub fn contains_user(&self, user_id: UserId) -> bool {
        self.by_user.contains_key(&user_id)
    }

    pub fn rating(&self, user_id: UserId, movie_id: MovieId) -> Option<u8> {
        self.by_user.get(&user_id)?.get(&movie_id).copied()
    }

    pub fn timestamp(&self, user_id: UserId, movie_id: MovieId) -> Option<i64> {
        self.timestamps.get(&(user_id, movie_id)).copied()
    }

    /// Users in ascending id order with their ratings.
    pub fn users(&self) -> impl Iterator<Item = (UserId, &BTreeMap<MovieId, u8>)> {
        self.by_user.iter().map(|(u, r)| (*u, r))
    }

    pub fn movies(&self) -> impl Iterator<Item = (MovieId, &BTreeMap<UserId, u8>)> {
        self.by_movie.iter().map(|(m, r)| (*m, r))
    }

    /// All (user, movie, value) triples in user-major order.
    pub fn triples(&self) -> impl Iterator<Item = (UserId, MovieId, u8)> + '_ {
        self.by_user
            .iter()
            .flat_map(|(u, row)| row.iter().map(move |(m, v)| (*u, *m, *v)))
    }

    pub fn user_count(&self) -> usize {
        self.by_user.len()
    }

    pub fn movie_count(&self) -> usize {
        self.by_movie.len()
    }

    pub fn rating_count(&self) -> usize {
        self.by_user.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.by_user.is_empty()
    }

    /// The `n` users with the most ratings; equal counts go to the lower id.
    pub fn most_active_users(&self, n: usize) -> Vec<UserId> {
        let mut users: Vec<(usize, UserId)> =
            self.by_user.iter().map(|(u, r)| (r.len(), *u)).collect();
        users.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        users.into_iter().take(n).map(|(_, u)| u).collect()
    }

    /// Checks that every rated movie exists in `catalog`.
    pub fn validate_against(&self, catalog: &Catalog) -> Result<()> {
        let dangling: Vec<MovieId> = self
            .by_movie
            .keys()
            .copied()
            .filter(|m| !catalog.contains(*m))
            .collect();
        if dangling.is_empty() {
            Ok(())
        } else {
            Err(Error::DanglingMovies(dangling))
        }
    }

    /// Checks that `by_user` and `by_movie` are exact transposes.
    pub fn is_consistent(&self) -> bool {
        let forward = self
            .triples()
            .all(|(u, m, v)| self.by_movie.get(&m).and_then(|r| r.get(&u)) == Some(&v));
        let backward: usize = self.by_movie.values().map(BTreeMap::len).sum();
        let no_empty = self.by_user.values().all(|r| !r.is_empty())
            && self.by_movie.values().all(|r| !r.is_empty());
        forward && backward == self.rating_count() && no_empty
    }

    /// Writes the store in `UserID::MovieID::Rating::Timestamp` form, leaving the
    /// timestamp field empty when none was recorded.
    pub fn write_dat<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (u, m, v) in self.triples() {
            match self.timestamp(u, m) {
                Some(ts) => writeln!(out, "{u}::{m}::{v}::{ts}")?,
                None => writeln!(out, "{u}::{m}::{v}::")?,
            }
        }
        Ok(())
    }
}

struct Lines {
    buf: Vec<u8>,
}

impl Lines {
    fn read<R: Read>(mut source: R) -> io::Result<Self> {
        let mut buf = Vec::new();
        source.read_to_end(&mut buf)?;
        Ok(Lines { buf })
    }

    /// Yields (1-based line number, decoded line). The empty tail after a final
    /// newline is not a line.
    fn iter(&self) -> impl Iterator<Item = (usize, String)> + '_ {
        let body = self.buf.strip_suffix(b"\n").unwrap_or(&self.buf);
        let empty = self.buf.is_empty();
        body.split(|b| *b == b'\n')
            .filter(move |_| !empty)
            .enumerate()
            .map(|(i, raw)| {
                let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
                (i + 1, String::from_utf8_lossy(raw).into_owned())
            })
    }
}

fn parse_err(source_name: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        source_name: source_name.to_string(),
        line,
        message: message.into(),
    }
}

fn parse_id(field: &str, what: &str, source_name: &str, line: usize) -> Result<u32> {
    match field.trim().parse::<u32>() {
        Ok(id) if id > 0 => Ok(id),
        _ => Err(parse_err(
            source_name,
            line,
            format!("invalid {what} {field:?}"),
        )),
    }
}

fn parse_value(field: &str, source_name: &str, line: usize) -> Result<u8> {
    match field.trim().parse::<i64>() {
        Ok(v) if (1..=5).contains(&v) => Ok(v as u8),
        Ok(v) => Err(parse_err(
            source_name,
            line,
            format!("rating value {v} outside [1,5]"),
        )),
        Err(_) => Err(parse_err(
            source_name,
            line,
            format!("invalid rating value {field:?}"),
        )),
    }
}

/// Parses a `MovieID::Title::Genre1|Genre2|...` file.
pub fn parse_movies<R: Read>(source: R) -> Result<Catalog> {
    parse_movies_named(source, "movies")
}

pub fn parse_movies_named<R: Read>(source: R, source_name: &str) -> Result<Catalog> {
    let lines = Lines::read(source)?;
    let mut catalog = Catalog::new();
    for (line, text) in lines.iter() {
        let fields: Vec<&str> = text.split("::").collect();
        if fields.len() != 3 {
            return Err(parse_err(
                source_name,
                line,
                format!("expected 3 '::'-separated fields, found {}", fields.len()),
            ));
        }
        let id = parse_id(fields[0], "movie id", source_name, line)?;
        let mut genres = GenreSet::empty();
        for token in fields[2].split('|') {
            let genre: Genre = token.parse().map_err(|_| Error::UnknownGenre {
                source_name: source_name.to_string(),
                line,
                token: token.to_string(),
            })?;
            genres.insert(genre);
        }
        let movie = Movie {
            id,
            title: fields[1].to_string(),
            genres,
        };
        catalog.insert(movie).map_err(|m| Error::DuplicateMovie {
            source_name: source_name.to_string(),
            line,
            movie_id: m.id,
        })?;
    }
    Ok(catalog)
}

/// Parses a `UserID::MovieID::Rating::Timestamp` file and checks every movie
/// against `catalog`.
pub fn parse_ratings<R: Read>(source: R, catalog: &Catalog) -> Result<RatingsStore> {
    parse_ratings_named(source, catalog, "ratings")
}

pub fn parse_ratings_named<R: Read>(
    source: R,
    catalog: &Catalog,
    source_name: &str,
) -> Result<RatingsStore> {
    let lines = Lines::read(source)?;
    let mut store = RatingsStore::new();
    for (line, text) in lines.iter() {
        let rating = parse_rating_line(&text, source_name, line)?;
        store.push(rating, source_name, line)?;
    }
    store.validate_against(catalog)?;
    Ok(store)
}

fn parse_rating_line(text: &str, source_name: &str, line: usize) -> Result<Rating> {
    let fields: Vec<&str> = text.split("::").collect();
    if fields.len() != 4 {
        return Err(parse_err(
            source_name,
            line,
            format!("expected 4 '::'-separated fields, found {}", fields.len()),
        ));
    }
    let timestamp = match fields[3].trim() {
        "" => None,
        ts => Some(ts.parse::<i64>().map_err(|_| {
            parse_err(source_name, line, format!("invalid timestamp {ts:?}"))
        })?),
    };
    Ok(Rating {
        user_id: parse_id(fields[0], "user id", source_name, line)?,
        movie_id: parse_id(fields[1], "movie id", source_name, line)?,
        value: parse_value(fields[2], source_name, line)?,
        timestamp,
    })
}

/// Validates a `UserID::Gender::Age::Occupation::Zip-code` file and returns the
/// number of users listed. Demographics are not used downstream.
pub fn parse_users<R: Read>(source: R) -> Result<usize> {
    let lines = Lines::read(source)?;
    let mut seen = BTreeSet::new();
    for (line, text) in lines.iter() {
        let fields: Vec<&str> = text.split("::").collect();
        if fields.len() != 5 {
            return Err(parse_err(
                "users",
                line,
                format!("expected 5 '::'-separated fields, found {}", fields.len()),
            ));
        }
        let id = parse_id(fields[0], "user id", "users", line)?;
        if !seen.insert(id) {
            return Err(parse_err("users", line, format!("duplicate user id {id}")));
        }
    }
    Ok(seen.len())
}

/// Parses a session CSV (`user_id,movie_id,rating`) holding one new user's ratings
/// and returns `store` extended with that user. `store` itself is left untouched.
pub fn ingest_session_ratings<R: Read>(
    source: R,
    store: &RatingsStore,
    catalog: &Catalog,
) -> Result<RatingsStore> {
    ingest_session_named(source, store, catalog, "session")
}

pub fn ingest_session_named<R: Read>(
    source: R,
    store: &RatingsStore,
    catalog: &Catalog,
    source_name: &str,
) -> Result<RatingsStore> {
    let ratings = parse_session(source, source_name)?;
    let user_id = ratings[0].1.user_id;
    if store.contains_user(user_id) {
        return Err(Error::UserCollision(user_id));
    }
    let mut extended = store.clone();
    let mut session = RatingsStore::new();
    for (line, r) in &ratings {
        session.push(*r, source_name, *line)?;
        extended.push(*r, source_name, *line)?;
    }
    session.validate_against(catalog)?;
    Ok(extended)
}

fn parse_session<R: Read>(source: R, source_name: &str) -> Result<Vec<(usize, Rating)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader
        .headers()
        .map_err(|e| parse_err(source_name, 1, e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["user_id", "movie_id", "rating"] {
        return Err(parse_err(
            source_name,
            1,
            "expected header `user_id,movie_id,rating`",
        ));
    }
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| parse_err(source_name, line, e.to_string()))?;
        if record.len() != 3 {
            return Err(parse_err(
                source_name,
                line,
                format!("expected 3 fields, found {}", record.len()),
            ));
        }
        let rating = Rating {
            user_id: parse_id(&record[0], "user id", source_name, line)?,
            movie_id: parse_id(&record[1], "movie id", source_name, line)?,
            value: parse_value(&record[2], source_name, line)?,
            timestamp: None,
        };
        if let Some((_, first)) = out.first() {
            let first: &Rating = first;
            if first.user_id != rating.user_id {
                return Err(Error::MixedSessionUsers(first.user_id, rating.user_id));
            }
        }
        out.push((line, rating));
    }
    if out.is_empty() {
        return Err(Error::EmptySession);
    }
    Ok(out)
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let file = File::open(path).map_err(|e| {
        io::Error::new(e.kind(), format!("{}: {e}", path.display()))
    })?;
    Ok(BufReader::new(file))
}

pub fn load_movies(path: &Path) -> Result<Catalog> {
    parse_movies_named(open(path)?, &path.display().to_string())
}

pub fn load_ratings(path: &Path, catalog: &Catalog) -> Result<RatingsStore> {
    parse_ratings_named(open(path)?, catalog, &path.display().to_string())
}

pub fn load_session(path: &Path, store: &RatingsStore, catalog: &Catalog) -> Result<RatingsStore> {
    ingest_session_named(open(path)?, store, catalog, &path.display().to_string())
}

pub fn load_users(path: &Path) -> Result<usize> {
    parse_users(open(path)?)
}
