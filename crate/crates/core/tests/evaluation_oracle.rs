use std::collections::BTreeMap;

use mira::clustering::{self, ClusterModel};
use mira::cycle::CycleConfig;
use mira::dataset::{ingest_session_ratings, parse_movies, parse_ratings, Catalog, RatingsStore};
use mira::evaluation::{self, BaselineRecommender, MiraRecommender};
use mira::genre::Genre;
use mira::memory;
use mira::{GridReport, RecommendationList};

const MOVIES: &str = "\
1::One (1990)::Drama
2::Two (1991)::Drama
3::Three (1992)::Drama|Romance
4::Four (1993)::Comedy
5::Five (1994)::Comedy
6::Six (1995)::Comedy|Romance
7::Seven (1996)::Drama
8::Eight (1997)::Comedy
";

const RATINGS: &str = "\
1::1::5::0
1::2::4::0
1::4::2::0
2::1::5::0
2::2::5::0
2::3::4::0
2::7::5::0
2::5::1::0
3::1::4::0
3::2::4::0
3::7::3::0
3::6::5::0
3::8::2::0
4::4::5::0
4::5::5::0
4::8::4::0
4::6::4::0
5::3::5::0
5::7::4::0
6::4::1::0
6::5::2::0
6::6::3::0
";

fn toy() -> (Catalog, RatingsStore) {
    let catalog = parse_movies(MOVIES.as_bytes()).unwrap();
    let store = parse_ratings(RATINGS.as_bytes(), &catalog).unwrap();
    (catalog, store)
}

#[test]
fn preferred_genres_counting_oracle() {
    // ten ratings, liked counts: Drama 4, Comedy 2, Romance 2 (rated 3 vs Comedy 3)
    let catalog = parse_movies(
        "1::a::Drama\n2::b::Drama|Romance\n3::c::Comedy\n4::d::Comedy|Romance\n5::e::Drama\n\
         6::f::Drama|War\n7::g::Horror\n8::h::Romance\n9::i::Comedy\n10::j::Western\n"
            .as_bytes(),
    )
    .unwrap();
    let store = parse_ratings(
        "1::1::5::0\n1::2::4::0\n1::3::4::0\n1::4::5::0\n1::5::4::0\n\
         1::6::5::0\n1::7::3::0\n1::8::1::0\n1::9::2::0\n1::10::4::0\n"
            .as_bytes(),
        &catalog,
    )
    .unwrap();
    let history = memory::fetch_user(&store, 1).unwrap();
    let p = evaluation::preferred_genres(&history, &catalog).unwrap();
    // Drama 4; Comedy 2 and Romance 2 tie on liked and on rated (3 each), name decides;
    // War and Western 1 each; Horror liked 0
    assert_eq!(
        p.genres,
        vec![Genre::Drama, Genre::Comedy, Genre::Romance, Genre::War, Genre::Western]
    );
}

/// Mean of per-user precision for one grid cell, computed from the cycle output.
fn cell_oracle(store: &RatingsStore, catalog: &Catalog, users: &[u32], k: usize, n: usize) -> BTreeMap<u32, f64> {
    let model: ClusterModel<f64> = clustering::fit_catalog(catalog, k, 5).unwrap();
    let config = CycleConfig { k, n_similar: n, n_recommendations: 3, seed: 5 };
    users
        .iter()
        .map(|&u| {
            let list = mira::cycle::run_cycle(store, catalog, &model, &config, u).unwrap();
            let history = memory::fetch_user(store, u).unwrap();
            let preferred = evaluation::preferred_genres(&history, catalog).unwrap();
            let wanted: Vec<Genre> = preferred.genres.clone();
            let hits = list
                .items
                .iter()
                .filter(|i| catalog.get(i.movie_id).unwrap().genres.iter().any(|g| wanted.contains(&g)))
                .count();
            let p = if list.is_empty() { 0.0 } else { hits as f64 / list.len() as f64 };
            (u, p)
        })
        .collect()
}

#[test]
fn two_by_two_grid_matches_cell_by_cell_oracle() {
    let (catalog, store) = toy();
    let users = [1, 3, 5, 6];
    let grid: GridReport = evaluation::run_grid(&store, &catalog, &users, &[3, 2, 2], &[2, 1], 3, 5).unwrap();
    let cells: Vec<(usize, usize)> = grid.cells.iter().map(|c| (c.k, c.n_similar)).collect();
    assert_eq!(cells, vec![(2, 1), (2, 2), (3, 1), (3, 2)]);
    for cell in &grid.cells {
        let oracle = cell_oracle(&store, &catalog, &users, cell.k, cell.n_similar);
        assert_eq!(cell.report.per_user, oracle);
        let mean = oracle.values().sum::<f64>() / oracle.len() as f64;
        assert!((cell.report.mean_precision - mean).abs() < 1e-12);
        assert_eq!(cell.report.config.k, cell.k);
    }
    let again = evaluation::run_grid::<f64>(&store, &catalog, &users, &[2, 3], &[1, 2], 3, 5).unwrap();
    assert_eq!(grid, again);
    assert_eq!(grid.to_csv(), again.to_csv());
}

#[test]
fn grid_rejects_unknown_users_and_bad_k() {
    let (catalog, store) = toy();
    assert!(matches!(
        evaluation::run_grid::<f64>(&store, &catalog, &[1, 99], &[2], &[1], 3, 5),
        Err(mira::Error::UnknownUser(99))
    ));
    assert!(evaluation::run_grid::<f64>(&store, &catalog, &[1], &[0], &[1], 3, 5).is_err());
    assert!(matches!(
        evaluation::run_grid::<f64>(&store, &catalog, &[1], &[5], &[1], 3, 5),
        Err(mira::Error::Infeasible { .. })
    ));
}

#[test]
fn comparison_of_a_recommender_with_itself_is_symmetric() {
    let (catalog, store) = toy();
    let config = CycleConfig { k: 2, n_similar: 2, n_recommendations: 3, seed: 11 };
    let model: ClusterModel<f64> = clustering::fit_catalog(&catalog, 2, 11).unwrap();
    let mira_rec = MiraRecommender { store: &store, catalog: &catalog, model: &model, config };
    let users = [1, 2, 3, 4, 5, 6];
    let r = evaluation::compare_recommenders(&mira_rec, &mira_rec, &store, &catalog, &users, config).unwrap();
    assert_eq!(r.mira, r.baseline);

    let base = BaselineRecommender { store: &store, catalog: &catalog, n_recs: 3, n_neighbors: 2 };
    let ab = evaluation::compare_recommenders::<f64, _, _>(&mira_rec, &base, &store, &catalog, &users, config).unwrap();
    let ba = evaluation::compare_recommenders::<f64, _, _>(&base, &mira_rec, &store, &catalog, &users, config).unwrap();
    assert_eq!(ab.mira, ba.baseline);
    assert_eq!(ab.baseline, ba.mira);
}

#[test]
fn compare_models_on_the_toy_store() {
    let (catalog, store) = toy();
    let config = CycleConfig { k: 2, n_similar: 2, n_recommendations: 3, seed: 11 };
    let r = evaluation::compare_models::<f64>(&store, &catalog, &[1], config).unwrap();
    // user 1 likes only Drama movies; MIRA returns 3 and 7, both Drama
    assert_eq!(r.mira.per_user[&1], 1.0);
    // baseline predictions: 6 -> 5, 7 -> (s2*5 + s3*3)/(s2 + s3) = 4.045, 3 -> 4, 8 -> 2, 5 -> 1;
    // the top three hold one Comedy movie
    assert_eq!(r.baseline.per_user[&1], 2.0 / 3.0);
    assert_eq!(
        r.to_csv(),
        "model,user_id,precision\nmira,1,1\nmira,MEAN,1\nbaseline,1,0.6666666666666666\nbaseline,MEAN,0.6666666666666666\n"
    );
}

#[test]
fn closures_act_as_recommenders() {
    let (catalog, store) = toy();
    let config = CycleConfig::default();
    let empty = |u: u32| -> mira::Result<RecommendationList> {
        Ok(RecommendationList { user_id: u, cluster_label: String::new(), items: Vec::new() })
    };
    let r = evaluation::evaluate_users(&empty, &store, &catalog, &[1, 2], config).unwrap();
    assert_eq!(r.mean_precision, 0.0);
    assert_eq!(r.per_user.len(), 2);
}

#[test]
fn session_user_is_scored_against_their_own_genres() {
    let (catalog, store) = toy();
    let csv = "user_id,movie_id,rating\n100,1,5\n100,2,4\n100,4,2\n";
    let extended = ingest_session_ratings(csv.as_bytes(), &store, &catalog).unwrap();
    let config = CycleConfig { k: 2, n_similar: 2, n_recommendations: 3, seed: 11 };
    let report = evaluation::evaluate_session::<f64>(&extended, &catalog, 100, config).unwrap();
    assert_eq!(report.preferred.genres, vec![Genre::Drama]);
    let ids: Vec<u32> = report.recommendations.movie_ids().collect();
    assert_eq!(ids, vec![7, 3]);
    assert_eq!(report.report.mean_precision, 1.0);
    assert!(matches!(
        evaluation::evaluate_session::<f64>(&store, &catalog, 100, config),
        Err(mira::Error::UnknownUser(100))
    ));
}
