mod common;

use lyricist_core::corpus::{AnnotatedSong, Emotion, Song};
use lyricist_core::oracle::{brute_force_pmi, brute_force_theme_keywords};
use lyricist_core::pmi::{build_pmi, theme_keywords};
use proptest::prelude::*;

fn song(kws: &[String]) -> AnnotatedSong {
    AnnotatedSong {
        song: Song { id: "s".into(), style: "Pop".into(), emotion: None, lines: vec!["x".into()] },
        emotion: Emotion::Neutral,
        keywords: kws.to_vec(),
    }
}

#[test]
fn fixture_table_equals_brute_force() {
    let songs = common::annotated();
    for (min_count, tau) in [(2, 1.0), (3, 1.0), (1, 0.0), (2, f64::NEG_INFINITY)] {
        let table = build_pmi(songs, min_count, tau).unwrap();
        let oracle = brute_force_pmi(songs, min_count, tau);
        assert_eq!(table.len(), oracle.len(), "min_count {min_count} tau {tau}");
        for ((a, b), v) in &oracle {
            assert!((table.get(a, b).unwrap() - v).abs() <= 1e-12);
        }
    }
}

#[test]
fn twelve_song_subset_equals_brute_force() {
    let songs = &common::annotated()[..12];
    let table = build_pmi(songs, 2, 0.5).unwrap();
    let oracle = brute_force_pmi(songs, 2, 0.5);
    let got: Vec<(String, String, f64)> = table.pairs().map(|(a, b, v)| (a.into(), b.into(), v)).collect();
    let want: Vec<(String, String, f64)> = oracle.into_iter().map(|((a, b), v)| (a, b, v)).collect();
    assert_eq!(got.len(), want.len());
    for (g, w) in got.iter().zip(&want) {
        assert_eq!((&g.0, &g.1), (&w.0, &w.1));
        assert!((g.2 - w.2).abs() <= 1e-12);
    }
}

#[test]
fn campus_theme_matches_brute_force() {
    let b = common::bundle();
    let mined = theme_keywords(&b.pmi, &b.themes, "campus").unwrap();
    let seeds = b.themes.seeds("campus").unwrap();
    let oracle = brute_force_pmi(common::annotated(), b.pmi.min_count(), b.pmi.tau());
    assert_eq!(mined, brute_force_theme_keywords(&oracle, &seeds));
    assert!(!mined.is_empty());
}

#[test]
fn independent_words_score_zero() {
    let w = |s: &[&str]| s.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    let songs = [song(&w(&["a", "b"])), song(&w(&["a"])), song(&w(&["b"])), song(&w(&["c"]))];
    let t = build_pmi(&songs, 1, f64::NEG_INFINITY).unwrap();
    assert!(t.get("a", "b").unwrap().abs() <= 1e-12);
}

proptest! {
    #[test]
    fn symmetric_thresholded_and_min_count_respected(
        docs in prop::collection::vec(prop::collection::btree_set("[a-f]", 0..5), 1..20),
        min_count in 1usize..4,
        tau in -1.0f64..2.0,
    ) {
        let songs: Vec<AnnotatedSong> =
            docs.iter().map(|d| song(&d.iter().cloned().collect::<Vec<_>>())).collect();
        let t = build_pmi(&songs, min_count, tau).unwrap();
        for (a, b, v) in t.pairs() {
            prop_assert_eq!(t.get(a, b), t.get(b, a));
            prop_assert!(v >= tau);
            for w in [a, b] {
                prop_assert!(songs.iter().filter(|s| s.keywords.iter().any(|k| k == w)).count() >= min_count);
            }
        }
        prop_assert_eq!(t.len(), brute_force_pmi(&songs, min_count, tau).len());
    }
}
