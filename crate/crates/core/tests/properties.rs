mod common;

use std::collections::HashSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{oracle_matches, query_text, random_query, MultiMap};
use synlex::coverage::{count_tokens, CoverageCounts, RawToken, TagMap};
use synlex::flatfile::{parse_lexicon, serialize_lexicon};
use synlex::lexstore::{decode_record, encode_record};
use synlex::morph::MorphTable;
use synlex::query::{eval_query, Query};
use synlex::synth::Synth;
use synlex::{LexEntry, OpenMode, PosTag, Registry, Store};

fn token() -> impl Strategy<Value = String> {
    "[a-zA-Z0-9'./|\\\\:éü-]{1,8}"
}

fn sentence() -> impl Strategy<Value = String> {
    "[a-zA-Z|\\\\/:,.!? \t\n\ré]{1,24}".prop_filter("trimmed", |s| !s.trim().is_empty() && s.trim() == s)
}

/// Synthetic entries with adversarial tokens and example text.
fn lexicon(max: usize) -> impl Strategy<Value = Vec<LexEntry>> {
    (
        any::<u64>(),
        0..=max,
        prop::collection::vec(token(), 1..12),
        prop::collection::vec(sentence(), 0..6),
    )
        .prop_map(|(seed, n, words, sentences)| {
            let reg = Registry::builtin();
            let mut synth = Synth::new(seed, &reg, 50);
            let mut seen = HashSet::new();
            let mut out = Vec::new();
            for i in 0..n {
                let mut e = synth.entry();
                let w = words[i % words.len()].clone();
                for t in e.entry.iter_mut().filter(|t| **t == e.index) {
                    *t = w.clone();
                }
                e.index = w;
                if !sentences.is_empty() && i % 2 == 0 {
                    e.ex = sentences.iter().skip(i % sentences.len()).take(2).cloned().collect();
                }
                if seen.insert(e.clone()) {
                    out.push(e);
                }
            }
            out
        })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn flat_round_trip(entries in lexicon(40)) {
        let reg = Registry::builtin();
        let text = serialize_lexicon(&entries, &reg).unwrap();
        let (back, diags) = parse_lexicon(text.as_bytes(), &reg).unwrap();
        prop_assert!(diags.is_empty(), "{:?}", diags);
        prop_assert_eq!(text.lines().count(), entries.len());
        prop_assert_eq!(back, entries);
    }

    #[test]
    fn corrupting_one_line_affects_one_entry(entries in lexicon(20), victim in any::<prop::sample::Index>(), junk in "(INDEX|POS|FRAME|JUNK): [a-z]{0,5}") {
        prop_assume!(!entries.is_empty());
        let reg = Registry::builtin();
        let text = serialize_lexicon(&entries, &reg).unwrap();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let v = victim.index(lines.len());
        lines[v] = junk;
        let (back, diags) = parse_lexicon(lines.join("\n").as_bytes(), &reg).unwrap();
        let mut expected = entries.clone();
        expected.remove(v);
        prop_assert_eq!(back, expected);
        prop_assert!(!diags.is_empty());
        prop_assert!(diags.iter().all(|d| d.line == v + 1));
    }

    #[test]
    fn codec_round_trip(entries in lexicon(30)) {
        let reg = Registry::builtin();
        for e in &entries {
            let rec = encode_record(e, &reg).unwrap();
            let bytes = rec.to_bytes();
            let back = synlex::lexstore::EncodedRecord::from_bytes(&bytes).unwrap();
            prop_assert_eq!(&decode_record(&back, &reg).unwrap(), e);
        }
    }

    #[test]
    fn store_agrees_with_multimap(seed in any::<u64>(), ops in 1usize..250) {
        let reg = Registry::builtin();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.db");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pool = Synth::new(seed, &reg, 12).lexicon(60);
        let mut store = Store::open(&path, OpenMode::ReadWrite, None).unwrap();
        let mut oracle = MultiMap::default();
        let mut last_mutation = store.mutation_counter();
        for _ in 0..ops {
            let e = &pool[rng.gen_range(0..pool.len())];
            match rng.gen_range(0..10) {
                0..=5 => {
                    let ok = store.put(e).is_ok();
                    prop_assert_eq!(ok, oracle.put(e));
                }
                6..=8 => {
                    let ok = store.delete(e).is_ok();
                    prop_assert_eq!(ok, oracle.delete(e));
                }
                _ => {
                    store.close().unwrap();
                    store = Store::open(&path, OpenMode::ReadWrite, None).unwrap();
                }
            }
            prop_assert!(store.mutation_counter() >= last_mutation);
            last_mutation = store.mutation_counter();
        }
        prop_assert_eq!(store.len() as usize, oracle.len());
        for e in &pool {
            prop_assert_eq!(store.lookup(&e.index).unwrap(), oracle.get(&e.index));
        }
        store.close().unwrap();
        let store = Store::open(&path, OpenMode::ReadOnly, None).unwrap();
        for k in oracle.keys() {
            prop_assert_eq!(store.lookup(k).unwrap(), oracle.get(k));
        }
        let report = store.verify().unwrap();
        prop_assert_eq!(report.live as usize, oracle.len());
    }

    #[test]
    fn queries_match_oracle_and_are_monotone(seed in any::<u64>()) {
        let reg = Registry::builtin();
        let dir = tempfile::tempdir().unwrap();
        let entries = Synth::new(seed, &reg, 40).lexicon(300);
        let mut store = Store::open(dir.path().join("q.db"), OpenMode::ReadWrite, None).unwrap();
        for e in &entries {
            store.put(e).unwrap();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        for _ in 0..20 {
            let conj = random_query(&mut rng, &entries, &reg);
            let q = Query::parse(&query_text(&conj)).unwrap();
            let got = eval_query(&store, &q).unwrap().to_entries();
            let want: Vec<LexEntry> = entries.iter().filter(|e| oracle_matches(e, &conj)).cloned().collect();
            prop_assert_eq!(&got, &want, "{}", query_text(&conj));
            let narrower = random_query(&mut rng, &entries, &reg).into_iter().find(|c| c.field == "FRAME" || c.field == "FS");
            if let Some(extra) = narrower {
                let mut q2 = conj.clone();
                q2.push(extra);
                let smaller = eval_query(&store, &Query::parse(&query_text(&q2)).unwrap()).unwrap();
                prop_assert!(smaller.len() <= got.len());
                prop_assert!(smaller.entries().all(|e| got.contains(e)));
            }
        }
    }

    #[test]
    fn coverage_counts_merge_in_any_order(seed in any::<u64>(), cuts in prop::collection::vec(0usize..200, 0..5)) {
        let (store, morph, tags, corpus, _dir) = coverage_setup(seed);
        let whole = count_tokens(&corpus, &store, &morph, &tags).unwrap();
        let mut bounds: Vec<usize> = cuts.into_iter().map(|c| c.min(corpus.len())).collect();
        bounds.sort();
        bounds.push(corpus.len());
        let mut start = 0;
        let mut parts = Vec::new();
        for b in bounds {
            parts.push(count_tokens(&corpus[start..b], &store, &morph, &tags).unwrap());
            start = b;
        }
        let mut fwd = CoverageCounts::default();
        parts.iter().for_each(|p| fwd.merge(p));
        let mut rev = CoverageCounts::default();
        parts.iter().rev().for_each(|p| rev.merge(p));
        prop_assert_eq!(fwd, whole);
        prop_assert_eq!(rev, whole);
        prop_assert_eq!(whole.hits + whole.non_hits(), whole.total);
    }

    #[test]
    fn adding_entries_never_loses_hits(seed in any::<u64>()) {
        let (mut store, morph, tags, corpus, _dir) = coverage_setup(seed);
        let before = count_tokens(&corpus, &store, &morph, &tags).unwrap();
        let reg = Registry::builtin();
        for e in Synth::new(seed.wrapping_add(1), &reg, 30).lexicon(40) {
            let _ = store.put(&e);
        }
        let after = count_tokens(&corpus, &store, &morph, &tags).unwrap();
        prop_assert!(after.hits >= before.hits);
        prop_assert_eq!(after.total, before.total);
    }
}

type Setup = (Store, MorphTable, TagMap, Vec<RawToken>, tempfile::TempDir);

fn coverage_setup(seed: u64) -> Setup {
    let reg = Registry::builtin();
    let dir = tempfile::tempdir().unwrap();
    let mut store = Store::open(dir.path().join("c.db"), OpenMode::ReadWrite, None).unwrap();
    for e in Synth::new(seed, &reg, 30).lexicon(40) {
        store.put(&e).unwrap();
    }
    let mut morph = MorphTable::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..30 {
        let root = synlex::synth::word(i);
        let analysis = synlex::morph::Analysis::new(root.clone(), &["plural"]);
        morph.insert(&format!("{root}s"), PosTag::Noun, analysis);
    }
    let tags = TagMap::parse("NN Noun\nNNS Noun\nNNP ProperNoun\nVB Verb\nJJ Adjective\nRB Adverb\nDT Determiner\nUH Other\n").unwrap();
    let tagset = ["NN", "NNS", "NNP", "VB", "JJ", "RB", "DT", "UH"];
    let corpus = (0..200)
        .map(|_| {
            let w = synlex::synth::word(rng.gen_range(0..45));
            let tag = tagset[rng.gen_range(0..tagset.len())];
            let surface = if tag == "NNS" { format!("{w}s") } else { w };
            RawToken::new(surface, tag)
        })
        .collect();
    (store, morph, tags, corpus, dir)
}

#[test]
fn index_query_probes_one_bucket() {
    let reg = Registry::builtin();
    let dir = tempfile::tempdir().unwrap();
    let mut store = Store::open(dir.path().join("b.db"), OpenMode::ReadWrite, None).unwrap();
    let entries = Synth::new(3, &reg, 500).lexicon(3000);
    for e in &entries {
        store.put(e).unwrap();
    }
    for e in entries.iter().take(50) {
        let before = store.probe_count();
        let rs = eval_query(&store, &Query::parse(&format!("INDEX={} POS={}", e.index, e.pos.render_with(synlex::RenderMode::Verbose, "+"))).unwrap()).unwrap();
        assert_eq!(store.probe_count() - before, 1);
        assert!(rs.entries().any(|x| x == e));
    }
}

#[test]
fn mutation_counter_strictly_increases() {
    let reg = Registry::builtin();
    let dir = tempfile::tempdir().unwrap();
    let mut store = Store::open(dir.path().join("m.db"), OpenMode::ReadWrite, None).unwrap();
    let mut last = store.mutation_counter();
    for e in Synth::new(9, &reg, 20).lexicon(50) {
        store.put(&e).unwrap();
        assert!(store.mutation_counter() > last);
        last = store.mutation_counter();
        assert!(store.put(&e).is_err());
        assert_eq!(store.mutation_counter(), last);
    }
}
