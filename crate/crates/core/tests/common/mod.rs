#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;

use synlex::flatfile::parse_lexicon;
use synlex::lexmodel::PosTag;
use synlex::{LexEntry, Registry};

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

pub fn fixtures() -> Vec<LexEntry> {
    let bytes = std::fs::read(data("tables.flat")).unwrap();
    let (entries, diags) = parse_lexicon(&bytes, &Registry::builtin()).unwrap();
    assert!(diags.is_empty(), "{diags:?}");
    entries
}

/// One conjunct as the oracle understands it: field label and value,
/// values always verbose.
#[derive(Debug, Clone)]
pub struct Conjunct {
    pub field: &'static str,
    pub value: String,
}

pub fn query_text(q: &[Conjunct]) -> String {
    q.iter()
        .map(|c| format!("{}={}", c.field, c.value))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Reference semantics: every conjunct holds, by plain field comparison.
pub fn oracle_matches(e: &LexEntry, q: &[Conjunct]) -> bool {
    q.iter().all(|c| match c.field {
        "INDEX" => e.index == c.value,
        "ENTRY" => e.entry.contains(&c.value),
        "POS" => e.pos.parts().map(|p| p.render(synlex::RenderMode::Verbose)).collect::<Vec<_>>().join("+") == c.value,
        "FRAME" => e.frames.contains(&c.value),
        "FS" => e.fs.contains(&c.value),
        other => panic!("oracle has no field {other}"),
    })
}

/// A random conjunctive query, biased towards values that occur in
/// `sample` so that results are usually non-empty.
pub fn random_query<R: Rng>(rng: &mut R, sample: &[LexEntry], reg: &Registry) -> Vec<Conjunct> {
    let n = rng.gen_range(1..=3);
    let mut q: Vec<Conjunct> = Vec::new();
    let e = sample.choose(rng).unwrap();
    for _ in 0..n {
        let field = *["INDEX", "ENTRY", "POS", "FRAME", "FS"].choose(rng).unwrap();
        if matches!(field, "INDEX" | "ENTRY" | "POS") && q.iter().any(|c| c.field == field) {
            continue;
        }
        let from_sample = rng.gen_bool(0.8);
        let value = match field {
            "INDEX" => e.index.clone(),
            "ENTRY" => e.entry.choose(rng).unwrap().clone(),
            "POS" if from_sample => e.pos.parts().map(|p| p.render(synlex::RenderMode::Verbose)).collect::<Vec<_>>().join("+"),
            "POS" => PosTag::ALL.choose(rng).unwrap().name().to_string(),
            "FRAME" if from_sample => e.frames.choose(rng).unwrap().clone(),
            "FRAME" => reg.frames().choose(rng).unwrap().verbose_name.clone(),
            "FS" if from_sample && !e.fs.is_empty() => e.fs.choose(rng).unwrap().clone(),
            _ => reg.features().choose(rng).unwrap().name.clone(),
        };
        q.push(Conjunct { field, value });
    }
    if q.is_empty() {
        q.push(Conjunct { field: "INDEX", value: e.index.clone() });
    }
    q
}

/// Index -> entries in insertion order, replaying puts and deletes.
#[derive(Default)]
pub struct MultiMap {
    map: HashMap<String, Vec<LexEntry>>,
}

impl MultiMap {
    pub fn put(&mut self, e: &LexEntry) -> bool {
        let v = self.map.entry(e.index.clone()).or_default();
        if v.contains(e) {
            return false;
        }
        v.push(e.clone());
        true
    }

    pub fn delete(&mut self, e: &LexEntry) -> bool {
        match self.map.get_mut(&e.index) {
            Some(v) => match v.iter().position(|x| x == e) {
                Some(i) => {
                    v.remove(i);
                    true
                }
                None => false,
            },
            None => false,
        }
    }

    pub fn get(&self, index: &str) -> Vec<LexEntry> {
        self.map.get(index).cloned().unwrap_or_default()
    }

    pub fn keys(&self) -> impl Iterator<Item = &String> {
        self.map.keys()
    }

    pub fn len(&self) -> usize {
        self.map.values().map(Vec::len).sum()
    }
}
