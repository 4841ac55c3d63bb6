//! Deterministic random lexicons for tests, benchmarks and demos.
//!
//! Every generated entry validates against the registry it was built for.
//! The same seed always yields the same sequence.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lexmodel::{FeatureGroup, LexEntry, PosLabel, PosPart, PosTag, Registry};

const ONSETS: [&str; 16] = [
    "b", "c", "d", "f", "g", "h", "l", "m", "n", "p", "r", "s", "t", "v", "w", "z",
];
const NUCLEI: [&str; 6] = ["a", "e", "i", "o", "u", "ou"];
const PARTICLES: [&str; 8] = ["out", "up", "in", "off", "on", "down", "over", "away"];

/// The `i`th word of the synthetic vocabulary; distinct `i` give distinct
/// words.
pub fn word(i: u64) -> String {
    let mut n = i;
    let mut s = String::new();
    loop {
        s.push_str(ONSETS[(n % 16) as usize]);
        n /= 16;
        s.push_str(NUCLEI[(n % 6) as usize]);
        n /= 6;
        if n == 0 {
            break;
        }
        n -= 1;
    }
    s.push('k');
    s
}

pub struct Synth<'r> {
    rng: ChaCha8Rng,
    reg: &'r Registry,
    vocab: u64,
}

impl<'r> Synth<'r> {
    /// Indexes are drawn from the first `vocab` words, so several entries
    /// share an index once the lexicon is larger than the vocabulary.
    pub fn new(seed: u64, reg: &'r Registry, vocab: u64) -> Synth<'r> {
        Synth {
            rng: ChaCha8Rng::seed_from_u64(seed),
            reg,
            vocab: vocab.max(1),
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn index_word(&mut self) -> String {
        word(self.rng.gen_range(0..self.vocab))
    }

    pub fn entry(&mut self) -> LexEntry {
        let index = self.index_word();
        let pos = *PosTag::ALL.choose(&mut self.rng).unwrap();
        self.entry_for(index, pos)
    }

    /// A random valid entry with the given index and head category.
    pub fn entry_for(&mut self, index: String, pos: PosTag) -> LexEntry {
        let rng = &mut self.rng;
        let (label, tokens) = if pos == PosTag::Verb && rng.gen_bool(0.15) {
            let particle = PARTICLES.choose(rng).unwrap().to_string();
            (
                PosLabel::compound(PosTag::Verb, vec![PosPart::VerbParticle]),
                vec![index.clone(), particle],
            )
        } else {
            (PosLabel::simple(pos), vec![index.clone()])
        };

        let mut frames: Vec<String> = self
            .reg
            .frames_for_pos(pos)
            .map(|f| f.verbose_name.clone())
            .collect();
        frames.shuffle(rng);
        let n = rng.gen_range(1..=frames.len().min(3));
        frames.truncate(n);

        let mut taken: HashSet<FeatureGroup> = HashSet::new();
        let mut fs = Vec::new();
        for _ in 0..rng.gen_range(0..=2) {
            let v = self.reg.features().choose(rng).unwrap();
            if fs.contains(&v.name) || (v.group.is_exclusive() && taken.contains(&v.group)) {
                continue;
            }
            taken.insert(v.group);
            fs.push(v.name.clone());
        }

        let ex = (0..rng.gen_range(0..=1))
            .map(|_| {
                let len = rng.gen_range(2..6);
                let mut words: Vec<String> =
                    (0..len).map(|_| word(rng.gen_range(0..64))).collect();
                words.insert(rng.gen_range(0..=words.len()), tokens.join(" "));
                words.join(" ")
            })
            .collect::<Vec<_>>();

        LexEntry::new(index, label)
            .with_entry(tokens)
            .with_frames(frames)
            .with_fs(fs)
            .with_ex(ex)
    }

    /// `n` distinct entries.
    pub fn lexicon(&mut self, n: usize) -> Vec<LexEntry> {
        let mut seen = HashSet::with_capacity(n);
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let e = self.entry();
            if seen.insert(e.clone()) {
                out.push(e);
            }
        }
        out
    }
}
