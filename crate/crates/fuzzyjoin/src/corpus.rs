//! Dataset ingestion, q-gram tokenization and synthetic corpora.
//!
//! A collection is a list of sets; each set holds elements; each element
//! carries its raw string plus the sorted, deduplicated list of token ids
//! for its q-grams. Token ids are dense and assigned in ascending document
//! frequency (rarest first, ties by first appearance), so ascending id
//! order doubles as the global token order used by the filters.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Element {
    pub raw: String,
    /// Token ids, ascending, duplicate-free.
    pub tokens: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetRecord {
    /// Original line index in the source file.
    pub id: usize,
    pub elements: Vec<Element>,
}

impl SetRecord {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct Collection {
    /// Sets sorted ascending by (element count, id).
    pub sets: Vec<SetRecord>,
    pub token_dict: HashMap<String, u32>,
    pub q: usize,
    /// Blank or empty input lines dropped during parsing.
    pub skipped_lines: usize,
    /// Tokenization mode the collection was built with; the edit-similarity
    /// filters need to know whether tokens are whole-element q-grams.
    pub per_word: bool,
    pub pretokenized: bool,
}

impl Collection {
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// One set per line, elements joined by `delimiter`, in id order.
    pub fn to_text(&self, delimiter: char) -> String {
        let mut by_id: Vec<&SetRecord> = self.sets.iter().collect();
        by_id.sort_by_key(|s| s.id);
        let mut out = String::new();
        for set in by_id {
            let mut first = true;
            for elem in &set.elements {
                if !first {
                    out.push(delimiter);
                }
                out.push_str(&elem.raw);
                first = false;
            }
            out.push('\n');
        }
        out
    }

    pub fn write_text(&self, path: &Path, delimiter: char) -> Result<()> {
        std::fs::write(path, self.to_text(delimiter)).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub q: usize,
    pub delimiter: char,
    /// Tokenize each whitespace-separated word of an element separately
    /// instead of the whole element text.
    pub per_word: bool,
    /// Elements are whitespace-separated integer token ids already.
    pub pretokenized: bool,
}

impl LoadOptions {
    pub fn new(q: usize, delimiter: char) -> Self {
        LoadOptions { q, delimiter, per_word: false, pretokenized: false }
    }
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions::new(3, ';')
    }
}

/// All contiguous substrings of length `q` (in chars), left to right.
/// Words shorter than `q` become a single whole-word token; an empty word
/// yields no tokens and marks a skippable element.
pub fn tokenize(word: &str, q: usize) -> Vec<String> {
    assert!(q >= 1, "q must be positive");
    let chars: Vec<char> = word.chars().collect();
    if chars.is_empty() {
        return Vec::new();
    }
    if chars.len() < q {
        return vec![word.to_string()];
    }
    chars.windows(q).map(|w| w.iter().collect()).collect()
}

/// Token strings of one element under the configured mode, duplicates kept.
fn element_token_strings(raw: &str, opts: &LoadOptions) -> Vec<String> {
    if opts.pretokenized {
        return raw.split_whitespace().map(str::to_string).collect();
    }
    if opts.per_word {
        let mut out = Vec::new();
        for word in raw.split_whitespace() {
            out.extend(tokenize(word, opts.q));
        }
        out
    } else {
        tokenize(raw, opts.q)
    }
}

pub fn load_collection(path: &Path, delimiter: char, q: usize) -> Result<Collection> {
    load_collection_with(path, &LoadOptions::new(q, delimiter))
}

pub fn load_collection_with(path: &Path, opts: &LoadOptions) -> Result<Collection> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    build_collection(text.lines(), opts)
}

/// Builds a collection from raw set lines. Token ids are assigned dense,
/// in ascending document frequency (number of elements containing the
/// token), ties by first appearance.
pub fn build_collection<'a, I>(lines: I, opts: &LoadOptions) -> Result<Collection>
where
    I: IntoIterator<Item = &'a str>,
{
    if opts.q < 1 {
        return Err(Error::InvalidArgument("q must be >= 1".into()));
    }

    // Pass 1: parse and tokenize, counting per-token document frequency.
    struct RawSet {
        id: usize,
        elements: Vec<(String, Vec<String>)>,
    }
    let mut raw_sets: Vec<RawSet> = Vec::new();
    let mut skipped = 0usize;
    let mut df: HashMap<String, (u32, u32)> = HashMap::new(); // token -> (doc freq, first seen)
    let mut seen_counter = 0u32;

    for (line_idx, line) in lines.into_iter().enumerate() {
        let mut elements = Vec::new();
        for piece in line.split(opts.delimiter) {
            let raw = piece.trim();
            if raw.is_empty() {
                continue;
            }
            let mut toks = element_token_strings(raw, opts);
            if toks.is_empty() {
                continue;
            }
            toks.sort_unstable();
            toks.dedup();
            for t in &toks {
                let entry = df.entry(t.clone()).or_insert_with(|| {
                    let fs = seen_counter;
                    seen_counter += 1;
                    (0, fs)
                });
                entry.0 += 1;
            }
            elements.push((raw.to_string(), toks));
        }
        if elements.is_empty() {
            skipped += 1;
            continue;
        }
        raw_sets.push(RawSet { id: line_idx, elements });
    }

    // Assign ids: rarest token first, ties by first appearance.
    let mut order: Vec<(&String, u32, u32)> =
        df.iter().map(|(t, &(freq, fs))| (t, freq, fs)).collect();
    order.sort_unstable_by_key(|&(_, freq, fs)| (freq, fs));
    let mut token_dict: HashMap<String, u32> = HashMap::with_capacity(order.len());
    for (idx, (tok, _, _)) in order.into_iter().enumerate() {
        token_dict.insert(tok.clone(), idx as u32);
    }

    let mut sets: Vec<SetRecord> = raw_sets
        .into_iter()
        .map(|rs| SetRecord {
            id: rs.id,
            elements: rs
                .elements
                .into_iter()
                .map(|(raw, toks)| {
                    let mut ids: Vec<u32> = toks.iter().map(|t| token_dict[t]).collect();
                    ids.sort_unstable();
                    Element { raw, tokens: ids }
                })
                .collect(),
        })
        .collect();
    sets.sort_by_key(|s| (s.len(), s.id));

    Ok(Collection {
        sets,
        token_dict,
        q: opts.q,
        skipped_lines: skipped,
        per_word: opts.per_word,
        pretokenized: opts.pretokenized,
    })
}

/// Deterministic sample of ceil(fraction * n) sets. Fisher-Yates over set
/// indices driven by ChaCha8 and a modulo draw, so the outcome is fixed by
/// the seed on every platform. Ids are preserved from the parent.
pub fn sample(collection: &Collection, fraction: f64, seed: u64) -> Result<Collection> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "sample fraction must be in (0, 1], got {fraction}"
        )));
    }
    let n = collection.len();
    let k = (fraction * n as f64).ceil() as usize;
    let k = k.min(n);
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in (1..n).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        indices.swap(i, j);
    }
    let mut sets: Vec<SetRecord> =
        indices[..k].iter().map(|&i| collection.sets[i].clone()).collect();
    sets.sort_by_key(|s| (s.len(), s.id));
    Ok(Collection {
        sets,
        token_dict: collection.token_dict.clone(),
        q: collection.q,
        skipped_lines: 0,
        per_word: collection.per_word,
        pretokenized: collection.pretokenized,
    })
}

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub n_sets: usize,
    pub avg_elems: usize,
    pub alphabet: usize,
    pub seed: u64,
    pub q: usize,
    /// Fraction of sets that are perturbed copies of earlier sets.
    pub planted_fraction: f64,
    /// Per-element probability of a single random character edit in a copy.
    pub perturb_prob: f64,
}

impl SynthConfig {
    pub fn new(n_sets: usize, avg_elems: usize, alphabet: usize, seed: u64) -> Self {
        SynthConfig {
            n_sets,
            avg_elems,
            alphabet,
            seed,
            q: 3,
            planted_fraction: 0.25,
            perturb_prob: 0.1,
        }
    }
}

const SYNTH_CHARS: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789";

/// Synthetic corpus with planted near-duplicate pairs so self-joins are
/// non-empty. Deterministic for a fixed seed.
pub fn generate_synthetic(
    n_sets: usize,
    avg_elems: usize,
    alphabet: usize,
    seed: u64,
) -> Result<Collection> {
    generate_synthetic_with(&SynthConfig::new(n_sets, avg_elems, alphabet, seed))
}

pub fn generate_synthetic_with(cfg: &SynthConfig) -> Result<Collection> {
    if cfg.n_sets == 0 || cfg.avg_elems == 0 || cfg.alphabet == 0 {
        return Err(Error::InvalidArgument(
            "n_sets, avg_elems and alphabet must be positive".into(),
        ));
    }
    let lines = synthetic_lines(cfg);
    let line_refs: Vec<&str> = lines.iter().map(String::as_str).collect();
    build_collection(line_refs, &LoadOptions::new(cfg.q, ';'))
}

/// The raw text lines of the synthetic corpus (one set per line).
pub fn synthetic_lines(cfg: &SynthConfig) -> Vec<String> {
    let alpha = cfg.alphabet.min(SYNTH_CHARS.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_planted = ((cfg.n_sets as f64 * cfg.planted_fraction) as usize).min(cfg.n_sets - 1);
    let n_base = cfg.n_sets - n_planted;

    let lo = 1.max(cfg.avg_elems - cfg.avg_elems / 2);
    let hi = cfg.avg_elems + cfg.avg_elems / 2;

    let word = |rng: &mut ChaCha8Rng| -> String {
        let len = 5 + (rng.next_u64() % 6) as usize;
        (0..len)
            .map(|_| SYNTH_CHARS[(rng.next_u64() % alpha as u64) as usize] as char)
            .collect()
    };

    let mut base: Vec<Vec<String>> = Vec::with_capacity(n_base);
    for _ in 0..n_base {
        let count = lo + (rng.next_u64() % (hi - lo + 1) as u64) as usize;
        base.push((0..count).map(|_| word(&mut rng)).collect());
    }

    let mut all = base.clone();
    for _ in 0..n_planted {
        let src = (rng.next_u64() % n_base as u64) as usize;
        let mut copy = base[src].clone();
        for elem in copy.iter_mut() {
            let roll = (rng.next_u64() % 1_000_000) as f64 / 1_000_000.0;
            if roll < cfg.perturb_prob {
                *elem = perturb_word(elem, alpha, &mut rng);
            }
        }
        all.push(copy);
    }

    all.iter().map(|set| set.join(";")).collect()
}

/// One random character edit: substitute, insert or delete.
fn perturb_word(word: &str, alpha: usize, rng: &mut ChaCha8Rng) -> String {
    let mut chars: Vec<char> = word.chars().collect();
    let op = rng.next_u64() % 3;
    let pos = (rng.next_u64() % chars.len() as u64) as usize;
    let c = SYNTH_CHARS[(rng.next_u64() % alpha as u64) as usize] as char;
    match op {
        0 => chars[pos] = c,
        1 => chars.insert(pos, c),
        _ => {
            if chars.len() > 1 {
                chars.remove(pos);
            } else {
                chars[pos] = c;
            }
        }
    }
    chars.into_iter().collect()
}

/// Convenience used in a few places for debug output.
pub fn describe(collection: &Collection) -> String {
    let mut s = String::new();
    let total_elems: usize = collection.sets.iter().map(SetRecord::len).sum();
    let _ = write!(
        s,
        "{} sets, {} elements, {} tokens, q={}",
        collection.len(),
        total_elems,
        collection.token_dict.len(),
        collection.q
    );
    s
}
