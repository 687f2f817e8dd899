//! Keyword retrieval over the curated example corpus (BM25 scoring).

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;

pub const RELEVANCE_THRESHOLD: f64 = 1.0;
pub const WEAK_TAG: &str = "[weakly relevant]";
const K1: f64 = 1.2;
const B: f64 = 0.75;

const STOPWORDS: [&str; 22] = [
    "a", "an", "and", "are", "as", "at", "be", "by", "for", "from", "in", "into", "is", "it", "its", "of", "on", "or",
    "so", "the", "to", "with",
];

const BUILTIN: [(&str, &str); 12] = [
    ("01_wheel_and_tire", include_str!("../../assets/corpus/01_wheel_and_tire.toml")),
    ("02_barrel_hinge_door", include_str!("../../assets/corpus/02_barrel_hinge_door.toml")),
    ("03_drawer_slide", include_str!("../../assets/corpus/03_drawer_slide.toml")),
    ("04_perforated_vent", include_str!("../../assets/corpus/04_perforated_vent.toml")),
    ("05_tube_handle", include_str!("../../assets/corpus/05_tube_handle.toml")),
    ("06_rotary_knob", include_str!("../../assets/corpus/06_rotary_knob.toml")),
    ("07_arm_chain", include_str!("../../assets/corpus/07_arm_chain.toml")),
    ("08_captured_axle", include_str!("../../assets/corpus/08_captured_axle.toml")),
    ("09_pose_check", include_str!("../../assets/corpus/09_pose_check.toml")),
    ("10_mimic_gripper", include_str!("../../assets/corpus/10_mimic_gripper.toml")),
    ("11_floating_rotor", include_str!("../../assets/corpus/11_floating_rotor.toml")),
    ("12_fan_rotor", include_str!("../../assets/corpus/12_fan_rotor.toml")),
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleEntry {
    #[serde(default)]
    pub id: String,
    pub title: String,
    #[serde(default)]
    pub tags: Vec<String>,
    #[serde(default)]
    pub notes: String,
    pub snippet: String,
}

impl ExampleEntry {
    pub fn parse(id: &str, text: &str) -> Result<Self, HarnessError> {
        let mut e: ExampleEntry =
            toml::from_str(text).map_err(|err| HarnessError::new("invalid_example", format!("{id}: {err}")))?;
        e.id = id.to_string();
        Ok(e)
    }

    /// Title and tags count twice.
    fn indexed_text(&self) -> String {
        let tags = self.tags.join(" ");
        format!("{t} {t} {tags} {tags} {}", self.notes, t = self.title)
    }
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(|w| {
            let w = w.to_lowercase();
            match w.strip_suffix('s') {
                Some(stem) if w.len() > 3 && !w.ends_with("ss") => stem.to_string(),
                _ => w,
            }
        })
        .filter(|w| !STOPWORDS.contains(&w.as_str()))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExampleHit {
    pub index: usize,
    pub score: f64,
    pub weak: bool,
}

#[derive(Debug, Clone, Default)]
pub struct ExampleIndex {
    entries: Vec<ExampleEntry>,
    term_freqs: Vec<BTreeMap<String, usize>>,
    lengths: Vec<usize>,
    doc_freq: BTreeMap<String, usize>,
}

impl ExampleIndex {
    pub fn new(entries: Vec<ExampleEntry>) -> Self {
        let mut idx = Self {
            entries,
            ..Self::default()
        };
        for e in &idx.entries {
            let tokens = tokenize(&e.indexed_text());
            let mut tf = BTreeMap::new();
            for t in &tokens {
                *tf.entry(t.clone()).or_insert(0) += 1;
            }
            for t in tf.keys() {
                *idx.doc_freq.entry(t.clone()).or_insert(0) += 1;
            }
            idx.lengths.push(tokens.len());
            idx.term_freqs.push(tf);
        }
        idx
    }

    pub fn builtin() -> Self {
        let entries = BUILTIN
            .iter()
            .map(|(id, text)| ExampleEntry::parse(id, text).expect("builtin corpus entries parse"))
            .collect();
        Self::new(entries)
    }

    /// Loads every `*.toml` entry in `dir`, ordered by file name.
    pub fn load_dir(dir: &Path) -> Result<Self, HarnessError> {
        let read = std::fs::read_dir(dir)
            .map_err(|e| HarnessError::new("unknown_path", format!("{}: {e}", dir.display())))?;
        let mut paths: Vec<_> = read
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "toml"))
            .collect();
        paths.sort();
        let mut entries = Vec::new();
        for p in paths {
            let text = std::fs::read_to_string(&p)
                .map_err(|e| HarnessError::new("unknown_path", format!("{}: {e}", p.display())))?;
            let id = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            entries.push(ExampleEntry::parse(id, &text)?);
        }
        Ok(Self::new(entries))
    }

    pub fn entries(&self) -> &[ExampleEntry] {
        &self.entries
    }

    pub fn score(&self, doc: usize, query: &str) -> f64 {
        let n = self.entries.len() as f64;
        let avg = self.lengths.iter().sum::<usize>() as f64 / n.max(1.0);
        let len = self.lengths[doc] as f64;
        let terms: BTreeSet<String> = tokenize(query).into_iter().collect();
        terms
            .iter()
            .map(|t| {
                let tf = *self.term_freqs[doc].get(t).unwrap_or(&0) as f64;
                if tf == 0.0 {
                    return 0.0;
                }
                let df = *self.doc_freq.get(t).unwrap_or(&0) as f64;
                let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
                idf * tf * (K1 + 1.0) / (tf + K1 * (1.0 - B + B * len / avg))
            })
            .sum()
    }

    /// Top `k` entries by score, ties in corpus order.
    pub fn search(&self, query: &str, k: usize) -> Result<Vec<ExampleHit>, HarnessError> {
        if self.entries.is_empty() {
            return Err(HarnessError::new("empty_index", "the example index has no entries"));
        }
        let mut hits: Vec<ExampleHit> = (0..self.entries.len())
            .map(|i| {
                let score = self.score(i, query);
                ExampleHit {
                    index: i,
                    score,
                    weak: score < RELEVANCE_THRESHOLD,
                }
            })
            .collect();
        // stable sort keeps corpus order among equal scores
        hits.sort_by(|a, b| b.score.total_cmp(&a.score));
        hits.truncate(k);
        Ok(hits)
    }

    pub fn render(&self, hits: &[ExampleHit]) -> String {
        if hits.is_empty() {
            return "No examples requested.".to_string();
        }
        let mut out = String::new();
        for h in hits {
            let e = &self.entries[h.index];
            let tag = if h.weak { format!(" {WEAK_TAG}") } else { String::new() };
            out.push_str(&format!(
                "## {}{tag}\nid: {}\ntags: {}\nscore: {:.3}\n{}\n```\n{}\n```\n\n",
                e.title,
                e.id,
                e.tags.join(", "),
                h.score,
                e.notes.trim(),
                e.snippet.trim()
            ));
        }
        out.truncate(out.trim_end().len());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizer_stems_plurals_and_drops_stopwords() {
        assert_eq!(tokenize("The Wheels and a Tire-rack"), vec!["wheel", "tire", "rack"]);
        assert_eq!(tokenize("glass"), vec!["glass"]);
    }

    #[test]
    fn empty_index_errors() {
        assert_eq!(ExampleIndex::new(Vec::new()).search("x", 3).unwrap_err().code, "empty_index");
    }

    #[test]
    fn ties_keep_corpus_order() {
        let idx = ExampleIndex::builtin();
        let hits = idx.search("zzzz", 4).unwrap();
        assert_eq!(hits.iter().map(|h| h.index).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
        assert!(hits.iter().all(|h| h.weak));
        assert!(idx.render(&hits).contains(WEAK_TAG));
    }
}
