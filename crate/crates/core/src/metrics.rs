//! Keystroke accounting for corpus evaluation.
//!
//! Keystrokes per character (KSPC) is presses divided by kana entered, kept
//! as an exact rational. Disambiguation charges one press per kana, the
//! select presses needed to reach the word, and one commit; multi-tap charges
//! the press list of every kana plus one advance per kana.

use std::collections::BTreeMap;
use std::fmt::Write;

use num_rational::Ratio;
use thiserror::Error;

use crate::layout::{KeypadLayout, LayoutError};
use crate::lexicon::KeyTrie;
use crate::syllabary::{SyllabaryError, SyllabaryTable};

pub type Kspc = Ratio<u64>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("corpus line {line}: {reason}")]
    Corpus { line: usize, reason: String },
    #[error("corpus reading {reading:?}: {source}")]
    Layout { reading: String, source: LayoutError },
    #[error("corpus reading {reading:?}: {source}")]
    Syllabary { reading: String, source: SyllabaryError },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusRecord {
    pub reading: String,
    /// Occurrences of the reading in the evaluated text.
    pub count: u64,
}

impl CorpusRecord {
    pub fn new(reading: impl Into<String>, count: u64) -> CorpusRecord {
        CorpusRecord {
            reading: reading.into(),
            count,
        }
    }
}

/// Parses `reading<TAB>count` lines; `#` comments and blank lines are skipped.
pub fn parse_corpus(source: &str) -> Result<Vec<CorpusRecord>, MetricsError> {
    let mut out = Vec::new();
    for (idx, raw) in source.lines().enumerate() {
        let line = idx + 1;
        if raw.is_empty() || raw.starts_with('#') {
            continue;
        }
        let err = |reason: String| MetricsError::Corpus { line, reason };
        let (reading, count) = raw
            .split_once('\t')
            .ok_or_else(|| err("expected reading<TAB>count".into()))?;
        let count: u64 = count
            .parse()
            .ok()
            .filter(|&c| c > 0)
            .ok_or_else(|| err(format!("count {count:?} is not a positive integer")))?;
        if reading.is_empty() {
            return Err(err("empty reading".into()));
        }
        out.push(CorpusRecord::new(reading, count));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalReport {
    pub method: &'static str,
    pub total_presses: u64,
    pub total_kana: u64,
    /// Occurrences per 1-based rank among the exact matches.
    pub rank_histogram: BTreeMap<usize, u64>,
    /// Occurrences of corpus readings missing from the lexicon.
    pub no_match_count: u64,
    pub no_match: Vec<String>,
}

impl EvalReport {
    fn new(method: &'static str) -> EvalReport {
        EvalReport {
            method,
            total_presses: 0,
            total_kana: 0,
            rank_histogram: BTreeMap::new(),
            no_match_count: 0,
            no_match: Vec::new(),
        }
    }

    /// Presses per kana; absent when no kana were entered.
    pub fn kspc(&self) -> Option<Kspc> {
        (self.total_kana > 0).then(|| Ratio::new(self.total_presses, self.total_kana))
    }
}

/// Select presses needed to commit the candidate at `rank`: none for the top
/// candidate (commit auto-selects it), otherwise one per step from the first
/// select.
pub fn select_presses(rank: usize) -> usize {
    if rank <= 1 {
        0
    } else {
        rank
    }
}

/// Disambiguation presses for one occurrence of a word of `kana` kana at `rank`.
pub fn disambiguation_presses(kana: usize, rank: usize) -> usize {
    kana + select_presses(rank) + 1
}

pub fn eval_disambiguation(trie: &KeyTrie, layout: &KeypadLayout, corpus: &[CorpusRecord]) -> EvalReport {
    let mut report = EvalReport::new("disambiguation");
    for rec in corpus {
        let rank = layout.encode_reading(&rec.reading).ok().and_then(|seq| {
            trie.exact_ids(&seq)
                .iter()
                .position(|&id| trie.entry(id).reading == rec.reading)
                .map(|p| p + 1)
        });
        let Some(rank) = rank else {
            report.no_match_count += rec.count;
            report.no_match.push(rec.reading.clone());
            continue;
        };
        let kana = rec.reading.chars().count();
        report.total_presses += rec.count * disambiguation_presses(kana, rank) as u64;
        report.total_kana += rec.count * kana as u64;
        *report.rank_histogram.entry(rank).or_default() += rec.count;
    }
    report
}

pub fn eval_multitap(layout: &KeypadLayout, corpus: &[CorpusRecord]) -> Result<EvalReport, MetricsError> {
    let mut report = EvalReport::new("multitap");
    for rec in corpus {
        let cost = layout
            .multitap_cost(&rec.reading)
            .map_err(|source| MetricsError::Layout {
                reading: rec.reading.clone(),
                source,
            })?;
        let kana = rec.reading.chars().count();
        report.total_presses += rec.count * (cost + kana) as u64;
        report.total_kana += rec.count * kana as u64;
    }
    Ok(report)
}

/// Romaji letter count, for reference only: no IME behavior is simulated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RomajiReference {
    pub total_letters: u64,
    pub total_kana: u64,
}

impl RomajiReference {
    pub fn kspc(&self) -> Option<Kspc> {
        (self.total_kana > 0).then(|| Ratio::new(self.total_letters, self.total_kana))
    }
}

pub fn romaji_reference(table: &SyllabaryTable, corpus: &[CorpusRecord]) -> Result<RomajiReference, MetricsError> {
    let mut out = RomajiReference {
        total_letters: 0,
        total_kana: 0,
    };
    for rec in corpus {
        let romaji = table
            .kana_to_romaji(&rec.reading)
            .map_err(|source| MetricsError::Syllabary {
                reading: rec.reading.clone(),
                source,
            })?;
        out.total_letters += rec.count * romaji.len() as u64;
        out.total_kana += rec.count * rec.reading.chars().count() as u64;
    }
    Ok(out)
}

/// How many lexicon entries share their key sequence with others.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmbiguityReport {
    pub populated_sequences: usize,
    pub entries: usize,
    pub max_class: usize,
    pub mean_class: Option<Kspc>,
    pub ambiguous_entries: usize,
}

impl AmbiguityReport {
    /// Fraction of entries whose sequence is shared with at least one other.
    pub fn fraction_ambiguous(&self) -> Option<Ratio<u64>> {
        (self.entries > 0).then(|| Ratio::new(self.ambiguous_entries as u64, self.entries as u64))
    }
}

pub fn ambiguity_stats(trie: &KeyTrie) -> AmbiguityReport {
    let classes = trie.collision_classes();
    let entries: usize = classes.iter().sum();
    AmbiguityReport {
        populated_sequences: classes.len(),
        entries,
        max_class: classes.iter().copied().max().unwrap_or(0),
        mean_class: (!classes.is_empty()).then(|| Ratio::new(entries as u64, classes.len() as u64)),
        ambiguous_entries: classes.iter().filter(|&&c| c > 1).sum(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Comparison {
    pub corpus_words: usize,
    pub corpus_tokens: u64,
    pub disambiguation: EvalReport,
    pub multitap: EvalReport,
    pub romaji: RomajiReference,
    pub ambiguity: AmbiguityReport,
}

/// Evaluates both entry methods and the romaji reference on one corpus.
pub fn compare_methods(
    trie: &KeyTrie,
    layout: &KeypadLayout,
    table: &SyllabaryTable,
    corpus: &[CorpusRecord],
) -> Result<Comparison, MetricsError> {
    Ok(Comparison {
        corpus_words: corpus.len(),
        corpus_tokens: corpus.iter().map(|r| r.count).sum(),
        disambiguation: eval_disambiguation(trie, layout, corpus),
        multitap: eval_multitap(layout, corpus)?,
        romaji: romaji_reference(table, corpus)?,
        ambiguity: ambiguity_stats(trie),
    })
}

fn ratio_text(r: Option<Ratio<u64>>) -> String {
    match r {
        Some(r) => format!(
            "{}/{} ({:.6})",
            r.numer(),
            r.denom(),
            *r.numer() as f64 / *r.denom() as f64
        ),
        None => "-".into(),
    }
}

fn list_text(items: &[String]) -> String {
    if items.is_empty() {
        "-".into()
    } else {
        items.join(",")
    }
}

/// Renders a comparison as `key: value` lines followed by a tab-separated
/// rank histogram. The layout of the text is stable.
pub fn render_comparison(c: &Comparison) -> String {
    let mut out = String::new();
    let mut line = |k: &str, v: String| writeln!(out, "{k}: {v}").expect("write to string");
    line("corpus_words", c.corpus_words.to_string());
    line("corpus_tokens", c.corpus_tokens.to_string());
    for r in [&c.disambiguation, &c.multitap] {
        let m = r.method;
        line(&format!("{m}.total_presses"), r.total_presses.to_string());
        line(&format!("{m}.total_kana"), r.total_kana.to_string());
        line(&format!("{m}.kspc"), ratio_text(r.kspc()));
        line(&format!("{m}.no_match_count"), r.no_match_count.to_string());
        line(&format!("{m}.no_match"), list_text(&r.no_match));
    }
    line("romaji_reference.total_letters", c.romaji.total_letters.to_string());
    line("romaji_reference.total_kana", c.romaji.total_kana.to_string());
    line("romaji_reference.kspc", ratio_text(c.romaji.kspc()));
    let a = &c.ambiguity;
    line("ambiguity.populated_sequences", a.populated_sequences.to_string());
    line("ambiguity.entries", a.entries.to_string());
    line("ambiguity.max_class", a.max_class.to_string());
    line("ambiguity.mean_class", ratio_text(a.mean_class));
    line("ambiguity.fraction_ambiguous", ratio_text(a.fraction_ambiguous()));
    out.push_str("rank_histogram\nrank\tcount\n");
    for (rank, count) in &c.disambiguation.rank_histogram {
        writeln!(out, "{rank}\t{count}").expect("write to string");
    }
    out
}
