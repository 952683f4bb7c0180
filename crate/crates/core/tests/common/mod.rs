#![allow(dead_code)]

use std::cmp::Reverse;

use kanapad_core::{Digit, KeypadLayout, Lexicon, SyllabaryTable, YomikataEntry};
use proptest::prelude::*;

pub const FIXTURE: &str = include_str!("../../testdata/fixture.dict");

pub fn table() -> &'static SyllabaryTable {
    SyllabaryTable::packaged()
}

pub fn layout() -> KeypadLayout {
    KeypadLayout::packaged(table())
}

pub fn fixture() -> Lexicon {
    Lexicon::parse(FIXTURE, table()).unwrap()
}

/// Every single-scalar kana of the syllabary.
pub fn scalars() -> Vec<char> {
    table()
        .records()
        .iter()
        .filter(|r| r.is_monograph())
        .map(|r| r.character.chars().next().unwrap())
        .collect()
}

/// Key of a kana found by scanning the layout's cycles for its base, without
/// going through the layout's own lookup table.
pub fn oracle_key(layout: &KeypadLayout, kana: char) -> Digit {
    let base = table().base_of(&kana.to_string()).unwrap().chars().next().unwrap();
    Digit::LABEL_ORDER
        .into_iter()
        .find(|&d| layout.cycle(d).contains(&base))
        .expect("every base kana is on a key")
}

pub fn oracle_encode(layout: &KeypadLayout, reading: &str) -> Vec<Digit> {
    reading.chars().map(|c| oracle_key(layout, c)).collect()
}

fn ranked(mut found: Vec<YomikataEntry>) -> Vec<YomikataEntry> {
    found.sort_by(|a, b| (Reverse(a.frequency), &a.reading).cmp(&(Reverse(b.frequency), &b.reading)));
    found
}

/// Brute-force scan for entries whose encoding equals `seq`.
pub fn oracle_exact(encoded: &[(Vec<Digit>, YomikataEntry)], seq: &[Digit]) -> Vec<YomikataEntry> {
    if seq.is_empty() {
        return Vec::new();
    }
    ranked(
        encoded
            .iter()
            .filter(|(enc, _)| enc.as_slice() == seq)
            .map(|(_, e)| e.clone())
            .collect(),
    )
}

/// Brute-force scan for entries whose encoding strictly extends `seq`.
pub fn oracle_prefix(encoded: &[(Vec<Digit>, YomikataEntry)], seq: &[Digit], limit: usize) -> Vec<YomikataEntry> {
    let mut found = ranked(
        encoded
            .iter()
            .filter(|(enc, _)| enc.len() > seq.len() && enc.starts_with(seq))
            .map(|(_, e)| e.clone())
            .collect(),
    );
    found.truncate(limit);
    found
}

pub fn encode_all(layout: &KeypadLayout, lexicon: &Lexicon) -> Vec<(Vec<Digit>, YomikataEntry)> {
    lexicon
        .entries()
        .iter()
        .map(|e| (oracle_encode(layout, &e.reading), e.clone()))
        .collect()
}

/// Every digit sequence of length `0..=max_len`.
pub fn all_sequences(max_len: usize) -> Vec<Vec<Digit>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for d in Digit::LABEL_ORDER {
                let mut t: Vec<Digit> = s.clone();
                t.push(d);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Random lexicons of up to `max_entries` readings, 1-6 kana each. Narrow
/// frequency ranges are mixed in so rank ties occur.
pub fn lexicon_strategy(max_entries: usize) -> impl Strategy<Value = Lexicon> {
    let pool = scalars();
    let entry = (
        prop::collection::vec(any::<prop::sample::Index>(), 1..=6),
        prop_oneof![0u64..10, 0u64..100_000],
        prop::collection::vec(("[a-z]{1,4}", 0u64..100), 0..3),
    );
    prop::collection::vec(entry, 1..=max_entries).prop_map(move |raw| {
        Lexicon::from_entries(raw.into_iter().map(|(idx, freq, forms)| {
            let reading: String = idx.iter().map(|i| pool[i.index(pool.len())]).collect();
            forms
                .into_iter()
                .fold(YomikataEntry::new(reading, freq), |e, (s, w)| e.with_form(s, w))
        }))
    })
}
