//! Reading dictionary and its key-sequence index.
//!
//! Every reading (Yomikata) is encoded to the digits of the keys carrying its
//! kana and stored in a trie over those digits. Readings that share a key
//! sequence share a trie node and are ranked there by frequency.

use std::cmp::Reverse;
use std::collections::BTreeMap;

use thiserror::Error;

use crate::layout::{Digit, KeySequence, KeypadLayout};
use crate::syllabary::SyllabaryTable;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LexiconError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("line {line}: reading {reading:?} contains {character:?}, which is not a syllabary kana")]
    Validation {
        line: usize,
        reading: String,
        character: char,
    },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IndexError {
    #[error("reading {reading:?} cannot be encoded on this layout")]
    Unencodable { reading: String },
    #[error("not a compiled index (bad magic)")]
    BadMagic,
    #[error("unsupported index version {0}")]
    UnsupportedVersion(u8),
    #[error("index data is truncated")]
    Truncated,
    #[error("index data is corrupt: {0}")]
    Corrupt(String),
}

/// A written form of a reading.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Midashigo {
    pub surface: String,
    pub weight: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct YomikataEntry {
    pub reading: String,
    pub frequency: u64,
    /// Written forms, heaviest first.
    pub forms: Vec<Midashigo>,
}

impl YomikataEntry {
    pub fn new(reading: impl Into<String>, frequency: u64) -> YomikataEntry {
        YomikataEntry {
            reading: reading.into(),
            frequency,
            forms: Vec::new(),
        }
    }

    pub fn with_form(mut self, surface: impl Into<String>, weight: u64) -> YomikataEntry {
        self.forms.push(Midashigo {
            surface: surface.into(),
            weight,
        });
        self.forms.sort_by_key(|f| Reverse(f.weight));
        self
    }

    /// Number of kana scalars in the reading.
    pub fn kana_len(&self) -> usize {
        self.reading.chars().count()
    }

    /// Candidate order: frequency descending, then reading ascending.
    pub fn rank_key(&self) -> (Reverse<u64>, &str) {
        (Reverse(self.frequency), &self.reading)
    }
}

/// Entries unique by reading, sorted by reading.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    entries: Vec<YomikataEntry>,
}

/// Parses dictionary text: `reading<TAB>frequency[<TAB>form:weight,...]`.
pub fn parse_lexicon(source: &str, table: &SyllabaryTable) -> Result<Lexicon, LexiconError> {
    Lexicon::parse(source, table)
}

impl Lexicon {
    pub fn parse(source: &str, table: &SyllabaryTable) -> Result<Lexicon, LexiconError> {
        let mut entries = Vec::new();
        for (idx, raw) in source.lines().enumerate() {
            let line = idx + 1;
            if raw.is_empty() || raw.starts_with('#') {
                continue;
            }
            entries.push(parse_entry(line, raw, table)?);
        }
        Ok(Lexicon::from_entries(entries))
    }

    /// Builds a lexicon, merging entries that share a reading: frequencies
    /// are summed and form lists concatenated, then re-sorted by weight.
    pub fn from_entries(entries: impl IntoIterator<Item = YomikataEntry>) -> Lexicon {
        let mut merged: BTreeMap<String, YomikataEntry> = BTreeMap::new();
        for entry in entries {
            match merged.get_mut(&entry.reading) {
                Some(existing) => {
                    existing.frequency = existing.frequency.saturating_add(entry.frequency);
                    existing.forms.extend(entry.forms);
                }
                None => {
                    merged.insert(entry.reading.clone(), entry);
                }
            }
        }
        let entries = merged
            .into_values()
            .map(|mut e| {
                e.forms.sort_by_key(|f| Reverse(f.weight));
                e
            })
            .collect();
        Lexicon { entries }
    }

    pub fn entries(&self) -> &[YomikataEntry] {
        &self.entries
    }

    pub fn get(&self, reading: &str) -> Option<&YomikataEntry> {
        self.entries
            .binary_search_by(|e| e.reading.as_str().cmp(reading))
            .ok()
            .map(|i| &self.entries[i])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn parse_entry(line: usize, raw: &str, table: &SyllabaryTable) -> Result<YomikataEntry, LexiconError> {
    let err = |reason: String| LexiconError::Parse { line, reason };
    let fields: Vec<&str> = raw.split('\t').collect();
    let (reading, frequency, forms) = match fields[..] {
        [r, f] => (r, f, None),
        [r, f, forms] => (r, f, Some(forms)),
        _ => return Err(err(format!("expected 2 or 3 fields, found {}", fields.len()))),
    };
    if reading.is_empty() {
        return Err(err("empty reading".into()));
    }
    if let Some(character) = reading.chars().find(|&c| !table.contains_scalar(c)) {
        return Err(LexiconError::Validation {
            line,
            reading: reading.to_string(),
            character,
        });
    }
    let frequency: u64 = frequency
        .parse()
        .map_err(|_| err(format!("frequency {frequency:?} is not a non-negative integer")))?;
    let mut entry = YomikataEntry::new(reading, frequency);
    for form in forms.into_iter().flat_map(|f| f.split(',')).filter(|f| !f.is_empty()) {
        let (surface, weight) = form
            .rsplit_once(':')
            .ok_or_else(|| err(format!("form {form:?} is not surface:weight")))?;
        if surface.is_empty() {
            return Err(err("empty form surface".into()));
        }
        let weight: u64 = weight
            .parse()
            .map_err(|_| err(format!("form weight {weight:?} is not a non-negative integer")))?;
        entry.forms.push(Midashigo {
            surface: surface.to_string(),
            weight,
        });
    }
    Ok(entry)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct TrieNode {
    children: [Option<u32>; 10],
    /// Entries whose whole reading encodes to this node's path, in rank order.
    entries: Vec<u32>,
}

/// Digit-sequence trie over a lexicon, tied to the layout it was built with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyTrie {
    nodes: Vec<TrieNode>,
    entries: Vec<YomikataEntry>,
    layout_fingerprint: u64,
    layout_source: String,
}

/// Indexes every reading of `lexicon` under its key sequence on `layout`.
pub fn build_index(lexicon: &Lexicon, layout: &KeypadLayout) -> Result<KeyTrie, IndexError> {
    KeyTrie::build(lexicon, layout)
}

impl KeyTrie {
    pub fn build(lexicon: &Lexicon, layout: &KeypadLayout) -> Result<KeyTrie, IndexError> {
        let mut trie = KeyTrie {
            nodes: vec![TrieNode::default()],
            entries: Vec::with_capacity(lexicon.len()),
            layout_fingerprint: layout.fingerprint(),
            layout_source: layout.source().to_string(),
        };
        for entry in lexicon.entries() {
            let seq = match layout.encode_reading(&entry.reading) {
                Ok(seq) if !seq.is_empty() => seq,
                _ => {
                    return Err(IndexError::Unencodable {
                        reading: entry.reading.clone(),
                    })
                }
            };
            let id = trie.entries.len() as u32;
            trie.entries.push(entry.clone());
            let node = trie.descend_or_insert(&seq);
            trie.nodes[node].entries.push(id);
        }
        let entries = &trie.entries;
        for node in &mut trie.nodes {
            node.entries
                .sort_by(|&a, &b| entries[a as usize].rank_key().cmp(&entries[b as usize].rank_key()));
        }
        Ok(trie)
    }

    fn descend_or_insert(&mut self, seq: &[Digit]) -> usize {
        let mut node = 0;
        for d in seq {
            let slot = d.value() as usize;
            node = match self.nodes[node].children[slot] {
                Some(child) => child as usize,
                None => {
                    let child = self.nodes.len();
                    self.nodes.push(TrieNode::default());
                    self.nodes[node].children[slot] = Some(child as u32);
                    child
                }
            };
        }
        node
    }

    fn find(&self, seq: &[Digit]) -> Option<usize> {
        seq.iter().try_fold(0usize, |node, d| {
            self.nodes[node].children[d.value() as usize].map(|c| c as usize)
        })
    }

    pub fn layout_fingerprint(&self) -> u64 {
        self.layout_fingerprint
    }

    /// Text of the layout the index was built with.
    pub fn layout_source(&self) -> &str {
        &self.layout_source
    }

    /// All indexed entries; ids returned by the `*_ids` queries index into this.
    pub fn entries(&self) -> &[YomikataEntry] {
        &self.entries
    }

    pub fn entry(&self, id: u32) -> &YomikataEntry {
        &self.entries[id as usize]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Ids of the entries whose reading encodes exactly to `seq`, ranked.
    pub fn exact_ids(&self, seq: &[Digit]) -> &[u32] {
        if seq.is_empty() {
            return &[];
        }
        self.find(seq).map_or(&[][..], |n| self.nodes[n].entries.as_slice())
    }

    /// Ids of the entries whose encoding strictly extends `seq`, ranked and
    /// truncated to `limit`.
    ///
    /// # Panics
    ///
    /// Panics if `limit` is zero.
    pub fn prediction_ids(&self, seq: &[Digit], limit: usize) -> Vec<u32> {
        assert!(limit > 0, "prediction limit must be positive");
        let Some(start) = self.find(seq) else {
            return Vec::new();
        };
        let mut found = Vec::new();
        let mut stack: Vec<usize> = self.nodes[start]
            .children
            .iter()
            .flatten()
            .map(|&c| c as usize)
            .collect();
        while let Some(n) = stack.pop() {
            found.extend_from_slice(&self.nodes[n].entries);
            stack.extend(self.nodes[n].children.iter().flatten().map(|&c| c as usize));
        }
        found.sort_by(|&a, &b| self.entry(a).rank_key().cmp(&self.entry(b).rank_key()));
        found.truncate(limit);
        found
    }

    pub fn exact_matches(&self, seq: &[Digit]) -> Vec<&YomikataEntry> {
        self.exact_ids(seq).iter().map(|&id| self.entry(id)).collect()
    }

    pub fn prefix_predictions(&self, seq: &[Digit], limit: usize) -> Vec<&YomikataEntry> {
        self.prediction_ids(seq, limit)
            .into_iter()
            .map(|id| self.entry(id))
            .collect()
    }

    /// Sizes of the candidate lists at every populated node, in preorder.
    pub fn collision_classes(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            if !self.nodes[n].entries.is_empty() {
                out.push(self.nodes[n].entries.len());
            }
            stack.extend(self.nodes[n].children.iter().rev().flatten().map(|&c| c as usize));
        }
        out
    }

    /// Key sequence of every populated node with its ranked entries.
    pub fn populated_nodes(&self) -> Vec<(KeySequence, Vec<&YomikataEntry>)> {
        let mut out = Vec::new();
        let mut stack = vec![(0usize, KeySequence::new())];
        while let Some((n, path)) = stack.pop() {
            let node = &self.nodes[n];
            if !node.entries.is_empty() {
                out.push((path.clone(), node.entries.iter().map(|&id| self.entry(id)).collect()));
            }
            for (slot, child) in node.children.iter().enumerate().rev() {
                if let Some(c) = child {
                    let mut p = path.clone();
                    p.push(Digit::new(slot as u8).expect("slot < 10"));
                    stack.push((*c as usize, p));
                }
            }
        }
        out
    }
}

// Binary index format, little-endian:
//   "KTRI" | version u8 | layout fingerprint u64 | layout text (u32 len + bytes)
//   | node count u32 | nodes in preorder
// node: label u8 (0xFF for the root) | candidate count u32 | candidates | child count u8
// candidate: reading (u32 len + bytes) | frequency u64 | form count u32
//   | forms (surface u32 len + bytes, weight u64)

pub const INDEX_MAGIC: [u8; 4] = *b"KTRI";
pub const INDEX_VERSION: u8 = 1;
const ROOT_LABEL: u8 = 0xFF;

/// Serializes a trie to the compiled index format.
pub fn serialize_index(trie: &KeyTrie) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&INDEX_MAGIC);
    out.push(INDEX_VERSION);
    out.extend_from_slice(&trie.layout_fingerprint.to_le_bytes());
    put_str(&mut out, &trie.layout_source);
    out.extend_from_slice(&(trie.nodes.len() as u32).to_le_bytes());
    write_node(trie, 0, ROOT_LABEL, &mut out);
    out
}

fn write_node(trie: &KeyTrie, n: usize, label: u8, out: &mut Vec<u8>) {
    let node = &trie.nodes[n];
    out.push(label);
    out.extend_from_slice(&(node.entries.len() as u32).to_le_bytes());
    for &id in &node.entries {
        let e = trie.entry(id);
        put_str(out, &e.reading);
        out.extend_from_slice(&e.frequency.to_le_bytes());
        out.extend_from_slice(&(e.forms.len() as u32).to_le_bytes());
        for f in &e.forms {
            put_str(out, &f.surface);
            out.extend_from_slice(&f.weight.to_le_bytes());
        }
    }
    let children: Vec<(u8, usize)> = node
        .children
        .iter()
        .enumerate()
        .filter_map(|(d, c)| c.map(|c| (d as u8, c as usize)))
        .collect();
    out.push(children.len() as u8);
    for (digit, child) in children {
        write_node(trie, child, digit, out);
    }
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

/// Loads a trie from bytes produced by [`serialize_index`].
pub fn deserialize_index(bytes: &[u8]) -> Result<KeyTrie, IndexError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4).map_err(|_| IndexError::BadMagic)? != INDEX_MAGIC {
        return Err(IndexError::BadMagic);
    }
    let version = r.u8()?;
    if version != INDEX_VERSION {
        return Err(IndexError::UnsupportedVersion(version));
    }
    let layout_fingerprint = r.u64()?;
    let layout_source = r.string()?;
    let declared = r.u32()? as usize;
    let mut trie = KeyTrie {
        nodes: Vec::new(),
        entries: Vec::new(),
        layout_fingerprint,
        layout_source,
    };
    let label = read_node(&mut r, &mut trie, 0)?;
    if label != ROOT_LABEL {
        return Err(IndexError::Corrupt(format!("root label {label:#x}")));
    }
    if trie.nodes.len() != declared {
        return Err(IndexError::Corrupt(format!(
            "declared {declared} nodes, found {}",
            trie.nodes.len()
        )));
    }
    if r.pos != bytes.len() {
        return Err(IndexError::Corrupt(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok(trie)
}

const MAX_DEPTH: usize = 1024;

/// Reads one node and its subtree; returns the node's label.
fn read_node(r: &mut Reader<'_>, trie: &mut KeyTrie, depth: usize) -> Result<u8, IndexError> {
    if depth > MAX_DEPTH {
        return Err(IndexError::Corrupt("trie too deep".into()));
    }
    let label = r.u8()?;
    let index = trie.nodes.len();
    trie.nodes.push(TrieNode::default());
    let count = r.u32()?;
    for _ in 0..count {
        let reading = r.string()?;
        let frequency = r.u64()?;
        let form_count = r.u32()?;
        let mut forms = Vec::new();
        for _ in 0..form_count {
            let surface = r.string()?;
            let weight = r.u64()?;
            forms.push(Midashigo { surface, weight });
        }
        let id = trie.entries.len() as u32;
        trie.entries.push(YomikataEntry {
            reading,
            frequency,
            forms,
        });
        trie.nodes[index].entries.push(id);
    }
    let ranked = trie.nodes[index]
        .entries
        .windows(2)
        .all(|w| trie.entry(w[0]).rank_key() < trie.entry(w[1]).rank_key());
    if !ranked {
        return Err(IndexError::Corrupt("candidate list out of order".into()));
    }
    let child_count = r.u8()?;
    let mut previous: Option<u8> = None;
    for _ in 0..child_count {
        let child = trie.nodes.len();
        let digit = read_node(r, trie, depth + 1)?;
        if digit > 9 || previous.is_some_and(|p| p >= digit) {
            return Err(IndexError::Corrupt(format!("bad child label {digit:#x}")));
        }
        previous = Some(digit);
        trie.nodes[index].children[digit as usize] = Some(child as u32);
    }
    Ok(label)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], IndexError> {
        let end = self.pos.checked_add(n).ok_or(IndexError::Truncated)?;
        let slice = self.bytes.get(self.pos..end).ok_or(IndexError::Truncated)?;
        self.pos = end;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8, IndexError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, IndexError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, IndexError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn string(&mut self) -> Result<String, IndexError> {
        let len = self.u32()? as usize;
        let raw = self.take(len)?;
        String::from_utf8(raw.to_vec()).map_err(|_| IndexError::Corrupt("invalid UTF-8".into()))
    }
}
