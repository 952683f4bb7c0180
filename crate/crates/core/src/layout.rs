//! Twelve-key keypad: which kana sit on which key, the order multi-tap walks
//! them in, and the modifier and symbol keys.

use std::collections::HashMap;
use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::syllabary::{DiacriticClass, SyllabaryTable};

const PACKAGED_SOURCE: &str = include_str!("../data/default_layout.tsv");

/// Minimum number of base kana on every digit key.
pub const MIN_KANA_PER_KEY: usize = 3;

const DEFAULT_SYMBOLS: &str = "、。?!・ ";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LayoutError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("line {line}: {kana:?} is not a base kana of the syllabary")]
    NotBaseKana { line: usize, kana: char },
    #[error("{kana:?} is assigned to key {first} and key {second}")]
    Conflict { kana: char, first: Digit, second: Digit },
    #[error("no key reaches {}", missing.join(","))]
    Coverage { missing: Vec<String> },
    #[error("key {key} carries {count} kana, at least {MIN_KANA_PER_KEY} required")]
    TooFewKana { key: Digit, count: usize },
    #[error("unknown kana {kana:?} at position {position}")]
    UnknownKana { kana: String, position: usize },
}

/// One of the ten character keys that carry kana.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Digit(u8);

impl Digit {
    /// Digits in keypad label order, 1 through 9 then 0.
    pub const LABEL_ORDER: [Digit; 10] = [
        Digit(1),
        Digit(2),
        Digit(3),
        Digit(4),
        Digit(5),
        Digit(6),
        Digit(7),
        Digit(8),
        Digit(9),
        Digit(0),
    ];

    pub fn new(value: u8) -> Option<Digit> {
        (value < 10).then_some(Digit(value))
    }

    pub fn from_char(c: char) -> Option<Digit> {
        c.to_digit(10).map(|v| Digit(v as u8))
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn as_char(self) -> char {
        (b'0' + self.0) as char
    }
}

impl fmt::Display for Digit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Physical and logical keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KeyId {
    Digit(Digit),
    Star,
    Hash,
    Select,
    Convert,
    Commit,
    Backspace,
    Advance,
    Mode,
}

/// The twelve character keys, three columns by four rows.
pub const GRID: [[char; 3]; 4] = [['1', '2', '3'], ['4', '5', '6'], ['7', '8', '9'], ['*', '0', '#']];

impl KeyId {
    /// Parses a grid key label (`0`-`9`, `*`, `#`).
    pub fn from_label(label: char) -> Option<KeyId> {
        match label {
            '*' => Some(KeyId::Star),
            '#' => Some(KeyId::Hash),
            c => Digit::from_char(c).map(KeyId::Digit),
        }
    }

    pub fn label(self) -> String {
        match self {
            KeyId::Digit(d) => d.to_string(),
            KeyId::Star => "*".into(),
            KeyId::Hash => "#".into(),
            KeyId::Select => "SELECT".into(),
            KeyId::Convert => "CONVERT".into(),
            KeyId::Commit => "COMMIT".into(),
            KeyId::Backspace => "BACKSPACE".into(),
            KeyId::Advance => "ADVANCE".into(),
            KeyId::Mode => "MODE".into(),
        }
    }

    /// `(row, col)` on the 3x4 grid; logical keys have no position.
    pub fn grid_position(self) -> Option<(usize, usize)> {
        let label = match self {
            KeyId::Digit(d) => d.as_char(),
            KeyId::Star => '*',
            KeyId::Hash => '#',
            _ => return None,
        };
        GRID.iter()
            .enumerate()
            .find_map(|(r, row)| row.iter().position(|&c| c == label).map(|c| (r, c)))
    }
}

impl fmt::Display for KeyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Digit keys pressed in disambiguation mode, one per kana.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KeySequence(Vec<Digit>);

impl KeySequence {
    pub fn new() -> KeySequence {
        KeySequence(Vec::new())
    }

    pub fn push(&mut self, digit: Digit) {
        self.0.push(digit);
    }

    pub fn pop(&mut self) -> Option<Digit> {
        self.0.pop()
    }

    pub fn clear(&mut self) {
        self.0.clear();
    }
}

impl Deref for KeySequence {
    type Target = [Digit];

    fn deref(&self) -> &[Digit] {
        &self.0
    }
}

impl From<Vec<Digit>> for KeySequence {
    fn from(digits: Vec<Digit>) -> Self {
        KeySequence(digits)
    }
}

impl FromIterator<Digit> for KeySequence {
    fn from_iter<I: IntoIterator<Item = Digit>>(iter: I) -> Self {
        KeySequence(iter.into_iter().collect())
    }
}

impl FromStr for KeySequence {
    type Err = char;

    /// Parses a run of digit labels such as `"136"`; the error is the first
    /// non-digit character.
    fn from_str(s: &str) -> Result<Self, char> {
        s.chars().map(|c| Digit::from_char(c).ok_or(c)).collect()
    }
}

impl fmt::Display for KeySequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|d| write!(f, "{d}"))
    }
}

#[derive(Debug, Clone)]
pub struct KeypadLayout {
    cycles: [Vec<char>; 10],
    kana_to_key: HashMap<char, Digit>,
    /// Forms reachable from each base kana with the modifier, in modifier order.
    modifier_forms: HashMap<char, Vec<char>>,
    expansions: HashMap<String, Vec<KeyId>>,
    modifier: KeyId,
    symbols: Vec<char>,
    fingerprint: u64,
    source: String,
}

/// Parses a layout file against the syllabary; `None` selects the packaged
/// default layout.
pub fn load_layout(config: Option<&str>, table: &SyllabaryTable) -> Result<KeypadLayout, LayoutError> {
    KeypadLayout::parse(config.unwrap_or(PACKAGED_SOURCE), table)
}

impl KeypadLayout {
    pub fn packaged(table: &SyllabaryTable) -> KeypadLayout {
        KeypadLayout::parse(PACKAGED_SOURCE, table).expect("packaged layout is valid")
    }

    pub fn packaged_source() -> &'static str {
        PACKAGED_SOURCE
    }

    pub fn parse(source: &str, table: &SyllabaryTable) -> Result<KeypadLayout, LayoutError> {
        let mut cycles: [Vec<char>; 10] = Default::default();
        let mut seen_keys = [false; 10];
        let mut modifier = KeyId::Star;
        let mut symbols: Option<Vec<char>> = None;
        let mut kana_to_key: HashMap<char, Digit> = HashMap::new();

        for (idx, raw) in source.lines().enumerate() {
            let line = idx + 1;
            if raw.is_empty() || raw.starts_with('#') {
                continue;
            }
            let err = |reason: String| LayoutError::Parse { line, reason };
            let (key, value) = raw
                .split_once('\t')
                .ok_or_else(|| err("expected key<TAB>value".into()))?;
            match key {
                "symbols" => {
                    if symbols.is_some() {
                        return Err(err("symbols defined twice".into()));
                    }
                    symbols = Some(value.chars().collect());
                }
                "modifier" => {
                    modifier = match value {
                        "*" => KeyId::Star,
                        "#" => KeyId::Hash,
                        other => return Err(err(format!("modifier must be * or #, got {other:?}"))),
                    };
                }
                _ => {
                    let digit = (key.len() == 1)
                        .then(|| key.chars().next().and_then(Digit::from_char))
                        .flatten()
                        .ok_or_else(|| err(format!("unknown key {key:?}")))?;
                    let slot = digit.value() as usize;
                    if std::mem::replace(&mut seen_keys[slot], true) {
                        return Err(err(format!("key {digit} defined twice")));
                    }
                    for kana in value.chars() {
                        let is_base = table.get_scalar(kana).is_some_and(|r| r.class == DiacriticClass::Base);
                        if !is_base {
                            return Err(LayoutError::NotBaseKana { line, kana });
                        }
                        if let Some(first) = kana_to_key.insert(kana, digit) {
                            return Err(LayoutError::Conflict {
                                kana,
                                first,
                                second: digit,
                            });
                        }
                        cycles[slot].push(kana);
                    }
                }
            }
        }

        let mut missing = Vec::new();
        let mut modifier_forms: HashMap<char, Vec<char>> = HashMap::new();
        for rec in table.records().iter().filter(|r| r.is_monograph()) {
            let kana = first_char(&rec.character);
            let base = first_char(&rec.base);
            match kana_to_key.get(&base) {
                Some(&digit) => {
                    kana_to_key.insert(kana, digit);
                }
                None => missing.push(rec.character.clone()),
            }
        }
        if !missing.is_empty() {
            return Err(LayoutError::Coverage { missing });
        }
        for digit in Digit::LABEL_ORDER {
            let count = cycles[digit.value() as usize].len();
            if count < MIN_KANA_PER_KEY {
                return Err(LayoutError::TooFewKana { key: digit, count });
            }
        }
        for &base in cycles.iter().flatten() {
            let mut buf = [0u8; 4];
            let forms = table
                .forms_of(base.encode_utf8(&mut buf))
                .expect("cycle kana are syllabary records");
            modifier_forms.insert(base, forms.into_iter().filter_map(|(_, s)| single_char(s)).collect());
        }

        let symbols = symbols.unwrap_or_else(|| DEFAULT_SYMBOLS.chars().collect());
        let mut layout = KeypadLayout {
            cycles,
            kana_to_key,
            modifier_forms,
            expansions: HashMap::new(),
            modifier,
            symbols,
            fingerprint: 0,
            source: source.to_string(),
        };
        for rec in table.records() {
            let presses = rec
                .character
                .chars()
                .flat_map(|c| layout.expand_scalar(c).expect("covered above"))
                .collect();
            layout.expansions.insert(rec.character.clone(), presses);
        }
        layout.fingerprint = layout.compute_fingerprint();
        Ok(layout)
    }

    /// Layout text this layout was parsed from.
    pub fn source(&self) -> &str {
        &self.source
    }

    /// Content hash over the canonical key assignment.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn cycle(&self, digit: Digit) -> &[char] {
        &self.cycles[digit.value() as usize]
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn modifier_key(&self) -> KeyId {
        self.modifier
    }

    /// The key that carries symbols: whichever of `*` and `#` is not the modifier.
    pub fn symbol_key(&self) -> KeyId {
        match self.modifier {
            KeyId::Hash => KeyId::Star,
            _ => KeyId::Hash,
        }
    }

    pub fn key_of(&self, kana: char) -> Option<Digit> {
        self.kana_to_key.get(&kana).copied()
    }

    /// Forms the modifier cycles through starting from `base`, `base` first.
    pub fn modifier_forms(&self, base: char) -> Option<&[char]> {
        self.modifier_forms.get(&base).map(Vec::as_slice)
    }

    /// Key digits for a reading, one per kana scalar.
    pub fn encode_reading(&self, reading: &str) -> Result<KeySequence, LayoutError> {
        reading
            .chars()
            .enumerate()
            .map(|(position, kana)| {
                self.key_of(kana).ok_or_else(|| LayoutError::UnknownKana {
                    kana: kana.to_string(),
                    position,
                })
            })
            .collect()
    }

    /// Multi-tap presses producing one syllable.
    pub fn multitap_expand(&self, kana: &str) -> Result<&[KeyId], LayoutError> {
        self.expansions
            .get(kana)
            .map(Vec::as_slice)
            .ok_or_else(|| LayoutError::UnknownKana {
                kana: kana.to_string(),
                position: 0,
            })
    }

    /// Total multi-tap presses for a reading, excluding letter advances.
    pub fn multitap_cost(&self, reading: &str) -> Result<usize, LayoutError> {
        reading.chars().enumerate().try_fold(0, |acc, (position, kana)| {
            self.expand_scalar(kana)
                .map(|p| acc + p.len())
                .ok_or_else(|| LayoutError::UnknownKana {
                    kana: kana.to_string(),
                    position,
                })
        })
    }

    fn expand_scalar(&self, kana: char) -> Option<Vec<KeyId>> {
        let digit = self.key_of(kana)?;
        let cycle = self.cycle(digit);
        let (base_pos, steps) = cycle.iter().enumerate().find_map(|(i, &base)| {
            self.modifier_forms[&base]
                .iter()
                .position(|&f| f == kana)
                .map(|steps| (i, steps))
        })?;
        let mut presses = vec![KeyId::Digit(digit); base_pos + 1];
        presses.extend(std::iter::repeat_n(self.modifier, steps));
        Some(presses)
    }

    fn compute_fingerprint(&self) -> u64 {
        let mut canonical = String::new();
        for digit in Digit::LABEL_ORDER {
            canonical.push_str(&format!("{digit}\t"));
            canonical.extend(self.cycle(digit));
            canonical.push('\n');
        }
        canonical.push_str(&format!("modifier\t{}\nsymbols\t", self.modifier));
        canonical.extend(&self.symbols);
        canonical.push('\n');
        let digest = Sha256::digest(canonical.as_bytes());
        u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
    }
}

fn first_char(s: &str) -> char {
    s.chars().next().expect("syllabary strings are non-empty")
}

fn single_char(s: &str) -> Option<char> {
    let mut it = s.chars();
    match (it.next(), it.next()) {
        (Some(c), None) => Some(c),
        _ => None,
    }
}
