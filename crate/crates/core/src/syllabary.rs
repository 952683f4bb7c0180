//! The hiragana syllabary: base syllables, the forms derived from them by a
//! diacritic mark or by size, the gojūon matrix they sit in, and romaji
//! transliteration.
//!
//! A syllable is one record of the table. Most syllables are a single kana
//! scalar; the palatalized ones (きゃ, ぴょ, ...) are two scalars, an i-row
//! kana followed by a small ゃ/ゅ/ょ. The table is loaded from a line-oriented
//! data file and is immutable afterwards.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use thiserror::Error;

/// Number of syllables in the table.
pub const SYLLABLE_COUNT: usize = 108;
/// Syllables not derived by a diacritic mark (base and small records).
pub const UNDERIVED_COUNT: usize = 71;
/// Syllables derived by dakuten or handakuten.
pub const DERIVED_COUNT: usize = 37;

const MAX_MATRIX_ROWS: u8 = 10;
const MAX_MATRIX_COLS: u8 = 10;

/// Characters exempt from the vowel / consonant+vowel romaji shape.
const NON_SYLLABIC: [&str; 2] = ["ん", "っ"];

const PACKAGED_SOURCE: &str = include_str!("../data/syllabary.tsv");

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SyllabaryError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("syllabary has {found} {what} records, expected {expected}")]
    Count {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: duplicate character {character:?}")]
    DuplicateCharacter { line: usize, character: String },
    #[error("line {line}: duplicate romaji {romaji:?}")]
    DuplicateRomaji { line: usize, romaji: String },
    #[error("line {line}: matrix cell ({row}, {col}) already holds a base syllable")]
    DuplicateCell { line: usize, row: u8, col: u8 },
    #[error("line {line}: matrix cell ({row}, {col}) is outside the {MAX_MATRIX_ROWS}x{MAX_MATRIX_COLS} matrix")]
    CellOutOfRange { line: usize, row: u8, col: u8 },
    #[error("line {line}: {character:?} has class {class} but base {base:?}")]
    InconsistentBase {
        line: usize,
        character: String,
        base: String,
        class: DiacriticClass,
    },
    #[error("line {line}: base {base:?} of {character:?} is not a base record")]
    BrokenBase {
        line: usize,
        character: String,
        base: String,
    },
    #[error("line {line}: {base:?} already has a {class} form")]
    DuplicateDerivation {
        line: usize,
        base: String,
        class: DiacriticClass,
    },
    #[error("line {line}: romaji {romaji:?} of {character:?} is not a vowel or consonants followed by a vowel")]
    RomajiShape {
        line: usize,
        character: String,
        romaji: String,
    },
    #[error("unknown kana {0:?}")]
    UnknownKana(String),
    #[error("{mark} does not apply to {kana:?}")]
    NotApplicable { kana: String, mark: DiacriticClass },
    #[error("cannot transliterate input at byte {offset}")]
    Untransliterable { offset: usize },
}

/// How a syllable relates to its underived form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DiacriticClass {
    Base,
    Dakuten,
    Handakuten,
    Small,
}

impl DiacriticClass {
    /// Order in which the modifier key walks a kana's forms.
    pub const MODIFIER_ORDER: [DiacriticClass; 4] = [
        DiacriticClass::Base,
        DiacriticClass::Dakuten,
        DiacriticClass::Handakuten,
        DiacriticClass::Small,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DiacriticClass::Base => "base",
            DiacriticClass::Dakuten => "dakuten",
            DiacriticClass::Handakuten => "handakuten",
            DiacriticClass::Small => "small",
        }
    }

    /// True for the two classes produced by adding a diacritic mark.
    pub fn is_diacritic(self) -> bool {
        matches!(self, DiacriticClass::Dakuten | DiacriticClass::Handakuten)
    }
}

impl fmt::Display for DiacriticClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DiacriticClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "base" => Ok(DiacriticClass::Base),
            "dakuten" => Ok(DiacriticClass::Dakuten),
            "handakuten" => Ok(DiacriticClass::Handakuten),
            "small" => Ok(DiacriticClass::Small),
            other => Err(format!("unknown class {other:?}")),
        }
    }
}

/// One syllable of the table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KanaRecord {
    /// Hiragana spelling; one scalar, or two for palatalized syllables.
    pub character: String,
    pub romaji: String,
    pub row: u8,
    pub col: u8,
    /// The underived syllable this one is formed from (itself for base records).
    pub base: String,
    pub class: DiacriticClass,
}

impl KanaRecord {
    /// True when the record is a single kana scalar.
    pub fn is_monograph(&self) -> bool {
        self.character.chars().count() == 1
    }

    /// ん and っ, the two syllables that are neither a vowel nor consonant+vowel.
    pub fn is_non_syllabic(&self) -> bool {
        NON_SYLLABIC.contains(&self.character.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct SyllabaryTable {
    records: Vec<KanaRecord>,
    by_character: HashMap<String, usize>,
    by_romaji: HashMap<String, usize>,
    derived: HashMap<(String, DiacriticClass), usize>,
    longest_romaji: usize,
}

/// Parses and validates syllabary data.
pub fn load_syllabary(source: &str) -> Result<SyllabaryTable, SyllabaryError> {
    SyllabaryTable::parse(source)
}

impl SyllabaryTable {
    /// The table shipped with the crate.
    pub fn packaged() -> &'static SyllabaryTable {
        static TABLE: OnceLock<SyllabaryTable> = OnceLock::new();
        TABLE.get_or_init(|| SyllabaryTable::parse(PACKAGED_SOURCE).expect("packaged syllabary is valid"))
    }

    /// Source text of the packaged table.
    pub fn packaged_source() -> &'static str {
        PACKAGED_SOURCE
    }

    pub fn parse(source: &str) -> Result<SyllabaryTable, SyllabaryError> {
        let mut parsed = Vec::new();
        for (idx, raw) in source.lines().enumerate() {
            let line = idx + 1;
            if raw.is_empty() || raw.starts_with('#') {
                continue;
            }
            parsed.push((line, parse_record(line, raw)?));
        }

        let mut by_character = HashMap::new();
        let mut by_romaji = HashMap::new();
        let mut cells = HashMap::new();
        for (i, (line, rec)) in parsed.iter().enumerate() {
            let line = *line;
            if by_character.insert(rec.character.clone(), i).is_some() {
                return Err(SyllabaryError::DuplicateCharacter {
                    line,
                    character: rec.character.clone(),
                });
            }
            if by_romaji.insert(rec.romaji.clone(), i).is_some() {
                return Err(SyllabaryError::DuplicateRomaji {
                    line,
                    romaji: rec.romaji.clone(),
                });
            }
            if rec.row >= MAX_MATRIX_ROWS || rec.col >= MAX_MATRIX_COLS {
                return Err(SyllabaryError::CellOutOfRange {
                    line,
                    row: rec.row,
                    col: rec.col,
                });
            }
            if (rec.class == DiacriticClass::Base) != (rec.base == rec.character) {
                return Err(SyllabaryError::InconsistentBase {
                    line,
                    character: rec.character.clone(),
                    base: rec.base.clone(),
                    class: rec.class,
                });
            }
            if rec.class == DiacriticClass::Base && cells.insert((rec.row, rec.col), i).is_some() {
                return Err(SyllabaryError::DuplicateCell {
                    line,
                    row: rec.row,
                    col: rec.col,
                });
            }
            if !rec.is_non_syllabic() && !is_syllabic_romaji(&rec.romaji) {
                return Err(SyllabaryError::RomajiShape {
                    line,
                    character: rec.character.clone(),
                    romaji: rec.romaji.clone(),
                });
            }
        }

        let mut derived = HashMap::new();
        for (i, (line, rec)) in parsed.iter().enumerate() {
            if rec.class == DiacriticClass::Base {
                continue;
            }
            let base_ok = by_character
                .get(&rec.base)
                .is_some_and(|&b| parsed[b].1.class == DiacriticClass::Base);
            if !base_ok {
                return Err(SyllabaryError::BrokenBase {
                    line: *line,
                    character: rec.character.clone(),
                    base: rec.base.clone(),
                });
            }
            if derived.insert((rec.base.clone(), rec.class), i).is_some() {
                return Err(SyllabaryError::DuplicateDerivation {
                    line: *line,
                    base: rec.base.clone(),
                    class: rec.class,
                });
            }
        }

        let records: Vec<KanaRecord> = parsed.into_iter().map(|(_, r)| r).collect();
        let diacritic = records.iter().filter(|r| r.class.is_diacritic()).count();
        let checks = [
            ("total", SYLLABLE_COUNT, records.len()),
            ("underived", UNDERIVED_COUNT, records.len() - diacritic),
            ("diacritic-derived", DERIVED_COUNT, diacritic),
        ];
        for (what, expected, found) in checks {
            if expected != found {
                return Err(SyllabaryError::Count { what, expected, found });
            }
        }

        let longest_romaji = records.iter().map(|r| r.romaji.len()).max().unwrap_or(0);
        Ok(SyllabaryTable {
            records,
            by_character,
            by_romaji,
            derived,
            longest_romaji,
        })
    }

    /// Records in file order.
    pub fn records(&self) -> &[KanaRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn count_class(&self, class: DiacriticClass) -> usize {
        self.records.iter().filter(|r| r.class == class).count()
    }

    pub fn get(&self, kana: &str) -> Option<&KanaRecord> {
        self.by_character.get(kana).map(|&i| &self.records[i])
    }

    /// Record for a single kana scalar.
    pub fn get_scalar(&self, kana: char) -> Option<&KanaRecord> {
        let mut buf = [0u8; 4];
        self.get(kana.encode_utf8(&mut buf))
    }

    pub fn contains_scalar(&self, kana: char) -> bool {
        self.get_scalar(kana).is_some()
    }

    fn require(&self, kana: &str) -> Result<&KanaRecord, SyllabaryError> {
        self.get(kana)
            .ok_or_else(|| SyllabaryError::UnknownKana(kana.to_string()))
    }

    /// The form of `kana` carrying `mark`.
    pub fn apply_diacritic(&self, kana: &str, mark: DiacriticClass) -> Result<&str, SyllabaryError> {
        let rec = self.require(kana)?;
        if mark == DiacriticClass::Base && rec.class == DiacriticClass::Base {
            return Ok(&rec.character);
        }
        self.derived
            .get(&(rec.character.clone(), mark))
            .map(|&i| self.records[i].character.as_str())
            .ok_or_else(|| SyllabaryError::NotApplicable {
                kana: kana.to_string(),
                mark,
            })
    }

    pub fn base_of(&self, kana: &str) -> Result<&str, SyllabaryError> {
        Ok(&self.require(kana)?.base)
    }

    /// Classes applicable to a base syllable, in modifier order, with the
    /// syllable reached by each.
    pub fn forms_of(&self, base: &str) -> Result<Vec<(DiacriticClass, &str)>, SyllabaryError> {
        let rec = self.require(base)?;
        let base = rec.base.as_str();
        Ok(DiacriticClass::MODIFIER_ORDER
            .iter()
            .filter_map(|&class| match class {
                DiacriticClass::Base => Some((class, base)),
                _ => self
                    .derived
                    .get(&(base.to_string(), class))
                    .map(|&i| (class, self.records[i].character.as_str())),
            })
            .collect())
    }

    /// Greedy longest-match transliteration of lowercase romaji.
    ///
    /// `nn` and `n'` give ん, and a doubled consonant gives っ followed by the
    /// syllable starting at the second letter.
    pub fn romaji_to_kana(&self, text: &str) -> Result<String, SyllabaryError> {
        let bytes = text.as_bytes();
        let mut out = String::new();
        let mut i = 0;
        while i < bytes.len() {
            if bytes[i] == b'n' && matches!(bytes.get(i + 1), Some(b'n' | b'\'')) {
                out.push('ん');
                i += 2;
                continue;
            }
            if is_geminating(bytes[i]) && bytes.get(i + 1) == Some(&bytes[i]) {
                out.push('っ');
                i += 1;
                continue;
            }
            let max = self.longest_romaji.min(bytes.len() - i);
            let hit = (1..=max).rev().find_map(|len| {
                text.get(i..i + len)
                    .and_then(|key| self.by_romaji.get(key))
                    .map(|&r| (len, r))
            });
            match hit {
                Some((len, r)) => {
                    out.push_str(&self.records[r].character);
                    i += len;
                }
                None => return Err(SyllabaryError::Untransliterable { offset: i }),
            }
        }
        Ok(out)
    }

    /// Romaji spelling that [`romaji_to_kana`](Self::romaji_to_kana) maps
    /// back to `reading`.
    pub fn kana_to_romaji(&self, reading: &str) -> Result<String, SyllabaryError> {
        let syllables = self.segment(reading)?;
        let mut out = String::new();
        for (i, rec) in syllables.iter().enumerate() {
            match rec.character.as_str() {
                "ん" => out.push_str("nn"),
                "っ" => {
                    let next = syllables.get(i + 1).and_then(|n| n.romaji.bytes().next());
                    match next {
                        Some(c) if is_geminating(c) => out.push(c as char),
                        _ => out.push_str(&rec.romaji),
                    }
                }
                _ => out.push_str(&rec.romaji),
            }
        }
        Ok(out)
    }

    /// Splits a reading into syllables, preferring two-scalar syllables.
    pub fn segment<'a>(&'a self, reading: &str) -> Result<Vec<&'a KanaRecord>, SyllabaryError> {
        let chars: Vec<(usize, char)> = reading.char_indices().collect();
        let mut out = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            let start = chars[i].0;
            let pair_end = chars.get(i + 2).map_or(reading.len(), |c| c.0);
            if i + 1 < chars.len() {
                if let Some(rec) = self.get(&reading[start..pair_end]) {
                    out.push(rec);
                    i += 2;
                    continue;
                }
            }
            let end = chars.get(i + 1).map_or(reading.len(), |c| c.0);
            out.push(self.require(&reading[start..end])?);
            i += 1;
        }
        Ok(out)
    }
}

fn parse_record(line: usize, raw: &str) -> Result<KanaRecord, SyllabaryError> {
    let err = |reason: String| SyllabaryError::Parse { line, reason };
    let fields: Vec<&str> = raw.split('\t').collect();
    let [character, romaji, row, col, base, class] = fields[..] else {
        return Err(err(format!("expected 6 fields, found {}", fields.len())));
    };
    for (name, value) in [("character", character), ("base", base)] {
        let n = value.chars().count();
        if !(1..=2).contains(&n) || !value.chars().all(is_hiragana) {
            return Err(err(format!("{name} {value:?} is not a hiragana syllable")));
        }
    }
    if !(1..=3).contains(&romaji.len()) || !romaji.bytes().all(|b| b.is_ascii_lowercase()) {
        return Err(err(format!("romaji {romaji:?} is not 1-3 lowercase letters")));
    }
    let row: u8 = row.parse().map_err(|_| err(format!("row {row:?} is not a number")))?;
    let col: u8 = col.parse().map_err(|_| err(format!("col {col:?} is not a number")))?;
    let class: DiacriticClass = class.parse().map_err(err)?;
    Ok(KanaRecord {
        character: character.to_string(),
        romaji: romaji.to_string(),
        row,
        col,
        base: base.to_string(),
        class,
    })
}

fn is_hiragana(c: char) -> bool {
    ('\u{3041}'..='\u{3096}').contains(&c)
}

fn is_vowel(b: u8) -> bool {
    matches!(b, b'a' | b'i' | b'u' | b'e' | b'o')
}

/// Consonants whose doubling spells っ.
fn is_geminating(b: u8) -> bool {
    b.is_ascii_lowercase() && !is_vowel(b) && b != b'n' && b != b'x'
}

fn is_syllabic_romaji(romaji: &str) -> bool {
    let bytes = romaji.as_bytes();
    match bytes.split_last() {
        Some((&last, rest)) => is_vowel(last) && rest.iter().all(|&b| !is_vowel(b)),
        None => false,
    }
}

/// Character-level hiragana to katakana mapping; other characters pass through.
pub fn to_katakana(text: &str) -> String {
    text.chars()
        .map(|c| {
            if is_hiragana(c) {
                char::from_u32(c as u32 + 0x60).unwrap_or(c)
            } else {
                c
            }
        })
        .collect()
}
