//! Reduced-keyboard Japanese text entry.
//!
//! A twelve-key keypad carries several kana per key. In disambiguation mode
//! every keystroke stands for one kana, and the resulting digit sequence is
//! matched against a frequency-ranked dictionary of readings; a select key
//! walks the ranked candidates. A multi-tap mode, where repeated presses
//! cycle a key's kana, serves as the baseline the metrics compare against.

pub mod engine;
pub mod layout;
pub mod lexicon;
pub mod metrics;
pub mod syllabary;
pub mod tape;

pub use engine::{Candidate, CandidateSource, EngineError, Event, Mode, Session, SessionState, SessionView, Stage};
pub use layout::{load_layout, Digit, KeyId, KeySequence, KeypadLayout, LayoutError};
pub use lexicon::{
    build_index, deserialize_index, parse_lexicon, serialize_index, IndexError, KeyTrie, Lexicon, LexiconError,
    Midashigo, YomikataEntry,
};
pub use syllabary::{load_syllabary, DiacriticClass, KanaRecord, SyllabaryError, SyllabaryTable};
