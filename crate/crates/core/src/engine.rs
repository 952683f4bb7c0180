//! Interactive entry session.
//!
//! In disambiguation mode each digit stands for one kana. The pending digits
//! are looked up in the index after every keystroke; exact matches come
//! first, then longer readings that extend the sequence. SELECT delimits the
//! sequence and walks the candidates, CONVERT walks the written forms of the
//! chosen reading, COMMIT emits. Committing without selecting emits the most
//! frequent candidate.
//!
//! Multi-tap mode is the classic phone method: repeated presses of one key
//! walk its kana, the modifier key walks voiced and small forms, and a
//! different key or ADVANCE fixes the letter. There is no timeout; a UI that
//! wants one sends ADVANCE itself.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::layout::{Digit, KeyId, KeySequence, KeypadLayout};
use crate::lexicon::KeyTrie;

/// Default number of prediction candidates appended after the exact matches.
pub const DEFAULT_PREDICTION_LIMIT: usize = 10;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("index was built for layout {trie:016x}, session layout is {layout:016x}")]
    LayoutMismatch { trie: u64, layout: u64 },
    #[error("index has no entries")]
    EmptyIndex,
    #[error("key {0} is not a digit key")]
    NotADigit(KeyId),
    #[error("operation requires {0} mode")]
    WrongMode(Mode),
    #[error("no candidate matches the pending keys")]
    NoMatch,
    #[error("no keys are pending")]
    NothingPending,
    #[error("no candidate is selected")]
    NotSelecting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Disambiguation,
    MultiTap,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Disambiguation => "disambiguation",
            Mode::MultiTap => "multiTap",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CandidateSource {
    Exact,
    Prediction,
}

impl CandidateSource {
    pub fn as_str(self) -> &'static str {
        match self {
            CandidateSource::Exact => "exact",
            CandidateSource::Prediction => "prediction",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub reading: String,
    pub source: CandidateSource,
    pub frequency: u64,
    /// Entry id in the session's index.
    pub entry: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Entering,
    CyclingReading,
    CyclingForm,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Entering => "entering",
            Stage::CyclingReading => "cyclingReading",
            Stage::CyclingForm => "cyclingForm",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Letter being composed in multi-tap mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MultiTapBuffer {
    /// A digit key or the symbol key.
    pub key: KeyId,
    pub presses: usize,
    pub modifiers: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionState {
    mode: Mode,
    pending: KeySequence,
    multitap: Option<MultiTapBuffer>,
    candidates: Vec<Candidate>,
    cursor: Option<usize>,
    stage: Stage,
    /// 0 is the plain reading, `i > 0` the i-th written form.
    form_cursor: usize,
    committed: String,
}

impl SessionState {
    fn new(mode: Mode) -> SessionState {
        SessionState {
            mode,
            pending: KeySequence::new(),
            multitap: None,
            candidates: Vec::new(),
            cursor: None,
            stage: Stage::Entering,
            form_cursor: 0,
            committed: String::new(),
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn pending(&self) -> &KeySequence {
        &self.pending
    }

    pub fn multitap_buffer(&self) -> Option<MultiTapBuffer> {
        self.multitap
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn cursor(&self) -> Option<usize> {
        self.cursor
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn form_cursor(&self) -> usize {
        self.form_cursor
    }

    pub fn committed(&self) -> &str {
        &self.committed
    }

    /// Pending input as key labels: the digits in disambiguation mode, the
    /// presses of the letter being composed in multi-tap mode.
    pub fn pending_label(&self) -> String {
        match (self.mode, self.multitap) {
            (Mode::MultiTap, Some(buf)) => {
                let mut s = buf.key.label().repeat(buf.presses);
                s.push_str(&"*".repeat(buf.modifiers));
                s
            }
            (Mode::MultiTap, None) => String::new(),
            (Mode::Disambiguation, _) => self.pending.to_string(),
        }
    }
}

/// One input event, as carried by event tapes and the HTTP API.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    /// A grid key: a digit, or `*`/`#`.
    Key(KeyId),
    Select,
    Convert,
    Commit,
    Backspace,
    Advance,
    Mode,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::Key(k) => write!(f, "D {k}"),
            Event::Select => f.write_str("SEL"),
            Event::Convert => f.write_str("CNV"),
            Event::Commit => f.write_str("COM"),
            Event::Backspace => f.write_str("BSP"),
            Event::Advance => f.write_str("ADV"),
            Event::Mode => f.write_str("MODE"),
        }
    }
}

/// Read-only view of a session for display.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionView {
    pub mode: Mode,
    pub committed: String,
    pub pending: String,
    /// At most `window` candidates around the cursor.
    pub candidates: Vec<Candidate>,
    /// Index in the full list of the first shown candidate.
    pub window_start: usize,
    pub cursor: Option<usize>,
    pub stage: Stage,
    pub form_cursor: usize,
    /// Written forms of the selected candidate, heaviest first.
    pub forms: Vec<String>,
}

type CommitHook = Box<dyn FnMut(&str) + Send>;

/// A session over a shared index and layout.
pub struct Session {
    trie: Arc<KeyTrie>,
    layout: Arc<KeypadLayout>,
    state: SessionState,
    prediction_limit: usize,
    commit_hook: Option<CommitHook>,
}

impl fmt::Debug for Session {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Session")
            .field("state", &self.state)
            .field("prediction_limit", &self.prediction_limit)
            .finish_non_exhaustive()
    }
}

impl Session {
    pub fn new(trie: Arc<KeyTrie>, layout: Arc<KeypadLayout>, mode: Mode) -> Result<Session, EngineError> {
        if trie.layout_fingerprint() != layout.fingerprint() {
            return Err(EngineError::LayoutMismatch {
                trie: trie.layout_fingerprint(),
                layout: layout.fingerprint(),
            });
        }
        if trie.entries().is_empty() {
            return Err(EngineError::EmptyIndex);
        }
        Ok(Session {
            trie,
            layout,
            state: SessionState::new(mode),
            prediction_limit: DEFAULT_PREDICTION_LIMIT,
            commit_hook: None,
        })
    }

    /// Sets how many predictions follow the exact matches (at least one).
    pub fn with_prediction_limit(mut self, limit: usize) -> Session {
        self.prediction_limit = limit.max(1);
        self
    }

    /// Registers a callback receiving every non-empty committed text. Off by
    /// default; ranking never changes from it.
    pub fn set_commit_hook(&mut self, hook: impl FnMut(&str) + Send + 'static) {
        self.commit_hook = Some(Box::new(hook));
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn layout(&self) -> &KeypadLayout {
        &self.layout
    }

    pub fn trie(&self) -> &KeyTrie {
        &self.trie
    }

    /// Applies one event; returns the text it committed, if any.
    pub fn apply(&mut self, event: Event) -> Result<String, EngineError> {
        match (event, self.state.mode) {
            (Event::Key(KeyId::Digit(d)), Mode::Disambiguation) => self.press_digit(d),
            (Event::Key(k), Mode::Disambiguation) => Err(EngineError::NotADigit(k)),
            (Event::Key(k), Mode::MultiTap) => self.multitap_press(k),
            (Event::Select, _) => self.press_select().map(|_| String::new()),
            (Event::Convert, _) => self.press_convert().map(|_| String::new()),
            (Event::Commit, _) => self.press_commit(),
            (Event::Backspace, _) => {
                self.press_backspace();
                Ok(String::new())
            }
            (Event::Advance, _) => self.multitap_advance(),
            (Event::Mode, _) => Ok(self.toggle_mode()),
        }
    }

    fn require_mode(&self, mode: Mode) -> Result<(), EngineError> {
        if self.state.mode == mode {
            Ok(())
        } else {
            Err(EngineError::WrongMode(mode))
        }
    }

    /// Adds one kana keystroke. While a candidate is selected, that candidate
    /// is committed first and the digit starts a new sequence.
    pub fn press_digit(&mut self, digit: Digit) -> Result<String, EngineError> {
        self.require_mode(Mode::Disambiguation)?;
        let emitted = if self.state.stage == Stage::Entering {
            String::new()
        } else {
            self.commit_selection()
        };
        self.state.pending.push(digit);
        self.refresh_candidates();
        Ok(emitted)
    }

    fn refresh_candidates(&mut self) {
        let seq = &self.state.pending;
        self.state.candidates.clear();
        if seq.is_empty() {
            return;
        }
        let exact = self.trie.exact_ids(seq).iter().map(|&id| (id, CandidateSource::Exact));
        let predicted = self
            .trie
            .prediction_ids(seq, self.prediction_limit)
            .into_iter()
            .map(|id| (id, CandidateSource::Prediction));
        self.state.candidates = exact
            .chain(predicted)
            .map(|(id, source)| {
                let e = self.trie.entry(id);
                Candidate {
                    reading: e.reading.clone(),
                    source,
                    frequency: e.frequency,
                    entry: id,
                }
            })
            .collect();
    }

    /// Delimits the pending sequence on the first press, then steps through
    /// the candidates, wrapping at the end.
    pub fn press_select(&mut self) -> Result<(), EngineError> {
        self.require_mode(Mode::Disambiguation)?;
        if self.state.pending.is_empty() {
            return Err(EngineError::NothingPending);
        }
        let len = self.state.candidates.len();
        if len == 0 {
            return Err(EngineError::NoMatch);
        }
        self.state.cursor = Some(match (self.state.stage, self.state.cursor) {
            (Stage::Entering, _) | (_, None) => 0,
            (_, Some(c)) => (c + 1) % len,
        });
        self.state.stage = Stage::CyclingReading;
        self.state.form_cursor = 0;
        Ok(())
    }

    /// Steps through the plain reading and the written forms of the selected
    /// candidate.
    pub fn press_convert(&mut self) -> Result<(), EngineError> {
        self.require_mode(Mode::Disambiguation)?;
        let Some(cursor) = self.state.cursor.filter(|_| self.state.stage != Stage::Entering) else {
            return Err(EngineError::NotSelecting);
        };
        let slots = 1 + self.trie.entry(self.state.candidates[cursor].entry).forms.len();
        self.state.form_cursor = (self.state.form_cursor + 1) % slots;
        self.state.stage = Stage::CyclingForm;
        Ok(())
    }

    /// Emits the current choice, or the top candidate when nothing has been
    /// selected. In multi-tap mode this fixes the letter being composed.
    pub fn press_commit(&mut self) -> Result<String, EngineError> {
        if self.state.mode == Mode::MultiTap {
            return self.multitap_advance();
        }
        if self.state.stage == Stage::Entering {
            if self.state.pending.is_empty() {
                return Ok(String::new());
            }
            if self.state.candidates.is_empty() {
                return Err(EngineError::NoMatch);
            }
            self.state.cursor = Some(0);
            self.state.stage = Stage::CyclingReading;
        }
        Ok(self.commit_selection())
    }

    fn selected_text(&self) -> String {
        let Some(cursor) = self.state.cursor else {
            return String::new();
        };
        let candidate = &self.state.candidates[cursor];
        match (self.state.stage, self.state.form_cursor) {
            (Stage::CyclingForm, f) if f > 0 => self.trie.entry(candidate.entry).forms[f - 1].surface.clone(),
            _ => candidate.reading.clone(),
        }
    }

    fn commit_selection(&mut self) -> String {
        let text = self.selected_text();
        self.reset_entry();
        self.emit(&text);
        text
    }

    fn emit(&mut self, text: &str) {
        if text.is_empty() {
            return;
        }
        self.state.committed.push_str(text);
        if let Some(hook) = self.commit_hook.as_mut() {
            hook(text);
        }
    }

    fn reset_entry(&mut self) {
        self.state.pending.clear();
        self.state.candidates.clear();
        self.state.cursor = None;
        self.state.stage = Stage::Entering;
        self.state.form_cursor = 0;
    }

    /// Leaves candidate selection, else drops the last pending key, else the
    /// last committed character.
    pub fn press_backspace(&mut self) {
        let s = &mut self.state;
        match s.mode {
            Mode::Disambiguation if s.stage != Stage::Entering => {
                s.stage = Stage::Entering;
                s.cursor = None;
                s.form_cursor = 0;
            }
            Mode::Disambiguation if !s.pending.is_empty() => {
                s.pending.pop();
                self.refresh_candidates();
            }
            Mode::MultiTap if s.multitap.is_some() => s.multitap = None,
            _ => {
                s.committed.pop();
            }
        }
    }

    /// Handles a grid key in multi-tap mode; returns a letter it fixed, if any.
    pub fn multitap_press(&mut self, key: KeyId) -> Result<String, EngineError> {
        self.require_mode(Mode::MultiTap)?;
        if key == self.layout.modifier_key() {
            if let Some(buf) = self.state.multitap.as_mut() {
                if matches!(buf.key, KeyId::Digit(_)) {
                    buf.modifiers += 1;
                }
            }
            return Ok(String::new());
        }
        let is_symbol_key = key == self.layout.symbol_key();
        if !matches!(key, KeyId::Digit(_)) && !is_symbol_key {
            return Err(EngineError::NotADigit(key));
        }
        if is_symbol_key && self.layout.symbols().is_empty() {
            return Ok(String::new());
        }
        match self.state.multitap.as_mut() {
            Some(buf) if buf.key == key => {
                buf.presses += 1;
                buf.modifiers = 0;
                Ok(String::new())
            }
            _ => {
                let fixed = self.finish_letter();
                self.state.multitap = Some(MultiTapBuffer {
                    key,
                    presses: 1,
                    modifiers: 0,
                });
                Ok(fixed)
            }
        }
    }

    /// Fixes the letter being composed.
    pub fn multitap_advance(&mut self) -> Result<String, EngineError> {
        self.require_mode(Mode::MultiTap)?;
        Ok(self.finish_letter())
    }

    fn current_letter(&self) -> Option<char> {
        let buf = self.state.multitap?;
        match buf.key {
            KeyId::Digit(d) => {
                let cycle = self.layout.cycle(d);
                let base = cycle[(buf.presses - 1) % cycle.len()];
                let forms = self.layout.modifier_forms(base)?;
                Some(forms[buf.modifiers % forms.len()])
            }
            _ => {
                let symbols = self.layout.symbols();
                Some(symbols[(buf.presses - 1) % symbols.len()])
            }
        }
    }

    fn finish_letter(&mut self) -> String {
        let letter = self.current_letter().map(String::from).unwrap_or_default();
        self.state.multitap = None;
        self.emit(&letter);
        letter
    }

    /// Switches mode. Work in progress is committed first: the top (or
    /// selected) candidate in disambiguation mode, or the letter being
    /// composed in multi-tap mode. Pending keys with no candidate are dropped.
    pub fn toggle_mode(&mut self) -> String {
        let emitted = match self.state.mode {
            Mode::Disambiguation => {
                let text = self.press_commit().unwrap_or_default();
                self.reset_entry();
                text
            }
            Mode::MultiTap => self.finish_letter(),
        };
        self.state.mode = match self.state.mode {
            Mode::Disambiguation => Mode::MultiTap,
            Mode::MultiTap => Mode::Disambiguation,
        };
        emitted
    }

    /// Shows at most `window` candidates around the cursor; a window of one
    /// shows just the current candidate.
    ///
    /// # Panics
    ///
    /// Panics if `window` is zero.
    pub fn snapshot(&self, window: usize) -> SessionView {
        assert!(window > 0, "snapshot window must be positive");
        let s = &self.state;
        let len = s.candidates.len();
        let focus = s.cursor.unwrap_or(0);
        let start = focus.saturating_sub(window / 2).min(len.saturating_sub(window));
        let end = (start + window).min(len);
        let forms = s
            .cursor
            .map(|c| {
                self.trie
                    .entry(s.candidates[c].entry)
                    .forms
                    .iter()
                    .map(|f| f.surface.clone())
                    .collect()
            })
            .unwrap_or_default();
        SessionView {
            mode: s.mode,
            committed: s.committed.clone(),
            pending: s.pending_label(),
            candidates: s.candidates[start..end].to_vec(),
            window_start: start,
            cursor: s.cursor,
            stage: s.stage,
            form_cursor: s.form_cursor,
            forms,
        }
    }
}
