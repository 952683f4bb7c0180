//! Event tapes: scripted key events replayed against a session.
//!
//! One event per line: `D <key>` (the space is optional), `SEL`, `CNV`,
//! `COM`, `BSP`, `ADV`, `MODE`. Blank lines and `#` comments are skipped.
//! Replay prints one digest line per event and then the committed text.

use std::fmt::Write;

use thiserror::Error;

use crate::engine::{EngineError, Event, Session};
use crate::layout::KeyId;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {reason}")]
pub struct TapeError {
    pub line: usize,
    pub reason: String,
}

pub fn parse_event(token: &str) -> Result<Event, String> {
    let event = match token {
        "SEL" => Event::Select,
        "CNV" => Event::Convert,
        "COM" => Event::Commit,
        "BSP" => Event::Backspace,
        "ADV" => Event::Advance,
        "MODE" => Event::Mode,
        _ => {
            let key = token
                .strip_prefix('D')
                .map(|rest| rest.trim_start_matches(' '))
                .ok_or_else(|| format!("unknown event {token:?}"))?;
            let mut chars = key.chars();
            match (chars.next().and_then(KeyId::from_label), chars.next()) {
                (Some(k), None) => Event::Key(k),
                _ => return Err(format!("bad key in {token:?}")),
            }
        }
    };
    Ok(event)
}

pub fn parse_tape(text: &str) -> Result<Vec<Event>, TapeError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(i, l)| parse_event(l.trim_end()).map_err(|reason| TapeError { line: i + 1, reason }))
        .collect()
}

/// Short name of an engine error for digest lines.
pub fn error_code(err: &EngineError) -> &'static str {
    match err {
        EngineError::LayoutMismatch { .. } => "layout-mismatch",
        EngineError::EmptyIndex => "empty-index",
        EngineError::NotADigit(_) => "not-a-digit",
        EngineError::WrongMode(_) => "wrong-mode",
        EngineError::NoMatch => "no-match",
        EngineError::NothingPending => "nothing-pending",
        EngineError::NotSelecting => "not-selecting",
    }
}

/// Digest of the session after an event: mode, stage, pending keys, cursor.
pub fn digest(session: &Session) -> String {
    let s = session.state();
    let cursor = s.cursor().map_or_else(|| "-".to_string(), |c| c.to_string());
    format!(
        "{}\t{}\tpending={}\tcursor={}",
        s.mode(),
        s.stage(),
        s.pending_label(),
        cursor
    )
}

/// Replays `events` and renders the digest transcript. An event the engine
/// rejects leaves the state as it was and is marked with `error=<code>`.
pub fn replay(session: &mut Session, events: &[Event]) -> String {
    let mut out = String::new();
    for (i, &event) in events.iter().enumerate() {
        let result = session.apply(event);
        write!(out, "{}\t{}\t{}", i + 1, event, digest(session)).expect("write to string");
        if let Err(e) = result {
            write!(out, "\terror={}", error_code(&e)).expect("write to string");
        }
        out.push('\n');
    }
    if !events.is_empty() {
        writeln!(out, "committed\t{}", session.state().committed()).expect("write to string");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::Digit;

    #[test]
    fn parses_events() {
        let tape = "D 1\nD3\n# comment\n\nSEL\nCNV\nCOM\nBSP\nADV\nMODE\nD *\nD#\n";
        let events = parse_tape(tape).unwrap();
        assert_eq!(
            events,
            [
                Event::Key(KeyId::Digit(Digit::new(1).unwrap())),
                Event::Key(KeyId::Digit(Digit::new(3).unwrap())),
                Event::Select,
                Event::Convert,
                Event::Commit,
                Event::Backspace,
                Event::Advance,
                Event::Mode,
                Event::Key(KeyId::Star),
                Event::Key(KeyId::Hash),
            ]
        );
        assert!(parse_tape("").unwrap().is_empty());
    }

    #[test]
    fn rejects_bad_lines() {
        assert_eq!(parse_tape("X9").unwrap_err().line, 1);
        assert_eq!(parse_tape("SEL\nD 12\n").unwrap_err().line, 2);
        assert_eq!(parse_tape("D\n").unwrap_err().line, 1);
        assert_eq!(parse_tape("sel\n").unwrap_err().line, 1);
    }

    #[test]
    fn display_round_trips() {
        for token in ["D 0", "D *", "SEL", "CNV", "COM", "BSP", "ADV", "MODE"] {
            assert_eq!(parse_event(token).unwrap().to_string(), token);
        }
    }
}
