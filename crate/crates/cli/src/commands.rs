use std::fs;
use std::path::Path;
use std::sync::Arc;

use anyhow::{Context, Result};
use kanapad_core::metrics::{compare_methods, parse_corpus, render_comparison};
use kanapad_core::tape::{parse_tape, replay};
use kanapad_core::{deserialize_index, serialize_index, KeyTrie, KeypadLayout, Lexicon, Mode, Session, SyllabaryTable};

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub struct CompileSummary {
    pub entries: usize,
    pub bytes: usize,
}

/// Compiles a dictionary into an index file. Without a layout file the
/// packaged default layout is used.
pub fn compile(dict: &Path, layout: Option<&Path>, out: &Path) -> Result<CompileSummary> {
    let table = SyllabaryTable::packaged();
    let layout = match layout {
        Some(path) => KeypadLayout::parse(&read_text(path)?, table)
            .with_context(|| format!("loading layout {}", path.display()))?,
        None => KeypadLayout::packaged(table),
    };
    let lexicon =
        Lexicon::parse(&read_text(dict)?, table).with_context(|| format!("parsing dictionary {}", dict.display()))?;
    let trie = KeyTrie::build(&lexicon, &layout)?;
    let bytes = serialize_index(&trie);
    fs::write(out, &bytes).with_context(|| format!("writing {}", out.display()))?;
    Ok(CompileSummary {
        entries: lexicon.len(),
        bytes: bytes.len(),
    })
}

/// Loads an index and the layout it was compiled with.
pub fn load_index(path: &Path) -> Result<(Arc<KeyTrie>, Arc<KeypadLayout>)> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let trie = deserialize_index(&bytes).with_context(|| format!("loading index {}", path.display()))?;
    let layout = KeypadLayout::parse(trie.layout_source(), SyllabaryTable::packaged())
        .with_context(|| format!("layout stored in {}", path.display()))?;
    Ok((Arc::new(trie), Arc::new(layout)))
}

/// Replays an event tape in disambiguation mode and returns the transcript.
pub fn simulate(index: &Path, tape: &Path) -> Result<String> {
    let (trie, layout) = load_index(index)?;
    let events = parse_tape(&read_text(tape)?).with_context(|| format!("parsing tape {}", tape.display()))?;
    let mut session = Session::new(trie, layout, Mode::Disambiguation)?;
    Ok(replay(&mut session, &events))
}

/// Compares disambiguation and multi-tap entry over a corpus.
pub fn eval(index: &Path, corpus: &Path) -> Result<String> {
    let (trie, layout) = load_index(index)?;
    let corpus = parse_corpus(&read_text(corpus)?).with_context(|| format!("parsing corpus {}", corpus.display()))?;
    let comparison = compare_methods(&trie, &layout, SyllabaryTable::packaged(), &corpus)?;
    Ok(render_comparison(&comparison))
}
