mod common;

use std::sync::Arc;

use common::*;
use kanapad_core::metrics::{compare_methods, eval_disambiguation, eval_multitap, render_comparison, CorpusRecord};
use kanapad_core::{Event, KeyId, KeyTrie, Lexicon, Mode, Session};
use num_rational::Ratio;
use proptest::prelude::*;

fn corpus_strategy() -> impl Strategy<Value = (Lexicon, Vec<(prop::sample::Index, u64)>)> {
    (
        lexicon_strategy(120),
        prop::collection::vec((any::<prop::sample::Index>(), 1u64..20), 1..40),
    )
}

fn corpus_of(lex: &Lexicon, picks: &[(prop::sample::Index, u64)]) -> Vec<CorpusRecord> {
    picks
        .iter()
        .map(|(i, c)| CorpusRecord::new(lex.entries()[i.index(lex.len())].reading.clone(), *c))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn per_word_press_bounds((lex, picks) in corpus_strategy()) {
        let layout = layout();
        let trie = KeyTrie::build(&lex, &layout).unwrap();
        for rec in corpus_of(&lex, &picks) {
            let one = [CorpusRecord::new(rec.reading.clone(), 1)];
            let len = rec.reading.chars().count() as u64;
            let d = eval_disambiguation(&trie, &layout, &one);
            let rank = *d.rank_histogram.keys().next().unwrap();
            prop_assert!(d.total_presses > len);
            prop_assert_eq!(d.total_presses == len + 1, rank == 1);
            let m = eval_multitap(&layout, &one).unwrap();
            prop_assert!(m.total_presses >= 2 * len);
        }
    }

    #[test]
    fn kspc_bounded_by_worst_rank((lex, picks) in corpus_strategy()) {
        let layout = layout();
        let trie = KeyTrie::build(&lex, &layout).unwrap();
        let corpus = corpus_of(&lex, &picks);
        let rep = eval_disambiguation(&trie, &layout, &corpus);
        let worst = *rep.rank_histogram.keys().last().unwrap() as u64;
        let min_len = corpus.iter().map(|r| r.reading.chars().count()).min().unwrap() as u64;
        // Each word costs at most len + worst + 1, so KSPC <= 1 + (worst + 1) / min_len.
        let bound = Ratio::new(min_len + worst + 1, min_len);
        prop_assert!(rep.kspc().unwrap() <= bound);
        prop_assert_eq!(rep.kspc().unwrap(), Ratio::new(rep.total_presses, rep.total_kana));
    }

    #[test]
    fn charged_presses_replay_on_the_engine((lex, picks) in corpus_strategy()) {
        let layout = layout();
        let trie = Arc::new(KeyTrie::build(&lex, &layout).unwrap());
        let layout = Arc::new(layout);
        for rec in corpus_of(&lex, &picks).into_iter().take(5) {
            let one = [CorpusRecord::new(rec.reading.clone(), 1)];
            let rep = eval_disambiguation(&trie, &layout, &one);
            let rank = *rep.rank_histogram.keys().next().unwrap();
            let mut events: Vec<Event> = layout
                .encode_reading(&rec.reading)
                .unwrap()
                .iter()
                .map(|&d| Event::Key(KeyId::Digit(d)))
                .collect();
            if rank > 1 {
                events.extend(std::iter::repeat_n(Event::Select, rank));
            }
            events.push(Event::Commit);
            prop_assert_eq!(events.len() as u64, rep.total_presses);
            let mut s = Session::new(Arc::clone(&trie), Arc::clone(&layout), Mode::Disambiguation).unwrap();
            for ev in events {
                s.apply(ev).unwrap();
            }
            prop_assert_eq!(s.state().committed(), rec.reading.as_str());
        }
    }

    #[test]
    fn multitap_presses_replay_on_the_engine((lex, picks) in corpus_strategy()) {
        let layout = layout();
        let trie = Arc::new(KeyTrie::build(&lex, &layout).unwrap());
        let layout = Arc::new(layout);
        for rec in corpus_of(&lex, &picks).into_iter().take(5) {
            let rep = eval_multitap(&layout, &[CorpusRecord::new(rec.reading.clone(), 1)]).unwrap();
            let mut s = Session::new(Arc::clone(&trie), Arc::clone(&layout), Mode::MultiTap).unwrap();
            let mut presses = 0u64;
            for kana in rec.reading.chars() {
                for &k in layout.multitap_expand(&kana.to_string()).unwrap() {
                    s.multitap_press(k).unwrap();
                    presses += 1;
                }
                s.multitap_advance().unwrap();
                presses += 1;
            }
            prop_assert_eq!(presses, rep.total_presses);
            prop_assert_eq!(s.state().committed(), rec.reading.as_str());
        }
    }

    #[test]
    fn reports_are_deterministic((lex, picks) in corpus_strategy()) {
        let layout = layout();
        let trie = KeyTrie::build(&lex, &layout).unwrap();
        let corpus = corpus_of(&lex, &picks);
        let a = render_comparison(&compare_methods(&trie, &layout, table(), &corpus).unwrap());
        let b = render_comparison(&compare_methods(&trie, &layout, table(), &corpus).unwrap());
        prop_assert_eq!(a, b);
    }
}
