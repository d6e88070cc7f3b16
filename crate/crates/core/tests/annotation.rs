mod common;

use std::sync::Arc;

use tabrobust::adapters::{FnAdapter, ModelAdapter};
use tabrobust::annotation::{AnnotationError, AnnotationService, DefaultResolver, SessionConfig};
use tabrobust::augment::ParaphraseLevel;
use tabrobust::jsonl::{parse_dataset, read_examples};
use tabrobust::{DatasetKind, PerturbationType, Provenance, Table};

/// Counts rows when the question says "how many"; otherwise reads the
/// first cell.
fn keyed(table: &Table, question: &str) -> Vec<String> {
    if question.to_lowercase().contains("how many") {
        vec![table.height().to_string()]
    } else {
        vec![table.rows[0][0].clone()]
    }
}

fn service(state: Option<&std::path::Path>) -> AnnotationService {
    let resolver = DefaultResolver::default()
        .register("keyed", Arc::new(FnAdapter::new("keyed", |t, q| Ok(keyed(t, q)))))
        .register("constant", Arc::new(FnAdapter::new("constant", |t, _| Ok(vec![t.rows[0][0].clone()]))));
    AnnotationService::new(Arc::new(resolver), state.map(Into::into))
}

fn config(adapter: &str) -> SessionConfig {
    SessionConfig::new(common::fixture("annotation_examples.jsonl"), adapter, ParaphraseLevel::Word)
}

#[test]
fn sessions_get_distinct_ids() {
    let svc = service(None);
    let a = svc.create_session(config("gold")).unwrap();
    let b = svc.create_session(config("gold")).unwrap();
    assert_ne!(a, b);
    let missing = SessionConfig::new("/nonexistent/data.jsonl", "gold", ParaphraseLevel::Word);
    assert_eq!(svc.create_session(missing).unwrap_err().code(), "dataset_error");
    assert_eq!(svc.create_session(config("nobody")).unwrap_err().code(), "adapter_error");
}

#[test]
fn items_are_served_once_then_done() {
    let svc = service(None);
    let id = svc.create_session(config("gold")).unwrap();
    let examples = read_examples(&common::fixture("annotation_examples.jsonl")).unwrap();
    for ex in &examples {
        let item = svc.next_item(&id).unwrap().unwrap();
        assert_eq!(svc.next_item(&id).unwrap().unwrap(), item);
        assert_eq!(item.item_id, ex.id);
        assert_eq!(item.original_prediction, ex.answers);
        svc.skip(&id, &item.item_id).unwrap();
    }
    assert!(svc.next_item(&id).unwrap().is_none());
    assert!(svc.export(&id).unwrap().is_empty());
}

#[test]
fn flip_matches_direct_adapter_calls() {
    let svc = service(None);
    let id = svc.create_session(config("keyed")).unwrap();
    let item = svc.next_item(&id).unwrap().unwrap();
    let adapter = FnAdapter::new("keyed", |t, q| Ok(keyed(t, q)));
    for question in [
        "what number of cities are listed?",
        "How many cities appear?",
        "count the cities listed",
        "HOW MANY cities are there in total?",
    ] {
        let got = svc.submit_attempt(&id, &item.item_id, question).unwrap();
        let direct = adapter.answer(&item.table, question).unwrap();
        assert_eq!(got.prediction, direct);
        assert_eq!(got.flipped, direct != item.original_prediction, "{question}");
    }
    let r = svc.submit_attempt(&id, &item.item_id, "what number of cities are listed?").unwrap();
    assert!(r.flipped);
    assert!(!r.matches_gold);
}

#[test]
fn question_insensitive_adapter_never_flips() {
    let svc = service(None);
    let id = svc.create_session(config("constant")).unwrap();
    let item = svc.next_item(&id).unwrap().unwrap();
    let r = svc.submit_attempt(&id, &item.item_id, "what number of cities are listed?").unwrap();
    assert!(!r.flipped);
    let err = svc.accept(&id, &item.item_id, "what number of cities are listed?").unwrap_err();
    assert_eq!(err, AnnotationError::NotFlipped);
}

#[test]
fn unchanged_and_unknown_items_are_rejected() {
    let svc = service(None);
    let id = svc.create_session(config("keyed")).unwrap();
    let item = svc.next_item(&id).unwrap().unwrap();
    let same = svc.submit_attempt(&id, &item.item_id, "  How many cities are listed? ").unwrap_err();
    assert_eq!(same.code(), "unchanged");
    assert_eq!(svc.submit_attempt(&id, "a3", "who?").unwrap_err().code(), "unknown_item");
    assert_eq!(svc.accept(&id, &item.item_id, "never tried").unwrap_err().code(), "no_attempt");
    assert_eq!(svc.next_item("nope").unwrap_err().code(), "unknown_session");
}

#[test]
fn accepted_pairs_export_as_a_valid_dataset() {
    let svc = service(None);
    let id = svc.create_session(config("keyed")).unwrap();
    for (item_id, question) in [("a1", "what number of cities are listed?"), ("a2", "what number of champions are there?")] {
        let item = svc.next_item(&id).unwrap().unwrap();
        assert_eq!(item.item_id, item_id);
        assert!(svc.submit_attempt(&id, item_id, question).unwrap().flipped);
        svc.accept(&id, item_id, question).unwrap();
    }
    let bytes = svc.export(&id).unwrap();
    assert_eq!(svc.export(&id).unwrap(), bytes);
    let ds = parse_dataset(bytes.as_slice(), DatasetKind::Pairs, "export").unwrap();
    let pairs = ds.as_pairs().unwrap();
    assert_eq!(pairs.len(), 2);
    for p in pairs {
        assert!(p.validate().is_empty(), "{:?}", p.validate());
        assert_eq!(p.provenance, Provenance::Human);
        assert_eq!(p.perturbation.kind, PerturbationType::NlqWord);
        assert_eq!(p.perturbation.params["flipped"], true);
    }
}

#[test]
fn closed_sessions_refuse_work() {
    let svc = service(None);
    let id = svc.create_session(config("gold")).unwrap();
    svc.close(&id).unwrap();
    assert_eq!(svc.next_item(&id).unwrap_err().code(), "session_closed");
}

#[test]
fn a_session_resumes_from_its_log() {
    let dir = tempfile::tempdir().unwrap();
    let id = {
        let svc = service(Some(dir.path()));
        let id = svc.create_session(config("keyed")).unwrap();
        let item = svc.next_item(&id).unwrap().unwrap();
        svc.submit_attempt(&id, &item.item_id, "what number of cities are listed?").unwrap();
        svc.accept(&id, &item.item_id, "what number of cities are listed?").unwrap();
        let item = svc.next_item(&id).unwrap().unwrap();
        svc.skip(&id, &item.item_id).unwrap();
        id
    };
    let svc = service(Some(dir.path()));
    svc.resume(&id).unwrap();
    assert_eq!(svc.next_item(&id).unwrap().unwrap().item_id, "a3");
    let ds = parse_dataset(svc.export(&id).unwrap().as_slice(), DatasetKind::Pairs, "export").unwrap();
    assert_eq!(ds.len(), 1);
}

#[test]
fn concurrent_attempts_on_one_item_leave_one_pair() {
    let svc = Arc::new(service(None));
    let id = svc.create_session(config("keyed")).unwrap();
    let item = svc.next_item(&id).unwrap().unwrap();
    let handles: Vec<_> = (0..8)
        .map(|k| {
            let (svc, id, item_id) = (svc.clone(), id.clone(), item.item_id.clone());
            std::thread::spawn(move || {
                let q = format!("what number of cities are listed, version {k}?");
                svc.submit_attempt(&id, &item_id, &q).is_ok() && svc.accept(&id, &item_id, &q).is_ok()
            })
        })
        .collect();
    let accepted = handles.into_iter().map(|h| h.join().unwrap()).filter(|&ok| ok).count();
    // the first accept advances the cursor, so every later call names a
    // stale item
    assert_eq!(accepted, 1);
    let ds = parse_dataset(svc.export(&id).unwrap().as_slice(), DatasetKind::Pairs, "export").unwrap();
    assert_eq!(ds.len(), 1);
}
