mod common;

use std::collections::BTreeMap;

use tabrobust::Execution;

#[test]
fn repeated_runs_are_byte_identical() {
    let first = common::perturb_outputs(Execution::Parallel);
    let second = common::perturb_outputs(Execution::Parallel);
    let sequential = common::perturb_outputs(Execution::Sequential);
    for ((kind, a), ((_, b), (_, c))) in first.iter().zip(second.iter().zip(&sequential)) {
        assert_eq!(a, b, "{kind}: two parallel runs differ");
        assert_eq!(a, c, "{kind}: parallel and sequential differ");
        assert!(!a.is_empty(), "{kind}: no pairs");
    }
}

#[test]
fn outputs_match_frozen_digests() {
    let got: BTreeMap<String, String> = common::perturb_outputs(Execution::default())
        .into_iter()
        .map(|(kind, bytes)| (kind.to_string(), common::sha256_hex(&bytes)))
        .collect();
    if std::env::var_os("TABROBUST_BLESS").is_some() {
        let text = serde_json::to_string_pretty(&got).unwrap() + "\n";
        std::fs::write(common::fixture("perturb_digests.json"), text).unwrap();
    }
    assert_eq!(got, common::frozen_digests());
}
