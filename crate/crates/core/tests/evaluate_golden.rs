//! Three tiny documents scored against values worked out by hand, plus the
//! bookkeeping for missing predictions and empty references.

use std::collections::BTreeMap;

use callsum_core::corpus::{DocumentSummaryPair, SummaryArticle, Transcript};
use callsum_core::metrics::{evaluate, NumPrecOutcome};
use callsum_core::text::Sentence;

fn sentences(texts: &[&str]) -> Vec<Sentence> {
    texts
        .iter()
        .enumerate()
        .map(|(i, t)| Sentence::new(*t, i))
        .collect()
}

fn pair(id: &str, doc: &[&str], bullets: &[&str]) -> DocumentSummaryPair {
    DocumentSummaryPair {
        pair_id: id.to_string(),
        transcript: Transcript {
            source_id: id.to_string(),
            company_code: "GLD".to_string(),
            event_date: "2021-01-01".parse().unwrap(),
            sentences: sentences(doc),
        },
        summary: SummaryArticle {
            source_id: format!("{id}-art"),
            company_code: "GLD".to_string(),
            post_date: "2021-01-01".parse().unwrap(),
            bullets: sentences(bullets),
        },
        merged_from: vec![format!("{id}-art")],
    }
}

#[test]
fn three_document_golden_values() {
    let pairs = vec![
        // g1: prediction identical to its reference, no numerals anywhere
        pair("g1", &["Alpha beta gamma."], &["alpha beta gamma."]),
        // g2: one extra token in the prediction, one supported numeral
        pair(
            "g2",
            &["Revenue was $100 million.", "Margins were stable."],
            &["revenue $100 million."],
        ),
        // g3: one shared token, one unsupported numeral
        pair(
            "g3",
            &["Profit doubled on cost control.", "We spent $9 on snacks."],
            &["profit doubled.", "costs fell."],
        ),
        // g4: empty reference, must be counted and excluded
        pair("g4", &["Something was said."], &[]),
        // g5: no prediction supplied
        pair("g5", &["Another call happened."], &["another call."]),
    ];
    let mut predictions = BTreeMap::new();
    predictions.insert("g1".to_string(), "alpha beta gamma.".to_string());
    predictions.insert("g2".to_string(), "revenue was $100 million.".to_string());
    predictions.insert("g3".to_string(), "profit rose $5.".to_string());
    predictions.insert("g4".to_string(), "whatever.".to_string());

    let report = evaluate(&predictions, &pairs);

    assert_eq!(report.evaluated, 3);
    assert_eq!(report.missing_predictions, vec!["g5".to_string()]);
    assert_eq!(report.empty_references, vec!["g4".to_string()]);
    assert_eq!(report.summaries_without_numerals, 1); // g1

    // g1: all scores 1.
    // g2: cand [revenue, was, $100, million] vs ref [revenue, $100, million]
    //     R1 match 3: P 3/4, R 1, F1 6/7
    //     R2 cand bigrams 3, ref bigrams 2, match 1 ($100 million): F1 2/5
    //     RL lcs 3: same as R1, F1 6/7
    // g3: cand [profit, rose, $5] vs ref [profit, doubled, costs, fell]
    //     R1 match 1: P 1/3, R 1/4, F1 2/7
    //     R2 match 0: F1 0
    //     RL lcs 1: F1 2/7
    let by_id: BTreeMap<&str, _> = report
        .per_document
        .iter()
        .map(|d| (d.pair_id.as_str(), d))
        .collect();
    let g2 = by_id["g2"];
    assert!((g2.rouge1.f1 - 6.0 / 7.0).abs() < 1e-12);
    assert!((g2.rouge2.unwrap().f1 - 0.4).abs() < 1e-12);
    assert!((g2.rouge_l.f1 - 6.0 / 7.0).abs() < 1e-12);
    assert_eq!(g2.num_prec.fraction(), Some(1.0));
    let g3 = by_id["g3"];
    assert!((g3.rouge1.f1 - 2.0 / 7.0).abs() < 1e-12);
    assert_eq!(g3.rouge2.unwrap().f1, 0.0);
    assert!((g3.rouge_l.f1 - 2.0 / 7.0).abs() < 1e-12);
    assert_eq!(g3.num_prec.fraction(), Some(0.0));
    let g1 = by_id["g1"];
    assert_eq!(g1.rouge1.f1, 1.0);
    assert_eq!(g1.num_prec, NumPrecOutcome::NoNumerals);

    // corpus means over the three evaluated documents
    assert!((report.mean_rouge1_f1 - 5.0 / 7.0).abs() < 1e-12);
    assert!((report.mean_rouge2_f1 - 1.4 / 3.0).abs() < 1e-12);
    assert!((report.mean_rouge_l_f1 - 5.0 / 7.0).abs() < 1e-12);
    // num-prec mean over g2 and g3 only
    assert!((report.mean_num_prec - 0.5).abs() < 1e-12);
}

#[test]
fn rerunning_evaluate_is_deterministic() {
    let pairs = vec![pair(
        "d1",
        &["Revenue was $100 million.", "Margins were stable."],
        &["revenue $100 million.", "margins stable."],
    )];
    let mut predictions = BTreeMap::new();
    predictions.insert("d1".to_string(), "revenue was $100 million.".to_string());
    let a = evaluate(&predictions, &pairs);
    let b = evaluate(&predictions, &pairs);
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
}
