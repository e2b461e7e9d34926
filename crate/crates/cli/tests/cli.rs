//! End-to-end checks of the command-line interface: exit codes, stage
//! isolation, and the subprocess rewrite backend.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_callsum"))
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn tempdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("callsum-cli-tests").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

const FAST_FLAGS: &[&str] = &[
    "--seed",
    "17",
    "--epochs",
    "4",
    "--hash-size",
    "256",
    "--learning-rate",
    "0.001",
];

fn run_pipeline(workdir: &Path) {
    let fixtures = fixtures();
    let mut args = vec![
        "pipeline".to_string(),
        "--transcripts".to_string(),
        fixtures.join("transcripts.jsonl").display().to_string(),
        "--articles".to_string(),
        fixtures.join("articles.jsonl").display().to_string(),
        "--workdir".to_string(),
        workdir.display().to_string(),
    ];
    args.extend(FAST_FLAGS.iter().map(|s| s.to_string()));
    let out = bin().args(&args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "pipeline failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn unknown_subcommand_exits_2() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_input_exits_3_with_error_record() {
    let dir = tempdir("missing-input");
    let out = run(&[
        "stats",
        "--pairs",
        dir.join("nope.jsonl").to_str().unwrap(),
        "--out",
        dir.join("stats.jsonl").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    let record: serde_json::Value =
        serde_json::from_str(stderr.lines().last().unwrap()).expect("structured error record");
    assert_eq!(record["error"], "missing_input");
}

#[test]
fn bad_config_file_exits_4() {
    let dir = tempdir("bad-config");
    let config = dir.join("config.json");
    std::fs::write(&config, "{ not json").unwrap();
    let out = run(&[
        "--config",
        config.to_str().unwrap(),
        "split",
        "--pairs",
        "irrelevant.jsonl",
        "--out",
        "irrelevant-out.jsonl",
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn malformed_record_file_exits_4() {
    let dir = tempdir("bad-records");
    let pairs = dir.join("pairs.jsonl");
    std::fs::write(&pairs, "{\"format\":\"pairs\",\"version\":1,\"config_hash\":\"x\"}\nnot json\n").unwrap();
    let out = run(&[
        "stats",
        "--pairs",
        pairs.to_str().unwrap(),
        "--out",
        dir.join("stats.jsonl").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn stage_isolation_reproduces_deleted_artifacts() {
    let dir = tempdir("stage-isolation");
    run_pipeline(&dir);

    let targets = ["split.jsonl", "labels.jsonl", "extractive_predictions.jsonl"];
    let before: Vec<Vec<u8>> = targets
        .iter()
        .map(|name| std::fs::read(dir.join(name)).unwrap())
        .collect();

    // delete and rerun only the owning stage, same config
    std::fs::remove_file(dir.join("split.jsonl")).unwrap();
    let mut args = vec![
        "split".to_string(),
        "--pairs".to_string(),
        dir.join("pairs.jsonl").display().to_string(),
        "--out".to_string(),
        dir.join("split.jsonl").display().to_string(),
    ];
    args.extend(FAST_FLAGS.iter().map(|s| s.to_string()));
    assert!(bin().args(&args).status().unwrap().success());

    std::fs::remove_file(dir.join("labels.jsonl")).unwrap();
    let mut args = vec![
        "labels".to_string(),
        "--pairs".to_string(),
        dir.join("pairs.jsonl").display().to_string(),
        "--out-labels".to_string(),
        dir.join("labels.jsonl").display().to_string(),
        "--out-paraphrase".to_string(),
        dir.join("paraphrase_pairs.jsonl").display().to_string(),
    ];
    args.extend(FAST_FLAGS.iter().map(|s| s.to_string()));
    assert!(bin().args(&args).status().unwrap().success());

    std::fs::remove_file(dir.join("extractive_predictions.jsonl")).unwrap();
    let mut args = vec![
        "summarize".to_string(),
        "--pairs".to_string(),
        dir.join("pairs.jsonl").display().to_string(),
        "--model".to_string(),
        dir.join("model.ckpt").display().to_string(),
        "--split".to_string(),
        dir.join("split.jsonl").display().to_string(),
        "--out".to_string(),
        dir.join("extractive_predictions.jsonl").display().to_string(),
    ];
    args.extend(FAST_FLAGS.iter().map(|s| s.to_string()));
    assert!(bin().args(&args).status().unwrap().success());

    for (name, expected) in targets.iter().zip(before) {
        let after = std::fs::read(dir.join(name)).unwrap();
        assert_eq!(after, expected, "{name} changed after isolated rerun");
    }
}

#[test]
fn ingest_drops_q_and_a_only_transcripts() {
    let dir = tempdir("ingest");
    let fixtures = fixtures();
    let out = run(&[
        "ingest",
        "--transcripts",
        fixtures.join("transcripts.jsonl").to_str().unwrap(),
        "--articles",
        fixtures.join("articles.jsonl").to_str().unwrap(),
        "--out-transcripts",
        dir.join("t.jsonl").to_str().unwrap(),
        "--out-articles",
        dir.join("a.jsonl").to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("13 transcripts (1 rejected)"), "{stdout}");
}

#[test]
fn baseline_methods_produce_predictions() {
    let dir = tempdir("baselines");
    run_pipeline(&dir);
    for method in ["lead", "lexrank", "oracle"] {
        let out_path = dir.join(format!("{method}.jsonl"));
        let out = run(&[
            "baseline",
            "--pairs",
            dir.join("pairs.jsonl").to_str().unwrap(),
            "--method",
            method,
            "--out",
            out_path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{method} failed");
        let text = std::fs::read_to_string(&out_path).unwrap();
        assert_eq!(text.lines().count(), 13, "{method}: header + 12 predictions");
    }
    // and an unknown method is a config error
    let out = run(&[
        "baseline",
        "--pairs",
        dir.join("pairs.jsonl").to_str().unwrap(),
        "--method",
        "dsdr",
        "--out",
        dir.join("x.jsonl").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn subprocess_backend_matches_identity() {
    let dir = tempdir("subprocess");
    run_pipeline(&dir);
    let via_cat = dir.join("bullets_cat.jsonl");
    let via_identity = dir.join("bullets_identity.jsonl");
    for (backend, out_path) in [("subprocess:cat", &via_cat), ("identity", &via_identity)] {
        let out = run(&[
            "paraphrase",
            "--pairs",
            dir.join("pairs.jsonl").to_str().unwrap(),
            "--predictions",
            dir.join("extractive_predictions.jsonl").to_str().unwrap(),
            "--out",
            out_path.to_str().unwrap(),
            "--backend",
            backend,
        ]);
        assert!(out.status.success(), "{backend} failed");
    }
    // identical except for the config hash in the header line
    let tail = |p: &Path| {
        std::fs::read_to_string(p)
            .unwrap()
            .lines()
            .skip(1)
            .map(str::to_string)
            .collect::<Vec<_>>()
    };
    assert_eq!(tail(&via_cat), tail(&via_identity));
}

#[test]
fn evaluate_scores_perfect_predictions_at_one() {
    let dir = tempdir("evaluate-perfect");
    run_pipeline(&dir);
    // build predictions equal to the references
    let pairs_text = std::fs::read_to_string(dir.join("pairs.jsonl")).unwrap();
    let mut lines = vec![
        serde_json::json!({"format":"predictions","version":1,"config_hash":"manual"}).to_string(),
    ];
    for line in pairs_text.lines().skip(1) {
        let pair: serde_json::Value = serde_json::from_str(line).unwrap();
        let bullets: Vec<String> = pair["summary"]["bullets"]
            .as_array()
            .unwrap()
            .iter()
            .map(|b| b.as_str().unwrap().to_string())
            .collect();
        lines.push(
            serde_json::json!({
                "pair_id": pair["pair_id"],
                "sentence_indices": [],
                "summary_text": bullets.join(" "),
            })
            .to_string(),
        );
    }
    let preds = dir.join("perfect.jsonl");
    std::fs::write(&preds, lines.join("\n") + "\n").unwrap();
    let out = run(&[
        "evaluate",
        "--pairs",
        dir.join("pairs.jsonl").to_str().unwrap(),
        "--predictions",
        preds.to_str().unwrap(),
        "--out",
        dir.join("perfect_report.jsonl").to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("rouge-1 f1                   1.0000"), "{stdout}");
    assert!(stdout.contains("rouge-l f1                   1.0000"), "{stdout}");
}

#[test]
fn stats_match_the_brute_force_fragment_oracle_on_the_fixture() {
    let dir = tempdir("stats-oracle");
    run_pipeline(&dir);
    let stats_text = std::fs::read_to_string(dir.join("stats.jsonl")).unwrap();
    let record: serde_json::Value =
        serde_json::from_str(stats_text.lines().nth(1).unwrap()).unwrap();

    // oracle: greedy fragments recomputed with a plain quadratic scan over
    // the token lists of the pairs file
    let pairs_text = std::fs::read_to_string(dir.join("pairs.jsonl")).unwrap();
    let mut coverages = Vec::new();
    let mut densities = Vec::new();
    for line in pairs_text.lines().skip(1) {
        let pair: serde_json::Value = serde_json::from_str(line).unwrap();
        let tokens = |value: &serde_json::Value| -> Vec<String> {
            value
                .as_array()
                .unwrap()
                .iter()
                .flat_map(|s| callsum_core::text::tokenize(s.as_str().unwrap()))
                .collect()
        };
        let doc = tokens(&pair["transcript"]["sentences"]);
        let summary = tokens(&pair["summary"]["bullets"]);
        let mut lengths = Vec::new();
        let mut i = 0;
        while i < summary.len() {
            let mut best = 0;
            for j in 0..doc.len() {
                let mut len = 0;
                while i + len < summary.len()
                    && j + len < doc.len()
                    && summary[i + len] == doc[j + len]
                {
                    len += 1;
                }
                best = best.max(len);
            }
            if best > 0 {
                lengths.push(best);
                i += best;
            } else {
                i += 1;
            }
        }
        let covered: usize = lengths.iter().sum();
        let squared: usize = lengths.iter().map(|l| l * l).sum();
        coverages.push(covered as f64 / summary.len() as f64);
        densities.push(squared as f64 / summary.len() as f64);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let coverage = record["coverage"].as_f64().unwrap();
    let density = record["density"].as_f64().unwrap();
    assert!((coverage - mean(&coverages)).abs() < 1e-12, "{coverage}");
    assert!((density - mean(&densities)).abs() < 1e-12, "{density}");
}

#[test]
fn precomputed_embeddings_drive_labels_train_and_summarize() {
    use callsum_core::corpus::PairRecord;
    use callsum_core::encoder::{fit_lexical, write_precomputed_binary, SentenceEncoder};

    let dir = tempdir("precomputed");
    run_pipeline(&dir);

    // Build an embedding file for every sentence of the pairs file, using
    // the documented id scheme: <pair_id>/d<i> and <pair_id>/s<i>.
    let pairs: Vec<PairRecord> = std::fs::read_to_string(dir.join("pairs.jsonl"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let pairs: Vec<_> = pairs.into_iter().map(|r| r.into_pair()).collect();
    let all: Vec<&callsum_core::text::Sentence> = pairs
        .iter()
        .flat_map(|p| p.transcript.sentences.iter().chain(p.summary.bullets.iter()))
        .collect();
    let model = fit_lexical(all, 1 << 12)
        .unwrap()
        .with_projection(64)
        .unwrap();
    let mut entries = Vec::new();
    for pair in &pairs {
        for s in &pair.transcript.sentences {
            let vec = model.encode(s);
            entries.push((
                format!("{}/d{}", pair.pair_id, s.index),
                vec.values.iter().map(|v| *v as f32).collect::<Vec<f32>>(),
            ));
        }
        for s in &pair.summary.bullets {
            let vec = model.encode(s);
            entries.push((
                format!("{}/s{}", pair.pair_id, s.index),
                vec.values.iter().map(|v| *v as f32).collect::<Vec<f32>>(),
            ));
        }
    }
    let emb_path = dir.join("embeddings.bin");
    write_precomputed_binary(&emb_path, 64, &entries).unwrap();
    let encoder_arg = format!("precomputed:{}", emb_path.display());

    // labels + train + summarize against the external vectors
    let labels_path = dir.join("labels_pre.jsonl");
    let run_labels = || {
        let mut args = vec![
            "labels".to_string(),
            "--pairs".to_string(),
            dir.join("pairs.jsonl").display().to_string(),
            "--out-labels".to_string(),
            labels_path.display().to_string(),
            "--out-paraphrase".to_string(),
            dir.join("pp_pre.jsonl").display().to_string(),
            "--encoder".to_string(),
            encoder_arg.clone(),
        ];
        args.extend(FAST_FLAGS.iter().map(|s| s.to_string()));
        bin().args(&args).output().expect("binary runs")
    };
    let out = run_labels();
    assert!(
        out.status.success(),
        "labels failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let first = std::fs::read(&labels_path).unwrap();
    assert!(run_labels().status.success());
    assert_eq!(first, std::fs::read(&labels_path).unwrap(), "labels not deterministic");

    let mut args = vec![
        "train".to_string(),
        "--pairs".to_string(),
        dir.join("pairs.jsonl").display().to_string(),
        "--labels".to_string(),
        labels_path.display().to_string(),
        "--split".to_string(),
        dir.join("split.jsonl").display().to_string(),
        "--out-model".to_string(),
        dir.join("model_pre.ckpt").display().to_string(),
        "--out-log".to_string(),
        dir.join("log_pre.jsonl").display().to_string(),
        "--encoder".to_string(),
        encoder_arg.clone(),
    ];
    args.extend(FAST_FLAGS.iter().map(|s| s.to_string()));
    let out = bin().args(&args).output().unwrap();
    assert!(
        out.status.success(),
        "train failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    let mut args = vec![
        "summarize".to_string(),
        "--pairs".to_string(),
        dir.join("pairs.jsonl").display().to_string(),
        "--model".to_string(),
        dir.join("model_pre.ckpt").display().to_string(),
        "--split".to_string(),
        dir.join("split.jsonl").display().to_string(),
        "--out".to_string(),
        dir.join("preds_pre.jsonl").display().to_string(),
        "--encoder".to_string(),
        encoder_arg.clone(),
    ];
    args.extend(FAST_FLAGS.iter().map(|s| s.to_string()));
    let out = bin().args(&args).output().unwrap();
    assert!(
        out.status.success(),
        "summarize failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let preds = std::fs::read_to_string(dir.join("preds_pre.jsonl")).unwrap();
    assert_eq!(preds.lines().count(), 4, "header + 3 test predictions");

    // a file missing ids must fail loudly
    let short_path = dir.join("embeddings_short.bin");
    write_precomputed_binary(&short_path, 64, &entries[..5]).unwrap();
    let mut args = vec![
        "labels".to_string(),
        "--pairs".to_string(),
        dir.join("pairs.jsonl").display().to_string(),
        "--out-labels".to_string(),
        dir.join("l_short.jsonl").display().to_string(),
        "--out-paraphrase".to_string(),
        dir.join("p_short.jsonl").display().to_string(),
        "--encoder".to_string(),
        format!("precomputed:{}", short_path.display()),
    ];
    args.extend(FAST_FLAGS.iter().map(|s| s.to_string()));
    let out = bin().args(&args).output().unwrap();
    assert!(!out.status.success());
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("no embedding stored"),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn rewriting_subprocess_backend_keeps_values_intact() {
    let dir = tempdir("subprocess-rewrite");
    run_pipeline(&dir);
    let out_path = dir.join("bullets_sed.jsonl");
    let out = run(&[
        "paraphrase",
        "--pairs",
        dir.join("pairs.jsonl").to_str().unwrap(),
        "--predictions",
        dir.join("extractive_predictions.jsonl").to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
        "--backend",
        "subprocess:sed s/revenue/rev/",
    ]);
    assert!(
        out.status.success(),
        "sed backend failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rewritten = std::fs::read_to_string(&out_path).unwrap();
    assert!(rewritten.contains("rev"), "backend did not rewrite anything");

    // numeral precision of the rewritten bullets must stay perfect
    let report = run(&[
        "evaluate",
        "--pairs",
        dir.join("pairs.jsonl").to_str().unwrap(),
        "--predictions",
        out_path.to_str().unwrap(),
        "--split",
        dir.join("split.jsonl").to_str().unwrap(),
        "--out",
        dir.join("report_sed.jsonl").to_str().unwrap(),
    ]);
    assert!(report.status.success());
    let stdout = String::from_utf8_lossy(&report.stdout);
    assert!(stdout.contains("num-prec                     1.0000"), "{stdout}");
}
