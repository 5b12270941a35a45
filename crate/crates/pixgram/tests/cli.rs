//! End-to-end checks of the command-line interface: exit codes, file
//! outputs, and rerun reproducibility.

use std::path::Path;
use std::process::{Command, Output};

use pixgram::corpus::{read_cache, write_csv, Document};
use pixgram::synth::planted_bigram_corpus;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pixgram"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn pixgram")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "command failed: {}\n{}",
        stdout(out),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn render_blank_word_writes_zero_pgm() {
    let dir = tempfile::tempdir().unwrap();
    let pgm = dir.path().join("blank.pgm");
    let out = run(&["render", "", pgm.to_str().unwrap()]);
    assert_success(&out);
    assert!(stdout(&out).contains("ink_fraction 0"));
    let bytes = std::fs::read(&pgm).unwrap();
    assert!(bytes.starts_with(b"P5\n131 20\n255\n"));
    assert!(bytes[b"P5\n131 20\n255\n".len()..].iter().all(|&b| b == 0));
}

#[test]
fn render_word_confines_ink_to_its_columns() {
    let dir = tempfile::tempdir().unwrap();
    let pgm = dir.path().join("iraq.pgm");
    let out = run(&["render", "Iraq", pgm.to_str().unwrap()]);
    assert_success(&out);
    let bytes = std::fs::read(&pgm).unwrap();
    let pixels = &bytes[b"P5\n131 20\n255\n".len()..];
    assert_eq!(pixels.len(), 20 * 131);
    let mut ink = 0;
    for r in 0..20 {
        for c in 0..131 {
            if pixels[r * 131 + c] != 0 {
                ink += 1;
                assert!(c < 28, "ink outside the first 4 glyph cells at col {c}");
            }
        }
    }
    assert!(ink > 0);
}

#[test]
fn render_too_long_word_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let pgm = dir.path().join("no.pgm");
    let out = run(&["render", "internationalizing", pgm.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!pgm.exists());
}

#[test]
fn unknown_flag_exits_1() {
    let out = run(&["train", "--bogus-flag", "x"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_command_exits_1() {
    let out = run(&["conjure"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn dump_font_writes_all_glyphs() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["dump-font", "--out", dir.path().to_str().unwrap()]);
    assert_success(&out);
    let pgms = std::fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .path()
                .extension()
                .map(|x| x == "pgm")
                .unwrap_or(false)
        })
        .count();
    assert_eq!(pgms, 95);
    let m = std::fs::read(dir.path().join("077.pgm")).unwrap();
    assert!(m.starts_with(b"P5\n7 13\n255\n"));
}

#[test]
fn prepare_reports_stats_and_round_trips_cache() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("fixture.csv");
    let docs = vec![
        Document {
            label: 0,
            text: "short words only".into(),
        },
        Document {
            label: 1,
            text: format!("one {} long", "x".repeat(25)),
        },
        Document {
            label: 1,
            text: "more text here, truly".into(),
        },
    ];
    write_csv(&csv, &docs).unwrap();
    let outdir = dir.path().join("prep");
    let out = run(&[
        "prepare",
        "--data",
        csv.to_str().unwrap(),
        "--num-classes",
        "2",
        "--out",
        outdir.to_str().unwrap(),
        "--histogram",
    ]);
    assert_success(&out);
    let text = stdout(&out);
    assert!(text.contains("documents 3"));
    assert!(text.contains("class 0 class_0 1"));
    assert!(text.contains("class 1 class_1 2"));

    let cached = read_cache(outdir.join("corpus.pxg")).unwrap();
    assert_eq!(cached.len(), 3);
    assert_eq!(cached[0].text, "short words only");
    // The 25-char token is dropped by the cache tokenizer.
    assert!(!cached[1].text.contains("xxxxx"));

    let hist = std::fs::read_to_string(outdir.join("histogram.csv")).unwrap();
    assert!(hist.starts_with("length,count\n"));
    assert!(
        hist.contains("25,1"),
        "raw histogram keeps the long token:\n{hist}"
    );
    assert!(outdir.join("resolved.cfg").exists());
}

#[test]
fn prepare_rejects_out_of_range_class_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    std::fs::write(&csv, "\"7\",\"title\",\"body\"\n").unwrap();
    let out = run(&[
        "prepare",
        "--data",
        csv.to_str().unwrap(),
        "--num-classes",
        "4",
        "--out",
        dir.path().join("p").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

fn train_args<'a>(csv: &'a str, out: &'a str) -> Vec<&'a str> {
    vec![
        "train",
        "--train-csv",
        csv,
        "--out",
        out,
        "--num-classes",
        "2",
        "--class-names",
        "neg,pos",
        "--kernels",
        "8",
        "--seq-len",
        "16",
        "--pool-kernel",
        "3",
        "--pool-stride",
        "1",
        "--pool-dilation",
        "1",
        "--fc1-out",
        "32",
        "--fc2-out",
        "16",
        "--dropout",
        "0",
        "--lr",
        "0.001",
        "--batch-size",
        "8",
        "--max-epochs",
        "6",
        "--patience",
        "6",
        "--seed",
        "11",
        "--threads",
        "1",
    ]
}

#[test]
fn pipeline_train_eval_interpret_and_rerun_identically() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("train.csv");
    write_csv(&csv, &planted_bigram_corpus(60, 10, 5)).unwrap();
    let csv_s = csv.to_str().unwrap();

    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    assert_success(&run(&train_args(csv_s, out_a.to_str().unwrap())));
    assert_success(&run(&train_args(csv_s, out_b.to_str().unwrap())));

    // Same seed, single thread: byte-identical artifacts.
    let ckpt_a = std::fs::read(out_a.join("checkpoint.pxgc")).unwrap();
    let ckpt_b = std::fs::read(out_b.join("checkpoint.pxgc")).unwrap();
    assert_eq!(ckpt_a, ckpt_b);
    assert_eq!(
        std::fs::read(out_a.join("report.jsonl")).unwrap(),
        std::fs::read(out_b.join("report.jsonl")).unwrap()
    );
    // resolved.cfg differs only in the out path itself.
    let strip_out = |p: &Path| -> String {
        std::fs::read_to_string(p.join("resolved.cfg"))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("out = "))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip_out(&out_a), strip_out(&out_b));
    let report = std::fs::read_to_string(out_a.join("report.jsonl")).unwrap();
    assert!(report.lines().count() >= 1);
    assert!(report.contains("\"train_loss\":"));

    // Evaluate on the training file; threads must not change results.
    let eval_dir = dir.path().join("eval");
    let ckpt_path = out_a.join("checkpoint.pxgc");
    let out = run(&[
        "eval",
        "--checkpoint",
        ckpt_path.to_str().unwrap(),
        "--test-csv",
        csv_s,
        "--out",
        eval_dir.to_str().unwrap(),
        "--threads",
        "2",
    ]);
    assert_success(&out);
    let acc_line = std::fs::read_to_string(eval_dir.join("accuracy.txt")).unwrap();
    let acc: f64 = acc_line.trim().rsplit(' ').next().unwrap().parse().unwrap();
    assert!(
        acc > 0.9,
        "tiny planted corpus should be learnable, got {acc}"
    );
    let confusion = std::fs::read_to_string(eval_dir.join("confusion.csv")).unwrap();
    assert!(confusion.starts_with(",neg,pos\n"));

    // Interpretation finds the planted signatures.
    let interp_dir = dir.path().join("interp");
    let out = run(&[
        "interpret",
        "--checkpoint",
        ckpt_path.to_str().unwrap(),
        "--test-csv",
        csv_s,
        "--out",
        interp_dir.to_str().unwrap(),
        "--per-doc",
        "2",
        "--top-phrases",
        "10",
    ]);
    assert_success(&out);
    let phrases = std::fs::read_to_string(interp_dir.join("phrases.jsonl")).unwrap();
    assert!(phrases.contains("\"phrase\":\"alpha_beta\""));
    assert!(phrases.contains("\"phrase\":\"gamma_delta\""));
    assert!(phrases.contains("\"rank\":1"));
}

#[test]
fn eval_with_mismatched_classes_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("train.csv");
    write_csv(&csv, &planted_bigram_corpus(20, 8, 6)).unwrap();
    let out_dir = dir.path().join("t");
    assert_success(&run(&train_args(
        csv.to_str().unwrap(),
        out_dir.to_str().unwrap(),
    )));

    // A 4-class CSV against the 2-class checkpoint.
    let four = dir.path().join("four.csv");
    write_csv(
        &four,
        &[Document {
            label: 3,
            text: "out of range label".into(),
        }],
    )
    .unwrap();
    let ckpt = out_dir.join("checkpoint.pxgc");
    let out = run(&[
        "eval",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--test-csv",
        four.to_str().unwrap(),
        "--out",
        dir.path().join("e").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn eval_rejects_corrupt_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.pxgc");
    std::fs::write(&bad, b"PXGCnot really").unwrap();
    let csv = dir.path().join("t.csv");
    write_csv(
        &csv,
        &[Document {
            label: 0,
            text: "x".into(),
        }],
    )
    .unwrap();
    let out = run(&[
        "eval",
        "--checkpoint",
        bad.to_str().unwrap(),
        "--test-csv",
        csv.to_str().unwrap(),
        "--out",
        dir.path().join("e").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gradcheck_toy_exits_0() {
    let out = run(&["gradcheck", "--toy"]);
    assert_success(&out);
    let text = stdout(&out);
    assert!(text.contains("max_rel_error"));
    for line in text.lines().filter(|l| l.starts_with("e2e_f64")) {
        assert!(line.ends_with("ok"), "failed check: {line}");
    }
}

#[test]
fn resolved_config_is_echoed_before_training() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("train.csv");
    write_csv(&csv, &planted_bigram_corpus(10, 6, 7)).unwrap();
    let out_dir = dir.path().join("run");
    assert_success(&run(&train_args(
        csv.to_str().unwrap(),
        out_dir.to_str().unwrap(),
    )));
    let cfg = std::fs::read_to_string(out_dir.join("resolved.cfg")).unwrap();
    assert!(cfg.contains("command = train"));
    assert!(cfg.contains("kernels = 8"));
    assert!(cfg.contains("seed = 11"));
    // Sorted key = value lines.
    let keys: Vec<&str> = cfg
        .lines()
        .map(|l| l.split(" = ").next().unwrap())
        .collect();
    let mut sorted = keys.clone();
    sorted.sort_unstable();
    assert_eq!(keys, sorted);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.cfg");
    std::fs::write(&cfg_path, "kernels = 4\nseed = 99\n# comment\nlr = 0.01\n").unwrap();
    let csv = dir.path().join("train.csv");
    write_csv(&csv, &planted_bigram_corpus(10, 6, 8)).unwrap();
    let out_dir = dir.path().join("run");
    let out = run(&[
        "train",
        "--config",
        cfg_path.to_str().unwrap(),
        "--train-csv",
        csv.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--num-classes",
        "2",
        "--seq-len",
        "16",
        "--pool-stride",
        "1",
        "--pool-dilation",
        "1",
        "--fc1-out",
        "16",
        "--fc2-out",
        "8",
        "--max-epochs",
        "1",
        "--patience",
        "1",
        "--batch-size",
        "8",
        "--seed",
        "123",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let resolved = std::fs::read_to_string(out_dir.join("resolved.cfg")).unwrap();
    assert!(resolved.contains("kernels = 4"), "file value survives");
    assert!(resolved.contains("lr = 0.01"), "file value survives");
    assert!(resolved.contains("seed = 123"), "flag beats file");
}

#[test]
fn outputs_stay_inside_the_out_directory() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("train.csv");
    write_csv(&csv, &planted_bigram_corpus(10, 6, 9)).unwrap();
    let out_dir = dir.path().join("only_here");
    let before: Vec<_> = list_files(dir.path());
    assert_success(&run(&train_args(
        csv.to_str().unwrap(),
        out_dir.to_str().unwrap(),
    )));
    let after: Vec<_> = list_files(dir.path());
    // Everything new lives under out_dir.
    for path in after {
        if !before.contains(&path) {
            assert!(
                path.starts_with(&out_dir),
                "unexpected file outside --out: {}",
                path.display()
            );
        }
    }
}

fn list_files(root: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path.clone());
            }
            out.push(path);
        }
    }
    out
}
