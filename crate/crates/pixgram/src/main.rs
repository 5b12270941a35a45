//! Command-line entry point: rendering inspection, corpus preparation,
//! training, evaluation, interpretation, and gradient checking.
//!
//! Configuration comes from defaults, overridden by a `key = value` config
//! file (`--config`), overridden by command-line flags. The fully resolved
//! configuration is echoed to `<out>/resolved.cfg` before any work starts.
//!
//! Exit codes: 0 success, 1 usage, 2 data/config, 3 failed numeric check,
//! 4 i/o.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use pixgram::corpus::{
    load_csv, read_cache, split_train_validation, tokenize_raw, word_length_histogram, write_cache,
    DatasetSplit, Document,
};
use pixgram::error::{Error, Result};
use pixgram::glyph::{ink_fraction, render_word, GlyphSet};
use pixgram::interpret::{
    aggregate_class_phrases_with_threads, confusion_matrix_with_threads, phrase_tables_to_jsonl,
};
use pixgram::model::{
    end_to_end_grad_check, evaluate_with_threads, load_checkpoint, save_checkpoint, toy_config,
    train_with_progress, write_file_atomic, ModelConfig,
};
use pixgram::rng::Rng;

const USAGE: &str = "\
pixgram — word-image n-gram CNN text classifier

USAGE:
  pixgram render <word> <out.pgm>          render one word, print ink fraction
  pixgram dump-font --out DIR              write every glyph as a PGM
  pixgram prepare --data CSV --out DIR     tokenize a CSV into a PXG1 cache
                  [--histogram]            also write the word-length histogram
  pixgram train --train-csv CSV --out DIR  train; writes checkpoint.pxgc,
                [--cache FILE.pxg]         report.jsonl, resolved.cfg
  pixgram eval --checkpoint CKPT --test-csv CSV --out DIR
                                           accuracy + confusion.csv
  pixgram interpret --checkpoint CKPT --test-csv CSV --out DIR
                                           ranked phrases per class (JSONL)
  pixgram gradcheck [--toy]                verify gradients; exit 3 on failure

COMMON FLAGS (also valid as `key = value` lines in --config FILE):
  --config FILE     --seed N          --threads N       --out DIR
  --n N             --kernels N       --seq-len N       --num-classes N
  --dropout F       --lr F            --batch-size N    --max-epochs N
  --patience N      --val-fraction F  --class-names A,B,C
  --limit-train N   --limit-val N     --limit-test N    (0 = no limit)
  --per-doc N       --top-phrases N   --pool-kernel/--pool-stride/--pool-dilation
";

#[derive(Debug, Clone)]
struct RunConfig {
    model: ModelConfig,
    threads: usize,
    out: PathBuf,
    data: Option<PathBuf>,
    train_csv: Option<PathBuf>,
    test_csv: Option<PathBuf>,
    cache: Option<PathBuf>,
    checkpoint: Option<PathBuf>,
    class_names: Option<Vec<String>>,
    val_fraction: f64,
    limit_train: usize,
    limit_val: usize,
    limit_test: usize,
    per_doc: usize,
    top_phrases: usize,
    histogram: bool,
    toy: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelConfig::default(),
            threads: 1,
            out: PathBuf::from("out"),
            data: None,
            train_csv: None,
            test_csv: None,
            cache: None,
            checkpoint: None,
            class_names: None,
            val_fraction: 0.2,
            limit_train: 0,
            limit_val: 0,
            limit_test: 0,
            per_doc: 3,
            top_phrases: 0,
            histogram: false,
            toy: false,
        }
    }
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| usage(format!("{key}: cannot parse {value:?}")))
}

impl RunConfig {
    /// Keys accept both kebab-case and snake_case.
    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.replace('_', "-");
        match key.as_str() {
            "n" | "words-per-window" => self.model.words_per_window = parse_num(&key, value)?,
            "kernels" => self.model.kernels = parse_num(&key, value)?,
            "seq-len" => self.model.seq_len = parse_num(&key, value)?,
            "pool-kernel" => self.model.pool.kernel = parse_num(&key, value)?,
            "pool-stride" => self.model.pool.stride = parse_num(&key, value)?,
            "pool-dilation" => self.model.pool.dilation = parse_num(&key, value)?,
            "fc1-out" => self.model.fc1_out = parse_num(&key, value)?,
            "fc2-out" => self.model.fc2_out = parse_num(&key, value)?,
            "num-classes" => self.model.num_classes = parse_num(&key, value)?,
            "dropout" => self.model.dropout = parse_num(&key, value)?,
            "lr" => self.model.lr = parse_num(&key, value)?,
            "batch-size" => self.model.batch_size = parse_num(&key, value)?,
            "max-epochs" => self.model.max_epochs = parse_num(&key, value)?,
            "patience" => self.model.patience = parse_num(&key, value)?,
            "seed" => self.model.seed = parse_num(&key, value)?,
            "threads" => self.threads = parse_num(&key, value)?,
            "out" => self.out = PathBuf::from(value),
            "data" => self.data = Some(PathBuf::from(value)),
            "train-csv" => self.train_csv = Some(PathBuf::from(value)),
            "test-csv" => self.test_csv = Some(PathBuf::from(value)),
            "cache" => self.cache = Some(PathBuf::from(value)),
            "checkpoint" => self.checkpoint = Some(PathBuf::from(value)),
            "class-names" => {
                self.class_names = Some(value.split(',').map(|s| s.trim().to_string()).collect())
            }
            "val-fraction" => self.val_fraction = parse_num(&key, value)?,
            "limit-train" => self.limit_train = parse_num(&key, value)?,
            "limit-val" => self.limit_val = parse_num(&key, value)?,
            "limit-test" => self.limit_test = parse_num(&key, value)?,
            "per-doc" => self.per_doc = parse_num(&key, value)?,
            "top-phrases" => self.top_phrases = parse_num(&key, value)?,
            "histogram" => self.histogram = parse_num(&key, value)?,
            "toy" => self.toy = parse_num(&key, value)?,
            other => return Err(usage(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    fn load_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                usage(format!(
                    "{}:{}: expected key = value",
                    path.display(),
                    lineno + 1
                ))
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Every setting, sorted, one `key = value` per line.
    fn resolved(&self, command: &str) -> String {
        let m = &self.model;
        let opt = |p: &Option<PathBuf>| {
            p.as_ref()
                .map(|v| v.display().to_string())
                .unwrap_or_default()
        };
        let mut pairs = vec![
            ("batch-size".to_string(), m.batch_size.to_string()),
            ("cache".into(), opt(&self.cache)),
            (
                "class-names".into(),
                self.class_names
                    .as_ref()
                    .map(|v| v.join(","))
                    .unwrap_or_default(),
            ),
            ("checkpoint".into(), opt(&self.checkpoint)),
            ("command".into(), command.to_string()),
            ("data".into(), opt(&self.data)),
            ("dropout".into(), m.dropout.to_string()),
            ("fc1-out".into(), m.fc1_out.to_string()),
            ("fc2-out".into(), m.fc2_out.to_string()),
            ("histogram".into(), self.histogram.to_string()),
            ("kernels".into(), m.kernels.to_string()),
            ("limit-test".into(), self.limit_test.to_string()),
            ("limit-train".into(), self.limit_train.to_string()),
            ("limit-val".into(), self.limit_val.to_string()),
            ("lr".into(), m.lr.to_string()),
            ("max-epochs".into(), m.max_epochs.to_string()),
            ("n".into(), m.words_per_window.to_string()),
            ("num-classes".into(), m.num_classes.to_string()),
            ("out".into(), self.out.display().to_string()),
            ("patience".into(), m.patience.to_string()),
            ("per-doc".into(), self.per_doc.to_string()),
            ("pool-dilation".into(), m.pool.dilation.to_string()),
            ("pool-kernel".into(), m.pool.kernel.to_string()),
            ("pool-stride".into(), m.pool.stride.to_string()),
            ("seed".into(), m.seed.to_string()),
            ("seq-len".into(), m.seq_len.to_string()),
            ("test-csv".into(), opt(&self.test_csv)),
            ("threads".into(), self.threads.to_string()),
            ("top-phrases".into(), self.top_phrases.to_string()),
            ("toy".into(), self.toy.to_string()),
            ("train-csv".into(), opt(&self.train_csv)),
            ("val-fraction".into(), self.val_fraction.to_string()),
        ];
        pairs.sort();
        let mut out = String::new();
        for (k, v) in pairs {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    fn label_names(&self) -> Vec<String> {
        match &self.class_names {
            Some(names) => names.clone(),
            None => (0..self.model.num_classes)
                .map(|c| format!("class_{c}"))
                .collect(),
        }
    }

    /// Create the output directory and echo the resolved config into it.
    fn prepare_out(&self, command: &str) -> Result<()> {
        std::fs::create_dir_all(&self.out)?;
        write_file_atomic(
            self.out.join("resolved.cfg"),
            self.resolved(command).as_bytes(),
        )
    }
}

/// (command, positional args, resolved config)
fn parse_args(argv: &[String]) -> Result<(String, Vec<String>, RunConfig)> {
    if argv.is_empty() {
        return Err(usage("missing command"));
    }
    let command = argv[0].clone();
    let mut positional = Vec::new();
    let mut flags: Vec<(String, String)> = Vec::new();
    let mut config_file: Option<PathBuf> = None;
    let mut i = 1;
    while i < argv.len() {
        let arg = &argv[i];
        if let Some(key) = arg.strip_prefix("--") {
            if key == "config" {
                i += 1;
                let v = argv.get(i).ok_or_else(|| usage("--config needs a path"))?;
                config_file = Some(PathBuf::from(v));
            } else if key == "histogram" || key == "toy" {
                flags.push((key.to_string(), "true".into()));
            } else {
                i += 1;
                let v = argv
                    .get(i)
                    .ok_or_else(|| usage(format!("--{key} needs a value")))?;
                flags.push((key.to_string(), v.clone()));
            }
        } else {
            positional.push(arg.clone());
        }
        i += 1;
    }
    // Defaults, then the file, then flags: flag wins over file wins over default.
    let mut cfg = RunConfig::default();
    if let Some(path) = &config_file {
        cfg.load_file(path)?;
    }
    for (k, v) in &flags {
        cfg.set(k, v)?;
    }
    Ok((command, positional, cfg))
}

fn cmd_render(positional: &[String]) -> Result<()> {
    if positional.len() != 2 {
        return Err(usage("render <word> <out.pgm>"));
    }
    let word = &positional[0];
    let glyphs = GlyphSet::embedded();
    let img = render_word(word, &glyphs)?;
    let mut bytes = Vec::new();
    img.write_pgm(&mut bytes)?;
    write_file_atomic(&positional[1], &bytes)?;
    println!("ink_fraction {}", ink_fraction(&img));
    Ok(())
}

fn cmd_dump_font(cfg: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out)?;
    let glyphs = GlyphSet::embedded();
    for code in 32u32..=126 {
        let ch = char::from_u32(code).unwrap();
        let cell = glyphs.glyph(ch);
        let mut bytes = format!(
            "P5\n{} {}\n255\n",
            pixgram::font::GLYPH_COLS,
            pixgram::font::GLYPH_ROWS
        )
        .into_bytes();
        for row in cell.iter() {
            for c in 0..pixgram::font::GLYPH_COLS {
                bytes.push(if row & (1 << c) != 0 { 255 } else { 0 });
            }
        }
        write_file_atomic(cfg.out.join(format!("{code:03}.pgm")), &bytes)?;
    }
    println!("wrote 95 glyphs to {}", cfg.out.display());
    Ok(())
}

fn cmd_prepare(cfg: &RunConfig) -> Result<()> {
    let data = cfg
        .data
        .as_ref()
        .ok_or_else(|| usage("prepare needs --data CSV"))?;
    cfg.prepare_out("prepare")?;
    let docs = load_csv(data, cfg.model.num_classes)?;

    let mut class_counts = vec![0usize; cfg.model.num_classes];
    let mut raw_tokens = 0usize;
    let mut dropped = 0usize;
    for doc in &docs {
        class_counts[doc.label] += 1;
        for tok in tokenize_raw(&doc.text) {
            raw_tokens += 1;
            if tok.chars().count() > 17 {
                dropped += 1;
            }
        }
    }

    let cache_path = cfg.out.join("corpus.pxg");
    write_cache(&cache_path, &docs, cfg.model.seq_len)?;

    println!("documents {}", docs.len());
    for (c, count) in class_counts.iter().enumerate() {
        println!("class {} {} {}", c, cfg.label_names()[c], count);
    }
    let rate = if raw_tokens == 0 {
        0.0
    } else {
        dropped as f64 / raw_tokens as f64
    };
    println!("dropped_token_rate {rate}");
    println!("cache {}", cache_path.display());

    if cfg.histogram {
        let hist = word_length_histogram(&docs);
        let mut csv = String::from("length,count\n");
        for (len, count) in &hist {
            let _ = writeln!(csv, "{len},{count}");
        }
        let path = cfg.out.join("histogram.csv");
        write_file_atomic(&path, csv.as_bytes())?;
        println!("histogram {}", path.display());
    }
    Ok(())
}

fn load_training_documents(cfg: &RunConfig) -> Result<Vec<Document>> {
    if let Some(cache) = &cfg.cache {
        return read_cache(cache);
    }
    if let Some(csv) = &cfg.train_csv {
        return load_csv(csv, cfg.model.num_classes);
    }
    Err(usage("train needs --train-csv CSV or --cache FILE.pxg"))
}

fn cmd_train(cfg: &RunConfig) -> Result<()> {
    cfg.prepare_out("train")?;
    let docs = load_training_documents(cfg)?;
    let (mut train_docs, mut val_docs) =
        split_train_validation(&docs, 1.0 - cfg.val_fraction, cfg.model.seed);
    if cfg.limit_train > 0 {
        train_docs.truncate(cfg.limit_train);
    }
    if cfg.limit_val > 0 {
        val_docs.truncate(cfg.limit_val);
    }
    let split = DatasetSplit {
        train: train_docs,
        validation: val_docs,
        test: Vec::new(),
        label_names: cfg.label_names(),
    };
    println!(
        "training on {} documents, validating on {}",
        split.train.len(),
        split.validation.len()
    );
    let (checkpoint, report) = train_with_progress(&split, &cfg.model, |e| {
        println!(
            "epoch {} train_loss {} val_acc {} seconds {:.1}",
            e.epoch, e.train_loss, e.val_acc, e.seconds
        );
    })?;
    let ckpt_path = cfg.out.join("checkpoint.pxgc");
    save_checkpoint(
        &checkpoint.params,
        &checkpoint.config,
        &checkpoint.label_names,
        &ckpt_path,
    )?;
    write_file_atomic(cfg.out.join("report.jsonl"), report.to_jsonl().as_bytes())?;
    println!(
        "best_epoch {} val_acc {} total_seconds {:.1}",
        report.best_epoch,
        report.epochs[report.best_epoch - 1].val_acc,
        report.total_seconds
    );
    println!("checkpoint {}", ckpt_path.display());
    Ok(())
}

fn load_eval_documents(cfg: &RunConfig, num_classes: usize) -> Result<Vec<Document>> {
    let mut docs = if let Some(csv) = &cfg.test_csv {
        load_csv(csv, num_classes)?
    } else if let Some(cache) = &cfg.cache {
        read_cache(cache)?
    } else {
        return Err(usage("need --test-csv CSV or --cache FILE.pxg"));
    };
    if cfg.limit_test > 0 && cfg.limit_test < docs.len() {
        let mut order: Vec<usize> = (0..docs.len()).collect();
        Rng::stream(cfg.model.seed, 3).shuffle(&mut order);
        docs = order[..cfg.limit_test]
            .iter()
            .map(|&i| docs[i].clone())
            .collect();
    }
    Ok(docs)
}

fn cmd_eval(cfg: &RunConfig) -> Result<()> {
    let ckpt_path = cfg
        .checkpoint
        .as_ref()
        .ok_or_else(|| usage("eval needs --checkpoint FILE.pxgc"))?;
    cfg.prepare_out("eval")?;
    let checkpoint = load_checkpoint(ckpt_path)?;
    let docs = load_eval_documents(cfg, checkpoint.config.num_classes)?;
    let (accuracy, _) = evaluate_with_threads(&docs, &checkpoint, cfg.threads)?;
    let matrix = confusion_matrix_with_threads(&docs, &checkpoint, cfg.threads)?;
    write_file_atomic(
        cfg.out.join("confusion.csv"),
        matrix.to_csv(&checkpoint.label_names).as_bytes(),
    )?;
    write_file_atomic(
        cfg.out.join("accuracy.txt"),
        format!("test_accuracy {accuracy}\n").as_bytes(),
    )?;
    println!("documents {}", docs.len());
    println!("test_accuracy {accuracy}");
    println!("confusion {}", cfg.out.join("confusion.csv").display());
    Ok(())
}

fn cmd_interpret(cfg: &RunConfig) -> Result<()> {
    let ckpt_path = cfg
        .checkpoint
        .as_ref()
        .ok_or_else(|| usage("interpret needs --checkpoint FILE.pxgc"))?;
    cfg.prepare_out("interpret")?;
    let checkpoint = load_checkpoint(ckpt_path)?;
    let docs = load_eval_documents(cfg, checkpoint.config.num_classes)?;
    let mut tables =
        aggregate_class_phrases_with_threads(&docs, &checkpoint, cfg.per_doc, cfg.threads)?;
    if cfg.top_phrases > 0 {
        for table in &mut tables {
            table.phrases.truncate(cfg.top_phrases);
        }
    }
    let path = cfg.out.join("phrases.jsonl");
    write_file_atomic(
        &path,
        phrase_tables_to_jsonl(&tables, &checkpoint.label_names).as_bytes(),
    )?;
    for table in &tables {
        let top = table
            .phrases
            .first()
            .map(|p| p.phrase.as_str())
            .unwrap_or("-");
        println!(
            "class {} {} top_phrase {}",
            table.class, checkpoint.label_names[table.class], top
        );
    }
    println!("phrases {}", path.display());
    Ok(())
}

fn cmd_gradcheck(cfg: &RunConfig) -> Result<()> {
    let toy = toy_config();
    let mut failed = false;
    let mut worst = 0.0f64;

    // End-to-end, 64-bit, h=1e-5, threshold 1e-4.
    for (name, err) in end_to_end_grad_check::<f64>(&toy, cfg.model.seed, 1e-5)? {
        let ok = err < 1e-4;
        failed |= !ok;
        worst = worst.max(err);
        println!(
            "e2e_f64 {name} max_rel_error {err:.3e} threshold 1.0e-4 {}",
            if ok { "ok" } else { "FAIL" }
        );
    }
    if !cfg.toy {
        // End-to-end in 32-bit at the loose tolerance.
        for (name, err) in end_to_end_grad_check::<f32>(&toy, cfg.model.seed, 1e-2)? {
            let ok = err < 5e-2;
            failed |= !ok;
            println!(
                "e2e_f32 {name} max_rel_error {err:.3e} threshold 5.0e-2 {}",
                if ok { "ok" } else { "FAIL" }
            );
        }
    }
    println!("max_rel_error {worst:.3e}");
    if failed {
        return Err(Error::GradCheckFailed {
            max_rel_error: worst,
            threshold: 1e-4,
        });
    }
    Ok(())
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Usage(_) => 1,
        Error::GradCheckFailed { .. } => 3,
        Error::Io(_) => 4,
        _ => 2,
    }
}

fn run() -> Result<()> {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let (command, positional, cfg) = parse_args(&argv)?;
    match command.as_str() {
        "render" => cmd_render(&positional),
        "dump-font" => cmd_dump_font(&cfg),
        "prepare" => cmd_prepare(&cfg),
        "train" => cmd_train(&cfg),
        "eval" => cmd_eval(&cfg),
        "interpret" => cmd_interpret(&cfg),
        "gradcheck" => cmd_gradcheck(&cfg),
        "help" | "--help" | "-h" => {
            print!("{USAGE}");
            Ok(())
        }
        other => Err(usage(format!("unknown command {other:?}"))),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Usage(msg)) => {
            eprintln!("error: {msg}\n");
            eprint!("{USAGE}");
            ExitCode::from(1)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
