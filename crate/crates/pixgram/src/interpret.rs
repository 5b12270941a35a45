//! Reading the detector back out: which n-grams made a kernel fire.
//!
//! The conv layer's response matrix is taken before pooling and activation;
//! the strongest responses, restricted to real (non-padding) positions, name
//! the n-grams the trained kernels react to. Per-class aggregation over a
//! labeled corpus yields the ranked phrase tables behind word-cloud style
//! summaries.

use std::collections::HashMap;

use crate::conv::{conv_forward, frames_tensor, FeatureMap};
use crate::corpus::{make_text_video_with_len, tokenize, Document, TextVideo};
use crate::error::{Error, Result};
use crate::glyph::GlyphSet;
use crate::model::{evaluate_with_threads, Checkpoint};

/// One strongly responding n-gram occurrence.
#[derive(Debug, Clone, PartialEq)]
pub struct NgramHit {
    /// The n tokens joined with underscores.
    pub phrase: String,
    pub kernel: usize,
    pub position: usize,
    pub response: f32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhraseEntry {
    pub phrase: String,
    /// Sum of winning responses, clamped at zero per hit.
    pub weight: f64,
    pub count: u64,
}

/// Ranked phrases for one class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassPhraseTable {
    pub class: usize,
    /// Sorted by weight descending (count, then phrase, break ties).
    pub phrases: Vec<PhraseEntry>,
}

/// Counts[true][predicted].
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    counts: Vec<u64>,
    num_classes: usize,
}

impl ConfusionMatrix {
    pub fn new(num_classes: usize) -> Self {
        ConfusionMatrix {
            counts: vec![0; num_classes * num_classes],
            num_classes,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn at(&self, true_class: usize, predicted: usize) -> u64 {
        self.counts[true_class * self.num_classes + predicted]
    }

    fn bump(&mut self, true_class: usize, predicted: usize) {
        self.counts[true_class * self.num_classes + predicted] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn diagonal_sum(&self) -> u64 {
        (0..self.num_classes).map(|i| self.at(i, i)).sum()
    }

    pub fn row_sum(&self, true_class: usize) -> u64 {
        (0..self.num_classes).map(|p| self.at(true_class, p)).sum()
    }

    /// CSV with a header row of predicted class names and one row per true
    /// class.
    pub fn to_csv(&self, label_names: &[String]) -> String {
        let mut out = String::new();
        for name in label_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for t in 0..self.num_classes {
            out.push_str(&label_names[t]);
            for p in 0..self.num_classes {
                out.push_str(&format!(",{}", self.at(t, p)));
            }
            out.push('\n');
        }
        out
    }
}

fn check_video(video: &TextVideo, checkpoint: &Checkpoint) -> Result<()> {
    let cfg = &checkpoint.config;
    if video.frames.len() != cfg.seq_len {
        return Err(Error::ConfigMismatch(format!(
            "video has {} frames, checkpoint wants {}",
            video.frames.len(),
            cfg.seq_len
        )));
    }
    if cfg.frame_pixels() != crate::glyph::IMAGE_PIXELS {
        return Err(Error::ConfigMismatch(format!(
            "checkpoint frame is {}x{}, rendered frames are {}x{}",
            cfg.img_rows,
            cfg.img_cols,
            crate::glyph::IMAGE_ROWS,
            crate::glyph::IMAGE_COLS
        )));
    }
    Ok(())
}

/// The raw conv response matrix for one document: no pooling, no activation.
pub fn extract_feature_map(video: &TextVideo, checkpoint: &Checkpoint) -> Result<FeatureMap<f32>> {
    check_video(video, checkpoint)?;
    conv_forward(&frames_tensor(video), &checkpoint.params.conv)
}

/// Strongest n-gram occurrences of one document, best kernel per position,
/// ranked by response (ties: earlier position, then lower kernel index).
/// Positions whose window would touch a padding frame are excluded.
pub fn top_ngrams(
    video: &TextVideo,
    tokens: &[String],
    checkpoint: &Checkpoint,
    m: usize,
) -> Result<Vec<NgramHit>> {
    assert!(m >= 1, "need at least one hit");
    let n = checkpoint.config.words_per_window;
    if video.valid_len < n {
        return Err(Error::SequenceTooShort(format!(
            "{} valid frames cannot hold a {n}-gram",
            video.valid_len
        )));
    }
    let map = extract_feature_map(video, checkpoint)?;
    // Candidate positions: j + n <= valid_len, padding never participates.
    let positions = video.valid_len - n + 1;
    let mut best: Vec<(usize, usize, f32)> = Vec::with_capacity(positions);
    for j in 0..positions {
        let mut kernel = 0;
        let mut response = map.at(0, j);
        for i in 1..map.kernels() {
            if map.at(i, j) > response {
                response = map.at(i, j);
                kernel = i;
            }
        }
        best.push((j, kernel, response));
    }
    best.sort_by(|a, b| {
        b.2.total_cmp(&a.2)
            .then_with(|| a.0.cmp(&b.0))
            .then_with(|| a.1.cmp(&b.1))
    });
    Ok(best
        .into_iter()
        .take(m)
        .map(|(j, kernel, response)| NgramHit {
            phrase: tokens[j..j + n].join("_"),
            kernel,
            position: j,
            response,
        })
        .collect())
}

/// Aggregate each document's top hits into its true class's phrase table.
/// Negative responses are clamped to zero in the weight; documents shorter
/// than the window contribute nothing.
pub fn aggregate_class_phrases(
    docs: &[Document],
    checkpoint: &Checkpoint,
    per_doc: usize,
) -> Result<Vec<ClassPhraseTable>> {
    aggregate_class_phrases_with_threads(docs, checkpoint, per_doc, 1)
}

pub fn aggregate_class_phrases_with_threads(
    docs: &[Document],
    checkpoint: &Checkpoint,
    per_doc: usize,
    threads: usize,
) -> Result<Vec<ClassPhraseTable>> {
    assert!(per_doc >= 1, "need at least one hit per document");
    let num_classes = checkpoint.config.num_classes;
    let glyphs = GlyphSet::embedded();

    let hits_of = |doc: &Document| -> Result<Option<(usize, Vec<NgramHit>)>> {
        if doc.label >= num_classes {
            return Err(Error::LabelOutOfRange {
                label: doc.label as i64,
                num_classes,
            });
        }
        let tokens = tokenize(&doc.text);
        let video = make_text_video_with_len(&tokens, &glyphs, checkpoint.config.seq_len)?;
        if video.valid_len < checkpoint.config.words_per_window {
            return Ok(None);
        }
        let hits = top_ngrams(&video, &tokens, checkpoint, per_doc)?;
        Ok(Some((doc.label, hits)))
    };

    let threads = threads.max(1).min(docs.len().max(1));
    let per_doc_hits: Vec<Option<(usize, Vec<NgramHit>)>> = if threads == 1 {
        docs.iter().map(&hits_of).collect::<Result<_>>()?
    } else {
        let chunk_len = docs.len().div_ceil(threads);
        let results: Vec<Result<Vec<Option<(usize, Vec<NgramHit>)>>>> =
            std::thread::scope(|scope| {
                let handles: Vec<_> = docs
                    .chunks(chunk_len)
                    .map(|chunk| scope.spawn(|| chunk.iter().map(&hits_of).collect()))
                    .collect();
                handles.into_iter().map(|h| h.join().unwrap()).collect()
            });
        let mut merged = Vec::with_capacity(docs.len());
        for r in results {
            merged.extend(r?);
        }
        merged
    };

    let mut tables: Vec<HashMap<String, (f64, u64)>> = vec![HashMap::new(); num_classes];
    for entry in per_doc_hits.into_iter().flatten() {
        let (label, hits) = entry;
        for hit in hits {
            let slot = tables[label].entry(hit.phrase).or_insert((0.0, 0));
            slot.0 += f64::from(hit.response.max(0.0));
            slot.1 += 1;
        }
    }

    Ok(tables
        .into_iter()
        .enumerate()
        .map(|(class, map)| {
            let mut phrases: Vec<PhraseEntry> = map
                .into_iter()
                .map(|(phrase, (weight, count))| PhraseEntry {
                    phrase,
                    weight,
                    count,
                })
                .collect();
            phrases.sort_by(|a, b| {
                b.weight
                    .total_cmp(&a.weight)
                    .then_with(|| b.count.cmp(&a.count))
                    .then_with(|| a.phrase.cmp(&b.phrase))
            });
            ClassPhraseTable { class, phrases }
        })
        .collect())
}

/// JSON lines: {"class": ..., "phrase": ..., "weight": ..., "count": ...,
/// "rank": ...}, rank starting at 1 within each class.
pub fn phrase_tables_to_jsonl(tables: &[ClassPhraseTable], label_names: &[String]) -> String {
    let mut out = String::new();
    for table in tables {
        for (rank, entry) in table.phrases.iter().enumerate() {
            out.push_str(&format!(
                "{{\"class\":\"{}\",\"phrase\":\"{}\",\"weight\":{},\"count\":{},\"rank\":{}}}\n",
                json_escape(&label_names[table.class]),
                json_escape(&entry.phrase),
                entry.weight,
                entry.count,
                rank + 1
            ));
        }
    }
    out
}

pub fn json_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out
}

/// Confusion counts under the checkpoint's prediction rule.
pub fn confusion_matrix(docs: &[Document], checkpoint: &Checkpoint) -> Result<ConfusionMatrix> {
    confusion_matrix_with_threads(docs, checkpoint, 1)
}

pub fn confusion_matrix_with_threads(
    docs: &[Document],
    checkpoint: &Checkpoint,
    threads: usize,
) -> Result<ConfusionMatrix> {
    let num_classes = checkpoint.config.num_classes;
    for doc in docs {
        if doc.label >= num_classes {
            return Err(Error::LabelOutOfRange {
                label: doc.label as i64,
                num_classes,
            });
        }
    }
    let (_, predictions) = evaluate_with_threads(docs, checkpoint, threads)?;
    let mut matrix = ConfusionMatrix::new(num_classes);
    for (doc, &pred) in docs.iter().zip(&predictions) {
        matrix.bump(doc.label, pred);
    }
    Ok(matrix)
}
