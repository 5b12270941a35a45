//! Corpus ingestion: CSV loading, tokenization, splits, and assembly of
//! fixed-length word-image stacks.
//!
//! Tokenization is deliberately minimal: split on whitespace, detach leading
//! and trailing ASCII punctuation as single-character tokens, keep case, drop
//! tokens longer than 17 characters. No stemming, no stop words, no
//! vocabulary.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::glyph::{blank_frame, render_word, GlyphSet, WordImage, MAX_WORD_LEN};
use crate::rng::Rng;

/// Canonical sequence length: documents are truncated or padded to this many
/// word frames. 80 makes the default conv/pool chain produce a 1250-wide
/// flattened feature vector (50 kernels x 25 pooled positions).
pub const SEQ_LEN: usize = 80;

/// PXG1 prepared-corpus cache magic.
pub const CACHE_MAGIC: [u8; 4] = *b"PXG1";

/// One labeled text sample. `label` is 0-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub label: usize,
    pub text: String,
}

/// Ordered word stack of exactly `len` frames; frames past `valid_len` are
/// blank padding.
#[derive(Debug, Clone)]
pub struct TextVideo {
    pub frames: Vec<WordImage>,
    pub valid_len: usize,
}

/// Train/validation/test documents plus class names.
#[derive(Debug, Clone)]
pub struct DatasetSplit {
    pub train: Vec<Document>,
    pub validation: Vec<Document>,
    pub test: Vec<Document>,
    pub label_names: Vec<String>,
}

/// Whitespace split plus punctuation detachment, before the length filter.
/// Used by the length histogram, which wants to see the long tokens too.
pub fn tokenize_raw(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        let mut start = 0;
        let mut end = chars.len();
        let mut leading = Vec::new();
        let mut trailing = Vec::new();
        while start < end && chars[start].is_ascii_punctuation() {
            leading.push(chars[start].to_string());
            start += 1;
        }
        while end > start && chars[end - 1].is_ascii_punctuation() {
            trailing.push(chars[end - 1].to_string());
            end -= 1;
        }
        tokens.extend(leading);
        if start < end {
            tokens.push(chars[start..end].iter().collect());
        }
        // Trailing marks were collected right-to-left; restore text order.
        tokens.extend(trailing.into_iter().rev());
    }
    tokens
}

/// Tokenize and drop tokens longer than 17 characters.
pub fn tokenize(text: &str) -> Vec<String> {
    tokenize_raw(text)
        .into_iter()
        .filter(|t| t.chars().count() <= MAX_WORD_LEN)
        .collect()
}

/// Token length histogram over the raw tokens (before the 17-char filter).
pub fn word_length_histogram(docs: &[Document]) -> BTreeMap<usize, u64> {
    let mut hist = BTreeMap::new();
    for doc in docs {
        for tok in tokenize_raw(&doc.text) {
            *hist.entry(tok.chars().count()).or_insert(0) += 1;
        }
    }
    hist
}

// CSV handling. The expected shape is the AG-news convention: every field
// quoted, class index 1-based in the first column, `""` escapes a quote, and
// newlines are legal inside quotes.

fn parse_csv_record(
    input: &[u8],
    mut pos: usize,
    line: &mut usize,
) -> Result<Option<(Vec<String>, usize)>> {
    // Skip blank lines between records.
    while pos < input.len() && (input[pos] == b'\n' || input[pos] == b'\r') {
        if input[pos] == b'\n' {
            *line += 1;
        }
        pos += 1;
    }
    if pos >= input.len() {
        return Ok(None);
    }
    let record_line = *line;
    let mut fields = Vec::new();
    loop {
        // One field: either quoted or bare (bare fields end at ',' or EOL).
        let mut field = Vec::new();
        if input.get(pos) == Some(&b'"') {
            pos += 1;
            loop {
                match input.get(pos) {
                    None => {
                        return Err(Error::MalformedRow {
                            line: record_line,
                            reason: "unterminated quoted field".into(),
                        })
                    }
                    Some(b'"') if input.get(pos + 1) == Some(&b'"') => {
                        field.push(b'"');
                        pos += 2;
                    }
                    Some(b'"') => {
                        pos += 1;
                        break;
                    }
                    Some(&b) => {
                        if b == b'\n' {
                            *line += 1;
                        }
                        field.push(b);
                        pos += 1;
                    }
                }
            }
            match input.get(pos) {
                None | Some(b'\n') | Some(b'\r') | Some(b',') => {}
                Some(_) => {
                    return Err(Error::MalformedRow {
                        line: record_line,
                        reason: "garbage after closing quote".into(),
                    })
                }
            }
        } else {
            while let Some(&b) = input.get(pos) {
                if b == b',' || b == b'\n' || b == b'\r' {
                    break;
                }
                if b == b'"' {
                    return Err(Error::MalformedRow {
                        line: record_line,
                        reason: "quote inside unquoted field".into(),
                    });
                }
                field.push(b);
                pos += 1;
            }
        }
        fields.push(String::from_utf8_lossy(&field).into_owned());
        match input.get(pos) {
            Some(b',') => {
                pos += 1;
            }
            Some(b'\r') => {
                pos += 1;
                if input.get(pos) == Some(&b'\n') {
                    *line += 1;
                    pos += 1;
                }
                break;
            }
            Some(b'\n') => {
                *line += 1;
                pos += 1;
                break;
            }
            None => break,
            // Field scanning stops only at ',', CR, LF, or EOF.
            Some(_) => unreachable!("field terminator"),
        }
    }
    Ok(Some((fields, pos)))
}

/// Load an AG-news-style CSV: 1-based class in column 1, remaining fields
/// joined with single spaces into the document text.
pub fn load_csv(path: impl AsRef<Path>, num_classes: usize) -> Result<Vec<Document>> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    load_csv_bytes(&bytes, num_classes)
}

pub fn load_csv_bytes(bytes: &[u8], num_classes: usize) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    let mut pos = 0;
    let mut line = 1;
    while let Some((fields, next)) = parse_csv_record(bytes, pos, &mut line)? {
        let record_line = line;
        if fields.is_empty() || fields[0].is_empty() {
            return Err(Error::MalformedRow {
                line: record_line,
                reason: "missing class column".into(),
            });
        }
        let class: i64 = fields[0].trim().parse().map_err(|_| Error::MalformedRow {
            line: record_line,
            reason: format!("class {:?} is not an integer", fields[0]),
        })?;
        if class < 1 || class as usize > num_classes {
            return Err(Error::LabelOutOfRange {
                label: class,
                num_classes,
            });
        }
        let text = fields[1..].join(" ");
        docs.push(Document {
            label: (class - 1) as usize,
            text,
        });
        pos = next;
    }
    Ok(docs)
}

/// Write documents back out in the same CSV convention (used to build test
/// fixtures and the surrogate corpus files).
pub fn write_csv(path: impl AsRef<Path>, docs: &[Document]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for doc in docs {
        let escaped = doc.text.replace('"', "\"\"");
        writeln!(w, "\"{}\",\"{}\"", doc.label + 1, escaped)?;
    }
    w.flush()?;
    Ok(())
}

/// Seeded shuffle, then the first ceil(fraction * N) documents go to train.
pub fn split_train_validation(
    docs: &[Document],
    fraction: f64,
    seed: u64,
) -> (Vec<Document>, Vec<Document>) {
    assert!(
        fraction > 0.0 && fraction < 1.0,
        "fraction must be in (0,1), got {fraction}"
    );
    let mut order: Vec<usize> = (0..docs.len()).collect();
    Rng::new(seed).shuffle(&mut order);
    let n_train = (fraction * docs.len() as f64).ceil() as usize;
    let train = order[..n_train].iter().map(|&i| docs[i].clone()).collect();
    let validation = order[n_train..].iter().map(|&i| docs[i].clone()).collect();
    (train, validation)
}

/// Render the first `len` tokens into frames; the rest of the stack is blank.
pub fn make_text_video_with_len(
    tokens: &[String],
    glyphs: &GlyphSet,
    len: usize,
) -> Result<TextVideo> {
    let valid_len = tokens.len().min(len);
    let mut frames = Vec::with_capacity(len);
    for tok in &tokens[..valid_len] {
        frames.push(render_word(tok, glyphs)?);
    }
    frames.resize(len, blank_frame());
    Ok(TextVideo { frames, valid_len })
}

/// Render at the canonical sequence length of 80 frames.
pub fn make_text_video(tokens: &[String], glyphs: &GlyphSet) -> Result<TextVideo> {
    make_text_video_with_len(tokens, glyphs, SEQ_LEN)
}

/// Render the first `seq_len` tokens directly into the flat [seq_len, 2620]
/// frame matrix the numeric layers consume; padding rows stay zero. Equal to
/// flattening `make_text_video_with_len` frame by frame, without the
/// per-frame allocations.
pub fn render_frames(
    tokens: &[String],
    glyphs: &GlyphSet,
    seq_len: usize,
) -> Result<crate::tensor::Tensor<f32>> {
    use crate::glyph::{render_word_into, IMAGE_PIXELS};
    let valid = tokens.len().min(seq_len);
    let mut data = vec![0.0f32; seq_len * IMAGE_PIXELS];
    for (i, tok) in tokens[..valid].iter().enumerate() {
        render_word_into(
            tok,
            glyphs,
            &mut data[i * IMAGE_PIXELS..(i + 1) * IMAGE_PIXELS],
        )?;
    }
    crate::tensor::Tensor::from_vec(&[seq_len, IMAGE_PIXELS], data)
}

// Prepared-corpus cache: magic, u32 sequence length, then per record
// [u32 label][u32 valid_len][seq_len length-prefixed token strings], all
// little-endian. Padding slots are empty strings.

pub fn write_cache(path: impl AsRef<Path>, docs: &[Document], seq_len: usize) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&CACHE_MAGIC)?;
    w.write_all(&(seq_len as u32).to_le_bytes())?;
    for doc in docs {
        let tokens = tokenize(&doc.text);
        let valid = tokens.len().min(seq_len);
        w.write_all(&(doc.label as u32).to_le_bytes())?;
        w.write_all(&(valid as u32).to_le_bytes())?;
        for i in 0..seq_len {
            let tok = if i < valid { tokens[i].as_str() } else { "" };
            w.write_all(&(tok.len() as u32).to_le_bytes())?;
            w.write_all(tok.as_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_u32(bytes: &[u8], pos: &mut usize, what: &str) -> Result<u32> {
    let end = *pos + 4;
    if end > bytes.len() {
        return Err(Error::CorruptLength(format!("truncated {what}")));
    }
    let v = u32::from_le_bytes(bytes[*pos..end].try_into().unwrap());
    *pos = end;
    Ok(v)
}

/// Read a PXG1 cache back into documents (text is the cached tokens joined
/// with spaces; tokenization is idempotent on its own output).
pub fn read_cache(path: impl AsRef<Path>) -> Result<Vec<Document>> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    if bytes.len() < 4 || bytes[..4] != CACHE_MAGIC {
        let mut found = [0u8; 4];
        found[..bytes.len().min(4)].copy_from_slice(&bytes[..bytes.len().min(4)]);
        return Err(Error::BadMagic {
            expected: CACHE_MAGIC,
            found,
        });
    }
    let mut pos = 4;
    let seq_len = read_u32(&bytes, &mut pos, "sequence length")? as usize;
    let mut docs = Vec::new();
    while pos < bytes.len() {
        let label = read_u32(&bytes, &mut pos, "label")? as usize;
        let valid = read_u32(&bytes, &mut pos, "valid_len")? as usize;
        if valid > seq_len {
            return Err(Error::CorruptLength(format!(
                "valid_len {valid} exceeds sequence length {seq_len}"
            )));
        }
        let mut tokens = Vec::with_capacity(valid);
        for i in 0..seq_len {
            let len = read_u32(&bytes, &mut pos, "token length")? as usize;
            let end = pos + len;
            if end > bytes.len() {
                return Err(Error::CorruptLength("truncated token".into()));
            }
            let tok = std::str::from_utf8(&bytes[pos..end])
                .map_err(|_| Error::CorruptLength("token is not UTF-8".into()))?;
            pos = end;
            if i < valid {
                tokens.push(tok.to_string());
            }
        }
        docs.push(Document {
            label,
            text: tokens.join(" "),
        });
    }
    Ok(docs)
}
