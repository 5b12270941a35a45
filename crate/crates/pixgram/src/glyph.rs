//! Word rendering: fixed-size glyph images for words of up to 17 characters.
//!
//! Every word becomes a 20x131 binary image. Characters advance by exactly 7
//! columns from column 0, the 13-row glyph cell sits at a fixed vertical
//! offset, and unknown characters draw a solid box, so rendering is bit-exact
//! across platforms and runs.

use std::io::Write;

use crate::error::{Error, Result};
use crate::font::{FALLBACK_GLYPH, FONT, GLYPH_COLS, GLYPH_ROWS};

/// Image height in pixels.
pub const IMAGE_ROWS: usize = 20;
/// Image width in pixels; fits 17 characters at advance 7 (119 <= 131).
pub const IMAGE_COLS: usize = 131;
/// Pixels per word image.
pub const IMAGE_PIXELS: usize = IMAGE_ROWS * IMAGE_COLS;
/// Maximum word length, in characters.
pub const MAX_WORD_LEN: usize = 17;
/// Horizontal advance per character, equal to the glyph cell width.
pub const CELL_ADVANCE: usize = GLYPH_COLS;

/// One glyph as 13 row bitmasks; bit `c` set means column `c` is ink.
type GlyphRows = [u16; GLYPH_ROWS];

/// Parsed bitmap font: one glyph per printable ASCII code point plus a
/// fallback box for everything else.
#[derive(Debug, Clone)]
pub struct GlyphSet {
    glyphs: Vec<GlyphRows>, // indexed by code - 32, length 95
    fallback: GlyphRows,
    /// Top image row of the glyph cell; the 13-row cell is centered in the
    /// 20-row frame.
    pub baseline_row: usize,
    pub cell_advance: usize,
}

fn parse_rows(rows: &[&str; GLYPH_ROWS], what: &str) -> GlyphRows {
    let mut out = [0u16; GLYPH_ROWS];
    for (r, line) in rows.iter().enumerate() {
        assert_eq!(
            line.len(),
            GLYPH_COLS,
            "font table: {what} row {r} is {} columns, want {GLYPH_COLS}",
            line.len()
        );
        for (c, ch) in line.bytes().enumerate() {
            match ch {
                b'#' => out[r] |= 1 << c,
                b'.' => {}
                other => panic!("font table: {what} row {r} has byte {other:#x}"),
            }
        }
    }
    out
}

impl GlyphSet {
    /// Parse the embedded font table. Panics if the table is malformed; the
    /// table is compile-time data, so that is a build defect, not an input
    /// error.
    pub fn embedded() -> GlyphSet {
        let mut glyphs = vec![[0u16; GLYPH_ROWS]; 95];
        let mut seen = [false; 95];
        for (ch, rows) in FONT.iter() {
            let code = *ch as u32;
            assert!(
                (32..=126).contains(&code),
                "font table: {ch:?} outside printable ASCII"
            );
            let idx = (code - 32) as usize;
            assert!(!seen[idx], "font table: duplicate glyph for {ch:?}");
            seen[idx] = true;
            glyphs[idx] = parse_rows(rows, &format!("{ch:?}"));
        }
        assert!(
            seen.iter().all(|&s| s),
            "font table: missing glyphs in 32..=126"
        );
        GlyphSet {
            glyphs,
            fallback: parse_rows(&FALLBACK_GLYPH, "fallback"),
            baseline_row: (IMAGE_ROWS - GLYPH_ROWS) / 2,
            cell_advance: CELL_ADVANCE,
        }
    }

    /// Row bitmasks for `ch`; the fallback box outside 32..=126.
    pub fn glyph(&self, ch: char) -> &GlyphRows {
        let code = ch as u32;
        if (32..=126).contains(&code) {
            &self.glyphs[(code - 32) as usize]
        } else {
            &self.fallback
        }
    }

    /// Number of ink pixels in the glyph cell for `ch`.
    pub fn ink_pixels(&self, ch: char) -> usize {
        self.glyph(ch)
            .iter()
            .map(|row| row.count_ones() as usize)
            .sum()
    }
}

/// A rendered word: 20x131 grayscale frame with every pixel 0.0 or 1.0.
#[derive(Debug, Clone, PartialEq)]
pub struct WordImage {
    pixels: Vec<f32>, // row-major, IMAGE_ROWS x IMAGE_COLS
}

impl WordImage {
    pub fn pixels(&self) -> &[f32] {
        &self.pixels
    }

    pub fn at(&self, row: usize, col: usize) -> f32 {
        self.pixels[row * IMAGE_COLS + col]
    }

    /// PGM P5, maxval 255, ink as 255 on a 0 background.
    pub fn write_pgm(&self, w: &mut impl Write) -> std::io::Result<()> {
        write!(w, "P5\n{IMAGE_COLS} {IMAGE_ROWS}\n255\n")?;
        let bytes: Vec<u8> = self
            .pixels
            .iter()
            .map(|&p| if p > 0.0 { 255 } else { 0 })
            .collect();
        w.write_all(&bytes)
    }
}

/// The all-zero frame used to pad sequences; identical to rendering "".
pub fn blank_frame() -> WordImage {
    WordImage {
        pixels: vec![0.0; IMAGE_PIXELS],
    }
}

/// Blit `word` into a zeroed 20x131 pixel buffer, left-aligned at column 0,
/// one glyph cell per character; character `i` touches only columns
/// `[7i, 7i+7)`. This is the allocation-free path the training loop uses to
/// render straight into batch tensors.
pub fn render_word_into(word: &str, glyphs: &GlyphSet, pixels: &mut [f32]) -> Result<()> {
    let len = word.chars().count();
    if len > MAX_WORD_LEN {
        return Err(Error::WordTooLong {
            len,
            limit: MAX_WORD_LEN,
        });
    }
    assert_eq!(pixels.len(), IMAGE_PIXELS);
    for (i, ch) in word.chars().enumerate() {
        let cell = glyphs.glyph(ch);
        let col0 = i * glyphs.cell_advance;
        for (r, rowbits) in cell.iter().enumerate() {
            if *rowbits == 0 {
                continue;
            }
            let base = (glyphs.baseline_row + r) * IMAGE_COLS + col0;
            for c in 0..GLYPH_COLS {
                if rowbits & (1 << c) != 0 {
                    pixels[base + c] = 1.0;
                }
            }
        }
    }
    Ok(())
}

/// Render `word` as a standalone frame.
pub fn render_word(word: &str, glyphs: &GlyphSet) -> Result<WordImage> {
    let mut img = blank_frame();
    render_word_into(word, glyphs, &mut img.pixels)?;
    Ok(img)
}

/// Fraction of ink pixels over the full 20x131 frame.
pub fn ink_fraction(img: &WordImage) -> f64 {
    let ink = img.pixels.iter().filter(|&&p| p > 0.0).count();
    ink as f64 / IMAGE_PIXELS as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn font_table_is_complete_and_well_formed() {
        let set = GlyphSet::embedded();
        assert_eq!(set.baseline_row, 3);
        assert_eq!(set.cell_advance, 7);
        // Space must be the empty glyph so " " renders blank.
        assert_eq!(set.ink_pixels(' '), 0);
        // Every printable glyph except space has some ink.
        for code in 33u32..=126 {
            let ch = char::from_u32(code).unwrap();
            assert!(set.ink_pixels(ch) > 0, "glyph {ch:?} is empty");
        }
    }

    #[test]
    fn every_glyph_shape_is_distinct() {
        // The representation is the shape; two characters sharing a bitmap
        // would be indistinguishable to the model.
        let set = GlyphSet::embedded();
        let mut seen = std::collections::HashMap::new();
        for code in 32u32..=126 {
            let ch = char::from_u32(code).unwrap();
            if let Some(prev) = seen.insert(*set.glyph(ch), ch) {
                panic!("glyphs {prev:?} and {ch:?} share a bitmap");
            }
        }
    }

    #[test]
    fn empty_word_is_all_zero() {
        let set = GlyphSet::embedded();
        let img = render_word("", &set).unwrap();
        assert!(img.pixels().iter().all(|&p| p == 0.0));
        assert_eq!(img.pixels().len(), IMAGE_PIXELS);
    }

    #[test]
    fn single_space_renders_blank() {
        let set = GlyphSet::embedded();
        let img = render_word(" ", &set).unwrap();
        assert_eq!(img, blank_frame());
    }

    #[test]
    fn blank_frame_equals_render_of_empty_word() {
        let set = GlyphSet::embedded();
        assert_eq!(blank_frame(), render_word("", &set).unwrap());
        assert_eq!(ink_fraction(&blank_frame()), 0.0);
    }

    #[test]
    fn ab_and_ba_are_column_block_permutations() {
        let set = GlyphSet::embedded();
        let ab = render_word("ab", &set).unwrap();
        let ba = render_word("ba", &set).unwrap();
        for r in 0..IMAGE_ROWS {
            for c in 0..7 {
                assert_eq!(
                    ab.at(r, c),
                    ba.at(r, c + 7),
                    "a block mismatch at ({r},{c})"
                );
                assert_eq!(
                    ab.at(r, c + 7),
                    ba.at(r, c),
                    "b block mismatch at ({r},{c})"
                );
            }
            for c in 14..IMAGE_COLS {
                assert_eq!(ab.at(r, c), 0.0);
                assert_eq!(ba.at(r, c), 0.0);
            }
        }
    }

    #[test]
    fn ink_fraction_of_m_matches_bit_count_of_the_table() {
        // Independent oracle: count '#' cells straight from the font table.
        let expected_ink: usize = FONT
            .iter()
            .find(|(ch, _)| *ch == 'M')
            .map(|(_, rows)| {
                rows.iter()
                    .map(|r| r.bytes().filter(|&b| b == b'#').count())
                    .sum()
            })
            .unwrap();
        let set = GlyphSet::embedded();
        let img = render_word("M", &set).unwrap();
        let got = ink_fraction(&img);
        assert!(expected_ink > 0);
        assert_eq!(got, expected_ink as f64 / IMAGE_PIXELS as f64);
    }

    #[test]
    fn word_too_long_is_rejected() {
        let set = GlyphSet::embedded();
        let word: String = "internationalizing".into(); // 18 chars
        assert_eq!(word.chars().count(), 18);
        match render_word(&word, &set) {
            Err(Error::WordTooLong { len: 18, limit: 17 }) => {}
            other => panic!("expected WordTooLong, got {other:?}"),
        }
        // 17 characters is still fine.
        assert!(render_word(&"a".repeat(17), &set).is_ok());
    }

    #[test]
    fn rendering_is_deterministic() {
        let set = GlyphSet::embedded();
        for word in ["Iraq", "hello,world", "MiXeD", "~\u{1F600}~"] {
            let a = render_word(word, &set).unwrap();
            let b = render_word(word, &set).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn pixels_are_binary_and_word_stays_in_its_columns() {
        let set = GlyphSet::embedded();
        let img = render_word("Iraq", &set).unwrap();
        assert!(img.pixels().iter().all(|&p| p == 0.0 || p == 1.0));
        // 4 glyphs x 7 advance: all ink inside columns [0, 28).
        for r in 0..IMAGE_ROWS {
            for c in 28..IMAGE_COLS {
                assert_eq!(img.at(r, c), 0.0);
            }
        }
        assert!(ink_fraction(&img) > 0.0);
    }

    #[test]
    fn changing_one_character_touches_only_its_column_block() {
        let set = GlyphSet::embedded();
        let a = render_word("finance", &set).unwrap();
        let b = render_word("fixance", &set).unwrap(); // index 2 changed
        for r in 0..IMAGE_ROWS {
            for c in 0..IMAGE_COLS {
                let in_block = (14..21).contains(&c);
                if !in_block {
                    assert_eq!(a.at(r, c), b.at(r, c), "leak outside block at ({r},{c})");
                }
            }
        }
    }

    #[test]
    fn unknown_character_renders_the_fallback_box() {
        let set = GlyphSet::embedded();
        let img = render_word("\u{00e9}", &set).unwrap(); // e-acute, outside ASCII
                                                          // Solid 7x13 box at the cell position.
        for r in 0..GLYPH_ROWS {
            for c in 0..GLYPH_COLS {
                assert_eq!(img.at(set.baseline_row + r, c), 1.0);
            }
        }
    }

    #[test]
    fn pgm_header_and_payload_shape() {
        let set = GlyphSet::embedded();
        let img = render_word("Iraq", &set).unwrap();
        let mut buf = Vec::new();
        img.write_pgm(&mut buf).unwrap();
        assert!(buf.starts_with(b"P5\n131 20\n255\n"));
        assert_eq!(buf.len(), b"P5\n131 20\n255\n".len() + IMAGE_PIXELS);
    }
}
