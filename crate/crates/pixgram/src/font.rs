//! Embedded monospace bitmap font, 7x13 cell, printable ASCII 32..=126.
//!
//! Glyph ink lives in columns 0..=4 (column 5..=6 give inter-character
//! spacing at the fixed advance of 7). `#` is ink, `.` is background. The
//! table is the single source of truth for word rendering; nothing else in
//! the crate draws pixels.

pub const GLYPH_ROWS: usize = 13;
pub const GLYPH_COLS: usize = 7;

/// Solid block drawn for characters outside 32..=126.
#[rustfmt::skip]
pub static FALLBACK_GLYPH: [&str; GLYPH_ROWS] = [
    "#######", "#######", "#######", "#######", "#######", "#######", "#######", "#######",
    "#######", "#######", "#######", "#######", "#######",
];

/// (character, 13 rows of 7 columns).
#[rustfmt::skip]
pub static FONT: [(char, [&str; GLYPH_ROWS]); 95] = [
    (' ', [
        ".......", ".......", ".......", ".......", ".......", ".......", ".......", ".......",
        ".......", ".......", ".......", ".......", ".......",
    ]),
    ('!', [
        ".......", "..#....", "..#....", "..#....", "..#....", "..#....", "..#....", "..#....",
        ".......", "..#....", ".......", ".......", ".......",
    ]),
    ('"', [
        ".......", ".#.#...", ".#.#...", ".#.#...", ".......", ".......", ".......", ".......",
        ".......", ".......", ".......", ".......", ".......",
    ]),
    ('#', [
        ".......", ".......", ".#.#...", ".#.#...", "#####..", ".#.#...", ".#.#...", "#####..",
        ".#.#...", ".#.#...", ".......", ".......", ".......",
    ]),
    ('$', [
        ".......", "..#....", ".####..", "#.#....", "#.#....", ".###...", "..#.#..", "..#.#..",
        "####...", "..#....", ".......", ".......", ".......",
    ]),
    ('%', [
        ".......", "##.....", "##..#..", "...#...", "...#...", "..#....", ".#.....", ".#.....",
        "#..##..", "...##..", ".......", ".......", ".......",
    ]),
    ('&', [
        ".......", ".##....", "#..#...", "#..#...", ".##....", ".#.....", "#.#.#..", "#..#...",
        "#..#...", ".##.#..", ".......", ".......", ".......",
    ]),
    ('\'', [
        ".......", "..#....", "..#....", ".#.....", ".......", ".......", ".......", ".......",
        ".......", ".......", ".......", ".......", ".......",
    ]),
    ('(', [
        ".......", "...#...", "..#....", ".#.....", ".#.....", ".#.....", ".#.....", ".#.....",
        ".#.....", ".#.....", "..#....", "...#...", ".......",
    ]),
    (')', [
        ".......", ".#.....", "..#....", "...#...", "...#...", "...#...", "...#...", "...#...",
        "...#...", "...#...", "..#....", ".#.....", ".......",
    ]),
    ('*', [
        ".......", ".......", ".......", "..#....", "#.#.#..", ".###...", "#.#.#..", "..#....",
        ".......", ".......", ".......", ".......", ".......",
    ]),
    ('+', [
        ".......", ".......", ".......", ".......", "..#....", "..#....", "#####..", "..#....",
        "..#....", ".......", ".......", ".......", ".......",
    ]),
    (',', [
        ".......", ".......", ".......", ".......", ".......", ".......", ".......", ".......",
        ".......", ".##....", "..#....", ".#.....", ".......",
    ]),
    ('-', [
        ".......", ".......", ".......", ".......", ".......", ".......", "#####..", ".......",
        ".......", ".......", ".......", ".......", ".......",
    ]),
    ('.', [
        ".......", ".......", ".......", ".......", ".......", ".......", ".......", ".......",
        ".##....", ".##....", ".......", ".......", ".......",
    ]),
    ('/', [
        ".......", "....#..", "....#..", "...#...", "...#...", "..#....", "..#....", ".#.....",
        ".#.....", "#......", ".......", ".......", ".......",
    ]),
    ('0', [
        ".......", ".###...", "#...#..", "#..##..", "#..##..", "#.#.#..", "##..#..", "##..#..",
        "#...#..", ".###...", ".......", ".......", ".......",
    ]),
    ('1', [
        ".......", "..#....", ".##....", "#.#....", "..#....", "..#....", "..#....", "..#....",
        "..#....", "#####..", ".......", ".......", ".......",
    ]),
    ('2', [
        ".......", ".###...", "#...#..", "....#..", "....#..", "...#...", "..#....", ".#.....",
        "#......", "#####..", ".......", ".......", ".......",
    ]),
    ('3', [
        ".......", ".###...", "#...#..", "....#..", "....#..", "..##...", "....#..", "....#..",
        "#...#..", ".###...", ".......", ".......", ".......",
    ]),
    ('4', [
        ".......", "...#...", "..##...", ".#.#...", "#..#...", "#..#...", "#####..", "...#...",
        "...#...", "...#...", ".......", ".......", ".......",
    ]),
    ('5', [
        ".......", "#####..", "#......", "#......", "####...", "....#..", "....#..", "....#..",
        "#...#..", ".###...", ".......", ".......", ".......",
    ]),
    ('6', [
        ".......", ".###...", "#...#..", "#......", "#......", "####...", "#...#..", "#...#..",
        "#...#..", ".###...", ".......", ".......", ".......",
    ]),
    ('7', [
        ".......", "#####..", "....#..", "....#..", "...#...", "...#...", "..#....", "..#....",
        ".#.....", ".#.....", ".......", ".......", ".......",
    ]),
    ('8', [
        ".......", ".###...", "#...#..", "#...#..", "#...#..", ".###...", "#...#..", "#...#..",
        "#...#..", ".###...", ".......", ".......", ".......",
    ]),
    ('9', [
        ".......", ".###...", "#...#..", "#...#..", "#...#..", ".####..", "....#..", "....#..",
        "#...#..", ".###...", ".......", ".......", ".......",
    ]),
    (':', [
        ".......", ".......", ".......", ".......", ".##....", ".##....", ".......", ".......",
        ".##....", ".##....", ".......", ".......", ".......",
    ]),
    (';', [
        ".......", ".......", ".......", ".......", ".##....", ".##....", ".......", ".......",
        ".......", ".##....", "..#....", ".#.....", ".......",
    ]),
    ('<', [
        ".......", ".......", ".......", "....#..", "...#...", "..#....", ".#.....", "..#....",
        "...#...", "....#..", ".......", ".......", ".......",
    ]),
    ('=', [
        ".......", ".......", ".......", ".......", ".......", "#####..", ".......", "#####..",
        ".......", ".......", ".......", ".......", ".......",
    ]),
    ('>', [
        ".......", ".......", ".......", "#......", ".#.....", "..#....", "...#...", "..#....",
        ".#.....", "#......", ".......", ".......", ".......",
    ]),
    ('?', [
        ".......", ".###...", "#...#..", "....#..", "...#...", "..#....", "..#....", ".......",
        "..#....", "..#....", ".......", ".......", ".......",
    ]),
    ('@', [
        ".......", ".###...", "#...#..", "#.###..", "#.#.#..", "#.#.#..", "#.##...", "#......",
        "#...#..", ".###...", ".......", ".......", ".......",
    ]),
    ('A', [
        ".......", "..#....", ".#.#...", "#...#..", "#...#..", "#####..", "#...#..", "#...#..",
        "#...#..", "#...#..", ".......", ".......", ".......",
    ]),
    ('B', [
        ".......", "####...", "#...#..", "#...#..", "#...#..", "####...", "#...#..", "#...#..",
        "#...#..", "####...", ".......", ".......", ".......",
    ]),
    ('C', [
        ".......", ".###...", "#...#..", "#......", "#......", "#......", "#......", "#......",
        "#...#..", ".###...", ".......", ".......", ".......",
    ]),
    ('D', [
        ".......", "####...", "#...#..", "#...#..", "#...#..", "#...#..", "#...#..", "#...#..",
        "#...#..", "####...", ".......", ".......", ".......",
    ]),
    ('E', [
        ".......", "#####..", "#......", "#......", "#......", "####...", "#......", "#......",
        "#......", "#####..", ".......", ".......", ".......",
    ]),
    ('F', [
        ".......", "#####..", "#......", "#......", "#......", "####...", "#......", "#......",
        "#......", "#......", ".......", ".......", ".......",
    ]),
    ('G', [
        ".......", ".###...", "#...#..", "#......", "#......", "#.###..", "#...#..", "#...#..",
        "#...#..", ".###...", ".......", ".......", ".......",
    ]),
    ('H', [
        ".......", "#...#..", "#...#..", "#...#..", "#...#..", "#####..", "#...#..", "#...#..",
        "#...#..", "#...#..", ".......", ".......", ".......",
    ]),
    ('I', [
        ".......", ".###...", "..#....", "..#....", "..#....", "..#....", "..#....", "..#....",
        "..#....", ".###...", ".......", ".......", ".......",
    ]),
    ('J', [
        ".......", "..###..", "...#...", "...#...", "...#...", "...#...", "...#...", "...#...",
        "#..#...", ".##....", ".......", ".......", ".......",
    ]),
    ('K', [
        ".......", "#...#..", "#..#...", "#.#....", "##.....", "##.....", "#.#....", "#.#....",
        "#..#...", "#...#..", ".......", ".......", ".......",
    ]),
    ('L', [
        ".......", "#......", "#......", "#......", "#......", "#......", "#......", "#......",
        "#......", "#####..", ".......", ".......", ".......",
    ]),
    ('M', [
        ".......", "#...#..", "##.##..", "#.#.#..", "#.#.#..", "#...#..", "#...#..", "#...#..",
        "#...#..", "#...#..", ".......", ".......", ".......",
    ]),
    ('N', [
        ".......", "#...#..", "##..#..", "##..#..", "#.#.#..", "#.#.#..", "#..##..", "#..##..",
        "#...#..", "#...#..", ".......", ".......", ".......",
    ]),
    ('O', [
        ".......", ".###...", "#...#..", "#...#..", "#...#..", "#...#..", "#...#..", "#...#..",
        "#...#..", ".###...", ".......", ".......", ".......",
    ]),
    ('P', [
        ".......", "####...", "#...#..", "#...#..", "#...#..", "####...", "#......", "#......",
        "#......", "#......", ".......", ".......", ".......",
    ]),
    ('Q', [
        ".......", ".###...", "#...#..", "#...#..", "#...#..", "#...#..", "#...#..", "#.#.#..",
        "#..#...", ".##.#..", ".......", ".......", ".......",
    ]),
    ('R', [
        ".......", "####...", "#...#..", "#...#..", "#...#..", "####...", "#.#....", "#..#...",
        "#..#...", "#...#..", ".......", ".......", ".......",
    ]),
    ('S', [
        ".......", ".###...", "#...#..", "#......", ".#.....", "..#....", "...#...", "....#..",
        "#...#..", ".###...", ".......", ".......", ".......",
    ]),
    ('T', [
        ".......", "#####..", "..#....", "..#....", "..#....", "..#....", "..#....", "..#....",
        "..#....", "..#....", ".......", ".......", ".......",
    ]),
    ('U', [
        ".......", "#...#..", "#...#..", "#...#..", "#...#..", "#...#..", "#...#..", "#...#..",
        "#...#..", ".###...", ".......", ".......", ".......",
    ]),
    ('V', [
        ".......", "#...#..", "#...#..", "#...#..", "#...#..", "#...#..", ".#.#...", ".#.#...",
        ".#.#...", "..#....", ".......", ".......", ".......",
    ]),
    ('W', [
        ".......", "#...#..", "#...#..", "#...#..", "#...#..", "#.#.#..", "#.#.#..", "#.#.#..",
        "##.##..", "#...#..", ".......", ".......", ".......",
    ]),
    ('X', [
        ".......", "#...#..", "#...#..", ".#.#...", ".#.#...", "..#....", ".#.#...", ".#.#...",
        "#...#..", "#...#..", ".......", ".......", ".......",
    ]),
    ('Y', [
        ".......", "#...#..", "#...#..", ".#.#...", ".#.#...", "..#....", "..#....", "..#....",
        "..#....", "..#....", ".......", ".......", ".......",
    ]),
    ('Z', [
        ".......", "#####..", "....#..", "...#...", "...#...", "..#....", ".#.....", ".#.....",
        "#......", "#####..", ".......", ".......", ".......",
    ]),
    ('[', [
        ".......", ".###...", ".#.....", ".#.....", ".#.....", ".#.....", ".#.....", ".#.....",
        ".#.....", ".#.....", ".#.....", ".###...", ".......",
    ]),
    ('\\', [
        ".......", "#......", "#......", ".#.....", ".#.....", "..#....", "..#....", "...#...",
        "...#...", "....#..", ".......", ".......", ".......",
    ]),
    (']', [
        ".......", ".###...", "...#...", "...#...", "...#...", "...#...", "...#...", "...#...",
        "...#...", "...#...", "...#...", ".###...", ".......",
    ]),
    ('^', [
        ".......", "..#....", ".#.#...", "#...#..", ".......", ".......", ".......", ".......",
        ".......", ".......", ".......", ".......", ".......",
    ]),
    ('_', [
        ".......", ".......", ".......", ".......", ".......", ".......", ".......", ".......",
        ".......", ".......", ".......", "#####..", ".......",
    ]),
    ('`', [
        ".......", ".#.....", "..#....", ".......", ".......", ".......", ".......", ".......",
        ".......", ".......", ".......", ".......", ".......",
    ]),
    ('a', [
        ".......", ".......", ".......", ".......", ".###...", "....#..", ".####..", "#...#..",
        "#..##..", ".##.#..", ".......", ".......", ".......",
    ]),
    ('b', [
        ".......", "#......", "#......", "#......", "#.##...", "##..#..", "#...#..", "#...#..",
        "##..#..", "#.##...", ".......", ".......", ".......",
    ]),
    ('c', [
        ".......", ".......", ".......", ".......", ".###...", "#...#..", "#......", "#......",
        "#...#..", ".###...", ".......", ".......", ".......",
    ]),
    ('d', [
        ".......", "....#..", "....#..", "....#..", ".##.#..", "#..##..", "#...#..", "#...#..",
        "#..##..", ".##.#..", ".......", ".......", ".......",
    ]),
    ('e', [
        ".......", ".......", ".......", ".......", ".###...", "#...#..", "#####..", "#......",
        "#...#..", ".###...", ".......", ".......", ".......",
    ]),
    ('f', [
        ".......", "..###..", ".#.....", ".#.....", "####...", ".#.....", ".#.....", ".#.....",
        ".#.....", ".#.....", ".......", ".......", ".......",
    ]),
    ('g', [
        ".......", ".......", ".......", ".......", ".##.#..", "#..##..", "#...#..", "#...#..",
        "#..##..", ".##.#..", "....#..", "#...#..", ".###...",
    ]),
    ('h', [
        ".......", "#......", "#......", "#......", "#.##...", "##..#..", "#...#..", "#...#..",
        "#...#..", "#...#..", ".......", ".......", ".......",
    ]),
    ('i', [
        ".......", ".......", "..#....", ".......", ".##....", "..#....", "..#....", "..#....",
        "..#....", ".###...", ".......", ".......", ".......",
    ]),
    ('j', [
        ".......", ".......", "...#...", ".......", "..##...", "...#...", "...#...", "...#...",
        "...#...", "...#...", "...#...", "#..#...", ".##....",
    ]),
    ('k', [
        ".......", "#......", "#......", "#......", "#..#...", "#.#....", "##.....", "#.#....",
        "#..#...", "#...#..", ".......", ".......", ".......",
    ]),
    ('l', [
        ".......", ".##....", "..#....", "..#....", "..#....", "..#....", "..#....", "..#....",
        "..#....", ".###...", ".......", ".......", ".......",
    ]),
    ('m', [
        ".......", ".......", ".......", ".......", "##.#...", "#.#.#..", "#.#.#..", "#.#.#..",
        "#.#.#..", "#.#.#..", ".......", ".......", ".......",
    ]),
    ('n', [
        ".......", ".......", ".......", ".......", "#.##...", "##..#..", "#...#..", "#...#..",
        "#...#..", "#...#..", ".......", ".......", ".......",
    ]),
    ('o', [
        ".......", ".......", ".......", ".......", ".###...", "#...#..", "#...#..", "#...#..",
        "#...#..", ".###...", ".......", ".......", ".......",
    ]),
    ('p', [
        ".......", ".......", ".......", ".......", "#.##...", "##..#..", "#...#..", "#...#..",
        "##..#..", "#.##...", "#......", "#......", "#......",
    ]),
    ('q', [
        ".......", ".......", ".......", ".......", ".##.#..", "#..##..", "#...#..", "#...#..",
        "#..##..", ".##.#..", "....#..", "....#..", "....#..",
    ]),
    ('r', [
        ".......", ".......", ".......", ".......", "#.##...", "##..#..", "#......", "#......",
        "#......", "#......", ".......", ".......", ".......",
    ]),
    ('s', [
        ".......", ".......", ".......", ".......", ".####..", "#......", ".###...", "....#..",
        "....#..", "####...", ".......", ".......", ".......",
    ]),
    ('t', [
        ".......", ".......", ".#.....", ".#.....", "####...", ".#.....", ".#.....", ".#.....",
        ".#..#..", "..##...", ".......", ".......", ".......",
    ]),
    ('u', [
        ".......", ".......", ".......", ".......", "#...#..", "#...#..", "#...#..", "#...#..",
        "#..##..", ".##.#..", ".......", ".......", ".......",
    ]),
    ('v', [
        ".......", ".......", ".......", ".......", "#...#..", "#...#..", "#...#..", ".#.#...",
        ".#.#...", "..#....", ".......", ".......", ".......",
    ]),
    ('w', [
        ".......", ".......", ".......", ".......", "#...#..", "#...#..", "#.#.#..", "#.#.#..",
        "#.#.#..", ".#.#...", ".......", ".......", ".......",
    ]),
    ('x', [
        ".......", ".......", ".......", ".......", "#...#..", ".#.#...", "..#....", "..#....",
        ".#.#...", "#...#..", ".......", ".......", ".......",
    ]),
    ('y', [
        ".......", ".......", ".......", ".......", "#...#..", "#...#..", "#...#..", "#...#..",
        "#..##..", ".##.#..", "....#..", "#...#..", ".###...",
    ]),
    ('z', [
        ".......", ".......", ".......", ".......", "#####..", "...#...", "..#....", "..#....",
        ".#.....", "#####..", ".......", ".......", ".......",
    ]),
    ('{', [
        ".......", "...##..", "..#....", "..#....", "..#....", ".#.....", "..#....", "..#....",
        "..#....", "..#....", "..#....", "...##..", ".......",
    ]),
    ('|', [
        ".......", "..#....", "..#....", "..#....", "..#....", "..#....", "..#....", "..#....",
        "..#....", "..#....", "..#....", "..#....", ".......",
    ]),
    ('}', [
        ".......", "##.....", "..#....", "..#....", "..#....", "...#...", "..#....", "..#....",
        "..#....", "..#....", "..#....", "##.....", ".......",
    ]),
    ('~', [
        ".......", ".......", ".......", ".......", ".......", ".##.#..", "#.##...", ".......",
        ".......", ".......", ".......", ".......", ".......",
    ]),
];
