//! Deterministic synthetic corpora for tests and offline runs.
//!
//! `planted_bigram_corpus` builds the two-class attribution oracle: each
//! class carries one signature word pair hidden among random filler, so a
//! working detector must rank that pair first. `news_like_corpus` is a
//! four-topic stand-in with class-conditional vocabulary over a shared
//! filler pool, used to exercise the full pipeline at realistic scale when
//! no real dataset files are on disk.

use crate::corpus::Document;
use crate::rng::Rng;

const FILLER: [&str; 118] = [
    "the",
    "a",
    "of",
    "to",
    "and",
    "in",
    "on",
    "for",
    "with",
    "after",
    "as",
    "at",
    "by",
    "from",
    "has",
    "have",
    "is",
    "are",
    "was",
    "were",
    "will",
    "would",
    "said",
    "says",
    "new",
    "more",
    "most",
    "other",
    "some",
    "such",
    "than",
    "then",
    "this",
    "that",
    "these",
    "those",
    "it",
    "its",
    "not",
    "but",
    "about",
    "into",
    "over",
    "under",
    "between",
    "during",
    "before",
    "against",
    "while",
    "where",
    "which",
    "who",
    "when",
    "first",
    "second",
    "last",
    "next",
    "early",
    "late",
    "report",
    "reports",
    "today",
    "week",
    "month",
    "year",
    "officials",
    "people",
    "group",
    "groups",
    "plan",
    "plans",
    "announced",
    "expected",
    "according",
    "leader",
    "leaders",
    "member",
    "members",
    "country",
    "city",
    "world",
    "state",
    "public",
    "major",
    "top",
    "key",
    "big",
    "small",
    "long",
    "short",
    "high",
    "low",
    "many",
    "few",
    "several",
    "three",
    "four",
    "five",
    "around",
    "across",
    "near",
    "still",
    "also",
    "again",
    "back",
    "off",
    "out",
    "up",
    "down",
    "now",
    "just",
    "only",
    "both",
    "made",
    "make",
    "set",
    "due",
    "amid",
];

const WORLD: [&str; 36] = [
    "minister",
    "embassy",
    "treaty",
    "border",
    "election",
    "parliament",
    "diplomat",
    "sanctions",
    "summit",
    "ceasefire",
    "protest",
    "refugee",
    "capital",
    "regime",
    "envoy",
    "coalition",
    "peacekeepers",
    "mediator",
    "unrest",
    "militants",
    "insurgents",
    "troops",
    "occupation",
    "annexation",
    "asylum",
    "delegation",
    "referendum",
    "uprising",
    "blockade",
    "armistice",
    "consulate",
    "junta",
    "republic",
    "sovereignty",
    "detainees",
    "extradition",
];

const SPORTS: [&str; 36] = [
    "coach",
    "season",
    "playoff",
    "tournament",
    "striker",
    "goalkeeper",
    "inning",
    "marathon",
    "medal",
    "stadium",
    "league",
    "champion",
    "derby",
    "qualifier",
    "halftime",
    "referee",
    "penalty",
    "transfer",
    "midfielder",
    "sprinter",
    "batsman",
    "wicket",
    "grandslam",
    "podium",
    "relay",
    "fixture",
    "standings",
    "playoffs",
    "knockout",
    "homerun",
    "touchdown",
    "gymnast",
    "swimmer",
    "cyclist",
    "rookie",
    "captaincy",
];

const BUSINESS: [&str; 36] = [
    "shares",
    "profit",
    "quarterly",
    "merger",
    "dividend",
    "investors",
    "stocks",
    "earnings",
    "acquisition",
    "bankruptcy",
    "revenue",
    "forecast",
    "inflation",
    "markets",
    "trader",
    "commodity",
    "crude",
    "prices",
    "shareholder",
    "takeover",
    "regulator",
    "antitrust",
    "portfolio",
    "hedge",
    "bond",
    "yield",
    "futures",
    "brokerage",
    "valuation",
    "layoffs",
    "restructuring",
    "subsidiary",
    "audit",
    "tariff",
    "surplus",
    "deficit",
];

const SCITECH: [&str; 36] = [
    "software",
    "browser",
    "satellite",
    "genome",
    "processor",
    "startup",
    "encryption",
    "telescope",
    "robot",
    "wireless",
    "chip",
    "server",
    "spacecraft",
    "algorithm",
    "laboratory",
    "quantum",
    "silicon",
    "antivirus",
    "broadband",
    "nanotech",
    "prototype",
    "firmware",
    "database",
    "malware",
    "handset",
    "gadget",
    "upgrade",
    "kernel",
    "compiler",
    "biotech",
    "vaccine",
    "asteroid",
    "probe",
    "reactor",
    "circuit",
    "download",
];

/// Class names for the surrogate news corpus.
pub fn news_like_label_names() -> Vec<String> {
    ["World", "Sports", "Business", "SciTech"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

fn pick<'a>(words: &[&'a str], rng: &mut Rng) -> &'a str {
    words[rng.below(words.len())]
}

/// Four-class surrogate news corpus: each document mixes its own topic's
/// vocabulary (with a little cross-topic bleed) into shared filler text.
/// Classes are balanced and interleaved; everything is a pure function of
/// the seed.
pub fn news_like_corpus(docs_per_class: usize, seed: u64) -> Vec<Document> {
    let topics = [WORLD, SPORTS, BUSINESS, SCITECH];
    let mut rng = Rng::new(seed);
    let mut docs = Vec::with_capacity(docs_per_class * 4);
    for _ in 0..docs_per_class {
        for (label, topic) in topics.iter().enumerate() {
            let len = 25 + rng.below(30);
            let mut words = Vec::with_capacity(len);
            for _ in 0..len {
                let roll = rng.next_f64();
                let w = if roll < 0.22 {
                    pick(topic, &mut rng)
                } else if roll < 0.26 {
                    // Cross-topic bleed keeps the task from being trivial.
                    pick(&topics[rng.below(4)], &mut rng)
                } else {
                    pick(&FILLER, &mut rng)
                };
                words.push(w.to_string());
            }
            // Light punctuation so the tokenizer's detachment path runs.
            if rng.next_f64() < 0.5 {
                let at = rng.below(words.len());
                words[at] = format!("{},", words[at]);
            }
            let mut text = words.join(" ");
            text.push('.');
            docs.push(Document { label, text });
        }
    }
    docs
}

/// Signature word pairs planted by `planted_bigram_corpus`, joined the way
/// the interpreter reports them.
pub const PLANTED_PHRASES: [&str; 2] = ["alpha_beta", "gamma_delta"];

/// Two-class corpus where class 0 always contains "alpha beta" and class 1
/// "gamma delta", hidden at a random position among `filler_per_doc` filler
/// words. The filler pool never contains the signature words.
pub fn planted_bigram_corpus(
    docs_per_class: usize,
    filler_per_doc: usize,
    seed: u64,
) -> Vec<Document> {
    let signatures = [["alpha", "beta"], ["gamma", "delta"]];
    let mut rng = Rng::new(seed);
    let mut docs = Vec::with_capacity(docs_per_class * 2);
    for _ in 0..docs_per_class {
        for (label, sig) in signatures.iter().enumerate() {
            let mut words: Vec<String> = (0..filler_per_doc)
                .map(|_| pick(&FILLER, &mut rng).to_string())
                .collect();
            let at = rng.below(words.len() + 1);
            words.insert(at, sig[1].to_string());
            words.insert(at, sig[0].to_string());
            docs.push(Document {
                label,
                text: words.join(" "),
            });
        }
    }
    docs
}
