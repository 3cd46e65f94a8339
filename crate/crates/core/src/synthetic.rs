//! Seeded generators for test corpora: random valid BIO sentences, a
//! bilingual stand-in for the gold set, and a perturbed-surface suite for
//! exercising fuzzy resolution.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{ConllSentence, TokenRow};
use crate::record::SentenceRecord;
use crate::span::CharSpan;
use crate::text::char_len;
use crate::transfer::RawRusSpan;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Label histogram of the English side of the gold set.
pub const GOLD_LABELS: [(&str, usize); 11] = [
    ("Term", 814),
    ("Definition", 773),
    ("Alias-Term", 85),
    ("Secondary-Definition", 59),
    ("Referential-Term", 20),
    ("Referential-Definition", 14),
    ("Definition-frag", 6),
    ("Qualifier", 4),
    ("Ordered-Term", 2),
    ("Ordered-Definition", 2),
    ("Term-frag", 1),
];

/// Span-bearing sentences in the gold set.
pub const GOLD_RECORDS: usize = 870;

const LATIN_ONSETS: [&str; 16] = [
    "b", "c", "d", "f", "g", "l", "m", "n", "p", "r", "s", "t", "v", "st", "pr", "tr",
];
const LATIN_VOWELS: [&str; 6] = ["a", "e", "i", "o", "u", "y"];
const CYR_ONSETS: [&str; 18] = [
    "б", "в", "г", "д", "ж", "з", "к", "л", "м", "н", "п", "р", "с", "т", "ф", "х", "ст", "пр",
];
const CYR_VOWELS: [&str; 8] = ["а", "е", "и", "о", "у", "ы", "я", "ю"];
const CYR_LETTERS: &str = "абвгдежзийклмнопрстуфхцчшщыэюя";

fn word<R: Rng>(rng: &mut R, onsets: &[&str], vowels: &[&str], syllables: usize) -> String {
    (0..syllables)
        .map(|_| format!("{}{}", onsets[rng.random_range(0..onsets.len())], vowels[rng.random_range(0..vowels.len())]))
        .collect()
}

fn latin_word<R: Rng>(rng: &mut R) -> String {
    let n = rng.random_range(1..=3);
    word(rng, &LATIN_ONSETS, &LATIN_VOWELS, n)
}

fn cyrillic_word<R: Rng>(rng: &mut R) -> String {
    let n = rng.random_range(2..=4);
    word(rng, &CYR_ONSETS, &CYR_VOWELS, n)
}

/// A random sentence with valid BIO tags: at most `max_tokens` tokens and
/// `max_spans` non-overlapping spans. Spans may be adjacent.
pub fn random_bio_sentence<R: Rng>(rng: &mut R, id: &str, max_tokens: usize, max_spans: usize) -> ConllSentence {
    let labels = ["Term", "Definition", "Alias-Term", "Qualifier", "Секция"];
    let n = rng.random_range(1..=max_tokens.max(1));
    let mut tags = vec!["O".to_string(); n];
    let wanted = rng.random_range(0..=max_spans);
    for _ in 0..wanted {
        let start = rng.random_range(0..n);
        let len = rng.random_range(1..=4.min(n - start));
        if tags[start..start + len].iter().any(|t| t != "O") {
            continue;
        }
        let label = labels[rng.random_range(0..labels.len())];
        tags[start] = format!("B-{label}");
        for t in &mut tags[start + 1..start + len] {
            *t = format!("I-{label}");
        }
    }
    let mut pos = rng.random_range(0..1000);
    let rows = tags
        .into_iter()
        .map(|tag| {
            let token = if rng.random_bool(0.15) {
                [".", ",", "(", ")", "–"][rng.random_range(0..5)].to_string()
            } else if rng.random_bool(0.1) {
                cyrillic_word(rng)
            } else {
                latin_word(rng)
            };
            let start_char = pos;
            let end_char = pos + char_len(&token);
            pos = end_char + rng.random_range(0..=1);
            let extra_cols = if rng.random_bool(0.5) {
                vec!["-1".to_string(), "0".to_string()]
            } else {
                Vec::new()
            };
            TokenRow {
                token,
                source_file: format!("{id}.deft"),
                start_char,
                end_char,
                tag,
                extra_cols,
            }
        })
        .collect();
    ConllSentence { sentence_id: id.to_string(), rows }
}

/// Lays out words into a sentence and returns it with the code-point range
/// of every word.
fn layout(words: &[String]) -> (String, Vec<(usize, usize)>) {
    let mut text = String::new();
    let mut ranges = Vec::with_capacity(words.len());
    let mut pos = 0;
    for (i, w) in words.iter().enumerate() {
        if i > 0 {
            text.push(' ');
            pos += 1;
        }
        text.push_str(w);
        ranges.push((pos, pos + char_len(w)));
        pos += char_len(w);
    }
    (text, ranges)
}

/// Chooses `k` disjoint word runs of 1..=4 words inside a sentence of
/// `n` words. Returns `(first, last)` inclusive, sorted.
fn place_runs<R: Rng>(rng: &mut R, n: usize, k: usize) -> Vec<(usize, usize)> {
    loop {
        let mut taken = vec![false; n];
        let mut runs = Vec::with_capacity(k);
        for _ in 0..k {
            let len = rng.random_range(1..=4);
            let start = rng.random_range(0..=n - len);
            if taken[start..start + len].iter().any(|t| *t) {
                break;
            }
            taken[start..start + len].iter_mut().for_each(|t| *t = true);
            runs.push((start, start + len - 1));
        }
        if runs.len() == k {
            runs.sort();
            return runs;
        }
    }
}

/// A bilingual stand-in for the gold set: [`GOLD_RECORDS`] records whose
/// source spans follow [`GOLD_LABELS`] exactly. Every target surface occurs
/// exactly once in its translation, so an echo of the gold surfaces
/// resolves to the gold intervals.
pub fn synthetic_gold(seed: u64) -> Vec<SentenceRecord> {
    let mut rng = rng(seed);
    let mut labels: Vec<&str> = GOLD_LABELS
        .iter()
        .flat_map(|(l, n)| std::iter::repeat_n(*l, *n))
        .collect();
    labels.shuffle(&mut rng);

    // every record gets one span, the rest are spread at random (max 5)
    let mut per_record = vec![1usize; GOLD_RECORDS];
    let mut extra = labels.len() - GOLD_RECORDS;
    while extra > 0 {
        let i = rng.random_range(0..GOLD_RECORDS);
        if per_record[i] < 5 {
            per_record[i] += 1;
            extra -= 1;
        }
    }

    let mut next_label = labels.into_iter();
    per_record
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let span_labels: Vec<&str> = next_label.by_ref().take(k).collect();
            gold_record(&mut rng, &format!("gold:{}", i + 1), &span_labels)
        })
        .collect()
}

fn gold_record<R: Rng>(rng: &mut R, id: &str, labels: &[&str]) -> SentenceRecord {
    let k = labels.len();
    let n = rng.random_range((4 * k + 2).max(6)..=(4 * k + 12));
    let en_words: Vec<String> = (0..n).map(|_| latin_word(rng)).collect();
    let en_runs = place_runs(rng, n, k);
    let (text, en_ranges) = layout(&en_words);

    loop {
        let m = rng.random_range((4 * k + 2).max(6)..=(4 * k + 12));
        let ru_words: Vec<String> = (0..m).map(|_| cyrillic_word(rng)).collect();
        // target order may differ from the source order
        let mut ru_runs = place_runs(rng, m, k);
        ru_runs.shuffle(rng);
        let (text_rus, ru_ranges) = layout(&ru_words);

        let surfaces: Vec<&str> = ru_runs
            .iter()
            .map(|&(a, b)| {
                let (s, e) = (ru_ranges[a].0, ru_ranges[b].1);
                crate::text::slice(&text_rus, s, e).expect("in bounds")
            })
            .collect();
        if surfaces.iter().any(|s| text_rus.matches(s).count() != 1) {
            continue;
        }

        let spans = en_runs
            .iter()
            .zip(labels)
            .enumerate()
            .map(|(j, (&(a, b), label))| {
                CharSpan::from_text(&text, en_ranges[a].0, en_ranges[b].1, *label, format!("T{}", j + 1))
                    .expect("in bounds")
            })
            .collect();
        let spans_rus = ru_runs
            .iter()
            .zip(labels)
            .enumerate()
            .map(|(j, (&(a, b), label))| {
                CharSpan::from_text(&text_rus, ru_ranges[a].0, ru_ranges[b].1, *label, format!("T{}", j + 1))
                    .expect("in bounds")
            })
            .collect();
        let mut r = SentenceRecord::new(id, text.clone(), spans);
        r.text_rus = Some(text_rus);
        r.spans_rus = Some(spans_rus);
        return r;
    }
}

/// Applies up to `max_edits` random single-character edits (substitute,
/// insert, delete) to a word. A word is never emptied.
pub fn perturb_word<R: Rng>(rng: &mut R, w: &str, max_edits: usize) -> String {
    let alphabet: Vec<char> = CYR_LETTERS.chars().collect();
    let mut chars: Vec<char> = w.chars().collect();
    let edits = rng.random_range(0..=max_edits);
    for _ in 0..edits {
        let c = alphabet[rng.random_range(0..alphabet.len())];
        match rng.random_range(0..3) {
            0 => {
                let i = rng.random_range(0..chars.len());
                chars[i] = c;
            }
            1 => {
                let i = rng.random_range(0..=chars.len());
                chars.insert(i, c);
            }
            _ if chars.len() > 1 => {
                let i = rng.random_range(0..chars.len());
                chars.remove(i);
            }
            _ => chars.push(c),
        }
    }
    chars.into_iter().collect()
}

/// One case of the perturbation suite: a translated record, the perturbed
/// surfaces a model might return, and the intervals they should bind to.
#[derive(Debug, Clone)]
pub struct PerturbedCase {
    pub record: SentenceRecord,
    pub raws: Vec<RawRusSpan>,
    pub expected: Vec<CharSpan>,
}

/// Generates records holding `total_spans` spans in all, each surface
/// perturbed by at most `max_edits` edits per word. At least one word of
/// every surface differs from the text.
pub fn perturbation_suite(seed: u64, total_spans: usize, max_edits: usize) -> Vec<PerturbedCase> {
    let mut rng = rng(seed);
    let mut cases = Vec::new();
    let mut made = 0;
    while made < total_spans {
        let k = rng.random_range(1..=3).min(total_spans - made);
        let labels = vec!["Term"; k];
        let gold = gold_record(&mut rng, &format!("perturbed:{}", cases.len() + 1), &labels);
        let expected = gold.spans_rus.clone().expect("gold records are translated");
        let raws = expected
            .iter()
            .map(|s| {
                let words: Vec<&str> = s.surface.split(' ').collect();
                let surface = loop {
                    let candidate = words
                        .iter()
                        .map(|w| perturb_word(&mut rng, w, max_edits))
                        .collect::<Vec<_>>()
                        .join(" ");
                    if candidate != s.surface {
                        break candidate;
                    }
                };
                RawRusSpan {
                    label: s.label.clone(),
                    span_id: s.span_id.clone(),
                    surface,
                }
            })
            .collect();
        let mut record = gold;
        record.spans_rus = None;
        cases.push(PerturbedCase { record, raws, expected });
        made += k;
    }
    cases
}
