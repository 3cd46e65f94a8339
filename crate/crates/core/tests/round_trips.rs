use annobridge::corpus::{conll_to_record, parse_conll_str, record_to_bio, to_conll_string, validate_bio};
use annobridge::records::{read_jsonl, write_jsonl};
use annobridge::synthetic::{random_bio_sentence, rng};
use annobridge::{CharSpan, SentenceRecord, Side};
use proptest::prelude::*;
use rand::Rng;
use serde_json::{json, Map};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn bio_to_record_and_back(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = random_bio_sentence(&mut r, "s", 40, 6);
        prop_assert!(validate_bio(&s).is_empty());
        let record = conll_to_record(&s).unwrap();
        let back = record_to_bio(&record, Side::Source).unwrap();
        let tokens: Vec<_> = s.tokens().collect();
        let tags: Vec<_> = s.tags().collect();
        prop_assert_eq!(back.tokens().collect::<Vec<_>>(), tokens);
        prop_assert_eq!(back.tags().collect::<Vec<_>>(), tags);
        for span in &record.spans {
            prop_assert!(span.is_consistent_with(&record.text));
        }
    }

    #[test]
    fn conll_text_round_trip(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sentences: Vec<_> = (0..3).map(|i| random_bio_sentence(&mut r, &format!("s{i}"), 12, 3)).collect();
        let text = to_conll_string(&sentences);
        let parsed = parse_conll_str(&text, "mem").unwrap();
        prop_assert_eq!(parsed.len(), sentences.len());
        for (a, b) in parsed.iter().zip(&sentences) {
            prop_assert_eq!(&a.rows, &b.rows);
        }
    }
}

fn random_text<R: Rng>(r: &mut R, alphabet: &[char], words: usize) -> String {
    (0..words)
        .map(|_| {
            let n = r.random_range(1..8);
            (0..n).map(|_| alphabet[r.random_range(0..alphabet.len())]).collect::<String>()
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn random_spans<R: Rng>(r: &mut R, text: &str) -> Vec<CharSpan> {
    let len = text.chars().count();
    let mut spans = Vec::new();
    for i in 0..r.random_range(0..4) {
        let start = r.random_range(0..len);
        let end = r.random_range(start + 1..=len);
        spans.push(CharSpan::from_text(text, start, end, "Term", format!("T{}", i + 1)).unwrap());
    }
    spans
}

#[test]
fn thousand_random_records_survive_jsonl() {
    let latin: Vec<char> = "abcdefghij\"\\é".chars().collect();
    let cyr: Vec<char> = "абвгдеёжзий🙂".chars().collect();
    let mut r = rng(99);
    let records: Vec<SentenceRecord> = (0..1000)
        .map(|i| {
            let words = r.random_range(1..12);
            let text = random_text(&mut r, &latin, words);
            let spans = random_spans(&mut r, &text);
            let mut rec = SentenceRecord::new(format!("r{i}"), text, spans);
            if r.random_bool(0.6) {
                let words = r.random_range(1..12);
                let ru = random_text(&mut r, &cyr, words);
                rec.spans_rus = r.random_bool(0.7).then(|| random_spans(&mut r, &ru));
                rec.text_rus = Some(ru);
            }
            if r.random_bool(0.3) {
                let mut extra = Map::new();
                extra.insert("source_file".into(), json!("t1_x.deft"));
                extra.insert("nested".into(), json!({"k": [1, 2.5, null]}));
                rec.extra = extra;
            }
            rec
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.jsonl");
    write_jsonl(&path, &records).unwrap();
    assert_eq!(read_jsonl(&path).unwrap(), records);
}

#[test]
fn wire_field_order_is_stable() {
    let mut rec = SentenceRecord::new("a", "x y", vec![CharSpan::from_text("x y", 0, 1, "Term", "T1").unwrap()]);
    rec.text_rus = Some("икс".into());
    rec.spans_rus = Some(vec![]);
    rec.extra.insert("zz".into(), json!(1));
    let line = serde_json::to_string(&rec).unwrap();
    assert_eq!(
        line,
        r#"{"id":"a","text":"x y","spans":[[0,1,"Term","T1","x"]],"text_rus":"икс","spans_rus":[],"has_definition":false,"zz":1}"#
    );
}
