use serde::Serialize;

use super::conll::ConllSentence;

/// A parsed BIO tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BioTag<'a> {
    Outside,
    Begin(&'a str),
    Inside(&'a str),
}

impl<'a> BioTag<'a> {
    /// `O | (B|I) "-" label` with a non-empty label; anything else is `None`.
    pub fn parse(tag: &'a str) -> Option<Self> {
        if tag == "O" {
            return Some(BioTag::Outside);
        }
        let (prefix, label) = tag.split_once('-')?;
        if label.is_empty() {
            return None;
        }
        match prefix {
            "B" => Some(BioTag::Begin(label)),
            "I" => Some(BioTag::Inside(label)),
            _ => None,
        }
    }

    pub fn label(&self) -> Option<&'a str> {
        match *self {
            BioTag::Outside => None,
            BioTag::Begin(l) | BioTag::Inside(l) => Some(l),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ViolationKind {
    /// An I- tag opening the sentence or following O.
    IStart,
    /// I-X directly after B-Y or I-Y with X != Y.
    LabelSwitchWithoutB,
    MalformedTag,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BioViolation {
    pub sentence_id: String,
    pub row_index: usize,
    pub kind: ViolationKind,
}

/// Reports every BIO violation in `s`. An empty result means the tag
/// sequence is valid.
///
/// A malformed tag breaks any open entity, so an I- tag right after it is
/// reported as [`ViolationKind::IStart`].
pub fn validate_bio(s: &ConllSentence) -> Vec<BioViolation> {
    let mut out = Vec::new();
    let mut open: Option<&str> = None;
    for (row_index, tag) in s.tags().enumerate() {
        let kind = match BioTag::parse(tag) {
            None => {
                open = None;
                Some(ViolationKind::MalformedTag)
            }
            Some(BioTag::Outside) => {
                open = None;
                None
            }
            Some(BioTag::Begin(l)) => {
                open = Some(l);
                None
            }
            Some(BioTag::Inside(l)) => {
                let prev = open.replace(l);
                match prev {
                    None => Some(ViolationKind::IStart),
                    Some(p) if p != l => Some(ViolationKind::LabelSwitchWithoutB),
                    Some(_) => None,
                }
            }
        };
        if let Some(kind) = kind {
            out.push(BioViolation {
                sentence_id: s.sentence_id.clone(),
                row_index,
                kind,
            });
        }
    }
    out
}

/// Rewrites each violating I-X to B-X and each malformed tag to O.
/// Valid sentences come back unchanged.
pub fn repair_bio(s: &ConllSentence) -> ConllSentence {
    let mut fixed = s.clone();
    let mut open: Option<String> = None;
    for row in &mut fixed.rows {
        match BioTag::parse(&row.tag) {
            None => {
                row.tag = "O".to_string();
                open = None;
            }
            Some(BioTag::Outside) => open = None,
            Some(BioTag::Begin(l)) => open = Some(l.to_string()),
            Some(BioTag::Inside(l)) => {
                if open.as_deref() != Some(l) {
                    let label = l.to_string();
                    row.tag = format!("B-{label}");
                    open = Some(label);
                }
            }
        }
    }
    fixed
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::conll::TokenRow;

    pub(crate) fn sentence(tags: &[&str]) -> ConllSentence {
        let rows = tags
            .iter()
            .enumerate()
            .map(|(i, t)| TokenRow {
                token: format!("w{i}"),
                source_file: "f".into(),
                start_char: i * 3,
                end_char: i * 3 + 2,
                tag: t.to_string(),
                extra_cols: vec![],
            })
            .collect();
        ConllSentence {
            sentence_id: "s".into(),
            rows,
        }
    }

    fn kinds(tags: &[&str]) -> Vec<(usize, ViolationKind)> {
        validate_bio(&sentence(tags))
            .into_iter()
            .map(|v| (v.row_index, v.kind))
            .collect()
    }

    #[test]
    fn tag_grammar() {
        assert_eq!(BioTag::parse("O"), Some(BioTag::Outside));
        assert_eq!(BioTag::parse("B-Alias-Term"), Some(BioTag::Begin("Alias-Term")));
        assert_eq!(BioTag::parse("I-Term"), Some(BioTag::Inside("Term")));
        for bad in ["", "B-", "o", "E-Term", "BTerm", "B"] {
            assert_eq!(BioTag::parse(bad), None, "{bad}");
        }
    }

    #[test]
    fn valid_sequences_report_nothing() {
        assert!(kinds(&["B-Term", "I-Term", "O"]).is_empty());
        assert!(kinds(&["B-Term", "B-Term", "I-Term"]).is_empty());
        assert!(kinds(&[]).is_empty());
    }

    #[test]
    fn i_after_o_or_at_start() {
        assert_eq!(kinds(&["I-Term", "O"]), vec![(0, ViolationKind::IStart)]);
        assert_eq!(kinds(&["O", "I-Definition"]), vec![(1, ViolationKind::IStart)]);
    }

    #[test]
    fn label_switch() {
        assert_eq!(
            kinds(&["B-Term", "I-Definition"]),
            vec![(1, ViolationKind::LabelSwitchWithoutB)]
        );
        assert_eq!(
            kinds(&["B-Term", "I-Term", "I-Definition", "I-Definition"]),
            vec![(2, ViolationKind::LabelSwitchWithoutB)]
        );
    }

    #[test]
    fn malformed_tags() {
        assert_eq!(
            kinds(&["X", "I-Term"]),
            vec![(0, ViolationKind::MalformedTag), (1, ViolationKind::IStart)]
        );
    }

    fn repaired(tags: &[&str]) -> Vec<String> {
        repair_bio(&sentence(tags)).tags().map(String::from).collect()
    }

    #[test]
    fn repair_examples() {
        assert_eq!(repaired(&["I-Term", "I-Term"]), ["B-Term", "I-Term"]);
        assert_eq!(repaired(&["B-Term", "I-Term"]), ["B-Term", "I-Term"]);
        assert_eq!(repaired(&["O", "I-Definition"]), ["O", "B-Definition"]);
        assert_eq!(
            repaired(&["B-Term", "I-Definition", "I-Definition"]),
            ["B-Term", "B-Definition", "I-Definition"]
        );
        assert_eq!(repaired(&["??", "I-Term"]), ["O", "B-Term"]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn tag() -> impl Strategy<Value = String> {
            prop_oneof![
                Just("O".to_string()),
                Just("B-Term".to_string()),
                Just("I-Term".to_string()),
                Just("B-Definition".to_string()),
                Just("I-Definition".to_string()),
                Just("I-".to_string()),
                "[A-Z]-?[a-z]{0,3}",
            ]
        }

        proptest! {
            #[test]
            fn repair_always_validates(tags in proptest::collection::vec(tag(), 0..30)) {
                let refs: Vec<&str> = tags.iter().map(String::as_str).collect();
                let s = sentence(&refs);
                let fixed = repair_bio(&s);
                prop_assert!(validate_bio(&fixed).is_empty());
                if validate_bio(&s).is_empty() {
                    prop_assert_eq!(fixed, s);
                }
            }
        }
    }
}
