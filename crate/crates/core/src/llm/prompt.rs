use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::client::{ChatMessage, ChatRequest};
use super::GatewayError;
use crate::record::SentenceRecord;

const TRANSFER_SPANS_TEXT: &str = include_str!("../../prompts/transfer_spans.txt");
const TRANSLATE_1_TEXT: &str = include_str!("../../prompts/translate_1.txt");
const TRANSLATE_2_TEXT: &str = include_str!("../../prompts/translate_2.txt");
const FEW_SHOT_TRANSFER: &str = include_str!("../../prompts/few_shot_transfer.json");
const FEW_SHOT_TRANSLATE: &str = include_str!("../../prompts/few_shot_translate.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateKind {
    TransferSpans,
    Translate1,
    Translate2,
}

impl TemplateKind {
    pub fn is_translation(self) -> bool {
        !matches!(self, TemplateKind::TransferSpans)
    }
}

/// One demonstration: the JSON the model receives and the JSON it should return.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FewShotExample {
    pub input: Value,
    pub output: Value,
}

#[derive(Debug, Deserialize)]
struct FewShotFile {
    examples: Vec<FewShotExample>,
}

/// Parses a few-shot file: `{"examples": [{"input": {...}, "output": {...}}, ...]}`.
pub fn parse_few_shot(json: &str) -> Result<Vec<FewShotExample>, serde_json::Error> {
    serde_json::from_str::<FewShotFile>(json).map(|f| f.examples)
}

pub fn load_few_shot(path: &Path) -> Result<Vec<FewShotExample>, GatewayError> {
    let content = std::fs::read_to_string(path)
        .map_err(|e| GatewayError::Config(format!("{}: {e}", path.display())))?;
    parse_few_shot(&content).map_err(|e| GatewayError::Config(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptTemplate {
    pub kind: TemplateKind,
    pub system_text: String,
    pub few_shot: Vec<FewShotExample>,
}

impl PromptTemplate {
    /// The shipped instruction text with the two default demonstrations.
    pub fn builtin(kind: TemplateKind) -> Self {
        let (text, shots) = match kind {
            TemplateKind::TransferSpans => (TRANSFER_SPANS_TEXT, FEW_SHOT_TRANSFER),
            TemplateKind::Translate1 => (TRANSLATE_1_TEXT, FEW_SHOT_TRANSLATE),
            TemplateKind::Translate2 => (TRANSLATE_2_TEXT, FEW_SHOT_TRANSLATE),
        };
        Self {
            kind,
            system_text: text.to_string(),
            few_shot: parse_few_shot(shots).expect("bundled few-shot file is valid"),
        }
    }

    pub fn with_few_shot(mut self, few_shot: Vec<FewShotExample>) -> Self {
        self.few_shot = few_shot;
        self
    }

    /// The JSON object sent as the final user turn for `r`.
    pub fn input_for(&self, r: &SentenceRecord) -> Result<Value, GatewayError> {
        let missing = |f: &str| GatewayError::MissingField(f.to_string());
        if r.id.is_empty() {
            return Err(missing("id"));
        }
        if r.text.is_empty() {
            return Err(missing("text"));
        }
        let mut obj = Map::new();
        obj.insert("id".into(), json!(r.id));
        obj.insert("text".into(), json!(r.text));
        if self.kind == TemplateKind::TransferSpans {
            let text_rus = r.text_rus.as_deref().ok_or_else(|| missing("text_rus"))?;
            obj.insert("text_rus".into(), json!(text_rus));
            obj.insert("spans".into(), serde_json::to_value(&r.spans).expect("spans serialize"));
        }
        Ok(Value::Object(obj))
    }
}

/// Builds the request: one system message, the demonstrations as alternating
/// user/assistant turns, then the record as the last user turn. Payloads are
/// compact JSON, so identical inputs render byte-identical requests.
pub fn render_prompt(
    t: &PromptTemplate,
    r: &SentenceRecord,
    model: &str,
    temperature: f64,
) -> Result<ChatRequest, GatewayError> {
    let input = t.input_for(r)?;
    let mut messages = Vec::with_capacity(2 + 2 * t.few_shot.len());
    messages.push(ChatMessage::system(&t.system_text));
    for ex in &t.few_shot {
        messages.push(ChatMessage::user(compact(&ex.input)));
        messages.push(ChatMessage::assistant(compact(&ex.output)));
    }
    messages.push(ChatMessage::user(compact(&input)));
    Ok(ChatRequest {
        model: model.to_string(),
        messages,
        temperature,
    })
}

fn compact(v: &Value) -> String {
    serde_json::to_string(v).expect("JSON values serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::client::Role;
    use crate::span::CharSpan;

    const CLOSING: &str = "No explanation, just output the updated JSON.";

    fn rec() -> SentenceRecord {
        let text = "Cells divide";
        let mut r = SentenceRecord::new(
            "dev:1",
            text,
            vec![CharSpan::from_text(text, 0, 5, "Term", "T1").unwrap()],
        );
        r.text_rus = Some("Клетки делятся".into());
        r
    }

    #[test]
    fn instruction_texts() {
        let t = PromptTemplate::builtin(TemplateKind::TransferSpans);
        assert!(t.system_text.contains("locate the exact corresponding Russian text"));
        for k in [TemplateKind::Translate1, TemplateKind::Translate2] {
            assert!(PromptTemplate::builtin(k)
                .system_text
                .contains("write its exact translation into Russian"));
        }
        for k in [TemplateKind::TransferSpans, TemplateKind::Translate1, TemplateKind::Translate2] {
            assert!(PromptTemplate::builtin(k).system_text.ends_with(CLOSING));
        }
        assert!(PromptTemplate::builtin(TemplateKind::Translate2)
            .system_text
            .contains("taking into account the style of the sentence"));
        assert!(PromptTemplate::builtin(TemplateKind::Translate1)
            .system_text
            .contains("in a scientific lexical style"));
    }

    #[test]
    fn transfer_user_message_carries_five_element_spans() {
        let t = PromptTemplate::builtin(TemplateKind::TransferSpans);
        let req = render_prompt(&t, &rec(), "m", 0.0).unwrap();
        let last: Value = serde_json::from_str(&req.messages.last().unwrap().content).unwrap();
        assert_eq!(last["spans"][0], json!([0, 5, "Term", "T1", "Cells"]));
        assert_eq!(last["text_rus"], "Клетки делятся");
        assert_eq!(
            req.messages.last().unwrap().content,
            r#"{"id":"dev:1","text":"Cells divide","text_rus":"Клетки делятся","spans":[[0,5,"Term","T1","Cells"]]}"#
        );
    }

    #[test]
    fn two_shot_layout() {
        let t = PromptTemplate::builtin(TemplateKind::TransferSpans);
        let req = render_prompt(&t, &rec(), "m", 0.0).unwrap();
        let roles: Vec<Role> = req.messages.iter().map(|m| m.role).collect();
        assert_eq!(
            roles,
            [Role::System, Role::User, Role::Assistant, Role::User, Role::Assistant, Role::User]
        );
        // demonstrations obey the output contract
        for ex in &t.few_shot {
            let spans = ex.input["spans"].as_array().unwrap();
            let rus = ex.output["spans_rus"].as_array().unwrap();
            assert_eq!(spans.len(), rus.len());
            let text_rus = ex.input["text_rus"].as_str().unwrap();
            for r in rus {
                assert!(text_rus.contains(r[2].as_str().unwrap()));
            }
        }
    }

    #[test]
    fn transfer_requires_translation() {
        let mut r = rec();
        r.text_rus = None;
        let err = render_prompt(&PromptTemplate::builtin(TemplateKind::TransferSpans), &r, "m", 0.0)
            .unwrap_err();
        assert!(matches!(err, GatewayError::MissingField(f) if f == "text_rus"));
    }

    #[test]
    fn translate_sends_id_and_text_only() {
        let t = PromptTemplate::builtin(TemplateKind::Translate2);
        let req = render_prompt(&t, &rec(), "m", 0.0).unwrap();
        assert_eq!(
            req.messages.last().unwrap().content,
            r#"{"id":"dev:1","text":"Cells divide"}"#
        );
        let mut r = rec();
        r.text.clear();
        assert!(matches!(render_prompt(&t, &r, "m", 0.0), Err(GatewayError::MissingField(f)) if f == "text"));
    }

    #[test]
    fn rendering_is_deterministic() {
        let t = PromptTemplate::builtin(TemplateKind::TransferSpans);
        let a = serde_json::to_vec(&render_prompt(&t, &rec(), "m", 0.0).unwrap()).unwrap();
        let b = serde_json::to_vec(&render_prompt(&t, &rec(), "m", 0.0).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
