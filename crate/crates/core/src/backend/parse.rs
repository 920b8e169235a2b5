//! Structured replies from free-form model text.
//!
//! A reply is located by extracting the first valid JSON array or object
//! from the text (scanning left to right); only when no container parses do
//! we fall back to the first bare JSON scalar. The extracted value is then
//! validated against the shape required by the request's [`ResponseTag`].

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::protocol::ResponseTag;

/// First valid JSON value embedded in `text`, preferring arrays/objects.
pub fn extract_json(text: &str) -> Option<Value> {
    let first_at = |i: usize| -> Option<Value> {
        serde_json::Deserializer::from_str(&text[i..])
            .into_iter::<Value>()
            .next()
            .and_then(|r| r.ok())
    };
    for (i, c) in text.char_indices() {
        if c == '[' || c == '{' {
            if let Some(v) = first_at(i) {
                return Some(v);
            }
        }
    }
    let mut prev: Option<char> = None;
    for (i, c) in text.char_indices() {
        let starts_token = !prev.is_some_and(|p| p.is_ascii_alphanumeric() || p == '.');
        if starts_token && (c == '"' || c == '-' || c.is_ascii_digit()) {
            if let Some(v) = first_at(i) {
                return Some(v);
            }
        }
        prev = Some(c);
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionKind {
    Visibility,
    Completeness,
    Optimality,
    AttributeHigh,
    AttributeLow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeLevel {
    High,
    Low,
}

/// A question emitted by a Questioner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedQuestion {
    #[serde(default)]
    pub kind: Option<QuestionKind>,
    pub question: String,
    #[serde(default)]
    pub choices: Vec<String>,
    #[serde(default)]
    pub gold: Option<String>,
    #[serde(default)]
    pub target_id: Option<usize>,
    #[serde(default)]
    pub attribute: Option<String>,
}

/// A Responder's answer to one question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaAnswer {
    pub answer: String,
    #[serde(default)]
    pub explanation: String,
    #[serde(default)]
    pub better_frame: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub attribute: String,
    pub level: AttributeLevel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpressionBox {
    pub expression: String,
    #[serde(rename = "box")]
    pub bbox: [f64; 4],
}

/// Parsed chat reply, one variant per [`ResponseTag`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", content = "value", rename_all = "snake_case")]
pub enum Reply {
    FreeText(String),
    FrameScores(Vec<f64>),
    Expressions(Vec<String>),
    Box([f64; 4]),
    QaAnswers(Vec<QaAnswer>),
    Questions(Vec<GeneratedQuestion>),
    Attributes(Vec<AttributeSpec>),
    ScoresAndExpressions {
        scores: Vec<f64>,
        expressions: Vec<String>,
    },
    ExpressionsAndBoxes(Vec<ExpressionBox>),
    ScoresAndTargets {
        scores: Vec<f64>,
        targets: Vec<ExpressionBox>,
    },
}

type ParseResult<T> = std::result::Result<T, String>;

/// If `v` is an object holding one of `keys`, descend into it.
fn unwrap_keys<'a>(v: &'a Value, keys: &[&str]) -> &'a Value {
    if let Value::Object(map) = v {
        for k in keys {
            if let Some(inner) = map.get(*k) {
                return inner;
            }
        }
    }
    v
}

fn number(v: &Value) -> ParseResult<f64> {
    let n = match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().trim_end_matches('%').parse::<f64>().ok(),
        _ => None,
    }
    .ok_or_else(|| format!("expected a number, got {v}"))?;
    if !n.is_finite() {
        return Err(format!("non-finite number {n}"));
    }
    Ok(n)
}

fn numbers(v: &Value) -> ParseResult<Vec<f64>> {
    match unwrap_keys(v, &["scores", "frame_scores"]) {
        Value::Array(items) => items.iter().map(number).collect(),
        other => number(other).map(|n| vec![n]),
    }
}

fn expression_text(v: &Value) -> ParseResult<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Object(_) => match unwrap_keys(v, &["expression", "text"]) {
            Value::String(s) => Ok(s.clone()),
            _ => Err(format!("expression entry without text: {v}")),
        },
        _ => Err(format!("expected an expression, got {v}")),
    }
}

fn expressions(v: &Value) -> ParseResult<Vec<String>> {
    match unwrap_keys(v, &["expressions", "targets"]) {
        Value::Array(items) => items.iter().map(expression_text).collect(),
        Value::String(s) => Ok(vec![s.clone()]),
        other => Err(format!("expected a list of expressions, got {other}")),
    }
}

fn bbox(v: &Value) -> ParseResult<[f64; 4]> {
    let inner = unwrap_keys(v, &["box", "bbox", "bbox_2d"]);
    let items = match inner {
        Value::Array(items) => items,
        other => return Err(format!("expected a 4-number box, got {other}")),
    };
    // tolerate [[x1,y1,x2,y2]]
    if items.len() == 1 && items[0].is_array() {
        return bbox(&items[0]);
    }
    if items.len() != 4 {
        return Err(format!("box has {} coordinates, expected 4", items.len()));
    }
    let mut out = [0.0; 4];
    for (slot, item) in out.iter_mut().zip(items) {
        *slot = number(item)?;
    }
    Ok(out)
}

fn list_of<T: for<'de> Deserialize<'de>>(v: &Value, keys: &[&str], what: &str) -> ParseResult<Vec<T>> {
    match unwrap_keys(v, keys) {
        Value::Array(items) => items
            .iter()
            .map(|item| serde_json::from_value(item.clone()).map_err(|e| format!("bad {what} entry {item}: {e}")))
            .collect(),
        other => Err(format!("expected a list of {what}, got {other}")),
    }
}

fn qa_answers(v: &Value) -> ParseResult<Vec<QaAnswer>> {
    match unwrap_keys(v, &["answers"]) {
        Value::Array(items) => items
            .iter()
            .map(|item| match item {
                Value::String(s) => Ok(QaAnswer {
                    answer: s.clone(),
                    explanation: String::new(),
                    better_frame: None,
                }),
                _ => serde_json::from_value(item.clone()).map_err(|e| format!("bad answer entry {item}: {e}")),
            })
            .collect(),
        other => Err(format!("expected a list of answers, got {other}")),
    }
}

fn expression_boxes(v: &Value) -> ParseResult<Vec<ExpressionBox>> {
    match unwrap_keys(v, &["targets"]) {
        Value::Array(items) => items
            .iter()
            .map(|item| {
                Ok(ExpressionBox {
                    expression: expression_text(item)?,
                    bbox: bbox(item)?,
                })
            })
            .collect(),
        other => Err(format!("expected a list of targets, got {other}")),
    }
}

fn field<'a>(v: &'a Value, key: &str) -> ParseResult<&'a Value> {
    v.get(key).ok_or_else(|| format!("missing field `{key}`"))
}

/// Parses raw reply text into the shape demanded by `tag`.
pub fn parse_reply(tag: ResponseTag, text: &str) -> ParseResult<Reply> {
    if tag == ResponseTag::FreeText {
        return Ok(Reply::FreeText(text.trim().to_string()));
    }
    let v = extract_json(text).ok_or_else(|| "no JSON value found in reply".to_string())?;
    Ok(match tag {
        ResponseTag::FreeText => unreachable!(),
        ResponseTag::FrameScores => Reply::FrameScores(numbers(&v)?),
        ResponseTag::Expressions => Reply::Expressions(expressions(&v)?),
        ResponseTag::Box => Reply::Box(bbox(&v)?),
        ResponseTag::QaAnswers => Reply::QaAnswers(qa_answers(&v)?),
        ResponseTag::Questions => Reply::Questions(list_of(&v, &["questions"], "questions")?),
        ResponseTag::Attributes => Reply::Attributes(list_of(&v, &["attributes"], "attributes")?),
        ResponseTag::ScoresAndExpressions => Reply::ScoresAndExpressions {
            scores: numbers(field(&v, "scores")?)?,
            expressions: expressions(field(&v, "expressions")?)?,
        },
        ResponseTag::ExpressionsAndBoxes => Reply::ExpressionsAndBoxes(expression_boxes(&v)?),
        ResponseTag::ScoresAndTargets => Reply::ScoresAndTargets {
            scores: numbers(field(&v, "scores")?)?,
            targets: expression_boxes(field(&v, "targets")?)?,
        },
    })
}
