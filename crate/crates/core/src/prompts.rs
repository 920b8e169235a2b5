//! Prompt templates.
//!
//! Each template is a text file with a system part and a user part separated
//! by a line containing only `---`. Placeholders are written `{{name}}`.
//! Built-in templates are compiled in; a directory of `<name>.txt` files can
//! override any of them.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    FrameScores,
    Intent,
    Grounding,
    ExistenceQuestioner,
    ExistenceResponder,
    AttributeDecomposer,
    ConsistencyQuestioner,
    ConsistencyResponder,
    MergedSelectIntent,
    MergedIntentGround,
    MergedAll,
}

impl PromptKind {
    pub const ALL: [PromptKind; 11] = [
        PromptKind::FrameScores,
        PromptKind::Intent,
        PromptKind::Grounding,
        PromptKind::ExistenceQuestioner,
        PromptKind::ExistenceResponder,
        PromptKind::AttributeDecomposer,
        PromptKind::ConsistencyQuestioner,
        PromptKind::ConsistencyResponder,
        PromptKind::MergedSelectIntent,
        PromptKind::MergedIntentGround,
        PromptKind::MergedAll,
    ];

    pub fn file_stem(&self) -> &'static str {
        match self {
            PromptKind::FrameScores => "frame_scores",
            PromptKind::Intent => "intent",
            PromptKind::Grounding => "grounding",
            PromptKind::ExistenceQuestioner => "existence_questioner",
            PromptKind::ExistenceResponder => "existence_responder",
            PromptKind::AttributeDecomposer => "attribute_decomposer",
            PromptKind::ConsistencyQuestioner => "consistency_questioner",
            PromptKind::ConsistencyResponder => "consistency_responder",
            PromptKind::MergedSelectIntent => "merged_select_intent",
            PromptKind::MergedIntentGround => "merged_intent_ground",
            PromptKind::MergedAll => "merged_all",
        }
    }

    fn builtin_text(&self) -> &'static str {
        match self {
            PromptKind::FrameScores => include_str!("../prompts/frame_scores.txt"),
            PromptKind::Intent => include_str!("../prompts/intent.txt"),
            PromptKind::Grounding => include_str!("../prompts/grounding.txt"),
            PromptKind::ExistenceQuestioner => include_str!("../prompts/existence_questioner.txt"),
            PromptKind::ExistenceResponder => include_str!("../prompts/existence_responder.txt"),
            PromptKind::AttributeDecomposer => include_str!("../prompts/attribute_decomposer.txt"),
            PromptKind::ConsistencyQuestioner => include_str!("../prompts/consistency_questioner.txt"),
            PromptKind::ConsistencyResponder => include_str!("../prompts/consistency_responder.txt"),
            PromptKind::MergedSelectIntent => include_str!("../prompts/merged_select_intent.txt"),
            PromptKind::MergedIntentGround => include_str!("../prompts/merged_intent_ground.txt"),
            PromptKind::MergedAll => include_str!("../prompts/merged_all.txt"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub system: String,
    pub user: String,
}

impl Template {
    pub fn parse(text: &str) -> Result<Self> {
        let mut system = Vec::new();
        let mut user = Vec::new();
        let mut in_user = false;
        for line in text.lines() {
            if !in_user && line.trim() == "---" {
                in_user = true;
            } else if in_user {
                user.push(line);
            } else {
                system.push(line);
            }
        }
        if !in_user {
            return Err(Error::Config("prompt template lacks a `---` separator".into()));
        }
        Ok(Self {
            system: system.join("\n").trim().to_string(),
            user: user.join("\n").trim().to_string(),
        })
    }
}

/// Rendered system and user prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub system: String,
    pub user: String,
}

#[derive(Debug, Clone)]
pub struct PromptSet {
    templates: BTreeMap<PromptKind, Template>,
}

impl Default for PromptSet {
    fn default() -> Self {
        Self::builtin()
    }
}

impl PromptSet {
    pub fn builtin() -> Self {
        let templates = PromptKind::ALL
            .iter()
            .map(|k| (*k, Template::parse(k.builtin_text()).expect("built-in template is well formed")))
            .collect();
        Self { templates }
    }

    /// Built-ins overridden by any `<name>.txt` present in `dir`.
    pub fn load(dir: Option<&Path>) -> Result<Self> {
        let mut set = Self::builtin();
        if let Some(dir) = dir {
            if !dir.is_dir() {
                return Err(Error::Config(format!("prompts_dir {} is not a directory", dir.display())));
            }
            for kind in PromptKind::ALL {
                let path = dir.join(format!("{}.txt", kind.file_stem()));
                if path.is_file() {
                    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                    let t = Template::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                    set.templates.insert(kind, t);
                }
            }
        }
        Ok(set)
    }

    pub fn template(&self, kind: PromptKind) -> &Template {
        &self.templates[&kind]
    }

    /// Substitutes every `{{name}}`; any placeholder left unfilled is an error.
    pub fn render(&self, kind: PromptKind, vars: &[(&str, &str)]) -> Result<Prompt> {
        let t = self.template(kind);
        Ok(Prompt {
            system: substitute(&t.system, vars, kind)?,
            user: substitute(&t.user, vars, kind)?,
        })
    }
}

fn substitute(text: &str, vars: &[(&str, &str)], kind: PromptKind) -> Result<String> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find("{{") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let end = after
            .find("}}")
            .ok_or_else(|| Error::Config(format!("{}: unterminated placeholder", kind.file_stem())))?;
        let name = after[..end].trim();
        let value = vars
            .iter()
            .find(|(k, _)| *k == name)
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::Config(format!("{}: no value for placeholder `{name}`", kind.file_stem())))?;
        out.push_str(value);
        rest = &after[end + 2..];
    }
    out.push_str(rest);
    Ok(out)
}
