use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::{QaExample, RankedDocument};
use crate::error::{Error, Result};
use crate::generator::Prompt;

pub const DEFAULT_TEMPLATE: &str = "default";
pub const CONVERSATIONAL_TEMPLATE: &str = "conversational";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub id: String,
    pub instruction: String,
    /// Render dialogue history as tagged turns before the question.
    #[serde(default)]
    pub include_history: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateRegistry {
    templates: BTreeMap<String, PromptTemplate>,
}

impl Default for TemplateRegistry {
    fn default() -> Self {
        let mut r = TemplateRegistry {
            templates: BTreeMap::new(),
        };
        r.register(PromptTemplate {
            id: DEFAULT_TEMPLATE.into(),
            instruction: "Answer the question with a short answer.".into(),
            include_history: false,
        });
        r.register(PromptTemplate {
            id: CONVERSATIONAL_TEMPLATE.into(),
            instruction: "Continue the conversation by answering the last question.".into(),
            include_history: true,
        });
        r
    }
}

impl TemplateRegistry {
    /// Add or replace a template.
    pub fn register(&mut self, template: PromptTemplate) {
        self.templates.insert(template.id.clone(), template);
    }

    pub fn get(&self, id: &str) -> Result<&PromptTemplate> {
        self.templates
            .get(id)
            .ok_or_else(|| Error::UnknownTemplate(id.to_owned()))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.templates.contains_key(id)
    }
}

/// Build `q ⊕ docs`: numbered document blocks in rank order, the
/// instruction, optional history, then `Question: …\nAnswer:`.
pub fn assemble_prompt(
    registry: &TemplateRegistry,
    example: &QaExample,
    kept_docs: &[RankedDocument],
    template_id: &str,
) -> Result<Prompt> {
    let template = registry.get(template_id)?;
    let mut text = String::new();
    for (i, doc) in kept_docs.iter().enumerate() {
        let _ = writeln!(text, "Document {}: {}", i + 1, doc.text);
    }
    if !kept_docs.is_empty() {
        text.push('\n');
    }
    text.push_str(&template.instruction);
    text.push('\n');
    if template.include_history {
        if let Some(turns) = example.history.as_ref().filter(|t| !t.is_empty()) {
            text.push_str("Conversation:\n");
            for (role, utterance) in turns {
                let _ = writeln!(text, "[{role}] {utterance}");
            }
        }
    }
    let _ = write!(text, "Question: {}\nAnswer:", example.query);
    Ok(Prompt {
        template_id: template_id.to_owned(),
        query: example.query.clone(),
        context_docs: kept_docs.iter().map(|d| d.text.clone()).collect(),
        text,
    })
}
