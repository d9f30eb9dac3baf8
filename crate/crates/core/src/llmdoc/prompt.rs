use serde::{Deserialize, Serialize};

pub const SUMMARY_PROMPT_PREFIX: &str =
    "Create a summary(no additional feedback) of this Solidity function: ";
pub const STRUCTURED_TEMPLATE: &str = "Response plain-text template: a brief overview of the function\u{2019}s purpose, implementation details, and noteworthy behaviors, brief parameters description, a brief description of the return value.";
pub const CLASSIFY_SYSTEM: &str =
    "You are a helpful software engineering assistant, your task is to say if the Solidity functions are semantic clones.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptStyle {
    Base,
    #[serde(rename = "structured")]
    StructuredTemplate,
    DirectClassification,
}

impl PromptStyle {
    pub fn as_str(self) -> &'static str {
        match self {
            PromptStyle::Base => "base",
            PromptStyle::StructuredTemplate => "structured",
            PromptStyle::DirectClassification => "direct_classification",
        }
    }
}

impl std::str::FromStr for PromptStyle {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "base" => Ok(PromptStyle::Base),
            "structured" | "structured_template" => Ok(PromptStyle::StructuredTemplate),
            "direct_classification" => Ok(PromptStyle::DirectClassification),
            other => Err(crate::Error::InvalidArgument(format!(
                "unknown prompt style `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "system".into(),
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "user".into(),
            content: content.into(),
        }
    }
}

/// User prompt asking for a summary of `code`.
pub fn summary_prompt(style: PromptStyle, code: &str) -> crate::Result<String> {
    match style {
        PromptStyle::Base => Ok(format!("{SUMMARY_PROMPT_PREFIX}{code}")),
        PromptStyle::StructuredTemplate => Ok(format!(
            "{SUMMARY_PROMPT_PREFIX}{code}\n{STRUCTURED_TEMPLATE}"
        )),
        PromptStyle::DirectClassification => Err(crate::Error::InvalidArgument(
            "the classification style does not produce summaries".into(),
        )),
    }
}

pub fn summary_messages(style: PromptStyle, code: &str) -> crate::Result<Vec<ChatMessage>> {
    Ok(vec![ChatMessage::user(summary_prompt(style, code)?)])
}

/// System and user messages of the zero-shot clone question.
pub fn classification_messages(first: &str, second: &str) -> Vec<ChatMessage> {
    vec![
        ChatMessage::system(CLASSIFY_SYSTEM),
        ChatMessage::user(format!(
            "Here are the two code functions:\nFirst function: {first}\nSecond function: {second}\nYour response is just YES or NO."
        )),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rendered_prompts() {
        assert_eq!(
            summary_prompt(PromptStyle::Base, "function f() {}").unwrap(),
            "Create a summary(no additional feedback) of this Solidity function: function f() {}"
        );
        let s = summary_prompt(PromptStyle::StructuredTemplate, "X").unwrap();
        assert!(s.starts_with("Create a summary(no additional feedback) of this Solidity function: X\nResponse plain-text template: a brief overview of the function’s purpose"));
        let m = classification_messages("A", "B");
        assert_eq!(m[0].role, "system");
        assert_eq!(
            m[1].content,
            "Here are the two code functions:\nFirst function: A\nSecond function: B\nYour response is just YES or NO."
        );
        assert!(summary_prompt(PromptStyle::DirectClassification, "x").is_err());
    }
}
