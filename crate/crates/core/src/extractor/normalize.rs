use serde::{Deserialize, Serialize};

use super::lexer::{tokenize, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    /// Byte offset into the text the diagnostic refers to.
    pub offset: usize,
    pub message: String,
}

/// Strips comments, collapses whitespace runs to one space and trims.
/// String literals pass through untouched.
pub fn normalize_code(raw: &str) -> String {
    normalize_code_with_diagnostics(raw).0
}

/// [`normalize_code`], also reporting unterminated block comments (which are
/// stripped to the end of the text).
pub fn normalize_code_with_diagnostics(raw: &str) -> (String, Vec<Diagnostic>) {
    let mut out = String::with_capacity(raw.len());
    let mut diagnostics = Vec::new();
    let mut pending_space = false;
    for tok in tokenize(raw) {
        match tok.kind {
            TokenKind::Whitespace | TokenKind::LineComment { .. } => pending_space = true,
            TokenKind::BlockComment { terminated, .. } => {
                if !terminated {
                    diagnostics.push(Diagnostic {
                        offset: tok.span.start,
                        message: "unterminated block comment".into(),
                    });
                }
                pending_space = true;
            }
            _ => {
                if pending_space && !out.is_empty() {
                    out.push(' ');
                }
                pending_space = false;
                out.push_str(tok.text(raw));
            }
        }
    }
    (out, diagnostics)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(normalize_code("a\n\n  b /* x */ c"), "a b c");
        assert_eq!(
            normalize_code("require(x, \"a  b\");"),
            "require(x, \"a  b\");"
        );
        assert_eq!(normalize_code("a b c"), "a b c");
        assert_eq!(
            normalize_code("x = 1; // inline note\n y = 2;"),
            "x = 1; y = 2;"
        );
        assert_eq!(normalize_code("a/*x*/b"), "a b");
        assert_eq!(normalize_code("  \n"), "");
    }

    #[test]
    fn unterminated_block_comment_is_reported() {
        let (text, diags) = normalize_code_with_diagnostics("a = 1; /* never closed\n b = 2;");
        assert_eq!(text, "a = 1;");
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].offset, 7);
    }

    #[test]
    fn comment_markers_inside_strings_survive() {
        let src = "s = \"// not a comment /* nor this */\";";
        assert_eq!(normalize_code(src), src);
    }
}
