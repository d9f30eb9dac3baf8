//! Error-tolerant Solidity lexer. Comments and whitespace are kept as trivia
//! so callers can recover header documentation and rebuild normalized text.

use std::ops::Range;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Ident,
    Number,
    Str { terminated: bool },
    Punct,
    LineComment { doc: bool },
    BlockComment { doc: bool, terminated: bool },
    Whitespace,
}

impl TokenKind {
    pub fn is_trivia(self) -> bool {
        matches!(
            self,
            TokenKind::LineComment { .. } | TokenKind::BlockComment { .. } | TokenKind::Whitespace
        )
    }

    pub fn is_comment(self) -> bool {
        matches!(
            self,
            TokenKind::LineComment { .. } | TokenKind::BlockComment { .. }
        )
    }

    pub fn is_doc_comment(self) -> bool {
        matches!(
            self,
            TokenKind::LineComment { doc: true } | TokenKind::BlockComment { doc: true, .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Range<usize>,
}

impl Token {
    pub fn text<'a>(&self, src: &'a str) -> &'a str {
        &src[self.span.clone()]
    }
}

const MULTI_PUNCT: [&str; 24] = [
    ">>>=", ">>>", "<<=", ">>=", "=>", "==", "!=", "<=", ">=", "&&", "||", "++", "--", "+=", "-=",
    "*=", "/=", "%=", "|=", "&=", "^=", "<<", ">>", "**",
];

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_' || c == '$'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '$'
}

/// Splits `src` into tokens covering every byte.
pub fn tokenize(src: &str) -> Vec<Token> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < src.len() {
        let start = i;
        let c = src[i..].chars().next().expect("in bounds");
        let kind = if c.is_whitespace() {
            i += c.len_utf8();
            while let Some(c) = src[i..].chars().next().filter(|c| c.is_whitespace()) {
                i += c.len_utf8();
            }
            TokenKind::Whitespace
        } else if src[i..].starts_with("//") {
            i = src[i..].find('\n').map_or(src.len(), |n| i + n);
            let text = &src[start..i];
            TokenKind::LineComment {
                doc: text.starts_with("///") && !text.starts_with("////"),
            }
        } else if src[i..].starts_with("/*") {
            let (end, terminated) = match src[i + 2..].find("*/") {
                Some(n) => (i + 2 + n + 2, true),
                None => (src.len(), false),
            };
            i = end;
            let text = &src[start..i];
            TokenKind::BlockComment {
                doc: text.starts_with("/**") && text != "/**/",
                terminated,
            }
        } else if c == '"' || c == '\'' {
            i += 1;
            let mut terminated = false;
            while i < src.len() {
                match bytes[i] {
                    b'\\' => i = (i + 2).min(src.len()),
                    b'\n' => break,
                    b if b == c as u8 => {
                        i += 1;
                        terminated = true;
                        break;
                    }
                    _ => i += 1,
                }
            }
            // a trailing backslash can push us into the middle of a code point
            while !src.is_char_boundary(i) {
                i += 1;
            }
            TokenKind::Str { terminated }
        } else if is_ident_start(c) {
            i += 1;
            while i < src.len() && is_ident_continue(bytes[i] as char) {
                i += 1;
            }
            TokenKind::Ident
        } else if c.is_ascii_digit() {
            i += 1;
            while i < src.len()
                && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'.')
            {
                i += 1;
            }
            TokenKind::Number
        } else {
            let len = MULTI_PUNCT
                .iter()
                .find(|p| src[i..].starts_with(**p))
                .map_or(c.len_utf8(), |p| p.len());
            i += len;
            TokenKind::Punct
        };
        out.push(Token {
            kind,
            span: start..i,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<(TokenKind, &str)> {
        tokenize(src)
            .into_iter()
            .map(|t| (t.kind, t.text(src)))
            .collect()
    }

    #[test]
    fn covers_every_byte() {
        let src = "function f(uint a) /* c */ public { x >>= 2; // tail\n s = \"a\\\"b\"; }";
        let toks = tokenize(src);
        let rebuilt: String = toks.iter().map(|t| t.text(src)).collect();
        assert_eq!(rebuilt, src);
    }

    #[test]
    fn comments_and_docs() {
        let k = kinds("/// doc\n//// banner\n/** natspec */ /**/ /* plain */");
        assert_eq!(k[0].0, TokenKind::LineComment { doc: true });
        assert_eq!(k[2].0, TokenKind::LineComment { doc: false });
        assert_eq!(
            k[4].0,
            TokenKind::BlockComment {
                doc: true,
                terminated: true
            }
        );
        assert_eq!(
            k[6].0,
            TokenKind::BlockComment {
                doc: false,
                terminated: true
            }
        );
        assert_eq!(
            k[8].0,
            TokenKind::BlockComment {
                doc: false,
                terminated: true
            }
        );
    }

    #[test]
    fn unterminated_constructs() {
        let k = kinds("a /* open");
        assert_eq!(
            k.last().unwrap().0,
            TokenKind::BlockComment {
                doc: false,
                terminated: false
            }
        );
        let k = kinds("s = \"open\nnext");
        assert_eq!(k[4], (TokenKind::Str { terminated: false }, "\"open"));
    }

    #[test]
    fn version_numbers_are_single_tokens() {
        let k = kinds("^0.8.19");
        assert_eq!(
            k,
            vec![(TokenKind::Punct, "^"), (TokenKind::Number, "0.8.19")]
        );
    }
}
