//! Solidity function extraction.
//!
//! The parser is deliberately shallow: it tracks contract bodies and function
//! headers through brace/paren matching over a token stream and never builds
//! a full AST. That keeps it tolerant of syntax across compiler eras and of
//! files that do not fully parse.

pub mod lexer;
mod normalize;
mod signature;
mod version;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::SourceFile;
use crate::error::Error;
use lexer::{tokenize, Token, TokenKind};

pub use normalize::{normalize_code, normalize_code_with_diagnostics, Diagnostic};
pub use signature::{
    canonical_type_token, parse_signature, signature_of, signatures_compatible, Signature,
};
pub use version::{detect_version, VersionBucket};

pub const DEFAULT_MIN_COMMENT_TOKENS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Visibility {
    Public,
    External,
    Internal,
    Private,
    Default,
}

impl Visibility {
    pub const ALL: [Visibility; 5] = [
        Visibility::Public,
        Visibility::External,
        Visibility::Internal,
        Visibility::Private,
        Visibility::Default,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Visibility::Public => "public",
            Visibility::External => "external",
            Visibility::Internal => "internal",
            Visibility::Private => "private",
            Visibility::Default => "default",
        }
    }

    pub fn is_interface(self) -> bool {
        matches!(self, Visibility::Public | Visibility::External)
    }
}

impl fmt::Display for Visibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Visibility {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Visibility::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown visibility `{s}`")))
    }
}

/// A state-variable declaration. Recorded for reference only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateVariable {
    pub name: String,
    #[serde(rename = "type")]
    pub type_name: String,
}

/// One extracted function.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionRecord {
    /// `<first 16 hex digits of file_id>#<ordinal in file>`; unique within a corpus.
    pub function_id: String,
    pub file_id: String,
    /// `<file_id>:<contract_name>`.
    pub contract_id: String,
    pub contract_name: String,
    pub solidity_version: VersionBucket,
    pub contract_variables: Vec<StateVariable>,
    pub function_name: String,
    pub function_visibility: Visibility,
    /// Lexical tokens in the declaration, comments excluded.
    pub token_length: usize,
    /// Normalized declaration text, header through body.
    pub function_code: String,
    pub function_comment: Option<String>,
    /// Characters in `function_code`.
    pub char_length: usize,
}

impl FunctionRecord {
    /// Whitespace-separated words of the normalized code.
    pub fn code_word_count(&self) -> usize {
        self.function_code.split_whitespace().count()
    }

    /// Visibility as the compiler applies it: an unmarked contract member
    /// is public (pre-0.5 default), an unmarked free function internal.
    pub fn effective_visibility(&self) -> Visibility {
        match self.function_visibility {
            Visibility::Default if self.contract_name.is_empty() => Visibility::Internal,
            Visibility::Default => Visibility::Public,
            v => v,
        }
    }

    pub fn is_public_api(&self) -> bool {
        self.effective_visibility().is_interface()
    }

    pub fn comment_token_count(&self) -> usize {
        self.function_comment
            .as_deref()
            .map_or(0, |c| c.split_whitespace().count())
    }
}

/// Result of extracting one file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Extraction {
    pub functions: Vec<FunctionRecord>,
    pub contract_count: usize,
    pub diagnostics: Vec<Diagnostic>,
}

/// True iff the function is (effectively) public/external with a header comment of at
/// least `min_comment_tokens` whitespace-separated tokens.
pub fn passes_filters(record: &FunctionRecord, min_comment_tokens: usize) -> bool {
    record.is_public_api()
        && record.function_comment.is_some()
        && record.comment_token_count() >= min_comment_tokens
}

/// Strips doc-comment delimiters and gutters, collapsing whitespace.
pub fn clean_doc_comment(raw: &str) -> String {
    let body = if let Some(inner) = raw.strip_prefix("/**") {
        inner.strip_suffix("*/").unwrap_or(inner)
    } else {
        raw.strip_prefix("///").unwrap_or(raw)
    };
    let mut words = Vec::new();
    for line in body.lines() {
        let line = line.trim_start().trim_start_matches('*');
        let line = line.strip_prefix("///").unwrap_or(line);
        words.extend(line.split_whitespace());
    }
    words.join(" ")
}

const SKIPPED_MEMBERS: [&str; 8] = [
    "constructor",
    "modifier",
    "event",
    "error",
    "struct",
    "enum",
    "using",
    "type",
];

const VAR_KEYWORDS: [&str; 8] = [
    "public",
    "private",
    "internal",
    "constant",
    "immutable",
    "override",
    "transient",
    "external",
];

struct Parser<'a> {
    src: &'a str,
    all: Vec<Token>,
    /// Indices into `all` of non-trivia tokens.
    sig: Vec<usize>,
    diagnostics: Vec<Diagnostic>,
}

struct RawFunction {
    contract: usize,
    name: String,
    visibility: Visibility,
    start_sig: usize,
    end_sig: usize,
    comment: Option<String>,
}

struct Contract {
    name: String,
    variables: Vec<StateVariable>,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        let all = tokenize(src);
        let sig = (0..all.len())
            .filter(|&i| !all[i].kind.is_trivia())
            .collect();
        Parser {
            src,
            all,
            sig,
            diagnostics: Vec::new(),
        }
    }

    fn text(&self, s: usize) -> &'a str {
        self.all[self.sig[s]].text(self.src)
    }

    fn is_ident(&self, s: usize) -> bool {
        self.all[self.sig[s]].kind == TokenKind::Ident
    }

    fn offset(&self, s: usize) -> usize {
        self.sig
            .get(s)
            .map_or(self.src.len(), |&i| self.all[i].span.start)
    }

    fn diag(&mut self, s: usize, message: impl Into<String>) {
        let offset = self.offset(s);
        self.diagnostics.push(Diagnostic {
            offset,
            message: message.into(),
        });
    }

    /// Index of the token closing the group opened at `open`, or `None` at EOF.
    fn close_of(&self, open: usize) -> Option<usize> {
        let (o, c) = match self.text(open) {
            "{" => ("{", "}"),
            "(" => ("(", ")"),
            "[" => ("[", "]"),
            _ => return None,
        };
        let mut depth = 0usize;
        for s in open..self.sig.len() {
            let t = self.text(s);
            if t == o {
                depth += 1;
            } else if t == c {
                depth -= 1;
                if depth == 0 {
                    return Some(s);
                }
            }
        }
        None
    }

    /// Next `;` at nesting depth zero, skipping any bracketed groups.
    fn statement_end(&self, from: usize, stop_at_brace: bool) -> usize {
        let mut s = from;
        while s < self.sig.len() {
            match self.text(s) {
                ";" => return s,
                "{" if stop_at_brace => return s,
                "{" | "(" | "[" => s = self.close_of(s).unwrap_or(self.sig.len()),
                "}" => return s.saturating_sub(1),
                _ => {}
            }
            s += 1;
        }
        self.sig.len().saturating_sub(1)
    }

    fn header_comment(&self, start_sig: usize) -> Option<String> {
        let mut i = self.sig[start_sig];
        let mut newlines = 0usize;
        let mut docs: Vec<&str> = Vec::new();
        let mut line_run = false;
        while i > 0 {
            i -= 1;
            let tok = &self.all[i];
            let text = tok.text(self.src);
            match tok.kind {
                TokenKind::Whitespace => {
                    newlines += text.matches('\n').count();
                    if newlines >= 2 {
                        break;
                    }
                }
                TokenKind::LineComment { doc: true } if docs.is_empty() || line_run => {
                    docs.push(text);
                    line_run = true;
                    newlines = 0;
                }
                TokenKind::BlockComment { doc: true, .. } if docs.is_empty() => {
                    docs.push(text);
                    break;
                }
                _ => break,
            }
        }
        if docs.is_empty() {
            return None;
        }
        docs.reverse();
        let cleaned: Vec<String> = docs.iter().map(|d| clean_doc_comment(d)).collect();
        let joined = cleaned
            .iter()
            .filter(|c| !c.is_empty())
            .cloned()
            .collect::<Vec<_>>()
            .join(" ");
        (!joined.is_empty()).then_some(joined)
    }

    fn state_variable(&self, from: usize, to: usize) -> Option<StateVariable> {
        let mut end = (from..=to).find(|&s| self.text(s) == "=").unwrap_or(to);
        let mut toks: Vec<&str> = (from..end).map(|s| self.text(s)).collect();
        // drop `override(A, B)` lists and trailing attribute keywords
        if let Some(p) = toks.iter().position(|t| *t == "override") {
            if toks.get(p + 1) == Some(&"(") {
                if let Some(q) = toks[p..].iter().position(|t| *t == ")") {
                    toks.drain(p + 1..=p + q);
                }
            }
        }
        toks.retain(|t| !VAR_KEYWORDS.contains(t));
        end = toks.len();
        if end < 2 {
            return None;
        }
        let name = toks[end - 1];
        if !name
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic() || c == '_' || c == '$')
        {
            return None;
        }
        Some(StateVariable {
            name: name.to_string(),
            type_name: signature::join_type_tokens(
                toks[..end - 1]
                    .iter()
                    .map(|t| signature::canonical_type_token(t)),
            ),
        })
    }

    /// Parses a function starting at the keyword; returns it (if it is a
    /// declaration) and the index of its last token.
    fn function(&mut self, kw: usize, contract: usize) -> (Option<RawFunction>, usize) {
        let keyword = self.text(kw);
        let mut s = kw + 1;
        let name = if keyword == "function" {
            if s < self.sig.len() && self.is_ident(s) {
                s += 1;
                self.text(s - 1).to_string()
            } else {
                "fallback".to_string()
            }
        } else {
            keyword.to_string()
        };
        if s >= self.sig.len() || self.text(s) != "(" {
            self.diag(kw, format!("malformed declaration of `{name}`"));
            return (None, kw);
        }
        let Some(params_close) = self.close_of(s) else {
            self.diag(kw, format!("unterminated parameter list in `{name}`"));
            return (None, self.sig.len() - 1);
        };
        let mut visibility = Visibility::Default;
        let mut t = params_close + 1;
        let mut named_tail = false;
        let end;
        loop {
            if t >= self.sig.len() {
                self.diag(kw, format!("declaration of `{name}` runs to end of file"));
                end = self.sig.len() - 1;
                break;
            }
            match self.text(t) {
                ";" => {
                    end = t;
                    break;
                }
                "{" => {
                    end = match self.close_of(t) {
                        Some(close) => close,
                        None => {
                            self.diag(t, format!("unterminated body of `{name}`"));
                            self.sig.len() - 1
                        }
                    };
                    break;
                }
                "(" | "[" => t = self.close_of(t).unwrap_or(self.sig.len()),
                "public" => visibility = Visibility::Public,
                "external" => visibility = Visibility::External,
                "internal" => visibility = Visibility::Internal,
                "private" => visibility = Visibility::Private,
                "}" => {
                    self.diag(t, format!("unexpected `}}` in header of `{name}`"));
                    return (None, t - 1);
                }
                _ => {
                    if self.is_ident(t) {
                        named_tail = true;
                    }
                }
            }
            t += 1;
        }
        // `function (uint) external cb;` declares a variable of function type
        let unnamed = keyword == "function" && kw + 1 == s;
        if unnamed && self.text(end) == ";" && named_tail {
            return (None, end);
        }
        let comment = self.header_comment(kw);
        (
            Some(RawFunction {
                contract,
                name,
                visibility,
                start_sig: kw,
                end_sig: end,
                comment,
            }),
            end,
        )
    }

    fn contract_body(
        &mut self,
        open: usize,
        contract: usize,
        contracts: &mut [Contract],
    ) -> (Vec<RawFunction>, usize) {
        let close = self.close_of(open);
        if close.is_none() {
            self.diag(
                open,
                format!("unterminated body of `{}`", contracts[contract].name),
            );
        }
        let stop = close.unwrap_or(self.sig.len());
        let mut out = Vec::new();
        let mut s = open + 1;
        while s < stop {
            let t = self.text(s);
            if matches!(t, "function" | "fallback" | "receive") && self.is_ident(s) {
                let (f, end) = self.function(s, contract);
                out.extend(f);
                s = end + 1;
            } else if SKIPPED_MEMBERS.contains(&t) {
                s = self.statement_end(s, true);
                if s < self.sig.len() && self.text(s) == "{" {
                    s = self.close_of(s).unwrap_or(stop);
                }
                s += 1;
            } else if t == "{" {
                s = self.close_of(s).unwrap_or(stop) + 1;
            } else {
                let end = self.statement_end(s, false).min(stop.saturating_sub(1));
                if end >= s && self.text(end) == ";" {
                    if let Some(v) = self.state_variable(s, end) {
                        contracts[contract].variables.push(v);
                    }
                }
                s = end + 1;
            }
        }
        (out, stop)
    }

    fn parse(&mut self) -> (Vec<Contract>, Vec<RawFunction>) {
        let mut contracts: Vec<Contract> = Vec::new();
        let mut functions = Vec::new();
        let mut s = 0;
        while s < self.sig.len() {
            let t = self.text(s);
            if matches!(t, "contract" | "library" | "interface") && self.is_ident(s) {
                if s + 1 >= self.sig.len() || !self.is_ident(s + 1) {
                    s += 1;
                    continue;
                }
                let name = self.text(s + 1).to_string();
                let Some(open) =
                    (s + 2..self.sig.len()).find(|&i| matches!(self.text(i), "{" | ";"))
                else {
                    self.diag(s, format!("`{name}` has no body"));
                    break;
                };
                if self.text(open) == ";" {
                    s = open + 1;
                    continue;
                }
                contracts.push(Contract {
                    name,
                    variables: Vec::new(),
                });
                let (fs, close) = self.contract_body(open, contracts.len() - 1, &mut contracts);
                functions.extend(fs);
                s = close + 1;
            } else if t == "function" && self.is_ident(s) {
                // free function at file level
                if !contracts.iter().any(|c| c.name.is_empty()) {
                    contracts.push(Contract {
                        name: String::new(),
                        variables: Vec::new(),
                    });
                }
                let idx = contracts
                    .iter()
                    .position(|c| c.name.is_empty())
                    .expect("pushed");
                let (f, end) = self.function(s, idx);
                functions.extend(f);
                s = end + 1;
            } else if t == "{" {
                s = self.close_of(s).unwrap_or(self.sig.len()) + 1;
            } else {
                s += 1;
            }
        }
        (contracts, functions)
    }
}

/// Extracts every function declaration in the file, across contracts,
/// libraries, interfaces and file-level functions, in source order.
pub fn extract_functions(file: &SourceFile) -> Extraction {
    let src = file.raw_text.as_str();
    let version = detect_version(src);
    let mut parser = Parser::new(src);
    let (contracts, raw) = parser.parse();
    let id_prefix = &file.file_id[..file.file_id.len().min(16)];

    let mut functions = Vec::with_capacity(raw.len());
    for (ordinal, f) in raw.into_iter().enumerate() {
        let start = parser.offset(f.start_sig);
        let end = parser.all[parser.sig[f.end_sig]].span.end;
        let (code, diags) = normalize_code_with_diagnostics(&src[start..end]);
        parser
            .diagnostics
            .extend(diags.into_iter().map(|d| Diagnostic {
                offset: d.offset + start,
                ..d
            }));
        let contract = &contracts[f.contract];
        functions.push(FunctionRecord {
            function_id: format!("{id_prefix}#{ordinal:05}"),
            file_id: file.file_id.clone(),
            contract_id: format!("{}:{}", file.file_id, contract.name),
            contract_name: contract.name.clone(),
            solidity_version: version,
            contract_variables: contract.variables.clone(),
            function_name: f.name,
            function_visibility: f.visibility,
            token_length: f.end_sig - f.start_sig + 1,
            char_length: code.chars().count(),
            function_code: code,
            function_comment: f.comment,
        });
    }
    if functions.is_empty() {
        parser.diagnostics.push(Diagnostic {
            offset: 0,
            message: "no function declarations found".into(),
        });
    }
    Extraction {
        functions,
        contract_count: contracts.iter().filter(|c| !c.name.is_empty()).count(),
        diagnostics: parser.diagnostics,
    }
}
