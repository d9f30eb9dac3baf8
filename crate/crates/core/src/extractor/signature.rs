use std::fmt;

use serde::{Deserialize, Serialize};

use super::lexer::{tokenize, Token, TokenKind};
use super::FunctionRecord;
use crate::error::{Error, Result};

/// Parameter and return types of a function, canonicalized.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Signature {
    pub parameter_count: usize,
    pub parameter_types: Vec<String>,
    pub return_types: Vec<String>,
}

impl Signature {
    pub fn new(parameter_types: Vec<String>, return_types: Vec<String>) -> Self {
        Signature {
            parameter_count: parameter_types.len(),
            parameter_types,
            return_types,
        }
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({})->({})",
            self.parameter_types.join(","),
            self.return_types.join(",")
        )
    }
}

/// Elementary type aliases. User-defined types compare by name.
pub fn canonical_type_token(token: &str) -> &str {
    match token {
        "uint" => "uint256",
        "int" => "int256",
        "byte" => "bytes1",
        "ufixed" => "ufixed128x18",
        "fixed" => "fixed128x18",
        other => other,
    }
}

const DATA_LOCATIONS: [&str; 4] = ["memory", "storage", "calldata", "indexed"];

fn is_word(text: &str) -> bool {
    text.chars()
        .next()
        .is_some_and(|c| c.is_ascii_alphanumeric() || c == '_' || c == '$')
}

/// Joins type tokens, spacing only between adjacent words (`address payable`).
pub(crate) fn join_type_tokens<'a>(tokens: impl IntoIterator<Item = &'a str>) -> String {
    let mut out = String::new();
    let mut prev_word = false;
    for t in tokens {
        let word = is_word(t);
        if word && prev_word {
            out.push(' ');
        }
        out.push_str(t);
        prev_word = word;
    }
    out
}

/// Canonical type of one `type [location] [name]` parameter.
fn parameter_type(tokens: &[&str]) -> String {
    let mut kept: Vec<&str> = tokens
        .iter()
        .copied()
        .filter(|t| !DATA_LOCATIONS.contains(t))
        .collect();
    if kept.len() >= 2 {
        let last = *kept.last().expect("len >= 2");
        if is_word(last)
            && last != "payable"
            && !last.chars().next().is_some_and(|c| c.is_ascii_digit())
        {
            kept.pop();
        }
    }
    join_type_tokens(kept.into_iter().map(canonical_type_token))
}

/// Splits a parenthesised list (contents only) on top-level commas.
fn split_list<'a>(tokens: &[&'a str]) -> Vec<Vec<&'a str>> {
    if tokens.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Vec::new()];
    let mut depth = 0i32;
    for &t in tokens {
        match t {
            "(" | "[" => depth += 1,
            ")" | "]" => depth -= 1,
            "," if depth == 0 => {
                out.push(Vec::new());
                continue;
            }
            _ => {}
        }
        out.last_mut().expect("nonempty").push(t);
    }
    out
}

/// Index just past the `)` matching the `(` at `open`.
fn matching_paren(tokens: &[&str], open: usize) -> Option<usize> {
    let mut depth = 0i32;
    for (i, &t) in tokens.iter().enumerate().skip(open) {
        match t {
            "(" => depth += 1,
            ")" => {
                depth -= 1;
                if depth == 0 {
                    return Some(i + 1);
                }
            }
            _ => {}
        }
    }
    None
}

/// Parses the header of a function declaration.
pub fn parse_signature(code: &str) -> Result<Signature> {
    let tokens: Vec<Token> = tokenize(code)
        .into_iter()
        .filter(|t| !t.kind.is_trivia())
        .collect();
    let texts: Vec<&str> = tokens.iter().map(|t| t.text(code)).collect();
    let malformed = |what: &str| Error::Contract(format!("cannot parse signature: {what}"));

    let kw = texts
        .iter()
        .position(|t| matches!(*t, "function" | "fallback" | "receive"))
        .ok_or_else(|| malformed("no function keyword"))?;
    let open = texts[kw + 1..]
        .iter()
        .position(|t| *t == "(")
        .map(|p| kw + 1 + p)
        .ok_or_else(|| malformed("no parameter list"))?;
    if open > kw + 2 {
        return Err(malformed("unexpected tokens before parameter list"));
    }
    let close =
        matching_paren(&texts, open).ok_or_else(|| malformed("unbalanced parameter list"))?;
    let params = split_list(&texts[open + 1..close - 1]);

    // header runs until the body or the terminating semicolon
    let mut returns = Vec::new();
    let mut i = close;
    while i < texts.len() {
        match texts[i] {
            "{" | ";" => break,
            "(" => i = matching_paren(&texts, i).ok_or_else(|| malformed("unbalanced header"))?,
            "returns" if tokens[i].kind == TokenKind::Ident => {
                let ret_open = i + 1;
                if texts.get(ret_open) != Some(&"(") {
                    return Err(malformed("`returns` without list"));
                }
                let ret_close = matching_paren(&texts, ret_open)
                    .ok_or_else(|| malformed("unbalanced returns"))?;
                returns = split_list(&texts[ret_open + 1..ret_close - 1]);
                i = ret_close;
            }
            _ => i += 1,
        }
    }

    Ok(Signature::new(
        params.iter().map(|p| parameter_type(p)).collect(),
        returns.iter().map(|p| parameter_type(p)).collect(),
    ))
}

pub fn signature_of(record: &FunctionRecord) -> Result<Signature> {
    parse_signature(&record.function_code)
}

pub fn signatures_compatible(a: &Signature, b: &Signature) -> bool {
    a == b
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(code: &str) -> Signature {
        parse_signature(code).unwrap()
    }

    #[test]
    fn canonicalization_makes_aliases_compatible() {
        let a =
            sig("function f(address to, uint256 amount) public returns (bool) { return true; }");
        let b =
            sig("function g(address to, uint amount) external returns (bool ok) { ok = true; }");
        assert_eq!(a.parameter_types, vec!["address", "uint256"]);
        assert_eq!(a.return_types, vec!["bool"]);
        assert!(signatures_compatible(&a, &b));
    }

    #[test]
    fn parameter_count_mismatch_is_incompatible() {
        let a = sig("function f(address a) public {}");
        let b = sig("function f(address a, uint256 v) public {}");
        assert!(!signatures_compatible(&a, &b));
        assert_eq!(a.parameter_count, 1);
        assert!(signatures_compatible(&a, &a.clone()));
    }

    #[test]
    fn modifiers_and_locations_are_ignored() {
        let a = sig("function f(string memory s, uint[] calldata xs) public virtual override onlyOwner(1, 2) returns (uint) {}");
        assert_eq!(a.parameter_types, vec!["string", "uint256[]"]);
        assert_eq!(a.return_types, vec!["uint256"]);
        let b = sig("function f(string storage, uint256[] memory) internal returns (uint256);");
        assert!(signatures_compatible(&a, &b));
    }

    #[test]
    fn complex_types() {
        let s = sig("function f(mapping(uint => address) storage m, address payable p, IERC20.Info i, bytes32[2] h) internal {}");
        assert_eq!(
            s.parameter_types,
            vec![
                "mapping(uint256=>address)",
                "address payable",
                "IERC20.Info",
                "bytes32[2]"
            ]
        );
    }

    #[test]
    fn fallback_and_unnamed() {
        assert_eq!(sig("fallback() external payable {}").parameter_count, 0);
        assert_eq!(sig("function () payable { }").parameter_count, 0);
        assert!(parse_signature("uint x;").is_err());
    }
}
