use std::fmt;

use serde::{Deserialize, Serialize};

use super::lexer::{tokenize, Token, TokenKind};

/// Compiler era of a source file, by minor version.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum VersionBucket {
    #[serde(rename = "0.4")]
    V0_4,
    #[serde(rename = "0.5")]
    V0_5,
    #[serde(rename = "0.6")]
    V0_6,
    #[serde(rename = "0.7")]
    V0_7,
    #[serde(rename = "0.8")]
    V0_8,
    #[serde(rename = "none")]
    NoVersion,
}

impl VersionBucket {
    pub const ALL: [VersionBucket; 6] = [
        VersionBucket::V0_4,
        VersionBucket::V0_5,
        VersionBucket::V0_6,
        VersionBucket::V0_7,
        VersionBucket::V0_8,
        VersionBucket::NoVersion,
    ];

    fn from_version(major: u32, minor: u32) -> Self {
        match (major, minor) {
            (0, 4) => VersionBucket::V0_4,
            (0, 5) => VersionBucket::V0_5,
            (0, 6) => VersionBucket::V0_6,
            (0, 7) => VersionBucket::V0_7,
            (0, 8) => VersionBucket::V0_8,
            _ => VersionBucket::NoVersion,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            VersionBucket::V0_4 => "0.4",
            VersionBucket::V0_5 => "0.5",
            VersionBucket::V0_6 => "0.6",
            VersionBucket::V0_7 => "0.7",
            VersionBucket::V0_8 => "0.8",
            VersionBucket::NoVersion => "No version",
        }
    }
}

impl fmt::Display for VersionBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Buckets a file by its first `pragma solidity` directive. Range pragmas
/// use their lowest admitted version; anything unparseable is `NoVersion`.
pub fn detect_version(source: &str) -> VersionBucket {
    let tokens: Vec<Token> = tokenize(source)
        .into_iter()
        .filter(|t| !t.kind.is_trivia())
        .collect();
    let start = tokens.windows(2).position(|w| {
        w[0].kind == TokenKind::Ident
            && w[0].text(source) == "pragma"
            && w[1].kind == TokenKind::Ident
            && w[1].text(source) == "solidity"
    });
    let Some(start) = start else {
        return VersionBucket::NoVersion;
    };
    let mut lowest: Option<(u32, u32)> = None;
    let mut upper_only = false;
    for tok in tokens[start + 2..].iter() {
        let text = tok.text(source);
        match tok.kind {
            TokenKind::Punct if text == ";" => break,
            TokenKind::Punct => upper_only = text == "<" || text == "<=",
            TokenKind::Number => {
                if !upper_only {
                    if let Some(v) = parse_major_minor(text) {
                        lowest = Some(lowest.map_or(v, |l| l.min(v)));
                    }
                }
                upper_only = false;
            }
            _ => {}
        }
    }
    lowest.map_or(VersionBucket::NoVersion, |(major, minor)| {
        VersionBucket::from_version(major, minor)
    })
}

fn parse_major_minor(text: &str) -> Option<(u32, u32)> {
    let mut parts = text.split('.');
    let major = parts.next()?.parse().ok()?;
    let minor = parts.next()?.parse().ok()?;
    Some((major, minor))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(
            detect_version("pragma solidity ^0.8.19;"),
            VersionBucket::V0_8
        );
        assert_eq!(detect_version("contract A {}"), VersionBucket::NoVersion);
        assert_eq!(
            detect_version("pragma solidity >=0.6.0 <0.8.0;"),
            VersionBucket::V0_6
        );
    }

    #[test]
    fn variants() {
        assert_eq!(
            detect_version("pragma solidity <0.8.0 >=0.5.2;"),
            VersionBucket::V0_5
        );
        assert_eq!(
            detect_version("pragma solidity 0.7.6;"),
            VersionBucket::V0_7
        );
        assert_eq!(
            detect_version("pragma solidity ~0.4.24;"),
            VersionBucket::V0_4
        );
        assert_eq!(
            detect_version("pragma solidity >=0.4.22<0.9.0;"),
            VersionBucket::V0_4
        );
        assert_eq!(
            detect_version("pragma solidity ^0.5.0 || ^0.6.0;"),
            VersionBucket::V0_5
        );
        assert_eq!(
            detect_version("pragma solidity <0.6.0;"),
            VersionBucket::NoVersion
        );
        assert_eq!(
            detect_version("pragma solidity ^0.3.6;"),
            VersionBucket::NoVersion
        );
        assert_eq!(
            detect_version("pragma experimental ABIEncoderV2;"),
            VersionBucket::NoVersion
        );
        // first directive wins, commented-out pragmas do not count
        assert_eq!(
            detect_version(
                "// pragma solidity ^0.4.0;\npragma solidity ^0.6.2;\npragma solidity ^0.8.0;"
            ),
            VersionBucket::V0_6
        );
    }
}
