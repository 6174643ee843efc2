//! Solidity source normalization and snippet extraction.
//!
//! Normalization drops comments plus `pragma`/`import` lines while leaving
//! every other byte (including string literals) untouched. Extraction then
//! locates contract- and function-level declaration headers with regular
//! expressions and walks a string-aware brace scanner to find each body's
//! extent — plain regexes cannot balance nested braces.

use std::collections::HashSet;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash::collapse_ws;

/// Solidity source with comments and `pragma`/`import` lines removed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedSource {
    pub text: String,
    /// Address (or other identifier) of the original document; informational.
    pub provenance: String,
}

impl NormalizedSource {
    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        self.provenance = provenance.into();
        self
    }
}

/// Byte span into [`NormalizedSource::text`]; `end` is exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContractKind {
    Contract,
    Interface,
    Library,
    AbstractContract,
}

/// One top-level `contract`/`interface`/`library` declaration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContractSnippet {
    pub name: String,
    pub kind: ContractKind,
    pub body: String,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionKind {
    Function,
    Constructor,
    Fallback,
    Receive,
    Modifier,
}

/// One function-level code unit: the model's atomic input.
///
/// `name` is empty for nameless units (constructor, fallback, receive, and
/// the pre-0.6 `function()` fallback form); `kind` tells them apart.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionSnippet {
    pub name: String,
    pub owner: String,
    pub kind: FunctionKind,
    pub text: String,
    pub span: Span,
}

/// Extraction options. Constructors, fallback/receive handlers, and
/// modifiers are treated as function-level units by default since they carry
/// intent (owner-gating plumbing in particular); turn them off to keep only
/// plain `function` definitions.
#[derive(Debug, Clone, Copy)]
pub struct ExtractOptions {
    pub include_special_units: bool,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions {
            include_special_units: true,
        }
    }
}

/// Concatenate multi-file contract sources into one document, separated by
/// single newlines, in the given order.
pub fn merge_files(files: &[(String, String)]) -> Result<String> {
    if files.is_empty() {
        return Err(Error::NoFiles);
    }
    Ok(files
        .iter()
        .map(|(_, text)| text.as_str())
        .collect::<Vec<_>>()
        .join("\n"))
}

/// Drop comments and `pragma`/`import` lines. Idempotent; string literals
/// are preserved byte-for-byte even when they contain `//`, `pragma`, etc.
pub fn normalize_source(raw: &str) -> Result<NormalizedSource> {
    let stripped = strip_comments(raw)?;
    let kept: Vec<&str> = stripped
        .split('\n')
        .filter(|line| !is_dropped_line(line))
        .collect();
    Ok(NormalizedSource {
        text: kept.join("\n"),
        provenance: String::new(),
    })
}

fn is_dropped_line(line: &str) -> bool {
    let t = line.trim_start();
    starts_with_keyword(t, "pragma") || starts_with_keyword(t, "import")
}

fn starts_with_keyword(text: &str, keyword: &str) -> bool {
    text.starts_with(keyword)
        && !text[keyword.len()..]
            .chars()
            .next()
            .is_some_and(is_ident_char)
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '$'
}

/// Remove `//` and `/* */` comments, leaving strings intact. Line comments
/// keep their terminating newline; block comments vanish entirely.
fn strip_comments(raw: &str) -> Result<String> {
    let bytes = raw.as_bytes();
    // Bytes of multi-byte UTF-8 chars never collide with the ASCII
    // delimiters matched below, so scanning bytewise is safe.
    let mut out: Vec<u8> = Vec::with_capacity(raw.len());
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b'/' if i + 1 < bytes.len() && bytes[i + 1] == b'/' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'/' if i + 1 < bytes.len() && bytes[i + 1] == b'*' => {
                let open = i;
                i += 2;
                loop {
                    if i + 1 >= bytes.len() {
                        return Err(Error::UnterminatedComment(open));
                    }
                    if bytes[i] == b'*' && bytes[i + 1] == b'/' {
                        i += 2;
                        break;
                    }
                    i += 1;
                }
            }
            b'"' | b'\'' => {
                let quote = b;
                out.push(b);
                i += 1;
                while i < bytes.len() {
                    let c = bytes[i];
                    out.push(c);
                    i += 1;
                    if c == b'\\' && i < bytes.len() {
                        out.push(bytes[i]);
                        i += 1;
                    } else if c == quote || c == b'\n' {
                        // Solidity strings cannot span lines; a raw newline
                        // means malformed input, so close the string rather
                        // than swallow the rest of the file.
                        break;
                    }
                }
            }
            _ => {
                out.push(b);
                i += 1;
            }
        }
    }
    Ok(String::from_utf8(out).expect("input was valid UTF-8"))
}

/// Marks which bytes of `text` sit outside string literals.
fn code_mask(text: &str) -> Vec<bool> {
    let bytes = text.as_bytes();
    let mut mask = vec![true; bytes.len()];
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        if b == b'"' || b == b'\'' {
            let quote = b;
            mask[i] = false;
            i += 1;
            while i < bytes.len() {
                mask[i] = false;
                let c = bytes[i];
                i += 1;
                if c == b'\\' && i < bytes.len() {
                    mask[i] = false;
                    i += 1;
                } else if c == quote || c == b'\n' {
                    break;
                }
            }
        } else {
            i += 1;
        }
    }
    mask
}

/// Scan from the opening brace at `open` to its matching close. Returns the
/// index of the closing brace.
fn match_brace(bytes: &[u8], mask: &[bool], open: usize) -> Result<usize> {
    debug_assert_eq!(bytes[open], b'{');
    let mut depth = 1usize;
    let mut i = open + 1;
    while i < bytes.len() {
        if mask[i] {
            match bytes[i] {
                b'{' => depth += 1,
                b'}' => {
                    depth -= 1;
                    if depth == 0 {
                        return Ok(i);
                    }
                }
                _ => {}
            }
        }
        i += 1;
    }
    Err(Error::UnbalancedBraces(open))
}

fn contract_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"\b(abstract\s+contract|contract|interface|library)\s+([A-Za-z_$][A-Za-z0-9_$]*)")
            .expect("static regex")
    })
}

fn function_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"\b(function|constructor|fallback|receive|modifier)\b").expect("static regex")
    })
}

fn preceded_by_ident(bytes: &[u8], start: usize) -> bool {
    start > 0 && is_ident_char(bytes[start - 1] as char)
}

/// Extract every top-level contract/interface/library declaration, ordered
/// by source position.
pub fn extract_contracts(src: &NormalizedSource) -> Result<Vec<ContractSnippet>> {
    let text = &src.text;
    let bytes = text.as_bytes();
    let mask = code_mask(text);
    let mut out = Vec::new();
    let mut cursor = 0usize;

    for caps in contract_regex().captures_iter(text) {
        let m = caps.get(0).expect("whole match");
        if m.start() < cursor || !mask[m.start()] || preceded_by_ident(bytes, m.start()) {
            continue;
        }
        let keyword = collapse_ws(caps.get(1).expect("keyword").as_str());
        let kind = match keyword.as_str() {
            "contract" => ContractKind::Contract,
            "interface" => ContractKind::Interface,
            "library" => ContractKind::Library,
            "abstract contract" => ContractKind::AbstractContract,
            _ => unreachable!("regex alternatives"),
        };
        let name = caps.get(2).expect("name").as_str().to_string();
        // Find the body's opening brace (inheritance lists may intervene).
        let mut open = None;
        let mut i = m.end();
        while i < bytes.len() {
            if mask[i] && bytes[i] == b'{' {
                open = Some(i);
                break;
            }
            i += 1;
        }
        let Some(open) = open else {
            // Header with no body: unparseable tail, skip it.
            continue;
        };
        let close = match_brace(bytes, &mask, open)?;
        out.push(ContractSnippet {
            name,
            kind,
            body: text[m.start()..=close].to_string(),
            span: Span {
                start: m.start(),
                end: close + 1,
            },
        });
        cursor = close + 1;
    }
    Ok(out)
}

/// Extract function-level units with default options.
pub fn extract_functions(src: &NormalizedSource) -> Result<Vec<FunctionSnippet>> {
    extract_functions_with(src, &ExtractOptions::default())
}

/// Extract function-level units: `function`, and (unless disabled)
/// `constructor`/`fallback`/`receive`/`modifier` definitions. Bodies run
/// through the matching closing brace; interface-style declarations end at
/// `;`. Units nested inside an already-captured body (Yul functions in
/// `assembly` blocks) are not re-captured.
pub fn extract_functions_with(
    src: &NormalizedSource,
    options: &ExtractOptions,
) -> Result<Vec<FunctionSnippet>> {
    let contracts = extract_contracts(src)?;
    let text = &src.text;
    let bytes = text.as_bytes();
    let mask = code_mask(text);
    let mut out = Vec::new();
    let mut cursor = 0usize;

    for caps in function_regex().captures_iter(text) {
        let m = caps.get(0).expect("whole match");
        if m.start() < cursor || !mask[m.start()] || preceded_by_ident(bytes, m.start()) {
            continue;
        }
        let keyword = caps.get(1).expect("keyword").as_str();
        let kind = match keyword {
            "function" => FunctionKind::Function,
            "constructor" => FunctionKind::Constructor,
            "fallback" => FunctionKind::Fallback,
            "receive" => FunctionKind::Receive,
            "modifier" => FunctionKind::Modifier,
            _ => unreachable!(),
        };

        let mut i = skip_ws(bytes, m.end());
        let name = match kind {
            FunctionKind::Function | FunctionKind::Modifier => {
                let (ident, after) = read_ident(text, i);
                if kind == FunctionKind::Function {
                    if ident.is_empty() && (i >= bytes.len() || bytes[i] != b'(') {
                        continue; // `function` not followed by a declaration
                    }
                } else if ident.is_empty() {
                    continue;
                }
                i = after;
                ident
            }
            // Nameless units must introduce a parameter list right away;
            // anything else is an identifier usage of the same word.
            FunctionKind::Constructor | FunctionKind::Fallback | FunctionKind::Receive => {
                if i >= bytes.len() || bytes[i] != b'(' {
                    continue;
                }
                String::new()
            }
        };

        // Walk the header to the body: first `;` or `{` at paren depth 0.
        let mut paren = 0usize;
        let mut end = None; // inclusive index of `;` or `}`
        let mut j = i;
        while j < bytes.len() {
            if mask[j] {
                match bytes[j] {
                    b'(' => paren += 1,
                    b')' => paren = paren.saturating_sub(1),
                    b';' if paren == 0 => {
                        end = Some(j);
                        break;
                    }
                    b'{' if paren == 0 => {
                        end = Some(match_brace(bytes, &mask, j)?);
                        break;
                    }
                    _ => {}
                }
            }
            j += 1;
        }
        let Some(end) = end else { continue };

        // A bodyless, nameless `function` header is a function-typed
        // variable declaration, not a unit.
        if kind == FunctionKind::Function && name.is_empty() && bytes[end] == b';' {
            continue;
        }
        if !options.include_special_units && kind != FunctionKind::Function {
            cursor = end + 1;
            continue;
        }

        let owner = contracts
            .iter()
            .find(|c| c.span.start <= m.start() && m.start() < c.span.end)
            .map(|c| c.name.clone())
            .unwrap_or_default();
        out.push(FunctionSnippet {
            name,
            owner,
            kind,
            text: text[m.start()..=end].to_string(),
            span: Span {
                start: m.start(),
                end: end + 1,
            },
        });
        cursor = end + 1;
    }
    Ok(out)
}

fn skip_ws(bytes: &[u8], mut i: usize) -> usize {
    while i < bytes.len() && (bytes[i] as char).is_whitespace() {
        i += 1;
    }
    i
}

fn read_ident(text: &str, start: usize) -> (String, usize) {
    let bytes = text.as_bytes();
    let mut i = start;
    while i < bytes.len() && is_ident_char(bytes[i] as char) {
        i += 1;
    }
    (text[start..i].to_string(), skip_ws(bytes, i))
}

/// Drop exact duplicates (whitespace-collapsed text), keeping the first
/// occurrence; order otherwise preserved.
pub fn dedupe_functions(snippets: Vec<FunctionSnippet>) -> Vec<FunctionSnippet> {
    let mut seen = HashSet::new();
    snippets
        .into_iter()
        .filter(|s| seen.insert(collapse_ws(&s.text)))
        .collect()
}
