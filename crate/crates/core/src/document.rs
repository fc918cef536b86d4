//! Parsing of `SKILL.md` / `SKILLSET.md` documents.
//!
//! A skill document is a YAML frontmatter block delimited by `---` lines,
//! followed by a Markdown body. The parser is deliberately restricted to the
//! frontmatter shapes the skill format actually uses: string scalars
//! (plain, quoted, or `|`/`>` block), flat lists of scalars, and the
//! skillset `skills` list of `{name, source_url}` maps. Anything else —
//! anchors, aliases, tags, nested mappings — is rejected as malformed.
//!
//! Every field records the 1-based line it was declared on so that
//! validation diagnostics can point at the offending line.

use std::collections::BTreeMap;
use std::fmt;

/// A frontmatter value: a scalar, a list of scalars, or (for the skillset
/// `skills` key only) a list of flat string maps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FrontmatterValue {
    Scalar(String),
    List(Vec<String>),
    EntryList(Vec<BTreeMap<String, String>>),
}

impl FrontmatterValue {
    /// The scalar text, if this value is a scalar.
    pub fn as_scalar(&self) -> Option<&str> {
        match self {
            FrontmatterValue::Scalar(s) => Some(s),
            _ => None,
        }
    }

    /// The list items, if this value is a list of scalars.
    pub fn as_list(&self) -> Option<&[String]> {
        match self {
            FrontmatterValue::List(items) => Some(items),
            _ => None,
        }
    }

    /// The map entries, if this value is an entry list.
    pub fn as_entries(&self) -> Option<&[BTreeMap<String, String>]> {
        match self {
            FrontmatterValue::EntryList(entries) => Some(entries),
            _ => None,
        }
    }
}

/// A parsed `SKILL.md`/`SKILLSET.md` file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkillDocument {
    /// Frontmatter fields in declaration-independent (sorted) order.
    pub frontmatter: BTreeMap<String, FrontmatterValue>,
    /// Markdown body after the closing delimiter, verbatim.
    pub body: String,
    /// 1-based line number (in the whole file) of each frontmatter key.
    pub field_lines: BTreeMap<String, usize>,
    /// 1-based line number of the first body line.
    pub body_start_line: usize,
    /// Number of newline-delimited lines in the whole file.
    pub total_lines: usize,
}

impl SkillDocument {
    /// Scalar value of a frontmatter field, if present and scalar.
    pub fn scalar(&self, key: &str) -> Option<&str> {
        self.frontmatter.get(key).and_then(FrontmatterValue::as_scalar)
    }

    /// Line number the given field was declared on.
    pub fn field_line(&self, key: &str) -> Option<usize> {
        self.field_lines.get(key).copied()
    }
}

/// Why a document failed to parse. Both variants are data, not panics:
/// the validator turns them into a fatal diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseFailureKind {
    /// No opening `---` on line 1, or no closing `---` at all.
    MissingFrontmatter,
    /// Delimiters present but the block does not parse.
    MalformedYaml,
}

/// A frontmatter parse failure with an optional source line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseFailure {
    pub kind: ParseFailureKind,
    /// 1-based line number, where one can be pointed at.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ParseFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {}: {}", line, self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ParseFailure {}

impl ParseFailure {
    fn missing(line: Option<usize>, message: impl Into<String>) -> Self {
        ParseFailure {
            kind: ParseFailureKind::MissingFrontmatter,
            line,
            message: message.into(),
        }
    }

    fn malformed(line: usize, message: impl Into<String>) -> Self {
        ParseFailure {
            kind: ParseFailureKind::MalformedYaml,
            line: Some(line),
            message: message.into(),
        }
    }
}

/// A relative resource reference found in a Markdown body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelativeLink {
    /// The link target as written (no scheme, not a fragment or mailto).
    pub target: String,
    /// 1-based line number within the body.
    pub line: usize,
}

/// Parse a `SKILL.md`/`SKILLSET.md` file into frontmatter and body.
///
/// The file must begin with `---` on line 1 and contain a closing `---`
/// line; a UTF-8 BOM is stripped first. Missing delimiters yield
/// [`ParseFailureKind::MissingFrontmatter`]; an unparseable block yields
/// [`ParseFailureKind::MalformedYaml`] with the offending line.
pub fn parse_skill_document(file_text: &str) -> Result<SkillDocument, ParseFailure> {
    let text = file_text.strip_prefix('\u{feff}').unwrap_or(file_text);
    let total_lines = text.lines().count();
    let raw_lines: Vec<&str> = text.split('\n').collect();

    if raw_lines.is_empty() || !is_delimiter(raw_lines[0]) {
        return Err(ParseFailure::missing(
            Some(1),
            "missing YAML frontmatter (file must start with '---')",
        ));
    }

    let close_idx = raw_lines[1..]
        .iter()
        .position(|l| is_delimiter(l))
        .map(|i| i + 1)
        .ok_or_else(|| {
            ParseFailure::missing(None, "missing closing '---' frontmatter delimiter")
        })?;

    let block: Vec<(usize, &str)> = raw_lines[1..close_idx]
        .iter()
        .enumerate()
        .map(|(i, l)| (i + 2, l.trim_end_matches('\r')))
        .collect();
    let (frontmatter, field_lines) = parse_block(&block)?;

    let body = if close_idx + 1 < raw_lines.len() {
        raw_lines[close_idx + 1..].join("\n")
    } else {
        String::new()
    };

    Ok(SkillDocument {
        frontmatter,
        body,
        field_lines,
        body_start_line: close_idx + 2,
        total_lines,
    })
}

fn is_delimiter(line: &str) -> bool {
    line.trim_end_matches('\r') == "---"
}

fn is_blank_or_comment(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with('#')
}

fn valid_key(key: &str) -> bool {
    !key.is_empty()
        && key
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

type Fields = (BTreeMap<String, FrontmatterValue>, BTreeMap<String, usize>);

fn parse_block(lines: &[(usize, &str)]) -> Result<Fields, ParseFailure> {
    let mut fields = BTreeMap::new();
    let mut field_lines = BTreeMap::new();
    let mut i = 0;

    while i < lines.len() {
        let (line_no, line) = lines[i];
        if is_blank_or_comment(line) {
            i += 1;
            continue;
        }
        if line.starts_with(char::is_whitespace) {
            return Err(ParseFailure::malformed(
                line_no,
                "unexpected indented line outside a value block",
            ));
        }

        let colon = line.find(':').ok_or_else(|| {
            ParseFailure::malformed(line_no, "expected 'key: value' frontmatter entry")
        })?;
        let key = line[..colon].trim();
        if !valid_key(key) {
            return Err(ParseFailure::malformed(
                line_no,
                format!("invalid frontmatter key {:?}", &line[..colon]),
            ));
        }
        if fields.contains_key(key) {
            return Err(ParseFailure::malformed(
                line_no,
                format!("duplicate frontmatter key {:?}", key),
            ));
        }

        let rest = line[colon + 1..].trim();
        let (value, next) = parse_value(rest, line_no, lines, i, key)?;
        fields.insert(key.to_string(), value);
        field_lines.insert(key.to_string(), line_no);
        i = next;
    }

    Ok((fields, field_lines))
}

/// Parse the value for an entry whose key sits on `lines[idx]`. Returns the
/// value and the index of the next unconsumed line.
fn parse_value(
    rest: &str,
    line_no: usize,
    lines: &[(usize, &str)],
    idx: usize,
    key: &str,
) -> Result<(FrontmatterValue, usize), ParseFailure> {
    let rest = rest.trim();

    // A value cannot start with '#': that is a comment, i.e. no inline value.
    if rest.is_empty() || rest.starts_with('#') {
        return parse_block_value(lines, idx + 1, line_no, key);
    }
    match rest.chars().next().unwrap() {
        '[' => {
            let items = parse_flow_sequence(rest, line_no)?;
            Ok((FrontmatterValue::List(items), idx + 1))
        }
        '{' => Err(ParseFailure::malformed(
            line_no,
            "flow mappings are not supported in frontmatter",
        )),
        quote @ ('"' | '\'') => {
            let (scalar, next) = parse_quoted_scalar(rest, lines, idx, line_no, quote)?;
            Ok((FrontmatterValue::Scalar(scalar), next))
        }
        '|' | '>' => {
            let header = strip_inline_comment_if_plain(rest);
            let (scalar, next) = parse_block_scalar(header, lines, idx, line_no)?;
            Ok((FrontmatterValue::Scalar(scalar), next))
        }
        '&' | '*' | '!' => Err(ParseFailure::malformed(
            line_no,
            "anchors, aliases, and tags are not supported in frontmatter",
        )),
        _ => Ok((FrontmatterValue::Scalar(
            strip_inline_comment_if_plain(rest).trim_end().to_string(),
        ), idx + 1)),
    }
}

/// For plain (unquoted) values, cut a trailing ` # comment`.
fn strip_inline_comment_if_plain(rest: &str) -> &str {
    if rest.starts_with('"') || rest.starts_with('\'') {
        return rest;
    }
    let mut prev_ws = true;
    for (pos, ch) in rest.char_indices() {
        if ch == '#' && prev_ws {
            return rest[..pos].trim_end();
        }
        prev_ws = ch.is_whitespace();
    }
    rest
}

/// A `key:` with nothing on the line: either an indented block list follows,
/// or the value is the empty scalar.
fn parse_block_value(
    lines: &[(usize, &str)],
    mut i: usize,
    key_line: usize,
    key: &str,
) -> Result<(FrontmatterValue, usize), ParseFailure> {
    // Look ahead past blank/comment lines for an indented block.
    let mut probe = i;
    while probe < lines.len() && is_blank_or_comment(lines[probe].1) {
        probe += 1;
    }
    if probe >= lines.len() || !lines[probe].1.starts_with(char::is_whitespace) {
        return Ok((FrontmatterValue::Scalar(String::new()), i));
    }
    i = probe;

    let (first_line_no, first_line) = lines[i];
    let indent = leading_spaces(first_line);
    if !first_line.trim_start().starts_with("- ") && first_line.trim_start() != "-" {
        return Err(ParseFailure::malformed(
            first_line_no,
            "nested mappings are not supported in frontmatter (expected a '- ' list item)",
        ));
    }

    let mut scalars: Vec<String> = Vec::new();
    let mut entries: Vec<BTreeMap<String, String>> = Vec::new();

    while i < lines.len() {
        let (line_no, line) = lines[i];
        if is_blank_or_comment(line) {
            i += 1;
            continue;
        }
        if !line.starts_with(char::is_whitespace) {
            break; // next top-level entry
        }
        let item_indent = leading_spaces(line);
        if item_indent < indent {
            return Err(ParseFailure::malformed(line_no, "inconsistent list indentation"));
        }
        let trimmed = line.trim_start();
        if item_indent == indent && (trimmed.starts_with("- ") || trimmed == "-") {
            let item_text = trimmed.strip_prefix('-').unwrap_or("").trim_start();
            if let Some((entry, next)) = parse_entry_item(item_text, line_no, lines, i, indent)? {
                if key != "skills" {
                    return Err(ParseFailure::malformed(
                        line_no,
                        format!("nested structures are not allowed under {:?}", key),
                    ));
                }
                if !scalars.is_empty() {
                    return Err(ParseFailure::malformed(line_no, "mixed list item kinds"));
                }
                entries.push(entry);
                i = next;
            } else {
                if !entries.is_empty() {
                    return Err(ParseFailure::malformed(line_no, "mixed list item kinds"));
                }
                scalars.push(parse_item_scalar(item_text, line_no)?);
                i += 1;
            }
        } else {
            return Err(ParseFailure::malformed(
                line_no,
                "unexpected indented line in list block",
            ));
        }
    }

    if !entries.is_empty() {
        return Ok((FrontmatterValue::EntryList(entries), i));
    }
    if scalars.is_empty() && i == probe {
        return Err(ParseFailure::malformed(key_line, "empty value block"));
    }
    Ok((FrontmatterValue::List(scalars), i))
}

/// Parse a `- name: x` map item, consuming continuation `key: value` lines
/// indented deeper than the dash. Returns `None` when the item is a plain
/// scalar rather than a map.
fn parse_entry_item(
    item_text: &str,
    line_no: usize,
    lines: &[(usize, &str)],
    idx: usize,
    dash_indent: usize,
) -> Result<Option<(BTreeMap<String, String>, usize)>, ParseFailure> {
    let colon = match find_mapping_colon(item_text) {
        Some(c) => c,
        None => return Ok(None),
    };
    let key = item_text[..colon].trim();
    if !valid_key(key) {
        return Ok(None);
    }

    let mut entry = BTreeMap::new();
    entry.insert(
        key.to_string(),
        unquote_item(item_text[colon + 1..].trim(), line_no)?,
    );

    let mut i = idx + 1;
    while i < lines.len() {
        let (cont_no, cont) = lines[i];
        if is_blank_or_comment(cont) {
            i += 1;
            continue;
        }
        let cont_indent = leading_spaces(cont);
        let trimmed = cont.trim_start();
        if cont_indent <= dash_indent || trimmed.starts_with("- ") || trimmed == "-" {
            break;
        }
        let colon = find_mapping_colon(trimmed).ok_or_else(|| {
            ParseFailure::malformed(cont_no, "expected 'key: value' inside list item")
        })?;
        let k = trimmed[..colon].trim();
        if !valid_key(k) {
            return Err(ParseFailure::malformed(
                cont_no,
                format!("invalid key {:?} inside list item", k),
            ));
        }
        if entry.contains_key(k) {
            return Err(ParseFailure::malformed(
                cont_no,
                format!("duplicate key {:?} inside list item", k),
            ));
        }
        entry.insert(
            k.to_string(),
            unquote_item(trimmed[colon + 1..].trim(), cont_no)?,
        );
        i += 1;
    }
    Ok(Some((entry, i)))
}

/// Position of the `: ` that separates key from value in a mapping line.
/// A colon inside a URL (`https://...`) does not count: the colon must be
/// followed by whitespace or end the line.
fn find_mapping_colon(text: &str) -> Option<usize> {
    let bytes = text.as_bytes();
    for (pos, &b) in bytes.iter().enumerate() {
        if b == b':' && (pos + 1 == bytes.len() || bytes[pos + 1].is_ascii_whitespace()) {
            return Some(pos);
        }
    }
    None
}

fn parse_item_scalar(text: &str, line_no: usize) -> Result<String, ParseFailure> {
    unquote_item(text, line_no)
}

/// Unquote a single-line scalar in a list/map item position. Plain scalars
/// lose a trailing ` # comment`; quoted scalars keep `#` characters.
fn unquote_item(text: &str, line_no: usize) -> Result<String, ParseFailure> {
    let text = text.trim();
    if let Some(first) = text.chars().next() {
        match first {
            '"' | '\'' => {
                let (value, consumed) = scan_quoted(text, first)
                    .ok_or_else(|| ParseFailure::malformed(line_no, "unterminated quoted scalar"))?;
                if !strip_inline_comment_if_plain(text[consumed..].trim()).is_empty() {
                    return Err(ParseFailure::malformed(
                        line_no,
                        "unexpected text after quoted scalar",
                    ));
                }
                return Ok(value);
            }
            '&' | '*' | '!' => {
                return Err(ParseFailure::malformed(
                    line_no,
                    "anchors, aliases, and tags are not supported in frontmatter",
                ));
            }
            '[' | '{' => {
                return Err(ParseFailure::malformed(
                    line_no,
                    "nested flow structures are not supported in frontmatter",
                ));
            }
            _ => {}
        }
    }
    Ok(strip_inline_comment_if_plain(text).trim_end().to_string())
}

/// Scan a quoted scalar starting at byte 0 of `text`; returns the unquoted
/// value and the byte length consumed (including the closing quote), or
/// `None` if the quote never closes within `text`.
fn scan_quoted(text: &str, quote: char) -> Option<(String, usize)> {
    let mut out = String::new();
    let mut chars = text.char_indices().skip(1).peekable();
    while let Some((pos, ch)) = chars.next() {
        if quote == '"' && ch == '\\' {
            match chars.next() {
                Some((_, '"')) => out.push('"'),
                Some((_, '\\')) => out.push('\\'),
                Some((_, 'n')) => out.push('\n'),
                Some((_, 't')) => out.push('\t'),
                Some((_, other)) => {
                    out.push('\\');
                    out.push(other);
                }
                None => return None,
            }
            continue;
        }
        if ch == quote {
            if quote == '\'' {
                if let Some((_, '\'')) = chars.peek() {
                    chars.next();
                    out.push('\'');
                    continue;
                }
            }
            return Some((out, pos + ch.len_utf8()));
        }
        out.push(ch);
    }
    None
}

/// Parse a quoted scalar that may continue over several lines. YAML folding
/// applies: each line break plus continuation indentation becomes a single
/// space.
fn parse_quoted_scalar(
    rest: &str,
    lines: &[(usize, &str)],
    idx: usize,
    line_no: usize,
    quote: char,
) -> Result<(String, usize), ParseFailure> {
    if let Some((value, consumed)) = scan_quoted(rest, quote) {
        let trailing = strip_inline_comment_if_plain(rest[consumed..].trim());
        if !trailing.is_empty() {
            return Err(ParseFailure::malformed(
                line_no,
                "unexpected text after quoted scalar",
            ));
        }
        return Ok((value, idx + 1));
    }

    // Multi-line: accumulate until the closing quote.
    let mut buf = String::from(rest);
    let mut i = idx + 1;
    while i < lines.len() {
        let (cont_no, cont) = lines[i];
        if !cont.starts_with(char::is_whitespace) && !cont.trim().is_empty() {
            return Err(ParseFailure::malformed(cont_no, "unterminated quoted scalar"));
        }
        buf.push(' ');
        buf.push_str(cont.trim());
        if let Some((value, consumed)) = scan_quoted(&buf, quote) {
            if !buf[consumed..].trim().is_empty() {
                return Err(ParseFailure::malformed(
                    cont_no,
                    "unexpected text after quoted scalar",
                ));
            }
            return Ok((value, i + 1));
        }
        i += 1;
    }
    Err(ParseFailure::malformed(line_no, "unterminated quoted scalar"))
}

/// Parse a `|` (literal) or `>` (folded) block scalar.
fn parse_block_scalar(
    rest: &str,
    lines: &[(usize, &str)],
    idx: usize,
    line_no: usize,
) -> Result<(String, usize), ParseFailure> {
    let folded = rest.starts_with('>');
    let indicator = &rest[1..];
    if !matches!(indicator, "" | "-" | "+") {
        return Err(ParseFailure::malformed(line_no, "unsupported block scalar header"));
    }

    let mut i = idx + 1;
    let mut collected: Vec<&str> = Vec::new();
    let mut indent: Option<usize> = None;
    while i < lines.len() {
        let (_, l) = lines[i];
        if l.trim().is_empty() {
            collected.push("");
            i += 1;
            continue;
        }
        let this_indent = leading_spaces(l);
        if this_indent == 0 {
            break;
        }
        let ind = *indent.get_or_insert(this_indent);
        collected.push(l.get(ind.min(this_indent)..).unwrap_or(""));
        i += 1;
    }
    while collected.last() == Some(&"") {
        collected.pop();
    }
    if collected.is_empty() {
        return Err(ParseFailure::malformed(line_no, "empty block scalar"));
    }

    let value = if folded {
        let mut out = String::new();
        for (n, part) in collected.iter().enumerate() {
            if part.is_empty() {
                out.push('\n');
            } else {
                if n > 0 && !out.ends_with('\n') {
                    out.push(' ');
                }
                out.push_str(part);
            }
        }
        out
    } else {
        collected.join("\n")
    };
    Ok((value, i))
}

fn leading_spaces(line: &str) -> usize {
    line.chars().take_while(|c| *c == ' ').count()
}

/// Parse a single-line flow sequence `[a, "b c", d]`.
fn parse_flow_sequence(rest: &str, line_no: usize) -> Result<Vec<String>, ParseFailure> {
    let inner_start = 1;
    let mut items = Vec::new();
    let mut current = String::new();
    let mut chars = rest[inner_start..].char_indices().peekable();
    let mut closed_at: Option<usize> = None;

    'outer: while let Some((pos, ch)) = chars.next() {
        match ch {
            ']' => {
                closed_at = Some(inner_start + pos + 1);
                break 'outer;
            }
            ',' => {
                items.push(current.trim().to_string());
                current.clear();
            }
            '"' | '\'' => {
                if !current.trim().is_empty() {
                    return Err(ParseFailure::malformed(line_no, "unexpected quote in flow item"));
                }
                let abs = inner_start + pos;
                let (value, consumed) = scan_quoted(&rest[abs..], ch)
                    .ok_or_else(|| ParseFailure::malformed(line_no, "unterminated quoted scalar"))?;
                // Mark the item as quoted so empty strings survive the trim.
                current = value;
                // Skip past the quoted region.
                let end = abs + consumed;
                while let Some((p, _)) = chars.peek() {
                    if inner_start + *p >= end {
                        break;
                    }
                    chars.next();
                }
                // Quoted item: push immediately and consume a following comma or ']'.
                loop {
                    match chars.next() {
                        Some((_, c)) if c.is_whitespace() => continue,
                        Some((_, ',')) => {
                            items.push(std::mem::take(&mut current));
                            continue 'outer;
                        }
                        Some((p2, ']')) => {
                            items.push(std::mem::take(&mut current));
                            closed_at = Some(inner_start + p2 + 1);
                            // Mark that the last item was already pushed.
                            current.clear();
                            break 'outer;
                        }
                        _ => {
                            return Err(ParseFailure::malformed(
                                line_no,
                                "unexpected text after quoted scalar in flow sequence",
                            ));
                        }
                    }
                }
            }
            '[' | '{' => {
                return Err(ParseFailure::malformed(
                    line_no,
                    "nested flow structures are not supported in frontmatter",
                ));
            }
            '&' | '*' if current.trim().is_empty() => {
                return Err(ParseFailure::malformed(
                    line_no,
                    "anchors, aliases, and tags are not supported in frontmatter",
                ));
            }
            _ => current.push(ch),
        }
    }

    let close = match closed_at {
        Some(c) => c,
        None => return Err(ParseFailure::malformed(line_no, "unclosed flow sequence")),
    };
    let trailing = strip_inline_comment_if_plain(rest[close..].trim());
    if !trailing.is_empty() {
        return Err(ParseFailure::malformed(
            line_no,
            "unexpected text after flow sequence",
        ));
    }
    if !current.trim().is_empty() {
        items.push(current.trim().to_string());
    }
    // `[]` and `[a,]` produce no phantom empty items.
    items.retain(|s| !s.is_empty());
    Ok(items)
}

/// Extract relative resource references from a Markdown body.
///
/// Scans inline links `[t](target)` and images `![t](target)`, skipping
/// targets with a URI scheme, fragment-only targets (`#...`), `mailto:`
/// targets, and anything inside fenced code blocks. Duplicates are
/// preserved; line numbers are 1-based within the body.
pub fn extract_relative_links(body: &str) -> Vec<RelativeLink> {
    let mut links = Vec::new();
    let mut in_fence = false;

    for (idx, line) in body.split('\n').enumerate() {
        if line.trim_start().starts_with("```") {
            in_fence = !in_fence;
            continue;
        }
        if in_fence {
            continue;
        }
        for target in inline_link_targets(line) {
            if target.is_empty()
                || target.contains("://")
                || target.starts_with('#')
                || target.starts_with("mailto:")
            {
                continue;
            }
            links.push(RelativeLink {
                target,
                line: idx + 1,
            });
        }
    }
    links
}

/// Targets of `[text](dest)` spans on one line, in order.
fn inline_link_targets(line: &str) -> Vec<String> {
    let bytes = line.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] != b'[' {
            i += 1;
            continue;
        }
        // Find the matching close bracket (no nesting support needed).
        let Some(close_rel) = line[i + 1..].find(']') else {
            break;
        };
        let close = i + 1 + close_rel;
        if close + 1 >= bytes.len() || bytes[close + 1] != b'(' {
            i += 1;
            continue;
        }
        let Some(paren_rel) = line[close + 2..].find(')') else {
            i = close + 1;
            continue;
        };
        let dest = &line[close + 2..close + 2 + paren_rel];
        out.push(clean_link_destination(dest));
        i = close + 2 + paren_rel + 1;
    }
    out
}

/// Strip an optional `<...>` wrapper and a trailing `"title"` from a link
/// destination.
fn clean_link_destination(dest: &str) -> String {
    let dest = dest.trim();
    if let Some(stripped) = dest.strip_prefix('<') {
        if let Some(end) = stripped.find('>') {
            return stripped[..end].to_string();
        }
    }
    match dest.split_whitespace().next() {
        Some(first) => first.to_string(),
        None => String::new(),
    }
}

/// Number of words in `text`, where a word is a maximal run of
/// non-whitespace characters.
pub fn count_words(text: &str) -> usize {
    text.split_whitespace().count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// The frontmatter of the skill format's canonical example.
    const EXAMPLE_SKILL: &str = r#"---
name: forensics-memory-analysis
description: "Guides Claude through systematic memory dump
  analysis using Volatility3 and similar tools. Covers
  process enumeration, network connections, and artifact
  extraction for incident response."
version: "1.0.0"
tags: [forensics, memory, volatility, incident-response]
author: "skilly"
spec_version: "1.0"
---
## Instructions
...
"#;

    #[test]
    fn parses_canonical_example() {
        let doc = parse_skill_document(EXAMPLE_SKILL).unwrap();
        assert_eq!(doc.scalar("name"), Some("forensics-memory-analysis"));
        assert_eq!(
            doc.frontmatter.get("tags").and_then(FrontmatterValue::as_list),
            Some(
                &[
                    "forensics".to_string(),
                    "memory".to_string(),
                    "volatility".to_string(),
                    "incident-response".to_string()
                ][..]
            )
        );
        assert_eq!(doc.scalar("version"), Some("1.0.0"));
        assert_eq!(doc.scalar("author"), Some("skilly"));
        assert_eq!(doc.scalar("spec_version"), Some("1.0"));
        assert_eq!(doc.body_start_line, 12);
        assert_eq!(doc.total_lines, 13);
        assert_eq!(doc.field_line("name"), Some(2));
        assert_eq!(doc.field_line("description"), Some(3));
        assert!(doc.body.starts_with("## Instructions"));
    }

    #[test]
    fn folds_multiline_quoted_description() {
        let doc = parse_skill_document(EXAMPLE_SKILL).unwrap();
        let desc = doc.scalar("description").unwrap();
        assert_eq!(
            desc,
            "Guides Claude through systematic memory dump analysis using \
             Volatility3 and similar tools. Covers process enumeration, \
             network connections, and artifact extraction for incident response."
        );
        // Hand-counted golden value for the canonical description.
        assert_eq!(count_words(desc), 23);
    }

    #[test]
    fn missing_frontmatter_when_no_delimiters() {
        let err = parse_skill_document("## Instructions\n").unwrap_err();
        assert_eq!(err.kind, ParseFailureKind::MissingFrontmatter);
        assert_eq!(err.line, Some(1));
    }

    #[test]
    fn missing_frontmatter_when_unclosed() {
        let err = parse_skill_document("---\nname: x\n").unwrap_err();
        assert_eq!(err.kind, ParseFailureKind::MissingFrontmatter);
        assert_eq!(err.line, None);
    }

    #[test]
    fn malformed_yaml_reports_line() {
        let err = parse_skill_document("---\nname: [unclosed\n---\nbody").unwrap_err();
        assert_eq!(err.kind, ParseFailureKind::MalformedYaml);
        assert_eq!(err.line, Some(2));
    }

    #[test]
    fn bom_is_stripped() {
        let doc = parse_skill_document("\u{feff}---\nname: x\n---\n").unwrap();
        assert_eq!(doc.scalar("name"), Some("x"));
    }

    #[test]
    fn rejects_anchors_and_aliases() {
        for text in [
            "---\nname: &anchor x\n---\n",
            "---\nname: *alias\n---\n",
            "---\nname: !!str x\n---\n",
        ] {
            let err = parse_skill_document(text).unwrap_err();
            assert_eq!(err.kind, ParseFailureKind::MalformedYaml, "{text}");
        }
    }

    #[test]
    fn rejects_nested_mappings() {
        let err = parse_skill_document("---\nmeta:\n  author: x\n---\n").unwrap_err();
        assert_eq!(err.kind, ParseFailureKind::MalformedYaml);
    }

    #[test]
    fn rejects_duplicate_keys() {
        let err = parse_skill_document("---\nname: a\nname: b\n---\n").unwrap_err();
        assert_eq!(err.kind, ParseFailureKind::MalformedYaml);
        assert_eq!(err.line, Some(3));
    }

    #[test]
    fn parses_skills_entry_list() {
        let text = "---\nname: bundle\nskills:\n  - name: log-triage\n    source_url: git+https://github.com/u/r\n  - name: other\n    source_url: https://github.com/u/o\n---\n";
        let doc = parse_skill_document(text).unwrap();
        let entries = doc.frontmatter.get("skills").unwrap().as_entries().unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0]["name"], "log-triage");
        assert_eq!(entries[0]["source_url"], "git+https://github.com/u/r");
        assert_eq!(doc.field_line("skills"), Some(3));
    }

    #[test]
    fn entry_list_only_allowed_for_skills_key() {
        let text = "---\nthings:\n  - name: a\n    source_url: b\n---\n";
        let err = parse_skill_document(text).unwrap_err();
        assert_eq!(err.kind, ParseFailureKind::MalformedYaml);
    }

    #[test]
    fn block_list_of_scalars() {
        let text = "---\ntags:\n  - alpha\n  - \"beta gamma\"\n---\n";
        let doc = parse_skill_document(text).unwrap();
        assert_eq!(
            doc.frontmatter.get("tags").unwrap().as_list().unwrap(),
            &["alpha".to_string(), "beta gamma".to_string()]
        );
    }

    #[test]
    fn block_scalars_literal_and_folded() {
        let lit = parse_skill_document("---\ndescription: |\n  line one\n  line two\n---\n").unwrap();
        assert_eq!(lit.scalar("description"), Some("line one\nline two"));
        let folded = parse_skill_document("---\ndescription: >\n  line one\n  line two\n---\n").unwrap();
        assert_eq!(folded.scalar("description"), Some("line one line two"));
    }

    #[test]
    fn empty_value_is_empty_scalar() {
        let doc = parse_skill_document("---\nname:\n---\n").unwrap();
        assert_eq!(doc.scalar("name"), Some(""));
    }

    #[test]
    fn unknown_keys_are_preserved() {
        let doc = parse_skill_document("---\nname: x\nfuture_field: y\n---\n").unwrap();
        assert_eq!(doc.scalar("future_field"), Some("y"));
    }

    #[test]
    fn crlf_files_parse() {
        let doc = parse_skill_document("---\r\nname: x\r\n---\r\nbody\r\n").unwrap();
        assert_eq!(doc.scalar("name"), Some("x"));
        assert_eq!(doc.body_start_line, 4);
    }

    #[test]
    fn extracts_inline_links_with_lines() {
        let links = extract_relative_links("see [x](scripts/run.sh)");
        assert_eq!(links, vec![RelativeLink { target: "scripts/run.sh".into(), line: 1 }]);
    }

    #[test]
    fn fenced_blocks_are_excluded() {
        assert!(extract_relative_links("```\n[x](a.md)\n```").is_empty());
    }

    #[test]
    fn schemes_fragments_and_mailto_filtered() {
        let links =
            extract_relative_links("[a](https://example.com) [b](#top) [c](assets/t.png) [d](mailto:x@y)");
        assert_eq!(links.len(), 1);
        assert_eq!(links[0].target, "assets/t.png");
    }

    #[test]
    fn images_and_titles_and_duplicates() {
        let links = extract_relative_links(
            "![logo](assets/logo.png \"Logo\")\n[a](references/a.md)\n[a again](references/a.md)",
        );
        let targets: Vec<_> = links.iter().map(|l| l.target.as_str()).collect();
        assert_eq!(targets, ["assets/logo.png", "references/a.md", "references/a.md"]);
        assert_eq!(links[2].line, 3);
    }

    #[test]
    fn count_words_basics() {
        assert_eq!(count_words(""), 0);
        assert_eq!(count_words("a b  c\nd"), 4);
    }

    /// Quote-and-render a frontmatter map back to YAML for the round-trip
    /// property. Test-only: production code never re-serializes frontmatter.
    fn render_frontmatter(fields: &BTreeMap<String, FrontmatterValue>) -> String {
        let mut out = String::from("---\n");
        for (k, v) in fields {
            match v {
                FrontmatterValue::Scalar(s) => {
                    out.push_str(&format!("{}: {}\n", k, quote(s)));
                }
                FrontmatterValue::List(items) => {
                    let inner: Vec<String> = items.iter().map(|s| quote(s)).collect();
                    out.push_str(&format!("{}: [{}]\n", k, inner.join(", ")));
                }
                FrontmatterValue::EntryList(entries) => {
                    out.push_str(&format!("{}:\n", k));
                    for e in entries {
                        let mut first = true;
                        for (ek, ev) in e {
                            if first {
                                out.push_str(&format!("  - {}: {}\n", ek, quote(ev)));
                                first = false;
                            } else {
                                out.push_str(&format!("    {}: {}\n", ek, quote(ev)));
                            }
                        }
                    }
                }
            }
        }
        out.push_str("---\nbody\n");
        out
    }

    fn quote(s: &str) -> String {
        format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
    }

    fn scalar_strategy() -> impl Strategy<Value = String> {
        // Printable text without newlines; quoting handles the rest.
        proptest::string::string_regex("[ -~]{0,24}").unwrap()
    }

    fn value_strategy() -> impl Strategy<Value = FrontmatterValue> {
        prop_oneof![
            scalar_strategy().prop_map(FrontmatterValue::Scalar),
            proptest::collection::vec(
                scalar_strategy().prop_filter("nonempty", |s| !s.trim().is_empty()),
                0..4
            )
            .prop_map(|items| {
                FrontmatterValue::List(items.into_iter().map(|s| s.trim().to_string()).collect())
            }),
        ]
    }

    proptest! {
        #[test]
        fn roundtrip_preserves_fields(
            fields in proptest::collection::btree_map("[a-z][a-z0-9_-]{0,8}", value_strategy(), 0..6)
        ) {
            let text = render_frontmatter(&fields);
            let doc = parse_skill_document(&text).unwrap();
            prop_assert_eq!(&doc.frontmatter, &fields);
            for key in fields.keys() {
                prop_assert!(doc.field_lines.contains_key(key));
            }
        }

        #[test]
        fn count_words_whitespace_invariant(words in proptest::collection::vec("[a-zA-Z0-9,.']{1,8}", 0..20)) {
            let spaced = words.join(" ");
            let newlined = words.join("\n");
            let padded = format!("  \t{}\n ", spaced);
            prop_assert_eq!(count_words(&spaced), words.len());
            prop_assert_eq!(count_words(&newlined), words.len());
            prop_assert_eq!(count_words(&padded), words.len());
        }

        #[test]
        fn link_lines_point_at_link_text(
            pre in proptest::collection::vec("[a-z ]{0,10}", 0..5),
            target in "[a-z]{1,8}(/[a-z]{1,8}){0,2}\\.[a-z]{2,3}"
        ) {
            let mut body = pre.join("\n");
            if !body.is_empty() { body.push('\n'); }
            body.push_str(&format!("see [x]({})", target));
            let links = extract_relative_links(&body);
            prop_assert_eq!(links.len(), 1);
            let line_text = body.split('\n').nth(links[0].line - 1).unwrap();
            prop_assert!(line_text.contains(&links[0].target));
        }
    }
}
