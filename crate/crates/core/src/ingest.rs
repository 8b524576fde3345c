//! Streaming wiki dump ingestion: pages in, filtered articles and
//! length-filtered sentences out.
//!
//! Two input formats are accepted and auto-detected from the first
//! non-whitespace byte: a MediaWiki XML export (`<`) or JSONL records
//! `{"id":..,"title":..,"namespace":..,"text":..}` (`{`).
//!
//! Wikitext cleaning is best-effort. Supported: comments, `<ref>` and other
//! content-bearing tags, templates (nested), tables (nested), internal links,
//! file/category/interlanguage links, external links, bold/italic quotes,
//! headings, list markers, behaviour switches and the common HTML entities.
//! Not supported: parser functions and template expansion (templates are
//! dropped wholesale), tables embedded inside templates with unbalanced
//! braces, and `<nowiki>` escaping.

use std::collections::HashSet;
use std::io::BufRead;

use quick_xml::events::Event;
use serde::{Deserialize, Serialize};

use crate::text::{char_len, normalize_text};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed input at byte {offset}: {message}")]
    Malformed { offset: u64, message: String },
    #[error("input truncated at byte {offset}")]
    Truncated { offset: u64 },
}

/// A page as it appears in the dump, before any filtering.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPage {
    pub page_id: u64,
    pub title: String,
    pub namespace: i64,
    pub wikitext: String,
    /// Set when the dump marks the page with a `<redirect>` element.
    #[serde(default)]
    pub redirect: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub path: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub article_id: u64,
    pub title: String,
    pub sections: Vec<Section>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub text: String,
    pub article_id: u64,
    pub section_path: String,
    pub index_in_section: usize,
    pub char_len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DumpFormat {
    #[default]
    Auto,
    Xml,
    Jsonl,
}

impl std::str::FromStr for DumpFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(DumpFormat::Auto),
            "xml" => Ok(DumpFormat::Xml),
            "jsonl" => Ok(DumpFormat::Jsonl),
            other => Err(format!("unknown dump format {other:?} (expected auto|xml|jsonl)")),
        }
    }
}

/// Opens a page stream over `source`.
///
/// Pages are yielded lazily in document order; only the page currently being
/// assembled is held in memory.
pub fn parse_dump<R: BufRead>(mut source: R, format: DumpFormat) -> Result<DumpReader<R>, IngestError> {
    let first = skip_leading_whitespace(&mut source)?;
    let format = match format {
        DumpFormat::Auto => match first {
            Some(b'<') | None => DumpFormat::Xml,
            Some(b'{') => DumpFormat::Jsonl,
            Some(b) => {
                return Err(IngestError::Malformed {
                    offset: 0,
                    message: format!("cannot detect dump format from leading byte 0x{b:02x}"),
                })
            }
        },
        f => f,
    };
    let inner = match (format, first) {
        (_, None) => Inner::Done,
        (DumpFormat::Jsonl, _) => Inner::Jsonl(JsonlPages { source, line: String::new(), offset: 0 }),
        _ => {
            let mut reader = quick_xml::Reader::from_reader(source);
            reader.config_mut().trim_text(false);
            Inner::Xml(Box::new(XmlPages { reader, buf: Vec::new(), path: Vec::new(), page: None }))
        }
    };
    Ok(DumpReader { inner })
}

fn skip_leading_whitespace<R: BufRead>(source: &mut R) -> std::io::Result<Option<u8>> {
    let mut seen_bom = false;
    loop {
        let buf = source.fill_buf()?;
        if buf.is_empty() {
            return Ok(None);
        }
        if !seen_bom && buf.starts_with(&[0xEF, 0xBB, 0xBF]) {
            seen_bom = true;
            source.consume(3);
            continue;
        }
        seen_bom = true;
        match buf.iter().position(|b| !b.is_ascii_whitespace()) {
            Some(i) => {
                let b = buf[i];
                source.consume(i);
                return Ok(Some(b));
            }
            None => {
                let n = buf.len();
                source.consume(n);
            }
        }
    }
}

pub struct DumpReader<R: BufRead> {
    inner: Inner<R>,
}

enum Inner<R: BufRead> {
    Xml(Box<XmlPages<R>>),
    Jsonl(JsonlPages<R>),
    Done,
}

impl<R: BufRead> DumpReader<R> {
    /// Capacity of the internal event buffer; stays bounded by the largest
    /// single XML event, independent of dump size.
    pub fn buffer_capacity(&self) -> usize {
        match &self.inner {
            Inner::Xml(x) => x.buf.capacity(),
            Inner::Jsonl(j) => j.line.capacity(),
            Inner::Done => 0,
        }
    }
}

impl<R: BufRead> Iterator for DumpReader<R> {
    type Item = Result<RawPage, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        let item = match &mut self.inner {
            Inner::Xml(x) => x.next_page(),
            Inner::Jsonl(j) => j.next_page(),
            Inner::Done => return None,
        };
        match item {
            Ok(Some(page)) => Some(Ok(page)),
            Ok(None) => {
                self.inner = Inner::Done;
                None
            }
            Err(e) => {
                self.inner = Inner::Done;
                Some(Err(e))
            }
        }
    }
}

#[derive(Default)]
struct PageBuilder {
    id: Option<u64>,
    title: Option<String>,
    namespace: Option<i64>,
    text: String,
    redirect: bool,
}

struct XmlPages<R: BufRead> {
    reader: quick_xml::Reader<R>,
    buf: Vec<u8>,
    path: Vec<String>,
    page: Option<PageBuilder>,
}

impl<R: BufRead> XmlPages<R> {
    fn malformed(&self, message: impl Into<String>) -> IngestError {
        IngestError::Malformed { offset: self.reader.buffer_position(), message: message.into() }
    }

    fn next_page(&mut self) -> Result<Option<RawPage>, IngestError> {
        use quick_xml::errors::{Error as XmlError, IllFormedError, SyntaxError};
        loop {
            self.buf.clear();
            let event = match self.reader.read_event_into(&mut self.buf) {
                Ok(ev) => ev,
                Err(XmlError::Syntax(
                    SyntaxError::UnclosedTag
                    | SyntaxError::UnclosedComment
                    | SyntaxError::UnclosedCData
                    | SyntaxError::UnclosedDoctype
                    | SyntaxError::UnclosedPIOrXmlDecl,
                ))
                | Err(XmlError::IllFormed(IllFormedError::MissingEndTag(_))) => {
                    return Err(IngestError::Truncated { offset: self.reader.buffer_position() })
                }
                Err(XmlError::Io(e)) => return Err(IngestError::Io(std::io::Error::new(e.kind(), e.to_string()))),
                Err(e) => {
                    return Err(IngestError::Malformed { offset: self.reader.error_position(), message: e.to_string() })
                }
            };
            match event {
                Event::Start(start) => {
                    let name = String::from_utf8_lossy(start.local_name().as_ref()).into_owned();
                    if name == "page" {
                        if self.page.is_some() {
                            return Err(self.malformed("nested <page>"));
                        }
                        self.page = Some(PageBuilder::default());
                    }
                    self.path.push(name);
                }
                Event::Empty(empty) => {
                    let name = empty.local_name();
                    if name.as_ref() == b"redirect" {
                        if let Some(p) = self.page.as_mut() {
                            p.redirect = true;
                        }
                    }
                }
                Event::End(_) => {
                    let name = self.path.pop();
                    if name.as_deref() == Some("page") {
                        let p = self.page.take().unwrap_or_default();
                        let page_id = p.id.ok_or_else(|| self.malformed("page without <id>"))?;
                        let title = p.title.ok_or_else(|| self.malformed("page without <title>"))?;
                        return Ok(Some(RawPage {
                            page_id,
                            title,
                            namespace: p.namespace.unwrap_or(0),
                            wikitext: p.text,
                            redirect: p.redirect,
                        }));
                    }
                }
                Event::Text(t) => {
                    if self.page.is_none() {
                        continue;
                    }
                    let text = match t.unescape() {
                        Ok(text) => text.into_owned(),
                        Err(e) => {
                            return Err(IngestError::Malformed {
                                offset: self.reader.buffer_position(),
                                message: e.to_string(),
                            })
                        }
                    };
                    self.on_text(&text)?;
                }
                Event::CData(c) => {
                    if self.page.is_none() {
                        continue;
                    }
                    let text = String::from_utf8_lossy(&c).into_owned();
                    self.on_text(&text)?;
                }
                Event::Eof => {
                    if !self.path.is_empty() || self.page.is_some() {
                        return Err(IngestError::Truncated { offset: self.reader.buffer_position() });
                    }
                    return Ok(None);
                }
                _ => {}
            }
        }
    }

    fn on_text(&mut self, text: &str) -> Result<(), IngestError> {
        let depth = self.path.len();
        let field = |k: usize| if depth >= k { Some(self.path[depth - k].as_str()) } else { None };
        let (parent, leaf) = (field(2), field(1));
        let Some(page) = self.page.as_mut() else { return Ok(()) };
        match (parent, leaf) {
            (Some("page"), Some("title")) => {
                page.title.get_or_insert_with(String::new).push_str(text);
            }
            (Some("page"), Some("ns")) => {
                let ns = text.trim().parse().map_err(|_| IngestError::Malformed {
                    offset: self.reader.buffer_position(),
                    message: format!("invalid <ns> value {text:?}"),
                })?;
                page.namespace = Some(ns);
            }
            (Some("page"), Some("id")) => {
                let id = text.trim().parse().map_err(|_| IngestError::Malformed {
                    offset: self.reader.buffer_position(),
                    message: format!("invalid <id> value {text:?}"),
                })?;
                page.id = Some(id);
            }
            (Some("revision"), Some("text")) => page.text.push_str(text),
            _ => {}
        }
        Ok(())
    }
}

#[derive(Deserialize)]
struct JsonlRecord {
    id: u64,
    title: String,
    #[serde(default)]
    namespace: i64,
    #[serde(default)]
    text: String,
    #[serde(default)]
    redirect: bool,
}

struct JsonlPages<R: BufRead> {
    source: R,
    line: String,
    offset: u64,
}

impl<R: BufRead> JsonlPages<R> {
    fn next_page(&mut self) -> Result<Option<RawPage>, IngestError> {
        loop {
            self.line.clear();
            let start = self.offset;
            let n = self.source.read_line(&mut self.line)?;
            if n == 0 {
                return Ok(None);
            }
            self.offset += n as u64;
            let complete = self.line.ends_with('\n');
            let trimmed = self.line.trim();
            if trimmed.is_empty() {
                continue;
            }
            return match serde_json::from_str::<JsonlRecord>(trimmed) {
                Ok(r) => Ok(Some(RawPage {
                    page_id: r.id,
                    title: r.title,
                    namespace: r.namespace,
                    wikitext: r.text,
                    redirect: r.redirect,
                })),
                Err(e) if !complete && e.is_eof() => Err(IngestError::Truncated { offset: self.offset }),
                Err(e) => Err(IngestError::Malformed {
                    offset: start + e.column().saturating_sub(1) as u64,
                    message: e.to_string(),
                }),
            };
        }
    }
}

/// Why a page was dropped by [`PageFilter`]. Every dropped page gets exactly one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DropReason {
    Namespace,
    Redirect,
    Disambiguation,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FilterStats {
    pub kept: usize,
    pub namespace: usize,
    pub redirect: usize,
    pub disambiguation: usize,
}

impl FilterStats {
    pub fn dropped(&self) -> usize {
        self.namespace + self.redirect + self.disambiguation
    }

    fn record(&mut self, reason: DropReason) {
        match reason {
            DropReason::Namespace => self.namespace += 1,
            DropReason::Redirect => self.redirect += 1,
            DropReason::Disambiguation => self.disambiguation += 1,
        }
    }
}

/// Keeps main-namespace content pages; drops talk/help/file/meta pages,
/// redirects and disambiguation pages.
#[derive(Debug, Clone)]
pub struct PageFilter {
    pub disambiguation_suffixes: Vec<String>,
    /// Lowercased template openings such as `{{dezambiguizare`.
    pub disambiguation_templates: Vec<String>,
    /// Lowercased redirect magic words.
    pub redirect_markers: Vec<String>,
}

impl Default for PageFilter {
    fn default() -> Self {
        PageFilter {
            disambiguation_suffixes: vec!["(dezambiguizare)".into()],
            disambiguation_templates: vec!["{{dezambiguizare".into(), "{{dezambig".into(), "{{disambig".into()],
            redirect_markers: vec!["#redirect".into(), "#redirecteaza".into(), "#redirectează".into()],
        }
    }
}

impl PageFilter {
    pub fn classify(&self, page: &RawPage) -> Option<DropReason> {
        if page.namespace != 0 {
            return Some(DropReason::Namespace);
        }
        let head = page.wikitext.trim_start();
        let head: String = head.chars().take(32).flat_map(char::to_lowercase).collect();
        if page.redirect || self.redirect_markers.iter().any(|m| head.starts_with(m.as_str())) {
            return Some(DropReason::Redirect);
        }
        let title = page.title.trim_end();
        if self.disambiguation_suffixes.iter().any(|s| title.ends_with(s.as_str())) {
            return Some(DropReason::Disambiguation);
        }
        let lower = page.wikitext.to_lowercase();
        if self.disambiguation_templates.iter().any(|t| lower.contains(t.as_str())) {
            return Some(DropReason::Disambiguation);
        }
        None
    }

    /// Returns the page if it should be kept, counting the drop reason otherwise.
    pub fn filter(&self, page: RawPage, stats: &mut FilterStats) -> Option<RawPage> {
        match self.classify(&page) {
            Some(reason) => {
                stats.record(reason);
                None
            }
            None => {
                stats.kept += 1;
                Some(page)
            }
        }
    }
}

/// Wikitext-to-plain-text converter.
#[derive(Debug, Clone)]
pub struct Stripper {
    /// Section titles (compared lowercased) whose content, including
    /// subsections, is dropped.
    pub dropped_sections: Vec<String>,
    /// Link namespaces (lowercased) whose links are removed entirely.
    pub media_namespaces: Vec<String>,
}

impl Default for Stripper {
    fn default() -> Self {
        Stripper {
            dropped_sections: [
                "referințe",
                "referinte",
                "note",
                "note de subsol",
                "bibliografie",
                "legături externe",
                "legaturi externe",
                "vezi și",
                "vezi si",
                "surse",
                "lectură suplimentară",
                "references",
                "external links",
                "see also",
                "notes",
                "further reading",
            ]
            .map(String::from)
            .to_vec(),
            media_namespaces: ["fișier", "fişier", "file", "imagine", "image", "media", "categorie", "category"]
                .map(String::from)
                .to_vec(),
        }
    }
}

/// Output of [`Stripper::strip`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stripped {
    pub sections: Vec<Section>,
    /// Number of unbalanced constructs that were recovered from.
    pub recoveries: usize,
}

/// Strips `wikitext` with the default [`Stripper`].
pub fn strip_markup(wikitext: &str) -> Vec<Section> {
    Stripper::default().strip(wikitext).sections
}

const CONTENT_TAGS: &[&str] = &[
    "ref",
    "references",
    "gallery",
    "math",
    "chem",
    "score",
    "timeline",
    "syntaxhighlight",
    "source",
    "imagemap",
    "graph",
    "mapframe",
    "templatedata",
];

impl Stripper {
    pub fn strip(&self, wikitext: &str) -> Stripped {
        let mut recoveries = 0;
        let text = remove_comments(wikitext, &mut recoveries);
        let text = remove_tags(&text, &mut recoveries);
        let text = remove_balanced(&text, "{{", "}}", &mut recoveries);
        let text = remove_tables(&text, &mut recoveries);
        let text = self.replace_links(&text, &mut recoveries);
        let text = replace_external_links(&text);
        let text = remove_quote_runs(&text);
        let text = decode_entities(&text);

        let mut sections = Vec::new();
        let mut heading_stack: Vec<(usize, String)> = Vec::new();
        let mut current = String::new();
        let mut current_path = String::new();
        let mut dropped = false;

        for line in text.lines() {
            if let Some((level, title)) = parse_heading(line) {
                flush_section(&mut sections, &current_path, &mut current, dropped);
                while heading_stack.last().is_some_and(|(l, _)| *l >= level) {
                    heading_stack.pop();
                }
                heading_stack.push((level, normalize_text(&title)));
                current_path = heading_stack.iter().map(|(_, t)| t.as_str()).collect::<Vec<_>>().join(" / ");
                dropped = heading_stack.iter().any(|(_, t)| self.is_dropped_section(t));
                continue;
            }
            let trimmed = line.trim_start();
            if trimmed.starts_with('|') || trimmed.starts_with('!') {
                continue;
            }
            let content = trimmed.trim_start_matches(['*', '#', ':', ';']);
            let content = remove_behaviour_switches(content);
            if !content.trim().is_empty() {
                current.push_str(content.trim());
                current.push('\n');
            }
        }
        flush_section(&mut sections, &current_path, &mut current, dropped);
        Stripped { sections, recoveries }
    }

    fn is_dropped_section(&self, title: &str) -> bool {
        let t = title.to_lowercase();
        self.dropped_sections.contains(&t)
    }

    fn replace_links(&self, text: &str, recoveries: &mut usize) -> String {
        let mut out = String::with_capacity(text.len());
        let mut rest = text;
        while let Some(start) = rest.find("[[") {
            out.push_str(&rest[..start]);
            let after = &rest[start + 2..];
            match find_matching(after, "[[", "]]") {
                Some(end) => {
                    let inner = &after[..end];
                    out.push_str(&self.link_display(inner, recoveries));
                    rest = &after[end + 2..];
                }
                None => {
                    *recoveries += 1;
                    rest = after;
                }
            }
        }
        out.push_str(rest);
        out
    }

    fn link_display(&self, inner: &str, recoveries: &mut usize) -> String {
        let target_end = inner.find('|').unwrap_or(inner.len());
        let target = inner[..target_end].trim();
        if let Some((ns, _)) = target.split_once(':') {
            let ns = ns.trim().to_lowercase();
            let interlanguage = !ns.is_empty() && ns.len() <= 3 && ns.chars().all(|c| c.is_ascii_lowercase());
            if !target.starts_with(':') && (interlanguage || self.media_namespaces.contains(&ns)) {
                return String::new();
            }
        }
        let display = match top_level_last_segment(inner) {
            Some(d) if !d.trim().is_empty() => d,
            _ => target.trim_start_matches(':'),
        };
        self.replace_links(display, recoveries)
    }
}

fn flush_section(sections: &mut Vec<Section>, path: &str, buf: &mut String, dropped: bool) {
    let text = normalize_text(buf);
    buf.clear();
    if dropped || text.is_empty() {
        return;
    }
    sections.push(Section { path: path.to_string(), text });
}

fn parse_heading(line: &str) -> Option<(usize, String)> {
    let line = line.trim_end();
    let lead = line.chars().take_while(|&c| c == '=').count();
    let trail = line.chars().rev().take_while(|&c| c == '=').count();
    if lead < 2 || trail < 2 || line.len() <= lead + trail {
        return None;
    }
    let level = lead.min(trail);
    let title = line[level..line.len() - level].trim_matches('=').trim();
    if title.is_empty() {
        return None;
    }
    Some((level, title.to_string()))
}

fn remove_comments(text: &str, recoveries: &mut usize) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find("<!--") {
        out.push_str(&rest[..start]);
        match rest[start + 4..].find("-->") {
            Some(end) => rest = &rest[start + 4 + end + 3..],
            None => {
                *recoveries += 1;
                rest = "";
            }
        }
    }
    out.push_str(rest);
    out
}

/// Removes content-bearing tags with their content and unwraps every other tag.
fn remove_tags(text: &str, recoveries: &mut usize) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find('<') {
        out.push_str(&rest[..start]);
        let tail = &rest[start..];
        let Some(close) = tail.find('>') else {
            out.push_str(tail);
            rest = "";
            break;
        };
        let tag = &tail[1..close];
        let (is_end, body) = match tag.strip_prefix('/') {
            Some(b) => (true, b),
            None => (false, tag),
        };
        let name: String =
            body.chars().take_while(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        if name.is_empty() || !body.starts_with(|c: char| c.is_ascii_alphabetic()) {
            // Not a tag, e.g. "a < b".
            out.push('<');
            rest = &tail[1..];
            continue;
        }
        let self_closing = tag.ends_with('/');
        rest = &tail[close + 1..];
        if name == "br" {
            out.push(' ');
            continue;
        }
        let content_tag = CONTENT_TAGS.contains(&name.as_str());
        if is_end || self_closing || !content_tag {
            if self_closing && content_tag {
                pad_word_gap(&mut out, rest);
            }
            continue;
        }
        let closing = format!("</{name}");
        match find_ci(rest, &closing) {
            Some(pos) => {
                let after = &rest[pos..];
                rest = match after.find('>') {
                    Some(gt) => &after[gt + 1..],
                    None => "",
                };
            }
            None => *recoveries += 1,
        }
        pad_word_gap(&mut out, rest);
    }
    out.push_str(rest);
    collapse_inline_spaces(&out)
}

/// Removed content reads as a space so neighbouring words do not fuse.
fn pad_word_gap(out: &mut String, rest: &str) {
    let prev_word = out.chars().last().is_some_and(char::is_alphanumeric);
    let next_word = rest.chars().next().is_some_and(char::is_alphanumeric);
    if prev_word && next_word {
        out.push(' ');
    }
}

fn collapse_inline_spaces(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut prev_space = false;
    for c in text.chars() {
        if c == ' ' {
            if prev_space {
                continue;
            }
            prev_space = true;
        } else {
            prev_space = false;
        }
        out.push(c);
    }
    out
}

fn find_ci(haystack: &str, needle: &str) -> Option<usize> {
    let needle = needle.as_bytes();
    haystack.as_bytes().windows(needle.len()).position(|w| w.eq_ignore_ascii_case(needle))
}

/// Byte offset of the `close` that balances an already-consumed `open`.
fn find_matching(text: &str, open: &str, close: &str) -> Option<usize> {
    let mut depth = 1usize;
    let mut i = 0;
    let bytes = text.as_bytes();
    while i < bytes.len() {
        if bytes[i..].starts_with(open.as_bytes()) {
            depth += 1;
            i += open.len();
        } else if bytes[i..].starts_with(close.as_bytes()) {
            depth -= 1;
            if depth == 0 {
                return Some(i);
            }
            i += close.len();
        } else {
            i += 1;
        }
    }
    None
}

fn remove_balanced(text: &str, open: &str, close: &str, recoveries: &mut usize) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find(open) {
        out.push_str(&rest[..start]);
        let after = &rest[start + open.len()..];
        match find_matching(after, open, close) {
            Some(end) => rest = &after[end + close.len()..],
            None => {
                // Drop the rest of the line and carry on.
                *recoveries += 1;
                rest = match after.find('\n') {
                    Some(nl) => &after[nl..],
                    None => "",
                };
            }
        }
    }
    out.push_str(rest);
    out
}

fn remove_tables(text: &str, recoveries: &mut usize) -> String {
    let mut out = String::with_capacity(text.len());
    let mut depth = 0usize;
    for line in text.split_inclusive('\n') {
        let t = line.trim_start();
        if t.starts_with("{|") {
            depth += 1;
            continue;
        }
        if depth > 0 {
            if t.starts_with("|}") {
                depth -= 1;
            }
            continue;
        }
        out.push_str(line);
    }
    if depth > 0 {
        *recoveries += 1;
    }
    out
}

/// Last `|`-separated segment of a link body, ignoring pipes nested in
/// inner links or templates.
fn top_level_last_segment(inner: &str) -> Option<&str> {
    let bytes = inner.as_bytes();
    let mut depth = 0i32;
    let mut last_pipe = None;
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i..].starts_with(b"[[") || bytes[i..].starts_with(b"{{") {
            depth += 1;
            i += 2;
        } else if bytes[i..].starts_with(b"]]") || bytes[i..].starts_with(b"}}") {
            depth -= 1;
            i += 2;
        } else {
            if bytes[i] == b'|' && depth == 0 {
                last_pipe = Some(i);
            }
            i += 1;
        }
    }
    last_pipe.map(|p| &inner[p + 1..])
}

fn replace_external_links(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find('[') {
        out.push_str(&rest[..start]);
        let after = &rest[start + 1..];
        let is_url = ["http://", "https://", "//", "ftp://", "mailto:"]
            .iter()
            .any(|p| after.len() >= p.len() && after[..p.len()].eq_ignore_ascii_case(p));
        match (is_url, after.find(']')) {
            (true, Some(end)) if !after[..end].contains('\n') => {
                let body = &after[..end];
                if let Some((_, label)) = body.split_once(' ') {
                    out.push_str(label.trim());
                }
                rest = &after[end + 1..];
            }
            _ => {
                out.push('[');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

fn remove_quote_runs(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '\'' && chars.peek() == Some(&'\'') {
            while chars.peek() == Some(&'\'') {
                chars.next();
            }
            continue;
        }
        out.push(c);
    }
    out
}

fn decode_entities(text: &str) -> String {
    if !text.contains('&') {
        return text.to_string();
    }
    text.replace("&nbsp;", " ")
        .replace("&ndash;", "–")
        .replace("&mdash;", "—")
        .replace("&quot;", "\"")
        .replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&amp;", "&")
}

fn remove_behaviour_switches(line: &str) -> String {
    let mut out = String::with_capacity(line.len());
    let mut rest = line;
    while let Some(start) = rest.find("__") {
        let after = &rest[start + 2..];
        match after.find("__") {
            Some(end) if end > 0 && after[..end].chars().all(|c| c.is_ascii_uppercase()) => {
                out.push_str(&rest[..start]);
                rest = &after[end + 2..];
            }
            _ => {
                out.push_str(&rest[..start + 2]);
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

impl Article {
    pub fn from_page(page: &RawPage, stripper: &Stripper) -> (Article, usize) {
        let stripped = stripper.strip(&page.wikitext);
        let article = Article { article_id: page.page_id, title: page.title.clone(), sections: stripped.sections };
        (article, stripped.recoveries)
    }
}

/// Abbreviations shipped with the splitter. A period ending one of these
/// tokens never ends a sentence.
pub const ROMANIAN_ABBREVIATIONS: &[&str] = &[
    "Str.", "str.", "Bd.", "bd.", "Bul.", "bul.", "Cal.", "Sos.", "Șos.", "șos.", "Al.", "al.", "Nr.", "nr.", "Dr.",
    "dr.", "Prof.", "prof.", "Conf.", "conf.", "Lect.", "Ing.", "ing.", "Acad.", "Gen.", "gen.", "Col.", "col.", "Lt.",
    "lt.", "Mr.", "Cpt.", "Sf.", "sf.", "St.", "Dl.", "dl.", "Dna.", "dna.", "Dra.", "D-l", "D-na", "Jud.", "jud.",
    "Mun.", "mun.", "Com.", "com.", "Reg.", "reg.", "vol.", "Vol.", "pag.", "p.", "pp.", "ed.", "Ed.", "cf.", "cca.",
    "aprox.", "ex.", "Ex.", "fig.", "Fig.", "cap.", "art.", "Art.", "alin.", "lit.", "sec.", "c.", "ș.a.", "ș.u.",
    "î.Hr.", "d.Hr.", "î.e.n.", "e.n.", "a.k.a.", "vs.", "etc.", "resp.", "Pr.", "pr.", "Ep.", "Arh.", "Mitr.",
];

/// Rule-based sentence splitter.
///
/// A boundary is a run of `.`, `!`, `?` or `…`, optionally followed by closing
/// quotes or brackets, then whitespace or end of text. A single `.` does not
/// end a sentence when the token it closes is a configured abbreviation or a
/// lone letter (an initial, as in `I. L. Caragiale`).
#[derive(Debug, Clone)]
pub struct SentenceSplitter {
    abbreviations: HashSet<String>,
    pub min_len: usize,
}

impl Default for SentenceSplitter {
    fn default() -> Self {
        SentenceSplitter::new(ROMANIAN_ABBREVIATIONS.iter().map(|s| s.to_string()), 50)
    }
}

impl SentenceSplitter {
    pub fn new(abbreviations: impl IntoIterator<Item = String>, min_len: usize) -> Self {
        SentenceSplitter { abbreviations: abbreviations.into_iter().collect(), min_len }
    }

    pub fn with_min_len(mut self, min_len: usize) -> Self {
        self.min_len = min_len;
        self
    }

    /// Splits raw text into trimmed sentences without length filtering.
    pub fn split_text<'t>(&self, text: &'t str) -> Vec<&'t str> {
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let mut out = Vec::new();
        let mut start = 0usize;
        let mut i = 0usize;
        while i < chars.len() {
            let (_, c) = chars[i];
            if !matches!(c, '.' | '!' | '?' | '…') {
                i += 1;
                continue;
            }
            let run_start = i;
            let mut j = i;
            while j < chars.len() && matches!(chars[j].1, '.' | '!' | '?' | '…') {
                j += 1;
            }
            let run_len = j - run_start;
            while j < chars.len() && matches!(chars[j].1, '"' | '\'' | ')' | ']' | '»' | '”' | '’') {
                j += 1;
            }
            let at_end = j == chars.len();
            if !at_end && !chars[j].1.is_whitespace() {
                i = j.max(i + 1);
                continue;
            }
            let end_byte = if at_end { text.len() } else { chars[j].0 };
            if run_len == 1 && c == '.' && self.is_abbreviation(text, start, chars[run_start].0) {
                i = j;
                continue;
            }
            let sentence = text[start..end_byte].trim();
            if !sentence.is_empty() {
                out.push(sentence);
            }
            start = end_byte;
            i = j;
        }
        let tail = text[start..].trim();
        if !tail.is_empty() {
            out.push(tail);
        }
        out
    }

    fn is_abbreviation(&self, text: &str, sentence_start: usize, dot: usize) -> bool {
        let token_start = text[sentence_start..dot]
            .rfind(char::is_whitespace)
            .map(|p| {
                let ws = text[sentence_start + p..].chars().next().map_or(1, char::len_utf8);
                sentence_start + p + ws
            })
            .unwrap_or(sentence_start);
        let token = text[token_start..dot + 1].trim_start_matches(['(', '"', '„', '«', '[', '\'']);
        if self.abbreviations.contains(token) {
            return true;
        }
        let stem = &token[..token.len() - 1];
        let mut letters = stem.chars();
        matches!((letters.next(), letters.next()), (Some(l), None) if l.is_alphabetic() && l.is_uppercase())
    }

    /// Splits every section of `article` and keeps sentences of at least
    /// `min_len` characters. `index_in_section` counts all sentences of the
    /// section, including the dropped ones, so adjacency in the source text
    /// is recoverable downstream.
    pub fn split(&self, article: &Article) -> Vec<Sentence> {
        let mut out = Vec::new();
        for section in &article.sections {
            let text = normalize_text(&section.text);
            for (index, s) in self.split_text(&text).into_iter().enumerate() {
                let len = char_len(s);
                if len < self.min_len {
                    continue;
                }
                out.push(Sentence {
                    text: s.to_string(),
                    article_id: article.article_id,
                    section_path: section.path.clone(),
                    index_in_section: index,
                    char_len: len,
                });
            }
        }
        out
    }
}

/// Splits `article` with the shipped abbreviation list.
pub fn split_sentences(article: &Article, min_len: usize) -> Vec<Sentence> {
    SentenceSplitter::default().with_min_len(min_len).split(article)
}
