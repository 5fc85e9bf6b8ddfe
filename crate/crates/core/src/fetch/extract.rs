//! Main-content extraction from HTML pages.
//!
//! Boilerplate subtrees (scripts, navigation, headers, footers, asides,
//! forms and anything whose class or id looks like a menu, sidebar, banner
//! or share widget) are ignored. Paragraph-like blocks vote for their parent
//! and grandparent containers by text length; the best container, discounted
//! by link density, supplies the output.

use std::collections::HashMap;
use std::sync::LazyLock;

use regex::Regex;
use scraper::{ElementRef, Html, Node, Selector};

use super::{Document, FetchLimits};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extraction {
    pub text: String,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExtractError {
    #[error("document is empty")]
    Empty,
    #[error("content type {0:?} is not textual")]
    NotText(String),
    #[error("no readable text found")]
    NoText,
}

const SKIPPED_TAGS: &[&str] = &[
    "script", "style", "noscript", "nav", "header", "footer", "aside", "form", "iframe", "svg",
    "button", "template", "select", "head",
];

const BLOCK_TAGS: &[&str] = &["p", "h2", "h3", "h4", "li", "blockquote", "pre", "td"];

static BOILERPLATE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)(^|[-_ ])(nav|navbar|menu|footer|header|sidebar|comment|comments|share|sharing|social|cookie|banner|advert|ads|promo|related|subscribe|newsletter|breadcrumb|masthead|popup|modal)([-_ ]|$)",
    )
    .expect("valid regex")
});

pub fn extract_main_text(document: &Document, limits: &FetchLimits) -> Result<Extraction, ExtractError> {
    if document.body.iter().all(u8::is_ascii_whitespace) {
        return Err(ExtractError::Empty);
    }
    let content_type = document
        .content_type
        .as_deref()
        .map(|c| c.split(';').next().unwrap_or("").trim().to_ascii_lowercase());
    let body = String::from_utf8_lossy(&document.body);
    let text = match content_type.as_deref() {
        Some("text/plain") => plain_text(&body),
        Some(ct) if !is_html(ct) && !ct.starts_with("text/") => {
            return Err(ExtractError::NotText(ct.to_string()))
        }
        None if !body.trim_start().starts_with('<') => plain_text(&body),
        _ => html_main_text(&body),
    };
    if text.trim().is_empty() {
        return Err(ExtractError::NoText);
    }
    let (text, truncated) = truncate_at_whitespace(&text, limits.max_chars);
    Ok(Extraction { text, truncated })
}

fn is_html(ct: &str) -> bool {
    ct == "text/html" || ct == "application/xhtml+xml"
}

fn plain_text(body: &str) -> String {
    body.split("\n\n")
        .map(collapse_whitespace)
        .filter(|p| !p.is_empty())
        .collect::<Vec<_>>()
        .join("\n\n")
}

fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Cuts to at most `max_chars` characters, backing up to the last whitespace
/// so no word is split. Returns whether anything was removed.
pub fn truncate_at_whitespace(text: &str, max_chars: usize) -> (String, bool) {
    if text.chars().count() <= max_chars {
        return (text.to_string(), false);
    }
    let cut = text
        .char_indices()
        .nth(max_chars)
        .map_or(text.len(), |(i, _)| i);
    let head = &text[..cut];
    // If the cut lands exactly on a word boundary, keep the whole head.
    let on_boundary = text[cut..].starts_with(char::is_whitespace);
    let kept = if on_boundary {
        head
    } else {
        match head.rfind(char::is_whitespace) {
            Some(i) if i > 0 => &head[..i],
            _ => head,
        }
    };
    (kept.trim_end().to_string(), true)
}

fn is_boilerplate(el: &ElementRef<'_>) -> bool {
    let v = el.value();
    if SKIPPED_TAGS.contains(&v.name()) {
        return true;
    }
    if matches!(v.attr("role"), Some("navigation" | "banner" | "contentinfo" | "complementary")) {
        return true;
    }
    if v.attr("hidden").is_some() || v.attr("aria-hidden") == Some("true") {
        return true;
    }
    let class_id = format!("{} {}", v.attr("class").unwrap_or(""), v.attr("id").unwrap_or(""));
    BOILERPLATE.is_match(&class_id)
}

fn in_boilerplate(el: &ElementRef<'_>) -> bool {
    is_boilerplate(el) || el.ancestors().filter_map(ElementRef::wrap).any(|a| is_boilerplate(&a))
}

/// Visible text of an element, skipping boilerplate descendants.
fn visible_text(el: &ElementRef<'_>) -> String {
    let mut out = String::new();
    collect_text(el, &mut out);
    collapse_whitespace(&out)
}

fn collect_text(el: &ElementRef<'_>, out: &mut String) {
    for child in el.children() {
        match child.value() {
            Node::Text(t) => {
                out.push_str(t);
            }
            Node::Element(_) => {
                if let Some(child_el) = ElementRef::wrap(child) {
                    if !is_boilerplate(&child_el) {
                        if child_el.value().name() == "br" {
                            out.push(' ');
                        }
                        collect_text(&child_el, out);
                        out.push(' ');
                    }
                }
            }
            _ => {}
        }
    }
}

fn link_text_len(el: &ElementRef<'_>) -> usize {
    static LINKS: LazyLock<Selector> = LazyLock::new(|| Selector::parse("a").expect("valid selector"));
    el.select(&LINKS).map(|a| visible_text(&a).chars().count()).sum()
}

fn html_main_text(body: &str) -> String {
    let html = Html::parse_document(body);
    let blocks_selector = Selector::parse(&BLOCK_TAGS.join(",")).expect("valid selector");
    let paragraph = Selector::parse("p").expect("valid selector");

    let mut scores: HashMap<_, f64> = HashMap::new();
    for p in html.select(&paragraph) {
        if in_boilerplate(&p) {
            continue;
        }
        let text = visible_text(&p);
        let len = text.chars().count();
        if len < 25 {
            continue;
        }
        let vote = 1.0 + text.matches(',').count() as f64 + (len as f64 / 100.0).min(3.0);
        let mut ancestors = p.ancestors().filter_map(ElementRef::wrap);
        if let Some(parent) = ancestors.next() {
            *scores.entry(parent.id()).or_default() += vote;
        }
        if let Some(grand) = ancestors.next() {
            *scores.entry(grand.id()).or_default() += vote / 2.0;
        }
    }

    let best = scores
        .iter()
        .filter_map(|(id, score)| {
            let el = ElementRef::wrap(html.tree.get(*id)?)?;
            let total = visible_text(&el).chars().count().max(1);
            let density = link_text_len(&el) as f64 / total as f64;
            let bonus = if matches!(el.value().name(), "article" | "main") { 1.25 } else { 1.0 };
            Some((el, score * (1.0 - density) * bonus))
        })
        .max_by(|a, b| a.1.total_cmp(&b.1).then_with(|| b.0.id().cmp(&a.0.id())));

    let root = match best {
        Some((el, _)) => el,
        None => {
            let body_sel = Selector::parse("body").expect("valid selector");
            match html.select(&body_sel).next() {
                Some(body) => return visible_text(&body),
                None => return String::new(),
            }
        }
    };

    let mut paragraphs = Vec::new();
    for block in root.select(&blocks_selector) {
        // Nested blocks (a <p> inside an <li>) are covered by the outer one.
        let nested = block
            .ancestors()
            .take_while(|a| a.id() != root.id())
            .filter_map(ElementRef::wrap)
            .any(|a| BLOCK_TAGS.contains(&a.value().name()));
        if nested || in_boilerplate(&block) {
            continue;
        }
        let text = visible_text(&block);
        if !text.is_empty() {
            paragraphs.push(text);
        }
    }
    if paragraphs.is_empty() {
        return visible_text(&root);
    }
    paragraphs.join("\n\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAGE: &str = r#"<!doctype html>
<html><head><title>Fact check</title><script>var tracking = "do not include";</script></head>
<body>
  <header class="site-header"><a href="/">Home</a> <a href="/politics">Politics</a></header>
  <nav><ul><li><a href="/a">Latest fact-checks from our newsroom team</a></li></ul></nav>
  <div id="content">
    <article>
      <h1>Did the mayor ban cars downtown?</h1>
      <p>The claim, shared widely on social media, says the mayor banned all cars from downtown streets starting in March.</p>
      <p>City records show no such ordinance was passed, and the mayor's office said the claim was false.</p>
      <div class="share-buttons"><p>Share this article on every platform you can think of, please, now.</p></div>
    </article>
    <aside class="sidebar"><p>Related: ten other claims about traffic policy you might enjoy reading.</p></aside>
  </div>
  <footer><p>Copyright 2024 Example Fact Checkers. All rights reserved worldwide, forever.</p></footer>
</body></html>"#;

    #[test]
    fn fixture_page_body_only() {
        let doc = Document::html("https://example.org/fc", PAGE);
        let out = extract_main_text(&doc, &FetchLimits::default()).unwrap();
        assert_eq!(
            out.text,
            "The claim, shared widely on social media, says the mayor banned all cars from downtown streets starting in March.\n\n\
             City records show no such ordinance was passed, and the mayor's office said the claim was false."
        );
        assert!(!out.truncated);
        assert!(!out.text.contains('<'));
    }

    #[test]
    fn empty_and_binary_documents_fail() {
        let empty = Document { url: String::new(), content_type: Some("text/html".into()), body: vec![] };
        assert_eq!(extract_main_text(&empty, &FetchLimits::default()), Err(ExtractError::Empty));
        let pdf = Document { url: String::new(), content_type: Some("application/pdf".into()), body: b"%PDF".to_vec() };
        assert!(matches!(extract_main_text(&pdf, &FetchLimits::default()), Err(ExtractError::NotText(_))));
        let scripts_only = Document::html("", "<html><body><script>x()</script></body></html>");
        assert_eq!(extract_main_text(&scripts_only, &FetchLimits::default()), Err(ExtractError::NoText));
    }

    #[test]
    fn long_article_truncated_at_word_boundary() {
        let words: String = (0..10_000).map(|i| format!("word{} ", i % 10)).collect();
        assert!(words.len() > 50_000);
        let doc = Document { url: String::new(), content_type: Some("text/plain".into()), body: words.into_bytes() };
        let out = extract_main_text(&doc, &FetchLimits::default()).unwrap();
        assert!(out.truncated);
        assert!(out.text.chars().count() <= 20_000);
        assert!(out.text.ends_with(|c: char| c.is_ascii_digit()));
        assert!(out.text.split(' ').all(|w| w.len() == 5));
    }

    #[test]
    fn truncation_rules() {
        assert_eq!(truncate_at_whitespace("abc def", 10), ("abc def".into(), false));
        assert_eq!(truncate_at_whitespace("abc def", 5), ("abc".into(), true));
        assert_eq!(truncate_at_whitespace("abc def", 3), ("abc".into(), true));
        assert_eq!(truncate_at_whitespace("abcdef", 3), ("abc".into(), true));
        assert_eq!(truncate_at_whitespace("é é é", 3), ("é é".into(), true));
    }

    #[test]
    fn plain_text_without_content_type() {
        let doc = Document { url: String::new(), content_type: None, body: b"Just   some\ntext.".to_vec() };
        assert_eq!(extract_main_text(&doc, &FetchLimits::default()).unwrap().text, "Just some text.");
    }
}
