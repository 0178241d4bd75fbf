//! Edit trees: lemma-to-form transformations built by recursive
//! longest-common-substring decomposition.
//!
//! A [`EditTree::Match`] node keeps a stretch of the input verbatim and
//! recurses on what lies to its left and right; a [`EditTree::Replace`] leaf
//! rewrites an exact string. Lengths are counted in Unicode scalar values.

use std::fmt::{self, Write};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EditTree {
    Replace {
        source: String,
        target: String,
    },
    Match {
        prefix_len: usize,
        suffix_len: usize,
        left: Box<EditTree>,
        right: Box<EditTree>,
    },
}

/// Position and length of the longest common substring of two strings.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CommonSubstring {
    pub a_start: usize,
    pub b_start: usize,
    pub len: usize,
}

/// Longest common substring over characters.
///
/// Ties are broken by the smallest start in `a`, then the smallest start in
/// `b`. With no shared character the result is `(0, 0, 0)`.
pub fn longest_common_substring(a: &str, b: &str) -> CommonSubstring {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    lcs_chars(&a, &b)
}

pub(crate) fn lcs_chars(a: &[char], b: &[char]) -> CommonSubstring {
    let mut best = CommonSubstring {
        a_start: 0,
        b_start: 0,
        len: 0,
    };
    if a.is_empty() || b.is_empty() {
        return best;
    }
    // prev[j + 1] = length of the common suffix of a[..i] and b[..=j]
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        for j in 0..b.len() {
            cur[j + 1] = if ca == b[j] { prev[j] + 1 } else { 0 };
            let k = cur[j + 1];
            if k == 0 {
                continue;
            }
            let (ai, bj) = (i + 1 - k, j + 1 - k);
            if k > best.len || (k == best.len && (ai, bj) < (best.a_start, best.b_start)) {
                best = CommonSubstring {
                    a_start: ai,
                    b_start: bj,
                    len: k,
                };
            }
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    best
}

impl EditTree {
    pub fn replace(source: impl Into<String>, target: impl Into<String>) -> Self {
        EditTree::Replace {
            source: source.into(),
            target: target.into(),
        }
    }

    pub fn matching(prefix_len: usize, suffix_len: usize, left: EditTree, right: EditTree) -> Self {
        EditTree::Match {
            prefix_len,
            suffix_len,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    /// Build the canonical tree transforming `lemma` into `form`.
    pub fn build(lemma: &str, form: &str) -> Self {
        let lemma: Vec<char> = lemma.chars().collect();
        let form: Vec<char> = form.chars().collect();
        build_chars(&lemma, &form)
    }

    /// Apply the tree to `word`; `None` when the tree does not fit.
    pub fn apply(&self, word: &str) -> Option<String> {
        let chars: Vec<char> = word.chars().collect();
        let mut out = String::with_capacity(word.len() + 8);
        if self.apply_into(&chars, &mut out) {
            Some(out)
        } else {
            None
        }
    }

    fn apply_into(&self, word: &[char], out: &mut String) -> bool {
        match self {
            EditTree::Replace { source, target } => {
                if source.chars().eq(word.iter().copied()) {
                    out.push_str(target);
                    true
                } else {
                    false
                }
            }
            EditTree::Match {
                prefix_len,
                suffix_len,
                left,
                right,
            } => {
                if word.len() < prefix_len + suffix_len + 1 {
                    return false;
                }
                let mid_end = word.len() - suffix_len;
                if !left.apply_into(&word[..*prefix_len], out) {
                    return false;
                }
                out.extend(&word[*prefix_len..mid_end]);
                right.apply_into(&word[mid_end..], out)
            }
        }
    }

    /// Canonical, injective string form used as a map key and in dumps.
    ///
    /// `R(source,target)` for leaves and `M(prefix,suffix,left,right)` for
    /// match nodes. Backslash, comma and parentheses inside strings are
    /// escaped with a backslash.
    pub fn key(&self) -> String {
        let mut s = String::new();
        self.write_key(&mut s);
        s
    }

    fn write_key(&self, s: &mut String) {
        match self {
            EditTree::Replace { source, target } => {
                s.push_str("R(");
                escape_into(source, s);
                s.push(',');
                escape_into(target, s);
                s.push(')');
            }
            EditTree::Match {
                prefix_len,
                suffix_len,
                left,
                right,
            } => {
                let _ = write!(s, "M({prefix_len},{suffix_len},");
                left.write_key(s);
                s.push(',');
                right.write_key(s);
                s.push(')');
            }
        }
    }

    /// Inverse of [`EditTree::key`].
    pub fn parse_key(key: &str) -> Result<Self> {
        let chars: Vec<char> = key.chars().collect();
        let mut pos = 0;
        let tree = parse_node(&chars, &mut pos).map_err(|d| Error::parse("edit tree key", format!("{key:?}: {d}")))?;
        if pos != chars.len() {
            return Err(Error::parse("edit tree key", format!("{key:?}: trailing input")));
        }
        Ok(tree)
    }

    /// Number of Match nodes.
    pub fn match_count(&self) -> usize {
        match self {
            EditTree::Replace { .. } => 0,
            EditTree::Match { left, right, .. } => 1 + left.match_count() + right.match_count(),
        }
    }
}

impl fmt::Display for EditTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

fn build_chars(lemma: &[char], form: &[char]) -> EditTree {
    let lcs = lcs_chars(lemma, form);
    if lcs.len == 0 {
        return EditTree::Replace {
            source: lemma.iter().collect(),
            target: form.iter().collect(),
        };
    }
    let (i, j, k) = (lcs.a_start, lcs.b_start, lcs.len);
    EditTree::matching(
        i,
        lemma.len() - (i + k),
        build_chars(&lemma[..i], &form[..j]),
        build_chars(&lemma[i + k..], &form[j + k..]),
    )
}

/// Convenience wrapper for [`EditTree::build`].
pub fn build_tree(lemma: &str, form: &str) -> EditTree {
    EditTree::build(lemma, form)
}

/// Convenience wrapper for [`EditTree::apply`].
pub fn apply_tree(tree: &EditTree, word: &str) -> Option<String> {
    tree.apply(word)
}

/// Convenience wrapper for [`EditTree::key`].
pub fn tree_key(tree: &EditTree) -> String {
    tree.key()
}

fn escape_into(text: &str, out: &mut String) {
    for c in text.chars() {
        if matches!(c, '\\' | ',' | '(' | ')') {
            out.push('\\');
        }
        out.push(c);
    }
}

fn expect(chars: &[char], pos: &mut usize, c: char) -> std::result::Result<(), String> {
    if chars.get(*pos) == Some(&c) {
        *pos += 1;
        Ok(())
    } else {
        Err(format!("expected {c:?} at {pos}"))
    }
}

fn parse_node(chars: &[char], pos: &mut usize) -> std::result::Result<EditTree, String> {
    match chars.get(*pos) {
        Some('R') => {
            *pos += 1;
            expect(chars, pos, '(')?;
            let source = parse_escaped(chars, pos)?;
            expect(chars, pos, ',')?;
            let target = parse_escaped(chars, pos)?;
            expect(chars, pos, ')')?;
            Ok(EditTree::Replace { source, target })
        }
        Some('M') => {
            *pos += 1;
            expect(chars, pos, '(')?;
            let prefix_len = parse_number(chars, pos)?;
            expect(chars, pos, ',')?;
            let suffix_len = parse_number(chars, pos)?;
            expect(chars, pos, ',')?;
            let left = parse_node(chars, pos)?;
            expect(chars, pos, ',')?;
            let right = parse_node(chars, pos)?;
            expect(chars, pos, ')')?;
            Ok(EditTree::matching(prefix_len, suffix_len, left, right))
        }
        other => Err(format!("unexpected {other:?} at {pos}")),
    }
}

fn parse_escaped(chars: &[char], pos: &mut usize) -> std::result::Result<String, String> {
    let mut out = String::new();
    while let Some(&c) = chars.get(*pos) {
        match c {
            '\\' => {
                let next = chars.get(*pos + 1).ok_or("dangling escape")?;
                out.push(*next);
                *pos += 2;
            }
            ',' | ')' => return Ok(out),
            '(' => return Err(format!("unescaped '(' at {pos}")),
            _ => {
                out.push(c);
                *pos += 1;
            }
        }
    }
    Err("unterminated string".into())
}

fn parse_number(chars: &[char], pos: &mut usize) -> std::result::Result<usize, String> {
    let start = *pos;
    while chars.get(*pos).is_some_and(char::is_ascii_digit) {
        *pos += 1;
    }
    chars[start..*pos]
        .iter()
        .collect::<String>()
        .parse()
        .map_err(|_| format!("expected number at {start}"))
}
