//! Logical queries over feature sets.
//!
//! Grammar (whitespace insignificant, `!` binds tightest, `|` loosest):
//!
//! ```text
//! query   := or
//! or      := and ( "|" and )*
//! and     := unary ( "&" unary )*
//! unary   := "!" unary | primary
//! primary := "(" query ")" | atom
//! atom    := INDEX | NAME | "{" item ( "," item )* "}"
//! item    := INDEX | NAME
//! ```
//!
//! `NAME` is resolved against a [`Vocabulary`]. An atom `S` is true on a
//! subset `L` when `S ∩ L ≠ ∅`. Negation of any subquery is the complement
//! of its filter vector; on an atom this is exactly "`S` and `L` are
//! disjoint". `a | b` is sugar for `!(!a & !b)`.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::lattice::{LatticeSupport, SubsetMask, MAX_FEATURES};
use crate::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Query {
    Atom(SubsetMask),
    Not(Box<Query>),
    And(Box<Query>, Box<Query>),
    Or(Box<Query>, Box<Query>),
}

impl Query {
    pub fn atom(s: SubsetMask) -> Query {
        Query::Atom(s)
    }

    pub fn feature(i: usize) -> Query {
        Query::Atom(SubsetMask::singleton(i))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(q: Query) -> Query {
        Query::Not(Box::new(q))
    }

    pub fn and(a: Query, b: Query) -> Query {
        Query::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Query, b: Query) -> Query {
        Query::Or(Box::new(a), Box::new(b))
    }

    /// Left-nested conjunction of `parts`; `None` when `parts` is empty.
    pub fn conjunction<I: IntoIterator<Item = Query>>(parts: I) -> Option<Query> {
        parts.into_iter().reduce(Query::and)
    }

    /// Union of all atom feature sets.
    pub fn features(&self) -> SubsetMask {
        match self {
            Query::Atom(s) => *s,
            Query::Not(q) => q.features(),
            Query::And(a, b) | Query::Or(a, b) => a.features().union(b.features()),
        }
    }

    /// Fails when an atom is empty or reaches past `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            Query::Atom(s) => {
                if s.is_empty() {
                    return Err(Error::Syntax {
                        position: 0,
                        message: "empty atom".to_string(),
                    });
                }
                if !s.fits(n) {
                    let index = s.max_index().unwrap_or(0);
                    return Err(Error::IndexOutOfRange { index, n });
                }
                Ok(())
            }
            Query::Not(q) => q.validate(n),
            Query::And(a, b) | Query::Or(a, b) => {
                a.validate(n)?;
                b.validate(n)
            }
        }
    }

    /// Truth value of the query on the subset `l`.
    pub fn holds_on(&self, l: SubsetMask) -> bool {
        match self {
            Query::Atom(s) => s.intersects(l),
            Query::Not(q) => !q.holds_on(l),
            Query::And(a, b) => a.holds_on(l) && b.holds_on(l),
            Query::Or(a, b) => a.holds_on(l) || b.holds_on(l),
        }
    }

    /// The filter vector λ(q) over `support`.
    pub fn filter_vector(&self, support: &LatticeSupport) -> Result<FilterVector> {
        self.validate(support.n())?;
        Ok(self.filter_unchecked(support))
    }

    fn filter_unchecked(&self, support: &LatticeSupport) -> FilterVector {
        match self {
            Query::Atom(s) => FilterVector::from_fn(support.len(), |pos| {
                s.intersects(support.subset(pos))
            }),
            Query::Not(q) => q.filter_unchecked(support).complement(),
            Query::And(a, b) => a.filter_unchecked(support).and(&b.filter_unchecked(support)),
            Query::Or(a, b) => a.filter_unchecked(support).or(&b.filter_unchecked(support)),
        }
    }

    /// Rewrites into the core connectives `{∧, ¬}` with flattened, sorted
    /// and deduplicated conjunctions and no double negations.
    pub fn canonicalize(&self) -> Query {
        match self {
            Query::Atom(s) => Query::Atom(*s),
            Query::Not(q) => match q.canonicalize() {
                Query::Not(inner) => *inner,
                other => Query::not(other),
            },
            Query::Or(a, b) => {
                Query::not(Query::and(Query::not((**a).clone()), Query::not((**b).clone())))
                    .canonicalize()
            }
            Query::And(..) => {
                let mut parts = Vec::new();
                self.collect_conjuncts(&mut parts);
                let mut keyed: Vec<(usize, String, Query)> = parts
                    .into_iter()
                    .map(|p| {
                        let min = p.features().min_index().unwrap_or(MAX_FEATURES);
                        (min, render(&p, None), p)
                    })
                    .collect();
                keyed.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
                keyed.dedup_by(|a, b| a.1 == b.1);
                Query::conjunction(keyed.into_iter().map(|(_, _, q)| q))
                    .expect("a conjunction has at least one part")
            }
        }
    }

    fn collect_conjuncts(&self, out: &mut Vec<Query>) {
        match self {
            Query::And(a, b) => {
                a.collect_conjuncts(out);
                b.collect_conjuncts(out);
            }
            other => match other.canonicalize() {
                Query::And(..) => other.canonicalize().collect_conjuncts(out),
                c => out.push(c),
            },
        }
    }

    /// Deterministic text form; parsing it gives back the canonical AST.
    pub fn canonical_string(&self, vocabulary: Option<&Vocabulary>) -> String {
        render(&self.canonicalize(), vocabulary)
    }
}

impl fmt::Debug for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Query::Atom(s) => write!(f, "Atom{s}"),
            Query::Not(q) => write!(f, "Not({q:?})"),
            Query::And(a, b) => write!(f, "And({a:?}, {b:?})"),
            Query::Or(a, b) => write!(f, "Or({a:?}, {b:?})"),
        }
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical_string(None))
    }
}

fn render(q: &Query, vocab: Option<&Vocabulary>) -> String {
    match q {
        Query::Atom(s) => render_atom(*s, vocab),
        Query::Not(inner) => match **inner {
            Query::Atom(_) | Query::Not(_) => format!("!{}", render(inner, vocab)),
            _ => format!("!({})", render(inner, vocab)),
        },
        Query::And(a, b) => {
            let side = |x: &Query| match x {
                Query::Or(..) => format!("({})", render(x, vocab)),
                _ => render(x, vocab),
            };
            format!("{} & {}", side(a), side(b))
        }
        Query::Or(a, b) => format!("{} | {}", render(a, vocab), render(b, vocab)),
    }
}

fn render_atom(s: SubsetMask, vocab: Option<&Vocabulary>) -> String {
    let name = |i: usize| -> String {
        vocab
            .and_then(|v| v.printable_name(i))
            .map(str::to_string)
            .unwrap_or_else(|| i.to_string())
    };
    if s.len() == 1 {
        if let Some(n) = vocab.and_then(|v| v.printable_name(s.min_index().unwrap())) {
            return n.to_string();
        }
    }
    let items: Vec<String> = s.indices().map(name).collect();
    format!("{{{}}}", items.join(","))
}

/// Ordered token list mapping names to feature indices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    positions: BTreeMap<String, Vec<usize>>,
}

impl Vocabulary {
    pub fn new<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        let mut positions: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, t) in tokens.iter().enumerate() {
            positions.entry(t.clone()).or_default().push(i);
        }
        Vocabulary { tokens, positions }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// All positions of `token`.
    pub fn lookup(&self, token: &str) -> &[usize] {
        self.positions.get(token).map(Vec::as_slice).unwrap_or(&[])
    }

    /// The token at `i` when it can be written as a bare name and parsed
    /// back to `i` unambiguously.
    fn printable_name(&self, i: usize) -> Option<&str> {
        let t = self.tokens.get(i)?;
        (is_identifier(t) && self.lookup(t).len() == 1).then_some(t.as_str())
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\'' || c == '-'
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if is_ident_start(c)) && chars.all(is_ident_continue)
}

/// Packed boolean vector aligned with a [`LatticeSupport`].
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FilterVector {
    words: Vec<u64>,
    len: usize,
}

impl FilterVector {
    pub fn zeros(len: usize) -> Self {
        FilterVector {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_fn(len: usize, mut f: impl FnMut(usize) -> bool) -> Self {
        let mut v = FilterVector::zeros(len);
        for i in 0..len {
            if f(i) {
                v.words[i / 64] |= 1 << (i % 64);
            }
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Positions set to true.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &word)| {
            let mut bits = word;
            core::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(w * 64 + b)
            })
        })
    }

    pub fn complement(&self) -> Self {
        let mut words: Vec<u64> = self.words.iter().map(|w| !w).collect();
        let tail = self.len % 64;
        if tail != 0 {
            if let Some(last) = words.last_mut() {
                *last &= (1u64 << tail) - 1;
            }
        }
        FilterVector {
            words,
            len: self.len,
        }
    }

    pub fn and(&self, other: &FilterVector) -> Self {
        assert_eq!(self.len, other.len);
        FilterVector {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect(),
            len: self.len,
        }
    }

    pub fn or(&self, other: &FilterVector) -> Self {
        assert_eq!(self.len, other.len);
        FilterVector {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a | b).collect(),
            len: self.len,
        }
    }

    /// As 0.0 / 1.0 values.
    pub fn to_f64(&self) -> Vec<f64> {
        self.iter().map(|b| if b { 1.0 } else { 0.0 }).collect()
    }
}

impl fmt::Debug for FilterVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Parses `text` without a vocabulary or range check.
pub fn parse(text: &str) -> Result<Query> {
    QueryParser::new().parse(text)
}

/// Configurable entry point for [`parse`].
#[derive(Clone, Copy, Debug, Default)]
pub struct QueryParser<'a> {
    vocabulary: Option<&'a Vocabulary>,
    n: Option<usize>,
}

impl<'a> QueryParser<'a> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn vocabulary(mut self, vocabulary: &'a Vocabulary) -> Self {
        self.vocabulary = Some(vocabulary);
        self
    }

    /// Rejects indices `>= n`.
    pub fn feature_count(mut self, n: usize) -> Self {
        self.n = Some(n);
        self
    }

    /// Parses and canonicalizes.
    pub fn parse(&self, text: &str) -> Result<Query> {
        if text.trim().is_empty() {
            return Err(Error::Syntax {
                position: 1,
                message: "empty query".to_string(),
            });
        }
        let tokens = lex(text)?;
        let mut p = Parser {
            tokens: &tokens,
            pos: 0,
            config: self,
            end: text.chars().count() + 1,
        };
        let q = p.or_expr()?;
        if let Some(t) = p.peek() {
            return Err(Error::Syntax {
                position: t.position,
                message: format!("unexpected {}", t.kind.describe()),
            });
        }
        Ok(q.canonicalize())
    }
}

#[derive(Clone, Debug, PartialEq)]
enum TokenKind {
    Index(String),
    Name(String),
    LBrace,
    RBrace,
    Comma,
    LParen,
    RParen,
    Not,
    And,
    Or,
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Index(s) | TokenKind::Name(s) => format!("`{s}`"),
            TokenKind::LBrace => "`{`".to_string(),
            TokenKind::RBrace => "`}`".to_string(),
            TokenKind::Comma => "`,`".to_string(),
            TokenKind::LParen => "`(`".to_string(),
            TokenKind::RParen => "`)`".to_string(),
            TokenKind::Not => "`!`".to_string(),
            TokenKind::And => "`&`".to_string(),
            TokenKind::Or => "`|`".to_string(),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    kind: TokenKind,
    /// 1-based character column.
    position: usize,
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let position = i + 1;
        let simple = match c {
            '{' => Some(TokenKind::LBrace),
            '}' => Some(TokenKind::RBrace),
            ',' => Some(TokenKind::Comma),
            '(' => Some(TokenKind::LParen),
            ')' => Some(TokenKind::RParen),
            '!' => Some(TokenKind::Not),
            '&' => Some(TokenKind::And),
            '|' => Some(TokenKind::Or),
            _ => None,
        };
        if let Some(kind) = simple {
            out.push(Token { kind, position });
            i += 1;
        } else if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            out.push(Token {
                kind: TokenKind::Index(chars[start..i].iter().collect()),
                position,
            });
        } else if is_ident_start(c) {
            let start = i;
            while i < chars.len() && is_ident_continue(chars[i]) {
                i += 1;
            }
            out.push(Token {
                kind: TokenKind::Name(chars[start..i].iter().collect()),
                position,
            });
        } else {
            return Err(Error::Syntax {
                position,
                message: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(out)
}

struct Parser<'t, 'c> {
    tokens: &'t [Token],
    pos: usize,
    config: &'c QueryParser<'c>,
    end: usize,
}

impl Parser<'_, '_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek().map(|t| &t.kind) == Some(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn error_here(&self, expected: &str) -> Error {
        match self.peek() {
            Some(t) => Error::Syntax {
                position: t.position,
                message: format!("expected {expected}, found {}", t.kind.describe()),
            },
            None => Error::Syntax {
                position: self.end,
                message: format!("expected {expected}, found end of input"),
            },
        }
    }

    fn or_expr(&mut self) -> Result<Query> {
        let mut q = self.and_expr()?;
        while self.eat(&TokenKind::Or) {
            q = Query::or(q, self.and_expr()?);
        }
        Ok(q)
    }

    fn and_expr(&mut self) -> Result<Query> {
        let mut q = self.unary()?;
        while self.eat(&TokenKind::And) {
            q = Query::and(q, self.unary()?);
        }
        Ok(q)
    }

    fn unary(&mut self) -> Result<Query> {
        if self.eat(&TokenKind::Not) {
            return Ok(Query::not(self.unary()?));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Query> {
        match self.peek().map(|t| t.kind.clone()) {
            Some(TokenKind::LParen) => {
                self.pos += 1;
                let q = self.or_expr()?;
                if !self.eat(&TokenKind::RParen) {
                    return Err(self.error_here("`)`"));
                }
                Ok(q)
            }
            Some(TokenKind::LBrace) => {
                self.pos += 1;
                let mut mask = SubsetMask::EMPTY;
                loop {
                    mask = mask.with(self.item()?);
                    if self.eat(&TokenKind::Comma) {
                        continue;
                    }
                    if self.eat(&TokenKind::RBrace) {
                        break;
                    }
                    return Err(self.error_here("`,` or `}`"));
                }
                Ok(Query::Atom(mask))
            }
            Some(TokenKind::Index(_)) | Some(TokenKind::Name(_)) => {
                Ok(Query::Atom(SubsetMask::singleton(self.item()?)))
            }
            _ => Err(self.error_here("a feature, `{`, `(` or `!`")),
        }
    }

    fn item(&mut self) -> Result<usize> {
        let limit = self.config.n.unwrap_or(MAX_FEATURES).min(MAX_FEATURES);
        match self.peek().cloned() {
            Some(Token {
                kind: TokenKind::Index(digits),
                ..
            }) => {
                self.pos += 1;
                let index = digits.parse::<usize>().unwrap_or(usize::MAX);
                if index >= limit {
                    return Err(Error::IndexOutOfRange { index, n: limit });
                }
                Ok(index)
            }
            Some(Token {
                kind: TokenKind::Name(name),
                position,
            }) => {
                self.bump();
                let found = self
                    .config
                    .vocabulary
                    .map(|v| v.lookup(&name))
                    .unwrap_or(&[]);
                match found {
                    [] => Err(Error::UnknownToken {
                        token: name,
                        position,
                    }),
                    [index] => {
                        if *index >= limit {
                            return Err(Error::IndexOutOfRange {
                                index: *index,
                                n: limit,
                            });
                        }
                        Ok(*index)
                    }
                    _ => Err(Error::AmbiguousToken {
                        token: name,
                        position,
                    }),
                }
            }
            _ => Err(self.error_here("a feature index or name")),
        }
    }
}
