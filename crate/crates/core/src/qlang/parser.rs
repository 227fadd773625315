//! Scannerless recursive-descent parser. Each production commits on its
//! first token, so the grammar is LL(1) apart from the optional measure
//! prefix of an `ORDER` line.

use super::ast::*;
use crate::context::Interval;
use crate::engine::AggFn;
use crate::error::SyntaxError;
use crate::surprise::LabelKind;

type PResult<T> = Result<T, SyntaxError>;

pub(crate) struct Parser<'a> {
    src: &'a str,
    pos: usize,
    base: usize,
}

impl<'a> Parser<'a> {
    pub(crate) fn new(src: &'a str) -> Self {
        Parser::with_base(src, 0)
    }

    /// `base` is added to every reported offset (for line-oriented files).
    pub(crate) fn with_base(src: &'a str, base: usize) -> Self {
        Parser { src, pos: 0, base }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    fn error(&mut self, expected: &[&str]) -> SyntaxError {
        self.skip_ws();
        let rest = self.rest();
        let found = match rest.chars().next() {
            None => "end of input".to_string(),
            Some(c) if c.is_alphanumeric() || c == '_' => {
                let w: String = rest.chars().take_while(|&c| is_bare_char(c)).collect();
                format!("`{w}`")
            }
            Some(c) => format!("`{c}`"),
        };
        SyntaxError {
            offset: self.base + self.pos,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found,
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> PResult<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&[&format!("`{c}`")]))
        }
    }

    fn eat_str(&mut self, s: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    /// Case-insensitive keyword followed by a non-identifier character.
    fn eat_keyword(&mut self, kw: &str) -> bool {
        self.skip_ws();
        let rest = self.rest();
        if rest.len() >= kw.len()
            && rest.is_char_boundary(kw.len())
            && rest[..kw.len()].eq_ignore_ascii_case(kw)
            && !rest[kw.len()..]
                .chars()
                .next()
                .is_some_and(|c| c.is_alphanumeric() || c == '_')
        {
            self.pos += kw.len();
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> PResult<()> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.error(&[kw]))
        }
    }

    pub(crate) fn at_end(&mut self) -> bool {
        self.peek().is_none()
    }

    pub(crate) fn expect_end(&mut self, alternatives: &[&str]) -> PResult<()> {
        if self.at_end() {
            Ok(())
        } else {
            let mut exp: Vec<&str> = alternatives.to_vec();
            exp.push("end of input");
            Err(self.error(&exp))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        self.skip_ws();
        let rest = self.rest();
        let mut chars = rest.char_indices();
        match chars.next() {
            Some((_, c)) if c.is_alphabetic() || c == '_' => {}
            _ => return Err(self.error(&["identifier"])),
        }
        let end = chars
            .find(|&(_, c)| !(c.is_alphanumeric() || c == '_'))
            .map_or(rest.len(), |(i, _)| i);
        self.pos += end;
        Ok(rest[..end].to_string())
    }

    fn literal(&mut self) -> PResult<String> {
        self.skip_ws();
        let rest = self.rest();
        if let Some(body) = rest.strip_prefix('"') {
            let mut out = String::new();
            let mut it = body.char_indices();
            while let Some((i, c)) = it.next() {
                match c {
                    '"' => {
                        self.pos += 1 + i + 1;
                        return Ok(out);
                    }
                    '\\' => match it.next() {
                        Some((_, e)) => out.push(e),
                        None => break,
                    },
                    c => out.push(c),
                }
            }
            self.pos = self.src.len();
            return Err(self.error(&["`\"`"]));
        }
        let end = rest
            .char_indices()
            .find(|&(_, c)| !is_bare_char(c))
            .map_or(rest.len(), |(i, _)| i);
        if end == 0 {
            return Err(self.error(&["literal"]));
        }
        self.pos += end;
        Ok(rest[..end].to_string())
    }

    fn number(&mut self) -> PResult<f64> {
        self.skip_ws();
        let rest = self.rest();
        let b = rest.as_bytes();
        let mut i = 0;
        if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
            i += 1;
        }
        if rest[i..].len() >= 3 && rest[i..i + 3].eq_ignore_ascii_case("inf") {
            let v = if b.first() == Some(&b'-') { f64::NEG_INFINITY } else { f64::INFINITY };
            self.pos += i + 3;
            return Ok(v);
        }
        let digits = |i: &mut usize| {
            let s = *i;
            while *i < b.len() && b[*i].is_ascii_digit() {
                *i += 1;
            }
            *i > s
        };
        if !digits(&mut i) {
            return Err(self.error(&["number"]));
        }
        if i + 1 < b.len() && b[i] == b'.' && b[i + 1].is_ascii_digit() {
            i += 1;
            digits(&mut i);
        }
        if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
            let mut j = i + 1;
            if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                j += 1;
            }
            if digits(&mut j) {
                i = j;
            }
        }
        let v = rest[..i].parse::<f64>().map_err(|_| self.error(&["number"]))?;
        self.pos += i;
        Ok(v)
    }

    fn level_ref(&mut self) -> PResult<LevelRef> {
        let dim = self.ident()?;
        self.expect('.')?;
        let level = self.ident()?;
        Ok(LevelRef { dim, level })
    }

    fn agg(&mut self) -> PResult<AggAst> {
        let start = self.pos;
        let name = self.ident().map_err(|_| self.error(&["sum", "avg", "count", "min", "max"]))?;
        let Some(func) = AggFn::parse(&name) else {
            self.pos = start;
            return Err(self.error(&["sum", "avg", "count", "min", "max"]));
        };
        self.expect('(')?;
        let measure = self.ident()?;
        self.expect(')')?;
        Ok(AggAst { func, measure })
    }

    fn atom(&mut self) -> PResult<AtomAst> {
        let level = self.level_ref()?;
        self.expect_keyword("IN")?;
        self.expect('{')?;
        let mut values = vec![self.literal()?];
        while self.eat(',') {
            values.push(self.literal()?);
        }
        self.expect('}').map_err(|_| self.error(&["`,`", "`}`"]))?;
        Ok(AtomAst { level, values })
    }

    pub(crate) fn query(&mut self) -> PResult<QueryAst> {
        self.expect_keyword("SELECT")?;
        let mut aggs = vec![self.agg()?];
        while self.eat(',') {
            aggs.push(self.agg()?);
        }
        self.expect_keyword("BY").map_err(|_| self.error(&["`,`", "BY"]))?;
        let mut groupers = vec![self.level_ref()?];
        while self.eat(',') {
            groupers.push(self.level_ref()?);
        }
        let mut atoms = Vec::new();
        if self.eat_keyword("WHERE") {
            atoms.push(self.atom()?);
            while self.eat_keyword("AND") {
                atoms.push(self.atom()?);
            }
            self.expect_end(&["AND"])?;
        } else {
            self.expect_end(&["`,`", "WHERE"])?;
        }
        Ok(QueryAst {
            aggs,
            groupers,
            atoms,
        })
    }

    pub(crate) fn condition(&mut self) -> PResult<ConditionAst> {
        let mut atoms = Vec::new();
        if self.at_end() {
            return Ok(ConditionAst { atoms });
        }
        atoms.push(self.atom()?);
        while self.eat_keyword("AND") {
            atoms.push(self.atom()?);
        }
        self.expect_end(&["AND"])?;
        Ok(ConditionAst { atoms })
    }

    fn interval(&mut self) -> PResult<Interval> {
        let lo_closed = match self.peek() {
            Some('[') => true,
            Some('(') => false,
            _ => return Err(self.error(&["`[`", "`(`"])),
        };
        self.pos += 1;
        let lo = self.number()?;
        if !self.eat_str("..") {
            return Err(self.error(&["`..`"]));
        }
        let hi = self.number()?;
        let hi_closed = match self.peek() {
            Some(']') => true,
            Some(')') => false,
            _ => return Err(self.error(&["`]`", "`)`"])),
        };
        self.pos += 1;
        Ok(Interval::new(lo, lo_closed, hi, hi_closed))
    }

    fn probability(&mut self) -> PResult<f64> {
        let p = self.number()?;
        Ok(if self.eat('%') { p / 100.0 } else { p })
    }

    fn anchor(&mut self) -> PResult<AnchorAst> {
        let first = self.ident()?;
        let (dim, level) = if self.eat('.') {
            (Some(first), self.ident()?)
        } else {
            (None, first)
        };
        self.expect('=')?;
        let value = self.literal()?;
        Ok(AnchorAst { dim, level, value })
    }

    pub(crate) fn belief(&mut self) -> PResult<BeliefAst> {
        self.expect_keyword("P")?;
        self.expect('(')?;
        let (measure, target) = if self.eat_keyword("label") {
            self.expect('(')?;
            let m = self.ident()?;
            self.expect(')')?;
            self.expect('=')?;
            (m, BeliefTargetAst::Label(self.literal()?))
        } else {
            let m = self.ident()?;
            self.expect_keyword("IN")?;
            if self.eat('{') {
                let mut vs = vec![self.number()?];
                while self.eat(',') {
                    vs.push(self.number()?);
                }
                self.expect('}').map_err(|_| self.error(&["`,`", "`}`"]))?;
                (m, BeliefTargetAst::Values(vs))
            } else if matches!(self.peek(), Some('[') | Some('(')) {
                (m, BeliefTargetAst::Interval(self.interval()?))
            } else {
                return Err(self.error(&["`{`", "`[`", "`(`"]));
            }
        };
        let mut anchors = Vec::new();
        if self.eat('|') {
            anchors.push(self.anchor()?);
            while self.eat(',') {
                anchors.push(self.anchor()?);
            }
        }
        self.expect(')').map_err(|_| {
            if anchors.is_empty() {
                self.error(&["`|`", "`)`"])
            } else {
                self.error(&["`,`", "`)`"])
            }
        })?;
        self.expect('=')?;
        let probability = self.probability()?;
        self.expect_end(&[])?;
        Ok(BeliefAst {
            measure,
            target,
            anchors,
            probability,
        })
    }

    pub(crate) fn label_item(&mut self) -> PResult<LabelItemAst> {
        self.skip_ws();
        let save = self.pos;
        let kind = if self.eat_keyword("ORDER") {
            Some(LabelKind::Ordinal)
        } else if self.eat_keyword("INTERVAL") {
            Some(LabelKind::Interval)
        } else {
            None
        };
        if let Some(kind) = kind {
            if self.peek() != Some(':') {
                let before = self.pos;
                let measure = match self.ident() {
                    Ok(m) if self.eat(':') => Some(m),
                    _ => {
                        self.pos = before;
                        None
                    }
                };
                let mut labels = vec![self.literal()?];
                while self.eat('<') {
                    labels.push(self.literal()?);
                }
                self.expect_end(&["`<`"])?;
                return Ok(LabelItemAst::Order {
                    kind,
                    measure,
                    labels,
                });
            }
            // a measure that happens to be called ORDER or INTERVAL
            self.pos = save;
        }
        let measure = self
            .ident()
            .map_err(|_| self.error(&["identifier", "ORDER", "INTERVAL"]))?;
        self.expect(':')?;
        let interval = self.interval()?;
        if !self.eat_str("->") {
            return Err(self.error(&["`->`"]));
        }
        let label = self.literal()?;
        self.expect_end(&[])?;
        Ok(LabelItemAst::Rule {
            measure,
            interval,
            label,
        })
    }

    /// `SESSION <id>` directive; `None` if the line is something else.
    pub(crate) fn session_directive(&mut self) -> PResult<Option<String>> {
        let save = self.pos;
        if self.eat_keyword("SESSION") {
            let id = self.literal()?;
            self.expect_end(&[])?;
            Ok(Some(id))
        } else {
            self.pos = save;
            Ok(None)
        }
    }
}
