use std::fmt;

use crate::context::Interval;
use crate::engine::AggFn;
use crate::surprise::LabelKind;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelRef {
    pub dim: String,
    pub level: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggAst {
    pub func: AggFn,
    pub measure: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomAst {
    pub level: LevelRef,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryAst {
    pub aggs: Vec<AggAst>,
    pub groupers: Vec<LevelRef>,
    pub atoms: Vec<AtomAst>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConditionAst {
    pub atoms: Vec<AtomAst>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BeliefTargetAst {
    Interval(Interval),
    Values(Vec<f64>),
    Label(String),
}

/// `Dim.Level=value`, or `Level=value` with the dimension inferred.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnchorAst {
    pub dim: Option<String>,
    pub level: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeliefAst {
    pub measure: String,
    pub target: BeliefTargetAst,
    pub anchors: Vec<AnchorAst>,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LabelItemAst {
    Rule {
        measure: String,
        interval: Interval,
        label: String,
    },
    /// `ORDER` (ordinal) or `INTERVAL` declaration of a label sequence.
    Order {
        kind: LabelKind,
        measure: Option<String>,
        labels: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabelRulesAst {
    pub items: Vec<LabelItemAst>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionEntry {
    pub session: String,
    pub query: QueryAst,
    pub line: usize,
}

pub(crate) fn is_bare_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '.' | '-' | '/' | ':' | '+')
}

/// Member literal, quoted when it cannot be written bare.
pub struct Lit<'a>(pub &'a str);

impl fmt::Display for Lit<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.0.is_empty() && self.0.chars().all(is_bare_char) {
            return f.write_str(self.0);
        }
        f.write_str("\"")?;
        for c in self.0.chars() {
            if c == '"' || c == '\\' {
                f.write_str("\\")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str("\"")
    }
}

struct Joined<'a, T>(&'a [T], &'a str);

impl<T: fmt::Display> fmt::Display for Joined<'_, T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(self.1)?;
            }
            write!(f, "{x}")?;
        }
        Ok(())
    }
}

impl fmt::Display for LevelRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.dim, self.level)
    }
}

impl fmt::Display for AggAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.func, self.measure)
    }
}

impl fmt::Display for AtomAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lits: Vec<Lit> = self.values.iter().map(|v| Lit(v)).collect();
        write!(f, "{} IN {{{}}}", self.level, Joined(&lits, ", "))
    }
}

impl fmt::Display for ConditionAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", Joined(&self.atoms, " AND "))
    }
}

impl fmt::Display for QueryAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "SELECT {} BY {}",
            Joined(&self.aggs, ", "),
            Joined(&self.groupers, ", ")
        )?;
        if !self.atoms.is_empty() {
            write!(f, " WHERE {}", Joined(&self.atoms, " AND "))?;
        }
        Ok(())
    }
}

impl fmt::Display for AnchorAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(d) = &self.dim {
            write!(f, "{d}.")?;
        }
        write!(f, "{}={}", self.level, Lit(&self.value))
    }
}

impl fmt::Display for BeliefAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("P(")?;
        match &self.target {
            BeliefTargetAst::Interval(i) => write!(f, "{} IN {i}", self.measure)?,
            BeliefTargetAst::Values(vs) => write!(f, "{} IN {{{}}}", self.measure, Joined(vs, ", "))?,
            BeliefTargetAst::Label(l) => write!(f, "label({}) = {}", self.measure, Lit(l))?,
        }
        if !self.anchors.is_empty() {
            write!(f, " | {}", Joined(&self.anchors, ", "))?;
        }
        write!(f, ") = {}", self.probability)
    }
}

impl fmt::Display for LabelItemAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelItemAst::Rule {
                measure,
                interval,
                label,
            } => write!(f, "{measure}: {interval} -> {}", Lit(label)),
            LabelItemAst::Order {
                kind,
                measure,
                labels,
            } => {
                f.write_str(if *kind == LabelKind::Interval { "INTERVAL " } else { "ORDER " })?;
                if let Some(m) = measure {
                    write!(f, "{m}: ")?;
                }
                for (i, l) in labels.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" < ")?;
                    }
                    // a bare `a:b` first label would read back as a measure prefix
                    if i == 0 && measure.is_none() && l.contains(':') {
                        write!(f, "\"{}\"", l.replace('\\', "\\\\").replace('"', "\\\""))?;
                    } else {
                        write!(f, "{}", Lit(l))?;
                    }
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for LabelRulesAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for item in &self.items {
            writeln!(f, "{item}")?;
        }
        Ok(())
    }
}
