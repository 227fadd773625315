//! Text formats: cube queries, selection conditions, belief statements,
//! label rules and session files.
//!
//! ```text
//! query     := "SELECT" agg ("," agg)* "BY" grouper ("," grouper)* ["WHERE" atom ("AND" atom)*]
//! agg       := ("sum"|"avg"|"count"|"min"|"max") "(" ident ")"
//! grouper   := ident "." ident
//! atom      := ident "." ident "IN" "{" literal ("," literal)* "}"
//! condition := [atom ("AND" atom)*]
//! belief    := "P" "(" target ["|" anchor ("," anchor)*] ")" "=" number ["%"]
//! target    := ident "IN" (interval | "{" number ("," number)* "}")
//!            | "label" "(" ident ")" "=" literal
//! anchor    := [ident "."] ident "=" literal
//! interval  := ("[" | "(") number ".." number ("]" | ")")
//! labelline := ident ":" interval "->" literal
//!            | ("ORDER" | "INTERVAL") [ident ":"] literal ("<" literal)*
//! ```
//!
//! Keywords are case-insensitive. A literal is either a bare word made of
//! letters, digits and `_ . - / : +`, or a double-quoted string with `\`
//! escapes. Line-oriented files skip blank lines and `#` comments.

mod ast;
mod parser;

use std::collections::BTreeMap;

pub use ast::*;
use parser::Parser;

use crate::context::{Anchor, BeliefStatement, BeliefStore, BeliefTarget, Goal, QueryHistory};
use crate::engine::{Aggregate, AtomicFilter, CubeQuery, DetailedCube, SelectionCondition};
use crate::error::{Error, Result, SyntaxError};
use crate::mdm::{Schema, ALL_LEVEL};
use crate::surprise::{LabelDomain, LabelKind, LabelingScheme, MeasureLabels};

pub fn parse_query(text: &str) -> Result<QueryAst, SyntaxError> {
    Parser::new(text).query()
}

pub fn parse_condition(text: &str) -> Result<ConditionAst, SyntaxError> {
    Parser::new(text).condition()
}

/// Parses a belief statement; probabilities outside `[0, 1]` are rejected.
pub fn parse_belief(text: &str) -> Result<BeliefAst> {
    let b = Parser::new(text).belief()?;
    if !(0.0..=1.0).contains(&b.probability) {
        return Err(Error::ProbabilityOutOfRange(b.probability));
    }
    Ok(b)
}

/// Content lines with their byte offsets, skipping blanks and `#` comments.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, usize, &str)> {
    let mut offset = 0;
    text.split_inclusive('\n').enumerate().filter_map(move |(no, raw)| {
        let start = offset;
        offset += raw.len();
        let line = raw.trim_end_matches(['\n', '\r']);
        let t = line.trim_start();
        if t.is_empty() || t.starts_with('#') {
            None
        } else {
            Some((no + 1, start, line))
        }
    })
}

pub fn parse_label_rules(text: &str) -> Result<LabelRulesAst, SyntaxError> {
    let mut items = Vec::new();
    for (_, start, line) in content_lines(text) {
        items.push(Parser::with_base(line, start).label_item()?);
    }
    Ok(LabelRulesAst { items })
}

/// One query per line; `SESSION <id>` switches the session of the lines
/// that follow (default `default`).
pub fn parse_session(text: &str) -> Result<Vec<SessionEntry>, SyntaxError> {
    let mut session = "default".to_string();
    let mut out = Vec::new();
    for (no, start, line) in content_lines(text) {
        let mut p = Parser::with_base(line, start);
        if let Some(id) = p.session_directive()? {
            session = id;
            continue;
        }
        out.push(SessionEntry {
            session: session.clone(),
            query: Parser::with_base(line, start).query()?,
            line: no,
        });
    }
    Ok(out)
}

pub fn parse_beliefs(text: &str) -> Result<Vec<BeliefAst>> {
    let mut out = Vec::new();
    for (_, start, line) in content_lines(text) {
        let b = Parser::with_base(line, start).belief()?;
        if !(0.0..=1.0).contains(&b.probability) {
            return Err(Error::ProbabilityOutOfRange(b.probability));
        }
        out.push(b);
    }
    Ok(out)
}

/// Session-file text for a list of entries; parses back to the same entries.
pub fn print_session(entries: &[SessionEntry]) -> String {
    let mut out = String::new();
    let mut current = "default";
    for e in entries {
        if e.session != current {
            out.push_str(&format!("SESSION {}\n", Lit(&e.session)));
            current = &e.session;
        }
        out.push_str(&format!("{}\n", e.query));
    }
    out
}

fn resolve_atoms(schema: &Schema, atoms: &[AtomAst]) -> Result<SelectionCondition> {
    let mut out: Vec<AtomicFilter> = Vec::new();
    for a in atoms {
        let (d, depth) = schema.resolve_level(&a.level.dim, &a.level.level)?;
        if out.iter().any(|x| x.dim == d) {
            return Err(Error::DuplicateDimensionAtom(schema.dim(d).name().to_string()));
        }
        let level = schema.dim(d).level(depth);
        let mut values = Vec::with_capacity(a.values.len());
        for v in &a.values {
            values.push(level.lookup(v).ok_or_else(|| Error::UnknownMember {
                level: a.level.to_string(),
                member: v.clone(),
            })?);
        }
        out.push(AtomicFilter::new(d, depth, values));
    }
    SelectionCondition::new(out)
}

pub fn resolve_condition(schema: &Schema, ast: &ConditionAst) -> Result<SelectionCondition> {
    resolve_atoms(schema, &ast.atoms)
}

pub fn resolve_query(cube: &DetailedCube, ast: &QueryAst) -> Result<CubeQuery> {
    let schema = cube.schema();
    let mut aggregates = Vec::new();
    for a in &ast.aggs {
        let measure = cube
            .measure_index(&a.measure)
            .ok_or_else(|| Error::UnknownMeasure(a.measure.clone()))?;
        aggregates.push(Aggregate {
            func: a.func,
            measure,
        });
    }
    let mut groupers = schema.top_levels();
    let mut seen = vec![false; schema.n_dims()];
    for g in &ast.groupers {
        let (d, depth) = schema.resolve_level(&g.dim, &g.level)?;
        if seen[d] {
            return Err(Error::DuplicateDimensionGrouper(schema.dim(d).name().to_string()));
        }
        seen[d] = true;
        groupers[d] = depth;
    }
    let condition = resolve_atoms(schema, &ast.atoms)?;
    let q = CubeQuery::new(condition, groupers, aggregates);
    q.validate(cube)?;
    Ok(q)
}

/// Parses and resolves in one step.
pub fn query(cube: &DetailedCube, text: &str) -> Result<CubeQuery> {
    resolve_query(cube, &parse_query(text)?)
}

pub fn condition(schema: &Schema, text: &str) -> Result<SelectionCondition> {
    resolve_condition(schema, &parse_condition(text)?)
}

fn condition_atoms(schema: &Schema, cond: &SelectionCondition) -> Vec<AtomAst> {
    cond.atoms()
        .iter()
        .map(|a| {
            let dim = schema.dim(a.dim);
            let level = dim.level(a.depth);
            AtomAst {
                level: LevelRef {
                    dim: dim.name().to_string(),
                    level: level.name().to_string(),
                },
                values: a.values.iter().map(|&v| level.label(v).to_string()).collect(),
            }
        })
        .collect()
}

pub fn condition_to_ast(schema: &Schema, cond: &SelectionCondition) -> ConditionAst {
    ConditionAst {
        atoms: condition_atoms(schema, cond),
    }
}

/// Text form of a resolved query. Dimensions grouped at `ALL` are left out
/// unless every dimension is.
pub fn query_to_ast(cube: &DetailedCube, q: &CubeQuery) -> QueryAst {
    let schema = cube.schema();
    let mut groupers: Vec<LevelRef> = q
        .groupers
        .iter()
        .enumerate()
        .filter(|&(d, &g)| g != schema.dim(d).height())
        .map(|(d, &g)| LevelRef {
            dim: schema.dim(d).name().to_string(),
            level: schema.dim(d).level(g).name().to_string(),
        })
        .collect();
    if groupers.is_empty() {
        groupers.push(LevelRef {
            dim: schema.dim(0).name().to_string(),
            level: ALL_LEVEL.to_string(),
        });
    }
    QueryAst {
        aggs: q
            .aggregates
            .iter()
            .map(|a| AggAst {
                func: a.func,
                measure: cube.measure_names()[a.measure].clone(),
            })
            .collect(),
        groupers,
        atoms: condition_atoms(schema, &q.condition),
    }
}

pub fn query_text(cube: &DetailedCube, q: &CubeQuery) -> String {
    query_to_ast(cube, q).to_string()
}

pub fn resolve_belief(cube: &DetailedCube, ast: &BeliefAst) -> Result<BeliefStatement> {
    let schema = cube.schema();
    let measure = cube
        .measure_index(&ast.measure)
        .ok_or_else(|| Error::UnknownMeasure(ast.measure.clone()))?;
    let mut levels = schema.top_levels();
    let mut coord = vec![0; schema.n_dims()];
    let mut seen = vec![false; schema.n_dims()];
    for a in &ast.anchors {
        let (d, depth) = match &a.dim {
            Some(dim) => schema.resolve_level(dim, &a.level)?,
            None => schema.find_level(&a.level)?,
        };
        if seen[d] {
            return Err(Error::DuplicateDimensionAtom(schema.dim(d).name().to_string()));
        }
        seen[d] = true;
        levels[d] = depth;
        coord[d] = schema
            .dim(d)
            .level(depth)
            .lookup(&a.value)
            .ok_or_else(|| Error::UnknownMember {
                level: a.level.clone(),
                member: a.value.clone(),
            })?;
    }
    let target = match &ast.target {
        BeliefTargetAst::Interval(i) => BeliefTarget::Interval(*i),
        BeliefTargetAst::Values(v) => BeliefTarget::Values(v.clone()),
        BeliefTargetAst::Label(l) => BeliefTarget::Label(l.clone()),
    };
    Ok(BeliefStatement {
        anchor: Anchor { levels, coord },
        measure,
        target,
        probability: ast.probability,
    })
}

pub fn load_beliefs(cube: &DetailedCube, text: &str) -> Result<BeliefStore> {
    let mut store = BeliefStore::new();
    for b in parse_beliefs(text)? {
        store.add(resolve_belief(cube, &b)?)?;
    }
    Ok(store)
}

/// One goal condition per content line.
pub fn load_goals(schema: &Schema, text: &str) -> Result<Vec<Goal>> {
    let mut out = Vec::new();
    for (_, start, line) in content_lines(text) {
        let ast = Parser::with_base(line, start).condition()?;
        out.push(Goal {
            condition: resolve_condition(schema, &ast)?,
        });
    }
    Ok(out)
}

pub fn load_session(cube: &DetailedCube, text: &str) -> Result<QueryHistory> {
    let mut h = QueryHistory::new();
    for e in parse_session(text)? {
        h.append(cube, resolve_query(cube, &e.query)?, None, &e.session)?;
    }
    Ok(h)
}

/// Builds the labeling scheme. An `ORDER`/`INTERVAL` line without a measure
/// applies to every measure; without any, labels are nominal in order of
/// first appearance. With `strict`, gaps between intervals are errors.
pub fn resolve_label_rules(ast: &LabelRulesAst, strict: bool) -> Result<LabelingScheme> {
    let mut rules: BTreeMap<String, (String, Vec<(crate::context::Interval, String)>)> =
        BTreeMap::new();
    let mut orders: BTreeMap<String, (LabelKind, Vec<String>)> = BTreeMap::new();
    let mut global: Option<(LabelKind, Vec<String>)> = None;
    for item in &ast.items {
        match item {
            LabelItemAst::Rule {
                measure,
                interval,
                label,
            } => rules
                .entry(measure.to_ascii_lowercase())
                .or_insert_with(|| (measure.clone(), Vec::new()))
                .1
                .push((*interval, label.clone())),
            LabelItemAst::Order {
                kind,
                measure,
                labels,
            } => match measure {
                Some(m) => {
                    orders.insert(m.to_ascii_lowercase(), (*kind, labels.clone()));
                }
                None => global = Some((*kind, labels.clone())),
            },
        }
    }
    let mut measures = Vec::new();
    for (key, (name, rs)) in rules {
        let domain = match orders.get(&key).or(global.as_ref()) {
            Some((kind, labels)) => {
                if let Some((_, l)) = rs.iter().find(|(_, l)| !labels.contains(l)) {
                    return Err(Error::UnknownLabel(l.clone()));
                }
                LabelDomain {
                    labels: labels.clone(),
                    kind: *kind,
                }
            }
            None => {
                let mut labels: Vec<String> = Vec::new();
                for (_, l) in &rs {
                    if !labels.contains(l) {
                        labels.push(l.clone());
                    }
                }
                LabelDomain {
                    labels,
                    kind: LabelKind::Nominal,
                }
            }
        };
        measures.push(MeasureLabels {
            measure: name,
            rules: rs,
            domain,
        });
    }
    let scheme = LabelingScheme::new(measures)?;
    if strict {
        scheme.check_coverage()?;
    }
    Ok(scheme)
}

pub fn load_label_rules(text: &str, strict: bool) -> Result<LabelingScheme> {
    resolve_label_rules(&parse_label_rules(text)?, strict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::AggFn;
    use crate::mdm::Dimension;

    fn cube() -> DetailedCube {
        let geo = Dimension::from_csv(
            "Geo",
            "City,Country,Continent\nAthens,Greece,Europe\nParis,France,Europe\nToronto,Canada,America\n"
                .as_bytes(),
        )
        .unwrap();
        let t = Dimension::from_csv("Date", "Month,Year\n1996-01,1996\n1997-03,1997\n".as_bytes()).unwrap();
        let facts = "City,Month,sales\nAthens,1996-01,150\nParis,1997-03,90\n";
        DetailedCube::from_csv(Schema::new(vec![geo, t]), facts.as_bytes()).unwrap()
    }

    #[test]
    fn reference_query_shape() {
        let q = parse_query("SELECT avg(Amt) BY Account.District, Date.Month").unwrap();
        assert_eq!(q.aggs, vec![AggAst { func: AggFn::Avg, measure: "Amt".into() }]);
        assert_eq!(q.groupers.len(), 2);
        assert!(q.atoms.is_empty());
        let q = parse_query("select avg(Amt) by Date.Month where Date.Year in {1996, 1997}").unwrap();
        assert_eq!(q.atoms.len(), 1);
        assert_eq!(q.atoms[0].level.level, "Year");
        assert_eq!(q.atoms[0].values, vec!["1996", "1997"]);
    }

    #[test]
    fn resolution_defaults_and_errors() {
        let c = cube();
        let q = query(&c, "SELECT sum(sales) BY Date.ALL").unwrap();
        assert_eq!(q.groupers, vec![3, 2]);
        assert!(q.condition.is_empty());
        let q = query(&c, "SELECT sum(sales) BY Geo.Country WHERE Geo.Continent IN {Europe}").unwrap();
        assert_eq!(q.groupers, vec![1, 2]);
        assert!(matches!(query(&c, "SELECT sum(cost) BY Geo.City"), Err(Error::UnknownMeasure(_))));
        assert!(matches!(
            query(&c, "SELECT sum(sales) BY Geo.City WHERE Geo.City IN {Rome}"),
            Err(Error::UnknownMember { .. })
        ));
        assert!(matches!(
            query(&c, "SELECT sum(sales) BY Geo.City, Geo.Country"),
            Err(Error::DuplicateDimensionGrouper(_))
        ));
        assert!(matches!(query(&c, "SELECT sum(sales) BY Geo.Town"), Err(Error::UnknownLevel(_))));
    }

    #[test]
    fn conditions() {
        let c = cube();
        assert_eq!(parse_condition("Account.Region IN {Moravia}").unwrap().atoms.len(), 1);
        assert!(condition(c.schema(), "").unwrap().is_empty());
        assert!(matches!(
            condition(c.schema(), "Date.Year IN {1996} AND Date.Month IN {1996-01}"),
            Err(Error::DuplicateDimensionAtom(_))
        ));
    }

    #[test]
    fn beliefs() {
        let b = parse_belief("P(sales IN [100..200) | city=Athens, year=2020) = 0.30").unwrap();
        let i = match b.target {
            BeliefTargetAst::Interval(i) => i,
            _ => panic!("interval expected"),
        };
        assert!(i.lo_closed && !i.hi_closed && i.lo == 100.0 && i.hi == 200.0);
        assert_eq!(b.anchors.len(), 2);
        assert_eq!(b.probability, 0.30);
        assert!(matches!(parse_belief("P(Amt IN {0}) = 1.5"), Err(Error::ProbabilityOutOfRange(_))));
        let l = parse_belief("P(label(sales) = OK | city=Athens, year=2020) = 0.20").unwrap();
        assert_eq!(l.target, BeliefTargetAst::Label("OK".into()));
        assert_eq!(parse_belief("P(x IN {1}) = 30%").unwrap().probability, 0.3);

        let c = cube();
        let s = resolve_belief(&c, &parse_belief("P(sales IN {150} | City=Athens, Date.Year=1996) = 0.7").unwrap())
            .unwrap();
        assert_eq!(s.anchor.levels, vec![0, 1]);
        assert_eq!(s.anchor.coord, vec![0, 0]);
    }

    #[test]
    fn label_rules() {
        let text = "# work hours\nWorkHours: [-inf..15) -> Bad\nWorkHours: [15..20] -> OK\nWorkHours: (20..inf] -> Good\nORDER WorkHours: Bad < OK < Good\n";
        let s = load_label_rules(text, true).unwrap();
        let m = s.for_measure("WorkHours").unwrap();
        assert_eq!(m.label_of(19.0), Some("OK"));
        assert_eq!(m.label_of(5.0), Some("Bad"));
        assert_eq!(m.domain.kind, LabelKind::Ordinal);
        let gap = "m: [0..1) -> A\nm: [2..3] -> B\n";
        assert!(matches!(load_label_rules(gap, true), Err(Error::GapInCoverage { .. })));
        assert!(load_label_rules(gap, false).is_ok());
        let overlap = "m: [0..2] -> A\nm: [1..3] -> B\n";
        assert!(matches!(load_label_rules(overlap, false), Err(Error::OverlappingIntervals { .. })));
    }

    #[test]
    fn session_files_keep_sessions_apart() {
        let text = "# log\nSELECT sum(sales) BY Geo.City\n\nSESSION s2\nSELECT avg(sales) BY Date.Year\n";
        let entries = parse_session(text).unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].session, "default");
        assert_eq!(entries[1].session, "s2");
        assert_eq!(entries[1].line, 5);
        let strip = |es: Vec<SessionEntry>| -> Vec<(String, QueryAst)> {
            es.into_iter().map(|e| (e.session, e.query)).collect()
        };
        let again = parse_session(&print_session(&entries)).unwrap();
        assert_eq!(strip(again), strip(entries));
        let h = load_session(&cube(), text).unwrap();
        assert_eq!(h.sessions(), vec!["default", "s2"]);
    }

    #[test]
    fn errors_carry_file_offsets() {
        let text = "SELECT sum(sales) BY Geo.City\nSELECT sum(sales) Geo.City\n";
        let e = parse_session(text).unwrap_err();
        assert_eq!(e.offset, 30 + 18);
        assert!(e.expected.contains(&"BY".to_string()));
    }

    #[test]
    fn printed_query_resolves_to_same_query() {
        let c = cube();
        for t in [
            "SELECT sum(sales), max(sales) BY Geo.Country WHERE Geo.City IN {Athens, Paris}",
            "SELECT count(sales) BY Geo.ALL",
            "SELECT avg(sales) BY Date.Month, Geo.City WHERE Date.Year IN {1997} AND Geo.Continent IN {America}",
        ] {
            let q = query(&c, t).unwrap();
            assert_eq!(query(&c, &query_text(&c, &q)).unwrap(), q);
        }
    }
}
