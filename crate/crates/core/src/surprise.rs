//! Value-, probability- and label-based surprise.

use serde::{Deserialize, Serialize};

use crate::context::{
    measure_key_matches, Anchor, BeliefStatement, BeliefStore, BeliefTarget, ExpectedLabels,
    ExpectedValues, Interval,
};
use crate::engine::CellSet;
use crate::error::{Error, Result};

/// Aggregate over a bag of per-measure or per-cell scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurpriseAgg {
    /// Number of nonzero entries.
    Count,
    Sum,
    Mean,
    Median,
    Max,
    Min,
}

impl SurpriseAgg {
    /// `None` on an empty bag.
    pub fn apply(self, xs: &[f64]) -> Option<f64> {
        if xs.is_empty() {
            return None;
        }
        Some(match self {
            SurpriseAgg::Count => xs.iter().filter(|&&x| x != 0.0).count() as f64,
            SurpriseAgg::Sum => xs.iter().fold(0.0, |a, x| a + x),
            SurpriseAgg::Mean => xs.iter().sum::<f64>() / xs.len() as f64,
            SurpriseAgg::Median => median(xs),
            SurpriseAgg::Max => xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            SurpriseAgg::Min => xs.iter().copied().fold(f64::INFINITY, f64::min),
        })
    }
}

pub(crate) fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SurpriseConfig {
    pub cell_agg: SurpriseAgg,
    pub cube_agg: SurpriseAgg,
    pub distance: fn(f64, f64) -> f64,
}

pub fn absolute_difference(a: f64, b: f64) -> f64 {
    (a - b).abs()
}

impl Default for SurpriseConfig {
    fn default() -> Self {
        SurpriseConfig {
            cell_agg: SurpriseAgg::Mean,
            cube_agg: SurpriseAgg::Mean,
            distance: absolute_difference,
        }
    }
}

/// Surprise of one cell from `(actual, expected)` per measure. Measures
/// without an expectation are left out; if none remain the cell is excluded.
pub fn cell_value_surprise(pairs: &[(f64, Option<f64>)], cfg: &SurpriseConfig) -> Result<f64> {
    let gaps: Vec<f64> = pairs
        .iter()
        .filter_map(|&(m, e)| e.map(|e| (cfg.distance)(m, e)))
        .collect();
    cfg.cell_agg.apply(&gaps).ok_or(Error::NoExpectedValues)
}

fn matched_cells(c: &CellSet, e: &ExpectedValues, cfg: &SurpriseConfig) -> Vec<f64> {
    if e.levels != c.levels {
        return Vec::new();
    }
    c.cells
        .iter()
        .filter_map(|cell| {
            let pairs: Vec<(f64, Option<f64>)> = cell
                .measures
                .iter()
                .zip(&c.measure_labels)
                .map(|(&m, label)| (m, e.get(&cell.coord, label)))
                .collect();
            cell_value_surprise(&pairs, cfg).ok()
        })
        .collect()
}

/// Cube-level value surprise; `None` when no cell has an expectation.
pub fn value_surprise(c: &CellSet, e: &ExpectedValues, cfg: &SurpriseConfig) -> Option<f64> {
    cfg.cube_agg.apply(&matched_cells(c, e, cfg))
}

/// Average absolute distance over matched cells, min-max normalized by the
/// per-cell distances; 0 when they are all equal.
pub fn avg_value_surprise_normalized(c: &CellSet, e: &ExpectedValues, measure: usize) -> Option<f64> {
    if e.levels != c.levels || measure >= c.measure_labels.len() {
        return None;
    }
    let label = &c.measure_labels[measure];
    let gaps: Vec<f64> = c
        .cells
        .iter()
        .filter_map(|cell| {
            e.get(&cell.coord, label)
                .map(|x| absolute_difference(cell.measures[measure], x))
        })
        .collect();
    let avg = SurpriseAgg::Mean.apply(&gaps)?;
    let lo = SurpriseAgg::Min.apply(&gaps)?;
    let hi = SurpriseAgg::Max.apply(&gaps)?;
    Some(if hi == lo { 0.0 } else { (avg - lo) / (hi - lo) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbabilityMode {
    /// Statements over explicit value sets.
    Exact,
    /// Statements over value ranges.
    Interval,
}

/// Sum of the probabilities of statements that do not contain `actual`.
pub fn probability_surprise(
    statements: &[&BeliefStatement],
    actual: f64,
    mode: ProbabilityMode,
) -> f64 {
    statements
        .iter()
        .filter(|s| {
            matches!(
                (&s.target, mode),
                (BeliefTarget::Values(_), ProbabilityMode::Exact)
                    | (BeliefTarget::Interval(_), ProbabilityMode::Interval)
            )
        })
        .filter(|s| s.target.holds_for(actual) == Some(false))
        .map(|s| s.probability)
        .fold(0.0, |a, p| a + p)
}

/// Mean probability surprise over the cells that carry statements of the
/// given mode. `columns[i]` is the base measure of result column `i`.
pub fn cube_probability_surprise(
    c: &CellSet,
    columns: &[usize],
    beliefs: &BeliefStore,
    mode: ProbabilityMode,
) -> Option<f64> {
    let mut per_cell = Vec::new();
    for cell in &c.cells {
        let anchor = Anchor {
            levels: c.levels.clone(),
            coord: cell.coord.clone(),
        };
        let mut scores = Vec::new();
        for (i, &m) in columns.iter().enumerate() {
            let stmts: Vec<&BeliefStatement> = beliefs
                .for_cell(&anchor, m)
                .filter(|s| {
                    matches!(
                        (&s.target, mode),
                        (BeliefTarget::Values(_), ProbabilityMode::Exact)
                            | (BeliefTarget::Interval(_), ProbabilityMode::Interval)
                    )
                })
                .collect();
            if !stmts.is_empty() {
                scores.push(probability_surprise(&stmts, cell.measures[i], mode));
            }
        }
        if let Some(s) = SurpriseAgg::Mean.apply(&scores) {
            per_cell.push(s);
        }
    }
    SurpriseAgg::Mean.apply(&per_cell)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelKind {
    Nominal,
    Ordinal,
    Interval,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelDomain {
    pub labels: Vec<String>,
    pub kind: LabelKind,
}

impl LabelDomain {
    pub fn position(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// 0/1 for nominal labels, `|pos(a) - pos(b)| / (|labels| - 1)` otherwise.
    pub fn distance(&self, a: &str, b: &str) -> Result<f64> {
        let pa = self
            .position(a)
            .ok_or_else(|| Error::UnknownLabel(a.to_string()))?;
        let pb = self
            .position(b)
            .ok_or_else(|| Error::UnknownLabel(b.to_string()))?;
        Ok(match self.kind {
            LabelKind::Nominal => (pa != pb) as u8 as f64,
            _ if self.labels.len() < 2 => 0.0,
            _ => pa.abs_diff(pb) as f64 / (self.labels.len() - 1) as f64,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureLabels {
    pub measure: String,
    pub rules: Vec<(Interval, String)>,
    pub domain: LabelDomain,
}

impl MeasureLabels {
    pub fn label_of(&self, v: f64) -> Option<&str> {
        self.rules
            .iter()
            .find(|(i, _)| i.contains(v))
            .map(|(_, l)| l.as_str())
    }
}

/// Interval-lookup labeling per measure.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelingScheme {
    measures: Vec<MeasureLabels>,
}

impl LabelingScheme {
    pub fn new(mut measures: Vec<MeasureLabels>) -> Result<LabelingScheme> {
        for m in &mut measures {
            m.rules
                .sort_by(|a, b| a.0.lo.total_cmp(&b.0.lo).then(b.0.lo_closed.cmp(&a.0.lo_closed)));
            for (i, a) in m.rules.iter().enumerate() {
                for b in &m.rules[i + 1..] {
                    if a.0.overlaps(&b.0) {
                        return Err(Error::OverlappingIntervals {
                            measure: m.measure.clone(),
                            first: a.0.to_string(),
                            second: b.0.to_string(),
                        });
                    }
                }
            }
        }
        Ok(LabelingScheme { measures })
    }

    pub fn measures(&self) -> &[MeasureLabels] {
        &self.measures
    }

    pub fn for_measure(&self, label: &str) -> Option<&MeasureLabels> {
        self.measures
            .iter()
            .find(|m| measure_key_matches(&m.measure, label))
    }

    /// Fails when the intervals of a measure leave a hole between their
    /// smallest and largest endpoints.
    pub fn check_coverage(&self) -> Result<()> {
        for m in &self.measures {
            for w in m.rules.windows(2) {
                let (a, b) = (&w[0].0, &w[1].0);
                let touching = a.hi == b.lo && (a.hi_closed || b.lo_closed);
                if a.hi < b.lo || (a.hi == b.lo && !touching) {
                    return Err(Error::GapInCoverage {
                        measure: m.measure.clone(),
                        at: a.hi,
                    });
                }
            }
        }
        Ok(())
    }
}

/// `(measure label, expected label, actual label, domain)` for every cell
/// measure that has both an expectation and a scheme.
fn label_pairs<'a>(
    c: &'a CellSet,
    expected: &'a ExpectedLabels,
    scheme: &'a LabelingScheme,
) -> Result<Vec<Vec<(&'a str, &'a str, &'a LabelDomain)>>> {
    if expected.levels != c.levels {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for cell in &c.cells {
        let mut pairs = Vec::new();
        for (&v, label) in cell.measures.iter().zip(&c.measure_labels) {
            let (Some(exp), Some(ml)) = (expected.get(&cell.coord, label), scheme.for_measure(label))
            else {
                continue;
            };
            let actual = ml.label_of(v).ok_or_else(|| Error::UnlabeledValue {
                measure: label.clone(),
                value: v,
            })?;
            pairs.push((exp, actual, &ml.domain));
        }
        if !pairs.is_empty() {
            out.push(pairs);
        }
    }
    Ok(out)
}

/// Label-based surprise; with `cell_agg = Max` and `cube_agg = Mean` this
/// is the partial max-average variant. `None` when nothing is comparable.
pub fn label_surprise(
    c: &CellSet,
    expected: &ExpectedLabels,
    scheme: &LabelingScheme,
    cell_agg: SurpriseAgg,
    cube_agg: SurpriseAgg,
) -> Result<Option<f64>> {
    let mut per_cell = Vec::new();
    for pairs in label_pairs(c, expected, scheme)? {
        let ds = pairs
            .iter()
            .map(|(e, a, dom)| dom.distance(e, a))
            .collect::<Result<Vec<_>>>()?;
        per_cell.extend(cell_agg.apply(&ds));
    }
    Ok(cube_agg.apply(&per_cell))
}

/// True iff some measure of some cell carries a label other than expected.
pub fn strict_label_surprise(
    c: &CellSet,
    expected: &ExpectedLabels,
    scheme: &LabelingScheme,
) -> Result<bool> {
    Ok(label_pairs(c, expected, scheme)?
        .iter()
        .flatten()
        .any(|(e, a, _)| e != a))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelMode {
    Strict,
    Loose,
}

/// Probability mass on labels other than `actual`; in loose mode each term
/// is weighted by `weight(distance)` (identity by default).
pub fn prob_label_surprise(
    beliefs: &[(&str, f64)],
    actual: &str,
    domain: &LabelDomain,
    mode: LabelMode,
    weight: Option<&dyn Fn(f64) -> f64>,
) -> Result<f64> {
    if mode == LabelMode::Loose && domain.kind == LabelKind::Nominal {
        return Err(Error::NominalLooseUnsupported);
    }
    let mut total = 0.0;
    for &(label, p) in beliefs {
        if label == actual {
            continue;
        }
        total += match mode {
            LabelMode::Strict => p,
            LabelMode::Loose => {
                let d = domain.distance(label, actual)?;
                weight.map_or(d, |w| w(d)) * p
            }
        };
    }
    Ok(total)
}

/// Mean label-probability surprise over cells with label statements.
pub fn cube_prob_label_surprise(
    c: &CellSet,
    columns: &[usize],
    beliefs: &BeliefStore,
    scheme: &LabelingScheme,
    mode: LabelMode,
) -> Result<Option<f64>> {
    let mut per_cell = Vec::new();
    for cell in &c.cells {
        let anchor = Anchor {
            levels: c.levels.clone(),
            coord: cell.coord.clone(),
        };
        let mut scores = Vec::new();
        for (i, &m) in columns.iter().enumerate() {
            let stmts: Vec<(&str, f64)> = beliefs
                .for_cell(&anchor, m)
                .filter_map(|s| match &s.target {
                    BeliefTarget::Label(l) => Some((l.as_str(), s.probability)),
                    _ => None,
                })
                .collect();
            if stmts.is_empty() {
                continue;
            }
            let label = &c.measure_labels[i];
            let Some(ml) = scheme.for_measure(label) else {
                continue;
            };
            let v = cell.measures[i];
            let actual = ml.label_of(v).ok_or_else(|| Error::UnlabeledValue {
                measure: label.clone(),
                value: v,
            })?;
            scores.push(prob_label_surprise(&stmts, actual, &ml.domain, mode, None)?);
        }
        per_cell.extend(SurpriseAgg::Mean.apply(&scores));
    }
    Ok(SurpriseAgg::Mean.apply(&per_cell))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Cell;

    fn stmt(values: Vec<f64>, p: f64) -> BeliefStatement {
        BeliefStatement {
            anchor: Anchor {
                levels: vec![0],
                coord: vec![0],
            },
            measure: 0,
            target: BeliefTarget::Values(values),
            probability: p,
        }
    }

    #[test]
    fn strict_probability_surprise_is_ninety_percent() {
        let s = [stmt(vec![100.0], 0.2), stmt(vec![80.0], 0.7), stmt(vec![70.0], 0.1)];
        let refs: Vec<&BeliefStatement> = s.iter().collect();
        let v = probability_surprise(&refs, 70.0, ProbabilityMode::Exact);
        assert!((v - 0.9).abs() < 1e-12);
        let sure = [stmt(vec![70.0], 1.0)];
        assert_eq!(probability_surprise(&[&sure[0]], 70.0, ProbabilityMode::Exact), 0.0);
    }

    #[test]
    fn overlapping_intervals_containing_actual_do_not_count() {
        let mk = |lo, hi, p| BeliefStatement {
            target: BeliefTarget::Interval(Interval::new(lo, true, hi, false)),
            ..stmt(vec![], p)
        };
        let s = [mk(0.0, 50.0, 0.3), mk(20.0, 80.0, 0.4), mk(60.0, 90.0, 0.2)];
        let refs: Vec<&BeliefStatement> = s.iter().collect();
        let v = probability_surprise(&refs, 30.0, ProbabilityMode::Interval);
        assert!((v - 0.2).abs() < 1e-12);
        assert_eq!(probability_surprise(&refs, 30.0, ProbabilityMode::Exact), 0.0);
    }

    #[test]
    fn cell_value_surprise_cases() {
        let cfg = SurpriseConfig::default();
        assert_eq!(cell_value_surprise(&[(19.0, Some(19.0))], &cfg).unwrap(), 0.0);
        assert_eq!(cell_value_surprise(&[(29448.0, Some(20048.0))], &cfg).unwrap(), 9400.0);
        let max = SurpriseConfig {
            cell_agg: SurpriseAgg::Max,
            ..cfg
        };
        assert_eq!(
            cell_value_surprise(&[(10.0, Some(4.0)), (3.0, Some(5.0)), (1.0, None)], &max).unwrap(),
            6.0
        );
        assert!(matches!(
            cell_value_surprise(&[(1.0, None)], &cfg),
            Err(Error::NoExpectedValues)
        ));
    }

    fn one_dim_cells(values: &[f64]) -> CellSet {
        CellSet {
            levels: vec![0],
            measure_labels: vec!["avg(sales)".into()],
            cells: values
                .iter()
                .enumerate()
                .map(|(i, &v)| Cell {
                    coord: vec![i as u32],
                    measures: vec![v],
                })
                .collect(),
        }
    }

    #[test]
    fn normalized_average_value_surprise() {
        let c = one_dim_cells(&[29448.0, 155616.0, 161496.0, 187104.0, 5.0]);
        let mut e = ExpectedValues::new(vec![0]);
        for (i, v) in [20048.0, 155616.0, 161496.0, 187104.0].into_iter().enumerate() {
            e.insert(vec![i as u32], "sales", v);
        }
        let s = avg_value_surprise_normalized(&c, &e, 0).unwrap();
        assert!((s - 0.25).abs() < 1e-12);
        assert_eq!(value_surprise(&c, &e, &SurpriseConfig::default()), Some(2350.0));
        assert_eq!(value_surprise(&c, &ExpectedValues::new(vec![0]), &SurpriseConfig::default()), None);
        let exact = one_dim_cells(&[155616.0]);
        let mut e1 = ExpectedValues::new(vec![0]);
        e1.insert(vec![0], "sales", 155616.0);
        assert_eq!(avg_value_surprise_normalized(&exact, &e1, 0), Some(0.0));
    }

    fn work_hours() -> LabelingScheme {
        let dom = LabelDomain {
            labels: vec!["Bad".into(), "OK".into(), "Good".into()],
            kind: LabelKind::Nominal,
        };
        LabelingScheme::new(vec![MeasureLabels {
            measure: "sales".into(),
            rules: vec![
                (Interval::new(f64::NEG_INFINITY, true, 15.0, false), "Bad".into()),
                (Interval::new(15.0, true, 20.0, true), "OK".into()),
                (Interval::new(20.0, false, f64::INFINITY, true), "Good".into()),
            ],
            domain: dom,
        }])
        .unwrap()
    }

    #[test]
    fn label_lookup_and_surprise() {
        let s = work_hours();
        let ml = s.for_measure("avg(sales)").unwrap();
        assert_eq!(ml.label_of(19.0), Some("OK"));
        assert_eq!(ml.label_of(5.0), Some("Bad"));
        s.check_coverage().unwrap();

        let c = one_dim_cells(&[19.0, 5.0]);
        let mut e = ExpectedLabels::new(vec![0]);
        e.insert(vec![0], "sales", "OK");
        let v = label_surprise(&c, &e, &s, SurpriseAgg::Max, SurpriseAgg::Mean).unwrap();
        assert_eq!(v, Some(0.0));
        assert!(!strict_label_surprise(&c, &e, &s).unwrap());
        e.insert(vec![1], "sales", "OK");
        let v = label_surprise(&c, &e, &s, SurpriseAgg::Max, SurpriseAgg::Mean).unwrap();
        assert_eq!(v, Some(0.5));
        assert!(strict_label_surprise(&c, &e, &s).unwrap());
        assert!(!strict_label_surprise(&c, &ExpectedLabels::new(vec![0]), &s).unwrap());
    }

    #[test]
    fn overlap_and_gap_detection() {
        let dom = LabelDomain {
            labels: vec!["A".into(), "B".into()],
            kind: LabelKind::Nominal,
        };
        let overlapping = LabelingScheme::new(vec![MeasureLabels {
            measure: "m".into(),
            rules: vec![
                (Interval::new(0.0, true, 10.0, true), "A".into()),
                (Interval::new(10.0, true, 20.0, true), "B".into()),
            ],
            domain: dom.clone(),
        }]);
        assert!(matches!(overlapping, Err(Error::OverlappingIntervals { .. })));
        let gappy = LabelingScheme::new(vec![MeasureLabels {
            measure: "m".into(),
            rules: vec![
                (Interval::new(0.0, true, 10.0, false), "A".into()),
                (Interval::new(12.0, true, 20.0, true), "B".into()),
            ],
            domain: dom,
        }])
        .unwrap();
        assert!(matches!(gappy.check_coverage(), Err(Error::GapInCoverage { at, .. }) if at == 10.0));
    }

    #[test]
    fn ordinal_position_distance() {
        let d = LabelDomain {
            labels: ["Bad", "OK", "Good", "Great"].map(String::from).to_vec(),
            kind: LabelKind::Interval,
        };
        assert!((d.distance("Bad", "Good").unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!(matches!(d.distance("Bad", "Meh"), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn label_probability_strict_and_loose() {
        let d = LabelDomain {
            labels: ["Bad", "OK", "Good"].map(String::from).to_vec(),
            kind: LabelKind::Interval,
        };
        let b = [("OK", 0.2), ("Bad", 0.5), ("Good", 0.3)];
        let strict = prob_label_surprise(&b, "OK", &d, LabelMode::Strict, None).unwrap();
        assert!((strict - 0.8).abs() < 1e-12);
        // Bad and Good are each one step from OK out of two
        let loose = prob_label_surprise(&b, "OK", &d, LabelMode::Loose, None).unwrap();
        assert!((loose - (0.5 * 0.5 + 0.5 * 0.3)).abs() < 1e-12);
        let from_bad = prob_label_surprise(&b, "Bad", &d, LabelMode::Loose, None).unwrap();
        assert!((from_bad - (0.5 * 0.2 + 1.0 * 0.3)).abs() < 1e-12);
        assert_eq!(
            prob_label_surprise(&[("OK", 1.0)], "OK", &d, LabelMode::Strict, None).unwrap(),
            0.0
        );
        let nominal = LabelDomain {
            kind: LabelKind::Nominal,
            ..d
        };
        assert!(matches!(
            prob_label_surprise(&b, "OK", &nominal, LabelMode::Loose, None),
            Err(Error::NominalLooseUnsupported)
        ));
    }
}
