//! Reading raw edge streams, vertex attribute tables and change-point labels,
//! and binning events into a [`GraphSequence`] at an initial resolution.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::IngestError;
use crate::graph::{GraphSequence, StaticGraph};

/// One time-stamped contact between two distinct vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeEvent {
    pub u: usize,
    pub v: usize,
    pub t: u64,
}

/// Column layout of an edge-list file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeFormat {
    /// Field separator. Any whitespace character means "split on runs of whitespace".
    pub delimiter: char,
    pub src_col: usize,
    pub dst_col: usize,
    pub time_col: usize,
}

impl Default for EdgeFormat {
    fn default() -> Self {
        Self {
            delimiter: ',',
            src_col: 0,
            dst_col: 1,
            time_col: 2,
        }
    }
}

fn split_fields(line: &str, delimiter: char) -> Vec<&str> {
    if delimiter.is_whitespace() {
        line.split_whitespace().collect()
    } else {
        line.split(delimiter).map(str::trim).collect()
    }
}

/// Dense vertex ids in order of first appearance.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct LabelTable {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for LabelTable {
    fn from(labels: Vec<String>) -> Self {
        let index = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        Self { labels, index }
    }
}

impl From<LabelTable> for Vec<String> {
    fn from(t: LabelTable) -> Self {
        t.labels
    }
}

impl LabelTable {
    pub fn intern(&mut self, label: &str) -> usize {
        if let Some(&id) = self.index.get(label) {
            return id;
        }
        let id = self.labels.len();
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), id);
        id
    }

    pub fn get(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn label(&self, id: usize) -> &str {
        &self.labels[id]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// Parsed events plus the label table that produced their ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EdgeStream {
    pub events: Vec<EdgeEvent>,
    pub labels: LabelTable,
}

impl EdgeStream {
    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }
}

/// Parses an edge list. Lines starting with `#` and blank lines are skipped.
pub fn parse_edge_stream(text: &str, format: &EdgeFormat) -> Result<EdgeStream, IngestError> {
    let mut stream = EdgeStream::default();
    let needed = format.src_col.max(format.dst_col).max(format.time_col) + 1;
    let mut first_loop = None;
    let mut loops = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields = split_fields(line, format.delimiter);
        if fields.len() < needed {
            return Err(IngestError::Malformed {
                line: line_no,
                reason: format!("expected at least {needed} fields, found {}", fields.len()),
            });
        }
        let (src, dst) = (fields[format.src_col], fields[format.dst_col]);
        if src.is_empty() || dst.is_empty() {
            return Err(IngestError::Malformed {
                line: line_no,
                reason: "empty vertex label".into(),
            });
        }
        let t: i64 = fields[format.time_col]
            .parse()
            .map_err(|_| IngestError::Malformed {
                line: line_no,
                reason: format!("timestamp `{}` is not an integer", fields[format.time_col]),
            })?;
        if t < 0 {
            return Err(IngestError::NegativeTimestamp {
                line: line_no,
                value: t,
            });
        }
        if src == dst {
            first_loop.get_or_insert(line_no);
            loops += 1;
            continue;
        }
        let u = stream.labels.intern(src);
        let v = stream.labels.intern(dst);
        stream.events.push(EdgeEvent { u, v, t: t as u64 });
    }

    if let Some(first_line) = first_loop {
        return Err(IngestError::SelfLoop {
            first_line,
            count: loops,
        });
    }
    Ok(stream)
}

/// Bins events into half-open intervals `[origin + i*r, origin + (i+1)*r)`.
///
/// `origin` defaults to the earliest timestamp. Duplicate contacts inside a
/// bin collapse to a single edge.
pub fn bin_initial(
    events: &[EdgeEvent],
    n: usize,
    resolution: u64,
    origin: Option<u64>,
) -> Result<GraphSequence, IngestError> {
    if resolution == 0 {
        return Err(IngestError::ZeroResolution);
    }
    let t_min = events.iter().map(|e| e.t).min().ok_or(IngestError::Empty)?;
    let t_max = events.iter().map(|e| e.t).max().unwrap_or(t_min);
    let origin = origin.unwrap_or(t_min);
    if origin > t_min {
        return Err(IngestError::OriginAfterFirstEvent { origin, t_min });
    }
    let steps = ((t_max - origin) / resolution + 1) as usize;
    let mut graphs = vec![StaticGraph::empty(n); steps];
    for e in events {
        let bin = ((e.t - origin) / resolution) as usize;
        graphs[bin].insert(e.u, e.v);
    }
    Ok(GraphSequence::new(n, graphs, resolution))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Categorical,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FeatureValue {
    Categorical(String),
    Continuous(f64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureColumn {
    pub name: String,
    pub kind: FeatureKind,
}

/// Static per-vertex features plus one binary target.
///
/// The two target values are kept sorted; the lexicographically larger one is
/// the positive class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexAttributes {
    columns: Vec<FeatureColumn>,
    values: Vec<Vec<Option<FeatureValue>>>,
    target_name: String,
    classes: [String; 2],
    target: Vec<Option<bool>>,
}

impl VertexAttributes {
    /// Attribute table for `n` vertices with no values filled in.
    pub fn new(
        n: usize,
        columns: Vec<FeatureColumn>,
        target_name: impl Into<String>,
        negative: impl Into<String>,
        positive: impl Into<String>,
    ) -> Self {
        let width = columns.len();
        Self {
            columns,
            values: vec![vec![None; width]; n],
            target_name: target_name.into(),
            classes: [negative.into(), positive.into()],
            target: vec![None; n],
        }
    }

    pub fn set_target(&mut self, vertex: usize, positive: bool) {
        self.target[vertex] = Some(positive);
    }

    pub fn clear_target(&mut self, vertex: usize) {
        self.target[vertex] = None;
    }

    pub fn set_feature(&mut self, vertex: usize, column: usize, value: FeatureValue) {
        self.values[vertex][column] = Some(value);
    }

    pub fn n(&self) -> usize {
        self.target.len()
    }

    pub fn columns(&self) -> &[FeatureColumn] {
        &self.columns
    }

    pub fn feature(&self, vertex: usize, column: usize) -> Option<&FeatureValue> {
        self.values[vertex][column].as_ref()
    }

    pub fn target(&self, vertex: usize) -> Option<bool> {
        self.target[vertex]
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    /// `[negative, positive]` class names.
    pub fn classes(&self) -> &[String; 2] {
        &self.classes
    }

    /// Vertices with a known target, ascending.
    pub fn labelled(&self) -> Vec<usize> {
        (0..self.n())
            .filter(|&v| self.target[v].is_some())
            .collect()
    }

    /// Flips every target label (and the class names), leaving features alone.
    pub fn with_swapped_target(&self) -> Self {
        let mut out = self.clone();
        out.classes.swap(0, 1);
        for t in out.target.iter_mut().flatten() {
            *t = !*t;
        }
        out
    }
}

/// Parses a delimited attribute table keyed by vertex label (first column).
///
/// An optional first line `#schema,<kind>,<kind>,...` declares each column as
/// `label`, `categorical` or `continuous`; entries in `kinds` override it.
/// Undeclared columns are categorical. Empty cells are missing values.
pub fn load_attributes(
    text: &str,
    target: &str,
    labels: &LabelTable,
    delimiter: char,
    kinds: &HashMap<String, FeatureKind>,
) -> Result<VertexAttributes, IngestError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let mut schema: Option<Vec<String>> = None;
    let (mut header_line, mut header) = lines.next().ok_or(IngestError::Malformed {
        line: 1,
        reason: "missing header row".into(),
    })?;
    if let Some(rest) = header.strip_prefix("#schema") {
        schema = Some(
            split_fields(rest.trim_start_matches(delimiter), delimiter)
                .into_iter()
                .map(str::to_ascii_lowercase)
                .collect(),
        );
        (header_line, header) = lines.next().ok_or(IngestError::Malformed {
            line: header_line + 1,
            reason: "missing header row".into(),
        })?;
    }
    let names: Vec<&str> = split_fields(header, delimiter);
    if names.len() < 2 {
        return Err(IngestError::Malformed {
            line: header_line,
            reason: "header needs a label column and at least one attribute".into(),
        });
    }
    let target_col = names[1..]
        .iter()
        .position(|&c| c == target)
        .map(|p| p + 1)
        .ok_or_else(|| IngestError::MissingTarget(target.to_string()))?;

    let kind_of = |col: usize| -> Result<FeatureKind, IngestError> {
        if let Some(k) = kinds.get(names[col]) {
            return Ok(*k);
        }
        match schema.as_ref().and_then(|s| s.get(col)).map(String::as_str) {
            None | Some("categorical") | Some("label") => Ok(FeatureKind::Categorical),
            Some("continuous") => Ok(FeatureKind::Continuous),
            Some(other) => Err(IngestError::Malformed {
                line: header_line - 1,
                reason: format!("unknown column kind `{other}`"),
            }),
        }
    };

    let feature_cols: Vec<usize> = (1..names.len()).filter(|&c| c != target_col).collect();
    let columns = feature_cols
        .iter()
        .map(|&c| {
            Ok(FeatureColumn {
                name: names[c].to_string(),
                kind: kind_of(c)?,
            })
        })
        .collect::<Result<Vec<_>, IngestError>>()?;

    let n = labels.len();
    let width = columns.len();
    let mut values = vec![vec![None; width]; n];
    let mut raw_target: Vec<Option<String>> = vec![None; n];

    for (line_no, line) in lines {
        if line.starts_with('#') {
            continue;
        }
        let fields = split_fields(line, delimiter);
        if fields.len() != names.len() {
            return Err(IngestError::Malformed {
                line: line_no,
                reason: format!("expected {} fields, found {}", names.len(), fields.len()),
            });
        }
        let vertex = labels
            .get(fields[0])
            .ok_or_else(|| IngestError::UnknownVertex(fields[0].to_string()))?;
        for (slot, (&col, spec)) in feature_cols.iter().zip(&columns).enumerate() {
            let cell = fields[col];
            if cell.is_empty() {
                continue;
            }
            values[vertex][slot] = Some(match spec.kind {
                FeatureKind::Categorical => FeatureValue::Categorical(cell.to_string()),
                FeatureKind::Continuous => {
                    FeatureValue::Continuous(cell.parse().map_err(|_| IngestError::Malformed {
                        line: line_no,
                        reason: format!("`{cell}` in column `{}` is not a number", spec.name),
                    })?)
                }
            });
        }
        let t = fields[target_col];
        if !t.is_empty() {
            raw_target[vertex] = Some(t.to_string());
        }
    }

    let distinct: BTreeSet<&str> = raw_target.iter().flatten().map(String::as_str).collect();
    if distinct.len() != 2 {
        return Err(IngestError::NonBinaryTarget {
            name: target.to_string(),
            count: distinct.len(),
        });
    }
    let mut it = distinct.into_iter();
    let negative = it.next().unwrap().to_string();
    let positive = it.next().unwrap().to_string();
    let target_vals = raw_target
        .iter()
        .map(|t| t.as_ref().map(|s| *s == positive))
        .collect();

    Ok(VertexAttributes {
        columns,
        values,
        target_name: target.to_string(),
        classes: [negative, positive],
        target: target_vals,
    })
}

/// Ground-truth change times, 1-based indices into the initial sequence.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ChangePointLabels {
    times: Vec<usize>,
}

impl ChangePointLabels {
    /// Validates strict increase and the `[1, len]` range.
    pub fn new(times: Vec<usize>, len: usize) -> Result<Self, IngestError> {
        for (i, &t) in times.iter().enumerate() {
            if t < 1 || t > len || (i > 0 && times[i - 1] >= t) {
                return Err(IngestError::BadChangePoint {
                    line: i + 1,
                    time: t as i64,
                    len,
                });
            }
        }
        Ok(Self { times })
    }

    pub fn parse(text: &str, len: usize) -> Result<Self, IngestError> {
        let mut times = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let t: i64 = line.parse().map_err(|_| IngestError::Malformed {
                line: idx + 1,
                reason: format!("`{line}` is not an integer"),
            })?;
            let prev = times.last().copied().unwrap_or(0) as i64;
            if t < 1 || t as usize > len || t <= prev {
                return Err(IngestError::BadChangePoint {
                    line: idx + 1,
                    time: t,
                    len,
                });
            }
            times.push(t as usize);
        }
        Ok(Self { times })
    }

    pub fn times(&self) -> &[usize] {
        &self.times
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Labels falling inside 1-based `start..=end`, re-indexed so `start` maps to 1.
    pub fn restrict(&self, start: usize, end: usize) -> ChangePointLabels {
        ChangePointLabels {
            times: self
                .times
                .iter()
                .filter(|&&t| t >= start && t <= end)
                .map(|&t| t - start + 1)
                .collect(),
        }
    }

    /// One index per line, the same layout [`ChangePointLabels::parse`] reads.
    pub fn to_text(&self) -> String {
        self.times.iter().map(|t| format!("{t}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(u: usize, v: usize, t: u64) -> EdgeEvent {
        EdgeEvent { u, v, t }
    }

    #[test]
    fn parses_csv_and_assigns_dense_ids() {
        let s = parse_edge_stream("a,b,5\nb,c,7", &EdgeFormat::default()).unwrap();
        assert_eq!(s.events, vec![ev(0, 1, 5), ev(1, 2, 7)]);
        assert_eq!(s.vertex_count(), 3);
        assert_eq!(s.labels.get("a"), Some(0));
        assert_eq!(s.labels.get("c"), Some(2));
    }

    #[test]
    fn empty_input_gives_no_events() {
        let s = parse_edge_stream("", &EdgeFormat::default()).unwrap();
        assert!(s.events.is_empty());
        assert_eq!(s.vertex_count(), 0);
    }

    #[test]
    fn comments_and_whitespace_delimiter() {
        let fmt = EdgeFormat {
            delimiter: ' ',
            ..Default::default()
        };
        let s = parse_edge_stream("# header\nx   y 3\n\n y z 4 ", &fmt).unwrap();
        assert_eq!(s.events.len(), 2);
    }

    #[test]
    fn self_loop_is_rejected_with_line_and_count() {
        let err = parse_edge_stream("a,a,5", &EdgeFormat::default()).unwrap_err();
        assert!(matches!(
            err,
            IngestError::SelfLoop {
                first_line: 1,
                count: 1
            }
        ));
        let err = parse_edge_stream("a,b,1\nc,c,2\nd,d,3", &EdgeFormat::default()).unwrap_err();
        assert!(matches!(
            err,
            IngestError::SelfLoop {
                first_line: 2,
                count: 2
            }
        ));
    }

    #[test]
    fn malformed_and_negative_lines_report_line_numbers() {
        let err = parse_edge_stream("a,b,1\na,b\n", &EdgeFormat::default()).unwrap_err();
        assert!(matches!(err, IngestError::Malformed { line: 2, .. }));
        let err = parse_edge_stream("a,b,x", &EdgeFormat::default()).unwrap_err();
        assert!(matches!(err, IngestError::Malformed { line: 1, .. }));
        let err = parse_edge_stream("# c\na,b,-4", &EdgeFormat::default()).unwrap_err();
        assert!(matches!(
            err,
            IngestError::NegativeTimestamp { line: 2, value: -4 }
        ));
    }

    #[test]
    fn half_open_bins() {
        let events = [ev(0, 1, 0), ev(1, 0, 59), ev(1, 2, 60)];
        let seq = bin_initial(&events, 3, 60, None).unwrap();
        assert_eq!(seq.len(), 2);
        assert_eq!(seq.step(1).edges().collect::<Vec<_>>(), vec![(0, 1)]);
        assert_eq!(seq.step(2).edges().collect::<Vec<_>>(), vec![(1, 2)]);
    }

    #[test]
    fn single_event_and_exact_boundary() {
        let seq = bin_initial(&[ev(0, 1, 42)], 2, 10, None).unwrap();
        assert_eq!(seq.len(), 1);
        assert_eq!(seq.step(1).edge_count(), 1);

        let seq = bin_initial(&[ev(0, 1, 0), ev(0, 1, 600)], 2, 600, None).unwrap();
        assert_eq!(seq.len(), 2);
        assert_eq!(seq.step(1), seq.step(2));
    }

    #[test]
    fn explicit_origin_shifts_bins() {
        let seq = bin_initial(&[ev(0, 1, 30), ev(0, 1, 70)], 2, 60, Some(0)).unwrap();
        assert_eq!(seq.len(), 2);
        let err = bin_initial(&[ev(0, 1, 30)], 2, 60, Some(31)).unwrap_err();
        assert!(matches!(err, IngestError::OriginAfterFirstEvent { .. }));
    }

    #[test]
    fn binning_errors() {
        assert!(matches!(
            bin_initial(&[], 0, 1, None),
            Err(IngestError::Empty)
        ));
        assert!(matches!(
            bin_initial(&[ev(0, 1, 0)], 2, 0, None),
            Err(IngestError::ZeroResolution)
        ));
    }

    fn table(labels: &[&str]) -> LabelTable {
        let mut t = LabelTable::default();
        for l in labels {
            t.intern(l);
        }
        t
    }

    #[test]
    fn loads_binary_target_with_schema() {
        let text = "#schema,label,categorical,categorical,continuous\n\
                    id,manager,dept,age\n\
                    a,yes,legal,40\n\
                    b,no,trading,\n\
                    c,no,legal,31.5\n";
        let labels = table(&["a", "b", "c", "d"]);
        let attrs = load_attributes(text, "manager", &labels, ',', &HashMap::new()).unwrap();
        assert_eq!(attrs.classes(), &["no".to_string(), "yes".to_string()]);
        assert_eq!(attrs.target(0), Some(true));
        assert_eq!(attrs.target(1), Some(false));
        assert_eq!(attrs.target(3), None);
        assert_eq!(attrs.columns().len(), 2);
        assert_eq!(attrs.columns()[1].kind, FeatureKind::Continuous);
        assert_eq!(attrs.feature(2, 1), Some(&FeatureValue::Continuous(31.5)));
        assert_eq!(attrs.feature(1, 1), None);
        assert_eq!(attrs.feature(3, 0), None);
        assert_eq!(attrs.labelled(), vec![0, 1, 2]);
    }

    #[test]
    fn kind_overrides_take_precedence() {
        let text = "id,t,x\na,1,2\nb,0,3\n";
        let kinds = HashMap::from([("x".to_string(), FeatureKind::Continuous)]);
        let attrs = load_attributes(text, "t", &table(&["a", "b"]), ',', &kinds).unwrap();
        assert_eq!(attrs.columns()[0].kind, FeatureKind::Continuous);
    }

    #[test]
    fn non_binary_target_is_rejected() {
        let text = "id,t\na,x\nb,y\nc,z\n";
        let err =
            load_attributes(text, "t", &table(&["a", "b", "c"]), ',', &HashMap::new()).unwrap_err();
        assert!(matches!(err, IngestError::NonBinaryTarget { count: 3, .. }));
    }

    #[test]
    fn unknown_vertex_names_the_label() {
        let text = "id,t\na,x\nzz,y\n";
        let err = load_attributes(text, "t", &table(&["a"]), ',', &HashMap::new()).unwrap_err();
        match err {
            IngestError::UnknownVertex(l) => assert_eq!(l, "zz"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn change_points_parse_and_restrict() {
        let cp = ChangePointLabels::parse("3\n# note\n7\n10\n", 10).unwrap();
        assert_eq!(cp.times(), &[3, 7, 10]);
        assert_eq!(cp.restrict(4, 8).times(), &[4]);
        assert_eq!(ChangePointLabels::parse(&cp.to_text(), 10).unwrap(), cp);
        assert!(ChangePointLabels::parse("3\n3\n", 10).is_err());
        assert!(ChangePointLabels::parse("0\n", 10).is_err());
        assert!(ChangePointLabels::parse("11\n", 10).is_err());
    }

    #[test]
    fn swapped_target_flips_labels() {
        let mut a = VertexAttributes::new(2, vec![], "t", "n", "p");
        a.set_target(0, true);
        let s = a.with_swapped_target();
        assert_eq!(s.target(0), Some(false));
        assert_eq!(s.classes()[1], "n");
    }
}
