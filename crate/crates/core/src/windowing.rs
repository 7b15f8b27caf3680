//! Non-overlapping segmentations of a graph sequence and their union graphs.

use serde::{Deserialize, Serialize};

use crate::error::WindowError;
use crate::graph::{GraphSequence, StaticGraph};

/// Inclusive 1-based step range covered by one window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Segmentation of steps `1..=len` by cut indices `k_1 < ... < k_{m-1}`.
///
/// Window `i` ends at cut `k_i`; the last window ends at `len`. Any sorted
/// cut list inside `[1, len-1]` is a valid cover, so coverage is structural.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Windowing {
    len: usize,
    cuts: Vec<usize>,
}

impl Windowing {
    pub fn new(len: usize, cuts: Vec<usize>) -> Result<Self, WindowError> {
        if len == 0 {
            return Err(WindowError::Empty);
        }
        let mut prev = 0;
        for &c in &cuts {
            if c <= prev || c >= len {
                return Err(WindowError::BadCut { cut: c, len });
            }
            prev = c;
        }
        Ok(Self { len, cuts })
    }

    /// Windowing from consecutive segment lengths, all positive.
    pub fn from_lengths(lengths: &[usize]) -> Result<Self, WindowError> {
        let len: usize = lengths.iter().sum();
        if lengths.contains(&0) {
            return Err(WindowError::BadCut { cut: 0, len });
        }
        let mut cuts = Vec::with_capacity(lengths.len().saturating_sub(1));
        let mut acc = 0;
        for l in &lengths[..lengths.len().saturating_sub(1)] {
            acc += l;
            cuts.push(acc);
        }
        Self::new(len, cuts)
    }

    /// Windows of size `w`, the last one possibly shorter.
    pub fn uniform(len: usize, w: usize) -> Result<Self, WindowError> {
        if w < 1 || w > len {
            return Err(WindowError::BadWindowSize { w, len });
        }
        Ok(Self {
            len,
            cuts: (1..len.div_ceil(w)).map(|i| i * w).collect(),
        })
    }

    /// Every step in its own window.
    pub fn identity(len: usize) -> Result<Self, WindowError> {
        Self::uniform(len, 1)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn cuts(&self) -> &[usize] {
        &self.cuts
    }

    pub fn window_count(&self) -> usize {
        self.cuts.len() + 1
    }

    pub fn spans(&self) -> Vec<Span> {
        let mut out = Vec::with_capacity(self.window_count());
        let mut start = 1;
        for &c in self.cuts.iter().chain(std::iter::once(&self.len)) {
            out.push(Span { start, end: c });
            start = c + 1;
        }
        out
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.spans().iter().map(Span::len).collect()
    }

    /// The common window size if every window but the last has it.
    pub fn uniform_size(&self) -> Option<usize> {
        let lengths = self.lengths();
        let w = lengths[0];
        let (last, body) = lengths.split_last().unwrap();
        (body.iter().all(|&l| l == w) && *last <= w).then_some(w)
    }

    /// First `prefix` steps of this windowing; the window containing step
    /// `prefix` is truncated there.
    pub fn truncate(&self, prefix: usize) -> Result<Self, WindowError> {
        if prefix == 0 || prefix > self.len {
            return Err(WindowError::BadWindowSize {
                w: prefix,
                len: self.len,
            });
        }
        Ok(Self {
            len: prefix,
            cuts: self.cuts.iter().copied().filter(|&c| c < prefix).collect(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.cuts).expect("cut list serializes")
    }

    pub fn from_json(len: usize, text: &str) -> Result<Self, WindowError> {
        let cuts: Vec<usize> =
            serde_json::from_str(text).map_err(|_| WindowError::BadCut { cut: 0, len })?;
        Self::new(len, cuts)
    }

    /// Human-readable table, one window per line.
    pub fn span_table(&self) -> String {
        let mut out = String::from("window\tstart\tend\tlength\n");
        for (i, s) in self.spans().iter().enumerate() {
            out.push_str(&format!("{}\t{}\t{}\t{}\n", i + 1, s.start, s.end, s.len()));
        }
        out
    }
}

/// `H_1..H_m` of a sequence under a windowing.
#[derive(Debug, Clone)]
pub struct WindowedSequence<'a> {
    source: &'a GraphSequence,
    windowing: Windowing,
    graphs: Vec<StaticGraph>,
    spans: Vec<Span>,
}

impl<'a> WindowedSequence<'a> {
    pub fn source(&self) -> &'a GraphSequence {
        self.source
    }

    pub fn windowing(&self) -> &Windowing {
        &self.windowing
    }

    pub fn graphs(&self) -> &[StaticGraph] {
        &self.graphs
    }

    pub fn spans(&self) -> &[Span] {
        &self.spans
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn n(&self) -> usize {
        self.source.n()
    }

    pub fn last(&self) -> &StaticGraph {
        self.graphs.last().expect("windowed sequences are nonempty")
    }
}

/// Unions the graphs of each window.
pub fn apply_windowing<'a>(
    seq: &'a GraphSequence,
    win: &Windowing,
) -> Result<WindowedSequence<'a>, WindowError> {
    if win.len() != seq.len() {
        return Err(WindowError::LengthMismatch {
            windowing: win.len(),
            sequence: seq.len(),
        });
    }
    let spans = win.spans();
    let graphs = spans
        .iter()
        .map(|s| StaticGraph::union_of(seq.n(), &seq.graphs()[s.start - 1..s.end]))
        .collect();
    Ok(WindowedSequence {
        source: seq,
        windowing: win.clone(),
        graphs,
        spans,
    })
}

/// Convenience for the common uniform case.
pub fn apply_uniform(seq: &GraphSequence, w: usize) -> Result<WindowedSequence<'_>, WindowError> {
    apply_windowing(seq, &Windowing::uniform(seq.len(), w)?)
}

/// Union of the final window of the uniform size-`w` windowing of `graphs`.
///
/// Equivalent to `apply_uniform(..).last()` without materializing earlier windows.
pub fn last_uniform_window(n: usize, graphs: &[StaticGraph], w: usize) -> StaticGraph {
    assert!(w >= 1 && !graphs.is_empty());
    let len = graphs.len();
    let start = (len.div_ceil(w) - 1) * w;
    StaticGraph::union_of(n, &graphs[start..])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spans(w: &Windowing) -> Vec<(usize, usize)> {
        w.spans().iter().map(|s| (s.start, s.end)).collect()
    }

    #[test]
    fn uniform_examples() {
        assert_eq!(
            spans(&Windowing::uniform(4, 2).unwrap()),
            vec![(1, 2), (3, 4)]
        );
        assert_eq!(
            spans(&Windowing::uniform(4, 3).unwrap()),
            vec![(1, 3), (4, 4)]
        );
        assert_eq!(Windowing::uniform(5, 1).unwrap().window_count(), 5);
        assert!(Windowing::uniform(5, 0).is_err());
        assert!(Windowing::uniform(5, 6).is_err());
    }

    #[test]
    fn cut_validation() {
        assert!(Windowing::new(5, vec![2, 2]).is_err());
        assert!(Windowing::new(5, vec![5]).is_err());
        assert!(Windowing::new(5, vec![0]).is_err());
        assert!(Windowing::new(0, vec![]).is_err());
        let w = Windowing::new(5, vec![1, 4]).unwrap();
        assert_eq!(w.lengths(), vec![1, 3, 1]);
        assert_eq!(Windowing::from_lengths(&[1, 3, 1]).unwrap(), w);
    }

    #[test]
    fn union_and_identity() {
        let g1 = StaticGraph::from_edges(3, [(0, 1)]);
        let g2 = StaticGraph::from_edges(3, [(1, 2)]);
        let seq = GraphSequence::new(3, vec![g1.clone(), g2.clone()], 1);
        let ws = apply_uniform(&seq, 2).unwrap();
        assert_eq!(ws.len(), 1);
        assert_eq!(
            ws.graphs()[0].edges().collect::<Vec<_>>(),
            vec![(0, 1), (1, 2)]
        );
        let id = apply_uniform(&seq, 1).unwrap();
        assert_eq!(id.graphs(), &[g1, g2]);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let seq = GraphSequence::new(2, vec![StaticGraph::empty(2); 3], 1);
        let w = Windowing::uniform(4, 2).unwrap();
        assert!(matches!(
            apply_windowing(&seq, &w),
            Err(WindowError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn json_round_trip_and_table() {
        let w = Windowing::new(10, vec![3, 7]).unwrap();
        assert_eq!(w.to_json(), "[3,7]");
        assert_eq!(Windowing::from_json(10, "[3,7]").unwrap(), w);
        assert!(Windowing::from_json(5, "[3,7]").is_err());
        assert!(w.span_table().contains("2\t4\t7\t4"));
    }

    #[test]
    fn truncate_and_uniform_size() {
        let w = Windowing::uniform(10, 3).unwrap();
        assert_eq!(w.uniform_size(), Some(3));
        let t = w.truncate(5).unwrap();
        assert_eq!(spans(&t), vec![(1, 3), (4, 5)]);
        assert_eq!(Windowing::new(5, vec![1]).unwrap().uniform_size(), None);
    }

    #[test]
    fn last_window_shortcut_matches_full_windowing() {
        let graphs: Vec<_> = (0..7)
            .map(|i| StaticGraph::from_edges(8, [(i, i + 1)]))
            .collect();
        let seq = GraphSequence::new(8, graphs.clone(), 1);
        for w in 1..=7 {
            let full = apply_uniform(&seq, w).unwrap();
            assert_eq!(&last_uniform_window(8, &graphs, w), full.last());
        }
    }
}
