//! Task-supervised windowing of dynamic networks.
//!
//! A time-stamped edge stream is binned into a [`GraphSequence`], segmented by a
//! [`Windowing`] into union graphs, and handed to one of three task
//! algorithms (Katz link prediction, a time-varying relational classifier,
//! MDL change-point detection). Window sizes are chosen by the selectors in
//! [`selectors`] and compared with the protocols in [`harness`].

pub mod archive;
pub mod attr;
pub mod changepoint;
pub mod error;
pub mod graph;
pub mod harness;
pub mod ingest;
pub mod linkpred;
pub mod selectors;
pub mod synthetic;
pub mod windowing;

pub use archive::{read_archive, write_archive, Dataset, Manifest};
pub use error::{HarnessError, IngestError, StatsError, TaskError, WindowError};
pub use graph::{pair, GraphSequence, Pair, StaticGraph};
pub use harness::{
    run_offline, run_online, score_curves, split_intervals, ExperimentReport, IntervalPlan,
    OnlineOptions, ScoreCurves, Task, TaskParams,
};
pub use ingest::{
    bin_initial, load_attributes, parse_edge_stream, ChangePointLabels, EdgeEvent, EdgeFormat,
    EdgeStream, FeatureColumn, FeatureKind, FeatureValue, LabelTable, VertexAttributes,
};
pub use selectors::{OfflineSelector, OnlineSelector, OnlineStrategy, SelectorParams};
pub use windowing::{apply_uniform, apply_windowing, Span, WindowedSequence, Windowing};
