use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use winscale_core::harness::{
    hyperparam_sweep, select_offline, spearman_table, stability_diff, table1, SweepCell, TrainView,
};
use winscale_core::ingest::{ChangePointLabels, FeatureKind};
use winscale_core::selectors::{OfflineSelector, UnknownSelector};
use winscale_core::windowing::Span;
use winscale_core::{
    bin_initial, load_attributes, parse_edge_stream, read_archive, run_offline, run_online,
    score_curves, write_archive, Dataset, EdgeFormat, ExperimentReport, IngestError, ScoreCurves,
    Task, TaskParams,
};

use crate::config::{RunConfig, Selection, Validated};
use crate::{AnalyzeArgs, EvaluateArgs, IngestArgs, ReportArgs, SelectArgs, SweepArgs};

/// Validation problems exit with 1, runtime failures with 2.
pub enum CliError {
    Validation(Vec<String>),
    Runtime(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    pub fn messages(&self) -> Vec<String> {
        match self {
            CliError::Validation(m) => m.clone(),
            CliError::Runtime(m) => vec![m.clone()],
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(vec![msg.into()])
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

type Result<T> = std::result::Result<T, CliError>;

fn read_input(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn write_output(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| runtime(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn ingest_error(path: &Path, e: IngestError) -> CliError {
    match e {
        IngestError::Malformed { line, reason } => {
            invalid(format!("{}:{line}: {reason}", path.display()))
        }
        IngestError::NegativeTimestamp { line, value } => invalid(format!(
            "{}:{line}: negative timestamp {value}",
            path.display()
        )),
        IngestError::SelfLoop { first_line, count } => invalid(format!(
            "{}:{first_line}: self-loop ({count} in total)",
            path.display()
        )),
        IngestError::BadChangePoint { line, time, len } => invalid(format!(
            "{}:{line}: change point {time} is outside [1, {len}] or not increasing",
            path.display()
        )),
        other => invalid(format!("{}: {other}", path.display())),
    }
}

fn delimiter(s: &str) -> Result<char> {
    match s {
        "ws" | "whitespace" => Ok(' '),
        "tab" | "\\t" => Ok('\t'),
        _ => {
            let mut chars = s.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => Ok(c),
                _ => Err(invalid(format!(
                    "delimiter must be one character or `ws`, got `{s}`"
                ))),
            }
        }
    }
}

#[derive(Serialize)]
struct IngestSummary {
    n: usize,
    steps: usize,
    resolution: u64,
    origin: u64,
    total_edges: usize,
    edge_counts: Vec<usize>,
    attributes: bool,
    change_points: usize,
}

pub fn ingest(a: IngestArgs) -> Result<()> {
    let text = read_input(&a.edges)?;
    let format = EdgeFormat {
        delimiter: delimiter(&a.delimiter)?,
        src_col: a.src_col,
        dst_col: a.dst_col,
        time_col: a.time_col,
    };
    let stream = parse_edge_stream(&text, &format).map_err(|e| ingest_error(&a.edges, e))?;
    let seq = bin_initial(
        &stream.events,
        stream.vertex_count(),
        a.resolution,
        a.origin,
    )
    .map_err(|e| ingest_error(&a.edges, e))?;
    let t_min = stream.events.iter().map(|e| e.t).min().unwrap_or(0);

    let attributes = match &a.attributes {
        Some(path) => {
            let mut kinds = HashMap::new();
            for k in &a.kinds {
                let (name, kind) = k
                    .split_once('=')
                    .ok_or_else(|| invalid(format!("--kind expects name=kind, got `{k}`")))?;
                let kind = match kind {
                    "categorical" => FeatureKind::Categorical,
                    "continuous" => FeatureKind::Continuous,
                    _ => return Err(invalid(format!("unknown column kind `{kind}`"))),
                };
                kinds.insert(name.to_string(), kind);
            }
            let text = read_input(path)?;
            let target = a.target.as_deref().unwrap_or_default();
            Some(
                load_attributes(
                    &text,
                    target,
                    &stream.labels,
                    delimiter(&a.attr_delimiter)?,
                    &kinds,
                )
                .map_err(|e| ingest_error(path, e))?,
            )
        }
        None => None,
    };
    let change_points = match &a.change_points {
        Some(path) => Some(
            ChangePointLabels::parse(&read_input(path)?, seq.len())
                .map_err(|e| ingest_error(path, e))?,
        ),
        None => None,
    };
    let dataset = Dataset {
        seq,
        labels: stream.labels,
        origin: a.origin.unwrap_or(t_min),
        attributes,
        change_points,
    };
    let manifest = write_archive(&a.out, &dataset).map_err(runtime)?;
    let summary = IngestSummary {
        n: manifest.n,
        steps: manifest.steps,
        resolution: manifest.resolution,
        origin: manifest.origin,
        total_edges: manifest.edge_counts.iter().sum(),
        edge_counts: manifest.edge_counts,
        attributes: dataset.attributes.is_some(),
        change_points: dataset
            .change_points
            .as_ref()
            .map_or(0, |c| c.times().len()),
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&summary).expect("summary serializes")
    );
    Ok(())
}

fn load_config(path: &Path) -> Result<Validated> {
    RunConfig::load(path)
        .and_then(RunConfig::validate)
        .map_err(CliError::Validation)
}

/// Score curves with the provenance of the run that made them.
#[derive(Debug, Serialize, Deserialize)]
pub struct CurvesFile {
    pub config_hash: String,
    pub seed: u64,
    pub curves: ScoreCurves,
}

fn provenance_line(hash: &str, seed: u64) -> String {
    format!("# config_hash={hash} seed={seed}\n")
}

fn csv_sibling(path: &Path) -> PathBuf {
    path.with_extension("csv")
}

pub fn sweep(a: SweepArgs) -> Result<()> {
    let mut config = RunConfig::load(&a.config).map_err(CliError::Validation)?;
    if let Some(t) = &a.task {
        config.task = t.parse::<Task>().map_err(invalid)?;
        config.selectors.clear();
        config.sweep = None;
    }
    // Curves need no selector; keep validation from rejecting an empty list.
    if config.selectors.is_empty() {
        config.selectors.push("hand-picked".into());
    }
    let v = config.validate().map_err(CliError::Validation)?;
    let curves = score_curves(
        &v.dataset,
        &v.dataset_id,
        &v.plan,
        v.config.task,
        &v.config.params,
    )
    .map_err(runtime)?;
    let file = CurvesFile {
        config_hash: v.hash.clone(),
        seed: v.config.seed,
        curves,
    };
    write_output(
        &a.out,
        &(serde_json::to_string_pretty(&file).expect("serializes") + "\n"),
    )?;
    let csv = provenance_line(&v.hash, v.config.seed) + &file.curves.to_csv();
    write_output(&csv_sibling(&a.out), &csv)
}

fn parse_span(s: &str, len: usize) -> Result<Span> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| invalid(format!("expected start:end, got `{s}`")))?;
    let parse = |x: &str| {
        x.trim()
            .parse::<usize>()
            .map_err(|_| invalid(format!("`{x}` is not a step index")))
    };
    let span = Span {
        start: parse(a)?,
        end: parse(b)?,
    };
    if span.start < 1 || span.start > span.end || span.end > len {
        return Err(invalid(format!("span {s} is outside 1..={len}")));
    }
    Ok(span)
}

#[derive(Serialize)]
struct SelectOutput {
    selector: String,
    task: Task,
    test: Span,
    window: Option<usize>,
    cuts: Vec<usize>,
    lengths: Vec<usize>,
    seed: u64,
}

pub fn select(a: SelectArgs) -> Result<()> {
    let selector: OfflineSelector = a
        .selector
        .parse()
        .map_err(|e: UnknownSelector| invalid(e.to_string()))?;
    let task: Task = a.task.parse().map_err(invalid)?;
    let params: TaskParams = match &a.params {
        Some(p) => serde_json::from_str(&read_input(p)?)
            .map_err(|e| invalid(format!("{}: {e}", p.display())))?,
        None => TaskParams::default(),
    };
    let dataset =
        read_archive(&a.archive).map_err(|e| invalid(format!("{}: {e}", a.archive.display())))?;
    let len = dataset.seq.len();
    let test = parse_span(&a.test, len)?;
    let train = match &a.train {
        Some(t) => Some(parse_span(t, len)?),
        None if selector == OfflineSelector::Supervised => {
            return Err(invalid("the supervised selector needs --train"))
        }
        None => None,
    };
    let train_span = train.unwrap_or(test);
    let view = TrainView {
        seq: dataset.seq.slice(train_span.start, train_span.end),
        change_points: dataset
            .change_points
            .as_ref()
            .map(|c| c.restrict(train_span.start, train_span.end)),
        attributes: dataset.attributes.as_ref(),
    };
    if selector == OfflineSelector::Supervised {
        match task {
            Task::Attribute if dataset.attributes.is_none() => {
                return Err(invalid("task attribute needs an archive with attributes"))
            }
            Task::ChangePoint if dataset.change_points.is_none() => {
                return Err(invalid(
                    "task changepoint needs an archive with change points",
                ))
            }
            _ => {}
        }
    }
    let test_seq = dataset.seq.slice(test.start, test.end);
    let w = select_offline(selector, task, &view, &test_seq, &params, a.seed).map_err(runtime)?;
    let out = SelectOutput {
        selector: selector.name().into(),
        task,
        test,
        window: w.uniform_size(),
        cuts: w.cuts().to_vec(),
        lengths: w.lengths(),
        seed: a.seed,
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&out).expect("serializes")
    );
    Ok(())
}

#[derive(Serialize)]
struct SweepFile<'a> {
    config_hash: &'a str,
    seed: u64,
    strategy: String,
    cells: &'a [SweepCell],
}

pub fn evaluate(a: EvaluateArgs) -> Result<()> {
    let v = load_config(&a.config)?;
    let out_dir = a
        .out
        .clone()
        .or_else(|| v.config.output.clone())
        .ok_or_else(|| invalid("no output directory: pass --out or set `output` in the config"))?;
    let seed = v.config.seed;
    let params = &v.config.params;

    let mut reports: Vec<ExperimentReport> = Vec::new();
    match &v.selection {
        Selection::Offline(selectors) => {
            for &s in selectors {
                reports.push(
                    run_offline(
                        &v.dataset,
                        &v.dataset_id,
                        &v.plan,
                        s,
                        v.config.task,
                        params,
                        seed,
                    )
                    .map_err(runtime)?,
                );
            }
        }
        Selection::Online(strategies) => {
            for &s in strategies {
                reports.push(
                    run_online(
                        &v.dataset,
                        &v.dataset_id,
                        &v.plan,
                        s,
                        params,
                        seed,
                        v.config.online,
                    )
                    .map_err(runtime)?,
                );
            }
        }
    }

    let mut summary = provenance_line(&v.hash, seed);
    summary.push_str("dataset,task,selector,aggregation,aggregate\n");
    for r in &mut reports {
        r.config_hash = Some(v.hash.clone());
        let stem = format!("report-{}-{}", r.task, r.selector);
        write_output(&out_dir.join(format!("{stem}.json")), &(r.to_json() + "\n"))?;
        write_output(&out_dir.join(format!("{stem}.csv")), &r.to_csv())?;
        let _ = writeln!(
            summary,
            "{},{},{},{},{}",
            r.dataset,
            r.task,
            r.selector,
            serde_json::to_value(r.aggregation)
                .unwrap()
                .as_str()
                .unwrap(),
            r.aggregate.map_or(String::new(), |x| x.to_string())
        );
    }
    write_output(&out_dir.join("summary.csv"), &summary)?;

    if let (Some(sw), Some(strategy)) = (&v.config.sweep, v.sweep_strategy) {
        let cells = hyperparam_sweep(
            &v.dataset, &v.plan, strategy, &sw.m, &sw.b, sw.fixed, params, seed,
        )
        .map_err(runtime)?;
        let file = SweepFile {
            config_hash: &v.hash,
            seed,
            strategy: strategy.name().into(),
            cells: &cells,
        };
        write_output(
            &out_dir.join("sweep.json"),
            &(serde_json::to_string_pretty(&file).expect("serializes") + "\n"),
        )?;
        let mut csv = provenance_line(&v.hash, seed);
        csv.push_str("axis,m,b,aggregate\n");
        for c in &cells {
            let _ = writeln!(
                csv,
                "{:?},{},{},{}",
                c.axis,
                c.m,
                c.b,
                c.aggregate.map_or(String::new(), |x| x.to_string())
            );
        }
        write_output(&out_dir.join("sweep.csv"), &csv)?;
    }
    for r in &reports {
        eprintln!(
            "{} {} {}: {}",
            r.dataset,
            r.task,
            r.selector,
            r.aggregate.map_or("n/a".to_string(), |x| format!("{x:.4}"))
        );
    }
    Ok(())
}

pub fn analyze(a: AnalyzeArgs) -> Result<()> {
    let mut files = Vec::new();
    for path in &a.curves {
        let text = read_input(path)?;
        let f: CurvesFile =
            serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        files.push((path.clone(), f));
    }
    let (first_path, first) = &files[0];
    for (path, f) in &files[1..] {
        if f.curves.dataset != first.curves.dataset {
            return Err(invalid(format!(
                "{} is for dataset `{}` but {} is for `{}`",
                first_path.display(),
                first.curves.dataset,
                path.display(),
                f.curves.dataset
            )));
        }
        if f.curves.curves.len() != first.curves.curves.len() {
            return Err(invalid(format!(
                "{} has {} intervals but {} has {}",
                first_path.display(),
                first.curves.curves.len(),
                path.display(),
                f.curves.curves.len()
            )));
        }
    }
    let mut header = String::new();
    for (_, f) in &files {
        header.push_str(&provenance_line(&f.config_hash, f.seed));
    }
    let curves: Vec<ScoreCurves> = files.iter().map(|(_, f)| f.curves.clone()).collect();

    let matrix = table1(&curves).map_err(runtime)?;
    write_output(
        &a.out.join("table1.csv"),
        &(header.clone() + &matrix.to_csv()),
    )?;

    let mut argmax = header.clone() + "task,interval,argmax_w\n";
    for (t, picks) in matrix.tasks.iter().zip(&matrix.argmax) {
        for (i, w) in picks.iter().enumerate() {
            let _ = writeln!(argmax, "{t},{},{w}", i + 1);
        }
    }
    write_output(&a.out.join("argmax.csv"), &argmax)?;

    let rows = spearman_table(&curves).map_err(runtime)?;
    let mut sp = header.clone() + "task_a,task_b,points,rho,p\n";
    for r in &rows {
        let f = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
        let _ = writeln!(sp, "{},{},{},{},{}", r.a, r.b, r.points, f(r.rho), f(r.p));
    }
    write_output(&a.out.join("spearman.csv"), &sp)?;

    let mut stab = header.clone() + "task,mean_abs_diff\n";
    let mut stability = BTreeMap::new();
    for c in &curves {
        let v = stability_diff(c).ok();
        stability.insert(c.task.to_string(), v);
        let _ = writeln!(
            stab,
            "{},{}",
            c.task,
            v.map_or(String::new(), |x| x.to_string())
        );
    }
    write_output(&a.out.join("stability.csv"), &stab)?;

    let mut long = header.clone();
    for (k, c) in curves.iter().enumerate() {
        let csv = c.to_csv();
        // Keep one header row across the concatenated curves.
        let body = if k == 0 {
            csv.as_str()
        } else {
            csv.split_once('\n').map_or("", |x| x.1)
        };
        long.push_str(body);
    }
    write_output(&a.out.join("curves.csv"), &long)?;

    #[derive(Serialize)]
    struct Analysis<'a> {
        sources: Vec<(&'a str, u64)>,
        matrix: &'a winscale_core::harness::CrossTaskMatrix,
        diagonal_dominant: bool,
        spearman: &'a [winscale_core::harness::SpearmanRow],
        stability: &'a BTreeMap<String, Option<f64>>,
    }
    let analysis = Analysis {
        sources: files
            .iter()
            .map(|(_, f)| (f.config_hash.as_str(), f.seed))
            .collect(),
        matrix: &matrix,
        diagonal_dominant: matrix.diagonal_dominant(),
        spearman: &rows,
        stability: &stability,
    };
    write_output(
        &a.out.join("analysis.json"),
        &(serde_json::to_string_pretty(&analysis).expect("serializes") + "\n"),
    )
}

pub fn report(a: ReportArgs) -> Result<()> {
    let mut reference: HashMap<(String, String, String), String> = HashMap::new();
    if let Some(path) = &a.reference {
        let text = read_input(path)?;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || (i == 0 && line.starts_with("dataset")) {
                continue;
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 4 {
                return Err(invalid(format!(
                    "{}:{}: expected 4 fields",
                    path.display(),
                    i + 1
                )));
            }
            reference.insert((f[0].into(), f[1].into(), f[2].into()), f[3].into());
        }
    }
    let mut out = String::from("dataset,task,selector,seed,config_hash,aggregate,reference\n");
    for path in &a.reports {
        let r: ExperimentReport = serde_json::from_str(&read_input(path)?)
            .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        let key = (r.dataset.clone(), r.task.to_string(), r.selector.clone());
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.dataset,
            r.task,
            r.selector,
            r.seed,
            r.config_hash.unwrap_or_default(),
            r.aggregate.map_or(String::new(), |x| format!("{x:.4}")),
            reference.get(&key).cloned().unwrap_or_default()
        );
    }
    match &a.out {
        Some(p) => write_output(p, &out),
        None => {
            print!("{out}");
            Ok(())
        }
    }
}
