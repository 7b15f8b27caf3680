//! Seeded synthetic datasets with planted structure for all three tasks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::archive::Dataset;
use crate::graph::{GraphSequence, StaticGraph};
use crate::ingest::{
    ChangePointLabels, FeatureColumn, FeatureKind, FeatureValue, VertexAttributes,
};

/// Parameters of [`planted_dataset`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantedConfig {
    pub n: usize,
    pub steps: usize,
    /// Period of the recurring contacts.
    pub period: usize,
    /// Groups of four vertices whose six pairs recur every `period` steps,
    /// each pair at its own phase.
    pub groups: usize,
    /// Background contacts per step.
    pub edges_per_step: usize,
    /// Probability that a background contact stays inside a block.
    pub homophily: f64,
    /// Steps (1-based) at which the block structure switches.
    pub change_points: Vec<usize>,
    /// Probability that the `color` feature agrees with the target.
    pub feature_agreement: f64,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        Self {
            n: 40,
            steps: 60,
            period: 4,
            groups: 12,
            edges_per_step: 8,
            homophily: 0.85,
            change_points: vec![13, 29, 47],
            feature_agreement: 0.6,
            seed: 1,
        }
    }
}

/// A random half of the vertices forms the positive class. Even regimes place
/// contacts inside the two classes, odd regimes inside the four blocks formed
/// by class and vertex parity; the regime flips at every change point. On top
/// of that the pairs of a few fixed groups recur with the given period.
pub fn planted_dataset(cfg: &PlantedConfig) -> Dataset {
    assert!(cfg.n >= 4 && cfg.steps >= 1 && cfg.period >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.n;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut positive = vec![false; n];
    for &v in &order[..n / 2] {
        positive[v] = true;
    }

    let mut recurring = Vec::new();
    for _ in 0..cfg.groups {
        let group: Vec<usize> = order.choose_multiple(&mut rng, 4).copied().collect();
        for i in 0..4 {
            for j in i + 1..4 {
                recurring.push((group[i], group[j], rng.gen_range(0..cfg.period)));
            }
        }
    }

    let block = |regime: usize, v: usize| {
        let class = usize::from(positive[v]);
        if regime % 2 == 0 {
            class
        } else {
            2 * class + v % 2
        }
    };
    let mut members: [Vec<Vec<usize>>; 2] = [vec![Vec::new(); 2], vec![Vec::new(); 4]];
    for v in 0..n {
        for (regime, m) in members.iter_mut().enumerate() {
            m[block(regime, v)].push(v);
        }
    }

    let mut graphs = Vec::with_capacity(cfg.steps);
    for t in 1..=cfg.steps {
        let regime = cfg.change_points.iter().filter(|&&c| c <= t).count();
        let parts = &members[regime % 2];
        let mut g = StaticGraph::empty(n);
        for _ in 0..cfg.edges_per_step {
            let a = rng.gen_range(0..n);
            let own = block(regime % 2, a);
            let other = &parts[(own + rng.gen_range(1..parts.len())) % parts.len()];
            let pool = if rng.gen_bool(cfg.homophily) || other.is_empty() {
                &parts[own]
            } else {
                other
            };
            let b = *pool.choose(&mut rng).unwrap();
            if a != b {
                g.insert(a, b);
            }
        }
        for &(u, v, phase) in &recurring {
            if t % cfg.period == phase {
                g.insert(u, v);
            }
        }
        graphs.push(g);
    }
    let seq = GraphSequence::new(n, graphs, 1);

    let mut attrs = VertexAttributes::new(
        n,
        vec![FeatureColumn {
            name: "color".into(),
            kind: FeatureKind::Categorical,
        }],
        "group",
        "b",
        "a",
    );
    for v in 0..n {
        attrs.set_target(v, positive[v]);
        let agree = rng.gen_bool(cfg.feature_agreement);
        let color = if positive[v] == agree { "red" } else { "blue" };
        attrs.set_feature(v, 0, FeatureValue::Categorical(color.into()));
    }

    let mut data = Dataset::new(seq);
    data.change_points = Some(
        ChangePointLabels::new(
            cfg.change_points
                .iter()
                .copied()
                .filter(|&c| c <= cfg.steps)
                .collect(),
            cfg.steps,
        )
        .expect("change points are increasing and in range"),
    );
    data.attributes = Some(attrs);
    data
}
