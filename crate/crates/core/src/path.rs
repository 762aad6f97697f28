//! Tree orientation and path machinery: BFS rooting at the slack bus,
//! downstream power aggregation, root-to-leaf path decomposition, and
//! per-edge training-sample extraction.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{RadialGrid, Scenario, VoltageState};
use crate::sequential::{make_target, Variant};

/// Number of per-edge input features.
pub const NUM_FEATURES: usize = 10;

/// Documented order of the per-edge feature vector. Every producer and
/// consumer of feature rows in this crate uses exactly this layout.
pub const FEATURE_ORDER: [&str; NUM_FEATURES] = [
    "v_parent_pu",
    "theta_parent_deg",
    "r_pu",
    "x_pu",
    "p_inj_pu",
    "q_inj_pu",
    "p_agg_pu",
    "q_agg_pu",
    "v_ldf_pu",
    "theta_ldf_deg",
];

/// Result of rooting the tree at the slack bus.
#[derive(Debug, Clone, PartialEq)]
pub struct Orientation {
    /// Parent bus id; `None` exactly at the slack.
    pub parent: Vec<Option<usize>>,
    /// Hop count from the slack (slack = 0).
    pub depth: Vec<usize>,
    /// Bus ids in BFS visiting order; every parent precedes its children.
    pub bfs_order: Vec<usize>,
    /// Child bus ids per bus, ascending.
    pub children: Vec<Vec<usize>>,
    /// Resistance of the branch toward the parent (0.0 at the slack).
    pub edge_r: Vec<f64>,
    /// Reactance of the branch toward the parent (0.0 at the slack).
    pub edge_x: Vec<f64>,
}

impl Orientation {
    pub fn n_buses(&self) -> usize {
        self.parent.len()
    }

    pub fn max_depth(&self) -> usize {
        self.depth.iter().copied().max().unwrap_or(0)
    }

    /// Buses with no children, ascending.
    pub fn leaves(&self) -> Vec<usize> {
        (0..self.n_buses())
            .filter(|&i| self.children[i].is_empty())
            .collect()
    }
}

/// Downstream power totals per bus: the net consumption of the subtree
/// rooted at each bus, computed losslessly from scenario injections.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregates {
    pub p_agg: Vec<f64>,
    pub q_agg: Vec<f64>,
}

/// One supervised training row tied to a single oriented branch.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSample {
    pub child_id: usize,
    pub parent_id: usize,
    /// Inputs in [`FEATURE_ORDER`] layout.
    pub features: [f64; NUM_FEATURES],
    /// (magnitude target, angle target), semantics set by the variant.
    pub target: [f64; 2],
}

/// Roots the tree at the slack bus via BFS. Among same-depth neighbors,
/// children are visited in ascending bus-id order, making the traversal —
/// and everything derived from it — deterministic.
pub fn orient(grid: &RadialGrid) -> Result<Orientation> {
    crate::grid::validate_grid(grid)?;
    let n = grid.n_buses();
    let adj = grid.adjacency();

    let mut parent = vec![None; n];
    let mut depth = vec![0usize; n];
    let mut children = vec![Vec::new(); n];
    let mut edge_r = vec![0.0; n];
    let mut edge_x = vec![0.0; n];
    let mut bfs_order = Vec::with_capacity(n);
    let mut visited = vec![false; n];

    let mut queue = std::collections::VecDeque::new();
    visited[grid.slack_id] = true;
    queue.push_back(grid.slack_id);
    while let Some(u) = queue.pop_front() {
        bfs_order.push(u);
        for &(v, bi) in &adj[u] {
            if !visited[v] {
                visited[v] = true;
                parent[v] = Some(u);
                depth[v] = depth[u] + 1;
                children[u].push(v);
                edge_r[v] = grid.branches[bi].r;
                edge_x[v] = grid.branches[bi].x;
                queue.push_back(v);
            }
        }
    }

    Ok(Orientation {
        parent,
        depth,
        bfs_order,
        children,
        edge_r,
        edge_x,
    })
}

/// Accumulates downstream net consumption in one reverse-BFS pass:
/// `p_agg[j] = -p_inj[j] + sum over children k of p_agg[k]` (reactive
/// analog with q). Loads being negative injections, a pure-load subtree
/// yields positive aggregates. No loss terms enter here.
pub fn aggregate_downstream(ori: &Orientation, scenario: &Scenario) -> Aggregates {
    let n = ori.n_buses();
    assert_eq!(scenario.p_inj.len(), n, "scenario does not match orientation");
    assert_eq!(scenario.q_inj.len(), n, "scenario does not match orientation");

    let mut p_agg = vec![0.0; n];
    let mut q_agg = vec![0.0; n];
    for &j in ori.bfs_order.iter().rev() {
        let mut p = -scenario.p_inj[j];
        let mut q = -scenario.q_inj[j];
        for &k in &ori.children[j] {
            p += p_agg[k];
            q += q_agg[k];
        }
        p_agg[j] = p;
        q_agg[j] = q;
    }
    Aggregates { p_agg, q_agg }
}

/// Splits the oriented tree into its root-to-leaf bus sequences, one per
/// leaf, each starting at the slack, sorted by leaf id.
pub fn decompose_paths(ori: &Orientation) -> Vec<Vec<usize>> {
    let mut paths = Vec::new();
    for leaf in ori.leaves() {
        let mut path = vec![leaf];
        let mut cur = leaf;
        while let Some(p) = ori.parent[cur] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        paths.push(path);
    }
    paths
}

/// Builds one feature row in [`FEATURE_ORDER`] layout.
#[allow(clippy::too_many_arguments)]
pub(crate) fn feature_row(
    parent_vm: f64,
    parent_va: f64,
    r: f64,
    x: f64,
    p_inj: f64,
    q_inj: f64,
    p_agg: f64,
    q_agg: f64,
    ldf_vm: f64,
    ldf_va: f64,
) -> [f64; NUM_FEATURES] {
    [
        parent_vm, parent_va, r, x, p_inj, q_inj, p_agg, q_agg, ldf_vm, ldf_va,
    ]
}

/// Extracts one training row per oriented branch (exactly N-1 rows).
///
/// Parent-state features come from the ground truth, and `ldf_baseline`
/// must hold linearized voltages stepped from those same ground-truth
/// parents, so the rows match what the model sees when each upstream
/// prediction is perfect (teacher forcing). Rows are emitted in BFS order.
pub fn extract_edge_samples(
    ori: &Orientation,
    scenario: &Scenario,
    truth: &VoltageState,
    variant: Variant,
    aggregates: &Aggregates,
    ldf_baseline: &VoltageState,
) -> Result<Vec<EdgeSample>> {
    let n = ori.n_buses();
    if truth.vm.len() != n || truth.va.len() != n {
        return Err(Error::MissingTruth {
            expected: n,
            got: truth.vm.len().min(truth.va.len()),
        });
    }
    if ldf_baseline.vm.len() != n || ldf_baseline.va.len() != n {
        return Err(Error::MissingTruth {
            expected: n,
            got: ldf_baseline.vm.len().min(ldf_baseline.va.len()),
        });
    }

    let mut samples = Vec::with_capacity(n - 1);
    for &j in &ori.bfs_order {
        let Some(i) = ori.parent[j] else { continue };
        let features = feature_row(
            truth.vm[i],
            truth.va[i],
            ori.edge_r[j],
            ori.edge_x[j],
            scenario.p_inj[j],
            scenario.q_inj[j],
            aggregates.p_agg[j],
            aggregates.q_agg[j],
            ldf_baseline.vm[j],
            ldf_baseline.va[j],
        );
        let target = make_target(
            variant,
            (truth.vm[j], truth.va[j]),
            (truth.vm[i], truth.va[i]),
            (ldf_baseline.vm[j], ldf_baseline.va[j]),
        );
        samples.push(EdgeSample {
            child_id: j,
            parent_id: i,
            features,
            target,
        });
    }
    Ok(samples)
}

/// Provenance carried alongside a serialized batch of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchMeta {
    pub grid_hash: String,
    pub variant: Variant,
}

/// Columnar container for edge rows, serializable as
/// `{"features": [[f0..f9], ...], "targets": [[t0, t1], ...], "meta": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub features: Vec<[f64; NUM_FEATURES]>,
    pub targets: Vec<[f64; 2]>,
    pub meta: BatchMeta,
}

impl SampleBatch {
    pub fn new(grid_hash: String, variant: Variant) -> Self {
        SampleBatch {
            features: Vec::new(),
            targets: Vec::new(),
            meta: BatchMeta { grid_hash, variant },
        }
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn extend_from_samples(&mut self, samples: &[EdgeSample]) {
        for s in samples {
            self.features.push(s.features);
            self.targets.push(s.target);
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut file = BufWriter::new(File::create(path)?);
        let doc = serde_json::to_string(self).expect("batch serialization cannot fail");
        file.write_all(doc.as_bytes())?;
        file.write_all(b"\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let batch: SampleBatch = serde_json::from_str(&text)
            .map_err(|e| Error::SchemaError(format!("sample batch: {e}")))?;
        if batch.features.len() != batch.targets.len() {
            return Err(Error::SchemaError(format!(
                "batch has {} feature rows but {} target rows",
                batch.features.len(),
                batch.targets.len()
            )));
        }
        Ok(batch)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Branch, Bus, BusKind};
    use rand::Rng;
    use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};

    fn bus(id: usize, kind: BusKind) -> Bus {
        Bus {
            id,
            kind,
            name: None,
        }
    }

    fn grid_from_edges(n: usize, slack: usize, edges: &[(usize, usize)]) -> RadialGrid {
        RadialGrid {
            slack_id: slack,
            buses: (0..n)
                .map(|i| {
                    bus(
                        i,
                        if i == slack {
                            BusKind::Slack
                        } else {
                            BusKind::Pq
                        },
                    )
                })
                .collect(),
            branches: edges
                .iter()
                .map(|&(a, b)| Branch {
                    from_bus: a,
                    to_bus: b,
                    r: 0.01,
                    x: 0.01,
                })
                .collect(),
        }
    }

    /// Uniform random labeled tree: bus i > 0 attaches to a random earlier bus.
    fn random_tree(n: usize, seed: u64) -> RadialGrid {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for i in 1..n {
            let p = rng.gen_range(0..i);
            edges.push((p, i));
        }
        grid_from_edges(n, 0, &edges)
    }

    #[test]
    fn two_bus_chain_orientation() {
        let grid = grid_from_edges(2, 0, &[(0, 1)]);
        let ori = orient(&grid).unwrap();
        assert_eq!(ori.parent, vec![None, Some(0)]);
        assert_eq!(ori.depth, vec![0, 1]);
        assert_eq!(ori.bfs_order, vec![0, 1]);
        assert_eq!(ori.children[0], vec![1]);
    }

    #[test]
    fn star_orientation_visits_ascending() {
        let grid = grid_from_edges(5, 0, &[(0, 4), (0, 2), (0, 1), (0, 3)]);
        let ori = orient(&grid).unwrap();
        assert_eq!(ori.bfs_order, vec![0, 1, 2, 3, 4]);
        assert_eq!(ori.depth, vec![0, 1, 1, 1, 1]);
        assert_eq!(ori.children[0], vec![1, 2, 3, 4]);
        for i in 1..5 {
            assert_eq!(ori.parent[i], Some(0));
        }
    }

    /// Independent re-rooting oracle: recursive DFS from the slack over an
    /// adjacency map, recording parent assignments.
    fn dfs_parents(grid: &RadialGrid) -> Vec<Option<usize>> {
        let n = grid.n_buses();
        let mut adj = vec![Vec::new(); n];
        for br in &grid.branches {
            adj[br.from_bus].push(br.to_bus);
            adj[br.to_bus].push(br.from_bus);
        }
        let mut parent = vec![None; n];
        let mut seen = vec![false; n];
        fn walk(
            u: usize,
            adj: &[Vec<usize>],
            parent: &mut [Option<usize>],
            seen: &mut [bool],
        ) {
            seen[u] = true;
            for &v in &adj[u] {
                if !seen[v] {
                    parent[v] = Some(u);
                    walk(v, adj, parent, seen);
                }
            }
        }
        walk(grid.slack_id, &adj, &mut parent, &mut seen);
        parent
    }

    #[test]
    fn orientation_matches_dfs_rerooting_oracle() {
        for seed in 0..5 {
            let grid = random_tree(30, seed);
            let ori = orient(&grid).unwrap();
            assert_eq!(ori.parent, dfs_parents(&grid), "seed {seed}");
            // Depth consistency and topological order of bfs_order.
            let mut pos = vec![0; 30];
            for (k, &b) in ori.bfs_order.iter().enumerate() {
                pos[b] = k;
            }
            for j in 0..30 {
                if let Some(p) = ori.parent[j] {
                    assert_eq!(ori.depth[j], ori.depth[p] + 1);
                    assert!(pos[p] < pos[j], "parent must precede child");
                }
            }
        }
    }

    #[test]
    fn leaf_aggregate_is_negated_injection() {
        let grid = grid_from_edges(2, 0, &[(0, 1)]);
        let ori = orient(&grid).unwrap();
        let scenario = Scenario {
            p_inj: vec![0.0, -0.02],
            q_inj: vec![0.0, -0.007],
            slack_vm: 1.0,
            slack_va: 0.0,
        };
        let agg = aggregate_downstream(&ori, &scenario);
        assert_eq!(agg.p_agg[1], 0.02);
        assert_eq!(agg.q_agg[1], 0.007);
    }

    #[test]
    fn chain_aggregates_accumulate_toward_root() {
        let grid = grid_from_edges(3, 0, &[(0, 1), (1, 2)]);
        let ori = orient(&grid).unwrap();
        let scenario = Scenario {
            p_inj: vec![0.0, -0.01, -0.03],
            q_inj: vec![0.0, 0.0, 0.0],
            slack_vm: 1.0,
            slack_va: 0.0,
        };
        let agg = aggregate_downstream(&ori, &scenario);
        assert!((agg.p_agg[2] - 0.03).abs() < 1e-15);
        assert!((agg.p_agg[1] - 0.04).abs() < 1e-15);
    }

    /// Brute-force subtree enumeration, independent of the BFS pass.
    fn subtree_sum(ori: &Orientation, scenario: &Scenario, root: usize) -> (f64, f64) {
        let mut stack = vec![root];
        let (mut p, mut q) = (0.0, 0.0);
        while let Some(u) = stack.pop() {
            p -= scenario.p_inj[u];
            q -= scenario.q_inj[u];
            stack.extend_from_slice(&ori.children[u]);
        }
        (p, q)
    }

    #[test]
    fn aggregates_equal_brute_force_subtree_sums() {
        for seed in 0..4 {
            let grid = random_tree(40, 100 + seed);
            let ori = orient(&grid).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(7 + seed);
            let scenario = Scenario {
                p_inj: (0..40).map(|_| rng.gen_range(-0.05..0.02)).collect(),
                q_inj: (0..40).map(|_| rng.gen_range(-0.02..0.01)).collect(),
                slack_vm: 1.0,
                slack_va: 0.0,
            };
            let agg = aggregate_downstream(&ori, &scenario);
            for b in 0..40 {
                let (p, q) = subtree_sum(&ori, &scenario, b);
                assert!((agg.p_agg[b] - p).abs() < 1e-12, "bus {b}");
                assert!((agg.q_agg[b] - q).abs() < 1e-12, "bus {b}");
            }
        }
    }

    #[test]
    fn aggregation_is_linear_in_the_scenario() {
        let grid = random_tree(25, 9);
        let ori = orient(&grid).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let scenario = Scenario {
            p_inj: (0..25).map(|_| rng.gen_range(-0.05..0.02)).collect(),
            q_inj: (0..25).map(|_| rng.gen_range(-0.02..0.01)).collect(),
            slack_vm: 1.0,
            slack_va: 0.0,
        };
        let scaled = Scenario {
            p_inj: scenario.p_inj.iter().map(|v| 2.5 * v).collect(),
            q_inj: scenario.q_inj.iter().map(|v| 2.5 * v).collect(),
            ..scenario.clone()
        };
        let a = aggregate_downstream(&ori, &scenario);
        let b = aggregate_downstream(&ori, &scaled);
        for i in 0..25 {
            assert!((b.p_agg[i] - 2.5 * a.p_agg[i]).abs() < 1e-12);
            assert!((b.q_agg[i] - 2.5 * a.q_agg[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn paths_of_simple_shapes() {
        let chain = grid_from_edges(2, 0, &[(0, 1)]);
        let ori = orient(&chain).unwrap();
        assert_eq!(decompose_paths(&ori), vec![vec![0, 1]]);

        let star = grid_from_edges(5, 0, &[(0, 1), (0, 2), (0, 3), (0, 4)]);
        let ori = orient(&star).unwrap();
        let paths = decompose_paths(&ori);
        assert_eq!(paths.len(), 4);
        for (k, path) in paths.iter().enumerate() {
            assert_eq!(path, &vec![0, k + 1]);
        }
    }

    #[test]
    fn paths_cover_every_oriented_edge_exactly_once() {
        let grid = random_tree(116, 21);
        let ori = orient(&grid).unwrap();
        let paths = decompose_paths(&ori);
        let mut edge_count = std::collections::BTreeMap::new();
        for path in &paths {
            assert_eq!(path[0], 0, "paths start at the slack");
            for w in path.windows(2) {
                assert_eq!(ori.parent[w[1]], Some(w[0]));
                *edge_count.entry((w[0], w[1])).or_insert(0usize) += 1;
            }
        }
        // Union of path edges equals the oriented branch set; shared
        // prefixes mean an edge may appear in many paths, but the set of
        // distinct edges must have exactly N-1 members.
        assert_eq!(edge_count.len(), 115);
        for j in 1..116 {
            let p = ori.parent[j].unwrap();
            assert!(edge_count.contains_key(&(p, j)), "edge {p}->{j} uncovered");
        }
    }

    #[test]
    fn extraction_yields_one_row_per_edge_with_documented_layout() {
        let grid = grid_from_edges(3, 0, &[(0, 1), (1, 2)]);
        let ori = orient(&grid).unwrap();
        let scenario = Scenario {
            p_inj: vec![0.0, -0.01, -0.03],
            q_inj: vec![0.0, -0.004, -0.012],
            slack_vm: 1.0,
            slack_va: 0.0,
        };
        let truth = VoltageState {
            vm: vec![1.0, 0.99, 0.985],
            va: vec![0.0, -0.1, -0.17],
        };
        let ldf = VoltageState {
            vm: vec![1.0, 0.991, 0.986],
            va: vec![0.0, -0.09, -0.16],
        };
        let agg = aggregate_downstream(&ori, &scenario);
        let rows =
            extract_edge_samples(&ori, &scenario, &truth, Variant::Absolute, &agg, &ldf).unwrap();
        assert_eq!(rows.len(), 2);

        let row = &rows[1]; // bus 2, parent 1
        assert_eq!((row.child_id, row.parent_id), (2, 1));
        assert_eq!(
            row.features,
            [
                0.99,  // parent vm from truth
                -0.1,  // parent va from truth
                0.01,  // r
                0.01,  // x
                -0.03, // own injection p
                -0.012,
                0.03, // downstream aggregate p (leaf: negated injection)
                0.012,
                0.986, // linearized baseline at the child
                -0.16,
            ]
        );
        assert_eq!(row.target, [0.985, -0.17]);
    }

    #[test]
    fn extraction_counts_scale_with_scenarios() {
        let grid = random_tree(116, 3);
        let ori = orient(&grid).unwrap();
        let scenario = Scenario::zero(116, 1.0, 0.0);
        let truth = VoltageState::flat(116, 1.0, 0.0);
        let agg = aggregate_downstream(&ori, &scenario);
        let rows = extract_edge_samples(
            &ori,
            &scenario,
            &truth,
            Variant::ParentResidual,
            &agg,
            &truth,
        )
        .unwrap();
        assert_eq!(rows.len(), 115);
    }

    #[test]
    fn extraction_rejects_short_truth() {
        let grid = grid_from_edges(3, 0, &[(0, 1), (1, 2)]);
        let ori = orient(&grid).unwrap();
        let scenario = Scenario::zero(3, 1.0, 0.0);
        let short = VoltageState::flat(2, 1.0, 0.0);
        let full = VoltageState::flat(3, 1.0, 0.0);
        let agg = aggregate_downstream(&ori, &scenario);
        let err = extract_edge_samples(
            &ori,
            &scenario,
            &short,
            Variant::Absolute,
            &agg,
            &full,
        );
        assert!(matches!(
            err,
            Err(Error::MissingTruth {
                expected: 3,
                got: 2
            })
        ));
    }

    #[test]
    fn sample_batch_round_trip() {
        let mut batch = SampleBatch::new("abc123".into(), Variant::PhysicsResidual);
        batch.features.push([0.5; NUM_FEATURES]);
        batch.targets.push([0.1, -0.2]);
        let path = std::env::temp_dir().join(format!(
            "radflow-path-batch-{}.json",
            std::process::id()
        ));
        batch.save(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"grid_hash\""));
        assert!(text.contains("\"ldf\""), "variant uses its wire name");
        let back = SampleBatch::load(&path).unwrap();
        assert_eq!(batch, back);
        std::fs::remove_file(&path).ok();
    }
}
