//! Exact-greedy training of the boosted ensemble.
//!
//! Squared-error objective: per-row gradient `g = prediction - target` and
//! unit hessian, so hessian sums equal row counts. Split search presorts
//! each feature once, then scans candidates level by level; thresholds are
//! midpoints between adjacent distinct values, gains follow the standard
//! regularized reduction `½[G_L²/(H_L+λ) + G_R²/(H_R+λ) - G²/(H+λ)]`
//! summed over the tree's targeted outputs, and ties resolve to the
//! lowest feature index, then the lowest threshold. All randomness (row
//! and column subsampling) flows from one seeded generator, making
//! training a pure function of its inputs.

use rand::Rng;
use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};

use super::{DenseMatrix, GbtModel, GbtParams, MultiStrategy, Tree, TreeNode, GBT_FORMAT_VERSION};
use crate::error::{Error, Result};

const UNASSIGNED: u32 = u32::MAX;

struct BuildNode {
    /// Gradient sums over the targeted outputs.
    g: Vec<f64>,
    /// Hessian sum (= row count under unit hessians).
    h: f64,
    /// Chosen split: (feature, threshold, left child, right child).
    split: Option<(usize, f64, u32, u32)>,
}

struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
    gl: Vec<f64>,
    hl: f64,
}

struct ScanState {
    gl: Vec<f64>,
    hl: f64,
    prev: f64,
    seen: bool,
}

impl ScanState {
    fn new(width: usize) -> Self {
        ScanState {
            gl: vec![0.0; width],
            hl: 0.0,
            prev: 0.0,
            seen: false,
        }
    }

    fn reset(&mut self) {
        self.gl.iter_mut().for_each(|v| *v = 0.0);
        self.hl = 0.0;
        self.seen = false;
    }
}

fn split_gain(gl: &[f64], hl: f64, g: &[f64], h: f64, lambda: f64) -> f64 {
    let hr = h - hl;
    let mut gain = 0.0;
    for (k, &gk) in g.iter().enumerate() {
        let gr = gk - gl[k];
        gain += gl[k] * gl[k] / (hl + lambda) + gr * gr / (hr + lambda) - gk * gk / (h + lambda);
    }
    0.5 * gain
}

/// Draws `round(fraction * n)` distinct indices (at least 1), ascending.
fn sample_without_replacement(rng: &mut ChaCha8Rng, n: usize, fraction: f64) -> Vec<u32> {
    let take = ((fraction * n as f64).round() as usize).clamp(1, n);
    let mut pool: Vec<u32> = (0..n as u32).collect();
    for i in 0..take {
        let j = rng.gen_range(i..n);
        pool.swap(i, j);
    }
    let mut out = pool[..take].to_vec();
    out.sort_unstable();
    out
}

/// Grows one tree level-wise over the sampled rows and allowed columns.
/// `node_of_row` is caller-owned scratch, `UNASSIGNED` on entry and exit.
#[allow(clippy::too_many_arguments)]
fn build_tree(
    x: &DenseMatrix,
    sorted_idx: &[Vec<u32>],
    grad: &DenseMatrix,
    outputs: &[usize],
    rows_in: &[u32],
    cols: &[u32],
    params: &GbtParams,
    node_of_row: &mut [u32],
) -> Tree {
    let width = outputs.len();

    let mut root_g = vec![0.0; width];
    for &r in rows_in {
        for (pos, &k) in outputs.iter().enumerate() {
            root_g[pos] += grad.get(r as usize, k);
        }
        node_of_row[r as usize] = 0;
    }
    let mut nodes = vec![BuildNode {
        g: root_g,
        h: rows_in.len() as f64,
        split: None,
    }];
    let mut level: Vec<u32> = vec![0];

    for _ in 0..params.max_depth {
        if level.is_empty() {
            break;
        }
        let mut open = vec![false; nodes.len()];
        for &nid in &level {
            open[nid as usize] = true;
        }
        let mut best: Vec<Option<Candidate>> = (0..nodes.len()).map(|_| None).collect();
        let mut scans: Vec<ScanState> = (0..nodes.len()).map(|_| ScanState::new(width)).collect();

        for &f in cols {
            for &nid in &level {
                scans[nid as usize].reset();
            }
            for &row in &sorted_idx[f as usize] {
                let nid = node_of_row[row as usize];
                if nid == UNASSIGNED || !open[nid as usize] {
                    continue;
                }
                let v = x.get(row as usize, f as usize);
                let st = &mut scans[nid as usize];
                if st.seen && v > st.prev {
                    let node = &nodes[nid as usize];
                    if st.hl >= params.min_child_weight
                        && node.h - st.hl >= params.min_child_weight
                    {
                        let gain = split_gain(&st.gl, st.hl, &node.g, node.h, params.reg_lambda);
                        let better = gain > 0.0
                            && best[nid as usize]
                                .as_ref()
                                .map_or(true, |c| gain > c.gain);
                        if better {
                            // Midpoint of the adjacent distinct values; if
                            // rounding collapses it onto the lower value,
                            // fall back to the upper so `v < threshold`
                            // still partitions exactly as accumulated.
                            let mut threshold = 0.5 * (st.prev + v);
                            if threshold <= st.prev {
                                threshold = v;
                            }
                            best[nid as usize] = Some(Candidate {
                                gain,
                                feature: f as usize,
                                threshold,
                                gl: st.gl.clone(),
                                hl: st.hl,
                            });
                        }
                    }
                }
                for (pos, &k) in outputs.iter().enumerate() {
                    st.gl[pos] += grad.get(row as usize, k);
                }
                st.hl += 1.0;
                st.prev = v;
                st.seen = true;
            }
        }

        let mut next_level = Vec::new();
        for &nid in &level {
            let nidu = nid as usize;
            if let Some(cand) = best[nidu].take() {
                let parent_h = nodes[nidu].h;
                let gr: Vec<f64> = nodes[nidu]
                    .g
                    .iter()
                    .zip(&cand.gl)
                    .map(|(pg, gl)| pg - gl)
                    .collect();
                let lid = nodes.len() as u32;
                let rid = lid + 1;
                nodes.push(BuildNode {
                    g: cand.gl,
                    h: cand.hl,
                    split: None,
                });
                nodes.push(BuildNode {
                    g: gr,
                    h: parent_h - cand.hl,
                    split: None,
                });
                nodes[nidu].split = Some((cand.feature, cand.threshold, lid, rid));
                next_level.push(lid);
                next_level.push(rid);
            }
        }
        if !next_level.is_empty() {
            for &row in rows_in {
                let nid = node_of_row[row as usize] as usize;
                if let Some((f, thr, lid, rid)) = nodes[nid].split {
                    node_of_row[row as usize] =
                        if x.get(row as usize, f) < thr { lid } else { rid };
                }
            }
        }
        level = next_level;
    }

    for &r in rows_in {
        node_of_row[r as usize] = UNASSIGNED;
    }

    let lambda = params.reg_lambda;
    let tree_nodes = nodes
        .iter()
        .map(|n| match n.split {
            Some((feature, threshold, left, right)) => TreeNode::Split {
                feature,
                threshold,
                left,
                right,
                missing_goes_left: true,
            },
            None => TreeNode::Leaf {
                values: n.g.iter().map(|g| -g / (n.h + lambda)).collect(),
            },
        })
        .collect();
    Tree {
        output_slice: None,
        nodes: tree_nodes,
    }
}

/// Fits a boosted ensemble. See [`fit_with_eval`] for the full contract.
pub fn fit(x: &DenseMatrix, y: &DenseMatrix, params: &GbtParams) -> Result<GbtModel> {
    fit_with_eval(x, y, params, None).map(|(model, _)| model)
}

/// Fits a boosted ensemble, optionally tracking an evaluation set.
///
/// Behavior per boosting round: gradients are refreshed from the running
/// predictions; one tree is grown per round (or one per output under
/// [`MultiStrategy::OneOutputPerTree`]), each over freshly drawn row and
/// column subsamples; running predictions are then advanced over *all*
/// rows. When an eval pair is supplied, the pooled eval RMSE after each
/// round is returned alongside the model (one entry per round).
pub fn fit_with_eval(
    x: &DenseMatrix,
    y: &DenseMatrix,
    params: &GbtParams,
    eval: Option<(&DenseMatrix, &DenseMatrix)>,
) -> Result<(GbtModel, Vec<f64>)> {
    params.validate()?;
    let rows = x.n_rows();
    let kf = x.n_cols();
    let ko = y.n_cols();
    if rows < 2 || kf == 0 || ko == 0 {
        return Err(Error::EmptyDataset);
    }
    if y.n_rows() != rows {
        return Err(Error::DimensionMismatch {
            what: "target rows",
            expected: rows,
            got: y.n_rows(),
        });
    }
    for i in 0..rows {
        for k in 0..ko {
            if y.get(i, k).is_nan() {
                return Err(Error::BadConfig("targets contain NaN".into()));
            }
        }
    }
    if let Some((ex, ey)) = eval {
        if ex.n_cols() != kf {
            return Err(Error::DimensionMismatch {
                what: "eval feature columns",
                expected: kf,
                got: ex.n_cols(),
            });
        }
        if ey.n_rows() != ex.n_rows() || ey.n_cols() != ko {
            return Err(Error::DimensionMismatch {
                what: "eval target shape",
                expected: ex.n_rows() * ko,
                got: ey.n_rows() * ey.n_cols(),
            });
        }
    }

    // Presort every feature once: ascending value, ties by row index.
    let mut sorted_idx: Vec<Vec<u32>> = Vec::with_capacity(kf);
    for f in 0..kf {
        let mut idx: Vec<u32> = (0..rows as u32).collect();
        idx.sort_unstable_by(|&a, &b| {
            x.get(a as usize, f)
                .total_cmp(&x.get(b as usize, f))
                .then(a.cmp(&b))
        });
        sorted_idx.push(idx);
    }

    let mut base = vec![0.0; ko];
    for i in 0..rows {
        for (k, b) in base.iter_mut().enumerate() {
            *b += y.get(i, k);
        }
    }
    base.iter_mut().for_each(|b| *b /= rows as f64);

    let mut pred = DenseMatrix::zeros(rows, ko);
    for i in 0..rows {
        for k in 0..ko {
            pred.set(i, k, base[k]);
        }
    }
    let mut eval_pred = eval.map(|(ex, _)| {
        let mut m = DenseMatrix::zeros(ex.n_rows(), ko);
        for i in 0..ex.n_rows() {
            for k in 0..ko {
                m.set(i, k, base[k]);
            }
        }
        m
    });

    let mut grad = DenseMatrix::zeros(rows, ko);
    let mut node_of_row = vec![UNASSIGNED; rows];
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut trees = Vec::new();
    let mut eval_curve = Vec::new();
    let all_rows: Vec<u32> = (0..rows as u32).collect();
    let all_cols: Vec<u32> = (0..kf as u32).collect();

    for _round in 0..params.n_estimators {
        for i in 0..rows {
            for k in 0..ko {
                grad.set(i, k, pred.get(i, k) - y.get(i, k));
            }
        }

        let specs: Vec<Vec<usize>> = match params.multi_strategy {
            MultiStrategy::MultiOutputTree => vec![(0..ko).collect()],
            MultiStrategy::OneOutputPerTree => (0..ko).map(|k| vec![k]).collect(),
        };
        for outputs in specs {
            let rows_in = if params.subsample < 1.0 {
                sample_without_replacement(&mut rng, rows, params.subsample)
            } else {
                all_rows.clone()
            };
            let cols = if params.colsample_bytree < 1.0 {
                sample_without_replacement(&mut rng, kf, params.colsample_bytree)
            } else {
                all_cols.clone()
            };

            let mut tree = build_tree(
                x,
                &sorted_idx,
                &grad,
                &outputs,
                &rows_in,
                &cols,
                params,
                &mut node_of_row,
            );
            tree.output_slice = match params.multi_strategy {
                MultiStrategy::MultiOutputTree => None,
                MultiStrategy::OneOutputPerTree => Some(outputs.clone()),
            };

            for i in 0..rows {
                let leaf = tree.eval(x.row(i));
                for (pos, &k) in outputs.iter().enumerate() {
                    pred.set(i, k, pred.get(i, k) + params.learning_rate * leaf[pos]);
                }
            }
            if let (Some(ep), Some((ex, _))) = (&mut eval_pred, eval) {
                for i in 0..ex.n_rows() {
                    let leaf = tree.eval(ex.row(i));
                    for (pos, &k) in outputs.iter().enumerate() {
                        ep.set(i, k, ep.get(i, k) + params.learning_rate * leaf[pos]);
                    }
                }
            }
            trees.push(tree);
        }

        if let (Some(ep), Some((_, ey))) = (&eval_pred, eval) {
            let mut sse = 0.0;
            for i in 0..ey.n_rows() {
                for k in 0..ko {
                    let d = ep.get(i, k) - ey.get(i, k);
                    sse += d * d;
                }
            }
            eval_curve.push((sse / (ey.n_rows() * ko) as f64).sqrt());
        }
    }

    let model = GbtModel {
        version: GBT_FORMAT_VERSION,
        feature_dim: kf,
        output_dim: ko,
        base_score: base,
        learning_rate: params.learning_rate,
        multi_strategy: params.multi_strategy,
        trees,
        params: *params,
    };
    debug_assert!(model.validate().is_ok());
    Ok((model, eval_curve))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full_batch(rounds: usize, depth: usize, lr: f64, lambda: f64, min_w: f64) -> GbtParams {
        GbtParams {
            n_estimators: rounds,
            max_depth: depth,
            learning_rate: lr,
            min_child_weight: min_w,
            subsample: 1.0,
            colsample_bytree: 1.0,
            reg_lambda: lambda,
            multi_strategy: MultiStrategy::MultiOutputTree,
            seed: 0,
        }
    }

    /// Deterministic congruential stream, independent of the library rng.
    struct TestRand(u64);
    impl TestRand {
        fn next_f64(&mut self) -> f64 {
            self.0 = self
                .0
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((self.0 >> 11) as f64) / ((1u64 << 53) as f64)
        }
    }

    fn random_dataset(
        rows: usize,
        cols: usize,
        outs: usize,
        seed: u64,
    ) -> (DenseMatrix, DenseMatrix) {
        let mut rng = TestRand(seed);
        let mut xr = Vec::new();
        let mut yr = Vec::new();
        for _ in 0..rows {
            let features: Vec<f64> = (0..cols).map(|_| rng.next_f64() * 4.0 - 2.0).collect();
            let mut targets = Vec::new();
            for k in 0..outs {
                let smooth: f64 = features
                    .iter()
                    .enumerate()
                    .map(|(j, v)| ((j + k + 1) as f64 * 0.7 * v).sin())
                    .sum();
                targets.push(smooth + 0.1 * (rng.next_f64() - 0.5));
            }
            xr.push(features);
            yr.push(targets);
        }
        (
            DenseMatrix::from_rows(&xr).unwrap(),
            DenseMatrix::from_rows(&yr).unwrap(),
        )
    }

    #[test]
    fn constant_targets_reproduced_exactly() {
        let x = DenseMatrix::from_rows(&[
            vec![0.0, 1.0],
            vec![2.0, -1.0],
            vec![4.0, 0.5],
            vec![-3.0, 2.0],
        ])
        .unwrap();
        let y = DenseMatrix::from_rows(&vec![vec![0.5]; 4]).unwrap();
        let model = fit(&x, &y, &full_batch(3, 3, 0.7, 1.0, 0.0)).unwrap();
        for i in 0..4 {
            assert_eq!(model.predict_row(x.row(i)).unwrap(), vec![0.5]);
        }
    }

    #[test]
    fn one_dimensional_textbook_split() {
        let x = DenseMatrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let y = DenseMatrix::from_rows(&[vec![0.0], vec![0.0], vec![1.0], vec![1.0]]).unwrap();
        let model = fit(&x, &y, &full_batch(1, 1, 1.0, 0.0, 0.0)).unwrap();

        assert_eq!(model.trees.len(), 1);
        let nodes = &model.trees[0].nodes;
        match &nodes[0] {
            TreeNode::Split {
                feature, threshold, ..
            } => {
                assert_eq!(*feature, 0);
                assert!(
                    *threshold > 1.0 && *threshold <= 2.0,
                    "threshold {threshold} outside (1, 2]"
                );
                assert_eq!(*threshold, 1.5);
            }
            other => panic!("expected a root split, got {other:?}"),
        }
        // base 0.5, leaves -G/H: left -0.5, right +0.5; training error 0.
        for i in 0..4 {
            let p = model.predict_row(x.row(i)).unwrap()[0];
            assert!((p - y.get(i, 0)).abs() < 1e-15);
        }
    }

    /// Independent single-split oracle: enumerates every (feature,
    /// adjacent-distinct-midpoint) candidate, partitions rows directly,
    /// and evaluates the regularized gain from scratch.
    fn brute_force_root(
        x: &DenseMatrix,
        y: &DenseMatrix,
        lambda: f64,
        min_w: f64,
    ) -> Option<(usize, f64, Vec<f64>, Vec<f64>)> {
        let rows = x.n_rows();
        let ko = y.n_cols();
        let mut base = vec![0.0; ko];
        for i in 0..rows {
            for (k, b) in base.iter_mut().enumerate() {
                *b += y.get(i, k);
            }
        }
        base.iter_mut().for_each(|b| *b /= rows as f64);
        let g: Vec<Vec<f64>> = (0..rows)
            .map(|i| (0..ko).map(|k| base[k] - y.get(i, k)).collect())
            .collect();
        let g_tot: Vec<f64> = (0..ko).map(|k| g.iter().map(|r| r[k]).sum()).collect();
        let h_tot = rows as f64;

        let mut best: Option<(f64, usize, f64)> = None;
        for f in 0..x.n_cols() {
            let mut vals: Vec<f64> = (0..rows).map(|i| x.get(i, f)).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            for w in vals.windows(2) {
                let mut thr = 0.5 * (w[0] + w[1]);
                if thr <= w[0] {
                    thr = w[1];
                }
                let mut gl = vec![0.0; ko];
                let mut hl = 0.0;
                for i in 0..rows {
                    if x.get(i, f) < thr {
                        for (k, s) in gl.iter_mut().enumerate() {
                            *s += g[i][k];
                        }
                        hl += 1.0;
                    }
                }
                let hr = h_tot - hl;
                if hl < min_w || hr < min_w {
                    continue;
                }
                let mut gain = 0.0;
                for k in 0..ko {
                    let gr = g_tot[k] - gl[k];
                    gain += gl[k] * gl[k] / (hl + lambda) + gr * gr / (hr + lambda)
                        - g_tot[k] * g_tot[k] / (h_tot + lambda);
                }
                gain *= 0.5;
                if gain > 0.0 && best.map_or(true, |(bg, _, _)| gain > bg) {
                    best = Some((gain, f, thr));
                }
            }
        }
        best.map(|(_, f, thr)| {
            let mut gl = vec![0.0; ko];
            let mut hl = 0.0;
            for i in 0..rows {
                if x.get(i, f) < thr {
                    for (k, s) in gl.iter_mut().enumerate() {
                        *s += g[i][k];
                    }
                    hl += 1.0;
                }
            }
            let left: Vec<f64> = gl.iter().map(|v| -v / (hl + lambda)).collect();
            let right: Vec<f64> = (0..ko)
                .map(|k| -(g_tot[k] - gl[k]) / (h_tot - hl + lambda))
                .collect();
            (f, thr, left, right)
        })
    }

    #[test]
    fn root_split_matches_brute_force_oracle() {
        for seed in 0..20u64 {
            let rows = 8 + (seed as usize * 7) % 57; // 8..=64
            let (x, y) = random_dataset(rows, 3, 2, 1000 + seed);
            let lambda = 0.3;
            let min_w = 2.0;
            let model = fit(&x, &y, &full_batch(1, 1, 1.0, lambda, min_w)).unwrap();
            let oracle = brute_force_root(&x, &y, lambda, min_w);

            match (&model.trees[0].nodes[0], oracle) {
                (
                    TreeNode::Split {
                        feature, threshold, ..
                    },
                    Some((of, othr, oleft, oright)),
                ) => {
                    assert_eq!(*feature, of, "seed {seed}");
                    assert!((threshold - othr).abs() < 1e-12, "seed {seed}");
                    let (left, right) = match (&model.trees[0].nodes[1], &model.trees[0].nodes[2])
                    {
                        (TreeNode::Leaf { values: l }, TreeNode::Leaf { values: r }) => (l, r),
                        _ => panic!("depth-1 tree must have two leaves"),
                    };
                    for k in 0..2 {
                        assert!((left[k] - oleft[k]).abs() < 1e-12, "seed {seed}");
                        assert!((right[k] - oright[k]).abs() < 1e-12, "seed {seed}");
                    }
                }
                (TreeNode::Leaf { .. }, None) => {}
                (node, oracle) => {
                    panic!("seed {seed}: trainer {node:?} vs oracle {oracle:?}")
                }
            }
        }
    }

    #[test]
    fn training_rmse_is_monotone_at_full_sampling() {
        let (x, y) = random_dataset(300, 4, 2, 7);
        let params = full_batch(60, 3, 0.3, 1.0, 1.0);
        let (_, curve) = fit_with_eval(&x, &y, &params, Some((&x, &y))).unwrap();
        assert_eq!(curve.len(), 60);
        for w in curve.windows(2) {
            assert!(
                w[1] <= w[0] + 1e-12,
                "training RMSE rose from {} to {}",
                w[0],
                w[1]
            );
        }
        assert!(curve[59] < curve[0], "no learning progress");
    }

    #[test]
    fn fixed_seed_is_bit_reproducible_and_seeds_differ() {
        let (x, y) = random_dataset(120, 5, 2, 3);
        let mut params = full_batch(10, 4, 0.4, 1.0, 2.0);
        params.subsample = 0.7;
        params.colsample_bytree = 0.6;
        params.seed = 9;
        let a = fit(&x, &y, &params).unwrap();
        let b = fit(&x, &y, &params).unwrap();
        assert_eq!(a.to_json_string(), b.to_json_string());

        params.seed = 10;
        let c = fit(&x, &y, &params).unwrap();
        assert_ne!(a.to_json_string(), c.to_json_string());
    }

    #[test]
    fn shifting_targets_shifts_predictions_by_the_same_constant() {
        let (x, y) = random_dataset(150, 3, 1, 21);
        let shifted_rows: Vec<Vec<f64>> = (0..y.n_rows())
            .map(|i| vec![y.get(i, 0) + 10.0])
            .collect();
        let y_shift = DenseMatrix::from_rows(&shifted_rows).unwrap();

        let mut params = full_batch(15, 3, 0.5, 1.0, 2.0);
        params.subsample = 0.8;
        params.seed = 4;
        let a = fit(&x, &y, &params).unwrap();
        let b = fit(&x, &y_shift, &params).unwrap();
        for i in 0..x.n_rows() {
            let pa = a.predict_row(x.row(i)).unwrap()[0];
            let pb = b.predict_row(x.row(i)).unwrap()[0];
            assert!(
                (pb - pa - 10.0).abs() < 1e-9,
                "row {i}: {pa} vs shifted {pb}"
            );
        }
    }

    #[test]
    fn trees_respect_the_depth_bound() {
        let (x, y) = random_dataset(200, 4, 2, 31);
        let model = fit(&x, &y, &full_batch(8, 4, 0.3, 1.0, 1.0)).unwrap();
        for tree in &model.trees {
            assert!(tree.depth() <= 4);
            assert!(tree.nodes.len() <= (1 << 5) - 1);
        }
    }

    #[test]
    fn one_output_per_tree_builds_tagged_single_output_trees() {
        let (x, y) = random_dataset(100, 3, 2, 77);
        let mut params = full_batch(5, 3, 0.4, 1.0, 1.0);
        params.multi_strategy = MultiStrategy::OneOutputPerTree;
        let (model, curve) = fit_with_eval(&x, &y, &params, Some((&x, &y))).unwrap();
        assert_eq!(model.trees.len(), 10);
        for (t, tree) in model.trees.iter().enumerate() {
            assert_eq!(tree.output_slice, Some(vec![t % 2]));
        }
        assert_eq!(curve.len(), 5);
        assert!(curve[4] < curve[0], "no learning progress");
    }

    #[test]
    fn oversized_min_child_weight_freezes_the_model_at_its_base() {
        let (x, y) = random_dataset(10, 2, 1, 5);
        let model = fit(&x, &y, &full_batch(4, 3, 0.5, 1.0, 6.0)).unwrap();
        for tree in &model.trees {
            assert_eq!(tree.nodes.len(), 1, "no split can satisfy 6+6 <= 10");
        }
        for i in 0..10 {
            let p = model.predict_row(x.row(i)).unwrap()[0];
            assert_eq!(p, model.base_score[0]);
        }
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let (x, y) = random_dataset(10, 2, 1, 1);
        let empty = DenseMatrix::zeros(0, 2);
        assert!(matches!(
            fit(&empty, &DenseMatrix::zeros(0, 1), &full_batch(1, 1, 0.5, 1.0, 0.0)),
            Err(Error::EmptyDataset)
        ));
        let single = DenseMatrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert!(matches!(
            fit(
                &single,
                &DenseMatrix::from_rows(&[vec![1.0]]).unwrap(),
                &full_batch(1, 1, 0.5, 1.0, 0.0)
            ),
            Err(Error::EmptyDataset)
        ));
        let short_y = DenseMatrix::from_rows(&vec![vec![1.0]; 4]).unwrap();
        assert!(matches!(
            fit(&x, &short_y, &full_batch(1, 1, 0.5, 1.0, 0.0)),
            Err(Error::DimensionMismatch { .. })
        ));

        let mut bad = full_batch(1, 1, 0.5, 1.0, 0.0);
        bad.subsample = 0.0;
        assert!(matches!(fit(&x, &y, &bad), Err(Error::BadConfig(_))));
        let mut bad = full_batch(1, 1, 0.5, 1.0, 0.0);
        bad.n_estimators = 0;
        assert!(matches!(fit(&x, &y, &bad), Err(Error::BadConfig(_))));

        let nan_y = DenseMatrix::from_rows(&[
            vec![1.0],
            vec![f64::NAN],
            vec![0.0],
            vec![2.0],
            vec![1.0],
            vec![0.5],
            vec![0.25],
            vec![0.125],
            vec![2.5],
            vec![1.5],
        ])
        .unwrap();
        assert!(matches!(
            fit(&x, &nan_y, &full_batch(1, 1, 0.5, 1.0, 0.0)),
            Err(Error::BadConfig(_))
        ));
    }
}
