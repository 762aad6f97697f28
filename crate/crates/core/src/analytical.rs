//! Analytical radial power-flow solvers.
//!
//! Three solvers of increasing fidelity, all sweeping the oriented tree:
//!
//! - [`lindistflow_solve`]: one linearized forward pass over lossless
//!   downstream aggregates — fast, biased, used as a physics baseline and
//!   as a feature anchor for the learned predictor;
//! - [`distflow_solve`]: the nonlinear branch-flow fixed point with
//!   quadratic loss terms, iterated to a voltage-magnitude tolerance, with
//!   small-angle recovery;
//! - [`ac_oracle_solve`]: an exact forward-backward sweep over complex
//!   phasors, used to label ground-truth datasets (its solutions drive the
//!   power-balance residual of [`crate::grid::power_mismatch`] below 1e-8).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Scenario, VoltageState};
use crate::path::{aggregate_downstream, Orientation};

/// Stopping rule shared by the iterative solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Convergence tolerance on the largest per-bus voltage change, p.u.
    pub tol: f64,
    /// Iteration budget.
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-10,
            max_iter: 100,
        }
    }
}

/// Inputs for one linearized parent-to-child voltage step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdfStepInput {
    /// Parent voltage magnitude, p.u.
    pub v_parent: f64,
    /// Parent voltage angle, degrees.
    pub theta_parent: f64,
    /// Branch resistance, p.u.
    pub r: f64,
    /// Branch reactance, p.u.
    pub x: f64,
    /// Downstream active aggregate at the child, p.u.
    pub p_agg: f64,
    /// Downstream reactive aggregate at the child, p.u.
    pub q_agg: f64,
    /// Nominal (slack) voltage magnitude used by the linearization, p.u.
    pub v0: f64,
}

/// Small-angle update shared by the linearized solver and the nonlinear
/// solver's angle recovery: the angle falls by `(x·p - r·q)/v_nom²`
/// radians (reported in degrees) for power `(p, q)` flowing through
/// `(r, x)` toward the child.
fn angle_step(theta_parent_deg: f64, r: f64, x: f64, p: f64, q: f64, v_nom: f64) -> f64 {
    theta_parent_deg - ((x * p - r * q) / (v_nom * v_nom)).to_degrees()
}

/// One linearized voltage step from a parent bus to its child: the
/// magnitude drops by `(r·p_agg + x·q_agg)/v0` and the angle by the
/// small-angle term of [`angle_step`]. Quadratic loss terms are dropped.
pub fn lindistflow_step(input: &LdfStepInput) -> (f64, f64) {
    let v = input.v_parent - (input.r * input.p_agg + input.x * input.q_agg) / input.v0;
    let theta = angle_step(
        input.theta_parent,
        input.r,
        input.x,
        input.p_agg,
        input.q_agg,
        input.v0,
    );
    (v, theta)
}

/// Linearized solver: aggregates downstream power once, then applies
/// [`lindistflow_step`] edge by edge in BFS order, chaining each child off
/// its parent's linearized value. `v0` is the scenario slack magnitude.
///
/// Panics if the scenario does not match the orientation's bus count;
/// validate at the I/O boundary.
pub fn lindistflow_solve(ori: &Orientation, scenario: &Scenario) -> VoltageState {
    let n = ori.n_buses();
    let agg = aggregate_downstream(ori, scenario);
    let mut state = VoltageState::flat(n, scenario.slack_vm, scenario.slack_va);
    for &j in &ori.bfs_order {
        let Some(i) = ori.parent[j] else { continue };
        let (v, theta) = lindistflow_step(&LdfStepInput {
            v_parent: state.vm[i],
            theta_parent: state.va[i],
            r: ori.edge_r[j],
            x: ori.edge_x[j],
            p_agg: agg.p_agg[j],
            q_agg: agg.q_agg[j],
            v0: scenario.slack_vm,
        });
        state.vm[j] = v;
        state.va[j] = theta;
    }
    state
}

/// Linearized values with every step anchored at the ground-truth parent
/// state instead of the chained linearized one. This is the baseline a
/// training row carries: it matches inference conditions under perfect
/// upstream predictions (teacher forcing). Slack entries come from the
/// scenario.
pub fn lindistflow_teacher_forced(
    ori: &Orientation,
    scenario: &Scenario,
    truth: &VoltageState,
) -> VoltageState {
    let n = ori.n_buses();
    assert_eq!(truth.vm.len(), n, "truth does not match orientation");
    assert_eq!(truth.va.len(), n, "truth does not match orientation");
    let agg = aggregate_downstream(ori, scenario);
    let mut state = VoltageState::flat(n, scenario.slack_vm, scenario.slack_va);
    for &j in &ori.bfs_order {
        let Some(i) = ori.parent[j] else { continue };
        let (v, theta) = lindistflow_step(&LdfStepInput {
            v_parent: truth.vm[i],
            theta_parent: truth.va[i],
            r: ori.edge_r[j],
            x: ori.edge_x[j],
            p_agg: agg.p_agg[j],
            q_agg: agg.q_agg[j],
            v0: scenario.slack_vm,
        });
        state.vm[j] = v;
        state.va[j] = theta;
    }
    state
}

/// One nonlinear branch-flow iteration from the magnitudes in `vm`:
/// a leaf-to-root sweep accumulating receiving-end branch flows with
/// quadratic loss terms, then a root-to-leaf magnitude update. Writes the
/// new flows/magnitudes in place and returns the largest magnitude change,
/// or `None` if a squared magnitude went non-positive (voltage collapse).
fn distflow_iteration(
    ori: &Orientation,
    scenario: &Scenario,
    vm: &mut [f64],
    p_br: &mut [f64],
    q_br: &mut [f64],
) -> Option<f64> {
    // Backward: p_br[j] is the power entering bus j through its parent
    // branch. A child's branch flow is lifted to the parent side by adding
    // the branch loss r·(P²+Q²)/V², evaluated at this bus's magnitude.
    for &j in ori.bfs_order.iter().rev() {
        let mut p = -scenario.p_inj[j];
        let mut q = -scenario.q_inj[j];
        let v2 = vm[j] * vm[j];
        for &k in &ori.children[j] {
            let flow2 = p_br[k] * p_br[k] + q_br[k] * q_br[k];
            p += p_br[k] + ori.edge_r[k] * flow2 / v2;
            q += q_br[k] + ori.edge_x[k] * flow2 / v2;
        }
        p_br[j] = p;
        q_br[j] = q;
    }

    // Forward: magnitude update from the parent's (already updated) value.
    let mut worst = 0.0f64;
    for &j in &ori.bfs_order {
        let Some(i) = ori.parent[j] else { continue };
        let (r, x) = (ori.edge_r[j], ori.edge_x[j]);
        let vi2 = vm[i] * vm[i];
        let flow2 = p_br[j] * p_br[j] + q_br[j] * q_br[j];
        let v2 = vi2 - 2.0 * (r * p_br[j] + x * q_br[j]) + (r * r + x * x) * flow2 / vi2;
        if !(v2 > 0.0) {
            return None;
        }
        let v = v2.sqrt();
        worst = worst.max((v - vm[j]).abs());
        vm[j] = v;
    }
    Some(worst)
}

/// Recovers angles for a converged nonlinear solution: chained small-angle
/// steps driven by the loss-inclusive branch flows, normalized at the
/// slack magnitude.
fn distflow_angles(ori: &Orientation, scenario: &Scenario, p_br: &[f64], q_br: &[f64]) -> Vec<f64> {
    let n = ori.n_buses();
    let mut va = vec![scenario.slack_va; n];
    for &j in &ori.bfs_order {
        let Some(i) = ori.parent[j] else { continue };
        va[j] = angle_step(
            va[i],
            ori.edge_r[j],
            ori.edge_x[j],
            p_br[j],
            q_br[j],
            scenario.slack_vm,
        );
    }
    va
}

/// Nonlinear branch-flow solver: iterates backward/forward sweeps with
/// quadratic loss terms until the largest magnitude change falls below
/// `opts.tol`, then recovers angles from the converged branch flows.
///
/// Fails with [`Error::NonConvergence`] when the iteration budget runs out
/// or a voltage collapses; the error carries the last iterate (with
/// best-effort angles) and the last magnitude residual.
pub fn distflow_solve(
    ori: &Orientation,
    scenario: &Scenario,
    opts: &SolverOptions,
) -> Result<VoltageState> {
    let n = ori.n_buses();
    assert_eq!(scenario.p_inj.len(), n, "scenario does not match orientation");

    let mut vm = vec![scenario.slack_vm; n];
    let mut p_br = vec![0.0; n];
    let mut q_br = vec![0.0; n];

    for iter in 1..=opts.max_iter {
        match distflow_iteration(ori, scenario, &mut vm, &mut p_br, &mut q_br) {
            None => {
                let va = distflow_angles(ori, scenario, &p_br, &q_br);
                return Err(Error::NonConvergence {
                    iterations: iter,
                    residual: f64::INFINITY,
                    last: Box::new(VoltageState { vm, va }),
                });
            }
            Some(worst) => {
                if worst < opts.tol {
                    let va = distflow_angles(ori, scenario, &p_br, &q_br);
                    return Ok(VoltageState { vm, va });
                }
                if iter == opts.max_iter {
                    let va = distflow_angles(ori, scenario, &p_br, &q_br);
                    return Err(Error::NonConvergence {
                        iterations: iter,
                        residual: worst,
                        last: Box::new(VoltageState { vm, va }),
                    });
                }
            }
        }
    }
    unreachable!("loop returns on convergence, collapse, or budget exhaustion")
}

/// Largest magnitude change produced by applying one more nonlinear
/// branch-flow iteration to `state` — the fixed-point residual. Infinite
/// when the iteration collapses.
pub fn distflow_residual(ori: &Orientation, scenario: &Scenario, state: &VoltageState) -> f64 {
    let n = ori.n_buses();
    let mut vm = state.vm.clone();
    let mut p_br = vec![0.0; n];
    let mut q_br = vec![0.0; n];
    match distflow_iteration(ori, scenario, &mut vm, &mut p_br, &mut q_br) {
        Some(worst) => worst,
        None => f64::INFINITY,
    }
}

/// Exact AC solver by forward-backward sweep over complex phasors.
///
/// Each iteration converts bus injections to currents at the present
/// voltage estimate (`I = conj(S/V)`), accumulates branch currents leaf to
/// root, then updates voltages root to leaf through the series impedances.
/// Converges when the largest complex voltage change falls below
/// `opts.tol`. Slack injections are ignored (the slack balances the
/// system); slack entries of the result equal the scenario values exactly.
pub fn ac_oracle_solve(
    ori: &Orientation,
    scenario: &Scenario,
    opts: &SolverOptions,
) -> Result<VoltageState> {
    let n = ori.n_buses();
    assert_eq!(scenario.p_inj.len(), n, "scenario does not match orientation");

    let slack_v = Complex64::from_polar(scenario.slack_vm, scenario.slack_va.to_radians());
    let mut volts = vec![slack_v; n];
    let mut i_br = vec![Complex64::new(0.0, 0.0); n];

    let mut residual = f64::INFINITY;
    for iter in 1..=opts.max_iter {
        // Backward: branch current into each bus = its own injection
        // current (reversed) plus all child branch currents.
        for &j in ori.bfs_order.iter().rev() {
            let mut current = Complex64::new(0.0, 0.0);
            if ori.parent[j].is_some() {
                let s = Complex64::new(scenario.p_inj[j], scenario.q_inj[j]);
                current -= (s / volts[j]).conj();
            }
            for &k in &ori.children[j] {
                current += i_br[k];
            }
            i_br[j] = current;
        }

        // Forward: voltage drop over each parent branch.
        let mut worst = 0.0f64;
        for &j in &ori.bfs_order {
            let Some(i) = ori.parent[j] else { continue };
            let z = Complex64::new(ori.edge_r[j], ori.edge_x[j]);
            let v_new = volts[i] - z * i_br[j];
            if !(v_new.re.is_finite() && v_new.im.is_finite()) || v_new.norm() == 0.0 {
                return Err(Error::NonConvergence {
                    iterations: iter,
                    residual: f64::INFINITY,
                    last: Box::new(phasors_to_state(&volts, scenario, ori)),
                });
            }
            worst = worst.max((v_new - volts[j]).norm());
            volts[j] = v_new;
        }

        residual = worst;
        if worst < opts.tol {
            return Ok(phasors_to_state(&volts, scenario, ori));
        }
    }

    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        residual,
        last: Box::new(phasors_to_state(&volts, scenario, ori)),
    })
}

fn phasors_to_state(volts: &[Complex64], scenario: &Scenario, ori: &Orientation) -> VoltageState {
    let mut vm: Vec<f64> = volts.iter().map(|v| v.norm()).collect();
    let mut va: Vec<f64> = volts.iter().map(|v| v.arg().to_degrees()).collect();
    for j in 0..ori.n_buses() {
        if ori.parent[j].is_none() {
            vm[j] = scenario.slack_vm;
            va[j] = scenario.slack_va;
        }
    }
    VoltageState { vm, va }
}
