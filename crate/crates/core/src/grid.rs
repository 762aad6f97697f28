//! Radial network data model: buses, branches, injection scenarios, voltage
//! states, the AC power-balance residual check, and the JSON file formats.
//!
//! Conventions used throughout the crate:
//! - all electrical quantities are per-unit on a common system base;
//! - voltage angles are stored in degrees at API and file boundaries and
//!   converted to radians only inside trigonometric evaluations;
//! - loads are negative net injections (generation is positive).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Role of a bus in the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusKind {
    /// Reference bus with fixed voltage magnitude and angle.
    Slack,
    /// Bus with specified net injection and unknown voltage.
    Pq,
}

/// A network node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: usize,
    pub kind: BusKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

/// A series r + jx line segment between two buses (no shunts, no taps).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    #[serde(rename = "from")]
    pub from_bus: usize,
    #[serde(rename = "to")]
    pub to_bus: usize,
    #[serde(rename = "r_pu")]
    pub r: f64,
    #[serde(rename = "x_pu")]
    pub x: f64,
}

/// A distribution network restricted to tree topology.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub slack_id: usize,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
}

/// Per-bus net injections plus the slack boundary condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(rename = "p_inj_pu")]
    pub p_inj: Vec<f64>,
    #[serde(rename = "q_inj_pu")]
    pub q_inj: Vec<f64>,
    #[serde(rename = "slack_vm_pu")]
    pub slack_vm: f64,
    #[serde(rename = "slack_va_deg")]
    pub slack_va: f64,
}

/// Per-bus voltage magnitudes (p.u.) and angles (degrees).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoltageState {
    #[serde(rename = "vm_pu")]
    pub vm: Vec<f64>,
    #[serde(rename = "va_deg")]
    pub va: Vec<f64>,
}

/// One supervised record: an input scenario and its solved voltages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub scenario: Scenario,
    pub truth: VoltageState,
}

impl RadialGrid {
    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    /// Ids of all non-slack buses, ascending.
    pub fn pq_ids(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self
            .buses
            .iter()
            .filter(|b| b.kind == BusKind::Pq)
            .map(|b| b.id)
            .collect();
        ids.sort_unstable();
        ids
    }

    /// Adjacency lists `(neighbor, branch index)`, neighbors ascending so
    /// traversals are deterministic.
    pub(crate) fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.buses.len()];
        for (bi, br) in self.branches.iter().enumerate() {
            adj[br.from_bus].push((br.to_bus, bi));
            adj[br.to_bus].push((br.from_bus, bi));
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }
}

impl Scenario {
    /// All-zero injections with the given slack boundary.
    pub fn zero(n_buses: usize, slack_vm: f64, slack_va: f64) -> Self {
        Scenario {
            p_inj: vec![0.0; n_buses],
            q_inj: vec![0.0; n_buses],
            slack_vm,
            slack_va,
        }
    }
}

impl VoltageState {
    /// Uniform profile at the given magnitude and angle.
    pub fn flat(n_buses: usize, vm: f64, va: f64) -> Self {
        VoltageState {
            vm: vec![vm; n_buses],
            va: vec![va; n_buses],
        }
    }

    pub fn n_buses(&self) -> usize {
        self.vm.len()
    }
}

/// Checks that the grid is a well-formed radial network: dense unique bus
/// ids, exactly one slack referenced by `slack_id`, branches over existing
/// distinct buses with usable impedances, and a connected tree shape.
pub fn validate_grid(grid: &RadialGrid) -> Result<()> {
    let n = grid.buses.len();
    if n < 2 {
        return Err(Error::NotATree(format!(
            "grid needs at least 2 buses, has {n}"
        )));
    }

    let mut seen = vec![false; n];
    for bus in &grid.buses {
        if bus.id >= n {
            return Err(Error::SchemaError(format!(
                "bus id {} out of range for {} buses (ids must be 0..{})",
                bus.id,
                n,
                n - 1
            )));
        }
        if seen[bus.id] {
            return Err(Error::SchemaError(format!("duplicate bus id {}", bus.id)));
        }
        seen[bus.id] = true;
    }

    let slack_count = grid
        .buses
        .iter()
        .filter(|b| b.kind == BusKind::Slack)
        .count();
    match slack_count {
        0 => return Err(Error::NoSlack),
        1 => {}
        count => return Err(Error::MultipleSlack { count }),
    }
    let slack_ok = grid
        .buses
        .iter()
        .any(|b| b.id == grid.slack_id && b.kind == BusKind::Slack);
    if !slack_ok {
        return Err(Error::NoSlack);
    }

    for br in &grid.branches {
        if br.from_bus >= n || br.to_bus >= n || br.from_bus == br.to_bus {
            return Err(Error::DanglingBranch {
                from_bus: br.from_bus,
                to_bus: br.to_bus,
            });
        }
        let impedance_ok =
            br.r.is_finite() && br.x.is_finite() && br.r >= 0.0 && br.x >= 0.0 && br.r + br.x > 0.0;
        if !impedance_ok {
            return Err(Error::SchemaError(format!(
                "branch {}->{} has unusable impedance r={} x={}",
                br.from_bus, br.to_bus, br.r, br.x
            )));
        }
    }

    if grid.branches.len() != n - 1 {
        return Err(Error::NotATree(format!(
            "{} buses require {} branches, found {}",
            n,
            n - 1,
            grid.branches.len()
        )));
    }

    // n-1 edges + full connectivity from the slack implies acyclicity.
    let adj = grid.adjacency();
    let mut visited = vec![false; n];
    let mut queue = std::collections::VecDeque::new();
    visited[grid.slack_id] = true;
    queue.push_back(grid.slack_id);
    let mut reached = 1usize;
    while let Some(u) = queue.pop_front() {
        for &(v, _) in &adj[u] {
            if !visited[v] {
                visited[v] = true;
                reached += 1;
                queue.push_back(v);
            }
        }
    }
    if reached != n {
        return Err(Error::NotATree(format!(
            "only {reached} of {n} buses reachable from the slack"
        )));
    }

    Ok(())
}

/// Checks that a scenario is dimensionally consistent with a grid and has a
/// physical slack boundary.
pub fn validate_scenario(grid: &RadialGrid, scenario: &Scenario) -> Result<()> {
    let n = grid.n_buses();
    if scenario.p_inj.len() != n {
        return Err(Error::DimensionMismatch {
            what: "scenario p_inj",
            expected: n,
            got: scenario.p_inj.len(),
        });
    }
    if scenario.q_inj.len() != n {
        return Err(Error::DimensionMismatch {
            what: "scenario q_inj",
            expected: n,
            got: scenario.q_inj.len(),
        });
    }
    if !(scenario.slack_vm.is_finite() && scenario.slack_vm > 0.0) {
        return Err(Error::BadConfig(format!(
            "slack_vm must be positive and finite, got {}",
            scenario.slack_vm
        )));
    }
    if !scenario.slack_va.is_finite() {
        return Err(Error::BadConfig("slack_va must be finite".into()));
    }
    Ok(())
}

/// Checks that a voltage state covers every bus of the grid.
pub fn validate_state(grid: &RadialGrid, state: &VoltageState) -> Result<()> {
    let n = grid.n_buses();
    if state.vm.len() != n || state.va.len() != n {
        return Err(Error::MissingTruth {
            expected: n,
            got: state.vm.len().min(state.va.len()),
        });
    }
    Ok(())
}

/// Evaluates the AC power-balance residual `(ΔP, ΔQ)` at every bus:
/// the specified net injection minus the power implied by the voltage state
/// through the branch admittances. A state solves the network exactly when
/// the residual vanishes at every PQ bus.
pub fn power_mismatch(
    grid: &RadialGrid,
    scenario: &Scenario,
    state: &VoltageState,
) -> Result<(Vec<f64>, Vec<f64>)> {
    validate_scenario(grid, scenario)?;
    validate_state(grid, state)?;

    let n = grid.n_buses();
    let mut volts = Vec::with_capacity(n);
    for i in 0..n {
        volts.push(Complex64::from_polar(state.vm[i], state.va[i].to_radians()));
    }

    // Net current injected into the network at each bus, I = Y V, built by
    // accumulating per-branch series admittance contributions.
    let mut currents = vec![Complex64::new(0.0, 0.0); n];
    for br in &grid.branches {
        let y = Complex64::new(br.r, br.x).inv();
        let flow = y * (volts[br.from_bus] - volts[br.to_bus]);
        currents[br.from_bus] += flow;
        currents[br.to_bus] -= flow;
    }

    let mut dp = Vec::with_capacity(n);
    let mut dq = Vec::with_capacity(n);
    for i in 0..n {
        let s = volts[i] * currents[i].conj();
        dp.push(scenario.p_inj[i] - s.re);
        dq.push(scenario.q_inj[i] - s.im);
    }
    Ok((dp, dq))
}

/// Largest absolute power-balance residual over the PQ buses (the slack
/// residual is the balancing power, not an error).
pub fn max_pq_mismatch(
    grid: &RadialGrid,
    scenario: &Scenario,
    state: &VoltageState,
) -> Result<f64> {
    let (dp, dq) = power_mismatch(grid, scenario, state)?;
    let mut worst = 0.0f64;
    for bus in &grid.buses {
        if bus.kind == BusKind::Pq {
            worst = worst.max(dp[bus.id].abs()).max(dq[bus.id].abs());
        }
    }
    Ok(worst)
}

/// Hex SHA-256 of the grid's canonical JSON serialization. Stable across
/// runs and processes; changes whenever topology or parameters change.
pub fn grid_hash(grid: &RadialGrid) -> String {
    let doc = serde_json::to_string(grid).expect("grid serialization cannot fail");
    let digest = Sha256::digest(doc.as_bytes());
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

fn schema_err(context: &str, err: serde_json::Error) -> Error {
    Error::SchemaError(format!("{context}: {err}"))
}

/// Writes a grid as pretty-printed JSON.
pub fn save_grid(grid: &RadialGrid, path: &Path) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    let doc = serde_json::to_string_pretty(grid).expect("grid serialization cannot fail");
    file.write_all(doc.as_bytes())?;
    file.write_all(b"\n")?;
    Ok(())
}

/// Reads and validates a grid file.
pub fn load_grid(path: &Path) -> Result<RadialGrid> {
    let text = std::fs::read_to_string(path)?;
    let grid: RadialGrid =
        serde_json::from_str(&text).map_err(|e| schema_err("grid file", e))?;
    validate_grid(&grid)?;
    Ok(grid)
}

/// Writes a scenario as pretty-printed JSON.
pub fn save_scenario(scenario: &Scenario, path: &Path) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    let doc = serde_json::to_string_pretty(scenario).expect("scenario serialization cannot fail");
    file.write_all(doc.as_bytes())?;
    file.write_all(b"\n")?;
    Ok(())
}

/// Reads a scenario file (dimension checks happen against a grid at the
/// point of use).
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| schema_err("scenario file", e))
}

/// Writes a voltage state as pretty-printed JSON.
pub fn save_state(state: &VoltageState, path: &Path) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    let doc = serde_json::to_string_pretty(state).expect("state serialization cannot fail");
    file.write_all(doc.as_bytes())?;
    file.write_all(b"\n")?;
    Ok(())
}

/// Writes labeled samples as JSON lines, one record per line.
pub fn save_dataset(samples: &[LabeledSample], path: &Path) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    for sample in samples {
        let line = serde_json::to_string(sample).expect("sample serialization cannot fail");
        file.write_all(line.as_bytes())?;
        file.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads a JSON-lines dataset file. Blank lines are ignored; parse failures
/// report the 1-based line number.
pub fn load_dataset(path: &Path) -> Result<Vec<LabeledSample>> {
    let file = BufReader::new(File::open(path)?);
    let mut samples = Vec::new();
    for (idx, line) in file.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let sample: LabeledSample = serde_json::from_str(&line)
            .map_err(|e| schema_err(&format!("dataset line {}", idx + 1), e))?;
        samples.push(sample);
    }
    Ok(samples)
}

/// Checks every sample of a dataset against the grid's dimensions.
pub fn validate_dataset(grid: &RadialGrid, samples: &[LabeledSample]) -> Result<()> {
    for sample in samples {
        validate_scenario(grid, &sample.scenario)?;
        validate_state(grid, &sample.truth)?;
    }
    Ok(())
}
