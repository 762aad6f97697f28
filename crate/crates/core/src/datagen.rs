//! Synthetic data generation: random radial feeders, stochastic
//! load/DER injection scenarios, and oracle-labeled datasets.
//!
//! Distributed-energy-resource (DER) assets — rooftop PV, EV chargers,
//! heat pumps, and batteries — are *placed* once per (grid, config seed)
//! pair, like installed hardware; their time-varying output is resampled
//! for every scenario draw. All draws are deterministic functions of
//! (seed, draw index), so datasets are reproducible byte-for-byte and
//! samples could be generated in any order.

use rand::Rng;
use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};
use serde::{Deserialize, Serialize};

use crate::analytical::{ac_oracle_solve, SolverOptions};
use crate::error::{Error, Result};
use crate::grid::{
    grid_hash, max_pq_mismatch, validate_grid, Branch, Bus, BusKind, LabeledSample, RadialGrid,
    Scenario,
};
use crate::path::{orient, Orientation};

/// Parameters for random feeder topology generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridGenConfig {
    /// Total bus count including the slack; at least 2.
    pub n_buses: usize,
    /// Mean child slots opened per node (Poisson); shapes tree depth —
    /// near 1.0 gives long feeders, larger values bushier trees.
    pub branching: f64,
    /// Per-unit series resistance interval for branches.
    pub r_range: (f64, f64),
    /// Per-unit series reactance interval for branches.
    pub x_range: (f64, f64),
    pub seed: u64,
}

impl Default for GridGenConfig {
    fn default() -> Self {
        GridGenConfig {
            n_buses: 116,
            branching: 1.5,
            r_range: (0.005, 0.03),
            x_range: (0.003, 0.02),
            seed: 0,
        }
    }
}

impl GridGenConfig {
    fn validate(&self) -> Result<()> {
        if self.n_buses < 2 {
            return Err(Error::BadConfig(format!(
                "n_buses must be at least 2, got {}",
                self.n_buses
            )));
        }
        if !(self.branching.is_finite() && self.branching > 0.0) {
            return Err(Error::BadConfig(format!(
                "branching must be positive, got {}",
                self.branching
            )));
        }
        check_range("r_range", self.r_range, true)?;
        check_range("x_range", self.x_range, true)?;
        Ok(())
    }
}

fn check_range(name: &str, (lo, hi): (f64, f64), strictly_positive: bool) -> Result<()> {
    let floor_ok = if strictly_positive { lo > 0.0 } else { lo >= 0.0 };
    if !(lo.is_finite() && hi.is_finite() && floor_ok && lo <= hi) {
        return Err(Error::BadConfig(format!(
            "{name} must be a finite {} interval (lo <= hi), got [{lo}, {hi}]",
            if strictly_positive { "positive" } else { "non-negative" }
        )));
    }
    Ok(())
}

/// Parameters for stochastic injection scenarios with DER augmentation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioGenConfig {
    /// Per-bus base household load draw, in kW.
    pub base_load_kw_range: (f64, f64),
    /// Weighted multipliers applied to the base load, as (scale, weight).
    pub load_scale_choices: Vec<(f64, f64)>,
    /// Fraction of load buses that get a PV installation.
    pub pv_penetration: f64,
    /// Installed PV size draw, in kW-peak.
    pub pv_kwp_range: (f64, f64),
    /// Fraction of load buses with an EV charge point.
    pub ev_penetration: f64,
    /// EV charger rating in kW; per-scenario draw is uniform in [0, rating].
    pub ev_kw: f64,
    /// Fraction of load buses with a heat pump.
    pub hp_penetration: f64,
    /// Installed heat-pump size draw, in kW.
    pub hp_kw_range: (f64, f64),
    /// Fraction of PV buses that also get a battery.
    pub batt_fraction_of_pv: f64,
    /// Battery rating in kW; per-scenario draw is uniform in [-rating, rating]
    /// (positive injects, negative charges).
    pub batt_kw: f64,
    /// Lagging power factor applied to all consumption; generation assets
    /// operate at unity.
    pub power_factor: f64,
    /// System base power for the per-unit conversion.
    pub s_base_mva: f64,
    pub seed: u64,
}

impl Default for ScenarioGenConfig {
    fn default() -> Self {
        ScenarioGenConfig {
            base_load_kw_range: (1.0, 6.0),
            load_scale_choices: vec![(0.5, 1.0), (1.0, 1.0), (2.5, 1.0)],
            pv_penetration: 0.40,
            pv_kwp_range: (5.0, 15.0),
            ev_penetration: 0.20,
            ev_kw: 11.0,
            hp_penetration: 0.15,
            hp_kw_range: (3.0, 6.0),
            batt_fraction_of_pv: 0.30,
            batt_kw: 5.0,
            power_factor: 0.95,
            s_base_mva: 1.0,
            seed: 0,
        }
    }
}

impl ScenarioGenConfig {
    fn validate(&self) -> Result<()> {
        check_range("base_load_kw_range", self.base_load_kw_range, false)?;
        check_range("pv_kwp_range", self.pv_kwp_range, false)?;
        check_range("hp_kw_range", self.hp_kw_range, false)?;
        for (name, p) in [
            ("pv_penetration", self.pv_penetration),
            ("ev_penetration", self.ev_penetration),
            ("hp_penetration", self.hp_penetration),
            ("batt_fraction_of_pv", self.batt_fraction_of_pv),
        ] {
            if !(p.is_finite() && (0.0..=1.0).contains(&p)) {
                return Err(Error::BadConfig(format!(
                    "{name} must lie in [0, 1], got {p}"
                )));
            }
        }
        if self.load_scale_choices.is_empty() {
            return Err(Error::BadConfig(
                "load_scale_choices must not be empty".to_string(),
            ));
        }
        let mut total_weight = 0.0;
        for &(scale, weight) in &self.load_scale_choices {
            if !(scale.is_finite() && scale >= 0.0 && weight.is_finite() && weight >= 0.0) {
                return Err(Error::BadConfig(format!(
                    "invalid load scale choice ({scale}, {weight})"
                )));
            }
            total_weight += weight;
        }
        if total_weight <= 0.0 {
            return Err(Error::BadConfig(
                "load_scale_choices weights must sum to a positive value".to_string(),
            ));
        }
        for (name, v) in [("ev_kw", self.ev_kw), ("batt_kw", self.batt_kw)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::BadConfig(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        if !(self.power_factor.is_finite()
            && self.power_factor > 0.0
            && self.power_factor <= 1.0)
        {
            return Err(Error::BadConfig(format!(
                "power_factor must lie in (0, 1], got {}",
                self.power_factor
            )));
        }
        if !(self.s_base_mva.is_finite() && self.s_base_mva > 0.0) {
            return Err(Error::BadConfig(format!(
                "s_base_mva must be positive, got {}",
                self.s_base_mva
            )));
        }
        Ok(())
    }
}

/// Per-bus DER installation, fixed for a (grid, config seed) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DerPlacement {
    /// Installed PV peak power per bus, if any.
    pub pv_kwp: Vec<Option<f64>>,
    /// Whether the bus hosts an EV charge point.
    pub ev: Vec<bool>,
    /// Installed heat-pump size per bus, if any.
    pub hp_kw: Vec<Option<f64>>,
    /// Whether the bus hosts a battery (only ever true on PV buses).
    pub battery: Vec<bool>,
}

/// One step of the splitmix64 mixer, used to derive independent stream
/// seeds from (seed, index) pairs.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn mix(a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(a) ^ b)
}

/// First 64 bits of the grid's content hash, for seed derivation.
fn grid_seed(grid: &RadialGrid) -> u64 {
    let hex = grid_hash(grid);
    u64::from_str_radix(&hex[..16], 16).expect("sha256 hex prefix is valid hex")
}

/// Uniform draw that tolerates degenerate (point) intervals.
fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.gen_range(lo..hi)
    } else {
        lo
    }
}

/// Knuth's product-of-uniforms Poisson sampler; fine for small means.
fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> usize {
    let limit = (-mean).exp();
    let mut k = 0usize;
    let mut product = 1.0;
    loop {
        product *= rng.gen::<f64>();
        if product <= limit {
            return k;
        }
        k += 1;
    }
}

/// Generates a random labeled tree rooted at the slack (bus 0).
///
/// Growth keeps a pool of open attachment slots; each node opens a
/// Poisson-distributed number of new slots when it joins, and each new
/// node attaches to one slot drawn uniformly (falling back to a uniform
/// existing node when the pool empties). Branch impedances are uniform
/// over the configured intervals.
pub fn gen_grid(config: &GridGenConfig) -> Result<RadialGrid> {
    config.validate()?;
    let n = config.n_buses;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut slots: Vec<usize> = Vec::new();
    let root_slots = poisson(&mut rng, config.branching).max(1);
    slots.extend(std::iter::repeat(0).take(root_slots));

    let mut branches = Vec::with_capacity(n - 1);
    for i in 1..n {
        let parent = if slots.is_empty() {
            rng.gen_range(0..i)
        } else {
            let pick = rng.gen_range(0..slots.len());
            slots.swap_remove(pick)
        };
        let r = uniform(&mut rng, config.r_range.0, config.r_range.1);
        let x = uniform(&mut rng, config.x_range.0, config.x_range.1);
        branches.push(Branch {
            from_bus: parent,
            to_bus: i,
            r,
            x,
        });
        let opened = poisson(&mut rng, config.branching);
        slots.extend(std::iter::repeat(i).take(opened));
    }

    let grid = RadialGrid {
        slack_id: 0,
        buses: (0..n)
            .map(|id| Bus {
                id,
                kind: if id == 0 { BusKind::Slack } else { BusKind::Pq },
                name: None,
            })
            .collect(),
        branches,
    };
    validate_grid(&grid)?;
    Ok(grid)
}

/// Draws the DER installation for a grid. Deterministic in the grid
/// content and `config.seed`; independent of `draw_index`.
pub fn der_placement(grid: &RadialGrid, config: &ScenarioGenConfig) -> Result<DerPlacement> {
    config.validate()?;
    let n = grid.n_buses();
    let mut rng = ChaCha8Rng::seed_from_u64(mix(config.seed, grid_seed(grid)));
    let mut placement = DerPlacement {
        pv_kwp: vec![None; n],
        ev: vec![false; n],
        hp_kw: vec![None; n],
        battery: vec![false; n],
    };
    for id in grid.pq_ids() {
        if rng.gen::<f64>() < config.pv_penetration {
            placement.pv_kwp[id] = Some(uniform(
                &mut rng,
                config.pv_kwp_range.0,
                config.pv_kwp_range.1,
            ));
        }
        if rng.gen::<f64>() < config.ev_penetration {
            placement.ev[id] = true;
        }
        if rng.gen::<f64>() < config.hp_penetration {
            placement.hp_kw[id] = Some(uniform(
                &mut rng,
                config.hp_kw_range.0,
                config.hp_kw_range.1,
            ));
        }
    }
    for id in grid.pq_ids() {
        if placement.pv_kwp[id].is_some() && rng.gen::<f64>() < config.batt_fraction_of_pv {
            placement.battery[id] = true;
        }
    }
    Ok(placement)
}

fn weighted_choice(rng: &mut ChaCha8Rng, choices: &[(f64, f64)]) -> f64 {
    let total: f64 = choices.iter().map(|&(_, w)| w).sum();
    let mut u = rng.gen::<f64>() * total;
    for &(scale, weight) in choices {
        u -= weight;
        if u < 0.0 {
            return scale;
        }
    }
    choices[choices.len() - 1].0
}

/// Draws injection scenario number `draw_index` for the grid.
///
/// Per load bus: base load × weighted scale, plus draws for each installed
/// asset — PV at a uniform fraction of peak, EV and heat pump uniform in
/// [0, rating], battery uniform in [-rating, rating]. Net active injection
/// is generation minus consumption in per-unit; reactive injection comes
/// from the consumption at the configured lagging power factor, with
/// generation at unity. Slack: 1.0 pu, 0 degrees, zero injection.
pub fn gen_scenario(
    grid: &RadialGrid,
    config: &ScenarioGenConfig,
    draw_index: usize,
) -> Result<Scenario> {
    gen_scenario_attempt(grid, config, draw_index, 0)
}

/// Like [`gen_scenario`] but with a redraw counter mixed into the stream,
/// used by [`build_dataset`] to replace samples the oracle rejects.
fn gen_scenario_attempt(
    grid: &RadialGrid,
    config: &ScenarioGenConfig,
    draw_index: usize,
    attempt: u64,
) -> Result<Scenario> {
    let placement = der_placement(grid, config)?;
    let n = grid.n_buses();
    let tan_phi = (1.0 / (config.power_factor * config.power_factor) - 1.0).sqrt();
    let kw_to_pu = 1.0 / (1000.0 * config.s_base_mva);

    let stream = mix(mix(config.seed, grid_seed(grid)), mix(draw_index as u64, attempt));
    let mut rng = ChaCha8Rng::seed_from_u64(stream);

    let mut scenario = Scenario::zero(n, 1.0, 0.0);
    for id in grid.pq_ids() {
        let base = uniform(
            &mut rng,
            config.base_load_kw_range.0,
            config.base_load_kw_range.1,
        );
        let scale = weighted_choice(&mut rng, &config.load_scale_choices);
        let mut consumption_kw = base * scale;
        let mut generation_kw = 0.0;
        if let Some(kwp) = placement.pv_kwp[id] {
            generation_kw += kwp * rng.gen::<f64>();
        }
        if placement.ev[id] {
            consumption_kw += uniform(&mut rng, 0.0, config.ev_kw);
        }
        if let Some(size) = placement.hp_kw[id] {
            consumption_kw += uniform(&mut rng, 0.0, size);
        }
        if placement.battery[id] {
            generation_kw += uniform(&mut rng, -config.batt_kw, config.batt_kw);
        }
        scenario.p_inj[id] = (generation_kw - consumption_kw) * kw_to_pu;
        scenario.q_inj[id] = -consumption_kw * tan_phi * kw_to_pu;
    }
    Ok(scenario)
}

/// Labeling options for [`build_dataset`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetOptions {
    pub solver: SolverOptions,
    /// How many replacement draws a sample gets when the oracle fails on
    /// it before the build errors out.
    pub max_retries: usize,
    /// Write-time bound re-checked on every emitted label.
    pub mismatch_tol: f64,
}

impl Default for DatasetOptions {
    fn default() -> Self {
        DatasetOptions {
            solver: SolverOptions::default(),
            max_retries: 5,
            mismatch_tol: 1e-8,
        }
    }
}

/// Generates and oracle-labels `n_samples` scenarios for the grid.
///
/// Each emitted truth is re-verified against the power-balance equations
/// at `mismatch_tol` before it is accepted. Samples the oracle cannot
/// label are redrawn up to the retry budget; exhausting it fails the
/// build. Output order is fixed by draw index.
pub fn build_dataset(
    grid: &RadialGrid,
    config: &ScenarioGenConfig,
    n_samples: usize,
    opts: &DatasetOptions,
) -> Result<Vec<LabeledSample>> {
    let ori = orient(grid)?;
    let mut samples = Vec::with_capacity(n_samples);
    for draw_index in 0..n_samples {
        samples.push(label_one(grid, &ori, config, draw_index, opts)?);
    }
    Ok(samples)
}

fn label_one(
    grid: &RadialGrid,
    ori: &Orientation,
    config: &ScenarioGenConfig,
    draw_index: usize,
    opts: &DatasetOptions,
) -> Result<LabeledSample> {
    let mut attempts = 0usize;
    loop {
        let scenario = gen_scenario_attempt(grid, config, draw_index, attempts as u64)?;
        attempts += 1;
        if let Ok(truth) = ac_oracle_solve(ori, &scenario, &opts.solver) {
            let worst = max_pq_mismatch(grid, &scenario, &truth)?;
            if worst < opts.mismatch_tol {
                return Ok(LabeledSample { scenario, truth });
            }
        }
        if attempts > opts.max_retries {
            return Err(Error::LabelingFailed {
                sample: draw_index,
                attempts,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::save_dataset;

    fn small_grid_config(n: usize, seed: u64) -> GridGenConfig {
        GridGenConfig {
            n_buses: n,
            seed,
            ..Default::default()
        }
    }

    /// A scenario config with every stochastic asset disabled and a fixed
    /// load, so injections are known in closed form.
    fn fixed_load_config(load_kw: f64) -> ScenarioGenConfig {
        ScenarioGenConfig {
            base_load_kw_range: (load_kw, load_kw),
            load_scale_choices: vec![(1.0, 1.0)],
            pv_penetration: 0.0,
            ev_penetration: 0.0,
            hp_penetration: 0.0,
            batt_fraction_of_pv: 0.0,
            ..Default::default()
        }
    }

    #[test]
    fn two_bus_grid_is_a_single_branch_from_the_slack() {
        let grid = gen_grid(&small_grid_config(2, 7)).unwrap();
        assert_eq!(grid.branches.len(), 1);
        assert_eq!(grid.branches[0].from_bus, 0);
        assert_eq!(grid.branches[0].to_bus, 1);
    }

    #[test]
    fn generated_grids_are_valid_trees_across_sizes_and_seeds() {
        for n in [2, 15, 59, 116, 129] {
            for seed in 0..4 {
                let config = small_grid_config(n, seed);
                let grid = gen_grid(&config).unwrap();
                assert_eq!(grid.branches.len(), n - 1);
                validate_grid(&grid).unwrap();
                for b in &grid.branches {
                    assert!(b.r >= config.r_range.0 && b.r < config.r_range.1);
                    assert!(b.x >= config.x_range.0 && b.x < config.x_range.1);
                }
            }
        }
    }

    #[test]
    fn sparse_branching_still_yields_valid_trees() {
        let config = GridGenConfig {
            n_buses: 40,
            branching: 0.2,
            ..Default::default()
        };
        let grid = gen_grid(&config).unwrap();
        validate_grid(&grid).unwrap();
    }

    #[test]
    fn grid_generation_is_deterministic_per_seed() {
        let a = gen_grid(&small_grid_config(50, 3)).unwrap();
        let b = gen_grid(&small_grid_config(50, 3)).unwrap();
        assert_eq!(a, b);
        let c = gen_grid(&small_grid_config(50, 4)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn invalid_grid_configs_are_rejected() {
        for config in [
            GridGenConfig {
                n_buses: 1,
                ..Default::default()
            },
            GridGenConfig {
                branching: 0.0,
                ..Default::default()
            },
            GridGenConfig {
                r_range: (0.0, 0.01),
                ..Default::default()
            },
            GridGenConfig {
                x_range: (0.02, 0.01),
                ..Default::default()
            },
        ] {
            assert!(matches!(gen_grid(&config), Err(Error::BadConfig(_))));
        }
    }

    #[test]
    fn fixed_load_without_der_gives_exact_per_unit_injections() {
        let grid = gen_grid(&small_grid_config(12, 1)).unwrap();
        let config = fixed_load_config(4.0);
        let scenario = gen_scenario(&grid, &config, 0).unwrap();
        let expected_p = -4.0 / 1000.0;
        let tan_phi = (1.0f64 / (0.95 * 0.95) - 1.0).sqrt();
        for id in grid.pq_ids() {
            assert!((scenario.p_inj[id] - expected_p).abs() < 1e-15);
            assert!((scenario.q_inj[id] - expected_p * tan_phi).abs() < 1e-15);
        }
        assert_eq!(scenario.p_inj[0], 0.0);
        assert_eq!(scenario.slack_vm, 1.0);
        assert_eq!(scenario.slack_va, 0.0);
    }

    #[test]
    fn full_pv_with_tiny_loads_can_reverse_the_flow() {
        let grid = gen_grid(&small_grid_config(30, 2)).unwrap();
        let config = ScenarioGenConfig {
            base_load_kw_range: (0.1, 0.2),
            load_scale_choices: vec![(1.0, 1.0)],
            pv_penetration: 1.0,
            pv_kwp_range: (15.0, 15.0),
            ev_penetration: 0.0,
            hp_penetration: 0.0,
            batt_fraction_of_pv: 0.0,
            ..Default::default()
        };
        let scenario = gen_scenario(&grid, &config, 0).unwrap();
        let positives = grid
            .pq_ids()
            .into_iter()
            .filter(|&id| scenario.p_inj[id] > 0.0)
            .count();
        assert!(positives > 0, "expected at least one exporting bus");
    }

    #[test]
    fn pure_load_buses_never_inject() {
        let grid = gen_grid(&small_grid_config(25, 9)).unwrap();
        let config = fixed_load_config(3.0);
        for draw in 0..20 {
            let s = gen_scenario(&grid, &config, draw).unwrap();
            for id in grid.pq_ids() {
                assert!(s.p_inj[id] <= 0.0);
                assert!(s.q_inj[id] <= 0.0);
            }
        }
    }

    #[test]
    fn pv_count_matches_penetration_in_expectation() {
        let grid = gen_grid(&small_grid_config(58, 11)).unwrap();
        assert_eq!(grid.pq_ids().len(), 57);
        let mut total = 0usize;
        let n_trials = 1000;
        for seed in 0..n_trials {
            let config = ScenarioGenConfig {
                seed,
                ..Default::default()
            };
            let placement = der_placement(&grid, &config).unwrap();
            total += placement.pv_kwp.iter().filter(|p| p.is_some()).count();
        }
        let mean = total as f64 / n_trials as f64;
        // Binomial(57, 0.4): mean 22.8, std of the mean ~0.12.
        assert!(
            (mean - 22.8).abs() < 0.5,
            "PV count mean {mean} too far from 22.8"
        );
    }

    #[test]
    fn placement_is_fixed_per_grid_and_seed_but_varies_with_both() {
        let grid_a = gen_grid(&small_grid_config(40, 5)).unwrap();
        let grid_b = gen_grid(&small_grid_config(40, 6)).unwrap();
        let config = ScenarioGenConfig::default();
        let p1 = der_placement(&grid_a, &config).unwrap();
        let p2 = der_placement(&grid_a, &config).unwrap();
        assert_eq!(p1, p2);
        let p3 = der_placement(&grid_b, &config).unwrap();
        assert_ne!(p1, p3);
        let other_seed = ScenarioGenConfig {
            seed: 99,
            ..Default::default()
        };
        let p4 = der_placement(&grid_a, &other_seed).unwrap();
        assert_ne!(p1, p4);
    }

    #[test]
    fn batteries_only_appear_on_pv_buses() {
        let grid = gen_grid(&small_grid_config(80, 13)).unwrap();
        let config = ScenarioGenConfig {
            batt_fraction_of_pv: 1.0,
            ..Default::default()
        };
        let placement = der_placement(&grid, &config).unwrap();
        for id in 0..80 {
            if placement.battery[id] {
                assert!(placement.pv_kwp[id].is_some());
            }
        }
        // With fraction 1.0, every PV bus has one.
        for id in grid.pq_ids() {
            assert_eq!(placement.battery[id], placement.pv_kwp[id].is_some());
        }
    }

    #[test]
    fn draws_differ_across_index_but_reproduce_per_index() {
        let grid = gen_grid(&small_grid_config(30, 21)).unwrap();
        let config = ScenarioGenConfig::default();
        let a0 = gen_scenario(&grid, &config, 0).unwrap();
        let a0_again = gen_scenario(&grid, &config, 0).unwrap();
        let a1 = gen_scenario(&grid, &config, 1).unwrap();
        assert_eq!(a0, a0_again);
        assert_ne!(a0, a1);
    }

    #[test]
    fn datasets_verify_and_reproduce_byte_identically() {
        let grid = gen_grid(&small_grid_config(15, 30)).unwrap();
        let config = ScenarioGenConfig::default();
        let opts = DatasetOptions::default();
        let a = build_dataset(&grid, &config, 20, &opts).unwrap();
        assert_eq!(a.len(), 20);
        for sample in &a {
            let worst = max_pq_mismatch(&grid, &sample.scenario, &sample.truth).unwrap();
            assert!(worst < 1e-8, "write-time mismatch {worst}");
        }
        let b = build_dataset(&grid, &config, 20, &opts).unwrap();
        let dir = std::env::temp_dir();
        let pa = dir.join(format!("radflow-ds-a-{}.jsonl", std::process::id()));
        let pb = dir.join(format!("radflow-ds-b-{}.jsonl", std::process::id()));
        save_dataset(&a, &pa).unwrap();
        save_dataset(&b, &pb).unwrap();
        assert_eq!(std::fs::read(&pa).unwrap(), std::fs::read(&pb).unwrap());
        std::fs::remove_file(&pa).ok();
        std::fs::remove_file(&pb).ok();
    }

    #[test]
    fn zero_load_zero_der_labels_are_flat() {
        let grid = gen_grid(&small_grid_config(10, 31)).unwrap();
        let config = fixed_load_config(0.0);
        let samples = build_dataset(&grid, &config, 3, &DatasetOptions::default()).unwrap();
        for s in &samples {
            for j in 0..10 {
                assert!((s.truth.vm[j] - 1.0).abs() < 1e-12);
                assert!(s.truth.va[j].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn impossible_loads_exhaust_the_retry_budget() {
        let grid = gen_grid(&small_grid_config(6, 32)).unwrap();
        let config = fixed_load_config(5.0e6); // 5 GW per house: no solution
        let err = build_dataset(&grid, &config, 2, &DatasetOptions::default()).unwrap_err();
        match err {
            Error::LabelingFailed { sample, attempts } => {
                assert_eq!(sample, 0);
                assert_eq!(attempts, 6);
            }
            other => panic!("expected LabelingFailed, got {other}"),
        }
    }

    #[test]
    fn invalid_scenario_configs_are_rejected() {
        let grid = gen_grid(&small_grid_config(5, 33)).unwrap();
        for config in [
            ScenarioGenConfig {
                pv_penetration: 1.5,
                ..Default::default()
            },
            ScenarioGenConfig {
                load_scale_choices: vec![],
                ..Default::default()
            },
            ScenarioGenConfig {
                load_scale_choices: vec![(1.0, 0.0)],
                ..Default::default()
            },
            ScenarioGenConfig {
                power_factor: 0.0,
                ..Default::default()
            },
            ScenarioGenConfig {
                s_base_mva: -1.0,
                ..Default::default()
            },
        ] {
            assert!(matches!(
                gen_scenario(&grid, &config, 0),
                Err(Error::BadConfig(_))
            ));
        }
    }

    #[test]
    fn config_files_round_trip_field_for_field() {
        let gc = GridGenConfig::default();
        let text = serde_json::to_string_pretty(&gc).unwrap();
        let back: GridGenConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(gc, back);

        let sc = ScenarioGenConfig::default();
        let text = serde_json::to_string_pretty(&sc).unwrap();
        let back: ScenarioGenConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(sc, back);
    }
}
