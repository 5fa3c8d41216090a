//! Partitioned nodal admittance system for the DC solvers.
//!
//! Buses split into the voltage-controlled set (fixed voltage) and the
//! remaining `n_L` free buses. For the free buses
//!
//! ```text
//! Y v = k + diag(v)^-1 p
//! ```
//!
//! where `Y[n][n]` is the total admittance of every branch incident to `n`,
//! `Y[n][m] = -y_nm` between free buses, `k_n` collects `y_nk * v_k` over
//! voltage-controlled neighbours `k`, and `p` is net injected power.
//! Rows are ordered by ascending bus id.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::netmodel::{BusId, Network};

#[derive(Debug, Error, PartialEq)]
pub enum PartitionError {
    #[error("unenergized island: buses {0:?} have no path to a voltage-controlled bus")]
    UnenergizedIsland(Vec<BusId>),
    #[error("bus {bus}: voltage must be > 0, got {value}")]
    NonPositiveVoltage { bus: BusId, value: f64 },
    #[error("expected {expected} voltages, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmittancePartition {
    load_bus_ids: Vec<BusId>,
    load_bus_index: BTreeMap<BusId, usize>,
    y: DMatrix<f64>,
    k: DVector<f64>,
    p: DVector<f64>,
    v_fixed: BTreeMap<BusId, f64>,
    nominal: DVector<f64>,
}

impl AdmittancePartition {
    /// Number of free (non voltage-controlled) buses.
    pub fn n_load(&self) -> usize {
        self.load_bus_ids.len()
    }

    pub fn load_bus_ids(&self) -> &[BusId] {
        &self.load_bus_ids
    }

    pub fn index_of(&self, bus: BusId) -> Option<usize> {
        self.load_bus_index.get(&bus).copied()
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn k(&self) -> &DVector<f64> {
        &self.k
    }

    pub fn p(&self) -> &DVector<f64> {
        &self.p
    }

    pub fn v_fixed(&self) -> &BTreeMap<BusId, f64> {
        &self.v_fixed
    }

    /// Per-bus nominal voltages of the free buses (flat-start values).
    pub fn nominal(&self) -> &DVector<f64> {
        &self.nominal
    }

    /// Largest nominal voltage in the partition, falling back to the
    /// largest setpoint.
    pub fn nominal_scale(&self) -> f64 {
        self.nominal
            .iter()
            .chain(self.v_fixed.values())
            .copied()
            .fold(0.0, f64::max)
    }

    /// Same partition with `p` replaced. Used by property tests and
    /// load-sweep studies.
    pub fn with_power(&self, p: DVector<f64>) -> Self {
        assert_eq!(p.len(), self.n_load());
        AdmittancePartition { p, ..self.clone() }
    }

    /// Merges solved free-bus voltages with the fixed setpoints.
    pub fn full_voltages(&self, v: &[f64]) -> BTreeMap<BusId, f64> {
        let mut all = self.v_fixed.clone();
        all.extend(self.load_bus_ids.iter().copied().zip(v.iter().copied()));
        all
    }
}

/// Assembles `Y`, `k` and `p` for every non voltage-controlled bus.
pub fn build_partition(net: &Network) -> Result<AdmittancePartition, PartitionError> {
    let mut fixed = BTreeMap::new();
    let mut free = BTreeSet::new();
    for bus in net.buses() {
        match bus.setpoint_v() {
            Some(v) => {
                fixed.insert(bus.id, v);
            }
            None => {
                free.insert(bus.id);
            }
        }
    }
    check_energized(net, &fixed)?;

    let load_bus_ids: Vec<BusId> = free.into_iter().collect();
    let load_bus_index: BTreeMap<BusId, usize> = load_bus_ids
        .iter()
        .enumerate()
        .map(|(i, &b)| (b, i))
        .collect();
    let n = load_bus_ids.len();
    let mut y = DMatrix::zeros(n, n);
    let mut k = DVector::zeros(n);

    for br in net.branches() {
        let g = net.branch_admittance(br);
        for (a, b) in [(br.from, br.to), (br.to, br.from)] {
            let Some(&i) = load_bus_index.get(&a) else {
                continue;
            };
            y[(i, i)] += g;
            if let Some(&j) = load_bus_index.get(&b) {
                y[(i, j)] -= g;
            } else {
                k[i] += g * fixed[&b];
            }
        }
    }

    let p = DVector::from_iterator(
        n,
        load_bus_ids
            .iter()
            .map(|&b| net.bus(b).expect("bus").injection_w()),
    );
    let nominal = DVector::from_iterator(
        n,
        load_bus_ids
            .iter()
            .map(|&b| net.bus(b).expect("bus").nominal_v),
    );

    Ok(AdmittancePartition {
        load_bus_ids,
        load_bus_index,
        y,
        k,
        p,
        v_fixed: fixed,
        nominal,
    })
}

/// Every free bus must reach a voltage-controlled bus.
fn check_energized(net: &Network, fixed: &BTreeMap<BusId, f64>) -> Result<(), PartitionError> {
    for comp in net.components() {
        if !comp.iter().any(|b| fixed.contains_key(b)) {
            return Err(PartitionError::UnenergizedIsland(comp));
        }
    }
    Ok(())
}

/// KCL residual in amperes: `(Y v - k - p / v)_n`, i.e. the current leaving
/// bus `n` through its branches minus the current injected by its device.
/// Zero at an exact power-flow solution.
pub fn kcl_residual(part: &AdmittancePartition, v: &[f64]) -> Result<Vec<f64>, PartitionError> {
    if v.len() != part.n_load() {
        return Err(PartitionError::LengthMismatch {
            expected: part.n_load(),
            got: v.len(),
        });
    }
    for (i, &value) in v.iter().enumerate() {
        if !(value > 0.0) {
            return Err(PartitionError::NonPositiveVoltage {
                bus: part.load_bus_ids[i],
                value,
            });
        }
    }
    let vv = DVector::from_column_slice(v);
    let yv = &part.y * &vv;
    Ok((0..v.len())
        .map(|i| yv[i] - part.k[i] - part.p[i] / v[i])
        .collect())
}

impl fmt::Display for AdmittancePartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "admittance partition: n_L = {}, n_V = {}",
            self.n_load(),
            self.v_fixed.len()
        )?;
        for (bus, v) in &self.v_fixed {
            writeln!(f, "  fixed bus {bus}: {v} V")?;
        }
        for (i, bus) in self.load_bus_ids.iter().enumerate() {
            write!(
                f,
                "  row {i} (bus {bus}): k = {:.6e} A, p = {:.6e} W, Y =",
                self.k[i], self.p[i]
            )?;
            for j in 0..self.n_load() {
                let yij = self.y[(i, j)];
                if yij != 0.0 {
                    write!(f, " [{}]{:.6e}", self.load_bus_ids[j], yij)?;
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
