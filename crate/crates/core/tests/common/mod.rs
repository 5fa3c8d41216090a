#![allow(dead_code)]

use std::collections::BTreeMap;

use mvdc_flow::admittance::build_partition;
use mvdc_flow::dc::{certificate, CertificateInterpretation, NormQ};
use mvdc_flow::fixtures::NetworkBuilder;
use mvdc_flow::netmodel::{BusId, Network};
use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

pub const NOMINAL_V: f64 = 5000.0;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Role {
    Source(f64),
    Load(f64),
    Generator(f64),
    Junction,
}

/// Recipe for a random network; `build(scale)` multiplies every
/// constant-power device by `scale`.
#[derive(Debug, Clone)]
pub struct RandomNetwork {
    roles: Vec<Role>,
    edges: Vec<(BusId, BusId, f64)>,
}

impl RandomNetwork {
    pub fn generate(seed: u64, n_buses: usize, max_sources: usize, radial: bool) -> Self {
        let mut rng = StdRng::seed_from_u64(seed);
        let n_sources = rng.random_range(1..=max_sources.min(n_buses - 1));
        let mut roles = Vec::with_capacity(n_buses);
        for i in 0..n_buses {
            let role = if i < n_sources {
                Role::Source(NOMINAL_V * rng.random_range(0.995..1.005))
            } else {
                match rng.random_range(0..10) {
                    0..=6 => Role::Load(rng.random_range(1.0e4..2.0e6)),
                    7 => Role::Generator(rng.random_range(1.0e4..5.0e5)),
                    _ => Role::Junction,
                }
            };
            roles.push(role);
        }
        // every network needs at least one load
        if !roles.iter().any(|r| matches!(r, Role::Load(_))) {
            roles[n_buses - 1] = Role::Load(rng.random_range(1.0e4..2.0e6));
        }
        // shuffle so sources are not always the lowest ids
        for i in (1..n_buses).rev() {
            let j = rng.random_range(0..=i);
            roles.swap(i, j);
        }
        let mut edges = Vec::new();
        for i in 2..=n_buses as BusId {
            let j = rng.random_range(1..i);
            edges.push((j, i, rng.random_range(0.001..0.05)));
        }
        if !radial {
            let extra = rng.random_range(0..=n_buses / 2);
            for _ in 0..extra {
                let a = rng.random_range(1..=n_buses as BusId);
                let b = rng.random_range(1..=n_buses as BusId);
                let dup = edges
                    .iter()
                    .any(|&(x, y, _)| (x, y) == (a, b) || (x, y) == (b, a));
                if a != b && !dup {
                    edges.push((a.min(b), a.max(b), rng.random_range(0.001..0.05)));
                }
            }
        }
        RandomNetwork { roles, edges }
    }

    pub fn source_count(&self) -> usize {
        self.roles
            .iter()
            .filter(|r| matches!(r, Role::Source(_)))
            .count()
    }

    pub fn build(&self, scale: f64) -> Network {
        let mut b = NetworkBuilder::new("random", NOMINAL_V).ampacity(1.0e5);
        for (i, role) in self.roles.iter().enumerate() {
            let id = i as BusId + 1;
            b = match *role {
                Role::Source(v) => b.source(id, v),
                Role::Load(p) => b.load(id, p * scale),
                Role::Generator(p) => b.generator(id, p * scale),
                Role::Junction => b.junction(id),
            };
        }
        for &(f, t, r) in &self.edges {
            b = b.branch(f, t, r);
        }
        b.build().expect("random network is valid")
    }

    /// Halves the loading until the existence certificate holds.
    pub fn certified(&self) -> Network {
        let mut scale = 1.0;
        for _ in 0..60 {
            let net = self.build(scale);
            let part = build_partition(&net).expect("connected");
            if certificate(&part, NormQ::Two, CertificateInterpretation::Yinv).holds {
                return net;
            }
            scale *= 0.5;
        }
        panic!("no certified loading found");
    }
}

/// Nodal equations assembled straight from the branch list:
/// `F_n(v) = sum_m g_nm (v_n - v_m) - P_n / v_n` over free buses.
pub struct NodalSystem {
    pub free: Vec<BusId>,
    fixed: BTreeMap<BusId, f64>,
    power: Vec<f64>,
    conductances: Vec<(BusId, BusId, f64)>,
}

impl NodalSystem {
    pub fn new(net: &Network) -> Self {
        let fixed: BTreeMap<BusId, f64> = net
            .buses()
            .iter()
            .filter_map(|b| b.setpoint_v().map(|v| (b.id, v)))
            .collect();
        let free: Vec<BusId> = net
            .buses()
            .iter()
            .filter(|b| !fixed.contains_key(&b.id))
            .map(|b| b.id)
            .collect();
        let power = free
            .iter()
            .map(|&id| net.bus(id).unwrap().injection_w())
            .collect();
        let conductances = net
            .branches()
            .iter()
            .map(|br| (br.from, br.to, 1.0 / net.branch_resistance(br)))
            .collect();
        NodalSystem {
            free,
            fixed,
            power,
            conductances,
        }
    }

    fn voltage(&self, v: &DVector<f64>, bus: BusId) -> f64 {
        match self.fixed.get(&bus) {
            Some(&x) => x,
            None => v[self.free.iter().position(|&b| b == bus).unwrap()],
        }
    }

    fn index(&self, bus: BusId) -> Option<usize> {
        self.free.iter().position(|&b| b == bus)
    }

    pub fn residual(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut f = DVector::zeros(self.free.len());
        for &(a, b, g) in &self.conductances {
            let i_ab = g * (self.voltage(v, a) - self.voltage(v, b));
            if let Some(i) = self.index(a) {
                f[i] += i_ab;
            }
            if let Some(j) = self.index(b) {
                f[j] -= i_ab;
            }
        }
        for i in 0..self.free.len() {
            f[i] -= self.power[i] / v[i];
        }
        f
    }

    fn jacobian(&self, v: &DVector<f64>) -> DMatrix<f64> {
        let n = self.free.len();
        let mut j = DMatrix::zeros(n, n);
        for &(a, b, g) in &self.conductances {
            let (ia, ib) = (self.index(a), self.index(b));
            if let Some(i) = ia {
                j[(i, i)] += g;
            }
            if let Some(k) = ib {
                j[(k, k)] += g;
            }
            if let (Some(i), Some(k)) = (ia, ib) {
                j[(i, k)] -= g;
                j[(k, i)] -= g;
            }
        }
        for i in 0..n {
            j[(i, i)] += self.power[i] / (v[i] * v[i]);
        }
        j
    }

    /// Damped Newton from `v0`; `None` if it stalls or leaves `v > 0`.
    pub fn newton(&self, v0: DVector<f64>) -> Option<DVector<f64>> {
        let mut v = v0;
        let mut f = self.residual(&v);
        for _ in 0..500 {
            let step = self.jacobian(&v).lu().solve(&f)?;
            if step.iter().zip(v.iter()).all(|(d, x)| d.abs() <= 1e-14 * x) {
                return Some(v);
            }
            let mut t = 1.0;
            loop {
                let trial = &v - &step * t;
                if trial.iter().all(|&x| x > 0.0) {
                    let ft = self.residual(&trial);
                    if ft.norm() < f.norm() || t < 1e-6 {
                        v = trial;
                        f = ft;
                        break;
                    }
                }
                t *= 0.5;
                if t < 1e-9 {
                    return None;
                }
            }
        }
        None
    }

    /// Every distinct root reached from `starts` random initial profiles.
    pub fn roots(&self, seed: u64, starts: usize) -> Vec<DVector<f64>> {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut found: Vec<DVector<f64>> = Vec::new();
        let n = self.free.len();
        let top = self.fixed.values().cloned().fold(0.0, f64::max);
        for k in 0..starts {
            // half the starts near nominal, half spread over six decades
            let v0 = if k % 2 == 0 {
                DVector::from_fn(n, |_, _| top * rng.random_range(0.3..1.2))
            } else {
                DVector::from_fn(n, |_, _| top * 10f64.powf(rng.random_range(-6.0..0.08)))
            };
            if let Some(root) = self.newton(v0) {
                if !found.iter().any(|r| (r - &root).amax() < 1e-6 * top) {
                    found.push(root);
                }
            }
        }
        found
    }

    /// The operable (high-voltage) root: the one with the largest minimum.
    pub fn high_voltage_root(&self, seed: u64, starts: usize) -> Option<DVector<f64>> {
        self.roots(seed, starts)
            .into_iter()
            .max_by(|a, b| a.min().total_cmp(&b.min()))
    }
}

pub fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| ((x - y) / y).abs())
        .fold(0.0, f64::max)
}
