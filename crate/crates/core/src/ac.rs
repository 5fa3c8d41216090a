//! Newton-Raphson AC power flow for the AC comparison study.
//!
//! The AC variant of a network is a single-phase equivalent: every branch
//! carries `loop_factor * (R + jX)`, device powers are multiplied by
//! `power_scale` (the pole model stores half of each device), motors draw
//! reactive power at `load_power_factor`, the first voltage-controlled EEU is
//! the slack bus and every other EEU is a PV bus. With a loop factor and
//! power scale of 2, unity power factor and zero reactance this is
//! algebraically the DC pole model at twice the voltage.
//!
//! Bus powers are computed from branch flows `y (V_f - V_t)` rather than from
//! `Ybus V`, which keeps the mismatch well below 1 mW at 10 kV.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netmodel::{BranchId, BusId, BusKind, Network, NetworkDocument};

/// Convergence threshold on the largest real/reactive mismatch.
pub const DEFAULT_MISMATCH_TOL_W: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcConfig {
    #[serde(default = "default_frequency")]
    pub frequency_hz: f64,
    /// Slack and PV voltage setpoint.
    pub voltage_v: f64,
    #[serde(default = "one")]
    pub power_scale: f64,
    #[serde(default = "one")]
    pub loop_factor: f64,
    #[serde(default = "one")]
    pub load_power_factor: f64,
    pub pv_power_w: f64,
    pub pv_contingency_power_w: f64,
    /// Series reactance per conductor at `frequency_hz`; missing entries are 0.
    #[serde(default)]
    pub conductor_reactance_ohm_per_km: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bus_overrides: Vec<AcBusOverride>,
}

fn default_frequency() -> f64 {
    60.0
}

fn one() -> f64 {
    1.0
}

impl AcConfig {
    pub(crate) fn validate(&self, doc: &NetworkDocument) -> Result<(), String> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(format!("ac.{name} must be > 0, got {v}"))
            }
        };
        positive("voltage_v", self.voltage_v)?;
        positive("frequency_hz", self.frequency_hz)?;
        positive("power_scale", self.power_scale)?;
        positive("loop_factor", self.loop_factor)?;
        if !(self.load_power_factor > 0.0 && self.load_power_factor <= 1.0) {
            return Err(format!(
                "ac.load_power_factor must be in (0, 1], got {}",
                self.load_power_factor
            ));
        }
        for (name, x) in &self.conductor_reactance_ohm_per_km {
            if !doc.conductors.iter().any(|c| &c.name == name) {
                return Err(format!("ac reactance given for unknown conductor `{name}`"));
            }
            if !(*x >= 0.0 && x.is_finite()) {
                return Err(format!("ac reactance for `{name}` must be >= 0, got {x}"));
            }
        }
        for o in &self.bus_overrides {
            if !doc.buses.iter().any(|b| b.id == o.id) {
                return Err(format!("ac override references unknown bus {}", o.id));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AcBusKind {
    Slack,
    Pv,
    Pq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcBusOverride {
    pub id: BusId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<AcBusKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub voltage_v: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_w: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_var: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcBusSpec {
    pub id: BusId,
    pub kind: AcBusKind,
    pub voltage_setpoint_v: f64,
    /// Net injection, generation positive.
    pub p_w: f64,
    pub q_var: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcBranch {
    pub id: BranchId,
    pub from: BusId,
    pub to: BusId,
    pub r_ohm: f64,
    pub x_ohm: f64,
}

impl AcBranch {
    fn admittance(&self) -> Complex<f64> {
        Complex::new(1.0, 0.0) / Complex::new(self.r_ohm, self.x_ohm)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcStudy {
    pub buses: Vec<AcBusSpec>,
    pub branches: Vec<AcBranch>,
}

#[derive(Debug, Error, PartialEq)]
pub enum AcError {
    #[error("network has no `ac` section")]
    MissingConfig,
    #[error("no source bus available for the slack")]
    NoSlack,
    #[error("island {0:?} must contain exactly one slack bus")]
    SlackPerIsland(Vec<BusId>),
    #[error("DC-equivalent study needs exactly one voltage-controlled bus per island, island {0:?} has {1}")]
    DcEquivalent(Vec<BusId>, usize),
    #[error("singular Jacobian on iteration {iteration}; mismatch trace {trace:?}")]
    SingularJacobian { iteration: usize, trace: Vec<f64> },
    #[error("no convergence after {iterations} iterations; mismatch trace {trace:?}")]
    NotConverged { iterations: usize, trace: Vec<f64> },
}

/// Dispatch state of the AC study.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AcDispatch {
    /// A PV EEU has been lost: surviving PV buses run at the contingency power.
    pub source_lost: bool,
    /// Slack preference; empty means the network's own dispatch policy.
    pub slack_order: Vec<BusId>,
}

impl AcDispatch {
    /// Slack preference of a dispatch policy: the first voltage-controlled
    /// bus, then the fallback, then the remaining voltage-controlled buses.
    pub fn slack_order_of(policy: &crate::netmodel::DispatchPolicy) -> Vec<BusId> {
        let vc = &policy.voltage_controlled_buses;
        let mut order: Vec<BusId> = vc.first().copied().into_iter().collect();
        order.extend(policy.slack_fallback);
        order.extend(vc.iter().skip(1).copied());
        let mut seen = BTreeSet::new();
        order.retain(|b| seen.insert(*b));
        order
    }
}

impl AcStudy {
    /// AC study for a network with an `ac` section.
    ///
    /// Each island gets one slack: the first source in the slack order
    /// (see [`AcDispatch::slack_order_of`]), else its lowest-id source.
    /// Every other source is a PV bus.
    pub fn from_network(net: &Network, dispatch: AcDispatch) -> Result<AcStudy, AcError> {
        let cfg = net.ac_config().ok_or(AcError::MissingConfig)?;
        let order = if dispatch.slack_order.is_empty() {
            AcDispatch::slack_order_of(net.dispatch())
        } else {
            dispatch.slack_order.clone()
        };
        let is_source = |id: BusId| net.bus(id).is_some_and(|b| b.is_source());
        let mut slacks = BTreeSet::new();
        for comp in net.components() {
            let has_device = comp.iter().any(|&b| {
                net.bus(b)
                    .is_some_and(|b| !matches!(b.kind, BusKind::Junction {}))
            });
            let pick = order
                .iter()
                .copied()
                .find(|b| comp.contains(b) && is_source(*b))
                .or_else(|| comp.iter().copied().find(|&b| is_source(b)));
            match pick {
                Some(b) => {
                    slacks.insert(b);
                }
                None if has_device => return Err(AcError::NoSlack),
                None => {}
            }
        }
        let pv_power = if dispatch.source_lost {
            cfg.pv_contingency_power_w
        } else {
            cfg.pv_power_w
        };
        let q_ratio =
            (1.0 - cfg.load_power_factor * cfg.load_power_factor).sqrt() / cfg.load_power_factor;

        let mut buses: Vec<AcBusSpec> = net
            .buses()
            .iter()
            .map(|b| {
                if slacks.contains(&b.id) {
                    AcBusSpec {
                        id: b.id,
                        kind: AcBusKind::Slack,
                        voltage_setpoint_v: cfg.voltage_v,
                        p_w: 0.0,
                        q_var: 0.0,
                    }
                } else if b.is_source() {
                    AcBusSpec {
                        id: b.id,
                        kind: AcBusKind::Pv,
                        voltage_setpoint_v: cfg.voltage_v,
                        p_w: pv_power,
                        q_var: 0.0,
                    }
                } else {
                    let p = -cfg.power_scale * b.load_w();
                    AcBusSpec {
                        id: b.id,
                        kind: AcBusKind::Pq,
                        voltage_setpoint_v: cfg.voltage_v,
                        p_w: p,
                        q_var: p * q_ratio,
                    }
                }
            })
            .collect();
        for o in &cfg.bus_overrides {
            if let Some(spec) = buses.iter_mut().find(|s| s.id == o.id) {
                if let Some(kind) = o.kind {
                    spec.kind = kind;
                }
                if let Some(v) = o.voltage_v {
                    spec.voltage_setpoint_v = v;
                }
                if let Some(p) = o.p_w {
                    spec.p_w = p;
                }
                if let Some(q) = o.q_var {
                    spec.q_var = q;
                }
            }
        }

        let branches = net
            .branches()
            .iter()
            .map(|br| {
                let x_per_m = cfg
                    .conductor_reactance_ohm_per_km
                    .get(&br.conductor)
                    .copied()
                    .unwrap_or(0.0)
                    / 1000.0;
                AcBranch {
                    id: br.id,
                    from: br.from,
                    to: br.to,
                    r_ohm: cfg.loop_factor * net.branch_resistance(br),
                    x_ohm: cfg.loop_factor * x_per_m * br.length_m,
                }
            })
            .collect();
        Ok(AcStudy { buses, branches })
    }

    /// Purely resistive, unity power-factor image of a DC network: the
    /// voltage-controlled bus becomes the slack, constant-power buses are PQ
    /// with `Q = 0`. Its magnitudes must equal the DC solution.
    pub fn dc_equivalent(net: &Network) -> Result<AcStudy, AcError> {
        for comp in net.components() {
            let n_vc = comp
                .iter()
                .filter(|&&b| net.bus(b).is_some_and(|b| b.is_voltage_controlled()))
                .count();
            if n_vc != 1 {
                return Err(AcError::DcEquivalent(comp, n_vc));
            }
        }
        let buses = net
            .buses()
            .iter()
            .map(|b| match b.setpoint_v() {
                Some(v) => AcBusSpec {
                    id: b.id,
                    kind: AcBusKind::Slack,
                    voltage_setpoint_v: v,
                    p_w: 0.0,
                    q_var: 0.0,
                },
                None => AcBusSpec {
                    id: b.id,
                    kind: AcBusKind::Pq,
                    voltage_setpoint_v: b.nominal_v,
                    p_w: b.injection_w(),
                    q_var: 0.0,
                },
            })
            .collect();
        let branches = net
            .branches()
            .iter()
            .map(|br| AcBranch {
                id: br.id,
                from: br.from,
                to: br.to,
                r_ohm: net.branch_resistance(br),
                x_ohm: 0.0,
            })
            .collect();
        Ok(AcStudy { buses, branches })
    }

    fn check_slacks(&self) -> Result<(), AcError> {
        let mut adj: BTreeMap<BusId, Vec<BusId>> =
            self.buses.iter().map(|b| (b.id, Vec::new())).collect();
        for br in &self.branches {
            adj.entry(br.from).or_default().push(br.to);
            adj.entry(br.to).or_default().push(br.from);
        }
        let mut seen = BTreeSet::new();
        for &start in adj.keys() {
            if !seen.insert(start) {
                continue;
            }
            let mut comp = vec![start];
            let mut stack = vec![start];
            while let Some(b) = stack.pop() {
                for &n in &adj[&b] {
                    if seen.insert(n) {
                        comp.push(n);
                        stack.push(n);
                    }
                }
            }
            let slacks = self
                .buses
                .iter()
                .filter(|s| s.kind == AcBusKind::Slack && comp.contains(&s.id))
                .count();
            if slacks != 1 {
                comp.sort_unstable();
                return Err(AcError::SlackPerIsland(comp));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcOptions {
    pub mismatch_tol_w: f64,
    pub max_iterations: usize,
}

impl Default for AcOptions {
    fn default() -> Self {
        AcOptions {
            mismatch_tol_w: DEFAULT_MISMATCH_TOL_W,
            max_iterations: 30,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AcBranchCurrent {
    pub branch_id: BranchId,
    pub from: BusId,
    pub to: BusId,
    pub current_a: f64,
    /// Angle of the current entering the branch at its `to` terminal.
    pub angle_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcSolution {
    pub bus_ids: Vec<BusId>,
    pub vm_v: Vec<f64>,
    pub va_rad: Vec<f64>,
    pub p_injection_w: Vec<f64>,
    pub q_injection_var: Vec<f64>,
    pub branch_currents: Vec<AcBranchCurrent>,
    pub loss_w: f64,
    pub max_mismatch_w: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Max mismatch before each Newton step, then at the final point.
    pub trace: Vec<f64>,
}

impl AcSolution {
    fn pos(&self, bus: BusId) -> Option<usize> {
        self.bus_ids.iter().position(|&b| b == bus)
    }

    pub fn magnitude(&self, bus: BusId) -> Option<f64> {
        self.pos(bus).map(|i| self.vm_v[i])
    }

    pub fn angle(&self, bus: BusId) -> Option<f64> {
        self.pos(bus).map(|i| self.va_rad[i])
    }

    pub fn current(&self, from: BusId, to: BusId) -> Option<&AcBranchCurrent> {
        self.branch_currents
            .iter()
            .find(|c| (c.from == from && c.to == to) || (c.from == to && c.to == from))
    }

    pub fn max_current(&self) -> Option<&AcBranchCurrent> {
        self.branch_currents
            .iter()
            .fold(None, |acc: Option<&AcBranchCurrent>, c| match acc {
                Some(best) if best.current_a >= c.current_a => Some(best),
                _ => Some(c),
            })
    }
}

struct Prepared {
    n: usize,
    ybus: DMatrix<Complex<f64>>,
    /// (from index, to index, series admittance)
    edges: Vec<(usize, usize, Complex<f64>)>,
    p_spec: Vec<f64>,
    q_spec: Vec<f64>,
    /// indices whose angle is unknown (PV and PQ)
    theta_idx: Vec<usize>,
    /// indices whose magnitude is unknown (PQ)
    vm_idx: Vec<usize>,
}

fn prepare(study: &AcStudy) -> Prepared {
    let n = study.buses.len();
    let pos: BTreeMap<BusId, usize> = study
        .buses
        .iter()
        .enumerate()
        .map(|(i, b)| (b.id, i))
        .collect();
    let mut ybus = DMatrix::from_element(n, n, Complex::new(0.0, 0.0));
    let mut edges = Vec::with_capacity(study.branches.len());
    for br in &study.branches {
        let (f, t) = (pos[&br.from], pos[&br.to]);
        let y = br.admittance();
        ybus[(f, f)] += y;
        ybus[(t, t)] += y;
        ybus[(f, t)] -= y;
        ybus[(t, f)] -= y;
        edges.push((f, t, y));
    }
    let theta_idx = (0..n)
        .filter(|&i| study.buses[i].kind != AcBusKind::Slack)
        .collect();
    let vm_idx = (0..n)
        .filter(|&i| study.buses[i].kind == AcBusKind::Pq)
        .collect();
    Prepared {
        n,
        ybus,
        edges,
        p_spec: study.buses.iter().map(|b| b.p_w).collect(),
        q_spec: study.buses.iter().map(|b| b.q_var).collect(),
        theta_idx,
        vm_idx,
    }
}

fn injections(prep: &Prepared, v: &[Complex<f64>]) -> Vec<Complex<f64>> {
    let mut s = vec![Complex::new(0.0, 0.0); prep.n];
    for &(f, t, y) in &prep.edges {
        let i_ft = y * (v[f] - v[t]);
        s[f] += v[f] * i_ft.conj();
        s[t] -= v[t] * i_ft.conj();
    }
    s
}

fn mismatch(prep: &Prepared, s: &[Complex<f64>]) -> DVector<f64> {
    let mut f = Vec::with_capacity(prep.theta_idx.len() + prep.vm_idx.len());
    f.extend(prep.theta_idx.iter().map(|&i| prep.p_spec[i] - s[i].re));
    f.extend(prep.vm_idx.iter().map(|&i| prep.q_spec[i] - s[i].im));
    DVector::from_vec(f)
}

fn jacobian(prep: &Prepared, vm: &[f64], va: &[f64], s: &[Complex<f64>]) -> DMatrix<f64> {
    let (nt, nv) = (prep.theta_idx.len(), prep.vm_idx.len());
    let mut j = DMatrix::zeros(nt + nv, nt + nv);
    let g = |i: usize, k: usize| prep.ybus[(i, k)].re;
    let b = |i: usize, k: usize| prep.ybus[(i, k)].im;
    // dP_i/dtheta_k, dP_i/dV_k, dQ_i/dtheta_k, dQ_i/dV_k
    let dp_dth = |i: usize, k: usize| {
        if i == k {
            -s[i].im - b(i, i) * vm[i] * vm[i]
        } else {
            let t = va[i] - va[k];
            vm[i] * vm[k] * (g(i, k) * t.sin() - b(i, k) * t.cos())
        }
    };
    let dp_dv = |i: usize, k: usize| {
        if i == k {
            s[i].re / vm[i] + g(i, i) * vm[i]
        } else {
            let t = va[i] - va[k];
            vm[i] * (g(i, k) * t.cos() + b(i, k) * t.sin())
        }
    };
    let dq_dth = |i: usize, k: usize| {
        if i == k {
            s[i].re - g(i, i) * vm[i] * vm[i]
        } else {
            let t = va[i] - va[k];
            -vm[i] * vm[k] * (g(i, k) * t.cos() + b(i, k) * t.sin())
        }
    };
    let dq_dv = |i: usize, k: usize| {
        if i == k {
            s[i].im / vm[i] - b(i, i) * vm[i]
        } else {
            let t = va[i] - va[k];
            vm[i] * (g(i, k) * t.sin() - b(i, k) * t.cos())
        }
    };
    for (r, &i) in prep.theta_idx.iter().enumerate() {
        for (c, &k) in prep.theta_idx.iter().enumerate() {
            j[(r, c)] = dp_dth(i, k);
        }
        for (c, &k) in prep.vm_idx.iter().enumerate() {
            j[(r, nt + c)] = dp_dv(i, k);
        }
    }
    for (r, &i) in prep.vm_idx.iter().enumerate() {
        for (c, &k) in prep.theta_idx.iter().enumerate() {
            j[(nt + r, c)] = dq_dth(i, k);
        }
        for (c, &k) in prep.vm_idx.iter().enumerate() {
            j[(nt + r, nt + c)] = dq_dv(i, k);
        }
    }
    j
}

fn max_abs(x: &DVector<f64>) -> f64 {
    x.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

/// Full Newton-Raphson in polar form from a flat start (setpoint magnitude,
/// zero angle).
pub fn solve_newton_raphson(study: &AcStudy, opts: &AcOptions) -> Result<AcSolution, AcError> {
    study.check_slacks()?;
    let prep = prepare(study);
    let slack_v = study
        .buses
        .iter()
        .find(|b| b.kind == AcBusKind::Slack)
        .map(|b| b.voltage_setpoint_v)
        .unwrap_or(1.0);
    let mut vm: Vec<f64> = study
        .buses
        .iter()
        .map(|b| {
            if b.kind == AcBusKind::Pq {
                slack_v
            } else {
                b.voltage_setpoint_v
            }
        })
        .collect();
    let mut va = vec![0.0; prep.n];
    let nt = prep.theta_idx.len();
    let phasors = |vm: &[f64], va: &[f64]| -> Vec<Complex<f64>> {
        vm.iter()
            .zip(va)
            .map(|(&m, &a)| Complex::from_polar(m, a))
            .collect()
    };

    let mut trace = Vec::new();
    let mut iterations = 0;
    loop {
        let v = phasors(&vm, &va);
        let s = injections(&prep, &v);
        let f = mismatch(&prep, &s);
        let worst = max_abs(&f);
        trace.push(worst);
        if worst < opts.mismatch_tol_w {
            return Ok(finish(study, &prep, vm, va, s, worst, iterations, trace));
        }
        if iterations >= opts.max_iterations || !worst.is_finite() {
            return Err(AcError::NotConverged { iterations, trace });
        }
        iterations += 1;
        let jac = jacobian(&prep, &vm, &va, &s);
        let dx = jac
            .lu()
            .solve(&f)
            .filter(|dx| dx.iter().all(|x| x.is_finite()))
            .ok_or_else(|| AcError::SingularJacobian {
                iteration: iterations,
                trace: trace.clone(),
            })?;
        for (r, &i) in prep.theta_idx.iter().enumerate() {
            va[i] += dx[r];
        }
        for (r, &i) in prep.vm_idx.iter().enumerate() {
            vm[i] += dx[nt + r];
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    study: &AcStudy,
    prep: &Prepared,
    vm: Vec<f64>,
    va: Vec<f64>,
    s: Vec<Complex<f64>>,
    max_mismatch_w: f64,
    iterations: usize,
    trace: Vec<f64>,
) -> AcSolution {
    let v: Vec<Complex<f64>> = vm
        .iter()
        .zip(&va)
        .map(|(&m, &a)| Complex::from_polar(m, a))
        .collect();
    let mut loss_w = 0.0;
    let branch_currents = study
        .branches
        .iter()
        .zip(&prep.edges)
        .map(|(br, &(f, t, y))| {
            let i_ft = y * (v[f] - v[t]);
            loss_w += i_ft.norm_sqr() * br.r_ohm;
            AcBranchCurrent {
                branch_id: br.id,
                from: br.from,
                to: br.to,
                current_a: i_ft.norm(),
                angle_rad: (-i_ft).arg(),
            }
        })
        .collect();
    AcSolution {
        bus_ids: study.buses.iter().map(|b| b.id).collect(),
        vm_v: vm,
        va_rad: va,
        p_injection_w: s.iter().map(|x| x.re).collect(),
        q_injection_var: s.iter().map(|x| x.im).collect(),
        branch_currents,
        loss_w,
        max_mismatch_w,
        iterations,
        converged: true,
        trace,
    }
}

/// AC study of a network under normal dispatch.
pub fn solve_network_ac(net: &Network, opts: &AcOptions) -> Result<AcSolution, AcError> {
    let study = AcStudy::from_network(net, AcDispatch::default())?;
    solve_newton_raphson(&study, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dc::{solve_network, DcSolver, SolveOptions};
    use crate::fixtures::{two_bus, TWO_BUS_LOAD_W};

    #[test]
    fn two_bus_dc_limit_matches_analytic_root() {
        let net = two_bus(TWO_BUS_LOAD_W);
        let study = AcStudy::dc_equivalent(&net).unwrap();
        let sol = solve_newton_raphson(&study, &AcOptions::default()).unwrap();
        let exact = (5000.0 + (5000.0f64 * 5000.0 - 4.0 * 1000.0).sqrt()) / 2.0;
        let vm = sol.magnitude(2).unwrap();
        assert!(((vm - exact) / exact).abs() < 1e-9, "{vm} vs {exact}");
        assert!(sol.angle(2).unwrap().abs() < 1e-12);
        assert!(sol.max_mismatch_w < DEFAULT_MISMATCH_TOL_W);
        let dc = solve_network(&net, DcSolver::Zbus, &SolveOptions::default()).unwrap();
        assert!((sol.loss_w - dc.loss.per_pole_w).abs() < 1e-6);
    }

    #[test]
    fn missing_config_is_reported() {
        let net = two_bus(TWO_BUS_LOAD_W);
        assert_eq!(
            AcStudy::from_network(&net, AcDispatch::default()),
            Err(AcError::MissingConfig)
        );
    }

    #[test]
    fn overload_does_not_converge() {
        let net = two_bus(1.0e10);
        let study = AcStudy::dc_equivalent(&net).unwrap();
        let r = solve_newton_raphson(&study, &AcOptions::default());
        assert!(
            matches!(
                r,
                Err(AcError::NotConverged { .. }) | Err(AcError::SingularJacobian { .. })
            ),
            "{r:?}"
        );
    }

    #[test]
    fn slack_count_is_checked() {
        let net = two_bus(TWO_BUS_LOAD_W);
        let mut study = AcStudy::dc_equivalent(&net).unwrap();
        study.buses[0].kind = AcBusKind::Pq;
        assert!(matches!(
            solve_newton_raphson(&study, &AcOptions::default()),
            Err(AcError::SlackPerIsland(_))
        ));
    }
}
