//! N-1 contingency enumeration, post-contingency re-dispatch, circuit-breaker
//! failure (CBF) isolation and the worst-case summary.
//!
//! Semantics of the three case kinds:
//!
//! * `BranchLoss(id)` removes one cable.
//! * `BusbarLoss(id)` removes the bus together with every incident cable and
//!   disconnects the device attached to it (a motor is shed, an EEU is lost).
//! * `EeuLoss(id)` disconnects the EEU at the bus. The bus itself stays in
//!   service as a zero-injection node with its cables.
//!
//! After removal the network is split into islands. An island without a
//! voltage-controlled bus cannot be energized: its motors are shed and its
//! EEUs count as lost. A surviving island without any motor is dropped and
//! its EEUs count as lost as well. Whenever at least one EEU is lost, every
//! surviving constant-power EEU is re-dispatched to the contingency output
//! (scaled by the scenario load level).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::ac::{solve_newton_raphson, AcDispatch, AcOptions, AcStudy};
use crate::dc::{solve_network, DcSolver, LossBreakdown, SolveOptions};
use crate::netmodel::{
    BranchId, BusId, BusKind, ConductorSpec, DispatchState, Network, NetworkError, PowerRole,
};

/// Two loading percentages closer than this are reported as a tie.
pub const MLP_TIE_PP: f64 = 0.01;

#[derive(Debug, Error)]
pub enum ContingencyError {
    #[error("case refers to unknown {0}")]
    UnknownElement(String),
    #[error("invalid breaker reference: {0}")]
    InvalidBreaker(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(tag = "kind", content = "id", rename_all = "snake_case")]
pub enum ContingencyKind {
    BranchLoss(BranchId),
    BusbarLoss(BusId),
    EeuLoss(BusId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContingencyCase {
    pub kind: ContingencyKind,
    pub label: String,
}

impl fmt::Display for ContingencyCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

impl ContingencyCase {
    pub fn new(net: &Network, kind: ContingencyKind) -> Result<Self, ContingencyError> {
        let label = match kind {
            ContingencyKind::BranchLoss(id) => {
                let br = net
                    .branch(id)
                    .ok_or_else(|| ContingencyError::UnknownElement(format!("branch {id}")))?;
                format!("cable {}", br.label())
            }
            ContingencyKind::BusbarLoss(id) => {
                net.bus(id)
                    .ok_or_else(|| ContingencyError::UnknownElement(format!("bus {id}")))?;
                format!("busbar {id}")
            }
            ContingencyKind::EeuLoss(id) => {
                let bus = net
                    .bus(id)
                    .ok_or_else(|| ContingencyError::UnknownElement(format!("bus {id}")))?;
                if !bus.is_source() {
                    return Err(ContingencyError::UnknownElement(format!("EEU at bus {id}")));
                }
                format!("EEU at bus {id}")
            }
        };
        Ok(ContingencyCase { kind, label })
    }
}

/// One case per branch (by id), then one busbar loss per non-source bus,
/// then one EEU loss per source bus.
pub fn enumerate_cases(net: &Network) -> Vec<ContingencyCase> {
    let mut kinds: Vec<ContingencyKind> = net
        .branches()
        .iter()
        .map(|b| ContingencyKind::BranchLoss(b.id))
        .collect();
    let mut buses: Vec<_> = net.buses().iter().collect();
    buses.sort_by_key(|b| b.id);
    kinds.extend(
        buses
            .iter()
            .filter(|b| !b.is_source())
            .map(|b| ContingencyKind::BusbarLoss(b.id)),
    );
    kinds.extend(
        buses
            .iter()
            .filter(|b| b.is_source())
            .map(|b| ContingencyKind::EeuLoss(b.id)),
    );
    kinds.sort();
    kinds
        .into_iter()
        .map(|k| ContingencyCase::new(net, k).expect("enumerated elements exist"))
        .collect()
}

/// Network left after a contingency, restricted to its energized islands.
#[derive(Debug, Clone, PartialEq)]
pub struct PostContingency {
    pub network: Network,
    pub removed_branches: Vec<BranchId>,
    /// Motor buses that lost supply.
    pub shed_buses: Vec<BusId>,
    /// Per-pole shed load, watts.
    pub shed_load_w: f64,
    /// EEU buses out of service, including isolated ones.
    pub lost_sources: Vec<BusId>,
    pub redispatched: bool,
    /// Buses no longer energized (removed, shed or isolated).
    pub deenergized_buses: Vec<BusId>,
}

impl PostContingency {
    pub fn has_load(&self) -> bool {
        self.network
            .buses()
            .iter()
            .any(|b| b.is_load() && b.load_w() > 0.0)
    }
}

fn as_junction(kind: &mut BusKind) {
    *kind = BusKind::Junction {};
}

pub fn apply_case(
    net: &Network,
    case: &ContingencyCase,
) -> Result<PostContingency, ContingencyError> {
    let mut doc = net.to_document();
    let mut removed_branches = Vec::new();
    let mut lost_sources = BTreeSet::new();
    let mut shed = BTreeSet::new();
    let mut deenergized = BTreeSet::new();

    match case.kind {
        ContingencyKind::BranchLoss(id) => {
            net.branch(id)
                .ok_or_else(|| ContingencyError::UnknownElement(format!("branch {id}")))?;
            doc.branches.retain(|b| b.id != id);
            removed_branches.push(id);
        }
        ContingencyKind::BusbarLoss(id) => {
            let bus = net
                .bus(id)
                .ok_or_else(|| ContingencyError::UnknownElement(format!("bus {id}")))?;
            if bus.is_source() {
                lost_sources.insert(id);
            }
            if bus.is_load() {
                shed.insert(id);
            }
            removed_branches.extend(doc.branches.iter().filter(|b| b.touches(id)).map(|b| b.id));
            doc.branches.retain(|b| !b.touches(id));
            doc.buses.retain(|b| b.id != id);
            deenergized.insert(id);
        }
        ContingencyKind::EeuLoss(id) => {
            let bus = doc
                .buses
                .iter_mut()
                .find(|b| b.id == id)
                .ok_or_else(|| ContingencyError::UnknownElement(format!("bus {id}")))?;
            if !bus.is_source() {
                return Err(ContingencyError::UnknownElement(format!("EEU at bus {id}")));
            }
            as_junction(&mut bus.kind);
            lost_sources.insert(id);
        }
    }
    doc.dispatch
        .voltage_controlled_buses
        .retain(|b| !lost_sources.contains(b));
    doc.dispatch.slack_fallback = doc
        .dispatch
        .slack_fallback
        .filter(|b| !deenergized.contains(b));

    let cut = Network::from_parts_unchecked_connectivity(doc.clone())?;
    let mut drop = BTreeSet::new();
    for island in cut.components() {
        let has_vc = island
            .iter()
            .any(|&b| cut.bus(b).is_some_and(|b| b.is_voltage_controlled()));
        let has_load = island
            .iter()
            .any(|&b| cut.bus(b).is_some_and(|b| b.is_load()));
        if has_vc && has_load {
            continue;
        }
        for &b in &island {
            let bus = cut.bus(b).expect("island bus");
            if bus.is_load() {
                shed.insert(b);
            }
            if bus.is_source() {
                lost_sources.insert(b);
            }
            drop.insert(b);
        }
    }
    deenergized.extend(drop.iter().copied());
    let shed_load_w = shed
        .iter()
        .filter_map(|&b| net.bus(b))
        .map(|b| b.load_w())
        .sum();

    doc.buses.retain(|b| !drop.contains(&b.id));
    doc.branches.retain(|b| !drop.contains(&b.from));
    doc.dispatch
        .voltage_controlled_buses
        .retain(|b| !lost_sources.contains(b));
    doc.dispatch.slack_fallback = doc.dispatch.slack_fallback.filter(|b| !drop.contains(b));

    let redispatched = !lost_sources.is_empty();
    if redispatched {
        let power = doc
            .dispatch
            .generator_power_w(DispatchState::Contingency, doc.scenario.load_scale);
        for bus in &mut doc.buses {
            if let BusKind::ConstantPower {
                power_w,
                role: PowerRole::Generator,
            } = &mut bus.kind
            {
                *power_w = power;
            }
        }
    }

    Ok(PostContingency {
        network: Network::from_parts_unchecked_connectivity(doc)?,
        removed_branches,
        shed_buses: shed.into_iter().collect(),
        shed_load_w,
        lost_sources: lost_sources.into_iter().collect(),
        redispatched,
        deenergized_buses: deenergized.into_iter().collect(),
    })
}

/// Maximum loading percentage of a conductor carrying `current_a`.
pub fn mlp(current_a: f64, conductor: &ConductorSpec) -> f64 {
    current_a.abs() / conductor.ampacity_a * 100.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchLoading {
    pub branch_id: BranchId,
    pub label: String,
    pub conductor: String,
    pub current_a: f64,
    pub ampacity_a: f64,
    pub mlp_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", content = "detail", rename_all = "snake_case")]
pub enum CaseStatus {
    Converged,
    /// Converged on the energized remainder with part of the load shed.
    LoadShed,
    /// Nothing left to solve: every motor lost supply.
    Infeasible(String),
    Diverged(String),
}

impl CaseStatus {
    pub fn solved(&self) -> bool {
        matches!(self, CaseStatus::Converged | CaseStatus::LoadShed)
    }

    pub fn name(&self) -> &'static str {
        match self {
            CaseStatus::Converged => "converged",
            CaseStatus::LoadShed => "load shed",
            CaseStatus::Infeasible(_) => "infeasible",
            CaseStatus::Diverged(_) => "diverged",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseResult {
    /// `None` for the normal (intact) case.
    pub case: Option<ContingencyCase>,
    pub status: CaseStatus,
    pub iterations: usize,
    pub loadings: Vec<BranchLoading>,
    pub voltages: BTreeMap<BusId, f64>,
    pub min_voltage: Option<(BusId, f64)>,
    pub loss: Option<LossBreakdown>,
    /// System-wide shed load (all poles), watts.
    pub shed_load_w: f64,
    pub shed_buses: Vec<BusId>,
    pub lost_sources: Vec<BusId>,
    /// DC: per-pole `generation - load - loss`. AC: largest bus mismatch. Watts.
    pub power_balance_error_w: f64,
    /// Per-pole load served by the solved network, watts.
    pub served_load_w: f64,
}

impl CaseResult {
    pub fn label(&self) -> String {
        self.case
            .as_ref()
            .map_or_else(|| "normal".to_string(), |c| c.label.clone())
    }

    /// Highest loading in this case; the first branch by id on ties.
    pub fn max_loading(&self) -> Option<&BranchLoading> {
        self.loadings
            .iter()
            .fold(None, |best: Option<&BranchLoading>, l| match best {
                Some(b) if b.mlp_pct >= l.mlp_pct => Some(b),
                _ => Some(l),
            })
    }

    pub fn max_current(&self) -> Option<&BranchLoading> {
        self.loadings
            .iter()
            .fold(None, |best: Option<&BranchLoading>, l| match best {
                Some(b) if b.current_a >= l.current_a => Some(b),
                _ => Some(l),
            })
    }

    pub fn loading(&self, from: BusId, to: BusId) -> Option<&BranchLoading> {
        let a = format!("{from}-{to}");
        let b = format!("{to}-{from}");
        self.loadings.iter().find(|l| l.label == a || l.label == b)
    }
}

fn evaluate(
    case: Option<ContingencyCase>,
    net: &Network,
    shed: (&[BusId], f64),
    lost_sources: &[BusId],
    solver: DcSolver,
    opts: &SolveOptions,
) -> CaseResult {
    let poles = net.pole_count();
    let mut result = CaseResult {
        case,
        status: CaseStatus::Converged,
        iterations: 0,
        loadings: Vec::new(),
        voltages: BTreeMap::new(),
        min_voltage: None,
        loss: None,
        shed_load_w: shed.1 * poles,
        shed_buses: shed.0.to_vec(),
        lost_sources: lost_sources.to_vec(),
        power_balance_error_w: 0.0,
        served_load_w: net.total_load_w(),
    };
    if !net.buses().iter().any(|b| b.is_load()) && shed.1 > 0.0 {
        result.status = CaseStatus::Infeasible("no motor remains energized".into());
        return result;
    }
    match solve_network(net, solver, opts) {
        Ok(flow) if flow.solution.converged => {
            result.status = if shed.1 > 0.0 {
                CaseStatus::LoadShed
            } else {
                CaseStatus::Converged
            };
            result.iterations = flow.solution.iterations;
            result.loadings = flow
                .currents
                .iter()
                .map(|c| {
                    let br = net.branch(c.branch_id).expect("solved branch");
                    let cond = net.branch_conductor(br);
                    BranchLoading {
                        branch_id: c.branch_id,
                        label: br.label(),
                        conductor: cond.name.clone(),
                        current_a: c.current_a.abs(),
                        ampacity_a: cond.ampacity_a,
                        mlp_pct: mlp(c.current_a, cond),
                    }
                })
                .collect();
            result.min_voltage = flow.min_voltage();
            result.power_balance_error_w = flow.power_balance_error(net);
            result.loss = Some(flow.loss);
            result.voltages = flow.voltages;
        }
        Ok(flow) => {
            result.iterations = flow.solution.iterations;
            result.status = CaseStatus::Diverged(format!(
                "no convergence after {} iterations (last step {:.3e} V)",
                flow.solution.iterations, flow.solution.final_step
            ));
        }
        Err(e) => result.status = CaseStatus::Diverged(e.to_string()),
    }
    result
}

fn evaluate_ac(
    case: Option<ContingencyCase>,
    net: &Network,
    post: Option<&PostContingency>,
    slack_order: Vec<BusId>,
    opts: &AcOptions,
) -> CaseResult {
    let (shed_buses, shed_w, lost) = post.map_or((Vec::new(), 0.0, Vec::new()), |p| {
        (p.shed_buses.clone(), p.shed_load_w, p.lost_sources.clone())
    });
    let scale = net.ac_config().map_or(1.0, |c| c.power_scale);
    let mut result = CaseResult {
        case,
        status: CaseStatus::Converged,
        iterations: 0,
        loadings: Vec::new(),
        voltages: BTreeMap::new(),
        min_voltage: None,
        loss: None,
        shed_load_w: shed_w * scale,
        shed_buses,
        lost_sources: lost.clone(),
        power_balance_error_w: 0.0,
        served_load_w: net.total_load_w() * scale,
    };
    if !net.buses().iter().any(|b| b.is_load()) && shed_w > 0.0 {
        result.status = CaseStatus::Infeasible("no motor remains energized".into());
        return result;
    }
    let dispatch = AcDispatch {
        source_lost: !lost.is_empty(),
        slack_order,
    };
    let solved =
        AcStudy::from_network(net, dispatch).and_then(|study| solve_newton_raphson(&study, opts));
    match solved {
        Ok(sol) => {
            result.status = if shed_w > 0.0 {
                CaseStatus::LoadShed
            } else {
                CaseStatus::Converged
            };
            result.iterations = sol.iterations;
            result.loadings = sol
                .branch_currents
                .iter()
                .map(|c| {
                    let br = net.branch(c.branch_id).expect("solved branch");
                    let cond = net.branch_conductor(br);
                    BranchLoading {
                        branch_id: c.branch_id,
                        label: br.label(),
                        conductor: cond.name.clone(),
                        current_a: c.current_a,
                        ampacity_a: cond.ampacity_a,
                        mlp_pct: mlp(c.current_a, cond),
                    }
                })
                .collect();
            result.voltages = sol
                .bus_ids
                .iter()
                .copied()
                .zip(sol.vm_v.iter().copied())
                .collect();
            result.min_voltage =
                result
                    .voltages
                    .iter()
                    .map(|(&b, &v)| (b, v))
                    .fold(None, |acc, (b, v)| match acc {
                        Some((_, best)) if best <= v => acc,
                        _ => Some((b, v)),
                    });
            result.power_balance_error_w = sol.max_mismatch_w;
            result.loss = Some(LossBreakdown {
                per_pole_w: sol.loss_w,
                total_w: sol.loss_w,
            });
        }
        Err(e) => result.status = CaseStatus::Diverged(e.to_string()),
    }
    result
}

/// AC solve of the intact network.
pub fn run_ac_normal(net: &Network, opts: &AcOptions) -> CaseResult {
    evaluate_ac(
        None,
        net,
        None,
        AcDispatch::slack_order_of(net.dispatch()),
        opts,
    )
}

/// AC solve of one contingency.
pub fn run_ac_case(
    net: &Network,
    case: &ContingencyCase,
    opts: &AcOptions,
) -> Result<CaseResult, ContingencyError> {
    let post = apply_case(net, case)?;
    Ok(evaluate_ac(
        Some(case.clone()),
        &post.network,
        Some(&post),
        AcDispatch::slack_order_of(net.dispatch()),
        opts,
    ))
}

/// Solves one case on the DC network.
pub fn run_case(
    net: &Network,
    case: &ContingencyCase,
    solver: DcSolver,
    opts: &SolveOptions,
) -> Result<CaseResult, ContingencyError> {
    let post = apply_case(net, case)?;
    Ok(evaluate(
        Some(case.clone()),
        &post.network,
        (&post.shed_buses, post.shed_load_w),
        &post.lost_sources,
        solver,
        opts,
    ))
}

/// Solves the intact network.
pub fn run_normal(net: &Network, solver: DcSolver, opts: &SolveOptions) -> CaseResult {
    evaluate(None, net, (&[], 0.0), &[], solver, opts)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoadingLocation {
    pub label: String,
    pub branch_id: BranchId,
    /// Causing contingency; `None` for the normal case.
    pub case: Option<String>,
    pub mlp_pct: f64,
    pub current_a: f64,
}

/// Normal and worst-contingency loading of one conductor type.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConductorSummary {
    pub conductor: String,
    pub normal_mlp_pct: f64,
    pub normal_locations: Vec<LoadingLocation>,
    pub worst_mlp_pct: f64,
    pub worst_locations: Vec<LoadingLocation>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudySummary {
    pub total_loss_w: f64,
    /// One row per conductor in use, in catalog order.
    pub conductors: Vec<ConductorSummary>,
    pub normal_mlp_pct: f64,
    /// Every branch within [`MLP_TIE_PP`] of the normal-case maximum.
    pub normal_locations: Vec<LoadingLocation>,
    pub worst_mlp_pct: f64,
    /// Every (case, branch) pair within [`MLP_TIE_PP`] of the worst loading.
    pub worst_locations: Vec<LoadingLocation>,
    pub worst_min_voltage: Option<(String, BusId, f64)>,
    pub case_count: usize,
    pub failed_cases: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyReport {
    pub network: String,
    pub scenario: String,
    /// `zbus`, `monotone` or `newton-raphson`.
    pub solver: String,
    pub normal: CaseResult,
    pub cases: Vec<CaseResult>,
    pub summary: StudySummary,
}

fn maximizers<'a>(
    results: impl Iterator<Item = &'a CaseResult>,
    conductor: Option<&str>,
) -> (f64, Vec<LoadingLocation>) {
    let all: Vec<(&CaseResult, &BranchLoading)> = results
        .flat_map(|r| r.loadings.iter().map(move |l| (r, l)))
        .filter(|(_, l)| conductor.is_none_or(|c| l.conductor == c))
        .collect();
    let best = all.iter().map(|(_, l)| l.mlp_pct).fold(0.0, f64::max);
    let mut locs: Vec<LoadingLocation> = all
        .iter()
        .filter(|(_, l)| best - l.mlp_pct <= MLP_TIE_PP)
        .map(|(r, l)| LoadingLocation {
            label: l.label.clone(),
            branch_id: l.branch_id,
            case: r.case.as_ref().map(|c| c.label.clone()),
            mlp_pct: l.mlp_pct,
            current_a: l.current_a,
        })
        .collect();
    locs.sort_by(|a, b| {
        a.branch_id
            .cmp(&b.branch_id)
            .then_with(|| a.case.cmp(&b.case))
    });
    (best, locs)
}

/// Normal case plus every single contingency. Cases run in parallel; the
/// report order is the enumeration order regardless of scheduling.
pub fn run_study(net: &Network, solver: DcSolver, opts: &SolveOptions) -> StudyReport {
    let normal = run_normal(net, solver, opts);
    let cases: Vec<CaseResult> = enumerate_cases(net)
        .par_iter()
        .map(|case| run_case(net, case, solver, opts).expect("enumerated case applies"))
        .collect();
    assemble(net, solver.to_string(), normal, cases)
}

/// AC counterpart of [`run_study`]: same cases and island handling, with
/// PV EEUs at the contingency power whenever an EEU is lost and the slack
/// moved along the dispatch policy's slack order.
pub fn run_ac_study(net: &Network, opts: &AcOptions) -> StudyReport {
    let normal = run_ac_normal(net, opts);
    let cases: Vec<CaseResult> = enumerate_cases(net)
        .par_iter()
        .map(|case| run_ac_case(net, case, opts).expect("enumerated case applies"))
        .collect();
    assemble(net, "newton-raphson".into(), normal, cases)
}

fn assemble(
    net: &Network,
    solver: String,
    normal: CaseResult,
    cases: Vec<CaseResult>,
) -> StudyReport {
    let (normal_mlp_pct, normal_locations) = maximizers(std::iter::once(&normal), None);
    let (worst_mlp_pct, worst_locations) = maximizers(cases.iter(), None);
    let conductors = net
        .conductors()
        .iter()
        .filter(|c| net.branches().iter().any(|b| b.conductor == c.name))
        .map(|c| {
            let (normal_mlp_pct, normal_locations) =
                maximizers(std::iter::once(&normal), Some(&c.name));
            let (worst_mlp_pct, worst_locations) = maximizers(cases.iter(), Some(&c.name));
            ConductorSummary {
                conductor: c.name.clone(),
                normal_mlp_pct,
                normal_locations,
                worst_mlp_pct,
                worst_locations,
            }
        })
        .collect();
    let worst_min_voltage = cases
        .iter()
        .filter_map(|r| r.min_voltage.map(|(b, v)| (r.label(), b, v)))
        .fold(None, |acc: Option<(String, BusId, f64)>, x| match acc {
            Some(a) if a.2 <= x.2 => Some(a),
            _ => Some(x),
        });
    let summary = StudySummary {
        total_loss_w: normal.loss.map_or(f64::NAN, |l| l.total_w),
        conductors,
        normal_mlp_pct,
        normal_locations,
        worst_mlp_pct,
        worst_locations,
        worst_min_voltage,
        case_count: cases.len(),
        failed_cases: cases.iter().filter(|c| !c.status.solved()).count(),
    };
    StudyReport {
        network: net.name().to_string(),
        scenario: net.scenario().name.clone(),
        solver,
        normal,
        cases,
        summary,
    }
}

/// A breaker that fails to open, identified by its branch and the bus it sits at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BreakerRef {
    pub branch: BranchId,
    pub at_bus: BusId,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsolationResult {
    pub isolated: bool,
    /// Breakers that opened, in the order protection reached them.
    pub opened: Vec<BreakerRef>,
    /// Buses inside the final fault zone.
    pub fault_zone: Vec<BusId>,
    /// Buses still connected to a voltage-controlled EEU.
    pub energized_buses: Vec<BusId>,
    pub reason: Option<String>,
}

/// Breakers per branch: two breakers sit at both ends, a single breaker at
/// the `from` end.
fn has_breaker(net: &Network, branch: BranchId, at_bus: BusId) -> bool {
    net.branch(branch).is_some_and(|b| match b.breakers {
        2 => b.touches(at_bus),
        1 => b.from == at_bus,
        _ => false,
    })
}

/// Simulates protection for a fault on `faulted_bus` when one adjacent
/// breaker is stuck closed. Each breaker at the fault zone's boundary
/// opens; where the nearest breaker is stuck or missing, the breaker at the
/// far end of the branch opens instead, and where that is missing too the
/// far bus joins the fault zone and protection moves one step upstream.
/// The fault is isolated iff the final zone contains no EEU.
pub fn cbf_check(
    net: &Network,
    faulted_bus: BusId,
    stuck: BreakerRef,
) -> Result<IsolationResult, ContingencyError> {
    net.bus(faulted_bus)
        .ok_or_else(|| ContingencyError::UnknownElement(format!("bus {faulted_bus}")))?;
    let br = net.branch(stuck.branch).ok_or_else(|| {
        ContingencyError::InvalidBreaker(format!("branch {} does not exist", stuck.branch))
    })?;
    if !br.touches(faulted_bus) || stuck.at_bus != faulted_bus {
        return Err(ContingencyError::InvalidBreaker(format!(
            "breaker on {} at bus {} is not adjacent to faulted bus {faulted_bus}",
            br.label(),
            stuck.at_bus
        )));
    }
    if !has_breaker(net, stuck.branch, stuck.at_bus) {
        return Err(ContingencyError::InvalidBreaker(format!(
            "branch {} has no breaker at bus {}",
            br.label(),
            stuck.at_bus
        )));
    }

    let mut zone = BTreeSet::from([faulted_bus]);
    let mut open_branches = BTreeSet::new();
    let mut opened = Vec::new();
    let mut frontier = vec![faulted_bus];
    while let Some(bus) = frontier.pop() {
        for b in net.branches().iter().filter(|b| b.touches(bus)) {
            if open_branches.contains(&b.id) {
                continue;
            }
            let far = b.other_end(bus).expect("incident branch");
            if zone.contains(&far) {
                continue;
            }
            let near = BreakerRef {
                branch: b.id,
                at_bus: bus,
            };
            let far_ref = BreakerRef {
                branch: b.id,
                at_bus: far,
            };
            if near != stuck && has_breaker(net, b.id, bus) {
                opened.push(near);
                open_branches.insert(b.id);
            } else if has_breaker(net, b.id, far) {
                opened.push(far_ref);
                open_branches.insert(b.id);
            } else {
                zone.insert(far);
                frontier.push(far);
            }
        }
    }

    let sources_in_zone: Vec<BusId> = zone
        .iter()
        .copied()
        .filter(|&b| net.bus(b).is_some_and(|b| b.is_source()))
        .collect();
    let isolated = sources_in_zone.is_empty();

    let mut doc = net.to_document();
    doc.buses.retain(|b| !zone.contains(&b.id));
    doc.dispatch
        .voltage_controlled_buses
        .retain(|b| !zone.contains(b));
    doc.dispatch.slack_fallback = doc.dispatch.slack_fallback.filter(|b| !zone.contains(b));
    doc.branches.retain(|b| {
        !open_branches.contains(&b.id) && !zone.contains(&b.from) && !zone.contains(&b.to)
    });
    let rest = Network::from_parts_unchecked_connectivity(doc)?;
    let energized_buses: Vec<BusId> = rest
        .components()
        .into_iter()
        .filter(|c| {
            c.iter()
                .any(|&b| rest.bus(b).is_some_and(|b| b.is_voltage_controlled()))
        })
        .flatten()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    Ok(IsolationResult {
        isolated,
        opened,
        fault_zone: zone.into_iter().collect(),
        energized_buses,
        reason: (!isolated)
            .then(|| format!("EEU bus(es) {sources_in_zone:?} remain connected to the fault")),
    })
}
