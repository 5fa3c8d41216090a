//! Network data model: buses, branches, conductor catalog, dispatch policy
//! and scenario, plus the JSON network-file schema and its validation.
//!
//! A bipolar ±V system is represented by a single pole at V carrying half
//! of every device's power (`pole_model = true`). Bus powers stored here are
//! therefore per-pole values; reported losses are doubled back to the whole
//! system by [`Network::pole_count`].

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ac::AcConfig;

pub type BusId = u32;
pub type BranchId = u32;

const ARCHITECTURE1_JSON: &str = include_str!("../data/architecture1.json");

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bus {id}: {rule}")]
    Bus { id: BusId, rule: String },
    #[error("branch {id}: {rule}")]
    Branch { id: BranchId, rule: String },
    #[error("branch {branch} references unknown bus {bus}")]
    DanglingBus { branch: BranchId, bus: BusId },
    #[error("conductor {name}: {rule}")]
    Conductor { name: String, rule: String },
    #[error("dispatch: {0}")]
    Dispatch(String),
    #[error("scenario: {0}")]
    Scenario(String),
    #[error("network is disconnected: buses {0:?} are not reachable from bus {1}")]
    Disconnected(Vec<BusId>, BusId),
    #[error("no voltage-controlled bus in a network carrying constant-power buses")]
    NoVoltageReference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerRole {
    Generator,
    Load,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum BusKind {
    VoltageControlled {
        setpoint_v: f64,
    },
    /// `power_w` is a magnitude; the sign comes from `role`.
    ConstantPower {
        power_w: f64,
        role: PowerRole,
    },
    Junction {},
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: BusId,
    pub name: String,
    #[serde(flatten)]
    pub kind: BusKind,
    pub nominal_v: f64,
}

impl Bus {
    /// Net injected power in watts: generation positive, load negative.
    pub fn injection_w(&self) -> f64 {
        match self.kind {
            BusKind::ConstantPower {
                power_w,
                role: PowerRole::Generator,
            } => power_w,
            BusKind::ConstantPower {
                power_w,
                role: PowerRole::Load,
            } => -power_w,
            _ => 0.0,
        }
    }

    pub fn is_voltage_controlled(&self) -> bool {
        matches!(self.kind, BusKind::VoltageControlled { .. })
    }

    pub fn is_load(&self) -> bool {
        matches!(
            self.kind,
            BusKind::ConstantPower {
                role: PowerRole::Load,
                ..
            }
        )
    }

    pub fn is_generator(&self) -> bool {
        matches!(
            self.kind,
            BusKind::ConstantPower {
                role: PowerRole::Generator,
                ..
            }
        )
    }

    /// EEU buses: voltage-controlled or constant-power generators.
    pub fn is_source(&self) -> bool {
        self.is_voltage_controlled() || self.is_generator()
    }

    pub fn setpoint_v(&self) -> Option<f64> {
        match self.kind {
            BusKind::VoltageControlled { setpoint_v } => Some(setpoint_v),
            _ => None,
        }
    }

    pub fn load_w(&self) -> f64 {
        if self.is_load() {
            -self.injection_w()
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    /// EEU-to-busbar cables.
    Eeu,
    /// Busbar-to-motor cables.
    Feeder,
    /// Anything else (busbar-to-busbar ties).
    Interconnect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TierFilter {
    Only(Tier),
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub id: BranchId,
    pub from: BusId,
    pub to: BusId,
    pub length_m: f64,
    pub conductor: String,
    /// Circuit breakers on this branch: 2 = both ends, 1 = `from` end only.
    pub breakers: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tier: Option<Tier>,
}

impl Branch {
    pub fn other_end(&self, bus: BusId) -> Option<BusId> {
        if bus == self.from {
            Some(self.to)
        } else if bus == self.to {
            Some(self.from)
        } else {
            None
        }
    }

    pub fn touches(&self, bus: BusId) -> bool {
        self.from == bus || self.to == bus
    }

    /// `from-to` label as printed in result tables.
    pub fn label(&self) -> String {
        format!("{}-{}", self.from, self.to)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConductorSpec {
    pub name: String,
    pub r_ohm_per_km: f64,
    pub ampacity_a: f64,
}

impl ConductorSpec {
    pub fn resistance_per_m(&self) -> f64 {
        self.r_ohm_per_km / 1000.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchPolicy {
    /// Per-pole output of each constant-power EEU with all EEUs in service.
    pub normal_cp_generator_power_w: f64,
    /// Per-pole output of each surviving constant-power EEU after an EEU loss.
    pub contingency_cp_generator_power_w: f64,
    pub voltage_controlled_buses: Vec<BusId>,
    /// AC study only: slack bus used when the first voltage-controlled bus is lost.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slack_fallback: Option<BusId>,
}

impl DispatchPolicy {
    /// Constant-power generator output for the given state, scaled with the
    /// scenario load level.
    pub fn generator_power_w(&self, state: DispatchState, load_scale: f64) -> f64 {
        let base = match state {
            DispatchState::Normal => self.normal_cp_generator_power_w,
            DispatchState::Contingency => self.contingency_cp_generator_power_w,
        };
        base * load_scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DispatchState {
    Normal,
    Contingency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub load_scale: f64,
}

impl Scenario {
    pub const CRUISE_SCALE: f64 = 0.3;

    pub fn takeoff() -> Self {
        Scenario {
            name: "takeoff".into(),
            load_scale: 1.0,
        }
    }

    pub fn cruise() -> Self {
        Scenario {
            name: "cruise".into(),
            load_scale: Self::CRUISE_SCALE,
        }
    }

    pub fn custom(load_scale: f64) -> Self {
        Self::from_scale(load_scale)
    }

    /// Names the well-known scales, everything else is `custom`.
    pub fn from_scale(load_scale: f64) -> Self {
        if load_scale == 1.0 {
            Self::takeoff()
        } else if load_scale == Self::CRUISE_SCALE {
            Self::cruise()
        } else {
            Scenario {
                name: "custom".into(),
                load_scale,
            }
        }
    }

    /// Parses `takeoff`, `cruise` or a bare positive number.
    pub fn parse(text: &str) -> Result<Self, NetworkError> {
        match text.trim().to_ascii_lowercase().as_str() {
            "takeoff" => Ok(Self::takeoff()),
            "cruise" => Ok(Self::cruise()),
            other => {
                let scale: f64 = other
                    .parse()
                    .map_err(|_| NetworkError::Scenario(format!("unknown scenario `{text}`")))?;
                if !(scale > 0.0 && scale.is_finite()) {
                    return Err(NetworkError::Scenario(format!(
                        "load_scale must be > 0, got {scale}"
                    )));
                }
                Ok(Self::custom(scale))
            }
        }
    }
}

impl Default for Scenario {
    fn default() -> Self {
        Self::takeoff()
    }
}

/// On-disk network document. Field order here is the file's key order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDocument {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
    #[serde(default = "default_pole_model")]
    pub pole_model: bool,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub conductors: Vec<ConductorSpec>,
    pub dispatch: DispatchPolicy,
    #[serde(default)]
    pub scenario: Scenario,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ac: Option<AcConfig>,
}

fn default_pole_model() -> bool {
    true
}

/// A validated, immutable network. Every mutating operation returns a new value.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    doc: NetworkDocument,
    bus_pos: HashMap<BusId, usize>,
    branch_pos: HashMap<BranchId, usize>,
    conductor_pos: HashMap<String, usize>,
}

impl Network {
    /// Validates a document. Connectivity is required: contingency
    /// remainders go through [`Network::from_parts_unchecked_connectivity`].
    pub fn from_document(doc: NetworkDocument) -> Result<Self, NetworkError> {
        let net = Self::index(doc)?;
        net.check_connected()?;
        net.check_voltage_reference()?;
        Ok(net)
    }

    /// Same element checks as [`Network::from_document`] without requiring a
    /// connected graph. Used for post-contingency networks where islanding
    /// is part of the result.
    pub(crate) fn from_parts_unchecked_connectivity(
        doc: NetworkDocument,
    ) -> Result<Self, NetworkError> {
        Self::index(doc)
    }

    fn index(doc: NetworkDocument) -> Result<Self, NetworkError> {
        let mut conductor_pos = HashMap::new();
        for (i, c) in doc.conductors.iter().enumerate() {
            if conductor_pos.insert(c.name.clone(), i).is_some() {
                return Err(NetworkError::Conductor {
                    name: c.name.clone(),
                    rule: "duplicate conductor name".into(),
                });
            }
            if !(c.r_ohm_per_km > 0.0 && c.r_ohm_per_km.is_finite()) {
                return Err(NetworkError::Conductor {
                    name: c.name.clone(),
                    rule: format!("resistance must be > 0, got {} ohm/km", c.r_ohm_per_km),
                });
            }
            if !(c.ampacity_a > 0.0 && c.ampacity_a.is_finite()) {
                return Err(NetworkError::Conductor {
                    name: c.name.clone(),
                    rule: format!("ampacity must be > 0, got {} A", c.ampacity_a),
                });
            }
        }

        let mut bus_pos = HashMap::new();
        for (i, b) in doc.buses.iter().enumerate() {
            if bus_pos.insert(b.id, i).is_some() {
                return Err(NetworkError::Bus {
                    id: b.id,
                    rule: "duplicate bus id".into(),
                });
            }
            if !(b.nominal_v > 0.0 && b.nominal_v.is_finite()) {
                return Err(NetworkError::Bus {
                    id: b.id,
                    rule: format!("nominal voltage must be > 0, got {}", b.nominal_v),
                });
            }
            match b.kind {
                BusKind::VoltageControlled { setpoint_v }
                    if !(setpoint_v > 0.0 && setpoint_v.is_finite()) =>
                {
                    return Err(NetworkError::Bus {
                        id: b.id,
                        rule: format!("setpoint must be > 0, got {setpoint_v}"),
                    });
                }
                BusKind::ConstantPower { power_w, .. }
                    if !(power_w >= 0.0 && power_w.is_finite()) =>
                {
                    return Err(NetworkError::Bus {
                        id: b.id,
                        rule: format!(
                            "constant power must be a finite magnitude >= 0, got {power_w}"
                        ),
                    });
                }
                _ => {}
            }
        }

        let mut branch_pos = HashMap::new();
        for (i, br) in doc.branches.iter().enumerate() {
            if branch_pos.insert(br.id, i).is_some() {
                return Err(NetworkError::Branch {
                    id: br.id,
                    rule: "duplicate branch id".into(),
                });
            }
            for end in [br.from, br.to] {
                if !bus_pos.contains_key(&end) {
                    return Err(NetworkError::DanglingBus {
                        branch: br.id,
                        bus: end,
                    });
                }
            }
            if br.from == br.to {
                return Err(NetworkError::Branch {
                    id: br.id,
                    rule: "self-loop (from == to)".into(),
                });
            }
            if !(br.length_m > 0.0 && br.length_m.is_finite()) {
                return Err(NetworkError::Branch {
                    id: br.id,
                    rule: format!("length must be > 0, got {} m", br.length_m),
                });
            }
            if !conductor_pos.contains_key(&br.conductor) {
                return Err(NetworkError::Branch {
                    id: br.id,
                    rule: format!("unknown conductor `{}`", br.conductor),
                });
            }
            if br.breakers > 2 {
                return Err(NetworkError::Branch {
                    id: br.id,
                    rule: format!("at most 2 breakers, got {}", br.breakers),
                });
            }
        }

        let d = &doc.dispatch;
        if !(d.normal_cp_generator_power_w >= 0.0 && d.normal_cp_generator_power_w.is_finite()) {
            return Err(NetworkError::Dispatch(
                "normal generator power must be >= 0".into(),
            ));
        }
        if !(d.contingency_cp_generator_power_w >= d.normal_cp_generator_power_w) {
            return Err(NetworkError::Dispatch(format!(
                "contingency generator power {} W is below normal {} W",
                d.contingency_cp_generator_power_w, d.normal_cp_generator_power_w
            )));
        }
        for id in d
            .voltage_controlled_buses
            .iter()
            .chain(d.slack_fallback.iter())
        {
            if !bus_pos.contains_key(id) {
                return Err(NetworkError::Dispatch(format!("bus {id} does not exist")));
            }
        }
        if !(doc.scenario.load_scale > 0.0 && doc.scenario.load_scale.is_finite()) {
            return Err(NetworkError::Scenario(format!(
                "load_scale must be > 0, got {}",
                doc.scenario.load_scale
            )));
        }
        if let Some(ac) = &doc.ac {
            ac.validate(&doc).map_err(NetworkError::Schema)?;
        }

        Ok(Network {
            doc,
            bus_pos,
            branch_pos,
            conductor_pos,
        })
    }

    fn check_connected(&self) -> Result<(), NetworkError> {
        let comps = self.components();
        if comps.len() > 1 {
            let root = comps[0][0];
            let unreachable: Vec<BusId> = comps[1..].iter().flatten().copied().collect();
            return Err(NetworkError::Disconnected(unreachable, root));
        }
        Ok(())
    }

    fn check_voltage_reference(&self) -> Result<(), NetworkError> {
        let has_cp = self
            .buses()
            .iter()
            .any(|b| matches!(b.kind, BusKind::ConstantPower { .. }));
        if has_cp && !self.buses().iter().any(Bus::is_voltage_controlled) {
            return Err(NetworkError::NoVoltageReference);
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.doc.name
    }

    pub fn notes(&self) -> Option<&str> {
        self.doc.notes.as_deref()
    }

    pub fn pole_model(&self) -> bool {
        self.doc.pole_model
    }

    /// 2 for the bipolar pole model, 1 otherwise.
    pub fn pole_count(&self) -> f64 {
        if self.doc.pole_model {
            2.0
        } else {
            1.0
        }
    }

    pub fn buses(&self) -> &[Bus] {
        &self.doc.buses
    }

    pub fn branches(&self) -> &[Branch] {
        &self.doc.branches
    }

    pub fn conductors(&self) -> &[ConductorSpec] {
        &self.doc.conductors
    }

    pub fn dispatch(&self) -> &DispatchPolicy {
        &self.doc.dispatch
    }

    pub fn scenario(&self) -> &Scenario {
        &self.doc.scenario
    }

    pub fn ac_config(&self) -> Option<&AcConfig> {
        self.doc.ac.as_ref()
    }

    pub fn bus(&self, id: BusId) -> Option<&Bus> {
        self.bus_pos.get(&id).map(|&i| &self.doc.buses[i])
    }

    pub fn branch(&self, id: BranchId) -> Option<&Branch> {
        self.branch_pos.get(&id).map(|&i| &self.doc.branches[i])
    }

    pub fn conductor(&self, name: &str) -> Option<&ConductorSpec> {
        self.conductor_pos
            .get(name)
            .map(|&i| &self.doc.conductors[i])
    }

    pub fn branch_conductor(&self, br: &Branch) -> &ConductorSpec {
        // validated at construction
        self.conductor(&br.conductor)
            .expect("branch conductor exists")
    }

    /// Series resistance in ohms.
    pub fn branch_resistance(&self, br: &Branch) -> f64 {
        br.length_m * self.branch_conductor(br).resistance_per_m()
    }

    pub fn branch_admittance(&self, br: &Branch) -> f64 {
        1.0 / self.branch_resistance(br)
    }

    /// Tier of a branch: explicit tag, else derived from endpoint kinds.
    pub fn branch_tier(&self, br: &Branch) -> Tier {
        if let Some(t) = br.tier {
            return t;
        }
        let ends = [self.bus(br.from), self.bus(br.to)];
        if ends.iter().flatten().any(|b| b.is_source()) {
            Tier::Eeu
        } else if ends.iter().flatten().any(|b| b.is_load()) {
            Tier::Feeder
        } else {
            Tier::Interconnect
        }
    }

    pub fn degree(&self, bus: BusId) -> usize {
        self.branches().iter().filter(|b| b.touches(bus)).count()
    }

    pub fn neighbors(&self, bus: BusId) -> BTreeSet<BusId> {
        self.branches()
            .iter()
            .filter_map(|b| b.other_end(bus))
            .collect()
    }

    /// Connected components as sorted bus-id lists, ordered by smallest id.
    pub fn components(&self) -> Vec<Vec<BusId>> {
        let mut adj: BTreeMap<BusId, Vec<BusId>> =
            self.buses().iter().map(|b| (b.id, Vec::new())).collect();
        for br in self.branches() {
            adj.get_mut(&br.from).expect("validated").push(br.to);
            adj.get_mut(&br.to).expect("validated").push(br.from);
        }
        let mut seen = BTreeSet::new();
        let mut comps = Vec::new();
        for &start in adj.keys() {
            if seen.contains(&start) {
                continue;
            }
            let mut comp = Vec::new();
            let mut stack = vec![start];
            seen.insert(start);
            while let Some(b) = stack.pop() {
                comp.push(b);
                for &n in &adj[&b] {
                    if seen.insert(n) {
                        stack.push(n);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps
    }

    pub fn total_load_w(&self) -> f64 {
        self.buses().iter().map(Bus::load_w).sum()
    }

    pub fn to_document(&self) -> NetworkDocument {
        self.doc.clone()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.doc).expect("network serializes")
    }

    /// Rebuild with a modified document, re-running full validation.
    pub fn with_document(
        &self,
        f: impl FnOnce(&mut NetworkDocument),
    ) -> Result<Network, NetworkError> {
        let mut doc = self.doc.clone();
        f(&mut doc);
        Network::from_document(doc)
    }

    /// Reassign conductors by tier, e.g. `("Mazama", "Poppy")`.
    pub fn with_conductors(
        &self,
        eeu_tier: &str,
        feeder_tier: &str,
    ) -> Result<Network, NetworkError> {
        for name in [eeu_tier, feeder_tier] {
            if self.conductor(name).is_none() {
                return Err(NetworkError::Conductor {
                    name: name.into(),
                    rule: "not in catalog".into(),
                });
            }
        }
        let tiers: Vec<Tier> = self
            .branches()
            .iter()
            .map(|b| self.branch_tier(b))
            .collect();
        self.with_document(|doc| {
            for (br, tier) in doc.branches.iter_mut().zip(tiers) {
                match tier {
                    Tier::Eeu => br.conductor = eeu_tier.into(),
                    Tier::Feeder => br.conductor = feeder_tier.into(),
                    Tier::Interconnect => {}
                }
            }
        })
    }

    /// Sets every constant-power generator to the dispatch policy's output
    /// for `state`, scaled by the network's scenario load level.
    pub fn dispatched(&self, state: DispatchState) -> Network {
        let power = self
            .dispatch()
            .generator_power_w(state, self.scenario().load_scale);
        let mut doc = self.doc.clone();
        for bus in &mut doc.buses {
            if let BusKind::ConstantPower {
                power_w,
                role: PowerRole::Generator,
            } = &mut bus.kind
            {
                *power_w = power;
            }
        }
        Network {
            doc,
            ..self.clone()
        }
    }
}

/// Parses and validates a JSON network document.
pub fn load_network(source: &str) -> Result<Network, NetworkError> {
    let doc: NetworkDocument =
        serde_json::from_str(source).map_err(|e| NetworkError::Schema(e.to_string()))?;
    Network::from_document(doc)
}

pub fn load_network_file(path: impl AsRef<Path>) -> Result<Network, NetworkError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| NetworkError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_network(&text)
}

/// The Architecture #1 propulsion network with its shipped calibration
/// (Helens EEU-tier cables, Pansy feeders, takeoff loads).
pub fn builtin_architecture1() -> Network {
    load_network(ARCHITECTURE1_JSON).expect("built-in architecture #1 data is valid")
}

/// Raw text of the built-in Architecture #1 document.
pub fn architecture1_json() -> &'static str {
    ARCHITECTURE1_JSON
}

/// Multiplies every constant-power device (motors and dispatched EEUs) by
/// `scenario.load_scale`. Setpoints are untouched; the network's scenario
/// records the cumulative scale.
pub fn apply_scenario(net: &Network, scenario: &Scenario) -> Result<Network, NetworkError> {
    let s = scenario.load_scale;
    if !(s > 0.0 && s.is_finite()) {
        return Err(NetworkError::Scenario(format!(
            "load_scale must be > 0, got {s}"
        )));
    }
    let mut doc = net.doc.clone();
    for bus in &mut doc.buses {
        if let BusKind::ConstantPower { power_w, .. } = &mut bus.kind {
            *power_w *= s;
        }
    }
    let combined = net.scenario().load_scale * s;
    doc.scenario = if net.scenario().load_scale == 1.0 {
        Scenario {
            name: scenario.name.clone(),
            load_scale: s,
        }
    } else {
        Scenario::from_scale(combined)
    };
    Ok(Network { doc, ..net.clone() })
}

/// Rescales a network stored at its own scenario to `target`: every
/// constant-power device is multiplied by `target / current` load scale and
/// the target scenario is recorded.
pub fn with_scenario(net: &Network, target: &Scenario) -> Result<Network, NetworkError> {
    if !(target.load_scale > 0.0 && target.load_scale.is_finite()) {
        return Err(NetworkError::Scenario(format!(
            "load_scale must be > 0, got {}",
            target.load_scale
        )));
    }
    let ratio = target.load_scale / net.scenario().load_scale;
    let mut scaled = apply_scenario(net, &Scenario::custom(ratio))?;
    scaled.doc.scenario = target.clone();
    Ok(scaled)
}

pub fn count_breakers(net: &Network) -> u32 {
    net.branches().iter().map(|b| u32::from(b.breakers)).sum()
}

pub fn total_cable_length(net: &Network, tier: TierFilter) -> f64 {
    net.branches()
        .iter()
        .filter(|b| match tier {
            TierFilter::All => true,
            TierFilter::Only(t) => net.branch_tier(b) == t,
        })
        .map(|b| b.length_m)
        .fold(0.0, |acc, l| acc + l)
}
