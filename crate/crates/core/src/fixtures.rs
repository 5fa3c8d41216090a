//! Small hand-built networks for examples and tests.
//!
//! [`NetworkBuilder`] takes branch resistances directly: every branch uses a
//! 1 Ω/m conductor and its length in metres equals its resistance in ohms.

use crate::netmodel::{
    Branch, BranchId, Bus, BusId, BusKind, ConductorSpec, DispatchPolicy, Network, NetworkDocument,
    NetworkError, PowerRole, Scenario,
};

/// Load of the reference two-bus case, watts.
pub const TWO_BUS_LOAD_W: f64 = 1.0e6;
/// Source voltage of the reference two-bus case.
pub const TWO_BUS_SOURCE_V: f64 = 5000.0;
/// Branch resistance of the reference two-bus case.
pub const TWO_BUS_R_OHM: f64 = 0.001;

const UNIT_CONDUCTOR: &str = "unit";

#[derive(Debug, Clone)]
pub struct NetworkBuilder {
    name: String,
    nominal_v: f64,
    buses: Vec<Bus>,
    branches: Vec<Branch>,
    vc: Vec<BusId>,
    ampacity_a: f64,
}

impl NetworkBuilder {
    pub fn new(name: &str, nominal_v: f64) -> Self {
        NetworkBuilder {
            name: name.into(),
            nominal_v,
            buses: Vec::new(),
            branches: Vec::new(),
            vc: Vec::new(),
            ampacity_a: 1000.0,
        }
    }

    pub fn ampacity(mut self, amps: f64) -> Self {
        self.ampacity_a = amps;
        self
    }

    fn bus(mut self, id: BusId, kind: BusKind) -> Self {
        self.buses.push(Bus {
            id,
            name: format!("bus{id}"),
            kind,
            nominal_v: self.nominal_v,
        });
        self
    }

    pub fn source(mut self, id: BusId, setpoint_v: f64) -> Self {
        self.vc.push(id);
        self.bus(id, BusKind::VoltageControlled { setpoint_v })
    }

    pub fn load(self, id: BusId, power_w: f64) -> Self {
        self.bus(
            id,
            BusKind::ConstantPower {
                power_w,
                role: PowerRole::Load,
            },
        )
    }

    pub fn generator(self, id: BusId, power_w: f64) -> Self {
        self.bus(
            id,
            BusKind::ConstantPower {
                power_w,
                role: PowerRole::Generator,
            },
        )
    }

    pub fn junction(self, id: BusId) -> Self {
        self.bus(id, BusKind::Junction {})
    }

    pub fn branch(mut self, from: BusId, to: BusId, r_ohm: f64) -> Self {
        let id = self.branches.len() as BranchId + 1;
        self.branches.push(Branch {
            id,
            from,
            to,
            length_m: r_ohm,
            conductor: UNIT_CONDUCTOR.into(),
            breakers: 2,
            tier: None,
        });
        self
    }

    pub fn document(self) -> NetworkDocument {
        NetworkDocument {
            name: self.name,
            notes: None,
            pole_model: true,
            buses: self.buses,
            branches: self.branches,
            conductors: vec![ConductorSpec {
                name: UNIT_CONDUCTOR.into(),
                r_ohm_per_km: 1000.0,
                ampacity_a: self.ampacity_a,
            }],
            dispatch: DispatchPolicy {
                normal_cp_generator_power_w: 0.0,
                contingency_cp_generator_power_w: 0.0,
                voltage_controlled_buses: self.vc,
                slack_fallback: None,
            },
            scenario: Scenario::takeoff(),
            ac: None,
        }
    }

    pub fn build(self) -> Result<Network, NetworkError> {
        Network::from_document(self.document())
    }
}

/// Source at 5000 V feeding one constant-power load through 0.001 Ω.
/// The exact load voltage is the larger root of `v^2 - 5000 v + P R = 0`.
pub fn two_bus(load_w: f64) -> Network {
    NetworkBuilder::new("two-bus", TWO_BUS_SOURCE_V)
        .source(1, TWO_BUS_SOURCE_V)
        .load(2, load_w)
        .branch(1, 2, TWO_BUS_R_OHM)
        .build()
        .expect("two-bus fixture is valid")
}
