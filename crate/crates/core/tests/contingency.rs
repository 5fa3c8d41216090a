mod common;

use std::collections::BTreeMap;

use common::RandomNetwork;
use mvdc_flow::ac::{solve_newton_raphson, AcOptions, AcStudy};
use mvdc_flow::contingency::{run_ac_study, CaseResult, CaseStatus, ContingencyKind};
use mvdc_flow::netmodel::BusId;
use mvdc_flow::{builtin_architecture1, run_study, solve_network, DcSolver, SolveOptions};
use proptest::prelude::*;

/// Left/right mirror of Architecture #1.
fn mirror(bus: BusId) -> BusId {
    match bus {
        1 => 4,
        4 => 1,
        2 => 3,
        3 => 2,
        5 => 7,
        7 => 5,
        6 => 6,
        8..=21 => 29 - bus,
        _ => unreachable!(),
    }
}

fn endpoints(label: &str) -> (BusId, BusId) {
    let (a, b) = label.split_once('-').unwrap();
    (a.parse().unwrap(), b.parse().unwrap())
}

fn mirrored_kind(kind: ContingencyKind, net: &mvdc_flow::Network) -> ContingencyKind {
    match kind {
        ContingencyKind::BranchLoss(id) => {
            let br = net.branch(id).unwrap();
            let (f, t) = (mirror(br.from), mirror(br.to));
            let other = net
                .branches()
                .iter()
                .find(|b| (b.from, b.to) == (f, t) || (b.from, b.to) == (t, f))
                .unwrap();
            ContingencyKind::BranchLoss(other.id)
        }
        ContingencyKind::BusbarLoss(b) => ContingencyKind::BusbarLoss(mirror(b)),
        ContingencyKind::EeuLoss(b) => ContingencyKind::EeuLoss(mirror(b)),
    }
}

fn currents(result: &CaseResult) -> BTreeMap<(BusId, BusId), f64> {
    result
        .loadings
        .iter()
        .map(|l| {
            let (a, b) = endpoints(&l.label);
            ((a.min(b), a.max(b)), l.current_a.abs())
        })
        .collect()
}

#[test]
fn mirrored_contingencies_give_mirrored_flows() {
    let net = builtin_architecture1();
    let study = run_study(&net, DcSolver::Zbus, &SolveOptions::default());
    let by_kind: BTreeMap<_, _> = study
        .cases
        .iter()
        .map(|r| (r.case.as_ref().unwrap().kind, r))
        .collect();
    for (kind, result) in &by_kind {
        let twin = by_kind[&mirrored_kind(*kind, &net)];
        assert_eq!(result.status, twin.status, "{kind:?}");
        let (a, b) = (currents(result), currents(twin));
        assert_eq!(a.len(), b.len());
        for (&(f, t), &i) in &a {
            let (mf, mt) = (mirror(f), mirror(t));
            let j = b[&(mf.min(mt), mf.max(mt))];
            assert!(
                (i - j).abs() <= 1e-6 * i.max(1.0),
                "{kind:?} {f}-{t}: {i} vs {j}"
            );
        }
        for (bus, v) in &result.voltages {
            let w = twin.voltages[&mirror(*bus)];
            assert!((v - w).abs() < 1e-6, "{kind:?} bus {bus}");
        }
    }
}

#[test]
fn study_is_deterministic() {
    let net = builtin_architecture1();
    for solver in [DcSolver::Zbus, DcSolver::Monotone] {
        let a = serde_json::to_string(&run_study(&net, solver, &SolveOptions::default())).unwrap();
        let b = serde_json::to_string(&run_study(&net, solver, &SolveOptions::default())).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn every_solved_case_balances_power() {
    let net = builtin_architecture1();
    for solver in [DcSolver::Zbus, DcSolver::Monotone] {
        let study = run_study(&net, solver, &SolveOptions::default());
        for r in std::iter::once(&study.normal).chain(&study.cases) {
            assert!(r.status.solved(), "{}: {:?}", r.label(), r.status);
            assert!(
                r.power_balance_error_w.abs() < 1e-3 * r.served_load_w,
                "{solver} {}: {}",
                r.label(),
                r.power_balance_error_w
            );
        }
    }
}

#[test]
fn only_motor_busbar_losses_shed_load() {
    let net = builtin_architecture1();
    let study = run_study(&net, DcSolver::Zbus, &SolveOptions::default());
    let motor = net.bus(8).unwrap().load_w() * net.pole_count();
    for r in &study.cases {
        match (r.case.as_ref().unwrap().kind, &r.status) {
            (ContingencyKind::BusbarLoss(b), CaseStatus::LoadShed) if (8..=21).contains(&b) => {
                assert_eq!(r.shed_buses, vec![b]);
                assert!((r.shed_load_w - motor).abs() < 1e-6);
            }
            (_, CaseStatus::Converged) => assert_eq!(r.shed_load_w, 0.0, "{}", r.label()),
            (kind, status) => panic!("{kind:?}: unexpected {status:?}"),
        }
    }
}

#[test]
fn ac_study_solves_every_case_and_locates_the_worst_loading() {
    let net = builtin_architecture1();
    let study = run_ac_study(&net, &AcOptions::default());
    assert_eq!(study.cases.len(), 55);
    assert!(study.cases.iter().all(|c| c.status.solved()));
    for r in std::iter::once(&study.normal).chain(&study.cases) {
        assert!(r.power_balance_error_w < 1e-3, "{}", r.label());
    }
    let worst = |name: &str| -> Vec<(String, String)> {
        study
            .summary
            .conductors
            .iter()
            .find(|c| c.conductor == name)
            .unwrap()
            .worst_locations
            .iter()
            .map(|l| (l.label.clone(), l.case.clone().unwrap()))
            .collect()
    };
    let expected = |cable: &str| vec![(cable.to_string(), "cable 2-6".to_string())];
    assert_eq!(worst("Helens"), expected("3-6"));
    assert_eq!(worst("Pansy"), expected("5-14"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn resistive_unity_pf_ac_equals_dc(seed in any::<u64>(), n in 3usize..=20) {
        let net = RandomNetwork::generate(seed, n, 1, false).certified();
        let dc = solve_network(&net, DcSolver::Zbus, &SolveOptions::default().with_tolerance(1e-9)).unwrap();
        let study = AcStudy::dc_equivalent(&net).unwrap();
        let ac = solve_newton_raphson(&study, &AcOptions::default()).unwrap();
        for (&bus, &v) in &dc.voltages {
            let vm = ac.magnitude(bus).unwrap();
            prop_assert!(((vm - v) / v).abs() < 1e-6, "bus {}: {} vs {}", bus, vm, v);
            prop_assert!(ac.angle(bus).unwrap().abs() < 1e-9);
        }
        prop_assert!((ac.loss_w - dc.loss.per_pole_w).abs() <= 1e-6 * dc.loss.per_pole_w.max(1.0));
    }
}
