//! Report documents for DC, AC and contingency studies, rendered as text
//! tables, CSV or JSON.
//!
//! All numbers are stored as computed. Text tables round for display; CSV
//! and JSON carry the full `f64` value (shortest round-trip form).
//!
//! CSV layout, one value per row:
//!
//! | column     | meaning                                                   |
//! |------------|-----------------------------------------------------------|
//! | `record`   | `meta`, `voltage`, `current`, `total`, `case`, `summary`  |
//! | `case`     | `normal` or the contingency label                         |
//! | `element`  | bus id, branch `from-to`, conductor name or empty         |
//! | `quantity` | e.g. `voltage_v`, `current_a`, `mlp_pct`, `loss_total_w`  |
//! | `value`    | number or text                                            |

use std::fmt::Write as _;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::ac::{AcOptions, AcSolution};
use crate::contingency::{mlp, CaseResult, StudyReport, StudySummary};
use crate::dc::{DcFlow, DcSolver, SolveOptions};
use crate::netmodel::{BranchId, BusId, Network};

/// Buses per row block in the voltage table.
pub const BUSES_PER_BLOCK: usize = 7;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportMetadata {
    pub network: String,
    pub study: String,
    pub scenario: String,
    pub load_scale: f64,
    pub solver: String,
    pub options_hash: String,
    pub conductors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VoltageRow {
    pub bus: BusId,
    pub voltage_v: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angle_rad: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurrentRow {
    pub branch_id: BranchId,
    pub from: BusId,
    pub to: BusId,
    pub current_a: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angle_rad: Option<f64>,
    pub mlp_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Totals {
    pub converged: bool,
    pub iterations: usize,
    pub loss_total_w: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss_per_pole_w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_mismatch_w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate_holds: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub power_balance_error_w: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseRow {
    pub case: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_branch: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_current_a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_mlp_pct: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_voltage_bus: Option<BusId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_voltage_v: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss_total_w: Option<f64>,
    pub shed_load_w: f64,
}

impl CaseRow {
    fn from_result(r: &CaseResult) -> Self {
        let max = r.max_loading();
        CaseRow {
            case: r.label(),
            status: r.status.name().to_string(),
            detail: match &r.status {
                crate::contingency::CaseStatus::Infeasible(d)
                | crate::contingency::CaseStatus::Diverged(d) => Some(d.clone()),
                _ => None,
            },
            iterations: r.iterations,
            max_branch: max.map(|l| l.label.clone()),
            max_current_a: max.map(|l| l.current_a),
            max_mlp_pct: max.map(|l| l.mlp_pct),
            min_voltage_bus: r.min_voltage.map(|(b, _)| b),
            min_voltage_v: r.min_voltage.map(|(_, v)| v),
            loss_total_w: r.loss.map(|l| l.total_w),
            shed_load_w: r.shed_load_w,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportDocument {
    pub metadata: ReportMetadata,
    pub voltages: Vec<VoltageRow>,
    pub currents: Vec<CurrentRow>,
    pub totals: Totals,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub cases: Vec<CaseRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<StudySummary>,
}

/// First 16 hex digits of the SHA-256 of a canonical option string.
pub fn options_hash(canonical: &str) -> String {
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().take(8).fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Options hash of a DC solve or DC contingency study.
pub fn dc_options_hash(net: &Network, solver: DcSolver, opts: &SolveOptions) -> String {
    options_hash(&dc_canonical(net, solver, opts))
}

/// Options hash of an AC solve or AC contingency study.
pub fn ac_options_hash(net: &Network, opts: &AcOptions) -> String {
    options_hash(&format!(
        "ac|newton-raphson|mismatch={:?}|max_iter={}|scale={:?}",
        opts.mismatch_tol_w,
        opts.max_iterations,
        net.scenario().load_scale
    ))
}

fn dc_canonical(net: &Network, solver: DcSolver, opts: &SolveOptions) -> String {
    format!(
        "dc|{solver}|tol={:?}|max_iter={}|norm={:?}|cert={:?}|scale={:?}",
        opts.tolerance_v,
        opts.max_iterations,
        opts.certificate_norm,
        opts.certificate_interpretation,
        net.scenario().load_scale
    )
}

fn conductors_in_use(net: &Network) -> Vec<String> {
    net.conductors()
        .iter()
        .filter(|c| net.branches().iter().any(|b| b.conductor == c.name))
        .map(|c| c.name.clone())
        .collect()
}

fn metadata(net: &Network, study: &str, solver: String, hash: String) -> ReportMetadata {
    ReportMetadata {
        network: net.name().to_string(),
        study: study.into(),
        scenario: net.scenario().name.clone(),
        load_scale: net.scenario().load_scale,
        solver,
        options_hash: hash,
        conductors: conductors_in_use(net),
    }
}

fn dc_current_rows(net: &Network, flow: &DcFlow) -> Vec<CurrentRow> {
    flow.currents
        .iter()
        .map(|c| {
            let br = net.branch(c.branch_id).expect("branch of solved network");
            CurrentRow {
                branch_id: c.branch_id,
                from: c.from,
                to: c.to,
                current_a: c.current_a.abs(),
                angle_rad: None,
                mlp_pct: mlp(c.current_a, net.branch_conductor(br)),
            }
        })
        .collect()
}

pub fn dc_report(
    net: &Network,
    flow: &DcFlow,
    solver: DcSolver,
    opts: &SolveOptions,
) -> ReportDocument {
    ReportDocument {
        metadata: metadata(
            net,
            "dc",
            solver.to_string(),
            options_hash(&dc_canonical(net, solver, opts)),
        ),
        voltages: flow
            .voltages
            .iter()
            .map(|(&bus, &v)| VoltageRow {
                bus,
                voltage_v: v,
                angle_rad: None,
            })
            .collect(),
        currents: dc_current_rows(net, flow),
        totals: Totals {
            converged: flow.solution.converged,
            iterations: flow.solution.iterations,
            loss_total_w: flow.loss.total_w,
            loss_per_pole_w: Some(flow.loss.per_pole_w),
            max_mismatch_w: None,
            certificate_holds: Some(flow.solution.certificate.holds),
            power_balance_error_w: Some(flow.power_balance_error(net)),
        },
        cases: Vec::new(),
        summary: None,
    }
}

pub fn ac_report(net: &Network, sol: &AcSolution, opts: &AcOptions) -> ReportDocument {
    ReportDocument {
        metadata: metadata(
            net,
            "ac",
            "newton-raphson".into(),
            ac_options_hash(net, opts),
        ),
        voltages: sol
            .bus_ids
            .iter()
            .enumerate()
            .map(|(i, &bus)| VoltageRow {
                bus,
                voltage_v: sol.vm_v[i],
                angle_rad: Some(sol.va_rad[i]),
            })
            .collect(),
        currents: sol
            .branch_currents
            .iter()
            .map(|c| {
                let br = net.branch(c.branch_id).expect("AC branch");
                CurrentRow {
                    branch_id: c.branch_id,
                    from: c.from,
                    to: c.to,
                    current_a: c.current_a,
                    angle_rad: Some(c.angle_rad),
                    mlp_pct: mlp(c.current_a, net.branch_conductor(br)),
                }
            })
            .collect(),
        totals: Totals {
            converged: sol.converged,
            iterations: sol.iterations,
            loss_total_w: sol.loss_w,
            loss_per_pole_w: None,
            max_mismatch_w: Some(sol.max_mismatch_w),
            certificate_holds: None,
            power_balance_error_w: None,
        },
        cases: Vec::new(),
        summary: None,
    }
}

/// Report of a DC or AC contingency study; `options_hash` comes from
/// [`dc_options_hash`] or [`ac_options_hash`].
pub fn study_report(net: &Network, study: &StudyReport, options_hash: String) -> ReportDocument {
    let normal = &study.normal;
    let currents = normal
        .loadings
        .iter()
        .map(|l| {
            let br = net.branch(l.branch_id).expect("branch");
            CurrentRow {
                branch_id: l.branch_id,
                from: br.from,
                to: br.to,
                current_a: l.current_a,
                angle_rad: None,
                mlp_pct: l.mlp_pct,
            }
        })
        .collect();
    ReportDocument {
        metadata: metadata(net, "contingency", study.solver.clone(), options_hash),
        voltages: normal
            .voltages
            .iter()
            .map(|(&bus, &v)| VoltageRow {
                bus,
                voltage_v: v,
                angle_rad: None,
            })
            .collect(),
        currents,
        totals: Totals {
            converged: normal.status.solved(),
            iterations: normal.iterations,
            loss_total_w: normal.loss.map_or(f64::NAN, |l| l.total_w),
            loss_per_pole_w: normal.loss.map(|l| l.per_pole_w),
            max_mismatch_w: None,
            certificate_holds: None,
            power_balance_error_w: Some(normal.power_balance_error_w),
        },
        cases: study.cases.iter().map(CaseRow::from_result).collect(),
        summary: Some(study.summary.clone()),
    }
}

fn locations_text(locs: &[crate::contingency::LoadingLocation], with_case: bool) -> String {
    let mut cables: Vec<&str> = Vec::new();
    let mut cases: Vec<&str> = Vec::new();
    for l in locs {
        if !cables.contains(&l.label.as_str()) {
            cables.push(&l.label);
        }
        if let Some(c) = &l.case {
            if !cases.contains(&c.as_str()) {
                cases.push(c);
            }
        }
    }
    let mut text = cables.join(" & ");
    if with_case && !cases.is_empty() {
        let shown: Vec<&str> = cases.iter().take(4).copied().collect();
        let more = cases.len().saturating_sub(shown.len());
        let _ = write!(text, " under {}", shown.join(" / "));
        if more > 0 {
            let _ = write!(text, " (+{more} more)");
        }
    }
    text
}

impl ReportDocument {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Fixed-width text: voltages in blocks of seven buses, then currents, totals and cases.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let m = &self.metadata;
        let _ = writeln!(
            out,
            "network: {}   study: {}   solver: {}",
            m.network, m.study, m.solver
        );
        let _ = writeln!(
            out,
            "scenario: {} (load scale {})   conductors: {}   options: {}",
            m.scenario,
            m.load_scale,
            m.conductors.join("/"),
            m.options_hash
        );
        let ac = self.voltages.iter().any(|v| v.angle_rad.is_some());

        let _ = writeln!(out, "\nBUS VOLTAGES");
        for block in self.voltages.chunks(BUSES_PER_BLOCK) {
            let _ = write!(out, "{:<12}", "bus #");
            for v in block {
                let _ = write!(out, "{:>10}", v.bus);
            }
            let _ = write!(out, "\n{:<12}", "V (kV)");
            for v in block {
                let _ = write!(out, "{:>10.4}", v.voltage_v / 1000.0);
            }
            if ac {
                let _ = write!(out, "\n{:<12}", "Angle (rad)");
                for v in block {
                    let _ = write!(out, "{:>10.5}", v.angle_rad.unwrap_or(0.0));
                }
            }
            out.push('\n');
        }

        let _ = writeln!(out, "\nBRANCH CURRENTS");
        let _ = write!(out, "{:>5} {:>5} {:>12}", "from", "to", "I (A)");
        if ac {
            let _ = write!(out, " {:>11}", "angle (rad)");
        }
        let _ = writeln!(out, " {:>9}", "MLP (%)");
        for c in &self.currents {
            let _ = write!(out, "{:>5} {:>5} {:>12.2}", c.from, c.to, c.current_a);
            if let Some(a) = c.angle_rad {
                let _ = write!(out, " {:>11.2}", a);
            }
            let _ = writeln!(out, " {:>9.2}", c.mlp_pct);
        }

        let t = &self.totals;
        let _ = writeln!(
            out,
            "\nconverged: {}   iterations: {}",
            t.converged, t.iterations
        );
        let _ = write!(out, "loss: {:.3} kW", t.loss_total_w / 1000.0);
        if let Some(p) = t.loss_per_pole_w {
            let _ = write!(out, " ({p:.1} W per pole)");
        }
        out.push('\n');
        if let Some(mm) = t.max_mismatch_w {
            let _ = writeln!(out, "max mismatch: {mm:.3e} W");
        }
        if let Some(c) = t.certificate_holds {
            let _ = writeln!(
                out,
                "existence/uniqueness certificate: {}",
                if c { "holds" } else { "fails" }
            );
        }

        if !self.cases.is_empty() {
            let _ = writeln!(out, "\nSINGLE CONTINGENCIES ({} cases)", self.cases.len());
            let _ = writeln!(
                out,
                "{:<16} {:<11} {:>5} {:>9} {:>10} {:>8} {:>12} {:>10} {:>10}",
                "case",
                "status",
                "iter",
                "max in",
                "I (A)",
                "MLP (%)",
                "min V (kV)",
                "loss (kW)",
                "shed (MW)"
            );
            for c in &self.cases {
                let _ = writeln!(
                    out,
                    "{:<16} {:<11} {:>5} {:>9} {:>10} {:>8} {:>12} {:>10} {:>10.3}",
                    c.case,
                    c.status,
                    c.iterations,
                    c.max_branch.as_deref().unwrap_or("-"),
                    c.max_current_a.map_or("-".into(), |v| format!("{v:.1}")),
                    c.max_mlp_pct.map_or("-".into(), |v| format!("{v:.2}")),
                    c.min_voltage_v.map_or("-".into(), |v| format!(
                        "{:.4}@{}",
                        v / 1000.0,
                        c.min_voltage_bus.unwrap_or(0)
                    )),
                    c.loss_total_w
                        .map_or("-".into(), |v| format!("{:.3}", v / 1000.0)),
                    c.shed_load_w / 1e6
                );
            }
        }

        if let Some(s) = &self.summary {
            let _ = writeln!(out, "\nSUMMARY (loss {:.2} kW)", s.total_loss_w / 1000.0);
            let _ = writeln!(
                out,
                "{:<10} {:>10}  {:<16} {:>10}  worst case",
                "conductor", "normal MLP", "in cable", "worst MLP"
            );
            for row in &s.conductors {
                let worst = if row.worst_locations.is_empty() {
                    "-".to_string()
                } else {
                    format!("{:.2}", row.worst_mlp_pct)
                };
                let _ = writeln!(
                    out,
                    "{:<10} {:>10.2}  {:<16} {:>10}  {}",
                    row.conductor,
                    row.normal_mlp_pct,
                    locations_text(&row.normal_locations, false),
                    worst,
                    locations_text(&row.worst_locations, true)
                );
            }
            if let Some((case, bus, v)) = &s.worst_min_voltage {
                let _ = writeln!(
                    out,
                    "lowest voltage: {:.4} kV at bus {bus} under {case}",
                    v / 1000.0
                );
            }
            let _ = writeln!(
                out,
                "cases: {}   not solved: {}",
                s.case_count, s.failed_cases
            );
        }
        out
    }

    /// Long-format records; see the module documentation for the columns.
    pub fn csv_records(&self) -> Vec<CsvRecord> {
        let mut rows = Vec::new();
        let mut push =
            |record: &str, case: &str, element: String, quantity: &str, value: String| {
                rows.push(CsvRecord {
                    record: record.into(),
                    case: case.into(),
                    element,
                    quantity: quantity.into(),
                    value,
                });
            };
        let m = &self.metadata;
        for (q, v) in [
            ("network", m.network.clone()),
            ("study", m.study.clone()),
            ("scenario", m.scenario.clone()),
            ("load_scale", num(m.load_scale)),
            ("solver", m.solver.clone()),
            ("options_hash", m.options_hash.clone()),
            ("conductors", m.conductors.join("/")),
        ] {
            push("meta", "", String::new(), q, v);
        }
        for v in &self.voltages {
            push(
                "voltage",
                "normal",
                v.bus.to_string(),
                "voltage_v",
                num(v.voltage_v),
            );
            if let Some(a) = v.angle_rad {
                push("voltage", "normal", v.bus.to_string(), "angle_rad", num(a));
            }
        }
        for c in &self.currents {
            let el = format!("{}-{}", c.from, c.to);
            push(
                "current",
                "normal",
                el.clone(),
                "current_a",
                num(c.current_a),
            );
            if let Some(a) = c.angle_rad {
                push("current", "normal", el.clone(), "angle_rad", num(a));
            }
            push("current", "normal", el, "mlp_pct", num(c.mlp_pct));
        }
        let t = &self.totals;
        push(
            "total",
            "normal",
            String::new(),
            "converged",
            t.converged.to_string(),
        );
        push(
            "total",
            "normal",
            String::new(),
            "iterations",
            t.iterations.to_string(),
        );
        push(
            "total",
            "normal",
            String::new(),
            "loss_total_w",
            num(t.loss_total_w),
        );
        for (q, v) in [
            ("loss_per_pole_w", t.loss_per_pole_w),
            ("max_mismatch_w", t.max_mismatch_w),
            ("power_balance_error_w", t.power_balance_error_w),
        ] {
            if let Some(v) = v {
                push("total", "normal", String::new(), q, num(v));
            }
        }
        if let Some(c) = t.certificate_holds {
            push(
                "total",
                "normal",
                String::new(),
                "certificate_holds",
                c.to_string(),
            );
        }
        for c in &self.cases {
            push("case", &c.case, String::new(), "status", c.status.clone());
            push(
                "case",
                &c.case,
                String::new(),
                "iterations",
                c.iterations.to_string(),
            );
            let branch = c.max_branch.clone().unwrap_or_default();
            if let Some(v) = c.max_current_a {
                push("case", &c.case, branch.clone(), "max_current_a", num(v));
            }
            if let Some(v) = c.max_mlp_pct {
                push("case", &c.case, branch.clone(), "max_mlp_pct", num(v));
            }
            if let (Some(b), Some(v)) = (c.min_voltage_bus, c.min_voltage_v) {
                push("case", &c.case, b.to_string(), "min_voltage_v", num(v));
            }
            if let Some(v) = c.loss_total_w {
                push("case", &c.case, String::new(), "loss_total_w", num(v));
            }
            push(
                "case",
                &c.case,
                String::new(),
                "shed_load_w",
                num(c.shed_load_w),
            );
        }
        if let Some(s) = &self.summary {
            push(
                "summary",
                "",
                String::new(),
                "loss_total_w",
                num(s.total_loss_w),
            );
            for row in &s.conductors {
                push(
                    "summary",
                    "normal",
                    row.conductor.clone(),
                    "normal_mlp_pct",
                    num(row.normal_mlp_pct),
                );
                for l in &row.normal_locations {
                    push(
                        "summary",
                        "normal",
                        row.conductor.clone(),
                        "normal_location",
                        l.label.clone(),
                    );
                }
                push(
                    "summary",
                    "",
                    row.conductor.clone(),
                    "worst_mlp_pct",
                    num(row.worst_mlp_pct),
                );
                for l in &row.worst_locations {
                    let case = l.case.clone().unwrap_or_default();
                    push(
                        "summary",
                        &case,
                        row.conductor.clone(),
                        "worst_location",
                        l.label.clone(),
                    );
                }
            }
        }
        rows
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in self.csv_records() {
            w.serialize(&r).expect("csv record");
        }
        String::from_utf8(w.into_inner().expect("csv flush")).expect("utf-8 csv")
    }
}

fn num(v: f64) -> String {
    v.to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct CsvRecord {
    pub record: String,
    pub case: String,
    pub element: String,
    pub quantity: String,
    pub value: String,
}

impl CsvRecord {
    pub fn number(&self) -> Option<f64> {
        self.value.parse().ok()
    }
}

pub fn parse_csv(text: &str) -> Result<Vec<CsvRecord>, csv::Error> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect()
}
