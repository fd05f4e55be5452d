//! Serializable reports and plain-text tables for repairs, frontiers,
//! injections and scores.

use std::fmt::Write as _;

use serde::Serialize;

use crate::conflict::CoverStrategy;
use crate::eval::{DataPerturbation, FdPerturbation, InjectionKind, QualityScores};
use crate::fd::{FdSet, WeightKind};
use crate::multi::RepairFrontier;
use crate::relation::{CellEdit, Schema};
use crate::repair::{RepairOutcome, RepairResult};
use crate::search::SearchStats;

/// Budgets are absolute cell-change counts; relative budgets are fractions
/// of `δ_P` of the input FDs, not of the exact minimum.
pub const TAU_BASIS: &str = "delta_p";

#[derive(Clone, Copy, Debug, Serialize)]
pub struct RunSettings {
    pub weight: WeightKind,
    pub heuristic_k: usize,
    pub cover: CoverStrategy,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Repaired,
    Empty,
}

#[derive(Clone, Debug, Serialize)]
pub struct RepairPayload {
    pub fds: Vec<String>,
    /// Attributes appended to each FD's LHS, by FD position.
    pub extensions: Vec<Vec<String>>,
    pub edits: Vec<CellEdit>,
    pub dist_c: f64,
    pub dist_d: usize,
    pub delta_p: u64,
    pub cover_size: usize,
    pub seed: u64,
}

impl RepairPayload {
    pub fn new(result: &RepairResult, schema: &Schema) -> Self {
        RepairPayload {
            fds: result.sigma_prime.render_lines(schema),
            extensions: result.extension.to_names(schema),
            edits: result.delta.edits(schema),
            dist_c: result.dist_c,
            dist_d: result.dist_d(),
            delta_p: result.delta_p,
            cover_size: result.cover_size,
            seed: result.seed,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RepairReport {
    pub status: Status,
    pub tau: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_relative: Option<f64>,
    pub tau_basis: &'static str,
    /// `δ_P` of the input FDs on the input instance.
    pub delta_p_input: u64,
    pub settings: RunSettings,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub repair: Option<RepairPayload>,
    pub search: SearchStats,
}

impl RepairReport {
    pub fn new(
        outcome: &RepairOutcome,
        stats: SearchStats,
        schema: &Schema,
        tau: u64,
        tau_relative: Option<f64>,
        delta_p_input: u64,
        settings: RunSettings,
    ) -> Self {
        let (status, reason, repair) = match outcome {
            RepairOutcome::Repaired(r) => (Status::Repaired, None, Some(RepairPayload::new(r, schema))),
            RepairOutcome::Empty { reason } => (Status::Empty, Some(reason.clone()), None),
        };
        RepairReport {
            status,
            tau,
            tau_relative,
            tau_basis: TAU_BASIS,
            delta_p_input,
            settings,
            reason,
            repair,
            search: stats,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FrontierEntryReport {
    pub tau_lo: u64,
    pub tau_hi: u64,
    pub tau_r_lo: f64,
    pub tau_r_hi: f64,
    /// Report at budget `tau_hi`; `search` holds the statistics of the
    /// whole sweep.
    pub report: RepairReport,
}

/// Serializes as a bare array of entries, by decreasing budget.
#[derive(Clone, Debug, Serialize)]
#[serde(transparent)]
pub struct FrontierReport {
    pub entries: Vec<FrontierEntryReport>,
}

fn relative(tau: u64, delta_p_input: u64) -> f64 {
    if delta_p_input == 0 {
        0.0
    } else {
        tau as f64 / delta_p_input as f64
    }
}

impl FrontierReport {
    pub fn new(
        frontier: &RepairFrontier,
        stats: SearchStats,
        schema: &Schema,
        delta_p_input: u64,
        settings: RunSettings,
    ) -> Self {
        let entries = frontier
            .entries
            .iter()
            .map(|e| FrontierEntryReport {
                tau_lo: e.tau_lo,
                tau_hi: e.tau_hi,
                tau_r_lo: relative(e.tau_lo, delta_p_input),
                tau_r_hi: relative(e.tau_hi, delta_p_input),
                report: RepairReport {
                    status: Status::Repaired,
                    tau: e.tau_hi,
                    tau_relative: None,
                    tau_basis: TAU_BASIS,
                    delta_p_input,
                    settings,
                    reason: None,
                    repair: Some(RepairPayload::new(&e.result, schema)),
                    search: stats,
                },
            })
            .collect();
        FrontierReport { entries }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InjectedCell {
    pub tuple: usize,
    pub attribute: String,
    pub old: String,
    pub new: String,
    pub kind: InjectionKind,
}

#[derive(Clone, Debug, Serialize)]
pub struct InjectReport {
    pub seed: u64,
    pub data_error_rate: f64,
    pub fd_error_rate: f64,
    pub injected: Vec<InjectedCell>,
    pub shortfall: usize,
    /// LHS attributes removed from each FD.
    pub removed: Vec<Vec<String>>,
    pub fds: Vec<String>,
}

impl InjectReport {
    pub fn new(
        data: &DataPerturbation,
        fds: &FdPerturbation,
        schema: &Schema,
        rates: (f64, f64),
        seed: u64,
    ) -> Self {
        InjectReport {
            seed,
            data_error_rate: rates.0,
            fd_error_rate: rates.1,
            injected: data
                .injected
                .iter()
                .map(|i| InjectedCell {
                    tuple: i.tuple,
                    attribute: schema.name(i.attribute).to_string(),
                    old: schema.render(&i.old),
                    new: schema.render(&i.new),
                    kind: i.kind,
                })
                .collect(),
            shortfall: data.shortfall,
            removed: fds.removed.to_names(schema),
            fds: fds.fds.render_lines(schema),
        }
    }
}

/// Left-aligned columns separated by two spaces.
pub fn table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: Vec<&str>| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}", w = *w))
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(headers.to_vec());
    for row in rows {
        line(row.iter().map(String::as_str).collect());
    }
    out
}

fn num(x: f64) -> String {
    format!("{x:.4}")
}

fn payload_rows(p: &RepairPayload) -> Vec<Vec<String>> {
    vec![
        vec!["fds".into(), p.fds.join("; ")],
        vec![
            "extensions".into(),
            p.extensions
                .iter()
                .map(|e| format!("{{{}}}", e.join(",")))
                .collect::<Vec<_>>()
                .join(" "),
        ],
        vec!["dist_c".into(), num(p.dist_c)],
        vec!["dist_d".into(), p.dist_d.to_string()],
        vec!["delta_p".into(), p.delta_p.to_string()],
        vec!["cover_size".into(), p.cover_size.to_string()],
    ]
}

fn edit_rows(p: &RepairPayload) -> Vec<Vec<String>> {
    p.edits
        .iter()
        .map(|e| vec![e.tuple.to_string(), e.attribute.clone(), e.old.clone(), e.new.clone()])
        .collect()
}

pub fn repair_table(r: &RepairReport) -> String {
    let mut rows = vec![
        vec!["status".into(), format!("{:?}", r.status).to_lowercase()],
        vec!["tau".into(), r.tau.to_string()],
        vec!["delta_p_input".into(), r.delta_p_input.to_string()],
    ];
    if let Some(reason) = &r.reason {
        rows.push(vec!["reason".into(), reason.clone()]);
    }
    let mut out = String::new();
    if let Some(p) = &r.repair {
        rows.extend(payload_rows(p));
        out.push_str(&table(&["field", "value"], &rows));
        if !p.edits.is_empty() {
            out.push('\n');
            out.push_str(&table(&["tuple", "attribute", "old", "new"], &edit_rows(p)));
        }
    } else {
        out.push_str(&table(&["field", "value"], &rows));
    }
    let s = r.search;
    out.push('\n');
    out.push_str(&table(
        &["visited", "expanded", "generated", "pruned", "gc_evaluations"],
        &[vec![
            s.visited.to_string(),
            s.expanded.to_string(),
            s.generated.to_string(),
            s.pruned.to_string(),
            s.gc_evaluations.to_string(),
        ]],
    ));
    out
}

pub fn frontier_table(f: &FrontierReport) -> String {
    let rows: Vec<Vec<String>> = f
        .entries
        .iter()
        .filter_map(|e| e.report.repair.as_ref().map(|p| (e, p)))
        .map(|(e, p)| {
            vec![
                format!("[{}, {}]", e.tau_lo, e.tau_hi),
                format!("[{:.3}, {:.3}]", e.tau_r_lo, e.tau_r_hi),
                p.fds.join("; "),
                num(p.dist_c),
                p.dist_d.to_string(),
                p.delta_p.to_string(),
            ]
        })
        .collect();
    table(&["tau", "tau_r", "fds", "dist_c", "dist_d", "delta_p"], &rows)
}

pub fn scores_table(s: &QualityScores) -> String {
    table(
        &["metric", "precision", "recall", "f"],
        &[
            vec!["data".into(), num(s.data_precision), num(s.data_recall), num(s.data_f)],
            vec!["fd".into(), num(s.fd_precision), num(s.fd_recall), num(s.fd_f)],
            vec!["combined".into(), String::new(), String::new(), num(s.combined_f)],
        ],
    )
}

pub fn inject_table(r: &InjectReport) -> String {
    let mut out = table(
        &["tuple", "attribute", "old", "new", "kind"],
        &r.injected
            .iter()
            .map(|c| {
                vec![
                    c.tuple.to_string(),
                    c.attribute.clone(),
                    c.old.clone(),
                    c.new.clone(),
                    format!("{:?}", c.kind).to_lowercase(),
                ]
            })
            .collect::<Vec<_>>(),
    );
    out.push('\n');
    out.push_str(&table(
        &["fd", "removed"],
        &r.fds
            .iter()
            .zip(&r.removed)
            .map(|(f, rm)| vec![f.clone(), rm.join(",")])
            .collect::<Vec<_>>(),
    ));
    out
}

/// FD lines for writing back to a file.
pub fn fds_text(fds: &FdSet, schema: &Schema) -> String {
    fds.render(schema)
}
