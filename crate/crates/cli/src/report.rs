//! Self-certifying report files.
//!
//! Every optimized value in a report travels with the optimizer artifact
//! that achieves it — an ensemble (weights plus input density matrices) or a
//! single state — so a reader can re-evaluate the reported number without
//! rerunning any search. Floats are serialized by the shortest round-trip
//! representation, which preserves at least 12 significant digits.

use serde::{Deserialize, Serialize};

use qcap_core::capacity::{CapacityResult, ConstrainedCapacityResult, GibbsState};
use qcap_core::capacity::{BoundsReport, Optimizer};
use qcap_core::channels::KrausChannel;
use qcap_core::entropy::entropy;
use qcap_core::petz::{EqualityVerdict, Verdict};

use crate::spec::{matrix_to_data, ChannelSpecFile, MatrixData};

#[derive(Serialize, Deserialize)]
pub struct ReportFile {
    pub command: String,
    /// Echo of the parsed specification; together with `seed`, `restarts`,
    /// and `obj_tol` it reproduces every number below.
    pub input: ChannelSpecFile,
    pub seed: u64,
    pub restarts: usize,
    pub obj_tol: f64,
    pub channel: ChannelSummary,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub capacities: Option<CapacitySection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<VerdictSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constrained: Option<ConstrainedSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<CheckOut>>,
    pub wall_clock_seconds: f64,
}

#[derive(Serialize, Deserialize)]
pub struct ChannelSummary {
    pub dim_in: usize,
    pub dim_out: usize,
    pub kraus_count: usize,
    /// Environment dimension of the minimal dilation.
    pub env_dim: usize,
}

impl ChannelSummary {
    pub fn of(ch: &KrausChannel) -> Self {
        ChannelSummary {
            dim_in: ch.dim_in(),
            dim_out: ch.dim_out(),
            kraus_count: ch.kraus_count(),
            env_dim: ch.minimal_kraus().kraus_count(),
        }
    }
}

#[derive(Serialize, Deserialize)]
pub struct EnsembleOut {
    pub weights: Vec<f64>,
    /// Input density matrices of the ensemble members.
    pub states: Vec<MatrixData>,
}

/// One optimized quantity plus the artifact achieving it.
#[derive(Serialize, Deserialize)]
pub struct CapacityOut {
    pub value: f64,
    pub certificate_gap: f64,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleOut>,
    /// Input density matrix, for quantities optimized over a single state.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<MatrixData>,
}

impl CapacityOut {
    pub fn of(r: &CapacityResult) -> Self {
        let (ensemble, state) = match &r.optimizer {
            Optimizer::Ensemble(e) => (
                Some(EnsembleOut {
                    weights: e.weights().to_vec(),
                    states: e.states().iter().map(|s| matrix_to_data(s.matrix())).collect(),
                }),
                None,
            ),
            Optimizer::State(s) => (None, Some(matrix_to_data(s.matrix()))),
        };
        CapacityOut {
            value: r.value,
            certificate_gap: r.certificate_gap,
            converged: r.converged,
            ensemble,
            state,
        }
    }
}

#[derive(Serialize, Deserialize)]
pub struct CapacitySection {
    pub holevo: CapacityOut,
    pub holevo_complement: CapacityOut,
    pub ea: CapacityOut,
    pub q1: CapacityOut,
    pub min_output_entropy: CapacityOut,
    pub max_delta: CapacityOut,
}

#[derive(Serialize, Deserialize)]
pub struct LineOut {
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
}

#[derive(Serialize, Deserialize)]
pub struct BoundsSection {
    pub entropy_nondecreasing: bool,
    pub chaotic_average: bool,
    pub assisted_chaotic: bool,
    pub lines: Vec<LineOut>,
    pub all_pass: bool,
}

impl BoundsSection {
    pub fn of(report: &BoundsReport) -> Self {
        BoundsSection {
            entropy_nondecreasing: report.entropy_nondecreasing,
            chaotic_average: report.chaotic_average,
            assisted_chaotic: report.assisted_chaotic,
            lines: report
                .lines
                .iter()
                .map(|l| LineOut {
                    label: l.label.clone(),
                    lhs: l.lhs,
                    rhs: l.rhs,
                    slack: l.slack,
                    pass: l.pass,
                })
                .collect(),
            all_pass: report.all_pass(),
        }
    }
}

#[derive(Serialize, Deserialize)]
pub struct InversionOut {
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub pass: bool,
}

#[derive(Serialize, Deserialize)]
pub struct VerdictSection {
    /// EQUAL, GAP, or INCONCLUSIVE.
    pub verdict: String,
    pub gap_estimate: f64,
    pub threshold: f64,
    pub holevo: CapacityOut,
    pub assisted: CapacityOut,
    pub inversion: InversionOut,
    pub essential_dimension: usize,
    pub essential_converged: bool,
    pub cq_detected: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cq_witness: Option<f64>,
}

pub fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Equal => "EQUAL",
        Verdict::Gap => "GAP",
        Verdict::Inconclusive => "INCONCLUSIVE",
    }
}

impl VerdictSection {
    pub fn of(cert: &EqualityVerdict) -> Self {
        VerdictSection {
            verdict: verdict_name(cert.verdict).to_string(),
            gap_estimate: cert.gap_estimate,
            threshold: cert.threshold,
            holevo: CapacityOut::of(&cert.holevo),
            assisted: CapacityOut::of(&cert.assisted),
            inversion: InversionOut {
                residuals: cert.inversion.residuals.clone(),
                max_residual: cert.inversion.max_residual,
                pass: cert.inversion.pass,
            },
            essential_dimension: cert.essential.dimension,
            essential_converged: cert.essential.converged,
            cq_detected: cert.cq_structure.is_some(),
            cq_witness: cert.cq_witness,
        }
    }
}

#[derive(Serialize, Deserialize)]
pub struct ConstrainedOut {
    pub value: f64,
    pub certificate_gap: f64,
    pub converged: bool,
    pub multiplier: f64,
    pub constraint_active: bool,
    pub expectation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<MatrixData>,
}

impl ConstrainedOut {
    pub fn of(r: &ConstrainedCapacityResult) -> Self {
        let inner = CapacityOut::of(&r.capacity);
        ConstrainedOut {
            value: inner.value,
            certificate_gap: inner.certificate_gap,
            converged: inner.converged,
            multiplier: r.multiplier,
            constraint_active: r.constraint_active,
            expectation: r.expectation,
            ensemble: inner.ensemble,
            state: inner.state,
        }
    }
}

#[derive(Serialize, Deserialize)]
pub struct GibbsOut {
    pub state: MatrixData,
    pub multiplier: f64,
    pub constraint_active: bool,
    pub entropy: f64,
    pub expectation: f64,
}

impl GibbsOut {
    pub fn of(g: &GibbsState, expectation: f64) -> Self {
        GibbsOut {
            state: matrix_to_data(g.state.matrix()),
            multiplier: g.multiplier,
            constraint_active: g.constraint_active,
            entropy: entropy(&g.state),
            expectation,
        }
    }
}

#[derive(Serialize, Deserialize)]
pub struct ConstrainedSection {
    pub level: f64,
    pub holevo: ConstrainedOut,
    pub ea: ConstrainedOut,
    /// Assisted minus unassisted constrained capacity.
    pub gap: f64,
    /// Diagnostics of the entropy-maximizing feasible state; omitted when
    /// the observable is a multiple of the identity (every state is then
    /// equally constrained and no distinguished maximizer exists).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gibbs: Option<GibbsOut>,
}

/// One named tolerance check of a reproduction case.
#[derive(Serialize, Deserialize)]
pub struct CheckOut {
    pub label: String,
    pub value: f64,
    pub pass: bool,
}

impl ReportFile {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }
}
