//! Cross-quantity bound reports and closed-form capacities for covariant
//! channels.
//!
//! [`bounds_report`] evaluates every inequality this toolkit knows that
//! relates the one-shot classical capacity C, its complementary-channel
//! counterpart, the entanglement-assisted capacity C_ea, the coherent
//! information Q₁, the χ-function, and the channel dimensions. Some bounds
//! hold unconditionally; others require a verified premise (output entropy
//! never below input entropy) or an observed structural fact (the optimal
//! averages sitting at the chaotic state), and are reported only when their
//! gate holds.

use rayon::prelude::*;

use crate::channels::{verify_covariance, DensityMatrix, KrausChannel};
use crate::entropy::{entropy, entropy_psd, holevo_quantity, mutual_information, Ensemble};
use crate::matops::{trace_norm_hermitian, ComplexMatrix};
use crate::rand_gen::random_density;
use crate::{Error, Result};

use super::chi::chi_function;
use super::holevo::holevo_capacity;
use super::mirror::{ea_capacity, q1};
use super::sphere::min_output_entropy;
use super::{restart_rng, CapacityResult, Optimizer, OptimizerOptions};

/// One evaluated inequality `lhs ≤ rhs`.
#[derive(Clone, Debug)]
pub struct BoundLine {
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    /// rhs − lhs; the inequality holds when this is nonnegative.
    pub slack: f64,
    /// slack ≥ −1e-4 (optimizer noise allowance).
    pub pass: bool,
}

fn line(label: &str, lhs: f64, rhs: f64) -> BoundLine {
    let slack = rhs - lhs;
    BoundLine {
        label: label.to_string(),
        lhs,
        rhs,
        slack,
        pass: slack >= -1e-4,
    }
}

/// Every capacity of one channel, with the inequality lines that relate
/// them. Gated lines appear only when their gate field is true.
#[derive(Clone, Debug)]
pub struct BoundsReport {
    /// One-shot classical capacity of the channel.
    pub holevo: CapacityResult,
    /// One-shot classical capacity of the complementary channel.
    pub holevo_complement: CapacityResult,
    /// Entanglement-assisted capacity.
    pub ea: CapacityResult,
    /// One-shot coherent information.
    pub q1: CapacityResult,
    /// Minimal output entropy.
    pub min_output: CapacityResult,
    /// Environment dimension of the minimal dilation.
    pub env_dim: usize,
    /// Premise gate: H(Φρ) ≥ H(ρ) held on every sampled state, at the
    /// chaotic state, and at the assisted-optimal average.
    pub entropy_nondecreasing: bool,
    /// Gate: the found optimal ensemble averages to the chaotic state.
    pub chaotic_average: bool,
    /// Gate: C_ea is attained at the chaotic state and the complementary
    /// channel's optimal ensemble also averages to it.
    pub assisted_chaotic: bool,
    pub lines: Vec<BoundLine>,
}

impl BoundsReport {
    pub fn all_pass(&self) -> bool {
        self.lines.iter().all(|l| l.pass)
    }
}

/// Evaluate the full set of capacity relations for one channel.
pub fn bounds_report(ch: &KrausChannel, opts: &OptimizerOptions) -> BoundsReport {
    let d_a = ch.dim_in();
    let minimal = ch.minimal_kraus();
    let comp = minimal.complement();
    let env_dim = minimal.kraus_count();
    let chaotic = DensityMatrix::maximally_mixed(d_a);

    // The five independent optimizations, in parallel.
    let mut holevo_r = None;
    let mut holevo_c_r = None;
    let mut ea_r = None;
    let mut q1_r = None;
    let mut min_out_r = None;
    rayon::scope(|s| {
        s.spawn(|_| holevo_r = Some(holevo_capacity(ch, opts)));
        s.spawn(|_| holevo_c_r = Some(holevo_capacity(&comp, opts)));
        s.spawn(|_| ea_r = Some(ea_capacity(ch, opts)));
        s.spawn(|_| q1_r = Some(q1(ch, opts)));
        s.spawn(|_| min_out_r = Some(min_output_entropy(ch, opts)));
    });
    let holevo = holevo_r.unwrap();
    let holevo_complement = holevo_c_r.unwrap();
    let ea = ea_r.unwrap();
    let q1v = q1_r.unwrap();
    let min_output = min_out_r.unwrap();

    let rho1 = holevo.optimizer.average_state();
    let rho1_hat = holevo_complement.optimizer.average_state();
    let rho2 = ea.optimizer.average_state();

    let c = holevo.value;
    let c_hat = holevo_complement.value;
    let cea = ea.value;
    let log_da = (d_a as f64).log2();
    let log_de = (env_dim as f64).log2();
    let h_rho1 = entropy(&rho1);
    let h_rho2 = entropy(&rho2);
    let h_out_rho2 = entropy_psd(&ch.apply_matrix(rho2.matrix()));
    let chi_comp_rho2 = chi_function(&comp, &rho2, opts)
        .expect("state and channel dimensions agree")
        .value;
    let chi_rho2 = chi_function(ch, &rho2, opts)
        .expect("state and channel dimensions agree")
        .value;
    let i_rho2 = mutual_information(ch, &rho2).expect("state and channel dimensions agree");
    let i_chaotic = mutual_information(ch, &chaotic).expect("chaotic state matches the channel");

    // Premise gate: output entropy never below input entropy. A necessary-
    // condition screen, not a proof: seeded random states, plus the two
    // states where violations concentrate — the chaotic state (the input
    // entropy maximum; for equal dimensions failing there is exactly
    // non-unitality) and rho2, the state the gated lines are evaluated at.
    let entropy_nondecreasing = {
        let mut rng = restart_rng(opts.seed, 0xE27A);
        let sampled = (0..40).all(|k| {
            let rho = random_density(d_a, (k % d_a) + 1, &mut rng);
            let h_in = entropy(&rho);
            let h_out = entropy_psd(&ch.apply_matrix(rho.matrix()));
            h_out + 1e-9 >= h_in
        });
        let at_chaotic =
            entropy_psd(&ch.apply_matrix(chaotic.matrix())) + 1e-9 >= log_da;
        let at_rho2 = h_out_rho2 + 1e-9 >= h_rho2;
        sampled && at_chaotic && at_rho2
    };
    let chaotic_average = trace_norm_hermitian(&rho1.matrix().sub(chaotic.matrix()))
        .expect("difference of density matrices is Hermitian")
        <= 1e-3;
    let assisted_chaotic = (cea - i_chaotic).abs() <= (10.0 * opts.obj_tol).max(1e-6)
        && trace_norm_hermitian(&rho1_hat.matrix().sub(chaotic.matrix()))
            .expect("difference of density matrices is Hermitian")
            <= 1e-3;

    let mut lines = vec![
        line("C <= C_ea", c, cea),
        line("C_ea <= C + log2(dA)", cea, c + log_da),
        line("H(rho1) - C(comp) <= C_ea - C", h_rho1 - c_hat, cea - c),
        line(
            "C_ea - C <= H(rho2) - chi_comp(rho2)",
            cea - c,
            h_rho2 - chi_comp_rho2,
        ),
        line("C - C(comp) <= C_ea - C", c - c_hat, cea - c),
        line("H(rho1) - log2(dE) <= C_ea - C", h_rho1 - log_de, cea - c),
        line("C <= H(rho1)", c, h_rho1),
    ];
    if entropy_nondecreasing {
        lines.push(line(
            "H(rho2) - chi_comp(rho2) <= H(out rho2) - chi_comp(rho2)",
            h_rho2 - chi_comp_rho2,
            h_out_rho2 - chi_comp_rho2,
        ));
        lines.push(line(
            "C_ea - C <= Q1 + H(out rho2) - chi(rho2)",
            cea - c,
            q1v.value + h_out_rho2 - chi_rho2,
        ));
    }
    if chaotic_average {
        lines.push(line("log2(dA) - C(comp) <= C_ea - C", log_da - c_hat, cea - c));
        lines.push(line(
            "log2(dA) - log2(dE) <= C_ea - C",
            log_da - log_de,
            cea - c,
        ));
    }
    if assisted_chaotic {
        lines.push(line("C_ea - C <= log2(dA) - C(comp)", cea - c, log_da - c_hat));
    }
    lines.push(line("chi(rho2) <= I(rho2)", chi_rho2, i_rho2));
    lines.push(line(
        "I(rho2) <= chi(rho2) + log2(dA)",
        i_rho2,
        chi_rho2 + log_da,
    ));

    BoundsReport {
        holevo,
        holevo_complement,
        ea,
        q1: q1v,
        min_output,
        env_dim,
        entropy_nondecreasing,
        chaotic_average,
        assisted_chaotic,
        lines,
    }
}

/// Capacities of a channel covariant under a unitary group whose input
/// action averages every state to the chaotic state.
///
/// Covariance (Φ(V_gρV_g†) = U_gΦ(ρ)U_g† for every listed pair) is verified
/// numerically, and the twirling property is checked on seeded random
/// states; failing either check returns an error rather than a wrong
/// closed form. Under these hypotheses the one-shot classical capacity is
/// H(Φρ_c) − H_min with the orbit of any minimal-output-entropy vector as an
/// optimal ensemble, and the entanglement-assisted capacity is attained at
/// the chaotic state. Returns (classical, entanglement-assisted).
pub fn covariant_capacities(
    ch: &KrausChannel,
    input_unitaries: &[ComplexMatrix],
    output_unitaries: &[ComplexMatrix],
    opts: &OptimizerOptions,
) -> Result<(CapacityResult, CapacityResult)> {
    if !verify_covariance(ch, input_unitaries, output_unitaries, 1e-8)? {
        return Err(Error::CovarianceNotVerified(
            "channel does not intertwine the given unitary pairs".to_string(),
        ));
    }
    let d_a = ch.dim_in();
    let chaotic = DensityMatrix::maximally_mixed(d_a);
    let n_g = input_unitaries.len() as f64;
    let mut rng = restart_rng(opts.seed, 0x7712);
    for k in 0..5 {
        let rho = random_density(d_a, (k % d_a) + 1, &mut rng);
        let mut avg = ComplexMatrix::zeros(d_a, d_a);
        for v in input_unitaries {
            avg = avg.add(&v.mul(rho.matrix()).mul(&v.adjoint()));
        }
        avg = avg.scale_real(1.0 / n_g);
        if avg.sub(chaotic.matrix()).max_abs() > 1e-8 {
            return Err(Error::CovarianceNotVerified(
                "input unitaries do not average states to the chaotic state".to_string(),
            ));
        }
    }

    let h_out_chaotic = entropy_psd(&ch.apply_matrix(chaotic.matrix()));
    let min_out = min_output_entropy(ch, opts);
    let psi = match &min_out.optimizer {
        Optimizer::State(s) => s.clone(),
        Optimizer::Ensemble(_) => unreachable!("minimal output entropy reports a state"),
    };
    let classical_value = h_out_chaotic - min_out.value;
    let states: Vec<DensityMatrix> = input_unitaries
        .par_iter()
        .map(|v| {
            DensityMatrix::new(v.mul(psi.matrix()).mul(&v.adjoint()).hermitized())
                .expect("unitary conjugate of a density matrix")
        })
        .collect();
    let weights = vec![1.0 / n_g; input_unitaries.len()];
    let ensemble = Ensemble::new(weights, states).expect("uniform weights form a distribution");
    let achieved = holevo_quantity(&ensemble.push_through(ch).expect("states match the channel"));
    let classical = CapacityResult {
        value: classical_value,
        optimizer: Optimizer::Ensemble(ensemble),
        certificate_gap: classical_value - achieved,
        converged: min_out.converged,
    };

    let comp = ch.minimal_kraus().complement();
    let h_env_chaotic = entropy_psd(&comp.apply_matrix(chaotic.matrix()));
    let assisted_value = (d_a as f64).log2() + h_out_chaotic - h_env_chaotic;
    let i_chaotic = mutual_information(ch, &chaotic).expect("chaotic state matches the channel");
    let assisted = CapacityResult {
        value: assisted_value,
        optimizer: Optimizer::State(chaotic),
        certificate_gap: (i_chaotic - assisted_value).abs(),
        converged: true,
    };
    Ok((classical, assisted))
}
