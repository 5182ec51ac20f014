//! Structural properties of channel representations: minimality, complement
//! symmetry, re-representation, and classical-quantum detection round trips.

use qcap_core::channels::{cq_channel, detect_classical_quantum, DensityMatrix};
use qcap_core::entropy::entropy;
use qcap_core::matops::{hermitian_eigendecompose, ComplexMatrix, ComplexVector};
use qcap_core::rand_gen::{
    random_channel, random_cq_structure, random_state_vector, random_unitary,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn dims_for(k: usize) -> (usize, usize, usize) {
    match k % 5 {
        0 => (2, 2, 2),
        1 => (2, 3, 3),
        2 => (3, 2, 2),
        3 => (3, 3, 4),
        _ => (2, 2, 3),
    }
}

#[test]
fn minimal_kraus_count_matches_choi_rank() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    for k in 0..100 {
        let (da, db, nk) = dims_for(k);
        let ch = random_channel(da, db, nk, &mut rng);
        let choi = ch.choi();
        let eig = hermitian_eigendecompose(&choi.matrix).unwrap();
        let rank = eig.eigenvalues.iter().filter(|&&l| l > 1e-10).count();
        let minimal = ch.minimal_kraus();
        assert_eq!(
            minimal.kraus_count(),
            rank,
            "instance {k}: minimal family has {} operators, Choi rank is {rank}",
            minimal.kraus_count()
        );
        assert!(
            minimal.choi().max_abs_diff(&choi) < 1e-10,
            "instance {k}: minimal representation changed the Choi matrix"
        );
    }
}

#[test]
fn channel_and_complement_agree_on_pure_output_entropy() {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    for k in 0..40 {
        let (da, db, nk) = dims_for(k);
        let ch = random_channel(da, db, nk, &mut rng);
        let comp = ch.minimal_kraus().complement();
        let rho = DensityMatrix::pure(&random_state_vector(da, &mut rng));
        let h_out = entropy(&ch.apply(&rho).unwrap());
        let h_env = entropy(&comp.apply(&rho).unwrap());
        assert!(
            (h_out - h_env).abs() < 1e-8,
            "instance {k}: output entropy {h_out} vs environment entropy {h_env}"
        );
    }
}

#[test]
fn double_complement_preserves_pure_output_entropy() {
    let mut rng = ChaCha8Rng::seed_from_u64(52);
    for k in 0..20 {
        let (da, db, nk) = dims_for(k);
        let ch = random_channel(da, db, nk, &mut rng);
        let double = ch.minimal_kraus().complement().minimal_kraus().complement();
        let rho = DensityMatrix::pure(&random_state_vector(da, &mut rng));
        let a = entropy(&ch.apply(&rho).unwrap());
        let b = entropy(&double.apply(&rho).unwrap());
        assert!(
            (a - b).abs() < 1e-8,
            "instance {k}: double complement changed a pure output entropy"
        );
    }
}

/// Rewriting the Kraus family through an overcomplete system on the
/// environment is representation-only: the Choi matrix is unchanged while
/// the operator count grows to the system size.
#[test]
fn overcomplete_rerepresentation_preserves_the_choi_matrix() {
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    for k in 0..20 {
        let (da, db, nk) = dims_for(k);
        let ch = random_channel(da, db, nk, &mut rng);
        let n = ch.kraus_count();
        let m = 2 * n;
        // Conjugated rows of an isometry C^n -> C^m resolve the identity on C^n.
        let u = random_unitary(m, &mut rng);
        let vectors: Vec<ComplexVector> = (0..m)
            .map(|row| {
                ComplexVector::from_components((0..n).map(|i| u.get(row, i).conj()).collect())
            })
            .collect();
        let rewritten = ch.rekraus_from_overcomplete(&vectors).unwrap();
        assert_eq!(rewritten.kraus_count(), m);
        assert!(
            rewritten.choi().max_abs_diff(&ch.choi()) < 1e-10,
            "instance {k}: re-representation moved the Choi matrix"
        );
    }
}

#[test]
fn classical_quantum_detection_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(54);
    for k in 0..20 {
        let d_in = 2 + (k % 3);
        let d_out = 2 + ((k + 1) % 2);
        let s = random_cq_structure(d_in, d_out, &mut rng);
        let ch = cq_channel(&s).unwrap();
        let detection = detect_classical_quantum(&ch, 1e-8);
        let found = detection
            .structure()
            .unwrap_or_else(|| panic!("instance {k}: constructed c-q channel not detected"));
        assert!(found.basis_deviation() < 1e-8);
        let rebuilt = cq_channel(found).unwrap();
        assert!(
            rebuilt.choi().max_abs_diff(&ch.choi()) < 1e-8,
            "instance {k}: detected structure rebuilds a different channel"
        );
    }
}

#[test]
fn generic_random_channels_are_not_detected_as_classical_quantum() {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    for k in 0..10 {
        let (da, db, nk) = dims_for(k);
        let ch = random_channel(da, db, nk, &mut rng);
        let detection = detect_classical_quantum(&ch, 1e-8);
        assert!(
            detection.structure().is_none(),
            "instance {k}: a generic random channel was classified classical-quantum"
        );
    }
}

#[test]
fn input_restriction_matches_direct_conjugation() {
    let mut rng = ChaCha8Rng::seed_from_u64(56);
    let ch = random_channel(3, 2, 3, &mut rng);
    // Two orthonormal columns from a random unitary form an isometry C^2 -> C^3.
    let u = random_unitary(3, &mut rng);
    let isometry = ComplexMatrix::from_fn(3, 2, |i, j| u.get(i, j));
    let restricted = ch.restrict_input(&isometry).unwrap();
    for _ in 0..5 {
        let rho_small = DensityMatrix::pure(&random_state_vector(2, &mut rng));
        let lifted = isometry.mul(rho_small.matrix()).mul(&isometry.adjoint());
        let direct = ch.apply_matrix(&lifted);
        let via_restriction = restricted.apply_matrix(rho_small.matrix());
        assert!(direct.sub(&via_restriction).max_abs() < 1e-12);
    }
}
