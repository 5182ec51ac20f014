//! Cross-checks of the capacity optimizers against the independent
//! brute-force references in `common`.

mod common;

use qcap_core::capacity::{
    constrained_ea, constrained_holevo, chi_function, ea_capacity, gibbs_state, holevo_capacity,
    max_delta, ConstraintSpec, OptimizerOptions,
};
use qcap_core::channels::{dephasing_computational, trine_channel, DensityMatrix};
use qcap_core::entropy::entropy;
use qcap_core::matops::{Complex64, ComplexMatrix};

fn opts() -> OptimizerOptions {
    OptimizerOptions {
        restarts: 8,
        ..OptimizerOptions::with_seed(11)
    }
}

fn real_matrix(rows: &[&[f64]]) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows.len(), rows[0].len(), |i, j| {
        Complex64::new(rows[i][j], 0.0)
    })
}

/// Qubit state from planar Bloch coordinates (x, z).
fn planar_state(x: f64, z: f64) -> DensityMatrix {
    let m = real_matrix(&[
        &[(1.0 + z) / 2.0, x / 2.0],
        &[x / 2.0, (1.0 - z) / 2.0],
    ]);
    DensityMatrix::new(m).expect("planar coordinates inside the Bloch ball")
}

#[test]
fn trine_capacity_matches_planar_grid() {
    let grid_value = common::classical_capacity(&common::trine_letters(1257), 1e-10, 20_000);
    let result = holevo_capacity(&trine_channel(), &opts());
    assert!(result.converged);
    assert!(
        (result.value - grid_value).abs() <= 2e-3,
        "optimizer {} vs grid {}",
        result.value,
        grid_value
    );
}

#[test]
fn trine_assisted_gap_margin_matches_grid() {
    let ch = trine_channel();
    let grid_value = common::classical_capacity(&common::trine_letters(1257), 1e-10, 20_000);
    let holevo = holevo_capacity(&ch, &opts());
    let assisted = ea_capacity(&ch, &opts());
    assert!((assisted.value - 1.0).abs() <= 1e-4, "assisted {}", assisted.value);
    let margin = assisted.value - holevo.value;
    let grid_margin = 1.0 - grid_value;
    assert!(
        (margin - grid_margin).abs() <= 5e-3,
        "margin {margin} vs grid margin {grid_margin}"
    );
}

#[test]
fn dephasing_chi_at_chaotic_state_is_one_bit() {
    let ch = dephasing_computational(2);
    let rho = DensityMatrix::maximally_mixed(2);
    let result = chi_function(&ch, &rho, &opts()).unwrap();
    assert!((result.value - 1.0).abs() <= 1e-5, "chi {}", result.value);
    // The window from the decomposition-entropy sandwich must agree.
    let window = common::dephasing_chi_window(0.0, 0.0);
    assert!(window.upper - window.lower <= 2e-3);
    assert!(result.value >= window.lower - 1e-3 && result.value <= window.upper + 1e-3);
}

#[test]
fn dephasing_chi_off_axis_sits_in_grid_window() {
    let (x, z) = (0.5, 0.3);
    let ch = dephasing_computational(2);
    let result = chi_function(&ch, &planar_state(x, z), &opts()).unwrap();
    let window = common::dephasing_chi_window(x, z);
    assert!(
        window.upper - window.lower <= 2e-3,
        "grid window too wide: [{}, {}]",
        window.lower,
        window.upper
    );
    assert!(
        result.value >= window.lower - 1e-3 && result.value <= window.upper + 1e-3,
        "chi {} outside window [{}, {}]",
        result.value,
        window.lower,
        window.upper
    );
}

#[test]
fn dephasing_noise_parameter_sits_in_grid_window() {
    let ch = dephasing_computational(2);
    let result = max_delta(&ch, &opts());
    let window = common::dephasing_noise_window();
    assert!(
        window.upper - window.lower <= 3e-3,
        "grid window too wide: [{}, {}]",
        window.lower,
        window.upper
    );
    assert!(window.lower > 0.05, "noise parameter should be clearly positive");
    assert!(
        result.value >= window.lower - 5e-3 && result.value <= window.upper + 5e-3,
        "noise parameter {} outside window [{}, {}]",
        result.value,
        window.lower,
        window.upper
    );
}

#[test]
fn rotated_observable_constrained_capacities_match_grid() {
    let ch = dephasing_computational(2);
    let h_rot = real_matrix(&[&[0.5, -0.5], &[-0.5, 0.5]]);
    let spec = ConstraintSpec::new(h_rot, 0.3).unwrap();

    let (letters, energies) = common::rotated_constraint_letters(629);
    let grid_value =
        common::constrained_classical_capacity(&letters, &energies, 0.3, 1e-10, 20_000);

    let holevo = constrained_holevo(&ch, &spec, &opts()).unwrap();
    assert!(
        (holevo.capacity.value - grid_value).abs() <= 5e-3,
        "constrained optimizer {} vs grid {}",
        holevo.capacity.value,
        grid_value
    );
    assert!(holevo.constraint_active);
    assert!(holevo.expectation <= 0.3 + 1e-6);

    let assisted = constrained_ea(&ch, &spec, &opts()).unwrap();
    assert!(
        (assisted.capacity.value - common::h2(0.3)).abs() <= 1e-4,
        "constrained assisted {} vs {}",
        assisted.capacity.value,
        common::h2(0.3)
    );
    // The rotated observable forces a strict gap between the two.
    assert!(assisted.capacity.value - holevo.capacity.value >= 0.01);
}

#[test]
fn diagonal_observable_constrained_capacities_match_gibbs() {
    let ch = dephasing_computational(2);
    let h_diag = real_matrix(&[&[0.0, 0.0], &[0.0, 1.0]]);
    let spec = ConstraintSpec::new(h_diag, 0.3).unwrap();

    let gibbs = gibbs_state(&spec).unwrap();
    assert!(gibbs.constraint_active);
    assert!((spec.expectation(&gibbs.state) - 0.3).abs() <= 1e-10);
    let target = entropy(&gibbs.state);
    assert!((target - common::h2(0.3)).abs() <= 1e-12);

    let holevo = constrained_holevo(&ch, &spec, &opts()).unwrap();
    let assisted = constrained_ea(&ch, &spec, &opts()).unwrap();
    assert!(
        (holevo.capacity.value - target).abs() <= 1e-4,
        "constrained value {} vs entropy target {}",
        holevo.capacity.value,
        target
    );
    assert!(
        (assisted.capacity.value - target).abs() <= 1e-4,
        "constrained assisted {} vs entropy target {}",
        assisted.capacity.value,
        target
    );
}
