//! Brute-force reference computations for the integration tests.
//!
//! Everything in this module is deliberately independent of the optimizers
//! under test: finite angle grids over qubit pure states, textbook
//! Blahut–Arimoto iteration on the induced finite classical channels, and a
//! small linear-programming sandwich (primal pair decompositions against a
//! Lagrangian dual) for decomposition entropies of the qubit dephasing
//! channel. Agreement is always asserted through a window wide enough to
//! absorb the documented grid error.
#![allow(dead_code)]

/// Binary entropy in bits.
pub fn h2(p: f64) -> f64 {
    let mut s = 0.0;
    for q in [p, 1.0 - p] {
        if q > 0.0 {
            s -= q * q.log2();
        }
    }
    s
}

/// Shannon entropy of a probability vector, in bits.
pub fn entropy_bits(p: &[f64]) -> f64 {
    p.iter().filter(|&&q| q > 0.0).map(|&q| -q * q.log2()).sum()
}

/// Entropy of a qubit state with Bloch radius `r`.
pub fn qubit_entropy(r: f64) -> f64 {
    h2((1.0 - r.min(1.0)) / 2.0)
}

/// KL divergence D(p‖q) in bits; q must dominate p.
fn kl_bits(p: &[f64], q: &[f64]) -> f64 {
    let mut s = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            s += pi * (pi / qi).log2();
        }
    }
    s
}

/// Capacity of a finite classical channel (rows = input letters) by
/// Blahut–Arimoto. Returns the mutual information of the final distribution,
/// which is a feasible value within `tol` of the maximum at termination.
pub fn classical_capacity(letters: &[Vec<f64>], tol: f64, max_iters: usize) -> f64 {
    let (value, _weights) = ba_iterate(letters, None, 0.0, tol, max_iters);
    value
}

/// Capacity of a finite classical channel under a mean-cost constraint
/// `Σ w_j e_j ≤ level`, by tilted Blahut–Arimoto with bisection on the
/// cost multiplier. Returns the mutual information at the feasible optimum.
pub fn constrained_classical_capacity(
    letters: &[Vec<f64>],
    energies: &[f64],
    level: f64,
    tol: f64,
    max_iters: usize,
) -> f64 {
    let (value, weights) = ba_iterate(letters, Some(energies), 0.0, tol, max_iters);
    let mean = |w: &[f64]| -> f64 { w.iter().zip(energies).map(|(wi, ei)| wi * ei).sum() };
    if mean(&weights) <= level + 1e-9 {
        return value;
    }
    // Find an upper multiplier that is feasible, then bisect. The mean cost
    // is nonincreasing in the multiplier.
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    loop {
        let (_, w) = ba_iterate(letters, Some(energies), hi, tol, max_iters);
        if mean(&w) <= level {
            break;
        }
        hi *= 2.0;
        assert!(hi < 1e12, "constraint bisection failed to find a feasible multiplier");
    }
    let mut w_lo = weights;
    let (_, mut w_hi) = ba_iterate(letters, Some(energies), hi, tol, max_iters);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let (_, w) = ba_iterate(letters, Some(energies), mid, tol, max_iters);
        if mean(&w) <= level {
            hi = mid;
            w_hi = w;
        } else {
            lo = mid;
            w_lo = w;
        }
    }
    // Time-share between the last infeasible and feasible tilted optima so the
    // returned distribution meets the level exactly; both sides are optimal at
    // the critical multiplier, and mutual information is concave in the
    // weights, so the mixture attains the constrained capacity.
    let (e_lo, e_hi) = (mean(&w_lo), mean(&w_hi));
    let t = if e_lo - e_hi > 1e-12 {
        ((level - e_hi) / (e_lo - e_hi)).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let mix: Vec<f64> = w_lo
        .iter()
        .zip(&w_hi)
        .map(|(a, b)| t * a + (1.0 - t) * b)
        .collect();
    let k = letters[0].len();
    let mut q = vec![0.0; k];
    for (wj, row) in mix.iter().zip(letters) {
        for (qi, &pji) in q.iter_mut().zip(row) {
            *qi += wj * pji;
        }
    }
    mix.iter()
        .zip(letters)
        .map(|(wj, row)| wj * kl_bits(row, &q))
        .sum()
}

/// One tilted Blahut–Arimoto run at a fixed cost multiplier. Returns the
/// mutual information (not the tilted objective) and the weights.
fn ba_iterate(
    letters: &[Vec<f64>],
    energies: Option<&[f64]>,
    multiplier: f64,
    tol: f64,
    max_iters: usize,
) -> (f64, Vec<f64>) {
    let n = letters.len();
    let k = letters[0].len();
    let mut w = vec![1.0 / n as f64; n];
    let mut q = vec![0.0; k];
    let mut scores = vec![0.0; n];
    for _ in 0..max_iters {
        for qi in q.iter_mut() {
            *qi = 0.0;
        }
        for (wj, row) in w.iter().zip(letters) {
            for (qi, &pji) in q.iter_mut().zip(row) {
                *qi += wj * pji;
            }
        }
        let mut mean_score = 0.0;
        let mut max_score = f64::NEG_INFINITY;
        for j in 0..n {
            let tilt = multiplier * energies.map_or(0.0, |e| e[j]);
            scores[j] = kl_bits(&letters[j], &q) - tilt;
            mean_score += w[j] * scores[j];
            if scores[j] > max_score {
                max_score = scores[j];
            }
        }
        if max_score - mean_score <= tol {
            break;
        }
        let mut total = 0.0;
        for j in 0..n {
            // Exponentiate relative to the maximum for stability.
            w[j] *= (scores[j] - max_score).exp2();
            total += w[j];
        }
        for wj in w.iter_mut() {
            *wj /= total;
        }
    }
    // Mutual information of the final distribution.
    for qi in q.iter_mut() {
        *qi = 0.0;
    }
    for (wj, row) in w.iter().zip(letters) {
        for (qi, &pji) in q.iter_mut().zip(row) {
            *qi += wj * pji;
        }
    }
    let info = w
        .iter()
        .zip(letters)
        .map(|(wj, row)| wj * kl_bits(row, &q))
        .sum();
    (info, w)
}

/// Output distributions of the trine measurement channel over a planar grid
/// of pure-state angles. The three analyzer directions sit at Bloch angles
/// 2πk/3 in the plane of the trine, so a state at planar angle α produces
/// outcome probabilities (1 + cos(θ_k − α))/3. Planar states dominate:
/// off-plane states produce strictly less extremal distributions.
pub fn trine_letters(n: usize) -> Vec<Vec<f64>> {
    let mut rows = Vec::with_capacity(n);
    for j in 0..n {
        let alpha = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
        let mut row = Vec::with_capacity(3);
        for k in 0..3 {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
            row.push((1.0 + (theta - alpha).cos()) / 3.0);
        }
        rows.push(row);
    }
    rows
}

/// Letters of the computational-basis qubit dephasing channel over a planar
/// angle grid, with energies under the observable rotated by π/4 from the
/// dephasing basis, i.e. H = [[1/2, -1/2], [-1/2, 1/2]].
///
/// A state (cos(α/2), e^{iφ} sin(α/2)) has the same output distribution for
/// every phase φ while its energy sweeps the interval between the two real
/// representatives at ±α; the full real circle therefore dominates all
/// complex inputs for a mean-energy constraint.
pub fn rotated_constraint_letters(n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rows = Vec::with_capacity(n);
    let mut energies = Vec::with_capacity(n);
    for j in 0..n {
        let alpha = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
        let c = (alpha / 2.0).cos().powi(2);
        rows.push(vec![c, 1.0 - c]);
        energies.push((1.0 - alpha.sin()) / 2.0);
    }
    (rows, energies)
}

/// A two-sided estimate `(lower, upper)` of the minimal average output
/// entropy of the qubit dephasing channel over pure-state decompositions of
/// the state with planar Bloch coordinates (x, z), x ≥ 0.
///
/// A pure state with z-component ζ contributes output entropy f(ζ) =
/// h2((1+ζ)/2) and can realize any transverse moment of magnitude up to
/// s(ζ) = √(1−ζ²); a decomposition is therefore feasible iff its ζ-moments
/// satisfy Σπζ = z and Σπs(ζ) ≥ x. The upper bound minimizes over two-point
/// grid decompositions (each one exactly realizable); the lower bound is the
/// Lagrangian dual max_{a, b≥0} [min_ζ (f − aζ − bs) + az + bx], valid by
/// weak duality.
pub struct DecompositionEntropyBounds {
    pub lower: f64,
    pub upper: f64,
}

fn dephasing_f(z: f64) -> f64 {
    h2((1.0 + z) / 2.0)
}

fn dephasing_s(z: f64) -> f64 {
    (1.0 - z * z).max(0.0).sqrt()
}

/// Cosine-spaced grid on [−1, 1]: dense near the endpoints where the output
/// entropy has unbounded slope.
fn cosine_grid(points: usize) -> Vec<f64> {
    (0..points)
        .map(|j| (std::f64::consts::PI * j as f64 / (points - 1) as f64).cos())
        .rev()
        .collect()
}

/// Two-point upper bound on the minimal decomposition entropy.
pub fn decomposition_entropy_pair_bound(x: f64, z: f64, grid: &[f64]) -> f64 {
    let f: Vec<f64> = grid.iter().map(|&g| dephasing_f(g)).collect();
    let s: Vec<f64> = grid.iter().map(|&g| dephasing_s(g)).collect();
    let mut best = f64::INFINITY;
    for (i, &zi) in grid.iter().enumerate() {
        if zi > z {
            continue;
        }
        for (j, &zj) in grid.iter().enumerate() {
            if zj < z {
                continue;
            }
            let weight = if zj - zi > 1e-15 { (zj - z) / (zj - zi) } else { 1.0 };
            if weight * s[i] + (1.0 - weight) * s[j] + 1e-12 < x {
                continue;
            }
            let value = weight * f[i] + (1.0 - weight) * f[j];
            if value < best {
                best = value;
            }
        }
    }
    assert!(best.is_finite(), "no feasible pair decomposition on the grid");
    best
}

/// Lagrangian-dual lower bound on the minimal decomposition entropy.
///
/// The inner minimum over ζ is taken by a coarse cosine-spaced bracket grid
/// followed by golden-section refinement of the bracketing cells.
pub fn decomposition_entropy_dual_bound(x: f64, z: f64) -> f64 {
    let bracket = cosine_grid(1201);
    let f_br: Vec<f64> = bracket.iter().map(|&g| dephasing_f(g)).collect();
    let s_br: Vec<f64> = bracket.iter().map(|&g| dephasing_s(g)).collect();
    let mut best = f64::NEG_INFINITY;
    let steps = 301;
    for ai in 0..steps {
        let a = -6.0 + 12.0 * ai as f64 / (steps - 1) as f64;
        for bi in 0..steps {
            let b = 6.0 * bi as f64 / (steps - 1) as f64;
            let mut min_idx = 0;
            let mut min_val = f64::INFINITY;
            for idx in 0..bracket.len() {
                let v = f_br[idx] - a * bracket[idx] - b * s_br[idx];
                if v < min_val {
                    min_val = v;
                    min_idx = idx;
                }
            }
            let g = |zeta: f64| dephasing_f(zeta) - a * zeta - b * dephasing_s(zeta);
            let lo = bracket[min_idx.saturating_sub(1)];
            let hi = bracket[(min_idx + 1).min(bracket.len() - 1)];
            let inner = golden_min(g, lo, hi).min(min_val);
            let dual = inner + a * z + b * x;
            if dual > best {
                best = dual;
            }
        }
    }
    best
}

fn golden_min(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let phi = 0.618_033_988_749_894_9_f64;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut g1 = g(x1);
    let mut g2 = g(x2);
    for _ in 0..70 {
        if g1 < g2 {
            hi = x2;
            x2 = x1;
            g2 = g1;
            x1 = hi - phi * (hi - lo);
            g1 = g(x1);
        } else {
            lo = x1;
            x1 = x2;
            g1 = g2;
            x2 = lo + phi * (hi - lo);
            g2 = g(x2);
        }
    }
    g1.min(g2)
}

/// χ of the qubit dephasing channel at planar Bloch coordinates (x, z),
/// as a `(lower, upper)` window from the dual/pair decomposition bounds:
/// χ = h2((1+z)/2) − Ĥ with Ĥ between the two bounds.
pub fn dephasing_chi_window(x: f64, z: f64) -> DecompositionEntropyBounds {
    let grid = cosine_grid(601);
    let pair = decomposition_entropy_pair_bound(x, z, &grid);
    let dual = decomposition_entropy_dual_bound(x, z);
    let out = h2((1.0 + z) / 2.0);
    DecompositionEntropyBounds {
        lower: out - pair,
        upper: out - dual,
    }
}

/// A `(lower, upper)` window for the maximal gap between input entropy and χ
/// for the qubit dephasing channel (its noise parameter; the channel is its
/// own complement up to relabeling). The gap at planar coordinates (x, z) is
/// H(ρ) − h2((1+z)/2) + Ĥ(x, z); the pair bound on Ĥ overestimates it
/// pointwise and the dual bound underestimates it, so sweeping states with
/// the pair bound and evaluating the dual at the sweep's argmax sandwiches
/// the true maximum (up to state-grid resolution, absorbed by the caller's
/// tolerance).
pub fn dephasing_noise_window() -> DecompositionEntropyBounds {
    let grid = cosine_grid(601);
    let mut best_pair = f64::NEG_INFINITY;
    let mut arg = (0.0, 0.0);
    let step = 0.02;
    let mut x = step;
    while x < 1.0 {
        let mut z = -1.0 + step;
        while z < 1.0 {
            let r2 = x * x + z * z;
            if r2 < 1.0 - 1e-9 {
                let pair = decomposition_entropy_pair_bound(x, z, &grid);
                let gap = qubit_entropy(r2.sqrt()) - h2((1.0 + z) / 2.0) + pair;
                if gap > best_pair {
                    best_pair = gap;
                    arg = (x, z);
                }
            }
            z += step;
        }
        x += step;
    }
    let dual = decomposition_entropy_dual_bound(arg.0, arg.1);
    let r = (arg.0 * arg.0 + arg.1 * arg.1).sqrt();
    let lower = qubit_entropy(r) - h2((1.0 + arg.1) / 2.0) + dual;
    DecompositionEntropyBounds {
        lower,
        upper: best_pair,
    }
}
