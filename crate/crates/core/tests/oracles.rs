use approx::assert_relative_eq;
use dynsc_core::eigen::{leading_eigenpairs, scree_values, EigenOptions};
use dynsc_core::estimate::estimate_b;
use dynsc_core::evaluate::{gamma_n, heterogeneity_tau, spectral_norm_deviation};
use dynsc_core::model::{
    expected_sum_matrix, normalize_psi, sample_ddcbm_layer, sample_dsbm_layer, sample_memberships,
};
use dynsc_core::{aggregate_sum, DenseMatrix, GroundTruth, LayerStack, SparseSymGraph};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn to_nalgebra(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m.get(i, j))
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> SparseSymGraph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    SparseSymGraph::from_edge_list(n, &edges).unwrap()
}

#[test]
fn eigenpairs_match_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..40 {
        let n = rng.random_range(3..=64);
        let p = rng.random_range(0.05..0.6);
        let g = random_graph(&mut rng, n, p);
        let k = rng.random_range(1..=n.min(5));
        let ours = leading_eigenpairs(&g, k, &EigenOptions::default()).unwrap();
        let oracle = to_nalgebra(&g.to_dense()).symmetric_eigen();
        let mut abs: Vec<f64> = oracle.eigenvalues.iter().map(|v| v.abs()).collect();
        abs.sort_by(|a, b| b.total_cmp(a));
        for i in 0..k {
            assert_relative_eq!(ours.values[i].abs(), abs[i], epsilon = 1e-6);
        }
        // residual and orthonormality checks hold even inside degenerate eigenspaces
        let u = to_nalgebra(&ours.vectors);
        let gram = u.transpose() * &u;
        assert!((gram - DMatrix::identity(k, k)).amax() < 1e-8);
        let a = to_nalgebra(&g.to_dense());
        for j in 0..k {
            let col = u.column(j);
            let r = &a * col - col * ours.values[j];
            assert!(r.norm() <= 1e-7 * ours.values[j].abs().max(1.0));
        }
    }
}

#[test]
fn disjoint_cliques_have_a_double_eigenvalue() {
    let mut edges = Vec::new();
    for base in [0, 4] {
        for i in 0..4 {
            for j in i + 1..4 {
                edges.push((base + i, base + j));
            }
        }
    }
    let g = SparseSymGraph::from_edge_list(8, &edges).unwrap();
    let e = leading_eigenpairs(&g, 2, &EigenOptions::default()).unwrap();
    assert_relative_eq!(e.values[0], 3.0, epsilon = 1e-10);
    assert_relative_eq!(e.values[1], 3.0, epsilon = 1e-10);
    // the span is that of the two clique indicators
    for j in 0..2 {
        let inside: f64 = (0..4).map(|i| e.vectors.get(i, j).powi(2)).sum();
        let outside: f64 = (4..8).map(|i| e.vectors.get(i, j).powi(2)).sum();
        assert_relative_eq!(inside + outside, 1.0, epsilon = 1e-10);
        for i in 1..4 {
            assert_relative_eq!(e.vectors.get(i, j), e.vectors.get(0, j), epsilon = 1e-8);
            assert_relative_eq!(e.vectors.get(4 + i, j), e.vectors.get(4, j), epsilon = 1e-8);
        }
    }
}

#[test]
fn eigenvalues_are_permutation_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 50;
    let g = random_graph(&mut rng, n, 0.2);
    let perm: Vec<usize> = (0..n).map(|i| (i * 13 + 7) % n).collect();
    let edges: Vec<(usize, usize)> = g.edges().map(|(i, j, _)| (perm[i], perm[j])).collect();
    let h = SparseSymGraph::from_edge_list(n, &edges).unwrap();
    let a = scree_values(&g, 6, &EigenOptions::default()).unwrap();
    let b = scree_values(&h, 6, &EigenOptions::default()).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_relative_eq!(x, y, epsilon = 1e-8);
    }
}

#[test]
fn spectral_deviation_matches_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let n = rng.random_range(2..=64);
        let g = random_graph(&mut rng, n, 0.3);
        let p = DenseMatrix::from_fn(n, n, |_, _| 0.3);
        let oracle = (to_nalgebra(&g.to_dense()) - to_nalgebra(&p))
            .symmetric_eigen()
            .eigenvalues
            .amax();
        let ours = spectral_norm_deviation(&g, &p).unwrap();
        assert!((ours - oracle).abs() <= 1e-6 * oracle.max(1.0), "{ours} vs {oracle}");
    }
}

#[test]
fn gamma_matches_singular_values() {
    let gt = GroundTruth { z: vec![0, 0, 1, 1, 1, 2, 2, 2, 2], k: 3 };
    let all: Vec<usize> = (0..9).collect();
    let b = DenseMatrix::from_rows(&[[0.6, 0.1, 0.2], [0.1, 0.5, 0.05], [0.2, 0.05, 0.7]]);
    let p = expected_sum_matrix(&gt, &all, &[b.clone(), b], None);
    let sv = to_nalgebra(&p).singular_values();
    let smallest = sv.iter().copied().filter(|s| *s > 1e-9 * sv.max()).fold(f64::INFINITY, f64::min);
    assert_relative_eq!(gamma_n(&p), smallest, max_relative = 1e-10);
    assert_eq!(sv.iter().filter(|s| **s > 1e-9 * sv.max()).count(), 3);
}

#[test]
fn half_weight_vertex_has_half_expected_degree() {
    let n = 200;
    let gt = GroundTruth { z: (0..n).map(|i| i % 2).collect(), k: 2 };
    let mut psi = vec![1.0; n];
    psi[0] = 0.5;
    let b = DenseMatrix::from_rows(&[[0.1, 0.04], [0.04, 0.1]]);
    let seeds = 200;
    let (mut half, mut full) = (0.0, 0.0);
    for seed in 0..seeds {
        let g = sample_ddcbm_layer(&gt, &psi, &b, seed, 0).unwrap();
        half += g.row_sum(0) as f64;
        full += g.row_sum(2) as f64;
    }
    half /= seeds as f64;
    full /= seeds as f64;
    // vertex 2 shares vertex 0's community; its neighbours include vertex 0 at psi 0.5
    let mean_full: f64 = (0..n)
        .filter(|&j| j != 2)
        .map(|j| psi[j] * b.get(0, gt.z[j]))
        .sum();
    let mean_half: f64 = (1..n).map(|j| 0.5 * psi[j] * b.get(0, gt.z[j])).sum();
    let sd = |m: f64| (m / seeds as f64).sqrt();
    assert!((half - mean_half).abs() <= 4.0 * sd(mean_half), "{half} vs {mean_half}");
    assert!((full - mean_full).abs() <= 4.0 * sd(mean_full), "{full} vs {mean_full}");
    assert!((half / full - 0.5).abs() < 0.1);
}

#[test]
fn between_block_edge_frequency_converges() {
    let n = 120;
    let gt = GroundTruth { z: (0..n).map(|i| usize::from(i >= 50)).collect(), k: 2 };
    let b = DenseMatrix::from_rows(&[[0.2, 0.07], [0.07, 0.15]]);
    let reps = 60;
    let pairs = (50 * 70 * reps) as f64;
    let mut hits = 0u64;
    for seed in 0..reps {
        let g = sample_dsbm_layer(&gt, &b, seed as u64, 3);
        hits += g.edges().filter(|&(i, j, _)| gt.z[i] != gt.z[j]).count() as u64;
    }
    let p = 0.07;
    let freq = hits as f64 / pairs;
    assert!((freq - p).abs() <= 4.0 * (p * (1.0 - p) / pairs).sqrt());
}

#[test]
fn block_estimates_are_unbiased_at_truth() {
    let n = 200;
    let b_stack = [
        DenseMatrix::from_rows(&[[0.12, 0.03], [0.03, 0.09]]),
        DenseMatrix::from_rows(&[[0.02, 0.06], [0.06, 0.2]]),
    ];
    let reps = 100;
    let mut sums = [[[0.0f64; 2]; 2]; 2];
    let mut pair_counts = [[0.0f64; 2]; 2];
    for seed in 0..reps {
        let gt = sample_memberships(n, &[0.45, 0.55], seed).unwrap();
        let layers = b_stack
            .iter()
            .enumerate()
            .map(|(t, b)| sample_dsbm_layer(&gt, b, seed, t as u64))
            .collect();
        let stack = LayerStack::new(n, layers).unwrap();
        let truth = gt.membership();
        let sizes = truth.sizes();
        for (t, est) in estimate_b(&stack, &truth).iter().enumerate() {
            for a in 0..2 {
                for c in 0..2 {
                    sums[t][a][c] += est.get(a, c).unwrap();
                }
            }
        }
        for a in 0..2 {
            for c in 0..2 {
                pair_counts[a][c] += if a == c {
                    (sizes[a] * (sizes[a] - 1) / 2) as f64
                } else {
                    (sizes[a] * sizes[c]) as f64
                };
            }
        }
    }
    for (t, b) in b_stack.iter().enumerate() {
        for a in 0..2 {
            for c in 0..2 {
                let mean = sums[t][a][c] / reps as f64;
                let p = b.get(a, c);
                // standard error of the average of `reps` binomial proportions
                let pairs_per_rep = pair_counts[a][c] / reps as f64;
                let se = (p * (1.0 - p) / pairs_per_rep / reps as f64).sqrt();
                assert!((mean - p).abs() <= 4.0 * se, "layer {t} ({a},{c}): {mean} vs {p}");
            }
        }
    }
}

#[test]
fn scree_shows_a_gap_after_k() {
    let n = 200;
    let gt = sample_memberships(n, &[1.0 / 3.0; 3], 9).unwrap();
    let b = DenseMatrix::from_fn(3, 3, |i, j| if i == j { 0.25 } else { 0.03 });
    let layers = (0..4).map(|t| sample_dsbm_layer(&gt, &b, 9, t)).collect();
    let a0 = aggregate_sum(&LayerStack::new(n, layers).unwrap());
    let scree = scree_values(&a0, 6, &EigenOptions::default()).unwrap();
    assert!(scree.windows(2).all(|w| w[0] >= w[1]));
    assert!(scree[2] / scree[3] > 2.0, "{scree:?}");
}

#[test]
fn tau_is_at_least_squared_size() {
    // Cauchy-Schwarz: (sum psi^2)(sum psi^-2) >= m^2
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 60;
    let gt = GroundTruth { z: (0..n).map(|i| i % 3).collect(), k: 3 };
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..1.0)).collect();
    let psi = normalize_psi(&raw, &gt).unwrap();
    for tau in heterogeneity_tau(&psi, &gt).unwrap() {
        assert!(tau >= 400.0 - 1e-9);
    }
}
