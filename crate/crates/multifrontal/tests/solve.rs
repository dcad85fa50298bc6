use multifrontal::{
    nested_dissection, solve_refined, CsrMatrix, DissectionOptions, EliminationTree, LuFactors,
};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// 3D grid with `dofs` unknowns per node and an unsymmetric, diagonally
/// weak coupling between neighbouring nodes.
fn grid_system(n: usize, dofs: usize, seed: u64) -> (CsrMatrix, Vec<[f64; 3]>, Vec<Vec<usize>>) {
    let mut rng = StdRng::seed_from_u64(seed);
    let id = |i: usize, j: usize, k: usize| (i * n + j) * n + k;
    let nb = n * n * n;
    let mut points = vec![[0.0; 3]; nb];
    let mut adj = vec![Vec::new(); nb];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let b = id(i, j, k);
                points[b] = [i as f64, j as f64, k as f64];
                for (di, dj, dk) in [(1, 0, 0), (0, 1, 0), (0, 0, 1)] {
                    let (a, c, d) = (i + di, j + dj, k + dk);
                    if a < n && c < n && d < n {
                        adj[b].push(id(a, c, d));
                        adj[id(a, c, d)].push(b);
                    }
                }
            }
        }
    }
    let mut t = Vec::new();
    for b in 0..nb {
        for p in 0..dofs {
            for q in 0..dofs {
                let v: f64 = rng.random_range(-1.0..1.0);
                t.push((b * dofs + p, b * dofs + q, if p == q { v + 0.5 } else { v }));
            }
            for &nbr in &adj[b] {
                for q in 0..dofs {
                    t.push((b * dofs + p, nbr * dofs + q, rng.random_range(-1.0..1.0)));
                }
            }
        }
    }
    (
        CsrMatrix::from_triplets(nb * dofs, nb * dofs, t).unwrap(),
        points,
        adj,
    )
}

fn var_tree(points: &[[f64; 3]], adj: &[Vec<usize>], dofs: usize) -> EliminationTree {
    let blocks = nested_dissection(points, adj, DissectionOptions::default()).unwrap();
    let vars: Vec<Vec<usize>> = (0..points.len())
        .map(|b| (b * dofs..(b + 1) * dofs).collect())
        .collect();
    EliminationTree::from_blocks(&blocks, &vars).unwrap()
}

#[test]
fn grid_solve_matches_manufactured_vector() {
    // large enough that the root front spans several panels
    let (m, points, adj) = grid_system(9, 5, 7);
    let tree = var_tree(&points, &adj, 5);
    let lu = LuFactors::factor(&m, &tree).unwrap();
    assert!(lu.stats().max_front > 96);
    let exact: Vec<f64> = (0..m.nrows())
        .map(|i| ((i * 37) % 11) as f64 - 5.0)
        .collect();
    let b = m.mul_vec(&exact);
    let (x, rel) = solve_refined(&m, &lu, &b, 2).unwrap();
    assert!(rel < 1e-12, "relative residual {rel}");
    let err = x
        .iter()
        .zip(&exact)
        .map(|(a, e)| (a - e).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-8, "max error {err}");
}

/// Dense Gaussian elimination with partial pivoting, used as an oracle.
fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
            .unwrap();
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    x
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn agrees_with_dense_elimination(n in 2usize..5, dofs in 1usize..4, seed in 0u64..1000) {
        let (m, points, adj) = grid_system(n, dofs, seed);
        let tree = var_tree(&points, &adj, dofs);
        let b: Vec<f64> = (0..m.nrows()).map(|i| (i as f64).sin()).collect();
        let lu = LuFactors::factor(&m, &tree).unwrap();
        let x = lu.solve(&b).unwrap();
        let oracle = dense_solve(m.to_dense(), b.clone());
        let scale = oracle.iter().fold(1.0f64, |s, v| s.max(v.abs()));
        for (xi, oi) in x.iter().zip(&oracle) {
            prop_assert!((xi - oi).abs() <= 1e-8 * scale);
        }
    }
}
