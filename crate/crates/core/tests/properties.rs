use amg_upscale::aggregation::{aggregates_connected, greedy_aggregate};
use amg_upscale::coarse::{apply_pi_d, build_coarse_space, CoarseOptions, Selection};
use amg_upscale::ingestion::{assemble_fem, load_graph_laplacian, max_rayleigh_quotient, DMode, Edge, MeshSpec};
use amg_upscale::modification::{apply_pi_f_approx, build_af, AfInverse, Method, PolynomialSpec};
use amg_upscale::solvers::{two_grid_cycle, TwoGrid};
use amg_upscale::sparse::vector::{add, energy_norm, norm2, sub};
use amg_upscale::sparse::{jacobi_eigensolve, triple_product, CsrMatrix, DenseMatrix};
use proptest::prelude::*;

fn sparse_matrix(n: usize, m: usize) -> impl Strategy<Value = CsrMatrix> {
    prop::collection::vec((0..n, 0..m, -5.0..5.0f64), 0..3 * n.max(m))
        .prop_map(move |t| CsrMatrix::from_triplets(n, m, &t).unwrap())
}

/// `B^T B + I` with a sparse random `B`.
fn spd_matrix(n: usize) -> impl Strategy<Value = CsrMatrix> {
    sparse_matrix(n, n).prop_map(move |b| {
        let btb = b.transpose().matmul(&b).unwrap();
        btb.add_scaled(1.0, &CsrMatrix::identity(n), 1.0).unwrap().symmetrize().unwrap()
    })
}

fn vector(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, n)
}

fn random_graph() -> impl Strategy<Value = Vec<Edge>> {
    (5u64..40).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n), n as usize..3 * n as usize).prop_map(move |extra| {
            let mut edges: Vec<Edge> = (0..n - 1).map(|i| Edge::unit(i, i + 1)).collect();
            edges.extend(extra.into_iter().map(|(u, v)| Edge::unit(u, v)));
            edges
        })
    })
}

fn rel_close(x: &[f64], y: &[f64], tol: f64) -> bool {
    norm2(&sub(x, y)) <= tol * norm2(x).max(norm2(y)).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn spmv_is_additive(a in sparse_matrix(12, 9), x in vector(9), y in vector(9)) {
        let lhs = a.spmv(&add(&x, &y)).unwrap();
        let rhs = add(&a.spmv(&x).unwrap(), &a.spmv(&y).unwrap());
        prop_assert!(rel_close(&lhs, &rhs, 1e-13) || norm2(&sub(&lhs, &rhs)) < 1e-12);
    }

    #[test]
    fn galerkin_product_of_symmetric_is_symmetric(a in spd_matrix(10), p in sparse_matrix(10, 4)) {
        let c = triple_product(&p.transpose(), &a, &p).unwrap();
        let dev = c.max_abs_diff(&c.transpose()).unwrap();
        prop_assert!(dev <= 1e-12 * c.max_abs().max(1e-300));
    }

    #[test]
    fn jacobi_eigenvalues_sum_to_trace(vals in prop::collection::vec(-3.0..3.0f64, 36)) {
        let mut s = DenseMatrix::zeros(6, 6);
        for i in 0..6 {
            for j in 0..6 {
                s.set(i, j, vals[6 * i + j] + vals[6 * j + i]);
            }
        }
        let e = jacobi_eigensolve(&s).unwrap();
        let sum: f64 = e.values.iter().sum();
        prop_assert!((sum - s.trace()).abs() <= 1e-10 * s.frobenius_norm().max(1.0));
    }

    #[test]
    fn aggregation_is_a_deterministic_partition(edges in random_graph(), target in 1usize..9, power in 1u8..=2) {
        let g = load_graph_laplacian(&edges, DMode::L1).unwrap();
        let a = &g.pair.a;
        let map = greedy_aggregate(a, target, power).unwrap();
        let mut seen = vec![0usize; a.nrows()];
        for i in 0..map.num_aggregates() {
            for &v in map.members(i) {
                seen[v] += 1;
                prop_assert_eq!(map.assignment()[v], i);
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
        prop_assert_eq!(&map, &greedy_aggregate(a, target, power).unwrap());
    }

    #[test]
    fn squared_pattern_aggregates_stay_local_on_a_path(n in 3usize..60, target in 2usize..8) {
        let edges: Vec<Edge> = (0..n as u64 - 1).map(|i| Edge::unit(i, i + 1)).collect();
        let pair = load_graph_laplacian(&edges, DMode::L1).unwrap().pair;
        let map = greedy_aggregate(&pair.a, target, 2).unwrap();
        prop_assert!(aggregates_connected(&pair.a, &map, 2).unwrap());
        for i in 0..map.num_aggregates() {
            let m = map.members(i);
            // rows keep path order apart from the grounded vertex, which can add one gap
            let diameter = m[m.len() - 1] - m[0];
            prop_assert!(diameter <= 2 * target + 1, "aggregate {:?}", m);
        }
    }

    #[test]
    fn d_dominates_a(edges in random_graph(), l1 in any::<bool>()) {
        let mode = if l1 { DMode::L1 } else { DMode::ScaledDiagonal };
        let pair = load_graph_laplacian(&edges, mode).unwrap().pair;
        prop_assert!(max_rayleigh_quotient(&pair.a, &pair.d).unwrap() <= 1.0 + 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn coarse_space_projections(m in 4usize..11, target in 2usize..9, theta in 0.05..1.0f64, seed in any::<u64>()) {
        let fem = assemble_fem(&MeshSpec::new(m, 0.01), DMode::ScaledDiagonal).unwrap();
        let (a, d) = (&fem.pair.a, &fem.pair.d);
        let map = greedy_aggregate(a, target, 1).unwrap();
        let opts = CoarseOptions { selection: Selection::Threshold(theta), ..Default::default() };
        let cs = build_coarse_space(a, d, &map, &opts).unwrap();
        let cross = cs.p.transpose().matmul(&d.matmul(&cs.p_perp).unwrap()).unwrap();
        prop_assert!(cross.max_abs() <= 1e-10);
        let gram = cs.p_perp.transpose().matmul(&d.matmul(&cs.p_perp).unwrap()).unwrap();
        let nf = cs.n_complement();
        prop_assert!(gram.max_abs_diff(&CsrMatrix::identity(nf)).unwrap() <= 1e-10);

        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let v = amg_upscale::sparse::vector::random_vector(&mut rng, a.nrows());
        let pv = apply_pi_d(&cs, d, &v).unwrap();
        prop_assert!(rel_close(&apply_pi_d(&cs, d, &pv).unwrap(), &pv, 1e-10));
        // (I - pi_D) v is D-orthogonal to Range(P)
        let rest = sub(&v, &pv);
        let ortho = cs.p.spmv_transpose(&d.spmv(&rest).unwrap()).unwrap();
        prop_assert!(norm2(&ortho) <= 1e-10 * norm2(&v));

        if nf > 0 {
            let af = build_af(a, &cs.p_perp).unwrap();
            for spec in [PolynomialSpec::new(Method::Sa, 2), PolynomialSpec::new(Method::Chebyshev, 3), PolynomialSpec::new(Method::Cg, 2)] {
                let inv = AfInverse::new(&af, &spec).unwrap();
                let fx = apply_pi_f_approx(a, &cs.p_perp, &inv, &v).unwrap();
                prop_assert!(norm2(&apply_pi_d(&cs, d, &fx).unwrap()) <= 1e-10 * norm2(&fx).max(1.0));
                if spec.method != Method::Cg {
                    // (I - pi_f~) pi_D is a projection
                    let once = sub(&pv, &apply_pi_f_approx(a, &cs.p_perp, &inv, &pv).unwrap());
                    let p2 = apply_pi_d(&cs, d, &once).unwrap();
                    let twice = sub(&p2, &apply_pi_f_approx(a, &cs.p_perp, &inv, &p2).unwrap());
                    prop_assert!(rel_close(&twice, &once, 1e-9));
                }
            }
        }
    }

    #[test]
    fn local_bound_shrinks_as_theta_grows(m in 5usize..10, target in 3usize..8, t1 in 0.05..0.9f64, dt in 0.0..0.5f64) {
        let fem = assemble_fem(&MeshSpec::new(m, 1.0), DMode::ScaledDiagonal).unwrap();
        let map = greedy_aggregate(&fem.pair.a, target, 1).unwrap();
        let eta = |theta: f64| {
            let opts = CoarseOptions { selection: Selection::Threshold(theta.min(1.0)), ..Default::default() };
            build_coarse_space(&fem.pair.a, &fem.pair.d, &map, &opts).unwrap().eta_w_local
        };
        prop_assert!(eta(t1 + dt) <= eta(t1) + 1e-12);
    }

    #[test]
    fn two_grid_cycle_reduces_energy(m in 4usize..10, target in 3usize..8, e in vector(81)) {
        let fem = assemble_fem(&MeshSpec::new(m, 1e-2), DMode::ScaledDiagonal).unwrap();
        let a = &fem.pair.a;
        let map = greedy_aggregate(a, target, 1).unwrap();
        let cs = build_coarse_space(a, &fem.pair.d, &map, &CoarseOptions::default()).unwrap();
        let tg = TwoGrid::new(a, &cs.p).unwrap();
        let n = a.nrows();
        let mut u = e[..n].to_vec();
        let before = energy_norm(a, &u);
        two_grid_cycle(&tg, &vec![0.0; n], &mut u).unwrap();
        prop_assert!(energy_norm(a, &u) <= before * (1.0 + 1e-12));
        // the exact solution is a fixed point
        let f = a.spmv(&e[..n]).unwrap();
        let mut exact = e[..n].to_vec();
        two_grid_cycle(&tg, &f, &mut exact).unwrap();
        prop_assert!(rel_close(&exact, &e[..n], 1e-12) || norm2(&sub(&exact, &e[..n])) < 1e-12);
    }

    #[test]
    fn fem_inclusion_entries_scale_with_contrast(m in 4usize..13, eps in 1e-4..1.0f64) {
        let a1 = assemble_fem(&MeshSpec::new(m, eps), DMode::L1).unwrap().pair.a;
        let a2 = assemble_fem(&MeshSpec::new(m, 2.0 * eps), DMode::L1).unwrap().pair.a;
        let a_out = assemble_fem(&MeshSpec::new(m, 1.0), DMode::L1).unwrap().pair.a;
        prop_assert_eq!(a1.row_offsets(), a2.row_offsets());
        prop_assert_eq!(a1.col_indices(), a2.col_indices());
        for i in 0..a1.nrows() {
            let (cols, v1) = a1.row(i);
            for (k, &j) in cols.iter().enumerate() {
                let (x1, x2, x_one) = (v1[k], a2.get(i, j), a_out.get(i, j));
                // each entry is c_in * eps + c_out with c_in, c_out fixed by geometry
                let c_in = (x2 - x1) / eps;
                let c_out = x1 - c_in * eps;
                prop_assert!((c_in + c_out - x_one).abs() <= 1e-9 * x_one.abs().max(1.0));
            }
        }
    }
}
