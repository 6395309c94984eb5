//! Sparse and iterative paths checked against dense nalgebra computations.

use amg_upscale::aggregation::{greedy_aggregate, AggregateMap};
use amg_upscale::analysis::{measure_cosine, measure_eta_w, DEFAULT_SEED};
use amg_upscale::coarse::{build_coarse_space, CoarseOptions, CoarseSpace, Selection};
use amg_upscale::ingestion::{assemble_fem, build_d, DMode, MeshSpec, ProblemPair};
use amg_upscale::modification::{
    apply_pi_f_exact, build_af, build_modified_p, cg_apply, chebyshev_apply, extreme_eigenvalues, upscaled_solve,
    Method, PolynomialSpec,
};
use amg_upscale::solvers::{gs_sweep, pcg, two_grid_cycle, Direction, IdentityPreconditioner, TwoGrid};
use amg_upscale::sparse::vector::{energy_norm, random_vector, sub, weighted_norm};
use amg_upscale::sparse::{dense_cholesky_solve, galerkin, jacobi_eigensolve, triple_product, CsrMatrix, DenseMatrix};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn to_na(m: &CsrMatrix) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        let (c, v) = m.row(i);
        for (&j, &x) in c.iter().zip(v) {
            d[(i, j)] = x;
        }
    }
    d
}

fn from_na(m: &DMatrix<f64>) -> CsrMatrix {
    let mut t = Vec::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if m[(i, j)] != 0.0 {
                t.push((i, j, m[(i, j)]));
            }
        }
    }
    CsrMatrix::from_triplets(m.nrows(), m.ncols(), &t).unwrap()
}

fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    &b * b.transpose() + DMatrix::identity(n, n) * n as f64 * 0.1
}

fn max_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

struct Setup {
    pair: ProblemPair,
    map: AggregateMap,
    cs: CoarseSpace,
    af: CsrMatrix,
}

fn fem_setup(m: usize, eps: f64, target: usize, theta: f64) -> Setup {
    let fem = assemble_fem(&MeshSpec::new(m, eps), DMode::ScaledDiagonal).unwrap();
    let map = greedy_aggregate(&fem.pair.a, target, 1).unwrap();
    let opts = CoarseOptions {
        selection: Selection::Threshold(theta),
        ..Default::default()
    };
    let cs = build_coarse_space(&fem.pair.a, &fem.pair.d, &map, &opts).unwrap();
    let af = build_af(&fem.pair.a, &cs.p_perp).unwrap();
    Setup { pair: fem.pair, map, cs, af }
}

#[test]
fn spmv_hand_example() {
    let a = CsrMatrix::from_dense(&DenseMatrix::from_rows(&[&[2.0, -1.0, 0.0], &[-1.0, 2.0, -1.0], &[0.0, -1.0, 2.0]]).unwrap());
    assert_eq!(a.spmv(&[1.0, 1.0, 1.0]).unwrap(), vec![1.0, 0.0, 1.0]);
}

#[test]
fn galerkin_examples() {
    let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 2.0)]).unwrap();
    let p = CsrMatrix::from_triplets(2, 1, &[(0, 0, 1.0), (1, 0, 1.0)]).unwrap();
    assert_eq!(galerkin(&a, &p).unwrap().to_dense().values(), &[2.0]);

    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let a = random_spd(6, &mut rng);
    let p = DMatrix::from_fn(6, 2, |_, _| rng.gen_range(-1.0..1.0));
    let want = p.transpose() * &a * &p;
    let got = to_na(&triple_product(&from_na(&p.transpose()), &from_na(&a), &from_na(&p)).unwrap());
    assert!(max_diff(&got, &want) <= 1e-12 * want.amax());
}

#[test]
fn weighted_norm_hand_example() {
    let w = CsrMatrix::from_diagonal(&[4.0, 9.0]);
    assert!((weighted_norm(&[1.0, 1.0], Some(&w)).unwrap() - 13f64.sqrt()).abs() < 1e-15);
}

#[test]
fn jacobi_examples() {
    let e = jacobi_eigensolve(&DenseMatrix::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap()).unwrap();
    assert!((e.values[0] - 1.0).abs() < 1e-14 && (e.values[1] - 3.0).abs() < 1e-14);
    let s = 0.5f64.sqrt();
    assert!((e.vectors.get(0, 0).abs() - s).abs() < 1e-14);
    assert!((e.vectors.get(0, 0) + e.vectors.get(1, 0)).abs() < 1e-14);

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let b = DMatrix::from_fn(8, 8, |_, _| rng.gen_range(-1.0..1.0));
    let sym = &b + b.transpose();
    let e = jacobi_eigensolve(&DenseMatrix::from_row_major(8, 8, sym.transpose().as_slice().to_vec()).unwrap()).unwrap();
    let v = DMatrix::from_fn(8, 8, |i, j| e.vectors.get(i, j));
    assert!(max_diff(&(v.transpose() * &v), &DMatrix::identity(8, 8)) < 1e-9);
    let t = v.transpose() * &sym * &v;
    let off = DMatrix::from_fn(8, 8, |i, j| if i == j { 0.0 } else { t[(i, j)] });
    assert!(off.amax() < 1e-9);
    let mut want: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    want.sort_by(f64::total_cmp);
    for (x, y) in e.values.iter().zip(&want) {
        assert!((x - y).abs() < 1e-10);
    }
}

#[test]
fn cholesky_residual() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let a = random_spd(10, &mut rng);
    let b: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let dense = DenseMatrix::from_row_major(10, 10, a.transpose().as_slice().to_vec()).unwrap();
    let x = dense_cholesky_solve(&dense, &b).unwrap();
    let r = &a * DVector::from_vec(x) - DVector::from_vec(b);
    assert!(r.norm() < 1e-12 * a.norm());
}

#[test]
fn single_interior_node_stiffness() {
    let fem = assemble_fem(&MeshSpec::new(2, 1.0), DMode::L1).unwrap();
    assert_eq!(fem.pair.a.nrows(), 1);
    assert!((fem.pair.a.get(0, 0) - 4.0).abs() < 1e-14);
}

#[test]
fn l1_diagonal_example_and_fem_scaling() {
    let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 2.0)]).unwrap();
    assert_eq!(build_d(&a, DMode::L1).unwrap().diagonal(), vec![3.0, 3.0]);

    let fem = assemble_fem(&MeshSpec::new(16, 1e-4), DMode::ScaledDiagonal).unwrap();
    let a = to_na(&fem.pair.a);
    let dm = fem.pair.d.diagonal();
    let scaled = DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] / (dm[i] * dm[j]).sqrt());
    let lmax = scaled.symmetric_eigenvalues().max();
    assert!(lmax <= 1.0 + 1e-10, "{lmax}");
}

#[test]
fn complement_basis_on_larger_aggregates() {
    let s = fem_setup(16, 1e-4, 8, 0.35);
    let d = to_na(&s.pair.d);
    let p = to_na(&s.cs.p);
    let pp = to_na(&s.cs.p_perp);
    assert!((p.transpose() * &d * &pp).amax() < 1e-10);
    assert!(max_diff(&(pp.transpose() * &d * &pp), &DMatrix::identity(pp.ncols(), pp.ncols())) < 1e-10);
}

#[test]
fn global_wap_for_a_single_aggregate() {
    let fem = assemble_fem(&MeshSpec::new(4, 1.0), DMode::ScaledDiagonal).unwrap();
    let n = fem.pair.n();
    let map = AggregateMap::from_assignment(vec![0; n]).unwrap();
    let opts = CoarseOptions {
        selection: Selection::FixedCount(n - 1),
        ..Default::default()
    };
    let cs = build_coarse_space(&fem.pair.a, &fem.pair.d, &map, &opts).unwrap();
    let eta = measure_eta_w(&fem.pair.a, &fem.pair.d, &cs, DEFAULT_SEED).unwrap();
    // generalized eigenproblem A x = lambda D x, dense
    let a = to_na(&fem.pair.a);
    let dm = fem.pair.d.diagonal();
    let scaled = DMatrix::from_fn(n, n, |i, j| a[(i, j)] / (dm[i] * dm[j]).sqrt());
    let lmax = scaled.symmetric_eigenvalues().max();
    assert!((eta.global.powi(2) - 1.0 / lmax).abs() < 1e-8, "{} vs {}", eta.global.powi(2), 1.0 / lmax);
    assert!((eta.local - eta.global).abs() < 1e-8);
}

#[test]
fn complement_operator_spectrum_and_pi_f() {
    let s = fem_setup(16, 1e-4, 6, 0.05);
    let (lo, _) = extreme_eigenvalues(&s.af).unwrap();
    assert!(lo >= 1.0 / s.cs.eta_w_local.powi(2) - 1e-8);

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = &s.pair.a;
    let y = random_vector(&mut rng, s.cs.n_complement());
    let x = s.cs.p_perp.spmv(&y).unwrap();
    let fx = apply_pi_f_exact(a, &s.cs.p_perp, &s.af, &x).unwrap();
    assert!(sub(&fx, &x).iter().all(|v| v.abs() < 1e-8));
    let r = random_vector(&mut rng, a.nrows());
    let once = apply_pi_f_exact(a, &s.cs.p_perp, &s.af, &r).unwrap();
    let twice = apply_pi_f_exact(a, &s.cs.p_perp, &s.af, &once).unwrap();
    assert!(sub(&once, &twice).iter().all(|v| v.abs() < 1e-8));
}

#[test]
fn chebyshev_error_polynomial_norm() {
    let s = fem_setup(8, 1e-2, 4, 0.1);
    let af = to_na(&s.af);
    let nf = af.nrows();
    let eta = measure_eta_w(&s.pair.a, &s.pair.d, &s.cs, DEFAULT_SEED).unwrap().global;
    let (alpha, beta) = (1.0 / (eta * eta), 1.0);
    let q = (eta - 1.0) / (eta + 1.0);
    for nu in 1..=6 {
        // p(A_f) = I - A_f q(A_f), assembled column by column
        let mut pm = DMatrix::zeros(nf, nf);
        for j in 0..nf {
            let mut e = vec![0.0; nf];
            e[j] = 1.0;
            let qe = chebyshev_apply(&s.af, nu, alpha, beta, &e).unwrap();
            let col = DVector::from_vec(e) - &af * DVector::from_vec(qe);
            pm.set_column(j, &col);
        }
        let norm = pm.symmetric_eigenvalues().amax();
        let bound = 2.0 * q.powi(nu as i32) / (1.0 + q.powi(2 * nu as i32));
        assert!(norm <= bound * (1.0 + 1e-10), "nu={nu}: {norm} > {bound}");
    }
}

#[test]
fn cg_termination_and_decay() {
    let s = fem_setup(8, 1e-2, 4, 0.1);
    let af = to_na(&s.af);
    let nf = af.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let r = random_vector(&mut rng, nf);
    let exact = af.clone().cholesky().unwrap().solve(&DVector::from_vec(r.clone()));
    let full = cg_apply(&s.af, nf, &r).unwrap();
    assert!((DVector::from_vec(full) - &exact).amax() < 1e-8);

    let eig = af.symmetric_eigenvalues();
    let kappa = eig.max() / eig.min();
    let q = (kappa.sqrt() - 1.0) / (kappa.sqrt() + 1.0);
    let energy = |v: &DVector<f64>| (v.transpose() * &af * v)[(0, 0)].sqrt();
    for nu in 1..=8 {
        let x = DVector::from_vec(cg_apply(&s.af, nu, &r).unwrap());
        assert!(energy(&(&x - &exact)) <= 2.0 * q.powi(nu as i32) * energy(&exact) * (1.0 + 1e-10));
    }
    assert!(cg_apply(&s.af, 3, &vec![0.0; nf]).unwrap().iter().all(|&v| v == 0.0));
}

#[test]
fn exact_modified_range_is_a_orthogonal_to_complement() {
    let s = fem_setup(8, 1e-2, 4, 0.1);
    let mcs = build_modified_p(&s.pair.a, &s.cs, &s.af, &PolynomialSpec::exact()).unwrap();
    let cross = to_na(&s.cs.p_perp).transpose() * to_na(&s.pair.a) * to_na(&mcs.p_tilde);
    assert!(cross.amax() <= 1e-8);
    let unmodified = build_modified_p(&s.pair.a, &s.cs, &s.af, &PolynomialSpec::new(Method::Sa, 0)).unwrap();
    assert!(unmodified.p_tilde.same_entries(&s.cs.p));
}

#[test]
fn upscaled_solution_is_galerkin_optimal() {
    let s = fem_setup(16, 1e-4, 6, 0.05);
    let a = &s.pair.a;
    let mcs = build_modified_p(a, &s.cs, &s.af, &PolynomialSpec::new(Method::Cg, 2)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(20);

    let vc = random_vector(&mut rng, mcs.p_tilde.ncols());
    let u = mcs.p_tilde.spmv(&vc).unwrap();
    let (_, uu) = upscaled_solve(&mcs, &a.spmv(&u).unwrap()).unwrap();
    assert!(energy_norm(a, &sub(&u, &uu)) <= 1e-8 * energy_norm(a, &u));

    let f = random_vector(&mut rng, a.nrows());
    let u = to_na(a).cholesky().unwrap().solve(&DVector::from_vec(f.clone()));
    let u: Vec<f64> = u.iter().copied().collect();
    let (_, up) = upscaled_solve(&mcs, &f).unwrap();
    let best = energy_norm(a, &sub(&u, &up));
    for _ in 0..20 {
        let vc = random_vector(&mut rng, mcs.p_tilde.ncols());
        let other = mcs.p_tilde.spmv(&vc).unwrap();
        assert!(best <= energy_norm(a, &sub(&u, &other)) * (1.0 + 1e-12));
    }
    let (uc0, _) = upscaled_solve(&mcs, &vec![0.0; a.nrows()]).unwrap();
    assert!(uc0.iter().all(|&v| v == 0.0));
}

#[test]
fn gauss_seidel_hand_sweep() {
    let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 2.0)]).unwrap();
    let mut u = vec![0.0; 2];
    gs_sweep(&a, &[1.0, 1.0], &mut u, Direction::Forward).unwrap();
    assert_eq!(u, vec![0.5, 0.75]);
}

#[test]
fn two_grid_error_operator_matches_dense() {
    let s = fem_setup(8, 1e-2, 4, 0.1);
    let a = to_na(&s.pair.a);
    let n = a.nrows();
    let p = to_na(&s.cs.p);
    let id = DMatrix::<f64>::identity(n, n);
    let ac = p.transpose() * &a * &p;
    let coarse = &id - &p * ac.try_inverse().unwrap() * p.transpose() * &a;
    let pre = &id - a.lower_triangle().try_inverse().unwrap() * &a;
    let post = &id - a.upper_triangle().try_inverse().unwrap() * &a;
    let e_tg = post * coarse * pre;

    let tg = TwoGrid::new(&s.pair.a, &s.cs.p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(28);
    for _ in 0..20 {
        let e = random_vector(&mut rng, n);
        let mut u = e.clone();
        two_grid_cycle(&tg, &vec![0.0; n], &mut u).unwrap();
        let want = &e_tg * DVector::from_vec(e);
        assert!((DVector::from_vec(u) - want).amax() < 1e-10);
    }
}

#[test]
fn cg_iteration_count_on_complement_operator() {
    let s = fem_setup(16, 1e-4, 6, 0.05);
    let eig = to_na(&s.af).symmetric_eigenvalues();
    let kappa = eig.max() / eig.min();
    let rtol: f64 = 1e-8;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let f = random_vector(&mut rng, s.af.nrows());
    let out = pcg(&s.af, &f, &IdentityPreconditioner, rtol, 1000).unwrap();
    let bound = (0.5 * kappa.sqrt() * (2.0 / rtol).ln()).ceil() as usize + 2;
    assert!(out.iters <= bound, "{} > {bound}", out.iters);
}

#[test]
fn sa_modification_is_almost_orthogonal() {
    let s = fem_setup(16, 1e-4, 6, 0.05);
    let eta = measure_eta_w(&s.pair.a, &s.pair.d, &s.cs, DEFAULT_SEED).unwrap().global;
    for nu in 1..=4 {
        let mcs = build_modified_p(&s.pair.a, &s.cs, &s.af, &PolynomialSpec::new(Method::Sa, nu)).unwrap();
        let cos = measure_cosine(&s.pair.a, &s.cs, &s.af, &mcs, DEFAULT_SEED).unwrap();
        assert!(cos <= eta * eta / (2 * nu + 1) as f64 + 1e-8, "nu={nu}: {cos}");
    }
    assert_eq!(s.map.n(), s.pair.n());
}
