use lowrank_envelope::certificates::{in_subdiff_g, MembershipMode, SubgradientQuery};
use lowrank_envelope::envelopes::{self, ProxParams, Regularizer};
use lowrank_envelope::experiments::{self, RunRecord};
use lowrank_envelope::problem::{self, NoiseSpec};
use lowrank_envelope::solvers::{self, SolveConfig};
use lowrank_envelope::{io, spectral, Matrix, RngSeed};
use proptest::prelude::*;

fn vector(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, 1..=max_len)
}

fn rho() -> impl Strategy<Value = f64> {
    2.05f64..10.0
}

fn matrix() -> impl Strategy<Value = Matrix> {
    (1usize..=5, 1usize..=5).prop_flat_map(|(r, c)| {
        prop::collection::vec(-3.0f64..3.0, r * c).prop_map(move |v| Matrix::from_vec(r, c, v))
    })
}

fn orthogonal(n: usize, seed: u64) -> Matrix {
    use rand::Rng;
    let mut rng = RngSeed::new(seed, 0).rng();
    Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0)).qr().q()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

proptest! {
    #[test]
    fn mucard_prox_shrinks_toward_zero(y in vector(8), mu in 0.01f64..4.0, rho in rho()) {
        let x = envelopes::prox_q2_mucard(&y, mu, ProxParams::new(rho).unwrap());
        for (xi, yi) in x.iter().zip(&y) {
            prop_assert!(xi.abs() <= yi.abs() + 1e-12);
            prop_assert!(xi * yi >= 0.0);
        }
    }

    #[test]
    fn mucard_prox_is_lipschitz(a in -5.0f64..5.0, b in -5.0f64..5.0, mu in 0.01f64..4.0, rho in rho()) {
        let p = ProxParams::new(rho).unwrap();
        let xa = envelopes::prox_q2_mucard(&[a], mu, p)[0];
        let xb = envelopes::prox_q2_mucard(&[b], mu, p)[0];
        prop_assert!((xa - xb).abs() <= rho / (rho - 2.0) * (a - b).abs() + 1e-12);
        prop_assert!((xa - xb) * (a - b) >= 0.0);
    }

    #[test]
    fn prox_beats_perturbations(
        y in vector(5),
        mu in 0.05f64..3.0,
        rho in rho(),
        dirs in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 5), 8),
        kfrac in 0.0f64..1.0,
    ) {
        let p = ProxParams::new(rho).unwrap();
        let k = 1 + ((y.len() - 1) as f64 * kfrac) as usize;
        for reg in [Regularizer::MuRank { mu }, Regularizer::FixedRank { k }] {
            let f = |x: &[f64]| envelopes::reg_value_vec(x, &reg) + 0.5 * rho * sq_dist(x, &y);
            let x = envelopes::reg_prox_vec(&y, &reg, p);
            let fx = f(&x);
            for d in &dirs {
                for scale in [1e-3, 1e-1, 1.0] {
                    let z: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + scale * b).collect();
                    prop_assert!(fx <= f(&z) + 1e-10, "{reg}: f(prox) {fx} > f(z) {}", f(&z));
                }
            }
        }
    }

    #[test]
    fn envelopes_lie_below_the_penalties(x in vector(8), mu in 0.01f64..4.0, kfrac in 0.0f64..1.0) {
        let card = x.iter().filter(|v| **v != 0.0).count();
        let q = envelopes::q2_mucard_value(&x, mu);
        prop_assert!(q >= -1e-12 && q <= mu * card as f64 + 1e-12);
        let k = 1 + ((x.len() - 1) as f64 * kfrac) as usize;
        let v = envelopes::q2_iotak_value(&x, k);
        prop_assert!(v >= -1e-12);
        if card <= k {
            prop_assert!(v.abs() <= 1e-12);
        }
    }

    #[test]
    fn matrix_penalties_are_unitarily_invariant(x in matrix(), seed in any::<u64>(), mu in 0.1f64..3.0) {
        let (r, c) = x.shape();
        let y = orthogonal(r, seed) * &x * orthogonal(c, seed ^ 1);
        for reg in [Regularizer::MuRank { mu }, Regularizer::FixedRank { k: 1 }, Regularizer::Nuclear { lambda: mu }] {
            let a = envelopes::reg_value_matrix(&x, &reg).unwrap();
            let b = envelopes::reg_value_matrix(&y, &reg).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "{reg}: {a} vs {b}");
        }
    }

    #[test]
    fn svd_reconstructs(x in matrix()) {
        let s = spectral::svd(&x).unwrap();
        prop_assert!((s.reconstruct() - &x).norm() <= 1e-12 * x.norm().max(1.0));
        prop_assert!(s.sigma.as_slice().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn rank_deficient_svd_reconstructs(n in 2usize..8, k in 1usize..3, seed in any::<u64>()) {
        let k = k.min(n);
        let x = problem::gen_low_rank(n, n, k, 1.0, RngSeed::new(seed, 0)).unwrap();
        let s = spectral::svd(&x).unwrap();
        prop_assert!((s.reconstruct() - &x).norm() <= 1e-12 * x.norm().max(1.0));
        prop_assert_eq!(s.rank(), k);
    }

    #[test]
    fn subgradients_built_from_the_profile_are_members(
        n in 2usize..6,
        k in 1usize..3,
        seed in any::<u64>(),
        mu in 0.1f64..2.0,
        tail in 0.0f64..1.0,
    ) {
        let k = k.min(n - 1);
        let x = problem::gen_low_rank(n, n, k, 2.0, RngSeed::new(seed, 0)).unwrap();
        let s = spectral::svd(&x).unwrap();
        let t = mu.sqrt();
        let w: Vec<f64> = (0..n).map(|i| if i < k { s.sigma[i].max(t) } else { tail * t }).collect();
        let wm = s.u.clone() * Matrix::from_diagonal(&nalgebra_vec(&w)) * s.v.transpose();
        let q = SubgradientQuery { x: &x, w: &wm, reg: Regularizer::MuRank { mu } };
        prop_assert!(in_subdiff_g(q, MembershipMode::Aligned).unwrap().member);
        prop_assert!(in_subdiff_g(q, MembershipMode::ValuesOnly).unwrap().member);
    }

    #[test]
    fn matrix_files_round_trip(x in matrix()) {
        let back = io::parse_matrix(&io::matrix_to_string(&x)).unwrap();
        prop_assert_eq!(back, x);
    }

    #[test]
    fn result_csv_round_trips(
        rows in prop::collection::vec(
            (0usize..3, any::<f64>(), 0.0f64..10.0, any::<u64>(), 0usize..20, any::<bool>(), 0usize..3),
            0..6,
        )
    ) {
        let kinds = ["murank", "fixedrank", "nuclear"];
        let verdicts = ["refuted", "na", "bracket_failure"];
        let records: Vec<RunRecord> = rows
            .iter()
            .map(|&(kind, v, noise, seed, rank, conv, verdict)| RunRecord {
                reg_kind: kinds[kind].into(),
                reg_param: v,
                noise_norm: noise,
                seed,
                rank,
                data_fit: v * 0.5,
                gt_dist: f64::NAN,
                iters: rank * 7,
                converged: conv,
                verdict: verdicts[verdict].into(),
            })
            .collect();
        let mut buf = Vec::new();
        experiments::write_records(&records, &mut buf).unwrap();
        let back = experiments::parse_records(buf.as_slice()).unwrap();
        prop_assert_eq!(back.len(), records.len());
        for (a, b) in records.iter().zip(&back) {
            prop_assert_eq!(a.reg_param.to_bits(), b.reg_param.to_bits());
            prop_assert_eq!(a.data_fit.to_bits(), b.data_fit.to_bits());
            prop_assert!(b.gt_dist.is_nan());
            prop_assert_eq!((&a.reg_kind, a.seed, a.rank, a.iters, a.converged, &a.verdict),
                            (&b.reg_kind, b.seed, b.rank, b.iters, b.converged, &b.verdict));
        }
    }
}

fn nalgebra_vec(v: &[f64]) -> nalgebra::DVector<f64> {
    nalgebra::DVector::from_column_slice(v)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fbs_never_increases_the_objective(seed in any::<u64>(), mu in 0.05f64..2.0, k in 1usize..4, fixed in any::<bool>()) {
        let spec = experiments::InstanceSpec { m: 30, n1: 5, n2: 5, op_std: 1.0 / 30f64.sqrt(), k0: 2, x0_std: 1.0 };
        let op = spec.operator(seed).unwrap();
        let x0 = spec.ground_truth(seed).unwrap();
        let inst = problem::gen_instance(op, x0, NoiseSpec::Std(0.1), RngSeed::new(seed, 2)).unwrap();
        let reg = if fixed { Regularizer::FixedRank { k } } else { Regularizer::MuRank { mu } };
        let (inst, reg) = problem::normalize(&inst, &reg).unwrap();
        let r = solvers::solve_fbs(&inst, &reg, &SolveConfig { max_iter: 300, ..SolveConfig::default() }).unwrap();
        for w in r.objective_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-10 * w[0].abs().max(1.0), "{} -> {}", w[0], w[1]);
        }
    }
}
