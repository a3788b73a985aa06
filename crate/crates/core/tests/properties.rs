use nalgebra::DMatrix;
use nlcs_core::instances::*;
use nlcs_core::metrics::*;
use nlcs_core::numkit::*;
use nlcs_core::oracle::*;
use nlcs_core::oudiag::*;
use proptest::prelude::*;

fn gauss1(mean: f64, var: f64) -> GaussianPotential {
    make_gaussian(vec![mean], DMatrix::from_element(1, 1, var)).unwrap()
}

fn mixture_2d() -> impl Strategy<Value = MixtureSpec> {
    (1usize..4)
        .prop_flat_map(|k| {
            (
                prop::collection::vec(0.1f64..1.0, k),
                prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 2), k),
                prop::collection::vec((0.3f64..2.0, 0.3f64..2.0, -0.5f64..0.5), k),
            )
        })
        .prop_map(|(w, means, covs)| {
            let s: f64 = w.iter().sum();
            let mut weights: Vec<f64> = w.iter().map(|v| v / s).collect();
            let rest: f64 = weights[1..].iter().sum();
            weights[0] = 1.0 - rest;
            let covs = covs
                .into_iter()
                .map(|(a, b, c)| {
                    let off = c * (a * b).sqrt();
                    DMatrix::from_row_slice(2, 2, &[a, off, off, b])
                })
                .collect();
            MixtureSpec { weights, means, covs }
        })
}

proptest! {
    #[test]
    fn mollifier_is_monotone_and_symmetric(a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(q_mol(lo) <= q_mol(hi));
        prop_assert!((0.0..=1.0).contains(&q_mol(a)));
        prop_assert!((q_mol(a) + q_mol(1.0 - a) - 1.0).abs() < 1e-14);
        prop_assert!(q_mol_d1(a) >= 0.0);
    }

    #[test]
    fn log_sum_exp_merge_matches_batch(v in prop::collection::vec(-700.0f64..700.0, 1..40), split in 0usize..40) {
        let split = split.min(v.len());
        let (mut a, mut b) = (LogSumExp::new(), LogSumExp::new());
        v[..split].iter().for_each(|x| a.push(*x));
        v[split..].iter().for_each(|x| b.push(*x));
        a.merge(&b);
        let batch = log_sum_exp(&v).unwrap();
        prop_assert!((a.value() - batch).abs() <= 1e-12 * batch.abs().max(1.0));
    }

    #[test]
    fn mixture_gradient_matches_finite_differences(spec in mixture_2d(), x in prop::collection::vec(-4.0f64..4.0, 2)) {
        let p = make_mixture(spec).unwrap();
        let g = p.grad(&x);
        let fd = fd_gradient(|y| p.value(y), &x, None).unwrap();
        for (a, b) in g.iter().zip(&fd) {
            prop_assert!((a - b).abs() <= 1e-6 * (1.0 + a.abs()), "{g:?} vs {fd:?}");
        }
    }

    #[test]
    fn closed_form_hessian_routes_agree(spec in mixture_2d(), x in prop::collection::vec(-4.0f64..4.0, 2)) {
        let a = mixture_log_hessian(&spec, &x).unwrap();
        let b = mixture_log_hessian_pairwise(&spec, &x).unwrap();
        prop_assert!((&a - &b).amax() <= 1e-9 * (1.0 + a.amax()));
    }

    #[test]
    fn ou_evolution_is_a_semigroup(spec in mixture_2d(), t1 in 0.0f64..2.0, t2 in 0.0f64..2.0) {
        let step = evolve_mixture(&evolve_mixture(&spec, OuTime::new(t1).unwrap()).unwrap(), OuTime::new(t2).unwrap()).unwrap();
        let once = evolve_mixture(&spec, OuTime::new(t1 + t2).unwrap()).unwrap();
        for (a, b) in step.means.iter().flatten().zip(once.means.iter().flatten()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in step.covs.iter().zip(&once.covs) {
            prop_assert!((a - b).amax() < 1e-12);
        }
    }

    #[test]
    fn base_instance_gradient_matches_finite_differences(rho in 0.1f64..40.0, angle in 0.0f64..std::f64::consts::TAU) {
        let base = build_base(LowerBoundParams::new(2, 8.0, 1.0, 0.004).unwrap()).unwrap();
        let x = [rho * angle.cos(), rho * angle.sin()];
        let g = base.grad(&x);
        let fd = fd_gradient(|y| base.value(y), &x, None).unwrap();
        for (a, b) in g.iter().zip(&fd) {
            prop_assert!((a - b).abs() <= 1e-5 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn opt_instance_is_l_smooth(x in prop::collection::vec(-6.0f64..6.0, 3), c in prop::collection::vec(-1.0f64..1.0, 3)) {
        let inst = build_opt_instance(c, 1.0, 0.5, 8.0, 0.01).unwrap();
        let h = inst.hessian(&x).unwrap();
        prop_assert!(opnorm_sym(&h, 1e-12).unwrap() <= 1.0 + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tv_is_a_metric(m in prop::collection::vec(-2.0f64..2.0, 3), v in prop::collection::vec(0.5f64..2.0, 3)) {
        let grid = QuadratureGrid::cube(1, 20.0, 4001).unwrap();
        let p: Vec<GaussianPotential> = (0..3).map(|i| gauss1(m[i], v[i])).collect();
        let tv = |a: usize, b: usize| tv_quadrature(&p[a], &p[b], &grid).unwrap().tv;
        prop_assert!((tv(0, 1) - tv(1, 0)).abs() < 1e-12);
        prop_assert!(tv(0, 0) < 1e-12);
        prop_assert!(tv(0, 2) <= tv(0, 1) + tv(1, 2) + 1e-12);
    }

    #[test]
    fn importance_moment_matches_quadrature(mean in -1.0f64..1.0, var in 0.5f64..2.0, seed in 0u64..1000) {
        let p = gauss1(mean, var);
        let quad = second_moment(&p, &MomentMethod::Quadrature(QuadratureGrid::cube(1, 30.0, 6001).unwrap())).unwrap();
        prop_assert!((quad.value - (mean * mean + var)).abs() < 1e-8);
        let is = second_moment(
            &p,
            &MomentMethod::Importance { proposal: Proposal::Gaussian { mean: vec![0.0], scale: 2.0 }, n: 20_000, seed },
        )
        .unwrap();
        prop_assert!((is.value - quad.value).abs() <= 5.0 * is.stderr, "{} vs {} (se {})", is.value, quad.value, is.stderr);
    }

    #[test]
    fn smoothness_probe_grows_with_extra_points(extra in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 2), 1..6), seed in 0u64..100) {
        let spec = MixtureSpec {
            weights: vec![0.5, 0.5],
            means: vec![vec![-2.0, 0.0], vec![2.0, 0.0]],
            covs: vec![DMatrix::identity(2, 2); 2],
        };
        let p = make_mixture(spec).unwrap();
        let region = ProbeRegion::Ball { center: vec![0.0, 0.0], radius: 1.0 };
        let base = smoothness_probe(&p, &region, 50, seed, &[]).unwrap();
        let more = smoothness_probe(&p, &region, 50, seed, &extra).unwrap();
        prop_assert!(more >= base);
    }
}
