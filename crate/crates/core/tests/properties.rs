use grunbaum_core::core1d::random::random_density;
use grunbaum_core::core1d::{
    cdf_profile, check_envelope, int_r_identity, s_mean, verify_grunbaum_1d, ConcavityClass, Density1D, GridSpec,
};
use grunbaum_core::nd::{cloud, tukey_depth, DepthConfig, Side};
use grunbaum_core::product::{busemann_mass, pushforward_busemann, FiberSpace, ProductDensity};
use grunbaum_core::stability::{stability_certificate, stability_rhs, Statistic};
use grunbaum_core::Exec;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn class() -> impl Strategy<Value = ConcavityClass> {
    prop_oneof![
        (1.2f64..6.0).prop_map(|n| ConcavityClass::PositiveN { n }),
        Just(ConcavityClass::LogConcave),
        (-6.0f64..-1.5).prop_map(|beta| ConcavityClass::NegativeN { beta }),
    ]
}

fn draw(cls: &ConcavityClass, seed: u64) -> Density1D {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_density(cls, &mut rng).expect("random density")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn s_mean_is_monotone_in_s(a in 0.01f64..10.0, b in 0.01f64..10.0, lam in 0.01f64..0.99,
                               s in -4.0f64..4.0, ds in 0.01f64..3.0) {
        let lo = s_mean(a, b, lam, s);
        let hi = s_mean(a, b, lam, s + ds);
        prop_assert!(lo <= hi * (1.0 + 1e-12));
        prop_assert!(a.min(b) * (1.0 - 1e-12) <= lo && hi <= a.max(b) * (1.0 + 1e-12));
    }

    #[test]
    fn s_mean_is_homogeneous(a in 0.01f64..10.0, b in 0.01f64..10.0, lam in 0.01f64..0.99,
                             s in -4.0f64..4.0, k in 0.1f64..10.0) {
        let m = s_mean(a, b, lam, s);
        let mk = s_mean(k * a, k * b, lam, s);
        prop_assert!((mk - k * m).abs() <= 1e-12 * mk.max(1.0));
    }

    #[test]
    fn cdf_profile_is_a_distribution_function(cls in class(), seed in any::<u64>()) {
        let d = draw(&cls, seed);
        let p = cdf_profile(&d, &GridSpec::default()).unwrap();
        prop_assert!(p.r.iter().all(|r| (-1e-12..=1.0 + 1e-12).contains(r)));
        prop_assert!(p.r.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        prop_assert!(p.grid.windows(2).all(|w| w[1] > w[0]));
        prop_assert!((p.cdf(0.0) - p.r0).abs() < 1e-9);
    }

    #[test]
    fn integral_of_r_equals_upper_end(cls in class(), seed in any::<u64>()) {
        let d = draw(&cls, seed);
        prop_assume!(d.support().is_bounded());
        let p = cdf_profile(&d, &GridSpec::default()).unwrap();
        let id = int_r_identity(&p, 1e-8).unwrap();
        prop_assert!(id.residual < 1e-8, "residual {}", id.residual);
    }

    #[test]
    fn envelope_dominates_cdf(cls in class(), seed in any::<u64>()) {
        let d = draw(&cls, seed);
        let p = cdf_profile(&d, &GridSpec::default()).unwrap();
        let env = check_envelope(&p, &cls, 1e-10).unwrap();
        prop_assert!(env.passed, "violation {}", env.max_violation);
    }

    #[test]
    fn reflection_swaps_and_dilation_keeps_sides(cls in class(), seed in any::<u64>(), t in 0.2f64..5.0) {
        let d = draw(&cls, seed);
        let base = verify_grunbaum_1d(&d, &cls, 1e-8).unwrap();
        let rev = verify_grunbaum_1d(&d.reflect(), &cls, 1e-8).unwrap();
        let dil = verify_grunbaum_1d(&d.dilate(t).unwrap().normalize().unwrap(), &cls, 1e-8).unwrap();
        prop_assert!(base.passed && rev.passed && dil.passed);
        prop_assert!((base.left_mass - rev.right_mass).abs() < 1e-10);
        prop_assert!((base.left_mass - dil.left_mass).abs() < 1e-10);
    }

    #[test]
    fn certificate_scales_with_dilation(cls in class(), seed in any::<u64>(), t in 0.25f64..4.0) {
        let d = draw(&cls, seed);
        let a = stability_certificate(&d, &cls, 1e-9).unwrap();
        let b = stability_certificate(&d.dilate(t).unwrap().normalize().unwrap(), &cls, 1e-9).unwrap();
        prop_assert!((a.epsilon - b.epsilon).abs() < 1e-9);
        prop_assert!((b.rhs - t * a.rhs).abs() <= 1e-8 * (1.0 + t * a.rhs));
        prop_assert!((b.lhs - t * a.lhs).abs() <= 1e-7 * (1.0 + t * a.lhs));
    }

    #[test]
    fn rhs_vanishes_at_zero_and_grows(cls in class(), stat in 0.1f64..5.0, e1 in 0.0f64..2.0, de in 1e-3f64..2.0) {
        let stat = match cls {
            ConcavityClass::NegativeN { .. } => Statistic::DensityAtZero(stat),
            _ => Statistic::SecondMoment(stat),
        };
        prop_assert_eq!(stability_rhs(&cls, 0.0, stat).unwrap(), 0.0);
        let lo = stability_rhs(&cls, e1, stat).unwrap();
        let hi = stability_rhs(&cls, e1 + de, stat).unwrap();
        prop_assert!(hi > lo);
    }

    #[test]
    fn negative_rhs_tends_to_log_concave_form(w0 in 0.1f64..5.0, eps in 1e-3f64..3.0) {
        let limit = stability_rhs(&ConcavityClass::LogConcave, eps, Statistic::DensityAtZero(w0)).unwrap();
        let far = stability_rhs(&ConcavityClass::NegativeN { beta: -1e7 }, eps, Statistic::DensityAtZero(w0)).unwrap();
        prop_assert!((far - limit).abs() <= 1e-5 * limit, "{far} vs {limit}");
    }
}

fn product(g: &[f64], shape: &[f64]) -> ProductDensity {
    let w = Density1D::tabulated(vec![-2.0, -0.5, 0.5, 1.5], shape.to_vec()).unwrap();
    ProductDensity::separable(&w, g, FiberSpace::uniform(g.len(), 1.0).unwrap(), ConcavityClass::PositiveN { n: 2.0 })
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn busemann_mass_matches_pushforward(g in prop::collection::vec(0.1f64..3.0, 1..12),
                                         shape in prop::collection::vec(0.1f64..2.0, 4),
                                         r in -2.5f64..2.0) {
        let rho = product(&g, &shape);
        let push = pushforward_busemann(&rho).unwrap();
        let s = push.support();
        let direct = busemann_mass(&rho, r, Side::Le);
        let fubini = push.integrate(s.lower, r) / push.mass();
        prop_assert!((direct - fubini).abs() < 1e-10, "{direct} vs {fubini}");
        prop_assert!((direct + busemann_mass(&rho, r, Side::Ge) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn busemann_mass_is_translation_covariant(g in prop::collection::vec(0.1f64..3.0, 1..12),
                                              shape in prop::collection::vec(0.1f64..2.0, 4),
                                              r in -2.5f64..2.0, tau in -5.0f64..5.0) {
        let rho = product(&g, &shape);
        let moved = rho.translate(tau);
        let a = busemann_mass(&rho, r, Side::Le);
        let b = busemann_mass(&moved, r + tau, Side::Le);
        prop_assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn depth_is_affine_equivariant(seed in any::<u64>(), a11 in 0.5f64..2.0, a12 in -0.5f64..0.5,
                                   a21 in -0.5f64..0.5, a22 in 0.5f64..2.0,
                                   b1 in -3.0f64..3.0, b2 in -3.0f64..3.0,
                                   x in 0.1f64..0.4, y in 0.1f64..0.4) {
        let c = cloud::uniform_simplex(2, 4000, seed, Exec::Sequential).unwrap();
        let a = vec![vec![a11, a12], vec![a21, a22]];
        let b = [b1, b2];
        let image = c.affine_image(&a, &b).unwrap();
        let p = [x, y];
        let q = [a11 * x + a12 * y + b1, a21 * x + a22 * y + b2];
        let cfg = DepthConfig { exec: Exec::Sequential, ..DepthConfig::default() };
        let d0 = tukey_depth(&c, &p, &cfg).unwrap().depth;
        let d1 = tukey_depth(&image, &q, &cfg).unwrap().depth;
        prop_assert!((d0 - d1).abs() <= 2e-3, "{d0} vs {d1}");

        // translation and positive scaling keep every halfspace mass exactly
        let k = a11;
        let scaled = c.affine_image(&[vec![k, 0.0], vec![0.0, k]], &b).unwrap();
        let d2 = tukey_depth(&scaled, &[k * x + b1, k * y + b2], &cfg).unwrap().depth;
        prop_assert!((d0 - d2).abs() <= 2.0 / 4000.0, "{d0} vs {d2}");
    }
}
