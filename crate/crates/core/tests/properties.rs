use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ricci_jet::cli::corpus::{multi_indices, richardson, Poly, Tree};
use ricci_jet::cli::{run, setup_from_text, Overrides};
use ricci_jet::constructions::{
    sss_formula_check, walker_build, walker_curvature_check, warped_ricci_check, SssSpec, WalkerLayout, WalkerSpec, WarpedSpec,
};
use ricci_jet::duality::{hodge_star, null_from_orthonormal, orthonormal_frame, selfdual_check, weyl_split};
use ricci_jet::expr::parse;
use ricci_jet::geometry::{
    contracted_bianchi, cotton_traces, divergence_identities, first_bianchi, metric_at, pair_symmetries, weyl_conformal_invariance,
    weyl_traces, Chart, LocalGeometry, MetricField, ScalarField,
};
use ricci_jet::jet::Jet;
use ricci_jet::soliton::{lemma2_check, soliton_residual, solve_lambda, Coupling, SolitonInstance};

const NAMES: [&str; 4] = ["a", "b", "c", "d"];

fn names() -> Vec<String> {
    NAMES.iter().map(|s| s.to_string()).collect()
}

fn chart4() -> Chart {
    Chart::new(NAMES).unwrap()
}

fn coef() -> impl Strategy<Value = f64> {
    (-3i32..=3).prop_map(|k| k as f64 / 10.0)
}

/// Analytic metrics that stay non-degenerate on `[-1, 1]⁴`; `neutral`
/// flips the first two diagonal signs.
fn metric4(neutral: bool) -> impl Strategy<Value = MetricField> {
    prop::collection::vec(coef(), 14).prop_map(move |c| {
        let eps = if neutral { [-1.0, -1.0, 1.0, 1.0] } else { [1.0; 4] };
        let mut rows = vec![vec![String::from("0"); 4]; 4];
        let mut k = 0;
        for i in 0..4 {
            rows[i][i] = format!(
                "({}) * (2 + {}*sin({}) + {}*{}*{})",
                eps[i],
                c[k],
                NAMES[(i + 1) % 4],
                c[k + 1],
                NAMES[(i + 2) % 4],
                NAMES[(i + 3) % 4]
            );
            k += 2;
        }
        for i in 0..4 {
            for j in i + 1..4 {
                let e = format!("{}*cos({} + {})", c[k % 14], NAMES[i], NAMES[j]);
                rows[i][j] = e.clone();
                rows[j][i] = e;
                k += 1;
            }
        }
        MetricField::parse(chart4(), &rows).unwrap()
    })
}

fn point4() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.9f64..0.9, 4)
}

fn walker_b() -> impl Strategy<Value = String> {
    let monomials = ["y^2", "x*y", "x^2", "x*y^2*z", "t*y^2", "z^2*y^2", "sin(z)*y^2", "y^3*x", "t*z", "x*z", "sin(t)"];
    prop::collection::vec((1i32..=4, 0usize..monomials.len()), 1..=3).prop_map(move |terms| {
        terms
            .iter()
            .map(|(c, m)| format!("{}*{}", *c as f64 / 2.0, monomials[*m]))
            .collect::<Vec<_>>()
            .join(" + ")
    })
}

fn walker(b: &str, layout: WalkerLayout) -> MetricField {
    walker_build(&WalkerSpec::b_only(b).unwrap(), layout).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn polynomial_partials_are_exact(seed in any::<u64>(), x in prop::collection::vec(-1.5f64..1.5, 4)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = Poly::random(&mut rng, 4, 4, 6);
        let jet = parse(&p.render(&NAMES), &names()).unwrap().evaluate(&x, 3).unwrap();
        for a in multi_indices(4, 3) {
            let exact = p.partial(&a).eval(&x);
            let got = jet.partial(&a).unwrap();
            prop_assert!((got - exact).abs() <= 1e-13 * exact.abs().max(1.0), "{a:?}: {got} vs {exact}");
        }
    }

    #[test]
    fn product_rule(ca in prop::collection::vec(-2.0f64..2.0, 35), cb in prop::collection::vec(-2.0f64..2.0, 35)) {
        // three variables, order 3: 20 coefficients
        let a = Jet::from_coeffs(3, 3, ca[..20].to_vec()).unwrap();
        let b = Jet::from_coeffs(3, 3, cb[..20].to_vec()).unwrap();
        let ab = &a * &b;
        let binom = |n: u8, k: u8| -> f64 { (1..=k).map(|i| (n - k + i) as f64 / i as f64).product() };
        for alpha in multi_indices(3, 3) {
            let mut leibniz = 0.0;
            for b0 in 0..=alpha[0] {
                for b1 in 0..=alpha[1] {
                    for b2 in 0..=alpha[2] {
                        let beta = [b0, b1, b2];
                        let rest = [alpha[0] - b0, alpha[1] - b1, alpha[2] - b2];
                        let w = binom(alpha[0], b0) * binom(alpha[1], b1) * binom(alpha[2], b2);
                        leibniz += w * a.partial(&beta).unwrap() * b.partial(&rest).unwrap();
                    }
                }
            }
            let got = ab.partial(&alpha).unwrap();
            prop_assert!((got - leibniz).abs() <= 1e-12 * leibniz.abs().max(1.0));
        }
    }

    #[test]
    fn chain_rule_matches_finite_differences(seed in any::<u64>(), x in prop::collection::vec(-0.8f64..0.8, 3)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree = Tree::random(&mut rng, 3, 3);
        let text = tree.render(&["x", "y", "z"]);
        let e = parse(&text, &["x".to_string(), "y".into(), "z".into()]).unwrap();
        let jet = e.evaluate(&x, 3).unwrap();
        let f = |p: &[f64]| tree.eval(p);
        for a in multi_indices(3, 3) {
            let fd = richardson(&f, &x, &a, 0.02);
            let got = jet.partial(&a).unwrap();
            prop_assert!((got - fd).abs() <= 1e-6 * fd.abs().max(1.0), "{text} {a:?}: {got} vs {fd}");
        }
    }

    #[test]
    fn print_parse_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let text = Tree::random(&mut rng, 3, 4).render(&["x", "y", "z"]);
        let n = ["x".to_string(), "y".into(), "z".into()];
        let once = parse(&text, &n).unwrap();
        let twice = parse(&once.to_string(), &n).unwrap();
        prop_assert_eq!(&once, &twice);
        prop_assert_eq!(parse(&twice.to_string(), &n).unwrap(), twice);
    }

    #[test]
    fn order_zero_matches_direct_evaluation(seed in any::<u64>(), x in prop::collection::vec(-1.0f64..1.0, 4)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = Poly::random(&mut rng, 4, 4, 8);
        let v = parse(&p.render(&NAMES), &names()).unwrap().evaluate(&x, 0).unwrap().value();
        let direct = p.eval(&x);
        prop_assert!((v - direct).abs() <= 1e-13 * direct.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn curvature_identities(m in prop_oneof![metric4(false), metric4(true)], p in point4()) {
        let geo = LocalGeometry::new(&m, &p).unwrap();
        prop_assert!(first_bianchi(&geo).relative() <= 1e-10);
        prop_assert!(pair_symmetries(&geo).relative() <= 1e-12);
        prop_assert!(contracted_bianchi(&geo).relative() <= 1e-9);
        prop_assert!(weyl_traces(&geo).unwrap().relative() <= 1e-10);
        prop_assert!(cotton_traces(&geo).relative() <= 1e-10);
    }

    #[test]
    fn weyl_is_conformally_invariant(m in metric4(false), s in prop::collection::vec(coef(), 2), p in point4()) {
        let sigma = chart4().parse(&format!("{}*a*b + {}*sin(c + d)", s[0], s[1])).unwrap();
        prop_assert!(weyl_conformal_invariance(&m, &sigma, &p).unwrap().relative() <= 1e-8);
    }

    #[test]
    fn divergence_identities_hold(m in metric4(true), s in prop::collection::vec(coef(), 3), p in point4()) {
        let phi = chart4().parse(&format!("{}*a*b^2 + {}*exp(c) + {}*cos(d)", s[0], s[1], s[2])).unwrap();
        let geo = LocalGeometry::new(&m, &p).unwrap();
        prop_assert!(divergence_identities(&geo, &phi).unwrap().relative() <= 1e-8);
    }

    #[test]
    fn field_calculus_contractions(m in metric4(true), p in point4()) {
        let geo = LocalGeometry::new(&m, &p).unwrap();
        let c = geo.field_of(&chart4().parse("a*b + sin(c)*d^2").unwrap()).unwrap();
        let mv = geo.metric_value();
        let mut lap = 0.0;
        let mut norm = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                lap += mv.g_inv[[i, j]] * c.hess[[i, j]];
                norm += mv.g[[i, j]] * c.grad[[i]] * c.grad[[j]];
            }
        }
        prop_assert!((lap - c.lap).abs() <= 1e-12 * (1.0 + lap.abs()));
        prop_assert!((norm - c.gradnorm2).abs() <= 1e-12 * (1.0 + norm.abs()));
    }

    #[test]
    fn star_is_self_adjoint_with_split_eigenspaces(m in metric4(true), p in point4()) {
        let mv = metric_at(&m, &p).unwrap();
        let h = hodge_star(&mv, 1.0).unwrap();
        prop_assert!((h.star.transpose() * h.basis.inner - h.basis.inner * h.star).abs().max() <= 1e-10);
        // ★² = Id with zero trace: the ±1 eigenspaces are both three-dimensional
        prop_assert!((h.star * h.star - nalgebra::Matrix6::identity()).abs().max() <= 1e-10);
        prop_assert!(h.star.trace().abs() <= 1e-9, "trace {}", h.star.trace());
    }

    #[test]
    fn frame_criteria_agree(b in walker_b(), literal in any::<bool>(), o in prop_oneof![Just(1.0), Just(-1.0)], p in point4()) {
        let layout = if literal { WalkerLayout::Literal } else { WalkerLayout::Canonical };
        let geo = LocalGeometry::new(&walker(&b, layout), &p).unwrap();
        let mv = geo.metric_value();
        let cb = geo.conformal().unwrap();
        let on = orthonormal_frame(mv).unwrap().oriented(o);
        let null = null_from_orthonormal(&on).unwrap();
        let a = selfdual_check(&cb, mv, &on).unwrap();
        let n = selfdual_check(&cb, mv, &null).unwrap();
        prop_assert_eq!(a.self_dual, n.self_dual);
        prop_assert_eq!(a.defect <= a.tolerance, a.w_minus_norm <= a.tolerance);
    }

    #[test]
    fn orientation_reversal_swaps_halves(m in metric4(true), p in point4()) {
        let geo = LocalGeometry::new(&m, &p).unwrap();
        let cb = geo.conformal().unwrap();
        let mv = geo.metric_value();
        let plus = weyl_split(&cb, mv, &hodge_star(mv, 1.0).unwrap()).unwrap();
        let minus = weyl_split(&cb, mv, &hodge_star(mv, -1.0).unwrap()).unwrap();
        prop_assert_eq!(plus.plus, minus.minus);
        prop_assert_eq!(plus.minus, minus.plus);
    }

    #[test]
    fn soliton_residual_trace_and_symmetry(m in metric4(true), p in point4()) {
        let s = SolitonInstance {
            metric: m.clone(),
            f: ScalarField::parse(m.chart(), "1.5 + a*b + sin(c)").unwrap(),
            h: Coupling::EqualToF,
            lambda: ScalarField::parse(m.chart(), "a - d").unwrap(),
        };
        let r = soliton_residual(&s, &p).unwrap();
        let geo = LocalGeometry::new(&m, &p).unwrap();
        let c = geo.field(&s.f).unwrap();
        let lam = s.lambda.value_at(&p).unwrap();
        let mv = geo.metric_value();
        let mut tr = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                tr += mv.g_inv[[i, j]] * r.components[[i, j]];
                prop_assert!((r.components[[i, j]] - r.components[[j, i]]).abs() <= 1e-12 * r.scale);
            }
        }
        let expected = geo.scalar() + c.value * c.lap - 4.0 * lam;
        prop_assert!((tr - expected).abs() <= 1e-12 * r.scale * 16.0);
    }

    #[test]
    fn solve_lambda_recovers_exact_solitons(signs in prop::collection::vec(prop_oneof![Just(1.0), Just(-1.0)], 4), p in prop::collection::vec(0.3f64..1.2, 4)) {
        let diag: Vec<String> = signs.iter().map(|s| format!("{s}")).collect();
        let m = MetricField::diagonal(chart4(), &diag).unwrap();
        let q = (0..4).map(|i| format!("({})*{}^2", signs[i], NAMES[i])).collect::<Vec<_>>().join(" + ");
        let f = ScalarField::parse(m.chart(), &q).unwrap();
        let fv = f.value_at(&p).unwrap();
        prop_assume!(fv.abs() > 1e-3);
        let fit = solve_lambda(&m, &f, &Coupling::EqualToF, &p).unwrap();
        prop_assert!(fit.residual.max_abs <= 1e-10);
        prop_assert!((fit.lambda_fit - 2.0 * fv).abs() <= 1e-9);
    }

    #[test]
    fn lemma2_defect_is_linear_in_the_perturbation(delta in 1e-5f64..1e-3, p in prop::collection::vec(0.3f64..1.2, 4)) {
        let m = MetricField::diagonal(chart4(), &["1", "1", "1", "1"]).unwrap();
        let q = "a^2 + b^2 + c^2 + d^2";
        let inst = |d: f64| SolitonInstance {
            metric: m.clone(),
            f: ScalarField::parse(m.chart(), &format!("{q} + {d:e}*a^3*c")).unwrap(),
            h: Coupling::EqualToF,
            lambda: ScalarField::parse(m.chart(), &format!("2*({q})")).unwrap(),
        };
        let d1 = lemma2_check(&inst(delta), &p).unwrap().defect;
        let d2 = lemma2_check(&inst(2.0 * delta), &p).unwrap().defect;
        prop_assert!(d1 > 0.0);
        let ratio = d2 / d1;
        prop_assert!((ratio - 2.0).abs() <= 0.05, "ratio {ratio}");
    }

    #[test]
    fn walker_determinant_is_one(a in walker_b(), b in walker_b(), c in walker_b(), p in point4()) {
        let ch = WalkerSpec::chart();
        let ws = WalkerSpec { a: ch.parse(&a).unwrap(), b: ch.parse(&b).unwrap(), c: ch.parse(&c).unwrap() };
        let mv = metric_at(&walker_build(&ws, WalkerLayout::Canonical).unwrap(), &p).unwrap();
        prop_assert!((mv.det - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn walker_unlisted_ricci_vanishes(b in walker_b(), p in point4()) {
        let e = WalkerSpec::chart().parse(&b).unwrap();
        let r = walker_curvature_check(&e, WalkerLayout::Canonical, &p).unwrap();
        prop_assert!(r.unlisted_ricci.0 <= 1e-10 * r.scale);
        prop_assert!(r.ricci_defect() <= 1e-10 * r.scale);
    }

    #[test]
    fn linear_potential_is_null_on_the_literal_layout(b in walker_b(), alpha in -2.0f64..2.0, beta in -2.0f64..2.0, p in point4()) {
        let m = walker(&b, WalkerLayout::Literal);
        let geo = LocalGeometry::new(&m, &p).unwrap();
        let f = m.chart().parse(&format!("{alpha:e}*y + {beta:e}")).unwrap();
        prop_assert!(geo.field_of(&f).unwrap().gradnorm2.abs() <= 1e-12);
    }

    #[test]
    fn block_formulas(c in prop::collection::vec(coef(), 3), p in prop::collection::vec(0.3f64..1.2, 4)) {
        let bc = Chart::new(["r", "s"]).unwrap();
        let fc = Chart::new(["u", "v"]).unwrap();
        let ws = WarpedSpec {
            base: MetricField::diagonal(bc.clone(), &[format!("1 + {}*s^2", c[0]), "1".into()]).unwrap(),
            fiber: MetricField::diagonal(fc.clone(), &["1".to_string(), format!("exp({}*u)", c[1])]).unwrap(),
            phi: ScalarField::parse(&bc, &format!("2 + {}*sin(r*s)", c[2])).unwrap(),
            mu: None,
        };
        let d = warped_ricci_check(&ws, &p).unwrap();
        prop_assert!(d.max_relative() <= 1e-9);

        let sc = Chart::new(["x", "y", "z"]).unwrap();
        let fiber = MetricField::diagonal(sc.clone(), &[format!("1 + {}*y^2", c[0]), "1".into(), "1 + x^2".into()]).unwrap();
        let ss = SssSpec::new(fiber, ScalarField::parse(&sc, &format!("2 + {}*x*z + {}*y", c[1], c[2])).unwrap());
        let d = sss_formula_check(&ss, &p).unwrap();
        prop_assert!(d.max_relative() <= 1e-9);
    }

    #[test]
    fn runs_are_deterministic_and_consistent(seed in any::<u64>()) {
        let text = r#"
format_version = 1
f = "x*z"
h = "f"
lambda = "x*z"
samples = 12
checks = ["soliton_residual", "walker_ricci", "isotropy"]
[construction]
kind = "walker"
b = "x*y^2*z + 1"
"#;
        let o = Overrides { seed: Some(seed), ..Overrides::default() };
        let a = run(&setup_from_text(text, &o).unwrap());
        let b = run(&setup_from_text(text, &o).unwrap());
        prop_assert_eq!(a.to_machine(), b.to_machine());
        for c in &a.checks {
            prop_assert_eq!(c.points_evaluated + c.points_skipped, 12);
            if c.pass == Some(true) {
                prop_assert!(c.max_defect.unwrap() <= c.tolerance.unwrap());
            }
        }
    }
}
