use proptest::prelude::*;
use shrinkrel::cstar::select_analytic;
use shrinkrel::datagen::generate;
use shrinkrel::experiments::run_scenario;
use shrinkrel::risk::{
    cstar_closed_form, minimize_scalar, AnalyticRiskModel, ClosedForm, StepReference,
};
use shrinkrel::streams::{stream, Purpose};
use shrinkrel::structure::Node;
use shrinkrel::{
    cstar_analytic, cstar_bootstrap, km_fit, plugin_curve, system_ple, AnalyticOptions,
    AutopsyDataset, BootstrapOptions, CensoredSample, CensoringSpec, Kind, LossConfig, Method,
    Observation, QuadCoefficients, ReliabilityVector, ScenarioConfig, StructureTree, SurvivalCurve,
    WeibullSpec,
};

#[derive(Debug, Clone)]
enum Shape {
    Leaf,
    Node(Kind, Vec<Shape>),
}

fn leaves(s: &Shape) -> usize {
    match s {
        Shape::Leaf => 1,
        Shape::Node(_, c) => c.iter().map(leaves).sum(),
    }
}

fn build(s: &Shape, labels: &[usize], next: &mut usize) -> Node {
    match s {
        Shape::Leaf => {
            *next += 1;
            Node::Leaf(labels[*next - 1])
        }
        Shape::Node(kind, c) => {
            Node::Composite(*kind, c.iter().map(|x| build(x, labels, next)).collect())
        }
    }
}

fn kind() -> impl Strategy<Value = Kind> {
    prop_oneof![Just(Kind::Series), Just(Kind::Parallel)]
}

fn tree_with(max_k: usize) -> impl Strategy<Value = StructureTree> {
    Just(Shape::Leaf)
        .prop_recursive(4, 12, 4, |inner| {
            (kind(), prop::collection::vec(inner, 2..=4)).prop_map(|(k, c)| Shape::Node(k, c))
        })
        .prop_filter("at most max_k leaves", move |s| leaves(s) <= max_k)
        .prop_flat_map(|s| {
            let k = leaves(&s);
            (Just(s), Just((0..k).collect::<Vec<_>>()).prop_shuffle())
        })
        .prop_map(|(s, labels)| StructureTree::from_root(build(&s, &labels, &mut 0)).unwrap())
}

fn tree_and_p(lo: f64, hi: f64) -> impl Strategy<Value = (StructureTree, Vec<f64>)> {
    tree_with(10).prop_flat_map(move |t| {
        let k = t.k();
        (Just(t), prop::collection::vec(lo..=hi, k))
    })
}

fn brute_h(tree: &StructureTree, p: &[f64]) -> f64 {
    let k = p.len();
    (0u32..1 << k)
        .map(|mask| {
            let x: Vec<bool> = (0..k).map(|j| mask >> j & 1 == 1).collect();
            if !tree.phi(&x).unwrap() {
                return 0.0;
            }
            x.iter()
                .zip(p)
                .map(|(&on, &pj)| if on { pj } else { 1.0 - pj })
                .product()
        })
        .sum()
}

fn h(tree: &StructureTree, p: &[f64]) -> f64 {
    tree.h(&ReliabilityVector::new(p.to_vec()).unwrap())
        .unwrap()
}

proptest! {
    #[test]
    fn h_matches_state_enumeration((tree, p) in tree_and_p(0.0, 1.0)) {
        prop_assert!((h(&tree, &p) - brute_h(&tree, &p)).abs() <= 1e-12);
    }

    #[test]
    fn phi_is_coherent(tree in tree_with(10), seed in any::<u64>()) {
        let k = tree.k();
        prop_assert!(!tree.phi(&vec![false; k]).unwrap());
        prop_assert!(tree.phi(&vec![true; k]).unwrap());
        let x: Vec<bool> = (0..k).map(|j| seed >> j & 1 == 1).collect();
        let y: Vec<bool> = (0..k).map(|j| x[j] || seed >> (j + 20) & 1 == 1).collect();
        prop_assert!(tree.phi(&x).unwrap() <= tree.phi(&y).unwrap());
    }

    #[test]
    fn importance_is_positive_and_pivotal((tree, p) in tree_and_p(0.01, 0.99)) {
        let rv = ReliabilityVector::new(p.clone()).unwrap();
        for j in 0..tree.k() {
            let imp = tree.importance(&rv, j).unwrap();
            prop_assert!(imp > 0.0);
            let (mut up, mut down) = (p.clone(), p.clone());
            up[j] = 1.0;
            down[j] = 0.0;
            prop_assert!((imp - (brute_h(&tree, &up) - brute_h(&tree, &down))).abs() <= 1e-12);
        }
    }

    #[test]
    fn lifetime_agrees_with_states(
        (tree, t) in tree_with(10).prop_flat_map(|t| { let k = t.k(); (Just(t), prop::collection::vec(0.0..10.0, k)) }),
        probes in prop::collection::vec(0.0..11.0f64, 100),
    ) {
        let s = tree.system_lifetime(&t).unwrap();
        prop_assert!(t.contains(&s));
        for probe in probes.iter().copied().chain(t.iter().copied()) {
            let x: Vec<bool> = t.iter().map(|&tj| tj > probe).collect();
            prop_assert_eq!(s > probe, tree.phi(&x).unwrap());
        }
    }

    #[test]
    fn homogeneous_trees_have_closed_forms(p in prop::collection::vec(0.0..=1.0f64, 1..12)) {
        let k = p.len();
        let series: f64 = p.iter().product();
        let parallel = 1.0 - p.iter().map(|v| 1.0 - v).product::<f64>();
        prop_assert!((h(&StructureTree::series(k).unwrap(), &p) - series).abs() <= 1e-15);
        prop_assert!((h(&StructureTree::parallel(k).unwrap(), &p) - parallel).abs() <= 1e-15);
    }
}

fn sample_strategy() -> impl Strategy<Value = Vec<Observation>> {
    prop::collection::vec((0u32..20, any::<bool>()), 1..40).prop_map(|v| {
        v.into_iter()
            .map(|(t, e)| Observation::new(f64::from(t) * 0.5, e))
            .collect()
    })
}

fn km(recs: &[Observation]) -> SurvivalCurve {
    km_fit(&CensoredSample::new(recs.to_vec()).unwrap())
}

proptest! {
    #[test]
    fn hazard_power_identity(recs in sample_strategy(), c in 0.05..5.0f64, probes in prop::collection::vec(0.0..11.0f64, 20)) {
        let curve = km(&recs);
        for t in probes {
            let r = curve.eval(t).unwrap();
            if r > 0.0 {
                let lam = curve.cumulative_hazard(t).unwrap();
                prop_assert!(((-c * lam).exp() - r.powf(c)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn uncensored_km_is_one_minus_ecdf(times in prop::collection::vec(0u32..20, 1..40), probes in prop::collection::vec(0.0..11.0f64, 20)) {
        let recs: Vec<_> = times.iter().map(|&t| Observation::new(f64::from(t) * 0.5, true)).collect();
        let curve = km(&recs);
        let n = recs.len() as f64;
        for probe in probes.into_iter().chain(recs.iter().map(|r| r.time)) {
            let ecdf = recs.iter().filter(|r| r.time <= probe).count() as f64 / n;
            prop_assert!((curve.eval(probe).unwrap() - (1.0 - ecdf)).abs() <= 1e-12);
        }
    }

    #[test]
    fn km_ignores_record_order(recs in sample_strategy().prop_flat_map(|v| (Just(v.clone()), Just(v).prop_shuffle()))) {
        let (a, b) = recs;
        let (ca, cb) = (km(&a), km(&b));
        prop_assert_eq!(ca.jump_times(), cb.jump_times());
        prop_assert_eq!(ca.jump_values(), cb.jump_values());
        prop_assert_eq!(ca.jump_variances(), cb.jump_variances());
    }

    /// A censored record past every other one keeps the jump times and
    /// enlarges each risk set by one.
    #[test]
    fn late_censored_record_enlarges_risk_sets(recs in sample_strategy()) {
        let before = km(&recs);
        let mut more = recs.clone();
        more.push(Observation::new(100.0, false));
        let after = km(&more);
        prop_assert_eq!(before.jump_times(), after.jump_times());
        let mut r = 1.0;
        for (i, &t) in after.jump_times().iter().enumerate() {
            let at_risk = more.iter().filter(|o| o.time >= t).count();
            let deaths = more.iter().filter(|o| o.time == t && o.event).count();
            prop_assert_eq!(after.at_risk()[i], before.at_risk()[i] + 1);
            r *= 1.0 - deaths as f64 / at_risk as f64;
            prop_assert!((after.jump_values()[i] - r).abs() <= 1e-14);
        }
    }
}

fn specs_strategy(k: usize) -> impl Strategy<Value = Vec<WeibullSpec>> {
    prop::collection::vec((0.5..4.0f64, 0.5..3.0f64), k).prop_map(|v| {
        v.into_iter()
            .map(|(s, l)| WeibullSpec::new(s, l).unwrap())
            .collect()
    })
}

fn scenario() -> impl Strategy<Value = (StructureTree, AutopsyDataset, shrinkrel::SystemDataset)> {
    (tree_with(6), 0.0..0.6f64, 3usize..30, any::<u64>()).prop_flat_map(|(tree, eta, n, seed)| {
        let k = tree.k();
        (
            Just(tree),
            specs_strategy(k),
            Just(eta),
            Just(n),
            Just(seed),
        )
            .prop_map(|(tree, specs, eta, n, seed)| {
                let mut rng = stream(seed, 0, Purpose::Data);
                let g = generate(
                    &tree,
                    &specs,
                    &CensoringSpec::new(eta).unwrap(),
                    n,
                    &mut rng,
                )
                .unwrap();
                (tree, g.autopsy, g.system)
            })
    })
}

fn curves_of(data: &AutopsyDataset) -> Vec<SurvivalCurve> {
    (0..data.k()).map(|j| km_fit(&data.component(j))).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn plugin_is_monotone_in_c((tree, data, _) in scenario(), c1 in 0.2..5.0f64, c2 in 0.2..5.0f64) {
        let curves = curves_of(&data);
        let (lo, hi) = if c1 <= c2 { (c1, c2) } else { (c2, c1) };
        let a = plugin_curve(&tree, &curves, lo).unwrap();
        let b = plugin_curve(&tree, &curves, hi).unwrap();
        prop_assert_eq!(a.times(), b.times());
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!(x >= y);
        }
    }

    #[test]
    fn plugin_composes_component_curves((tree, data, _) in scenario(), c in 0.2..5.0f64, probes in prop::collection::vec(0.0..8.0f64, 30)) {
        let curves = curves_of(&data);
        let one = plugin_curve(&tree, &curves, 1.0).unwrap();
        let shrunk = plugin_curve(&tree, &curves, c).unwrap();
        for t in probes.into_iter().chain(one.times().iter().copied()) {
            let r: Vec<f64> = curves.iter().map(|cv| cv.eval(t).unwrap()).collect();
            prop_assert!((one.value_at(t) - h(&tree, &r)).abs() <= 1e-15);
            if r.iter().all(|&v| v > 0.0) {
                let via_hazard: Vec<f64> =
                    curves.iter().map(|cv| (-c * cv.cumulative_hazard(t).unwrap()).exp()).collect();
                prop_assert!((shrunk.value_at(t) - h(&tree, &via_hazard)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn generated_records_are_consistent(tree in tree_with(6), eta in 0.0..1.0f64, n in 1usize..40, seed in any::<u64>()) {
        let specs = vec![WeibullSpec::new(2.0, 1.0).unwrap(); tree.k()];
        let cens = CensoringSpec::new(eta).unwrap();
        let g = generate(&tree, &specs, &cens, n, &mut stream(seed, 0, Purpose::Data)).unwrap();
        let again = generate(&tree, &specs, &cens, n, &mut stream(seed, 0, Purpose::Data)).unwrap();
        prop_assert_eq!(&g, &again);
        let k = tree.k();
        for i in 0..n {
            let (c, s) = (g.monitoring[i], g.system_lifetimes[i]);
            let cut = c.min(s);
            let sys = g.system.records()[i];
            prop_assert_eq!(sys.time, s.min(c));
            prop_assert_eq!(sys.event, s <= c);
            for j in 0..k {
                let (z, t) = (g.autopsy.system(i)[j], g.lifetimes[i * k + j]);
                prop_assert!(z.time <= cut);
                if z.event {
                    prop_assert_eq!(z.time, t);
                } else {
                    prop_assert!(z.time == cut && cut < t);
                }
            }
        }
    }

    #[test]
    fn series_systems_have_one_failed_component(k in 1usize..8, eta in 0.0..1.0f64, seed in any::<u64>()) {
        let tree = StructureTree::series(k).unwrap();
        let specs = vec![WeibullSpec::new(1.5, 1.0).unwrap(); k];
        let g = generate(&tree, &specs, &CensoringSpec::new(eta).unwrap(), 20, &mut stream(seed, 0, Purpose::Data)).unwrap();
        for i in 0..20 {
            let failed = g.autopsy.system(i).iter().filter(|o| o.event).count();
            prop_assert_eq!(failed, usize::from(g.system.records()[i].event));
        }
    }

    #[test]
    fn step_loss_is_nonnegative((tree, data, _) in scenario(), c in 0.2..5.0f64) {
        let curves = curves_of(&data);
        let reference = plugin_curve(&tree, &curves, 1.0).unwrap();
        let step = StepReference::new(&reference, &LossConfig::default()).unwrap();
        prop_assert_eq!(step.loss(&reference), 0.0);
        prop_assert!(step.loss(&plugin_curve(&tree, &curves, c).unwrap()) >= 0.0);
    }

    #[test]
    fn selectors_stay_in_bounds((tree, data, _) in scenario(), seed in any::<u64>()) {
        let cfg = LossConfig::default();
        let opts = AnalyticOptions::default();
        if let Ok(r) = cstar_analytic(&data, &tree, &cfg, &opts) {
            prop_assert!(r.c_star >= opts.bounds.0 && r.c_star <= opts.bounds.1);
        }
        let boot = BootstrapOptions { resamples: 20, ..Default::default() };
        if let Ok(r) = cstar_bootstrap(&data, &tree, &cfg, &boot, &mut stream(seed, 0, Purpose::Bootstrap)) {
            prop_assert!((0.5..=2.0).contains(&r.c_star));
        }
    }

    #[test]
    fn zero_variance_selects_one((tree, data, _) in scenario()) {
        let curves: Vec<_> = curves_of(&data).iter().map(SurvivalCurve::without_variance).collect();
        if let Ok(r) = select_analytic(&tree, &curves, &LossConfig::default(), &AnalyticOptions::default()) {
            prop_assert!((r.c_star - 1.0).abs() <= 1e-5, "{}", r.c_star);
        }
    }

    #[test]
    fn cubic_tracks_full_risk_near_one((tree, data, _) in scenario()) {
        let curves = curves_of(&data);
        let weight = plugin_curve(&tree, &curves, 1.0).unwrap();
        let model = AnalyticRiskModel::new(&tree, &curves, &weight, &LossConfig::default()).unwrap();
        let q = model.quad_coefficients();
        let full = model.risk(1.0).unwrap();
        prop_assert!((full - q.risk(1.0)).abs() <= 1e-12 * (1.0 + full));
        for c in [0.97, 0.99, 1.01, 1.03] {
            let full = model.risk(c).unwrap();
            prop_assert!((full - q.risk(c)).abs() <= 0.25 * full + 1e-12, "c={c}: {full} vs {}", q.risk(c));
        }
    }

    #[test]
    fn minimizer_matches_dense_grid((tree, data, _) in scenario()) {
        let curves = curves_of(&data);
        prop_assume!(!curves.iter().all(SurvivalCurve::is_flat));
        let weight = plugin_curve(&tree, &curves, 1.0).unwrap();
        let model = AnalyticRiskModel::new(&tree, &curves, &weight, &LossConfig::default()).unwrap();
        let risk = |c: f64| model.risk(c).unwrap();
        let m = minimize_scalar(risk, 0.2, 5.0, 1e-7).unwrap();
        let grid_min = (0..10_000).map(|i| risk(0.2 + 4.8 * i as f64 / 9_999.0)).fold(f64::INFINITY, f64::min);
        prop_assert!(m.fx <= grid_min * (1.0 + 1e-9) + 1e-15, "{} vs {grid_min}", m.fx);
    }
}

#[test]
fn series_plugin_equals_system_ple_on_500_datasets() {
    for seed in 0..500u64 {
        let k = 2 + (seed % 5) as usize;
        let tree = StructureTree::series(k).unwrap();
        let specs: Vec<_> = (0..k)
            .map(|j| WeibullSpec::new(1.0 + 0.3 * j as f64, 1.0 + 0.1 * j as f64).unwrap())
            .collect();
        let eta = [0.0, 0.05, 0.3, 1.0][(seed % 4) as usize];
        let n = 5 + (seed % 37) as usize;
        let g = generate(
            &tree,
            &specs,
            &CensoringSpec::new(eta).unwrap(),
            n,
            &mut stream(seed, 0, Purpose::Data),
        )
        .unwrap();
        let plug = plugin_curve(&tree, &curves_of(&g.autopsy), 1.0).unwrap();
        let ple = system_ple(&g.system);
        for &t in plug.times().iter().chain(ple.times()) {
            assert!(
                (plug.value_at(t) - ple.value_at(t)).abs() <= 1e-12,
                "seed {seed}, t {t}"
            );
        }
    }
}

#[test]
fn quad_coefficient_signs_on_1000_datasets() {
    let tree = StructureTree::parse("series(c1,parallel(c2,c3))").unwrap();
    let specs = [(2.0, 2.5), (2.0, 1.0), (2.0, 1.0)].map(|(s, l)| WeibullSpec::new(s, l).unwrap());
    for seed in 0..1000u64 {
        let n = 5 + (seed % 50) as usize;
        let eta = (seed % 7) as f64 * 0.1;
        let g = generate(
            &tree,
            &specs,
            &CensoringSpec::new(eta).unwrap(),
            n,
            &mut stream(seed, 0, Purpose::Data),
        )
        .unwrap();
        let curves = curves_of(&g.autopsy);
        let weight = plugin_curve(&tree, &curves, 1.0).unwrap();
        let q = AnalyticRiskModel::new(&tree, &curves, &weight, &LossConfig::default())
            .unwrap()
            .quad_coefficients();
        assert!(q.a >= 0.0 && q.b <= 0.0 && q.d >= 0.0, "seed {seed}: {q:?}");
    }
}

/// Lowest interior local minimum of the cubic on a dense grid over `[lo, hi]`.
fn grid_local_min(q: &QuadCoefficients, lo: f64, hi: f64, points: usize) -> Option<f64> {
    let xs: Vec<f64> = (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect();
    let fs: Vec<f64> = xs.iter().map(|&c| q.risk(c)).collect();
    (1..points - 1)
        .filter(|&i| fs[i] <= fs[i - 1] && fs[i] <= fs[i + 1])
        .min_by(|&i, &j| fs[i].total_cmp(&fs[j]))
        .map(|i| xs[i])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn closed_form_matches_grid(a in 0.0..2.0f64, b in -0.5..0.0f64, d in 0.0..2.0f64) {
        let q = QuadCoefficients::new(a, b, d).unwrap();
        if let ClosedForm::Interior(c) = cstar_closed_form(&q, (0.2, 5.0)).unwrap() {
            let g = grid_local_min(&q, 0.2, 5.0, 100_000);
            prop_assert!(g.is_some_and(|g| (g - c).abs() <= 1e-3), "closed {c}, grid {g:?}");
        }
    }

    #[test]
    fn slope_at_one_has_sign_of_a_plus_b(a in 0.0..2.0f64, b in -2.0..0.0f64, d in 0.0..2.0f64) {
        prop_assume!((a + b).abs() > 1e-6);
        let q = QuadCoefficients::new(a, b, d).unwrap();
        let h = 1e-7;
        let slope = (q.risk(1.0 + h) - q.risk(1.0 - h)) / (2.0 * h);
        prop_assert_eq!(slope > 0.0, a + b > 0.0);
        prop_assert!((slope - 2.0 * (a + b)).abs() <= 1e-5 * (1.0 + a.abs() + b.abs()));
    }
}

fn small_scenario(structure: &str, k: usize, reps: usize) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::new(
        StructureTree::parse(structure).unwrap(),
        vec![WeibullSpec::new(2.0, 1.0).unwrap(); k],
        0.05,
        15,
    )
    .unwrap();
    cfg.reps = reps;
    cfg.bootstrap.resamples = 20;
    cfg
}

#[test]
fn scenario_results_ignore_thread_count() {
    let cfg = small_scenario("series(c1,parallel(c2,c3))", 3, 24);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_scenario(&cfg).unwrap())
    };
    let (a, b) = (run(1), run(4));
    assert_eq!(a.summaries, b.summaries);
    assert_eq!(a.replications, b.replications);
    assert_eq!(a.pct_complete_components, b.pct_complete_components);
    assert_eq!(a.included + a.excluded, cfg.reps);
}

#[test]
fn series_ple_and_plugin_risks_agree_per_replication() {
    let mut cfg = small_scenario("series(c1,c2,c3,c4,c5)", 5, 100);
    cfg.methods = vec![Method::SystemPle, Method::Plugin];
    let res = run_scenario(&cfg).unwrap();
    let (ple, plug) = (res.risks(Method::SystemPle), res.risks(Method::Plugin));
    assert_eq!(ple.len(), plug.len());
    for (x, y) in ple.iter().zip(&plug) {
        assert!((x - y).abs() <= 1e-10 * x.max(1e-12), "{x} vs {y}");
    }
}
