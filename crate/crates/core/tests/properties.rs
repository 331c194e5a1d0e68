use std::f64::consts::{PI, TAU};

use geoclique::cliques::{brute_force_maximal, count_maximal, moon_moser_ln};
use geoclique::generators::{build_graph_brute_force, generate};
use geoclique::geometry::{angular_difference, delta, euclid, hyperbolic, Polar, Segment};
use geoclique::lemmacheck::{sample_independent_pair, SampledPair};
use geoclique::octahedron::{
    brute_force_tau, cheap_tau_upper, exact_tau, greedy_tau_lower, verify_witness, ExactTau,
};
use geoclique::{Execution, Graph, PlaneModel, SampleSpec};
use proptest::prelude::*;

fn graph_strategy(max_n: usize) -> impl Strategy<Value = Graph> {
    (1..=max_n).prop_flat_map(|n| {
        let slots = n * (n - 1) / 2;
        prop::collection::vec(any::<bool>(), slots).prop_map(move |bits| {
            let mut pairs = Vec::new();
            let mut k = 0;
            for u in 0..n {
                for v in u + 1..n {
                    if bits[k] {
                        pairs.push((u, v));
                    }
                    k += 1;
                }
            }
            Graph::from_pairs(n, &pairs).unwrap()
        })
    })
}

fn polar(max_r: f64) -> impl Strategy<Value = Polar> {
    (0.0..max_r, 0.0..TAU).prop_map(|(r, phi)| Polar::new(r, phi))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn euclid_distance_is_a_metric(ax in 0.0..1.0f64, ay in 0.0..1.0f64, bx in 0.0..1.0f64, by in 0.0..1.0f64) {
        let (p, q) = (euclid::Vec2::new(ax, ay), euclid::Vec2::new(bx, by));
        prop_assert!((euclid::distance(p, q) - euclid::distance(q, p)).abs() <= 1e-12);
        prop_assert!(euclid::distance(p, p) <= 1e-12);
        prop_assert!(euclid::distance(p, q) >= 0.0);
    }

    #[test]
    fn hyperbolic_distance_is_a_metric(p in polar(20.0), q in polar(20.0), o in polar(20.0)) {
        let d = hyperbolic::distance(p, q);
        prop_assert!((d - hyperbolic::distance(q, p)).abs() <= 1e-9);
        prop_assert!(hyperbolic::distance(p, p) <= 1e-9);
        prop_assert!(d >= 0.0);
        prop_assert!(d <= hyperbolic::distance(p, o) + hyperbolic::distance(o, q) + 1e-9);
    }

    #[test]
    fn angular_difference_in_range(a in 0.0..TAU, b in 0.0..TAU) {
        let d = angular_difference(a, b);
        prop_assert!((0.0..=PI).contains(&d));
        prop_assert!((d - angular_difference(b, a)).abs() < 1e-15);
    }

    #[test]
    fn delta_positive_and_increasing(t1 in 1e-6..PI - 1e-6, t2 in 1e-6..PI - 1e-6, radius in 1.0..40.0f64) {
        let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
        prop_assert!(delta(lo, radius) > 0.0);
        prop_assert!(delta(lo, radius) <= delta(hi, radius));
    }

    #[test]
    fn graph_storage_invariants(g in graph_strategy(40)) {
        let mut degree_sum = 0;
        for u in 0..g.vertex_count() {
            let nb = g.neighbors(u);
            prop_assert!(nb.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(!nb.contains(&(u as u32)));
            prop_assert!(nb.iter().all(|&v| g.has_edge(v as usize, u)));
            degree_sum += nb.len();
        }
        prop_assert_eq!(degree_sum, 2 * g.edge_count());

        let mut text = Vec::new();
        g.write_edge_list(&mut text).unwrap();
        let pairs = geoclique::graph::parse_edge_list(&text[..]).unwrap();
        let (h, ids) = Graph::from_edge_list(&pairs);
        // Isolated vertices do not appear in an edge list.
        let kept: Vec<usize> = ids.iter().map(|&i| i as usize).collect();
        prop_assert_eq!(h, g.induced(&kept));
    }

    #[test]
    fn common_neighbors_match_set_intersection(g in graph_strategy(30), a in any::<prop::sample::Index>(), b in any::<prop::sample::Index>()) {
        let n = g.vertex_count();
        prop_assume!(n >= 2);
        let (u, v) = (a.index(n), b.index(n));
        prop_assume!(u != v);
        let expected = (0..n).filter(|&w| g.has_edge(u, w) && g.has_edge(v, w)).count();
        prop_assert_eq!(g.common_neighbors(u, v).unwrap(), expected);
    }

    #[test]
    fn clique_count_matches_oracle_and_bounds(g in graph_strategy(13)) {
        let seq = count_maximal(&g, Execution::Sequential).unwrap();
        let par = count_maximal(&g, Execution::Parallel).unwrap();
        let oracle = brute_force_maximal(&g).unwrap();
        prop_assert_eq!(seq.count, oracle.count);
        prop_assert_eq!(&seq.histogram, &oracle.histogram);
        prop_assert_eq!(par.count, seq.count);
        prop_assert_eq!(seq.histogram.iter().sum::<u128>(), seq.count);
        prop_assert!(seq.count >= 1);
        prop_assert!(seq.ln_count() <= moon_moser_ln(g.vertex_count()) + 1e-9);
    }

    #[test]
    fn tau_sandwich(g in graph_strategy(10), seed in any::<u64>()) {
        let greedy = greedy_tau_lower(&g, 4, seed, Execution::Parallel);
        prop_assert!(verify_witness(&g, &greedy));
        let upper = cheap_tau_upper(&g, Execution::Parallel);
        let (exact, witness) = exact_tau(&g, u64::MAX);
        let ExactTau::Known { tau, .. } = exact else { panic!("unbounded search must finish") };
        prop_assert!(verify_witness(&g, &witness));
        prop_assert!(greedy.t() <= tau && tau <= upper);
        prop_assert_eq!(Some(tau), brute_force_tau(&g).map(|b| b.0));
        // Every induced O_t carries 2^t maximal cliques of the whole graph.
        let m = count_maximal(&g, Execution::Sequential).unwrap().count;
        prop_assert!(1u128 << tau <= m);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn generated_graphs_follow_the_edge_rule(seed in any::<u64>(), hyperbolic in any::<bool>(), poissonized in any::<bool>()) {
        let model = if hyperbolic {
            PlaneModel::hyperbolic(300, 2.5, 0.0).unwrap()
        } else {
            PlaneModel::euclidean(300, 0.15).unwrap()
        };
        let spec = SampleSpec::new(model, seed).poissonized(poissonized);
        let gg = generate(&spec, Execution::Parallel);
        prop_assert_eq!(&gg, &generate(&spec, Execution::Sequential));
        let brute = build_graph_brute_force(&gg.points, &model, Execution::Sequential).unwrap();
        prop_assert_eq!(&gg.graph, &brute);
        for u in (0..gg.points.len()).step_by(7) {
            for v in (u + 1..gg.points.len()).step_by(5) {
                let d = model.distance(gg.points.get(u), gg.points.get(v)).unwrap();
                prop_assert_eq!(gg.graph.has_edge(u, v), d <= model.threshold());
            }
        }
    }

    #[test]
    fn sampled_pairs_are_consistent(seed in any::<u64>(), hyperbolic in any::<bool>()) {
        if hyperbolic {
            let model = PlaneModel::hyperbolic(1000, 2.5, 0.0).unwrap();
            let SampledPair::Hyperbolic(p) = sample_independent_pair(&model, seed).unwrap() else { unreachable!() };
            let radius = model.threshold();
            let s = Segment::hyperbolic(p.v1, p.v2);
            let t = Segment::hyperbolic(p.w1, p.w2);
            prop_assert!(hyperbolic::is_independent(radius, &s, &t).unwrap());
            prop_assert!(p.a > radius && p.b > radius);
            prop_assert!(p.theta > 0.0 && p.theta < PI);
            prop_assert!(p.c > 0.0 && p.c < p.a && p.d > 0.0 && p.d < p.b);
            let back = hyperbolic::intersection_and_angle(radius, &t, &s).unwrap();
            prop_assert!((p.theta + back.theta - PI).abs() <= 1e-9);
        } else {
            let model = PlaneModel::euclidean(1000, 0.3).unwrap();
            let SampledPair::Euclid(p) = sample_independent_pair(&model, seed).unwrap() else { unreachable!() };
            let s = Segment::euclid(p.v1, p.v2);
            let t = Segment::euclid(p.w1, p.w2);
            prop_assert!(euclid::is_independent(0.3, &s, &t).unwrap());
            prop_assert!(p.c > 0.0 && p.c < p.a && p.d > 0.0 && p.d < p.b);
            let back = euclid::intersection_and_angle(0.3, &t, &s).unwrap();
            prop_assert!((p.theta + back.theta - PI).abs() <= 1e-9);
            // r0 from the law of cosines in the triangle m, q, w1.
            let h = p.a / 2.0 - p.c;
            let r0_sq = h * h + p.d * p.d + 2.0 * h * p.d * p.theta.cos();
            prop_assert!((p.r0 * p.r0 - r0_sq).abs() <= 1e-9);
        }
    }
}
