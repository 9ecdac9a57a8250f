mod common;

use advrisk::*;
use common::*;
use proptest::prelude::*;

fn unit_measure(points: &[(f64, f64)]) -> DiscreteMeasure {
    DiscreteMeasure::new(2, Norm::L2, points.iter().map(|&(x, y)| Atom::new(vec![x, y], 1.0))).unwrap()
}

fn bottleneck_oracle(xs: &[(f64, f64)], ys: &[(f64, f64)]) -> f64 {
    fn go(i: usize, xs: &[(f64, f64)], ys: &[(f64, f64)], used: &mut Vec<bool>, worst: f64, best: &mut f64) {
        if i == xs.len() {
            *best = best.min(worst);
            return;
        }
        for j in 0..ys.len() {
            if !used[j] {
                used[j] = true;
                let d = Norm::L2.distance(&[xs[i].0, xs[i].1], &[ys[j].0, ys[j].1]);
                go(i + 1, xs, ys, used, worst.max(d), best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    go(0, xs, ys, &mut vec![false; ys.len()], 0.0, &mut best);
    best
}

fn points(k: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64), k)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn winf_matches_permutation_oracle((xs, ys) in (1..=6usize).prop_flat_map(|k| (points(k), points(k)))) {
        let (q, qp) = (unit_measure(&xs), unit_measure(&ys));
        let w = winf_distance(&q, &qp).unwrap();
        prop_assert_eq!(w.distance, bottleneck_oracle(&xs, &ys));
        prop_assert_eq!(w.coupling.bottleneck(), w.distance);
        prop_assert!(w.coupling.certifies(&q, &qp, w.distance).is_ok());
        prop_assert!(in_ball(&q, &qp, w.distance).unwrap().member);
    }

    #[test]
    fn sup_integral_inequality(seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let (dist, scene, eps) = random_instance(&mut rng, 6);
        let q = dist.p0().clone();
        let (dest, _) = random_assignment(&mut rng, &dist, &scene, eps);
        let qp = DiscreteMeasure::new(q.dimension(), q.norm(), q.atoms().iter().zip(&dest).map(|(a, &d)| Atom::new(scene.points()[d].clone(), a.mass))).unwrap();
        let g = rng.classifier(scene);
        prop_assert!(sup_integral_check(&g, &q, &qp, eps).unwrap().holds);
    }

    #[test]
    fn weak_duality_on_random_triples(seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let (dist, scene, eps) = random_instance(&mut rng, 6);
        let f = random_classifier(&mut rng, scene.clone());
        let (d0, d1) = random_assignment(&mut rng, &dist, &scene, eps);
        let cand = DualCandidate::from_assignment(&dist, &scene, eps, &d0, &d1, None).unwrap();
        prop_assert!(weak_duality_check(&dist, eps, &f, &cand).unwrap());
    }

    #[test]
    fn surrogate_weak_duality(seed in any::<u64>(), which in 0..7usize) {
        let mut rng = SeededRng::new(seed);
        let (dist, scene, eps) = random_instance(&mut rng, 6);
        let loss = &builtin_losses()[which];
        let f = rng.classifier(scene.clone());
        let (d0, d1) = random_assignment(&mut rng, &dist, &scene, eps);
        let cand = DualCandidate::from_assignment(&dist, &scene, eps, &d0, &d1, Some(loss)).unwrap();
        let risk = adversarial_surrogate_risk(&dist, &f, loss, eps).unwrap().to_f64();
        prop_assert!(risk >= cand.objective_surrogate.unwrap() - 1e-9);
    }

    #[test]
    fn rho_margin_dual_objectives_agree(seed in any::<u64>(), rho in 0.1..2.0f64) {
        let mut rng = SeededRng::new(seed);
        let (dist, scene, eps) = random_instance(&mut rng, 6);
        let (d0, d1) = random_assignment(&mut rng, &dist, &scene, eps);
        let loss = LossFunction::RhoMargin { rho };
        let cand = DualCandidate::from_assignment(&dist, &scene, eps, &d0, &d1, Some(&loss)).unwrap();
        prop_assert!((cand.objective_surrogate.unwrap() - cand.objective_classification).abs() <= 1e-9);
        let recomputed = dual_classification_objective(&cand.p0_prime, &cand.p1_prime);
        prop_assert!((recomputed - cand.objective_classification).abs() <= 1e-12);
        prop_assert!((dual_surrogate_objective(&cand.p0_prime, &cand.p1_prime, &loss) - cand.objective_surrogate.unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn exhaustive_dual_grows_with_eps(seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let (dist, scene, _) = random_instance(&mut rng, 4);
        let mut last = 0.0;
        for eps in [0.0, 0.5, 1.0, 2.0, 4.0] {
            let sol = maximize_dual(&dist, eps, &scene, None, 1_000_000).unwrap();
            prop_assert!(sol.exhaustive);
            prop_assert!(sol.candidate.objective_classification >= last);
            last = sol.candidate.objective_classification;
        }
    }

    #[test]
    fn zero_one_gap_is_non_negative(seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let (dist, scene, eps) = random_instance(&mut rng, 4);
        let g = duality_gap(&dist, eps, scene, None, &default_value_grid(None), 1_000_000, 1_000_000).unwrap();
        prop_assert!(g.gap >= -1e-9, "{:?}", (g.primal, g.dual));
    }
}

#[test]
fn slackness_identity_with_adversarial_risk() {
    // R^ε(f) − R̄(P0*, P1*) is the sum of the classification residuals
    let mut rng = SeededRng::new(5);
    for _ in 0..50 {
        let (dist, scene, eps) = random_instance(&mut rng, 6);
        let f = random_classifier(&mut rng, scene.clone());
        let (d0, d1) = random_assignment(&mut rng, &dist, &scene, eps);
        let cand = DualCandidate::from_assignment(&dist, &scene, eps, &d0, &d1, None).unwrap();
        let row = &slackness_report(&dist, eps, &LossFunction::Hinge, &[(1, f.clone())], &cand).unwrap()[0];
        let lhs = adversarial_classification_risk(&dist, &f, eps).unwrap() - cand.objective_classification;
        let rhs = row.classification_conditional + row.classification_transport_p1 + row.classification_transport_p0;
        assert!((lhs - rhs).abs() <= 1e-12, "{lhs} vs {rhs}");
        assert!(row.classification_conditional >= -1e-12);
        assert!(row.classification_transport_p1 >= -1e-12 && row.classification_transport_p0 >= -1e-12);
    }
}
