mod common;

use osamd::geometry::{BregmanGeometry, ModelVector};
use osamd::learners::{query_probability, QueryRule};
use osamd::losses::{
    confidence_score, hinge_gradient, hinge_value, linear_score, multiclass_hinge_value,
    multiclass_margin, HingeObjective, HingeSpec, MulticlassScores,
};
use proptest::prelude::*;

fn mv(v: Vec<f64>) -> ModelVector {
    ModelVector::new(v).unwrap()
}

fn penalty(spec: &HingeSpec, w: &[f64]) -> f64 {
    let n = w.len();
    let sq: f64 = w
        .iter()
        .enumerate()
        .filter(|(i, _)| !(spec.unpenalized_bias && i + 1 == n))
        .map(|(_, v)| v * v)
        .sum();
    spec.penalty_c * sq
}

fn spec_strategy() -> impl Strategy<Value = HingeSpec> {
    (0.1f64..3.0, 0.0f64..1.0, any::<bool>()).prop_map(|(m, c, b)| {
        let s = HingeSpec::new(m, c).unwrap();
        if b {
            s.with_unpenalized_bias()
        } else {
            s
        }
    })
}

fn label() -> impl Strategy<Value = i64> {
    prop_oneof![Just(1i64), Just(-1i64)]
}

/// Weight, second weight and feature vectors of a shared dimension.
fn triple(scale: f64) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    (1usize..=5).prop_flat_map(move |d| {
        (
            prop::collection::vec(-scale..scale, d),
            prop::collection::vec(-scale..scale, d),
            prop::collection::vec(-scale..scale, d),
        )
    })
}

proptest! {
    #[test]
    fn hinge_bounded_below_by_penalty(spec in spec_strategy(), (w, _, x) in triple(5.0), y in label()) {
        let v = hinge_value(&spec, &mv(w.clone()), &x, y).unwrap();
        let p = penalty(&spec, &w);
        prop_assert!(v >= p - 1e-12);
        let outside = y as f64 * linear_score(&mv(w.clone()), &x).unwrap() >= spec.margin_target;
        prop_assert_eq!(outside, (v - p).abs() <= 1e-12);
    }

    #[test]
    fn hinge_convex_on_segments(spec in spec_strategy(), (w1, w2, x) in triple(5.0), y in label(), lam in 0.0f64..1.0) {
        let mid: Vec<f64> = w1.iter().zip(&w2).map(|(a, b)| lam * a + (1.0 - lam) * b).collect();
        let f = |w: &Vec<f64>| hinge_value(&spec, &mv(w.clone()), &x, y).unwrap();
        prop_assert!(f(&mid) <= lam * f(&w1) + (1.0 - lam) * f(&w2) + 1e-9);
    }

    #[test]
    fn hinge_gradient_bounded(spec in spec_strategy(), (w, _, x) in triple(5.0), y in label()) {
        let g = hinge_gradient(&spec, &mv(w.clone()), &x, y).unwrap();
        let xn = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let wn = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!(g.norm() <= xn + 2.0 * spec.penalty_c * wn + 1e-9);
    }

    #[test]
    fn projection_is_idempotent_and_inside(r in 0.1f64..5.0, (w, _, _) in triple(10.0)) {
        let g = BregmanGeometry::ball(r).unwrap();
        let p = g.project(&mv(w.clone()));
        prop_assert!(p.norm() <= r * (1.0 + 1e-12));
        prop_assert_eq!(g.project(&p), p.clone());
        if w.iter().map(|v| v * v).sum::<f64>().sqrt() <= r {
            prop_assert_eq!(p.as_slice(), &w[..]);
        }
    }

    #[test]
    fn mirror_step_never_worse_than_staying(eta in 0.001f64..2.0, (w, g, _) in triple(5.0)) {
        let geo = BregmanGeometry::unbounded();
        let next = geo.mirror_step(&mv(w.clone()), &mv(g.clone()), eta).unwrap();
        let lin: f64 = g.iter().zip(next.as_slice()).zip(&w).map(|((gi, n), wi)| gi * (n - wi)).sum();
        let d = geo.bregman_divergence(&next, &mv(w)).unwrap();
        prop_assert!(eta * lin + d <= 1e-12);
    }

    #[test]
    fn prox_never_worse_than_anchor(spec in spec_strategy(), (a, _, x) in triple(3.0), y in label(),
                                    step in 0.001f64..2.0, iters in 1usize..40, rate in 0.001f64..2.0) {
        let f = HingeObjective::new(spec, &x, y).unwrap();
        let geo = BregmanGeometry::unbounded();
        let anchor = mv(a);
        let w = geo.proximal_step(&anchor, &f, step, iters, rate).unwrap();
        let obj = |m: &ModelVector| {
            step * hinge_value(&spec, m, &x, y).unwrap() + geo.bregman_divergence(m, &anchor).unwrap()
        };
        prop_assert!(obj(&w) <= obj(&anchor) * (1.0 + 1e-12) + 1e-14);
    }

    #[test]
    fn argmax_margin_equals_confidence(scores in prop::collection::vec(-10.0f64..10.0, 2..6)) {
        let s = MulticlassScores::new(scores).unwrap();
        let top = s.argmax();
        prop_assert_eq!(multiclass_margin(&s, top).unwrap(), confidence_score(&s));
        prop_assert!(confidence_score(&s) >= 0.0);
    }

    #[test]
    fn symmetric_scores_confidence_is_twice_abs(h in -10.0f64..10.0) {
        let s = MulticlassScores::new(vec![h, -h]).unwrap();
        prop_assert!((confidence_score(&s) - 2.0 * h.abs()).abs() <= 1e-12);
    }

    /// Rows `(u, v)` on two classes give the binary hinge of `u − v` with the
    /// penalty unchanged.
    #[test]
    fn two_class_hinge_reduces_to_binary(spec in spec_strategy(), (u, v, x) in triple(3.0), class in 0usize..2) {
        let rows: Vec<f64> = u.iter().chain(&v).copied().collect();
        let multi = multiclass_hinge_value(&spec, &mv(rows.clone()), &x, class, 2).unwrap();
        let diff: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - b).collect();
        let y = if class == 0 { 1 } else { -1 };
        let unpenalized = HingeSpec { penalty_c: 0.0, ..spec };
        let binary = hinge_value(&unpenalized, &mv(diff), &x, y).unwrap();
        let pen = penalty(&spec, &u) + penalty(&spec, &v);
        prop_assert!((multi - (binary + pen)).abs() <= 1e-9 * multi.abs().max(1.0));
    }

    #[test]
    fn query_probability_decreasing(sigma in 0.01f64..5.0, a in 0.0f64..10.0, b in 0.0f64..10.0) {
        prop_assume!((a - b).abs() > 1e-9);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(query_probability(sigma, lo).unwrap() > query_probability(sigma, hi).unwrap());
        let rule = QueryRule::Margin { sigma };
        prop_assert_eq!(rule.probability(lo).unwrap(), query_probability(sigma, lo).unwrap());
    }
}

#[test]
fn prox_gap_against_segment_oracle() {
    let detail = common::prox_gap_check(100).unwrap();
    println!("{detail}");
}

#[test]
fn gradients_match_finite_differences() {
    let detail = common::gradient_fd_check(200).unwrap();
    println!("{detail}");
}
