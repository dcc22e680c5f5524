//! Independent oracles shared by the property tests and the acceptance run.
//! Each check returns a one-line detail on success and a reason on failure.

#![allow(dead_code)]

use osamd::environments::{gaussian_sample, RotatingGaussianConfig, Sample};
use osamd::geometry::{BregmanGeometry, ModelVector};
use osamd::learners::{
    mosamd_round, omd_round, osamd_round, self_adaptive_round, LabelOracle, OmdState, OsamdParams,
    OsamdState, QueryRule, RoundOutcome, SampleOracle, Task,
};
use osamd::losses::{
    hinge_gradient, hinge_value, multiclass_hinge_gradient, multiclass_hinge_value, HingeObjective,
    HingeSpec, Label,
};
use osamd::metrics::{
    comparator_oracle, dynamic_regret, expected_hinge_gaussian, mc_expected_loss, rotate_model,
    ComparatorOracle, OracleBudget,
};
use osamd::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = std::result::Result<String, String>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn mv(v: &[f64]) -> ModelVector {
    ModelVector::new(v.to_vec()).unwrap()
}

fn uniform_vec(r: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| r.random_range(-scale..scale)).collect()
}

/// Prox objective `s·f(w) + ½‖w − a‖²` for the euclidean regularizer.
fn prox_objective(spec: &HingeSpec, a: &[f64], x: &[f64], y: Label, s: f64, w: &[f64]) -> f64 {
    let f = hinge_value(spec, &mv(w), x, y).unwrap();
    let d: f64 = w.iter().zip(a).map(|(wi, ai)| (wi - ai).powi(2)).sum();
    s * f + 0.5 * d
}

/// Exact prox minimum. Optimality forces `w = (a + s·λ·y·x)/(1 + 2sC)` for
/// some `λ ∈ [0, 1]`; the objective is convex in λ, so a dense grid followed
/// by golden-section refinement finds it.
fn prox_oracle(spec: &HingeSpec, a: &[f64], x: &[f64], y: Label, s: f64) -> f64 {
    let denom = 1.0 + 2.0 * s * spec.penalty_c;
    let at = |lambda: f64| -> f64 {
        let w: Vec<f64> = a
            .iter()
            .zip(x)
            .map(|(ai, xi)| (ai + s * lambda * y as f64 * xi) / denom)
            .collect();
        prox_objective(spec, a, x, y, s, &w)
    };
    let grid = 2000;
    let (mut best_i, mut best) = (0usize, f64::INFINITY);
    for i in 0..=grid {
        let v = at(i as f64 / grid as f64);
        if v < best {
            best = v;
            best_i = i;
        }
    }
    let mut lo = (best_i.saturating_sub(1)) as f64 / grid as f64;
    let mut hi = ((best_i + 1).min(grid)) as f64 / grid as f64;
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if at(m1) <= at(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    best.min(at(0.5 * (lo + hi))).min(at(0.0)).min(at(1.0))
}

pub fn prox_gap_check(instances: usize) -> Check {
    let geometry = BregmanGeometry::unbounded();
    let mut r = rng(11);
    let mut worst: f64 = 0.0;
    for i in 0..instances {
        let dim = r.random_range(1..=4);
        let spec = HingeSpec::new(r.random_range(0.2..2.0), r.random_range(0.0..0.5)).unwrap();
        let a = uniform_vec(&mut r, dim, 2.0);
        let x = uniform_vec(&mut r, dim, 3.0);
        let y: Label = if r.random::<bool>() { 1 } else { -1 };
        let s = r.random_range(0.01..1.0);
        let f = HingeObjective::new(spec, &x, y).unwrap();
        let got = geometry
            .proximal_step(&mv(&a), &f, s, 200, 1.0)
            .map_err(|e| e.to_string())?;
        let value = prox_objective(&spec, &a, &x, y, s, got.as_slice());
        let best = prox_oracle(&spec, &a, &x, y, s);
        let gap = value - best;
        worst = worst.max(gap);
        if gap > 1e-6 {
            return Err(format!("instance {i}: gap {gap:.3e} > 1e-6"));
        }
    }
    Ok(format!("{instances} instances, worst gap {worst:.2e}"))
}

/// Central differences vs analytic gradients, skipping near-kink draws.
pub fn gradient_fd_check(instances: usize) -> Check {
    let mut r = rng(12);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let rel = |fd: f64, g: f64| (fd - g).abs() / g.abs().max(1.0);
    while checked < instances {
        let spec = HingeSpec::new(r.random_range(0.5..1.5), r.random_range(0.0..0.5)).unwrap();
        let spec = if r.random::<bool>() {
            spec.with_unpenalized_bias()
        } else {
            spec
        };
        let dim = r.random_range(1..=4);
        let w = uniform_vec(&mut r, dim, 2.0);
        let x = uniform_vec(&mut r, dim, 2.0);
        let y: Label = if r.random::<bool>() { 1 } else { -1 };
        let score: f64 = w.iter().zip(&x).map(|(a, b)| a * b).sum();
        if (spec.margin_target - y as f64 * score).abs() <= 1e-4 {
            continue;
        }
        let g = hinge_gradient(&spec, &mv(&w), &x, y).unwrap();
        for i in 0..dim {
            let (mut up, mut dn) = (w.clone(), w.clone());
            up[i] += h;
            dn[i] -= h;
            let fd = (hinge_value(&spec, &mv(&up), &x, y).unwrap()
                - hinge_value(&spec, &mv(&dn), &x, y).unwrap())
                / (2.0 * h);
            let e = rel(fd, g.as_slice()[i]);
            worst = worst.max(e);
            if e > 1e-6 {
                return Err(format!("binary coordinate {i}: relative error {e:.3e}"));
            }
        }

        let k = r.random_range(2..=4);
        let wm = uniform_vec(&mut r, k * dim, 2.0);
        let class = r.random_range(0..k);
        let scores: Vec<f64> = wm
            .chunks(dim)
            .map(|row| row.iter().zip(&x).map(|(a, b)| a * b).sum())
            .collect();
        let mut rivals: Vec<f64> = scores
            .iter()
            .enumerate()
            .filter(|(s, _)| *s != class)
            .map(|(_, v)| *v)
            .collect();
        rivals.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let psi = scores[class] - rivals[0];
        let tied = rivals.len() > 1 && rivals[0] - rivals[1] <= 1e-4;
        if (spec.margin_target - psi).abs() <= 1e-4 || tied {
            continue;
        }
        let g = multiclass_hinge_gradient(&spec, &mv(&wm), &x, class, k).unwrap();
        for i in 0..k * dim {
            let (mut up, mut dn) = (wm.clone(), wm.clone());
            up[i] += h;
            dn[i] -= h;
            let fd = (multiclass_hinge_value(&spec, &mv(&up), &x, class, k).unwrap()
                - multiclass_hinge_value(&spec, &mv(&dn), &x, class, k).unwrap())
                / (2.0 * h);
            let e = rel(fd, g.as_slice()[i]);
            worst = worst.max(e);
            if e > 1e-6 {
                return Err(format!("multiclass coordinate {i}: relative error {e:.3e}"));
            }
        }
        checked += 1;
    }
    Ok(format!(
        "{instances} binary + multiclass instances, worst relative error {worst:.2e}"
    ))
}

/// Closed-form expected loss against `draws`-sample Monte Carlo.
pub fn mc_vs_closed_form_check(probes: usize, draws: usize) -> Check {
    let config = RotatingGaussianConfig::default();
    let mut r = rng(13);
    let mut worst: f64 = 0.0;
    for p in 0..probes {
        let spec = if p % 2 == 0 {
            HingeSpec::default()
        } else {
            HingeSpec::default().with_unpenalized_bias()
        };
        let w = mv(&[
            r.random_range(-0.6..0.6),
            r.random_range(-0.6..0.6),
            r.random_range(-5.0..5.0),
        ]);
        let t = r.random_range(1..=config.horizon_t);
        let exact = expected_hinge_gaussian(&spec, &w, &config, t).map_err(|e| e.to_string())?;
        let mut mc_rng = rng(1000 + p as u64);
        let (est, se) = mc_expected_loss(
            Task::Binary,
            &spec,
            &w,
            |rr: &mut ChaCha8Rng| gaussian_sample(&config, t, rr),
            draws,
            &mut mc_rng,
        )
        .map_err(|e| e.to_string())?;
        let z = (est - exact).abs() / se;
        worst = worst.max(z);
        if z > 3.0 {
            return Err(format!(
                "probe {p} (t={t}): |mc − exact| = {z:.2} standard errors"
            ));
        }
    }
    Ok(format!(
        "{probes} probes x {draws} draws, worst {worst:.2} standard errors"
    ))
}

/// `w_t*` equals the rotation of `w_1*` by the round's angle, and the optimal
/// value does not depend on t.
pub fn comparator_equivariance_check() -> Check {
    let config = RotatingGaussianConfig::default();
    let mut worst_w: f64 = 0.0;
    let mut worst_v: f64 = 0.0;
    for spec in [
        HingeSpec::default(),
        HingeSpec::default().with_unpenalized_bias(),
    ] {
        let oracle = ComparatorOracle::new(spec, config.clone(), OracleBudget::default())
            .map_err(|e| e.to_string())?;
        let base = oracle.at_round(1).map_err(|e| e.to_string())?;
        if !base.converged {
            return Err("comparator at t=1 did not converge".to_string());
        }
        for t in [2, 137, 500, 1000, 1501, 2000] {
            let got = oracle.at_round(t).map_err(|e| e.to_string())?;
            let want = rotate_model(&base.w, config.angle(t));
            let res = got
                .w
                .as_slice()
                .iter()
                .zip(want.as_slice())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            worst_w = worst_w.max(res);
            worst_v = worst_v.max((got.value - base.value).abs());
        }
    }
    if worst_w > 1e-4 {
        return Err(format!("equivariance residual {worst_w:.3e} > 1e-4"));
    }
    if worst_v > 1e-6 {
        return Err(format!("optimal value varies by {worst_v:.3e} > 1e-6"));
    }
    Ok(format!(
        "residual {worst_w:.2e}, value spread {worst_v:.2e}"
    ))
}

/// No random direction around `w_t*` lowers the objective.
pub fn comparator_local_optimality_check() -> Check {
    let config = RotatingGaussianConfig::default();
    let spec = HingeSpec::default().with_unpenalized_bias();
    let mut r = rng(14);
    for t in [1, 700, 2000] {
        let best = comparator_oracle(&spec, &config, t, &OracleBudget::default())
            .map_err(|e| e.to_string())?;
        for _ in 0..100 {
            let d = uniform_vec(&mut r, 3, 1.0);
            let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            let eps = r.random_range(1e-4..1e-1);
            let probe: Vec<f64> = best
                .w
                .as_slice()
                .iter()
                .zip(&d)
                .map(|(w, di)| w + eps * di / norm)
                .collect();
            let v = expected_hinge_gaussian(&spec, &mv(&probe), &config, t).unwrap();
            if v < best.value - 1e-8 {
                return Err(format!("t={t}: probe improves by {:.3e}", best.value - v));
            }
        }
    }
    Ok("300 probes, none improve".to_string())
}

pub fn comparator_self_regret_check() -> Check {
    let config = RotatingGaussianConfig {
        horizon_t: 200,
        ..Default::default()
    };
    let oracle = ComparatorOracle::new(
        HingeSpec::default().with_unpenalized_bias(),
        config,
        OracleBudget::default(),
    )
    .map_err(|e| e.to_string())?;
    let series = oracle.series();
    let regret =
        dynamic_regret(&series.per_step_optimal_value, &series).map_err(|e| e.to_string())?;
    if regret.iter().any(|v| *v != 0.0) {
        return Err("comparator has nonzero regret against itself".to_string());
    }
    Ok(format!("{} rounds, regret identically 0", regret.len()))
}

/// A shared rotating-Gaussian stream.
pub fn gaussian_stream(seed: u64, horizon: usize) -> Vec<Sample> {
    let config = RotatingGaussianConfig {
        horizon_t: horizon,
        ..Default::default()
    };
    let mut r = rng(seed);
    (1..=horizon)
        .map(|t| gaussian_sample(&config, t, &mut r).unwrap())
        .collect()
}

pub fn reference_init() -> ModelVector {
    mv(&[-0.4, 0.0, 4.0])
}

fn osamd_state(params: OsamdParams) -> OsamdState {
    OsamdState::new(
        reference_init(),
        BregmanGeometry::unbounded(),
        params,
        HingeSpec::default().with_unpenalized_bias(),
        Task::Binary,
    )
    .unwrap()
}

type Trace = Vec<(ModelVector, RoundOutcome)>;

/// No-self-adaptation with forced queries vs OMD querying every round.
pub fn no_selfadapt_equals_omd_check() -> Check {
    let stream = gaussian_stream(21, 2000);
    let params = OsamdParams::default();
    let mut a = osamd_state(params);
    let mut b = OmdState::new(
        reference_init(),
        BregmanGeometry::unbounded(),
        params.eta,
        HingeSpec::default().with_unpenalized_bias(),
        Task::Binary,
    )
    .unwrap();
    let (mut ra, mut rb) = (rng(5), rng(5));
    let (mut ta, mut tb): (Trace, Trace) = (Vec::new(), Vec::new());
    for s in &stream {
        let (na, da, oa) = self_adaptive_round(
            &a,
            &s.features,
            &mut SampleOracle::new(s.label),
            &mut ra,
            &QueryRule::Always,
            false,
        )
        .map_err(|e| e.to_string())?;
        let (nb, db, ob) = omd_round(
            &b,
            &s.features,
            &mut SampleOracle::new(s.label),
            &QueryRule::Always,
            &mut rb,
        )
        .map_err(|e| e.to_string())?;
        a = na;
        b = nb;
        ta.push((da, strip_pseudo(oa)));
        tb.push((db, strip_pseudo(ob)));
    }
    if a.w_hat != b.w {
        return Err("final models differ".to_string());
    }
    if let Some(t) = ta.iter().zip(&tb).position(|(x, y)| x != y) {
        return Err(format!("trajectories diverge at round {}", t + 1));
    }
    Ok(format!("{} rounds bit-identical", stream.len()))
}

/// The teacher's pseudolabel has no OMD counterpart; compare the rest.
fn strip_pseudo(mut o: RoundOutcome) -> RoundOutcome {
    o.pseudolabel = 0;
    o.mistake = false;
    o
}

/// No-active with rate 1 vs OSAMD with forced queries.
pub fn no_active_equals_forced_osamd_check() -> Check {
    let stream = gaussian_stream(22, 2000);
    let params = OsamdParams::default();
    let (mut a, mut b) = (osamd_state(params), osamd_state(params));
    let (mut ra, mut rb) = (rng(6), rng(6));
    for (t, s) in stream.iter().enumerate() {
        let (na, da, oa) = osamd::learners::ablation_no_active_round(
            &a,
            &s.features,
            &mut SampleOracle::new(s.label),
            &mut ra,
            1.0,
        )
        .map_err(|e| e.to_string())?;
        let (nb, db, ob) = self_adaptive_round(
            &b,
            &s.features,
            &mut SampleOracle::new(s.label),
            &mut rb,
            &QueryRule::Always,
            true,
        )
        .map_err(|e| e.to_string())?;
        if na != nb || da != db || oa.query_probability != 1.0 || !oa.queried {
            return Err(format!("diverged at round {}", t + 1));
        }
        let ob = RoundOutcome {
            query_probability: oa.query_probability,
            ..ob
        };
        if oa != ob {
            return Err(format!("outcomes differ at round {}", t + 1));
        }
        a = na;
        b = nb;
    }
    Ok(format!("{} rounds bit-identical", stream.len()))
}

/// Binary labels `±1` map to classes `0`/`1`.
fn class_of(y: Label) -> Label {
    if y == 1 {
        0
    } else {
        1
    }
}

/// MOSAMD on two classes with rows `(u, −u)` against binary OSAMD on `2u`
/// with doubled stepsize and cap and halved penalty. Each round starts both
/// learners from matching states and a shared rng, so a rounding-level split
/// cannot compound. A round whose decision sits on the hinge kink may take
/// either subgradient branch; those are counted, not compared.
pub fn two_class_reduction_check() -> Check {
    let stream = gaussian_stream(23, 2000);
    // In the coordinates of u the two inner descents coincide when they
    // share a rate, so the inner rate is pinned rather than left at η.
    let pm = OsamdParams {
        eta: 0.005,
        tau_cap: 0.5,
        inner_rate: Some(0.005),
        ..OsamdParams::default()
    };
    let pb = OsamdParams {
        eta: 2.0 * pm.eta,
        tau_cap: 2.0 * pm.tau_cap,
        ..pm
    };
    let spec_m = HingeSpec::new(1.0, 0.2).unwrap();
    let spec_b = HingeSpec::new(1.0, 0.1).unwrap();
    let u = [-0.2, 0.0, 2.0];
    let rows: Vec<f64> = u.iter().copied().chain(u.iter().map(|v| -v)).collect();
    let mut m = OsamdState::new(
        mv(&rows),
        BregmanGeometry::unbounded(),
        pm,
        spec_m,
        Task::Multiclass { n_classes: 2 },
    )
    .unwrap();
    let doubled = |w: &ModelVector| {
        mv(&w.as_slice()[..3]
            .iter()
            .map(|v| 2.0 * v)
            .collect::<Vec<_>>())
    };
    let gap = |a: &[f64], b: &ModelVector| {
        a.iter()
            .zip(b.as_slice())
            .map(|(p, q)| (p - q).abs() / q.abs().max(1.0))
            .fold(0.0, f64::max)
    };
    let mut r = rng(7);
    let (mut worst, mut kinks, mut queries): (f64, usize, usize) = (0.0, 0, 0);
    for (t, s) in stream.iter().enumerate() {
        let b = OsamdState::new(
            doubled(&m.theta),
            BregmanGeometry::unbounded(),
            pb,
            spec_b,
            Task::Binary,
        )
        .map(|st| OsamdState {
            w_hat: doubled(&m.w_hat),
            ..st
        })
        .unwrap();
        let mut rb = r.clone();
        let (nm, dm, om) = mosamd_round(
            &m,
            &s.features,
            &mut SampleOracle::new(class_of(s.label)),
            &mut r,
        )
        .map_err(|e| e.to_string())?;
        let (nb, db, ob) = osamd_round(&b, &s.features, &mut SampleOracle::new(s.label), &mut rb)
            .map_err(|e| e.to_string())?;
        let round = t + 1;
        if om.queried != ob.queried || om.pseudolabel != class_of(ob.pseudolabel) {
            return Err(format!("round {round}: query or pseudolabel differs"));
        }
        if (om.query_probability - ob.query_probability).abs() > 1e-12 {
            return Err(format!("round {round}: query probabilities differ"));
        }
        let d = doubled(&dm);
        let anti = (0..3)
            .map(|i| (dm.as_slice()[i] + dm.as_slice()[i + 3]).abs())
            .fold(0.0, f64::max);
        worst = worst.max(gap(d.as_slice(), &db)).max(anti);
        if worst > 1e-9 {
            return Err(format!("round {round}: decisions differ by {worst:.3e}"));
        }
        let target = if ob.queried {
            ob.true_label
        } else {
            ob.pseudolabel
        } as f64;
        let on_kink = (target * ob.decision_score - 1.0).abs() <= 1e-9;
        if om.predicted_label != class_of(ob.predicted_label) {
            return Err(format!("round {round}: predictions differ"));
        }
        if on_kink {
            kinks += 1;
        } else {
            let next = gap(doubled(&nm.w_hat).as_slice(), &nb.w_hat)
                .max(gap(doubled(&nm.theta).as_slice(), &nb.theta));
            if next > 1e-9 {
                return Err(format!("round {round}: next states differ by {next:.3e}"));
            }
        }
        queries += om.queried as usize;
        m = nm;
    }
    Ok(format!(
        "{} rounds, {queries} queries, identical decisions, drift {worst:.2e}, {kinks} rounds on the kink",
        stream.len()
    ))
}

/// Oracle that records every access and answers queries with the true label.
pub struct SpyOracle {
    pub label: Label,
    pub queried: bool,
    pub revealed: bool,
}

impl LabelOracle for SpyOracle {
    fn query(&mut self) -> Result<Label> {
        self.queried = true;
        Ok(self.label)
    }

    fn reveal_for_metrics(&mut self) -> Result<Label> {
        self.revealed = true;
        Ok(self.label)
    }
}

pub fn prox_gap_one(spec: &HingeSpec, a: &[f64], x: &[f64], y: Label, s: f64, w: &[f64]) -> f64 {
    prox_objective(spec, a, x, y, s, w) - prox_oracle(spec, a, x, y, s)
}

/// MOSAMD on the rotating 3-class stream: every round queries with
/// `σ/(σ + top-two gap of the teacher)`, and the learner tracks the drift.
pub fn multiclass_stream_check() -> Check {
    use osamd::environments::{multiclass_gaussian_sample, RotatingMulticlassConfig};
    use osamd::learners::{pretrain, PretrainSpec};
    use osamd::losses::{confidence_score, multiclass_margin, MulticlassScores};

    let config = RotatingMulticlassConfig::default();
    let k = config.n_classes;
    let task = Task::Multiclass { n_classes: k };
    let spec = HingeSpec::default().with_unpenalized_bias();
    let geometry = BregmanGeometry::unbounded();
    let mut r = rng(41);
    let source: Vec<Sample> = (0..config.n_pretrain)
        .map(|_| multiclass_gaussian_sample(&config, 1, &mut r).unwrap())
        .collect();
    let init = pretrain(
        &source,
        task,
        &spec,
        &geometry,
        &PretrainSpec::default(),
        &mut r,
    )
    .map_err(|e| e.to_string())?;
    let params = OsamdParams::default();
    let mut state =
        OsamdState::new(init, geometry, params, spec, task).map_err(|e| e.to_string())?;
    let (mut correct, mut queries) = (0usize, 0usize);
    for t in 1..=config.horizon_t {
        let s = multiclass_gaussian_sample(&config, t, &mut r).map_err(|e| e.to_string())?;
        let scores = MulticlassScores::from_model(&state.theta, &s.features, k)
            .map_err(|e| e.to_string())?;
        let gap = confidence_score(&scores);
        if multiclass_margin(&scores, scores.argmax()).unwrap() != gap {
            return Err(format!(
                "round {t}: margin at argmax differs from confidence"
            ));
        }
        let (next, _, o) =
            mosamd_round(&state, &s.features, &mut SampleOracle::new(s.label), &mut r)
                .map_err(|e| e.to_string())?;
        if o.pseudolabel != scores.argmax() as Label {
            return Err(format!("round {t}: pseudolabel is not the teacher argmax"));
        }
        let want = params.sigma / (params.sigma + gap);
        if (o.query_probability - want).abs() > 1e-15 {
            return Err(format!(
                "round {t}: query probability {} vs {want}",
                o.query_probability
            ));
        }
        correct += o.correct() as usize;
        queries += o.queried as usize;
        state = next;
    }
    let n = config.horizon_t as f64;
    let accuracy = correct as f64 / n;
    if accuracy < 0.8 {
        return Err(format!("accuracy {:.3} on {k} classes", accuracy));
    }
    Ok(format!(
        "{k} classes, {} rounds, accuracy {:.2}%, labels {:.2}%",
        config.horizon_t,
        100.0 * accuracy,
        100.0 * queries as f64 / n
    ))
}
