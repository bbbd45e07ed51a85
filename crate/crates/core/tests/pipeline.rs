use approx::assert_relative_eq;
use proptest::prelude::*;
use qscgrn::grn::{prune, score_against_baseline, to_network, BaselineGrn, GeneNetwork, Sign};
use qscgrn::ingest::{binarize, observed_distribution, observed_from_counts, ExpressionMatrix};
use qscgrn::model::{
    build_plan, forward, loss_gradient, output_distribution, Objective, ThetaMatrix,
};
use qscgrn::statevec::StateVector;
use qscgrn::train::{encoder_angle, init_theta, optimize, smooth, InitStrategy, TrainConfig};
use qscgrn::{Distribution, Gate};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn theta_strategy(n: usize) -> impl Strategy<Value = ThetaMatrix> {
    prop::collection::vec(-1.5f64..1.5, n * n).prop_map(move |mut e| {
        for k in 0..n {
            // Keep the encoder away from |0..0> so the output never degenerates.
            e[k * n + k] = 1.0 + e[k * n + k].abs();
        }
        ThetaMatrix::new(n, e).unwrap()
    })
}

fn p_obs_strategy(n: usize) -> impl Strategy<Value = Distribution> {
    prop::collection::vec(0.05f64..1.0, 1 << n).prop_map(move |mut w| {
        w[0] = 0.0;
        let t: f64 = w.iter().sum();
        Distribution::new(n, w.iter().map(|v| v / t).collect()).unwrap()
    })
}

fn instance() -> impl Strategy<Value = (ThetaMatrix, Distribution)> {
    (2usize..=4).prop_flat_map(|n| (theta_strategy(n), p_obs_strategy(n)))
}

fn central_difference(obj: &Objective, theta: &ThetaMatrix, k: usize, p: usize, h: f64) -> f64 {
    let at = |d: f64| {
        let mut t = theta.clone();
        t.set(k, p, theta.get(k, p) + d);
        obj.loss(&t).unwrap()
    };
    (at(h) - at(-h)) / (2.0 * h)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gradient_matches_finite_differences((theta, p_obs) in instance(), m in 50u64..100_000, alpha in 0.1f64..3.0) {
        let obj = Objective::new(p_obs, m, alpha).unwrap();
        let g = obj.evaluate(&theta).unwrap().gradient;
        let n = theta.n();
        for (k, p, _) in theta.off_diagonal() {
            let fd = central_difference(&obj, &theta, k, p, 1e-5);
            let a = g[k * n + p];
            if a.abs() < 1e-6 {
                prop_assert!((a - fd).abs() < 1e-9, "({k},{p}) {a} vs {fd}");
            } else {
                prop_assert!((a - fd).abs() / a.abs() < 1e-6, "({k},{p}) {a} vs {fd}");
            }
        }
        for k in 0..n {
            prop_assert_eq!(g[k * n + k], 0.0);
        }
    }

    #[test]
    fn evaluation_loss_equals_loss((theta, p_obs) in instance()) {
        let obj = Objective::new(p_obs, 1000, 1.0).unwrap();
        let e = obj.evaluate(&theta).unwrap();
        prop_assert_eq!(e.loss, obj.loss(&theta).unwrap());
        prop_assert!(e.loss >= -1e-15);
        prop_assert!(e.error >= 0.0);
    }

    #[test]
    fn output_is_a_distribution(theta in (2usize..=5).prop_flat_map(theta_strategy)) {
        let p = output_distribution(&theta).unwrap();
        prop_assert_eq!(p.as_slice()[0], 0.0);
        prop_assert!((p.sum() - 1.0).abs() < 1e-12);
        prop_assert!(p.as_slice().iter().all(|&v| v >= 0.0));
        let raw = forward(&theta).unwrap().probabilities();
        prop_assert!((raw.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn encoder_marginals_are_activation_ratios(act in prop::collection::vec(0.0f64..=1.0, 4)) {
        let mut s = StateVector::zero(4).unwrap();
        for (k, &a) in act.iter().enumerate() {
            s.apply(&Gate::Ry { qubit: k, theta: encoder_angle(a) }).unwrap();
        }
        let p = s.probabilities();
        for (k, &a) in act.iter().enumerate() {
            let marginal: f64 = p.as_slice().iter().enumerate().filter(|(x, _)| x >> k & 1 == 1).map(|(_, v)| v).sum();
            prop_assert!((marginal - a).abs() < 1e-12);
        }
    }

    #[test]
    fn smoothing_is_a_positive_distribution(p in (1usize..=4).prop_flat_map(p_obs_strategy), m in 1u64..10_000, alpha in 0.01f64..5.0) {
        let q = smooth(&p, m, alpha).unwrap();
        prop_assert!((q.sum() - 1.0).abs() < 1e-12);
        prop_assert!(q.as_slice().iter().all(|&v| v > 0.0));
    }

    #[test]
    fn gene_order_is_stable_under_row_permutation(
        rows in prop::collection::vec(prop::collection::vec(prop_oneof![Just(0.0), 0.1f64..5.0], 12), 4),
        perm in Just(vec![0usize, 1, 2, 3]).prop_shuffle(),
    ) {
        let names: Vec<String> = (0..4).map(|g| format!("gene{g}")).collect();
        let a = ExpressionMatrix::new(names.clone(), 12, rows.concat()).unwrap();
        let b = ExpressionMatrix::new(
            perm.iter().map(|&g| names[g].clone()).collect(),
            12,
            perm.iter().flat_map(|&g| rows[g].clone()).collect(),
        )
        .unwrap();
        let (xa, xb) = (binarize(&a), binarize(&b));
        prop_assert_eq!(xa.activation_ratios(), xb.activation_ratios());
        // Genes with equal ratios may swap; everything else must agree.
        for k in 0..4 {
            if xa.gene_names()[k] != xb.gene_names()[k] {
                let ratio = xa.activation_ratios()[k];
                prop_assert_eq!(xa.activation_ratios().iter().filter(|&&r| r == ratio).count() > 1, true);
            } else {
                prop_assert_eq!(xa.row(k), xb.row(k));
            }
        }
    }

    #[test]
    fn pruning_is_idempotent(theta in (2usize..=5).prop_flat_map(theta_strategy), thr in 0.0f64..1.0) {
        let once = prune(&theta, thr);
        let twice = prune(&once.to_theta(), thr);
        prop_assert_eq!(once.to_theta(), twice.to_theta());
        for (k, p, v) in once.to_theta().off_diagonal() {
            prop_assert!(v == 0.0 || v.abs() >= thr);
            prop_assert!(v == 0.0 || v == theta.get(k, p));
        }
    }

    #[test]
    fn scores_ignore_gene_order(
        theta in theta_strategy(4),
        truth in prop::collection::vec(prop_oneof![Just(0i8), Just(1), Just(-1)], 16),
        perm in Just(vec![0usize, 1, 2, 3]).prop_shuffle(),
    ) {
        let genes: Vec<String> = ["a", "b", "c", "d"].map(String::from).to_vec();
        let mut edges: Vec<(String, String, Sign)> = Vec::new();
        for k in 0..4 {
            for p in (0..4).filter(|&p| p != k) {
                match truth[k * 4 + p] {
                    1 => edges.push((genes[k].clone(), genes[p].clone(), Sign::Up)),
                    -1 => edges.push((genes[k].clone(), genes[p].clone(), Sign::Down)),
                    _ => {}
                }
            }
        }
        prop_assume!(!edges.is_empty());
        let baseline = BaselineGrn::new(edges);
        let net = to_network(&prune(&theta, 0.087), &genes).unwrap();
        let mut e = vec![0.0; 16];
        for (i, &pi) in perm.iter().enumerate() {
            for (j, &pj) in perm.iter().enumerate() {
                e[i * 4 + j] = theta.get(pi, pj);
            }
        }
        let permuted = ThetaMatrix::new(4, e).unwrap();
        let pgenes: Vec<String> = perm.iter().map(|&g| genes[g].clone()).collect();
        let pnet = to_network(&prune(&permuted, 0.087), &pgenes).unwrap();
        let (s1, s2) = (score_against_baseline(&net, &baseline).unwrap(), score_against_baseline(&pnet, &baseline).unwrap());
        prop_assert_eq!(&s1, &s2);
        prop_assert_eq!(s1.confusion.total(), 12);
    }

    #[test]
    fn network_json_round_trips(theta in (2usize..=5).prop_flat_map(theta_strategy)) {
        let genes: Vec<String> = (0..theta.n()).map(|k| format!("g{k}")).collect();
        let net = to_network(&prune(&theta, 0.087), &genes).unwrap();
        prop_assert_eq!(GeneNetwork::from_json(&net.to_json().unwrap()).unwrap(), net);
    }
}

#[test]
fn gradient_on_model_distribution_vanishes() {
    let theta = ThetaMatrix::new(3, vec![1.1, 0.3, -0.2, 0.25, 1.7, 0.1, -0.4, 0.2, 0.8]).unwrap();
    let p = output_distribution(&theta).unwrap();
    let g = loss_gradient(&theta, &p, 10_000, 1.0).unwrap();
    assert!(g.iter().all(|v| v.abs() < 1e-14), "{g:?}");
}

#[test]
fn layer_order_matters() {
    let theta = ThetaMatrix::new(3, vec![1.1, 0.9, -0.7, 0.8, 1.7, 0.6, -0.9, 0.5, 0.8]).unwrap();
    let plan = build_plan(&theta);
    let reference = forward(&theta).unwrap();
    let n = 3;
    // Encoder, then L_2, L_1, L_0.
    let (encoder, layers) = plan.gates().split_at(n);
    let mut reversed: Vec<Gate> = encoder.iter().map(|g| g.gate).collect();
    for layer in layers.chunks(n - 1).rev() {
        reversed.extend(layer.iter().map(|g| g.gate));
    }
    let mut s = StateVector::zero(n).unwrap();
    for g in &reversed {
        s.apply(g).unwrap();
    }
    let diff = s
        .amplitudes()
        .iter()
        .zip(reference.amplitudes())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(diff > 1e-6, "{diff}");
}

#[test]
fn sampled_labels_recover_the_distribution() {
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    for n in 2..=4usize {
        let entries: Vec<f64> = (0..n * n)
            .map(|i| {
                if i % (n + 1) == 0 {
                    rng.random_range(0.9..2.2)
                } else {
                    rng.random_range(-0.5..0.5)
                }
            })
            .collect();
        let theta = ThetaMatrix::new(n, entries).unwrap();
        let q = output_distribution(&theta).unwrap();
        let m = 20_000;
        let idx = WeightedIndex::new(q.as_slice()).unwrap();
        let labels: Vec<usize> = (0..m).map(|_| idx.sample(&mut rng)).collect();
        let values: Vec<f64> = (0..n)
            .flat_map(|k| labels.iter().map(move |&x| (x >> k & 1) as f64))
            .collect();
        let names: Vec<String> = (0..n).map(|k| format!("g{k}")).collect();
        let xb = binarize(&ExpressionMatrix::new(names, m, values).unwrap());
        // Put genes back in θ order before comparing label distributions.
        let order: Vec<usize> = xb
            .gene_names()
            .iter()
            .map(|g| g[1..].parse().unwrap())
            .collect();
        let obs = observed_distribution(&xb).unwrap();
        let mut back = vec![0.0; 1 << n];
        for (x, &v) in obs.distribution.as_slice().iter().enumerate() {
            let y = (0..n).fold(0, |acc, k| acc | (x >> k & 1) << order[k]);
            back[y] = v;
        }
        let back = Distribution::new(n, back).unwrap();
        let tv = back.total_variation(&q).unwrap();
        assert!(
            tv < 3.0 * ((1 << n) as f64 / m as f64).sqrt(),
            "n {n}: tv {tv}"
        );
    }
}

#[test]
fn one_step_moves_downhill() {
    let n = 3;
    let p_obs = observed_from_counts(n, vec![5, 30, 10, 20, 5, 15, 5, 10]).unwrap();
    let obj = Objective::new(p_obs.distribution, p_obs.m, 1.0).unwrap();
    let init = init_theta(
        &[0.6, 0.5, 0.4],
        InitStrategy::Uniform {
            low: -0.1,
            high: 0.1,
            seed: 2,
        },
    )
    .unwrap();
    let cfg = TrainConfig {
        max_iterations: 200,
        learning_rate: 0.5,
        ..Default::default()
    };
    let out = optimize(&obj, &cfg, &init).unwrap();
    let losses: Vec<f64> = out.history.records.iter().map(|r| r.loss).collect();
    assert!(losses.windows(2).all(|w| w[1] <= w[0]), "{losses:?}");
    assert_eq!(out.theta.diagonal(), init.diagonal());
    assert_relative_eq!(
        out.final_loss,
        obj.loss(&out.theta).unwrap(),
        max_relative = 1e-15
    );
}
