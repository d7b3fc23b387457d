use proptest::prelude::*;

use drtk::complexity::{mnc, pds};
use drtk::cvm::{ch_adjusted, dsc_pair_score, CvmConfig};
use drtk::data::{pairwise_distances, validate_labeled, DataMatrix, DistanceKind, LabelPartition};
use drtk::drquality::{metric_eval, mrre, trust_cont, MetricKind, MetricSpec};
use drtk::drtech::{project, HyperParams, Technique, TechniqueId};
use drtk::labeltnc::label_tnc;
use drtk::neighbors::{knn_weight_matrix, rank_matrix, snn_weight_matrix};
use drtk::optimize::optimize_technique;
use drtk::synthlab::{gaussian_blobs, iid_gaussian, randomize_positions, Cell, ExperimentCurve};

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

fn blobs_strategy() -> impl Strategy<Value = (DataMatrix, LabelPartition)> {
    (
        2usize..5,
        4usize..15,
        2usize..6,
        0.5f64..3.0,
        0.0f64..8.0,
        any::<u64>(),
    )
        .prop_map(|(c, per, dim, spread, sep, seed)| {
            gaussian_blobs(c, per, dim, spread, sep, seed).unwrap()
        })
}

fn points_strategy() -> impl Strategy<Value = DataMatrix> {
    (3usize..25, 1usize..5, any::<u64>()).prop_map(|(n, d, seed)| iid_gaussian(n, d, seed).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distances_scale_linearly(x in points_strategy(), alpha in 0.01f64..100.0) {
        let ax = x.scaled(alpha).unwrap();
        for (kind, factor) in [(DistanceKind::Euclidean, alpha), (DistanceKind::SquaredEuclidean, alpha * alpha)] {
            let d = pairwise_distances(&x, kind);
            let da = pairwise_distances(&ax, kind);
            for (a, b) in d.values().iter().zip(da.values()) {
                prop_assert!(rel_close(a * factor, *b, 1e-9) || (*a == 0.0 && *b == 0.0));
            }
        }
    }

    #[test]
    fn triangle_inequality(x in points_strategy()) {
        let d = pairwise_distances(&x, DistanceKind::Euclidean);
        let n = d.n();
        let mut triples = 0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    prop_assert!(d.get(i, k) <= d.get(i, j) + d.get(j, k) + 1e-12);
                    triples += 1;
                }
            }
        }
        prop_assert!(triples >= 27);
    }

    #[test]
    fn knn_weights_depend_only_on_order(x in points_strategy(), k_frac in 0.0f64..1.0) {
        let d = pairwise_distances(&x, DistanceKind::Euclidean);
        let d2 = d.map(|v| v * v).unwrap();
        let k = 1 + ((x.rows() - 2) as f64 * k_frac) as usize;
        let a = knn_weight_matrix(&rank_matrix(&d), k).unwrap();
        let b = knn_weight_matrix(&rank_matrix(&d2), k).unwrap();
        for i in 0..x.rows() {
            prop_assert_eq!(a.dense_row(i), b.dense_row(i));
            let row_sum: u64 = a.dense_row(i).iter().sum();
            prop_assert_eq!(row_sum, (k * (k + 1) / 2) as u64);
        }
    }

    #[test]
    fn snn_is_symmetric(x in points_strategy(), k_frac in 0.0f64..1.0) {
        let k = 1 + ((x.rows() - 2) as f64 * k_frac) as usize;
        let w = snn_weight_matrix(&rank_matrix(&pairwise_distances(&x, DistanceKind::Euclidean)), k).unwrap();
        let bound = (k * k * (k + 1) * (k + 1) / 4) as u64;
        for i in 0..x.rows() {
            prop_assert_eq!(w.get(i, i), 0);
            for j in 0..x.rows() {
                prop_assert_eq!(w.get(i, j), w.get(j, i));
                prop_assert!(w.get(i, j) <= bound);
            }
        }
    }

    #[test]
    fn cvm_scores_scale_invariant_and_in_range((x, p) in blobs_strategy()) {
        let cfg = CvmConfig::ch_adjusted();
        let base = ch_adjusted(&validate_labeled(x.clone(), p.clone()).unwrap(), &cfg);
        prop_assume!(base.is_ok());
        let base = base.unwrap();
        prop_assert!((0.0..1.0).contains(&base));
        for alpha in [0.01, 1.0, 100.0] {
            let xs = x.scaled(alpha).unwrap();
            let v = ch_adjusted(&validate_labeled(xs.clone(), p.clone()).unwrap(), &cfg).unwrap();
            prop_assert!((v - base).abs() < 1e-9, "alpha {}: {} vs {}", alpha, v, base);
            let l = validate_labeled(xs, p.clone()).unwrap().class_pair(0, 1).unwrap();
            let l0 = validate_labeled(x.clone(), p.clone()).unwrap().class_pair(0, 1).unwrap();
            let (a, b) = (dsc_pair_score(l.data(), l.labels()).unwrap(), dsc_pair_score(l0.data(), l0.labels()).unwrap());
            prop_assert!((a - b).abs() < 1e-9);
            prop_assert!((0.0..=1.0).contains(&a));
        }
    }

    #[test]
    fn class_ids_do_not_matter((x, p) in blobs_strategy(), rot in 1usize..4) {
        let c = p.class_count();
        let perm: Vec<usize> = (0..c).map(|i| (i + rot) % c).collect();
        let q = p.permuted(&perm).unwrap();
        for cfg in [CvmConfig::ch_adjusted(), CvmConfig::dsc()] {
            let a = drtk::labeltnc::clm_matrix(&x, &p, &cfg);
            let b = drtk::labeltnc::clm_matrix(&x, &q, &cfg);
            prop_assume!(a.is_ok());
            prop_assert_eq!(a.unwrap().upper_mean(), b.unwrap().upper_mean());
        }
        let cfg = CvmConfig::ch_adjusted();
        let a = ch_adjusted(&validate_labeled(x.clone(), p).unwrap(), &cfg).unwrap();
        let b = ch_adjusted(&validate_labeled(x, q).unwrap(), &cfg).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn label_tnc_duality_and_exclusivity((x, p) in blobs_strategy(), seed in any::<u64>(), prob in 0.0f64..1.0) {
        let z = randomize_positions(&x, prob, seed).unwrap();
        for cfg in [CvmConfig::dsc(), CvmConfig::ch_adjusted()] {
            let xz = label_tnc(&x, &z, &p, &cfg);
            prop_assume!(xz.is_ok());
            let xz = xz.unwrap();
            let zx = label_tnc(&z, &x, &p, &cfg).unwrap();
            prop_assert_eq!(xz.label_t, zx.label_c);
            prop_assert_eq!(xz.label_c, zx.label_t);
            let c = p.class_count();
            for i in 0..c {
                for j in i + 1..c {
                    prop_assert!(xz.fg_matrix.get(i, j) == 0.0 || xz.mg_matrix.get(i, j) == 0.0);
                }
            }
            let scaled = label_tnc(&x.scaled(37.0).unwrap(), &z.scaled(0.02).unwrap(), &p, &cfg).unwrap();
            prop_assert!((scaled.label_t - xz.label_t).abs() < 1e-9);
            prop_assert!((scaled.label_c - xz.label_c).abs() < 1e-9);
        }
    }

    #[test]
    fn rank_metrics_ignore_monotone_transforms(x in points_strategy(), seed in any::<u64>()) {
        let n = x.rows();
        prop_assume!(n >= 4);
        let z = randomize_positions(&x, 0.5, seed).unwrap();
        let dx = pairwise_distances(&x, DistanceKind::Euclidean);
        let dz = pairwise_distances(&z, DistanceKind::Euclidean);
        let tx = dx.map(|v| v.powi(3) + 2.0 * v).unwrap();
        let tz = dz.map(|v| v.sqrt()).unwrap();
        let k = (2 * n - 2) / 3;
        prop_assert_eq!(trust_cont(&dx, &dz, k).unwrap(), trust_cont(&tx, &tz, k).unwrap());
        prop_assert_eq!(mrre(&dx, &dz, k).unwrap(), mrre(&tx, &tz, k).unwrap());
    }

    #[test]
    fn complexity_scale_invariant(x in points_strategy(), alpha in prop::sample::select(vec![0.01, 3.0, 100.0])) {
        let xs = x.scaled(alpha).unwrap();
        let (a, b) = (pds(&x), pds(&xs));
        prop_assume!(a.is_ok());
        prop_assert!((a.unwrap() - b.unwrap()).abs() < 1e-9);
        let k = (x.rows() - 1).min(5);
        prop_assert!((mnc(&x, k).unwrap() - mnc(&xs, k).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn randomizing_keeps_rows(x in points_strategy(), prob in 0.0f64..=1.0, seed in any::<u64>()) {
        let y = randomize_positions(&x, prob, seed).unwrap();
        let key = |m: &DataMatrix| {
            let mut rows: Vec<Vec<u64>> = m.row_iter().map(|r| r.iter().map(|v| v.to_bits()).collect()).collect();
            rows.sort();
            rows
        };
        prop_assert_eq!(key(&x), key(&y));
        prop_assert_eq!(randomize_positions(&x, prob, seed).unwrap(), y);
    }

    #[test]
    fn curves_round_trip(values in prop::collection::vec(-1e6f64..1e6, 1..8), reason in "[a-z ,()]{0,12}") {
        let mut xs: Vec<f64> = values.clone();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let rows: Vec<Vec<Cell>> = xs
            .iter()
            .enumerate()
            .map(|(i, v)| vec![Cell::Value(v * 1.5e-7), if i % 2 == 0 { Cell::missing(&reason) } else { Cell::Value(-v) }])
            .collect();
        let curve = ExperimentCurve::new("X", "p", xs, vec!["a.b".into(), "c".into()], rows).unwrap();
        prop_assert_eq!(ExperimentCurve::from_csv(&curve.to_csv()).unwrap(), curve);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn techniques_are_pure(x in (12usize..30, 3usize..6, any::<u64>()).prop_map(|(n, d, s)| iid_gaussian(n, d, s).unwrap()), seed in 0u64..1000) {
        let cases = [
            (TechniqueId::Pca, HyperParams::new()),
            (TechniqueId::RandomProj, HyperParams::new().with("seed", seed as f64)),
            (TechniqueId::Tsne, HyperParams::new().with("perplexity", 3.0).with("iterations", 40.0).with("seed", seed as f64)),
        ];
        for (id, hp) in cases {
            let t = Technique::new(id);
            prop_assert_eq!(project(&x, &t, &hp).unwrap(), project(&x, &t, &hp).unwrap());
        }
    }

    #[test]
    fn traces_are_monotone_and_stop_correctly(seed in 0u64..500, stop in prop::option::of(0.5f64..1.0)) {
        let (x, _) = gaussian_blobs(2, 15, 4, 1.0, 5.0, seed).unwrap();
        let spec = MetricSpec::new(MetricKind::Tnc).with_k_list(vec![3, 5]);
        let tr = optimize_technique(&x, None, &Technique::new(TechniqueId::RandomProj), &spec, 12, seed, stop).unwrap();
        let rb = tr.running_best();
        prop_assert!(rb.windows(2).all(|w| w[1] >= w[0]));
        if tr.terminated_early {
            prop_assert!(tr.best_score >= stop.unwrap());
        }
        let again = optimize_technique(&x, None, &Technique::new(TechniqueId::RandomProj), &spec, 12, seed, stop).unwrap();
        prop_assert_eq!(again.trials, tr.trials);
    }

    #[test]
    fn metric_eval_is_deterministic(x in points_strategy(), seed in any::<u64>()) {
        prop_assume!(x.rows() >= 6);
        let z = randomize_positions(&x, 0.3, seed).unwrap();
        for kind in [MetricKind::Tnc, MetricKind::Mrre] {
            let spec = MetricSpec::new(kind).with_k_list(vec![1, 2]);
            prop_assert_eq!(metric_eval(&x, &z, None, &spec).unwrap(), metric_eval(&x, &z, None, &spec).unwrap());
        }
    }
}
