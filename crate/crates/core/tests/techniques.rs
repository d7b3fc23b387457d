use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use drtk::data::DataMatrix;
use drtk::drquality::{metric_eval, MetricKind, MetricSpec};
use drtk::drtech::{pca_project, tsne_project, TsneParams};
use drtk::regress::{kfold_r2, RegressionKind};
use drtk::synthlab::gaussian_blobs;

fn tnc_at_10(x: &DataMatrix, z: &DataMatrix) -> (f64, f64, f64) {
    let s = metric_eval(
        x,
        z,
        None,
        &MetricSpec::new(MetricKind::Tnc).with_k_list(vec![10]),
    )
    .unwrap();
    let (t, c) = s.components.unwrap();
    (s.value, t, c)
}

#[test]
fn pca_keeps_dominant_variance() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let sd = [10.0, 1.0, 0.1];
    let x = DataMatrix::from_fn(2000, 3, |_, j| {
        Normal::new(0.0, sd[j]).unwrap().sample(&mut rng)
    })
    .unwrap();
    let z = pca_project(&x, 1).unwrap();
    let m = z.values().iter().sum::<f64>() / 2000.0;
    let var = z.values().iter().map(|v| (v - m) * (v - m)).sum::<f64>() / 2000.0;
    // sample-covariance oracle for the first axis
    let mx = x.column_means()[0];
    let sample: f64 = (0..2000).map(|i| (x.get(i, 0) - mx).powi(2)).sum::<f64>() / 2000.0;
    assert!((var - 100.0).abs() < 10.0, "variance {var}");
    assert!(
        var >= sample - 1e-9 * sample,
        "top axis variance {var} below the x-axis {sample}"
    );
}

#[test]
fn tsne_separates_blobs() {
    let (x, _) = gaussian_blobs(3, 50, 10, 1.0, 10.0, 11).unwrap();
    let z = tsne_project(&x, 2, &TsneParams::default()).unwrap();
    let (f1, _, c30) = tnc_at_10(&x, &z);
    assert!(f1 >= 0.9, "F1 {f1}");

    let low = TsneParams {
        perplexity: 1.0,
        ..Default::default()
    };
    let z1 = tsne_project(&x, 2, &low).unwrap();
    let (_, _, c1) = tnc_at_10(&x, &z1);
    assert!(c1 < c30, "continuity at perplexity 1 {c1} vs 30 {c30}");
}

#[test]
fn tsne_repeatable() {
    let (x, _) = gaussian_blobs(2, 30, 5, 1.0, 5.0, 2).unwrap();
    let p = TsneParams {
        perplexity: 8.0,
        iterations: 200,
        seed: 9,
        ..Default::default()
    };
    assert_eq!(
        tsne_project(&x, 2, &p).unwrap(),
        tsne_project(&x, 2, &p).unwrap()
    );
}

#[test]
fn noise_targets_not_predictable() {
    for kind in RegressionKind::ALL {
        let mut total = 0.0;
        for seed in 0..10u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = Normal::new(0.0, 1.0).unwrap();
            let features: Vec<Vec<f64>> = (0..40)
                .map(|_| vec![n.sample(&mut rng), n.sample(&mut rng)])
                .collect();
            let targets: Vec<f64> = (0..40).map(|_| n.sample(&mut rng)).collect();
            let r2 = kfold_r2(kind, &features, &targets, 5, seed).unwrap();
            assert_eq!(r2, kfold_r2(kind, &features, &targets, 5, seed).unwrap());
            total += r2;
        }
        let mean = total / 10.0;
        assert!(mean <= 0.2, "{}: mean R² {mean}", kind.name());
    }
}
