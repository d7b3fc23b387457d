use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

mod support;
use support::oracle::random_label_ch4;

use drtk::cvm::{ch_adjusted, dsc_pair_score, CvmConfig};
use drtk::data::{validate_labeled, DataMatrix, LabelPartition};
use drtk::synthlab::{gaussian_blobs, iid_gaussian};

#[test]
fn random_labels_give_half() {
    for seed in 0..5 {
        let (x, p) = gaussian_blobs(3, 40, 5, 1.0, 6.0, seed).unwrap();
        let m = random_label_ch4(&x, &p, 200, seed);
        assert!((m - 0.5).abs() <= 0.05, "seed {seed}: mean CH4 {m}");
    }
}

#[test]
fn half_subsample_barely_moves_ch_a() {
    let cfg = CvmConfig::ch_adjusted();
    for seed in 0..5 {
        let (x, p) = gaussian_blobs(4, 125, 6, 1.0, 3.0, seed).unwrap();
        let full = ch_adjusted(&validate_labeled(x.clone(), p.clone()).unwrap(), &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
        let mut keep = Vec::new();
        for c in 0..p.class_count() {
            let mut m = p.members(c);
            m.shuffle(&mut rng);
            m.truncate(m.len() / 2);
            keep.extend(m);
        }
        keep.sort();
        let xs = x.select_rows(&keep).unwrap();
        let ps = LabelPartition::new(
            keep.iter().map(|&i| p.class_of(i)).collect(),
            p.class_count(),
        )
        .unwrap();
        let half = ch_adjusted(&validate_labeled(xs, ps).unwrap(), &cfg).unwrap();
        assert!((full - half).abs() < 0.1, "seed {seed}: {full} vs {half}");
    }
}

#[test]
fn scores_grow_with_separation() {
    let cfg = CvmConfig::ch_adjusted();
    let offsets = iid_gaussian(120, 3, 5).unwrap();
    let labels = LabelPartition::new((0..120).map(|i| i / 60).collect(), 2).unwrap();
    let (mut prev_ch, mut prev_dsc) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for step in 0..30 {
        let gap = step as f64 * 0.25;
        let x = DataMatrix::from_fn(120, 3, |i, j| {
            offsets.get(i, j) + if i >= 60 && j == 0 { gap } else { 0.0 }
        })
        .unwrap();
        let ch = ch_adjusted(&validate_labeled(x.clone(), labels.clone()).unwrap(), &cfg).unwrap();
        let dsc = dsc_pair_score(&x, &labels).unwrap();
        assert!(ch >= prev_ch - 1e-9, "gap {gap}: ch {ch} after {prev_ch}");
        assert!(
            dsc >= prev_dsc - 1e-9,
            "gap {gap}: dsc {dsc} after {prev_dsc}"
        );
        (prev_ch, prev_dsc) = (ch, dsc);
    }
    assert!(prev_ch > 0.99 && prev_dsc == 1.0);
}
