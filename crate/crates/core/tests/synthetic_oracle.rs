#[path = "support/oracles.rs"]
mod oracles;

use swmparc::synthdata::{generate, GenConfig};

#[test]
fn nearest_centroid_solves_non_confusable_clusters() {
    let cfg = GenConfig {
        streamlines_per_cluster: 200,
        ..GenConfig::default()
    };
    let corpus = generate(&cfg).unwrap();
    // every cluster competes; the outlier class has no centroid, and only
    // non-confusable clusters are scored
    let train = drop_labels(&corpus.train, &[cfg.outlier_label()]);
    let mut skip: Vec<usize> = cfg.pairs().concat();
    skip.push(cfg.outlier_label());
    let acc = oracles::nearest_centroid_accuracy(&train, &corpus.test, 15, &skip);
    assert!(acc >= 0.95, "nearest-centroid accuracy {acc}");
}

fn drop_labels(set: &swmparc::StreamlineSet, skip: &[usize]) -> swmparc::StreamlineSet {
    let (s, l): (Vec<_>, Vec<_>) = set
        .streamlines
        .iter()
        .zip(set.labels.as_ref().unwrap())
        .filter(|(_, l)| !skip.contains(l))
        .map(|(s, &l)| (s.clone(), l))
        .unzip();
    swmparc::StreamlineSet::with_labels(s, l).unwrap()
}
