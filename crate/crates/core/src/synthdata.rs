//! Deterministic synthetic streamline corpora.
//!
//! Each cluster is a posed analytic curve (circular arc, flat-bottomed
//! U-fiber or helix segment) sampled with Gaussian point noise and endpoint
//! jitter. Designated confusable pairs share every shape and rotation
//! parameter and differ only by a translation, so only absolute position
//! tells them apart. One extra outlier class is drawn from perturbed copies
//! of the cluster prototypes and overlaps them geometrically.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{write_labels, write_slp, Point3, Streamline, StreamlineSet};
use crate::nn::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveFamily {
    Arc,
    UFiber,
    Helix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterPrototype {
    pub id: usize,
    pub family: CurveFamily,
    /// Arc and helix radius, or U-fiber half-width (mm).
    pub radius: f64,
    /// Swept angle in radians; for U-fibers it sets the depth.
    pub span: f64,
    /// Helix rise per radian (mm); unused by the other families.
    pub torsion: f64,
    /// Row-major rotation applied before `translation`.
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
    pub point_noise: f64,
    pub endpoint_jitter: f64,
}

impl ClusterPrototype {
    fn local_point(&self, t: f64) -> [f64; 3] {
        let r = self.radius;
        match self.family {
            CurveFamily::Arc => {
                let a = self.span * (t - 0.5);
                [r * a.sin(), r * (1.0 - a.cos()), 0.0]
            }
            CurveFamily::UFiber => {
                let u = 2.0 * t - 1.0;
                let depth = r * self.span / PI;
                [r * u, -depth * (1.0 - u.powi(4)), 0.0]
            }
            CurveFamily::Helix => {
                let a = self.span * (t - 0.5);
                [r * a.cos() - r, r * a.sin(), self.torsion * a]
            }
        }
    }

    /// The noise-free curve at parameter `t` (0 and 1 are the nominal ends).
    pub fn curve_point(&self, t: f64) -> Point3 {
        let p = self.local_point(t);
        let m = &self.rotation;
        Point3::new(
            m[0][0] * p[0] + m[0][1] * p[1] + m[0][2] * p[2] + self.translation[0],
            m[1][0] * p[0] + m[1][1] * p[1] + m[1][2] * p[2] + self.translation[1],
            m[2][0] * p[0] + m[2][1] * p[1] + m[2][2] * p[2] + self.translation[2],
        )
    }

    pub fn centroid(&self) -> Point3 {
        let k = 64;
        let mut c = [0.0; 3];
        for i in 0..k {
            let p = self.curve_point(i as f64 / (k - 1) as f64);
            c[0] += p.x;
            c[1] += p.y;
            c[2] += p.z;
        }
        Point3::new(c[0] / k as f64, c[1] / k as f64, c[2] / k as f64)
    }

    pub fn length(&self) -> f64 {
        let k = 256;
        (0..k)
            .map(|i| {
                self.curve_point(i as f64 / k as f64)
                    .distance(&self.curve_point((i + 1) as f64 / k as f64))
            })
            .sum()
    }

    /// True when both share everything except the translation.
    pub fn same_shape(&self, other: &ClusterPrototype) -> bool {
        self.family == other.family
            && self.radius.to_bits() == other.radius.to_bits()
            && self.span.to_bits() == other.span.to_bits()
            && self.torsion.to_bits() == other.torsion.to_bits()
            && self.rotation == other.rotation
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub seed: u64,
    /// Number of regular clusters; the outlier class gets label `clusters`.
    pub clusters: usize,
    pub streamlines_per_cluster: usize,
    /// Share of the whole corpus that belongs to the outlier class.
    pub outlier_fraction: f64,
    /// Translation scale (mm) of the perturbations that create outliers.
    pub outlier_scale: f64,
    /// Pairs of clusters with identical shape that differ only by position.
    pub confusable_pairs: usize,
    /// Per-coordinate Gaussian noise σ (mm).
    pub point_noise: f64,
    /// σ (mm) of the random extension or trimming at each end.
    pub endpoint_jitter: f64,
    /// Lower bound on prototype centroid separation (mm), on top of 4σ.
    pub min_separation: f64,
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub test_fraction: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            clusters: 20,
            streamlines_per_cluster: 800,
            outlier_fraction: 0.2,
            outlier_scale: 10.0,
            confusable_pairs: 2,
            point_noise: 1.0,
            endpoint_jitter: 2.0,
            min_separation: 15.0,
            train_fraction: 0.8,
            val_fraction: 0.1,
            test_fraction: 0.1,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        let fractions = [self.train_fraction, self.val_fraction, self.test_fraction];
        if fractions.iter().any(|f| !(0.0..=1.0).contains(f))
            || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(Error::Config(format!(
                "split fractions must lie in [0, 1] and sum to 1, got {fractions:?}"
            )));
        }
        if self.clusters < 2 {
            return Err(Error::Config("need at least 2 clusters".into()));
        }
        if 2 * self.confusable_pairs > self.clusters {
            return Err(Error::Config(format!(
                "{} confusable pairs need {} clusters",
                self.confusable_pairs,
                2 * self.confusable_pairs
            )));
        }
        if !(0.0..1.0).contains(&self.outlier_fraction) {
            return Err(Error::Config("outlier fraction must lie in [0, 1)".into()));
        }
        let non_negative = [self.point_noise, self.endpoint_jitter, self.outlier_scale, self.min_separation];
        if non_negative.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Config("noise, jitter and scales must be finite and >= 0".into()));
        }
        Ok(())
    }

    pub fn outlier_label(&self) -> usize {
        self.clusters
    }

    pub fn num_classes(&self) -> usize {
        self.clusters + 1
    }

    pub fn outlier_count(&self) -> usize {
        let regular = (self.clusters * self.streamlines_per_cluster) as f64;
        (regular * self.outlier_fraction / (1.0 - self.outlier_fraction)).round() as usize
    }

    /// Streamlines per class, outlier class last.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![self.streamlines_per_cluster; self.clusters];
        counts.push(self.outlier_count());
        counts
    }

    pub fn pairs(&self) -> Vec<[usize; 2]> {
        (0..self.confusable_pairs).map(|i| [2 * i, 2 * i + 1]).collect()
    }

    /// SHA-256 of the canonical JSON form of the config.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    fn separation(&self) -> f64 {
        (4.0 * self.point_noise).max(self.min_separation)
    }

    fn pair_offset(&self) -> f64 {
        (8.0 * self.point_noise).max(self.min_separation)
    }
}

fn random_rotation(rng: &mut SeededRng) -> [[f64; 3]; 3] {
    let mut q = [rng.normal(), rng.normal(), rng.normal(), rng.normal()];
    let norm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in &mut q {
        *v /= norm;
    }
    quaternion_matrix(q)
}

fn quaternion_matrix([w, x, y, z]: [f64; 4]) -> [[f64; 3]; 3] {
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

fn random_direction(rng: &mut SeededRng) -> [f64; 3] {
    loop {
        let v = [rng.normal(), rng.normal(), rng.normal()];
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-9 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

fn matmul3(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn random_prototype(id: usize, cfg: &GenConfig, rng: &mut SeededRng) -> ClusterPrototype {
    let family = match rng.below(3) {
        0 => CurveFamily::Arc,
        1 => CurveFamily::UFiber,
        _ => CurveFamily::Helix,
    };
    ClusterPrototype {
        id,
        family,
        radius: rng.uniform_in(12.0, 30.0),
        span: rng.uniform_in(0.6 * PI, 1.4 * PI),
        torsion: rng.uniform_in(1.5, 4.0),
        rotation: random_rotation(rng),
        translation: [
            rng.uniform_in(-45.0, 45.0),
            rng.uniform_in(-45.0, 45.0),
            rng.uniform_in(-45.0, 45.0),
        ],
        point_noise: cfg.point_noise,
        endpoint_jitter: cfg.endpoint_jitter,
    }
}

const PLACEMENT_ATTEMPTS: usize = 10_000;

/// Cluster prototypes. Clusters `2i` and `2i + 1` for `i < confusable_pairs`
/// share their shape and differ by a translation of at least `8σ`; all other
/// centroid pairs are at least `max(4σ, min_separation)` apart.
pub fn gen_prototypes(cfg: &GenConfig) -> Result<Vec<ClusterPrototype>> {
    cfg.validate()?;
    gen_prototypes_with(cfg, &mut SeededRng::new(cfg.seed))
}

fn gen_prototypes_with(cfg: &GenConfig, rng: &mut SeededRng) -> Result<Vec<ClusterPrototype>> {
    let sep = cfg.separation();
    let mut out: Vec<ClusterPrototype> = Vec::with_capacity(cfg.clusters);
    let mut centroids: Vec<Point3> = Vec::with_capacity(cfg.clusters);
    for id in 0..cfg.clusters {
        let partner = (id < 2 * cfg.confusable_pairs && id % 2 == 1).then(|| id - 1);
        let mut placed = None;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let candidate = match partner {
                Some(p) => {
                    let mut c = out[p].clone();
                    c.id = id;
                    let dir = random_direction(rng);
                    let mag = cfg.pair_offset() * rng.uniform_in(1.0, 1.5);
                    for (t, d) in c.translation.iter_mut().zip(dir) {
                        *t += mag * d;
                    }
                    c
                }
                None => random_prototype(id, cfg, rng),
            };
            let c = candidate.centroid();
            let clear = centroids.iter().enumerate().all(|(j, other)| {
                // a partner sits exactly the pair offset away by construction
                Some(j) == partner || c.distance(other) >= sep
            });
            if clear {
                placed = Some((candidate, c));
                break;
            }
        }
        let (proto, c) = placed.ok_or_else(|| {
            Error::Config(format!(
                "could not place {} clusters {sep} mm apart; lower min_separation",
                cfg.clusters
            ))
        })?;
        out.push(proto);
        centroids.push(c);
    }
    Ok(out)
}

/// One sampled streamline with the curve parameters of its raw points.
#[derive(Debug, Clone)]
pub struct Sample {
    pub streamline: Streamline,
    /// Curve parameter of each emitted point, in emitted order.
    pub params: Vec<f64>,
    pub reversed: bool,
}

/// Dense noisy polyline (30 to 60 points) along `proto`; half of the
/// samples come out in reversed point order.
pub fn sample_streamline(proto: &ClusterPrototype, rng: &mut SeededRng) -> Streamline {
    sample_with_params(proto, rng).streamline
}

pub fn sample_with_params(proto: &ClusterPrototype, rng: &mut SeededRng) -> Sample {
    let count = 30 + rng.below(31);
    let length = proto.length().max(1e-6);
    let t0 = proto.endpoint_jitter * rng.normal() / length;
    let t1 = 1.0 + proto.endpoint_jitter * rng.normal() / length;
    // keep the curve from collapsing under extreme jitter
    let (t0, t1) = if t1 - t0 < 0.5 { (0.0, 1.0) } else { (t0, t1) };
    let mut params: Vec<f64> = (0..count)
        .map(|i| t0 + (t1 - t0) * i as f64 / (count - 1) as f64)
        .collect();
    let mut points: Vec<Point3> = params
        .iter()
        .map(|&t| {
            let p = proto.curve_point(t);
            let s = proto.point_noise;
            Point3::new(
                p.x + s * rng.normal(),
                p.y + s * rng.normal(),
                p.z + s * rng.normal(),
            )
        })
        .collect();
    let reversed = rng.uniform() < 0.5;
    if reversed {
        points.reverse();
        params.reverse();
    }
    Sample {
        streamline: Streamline::new(points).expect("finite curve with >= 30 points"),
        params,
        reversed,
    }
}

/// A prototype moved by `scale`–`2·scale` mm, tilted by up to 0.3 rad and
/// resized by up to ±25 %.
fn perturb(proto: &ClusterPrototype, scale: f64, rng: &mut SeededRng) -> ClusterPrototype {
    let mut p = proto.clone();
    let dir = random_direction(rng);
    let mag = scale * rng.uniform_in(1.0, 2.0);
    for (t, d) in p.translation.iter_mut().zip(dir) {
        *t += mag * d;
    }
    let axis = random_direction(rng);
    let half = 0.5 * rng.uniform_in(0.0, 0.3);
    let tilt = quaternion_matrix([half.cos(), axis[0] * half.sin(), axis[1] * half.sin(), axis[2] * half.sin()]);
    p.rotation = matmul3(&tilt, &p.rotation);
    p.radius *= rng.uniform_in(0.75, 1.25);
    p.span *= rng.uniform_in(0.75, 1.25);
    p
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitInfo {
    pub streamlines: String,
    pub labels: String,
    pub count: usize,
    pub per_class_counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: GenConfig,
    pub config_hash: String,
    pub num_classes: usize,
    pub outlier_label: usize,
    pub confusable_pairs: Vec<[usize; 2]>,
    pub train: SplitInfo,
    pub val: SplitInfo,
    pub test: SplitInfo,
    pub prototypes: Vec<ClusterPrototype>,
}

/// An in-memory corpus.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub prototypes: Vec<ClusterPrototype>,
    pub train: StreamlineSet,
    pub val: StreamlineSet,
    pub test: StreamlineSet,
}

pub fn generate(cfg: &GenConfig) -> Result<Corpus> {
    cfg.validate()?;
    let mut rng = SeededRng::new(cfg.seed);
    let prototypes = gen_prototypes_with(cfg, &mut rng)?;

    let mut by_class: Vec<Vec<Streamline>> = prototypes
        .iter()
        .map(|p| {
            (0..cfg.streamlines_per_cluster)
                .map(|_| sample_streamline(p, &mut rng))
                .collect()
        })
        .collect();
    let outliers = (0..cfg.outlier_count())
        .map(|_| {
            let base = &prototypes[rng.below(prototypes.len())];
            sample_streamline(&perturb(base, cfg.outlier_scale, &mut rng), &mut rng)
        })
        .collect();
    by_class.push(outliers);

    let mut splits: [Vec<(Streamline, usize)>; 3] = Default::default();
    for (label, mut members) in by_class.into_iter().enumerate() {
        rng.shuffle(&mut members);
        let n = members.len();
        let n_train = ((n as f64 * cfg.train_fraction).round() as usize).min(n);
        let n_val = ((n as f64 * cfg.val_fraction).round() as usize).min(n - n_train);
        for (i, s) in members.into_iter().enumerate() {
            let split = if i < n_train {
                0
            } else if i < n_train + n_val {
                1
            } else {
                2
            };
            splits[split].push((s, label));
        }
    }
    let [train, val, test] = splits.map(|mut items| {
        rng.shuffle(&mut items);
        let (streamlines, labels) = items.into_iter().unzip();
        StreamlineSet::with_labels(streamlines, labels).expect("aligned")
    });
    Ok(Corpus {
        prototypes,
        train,
        val,
        test,
    })
}

/// Paths of a generated dataset directory.
#[derive(Debug, Clone)]
pub struct DatasetFiles {
    pub dir: PathBuf,
}

impl DatasetFiles {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn slp(&self, split: &str) -> PathBuf {
        self.dir.join(format!("{split}.slp"))
    }

    pub fn labels(&self, split: &str) -> PathBuf {
        self.dir.join(format!("{split}_labels.csv"))
    }

    pub fn manifest(&self) -> PathBuf {
        self.dir.join("manifest.json")
    }
}

fn per_class(set: &StreamlineSet, k: usize) -> Vec<usize> {
    let mut counts = vec![0; k];
    for &l in set.labels.as_deref().unwrap_or_default() {
        counts[l] += 1;
    }
    counts
}

/// Generate a corpus and write `{train,val,test}.slp`, the matching
/// `*_labels.csv` files and `manifest.json` into `dir`.
pub fn gen_dataset(cfg: &GenConfig, dir: impl AsRef<Path>) -> Result<(Corpus, Manifest)> {
    let corpus = generate(cfg)?;
    let files = DatasetFiles::new(dir.as_ref());
    fs::create_dir_all(&files.dir).map_err(|e| Error::io(&files.dir, e))?;
    let k = cfg.num_classes();
    let mut infos = Vec::with_capacity(3);
    for (name, set) in [("train", &corpus.train), ("val", &corpus.val), ("test", &corpus.test)] {
        write_slp(set, files.slp(name))?;
        write_labels(set.labels.as_deref().unwrap_or_default(), files.labels(name))?;
        infos.push(SplitInfo {
            streamlines: format!("{name}.slp"),
            labels: format!("{name}_labels.csv"),
            count: set.len(),
            per_class_counts: per_class(set, k),
        });
    }
    let [train, val, test]: [SplitInfo; 3] = infos.try_into().expect("three splits");
    let manifest = Manifest {
        config: cfg.clone(),
        config_hash: cfg.hash(),
        num_classes: k,
        outlier_label: cfg.outlier_label(),
        confusable_pairs: cfg.pairs(),
        train,
        val,
        test,
        prototypes: corpus.prototypes.clone(),
    };
    let path = files.manifest();
    let json = serde_json::to_string_pretty(&manifest)?;
    fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok((corpus, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> GenConfig {
        GenConfig {
            clusters: 6,
            streamlines_per_cluster: 20,
            ..GenConfig::default()
        }
    }

    #[test]
    fn prototypes_are_separated_and_paired() {
        let cfg = GenConfig {
            clusters: 2,
            confusable_pairs: 0,
            ..GenConfig::default()
        };
        let protos = gen_prototypes(&cfg).unwrap();
        assert_eq!(protos.len(), 2);
        assert!(protos[0].centroid().distance(&protos[1].centroid()) >= 4.0 * cfg.point_noise);

        let cfg = GenConfig::default();
        let protos = gen_prototypes(&cfg).unwrap();
        for [a, b] in cfg.pairs() {
            assert!(protos[a].same_shape(&protos[b]));
            let shift: f64 = (0..3)
                .map(|i| (protos[a].translation[i] - protos[b].translation[i]).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(shift >= 8.0 * cfg.point_noise);
        }
        for i in 0..protos.len() {
            for j in i + 1..protos.len() {
                if cfg.pairs().contains(&[i, j]) {
                    continue;
                }
                assert!(protos[i].centroid().distance(&protos[j].centroid()) >= 4.0 * cfg.point_noise);
            }
        }
        assert_eq!(protos, gen_prototypes(&cfg).unwrap());
    }

    #[test]
    fn noiseless_samples_lie_on_the_curve() {
        let cfg = GenConfig {
            point_noise: 0.0,
            ..GenConfig::default()
        };
        let protos = gen_prototypes(&cfg).unwrap();
        let mut rng = SeededRng::new(1);
        for p in &protos {
            let s = sample_with_params(p, &mut rng);
            assert!(s.streamline.len() >= 30);
            for (pt, &t) in s.streamline.points().iter().zip(&s.params) {
                assert!(pt.distance(&p.curve_point(t)) < 1e-9);
            }
        }
    }

    #[test]
    fn noise_magnitude_matches_half_normal_mean() {
        let cfg = GenConfig {
            point_noise: 1.5,
            endpoint_jitter: 0.0,
            ..GenConfig::default()
        };
        let proto = &gen_prototypes(&cfg).unwrap()[0];
        let mut rng = SeededRng::new(2);
        let (mut sum, mut count) = (0.0, 0usize);
        for _ in 0..10_000 {
            let s = sample_with_params(proto, &mut rng);
            for (pt, &t) in s.streamline.points().iter().zip(&s.params) {
                let c = proto.curve_point(t);
                sum += (pt.x - c.x).abs() + (pt.y - c.y).abs() + (pt.z - c.z).abs();
                count += 3;
            }
        }
        let mean = sum / count as f64;
        let expected = 1.5 * (2.0 / PI).sqrt();
        assert!((mean / expected - 1.0).abs() < 0.05, "{mean} vs {expected}");
    }

    #[test]
    fn reversal_flag_flips_endpoints() {
        let cfg = GenConfig {
            point_noise: 0.0,
            endpoint_jitter: 0.0,
            ..GenConfig::default()
        };
        let proto = &gen_prototypes(&cfg).unwrap()[3];
        let mut rng = SeededRng::new(4);
        let (mut fwd, mut rev) = (0, 0);
        for _ in 0..200 {
            let s = sample_with_params(proto, &mut rng);
            let start = if s.reversed { proto.curve_point(1.0) } else { proto.curve_point(0.0) };
            assert!(s.streamline.first().distance(&start) < 1e-9);
            if s.reversed {
                rev += 1;
            } else {
                fwd += 1;
            }
        }
        assert!(fwd > 60 && rev > 60, "{fwd} / {rev}");
    }

    #[test]
    fn class_counts_and_label_range() {
        let cfg = small();
        let corpus = generate(&cfg).unwrap();
        let k = cfg.num_classes();
        let mut totals = vec![0; k];
        for set in [&corpus.train, &corpus.val, &corpus.test] {
            for (t, c) in totals.iter_mut().zip(per_class(set, k)) {
                *t += c;
            }
            assert!(set.labels.as_ref().unwrap().iter().all(|&l| l <= cfg.clusters));
        }
        assert_eq!(totals, cfg.class_counts());
        assert_eq!(cfg.outlier_count(), 30);
        // stratified: 80/10/10 of 20 per cluster
        assert_eq!(per_class(&corpus.train, k)[0], 16);
        assert_eq!(per_class(&corpus.val, k)[0], 2);
    }

    #[test]
    fn default_corpus_is_twenty_thousand() {
        let cfg = GenConfig::default();
        assert_eq!(cfg.class_counts().iter().sum::<usize>(), 20_000);
        assert_eq!(cfg.num_classes(), 21);
    }

    #[test]
    fn bad_fractions() {
        let cfg = GenConfig {
            train_fraction: 0.9,
            ..GenConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        assert!(generate(&cfg).is_err());
    }

    #[test]
    fn files_are_deterministic() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let (_, manifest) = gen_dataset(&small(), a.path()).unwrap();
        gen_dataset(&small(), b.path()).unwrap();
        for name in ["train.slp", "val.slp", "test.slp", "train_labels.csv", "manifest.json"] {
            assert_eq!(
                fs::read(a.path().join(name)).unwrap(),
                fs::read(b.path().join(name)).unwrap(),
                "{name}"
            );
        }
        assert_eq!(manifest.config_hash, small().hash());
        assert_eq!(manifest.outlier_label, 6);
    }
}
