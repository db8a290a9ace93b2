use proptest::prelude::*;

use swmparc::geometry::{apply_affine, decode_slp, encode_slp, format_labels, parse_labels};
use swmparc::losses::{scl_loss, SclConfig};
use swmparc::metrics::{accuracy, confusion};
use swmparc::model::{decode_checkpoint, encode_checkpoint};
use swmparc::nn::{l2_normalize_forward, maxpool_groups, softmax_cross_entropy, Matrix};
use swmparc::{AffineTransform, ArchDescriptor, ModelBundle, Point3, Streamline, StreamlineSet};

fn point() -> impl Strategy<Value = Point3> {
    (-100.0..100.0f64, -100.0..100.0f64, -100.0..100.0f64).prop_map(|(x, y, z)| Point3::new(x, y, z))
}

/// Polylines whose consecutive points are at least 1e-3 apart.
fn streamline() -> impl Strategy<Value = Streamline> {
    prop::collection::vec(point(), 2..40)
        .prop_filter("degenerate segment", |pts| pts.windows(2).all(|w| w[0].distance(&w[1]) > 1e-3))
        .prop_map(|pts| Streamline::new(pts).unwrap())
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-3.0..3.0f64, rows * cols).prop_map(move |d| Matrix::from_vec(rows, cols, d).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn resampling_keeps_endpoints_and_spacing(s in streamline(), n in 2usize..40) {
        let r = s.resample(n).unwrap();
        prop_assert_eq!(r.len(), n);
        prop_assert_eq!(r.first(), s.first());
        prop_assert_eq!(r.last(), s.last());
        let step = s.arc_length() / (n - 1) as f64;
        for w in r.points().windows(2) {
            prop_assert!(w[0].distance(&w[1]) <= step * (1.0 + 1e-9) + 1e-9);
        }
        // resampling is symmetric under reversal
        let rr = s.reversed().resample(n).unwrap().reversed();
        for (a, b) in r.points().iter().zip(rr.points()) {
            prop_assert!(a.distance(b) < 1e-9 * (1.0 + s.arc_length()));
        }
    }

    #[test]
    fn translation_shifts_every_point(s in streamline(), d in point()) {
        let set = StreamlineSet::new(vec![s.clone()]);
        let moved = apply_affine(&set, &AffineTransform::translation(d.x, d.y, d.z));
        for (a, b) in s.points().iter().zip(moved.streamlines[0].points()) {
            prop_assert!((b.x - a.x - d.x).abs() < 1e-9);
            prop_assert!((b.y - a.y - d.y).abs() < 1e-9);
            prop_assert!((b.z - a.z - d.z).abs() < 1e-9);
        }
        prop_assert_eq!(apply_affine(&set, &AffineTransform::identity()), set);
    }

    #[test]
    fn slp_round_trip_is_bitwise(lines in prop::collection::vec(streamline(), 0..8)) {
        // the format stores f32, so start from f32-exact coordinates
        let lines = lines
            .iter()
            .map(|s| {
                let pts = s.points().iter().map(|p| Point3::new(p.x as f32 as f64, p.y as f32 as f64, p.z as f32 as f64));
                Streamline::new(pts.collect()).unwrap()
            })
            .collect();
        let set = StreamlineSet::new(lines);
        let bytes = encode_slp(&set).unwrap();
        let back = decode_slp(&bytes).unwrap();
        prop_assert_eq!(encode_slp(&back).unwrap(), bytes);
        prop_assert_eq!(back, set);
    }

    #[test]
    fn label_csv_round_trip(labels in prop::collection::vec(0usize..500, 0..100)) {
        let text = format_labels(&labels);
        prop_assert_eq!(parse_labels(&text, Some(labels.len())).unwrap(), labels);
    }

    #[test]
    fn confusion_totals(pairs in prop::collection::vec((0usize..6, 0usize..6), 1..200)) {
        let (t, p): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let cm = confusion(&t, &p, 6).unwrap();
        prop_assert_eq!(cm.total(), t.len() as u64);
        let hits = t.iter().zip(&p).filter(|(a, b)| a == b).count();
        prop_assert_eq!(accuracy(&cm).unwrap(), hits as f64 / t.len() as f64);
        for c in 0..6 {
            prop_assert_eq!(cm.row_sum(c), t.iter().filter(|&&x| x == c).count() as u64);
            prop_assert_eq!(cm.col_sum(c), p.iter().filter(|&&x| x == c).count() as u64);
        }
    }

    #[test]
    fn normalized_rows_are_unit(m in matrix(5, 4)) {
        prop_assume!(m.row_iter().all(|r| r.iter().any(|v| v.abs() > 1e-6)));
        let (z, _) = l2_normalize_forward(&m).unwrap();
        for r in z.row_iter() {
            prop_assert!((r.iter().map(|v| v * v).sum::<f64>().sqrt() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cross_entropy_gradient_rows_sum_to_zero(m in matrix(6, 5), labels in prop::collection::vec(0usize..5, 6)) {
        let (loss, g) = softmax_cross_entropy(&m, &labels).unwrap();
        prop_assert!(loss >= 0.0);
        for r in g.row_iter() {
            prop_assert!(r.iter().sum::<f64>().abs() < 1e-12);
        }
    }

    #[test]
    fn contrastive_loss_is_non_negative_and_order_free(
        m in matrix(10, 4),
        labels in prop::collection::vec(0usize..3, 10),
        shift in 1usize..10,
    ) {
        prop_assume!(m.row_iter().all(|r| r.iter().any(|v| v.abs() > 1e-3)));
        let (z, _) = l2_normalize_forward(&m).unwrap();
        let cfg = SclConfig::default();
        let (loss, _) = scl_loss(&z, &labels, &cfg).unwrap();
        prop_assert!(loss >= 0.0);
        let perm: Vec<usize> = (0..10).map(|i| (i + shift) % 10).collect();
        let zp = z.gather_rows(&perm);
        let lp: Vec<usize> = perm.iter().map(|&i| labels[i]).collect();
        let (loss_p, _) = scl_loss(&zp, &lp, &cfg).unwrap();
        prop_assert!((loss - loss_p).abs() < 1e-9 * (1.0 + loss));
    }

    #[test]
    fn group_max_pool_ignores_row_order(m in matrix(12, 3), rot in 0usize..4) {
        let (a, _) = maxpool_groups(&m, 4).unwrap();
        let perm: Vec<usize> = (0..12).map(|i| (i / 4) * 4 + (i % 4 + rot) % 4).collect();
        let (b, _) = maxpool_groups(&m.gather_rows(&perm), 4).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn checkpoint_round_trip(seed in any::<u64>(), k in 2usize..6) {
        let arch = ArchDescriptor {
            n: 3,
            encoder_dims: vec![4, 5],
            classifier_hidden: vec![3],
            projector_dims: vec![5, 2],
            k,
            with_tnets: false,
        };
        let model = ModelBundle::init(arch, seed).unwrap();
        let bytes = encode_checkpoint(&model).unwrap();
        let back = decode_checkpoint(&bytes).unwrap();
        prop_assert_eq!(encode_checkpoint(&back).unwrap(), bytes);
        prop_assert_eq!(back, model);
    }
}
