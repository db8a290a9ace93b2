//! Streamlines in RAS millimeter space.

mod io;

pub use io::{
    decode_slp, encode_slp, format_labels, parse_labels, read_labels, read_slp, write_labels, write_slp, SLP_MAGIC,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// `self + (other - self) * t`
    pub fn lerp(&self, other: &Point3, t: f64) -> Point3 {
        Point3::new(
            self.x + (other.x - self.x) * t,
            self.y + (other.y - self.y) * t,
            self.z + (other.z - self.z) * t,
        )
    }
}

impl From<[f64; 3]> for Point3 {
    fn from(p: [f64; 3]) -> Self {
        Point3::new(p[0], p[1], p[2])
    }
}

/// An ordered polyline with at least two finite points.
#[derive(Debug, Clone, PartialEq)]
pub struct Streamline {
    points: Vec<Point3>,
}

impl Streamline {
    pub fn new(points: Vec<Point3>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::TooFewPoints(points.len()));
        }
        if !points.iter().all(Point3::is_finite) {
            return Err(Error::NonFinite);
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> Point3 {
        self.points[0]
    }

    pub fn last(&self) -> Point3 {
        self.points[self.points.len() - 1]
    }

    pub fn arc_length(&self) -> f64 {
        self.points.windows(2).map(|w| w[0].distance(&w[1])).sum()
    }

    pub fn reversed(&self) -> Streamline {
        let mut points = self.points.clone();
        points.reverse();
        Streamline { points }
    }

    pub fn resample(&self, n: usize) -> Result<Streamline> {
        resample(self, n)
    }
}

pub fn reverse(s: &Streamline) -> Streamline {
    s.reversed()
}

/// Resample `s` to `n` points spaced equally in cumulative arc length, using
/// linear interpolation along the polyline. Both endpoints are kept exactly.
///
/// The walk always runs in a canonical direction (the lexicographically
/// smaller of the two point orders), so resampling a reversed streamline
/// gives exactly the reversed result.
pub fn resample(s: &Streamline, n: usize) -> Result<Streamline> {
    if n < 2 {
        return Err(Error::BadPointCount(n));
    }
    if backwards_is_canonical(s.points()) {
        let mut out = resample_forward(&s.reversed().points, n)?;
        out.points.reverse();
        Ok(out)
    } else {
        resample_forward(s.points(), n)
    }
}

fn backwards_is_canonical(pts: &[Point3]) -> bool {
    let key = |p: &Point3| [p.x, p.y, p.z];
    for (a, b) in pts.iter().zip(pts.iter().rev()) {
        for (x, y) in key(a).iter().zip(key(b).iter()) {
            match x.total_cmp(y) {
                std::cmp::Ordering::Equal => {}
                ord => return ord == std::cmp::Ordering::Greater,
            }
        }
    }
    false
}

fn resample_forward(pts: &[Point3], n: usize) -> Result<Streamline> {
    let mut cumulative = Vec::with_capacity(pts.len());
    let mut total = 0.0;
    cumulative.push(0.0);
    for w in pts.windows(2) {
        total += w[0].distance(&w[1]);
        cumulative.push(total);
    }
    if !(total > 0.0) {
        return Err(Error::ZeroArcLength);
    }

    let mut out = Vec::with_capacity(n);
    out.push(pts[0]);
    let mut seg = 0;
    for i in 1..n - 1 {
        let target = total * (i as f64) / ((n - 1) as f64);
        // first segment whose end reaches the target; zero-length segments are skipped
        while seg + 1 < pts.len() - 1 && cumulative[seg + 1] < target {
            seg += 1;
        }
        let (c0, c1) = (cumulative[seg], cumulative[seg + 1]);
        let t = if c1 > c0 {
            ((target - c0) / (c1 - c0)).clamp(0.0, 1.0)
        } else {
            0.0
        };
        out.push(pts[seg].lerp(&pts[seg + 1], t));
    }
    out.push(pts[pts.len() - 1]);
    Ok(Streamline { points: out })
}

/// A collection of streamlines, optionally labeled with class indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StreamlineSet {
    pub streamlines: Vec<Streamline>,
    pub labels: Option<Vec<usize>>,
}

impl StreamlineSet {
    pub fn new(streamlines: Vec<Streamline>) -> Self {
        Self {
            streamlines,
            labels: None,
        }
    }

    pub fn with_labels(streamlines: Vec<Streamline>, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != streamlines.len() {
            return Err(Error::LabelCountMismatch {
                expected: streamlines.len(),
                found: labels.len(),
            });
        }
        Ok(Self {
            streamlines,
            labels: Some(labels),
        })
    }

    pub fn len(&self) -> usize {
        self.streamlines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.streamlines.is_empty()
    }

    /// Checks every label is below `k`.
    pub fn validate_labels(&self, k: usize) -> Result<()> {
        if let Some(labels) = &self.labels {
            if let Some(&label) = labels.iter().find(|&&l| l >= k) {
                return Err(Error::LabelOutOfRange { label, k });
            }
        }
        Ok(())
    }

    pub fn labels_or_err(&self) -> Result<&[usize]> {
        self.labels
            .as_deref()
            .ok_or_else(|| Error::LabelFormat("streamline set has no labels".into()))
    }
}

/// 4×4 homogeneous affine matrix with last row `(0, 0, 0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineTransform {
    m: [[f64; 4]; 4],
}

impl AffineTransform {
    pub fn new(m: [[f64; 4]; 4]) -> Result<Self> {
        if m.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidAffine("non-finite entry".into()));
        }
        if m[3] != [0.0, 0.0, 0.0, 1.0] {
            return Err(Error::InvalidAffine("last row must be (0, 0, 0, 1)".into()));
        }
        let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        if det == 0.0 || !det.is_finite() {
            return Err(Error::InvalidAffine("linear part is singular".into()));
        }
        Ok(Self { m })
    }

    pub fn identity() -> Self {
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Self { m }
    }

    pub fn translation(dx: f64, dy: f64, dz: f64) -> Self {
        let mut t = Self::identity();
        t.m[0][3] = dx;
        t.m[1][3] = dy;
        t.m[2][3] = dz;
        t
    }

    pub fn matrix(&self) -> &[[f64; 4]; 4] {
        &self.m
    }

    /// Parse 16 whitespace-separated numbers in row-major order.
    pub fn parse(text: &str) -> Result<Self> {
        let values = text
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|_| Error::InvalidAffine(format!("not a number: {tok:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if values.len() != 16 {
            return Err(Error::InvalidAffine(format!(
                "expected 16 numbers, found {}",
                values.len()
            )));
        }
        let mut m = [[0.0; 4]; 4];
        for (i, v) in values.into_iter().enumerate() {
            m[i / 4][i % 4] = v;
        }
        Self::new(m)
    }

    pub fn apply(&self, p: &Point3) -> Point3 {
        let m = &self.m;
        Point3::new(
            m[0][0] * p.x + m[0][1] * p.y + m[0][2] * p.z + m[0][3],
            m[1][0] * p.x + m[1][1] * p.y + m[1][2] * p.z + m[1][3],
            m[2][0] * p.x + m[2][1] * p.y + m[2][2] * p.z + m[2][3],
        )
    }
}

pub fn apply_affine(set: &StreamlineSet, t: &AffineTransform) -> StreamlineSet {
    if *t == AffineTransform::identity() {
        return set.clone();
    }
    let streamlines = set
        .streamlines
        .iter()
        .map(|s| Streamline {
            points: s.points.iter().map(|p| t.apply(p)).collect(),
        })
        .collect();
    StreamlineSet {
        streamlines,
        labels: set.labels.clone(),
    }
}
