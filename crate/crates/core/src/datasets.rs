//! Synthetic point clouds and CSV persistence.
//!
//! Generators are pure functions of their parameters and seed. See
//! [`crate::rng`] for the stream layout.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::{stream_rng, Stream};

/// A finite sample in `R^D`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    coords: Vec<f64>,
    dim: usize,
    labels: Option<Vec<usize>>,
    pub seed: u64,
}

impl PointCloud {
    pub fn new(points: Vec<Vec<f64>>, labels: Option<Vec<usize>>) -> Result<Self> {
        let dim = points.first().map(Vec::len).ok_or(Error::NoPoints)?;
        if dim == 0 {
            return Err(invalid("dimension", "points must have dimension >= 1"));
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (index, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    index,
                    expected: dim,
                    found: p.len(),
                });
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(coords, dim, labels)
    }

    /// Builds a cloud from row-major coordinates.
    pub fn from_flat(coords: Vec<f64>, dim: usize, labels: Option<Vec<usize>>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension", "points must have dimension >= 1"));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(invalid(
                "coords",
                "length is not a multiple of the dimension",
            ));
        }
        let n = coords.len() / dim;
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::LengthMismatch {
                    left: n,
                    right: l.len(),
                });
            }
        }
        Ok(Self {
            coords,
            dim,
            labels,
            seed: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn set_labels(&mut self, labels: Option<Vec<usize>>) -> Result<()> {
        if let Some(l) = &labels {
            if l.len() != self.len() {
                return Err(Error::LengthMismatch {
                    left: self.len(),
                    right: l.len(),
                });
            }
        }
        self.labels = labels;
        Ok(())
    }

    /// Returns a new cloud with `extra` points prepended in order.
    pub fn with_prepended(&self, extra: &[&[f64]]) -> Result<Self> {
        let mut coords = Vec::with_capacity(self.coords.len() + extra.len() * self.dim);
        for (index, p) in extra.iter().enumerate() {
            if p.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    index,
                    expected: self.dim,
                    found: p.len(),
                });
            }
            coords.extend_from_slice(p);
        }
        coords.extend_from_slice(&self.coords);
        let mut out = Self::from_flat(coords, self.dim, None)?;
        out.seed = self.seed;
        Ok(out)
    }

    /// Index of the nearest sample point; ties go to the lowest index.
    pub fn nearest(&self, x: &[f64]) -> Result<usize> {
        if self.is_empty() {
            return Err(Error::NoPoints);
        }
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                index: 0,
                expected: self.dim,
                found: x.len(),
            });
        }
        let mut best = (f64::INFINITY, 0);
        for (i, p) in self.points().enumerate() {
            let d = sq_dist(p, x);
            if d < best.0 {
                best = (d, i);
            }
        }
        Ok(best.1)
    }

    /// Largest pairwise Euclidean distance.
    pub fn diameter(&self) -> f64 {
        let n = self.len();
        let mut best = 0.0_f64;
        for i in 0..n {
            let p = self.point(i);
            for j in (i + 1)..n {
                best = best.max(sq_dist(p, self.point(j)));
            }
        }
        best.sqrt()
    }
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    (h * PI.ln() - libm::lgamma(h + 1.0)).exp()
}

/// Two concentric annuli inside a centered hypercube, mixed with uniform
/// background noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClutterSpec {
    pub d: usize,
    pub lambda: f64,
    pub n: usize,
    pub inner_ring: (f64, f64),
    pub outer_ring: (f64, f64),
    pub half_width: f64,
}

impl ClutterSpec {
    pub fn new(d: usize, lambda: f64, n: usize) -> Self {
        Self {
            d,
            lambda,
            n,
            inner_ring: (1.0, 1.25),
            outer_ring: (2.25, 2.5),
            half_width: 3.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 1 {
            return Err(invalid("d", "dimension must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(invalid(
                "lambda",
                format!("{} is outside [0, 1]", self.lambda),
            ));
        }
        let (a, b) = self.inner_ring;
        let (c, e) = self.outer_ring;
        if !(0.0 <= a && a < b && b < c && c < e) {
            return Err(invalid(
                "radii",
                "need 0 <= inner_in < inner_out < outer_in < outer_out",
            ));
        }
        if e > self.half_width {
            return Err(invalid("half_width", "rings must fit inside the cube"));
        }
        Ok(())
    }

    pub fn inner_volume(&self) -> f64 {
        shell_volume(self.d, self.inner_ring)
    }

    pub fn outer_volume(&self) -> f64 {
        shell_volume(self.d, self.outer_ring)
    }

    pub fn cube_volume(&self) -> f64 {
        (2.0 * self.half_width).powi(self.d as i32)
    }

    /// Mixture density at `x`.
    pub fn density(&self, x: &[f64]) -> f64 {
        let ring = self.lambda / (self.inner_volume() + self.outer_volume());
        let bg = (1.0 - self.lambda) / self.cube_volume();
        let mut f = 0.0;
        if self.ring_label(x) != 0 {
            f += ring;
        }
        if x.iter().all(|c| c.abs() <= self.half_width) {
            f += bg;
        }
        f
    }

    /// 1 inside the inner ring, 2 inside the outer ring, 0 elsewhere.
    pub fn ring_label(&self, x: &[f64]) -> usize {
        let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        if self.inner_ring.0 <= r && r <= self.inner_ring.1 {
            1
        } else if self.outer_ring.0 <= r && r <= self.outer_ring.1 {
            2
        } else {
            0
        }
    }
}

fn shell_volume(d: usize, (r_in, r_out): (f64, f64)) -> f64 {
    unit_ball_volume(d) * (r_out.powi(d as i32) - r_in.powi(d as i32))
}

fn uniform_direction<R: Rng>(rng: &mut R, d: usize, out: &mut [f64]) {
    loop {
        let mut norm = 0.0;
        for c in out.iter_mut().take(d) {
            let g: f64 = StandardNormal.sample(rng);
            *c = g;
            norm += g * g;
        }
        if norm > 1e-300 {
            let norm = norm.sqrt();
            out.iter_mut().for_each(|c| *c /= norm);
            return;
        }
    }
}

/// Samples the clutter mixture: with probability `lambda` uniform on the
/// union of the two rings, otherwise uniform on the cube.
pub fn gen_clutter(spec: &ClutterSpec, seed: u64) -> Result<PointCloud> {
    spec.validate()?;
    let d = spec.d;
    let mut rng = stream_rng(seed, Stream::Clutter, 0);
    let v_in = spec.inner_volume();
    let v_out = spec.outer_volume();
    let p_inner = v_in / (v_in + v_out);
    let mut coords = vec![0.0; spec.n * d];
    let mut labels = Vec::with_capacity(spec.n);
    for p in coords.chunks_exact_mut(d) {
        if rng.random::<f64>() < spec.lambda {
            let (r_in, r_out) = if rng.random::<f64>() < p_inner {
                spec.inner_ring
            } else {
                spec.outer_ring
            };
            // inverse CDF of the radial density r^{d-1} on [r_in, r_out]
            let lo = r_in.powi(d as i32);
            let hi = r_out.powi(d as i32);
            let u: f64 = rng.random();
            let r = (lo + u * (hi - lo)).powf(1.0 / d as f64).clamp(r_in, r_out);
            uniform_direction(&mut rng, d, p);
            p.iter_mut().for_each(|c| *c *= r);
        } else {
            for c in p.iter_mut() {
                *c = rng.random_range(-spec.half_width..=spec.half_width);
            }
        }
        labels.push(spec.ring_label(p));
    }
    let mut cloud = PointCloud::from_flat(coords, d, Some(labels))?;
    cloud.seed = seed;
    Ok(cloud)
}

/// Parameters of the Gaussian-clusters Swiss roll.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwissRollSpec {
    pub n: usize,
    pub cluster_means: [[f64; 2]; 4],
    pub sigma: f64,
    pub a: f64,
    pub omega: f64,
}

impl SwissRollSpec {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            cluster_means: [[2.0, 0.0], [4.0, 0.0], [6.0, 0.0], [8.0, 0.0]],
            sigma: 0.35,
            a: 3.0,
            omega: 15.0,
        }
    }
}

/// Maps a planar point onto the roll: `(x, y) -> (x cos(wx), a y, x sin(wx))`.
pub fn swiss_roll_map(x: f64, y: f64, a: f64, omega: f64) -> [f64; 3] {
    [x * (omega * x).cos(), a * y, x * (omega * x).sin()]
}

/// Four equal Gaussian clusters in the plane rolled into `R^3`.
pub fn gen_swiss_roll(spec: &SwissRollSpec, seed: u64) -> Result<PointCloud> {
    if !spec.n.is_multiple_of(4) {
        return Err(invalid("n", format!("{} is not divisible by 4", spec.n)));
    }
    if !(spec.sigma >= 0.0) {
        return Err(invalid("sigma", "must be >= 0"));
    }
    let normal = Normal::new(0.0, spec.sigma).map_err(|e| invalid("sigma", e.to_string()))?;
    let mut rng = stream_rng(seed, Stream::SwissRoll, 0);
    let per = spec.n / 4;
    let mut coords = Vec::with_capacity(spec.n * 3);
    let mut labels = Vec::with_capacity(spec.n);
    for (label, mean) in spec.cluster_means.iter().enumerate() {
        for _ in 0..per {
            let x = mean[0] + normal.sample(&mut rng);
            let y = mean[1] + normal.sample(&mut rng);
            coords.extend_from_slice(&swiss_roll_map(x, y, spec.a, spec.omega));
            labels.push(label);
        }
    }
    let mut cloud = PointCloud::from_flat(coords, 3, Some(labels))?;
    cloud.seed = seed;
    Ok(cloud)
}

/// i.i.d. uniform points in `[0,1]^d`.
pub fn gen_uniform_cube(n: usize, d: usize, seed: u64) -> Result<PointCloud> {
    uniform_cube_stream(n, d, seed, Stream::UniformCube, 0)
}

pub(crate) fn uniform_cube_stream(
    n: usize,
    d: usize,
    seed: u64,
    stream: Stream,
    index: u64,
) -> Result<PointCloud> {
    if n < 1 {
        return Err(invalid("n", "need at least one point"));
    }
    if d < 1 {
        return Err(invalid("d", "dimension must be >= 1"));
    }
    let mut rng = stream_rng(seed, stream, index);
    let coords = (0..n * d).map(|_| rng.random::<f64>()).collect();
    let mut cloud = PointCloud::from_flat(coords, d, None)?;
    cloud.seed = seed;
    Ok(cloud)
}

/// Homogeneous Poisson process on `[0,1]^d`.
///
/// The returned cloud may be empty; `PointCloud` accessors still work, but
/// downstream distance routines reject it.
pub fn gen_poisson_cube(intensity: f64, d: usize, seed: u64) -> Result<PointCloud> {
    poisson_cube_stream(intensity, d, seed, 0)
}

pub(crate) fn poisson_cube_stream(
    intensity: f64,
    d: usize,
    seed: u64,
    index: u64,
) -> Result<PointCloud> {
    if !(intensity > 0.0 && intensity.is_finite()) {
        return Err(invalid("intensity", "must be positive and finite"));
    }
    if d < 1 {
        return Err(invalid("d", "dimension must be >= 1"));
    }
    let mut rng = stream_rng(seed, Stream::PoissonCube, index);
    let count: f64 = Poisson::new(intensity)
        .map_err(|e| invalid("intensity", e.to_string()))?
        .sample(&mut rng);
    let count = count as usize;
    let coords = (0..count * d).map(|_| rng.random::<f64>()).collect();
    Ok(PointCloud {
        coords,
        dim: d,
        labels: None,
        seed,
    })
}

/// Writes `x1,...,xD[,label]` CSV with 17 significant digits per coordinate.
pub fn save_csv(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_csv_string(cloud))?;
    Ok(())
}

pub fn to_csv_string(cloud: &PointCloud) -> String {
    let mut out = String::new();
    let header: Vec<String> = (1..=cloud.dim()).map(|i| format!("x{i}")).collect();
    out.push_str(&header.join(","));
    if cloud.labels.is_some() {
        out.push_str(",label");
    }
    out.push('\n');
    for (i, p) in cloud.points().enumerate() {
        for (j, c) in p.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{c:.16e}");
        }
        if let Some(l) = &cloud.labels {
            let _ = write!(out, ",{}", l[i]);
        }
        out.push('\n');
    }
    out
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<PointCloud> {
    parse_csv(&std::fs::read_to_string(path)?)
}

/// Parses point CSV. Row numbers in errors are 1-based file lines.
pub fn parse_csv(text: &str) -> Result<PointCloud> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(Error::NoPoints)?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let has_label = columns.last() == Some(&"label");
    let dim = columns.len() - usize::from(has_label);
    if dim == 0 {
        return Err(Error::MalformedRow {
            row: 1,
            reason: "header has no coordinate columns".into(),
        });
    }
    let mut coords = Vec::new();
    let mut labels = Vec::new();
    for (line_no, line) in lines {
        let row = line_no + 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != columns.len() {
            return Err(Error::MalformedRow {
                row,
                reason: format!("expected {} fields, found {}", columns.len(), fields.len()),
            });
        }
        for f in &fields[..dim] {
            let v: f64 = f.parse().map_err(|_| Error::MalformedRow {
                row,
                reason: format!("`{f}` is not a real number"),
            })?;
            coords.push(v);
        }
        if has_label {
            let f = fields[dim];
            labels.push(f.parse::<usize>().map_err(|_| Error::MalformedRow {
                row,
                reason: format!("`{f}` is not a nonnegative integer label"),
            })?);
        }
    }
    if coords.is_empty() {
        return Err(Error::NoPoints);
    }
    PointCloud::from_flat(coords, dim, has_label.then_some(labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_volumes_in_the_plane() {
        let spec = ClutterSpec::new(2, 0.5, 1);
        assert!((spec.inner_volume() - 9.0 * PI / 16.0).abs() < 1e-12);
        assert!((spec.inner_volume() - 1.7671).abs() < 1e-4);
        assert!((spec.outer_volume() - 3.7306).abs() < 1e-4);
        assert_eq!(spec.cube_volume(), 36.0);
    }

    #[test]
    fn clutter_all_signal_stays_on_rings() {
        let cloud = gen_clutter(&ClutterSpec::new(2, 1.0, 10_000), 11).unwrap();
        let mut inner = 0usize;
        for (p, &l) in cloud.points().zip(cloud.labels().unwrap()) {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            assert!(
                (1.0..=1.25).contains(&r) || (2.25..=2.5).contains(&r),
                "r = {r}"
            );
            assert_ne!(l, 0);
            inner += usize::from(l == 1);
        }
        // fraction in the inner ring is 9/28 up to 3 binomial sigmas
        let p: f64 = 9.0 / 28.0;
        let sigma = (p * (1.0 - p) / 10_000.0).sqrt();
        assert!((inner as f64 / 10_000.0 - p).abs() < 3.0 * sigma);
    }

    #[test]
    fn clutter_all_noise_is_uniform_on_cube() {
        let cloud = gen_clutter(&ClutterSpec::new(2, 0.0, 10_000), 3).unwrap();
        for j in 0..2 {
            let mean = cloud.points().map(|p| p[j]).sum::<f64>() / 10_000.0;
            assert!(mean.abs() < 0.1);
        }
        assert!(cloud.coords().iter().all(|c| c.abs() <= 3.0));
    }

    #[test]
    fn clutter_rejects_bad_parameters() {
        assert!(gen_clutter(&ClutterSpec::new(2, 1.5, 10), 0).is_err());
        assert!(gen_clutter(&ClutterSpec::new(2, -0.1, 10), 0).is_err());
        assert!(gen_clutter(&ClutterSpec::new(0, 0.5, 10), 0).is_err());
    }

    #[test]
    fn clutter_works_in_three_dimensions() {
        let cloud = gen_clutter(&ClutterSpec::new(3, 1.0, 2000), 5).unwrap();
        assert_eq!(cloud.dim(), 3);
        for p in cloud.points() {
            let r = p.iter().map(|c| c * c).sum::<f64>().sqrt();
            assert!((1.0..=1.25).contains(&r) || (2.25..=2.5).contains(&r));
        }
    }

    #[test]
    fn swiss_roll_map_examples() {
        assert_eq!(swiss_roll_map(0.0, 1.0, 3.0, 15.0), [0.0, 3.0, 0.0]);
        let p = swiss_roll_map(1.7, -0.4, 3.0, 15.0);
        assert!((p[0] * p[0] + p[2] * p[2] - 1.7 * 1.7).abs() < 1e-12);
    }

    #[test]
    fn swiss_roll_splits_evenly() {
        let cloud = gen_swiss_roll(&SwissRollSpec::new(1000), 3).unwrap();
        assert_eq!(cloud.dim(), 3);
        let labels = cloud.labels().unwrap();
        for l in 0..4 {
            assert_eq!(labels.iter().filter(|&&x| x == l).count(), 250);
        }
        assert!(gen_swiss_roll(&SwissRollSpec::new(1001), 3).is_err());
    }

    #[test]
    fn uniform_cube_moments() {
        let c = gen_uniform_cube(100_000, 1, 1).unwrap();
        let mean = c.coords().iter().sum::<f64>() / 1e5;
        assert!((0.497..=0.503).contains(&mean));

        let c = gen_uniform_cube(100_000, 2, 2).unwrap();
        let (mut sx, mut sy, mut sxy) = (0.0, 0.0, 0.0);
        for p in c.points() {
            sx += p[0];
            sy += p[1];
            sxy += p[0] * p[1];
        }
        let cov = sxy / 1e5 - (sx / 1e5) * (sy / 1e5);
        assert!(cov.abs() < 0.005);

        let c = gen_uniform_cube(1, 3, 9).unwrap();
        assert_eq!(c.len(), 1);
        assert!(c.coords().iter().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn poisson_counts_concentrate() {
        let mut inside = 0;
        for seed in 0..1000 {
            let c = gen_poisson_cube(1000.0, 2, seed).unwrap();
            assert!(c.coords().iter().all(|x| (0.0..=1.0).contains(x)));
            let dev = (c.len() as f64 - 1000.0).abs();
            inside += usize::from(dev <= 4.0 * 1000f64.sqrt());
        }
        assert!(inside >= 990);

        let empty = (0..1000)
            .filter(|&s| gen_poisson_cube(0.001, 2, s).unwrap().is_empty())
            .count();
        assert!(empty >= 998);
    }

    #[test]
    fn generation_is_replayable() {
        let spec = ClutterSpec::new(2, 0.9, 200);
        assert_eq!(
            gen_clutter(&spec, 42).unwrap(),
            gen_clutter(&spec, 42).unwrap()
        );
        assert_ne!(
            gen_clutter(&spec, 42).unwrap(),
            gen_clutter(&spec, 43).unwrap()
        );
    }

    #[test]
    fn csv_errors_name_the_row() {
        let err = parse_csv("x1,x2\n1,2\n1,2,3\n").unwrap_err();
        assert!(matches!(err, Error::MalformedRow { row: 3, .. }), "{err}");
        let err = parse_csv("x1,x2\n1,abc\n").unwrap_err();
        assert!(matches!(err, Error::MalformedRow { row: 2, .. }));
        assert_eq!(parse_csv("").unwrap_err().to_string(), "no points");
        assert_eq!(parse_csv("x1,x2\n").unwrap_err().to_string(), "no points");
    }

    #[test]
    fn csv_round_trip_is_bit_identical() {
        let cloud = gen_clutter(&ClutterSpec::new(2, 0.7, 300), 8).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        save_csv(&cloud, &path).unwrap();
        let back = load_csv(&path).unwrap();
        assert_eq!(back.labels(), cloud.labels());
        for (a, b) in back.coords().iter().zip(cloud.coords()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
