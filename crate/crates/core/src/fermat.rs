//! Sample Fermat distance.
//!
//! For a sample `Q` and power `alpha >= 1`, the distance between two sample
//! points is the minimum over paths through `Q` of the sum of hop lengths
//! raised to `alpha`. Off-sample queries snap both ends to their nearest
//! sample points; the snap segments carry no cost.
//!
//! Complete-graph matrices are exact. Before running Dijkstra we drop every
//! edge `p -> q` for which some already-kept neighbour `r` of `p` satisfies
//! `w(p,r) + w(r,q) < w(p,q)`. Such an edge is never needed: the detour
//! through `r` is cheaper and both of its hops are strictly shorter, so an
//! induction on edge length shows every complete-graph distance is still
//! attained. For `alpha = 1` the distance is the Euclidean one and is
//! returned directly.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datasets::{sq_dist, PointCloud};
use crate::error::{invalid, Error, Result};
use crate::graph::{dense_dijkstra, dijkstra, Csr};

/// Which edges the path search may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GraphKind {
    Complete,
    /// Symmetrized k-nearest-neighbour graph. An approximation: entries are
    /// never below the complete-graph ones.
    Knn {
        k: usize,
    },
}

impl std::fmt::Display for GraphKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GraphKind::Complete => write!(f, "complete"),
            GraphKind::Knn { k } => write!(f, "knn:{k}"),
        }
    }
}

impl std::str::FromStr for GraphKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "complete" {
            return Ok(GraphKind::Complete);
        }
        let k = s
            .strip_prefix("knn:")
            .and_then(|k| k.parse::<usize>().ok())
            .ok_or_else(|| invalid("graph", format!("`{s}` (expected `complete` or `knn:<k>`)")))?;
        Ok(GraphKind::Knn { k })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FermatGraphConfig {
    pub alpha: f64,
    pub graph: GraphKind,
    /// Divide coordinates by the cloud diameter before exponentiation and
    /// multiply results back by `diameter^alpha`.
    pub rescale: bool,
}

impl FermatGraphConfig {
    pub fn complete(alpha: f64) -> Self {
        Self {
            alpha,
            graph: GraphKind::Complete,
            rescale: true,
        }
    }

    pub fn knn(alpha: f64, k: usize) -> Self {
        Self {
            alpha,
            graph: GraphKind::Knn { k },
            rescale: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 1.0 && self.alpha.is_finite()) {
            return Err(invalid(
                "alpha",
                format!("{} (need alpha >= 1)", self.alpha),
            ));
        }
        if let GraphKind::Knn { k } = self.graph {
            if k < 1 {
                return Err(invalid("k", "need k >= 1"));
            }
        }
        Ok(())
    }
}

/// Metadata persisted next to a matrix dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixMeta {
    pub n: usize,
    pub alpha: f64,
    pub d: Option<usize>,
    pub scale_factor: f64,
    pub normalized: bool,
    pub root_variant: bool,
    pub graph_kind: GraphKind,
    pub seed: u64,
}

/// Symmetric matrix of pairwise sample Fermat distances for one `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct FermatMatrix {
    values: Vec<f64>,
    meta: MatrixMeta,
}

impl FermatMatrix {
    /// Wraps precomputed values (row-major `n x n`), checking symmetry,
    /// zero diagonal and nonnegativity.
    pub fn from_values(values: Vec<f64>, n: usize, alpha: f64) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::LengthMismatch {
                left: n * n,
                right: values.len(),
            });
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(Error::InvalidMatrix(format!(
                    "diagonal entry {i} is nonzero"
                )));
            }
            for j in 0..i {
                let (a, b) = (values[i * n + j], values[j * n + i]);
                if a != b {
                    return Err(Error::InvalidMatrix(format!(
                        "entries ({i},{j}) and ({j},{i}) differ"
                    )));
                }
                if !(a >= 0.0) {
                    return Err(Error::InvalidMatrix(format!(
                        "entry ({i},{j}) is negative or NaN"
                    )));
                }
            }
        }
        Ok(Self {
            values,
            meta: MatrixMeta {
                n,
                alpha,
                d: None,
                scale_factor: 1.0,
                normalized: false,
                root_variant: false,
                graph_kind: GraphKind::Complete,
                seed: 0,
            },
        })
    }

    pub fn n(&self) -> usize {
        self.meta.n
    }

    pub fn alpha(&self) -> f64 {
        self.meta.alpha
    }

    pub fn meta(&self) -> &MatrixMeta {
        &self.meta
    }

    pub fn is_normalized(&self) -> bool {
        self.meta.normalized
    }

    pub fn is_root_variant(&self) -> bool {
        self.meta.root_variant
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.meta.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.meta.n;
        &self.values[i * n..(i + 1) * n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Returns a copy with every entry multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// Distance between arbitrary points, snapping each to its nearest
    /// sample in `cloud` (the cloud this matrix was computed from).
    pub fn query(&self, cloud: &PointCloud, x: &[f64], y: &[f64]) -> Result<f64> {
        if cloud.len() != self.n() {
            return Err(Error::LengthMismatch {
                left: self.n(),
                right: cloud.len(),
            });
        }
        Ok(self.get(cloud.nearest(x)?, cloud.nearest(y)?))
    }

    /// Multiplies every entry by `n^{(alpha-1)/d}`.
    pub fn normalize(&self, d: usize) -> Result<Self> {
        if self.meta.normalized {
            return Err(Error::AlreadyNormalized);
        }
        if d < 1 {
            return Err(invalid("d", "intrinsic dimension must be >= 1"));
        }
        let factor = normalization_factor(self.n(), self.alpha(), d);
        let mut out = self.scaled(factor);
        out.meta.normalized = true;
        out.meta.d = Some(d);
        Ok(out)
    }

    /// Entrywise `D^{1/alpha}`. Applying it to a matrix that is already the
    /// root variant returns it unchanged.
    pub fn root_variant(&self) -> Self {
        let mut out = self.clone();
        if !self.meta.root_variant {
            let inv = 1.0 / self.alpha();
            out.values.iter_mut().for_each(|v| *v = v.powf(inv));
            out.meta.root_variant = true;
        }
        out
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.meta.seed = seed;
        self
    }

    /// Writes the matrix as CSV at `path` and metadata at `<path>.json`.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let n = self.n();
        let mut out = String::with_capacity(n * n * 24);
        for i in 0..n {
            for (j, v) in self.row(i).iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{v:.16e}");
            }
            out.push('\n');
        }
        std::fs::write(path, out)?;
        std::fs::write(
            sidecar_path(path),
            serde_json::to_string_pretty(&self.meta)?,
        )?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let meta: MatrixMeta = serde_json::from_str(&std::fs::read_to_string(sidecar_path(path))?)?;
        let text = std::fs::read_to_string(path)?;
        let mut values = Vec::with_capacity(meta.n * meta.n);
        for (row, line) in text.lines().filter(|l| !l.trim().is_empty()).enumerate() {
            let before = values.len();
            for f in line.split(',') {
                values.push(f.trim().parse::<f64>().map_err(|_| Error::MalformedRow {
                    row: row + 1,
                    reason: format!("`{f}` is not a real number"),
                })?);
            }
            if values.len() - before != meta.n {
                return Err(Error::MalformedRow {
                    row: row + 1,
                    reason: format!(
                        "expected {} fields, found {}",
                        meta.n,
                        values.len() - before
                    ),
                });
            }
        }
        let mut m = Self::from_values(values, meta.n, meta.alpha)?;
        m.meta = meta;
        Ok(m)
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// `n^{(alpha-1)/d}`.
pub fn normalization_factor(n: usize, alpha: f64, d: usize) -> f64 {
    (n as f64).powf((alpha - 1.0) / d as f64)
}

fn scale_of(cloud: &PointCloud, rescale: bool) -> f64 {
    if !rescale {
        return 1.0;
    }
    let s = cloud.diameter();
    if s > 0.0 && s.is_finite() {
        s
    } else {
        1.0
    }
}

/// `(|p-q| / s)^alpha` from the squared distance.
#[inline]
fn hop_cost(sq: f64, inv_s2: f64, half_alpha: f64) -> f64 {
    let r = sq * inv_s2;
    if half_alpha == 1.0 {
        r
    } else {
        r.powf(half_alpha)
    }
}

/// All-pairs sample Fermat distances.
pub fn fermat_matrix(cloud: &PointCloud, config: &FermatGraphConfig) -> Result<FermatMatrix> {
    config.validate()?;
    let n = cloud.len();
    if n < 2 {
        return Err(Error::TooFewPoints { n, min: 2 });
    }
    let s = scale_of(cloud, config.rescale);
    let alpha = config.alpha;

    let mut values = match config.graph {
        GraphKind::Complete if alpha == 1.0 => euclidean_values(cloud),
        GraphKind::Complete => {
            let graph = pruned_complete_graph(cloud, s, alpha);
            all_sources(&graph, s.powf(alpha))
        }
        GraphKind::Knn { k } => {
            let graph = knn_graph(cloud, k, s, alpha);
            check_connected(&graph)?;
            all_sources(&graph, s.powf(alpha))
        }
    };
    symmetrize(&mut values, n);

    let mut m = FermatMatrix::from_values(values, n, alpha)?;
    m.meta.scale_factor = s;
    m.meta.graph_kind = config.graph;
    m.meta.seed = cloud.seed;
    Ok(m)
}

/// Fermat distance between sample indices `i` and `j` from a single
/// shortest-path search.
pub fn pair_distance(
    cloud: &PointCloud,
    config: &FermatGraphConfig,
    i: usize,
    j: usize,
) -> Result<f64> {
    config.validate()?;
    let n = cloud.len();
    if n == 0 {
        return Err(Error::NoPoints);
    }
    if i >= n || j >= n {
        return Err(invalid(
            "index",
            format!("({i}, {j}) out of range for {n} points"),
        ));
    }
    if i == j {
        return Ok(0.0);
    }
    let s = scale_of(cloud, config.rescale);
    let alpha = config.alpha;
    let d = match config.graph {
        GraphKind::Complete if alpha == 1.0 => {
            crate::datasets::dist(cloud.point(i), cloud.point(j))
        }
        GraphKind::Complete => {
            let inv_s2 = 1.0 / (s * s);
            let half = alpha / 2.0;
            let dist = dense_dijkstra(n, i, Some(j), |u, v| {
                hop_cost(sq_dist(cloud.point(u), cloud.point(v)), inv_s2, half)
            });
            dist[j] * s.powf(alpha)
        }
        GraphKind::Knn { k } => {
            let graph = knn_graph(cloud, k, s, alpha);
            let d = dijkstra(&graph, i, Some(j))[j];
            if d.is_infinite() {
                check_connected(&graph)?;
            }
            d * s.powf(alpha)
        }
    };
    Ok(d)
}

/// Sample Fermat distance between arbitrary points `x` and `y`.
pub fn fermat_query(
    cloud: &PointCloud,
    config: &FermatGraphConfig,
    x: &[f64],
    y: &[f64],
) -> Result<f64> {
    let i = cloud.nearest(x)?;
    let j = cloud.nearest(y)?;
    pair_distance(cloud, config, i, j)
}

fn euclidean_values(cloud: &PointCloud) -> Vec<f64> {
    let n = cloud.len();
    let mut values = vec![0.0; n * n];
    values.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let p = cloud.point(i);
        for (j, v) in row.iter_mut().enumerate() {
            *v = sq_dist(p, cloud.point(j)).sqrt();
        }
    });
    values
}

fn pruned_complete_graph(cloud: &PointCloud, s: f64, alpha: f64) -> Csr {
    let n = cloud.len();
    let inv_s2 = 1.0 / (s * s);
    let half = alpha / 2.0;
    let mut weights = vec![0.0; n * n];
    weights.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let p = cloud.point(i);
        for (j, w) in row.iter_mut().enumerate() {
            *w = hop_cost(sq_dist(p, cloud.point(j)), inv_s2, half);
        }
    });
    let weights = &weights;
    let lists: Vec<Vec<(u32, f64)>> = (0..n)
        .into_par_iter()
        .map(|p| {
            let row = &weights[p * n..(p + 1) * n];
            let mut order: Vec<u32> = (0..n as u32).filter(|&q| q as usize != p).collect();
            order.sort_by(|&a, &b| row[a as usize].total_cmp(&row[b as usize]).then(a.cmp(&b)));
            let mut kept: Vec<(u32, f64)> = Vec::new();
            for q in order {
                let wq = row[q as usize];
                let qrow = q as usize * n;
                let dominated = kept
                    .iter()
                    .any(|&(r, wr)| wr + weights[qrow + r as usize] < wq);
                if !dominated {
                    kept.push((q, wq));
                }
            }
            kept
        })
        .collect();
    Csr::from_lists(lists)
}

fn knn_graph(cloud: &PointCloud, k: usize, s: f64, alpha: f64) -> Csr {
    let n = cloud.len();
    let inv_s2 = 1.0 / (s * s);
    let half = alpha / 2.0;
    let neighbours: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let p = cloud.point(i);
            let mut cand: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (sq_dist(p, cloud.point(j)), j))
                .collect();
            let k = k.min(cand.len());
            if k < cand.len() {
                cand.select_nth_unstable_by(k, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                cand.truncate(k);
            }
            cand.into_iter().map(|(_, j)| j).collect()
        })
        .collect();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, ns) in neighbours.iter().enumerate() {
        for &j in ns {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    let lists = adj
        .into_iter()
        .enumerate()
        .map(|(i, mut ns)| {
            ns.sort_unstable();
            ns.dedup();
            let p = cloud.point(i);
            ns.into_iter()
                .map(|j| (j as u32, hop_cost(sq_dist(p, cloud.point(j)), inv_s2, half)))
                .collect()
        })
        .collect();
    Csr::from_lists(lists)
}

fn check_connected(graph: &Csr) -> Result<()> {
    let comps = graph.components();
    if comps.len() > 1 {
        let (root, size) = comps
            .iter()
            .copied()
            .min_by_key(|&(root, size)| (size, root))
            .unwrap_or((0, 0));
        return Err(Error::DisconnectedGraph {
            root,
            size,
            n: graph.len(),
        });
    }
    Ok(())
}

fn all_sources(graph: &Csr, unscale: f64) -> Vec<f64> {
    let n = graph.len();
    let mut values = vec![0.0; n * n];
    values.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let dist = dijkstra(graph, i, None);
        for (v, d) in row.iter_mut().zip(dist) {
            *v = d * unscale;
        }
    });
    values
}

fn symmetrize(values: &mut [f64], n: usize) {
    for i in 0..n {
        values[i * n + i] = 0.0;
        for j in 0..i {
            let m = values[i * n + j].min(values[j * n + i]);
            values[i * n + j] = m;
            values[j * n + i] = m;
        }
    }
}
