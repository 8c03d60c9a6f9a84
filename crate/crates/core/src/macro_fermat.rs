//! Grid oracle for the macroscopic Fermat distance.
//!
//! The continuum distance is the infimum over paths of the line integral of
//! `f^{-(alpha-1)/d}`. We discretize a box domain into a regular grid and run
//! Dijkstra where the edge `(u, v)` costs `|u - v| * f(mid)^{-(alpha-1)/d}`,
//! with `f` clamped below at `floor` so zero-density regions stay crossable
//! at a large but finite price.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::datasets::ClutterSpec;
use crate::error::{invalid, Error, Result};
use crate::graph::{dijkstra, Csr};

/// Axis-aligned box `[lo_k, hi_k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Domain {
    pub fn cube(d: usize, lo: f64, hi: f64) -> Self {
        Self {
            lo: vec![lo; d],
            hi: vec![hi; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(&c, (&lo, &hi))| c >= lo - 1e-12 && c <= hi + 1e-12)
    }
}

type Evaluator = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// A density on a box in `R^d`. The evaluator must be a pure function.
#[derive(Clone)]
pub struct DensityField {
    evaluator: Arc<Evaluator>,
    pub domain: Domain,
}

impl std::fmt::Debug for DensityField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DensityField")
            .field("domain", &self.domain)
            .finish_non_exhaustive()
    }
}

impl DensityField {
    pub fn new<F>(domain: Domain, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            evaluator: Arc::new(f),
            domain,
        }
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.evaluator)(x)
    }

    /// The same field multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let inner = self.evaluator.clone();
        Self {
            evaluator: Arc::new(move |x| c * inner(x)),
            domain: self.domain.clone(),
        }
    }
}

/// Named density presets.
#[derive(Debug, Clone, PartialEq)]
pub enum DensityPreset {
    /// Constant 1 on `[0,1]^d`.
    Uniform { d: usize },
    /// The two-ring clutter mixture on `[-3,3]^d`.
    Clutter { d: usize, lambda: f64 },
    /// `a1` inside any of the boxes, `a0` elsewhere on `[0,1]^d`.
    TwoLevel {
        a0: f64,
        a1: f64,
        regions: Vec<Domain>,
    },
}

impl DensityPreset {
    pub fn field(&self) -> Result<DensityField> {
        match self {
            DensityPreset::Uniform { d } => {
                Ok(DensityField::new(Domain::cube(*d, 0.0, 1.0), |_| 1.0))
            }
            DensityPreset::Clutter { d, lambda } => {
                let spec = ClutterSpec::new(*d, *lambda, 0);
                spec.validate()?;
                let domain = Domain::cube(*d, -spec.half_width, spec.half_width);
                Ok(DensityField::new(domain, move |x| spec.density(x)))
            }
            DensityPreset::TwoLevel { a0, a1, regions } => {
                let d = regions
                    .first()
                    .map(Domain::dim)
                    .ok_or_else(|| invalid("regions", "need at least one region"))?;
                if regions.iter().any(|r| r.dim() != d) {
                    return Err(invalid(
                        "regions",
                        "all regions must have the same dimension",
                    ));
                }
                if !(*a0 >= 0.0 && *a1 >= 0.0) {
                    return Err(invalid("a0/a1", "density levels must be nonnegative"));
                }
                let (a0, a1, regions) = (*a0, *a1, regions.clone());
                Ok(DensityField::new(Domain::cube(d, 0.0, 1.0), move |x| {
                    if regions.iter().any(|r| r.contains(x)) {
                        a1
                    } else {
                        a0
                    }
                }))
            }
        }
    }
}

impl std::str::FromStr for DensityPreset {
    type Err = Error;

    /// Accepts `uniform`, `uniform(d)`, `clutter(d,lambda)` and
    /// `two-level(a0,a1,lo:hi/lo:hi;lo:hi/lo:hi)` where each region lists one
    /// `lo:hi` interval per axis separated by `/`, and regions are separated
    /// by `;`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let unknown = || Error::UnknownPreset(s.to_string());
        let (name, args) = match s.find('(') {
            Some(i) => {
                let inner = s[i + 1..].strip_suffix(')').ok_or_else(unknown)?;
                (&s[..i], Some(inner))
            }
            None => (s, None),
        };
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| unknown());
        let int = |t: &str| t.trim().parse::<usize>().map_err(|_| unknown());
        match (name, args) {
            ("uniform", None) => Ok(DensityPreset::Uniform { d: 2 }),
            ("uniform", Some(a)) => Ok(DensityPreset::Uniform { d: int(a)? }),
            ("clutter", Some(a)) => {
                let parts: Vec<&str> = a.split(',').collect();
                if parts.len() != 2 {
                    return Err(unknown());
                }
                Ok(DensityPreset::Clutter {
                    d: int(parts[0])?,
                    lambda: num(parts[1])?,
                })
            }
            ("two-level", Some(a)) => {
                let parts: Vec<&str> = a.splitn(3, ',').collect();
                if parts.len() != 3 {
                    return Err(unknown());
                }
                let mut regions = Vec::new();
                for region in parts[2].split(';').filter(|r| !r.trim().is_empty()) {
                    let (mut lo, mut hi) = (Vec::new(), Vec::new());
                    for axis in region.split('/') {
                        let (l, h) = axis.split_once(':').ok_or_else(unknown)?;
                        lo.push(num(l)?);
                        hi.push(num(h)?);
                    }
                    regions.push(Domain { lo, hi });
                }
                Ok(DensityPreset::TwoLevel {
                    a0: num(parts[0])?,
                    a1: num(parts[1])?,
                    regions,
                })
            }
            _ => Err(unknown()),
        }
    }
}

/// Neighbourhood used by the grid graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stencil {
    /// Planar 16-neighbourhood: axis, diagonal and knight moves.
    Sixteen,
    /// All offsets in `{-1,0,1}^d` except zero.
    AxisDiagonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub resolution: usize,
    /// `None` picks `Sixteen` in the plane and `AxisDiagonal` otherwise.
    pub stencil: Option<Stencil>,
    pub floor: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            resolution: 101,
            stencil: None,
            floor: 1e-6,
        }
    }
}

impl GridConfig {
    fn validate(&self) -> Result<()> {
        if self.resolution < 2 {
            return Err(invalid("resolution", "need at least 2 points per axis"));
        }
        if !(self.floor > 0.0) {
            return Err(invalid("floor", "must be > 0"));
        }
        Ok(())
    }
}

fn offsets(stencil: Stencil, d: usize) -> Result<Vec<Vec<i64>>> {
    match stencil {
        Stencil::Sixteen => {
            if d != 2 {
                return Err(invalid(
                    "stencil",
                    "the 16-neighbour stencil is planar only",
                ));
            }
            let mut out = Vec::with_capacity(16);
            for dx in -2i64..=2 {
                for dy in -2i64..=2 {
                    let (a, b) = (dx.abs(), dy.abs());
                    let keep =
                        (a <= 1 && b <= 1 && a + b > 0) || (a == 1 && b == 2) || (a == 2 && b == 1);
                    if keep {
                        out.push(vec![dx, dy]);
                    }
                }
            }
            Ok(out)
        }
        Stencil::AxisDiagonal => {
            let total = 3usize.pow(d as u32);
            Ok((0..total)
                .map(|mut code| {
                    (0..d)
                        .map(|_| {
                            let o = (code % 3) as i64 - 1;
                            code /= 3;
                            o
                        })
                        .collect::<Vec<i64>>()
                })
                .filter(|o| o.iter().any(|&c| c != 0))
                .collect())
        }
    }
}

/// Precomputed grid graph for one field, configuration and `alpha`.
#[derive(Debug)]
pub struct GridOracle {
    domain: Domain,
    resolution: usize,
    step: Vec<f64>,
    graph: Csr,
}

impl GridOracle {
    pub fn new(field: &DensityField, cfg: &GridConfig, alpha: f64) -> Result<Self> {
        cfg.validate()?;
        if !(alpha >= 1.0 && alpha.is_finite()) {
            return Err(invalid("alpha", format!("{alpha} (need alpha >= 1)")));
        }
        let d = field.dim();
        if d == 0 {
            return Err(invalid("domain", "empty domain"));
        }
        let stencil = cfg.stencil.unwrap_or(if d == 2 {
            Stencil::Sixteen
        } else {
            Stencil::AxisDiagonal
        });
        let offs = offsets(stencil, d)?;
        let res = cfg.resolution;
        let nodes = res
            .checked_pow(d as u32)
            .filter(|&n| n <= u32::MAX as usize)
            .ok_or_else(|| invalid("resolution", "grid too large"))?;
        let step: Vec<f64> = (0..d)
            .map(|k| (field.domain.hi[k] - field.domain.lo[k]) / (res - 1) as f64)
            .collect();
        let power = -(alpha - 1.0) / d as f64;

        let mut lists = Vec::with_capacity(nodes);
        let mut idx = vec![0i64; d];
        let mut mid = vec![0.0; d];
        for node in 0..nodes {
            let mut rem = node;
            for slot in idx.iter_mut() {
                *slot = (rem % res) as i64;
                rem /= res;
            }
            let mut edges = Vec::with_capacity(offs.len());
            'offset: for o in &offs {
                let mut target = 0usize;
                let mut stride = 1usize;
                let mut len2 = 0.0;
                for k in 0..d {
                    let t = idx[k] + o[k];
                    if t < 0 || t >= res as i64 {
                        continue 'offset;
                    }
                    target += t as usize * stride;
                    stride *= res;
                    let dx = o[k] as f64 * step[k];
                    len2 += dx * dx;
                    mid[k] = field.domain.lo[k] + (idx[k] as f64 + o[k] as f64 / 2.0) * step[k];
                }
                let f = field.eval(&mid).max(cfg.floor);
                let w = if power == 0.0 {
                    len2.sqrt()
                } else {
                    len2.sqrt() * f.powf(power)
                };
                edges.push((target as u32, w));
            }
            lists.push(edges);
        }
        Ok(Self {
            domain: field.domain.clone(),
            resolution: res,
            step,
            graph: Csr::from_lists(lists),
        })
    }

    /// Nearest grid node to `x`.
    pub fn node_of(&self, x: &[f64]) -> Result<usize> {
        if !self.domain.contains(x) {
            return Err(Error::OutsideDomain { point: x.to_vec() });
        }
        let mut node = 0;
        let mut stride = 1;
        for (k, &c) in x.iter().enumerate() {
            let i = ((c - self.domain.lo[k]) / self.step[k])
                .round()
                .clamp(0.0, (self.resolution - 1) as f64);
            node += i as usize * stride;
            stride *= self.resolution;
        }
        Ok(node)
    }

    /// Coordinates of a grid node.
    pub fn node_point(&self, mut node: usize) -> Vec<f64> {
        (0..self.domain.dim())
            .map(|k| {
                let i = node % self.resolution;
                node /= self.resolution;
                self.domain.lo[k] + i as f64 * self.step[k]
            })
            .collect()
    }

    pub fn distance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let (s, t) = (self.node_of(x)?, self.node_of(y)?);
        Ok(dijkstra(&self.graph, s, Some(t))[t])
    }

    /// Distances from `x` to every grid node.
    pub fn distances_from(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(dijkstra(&self.graph, self.node_of(x)?, None))
    }
}

/// Grid approximation of the macroscopic distance between `x` and `y`; both
/// are snapped to their nearest grid nodes.
pub fn macro_fermat_grid(
    field: &DensityField,
    cfg: &GridConfig,
    alpha: f64,
    x: &[f64],
    y: &[f64],
) -> Result<f64> {
    let oracle = GridOracle::new(field, cfg, alpha)?;
    oracle.distance(x, y)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroFeasibility {
    pub feasible: bool,
    /// `min [D(x,y') - D(x,y)]` over `x, y` in one cluster and `y'` in another.
    pub margin: f64,
}

/// Checks the pairwise cluster condition on probe points sampled from each
/// cluster.
pub fn macro_feasibility_check(
    field: &DensityField,
    cfg: &GridConfig,
    alpha: f64,
    clusters: &[Vec<Vec<f64>>],
) -> Result<MacroFeasibility> {
    if clusters.len() < 2 {
        return Err(invalid("clusters", "need at least two clusters"));
    }
    for (group, c) in clusters.iter().enumerate() {
        if c.len() < 2 {
            return Err(Error::SmallGroup {
                group,
                size: c.len(),
            });
        }
    }
    let oracle = GridOracle::new(field, cfg, alpha)?;
    let nodes: Vec<Vec<usize>> = clusters
        .iter()
        .map(|c| c.iter().map(|p| oracle.node_of(p)).collect::<Result<_>>())
        .collect::<Result<_>>()?;

    let mut margin = f64::INFINITY;
    for (i, probes) in clusters.iter().enumerate() {
        for x in probes {
            let dist = oracle.distances_from(x)?;
            let within = nodes[i].iter().map(|&v| dist[v]).fold(0.0, f64::max);
            let cross = nodes
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .flat_map(|(_, ns)| ns.iter().map(|&v| dist[v]))
                .fold(f64::INFINITY, f64::min);
            margin = margin.min(cross - within);
        }
    }
    Ok(MacroFeasibility {
        feasible: margin > 0.0,
        margin,
    })
}
