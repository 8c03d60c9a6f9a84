use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fermat::FermatMatrix;
use crate::rng::{stream_rng, Stream};

/// Result of an alternating K-medoids run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub medoid_indices: Vec<usize>,
    pub assignment: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
    /// `sum_x D(x, medoid(x))` after the final assignment.
    pub objective: f64,
    /// Objective after the initial assignment and after every iteration.
    pub trace: Vec<f64>,
}

/// How the initial medoids are chosen. Both start from the point with the
/// smallest total distance and break exact ties with a draw from the seed's
/// tie stream.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Init {
    /// Each next medoid gives the largest drop of the objective (the BUILD
    /// phase of PAM).
    #[default]
    Build,
    /// Each next medoid is the point farthest from the chosen set.
    FarthestPoint,
}

impl std::str::FromStr for Init {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "build" => Ok(Init::Build),
            "farthest" | "farthest-point" => Ok(Init::FarthestPoint),
            _ => Err(invalid(
                "init",
                format!("unknown initialization `{s}` (valid: build, farthest)"),
            )),
        }
    }
}

/// Index with the best score among `allowed`, ties drawn from `rng`.
fn pick(
    scores: &[f64],
    allowed: impl Fn(usize) -> bool,
    larger: bool,
    rng: &mut impl Rng,
) -> usize {
    let mut best: Option<f64> = None;
    let mut ties: Vec<usize> = Vec::new();
    for (i, &s) in scores.iter().enumerate() {
        if !allowed(i) {
            continue;
        }
        match best {
            Some(b) if s == b => ties.push(i),
            Some(b) if (s > b) != larger => {}
            _ => {
                best = Some(s);
                ties.clear();
                ties.push(i);
            }
        }
    }
    if ties.len() > 1 {
        ties[rng.random_range(0..ties.len())]
    } else {
        ties[0]
    }
}

/// Initial medoids for [`kmedoids_with`].
pub fn initial_medoids(
    matrix: &FermatMatrix,
    m: usize,
    seed: u64,
    init: Init,
) -> Result<Vec<usize>> {
    let n = matrix.n();
    check_m(m, n)?;
    let mut rng = stream_rng(seed, Stream::KMedoidsTies, 0);
    let totals: Vec<f64> = (0..n).map(|i| matrix.row(i).iter().sum()).collect();
    let first = pick(&totals, |_| true, false, &mut rng);
    let mut medoids = vec![first];
    let mut nearest: Vec<f64> = matrix.row(first).to_vec();
    while medoids.len() < m {
        let chosen = medoids.clone();
        let next = match init {
            Init::FarthestPoint => pick(&nearest, |i| !chosen.contains(&i), true, &mut rng),
            Init::Build => {
                let objective: Vec<f64> = (0..n)
                    .map(|c| {
                        matrix
                            .row(c)
                            .iter()
                            .zip(&nearest)
                            .map(|(d, v)| d.min(*v))
                            .sum()
                    })
                    .collect();
                pick(&objective, |i| !chosen.contains(&i), false, &mut rng)
            }
        };
        medoids.push(next);
        for (v, &d) in nearest.iter_mut().zip(matrix.row(next)) {
            *v = v.min(d);
        }
    }
    Ok(medoids)
}

/// Farthest-point seeding, see [`Init::FarthestPoint`].
pub fn farthest_point_init(matrix: &FermatMatrix, m: usize, seed: u64) -> Result<Vec<usize>> {
    initial_medoids(matrix, m, seed, Init::FarthestPoint)
}

fn check_m(m: usize, n: usize) -> Result<()> {
    if m < 2 {
        return Err(invalid("m", "need at least 2 clusters"));
    }
    if m > n {
        return Err(invalid(
            "m",
            format!("{m} clusters requested for {n} points"),
        ));
    }
    Ok(())
}

/// Fermat K-medoids with the default initialization.
pub fn kmedoids(
    matrix: &FermatMatrix,
    m: usize,
    seed: u64,
    max_iter: usize,
) -> Result<ClusterModel> {
    kmedoids_with(matrix, m, seed, max_iter, Init::default())
}

pub fn kmedoids_with(
    matrix: &FermatMatrix,
    m: usize,
    seed: u64,
    max_iter: usize,
    init: Init,
) -> Result<ClusterModel> {
    if matrix.values().iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateMatrix("all distances are zero".into()));
    }
    let start = initial_medoids(matrix, m, seed, init)?;
    kmedoids_from(matrix, start, max_iter)
}

/// Alternates nearest-medoid assignment and within-cluster medoid update
/// from the given medoids until the assignment stops changing.
pub fn kmedoids_from(
    matrix: &FermatMatrix,
    medoids: Vec<usize>,
    max_iter: usize,
) -> Result<ClusterModel> {
    let n = matrix.n();
    check_m(medoids.len(), n)?;
    let mut seen = vec![false; n];
    for &c in &medoids {
        if c >= n || std::mem::replace(&mut seen[c], true) {
            return Err(invalid(
                "medoids",
                "medoid indices must be distinct and in range",
            ));
        }
    }
    let mut medoids = medoids;
    let (mut assignment, objective) = assign(matrix, &medoids);
    let mut trace = vec![objective];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        update_medoids(matrix, &assignment, &mut medoids);
        let (next, objective) = assign(matrix, &medoids);
        trace.push(objective);
        let unchanged = next == assignment;
        assignment = next;
        if unchanged {
            converged = true;
            break;
        }
    }
    Ok(ClusterModel {
        objective: *trace.last().unwrap_or(&0.0),
        medoid_indices: medoids,
        assignment,
        iterations,
        converged,
        trace,
    })
}

/// Nearest medoid per point, ties to the lowest cluster index; medoids
/// always keep themselves.
fn assign(matrix: &FermatMatrix, medoids: &[usize]) -> (Vec<usize>, f64) {
    let mut objective = 0.0;
    let assignment = (0..matrix.n())
        .map(|x| {
            if let Some(own) = medoids.iter().position(|&c| c == x) {
                return own;
            }
            let mut best = (f64::INFINITY, 0);
            for (k, &c) in medoids.iter().enumerate() {
                let d = matrix.get(x, c);
                if d < best.0 {
                    best = (d, k);
                }
            }
            objective += best.0;
            best.1
        })
        .collect();
    (assignment, objective)
}

/// Replaces each medoid by the member minimizing the within-cluster total
/// distance (ties to the lowest point index).
fn update_medoids(matrix: &FermatMatrix, assignment: &[usize], medoids: &mut [usize]) {
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); medoids.len()];
    for (x, &k) in assignment.iter().enumerate() {
        members[k].push(x);
    }
    for (k, group) in members.iter().enumerate() {
        let mut best = (f64::INFINITY, medoids[k]);
        for &c in group {
            let total: f64 = group.iter().map(|&x| matrix.get(x, c)).sum();
            if total < best.0 {
                best = (total, c);
            }
        }
        medoids[k] = best.1;
    }
}
