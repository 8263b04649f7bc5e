//! K-means over the effective symbols: farthest-point seeding, Lloyd
//! iterations, and one representative per cluster chosen by its summed
//! distance to the other centroids.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::constellation::EffectiveSymbol;
use crate::error::{Error, Result};

const PARALLEL_ASSIGN_THRESHOLD: usize = 1 << 12;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterState {
    pub centroids: Vec<Complex64>,
    /// Cluster index for every point.
    pub assignment: Vec<usize>,
    /// Distance from every point to its nearest centroid.
    pub min_dists: Vec<f64>,
    /// Lloyd iterations performed so far.
    pub iteration: usize,
    pub converged: bool,
}

impl ClusterState {
    pub fn n_clusters(&self) -> usize {
        self.centroids.len()
    }

    pub fn members(&self, cluster: usize) -> impl Iterator<Item = usize> + '_ {
        self.assignment
            .iter()
            .enumerate()
            .filter(move |(_, &a)| a == cluster)
            .map(|(i, _)| i)
    }

    /// Within-cluster sum of squared distances.
    pub fn objective(&self, points: &[Complex64]) -> f64 {
        points
            .iter()
            .zip(&self.assignment)
            .map(|(p, &a)| (p - self.centroids[a]).norm_sqr())
            .sum()
    }
}

/// Centroids after every Lloyd iteration, starting with the seeds.
#[derive(Debug, Clone, Default, Serialize)]
pub struct CentroidTrace {
    pub iterations: Vec<Vec<[f64; 2]>>,
}

impl CentroidTrace {
    fn record(&mut self, centroids: &[Complex64]) {
        self.iterations
            .push(centroids.iter().map(|c| [c.re, c.im]).collect());
    }
}

/// Nearest centroid, ties to the lowest index.
fn nearest(p: Complex64, centroids: &[Complex64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = (p - c).norm_sqr();
        if d < best.1 {
            best = (i, d);
        }
    }
    (best.0, best.1.sqrt())
}

fn assign_all(points: &[Complex64], centroids: &[Complex64]) -> Vec<(usize, f64)> {
    if points.len() >= PARALLEL_ASSIGN_THRESHOLD {
        points.par_iter().map(|&p| nearest(p, centroids)).collect()
    } else {
        points.iter().map(|&p| nearest(p, centroids)).collect()
    }
}

fn count_distinct(points: &[Complex64]) -> usize {
    let mut keys: Vec<(u64, u64)> = points
        .iter()
        .map(|p| ((p.re + 0.0).to_bits(), (p.im + 0.0).to_bits()))
        .collect();
    keys.sort_unstable();
    keys.dedup();
    keys.len()
}

/// Farthest-point seeding with a uniformly random first centroid.
pub fn init_centroids<R: Rng + ?Sized>(
    points: &[Complex64],
    n_clusters: usize,
    rng: &mut R,
) -> Result<ClusterState> {
    if points.is_empty() {
        return Err(Error::NotEnoughPoints {
            needed: n_clusters,
            available: 0,
        });
    }
    let first = rng.random_range(0..points.len());
    init_centroids_from(points, n_clusters, first)
}

/// Farthest-point seeding from a given first point: each further centroid is
/// the point whose distance to its nearest chosen centroid is largest (ties to
/// the lowest point index).
pub fn init_centroids_from(
    points: &[Complex64],
    n_clusters: usize,
    first: usize,
) -> Result<ClusterState> {
    let distinct = count_distinct(points);
    if n_clusters == 0 || n_clusters > distinct {
        return Err(Error::NotEnoughPoints {
            needed: n_clusters,
            available: distinct,
        });
    }
    let mut centroids = vec![points[first]];
    let mut dists: Vec<f64> = points.iter().map(|p| (p - points[first]).norm()).collect();
    while centroids.len() < n_clusters {
        let mut pick = 0;
        for (i, &d) in dists.iter().enumerate() {
            if d > dists[pick] {
                pick = i;
            }
        }
        let c = points[pick];
        centroids.push(c);
        for (d, p) in dists.iter_mut().zip(points) {
            *d = d.min((p - c).norm());
        }
    }
    let assigned = assign_all(points, &centroids);
    Ok(ClusterState {
        centroids,
        assignment: assigned.iter().map(|a| a.0).collect(),
        min_dists: assigned.iter().map(|a| a.1).collect(),
        iteration: 0,
        converged: false,
    })
}

/// Runs Lloyd iterations until a fixed point (assignment and centroids both
/// unchanged) or `max_iters` iterations.
pub fn lloyd_iterate(state: ClusterState, points: &[Complex64], max_iters: usize) -> ClusterState {
    lloyd_run(state, points, max_iters, None)
}

pub fn lloyd_iterate_traced(
    state: ClusterState,
    points: &[Complex64],
    max_iters: usize,
    trace: &mut CentroidTrace,
) -> ClusterState {
    trace.record(&state.centroids);
    lloyd_run(state, points, max_iters, Some(trace))
}

fn lloyd_run(
    mut state: ClusterState,
    points: &[Complex64],
    max_iters: usize,
    mut trace: Option<&mut CentroidTrace>,
) -> ClusterState {
    let k = state.n_clusters();
    state.converged = false;
    while state.iteration < max_iters {
        let assigned = assign_all(points, &state.centroids);
        let mut assignment: Vec<usize> = assigned.iter().map(|a| a.0).collect();
        let mut min_dists: Vec<f64> = assigned.iter().map(|a| a.1).collect();
        repair_empty_clusters(
            points,
            &mut state.centroids,
            &mut assignment,
            &mut min_dists,
        );

        let mut sums = vec![Complex64::new(0.0, 0.0); k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignment) {
            sums[a] += p;
            counts[a] += 1;
        }
        let centroids: Vec<Complex64> = sums
            .iter()
            .zip(&counts)
            .zip(&state.centroids)
            .map(|((s, &n), &old)| if n > 0 { s / n as f64 } else { old })
            .collect();

        let stable = assignment == state.assignment && centroids == state.centroids;
        state.assignment = assignment;
        state.min_dists = min_dists;
        state.centroids = centroids;
        state.iteration += 1;
        if let Some(t) = trace.as_deref_mut() {
            t.record(&state.centroids);
        }
        if stable {
            state.converged = true;
            break;
        }
    }
    state
}

/// Reseeds each empty cluster with the point farthest from its assigned
/// centroid, taken from a cluster that keeps at least one member.
fn repair_empty_clusters(
    points: &[Complex64],
    centroids: &mut [Complex64],
    assignment: &mut [usize],
    min_dists: &mut [f64],
) {
    let k = centroids.len();
    let mut counts = vec![0usize; k];
    for &a in assignment.iter() {
        counts[a] += 1;
    }
    for l in 0..k {
        if counts[l] > 0 {
            continue;
        }
        let mut pick: Option<usize> = None;
        for i in 0..points.len() {
            if counts[assignment[i]] < 2 {
                continue;
            }
            if pick.is_none_or(|p| min_dists[i] > min_dists[p]) {
                pick = Some(i);
            }
        }
        let Some(i) = pick else { return };
        counts[assignment[i]] -= 1;
        counts[l] = 1;
        assignment[i] = l;
        min_dists[i] = 0.0;
        centroids[l] = points[i];
    }
}

/// The `L` chosen symbols, one per cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectedConstellation {
    pub members: Vec<EffectiveSymbol>,
    pub source_clusters: Vec<usize>,
}

impl SelectedConstellation {
    pub fn points(&self) -> Vec<Complex64> {
        self.members.iter().map(|s| s.point).collect()
    }
}

/// From each cluster picks the member with the largest summed distance to all
/// other centroids (ties to the lowest pattern id).
pub fn select_constellation(
    state: &ClusterState,
    symbols: &[EffectiveSymbol],
) -> Result<SelectedConstellation> {
    if symbols.len() != state.assignment.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} symbols", state.assignment.len()),
            got: format!("{}", symbols.len()),
        });
    }
    let mut members = Vec::with_capacity(state.n_clusters());
    for l in 0..state.n_clusters() {
        let mut best: Option<(usize, f64)> = None;
        for k in state.members(l) {
            let g = symbols[k].point;
            let d: f64 = state
                .centroids
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != l)
                .map(|(_, c)| (g - c).norm())
                .sum();
            let better = match best {
                None => true,
                Some((b, bd)) => {
                    d > bd || (d == bd && symbols[k].reflection < symbols[b].reflection)
                }
            };
            if better {
                best = Some((k, d));
            }
        }
        let (k, _) = best.ok_or(Error::EmptyCluster(l))?;
        members.push(symbols[k]);
    }
    Ok(SelectedConstellation {
        members,
        source_clusters: (0..state.n_clusters()).collect(),
    })
}

/// Seeds, iterates and selects in one call.
pub fn cluster_and_select<R: Rng + ?Sized>(
    symbols: &[EffectiveSymbol],
    n_clusters: usize,
    max_iters: usize,
    rng: &mut R,
    trace: Option<&mut CentroidTrace>,
) -> Result<(SelectedConstellation, ClusterState)> {
    let points: Vec<Complex64> = symbols.iter().map(|s| s.point).collect();
    let init = init_centroids(&points, n_clusters, rng)?;
    let state = match trace {
        Some(t) => lloyd_iterate_traced(init, &points, max_iters, t),
        None => lloyd_iterate(init, &points, max_iters),
    };
    let selected = select_constellation(&state, symbols)?;
    Ok((selected, state))
}
