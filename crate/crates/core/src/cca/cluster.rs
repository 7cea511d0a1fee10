use log::debug;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ca::{correspondence_analysis, max_dims, standardized_residuals, CaResult};
use super::kmeans::{
    balanced_random_labels, centroids_of, kmeans, total_ss, within_ss, within_ss_by_cluster, KmeansInit,
    DEFAULT_KMEANS_MAX_ITER,
};
use crate::dataset::{contingency, IndicatorMatrix};
use crate::error::{Error, Result};
use crate::rng::item_rng;

/// `Y = (1/q)(I − 11ᵀ/n) Z B`, computed as the column-centred `ZB` scaled by
/// `1/q`.
pub fn object_coordinates(z: &IndicatorMatrix, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if b.nrows() != z.n_cols() {
        return Err(Error::Dimension {
            expected: z.n_cols(),
            found: b.nrows(),
        });
    }
    let (n, d) = (z.n_rows(), b.ncols());
    let mut y = DMatrix::zeros(n, d);
    for (i, row) in z.rows().enumerate() {
        for &c in row {
            for s in 0..d {
                y[(i, s)] += b[(c as usize, s)];
            }
        }
    }
    let q = z.q() as f64;
    for s in 0..d {
        let mean = y.column(s).sum() / n as f64;
        for i in 0..n {
            y[(i, s)] = (y[(i, s)] - mean) / q;
        }
    }
    Ok(y)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CcaParams {
    pub restarts: usize,
    /// Relative change in wcss/tss below which the alternation stops.
    pub tol: f64,
    /// Cap on CA/k-means alternations per restart.
    pub max_iter: usize,
    /// Embedding dimension; `None` means `max(K − 1, 1)`.
    pub dims: Option<usize>,
    pub seed: u64,
}

impl Default for CcaParams {
    fn default() -> Self {
        CcaParams {
            restarts: 20,
            tol: 1e-10,
            max_iter: 100,
            dims: None,
            seed: 0,
        }
    }
}

impl CcaParams {
    pub fn dims_for(&self, k: usize) -> usize {
        self.dims.unwrap_or_else(|| k.saturating_sub(1).max(1))
    }
}

/// Biplot rescaling of quantifications and centroids.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rescaled {
    pub gamma: f64,
    pub categories: DMatrix<f64>,
    pub centroids: DMatrix<f64>,
}

/// `γ = ((K/Q)·tr(BᵀB)/tr(GᵀG))^{1/4}`, `B* = B/γ`, `G* = γG`.
pub fn rescale(b: &DMatrix<f64>, g: &DMatrix<f64>, k: usize, q: usize) -> Result<Rescaled> {
    let tb = b.norm_squared();
    let tg = g.norm_squared();
    if tg <= 0.0 || !tg.is_finite() {
        return Err(Error::Numerical(
            "all centroids sit at the origin; biplot rescaling is undefined".into(),
        ));
    }
    if tb <= 0.0 {
        return Err(Error::Numerical("category quantifications are all zero".into()));
    }
    let gamma = ((k as f64 / q as f64) * tb / tg).powf(0.25);
    Ok(Rescaled {
        gamma,
        categories: b / gamma,
        centroids: g * gamma,
    })
}

/// Outcome of cluster correspondence analysis for one K.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CcaSolution {
    pub k: usize,
    pub q: usize,
    /// Active variables, in indicator column order.
    pub variables: Vec<String>,
    /// `Variable=category` label of every row of `B`.
    pub category_names: Vec<String>,
    pub assign: Vec<usize>,
    /// Object coordinates (n × d).
    pub y: DMatrix<f64>,
    /// Cluster centroids in object space (K × d).
    pub g: DMatrix<f64>,
    pub ca: CaResult,
    /// Within-cluster sum of squares of `Y`.
    pub wcss: f64,
    /// Total sum of squares of `Y`.
    pub tss: f64,
    pub cluster_wcss: Vec<f64>,
    /// Inertia of the final cluster-by-category table: the between-cluster
    /// part of the indicator matrix's chi-square inertia.
    pub between_inertia: f64,
    /// Total chi-square inertia of the indicator matrix, `J/q − 1` over the
    /// categories that occur.
    pub total_inertia: f64,
    pub sizes: Vec<usize>,
    /// Normalized wcss after every alternation of the winning restart.
    pub trace: Vec<f64>,
    pub iterations: usize,
    /// Whether the winning restart ended on a fixed assignment.
    pub stable: bool,
    pub restart: usize,
    pub restarts_used: usize,
    pub seed: u64,
    /// `None` when the centroids are degenerate (e.g. K = 1).
    pub rescaled: Option<Rescaled>,
}

impl CcaSolution {
    pub fn quantifications(&self) -> &DMatrix<f64> {
        &self.ca.col_coords
    }

    /// Within-cluster share of the indicator matrix's total inertia, i.e.
    /// wcss/tss of the observations in the full chi-square space of `Z`.
    /// Unlike wcss/tss of `Y`, this is comparable across K. Defined as 1 when
    /// there is no inertia at all.
    pub fn normalized_wcss(&self) -> f64 {
        within_share(self.between_inertia, self.total_inertia)
    }

    pub fn n(&self) -> usize {
        self.assign.len()
    }

    pub fn category_labels(&self) -> Vec<String> {
        self.category_names.clone()
    }
}

fn within_share(between: f64, total: f64) -> f64 {
    if total > 0.0 {
        (1.0 - between / total).clamp(0.0, 1.0)
    } else {
        1.0
    }
}

/// Total chi-square inertia of an indicator matrix: `J₊/q − 1`, where `J₊`
/// counts the categories that occur at least once.
pub fn indicator_inertia(z: &IndicatorMatrix) -> f64 {
    let present = z.column_sums().iter().filter(|&&c| c > 0).count();
    present as f64 / z.q() as f64 - 1.0
}

fn between_inertia(z: &IndicatorMatrix, assign: &[usize], k: usize) -> Result<f64> {
    let f = contingency(z, assign, k)?;
    Ok(standardized_residuals(&f)?.0.norm_squared())
}

/// Alternate CA and k-means from `init` until the labels stop changing, the
/// relative change in normalized wcss drops below `tol`, or `max_iter` is
/// reached.
///
/// With `d ≥ K − 1` every alternation can only raise the between-cluster
/// inertia: k-means raises the between-cluster scatter of `Y` for the current
/// `B`, and the next CA step maximises it over `B`.
pub(crate) fn alternate(
    z: &IndicatorMatrix,
    k: usize,
    init: Vec<usize>,
    params: &CcaParams,
    restart: usize,
) -> Result<CcaSolution> {
    let d = params.dims_for(k).min(max_dims(k, z.n_cols(), z.q()));
    let total_inertia = indicator_inertia(z);
    let mut assign = init;
    let mut trace: Vec<f64> = Vec::new();
    let mut iterations = 0;
    let mut stable = false;
    let mut state = None;
    while iterations < params.max_iter {
        iterations += 1;
        let f = contingency(z, &assign, k)?;
        let ca = correspondence_analysis(&f, d)?;
        let y = object_coordinates(z, &ca.col_coords)?;
        let km = kmeans(&y, k, KmeansInit::Assign(assign.clone()), DEFAULT_KMEANS_MAX_ITER)?;
        let tss = total_ss(&y);
        stable = km.assign == assign;
        let ratio = within_share(between_inertia(z, &km.assign, k)?, total_inertia);
        let settled = trace
            .last()
            .is_some_and(|&prev: &f64| (prev - ratio).abs() <= params.tol * prev.abs().max(f64::MIN_POSITIVE));
        trace.push(ratio);
        assign = km.assign.clone();
        state = Some((ca, y, km, tss));
        if stable || settled {
            break;
        }
    }
    let (mut ca, mut y, km, mut tss) = state.ok_or_else(|| Error::Config("max_iter must be at least 1".into()))?;
    let (mut g, mut wcss) = (km.centroids, km.wcss);
    if !stable {
        // the last k-means moved points, so refresh the embedding to match them
        ca = correspondence_analysis(&contingency(z, &assign, k)?, d)?;
        y = object_coordinates(z, &ca.col_coords)?;
        tss = total_ss(&y);
        g = centroids_of(&y, &assign, k).0;
        wcss = within_ss(&y, &assign, &g);
    }
    let mut sizes = vec![0; k];
    for &l in &assign {
        sizes[l] += 1;
    }
    let cluster_wcss = within_ss_by_cluster(&y, &assign, &g);
    let between = between_inertia(z, &assign, k)?;
    let rescaled = rescale(&ca.col_coords, &g, k, z.q()).ok();
    debug!(
        "restart {restart}: K={k} finished after {iterations} alternations, wcss/tss={:.6}",
        trace.last().unwrap()
    );
    Ok(CcaSolution {
        k,
        q: z.q(),
        variables: z.blocks().iter().map(|b| b.name.clone()).collect(),
        category_names: (0..z.n_cols()).map(|c| z.column_label(c)).collect(),
        assign,
        g,
        wcss,
        tss,
        cluster_wcss,
        between_inertia: between,
        total_inertia,
        sizes,
        y,
        ca,
        trace,
        iterations,
        stable,
        restart,
        restarts_used: 0,
        seed: params.seed,
        rescaled,
    })
}

/// Lowest normalized wcss wins; ties go to the lower restart index.
pub(crate) fn best_of(mut candidates: Vec<CcaSolution>) -> CcaSolution {
    candidates.sort_by(|a, b| {
        a.normalized_wcss()
            .total_cmp(&b.normalized_wcss())
            .then(a.restart.cmp(&b.restart))
    });
    let used = candidates.len();
    let mut best = candidates.swap_remove(0);
    best.restarts_used = used;
    best
}

pub(crate) fn restart_candidates(z: &IndicatorMatrix, k: usize, params: &CcaParams) -> Result<Vec<CcaSolution>> {
    check_k(z, k, params)?;
    (0..params.restarts)
        .into_par_iter()
        .map(|r| {
            let init = balanced_random_labels(z.n_rows(), k, &mut item_rng(params.seed, r as u64));
            alternate(z, k, init, params, r)
        })
        .collect()
}

fn check_k(z: &IndicatorMatrix, k: usize, params: &CcaParams) -> Result<()> {
    if k == 0 || k > z.n_rows() {
        return Err(Error::Config(format!("K = {k} must lie in [1, n = {}]", z.n_rows())));
    }
    if params.restarts == 0 {
        return Err(Error::Config("at least one restart is required".into()));
    }
    if params.max_iter == 0 {
        return Err(Error::Config("max_iter must be at least 1".into()));
    }
    if params.dims == Some(0) {
        return Err(Error::Config("embedding dimension must be at least 1".into()));
    }
    Ok(())
}

/// Cluster correspondence analysis with `params.restarts` random starts.
///
/// Restarts run in parallel, each on its own random stream derived from
/// `(seed, restart index)`, so the result does not depend on the thread count.
pub fn cluster_ca(z: &IndicatorMatrix, k: usize, params: &CcaParams) -> Result<CcaSolution> {
    let candidates = restart_candidates(z, k, params)?;
    Ok(best_of(candidates))
}
