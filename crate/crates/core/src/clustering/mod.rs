//! Archetype discovery: standardized k-means over a range of k, the
//! Krzanowski-Lai choice of k and per-player silhouettes.

mod kl;
mod kmeans;
mod matrix;
mod silhouette;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use kl::{kl_curve, select_k, KSelection, KlCurve};
pub use kmeans::{kmeans, KMeansFit, MAX_ITERATIONS};
pub use matrix::{squared_distance, standardize, Matrix, Standardization};
pub use silhouette::{silhouettes, SilhouetteSet};

use crate::error::{Error, Result};
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    pub k_max: usize,
    pub restarts: usize,
    pub rho: f64,
    /// Skip the Krzanowski-Lai choice and use this k.
    pub k_override: Option<usize>,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            k_max: 20,
            restarts: 50,
            rho: 0.8,
            k_override: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSolution {
    pub standardization: Standardization,
    pub fit: KMeansFit,
    pub kl: KlCurve,
    pub selection: Option<KSelection>,
    pub silhouettes: SilhouetteSet,
}

impl ClusterSolution {
    pub fn k(&self) -> usize {
        self.fit.k
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        (0..self.fit.assignments.len())
            .filter(|&i| self.fit.assignments[i] == cluster)
            .collect()
    }
}

/// Within-cluster sums of squares for k = 1..=k_max (capped at n).
pub fn within_ss_curve(z: &Matrix, k_max: usize, seed: u64, restarts: usize) -> Result<BTreeMap<usize, KMeansFit>> {
    (1..=k_max.min(z.rows()))
        .map(|k| kmeans(z, k, derive_seed(seed, &format!("kmeans/k={k}")), restarts).map(|f| (k, f)))
        .collect()
}

/// Standardizes `x`, fits k-means for every k, picks k from the
/// Krzanowski-Lai curve (or the override) and scores the chosen partition.
pub fn cluster_analysis(x: &Matrix, names: &[String], seed: u64, config: &ClusterConfig) -> Result<ClusterSolution> {
    if config.k_max < 2 {
        return Err(Error::InvalidArgument("k_max must be at least 2".into()));
    }
    let (z, standardization) = standardize(x, names)?;
    let fits = within_ss_curve(&z, config.k_max, seed, config.restarts)?;
    let within: BTreeMap<usize, f64> = fits.iter().map(|(&k, f)| (k, f.within_ss)).collect();
    let kl = kl_curve(&within, z.cols())?;
    let (k, selection) = match config.k_override {
        Some(k) => (k, None),
        None => {
            let s = select_k(&kl.c, config.rho)?;
            (s.k_star, Some(s))
        }
    };
    if k < 2 {
        return Err(Error::InvalidArgument("the chosen k must be at least 2".into()));
    }
    let fit = match fits.get(&k) {
        Some(f) => f.clone(),
        None => kmeans(&z, k, derive_seed(seed, &format!("kmeans/k={k}")), config.restarts)?,
    };
    let silhouettes = silhouettes(&z, &fit.assignments)?;
    Ok(ClusterSolution {
        standardization,
        fit,
        kl,
        selection,
        silhouettes,
    })
}
