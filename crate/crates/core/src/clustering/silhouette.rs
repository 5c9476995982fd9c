use serde::{Deserialize, Serialize};

use super::matrix::{squared_distance, Matrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SilhouetteSet {
    pub values: Vec<f64>,
    pub sample_mean: f64,
}

/// Rousseeuw silhouettes with Euclidean distance; members of singleton
/// clusters score 0.
pub fn silhouettes(z: &Matrix, assignments: &[usize]) -> Result<SilhouetteSet> {
    let n = z.rows();
    if assignments.len() != n {
        return Err(Error::InvalidArgument(format!(
            "{} assignments for {n} rows",
            assignments.len()
        )));
    }
    let k = assignments.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    for &a in assignments {
        sizes[a] += 1;
    }
    if sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return Err(Error::InvalidArgument("silhouettes need at least two clusters".into()));
    }
    let mut values = vec![0.0; n];
    let mut sums = vec![0.0; k];
    for i in 0..n {
        let own = assignments[i];
        if sizes[own] == 1 {
            continue;
        }
        sums.iter_mut().for_each(|s| *s = 0.0);
        for j in 0..n {
            if j != i {
                sums[assignments[j]] += squared_distance(z.row(i), z.row(j)).sqrt();
            }
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        values[i] = if denom > 0.0 { (b - a) / denom } else { 0.0 };
    }
    let sample_mean = values.iter().sum::<f64>() / n as f64;
    Ok(SilhouetteSet { values, sample_mean })
}
