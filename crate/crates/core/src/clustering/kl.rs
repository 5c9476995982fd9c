use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Krzanowski-Lai curve over k = 1..K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KlCurve {
    pub m: usize,
    pub within_ss: BTreeMap<usize, f64>,
    pub diff: BTreeMap<usize, f64>,
    /// Absent where DIFF(k + 1) vanishes.
    pub c: BTreeMap<usize, f64>,
}

/// DIFF(k) = (k-1)^(2/m) W(k-1) - k^(2/m) W(k) for k >= 2 and
/// C(k) = |DIFF(k) / DIFF(k+1)|.
///
/// DIFF values within 1e-12 of the magnitude of their two terms count as
/// zero, which leaves the neighbouring C undefined.
pub fn kl_curve(within_ss: &BTreeMap<usize, f64>, m: usize) -> Result<KlCurve> {
    if m == 0 {
        return Err(Error::InvalidArgument("attribute count m must be positive".into()));
    }
    let expo = 2.0 / m as f64;
    let mut diff = BTreeMap::new();
    let mut negligible = BTreeMap::new();
    for (&k, &w) in within_ss {
        if k < 2 {
            continue;
        }
        let Some(&prev) = within_ss.get(&(k - 1)) else { continue };
        let a = ((k - 1) as f64).powf(expo) * prev;
        let b = (k as f64).powf(expo) * w;
        let d = a - b;
        negligible.insert(k, d.abs() <= 1e-12 * a.abs().max(b.abs()));
        diff.insert(k, d);
    }
    let mut c = BTreeMap::new();
    for (&k, &d) in &diff {
        if let Some(&next) = diff.get(&(k + 1)) {
            if !negligible[&(k + 1)] {
                c.insert(k, (d / next).abs());
            }
        }
    }
    Ok(KlCurve {
        m,
        within_ss: within_ss.clone(),
        diff,
        c,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSelection {
    pub k_star: usize,
    pub candidates: Vec<usize>,
    pub warning: Option<String>,
}

/// Picks k from the local maxima of C(k).
///
/// The chosen k is the smallest local maximum whose C is at least `rho`
/// times the largest local maximum. Without an interior maximum the global
/// argmax is returned with a warning.
pub fn select_k(c: &BTreeMap<usize, f64>, rho: f64) -> Result<KSelection> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::InvalidArgument(format!("rho must lie in (0, 1], got {rho}")));
    }
    let run = c
        .keys()
        .filter(|&&k| c.contains_key(&(k + 1)) && c.contains_key(&(k + 2)))
        .count();
    if run == 0 {
        return Err(Error::InsufficientData(
            "C(k) must be defined for at least three consecutive k".into(),
        ));
    }
    let candidates: Vec<usize> = c
        .iter()
        .filter(|&(&k, &v)| {
            k > 0
                && matches!((c.get(&(k - 1)), c.get(&(k + 1))), (Some(&lo), Some(&hi)) if v > lo && v > hi)
        })
        .map(|(&k, _)| k)
        .collect();
    if candidates.is_empty() {
        let (&k, _) = c
            .iter()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(a.0)))
            .expect("nonempty curve");
        return Ok(KSelection {
            k_star: k,
            candidates,
            warning: Some(format!("C(k) has no interior local maximum; using its argmax k = {k}")),
        });
    }
    let top = candidates.iter().map(|k| c[k]).fold(f64::NEG_INFINITY, f64::max);
    let k_star = *candidates
        .iter()
        .find(|k| c[k] >= rho * top)
        .expect("the largest candidate qualifies");
    Ok(KSelection {
        k_star,
        candidates,
        warning: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(pairs: &[(usize, f64)]) -> BTreeMap<usize, f64> {
        pairs.iter().copied().collect()
    }

    #[test]
    fn worked_example() {
        let kl = kl_curve(&curve(&[(1, 100.0), (2, 40.0), (3, 30.0), (4, 28.0)]), 2).unwrap();
        assert_eq!(kl.diff[&2], 20.0);
        assert_eq!(kl.diff[&3], -10.0);
        assert_eq!(kl.diff[&4], -22.0);
        assert_eq!(kl.c[&2], 2.0);
        assert!((kl.c[&3] - 10.0 / 22.0).abs() < 1e-15);
        assert!(!kl.c.contains_key(&1) && !kl.c.contains_key(&4));
    }

    #[test]
    fn proportional_curve_has_no_c() {
        let m = 3;
        let w: BTreeMap<usize, f64> = (1..=8).map(|k| (k, 50.0 * (k as f64).powf(-2.0 / m as f64))).collect();
        let kl = kl_curve(&w, m).unwrap();
        assert!(kl.c.is_empty());
    }

    #[test]
    fn twenty_k_gives_c_on_two_to_nineteen() {
        let w: BTreeMap<usize, f64> = (1..=20).map(|k| (k, 100.0 / (k as f64).powf(1.3) + 1.0 / k as f64)).collect();
        let kl = kl_curve(&w, 4).unwrap();
        assert_eq!(kl.c.keys().copied().collect::<Vec<_>>(), (2..=19).collect::<Vec<_>>());
    }

    #[test]
    fn unique_peak() {
        let s = select_k(&curve(&[(2, 1.0), (3, 5.0), (4, 1.0)]), 0.8).unwrap();
        assert_eq!((s.k_star, s.candidates), (3, vec![3]));
    }

    #[test]
    fn earlier_peak_within_rho_wins() {
        let s = select_k(&curve(&[(2, 1.0), (3, 4.0), (4, 1.0), (5, 3.5), (6, 1.0)]), 0.8).unwrap();
        assert_eq!((s.k_star, s.candidates), (3, vec![3, 5]));
        let s = select_k(&curve(&[(2, 1.0), (3, 2.0), (4, 1.0), (5, 3.5), (6, 1.0)]), 0.8).unwrap();
        assert_eq!(s.k_star, 5);
    }

    #[test]
    fn monotone_curve_falls_back() {
        let s = select_k(&curve(&[(2, 9.0), (3, 5.0), (4, 2.0), (5, 1.0)]), 0.8).unwrap();
        assert_eq!(s.k_star, 2);
        assert!(s.candidates.is_empty() && s.warning.is_some());
    }

    #[test]
    fn too_short_curve_rejected() {
        assert!(select_k(&curve(&[(2, 1.0), (3, 2.0), (5, 1.0)]), 0.8).is_err());
    }
}
