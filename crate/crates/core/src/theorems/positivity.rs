use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{check_len, DomainMask};
use crate::linalg;

/// Discrete analogue of the set where `v` is *uniformly* positive: node `i`
/// belongs when `v ≥ ε` on every mask node within `ρ` grid cells of `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositivitySet {
    pub rho: usize,
    pub threshold: f64,
    /// Mask positions, increasing.
    pub members: Vec<usize>,
}

impl PositivitySet {
    pub fn build(mask: &DomainMask, v: &[f64], rho: usize, threshold: f64) -> Result<Self> {
        check_len(v, mask.len())?;
        let grid = mask.grid();
        let cell = grid.spacings().into_iter().fold(f64::INFINITY, f64::min);
        let r2 = (rho as f64 * cell).powi(2) * (1.0 + 1e-9);
        let idx = mask.indices();
        let members = (0..mask.len())
            .filter(|&p| {
                v[p] >= threshold
                    && (0..mask.len()).all(|q| grid.distance_sq(idx[p], idx[q]) > r2 || v[q] >= threshold)
            })
            .collect();
        Ok(Self { rho, threshold, members })
    }

    /// `ρ = 1` and `ε = fraction · ‖v‖∞`. A zero vector gives the empty set.
    pub fn with_relative_threshold(mask: &DomainMask, v: &[f64], fraction: f64) -> Result<Self> {
        let top = linalg::norm_inf(v);
        if top == 0.0 {
            return Ok(Self { rho: 1, threshold: 0.0, members: Vec::new() });
        }
        Self::build(mask, v, 1, fraction * top)
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, position: usize) -> bool {
        self.members.binary_search(&position).is_ok()
    }

    /// `min_{P} v − ε`, nonnegative by construction.
    pub fn floor_margin(&self, v: &[f64]) -> Option<f64> {
        self.members.iter().map(|&p| v[p] - self.threshold).reduce(f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BoxGrid;
    use std::sync::Arc;

    #[test]
    fn one_cell_neighbourhoods() {
        let mask = DomainMask::full(Arc::new(BoxGrid::unit_interval(7).unwrap()));
        let v = [0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0];
        let p = PositivitySet::build(&mask, &v, 1, 0.5).unwrap();
        // Nodes 1, 3 and 5 touch a zero; node 6 sits at the end of the mask.
        assert_eq!(p.members, vec![2, 6]);
        assert!(p.floor_margin(&v).unwrap() >= 0.0);
        let empty = PositivitySet::with_relative_threshold(&mask, &[0.0; 7], 1e-3).unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn two_dimensional_uses_euclidean_cells() {
        let mask = DomainMask::full(Arc::new(BoxGrid::unit_square(3).unwrap()));
        let mut v = vec![1.0; 9];
        v[0] = 0.0; // corner
        let p = PositivitySet::build(&mask, &v, 1, 0.5).unwrap();
        // Diagonal neighbour of the corner (the centre) stays a member.
        assert!(p.contains(4));
        assert!(!p.contains(1) && !p.contains(3) && !p.contains(0));
    }
}
