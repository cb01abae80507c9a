//! The restricted (Dirichlet) fractional Laplacian `(−Δ)^s` acting on
//! zero-extended mask vectors.
//!
//! Two backends:
//!
//! * **kernel sum** (1D only): `(Lv)_i = Σ_{k≠0} (v_i − v_{i+k}) K(k)` with
//!   `v = 0` off the mask. The default [`KernelRule::Lattice`] uses
//!   `K(k) = C(1,s) h^{−2s} Γ(|k|−s)/Γ(|k|+1+s)`, the kernel of the
//!   `s`-th power of the three-point Laplacian on the whole lattice; it decays
//!   like `C(1,s) h^{−2s}|k|^{−1−2s}`. [`KernelRule::PowerLaw`] uses that
//!   asymptote directly, with the tail beyond `K = 10m` summed by its
//!   integral bound.
//! * **big box**: the spectral operator of an enclosing box `B_R` applied to
//!   the zero extension and restricted back to the mask.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{check_len, embedding, BoxGrid, DomainMask};
use crate::linalg;
use crate::operator::SpdOperator;
use crate::spectral_op::{closed_form_rows, eigendecompose_dense, NavierOperator, OperatorDump};
use crate::special::{fractional_laplacian_constant, gamma};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelRule {
    Lattice,
    PowerLaw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Backend {
    KernelSum { rule: KernelRule },
    BigBox { enclosing_ref: String, enclosing_size: usize },
}

impl Backend {
    pub fn tag(&self) -> &'static str {
        match self {
            Backend::KernelSum { .. } => "kernel-sum",
            Backend::BigBox { .. } => "big-box",
        }
    }
}

pub struct RestrictedOperator {
    mask: Arc<DomainMask>,
    order: f64,
    backend: Backend,
    matrix: DMatrix<f64>,
    factor: OnceLock<Option<Cholesky<f64, Dyn>>>,
}

impl std::fmt::Debug for RestrictedOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RestrictedOperator")
            .field("mask", &self.mask.fingerprint())
            .field("order", &self.order)
            .field("backend", &self.backend)
            .finish()
    }
}

fn check_open_order(s: f64) -> Result<()> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidOrder(s))
    }
}

/// Off-diagonal kernel weights `K(1..=kmax)` without the `C h^{−2s}` factor,
/// and the matching diagonal.
fn kernel_weights(rule: KernelRule, s: f64, kmax: usize, mask_len: usize) -> (Vec<f64>, f64) {
    match rule {
        KernelRule::Lattice => {
            // Γ(k−s)/Γ(k+1+s) by the recurrence r(k+1) = r(k) (k−s)/(k+1+s).
            let mut w = Vec::with_capacity(kmax);
            let mut r = gamma(1.0 - s) / gamma(2.0 + s);
            for k in 1..=kmax {
                w.push(r);
                r *= (k as f64 - s) / (k as f64 + 1.0 + s);
            }
            // Σ_{k≠0} C Γ(|k|−s)/Γ(|k|+1+s) = 4^s Γ(1/2+s) / (√π Γ(1+s)).
            let c = fractional_laplacian_constant(1, s);
            let diag = 4f64.powf(s) * gamma(0.5 + s) / (PI.sqrt() * gamma(1.0 + s)) / c;
            (w, diag)
        }
        KernelRule::PowerLaw => {
            let tail_start = 10 * mask_len;
            let e = -1.0 - 2.0 * s;
            let w: Vec<f64> = (1..=kmax).map(|k| (k as f64).powf(e)).collect();
            let head: f64 = (1..=tail_start).map(|k| (k as f64).powf(e)).sum();
            let tail = (tail_start as f64).powf(-2.0 * s) / (2.0 * s);
            (w, 2.0 * (head + tail))
        }
    }
}

impl RestrictedOperator {
    /// Kernel-sum backend with the lattice kernel.
    pub fn kernel_sum(mask: Arc<DomainMask>, order: f64) -> Result<Self> {
        Self::kernel_sum_with(mask, order, KernelRule::Lattice)
    }

    pub fn kernel_sum_with(mask: Arc<DomainMask>, order: f64, rule: KernelRule) -> Result<Self> {
        check_open_order(order)?;
        if mask.dim() != 1 {
            return Err(Error::Config(
                "the kernel-sum backend is only available in 1D".into(),
            ));
        }
        let h = mask.grid().spacing(0);
        let idx = mask.indices();
        let m = idx.len();
        let span = idx[m - 1] - idx[0];
        let (weights, diag) = kernel_weights(rule, order, span.max(1), m);
        let scale = fractional_laplacian_constant(1, order) * h.powf(-2.0 * order);
        let matrix = DMatrix::from_fn(m, m, |p, q| {
            if p == q {
                scale * diag
            } else {
                -scale * weights[idx[p].abs_diff(idx[q]) - 1]
            }
        });
        Ok(Self {
            mask,
            order,
            backend: Backend::KernelSum { rule },
            matrix,
            factor: OnceLock::new(),
        })
    }

    /// Big-box backend with an enclosing mask on the same grid.
    pub fn big_box(mask: Arc<DomainMask>, enclosing: &DomainMask, order: f64) -> Result<Self> {
        check_open_order(order)?;
        let rows = embedding(&mask, enclosing)?;
        if enclosing.len() == mask.len() {
            return Err(Error::SameDomainBackend);
        }
        let weight = enclosing.weight();
        let (values, block) = if enclosing.is_full_box() {
            let grid_rows: Vec<usize> = mask.indices().to_vec();
            closed_form_rows(enclosing.grid(), &grid_rows)
        } else {
            let d = eigendecompose_dense(enclosing)?;
            let block = d.eigenvectors().select_rows(&rows);
            (d.eigenvalues().to_vec(), block)
        };
        let matrix = spectral_block(&values, &block, order, weight);
        Ok(Self {
            mask: mask.clone(),
            order,
            backend: Backend::BigBox {
                enclosing_ref: enclosing.fingerprint(),
                enclosing_size: enclosing.len(),
            },
            matrix,
            factor: OnceLock::new(),
        })
    }

    /// Big-box backend on a box `factor` times larger than the mask's grid
    /// box (same spacing, same centre). The mask keeps its own grid; vectors
    /// are passed in the mask's ordering.
    pub fn big_box_scaled(mask: Arc<DomainMask>, order: f64, factor: f64) -> Result<Self> {
        check_open_order(order)?;
        if !(factor > 1.0) {
            return Err(Error::SameDomainBackend);
        }
        let grid = mask.grid();
        let mut extents = Vec::new();
        let mut nodes = Vec::new();
        let mut offsets = Vec::new();
        for axis in 0..grid.dim() {
            let n = grid.nodes_per_axis()[axis];
            let h = grid.spacing(axis);
            let off = ((factor - 1.0) * (n + 1) as f64 / 2.0).ceil().max(1.0) as usize;
            let [a, b] = grid.extents()[axis];
            extents.push([a - off as f64 * h, b + off as f64 * h]);
            nodes.push(n + 2 * off);
            offsets.push(off);
        }
        let big = BoxGrid::new(extents, nodes)?;
        let rows: Vec<usize> = mask
            .indices()
            .iter()
            .map(|&lin| {
                let mi = grid.multi_index(lin);
                let mut shifted = [0usize; 2];
                for axis in 0..grid.dim() {
                    shifted[axis] = mi[axis] + offsets[axis];
                }
                big.linear_index(shifted)
            })
            .collect();
        let (values, block) = closed_form_rows(&big, &rows);
        let matrix = spectral_block(&values, &block, order, big.cell_weight());
        let enclosing = DomainMask::full(Arc::new(big));
        Ok(Self {
            mask,
            order,
            backend: Backend::BigBox {
                enclosing_ref: enclosing.fingerprint(),
                enclosing_size: enclosing.len(),
            },
            matrix,
            factor: OnceLock::new(),
        })
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    pub fn mask_arc(&self) -> &Arc<DomainMask> {
        &self.mask
    }

    /// `‖(−Δ)^{s/2} v‖²`, the quadratic form of the operator.
    pub fn half_norm_sq(&self, v: &[f64]) -> Result<f64> {
        self.quadratic_form(v)
    }

    pub fn dump(&self) -> OperatorDump {
        let eig = self.matrix.clone().symmetric_eigen();
        let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        eigenvalues.sort_by(f64::total_cmp);
        OperatorDump {
            mask_ref: self.mask.fingerprint(),
            s: self.order,
            backend: Some(self.backend.tag().to_string()),
            eigenvalues,
        }
    }

    pub fn dump_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.dump())?)
    }
}

/// `w B Λ^s Bᵀ` for a row block `B` of an eigenvector matrix.
fn spectral_block(values: &[f64], block: &DMatrix<f64>, order: f64, weight: f64) -> DMatrix<f64> {
    let mut scaled = block.clone();
    for (j, &l) in values.iter().enumerate() {
        scaled.column_mut(j).scale_mut(l.powf(order) * weight);
    }
    let mut out = scaled * block.transpose();
    let t = out.transpose();
    out += t;
    out *= 0.5;
    out
}

impl SpdOperator for RestrictedOperator {
    fn mask(&self) -> &DomainMask {
        &self.mask
    }

    fn order(&self) -> f64 {
        self.order
    }

    fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(v, self.mask.len())?;
        Ok(linalg::matvec(&self.matrix, v))
    }

    fn solve(&self, f: &[f64]) -> Result<Vec<f64>> {
        check_len(f, self.mask.len())?;
        let chol = self
            .factor
            .get_or_init(|| self.matrix.clone().cholesky())
            .as_ref()
            .ok_or(Error::NotPositiveDefinite)?;
        Ok(chol
            .solve(&DVector::from_column_slice(f))
            .as_slice()
            .to_vec())
    }

    fn label(&self) -> String {
        format!(
            "restricted[{}](s={}, {})",
            self.backend.tag(),
            self.order,
            self.mask.fingerprint()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    /// `min_i (L_Navier v − L_restricted v)_i`.
    pub min_margin: f64,
    pub tolerance: f64,
    /// Minimum margin over nodes whose axis neighbours in the mask all carry
    /// positive values, if any such node exists.
    pub interior_support_min: Option<f64>,
    pub pass: bool,
}

/// Pointwise comparison `L_Navier v ≥ L_restricted v` for nonnegative `v`.
pub fn check_navier_dominates(
    navier: &NavierOperator,
    restricted: &RestrictedOperator,
    v: &[f64],
) -> Result<DominanceReport> {
    let (a, b) = (navier.mask(), restricted.mask());
    if !a.same_grid(b) || a.indices() != b.indices() {
        return Err(Error::NotNested("operators live on different masks".into()));
    }
    if (navier.order() - restricted.order()).abs() > 1e-15 {
        return Err(Error::OrderMismatch(navier.order(), restricted.order()));
    }
    check_len(v, navier.len())?;
    if v.iter().any(|&x| x < 0.0) {
        return Err(Error::Config("dominance check needs a nonnegative vector".into()));
    }
    let ln = navier.apply(v)?;
    let lr = restricted.apply(v)?;
    let margins = linalg::sub(&ln, &lr);
    let min_margin = margins.iter().copied().fold(f64::INFINITY, f64::min);
    let min_margin = if min_margin.is_finite() { min_margin } else { 0.0 };
    let tolerance = 1e-8 * linalg::norm_inf(&ln);
    let mask = navier.mask();
    let interior_support_min = (0..mask.len())
        .filter(|&p| v[p] > 0.0 && mask.neighbors(p).all(|(_, q)| v[q] > 0.0))
        .map(|p| margins[p])
        .reduce(f64::min);
    Ok(DominanceReport {
        min_margin,
        tolerance,
        interior_support_min,
        pass: min_margin >= -tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_op::NavierOperator;
    use approx::assert_relative_eq;

    fn interval_mask(n: usize) -> Arc<DomainMask> {
        Arc::new(DomainMask::full(Arc::new(BoxGrid::unit_interval(n).unwrap())))
    }

    #[test]
    fn spike_sign_pattern() {
        for rule in [KernelRule::Lattice, KernelRule::PowerLaw] {
            let op = RestrictedOperator::kernel_sum_with(interval_mask(9), 0.5, rule).unwrap();
            let mut e = vec![0.0; 9];
            e[4] = 1.0;
            let out = op.apply(&e).unwrap();
            assert!(out[4] > 0.0);
            assert!(out.iter().enumerate().all(|(i, &x)| i == 4 || x < 0.0));
            assert_eq!(op.apply(&[0.0; 9]).unwrap(), vec![0.0; 9]);
        }
    }

    /// Discrete symbol of the lattice kernel at frequency ξ, summed directly.
    fn lattice_symbol(s: f64, h: f64, xi: f64, terms: usize) -> f64 {
        let (w, diag) = kernel_weights(KernelRule::Lattice, s, terms, 1);
        let c = fractional_laplacian_constant(1, s) * h.powf(-2.0 * s);
        let mut sum = diag;
        for (k, wk) in w.iter().enumerate() {
            sum -= 2.0 * wk * ((k + 1) as f64 * xi * h).cos();
        }
        c * sum
    }

    #[test]
    fn lattice_symbol_is_the_power_of_the_three_point_symbol() {
        for s in [0.25, 0.5, 0.75] {
            for (h, xi) in [(0.1f64, 1.0f64), (0.05, 3.0), (0.01, 2.0)] {
                let exact = (4.0 / (h * h) * (0.5 * xi * h).sin().powi(2)).powf(s);
                let sym = lattice_symbol(s, h, xi, 400_000);
                assert_relative_eq!(sym, exact, max_relative = 2e-3);
            }
            // h → 0: the symbol approaches |ξ|^{2s}.
            let sym = lattice_symbol(s, 1e-3, 1.0, 400_000);
            assert_relative_eq!(sym, 1.0, max_relative = 2e-3);
        }
    }

    #[test]
    fn power_law_symbol_tends_to_continuum_multiplier() {
        // Σ_k (1 − cos(k ξ h)) |k|^{-1-2s} C h^{-2s} → |ξ|^{2s}.
        let s = 0.5;
        let h: f64 = 1e-3;
        let c = fractional_laplacian_constant(1, s) * h.powf(-2.0 * s);
        let kmax = 2_000_000usize;
        let mut sum = 0.0;
        for k in 1..=kmax {
            let kf = k as f64;
            sum += 2.0 * (1.0 - (kf * h).cos()) * kf.powf(-1.0 - 2.0 * s);
        }
        sum += 2.0 * (kmax as f64).powf(-2.0 * s) / (2.0 * s);
        assert_relative_eq!(c * sum, 1.0, max_relative = 5e-3);
    }

    #[test]
    fn big_box_requires_larger_box() {
        let mask = interval_mask(7);
        assert!(matches!(
            RestrictedOperator::big_box(mask.clone(), &mask, 0.5),
            Err(Error::SameDomainBackend)
        ));
        assert!(RestrictedOperator::big_box_scaled(mask, 0.5, 1.0).is_err());
    }

    #[test]
    fn big_box_on_shared_grid_matches_scaled_construction() {
        let grid = Arc::new(BoxGrid::interval(-1.0, 2.0, 47).unwrap());
        let inner = Arc::new(DomainMask::build(grid.clone(), |x| x[0] > 0.0 && x[0] < 1.0).unwrap());
        let outer = DomainMask::full(grid);
        let a = RestrictedOperator::big_box(inner.clone(), &outer, 0.4).unwrap();
        assert_eq!(inner.len(), 15);
        let own = interval_mask(15);
        let b = RestrictedOperator::big_box_scaled(own, 0.4, 3.0).unwrap();
        let diff = (a.matrix() - b.matrix()).abs().max();
        assert!(diff <= 1e-10 * a.matrix().abs().max(), "{diff}");
    }

    #[test]
    fn off_diagonals_nonpositive_and_forms_ordered() {
        let mask = interval_mask(31);
        for s in [0.25, 0.5, 0.75] {
            let navier = NavierOperator::new(mask.clone(), s).unwrap();
            for op in [
                RestrictedOperator::kernel_sum(mask.clone(), s).unwrap(),
                RestrictedOperator::big_box_scaled(mask.clone(), s, 4.0).unwrap(),
            ] {
                let m = op.matrix();
                for i in 0..31 {
                    for j in 0..31 {
                        if i != j {
                            assert!(m[(i, j)] <= 0.0);
                        }
                    }
                }
                let v: Vec<f64> = (0..31).map(|i| ((i * 13) % 7) as f64 - 3.0).collect();
                assert!(op.quadratic_form(&v).unwrap() < navier.quadratic_form(&v).unwrap());
            }
        }
    }

    #[test]
    fn backends_converge_as_the_box_grows() {
        let mask = interval_mask(21);
        let s = 0.5;
        let kernel = RestrictedOperator::kernel_sum(mask.clone(), s).unwrap();
        let v: Vec<f64> = (0..21).map(|i| ((i * 5) % 11) as f64 / 11.0 - 0.3).collect();
        let target = kernel.quadratic_form(&v).unwrap();
        let mut gaps = Vec::new();
        for factor in [2.0, 4.0, 8.0] {
            let bb = RestrictedOperator::big_box_scaled(mask.clone(), s, factor).unwrap();
            gaps.push(bb.quadratic_form(&v).unwrap() - target);
        }
        assert!(gaps.iter().all(|&g| g > 0.0));
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
    }

    #[test]
    fn navier_dominates_on_first_mode_and_zero() {
        let mask = interval_mask(63);
        let navier = NavierOperator::new(mask.clone(), 0.5).unwrap();
        let restricted = RestrictedOperator::kernel_sum(mask, 0.5).unwrap();
        let phi = navier.decomposition().eigenvector(0);
        let phi: Vec<f64> = phi.iter().map(|x| x.abs()).collect();
        let r = check_navier_dominates(&navier, &restricted, &phi).unwrap();
        assert!(r.pass && r.min_margin > 0.0);
        let r = check_navier_dominates(&navier, &restricted, &vec![0.0; 63]).unwrap();
        assert_eq!(r.min_margin, 0.0);
        let other = navier.with_order(0.25).unwrap();
        assert!(matches!(
            check_navier_dominates(&other, &restricted, &phi),
            Err(Error::OrderMismatch(..))
        ));
    }
}
