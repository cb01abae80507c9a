//! Eigendecomposition of the discrete Dirichlet Laplacian on a mask and the
//! spectral (Navier) fractional operator built from it,
//!
//! ```text
//! L^s v = Σ_j λ_j^s ⟨v, φ_j⟩ φ_j,     ⟨u, v⟩ = h^dim Σ_i u_i v_i.
//! ```
//!
//! Full tensor boxes use the closed-form sine eigenpairs; any other mask goes
//! through a dense symmetric eigensolver.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{check_len, BoxGrid, DomainMask};
use crate::operator::SpdOperator;

/// Largest mask handled by the dense eigensolver.
pub const DENSE_LIMIT: usize = 2000;

/// Masks up to this size get their matrix built eagerly.
pub const MATERIALIZE_LIMIT: usize = 512;

const EIGEN_MAX_SWEEPS: usize = 10_000;

/// Relative gap below which neighbouring eigenvalues form one cluster.
const TIE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenRoute {
    ClosedForm,
    Dense,
}

#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    /// Column `j` is `φ_j`, orthonormal in the weighted inner product.
    eigenvectors: DMatrix<f64>,
    weight: f64,
    route: EigenRoute,
}

/// Five-point (2D) / three-point (1D) Dirichlet Laplacian restricted to the
/// mask; neighbours outside the mask count as zero.
pub fn stencil_matrix(mask: &DomainMask) -> DMatrix<f64> {
    let m = mask.len();
    let inv_h2: Vec<f64> = mask.grid().spacings().iter().map(|h| 1.0 / (h * h)).collect();
    let diag: f64 = inv_h2.iter().map(|c| 2.0 * c).sum();
    let mut a = DMatrix::zeros(m, m);
    for p in 0..m {
        a[(p, p)] = diag;
        for (axis, q) in mask.neighbors(p) {
            a[(p, q)] = -inv_h2[axis];
        }
    }
    a
}

/// Stencil applied to a mask vector without forming the matrix.
pub fn apply_stencil(mask: &DomainMask, v: &[f64]) -> Result<Vec<f64>> {
    check_len(v, mask.len())?;
    let inv_h2: Vec<f64> = mask.grid().spacings().iter().map(|h| 1.0 / (h * h)).collect();
    let diag: f64 = inv_h2.iter().map(|c| 2.0 * c).sum();
    Ok((0..mask.len())
        .map(|p| {
            let mut acc = diag * v[p];
            for (axis, q) in mask.neighbors(p) {
                acc -= inv_h2[axis] * v[q];
            }
            acc
        })
        .collect())
}

pub fn eigendecompose(mask: &DomainMask) -> Result<SpectralDecomposition> {
    if mask.is_full_box() {
        eigendecompose_closed_form(mask)
    } else {
        eigendecompose_dense(mask)
    }
}

/// Sine eigenpairs of a full tensor box:
/// `λ = Σ_a (4/h_a²) sin²(k_a π / (2(n_a+1)))`, `φ = Π_a √(2/L_a) sin(k_a π (i_a+1)/(n_a+1))`.
pub fn eigendecompose_closed_form(mask: &DomainMask) -> Result<SpectralDecomposition> {
    if !mask.is_full_box() {
        return Err(Error::InvalidGrid(
            "closed-form eigenpairs need a full-box mask".into(),
        ));
    }
    let grid = mask.grid();
    let dim = grid.dim();
    let (axis_values, axis_vectors): (Vec<_>, Vec<_>) =
        (0..dim).map(|a| axis_spectrum(grid, a)).unzip();

    let m = mask.len();
    let mut modes: Vec<([usize; 2], f64)> = (0..m)
        .map(|lin| {
            let k = grid.multi_index(lin);
            let lambda = (0..dim).map(|a| axis_values[a][k[a]]).sum();
            (k, lambda)
        })
        .collect();
    modes.sort_by(|x, y| x.1.total_cmp(&y.1));

    let mut vectors = DMatrix::zeros(m, m);
    for (col, (k, _)) in modes.iter().enumerate() {
        for lin in 0..m {
            let i = grid.multi_index(lin);
            let mut value = 1.0;
            for a in 0..dim {
                value *= axis_vectors[a][(i[a], k[a])];
            }
            vectors[(lin, col)] = value;
        }
    }

    Ok(SpectralDecomposition {
        eigenvalues: modes.into_iter().map(|(_, l)| l).collect(),
        eigenvectors: vectors,
        weight: mask.weight(),
        route: EigenRoute::ClosedForm,
    })
}

/// Sine spectrum of the 1D three-point Laplacian along one axis.
fn axis_spectrum(grid: &BoxGrid, axis: usize) -> (Vec<f64>, DMatrix<f64>) {
    let n = grid.nodes_per_axis()[axis];
    let h = grid.spacing(axis);
    let np1 = (n + 1) as f64;
    let values = (1..=n)
        .map(|k| {
            let t = (k as f64 * PI / (2.0 * np1)).sin();
            4.0 / (h * h) * t * t
        })
        .collect();
    let [lo, hi] = grid.extents()[axis];
    let norm = (2.0 / (hi - lo)).sqrt();
    let vectors = DMatrix::from_fn(n, n, |i, k| {
        norm * (((k + 1) * (i + 1)) as f64 * PI / np1).sin()
    });
    (values, vectors)
}

/// Closed-form eigenvalues of a full box (grid order, unsorted) and the rows
/// of its eigenvector matrix at the requested grid nodes.
pub(crate) fn closed_form_rows(grid: &BoxGrid, rows: &[usize]) -> (Vec<f64>, DMatrix<f64>) {
    let dim = grid.dim();
    let (axis_values, axis_vectors): (Vec<_>, Vec<_>) =
        (0..dim).map(|a| axis_spectrum(grid, a)).unzip();
    let modes = grid.len();
    let values = (0..modes)
        .map(|lin| {
            let k = grid.multi_index(lin);
            (0..dim).map(|a| axis_values[a][k[a]]).sum()
        })
        .collect();
    let block = DMatrix::from_fn(rows.len(), modes, |r, mode| {
        let i = grid.multi_index(rows[r]);
        let k = grid.multi_index(mode);
        (0..dim).map(|a| axis_vectors[a][(i[a], k[a])]).product()
    });
    (values, block)
}

/// Dense symmetric eigensolve of the stencil matrix (any mask).
pub fn eigendecompose_dense(mask: &DomainMask) -> Result<SpectralDecomposition> {
    let m = mask.len();
    if m > DENSE_LIMIT {
        return Err(Error::TooLarge {
            size: m,
            limit: DENSE_LIMIT,
        });
    }
    let a = stencil_matrix(mask);
    let eig = a
        .clone()
        .try_symmetric_eigen(f64::EPSILON, EIGEN_MAX_SWEEPS)
        .ok_or(Error::EigenNoConvergence {
            residual: f64::INFINITY,
        })?;

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(m, m);
    for (col, &i) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).clone_owned();
        // Fix the sign so that the largest-magnitude entry is positive.
        let imax = v.iamax();
        if v[imax] < 0.0 {
            v.neg_mut();
        }
        vectors.set_column(col, &v);
    }
    reorthonormalize_clusters(&eigenvalues, &mut vectors);

    let scale = 1.0 / mask.weight().sqrt();
    vectors *= scale;

    let decomposition = SpectralDecomposition {
        eigenvalues,
        eigenvectors: vectors,
        weight: mask.weight(),
        route: EigenRoute::Dense,
    };
    let residual = decomposition.eigen_residual(&a);
    let lambda_max = *decomposition.eigenvalues.last().unwrap();
    if !(residual <= 1e-8 * lambda_max) {
        return Err(Error::EigenNoConvergence { residual });
    }
    Ok(decomposition)
}

/// Modified Gram–Schmidt inside every cluster of (numerically) tied eigenvalues.
fn reorthonormalize_clusters(values: &[f64], vectors: &mut DMatrix<f64>) {
    let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
    let mut start = 0;
    while start < values.len() {
        let mut end = start + 1;
        while end < values.len() && values[end] - values[end - 1] <= TIE_TOLERANCE * scale {
            end += 1;
        }
        if end - start > 1 {
            for j in start..end {
                let mut v: DVector<f64> = vectors.column(j).clone_owned();
                for i in start..j {
                    let u = vectors.column(i);
                    let c = u.dot(&v);
                    v.axpy(-c, &u, 1.0);
                }
                let norm = v.norm();
                vectors.set_column(j, &(v / norm));
            }
        }
        start = end;
    }
}

impl SpectralDecomposition {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, j: usize) -> Vec<f64> {
        self.eigenvectors.column(j).iter().copied().collect()
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn route(&self) -> EigenRoute {
        self.route
    }

    /// Weighted mode coefficients `c_j = ⟨v, φ_j⟩`.
    pub fn coefficients(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(v, self.len())?;
        let x = DVector::from_column_slice(v);
        let c = self.eigenvectors.tr_mul(&x) * self.weight;
        Ok(c.as_slice().to_vec())
    }

    /// `Σ_j c_j φ_j`.
    pub fn synthesize(&self, coefficients: &[f64]) -> Result<Vec<f64>> {
        check_len(coefficients, self.len())?;
        let c = DVector::from_column_slice(coefficients);
        Ok((&self.eigenvectors * c).as_slice().to_vec())
    }

    /// `Σ_j λ_j^p ⟨v, φ_j⟩ φ_j` for any real exponent `p`.
    pub fn apply_power(&self, v: &[f64], p: f64) -> Result<Vec<f64>> {
        let mut c = self.coefficients(v)?;
        for (cj, &l) in c.iter_mut().zip(&self.eigenvalues) {
            *cj *= l.powf(p);
        }
        self.synthesize(&c)
    }

    /// `Σ_j λ_j^p ⟨v, φ_j⟩²`.
    pub fn power_form(&self, v: &[f64], p: f64) -> Result<f64> {
        let c = self.coefficients(v)?;
        Ok(c.iter()
            .zip(&self.eigenvalues)
            .map(|(cj, l)| l.powf(p) * cj * cj)
            .sum())
    }

    /// Dense matrix of `v ↦ Σ λ_j^p ⟨v,φ_j⟩ φ_j`, i.e. `Φ Λ^p Φᵀ h^dim`.
    pub fn power_matrix(&self, p: f64) -> DMatrix<f64> {
        let mut scaled = self.eigenvectors.clone();
        for (j, &l) in self.eigenvalues.iter().enumerate() {
            let f = l.powf(p) * self.weight;
            scaled.column_mut(j).scale_mut(f);
        }
        let mut out = &scaled * self.eigenvectors.transpose();
        // Symmetrize away rounding.
        let t = out.transpose();
        out += t;
        out *= 0.5;
        out
    }

    /// `max |Φᵀ W Φ − I|`.
    pub fn orthonormality_residual(&self) -> f64 {
        let g = self.eigenvectors.tr_mul(&self.eigenvectors) * self.weight;
        let m = self.len();
        let mut worst: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).abs());
            }
        }
        worst
    }

    /// `max_j ‖A φ_j − λ_j φ_j‖_∞` for the given stencil matrix.
    pub fn eigen_residual(&self, stencil: &DMatrix<f64>) -> f64 {
        let r = stencil * &self.eigenvectors;
        let mut worst: f64 = 0.0;
        for (j, &l) in self.eigenvalues.iter().enumerate() {
            for i in 0..self.len() {
                worst = worst.max((r[(i, j)] - l * self.eigenvectors[(i, j)]).abs());
            }
        }
        worst
    }
}

/// `(−Δ_Ω)^s` on a mask.
#[derive(Debug)]
pub struct NavierOperator {
    mask: Arc<DomainMask>,
    order: f64,
    decomposition: Arc<SpectralDecomposition>,
    dense: OnceLock<DMatrix<f64>>,
    inverse_factor: OnceLock<DMatrix<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorDump {
    pub mask_ref: String,
    pub s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backend: Option<String>,
    pub eigenvalues: Vec<f64>,
}

pub(crate) fn check_order(s: f64) -> Result<()> {
    if s > 0.0 && s <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidOrder(s))
    }
}

impl NavierOperator {
    pub fn new(mask: Arc<DomainMask>, order: f64) -> Result<Self> {
        check_order(order)?;
        let decomposition = Arc::new(eigendecompose(&mask)?);
        Self::with_decomposition(mask, decomposition, order)
    }

    pub fn with_decomposition(
        mask: Arc<DomainMask>,
        decomposition: Arc<SpectralDecomposition>,
        order: f64,
    ) -> Result<Self> {
        check_order(order)?;
        check_len(decomposition.eigenvalues(), mask.len())?;
        let op = Self {
            mask,
            order,
            decomposition,
            dense: OnceLock::new(),
            inverse_factor: OnceLock::new(),
        };
        if op.mask.len() <= MATERIALIZE_LIMIT {
            op.matrix();
        }
        Ok(op)
    }

    /// Same domain and eigenpairs, different order.
    pub fn with_order(&self, order: f64) -> Result<Self> {
        Self::with_decomposition(self.mask.clone(), self.decomposition.clone(), order)
    }

    pub fn mask_arc(&self) -> &Arc<DomainMask> {
        &self.mask
    }

    pub fn decomposition(&self) -> &Arc<SpectralDecomposition> {
        &self.decomposition
    }

    /// `L^{s/2} v`, so that `‖L^{s/2} v‖² = ⟨L^s v, v⟩`.
    pub fn half_apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.decomposition.apply_power(v, 0.5 * self.order)
    }

    /// Dense `(L^s)^{-1}`; all entries are positive on connected masks.
    pub fn inverse_matrix(&self) -> &DMatrix<f64> {
        self.inverse_factor
            .get_or_init(|| self.decomposition.power_matrix(-self.order))
    }

    pub fn dump(&self) -> OperatorDump {
        OperatorDump {
            mask_ref: self.mask.fingerprint(),
            s: self.order,
            backend: None,
            eigenvalues: self.decomposition.eigenvalues().to_vec(),
        }
    }

    pub fn dump_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.dump())?)
    }
}

impl SpdOperator for NavierOperator {
    fn mask(&self) -> &DomainMask {
        &self.mask
    }

    fn order(&self) -> f64 {
        self.order
    }

    fn matrix(&self) -> &DMatrix<f64> {
        self.dense
            .get_or_init(|| self.decomposition.power_matrix(self.order))
    }

    fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.decomposition.apply_power(v, self.order)
    }

    fn solve(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.decomposition.apply_power(f, -self.order)
    }

    fn label(&self) -> String {
        format!("navier(s={}, {})", self.order, self.mask.fingerprint())
    }

    fn quadratic_form(&self, v: &[f64]) -> Result<f64> {
        self.decomposition.power_form(v, self.order)
    }
}

/// Dense matrix as CSV, one row per line, full precision.
pub fn matrix_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{:e}", m[(i, j)]);
        }
        out.push('\n');
    }
    out
}
