//! Extension characterisation of the spectral operator, one eigenmode at a
//! time.
//!
//! Writing the extension of `u = Σ c_j φ_j` as `w(x, y) = Σ c_j φ_j(x) θ_j(y)`,
//! each profile solves the degenerate two-point problem
//!
//! ```text
//!     (y^{1−2s} θ')' = λ y^{1−2s} θ,   θ(0) = 1,   θ(Y) = 0,
//! ```
//!
//! and `−lim_{y→0} y^{1−2s} θ'(y) = λ^s / c_s`. The profile is discretised by
//! a vertex-centred finite-volume scheme whose face conductances integrate the
//! weight exactly:
//!
//! ```text
//!     g_{j+1/2} = ( ∫_{y_j}^{y_{j+1}} t^{2s−1} dt )^{−1} = 2s / (y_{j+1}^{2s} − y_j^{2s})
//!     m_j       = ∫ t^{1−2s} dt over the dual cell [ŷ_{j−1/2}, ŷ_{j+1/2}]
//! ```
//!
//! The trace is the flux balance of the half cell at `y = 0`,
//! `T = g_{1/2}(θ_0 − θ_1) + λ m_0 θ_0`, which makes `T` equal to the
//! discrete energy `Σ g (Δθ)² + λ Σ m θ²` exactly (summation by parts).

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::check_len;
use crate::operator::SpdOperator;
use crate::par::Executor;
use crate::special::gamma;
use crate::spectral_op::NavierOperator;

/// Cells used by [`calibrate_cs`].
pub const CALIBRATION_CELLS: usize = 4000;
/// `Y √λ` used when a mesh is built per mode.
pub const DEFAULT_SPAN: f64 = 20.0;

/// Γ on `(0, 3)`, the range needed for the extension constant.
#[derive(Debug, Clone, Copy, Default)]
pub struct GammaTable;

impl GammaTable {
    pub const RANGE: (f64, f64) = (0.0, 3.0);

    pub fn eval(&self, x: f64) -> Option<f64> {
        (x > Self::RANGE.0 && x < Self::RANGE.1).then(|| gamma(x))
    }
}

/// `c_s = 2^{2s−1} Γ(s) / Γ(1−s)`.
pub fn closed_form_cs(s: f64) -> f64 {
    2f64.powf(2.0 * s - 1.0) * gamma(s) / gamma(1.0 - s)
}

fn check_s(s: f64) -> Result<()> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidOrder(s))
    }
}

pub fn default_grading(s: f64) -> f64 {
    2f64.max(2.0 / (2.0 - 2.0 * s))
}

/// Nodes `0 = y_0 < … < y_M = Y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YMesh {
    nodes: Vec<f64>,
}

impl YMesh {
    /// `y_j = Y (j/M)^γ`.
    pub fn graded(span: f64, cells: usize, grading: f64) -> Result<Self> {
        if !(span > 0.0) || cells < 2 || !(grading >= 1.0) {
            return Err(Error::Config(format!(
                "bad y-mesh: span {span}, {cells} cells, grading {grading}"
            )));
        }
        let m = cells as f64;
        let nodes = (0..=cells).map(|j| span * (j as f64 / m).powf(grading)).collect();
        Ok(Self { nodes })
    }

    /// Graded mesh with the default exponent for `s`.
    pub fn for_order(s: f64, span: f64, cells: usize) -> Result<Self> {
        Self::graded(span, cells, default_grading(s))
    }

    /// Append cells, each `ratio` times longer than the previous one, until
    /// the mesh reaches `new_span`. The existing nodes are kept unchanged.
    pub fn extended(&self, new_span: f64, ratio: f64) -> Result<Self> {
        let last = self.span();
        if !(new_span > last) || !(ratio >= 1.0) {
            return Err(Error::Config("extension must lengthen the mesh".into()));
        }
        let mut nodes = self.nodes.clone();
        let mut h = last - nodes[nodes.len() - 2];
        let mut y = last;
        while y < new_span {
            h *= ratio;
            y = (y + h).min(new_span);
            if new_span - y < 0.5 * h {
                y = new_span;
            }
            nodes.push(y);
        }
        Ok(Self { nodes })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { nodes: self.nodes.iter().map(|y| y * factor).collect() }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn cells(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn span(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeProfile {
    pub s: f64,
    pub lambda: f64,
    pub y: Vec<f64>,
    pub theta: Vec<f64>,
    /// `θ_0 − θ_j`, kept separately because it is accurate where `θ ≈ θ_0`.
    pub deficit: Vec<f64>,
}

impl ModeProfile {
    /// `0 < θ_j < 1` inside and strictly decreasing, for unit boundary data.
    /// Tested on the deficit: next to `y = 0` the profile itself rounds to 1.
    pub fn satisfies_maximum_principle(&self) -> bool {
        let n = self.deficit.len();
        let top = self.deficit[n - 1];
        self.deficit[1..n - 1].iter().all(|&d| d > 0.0 && d < top)
            && self.deficit.windows(2).all(|w| w[1] > w[0])
    }
}

struct Coefficients {
    conductance: Vec<f64>,
    mass: Vec<f64>,
}

fn coefficients(s: f64, y: &[f64]) -> Coefficients {
    let m = y.len() - 1;
    let two_s = 2.0 * s;
    let conductance = (0..m)
        .map(|j| two_s / (y[j + 1].powf(two_s) - y[j].powf(two_s)))
        .collect();
    let p = 2.0 - two_s;
    let antiderivative = |t: f64| t.powf(p) / p;
    let mass = (0..m)
        .map(|j| {
            let lo = if j == 0 { 0.0 } else { 0.5 * (y[j - 1] + y[j]) };
            let hi = 0.5 * (y[j] + y[j + 1]);
            antiderivative(hi) - antiderivative(lo)
        })
        .collect();
    Coefficients { conductance, mass }
}

pub fn solve_mode_ode(s: f64, lambda: f64, mesh: &YMesh) -> Result<ModeProfile> {
    solve_mode_ode_with_boundary(s, lambda, mesh, 1.0)
}

/// Same as [`solve_mode_ode`] with `θ(0) = boundary`.
pub fn solve_mode_ode_with_boundary(s: f64, lambda: f64, mesh: &YMesh, boundary: f64) -> Result<ModeProfile> {
    check_s(s)?;
    if !(lambda > 0.0) {
        return Err(Error::Config(format!("mode eigenvalue must be positive, got {lambda}")));
    }
    let y = mesh.nodes();
    let m = mesh.cells();
    let Coefficients { conductance: g, mass } = coefficients(s, y);
    // Solve for the deficit φ = 1 − θ of the unit profile: near y = 0 it is
    // tiny and θ itself would round to 1, losing the flux entirely.
    //   g_{j−½}(φ_j − φ_{j−1}) + g_{j+½}(φ_j − φ_{j+1}) + λ m_j φ_j = λ m_j,
    //   φ_0 = 0, φ_M = 1.
    // Elimination runs from the top down: conductances grow towards y = 0,
    // so every pivot keeps its large term and nothing cancels.
    let n = m - 1;
    let mut diag: Vec<f64> = (1..m).map(|j| g[j - 1] + g[j] + lambda * mass[j]).collect();
    let mut rhs: Vec<f64> = (1..m).map(|j| lambda * mass[j]).collect();
    rhs[n - 1] += g[m - 1];
    for i in (1..n).rev() {
        // Row i couples to row i−1 through −g[i].
        let factor = g[i] / diag[i];
        diag[i - 1] -= factor * g[i];
        rhs[i - 1] += factor * rhs[i];
    }
    let mut phi = vec![0.0; m + 1];
    phi[1] = rhs[0] / diag[0];
    for i in 1..n {
        phi[i + 1] = (rhs[i] + g[i] * phi[i]) / diag[i];
    }
    phi[m] = 1.0;
    let theta = phi.iter().map(|p| boundary * (1.0 - p)).collect();
    let deficit = phi.iter().map(|p| boundary * p).collect();
    Ok(ModeProfile { s, lambda, y: y.to_vec(), theta, deficit })
}

/// `−lim y^{1−2s} θ'` as the half-cell flux balance at `y = 0`.
pub fn neumann_trace(profile: &ModeProfile) -> f64 {
    let c = coefficients(profile.s, &profile.y[..3.min(profile.y.len())]);
    c.conductance[0] * profile.deficit[1] + profile.lambda * c.mass[0] * profile.theta[0]
}

/// Discrete `∫ y^{1−2s} (θ'² + λ θ²) dy`.
pub fn mode_energy(profile: &ModeProfile) -> f64 {
    let c = coefficients(profile.s, &profile.y);
    let d = &profile.deficit;
    let t = &profile.theta;
    let grad: f64 = c.conductance.iter().enumerate().map(|(j, g)| g * (d[j + 1] - d[j]).powi(2)).sum();
    let zeroth: f64 = c.mass.iter().enumerate().map(|(j, m)| m * t[j] * t[j]).sum();
    grad + profile.lambda * zeroth
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub s: f64,
    pub calibrated: f64,
    pub closed_form: f64,
    pub relative_gap: f64,
}

/// `c_s = 1 / T(s, λ = 1)` on a fine reference mesh, cross-checked against
/// the closed form. A gap above 2% means the mode solver is broken.
pub fn calibrate_cs(s: f64) -> Result<Calibration> {
    calibrate_cs_on(s, &YMesh::for_order(s, DEFAULT_SPAN, CALIBRATION_CELLS)?)
}

pub fn calibrate_cs_on(s: f64, mesh: &YMesh) -> Result<Calibration> {
    let trace = neumann_trace(&solve_mode_ode(s, 1.0, mesh)?);
    let calibrated = 1.0 / trace;
    let closed_form = closed_form_cs(s);
    let relative_gap = (calibrated - closed_form).abs() / closed_form;
    if relative_gap > 0.02 {
        return Err(Error::Calibration { calibrated, closed_form });
    }
    Ok(Calibration { s, calibrated, closed_form, relative_gap })
}

/// Mesh used for one mode: `Y = span/√λ`, `cells` cells graded for `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeMesh {
    pub cells: usize,
    pub span: f64,
}

impl Default for ModeMesh {
    fn default() -> Self {
        Self { cells: 400, span: DEFAULT_SPAN }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyIdentity {
    /// `⟨L^s v, v⟩`
    pub form: f64,
    /// `c_s Σ_j ⟨v, φ_j⟩² E_j`
    pub extension_energy: f64,
    pub relative_error: f64,
}

/// Compare the operator's quadratic form with the `c_s`-scaled energy of the
/// semidiscrete extension of `v`. `c_s` is the closed form, so the result
/// measures the mode solver rather than being exact by calibration.
pub fn energy_identity_check(
    navier: &NavierOperator,
    v: &[f64],
    mesh: &ModeMesh,
    exec: &Executor,
) -> Result<EnergyIdentity> {
    check_len(v, navier.len())?;
    let s = navier.order();
    check_s(s)?;
    let decomposition = navier.decomposition();
    let coefficients = decomposition.coefficients(v)?;
    let modes: Vec<(f64, f64)> = decomposition
        .eigenvalues()
        .iter()
        .zip(&coefficients)
        .filter(|(_, c)| **c != 0.0)
        .map(|(&l, &c)| (l, c))
        .collect();
    let base = YMesh::for_order(s, mesh.span, mesh.cells)?;
    let energies = exec.try_map(&modes, |&(lambda, _)| {
        let profile = solve_mode_ode(s, lambda, &base.scaled(1.0 / lambda.sqrt()))?;
        Ok::<_, Error>(mode_energy(&profile))
    })?;
    let energy: f64 = modes.iter().zip(&energies).map(|((_, c), e)| c * c * e).sum();
    let extension_energy = closed_form_cs(s) * energy;
    let form = navier.quadratic_form(v)?;
    let relative_error = if form == 0.0 && extension_energy == 0.0 {
        0.0
    } else {
        (extension_energy - form).abs() / form.abs().max(f64::MIN_POSITIVE)
    };
    Ok(EnergyIdentity { form, extension_energy, relative_error })
}

/// Plot-ready `y,theta` rows.
pub fn profile_csv(profile: &ModeProfile) -> String {
    let mut out = String::from("y,theta\n");
    for (y, t) in profile.y.iter().zip(&profile.theta) {
        let _ = writeln!(out, "{y:.17e},{t:.17e}");
    }
    out
}
