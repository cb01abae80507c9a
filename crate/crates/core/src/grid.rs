//! Uniform tensor grids on boxes, node masks standing for domains, and
//! zero-extension / restriction between nested masks.
//!
//! A [`BoxGrid`] with `n` interior nodes on `(a, b)` has spacing
//! `h = (b - a) / (n + 1)`; node `i` sits at `a + (i + 1) h`. Boundary
//! layers are never stored. In 2D nodes are numbered x-fastest.

use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack when comparing node distances against a dilation radius.
const RADIUS_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxGrid {
    extents: Vec<[f64; 2]>,
    nodes: Vec<usize>,
}

impl BoxGrid {
    pub fn new(extents: Vec<[f64; 2]>, nodes: Vec<usize>) -> Result<Self> {
        if extents.is_empty() || extents.len() > 2 {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1 or 2, got {}",
                extents.len()
            )));
        }
        if extents.len() != nodes.len() {
            return Err(Error::InvalidGrid(
                "extents and node counts differ in length".into(),
            ));
        }
        for (axis, (&[a, b], &n)) in extents.iter().zip(&nodes).enumerate() {
            if !(a.is_finite() && b.is_finite() && b > a) {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis}: extent ({a}, {b}) is not a proper interval"
                )));
            }
            if n == 0 {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis}: needs at least one interior node"
                )));
            }
        }
        Ok(Self { extents, nodes })
    }

    pub fn interval(a: f64, b: f64, nodes: usize) -> Result<Self> {
        Self::new(vec![[a, b]], vec![nodes])
    }

    pub fn rectangle(x: [f64; 2], y: [f64; 2], nx: usize, ny: usize) -> Result<Self> {
        Self::new(vec![x, y], vec![nx, ny])
    }

    /// `(0, 1)` with `nodes` interior nodes.
    pub fn unit_interval(nodes: usize) -> Result<Self> {
        Self::interval(0.0, 1.0, nodes)
    }

    /// `(0, 1)^2` with `nodes` interior nodes per axis.
    pub fn unit_square(nodes: usize) -> Result<Self> {
        Self::rectangle([0.0, 1.0], [0.0, 1.0], nodes, nodes)
    }

    pub fn dim(&self) -> usize {
        self.extents.len()
    }

    pub fn extents(&self) -> &[[f64; 2]] {
        &self.extents
    }

    pub fn nodes_per_axis(&self) -> &[usize] {
        &self.nodes
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        let [a, b] = self.extents[axis];
        (b - a) / (self.nodes[axis] + 1) as f64
    }

    pub fn spacings(&self) -> Vec<f64> {
        (0..self.dim()).map(|a| self.spacing(a)).collect()
    }

    /// Quadrature weight of one node, `h_x` or `h_x h_y`.
    pub fn cell_weight(&self) -> f64 {
        self.spacings().iter().product()
    }

    /// Total number of interior nodes.
    pub fn len(&self) -> usize {
        self.nodes.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn multi_index(&self, linear: usize) -> [usize; 2] {
        match self.dim() {
            1 => [linear, 0],
            _ => [linear % self.nodes[0], linear / self.nodes[0]],
        }
    }

    pub fn linear_index(&self, multi: [usize; 2]) -> usize {
        match self.dim() {
            1 => multi[0],
            _ => multi[0] + self.nodes[0] * multi[1],
        }
    }

    pub fn coordinate(&self, axis: usize, index: usize) -> f64 {
        self.extents[axis][0] + (index + 1) as f64 * self.spacing(axis)
    }

    pub fn coords(&self, linear: usize) -> Vec<f64> {
        let mi = self.multi_index(linear);
        (0..self.dim()).map(|a| self.coordinate(a, mi[a])).collect()
    }

    /// Squared Euclidean distance between two nodes, computed from index
    /// offsets so that lattice distances are exact multiples of `h`.
    pub fn distance_sq(&self, p: usize, q: usize) -> f64 {
        let (a, b) = (self.multi_index(p), self.multi_index(q));
        (0..self.dim())
            .map(|ax| {
                let d = (a[ax] as f64 - b[ax] as f64) * self.spacing(ax);
                d * d
            })
            .sum()
    }

    /// Linear indices of the axis neighbours of `linear` that are interior
    /// nodes of the grid.
    pub fn axis_neighbors(&self, linear: usize) -> Vec<(usize, usize)> {
        let mi = self.multi_index(linear);
        let mut out = Vec::with_capacity(2 * self.dim());
        for axis in 0..self.dim() {
            if mi[axis] > 0 {
                let mut m = mi;
                m[axis] -= 1;
                out.push((axis, self.linear_index(m)));
            }
            if mi[axis] + 1 < self.nodes[axis] {
                let mut m = mi;
                m[axis] += 1;
                out.push((axis, self.linear_index(m)));
            }
        }
        out
    }
}

/// A subset of the interior nodes of a grid, sorted by linear index.
#[derive(Debug, Clone)]
pub struct DomainMask {
    grid: Arc<BoxGrid>,
    indices: Vec<usize>,
    position: Vec<Option<usize>>,
}

impl PartialEq for DomainMask {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.indices == other.indices
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct MaskFile {
    dim: usize,
    extents: Vec<[f64; 2]>,
    nodes_per_axis: Vec<usize>,
    included_indices: Vec<usize>,
}

impl DomainMask {
    pub fn build<P>(grid: Arc<BoxGrid>, predicate: P) -> Result<Self>
    where
        P: Fn(&[f64]) -> bool,
    {
        let indices: Vec<usize> = (0..grid.len())
            .filter(|&i| predicate(&grid.coords(i)))
            .collect();
        Self::from_sorted(grid, indices)
    }

    pub fn full(grid: Arc<BoxGrid>) -> Self {
        let indices = (0..grid.len()).collect();
        Self::from_sorted(grid, indices).expect("grids have at least one node")
    }

    pub fn from_indices(grid: Arc<BoxGrid>, mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        let before = indices.len();
        indices.dedup();
        if indices.len() != before {
            return Err(Error::InvalidGrid("duplicate mask indices".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= grid.len()) {
            return Err(Error::InvalidGrid(format!(
                "index {bad} is not an interior node (grid has {})",
                grid.len()
            )));
        }
        Self::from_sorted(grid, indices)
    }

    fn from_sorted(grid: Arc<BoxGrid>, indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptyDomain);
        }
        let mut position = vec![None; grid.len()];
        for (p, &i) in indices.iter().enumerate() {
            position[i] = Some(p);
        }
        Ok(Self {
            grid,
            indices,
            position,
        })
    }

    pub fn grid(&self) -> &Arc<BoxGrid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn weight(&self) -> f64 {
        self.grid.cell_weight()
    }

    pub fn contains(&self, linear: usize) -> bool {
        self.position.get(linear).is_some_and(|p| p.is_some())
    }

    /// Position within the mask of grid node `linear`.
    pub fn position_of(&self, linear: usize) -> Option<usize> {
        self.position.get(linear).copied().flatten()
    }

    pub fn coords(&self, position: usize) -> Vec<f64> {
        self.grid.coords(self.indices[position])
    }

    pub fn is_full_box(&self) -> bool {
        self.indices.len() == self.grid.len()
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || self.grid == other.grid
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.same_grid(other) && self.indices.iter().all(|&i| other.contains(i))
    }

    /// Mask positions of the axis neighbours of `position` that lie in the mask.
    pub fn neighbors(&self, position: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.grid
            .axis_neighbors(self.indices[position])
            .into_iter()
            .filter_map(|(axis, lin)| self.position_of(lin).map(|p| (axis, p)))
    }

    /// Number of connected components under axis adjacency.
    pub fn connected_components(&self) -> usize {
        let mut seen = vec![false; self.len()];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for start in 0..self.len() {
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            queue.push_back(start);
            while let Some(p) = queue.pop_front() {
                for (_, q) in self.neighbors(p) {
                    if !seen[q] {
                        seen[q] = true;
                        queue.push_back(q);
                    }
                }
            }
        }
        count
    }

    /// Short deterministic identifier (dimension, sizes and an FNV-1a hash of
    /// the grid and index set).
    pub fn fingerprint(&self) -> String {
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |x: u64| {
            for byte in x.to_le_bytes() {
                hash ^= byte as u64;
                hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        for (&[a, b], &n) in self.grid.extents.iter().zip(&self.grid.nodes) {
            feed(a.to_bits());
            feed(b.to_bits());
            feed(n as u64);
        }
        for &i in &self.indices {
            feed(i as u64);
        }
        let dims: Vec<String> = self.grid.nodes.iter().map(|n| n.to_string()).collect();
        format!("{}d-{}-m{}-{:016x}", self.dim(), dims.join("x"), self.len(), hash)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = MaskFile {
            dim: self.dim(),
            extents: self.grid.extents.clone(),
            nodes_per_axis: self.grid.nodes.clone(),
            included_indices: self.indices.clone(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MaskFile = serde_json::from_str(text)?;
        if file.dim != file.extents.len() {
            return Err(Error::InvalidGrid("dim disagrees with extents".into()));
        }
        let grid = Arc::new(BoxGrid::new(file.extents, file.nodes_per_axis)?);
        Self::from_indices(grid, file.included_indices)
    }
}

/// Positions in `sup` of every node of `sub`.
pub fn embedding(sub: &DomainMask, sup: &DomainMask) -> Result<Vec<usize>> {
    if !sub.same_grid(sup) {
        return Err(Error::NotNested("masks live on different grids".into()));
    }
    sub.indices
        .iter()
        .map(|&i| {
            sup.position_of(i).ok_or_else(|| {
                Error::NotNested(format!("node {i} of the submask is missing from the supermask"))
            })
        })
        .collect()
}

pub fn extend_by_zero(v: &[f64], sub: &DomainMask, sup: &DomainMask) -> Result<Vec<f64>> {
    check_len(v, sub.len())?;
    let map = embedding(sub, sup)?;
    let mut out = vec![0.0; sup.len()];
    for (&x, &p) in v.iter().zip(&map) {
        out[p] = x;
    }
    Ok(out)
}

pub fn restrict(v: &[f64], sup: &DomainMask, sub: &DomainMask) -> Result<Vec<f64>> {
    check_len(v, sup.len())?;
    let map = embedding(sub, sup)?;
    Ok(map.iter().map(|&p| v[p]).collect())
}

pub(crate) fn check_len(v: &[f64], expected: usize) -> Result<()> {
    if v.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: v.len(),
        });
    }
    Ok(())
}

/// All nodes of `enclosing` within Euclidean distance `radius` of `base`.
pub fn dilate(base: &DomainMask, enclosing: &DomainMask, radius: f64) -> Result<DomainMask> {
    if !base.is_subset_of(enclosing) {
        return Err(Error::NotNested("base is not contained in the enclosing mask".into()));
    }
    let grid = base.grid();
    let r2 = radius * radius * (1.0 + RADIUS_SLACK);
    let indices = enclosing
        .indices
        .iter()
        .copied()
        .filter(|&i| {
            base.contains(i) || base.indices.iter().any(|&b| grid.distance_sq(i, b) <= r2)
        })
        .collect();
    DomainMask::from_sorted(enclosing.grid.clone(), indices)
}

#[derive(Debug, Clone)]
pub struct FamilyLevel {
    pub radius: f64,
    pub mask: DomainMask,
}

/// `Ω ⊆ … ⊆ Ω_2 ⊆ Ω_1 ⊆ B_R`, levels ordered by decreasing dilation radius.
#[derive(Debug, Clone)]
pub struct NestedFamily {
    pub base: DomainMask,
    pub enclosing: DomainMask,
    pub levels: Vec<FamilyLevel>,
    /// `embeddings[k]` maps positions of level `k + 1` into level `k`; the
    /// last entry maps the base into the final level.
    pub embeddings: Vec<Vec<usize>>,
    pub warnings: Vec<String>,
}

pub fn make_shrinking_family(
    base: &DomainMask,
    enclosing: &DomainMask,
    radii: &[f64],
) -> Result<NestedFamily> {
    if radii.is_empty() {
        return Err(Error::Config("at least one dilation radius is required".into()));
    }
    if radii.iter().any(|&r| !(r.is_finite() && r > 0.0)) {
        return Err(Error::Config("dilation radii must be positive".into()));
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config("dilation radii must be strictly decreasing".into()));
    }
    let mut warnings = Vec::new();
    let cell = base
        .grid()
        .spacings()
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let last = *radii.last().unwrap();
    if last < cell * (1.0 - RADIUS_SLACK) {
        warnings.push(format!(
            "final radius {last} is below one grid cell ({cell}); the last levels coincide with the base"
        ));
    }

    let levels = radii
        .iter()
        .map(|&radius| {
            dilate(base, enclosing, radius).map(|mask| FamilyLevel { radius, mask })
        })
        .collect::<Result<Vec<_>>>()?;

    if levels.iter().all(|l| l.mask.len() == base.len()) {
        warnings.push("no level is larger than the base domain".into());
    }

    let mut embeddings = Vec::with_capacity(levels.len());
    for pair in levels.windows(2) {
        embeddings.push(embedding(&pair[1].mask, &pair[0].mask)?);
    }
    embeddings.push(embedding(base, &levels.last().unwrap().mask)?);

    Ok(NestedFamily {
        base: base.clone(),
        enclosing: enclosing.clone(),
        levels,
        embeddings,
        warnings,
    })
}
