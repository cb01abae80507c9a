//! Masks, obstacles and forcings used by the checks.

use std::sync::Arc;

use rand::Rng;

use crate::error::Result;
use crate::grid::{dilate, BoxGrid, DomainMask};

use super::MAX_2D_SIDE;

pub fn unit_interval(n: usize) -> Result<Arc<DomainMask>> {
    Ok(Arc::new(DomainMask::full(Arc::new(BoxGrid::unit_interval(n)?))))
}

/// `n` nodes in `(0, 1)` with spacing `1/(n+1)`, inside a box padded by
/// `pad` extra nodes on each side.
pub fn padded_interval(n: usize, pad: usize) -> Result<(Arc<DomainMask>, Arc<DomainMask>)> {
    let h = 1.0 / (n + 1) as f64;
    let grid = Arc::new(BoxGrid::interval(-(pad as f64) * h, 1.0 + pad as f64 * h, n + 2 * pad)?);
    let base = DomainMask::from_indices(grid.clone(), (pad..pad + n).collect())?;
    Ok((Arc::new(base), Arc::new(DomainMask::full(grid))))
}

#[derive(Debug, Clone)]
pub struct NestedPair {
    pub name: String,
    pub inner: Arc<DomainMask>,
    pub outer: Arc<DomainMask>,
}

fn pair(name: impl Into<String>, inner: DomainMask, outer: DomainMask) -> NestedPair {
    NestedPair { name: name.into(), inner: Arc::new(inner), outer: Arc::new(outer) }
}

/// Ten nested pairs `Ω ⊊ Ω̃`: six in 1D on an `n`-node interval, four in 2D.
pub fn nested_pairs<R: Rng>(n: usize, rng: &mut R) -> Result<Vec<NestedPair>> {
    let n = n.max(7);
    let g1 = Arc::new(BoxGrid::unit_interval(n)?);
    let full1 = DomainMask::full(g1.clone());
    let mut out = Vec::new();

    out.push(pair(
        "middle half in interval",
        DomainMask::build(g1.clone(), |x| x[0] > 0.25 && x[0] < 0.75)?,
        full1.clone(),
    ));
    for k in 0..3 {
        let len = rng.random_range(3..=(n / 2).max(3));
        let start = rng.random_range(1..n - len);
        let inner = DomainMask::from_indices(g1.clone(), (start..start + len).collect())?;
        let cells = rng.random_range(1..=4) as f64;
        let outer = dilate(&inner, &full1, cells * g1.spacing(0))?;
        out.push(pair(format!("random sub-interval #{k} dilated by {cells} cells"), inner, outer));
    }
    out.push(pair(
        "two intervals in interval",
        DomainMask::build(g1.clone(), |x| (x[0] > 0.1 && x[0] < 0.4) || (x[0] > 0.55 && x[0] < 0.9))?,
        full1.clone(),
    ));
    let hole = n / 2;
    out.push(pair(
        "interval minus its centre node",
        DomainMask::from_indices(g1.clone(), (0..n).filter(|&i| i != hole).collect())?,
        full1,
    ));

    let side = n.min(MAX_2D_SIDE);
    let g2 = Arc::new(BoxGrid::unit_square(side)?);
    let full2 = DomainMask::full(g2.clone());
    let r2 = |x: &[f64]| (x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2);
    out.push(pair(
        "disc in larger disc",
        DomainMask::build(g2.clone(), |x| r2(x) < 0.3 * 0.3)?,
        DomainMask::build(g2.clone(), |x| r2(x) < 0.45 * 0.45)?,
    ));
    out.push(pair(
        "L-shape in square",
        DomainMask::build(g2.clone(), |x| !(x[0] > 0.5 && x[1] > 0.5))?,
        full2.clone(),
    ));
    out.push(pair(
        "annulus in square",
        DomainMask::build(g2.clone(), |x| (0.15 * 0.15..0.45 * 0.45).contains(&r2(x)))?,
        full2.clone(),
    ));
    out.push(pair(
        "sub-rectangle in square",
        DomainMask::build(g2, |x| x[0] > 0.2 && x[0] < 0.7 && x[1] > 0.3 && x[1] < 0.9)?,
        full2,
    ));
    Ok(out)
}

/// Coordinates rescaled to `[0, 1]` along each axis of the mask's grid box.
fn unit_coords(mask: &DomainMask, position: usize) -> Vec<f64> {
    let grid = mask.grid();
    mask.coords(position)
        .iter()
        .enumerate()
        .map(|(axis, x)| {
            let [a, b] = grid.extents()[axis];
            (x - a) / (b - a)
        })
        .collect()
}

pub fn random_vector<R: Rng>(rng: &mut R, m: usize) -> Vec<f64> {
    (0..m).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn random_nonnegative<R: Rng>(rng: &mut R, m: usize) -> Vec<f64> {
    (0..m).map(|_| rng.random_range(0.0..1.0)).collect()
}

/// Nonnegative vector with roughly a fifth of its entries nonzero.
pub fn sparse_nonnegative<R: Rng>(rng: &mut R, m: usize) -> Vec<f64> {
    let mut g: Vec<f64> = (0..m)
        .map(|_| if rng.random_bool(0.2) { rng.random_range(0.0..5.0) } else { 0.0 })
        .collect();
    if g.iter().all(|&x| x == 0.0) {
        let i = rng.random_range(0..m);
        g[i] = rng.random_range(0.5..5.0);
    }
    g
}

/// Sum of one to three parabolic caps, optionally shifted down so that the
/// obstacle changes sign.
pub fn random_obstacle<R: Rng>(rng: &mut R, mask: &DomainMask) -> Vec<f64> {
    let dim = mask.dim();
    let caps: Vec<(f64, Vec<f64>, f64)> = (0..rng.random_range(1..=3))
        .map(|_| {
            let height = rng.random_range(0.2..1.0);
            let centre = (0..dim).map(|_| rng.random_range(0.15..0.85)).collect();
            let width = rng.random_range(0.1..0.35);
            (height, centre, width)
        })
        .collect();
    let shift = if rng.random_bool(0.5) { rng.random_range(0.0..0.3) } else { 0.0 };
    (0..mask.len())
        .map(|p| {
            let x = unit_coords(mask, p);
            let cap = caps
                .iter()
                .map(|(h, c, w)| {
                    let d2: f64 = x.iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum();
                    h * (1.0 - d2 / (w * w)).max(0.0)
                })
                .fold(0.0, f64::max);
            cap - shift
        })
        .collect()
}

/// Smooth forcing `a Σ_k c_k sin(kπx̂)` (times `sin(πŷ)` in 2D).
pub fn random_forcing<R: Rng>(rng: &mut R, mask: &DomainMask, amplitude: f64) -> Vec<f64> {
    let coeffs: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
    let offset = rng.random_range(-0.5..0.5);
    (0..mask.len())
        .map(|p| {
            let x = unit_coords(mask, p);
            let series: f64 = coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c * ((k + 1) as f64 * std::f64::consts::PI * x[0]).sin())
                .sum();
            let transverse = if x.len() > 1 { (std::f64::consts::PI * x[1]).sin() } else { 1.0 };
            amplitude * (series + offset) * transverse
        })
        .collect()
}

/// Parabolic cap of height 1 supported on the middle third, zero elsewhere.
pub fn middle_third_bump(mask: &DomainMask) -> Vec<f64> {
    (0..mask.len())
        .map(|p| {
            let t = (unit_coords(mask, p)[0] - 0.5) * 6.0;
            // Nodes on the edge of the support must come out as exact zeros.
            let v = 1.0 - t * t;
            if v > 1e-12 { v } else { 0.0 }
        })
        .collect()
}

/// Two caps centred at `x̂ = 0.3` and `0.7`.
pub fn twin_bumps(mask: &DomainMask) -> Vec<f64> {
    (0..mask.len())
        .map(|p| {
            let x = unit_coords(mask, p)[0];
            let cap = |c: f64| (1.0 - ((x - c) / 0.12).powi(2)).max(0.0);
            0.8 * cap(0.3) + 0.6 * cap(0.7)
        })
        .collect()
}

/// `min(1, 3 sin(πx̂))`, positive on the whole mask.
pub fn plateau(mask: &DomainMask) -> Vec<f64> {
    (0..mask.len())
        .map(|p| {
            let x = unit_coords(mask, p);
            let s: f64 = x.iter().map(|&t| (std::f64::consts::PI * t).sin()).product();
            (3.0 * s).min(1.0) * 0.5
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn nested_pairs_are_strictly_nested() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pairs = nested_pairs(31, &mut rng).unwrap();
        assert_eq!(pairs.len(), 10);
        for p in pairs {
            assert!(p.inner.is_subset_of(&p.outer), "{}", p.name);
            assert!(p.inner.len() < p.outer.len(), "{}", p.name);
        }
    }

    #[test]
    fn padded_interval_layout() {
        let (base, big) = padded_interval(9, 4).unwrap();
        assert_eq!(base.len(), 9);
        assert_eq!(big.len(), 17);
        assert!((base.coords(0)[0] - 0.1).abs() < 1e-12);
        assert!((base.coords(8)[0] - 0.9).abs() < 1e-12);
    }

    #[test]
    fn bump_support() {
        let mask = unit_interval(29).unwrap();
        let psi = middle_third_bump(&mask);
        for (p, v) in psi.iter().enumerate() {
            let x = mask.coords(p)[0];
            assert_eq!(*v > 0.0, x > 1.0 / 3.0 + 1e-12 && x < 2.0 / 3.0 - 1e-12);
        }
    }
}
