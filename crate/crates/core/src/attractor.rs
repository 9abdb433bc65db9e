//! Nested fiber-disk approximations of the solenoid `∩ Fˡ(B)`.
//!
//! The depth-`n` cross-section over a fiber `t` is the union of the disks
//! `Fⁿ({tₙ} × D²)` over all backward branches `t ← t₁ ← … ← tₙ`. Each disk
//! has radius `λⁿ` and center `Σₖ λ^{k−1}·½e^{2πi tₖ}`. Branches are stored as
//! a parent-linked tree so that deep sections do not copy every itinerary.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circle::CirclePoint;
use crate::error::{Error, Result};
use crate::real::half_phase;
use crate::skew::{SkewMap, TorusPoint};

pub const MAX_SECTION_DEPTH: usize = 20;
pub const SECTION_BUDGET: u64 = 10_000_000;

/// One disk `Fⁿ(N_{tₙ})` of a cross-section.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiskRecord {
    pub fiber: CirclePoint,
    pub center: Complex64,
    pub radius: f64,
    pub depth: usize,
    /// `t₁ … tₙ`, with `g(t₁) = fiber` and `g(tₖ₊₁) = tₖ`.
    pub itinerary: Vec<CirclePoint>,
}

#[derive(Clone, Copy, Debug)]
struct TreeNode {
    t: CirclePoint,
    parent: u32,
}

#[derive(Clone, Debug)]
pub struct CrossSection {
    fiber: CirclePoint,
    depth: usize,
    radius: f64,
    /// `levels[k]` holds the branch points at depth `k + 1`.
    levels: Vec<Vec<TreeNode>>,
    centers: Vec<Complex64>,
}

/// Depth-`n` cross-section of the attractor over the fiber `t`.
pub fn cross_section(map: &SkewMap, fiber: CirclePoint, depth: usize) -> Result<CrossSection> {
    if depth > MAX_SECTION_DEPTH {
        return Err(Error::InvalidParameter(format!(
            "cross-section depth must be at most {MAX_SECTION_DEPTH}, got {depth}"
        )));
    }
    let size = (map.base().degree() as u64).saturating_pow(depth as u32);
    if size > SECTION_BUDGET {
        return Err(Error::BudgetExceeded { required: size, limit: SECTION_BUDGET });
    }

    let lambda = map.contraction();
    let mut levels: Vec<Vec<TreeNode>> = Vec::with_capacity(depth);
    let mut frontier = vec![(fiber, Complex64::new(0.0, 0.0))];
    let mut scale = 1.0;
    for _ in 0..depth {
        let children: Vec<Vec<(TreeNode, Complex64)>> = frontier
            .par_iter()
            .enumerate()
            .map(|(parent, &(t, center))| {
                let pre = map.base().preimages(t)?;
                Ok(pre
                    .into_iter()
                    .map(|s| (TreeNode { t: s, parent: parent as u32 }, center + half_phase(s.value()) * scale))
                    .collect())
            })
            .collect::<Result<_>>()?;
        let flat: Vec<(TreeNode, Complex64)> = children.into_iter().flatten().collect();
        levels.push(flat.iter().map(|(n, _)| *n).collect());
        frontier = flat.into_iter().map(|(n, c)| (n.t, c)).collect();
        scale *= lambda;
    }
    let centers = frontier.into_iter().map(|(_, c)| c).collect();
    Ok(CrossSection { fiber, depth, radius: lambda.powi(depth as i32), levels, centers })
}

impl CrossSection {
    pub fn fiber(&self) -> CirclePoint {
        self.fiber
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Disk centers in lexicographic itinerary order.
    pub fn centers(&self) -> &[Complex64] {
        &self.centers
    }

    /// Index of the containing disk in the depth-`n − 1` section.
    pub fn parent_index(&self, index: usize) -> Option<usize> {
        self.levels.last().map(|level| level[index].parent as usize)
    }

    pub fn itinerary(&self, index: usize) -> Vec<CirclePoint> {
        let mut out = vec![CirclePoint::default(); self.depth];
        let mut i = index;
        for k in (0..self.depth).rev() {
            let node = self.levels[k][i];
            out[k] = node.t;
            i = node.parent as usize;
        }
        out
    }

    pub fn disk(&self, index: usize) -> DiskRecord {
        DiskRecord {
            fiber: self.fiber,
            center: self.centers[index],
            radius: self.radius,
            depth: self.depth,
            itinerary: self.itinerary(index),
        }
    }

    pub fn disks(&self) -> impl Iterator<Item = DiskRecord> + '_ {
        (0..self.len()).map(|i| self.disk(i))
    }

    /// Smallest distance between any two disk centers (infinite for a single disk).
    pub fn min_center_gap(&self) -> f64 {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| self.centers[a].re.total_cmp(&self.centers[b].re));
        let mut best = f64::INFINITY;
        for (k, &a) in order.iter().enumerate() {
            let ca = self.centers[a];
            for &b in &order[k + 1..] {
                let cb = self.centers[b];
                if cb.re - ca.re >= best {
                    break;
                }
                best = best.min((ca - cb).norm());
            }
        }
        best
    }

    /// Smallest center distance among disks sharing a parent.
    pub fn min_sibling_gap(&self) -> f64 {
        let Some(last) = self.levels.last() else {
            return f64::INFINITY;
        };
        let mut best = f64::INFINITY;
        let mut start = 0;
        while start < last.len() {
            let mut end = start;
            while end < last.len() && last[end].parent == last[start].parent {
                end += 1;
            }
            for a in start..end {
                for b in a + 1..end {
                    best = best.min((self.centers[a] - self.centers[b]).norm());
                }
            }
            start = end;
        }
        best
    }

    /// Total area `dⁿ·π·λ^{2n}` of the (disjoint) disk union.
    pub fn union_area(&self) -> f64 {
        self.len() as f64 * std::f64::consts::PI * self.radius * self.radius
    }

    pub fn render(&self, resolution: usize) -> Result<Raster> {
        render_cross_section(self, resolution)
    }
}

/// Forward orbit of `start` with the first `transient` iterates dropped.
pub fn attractor_sample(map: &SkewMap, start: &TorusPoint, transient: usize, keep: usize) -> Result<Vec<TorusPoint>> {
    if transient == 0 {
        return Err(Error::InvalidParameter("transient must be at least 1".into()));
    }
    let mut p = map.iterate(start, transient);
    let mut out = Vec::with_capacity(keep);
    for _ in 0..keep {
        out.push(p);
        p = map.apply(&p);
    }
    Ok(out)
}

/// Single-channel raster over `[−1, 1]²`, row-major from the top-left corner.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl Raster {
    pub fn set_count(&self) -> usize {
        self.pixels.iter().filter(|&&p| p != 0).count()
    }

    /// Binary greymap: header `P5\n<w> <h>\n255\n` followed by the pixels.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut header = String::new();
        write!(header, "P5\n{} {}\n255\n", self.width, self.height).expect("write to string");
        let mut out = header.into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }
}

/// Marks every pixel whose center lies in a disk of the section.
pub fn render_cross_section(section: &CrossSection, resolution: usize) -> Result<Raster> {
    if !(64..=4096).contains(&resolution) {
        return Err(Error::InvalidParameter(format!("resolution must lie in 64..=4096, got {resolution}")));
    }
    let n = resolution;
    let step = 2.0 / n as f64;
    let x_of = |i: usize| -1.0 + (i as f64 + 0.5) * step;
    let y_of = |j: usize| 1.0 - (j as f64 + 0.5) * step;
    let clamp = |v: f64| v.max(0.0).min((n - 1) as f64) as usize;

    let mut pixels = vec![0u8; n * n];
    let r = section.radius();
    for c in section.centers() {
        let i0 = clamp(((c.re - r + 1.0) / step - 0.5).floor());
        let i1 = clamp(((c.re + r + 1.0) / step - 0.5).ceil());
        let j0 = clamp(((1.0 - c.im - r) / step - 0.5).floor());
        let j1 = clamp(((1.0 - c.im + r) / step - 0.5).ceil());
        for j in j0..=j1 {
            let dy = y_of(j) - c.im;
            for i in i0..=i1 {
                let dx = x_of(i) - c.re;
                if dx * dx + dy * dy <= r * r {
                    pixels[j * n + i] = 255;
                }
            }
        }
    }
    Ok(Raster { width: n, height: n, pixels })
}
