//! Compact subsets of a complex chart approximated on square occupancy grids,
//! with connected-component labeling, fullness, and Hausdorff distances
//! computed through a 2-d tree.

use alloc::collections::VecDeque;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::C64;

/// A planar point `(re, im)` of a chart.
pub type P2 = [f64; 2];

fn dist(a: &P2, b: &P2) -> f64 {
    libm::hypot(a[0] - b[0], a[1] - b[1])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

impl Connectivity {
    fn offsets(self) -> &'static [(i64, i64)] {
        match self {
            Connectivity::Four => &[(1, 0), (-1, 0), (0, 1), (0, -1)],
            Connectivity::Eight => &[(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)],
        }
    }
}

/// A grid approximation of a compact set in the square `[-extent, extent]^2`
/// of a named chart, with `n x n` cells of side `resolution`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompactSetApprox {
    pub chart: String,
    extent: f64,
    n: usize,
    cells: Vec<bool>,
}

impl CompactSetApprox {
    pub fn empty(chart: &str, extent: f64, n: usize) -> Self {
        CompactSetApprox { chart: String::from(chart), extent, n, cells: vec![false; n * n] }
    }

    /// The cells containing the given points; points outside the box are
    /// dropped.
    pub fn from_points(chart: &str, extent: f64, n: usize, pts: &[P2]) -> Self {
        let mut s = Self::empty(chart, extent, n);
        for p in pts {
            if let Some((i, j)) = s.cell_of(p) {
                s.insert(i, j);
            }
        }
        s
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    /// Cells per axis.
    pub fn size(&self) -> usize {
        self.n
    }

    /// Cell side.
    pub fn resolution(&self) -> f64 {
        2.0 * self.extent / self.n as f64
    }

    pub fn cell_of(&self, p: &P2) -> Option<(usize, usize)> {
        let h = self.resolution();
        let i = libm::floor((p[0] + self.extent) / h);
        let j = libm::floor((p[1] + self.extent) / h);
        if i < 0.0 || j < 0.0 || i >= self.n as f64 || j >= self.n as f64 || !(i.is_finite() && j.is_finite()) {
            return None;
        }
        Some((i as usize, j as usize))
    }

    pub fn cell_center(&self, i: usize, j: usize) -> P2 {
        let h = self.resolution();
        [-self.extent + h * (i as f64 + 0.5), -self.extent + h * (j as f64 + 0.5)]
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.cells[j * self.n + i]
    }

    pub fn contains_point(&self, p: &P2) -> bool {
        self.cell_of(p).is_some_and(|(i, j)| self.contains(i, j))
    }

    pub fn insert(&mut self, i: usize, j: usize) {
        self.cells[j * self.n + i] = true;
    }

    pub fn remove(&mut self, i: usize, j: usize) {
        self.cells[j * self.n + i] = false;
    }

    pub fn insert_point(&mut self, p: &P2) -> bool {
        match self.cell_of(p) {
            Some((i, j)) => {
                self.insert(i, j);
                true
            }
            None => false,
        }
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.cells.iter().any(|&c| c)
    }

    /// Filled cells in row-major order.
    pub fn cells(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for j in 0..self.n {
            for i in 0..self.n {
                if self.contains(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn points(&self) -> Vec<P2> {
        self.cells().into_iter().map(|(i, j)| self.cell_center(i, j)).collect()
    }

    fn neighbor(&self, i: usize, j: usize, d: (i64, i64)) -> Option<(usize, usize)> {
        let (a, b) = (i as i64 + d.0, j as i64 + d.1);
        if a < 0 || b < 0 || a >= self.n as i64 || b >= self.n as i64 {
            None
        } else {
            Some((a as usize, b as usize))
        }
    }

    /// Centers of filled cells with an empty 4-neighbour or on the box edge.
    pub fn boundary_points(&self) -> Vec<P2> {
        let mut out = Vec::new();
        for (i, j) in self.cells() {
            let edge = Connectivity::Four.offsets().iter().any(|&d| self.neighbor(i, j, d).is_none_or(|(a, b)| !self.contains(a, b)));
            if edge {
                out.push(self.cell_center(i, j));
            }
        }
        out
    }

    fn same_grid(&self, other: &Self) -> Result<()> {
        if self.chart != other.chart || self.n != other.n || self.extent != other.extent {
            return Err(Error::ChartMismatch);
        }
        Ok(())
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        self.same_grid(other)?;
        let mut s = self.clone();
        for (c, o) in s.cells.iter_mut().zip(&other.cells) {
            *c |= *o;
        }
        Ok(s)
    }

    /// Adds every cell within `k` cells (Chebyshev distance) of the set.
    pub fn dilate(&self, k: usize) -> Self {
        let mut s = self.clone();
        let k = k as i64;
        for (i, j) in self.cells() {
            for a in -k..=k {
                for b in -k..=k {
                    if let Some((x, y)) = self.neighbor(i, j, (a, b)) {
                        s.insert(x, y);
                    }
                }
            }
        }
        s
    }

    /// The set moved by `(di, dj)` cells; cells leaving the box are dropped.
    pub fn shifted(&self, di: i64, dj: i64) -> Self {
        let mut s = Self::empty(&self.chart, self.extent, self.n);
        for (i, j) in self.cells() {
            if let Some((a, b)) = self.neighbor(i, j, (di, dj)) {
                s.insert(a, b);
            }
        }
        s
    }

    /// Component labels (0 = empty, components numbered from 1 in row-major
    /// order of their first cell) and the component count.
    pub fn label_components(&self, conn: Connectivity) -> (Vec<u32>, usize) {
        label(self.n, |i, j| self.contains(i, j), conn)
    }

    /// Connected components as separate sets, in label order.
    pub fn components(&self, conn: Connectivity) -> Vec<CompactSetApprox> {
        let (labels, count) = self.label_components(conn);
        let mut out: Vec<CompactSetApprox> = (0..count).map(|_| Self::empty(&self.chart, self.extent, self.n)).collect();
        for (idx, &l) in labels.iter().enumerate() {
            if l > 0 {
                out[l as usize - 1].cells[idx] = true;
            }
        }
        out
    }

    /// Connected with respect to 8-adjacency (an empty set is not).
    pub fn is_connected(&self) -> bool {
        self.label_components(Connectivity::Eight).1 == 1
    }

    /// Cells of the complement reachable (4-adjacency) from outside the box.
    fn exterior(&self) -> Vec<bool> {
        let n = self.n;
        let mut seen = vec![false; n * n];
        let mut queue = VecDeque::new();
        for k in 0..n {
            for (i, j) in [(k, 0), (k, n - 1), (0, k), (n - 1, k)] {
                if !self.contains(i, j) && !seen[j * n + i] {
                    seen[j * n + i] = true;
                    queue.push_back((i, j));
                }
            }
        }
        while let Some((i, j)) = queue.pop_front() {
            for &d in Connectivity::Four.offsets() {
                if let Some((a, b)) = self.neighbor(i, j, d) {
                    if !self.contains(a, b) && !seen[b * n + a] {
                        seen[b * n + a] = true;
                        queue.push_back((a, b));
                    }
                }
            }
        }
        seen
    }

    /// The set together with the bounded components of its complement.
    pub fn fill_to_full(&self) -> Self {
        let outside = self.exterior();
        let mut s = self.clone();
        for (idx, c) in s.cells.iter_mut().enumerate() {
            if !outside[idx] {
                *c = true;
            }
        }
        s
    }

    /// The complement (with the outside of the box) is connected.
    pub fn is_full(&self) -> bool {
        let outside = self.exterior();
        self.cells.iter().zip(&outside).all(|(&c, &o)| c || o)
    }

    /// Number of bounded complementary components (holes) of the set.
    pub fn hole_count(&self) -> usize {
        let outside = self.exterior();
        label(self.n, |i, j| !self.contains(i, j) && !outside[j * self.n + i], Connectivity::Four).1
    }

    /// Smallest distance from a filled cell center to `p`, or `None` if empty.
    pub fn distance_to(&self, p: &P2) -> Option<f64> {
        self.points().iter().map(|q| dist(p, q)).fold(None, |m, d| Some(m.map_or(d, |m: f64| m.min(d))))
    }

    /// Chebyshev distance, in cells, from the cell holding `p` to the
    /// nearest filled cell; infinite if `p` is off the grid or the set is
    /// empty.
    pub fn cell_offset(&self, p: &P2) -> f64 {
        let Some((i, j)) = self.cell_of(p) else { return f64::INFINITY };
        let n = self.n as i64;
        for k in 0..n {
            let ring = (-k..=k).any(|a| {
                (-k..=k).any(|b| (a.abs() == k || b.abs() == k) && self.neighbor(i, j, (a, b)).is_some_and(|(x, y)| self.contains(x, y)))
            });
            if ring {
                return k as f64;
            }
        }
        f64::INFINITY
    }

    /// Centroid of the filled cell centers.
    pub fn centroid(&self) -> Option<P2> {
        let pts = self.points();
        if pts.is_empty() {
            return None;
        }
        let m = pts.len() as f64;
        Some([pts.iter().map(|p| p[0]).sum::<f64>() / m, pts.iter().map(|p| p[1]).sum::<f64>() / m])
    }
}

fn label(n: usize, filled: impl Fn(usize, usize) -> bool, conn: Connectivity) -> (Vec<u32>, usize) {
    let mut labels = vec![0u32; n * n];
    let mut count = 0usize;
    let mut stack = Vec::new();
    for j in 0..n {
        for i in 0..n {
            if !filled(i, j) || labels[j * n + i] != 0 {
                continue;
            }
            count += 1;
            labels[j * n + i] = count as u32;
            stack.push((i, j));
            while let Some((x, y)) = stack.pop() {
                for &(dx, dy) in conn.offsets() {
                    let (a, b) = (x as i64 + dx, y as i64 + dy);
                    if a < 0 || b < 0 || a >= n as i64 || b >= n as i64 {
                        continue;
                    }
                    let (a, b) = (a as usize, b as usize);
                    if filled(a, b) && labels[b * n + a] == 0 {
                        labels[b * n + a] = count as u32;
                        stack.push((a, b));
                    }
                }
            }
        }
    }
    (labels, count)
}

/// A static 2-d tree over a point cloud.
#[derive(Debug, Clone)]
pub struct KdTree {
    pts: Vec<P2>,
}

impl KdTree {
    pub fn new(points: &[P2]) -> Self {
        let mut pts = points.to_vec();
        build(&mut pts, 0);
        KdTree { pts }
    }

    pub fn len(&self) -> usize {
        self.pts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pts.is_empty()
    }

    /// Distance from `q` to the nearest point of the tree.
    pub fn nearest(&self, q: &P2) -> f64 {
        let mut best = f64::INFINITY;
        nearest(&self.pts, 0, q, &mut best);
        best
    }
}

fn build(pts: &mut [P2], axis: usize) {
    if pts.len() <= 1 {
        return;
    }
    let mid = pts.len() / 2;
    pts.select_nth_unstable_by(mid, |a, b| a[axis].total_cmp(&b[axis]));
    let (left, right) = pts.split_at_mut(mid);
    build(left, 1 - axis);
    build(&mut right[1..], 1 - axis);
}

fn nearest(pts: &[P2], axis: usize, q: &P2, best: &mut f64) {
    if pts.is_empty() {
        return;
    }
    let mid = pts.len() / 2;
    let p = &pts[mid];
    let d = dist(p, q);
    if d < *best {
        *best = d;
    }
    let diff = q[axis] - p[axis];
    let (near, far) = if diff < 0.0 { (&pts[..mid], &pts[mid + 1..]) } else { (&pts[mid + 1..], &pts[..mid]) };
    nearest(near, 1 - axis, q, best);
    if diff.abs() < *best {
        nearest(far, 1 - axis, q, best);
    }
}

/// `sup_{a in A} inf_{b in B} |a - b|` through a 2-d tree on `B`.
pub fn directed_hausdorff(a: &[P2], b: &KdTree) -> f64 {
    crate::par::map_slice(a, |p| b.nearest(p)).into_iter().fold(0.0, f64::max)
}

/// Hausdorff distance between two finite point clouds. Infinite when exactly
/// one is empty, zero when both are.
pub fn hausdorff_points(a: &[P2], b: &[P2]) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return 0.0,
        (true, false) | (false, true) => return f64::INFINITY,
        _ => {}
    }
    let ta = KdTree::new(a);
    let tb = KdTree::new(b);
    directed_hausdorff(a, &tb).max(directed_hausdorff(b, &ta))
}

/// Reference double loop for [`hausdorff_points`].
pub fn hausdorff_naive(a: &[P2], b: &[P2]) -> f64 {
    let directed = |x: &[P2], y: &[P2]| x.iter().map(|p| y.iter().map(|q| dist(p, q)).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max);
    match (a.is_empty(), b.is_empty()) {
        (true, true) => 0.0,
        (true, false) | (false, true) => f64::INFINITY,
        _ => directed(a, b).max(directed(b, a)),
    }
}

/// Hausdorff distance between the sets represented by two grids of the same
/// chart. Cells are represented by their centers; a point outside the other
/// set is nearest to that set's boundary cells, so only those are indexed.
pub fn hausdorff_distance(a: &CompactSetApprox, b: &CompactSetApprox) -> Result<f64> {
    if a.chart != b.chart {
        return Err(Error::ChartMismatch);
    }
    let ratio = a.resolution().max(b.resolution()) / a.resolution().min(b.resolution());
    let r = libm::round(ratio);
    if libm::fabs(ratio - r) > 1e-9 || (r as u64).count_ones() != 1 {
        return Err(Error::ChartMismatch);
    }
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return Ok(0.0),
        (true, false) | (false, true) => return Ok(f64::INFINITY),
        _ => {}
    }
    let directed = |x: &CompactSetApprox, y: &CompactSetApprox| {
        let tree = KdTree::new(&y.boundary_points());
        let pts = x.points();
        crate::par::map_slice(&pts, |p| if y.contains_point(p) { 0.0 } else { tree.nearest(p) }).into_iter().fold(0.0, f64::max)
    };
    Ok(directed(a, b).max(directed(b, a)))
}

pub fn to_p2(z: C64) -> P2 {
    [z.re, z.im]
}
