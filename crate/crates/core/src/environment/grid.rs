//! Occupancy grid to obstacle polygons.

use std::collections::{HashMap, VecDeque};

use crate::control_space::{Point, Pose};
use crate::geometry::{signed_area, Polygon};

pub const DEFAULT_OCCUPANCY_THRESHOLD: u8 = 128;

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    /// World pose of the grid corner at cell `(0, 0)`.
    pub origin: Pose,
    /// Cell edge length in metres.
    pub resolution: f64,
    pub width: usize,
    pub height: usize,
    /// Row-major: cell `(col, row)` lives at `occupancy[row * width + col]`.
    pub occupancy: Vec<u8>,
}

impl OccupancyGrid {
    pub fn new(
        origin: Pose,
        resolution: f64,
        width: usize,
        height: usize,
        occupancy: Vec<u8>,
    ) -> Result<Self, String> {
        if !(resolution > 0.0) || !resolution.is_finite() {
            return Err(format!("grid resolution must be positive, got {resolution}"));
        }
        if width == 0 || height == 0 {
            return Err("grid dimensions must be at least 1x1".into());
        }
        if occupancy.len() != width * height {
            return Err(format!(
                "grid has {} cells, expected {}x{}={}",
                occupancy.len(),
                width,
                height,
                width * height
            ));
        }
        Ok(Self {
            origin,
            resolution,
            width,
            height,
            occupancy,
        })
    }

    pub fn cell(&self, col: usize, row: usize) -> u8 {
        self.occupancy[row * self.width + col]
    }

    /// World position of a lattice corner.
    pub fn corner(&self, col: i64, row: i64) -> Point {
        self.origin.transform_point(Point::new(
            col as f64 * self.resolution,
            row as f64 * self.resolution,
        ))
    }

    pub fn cell_center(&self, col: usize, row: usize) -> Point {
        self.origin.transform_point(Point::new(
            (col as f64 + 0.5) * self.resolution,
            (row as f64 + 0.5) * self.resolution,
        ))
    }
}

type Lattice = (i64, i64);

/// Traces one counter-clockwise outline per 8-connected component of cells
/// at or above `threshold`.
///
/// Outlines follow cell borders. Interior holes are filled, and components
/// sitting inside another component's outline are absorbed by it, so the
/// returned polygons never overlap.
pub fn extract_obstacle_polygons(grid: &OccupancyGrid, threshold: u8) -> Vec<Polygon> {
    let (w, h) = (grid.width, grid.height);
    let occupied = |c: i64, r: i64| {
        c >= 0 && r >= 0 && (c as usize) < w && (r as usize) < h && grid.cell(c as usize, r as usize) >= threshold
    };

    let mut label = vec![usize::MAX; w * h];
    let mut components: Vec<Vec<Lattice>> = Vec::new();
    for r in 0..h {
        for c in 0..w {
            if label[r * w + c] != usize::MAX || !occupied(c as i64, r as i64) {
                continue;
            }
            let id = components.len();
            let mut cells = Vec::new();
            let mut queue = VecDeque::from([(c as i64, r as i64)]);
            label[r * w + c] = id;
            while let Some((cc, rr)) = queue.pop_front() {
                cells.push((cc, rr));
                for dr in -1..=1 {
                    for dc in -1..=1 {
                        let (nc, nr) = (cc + dc, rr + dr);
                        if occupied(nc, nr) && label[nr as usize * w + nc as usize] == usize::MAX {
                            label[nr as usize * w + nc as usize] = id;
                            queue.push_back((nc, nr));
                        }
                    }
                }
            }
            components.push(cells);
        }
    }

    let mut outlines: Vec<(Lattice, Polygon)> = Vec::with_capacity(components.len());
    for cells in &components {
        let ring = outer_ring(cells, &occupied);
        let vertices = ring.iter().map(|&(c, r)| grid.corner(c, r)).collect();
        if let Ok(poly) = Polygon::new(vertices) {
            outlines.push((cells[0], poly));
        }
    }

    let mut result = Vec::with_capacity(outlines.len());
    for (i, (seed, poly)) in outlines.iter().enumerate() {
        let center = grid.cell_center(seed.0 as usize, seed.1 as usize);
        let nested = outlines
            .iter()
            .enumerate()
            .any(|(j, (_, other))| j != i && other.contains(center));
        if !nested {
            result.push(poly.clone());
        }
    }
    result
}

/// Outer boundary of one component in lattice coordinates, collinear corners removed.
fn outer_ring(cells: &[Lattice], occupied: &impl Fn(i64, i64) -> bool) -> Vec<Lattice> {
    // Directed border edges with the component on their left.
    let mut outgoing: HashMap<Lattice, Vec<Lattice>> = HashMap::new();
    let mut edges = Vec::new();
    for &(c, r) in cells {
        let mut push = |from: Lattice, to: Lattice| {
            outgoing.entry(from).or_default().push(to);
            edges.push((from, to));
        };
        if !occupied(c, r - 1) {
            push((c, r), (c + 1, r));
        }
        if !occupied(c + 1, r) {
            push((c + 1, r), (c + 1, r + 1));
        }
        if !occupied(c, r + 1) {
            push((c + 1, r + 1), (c, r + 1));
        }
        if !occupied(c - 1, r) {
            push((c, r + 1), (c, r));
        }
    }

    let mut used: HashMap<(Lattice, Lattice), bool> = edges.iter().map(|&e| (e, false)).collect();
    let mut best: Vec<Lattice> = Vec::new();
    let mut best_area = f64::NEG_INFINITY;
    for &start in &edges {
        if used[&start] {
            continue;
        }
        let mut ring = vec![start.0];
        let (mut from, mut to) = start;
        used.insert(start, true);
        loop {
            let dir = (to.0 - from.0, to.1 - from.1);
            // at a diagonal pinch take the right-hand turn so that corner-touching
            // cells stay in one outline
            let next = outgoing[&to]
                .iter()
                .copied()
                .filter(|&n| !used[&(to, n)])
                .min_by_key(|&n| turn_rank(dir, (n.0 - to.0, n.1 - to.1)));
            match next {
                Some(n) => {
                    ring.push(to);
                    used.insert((to, n), true);
                    from = to;
                    to = n;
                }
                None => break,
            }
        }
        let points: Vec<Point> = ring.iter().map(|&(c, r)| Point::new(c as f64, r as f64)).collect();
        let area = signed_area(&points);
        if area > best_area {
            best_area = area;
            best = ring;
        }
    }
    simplify(best)
}

/// 0 = right turn, 1 = straight, 2 = left turn.
fn turn_rank(dir: Lattice, next: Lattice) -> i64 {
    let cross = dir.0 * next.1 - dir.1 * next.0;
    match cross.signum() {
        -1 => 0,
        0 => 1,
        _ => 2,
    }
}

fn simplify(ring: Vec<Lattice>) -> Vec<Lattice> {
    let n = ring.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let prev = ring[(i + n - 1) % n];
        let cur = ring[i];
        let next = ring[(i + 1) % n];
        let a = (cur.0 - prev.0, cur.1 - prev.1);
        let b = (next.0 - cur.0, next.1 - cur.1);
        if a.0 * b.1 - a.1 * b.0 != 0 {
            out.push(cur);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn grid_from_rows(rows: &[&str], resolution: f64) -> OccupancyGrid {
        let height = rows.len();
        let width = rows[0].len();
        let mut occupancy = Vec::with_capacity(width * height);
        for row in rows {
            occupancy.extend(row.bytes().map(|b| if b == b'#' { 255 } else { 0 }));
        }
        OccupancyGrid::new(Pose::default(), resolution, width, height, occupancy).unwrap()
    }

    #[test]
    fn free_grid_has_no_obstacles() {
        let g = grid_from_rows(&["....", "...."], 0.1);
        assert!(extract_obstacle_polygons(&g, 128).is_empty());
    }

    #[test]
    fn single_cell_is_a_square() {
        let g = grid_from_rows(&["....", "..#.", "...."], 0.1);
        let polys = extract_obstacle_polygons(&g, 128);
        assert_eq!(polys.len(), 1);
        let p = &polys[0];
        assert_eq!(p.vertices().len(), 4);
        assert_abs_diff_eq!(p.area(), 0.01, epsilon = 1e-12);
        let c = p.centroid();
        assert_abs_diff_eq!(c.x, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(c.y, 0.15, epsilon = 1e-12);
    }

    #[test]
    fn block_is_one_square() {
        let g = grid_from_rows(&["....", ".##.", ".##.", "...."], 0.5);
        let polys = extract_obstacle_polygons(&g, 128);
        assert_eq!(polys.len(), 1);
        let verts = polys[0].vertices();
        assert_eq!(verts.len(), 4);
        assert_abs_diff_eq!(polys[0].area(), 1.0, epsilon = 1e-12);
        let xs: Vec<f64> = verts.iter().map(|v| v.x).collect();
        assert_abs_diff_eq!(xs.iter().cloned().fold(f64::INFINITY, f64::min), 0.5);
        assert_abs_diff_eq!(xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max), 1.5);
    }

    #[test]
    fn diagonal_cells_form_one_component() {
        let g = grid_from_rows(&["#..", ".#.", "..#"], 1.0);
        let polys = extract_obstacle_polygons(&g, 128);
        assert_eq!(polys.len(), 1);
        assert_abs_diff_eq!(polys[0].area(), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn island_inside_ring_is_absorbed() {
        let g = grid_from_rows(&["#####", "#...#", "#.#.#", "#...#", "#####"], 1.0);
        let polys = extract_obstacle_polygons(&g, 128);
        assert_eq!(polys.len(), 1);
        assert_abs_diff_eq!(polys[0].area(), 25.0, epsilon = 1e-12);
    }

    #[test]
    fn threshold_is_respected() {
        let g = OccupancyGrid::new(Pose::default(), 1.0, 2, 1, vec![100, 200]).unwrap();
        assert_eq!(extract_obstacle_polygons(&g, 128).len(), 1);
        assert_eq!(extract_obstacle_polygons(&g, 50).len(), 1);
        assert_abs_diff_eq!(extract_obstacle_polygons(&g, 50)[0].area(), 2.0);
    }

    #[test]
    fn rotated_origin_keeps_orientation() {
        let mut g = grid_from_rows(&["##", "#."], 1.0);
        g.origin = Pose::new(10.0, -3.0, 2.0);
        let polys = extract_obstacle_polygons(&g, 128);
        assert_eq!(polys.len(), 1);
        assert_abs_diff_eq!(polys[0].area(), 3.0, epsilon = 1e-9);
    }

    #[test]
    fn invalid_grids_rejected() {
        assert!(OccupancyGrid::new(Pose::default(), 0.0, 1, 1, vec![0]).is_err());
        assert!(OccupancyGrid::new(Pose::default(), 1.0, 0, 1, vec![]).is_err());
        assert!(OccupancyGrid::new(Pose::default(), 1.0, 2, 2, vec![0; 3]).is_err());
    }

    fn random_grid(max: usize) -> impl Strategy<Value = OccupancyGrid> {
        (1..=max, 1..=max, 0.1..0.7f64, any::<u64>()).prop_map(|(w, h, density, seed)| {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let occupancy = (0..w * h)
                .map(|_| if rng.random::<f64>() < density { 255 } else { 0 })
                .collect();
            OccupancyGrid::new(Pose::new(1.0, 2.0, 0.0), 0.25, w, h, occupancy).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn occupied_centers_lie_in_exactly_one_polygon(grid in random_grid(64)) {
            let polys = extract_obstacle_polygons(&grid, 128);
            for r in 0..grid.height {
                for c in 0..grid.width {
                    let p = grid.cell_center(c, r);
                    let hits = polys.iter().filter(|poly| poly.signed_distance(p) <= 0.0).count();
                    if grid.cell(c, r) >= 128 {
                        prop_assert_eq!(hits, 1);
                    } else {
                        prop_assert!(hits <= 1);
                    }
                }
            }
        }

        #[test]
        fn block_shapes_rasterize_back(w in 1usize..12, h in 1usize..12,
                c0 in 0usize..6, r0 in 0usize..6, bw in 1usize..6, bh in 1usize..6) {
            let (gw, gh) = (w + 12, h + 12);
            let mut occupancy = vec![0u8; gw * gh];
            for r in r0..r0 + bh {
                for c in c0..c0 + bw {
                    occupancy[r * gw + c] = 255;
                }
            }
            let grid = OccupancyGrid::new(Pose::default(), 0.1, gw, gh, occupancy.clone()).unwrap();
            let polys = extract_obstacle_polygons(&grid, 128);
            for r in 0..gh {
                for c in 0..gw {
                    let inside = polys.iter().any(|p| p.contains(grid.cell_center(c, r)));
                    prop_assert_eq!(inside, occupancy[r * gw + c] >= 128);
                }
            }
        }
    }
}
