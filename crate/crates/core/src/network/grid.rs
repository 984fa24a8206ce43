use alloc::format;
use alloc::vec::Vec;

use super::{IntersectionSpec, RoadNetwork, RoadSpec, LANES_PER_ROAD};

/// Offsets for road direction codes 0..4 (east, north, west, south).
const STEPS: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

/// Builds a `rows x cols` grid of signalized intersections ringed by boundary
/// nodes. Ids follow the `intersection_<col>_<row>` / `road_<col>_<row>_<dir>`
/// naming of the public grid benchmarks, with column 0, row 0, column `cols+1`
/// and row `rows+1` holding the boundary nodes.
///
/// # Panics
/// If `rows` or `cols` is zero, or `road_length`/`speed` is not positive.
pub fn generate_grid(rows: usize, cols: usize, road_length: f64, speed: f64) -> RoadNetwork {
    assert!(rows >= 1 && cols >= 1, "grid needs at least one row and column");
    assert!(
        road_length > 0.0 && speed > 0.0,
        "road length and speed must be positive"
    );

    let (w, h) = (cols as i64 + 2, rows as i64 + 2);
    let is_corner = |i: i64, j: i64| (i == 0 || i == w - 1) && (j == 0 || j == h - 1);
    let inside = |i: i64, j: i64| (0..w).contains(&i) && (0..h).contains(&j) && !is_corner(i, j);
    let signalized = |i: i64, j: i64| (1..w - 1).contains(&i) && (1..h - 1).contains(&j);
    let node_name = |i: i64, j: i64| format!("intersection_{i}_{j}");

    let mut nodes = Vec::new();
    let mut roads = Vec::new();
    for i in 0..w {
        for j in 0..h {
            if !inside(i, j) {
                continue;
            }
            nodes.push(IntersectionSpec {
                id: node_name(i, j),
                x: i as f64 * road_length,
                y: j as f64 * road_length,
                roads: Vec::new(),
                is_virtual: !signalized(i, j),
            });
            for (d, (di, dj)) in STEPS.into_iter().enumerate() {
                let (ni, nj) = (i + di, j + dj);
                if !inside(ni, nj) || !(signalized(i, j) || signalized(ni, nj)) {
                    continue;
                }
                roads.push(RoadSpec {
                    id: format!("road_{i}_{j}_{d}"),
                    start: node_name(i, j),
                    end: node_name(ni, nj),
                    length: road_length,
                    max_speed: speed,
                    lanes: LANES_PER_ROAD,
                });
            }
        }
    }
    for node in &mut nodes {
        node.roads = roads
            .iter()
            .filter(|r| r.start == node.id || r.end == node.id)
            .map(|r| r.id.clone())
            .collect();
    }
    RoadNetwork::from_specs(nodes, roads).expect("generated grid is valid by construction")
}
