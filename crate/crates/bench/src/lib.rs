//! Inputs shared by the benchmarks.

use sgplan_core::fixtures::maze_map;
use sgplan_core::geom::Cell;
use sgplan_core::mapping::BevMap;

/// Maze widths in lattice cells; heights are three quarters of the width.
pub const MAZE_COLS: [i32; 3] = [10, 20, 40];

pub fn maze(cols: i32) -> BevMap {
    maze_map(7, cols, cols * 3 / 4)
}

/// Opposite corners of a maze from [`maze`], both free.
pub fn corners(cols: i32) -> (Cell, Cell) {
    let rows = cols * 3 / 4;
    (Cell::new(2, 2), Cell::new(cols * 4 - 2, rows * 4 - 2))
}
