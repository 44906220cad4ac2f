//! The agent's discovered bird's-eye-view map and the queries built on it.

mod astar;
mod esdf;
mod export;
mod frontier;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::geom::{Cell, Grid};
use crate::gridworld::Observation;

pub use astar::{cost_field, plan_path, Path};
pub(crate) use astar::successors;
pub use esdf::{compute_esdf, Esdf};
pub use export::{write_pgm, MapSidecar};
pub use frontier::{find_frontiers, is_frontier_cell, Frontier};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Occupancy {
    Unknown,
    Free,
    Occupied,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapCell {
    pub state: Occupancy,
    pub category: Option<String>,
    pub last_seen: Option<u64>,
}

impl MapCell {
    const UNKNOWN: MapCell = MapCell {
        state: Occupancy::Unknown,
        category: None,
        last_seen: None,
    };
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BevMap {
    pub resolution: f64,
    pub free_space_categories: BTreeSet<String>,
    cells: Grid<MapCell>,
}

impl BevMap {
    pub fn new(
        width: usize,
        height: usize,
        resolution: f64,
        free_space_categories: BTreeSet<String>,
    ) -> Self {
        Self {
            resolution,
            free_space_categories,
            cells: Grid::new(width, height, MapCell::UNKNOWN),
        }
    }

    pub fn width(&self) -> usize {
        self.cells.width()
    }

    pub fn height(&self) -> usize {
        self.cells.height()
    }

    pub fn grid(&self) -> &Grid<MapCell> {
        &self.cells
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        self.cells.in_bounds(c)
    }

    pub fn state(&self, c: Cell) -> Occupancy {
        self.cells
            .get(c)
            .map(|m| m.state)
            .unwrap_or(Occupancy::Unknown)
    }

    pub fn get(&self, c: Cell) -> Option<&MapCell> {
        self.cells.get(c)
    }

    pub fn is_free(&self, c: Cell) -> bool {
        self.state(c) == Occupancy::Free
    }

    pub fn known_count(&self) -> usize {
        self.cells
            .as_slice()
            .iter()
            .filter(|m| m.state != Occupancy::Unknown)
            .count()
    }

    /// Directly set a cell, for building fixtures.
    pub fn set(&mut self, c: Cell, state: Occupancy, category: Option<&str>) {
        if let Some(m) = self.cells.get_mut(c) {
            m.state = state;
            m.category = category.map(String::from);
        }
    }

    /// Merge an observation in place. Re-observed cells take the newest class.
    pub fn integrate(&mut self, obs: &Observation) {
        for r in &obs.revealed_cells {
            let state = if self.free_space_categories.contains(&r.category) {
                Occupancy::Free
            } else {
                Occupancy::Occupied
            };
            if let Some(m) = self.cells.get_mut(r.cell) {
                m.state = state;
                m.category = Some(r.category.clone());
                m.last_seen = Some(obs.step);
            }
        }
    }
}

/// Functional form of [`BevMap::integrate`].
pub fn integrate_observation(map: &BevMap, obs: &Observation) -> BevMap {
    let mut out = map.clone();
    out.integrate(obs);
    out
}

/// Ground-truth map of a simulator state, as if every cell had been observed.
pub fn full_knowledge_map(sim: &crate::gridworld::SimState) -> BevMap {
    let mut map = BevMap::new(
        sim.cells.width(),
        sim.cells.height(),
        sim.resolution,
        sim.free_space_categories.clone(),
    );
    let roots = sim.root_objects();
    let revealed = sim
        .cells
        .iter()
        .map(|(c, s)| crate::gridworld::RevealedCell {
            cell: c,
            kind: s.kind,
            category: sim.cell_category(c, &roots),
        })
        .collect();
    map.integrate(&Observation {
        step: sim.tick,
        revealed_cells: revealed,
        visible_objects: vec![],
        visible_doors: vec![],
        robot_pose: sim.robot.clone(),
    });
    map
}
