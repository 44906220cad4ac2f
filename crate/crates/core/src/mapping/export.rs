use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::geom::Cell;

use super::{BevMap, Occupancy};

/// Binary PGM (P5): occupied 0, unknown 205, free 254.
pub fn write_pgm<W: Write>(map: &BevMap, mut out: W) -> io::Result<()> {
    write!(out, "P5\n{} {}\n255\n", map.width(), map.height())?;
    let bytes: Vec<u8> = map
        .grid()
        .as_slice()
        .iter()
        .map(|m| match m.state {
            Occupancy::Occupied => 0,
            Occupancy::Unknown => 205,
            Occupancy::Free => 254,
        })
        .collect();
    out.write_all(&bytes)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemanticEntry {
    pub cell: Cell,
    pub category: String,
    pub last_seen: Option<u64>,
}

/// JSON companion to the PGM: geometry and per-cell semantics of known cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapSidecar {
    pub width: usize,
    pub height: usize,
    pub resolution_m: f64,
    pub semantics: Vec<SemanticEntry>,
}

impl MapSidecar {
    pub fn from_map(map: &BevMap) -> Self {
        let semantics = map
            .grid()
            .iter()
            .filter_map(|(c, m)| {
                m.category.as_ref().map(|cat| SemanticEntry {
                    cell: c,
                    category: cat.clone(),
                    last_seen: m.last_seen,
                })
            })
            .collect();
        Self {
            width: map.width(),
            height: map.height(),
            resolution_m: map.resolution,
            semantics,
        }
    }
}
