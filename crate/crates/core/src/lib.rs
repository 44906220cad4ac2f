pub mod geom;
pub mod gridworld;
pub mod mapping;
pub mod voronoi;
pub mod taskspec;
pub mod language;
pub mod scenegraph;
pub mod agent;
pub mod fixtures;
