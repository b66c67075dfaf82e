//! Iterated function systems at desk scale: Hutchinson iteration on finite
//! ε-nets, chaos games driven by disjunctive sequences, code space, Markov
//! operators on discrete measures with exact transport distances, and
//! sampled contraction analysis.

pub mod chaosgame;
pub mod codespace;
pub mod exprdsl;
pub mod geometry;
pub mod hyperspace;
pub mod mapkit;
pub mod measurekit;

pub use geometry::{pt1, pt2, pt3, Bounds, Metric, Point};
pub use mapkit::{IFSystem, MapSpec, PointMap};
