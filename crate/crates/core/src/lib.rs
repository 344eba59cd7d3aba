//! Round-synchronous CONGEST simulation, multi-source weighted BFS
//! (lightest shortest paths) and a purely additive +6 spanner built on it.

pub mod graph;
pub mod seed;
pub mod sim;
pub mod spanner;
pub mod verify;
pub mod wbfs;
