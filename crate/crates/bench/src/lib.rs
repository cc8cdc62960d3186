//! Fixtures shared by the benchmarks.

use polyomwu::{GameSource, GraphSpec, PolymatrixGame};

/// Ten players, ten actions, complete graph.
pub fn reference_game(seed: u64) -> PolymatrixGame {
    PolymatrixGame::random_zero_sum(10, 10, &GraphSpec::Complete, seed).expect("valid parameters")
}

pub fn reference_source() -> GameSource {
    GameSource::Generated { n: 10, action_size: 10, graph: GraphSpec::Complete }
}
