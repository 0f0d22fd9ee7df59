// Copyright 2026 The chromy-sampling Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Deterministic splitting of one master seed into independent streams.
//!
//! Subtask `t` of a run seeded with `seed` uses ChaCha8 keyed by `seed`
//! (through [`SeedableRng::seed_from_u64`]) on stream number `t`. Streams
//! never overlap, and the mapping does not depend on the number of worker
//! threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used for every seeded computation in the crate.
pub type SeededRng = ChaCha8Rng;

/// Generator for subtask `stream` of the run seeded with `seed`.
pub fn substream(seed: u64, stream: u64) -> SeededRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream numbers reserved for the top-level tasks of a run, so that nested
/// splits cannot collide.
pub mod streams {
    /// Single draws, such as one sample from the command line.
    pub const SAMPLE: u64 = 0;
    pub const POPULATION: u64 = 1;
    /// Base stream of Monte-Carlo matrix shards; shard `s` uses `base + s`.
    pub const MONTE_CARLO_BASE: u64 = 1 << 32;
    /// Base stream of simulation replicates; replicate `b` of the `m`-th
    /// sample size uses `base + (m << 24) + b`.
    pub const REPLICATE_BASE: u64 = 1 << 40;
}
