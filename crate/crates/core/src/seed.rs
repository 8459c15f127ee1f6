// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

//! Deterministic seed derivation.
//!
//! Every random stream in a run is derived from the master seed and a
//! stream label, never from another stream's state. That keeps epochs and
//! sweep points independent of execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random number generator used for every simulation stream.
pub type SimRng = ChaCha8Rng;

/// Stream labels. Values are arbitrary but frozen: changing one changes
/// every downstream result.
pub(crate) mod stream {
    pub const SYBILS: u64 = 0x5359_4249;
    pub const VICTIMS: u64 = 0x5649_4354;
    pub const EPOCH: u64 = 0x4550_4f43;
    pub const FRACTION: u64 = 0x4652_4143;
    pub const TOPOLOGY: u64 = 0x544f_504f;
    pub const ATTEMPT: u64 = 0x4154_5450;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `base`, a stream label and an index.
pub fn derive_seed(base: u64, label: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ label) ^ index)
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}
