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

//! Deterministic time-stepped simulation of transaction dissemination in
//! peer-to-peer overlays under Sybil attack.
//!
//! The pipeline has three stages that can run separately:
//!
//! * [`topology`] builds the overlay graph (random, small-world, k-regular,
//!   scale-free) and reads or writes it as an edge list.
//! * [`engine`] runs epochs in which one honest victim originates a
//!   transaction that spreads under one of the [`protocol`] rules while the
//!   [`adversary`]'s Sybils swallow everything they receive.
//! * [`metrics`] turns epochs into coverage curves, CSV files and plot
//!   scripts.
//!
//! [`config`] and [`experiment`] tie the stages together for the CLI.
//!
//! Statistics are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the common `f64` case.

pub mod adversary;
pub mod config;
pub mod engine;
pub mod experiment;
pub mod metrics;
pub mod num;
pub mod protocol;
pub mod seed;
pub mod topology;

pub use num::Scalar;

pub type CoveragePoint = metrics::CoveragePoint<f64>;
pub type CoveragePoint32 = metrics::CoveragePoint<f32>;
pub type SweepResult = metrics::SweepResult<f64>;
pub type SweepResult32 = metrics::SweepResult<f32>;
pub type SweepOutcome = engine::SweepOutcome<f64>;
