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

//! Scalar abstraction for the statistics layer.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real number type used for coverage ratios and their aggregates.
///
/// Implemented for `f32` and `f64`. Counting and graph work stays in
/// integers; only the ratios and moments pass through this trait.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Display + Debug + FromStr + Default + Send + Sync + 'static
{
    /// Exact ratio of two counts, rounded once into `Self`.
    fn ratio(numerator: usize, denominator: usize) -> Self {
        let value = numerator as f64 / denominator as f64;
        Self::from_f64(value).unwrap_or_else(Self::nan)
    }

    fn from_count(count: usize) -> Self {
        Self::from_usize(count).unwrap_or_else(Self::nan)
    }

    /// Lossy widening used when a value must be mixed with `f64` data.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
