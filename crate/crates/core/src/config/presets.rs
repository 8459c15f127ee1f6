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

//! Bundled configurations reproducing each published coverage figure.

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub text: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "fig1",
        description: "Dandelion, random graph, 40000 edges",
        text: include_str!("../../presets/fig1.cfg"),
    },
    Preset {
        name: "fig2",
        description: "Probabilistic Broadcast, random graph, 40000 edges",
        text: include_str!("../../presets/fig2.cfg"),
    },
    Preset {
        name: "fig3",
        description: "Fixed Probability, random graph, 40000 edges",
        text: include_str!("../../presets/fig3.cfg"),
    },
    Preset {
        name: "fig4",
        description: "Dandelion, random graph, 80000 edges",
        text: include_str!("../../presets/fig4.cfg"),
    },
    Preset {
        name: "fig5",
        description: "Probabilistic Broadcast, random graph, 80000 edges",
        text: include_str!("../../presets/fig5.cfg"),
    },
    Preset {
        name: "fig6",
        description: "Fixed Probability, random graph, 80000 edges",
        text: include_str!("../../presets/fig6.cfg"),
    },
    Preset {
        name: "fig7",
        description: "Dandelion, FP and PB, small world, 40000 edges",
        text: include_str!("../../presets/fig7.cfg"),
    },
    Preset {
        name: "fig1-pp",
        description: "Dandelion++ with a 6-step fail-safe, random graph, 40000 edges",
        text: include_str!("../../presets/fig1-pp.cfg"),
    },
];

/// Looks a preset up by name, with or without a `.cfg` suffix.
pub fn preset(name: &str) -> Option<&'static Preset> {
    let name = name.strip_suffix(".cfg").unwrap_or(name);
    PRESETS.iter().find(|p| p.name == name)
}
