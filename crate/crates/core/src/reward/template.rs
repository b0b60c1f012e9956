use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::pattern::{Pattern, PatternLabel};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
    /// Back-and-forth sweep across all five lanes.
    Sweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequentialVariant {
    pub direction: Direction,
    /// Steps within each bar that rest.
    pub rest_steps: Vec<u32>,
}

/// Fixed variant pools, one per template family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantPool {
    pub sequential: Vec<SequentialVariant>,
    /// One bar of lane offsets around the dominant lane; `None` rests.
    pub repetitive: Vec<Vec<Option<i8>>>,
    /// Per-step rest probability.
    pub exploratory: Vec<f64>,
}

impl Default for VariantPool {
    fn default() -> Self {
        let seq = |direction, rest_steps: &[u32]| SequentialVariant { direction, rest_steps: rest_steps.to_vec() };
        VariantPool {
            sequential: vec![seq(Direction::Up, &[]), seq(Direction::Down, &[]), seq(Direction::Sweep, &[7])],
            repetitive: vec![
                vec![Some(0), None, Some(0), Some(1), Some(0), None, Some(0), Some(-1)],
                vec![Some(0), Some(0), None, Some(0), Some(1), Some(0), None, Some(-1)],
                vec![Some(0), None, Some(0), Some(0), None, Some(0), Some(1), None],
            ],
            exploratory: vec![0.4, 0.5, 0.6],
        }
    }
}

impl VariantPool {
    pub fn len(&self, family: Pattern) -> usize {
        match family {
            Pattern::Sequential => self.sequential.len(),
            Pattern::Repetitive => self.repetitive.len(),
            Pattern::Exploratory => self.exploratory.len(),
        }
    }

    pub fn is_empty(&self, family: Pattern) -> bool {
        self.len(family) == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateInstance {
    pub family: Pattern,
    pub variant_index: u32,
    pub bar_count: u32,
    pub steps_per_bar: u32,
}

impl TemplateInstance {
    pub fn grid_steps(&self) -> u32 {
        self.bar_count * self.steps_per_bar
    }
}

/// Picks the label's family and a seeded variant from its pool.
pub fn select_template(label: &PatternLabel, seed: u64, engine: &super::Engine) -> TemplateInstance {
    let family = label.label;
    let pool = engine.pool.len(family).max(1);
    let variant_index = seed::rng(seed::stream(seed, "template")).random_range(0..pool) as u32;
    TemplateInstance { family, variant_index, bar_count: engine.bar_count, steps_per_bar: engine.steps_per_bar }
}
