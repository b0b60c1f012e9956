use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::template::{Direction, TemplateInstance};
use super::Engine;
use crate::canonical;
use crate::corpus::SWEEP;
use crate::envelope::EngineParams;
use crate::pattern::Pattern;
use crate::seed;
use crate::trace::LANE_COUNT;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoteEvent {
    pub onset_s: f64,
    pub lane: u8,
    pub accented: bool,
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoteSequence {
    pub events: Vec<NoteEvent>,
    pub total_duration_s: f64,
    pub tempo_bpm: f64,
    #[serde(with = "canonical::seed_string")]
    pub seed: u64,
}

impl NoteSequence {
    /// Eighth-note step length at this tempo.
    pub fn step_s(&self) -> f64 {
        30.0 / self.tempo_bpm
    }
}

fn reflect(lane: i16) -> u8 {
    let top = LANE_COUNT as i16 - 1;
    let l = if lane < 0 {
        -lane
    } else if lane > top {
        2 * top - lane
    } else {
        lane
    };
    l.clamp(0, top) as u8
}

/// Lane (or rest) for every grid step. Depends only on the template, the
/// dominant lane and the seed, never on engine parameters.
fn lane_grid(template: &TemplateInstance, dominant_lane: u8, seed: u64, engine: &Engine) -> Vec<Option<u8>> {
    let steps = template.grid_steps() as usize;
    let per_bar = template.steps_per_bar.max(1) as usize;
    let mut rng = seed::rng(seed::stream(seed, "compose.lanes"));
    let idx = template.variant_index as usize;
    match template.family {
        Pattern::Sequential => {
            let v = &engine.pool.sequential[idx % engine.pool.sequential.len()];
            let start = rng.random_range(0..LANE_COUNT) as usize;
            let five = LANE_COUNT as usize;
            (0..steps)
                .map(|k| {
                    if v.rest_steps.contains(&((k % per_bar) as u32)) {
                        return None;
                    }
                    Some(match v.direction {
                        Direction::Up => ((start + k) % five) as u8,
                        Direction::Down => ((start + five * steps - k) % five) as u8,
                        Direction::Sweep => SWEEP[(start + k) % SWEEP.len()],
                    })
                })
                .collect()
        }
        Pattern::Repetitive => {
            let bar = &engine.pool.repetitive[idx % engine.pool.repetitive.len()];
            (0..steps)
                .map(|k| bar[k % bar.len()].map(|off| reflect(dominant_lane as i16 + off as i16)))
                .collect()
        }
        Pattern::Exploratory => {
            let rest_p = engine.pool.exploratory[idx % engine.pool.exploratory.len()];
            let mut order: Vec<u8> = (0..LANE_COUNT).collect();
            let mut next = 0usize;
            (0..steps)
                .map(|k| {
                    if k % per_bar == 0 {
                        order.shuffle(&mut rng);
                        next = 0;
                    }
                    if rng.random::<f64>() < rest_p {
                        None
                    } else {
                        let lane = order[next % order.len()];
                        next += 1;
                        Some(lane)
                    }
                })
                .collect()
        }
    }
}

/// Lays the template out on an eighth-note grid at the requested tempo and
/// marks `round(accent_ratio * sounding)` events as accented.
pub fn compose(
    template: &TemplateInstance,
    params: &EngineParams,
    dominant_lane: u8,
    seed: u64,
    engine: &Engine,
) -> NoteSequence {
    let step_s = 30.0 / params.tempo_bpm;
    let grid = lane_grid(template, dominant_lane.min(LANE_COUNT - 1), seed, engine);
    let mut events: Vec<NoteEvent> = grid
        .iter()
        .enumerate()
        .filter_map(|(k, lane)| {
            lane.map(|lane| NoteEvent { onset_s: k as f64 * step_s, lane, accented: false, duration_s: step_s })
        })
        .collect();

    // Accent positions come from a fixed permutation so that a smaller ratio
    // accents a subset of the notes a larger ratio would.
    let mut order: Vec<usize> = (0..events.len()).collect();
    order.shuffle(&mut seed::rng(seed::stream(seed, "compose.accents")));
    let ratio = params.accent_ratio.clamp(0.0, 1.0);
    let accented = (ratio * events.len() as f64).round() as usize;
    for &i in &order[..accented.min(events.len())] {
        events[i].accented = true;
    }

    NoteSequence {
        events,
        total_duration_s: grid.len() as f64 * step_s,
        tempo_bpm: params.tempo_bpm,
        seed,
    }
}
