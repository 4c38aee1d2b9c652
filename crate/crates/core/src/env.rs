//! The 10×5 four-room gridworld.
//!
//! Rooms are full-width horizontal strips stacked top to bottom. The agent
//! starts in the top-left cell and the episode ends when it enters the target
//! room (+1) or runs out of steps. Every other step costs 0.01.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::numeric::Tensor;
use crate::rng::Rng;

pub const GRID_ROWS: usize = 10;
pub const GRID_COLS: usize = 5;
pub const NUM_ROOMS: usize = 4;
pub const MAX_ROOM_HEIGHT: usize = 4;
/// One-hot colour planes followed by the agent plane.
pub const IMAGE_CHANNELS: usize = NUM_ROOMS + 1;
pub const AGENT_CHANNEL: usize = NUM_ROOMS;

pub const SUCCESS_REWARD: f64 = 1.0;
pub const STEP_COST: f64 = -0.01;
pub const DEFAULT_TIMEOUT: usize = 100;
pub const BOTTOM_ROOM: usize = NUM_ROOMS - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Color {
    Red,
    Green,
    Blue,
    Yellow,
}

impl Color {
    pub const ALL: [Color; NUM_ROOMS] = [Color::Red, Color::Green, Color::Blue, Color::Yellow];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Color> {
        Color::ALL.get(i).copied()
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Color::Red => "red",
            Color::Green => "green",
            Color::Blue => "blue",
            Color::Yellow => "yellow",
        };
        f.write_str(s)
    }
}

/// Room heights and colours, both listed top to bottom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RoomLayout {
    heights: [usize; NUM_ROOMS],
    colors: [Color; NUM_ROOMS],
}

impl RoomLayout {
    pub fn new(heights: [usize; NUM_ROOMS], colors: [Color; NUM_ROOMS]) -> Result<Self> {
        if heights.iter().any(|&h| h == 0 || h > MAX_ROOM_HEIGHT) {
            return Err(Error::config(format!("room heights {heights:?} must each lie in 1..=4")));
        }
        if heights.iter().sum::<usize>() != GRID_ROWS {
            return Err(Error::config(format!("room heights {heights:?} must sum to {GRID_ROWS}")));
        }
        let mut sorted = colors;
        sorted.sort();
        if sorted != Color::ALL {
            return Err(Error::config(format!("room colours {colors:?} are not a permutation")));
        }
        Ok(RoomLayout { heights, colors })
    }

    /// Heights [3, 3, 2, 2], colours red, green, blue, yellow.
    pub fn canonical() -> Self {
        RoomLayout { heights: [3, 3, 2, 2], colors: Color::ALL }
    }

    pub fn heights(&self) -> [usize; NUM_ROOMS] {
        self.heights
    }

    pub fn colors(&self) -> [Color; NUM_ROOMS] {
        self.colors
    }

    pub fn color_of(&self, room: usize) -> Color {
        self.colors[room]
    }

    pub fn room_with_color(&self, color: Color) -> usize {
        self.colors.iter().position(|&c| c == color).expect("colours are a permutation")
    }

    /// Inclusive row span of a room.
    pub fn rows_of(&self, room: usize) -> (usize, usize) {
        let start: usize = self.heights[..room].iter().sum();
        (start, start + self.heights[room] - 1)
    }

    pub fn room_of_row(&self, row: usize) -> usize {
        debug_assert!(row < GRID_ROWS);
        let mut end = 0;
        for (room, h) in self.heights.iter().enumerate() {
            end += h;
            if row < end {
                return room;
            }
        }
        NUM_ROOMS - 1
    }

    /// All compositions of 10 into four parts in `1..=4`.
    pub fn height_compositions() -> Vec<[usize; NUM_ROOMS]> {
        let mut out = Vec::new();
        for a in 1..=MAX_ROOM_HEIGHT {
            for b in 1..=MAX_ROOM_HEIGHT {
                for c in 1..=MAX_ROOM_HEIGHT {
                    let used = a + b + c;
                    if used < GRID_ROWS && GRID_ROWS - used <= MAX_ROOM_HEIGHT {
                        out.push([a, b, c, GRID_ROWS - used]);
                    }
                }
            }
        }
        out
    }

    pub fn color_orders() -> Vec<[Color; NUM_ROOMS]> {
        let mut out = Vec::with_capacity(24);
        let c = Color::ALL;
        for a in 0..4 {
            for b in 0..4 {
                for cc in 0..4 {
                    for d in 0..4 {
                        let idx = [a, b, cc, d];
                        let mut seen = [false; 4];
                        idx.iter().for_each(|&i| seen[i] = true);
                        if seen.iter().all(|&s| s) {
                            out.push([c[a], c[b], c[cc], c[d]]);
                        }
                    }
                }
            }
        }
        out
    }

    /// Every valid layout, heights-major.
    pub fn all() -> Vec<RoomLayout> {
        let orders = Self::color_orders();
        Self::height_compositions()
            .into_iter()
            .flat_map(|heights| orders.iter().map(move |&colors| RoomLayout { heights, colors }))
            .collect()
    }
}

impl fmt::Display for RoomLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.heights.iter().zip(&self.colors).map(|(h, c)| format!("{c}:{h}")).collect();
        f.write_str(&parts.join(" "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnvMode {
    /// Canonical layout every episode.
    Fixed,
    /// Layout drawn uniformly from all valid layouts each episode.
    Dynamic,
}

pub fn generate_layout(mode: EnvMode, rng: &mut Rng) -> RoomLayout {
    match mode {
        EnvMode::Fixed => RoomLayout::canonical(),
        EnvMode::Dynamic => {
            let heights = RoomLayout::height_compositions();
            let heights = heights[rng.gen_range(0..heights.len())];
            let mut colors = Color::ALL;
            colors.shuffle(rng);
            RoomLayout { heights, colors }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvConfig {
    pub mode: EnvMode,
    pub timeout: usize,
    /// Position (0 = top) of the room whose colour becomes the instruction.
    pub target_room: usize,
}

impl EnvConfig {
    pub fn new(mode: EnvMode) -> Self {
        EnvConfig { mode, timeout: DEFAULT_TIMEOUT, target_room: BOTTOM_ROOM }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridState {
    pub layout: RoomLayout,
    pub agent_row: usize,
    pub agent_col: usize,
    pub target_color: Color,
    pub steps_taken: usize,
    pub timeout: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// `[10 × 5 × 5]`: rows, columns, channels.
    pub image: Tensor,
    pub instruction: [f64; NUM_ROOMS],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
    pub done: bool,
    pub success: bool,
}

pub fn one_hot(color: Color) -> [f64; NUM_ROOMS] {
    let mut v = [0.0; NUM_ROOMS];
    v[color.index()] = 1.0;
    v
}

/// Starts an episode with the agent in the top-left cell.
pub fn reset(config: &EnvConfig, rng: &mut Rng) -> Result<(GridState, Observation)> {
    if config.target_room >= NUM_ROOMS {
        return Err(Error::config(format!("target room {} out of range", config.target_room)));
    }
    if config.timeout == 0 {
        return Err(Error::config("timeout must be positive"));
    }
    let layout = generate_layout(config.mode, rng);
    let state = GridState {
        layout,
        agent_row: 0,
        agent_col: 0,
        target_color: layout.color_of(config.target_room),
        steps_taken: 0,
        timeout: config.timeout,
    };
    let obs = state.render();
    Ok((state, obs))
}

impl GridState {
    pub fn room_of(&self, row: usize) -> usize {
        self.layout.room_of_row(row)
    }

    pub fn agent_room(&self) -> usize {
        self.room_of(self.agent_row)
    }

    pub fn target_room(&self) -> usize {
        self.layout.room_with_color(self.target_color)
    }

    pub fn in_target(&self) -> bool {
        self.agent_room() == self.target_room()
    }

    /// Fewest steps a perfect controller needs from the current position.
    /// An agent already in the target room still spends one step.
    pub fn optimal_length(&self) -> usize {
        let (lo, hi) = self.layout.rows_of(self.target_room());
        let dist = lo.saturating_sub(self.agent_row) + self.agent_row.saturating_sub(hi);
        dist.max(1)
    }

    pub fn render(&self) -> Observation {
        let mut image = Tensor::zeros(&[GRID_ROWS, GRID_COLS, IMAGE_CHANNELS]);
        for row in 0..GRID_ROWS {
            let color = self.layout.color_of(self.room_of(row)).index();
            for col in 0..GRID_COLS {
                let off = image.offset3(row, col, color);
                image.data_mut()[off] = 1.0;
            }
        }
        let off = image.offset3(self.agent_row, self.agent_col, AGENT_CHANNEL);
        image.data_mut()[off] = 1.0;
        Observation { image, instruction: one_hot(self.target_color) }
    }

    /// Moves the agent vertically by at most one row, clamped to the grid.
    pub fn apply_agent_move(&self, delta_row: i32) -> Result<(GridState, StepOutcome)> {
        if !(-1..=1).contains(&delta_row) {
            return Err(Error::contract(format!("agent move {delta_row} exceeds one row")));
        }
        let mut next = *self;
        let row = (self.agent_row as i64 + delta_row as i64).clamp(0, GRID_ROWS as i64 - 1);
        next.agent_row = row as usize;
        next.steps_taken += 1;
        let outcome = if next.in_target() {
            StepOutcome { reward: SUCCESS_REWARD, done: true, success: true }
        } else if next.steps_taken >= next.timeout {
            StepOutcome { reward: STEP_COST, done: true, success: false }
        } else {
            StepOutcome { reward: STEP_COST, done: false, success: false }
        };
        Ok((next, outcome))
    }
}

/// Episode return implied by the reward scheme.
pub fn expected_return(length: usize, success: bool) -> f64 {
    if success {
        1.0 - 0.01 * (length as f64 - 1.0)
    } else {
        -0.01 * length as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn canonical_state(row: usize) -> GridState {
        let layout = RoomLayout::canonical();
        GridState {
            layout,
            agent_row: row,
            agent_col: 0,
            target_color: Color::Yellow,
            steps_taken: 0,
            timeout: DEFAULT_TIMEOUT,
        }
    }

    #[test]
    fn fixed_layout_is_canonical() {
        let mut rng = seeded(0);
        for _ in 0..3 {
            let l = generate_layout(EnvMode::Fixed, &mut rng);
            assert_eq!(l.heights(), [3, 3, 2, 2]);
            assert_eq!(l.colors(), [Color::Red, Color::Green, Color::Blue, Color::Yellow]);
        }
    }

    #[test]
    fn dynamic_layouts_are_valid() {
        let mut rng = seeded(9);
        for _ in 0..500 {
            let l = generate_layout(EnvMode::Dynamic, &mut rng);
            assert!(RoomLayout::new(l.heights(), l.colors()).is_ok());
        }
    }

    /// Brute force over every 4-tuple in 1..=4 and every colour 4-tuple.
    #[test]
    fn enumeration_has_1056_layouts_all_reachable() {
        let mut heights = 0;
        for a in 1..=4 {
            for b in 1..=4 {
                for c in 1..=4 {
                    for d in 1..=4 {
                        if a + b + c + d == 10 {
                            heights += 1;
                        }
                    }
                }
            }
        }
        assert_eq!(heights, 44);
        let all = RoomLayout::all();
        assert_eq!(all.len(), 44 * 24);
        let unique: HashSet<_> = all.iter().copied().collect();
        assert_eq!(unique.len(), 1056);
        for l in &all {
            assert!(RoomLayout::new(l.heights(), l.colors()).is_ok());
        }

        let mut rng = seeded(3);
        let mut seen = HashSet::new();
        for _ in 0..40_000 {
            seen.insert(generate_layout(EnvMode::Dynamic, &mut rng));
        }
        assert_eq!(seen.len(), 1056);
    }

    #[test]
    fn invalid_layouts_rejected() {
        assert!(RoomLayout::new([5, 3, 1, 1], Color::ALL).is_err());
        assert!(RoomLayout::new([3, 3, 2, 1], Color::ALL).is_err());
        assert!(RoomLayout::new([3, 3, 2, 2], [Color::Red; 4]).is_err());
    }

    #[test]
    fn reset_fixed() {
        let (s, obs) = reset(&EnvConfig::new(EnvMode::Fixed), &mut seeded(0)).unwrap();
        assert_eq!((s.agent_row, s.agent_col, s.steps_taken), (0, 0, 0));
        assert_eq!(obs.instruction, [0.0, 0.0, 0.0, 1.0]);
        assert_eq!(s.target_color, Color::Yellow);
    }

    #[test]
    fn reset_dynamic_targets_bottom_room() {
        let mut rng = seeded(5);
        for _ in 0..50 {
            let (s, obs) = reset(&EnvConfig::new(EnvMode::Dynamic), &mut rng).unwrap();
            let bottom = s.layout.color_of(BOTTOM_ROOM);
            assert_eq!(obs.instruction, one_hot(bottom));
        }
        let a = reset(&EnvConfig::new(EnvMode::Dynamic), &mut seeded(8)).unwrap();
        let b = reset(&EnvConfig::new(EnvMode::Dynamic), &mut seeded(8)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn render_encoding() {
        let obs = canonical_state(0).render();
        // Row 1 is in the red room.
        assert_eq!(obs.image.at3(1, 2, 0), 1.0);
        for ch in 1..4 {
            assert_eq!(obs.image.at3(1, 2, ch), 0.0);
        }
        for r in 0..GRID_ROWS {
            for c in 0..GRID_COLS {
                let expect = if (r, c) == (0, 0) { 1.0 } else { 0.0 };
                assert_eq!(obs.image.at3(r, c, AGENT_CHANNEL), expect);
            }
        }
    }

    #[test]
    fn entering_target_succeeds() {
        let (next, out) = canonical_state(7).apply_agent_move(1).unwrap();
        assert_eq!(next.agent_row, 8);
        assert_eq!(out, StepOutcome { reward: 1.0, done: true, success: true });
    }

    #[test]
    fn standing_still_costs() {
        let (_, out) = canonical_state(4).apply_agent_move(0).unwrap();
        assert_eq!(out, StepOutcome { reward: -0.01, done: false, success: false });
    }

    #[test]
    fn clamps_at_top() {
        let (next, out) = canonical_state(0).apply_agent_move(-1).unwrap();
        assert_eq!(next.agent_row, 0);
        assert_eq!(out.reward, -0.01);
    }

    #[test]
    fn oversized_move_is_contract_violation() {
        assert!(matches!(canonical_state(0).apply_agent_move(2), Err(Error::Contract(_))));
    }

    #[test]
    fn timeout_ends_episode() {
        let mut s = canonical_state(0);
        s.timeout = 3;
        let mut outcomes = Vec::new();
        for _ in 0..3 {
            let (n, o) = s.apply_agent_move(0).unwrap();
            s = n;
            outcomes.push(o);
        }
        assert!(!outcomes[1].done);
        assert_eq!(outcomes[2], StepOutcome { reward: -0.01, done: true, success: false });
    }

    #[test]
    fn room_lookup() {
        let s = canonical_state(0);
        assert_eq!(s.room_of(0), 0);
        assert_eq!(s.room_of(5), 1);
        assert_eq!(s.room_of(9), 3);
        assert_eq!(s.optimal_length(), 8);
    }

    proptest! {
        #[test]
        fn render_stays_one_hot(layout_idx in 0usize..1056, moves in prop::collection::vec(-1i32..=1, 0..30)) {
            let layout = RoomLayout::all()[layout_idx];
            let mut s = GridState {
                layout, agent_row: 0, agent_col: 0,
                target_color: layout.color_of(BOTTOM_ROOM), steps_taken: 0, timeout: 1000,
            };
            for d in moves {
                s = s.apply_agent_move(d).unwrap().0;
                let obs = s.render();
                let mut agent_cells = 0.0;
                for r in 0..GRID_ROWS {
                    for c in 0..GRID_COLS {
                        let colour_sum: f64 = (0..NUM_ROOMS).map(|ch| obs.image.at3(r, c, ch)).sum();
                        prop_assert_eq!(colour_sum, 1.0);
                        agent_cells += obs.image.at3(r, c, AGENT_CHANNEL);
                    }
                }
                prop_assert_eq!(agent_cells, 1.0);
                prop_assert_eq!(obs.instruction.iter().sum::<f64>(), 1.0);
            }
        }

        #[test]
        fn done_exactly_on_target_or_timeout(moves in prop::collection::vec(-1i32..=1, 1..40), timeout in 1usize..30) {
            let mut s = canonical_state(0);
            s.timeout = timeout;
            for d in moves {
                let (n, o) = s.apply_agent_move(d).unwrap();
                prop_assert_eq!(o.done, n.in_target() || n.steps_taken >= timeout);
                prop_assert!(!o.success || (o.done && o.reward == 1.0));
                prop_assert!(o.done || o.reward == -0.01);
                s = n;
                if o.done { break; }
            }
        }
    }
}
