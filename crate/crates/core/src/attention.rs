//! The 5×5 attention crop and its up/down/noop control.

use std::collections::BTreeSet;

use crate::env::{GridState, Observation, RoomLayout, GRID_COLS, GRID_ROWS, IMAGE_CHANNELS, NUM_ROOMS};
use crate::numeric::Tensor;

pub const WINDOW_ROWS: usize = 5;
pub const MAX_TOP_ROW: usize = GRID_ROWS - WINDOW_ROWS;
pub const NUM_ATTENTION_ACTIONS: usize = 3;

/// Vertical position of the full-width window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct AttentionWindow {
    top_row: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttentionAction {
    Up,
    Down,
    Noop,
}

impl AttentionAction {
    pub const ALL: [AttentionAction; NUM_ATTENTION_ACTIONS] =
        [AttentionAction::Up, AttentionAction::Down, AttentionAction::Noop];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

impl AttentionWindow {
    pub fn new(top_row: usize) -> Self {
        AttentionWindow { top_row: top_row.min(MAX_TOP_ROW) }
    }

    pub fn top_row(&self) -> usize {
        self.top_row
    }

    pub fn bottom_row(&self) -> usize {
        self.top_row + WINDOW_ROWS - 1
    }

    pub fn contains_row(&self, row: usize) -> bool {
        (self.top_row..=self.bottom_row()).contains(&row)
    }

    pub fn apply(self, action: AttentionAction) -> Self {
        let top = match action {
            AttentionAction::Up => self.top_row.saturating_sub(1),
            AttentionAction::Down => self.top_row + 1,
            AttentionAction::Noop => self.top_row,
        };
        AttentionWindow::new(top)
    }
}

/// Rows `[top, top+4]` of the image, all columns and channels.
pub fn crop(observation: &Observation, window: AttentionWindow) -> Tensor {
    let row_len = GRID_COLS * IMAGE_CHANNELS;
    let start = window.top_row() * row_len;
    let data = observation.image.data()[start..start + WINDOW_ROWS * row_len].to_vec();
    Tensor::from_vec(&[WINDOW_ROWS, GRID_COLS, IMAGE_CHANNELS], data).expect("crop shape")
}

/// Rooms with at least one row inside the window.
pub fn visible_rooms(layout: &RoomLayout, window: AttentionWindow) -> BTreeSet<usize> {
    (0..NUM_ROOMS)
        .filter(|&room| {
            let (lo, hi) = layout.rows_of(room);
            lo <= window.bottom_row() && hi >= window.top_row()
        })
        .collect()
}

pub fn agent_in_window(state: &GridState, window: AttentionWindow) -> bool {
    window.contains_row(state.agent_row)
}
