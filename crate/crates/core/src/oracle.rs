//! Optimal goal-conditioned base agent with the three gating regimes.

use crate::attention::{agent_in_window, visible_rooms, AttentionWindow};
use crate::env::{Color, GridState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GatingMode {
    /// The agent always follows the subgoal.
    Unconstrained,
    /// The subgoal room must be visible in the window.
    PartialDecomposition,
    /// The subgoal room and the agent must both be visible.
    Constrained,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Subgoal {
    pub color: Color,
}

impl Subgoal {
    pub fn new(color: Color) -> Self {
        Subgoal { color }
    }

    pub fn room(&self, state: &GridState) -> usize {
        state.layout.room_with_color(self.color)
    }
}

pub fn gate_open(mode: GatingMode, state: &GridState, window: AttentionWindow, subgoal: Subgoal) -> bool {
    match mode {
        GatingMode::Unconstrained => true,
        GatingMode::PartialDecomposition => visible_rooms(&state.layout, window).contains(&subgoal.room(state)),
        GatingMode::Constrained => {
            agent_in_window(state, window) && visible_rooms(&state.layout, window).contains(&subgoal.room(state))
        }
    }
}

/// One step along the shortest path to the nearest row of the subgoal room.
pub fn optimal_delta(state: &GridState, subgoal: Subgoal) -> i32 {
    let (lo, hi) = state.layout.rows_of(subgoal.room(state));
    if state.agent_row < lo {
        1
    } else if state.agent_row > hi {
        -1
    } else {
        0
    }
}

pub fn act(mode: GatingMode, state: &GridState, window: AttentionWindow, subgoal: Subgoal) -> i32 {
    if gate_open(mode, state, window, subgoal) {
        optimal_delta(state, subgoal)
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{RoomLayout, DEFAULT_TIMEOUT, GRID_ROWS};
    use std::collections::VecDeque;

    fn state(layout: RoomLayout, row: usize) -> GridState {
        GridState {
            layout,
            agent_row: row,
            agent_col: 0,
            target_color: layout.color_of(3),
            steps_taken: 0,
            timeout: DEFAULT_TIMEOUT,
        }
    }

    /// BFS over the row graph (edges between adjacent rows). Returns the
    /// distance to the closest row of `room` and the first move of one
    /// shortest path.
    fn bfs(layout: &RoomLayout, start: usize, room: usize) -> (usize, i32) {
        let mut dist = [usize::MAX; GRID_ROWS];
        let mut first = [0i32; GRID_ROWS];
        let mut queue = VecDeque::from([start]);
        dist[start] = 0;
        while let Some(r) = queue.pop_front() {
            if layout.room_of_row(r) == room {
                return (dist[r], first[r]);
            }
            for d in [-1i32, 1] {
                let n = r as i32 + d;
                if (0..GRID_ROWS as i32).contains(&n) && dist[n as usize] == usize::MAX {
                    dist[n as usize] = dist[r] + 1;
                    first[n as usize] = if r == start { d } else { first[r] };
                    queue.push_back(n as usize);
                }
            }
        }
        unreachable!("every room is reachable")
    }

    #[test]
    fn first_step_matches_bfs() {
        let l = RoomLayout::canonical();
        let yellow = Subgoal::new(Color::Yellow);
        let red = Subgoal::new(Color::Red);
        assert_eq!(optimal_delta(&state(l, 0), yellow), bfs(&l, 0, 3).1);
        assert_eq!(optimal_delta(&state(l, 0), yellow), 1);
        assert_eq!(optimal_delta(&state(l, 8), yellow), 0);
        assert_eq!(optimal_delta(&state(l, 9), red), bfs(&l, 9, 0).1);
        assert_eq!(optimal_delta(&state(l, 9), red), -1);
    }

    #[test]
    fn gates() {
        let l = RoomLayout::canonical();
        for c in Color::ALL {
            for top in 0..=5 {
                assert!(gate_open(GatingMode::Unconstrained, &state(l, 4), AttentionWindow::new(top), Subgoal::new(c)));
            }
            assert!(!gate_open(GatingMode::Constrained, &state(l, 9), AttentionWindow::new(0), Subgoal::new(c)));
            assert_eq!(act(GatingMode::Constrained, &state(l, 9), AttentionWindow::new(0), Subgoal::new(c)), 0);
        }
        assert!(!gate_open(
            GatingMode::PartialDecomposition,
            &state(l, 0),
            AttentionWindow::new(5),
            Subgoal::new(Color::Red)
        ));
        assert!(gate_open(
            GatingMode::PartialDecomposition,
            &state(l, 0),
            AttentionWindow::new(5),
            Subgoal::new(Color::Green)
        ));
    }

    #[test]
    fn act_follows_gate() {
        let l = RoomLayout::canonical();
        let sg = Subgoal::new(Color::Yellow);
        assert_eq!(act(GatingMode::Unconstrained, &state(l, 3), AttentionWindow::new(0), sg), 1);
        for row in 0..GRID_ROWS {
            for top in 0..=5 {
                let w = AttentionWindow::new(top);
                let s = state(l, row);
                for c in Color::ALL {
                    let sg = Subgoal::new(c);
                    if gate_open(GatingMode::PartialDecomposition, &s, w, sg) {
                        assert_eq!(
                            act(GatingMode::PartialDecomposition, &s, w, sg),
                            act(GatingMode::Unconstrained, &s, w, sg)
                        );
                    }
                    let d = act(GatingMode::Constrained, &s, w, sg);
                    let (n, _) = s.apply_agent_move(d).unwrap();
                    assert!(n.agent_row < GRID_ROWS);
                    if !gate_open(GatingMode::Constrained, &s, w, sg) {
                        assert_eq!(n.agent_row, s.agent_row);
                    }
                }
            }
        }
    }

    #[test]
    fn exhaustive_paths_match_bfs() {
        for layout in RoomLayout::all() {
            for row in 0..GRID_ROWS {
                for c in Color::ALL {
                    let sg = Subgoal::new(c);
                    let (want, _) = bfs(&layout, row, layout.room_with_color(c));
                    let mut s = state(layout, row);
                    let mut steps = 0;
                    while optimal_delta(&s, sg) != 0 {
                        s.agent_row = (s.agent_row as i32 + optimal_delta(&s, sg)) as usize;
                        steps += 1;
                        assert!(steps <= GRID_ROWS);
                    }
                    assert_eq!(s.agent_room(), layout.room_with_color(c));
                    assert_eq!(steps, want);
                }
            }
        }
    }
}
