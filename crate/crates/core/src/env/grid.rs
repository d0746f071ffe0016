//! Gridworlds with obstacles and hazard cells.
//!
//! Maps are plain text, one row per line:
//!
//! | symbol | cell |
//! |--------|------|
//! | `#` | wall |
//! | `.` | free |
//! | `S` | start (exactly one) |
//! | `G` | policy goal (at least one) |
//! | `!` | hazard |
//!
//! Every non-wall cell is a state and a goal. Entering or remaining in a
//! hazard stops the robot with probability `hazard_stop_prob`, which moves
//! it to an absorbing fail state whose goal no cell shares.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{ActionId, GoalId, MdpSpec, MultiGoalMdp, StateId};

pub const DEFAULT_HAZARD_STOP_PROB: f64 = 0.75;

/// The bundled layout: a three-move corridor through one hazard, and a
/// seven-move detour that branches off after the first move.
pub const DEFAULT_RISKY_MAP: &str = "\
######
#S.!G#
##.#.#
##...#
######
";

/// The default layout with the hazard removed.
pub const DEFAULT_SAFE_MAP: &str = "\
######
#S..G#
##.#.#
##...#
######
";

/// Up, down, left, right, stay.
pub const GRID_ACTIONS: [&str; 5] = ["up", "down", "left", "right", "stay"];
const MOVES: [(isize, isize); 5] = [(-1, 0), (1, 0), (0, -1), (0, 1), (0, 0)];

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cell {
    Free,
    Wall,
    Start,
    Goal,
    Hazard,
}

impl Cell {
    fn from_symbol(c: char) -> Option<Self> {
        Some(match c {
            '.' => Cell::Free,
            '#' => Cell::Wall,
            'S' => Cell::Start,
            'G' => Cell::Goal,
            '!' => Cell::Hazard,
            _ => return None,
        })
    }

    fn symbol(self) -> char {
        match self {
            Cell::Free => '.',
            Cell::Wall => '#',
            Cell::Start => 'S',
            Cell::Goal => 'G',
            Cell::Hazard => '!',
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridMap {
    width: usize,
    height: usize,
    cells: Vec<Cell>,
    pub hazard_stop_prob: f64,
}

impl GridMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell(&self, row: usize, col: usize) -> Cell {
        self.cells[row * self.width + col]
    }

    pub fn start(&self) -> (usize, usize) {
        let i = self.cells.iter().position(|&c| c == Cell::Start).unwrap();
        (i / self.width, i % self.width)
    }

    /// `(row, col)` of every cell marked `G`.
    pub fn goal_cells(&self) -> Vec<(usize, usize)> {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == Cell::Goal)
            .map(|(i, _)| (i / self.width, i % self.width))
            .collect()
    }

    /// State (and goal) index of a non-wall cell. Free cells are numbered
    /// in row-major order; the fail state comes last.
    pub fn state_of_cell(&self, row: usize, col: usize) -> Option<StateId> {
        if row >= self.height || col >= self.width || self.cell(row, col) == Cell::Wall {
            return None;
        }
        let idx = row * self.width + col;
        Some(StateId(
            self.cells[..idx].iter().filter(|&&c| c != Cell::Wall).count(),
        ))
    }

    pub fn cell_of_state(&self, s: StateId) -> Option<(usize, usize)> {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != Cell::Wall)
            .nth(s.0)
            .map(|(i, _)| (i / self.width, i % self.width))
    }

    pub fn num_open_cells(&self) -> usize {
        self.cells.iter().filter(|&&c| c != Cell::Wall).count()
    }

    /// The absorbing state a hazard stop leads to.
    pub fn fail_state(&self) -> StateId {
        StateId(self.num_open_cells())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for row in self.cells.chunks(self.width) {
            out.extend(row.iter().map(|c| c.symbol()));
            out.push('\n');
        }
        out
    }
}

/// Parses the text map format. Trailing blank lines and `\r` are ignored.
pub fn parse_grid_map(text: &str) -> Result<GridMap> {
    let lines: Vec<&str> = text
        .trim_end_matches(['\n', '\r', ' '])
        .lines()
        .map(|l| l.trim_end_matches('\r'))
        .collect();
    let err = |line: usize, column: usize, message: String| Error::MapParse {
        line,
        column,
        message,
    };
    if lines.is_empty() || lines[0].is_empty() {
        return Err(err(1, 1, "empty map".into()));
    }
    let width = lines[0].chars().count();
    let mut cells = Vec::with_capacity(width * lines.len());
    for (r, line) in lines.iter().enumerate() {
        let n = line.chars().count();
        if n != width {
            return Err(err(
                r + 1,
                n.min(width) + 1,
                format!("row has {n} cells, expected {width}"),
            ));
        }
        for (c, ch) in line.chars().enumerate() {
            let cell = Cell::from_symbol(ch)
                .ok_or_else(|| err(r + 1, c + 1, format!("unknown symbol {ch:?}")))?;
            cells.push(cell);
        }
    }
    let starts: Vec<usize> = (0..cells.len()).filter(|&i| cells[i] == Cell::Start).collect();
    match starts.len() {
        1 => {}
        0 => return Err(err(1, 1, "map has no start cell 'S'".into())),
        _ => {
            let i = starts[1];
            return Err(err(i / width + 1, i % width + 1, "second start cell 'S'".into()));
        }
    }
    if !cells.contains(&Cell::Goal) {
        return Err(err(1, 1, "map has no goal cell 'G'".into()));
    }
    Ok(GridMap {
        width,
        height: lines.len(),
        cells,
        hazard_stop_prob: DEFAULT_HAZARD_STOP_PROB,
    })
}

pub fn default_risky_map() -> GridMap {
    parse_grid_map(DEFAULT_RISKY_MAP).expect("bundled map parses")
}

pub fn default_safe_map() -> GridMap {
    parse_grid_map(DEFAULT_SAFE_MAP).expect("bundled map parses")
}

/// Builds the gridworld MDP: five actions, moves into walls or off the map
/// leave the robot in place, and every `G` cell is an equally likely
/// policy goal.
pub fn build_risky_gridworld(map: &GridMap, horizon: usize, discount: f64) -> Result<MultiGoalMdp> {
    if !(0.0..=1.0).contains(&map.hazard_stop_prob) {
        return Err(Error::InvalidMdp(format!(
            "hazard stop probability {} outside [0, 1]",
            map.hazard_stop_prob
        )));
    }
    let open = map.num_open_cells();
    let fail = StateId(open);
    let num_states = open + 1;
    let num_actions = MOVES.len();

    let mut transitions = Vec::with_capacity(num_states * num_actions);
    let mut labels = Vec::with_capacity(num_states);
    for s in 0..open {
        let (r, c) = map.cell_of_state(StateId(s)).unwrap();
        labels.push(format!("({r},{c})"));
        for (dr, dc) in MOVES {
            let (nr, nc) = (r as isize + dr, c as isize + dc);
            let dest = if nr < 0 || nc < 0 {
                None
            } else {
                map.state_of_cell(nr as usize, nc as usize)
            }
            .unwrap_or(StateId(s));
            let (dr_, dc_) = map.cell_of_state(dest).unwrap();
            let row = if map.cell(dr_, dc_) == Cell::Hazard {
                vec![
                    (fail, map.hazard_stop_prob),
                    (dest, 1.0 - map.hazard_stop_prob),
                ]
            } else {
                vec![(dest, 1.0)]
            };
            transitions.push(row);
        }
    }
    labels.push("fail".into());
    for _ in 0..num_actions {
        transitions.push(vec![(fail, 1.0)]);
    }

    let goals = map.goal_cells();
    let p = 1.0 / goals.len() as f64;
    let policy_goals = goals
        .iter()
        .map(|&(r, c)| (GoalId(map.state_of_cell(r, c).unwrap().0), p))
        .collect();
    let (sr, sc) = map.start();
    let mut terminal = vec![false; num_states];
    terminal[fail.0] = true;

    MultiGoalMdp::new(MdpSpec {
        name: "risky-grid".into(),
        num_states,
        num_actions,
        num_goals: num_states,
        start: vec![(map.state_of_cell(sr, sc).unwrap(), 1.0)],
        transitions,
        goal_map: (0..num_states).map(GoalId).collect(),
        terminal,
        policy_goals,
        horizon,
        discount,
        state_labels: labels,
        action_labels: GRID_ACTIONS.iter().map(|s| s.to_string()).collect(),
    })
}

/// Action index of a named grid move.
pub fn grid_action(name: &str) -> Option<ActionId> {
    GRID_ACTIONS.iter().position(|&n| n == name).map(ActionId)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_simple_row() {
        let m = parse_grid_map("S.G").unwrap();
        assert_eq!((m.width(), m.height()), (3, 1));
        assert_eq!(m.start(), (0, 0));
        assert_eq!(m.goal_cells(), vec![(0, 2)]);
        assert_eq!(m.state_of_cell(0, 2), Some(StateId(2)));
    }

    #[test]
    fn parses_hazard() {
        let m = parse_grid_map("S!G").unwrap();
        assert_eq!(m.cell(0, 1), Cell::Hazard);
    }

    #[test]
    fn ragged_row_reports_line_three() {
        match parse_grid_map("S.\n.G\n..x") {
            Err(Error::MapParse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_start_and_goal_counts() {
        assert!(matches!(parse_grid_map("..G"), Err(Error::MapParse { .. })));
        match parse_grid_map("S.S\n..G") {
            Err(Error::MapParse { line, column, .. }) => assert_eq!((line, column), (1, 3)),
            other => panic!("{other:?}"),
        }
        assert!(parse_grid_map("S..").is_err());
        match parse_grid_map("S?G") {
            Err(Error::MapParse { line, column, .. }) => assert_eq!((line, column), (1, 2)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn text_round_trips() {
        let m = default_risky_map();
        assert_eq!(m.to_text(), DEFAULT_RISKY_MAP);
        assert_eq!((m.width(), m.height()), (6, 5));
    }

    #[test]
    fn hazard_row_splits_mass() {
        let m = parse_grid_map("S!G").unwrap();
        let mdp = build_risky_gridworld(&m, 3, 0.9).unwrap();
        let right = grid_action("right").unwrap();
        let dense = mdp.transition_dense(StateId(0), right).unwrap();
        assert_eq!(dense, vec![0.0, 0.25, 0.0, 0.75]);
        assert!(mdp.is_terminal(m.fail_state()));
        assert_eq!(mdp.reward(m.fail_state(), GoalId(2)), 0.0);
    }

    #[test]
    fn walls_and_borders_block() {
        let m = parse_grid_map("S#G").unwrap();
        let mdp = build_risky_gridworld(&m, 3, 0.9).unwrap();
        for a in mdp.actions() {
            assert_eq!(mdp.transition_dense(StateId(0), a).unwrap()[0], 1.0);
        }
    }
}
