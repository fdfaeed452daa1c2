//! Tic-Tac-Toe games as CBs: one move per frame, labelled `<player><cell>`
//! with cells numbered 0..8 row-major.
//!
//! # Random play
//!
//! Game `i` of `generate_games(n, seed)` draws from its own ChaCha8 stream:
//! `ChaCha8Rng::seed_from_u64(seed)` followed by `set_stream(i)`. At each
//! move the empty cells are listed in ascending order and one is picked
//! uniformly with [`uniform_index`] (rejection sampling on `next_u32`), so
//! a corpus depends only on `(n, seed)` and not on thread scheduling.
//!
//! # Grid format
//!
//! Rows of three 6-character cells joined by `|`, each cell centring
//! `X(t)`/`O(t)` or left blank; rows are separated by `------+------+------`.
//! Trailing whitespace is trimmed:
//!
//! ```text
//!  O(3) | X(0) | O(1)
//! ------+------+------
//!       | O(5) |
//! ------+------+------
//!  X(4) | X(6) | X(2)
//! ```

use std::fmt;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ComicBook, Corpus};

pub const LINES: [[usize; 3]; 8] = [
    [0, 1, 2],
    [3, 4, 5],
    [6, 7, 8],
    [0, 3, 6],
    [1, 4, 7],
    [2, 5, 8],
    [0, 4, 8],
    [2, 4, 6],
];

const SEPARATOR: &str = "------+------+------";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Player {
    X,
    O,
}

impl Player {
    pub fn other(self) -> Self {
        match self {
            Self::X => Self::O,
            Self::O => Self::X,
        }
    }

    fn symbol(self) -> char {
        match self {
            Self::X => 'X',
            Self::O => 'O',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Move {
    pub player: Player,
    pub cell: u8,
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.player.symbol(), self.cell)
    }
}

impl std::str::FromStr for Move {
    type Err = TttError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TttError::BadMove(s.to_owned());
        let mut chars = s.chars();
        let player = match chars.next() {
            Some('X') => Player::X,
            Some('O') => Player::O,
            _ => return Err(bad()),
        };
        let cell = match (chars.next(), chars.next()) {
            (Some(d @ '0'..='8'), None) => d as u8 - b'0',
            _ => return Err(bad()),
        };
        Ok(Self { player, cell })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    XWins,
    OWins,
    Draw,
    Unfinished,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Game {
    pub moves: Vec<Move>,
    pub outcome: Outcome,
}

impl Game {
    /// Builds a game whose outcome is recomputed from the moves.
    pub fn from_moves(moves: Vec<Move>) -> Self {
        let outcome = replay(&moves).outcome;
        Self { moves, outcome }
    }

    pub fn parse(moves: &[&str]) -> Result<Self, TttError> {
        let moves = moves.iter().map(|m| m.parse()).collect::<Result<_, _>>()?;
        Ok(Self::from_moves(moves))
    }

    pub fn labels(&self) -> Vec<String> {
        self.moves.iter().map(Move::to_string).collect()
    }

    pub fn to_cb(&self, id: impl Into<String>) -> ComicBook {
        ComicBook::from_sequence(id, &self.labels()).expect("legal games never repeat a cell")
    }

    /// Inverse of [`Game::to_cb`]: every frame must hold one move label.
    pub fn from_cb(cb: &ComicBook) -> Result<Self, TttError> {
        let moves = cb
            .frames()
            .iter()
            .map(|frame| {
                let mut events = frame.events();
                match (events.next(), events.next()) {
                    (Some(e), None) => e.as_str().parse(),
                    _ => Err(TttError::NotSingleMove(cb.id().to_owned())),
                }
            })
            .collect::<Result<_, _>>()?;
        Ok(Self::from_moves(moves))
    }

    pub fn board(&self) -> Board {
        let mut board = Board::default();
        for (t, m) in self.moves.iter().enumerate() {
            board.cells[m.cell as usize] = Some((m.player, t));
        }
        board
    }
}

/// Cell contents with the time each was played.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Board {
    pub cells: [Option<(Player, usize)>; 9],
}

impl Board {
    pub fn winner(&self) -> Option<Player> {
        LINES.iter().find_map(|&[a, b, c]| {
            let p = self.cells[a]?.0;
            (self.cells[b]?.0 == p && self.cells[c]?.0 == p).then_some(p)
        })
    }

    pub fn is_full(&self) -> bool {
        self.cells.iter().all(Option::is_some)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LegalityViolation {
    Alternation { time: usize },
    CellTaken { time: usize, cell: u8 },
    CellOutOfRange { time: usize, cell: u8 },
    PlayAfterEnd { time: usize },
    Incomplete,
    OutcomeMismatch { declared: Outcome, actual: Outcome },
}

impl fmt::Display for LegalityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Alternation { time } => write!(f, "move {time}: players must alternate, X first"),
            Self::CellTaken { time, cell } => write!(f, "move {time}: cell {cell} already taken"),
            Self::CellOutOfRange { time, cell } => {
                write!(f, "move {time}: cell {cell} is not 0..8")
            }
            Self::PlayAfterEnd { time } => {
                write!(f, "move {time}: play continues after the game ended")
            }
            Self::Incomplete => f.write_str("game stops before a win or a full board"),
            Self::OutcomeMismatch { declared, actual } => {
                write!(f, "declared outcome {declared:?} but play gives {actual:?}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LegalityReport {
    pub violations: Vec<LegalityViolation>,
    pub outcome: Outcome,
}

impl LegalityReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

fn replay(moves: &[Move]) -> LegalityReport {
    let mut violations = Vec::new();
    let mut board = Board::default();
    let mut ended: Option<Outcome> = None;
    for (time, m) in moves.iter().enumerate() {
        let expected = if time % 2 == 0 { Player::X } else { Player::O };
        if m.player != expected {
            violations.push(LegalityViolation::Alternation { time });
        }
        if ended.is_some() {
            violations.push(LegalityViolation::PlayAfterEnd { time });
        }
        let cell = m.cell as usize;
        if cell >= 9 {
            violations.push(LegalityViolation::CellOutOfRange { time, cell: m.cell });
            continue;
        }
        if board.cells[cell].is_some() {
            violations.push(LegalityViolation::CellTaken { time, cell: m.cell });
            continue;
        }
        board.cells[cell] = Some((m.player, time));
        if ended.is_none() {
            ended = match board.winner() {
                Some(Player::X) => Some(Outcome::XWins),
                Some(Player::O) => Some(Outcome::OWins),
                None if board.is_full() => Some(Outcome::Draw),
                None => None,
            };
        }
    }
    LegalityReport {
        violations,
        outcome: ended.unwrap_or(Outcome::Unfinished),
    }
}

/// Legal iff X starts, players alternate, no cell repeats, play stops at
/// the first completed line or a full board, and the declared outcome
/// matches the replayed one.
pub fn check_legal(game: &Game) -> LegalityReport {
    let mut report = replay(&game.moves);
    if report.outcome == Outcome::Unfinished {
        report.violations.push(LegalityViolation::Incomplete);
    }
    if game.outcome != report.outcome {
        report.violations.push(LegalityViolation::OutcomeMismatch {
            declared: game.outcome,
            actual: report.outcome,
        });
    }
    report
}

/// Uniform draw from `0..bound` by rejection sampling on 32-bit outputs.
pub fn uniform_index(rng: &mut impl RngCore, bound: usize) -> usize {
    assert!(bound > 0 && bound <= u32::MAX as usize);
    let bound = bound as u64;
    let zone = (1u64 << 32) / bound * bound;
    loop {
        let x = rng.next_u32() as u64;
        if x < zone {
            return (x % bound) as usize;
        }
    }
}

pub fn random_game(rng: &mut impl RngCore) -> Game {
    let mut board = Board::default();
    let mut moves = Vec::with_capacity(9);
    let mut player = Player::X;
    loop {
        let empty: Vec<usize> = (0..9).filter(|&c| board.cells[c].is_none()).collect();
        if empty.is_empty() || board.winner().is_some() {
            break;
        }
        let cell = empty[uniform_index(rng, empty.len())];
        board.cells[cell] = Some((player, moves.len()));
        moves.push(Move {
            player,
            cell: cell as u8,
        });
        player = player.other();
    }
    Game::from_moves(moves)
}

pub fn game_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `n` uniformly random legal games; CB ids are the game ordinals.
pub fn generate_games(n: usize, seed: u64) -> Corpus {
    let cbs = (0..n)
        .into_par_iter()
        .map(|i| random_game(&mut game_rng(seed, i as u64)).to_cb(i.to_string()))
        .collect();
    Corpus::new(cbs).expect("ordinal ids are unique")
}

pub fn render_grid(game: &Game) -> String {
    let board = game.board();
    let rows: Vec<String> = (0..3)
        .map(|r| {
            let cells: Vec<String> = (0..3)
                .map(|c| match board.cells[r * 3 + c] {
                    Some((p, t)) => format!("{:^6}", format!("{}({t})", p.symbol())),
                    None => " ".repeat(6),
                })
                .collect();
            cells.join("|").trim_end().to_owned()
        })
        .collect();
    let mut out = rows.join(&format!("\n{SEPARATOR}\n"));
    out.push('\n');
    out
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TttError {
    #[error("bad move label {0:?} (expected X0..X8 or O0..O8)")]
    BadMove(String),
    #[error("CB {0:?} has a frame that is not a single move")]
    NotSingleMove(String),
    #[error("malformed grid: {0}")]
    MalformedGrid(String),
    #[error("grid times must be 0..{expected} without gaps or repeats")]
    BadTimes { expected: usize },
    #[error("decoded moves do not alternate X, O, X, ...")]
    Alternation,
}

/// Parses a grid in the [`render_grid`] format back into a game.
pub fn decode_grid(text: &str) -> Result<Game, TttError> {
    let rows: Vec<&str> = text
        .lines()
        .filter(|l| {
            let t = l.trim();
            !t.is_empty() && !t.chars().all(|c| c == '-' || c == '+')
        })
        .collect();
    if rows.len() != 3 {
        return Err(TttError::MalformedGrid(format!(
            "expected 3 rows, found {}",
            rows.len()
        )));
    }
    let mut played: Vec<(usize, Player, u8)> = Vec::new();
    for (r, row) in rows.iter().enumerate() {
        let cells: Vec<&str> = row.split('|').map(str::trim).collect();
        if cells.len() != 3 {
            return Err(TttError::MalformedGrid(format!(
                "row {r}: expected 3 cells, found {}",
                cells.len()
            )));
        }
        for (c, cell) in cells.iter().enumerate() {
            if cell.is_empty() {
                continue;
            }
            let bad = || TttError::MalformedGrid(format!("row {r}: bad cell {cell:?}"));
            let player = match cell.as_bytes()[0] {
                b'X' => Player::X,
                b'O' => Player::O,
                _ => return Err(bad()),
            };
            let time: usize = cell[1..]
                .strip_prefix('(')
                .and_then(|s| s.strip_suffix(')'))
                .and_then(|s| s.parse().ok())
                .ok_or_else(bad)?;
            played.push((time, player, (r * 3 + c) as u8));
        }
    }
    played.sort_by_key(|(t, _, _)| *t);
    if played.iter().enumerate().any(|(i, (t, _, _))| *t != i) {
        return Err(TttError::BadTimes {
            expected: played.len(),
        });
    }
    let moves: Vec<Move> = played
        .into_iter()
        .map(|(_, player, cell)| Move { player, cell })
        .collect();
    if moves
        .iter()
        .enumerate()
        .any(|(t, m)| m.player != if t % 2 == 0 { Player::X } else { Player::O })
    {
        return Err(TttError::Alternation);
    }
    Ok(Game::from_moves(moves))
}

#[cfg(test)]
mod tests {
    use super::*;

    const EQ3: [&str; 7] = ["X1", "O2", "X8", "O0", "X6", "O4", "X7"];

    #[test]
    fn eq3_game_is_an_x_win() {
        let game = Game::parse(&EQ3).unwrap();
        let report = check_legal(&game);
        assert!(report.is_ok(), "{:?}", report.violations);
        assert_eq!(report.outcome, Outcome::XWins);
        assert_eq!(game.board().winner(), Some(Player::X));
    }

    #[test]
    fn eq3_grid() {
        let grid = render_grid(&Game::parse(&EQ3).unwrap());
        let expected = " O(3) | X(0) | O(1)\n\
                        ------+------+------\n      \
                        | O(5) |\n\
                        ------+------+------\n \
                        X(4) | X(6) | X(2)\n";
        assert_eq!(grid, expected);
    }

    #[test]
    fn game_b_grid() {
        let grid = render_grid(&Game::parse(&["X2", "O5", "X4", "O3", "X6"]).unwrap());
        let rows: Vec<&str> = grid.lines().collect();
        assert_eq!(rows[0], "      |      | X(0)");
        assert_eq!(rows[2], " O(3) | X(2) | O(1)");
        assert_eq!(rows[4], " X(4) |      |");
    }

    #[test]
    fn empty_grid_is_blank() {
        let grid = render_grid(&Game::from_moves(vec![]));
        let blank = "      |      |";
        assert_eq!(
            grid,
            format!("{blank}\n{SEPARATOR}\n{blank}\n{SEPARATOR}\n{blank}\n")
        );
        assert_eq!(decode_grid(&grid).unwrap().moves, vec![]);
    }

    #[test]
    fn illegal_games() {
        let report = check_legal(&Game::parse(&["X1", "X2", "O3"]).unwrap());
        assert!(report
            .violations
            .contains(&LegalityViolation::Alternation { time: 1 }));

        // X completes 0-1-2 at move 4, then play continues.
        let report = check_legal(&Game::parse(&["X0", "O3", "X1", "O4", "X2", "O5"]).unwrap());
        assert!(report
            .violations
            .contains(&LegalityViolation::PlayAfterEnd { time: 5 }));

        let report = check_legal(&Game::parse(&["X0", "O0"]).unwrap());
        assert!(report
            .violations
            .contains(&LegalityViolation::CellTaken { time: 1, cell: 0 }));

        let mut game = Game::parse(&EQ3).unwrap();
        game.outcome = Outcome::Draw;
        assert!(!check_legal(&game).is_ok());

        assert!(!check_legal(&Game::parse(&["X4"]).unwrap()).is_ok());
    }

    #[test]
    fn decode_first_reference_grid() {
        let grid = " O(5) | O(3) | X(0)\n\
                    ------+------+------\n \
                    O(7) | X(4) | O(1)\n\
                    ------+------+------\n \
                    X(8) | X(2) | X(6)\n";
        let game = decode_grid(grid).unwrap();
        assert_eq!(
            game.labels(),
            ["X2", "O5", "X7", "O1", "X4", "O0", "X8", "O3", "X6"]
        );
        assert_eq!(game.outcome, Outcome::XWins);
    }

    #[test]
    fn decode_rejects_bad_grids() {
        let dup = " X(0) | O(1) | X(2)\n X(2) |      |\n      |      |\n";
        assert!(matches!(decode_grid(dup), Err(TttError::BadTimes { .. })));
        let gap = " X(0) | O(1) | X(3)\n      |      |\n      |      |\n";
        assert!(matches!(decode_grid(gap), Err(TttError::BadTimes { .. })));
        let alt = " X(0) | X(1) |\n      |      |\n      |      |\n";
        assert_eq!(decode_grid(alt), Err(TttError::Alternation));
        assert!(matches!(
            decode_grid("X(0)\n"),
            Err(TttError::MalformedGrid(_))
        ));
        let junk = " Q(0) |      |\n      |      |\n      |      |\n";
        assert!(matches!(decode_grid(junk), Err(TttError::MalformedGrid(_))));
    }

    #[test]
    fn cb_round_trip() {
        let game = Game::parse(&EQ3).unwrap();
        let cb = game.to_cb("g");
        assert_eq!(Game::from_cb(&cb).unwrap(), game);
        let multi = ComicBook::new("m", vec![vec!["X1".into(), "O2".into()]]).unwrap();
        assert!(Game::from_cb(&multi).is_err());
        assert!("X9".parse::<Move>().is_err());
        assert!("Z1".parse::<Move>().is_err());
    }

    #[test]
    fn generation_is_seeded() {
        let a = generate_games(50, 7);
        assert_eq!(a, generate_games(50, 7));
        assert_ne!(a, generate_games(50, 8));
        for cb in a.cbs() {
            let game = Game::from_cb(cb).unwrap();
            assert!(check_legal(&game).is_ok());
            assert!((5..=9).contains(&game.moves.len()));
        }
    }

    #[test]
    fn uniform_index_stays_in_range() {
        let mut rng = game_rng(1, 0);
        let mut seen = [0usize; 7];
        for _ in 0..7000 {
            seen[uniform_index(&mut rng, 7)] += 1;
        }
        assert!(seen.iter().all(|&c| c > 800), "{seen:?}");
    }
}
