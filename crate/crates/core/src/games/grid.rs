use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub const GRID_SIZE: usize = 5;

/// U+25A2, the empty cell.
pub const EMPTY_CELL: char = '\u{25A2}';

/// Filled-cell character used when grids are stored in files.
pub const STORED_FILLED_CELL: char = 'X';

/// A 5x5 black-and-white character image.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PixelGrid {
    cells: [[bool; GRID_SIZE]; GRID_SIZE],
}

impl PixelGrid {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_cells(cells: [[bool; GRID_SIZE]; GRID_SIZE]) -> Self {
        PixelGrid { cells }
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.cells[row][col]
    }

    pub fn set(&mut self, row: usize, col: usize, filled: bool) {
        self.cells[row][col] = filled;
    }

    pub fn flip(&mut self, row: usize, col: usize) {
        self.cells[row][col] = !self.cells[row][col];
    }

    pub fn filled_count(&self) -> usize {
        self.cells.iter().flatten().filter(|&&c| c).count()
    }

    /// Number of cells in which the two grids differ.
    pub fn distance(&self, other: &PixelGrid) -> usize {
        self.cells
            .iter()
            .flatten()
            .zip(other.cells.iter().flatten())
            .filter(|(a, b)| a != b)
            .count()
    }

    /// Parses five rows of five cells. Whitespace inside a row is ignored.
    pub fn parse_rows<S: AsRef<str>>(rows: &[S], filled: char) -> Result<Self, String> {
        if rows.len() != GRID_SIZE {
            return Err(format!("expected {GRID_SIZE} rows, got {}", rows.len()));
        }
        let mut grid = PixelGrid::empty();
        for (r, row) in rows.iter().enumerate() {
            let cells: Vec<char> = row.as_ref().chars().filter(|c| !c.is_whitespace()).collect();
            if cells.len() != GRID_SIZE {
                return Err(format!(
                    "row {} has {} cells, expected {GRID_SIZE}",
                    r + 1,
                    cells.len()
                ));
            }
            for (c, ch) in cells.into_iter().enumerate() {
                if ch == filled {
                    grid.cells[r][c] = true;
                } else if ch != EMPTY_CELL {
                    return Err(format!("unknown cell character '{ch}' in row {}", r + 1));
                }
            }
        }
        Ok(grid)
    }

    /// Rows with cells separated by single spaces, as shown to players.
    pub fn render(&self, filled: char) -> String {
        self.cells
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&c| if c { filled } else { EMPTY_CELL }.to_string())
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// Compact rows (no separators), as stored in instance files.
    pub fn rows(&self, filled: char) -> Vec<String> {
        self.cells
            .iter()
            .map(|row| row.iter().map(|&c| if c { filled } else { EMPTY_CELL }).collect())
            .collect()
    }
}

impl fmt::Debug for PixelGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PixelGrid{:?}", self.rows(STORED_FILLED_CELL))
    }
}

impl Serialize for PixelGrid {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.rows(STORED_FILLED_CELL).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PixelGrid {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rows = Vec::<String>::deserialize(deserializer)?;
        PixelGrid::parse_rows(&rows, STORED_FILLED_CELL).map_err(D::Error::custom)
    }
}

/// F1 between filled-cell sets. An empty drawing scores 0.
pub fn f1_score(target: &PixelGrid, drawn: &PixelGrid) -> f64 {
    let true_pos = target
        .cells
        .iter()
        .flatten()
        .zip(drawn.cells.iter().flatten())
        .filter(|(&t, &d)| t && d)
        .count() as f64;
    let drawn_n = drawn.filled_count() as f64;
    let target_n = target.filled_count() as f64;
    if true_pos == 0.0 {
        return 0.0;
    }
    let precision = true_pos / drawn_n;
    let recall = true_pos / target_n;
    2.0 * precision * recall / (precision + recall)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(rows: [&str; 5]) -> PixelGrid {
        PixelGrid::parse_rows(&rows, 'X').unwrap()
    }

    #[test]
    fn f1_four_hits_one_spurious() {
        let target = grid(["XXXXX", "▢▢▢▢▢", "▢▢▢▢▢", "▢▢▢▢▢", "▢▢▢▢▢"]);
        let drawn = grid(["XXXX▢", "X▢▢▢▢", "▢▢▢▢▢", "▢▢▢▢▢", "▢▢▢▢▢"]);
        // P = 4/5, R = 4/5
        assert!((f1_score(&target, &drawn) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn f1_identity_and_empty() {
        let target = grid(["X▢X▢X", "▢▢▢▢▢", "▢▢X▢▢", "▢▢▢▢▢", "▢▢▢▢X"]);
        assert_eq!(f1_score(&target, &target), 1.0);
        assert_eq!(f1_score(&target, &PixelGrid::empty()), 0.0);
    }

    #[test]
    fn serde_uses_compact_rows() {
        let g = grid(["X▢▢▢▢", "▢X▢▢▢", "▢▢X▢▢", "▢▢▢X▢", "▢▢▢▢X"]);
        let v = serde_json::to_value(g).unwrap();
        assert_eq!(v[0], "X▢▢▢▢");
        assert_eq!(serde_json::from_value::<PixelGrid>(v).unwrap(), g);
    }

    #[test]
    fn render_spaces_cells() {
        let g = grid(["X▢▢▢▢", "▢▢▢▢▢", "▢▢▢▢▢", "▢▢▢▢▢", "▢▢▢▢▢"]);
        assert!(g.render('#').starts_with("# ▢ ▢ ▢ ▢\n▢ ▢"));
    }
}
