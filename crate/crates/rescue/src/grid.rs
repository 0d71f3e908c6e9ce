use serde::{Deserialize, Serialize};

pub const GRID: i32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn on_grid(self) -> bool {
        (0..GRID).contains(&self.x) && (0..GRID).contains(&self.y)
    }

    pub fn offset(self, (dx, dy): (i32, i32)) -> Self {
        Self { x: self.x + dx, y: self.y + dy }
    }
}

/// Steps needed between two cells with 8-connected unit moves.
pub fn chebyshev(a: Cell, b: Cell) -> u32 {
    (a.x - b.x).unsigned_abs().max((a.y - b.y).unsigned_abs())
}

/// One unit move toward `target`, `(0, 0)` when already there.
pub fn low_level_move(from: Cell, target: Cell) -> (i32, i32) {
    ((target.x - from.x).signum(), (target.y - from.y).signum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moves_diagonally_then_straight() {
        assert_eq!(low_level_move(Cell::new(0, 0), Cell::new(3, 5)), (1, 1));
        assert_eq!(low_level_move(Cell::new(4, 4), Cell::new(4, 4)), (0, 0));
    }

    #[test]
    fn each_move_shortens_distance_by_one() {
        for sx in 0..GRID {
            for sy in 0..GRID {
                let target = Cell::new(7, 12);
                let mut at = Cell::new(sx, sy);
                let d = chebyshev(at, target);
                for k in 0..d {
                    at = at.offset(low_level_move(at, target));
                    assert!(at.on_grid());
                    assert_eq!(chebyshev(at, target), d - k - 1);
                }
                assert_eq!(at, target);
            }
        }
    }

    #[test]
    fn chebyshev_equals_bfs_distance() {
        use std::collections::VecDeque;
        let src = Cell::new(3, 9);
        let mut dist = vec![u32::MAX; (GRID * GRID) as usize];
        let idx = |c: Cell| (c.y * GRID + c.x) as usize;
        dist[idx(src)] = 0;
        let mut queue = VecDeque::from([src]);
        while let Some(c) = queue.pop_front() {
            for dx in -1..=1 {
                for dy in -1..=1 {
                    let nb = c.offset((dx, dy));
                    if nb.on_grid() && dist[idx(nb)] == u32::MAX {
                        dist[idx(nb)] = dist[idx(c)] + 1;
                        queue.push_back(nb);
                    }
                }
            }
        }
        for x in 0..GRID {
            for y in 0..GRID {
                assert_eq!(dist[idx(Cell::new(x, y))], chebyshev(src, Cell::new(x, y)));
            }
        }
    }
}
