use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use super::grid::{Cell, OccupancyGrid};

/// Shortest 4-connected path under unit step cost, inclusive of both
/// endpoints. `open` holds one flag per door; closed door cells are walls.
/// Among equal-cost frontier cells the one with the smaller row, then column,
/// is expanded first, so results are reproducible.
pub fn astar(grid: &OccupancyGrid, from: Cell, to: Cell, open: &[bool]) -> Option<Vec<Cell>> {
    if !grid.contains(from) || !grid.contains(to) || !grid.passable(from, open) || !grid.passable(to, open) {
        return None;
    }
    let idx = |c: Cell| c.row * grid.width + c.col;
    let mut g = vec![usize::MAX; grid.width * grid.height];
    let mut parent: Vec<Option<Cell>> = vec![None; grid.width * grid.height];
    let mut closed = vec![false; grid.width * grid.height];
    let mut heap = BinaryHeap::new();
    g[idx(from)] = 0;
    heap.push(Reverse((from.manhattan(to), from.row, from.col)));
    while let Some(Reverse((_, row, col))) = heap.pop() {
        let cell = Cell::new(row, col);
        if closed[idx(cell)] {
            continue;
        }
        closed[idx(cell)] = true;
        if cell == to {
            let mut path = vec![to];
            let mut cur = to;
            while let Some(p) = parent[idx(cur)] {
                path.push(p);
                cur = p;
            }
            path.reverse();
            return Some(path);
        }
        let next_g = g[idx(cell)] + 1;
        for n in grid.neighbors(cell) {
            let i = idx(n);
            if closed[i] || !grid.passable(n, open) || next_g >= g[i] {
                continue;
            }
            g[i] = next_g;
            parent[i] = Some(cell);
            heap.push(Reverse((next_g + n.manhattan(to), n.row, n.col)));
        }
    }
    None
}

/// Step count of the shortest path by plain breadth-first search.
pub fn bfs_distance(grid: &OccupancyGrid, from: Cell, to: Cell, open: &[bool]) -> Option<usize> {
    if !grid.contains(from) || !grid.contains(to) || !grid.passable(from, open) || !grid.passable(to, open) {
        return None;
    }
    let idx = |c: Cell| c.row * grid.width + c.col;
    let mut dist = vec![usize::MAX; grid.width * grid.height];
    dist[idx(from)] = 0;
    let mut queue = VecDeque::from([from]);
    while let Some(c) = queue.pop_front() {
        if c == to {
            return Some(dist[idx(c)]);
        }
        for n in grid.neighbors(c) {
            if dist[idx(n)] == usize::MAX && grid.passable(n, open) {
                dist[idx(n)] = dist[idx(c)] + 1;
                queue.push_back(n);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::sim::{rasterize, Occupancy};

    fn open_grid(n: usize) -> OccupancyGrid {
        OccupancyGrid::from_occupancy(n, n, vec![Occupancy::Free; n * n])
    }

    #[test]
    fn same_cell() {
        let grid = open_grid(3);
        assert_eq!(astar(&grid, Cell::new(1, 1), Cell::new(1, 1), &[]), Some(vec![Cell::new(1, 1)]));
    }

    #[test]
    fn corner_to_corner() {
        let grid = open_grid(5);
        let path = astar(&grid, Cell::new(0, 0), Cell::new(4, 4), &[]).unwrap();
        assert_eq!(path.len(), 9);
        for w in path.windows(2) {
            assert_eq!(w[0].manhattan(w[1]), 1);
        }
    }

    #[test]
    fn closed_door_blocks_until_opened() {
        let grid = rasterize(&fixtures::two_room(), 1.0).unwrap();
        let a = grid.anchor("A").unwrap();
        let b = grid.anchor("B").unwrap();
        assert_eq!(astar(&grid, a, b, &[false]), None);
        let path = astar(&grid, a, b, &[true]).unwrap();
        assert_eq!(Some(path.len() - 1), bfs_distance(&grid, a, b, &[true]));
        assert!(path.iter().any(|c| matches!(grid.get(*c), Occupancy::Door(0))));
    }

    #[test]
    fn walls_are_never_crossed() {
        let mut cells = vec![Occupancy::Free; 25];
        for row in 0..4 {
            cells[row * 5 + 2] = Occupancy::Wall;
        }
        let grid = OccupancyGrid::from_occupancy(5, 5, cells);
        let path = astar(&grid, Cell::new(0, 0), Cell::new(0, 4), &[]).unwrap();
        assert_eq!(path.len(), 13);
        assert!(path.iter().all(|c| grid.get(*c) == Occupancy::Free));
        assert_eq!(astar(&grid, Cell::new(0, 0), Cell::new(0, 2), &[]), None);
    }

    #[test]
    fn tie_break_is_stable() {
        let grid = open_grid(4);
        let a = astar(&grid, Cell::new(0, 0), Cell::new(3, 3), &[]);
        let b = astar(&grid, Cell::new(0, 0), Cell::new(3, 3), &[]);
        assert_eq!(a, b);
    }
}
