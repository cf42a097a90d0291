use serde::{Deserialize, Serialize};

use super::geometry::Obstacle;

/// Indices into the two matched sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Match {
    pub a: usize,
    pub b: usize,
    pub distance: f64,
}

/// Minimum-cost rectangular assignment: every row is assigned when
/// `rows <= cols`, every column otherwise. Returns `(row, col)` sorted by
/// row. Shortest augmenting paths with potentials, O(n^2 m).
pub fn assign(cost: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let rows = cost.len();
    let cols = cost.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    if rows > cols {
        let t: Vec<Vec<f64>> = (0..cols).map(|j| (0..rows).map(|i| cost[i][j]).collect()).collect();
        let mut pairs: Vec<_> = assign(&t).into_iter().map(|(j, i)| (i, j)).collect();
        pairs.sort_unstable();
        return pairs;
    }
    let (n, m) = (rows, cols);
    // 1-based, column 0 is the virtual start.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut pairs: Vec<(usize, usize)> = (1..=m).filter(|&j| p[j] != 0).map(|j| (p[j] - 1, j - 1)).collect();
    pairs.sort_unstable();
    pairs
}

/// Matches `min(|a|, |b|)` pairs minimizing total Euclidean distance.
pub fn match_obstacles(a: &[Obstacle], b: &[Obstacle]) -> Vec<Match> {
    let cost: Vec<Vec<f64>> = a
        .iter()
        .map(|x| b.iter().map(|y| x.position.distance(y.position)).collect())
        .collect();
    assign(&cost)
        .into_iter()
        .map(|(i, j)| Match {
            a: i,
            b: j,
            distance: cost[i][j],
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::geometry::{ObstacleClass, Vec2};
    use proptest::prelude::*;

    fn pts(p: &[(f64, f64)]) -> Vec<Obstacle> {
        p.iter()
            .enumerate()
            .map(|(i, &(x, y))| Obstacle::new(i as u32, Vec2::new(x, y), None, ObstacleClass::Car))
            .collect()
    }

    fn total(m: &[Match]) -> f64 {
        m.iter().map(|x| x.distance).sum()
    }

    /// Minimum over all injections of the smaller set into the larger.
    fn exhaustive(cost: &[Vec<f64>]) -> f64 {
        fn go(cost: &[Vec<f64>], row: usize, used: &mut Vec<bool>) -> f64 {
            if row == cost.len() {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for j in 0..used.len() {
                if !used[j] {
                    used[j] = true;
                    best = best.min(cost[row][j] + go(cost, row + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        let (r, c) = (cost.len(), cost[0].len());
        if r <= c {
            go(cost, 0, &mut vec![false; c])
        } else {
            let t: Vec<Vec<f64>> = (0..c).map(|j| (0..r).map(|i| cost[i][j]).collect()).collect();
            go(&t, 0, &mut vec![false; r])
        }
    }

    #[test]
    fn examples() {
        let m = match_obstacles(&pts(&[(0.0, 0.0)]), &pts(&[(0.0, 0.0)]));
        assert_eq!(m, [Match { a: 0, b: 0, distance: 0.0 }]);

        let m = match_obstacles(&pts(&[(0.0, 0.0), (10.0, 0.0)]), &pts(&[(9.0, 0.0), (1.0, 0.0)]));
        assert_eq!(m.iter().map(|x| (x.a, x.b)).collect::<Vec<_>>(), [(0, 1), (1, 0)]);
        assert_eq!(total(&m), 2.0);

        let m = match_obstacles(&pts(&[(0.0, 0.0), (5.0, 0.0)]), &pts(&[(4.0, 0.0)]));
        assert_eq!(m.len(), 1);
        assert_eq!((m[0].a, m[0].b), (1, 0));
        assert!(match_obstacles(&[], &pts(&[(1.0, 1.0)])).is_empty());
    }

    #[test]
    fn deterministic_on_ties() {
        let a = pts(&[(0.0, 0.0), (0.0, 0.0)]);
        let b = pts(&[(0.0, 0.0), (0.0, 0.0)]);
        assert_eq!(match_obstacles(&a, &b), match_obstacles(&a, &b));
    }

    proptest! {
        #[test]
        fn optimal_against_permutations(
            a in prop::collection::vec((-20.0..20.0f64, -20.0..20.0f64), 1..=6),
            b in prop::collection::vec((-20.0..20.0f64, -20.0..20.0f64), 1..=6),
        ) {
            let (a, b) = (pts(&a), pts(&b));
            let m = match_obstacles(&a, &b);
            prop_assert_eq!(m.len(), a.len().min(b.len()));
            let mut seen_a: Vec<_> = m.iter().map(|x| x.a).collect();
            let mut seen_b: Vec<_> = m.iter().map(|x| x.b).collect();
            seen_a.dedup();
            seen_b.sort_unstable();
            seen_b.dedup();
            prop_assert_eq!(seen_a.len(), m.len());
            prop_assert_eq!(seen_b.len(), m.len());
            let cost: Vec<Vec<f64>> = a.iter().map(|x| b.iter().map(|y| x.position.distance(y.position)).collect()).collect();
            prop_assert!((total(&m) - exhaustive(&cost)).abs() < 1e-9);
        }
    }
}
