//! Exact accumulation of follower path costs.
//!
//! Cell costs are stored as integer levels (`cost = level * cost_scale`). A
//! grid step between cells with levels `a` and `b` integrates the cost field
//! trapezoidally: `step_length * (cost(a) + cost(b)) / 2`. Axial steps have
//! length `resolution`, diagonal steps `resolution * sqrt(2)`, so every path
//! cost has the closed form
//!
//! ```text
//! resolution * cost_scale / 2 * (axial + diagonal * sqrt(2))
//! ```
//!
//! with integer `axial` and `diagonal` accumulators. [`PathCost`] keeps those
//! two integers and orders them exactly, which makes "the optimistic path
//! costs the same as the optimum" an exact equality instead of a
//! floating-point coincidence.

use std::cmp::Ordering;
use std::ops::Add;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct PathCost {
    /// Sum of `level(a) + level(b)` over axial steps.
    pub axial: u64,
    /// Sum of `level(a) + level(b)` over diagonal steps.
    pub diagonal: u64,
}

impl PathCost {
    pub const ZERO: PathCost = PathCost {
        axial: 0,
        diagonal: 0,
    };

    pub fn step(level_a: u32, level_b: u32, diagonal: bool) -> Self {
        let sum = level_a as u64 + level_b as u64;
        if diagonal {
            PathCost {
                axial: 0,
                diagonal: sum,
            }
        } else {
            PathCost {
                axial: sum,
                diagonal: 0,
            }
        }
    }

    /// Lower bound for any path spanning `dx` columns and `dy` rows when
    /// every cell costs at least `min_level` (octile distance).
    pub fn octile_bound(dx: usize, dy: usize, min_level: u32) -> Self {
        let diag = dx.min(dy) as u64;
        let straight = dx.max(dy) as u64 - diag;
        let w = 2 * min_level as u64;
        PathCost {
            axial: straight * w,
            diagonal: diag * w,
        }
    }

    /// Physical cost, where `unit = resolution * cost_scale / 2`.
    pub fn to_real(self, unit: f64) -> f64 {
        unit * (self.axial as f64 + self.diagonal as f64 * std::f64::consts::SQRT_2)
    }
}

impl Add for PathCost {
    type Output = PathCost;

    fn add(self, rhs: PathCost) -> PathCost {
        PathCost {
            axial: self.axial + rhs.axial,
            diagonal: self.diagonal + rhs.diagonal,
        }
    }
}

impl Ord for PathCost {
    fn cmp(&self, other: &Self) -> Ordering {
        // a1 + b1*sqrt(2) <=> a2 + b2*sqrt(2)  iff  (a1 - a2) <=> (b2 - b1)*sqrt(2)
        let lhs = self.axial as i128 - other.axial as i128;
        let rhs = other.diagonal as i128 - self.diagonal as i128;
        match (lhs.signum(), rhs.signum()) {
            (0, 0) => Ordering::Equal,
            (l, r) if l >= 0 && r <= 0 => Ordering::Greater,
            (l, r) if l <= 0 && r >= 0 => Ordering::Less,
            (1, 1) => (lhs * lhs).cmp(&(2 * rhs * rhs)),
            _ => (2 * rhs * rhs).cmp(&(lhs * lhs)),
        }
    }
}

impl PartialOrd for PathCost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
