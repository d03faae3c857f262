//! Derivative-free angle line search on [-π/2, π/2].

use std::f64::consts::FRAC_PI_2;

/// Default grid spacing in degrees.
pub const DEFAULT_GRID_DEG: f64 = 0.5;

const REL_TIE: f64 = 1e-12;

fn better(candidate: (f64, f64), incumbent: (f64, f64)) -> bool {
    let (phi_c, v_c) = candidate;
    let (phi_i, v_i) = incumbent;
    let tol = REL_TIE * v_i.abs().max(v_c.abs()).max(1e-300);
    if v_c > v_i + tol {
        true
    } else if (v_c - v_i).abs() <= tol {
        phi_c.abs() < phi_i.abs()
    } else {
        false
    }
}

/// Uniform grid over [-π/2, π/2] with spacing `grid_deg`, both ends included.
pub fn angle_grid(grid_deg: f64) -> Vec<f64> {
    assert!(grid_deg > 0.0 && grid_deg.is_finite());
    let n = (180.0 / grid_deg).round() as usize;
    let step = std::f64::consts::PI / n as f64;
    let half = n as f64 / 2.0;
    (0..=n)
        .map(|k| ((k as f64 - half) * step).clamp(-FRAC_PI_2, FRAC_PI_2))
        .collect()
}

/// Maximizes `objective` over the grid, then tries one parabolic refinement through
/// the best point and its two neighbours. The refined angle is kept only when it
/// does not lower the objective. Ties go to the smaller `|φ|`.
pub fn maximize_angle<F: FnMut(f64) -> f64>(mut objective: F, grid_deg: f64) -> f64 {
    let grid = angle_grid(grid_deg);
    let values: Vec<f64> = grid.iter().map(|&phi| objective(phi)).collect();
    let mut best = 0;
    for k in 1..grid.len() {
        if better((grid[k], values[k]), (grid[best], values[best])) {
            best = k;
        }
    }
    let mut incumbent = (grid[best], values[best]);
    if best > 0 && best + 1 < grid.len() {
        let (ym, y0, yp) = (values[best - 1], values[best], values[best + 1]);
        let denom = ym - 2.0 * y0 + yp;
        if denom < 0.0 {
            let delta = 0.5 * (ym - yp) / denom;
            if delta.abs() <= 0.5 && delta != 0.0 {
                let step = grid[best + 1] - grid[best];
                let phi = grid[best] + delta * step;
                let v = objective(phi);
                if v >= incumbent.1 {
                    incumbent = (phi, v);
                }
            }
        }
    }
    incumbent.0
}
