//! Radio environment maps and half-diagonal profiles.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelModel;
use crate::dataset::io::fmt_float;
use crate::error::{ensure, Result};
use crate::num::Real;
use crate::scene::{Point3, Scene};

use super::model::Predictor;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapSource {
    Simulated,
    Predicted { model: String },
}

/// RSS over a horizontal grid of cells covering the room footprint.
///
/// Cell `(i, j)` spans `[i·s, (i+1)·s] × [j·s, (j+1)·s]` (clipped to the
/// room) and is evaluated at its center. `values` is row-major with `j`
/// (the y index) as the row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct RadioMap<T: Real> {
    pub origin: (T, T),
    pub spacing: T,
    pub nx: usize,
    pub ny: usize,
    pub z_plane: T,
    pub extent: (T, T),
    pub values: Vec<T>,
    pub source: MapSource,
}

fn cells_along<T: Real>(length: T, spacing: T) -> usize {
    let n = (length / spacing - T::lit(1e-9)).ceil();
    n.to_usize().unwrap_or(1).max(1)
}

/// Grid layout for `scene` at `spacing`: `(nx, ny)` and the cell centers in
/// row-major order.
fn grid<T: Real>(scene: &Scene<T>, z: T, spacing: T) -> Result<(usize, usize, Vec<Point3<T>>)> {
    let room = &scene.room;
    ensure!(spacing > T::zero() && spacing.is_finite(), "spacing must be positive");
    ensure!(
        z >= T::zero() && z < room.lz,
        "map plane z = {z} must lie in [0, {})",
        room.lz
    );
    let (nx, ny) = (cells_along(room.lx, spacing), cells_along(room.ly, spacing));
    let center = |i: usize, len: T| {
        let lo = T::from_usize_lossy(i) * spacing;
        let hi = (lo + spacing).min(len);
        (lo + hi) * T::half()
    };
    let mut pts = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            pts.push(Point3::new(center(i, room.lx), center(j, room.ly), z));
        }
    }
    Ok((nx, ny, pts))
}

impl<T: Real> RadioMap<T> {
    pub fn value(&self, i: usize, j: usize) -> T {
        self.values[j * self.nx + i]
    }

    /// Closed bounds `(x0, x1, y0, y1)` of cell `(i, j)`.
    pub fn cell_bounds(&self, i: usize, j: usize) -> (T, T, T, T) {
        let s = self.spacing;
        let x0 = self.origin.0 + T::from_usize_lossy(i) * s;
        let y0 = self.origin.1 + T::from_usize_lossy(j) * s;
        (x0, (x0 + s).min(self.extent.0), y0, (y0 + s).min(self.extent.1))
    }

    pub fn cell_center(&self, i: usize, j: usize) -> (T, T) {
        let (x0, x1, y0, y1) = self.cell_bounds(i, j);
        ((x0 + x1) * T::half(), (y0 + y1) * T::half())
    }

    /// Whether the closed cell `(i, j)` contains `(x, y)`.
    pub fn cell_contains(&self, i: usize, j: usize, x: T, y: T) -> bool {
        let (x0, x1, y0, y1) = self.cell_bounds(i, j);
        x0 <= x && x <= x1 && y0 <= y && y <= y1
    }

    /// Cell index of the largest value (first in row-major order on ties).
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (k, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = k;
            }
        }
        (best % self.nx, best / self.nx)
    }

    pub fn min_max(&self) -> (T, T) {
        self.values.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), v| {
            (lo.min(*v), hi.max(*v))
        })
    }

    /// `x,y,z,rss_dbm` per cell, row-major.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,z,rss_dbm\n");
        let z = fmt_float(self.z_plane.as_f64());
        for j in 0..self.ny {
            for i in 0..self.nx {
                let (x, y) = self.cell_center(i, j);
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    fmt_float(x.as_f64()),
                    fmt_float(y.as_f64()),
                    z,
                    fmt_float(self.value(i, j).as_f64())
                );
            }
        }
        out
    }

    /// Plain (P2) grayscale image, min-max scaled to 0..=255, north (largest
    /// y) on the first row.
    pub fn to_pgm(&self) -> String {
        let (lo, hi) = self.min_max();
        let range = hi - lo;
        let mut out = format!("P2\n{} {}\n255\n", self.nx, self.ny);
        for j in (0..self.ny).rev() {
            let row: Vec<String> = (0..self.nx)
                .map(|i| {
                    let v = self.value(i, j);
                    let g = if range > T::zero() {
                        ((v - lo) / range * T::lit(255.0)).round()
                    } else {
                        T::zero()
                    };
                    g.to_u8().unwrap_or(0).to_string()
                })
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Simulated RSS at every cell center.
pub fn simulate_map<T: Real>(scene: &Scene<T>, z_plane: T, spacing: T, patch_edge: T) -> Result<RadioMap<T>> {
    let (nx, ny, pts) = grid(scene, z_plane, spacing)?;
    let model = ChannelModel::new(scene, patch_edge)?;
    let values = pts
        .par_iter()
        .map(|p| model.rss_dbm(*p))
        .collect::<Result<Vec<_>>>()?;
    Ok(RadioMap {
        origin: (T::zero(), T::zero()),
        spacing,
        nx,
        ny,
        z_plane,
        extent: (scene.room.lx, scene.room.ly),
        values,
        source: MapSource::Simulated,
    })
}

/// Feature rows for `pts` in `scene`: `x, y, z`, plus `lx, ly` for
/// five-input models.
fn features_for<T: Real>(scene: &Scene<T>, pts: &[Point3<T>], arity: usize) -> Result<Vec<T>> {
    ensure!(
        arity == 3 || arity == 5,
        "model takes {arity} features; maps need 3 (x, y, z) or 5 (x, y, z, lx, ly)"
    );
    let mut f = Vec::with_capacity(pts.len() * arity);
    for p in pts {
        f.extend([p.x, p.y, p.z]);
        if arity == 5 {
            f.extend([scene.room.lx, scene.room.ly]);
        }
    }
    Ok(f)
}

/// Model RSS at every cell center.
pub fn predict_map<T: Real>(
    model: &dyn Predictor<T>,
    scene: &Scene<T>,
    z_plane: T,
    spacing: T,
) -> Result<RadioMap<T>> {
    let (nx, ny, pts) = grid(scene, z_plane, spacing)?;
    let values = model.predict_rows(&features_for(scene, &pts, model.arity())?)?;
    Ok(RadioMap {
        origin: (T::zero(), T::zero()),
        spacing,
        nx,
        ny,
        z_plane,
        extent: (scene.room.lx, scene.room.ly),
        values,
        source: MapSource::Predicted { model: model.label() },
    })
}

/// `n_points` positions evenly spaced from the floor-plan center to the
/// corner at the origin, at height `z_plane`.
pub fn half_diagonal_points<T: Real>(scene: &Scene<T>, z_plane: T, n_points: usize) -> Result<Vec<Point3<T>>> {
    ensure!(n_points >= 2, "a profile needs at least 2 points");
    let (cx, cy) = (scene.room.lx * T::half(), scene.room.ly * T::half());
    let last = T::from_usize_lossy(n_points - 1);
    Ok((0..n_points)
        .map(|k| {
            let f = T::one() - T::from_usize_lossy(k) / last;
            Point3::new(cx * f, cy * f, z_plane)
        })
        .collect())
}

/// `(x, rss_dbm)` along the half-diagonal from the simulator.
pub fn simulated_profile<T: Real>(
    scene: &Scene<T>,
    z_plane: T,
    n_points: usize,
    patch_edge: T,
) -> Result<Vec<(T, T)>> {
    let model = ChannelModel::new(scene, patch_edge)?;
    half_diagonal_points(scene, z_plane, n_points)?
        .par_iter()
        .map(|p| Ok((p.x, model.rss_dbm(*p)?)))
        .collect()
}

/// `(x, rss_dbm)` along the half-diagonal from a model.
pub fn predicted_profile<T: Real>(
    model: &dyn Predictor<T>,
    scene: &Scene<T>,
    z_plane: T,
    n_points: usize,
) -> Result<Vec<(T, T)>> {
    let pts = half_diagonal_points(scene, z_plane, n_points)?;
    let values = model.predict_rows(&features_for(scene, &pts, model.arity())?)?;
    Ok(pts.iter().map(|p| p.x).zip(values).collect())
}
