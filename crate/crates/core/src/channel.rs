//! DC channel gains and received optical power.
//!
//! The direct path uses the generalized Lambertian link gain. The reflected
//! path is a single bounce off the four walls, integrated numerically over
//! rectangular wall patches. Ceiling and floor do not reflect.
//!
//! Wall quadrature is a midpoint rule on the patch tiling, refined locally:
//! a patch whose edge exceeds [`REFINE_RATIO`] times its distance to the
//! receiver is split 2×2, recursively, down to [`MAX_REFINE_DEPTH`]. Far
//! patches are evaluated exactly as the plain midpoint rule would.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::num::Real;
use crate::scene::{Point3, Receiver, Room, Scene, Transmitter};

/// Default wall patch edge in meters.
pub const DEFAULT_PATCH_EDGE: f64 = 0.2;

/// A wall cell is subdivided while `edge > REFINE_RATIO * distance(rx, cell)`.
pub const REFINE_RATIO: f64 = 0.15;

/// Deepest subdivision level below a base patch.
pub const MAX_REFINE_DEPTH: u32 = 12;

/// Lambertian emission order from the LED half-power semi-angle.
pub fn lambertian_order<T: Real>(hpa_deg: T) -> Result<T> {
    ensure!(
        hpa_deg > T::zero() && hpa_deg < T::lit(90.0),
        "half-power angle must lie in (0, 90) degrees, got {hpa_deg}"
    );
    let ln2 = T::LN_2();
    Ok(-ln2 / hpa_deg.to_radians().cos().ln())
}

/// Gain of an ideal non-imaging concentrator: `n² / sin²(fov)` inside the
/// field of view, zero outside.
pub fn concentrator_gain<T: Real>(cos_psi: T, fov_deg: T, n: T) -> Result<T> {
    ensure!(n >= T::one(), "refractive index must be at least 1, got {n}");
    ensure!(
        fov_deg > T::zero() && fov_deg <= T::lit(90.0),
        "field of view must lie in (0, 90] degrees, got {fov_deg}"
    );
    let fov = fov_deg.to_radians();
    if cos_psi >= fov.cos() {
        let s = fov.sin();
        Ok(n * n / (s * s))
    } else {
        Ok(T::zero())
    }
}

/// Distance and angle cosines of a direct LED → detector link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry<T: Real> {
    pub d: T,
    pub cos_phi: T,
    pub cos_psi: T,
}

impl<T: Real> LinkGeometry<T> {
    /// Geometry between a down-facing emitter at `tx` and an up-facing
    /// detector at `rx`.
    pub fn between(tx: Point3<T>, rx: Point3<T>) -> Result<Self> {
        let v = rx - tx;
        let d = v.norm();
        ensure!(d > T::zero(), "receiver coincides with transmitter");
        // Both normals are vertical, so both cosines reduce to Δz / d.
        let cos = (tx.z - rx.z) / d;
        Ok(LinkGeometry {
            d,
            cos_phi: cos,
            cos_psi: cos,
        })
    }
}

/// Receiver constants folded once per scene.
#[derive(Debug, Clone, Copy)]
struct Optics<T: Real> {
    area: T,
    filter: T,
    cos_fov: T,
    gain: T,
}

impl<T: Real> Optics<T> {
    fn new(rx: &Receiver<T>) -> Result<Self> {
        rx.validate()?;
        Ok(Optics {
            area: rx.area_m2,
            filter: rx.filter_gain,
            cos_fov: rx.fov_deg.to_radians().cos(),
            gain: concentrator_gain(T::one(), rx.fov_deg, rx.refractive_index)?,
        })
    }

    /// `A · Ts · g(ψ) · cos ψ` for a ray arriving with the given incidence
    /// cosine; zero outside the field of view.
    #[inline]
    fn collect(&self, cos_psi: T) -> T {
        if cos_psi >= self.cos_fov && cos_psi >= T::zero() {
            self.area * self.filter * self.gain * cos_psi
        } else {
            T::zero()
        }
    }
}

/// Direct-path DC gain from `tx` to a detector at `rx_pos`.
pub fn los_gain<T: Real>(tx: &Transmitter<T>, rx: &Receiver<T>, rx_pos: Point3<T>) -> Result<T> {
    let m = lambertian_order(tx.hpa_deg)?;
    let optics = Optics::new(rx)?;
    los_gain_inner(tx.position, m, &optics, rx_pos)
}

fn los_gain_inner<T: Real>(tx: Point3<T>, m: T, optics: &Optics<T>, rx: Point3<T>) -> Result<T> {
    let link = LinkGeometry::between(tx, rx)?;
    if link.cos_phi <= T::zero() {
        return Ok(T::zero());
    }
    let lobe = (m + T::one()) / (T::two() * T::PI() * link.d * link.d);
    Ok(lobe * link.cos_phi.powf(m) * optics.collect(link.cos_psi))
}

/// Which of the four walls a patch lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Wall {
    /// y = 0
    South,
    /// y = ly
    North,
    /// x = 0
    West,
    /// x = lx
    East,
}

/// A rectangular wall element. `u` runs horizontally along the wall and `v`
/// is vertical.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallPatch<T: Real> {
    pub wall: Wall,
    pub center: Point3<T>,
    /// Inward unit normal.
    pub normal: Point3<T>,
    pub u_axis: Point3<T>,
    pub edge_u: T,
    pub edge_v: T,
    pub area_m2: T,
}

impl<T: Real> WallPatch<T> {
    fn split(&self) -> [WallPatch<T>; 4] {
        let q = T::lit(0.25);
        let (hu, hv) = (self.edge_u * T::half(), self.edge_v * T::half());
        let up = Point3::new(T::zero(), T::zero(), T::one());
        let child = |su: T, sv: T| WallPatch {
            center: self.center + self.u_axis * (su * self.edge_u * q) + up * (sv * self.edge_v * q),
            edge_u: hu,
            edge_v: hv,
            area_m2: hu * hv,
            ..*self
        };
        let one = T::one();
        [
            child(-one, -one),
            child(one, -one),
            child(-one, one),
            child(one, one),
        ]
    }

    fn top(&self) -> T {
        self.center.z + self.edge_v * T::half()
    }
}

/// Tiles the four walls with near-square patches of edge at most
/// `patch_edge_m`. Each wall direction gets `ceil(extent / edge)` equal
/// cells, so the tiling is exact and mirror symmetric.
pub fn discretize_walls<T: Real>(room: &Room<T>, patch_edge_m: T) -> Result<Vec<WallPatch<T>>> {
    room.validate()?;
    ensure!(
        patch_edge_m > T::zero(),
        "patch edge must be positive, got {patch_edge_m}"
    );
    ensure!(
        patch_edge_m <= room.lx.min(room.ly).min(room.lz),
        "patch edge {patch_edge_m} exceeds the smallest room dimension"
    );
    let count = |extent: T| -> usize {
        let c = (extent / patch_edge_m - T::lit(1e-9)).ceil();
        c.to_usize().unwrap_or(1).max(1)
    };
    let (o, l) = (T::zero(), T::one());
    let walls = [
        (Wall::South, room.lx, Point3::new(o, o, o), Point3::new(o, l, o), Point3::new(l, o, o)),
        (Wall::North, room.lx, Point3::new(o, room.ly, o), Point3::new(o, -l, o), Point3::new(l, o, o)),
        (Wall::West, room.ly, Point3::new(o, o, o), Point3::new(l, o, o), Point3::new(o, l, o)),
        (Wall::East, room.ly, Point3::new(room.lx, o, o), Point3::new(-l, o, o), Point3::new(o, l, o)),
    ];
    let nv = count(room.lz);
    let edge_v = room.lz / T::from_usize_lossy(nv);
    let mut patches = Vec::new();
    for (wall, extent, origin, normal, u_axis) in walls {
        let nu = count(extent);
        let edge_u = extent / T::from_usize_lossy(nu);
        for i in 0..nu {
            let u = (T::from_usize_lossy(i) + T::half()) * edge_u;
            for j in 0..nv {
                let z = (T::from_usize_lossy(j) + T::half()) * edge_v;
                let center = origin + u_axis * u + Point3::new(o, o, z);
                patches.push(WallPatch {
                    wall,
                    center,
                    normal,
                    u_axis,
                    edge_u,
                    edge_v,
                    area_m2: edge_u * edge_v,
                });
            }
        }
    }
    Ok(patches)
}

/// Irradiance-side factor `(m+1)/(2π d₁²) · cosᵐφ · cos α · dA` of an LED on
/// a wall cell.
#[inline]
fn emitter_term<T: Real>(tx: Point3<T>, m: T, cell: &WallPatch<T>) -> T {
    let v = cell.center - tx;
    let d1_sq = v.dot(v);
    let d1 = d1_sq.sqrt();
    let cos_phi = (tx.z - cell.center.z) / d1;
    let cos_alpha = -v.dot(cell.normal) / d1;
    if cos_phi < T::zero() || cos_alpha < T::zero() {
        return T::zero();
    }
    (m + T::one()) / (T::two() * T::PI() * d1_sq) * cos_phi.powf(m) * cos_alpha * cell.area_m2
}

/// Detector-side factor `cos β / d₂² · A · Ts · g(ψ) · cos ψ`.
#[inline]
fn detector_term<T: Real>(optics: &Optics<T>, rx: Point3<T>, cell: &WallPatch<T>, d2_sq: T) -> T {
    let w = rx - cell.center;
    let d2 = d2_sq.sqrt();
    let cos_beta = w.dot(cell.normal) / d2;
    let cos_psi = (cell.center.z - rx.z) / d2;
    if cos_beta < T::zero() {
        return T::zero();
    }
    cos_beta / d2_sq * optics.collect(cos_psi)
}

#[inline]
fn needs_refinement<T: Real>(cell: &WallPatch<T>, d2_sq: T, depth: u32) -> bool {
    if depth >= MAX_REFINE_DEPTH {
        return false;
    }
    let edge = cell.edge_u.max(cell.edge_v);
    let r = T::lit(REFINE_RATIO);
    edge * edge > r * r * d2_sq
}

/// Reflected gain through one cell, refined as needed. `base` carries the
/// precomputed emitter term for an unrefined depth-0 cell.
fn cell_gain<T: Real>(
    tx: Point3<T>,
    m: T,
    optics: &Optics<T>,
    rx: Point3<T>,
    cell: &WallPatch<T>,
    depth: u32,
    base: Option<T>,
) -> T {
    // Cells entirely below the detector lie outside its upward hemisphere.
    if cell.top() <= rx.z {
        return T::zero();
    }
    let w = rx - cell.center;
    let d2_sq = w.dot(w);
    if needs_refinement(cell, d2_sq, depth) {
        return cell
            .split()
            .iter()
            .map(|c| cell_gain(tx, m, optics, rx, c, depth + 1, None))
            .sum();
    }
    let e = match base {
        Some(e) => e,
        None => emitter_term(tx, m, cell),
    };
    if e == T::zero() {
        return T::zero();
    }
    e * detector_term(optics, rx, cell, d2_sq)
}

fn check_patch_distances<T: Real>(rx: Point3<T>, patches: &[WallPatch<T>]) -> Result<()> {
    if patches.iter().any(|p| (rx - p.center).dot(rx - p.center) == T::zero()) {
        return Err(Error::invalid("receiver coincides with a wall patch center"));
    }
    Ok(())
}

/// Whether the detector lies strictly in front of the wall carrying `cell`.
#[inline]
fn faces_wall<T: Real>(rx: Point3<T>, cell: &WallPatch<T>) -> bool {
    (rx - cell.center).dot(cell.normal) > T::zero()
}

/// Single-bounce wall-reflection DC gain from `tx` to a detector at `rx_pos`.
pub fn nlos_gain<T: Real>(
    tx: &Transmitter<T>,
    rx: &Receiver<T>,
    rx_pos: Point3<T>,
    patches: &[WallPatch<T>],
    rho: T,
) -> Result<T> {
    ensure!(
        rho >= T::zero() && rho <= T::one(),
        "reflectance must lie in [0, 1], got {rho}"
    );
    ensure!(rx_pos != tx.position, "receiver coincides with transmitter");
    check_patch_distances(rx_pos, patches)?;
    let m = lambertian_order(tx.hpa_deg)?;
    let optics = Optics::new(rx)?;
    let sum: T = patches
        .iter()
        .filter(|p| faces_wall(rx_pos, p))
        .map(|p| cell_gain(tx.position, m, &optics, rx_pos, p, 0, None))
        .sum();
    Ok(rho * sum)
}

/// Per-transmitter and total received optical power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PowerBreakdown<T: Real> {
    pub p_los_mw: T,
    pub p_nlos_mw: T,
    /// `(LOS, NLOS)` in mW for each transmitter, in scene order.
    pub per_tx: Vec<(T, T)>,
}

impl<T: Real> PowerBreakdown<T> {
    pub fn total_mw(&self) -> T {
        self.p_los_mw + self.p_nlos_mw
    }
}

/// Received power in dBm for a power in mW.
pub fn rss_dbm<T: Real>(p_mw: T) -> Result<T> {
    ensure!(
        p_mw > T::zero(),
        "received power must be positive to express in dBm, got {p_mw}"
    );
    Ok(T::lit(10.0) * p_mw.log10())
}

/// Path loss in dB of a total DC gain.
pub fn path_loss_db<T: Real>(h0: T) -> Result<T> {
    ensure!(h0 > T::zero(), "channel gain must be positive, got {h0}");
    Ok(-T::lit(10.0) * h0.log10())
}

/// A scene with its wall tiling and emitter-side patch terms precomputed.
///
/// Evaluating a receiver position costs one pass over the patches per LED,
/// plus refinement of the few patches close to the receiver.
#[derive(Debug, Clone)]
pub struct ChannelModel<T: Real> {
    scene: Scene<T>,
    patch_edge: T,
    patches: Vec<WallPatch<T>>,
    orders: Vec<T>,
    optics: Optics<T>,
    /// `emitter[i][k]`: emitter term of LED `i` on patch `k`.
    emitter: Vec<Vec<T>>,
}

impl<T: Real> ChannelModel<T> {
    pub fn new(scene: &Scene<T>, patch_edge_m: T) -> Result<Self> {
        scene.validate()?;
        let patches = discretize_walls(&scene.room, patch_edge_m)?;
        let orders = scene
            .transmitters
            .iter()
            .map(|t| lambertian_order(t.hpa_deg))
            .collect::<Result<Vec<_>>>()?;
        let emitter = scene
            .transmitters
            .iter()
            .zip(&orders)
            .map(|(t, &m)| patches.iter().map(|p| emitter_term(t.position, m, p)).collect())
            .collect();
        Ok(ChannelModel {
            optics: Optics::new(&scene.receiver)?,
            scene: scene.clone(),
            patch_edge: patch_edge_m,
            patches,
            orders,
            emitter,
        })
    }

    pub fn scene(&self) -> &Scene<T> {
        &self.scene
    }

    pub fn patch_edge(&self) -> T {
        self.patch_edge
    }

    pub fn patches(&self) -> &[WallPatch<T>] {
        &self.patches
    }

    /// Reflected gain of LED `tx_index` at `rx`, reflectance not applied.
    fn wall_sum(&self, tx_index: usize, rx: Point3<T>) -> T {
        let tx = self.scene.transmitters[tx_index].position;
        let m = self.orders[tx_index];
        let pre = &self.emitter[tx_index];
        self.patches
            .iter()
            .zip(pre)
            .filter(|(p, _)| faces_wall(rx, p))
            .map(|(p, &e)| cell_gain(tx, m, &self.optics, rx, p, 0, Some(e)))
            .sum()
    }

    /// Reflected DC gain of one LED at `rx`.
    pub fn nlos_gain(&self, tx_index: usize, rx: Point3<T>) -> Result<T> {
        ensure!(
            tx_index < self.scene.transmitters.len(),
            "transmitter index {tx_index} out of range"
        );
        ensure!(
            rx != self.scene.transmitters[tx_index].position,
            "receiver coincides with transmitter"
        );
        check_patch_distances(rx, &self.patches)?;
        Ok(self.scene.wall_reflectance * self.wall_sum(tx_index, rx))
    }

    pub fn received_power(&self, rx: Point3<T>) -> Result<PowerBreakdown<T>> {
        let room = &self.scene.room;
        ensure!(
            room.contains(rx) && rx.z < room.lz,
            "receiver ({}, {}, {}) must lie inside the room and below the ceiling",
            rx.x,
            rx.y,
            rx.z
        );
        check_patch_distances(rx, &self.patches)?;
        let rho = self.scene.wall_reflectance;
        let mut per_tx = Vec::with_capacity(self.scene.transmitters.len());
        for (i, tx) in self.scene.transmitters.iter().enumerate() {
            let h_los = los_gain_inner(tx.position, self.orders[i], &self.optics, rx)?;
            let h_ref = if rho == T::zero() {
                T::zero()
            } else {
                rho * self.wall_sum(i, rx)
            };
            per_tx.push((tx.power_mw * h_los, tx.power_mw * h_ref));
        }
        Ok(PowerBreakdown {
            p_los_mw: per_tx.iter().map(|p| p.0).sum(),
            p_nlos_mw: per_tx.iter().map(|p| p.1).sum(),
            per_tx,
        })
    }

    /// Total received power in dBm.
    pub fn rss_dbm(&self, rx: Point3<T>) -> Result<T> {
        rss_dbm(self.received_power(rx)?.total_mw())
    }
}

/// One-shot received power; builds the wall tiling on every call.
pub fn received_power<T: Real>(
    scene: &Scene<T>,
    rx_pos: Point3<T>,
    patch_edge_m: T,
) -> Result<PowerBreakdown<T>> {
    ChannelModel::new(scene, patch_edge_m)?.received_power(rx_pos)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{preset_scene, Preset};

    fn p(x: f64, y: f64, z: f64) -> Point3<f64> {
        Point3::new(x, y, z)
    }

    #[test]
    fn lambertian_orders() {
        assert!((lambertian_order(60.0f64).unwrap() - 1.0).abs() < 1e-12);
        assert!((lambertian_order(45.0f64).unwrap() - 2.0).abs() < 1e-12);
        // -ln 2 / ln(cos 30°) = ln 2 / ln(2/√3)
        let expected = 2f64.ln() / (2.0 / 3f64.sqrt()).ln();
        assert!((lambertian_order(30.0f64).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 4.8188).abs() < 1e-4);
        assert!(lambertian_order(0.0f64).is_err());
        assert!(lambertian_order(90.0f64).is_err());
        assert!(lambertian_order(120.0f64).is_err());
    }

    #[test]
    fn lambertian_order_decreases_with_angle() {
        let mut prev = f64::INFINITY;
        for deg in 1..90 {
            let m = lambertian_order(deg as f64).unwrap();
            assert!(m > 0.0 && m < prev);
            prev = m;
        }
    }

    #[test]
    fn concentrator() {
        let g = concentrator_gain(1.0f64, 85.0, 1.5).unwrap();
        let s = 85f64.to_radians().sin();
        assert!((g - 2.25 / (s * s)).abs() < 1e-12);
        assert!((g - 2.26722).abs() < 1e-5);
        assert_eq!(
            concentrator_gain(89f64.to_radians().cos(), 85.0, 1.5).unwrap(),
            0.0
        );
        assert!((concentrator_gain(1.0f64, 90.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(concentrator_gain(1.0f64, 85.0, 0.9).is_err());
        assert!(concentrator_gain(1.0f64, 0.0, 1.5).is_err());
    }

    #[test]
    fn los_directly_below_led() {
        let s = preset_scene::<f64>(Preset::Mid, 1).unwrap();
        let h = los_gain(&s.transmitters[0], &s.receiver, p(2.5, 2.5, 1.0)).unwrap();
        let g = 2.25 / 85f64.to_radians().sin().powi(2);
        let expected = 2.0 * 1e-4 / (2.0 * std::f64::consts::PI * 4.0) * g;
        assert!((h - expected).abs() / expected < 1e-12);
        assert!((h - 1.8043e-5).abs() < 1e-8);
    }

    #[test]
    fn los_fov_cutoff_and_coincidence() {
        let s = preset_scene::<f64>(Preset::Mid, 1).unwrap();
        // ψ ≈ 87.7°: outside the 85° field of view.
        let h = los_gain(&s.transmitters[0], &s.receiver, p(5.0, 0.0, 2.9)).unwrap();
        assert_eq!(h, 0.0);
        assert!(los_gain(&s.transmitters[0], &s.receiver, p(2.5, 2.5, 3.0)).is_err());
    }

    #[test]
    fn los_mirror_symmetry() {
        let s = preset_scene::<f64>(Preset::Mid, 1).unwrap();
        let a = los_gain(&s.transmitters[0], &s.receiver, p(2.0, 2.5, 1.0)).unwrap();
        let b = los_gain(&s.transmitters[0], &s.receiver, p(3.0, 2.5, 1.0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn wall_tiling_counts_and_area() {
        let room = Room::new(3.0f64, 3.0, 2.8).unwrap();
        let patches = discretize_walls(&room, 1.5).unwrap();
        assert_eq!(patches.len(), 16);
        let area: f64 = patches.iter().map(|p| p.area_m2).sum();
        assert!((area - 33.6).abs() < 1e-9);

        let room = Room::new(5.0f64, 5.0, 3.0).unwrap();
        assert_eq!(discretize_walls(&room, 0.2).unwrap().len(), 1500);

        assert!(discretize_walls(&room, 0.0).is_err());
        assert!(discretize_walls(&room, -1.0).is_err());
        assert!(discretize_walls(&room, 3.5).is_err());
    }

    #[test]
    fn wall_normals_point_inward() {
        let room = Room::new(4.0f64, 6.0, 3.0).unwrap();
        let mid = p(2.0, 3.0, 1.5);
        for patch in discretize_walls(&room, 0.5).unwrap() {
            assert!((patch.normal.norm() - 1.0).abs() < 1e-15);
            assert!((mid - patch.center).dot(patch.normal) > 0.0);
        }
    }

    #[test]
    fn refinement_conserves_area() {
        let room = Room::new(5.0f64, 5.0, 3.0).unwrap();
        let patch = discretize_walls(&room, 0.2).unwrap()[7];
        let kids = patch.split();
        let area: f64 = kids.iter().map(|k| k.area_m2).sum();
        assert!((area - patch.area_m2).abs() < 1e-15);
        let cx: f64 = kids.iter().map(|k| k.center.x).sum::<f64>() / 4.0;
        let cz: f64 = kids.iter().map(|k| k.center.z).sum::<f64>() / 4.0;
        assert!((cx - patch.center.x).abs() < 1e-15);
        assert!((cz - patch.center.z).abs() < 1e-15);
    }

    #[test]
    fn zero_reflectance_kills_nlos() {
        let s = preset_scene::<f64>(Preset::Mid, 1).unwrap();
        let patches = discretize_walls(&s.room, 0.2).unwrap();
        let h = nlos_gain(&s.transmitters[0], &s.receiver, p(1.0, 2.0, 0.5), &patches, 0.0).unwrap();
        assert_eq!(h, 0.0);
    }

    #[test]
    fn nlos_mirror_symmetry() {
        let s = preset_scene::<f64>(Preset::Mid, 1).unwrap();
        let patches = discretize_walls(&s.room, 0.2).unwrap();
        let a = nlos_gain(&s.transmitters[0], &s.receiver, p(1.0, 2.5, 1.0), &patches, 0.8).unwrap();
        let b = nlos_gain(&s.transmitters[0], &s.receiver, p(4.0, 2.5, 1.0), &patches, 0.8).unwrap();
        assert!(a > 0.0);
        assert!((a - b).abs() / a < 1e-9);
    }

    #[test]
    fn nlos_rejects_patch_center() {
        let s = preset_scene::<f64>(Preset::Mid, 1).unwrap();
        let patches = discretize_walls(&s.room, 0.2).unwrap();
        let c = patches[3].center;
        assert!(nlos_gain(&s.transmitters[0], &s.receiver, c, &patches, 0.8).is_err());
    }

    #[test]
    fn model_matches_free_functions() {
        let s = preset_scene::<f64>(Preset::Small, 4).unwrap();
        let model = ChannelModel::new(&s, 0.2).unwrap();
        let rx = p(0.4, 2.1, 1.3);
        for (i, tx) in s.transmitters.iter().enumerate() {
            let free = nlos_gain(tx, &s.receiver, rx, model.patches(), s.wall_reflectance).unwrap();
            let fast = model.nlos_gain(i, rx).unwrap();
            assert!((free - fast).abs() <= 1e-13 * free);
        }
    }

    #[test]
    fn breakdown_bookkeeping() {
        let s = preset_scene::<f64>(Preset::Mid, 4).unwrap();
        let b = received_power(&s, p(1.2, 3.3, 0.7), 0.25).unwrap();
        let los: f64 = b.per_tx.iter().map(|t| t.0).sum();
        let nlos: f64 = b.per_tx.iter().map(|t| t.1).sum();
        assert!((b.p_los_mw - los).abs() <= 1e-12 * los);
        assert!((b.p_nlos_mw - nlos).abs() <= 1e-12 * nlos);
        assert!(b.per_tx.iter().all(|t| t.0 >= 0.0 && t.1 >= 0.0));
    }

    #[test]
    fn los_only_mid_center() {
        let s = preset_scene::<f64>(Preset::Mid, 1).unwrap().with_reflectance(0.0);
        let b = received_power(&s, p(2.5, 2.5, 1.0), 0.2).unwrap();
        assert!((b.p_los_mw - 1.8043e-2).abs() < 1e-5);
        assert_eq!(b.p_nlos_mw, 0.0);
        let dbm = rss_dbm(b.total_mw()).unwrap();
        assert!((dbm - (-17.44)).abs() < 5e-3);
    }

    #[test]
    fn receiver_outside_room_rejected() {
        let s = preset_scene::<f64>(Preset::Mid, 1).unwrap();
        assert!(received_power(&s, p(6.0, 2.0, 1.0), 0.2).is_err());
        assert!(received_power(&s, p(2.0, 2.0, 3.0), 0.2).is_err());
        assert!(received_power(&s, p(2.0, 2.0, -0.1), 0.2).is_err());
    }

    #[test]
    fn dbm_and_path_loss() {
        assert_eq!(rss_dbm(1.0f64).unwrap(), 0.0);
        assert!((rss_dbm(1000.0f64).unwrap() - 30.0).abs() < 1e-12);
        assert!(rss_dbm(0.0f64).is_err());
        assert!(rss_dbm(-1.0f64).is_err());
        assert_eq!(path_loss_db(1.0f64).unwrap(), 0.0);
        assert!((path_loss_db(1.8043e-5f64).unwrap() - 47.437).abs() < 1e-3);
        assert!(path_loss_db(0.0f64).is_err());
    }

    #[test]
    fn single_precision_tracks_double() {
        let s64 = preset_scene::<f64>(Preset::Mid, 1).unwrap();
        let s32: Scene<f32> = s64.cast();
        let m64 = ChannelModel::new(&s64, 0.25).unwrap();
        let m32 = ChannelModel::new(&s32, 0.25f32).unwrap();
        let a = m64.rss_dbm(p(1.3, 0.7, 0.9)).unwrap();
        let b = m32.rss_dbm(Point3::new(1.3f32, 0.7, 0.9)).unwrap();
        assert!((a - b as f64).abs() < 1e-3);
    }
}
