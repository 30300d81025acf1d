//! Physical description of an indoor VLC system: room, ceiling LEDs, and the
//! photodetector, plus the standard preset configurations.
//!
//! Coordinates are corner-origin: `(0, 0, 0)` is a floor corner and the room
//! spans `[0, lx] × [0, ly] × [0, lz]`. LEDs face straight down and the
//! photodetector faces straight up; neither orientation is configurable.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::num::Real;

/// Smallest and largest side length of a variable-size room, in meters.
pub const VARIABLE_ROOM_MIN: f64 = 3.0;
pub const VARIABLE_ROOM_MAX: f64 = 7.0;
/// Ceiling height of every variable-size room, in meters.
pub const VARIABLE_ROOM_HEIGHT: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Point3<T: Real> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Point3<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Point3 { x, y, z }
    }

    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(self) -> T {
        self.dot(self).sqrt()
    }

    pub fn cast<U: Real>(self) -> Point3<U> {
        Point3::new(
            U::lit(self.x.as_f64()),
            U::lit(self.y.as_f64()),
            U::lit(self.z.as_f64()),
        )
    }
}

impl<T: Real> Add for Point3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> Sub for Point3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Mul<T> for Point3<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Room<T: Real> {
    pub lx: T,
    pub ly: T,
    pub lz: T,
}

impl<T: Real> Room<T> {
    pub fn new(lx: T, ly: T, lz: T) -> Result<Self> {
        let room = Room { lx, ly, lz };
        room.validate()?;
        Ok(room)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.lx > T::zero() && self.ly > T::zero() && self.lz > T::zero(),
            "room dimensions must be positive, got {} x {} x {}",
            self.lx,
            self.ly,
            self.lz
        );
        Ok(())
    }

    /// Closed-box containment test.
    pub fn contains(&self, p: Point3<T>) -> bool {
        let z = T::zero();
        p.x >= z && p.x <= self.lx && p.y >= z && p.y <= self.ly && p.z >= z && p.z <= self.lz
    }

    pub fn wall_area(&self) -> T {
        T::two() * (self.lx + self.ly) * self.lz
    }
}

/// A ceiling-mounted, downward-facing LED.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Transmitter<T: Real> {
    pub position: Point3<T>,
    pub power_mw: T,
    pub hpa_deg: T,
}

impl<T: Real> Transmitter<T> {
    /// Unit normal of the emitter, always straight down.
    pub fn normal(&self) -> Point3<T> {
        Point3::new(T::zero(), T::zero(), -T::one())
    }

    pub fn validate(&self, room: &Room<T>) -> Result<()> {
        ensure!(self.power_mw > T::zero(), "transmit power must be positive");
        ensure!(
            self.hpa_deg > T::zero() && self.hpa_deg < T::lit(90.0),
            "half-power angle must lie in (0, 90) degrees, got {}",
            self.hpa_deg
        );
        let tol = T::lit(1e-9) * room.lz.max(T::one());
        ensure!(
            (self.position.z - room.lz).abs() <= tol,
            "transmitter must sit on the ceiling (z = {}), got z = {}",
            room.lz,
            self.position.z
        );
        ensure!(
            self.position.x >= T::zero()
                && self.position.x <= room.lx
                && self.position.y >= T::zero()
                && self.position.y <= room.ly,
            "transmitter at ({}, {}) lies outside the ceiling",
            self.position.x,
            self.position.y
        );
        Ok(())
    }
}

/// Upward-facing photodetector with an optical filter and concentrator lens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Receiver<T: Real> {
    pub area_m2: T,
    pub fov_deg: T,
    pub filter_gain: T,
    pub refractive_index: T,
    /// Carried for completeness; RSS is reported in the optical domain.
    pub responsivity: T,
}

impl<T: Real> Receiver<T> {
    pub fn normal(&self) -> Point3<T> {
        Point3::new(T::zero(), T::zero(), T::one())
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.area_m2 > T::zero(), "detector area must be positive");
        ensure!(
            self.fov_deg > T::zero() && self.fov_deg <= T::lit(90.0),
            "field of view must lie in (0, 90] degrees, got {}",
            self.fov_deg
        );
        ensure!(self.filter_gain > T::zero(), "filter gain must be positive");
        ensure!(
            self.refractive_index >= T::one(),
            "refractive index must be at least 1"
        );
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Scene<T: Real> {
    pub room: Room<T>,
    pub transmitters: Vec<Transmitter<T>>,
    pub receiver: Receiver<T>,
    pub wall_reflectance: T,
}

impl<T: Real> Scene<T> {
    pub fn validate(&self) -> Result<()> {
        self.room.validate()?;
        ensure!(
            !self.transmitters.is_empty(),
            "scene needs at least one transmitter"
        );
        for tx in &self.transmitters {
            tx.validate(&self.room)?;
        }
        self.receiver.validate()?;
        ensure!(
            self.wall_reflectance >= T::zero() && self.wall_reflectance <= T::one(),
            "wall reflectance must lie in [0, 1], got {}",
            self.wall_reflectance
        );
        Ok(())
    }

    /// Same scene with a different wall reflectance.
    pub fn with_reflectance(&self, rho: T) -> Self {
        Scene {
            wall_reflectance: rho,
            ..self.clone()
        }
    }

    pub fn cast<U: Real>(&self) -> Scene<U> {
        let c = |v: T| U::lit(v.as_f64());
        Scene {
            room: Room {
                lx: c(self.room.lx),
                ly: c(self.room.ly),
                lz: c(self.room.lz),
            },
            transmitters: self
                .transmitters
                .iter()
                .map(|t| Transmitter {
                    position: t.position.cast(),
                    power_mw: c(t.power_mw),
                    hpa_deg: c(t.hpa_deg),
                })
                .collect(),
            receiver: Receiver {
                area_m2: c(self.receiver.area_m2),
                fov_deg: c(self.receiver.fov_deg),
                filter_gain: c(self.receiver.filter_gain),
                refractive_index: c(self.receiver.refractive_index),
                responsivity: c(self.receiver.responsivity),
            },
            wall_reflectance: c(self.wall_reflectance),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let scene: Scene<T> =
            serde_json::from_str(text).map_err(|e| Error::MalformedFile(e.to_string()))?;
        scene.validate()?;
        Ok(scene)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Small,
    Mid,
    Big,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Small, Preset::Mid, Preset::Big];

    pub fn dimensions(self) -> (f64, f64, f64) {
        match self {
            Preset::Small => (3.0, 3.0, 2.8),
            Preset::Mid => (5.0, 5.0, 3.0),
            Preset::Big => (6.5, 6.5, 3.5),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Small => "small",
            Preset::Mid => "mid",
            Preset::Big => "big",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "small" => Ok(Preset::Small),
            "mid" => Ok(Preset::Mid),
            "big" => Ok(Preset::Big),
            other => Err(Error::invalid(format!(
                "unknown preset '{other}' (expected small, mid or big)"
            ))),
        }
    }
}

/// The standard receiver: 1 cm² detector, 85° FOV, unit filter gain, n = 1.5.
pub fn standard_receiver<T: Real>() -> Receiver<T> {
    Receiver {
        area_m2: T::lit(1e-4),
        fov_deg: T::lit(85.0),
        filter_gain: T::one(),
        refractive_index: T::lit(1.5),
        responsivity: T::one(),
    }
}

pub const STANDARD_REFLECTANCE: f64 = 0.8;
pub const STANDARD_POWER_MW: f64 = 1000.0;
pub const STANDARD_HPA_DEG: f64 = 60.0;

/// LED positions for one LED at the ceiling center, or four at the centers
/// of the ceiling quadrants.
pub fn led_layout<T: Real>(room: &Room<T>, led_count: usize) -> Result<Vec<Point3<T>>> {
    let q = T::lit(0.25);
    let tq = T::lit(0.75);
    let xy: Vec<(T, T)> = match led_count {
        1 => vec![(room.lx * T::half(), room.ly * T::half())],
        4 => vec![
            (room.lx * q, room.ly * q),
            (room.lx * tq, room.ly * q),
            (room.lx * q, room.ly * tq),
            (room.lx * tq, room.ly * tq),
        ],
        n => return Err(Error::invalid(format!("led count must be 1 or 4, got {n}"))),
    };
    Ok(xy
        .into_iter()
        .map(|(x, y)| Point3::new(x, y, room.lz))
        .collect())
}

fn standard_scene<T: Real>(room: Room<T>, led_count: usize) -> Result<Scene<T>> {
    let transmitters = led_layout(&room, led_count)?
        .into_iter()
        .map(|position| Transmitter {
            position,
            power_mw: T::lit(STANDARD_POWER_MW),
            hpa_deg: T::lit(STANDARD_HPA_DEG),
        })
        .collect();
    let scene = Scene {
        room,
        transmitters,
        receiver: standard_receiver(),
        wall_reflectance: T::lit(STANDARD_REFLECTANCE),
    };
    scene.validate()?;
    Ok(scene)
}

/// One of the three fixed-size rooms with the standard optics.
pub fn preset_scene<T: Real>(preset: Preset, led_count: usize) -> Result<Scene<T>> {
    let (lx, ly, lz) = preset.dimensions();
    standard_scene(Room::new(T::lit(lx), T::lit(ly), T::lit(lz))?, led_count)
}

/// Preset lookup by name (`small`, `mid`, `big`).
pub fn preset_scene_named<T: Real>(name: &str, led_count: usize) -> Result<Scene<T>> {
    preset_scene(name.parse()?, led_count)
}

/// A 3 m high room of arbitrary footprint in `[3, 7] × [3, 7]` meters.
pub fn variable_scene<T: Real>(lx: T, ly: T, led_count: usize) -> Result<Scene<T>> {
    let lo = T::lit(VARIABLE_ROOM_MIN);
    let hi = T::lit(VARIABLE_ROOM_MAX);
    ensure!(
        lx >= lo && lx <= hi && ly >= lo && ly <= hi,
        "variable room footprint must lie in [3, 7] m, got {lx} x {ly}"
    );
    standard_scene(Room::new(lx, ly, T::lit(VARIABLE_ROOM_HEIGHT))?, led_count)
}
