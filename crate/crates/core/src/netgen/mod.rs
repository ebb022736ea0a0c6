//! Multi-cell network generation: hexagonal layout, user drops, large-scale
//! fading and per-link channel autocorrelation.

mod bessel;
pub mod io;

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bessel::bessel_j0;

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Default transmit power (pilot and data), 86 dB above unit noise. Puts the
/// receive SNR at the cell edge of the default 1.5 km cell around 10 dB.
pub const DEFAULT_POWER_DB: f64 = 86.0;

const MAX_DROP_ATTEMPTS: usize = 1_000_000;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub num_cells: usize,
    pub users_per_cell: usize,
    /// Hexagon circumradius, meters.
    pub cell_radius: f64,
    /// No user is dropped closer than this to its serving BS, meters.
    pub min_distance: f64,
    pub pathloss_exponent: f64,
    /// Hz.
    pub carrier_freq: f64,
    /// Seconds.
    pub slot_duration: f64,
    /// Symbols per slot (T_s).
    pub slot_symbols: usize,
    /// m/s.
    pub speed_min: f64,
    /// m/s.
    pub speed_max: f64,
    /// Linear, relative to unit noise.
    pub pilot_power: f64,
    /// Linear, relative to unit noise.
    pub uplink_power: f64,
    /// Log-normal shadowing standard deviation in dB; 0 disables it.
    pub shadowing_db: f64,
    pub rng_seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            num_cells: 7,
            users_per_cell: 10,
            cell_radius: 1500.0,
            min_distance: 10.0,
            pathloss_exponent: 3.5,
            carrier_freq: 2.0e9,
            slot_duration: 1.0e-3,
            slot_symbols: 200,
            speed_min: 20.0 / 3.6,
            speed_max: 80.0 / 3.6,
            pilot_power: db_to_linear(DEFAULT_POWER_DB),
            uplink_power: db_to_linear(DEFAULT_POWER_DB),
            shadowing_db: 0.0,
            rng_seed: 1,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.num_cells == 0 {
            return fail("num_cells must be at least 1");
        }
        if !(self.min_distance > 0.0 && self.min_distance < self.cell_radius) {
            return fail("need 0 < min_distance < cell_radius");
        }
        if !(self.pathloss_exponent > 2.0) {
            return fail("pathloss_exponent must exceed 2");
        }
        if self.slot_symbols == 0 {
            return fail("slot_symbols must be at least 1");
        }
        if !(self.pilot_power > 0.0 && self.uplink_power > 0.0) {
            return fail("powers must be positive");
        }
        if !(self.carrier_freq > 0.0 && self.slot_duration > 0.0) {
            return fail("carrier_freq and slot_duration must be positive");
        }
        if !(self.speed_min >= 0.0 && self.speed_min <= self.speed_max) {
            return fail("need 0 <= speed_min <= speed_max");
        }
        if !(self.shadowing_db >= 0.0) {
            return fail("shadowing_db must be non-negative");
        }
        Ok(())
    }
}

/// Per-link quantity indexed by (receiving BS, user's cell, user index).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkTensor {
    cells: usize,
    users: usize,
    data: Vec<f64>,
}

impl LinkTensor {
    pub fn zeros(cells: usize, users: usize) -> Self {
        Self {
            cells,
            users,
            data: vec![0.0; cells * cells * users],
        }
    }

    fn index(&self, bs: usize, cell: usize, user: usize) -> usize {
        debug_assert!(bs < self.cells && cell < self.cells && user < self.users);
        (bs * self.cells + cell) * self.users + user
    }

    pub fn get(&self, bs: usize, cell: usize, user: usize) -> f64 {
        self.data[self.index(bs, cell, user)]
    }

    pub fn set(&mut self, bs: usize, cell: usize, user: usize, value: f64) {
        let i = self.index(bs, cell, user);
        self.data[i] = value;
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }
}

/// Ground truth for one large-scale block of the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub bs_positions: Vec<Point>,
    /// `user_positions[cell][user]`.
    pub user_positions: Vec<Vec<Point>>,
    pub beta: LinkTensor,
    pub rho: LinkTensor,
    pub angle: LinkTensor,
    /// `velocity[cell][user]`, m/s.
    pub velocity: Vec<Vec<f64>>,
}

impl Scenario {
    pub fn num_cells(&self) -> usize {
        self.config.num_cells
    }

    pub fn users_per_cell(&self) -> usize {
        self.config.users_per_cell
    }

    /// Autocorrelation of user `(cell, user)` toward its own BS.
    pub fn serving_rho(&self, cell: usize, user: usize) -> f64 {
        self.rho.get(cell, cell, user)
    }

    /// Sum of `beta` toward `bs` over every user in the network.
    pub fn total_beta_toward(&self, bs: usize) -> f64 {
        let mut total = 0.0;
        for cell in 0..self.num_cells() {
            for user in 0..self.users_per_cell() {
                total += self.beta.get(bs, cell, user);
            }
        }
        total
    }
}

/// BS positions for a 1- or 7-cell hexagonal layout (no wrap-around).
///
/// Hexagons have vertices at multiples of 60 degrees, so first-ring
/// neighbours sit at 30 + 60k degrees, `sqrt(3) * cell_radius` away. Edge
/// cells see less interference than the centre cell.
pub fn generate_hex_layout(config: &ScenarioConfig) -> Result<Vec<Point>> {
    match config.num_cells {
        1 => Ok(vec![Point::ORIGIN]),
        7 => {
            let spacing = 3f64.sqrt() * config.cell_radius;
            let mut out = vec![Point::ORIGIN];
            for k in 0..6 {
                let angle = PI / 6.0 + k as f64 * PI / 3.0;
                out.push(Point {
                    x: spacing * angle.cos(),
                    y: spacing * angle.sin(),
                });
            }
            Ok(out)
        }
        c => Err(Error::UnsupportedCellCount(c)),
    }
}

/// Whether `offset` (relative to the hexagon centre) lies in the hexagon.
pub fn inside_hexagon(offset: Point, radius: f64) -> bool {
    let s3 = 3f64.sqrt();
    let (ax, ay) = (offset.x.abs(), offset.y.abs());
    ay <= s3 / 2.0 * radius && s3 * ax + ay <= s3 * radius
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserDrop {
    /// `[cell][user]`.
    pub positions: Vec<Vec<Point>>,
    /// `[cell][user]`, m/s.
    pub velocity: Vec<Vec<f64>>,
    /// Angle between movement and incident wave, per (BS, cell, user).
    pub angle: LinkTensor,
}

/// Drops users uniformly over each hexagon, rejecting points within
/// `min_distance` of the serving BS.
pub fn drop_users<R: Rng + ?Sized>(
    layout: &[Point],
    config: &ScenarioConfig,
    rng: &mut R,
) -> Result<UserDrop> {
    let cells = layout.len();
    let users = config.users_per_cell;
    let half_height = 3f64.sqrt() / 2.0 * config.cell_radius;
    let mut positions = Vec::with_capacity(cells);
    let mut velocity = Vec::with_capacity(cells);
    let mut attempts = 0usize;
    for bs in layout {
        let mut cell_pos = Vec::with_capacity(users);
        let mut cell_vel = Vec::with_capacity(users);
        for _ in 0..users {
            let offset = loop {
                attempts += 1;
                if attempts > MAX_DROP_ATTEMPTS {
                    return Err(Error::SamplingFailure {
                        attempts: MAX_DROP_ATTEMPTS,
                    });
                }
                let p = Point {
                    x: rng.random_range(-config.cell_radius..=config.cell_radius),
                    y: rng.random_range(-half_height..=half_height),
                };
                if inside_hexagon(p, config.cell_radius)
                    && p.distance(&Point::ORIGIN) >= config.min_distance
                {
                    break p;
                }
            };
            cell_pos.push(Point {
                x: bs.x + offset.x,
                y: bs.y + offset.y,
            });
            let speed = if config.speed_max > config.speed_min {
                rng.random_range(config.speed_min..config.speed_max)
            } else {
                config.speed_min
            };
            cell_vel.push(speed);
        }
        positions.push(cell_pos);
        velocity.push(cell_vel);
    }
    let mut angle = LinkTensor::zeros(cells, users);
    for bs in 0..cells {
        for cell in 0..cells {
            for user in 0..users {
                angle.set(bs, cell, user, rng.random_range(0.0..2.0 * PI));
            }
        }
    }
    Ok(UserDrop {
        positions,
        velocity,
        angle,
    })
}

/// Large-scale gain `(max(d, r0) / r0)^-sigma`; unity at or inside `r0`.
pub fn pathloss(distance: f64, config: &ScenarioConfig) -> f64 {
    let d = distance.max(config.min_distance);
    (d / config.min_distance).powf(-config.pathloss_exponent)
}

/// Maximum Doppler shift `v f_c cos(theta) / c`, Hz.
pub fn doppler_shift(speed: f64, angle: f64, carrier_freq: f64) -> f64 {
    speed * carrier_freq * angle.cos() / SPEED_OF_LIGHT
}

/// Jakes per-slot autocorrelation `J0(2 pi |f| T)`.
pub fn jakes_rho(doppler: f64, slot_duration: f64) -> f64 {
    bessel_j0(2.0 * PI * doppler.abs() * slot_duration)
}

/// Builds the full scenario from `config` using its own seed.
pub fn generate_scenario(config: &ScenarioConfig) -> Result<Scenario> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let layout = generate_hex_layout(config)?;
    let drop = drop_users(&layout, config, &mut rng)?;
    let cells = config.num_cells;
    let users = config.users_per_cell;

    let shadowing = if config.shadowing_db > 0.0 {
        Some(Normal::new(0.0, config.shadowing_db).expect("finite std"))
    } else {
        None
    };

    let mut beta = LinkTensor::zeros(cells, users);
    let mut rho = LinkTensor::zeros(cells, users);
    for (bs, bs_pos) in layout.iter().enumerate() {
        for cell in 0..cells {
            for user in 0..users {
                let d = drop.positions[cell][user].distance(bs_pos);
                let mut gain = pathloss(d, config);
                if let Some(sh) = &shadowing {
                    gain *= db_to_linear(sh.sample(&mut rng));
                }
                beta.set(bs, cell, user, gain);
                let f = doppler_shift(
                    drop.velocity[cell][user],
                    drop.angle.get(bs, cell, user),
                    config.carrier_freq,
                );
                rho.set(bs, cell, user, jakes_rho(f, config.slot_duration));
            }
        }
    }

    Ok(Scenario {
        config: config.clone(),
        bs_positions: layout,
        user_positions: drop.positions,
        beta,
        rho,
        angle: drop.angle,
        velocity: drop.velocity,
    })
}
