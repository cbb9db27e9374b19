//! User placement and constant-speed random-direction movement.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::rng::{self, Stream};
use crate::topology::{BoundingBox, OruId, Point, Topology, UserState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MobilityConfig {
    pub user_count: usize,
    pub hotspot_fraction: f64,
    pub hotspot_oru: OruId,
    /// m/s
    pub speed: f64,
    /// Seconds a heading is kept before a new one is drawn.
    pub direction_hold_s: f64,
    /// Per-user rate demand, bit/s.
    pub demand_bps: f64,
    /// Keep hotspot users inside the hotspot cell for the whole run instead
    /// of letting them roam.
    pub hotspot_confined: bool,
}

impl Default for MobilityConfig {
    fn default() -> Self {
        Self {
            user_count: 80,
            hotspot_fraction: 0.7,
            hotspot_oru: 0,
            speed: 5.0,
            direction_hold_s: 30.0,
            demand_bps: 2e6,
            hotspot_confined: true,
        }
    }
}

impl MobilityConfig {
    pub fn validate(&self, topo: &Topology) -> Result<()> {
        if !(0.0..=1.0).contains(&self.hotspot_fraction) {
            return Err(SimError::Config(format!(
                "hotspot_fraction must be in [0, 1], got {}",
                self.hotspot_fraction
            )));
        }
        if self.hotspot_oru >= topo.oru_count() {
            return Err(SimError::Config(format!(
                "hotspot_oru {} out of range for {} O-RUs",
                self.hotspot_oru,
                topo.oru_count()
            )));
        }
        if !(self.speed >= 0.0 && self.speed.is_finite()) {
            return Err(SimError::Config(format!("speed must be >= 0, got {}", self.speed)));
        }
        if !(self.demand_bps > 0.0) {
            return Err(SimError::Config(format!("demand must be > 0, got {}", self.demand_bps)));
        }
        if !(self.direction_hold_s > 0.0) {
            return Err(SimError::Config("direction_hold_s must be > 0".into()));
        }
        Ok(())
    }

    pub fn hotspot_users(&self) -> usize {
        (self.hotspot_fraction * self.user_count as f64 - 1e-9).ceil().max(0.0) as usize
    }
}

/// Uniform point in the hexagonal cell of `s` (rejection from the
/// circumscribing disk).
fn point_in_cell(topo: &Topology, s: OruId, r: &mut impl Rng) -> Point {
    let c = topo.oru_positions[s];
    let radius = topo.cell_radius();
    loop {
        let rho = radius * r.random::<f64>().sqrt();
        let a = r.random::<f64>() * std::f64::consts::TAU;
        let p = Point::new(c.x + rho * a.cos(), c.y + rho * a.sin());
        if topo.in_hex_cell(s, &p) {
            return p;
        }
    }
}

fn random_heading(r: &mut impl Rng) -> f64 {
    r.random::<f64>() * std::f64::consts::TAU
}

/// Hotspot users land uniformly inside the hotspot hexagon; the rest
/// uniformly over the union of all hexagons (equal-area cells, so pick a cell
/// then a point in it).
pub fn init_positions(config: &MobilityConfig, topo: &Topology, r: &mut impl Rng) -> Vec<UserState> {
    let hot = config.hotspot_users().min(config.user_count);
    (0..config.user_count)
        .map(|id| {
            let position = if id < hot {
                point_in_cell(topo, config.hotspot_oru, r)
            } else {
                let s = r.random_range(0..topo.oru_count());
                point_in_cell(topo, s, r)
            };
            UserState {
                id,
                position,
                speed: config.speed,
                heading: random_heading(r),
                demand: config.demand_bps,
            }
        })
        .collect()
}

/// Advances one user by `speed·dt`, reflecting specularly off the box.
pub fn advance(user: &mut UserState, dt: f64, bounds: &BoundingBox) {
    let dist = user.speed * dt;
    if dist == 0.0 {
        return;
    }
    let (mut vx, mut vy) = (user.heading.cos(), user.heading.sin());
    let mut x = user.position.x + dist * vx;
    let mut y = user.position.y + dist * vy;
    // A long step may bounce more than once.
    for _ in 0..64 {
        let mut bounced = false;
        if x > bounds.max.x {
            x = 2.0 * bounds.max.x - x;
            vx = -vx;
            bounced = true;
        } else if x < bounds.min.x {
            x = 2.0 * bounds.min.x - x;
            vx = -vx;
            bounced = true;
        }
        if y > bounds.max.y {
            y = 2.0 * bounds.max.y - y;
            vy = -vy;
            bounced = true;
        } else if y < bounds.min.y {
            y = 2.0 * bounds.min.y - y;
            vy = -vy;
            bounced = true;
        }
        if !bounced {
            break;
        }
        user.heading = vy.atan2(vx).rem_euclid(std::f64::consts::TAU);
    }
    user.position = Point::new(x.clamp(bounds.min.x, bounds.max.x), y.clamp(bounds.min.y, bounds.max.y));
}

/// Outward normals of the hexagon edges, matching [`Topology::in_hex_cell`].
fn hex_normals() -> [(f64, f64); 6] {
    std::array::from_fn(|k| {
        let a = k as f64 * std::f64::consts::FRAC_PI_3;
        (a.cos(), a.sin())
    })
}

/// Advances one user by `speed·dt` inside the hexagon with the given center
/// and apothem, reflecting specularly off its edges.
pub fn advance_in_hex(user: &mut UserState, dt: f64, center: Point, apothem: f64) {
    let mut left = user.speed * dt;
    if left == 0.0 {
        return;
    }
    let normals = hex_normals();
    let (mut vx, mut vy) = (user.heading.cos(), user.heading.sin());
    let (mut px, mut py) = (user.position.x - center.x, user.position.y - center.y);
    for _ in 0..64 {
        let mut hit: Option<(f64, (f64, f64))> = None;
        for &(nx, ny) in &normals {
            let closing = nx * vx + ny * vy;
            if closing > 0.0 {
                let t = ((apothem - (nx * px + ny * py)) / closing).max(0.0);
                if t < left && hit.is_none_or(|(best, _)| t < best) {
                    hit = Some((t, (nx, ny)));
                }
            }
        }
        let Some((t, (nx, ny))) = hit else {
            px += left * vx;
            py += left * vy;
            break;
        };
        px += t * vx;
        py += t * vy;
        left -= t;
        let dot = vx * nx + vy * ny;
        vx -= 2.0 * dot * nx;
        vy -= 2.0 * dot * ny;
        user.heading = vy.atan2(vx).rem_euclid(std::f64::consts::TAU);
    }
    for &(nx, ny) in &normals {
        let over = nx * px + ny * py - apothem;
        if over > 0.0 {
            px -= over * nx;
            py -= over * ny;
        }
    }
    user.position = Point::new(center.x + px, center.y + py);
}

/// Moves all users by one step; `redraw` picks fresh headings first.
pub fn step_positions(
    users: &mut [UserState],
    dt: f64,
    bounds: &BoundingBox,
    redraw: bool,
    rngs: &mut [ChaCha8Rng],
) {
    for (user, r) in users.iter_mut().zip(rngs.iter_mut()) {
        if redraw {
            user.heading = random_heading(r);
        }
        advance(user, dt, bounds);
    }
}

/// Movement state for a run: one RNG stream per user plus the heading clock.
#[derive(Debug, Clone)]
pub struct Mobility {
    pub bounds: BoundingBox,
    /// Hexagon (center, apothem) holding the first `confined` users, when
    /// confinement is on.
    pub cell: Option<(Point, f64)>,
    confined: usize,
    hold_steps: u64,
    steps: u64,
    rngs: Vec<ChaCha8Rng>,
}

impl Mobility {
    pub fn new(config: &MobilityConfig, topo: &Topology, dt: f64, seed: u64) -> Self {
        let hold_steps = ((config.direction_hold_s / dt) - 1e-9).ceil().max(1.0) as u64;
        Self {
            bounds: topo.bounding_box(),
            cell: config
                .hotspot_confined
                .then(|| (topo.oru_positions[config.hotspot_oru], topo.inter_site_distance / 2.0)),
            confined: if config.hotspot_confined { config.hotspot_users().min(config.user_count) } else { 0 },
            hold_steps,
            steps: 0,
            rngs: (0..config.user_count)
                .map(|u| rng::stream(seed, Stream::Mobility, u as u64))
                .collect(),
        }
    }

    pub fn step(&mut self, users: &mut [UserState], dt: f64) {
        self.steps += 1;
        let redraw = self.steps % self.hold_steps == 0;
        let k = self.confined.min(users.len());
        let (hot, free) = users.split_at_mut(k);
        let (hot_rngs, free_rngs) = self.rngs.split_at_mut(k);
        if let Some((center, apothem)) = self.cell {
            for (user, r) in hot.iter_mut().zip(hot_rngs.iter_mut()) {
                if redraw {
                    user.heading = random_heading(r);
                }
                advance_in_hex(user, dt, center, apothem);
            }
        }
        step_positions(free, dt, &self.bounds, redraw, free_rngs);
    }
}
