//! Random waypoint motion inside a rectangular field.

use crate::error::{Result, SimError};
use crate::kernel::RngStream;

pub type Point = (f64, f64);

#[derive(Debug, Clone, PartialEq)]
pub struct MobilityConfig {
    pub width: f64,
    pub height: f64,
    pub v_min: f64,
    /// 0 keeps every node at its initial position.
    pub v_max: f64,
    pub pause: f64,
}

impl Default for MobilityConfig {
    fn default() -> Self {
        MobilityConfig { width: 670.0, height: 670.0, v_min: 0.5, v_max: 5.0, pause: 0.0 }
    }
}

impl MobilityConfig {
    pub fn validate(&self) -> Result<()> {
        let fin = |v: f64| v.is_finite();
        if !(fin(self.width) && fin(self.height) && self.width > 0.0 && self.height > 0.0) {
            return Err(SimError::Config("field dimensions must be positive".into()));
        }
        if !(fin(self.v_max) && fin(self.v_min) && fin(self.pause)) || self.v_max < 0.0 || self.pause < 0.0 {
            return Err(SimError::Config("speeds and pause must be finite and non-negative".into()));
        }
        if self.v_max > 0.0 && !(self.v_min > 0.0 && self.v_min <= self.v_max) {
            return Err(SimError::Config(format!(
                "need 0 < v_min <= v_max when moving (v_min={}, v_max={})",
                self.v_min, self.v_max
            )));
        }
        Ok(())
    }

    pub fn is_static(&self) -> bool {
        self.v_max == 0.0
    }

    pub fn contains(&self, p: Point) -> bool {
        (0.0..=self.width).contains(&p.0) && (0.0..=self.height).contains(&p.1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionLeg {
    pub origin: Point,
    pub destination: Point,
    pub speed: f64,
    pub depart_time: f64,
    pub pause_after: f64,
}

impl MotionLeg {
    pub fn length(&self) -> f64 {
        (self.destination.0 - self.origin.0).hypot(self.destination.1 - self.origin.1)
    }

    pub fn arrival_time(&self) -> f64 {
        self.depart_time + self.length() / self.speed
    }

    /// Time at which the next leg departs.
    pub fn end_time(&self) -> f64 {
        self.arrival_time() + self.pause_after
    }

    pub fn position_at(&self, t: f64) -> Point {
        let len = self.length();
        if len == 0.0 || t <= self.depart_time {
            return self.origin;
        }
        let f = ((t - self.depart_time) * self.speed / len).min(1.0);
        if f >= 1.0 {
            return self.destination;
        }
        (
            self.origin.0 + f * (self.destination.0 - self.origin.0),
            self.origin.1 + f * (self.destination.1 - self.origin.1),
        )
    }
}

pub fn uniform_point(cfg: &MobilityConfig, rng: &mut RngStream) -> Point {
    (rng.uniform() * cfg.width, rng.uniform() * cfg.height)
}

/// Draws the leg departing from `from` at `now`.
pub fn next_leg(cfg: &MobilityConfig, from: Point, now: f64, rng: &mut RngStream) -> MotionLeg {
    let destination = uniform_point(cfg, rng);
    let speed = if cfg.v_min == cfg.v_max { cfg.v_max } else { rng.uniform_in(cfg.v_min, cfg.v_max) };
    MotionLeg { origin: from, destination, speed, depart_time: now, pause_after: cfg.pause }
}

/// Positions of all nodes, advanced lazily as queries move forward in time.
#[derive(Debug, Clone)]
pub struct Mobility {
    cfg: MobilityConfig,
    legs: Vec<MotionLeg>,
    rngs: Vec<RngStream>,
}

impl Mobility {
    /// Initial positions come from `placement` if given, otherwise uniformly
    /// from the "topology" stream.
    pub fn new(cfg: MobilityConfig, nodes: usize, seed: u64, placement: Option<&[Point]>) -> Result<Self> {
        cfg.validate()?;
        let starts: Vec<Point> = match placement {
            Some(p) => {
                if p.len() != nodes {
                    return Err(SimError::Config(format!("placement lists {} positions for {nodes} nodes", p.len())));
                }
                if let Some(q) = p.iter().find(|q| !cfg.contains(**q)) {
                    return Err(SimError::Config(format!("placement {q:?} outside the field")));
                }
                p.to_vec()
            }
            None => {
                let mut topo = RngStream::new("topology", seed);
                (0..nodes).map(|_| uniform_point(&cfg, &mut topo)).collect()
            }
        };
        let mut rngs: Vec<RngStream> = (0..nodes).map(|i| RngStream::new(&format!("mobility:{i}"), seed)).collect();
        let legs = starts
            .into_iter()
            .zip(rngs.iter_mut())
            .map(|(p, rng)| {
                if cfg.is_static() {
                    MotionLeg { origin: p, destination: p, speed: 1.0, depart_time: 0.0, pause_after: f64::INFINITY }
                } else {
                    next_leg(&cfg, p, 0.0, rng)
                }
            })
            .collect();
        Ok(Mobility { cfg, legs, rngs })
    }

    pub fn config(&self) -> &MobilityConfig {
        &self.cfg
    }

    pub fn len(&self) -> usize {
        self.legs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.legs.is_empty()
    }

    pub fn current_leg(&self, node: usize) -> &MotionLeg {
        &self.legs[node]
    }

    /// Position of `node` at `t`. Queries for one node must not go back in
    /// time past the start of its current leg.
    pub fn position(&mut self, node: usize, t: f64) -> Point {
        while self.legs[node].end_time() <= t {
            let leg = &self.legs[node];
            let (from, at) = (leg.destination, leg.end_time());
            self.legs[node] = next_leg(&self.cfg, from, at, &mut self.rngs[node]);
        }
        self.legs[node].position_at(t)
    }

    pub fn distance(&mut self, a: usize, b: usize, t: f64) -> f64 {
        let (pa, pb) = (self.position(a, t), self.position(b, t));
        (pa.0 - pb.0).hypot(pa.1 - pb.1)
    }
}
