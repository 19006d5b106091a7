//! Scenario configuration: `key = value` files, validation and defaults.

use std::collections::BTreeSet;
use std::str::FromStr;

use crate::energy::EnergyConfig;
use crate::error::{Result, SimError};
use crate::mac::MacConfig;
use crate::mobility::{MobilityConfig, Point};
use crate::radio::{FadingSpec, MeanModel, PropagationKind, RadioParams, LIGHT_SPEED};
use crate::routing::{Protocol, RoutingConfig};
use crate::traffic::TrafficConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub nodes: usize,
    pub sim_time: f64,
    pub seed: u64,
    pub protocol: Protocol,
    pub fading: FadingSpec,
    pub radio: RadioParams,
    pub mobility: MobilityConfig,
    pub traffic: TrafficConfig,
    pub mac: MacConfig,
    pub energy: EnergyConfig,
    pub routing: RoutingConfig,
    /// Fixed initial positions instead of random placement.
    pub placement: Option<Vec<Point>>,
    /// Mobility trace sampling period, s.
    pub trace_interval: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            nodes: 50,
            sim_time: 200.0,
            seed: 1,
            protocol: Protocol::Aodv,
            fading: FadingSpec::new(PropagationKind::TwoRay),
            radio: RadioParams::default(),
            mobility: MobilityConfig::default(),
            traffic: TrafficConfig::default(),
            mac: MacConfig::default(),
            energy: EnergyConfig::default(),
            routing: RoutingConfig::default(),
            placement: None,
            trace_interval: 1.0,
        }
    }
}

/// Model parameters and the propagation kinds they belong to.
const MODEL_KEYS: [(&str, &[PropagationKind]); 6] = [
    ("beta", &[PropagationKind::Shadowing]),
    ("sigma_db", &[PropagationKind::Shadowing]),
    ("d0", &[PropagationKind::Shadowing]),
    ("rice_k", &[PropagationKind::Rice]),
    ("nakagami_m", &[PropagationKind::Nakagami]),
    ("fading_mean", &[PropagationKind::Rayleigh, PropagationKind::Rice, PropagationKind::Nakagami]),
];

pub const KEYS: &[&str] = &[
    "nodes", "sim_time", "seed", "protocol", "propagation", "connections", "area", "width", "height",
    "v_min", "v_max", "pause", "rate_pps", "payload_bytes", "stagger", "beta", "sigma_db", "d0", "rice_k",
    "nakagami_m", "fading_mean", "pt", "gt", "gr", "loss", "frequency_hz", "lambda", "ht", "hr", "rx_thresh",
    "cs_thresh", "link_rate", "slot", "difs", "sifs", "cw_min", "cw_max", "retry_limit", "mac_header_bytes",
    "ack_bytes", "queue_capacity", "capture_db", "control_priority", "initial_energy_j", "tx_power_w",
    "rx_power_w", "charge_overheard", "aodv_hello", "aodv_hello_interval", "aodv_allowed_hello_loss",
    "aodv_active_route_timeout", "aodv_rreq_retries", "aodv_intermediate_reply", "dsr_cache_size",
    "dsr_buffer_size", "dsr_buffer_timeout", "dsr_cache_replies", "dsr_gratuitous_replies",
    "dsdv_dump_interval", "dsdv_triggered_updates", "placement", "trace_interval",
];

fn num<T: FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse::<T>().map_err(|_| format!("cannot parse `{v}`"))
}

fn flag(v: &str) -> std::result::Result<bool, String> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(format!("expected a boolean, got `{v}`")),
    }
}

fn parse_area(v: &str) -> std::result::Result<(f64, f64), String> {
    let (w, h) = v.split_once(['x', 'X', '*']).ok_or_else(|| format!("expected WIDTHxHEIGHT, got `{v}`"))?;
    Ok((num(w.trim())?, num(h.trim())?))
}

fn parse_placement(v: &str) -> std::result::Result<Vec<Point>, String> {
    v.split_whitespace()
        .map(|p| {
            let (x, y) = p.split_once(':').ok_or_else(|| format!("expected x:y, got `{p}`"))?;
            Ok((num(x)?, num(y)?))
        })
        .collect()
}

impl ScenarioConfig {
    /// Sets one key. Values are checked for syntax only; call
    /// [`ScenarioConfig::validate`] once all keys are applied.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let v = value.trim();
        match key {
            "nodes" => self.nodes = num(v)?,
            "sim_time" => self.sim_time = num(v)?,
            "seed" => self.seed = num(v)?,
            "protocol" => self.protocol = v.parse().map_err(|e: SimError| e.to_string())?,
            "propagation" => {
                let kind: PropagationKind = v.parse().map_err(|e: SimError| e.to_string())?;
                self.fading.kind = kind;
            }
            "connections" => self.traffic.connections = num(v)?,
            "area" => (self.mobility.width, self.mobility.height) = parse_area(v)?,
            "width" => self.mobility.width = num(v)?,
            "height" => self.mobility.height = num(v)?,
            "v_min" => self.mobility.v_min = num(v)?,
            "v_max" => self.mobility.v_max = num(v)?,
            "pause" => self.mobility.pause = num(v)?,
            "rate_pps" => self.traffic.rate_pps = num(v)?,
            "payload_bytes" => self.traffic.payload_bytes = num(v)?,
            "stagger" => self.traffic.stagger = num(v)?,
            "beta" => self.fading.beta = num(v)?,
            "sigma_db" => self.fading.sigma_db = num(v)?,
            "d0" => self.fading.d0 = num(v)?,
            "rice_k" => self.fading.rice_k = num(v)?,
            "nakagami_m" => self.fading.nakagami_m = num(v)?,
            "fading_mean" => self.fading.mean_model = v.parse::<MeanModel>().map_err(|e| e.to_string())?,
            "pt" => self.radio.pt = num(v)?,
            "gt" => self.radio.gt = num(v)?,
            "gr" => self.radio.gr = num(v)?,
            "loss" => self.radio.loss = num(v)?,
            "frequency_hz" => self.radio.lambda = LIGHT_SPEED / num::<f64>(v)?,
            "lambda" => self.radio.lambda = num(v)?,
            "ht" => self.radio.ht = num(v)?,
            "hr" => self.radio.hr = num(v)?,
            "rx_thresh" => self.radio.rx_thresh = num(v)?,
            "cs_thresh" => self.radio.cs_thresh = num(v)?,
            "link_rate" => self.mac.link_rate = num(v)?,
            "slot" => self.mac.slot = num(v)?,
            "difs" => self.mac.difs = num(v)?,
            "sifs" => self.mac.sifs = num(v)?,
            "cw_min" => self.mac.cw_min = num(v)?,
            "cw_max" => self.mac.cw_max = num(v)?,
            "retry_limit" => self.mac.retry_limit = num(v)?,
            "mac_header_bytes" => self.mac.header_bytes = num(v)?,
            "ack_bytes" => self.mac.ack_bytes = num(v)?,
            "queue_capacity" => self.mac.queue_capacity = num(v)?,
            "capture_db" => self.mac.capture_db = num(v)?,
            "control_priority" => {
                self.mac.control_priority = if v.eq_ignore_ascii_case("auto") { None } else { Some(flag(v)?) }
            }
            "initial_energy_j" => self.energy.initial_j = num(v)?,
            "tx_power_w" => self.energy.tx_power_w = num(v)?,
            "rx_power_w" => self.energy.rx_power_w = num(v)?,
            "charge_overheard" => self.energy.charge_overheard = flag(v)?,
            "aodv_hello" => self.routing.aodv.hello_enabled = flag(v)?,
            "aodv_hello_interval" => self.routing.aodv.hello_interval = num(v)?,
            "aodv_allowed_hello_loss" => self.routing.aodv.allowed_hello_loss = num(v)?,
            "aodv_active_route_timeout" => self.routing.aodv.active_route_timeout = num(v)?,
            "aodv_rreq_retries" => self.routing.aodv.rreq_retries = num(v)?,
            "aodv_intermediate_reply" => self.routing.aodv.intermediate_reply = flag(v)?,
            "dsr_cache_size" => self.routing.dsr.cache_size = num(v)?,
            "dsr_buffer_size" => self.routing.dsr.buffer_capacity = num(v)?,
            "dsr_buffer_timeout" => self.routing.dsr.buffer_timeout = num(v)?,
            "dsr_cache_replies" => self.routing.dsr.cache_replies = flag(v)?,
            "dsr_gratuitous_replies" => self.routing.dsr.gratuitous_replies = flag(v)?,
            "dsdv_dump_interval" => self.routing.dsdv.dump_interval = num(v)?,
            "dsdv_triggered_updates" => self.routing.dsdv.triggered_updates = flag(v)?,
            "placement" => self.placement = Some(parse_placement(v)?),
            "trace_interval" => self.trace_interval = num(v)?,
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    /// Checks single-field ranges and cross-module consistency.
    pub fn validate(&self) -> Result<()> {
        if self.nodes == 0 {
            return Err(SimError::Config("nodes must be at least 1".into()));
        }
        if !(self.sim_time > 0.0 && self.sim_time.is_finite()) {
            return Err(SimError::Config("sim_time must be positive".into()));
        }
        if !(self.trace_interval > 0.0) {
            return Err(SimError::Config("trace_interval must be positive".into()));
        }
        self.radio.validate()?;
        self.fading.validate()?;
        self.mobility.validate()?;
        self.mac.validate()?;
        self.energy.validate()?;
        let t = &self.traffic;
        if !(t.rate_pps > 0.0 && t.rate_pps.is_finite() && t.stagger >= 0.0) {
            return Err(SimError::Config("rate_pps must be positive and stagger non-negative".into()));
        }
        let pairs = self.nodes * (self.nodes - 1);
        if t.connections > pairs {
            return Err(SimError::Config(format!("{} connections exceed the {pairs} ordered node pairs", t.connections)));
        }
        if let Some(p) = &self.placement {
            if p.len() != self.nodes {
                return Err(SimError::Config(format!("placement lists {} positions for {} nodes", p.len(), self.nodes)));
            }
        }
        Ok(())
    }

    /// Strict parse: unknown keys, bad values, model parameters that do not
    /// belong to the chosen propagation model and invalid values are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let (cfg, set) = Self::parse_lenient(text)?;
        cfg.check_model_keys(&set)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Rejects model parameters in `set` (key, line) that do not belong to
    /// the configured propagation model.
    pub fn check_model_keys(&self, set: &[(String, usize)]) -> Result<()> {
        for (key, kinds) in MODEL_KEYS {
            if let Some(line) = set.iter().find(|(k, _)| k == key).map(|(_, l)| *l) {
                if !kinds.contains(&self.fading.kind) {
                    return Err(SimError::Parse {
                        line,
                        key: key.to_string(),
                        msg: format!("not applicable to propagation `{}`", self.fading.kind),
                    });
                }
            }
        }
        Ok(())
    }

    /// Parse without model/parameter cross-checks or final validation, for
    /// sweep bases whose propagation model is overridden per cell. Returns
    /// the keys set and their line numbers.
    pub fn parse_lenient(text: &str) -> Result<(Self, Vec<(String, usize)>)> {
        let mut cfg = ScenarioConfig::default();
        let mut seen = BTreeSet::new();
        let mut set = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((k, v)) = content.split_once('=') else {
                return Err(SimError::Parse { line, key: content.to_string(), msg: "expected `key = value`".into() });
            };
            let key = k.trim().to_ascii_lowercase();
            if !seen.insert(key.clone()) {
                return Err(SimError::Parse { line, key, msg: "duplicate key".into() });
            }
            cfg.set(&key, v).map_err(|msg| SimError::Parse { line, key: key.clone(), msg })?;
            set.push((key, line));
        }
        Ok((cfg, set))
    }

    pub fn propagation(&self) -> PropagationKind {
        self.fading.kind
    }

    pub fn control_priority(&self) -> bool {
        self.mac.control_priority.unwrap_or_else(|| self.protocol.default_control_priority())
    }

    pub fn labels(&self) -> crate::metrics::RunLabels {
        crate::metrics::RunLabels {
            protocol: self.protocol.name().to_string(),
            propagation: self.fading.kind.name().to_string(),
            nodes: self.nodes,
            connections: self.traffic.connections,
            seed: self.seed,
            sim_time: self.sim_time,
        }
    }
}

impl FromStr for ScenarioConfig {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioConfig::parse(s)
    }
}
