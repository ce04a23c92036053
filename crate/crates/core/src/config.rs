//! JSON run configuration and its resolution into a [`Problem`].
//!
//! ```json
//! {
//!   "grid": { "lx": 1.0, "ly": 1.0, "nx": 64, "ny": 64 },
//!   "hooke": { "lambda": 1.0, "mu": 1.0 },
//!   "elasticity_set": { "kind": "cylinder", "k": 0.42 },
//!   "boundary": { "bottom": "N", "right": "N", "top": "N",
//!                 "left": [{ "from": 0.0, "to": 1.0, "label": "D" }] },
//!   "bc": { "kind": "dissipative", "lambda": 100.0 },
//!   "time": { "t_final": 1.0, "cfl": 0.5, "snapshot_stride": 10 },
//!   "initial": { "family": "pulse",
//!                "velocity": { "amplitude": [1.0, 0.0], "center": [0.3, 0.75], "radius": 0.3 } },
//!   "body_force": { "kind": "none" },
//!   "output": { "dir": "out/plastic" }
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::algebra::{Hooke, Sym2, Vec2};
use crate::convex::ElasticitySet;
use crate::dynamics::{bump, cfl_dt, BcMode, BodyForce, Model, Problem, State, StepParams};
use crate::error::{Error, Result};
use crate::grid::{BoundaryPartition, Edge, EdgeSpec, Grid, Interval, Label};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub grid: GridConfig,
    pub hooke: HookeConfig,
    pub elasticity_set: SetConfig,
    pub boundary: BoundaryConfig,
    pub bc: BcMode,
    pub time: TimeConfig,
    pub initial: InitialConfig,
    #[serde(default)]
    pub body_force: ForceConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HookeConfig {
    pub lambda: f64,
    pub mu: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetConfig {
    Ball { radius: f64 },
    Cylinder { k: f64 },
    /// Planes `n:σ ≤ c` with `n = [xx, yy, xy]`.
    Halfspaces { planes: Vec<PlaneConfig> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneConfig {
    pub normal: [f64; 3],
    pub offset: f64,
}

/// A single label for the whole edge or a list of intervals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EdgeLabels {
    Uniform(Label),
    Intervals(Vec<Interval>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    pub bottom: EdgeLabels,
    pub right: EdgeLabels,
    pub top: EdgeLabels,
    pub left: EdgeLabels,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t_final: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cfl: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default = "one")]
    pub snapshot_stride: usize,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialConfig {
    #[serde(flatten)]
    pub family: InitialFamily,
    /// Margin of the initial stress inside the elasticity set; defaults to half the
    /// smallest cellwise margin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_margin: Option<f64>,
    /// Lift the data to the compatible initial state in dissipative mode.
    #[serde(default = "yes")]
    pub compatible: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum InitialFamily {
    /// Everything zero; pair with a body force.
    Zero,
    /// `u0 = amplitude · cos(mode π x / Lx) e_x`, `v0 = 0`.
    StandingWave {
        amplitude: f64,
        #[serde(default = "first_mode")]
        mode: u32,
    },
    /// Velocity bump `v0 = amplitude · b(x)` and an optional stress bump `σ0`, carried by
    /// `p0 = -A⁻¹σ0` with `u0 = 0`.
    Pulse {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        velocity: Option<VectorBump>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        prestress: Option<StressBump>,
    },
}

fn first_mode() -> u32 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorBump {
    pub amplitude: Vec2,
    pub center: Vec2,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StressBump {
    /// `[xx, yy, xy]`.
    pub amplitude: [f64; 3],
    pub center: Vec2,
    pub radius: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForceConfig {
    #[default]
    None,
    Pulse { amplitude: Vec2, center: Vec2, radius: f64, t_on: f64, t_off: f64 },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
}

fn missing_field(msg: &str) -> Option<&str> {
    let rest = msg.strip_prefix("missing field `")?;
    rest.split('`').next()
}

impl SimConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner().to_string();
            match missing_field(&inner) {
                Some(key) if path == "." => Error::MissingKey(key.to_string()),
                Some(key) => Error::MissingKey(format!("{path}.{key}")),
                None if path == "." => Error::Config(inner),
                None => Error::Config(format!("`{path}`: {inner}")),
            }
        })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }

    /// Hex SHA-256 of the compact JSON of the effective configuration.
    pub fn hash(&self) -> Result<String> {
        let eff = self.effective()?;
        Ok(hex::encode(Sha256::digest(serde_json::to_vec(&eff)?)))
    }

    /// Copy with every defaulted parameter written out.
    pub fn effective(&self) -> Result<Self> {
        let mut c = self.clone();
        if c.time.cfl.is_none() && c.time.dt.is_none() {
            c.time.cfl = Some(0.5);
        }
        if c.initial.r_margin.is_none() {
            let problem = self.resolve_raw()?;
            c.initial.r_margin = Some(problem.r_margin);
        }
        Ok(c)
    }

    pub fn grid(&self) -> Result<Grid> {
        let g = &self.grid;
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(g.lx) || !ok(g.ly) {
            return Err(Error::Config(format!("`grid`: side lengths must be positive, got {} x {}", g.lx, g.ly)));
        }
        if g.nx == 0 || g.ny == 0 || g.nx > 4096 || g.ny > 4096 {
            return Err(Error::Config(format!("`grid`: cell counts must lie in 1..=4096, got {} x {}", g.nx, g.ny)));
        }
        Grid::new(g.lx, g.ly, g.nx, g.ny)
    }

    pub fn set(&self) -> Result<ElasticitySet<2>> {
        match &self.elasticity_set {
            SetConfig::Ball { radius } => ElasticitySet::ball(*radius),
            SetConfig::Cylinder { k } => ElasticitySet::cylinder(*k),
            SetConfig::Halfspaces { planes } => ElasticitySet::halfspaces(
                planes.iter().map(|p| (Sym2::new(p.normal[0], p.normal[1], p.normal[2]), p.offset)).collect(),
            ),
        }
    }

    pub fn edge_specs(&self) -> Vec<EdgeSpec> {
        let b = &self.boundary;
        [(Edge::Bottom, &b.bottom), (Edge::Right, &b.right), (Edge::Top, &b.top), (Edge::Left, &b.left)]
            .into_iter()
            .map(|(edge, l)| match l {
                EdgeLabels::Uniform(label) => EdgeSpec::uniform(edge, *label),
                EdgeLabels::Intervals(intervals) => EdgeSpec { edge, intervals: intervals.clone() },
            })
            .collect()
    }

    pub fn model(&self) -> Result<Model> {
        let grid = self.grid()?;
        let partition = BoundaryPartition::new(&grid, &self.edge_specs())?;
        let hooke = Hooke::new(self.hooke.lambda, self.hooke.mu)?;
        Ok(Model::new(grid, partition, hooke, self.set()?))
    }

    /// Step size and step count reaching `t_final` exactly.
    pub fn time_grid(&self, model: &Model) -> Result<(StepParams, usize)> {
        let t = &self.time;
        if !(t.t_final.is_finite() && t.t_final >= 0.0) {
            return Err(Error::Config(format!("`time.t_final` must be nonnegative, got {}", t.t_final)));
        }
        if t.snapshot_stride == 0 {
            return Err(Error::Config("`time.snapshot_stride` must be at least 1".into()));
        }
        let dt_max = cfl_dt(&model.grid, &model.hooke, 1.0);
        if t.cfl.is_some() && t.dt.is_some() {
            return Err(Error::Config("`time`: give either `cfl` or `dt`, not both".into()));
        }
        if let Some(dt) = t.dt {
            if !(dt > 0.0 && dt <= dt_max * (1.0 + 1e-12)) {
                return Err(Error::Config(format!("`time.dt` must lie in (0, {dt_max}], got {dt}")));
            }
            let steps = (t.t_final / dt).round() as usize;
            if (steps as f64 * dt - t.t_final).abs() > 1e-9 * t.t_final.max(dt) {
                return Err(Error::Config(format!("`time.dt` = {dt} does not divide t_final = {}", t.t_final)));
            }
            return Ok((StepParams { dt }, steps));
        }
        let cfl = t.cfl.unwrap_or(0.5);
        if !(cfl > 0.0 && cfl <= 1.0) {
            return Err(Error::Config(format!("`time.cfl` must lie in (0, 1], got {cfl}")));
        }
        let bound = cfl * dt_max;
        if t.t_final == 0.0 {
            return Ok((StepParams { dt: bound }, 0));
        }
        let steps = (t.t_final / bound - 1e-9).ceil().max(1.0) as usize;
        Ok((StepParams { dt: t.t_final / steps as f64 }, steps))
    }

    pub fn force(&self) -> Result<BodyForce> {
        Ok(match self.body_force {
            ForceConfig::None => BodyForce::None,
            ForceConfig::Pulse { amplitude, center, radius, t_on, t_off } => {
                if !(radius > 0.0 && t_off > t_on) {
                    return Err(Error::Config("`body_force`: need radius > 0 and t_off > t_on".into()));
                }
                BodyForce::Pulse { amplitude, center, radius, t_on, t_off }
            }
        })
    }

    pub fn initial_data(&self, model: &Model) -> Result<State> {
        let g = &model.grid;
        match &self.initial.family {
            InitialFamily::Zero => Ok(State::zero(g, &model.partition)),
            InitialFamily::StandingWave { amplitude, mode } => {
                let kx = *mode as f64 * std::f64::consts::PI / g.lx();
                let u = (0..g.num_nodes()).map(|n| [amplitude * (kx * g.node_pos(n)[0]).cos(), 0.0]).collect();
                State::from_fields(model, u, vec![[0.0; 2]; g.num_nodes()], vec![Sym2::zero(); g.num_cells()])
            }
            InitialFamily::Pulse { velocity, prestress } => {
                let v = (0..g.num_nodes())
                    .map(|n| match velocity {
                        Some(b) => {
                            let s = bump(g.node_pos(n), b.center, b.radius);
                            [s * b.amplitude[0], s * b.amplitude[1]]
                        }
                        None => [0.0, 0.0],
                    })
                    .collect();
                let p = (0..g.num_cells())
                    .map(|c| match prestress {
                        Some(b) => {
                            let s = bump(g.cell_center(c), b.center, b.radius);
                            let a = b.amplitude;
                            -model.hooke.inverse(&Sym2::new(s * a[0], s * a[1], s * a[2]))
                        }
                        None => Sym2::zero(),
                    })
                    .collect();
                for r in [velocity.as_ref().map(|b| b.radius), prestress.as_ref().map(|b| b.radius)].into_iter().flatten() {
                    if !(r > 0.0) {
                        return Err(Error::Config("`initial`: bump radius must be positive".into()));
                    }
                }
                State::from_fields(model, vec![[0.0; 2]; g.num_nodes()], v, p)
            }
        }
    }

    fn resolve_raw(&self) -> Result<Problem> {
        self.bc.validate()?;
        let model = self.model()?;
        let (params, steps) = self.time_grid(&model)?;
        let data = self.initial_data(&model)?;
        let r_margin = match self.initial.r_margin {
            Some(r) if r > 0.0 => r,
            Some(r) => return Err(Error::Config(format!("`initial.r_margin` must be positive, got {r}"))),
            None => 0.5 * data.sigma.iter().map(|s| model.set.inner_margin(s)).fold(f64::INFINITY, f64::min),
        };
        Ok(Problem {
            model,
            mode: self.bc,
            params,
            steps,
            force: self.force()?,
            data,
            r_margin,
            compatible: self.initial.compatible,
        })
    }

    pub fn resolve(&self) -> Result<Problem> {
        self.resolve_raw()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
        "grid": { "lx": 1.0, "ly": 1.0, "nx": 8, "ny": 8 },
        "hooke": { "lambda": 1.0, "mu": 1.0 },
        "elasticity_set": { "kind": "ball", "radius": 2.0 },
        "boundary": { "bottom": "N", "right": "N", "top": "N",
                      "left": [{ "from": 0.0, "to": 0.5, "label": "D" }, { "from": 0.5, "to": 1.0, "label": "N" }] },
        "bc": { "kind": "dissipative", "lambda": 10.0 },
        "time": { "t_final": 0.5, "cfl": 0.5 },
        "initial": { "family": "standing_wave", "amplitude": 0.01 }
    }"#;

    #[test]
    fn parses_and_resolves() {
        let c = SimConfig::from_json(BASE).unwrap();
        let p = c.resolve().unwrap();
        assert_eq!(p.model.partition.sigma_nodes().len(), 2);
        assert!((p.params.dt * p.steps as f64 - 0.5).abs() < 1e-14);
        assert!(p.params.dt <= 0.5 * (1.0 / 8.0) / 3f64.sqrt() + 1e-15);
        assert_eq!(c.time.snapshot_stride, 1);
    }

    #[test]
    fn missing_key_is_named() {
        let text = BASE.replace(r#""mu": 1.0"#, "");
        let text = text.replace(r#""lambda": 1.0,"#, r#""lambda": 1.0"#);
        match SimConfig::from_json(&text) {
            Err(Error::MissingKey(k)) => assert_eq!(k, "hooke.mu"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn typo_is_rejected_with_path() {
        let text = BASE.replace(r#""nx": 8"#, r#""nxx": 8"#);
        let err = SimConfig::from_json(&text).unwrap_err().to_string();
        assert!(err.contains("grid"), "{err}");
    }

    #[test]
    fn effective_round_trip() {
        let c = SimConfig::from_json(BASE).unwrap();
        let eff = c.effective().unwrap();
        let back = SimConfig::from_json(&eff.to_json_pretty()).unwrap();
        assert_eq!(back, eff);
        assert_eq!(back.effective().unwrap(), eff);
        assert_eq!(c.hash().unwrap(), back.hash().unwrap());
    }

    #[test]
    fn explicit_dt_must_divide() {
        let text = BASE.replace(r#""cfl": 0.5"#, r#""dt": 0.03"#);
        assert!(SimConfig::from_json(&text).unwrap().resolve().is_err());
        let text = BASE.replace(r#""cfl": 0.5"#, r#""dt": 0.025"#);
        let p = SimConfig::from_json(&text).unwrap().resolve().unwrap();
        assert_eq!(p.steps, 20);
    }

    #[test]
    fn overlapping_intervals_rejected() {
        let text = BASE.replace(r#""to": 0.5, "label": "D""#, r#""to": 0.6, "label": "D""#);
        assert!(SimConfig::from_json(&text).unwrap().resolve().is_err());
    }
}
