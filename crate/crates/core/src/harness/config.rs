use std::path::PathBuf;

use crate::asb::{AsbConfig, InitialMemory, MuMode, PassOrder, UpdateMode, WeightNormalization};
use crate::hlda::HldaConfig;
use crate::netstate::ResourceBudget;

use super::HarnessError;

#[derive(Debug, Clone, PartialEq)]
pub enum TopologySpec {
    Regular {
        nodes: usize,
        degree: usize,
        wavelengths: u32,
    },
    /// Edge list file; `wavelengths` overrides the file header when set.
    EdgeList {
        path: PathBuf,
        wavelengths: Option<u32>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrafficSpec {
    pub sigma: f64,
    pub load: f64,
    /// Regenerate the matrix every this many rounds; 0 keeps it fixed.
    pub change_interval: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControllerSpec {
    Asb(AsbConfig),
    Hlda(HldaConfig),
}

impl ControllerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ControllerSpec::Asb(_) => "asb",
            ControllerSpec::Hlda(_) => "hlda",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub topology: TopologySpec,
    pub resources: ResourceBudget,
    pub traffic: TrafficSpec,
    pub controller: ControllerSpec,
    pub rounds: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub output: PathBuf,
    /// Write a topology snapshot every this many rounds; 0 disables.
    pub snapshot_interval: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            topology: TopologySpec::Regular {
                nodes: 100,
                degree: 4,
                wavelengths: 16,
            },
            resources: ResourceBudget::default(),
            traffic: TrafficSpec {
                sigma: 1.0,
                load: 0.3,
                change_interval: 0,
            },
            controller: ControllerSpec::Asb(AsbConfig::default()),
            rounds: 400,
            repetitions: 10,
            seed: 1,
            output: PathBuf::from("out"),
            snapshot_interval: 0,
        }
    }
}

fn invalid(field: &str, reason: impl Into<String>) -> HarnessError {
    HarnessError::Config {
        field: field.to_string(),
        reason: reason.into(),
    }
}

fn parse<T: std::str::FromStr>(field: &str, value: &str) -> Result<T, HarnessError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e: T::Err| invalid(field, format!("cannot parse {value:?}: {e}")))
}

fn parse_bool(field: &str, value: &str) -> Result<bool, HarnessError> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(invalid(
            field,
            format!("expected true or false, got {value:?}"),
        )),
    }
}

impl ExperimentConfig {
    /// Parses `key=value` lines on top of the defaults. Blank lines and
    /// lines starting with `#` are skipped.
    pub fn parse_str(text: &str) -> Result<Self, HarnessError> {
        let mut config = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| HarnessError::Config {
                field: format!("line {}", lineno + 1),
                reason: format!("expected key=value, got {line:?}"),
            })?;
            config.set(key.trim(), value.trim())?;
        }
        config.validate()?;
        Ok(config)
    }

    /// Applies `key=value` overrides in order, then validates.
    pub fn with_overrides<'a>(
        mut self,
        overrides: impl IntoIterator<Item = &'a str>,
    ) -> Result<Self, HarnessError> {
        for item in overrides {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| invalid(item, "override must look like key=value"))?;
            self.set(key.trim(), value.trim())?;
        }
        self.validate()?;
        Ok(self)
    }

    fn asb_mut(&mut self, field: &str) -> Result<&mut AsbConfig, HarnessError> {
        match &mut self.controller {
            ControllerSpec::Asb(asb) => Ok(asb),
            ControllerSpec::Hlda(_) => Err(invalid(field, "controller is not asb")),
        }
    }

    fn hlda_mut(&mut self, field: &str) -> Result<&mut HldaConfig, HarnessError> {
        match &mut self.controller {
            ControllerSpec::Hlda(h) => Ok(h),
            ControllerSpec::Asb(_) => Err(invalid(field, "controller is not hlda")),
        }
    }

    /// Sets one field by its dotted key. Controller-specific keys must match
    /// the current `controller`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), HarnessError> {
        match key {
            "topology.nodes" | "topology.degree" | "topology.wavelengths" => {
                let v: u64 = parse(key, value)?;
                match &mut self.topology {
                    TopologySpec::Regular {
                        nodes,
                        degree,
                        wavelengths,
                    } => match key {
                        "topology.nodes" => *nodes = v as usize,
                        "topology.degree" => *degree = v as usize,
                        _ => {
                            *wavelengths =
                                u32::try_from(v).map_err(|_| invalid(key, "too large"))?
                        }
                    },
                    TopologySpec::EdgeList { wavelengths, .. } if key == "topology.wavelengths" => {
                        *wavelengths =
                            Some(u32::try_from(v).map_err(|_| invalid(key, "too large"))?);
                    }
                    TopologySpec::EdgeList { .. } => {
                        return Err(invalid(key, "not applicable to an imported edge list"));
                    }
                }
            }
            "topology.edge_list" => {
                let wavelengths = match self.topology {
                    TopologySpec::EdgeList { wavelengths, .. } => wavelengths,
                    TopologySpec::Regular { .. } => None,
                };
                self.topology = TopologySpec::EdgeList {
                    path: PathBuf::from(value),
                    wavelengths,
                };
            }
            "resources.tx" => self.resources.tx_per_node = parse(key, value)?,
            "resources.rx" => self.resources.rx_per_node = parse(key, value)?,
            "traffic.sigma" => self.traffic.sigma = parse(key, value)?,
            "traffic.load" => self.traffic.load = parse(key, value)?,
            "traffic.change_interval" => self.traffic.change_interval = parse(key, value)?,
            "controller" => {
                self.controller = match value {
                    "asb" => ControllerSpec::Asb(match self.controller {
                        ControllerSpec::Asb(a) => a,
                        ControllerSpec::Hlda(_) => AsbConfig::default(),
                    }),
                    "hlda" => ControllerSpec::Hlda(match self.controller {
                        ControllerSpec::Hlda(h) => h,
                        ControllerSpec::Asb(_) => HldaConfig::default(),
                    }),
                    _ => return Err(invalid(key, format!("expected asb or hlda, got {value:?}"))),
                }
            }
            "asb.t_max" => self.asb_mut(key)?.t_max = parse(key, value)?,
            "asb.mu" => self.asb_mut(key)?.mu_mode = MuMode::Fixed(parse(key, value)?),
            "asb.mu_mode" => {
                let asb = self.asb_mut(key)?;
                asb.mu_mode = match value {
                    "fixed" => match asb.mu_mode {
                        MuMode::Fixed(mu) => MuMode::Fixed(mu),
                        _ => MuMode::Fixed(0.0),
                    },
                    "optimal" => MuMode::Optimal,
                    "resource_aware" => MuMode::ResourceAware,
                    _ => {
                        return Err(invalid(
                            key,
                            format!("expected fixed, optimal or resource_aware, got {value:?}"),
                        ))
                    }
                }
            }
            "asb.update" => {
                self.asb_mut(key)?.update_mode = match value {
                    "replacement" => UpdateMode::Replacement,
                    "relaxation" => UpdateMode::Relaxation,
                    _ => {
                        return Err(invalid(
                            key,
                            format!("expected replacement or relaxation, got {value:?}"),
                        ))
                    }
                }
            }
            "asb.pass_order" => {
                self.asb_mut(key)?.pass_order = match value {
                    "single" => PassOrder::Single,
                    "two_phase" => PassOrder::TwoPhase,
                    _ => {
                        return Err(invalid(
                            key,
                            format!("expected single or two_phase, got {value:?}"),
                        ))
                    }
                }
            }
            "asb.initial_memory" => {
                self.asb_mut(key)?.initial_memory = match value {
                    "random" => InitialMemory::Random,
                    "empty" => InitialMemory::Empty,
                    _ => {
                        return Err(invalid(
                            key,
                            format!("expected random or empty, got {value:?}"),
                        ))
                    }
                }
            }
            "asb.switch_gain" => self.asb_mut(key)?.switch_gain = parse(key, value)?,
            "asb.memory.capacity" => self.asb_mut(key)?.memory.capacity = parse(key, value)?,
            "asb.memory.alpha" => self.asb_mut(key)?.memory.alpha = parse(key, value)?,
            "asb.memory.beta" => self.asb_mut(key)?.memory.beta = parse(key, value)?,
            "asb.memory.theta" => self.asb_mut(key)?.memory.theta = parse(key, value)?,
            "asb.memory.zero_diagonal" => {
                self.asb_mut(key)?.memory.zero_diagonal = parse_bool(key, value)?
            }
            "asb.memory.normalization" => {
                self.asb_mut(key)?.memory.normalization = match value {
                    "per_attractor" => WeightNormalization::PerAttractor,
                    "raw" => WeightNormalization::Raw,
                    _ => {
                        return Err(invalid(
                            key,
                            format!("expected per_attractor or raw, got {value:?}"),
                        ))
                    }
                }
            }
            "hlda.max_lightpaths" => {
                self.hlda_mut(key)?.max_lightpaths = match value {
                    "none" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "hlda.fill_leftover" => self.hlda_mut(key)?.fill_leftover = parse_bool(key, value)?,
            "run.rounds" => self.rounds = parse(key, value)?,
            "run.repetitions" => self.repetitions = parse(key, value)?,
            "run.seed" => self.seed = parse(key, value)?,
            "run.output" => self.output = PathBuf::from(value),
            "run.snapshot_interval" => self.snapshot_interval = parse(key, value)?,
            _ => return Err(invalid(key, "unknown key")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.rounds == 0 {
            return Err(invalid("run.rounds", "must be at least 1"));
        }
        if self.repetitions == 0 {
            return Err(invalid("run.repetitions", "must be at least 1"));
        }
        if !self.traffic.sigma.is_finite() || self.traffic.sigma <= 0.0 {
            return Err(invalid("traffic.sigma", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.traffic.load) {
            return Err(invalid("traffic.load", "must lie in [0, 1]"));
        }
        if let TopologySpec::Regular {
            nodes,
            degree,
            wavelengths,
        } = self.topology
        {
            if nodes < 2 {
                return Err(invalid("topology.nodes", "need at least 2 nodes"));
            }
            if degree < 2 || degree >= nodes || !(nodes * degree).is_multiple_of(2) {
                return Err(invalid(
                    "topology.degree",
                    format!("no {degree}-regular graph on {nodes} nodes"),
                ));
            }
            if wavelengths == 0 {
                return Err(invalid("topology.wavelengths", "must be positive"));
            }
        }
        if self.resources.tx_per_node == 0 {
            return Err(invalid("resources.tx", "must be positive"));
        }
        if self.resources.rx_per_node == 0 {
            return Err(invalid("resources.rx", "must be positive"));
        }
        if let ControllerSpec::Asb(asb) = &self.controller {
            asb.validate().map_err(|e| invalid("asb", e.to_string()))?;
        }
        Ok(())
    }

    /// Key=value rendering that [`ExperimentConfig::parse_str`] reads back.
    pub fn to_text(&self) -> String {
        let mut lines = Vec::new();
        match &self.topology {
            TopologySpec::Regular {
                nodes,
                degree,
                wavelengths,
            } => {
                lines.push(format!("topology.nodes={nodes}"));
                lines.push(format!("topology.degree={degree}"));
                lines.push(format!("topology.wavelengths={wavelengths}"));
            }
            TopologySpec::EdgeList { path, wavelengths } => {
                lines.push(format!("topology.edge_list={}", path.display()));
                if let Some(w) = wavelengths {
                    lines.push(format!("topology.wavelengths={w}"));
                }
            }
        }
        lines.push(format!("resources.tx={}", self.resources.tx_per_node));
        lines.push(format!("resources.rx={}", self.resources.rx_per_node));
        lines.push(format!("traffic.sigma={}", self.traffic.sigma));
        lines.push(format!("traffic.load={}", self.traffic.load));
        lines.push(format!(
            "traffic.change_interval={}",
            self.traffic.change_interval
        ));
        lines.push(format!("controller={}", self.controller.name()));
        match &self.controller {
            ControllerSpec::Asb(a) => {
                lines.push(format!("asb.t_max={}", a.t_max));
                match a.mu_mode {
                    MuMode::Fixed(mu) => lines.push(format!("asb.mu={mu}")),
                    MuMode::Optimal => lines.push("asb.mu_mode=optimal".into()),
                    MuMode::ResourceAware => lines.push("asb.mu_mode=resource_aware".into()),
                }
                let update = match a.update_mode {
                    UpdateMode::Replacement => "replacement",
                    UpdateMode::Relaxation => "relaxation",
                };
                lines.push(format!("asb.update={update}"));
                let order = match a.pass_order {
                    PassOrder::Single => "single",
                    PassOrder::TwoPhase => "two_phase",
                };
                lines.push(format!("asb.pass_order={order}"));
                let init = match a.initial_memory {
                    InitialMemory::Random => "random",
                    InitialMemory::Empty => "empty",
                };
                lines.push(format!("asb.initial_memory={init}"));
                lines.push(format!("asb.switch_gain={}", a.switch_gain));
                lines.push(format!("asb.memory.capacity={}", a.memory.capacity));
                lines.push(format!("asb.memory.alpha={}", a.memory.alpha));
                lines.push(format!("asb.memory.beta={}", a.memory.beta));
                lines.push(format!("asb.memory.theta={}", a.memory.theta));
                let norm = match a.memory.normalization {
                    WeightNormalization::PerAttractor => "per_attractor",
                    WeightNormalization::Raw => "raw",
                };
                lines.push(format!("asb.memory.normalization={norm}"));
                lines.push(format!(
                    "asb.memory.zero_diagonal={}",
                    a.memory.zero_diagonal
                ));
            }
            ControllerSpec::Hlda(h) => {
                match h.max_lightpaths {
                    Some(cap) => lines.push(format!("hlda.max_lightpaths={cap}")),
                    None => lines.push("hlda.max_lightpaths=none".into()),
                }
                lines.push(format!("hlda.fill_leftover={}", h.fill_leftover));
            }
        }
        lines.push(format!("run.rounds={}", self.rounds));
        lines.push(format!("run.repetitions={}", self.repetitions));
        lines.push(format!("run.seed={}", self.seed));
        lines.push(format!("run.output={}", self.output.display()));
        lines.push(format!("run.snapshot_interval={}", self.snapshot_interval));
        let mut text = lines.join("\n");
        text.push('\n');
        text
    }
}
