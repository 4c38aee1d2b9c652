//! Experiment configuration: `key=value` files with command-line overrides.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::env::{EnvMode, NUM_ROOMS};
use crate::error::{Error, Result};
use crate::oracle::GatingMode;
use crate::reinforce::{BaselineKind, TrainConfig, DEFAULT_GRAD_CLIP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentId {
    NoAttnFixed,
    NoAttnDynamic,
    Partial,
    Constrained,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 4] =
        [ExperimentId::NoAttnFixed, ExperimentId::NoAttnDynamic, ExperimentId::Partial, ExperimentId::Constrained];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentId::NoAttnFixed => "no-attn-fixed",
            ExperimentId::NoAttnDynamic => "no-attn-dynamic",
            ExperimentId::Partial => "partial",
            ExperimentId::Constrained => "constrained",
        }
    }

    pub fn gating(self) -> GatingMode {
        match self {
            ExperimentId::NoAttnFixed | ExperimentId::NoAttnDynamic => GatingMode::Unconstrained,
            ExperimentId::Partial => GatingMode::PartialDecomposition,
            ExperimentId::Constrained => GatingMode::Constrained,
        }
    }

    pub fn env_mode(self) -> EnvMode {
        match self {
            ExperimentId::NoAttnDynamic => EnvMode::Dynamic,
            _ => EnvMode::Fixed,
        }
    }

    pub fn uses_attention(self) -> bool {
        matches!(self, ExperimentId::Partial | ExperimentId::Constrained)
    }

    /// Training configuration with every default filled in.
    pub fn default_train_config(self) -> TrainConfig {
        TrainConfig {
            episodes: DEFAULT_EPISODES,
            gating: self.gating(),
            env_mode: self.env_mode(),
            attention: self.uses_attention(),
            ..TrainConfig::default()
        }
    }
}

pub const DEFAULT_EPISODES: usize = 20_000;

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentId::ALL.into_iter().find(|id| id.as_str() == s).ok_or_else(|| {
            let valid: Vec<_> = ExperimentId::ALL.iter().map(|i| i.as_str()).collect();
            Error::config(format!("unknown experiment `{s}` (expected one of {})", valid.join(", ")))
        })
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub id: ExperimentId,
    pub train: TrainConfig,
    pub out: PathBuf,
}

impl fmt::Display for ExperimentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = &self.train;
        let clip = t.grad_clip.map_or_else(|| "none".to_string(), |c| c.to_string());
        let baseline = match t.baseline {
            BaselineKind::EpisodeReturn => "episode",
            BaselineKind::StepReward => "step",
        };
        write!(
            f,
            "experiment={} episodes={} seed={} lr={:e} batch={} timeout={} target_room={} grad_clip={} baseline={} out={}",
            self.id,
            t.episodes,
            t.seed,
            t.lr,
            t.batch_size,
            t.timeout,
            t.target_room,
            clip,
            baseline,
            self.out.display()
        )
    }
}

pub const VALID_KEYS: [&str; 10] =
    ["experiment", "episodes", "seed", "lr", "batch", "timeout", "target_room", "grad_clip", "baseline", "out"];

/// Raw settings, before defaults are applied. Used both for file contents
/// and for command-line flags.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub experiment: Option<ExperimentId>,
    pub episodes: Option<usize>,
    pub seed: Option<u64>,
    pub lr: Option<f64>,
    pub batch: Option<usize>,
    pub timeout: Option<usize>,
    pub target_room: Option<usize>,
    /// `Some(None)` disables clipping.
    pub grad_clip: Option<Option<f64>>,
    pub baseline: Option<BaselineKind>,
    pub out: Option<PathBuf>,
}

fn parse_value<T: FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
    value.parse().map_err(|_| Error::Parse { line: line as u64, msg: format!("invalid value `{value}` for `{key}`") })
}

impl Overrides {
    /// Parses `key=value` lines. Blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut o = Overrides::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
                line: line as u64,
                msg: format!("expected key=value, got `{content}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            o.set(key, value, line)?;
        }
        Ok(o)
    }

    fn set(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        match key {
            "experiment" => {
                self.experiment =
                    Some(value.parse().map_err(|e: Error| Error::Parse { line: line as u64, msg: e.to_string() })?)
            }
            "episodes" => self.episodes = Some(parse_value(key, value, line)?),
            "seed" => self.seed = Some(parse_value(key, value, line)?),
            "lr" => self.lr = Some(parse_value(key, value, line)?),
            "batch" => self.batch = Some(parse_value(key, value, line)?),
            "timeout" => self.timeout = Some(parse_value(key, value, line)?),
            "target_room" => self.target_room = Some(parse_value(key, value, line)?),
            "grad_clip" => {
                self.grad_clip = Some(match value {
                    "none" | "off" => None,
                    v => Some(parse_value(key, v, line)?),
                })
            }
            "baseline" => {
                self.baseline = Some(match value {
                    "episode" => BaselineKind::EpisodeReturn,
                    "step" => BaselineKind::StepReward,
                    other => {
                        return Err(Error::Parse {
                            line: line as u64,
                            msg: format!("invalid value `{other}` for `baseline` (expected episode or step)"),
                        })
                    }
                })
            }
            "out" => self.out = Some(PathBuf::from(value)),
            other => {
                return Err(Error::Parse {
                    line: line as u64,
                    msg: format!("unknown key `{other}` (valid keys: {})", VALID_KEYS.join(", ")),
                })
            }
        }
        Ok(())
    }

    /// Fields set in `top` win over fields set in `self`.
    pub fn layered(self, top: Overrides) -> Overrides {
        Overrides {
            experiment: top.experiment.or(self.experiment),
            episodes: top.episodes.or(self.episodes),
            seed: top.seed.or(self.seed),
            lr: top.lr.or(self.lr),
            batch: top.batch.or(self.batch),
            timeout: top.timeout.or(self.timeout),
            target_room: top.target_room.or(self.target_room),
            grad_clip: top.grad_clip.or(self.grad_clip),
            baseline: top.baseline.or(self.baseline),
            out: top.out.or(self.out),
        }
    }

    pub fn resolve(self) -> Result<ExperimentSpec> {
        let id = self.experiment.ok_or_else(|| Error::config("no experiment given"))?;
        let mut train = id.default_train_config();
        train.episodes = self.episodes.unwrap_or(train.episodes);
        train.seed = self.seed.unwrap_or(train.seed);
        train.lr = self.lr.unwrap_or(train.lr);
        train.batch_size = self.batch.unwrap_or(train.batch_size);
        train.timeout = self.timeout.unwrap_or(train.timeout);
        train.target_room = self.target_room.unwrap_or(train.target_room);
        train.grad_clip = self.grad_clip.unwrap_or(Some(DEFAULT_GRAD_CLIP));
        train.baseline = self.baseline.unwrap_or_default();
        if train.target_room >= NUM_ROOMS {
            return Err(Error::config(format!("target_room {} out of range 0..{NUM_ROOMS}", train.target_room)));
        }
        train.validate()?;
        let out = self.out.unwrap_or_else(|| PathBuf::from(format!("{id}.csv")));
        Ok(ExperimentSpec { id, train, out })
    }
}

/// File contents (if any) overlaid with command-line flags, then defaults.
pub fn parse_config(file: Option<&str>, flags: Overrides) -> Result<ExperimentSpec> {
    let base = match file {
        Some(text) => Overrides::parse(text)?,
        None => Overrides::default(),
    };
    base.layered(flags).resolve()
}
