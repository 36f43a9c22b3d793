//! JSON experiment configuration. Rationals are written as "p/q" strings.

use std::fmt;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{de, Deserialize, Deserializer};
use sha2::{Digest, Sha256};

use xistep_core::dual::{Evolution, ModelParams};
use xistep_core::dyadic::DyadicSet;
use xistep_core::moments::ScalarParams;
use xistep_core::mutation::{BaseMeasure, GeneralKernel, MutationKind, MutationSpec};
use xistep_core::partition::Colony;
use xistep_core::rational::{format_rational, parse_rational, Rational};
use xistep_core::simplex::{SimplexAtom, XiMeasure, DEFAULT_B_MAX};

/// A rational parsed from its string form; failures carry the field path.
#[derive(Debug, Clone, PartialEq)]
pub struct Rat(pub Rational);

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct Visitor;
        impl de::Visitor<'_> for Visitor {
            type Value = Rat;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a rational as a \"p/q\" string or an integer")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Rat, E> {
                parse_rational(v).map(Rat).map_err(E::custom)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Rat, E> {
                Ok(Rat(Rational::from_integer(v.into())))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Rat, E> {
                Ok(Rat(Rational::from_integer(v.into())))
            }
        }
        deserializer.deserialize_any(Visitor)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub coords: Vec<Rat>,
    pub weight: Rat,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XiConfig {
    #[serde(default)]
    pub kingman: Option<Rat>,
    #[serde(default)]
    pub atoms: Vec<AtomConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    #[serde(default)]
    pub grid_level: u32,
    pub densities: Vec<Rat>,
    #[serde(default)]
    pub atoms: Vec<(Rat, Rat)>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MutationConfig {
    /// Jumps to a draw from `nu0`.
    #[default]
    Uniform,
    Flip,
    ReflectedStep { half_width: Rat },
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum EvolutionConfig {
    #[default]
    Semigroup,
    MutationEvents,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    /// Colony labels (1 or 2) of the initial blocks.
    #[serde(default)]
    pub eta: Option<Vec<u8>>,
    /// Highest moment order for `stationary` and `hausdorff`.
    #[serde(default)]
    pub order: Option<usize>,
    /// Time horizon for `qt` and `simulate`; `simulate` runs to absorption without it.
    #[serde(default)]
    pub t: Option<Rat>,
    #[serde(default)]
    pub max_events: Option<u64>,
    #[serde(default)]
    pub evolution: EvolutionConfig,
    /// `stationary` also runs the Monte-Carlo cross-check.
    #[serde(default)]
    pub monte_carlo: bool,
}

fn default_replicas() -> u64 {
    10_000
}

fn default_b_max() -> usize {
    DEFAULT_B_MAX
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub xi: XiConfig,
    pub theta: Rat,
    pub u1: Rat,
    pub u2: Rat,
    #[serde(default)]
    pub mutation: MutationConfig,
    /// Mutation target law; uniform on [0,1] when absent.
    #[serde(default)]
    pub nu0: Option<MeasureConfig>,
    /// `E*` as a list of `[lo, hi)` intervals with dyadic endpoints.
    pub e_star: Vec<(Rat, Rat)>,
    pub alpha: Rat,
    #[serde(default)]
    pub mu1: Option<MeasureConfig>,
    #[serde(default)]
    pub mu2: Option<MeasureConfig>,
    #[serde(default = "default_replicas")]
    pub replicas: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_b_max")]
    pub b_max: usize,
    #[serde(default)]
    pub options: Options,
}

/// A validated configuration with every derived object built.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub raw: ExperimentConfig,
    pub hash: String,
    pub model: ModelParams,
    pub mu: (BaseMeasure, BaseMeasure),
    pub e_star: DyadicSet,
    pub alpha: Rational,
}

impl Experiment {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_bytes(&bytes).with_context(|| format!("config {}", path.display()))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let hash = hex::encode(Sha256::digest(bytes));
        let de = &mut serde_json::Deserializer::from_slice(bytes);
        let raw: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            anyhow::anyhow!("field `{path}`: {}", e.into_inner())
        })?;
        Self::build(raw, hash)
    }

    fn build(raw: ExperimentConfig, hash: String) -> Result<Self> {
        let atoms = raw
            .xi
            .atoms
            .iter()
            .enumerate()
            .map(|(i, a)| {
                SimplexAtom::new(a.coords.iter().map(|c| c.0.clone()).collect(), a.weight.0.clone())
                    .with_context(|| format!("field `xi.atoms[{i}]`"))
            })
            .collect::<Result<Vec<_>>>()?;
        let kingman = raw.xi.kingman.clone().map(|r| r.0).unwrap_or_default();
        let xi = XiMeasure::new(kingman, atoms).context("field `xi`")?;

        let nu0 = match &raw.nu0 {
            Some(m) => measure(m).context("field `nu0`")?,
            None => BaseMeasure::uniform(),
        };
        let kind = match &raw.mutation {
            MutationConfig::Uniform => MutationKind::Uniform(nu0.clone()),
            MutationConfig::Flip => MutationKind::General(GeneralKernel::Flip),
            MutationConfig::ReflectedStep { half_width } => {
                MutationKind::General(GeneralKernel::ReflectedStep {
                    half_width: half_width.0.clone(),
                })
            }
        };
        let spec = MutationSpec::new(raw.theta.0.clone(), kind).context("field `theta`/`mutation`")?;
        let model = ModelParams::new(xi, spec, raw.u1.0.clone(), raw.u2.0.clone(), raw.b_max)
            .context("model parameters")?;

        let mut e_star = DyadicSet::empty();
        for (i, (lo, hi)) in raw.e_star.iter().enumerate() {
            let piece = DyadicSet::interval(&lo.0, &hi.0).with_context(|| format!("field `e_star[{i}]`"))?;
            e_star = e_star.union(&piece);
        }
        let alpha = nu0.mass(&e_star);
        if alpha != raw.alpha.0 {
            bail!(
                "field `alpha`: declared {} but nu0(E*) = {}",
                format_rational(&raw.alpha.0),
                format_rational(&alpha)
            );
        }
        let mu1 = match &raw.mu1 {
            Some(m) => measure(m).context("field `mu1`")?,
            None => nu0.clone(),
        };
        let mu2 = match &raw.mu2 {
            Some(m) => measure(m).context("field `mu2`")?,
            None => nu0.clone(),
        };
        if let Some(eta) = &raw.options.eta {
            if let Some(bad) = eta.iter().find(|&&c| Colony::from_number(c).is_none()) {
                bail!("field `options.eta`: colony label {bad} is not 1 or 2");
            }
        }
        Ok(Self {
            raw,
            hash,
            model,
            mu: (mu1, mu2),
            e_star,
            alpha,
        })
    }

    pub fn eta(&self) -> Result<Vec<Colony>> {
        let labels = self
            .raw
            .options
            .eta
            .as_ref()
            .context("field `options.eta` is required by this command")?;
        if labels.is_empty() {
            bail!("field `options.eta`: at least one block is needed");
        }
        Ok(labels.iter().filter_map(|&c| Colony::from_number(c)).collect())
    }

    pub fn order(&self) -> usize {
        self.raw.options.order.unwrap_or(4)
    }

    pub fn evolution(&self) -> Evolution {
        match self.raw.options.evolution {
            EvolutionConfig::Semigroup => Evolution::Semigroup,
            EvolutionConfig::MutationEvents => Evolution::MutationEvents,
        }
    }

    pub fn scalar_params(&self) -> Result<ScalarParams> {
        Ok(self.model.scalar_params(self.alpha.clone())?)
    }
}

fn measure(m: &MeasureConfig) -> Result<BaseMeasure> {
    Ok(BaseMeasure::new(
        m.grid_level,
        m.densities.iter().map(|d| d.0.clone()).collect(),
        m.atoms.iter().map(|(x, w)| (x.0.clone(), w.0.clone())).collect(),
    )?)
}
