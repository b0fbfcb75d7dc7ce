//! Run configuration read from `--config`.

use pauliprop::schema::{pauli_sum_from_spec, pauli_sum_to_spec, ChannelSpec, CircuitSpec, NoiseSpec, StateSpec, TermSpec};
use pauliprop::{
    build_hva, build_trotter_tfim, AngleLaw, Circuit, CliffordLaw, EnsembleSpec, Error, Lattice, NoiseModel,
    NoisePlacement, Pauli, PauliString, PauliSum, ProductState, TruncationConfig,
};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub circuit: Option<CircuitConfig>,
    /// Defaults to Z on the center qubit of the builder lattice.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable: Option<Vec<TermSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<StateSpec>,
    #[serde(default)]
    pub truncation: TruncationConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimator: Option<EstimatorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelSpec>,
    /// Scrambler slack for `channel-info`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// Path-weight cutoffs for a k-sweep in `propagate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_grid: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CircuitConfig {
    Inline(CircuitSpec),
    Hva(HvaConfig),
    TrotterTfim(TrotterConfig),
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LatticeConfig {
    Chain {
        n: usize,
        #[serde(default)]
        periodic: bool,
    },
    Square {
        rows: usize,
        cols: usize,
        #[serde(default)]
        periodic: bool,
    },
}

impl LatticeConfig {
    pub fn lattice(&self) -> Lattice {
        match *self {
            LatticeConfig::Chain { n, periodic } => Lattice::Chain { n, periodic },
            LatticeConfig::Square { rows, cols, periodic } => Lattice::Square { rows, cols, periodic },
        }
    }
}

fn uniform() -> String {
    "uniform".into()
}

fn absent() -> String {
    "absent".into()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HvaConfig {
    pub lattice: LatticeConfig,
    pub blocks: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSpec>,
    #[serde(default)]
    pub placement: NoisePlacement,
    /// `"uniform"` or a fixed angle.
    #[serde(default = "angle_uniform")]
    pub angle: pauliprop::schema::AngleSpec,
    /// `"absent"`, `"uniform"` or a single-qubit Clifford name.
    #[serde(default = "absent")]
    pub clifford: String,
}

fn angle_uniform() -> pauliprop::schema::AngleSpec {
    pauliprop::schema::AngleSpec::Law(uniform())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrotterConfig {
    pub lattice: LatticeConfig,
    #[serde(rename = "J")]
    pub j: f64,
    pub h: f64,
    pub dt: f64,
    pub steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSpec>,
    #[serde(default = "every_step")]
    pub placement: NoisePlacement,
}

fn every_step() -> NoisePlacement {
    NoisePlacement::EveryStep
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalKind {
    Variance,
    TruncMse,
    TruncFrobenius,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    pub functional: FunctionalKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Overrides the top-level state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<StateSpec>,
    pub samples: u64,
    /// Overrides the top-level seed; `--seed` overrides both.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Channel family applied uniformly, e.g. `"amplitude_damping"`.
    pub noise_kind: String,
    pub noise_grid: Vec<f64>,
    pub k_grid: Vec<usize>,
    pub functional: FunctionalKind,
    pub samples: u64,
}

fn config_error(msg: impl Into<String>) -> Error {
    Error::OutOfRange(msg.into())
}

fn noise_model(noise: &Option<NoiseSpec>, n: usize) -> pauliprop::Result<NoiseModel> {
    Ok(match noise {
        None => NoiseModel::None,
        Some(spec) => NoiseModel::PerQubit(spec.build(n)?),
    })
}

impl HvaConfig {
    pub fn build(&self, noise: NoiseModel) -> pauliprop::Result<Circuit> {
        let rotation = match &self.angle {
            pauliprop::schema::AngleSpec::Value(t) => AngleLaw::Fixed(*t),
            pauliprop::schema::AngleSpec::Law(s) if s == "uniform" => AngleLaw::Uniform,
            pauliprop::schema::AngleSpec::Law(s) => return Err(config_error(format!("unknown angle law {s:?}"))),
        };
        let clifford = match self.clifford.as_str() {
            "absent" => CliffordLaw::Absent,
            "uniform" => CliffordLaw::Uniform,
            name => CliffordLaw::Fixed(name.to_string()),
        };
        let ensemble = EnsembleSpec {
            rotation,
            clifford,
            seed: 0,
        };
        build_hva(&self.lattice.lattice(), &noise, &ensemble, self.blocks, self.placement)
    }
}

impl TrotterConfig {
    pub fn build_steps(&self, steps: usize) -> pauliprop::Result<Circuit> {
        let lat = self.lattice.lattice();
        let noise = noise_model(&self.noise, lat.num_qubits())?;
        build_trotter_tfim(&lat, self.j, self.h, self.dt, steps, &noise, self.placement)
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> pauliprop::Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn circuit_config(&self) -> pauliprop::Result<&CircuitConfig> {
        self.circuit
            .as_ref()
            .ok_or_else(|| config_error("config needs a \"circuit\""))
    }

    /// The circuit template; may contain ensemble placeholders.
    pub fn template(&self) -> pauliprop::Result<Circuit> {
        match self.circuit_config()? {
            CircuitConfig::Inline(spec) => spec.build(),
            CircuitConfig::Hva(h) => {
                let n = h.lattice.lattice().num_qubits();
                h.build(noise_model(&h.noise, n)?)
            }
            CircuitConfig::TrotterTfim(t) => t.build_steps(t.steps),
        }
    }

    fn lattice(&self) -> Option<Lattice> {
        match self.circuit.as_ref()? {
            CircuitConfig::Inline(_) => None,
            CircuitConfig::Hva(h) => Some(h.lattice.lattice()),
            CircuitConfig::TrotterTfim(t) => Some(t.lattice.lattice()),
        }
    }

    pub fn observable(&self, n: usize) -> pauliprop::Result<PauliSum> {
        match &self.observable {
            Some(terms) => pauli_sum_from_spec(terms),
            None => {
                let lat = self
                    .lattice()
                    .ok_or_else(|| config_error("inline circuits need an \"observable\""))?;
                Ok(PauliSum::single(PauliString::single(n, lat.center(), Pauli::Z), 1.0))
            }
        }
    }

    pub fn product_state(&self, n: usize) -> pauliprop::Result<ProductState> {
        match &self.state {
            Some(s) => s.build(n),
            None => Ok(ProductState::zeros(n)),
        }
    }

    /// Applies a command-line seed, falling back to the estimator's own.
    pub fn resolve_seed(&mut self, cli: Option<u64>) {
        let est = self.estimator.as_mut();
        let seed = cli.or(est.as_ref().and_then(|e| e.seed)).unwrap_or(self.seed);
        if let Some(e) = est {
            e.seed = e.seed.map(|_| seed);
        }
        self.seed = seed;
    }

    /// Fills in the default observable and state so the echoed config is complete.
    pub fn resolve(&mut self, n: usize) -> pauliprop::Result<()> {
        if self.observable.is_none() {
            self.observable = Some(pauli_sum_to_spec(&self.observable(n)?));
        }
        if self.state.is_none() {
            self.state = Some(StateSpec::Named("zeros".into()));
        }
        Ok(())
    }
}
