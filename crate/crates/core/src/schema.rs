//! JSON formats for observables, channels, circuits and states.
//!
//! ```json
//! {"n": 2,
//!  "layers": [{"gates": [{"type": "rot", "generator": "XX", "support": [0, 1], "angle": 0.24}],
//!              "noise": {"kind": "amplitude_damping", "param": 0.1}}],
//!  "final_layer": [{"type": "clifford", "name": "H", "support": [1]}]}
//! ```
//!
//! Rotation angles may be `"uniform"` and Clifford names may be `"uniform"`
//! to mark ensemble placeholders. A layer may give `"sublayers"` (a list of
//! gate lists) instead of `"gates"`, and `"noise"` may be a single channel or
//! one channel per qubit.

use serde::{Deserialize, Serialize};

use crate::channels::{ChannelKind, NormalFormChannel, SingleQubitPtm};
use crate::circuit::{Angle, Circuit, CliffordGate, Gate, Layer, PauliRotation};
use crate::error::{Error, Result};
use crate::pauli::{PauliString, PauliSum, ProductState};

/// One `{"pauli": "XIZ", "coeff": 0.5}` entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermSpec {
    pub pauli: String,
    pub coeff: f64,
}

pub fn pauli_sum_to_spec(o: &PauliSum) -> Vec<TermSpec> {
    o.sorted_terms()
        .into_iter()
        .map(|(p, c)| TermSpec {
            pauli: p.to_label(),
            coeff: c,
        })
        .collect()
}

pub fn pauli_sum_from_spec(terms: &[TermSpec]) -> Result<PauliSum> {
    let first = terms.first().ok_or(Error::EmptyObservable)?;
    let n = first.pauli.len();
    let mut out = PauliSum::new(n);
    for t in terms {
        out.add_term(t.pauli.parse::<PauliString>()?, t.coeff)?;
    }
    Ok(out)
}

/// Channel description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param: Option<f64>,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    pub d: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<[f64; 3]>,
    /// PTM of the unitary applied before the normal-form part.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pre: Option<[[f64; 4]; 4]>,
    /// PTM of the unitary applied after the normal-form part.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post: Option<[[f64; 4]; 4]>,
}

impl ChannelSpec {
    pub fn named(kind: &str, param: f64) -> Self {
        Self {
            kind: kind.to_string(),
            param: Some(param),
            d: None,
            t: None,
            pre: None,
            post: None,
        }
    }

    pub fn build(&self) -> Result<NormalFormChannel> {
        let param = || {
            self.param
                .ok_or_else(|| Error::InvalidChannel(format!("{} needs \"param\"", self.kind)))
        };
        match self.kind.as_str() {
            "amplitude_damping" => NormalFormChannel::amplitude_damping(param()?),
            "dephasing" => NormalFormChannel::dephasing(param()?),
            "depolarizing" => NormalFormChannel::depolarizing(param()?),
            "custom" => {
                let d = self
                    .d
                    .ok_or_else(|| Error::InvalidChannel("custom channel needs \"D\"".into()))?;
                let ch = NormalFormChannel::new(d, self.t.unwrap_or([0.0; 3]))?;
                if self.pre.is_none() && self.post.is_none() {
                    return Ok(ch);
                }
                let pre = self.pre.map(|m| SingleQubitPtm::new(m, true)).transpose()?;
                let post = self.post.map(|m| SingleQubitPtm::new(m, true)).transpose()?;
                ch.with_rotations(pre, post)
            }
            other => Err(Error::InvalidChannel(format!("unknown channel kind {other:?}"))),
        }
    }

    pub fn from_channel(ch: &NormalFormChannel) -> Self {
        match ch.kind() {
            ChannelKind::AmplitudeDamping(g) => Self::named("amplitude_damping", g),
            ChannelKind::Dephasing(p) => Self::named("dephasing", p),
            ChannelKind::Depolarizing(p) => Self::named("depolarizing", p),
            ChannelKind::Custom => Self {
                kind: "custom".into(),
                param: None,
                d: Some(ch.d()),
                t: Some(ch.t()),
                pre: ch.pre_rotation().map(|m| *m.matrix()),
                post: ch.post_rotation().map(|m| *m.matrix()),
            },
        }
    }
}

/// Rotation angle: a number or `"uniform"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AngleSpec {
    Value(f64),
    Law(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GateSpec {
    Rot {
        generator: String,
        support: Vec<usize>,
        angle: AngleSpec,
    },
    Clifford {
        name: String,
        support: Vec<usize>,
    },
}

impl GateSpec {
    pub fn build(&self, n: usize) -> Result<Gate> {
        match self {
            GateSpec::Rot {
                generator,
                support,
                angle,
            } => {
                let angle = match angle {
                    AngleSpec::Value(v) => Angle::Fixed(*v),
                    AngleSpec::Law(s) if s == "uniform" => Angle::Uniform,
                    AngleSpec::Law(s) => {
                        return Err(Error::InvalidCircuit(format!("unknown angle law {s:?}")))
                    }
                };
                Ok(Gate::Rotation(PauliRotation::on(n, support, generator, angle)?))
            }
            GateSpec::Clifford { name, support } => {
                if name == "uniform" {
                    return match support.as_slice() {
                        [q] => Ok(Gate::RandomClifford(*q)),
                        _ => Err(Error::InvalidCircuit(
                            "uniform Clifford needs exactly one qubit".into(),
                        )),
                    };
                }
                Ok(Gate::Clifford(CliffordGate::named(name, support)?))
            }
        }
    }

    pub fn from_gate(g: &Gate) -> Self {
        match g {
            Gate::Rotation(r) => {
                let support = r.support();
                let generator = support.iter().map(|&q| r.generator().get(q).to_char()).collect();
                let angle = match r.angle() {
                    Angle::Fixed(t) => AngleSpec::Value(t),
                    Angle::Uniform => AngleSpec::Law("uniform".into()),
                };
                GateSpec::Rot {
                    generator,
                    support,
                    angle,
                }
            }
            Gate::Clifford(c) => GateSpec::Clifford {
                name: c.name().to_string(),
                support: c.support().to_vec(),
            },
            Gate::RandomClifford(q) => GateSpec::Clifford {
                name: "uniform".into(),
                support: vec![*q],
            },
        }
    }
}

/// A single channel for every qubit, or one per qubit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NoiseSpec {
    Uniform(ChannelSpec),
    PerQubit(Vec<ChannelSpec>),
}

impl NoiseSpec {
    pub fn build(&self, n: usize) -> Result<Vec<NormalFormChannel>> {
        match self {
            NoiseSpec::Uniform(c) => Ok(vec![c.build()?; n]),
            NoiseSpec::PerQubit(v) => {
                if v.len() != n {
                    return Err(Error::QubitMismatch {
                        expected: n,
                        actual: v.len(),
                    });
                }
                v.iter().map(ChannelSpec::build).collect()
            }
        }
    }

    fn from_channels(chs: &[NormalFormChannel]) -> Self {
        let specs: Vec<ChannelSpec> = chs.iter().map(ChannelSpec::from_channel).collect();
        if specs.windows(2).all(|w| w[0] == w[1]) && !specs.is_empty() {
            NoiseSpec::Uniform(specs[0].clone())
        } else {
            NoiseSpec::PerQubit(specs)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gates: Option<Vec<GateSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sublayers: Option<Vec<Vec<GateSpec>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub n: usize,
    #[serde(default)]
    pub layers: Vec<LayerSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_layer: Option<Vec<GateSpec>>,
}

impl CircuitSpec {
    pub fn build(&self) -> Result<Circuit> {
        let n = self.n;
        let gates = |v: &[GateSpec]| v.iter().map(|g| g.build(n)).collect::<Result<Vec<_>>>();
        let mut layers = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            let mut subs = Vec::new();
            if let Some(g) = &l.gates {
                subs.push(gates(g)?);
            }
            for s in l.sublayers.iter().flatten() {
                subs.push(gates(s)?);
            }
            let noise = l.noise.as_ref().map(|s| s.build(n)).transpose()?;
            layers.push(Layer::new(subs, noise)?);
        }
        let final_layer = self.final_layer.as_deref().map(gates).transpose()?;
        Circuit::new(n, layers, final_layer)
    }

    pub fn from_circuit(c: &Circuit) -> Self {
        let specs = |v: &[Gate]| v.iter().map(GateSpec::from_gate).collect::<Vec<_>>();
        let layers = c
            .layers()
            .iter()
            .map(|l| {
                let (gates, sublayers) = match l.sublayers() {
                    [] => (None, None),
                    [one] => (Some(specs(one)), None),
                    many => (None, Some(many.iter().map(|s| specs(s)).collect())),
                };
                LayerSpec {
                    gates,
                    sublayers,
                    noise: l.noise().map(NoiseSpec::from_channels),
                }
            })
            .collect();
        CircuitSpec {
            n: c.num_qubits(),
            layers,
            final_layer: c.final_layer().map(specs),
        }
    }
}

pub fn circuit_from_json(s: &str) -> Result<Circuit> {
    serde_json::from_str::<CircuitSpec>(s)?.build()
}

pub fn circuit_to_json(c: &Circuit) -> Result<String> {
    Ok(serde_json::to_string(&CircuitSpec::from_circuit(c))?)
}

/// `"zeros"` or an explicit list of Bloch vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    Named(String),
    Bloch { bloch: Vec<[f64; 3]> },
}

impl StateSpec {
    pub fn build(&self, n: usize) -> Result<ProductState> {
        let st = match self {
            StateSpec::Named(s) if s == "zeros" => ProductState::zeros(n),
            StateSpec::Named(s) => {
                return Err(Error::OutOfRange(format!("unknown state {s:?}")));
            }
            StateSpec::Bloch { bloch } => ProductState::new(bloch.clone())?,
        };
        if st.num_qubits() != n {
            return Err(Error::QubitMismatch {
                expected: n,
                actual: st.num_qubits(),
            });
        }
        Ok(st)
    }
}
