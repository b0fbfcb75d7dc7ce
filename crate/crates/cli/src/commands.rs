//! Subcommand implementations. Each returns a [`Report`].

use std::time::Instant;

use pauliprop::channels::{ContractionModel, Design};
use pauliprop::montecarlo::estimate_profile;
use pauliprop::propagation::Propagator;
use pauliprop::{
    backpropagate, estimate, expectation, sample_circuit, simulate_exact, ChannelClass, Circuit, Error,
    Functional, NoiseModel, NormalFormChannel, PauliSum, Result,
};
use serde_json::{json, Map, Value};

use crate::config::{CircuitConfig, FunctionalKind, RunConfig};

/// Rows of one result table. JSON output turns each row into an object.
#[derive(Debug, Default)]
pub struct Report {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
    /// A series is written as a JSON array even with one row.
    pub series: bool,
}

impl Report {
    fn series(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
            series: true,
        }
    }

    fn single(fields: Vec<(&'static str, Value)>) -> Self {
        let (columns, row): (Vec<_>, Vec<_>) = fields.into_iter().unzip();
        Self {
            columns,
            rows: vec![row],
            series: false,
        }
    }

    pub fn records(&self) -> Vec<Value> {
        self.rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(c, v)| (c.to_string(), v.clone()))
                    .collect();
                Value::Object(obj)
            })
            .collect()
    }
}

fn config_error(msg: impl Into<String>) -> Error {
    Error::OutOfRange(msg.into())
}

fn concrete(template: &Circuit, seed: u64) -> Circuit {
    if template.is_concrete() {
        template.clone()
    } else {
        sample_circuit(template, seed)
    }
}

fn class_name(c: ChannelClass) -> &'static str {
    match c {
        ChannelClass::Unitary => "unitary",
        ChannelClass::DepolarizingLike => "depolarizing_like",
        ChannelClass::DephasingLike => "dephasing_like",
        ChannelClass::NonUnital => "non_unital",
    }
}

pub fn channel_info(cfg: &RunConfig) -> Result<Report> {
    let spec = cfg
        .channel
        .as_ref()
        .ok_or_else(|| config_error("channel-info needs a \"channel\""))?;
    let ch = spec.build()?;
    let worst = ch.chi_sq_worstcase();
    let two = ch.chi_sq_mean(Design::TwoDesign)?;
    let mut fields = vec![
        ("D", json!(ch.d())),
        ("t", json!(ch.t())),
        ("class", json!(class_name(ch.classify()))),
        ("upsilon", json!(pauliprop::channels::upsilon(ch.d(), ch.t()))),
        ("chi_sq_worstcase", json!(worst)),
        ("chi_sq_two_design", json!(two)),
        ("p_eff_worstcase", json!(ch.effective_depolarizing_rate(ContractionModel::WorstCase)?)),
        (
            "p_eff_two_design",
            json!(ch.effective_depolarizing_rate(ContractionModel::Mean(Design::TwoDesign))?),
        ),
    ];
    if let Some(eta) = cfg.eta {
        let design = Design::Scrambler(eta);
        fields.push(("chi_sq_scrambler", json!(ch.chi_sq_mean(design)?)));
        fields.push((
            "p_eff_scrambler",
            json!(ch.effective_depolarizing_rate(ContractionModel::Mean(design))?),
        ));
    }
    Ok(Report::single(fields))
}

pub fn propagate(cfg: &RunConfig, seed: u64) -> Result<Report> {
    let c = concrete(&cfg.template()?, seed);
    let o = cfg.observable(c.num_qubits())?;
    let state = cfg.product_state(c.num_qubits())?;
    match &cfg.k_grid {
        None => {
            let r = backpropagate(&c, &o, &cfg.truncation)?;
            let e = expectation(&r, &state)?;
            Ok(Report::single(vec![
                ("expectation", json!(e)),
                ("terms", json!(r.terms.len())),
                ("stats", serde_json::to_value(&r.stats)?),
            ]))
        }
        Some(ks) => {
            let mut report = Report::series(vec!["k", "expectation", "surviving_paths", "wall_time"]);
            for &k in ks {
                let trunc = pauliprop::TruncationConfig {
                    k: Some(k),
                    ..cfg.truncation.clone()
                };
                let start = Instant::now();
                let r = backpropagate(&c, &o, &trunc)?;
                let e = expectation(&r, &state)?;
                report.rows.push(vec![
                    json!(k),
                    json!(e),
                    json!(r.stats.surviving_path_count),
                    json!(start.elapsed().as_secs_f64()),
                ]);
            }
            Ok(report)
        }
    }
}

fn functional(kind: FunctionalKind, k: Option<usize>, state: pauliprop::ProductState) -> Result<Functional> {
    let need_k = || k.ok_or_else(|| config_error("truncated functionals need \"k\""));
    Ok(match kind {
        FunctionalKind::Variance => Functional::Variance { state },
        FunctionalKind::TruncMse => Functional::TruncMse { k: need_k()?, state },
        FunctionalKind::TruncFrobenius => Functional::TruncFrobenius { k: need_k()? },
    })
}

pub fn estimate_cmd(cfg: &RunConfig, seed: u64) -> Result<Report> {
    let est = cfg
        .estimator
        .as_ref()
        .ok_or_else(|| config_error("estimate needs an \"estimator\""))?;
    let t = cfg.template()?;
    let o = cfg.observable(t.num_qubits())?;
    let n = t.num_qubits();
    let state = match &est.state {
        Some(s) => s.build(n)?,
        None => cfg.product_state(n)?,
    };
    let f = functional(est.functional, est.k, state)?;
    let r = estimate(&t, &o, &f, est.samples, seed)?;
    Ok(Report::single(vec![
        ("mean", json!(r.mean)),
        ("stderr", json!(r.standard_error)),
        ("samples", json!(r.samples)),
    ]))
}

pub fn oracle(cfg: &RunConfig, seed: u64) -> Result<Report> {
    let c = concrete(&cfg.template()?, seed);
    let o = cfg.observable(c.num_qubits())?;
    let state = cfg.product_state(c.num_qubits())?;
    Ok(Report::single(vec![("expectation", json!(simulate_exact(&c, &state, &o)?))]))
}

/// Squared contraction coefficient behind the sweep's reference curve.
fn sweep_chi_sq(kind: &str, x: f64, ch: &NormalFormChannel) -> f64 {
    match kind {
        "amplitude_damping" => 1.0 - x + x * x,
        "dephasing" => (1.0 + (1.0 - 2.0 * x).powi(2)) / 2.0,
        _ => ch.chi_sq_worstcase(),
    }
}

pub fn sweep(cfg: &RunConfig, seed: u64) -> Result<Report> {
    let sw = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| config_error("sweep needs a \"sweep\" block"))?;
    let hva = match cfg.circuit_config()? {
        CircuitConfig::Hva(h) => h,
        _ => return Err(config_error("sweep needs an \"hva\" circuit")),
    };
    let n = hva.lattice.lattice().num_qubits();
    let o = cfg.observable(n)?;
    let state = match sw.functional {
        FunctionalKind::TruncMse => Some(cfg.product_state(n)?),
        FunctionalKind::TruncFrobenius => None,
        FunctionalKind::Variance => return Err(config_error("sweep functional must be trunc_mse or trunc_frobenius")),
    };
    let norm = o.frobenius_norm_sq();
    let mut report = Report::series(vec!["noise_param", "k", "estimate", "stderr", "theory_bound"]);
    if sw.k_grid.is_empty() {
        return Ok(report);
    }
    for &x in &sw.noise_grid {
        let ch = pauliprop::schema::ChannelSpec::named(&sw.noise_kind, x).build()?;
        let chi_sq = sweep_chi_sq(&sw.noise_kind, x, &ch);
        let t = hva.build(NoiseModel::Uniform(ch))?;
        let est = estimate_profile(&t, &o, state.as_ref(), &sw.k_grid, sw.samples, seed)?;
        for (&k, e) in sw.k_grid.iter().zip(&est) {
            report.rows.push(vec![
                json!(x),
                json!(k),
                json!(e.mean),
                json!(e.standard_error),
                json!(norm * chi_sq.powi(k as i32)),
            ]);
        }
    }
    Ok(report)
}

/// Time series of the observable under repeated Trotter steps.
pub fn dynamics(cfg: &RunConfig) -> Result<Report> {
    let tr = match cfg.circuit_config()? {
        CircuitConfig::TrotterTfim(t) => t,
        _ => return Err(config_error("dynamics needs a \"trotter_tfim\" circuit")),
    };
    let step = tr.build_steps(1)?;
    let n = step.num_qubits();
    let o: PauliSum = cfg.observable(n)?;
    let state = cfg.product_state(n)?;
    let mut prop = Propagator::new(&o, &cfg.truncation)?;
    let mut report = Report::series(vec!["t", "expectation", "surviving_paths"]);
    report
        .rows
        .push(vec![json!(0.0), json!(o.expectation_product_state(&state)?), json!(o.len())]);
    let layers = step.layers();
    for s in 1..=tr.steps {
        let mut value = 0.0;
        for (i, layer) in layers.iter().enumerate() {
            if i + 1 == layers.len() {
                value = prop.expectation_after(layer, &state)?;
            }
            prop.apply_inner_layer(layer)?;
        }
        if layers.is_empty() {
            value = prop.expectation(&state)?;
        }
        if !value.is_finite() {
            return Err(Error::Numeric(format!("non-finite expectation at step {s}")));
        }
        report
            .rows
            .push(vec![json!(tr.dt * s as f64), json!(value), json!(prop.term_count())]);
    }
    Ok(report)
}
