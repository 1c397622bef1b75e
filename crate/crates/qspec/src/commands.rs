//! `diagrams`, `cost` and `oracle-check`. Each returns its report as text so
//! the binary only prints and sets the exit code.

use std::fmt::Write as _;

use anyhow::{bail, Context};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use qspec_core::catalog::{catalog, describe_all};
use qspec_core::circuit::{compile, simulate_exact};
use qspec_core::cost::{apply_diagram_filter_count, cost_estimate, CostBreakdown, CostParams};
use qspec_core::diagram::{expand_commutators, DiagramSet, DipoleKind, FeynmanDiagram, Side};
use qspec_core::dsl::parse_diagram;
use qspec_core::model::ModelSystem;
use qspec_core::operator::{Operator, QuantumState};
use qspec_core::oracle::{q_liouville, q_product};
use qspec_core::{CMatrix, C64};

pub fn list_set(set: &DiagramSet) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} diagrams, order {}", set.len(), set.order());
    for (i, t) in set.terms().iter().enumerate() {
        let sign = if t.diagram.sign() > 0.0 { '+' } else { '-' };
        let sides: Vec<String> = t.diagram.interactions().iter().map(|it| format!("{}{}", it.side, it.kind)).collect();
        let _ = writeln!(out, "{i:>3}  {sign}  {:<28} {}", sides.join(" "), t.instruction());
    }
    out
}

pub enum DiagramQuery<'a> {
    Order { n: usize, reduce: bool },
    Catalog { name: &'a str, reduce: bool },
    Parse(&'a str),
    List,
}

pub fn diagrams(q: DiagramQuery) -> anyhow::Result<String> {
    let reduce = |set: DiagramSet, on: bool| -> anyhow::Result<DiagramSet> {
        Ok(if on { set.conjugate_reduce()? } else { set })
    };
    Ok(match q {
        DiagramQuery::Order { n, reduce: r } => {
            if n == 0 || n > 8 {
                bail!("--order must be between 1 and 8");
            }
            list_set(&reduce(expand_commutators(n), r)?)
        }
        DiagramQuery::Catalog { name, reduce: r } => {
            let entry = catalog(name)?;
            let mut out = format!("{}: {}\n", entry.name, entry.description);
            out.push_str(&list_set(&reduce(entry.set, r)?));
            out
        }
        DiagramQuery::Parse(text) => {
            let d = parse_diagram(text)?;
            format!(
                "valid diagram, order {}, sign {:+}\n{}\n{}\n",
                d.order(),
                d.sign(),
                d,
                d.correlation_label()
            )
        }
        DiagramQuery::List => describe_all().join("\n") + "\n",
    })
}

#[derive(Serialize)]
struct CostJson {
    n: usize,
    duration: f64,
    c_u: f64,
    n_corr: u64,
    samples_per_axis: u64,
    n_samples: f64,
    n_shots: u64,
    n_deriv: u64,
    total: f64,
    closed_form: f64,
    constant_factor: f64,
    amplitude_estimation: bool,
}

pub fn cost(params: &CostParams, surviving: Option<u64>, json: bool) -> anyhow::Result<String> {
    let mut b: CostBreakdown = cost_estimate(params)?;
    if let Some(k) = surviving {
        b = apply_diagram_filter_count(&b, k)?;
    }
    if json {
        let j = CostJson {
            n: b.n,
            duration: b.duration,
            c_u: b.c_u,
            n_corr: b.n_corr,
            samples_per_axis: b.samples_per_axis,
            n_samples: b.n_samples,
            n_shots: b.n_shots,
            n_deriv: b.n_deriv,
            total: b.total,
            closed_form: b.closed_form,
            constant_factor: b.constant_factor(),
            amplitude_estimation: b.amplitude_estimation,
        };
        return Ok(serde_json::to_string_pretty(&j)? + "\n");
    }
    let mut out = String::new();
    let rows: [(&str, String); 10] = [
        ("order n", b.n.to_string()),
        ("record length T", format!("{:.6}", b.duration)),
        ("C_U (per run)", format!("{:.6e}", b.c_u)),
        ("n_corr", b.n_corr.to_string()),
        ("n_samples", format!("{} ({} per axis)", b.n_samples, b.samples_per_axis)),
        ("n_shots", b.n_shots.to_string()),
        ("n_deriv", b.n_deriv.to_string()),
        ("total", format!("{:.6e}", b.total)),
        ("closed form", format!("{:.6e}", b.closed_form)),
        ("total / closed form", format!("{:.6}", b.constant_factor())),
    ];
    for (k, v) in rows {
        let _ = writeln!(out, "{k:<22}{v}");
    }
    Ok(out)
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> Operator {
    let a = random_matrix(rng, n);
    Operator::new((&a + a.adjoint()) * C64::new(0.5, 0.0)).expect("square")
}

fn random_density(rng: &mut ChaCha8Rng, n: usize) -> anyhow::Result<QuantumState> {
    let a = random_matrix(rng, n);
    let rho = &a * a.adjoint();
    let tr = rho.trace();
    Ok(QuantumState::density(rho / tr)?)
}

/// Named models for `oracle-check`: `two_level`, `ladder3`, `zeeman`,
/// `vibronic`, or `random<dim>`.
pub fn named_model(name: &str, rng: &mut ChaCha8Rng) -> anyhow::Result<ModelSystem> {
    Ok(match name {
        "two_level" => ModelSystem::two_level(1.0)?,
        "ladder3" => ModelSystem::ladder(&[0.0, 1.0, 2.5], &[1.0, 0.7])?,
        "zeeman" => ModelSystem::zeeman_triplet(1.0, 0.5)?,
        "vibronic" => ModelSystem::displaced_oscillator(1.0, 0.2, 1.0, 4)?,
        other => {
            let dim: usize = other
                .strip_prefix("random")
                .and_then(|d| d.parse().ok())
                .with_context(|| format!("unknown model `{other}`; use two_level, ladder3, zeeman, vibronic or random<dim>"))?;
            if !(1..=12).contains(&dim) {
                bail!("random model dimension must be between 1 and 12");
            }
            ModelSystem::new(random_hermitian(rng, dim), random_hermitian(rng, dim))?
                .with_magnetic(random_hermitian(rng, dim))?
        }
    })
}

#[derive(Clone, Debug)]
pub struct OracleCheck {
    pub trials: usize,
    pub max_deviation: f64,
    pub worst: Option<String>,
}

pub const ORACLE_THRESHOLD: f64 = 1e-8;

/// Random diagrams, times and `F` values on `model`; circuit simulation
/// against the operator-product oracle.
pub fn oracle_check(model_name: &str, order: usize, trials: usize, seed: u64, dephasing: Option<f64>) -> anyhow::Result<OracleCheck> {
    if order == 0 || order > 6 {
        bail!("--order must be between 1 and 6");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = named_model(model_name, &mut rng)?;
    if let Some(g) = dephasing {
        model = model.with_dephasing(g)?;
    }
    let dim = model.dim();
    let mut max_deviation: f64 = 0.0;
    let mut worst = None;
    for _ in 0..trials {
        let sides: Vec<Side> = (0..order).map(|_| if rng.random::<bool>() { Side::Ket } else { Side::Bra }).collect();
        let kinds: Vec<DipoleKind> = (0..=order)
            .map(|_| {
                if model.m().is_some() && rng.random_range(0..3) == 0 {
                    DipoleKind::Magnetic
                } else {
                    DipoleKind::Electric
                }
            })
            .collect();
        let d = FeynmanDiagram::from_sides(&sides, &kinds)?;
        let mut times = vec![0.0];
        for _ in 0..order {
            let last = *times.last().unwrap();
            times.push(last + rng.random_range(0.0..2.0));
        }
        let f: Vec<f64> = (0..=order).map(|_| rng.random_range(-0.5..0.5)).collect();
        let rho = random_density(&mut rng, dim)?;
        let plan = compile(&d, &times, &f)?;
        let circuit = simulate_exact(&plan, &model, &rho)?;
        let oracle = if model.is_closed() {
            q_product(&model, &d, &times, &f, &rho)?
        } else {
            q_liouville(&model, &d, &times, &f, &rho)?
        };
        let dev = (circuit - oracle).norm();
        if dev > max_deviation {
            max_deviation = dev;
            worst = Some(d.to_string());
        }
    }
    Ok(OracleCheck { trials, max_deviation, worst })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_order_listing() {
        let out = diagrams(DiagramQuery::Order { n: 2, reduce: false }).unwrap();
        assert!(out.starts_with("4 diagrams, order 2"));
        assert_eq!(out.lines().count(), 5);
        assert_eq!(out.matches("  +  ").count(), 2);
        assert_eq!(out.matches("  -  ").count(), 2);
    }

    #[test]
    fn parse_and_catalog() {
        let out = diagrams(DiagramQuery::Parse("order 1; t0 ket E; signal ket E")).unwrap();
        assert!(out.contains("valid diagram, order 1"));
        assert!(diagrams(DiagramQuery::Parse("order 1; t0 side E; signal ket E")).is_err());
        let out = diagrams(DiagramQuery::Catalog { name: "twod", reduce: true }).unwrap();
        assert!(out.contains("4 diagrams, order 3"));
        assert!(diagrams(DiagramQuery::Catalog { name: "nope", reduce: false }).is_err());
    }

    #[test]
    fn cost_report() {
        let p = CostParams::new(3, 10.0, 0.1, 0.01);
        let out = cost(&p, None, false).unwrap();
        assert!(out.contains("n_corr                4"));
        assert!(out.contains("n_deriv               16"));
        let j: serde_json::Value = serde_json::from_str(&cost(&p, Some(3), true).unwrap()).unwrap();
        assert_eq!(j["n_corr"], 3);
    }

    #[test]
    fn oracle_agreement() {
        let r = oracle_check("ladder3", 2, 20, 1, None).unwrap();
        assert!(r.max_deviation < 1e-10, "{}", r.max_deviation);
        let r = oracle_check("random4", 3, 10, 2, Some(0.3)).unwrap();
        assert!(r.max_deviation < 1e-10, "{}", r.max_deviation);
        assert!(oracle_check("nonsense", 1, 1, 0, None).is_err());
    }
}
