//! `qspec run`: config to response grid to spectrum to files.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use serde::Serialize;

use qspec_core::catalog::{catalog, DelayAxis};
use qspec_core::diagram::{DiagramSet, Part, Term};
use qspec_core::dsl::parse_diagram;
use qspec_core::estimator::{
    EstimatorMode, EstimatorOptions, GridAxis, GridSpec, ResponseEvaluator, ResponseGrid, StencilOrder,
};
use qspec_core::model::ModelSystem;
use qspec_core::operator::QuantumState;
use qspec_core::signal::{
    absorption_spectrum, circular_dichroism, convolve, difference, twod_spectrum, Envelope, FieldSpec, Pulse,
    Spectrum, SpectrumKind, SpectrumSpec, TimeSeries, Window,
};
use qspec_core::C64;

use crate::config::{
    DelayConfig, Format, Measurement, ModeConfig, PulseConfig, RunConfig, StencilConfig, WindowConfig,
};
use crate::formats;
use crate::parallel;

/// Padding used when the config does not set one.
pub const DEFAULT_PADDING: usize = 4;
/// Shots per stencil point when shot mode does not set a count.
pub const DEFAULT_SHOTS: u64 = 1000;

#[derive(Clone, Debug, Serialize)]
pub struct ResolvedEstimator {
    pub mode: ModeConfig,
    pub shots: Option<u64>,
    pub seed: u64,
    pub delta: f64,
    pub stencil: StencilConfig,
    pub normalize: bool,
    pub reduce: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResolvedDelay {
    pub offset: f64,
    pub step: f64,
    pub count: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResolvedSpectrum {
    pub omega_max: f64,
    pub delta_omega: f64,
    pub window: WindowConfig,
    pub padding: usize,
    pub samples: usize,
    pub time_step: f64,
    pub duration: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResolvedSpectroscopy {
    pub source: String,
    pub measurement: Measurement,
    pub terms: Vec<String>,
    pub delays: Vec<ResolvedDelay>,
    pub zeeman_field: Option<f64>,
    pub field: Option<Vec<PulseConfig>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Resolved {
    pub model: crate::config::ModelConfig,
    pub dephasing: f64,
    pub initial_state: String,
    pub spectroscopy: ResolvedSpectroscopy,
    pub estimator: ResolvedEstimator,
    pub spectrum: ResolvedSpectrum,
    pub output_directory: String,
    pub formats: Vec<Format>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema: &'static str,
    config: &'a RunConfig,
    resolved: &'a Resolved,
    dipole_scale: [f64; 2],
    grid_points: usize,
    terms_per_point: usize,
    circuits_per_point: usize,
    threads: usize,
    thread_env: &'static str,
    versions: Versions,
    wall_time_seconds: f64,
    files: &'a [String],
}

#[derive(Serialize)]
struct Versions {
    qspec: &'static str,
    qspec_core: &'static str,
}

/// What a run produced.
#[derive(Debug)]
pub struct RunReport {
    pub directory: PathBuf,
    pub files: Vec<String>,
    pub response: ResponseGrid,
    pub spectrum: Option<Spectrum>,
    pub resolved: Resolved,
}

fn diagram_set(cfg: &RunConfig) -> anyhow::Result<(String, DiagramSet, Option<Vec<DelayAxis>>)> {
    let s = &cfg.spectroscopy;
    match (&s.catalog, &s.diagrams) {
        (Some(name), None) => {
            let entry = catalog(name).context("spectroscopy.catalog")?;
            Ok((name.clone(), entry.set, Some(entry.delays.axes)))
        }
        (None, Some(texts)) => {
            if texts.is_empty() {
                bail!("spectroscopy.diagrams: at least one diagram is needed");
            }
            let mut terms = Vec::new();
            for (i, t) in texts.iter().enumerate() {
                let d = parse_diagram(t).with_context(|| format!("spectroscopy.diagrams[{i}]"))?;
                terms.push(Term {
                    weight: C64::new(d.sign(), 0.0),
                    diagram: d,
                    part: Part::Whole,
                });
            }
            let order = terms[0].diagram.order();
            let set = DiagramSet::new(order, terms).context("spectroscopy.diagrams")?;
            Ok(("diagrams".into(), set, None))
        }
        _ => bail!("spectroscopy: give exactly one of `catalog` or `diagrams`"),
    }
}

fn default_measurement(source: &str, order: usize, zeeman: bool) -> Measurement {
    match source {
        "linear_absorption" => Measurement::Absorption,
        "twod" => Measurement::Twod,
        "cd" if zeeman => Measurement::MagneticCircularDichroism,
        "cd" => Measurement::CircularDichroism,
        "diagrams" if order == 1 => Measurement::Absorption,
        _ => Measurement::Response,
    }
}

fn resolve_delays(cfg: &RunConfig, order: usize, layout: Option<Vec<DelayAxis>>, time: GridAxis) -> anyhow::Result<Vec<GridAxis>> {
    let given: Vec<DelayConfig> = match (&cfg.spectroscopy.delays, layout) {
        (Some(d), _) => d.clone(),
        (None, Some(axes)) => axes
            .iter()
            .map(|a| match a {
                DelayAxis::Scanned => DelayConfig::default(),
                DelayAxis::Fixed(x) => DelayConfig { fixed: Some(*x), ..Default::default() },
            })
            .collect(),
        (None, None) => vec![DelayConfig::default(); order],
    };
    if given.len() != order {
        bail!("spectroscopy.delays: order {order} needs {order} entries, got {}", given.len());
    }
    given
        .iter()
        .enumerate()
        .map(|(i, d)| match (d.fixed, d.step, d.count) {
            (Some(x), None, None) => Ok(GridAxis::fixed(x)),
            (None, step, count) => Ok(GridAxis::scanned(step.unwrap_or(time.step), count.unwrap_or(time.count))),
            _ => bail!("spectroscopy.delays[{i}]: `fixed` excludes `step` and `count`"),
        })
        .collect()
}

fn resolve_estimator(cfg: &RunConfig) -> anyhow::Result<(ResolvedEstimator, EstimatorOptions)> {
    let e = &cfg.estimator;
    let mode = match e.mode {
        ModeConfig::Exact => EstimatorMode::Exact,
        ModeConfig::Pauli => EstimatorMode::Pauli,
        ModeConfig::Shots => {
            let shots = e.shots.unwrap_or(DEFAULT_SHOTS);
            if shots == 0 {
                bail!("config error at `estimator.shots`: must be at least 1");
            }
            EstimatorMode::Shots { shots, seed: e.seed }
        }
    };
    let mut opts = EstimatorOptions::new(mode);
    if let Some(d) = e.delta {
        if d.is_nan() || d <= 0.0 {
            bail!("config error at `estimator.delta`: must be positive");
        }
        opts = opts.with_delta(d);
    }
    opts = opts
        .with_stencil(match e.stencil {
            StencilConfig::Second => StencilOrder::Second,
            StencilConfig::Fourth => StencilOrder::Fourth,
        })
        .with_normalize(e.normalize.unwrap_or(true))
        .with_reduce(e.reduce.unwrap_or(true));
    let resolved = ResolvedEstimator {
        mode: e.mode,
        shots: match mode {
            EstimatorMode::Shots { shots, .. } => Some(shots),
            _ => None,
        },
        seed: e.seed,
        delta: opts.delta,
        stencil: e.stencil,
        normalize: opts.normalize,
        reduce: opts.reduce,
    };
    Ok((resolved, opts))
}

fn field_spec(pulses: &[PulseConfig]) -> anyhow::Result<FieldSpec> {
    let pulses = pulses
        .iter()
        .map(|p| Pulse {
            center: p.center,
            envelope: p.width.map_or(Envelope::Delta, |width| Envelope::Gaussian { width }),
            amplitude: p.amplitude,
            polarization: qspec_core::signal::Polarization::Parallel,
        })
        .collect();
    FieldSpec::new(pulses).context("spectroscopy.field")
}

struct Evaluated {
    grid: ResponseGrid,
    points: usize,
    terms: usize,
    circuits: usize,
    scale: [f64; 2],
}

fn evaluate(set: &DiagramSet, axes: &[GridAxis], opts: &EstimatorOptions, model: &ModelSystem, rho0: &QuantumState, threads: usize) -> anyhow::Result<Evaluated> {
    let ev = ResponseEvaluator::new(set, GridSpec::new(axes.to_vec()), opts, model, rho0).context("preparing the estimator")?;
    let grid = parallel::evaluate(&ev, threads).context("evaluating the response grid")?;
    let s = ev.scale();
    Ok(Evaluated {
        points: ev.len(),
        terms: ev.term_count(),
        circuits: ev.circuits_per_point(),
        scale: [s.electric, s.magnetic],
        grid,
    })
}

/// Runs a parsed config. `out` overrides `output.directory`.
pub fn run(cfg: &RunConfig, out: Option<&Path>) -> anyhow::Result<RunReport> {
    let started = Instant::now();
    let threads = parallel::thread_count();
    let (model, rho0) = cfg.build_model()?;

    let padding = cfg.spectrum.padding.unwrap_or(DEFAULT_PADDING);
    let spec = SpectrumSpec::new(cfg.spectrum.omega_max, cfg.spectrum.delta_omega)
        .context("spectrum")?
        .with_padding(padding)
        .with_window(match cfg.spectrum.window {
            WindowConfig::Exponential => Window::Exponential,
            WindowConfig::None => Window::None,
        });
    spec.samples().context("spectrum.padding")?;
    let time = spec.time_axis()?;

    let (source, set, layout) = diagram_set(cfg)?;
    let zeeman = cfg.spectroscopy.zeeman_field;
    let measurement = cfg
        .spectroscopy
        .measurement
        .unwrap_or_else(|| default_measurement(&source, set.order(), zeeman.is_some()));
    let axes = resolve_delays(cfg, set.order(), layout, time)?;
    let (resolved_estimator, opts) = resolve_estimator(cfg)?;

    let model = match (measurement, zeeman) {
        (Measurement::MagneticCircularDichroism, Some(beta)) => {
            if model.dim() != 3 {
                bail!("spectroscopy.zeeman_field: the Zeeman term needs a three-level model");
            }
            model.with_static_field(&ModelSystem::zeeman_field(beta))?
        }
        (Measurement::MagneticCircularDichroism, None) => bail!("spectroscopy.zeeman_field: required for magnetic circular dichroism"),
        (_, Some(_)) => bail!("spectroscopy.zeeman_field: only used with magnetic_circular_dichroism"),
        _ => model,
    };

    let field = cfg.spectroscopy.field.as_deref().map(field_spec).transpose()?;
    let needs_time_axis = |i: usize| {
        let a = axes[i];
        if a.offset != 0.0 || a.count != time.count || (a.step - time.step).abs() > 1e-12 * time.step {
            bail!("spectroscopy.delays[{i}] must match the spectrum time axis (step {}, count {})", time.step, time.count);
        }
        Ok(())
    };

    let main = evaluate(&set, &axes, &opts, &model, &rho0, threads)?;
    let series = || -> anyhow::Result<TimeSeries> {
        match &field {
            Some(f) => Ok(convolve(&main.grid, f)?),
            None => Ok(TimeSeries::from_grid(&main.grid)?),
        }
    };
    let spectrum = match measurement {
        Measurement::Response => None,
        Measurement::Absorption => {
            if set.order() != 1 {
                bail!("absorption needs a first-order diagram set, got order {}", set.order());
            }
            needs_time_axis(0)?;
            Some(absorption_spectrum(&series()?, &spec)?)
        }
        Measurement::CircularDichroism | Measurement::MagneticCircularDichroism => {
            if set.order() != 1 {
                bail!("circular dichroism needs a first-order diagram set");
            }
            needs_time_axis(0)?;
            let mut s = circular_dichroism(&series()?, &spec)?;
            if measurement == Measurement::MagneticCircularDichroism {
                s.kind = SpectrumKind::MagneticCircularDichroism;
            }
            Some(s)
        }
        Measurement::LinearDichroism => {
            if set.order() != 1 {
                bail!("linear dichroism needs a first-order diagram set");
            }
            needs_time_axis(0)?;
            if opts.normalize {
                bail!("estimator.normalize: linear dichroism compares two dipoles and needs normalize = false");
            }
            let perp = model
                .mu_perp()
                .context("linear dichroism needs a perpendicular dipole (model.mu_perp)")?
                .clone();
            let perp_model = model.clone().with_electric(perp)?;
            let other = evaluate(&set, &axes, &opts, &perp_model, &rho0, threads)?;
            let other_series = match &field {
                Some(f) => convolve(&other.grid, f)?,
                None => TimeSeries::from_grid(&other.grid)?,
            };
            let a = absorption_spectrum(&series()?, &spec)?;
            let b = absorption_spectrum(&other_series, &spec)?;
            Some(difference(&a, &b, SpectrumKind::LinearDichroism)?)
        }
        Measurement::Twod => {
            if set.order() != 3 {
                bail!("a 2D spectrum needs a third-order diagram set");
            }
            if field.is_some() {
                bail!("spectroscopy.field: pulses are only supported for first-order measurements");
            }
            needs_time_axis(0)?;
            needs_time_axis(2)?;
            if axes[1].count != 1 {
                bail!("spectroscopy.delays[1]: a 2D spectrum is computed at one fixed tau2");
            }
            Some(twod_spectrum(&main.grid, 0, &spec)?)
        }
    };

    let env = cfg.environment.clone().unwrap_or_default();
    let resolved = Resolved {
        model: cfg.model.clone(),
        dephasing: env.dephasing.unwrap_or(0.0),
        initial_state: env.temperature.map_or("ground".into(), |t| format!("thermal(T={t})")),
        spectroscopy: ResolvedSpectroscopy {
            source,
            measurement,
            terms: set.terms().iter().map(|t| t.instruction()).collect(),
            delays: axes
                .iter()
                .map(|a| ResolvedDelay { offset: a.offset, step: a.step, count: a.count })
                .collect(),
            zeeman_field: zeeman,
            field: cfg.spectroscopy.field.clone(),
        },
        estimator: resolved_estimator,
        spectrum: ResolvedSpectrum {
            omega_max: spec.omega_max,
            delta_omega: spec.delta_omega,
            window: cfg.spectrum.window,
            padding,
            samples: spec.samples()?,
            time_step: spec.time_step(),
            duration: spec.duration(),
        },
        output_directory: cfg.output.directory.clone(),
        formats: cfg.output.formats.clone(),
    };

    let dir = out.map_or_else(|| PathBuf::from(&cfg.output.directory), Path::to_path_buf);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut files = Vec::new();
    let mut formats = cfg.output.formats.clone();
    formats.sort();
    formats.dedup();
    for f in &formats {
        let mut emit = |name: &str, bytes: Vec<u8>| -> anyhow::Result<()> {
            fs::write(dir.join(name), bytes).with_context(|| format!("writing {name}"))?;
            files.push(name.to_string());
            Ok(())
        };
        match f {
            Format::Csv => {
                let mut b = Vec::new();
                formats::response_csv(&main.grid, &mut b)?;
                emit("response.csv", b)?;
                if let Some(s) = &spectrum {
                    let mut b = Vec::new();
                    formats::spectrum_csv(s, &mut b)?;
                    emit("spectrum.csv", b)?;
                }
            }
            Format::Json => {
                let mut b = Vec::new();
                formats::response_json(&main.grid, &mut b)?;
                emit("response.json", b)?;
                if let Some(s) = &spectrum {
                    let mut b = Vec::new();
                    formats::spectrum_json(s, &mut b)?;
                    emit("spectrum.json", b)?;
                }
            }
            Format::Svg => {
                emit("response.svg", formats::response_svg(&main.grid).into_bytes())?;
                if let Some(s) = &spectrum {
                    emit("spectrum.svg", formats::spectrum_svg(s).into_bytes())?;
                }
            }
        }
    }
    files.push("manifest.json".into());
    let manifest = Manifest {
        schema: "qspec-manifest/1",
        config: cfg,
        resolved: &resolved,
        dipole_scale: main.scale,
        grid_points: main.points,
        terms_per_point: main.terms,
        circuits_per_point: main.circuits,
        threads,
        thread_env: parallel::THREADS_ENV,
        versions: Versions {
            qspec: env!("CARGO_PKG_VERSION"),
            qspec_core: qspec_core::VERSION,
        },
        wall_time_seconds: started.elapsed().as_secs_f64(),
        files: &files,
    };
    fs::write(dir.join("manifest.json"), serde_json::to_vec_pretty(&manifest)?).context("writing manifest.json")?;

    Ok(RunReport {
        directory: dir,
        files,
        response: main.grid,
        spectrum,
        resolved,
    })
}

pub fn run_file(path: &Path, out: Option<&Path>) -> anyhow::Result<RunReport> {
    let cfg = crate::config::load(path)?;
    run(&cfg, out)
}
