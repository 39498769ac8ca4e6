use mrhydro_core::analysis::{bandwidth_3db, bode as bode_table, default_locus_gains, max_stable_gain, root_locus};
use mrhydro_core::params::{derive_hydraulic_mass, ActuationLineParams, LineConfig, LoadImpedance};
use mrhydro_core::sim::{
    calibrate_disturbance, default_frf_chirp, drilling_with, estimate_frf, measure_metrics, rms_error, run_simulation,
    ControlLaw, ControllerConfig, Disturbance, DrillingConfig, SignalSpec, SimOptions, SimResult, StrategyContext,
    StrategyRegistry, FRF_SEGMENT_SECONDS,
};
use mrhydro_core::tf::{candidate_tf, Candidate, Channel};

use crate::output::{Cell, Report, Table};
use crate::{
    BodeArgs, CliError, ControllerChoice, DeriveArgs, FrfArgs, LoopChoice, RunArgs, SignalChoice, SimulateArgs,
    TfChoice,
};

fn candidates(tf: TfChoice) -> Vec<Candidate> {
    match tf {
        TfChoice::Hf => vec![Candidate::ForceForm],
        TfChoice::Hp => vec![Candidate::PressureForm],
        TfChoice::Both => Candidate::ALL.to_vec(),
    }
}

/// Simulated channel whose response a candidate form reproduces.
fn channel_of(c: Candidate) -> Channel {
    Channel::ALL.into_iter().find(|ch| ch.candidate() == c).expect("every form backs a channel")
}

fn channel(l: LoopChoice) -> Channel {
    match l {
        LoopChoice::Force => Channel::Force,
        LoopChoice::Pressure => Channel::Pressure,
    }
}

fn form_note(c: Candidate) -> String {
    format!("{c}, scaled by K_I/(tau*s+1); reproduces the simulated {} channel", channel_of(c).label())
}

pub fn bode(cfg: &LineConfig, z: &LoadImpedance, a: &BodeArgs) -> Result<Report, CliError> {
    let forms = candidates(a.tf);
    let mut tables = Vec::new();
    let mut bw = Vec::new();
    for &c in &forms {
        let g = candidate_tf(c, &cfg.params, z)?;
        tables.push(bode_table(&g, a.fmin, a.fmax, a.points)?);
        bw.push(format!("{} {}", c.label(), bandwidth_3db(&g)?));
    }
    let columns: Vec<String> = if forms.len() == 1 {
        vec!["freq_hz".into(), "mag_db".into(), "phase_deg".into()]
    } else {
        let mut v = vec!["freq_hz".to_string()];
        for c in &forms {
            v.push(format!("{}_mag_db", c.label()));
            v.push(format!("{}_phase_deg", c.label()));
        }
        v
    };
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut t = Table::new("bode.csv", &cols).note(format!("load: {}", z.label()));
    for &c in &forms {
        t = t.note(form_note(c));
    }
    t = t.note("magnitude in dB relative to the DC gain K_I; phase unwrapped");
    for i in 0..a.points {
        let mut row = vec![Cell::Num(tables[0].rows[i].freq_hz)];
        for tab in &tables {
            row.push(tab.rows[i].mag_db.into());
            row.push(tab.rows[i].phase_deg.into());
        }
        t.push(row);
    }
    let summary =
        format!("bode ({}): {} points, {}-{} Hz; bandwidth {}", z.label(), a.points, a.fmin, a.fmax, bw.join(", "));
    Ok(Report { summary, tables: vec![t] })
}

pub fn bandwidth(cfg: &LineConfig, z: &LoadImpedance) -> Result<Report, CliError> {
    let mut t = Table::new(
        "bandwidth.csv",
        &["form", "formula", "simulated_channel", "bandwidth_hz", "max_stable_gain_a_per_n"],
    )
    .note(format!("load: {}", z.label()))
    .note("empty bandwidth: no -3 dB crossing in the sweep; empty gain: stable for every gain");
    let mut parts = Vec::new();
    for c in Candidate::ALL {
        let g = candidate_tf(c, &cfg.params, z)?;
        let bw = bandwidth_3db(&g)?;
        let k = max_stable_gain(&g)?;
        t.push(vec![c.label().into(), c.formula().into(), channel_of(c).label().into(), bw.hz().into(), k.value().into()]);
        parts.push(format!("{c}: {bw}"));
    }
    Ok(Report { summary: format!("bandwidth ({}): {}", z.label(), parts.join("; ")), tables: vec![t] })
}

pub fn poles(cfg: &LineConfig, z: &LoadImpedance, tf: TfChoice) -> Result<Report, CliError> {
    let mut t = Table::new("poles.csv", &["form", "kind", "re", "im", "natural_freq_hz", "damping"])
        .note(format!("load: {}", z.label()));
    let mut parts = Vec::new();
    for c in candidates(tf) {
        let g = candidate_tf(c, &cfg.params, z)?;
        let poles = g.poles()?;
        let zeros = g.zeros()?;
        for (kind, roots) in [("pole", &poles), ("zero", &zeros)] {
            for r in roots {
                let wn = r.norm();
                let damping = if wn > 0.0 { Cell::Num(-r.re / wn) } else { Cell::Empty };
                t.push(vec![
                    c.label().into(),
                    kind.into(),
                    r.re.into(),
                    r.im.into(),
                    (wn / std::f64::consts::TAU).into(),
                    damping,
                ]);
            }
        }
        let rightmost = poles.iter().map(|p| p.re).fold(f64::NEG_INFINITY, f64::max);
        parts.push(format!("{} {} poles, {} zeros, rightmost Re {rightmost:.4}", c.label(), poles.len(), zeros.len()));
    }
    Ok(Report { summary: format!("poles ({}): {}", z.label(), parts.join("; ")), tables: vec![t] })
}

pub fn rootlocus(cfg: &LineConfig, z: &LoadImpedance, l: LoopChoice) -> Result<Report, CliError> {
    let ch = channel(l);
    let c = ch.candidate();
    let g = ch.transfer(&cfg.params, z)?;
    let limit = max_stable_gain(&g)?;
    let trace = root_locus(&g, &default_locus_gains(limit))?;
    if let Some(e) = trace.error {
        return Err(CliError::Runtime(format!("root locus stopped early: {e}")));
    }
    let mut t = Table::new("rootlocus.csv", &["gain", "pole_re", "pole_im"])
        .note(format!("{} loop, load: {}", ch.label(), z.label()))
        .note(form_note(c))
        .note("gain: proportional feedback gain, A/N");
    for pt in &trace.points {
        for &(re, im) in &pt.poles {
            t.push(vec![pt.gain.into(), re.into(), im.into()]);
        }
    }
    let limit_text = match limit.value() {
        Some(k) => format!("{k:.6e} A/N (loop gain {:.4})", k * g.dc_gain()),
        None => "unbounded".to_string(),
    };
    let summary = format!(
        "root locus ({} loop, {}): max stable proportional gain {limit_text}, {} gains traced",
        ch.label(),
        z.label(),
        trace.points.len()
    );
    Ok(Report { summary, tables: vec![t] })
}

pub fn frf(cfg: &LineConfig, z: &LoadImpedance, a: &FrfArgs) -> Result<Report, CliError> {
    let needed = 2.5 * FRF_SEGMENT_SECONDS;
    if a.duration.is_nan() || a.duration < needed {
        return Err(CliError::Usage(format!("--duration must be at least {needed} s for the FRF estimate")));
    }
    let SignalSpec::LogChirp { f0, f1, amplitude, center, .. } = default_frf_chirp() else {
        unreachable!("the FRF excitation is a log chirp")
    };
    let chirp = SignalSpec::LogChirp { f0, f1, duration: a.duration, amplitude, center };
    let ch = channel(a.channel);
    let model = ch.transfer(&cfg.params, z)?;
    let est = estimate_frf(&cfg.params, z, &chirp, ch)?;
    let k_i = cfg.params.k_i;
    let db = |mag: f64| 20.0 * (mag / k_i).log10();
    let mut t = Table::new("frf.csv", &["freq_hz", "est_mag_db", "est_phase_deg", "model_mag_db", "model_phase_deg"])
        .note(format!("current to {} channel, load: {}", ch.label(), z.label()))
        .note(format!("chirp {center} +/- {amplitude} A, {f0}-{f1} Hz over {} s; model: {}", a.duration, form_note(ch.candidate())))
        .note("magnitude in dB relative to K_I");
    let (mut worst_db, mut worst_deg) = (0.0f64, 0.0f64);
    for (f, h) in est.iter() {
        let m = model.eval_jw(f)?;
        let pm = m.arg().to_degrees();
        let pe = h.arg().to_degrees();
        // report the estimate on the model's branch
        let pe = pe + 360.0 * ((pm - pe) / 360.0).round();
        let (me, mm) = (db(h.norm()), db(m.norm()));
        worst_db = worst_db.max((me - mm).abs());
        worst_deg = worst_deg.max((pe - pm).abs());
        t.push(vec![f.into(), me.into(), pe.into(), mm.into(), pm.into()]);
    }
    let summary = format!(
        "frf ({} channel, {}): {} bins {:.3}-{:.3} Hz, worst deviation from the model {worst_db:.3} dB / {worst_deg:.2} deg",
        ch.label(),
        z.label(),
        est.len(),
        est.freqs_hz.first().copied().unwrap_or(f64::NAN),
        est.freqs_hz.last().copied().unwrap_or(f64::NAN),
    );
    Ok(Report { summary, tables: vec![t] })
}

pub fn derive_params(cfg: &LineConfig, a: &DeriveArgs) -> Result<Report, CliError> {
    let mut g = cfg.geometry;
    g.hose_length = a.hose_length.unwrap_or(g.hose_length);
    g.hose_inner_diameter = a.hose_diameter.unwrap_or(g.hose_inner_diameter);
    g.fluid_density = a.fluid_density.unwrap_or(g.fluid_density);
    g.cylinder_area = a.cylinder_area.unwrap_or(g.cylinder_area);
    let m2 = derive_hydraulic_mass(&g)?;
    let mut t = Table::new(
        "derive.csv",
        &["hose_length_m", "hose_diameter_m", "fluid_density_kg_m3", "cylinder_area_m2", "hose_area_m2", "m2_kg"],
    )
    .note("reflected fluid mass m2 = rho * L * A_cyl^2 / A_hose");
    t.push(vec![
        g.hose_length.into(),
        g.hose_inner_diameter.into(),
        g.fluid_density.into(),
        g.cylinder_area.into(),
        g.hose_area().into(),
        m2.into(),
    ]);
    let summary = format!(
        "m2 = {m2:.4} kg (hose {} m x {} mm, rho {} kg/m^3, area {} mm^2); configured m2 = {} kg",
        g.hose_length,
        g.hose_inner_diameter * 1e3,
        g.fluid_density,
        g.cylinder_area * 1e6,
        cfg.params.m2
    );
    Ok(Report { summary, tables: vec![t] })
}

/// What a run is asked to do.
enum Plan {
    Track { signal: SignalSpec, duration: f64 },
    Drill { cfg: DrillingConfig, disturbance: Disturbance },
}

impl Plan {
    fn new(p: &ActuationLineParams, z: &LoadImpedance, run: &RunArgs) -> Result<Self, CliError> {
        let signal = match run.signal {
            SignalChoice::Step => SignalSpec::Step { t0: 0.5, from: 50.0, to: 250.0 },
            SignalChoice::Chirp => {
                SignalSpec::LogChirp { f0: 0.1, f1: 6.0, duration: 20.0, amplitude: 100.0, center: 150.0 }
            }
            SignalChoice::Mixed => SignalSpec::mixed_default(),
            SignalChoice::Drill => {
                let mut cfg = DrillingConfig { seed: run.seed, ..DrillingConfig::default() };
                cfg.duration = run.duration.unwrap_or(cfg.duration);
                // the disturbance is scaled against the open-loop line once, shared by every controller
                let disturbance = calibrate_disturbance(p, z, &cfg)?;
                return Ok(Plan::Drill { cfg, disturbance });
            }
        };
        let duration = run.duration.unwrap_or_else(|| signal.natural_duration());
        Ok(Plan::Track { signal, duration })
    }

    fn describe(&self) -> String {
        match self {
            Plan::Track { signal, duration } => format!("signal {} over {duration} s", signal.label()),
            Plan::Drill { cfg, disturbance } => format!(
                "drill: {} N hold, seed {}, {} tones to {} Hz, amplitude {:.6e} N, window {}-{} s",
                cfg.level,
                cfg.seed,
                cfg.components,
                cfg.f_max,
                disturbance.amplitude,
                cfg.settle,
                cfg.duration
            ),
        }
    }

    fn execute(&self, p: &ActuationLineParams, z: &LoadImpedance, ctrl: &ControllerConfig) -> Result<Outcome, CliError> {
        match self {
            Plan::Track { signal, duration } => {
                let result = run_simulation(p, z, ctrl, signal, *duration, &SimOptions::default())?;
                let window = (0.0, *duration);
                // chirps carry no step; only the tracking error applies
                let m = measure_metrics(&result, window).ok();
                let rms = rms_error(&result, window)?;
                Ok(Outcome {
                    config: *ctrl,
                    rise_time: m.map(|m| m.rise_time_10_90),
                    overshoot: m.map(|m| m.overshoot),
                    rms,
                    oscillation: m.map(|m| m.oscillation_index),
                    peak_deviation: None,
                    result,
                })
            }
            Plan::Drill { cfg, disturbance } => {
                let out = drilling_with(p, z, ctrl, cfg, disturbance.clone())?;
                let rms = rms_error(&out.result, cfg.window())?;
                Ok(Outcome {
                    config: *ctrl,
                    rise_time: None,
                    overshoot: None,
                    rms,
                    oscillation: None,
                    peak_deviation: Some(out.peak_deviation),
                    result: out.result,
                })
            }
        }
    }
}

struct Outcome {
    config: ControllerConfig,
    result: SimResult,
    rise_time: Option<f64>,
    overshoot: Option<f64>,
    rms: f64,
    oscillation: Option<f64>,
    peak_deviation: Option<f64>,
}

impl Outcome {
    fn gains(&self) -> (Option<f64>, Option<f64>) {
        match self.config.law {
            ControlLaw::OpenLoop { .. } => (None, None),
            ControlLaw::ForcePi { kp, ki } | ControlLaw::PressurePi { kp, ki, .. } => (Some(kp), Some(ki)),
        }
    }

    fn metrics_text(&self) -> String {
        let mut parts = Vec::new();
        if let Some(r) = self.rise_time {
            parts.push(format!("rise {:.1} ms", r * 1e3));
        }
        if let Some(o) = self.overshoot {
            parts.push(format!("overshoot {:.1}%", o * 100.0));
        }
        parts.push(format!("rms error {:.3} N", self.rms));
        if let Some(o) = self.oscillation {
            parts.push(format!("oscillation {o:.3e}"));
        }
        if let Some(d) = self.peak_deviation {
            parts.push(format!("peak deviation {d:.3} N"));
        }
        parts.join(", ")
    }

    fn trace(&self, name: &str, p: &ActuationLineParams) -> Table {
        let mut t = Table::new(
            format!("{name}.csv"),
            &[
                "t", "reference", "current", "f_mr", "pressure", "pressure_pa", "force", "disturbance", "x1", "v1",
                "x2", "v2", "x3", "v3",
            ],
        )
        .note(format!("controller: {}", self.config))
        .note("units: s, N, A, N, N (force-equivalent), Pa, N, N, m, m/s");
        for s in &self.result.samples {
            let x = s.state.to_array();
            let mut row: Vec<Cell> = vec![
                s.t.into(),
                s.reference.into(),
                s.current.into(),
                s.f_mr.into(),
                s.pressure.into(),
                p.pressure_to_pa(s.pressure).into(),
                s.force.into(),
                s.disturbance.into(),
            ];
            row.extend(x[..6].iter().map(|&v| Cell::Num(v)));
            t.push(row);
        }
        t
    }
}

fn configure(
    p: &ActuationLineParams,
    z: &LoadImpedance,
    name: &str,
    gains: Option<(f64, f64)>,
) -> Result<ControllerConfig, CliError> {
    let ctx = StrategyContext { params: p, load: z, gains };
    Ok(StrategyRegistry::builtin().configure(name, &ctx)?)
}

pub fn simulate(cfg: &LineConfig, z: &LoadImpedance, a: &SimulateArgs) -> Result<Report, CliError> {
    let p = &cfg.params;
    let gains = a.kp.zip(a.ki);
    if gains.is_some() && a.controller == ControllerChoice::Open {
        return Err(CliError::Usage("--kp/--ki apply to the PI controllers only".into()));
    }
    let name = a.controller.name();
    let ctrl = configure(p, z, name, gains)?;
    let plan = Plan::new(p, z, &a.run)?;
    let out = plan.execute(p, z, &ctrl)?;
    let mut t = out.trace("trace", p).note(plan.describe()).note(format!("load: {}", z.label()));
    t = t.note(format!("metrics: {}", out.metrics_text()));
    let summary = format!("simulate {name} ({}, {}): {}", plan.describe(), z.label(), out.metrics_text());
    Ok(Report { summary, tables: vec![t] })
}

pub const COMPARED: [&str; 3] = ["open", "force-pi", "pressure-pi"];

pub fn compare(cfg: &LineConfig, z: &LoadImpedance, run: &RunArgs) -> Result<Report, CliError> {
    let p = &cfg.params;
    let plan = Plan::new(p, z, run)?;
    let configs = COMPARED.iter().map(|n| configure(p, z, n, None)).collect::<Result<Vec<_>, _>>()?;
    // independent runs; results are collected in a fixed order
    let outcomes: Vec<Result<Outcome, CliError>> = std::thread::scope(|s| {
        let handles: Vec<_> = configs.iter().map(|c| s.spawn(|| plan.execute(p, z, c))).collect();
        handles.into_iter().map(|h| h.join().expect("simulation thread panicked")).collect()
    });
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut metrics = Table::new(
        "metrics.csv",
        &["controller", "kp_a_per_n", "ki_a_per_ns", "rise_time_s", "overshoot", "rms_error_n", "oscillation_index", "peak_deviation_n"],
    )
    .note(plan.describe())
    .note(format!("load: {}", z.label()))
    .note("empty cells: metric not defined for this signal or controller");
    let mut parts = Vec::new();
    for (name, o) in COMPARED.iter().zip(&outcomes) {
        let (kp, ki) = o.gains();
        metrics.push(vec![
            (*name).into(),
            kp.into(),
            ki.into(),
            o.rise_time.into(),
            o.overshoot.into(),
            o.rms.into(),
            o.oscillation.into(),
            o.peak_deviation.into(),
        ]);
        parts.push(format!("{name}: {}", o.metrics_text()));
    }
    let mut tables = vec![metrics];
    for (name, o) in COMPARED.iter().zip(&outcomes) {
        tables.push(o.trace(name, p).note(plan.describe()));
    }
    let summary = format!("compare ({}, {}): {}", plan.describe(), z.label(), parts.join(" | "));
    Ok(Report { summary, tables })
}
