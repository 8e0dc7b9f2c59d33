use std::path::Path;

use robh2::linalg::zeros;
use robh2::plants::{build_amb, build_two_disk, AmbParams, TwoDiskParams};
use robh2::sdp::SolverOptions;
use robh2::simulation::{
    estimate_h2_white_noise, estimate_induced_gain, frequency_grid, parameter_grid, settling_step,
    step_disturbance_response, write_csv, WhiteNoiseOptions,
};
use robh2::synthesis::{analyze_robust_h2, check_gs_certificate, forward_transform, synthesize_gs, synthesize_sf};
use robh2::{
    controller_from_json, controller_to_json, open_loop, plant_from_json, plant_to_json, validate_plant,
    ClosedLoopLft, Controller, LftPlant, Mat,
};
use serde_json::{json, Value};

use crate::report::{digest, read_input, Failure, Outcome, Report};
use crate::{ExampleName, Flags, Mode, SimulateArgs};

/// Fraction of the peak a step response must decay below.
const SETTLE_FRACTION: f64 = 0.05;

/// Relative slack allowed between the synthesized bound and its re-analysis.
const VERIFY_SLACK: f64 = 1e-3;

fn solver_options(flags: &Flags) -> SolverOptions {
    SolverOptions { tol: flags.tol, max_iter: flags.max_iter, ..SolverOptions::default() }
}

fn load_plant(path: &Path, report: &mut Report) -> Result<LftPlant, Failure> {
    let input = read_input(path)?;
    report.input("plant", path, &input);
    let plant = validate_plant(plant_from_json(&input.text)?)?.into_inner();
    if !plant.is_discrete() {
        return Err(Failure::invalid("plant must be discrete (ts > 0)"));
    }
    Ok(plant)
}

fn load_loop(plant: &LftPlant, path: &Path, report: &mut Report) -> Result<ClosedLoopLft, Failure> {
    let input = read_input(path)?;
    report.input("controller", path, &input);
    Ok(controller_from_json(&input.text)?.close(plant)?)
}

fn value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

pub fn analyze(plant_path: &Path, controller: Option<&Path>, flags: &Flags) -> Outcome {
    let mut report = Report::new("analyze", flags);
    let plant = load_plant(plant_path, &mut report)?;
    let clp = match controller {
        Some(path) => load_loop(&plant, path, &mut report)?,
        None => open_loop(&plant)?,
    };
    let cert = analyze_robust_h2(&clp, &solver_options(flags))?;
    report.set(
        "result",
        json!({
            "status": value(&cert.solver.status),
            "gamma": cert.gamma,
            "min_margin": cert.margins.min_margin(),
            "margins": value(&cert.margins),
            "scaling": value(&cert.x),
            "solver": value(&cert.solver),
        }),
    );
    Ok(report)
}

pub fn synth(mode: Mode, plant_path: &Path, out: Option<&Path>, flags: &Flags) -> Outcome {
    let mut report = Report::new("synth", flags);
    let plant = load_plant(plant_path, &mut report)?;
    let opts = solver_options(flags);
    let (controller, result, verification) = match mode {
        Mode::Sf => {
            let r = synthesize_sf(&plant, &opts)?;
            let result = json!({
                "mode": "sf",
                "gamma": r.gamma,
                "states": r.states,
                "min_margin": r.margins.min_margin(),
                "solver": value(&r.solver),
            });
            let controller = Controller::StateFeedback(r.f);
            let check = analyze_robust_h2(&controller.close(&plant)?, &opts)
                .map_err(|e| Failure::no_certificate(format!("closed-loop verification failed: {e}")))?;
            if !(check.gamma <= r.gamma * (1.0 + VERIFY_SLACK)) {
                return Err(Failure::no_certificate(format!(
                    "closed-loop verification gives {} above the synthesized bound {}",
                    check.gamma, r.gamma
                )));
            }
            let verification = json!({
                "method": "analysis",
                "gamma": check.gamma,
                "min_margin": check.margins.min_margin(),
                "status": value(&check.solver.status),
            });
            (controller, result, verification)
        }
        Mode::Gs => {
            let r = synthesize_gs(&plant, &opts)?;
            let hat = forward_transform(&r.variables, &r.controller, &plant)?.matrix();
            let want = r.variables.hat.matrix();
            let round_trip = (&hat - &want).norm() / want.norm().max(f64::MIN_POSITIVE);
            let result = json!({
                "mode": "gs",
                "gamma": r.gamma,
                "controller_order": r.controller.nk(),
                "round_trip_error": round_trip,
                "perturbed": r.perturbed,
                "min_margin": r.margins.min_margin(),
                "solver": value(&r.solver),
            });
            // The recovered closed-loop certificate is checked directly; a
            // fresh analysis solve of the doubled loop is much larger.
            let margins = check_gs_certificate(&r, &plant)?;
            if !margins.all_positive() {
                return Err(Failure::no_certificate(format!(
                    "recovered closed-loop certificate fails the analysis LMIs (min margin {})",
                    margins.min_margin()
                )));
            }
            let verification = json!({
                "method": "certificate",
                "gamma": r.variables.q.trace().sqrt(),
                "min_margin": margins.min_margin(),
            });
            (Controller::Lft(r.controller), result, verification)
        }
    };
    report.set("result", result);
    report.set("verification", verification);

    if let Some(path) = out {
        let text = controller_to_json(&controller)? + "\n";
        std::fs::write(path, &text).map_err(|e| Failure::invalid(format!("cannot write {}: {e}", path.display())))?;
        report.set("controller", json!({ "path": path.display().to_string(), "sha256": digest(text.as_bytes()) }));
    }
    Ok(report)
}

/// `Delta` from one value per block, or zero.
fn constant_delta(clp: &ClosedLoopLft, values: &[f64]) -> Result<Mat, Failure> {
    let st = &clp.structure;
    if values.is_empty() {
        return Ok(zeros(clp.np(), clp.np()));
    }
    let ns = st.scalar_blocks.len();
    if values.len() != ns + st.full_blocks.len() {
        return Err(Failure::invalid(format!(
            "--delta needs {} values (one per uncertainty block), got {}",
            ns + st.full_blocks.len(),
            values.len()
        )));
    }
    let fulls: Vec<Mat> = values[ns..].iter().zip(&st.full_blocks).map(|(t, r)| Mat::identity(*r, *r) * *t).collect();
    Ok(st.assemble_delta(&values[..ns], &fulls)?)
}

fn state_range(spec: &str, n: usize) -> Result<std::ops::Range<usize>, Failure> {
    let bad = || Failure::invalid(format!("--states expects `a..b` within 0..{n}, got `{spec}`"));
    let (a, b) = spec.split_once("..").ok_or_else(bad)?;
    let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
    if a >= b || b > n {
        return Err(bad());
    }
    Ok(a..b)
}

fn settling(signal: &Mat, columns: std::ops::Range<usize>, ts: f64) -> Value {
    let peak = (0..signal.nrows()).map(|k| signal.row(k).columns_range(columns.clone()).norm()).fold(0.0, f64::max);
    let step = settling_step(signal, columns.clone(), SETTLE_FRACTION);
    json!({
        "columns": [columns.start, columns.end],
        "peak": peak,
        "settling_step": step,
        "settling_time_s": step.map(|k| k as f64 * ts),
    })
}

pub fn simulate(args: &SimulateArgs, flags: &Flags) -> Outcome {
    if args.csv.is_some() && args.step.is_none() {
        return Err(Failure::invalid("--csv is only available with --step"));
    }
    let mut report = Report::new("simulate", flags);
    let plant = load_plant(&args.plant, &mut report)?;
    let clp = load_loop(&plant, &args.controller, &mut report)?;
    if args.white_noise {
        let opts = WhiteNoiseOptions {
            runs: args.runs,
            horizon: args.horizon.unwrap_or(4096),
            burn_in: args.burn_in,
            seed: flags.seed,
        };
        let est = estimate_h2_white_noise(&clp, &opts)?;
        report.set("scenario", json!("white_noise"));
        report.set("estimate", value(&est));
    } else if args.induced {
        let grid = parameter_grid(&clp, args.grid)?;
        let est = estimate_induced_gain(&clp, &grid, &frequency_grid(args.freqs))?;
        report.set("scenario", json!("induced"));
        report.set("estimate", value(&est));
    } else if let Some(magnitude) = args.step {
        let delta = constant_delta(&clp, &args.delta)?;
        let horizon = args.horizon.unwrap_or(1000);
        let run = step_disturbance_response(&clp, &delta, magnitude, horizon)?;
        let ts = plant.sample_time;
        let mut result = json!({
            "magnitude": magnitude,
            "horizon": horizon,
            "fraction": SETTLE_FRACTION,
            "delta": delta.diagonal().iter().copied().collect::<Vec<f64>>(),
            "outputs": settling(&run.outputs, 0..clp.ne(), ts),
        });
        if let Some(spec) = &args.states {
            result["states"] = settling(&run.states, state_range(spec, clp.n())?, ts);
        }
        report.set("scenario", json!("step"));
        report.set("result", result);
        if let Some(path) = &args.csv {
            let mut buf = Vec::new();
            write_csv(&run, &mut buf).expect("writing to memory");
            std::fs::write(path, &buf).map_err(|e| Failure::invalid(format!("cannot write {}: {e}", path.display())))?;
            report.set("csv", json!({ "path": path.display().to_string(), "sha256": digest(&buf) }));
        }
    }
    Ok(report)
}

pub fn example(name: ExampleName, dir: &Path, flags: &Flags) -> Outcome {
    let mut report = Report::new("example", flags);
    let plants: Vec<(&str, LftPlant)> = match name {
        ExampleName::TwoDisk => {
            let p = build_two_disk(&TwoDiskParams::default())?;
            vec![("two-disk.json", p.weighted), ("two-disk-raw.json", p.raw)]
        }
        ExampleName::Amb => vec![("amb.json", build_amb(&AmbParams::default())?.weighted)],
    };
    std::fs::create_dir_all(dir).map_err(|e| Failure::invalid(format!("cannot create {}: {e}", dir.display())))?;
    let mut files = Vec::new();
    for (file, plant) in plants {
        let text = plant_to_json(&plant)? + "\n";
        validate_plant(plant_from_json(&text)?)?;
        let path = dir.join(file);
        std::fs::write(&path, &text).map_err(|e| Failure::invalid(format!("cannot write {}: {e}", path.display())))?;
        files.push(json!({
            "path": path.display().to_string(),
            "sha256": digest(text.as_bytes()),
            "n": plant.dims.n,
            "np": plant.dims.np,
            "ts": plant.sample_time,
        }));
    }
    report.set("files", Value::Array(files));
    Ok(report)
}
