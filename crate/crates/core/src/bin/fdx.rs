//! Experiment runner: `fdx run <experiment> --config <path> --out <dir> [--seed N]`.
//!
//! Exit codes: 0 all assertions pass, 1 usage or configuration error,
//! 2 assertion failure, 3 numerical failure.

use fdx_core::config::ExperimentConfig;
use fdx_core::error::Error;
use fdx_core::experiments::{
    eigen_track_experiment, extinction_experiment, gradient_ratio_track, parseval_check,
    prefactor_experiment, rate_experiment, taylor_check, w2_ode_check, well_prepared_search, Lab,
};
use fdx_core::report::RunWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXPERIMENTS: &[&str] = &[
    "profile",
    "spectrum",
    "rate",
    "optimality",
    "taylor",
    "gradient-ratio",
    "eigen-track",
    "w2-check",
    "well-prepared",
    "extinction",
    "all",
];

const USAGE: &str = "usage: fdx run <experiment> --config <path> --out <dir> [--seed N]

experiments:
  profile         stationary profile via shooting + Newton
  spectrum        weighted eigenvalues at the profile
  rate            sharp decay-rate fits for the perturbed profile
  optimality      prefactor scaling over a sweep of perturbation sizes
  taylor          Taylor order of the energy at the profile
  gradient-ratio  late-time energy-gap / dual-gradient ratio
  eigen-track     eigenvalue drift along the flow
  w2-check        second-mode ODE and Duhamel residual convergence
  well-prepared   secant search for faster-decaying data
  extinction      extinction times, scaling, and exponent
  all             every experiment, each in its own subdirectory

options:
  --config <path>  flat `key = value` config file (defaults otherwise)
  --out <dir>      output directory for CSV curves, JSON report, manifest
  --seed N         overrides the config seed

environment:
  FDX_<KEY> overrides any config key, e.g. FDX_EPSILON=2e-3";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (experiment, cfg, out_dir) = match parse_args(&args) {
        Ok(parsed) => parsed,
        Err(msg) => {
            eprintln!("{msg}\n\n{USAGE}");
            return ExitCode::from(1);
        }
    };
    match dispatch(&experiment, &cfg, &out_dir) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("fdx: {experiment}: assertion failure (see report.json)");
            ExitCode::from(2)
        }
        Err(Error::Config(msg)) => {
            eprintln!("fdx: {msg}\n\n{USAGE}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("fdx: {experiment}: {e}");
            ExitCode::from(3)
        }
    }
}

fn parse_args(args: &[String]) -> Result<(String, ExperimentConfig, PathBuf), String> {
    let mut it = args.iter();
    match it.next().map(String::as_str) {
        Some("run") => {}
        Some(other) => return Err(format!("unknown command `{other}`")),
        None => return Err("missing command".into()),
    }
    let experiment = it.next().ok_or("missing experiment name")?.clone();
    if !EXPERIMENTS.contains(&experiment.as_str()) {
        return Err(format!("unknown experiment `{experiment}`"));
    }
    let mut config_path: Option<PathBuf> = None;
    let mut out_dir: Option<PathBuf> = None;
    let mut seed: Option<u64> = None;
    while let Some(flag) = it.next() {
        let value = it
            .next()
            .ok_or_else(|| format!("flag `{flag}` needs a value"))?;
        match flag.as_str() {
            "--config" => config_path = Some(PathBuf::from(value)),
            "--out" => out_dir = Some(PathBuf::from(value)),
            "--seed" => {
                seed = Some(
                    value
                        .parse()
                        .map_err(|_| format!("--seed: `{value}` is not an integer"))?,
                )
            }
            other => return Err(format!("unknown flag `{other}`")),
        }
    }
    let out_dir = out_dir.ok_or("missing --out <dir>")?;
    let mut cfg = match &config_path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            ExperimentConfig::from_text(&text).map_err(|e| e.to_string())?
        }
        None => ExperimentConfig::default(),
    };
    cfg.apply_env().map_err(|e| e.to_string())?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok((experiment, cfg, out_dir))
}

fn dispatch(experiment: &str, cfg: &ExperimentConfig, out_dir: &Path) -> fdx_core::Result<bool> {
    if experiment == "all" {
        let mut all_pass = true;
        for name in EXPERIMENTS.iter().filter(|&&n| n != "all") {
            let pass = run_one(name, cfg, &out_dir.join(name))?;
            println!("{name}: {}", if pass { "pass" } else { "FAIL" });
            all_pass &= pass;
        }
        return Ok(all_pass);
    }
    run_one(experiment, cfg, out_dir)
}

fn run_one(experiment: &str, cfg: &ExperimentConfig, out_dir: &Path) -> fdx_core::Result<bool> {
    let mut w = RunWriter::new(out_dir, experiment)?;
    let pass = match experiment {
        "profile" => {
            let lab = Lab::new(cfg)?;
            w.write_csv("profile.csv", &lab.phi.to_csv())?;
            w.write_json("report.json", &lab.phi.summary())?;
            lab.phi.residual() <= 1e-10 * lab.phi.field().h10_norm()
        }
        "spectrum" => {
            let lab = Lab::new(cfg)?;
            w.write_csv("spectrum.csv", &lab.spec.to_csv())?;
            let parseval = parseval_check(&lab, 20, cfg.seed)?;
            let mus: Vec<f64> = (1..=lab.spec.len()).map(|j| lab.spec.mu(j)).collect();
            let nus: Vec<f64> = (1..=lab.spec.len()).map(|j| lab.spec.nu(j)).collect();
            let mu1_ok = (mus[0] - lab.funcs.lambda_q()).abs() <= 1e-8;
            let one_negative = nus.iter().filter(|&&nu| nu < 0.0).count() == 1;
            let pass = mu1_ok && one_negative && parseval.pass;
            w.write_json(
                "report.json",
                &serde_json::json!({
                    "q": cfg.q,
                    "lambda0": lab.lambda0(),
                    "mu": mus,
                    "nu": nus,
                    "mu1_matches_lambda_q": mu1_ok,
                    "one_negative_nu": one_negative,
                    "parseval": parseval,
                    "pass": pass,
                }),
            )?;
            pass
        }
        "rate" => {
            let (_, floor, run) = rate_experiment(cfg)?;
            w.write_csv("trajectory.csv", &run.traj.to_csv())?;
            w.write_json("noise_floor.json", &floor)?;
            w.write_json("report.json", &run.report)?;
            run.report.pass
        }
        "optimality" => {
            let (report, runs) = prefactor_experiment(cfg)?;
            for (i, run) in runs.iter().enumerate() {
                w.write_csv(&format!("trajectory_{i}.csv"), &run.traj.to_csv())?;
            }
            w.write_json("report.json", &report)?;
            report.pass
        }
        "taylor" => {
            let report = taylor_check(cfg)?;
            let mut csv = String::from("t,remainder\n");
            for (t, rem) in &report.ladder {
                csv.push_str(&format!("{t:.17e},{rem:.17e}\n"));
            }
            w.write_csv("ladder.csv", &csv)?;
            w.write_json("report.json", &report)?;
            report.pass
        }
        "gradient-ratio" => {
            let (lab, floor, run) = rate_experiment(cfg)?;
            let report = gradient_ratio_track(&lab, &run.traj, &floor, cfg)?;
            w.write_csv("trajectory.csv", &run.traj.to_csv())?;
            w.write_json("report.json", &report)?;
            report.pass
        }
        "eigen-track" => {
            let report = eigen_track_experiment(cfg)?;
            w.write_json("report.json", &report)?;
            report.pass
        }
        "w2-check" => {
            let report = w2_ode_check(cfg)?;
            w.write_json("report.json", &report)?;
            report.pass
        }
        "well-prepared" => {
            let report = well_prepared_search(cfg)?;
            w.write_json("report.json", &report)?;
            report.pass
        }
        "extinction" => {
            let report = extinction_experiment(cfg)?;
            w.write_json("report.json", &report)?;
            report.pass
        }
        other => {
            return Err(Error::Config(format!("unknown experiment `{other}`")));
        }
    };
    w.finish(cfg)?;
    Ok(pass)
}
