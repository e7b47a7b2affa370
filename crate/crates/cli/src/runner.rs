//! Runs the operations of a scenario and collects the report.

use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use morse_core::alternatives::{bracketing_check, clr_scaling_probe, nonneg_shift};
use morse_core::birman_schwinger::{bs_bound_check, kernel_check, BsOptions, Split};
use morse_core::graph::{BoundaryCondition, PotentialField, Region};
use morse_core::operator::{compact_support_check, conjugation_residual, doob_transform, OperatorBundle};
use morse_core::parabolicity::{green_values, parabolicity_test, restricted_inv_sqrt_norm, Verdict};
use morse_core::pipeline::{main_theorem_pipeline, PipelineConfig, PipelineReport};
use morse_core::spectral::{self, EigenOptions};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Operation, Scenario, ScenarioConfig, Tolerances};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Zero the wall times so that reports are byte-for-byte reproducible.
    pub normalize: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct OperationReport {
    pub op: &'static str,
    /// The operation produced a result.
    pub ok: bool,
    /// The result satisfies its checks.
    pub pass: bool,
    pub result: Option<Value>,
    pub error: Option<String>,
    pub wall_time_s: f64,
    #[serde(skip)]
    pub csv: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub tool_version: &'static str,
    pub config: ScenarioConfig,
    pub tolerances: Tolerances,
    pub operations: Vec<OperationReport>,
    pub all_verdicts: bool,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Writes `<dir>/<scenario>_<op>.csv` for every operation with tabular
    /// output.
    pub fn write_csv(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (i, op) in self.operations.iter().enumerate() {
            if let Some(csv) = &op.csv {
                let path = dir.join(format!("{}_{:02}_{}.csv", self.scenario, i, op.op));
                std::fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;
            }
        }
        Ok(())
    }
}

struct Outcome {
    pass: bool,
    result: Value,
    csv: Option<String>,
}

fn outcome(pass: bool, result: impl Serialize, csv: Option<String>) -> Result<Outcome> {
    Ok(Outcome { pass, result: serde_json::to_value(result)?, csv })
}

pub fn run_scenario(cfg: &ScenarioConfig, base_dir: &Path, opts: &RunOptions) -> Result<RunReport> {
    let scenario = cfg.build(base_dir).with_context(|| format!("building scenario `{}`", cfg.id))?;
    let mut operations = Vec::with_capacity(cfg.operations.len());
    for &op in &cfg.operations {
        let start = Instant::now();
        let res = run_op(op, cfg, &scenario, base_dir);
        let wall = if opts.normalize { 0.0 } else { start.elapsed().as_secs_f64() };
        operations.push(match res {
            Ok(o) => OperationReport { op: op.name(), ok: true, pass: o.pass, result: Some(o.result), error: None, wall_time_s: wall, csv: o.csv },
            Err(e) => OperationReport {
                op: op.name(),
                ok: false,
                pass: false,
                result: None,
                error: Some(format!("{e:#}")),
                wall_time_s: wall,
                csv: None,
            },
        });
    }
    let all_verdicts = operations.iter().all(|o| o.pass);
    Ok(RunReport {
        scenario: cfg.id.clone(),
        tool_version: TOOL_VERSION,
        config: cfg.clone(),
        tolerances: cfg.tolerances.clone(),
        operations,
        all_verdicts,
    })
}

fn hamiltonian(s: &Scenario) -> Result<OperatorBundle> {
    Ok(OperatorBundle::assemble(s.graph.clone(), s.potential.clone())?)
}

fn need<'a, T>(x: &'a Option<T>, what: &str) -> Result<&'a T> {
    x.as_ref().ok_or_else(|| anyhow!("operation needs {what} in the config"))
}

fn ids(s: &Scenario, r: &Region) -> Vec<String> {
    r.iter().map(|&x| s.graph.id(x).to_string()).collect()
}

fn run_op(op: Operation, cfg: &ScenarioConfig, s: &Scenario, base_dir: &Path) -> Result<Outcome> {
    let tol = &cfg.tolerances;
    match op {
        Operation::Morse => morse(cfg, s),
        Operation::Bs => {
            let split = Split::from_bundle(&OperatorBundle::base(s.graph.clone())?.with_potential(s.potential.clone())?)?;
            let opts = BsOptions { morse_tol: Some(tol.tol_zero), ..Default::default() };
            let r = bs_bound_check(&split, tol.bs_tol, &opts)?;
            let expected = cfg.expect.n_minus.is_none_or(|n| n == r.n_minus);
            let eig = r.operator.eigenvalues();
            let csv = spectral::eigenvalues_csv(&eig);
            outcome(r.holds && expected, json!({ "report": r, "t_eigenvalues_top": eig.iter().rev().take(16).collect::<Vec<_>>() }), Some(csv))
        }
        Operation::Doob => {
            let h = hamiltonian(s)?;
            let gs = spectral::ground_state(&h)?;
            let doob = doob_transform(&h, &gs.phi)?;
            let residual = conjugation_residual(&h, &doob);
            let q_dev = doob.q_potential.values().iter().fold(0.0f64, |m, q| m.max((q - gs.lambda1).abs()));
            let band = tol.spectrum_tol * h.scale();
            let pass = gs.warning.is_none() && residual <= band && q_dev <= tol.tol_zero * h.scale();
            outcome(
                pass,
                json!({
                    "lambda1": gs.lambda1,
                    "phi_min": gs.phi.iter().copied().fold(f64::INFINITY, f64::min),
                    "conjugation_residual": residual,
                    "q_minus_lambda1_max": q_dev,
                    "warning": gs.warning,
                }),
                Some(vector_csv(s, &gs.phi)),
            )
        }
        Operation::Green => {
            let h = hamiltonian(s)?;
            let ex = need(&s.exhaustion, "an exhaustion")?;
            let probe = need(&s.probe, "a probe")?;
            let p0 = probe.as_slice()[0];
            let p1 = *probe.as_slice().last().unwrap();
            let pairs = [(p0, p0), (p0, p1)];
            let mut rows = Vec::new();
            let mut csv = String::from("level_index,level_size,g_00,g_01\n");
            for (i, level) in ex.levels().iter().enumerate() {
                let g = green_values(&h, level, &pairs)?;
                csv.push_str(&format!("{i},{},{:.16e},{:.16e}\n", level.len(), g[0], g[1]));
                rows.push(g);
            }
            let nonnegative = rows.iter().flatten().all(|&g| g >= 0.0);
            let slack = |a: f64| 1e-10 * a.abs().max(1.0);
            let monotone = rows.windows(2).all(|w| (0..2).all(|j| w[1][j] >= w[0][j] - slack(w[0][j])));
            outcome(
                nonnegative && monotone,
                json!({
                    "pairs": [[s.graph.id(p0), s.graph.id(p0)], [s.graph.id(p0), s.graph.id(p1)]],
                    "values": rows,
                    "monotone": monotone,
                    "nonnegative": nonnegative,
                }),
                Some(csv),
            )
        }
        Operation::Parabolicity => {
            let h = hamiltonian(s)?;
            let ex = need(&s.exhaustion, "an exhaustion")?;
            let probe = need(&s.probe, "a probe")?;
            let v = parabolicity_test(&h, ex, probe, tol.stall_tol, tol.decay_window)?;
            let norms = ex
                .levels()
                .iter()
                .filter(|l| probe.is_subset(l))
                .map(|l| restricted_inv_sqrt_norm(&h, probe, l))
                .collect::<morse_core::Result<Vec<f64>>>()?;
            let expected = match &cfg.expect.parabolicity {
                Some(want) => serde_json::to_value(v.verdict)? == Value::String(want.clone()),
                None => v.verdict != Verdict::Inconclusive,
            };
            let csv = v.to_csv();
            outcome(expected && v.c_monotone && v.green_monotone, json!({ "verdict": v, "inv_sqrt_norms": norms }), Some(csv))
        }
        Operation::Bracket => {
            let h = hamiltonian(s)?;
            let k = need(&s.split_set, "a split set or an exhaustion")?;
            let mut csv = String::from("lambda,n_total,n_k,n_complement,holds\n");
            let mut results = Vec::new();
            for &l in &cfg.bracket_lambdas {
                let r = bracketing_check(&h, k, l, tol.tol_zero)?;
                csv.push_str(&format!("{:.16e},{},{},{},{}\n", r.lambda, r.n_total, r.n_k, r.n_complement, r.holds));
                results.push(r);
            }
            let pass = results.iter().all(|r| r.holds);
            outcome(pass, json!({ "k": ids(s, k), "results": results }), Some(csv))
        }
        Operation::Pipeline => pipeline(cfg, s, base_dir),
        Operation::Kernel => {
            let mut h = hamiltonian(s)?;
            let mut tuned = None;
            if cfg.tune_zero_mode {
                let l1 = spectral::lambda1(&h)?;
                let v = s.potential.plus(&PotentialField::new(vec![-l1; h.dim()]));
                h = h.with_potential(v)?;
                tuned = Some(l1);
            }
            let split = Split::from_bundle(&h)?;
            let k = kernel_check(&split, tol.tol_zero, None)?;
            let pass = k.residuals.iter().all(|&r| r <= tol.kernel_residual);
            outcome(pass, json!({ "tuned_lambda1": tuned, "check": k }), None)
        }
        Operation::Clr => {
            let base = OperatorBundle::base(s.graph.clone())?;
            let p = clr_scaling_probe(&base, &s.potential, &cfg.clr_lambdas, tol.tol_zero)?;
            let mut csv = String::from("lambda,count\n");
            for (l, c) in p.lambdas.iter().zip(&p.counts) {
                csv.push_str(&format!("{l:.16e},{c}\n"));
            }
            outcome(p.monotone, p, Some(csv))
        }
    }
}

fn vector_csv(s: &Scenario, v: &[f64]) -> String {
    let mut out = String::from("vertex,value\n");
    for (i, x) in v.iter().enumerate() {
        out.push_str(&format!("{},{x:.16e}\n", s.graph.id(i)));
    }
    out
}

fn morse(cfg: &ScenarioConfig, s: &Scenario) -> Result<Outcome> {
    let tol = &cfg.tolerances;
    let h = hamiltonian(s)?;
    let count = spectral::morse_index(&h, tol.tol_zero)?;
    let expected = cfg.expect.n_minus.is_none_or(|n| n == count.count);
    let mut result = json!({ "n_minus": count.count, "count": count });
    let mut csv = None;
    if h.dim() <= tol.dense_cap {
        let opts = EigenOptions { dense_cap: tol.dense_cap, tol_zero: tol.tol_zero, ..Default::default() };
        let summary = spectral::eigen_symmetric(&h, &opts)?;
        result["lambda1"] = json!(summary.lambda1);
        csv = Some(spectral::eigenvalues_csv(&summary.eigenvalues));
    }
    outcome(!count.ambiguous && expected, result, csv)
}

fn pipeline_config(tol: &Tolerances) -> PipelineConfig {
    PipelineConfig {
        tol_zero: tol.tol_zero,
        exterior_tol: tol.exterior_tol,
        support_tol: tol.support_tol,
        spectrum_tol: tol.spectrum_tol,
        bs_tol: tol.bs_tol,
        ..Default::default()
    }
}

fn pipeline(cfg: &ScenarioConfig, s: &Scenario, base_dir: &Path) -> Result<Outcome> {
    let tol = &cfg.tolerances;
    let h = hamiltonian(s)?;
    let ex = need(&s.exhaustion, "an exhaustion")?;
    let pcfg = pipeline_config(tol);
    let mut report: PipelineReport = main_theorem_pipeline(&h, ex, &pcfg)?;

    if cfg.doubling {
        let big_cfg = cfg.doubled()?;
        let big = big_cfg.build(base_dir)?;
        let big_h = hamiltonian(&big)?;
        let big_pcfg = PipelineConfig { spectrum_check: false, ..pcfg.clone() };
        let larger = main_theorem_pipeline(&big_h, need(&big.exhaustion, "an exhaustion")?, &big_pcfg)?;
        report.attach_doubling(&larger);
    }

    // The nonnegative shift on the working domain, for small domains only.
    let mut shift = None;
    if let Some(phi) = &report.phi {
        if phi.len() <= spectral::DENSE_COUNT_CAP {
            let (w, _) = h.restricted(ex.last(), BoundaryCondition::Dirichlet)?;
            let ns = nonneg_shift(&w, phi, tol.shift_margin, tol.residual_tol)?;
            let k = report.stable_k.clone().unwrap_or_default();
            let k_region = w.graph().region_from_ids(&k)?;
            let support_region = w.graph().region_from_ids(&ns.residual_support)?;
            shift = Some(json!({
                "l_check": ns.l_check,
                "nonnegative": ns.l_check >= -tol.tol_zero * w.scale(),
                "residual_support": ns.residual_support,
                "support_in_k": support_region.is_subset(&k_region),
                "vtilde_support_check": compact_support_check(&ns.vtilde, &k_region, tol.support_tol),
            }));
        }
    }

    let csv = report.phi.as_ref().map(|phi| {
        let (w, _) = h.restricted(ex.last(), BoundaryCondition::Dirichlet).expect("restriction built by the pipeline");
        let mut out = String::from("vertex,phi\n");
        for (i, x) in phi.iter().enumerate() {
            out.push_str(&format!("{},{x:.16e}\n", w.graph().id(i)));
        }
        out
    });
    let expected = cfg.expect.n_minus.is_none_or(|n| report.morse_index == Some(n));
    let shift_ok = shift.as_ref().is_none_or(|v| v["nonnegative"] == json!(true));
    let pass = report.all_verdicts() && expected && shift_ok;
    let mut value = serde_json::to_value(&report)?;
    // φ goes to the CSV sidecar.
    if let Some(obj) = value.as_object_mut() {
        obj.remove("phi");
    }
    value["nonneg_shift"] = shift.unwrap_or(Value::Null);
    Ok(Outcome { pass, result: value, csv })
}

/// Runs scenarios on up to `jobs` threads; results keep the input order.
pub fn run_batch(cfgs: &[ScenarioConfig], base_dir: &Path, opts: &RunOptions, jobs: usize) -> Vec<Result<RunReport>> {
    let jobs = jobs.max(1).min(cfgs.len().max(1));
    let mut out: Vec<Option<Result<RunReport>>> = (0..cfgs.len()).map(|_| None).collect();
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots = std::sync::Mutex::new(&mut out);
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if i >= cfgs.len() {
                    break;
                }
                let r = run_scenario(&cfgs[i], base_dir, opts);
                slots.lock().expect("no panics while holding the lock")[i] = Some(r);
            });
        }
    });
    out.into_iter().map(|r| r.expect("every slot filled")).collect()
}
