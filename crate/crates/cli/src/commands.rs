use std::path::Path;
use std::sync::Arc;

use anyhow::Context;
use serde_json::{json, Value};

use cantor_dpp::cantor::DEFAULT_LOG2_FLOOR;
use cantor_dpp::fourier::transform_csv;
use cantor_dpp::kernel::eigenvalue_csv;
use cantor_dpp::rigidity::weighted_energy;
use cantor_dpp::sampler::replicate_csv;
use cantor_dpp::{
    construct_theorem2, decay_check, fmt_f64, gram as build_gram, j_integrals, projection_defect,
    sample as draw, transform_c, transform_i, variance_linear_statistic, CantorSet, CantorSpec,
    DecayReport, Error, KernelHandle, SampleConfig, SpecMode, TestFunction, VarianceReport, Which,
};

use crate::manifest::{digest, Outputs};
use crate::svg::{Plot, Series};
use crate::{
    ConstructArgs, DecayArgs, FourierArgs, GramArgs, JArgs, SampleArgs, VarianceArgs, VerifyArgs,
    VerifyFailed,
};

struct LoadedSet {
    spec: CantorSpec,
    set: CantorSet,
    digest: String,
}

fn load(path: &Path) -> anyhow::Result<LoadedSet> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let text = std::str::from_utf8(&bytes).map_err(|e| Error::Spec(format!("spec is not UTF-8: {e}")))?;
    let spec = CantorSpec::from_json(text)?;
    let set = CantorSet::build(&spec)?;
    Ok(LoadedSet {
        spec,
        set,
        digest: digest(&bytes),
    })
}

fn resolve_delta(explicit: Option<f64>, spec: &CantorSpec) -> anyhow::Result<f64> {
    explicit
        .or(spec.delta)
        .ok_or_else(|| Error::Spec("no delta given and the spec carries none".into()).into())
}

fn log_grid(lo: f64, hi: f64, n: usize) -> anyhow::Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && n >= 2) {
        return Err(Error::Domain(format!("need 0 < xi_min < xi_max and at least two points, got ({lo}, {hi}, {n})")).into());
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..n)
        .map(|i| if i + 1 == n { hi } else { (a + (b - a) * i as f64 / (n - 1) as f64).exp() })
        .collect())
}

fn test_function(r: f64, big_r: f64) -> anyhow::Result<TestFunction> {
    Ok(TestFunction::new(r, big_r)?)
}

pub fn construct(out: &Path, a: &ConstructArgs) -> anyhow::Result<()> {
    let mut spec = if let Some(theta) = a.theta {
        let delta = a
            .delta
            .ok_or_else(|| Error::Spec("--theta needs --delta".into()))?;
        CantorSpec::theorem2(theta, delta, a.u_seq)
    } else if let Some(ratios) = &a.ratios {
        let mut s = CantorSpec::from_ratios(ratios.clone(), 0);
        s.max_level = a.max_level;
        s
    } else if let Some(lengths) = &a.lengths {
        CantorSpec::from_lengths(lengths.clone())
    } else {
        return Err(Error::Spec("one of --theta, --ratios or --lengths is required".into()).into());
    };
    if spec.mode != SpecMode::Theorem2 {
        spec.delta = a.delta;
        if spec.mode == SpecMode::Lengths && a.max_level.is_some() {
            spec.max_level = a.max_level;
        }
    } else {
        spec.max_level = a.max_level;
    }
    spec.log2_floor = a.log2_floor;
    let set = CantorSet::build(&spec)?;
    let json = spec.to_json() + "\n";

    let mut outputs = Outputs::new(out);
    outputs.write(&a.name, &json)?;
    if let Some(n) = a.dump_levels {
        outputs.write("intervals.csv", &set.interval_csv(n)?)?;
    }
    let (mc, mi, tail) = set.measures();
    let mut results = json!({
        "mode": spec.mode,
        "depth": set.depth(),
        "measure_C": mc,
        "measure_I": mi,
        "tail_measure": tail,
        "endpoint_error": set.endpoint_error,
        "log2_lengths": set.levels.iter().map(|l| l.log2_length).collect::<Vec<_>>(),
    });
    if let (Some(theta), Some(delta)) = (spec.theta, spec.delta) {
        if spec.mode == SpecMode::Theorem2 {
            let tc = construct_theorem2(theta, delta, a.u_seq, spec.log2_floor.unwrap_or(DEFAULT_LOG2_FLOOR))?;
            results["Theta"] = json!(tc.theta_const);
            results["log2_Theta"] = json!(tc.log2_theta_const);
            results["measure_error"] = json!((mc - theta).abs());
        }
    }
    let params = json!({
        "theta": a.theta,
        "delta": a.delta,
        "u": a.u_seq,
        "ratios": a.ratios,
        "lengths": a.lengths,
        "max_level": a.max_level,
        "log2_floor": a.log2_floor,
        "dump_levels": a.dump_levels,
    });
    outputs.finish("construct", Some(digest(json.as_bytes())), params, results)
}

pub fn fourier(out: &Path, a: &FourierArgs) -> anyhow::Result<()> {
    let loaded = load(&a.set)?;
    let xs = log_grid(a.xi_min, a.xi_max, a.points)?;
    let values: Vec<_> = xs
        .iter()
        .map(|&xi| match a.which {
            Which::I => transform_i(&loaded.set, xi),
            Which::C => transform_c(&loaded.set, xi),
        })
        .collect();
    let mut outputs = Outputs::new(out);
    outputs.write("fourier.csv", &transform_csv(&values))?;
    if a.svg {
        let plot = Plot {
            title: &format!("|transform of {}|", a.which),
            x_label: "xi",
            y_label: "modulus",
            log_x: true,
            log_y: true,
        };
        let series = Series {
            name: a.which.to_string(),
            points: values.iter().map(|v| (v.xi, v.modulus())).collect(),
        };
        outputs.write("fourier.svg", &plot.render(&[series]))?;
    }
    let max_tail = values.iter().map(|v| v.tail_radius).fold(0.0, f64::max);
    let params = json!({
        "set": a.set, "which": a.which, "xi_min": a.xi_min, "xi_max": a.xi_max, "points": a.points,
    });
    outputs.finish("fourier", Some(loaded.digest), params, json!({ "max_tail_radius": max_tail }))
}

pub fn gram(out: &Path, a: &GramArgs) -> anyhow::Result<()> {
    let loaded = load(&a.set)?;
    let h = KernelHandle::new(Arc::new(loaded.set), a.which);
    let g = build_gram(&h, a.window, a.nodes, a.rule)?;
    let d = projection_defect(&g)?;
    let summary = json!({
        "which": a.which,
        "rule": a.rule,
        "window": a.window,
        "nodes": a.nodes,
        "eps_proj": d.eps_proj,
        "lambda_min": d.lambda_min,
        "lambda_max": d.lambda_max,
        "relative_defect": d.relative_defect,
        "trace": d.trace,
        "expected_trace": 2.0 * a.window * h.measure(),
        "hermiticity_defect": g.hermiticity_defect(),
    });
    let mut outputs = Outputs::new(out);
    outputs.write("eigenvalues.csv", &eigenvalue_csv(&g))?;
    outputs.write_json("gram.json", &summary)?;
    let params = json!({
        "set": a.set, "which": a.which, "window": a.window, "nodes": a.nodes, "rule": a.rule,
    });
    outputs.finish("gram", Some(loaded.digest), params, summary)
}

fn decay_summary(r: &DecayReport) -> Value {
    json!({
        "passes": r.passes(),
        "A": r.a_const,
        "kappa": r.kappa,
        "lambda_I": r.lambda_i,
        "lambda_C": r.lambda_c,
        "ratio_sup_I": r.ratio_sup_i,
        "ratio_sup_C": r.ratio_sup_c,
        "series_violations": r.series_violations,
        "summable": r.summable,
        "warnings": r.warnings,
    })
}

pub fn decay(out: &Path, a: &DecayArgs) -> anyhow::Result<()> {
    let loaded = load(&a.set)?;
    let delta = resolve_delta(a.delta, &loaded.spec)?;
    let report = decay_check(&loaded.set, delta, a.xi_max, a.grid)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let mut outputs = Outputs::new(out);
    outputs.write("decay.csv", &report.csv())?;
    outputs.write_json("decay.json", &report)?;
    if a.svg {
        let plot = Plot {
            title: "sine-series majorant",
            x_label: "xi",
            y_label: "value",
            log_x: true,
            log_y: true,
        };
        let series = [
            Series {
                name: "lhs + slack".into(),
                points: report.rows.iter().map(|r| (r.xi, r.lhs + r.slack)).collect(),
            },
            Series {
                name: "kappa envelope".into(),
                points: report.rows.iter().map(|r| (r.xi, r.rhs)).collect(),
            },
        ];
        outputs.write("decay.svg", &plot.render(&series))?;
    }
    let params = json!({ "set": a.set, "delta": delta, "xi_max": a.xi_max, "grid": a.grid });
    outputs.finish("decay-check", Some(loaded.digest), params, decay_summary(&report))
}

/// Variance reports over `radii`, with the decay bound attached when `delta` is known.
fn variance_reports(
    set: &CantorSet,
    which: Which,
    r: f64,
    radii: &[f64],
    delta: Option<f64>,
    tol: f64,
) -> anyhow::Result<Vec<VarianceReport>> {
    let h = KernelHandle::new(Arc::new(set.clone()), which);
    let lambda = match delta {
        Some(d) => {
            let rep = decay_check(set, d, cantor_dpp::rigidity::DEFAULT_XI_MAX, cantor_dpp::rigidity::DEFAULT_GRID)?;
            Some(match which {
                Which::C => rep.lambda_c,
                Which::I => rep.lambda_i,
            })
        }
        None => None,
    };
    let mut reports = Vec::with_capacity(radii.len());
    for &big_r in radii {
        let tf = test_function(r, big_r)?;
        let mut rep = variance_linear_statistic(&h, &tf, tol)?;
        if let (Some(d), Some(l)) = (delta, lambda) {
            let (e, _) = weighted_energy(&tf, d, tol)?;
            rep.attach_bound(l, e);
        }
        reports.push(rep);
    }
    Ok(reports)
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn variance(out: &Path, a: &VarianceArgs) -> anyhow::Result<()> {
    let loaded = load(&a.set)?;
    let delta = a.delta.or(loaded.spec.delta);
    let reports = variance_reports(&loaded.set, a.which, a.r, &a.radii, delta, a.tol)?;
    let mut csv = String::from("R,V,error,energy,lambda,V_bound\n");
    for rep in &reports {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt_f64(rep.big_r),
            fmt_f64(rep.v),
            fmt_f64(rep.error),
            opt(rep.energy),
            opt(rep.lambda),
            opt(rep.v_bound)
        ));
    }
    let decreasing = reports.windows(2).all(|w| w[1].v < w[0].v);
    let bounds_hold = reports.iter().all(|r| r.bound_holds() != Some(false));
    let mut outputs = Outputs::new(out);
    outputs.write("variance.csv", &csv)?;
    outputs.write_json("variance.json", &reports)?;
    if a.svg {
        let plot = Plot {
            title: "variance of the linear statistic",
            x_label: "R",
            y_label: "V",
            log_x: true,
            log_y: true,
        };
        let series = Series {
            name: format!("K_{}", a.which),
            points: reports.iter().map(|r| (r.big_r, r.v)).collect(),
        };
        outputs.write("variance.svg", &plot.render(&[series]))?;
    }
    let params = json!({
        "set": a.set, "which": a.which, "r": a.r, "radii": a.radii, "delta": delta, "tol": a.tol,
    });
    let results = json!({ "V": reports.iter().map(|r| r.v).collect::<Vec<_>>(), "decreasing": decreasing, "bounds_hold": bounds_hold });
    outputs.finish("variance-scan", Some(loaded.digest), params, results)
}

pub fn jbounds(out: &Path, a: &JArgs) -> anyhow::Result<()> {
    let mut reports = Vec::with_capacity(a.radii.len());
    for &big_r in &a.radii {
        reports.push(j_integrals(&test_function(a.r, big_r)?, a.delta, a.tol)?);
    }
    let mut csv = String::from("R,J1,J2,J3,J4,bound1,bound2,bound3,bound4,c_r,total\n");
    for rep in &reports {
        let cells: Vec<String> = std::iter::once(rep.big_r)
            .chain(rep.j)
            .chain(rep.bounds)
            .chain([rep.c_r, rep.total])
            .map(fmt_f64)
            .collect();
        csv.push_str(&cells.join(","));
        csv.push('\n');
    }
    let holds: Vec<[bool; 4]> = reports.iter().map(|r| r.holds()).collect();
    let mut outputs = Outputs::new(out);
    outputs.write("jbounds.csv", &csv)?;
    outputs.write_json("jbounds.json", &reports)?;
    if a.svg {
        let plot = Plot {
            title: "domain integrals",
            x_label: "R",
            y_label: "J",
            log_x: true,
            log_y: true,
        };
        let series: Vec<Series> = (0..4)
            .map(|i| Series {
                name: format!("J{}", i + 1),
                points: reports.iter().map(|r| (r.big_r, r.j[i])).collect(),
            })
            .collect();
        outputs.write("jbounds.svg", &plot.render(&series))?;
    }
    let digest_src = serde_json::to_vec(&json!({ "r": a.r, "radii": a.radii, "delta": a.delta }))?;
    let params = json!({ "r": a.r, "radii": a.radii, "delta": a.delta, "tol": a.tol });
    outputs.finish("jbounds", Some(digest(&digest_src)), params, json!({ "holds": holds }))
}

pub fn sample(out: &Path, a: &SampleArgs) -> anyhow::Result<()> {
    let loaded = load(&a.set)?;
    let tf = test_function(a.r, a.big_r)?;
    let cfg = SampleConfig {
        which: a.which,
        window: a.window,
        nodes: a.nodes,
        replicates: a.reps,
        seed: a.seed,
    };
    let run = draw(&cfg, &loaded.set)?;
    if run.eigen_clamp_events > 0 {
        eprintln!("warning: {} eigenvalues clamped into [0, 1]", run.eigen_clamp_events);
    }
    let summary = run.summary(&tf)?;
    let mut outputs = Outputs::new(out);
    outputs.write("samples.csv", &replicate_csv(&run.samples, &tf))?;
    outputs.write_json("sample_summary.json", &summary)?;
    let params = json!({
        "set": a.set, "which": a.which, "window": a.window, "nodes": a.nodes,
        "reps": a.reps, "seed": a.seed, "r": a.r, "R": a.big_r,
    });
    let results = json!({
        "count_mean": summary.count.mean,
        "expected_count": summary.expected_count,
        "S_phi_variance": summary.s_phi.variance,
        "count_mismatches": summary.count_mismatches,
    });
    outputs.finish("sample", Some(loaded.digest), params, results)
}

pub fn verify(out: &Path, a: &VerifyArgs) -> anyhow::Result<()> {
    let loaded = load(&a.set)?;
    let delta = resolve_delta(a.delta, &loaded.spec)?;
    let mut failures = Vec::new();

    let decay = decay_check(&loaded.set, delta, a.xi_max, a.grid)?;
    if !decay.passes() {
        failures.push(format!(
            "decay check: {} series, {} I-ratio, {} C-ratio violations",
            decay.series_violations, decay.lambda_violations_i, decay.lambda_violations_c
        ));
    }
    let mut j_reports = Vec::new();
    for &big_r in &a.j_radii {
        let rep = j_integrals(&test_function(a.r, big_r)?, delta, a.tol)?;
        for (i, ok) in rep.holds().iter().enumerate() {
            if !ok {
                failures.push(format!("J{} = {} exceeds {} at R = {big_r}", i + 1, rep.j[i], rep.bounds[i]));
            }
        }
        j_reports.push(rep);
    }
    let v_reports = variance_reports(&loaded.set, a.which, a.r, &a.v_radii, Some(delta), a.tol)?;
    for rep in &v_reports {
        if rep.bound_holds() != Some(true) {
            failures.push(format!("V = {} exceeds its bound {:?} at R = {}", rep.v, rep.v_bound, rep.big_r));
        }
    }
    let report = json!({
        "passes": failures.is_empty(),
        "failures": failures,
        "decay": decay_summary(&decay),
        "jbounds": j_reports,
        "variance": v_reports,
    });
    let mut outputs = Outputs::new(out);
    outputs.write_json("verify.json", &report)?;
    let params = json!({
        "set": a.set, "delta": delta, "which": a.which, "r": a.r, "j_radii": a.j_radii,
        "v_radii": a.v_radii, "xi_max": a.xi_max, "grid": a.grid, "tol": a.tol,
    });
    outputs.finish("verify", Some(loaded.digest), params, json!({ "passes": failures.is_empty() }))?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(VerifyFailed(failures).into())
    }
}
