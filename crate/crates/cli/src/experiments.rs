//! One function per subcommand, each producing a [`Report`]. The `suite`
//! experiment chains the whole battery, including the checks that have no
//! standalone subcommand.

use anyhow::Result;
use serde_json::{json, Value};

use chaos_core::constants::{
    basis_constant, equivalence_ratios, ruc_average, uncond_constant, RucMode,
};
use chaos_core::constructions::{
    block_sum_lower_bound, interpolation_check, log_witness_from_bounded, log_witness_from_scale,
    BlockSpec,
};
use chaos_core::dyadic::{equimeasurable, DyadicStep};
use chaos_core::sampling::{
    all_pairs, gaussian_coeffs, random_pattern, random_step, sparse_pm_coeffs, standard_normal,
    stream_rng, uniform_in, unit_f64,
};
use chaos_core::spaces::{
    legendre_conjugate, lp_norm, marcinkiewicz_norm, marcinkiewicz_to_psi_constant,
    nfunction_conjugate, norm, orlicz_norm, psi_quasinorm, NFunction, NormSpec,
};
use chaos_core::square::{compare_line_and_square, mixed_norm_chain, DyadicStep2D};
use chaos_core::walsh::{sigma_k, synthesize, ChaosCoeffs, ChaosPair};

use crate::config::{usage, Params};
use crate::report::{Check, Report};

fn exact_tol(spec: &NormSpec) -> f64 {
    match spec {
        NormSpec::Lp { .. } | NormSpec::Sup => 1e-12,
        _ => 1e-9,
    }
}

fn boolean_check(name: &str, anchor: &str, pass: bool) -> Check {
    Check {
        name: name.to_string(),
        paper_anchor: anchor.to_string(),
        lhs: if pass { 1.0 } else { 0.0 },
        rhs: 1.0,
        margin: if pass { 0.0 } else { -1.0 },
        pass,
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &str) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read input {path}: {e}")))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("input {path}: {e}")))
}

fn coeffs_from_params(params: &Params, default_max_index: u64) -> Result<ChaosCoeffs> {
    if let Some(Value::String(path)) = params.get("coeffs") {
        return read_json::<ChaosCoeffs>(path);
    }
    let max_index = params.u64_or("max_index", default_max_index)? as u32;
    if !(2..=16).contains(&max_index) {
        return Err(usage("parameter `max_index` must lie in 2..=16"));
    }
    let family = params.str_or("family", "gaussian")?;
    let pairs = all_pairs(max_index);
    let mut rng = stream_rng(params.seed, 0);
    Ok(match family.as_str() {
        "gaussian" => gaussian_coeffs(&pairs, &mut rng),
        "sparse" => sparse_pm_coeffs(&pairs, 0.25, &mut rng),
        other => return Err(usage(format!("unknown coefficient family `{other}`"))),
    })
}

pub fn gen(params: &Params) -> Result<Report> {
    let kind = params.str_or("kind", "step")?;
    let count = params.u64_or("count", 1)?;
    let level = params.level("level", 6)?;
    let amplitude = params.f64_or("amplitude", 1.0)?;
    let max_index = params.u64_or("max_index", 6)? as u32;
    let density = params.f64_or("density", 0.25)?;

    let mut items = Vec::new();
    for stream in 0..count {
        let mut rng = stream_rng(params.seed, stream);
        let value = match kind.as_str() {
            "step" => serde_json::to_value(random_step(level, amplitude, &mut rng))?,
            "coeffs" => {
                let pairs = all_pairs(max_index);
                serde_json::to_value(gaussian_coeffs(&pairs, &mut rng))?
            }
            "sparse-coeffs" => {
                let pairs = all_pairs(max_index);
                serde_json::to_value(sparse_pm_coeffs(&pairs, density, &mut rng))?
            }
            "pattern" => {
                let pairs = all_pairs(max_index);
                serde_json::to_value(random_pattern(&pairs, &mut rng))?
            }
            "square" => {
                let cells = 1usize << (2 * level.min(10));
                let values: Vec<f64> = (0..cells)
                    .map(|_| amplitude * (2.0 * unit_f64(&mut rng) - 1.0))
                    .collect();
                serde_json::to_value(DyadicStep2D::new(level.min(10), level.min(10), values)?)?
            }
            other => return Err(usage(format!("unknown gen kind `{other}`"))),
        };
        items.push(value);
    }

    let mut report = Report::new("gen", params.echo("gen"));
    report.witnesses = json!({ "kind": kind, "items": items });
    Ok(report)
}

pub fn norm_value(params: &Params) -> Result<Report> {
    let spec = params.norm_spec("spec", "l2")?;
    let step = if let Some(Value::String(path)) = params.get("input") {
        read_json::<DyadicStep>(path)?
    } else {
        let level = params.level("level", 6)?;
        let amplitude = params.f64_or("amplitude", 1.0)?;
        random_step(level, amplitude, &mut stream_rng(params.seed, 0))
    };
    let value = norm(&step, &spec)?;
    let mut report = Report::new("norm", params.echo("norm"));
    report
        .checks
        .push(Check::value(&format!("norm {spec}"), "-", value));
    report.witnesses = json!({ "level": step.level(), "cells": step.len() });
    Ok(report)
}

pub fn basis_constant_experiment(params: &Params) -> Result<Report> {
    let spec = params.norm_spec("spec", "l2")?;
    let max_pairs = params.u64_or("max_pairs", 21)?;
    let trials = params.u64_or("trials", 200)?;
    if !(1..=21).contains(&max_pairs) {
        return Err(usage("parameter `max_pairs` must lie in 1..=21"));
    }
    if trials == 0 {
        return Err(usage("parameter `trials` must be at least 1"));
    }
    let result = basis_constant(&spec, max_pairs, trials, params.seed)?;
    let mut report = Report::new("basis-constant", params.echo("basis-constant"));
    report.checks.push(Check::upper(
        "partial-sum ratio max",
        "(6')",
        result.max_ratio,
        3.0,
        1e-9,
    ));
    if spec == NormSpec::L2 {
        report.checks.push(Check::equal(
            "orthogonal projection ratio",
            "(7)",
            result.max_ratio,
            1.0,
            1e-12,
        ));
    }
    report.witnesses = serde_json::to_value(&result)?;
    Ok(report)
}

pub fn uncond_experiment(params: &Params) -> Result<Report> {
    let spec = params.norm_spec("spec", "l2")?;
    let coeffs = coeffs_from_params(params, 5)?;
    if coeffs.len() > chaos_core::constants::EXHAUSTIVE_PATTERN_LIMIT {
        return Err(usage(format!(
            "{} pairs exceed the exhaustive limit {}",
            coeffs.len(),
            chaos_core::constants::EXHAUSTIVE_PATTERN_LIMIT
        )));
    }
    let result = uncond_constant(&spec, &coeffs)?;
    let mut report = Report::new("uncond", params.echo("uncond"));
    report.checks.push(Check::lower(
        "max multiplier ratio",
        "(2)",
        result.max_ratio,
        1.0,
        1e-12,
    ));
    if spec == NormSpec::L2 {
        report.checks.push(Check::equal(
            "multiplier isometry in L2",
            "(2)",
            result.max_ratio,
            1.0,
            1e-12,
        ));
    }
    report.witnesses = serde_json::to_value(&result)?;
    Ok(report)
}

pub fn khintchine_experiment(params: &Params) -> Result<Report> {
    let spec = params.norm_spec("spec", "l1")?;
    let max_index = params.u64_or("max_index", 8)? as u32;
    let trials = params.u64_or("trials", 500)?;
    if !(2..=10).contains(&max_index) {
        return Err(usage("parameter `max_index` must lie in 2..=10"));
    }
    let result = equivalence_ratios(&spec, max_index, trials, params.seed)?;
    let mut report = Report::new("khintchine", params.echo("khintchine"));
    report.checks.push(Check::lower(
        "lower equivalence ratio",
        "(9)",
        result.min_ratio,
        1e-9,
        0.0,
    ));
    match spec {
        NormSpec::L1 => {
            report.checks.push(Check::upper(
                "upper ratio (Cauchy-Schwarz into L2)",
                "(8)",
                result.max_ratio,
                1.0,
                1e-12,
            ));
        }
        NormSpec::L2 => {
            report.checks.push(Check::equal(
                "Parseval ratio max",
                "(7)",
                result.max_ratio,
                1.0,
                1e-12,
            ));
            report.checks.push(Check::equal(
                "Parseval ratio min",
                "(7)",
                result.min_ratio,
                1.0,
                1e-12,
            ));
        }
        _ => {}
    }
    report.checks.push(Check::value(
        "two-sided constant",
        "(7)",
        result.max_ratio.max(1.0 / result.min_ratio),
    ));
    report.witnesses = serde_json::to_value(&result)?;
    Ok(report)
}

pub fn ruc_experiment(params: &Params) -> Result<Report> {
    let spec = params.norm_spec("spec", "l1")?;
    let coeffs = coeffs_from_params(params, 5)?;
    let mode = params.str_or("mode", "both")?;
    let samples = params.u64_or("samples", 10_000)?;
    let mut report = Report::new("ruc", params.echo("ruc"));

    let exact = if mode == "exact" || mode == "both" {
        if coeffs.len() > chaos_core::constants::EXACT_RUC_LIMIT {
            return Err(usage(format!(
                "{} pairs exceed the exact-average limit {}",
                coeffs.len(),
                chaos_core::constants::EXACT_RUC_LIMIT
            )));
        }
        let exact = ruc_average(&spec, &coeffs, RucMode::Exact, params.seed)?;
        report.checks.push(Check::lower(
            "average above min pattern",
            "(10)",
            exact.mean,
            exact.min_norm,
            1e-12,
        ));
        report.checks.push(Check::upper(
            "average below max pattern",
            "(8)",
            exact.mean,
            exact.max_norm,
            1e-12,
        ));
        if matches!(spec, NormSpec::Lp { p } if p <= 2.0) {
            report.checks.push(Check::upper(
                "average below l2 coefficient norm",
                "(8)",
                exact.mean,
                coeffs.l2_norm(),
                1e-12,
            ));
        }
        Some(exact)
    } else {
        None
    };

    let monte = if mode == "mc" || mode == "both" {
        let mc = ruc_average(&spec, &coeffs, RucMode::MonteCarlo { samples }, params.seed)?;
        report
            .checks
            .push(Check::value("monte carlo average", "(8)", mc.mean));
        report.checks.push(Check::value(
            "monte carlo standard error",
            "(8)",
            mc.std_error.unwrap_or(f64::NAN),
        ));
        Some(mc)
    } else {
        None
    };

    if let (Some(exact), Some(mc)) = (&exact, &monte) {
        report.checks.push(Check::equal(
            "monte carlo within 4 standard errors",
            "(8)",
            mc.mean,
            exact.mean,
            4.0 * mc.std_error.unwrap_or(0.0),
        ));
    }
    report.witnesses = json!({ "exact": exact, "monte_carlo": monte });
    Ok(report)
}

fn block_spec_from_params(params: &Params, k_max: usize, trial: u64) -> Result<BlockSpec> {
    let weights: Vec<f64> = match params.get("c") {
        None | Some(Value::String(_)) if params.str_or("c", "random")? == "random" => {
            let mut rng = stream_rng(params.seed, trial);
            (0..k_max)
                .map(|_| uniform_in(0.05, 2.0, &mut rng))
                .collect()
        }
        Some(Value::Array(values)) => values
            .iter()
            .map(|v| {
                v.as_f64()
                    .ok_or_else(|| usage("parameter `c` must be an array of positive numbers"))
            })
            .collect::<Result<_>>()?,
        _ => return Err(usage("parameter `c` must be \"random\" or an array")),
    };
    if weights.len() < k_max {
        return Err(usage("parameter `c` must supply one weight per block"));
    }
    match params.get("n") {
        None => BlockSpec::powers_of_two(weights).map_err(|e| usage(e.to_string())),
        Some(Value::String(s)) if s == "powers-of-two" => {
            BlockSpec::powers_of_two(weights).map_err(|e| usage(e.to_string()))
        }
        Some(Value::Array(values)) => {
            let bounds: Vec<u32> = values
                .iter()
                .map(|v| {
                    v.as_u64()
                        .map(|x| x as u32)
                        .ok_or_else(|| usage("parameter `n` must be an array of integers"))
                })
                .collect::<Result<_>>()?;
            BlockSpec::new(bounds, weights).map_err(|e| usage(e.to_string()))
        }
        _ => Err(usage("parameter `n` must be \"powers-of-two\" or an array")),
    }
}

pub fn lemma2_experiment(params: &Params) -> Result<Report> {
    let k_max = params.u64_or("K", 2)? as usize;
    let trials = params.u64_or("trials", 20)?;
    let mut report = Report::new("lemma2", params.echo("lemma2"));

    let mut min_margin = vec![f64::INFINITY; k_max];
    let mut min_tail_share = vec![f64::INFINITY; k_max];
    let mut level_used = 0;
    for trial in 0..trials {
        let spec = block_spec_from_params(params, k_max, trial)?;
        if k_max > spec.blocks() {
            return Err(usage("parameter `K` exceeds the supplied block count"));
        }
        let level = params.level("level", spec.bounds()[k_max])?;
        if level < spec.bounds()[k_max] {
            return Err(usage(format!(
                "level {level} below the checkpoint grid {}",
                spec.bounds()[k_max]
            )));
        }
        level_used = level;
        let result = block_sum_lower_bound(&spec, k_max, level)?;
        for cp in &result.checkpoints {
            min_margin[cp.k - 1] = min_margin[cp.k - 1].min(cp.margin);
        }
        for ts in &result.tail_sets {
            min_tail_share[ts.k - 1] = min_tail_share[ts.k - 1].min(ts.measure / ts.required);
        }
    }
    for k in 1..=k_max {
        report.checks.push(Check::lower(
            &format!("rearrangement bound margin at t_{k} (min over trials)"),
            "(11)",
            min_margin[k - 1],
            0.0,
            1e-12,
        ));
        report.checks.push(Check::lower(
            &format!("tail-set measure over t_{k} (min over trials)"),
            "Lemma 2 proof",
            min_tail_share[k - 1],
            1.0,
            0.0,
        ));
    }
    report.witnesses = json!({ "trials": trials, "level": level_used });
    Ok(report)
}

pub fn prop2_experiment(params: &Params) -> Result<Report> {
    let epsilon = params.f64_or("eps", 0.25)?;
    let k_max = params.u64_or("K", 2)? as usize;
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(usage("parameter `eps` must lie in (0, 1/2)"));
    }
    if !(1..=3).contains(&k_max) {
        return Err(usage("parameter `K` must lie in 1..=3"));
    }
    let level = params.level("level", 1 << (k_max + 1))?;
    let result = log_witness_from_bounded(epsilon, k_max, level, params.seed)?;

    let mut report = Report::new("prop2", params.echo("prop2"));
    report.checks.push(Check::lower(
        "witnessed lower constant b",
        "Proposition 2",
        result.witnessed_constant,
        1e-9,
        0.0,
    ));
    report.checks.push(Check::upper(
        "sup of signed sum",
        "(12)",
        result.x_sup,
        result.x_sup_bound,
        1e-12,
    ));
    report.checks.push(boolean_check(
        "pair-count floor",
        "m_k >= 2^{2k-2}",
        result.pair_count_pass,
    ));
    for cp in &result.checkpoints {
        report.checks.push(Check::lower(
            &format!("chain floor at t_{}", cp.k),
            "Proposition 2 proof",
            cp.lhs,
            cp.chain_rhs,
            1e-12,
        ));
    }
    report.witnesses = serde_json::to_value(&result)?;
    Ok(report)
}

pub fn prop3_experiment(params: &Params) -> Result<Report> {
    let epsilon = params.f64_or("eps", 0.0)?;
    let delta = params.f64_or("delta", 0.1)?;
    let k_max = params.u64_or("K", 2)? as usize;
    let v = match params.get("v") {
        None => None,
        Some(value) => Some(
            value
                .as_f64()
                .ok_or_else(|| usage("parameter `v` must be a number"))?,
        ),
    };
    if !(epsilon > -0.5 && epsilon < 0.5) {
        return Err(usage("parameter `eps` must lie in (-1/2, 1/2)"));
    }
    if !(delta > 0.0 && delta < 0.25 - epsilon / 2.0) {
        return Err(usage("parameter `delta` must lie in (0, 1/4 - eps/2)"));
    }
    if !(1..=3).contains(&k_max) {
        return Err(usage("parameter `K` must lie in 1..=3"));
    }
    let level = params.level("level", 1 << (k_max + 1))?;
    let result = log_witness_from_scale(epsilon, delta, v, k_max, level, params.seed)?;

    let mut report = Report::new("prop3", params.echo("prop3"));
    report.checks.push(Check::lower(
        "witnessed lower constant d",
        "(14)",
        result.witnessed_constant,
        1e-9,
        0.0,
    ));
    for b in &result.block_norms {
        report.checks.push(Check::lower(
            &format!("M(phi_-1/2) norm over 2^k at k={}", b.k),
            "(15)",
            b.half_ratio,
            1e-9,
            0.0,
        ));
        report.checks.push(Check::value(
            &format!("Marcinkiewicz/Orlicz ratio at k={}", b.k),
            "(15)",
            b.marcinkiewicz_orlicz_ratio,
        ));
        report.checks.push(boolean_check(
            &format!("sup-form interpolation at k={}", b.k),
            "(16)",
            b.sup_form_pass,
        ));
        report.checks.push(Check::value(
            &format!("interpolated growth ratio at k={}", b.k),
            "(17)",
            b.interpolated_ratio,
        ));
    }
    for cp in &result.checkpoints {
        report.checks.push(Check::lower(
            &format!("chain floor at t_{}", cp.k),
            "Proposition 3 proof",
            cp.lhs,
            cp.chain_rhs,
            1e-12,
        ));
    }
    report.witnesses = serde_json::to_value(&result)?;
    Ok(report)
}

pub fn interp_experiment(params: &Params) -> Result<Report> {
    let count = params.u64_or("count", 500)?;
    let base_level = params.level("level", 6)?;
    let amplitude = params.f64_or("amplitude", 4.0)?;
    let exponents = match params.get("u") {
        None => vec![0.25, 0.5, 0.75],
        Some(Value::Number(n)) => vec![n.as_f64().unwrap_or(0.5)],
        Some(Value::Array(values)) => values
            .iter()
            .map(|v| v.as_f64().ok_or_else(|| usage("`u` must hold numbers")))
            .collect::<Result<_>>()?,
        _ => return Err(usage("parameter `u` must be a number or an array")),
    };
    for &u in &exponents {
        if !(u > 0.0 && u < 1.0) {
            return Err(usage("interpolation exponents must lie in (0, 1)"));
        }
    }

    let mut violations = 0u64;
    let mut max_end_to_end = 0.0f64;
    for t in 0..count {
        let level = 3 + (t % (base_level.max(4) as u64 - 2)) as u32;
        let x = random_step(level, amplitude, &mut stream_rng(params.seed, t));
        for &u in &exponents {
            let check = interpolation_check(&x, u)?;
            if !check.sup_form_pass {
                violations += 1;
            }
            max_end_to_end = max_end_to_end.max(check.end_to_end_c);
        }
    }
    let mut report = Report::new("interp", params.echo("interp"));
    report.checks.push(Check::upper(
        "sup-form violations",
        "(16)",
        violations as f64,
        0.0,
        0.0,
    ));
    report.checks.push(Check::value(
        "max end-to-end constant",
        "(16)",
        max_end_to_end,
    ));
    Ok(report)
}

pub fn mixed_experiment(params: &Params) -> Result<Report> {
    let a = match params.str_or("A", "M")?.as_str() {
        "M" => NFunction::ExpM,
        "N" => NFunction::ExpSquareN,
        other => return Err(usage(format!("unknown N-function `{other}` (use M or N)"))),
    };
    let level_s = params.level("level_s", 6)?;
    let level_t = params.level("level_t", 6)?;
    let count = params.u64_or("count", 500)?;
    let amplitude = params.f64_or("amplitude", 4.0)?;

    let mut first_violations = 0u64;
    let mut max_ratio = 0.0f64;
    for t in 0..count {
        let mut rng = stream_rng(params.seed, t);
        let cells = 1usize << (level_s + level_t);
        let values: Vec<f64> = (0..cells)
            .map(|_| amplitude * (2.0 * unit_f64(&mut rng) - 1.0))
            .collect();
        let x = DyadicStep2D::new(level_s, level_t, values)?;
        let chain = mixed_norm_chain(&x, a)?;
        if !chain.first_pass {
            first_violations += 1;
        }
        max_ratio = max_ratio.max(chain.l1_to_product_ratio);
    }
    let mut report = Report::new("mixed", params.echo("mixed"));
    report.checks.push(Check::upper(
        "product norm above sup-mixed norm (violations)",
        "Lemma 1",
        first_violations as f64,
        0.0,
        0.0,
    ));
    report.checks.push(Check::value(
        "max mean-slice over product ratio",
        "Lemma 1",
        max_ratio,
    ));
    Ok(report)
}

pub fn square_compare_experiment(params: &Params) -> Result<Report> {
    let spec = params.norm_spec("spec", "l1")?;
    let max_index = params.u64_or("max_index", 6)? as u32;
    let trials = params.u64_or("trials", 100)?;
    if !(2..=10).contains(&max_index) {
        return Err(usage("parameter `max_index` must lie in 2..=10"));
    }
    let level = params.level("level", (max_index - 1).max(1) as u64 as u32)?;
    let pairs = all_pairs(max_index);

    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut worst_dev = 0.0f64;
    for t in 0..trials {
        let mut rng = stream_rng(params.seed, t);
        let coeffs = loop {
            let c = gaussian_coeffs(&pairs, &mut rng);
            if c.l2_norm() > 0.0 {
                break c;
            }
        };
        let cmp = compare_line_and_square(&coeffs, &spec, level)?;
        lo = lo.min(cmp.ratio);
        hi = hi.max(cmp.ratio);
        worst_dev = worst_dev.max((cmp.ratio - 1.0).abs());
    }
    let mut report = Report::new("square-compare", params.echo("square-compare"));
    report
        .checks
        .push(Check::value("line/square ratio min", "Remark 3", lo));
    report
        .checks
        .push(Check::value("line/square ratio max", "Remark 3", hi));
    if spec == NormSpec::L2 {
        report.checks.push(Check::upper(
            "max |ratio - 1| in L2",
            "Remark 3",
            worst_dev,
            0.0,
            1e-10,
        ));
    }
    report.witnesses = json!({ "level": level });
    Ok(report)
}

// Battery groups with no standalone subcommand.

fn sigma_contraction_checks(seed: u64) -> Result<Vec<Check>> {
    let mut worst_excess = f64::NEG_INFINITY;
    for t in 0..500u64 {
        let x = random_step(8, 4.0, &mut stream_rng(seed, t));
        for k in 0..=8 {
            let avg = sigma_k(&x, k);
            for p in [1.0, 2.0, 4.0, f64::INFINITY] {
                worst_excess = worst_excess.max(lp_norm(&avg, p)? - lp_norm(&x, p)?);
            }
        }
    }
    Ok(vec![Check::upper(
        "dyadic averaging Lp excess (500 steps, k <= 8)",
        "(4)",
        worst_excess,
        0.0,
        1e-12,
    )])
}

fn split_equimeasurability_checks(seed: u64) -> Result<Vec<Check>> {
    let specs = [
        NormSpec::L1,
        NormSpec::L2,
        NormSpec::L4,
        NormSpec::Sup,
        NormSpec::orlicz_m(),
        NormSpec::orlicz_n(),
        NormSpec::Marcinkiewicz { epsilon: -0.5 },
        NormSpec::Marcinkiewicz { epsilon: 0.0 },
        NormSpec::Marcinkiewicz { epsilon: 0.2 },
    ];
    let mut equim_failures = 0u64;
    let mut norm_violations = 0u64;
    for t in 0..200u64 {
        let mut rng = stream_rng(seed, t);
        let k = 2 + (t % 4) as u32;
        let level = k + 3;
        let pair_step = |i: u32, j: u32| {
            let mut c = ChaosCoeffs::new();
            c.set(ChaosPair::new(i, j).expect("valid pair"), 1.0);
            synthesize(&c, level).expect("level is fine")
        };
        let p = (2 + (unit_f64(&mut rng) * (k as f64)) as u32).min(k + 1);
        let q = (p + (unit_f64(&mut rng) * ((k + 1 - p) as f64 + 1.0)) as u32).min(k + 1);
        let mut f = DyadicStep::zero(level)?;
        let mut g = DyadicStep::zero(level)?;
        for j in 2..=p {
            f = f.add(&pair_step(j, k + 2).scale(standard_normal(&mut rng)));
        }
        for j in p + 1..=q {
            g = g.add(&pair_step(j, k + 2).scale(standard_normal(&mut rng)));
        }
        if t % 2 == 1 {
            g = g.add(&pair_step(1, k + 3).scale(standard_normal(&mut rng)));
        }
        let u = f.add(&g);
        let v = f.sub(&g);
        if !equimeasurable(&u, &v, 0.0) {
            equim_failures += 1;
        }
        for spec in &specs {
            let lhs = norm(&f, spec)?;
            let rhs = norm(&u, spec)?;
            if lhs > rhs + exact_tol(spec) * (1.0 + rhs) {
                norm_violations += 1;
            }
        }
    }
    Ok(vec![
        Check::upper(
            "split equimeasurability failures (tolerance 0)",
            "(5)",
            equim_failures as f64,
            0.0,
            0.0,
        ),
        Check::upper(
            "halving inequality violations",
            "(5)",
            norm_violations as f64,
            0.0,
            0.0,
        ),
    ])
}

fn psi_checks(seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for eps in [-0.5, 0.0, 0.2] {
        let c_phi = marcinkiewicz_to_psi_constant(eps)?;
        let mut forward = 0u64;
        let mut converse = 0u64;
        for t in 0..500u64 {
            let level = 3 + (t % 4) as u32;
            let x = random_step(level, 4.0, &mut stream_rng(seed, 7000 + t));
            let psi = psi_quasinorm(&x, eps)?;
            let marc = marcinkiewicz_norm(&x, eps)?;
            if psi > marc + 1e-12 {
                forward += 1;
            }
            if marc > c_phi * psi * (1.0 + 1e-9) {
                converse += 1;
            }
        }
        checks.push(Check::upper(
            &format!("quasi-norm dominance violations (eps = {eps})"),
            "Corollary 4",
            forward as f64,
            0.0,
            0.0,
        ));
        checks.push(Check::upper(
            &format!("converse with computed constant {c_phi:.6} (eps = {eps})"),
            "Corollary 4",
            converse as f64,
            0.0,
            0.0,
        ));
    }
    Ok(checks)
}

fn orlicz_oracle_checks() -> Result<Vec<Check>> {
    let one = DyadicStep::constant(1.0)?;
    let half = DyadicStep::indicator_prefix(1, 1)?;
    let mut checks = vec![
        Check::equal(
            "Luxemburg norm of the constant 1",
            "Lemma 1 machinery",
            orlicz_norm(&one, NFunction::ExpM)?,
            1.0 / std::f64::consts::LN_2,
            1e-9,
        ),
        Check::equal(
            "Luxemburg norm of the half indicator",
            "Lemma 1 machinery",
            orlicz_norm(&half, NFunction::ExpM)?,
            1.0 / 3.0f64.ln(),
            1e-9,
        ),
    ];
    let mut worst = 0.0f64;
    for a in [NFunction::ExpM, NFunction::ExpSquareN] {
        let mut u = 0.05;
        while u <= 8.0 {
            let roundtrip = legendre_conjugate(|v| nfunction_conjugate(a, v).unwrap(), u)?;
            worst = worst.max((roundtrip - a.eval(u)).abs() / (1.0 + a.eval(u)));
            u *= 1.6;
        }
    }
    checks.push(Check::upper(
        "conjugation round-trip deviation",
        "(A*)* = A",
        worst,
        0.0,
        1e-6,
    ));
    Ok(checks)
}

/// The full battery: every standalone experiment at its canonical
/// parameters plus the check groups without a subcommand of their own.
pub fn suite(params: &Params) -> Result<Report> {
    let seed = params.seed;
    let mut report = Report::new("suite", params.echo("suite"));
    let sub = |name: &str, json: Value| -> Result<Params> {
        let overrides: Vec<String> = json
            .as_object()
            .expect("suite parameter maps are objects")
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        Params::build(None, &overrides, Some(seed), None, None, params.level_cap)
            .map_err(|e| anyhow::anyhow!("suite step {name}: {e}"))
    };
    fn absorb(checks: &mut Vec<Check>, name: &str, result: Report) {
        for mut check in result.checks {
            check.name = format!("{name}/{}", check.name);
            checks.push(check);
        }
    }

    absorb(
        &mut report.checks,
        "parseval",
        khintchine_experiment(&sub(
            "parseval",
            json!({"spec": "l2", "max_index": 8, "trials": 1000}),
        )?)?,
    );
    for spec in ["l1", "l2", "l4"] {
        absorb(
            &mut report.checks,
            &format!("basis-{spec}"),
            basis_constant_experiment(&sub(
                "basis",
                json!({"spec": spec, "max_pairs": 21, "trials": 200}),
            )?)?,
        );
    }
    for check in sigma_contraction_checks(seed)? {
        report.checks.push(check);
    }
    for check in split_equimeasurability_checks(seed)? {
        report.checks.push(check);
    }
    absorb(
        &mut report.checks,
        "uncond",
        uncond_experiment(&sub("uncond", json!({"spec": "l2", "max_index": 5}))?)?,
    );
    absorb(
        &mut report.checks,
        "ruc",
        ruc_experiment(&sub(
            "ruc",
            json!({"spec": "l1", "max_index": 5, "mode": "both", "samples": 10000}),
        )?)?,
    );
    absorb(
        &mut report.checks,
        "lemma2-k2",
        lemma2_experiment(&sub("lemma2", json!({"K": 2, "trials": 20}))?)?,
    );
    absorb(
        &mut report.checks,
        "lemma2-k3",
        lemma2_experiment(&sub("lemma2", json!({"K": 3, "trials": 20}))?)?,
    );
    absorb(
        &mut report.checks,
        "prop2",
        prop2_experiment(&sub("prop2", json!({"eps": 0.25, "K": 2}))?)?,
    );
    absorb(
        &mut report.checks,
        "prop3",
        prop3_experiment(&sub("prop3", json!({"eps": 0.0, "delta": 0.1, "K": 2}))?)?,
    );
    absorb(
        &mut report.checks,
        "interp",
        interp_experiment(&sub("interp", json!({"count": 500}))?)?,
    );
    for check in psi_checks(seed)? {
        report.checks.push(check);
    }
    for a in ["M", "N"] {
        absorb(
            &mut report.checks,
            &format!("mixed-{a}"),
            mixed_experiment(&sub("mixed", json!({"A": a, "count": 500}))?)?,
        );
    }
    for check in orlicz_oracle_checks()? {
        report.checks.push(check);
    }
    absorb(
        &mut report.checks,
        "square-compare",
        square_compare_experiment(&sub(
            "square-compare",
            json!({"spec": "l1", "max_index": 6, "trials": 100}),
        )?)?,
    );
    Ok(report)
}
