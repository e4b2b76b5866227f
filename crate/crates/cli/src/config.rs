//! Flat key-value run configuration: `section.key = value` lines mapping
//! one-to-one onto the flow configuration and the initial-data spec.
//! `#` starts a comment; blank lines are ignored; unknown keys are errors.

use anyhow::{anyhow, bail, Result};
use ccflow_core::flow::{FlowConfig, Parametrization, SpeedKind, StopRules};
use ccflow_core::scenarios::{InitialSpec, CANONICAL_BOWL_HEIGHT};
use std::collections::BTreeMap;

pub fn parse_config(text: &str) -> Result<(FlowConfig, InitialSpec)> {
    let mut map: BTreeMap<String, String> = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(idx) => &raw[..idx],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected 'key = value', got '{line}'", lineno + 1))?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if map.insert(key.clone(), value).is_some() {
            bail!("duplicate key '{key}'");
        }
    }

    let mut take = |key: &str| map.remove(key);
    let required = |key: &str, v: Option<String>| {
        v.ok_or_else(|| anyhow!("missing required key '{key}'"))
    };
    let parse_f64 = |key: &str, v: String| {
        v.parse::<f64>()
            .map_err(|_| anyhow!("key '{key}': invalid number '{v}'"))
    };
    let parse_usize = |key: &str, v: String| {
        v.parse::<usize>()
            .map_err(|_| anyhow!("key '{key}': invalid integer '{v}'"))
    };
    let parse_bool = |key: &str, v: String| match v.as_str() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(anyhow!("key '{key}': expected true or false, got '{other}'")),
    };

    let alpha = parse_f64("flow.alpha", required("flow.alpha", take("flow.alpha"))?)?;
    let beta = parse_f64("flow.beta", required("flow.beta", take("flow.beta"))?)?;
    let f_spec = required("flow.f_spec", take("flow.f_spec"))?;
    let n = parse_usize("flow.n", required("flow.n", take("flow.n"))?)?;
    let mut cfg = FlowConfig::new(alpha, beta, n, &f_spec);

    if let Some(v) = take("flow.speed_kind") {
        cfg.speed_kind = SpeedKind::parse(&v)
            .ok_or_else(|| anyhow!("key 'flow.speed_kind': unknown value '{v}'"))?;
    }
    if let Some(v) = take("flow.parametrization") {
        cfg.parametrization = Parametrization::parse(&v)
            .ok_or_else(|| anyhow!("key 'flow.parametrization': unknown value '{v}'"))?;
    }
    if let Some(v) = take("flow.normalized") {
        cfg.normalized = parse_bool("flow.normalized", v)?;
    }
    if let Some(v) = take("grid.resolution") {
        cfg.resolution = parse_usize("grid.resolution", v)?;
    }
    if let Some(v) = take("stepper.safety") {
        cfg.safety = parse_f64("stepper.safety", v)?;
    }
    if let Some(v) = take("stepper.t_max") {
        cfg.t_max = parse_f64("stepper.t_max", v)?;
    }
    let mut stop = StopRules::default();
    if let Some(v) = take("stop.grad_ratio_tol") {
        stop.grad_ratio_tol = parse_f64("stop.grad_ratio_tol", v)?;
    }
    if let Some(v) = take("stop.ratio_tol") {
        stop.ratio_tol = parse_f64("stop.ratio_tol", v)?;
    }
    if let Some(v) = take("stop.origin_eps") {
        stop.origin_eps = parse_f64("stop.origin_eps", v)?;
    }
    if let Some(v) = take("stop.blowup_ratio") {
        stop.blowup_ratio = parse_f64("stop.blowup_ratio", v)?;
    }
    if let Some(v) = take("stop.curvature_cap") {
        stop.curvature_cap = parse_f64("stop.curvature_cap", v)?;
    }
    cfg.stop = stop;
    if let Some(v) = take("output.record_every") {
        cfg.record_every = parse_usize("output.record_every", v)?;
    }
    if let Some(v) = take("output.snapshot_every") {
        cfg.snapshot_every = Some(parse_f64("output.snapshot_every", v)?);
    }

    let kind = required("initial.kind", take("initial.kind"))?;
    let initial = match kind.as_str() {
        "sphere" => InitialSpec::Sphere {
            radius: parse_f64(
                "initial.radius",
                required("initial.radius", take("initial.radius"))?,
            )?,
        },
        "ellipsoid" => InitialSpec::Ellipsoid {
            axis_a: parse_f64(
                "initial.axis_a",
                required("initial.axis_a", take("initial.axis_a"))?,
            )?,
            axis_b: parse_f64(
                "initial.axis_b",
                required("initial.axis_b", take("initial.axis_b"))?,
            )?,
        },
        "eccentric" => InitialSpec::Eccentric {
            radius: parse_f64(
                "initial.radius",
                required("initial.radius", take("initial.radius"))?,
            )?,
            offset: parse_f64(
                "initial.offset",
                required("initial.offset", take("initial.offset"))?,
            )?,
        },
        "bowl" => InitialSpec::Bowl {
            theta_exp: take("initial.theta_exp")
                .map(|v| parse_f64("initial.theta_exp", v))
                .transpose()?
                .unwrap_or(4.0),
            gamma_gap: take("initial.gamma_gap")
                .map(|v| parse_f64("initial.gamma_gap", v))
                .transpose()?
                .unwrap_or(0.5),
            beta: take("initial.beta")
                .map(|v| parse_f64("initial.beta", v))
                .transpose()?
                .unwrap_or(1.0),
            t_param: take("initial.t_param")
                .map(|v| parse_f64("initial.t_param", v))
                .transpose()?
                .unwrap_or(-0.5),
            height: take("initial.height")
                .map(|v| parse_f64("initial.height", v))
                .transpose()?
                .unwrap_or(CANONICAL_BOWL_HEIGHT),
        },
        other => bail!("key 'initial.kind': unknown initial data kind '{other}'"),
    };

    if let Some(stray) = map.keys().next() {
        bail!("unknown key '{stray}'");
    }
    Ok((cfg, initial))
}

pub fn write_config(cfg: &FlowConfig, initial: &InitialSpec) -> String {
    let mut out = String::new();
    let mut push = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };
    push("flow.alpha", format!("{}", cfg.alpha));
    push("flow.beta", format!("{}", cfg.beta));
    push("flow.speed_kind", cfg.speed_kind.as_str().into());
    push("flow.parametrization", cfg.parametrization.as_str().into());
    push("flow.normalized", format!("{}", cfg.normalized));
    push("flow.f_spec", cfg.f_spec.clone());
    push("flow.n", format!("{}", cfg.n));
    push("grid.resolution", format!("{}", cfg.resolution));
    push("stepper.safety", format!("{}", cfg.safety));
    push("stepper.t_max", format!("{}", cfg.t_max));
    push("stop.grad_ratio_tol", format!("{:e}", cfg.stop.grad_ratio_tol));
    push("stop.ratio_tol", format!("{:e}", cfg.stop.ratio_tol));
    push("stop.origin_eps", format!("{:e}", cfg.stop.origin_eps));
    push("stop.blowup_ratio", format!("{}", cfg.stop.blowup_ratio));
    push("stop.curvature_cap", format!("{:e}", cfg.stop.curvature_cap));
    push("output.record_every", format!("{}", cfg.record_every));
    if let Some(s) = cfg.snapshot_every {
        push("output.snapshot_every", format!("{s}"));
    }
    push("initial.kind", initial.kind_name().into());
    match initial {
        InitialSpec::Sphere { radius } => push("initial.radius", format!("{radius}")),
        InitialSpec::Ellipsoid { axis_a, axis_b } => {
            push("initial.axis_a", format!("{axis_a}"));
            push("initial.axis_b", format!("{axis_b}"));
        }
        InitialSpec::Eccentric { radius, offset } => {
            push("initial.radius", format!("{radius}"));
            push("initial.offset", format!("{offset}"));
        }
        InitialSpec::Bowl {
            theta_exp,
            gamma_gap,
            beta,
            t_param,
            height,
        } => {
            push("initial.theta_exp", format!("{theta_exp}"));
            push("initial.gamma_gap", format!("{gamma_gap}"));
            push("initial.beta", format!("{beta}"));
            push("initial.t_param", format!("{t_param}"));
            push("initial.height", format!("{height}"));
        }
    }
    out
}
