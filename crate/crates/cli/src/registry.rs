//! Registered experiments: parameter schemas, defaults, validation, dispatch.

use crate::config::{validation, ConfigError};
use hgibbs::experiments::{
    run_bbjump_check, run_fluctuation_experiment, run_ordering_experiment, run_separation_experiment, run_z_lowerbound_experiment,
    BbJumpConfig, ExperimentReport, FluctuationConfig, OrderingConfig, SeparationConfig, MAX_SAMPLES,
};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Int,
    Real,
    RealList,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Int(u64),
    Real(f64),
    List(Vec<f64>),
}

fn parse_real(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("expected a real number, found `{}`", s.trim()))?;
    if v.is_nan() {
        return Err("NaN is not allowed".into());
    }
    Ok(v)
}

impl ParamValue {
    pub fn parse(kind: Kind, s: &str) -> Result<Self, String> {
        match kind {
            Kind::Int => s.parse().map(ParamValue::Int).map_err(|_| format!("expected a non-negative integer, found `{s}`")),
            Kind::Real => parse_real(s).map(ParamValue::Real),
            Kind::RealList => {
                let xs = s.split(',').map(parse_real).collect::<Result<Vec<_>, _>>()?;
                Ok(ParamValue::List(xs))
            }
        }
    }

    fn numbers(&self) -> Vec<f64> {
        match self {
            ParamValue::Int(n) => vec![*n as f64],
            ParamValue::Real(x) => vec![*x],
            ParamValue::List(xs) => xs.clone(),
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(n) => write!(f, "{n}"),
            ParamValue::Real(x) => write!(f, "{x}"),
            ParamValue::List(xs) => write!(f, "{}", xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")),
        }
    }
}

pub struct ParamSpec {
    pub name: &'static str,
    pub kind: Kind,
    pub default: &'static str,
    pub required: bool,
    pub doc: &'static str,
    /// Closed range every number in the value must lie in.
    pub range: (f64, f64),
}

pub type Params = BTreeMap<String, ParamValue>;

pub struct Experiment {
    pub name: &'static str,
    pub summary: &'static str,
    pub params: &'static [ParamSpec],
    pub validate: fn(&Params) -> Vec<ConfigError>,
    pub run: fn(&Params, u64) -> hgibbs::Result<ExperimentReport>,
}

const fn p(name: &'static str, kind: Kind, default: &'static str, required: bool, range: (f64, f64), doc: &'static str) -> ParamSpec {
    ParamSpec { name, kind, default, required, doc, range }
}

const INF: f64 = f64::INFINITY;
const NMAX: f64 = MAX_SAMPLES as f64;

const SEPARATION_PARAMS: [ParamSpec; 7] = [
    p("k", Kind::Int, "2", true, (1.0, 4.0), "number of curves"),
    p("L", Kind::Real, "1", true, (1.0, 1e3), "window half-width"),
    p("t", Kind::Real, "100", true, (1.0, 1e3), "KPZ time in H_t"),
    p("M", Kind::Real, "1.5", true, (0.0, 1e3), "band scale, at least sqrt(L)"),
    p("n_samples", Kind::Int, "100000", true, (1.0, NMAX), "importance samples"),
    p("points_per_unit", Kind::Int, "32", false, (32.0, 4096.0), "grid intervals per unit length"),
    p("boundary_level", Kind::Real, "0", false, (-1e3, 1e3), "constant boundary value, at most M in absolute value"),
];

const Z_PARAMS: [ParamSpec; 9] = [
    p("k", Kind::Int, "1", true, (1.0, 4.0), "number of curves"),
    p("L", Kind::Real, "1", true, (1.0, 1e3), "window half-width"),
    p("t", Kind::Real, "100", true, (1.0, 1e3), "KPZ time in H_t"),
    p("M", Kind::Real, "1", true, (0.0, 1e3), "band scale, at least sqrt(L)"),
    p("n_samples", Kind::Int, "100000", true, (1.0, NMAX), "importance samples"),
    p("points_per_unit", Kind::Int, "32", false, (32.0, 4096.0), "grid intervals per unit length"),
    p("boundary_level", Kind::Real, "0", false, (-1e3, 1e3), "constant boundary value, at most M in absolute value"),
    p("n_boundaries", Kind::Int, "200", false, (1.0, 1e5), "boundaries resampled from E"),
    p("n_inner", Kind::Int, "2000", false, (1.0, NMAX), "free draws per boundary"),
];

const ORDERING_PARAMS: [ParamSpec; 7] = [
    p("k", Kind::Int, "1", true, (1.0, 4.0), "gap index; the ensemble has k+1 curves"),
    p("t_list", Kind::RealList, "1, 8, 64", true, (1.0, 1e3), "KPZ times"),
    p("gap", Kind::Real, "2", false, (1e-6, 1e3), "spacing of boundary data"),
    p("rho", Kind::Real, "0.1", true, (-INF, INF), "gap threshold"),
    p("n_chains", Kind::Int, "4000", true, (2.0, NMAX), "independent chains per t"),
    p("burn_in", Kind::Int, "10", false, (1.0, 1e4), "sweeps before the first read-out"),
    p("points_per_unit", Kind::Int, "16", false, (2.0, 2047.0), "grid intervals per unit length"),
];

const FLUCTUATION_PARAMS: [ParamSpec; 8] = [
    p("d", Kind::Real, "0.25", true, (1e-3, 1.0), "window length"),
    p("k_list", Kind::RealList, "1, 2, 3", true, (0.0, 1e3), "fluctuation levels K"),
    p("boundary_box", Kind::Real, "0.5", false, (0.0, 1e3), "half-width of the boundary jitter"),
    p("n_samples", Kind::Int, "2000", true, (1.0, NMAX), "boundary draws"),
    p("n_inner", Kind::Int, "256", false, (1.0, NMAX), "free draws per boundary for Z"),
    p("n_free", Kind::Int, "20000", false, (1.0, NMAX), "free draws for the decay constant"),
    p("t", Kind::Real, "1", false, (1.0, 1e3), "KPZ time in H_t"),
    p("grid_points", Kind::Int, "129", false, (3.0, 8192.0), "grid points on [-1, 1]"),
];

const BBJUMP_PARAMS: [ParamSpec; 10] = [
    p("L", Kind::Real, "1", true, (1.0, 1e3), "scale"),
    p("M", Kind::Real, "1", true, (0.0, 1e3), "band scale, at least sqrt(L)"),
    p("lambda", Kind::Real, "4", true, (-1e3, 1e3), "jump level in units of M"),
    p("x", Kind::Real, "0", true, (-1e3, 1e3), "left endpoint value"),
    p("y", Kind::Real, "0", true, (-1e3, 1e3), "right endpoint value"),
    p("ell", Kind::Real, "0", true, (-1e4, 1e4), "left end of the interval"),
    p("r", Kind::Real, "4", true, (-1e4, 1e4), "right end of the interval"),
    p("k", Kind::Int, "1", false, (1.0, 4.0), "bounds the interval length by (2k+2)L"),
    p("n_samples", Kind::Int, "100000", true, (1.0, NMAX), "importance samples"),
    p("points_per_unit", Kind::Int, "32", false, (2.0, 4096.0), "grid intervals per unit length"),
];

pub static EXPERIMENTS: [Experiment; 5] = [
    Experiment {
        name: "separation",
        summary: "endpoint separation E and interval events A_j, F_j under the off-window weight",
        params: &SEPARATION_PARAMS,
        validate: |p| validate_separation(p, "separation"),
        run: |p, seed| run_separation_experiment(&separation_config(p, seed)),
    },
    Experiment {
        name: "z_lowerbound",
        summary: "normalizing constant on boundaries resampled from the separation event",
        params: &Z_PARAMS,
        validate: |p| validate_separation(p, "z_lowerbound"),
        run: |p, seed| run_z_lowerbound_experiment(&separation_config(p, seed)),
    },
    Experiment {
        name: "ordering",
        summary: "probability that adjacent curves come within rho, across t",
        params: &ORDERING_PARAMS,
        validate: |p| core_check(ordering_config(p, 0).validate()),
        run: |p, seed| run_ordering_experiment(&ordering_config(p, seed)),
    },
    Experiment {
        name: "fluctuation",
        summary: "big-fluctuation probability against the good-boundary bound",
        params: &FLUCTUATION_PARAMS,
        validate: |p| core_check(fluctuation_config(p, 0).validate()),
        run: |p, seed| run_fluctuation_experiment(&fluctuation_config(p, seed)),
    },
    Experiment {
        name: "bbjump",
        summary: "bridge jump event J against the product of its endpoint and chord pieces",
        params: &BBJUMP_PARAMS,
        validate: validate_bbjump,
        run: |p, seed| run_bbjump_check(&bbjump_config(p, seed)),
    },
];

pub fn find(name: &str) -> Option<&'static Experiment> {
    EXPERIMENTS.iter().find(|e| e.name == name)
}

fn int(p: &Params, key: &str) -> usize {
    match p.get(key) {
        Some(ParamValue::Int(n)) => *n as usize,
        other => panic!("parameter {key} missing or mistyped: {other:?}"),
    }
}

fn real(p: &Params, key: &str) -> f64 {
    match p.get(key) {
        Some(ParamValue::Real(x)) => *x,
        other => panic!("parameter {key} missing or mistyped: {other:?}"),
    }
}

fn list(p: &Params, key: &str) -> Vec<f64> {
    match p.get(key) {
        Some(ParamValue::List(xs)) => xs.clone(),
        other => panic!("parameter {key} missing or mistyped: {other:?}"),
    }
}

/// Range checks for every field of `exp`, one error per bad field.
pub fn range_errors(exp: &Experiment, params: &Params) -> Vec<ConfigError> {
    let mut errors = Vec::new();
    for spec in exp.params {
        let Some(v) = params.get(spec.name) else { continue };
        let (lo, hi) = spec.range;
        if let Some(bad) = v.numbers().into_iter().find(|x| !(lo <= *x && *x <= hi)) {
            errors.push(validation(spec.name, &format!("{} = {bad} outside [{lo}, {hi}]", spec.name)));
        }
        if let ParamValue::List(xs) = v {
            if xs.is_empty() {
                errors.push(validation(spec.name, "list must not be empty"));
            }
        }
    }
    errors
}

fn core_check(r: hgibbs::Result<()>) -> Vec<ConfigError> {
    match r {
        Ok(()) => Vec::new(),
        Err(e) => vec![validation("config", &e.to_string())],
    }
}

fn m_bound(p: &Params) -> Option<ConfigError> {
    let (l, m) = (real(p, "L"), real(p, "M"));
    (m < l.sqrt()).then(|| validation("M", &format!("M must satisfy M >= sqrt(L); got M = {m}, sqrt(L) = {}", l.sqrt())))
}

fn validate_separation(p: &Params, name: &str) -> Vec<ConfigError> {
    let mut errors = range_errors(find(name).expect("registered"), p);
    errors.extend(m_bound(p));
    if real(p, "boundary_level").abs() > real(p, "M") {
        errors.push(validation("boundary_level", "boundary_level must satisfy |c| <= M"));
    }
    if errors.is_empty() {
        errors.extend(core_check(separation_config(p, 0).validate()));
    }
    errors
}

fn validate_bbjump(p: &Params) -> Vec<ConfigError> {
    let mut errors = range_errors(find("bbjump").expect("registered"), p);
    errors.extend(m_bound(p));
    if real(p, "r") <= real(p, "ell") {
        errors.push(validation("r", "r must exceed ell"));
    }
    if errors.is_empty() {
        errors.extend(core_check(bbjump_config(p, 0).validate()));
    }
    errors
}

fn separation_config(p: &Params, seed: u64) -> SeparationConfig {
    let mut c = SeparationConfig::new(int(p, "k"), real(p, "L"), real(p, "t"), real(p, "M"), int(p, "n_samples"), seed);
    c.points_per_unit = int(p, "points_per_unit");
    c.boundary_level = real(p, "boundary_level");
    if p.contains_key("n_inner") {
        c.n_boundaries = int(p, "n_boundaries");
        c.n_inner = int(p, "n_inner");
    }
    c
}

fn ordering_config(p: &Params, seed: u64) -> OrderingConfig {
    let mut c = OrderingConfig::new(int(p, "k"), list(p, "t_list"), real(p, "gap"), real(p, "rho"), int(p, "n_chains"), seed);
    c.burn_in = int(p, "burn_in");
    c.points_per_unit = int(p, "points_per_unit");
    c
}

fn fluctuation_config(p: &Params, seed: u64) -> FluctuationConfig {
    let mut c = FluctuationConfig::new(real(p, "d"), list(p, "k_list"), real(p, "boundary_box"), int(p, "n_samples"), seed);
    c.n_inner = int(p, "n_inner");
    c.n_free = int(p, "n_free");
    c.t = real(p, "t");
    c.grid_points = int(p, "grid_points");
    c
}

fn bbjump_config(p: &Params, seed: u64) -> BbJumpConfig {
    let interval = (real(p, "ell"), real(p, "r"));
    let mut c = BbJumpConfig::new(real(p, "L"), real(p, "M"), real(p, "lambda"), real(p, "x"), real(p, "y"), interval, int(p, "n_samples"), seed);
    c.k = int(p, "k");
    c.points_per_unit = int(p, "points_per_unit");
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defaults(e: &Experiment) -> Params {
        e.params.iter().map(|s| (s.name.to_string(), ParamValue::parse(s.kind, s.default).unwrap())).collect()
    }

    #[test]
    fn every_default_is_valid() {
        for e in &EXPERIMENTS {
            let d = defaults(e);
            assert!((e.validate)(&d).is_empty(), "{}: {:?}", e.name, (e.validate)(&d));
        }
    }

    #[test]
    fn values_display_round_trip() {
        for (kind, s) in [(Kind::Int, "17"), (Kind::Real, "0.1"), (Kind::Real, "1e-300"), (Kind::RealList, "1, 8.5, 64")] {
            let v = ParamValue::parse(kind, s).unwrap();
            assert_eq!(ParamValue::parse(kind, &v.to_string()).unwrap(), v);
        }
        assert!(ParamValue::parse(Kind::Real, "NaN").is_err());
        assert!(ParamValue::parse(Kind::Int, "-3").is_err());
    }

    #[test]
    fn range_errors_name_each_field() {
        let e = find("ordering").unwrap();
        let mut d = defaults(e);
        d.insert("k".into(), ParamValue::Int(9));
        d.insert("t_list".into(), ParamValue::List(vec![1.0, 5000.0]));
        let errs = range_errors(e, &d);
        let fields: Vec<_> = errs.iter().map(|x| match x {
            ConfigError::Validation { field, .. } => field.as_str(),
            _ => "",
        }).collect();
        assert_eq!(fields, ["k", "t_list"]);
    }
}
