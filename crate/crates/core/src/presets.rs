//! Problem specs assembled from a default template plus overrides.

use crate::catalog::ProblemSpec;
use crate::error::Result;

const NUMERIC: [&str; 10] = ["N", "p", "q", "lambda1", "lambda2", "mu1", "mu2", "rho1", "rho2", "box"];

/// Default data: disk, `p = q = 2`, unit weights, `A = -Δ + 1`, `f = 0`,
/// `L = ℓ = 0`, `g1 = g2 = y`, identity `ζ`.
pub fn defaults() -> Vec<(&'static str, String)> {
    [
        ("preset", "disk"),
        ("N", "2"),
        ("p", "2"),
        ("q", "2"),
        ("lambda1", "1"),
        ("lambda2", "1"),
        ("mu1", "1"),
        ("mu2", "1"),
        ("L", "0"),
        ("ell", "0"),
        ("a11", "1"),
        ("a12", "0"),
        ("a22", "1"),
        ("a0", "1"),
        ("f", "0"),
        ("g1", "y"),
        ("g2", "y"),
        ("zeta1", "t"),
        ("zeta2", "t"),
        ("rho1", "1"),
        ("rho2", "1"),
        ("box", "10"),
    ]
    .into_iter()
    .map(|(k, v)| (k, v.to_string()))
    .collect()
}

/// Config text for the defaults with `overrides` applied.
pub fn config_text(overrides: &[(&str, &str)]) -> String {
    let mut kv = defaults();
    for (k, v) in overrides {
        match kv.iter_mut().find(|(key, _)| key == k) {
            Some(slot) => slot.1 = v.to_string(),
            None => panic!("unknown spec key `{k}`"),
        }
    }
    let get = |k: &str| kv.iter().find(|(key, _)| *key == k).unwrap().1.clone();
    let line = |k: &str| {
        let v = get(k);
        if NUMERIC.contains(&k) {
            format!("{k} = {v}\n")
        } else {
            format!("{k} = \"{v}\"\n")
        }
    };
    let mut s = String::new();
    s += "[domain]\n";
    s += &line("preset");
    s += &line("N");
    s += "\n[exponents]\n";
    s += &line("p");
    s += &line("q");
    s += "\n[cost]\n";
    for k in ["lambda1", "lambda2", "mu1", "mu2", "L", "ell"] {
        s += &line(k);
    }
    s += "\n[pde]\n";
    for k in ["a11", "a12", "a22", "a0", "f"] {
        s += &line(k);
    }
    s += "\n[constraints]\n";
    for k in ["g1", "g2", "zeta1", "zeta2", "rho1", "rho2", "box"] {
        s += &line(k);
    }
    s
}

pub fn try_spec_with(overrides: &[(&str, &str)]) -> Result<ProblemSpec> {
    ProblemSpec::from_toml_str(&config_text(overrides))
}

/// Panics on invalid overrides; intended for fixtures.
pub fn spec_with(overrides: &[(&str, &str)]) -> ProblemSpec {
    try_spec_with(overrides).expect("valid preset overrides")
}
