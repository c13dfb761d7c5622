//! Loading models, regions, properties and points from the command line.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use pmcgd_core::textio::{parse_model, parse_property, parse_region, MeasureKind, PropertyQuery};
use pmcgd_core::{
    preprocess, preprocess_for_reward, GeneratorSpec, ParameterSet, Pmc, RawModel, Region,
};

pub fn read_raw_model(path: &Path) -> Result<RawModel> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_model(&text).with_context(|| format!("{}", path.display()))
}

/// Parses and preprocesses a model for the given measure.
pub fn load_model(path: &Path, kind: MeasureKind) -> Result<Pmc> {
    let raw = read_raw_model(path)?;
    let pmc = match kind {
        MeasureKind::Reachability => preprocess(&raw, &raw.targets),
        MeasureKind::ExpectedReward => preprocess_for_reward(&raw, &raw.targets),
    };
    pmc.with_context(|| format!("{}", path.display()))
}

pub fn load_region(path: Option<&Path>, params: &Arc<ParameterSet>) -> Result<Region> {
    match path {
        None => Ok(Region::default_for(params)),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            parse_region(&text, params).with_context(|| format!("{}", p.display()))
        }
    }
}

/// A property given inline (`"P >= 0.9"`) or as a path to a `.prop` file.
pub fn load_property(arg: &str) -> Result<PropertyQuery> {
    let path = Path::new(arg);
    let text = if path.is_file() {
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?
    } else {
        arg.to_string()
    };
    let line = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .find(|l| !l.is_empty())
        .unwrap_or("");
    Ok(parse_property(line)?)
}

/// Parses `p=0.5,q=0.25` (also accepting repeated flags) into a full
/// instantiation.
pub fn parse_point(args: &[String], params: &ParameterSet) -> Result<Vec<f64>> {
    let mut u = vec![None; params.len()];
    for part in args.iter().flat_map(|a| a.split(',')) {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (name, value) = part
            .split_once('=')
            .with_context(|| format!("expected `name=value`, got `{part}`"))?;
        let i = params.lookup(name.trim())?;
        let v: f64 = value
            .trim()
            .parse()
            .with_context(|| format!("invalid value for `{name}`"))?;
        if u[i].replace(v).is_some() {
            bail!("parameter `{name}` assigned twice");
        }
    }
    u.iter()
        .enumerate()
        .map(|(i, v)| {
            v.with_context(|| format!("no value given for parameter `{}`", params.name(i)))
        })
        .collect()
}

/// Parses `states=1000 params=100 seed=1 ...` into a generator spec and seed.
pub fn parse_generator(text: &str) -> Result<(GeneratorSpec, u64)> {
    let mut spec = GeneratorSpec::default();
    let mut seed = 0;
    for part in text.split([' ', ',']).filter(|s| !s.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .with_context(|| format!("expected `key=value`, got `{part}`"))?;
        let bad = || format!("invalid value `{v}` for `{k}`");
        match k {
            "states" => spec.states = v.parse().with_context(bad)?,
            "params" => spec.params = v.parse().with_context(bad)?,
            "branching" => spec.branching = v.parse().with_context(bad)?,
            "target_density" => spec.target_density = v.parse().with_context(bad)?,
            "sink_density" => spec.sink_density = v.parse().with_context(bad)?,
            "constant_fraction" => spec.constant_fraction = v.parse().with_context(bad)?,
            "max_reward" => spec.max_reward = v.parse().with_context(bad)?,
            "seed" => seed = v.parse().with_context(bad)?,
            _ => bail!("unknown generator key `{k}`"),
        }
    }
    Ok((spec, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points() {
        let ps = ParameterSet::new(["p", "q"]).unwrap();
        assert_eq!(
            parse_point(&["p=0.5,q=0.25".into()], &ps).unwrap(),
            vec![0.5, 0.25]
        );
        assert_eq!(
            parse_point(&["q=1".into(), "p=2".into()], &ps).unwrap(),
            vec![2.0, 1.0]
        );
        assert!(parse_point(&["p=0.5".into()], &ps).is_err());
        assert!(parse_point(&["p=0.5,p=0.1,q=1".into()], &ps).is_err());
        assert!(parse_point(&["r=0.5".into()], &ps).is_err());
    }

    #[test]
    fn generator_specs() {
        let (spec, seed) = parse_generator("states=50 params=4 seed=9 sink_density=0.1").unwrap();
        assert_eq!(
            (spec.states, spec.params, seed, spec.sink_density),
            (50, 4, 9, 0.1)
        );
        assert!(parse_generator("states=x").is_err());
        assert!(parse_generator("colour=red").is_err());
    }
}
