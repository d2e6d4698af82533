use std::collections::BTreeMap;

use anyhow::{bail, Context as _, Result};
use bpl_core::harness::{EigenPreset, IntegrandPreset, DEFAULT_SEED};
use bpl_core::stochastic::{simulate_bundle, RngSpec, WienerIncrements};

use crate::manifest::Context;
use crate::RunArgs;

/// Settings of one simulated bundle; keys `J`, `d`, `m`, `seed`, `stream`,
/// `integrand`, `scale`, `eigenvalues`.
#[derive(Clone, Debug)]
struct SimConfig {
    j: u32,
    d: usize,
    m: usize,
    seed: u64,
    stream: u64,
    integrand: IntegrandPreset,
    scale: f64,
    eigenvalues: EigenPreset,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            j: 10,
            d: 1,
            m: 1,
            seed: DEFAULT_SEED,
            stream: 0,
            integrand: IntegrandPreset::Constant,
            scale: 1.0,
            eigenvalues: EigenPreset::Zero,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| anyhow::anyhow!("bad value `{value}` for `{key}`"))
}

impl SimConfig {
    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "J" => self.j = parse(key, value)?,
            "d" => self.d = parse(key, value)?,
            "m" => self.m = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "stream" => self.stream = parse(key, value)?,
            "integrand" => self.integrand = value.parse()?,
            "scale" => self.scale = parse(key, value)?,
            "eigenvalues" => self.eigenvalues = value.parse()?,
            other => {
                bail!("unknown simulate key `{other}` (known: J, d, m, seed, stream, integrand, scale, eigenvalues)")
            }
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if !(1..=20).contains(&self.j) {
            bail!("J must lie in 1..=20, got {}", self.j);
        }
        if self.d == 0 || self.m == 0 {
            bail!("d and m must be positive");
        }
        if !(self.scale.is_finite() && self.scale >= 0.0) {
            bail!("scale must be finite and >= 0, got {}", self.scale);
        }
        Ok(())
    }

    fn to_map(&self) -> BTreeMap<String, String> {
        [
            ("J", self.j.to_string()),
            ("d", self.d.to_string()),
            ("m", self.m.to_string()),
            ("seed", self.seed.to_string()),
            ("stream", self.stream.to_string()),
            ("integrand", self.integrand.to_string()),
            ("scale", self.scale.to_string()),
            ("eigenvalues", self.eigenvalues.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }
}

pub fn run(args: &RunArgs, ctx: &Context) -> Result<bool> {
    let mut config = SimConfig::default();
    for (key, value) in args.pairs()? {
        config.set(&key, &value)?;
    }
    config.validate()?;

    let spec = RngSpec::new(config.seed, config.stream);
    let increments = WienerIncrements::sample(0.0, 1.0, config.j, config.m, spec)?;
    let f = config.integrand.realize(config.scale, config.d, &increments)?;
    let model = config.eigenvalues.model(config.d)?;
    let bundle = simulate_bundle(&f, &model, &increments)?;
    bundle
        .write_dir(&ctx.out, &config.integrand.to_string())
        .with_context(|| format!("writing the bundle to {}", ctx.out.display()))?;

    let outputs: Vec<_> = [
        "brownian.csv",
        "integral.csv",
        "convolution.csv",
        "q_convolution.csv",
        "bundle.json",
    ]
    .iter()
    .map(|f| ctx.out.join(f))
    .collect();
    ctx.write_manifest(&ctx.out, "simulate", &config.to_map(), Some(config.seed), &outputs)?;
    println!(
        "simulated J = {}, d = {}, m = {}, stream {} of seed {}; wrote {}",
        config.j,
        config.d,
        config.m,
        config.stream,
        config.seed,
        ctx.out.display()
    );
    Ok(true)
}
