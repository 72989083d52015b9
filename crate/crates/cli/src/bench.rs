use std::path::Path;

use randep::experiments::{
    bernstein_csv, bernstein_suite, null_csv, null_suite, power_csv, power_suite, BernsteinConfig, NullConfig,
    PowerConfig,
};
use randep::synth::{enumerate_triple_dags, random_pair, synth_confounded, synth_independent};
use randep::RdcConfig;

use crate::fail::{usage, CmdResult};
use crate::{BenchArgs, PairKind, Suite};

fn emit(text: String, out: Option<&Path>) -> CmdResult {
    match out {
        Some(p) => {
            std::fs::write(p, &text)?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

pub fn bench(a: &BenchArgs) -> CmdResult {
    let seed = a.seed.seed;
    let csv = match a.suite {
        Suite::Bernstein => {
            let d = BernsteinConfig::default();
            let config = BernsteinConfig {
                n: a.n.unwrap_or(d.n),
                seeds: a.repetitions.unwrap_or(d.seeds),
                num_features: a.features.clone().unwrap_or(d.num_features),
                seed,
                ..d
            };
            bernstein_csv(&bernstein_suite(&config)?)
        }
        Suite::Power => {
            let d = PowerConfig::default();
            let config = PowerConfig {
                n: a.n.unwrap_or(d.n),
                repetitions: a.repetitions.unwrap_or(d.repetitions),
                noise_variances: a.noise.clone().unwrap_or(d.noise_variances),
                seed,
                ..d
            };
            power_csv(&power_suite(&config)?)
        }
        Suite::Null => {
            let d = NullConfig::default();
            let config = NullConfig {
                n: a.n.unwrap_or(d.n),
                replicates: a.repetitions.unwrap_or(d.replicates),
                rdc: RdcConfig::default().with_seed(seed),
            };
            null_csv(&null_suite(&config)?)
        }
    };
    emit(csv, a.out.as_deref())
}

pub fn synth_pair(n: usize, kind: PairKind, seed: u64, out: Option<&Path>) -> CmdResult {
    let sample = match kind {
        PairKind::Causal => random_pair(n, seed)?,
        PairKind::Confounded => synth_confounded(n, seed)?,
        PairKind::Independent => synth_independent(n, seed)?,
    };
    emit(sample.to_csv(seed), out)
}

pub fn synth_triple(dag: usize, n: usize, seed: u64, out: Option<&Path>) -> CmdResult {
    let dags = enumerate_triple_dags();
    let Some(g) = dags.get(dag) else {
        return Err(usage(format!("--dag must be in 0..={}, got {dag}", dags.len() - 1)));
    };
    emit(randep::synth::synth_triple(g, n, seed)?.to_csv(seed), out)
}
