use randep::dependence::{bartlett_pvalue, permutation_pvalue, rdc_report, RdcConfig};
use randep::rff::DEFAULT_MEDIAN_SUBSAMPLE;
use randep::{median_heuristic, mmd2, rmmd_permutation_test, sample_bank, seed, DMatrix};
use serde_json::json;

use crate::fail::{usage, CmdResult};
use crate::input::read_table;
use crate::{MmdArgs, PvalueMethod, RdcArgs};

pub fn rdc(a: &RdcArgs) -> CmdResult {
    let table = read_table(&a.input)?;
    let x = table.select(&table.columns(&a.x_cols)?);
    let y = table.select(&table.columns(&a.y_cols)?);
    if a.k == 0 {
        return Err(usage("-k must be positive"));
    }
    if !(a.gamma_scale > 0.0) {
        return Err(usage("--gamma-scale must be positive"));
    }
    let config = RdcConfig { num_features: a.k, bandwidth_scale: a.gamma_scale, ridge: a.ridge, seed: a.seed.seed };
    let report = rdc_report(&x, &y, &config)?;
    let pvalue = match a.pvalue {
        None => None,
        Some(PvalueMethod::Bartlett) => Some(bartlett_pvalue(&report.correlations, report.sample_size)?),
        Some(PvalueMethod::Bootstrap) => {
            if a.permutations == 0 {
                return Err(usage("--permutations must be positive"));
            }
            Some(permutation_pvalue(&x, &y, &config, a.permutations, seed::derive(a.seed.seed, 1))?)
        }
    };
    let method = a.pvalue.map(|m| match m {
        PvalueMethod::Bartlett => "bartlett",
        PvalueMethod::Bootstrap => "bootstrap",
    });
    if a.json {
        let v = json!({
            "rdc": report.value,
            "n": report.sample_size,
            "k": a.k,
            "gamma_scale": a.gamma_scale,
            "seed": a.seed.seed,
            "correlations": report.correlations,
            "p_value": pvalue,
            "p_value_method": method,
        });
        return Ok(format!("{v}\n"));
    }
    let mut out = format!("rdc {:.6}\nn {}\n", report.value, report.sample_size);
    if let (Some(p), Some(m)) = (pvalue, method) {
        out += &format!("p_value {p:.6e} ({m})\n");
    }
    Ok(out)
}

pub fn mmd(a: &MmdArgs) -> CmdResult {
    let x = read_table(&a.x)?.data;
    let y = read_table(&a.y)?.data;
    if x.ncols() != y.ncols() {
        return Err(usage(format!("samples have {} and {} columns", x.ncols(), y.ncols())));
    }
    if a.m == 0 {
        return Err(usage("-m must be positive"));
    }
    let gamma = match a.gamma {
        Some(g) if !(g > 0.0) || !g.is_finite() => return Err(usage(format!("--gamma must be positive, got {g}"))),
        Some(g) => g,
        None => {
            let pooled = DMatrix::from_fn(x.nrows() + y.nrows(), x.ncols(), |i, j| {
                if i < x.nrows() {
                    x[(i, j)]
                } else {
                    y[(i - x.nrows(), j)]
                }
            });
            median_heuristic(&pooled, DEFAULT_MEDIAN_SUBSAMPLE, seed::derive(a.seed.seed, 2))?
        }
    };
    let exact = mmd2(&x, &y, gamma)?;
    let bank = sample_bank(x.ncols(), a.m, gamma, seed::derive(a.seed.seed, 0))?;
    let (randomized, pvalue) = if a.permutations > 0 {
        let (obs, p) = rmmd_permutation_test(&x, &y, &bank, a.permutations, seed::derive(a.seed.seed, 1))?;
        (obs, Some(p))
    } else {
        (randep::rmmd2(&x, &y, &bank)?, None)
    };
    if a.json {
        let v = json!({
            "mmd2": exact,
            "rmmd2": randomized,
            "gamma": gamma,
            "m": a.m,
            "seed": a.seed.seed,
            "permutations": a.permutations,
            "p_value": pvalue,
        });
        return Ok(format!("{v}\n"));
    }
    let mut out = format!("mmd2 {exact:.6e}\nrmmd2 {randomized:.6e}\ngamma {gamma:.6e}\n");
    if let Some(p) = pvalue {
        out += &format!("p_value {p:.6}\n");
    }
    Ok(out)
}
