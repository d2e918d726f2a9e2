use jscc_core::asymptotics::{
    exponent_converse, exponent_direct, md_approx, moderate_deviation, Assumption,
    AsymptoticSummary,
};
use jscc_core::bounds::{bound_curve, k_sweep, n_sweep, BoundKind, DEFAULT_GRID_DENSITY};
use jscc_core::measures::{Branch, ChainMeasures};
use jscc_core::oracle::sandwich_report;
use jscc_core::tilted::{TiltedFamily, Variant};
use jscc_core::{Error, JointChannelChain, SourceChain, StochasticMatrix};

use crate::config::{KRange, RunConfig};
use crate::error::CliError;
use crate::table::{num, opt, Table};

/// Preset used by `reproduce`.
pub const REFERENCE: (f64, f64) = (0.1, 0.2);
pub const REFERENCE_N: u64 = 10_000;
pub const REFERENCE_K: KRange = KRange {
    min: 6000,
    max: 8000,
    step: 1,
};
pub const REFERENCE_RATIO: f64 = 0.75;
pub const REFERENCE_NS: [u64; 10] = [
    1_000, 2_000, 5_000, 10_000, 20_000, 50_000, 100_000, 200_000, 500_000, 1_000_000,
];
pub const ORACLE_THETAS: [f64; 4] = [-0.7, -0.3, 0.3, 0.7];
pub const ORACLE_N_MAX: usize = 6;
pub const SANDWICH_TOL: f64 = 1e-9;

/// A table plus the status the process should exit with once it is written.
pub struct Outcome {
    pub table: Table,
    pub status: Result<(), CliError>,
}

impl From<Table> for Outcome {
    fn from(table: Table) -> Self {
        Outcome {
            table,
            status: Ok(()),
        }
    }
}

fn grid(cfg: &RunConfig, flag: Option<usize>) -> usize {
    flag.or(cfg.grid_density).unwrap_or(DEFAULT_GRID_DENSITY)
}

fn flag(b: bool) -> String {
    if b { "true" } else { "false" }.into()
}

/// `Ok(None)` for rates outside the range where a quantity is defined.
fn in_range<T>(r: Result<T, Error>) -> Result<Option<T>, CliError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(
            Error::RateOutOfRange { .. }
            | Error::OutOfRange { .. }
            | Error::DegenerateDispersion(_),
        ) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

pub fn measures(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let source = cfg.source()?;
    let channel = cfg.channel()?;
    let mut t = Table::new(&["quantity", "value"]);
    let mut row = |k: &str, v: String| t.push(vec![k.to_string(), v]);

    let s = ChainMeasures::new(source.as_joint())?;
    row("source_entropy_rate", num(s.entropy_rate()?));
    row("source_dispersion", num(s.dispersion()?));
    row("source_h0", num(s.h_zero(Branch::Down)?));

    let a1 = channel.check_assumption1().is_some();
    let a2 = channel.is_strongly_non_hidden();
    row("channel_assumption1", flag(a1));
    row("channel_assumption2", flag(a2));
    let c = ChainMeasures::new(&channel)?;
    row("channel_entropy_rate", num(c.entropy_rate()?));
    row("channel_dispersion", num(c.dispersion()?));
    row("channel_h0_down", num(c.h_zero(Branch::Down)?));
    if a2 {
        row("channel_h0_up", num(c.h_zero(Branch::Up)?));
    }

    let summary = AsymptoticSummary::new(&source, &channel, cfg.r.unwrap_or(1.0))?;
    row("capacity", num(summary.capacity));
    row("optimal_rate", num(summary.optimal_rate));
    row("dispersion", num(summary.dispersion));
    if cfg.r.is_some() {
        row("critical_rate", opt(summary.critical_rate));
    }
    Ok(t.into())
}

fn bound_points(cfg: &RunConfig) -> Result<Vec<(u64, u64)>, CliError> {
    if let Some(kr) = cfg.k_range {
        let n = cfg
            .n
            .ok_or_else(|| CliError::Config("k_range needs n".into()))?;
        return checked_sweep(n, kr);
    }
    if let Some(ns) = &cfg.n_values {
        let r = cfg
            .r
            .ok_or_else(|| CliError::Config("n_values needs r".into()))?;
        if !(r > 0.0) {
            return Err(CliError::Config(format!("r: must be positive, got {r}")));
        }
        return Ok(n_sweep(ns, r));
    }
    match (cfg.k, cfg.n) {
        (Some(k), Some(n)) => Ok(vec![(k, n)]),
        _ => Err(CliError::Config(
            "bounds need k and n, k_range and n, or n_values and r".into(),
        )),
    }
}

fn checked_sweep(n: u64, kr: KRange) -> Result<Vec<(u64, u64)>, CliError> {
    if kr.min > kr.max {
        return Err(CliError::Config(format!(
            "k_range: min {} exceeds max {}",
            kr.min, kr.max
        )));
    }
    if kr.step == 0 {
        return Err(CliError::Config("k_range: step must be positive".into()));
    }
    Ok(k_sweep(n, kr.min, kr.max, kr.step)?)
}

pub fn bounds(cfg: &RunConfig, grid_flag: Option<usize>) -> Result<Outcome, CliError> {
    let source = cfg.source()?;
    let channel = cfg.channel()?;
    let points = bound_points(cfg)?;
    let kinds: Vec<BoundKind> = match &cfg.bounds {
        Some(names) => names
            .iter()
            .map(|n| {
                n.parse()
                    .map_err(|_| CliError::Config(format!("bounds: unknown kind \"{n}\"")))
            })
            .collect::<Result<_, _>>()?,
        None if channel.is_strongly_non_hidden() => BoundKind::ALL.to_vec(),
        None => vec![BoundKind::DirectA1, BoundKind::ConverseA1],
    };
    let curve = bound_curve(&source, &channel, &points, &kinds, grid(cfg, grid_flag));

    let mut t = Table::new(&["k", "n", "bound", "log_bound", "s", "rho", "status"]);
    let mut first_error = None;
    for row in &curve.rows {
        let mut cells = vec![row.k.to_string(), row.n.to_string(), row.kind.name().into()];
        match &row.outcome {
            Ok(b) => {
                let w = b.witness;
                let status = if b.value.is_vacuous() {
                    "vacuous"
                } else {
                    "finite"
                };
                cells.extend([
                    opt(b.value.finite()),
                    opt(w.map(|w| w.s)),
                    opt(w.and_then(|w| w.rho)),
                    status.into(),
                ]);
            }
            Err(e) => {
                first_error.get_or_insert_with(|| e.clone());
                cells.extend([
                    String::new(),
                    String::new(),
                    String::new(),
                    format!("error: {e}"),
                ]);
            }
        }
        t.push(cells);
    }
    let any_vacuous = curve
        .rows
        .iter()
        .any(|r| r.outcome.as_ref().is_ok_and(|b| b.value.is_vacuous()));
    let status = match (curve.all_vacuous(), any_vacuous, first_error) {
        (false, _, _) => Ok(()),
        (true, true, _) => Err(CliError::VacuousOnly),
        (true, false, Some(e)) => Err(e.into()),
        (true, false, None) => Ok(()),
    };
    Ok(Outcome { table: t, status })
}

pub fn asymptotics(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let source = cfg.source()?;
    let channel = cfg.channel()?;
    let rs: Vec<f64> = match (&cfg.r_values, cfg.r) {
        (Some(v), _) => v.clone(),
        (None, Some(r)) => vec![r],
        (None, None) => return Err(CliError::Config("asymptotics need r or r_values".into())),
    };
    if let Some(r) = rs.iter().find(|r| !(**r > 0.0)) {
        return Err(CliError::Config(format!("r: must be positive, got {r}")));
    }
    let strong = channel.is_strongly_non_hidden();
    let rate = (channel.x_size() as f64).ln();
    let mut t = Table::new(&[
        "r",
        "optimal_rate",
        "dispersion",
        "critical_rate",
        "direct_a1",
        "direct_a2",
        "converse_a1",
        "converse_a2",
        "md_per_n",
    ]);
    for &r in &rs {
        let summary = AsymptoticSummary::new(&source, &channel, r)?;
        let down = TiltedFamily::new(&source, &channel, r, Variant::Down)?;
        let up = if strong {
            Some(down.with_variant(Variant::Up)?)
        } else {
            None
        };
        let d1 = exponent_direct(&down, rate, Assumption::One)?;
        let c1 = in_range(exponent_converse(&down, rate, Assumption::One))?;
        let (d2, c2) = match &up {
            Some(f) => (
                Some(exponent_direct(f, rate, Assumption::Two)?),
                in_range(exponent_converse(f, rate, Assumption::Two))?,
            ),
            None => (None, None),
        };
        let md = if r < summary.optimal_rate {
            in_range(moderate_deviation(&summary, summary.optimal_rate - r, 0.25))?
        } else {
            None
        };
        t.push(vec![
            num(r),
            num(summary.optimal_rate),
            num(summary.dispersion),
            opt(summary.critical_rate),
            num(d1),
            opt(d2),
            opt(c1),
            opt(c2),
            opt(md),
        ]);
    }
    Ok(t.into())
}

fn reference_chains() -> Result<(SourceChain<f64>, JointChannelChain<f64>), CliError> {
    let w = StochasticMatrix::binary(REFERENCE.0, REFERENCE.1)?;
    Ok((
        SourceChain::stationary(w.clone())?,
        JointChannelChain::singleton(w)?,
    ))
}

pub fn reproduce(
    figure: u8,
    cfg: &RunConfig,
    grid_flag: Option<usize>,
) -> Result<Outcome, CliError> {
    let (source, channel) = reference_chains()?;
    let rate = std::f64::consts::LN_2;
    let kinds = [BoundKind::DirectA2, BoundKind::ConverseA2];
    let base = TiltedFamily::new(&source, &channel, REFERENCE_RATIO, Variant::Up)?;
    let grid = grid(cfg, grid_flag);
    let neg = |v: Option<f64>| v.map(|x| -x);
    let (t, finite) = match figure {
        1 => {
            let n = cfg.n.unwrap_or(REFERENCE_N);
            let points = checked_sweep(n, cfg.k_range.unwrap_or(REFERENCE_K))?;
            let curve = bound_curve(&source, &channel, &points, &kinds, grid);
            let summary = AsymptoticSummary::new(&source, &channel, REFERENCE_RATIO)?;
            let mut t = Table::new(&["k", "direct_a2", "converse_a2", "n_exponent", "e_md"]);
            let mut finite = false;
            for (pair, &(k, n)) in curve.rows.chunks(2).zip(&points) {
                let d = bound_value(&pair[0])?;
                let c = bound_value(&pair[1])?;
                finite |= d.is_some() || c.is_some();
                let ratio = k as f64 / n as f64;
                let e = exponent_direct(&base.with_rate_ratio(ratio)?, rate, Assumption::Two)?;
                let md = in_range(md_approx(&summary, k, n))?;
                t.push(vec![
                    k.to_string(),
                    opt(neg(d)),
                    opt(neg(c)),
                    num(n as f64 * e),
                    opt(md),
                ]);
            }
            (t, finite)
        }
        2 => {
            let ns = cfg
                .n_values
                .clone()
                .unwrap_or_else(|| REFERENCE_NS.to_vec());
            let points = n_sweep(&ns, REFERENCE_RATIO);
            let curve = bound_curve(&source, &channel, &points, &kinds, grid);
            let e = exponent_direct(&base, rate, Assumption::Two)?;
            let mut t = Table::new(&["n", "k", "direct_a2", "converse_a2", "exponent"]);
            let mut finite = false;
            for (pair, &(k, n)) in curve.rows.chunks(2).zip(&points) {
                let per = |v: Option<f64>| v.map(|x| -x / n as f64);
                let d = bound_value(&pair[0])?;
                let c = bound_value(&pair[1])?;
                finite |= d.is_some() || c.is_some();
                t.push(vec![
                    n.to_string(),
                    k.to_string(),
                    opt(per(d)),
                    opt(per(c)),
                    num(e),
                ]);
            }
            (t, finite)
        }
        other => {
            return Err(CliError::Config(format!(
                "reproduce: unknown figure {other}"
            )))
        }
    };
    let status = if finite {
        Ok(())
    } else {
        Err(CliError::VacuousOnly)
    };
    Ok(Outcome { table: t, status })
}

/// Finite value of a curve row; a rate outside the converse range counts as
/// vacuous, any other failure aborts.
fn bound_value(row: &jscc_core::bounds::CurveRow<f64>) -> Result<Option<f64>, CliError> {
    match &row.outcome {
        Ok(b) => Ok(b.value.finite()),
        Err(e) => in_range(Err(e.clone())).map(|_: Option<()>| None),
    }
}

pub fn oracle(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let mut chains: Vec<(String, JointChannelChain<f64>)> = Vec::new();
    if cfg.source.is_some() {
        chains.push(("source".into(), cfg.source()?.as_joint().clone()));
    }
    if cfg.channel.is_some() {
        chains.push(("channel".into(), cfg.channel()?));
    }
    if chains.is_empty() {
        chains.push(("W(0.1,0.2)".into(), reference_chains()?.1));
    }
    let thetas = cfg.thetas.clone().unwrap_or_else(|| ORACLE_THETAS.to_vec());
    let primes = cfg
        .theta_primes
        .clone()
        .unwrap_or_else(|| ORACLE_THETAS.to_vec());
    let n_max = cfg.n_max.unwrap_or(ORACLE_N_MAX);
    if n_max < 2 {
        return Err(CliError::Config(format!(
            "n_max: must be at least 2, got {n_max}"
        )));
    }
    let mut t = Table::new(&[
        "chain",
        "family",
        "theta",
        "theta_prime",
        "n",
        "lower",
        "exact",
        "upper",
        "margin",
    ]);
    let mut status = Ok(());
    for (name, chain) in &chains {
        let report = sandwich_report(chain, &thetas, &primes, n_max)?;
        for e in &report.entries {
            t.push(vec![
                name.clone(),
                e.family.name().into(),
                num(e.theta),
                opt(e.theta_prime),
                e.n.to_string(),
                num(e.lower),
                num(e.exact),
                num(e.upper),
                num(e.margin()),
            ]);
        }
        if status.is_ok() {
            status = report.check(SANDWICH_TOL).map_err(CliError::from);
        }
    }
    Ok(Outcome { table: t, status })
}
