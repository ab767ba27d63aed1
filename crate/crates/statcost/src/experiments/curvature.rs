use serde::{Deserialize, Serialize};
use serde_json::json;
use statcost_core::estimators::{curvature_factor, marginal_estimate};
use statcost_core::oracles::{closed_form_profile, exact_expected_marginal, exact_shapley};
use statcost_core::rng::derive_seed;
use statcost_core::{Dataset, Game, SetDistribution};

use super::{fmt, ratio, Ctx, DATA};
use crate::error::{CliError, CliResult};
use crate::report::{CellRecord, KindOutput, PlotPoint, Table};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub n: usize,
    pub kappas: Vec<f64>,
    pub eps_prime: f64,
    pub m: usize,
    /// Additive slack in the band `[√(1-κ) - ε, 1/(√(1-κ) - ε)]`.
    #[serde(default = "default_band")]
    pub band_epsilon: f64,
    /// Sizes at which the analytic values are checked against enumeration.
    #[serde(default = "default_verify")]
    pub verify_n: Vec<usize>,
    /// Ratios are suppressed when `|φ|` is below this fraction of
    /// `max_S C(S)`.
    #[serde(default = "default_floor")]
    pub ratio_floor: f64,
}

fn default_band() -> f64 {
    0.05
}

fn default_verify() -> Vec<usize> {
    vec![8, 12, 16]
}

fn default_floor() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellOut {
    pub kappa: f64,
    pub plain: f64,
    pub scaled: f64,
    pub exact_shapley: f64,
    pub ratio_plain: Option<f64>,
    pub ratio_scaled: Option<f64>,
    pub abs_error_scaled: f64,
    pub band: (f64, f64),
    pub plain_in_band: bool,
    pub scaled_in_band: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerKappa {
    pub kappa: f64,
    pub band: (f64, f64),
    pub ok: usize,
    pub scaled_in_band: usize,
    pub plain_in_band: usize,
    /// Ratios with the estimate replaced by its exact expectation.
    pub expected_ratio_scaled: f64,
    pub expected_ratio_plain: f64,
}

pub fn band(kappa: f64, eps: f64) -> (f64, f64) {
    let lo = (1.0 - kappa).sqrt() - eps;
    (lo, 1.0 / lo)
}

fn in_band(r: Option<f64>, b: (f64, f64)) -> bool {
    r.is_some_and(|r| r >= b.0 && r <= b.1)
}

/// Largest gap between analytic and enumerated Shapley values and uniform
/// expected marginals over both games of the pair at size `n`.
fn verify(n: usize, kappa: f64, eps_prime: f64) -> CliResult<f64> {
    let mut worst: f64 = 0.0;
    let uniform = SetDistribution::uniform(n)?;
    for game in [
        Game::curvature_first(n, kappa, eps_prime)?,
        Game::curvature_second(n, kappa, eps_prime)?,
    ] {
        let phi = exact_shapley(&game)?;
        for (i, p) in phi.iter().enumerate() {
            let profile = closed_form_profile(&game, i).ok_or_else(|| CliError::Spec("no closed form".into()))?;
            worst = worst.max((profile.shapley() - p).abs());
            let v = exact_expected_marginal(&game, &uniform, i)?;
            worst = worst.max((profile.uniform_expectation() - v).abs());
        }
    }
    Ok(worst)
}

fn cell(p: &Params, kappa: f64, seed: u64) -> CliResult<CellOut> {
    let game = Game::curvature_first(p.n, kappa, p.eps_prime)?;
    let star = 0;
    let profile = closed_form_profile(&game, star).expect("curvature games have closed forms");
    let exact = profile.shapley();
    let floor = p.ratio_floor * game.grand_cost();
    let ds = Dataset::generate(&game, &SetDistribution::uniform(p.n)?, p.m, derive_seed(seed, DATA))?;
    let plain = marginal_estimate(&ds, star)?;
    let scaled = plain * curvature_factor(kappa)?;
    let b = band(kappa, p.band_epsilon);
    let (ratio_plain, ratio_scaled) = (ratio(plain, exact, floor), ratio(scaled, exact, floor));
    Ok(CellOut {
        kappa,
        plain,
        scaled,
        exact_shapley: exact,
        ratio_plain,
        ratio_scaled,
        abs_error_scaled: (scaled - exact).abs(),
        band: b,
        plain_in_band: in_band(ratio_plain, b),
        scaled_in_band: in_band(ratio_scaled, b),
    })
}

pub fn run(ctx: &Ctx, p: &Params) -> CliResult<KindOutput> {
    let mut prechecks = Vec::new();
    for &kappa in &p.kappas {
        for &n in &p.verify_n {
            prechecks.push(match verify(n, kappa, p.eps_prime) {
                Ok(d) => json!({
                    "check": "closed-form-vs-enumeration",
                    "n": n,
                    "kappa": kappa,
                    "max_abs_diff": d,
                    "ok": d <= 1e-9,
                }),
                Err(e) => json!({
                    "check": "closed-form-vs-enumeration",
                    "n": n,
                    "kappa": kappa,
                    "skipped": e.to_string(),
                }),
            });
        }
    }
    let coords: Vec<(usize, usize)> = (0..p.kappas.len())
        .flat_map(|k| (0..ctx.seeds).map(move |s| (k, s)))
        .collect();
    let cells: Vec<CellRecord> = ctx.map(&coords, |&(k, s)| {
        let seed = ctx.seed(s);
        let kappa = p.kappas[k];
        CellRecord::new(json!({ "kappa": kappa, "seed_index": s }), seed, cell(p, kappa, seed))
    });
    let mut aggregates = Vec::new();
    let mut table = Table::new(["kappa", "band", "scaled in band", "plain in band", "E ratio scaled", "E ratio plain"]);
    let mut plot = Vec::new();
    for (k, &kappa) in p.kappas.iter().enumerate() {
        let outs: Vec<CellOut> = cells[k * ctx.seeds..(k + 1) * ctx.seeds]
            .iter()
            .filter_map(|c| c.values().and_then(|v| serde_json::from_value(v.clone()).ok()))
            .collect();
        let game = Game::curvature_first(p.n, kappa, p.eps_prime)?;
        let profile = closed_form_profile(&game, 0).expect("closed form");
        let v = profile.uniform_expectation();
        let phi = profile.shapley();
        let row = PerKappa {
            kappa,
            band: band(kappa, p.band_epsilon),
            ok: outs.len(),
            scaled_in_band: outs.iter().filter(|o| o.scaled_in_band).count(),
            plain_in_band: outs.iter().filter(|o| o.plain_in_band).count(),
            expected_ratio_scaled: v * curvature_factor(kappa)? / phi,
            expected_ratio_plain: v / phi,
        };
        table.push(vec![
            fmt(kappa),
            format!("[{}, {}]", fmt(row.band.0), fmt(row.band.1)),
            format!("{}/{}", row.scaled_in_band, row.ok),
            format!("{}/{}", row.plain_in_band, row.ok),
            fmt(row.expected_ratio_scaled),
            fmt(row.expected_ratio_plain),
        ]);
        for o in &outs {
            for (series, r) in [("ratio-scaled", o.ratio_scaled), ("ratio-plain", o.ratio_plain)] {
                if let Some(y) = r {
                    plot.push(PlotPoint {
                        x: kappa,
                        y,
                        series: series.into(),
                    });
                }
            }
        }
        let mut a = serde_json::to_value(&row)?;
        a["aggregate"] = json!("curvature");
        aggregates.push(a);
    }
    Ok(KindOutput {
        prechecks,
        cells,
        aggregates,
        table,
        plot,
    })
}
