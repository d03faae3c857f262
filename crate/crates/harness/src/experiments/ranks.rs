use rrmimo_core::bases::{build_basis, BasisKind};
use rrmimo_core::channel::synthesize_rx_with;
use rrmimo_core::estimators::{estimate_correlation, numerical_rank};
use rrmimo_core::rank_aoa::{imod, ImodOptions};
use rrmimo_core::spectrum::{bias_matrix, dominant_support, lpm, optimal_order};

use super::{alignment_for, bases_for, par_trials, ChannelModel, Context, Seeds};
use crate::config::ExperimentConfig;
use crate::stats::BatchMeans;
use crate::table::{Cell, ResultTable};
use crate::Result;

/// Note attached to KLT cells whose sample covariance cannot reach the true rank.
pub const KLT_SAMPLE_DEFICIENT: &str = "klt-sample-deficient";

/// Relative eigenvalue floor used to count the rank of `Ψ̂`.
const RANK_TOL: f64 = 1e-9;

/// Outcome of one IMOD run on an estimated correlation.
struct EstimatedRun {
    m_hat: usize,
    phi_hat: f64,
    converged: bool,
}

struct TrialOutcome {
    psi_rank: usize,
    runs: Vec<EstimatedRun>,
}

/// Modeling orders per `(basis, α, η)` level.
///
/// Levels pair `alpha_db[i]`, `etas[i]` and `estimated_etas[i]`. With the exact
/// correlation the table has `m_star`, `m_eta`, and IMOD's `m_eta_hat_exact`,
/// `phi_hat_exact_deg`, `imod_iterations` and `imod_converged`. With `Φ̂` built from
/// `J = corr_blocks` pilot blocks per trial it has `m_eta_hat_est` averaged over
/// trials, or `NaN` noted [`KLT_SAMPLE_DEFICIENT`] when the rank of `Ψ̂` stays below
/// the true KLT dominant rank.
pub fn run_rank_tables(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let ctx = Context::new(cfg)?;
    let mut table = ctx.table();
    let opts = ImodOptions {
        grid_deg: cfg.grid_deg,
        ..ImodOptions::default()
    };
    for (s_idx, scenario) in cfg.scenarios.iter().enumerate() {
        let model = ChannelModel::new(scenario, &ctx.geom)?;
        let phi = scenario.mean_aoa_rad().expect("validated: single cluster");
        let w = lpm(&ctx.geom, phi)?;
        let bases = bases_for(cfg, &model.corr)?;
        let klt = build_basis(BasisKind::Klt, ctx.m(), Some(model.corr.matrix()))?;
        let klt_spec = bias_matrix(&klt, &model.corr, None)?.spectrum;
        let seeds = Seeds::new(cfg.seed, s_idx);
        let at = Cell::scenario(&scenario.label);

        for (level, (&db, alpha)) in cfg.alpha_db.iter().zip(cfg.alphas()).enumerate() {
            let (eta, eta_est) = (cfg.etas[level], cfg.estimated_etas[level]);
            for basis in &bases {
                let spec =
                    bias_matrix(basis, &model.corr, alignment_for(basis, Some(&w)))?.spectrum;
                let cell = at.clone().basis(basis.kind().name()).alpha_db(db);
                let star = optimal_order(&spec, alpha, ctx.energy(), true);
                table.push(&cell, "m_star", star.m as f64, None);
                let cell = cell.eta(eta);
                table.push(
                    &cell,
                    "m_eta",
                    dominant_support(&spec, eta, 1)?.m as f64,
                    None,
                );
                let exact = imod(basis, &model.corr, eta, &ctx.geom, opts)?;
                table.push(&cell, "m_eta_hat_exact", exact.m_eta_hat as f64, None);
                table.push(&cell, "phi_hat_exact_deg", exact.phi_hat.to_degrees(), None);
                table.push(&cell, "imod_iterations", exact.iterations as f64, None);
                table.push(
                    &cell,
                    "imod_converged",
                    f64::from(u8::from(exact.converged)),
                    None,
                );
            }

            let outcomes = par_trials(cfg.trials, |t| {
                let j = cfg.corr_blocks;
                let blocks = (0..j)
                    .map(|b| {
                        let draw = (t * j + b) as u64;
                        let h = model.draw(&ctx.geom, &mut seeds.channel(draw))?;
                        let y = synthesize_rx_with(
                            &h,
                            alpha,
                            &ctx.pilot,
                            1.0,
                            &mut seeds.noise(level, draw),
                        );
                        Ok((y, ctx.pilot.clone()))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let est = estimate_correlation(&blocks, alpha.sqrt() * ctx.energy())?;
                let runs = cfg
                    .bases
                    .iter()
                    .map(|b| {
                        let basis = build_basis(b.kind(), ctx.m(), Some(est.corr.matrix()))?;
                        let r = imod(&basis, &est.corr, eta_est, &ctx.geom, opts)?;
                        Ok(EstimatedRun {
                            m_hat: r.m_eta_hat,
                            phi_hat: r.phi_hat,
                            converged: r.converged,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(TrialOutcome {
                    psi_rank: numerical_rank(&est.psi, RANK_TOL),
                    runs,
                })
            })?;

            let psi_rank_max = outcomes.iter().map(|o| o.psi_rank).max().unwrap_or(0);
            let klt_rank = dominant_support(&klt_spec, eta_est, 1)?.m;
            let est_cell = at.clone().alpha_db(db).eta(eta_est);
            table.push(&est_cell, "psi_rank_max", psi_rank_max as f64, None);
            table.push(&est_cell, "klt_m_eta_true", klt_rank as f64, None);
            for (b_idx, basis) in bases.iter().enumerate() {
                let cell = est_cell.clone().basis(basis.kind().name());
                let mut m_hat = BatchMeans::new(cfg.trials);
                let mut phi_hat = BatchMeans::new(cfg.trials);
                let mut converged = BatchMeans::new(cfg.trials);
                for (t, o) in outcomes.iter().enumerate() {
                    let run = &o.runs[b_idx];
                    m_hat.push(t, run.m_hat as f64);
                    phi_hat.push(t, run.phi_hat.to_degrees());
                    converged.push(t, f64::from(u8::from(run.converged)));
                }
                if basis.kind() == BasisKind::Klt && psi_rank_max < klt_rank {
                    let note = Some(KLT_SAMPLE_DEFICIENT.to_string());
                    table.push_noted(&cell, "m_eta_hat_est", f64::NAN, None, note);
                    table.push_mean(&cell, "m_eta_hat_est_raw", &m_hat);
                } else {
                    table.push_mean(&cell, "m_eta_hat_est", &m_hat);
                }
                table.push_mean(&cell, "phi_hat_est_deg", &phi_hat);
                table.push_mean(&cell, "imod_converged_est", &converged);
            }
        }
    }
    Ok(table)
}
