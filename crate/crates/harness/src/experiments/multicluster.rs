use rrmimo_core::bases::truncate;
use rrmimo_core::channel::synthesize_rx_with;
use rrmimo_core::estimators::{estimate_ls, estimate_rr_regular, matched_filter};
use rrmimo_core::spectrum::{
    best_captured_energy, bias_matrix, dominant_support, theoretical_mse, DominantSupport,
};

use super::{bases_for, par_trials, ChannelModel, Context, Seeds};
use crate::config::ExperimentConfig;
use crate::stats::BatchMeans;
use crate::table::{Cell, ResultTable};
use crate::Result;

/// Unaligned spectra of multi-cluster channels with one- and two-window supports,
/// and RR estimation on the two-window support against LS.
pub fn run_multicluster(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let ctx = Context::new(cfg)?;
    let mut table = ctx.table();
    let m = ctx.m() as f64;
    for (s_idx, scenario) in cfg.scenarios.iter().enumerate() {
        let model = ChannelModel::new(scenario, &ctx.geom)?;
        let basis = bases_for(cfg, &model.corr)?.remove(0);
        let spec = bias_matrix(&basis, &model.corr, None)?.spectrum;
        let at = Cell::scenario(&scenario.label).basis(basis.kind().name());
        for (i, v) in spec.diag().iter().enumerate() {
            table.push(&at.clone().x((i + 1) as f64), "spectrum", *v, None);
        }
        let seeds = Seeds::new(cfg.seed, s_idx);
        for &eta in &cfg.etas {
            let cell = at.clone().eta(eta);
            let one = dominant_support(&spec, eta, 1)?;
            let two = dominant_support(&spec, eta, 2)?;
            table.push_noted(&cell, "m_eta_1w", one.m as f64, None, Some(describe(&one)));
            table.push_noted(&cell, "m_eta_2w", two.m as f64, None, Some(describe(&two)));
            table.push(&cell, "windows_2w", two.windows.len() as f64, None);
            table.push(&cell, "gap_2w", two.gap().map_or(0.0, |g| g as f64), None);
            // captured energy of the best 1- and 2-window supports of the same size
            table.push(
                &cell,
                "captured_at_m2w_1w",
                best_captured_energy(&spec, two.m, 1) / m,
                None,
            );
            table.push(
                &cell,
                "captured_at_m2w_2w",
                best_captured_energy(&spec, two.m, 2) / m,
                None,
            );

            let support = two.indices();
            let trunc = truncate(&basis, &support)?;
            let per_trial = par_trials(cfg.trials, |t| {
                let h = model.draw(&ctx.geom, &mut seeds.channel(t as u64))?;
                cfg.alphas()
                    .into_iter()
                    .enumerate()
                    .map(|(a_idx, alpha)| {
                        let y = synthesize_rx_with(
                            &h,
                            alpha,
                            &ctx.pilot,
                            1.0,
                            &mut seeds.noise(a_idx, t as u64),
                        );
                        let mf = matched_filter(&y, &ctx.pilot, alpha)?;
                        Ok([
                            estimate_rr_regular(&mf, &trunc)?.score(&h) / m,
                            estimate_ls(&mf).score(&h) / m,
                        ])
                    })
                    .collect::<Result<Vec<_>>>()
            })?;
            for (a_idx, (&db, alpha)) in cfg.alpha_db.iter().zip(cfg.alphas()).enumerate() {
                let point = cell.clone().alpha_db(db);
                for (k, name) in ["rr_union", "ls"].into_iter().enumerate() {
                    let mut stats = BatchMeans::new(cfg.trials);
                    per_trial
                        .iter()
                        .enumerate()
                        .for_each(|(t, v)| stats.push(t, v[a_idx][k]));
                    let cell = point.clone().estimator(name);
                    table.push_mean(&cell, "nmse_sim", &stats);
                    let theory = if k == 0 {
                        theoretical_mse(&spec, &support, alpha, ctx.energy())?.nmse
                    } else {
                        1.0 / (alpha * ctx.energy())
                    };
                    table.push(&cell, "nmse_theory", theory, None);
                }
            }
        }
    }
    Ok(table)
}

/// 1-based inclusive windows, e.g. `1-25;41-47`.
fn describe(s: &DominantSupport) -> String {
    s.windows
        .iter()
        .map(|w| format!("{}-{}", w.start + 1, w.end()))
        .collect::<Vec<_>>()
        .join(";")
}
