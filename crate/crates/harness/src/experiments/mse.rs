use nalgebra::SymmetricEigen;
use rrmimo_core::bases::{leading, Basis};
use rrmimo_core::channel::synthesize_rx_with;
use rrmimo_core::estimators::{
    estimate_beta, estimate_ls, estimate_mmse, estimate_rr_lpm, matched_filter, Alignment,
};
use rrmimo_core::spectrum::{bias_matrix, lpm, theoretical_mse, LpmOperator};
use rrmimo_core::{symmetrize, CVector};

use super::{alignment_for, bases_for, par_trials, ChannelModel, Context, Seeds};
use crate::config::ExperimentConfig;
use crate::stats::BatchMeans;
use crate::table::{Cell, ResultTable};
use crate::Result;

/// NMSE of the RR estimator on the leading `m` basis columns, against the closed form.
///
/// Per `(basis, m, α)` the table carries `nmse_sim` (batch-means standard error) and
/// the theoretical `nmse_theory`, `variance_theory` and `bias_theory`, all divided by
/// `M`. LS and linear MMSE are reported alongside as `estimator = ls | mmse`.
pub fn run_mse_sweep(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let ctx = Context::new(cfg)?;
    let mut table = ctx.table();
    for (s_idx, scenario) in cfg.scenarios.iter().enumerate() {
        let model = ChannelModel::new(scenario, &ctx.geom)?;
        let align = scenario
            .mean_aoa_rad()
            .map(|phi| lpm(&ctx.geom, phi))
            .transpose()?;
        let bases = bases_for(cfg, &model.corr)?;
        let seeds = Seeds::new(cfg.seed, s_idx);

        let per_trial = par_trials(cfg.trials, |t| {
            simulate(&ctx, &model, align.as_ref(), &bases, seeds, t)
        })?;
        let layout = Layout::new(cfg);
        let mut stats = vec![BatchMeans::new(cfg.trials); layout.len()];
        for (t, values) in per_trial.iter().enumerate() {
            for (acc, &v) in stats.iter_mut().zip(values) {
                acc.push(t, v);
            }
        }

        let m = ctx.m() as f64;
        let lambdas = SymmetricEigen::new(symmetrize(model.corr.matrix())).eigenvalues;
        let spectra = bases
            .iter()
            .map(|b| Ok(bias_matrix(b, &model.corr, alignment_for(b, align.as_ref()))?.spectrum))
            .collect::<Result<Vec<_>>>()?;
        for (a_idx, (&db, alpha)) in cfg.alpha_db.iter().zip(cfg.alphas()).enumerate() {
            let snr = alpha * ctx.energy();
            let at = Cell::scenario(&scenario.label).alpha_db(db);
            for (b_idx, (basis, spec)) in bases.iter().zip(&spectra).enumerate() {
                for (o_idx, &order) in cfg.orders.iter().enumerate() {
                    let cell = at
                        .clone()
                        .basis(basis.kind().name())
                        .estimator("rr")
                        .m(order);
                    let support: Vec<usize> = (0..order).collect();
                    let pred = theoretical_mse(spec, &support, alpha, ctx.energy())?;
                    table.push_mean(&cell, "nmse_sim", &stats[layout.rr(a_idx, b_idx, o_idx)]);
                    table.push(&cell, "nmse_theory", pred.nmse, None);
                    table.push(&cell, "variance_theory", pred.variance / m, None);
                    table.push(&cell, "bias_theory", pred.bias / m, None);
                }
            }
            let ls = at.clone().estimator("ls");
            table.push_mean(&ls, "nmse_sim", &stats[layout.ls(a_idx)]);
            table.push(&ls, "nmse_theory", 1.0 / snr, None);
            // error covariance Φ(β‖p‖²Φ + I)⁻¹ has eigenvalues λ / (β‖p‖²λ + 1)
            let mmse_theory = lambdas
                .iter()
                .map(|&l| l.max(0.0) / (snr * l.max(0.0) + 1.0))
                .sum::<f64>()
                / m;
            let mmse = at.estimator("mmse");
            table.push_mean(&mmse, "nmse_sim", &stats[layout.mmse(a_idx)]);
            table.push(&mmse, "nmse_theory", mmse_theory, None);
        }
    }
    Ok(table)
}

/// Flat index of every per-trial metric.
struct Layout {
    bases: usize,
    orders: usize,
    alphas: usize,
}

impl Layout {
    fn new(cfg: &ExperimentConfig) -> Self {
        Self {
            bases: cfg.bases.len(),
            orders: cfg.orders.len(),
            alphas: cfg.alpha_db.len(),
        }
    }
    fn per_alpha(&self) -> usize {
        self.bases * self.orders + 2
    }
    fn len(&self) -> usize {
        self.alphas * self.per_alpha()
    }
    fn rr(&self, a: usize, b: usize, o: usize) -> usize {
        a * self.per_alpha() + b * self.orders + o
    }
    fn ls(&self, a: usize) -> usize {
        a * self.per_alpha() + self.bases * self.orders
    }
    fn mmse(&self, a: usize) -> usize {
        self.ls(a) + 1
    }
}

fn simulate(
    ctx: &Context<'_>,
    model: &ChannelModel,
    align: Option<&LpmOperator>,
    bases: &[Basis],
    seeds: Seeds,
    trial: usize,
) -> Result<Vec<f64>> {
    let cfg = ctx.cfg;
    let m = ctx.m() as f64;
    let layout = Layout::new(cfg);
    let mut out = vec![0.0; layout.len()];
    let h = model.draw(&ctx.geom, &mut seeds.channel(trial as u64))?;
    let h_coeffs: Vec<CVector> = bases
        .iter()
        .map(|b| {
            b.q()
                .ad_mul(&alignment_for(b, align).map_or_else(|| h.clone(), |w| w.apply_adjoint(&h)))
        })
        .collect();
    for (a_idx, alpha) in cfg.alphas().into_iter().enumerate() {
        let y = synthesize_rx_with(
            &h,
            alpha,
            &ctx.pilot,
            1.0,
            &mut seeds.noise(a_idx, trial as u64),
        );
        let beta = if cfg.known_beta {
            alpha
        } else {
            estimate_beta(&y, &ctx.pilot)?
        };
        let mf = matched_filter(&y, &ctx.pilot, beta)?;
        out[layout.ls(a_idx)] = estimate_ls(&mf).score(&h) / m;
        out[layout.mmse(a_idx)] = estimate_mmse(&y, &ctx.pilot, beta, &model.corr)?.score(&h) / m;
        for (b_idx, basis) in bases.iter().enumerate() {
            let w = alignment_for(basis, align);
            if cfg.known_phi || w.is_none() {
                let x = w
                    .map_or_else(|| mf.yp.clone(), |w| w.apply_adjoint(&mf.yp))
                    .unscale(mf.gamma);
                // ‖ĥ_m − h‖² = Σ_{ℓ<m} |c_ℓ − d_ℓ|² + Σ_{ℓ≥m} |d_ℓ|² in the aligned, transformed domain
                let c = basis.q().ad_mul(&x);
                let d = &h_coeffs[b_idx];
                let n = c.len();
                let mut head = vec![0.0; n + 1];
                let mut tail = vec![0.0; n + 1];
                for l in 0..n {
                    head[l + 1] = head[l] + (c[l] - d[l]).norm_sqr();
                    tail[n - 1 - l] = tail[n - l] + d[n - 1 - l].norm_sqr();
                }
                for (o_idx, &order) in cfg.orders.iter().enumerate() {
                    out[layout.rr(a_idx, b_idx, o_idx)] = (head[order] + tail[order]) / m;
                }
            } else {
                for (o_idx, &order) in cfg.orders.iter().enumerate() {
                    let trunc = leading(basis, order)?;
                    let search = Alignment::Search {
                        grid_deg: cfg.grid_deg,
                    };
                    out[layout.rr(a_idx, b_idx, o_idx)] =
                        estimate_rr_lpm(&mf, &trunc, &ctx.geom, search)?.score(&h) / m;
                }
            }
        }
    }
    Ok(out)
}
