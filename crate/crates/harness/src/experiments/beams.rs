use rrmimo_core::bases::{build_basis, leading};
use rrmimo_core::channel::{steering_vector, synthesize_rx_with};
use rrmimo_core::estimators::{
    estimate_correlation, estimate_mmse, estimate_rr_lpm, matched_filter, Alignment,
};
use rrmimo_core::search::angle_grid;
use rrmimo_core::spectrum::{bias_matrix, dominant_support, lpm};
use rrmimo_core::{CMatrix, CVector};

use super::{alignment_for, par_trials, ChannelModel, Context, Seeds};
use crate::config::ExperimentConfig;
use crate::stats::median;
use crate::table::{Cell, ResultTable};
use crate::Result;

/// Estimators whose beam patterns are compared, in output order.
pub const ESTIMATORS: [&str; 5] = ["true", "mmse_exact", "mmse_est", "rr_exact", "rr_est"];

/// Stream offset keeping the correlation-estimation draws apart from the main trial draws.
const BLOCK_DRAW_OFFSET: u64 = 1 << 32;

/// Beam patterns `|a(θ)^H ĥ|²` of the true channel and of MMSE and RR estimates.
///
/// Uses the first basis and first `η` of the config, the first SNR point, and the
/// known mean AoA. The `_exact` estimators see the exact correlation; the `_est` ones
/// see `Φ̂` from `J = corr_blocks` independent pilot blocks per trial. RR keeps the
/// leading `m_η` columns of the aligned spectrum computed from whichever correlation
/// it sees. Per estimator the table has the trial-averaged pattern normalized to its
/// peak (`power_db`, `x` = θ in degrees), the median over trials of the peak angle and
/// of its distance to `φ`, and the -3 dB main-lobe width of the averaged pattern.
/// The MMSE estimator with `Φ̂` uses its PSD projection.
pub fn run_beam_patterns(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let ctx = Context::new(cfg)?;
    let mut table = ctx.table();
    let grid = angle_grid(cfg.grid_deg);
    let steer = CMatrix::from_columns(
        &grid
            .iter()
            .map(|&th| steering_vector(&ctx.geom, th))
            .collect::<rrmimo_core::Result<Vec<_>>>()?,
    );
    let alpha = cfg.alphas()[0];
    let eta = cfg.etas[0];
    for (s_idx, scenario) in cfg.scenarios.iter().enumerate() {
        let model = ChannelModel::new(scenario, &ctx.geom)?;
        let phi = scenario.mean_aoa_rad().expect("validated: single cluster");
        let w = lpm(&ctx.geom, phi)?;
        let basis = build_basis(cfg.bases[0].kind(), ctx.m(), Some(model.corr.matrix()))?;
        let align = alignment_for(&basis, Some(&w));
        let m_exact =
            dominant_support(&bias_matrix(&basis, &model.corr, align)?.spectrum, eta, 1)?.m;
        let seeds = Seeds::new(cfg.seed, s_idx);

        let patterns = par_trials(cfg.trials, |t| {
            let h = model.draw(&ctx.geom, &mut seeds.channel(t as u64))?;
            let y = synthesize_rx_with(&h, alpha, &ctx.pilot, 1.0, &mut seeds.noise(0, t as u64));
            let mf = matched_filter(&y, &ctx.pilot, alpha)?;
            let j = cfg.corr_blocks;
            let blocks = (0..j)
                .map(|b| {
                    let draw = BLOCK_DRAW_OFFSET + (t * j + b) as u64;
                    let hb = model.draw(&ctx.geom, &mut seeds.channel(draw))?;
                    Ok((
                        synthesize_rx_with(&hb, alpha, &ctx.pilot, 1.0, &mut seeds.noise(0, draw)),
                        ctx.pilot.clone(),
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            let est = estimate_correlation(&blocks, alpha.sqrt() * ctx.energy())?;
            let basis_est = build_basis(cfg.bases[0].kind(), ctx.m(), Some(est.corr.matrix()))?;
            let m_est =
                dominant_support(&bias_matrix(&basis_est, &est.corr, align)?.spectrum, eta, 1)?.m;
            let known = Alignment::Known(if align.is_some() { phi } else { 0.0 });
            let estimates: [CVector; 5] = [
                h,
                estimate_mmse(&y, &ctx.pilot, alpha, &model.corr)?.h_hat,
                estimate_mmse(&y, &ctx.pilot, alpha, &est.corr.psd_projection())?.h_hat,
                estimate_rr_lpm(&mf, &leading(&basis, m_exact)?, &ctx.geom, known)?.h_hat,
                estimate_rr_lpm(&mf, &leading(&basis_est, m_est)?, &ctx.geom, known)?.h_hat,
            ];
            Ok(estimates.map(|v| {
                steer
                    .ad_mul(&v)
                    .iter()
                    .map(|z| z.norm_sqr())
                    .collect::<Vec<f64>>()
            }))
        })?;

        let at = Cell::scenario(&scenario.label)
            .basis(basis.kind().name())
            .alpha_db(cfg.alpha_db[0]);
        for (e_idx, name) in ESTIMATORS.iter().enumerate() {
            let cell = at.clone().estimator(name);
            let mut mean = vec![0.0; grid.len()];
            let mut peaks = Vec::with_capacity(patterns.len());
            let mut peak_errors = Vec::with_capacity(patterns.len());
            for trial in &patterns {
                let p = &trial[e_idx];
                mean.iter_mut().zip(p).for_each(|(acc, v)| *acc += v);
                peaks.push(grid[argmax(p)].to_degrees());
                peak_errors.push((grid[argmax(p)] - phi).abs().to_degrees());
            }
            let top = mean[argmax(&mean)];
            for (th, v) in grid.iter().zip(&mean) {
                table.push(
                    &cell.clone().x(th.to_degrees()),
                    "power_db",
                    10.0 * (v / top).log10(),
                    None,
                );
            }
            table.push(
                &cell,
                "mean_peak_deg",
                grid[argmax(&mean)].to_degrees(),
                None,
            );
            table.push(&cell, "peak_median_deg", median(&mut peaks), None);
            table.push(
                &cell,
                "peak_error_median_deg",
                median(&mut peak_errors),
                None,
            );
            table.push(
                &cell,
                "mainlobe_width_deg",
                mainlobe_width(&mean, cfg.grid_deg),
                None,
            );
        }
    }
    Ok(table)
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &x)| {
            if x > best.1 {
                (i, x)
            } else {
                best
            }
        })
        .0
}

/// Width in degrees of the contiguous run around the peak staying within 3 dB of it.
fn mainlobe_width(power: &[f64], grid_deg: f64) -> f64 {
    let k = argmax(power);
    let floor = power[k] / 10f64.powf(0.3);
    let lo = (0..=k)
        .rev()
        .take_while(|&i| power[i] >= floor)
        .last()
        .unwrap_or(k);
    let hi = (k..power.len())
        .take_while(|&i| power[i] >= floor)
        .last()
        .unwrap_or(k);
    (hi - lo) as f64 * grid_deg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mainlobe_of_a_plateau() {
        let p = [0.1, 0.2, 0.9, 1.0, 0.8, 0.3, 0.1];
        // 0.501 is the -3 dB floor: indices 2..=4 qualify
        assert!((mainlobe_width(&p, 0.5) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn argmax_takes_the_first_maximum() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0]), 1);
    }
}
