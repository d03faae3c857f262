use rrmimo_core::spectrum::{bias_matrix, dominant_support, imag_leakage, lpm};

use super::{alignment_for, bases_for, ChannelModel, Context};
use crate::config::ExperimentConfig;
use crate::table::{Cell, ResultTable};
use crate::Result;

/// Aligned and unaligned channel spectra per basis, with their dominant supports.
pub fn run_spectrum_report(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let ctx = Context::new(cfg)?;
    let mut table = ctx.table();
    for scenario in &cfg.scenarios {
        let model = ChannelModel::new(scenario, &ctx.geom)?;
        let phi = scenario.mean_aoa_rad().expect("validated: single cluster");
        let w = lpm(&ctx.geom, phi)?;
        let at = Cell::scenario(&scenario.label);
        table.push(
            &at,
            "imag_leakage",
            imag_leakage(&ctx.geom, &model.corr, phi)?,
            None,
        );
        for basis in bases_for(cfg, &model.corr)? {
            let cell = at.clone().basis(basis.kind().name());
            let aligned =
                bias_matrix(&basis, &model.corr, alignment_for(&basis, Some(&w)))?.spectrum;
            let unaligned = bias_matrix(&basis, &model.corr, None)?.spectrum;
            for (i, (a, u)) in aligned.diag().iter().zip(unaligned.diag()).enumerate() {
                let point = cell.clone().x((i + 1) as f64);
                table.push(&point, "spectrum_aligned", *a, None);
                table.push(&point, "spectrum_unaligned", *u, None);
            }
            for &eta in &cfg.etas {
                let cell = cell.clone().eta(eta);
                for (tag, spec) in [("aligned", &aligned), ("unaligned", &unaligned)] {
                    let s = dominant_support(spec, eta, 1)?;
                    table.push(&cell, &format!("m_eta_{tag}"), s.m as f64, None);
                    table.push(
                        &cell,
                        &format!("support_start_{tag}"),
                        (s.windows[0].start + 1) as f64,
                        None,
                    );
                    table.push(&cell, &format!("captured_{tag}"), s.captured_fraction, None);
                }
            }
        }
    }
    Ok(table)
}
