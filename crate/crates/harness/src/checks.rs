//! Assertion suites evaluated against a finished result table.
//!
//! A config names at most one suite in its `check` field. Suites read rows by
//! metric and cell coordinates and compare them with expected orders, orderings or
//! closed-form values. Scenario roles follow the config's scenario order.

use crate::config::ExperimentConfig;
use crate::table::{ResultTable, Row};

pub const SUITES: [&str; 10] = [
    "closed_form",
    "fig2",
    "fig3",
    "fig4",
    "fig5",
    "fig6",
    "fig7",
    "fig8",
    "table1",
    "table2",
];

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }

    fn missing(name: impl Into<String>, what: &str) -> Self {
        Self::new(name, false, format!("no row for {what}"))
    }
}

impl std::fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}: {}", self.name, self.detail)
    }
}

/// Evaluates the config's suite; no suite means no checks.
pub fn evaluate_checks(cfg: &ExperimentConfig, table: &ResultTable) -> Vec<CheckOutcome> {
    let Some(suite) = cfg.check.as_deref() else {
        return Vec::new();
    };
    let q = Query { cfg, table };
    match suite {
        "closed_form" => q.sim_matches_theory(3.0),
        "fig2" => q.fig2(),
        "fig3" => q.fig3(),
        "fig4" => [q.sim_matches_theory(5.0), q.overmodeling_hurts_at_low_snr()].concat(),
        "fig5" => [q.sim_matches_theory(5.0), q.order_grows_with_snr()].concat(),
        "fig6" => [q.sim_matches_theory(5.0), q.decomposition_adds_up()].concat(),
        "fig7" => q.fig7(),
        "fig8" => q.fig8(),
        "table1" => q.rank_table(&TABLE1),
        "table2" => q.rank_table(&TABLE2),
        other => vec![CheckOutcome::new(
            "suite",
            false,
            format!("unknown suite {other:?}"),
        )],
    }
}

/// Expected modeling orders for one rank table: `(basis, metric, per-level values, per-level tolerance)`.
type Expectation = (&'static str, &'static str, [f64; 3], [f64; 3]);

const TABLE1: [Expectation; 3] = [
    ("klt", "m_star", [9.0, 10.0, 10.0], [2.0, 2.0, 2.0]),
    ("klt", "m_eta", [8.0, 9.0, 10.0], [2.0, 2.0, 2.0]),
    ("poly", "m_star", [12.0, 14.0, 15.0], [2.0, 2.0, 2.0]),
];

const TABLE2: [Expectation; 2] = [
    ("klt", "m_star", [28.0, 29.0, 31.0], [2.0, 2.0, 3.0]),
    ("dct2", "m_star", [29.0, 37.0, 53.0], [2.0, 2.0, 3.0]),
];

struct Query<'a> {
    cfg: &'a ExperimentConfig,
    table: &'a ResultTable,
}

fn same_cell(a: &Row, b: &Row) -> bool {
    a.scenario == b.scenario
        && a.basis == b.basis
        && a.estimator == b.estimator
        && a.m == b.m
        && a.alpha_db == b.alpha_db
        && a.eta == b.eta
        && a.x == b.x
}

impl Query<'_> {
    fn scenario(&self, i: usize) -> &str {
        self.cfg.scenarios.get(i).map_or("", |s| s.label.as_str())
    }

    fn get(
        &self,
        scenario: &str,
        basis: Option<&str>,
        metric: &str,
        pick: impl Fn(&Row) -> bool,
    ) -> Option<f64> {
        self.table
            .find(|r| {
                r.scenario == scenario
                    && r.basis.as_deref() == basis
                    && r.metric == metric
                    && pick(r)
            })
            .map(|r| r.value)
    }

    /// Every simulated NMSE within `k` standard errors of its closed form.
    fn sim_matches_theory(&self, k: f64) -> Vec<CheckOutcome> {
        if !(self.cfg.known_beta && self.cfg.known_phi) {
            return Vec::new();
        }
        let mut worst: Option<(f64, &Row)> = None;
        let mut count = 0;
        for sim in self.table.rows_where(|r| r.metric == "nmse_sim") {
            let Some(theory) = self
                .table
                .find(|r| r.metric == "nmse_theory" && same_cell(r, sim))
            else {
                return vec![CheckOutcome::missing("sim vs theory", "a theory partner")];
            };
            let se = sim.std_err.unwrap_or(0.0);
            let z = (sim.value - theory.value).abs() / se.max(1e-300);
            count += 1;
            if worst.is_none_or(|(w, _)| z > w) {
                worst = Some((z, sim));
            }
        }
        let Some((z, row)) = worst else {
            return vec![CheckOutcome::missing("sim vs theory", "nmse_sim")];
        };
        let detail = format!(
            "{count} cells, worst |sim-theory| = {z:.2} SE at {} {} m={:?} alpha={:?} dB",
            row.scenario,
            row.estimator.as_deref().unwrap_or("-"),
            row.m,
            row.alpha_db
        );
        vec![CheckOutcome::new(
            format!("sim within {k} SE of theory"),
            z <= k,
            detail,
        )]
    }

    fn sim_at(&self, scenario: &str, basis: &str, m: usize, alpha_db: f64) -> Option<f64> {
        self.get(scenario, Some(basis), "nmse_sim", |r| {
            r.m == Some(m) && r.alpha_db == Some(alpha_db)
        })
    }

    fn alpha_extremes(&self) -> (f64, f64) {
        let lo = self
            .cfg
            .alpha_db
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        let hi = self
            .cfg
            .alpha_db
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    fn overmodeling_hurts_at_low_snr(&self) -> Vec<CheckOutcome> {
        let name = "m=20 beats m=100 at the lowest SNR";
        let (lo, _) = self.alpha_extremes();
        let s = self.scenario(0);
        match (
            self.sim_at(s, "poly", 20, lo),
            self.sim_at(s, "poly", 100, lo),
        ) {
            (Some(a), Some(b)) => vec![CheckOutcome::new(
                name,
                a < b,
                format!("{a:.4} vs {b:.4} at {lo} dB"),
            )],
            _ => vec![CheckOutcome::missing(name, "poly m=20/100")],
        }
    }

    /// Simulated-NMSE minimizing order at `alpha_db` for the first basis.
    fn best_order(&self, alpha_db: f64) -> Option<usize> {
        let basis = self.cfg.bases.first()?.kind().name();
        self.table
            .rows_where(|r| {
                r.metric == "nmse_sim"
                    && r.estimator.as_deref() == Some("rr")
                    && r.basis.as_deref() == Some(basis)
                    && r.alpha_db == Some(alpha_db)
                    && r.scenario == self.scenario(0)
            })
            .min_by(|a, b| a.value.total_cmp(&b.value))
            .and_then(|r| r.m)
    }

    fn order_grows_with_snr(&self) -> Vec<CheckOutcome> {
        let name = "larger m wins at high SNR";
        let (lo, hi) = self.alpha_extremes();
        match (self.best_order(lo), self.best_order(hi)) {
            (Some(a), Some(b)) => vec![CheckOutcome::new(
                name,
                b > a,
                format!("best m {a} at {lo} dB, {b} at {hi} dB"),
            )],
            _ => vec![CheckOutcome::missing(name, "rr nmse_sim")],
        }
    }

    fn decomposition_adds_up(&self) -> Vec<CheckOutcome> {
        let mut worst = 0.0f64;
        for t in self
            .table
            .rows_where(|r| r.metric == "nmse_theory" && r.estimator.as_deref() == Some("rr"))
        {
            let part = |metric: &str| {
                self.table
                    .find(|r| r.metric == metric && same_cell(r, t))
                    .map(|r| r.value)
            };
            match (part("variance_theory"), part("bias_theory")) {
                (Some(v), Some(b)) => worst = worst.max((v + b - t.value).abs()),
                _ => {
                    return vec![CheckOutcome::missing(
                        "mse = variance + bias",
                        "a decomposition row",
                    )]
                }
            }
        }
        vec![CheckOutcome::new(
            "mse = variance + bias",
            worst < 1e-12,
            format!("max residual {worst:.2e}"),
        )]
    }

    fn m_eta(&self, scenario: &str, basis: &str, eta: f64, tag: &str) -> Option<f64> {
        self.get(scenario, Some(basis), &format!("m_eta_{tag}"), |r| {
            r.eta == Some(eta)
        })
    }

    fn fig2(&self) -> Vec<CheckOutcome> {
        let s = self.scenario(0);
        let mut out = Vec::new();
        for &eta in &self.cfg.etas {
            let (al, un) = (
                self.m_eta(s, "dct2", eta, "aligned"),
                self.m_eta(s, "dct2", eta, "unaligned"),
            );
            let start = self.get(s, Some("dct2"), "support_start_aligned", |r| {
                r.eta == Some(eta)
            });
            match (al, un, start) {
                (Some(a), Some(u), Some(st)) => {
                    out.push(CheckOutcome::new(
                        format!("aligned support shorter (eta={eta})"),
                        a < u,
                        format!("aligned {a}, unaligned {u}"),
                    ));
                    out.push(CheckOutcome::new(
                        format!("aligned/unaligned <= 0.6 (eta={eta})"),
                        a / u <= 0.6,
                        format!("ratio {:.3}", a / u),
                    ));
                    out.push(CheckOutcome::new(
                        format!("aligned support is lowpass (eta={eta})"),
                        st == 1.0,
                        format!("starts at index {st}"),
                    ));
                }
                _ => out.push(CheckOutcome::missing("fig2", "dct2 supports")),
            }
        }
        out
    }

    fn fig3(&self) -> Vec<CheckOutcome> {
        let (narrow, wide) = (self.scenario(0), self.scenario(1));
        let mut out = Vec::new();
        for &eta in &self.cfg.etas {
            let get = |s: &str, b: &str| self.m_eta(s, b, eta, "aligned");
            let (Some(k), Some(d), Some(p)) =
                (get(narrow, "klt"), get(narrow, "dct2"), get(narrow, "poly"))
            else {
                out.push(CheckOutcome::missing("fig3", "narrow-cluster supports"));
                continue;
            };
            out.push(CheckOutcome::new(
                format!("KLT <= DCT <= poly at {narrow} (eta={eta})"),
                k <= d && d <= p,
                format!("{k} / {d} / {p}"),
            ));
            let (Some(dw), Some(pw)) = (get(wide, "dct2"), get(wide, "poly")) else {
                out.push(CheckOutcome::missing("fig3", "wide-cluster supports"));
                continue;
            };
            out.push(CheckOutcome::new(
                format!("poly >= DCT at {wide} (eta={eta})"),
                pw >= dw,
                format!("{pw} vs {dw}"),
            ));
            for b in ["klt", "dct2", "poly"] {
                if let (Some(n), Some(w)) = (get(narrow, b), get(wide, b)) {
                    out.push(CheckOutcome::new(
                        format!("{b} rank grows with spread (eta={eta})"),
                        n < w,
                        format!("{n} at {narrow}, {w} at {wide}"),
                    ));
                }
            }
        }
        out
    }

    fn beam(&self, scenario: &str, estimator: &str, metric: &str) -> Option<f64> {
        self.table
            .find(|r| {
                r.scenario == scenario
                    && r.estimator.as_deref() == Some(estimator)
                    && r.metric == metric
            })
            .map(|r| r.value)
    }

    fn fig7(&self) -> Vec<CheckOutcome> {
        let mut out = Vec::new();
        for (i, sc) in self.cfg.scenarios.iter().enumerate() {
            let c = &sc.clusters[0];
            match self.beam(self.scenario(i), "true", "mean_peak_deg") {
                Some(p) => out.push(CheckOutcome::new(
                    format!("true-channel peak within spread at {}", sc.label),
                    (p - c.mean_deg).abs() <= c.spread_deg,
                    format!("peak {p:.2} deg, mean {} deg", c.mean_deg),
                )),
                None => out.push(CheckOutcome::missing("fig7", "true-channel peak")),
            }
        }
        let s0 = self.scenario(0);
        let phi0 = self
            .cfg
            .scenarios
            .first()
            .map_or(0.0, |sc| sc.clusters[0].mean_deg);
        for est in ["rr_exact", "rr_est"] {
            match (
                self.beam(s0, est, "peak_median_deg"),
                self.beam(s0, est, "peak_error_median_deg"),
                self.beam(s0, "true", "peak_error_median_deg"),
            ) {
                (Some(p), Some(e), Some(e_true)) => out.push(CheckOutcome::new(
                    format!("{est} peak within 3 deg at {s0}"),
                    (p - phi0).abs() < 3.0,
                    format!("median peak {p:.2} deg; median |error| {e:.2} deg (true channel {e_true:.2})"),
                )),
                _ => out.push(CheckOutcome::missing("fig7", "rr peak statistics")),
            }
        }
        let s1 = self.scenario(1);
        match (
            self.beam(s0, "true", "mainlobe_width_deg"),
            self.beam(s1, "true", "mainlobe_width_deg"),
        ) {
            (Some(a), Some(b)) => out.push(CheckOutcome::new(
                "main lobe widens with spread",
                b > a,
                format!("{a} deg at {s0}, {b} deg at {s1}"),
            )),
            _ => out.push(CheckOutcome::missing("fig7", "main-lobe widths")),
        }
        out
    }

    fn fig8(&self) -> Vec<CheckOutcome> {
        let mut out = Vec::new();
        let (sep, ovl) = (self.scenario(0), self.scenario(1));
        for &eta in &self.cfg.etas {
            let at = |s: &str, metric: &str| {
                self.table
                    .find(|r| {
                        r.scenario == s
                            && r.metric == metric
                            && r.eta == Some(eta)
                            && r.estimator.is_none()
                    })
                    .map(|r| r.value)
            };
            match (
                at(sep, "windows_2w"),
                at(sep, "captured_at_m2w_1w"),
                at(sep, "captured_at_m2w_2w"),
            ) {
                (Some(w), Some(c1), Some(c2)) => out.push(CheckOutcome::new(
                    format!("separable clusters need two windows (eta={eta})"),
                    w == 2.0 && c2 > c1,
                    format!("{w} windows, captured {c2:.4} vs {c1:.4} with one"),
                )),
                _ => out.push(CheckOutcome::missing("fig8", "separable supports")),
            }
            match (at(ovl, "windows_2w"), at(ovl, "gap_2w")) {
                (Some(w), Some(g)) => out.push(CheckOutcome::new(
                    format!("overlapped clusters merge (eta={eta})"),
                    w == 1.0 || g <= 2.0,
                    format!("{w} windows, gap {g}"),
                )),
                _ => out.push(CheckOutcome::missing("fig8", "overlapped supports")),
            }
            for s in [sep, ovl] {
                for &db in self.cfg.alpha_db.iter().filter(|&&db| db == 0.0) {
                    let nmse = |e: &str| {
                        self.table
                            .find(|r| {
                                r.scenario == s
                                    && r.estimator.as_deref() == Some(e)
                                    && r.metric == "nmse_sim"
                                    && r.eta == Some(eta)
                                    && r.alpha_db == Some(db)
                            })
                            .map(|r| r.value)
                    };
                    match (nmse("rr_union"), nmse("ls")) {
                        (Some(rr), Some(ls)) => out.push(CheckOutcome::new(
                            format!("union-support RR beats LS at {s}, {db} dB (eta={eta})"),
                            rr < ls,
                            format!("{rr:.4} vs {ls:.4}"),
                        )),
                        _ => out.push(CheckOutcome::missing("fig8", "rr/ls nmse")),
                    }
                }
            }
        }
        out
    }

    fn rank_table(&self, expected: &[Expectation]) -> Vec<CheckOutcome> {
        let s = self.scenario(0);
        let mut out = Vec::new();
        for &(basis, metric, values, tols) in expected {
            for (level, (&want, &tol)) in values.iter().zip(&tols).enumerate() {
                let (Some(&db), Some(&eta)) =
                    (self.cfg.alpha_db.get(level), self.cfg.etas.get(level))
                else {
                    continue;
                };
                let eta_match = metric != "m_star";
                let got = self.get(s, Some(basis), metric, |r| {
                    r.alpha_db == Some(db) && (!eta_match || r.eta == Some(eta))
                });
                let name = format!("{basis} {metric} at {db} dB");
                out.push(match got {
                    Some(g) => CheckOutcome::new(
                        name,
                        (g - want).abs() <= tol,
                        format!("{g} (expected {want} ± {tol})"),
                    ),
                    None => CheckOutcome::missing(name, metric),
                });
            }
        }
        for basis in &self.cfg.bases {
            let b = basis.kind().name();
            for (&db, &eta) in self.cfg.alpha_db.iter().zip(&self.cfg.etas) {
                let pick = |r: &Row| r.alpha_db == Some(db) && r.eta == Some(eta);
                let (Some(it), Some(conv), Some(hat), Some(m)) = (
                    self.get(s, Some(b), "imod_iterations", pick),
                    self.get(s, Some(b), "imod_converged", pick),
                    self.get(s, Some(b), "m_eta_hat_exact", pick),
                    self.get(s, Some(b), "m_eta", pick),
                ) else {
                    out.push(CheckOutcome::missing(format!("IMOD {b}"), "imod rows"));
                    continue;
                };
                out.push(CheckOutcome::new(
                    format!("IMOD {b} eta={eta} converges in <= 5"),
                    conv == 1.0 && it <= 5.0,
                    format!("{it} iterations, converged={}", conv == 1.0),
                ));
                out.push(CheckOutcome::new(
                    format!("IMOD {b} eta={eta} order within 1"),
                    (hat - m).abs() <= 1.0,
                    format!("m_hat {hat} vs m_eta {m}"),
                ));
            }
        }
        out
    }
}
