use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Column order of [`AnalysisReport::write_csv_row`].
pub const REPORT_CSV_HEADER: &str = "fixture,seed,method,nu,n,n_c,coarsening_ratio,nnz_percent,operator_complexity,\
eta_w_local,eta_w_global,kappa_af,eta_s,rho_tg,k_tg,iters,energy_error,d_error,perturbation_norm,bounds_ok";

/// Measurements for one (fixture, coarse space, modification) triple.
/// Quantities that were not requested stay `None` and print as empty cells.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub fixture: String,
    pub seed: u64,
    pub method: String,
    pub nu: usize,
    pub n: usize,
    pub n_c: usize,
    pub coarsening_ratio: f64,
    pub nnz_percent: f64,
    pub operator_complexity: f64,
    pub eta_w_local: f64,
    pub eta_w_global: Option<f64>,
    pub kappa_af: Option<f64>,
    pub eta_s: Option<f64>,
    pub rho_tg: Option<f64>,
    /// `1 / (1 - rho_tg)`.
    pub k_tg: Option<f64>,
    pub iters: Option<usize>,
    /// `|u - P~ u_c|_A / |u|_A` for the configured right-hand side.
    pub energy_error: Option<f64>,
    /// `|u - P~ u_c|_D / |u|_D`.
    pub d_error: Option<f64>,
    pub perturbation_norm: Option<f64>,
    pub bounds_ok: Option<bool>,
}

/// Fixed-width scientific notation keeps reruns byte-identical.
pub(crate) fn num(v: f64) -> String {
    format!("{v:.6e}")
}

impl AnalysisReport {
    /// Checks the relations every report must satisfy. Returns the name of
    /// the first violated one.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        const SLACK: f64 = 1e-3;
        if let Some(g) = self.eta_w_global {
            if g > self.eta_w_local + 1e-6 {
                return Err(format!("eta_w_global {g} exceeds eta_w_local {}", self.eta_w_local));
            }
            if let Some(k) = self.kappa_af {
                if k > g * g * (1.0 + SLACK) {
                    return Err(format!("kappa(A_f) {k} exceeds eta_w_global^2 {}", g * g));
                }
            }
        }
        if let Some(r) = self.rho_tg {
            if !(r < 1.0) {
                return Err(format!("two-grid rate {r} is not below 1"));
            }
        }
        if self.bounds_ok == Some(false) {
            return Err("error bound violated".into());
        }
        Ok(())
    }

    pub fn write_csv_row<W: Write>(&self, mut w: W) -> Result<()> {
        let f = |v: &Option<f64>| v.map(num).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.fixture,
            self.seed,
            self.method,
            self.nu,
            self.n,
            self.n_c,
            num(self.coarsening_ratio),
            num(self.nnz_percent),
            num(self.operator_complexity),
            num(self.eta_w_local),
            f(&self.eta_w_global),
            f(&self.kappa_af),
            f(&self.eta_s),
            f(&self.rho_tg),
            f(&self.k_tg),
            self.iters.map(|i| i.to_string()).unwrap_or_default(),
            f(&self.energy_error),
            f(&self.d_error),
            f(&self.perturbation_norm),
            self.bounds_ok.map(|b| b.to_string()).unwrap_or_default(),
        )?;
        Ok(())
    }
}
