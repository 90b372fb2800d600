use nordstrom_core::blowup::{certificate, HypothesisFlags};
use nordstrom_core::Error;
use serde::Serialize;

use crate::error::{CliError, Result};

/// Printable certificate; the derived quantities are absent when the bound is undefined.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateView {
    pub a0: f64,
    pub f0_hat: f64,
    pub g0_hat: f64,
    pub kappa: f64,
    pub lambda: Option<f64>,
    pub beta: Option<f64>,
    pub tau0: Option<f64>,
    pub t0: Option<f64>,
    pub hypotheses: HypothesisFlags,
    pub certifies_blowup: bool,
    pub inconclusive: bool,
    pub reason: Option<String>,
}

pub fn certify(a0: f64, f0: f64, g0: f64, kappa: f64) -> Result<CertificateView> {
    for (name, v) in [("a0", a0), ("f0", f0), ("g0", g0), ("kappa", kappa)] {
        if !v.is_finite() {
            return Err(CliError::config(name, "must be finite"));
        }
    }
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(CliError::config("kappa", format!("must lie in (0, 1), got {kappa}")));
    }
    let hypotheses = HypothesisFlags::for_constants(a0, f0, g0, kappa);
    match certificate(a0, f0, g0, kappa) {
        Ok(c) => Ok(CertificateView {
            a0,
            f0_hat: f0,
            g0_hat: g0,
            kappa,
            lambda: Some(c.lambda),
            beta: Some(c.beta),
            tau0: Some(c.tau0),
            t0: c.t0,
            hypotheses: c.hypotheses,
            certifies_blowup: c.certifies_blowup,
            inconclusive: c.inconclusive,
            reason: c.reason,
        }),
        Err(Error::Domain(reason)) => Ok(CertificateView {
            a0,
            f0_hat: f0,
            g0_hat: g0,
            kappa,
            lambda: None,
            beta: None,
            tau0: None,
            t0: None,
            hypotheses,
            certifies_blowup: false,
            inconclusive: false,
            reason: Some(reason),
        }),
        Err(e) => Err(e.into()),
    }
}

impl CertificateView {
    /// Replaces the constant-data hypotheses by those checked on the grid.
    pub fn with_grid_hypotheses(mut self, flags: HypothesisFlags) -> Self {
        self.hypotheses = flags;
        if !flags.all() {
            self.certifies_blowup = false;
            self.reason = flags.failures().first().map(|r| r.to_string());
        }
        self
    }
}
