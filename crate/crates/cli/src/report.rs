//! One computed point and its CSV / JSON renderings.

use std::sync::Arc;

use adia_core::{
    amplitudes_from_transfer, transfer_matrix_exact_detailed, transfer_matrix_order_n, transfer_matrix_semiclassical,
    Amplitudes, Mat2, PotentialSpec, ScatteringContext, SeriesResult, C64,
};
use serde_json::{json, Value};

use crate::config::{Method, RunConfig};
use crate::error::CliResult;

pub const CSV_HEADER: &str =
    "k,ReT,ImT,ReRl,ImRl,ReRr,ImRr,absT2,absRl2,absRr2,detM_residual,method,order,error_estimate";

#[derive(Debug, Clone)]
pub struct Row {
    pub k: f64,
    pub m: Mat2,
    pub amplitudes: Amplitudes,
    pub det_residual: f64,
    pub method: String,
    pub order: usize,
    pub error_estimate: f64,
    /// `‖A^(ℓ)‖` for `ℓ = 1..=order`; empty unless the method is order-n.
    pub term_norms: Vec<f64>,
}

fn series(cfg: &RunConfig, ctx: &ScatteringContext, n: usize) -> CliResult<SeriesResult> {
    Ok(transfer_matrix_order_n(ctx, n, &cfg.correction_controls())?)
}

pub fn compute_row(cfg: &RunConfig, potential: Arc<PotentialSpec>, k: f64) -> CliResult<Row> {
    let ctx = ScatteringContext::new(potential, k)?;
    let (m, error_estimate, term_norms) = match cfg.method {
        Method::Exact => {
            let r = transfer_matrix_exact_detailed(&ctx, &cfg.evolve_controls())?;
            (r.m, r.error_estimate, vec![])
        }
        Method::Semiclassical => (transfer_matrix_semiclassical(&ctx)?, 0.0, vec![]),
        Method::OrderN(n) => {
            let s = series(cfg, &ctx, n)?;
            let err = s.terms.iter().map(|t| t.error_estimate).fold(0.0, f64::max);
            (s.m(), err, s.terms.iter().map(|t| t.norm()).collect())
        }
    };
    let amplitudes = amplitudes_from_transfer(&m)?;
    Ok(Row {
        k,
        m,
        amplitudes,
        det_residual: (m.det() - C64::new(1.0, 0.0)).norm(),
        method: cfg.method_label(),
        order: cfg.method.order(),
        error_estimate,
        term_norms,
    })
}

fn e(x: f64) -> String {
    format!("{x:.16e}")
}

impl Row {
    pub fn csv(&self) -> String {
        let a = &self.amplitudes;
        [
            e(self.k),
            e(a.t.re),
            e(a.t.im),
            e(a.r_left.re),
            e(a.r_left.im),
            e(a.r_right.re),
            e(a.r_right.im),
            e(a.t.norm_sqr()),
            e(a.r_left.norm_sqr()),
            e(a.r_right.norm_sqr()),
            e(self.det_residual),
            self.method.clone(),
            self.order.to_string(),
            e(self.error_estimate),
        ]
        .join(",")
    }

    /// Comment line emitted ahead of a row whose determinant is off.
    pub fn det_flag(&self, tol: f64) -> Option<String> {
        (!(self.det_residual <= tol))
            .then(|| format!("# det-flag k={} detM_residual={} tolerance={}", e(self.k), e(self.det_residual), e(tol)))
    }

    pub fn json(&self, tol_det: f64) -> Value {
        let a = &self.amplitudes;
        json!({
            "k": self.k,
            "ReT": a.t.re, "ImT": a.t.im,
            "ReRl": a.r_left.re, "ImRl": a.r_left.im,
            "ReRr": a.r_right.re, "ImRr": a.r_right.im,
            "absT2": a.t.norm_sqr(), "absRl2": a.r_left.norm_sqr(), "absRr2": a.r_right.norm_sqr(),
            "detM_residual": self.det_residual,
            "det_flag": !(self.det_residual <= tol_det),
            "method": self.method,
            "order": self.order,
            "error_estimate": self.error_estimate,
            "M": mat_json(&self.m),
            "term_norms": self.term_norms,
        })
    }
}

pub fn c_json(z: C64) -> Value {
    json!([z.re, z.im])
}

pub fn mat_json(m: &Mat2) -> Value {
    json!([[c_json(m.m11), c_json(m.m12)], [c_json(m.m21), c_json(m.m22)]])
}

/// Residual table of `M^(≤j)` against the exact matrix.
#[derive(Debug, Clone)]
pub struct ConvergenceTable {
    pub k: f64,
    pub method: String,
    pub residuals: Vec<f64>,
    pub term_norms: Vec<f64>,
    pub error_estimates: Vec<f64>,
}

pub fn convergence_table(
    cfg: &RunConfig,
    potential: Arc<PotentialSpec>,
    k: f64,
    max_order: usize,
) -> CliResult<ConvergenceTable> {
    let ctx = ScatteringContext::new(potential, k)?;
    let exact = transfer_matrix_exact_detailed(&ctx, &cfg.evolve_controls())?.m;
    let s = series(cfg, &ctx, max_order)?.with_exact(exact);
    Ok(ConvergenceTable {
        k,
        method: format!("order-n/{}", cfg.series.name()),
        residuals: s.residuals.clone(),
        term_norms: s.terms.iter().map(|t| t.norm()).collect(),
        error_estimates: s.terms.iter().map(|t| t.error_estimate).collect(),
    })
}

impl ConvergenceTable {
    pub fn csv(&self) -> String {
        let mut out = String::from("order,residual,term_norm,error_estimate,method\n");
        for (j, r) in self.residuals.iter().enumerate() {
            let (norm, err) = if j == 0 { (0.0, 0.0) } else { (self.term_norms[j - 1], self.error_estimates[j - 1]) };
            out.push_str(&format!("{j},{},{},{},{}\n", e(*r), e(norm), e(err), self.method));
        }
        out
    }

    pub fn json(&self) -> Value {
        json!({
            "k": self.k,
            "method": self.method,
            "residuals": self.residuals,
            "term_norms": self.term_norms,
            "error_estimates": self.error_estimates,
        })
    }
}
