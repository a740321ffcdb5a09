//! Tables of results with a provenance header, rendered as CSV or as
//! aligned text.
//!
//! Numbers carry 17 significant digits so that every `f64` round-trips, and
//! rendering is a pure function of the results, which makes outputs of
//! seeded runs byte-identical.

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::genfunc;
use crate::geometry::{a_hat, boundary_atlas, gamma_q, quasi_potential_i, quasi_potential_iplus, theta_interval};
use crate::green::{AsymptoticsTable, GreenEstimate, RenewalAudit};
use crate::harmonic::{harmonicity_residual, symmetric_window, HarmonicFunction};
use crate::martin::{KernelTrace, RatioLimitReport};
use crate::model::WalkModel;
use crate::tol::{self, Tolerances};

/// 17 significant digits in scientific notation.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// Hex SHA-256 of the canonical JSON form of the model.
pub fn model_hash(model: &WalkModel) -> String {
    let digest = Sha256::digest(model.to_document().to_json().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub model_hash: String,
    pub version: String,
    pub seed: u64,
}

impl Provenance {
    pub fn new(model: &WalkModel, seed: u64) -> Self {
        Self { model_hash: model_hash(model), version: env!("CARGO_PKG_VERSION").to_string(), seed }
    }

    pub fn line(&self) -> String {
        format!(
            "# model_sha256={} version={} seed={} tolerances={}",
            self.model_hash,
            self.version,
            self.seed,
            Tolerances::default().summary()
        )
    }
}

/// One row under construction; a vector becomes one column per coordinate.
#[derive(Debug, Default)]
pub struct Row {
    names: Vec<String>,
    cells: Vec<String>,
}

impl Row {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn text(mut self, name: &str, v: impl ToString) -> Self {
        self.names.push(name.to_string());
        self.cells.push(v.to_string());
        self
    }

    pub fn float(self, name: &str, v: f64) -> Self {
        self.text(name, num(v))
    }

    pub fn floats(mut self, name: &str, v: &[f64]) -> Self {
        for (i, x) in v.iter().enumerate() {
            self = self.float(&format!("{name}_{i}"), *x);
        }
        self
    }

    pub fn ints(mut self, name: &str, v: &[i64]) -> Self {
        for (i, x) in v.iter().enumerate() {
            self = self.text(&format!("{name}_{i}"), x);
        }
        self
    }
}

#[derive(Debug, Default, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a row; every row must have the columns of the first.
    pub fn push(&mut self, row: Row) {
        if self.rows.is_empty() {
            self.header = row.names;
        } else {
            assert_eq!(self.header, row.names, "rows of one table share their columns");
        }
        self.rows.push(row.cells);
    }

    pub fn to_csv(&self, provenance: &Provenance) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let to_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
        if !self.header.is_empty() {
            w.write_record(&self.header).map_err(to_err)?;
        }
        for r in &self.rows {
            w.write_record(r).map_err(to_err)?;
        }
        let body = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        let body = String::from_utf8(body).expect("CSV of UTF-8 cells");
        Ok(format!("{}\n{body}", provenance.line()))
    }

    pub fn to_text(&self, provenance: &Provenance) -> String {
        let width = self.header.iter().map(|h| h.len()).max().unwrap_or(0);
        let mut out = provenance.line();
        out.push('\n');
        for (k, r) in self.rows.iter().enumerate() {
            if k > 0 {
                out.push('\n');
            }
            for (h, c) in self.header.iter().zip(r) {
                out.push_str(&format!("{h:>width$}  {c}\n"));
            }
        }
        out
    }
}

fn lower<T: std::fmt::Debug>(v: T) -> String {
    format!("{v:?}").to_lowercase()
}

/// Hypotheses (H0)-(H4) and whether all pass.
pub fn hypothesis_table(model: &WalkModel) -> (Table, bool) {
    let mut t = Table::new();
    let report = model.report();
    for (name, check) in report.checks() {
        t.push(Row::new().text("hypothesis", name).text("status", check.status).text("detail", &check.detail));
    }
    (t, report.all_pass())
}

/// `Theta` and the fibers of `phi = 1` at `samples` equally spaced points of it.
pub fn theta_sweep_table(model: &WalkModel, samples: usize) -> Result<Table> {
    if model.dim() != 2 {
        return Err(Error::Dimension("the Theta sweep is implemented for d = 2".into()));
    }
    let th = theta_interval(model)?;
    let mut t = Table::new();
    let n = samples.max(2);
    for k in 0..n {
        let alpha = th.lo + (th.hi - th.lo) * k as f64 / (n - 1) as f64;
        let r = genfunc::fiber_roots_tol(model.mu(), &[alpha], tol::STRAT)?;
        let phi0 = genfunc::mgf(model.mu0(), &[alpha, r.beta_bar])?;
        t.push(
            Row::new()
                .float("theta_lo", th.lo)
                .float("theta_hi", th.hi)
                .text("lo_saturated", th.lo_saturated)
                .text("hi_saturated", th.hi_saturated)
                .float("alpha", alpha)
                .float("beta_bar", r.beta_bar)
                .float("beta_plus", r.beta_plus)
                .float("phi0_at_bar", phi0),
        );
    }
    Ok(t)
}

pub fn a_hat_table(model: &WalkModel, q: &[f64]) -> Result<Table> {
    let ah = a_hat(model, q)?;
    let dec = gamma_q(model, q)?;
    let qp = quasi_potential_i(model, q)?;
    let mut t = Table::new();
    t.push(
        Row::new()
            .floats("q", &ah.q)
            .floats("a_hat", ah.point.a.coords())
            .text("stratum", lower(ah.point.stratum))
            .text("saturated", ah.point.saturated())
            .float("cone_residual", ah.residual)
            .float("i", qp.value)
            .floats("gamma_q", &dec.gamma_q),
    );
    Ok(t)
}

pub fn gamma_table(model: &WalkModel, q: &[f64]) -> Result<Table> {
    let dec = gamma_q(model, q)?;
    let mut t = Table::new();
    t.push(
        Row::new()
            .floats("q", &dec.q)
            .floats("gamma_q", &dec.gamma_q)
            .float("c1", dec.c1)
            .float("c2", dec.c2)
            .text("phi0_active", dec.active_phi0),
    );
    Ok(t)
}

pub fn quasi_potential_table(model: &WalkModel, q: &[f64]) -> Result<Table> {
    let i = quasi_potential_i(model, q)?;
    let ip = quasi_potential_iplus(model, &vec![0.0; q.len()], q)?;
    let (to_gamma, from_gamma) = i.decomposition.unwrap_or((f64::NAN, f64::NAN));
    let mut t = Table::new();
    t.push(
        Row::new()
            .floats("q", q)
            .float("i", i.value)
            .float("i_plus", ip.value)
            .float("i_to_gamma", to_gamma)
            .float("i_plus_from_gamma", from_gamma)
            .text("fallback", i.fallback),
    );
    Ok(t)
}

pub fn atlas_table(model: &WalkModel, samples: usize) -> Result<Table> {
    let atlas = boundary_atlas(model, samples)?;
    let mut fan_of = vec![None; atlas.rows.len()];
    for (k, f) in atlas.fans.iter().enumerate() {
        for &i in &f.rows {
            fan_of[i] = Some((k, f.width));
        }
    }
    let mut t = Table::new();
    for (row, fan) in atlas.rows.iter().zip(fan_of) {
        t.push(
            Row::new()
                .floats("q", &row.q)
                .floats("a_hat", row.a_hat.coords())
                .text("stratum", lower(row.stratum))
                .text("saturated", row.saturated)
                .float("i", row.quasi_potential)
                .text("fan", fan.map_or(String::new(), |f| f.0.to_string()))
                .float("fan_width", fan.map_or(0.0, |f| f.1)),
        );
    }
    Ok(t)
}

/// Harmonicity of `h_{a-hat(q)}` on the window of radius `window`, and
/// whether the residual is below the exactness threshold.
pub fn harmonic_table(model: &WalkModel, q: &[f64], window: i64) -> Result<(Table, bool)> {
    let h = HarmonicFunction::for_direction(model, q)?;
    let rep = harmonicity_residual(model, &h, &symmetric_window(model.dim(), window))?;
    let pass = rep.max_relative_residual < tol::HARMONIC;
    let mut t = Table::new();
    t.push(
        Row::new()
            .floats("q", q)
            .floats("a", h.point.a.coords())
            .text("case", lower(h.case))
            .float("max_relative_residual", rep.max_relative_residual)
            .ints("worst_site", &rep.worst_site)
            .text("sites", rep.sites)
            .text("pass", pass),
    );
    Ok((t, pass))
}

pub fn estimates_table(estimates: &[GreenEstimate]) -> Table {
    let mut t = Table::new();
    for e in estimates {
        t.push(
            Row::new()
                .ints("from", &e.source)
                .ints("to", &e.target)
                .float("value", e.value)
                .float("error", e.error)
                .text("method", e.method.name())
                .text("samples", e.samples.map_or(String::new(), |s| s.to_string()))
                .text("flags", e.flags.join("; ")),
        );
    }
    t
}

pub fn renewal_table(audits: &[RenewalAudit]) -> Table {
    let mut t = Table::new();
    for a in audits {
        t.push(
            Row::new()
                .ints("z", &a.z)
                .ints("z_n", &a.z_n)
                .float("delta", a.delta)
                .floats("gamma_q", &a.gamma_q)
                .float("green", a.lhs.value)
                .float("green_error", a.lhs.error)
                .float("direct", a.direct_term)
                .float("boundary_sum", a.boundary_sum)
                .float("principal", a.principal)
                .float("relative_gap", a.relative_gap)
                .float("principal_ratio", a.principal_ratio),
        );
    }
    t
}

pub fn asymptotics_table(tab: &AsymptoticsTable) -> Table {
    let mut t = Table::new();
    for row in &tab.rows {
        t.push(
            Row::new()
                .text("kernel", tab.kernel.name())
                .float("r", row.r)
                .ints("z_n", &row.z_n)
                .float("green", row.estimate.value)
                .float("green_error", row.estimate.error)
                .float("log_green_over_norm", row.log_value_over_r)
                .float("slope", tab.slope)
                .float("predicted_slope", tab.predicted_limit),
        );
    }
    t
}

/// Kernel traces, each group under its label.
pub fn traces_table(groups: &[(&str, &[KernelTrace])]) -> Table {
    let mut t = Table::new();
    for (label, traces) in groups {
        for tr in *traces {
            for row in &tr.rows {
                t.push(
                    Row::new()
                        .text("trace", label)
                        .ints("z", &tr.z)
                        .ints("z0", &tr.z0)
                        .floats("q", &tr.q)
                        .float("r", row.r)
                        .ints("z_n", &row.z_n)
                        .float("k", row.k)
                        .float("error", row.error)
                        .float("predicted", tr.predicted)
                        .text("flags", row.flags.join("; ")),
                );
            }
        }
    }
    t
}

pub fn ratio_limit_table(rep: &RatioLimitReport) -> Table {
    let mut t = Table::new();
    for tr in &rep.traces {
        for row in &tr.rows {
            t.push(
                Row::new()
                    .floats("tilt", &rep.tilt)
                    .ints("z", &tr.z)
                    .ints("z0", &tr.z0)
                    .float("r", row.r)
                    .ints("z_n", &row.z_n)
                    .float("ratio", row.k)
                    .float("error", row.error)
                    .float("predicted", tr.predicted)
                    .float("log_green_base", row.base_green.ln())
                    .float("slope", rep.slope),
            );
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(f64::INFINITY), "inf");
    }

    #[test]
    fn vector_columns_and_quoting() {
        let mut t = Table::new();
        t.push(Row::new().floats("q", &[1.0, 0.0]).text("note", "a, b"));
        assert_eq!(t.header, vec!["q_0", "q_1", "note"]);
        let p = Provenance::new(&reference::walk(), 7);
        let csv = t.to_csv(&p).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# model_sha256=") && lines[0].contains("seed=7"));
        assert_eq!(lines[1], "q_0,q_1,note");
        assert!(lines[2].ends_with(",\"a, b\""));
    }

    #[test]
    fn hash_ignores_formatting_of_the_file() {
        let m = reference::walk();
        let compact = m.to_document().to_json().replace(['\n', ' '], "");
        let reparsed = WalkModel::from_document(&compact).unwrap();
        assert_eq!(model_hash(&m), model_hash(&reparsed));
        assert_eq!(model_hash(&m).len(), 64);
    }
}
