//! Step distributions of the reflected walk, the hypothesis checks that a
//! model must pass before any downstream computation, and the transition
//! kernel.

use std::collections::{HashSet, VecDeque};
use std::fmt;
use std::ops::Deref;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice;
use crate::tol;

/// An integer vector: a step of a measure or a site of the half-space.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatticeVector(pub Vec<i64>);

impl LatticeVector {
    pub fn new(coords: Vec<i64>) -> Self {
        Self(coords)
    }

    pub fn zero(dim: usize) -> Self {
        Self(vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Last coordinate (the height above the boundary hyper-plane).
    pub fn height(&self) -> i64 {
        *self.0.last().expect("empty lattice vector")
    }

    pub fn plus(&self, other: &[i64]) -> Self {
        Self(self.0.iter().zip(other).map(|(a, b)| a + b).collect())
    }

    pub fn minus(&self, other: &[i64]) -> Self {
        Self(self.0.iter().zip(other).map(|(a, b)| a - b).collect())
    }

    pub fn sup_norm(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).max().unwrap_or(0)
    }

    pub fn l1_norm(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).sum()
    }

    pub fn euclidean_norm(&self) -> f64 {
        self.0.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&c| c as f64).collect()
    }
}

impl Deref for LatticeVector {
    type Target = [i64];
    fn deref(&self) -> &[i64] {
        &self.0
    }
}

impl From<Vec<i64>> for LatticeVector {
    fn from(v: Vec<i64>) -> Self {
        Self(v)
    }
}

impl fmt::Display for LatticeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Atom {
    pub step: LatticeVector,
    pub prob: f64,
}

/// A finitely supported probability measure on `Z^d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeMeasure {
    #[serde(skip)]
    name: &'static str,
    dim: usize,
    atoms: Vec<Atom>,
}

impl LatticeMeasure {
    /// Validates dimensions, positivity, distinct support and total mass.
    /// Weights are never renormalised.
    pub fn new(name: &'static str, dim: usize, atoms: Vec<Atom>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Dimension(format!("dimension must be at least 2, got {dim}")));
        }
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure { measure: name, reason: "no atoms".into() });
        }
        let mut seen = HashSet::new();
        for atom in &atoms {
            if atom.step.dim() != dim {
                return Err(Error::Dimension(format!(
                    "step {} of `{name}` has length {}, expected {dim}",
                    atom.step,
                    atom.step.dim()
                )));
            }
            if !(atom.prob > 0.0 && atom.prob <= 1.0) {
                return Err(Error::InvalidMeasure {
                    measure: name,
                    reason: format!("weight {} of step {} is not in (0,1]", atom.prob, atom.step),
                });
            }
            if !seen.insert(atom.step.clone()) {
                return Err(Error::InvalidMeasure {
                    measure: name,
                    reason: format!("duplicate step {}", atom.step),
                });
            }
        }
        let sum: f64 = atoms.iter().map(|a| a.prob).sum();
        if (sum - 1.0).abs() > tol::WEIGHT_SUM {
            return Err(Error::WeightSum { measure: name, sum, tol: tol::WEIGHT_SUM });
        }
        Ok(Self { name, dim, atoms })
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    /// Convenience constructor from `(step, weight)` pairs.
    pub fn from_pairs(name: &'static str, pairs: &[(&[i64], f64)]) -> Result<Self> {
        let dim = pairs.first().map(|(s, _)| s.len()).unwrap_or(0);
        let atoms = pairs
            .iter()
            .map(|(s, p)| Atom { step: LatticeVector(s.to_vec()), prob: *p })
            .collect();
        Self::new(name, dim, atoms)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for atom in &self.atoms {
            for (mi, &z) in m.iter_mut().zip(atom.step.iter()) {
                *mi += atom.prob * z as f64;
            }
        }
        m
    }

    pub fn max_step_norm(&self) -> i64 {
        self.atoms.iter().map(|a| a.step.sup_norm()).max().unwrap_or(0)
    }

    pub fn min_height(&self) -> i64 {
        self.atoms.iter().map(|a| a.step.height()).min().unwrap_or(0)
    }

    pub fn weight_of(&self, step: &[i64]) -> f64 {
        self.atoms
            .iter()
            .find(|a| a.step.0 == step)
            .map(|a| a.prob)
            .unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub status: Status,
    pub detail: String,
}

impl Check {
    fn pass(detail: impl Into<String>) -> Self {
        Self { status: Status::Pass, detail: detail.into() }
    }
    fn fail(detail: impl Into<String>) -> Self {
        Self { status: Status::Fail, detail: detail.into() }
    }
    fn inconclusive(detail: impl Into<String>) -> Self {
        Self { status: Status::Inconclusive, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub h0: Check,
    pub h1: Check,
    pub h2: Check,
    pub h3: Check,
    pub h4: Check,
    /// Mean `m` of the interior step law.
    pub mean: Vec<f64>,
    /// Mean `m0` of the boundary step law.
    pub mean0: Vec<f64>,
}

impl HypothesisReport {
    pub fn checks(&self) -> [(&'static str, &Check); 5] {
        [("H0", &self.h0), ("H1", &self.h1), ("H2", &self.h2), ("H3", &self.h3), ("H4", &self.h4)]
    }

    pub fn all_pass(&self) -> bool {
        self.checks().iter().all(|(_, c)| c.status == Status::Pass)
    }
}

/// Outcome of the finite-window irreducibility analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct IrreducibilityReport {
    pub h1: Check,
    pub h2: Check,
}

/// The validated pair of step laws of the reflected walk.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkModel {
    mu: LatticeMeasure,
    mu0: LatticeMeasure,
    dim: usize,
    report: HypothesisReport,
}

/// Which of the two step laws a quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Law {
    /// `mu`, used away from the boundary hyper-plane.
    Interior,
    /// `mu0`, used on the boundary hyper-plane.
    Boundary,
}

impl WalkModel {
    /// Default window radius of the irreducibility check for a model.
    pub fn default_window(mu: &LatticeMeasure, mu0: &LatticeMeasure) -> i64 {
        (3 * mu.max_step_norm().max(mu0.max_step_norm())).max(6)
    }

    /// Builds the model and evaluates every hypothesis. The model is returned
    /// even when a hypothesis fails; [`WalkModel::ensure_accepted`] gates
    /// downstream use.
    pub fn new(mu: LatticeMeasure, mu0: LatticeMeasure) -> Result<Self> {
        if mu.dim() != mu0.dim() {
            return Err(Error::Dimension(format!(
                "mu has dimension {}, mu0 has dimension {}",
                mu.dim(),
                mu0.dim()
            )));
        }
        let dim = mu.dim();
        let radius = Self::default_window(&mu, &mu0);
        let h0 = check_h0_measures(&mu, &mu0);
        let irr = check_irreducibility_measures(&mu, &mu0, radius)?;
        let h3 = check_h3_means(&mu.mean(), &mu0.mean());
        let report = HypothesisReport {
            h0,
            h1: irr.h1,
            h2: irr.h2,
            h3,
            h4: Check::pass("finite support: generating functions are finite everywhere"),
            mean: mu.mean(),
            mean0: mu0.mean(),
        };
        Ok(Self { mu, mu0, dim, report })
    }

    pub fn from_document(text: &str) -> Result<Self> {
        let doc = ModelDocument::parse(text)?;
        doc.into_model()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_document(&text)
    }

    pub fn mu(&self) -> &LatticeMeasure {
        &self.mu
    }

    pub fn mu0(&self) -> &LatticeMeasure {
        &self.mu0
    }

    pub fn law(&self, law: Law) -> &LatticeMeasure {
        match law {
            Law::Interior => &self.mu,
            Law::Boundary => &self.mu0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn report(&self) -> &HypothesisReport {
        &self.report
    }

    pub fn mean(&self) -> &[f64] {
        &self.report.mean
    }

    pub fn mean0(&self) -> &[f64] {
        &self.report.mean0
    }

    pub fn ensure_accepted(&self) -> Result<()> {
        if self.report.all_pass() {
            return Ok(());
        }
        let failing: Vec<String> = self
            .report
            .checks()
            .iter()
            .filter(|(_, c)| c.status != Status::Pass)
            .map(|(n, c)| format!("{n} {}: {}", c.status, c.detail))
            .collect();
        Err(Error::ModelRejected(failing.join("; ")))
    }

    pub fn check_h0(&self) -> Status {
        check_h0_measures(&self.mu, &self.mu0).status
    }

    pub fn check_irreducibility(&self, window_radius: i64) -> Result<IrreducibilityReport> {
        check_irreducibility_measures(&self.mu, &self.mu0, window_radius)
    }

    pub fn check_h3(&self) -> Status {
        check_h3_means(&self.report.mean, &self.report.mean0).status
    }

    /// One row of the transition matrix: `mu` shifted by `z` above the
    /// boundary, `mu0` shifted by `z` on it.
    pub fn transition_row(&self, z: &[i64]) -> Result<Vec<(LatticeVector, f64)>> {
        if z.len() != self.dim {
            return Err(Error::Dimension(format!("site of length {} in dimension {}", z.len(), self.dim)));
        }
        let y = z[self.dim - 1];
        if y < 0 {
            return Err(Error::SiteBelowHalfSpace(z.to_vec()));
        }
        let law = if y > 0 { &self.mu } else { &self.mu0 };
        let site = LatticeVector(z.to_vec());
        Ok(law.atoms().iter().map(|a| (site.plus(&a.step), a.prob)).collect())
    }

    /// Step law in force at height `y`.
    pub fn law_at_height(&self, y: i64) -> &LatticeMeasure {
        if y > 0 {
            &self.mu
        } else {
            &self.mu0
        }
    }

    pub fn to_document(&self) -> ModelDocument {
        let conv = |m: &LatticeMeasure| {
            m.atoms()
                .iter()
                .map(|a| AtomDocument { step: a.step.0.clone(), prob: ProbValue::Number(a.prob) })
                .collect()
        };
        ModelDocument { dimension: self.dim, mu: conv(&self.mu), mu0: conv(&self.mu0) }
    }
}

fn check_h0_measures(mu: &LatticeMeasure, mu0: &LatticeMeasure) -> Check {
    let bad_mu: Vec<String> =
        mu.atoms().iter().filter(|a| a.step.height() < -1).map(|a| a.step.to_string()).collect();
    let bad_mu0: Vec<String> =
        mu0.atoms().iter().filter(|a| a.step.height() < 0).map(|a| a.step.to_string()).collect();
    if bad_mu.is_empty() && bad_mu0.is_empty() {
        Check::pass("mu jumps down by at most 1, mu0 never jumps down")
    } else {
        let mut parts = Vec::new();
        if !bad_mu.is_empty() {
            parts.push(format!("mu has steps below -1: {}", bad_mu.join(" ")));
        }
        if !bad_mu0.is_empty() {
            parts.push(format!("mu0 has steps with negative height: {}", bad_mu0.join(" ")));
        }
        Check::fail(parts.join("; "))
    }
}

fn check_h3_means(m: &[f64], m0: &[f64]) -> Check {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nm = norm(m);
    let nm0 = norm(m0);
    if nm <= 1e-12 {
        return Check::fail(format!("interior drift vanishes: |m| = {nm:e}"));
    }
    if nm0 <= 1e-12 {
        return Check::fail("boundary drift vanishes, m0/|m0| is undefined");
    }
    let sum: Vec<f64> = m.iter().zip(m0).map(|(a, b)| a / nm + b / nm0).collect();
    let ns = norm(&sum);
    if ns <= 1e-12 {
        Check::fail(format!("m/|m| + m0/|m0| vanishes ({ns:e})"))
    } else {
        Check::pass(format!("|m| = {nm:.6}, |m/|m| + m0/|m0|| = {ns:.6}"))
    }
}

/// Generalised cross product of `d - 1` vectors in `Z^d`.
fn cross(vectors: &[&[i64]], dim: usize) -> Vec<i128> {
    // Cofactor expansion of the determinant with a symbolic first row.
    (0..dim)
        .map(|j| {
            let minor: Vec<Vec<i128>> = vectors
                .iter()
                .map(|v| (0..dim).filter(|&c| c != j).map(|c| v[c] as i128).collect())
                .collect();
            let det = int_det(minor);
            if j % 2 == 0 {
                det
            } else {
                -det
            }
        })
        .collect()
}

fn int_det(mut m: Vec<Vec<i128>>) -> i128 {
    let n = m.len();
    if n == 0 {
        return 1;
    }
    if n == 1 {
        return m[0][0];
    }
    // Laplace expansion is fine for the tiny sizes used here.
    let first = m.remove(0);
    let mut det = 0;
    for (j, &f) in first.iter().enumerate() {
        if f == 0 {
            continue;
        }
        let minor: Vec<Vec<i128>> =
            m.iter().map(|r| r.iter().enumerate().filter(|&(c, _)| c != j).map(|(_, &v)| v).collect()).collect();
        let sign = if j % 2 == 0 { 1 } else { -1 };
        det += sign * f * int_det(minor);
    }
    det
}

/// True when the origin lies in the interior of the convex hull of `steps`,
/// assuming the steps span `R^d`. Exact integer test over candidate
/// supporting hyper-planes spanned by `d - 1` steps.
fn origin_in_interior(steps: &[&[i64]], dim: usize) -> bool {
    fn subsets(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            subsets(n, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut combos = Vec::new();
    subsets(steps.len(), dim - 1, 0, &mut Vec::new(), &mut combos);
    for combo in combos {
        let vs: Vec<&[i64]> = combo.iter().map(|&i| steps[i]).collect();
        let normal = cross(&vs, dim);
        if normal.iter().all(|&c| c == 0) {
            continue;
        }
        for sign in [1i128, -1] {
            let all_nonneg = steps.iter().all(|s| {
                let dot: i128 = s.iter().zip(&normal).map(|(&a, &b)| a as i128 * b).sum();
                sign * dot >= 0
            });
            if all_nonneg {
                return false;
            }
        }
    }
    true
}

struct Window {
    radius: i64,
    dim: usize,
    /// Lowest admissible height inside the window.
    floor: i64,
}

impl Window {
    fn contains(&self, z: &[i64]) -> bool {
        let (last, rest) = z.split_last().unwrap();
        rest.iter().all(|c| c.abs() <= self.radius) && *last >= self.floor && *last <= self.radius
    }
}

/// Breadth-first reachability inside a window. `law_at` gives the step law
/// at a height; returns the reached set and whether some transition left
/// the window.
fn reach_forward<'a>(
    start: &[i64],
    window: &Window,
    law_at: &dyn Fn(i64) -> &'a LatticeMeasure,
) -> (HashSet<Vec<i64>>, bool) {
    let mut seen = HashSet::new();
    let mut queue = VecDeque::new();
    let mut leaked = false;
    seen.insert(start.to_vec());
    queue.push_back(start.to_vec());
    while let Some(z) = queue.pop_front() {
        let law = law_at(z[window.dim - 1]);
        for atom in law.atoms() {
            let next: Vec<i64> = z.iter().zip(atom.step.iter()).map(|(a, b)| a + b).collect();
            if !window.contains(&next) {
                leaked = true;
                continue;
            }
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    (seen, leaked)
}

/// Sites of the window from which `target` can be reached inside it.
fn reach_backward<'a>(
    target: &[i64],
    window: &Window,
    law_at: &dyn Fn(i64) -> &'a LatticeMeasure,
    all_steps: &[Vec<i64>],
) -> (HashSet<Vec<i64>>, bool) {
    let mut seen = HashSet::new();
    let mut queue = VecDeque::new();
    let mut leaked = false;
    seen.insert(target.to_vec());
    queue.push_back(target.to_vec());
    while let Some(z) = queue.pop_front() {
        for step in all_steps {
            let prev: Vec<i64> = z.iter().zip(step).map(|(a, b)| a - b).collect();
            if !window.contains(&prev) {
                leaked = true;
                continue;
            }
            let law = law_at(prev[window.dim - 1]);
            if law.weight_of(step) <= 0.0 {
                continue;
            }
            if seen.insert(prev.clone()) {
                queue.push_back(prev);
            }
        }
    }
    (seen, leaked)
}

fn check_irreducibility_measures(
    mu: &LatticeMeasure,
    mu0: &LatticeMeasure,
    radius: i64,
) -> Result<IrreducibilityReport> {
    let dim = mu.dim();
    let max_step = mu.max_step_norm().max(mu0.max_step_norm());
    if radius < max_step {
        return Err(Error::WindowTooSmall { radius, step: max_step });
    }
    let h2 = check_h2(mu);

    if mu.len() < 2 {
        return Ok(IrreducibilityReport {
            h1: Check::fail("mu has a single atom, the walk cannot be irreducible"),
            h2,
        });
    }

    let window = Window { radius, dim, floor: 0 };
    let reflected = |y: i64| if y > 0 { mu } else { mu0 };
    let mut all_steps: Vec<Vec<i64>> = mu.atoms().iter().map(|a| a.step.0.clone()).collect();
    for a in mu0.atoms() {
        if !all_steps.contains(&a.step.0) {
            all_steps.push(a.step.0.clone());
        }
    }
    let origin = vec![0; dim];
    let (forward, leak_f) = reach_forward(&origin, &window, &reflected);
    let (backward, leak_b) = reach_backward(&origin, &window, &reflected, &all_steps);

    let mut targets: Vec<Vec<i64>> = Vec::new();
    for i in 0..dim - 1 {
        for s in [1, -1] {
            let mut e = vec![0; dim];
            e[i] = s;
            targets.push(e);
        }
    }
    let mut up = vec![0; dim];
    up[dim - 1] = 1;
    targets.push(up.clone());

    let mut missing = Vec::new();
    for t in &targets {
        if !forward.contains(t) {
            missing.push(format!("{} not reachable from the origin", LatticeVector(t.clone())));
        }
        if !backward.contains(t) {
            missing.push(format!("origin not reachable from {}", LatticeVector(t.clone())));
        }
    }

    // Vertical communication away from the boundary uses mu only, so it is
    // translation invariant in the height as well.
    let interior_only = |_: i64| mu;
    let (up_reach, leak_u) = reach_forward(&origin, &window, &interior_only);
    let (down_reach, leak_d) = reach_backward(&origin, &window, &interior_only, &all_steps);
    if !up_reach.contains(&up) {
        missing.push("interior walk cannot climb one level while staying above its start".into());
    }
    if !down_reach.contains(&up) {
        missing.push("interior walk cannot descend one level while staying above the level below".into());
    }

    let leaked = leak_f || leak_b || leak_u || leak_d;
    let h1 = if missing.is_empty() {
        Check::pass(format!("communication verified in window of radius {radius}"))
    } else if leaked {
        Check::inconclusive(format!("window of radius {radius} saturated: {}", missing.join("; ")))
    } else {
        Check::fail(missing.join("; "))
    };
    Ok(IrreducibilityReport { h1, h2 })
}

fn check_h2(mu: &LatticeMeasure) -> Check {
    let dim = mu.dim();
    let steps: Vec<Vec<i64>> = mu.atoms().iter().map(|a| a.step.0.clone()).collect();
    let mut problems = Vec::new();
    match lattice::generated_index(&steps, dim) {
        Some(1) => {}
        Some(k) => problems.push(format!("supp(mu) generates a sublattice of index {k}")),
        None => problems.push("supp(mu) does not span R^d".to_string()),
    }
    if problems.is_empty() {
        let refs: Vec<&[i64]> = steps.iter().map(|s| s.as_slice()).collect();
        if !origin_in_interior(&refs, dim) {
            problems.push("supp(mu) lies in a closed half-space, the walk cannot return".into());
        }
    }
    let heights: Vec<i64> = steps.iter().map(|s| s[dim - 1]).collect();
    let g = lattice::gcd_all(heights.iter().copied());
    match lattice::loop_period(&heights) {
        Some(1) => {}
        Some(p) => problems.push(format!("last coordinate is periodic with period {p} (increment gcd {g})")),
        None => problems.push("last coordinate has no return loop".into()),
    }
    if problems.is_empty() {
        Check::pass("supp(mu) generates Z^d, origin interior to its hull, last coordinate aperiodic")
    } else {
        Check::fail(problems.join("; "))
    }
}

/// Probability as written in a model file: a number or an exact decimal
/// string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProbValue {
    Number(f64),
    Text(String),
}

impl ProbValue {
    fn value(&self) -> Result<f64> {
        match self {
            ProbValue::Number(x) => Ok(*x),
            ProbValue::Text(s) => s
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("probability `{s}`: {e}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomDocument {
    pub step: Vec<i64>,
    pub prob: ProbValue,
}

/// The on-disk model schema (JSON or TOML).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub dimension: usize,
    pub mu: Vec<AtomDocument>,
    pub mu0: Vec<AtomDocument>,
}

impl ModelDocument {
    pub fn parse(text: &str) -> Result<Self> {
        let trimmed = text.trim_start();
        if trimmed.starts_with('{') {
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
        } else {
            toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
        }
    }

    pub fn into_model(self) -> Result<WalkModel> {
        let conv = |name: &'static str, atoms: Vec<AtomDocument>| -> Result<LatticeMeasure> {
            let atoms = atoms
                .into_iter()
                .map(|a| Ok(Atom { step: LatticeVector(a.step), prob: a.prob.value()? }))
                .collect::<Result<Vec<_>>>()?;
            LatticeMeasure::new(name, self.dimension, atoms)
        };
        let mu = conv("mu", self.mu)?;
        let mu0 = conv("mu0", self.mu0)?;
        WalkModel::new(mu, mu0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model document serialises")
    }
}
