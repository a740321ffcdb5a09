//! Transition kernels (reflected, killed, free, optionally tilted) and their
//! restriction to a finite box.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::genfunc::mgf_minus_one;
use crate::model::{LatticeMeasure, LatticeVector, WalkModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    /// The reflected walk: `mu` above the boundary, `mu0` on it.
    Reflected,
    /// The walk with law `mu`, killed on leaving `y >= 1`.
    Killed,
    /// The unrestricted walk with law `mu` on `Z^d`.
    Free,
}

impl KernelKind {
    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Reflected => "reflected",
            KernelKind::Killed => "killed",
            KernelKind::Free => "free",
        }
    }
}

/// Steps of one law with their (possibly tilted) weights.
#[derive(Debug, Clone)]
pub(crate) struct LawRow {
    pub steps: Vec<Vec<i64>>,
    pub weights: Vec<f64>,
    /// `1 - sum of weights`, computed without cancellation.
    pub deficit: f64,
}

impl LawRow {
    fn new(measure: &LatticeMeasure, tilt: Option<&[f64]>) -> Result<Self> {
        let mut steps = Vec::with_capacity(measure.len());
        let mut weights = Vec::with_capacity(measure.len());
        for atom in measure.atoms() {
            let w = match tilt {
                Some(a) => atom.prob * a.iter().zip(atom.step.iter()).map(|(x, s)| x * *s as f64).sum::<f64>().exp(),
                None => atom.prob,
            };
            steps.push(atom.step.to_vec());
            weights.push(w);
        }
        let deficit = match tilt {
            Some(a) => -mgf_minus_one(measure, a)?,
            None => 0.0,
        };
        if deficit < -1e-12 {
            return Err(Error::NotSubstochastic(format!(
                "law `{}` has total weight {} under the tilt",
                measure.name(),
                1.0 - deficit
            )));
        }
        Ok(Self { steps, weights, deficit: deficit.max(0.0) })
    }
}

/// A substochastic kernel on its state space.
#[derive(Debug, Clone)]
pub struct Kernel {
    kind: KernelKind,
    dim: usize,
    tilt: Option<Vec<f64>>,
    interior: LawRow,
    boundary: LawRow,
}

impl Kernel {
    pub fn new(model: &WalkModel, kind: KernelKind) -> Result<Self> {
        Self::build(model, kind, None)
    }

    /// `p~(z, z') = e^{a.(z' - z)} p(z, z')`.
    pub fn tilted(model: &WalkModel, kind: KernelKind, tilt: &[f64]) -> Result<Self> {
        if tilt.len() != model.dim() {
            return Err(Error::Dimension(format!("tilt of length {} in dimension {}", tilt.len(), model.dim())));
        }
        Self::build(model, kind, Some(tilt.to_vec()))
    }

    fn build(model: &WalkModel, kind: KernelKind, tilt: Option<Vec<f64>>) -> Result<Self> {
        let interior = LawRow::new(model.mu(), tilt.as_deref())?;
        let boundary = match kind {
            KernelKind::Reflected => LawRow::new(model.mu0(), tilt.as_deref())?,
            _ => interior.clone(),
        };
        Ok(Self { kind, dim: model.dim(), tilt, interior, boundary })
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tilt(&self) -> Option<&[f64]> {
        self.tilt.as_deref()
    }

    /// `z` is a state of the chain.
    pub fn alive(&self, z: &[i64]) -> bool {
        let y = z[self.dim - 1];
        match self.kind {
            KernelKind::Reflected => y >= 0,
            KernelKind::Killed => y >= 1,
            KernelKind::Free => true,
        }
    }

    pub fn check_site(&self, z: &[i64]) -> Result<()> {
        if z.len() != self.dim {
            return Err(Error::Dimension(format!("site of length {} in dimension {}", z.len(), self.dim)));
        }
        if !self.alive(z) {
            return Err(Error::Precondition(format!(
                "site {} is not a state of the {} kernel",
                LatticeVector(z.to_vec()),
                self.kind.name()
            )));
        }
        Ok(())
    }

    pub(crate) fn law_row(&self, z: &[i64]) -> &LawRow {
        if self.kind == KernelKind::Reflected && z[self.dim - 1] == 0 {
            &self.boundary
        } else {
            &self.interior
        }
    }

    /// Transitions out of `z` to live states, with the total weight lost.
    pub fn row(&self, z: &[i64]) -> (Vec<(LatticeVector, f64)>, f64) {
        let law = self.law_row(z);
        let mut out = Vec::with_capacity(law.steps.len());
        let mut lost = law.deficit;
        for (s, &w) in law.steps.iter().zip(&law.weights) {
            let t: Vec<i64> = z.iter().zip(s).map(|(a, b)| a + b).collect();
            if self.alive(&t) {
                out.push((LatticeVector(t), w));
            } else {
                lost += w;
            }
        }
        (out, lost)
    }

    /// Laws in force, for the exponential bounds.
    pub(crate) fn laws<'m>(&self, model: &'m WalkModel) -> Vec<&'m LatticeMeasure> {
        match self.kind {
            KernelKind::Reflected => vec![model.mu(), model.mu0()],
            _ => vec![model.mu()],
        }
    }

    pub(crate) fn max_step(&self) -> i64 {
        self.interior
            .steps
            .iter()
            .chain(&self.boundary.steps)
            .map(|s| s.iter().map(|x| x.abs()).max().unwrap_or(0))
            .max()
            .unwrap_or(0)
    }
}

/// A box `lo <= z <= hi` with a lexicographic numbering whose outermost
/// axis is the longest one, which keeps the band of the matrix narrow.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxDomain {
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
    #[serde(skip)]
    strides: Vec<usize>,
    #[serde(skip)]
    len: usize,
}

impl BoxDomain {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::Dimension("box corners of different lengths".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return Err(Error::Precondition("empty box".into()));
        }
        let d = lo.len();
        let extents: Vec<usize> = lo.iter().zip(&hi).map(|(a, b)| (b - a + 1) as usize).collect();
        let mut order: Vec<usize> = (0..d).collect();
        // Innermost first: shortest axes get the smallest strides.
        order.sort_by_key(|&i| (extents[i], i));
        let mut strides = vec![0; d];
        let mut s = 1usize;
        for &i in &order {
            strides[i] = s;
            s = s.checked_mul(extents[i]).ok_or(Error::MemoryCap { cap: usize::MAX })?;
        }
        Ok(Self { lo, hi, strides, len: s })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, z: &[i64]) -> bool {
        z.iter().zip(&self.lo).zip(&self.hi).all(|((x, a), b)| x >= a && x <= b)
    }

    pub fn index(&self, z: &[i64]) -> Option<usize> {
        if !self.contains(z) {
            return None;
        }
        Some(z.iter().zip(&self.lo).zip(&self.strides).map(|((x, a), s)| (x - a) as usize * s).sum())
    }

    pub fn site(&self, mut i: usize) -> Vec<i64> {
        let d = self.dim();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by_key(|&k| std::cmp::Reverse(self.strides[k]));
        let mut z = vec![0; d];
        for k in order {
            z[k] = self.lo[k] + (i / self.strides[k]) as i64;
            i %= self.strides[k];
        }
        z
    }

    /// Index offset of a step, for the band width.
    pub(crate) fn offset(&self, step: &[i64]) -> i64 {
        step.iter().zip(&self.strides).map(|(s, t)| s * *t as i64).sum()
    }

    /// The face of the box crossed by an outside point: `2 i` for the low
    /// side of axis `i`, `2 i + 1` for the high side.
    pub fn face_of(&self, e: &[i64]) -> usize {
        for i in 0..self.dim() {
            if e[i] < self.lo[i] {
                return 2 * i;
            }
            if e[i] > self.hi[i] {
                return 2 * i + 1;
            }
        }
        unreachable!("point inside the box")
    }

    /// Smallest box containing all points, padded by `pad` on every side.
    pub fn around(points: &[&[i64]], pad: i64) -> Result<Self> {
        let d = points[0].len();
        let mut lo = vec![i64::MAX; d];
        let mut hi = vec![i64::MIN; d];
        for p in points {
            for i in 0..d {
                lo[i] = lo[i].min(p[i] - pad);
                hi[i] = hi[i].max(p[i] + pad);
            }
        }
        Self::new(lo, hi)
    }

    /// Intersection with the state space of `kernel`.
    pub fn clipped(&self, kernel: &Kernel) -> Result<Self> {
        let d = self.dim();
        let mut lo = self.lo.clone();
        match kernel.kind() {
            KernelKind::Reflected => lo[d - 1] = lo[d - 1].max(0),
            KernelKind::Killed => lo[d - 1] = lo[d - 1].max(1),
            KernelKind::Free => {}
        }
        Self::new(lo, self.hi.clone())
    }
}

/// The kernel restricted to a box: in-box transitions by index, exits to
/// live states outside the box, and weight lost to killing or tilting.
#[derive(Debug, Clone)]
pub struct BoxSystem {
    pub domain: BoxDomain,
    /// CSR layout of in-box transitions.
    pub(crate) row_start: Vec<usize>,
    pub(crate) cols: Vec<usize>,
    pub(crate) weights: Vec<f64>,
    /// Weight leaving to live states outside the box, per row.
    pub(crate) exit_mass: Vec<f64>,
    /// Total weight not staying in the box, per row.
    pub(crate) deficit: Vec<f64>,
    /// `(row, exit site, weight)` for every exit to a live outside state.
    pub(crate) exits: Vec<(usize, Vec<i64>, f64)>,
}

impl BoxSystem {
    pub fn new(kernel: &Kernel, domain: BoxDomain) -> Result<Self> {
        let n = domain.len();
        let mut row_start = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut weights = Vec::new();
        let mut exit_mass = vec![0.0; n];
        let mut deficit = vec![0.0; n];
        let mut exits = Vec::new();
        row_start.push(0);
        for i in 0..n {
            let z = domain.site(i);
            if !kernel.alive(&z) {
                return Err(Error::Precondition(format!("box site {} is not a state of the kernel", LatticeVector(z))));
            }
            let law = kernel.law_row(&z);
            let mut lost = law.deficit;
            for (s, &w) in law.steps.iter().zip(&law.weights) {
                let t: Vec<i64> = z.iter().zip(s).map(|(a, b)| a + b).collect();
                if let Some(j) = domain.index(&t) {
                    cols.push(j);
                    weights.push(w);
                } else {
                    lost += w;
                    if kernel.alive(&t) {
                        exit_mass[i] += w;
                        exits.push((i, t, w));
                    }
                }
            }
            deficit[i] = lost;
            row_start.push(cols.len());
        }
        Ok(Self { domain, row_start, cols, weights, exit_mass, deficit, exits })
    }

    pub fn len(&self) -> usize {
        self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domain.is_empty()
    }

    /// Weight leaving the box to live states, per site.
    pub fn exit_mass(&self) -> &[f64] {
        &self.exit_mass
    }

    pub(crate) fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_start[i]..self.row_start[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.weights[r].iter().copied())
    }

    /// `max |i - j|` over in-box transitions.
    pub(crate) fn bandwidth(&self) -> (usize, usize) {
        let (mut lower, mut upper) = (0, 0);
        for i in 0..self.len() {
            for (j, _) in self.row(i) {
                if j < i {
                    lower = lower.max(i - j);
                } else {
                    upper = upper.max(j - i);
                }
            }
        }
        (lower, upper)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference;

    #[test]
    fn indexing_round_trip() {
        let b = BoxDomain::new(vec![-3, 0], vec![5, 2]).unwrap();
        assert_eq!(b.len(), 27);
        for i in 0..b.len() {
            assert_eq!(b.index(&b.site(i)), Some(i));
        }
        // The long axis is outermost.
        assert_eq!(b.offset(&[1, 0]), 3);
    }

    #[test]
    fn killed_rows_lose_the_downward_mass_at_height_one() {
        let model = reference::walk();
        let k = Kernel::new(&model, KernelKind::Killed).unwrap();
        let (row, lost) = k.row(&[0, 1]);
        assert_eq!(row.len(), 3);
        assert!((lost - model.mu().weight_of(&[0, -1])).abs() < 1e-15);
    }

    #[test]
    fn tilted_rows_sum_to_phi() {
        let model = reference::walk();
        let a = [0.0, 2f64.ln()];
        let k = Kernel::tilted(&model, KernelKind::Reflected, &[0.0, 0.0]).unwrap();
        assert_eq!(k.row(&[0, 3]).1, 0.0);
        // phi0(0, ln 2) > 1: not substochastic.
        assert!(Kernel::tilted(&model, KernelKind::Reflected, &a).is_err());
        let k = Kernel::tilted(&model, KernelKind::Killed, &a).unwrap();
        let (row, lost) = k.row(&[0, 5]);
        let s: f64 = row.iter().map(|r| r.1).sum();
        assert!((s + lost - 1.0).abs() < 1e-14);
    }
}
