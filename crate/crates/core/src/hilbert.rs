//! Operators on the joint space of an (N+1)-level atom and one truncated
//! cavity mode.
//!
//! Basis ordering is atom ⊗ field with the atom index varying slowest, so the
//! joint index of `|level, n⟩` is `level * (cutoff + 1) + n`.

use std::fmt;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Atomic level register. Level 0 is the ground state `g`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtomSpace {
    labels: Vec<String>,
}

impl AtomSpace {
    /// Ladder with levels `g, 1, …, level_count-1`.
    pub fn new(level_count: usize) -> Result<Self> {
        if level_count < 2 {
            return Err(Error::validation(format!(
                "atom needs at least 2 levels, got {level_count}"
            )));
        }
        let labels = (0..level_count).map(level_label).collect();
        Ok(Self { labels })
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        if labels.len() < 2 {
            return Err(Error::validation("atom needs at least 2 levels"));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::validation(format!("duplicate level label {l:?}")));
            }
        }
        Ok(Self { labels })
    }

    pub fn level_count(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, level: usize) -> &str {
        &self.labels[level]
    }
}

pub(crate) fn level_label(level: usize) -> String {
    if level == 0 {
        "g".to_string()
    } else {
        level.to_string()
    }
}

/// Photon-number register `|0⟩ … |cutoff⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FockSpace {
    cutoff: usize,
}

impl FockSpace {
    pub fn new(cutoff: usize) -> Result<Self> {
        if cutoff < 1 {
            return Err(Error::validation("fock cutoff must be at least 1"));
        }
        Ok(Self { cutoff })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.cutoff + 1
    }
}

/// Complex sparse square matrix kept in canonical form: entries sorted by
/// (row, col), no duplicates, no exact zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl SparseOperator {
    /// Builds an operator from triplets, summing duplicates and dropping zeros.
    pub fn from_triplets(dim: usize, triplets: Vec<(usize, usize, C64)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::validation("operator dimension must be positive"));
        }
        if let Some(&(r, c, _)) = triplets.iter().find(|(r, c, _)| *r >= dim || *c >= dim) {
            return Err(Error::validation(format!(
                "entry ({r}, {c}) out of range for dimension {dim}"
            )));
        }
        Ok(Self::canonical(dim, triplets))
    }

    fn canonical(dim: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut entries: Vec<(usize, usize, C64)> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            match entries.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => entries.push((r, c, v)),
            }
        }
        entries.retain(|e| e.2 != ZERO);
        Self { dim, entries }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            entries: (0..dim).map(|i| (i, i, ONE)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize, C64)] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries
            .binary_search_by_key(&(row, col), |&(r, c, _)| (r, c))
            .map(|i| self.entries[i].2)
            .unwrap_or(ZERO)
    }

    pub fn trace(&self) -> C64 {
        self.entries
            .iter()
            .filter(|(r, c, _)| r == c)
            .map(|e| e.2)
            .sum()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::canonical(
            self.dim,
            self.entries
                .iter()
                .map(|&(r, c, v)| (c, r, v.conj()))
                .collect(),
        )
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self::canonical(
            self.dim,
            self.entries
                .iter()
                .map(|&(r, c, v)| (r, c, v * factor))
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "operator dimension mismatch");
        let mut t = self.entries.clone();
        t.extend_from_slice(&other.entries);
        Self::canonical(self.dim, t)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-ONE))
    }

    /// Matrix product `self · other`.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "operator dimension mismatch");
        // Row offsets of `other` for O(nnz) lookup of row k.
        let mut start = vec![0usize; other.dim + 1];
        for &(r, _, _) in &other.entries {
            start[r + 1] += 1;
        }
        for i in 0..other.dim {
            start[i + 1] += start[i];
        }
        let mut t = Vec::new();
        for &(i, k, a) in &self.entries {
            for &(_, j, b) in &other.entries[start[k]..start[k + 1]] {
                t.push((i, j, a * b));
            }
        }
        Self::canonical(self.dim, t)
    }

    /// `[self, other] = self·other − other·self`.
    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    /// Kronecker product with `self` as the slow (outer) factor.
    pub fn tensor(&self, other: &Self) -> Self {
        let d = other.dim;
        let mut t = Vec::with_capacity(self.nnz() * other.nnz());
        for &(r1, c1, a) in &self.entries {
            for &(r2, c2, b) in &other.entries {
                t.push((r1 * d + r2, c1 * d + c2, a * b));
            }
        }
        // Row-major order is preserved by construction; canonical() is a no-op
        // apart from dropping products that underflow to zero.
        Self::canonical(self.dim * d, t)
    }

    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.dim {
            return Err(Error::validation(format!(
                "vector length {} does not match operator dimension {}",
                v.len(),
                self.dim
            )));
        }
        let mut out = vec![ZERO; self.dim];
        self.apply_add(ONE, v, &mut out);
        Ok(out)
    }

    /// `out += factor · self · v`, no dimension checks.
    pub(crate) fn apply_add(&self, factor: C64, v: &[C64], out: &mut [C64]) {
        for &(r, c, a) in &self.entries {
            out[r] += factor * a * v[c];
        }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.entries
            .iter()
            .all(|&(r, c, v)| (v - self.get(c, r).conj()).norm() <= tol)
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        let mut cols = vec![0.0; self.dim];
        for &(_, c, v) in &self.entries {
            cols[c] += v.norm();
        }
        cols.into_iter().fold(0.0, f64::max)
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.2.norm()).fold(0.0, f64::max)
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<C64> {
        let mut m = vec![ZERO; self.dim * self.dim];
        for &(r, c, v) in &self.entries {
            m[r * self.dim + c] = v;
        }
        m
    }

    /// Entry-wise distance to `other` in the max norm.
    pub fn distance(&self, other: &Self) -> f64 {
        self.sub(other).max_abs()
    }
}

/// `σ_ij = |i⟩⟨j|` on the bare atom.
pub fn sigma(atom: &AtomSpace, i: usize, j: usize) -> Result<SparseOperator> {
    let n = atom.level_count();
    if i >= n || j >= n {
        return Err(Error::validation(format!(
            "level index ({i}, {j}) out of range for {n} levels"
        )));
    }
    Ok(SparseOperator {
        dim: n,
        entries: vec![(i, j, ONE)],
    })
}

/// Truncated annihilation operator, `a|n⟩ = √n |n−1⟩`.
pub fn annihilator(fock: &FockSpace) -> SparseOperator {
    SparseOperator {
        dim: fock.dim(),
        entries: (1..fock.dim())
            .map(|n| (n - 1, n, C64::new((n as f64).sqrt(), 0.0)))
            .collect(),
    }
}

pub fn tensor(a: &SparseOperator, b: &SparseOperator) -> SparseOperator {
    a.tensor(b)
}

pub fn apply(op: &SparseOperator, v: &[C64]) -> Result<Vec<C64>> {
    op.apply(v)
}

/// Polynomial in `a, a†` recognized by [`JointSpace::decompose`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub enum FieldMonomial {
    Identity,
    Annihilate,
    Create,
    /// `a†a`
    Number,
    /// `a a†`
    AntiNumber,
}

impl FieldMonomial {
    pub fn symbol(self) -> &'static str {
        match self {
            FieldMonomial::Identity => "",
            FieldMonomial::Annihilate => "a",
            FieldMonomial::Create => "a†",
            FieldMonomial::Number => "a†a",
            FieldMonomial::AntiNumber => "aa†",
        }
    }

    pub fn adjoint(self) -> Self {
        match self {
            FieldMonomial::Annihilate => FieldMonomial::Create,
            FieldMonomial::Create => FieldMonomial::Annihilate,
            m => m,
        }
    }
}

/// One `coefficient · F ⊗ σ_ij` piece of a joint-space operator.
#[derive(Clone, Debug, PartialEq)]
pub struct Component {
    pub row_level: usize,
    pub col_level: usize,
    pub field: Option<FieldMonomial>,
    pub coefficient: C64,
}

impl Component {
    pub fn label(&self) -> String {
        let field = match self.field {
            Some(f) => f.symbol(),
            None => "F?",
        };
        format!(
            "{field}σ_{{{},{}}}",
            level_label(self.row_level),
            level_label(self.col_level)
        )
    }
}

/// Atom ⊗ field product space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JointSpace {
    pub atom: AtomSpace,
    pub fock: FockSpace,
}

impl JointSpace {
    pub fn new(level_count: usize, cutoff: usize) -> Result<Self> {
        Ok(Self {
            atom: AtomSpace::new(level_count)?,
            fock: FockSpace::new(cutoff)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.atom.level_count() * self.fock.dim()
    }

    pub fn level_count(&self) -> usize {
        self.atom.level_count()
    }

    pub fn index(&self, level: usize, photons: usize) -> usize {
        level * self.fock.dim() + photons
    }

    pub fn split_index(&self, index: usize) -> (usize, usize) {
        (index / self.fock.dim(), index % self.fock.dim())
    }

    /// `σ_ij ⊗ 1`.
    pub fn sigma(&self, i: usize, j: usize) -> Result<SparseOperator> {
        Ok(sigma(&self.atom, i, j)?.tensor(&SparseOperator::identity(self.fock.dim())))
    }

    /// `σ_ij ⊗ F` for a field monomial `F`.
    pub fn sigma_with(&self, i: usize, j: usize, field: FieldMonomial) -> Result<SparseOperator> {
        Ok(sigma(&self.atom, i, j)?.tensor(&self.field_operator(field)))
    }

    /// `a` on the bare field register.
    pub fn annihilator(&self) -> SparseOperator {
        annihilator(&self.fock)
    }

    pub fn field_operator(&self, m: FieldMonomial) -> SparseOperator {
        let a = self.annihilator();
        match m {
            FieldMonomial::Identity => SparseOperator::identity(self.fock.dim()),
            FieldMonomial::Annihilate => a,
            FieldMonomial::Create => a.adjoint(),
            FieldMonomial::Number => a.adjoint().mul(&a),
            FieldMonomial::AntiNumber => a.mul(&a.adjoint()),
        }
    }

    /// Splits a joint operator into `F ⊗ σ_ij` blocks and names each field
    /// block when it is a multiple of a known monomial. Blocks that match
    /// nothing get `field: None` and carry their largest entry as coefficient.
    pub fn decompose(&self, op: &SparseOperator) -> Vec<Component> {
        let fd = self.fock.dim();
        type Block = ((usize, usize), Vec<(usize, usize, C64)>);
        let mut blocks: Vec<Block> = Vec::new();
        for &(r, c, v) in op.entries() {
            let key = (r / fd, c / fd);
            let cell = (r % fd, c % fd, v);
            match blocks.iter_mut().find(|(k, _)| *k == key) {
                Some((_, b)) => b.push(cell),
                None => blocks.push((key, vec![cell])),
            }
        }
        blocks.sort_by_key(|(k, _)| *k);
        let monomials = [
            FieldMonomial::Identity,
            FieldMonomial::Annihilate,
            FieldMonomial::Create,
            FieldMonomial::Number,
            FieldMonomial::AntiNumber,
        ];
        blocks
            .into_iter()
            .map(|((i, j), cells)| {
                let block = SparseOperator::canonical(fd, cells);
                let scale = block.max_abs().max(f64::MIN_POSITIVE);
                let hit = monomials.iter().find_map(|&m| {
                    let f = self.field_operator(m);
                    // Coefficient from the first stored entry of the monomial
                    // that the block populates.
                    let (r, c, fv) = *f.entries().iter().find(|e| block.get(e.0, e.1) != ZERO)?;
                    let coeff = block.get(r, c) / fv;
                    (block.distance(&f.scale(coeff)) <= 1e-12 * scale).then_some((m, coeff))
                });
                match hit {
                    Some((m, coeff)) => Component {
                        row_level: i,
                        col_level: j,
                        field: Some(m),
                        coefficient: coeff,
                    },
                    None => Component {
                        row_level: i,
                        col_level: j,
                        field: None,
                        coefficient: block
                            .entries()
                            .iter()
                            .map(|e| e.2)
                            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
                            .unwrap_or(ZERO),
                    },
                }
            })
            .collect()
    }

    pub fn basis_label(&self, index: usize) -> String {
        let (l, n) = self.split_index(index);
        format!("|{},{}⟩", self.atom.label(l), n)
    }
}

impl fmt::Display for SparseOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "SparseOperator(dim = {}, nnz = {})",
            self.dim,
            self.nnz()
        )?;
        for &(r, c, v) in &self.entries {
            writeln!(f, "  ({r}, {c}) = {v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn sigma_gg_is_ground_projector() {
        let atom = AtomSpace::new(3).unwrap();
        let p = sigma(&atom, 0, 0).unwrap();
        assert_eq!(p.trace(), ONE);
        assert_eq!(p.entries(), &[(0, 0, ONE)]);
    }

    #[test]
    fn sigma_products_and_adjoints_exhaustive() {
        for n in 2..=5 {
            let atom = AtomSpace::new(n).unwrap();
            for i in 0..n {
                for j in 0..n {
                    let s = sigma(&atom, i, j).unwrap();
                    assert_eq!(s.adjoint(), sigma(&atom, j, i).unwrap());
                    for k in 0..n {
                        for l in 0..n {
                            let p = s.mul(&sigma(&atom, k, l).unwrap());
                            if j == k {
                                assert_eq!(p, sigma(&atom, i, l).unwrap());
                            } else {
                                assert!(p.is_zero());
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn sigma_rejects_bad_index() {
        let atom = AtomSpace::new(3).unwrap();
        assert!(matches!(sigma(&atom, 3, 0), Err(Error::Validation(_))));
    }

    #[test]
    fn atom_space_invariants() {
        assert!(AtomSpace::new(1).is_err());
        assert!(AtomSpace::with_labels(vec!["g".into(), "g".into()]).is_err());
        assert_eq!(AtomSpace::new(3).unwrap().labels(), &["g", "1", "2"]);
        assert!(FockSpace::new(0).is_err());
    }

    #[test]
    fn annihilator_cutoff_one() {
        let a = annihilator(&FockSpace::new(1).unwrap());
        assert_eq!(a.to_dense(), vec![ZERO, ONE, ZERO, ZERO]);
    }

    #[test]
    fn number_operator_is_diagonal() {
        let fock = FockSpace::new(5).unwrap();
        let a = annihilator(&fock);
        let n = a.adjoint().mul(&a);
        for k in 0..=5 {
            assert!((n.get(k, k) - c(k as f64)).norm() < 1e-14);
        }
        assert_eq!(n.nnz(), 5);
    }

    #[test]
    fn commutator_defect_only_at_cutoff() {
        let fock = FockSpace::new(4).unwrap();
        let a = annihilator(&fock);
        let comm = a.commutator(&a.adjoint());
        for k in 0..4 {
            assert!((comm.get(k, k) - ONE).norm() < 1e-13, "n = {k}");
        }
        // [a, a†]|4⟩ = (0 − 4)|4⟩ under the hard truncation.
        assert!((comm.get(4, 4) - c(-4.0)).norm() < 1e-13);
    }

    #[test]
    fn tensor_identities() {
        let i6 = SparseOperator::identity(2).tensor(&SparseOperator::identity(3));
        assert_eq!(i6, SparseOperator::identity(6));

        let js = JointSpace::new(3, 2).unwrap();
        let a = js.annihilator();
        let s10 = sigma(&js.atom, 1, 0).unwrap();
        let s01 = sigma(&js.atom, 0, 1).unwrap();
        let lhs = s10.tensor(&a).adjoint();
        let rhs = s01.tensor(&a.adjoint());
        assert_eq!(lhs, rhs);
        assert_eq!(s10.tensor(&a).nnz(), s10.nnz() * a.nnz());
    }

    #[test]
    fn apply_basics() {
        let atom = AtomSpace::new(3).unwrap();
        let v = vec![c(1.0), C64::new(0.5, -2.0), c(3.0)];
        assert_eq!(SparseOperator::identity(3).apply(&v).unwrap(), v);
        let e1 = sigma(&atom, 1, 0)
            .unwrap()
            .apply(&[ONE, ZERO, ZERO])
            .unwrap();
        assert_eq!(e1, vec![ZERO, ONE, ZERO]);
        assert!(SparseOperator::identity(3).apply(&[ONE]).is_err());
    }

    #[test]
    fn canonical_form_drops_zeros_and_merges() {
        let op = SparseOperator::from_triplets(
            2,
            vec![(1, 0, ONE), (0, 1, c(2.0)), (1, 0, -ONE), (0, 1, ONE)],
        )
        .unwrap();
        assert_eq!(op.entries(), &[(0, 1, c(3.0))]);
        assert!(SparseOperator::from_triplets(2, vec![(2, 0, ONE)]).is_err());
    }

    #[test]
    fn decompose_recognizes_monomials() {
        let js = JointSpace::new(3, 3).unwrap();
        let op = js
            .sigma_with(2, 0, FieldMonomial::Create)
            .unwrap()
            .scale(C64::new(-0.5, 0.25))
            .add(&js.sigma_with(1, 1, FieldMonomial::AntiNumber).unwrap());
        let comps = js.decompose(&op);
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[0].row_level, 1);
        assert_eq!(comps[0].field, Some(FieldMonomial::AntiNumber));
        assert!((comps[0].coefficient - ONE).norm() < 1e-14);
        assert_eq!(comps[1].field, Some(FieldMonomial::Create));
        assert!((comps[1].coefficient - C64::new(-0.5, 0.25)).norm() < 1e-14);
        assert_eq!(comps[1].label(), "a†σ_{2,g}");
    }
}
