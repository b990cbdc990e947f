use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// Largest basis the dense backend will enumerate.
pub const MAX_DENSE_DIM: usize = 20_000;

/// Upper bound on the number of raw occupation tuples scanned while
/// enumerating a restricted basis.
const MAX_ENUMERATION: usize = 50_000_000;

/// A labelled multi-mode Fock space truncated at a per-mode photon cutoff.
///
/// Basis states are occupation tuples ordered lexicographically over the
/// mode label order, so the last mode varies fastest. For an unrestricted
/// space the index of `(n_0, .., n_{k-1})` is the mixed-radix number with
/// digits `n_i` and radices `cutoff_i + 1`.
///
/// A space may additionally carry *exclusive groups*: sets of modes of
/// which at most one may be occupied. The basis is then the subset of
/// tuples obeying every group, in the same lexicographic order. The
/// conditional output of the entangling device lives in such a sector
/// (one of A1/A2 and one of B1/B2 excited), which keeps dense work small.
#[derive(Clone)]
pub struct FockSpace {
    labels: Vec<String>,
    cutoffs: Vec<usize>,
    exclusive: Vec<Vec<usize>>,
    basis: Vec<Vec<usize>>,
    lookup: HashMap<Vec<usize>, usize>,
}

impl PartialEq for FockSpace {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels
            && self.cutoffs == other.cutoffs
            && self.exclusive == other.exclusive
    }
}

impl fmt::Debug for FockSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FockSpace")
            .field("labels", &self.labels)
            .field("cutoffs", &self.cutoffs)
            .field("exclusive", &self.exclusive)
            .field("dim", &self.dim())
            .finish()
    }
}

impl FockSpace {
    pub fn new<S: AsRef<str>>(labels: &[S], cutoffs: &[usize]) -> Result<Self> {
        if labels.len() != cutoffs.len() {
            return Err(Error::DimensionMismatch {
                expected: labels.len(),
                actual: cutoffs.len(),
            });
        }
        if labels.is_empty() {
            return Err(Error::InvalidParameter("a Fock space needs at least one mode".into()));
        }
        let labels: Vec<String> = labels.iter().map(|l| l.as_ref().to_owned()).collect();
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::DuplicateMode(l.clone()));
            }
        }
        Self::build(labels, cutoffs.to_vec(), Vec::new())
    }

    pub fn single(label: &str, cutoff: usize) -> Result<Self> {
        Self::new(&[label], &[cutoff])
    }

    /// Restricts the basis so that at most one of `group` is occupied.
    pub fn with_exclusive_group<S: AsRef<str>>(&self, group: &[S]) -> Result<Self> {
        let mut positions = Vec::with_capacity(group.len());
        for g in group {
            let p = self.position(g.as_ref())?;
            if positions.contains(&p) {
                return Err(Error::DuplicateMode(g.as_ref().to_owned()));
            }
            positions.push(p);
        }
        positions.sort_unstable();
        let mut exclusive = self.exclusive.clone();
        exclusive.push(positions);
        Self::build(self.labels.clone(), self.cutoffs.clone(), exclusive)
    }

    fn build(labels: Vec<String>, cutoffs: Vec<usize>, exclusive: Vec<Vec<usize>>) -> Result<Self> {
        let raw = cutoffs
            .iter()
            .try_fold(1usize, |acc, &c| acc.checked_mul(c.checked_add(1)?))
            .ok_or(Error::SpaceTooLarge(usize::MAX))?;
        if exclusive.is_empty() && raw > MAX_DENSE_DIM {
            return Err(Error::SpaceTooLarge(raw));
        }
        if raw > MAX_ENUMERATION {
            return Err(Error::SpaceTooLarge(raw));
        }

        let mut basis = Vec::new();
        let mut occ = vec![0usize; cutoffs.len()];
        for _ in 0..raw {
            let ok = exclusive
                .iter()
                .all(|g| g.iter().filter(|&&p| occ[p] > 0).count() <= 1);
            if ok {
                basis.push(occ.clone());
                if basis.len() > MAX_DENSE_DIM {
                    return Err(Error::SpaceTooLarge(basis.len()));
                }
            }
            // mixed-radix increment, last mode fastest
            for k in (0..occ.len()).rev() {
                if occ[k] < cutoffs[k] {
                    occ[k] += 1;
                    break;
                }
                occ[k] = 0;
            }
        }
        let lookup = basis.iter().enumerate().map(|(i, o)| (o.clone(), i)).collect();
        Ok(Self { labels, cutoffs, exclusive, basis, lookup })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn cutoffs(&self) -> &[usize] {
        &self.cutoffs
    }

    pub fn num_modes(&self) -> usize {
        self.labels.len()
    }

    pub fn is_restricted(&self) -> bool {
        !self.exclusive.is_empty()
    }

    pub fn exclusive_groups(&self) -> Vec<Vec<String>> {
        self.exclusive
            .iter()
            .map(|g| g.iter().map(|&p| self.labels[p].clone()).collect())
            .collect()
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownMode(label.to_owned()))
    }

    pub fn cutoff_of(&self, label: &str) -> Result<usize> {
        Ok(self.cutoffs[self.position(label)?])
    }

    /// Basis index of an occupation tuple, or `None` if the tuple is outside
    /// the (possibly restricted) truncated basis.
    pub fn index_of(&self, occupation: &[usize]) -> Option<usize> {
        self.lookup.get(occupation).copied()
    }

    pub fn occupation(&self, index: usize) -> &[usize] {
        &self.basis[index]
    }

    pub fn basis(&self) -> impl Iterator<Item = &[usize]> {
        self.basis.iter().map(Vec::as_slice)
    }

    /// Concatenates two spaces; the result's basis is the Kronecker order
    /// of the operands (left operand varies slowest).
    pub fn concat(&self, other: &FockSpace) -> Result<FockSpace> {
        if let Some(dup) = other.labels.iter().find(|l| self.labels.contains(l)) {
            return Err(Error::DuplicateMode(dup.clone()));
        }
        let mut labels = self.labels.clone();
        labels.extend(other.labels.iter().cloned());
        let mut cutoffs = self.cutoffs.clone();
        cutoffs.extend(other.cutoffs.iter().copied());
        let shift = self.labels.len();
        let mut exclusive = self.exclusive.clone();
        exclusive.extend(other.exclusive.iter().map(|g| g.iter().map(|p| p + shift).collect()));
        Self::build(labels, cutoffs, exclusive)
    }

    /// Space spanned by the modes at `positions`, in the order given.
    fn subspace(&self, positions: &[usize]) -> Result<FockSpace> {
        let labels: Vec<String> = positions.iter().map(|&p| self.labels[p].clone()).collect();
        let cutoffs: Vec<usize> = positions.iter().map(|&p| self.cutoffs[p]).collect();
        let exclusive = self
            .exclusive
            .iter()
            .filter(|g| positions.contains(&g[0]))
            .map(|g| {
                let mut mapped: Vec<usize> = g
                    .iter()
                    .map(|p| positions.iter().position(|q| q == p).expect("group checked"))
                    .collect();
                mapped.sort_unstable();
                mapped
            })
            .collect();
        Self::build(labels, cutoffs, exclusive)
    }

    pub(crate) fn positions_of<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(labels.len());
        for l in labels {
            let p = self.position(l.as_ref())?;
            if out.contains(&p) {
                return Err(Error::DuplicateMode(l.as_ref().to_owned()));
            }
            out.push(p);
        }
        Ok(out)
    }

    /// Splits the space into the modes at `positions` (in the given order)
    /// and the remaining modes (in original order).
    pub(crate) fn factor(&self, positions: &[usize]) -> Result<Factorization> {
        for g in &self.exclusive {
            let inside = g.iter().filter(|p| positions.contains(p)).count();
            if inside != 0 && inside != g.len() {
                return Err(Error::SplitsExclusiveGroup(
                    g.iter().map(|&p| self.labels[p].clone()).collect(),
                ));
            }
        }
        let rest_positions: Vec<usize> =
            (0..self.num_modes()).filter(|p| !positions.contains(p)).collect();
        let sub = self.subspace(positions)?;
        let rest = if rest_positions.is_empty() {
            None
        } else {
            Some(self.subspace(&rest_positions)?)
        };
        let rest_dim = rest.as_ref().map_or(1, FockSpace::dim);

        let mut sub_index = Vec::with_capacity(self.dim());
        let mut rest_index = Vec::with_capacity(self.dim());
        let mut table = vec![usize::MAX; sub.dim() * rest_dim];
        for (i, occ) in self.basis.iter().enumerate() {
            let s_occ: Vec<usize> = positions.iter().map(|&p| occ[p]).collect();
            let s = sub.index_of(&s_occ).expect("sub-occupation in sub-basis");
            let r = match &rest {
                Some(rest) => {
                    let r_occ: Vec<usize> = rest_positions.iter().map(|&p| occ[p]).collect();
                    rest.index_of(&r_occ).expect("rest-occupation in rest-basis")
                }
                None => 0,
            };
            sub_index.push(s);
            rest_index.push(r);
            table[r * sub.dim() + s] = i;
        }
        debug_assert!(table.iter().all(|&i| i != usize::MAX));
        Ok(Factorization { sub, rest, sub_index, rest_index, table })
    }
}

/// Index bookkeeping for a bipartition of a space.
pub(crate) struct Factorization {
    pub sub: FockSpace,
    pub rest: Option<FockSpace>,
    pub sub_index: Vec<usize>,
    pub rest_index: Vec<usize>,
    table: Vec<usize>,
}

impl Factorization {
    pub fn rest_dim(&self) -> usize {
        self.rest.as_ref().map_or(1, FockSpace::dim)
    }

    /// Full-space index of the pair (sub index, rest index).
    pub fn join(&self, sub: usize, rest: usize) -> usize {
        self.table[rest * self.sub.dim() + sub]
    }
}
