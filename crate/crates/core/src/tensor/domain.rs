use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest attribute set whose subsets we are willing to enumerate.
pub const MAX_ENUMERATED_ATTRS: usize = 25;

/// Ordered list of categorical attributes and their cardinalities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DomainRepr", into = "DomainRepr")]
pub struct Domain {
    attrs: Vec<String>,
    sizes: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct DomainRepr {
    attrs: Vec<String>,
    sizes: Vec<usize>,
}

impl TryFrom<DomainRepr> for Domain {
    type Error = Error;

    fn try_from(r: DomainRepr) -> Result<Self> {
        Domain::new(r.attrs, r.sizes)
    }
}

impl From<Domain> for DomainRepr {
    fn from(d: Domain) -> Self {
        DomainRepr {
            attrs: d.attrs,
            sizes: d.sizes,
        }
    }
}

impl Domain {
    pub fn new<S: Into<String>>(attrs: Vec<S>, sizes: Vec<usize>) -> Result<Self> {
        let attrs: Vec<String> = attrs.into_iter().map(Into::into).collect();
        if attrs.len() != sizes.len() {
            return Err(Error::InvalidDomain(format!(
                "{} attribute names but {} sizes",
                attrs.len(),
                sizes.len()
            )));
        }
        for (name, &n) in attrs.iter().zip(&sizes) {
            if n < 2 {
                return Err(Error::InvalidDomain(format!(
                    "attribute {name} has cardinality {n} < 2"
                )));
            }
        }
        for (i, a) in attrs.iter().enumerate() {
            if attrs[..i].contains(a) {
                return Err(Error::InvalidDomain(format!("duplicate attribute {a}")));
            }
        }
        // The full data universe is never materialized, but its size must at
        // least be a finite number.
        let total: f64 = sizes.iter().map(|&n| n as f64).product();
        if !total.is_finite() {
            return Err(Error::InvalidDomain("total domain size overflows".into()));
        }
        Ok(Domain { attrs, sizes })
    }

    /// Domain with generated attribute names `a0, a1, ...`.
    pub fn from_sizes(sizes: Vec<usize>) -> Result<Self> {
        let attrs = (0..sizes.len()).map(|i| format!("a{i}")).collect();
        Domain::new(attrs, sizes)
    }

    pub fn len(&self) -> usize {
        self.attrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attrs.is_empty()
    }

    pub fn attrs(&self) -> &[String] {
        &self.attrs
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn size(&self, attr: usize) -> usize {
        self.sizes[attr]
    }

    pub fn name(&self, attr: usize) -> &str {
        &self.attrs[attr]
    }

    /// Number of cells in the full data universe, as a float.
    pub fn total_size(&self) -> f64 {
        self.sizes.iter().map(|&n| n as f64).product()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.attrs
            .iter()
            .position(|a| a == name)
            .ok_or_else(|| Error::UnknownAttribute(name.to_string()))
    }

    /// Resolve attribute names into an [`AttrSet`].
    pub fn attr_set<S: AsRef<str>>(&self, names: &[S]) -> Result<AttrSet> {
        let idx = names
            .iter()
            .map(|n| self.index_of(n.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Ok(AttrSet::new(idx))
    }

    pub fn names(&self, set: &AttrSet) -> Vec<String> {
        set.iter().map(|i| self.attrs[i].clone()).collect()
    }

    pub fn check(&self, set: &AttrSet) -> Result<()> {
        match set.as_slice().last() {
            Some(&i) if i >= self.len() => Err(Error::AttributeOutOfRange {
                index: i,
                len: self.len(),
            }),
            _ => Ok(()),
        }
    }

    /// Shape of the marginal over `set`.
    pub fn marginal_shape(&self, set: &AttrSet) -> Vec<usize> {
        set.iter().map(|i| self.sizes[i]).collect()
    }

    /// Shape of the residual over `set`.
    pub fn residual_shape(&self, set: &AttrSet) -> Vec<usize> {
        set.iter().map(|i| self.sizes[i] - 1).collect()
    }

    /// `n_γ`, the number of cells of the marginal over `set`.
    pub fn cells(&self, set: &AttrSet) -> Result<usize> {
        self.check(set)?;
        set.iter().try_fold(1usize, |acc, i| {
            acc.checked_mul(self.sizes[i])
                .ok_or_else(|| Error::InvalidDomain(format!("marginal over {set} too large")))
        })
    }
}

/// Strictly ascending set of attribute indices.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(from = "Vec<usize>", into = "Vec<usize>")]
pub struct AttrSet(Vec<usize>);

impl From<Vec<usize>> for AttrSet {
    fn from(v: Vec<usize>) -> Self {
        AttrSet::new(v)
    }
}

impl From<AttrSet> for Vec<usize> {
    fn from(s: AttrSet) -> Self {
        s.0
    }
}

impl fmt::Debug for AttrSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for AttrSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{i}")?;
        }
        f.write_str("}")
    }
}

impl AttrSet {
    pub fn new(mut attrs: Vec<usize>) -> Self {
        attrs.sort_unstable();
        attrs.dedup();
        AttrSet(attrs)
    }

    pub fn empty() -> Self {
        AttrSet(Vec::new())
    }

    pub fn singleton(attr: usize) -> Self {
        AttrSet(vec![attr])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn contains(&self, attr: usize) -> bool {
        self.0.binary_search(&attr).is_ok()
    }

    pub fn is_subset(&self, other: &AttrSet) -> bool {
        // both sorted: merge walk
        let mut it = other.0.iter();
        'outer: for a in &self.0 {
            for b in it.by_ref() {
                if b == a {
                    continue 'outer;
                }
                if b > a {
                    return false;
                }
            }
            return false;
        }
        true
    }

    pub fn intersection_len(&self, other: &AttrSet) -> usize {
        self.0.iter().filter(|a| other.contains(**a)).count()
    }

    pub fn difference(&self, other: &AttrSet) -> AttrSet {
        AttrSet(self.0.iter().copied().filter(|a| !other.contains(*a)).collect())
    }

    pub fn union(&self, other: &AttrSet) -> AttrSet {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        AttrSet::new(v)
    }

    /// Position of each attribute of `self` within `sup`, if `self ⊆ sup`.
    pub fn positions_in(&self, sup: &AttrSet) -> Result<Vec<usize>> {
        self.0
            .iter()
            .map(|a| sup.0.binary_search(a).ok())
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::NotSubset {
                sub: self.0.clone(),
                sup: sup.0.clone(),
            })
    }

    /// All `2^|self|` subsets, ordered by bitmask over the sorted attributes.
    pub fn subsets(&self) -> Result<Vec<AttrSet>> {
        let k = self.len();
        if k > MAX_ENUMERATED_ATTRS {
            return Err(Error::TooManyAttributes(k));
        }
        Ok((0u64..1 << k)
            .map(|mask| AttrSet((0..k).filter(|b| mask >> b & 1 == 1).map(|b| self.0[b]).collect()))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_rejects_bad_input() {
        assert!(Domain::new(vec!["a"], vec![1]).is_err());
        assert!(Domain::new(vec!["a", "a"], vec![2, 3]).is_err());
        assert!(Domain::new(vec!["a"], vec![2, 3]).is_err());
        assert!(Domain::from_sizes(vec![usize::MAX; 40]).is_err());
        let d = Domain::new(vec!["age", "educ"], vec![4, 3]).unwrap();
        assert_eq!(d.total_size(), 12.0);
        assert_eq!(d.attr_set(&["educ", "age"]).unwrap(), AttrSet::new(vec![0, 1]));
        assert!(matches!(d.attr_set(&["zip"]), Err(Error::UnknownAttribute(_))));
    }

    #[test]
    fn attrset_relations() {
        let g = AttrSet::new(vec![3, 1, 5, 1]);
        assert_eq!(g.as_slice(), &[1, 3, 5]);
        assert!(AttrSet::new(vec![1, 5]).is_subset(&g));
        assert!(AttrSet::empty().is_subset(&g));
        assert!(!AttrSet::new(vec![2]).is_subset(&g));
        assert!(!AttrSet::new(vec![5, 6]).is_subset(&g));
        assert_eq!(AttrSet::new(vec![1, 5]).positions_in(&g).unwrap(), vec![0, 2]);
        assert_eq!(g.difference(&AttrSet::singleton(3)).as_slice(), &[1, 5]);
        let subs = g.subsets().unwrap();
        assert_eq!(subs.len(), 8);
        assert!(subs.iter().all(|s| s.is_subset(&g)));
        assert_eq!(g.intersection_len(&AttrSet::new(vec![0, 1, 5])), 2);
    }

    #[test]
    fn subset_enumeration_is_capped() {
        let big = AttrSet::new((0..26).collect());
        assert!(matches!(big.subsets(), Err(Error::TooManyAttributes(26))));
    }
}
