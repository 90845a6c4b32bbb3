//! Finitely supported coordinate vectors over the ambient basis `(e_n)`.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::scalar::{FieldSpec, Scalar};

/// A vector of `V = ⊕_{n∈ℕ} F`: a finite map from basis indices to nonzero
/// coefficients. Zero coefficients are never stored, so equality is exact
/// map equality.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FinVector {
    field: FieldSpec,
    entries: BTreeMap<usize, Scalar>,
}

impl FinVector {
    pub fn zero(field: FieldSpec) -> Self {
        FinVector {
            field,
            entries: BTreeMap::new(),
        }
    }

    /// The basis vector `e_n`.
    pub fn basis(field: FieldSpec, n: usize) -> Self {
        let mut v = FinVector::zero(field);
        v.set(n, field.one());
        v
    }

    pub fn from_entries<I>(field: FieldSpec, entries: I) -> Self
    where
        I: IntoIterator<Item = (usize, Scalar)>,
    {
        let mut v = FinVector::zero(field);
        for (i, c) in entries {
            let cur = v.coeff(i);
            v.set(i, &cur + &c);
        }
        v
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of nonzero coefficients.
    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    /// Coefficient at index `i` (zero when absent).
    pub fn coeff(&self, i: usize) -> Scalar {
        self.entries
            .get(&i)
            .cloned()
            .unwrap_or_else(|| self.field.zero())
    }

    /// Sets a coefficient, dropping explicit zeros.
    pub fn set(&mut self, i: usize, c: Scalar) {
        if c.is_zero() {
            self.entries.remove(&i);
        } else {
            assert!(c.field() == self.field, "field mismatch");
            self.entries.insert(i, c);
        }
    }

    /// Smallest support index; the pivot position for elimination.
    pub fn leading_index(&self) -> Option<usize> {
        self.entries.keys().next().copied()
    }

    /// Largest support index.
    pub fn max_index(&self) -> Option<usize> {
        self.entries.keys().next_back().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Scalar)> {
        self.entries.iter().map(|(i, c)| (*i, c))
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.keys().copied()
    }

    pub fn scale(&self, c: &Scalar) -> FinVector {
        if c.is_zero() {
            return FinVector::zero(self.field);
        }
        let mut out = self.clone();
        for v in out.entries.values_mut() {
            *v = &*v * c;
        }
        out
    }

    /// `self += c * other`, the elimination workhorse.
    pub fn add_scaled(&mut self, c: &Scalar, other: &FinVector) {
        assert!(self.field == other.field, "field mismatch");
        if c.is_zero() {
            return;
        }
        for (i, v) in other.entries.iter() {
            let add = c * v; // nonzero: product of nonzeros in a field
            match self.entries.entry(*i) {
                alloc::collections::btree_map::Entry::Occupied(mut slot) => {
                    let sum = slot.get() + &add;
                    if sum.is_zero() {
                        slot.remove();
                    } else {
                        *slot.get_mut() = sum;
                    }
                }
                alloc::collections::btree_map::Entry::Vacant(slot) => {
                    slot.insert(add);
                }
            }
        }
    }

    /// Re-indexes the support through a strictly monotone map.
    pub fn map_indices(&self, f: impl Fn(usize) -> usize) -> FinVector {
        let mut out = FinVector::zero(self.field);
        for (i, c) in self.iter() {
            out.set(f(i), c.clone());
        }
        out
    }

    /// Text form used in reports: `"3*e0 + 1/2*e4"`, `"0"` when empty.
    pub fn render(&self) -> String {
        use core::fmt::Write;
        if self.is_zero() {
            return String::from("0");
        }
        let mut out = String::new();
        for (k, (i, c)) in self.iter().enumerate() {
            if k > 0 {
                out.push_str(" + ");
            }
            let _ = write!(out, "{c}*e{i}");
        }
        out
    }
}

impl fmt::Display for FinVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl core::ops::Add for &FinVector {
    type Output = FinVector;
    fn add(self, rhs: &FinVector) -> FinVector {
        let mut out = self.clone();
        out.add_scaled(&self.field.one(), rhs);
        out
    }
}

impl core::ops::Sub for &FinVector {
    type Output = FinVector;
    fn sub(self, rhs: &FinVector) -> FinVector {
        let mut out = self.clone();
        out.add_scaled(&self.field.from_i64(-1), rhs);
        out
    }
}

impl core::ops::Neg for &FinVector {
    type Output = FinVector;
    fn neg(self) -> FinVector {
        self.scale(&self.field.from_i64(-1))
    }
}

/// Dot coefficient extraction used by tests: the dense window of a vector.
pub fn dense_window(v: &FinVector, len: usize) -> Vec<Scalar> {
    (0..len).map(|i| v.coeff(i)).collect()
}
