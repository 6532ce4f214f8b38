use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A partition of `0..n` into disjoint, non-empty classes.
///
/// Class ids are contiguous from 0 and assigned in order of each class's
/// smallest member, so two partitions describing the same sets compare equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Partition {
    class_of: Vec<usize>,
    classes: Vec<Vec<usize>>,
}

impl Partition {
    /// Groups indices carrying equal labels.
    pub fn from_labels<T: Eq + Hash>(labels: &[T]) -> Self {
        let mut ids: HashMap<&T, usize> = HashMap::new();
        let mut class_of = Vec::with_capacity(labels.len());
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for (i, l) in labels.iter().enumerate() {
            let next = ids.len();
            let c = *ids.entry(l).or_insert(next);
            if c == classes.len() {
                classes.push(Vec::new());
            }
            classes[c].push(i);
            class_of.push(c);
        }
        Partition { class_of, classes }
    }

    /// Validates that `classes` are disjoint, non-empty and cover `0..n`.
    pub fn from_classes(n: usize, classes: Vec<Vec<usize>>) -> Result<Self> {
        let mut labels = vec![usize::MAX; n];
        for (c, members) in classes.iter().enumerate() {
            if members.is_empty() {
                return Err(Error::Invalid(format!("class {c} is empty")));
            }
            for &i in members {
                if i >= n {
                    return Err(Error::Invalid(format!("class {c}: index {i} out of range (n = {n})")));
                }
                if labels[i] != usize::MAX {
                    return Err(Error::Invalid(format!("index {i} appears in more than one class")));
                }
                labels[i] = c;
            }
        }
        if let Some(i) = labels.iter().position(|&l| l == usize::MAX) {
            return Err(Error::Invalid(format!("index {i} is not covered by any class")));
        }
        Ok(Self::from_labels(&labels))
    }

    /// Every index in its own class.
    pub fn discrete(n: usize) -> Self {
        Partition {
            class_of: (0..n).collect(),
            classes: (0..n).map(|i| vec![i]).collect(),
        }
    }

    /// All indices in one class (no classes when `n == 0`).
    pub fn single(n: usize) -> Self {
        Self::from_labels(&vec![0u8; n])
    }

    pub fn len(&self) -> usize {
        self.class_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class_of.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn class_of(&self, i: usize) -> usize {
        self.class_of[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.class_of
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn members(&self, class: usize) -> &[usize] {
        &self.classes[class]
    }

    pub fn class_size(&self, class: usize) -> usize {
        self.classes[class].len()
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        self.classes.iter().map(Vec::len).collect()
    }

    /// Smallest member of `class`.
    pub fn representative(&self, class: usize) -> usize {
        self.classes[class][0]
    }

    pub fn is_discrete(&self) -> bool {
        self.classes.len() == self.class_of.len()
    }

    /// True if every class of `self` lies inside a class of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        self.len() == coarser.len()
            && self
                .classes
                .iter()
                .all(|c| c.iter().all(|&i| coarser.class_of(i) == coarser.class_of(c[0])))
    }

    /// Common refinement: `i ~ j` iff they share a class in both.
    pub fn meet(&self, other: &Partition) -> Result<Partition> {
        if self.len() != other.len() {
            return Err(Error::Dimension(format!("meet of partitions over {} and {}", self.len(), other.len())));
        }
        let pairs: Vec<(usize, usize)> = (0..self.len()).map(|i| (self.class_of(i), other.class_of(i))).collect();
        Ok(Self::from_labels(&pairs))
    }

    /// True if `x` is constant on every class within `tol`.
    pub fn respects(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.len()
            && self
                .classes
                .iter()
                .all(|c| c.iter().all(|&i| (x[i] - x[c[0]]).abs() <= tol))
    }
}

impl Serialize for Partition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.classes.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Partition {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let classes = Vec::<Vec<usize>>::deserialize(d)?;
        let n = classes.iter().map(Vec::len).sum();
        Partition::from_classes(n, classes).map_err(serde::de::Error::custom)
    }
}
