//! Composition of a base classifier with group feature extractors.
//!
//! A group stage maps an input to the set of labels consistent with its
//! feature value. Stages are intersected, and the augmented classifier
//! intersects the base classifier's top-1 label with the result; an empty
//! set is surfaced as a flag and never resolved automatically.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::groupfeat::{ColorExtractor, ColorName, GroupLabelMap};
use crate::pipeline::Classify;
use crate::{Error, Image, Result, Scalar};

/// A group feature extractor composed with its label map.
pub trait LabelGroup<T: Scalar> {
    fn name(&self) -> &str;
    fn labels(&self, x: &Image<T>) -> Result<BTreeSet<usize>>;
}

/// Dominant color followed by a color → labels map.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorGroup {
    pub extractor: ColorExtractor,
    pub map: GroupLabelMap,
}

impl ColorGroup {
    pub fn new(extractor: ColorExtractor, map: GroupLabelMap) -> Self {
        Self { extractor, map }
    }

    pub fn color<T: Scalar>(&self, x: &Image<T>) -> Result<ColorName> {
        self.extractor.extract(x)
    }
}

impl<T: Scalar> LabelGroup<T> for ColorGroup {
    fn name(&self) -> &str {
        "color"
    }

    fn labels(&self, x: &Image<T>) -> Result<BTreeSet<usize>> {
        Ok(self.map.group_labels(self.extractor.extract(x)?))
    }
}

/// A stage backed by a closure.
pub struct FnGroup<F> {
    name: String,
    f: F,
}

impl<F> FnGroup<F> {
    pub fn new(name: impl Into<String>, f: F) -> Self {
        Self { name: name.into(), f }
    }
}

impl<T: Scalar, F: Fn(&Image<T>) -> Result<BTreeSet<usize>>> LabelGroup<T> for FnGroup<F> {
    fn name(&self) -> &str {
        &self.name
    }

    fn labels(&self, x: &Image<T>) -> Result<BTreeSet<usize>> {
        (self.f)(x)
    }
}

fn stage_labels<T: Scalar>(index: usize, g: &dyn LabelGroup<T>, x: &Image<T>) -> Result<BTreeSet<usize>> {
    g.labels(x).map_err(|e| Error::Extractor {
        index,
        name: g.name().to_string(),
        source: Box::new(e),
    })
}

/// `⋂ G_i(T_i(x))` over at least one stage.
pub fn intersect_groups<T: Scalar>(x: &Image<T>, stages: &[&dyn LabelGroup<T>]) -> Result<BTreeSet<usize>> {
    Ok(intersect_detailed(x, stages)?.0)
}

fn intersect_detailed<T: Scalar>(
    x: &Image<T>,
    stages: &[&dyn LabelGroup<T>],
) -> Result<(BTreeSet<usize>, Vec<BTreeSet<usize>>)> {
    if stages.is_empty() {
        return Err(Error::domain("at least one group stage is required"));
    }
    let sets = stages
        .iter()
        .enumerate()
        .map(|(i, g)| stage_labels(i, *g, x))
        .collect::<Result<Vec<_>>>()?;
    let mut acc = sets[0].clone();
    for s in &sets[1..] {
        acc.retain(|l| s.contains(l));
    }
    Ok((acc, sets))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AugmentedVerdict {
    /// `{base_label} ∩ ⋂ group_sets`.
    pub label_set: BTreeSet<usize>,
    /// `label_set` is empty: the base classifier and the groups disagree.
    pub flagged: bool,
    pub base_label: usize,
    pub group_sets: Vec<BTreeSet<usize>>,
}

pub struct AugmentedClassifier<'a, T> {
    base: &'a dyn Classify<T>,
    stages: Vec<&'a dyn LabelGroup<T>>,
}

impl<'a, T: Scalar> AugmentedClassifier<'a, T> {
    pub fn new(base: &'a dyn Classify<T>, stages: Vec<&'a dyn LabelGroup<T>>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::domain("at least one group stage is required"));
        }
        Ok(Self { base, stages })
    }

    pub fn stages(&self) -> &[&'a dyn LabelGroup<T>] {
        &self.stages
    }

    pub fn classify(&self, x: &Image<T>) -> Result<AugmentedVerdict> {
        let base_label = self.base.classify(x)?;
        let (groups, group_sets) = intersect_detailed(x, &self.stages)?;
        let label_set: BTreeSet<usize> = groups.into_iter().filter(|&l| l == base_label).collect();
        Ok(AugmentedVerdict {
            flagged: label_set.is_empty(),
            label_set,
            base_label,
            group_sets,
        })
    }
}

/// Fraction of adversarial examples whose extracted color is still the
/// original one. Extraction failures count as not corrected.
pub fn correction_rate<T: Scalar>(extractor: &ColorExtractor, examples: &[(Image<T>, ColorName)]) -> Result<f64> {
    if examples.is_empty() {
        return Err(Error::domain("correction rate of an empty set"));
    }
    let caught = examples
        .iter()
        .filter(|(x, c)| extractor.extract(x).ok() == Some(*c))
        .count();
    Ok(caught as f64 / examples.len() as f64)
}
