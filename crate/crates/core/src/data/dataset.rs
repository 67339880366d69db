//! In-memory labelled datasets, stratified splits and minibatches.

use crate::data::manifest::positive_class_of;
use crate::data::pgm::Image;
use crate::data::transform::{normalize, NormStats};
use crate::error::{Error, Result};
use crate::model::InputShape;
use crate::nn::one_hot;
use crate::rng::Rng;
use crate::tensor::{Element, Tensor};

/// Raw images with labels, before normalization.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledImages {
    pub images: Vec<Image>,
    pub labels: Vec<usize>,
    pub ids: Vec<String>,
    pub classes: Vec<String>,
}

impl LabeledImages {
    pub fn new(images: Vec<Image>, labels: Vec<usize>, ids: Vec<String>, classes: Vec<String>) -> Result<Self> {
        if images.len() != labels.len() || images.len() != ids.len() {
            return Err(Error::Shape(format!(
                "{} images, {} labels, {} ids",
                images.len(),
                labels.len(),
                ids.len()
            )));
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= classes.len()) {
            return Err(Error::Argument(format!("label {l} outside {} classes", classes.len())));
        }
        if let Some(first) = images.first() {
            if images
                .iter()
                .any(|i| i.width() != first.width() || i.height() != first.height())
            {
                return Err(Error::Shape("images differ in size".into()));
            }
        }
        Ok(Self {
            images,
            labels,
            ids,
            classes,
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn positive_class(&self) -> usize {
        positive_class_of(&self.classes)
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            images: indices.iter().map(|&i| self.images[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
            classes: self.classes.clone(),
        }
    }

    /// Stratified train/val/test parts.
    pub fn split(&self, fractions: [f64; 3], rng: &mut Rng) -> Result<[LabeledImages; 3]> {
        let parts = split_indices(&self.labels, self.classes.len(), fractions, rng)?;
        Ok(parts.map(|p| self.subset(&p)))
    }

    pub fn norm_stats(&self) -> Result<NormStats> {
        NormStats::from_images(&self.images)
    }
}

/// Stratified split of sample indices. Within each class the indices are
/// shuffled, then cut at `round(n·f₀)` and `round(n·(f₀+f₁))`. Each part is
/// returned in ascending index order.
pub fn split_indices(labels: &[usize], classes: usize, fractions: [f64; 3], rng: &mut Rng) -> Result<[Vec<usize>; 3]> {
    if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "split fractions {fractions:?} must be in [0,1] and sum to 1"
        )));
    }
    let mut parts: [Vec<usize>; 3] = Default::default();
    for c in 0..classes {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        rng.shuffle(&mut idx);
        let n = idx.len() as f64;
        let a = (n * fractions[0]).round() as usize;
        let b = ((n * (fractions[0] + fractions[1])).round() as usize).max(a);
        parts[0].extend_from_slice(&idx[..a]);
        parts[1].extend_from_slice(&idx[a..b]);
        parts[2].extend_from_slice(&idx[b..]);
    }
    for (k, (part, f)) in parts.iter_mut().zip(fractions).enumerate() {
        part.sort_unstable();
        if part.is_empty() && f > 0.0 {
            let name = ["train", "val", "test"][k];
            return Err(Error::Config(format!("{name} split is empty (fraction {f})")));
        }
    }
    Ok(parts)
}

/// Normalized samples ready for batching.
#[derive(Clone, Debug)]
pub struct Dataset<T: Element = f32> {
    input: InputShape,
    x: Vec<T>,
    labels: Vec<usize>,
    ids: Vec<String>,
    classes: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct Batch<T: Element = f32> {
    pub x: Tensor<T>,
    pub y_onehot: Tensor<T>,
    pub labels: Vec<usize>,
    pub ids: Vec<String>,
}

impl<T: Element> Dataset<T> {
    pub fn from_images(images: &LabeledImages, stats: &NormStats) -> Result<Self> {
        let first = images
            .images
            .first()
            .ok_or_else(|| Error::Config("dataset is empty".into()))?;
        let input = InputShape::new(1, first.height(), first.width());
        let mut x = Vec::with_capacity(images.len() * input.numel());
        for img in &images.images {
            x.extend_from_slice(normalize::<T>(img, stats).data());
        }
        Ok(Self {
            input,
            x,
            labels: images.labels.clone(),
            ids: images.ids.clone(),
            classes: images.classes.clone(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn input(&self) -> InputShape {
        self.input
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn positive_class(&self) -> usize {
        positive_class_of(&self.classes)
    }

    /// Gathers samples `indices` into one batch.
    pub fn gather(&self, indices: &[usize]) -> Result<Batch<T>> {
        if indices.is_empty() {
            return Err(Error::Argument("empty batch".into()));
        }
        let per = self.input.numel();
        let mut x = Vec::with_capacity(indices.len() * per);
        for &i in indices {
            x.extend_from_slice(&self.x[i * per..(i + 1) * per]);
        }
        let labels: Vec<usize> = indices.iter().map(|&i| self.labels[i]).collect();
        Ok(Batch {
            x: Tensor::from_data(&self.input.batch_shape(indices.len()), x)?,
            y_onehot: one_hot(&labels, self.classes.len())?,
            labels,
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
        })
    }

    /// Sample order for one pass: a seeded permutation when `rng` is given,
    /// natural order otherwise.
    pub fn order(&self, rng: Option<&mut Rng>) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        if let Some(rng) = rng {
            rng.shuffle(&mut order);
        }
        order
    }

    /// Minibatches over one pass; the last batch may be short.
    pub fn batches(&self, batch_size: usize, rng: Option<&mut Rng>) -> Result<Batches<'_, T>> {
        batches(self, batch_size, rng)
    }
}

pub struct Batches<'a, T: Element> {
    data: &'a Dataset<T>,
    order: Vec<usize>,
    batch_size: usize,
    pos: usize,
}

impl<T: Element> Iterator for Batches<'_, T> {
    type Item = Batch<T>;

    fn next(&mut self) -> Option<Batch<T>> {
        if self.pos >= self.order.len() {
            return None;
        }
        let end = (self.pos + self.batch_size).min(self.order.len());
        let batch = self.data.gather(&self.order[self.pos..end]).expect("indices in range");
        self.pos = end;
        Some(batch)
    }
}

pub fn batches<'a, T: Element>(
    data: &'a Dataset<T>,
    batch_size: usize,
    rng: Option<&mut Rng>,
) -> Result<Batches<'a, T>> {
    if batch_size == 0 {
        return Err(Error::Config("batch size must be at least 1".into()));
    }
    Ok(Batches {
        data,
        order: data.order(rng),
        batch_size,
        pos: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(n: usize) -> LabeledImages {
        let images = (0..n).map(|i| Image::new(2, 2, vec![i as u8; 4]).unwrap()).collect();
        let labels = (0..n).map(|i| usize::from(i % 3 == 0)).collect();
        let ids = (0..n).map(|i| format!("s{i}")).collect();
        LabeledImages::new(images, labels, ids, vec!["a".into(), "b".into()]).unwrap()
    }

    #[test]
    fn all_train() {
        let [tr, va, te] = split_indices(&[0, 1, 0, 1], 2, [1.0, 0.0, 0.0], &mut Rng::new(1)).unwrap();
        assert_eq!((tr, va.len(), te.len()), (vec![0, 1, 2, 3], 0, 0));
    }

    #[test]
    fn empty_split_rejected() {
        assert!(matches!(
            split_indices(&[0, 1], 2, [0.5, 0.25, 0.25], &mut Rng::new(1)),
            Err(Error::Config(_))
        ));
        assert!(split_indices(&[0, 1], 2, [0.5, 0.6, 0.0], &mut Rng::new(1)).is_err());
    }

    #[test]
    fn batches_cover_everything_once() {
        let d = Dataset::<f32>::from_images(&tiny(10), &NormStats::new(0.0, 1.0)).unwrap();
        let sizes: Vec<usize> = d
            .batches(4, Some(&mut Rng::new(3)))
            .unwrap()
            .map(|b| b.labels.len())
            .collect();
        assert_eq!(sizes, vec![4, 4, 2]);
        let mut ids: Vec<String> = d
            .batches(4, Some(&mut Rng::new(3)))
            .unwrap()
            .flat_map(|b| b.ids)
            .collect();
        ids.sort();
        let mut all = d.ids().to_vec();
        all.sort();
        assert_eq!(ids, all);
        let b = d.gather(&[0, 1]).unwrap();
        assert_eq!(b.x.shape(), &[2, 1, 2, 2]);
        assert_eq!(b.y_onehot.data(), &[0.0, 1.0, 1.0, 0.0]);
    }
}
