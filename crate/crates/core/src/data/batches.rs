use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::tasks::TaskSpec;
use super::Dataset;
use crate::error::Result;
use crate::tensor::Tensor;

/// A dataset seen through a task's input transform.
#[derive(Debug, Clone)]
pub struct TaskView<'a> {
    dataset: &'a Dataset,
    map: Option<Vec<usize>>,
}

impl<'a> TaskView<'a> {
    pub fn new(dataset: &'a Dataset, task: &TaskSpec) -> Self {
        Self {
            dataset,
            map: task.transform.pixel_map(dataset.rows(), dataset.cols()),
        }
    }

    pub fn identity(dataset: &'a Dataset) -> Self {
        Self { dataset, map: None }
    }

    pub fn dataset(&self) -> &'a Dataset {
        self.dataset
    }

    pub fn len(&self) -> usize {
        self.dataset.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dataset.is_empty()
    }

    pub fn label(&self, i: usize) -> usize {
        self.dataset.label(i)
    }

    /// Transformed pixels of sample `i` in `[0, 1]`.
    pub fn write_sample(&self, i: usize, out: &mut [f64]) {
        let bytes = self.dataset.image_bytes(i);
        match &self.map {
            None => out.iter_mut().zip(bytes).for_each(|(o, &b)| *o = f64::from(b) / 255.0),
            Some(map) => out
                .iter_mut()
                .zip(map)
                .for_each(|(o, &j)| *o = f64::from(bytes[j]) / 255.0),
        }
    }

    /// Gathers the given samples into a tensor of shape `(len, input_shape...)`.
    pub fn gather(&self, indices: &[usize], input_shape: &[usize]) -> Result<(Tensor, Vec<usize>)> {
        let per = self.dataset.image_len();
        let mut data = vec![0.0; indices.len() * per];
        for (chunk, &i) in data.chunks_mut(per).zip(indices) {
            self.write_sample(i, chunk);
        }
        let mut shape = vec![indices.len()];
        shape.extend_from_slice(input_shape);
        let labels = indices.iter().map(|&i| self.label(i)).collect();
        Ok((Tensor::new(shape, data)?, labels))
    }

    /// Mini-batches in an order shuffled by `shuffle_seed`; the final short
    /// batch is kept.
    pub fn batches(&self, batch_size: usize, shuffle_seed: Option<u64>, input_shape: &[usize]) -> BatchIter<'_, 'a> {
        assert!(batch_size >= 1, "batch size must be positive");
        let mut order: Vec<usize> = (0..self.len()).collect();
        if let Some(seed) = shuffle_seed {
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        }
        BatchIter {
            view: self,
            order,
            batch_size,
            input_shape: input_shape.to_vec(),
            pos: 0,
        }
    }
}

pub struct BatchIter<'v, 'a> {
    view: &'v TaskView<'a>,
    order: Vec<usize>,
    batch_size: usize,
    input_shape: Vec<usize>,
    pos: usize,
}

impl Iterator for BatchIter<'_, '_> {
    type Item = (Tensor, Vec<usize>);

    fn next(&mut self) -> Option<Self::Item> {
        if self.pos >= self.order.len() {
            return None;
        }
        let end = (self.pos + self.batch_size).min(self.order.len());
        let batch = self
            .view
            .gather(&self.order[self.pos..end], &self.input_shape)
            .expect("input shape matches image size");
        self.pos = end;
        Some(batch)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.order.len().saturating_sub(self.pos).div_ceil(self.batch_size);
        (left, Some(left))
    }
}

impl ExactSizeIterator for BatchIter<'_, '_> {}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{make_permuted_tasks, Split};

    fn dataset(n: usize) -> Dataset {
        let pixels = (0..n * 784).map(|v| (v % 251) as u8).collect();
        let labels = (0..n).map(|v| (v % 10) as u8).collect();
        Dataset::from_raw(pixels, labels, 28, 28, Split::Train).unwrap()
    }

    #[test]
    fn batch_counts() {
        let d = dataset(60000);
        let task = make_permuted_tasks(1, 1, false).unwrap().tasks[0];
        let view = TaskView::new(&d, &task);
        assert_eq!(view.batches(100, Some(3), &[784]).len(), 600);
        let small = dataset(250);
        let view = TaskView::identity(&small);
        let sizes: Vec<_> = view.batches(100, None, &[784]).map(|(x, _)| x.rows()).collect();
        assert_eq!(sizes, vec![100, 100, 50]);
    }

    #[test]
    fn shuffle_is_seeded() {
        let d = dataset(300);
        let view = TaskView::identity(&d);
        let labels = |seed| -> Vec<Vec<usize>> { view.batches(100, Some(seed), &[784]).map(|(_, y)| y).collect() };
        assert_eq!(labels(5), labels(5));
        assert_ne!(labels(5), labels(6));
    }

    #[test]
    fn permuted_batch_reorders_pixels_and_keeps_labels() {
        let d = dataset(100);
        let task = make_permuted_tasks(11, 1, false).unwrap().tasks[0];
        let map = task.transform.pixel_map(28, 28).unwrap();
        let view = TaskView::new(&d, &task);
        let (x, y) = view.batches(100, None, &[784]).next().unwrap();
        for (i, &label) in y.iter().enumerate() {
            assert_eq!(label, d.label(i));
            let src = d.image_bytes(i);
            for (j, &v) in x.row(i).iter().enumerate() {
                assert_eq!(v, f64::from(src[map[j]]) / 255.0);
            }
            let mut a: Vec<u64> = x.row(i).iter().map(|v| (v * 255.0).round() as u64).collect();
            let mut b: Vec<u64> = src.iter().map(|&v| u64::from(v)).collect();
            a.sort_unstable();
            b.sort_unstable();
            assert_eq!(a, b);
        }
    }
}
