use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Corpus {
    Mnist,
    FashionMnist,
}

impl Corpus {
    pub fn dir_name(self) -> &'static str {
        match self {
            Corpus::Mnist => "mnist",
            Corpus::FashionMnist => "fashion-mnist",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkKind {
    Dense,
    Conv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Transform {
    Identity,
    Permutation {
        seed: u64,
    },
    /// Counter-clockwise quarter turns.
    Rotate90 {
        quarter_turns: u8,
    },
}

impl Transform {
    /// Gather map for a `side × side` image: `out[j] = image[map[j]]`.
    /// `None` for the identity.
    pub fn pixel_map(&self, rows: usize, cols: usize) -> Option<Vec<usize>> {
        match *self {
            Transform::Identity => None,
            Transform::Permutation { seed } => Some(permutation(seed, rows * cols)),
            Transform::Rotate90 { quarter_turns } => {
                if quarter_turns % 4 == 0 {
                    return None;
                }
                assert_eq!(rows, cols, "rotation needs square images");
                let step = rotation_map(rows);
                let mut map: Vec<usize> = (0..rows * cols).collect();
                for _ in 0..quarter_turns % 4 {
                    map = step.iter().map(|&j| map[j]).collect();
                }
                Some(map)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub source: Corpus,
    pub transform: Transform,
    pub task_id: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSequence {
    pub tasks: Vec<TaskSpec>,
    pub network_kind: NetworkKind,
}

impl TaskSequence {
    /// Resolves a sequence key: `permuted-mnist-<n>` or `rotated-mnist-fashion-4`.
    pub fn from_key(key: &str, seed: u64, first_identity: bool) -> Result<Self> {
        if key == "rotated-mnist-fashion-4" {
            return Ok(make_rotation_tasks());
        }
        if let Some(n) = key.strip_prefix("permuted-mnist-") {
            let n: usize = n
                .parse()
                .map_err(|_| Error::Config(format!("bad task count in sequence key {key:?}")))?;
            return make_permuted_tasks(seed, n, first_identity);
        }
        Err(Error::Config(format!(
            "unknown task sequence {key:?} (expected permuted-mnist-10 or rotated-mnist-fashion-4)"
        )))
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn corpora(&self) -> Vec<Corpus> {
        let mut out = Vec::new();
        for t in &self.tasks {
            if !out.contains(&t.source) {
                out.push(t.source);
            }
        }
        out
    }
}

/// Uniform random permutation of `0..n` fully determined by `seed`.
pub fn permutation(seed: u64, n: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(&mut rng);
    p
}

/// One counter-clockwise quarter turn of a `side × side` image as a gather
/// map: `dest(r, c) = src(c, side − 1 − r)`.
pub fn rotation_map(side: usize) -> Vec<usize> {
    let mut map = vec![0; side * side];
    for r in 0..side {
        for c in 0..side {
            map[r * side + c] = c * side + (side - 1 - r);
        }
    }
    map
}

/// `n_tasks` pixel-permutation tasks on MNIST. Per-task seeds are drawn from
/// a generator seeded with `seed`. With `first_identity` the first task is
/// plain MNIST.
pub fn make_permuted_tasks(seed: u64, n_tasks: usize, first_identity: bool) -> Result<TaskSequence> {
    if n_tasks == 0 {
        return Err(Error::Config("a task sequence needs at least one task".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tasks = (0..n_tasks)
        .map(|task_id| {
            let task_seed = rng.next_u64();
            let transform = if first_identity && task_id == 0 {
                Transform::Identity
            } else {
                Transform::Permutation { seed: task_seed }
            };
            TaskSpec {
                source: Corpus::Mnist,
                transform,
                task_id,
            }
        })
        .collect();
    Ok(TaskSequence {
        tasks,
        network_kind: NetworkKind::Dense,
    })
}

/// MNIST, FashionMNIST, MNIST rotated, FashionMNIST rotated.
pub fn make_rotation_tasks() -> TaskSequence {
    let spec = |task_id, source, quarter_turns| TaskSpec {
        source,
        transform: if quarter_turns == 0 {
            Transform::Identity
        } else {
            Transform::Rotate90 { quarter_turns }
        },
        task_id,
    };
    TaskSequence {
        tasks: vec![
            spec(0, Corpus::Mnist, 0),
            spec(1, Corpus::FashionMnist, 0),
            spec(2, Corpus::Mnist, 1),
            spec(3, Corpus::FashionMnist, 1),
        ],
        network_kind: NetworkKind::Conv,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn apply(map: &[usize], image: &[u32]) -> Vec<u32> {
        map.iter().map(|&j| image[j]).collect()
    }

    #[test]
    fn permuted_tasks_are_deterministic_and_distinct() {
        let a = make_permuted_tasks(42, 10, false).unwrap();
        assert_eq!(a, make_permuted_tasks(42, 10, false).unwrap());
        assert_eq!(a.len(), 10);
        let maps: Vec<_> = a.tasks.iter().map(|t| t.transform.pixel_map(28, 28).unwrap()).collect();
        for i in 0..maps.len() {
            for j in i + 1..maps.len() {
                assert_ne!(maps[i], maps[j]);
            }
        }
        let b = make_permuted_tasks(42, 10, true).unwrap();
        assert_eq!(b.tasks[0].transform, Transform::Identity);
        assert_eq!(b.tasks[1], a.tasks[1]);
        assert!(make_permuted_tasks(1, 0, false).is_err());
    }

    #[test]
    fn permutation_is_bijection_with_inverse() {
        let p = permutation(9, 784);
        let mut sorted = p.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..784).collect::<Vec<_>>());
        let mut inverse = vec![0; 784];
        for (j, &src) in p.iter().enumerate() {
            inverse[src] = j;
        }
        let image: Vec<u32> = (0..784).map(|v| v * 7 % 255).collect();
        assert_eq!(apply(&inverse, &apply(&p, &image)), image);
    }

    #[test]
    fn rotation_sequence_order() {
        let seq = make_rotation_tasks();
        assert_eq!(seq.len(), 4);
        let sources: Vec<_> = seq.tasks.iter().map(|t| t.source).collect();
        assert_eq!(
            sources,
            [Corpus::Mnist, Corpus::FashionMnist, Corpus::Mnist, Corpus::FashionMnist]
        );
        assert_eq!(seq.tasks[2].transform, Transform::Rotate90 { quarter_turns: 1 });
        assert_eq!(seq.network_kind, NetworkKind::Conv);
        assert_eq!(
            TaskSequence::from_key("rotated-mnist-fashion-4", 0, false).unwrap(),
            seq
        );
        assert_eq!(TaskSequence::from_key("permuted-mnist-10", 3, false).unwrap().len(), 10);
        assert!(TaskSequence::from_key("bogus", 0, false).is_err());
    }

    #[test]
    fn rotation_convention_on_one_hot() {
        let map = Transform::Rotate90 { quarter_turns: 1 }.pixel_map(28, 28).unwrap();
        for (r, c) in [(0, 0), (3, 17), (27, 5)] {
            let mut image = vec![0u32; 784];
            image[r * 28 + c] = 1;
            let rotated = apply(&map, &image);
            // dest(r', c') = src(c', 27 − r') ⇒ the hot pixel lands at (27 − c, r).
            let hot = rotated.iter().position(|&v| v == 1).unwrap();
            assert_eq!((hot / 28, hot % 28), (27 - c, r));
        }
    }

    #[test]
    fn four_quarter_turns_are_identity() {
        let image: Vec<u32> = (0..784).collect();
        let one = Transform::Rotate90 { quarter_turns: 1 }.pixel_map(28, 28).unwrap();
        let mut x = image.clone();
        for _ in 0..4 {
            x = apply(&one, &x);
        }
        assert_eq!(x, image);
        assert_eq!(Transform::Rotate90 { quarter_turns: 4 }.pixel_map(28, 28), None);
        let two = Transform::Rotate90 { quarter_turns: 2 }.pixel_map(28, 28).unwrap();
        assert_eq!(apply(&two, &image), apply(&one, &apply(&one, &image)));
    }
}
