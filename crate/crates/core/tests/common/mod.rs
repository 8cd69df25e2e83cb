#![allow(dead_code)]

use std::path::PathBuf;

use robustfeat::data::{load_mnist_idx, Dataset};

pub fn mnist_dir() -> PathBuf {
    std::env::var_os("ROBUSTFEAT_MNIST_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"))
}

pub fn mnist(train: bool) -> Dataset<f64> {
    let d = mnist_dir();
    let (i, l) = if train {
        ("train-images-idx3-ubyte", "train-labels-idx1-ubyte")
    } else {
        ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte")
    };
    load_mnist_idx(d.join(i), d.join(l))
        .unwrap_or_else(|e| panic!("MNIST not found under {} ({e}); see README", d.display()))
}
