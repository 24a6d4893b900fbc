//! Seeded input generators for the kernel benchmarks.

use ptd_core::align::SimilarityMatrix;
use ptd_core::divergence::ParseTree;
use ptd_core::rng;
use rand::Rng;

/// `n`-by-`m` matrix with entries uniform in [0, 1).
pub fn random_matrix(n: usize, m: usize, seed: u64) -> SimilarityMatrix {
    let mut rng = rng::seeded(seed);
    let rows = (0..n).map(|_| (0..m).map(|_| rng.gen()).collect()).collect();
    SimilarityMatrix::new(rows).expect("non-empty finite matrix")
}

/// Tokens drawn uniformly from a vocabulary of `vocab` words.
pub fn random_tokens(len: usize, vocab: usize, seed: u64) -> Vec<String> {
    let mut rng = rng::seeded(seed);
    (0..len).map(|_| format!("t{}", rng.gen_range(0..vocab))).collect()
}

/// Random ordered tree with `nodes` nodes and labels from `labels` symbols.
pub fn random_tree(nodes: usize, labels: usize, seed: u64) -> ParseTree {
    let mut rng = rng::seeded(seed);
    let mut parent = vec![usize::MAX; nodes];
    let mut path = vec![0];
    #[allow(clippy::needless_range_loop)]
    for v in 1..nodes {
        let depth = rng.gen_range(0..path.len());
        path.truncate(depth + 1);
        parent[v] = path[depth];
        path.push(v);
    }
    let label: Vec<String> = (0..nodes).map(|_| format!("L{}", rng.gen_range(0..labels))).collect();
    fn build(v: usize, label: &[String], parent: &[usize]) -> ParseTree {
        let kids = (v + 1..label.len()).filter(|&c| parent[c] == v).map(|c| build(c, label, parent)).collect();
        ParseTree::node(label[v].clone(), kids)
    }
    build(0, &label, &parent)
}

/// Scores with roughly balanced binary labels.
pub fn random_scored(n: usize, seed: u64) -> (Vec<f64>, Vec<u8>) {
    let mut rng = rng::seeded(seed);
    (0..n)
        .map(|_| {
            let label = u8::from(rng.gen_bool(0.5));
            (rng.gen::<f64>() + f64::from(label) * 0.3, label)
        })
        .unzip()
}
