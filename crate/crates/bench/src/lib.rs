//! Fixtures shared by the criterion benches.

use shrinkrel::datagen::generate;
use shrinkrel::streams::{stream, Purpose};
use shrinkrel::{CensoringSpec, Generated, StructureTree, WeibullSpec};

/// Series-parallel design with `kappa = (2,2,2)`, `lambda = (2.5,1,1)`.
pub fn serpar() -> (StructureTree, Vec<WeibullSpec>) {
    let tree = StructureTree::parse("series(c1,parallel(c2,c3))").unwrap();
    let specs = [(2.0, 2.5), (2.0, 1.0), (2.0, 1.0)]
        .iter()
        .map(|&(k, l)| WeibullSpec::new(k, l).unwrap())
        .collect();
    (tree, specs)
}

pub fn parallel(k: usize) -> (StructureTree, Vec<WeibullSpec>) {
    (
        StructureTree::parallel(k).unwrap(),
        vec![WeibullSpec::new(2.0, 1.0).unwrap(); k],
    )
}

pub fn dataset(tree: &StructureTree, specs: &[WeibullSpec], n: usize, seed: u64) -> Generated {
    let mut rng = stream(seed, 0, Purpose::Data);
    generate(tree, specs, &CensoringSpec::new(0.05).unwrap(), n, &mut rng).unwrap()
}
