// Scratch search used to pick covering-instance fixtures; not part of the
// public surface.
use scatterlab_core::bounds::{covering_numbers, CoveringConfig};
use scatterlab_core::group::{FrequencySet, GroupSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let cfg = CoveringConfig::default();
    let mut found = 0;
    for order in [12usize, 16] {
        let g = GroupSpec::cyclic(order).unwrap();
        let gammas = [
            FrequencySet::from_indices(g.clone(), [0, 1, order - 1]).unwrap(),
            FrequencySet::from_indices(g.clone(), [0, 2, order - 2]).unwrap(),
            FrequencySet::from_indices(g.clone(), [0, 1, order - 1, 3, order - 3]).unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        for trial in 0..60000 {
            let size = rng.gen_range(4..=12usize);
            let mut supp = std::collections::BTreeSet::new();
            while supp.len() < size {
                supp.insert(rng.gen_range(0..order));
            }
            let supp = FrequencySet::from_indices(g.clone(), supp).unwrap();
            for (gi, gamma) in gammas.iter().enumerate() {
                let n = covering_numbers(std::slice::from_ref(&supp), gamma, &cfg).unwrap();
                if let Some(exact) = n.n_exact {
                    if n.n_greedy > exact {
                        println!(
                            "order={order} gamma#{gi} supp={:?} exact={exact} greedy={} ruzsa={} (trial {trial})",
                            supp.indices().collect::<Vec<_>>(),
                            n.n_greedy,
                            n.n_ruzsa
                        );
                        found += 1;
                        if found > 12 {
                            return;
                        }
                    }
                }
            }
        }
    }
    println!("done, found {found}");
}
