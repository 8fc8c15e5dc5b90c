// Class-skewed data split: half of every class is shared by all workers,
// the other half goes to one small group of workers.

use dp_rsa::data::{gen_synthetic, SyntheticSpec};
use dp_rsa::fedsim::partition_noniid;
use dp_rsa::rng::{stream, Purpose};

/// `counts[k][c]`: samples of class `c` held by worker `k`.
pub fn run_example() -> dp_rsa::Result<Vec<Vec<usize>>> {
    let spec = SyntheticSpec {
        num_classes: 4,
        dim: 2,
        samples_per_class: 80,
        class_mean_separation: 3.0,
        noise_std: 1.0,
        seed: 0,
    };
    let data = gen_synthetic(&spec)?;
    let shards = partition_noniid(data.labels(), 8, 2, &mut stream(0, Purpose::Partition, 0, 0))?;
    Ok(shards
        .iter()
        .map(|shard| {
            let mut counts = vec![0; spec.num_classes];
            for &i in shard {
                counts[data.labels()[i]] += 1;
            }
            counts
        })
        .collect())
}

fn main() -> dp_rsa::Result<()> {
    for (k, counts) in run_example()?.iter().enumerate() {
        println!("worker {k}: class counts {counts:?}");
    }
    Ok(())
}
