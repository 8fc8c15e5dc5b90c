// Geometric median versus mean when one point is an outlier.

use dp_rsa::aggregation::{geometric_median, mean_aggregate, median_objective, AggregateRule};
use dp_rsa::paramcore::ParamVector;

pub struct MedianSummary {
    pub mean: ParamVector,
    pub median: ParamVector,
    pub median_objective: f64,
    pub mean_objective: f64,
}

pub fn run_example() -> dp_rsa::Result<MedianSummary> {
    let points = [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0], [1000.0, 1000.0]]
        .iter()
        .map(|p| ParamVector::new(p.to_vec()))
        .collect::<dp_rsa::Result<Vec<_>>>()?;
    let AggregateRule::GeometricMedian { tol, max_iter } = AggregateRule::geometric_median() else {
        unreachable!()
    };
    let median = geometric_median(&points, tol, max_iter)?;
    let mean = mean_aggregate(&points)?;
    Ok(MedianSummary {
        median_objective: median_objective(&median, &points),
        mean_objective: median_objective(&mean, &points),
        mean,
        median,
    })
}

fn main() -> dp_rsa::Result<()> {
    let s = run_example()?;
    println!("mean   {:?}  sum of distances {:.3}", s.mean.values(), s.mean_objective);
    println!("median {:?}  sum of distances {:.3}", s.median.values(), s.median_objective);
    Ok(())
}
