//! Generate a seeded dataset and dump it as CSV files with a JSON description.
//!
//! cargo run --release --example dataset_dump -- /tmp/dataset

use kernel_equiv::*;
use serde_json::json;

fn main() -> Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "results/dataset".into());
    let p = 50;
    let cov = CovarianceFamily::Geometric { ratio: 10.0 }.build(p, 0)?;
    let model = FeatureModel { cov, z_dist: ZDistribution::Rademacher };
    let x_tr = sample_features(&model, 40, 1)?;
    let x_ts = sample_features(&model, 20, 2)?;
    let teacher = relu_teacher(&[16, 16], p, 3)?;
    let ds = Dataset {
        y_tr: teacher.eval_rows(&x_tr)?,
        y_ts: teacher.eval_rows(&x_ts)?,
        x_tr,
        x_ts,
        description: json!({ "covariance": "geometric ratio 10", "z": "rademacher", "teacher": [16, 16], "seeds": [1, 2, 3] }),
    };
    ds.dump(std::path::Path::new(&dir))?;
    let back = Dataset::load(std::path::Path::new(&dir))?;
    println!("wrote {dir}: x_tr {}x{}, identical on reload: {}", back.x_tr.nrows(), back.x_tr.ncols(), back == ds);
    Ok(())
}
