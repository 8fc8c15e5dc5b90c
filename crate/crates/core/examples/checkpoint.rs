// Saving and restoring an MLP's parameters.

use dp_rsa::paramcore::{read_checkpoint, write_checkpoint, Classifier, MlpModel, ParamVector};
use dp_rsa::rng::{stream, Purpose};

pub fn run_example() -> dp_rsa::Result<(MlpModel, ParamVector, usize)> {
    let model = MlpModel::new(4, 6, 3)?;
    let params = model.init_params(&mut stream(0, Purpose::Init, 0, 0));
    let mut bytes = Vec::new();
    write_checkpoint(&mut bytes, &model, &params)?;
    let (restored, restored_params) = read_checkpoint(bytes.as_slice())?;
    assert_eq!(restored, model);
    Ok((restored, restored_params, bytes.len()))
}

fn main() -> dp_rsa::Result<()> {
    let (model, params, size) = run_example()?;
    println!("{model:?}: {} parameters, {size} bytes", params.len());
    Ok(())
}
