//! Layer tables and parameter counts for VGG19, VGG-mini and the MLP
//! baseline, plus a forward pass through VGG-mini.
//!
//! ```text
//! cargo run --release --example model_zoo
//! ```

use convforge::model::{
    build_vgg_mini, mlp_config, vgg19_config, vgg_mini_config, InitScheme, InputShape, ModelConfig,
};
use convforge::{Rng, Tensor};

fn table(cfg: &ModelConfig) -> convforge::Result<()> {
    println!(
        "{} on {}x{}x{}",
        cfg.name, cfg.input.channels, cfg.input.height, cfg.input.width
    );
    for p in cfg.plan()? {
        let params = p.param_shapes().map_or(0, |(w, b)| w.iter().product::<usize>() + b[0]);
        let name = p.name.clone().unwrap_or_default();
        println!(
            "  {:<10} {:<20} {:>16} {:>12}",
            name,
            p.spec.to_string(),
            format!("{:?}", p.output),
            params
        );
    }
    println!("  total parameters {}\n", cfg.param_count()?);
    Ok(())
}

fn main() -> convforge::Result<()> {
    table(&vgg19_config(2, 1)?)?;
    table(&vgg_mini_config(2, 1, 32)?)?;
    table(&mlp_config(2, InputShape::square(1, 32), &[64])?)?;
    println!(
        "VGG19 with 3 channels and 1000 classes: {} parameters",
        vgg19_config(1000, 3)?.param_count()?
    );

    let mut model = build_vgg_mini::<f32>(2, 1, 32)?;
    model.init_params(&mut Rng::new(0), InitScheme::HeNormal)?;
    let x = Tensor::rng_normal(&mut Rng::new(1), &[4, 1, 32, 32], 0.0, 1.0)?;
    let probs = model.predict_proba(&x)?;
    println!("\nuntrained VGG-mini class probabilities for 4 random inputs:");
    for row in probs.data().chunks(2) {
        println!("  {row:?}");
    }
    Ok(())
}
