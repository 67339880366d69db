//! Generates the seeded synthetic set, writes it as PGM files with a
//! manifest, reads it back through the manifest loader and prints the
//! split sizes and normalization statistics.
//!
//! ```text
//! cargo run --example synth_data -- [out_dir]
//! ```

use convforge::data::{read_pgm, Dataset, DatasetManifest};
use convforge::harness::{write_synth, SynthSpec};
use convforge::Rng;

fn ascii(img: &convforge::data::Image) {
    const RAMP: &[u8] = b" .:-=+*#%@";
    for y in 0..img.height() {
        let line: String = (0..img.width())
            .map(|x| RAMP[img.get(x, y) as usize * (RAMP.len() - 1) / 255] as char)
            .collect();
        println!("  {line}");
    }
}

fn main() -> convforge::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map_or_else(|| std::env::temp_dir().join("convforge-synth"), Into::into);
    let spec = SynthSpec {
        seed: 7,
        n_per_class: 50,
        hw: 32,
    };
    let manifest = write_synth(&spec, &out)?;
    println!("wrote {} images under {}", manifest.len(), out.display());

    for entry in &manifest.entries()[..2] {
        println!("\n{} ({})", entry.path, entry.label);
        ascii(&read_pgm(manifest.root().join(&entry.path))?);
    }

    let manifest = DatasetManifest::read(out.join("manifest.tsv"))?;
    let images = manifest.load(32)?;
    let [train, val, test] = images.split([0.7, 0.15, 0.15], &mut Rng::new(1))?;
    println!(
        "\nclasses {:?}, positive class {}",
        images.classes,
        images.classes[images.positive_class()]
    );
    println!("split train/val/test: {}/{}/{}", train.len(), val.len(), test.len());
    let stats = train.norm_stats()?;
    println!(
        "train pixel mean {:.4}, std {:.4} (on a 0..1 scale)",
        stats.mean, stats.std
    );

    let data = Dataset::<f32>::from_images(&train, &stats)?;
    let batch = data.batches(16, Some(&mut Rng::new(2)))?.next().expect("non-empty");
    println!("first batch: x {:?}, labels {:?}", batch.x.shape(), batch.labels);
    Ok(())
}
