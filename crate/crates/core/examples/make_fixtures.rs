//! Regenerates the files under `fixtures/`:
//! `cargo run -p fca2vec --example make_fixtures -- crates/core/fixtures`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use fca2vec::context::save_burmeister;
use fca2vec::synth::{grouped_context, latent_class_table, temporal_communities, TemporalSpec};
use fca2vec::{fixtures, FormalContext};

fn save_years(ctx: &FormalContext, path: &Path) {
    let mut out = String::new();
    for (name, y) in ctx.attributes().iter().zip(ctx.attribute_years().unwrap()) {
        let _ = writeln!(out, "{name}\t{y}");
    }
    fs::write(path, out).unwrap();
}

fn main() {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "fixtures".into());
    let dir = Path::new(&dir);
    fs::create_dir_all(dir).unwrap();

    save_burmeister(&fixtures::figure2(), dir.join("figure2.cxt")).unwrap();
    save_burmeister(&fixtures::living_beings(), dir.join("living_beings.cxt")).unwrap();

    for (name, spec) in [
        ("temporal_toy", TemporalSpec::toy()),
        ("temporal_standard", TemporalSpec::standard()),
    ] {
        let ctx = temporal_communities(&spec, 1);
        save_burmeister(&ctx, dir.join(format!("{name}.cxt"))).unwrap();
        save_years(&ctx, &dir.join(format!("{name}.years.tsv")));
    }

    let table = latent_class_table(300, &[3, 3, 4, 2, 3, 4, 3], 6, 0.85, 1).unwrap();
    let mut w = csv::Writer::from_path(dir.join("nominal_surrogate.csv")).unwrap();
    w.write_record(&table.columns).unwrap();
    for row in &table.rows {
        w.write_record(row).unwrap();
    }
    w.flush().unwrap();

    save_burmeister(
        &grouped_context(500, 10, 10, (2, 5), 0.005, 1),
        dir.join("grouped_surrogate.cxt"),
    )
    .unwrap();
}
