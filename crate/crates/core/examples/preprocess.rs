//! Raw SNAP-style dumps to a filtered, indexed dataset and back from the cache.
//!
//! cargo run --example preprocess -- [checkins.tsv edges.tsv]
//!
//! Without arguments a small synthetic dump is written to a temp dir first.

use jntm::data::{
    build_dataset, filter_dataset, parse_checkins, parse_edges, read_dataset, write_dataset, Thresholds,
};
use jntm::synth::{generate_records, write_tsv, SynthConfig};

fn main() -> jntm::Result<()> {
    let dir = std::env::temp_dir().join("jntm-preprocess-example");
    std::fs::create_dir_all(&dir).map_err(|e| jntm::Error::Format(e.to_string()))?;
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (checkins_path, edges_path) = match args.as_slice() {
        [c, e] => (c.into(), e.into()),
        _ => {
            let c = dir.join("checkins.tsv");
            let e = dir.join("edges.tsv");
            write_tsv(&generate_records(&SynthConfig { seed: 2, ..SynthConfig::default() }), &c, &e)?;
            (c, e)
        }
    };

    let checkins = parse_checkins(&checkins_path)?;
    let edges = parse_edges(&edges_path)?;
    println!("raw: {} check-ins, {} edge lines", checkins.len(), edges.len());

    let thresholds = Thresholds { min_user_checkins: 10, min_location_checkins: 20 };
    let (checkins, edges) = filter_dataset(&checkins, &edges, thresholds);
    let dataset = build_dataset(&checkins, &edges);
    println!("filtered: {}", dataset.stats());

    let cache = dir.join("dataset.bin");
    write_dataset(&cache, &dataset)?;
    assert_eq!(read_dataset(&cache)?, dataset);
    println!("cache round trip ok: {}", cache.display());
    Ok(())
}
