//! Regenerates the files under `fixtures/`.
//!
//! cargo run -p oneshot-core --example write_fixtures

use std::path::Path;

use oneshot_core::fixture::{human_fixture_records, msrc12_sample};
use oneshot_core::metrics::write_records;

fn main() -> oneshot_core::Result<()> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    std::fs::create_dir_all(root.join("msrc12")).expect("create fixtures dir");
    write_records(&root.join("human_labels.csv"), &human_fixture_records())?;
    let (skel, tags) = msrc12_sample(0)?;
    std::fs::write(root.join("msrc12/sample.csv"), skel).expect("write skeleton");
    std::fs::write(root.join("msrc12/sample.tagstream"), tags).expect("write tagstream");
    Ok(())
}
