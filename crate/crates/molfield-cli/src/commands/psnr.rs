use anyhow::Result;
use serde_json::json;

use crate::commands::reconstruct::{report_json, report_lines};
use crate::manifest::RunManifest;
use crate::util::{load_volume, write_atomic};
use crate::PsnrArgs;

pub fn run(args: PsnrArgs) -> Result<()> {
    let reference = load_volume(&args.reference)?;
    let test = load_volume(&args.test)?;
    let report = molfield::eval::psnr(&reference.volume, &test.volume)?;
    print!("{}", report_lines(&report));

    if let Some(output) = &args.output {
        let mut manifest = RunManifest::new("psnr", json!({}));
        manifest.input(&reference.path, &reference.sha256);
        manifest.input(&test.path, &test.sha256);
        write_atomic(
            output,
            serde_json::to_string_pretty(&report_json(&report))?.as_bytes(),
        )?;
        manifest.output(output);
        manifest.write_for(output)?;
    }
    Ok(())
}
