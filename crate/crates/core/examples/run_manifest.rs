//! Runs the `decay` command into a scratch directory and checks the emitted
//! files against the digests in `manifest.json`.

use hallbath::cli::cmd_decay;
use hallbath::config::SimConfig;
use hallbath::manifest::RunManifest;

fn main() -> hallbath::Result<()> {
    let dir = std::env::temp_dir().join("hallbath-run-manifest");
    let config = SimConfig::from_json(&format!(
        r#"{{ "lattice": {{ "nx": 20, "ny": 41 }},
              "integrator": {{ "t_final": 15.0 }},
              "output": {{ "dir": {:?} }} }}"#,
        dir
    ))?;
    let report = cmd_decay(&config, true)?;
    print!("{}", report.summary);

    let manifest = RunManifest::read(&dir)?;
    for out in &manifest.outputs {
        println!("{} {} bytes sha256 {}", out.path.display(), out.bytes, out.sha256);
    }
    println!("mismatched files: {:?}", manifest.verify(&dir));
    Ok(())
}
