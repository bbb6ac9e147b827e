use std::fs;
use std::path::Path;

use super::params::{FnoArch, FnoParams};
use crate::error::{Error, Result};
use crate::tns;

pub const ARCH_FILE: &str = "arch.json";

/// Writes `arch.json` plus one TNS1 file per tensor into `dir`.
pub fn save_params(dir: &Path, arch: &FnoArch, params: &FnoParams) -> Result<()> {
    params.check_arch(arch)?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(ARCH_FILE);
    fs::write(&path, serde_json::to_string_pretty(arch)?).map_err(|e| Error::io(&path, e))?;
    for (name, dims, values) in params.tensors() {
        tns::write(&dir.join(format!("{name}.tns")), &dims, values)?;
    }
    Ok(())
}

pub fn load_params(dir: &Path) -> Result<(FnoArch, FnoParams)> {
    let path = dir.join(ARCH_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let arch: FnoArch = serde_json::from_str(&text)?;
    arch.validate()?;
    let template = FnoParams::zeros(&arch);
    let mut params = FnoParams::zeros(&arch);
    let expected: Vec<(String, Vec<usize>)> = template.tensors().into_iter().map(|(n, d, _)| (n, d)).collect();
    for ((name, dims), dst) in expected.iter().zip(params.tensors_mut()) {
        let values = tns::read_expect(&dir.join(format!("{name}.tns")), dims)?;
        dst.copy_from_slice(&values);
    }
    Ok((arch, params))
}

/// Loads a bundle and insists it was saved with `arch`.
pub fn load_params_expect(dir: &Path, arch: &FnoArch) -> Result<FnoParams> {
    let (found, params) = load_params(dir)?;
    if &found != arch {
        return Err(Error::Config(format!(
            "checkpoint {} was trained with {}, requested {}",
            dir.display(),
            serde_json::to_string(&found)?,
            serde_json::to_string(arch)?
        )));
    }
    Ok(params)
}
