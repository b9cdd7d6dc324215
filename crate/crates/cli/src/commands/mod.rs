//! One module per subcommand.

mod aj;
mod compare;
mod evaluate;
mod fit;
mod predict;
mod simulate;

use std::path::Path;

use anyhow::{bail, Context, Result};
use msm_core::design::{DesignSpec, SplineTerm};
use msm_core::fit::ModelBundle;
use msm_core::frame::TIME_COLUMN;
use msm_core::panel::{ColumnKind, Edge, Panel};
use msm_core::sim::{simulation_design, COVARIATES};
use sha2::{Digest, Sha256};

pub use aj::{aj, AjArgs};
pub use compare::{compare, CompareArgs};
pub use evaluate::{evaluate, EvaluateArgs};
pub use fit::{fit, grid, FitArgs, GridArgs};
pub use predict::{predict, transform, PredictArgs, TransformArgs};
pub use simulate::{simulate, SimulateArgs};

use crate::io::read_json;
use crate::Context as RunContext;

/// Design from the config, or a default built from the panel's columns.
pub(crate) fn resolve_design(ctx: &RunContext, panel: &Panel) -> DesignSpec {
    if let Some(d) = &ctx.config.design {
        return d.clone();
    }
    let names: Vec<&str> = panel.schema().columns().iter().map(|c| c.name.as_str()).collect();
    if names == COVARIATES {
        return simulation_design();
    }
    let mut spec = DesignSpec { spline_terms: vec![SplineTerm::new(TIME_COLUMN, 10)], ..Default::default() };
    for c in panel.schema().columns() {
        spec.linear_terms.push(c.name.clone());
        if c.kind != ColumnKind::Categorical {
            spec.network_inputs.push(c.name.clone());
        }
    }
    spec
}

pub(crate) fn load_bundle(path: &Path) -> Result<ModelBundle> {
    let mut bundle: ModelBundle = read_json(path)?;
    bundle.hydrate().with_context(|| format!("restoring networks from {}", path.display()))?;
    Ok(bundle)
}

pub(crate) fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Accepts `0-1`, `0->1` or `0,1`.
pub(crate) fn parse_edge(s: &str) -> Result<Edge> {
    let parts: Vec<&str> = s.split(['-', '>', ',']).filter(|p| !p.is_empty()).collect();
    match parts.as_slice() {
        [a, b] => Ok(Edge(a.trim().parse()?, b.trim().parse()?)),
        _ => bail!("cannot parse edge `{s}`; expected e.g. 0-1"),
    }
}

/// Accepts `6-12` or `6:12`.
pub(crate) fn parse_span(s: &str) -> Result<(u32, u32)> {
    let (a, b) = s.split_once(['-', ':']).with_context(|| format!("cannot parse span `{s}`; expected e.g. 6-12"))?;
    let span = (a.trim().parse()?, b.trim().parse()?);
    if span.0 >= span.1 {
        bail!("span `{s}` must satisfy t1 < t2");
    }
    Ok(span)
}
