//! JSON files for plants and controllers.
//!
//! Matrices are stored as lists of rows. Plant blocks that are absent
//! default to zero; empty matrices may be written as `[]`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::closed_loop::{Controller, LftController};
use super::plant::{check_plant, LftPlant, PlantDims};
use super::structure::UncertaintyStructure;
use crate::error::{Error, Result};
use crate::linalg::{from_rows, to_rows, zeros, Mat};

type Rows = Vec<Vec<f64>>;

#[derive(Serialize, Deserialize)]
struct PlantFile {
    n: usize,
    np: usize,
    nd: usize,
    ne: usize,
    nu: usize,
    ny: usize,
    ts: f64,
    structure: UncertaintyStructure,
    #[serde(flatten)]
    blocks: BTreeMap<String, Rows>,
}

/// Shape a row list read from disk, accepting `[]` for any empty matrix.
fn shaped(name: &str, rows: &Rows, r: usize, c: usize) -> Result<Mat> {
    if r == 0 || c == 0 {
        if rows.iter().all(|row| row.is_empty()) && (rows.is_empty() || rows.len() == r) {
            return Ok(zeros(r, c));
        }
    }
    let m = from_rows(rows).ok_or_else(|| Error::dims(name, "rectangular rows", "ragged rows"))?;
    if m.shape() != (r, c) {
        return Err(Error::dims(name, format!("{r}x{c}"), format!("{}x{}", m.nrows(), m.ncols())));
    }
    Ok(m)
}

pub fn plant_from_json(text: &str) -> Result<LftPlant> {
    let f: PlantFile = serde_json::from_str(text)?;
    let dims = PlantDims { n: f.n, np: f.np, nd: f.nd, ne: f.ne, nu: f.nu, ny: f.ny };
    let mut p = LftPlant::zeros(dims, f.structure, f.ts);
    let known: Vec<&'static str> = p.blocks().iter().map(|b| b.0).collect();
    for key in f.blocks.keys() {
        if !known.contains(&key.as_str()) {
            return Err(Error::InvalidArgument(format!("unknown plant block `{key}`")));
        }
    }
    let shapes: Vec<(&'static str, usize, usize)> = p.blocks().iter().map(|b| (b.0, b.2, b.3)).collect();
    for (name, r, c) in shapes {
        if let Some(rows) = f.blocks.get(name) {
            let m = shaped(name, rows, r, c)?;
            *block_mut(&mut p, name) = m;
        }
    }
    check_plant(&p)?;
    Ok(p)
}

fn block_mut<'a>(p: &'a mut LftPlant, name: &str) -> &'a mut Mat {
    match name {
        "A" => &mut p.a,
        "B0" => &mut p.b0,
        "B1" => &mut p.b1,
        "B2" => &mut p.b2,
        "C0" => &mut p.c0,
        "C1" => &mut p.c1,
        "C2" => &mut p.c2,
        "D00" => &mut p.d00,
        "D02" => &mut p.d02,
        "D10" => &mut p.d10,
        "D12" => &mut p.d12,
        "D20" => &mut p.d20,
        "D21" => &mut p.d21,
        "D01" => &mut p.d01,
        "D11" => &mut p.d11,
        "D22" => &mut p.d22,
        _ => unreachable!("unknown block {name}"),
    }
}

/// Pretty JSON; the structurally zero blocks are omitted.
pub fn plant_to_json(p: &LftPlant) -> Result<String> {
    let d = p.dims;
    let blocks = p
        .blocks()
        .into_iter()
        .filter(|(name, ..)| !matches!(*name, "D01" | "D11" | "D22"))
        .map(|(name, m, ..)| (name.to_string(), to_rows(m)))
        .collect();
    let f = PlantFile {
        n: d.n,
        np: d.np,
        nd: d.nd,
        ne: d.ne,
        nu: d.nu,
        ny: d.ny,
        ts: p.sample_time,
        structure: p.structure.clone(),
        blocks,
    };
    Ok(serde_json::to_string_pretty(&f)?)
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ControllerFile {
    StateFeedback {
        nu: usize,
        n: usize,
        #[serde(rename = "F")]
        f: Rows,
    },
    Lft {
        nk: usize,
        nu: usize,
        ny: usize,
        np: usize,
        #[serde(rename = "Ak")]
        a_k: Rows,
        #[serde(rename = "Bk1")]
        b_k1: Rows,
        #[serde(rename = "Bk0")]
        b_k0: Rows,
        #[serde(rename = "Ck1")]
        c_k1: Rows,
        #[serde(rename = "Ck0")]
        c_k0: Rows,
        #[serde(rename = "Dk10")]
        d_k10: Rows,
        #[serde(rename = "Dk00")]
        d_k00: Rows,
    },
}

pub fn controller_from_json(text: &str) -> Result<Controller> {
    let f: ControllerFile = serde_json::from_str(text)?;
    Ok(match f {
        ControllerFile::StateFeedback { nu, n, f } => Controller::StateFeedback(shaped("F", &f, nu, n)?),
        ControllerFile::Lft { nk, nu, ny, np, a_k, b_k1, b_k0, c_k1, c_k0, d_k10, d_k00 } => {
            Controller::Lft(LftController {
                a_k: shaped("Ak", &a_k, nk, nk)?,
                b_k1: shaped("Bk1", &b_k1, nk, ny)?,
                b_k0: shaped("Bk0", &b_k0, nk, np)?,
                c_k1: shaped("Ck1", &c_k1, nu, nk)?,
                c_k0: shaped("Ck0", &c_k0, np, nk)?,
                d_k10: shaped("Dk10", &d_k10, nu, np)?,
                d_k00: shaped("Dk00", &d_k00, np, np)?,
            })
        }
    })
}

pub fn controller_to_json(k: &Controller) -> Result<String> {
    let f = match k {
        Controller::StateFeedback(f) => ControllerFile::StateFeedback { nu: f.nrows(), n: f.ncols(), f: to_rows(f) },
        Controller::Lft(k) => {
            k.check()?;
            ControllerFile::Lft {
                nk: k.nk(),
                nu: k.nu(),
                ny: k.ny(),
                np: k.np(),
                a_k: to_rows(&k.a_k),
                b_k1: to_rows(&k.b_k1),
                b_k0: to_rows(&k.b_k0),
                c_k1: to_rows(&k.c_k1),
                c_k0: to_rows(&k.c_k0),
                d_k10: to_rows(&k.d_k10),
                d_k00: to_rows(&k.d_k00),
            }
        }
    };
    Ok(serde_json::to_string_pretty(&f)?)
}
