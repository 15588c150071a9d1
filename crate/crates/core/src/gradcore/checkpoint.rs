//! Binary parameter checkpoints.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic      8 bytes   "MCCOPMLP"
//! version    u32       1
//! activation u8        0 = softplus, 1 = relu
//! beta       f64       softplus sharpness (0 for relu)
//! spectral   u8        0 / 1
//! n_layers   u32
//! n_layers x (rows u32, cols u32)
//! per layer: weight rows*cols f64 (row-major), bias rows f64, u rows f64
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use super::activation::Activation;
use super::mlp::{DenseLayer, Mlp};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"MCCOPMLP";
const VERSION: u32 = 1;

pub fn write_mlp<W: Write>(mlp: &Mlp, mut w: W) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    let (tag, beta) = match mlp.activation {
        Activation::Softplus { beta } => (0u8, beta),
        Activation::Relu => (1u8, 0.0),
    };
    w.write_all(&[tag])?;
    w.write_all(&beta.to_le_bytes())?;
    w.write_all(&[mlp.spectral as u8])?;
    w.write_all(&(mlp.layers.len() as u32).to_le_bytes())?;
    for l in &mlp.layers {
        w.write_all(&(l.weight.nrows() as u32).to_le_bytes())?;
        w.write_all(&(l.weight.ncols() as u32).to_le_bytes())?;
    }
    for l in &mlp.layers {
        for v in l.weight.iter().chain(l.bias.iter()).chain(l.u.iter()) {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> std::io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_u8<R: Read>(r: &mut R) -> std::io::Result<u8> {
    let mut b = [0u8; 1];
    r.read_exact(&mut b)?;
    Ok(b[0])
}

fn read_vec<R: Read>(r: &mut R, n: usize) -> std::io::Result<Vec<f64>> {
    (0..n).map(|_| read_f64(r)).collect()
}

pub fn read_mlp<R: Read>(mut r: R) -> std::result::Result<Mlp, String> {
    let io = |e: std::io::Error| e.to_string();
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != MAGIC {
        return Err("not a parameter checkpoint (bad magic)".into());
    }
    let version = read_u32(&mut r).map_err(io)?;
    if version != VERSION {
        return Err(format!("unsupported checkpoint version {version}"));
    }
    let tag = read_u8(&mut r).map_err(io)?;
    let beta = read_f64(&mut r).map_err(io)?;
    let activation = match tag {
        0 if beta > 0.0 => Activation::Softplus { beta },
        0 => return Err(format!("invalid softplus beta {beta}")),
        1 => Activation::Relu,
        t => return Err(format!("unknown activation tag {t}")),
    };
    let spectral = read_u8(&mut r).map_err(io)? != 0;
    let n_layers = read_u32(&mut r).map_err(io)? as usize;
    if n_layers == 0 {
        return Err("checkpoint has no layers".into());
    }
    let shapes: Vec<(usize, usize)> = (0..n_layers)
        .map(|_| Ok((read_u32(&mut r)? as usize, read_u32(&mut r)? as usize)))
        .collect::<std::io::Result<_>>()
        .map_err(io)?;
    for pair in shapes.windows(2) {
        if pair[0].0 != pair[1].1 {
            return Err(format!("incompatible layer shapes {:?} -> {:?}", pair[0], pair[1]));
        }
    }
    let mut layers = Vec::with_capacity(n_layers);
    for &(rows, cols) in &shapes {
        let w = read_vec(&mut r, rows * cols).map_err(io)?;
        let b = read_vec(&mut r, rows).map_err(io)?;
        let u = read_vec(&mut r, rows).map_err(io)?;
        layers.push(DenseLayer {
            weight: Array2::from_shape_vec((rows, cols), w).map_err(|e| e.to_string())?,
            bias: Array1::from(b),
            u: Array1::from(u),
        });
    }
    Ok(Mlp { layers, activation, spectral })
}

pub fn save_mlp(mlp: &Mlp, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_mlp(mlp, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_mlp(path: &Path) -> Result<Mlp> {
    let r = BufReader::new(File::open(path)?);
    read_mlp(r).map_err(|reason| Error::Checkpoint { path: path.to_path_buf(), reason })
}
