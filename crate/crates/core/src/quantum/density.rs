use std::io::{Read, Write};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::space::{Space, SpaceKind};
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Density operator on a [`Space`]. Storage is the column-major
/// vectorization: element `(a, b)` sits at `a + b * dim`.
#[derive(Clone, Debug)]
pub struct DensityVec {
    space: Arc<Space>,
    rho: DMatrix<Complex64>,
}

impl DensityVec {
    pub fn from_matrix(space: Arc<Space>, rho: DMatrix<Complex64>) -> Result<Self> {
        let d = space.dim();
        if rho.shape() != (d, d) {
            return Err(Error::Dimension(format!(
                "matrix is {:?}, basis has dimension {d}",
                rho.shape()
            )));
        }
        Ok(Self { space, rho })
    }

    /// `|s><s|` for a basis configuration `s` (bit index).
    pub fn basis_projector(space: Arc<Space>, s: u64) -> Result<Self> {
        let a = space
            .find(s)
            .ok_or_else(|| Error::Dimension(format!("state {s:#b} is outside the basis")))?;
        let d = space.dim();
        let mut rho = DMatrix::zeros(d, d);
        rho[(a, a)] = Complex64::new(1.0, 0.0);
        Ok(Self { space, rho })
    }

    pub fn vacuum(space: Arc<Space>) -> Self {
        Self::basis_projector(space, 0).expect("vacuum is in every basis")
    }

    /// Diagonal state from populations indexed like the basis.
    pub fn from_populations(space: Arc<Space>, pops: &[f64]) -> Result<Self> {
        let d = space.dim();
        if pops.len() != d {
            return Err(Error::Dimension(format!("{} populations for dimension {d}", pops.len())));
        }
        let mut rho = DMatrix::zeros(d, d);
        for (a, &p) in pops.iter().enumerate() {
            rho[(a, a)] = Complex64::new(p, 0.0);
        }
        Ok(Self { space, rho })
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn n(&self) -> usize {
        self.space.n()
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.rho
    }

    /// Column-major vectorization.
    pub fn as_vec(&self) -> &[Complex64] {
        self.rho.as_slice()
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for b in 0..d {
            for a in 0..=b {
                worst = worst.max((self.rho[(a, b)] - self.rho[(b, a)].conj()).norm());
            }
        }
        worst
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|a| self.rho[(a, a)].re).collect()
    }

    /// Population of configuration `s`, zero if outside the basis.
    pub fn population(&self, s: u64) -> f64 {
        self.space.find(s).map_or(0.0, |a| self.rho[(a, a)].re)
    }

    /// Sum of `|rho_ab|` over `a != b`.
    pub fn off_diagonal_mass(&self) -> f64 {
        let d = self.dim();
        let mut m = 0.0;
        for b in 0..d {
            for a in 0..d {
                if a != b {
                    m += self.rho[(a, b)].norm();
                }
            }
        }
        m
    }

    pub fn purity(&self) -> f64 {
        overlap(self, self).expect("same space").re
    }

    /// Hilbert-Schmidt norm.
    pub fn norm(&self) -> f64 {
        self.rho.norm()
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.rho + self.rho.adjoint()) * Complex64::new(0.5, 0.0);
        h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Embeds into the full 2^N basis.
    pub fn to_full(&self, g: &Graph) -> Result<DensityVec> {
        if self.space.kind() == SpaceKind::Full {
            return Ok(self.clone());
        }
        let full = Arc::new(Space::new(g, SpaceKind::Full)?);
        let d = full.dim();
        let mut rho = DMatrix::zeros(d, d);
        for b in 0..self.dim() {
            for a in 0..self.dim() {
                rho[(self.space.state(a) as usize, self.space.state(b) as usize)] = self.rho[(a, b)];
            }
        }
        Ok(DensityVec { space: full, rho })
    }

    /// Writes a one-line JSON header followed by the column-major entries as
    /// little-endian `(re, im)` f64 pairs.
    pub fn dump<W: Write>(&self, mut w: W) -> Result<()> {
        let header = DumpHeader {
            format: "misca-density".into(),
            version: 1,
            n: self.n(),
            space: self.space.kind(),
            dim: self.dim(),
            states: self.space.states().to_vec(),
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        for z in self.as_vec() {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads a dump produced by [`DensityVec::dump`] for graph `g`.
    pub fn load<R: Read>(g: &Graph, mut r: R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let nl = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Dimension("density dump has no header line".into()))?;
        let header: DumpHeader = serde_json::from_slice(&bytes[..nl])?;
        if header.format != "misca-density" || header.version != 1 {
            return Err(Error::Dimension(format!(
                "unsupported dump {} v{}",
                header.format, header.version
            )));
        }
        let space = Arc::new(Space::new(g, header.space)?);
        if space.states() != header.states.as_slice() {
            return Err(Error::Dimension("dump basis does not match the graph".into()));
        }
        let body = &bytes[nl + 1..];
        let d = space.dim();
        if body.len() != d * d * 16 {
            return Err(Error::Dimension(format!(
                "dump body has {} bytes, expected {}",
                body.len(),
                d * d * 16
            )));
        }
        let f = |k: usize| f64::from_le_bytes(body[k..k + 8].try_into().expect("8 bytes"));
        let data: Vec<Complex64> = (0..d * d).map(|k| Complex64::new(f(16 * k), f(16 * k + 8))).collect();
        Self::from_matrix(space, DMatrix::from_vec(d, d, data))
    }
}

#[derive(Serialize, Deserialize)]
struct DumpHeader {
    format: String,
    version: u32,
    n: usize,
    space: SpaceKind,
    dim: usize,
    states: Vec<u64>,
}

/// `<<a|b>> = Tr[a^dag b]`.
pub fn overlap(a: &DensityVec, b: &DensityVec) -> Result<Complex64> {
    if a.space.states() != b.space.states() {
        return Err(Error::Dimension(format!(
            "overlap between bases of dimension {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(a.as_vec().iter().zip(b.as_vec()).map(|(x, y)| x.conj() * y).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_open_chain, Config};

    fn chain3() -> (Graph, Arc<Space>) {
        let g = gen_open_chain(3).unwrap();
        let sp = Arc::new(Space::new(&g, SpaceKind::Full).unwrap());
        (g, sp)
    }

    fn idx(s: &str) -> u64 {
        s.parse::<Config>().unwrap().index()
    }

    #[test]
    fn overlaps() {
        let (_, sp) = chain3();
        let a = DensityVec::basis_projector(sp.clone(), idx("101")).unwrap();
        let b = DensityVec::basis_projector(sp.clone(), idx("010")).unwrap();
        assert_eq!(overlap(&a, &a).unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(overlap(&a, &b).unwrap(), Complex64::new(0.0, 0.0));
        let mut pops = vec![0.0; 8];
        pops[idx("101") as usize] = 2.0 / 3.0;
        pops[idx("010") as usize] = 1.0 / 3.0;
        let m = DensityVec::from_populations(sp, &pops).unwrap();
        assert!((m.purity() - 5.0 / 9.0).abs() < 1e-15);
        let other = DensityVec::vacuum(Arc::new(Space::new(&Graph::edgeless(2).unwrap(), SpaceKind::Full).unwrap()));
        assert!(overlap(&m, &other).is_err());
    }

    #[test]
    fn eigenvalues_of_hermitian() {
        let (_, sp) = chain3();
        let mut rho = DMatrix::zeros(8, 8);
        rho[(0, 0)] = Complex64::new(0.5, 0.0);
        rho[(1, 1)] = Complex64::new(0.5, 0.0);
        rho[(0, 1)] = Complex64::new(0.0, 0.6);
        rho[(1, 0)] = Complex64::new(0.0, -0.6);
        let d = DensityVec::from_matrix(sp, rho).unwrap();
        assert!((d.min_eigenvalue() + 0.1).abs() < 1e-12);
        assert!(d.hermiticity_error() < 1e-15);
    }

    #[test]
    fn dump_round_trip_and_embedding() {
        let g = gen_open_chain(4).unwrap();
        let sub = Arc::new(Space::new(&g, SpaceKind::Independent).unwrap());
        let mut rho = DMatrix::zeros(sub.dim(), sub.dim());
        rho[(1, 2)] = Complex64::new(0.25, -0.5);
        rho[(2, 1)] = Complex64::new(0.25, 0.5);
        rho[(0, 0)] = Complex64::new(1.0, 0.0);
        let d = DensityVec::from_matrix(sub, rho).unwrap();
        let mut buf = Vec::new();
        d.dump(&mut buf).unwrap();
        let back = DensityVec::load(&g, buf.as_slice()).unwrap();
        assert_eq!(back.as_vec(), d.as_vec());
        let full = d.to_full(&g).unwrap();
        assert_eq!(full.dim(), 16);
        assert_eq!(full.trace(), d.trace());
        assert!((full.purity() - d.purity()).abs() < 1e-15);
        assert!(DensityVec::load(&g, &buf[..buf.len() - 1]).is_err());
    }
}
