use crate::error::{Error, Result};

/// A time series of fixed-dimension feature frames stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    dim: usize,
    data: Vec<f64>,
}

impl Track {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() % dim != 0 {
            return Err(Error::Dimension {
                context: "track data length",
                expected: dim,
                got: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    pub fn zeros(dim: usize, len: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * len],
        }
    }

    pub fn from_frames<I, F>(dim: usize, frames: I) -> Result<Self>
    where
        I: IntoIterator<Item = F>,
        F: AsRef<[f64]>,
    {
        let mut data = Vec::new();
        for f in frames {
            let f = f.as_ref();
            if f.len() != dim {
                return Err(Error::Dimension {
                    context: "track frame",
                    expected: dim,
                    got: f.len(),
                });
            }
            data.extend_from_slice(f);
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn frame_mut(&mut self, t: usize) -> &mut [f64] {
        &mut self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn frames(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn push(&mut self, frame: &[f64]) {
        assert_eq!(frame.len(), self.dim);
        self.data.extend_from_slice(frame);
    }

    /// Frames `start..start + len`, copied.
    pub fn slice(&self, start: usize, len: usize) -> Track {
        Track {
            dim: self.dim,
            data: self.data[start * self.dim..(start + len) * self.dim].to_vec(),
        }
    }

    /// Copy of channel `c` over time.
    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.frames().map(|f| f[c]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Flattened window of `len` frames ending at `end` (exclusive),
    /// zero-padded for indices before the start of the track.
    pub fn window_into(&self, end: usize, len: usize, out: &mut Vec<f64>) {
        out.clear();
        out.resize(len * self.dim, 0.0);
        for i in 0..len {
            let t = end as isize - len as isize + i as isize;
            if t >= 0 {
                out[i * self.dim..(i + 1) * self.dim].copy_from_slice(self.frame(t as usize));
            }
        }
    }
}
