use crate::error::{Error, Result};

/// Dense row-major `f64` buffer with a shape.
///
/// Used for parameters, gradients and optimizer accumulators alike.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        validate_shape(&shape)?;
        let len: usize = shape.iter().product();
        if data.len() != len {
            return Err(Error::argument(format!(
                "buffer of length {} does not fit shape {:?} ({} elements)",
                data.len(),
                shape,
                len
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        Self::full(shape, 0.0)
    }

    pub fn full(shape: &[usize], value: f64) -> Result<Self> {
        validate_shape(shape)?;
        let len = shape.iter().product();
        Ok(Self {
            shape: shape.to_vec(),
            data: vec![value; len],
        })
    }

    /// One-dimensional tensor holding `data`.
    pub fn from_vec(data: Vec<f64>) -> Result<Self> {
        Self::new(vec![data.len()], data)
    }

    pub fn scalar(value: f64) -> Self {
        Self {
            shape: vec![1],
            data: vec![value],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Largest absolute entry. NaN entries propagate as NaN.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |acc, &x| {
            if acc.is_nan() || x.is_nan() {
                f64::NAN
            } else {
                acc.max(x.abs())
            }
        })
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

fn validate_shape(shape: &[usize]) -> Result<()> {
    if shape.is_empty() {
        return Err(Error::argument(
            "tensor shape must have at least one dimension",
        ));
    }
    if shape.contains(&0) {
        return Err(Error::argument(format!(
            "tensor shape {shape:?} has a zero dimension"
        )));
    }
    Ok(())
}
