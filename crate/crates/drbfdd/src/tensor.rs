//! Dense row-major f64 tensor, the value type every layer operates on.

use crate::error::{Error, Result};

/// A dense tensor: explicit shape plus flat row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    /// Builds a tensor, checking that `data.len()` equals the shape product.
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::ShapeMismatch {
                op: "Tensor::new",
                detail: format!(
                    "shape {:?} implies {} elements, got {}",
                    shape,
                    expected,
                    data.len()
                ),
            });
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let n: usize = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; n],
        }
    }

    pub fn filled(shape: &[usize], value: f64) -> Self {
        let n: usize = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![value; n],
        }
    }

    /// 1-D tensor from a flat vector.
    pub fn from_vec(data: Vec<f64>) -> Self {
        Tensor {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
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

    /// Reinterprets the storage under a new shape with the same element count.
    pub fn reshape(mut self, shape: Vec<usize>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != self.data.len() {
            return Err(Error::ShapeMismatch {
                op: "Tensor::reshape",
                detail: format!("cannot view {:?} as {:?}", self.shape, shape),
            });
        }
        self.shape = shape;
        Ok(self)
    }

    /// Number of elements in one slice along axis 0.
    pub fn stride0(&self) -> usize {
        self.shape.iter().skip(1).product()
    }

    /// Contiguous view of the `i`-th slice along axis 0 (e.g. one sample of a batch).
    pub fn index0(&self, i: usize) -> &[f64] {
        let s = self.stride0();
        &self.data[i * s..(i + 1) * s]
    }

    /// Stacks same-shaped slices along a new leading axis.
    pub fn stack(rows: &[&[f64]], row_shape: &[usize]) -> Result<Self> {
        let per: usize = row_shape.iter().product();
        let mut data = Vec::with_capacity(per * rows.len());
        for (i, r) in rows.iter().enumerate() {
            if r.len() != per {
                return Err(Error::ShapeMismatch {
                    op: "Tensor::stack",
                    detail: format!("row {} has {} elements, expected {}", i, r.len(), per),
                });
            }
            data.extend_from_slice(r);
        }
        let mut shape = Vec::with_capacity(row_shape.len() + 1);
        shape.push(rows.len());
        shape.extend_from_slice(row_shape);
        Ok(Tensor { shape, data })
    }

    /// Gathers slices along axis 0, producing a new tensor with the same trailing shape.
    pub fn gather0(&self, indices: &[usize]) -> Tensor {
        let s = self.stride0();
        let mut data = Vec::with_capacity(indices.len() * s);
        for &i in indices {
            data.extend_from_slice(self.index0(i));
        }
        let mut shape = self.shape.clone();
        shape[0] = indices.len();
        Tensor { shape, data }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Gradient bundle for one layer: gradient of the loss with respect to the
/// layer input, plus one tensor per layer parameter (same shapes as the
/// parameters, in declaration order; empty for parameterless layers).
#[derive(Debug, Clone)]
pub struct LayerGrad {
    pub grad_input: Tensor,
    pub grad_params: Vec<Tensor>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_rejects_wrong_length() {
        assert!(Tensor::new(vec![2, 3], vec![0.0; 5]).is_err());
        assert!(Tensor::new(vec![2, 3], vec![0.0; 6]).is_ok());
    }

    #[test]
    fn index0_slices_samples() {
        let t = Tensor::new(vec![2, 3], vec![1., 2., 3., 4., 5., 6.]).unwrap();
        assert_eq!(t.index0(0), &[1., 2., 3.]);
        assert_eq!(t.index0(1), &[4., 5., 6.]);
    }

    #[test]
    fn gather0_reorders() {
        let t = Tensor::new(vec![3, 2], vec![1., 2., 3., 4., 5., 6.]).unwrap();
        let g = t.gather0(&[2, 0]);
        assert_eq!(g.shape(), &[2, 2]);
        assert_eq!(g.data(), &[5., 6., 1., 2.]);
    }

    #[test]
    fn stack_checks_row_length() {
        let a = [1.0, 2.0];
        let b = [3.0];
        assert!(Tensor::stack(&[&a, &b], &[2]).is_err());
        let t = Tensor::stack(&[&a, &a], &[2]).unwrap();
        assert_eq!(t.shape(), &[2, 2]);
    }
}
