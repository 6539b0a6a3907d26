use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major array of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NdArray {
    shape: Vec<usize>,
    data: Vec<f64>,
}

/// Linear maps applied to every 1-D fiber along one axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisOp {
    /// Collapse the axis to length 1 by summing.
    Sum,
    /// `v[1:] - v[0]`; shortens the axis by one.
    Sub,
    /// Pad with a leading zero and subtract the mean; lengthens the axis by one.
    Center,
    /// Spread a length-1 axis evenly over `k` entries.
    Smear(usize),
}

impl NdArray {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::ShapeMismatch {
                expected: shape,
                found: vec![data.len()],
            });
        }
        Ok(NdArray { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        NdArray {
            shape,
            data: vec![0.0; n],
        }
    }

    /// Zero-dimensional array holding one value.
    pub fn scalar(v: f64) -> Self {
        NdArray {
            shape: Vec::new(),
            data: vec![v],
        }
    }

    pub fn from_vec(data: Vec<f64>) -> Self {
        NdArray {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ndim(&self) -> usize {
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

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Reinterpret the buffer with a new shape of equal size.
    pub fn reshape(mut self, shape: Vec<usize>) -> Result<Self> {
        if shape.iter().product::<usize>() != self.data.len() {
            return Err(Error::ShapeMismatch {
                expected: shape,
                found: self.shape,
            });
        }
        self.shape = shape;
        Ok(self)
    }

    fn check_same_shape(&self, other: &NdArray) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch {
                expected: self.shape.clone(),
                found: other.shape.clone(),
            });
        }
        Ok(())
    }

    pub fn add_assign(&mut self, other: &NdArray) -> Result<()> {
        self.check_same_shape(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &NdArray) -> Result<()> {
        self.check_same_shape(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn sub(&self, other: &NdArray) -> Result<NdArray> {
        self.check_same_shape(other)?;
        Ok(NdArray {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn scale(&mut self, c: f64) {
        self.data.iter_mut().for_each(|v| *v *= c);
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn l1_norm(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &NdArray) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    /// Apply `op` to every fiber along `axis`.
    pub fn apply(&self, axis: usize, op: AxisOp) -> Result<NdArray> {
        apply_axis_op(self, axis, op)
    }
}

/// Apply an in-axis operation along `axis`, returning a new array.
pub fn apply_axis_op(arr: &NdArray, axis: usize, op: AxisOp) -> Result<NdArray> {
    if axis >= arr.ndim() {
        return Err(Error::AxisOutOfRange { axis, ndim: arr.ndim() });
    }
    let len = arr.shape[axis];
    let outer: usize = arr.shape[..axis].iter().product();
    let inner: usize = arr.shape[axis + 1..].iter().product();
    let out_len = match op {
        AxisOp::Sum => 1,
        AxisOp::Sub => {
            if len < 2 {
                return Err(Error::InvalidAxisOp(format!("sub needs axis length >= 2, got {len}")));
            }
            len - 1
        }
        AxisOp::Center => len + 1,
        AxisOp::Smear(k) => {
            if len != 1 || k == 0 {
                return Err(Error::InvalidAxisOp(format!(
                    "smear({k}) needs a singleton axis and k >= 1, got axis length {len}"
                )));
            }
            k
        }
    };

    let src = &arr.data;
    let mut out = vec![0.0; outer * out_len * inner];
    for o in 0..outer {
        let s = &src[o * len * inner..(o + 1) * len * inner];
        let d = &mut out[o * out_len * inner..(o + 1) * out_len * inner];
        match op {
            AxisOp::Sum => {
                for j in 0..len {
                    let row = &s[j * inner..(j + 1) * inner];
                    for (acc, v) in d.iter_mut().zip(row) {
                        *acc += v;
                    }
                }
            }
            AxisOp::Sub => {
                let first = &s[..inner];
                for j in 0..out_len {
                    let row = &s[(j + 1) * inner..(j + 2) * inner];
                    let dst = &mut d[j * inner..(j + 1) * inner];
                    for ((t, v), f) in dst.iter_mut().zip(row).zip(first) {
                        *t = v - f;
                    }
                }
            }
            AxisOp::Center => {
                // mean over the padded fiber [0, v]
                let (head, tail) = d.split_at_mut(inner);
                for j in 0..len {
                    let row = &s[j * inner..(j + 1) * inner];
                    for (acc, v) in head.iter_mut().zip(row) {
                        *acc += v;
                    }
                }
                let scale = 1.0 / out_len as f64;
                head.iter_mut().for_each(|m| *m *= -scale);
                for j in 0..len {
                    let row = &s[j * inner..(j + 1) * inner];
                    let dst = &mut tail[j * inner..(j + 1) * inner];
                    for ((t, v), m) in dst.iter_mut().zip(row).zip(head.iter()) {
                        *t = v + m;
                    }
                }
            }
            AxisOp::Smear(k) => {
                let scale = 1.0 / k as f64;
                for j in 0..k {
                    let dst = &mut d[j * inner..(j + 1) * inner];
                    for (t, v) in dst.iter_mut().zip(s) {
                        *t = v * scale;
                    }
                }
            }
        }
    }
    let mut shape = arr.shape.clone();
    shape[axis] = out_len;
    Ok(NdArray { shape, data: out })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn one_dimensional_ops() {
        let v = NdArray::from_vec(vec![14., 19., 23., 44.]);
        assert_eq!(v.apply(0, AxisOp::Sub).unwrap().data(), &[5., 9., 30.]);

        let r = NdArray::from_vec(vec![5., 9., 30.]);
        assert!(close(
            r.apply(0, AxisOp::Center).unwrap().data(),
            &[-11., -6., -2., 19.]
        ));

        let s = NdArray::from_vec(vec![100.]);
        let sm = s.apply(0, AxisOp::Smear(3)).unwrap();
        assert!(close(sm.data(), &[100. / 3.; 3]));

        let t = NdArray::from_vec(vec![29., 30., 41.]);
        assert_eq!(t.apply(0, AxisOp::Sum).unwrap().data(), &[100.]);
    }

    #[test]
    fn ops_act_on_the_requested_axis() {
        let a = NdArray::new(vec![2, 3], vec![1., 2., 4., 10., 20., 40.]).unwrap();
        let s0 = a.apply(0, AxisOp::Sum).unwrap();
        assert_eq!(s0.shape(), &[1, 3]);
        assert_eq!(s0.data(), &[11., 22., 44.]);
        let d1 = a.apply(1, AxisOp::Sub).unwrap();
        assert_eq!(d1.shape(), &[2, 2]);
        assert_eq!(d1.data(), &[1., 3., 10., 30.]);
        let d0 = a.apply(0, AxisOp::Sub).unwrap();
        assert_eq!(d0.data(), &[9., 18., 36.]);
    }

    #[test]
    fn axis_op_errors() {
        let a = NdArray::from_vec(vec![1., 2.]);
        assert!(matches!(a.apply(1, AxisOp::Sum), Err(Error::AxisOutOfRange { .. })));
        assert!(a.apply(0, AxisOp::Smear(2)).is_err());
        let one = NdArray::from_vec(vec![1.]);
        assert!(one.apply(0, AxisOp::Sub).is_err());
        assert!(one.apply(0, AxisOp::Smear(0)).is_err());
    }

    #[test]
    fn sub_then_center_is_a_projection() {
        // center is the pseudoinverse of sub: sub(center(v)) == v
        let v = NdArray::from_vec(vec![0.3, -1.2, 7.0, 2.5]);
        let back = v.apply(0, AxisOp::Center).unwrap().apply(0, AxisOp::Sub).unwrap();
        assert!(close(back.data(), v.data()));
    }
}
