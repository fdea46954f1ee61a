use super::Jet;

/// Dense array of jets with arbitrary rank, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct JetTensor {
    shape: Vec<usize>,
    data: Vec<Jet>,
}

impl JetTensor {
    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> Jet) -> Self {
        let len: usize = shape.iter().product();
        let mut data = Vec::with_capacity(len);
        let mut idx = vec![0usize; shape.len()];
        for _ in 0..len {
            data.push(f(&idx));
            for k in (0..shape.len()).rev() {
                idx[k] += 1;
                if idx[k] < shape[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        JetTensor {
            shape: shape.to_vec(),
            data,
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<Jet>) -> Self {
        assert_eq!(shape.iter().product::<usize>(), data.len());
        JetTensor {
            shape: shape.to_vec(),
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        idx.iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &n)| {
                debug_assert!(i < n);
                acc * n + i
            })
    }

    pub fn get(&self, idx: &[usize]) -> &Jet {
        &self.data[self.offset(idx)]
    }

    pub fn entries(&self) -> &[Jet] {
        &self.data
    }

    pub fn order(&self) -> usize {
        self.data.iter().map(Jet::order).min().unwrap_or(0)
    }

    pub fn map(&self, f: impl Fn(&Jet) -> Jet) -> Self {
        JetTensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn truncate(&self, order: usize) -> Self {
        self.map(|x| x.truncate(order))
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|x| x.scale(c))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|j| j.value().abs()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &JetTensor) -> f64 {
        assert_eq!(self.shape, other.shape);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a.value() - b.value()).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff_jets(&self, other: &JetTensor) -> f64 {
        assert_eq!(self.shape, other.shape);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }

    /// Values flattened in row-major order.
    pub fn values(&self) -> Vec<f64> {
        self.data.iter().map(Jet::value).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_indexing() {
        let t = JetTensor::from_fn(&[2, 3], |i| Jet::constant(1, 0, (10 * i[0] + i[1]) as f64));
        assert_eq!(t.get(&[1, 2]).value(), 12.0);
        assert_eq!(t.values(), vec![0.0, 1.0, 2.0, 10.0, 11.0, 12.0]);
    }
}
