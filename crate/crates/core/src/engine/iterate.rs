/// The quadruple `(y, w_Q, z, x)` together with the products the solver keeps
/// alongside it. `w` is the shadow of the dual variable on `Range(Q)`; only
/// `Q w` is meaningful.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateBundle {
    pub y: Vec<f64>,
    pub w: Vec<f64>,
    pub z: Vec<f64>,
    pub x: Vec<f64>,
    /// `Q w`
    pub qw: Vec<f64>,
    /// `A x`
    pub ax: Vec<f64>,
    /// `A^T y`
    pub aty: Vec<f64>,
}

impl IterateBundle {
    pub fn zeros(m: usize, n: usize) -> Self {
        IterateBundle {
            y: vec![0.0; m],
            w: vec![0.0; n],
            z: vec![0.0; n],
            x: vec![0.0; n],
            qw: vec![0.0; n],
            ax: vec![0.0; m],
            aty: vec![0.0; n],
        }
    }

    pub fn m(&self) -> usize {
        self.y.len()
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    /// Name of the first block holding a non-finite entry.
    pub fn non_finite_block(&self) -> Option<&'static str> {
        let blocks: [(&'static str, &Vec<f64>); 7] = [
            ("y", &self.y),
            ("w", &self.w),
            ("z", &self.z),
            ("x", &self.x),
            ("Qw", &self.qw),
            ("Ax", &self.ax),
            ("A^T y", &self.aty),
        ];
        blocks
            .into_iter()
            .find(|(_, v)| !crate::linalg::all_finite(v))
            .map(|(name, _)| name)
    }
}

/// `out = anchor/(t+2) + (t+1)/(t+2) * hat`
#[cfg(test)]
pub(crate) fn halpern_into(out: &mut [f64], anchor: &[f64], hat: &[f64], t: usize) {
    let w0 = 1.0 / (t as f64 + 2.0);
    let w1 = (t as f64 + 1.0) / (t as f64 + 2.0);
    for i in 0..out.len() {
        out[i] = w0 * anchor[i] + w1 * hat[i];
    }
}

/// `u <- anchor/(t+2) + (t+1)/(t+2) * (2 bar - u)` in place.
pub(crate) fn reflect_and_average(u: &mut [f64], bar: &[f64], anchor: &[f64], t: usize) {
    let w0 = 1.0 / (t as f64 + 2.0);
    let w1 = (t as f64 + 1.0) / (t as f64 + 2.0);
    for i in 0..u.len() {
        let hat = 2.0 * bar[i] - u[i];
        u[i] = w0 * anchor[i] + w1 * hat;
    }
}
