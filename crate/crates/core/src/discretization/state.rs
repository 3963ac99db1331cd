/// Discrete phase-space state, cell-major.
///
/// Each position cell holds one block of `n_local` values: for every light
/// species `i` and velocity node `q` the ratio `U_i = f_i / (eta_i M_i)`, then
/// the density `rho_i` of every heavy species. The block layout is owned by
/// [`PhaseSpace`](super::PhaseSpace).
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseState {
    data: Vec<f64>,
    n_local: usize,
}

impl PhaseState {
    pub fn zeros(n_cells: usize, n_local: usize) -> Self {
        Self { data: vec![0.0; n_cells * n_local], n_local }
    }

    pub fn from_vec(data: Vec<f64>, n_local: usize) -> Self {
        assert_eq!(data.len() % n_local, 0, "state length must be a multiple of the block size");
        Self { data, n_local }
    }

    pub fn n_local(&self) -> usize {
        self.n_local
    }

    pub fn n_cells(&self) -> usize {
        self.data.len() / self.n_local
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn cell(&self, c: usize) -> &[f64] {
        &self.data[c * self.n_local..(c + 1) * self.n_local]
    }

    pub fn cell_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.data[c * self.n_local..(c + 1) * self.n_local]
    }

    pub fn get(&self, c: usize, entry: usize) -> f64 {
        self.data[c * self.n_local + entry]
    }

    pub fn set(&mut self, c: usize, entry: usize, value: f64) {
        self.data[c * self.n_local + entry] = value;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// `self - other`.
    pub fn difference(&self, other: &Self) -> Self {
        assert_eq!(self.data.len(), other.data.len());
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Self { data, n_local: self.n_local }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { data: self.data.iter().map(|x| c * x).collect(), n_local: self.n_local }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}
