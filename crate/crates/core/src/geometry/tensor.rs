/// Connection coefficients `Γ^Λ_ΠΩ`, stored `[Λ][Π][Ω]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    dim: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn zeros(dim: usize) -> Self {
        Christoffel {
            dim,
            data: vec![0.0; dim * dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, l: usize, p: usize, o: usize) -> f64 {
        self.data[(l * self.dim + p) * self.dim + o]
    }

    #[inline]
    pub fn set(&mut self, l: usize, p: usize, o: usize, v: f64) {
        let d = self.dim;
        self.data[(l * d + p) * d + o] = v;
    }

    /// Sets both `Γ^l_po` and `Γ^l_op`.
    pub fn set_sym(&mut self, l: usize, p: usize, o: usize, v: f64) {
        self.set(l, p, o, v);
        self.set(l, o, p, v);
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn from_vec(dim: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), dim * dim * dim);
        Christoffel { dim, data }
    }

    /// `Γ^Λ_ΠΩ a^Π b^Ω`.
    pub fn contract(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d)
            .map(|l| {
                let mut s = 0.0;
                for p in 0..d {
                    if a[p] == 0.0 {
                        continue;
                    }
                    for o in 0..d {
                        s += self.get(l, p, o) * a[p] * b[o];
                    }
                }
                s
            })
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Dense rank-4 array indexed `[a][b][c][d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rank4 {
    dim: usize,
    data: Vec<f64>,
}

impl Rank4 {
    pub fn zeros(dim: usize) -> Self {
        Rank4 {
            dim,
            data: vec![0.0; dim.pow(4)],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn idx(&self, a: usize, b: usize, c: usize, d: usize) -> usize {
        ((a * self.dim + b) * self.dim + c) * self.dim + d
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.data[self.idx(a, b, c, d)]
    }

    #[inline]
    pub fn set(&mut self, a: usize, b: usize, c: usize, d: usize, v: f64) {
        let i = self.idx(a, b, c, d);
        self.data[i] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest absolute entrywise difference.
    pub fn max_diff(&self, other: &Rank4) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Contracts slot `slot` with the matrix `e`:
    /// `out[..A..] = Σ_a self[..a..] e[a][A]`.
    pub fn contract_slot(&self, slot: usize, e: &crate::linalg::Mat) -> Rank4 {
        let d = self.dim;
        let mut out = Rank4::zeros(d);
        let mut ix = [0usize; 4];
        for flat in 0..self.data.len() {
            let mut rem = flat;
            for k in (0..4).rev() {
                ix[k] = rem % d;
                rem /= d;
            }
            let target = ix[slot];
            let mut s = 0.0;
            let mut src = ix;
            for a in 0..d {
                src[slot] = a;
                s += self.get(src[0], src[1], src[2], src[3]) * e[(a, target)];
            }
            out.data[flat] = s;
        }
        out
    }

    /// Relative violations of the algebraic Riemann symmetries of a fully
    /// lowered tensor, each scaled by the largest component.
    pub fn symmetry_report(&self) -> SymmetryReport {
        let d = self.dim;
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        let mut r = SymmetryReport::default();
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    for e in 0..d {
                        let v = self.get(a, b, c, e);
                        r.first_pair = r.first_pair.max((v + self.get(b, a, c, e)).abs());
                        r.second_pair = r.second_pair.max((v + self.get(a, b, e, c)).abs());
                        r.pair_exchange = r.pair_exchange.max((v - self.get(c, e, a, b)).abs());
                        let cyc = v + self.get(a, c, e, b) + self.get(a, e, b, c);
                        r.bianchi = r.bianchi.max(cyc.abs());
                    }
                }
            }
        }
        r.first_pair /= scale;
        r.second_pair /= scale;
        r.pair_exchange /= scale;
        r.bianchi /= scale;
        r
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SymmetryReport {
    pub first_pair: f64,
    pub second_pair: f64,
    pub pair_exchange: f64,
    pub bianchi: f64,
}

impl SymmetryReport {
    pub fn max(&self) -> f64 {
        self.first_pair
            .max(self.second_pair)
            .max(self.pair_exchange)
            .max(self.bianchi)
    }
}
