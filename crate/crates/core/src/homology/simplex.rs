//! Combinatorial-number-system indexing of simplices and prime-field helpers.

/// Binomial coefficients `C(v, k)` for `v ≤ n`, `k ≤ max_k`.
#[derive(Debug, Clone)]
pub struct Binomial {
    max_k: usize,
    table: Vec<u64>,
}

impl Binomial {
    pub fn new(n: usize, max_k: usize) -> Self {
        let width = max_k + 1;
        let mut table = vec![0u64; (n + 1) * width];
        for v in 0..=n {
            table[v * width] = 1;
            for k in 1..=max_k.min(v) {
                let a = table[(v - 1) * width + k - 1];
                let b = if k <= v - 1 { table[(v - 1) * width + k] } else { 0 };
                table[v * width + k] = a.saturating_add(b);
            }
        }
        Self { max_k, table }
    }

    #[inline]
    pub fn get(&self, v: usize, k: usize) -> u64 {
        if k > v {
            0
        } else {
            self.table[v * (self.max_k + 1) + k]
        }
    }

    /// Index of the simplex with vertices sorted in decreasing order.
    #[inline]
    pub fn index(&self, desc: &[usize]) -> u64 {
        let k = desc.len();
        desc.iter().enumerate().map(|(j, &w)| self.get(w, k - j)).sum()
    }

    /// Vertices (decreasing) of the `dim`-simplex with the given index.
    pub fn vertices(&self, mut index: u64, dim: usize, n: usize, out: &mut Vec<usize>) {
        out.clear();
        let mut top = n;
        for k in (1..=dim + 1).rev() {
            // Largest w < top with C(w, k) ≤ index.
            let (mut lo, mut hi) = (k - 1, top);
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                if self.get(mid, k) <= index {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push(lo);
            index -= self.get(lo, k);
            top = lo;
        }
    }
}

/// Multiplicative inverses in `F_p`.
#[derive(Debug, Clone)]
pub struct PrimeField {
    p: u64,
}

impl PrimeField {
    pub fn new(p: u32) -> Self {
        Self { p: p as u64 }
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        (a + b) % self.p
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        (a * b) % self.p
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        (self.p - a % self.p) % self.p
    }

    pub fn inv(&self, a: u64) -> u64 {
        let mut result = 1u64;
        let mut base = a % self.p;
        let mut e = self.p - 2;
        while e > 0 {
            if e & 1 == 1 {
                result = result * base % self.p;
            }
            base = base * base % self.p;
            e >>= 1;
        }
        result
    }

    /// Reduces a signed integer into `0..p`.
    #[inline]
    pub fn from_i64(&self, a: i64) -> u64 {
        a.rem_euclid(self.p as i64) as u64
    }
}

pub fn is_prime(p: u32) -> bool {
    if p < 2 {
        return false;
    }
    let mut k = 2u32;
    while (k as u64) * (k as u64) <= p as u64 {
        if p % k == 0 {
            return false;
        }
        k += 1;
    }
    true
}
