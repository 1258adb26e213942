/// Little-endian mixed-radix indexing: digit 0 varies fastest.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Radix {
    sizes: Vec<usize>,
    total: usize,
}

impl Radix {
    pub fn new(sizes: &[usize]) -> Self {
        let total = sizes.iter().product();
        Self {
            sizes: sizes.to_vec(),
            total,
        }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn index(&self, digits: &[usize]) -> usize {
        debug_assert_eq!(digits.len(), self.sizes.len());
        digits
            .iter()
            .zip(&self.sizes)
            .rev()
            .fold(0, |acc, (&d, &s)| acc * s + d)
    }

    pub fn digits(&self, index: usize) -> Vec<usize> {
        let mut out = vec![0; self.sizes.len()];
        self.decode_into(index, &mut out);
        out
    }

    pub fn decode_into(&self, mut index: usize, out: &mut [usize]) {
        for (d, &s) in out.iter_mut().zip(&self.sizes) {
            *d = index % s;
            index /= s;
        }
    }

    pub fn contains(&self, digits: &[usize]) -> bool {
        digits.len() == self.sizes.len() && digits.iter().zip(&self.sizes).all(|(d, s)| d < s)
    }

    pub fn iter(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.total).map(|i| self.digits(i))
    }
}
