use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream for one path: the key is `(master_seed, substream)`, the ChaCha stream
/// id is the path index. Draws never depend on which thread simulates the path.
pub fn path_rng(master_seed: u64, path_index: u64, substream: u32) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..12].copy_from_slice(&substream.to_le_bytes());
    key[12..16].copy_from_slice(b"mxrp");
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(path_index);
    rng
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Mean and standard error of the mean (sample variance with `n - 1`).
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mut s = KahanSum::default();
    xs.iter().for_each(|&x| s.add(x));
    let mean = s.value() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let mut ss = KahanSum::default();
    xs.iter().for_each(|&x| ss.add((x - mean) * (x - mean)));
    let var = ss.value() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_keyed() {
        let a: u64 = path_rng(7, 3, 0).random();
        let b: u64 = path_rng(7, 3, 0).random();
        let c: u64 = path_rng(7, 4, 0).random();
        let d: u64 = path_rng(7, 3, 1).random();
        let e: u64 = path_rng(8, 3, 0).random();
        assert_eq!(a, b);
        assert!(a != c && a != d && a != e);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = KahanSum::default();
        s.add(1e16);
        for _ in 0..10 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 10.0);
    }

    #[test]
    fn mean_se_of_constant() {
        assert_eq!(mean_se(&[2.0; 5]), (2.0, 0.0));
    }
}
