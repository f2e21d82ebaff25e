//! Arithmetic in the ring `Z_q` for `q <= 255`.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Zq {
    pub q: u8,
}

impl Zq {
    pub fn new(q: u8) -> Self {
        assert!(q >= 2, "modulus must be at least 2");
        Self { q }
    }

    #[inline]
    pub fn add(self, a: u8, b: u8) -> u8 {
        ((a as u16 + b as u16) % self.q as u16) as u8
    }

    #[inline]
    pub fn sub(self, a: u8, b: u8) -> u8 {
        ((a as u16 + self.q as u16 - b as u16) % self.q as u16) as u8
    }

    #[inline]
    pub fn neg(self, a: u8) -> u8 {
        if a == 0 {
            0
        } else {
            self.q - a
        }
    }

    #[inline]
    pub fn mul(self, a: u8, b: u8) -> u8 {
        ((a as u16 * b as u16) % self.q as u16) as u8
    }

    pub fn is_unit(self, a: u8) -> bool {
        gcd(a as u16, self.q as u16) == 1
    }

    /// Multiplicative inverse of a unit.
    pub fn inv(self, a: u8) -> Option<u8> {
        if !self.is_unit(a) {
            return None;
        }
        (1..self.q).find(|&b| self.mul(a, b) == 1)
    }
}

fn gcd(mut a: u16, mut b: u16) -> u16 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}
