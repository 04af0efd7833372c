//! Stable 64-bit FNV-1a digests used to tag results with their inputs.

use alloc::format;
use alloc::string::String;

use crate::lattice::Lattice;
use crate::potential::FourierPotential;

const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const PRIME: u64 = 0x0000_0100_0000_01b3;

#[derive(Clone, Copy, Debug)]
pub struct Fnv64(u64);

impl Default for Fnv64 {
    fn default() -> Self {
        Fnv64(OFFSET)
    }
}

impl Fnv64 {
    pub fn bytes(&mut self, bytes: &[u8]) -> &mut Self {
        for b in bytes {
            self.0 ^= *b as u64;
            self.0 = self.0.wrapping_mul(PRIME);
        }
        self
    }

    pub fn u64(&mut self, x: u64) -> &mut Self {
        self.bytes(&x.to_le_bytes())
    }

    pub fn f64(&mut self, x: f64) -> &mut Self {
        self.u64(x.to_bits())
    }

    pub fn finish(&self) -> u64 {
        self.0
    }

    pub fn hex(&self) -> String {
        format!("{:016x}", self.0)
    }
}

pub fn lattice_digest(lat: &Lattice) -> String {
    let mut h = Fnv64::default();
    h.u64(lat.dim() as u64);
    for x in lat.to_row_major() {
        h.f64(x);
    }
    h.hex()
}

pub fn potential_digest(v: &FourierPotential) -> String {
    let mut h = Fnv64::default();
    h.bytes(lattice_digest(v.lattice()).as_bytes());
    h.u64(v.is_real_valued() as u64);
    for (g, c) in v.coeffs() {
        for n in g.0 {
            h.u64(n as i64 as u64);
        }
        h.f64(c.re).f64(c.im);
    }
    h.hex()
}
