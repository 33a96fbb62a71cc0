// Copyright 2026 The fas Authors
// SPDX-License-Identifier: Apache-2.0

//! Paillier encryption with `g = n + 1`.

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::algebra::{mod_inv, random_prime};
use crate::encoding::hex_biguint;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhePublicKey {
    #[serde(with = "hex_biguint")]
    pub n: BigUint,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhePrivateKey {
    lambda: BigUint,
    mu: BigUint,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PheKeypair {
    pub public: PhePublicKey,
    private: PhePrivateKey,
}

/// A ciphertext in `[0, n^2)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PheCiphertext(#[serde(with = "hex_biguint")] pub BigUint);

impl PhePublicKey {
    pub fn n_squared(&self) -> BigUint {
        &self.n * &self.n
    }

    pub fn generator(&self) -> BigUint {
        &self.n + 1u32
    }

    /// `Enc(m; rho) = g^m * rho^n mod n^2`.
    pub fn encrypt_with(&self, m: &BigUint, rho: &BigUint) -> Result<PheCiphertext> {
        if m >= &self.n {
            return Err(Error::param("plaintext must be below n"));
        }
        if rho.is_zero() || !rho.gcd(&self.n).is_one() {
            return Err(Error::NonInvertible);
        }
        let nn = self.n_squared();
        // (n + 1)^m = 1 + m n (mod n^2)
        let gm = (BigUint::one() + m * &self.n) % &nn;
        Ok(PheCiphertext(gm * rho.modpow(&self.n, &nn) % nn))
    }

    /// Encrypts with fresh randomness, resampling `rho` until it is a unit.
    pub fn encrypt<R: RngCore + ?Sized>(&self, m: &BigUint, rng: &mut R) -> Result<PheCiphertext> {
        loop {
            let rho = rng.gen_biguint_range(&BigUint::one(), &self.n);
            match self.encrypt_with(m, &rho) {
                Err(Error::NonInvertible) => continue,
                other => return other,
            }
        }
    }

    /// `Enc(a) * Enc(b)` decrypts to `a + b mod n`.
    pub fn add(&self, a: &PheCiphertext, b: &PheCiphertext) -> PheCiphertext {
        PheCiphertext(&a.0 * &b.0 % self.n_squared())
    }

    /// `Enc(a)^k` decrypts to `k * a mod n`.
    pub fn scale(&self, c: &PheCiphertext, k: &BigUint) -> PheCiphertext {
        PheCiphertext(c.0.modpow(k, &self.n_squared()))
    }

    /// `Enc(0; 1)`, the additive identity.
    pub fn zero(&self) -> PheCiphertext {
        PheCiphertext(BigUint::one())
    }
}

impl PheKeypair {
    /// Random keypair whose modulus has exactly `bits` bits.
    pub fn generate<R: RngCore + ?Sized>(bits: u64, rng: &mut R) -> Result<Self> {
        if bits < 16 {
            return Err(Error::param("Paillier modulus must have at least 16 bits"));
        }
        loop {
            let p = random_prime(bits / 2, rng)?;
            let q = random_prime(bits - bits / 2, rng)?;
            if p == q || (&p * &q).bits() != bits {
                continue;
            }
            if let Ok(kp) = Self::from_primes(&p, &q) {
                return Ok(kp);
            }
        }
    }

    /// Keypair from explicit primes; `lambda = lcm(p-1, q-1)`, `mu = L(g^lambda mod n^2)^-1 mod n`.
    pub fn from_primes(p: &BigUint, q: &BigUint) -> Result<Self> {
        if p == q {
            return Err(Error::param("Paillier primes must differ"));
        }
        let n = p * q;
        let phi = (p - 1u32) * (q - 1u32);
        if !n.gcd(&phi).is_one() {
            return Err(Error::param("gcd(n, phi(n)) must be 1"));
        }
        let public = PhePublicKey { n };
        let lambda = (p - 1u32).lcm(&(q - 1u32));
        let nn = public.n_squared();
        let u = public.generator().modpow(&lambda, &nn);
        let mu = mod_inv(&l_function(&u, &public.n), &public.n)?;
        Ok(PheKeypair {
            public,
            private: PhePrivateKey { lambda, mu },
        })
    }

    pub fn lambda(&self) -> &BigUint {
        &self.private.lambda
    }

    pub fn mu(&self) -> &BigUint {
        &self.private.mu
    }

    pub fn decrypt(&self, c: &PheCiphertext) -> Result<BigUint> {
        let n = &self.public.n;
        let nn = self.public.n_squared();
        if c.0 >= nn || c.0.is_zero() {
            return Err(Error::param("ciphertext out of range"));
        }
        let u = c.0.modpow(&self.private.lambda, &nn);
        Ok(l_function(&u, n) * &self.private.mu % n)
    }
}

fn l_function(u: &BigUint, n: &BigUint) -> BigUint {
    (u - 1u32) / n
}
