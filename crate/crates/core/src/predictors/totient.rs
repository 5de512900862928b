use crate::error::{Error, Result};

/// Default cap on sieve length: 2·10^8 entries, about 800 MB of `u32`.
pub const DEFAULT_SIEVE_BUDGET: u64 = 200_000_000;

/// Euler's totient for `1..=n`.
#[derive(Clone, Debug)]
pub struct PhiTable {
    phi: Vec<u32>,
}

impl PhiTable {
    /// Largest `n` covered.
    pub fn limit(&self) -> u64 {
        (self.phi.len() - 1) as u64
    }

    /// `φ(n)` for `1 ≤ n ≤ limit()`.
    #[inline]
    pub fn get(&self, n: u64) -> u32 {
        self.phi[n as usize]
    }

    pub fn covers(&self, n: u64) -> bool {
        n <= self.limit()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.phi[1..]
    }
}

pub fn euler_phi_sieve(n: u64) -> Result<PhiTable> {
    euler_phi_sieve_with_budget(n, DEFAULT_SIEVE_BUDGET)
}

/// Linear sieve: every composite is crossed out exactly once, by its
/// smallest prime factor.
pub fn euler_phi_sieve_with_budget(n: u64, budget: u64) -> Result<PhiTable> {
    if n == 0 {
        return Err(crate::error::invalid("totient sieve needs N >= 1"));
    }
    if n > budget || n > u32::MAX as u64 {
        return Err(Error::SieveBudget {
            requested: n,
            budget: budget.min(u32::MAX as u64),
        });
    }
    let n = n as usize;
    let mut phi = vec![0u32; n + 1];
    let mut primes: Vec<u32> = Vec::new();
    phi[1] = 1;
    for i in 2..=n {
        if phi[i] == 0 {
            phi[i] = (i - 1) as u32;
            primes.push(i as u32);
        }
        for &p in &primes {
            let m = i * p as usize;
            if m > n {
                break;
            }
            if i % p as usize == 0 {
                phi[m] = phi[i] * p;
                break;
            }
            phi[m] = phi[i] * (p - 1);
        }
    }
    Ok(PhiTable { phi })
}
