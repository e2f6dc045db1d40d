use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    hl_register, imp_register, slh_register, verify_as, Clock, Credential, LoginRequest, PolicyKind,
    Registry, SchemeError, SchemeKind, ServerSecret, SystemParams, Verdict,
};

/// One authentication server: a scheme, its parameters and secret, the
/// registry, the identity-format policy and a clock.
#[derive(Debug)]
pub struct Deployment {
    pub scheme: SchemeKind,
    pub params: SystemParams,
    pub policy: PolicyKind,
    secret: ServerSecret,
    registry: Arc<Registry>,
    clock: Arc<dyn Clock>,
    mu_rng: Mutex<ChaCha8Rng>,
    mu_draws: HashMap<u64, u64>,
}

impl Deployment {
    pub fn new(
        scheme: SchemeKind,
        params: SystemParams,
        secret: ServerSecret,
        policy: PolicyKind,
        clock: Arc<dyn Clock>,
        seed: u64,
    ) -> Self {
        Self::with_registry(scheme, params, secret, policy, clock, Arc::new(Registry::new()), seed)
    }

    pub fn with_registry(
        scheme: SchemeKind,
        params: SystemParams,
        secret: ServerSecret,
        policy: PolicyKind,
        clock: Arc<dyn Clock>,
        registry: Arc<Registry>,
        seed: u64,
    ) -> Self {
        Deployment {
            scheme,
            params,
            policy,
            secret,
            registry,
            clock,
            mu_rng: Mutex::new(ChaCha8Rng::seed_from_u64(seed)),
            mu_draws: HashMap::new(),
        }
    }

    /// Pins the first `mu` drawn when registering the given IMP identities.
    /// Degenerate pins fall through to the seeded stream.
    pub fn with_mu_draws(mut self, draws: impl IntoIterator<Item = (u64, u64)>) -> Self {
        self.mu_draws.extend(draws);
        self
    }

    /// Server-side secret. Only trusted in-process code (registration, test
    /// oracles) should call this.
    pub fn secret(&self) -> &ServerSecret {
        &self.secret
    }

    pub fn registry(&self) -> &Arc<Registry> {
        &self.registry
    }

    pub fn clock(&self) -> &Arc<dyn Clock> {
        &self.clock
    }

    pub fn now(&self) -> u64 {
        self.clock.now()
    }

    /// Registers a numeric identity. SLH deployments register the decimal
    /// string of `id` as `J` and hand back the resulting SID.
    pub fn register(&self, id: u64) -> Result<Credential, SchemeError> {
        match self.scheme {
            SchemeKind::Hl => hl_register(id, &self.secret, &self.params, &self.registry, self.now()),
            SchemeKind::Slh => self.register_string(&id.to_string()),
            SchemeKind::Imp => {
                let mut rng = self.mu_rng.lock().expect("mu rng lock poisoned");
                let mut draws = PinnedFirst { first: self.mu_draws.get(&id).copied(), rest: &mut rng };
                imp_register(id, &self.secret, &self.params, &self.registry, &mut draws, self.now())
            }
        }
    }

    /// Registers an identity string `J` in an SLH deployment.
    pub fn register_string(&self, j: &str) -> Result<Credential, SchemeError> {
        if self.scheme != SchemeKind::Slh {
            return Err(SchemeError::WrongScheme {
                expected: SchemeKind::Slh,
                got: self.scheme,
            });
        }
        let shadow = self.secret.shadow();
        slh_register(j, &self.secret, &self.params, &self.registry, &shadow, self.now())
    }

    pub fn verify(&self, req: &LoginRequest) -> Verdict {
        self.verify_at(req, self.now())
    }

    pub fn verify_at(&self, req: &LoginRequest, t_now: u64) -> Verdict {
        verify_as(
            self.scheme,
            req,
            &self.secret,
            &self.params,
            t_now,
            self.policy.with(&self.registry),
        )
    }
}

/// Yields `first` once, then defers to `rest`.
struct PinnedFirst<'a> {
    first: Option<u64>,
    rest: &'a mut ChaCha8Rng,
}

impl RngCore for PinnedFirst<'_> {
    fn next_u32(&mut self) -> u32 {
        self.next_u64() as u32
    }
    fn next_u64(&mut self) -> u64 {
        self.first.take().unwrap_or_else(|| self.rest.next_u64())
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(8) {
            let v = self.next_u64().to_be_bytes();
            chunk.copy_from_slice(&v[..chunk.len()]);
        }
    }
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.fill_bytes(dest);
        Ok(())
    }
}
