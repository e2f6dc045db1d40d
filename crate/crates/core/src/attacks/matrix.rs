use std::fmt::Write as _;
use std::sync::Arc;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::One;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    attack_chan_cheng, attack_chang_hwang_group, attack_chang_hwang_power, attack_masquerade,
    attack_replay, forged_login, AttackError, AttackName, AttackOutcome, ForgedPair,
};
use crate::schemes::{
    login, Credential, Deployment, ManualClock, PolicyKind, SchemeError, SchemeKind, ServerSecret,
    SystemParams,
};

/// Identities of the honest users every cell registers before attacking.
pub const VICTIM_IDS: [u64; 2] = [5, 7];
/// Exponent used by the power attack and the masquerade.
pub const DEFAULT_K: u64 = 3;
/// Simulated clock start for every cell.
pub const MATRIX_EPOCH: u64 = 1_000_000;

/// Pinned values for the hand-checkable `p = 23` trace: the `mu` issued to
/// given identities, a fixed login nonce and a fixed timestamp.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HandFixture {
    pub mu_draws: Vec<(u64, u64)>,
    pub r: BigUint,
    pub t_stamp: u64,
}

impl HandFixture {
    /// `mu = 12` for identity 5, `mu = 6` for identity 10, `r = 3`, `T = 9`.
    pub fn desk() -> Self {
        HandFixture {
            mu_draws: vec![(5, 12), (10, 6)],
            r: BigUint::from(3u32),
            t_stamp: 9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MatrixConfig {
    pub params: SystemParams,
    pub seed: u64,
    /// Pins the server exponent in every deployment instead of deriving it
    /// from the seed.
    pub xs: Option<BigUint>,
    pub k: BigUint,
    pub fixture: Option<HandFixture>,
}

impl MatrixConfig {
    pub fn new(params: SystemParams, seed: u64) -> Self {
        MatrixConfig {
            params,
            seed,
            xs: None,
            k: BigUint::from(DEFAULT_K),
            fixture: None,
        }
    }

    /// `p = 23`, identity stub, `xs = 7` and the [`HandFixture::desk`] values.
    pub fn desk(seed: u64) -> Self {
        MatrixConfig {
            xs: Some(BigUint::from(7u32)),
            fixture: Some(HandFixture::desk()),
            ..MatrixConfig::new(SystemParams::desk(), seed)
        }
    }

    /// Smallest exponent `>= k` invertible mod `p - 1`.
    pub fn masquerade_k(&self) -> BigUint {
        let order = self.params.order();
        let mut k = self.k.clone();
        while !k.gcd(&order).is_one() {
            k += 1u32;
        }
        k
    }

    /// The secret every matrix deployment of `scheme` runs with.
    pub fn secret_for(&self, scheme: SchemeKind) -> ServerSecret {
        let generated = ServerSecret::generate(&self.params, mix(self.seed, scheme.wire_code().into(), 0, 0));
        match &self.xs {
            Some(xs) => ServerSecret::new(xs.clone(), *generated.shadow_key(), &self.params)
                .expect("pinned xs validated by caller"),
            None => generated,
        }
    }
}

fn mix(seed: u64, a: u64, b: u64, c: u64) -> u64 {
    // splitmix64 finaliser over a simple combination
    let mut z = seed
        ^ a.wrapping_mul(0x9e37_79b9_7f4a_7c15)
        ^ b.wrapping_mul(0xc2b2_ae3d_27d4_eb4f)
        ^ c.wrapping_mul(0x1656_67b1_9e37_79f9);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Whether an attack is expected to work: the forgeries beat HL and SLH
/// unless the identity format is enforced; the masquerade beats HL only;
/// replay outside the window and everything against IMP fails.
pub fn expected_success(scheme: SchemeKind, policy: PolicyKind, attack: AttackName) -> bool {
    use AttackName::*;
    match (scheme, attack) {
        (SchemeKind::Imp, _) | (_, Replay) => false,
        (SchemeKind::Hl, Masquerade) => true,
        (SchemeKind::Slh, Masquerade) => false,
        (_, ChanCheng | ChangHwangPower | ChangHwangGroup) => policy == PolicyKind::Lax,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixCell {
    pub scheme: SchemeKind,
    pub policy: PolicyKind,
    pub attack: AttackName,
    pub outcome: AttackOutcome,
    pub expected: bool,
}

impl MatrixCell {
    pub fn matches(&self) -> bool {
        self.outcome.succeeded == self.expected
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttackMatrix {
    pub p_bits: u64,
    pub hash: String,
    pub delta_t: u64,
    pub seed: u64,
    pub cells: Vec<MatrixCell>,
}

fn word(succeeded: bool) -> &'static str {
    if succeeded {
        "succeeded"
    } else {
        "failed"
    }
}

impl AttackMatrix {
    pub fn all_match(&self) -> bool {
        self.cells.iter().all(MatrixCell::matches)
    }

    pub fn cell(&self, scheme: SchemeKind, policy: PolicyKind, attack: AttackName) -> Option<&MatrixCell> {
        self.cells
            .iter()
            .find(|c| c.scheme == scheme && c.policy == policy && c.attack == attack)
    }

    /// Human-readable report. Carries no secret exponents or passwords.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "attack matrix: p of {} bits, f = {}, delta_t = {}s, seed = {}",
            self.p_bits, self.hash, self.delta_t, self.seed
        );
        let _ = writeln!(
            out,
            "{:<6} {:<6} {:<18} {:<9} {:<15} {:<9} match",
            "scheme", "policy", "attack", "outcome", "reason", "expected"
        );
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{:<6} {:<6} {:<18} {:<9} {:<15} {:<9} {}",
                c.scheme.to_string(),
                c.policy.to_string(),
                c.attack.as_str(),
                word(c.outcome.succeeded),
                c.outcome.reason_code(),
                word(c.expected),
                if c.matches() { "yes" } else { "NO" }
            );
        }
        let matching = self.cells.iter().filter(|c| c.matches()).count();
        let _ = writeln!(out, "{matching}/{} cells match the expected grid", self.cells.len());
        out
    }

    /// One CSV row per cell: `scheme,policy,attack,succeeded,reason,expected`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scheme,policy,attack,succeeded,reason,expected\n");
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                c.scheme,
                c.policy,
                c.attack,
                u8::from(c.outcome.succeeded),
                c.outcome.reason_code(),
                u8::from(c.expected)
            );
        }
        out
    }
}

/// A fresh deployment with the victims registered.
struct Cell {
    dep: Deployment,
    victims: Vec<Credential>,
    rng: ChaCha8Rng,
    fixed_r: Option<BigUint>,
}

impl Cell {
    fn new(cfg: &MatrixConfig, scheme: SchemeKind, policy: PolicyKind, attack: AttackName) -> Result<Self, AttackError> {
        let cell_seed = mix(
            cfg.seed,
            scheme.wire_code().into(),
            attack as u64 + 1,
            policy as u64 + 1,
        );
        let epoch = cfg.fixture.as_ref().map_or(MATRIX_EPOCH, |f| f.t_stamp);
        let mut dep = Deployment::new(
            scheme,
            cfg.params.clone(),
            cfg.secret_for(scheme),
            policy,
            Arc::new(ManualClock::new(epoch)),
            cell_seed,
        );
        if let Some(f) = &cfg.fixture {
            dep = dep.with_mu_draws(f.mu_draws.iter().copied());
        }
        let victims = VICTIM_IDS
            .iter()
            .map(|&id| dep.register(id))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Cell {
            dep,
            victims,
            rng: ChaCha8Rng::seed_from_u64(cell_seed.rotate_left(17)),
            fixed_r: cfg.fixture.as_ref().map(|f| f.r.clone()),
        })
    }

    fn nonce(&mut self) -> BigUint {
        match &self.fixed_r {
            Some(r) => r.clone(),
            None => self.dep.params.draw_r(&mut self.rng),
        }
    }

    /// How the attacker gets a related identity registered. SLH users only
    /// submit a string `J`, so the attacker names its own.
    fn register_related(&self, id: u64) -> Result<Credential, SchemeError> {
        match self.dep.scheme {
            SchemeKind::Slh => self.dep.register_string(&format!("attacker-{id}")),
            _ => self.dep.register(id),
        }
    }

    fn submit_forgery(&mut self, attack: AttackName, pair: ForgedPair) -> AttackOutcome {
        let mut outcome = AttackOutcome::new(attack, self.dep.scheme);
        let r = self.nonce();
        let t = self.dep.now();
        if let Some((cred, req)) = forged_login(&pair, &r, t, &self.dep.params) {
            outcome.server_verdict = Some(self.dep.verify(&req));
            outcome.forged_credential = Some(cred);
            outcome.forged_request = Some(req);
        } else {
            outcome.note = Some("forged identity does not fit the identity field".into());
        }
        if pair.degenerate {
            outcome.note = Some("forged identity is degenerate".into());
        }
        outcome.judge()
    }
}

fn run_cell(
    cfg: &MatrixConfig,
    scheme: SchemeKind,
    policy: PolicyKind,
    attack: AttackName,
) -> Result<AttackOutcome, AttackError> {
    let mut cell = Cell::new(cfg, scheme, policy, attack)?;
    let params = cell.dep.params.clone();
    let mut outcome = match attack {
        AttackName::ChanCheng => {
            let pair = attack_chan_cheng(&cell.victims[0], &params);
            cell.submit_forgery(attack, pair)
        }
        AttackName::ChangHwangPower => {
            let pair = attack_chang_hwang_power(&cell.victims[0], &cfg.k, &params)?;
            cell.submit_forgery(attack, pair)
        }
        AttackName::ChangHwangGroup => {
            let pair = attack_chang_hwang_group(&cell.victims, &params)?;
            cell.submit_forgery(attack, pair)
        }
        AttackName::Masquerade => {
            let victim = cell.victims[0].clone();
            let mut oracle = |id| cell.register_related(id);
            let mut out = attack_masquerade(scheme, victim.id, &cfg.masquerade_k(), &mut oracle, &params)?;
            out.true_pw = Some(victim.pw.clone());
            // log in as the victim with whatever was recovered
            if let Some(pw) = &out.recovered_pw {
                let stolen = Credential { pw: pw.clone(), ..victim };
                let r = cell.nonce();
                let req = login(&stolen, &r, cell.dep.now(), &params);
                out.server_verdict = Some(cell.dep.verify(&req));
                out.forged_request = Some(req);
            }
            out.judge()
        }
        AttackName::Replay => {
            let r = cell.nonce();
            let captured = login(&cell.victims[0], &r, cell.dep.now(), &params);
            let dep = &cell.dep;
            attack_replay(&captured, params.delta_t + 1, &|req, now| dep.verify_at(req, now))
        }
    };
    outcome.policy = Some(policy);
    Ok(outcome)
}

/// Runs one attack against a fresh deployment, exactly as the matrix does.
pub fn run_matrix_cell(
    cfg: &MatrixConfig,
    scheme: SchemeKind,
    policy: PolicyKind,
    attack: AttackName,
) -> Result<MatrixCell, AttackError> {
    run_cell(cfg, scheme, policy, attack).map(|outcome| MatrixCell {
        scheme,
        policy,
        attack,
        outcome,
        expected: expected_success(scheme, policy, attack),
    })
}

/// Runs every attack against fresh HL, SLH and IMP deployments under both
/// identity-format policies. Deterministic in `cfg`.
pub fn run_attack_matrix(cfg: &MatrixConfig) -> Result<AttackMatrix, AttackError> {
    let mut jobs = Vec::new();
    for scheme in SchemeKind::ALL {
        for policy in [PolicyKind::Lax, PolicyKind::Strict] {
            for attack in AttackName::ALL {
                jobs.push((scheme, policy, attack));
            }
        }
    }
    let results: Vec<Result<MatrixCell, AttackError>> = std::thread::scope(|s| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|&(scheme, policy, attack)| {
                s.spawn(move || run_matrix_cell(cfg, scheme, policy, attack))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("matrix cell panicked"))
            .collect()
    });
    Ok(AttackMatrix {
        p_bits: cfg.params.p.bits(),
        hash: cfg.params.f.to_string(),
        delta_t: cfg.params.delta_t,
        seed: cfg.seed,
        cells: results.into_iter().collect::<Result<_, _>>()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::OneWayFunction;
    use crate::modmath::gen_safe_prime;
    use crate::schemes::Reason;

    fn desk_config(seed: u64) -> MatrixConfig {
        MatrixConfig::desk(seed)
    }

    #[test]
    fn expected_grid_shape() {
        assert!(expected_success(SchemeKind::Hl, PolicyKind::Lax, AttackName::ChanCheng));
        assert!(!expected_success(SchemeKind::Hl, PolicyKind::Strict, AttackName::ChanCheng));
        assert!(expected_success(SchemeKind::Hl, PolicyKind::Strict, AttackName::Masquerade));
        assert!(expected_success(SchemeKind::Slh, PolicyKind::Lax, AttackName::ChangHwangPower));
        assert!(!expected_success(SchemeKind::Slh, PolicyKind::Lax, AttackName::Masquerade));
        for attack in AttackName::ALL {
            for policy in [PolicyKind::Lax, PolicyKind::Strict] {
                assert!(!expected_success(SchemeKind::Imp, policy, attack));
            }
        }
    }

    #[test]
    fn desk_matrix_matches_expected_grid() {
        let m = run_attack_matrix(&desk_config(1)).unwrap();
        assert_eq!(m.cells.len(), 30);
        assert!(m.all_match(), "{}", m.to_text());
    }

    #[test]
    fn matrix_is_deterministic() {
        let a = run_attack_matrix(&desk_config(9)).unwrap();
        let b = run_attack_matrix(&desk_config(9)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_csv(), b.to_csv());
    }

    #[test]
    fn improved_scheme_strict_rejects_forgeries_at_format_check() {
        let m = run_attack_matrix(&desk_config(1)).unwrap();
        for attack in [AttackName::ChanCheng, AttackName::ChangHwangPower, AttackName::ChangHwangGroup] {
            let cell = m.cell(SchemeKind::Imp, PolicyKind::Strict, attack).unwrap();
            assert_eq!(cell.outcome.server_verdict.unwrap().reason, Reason::BadFormat);
        }
    }

    #[test]
    fn sixty_four_bit_matrix_with_sha256() {
        let p = gen_safe_prime(64, 3).unwrap();
        let params = SystemParams::new(p, OneWayFunction::Std, 60).unwrap();
        let m = run_attack_matrix(&MatrixConfig::new(params, 3)).unwrap();
        assert!(m.all_match(), "{}", m.to_text());
    }
}
