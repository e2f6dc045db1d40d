use std::net::{SocketAddr, TcpListener};
use std::sync::Arc;

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ruas::attacks::attack_replay;
use ruas::schemes::{
    login, Clock, Deployment, ManualClock, PolicyKind, Reason, SchemeKind, ServerSecret, SystemParams, Verdict,
};
use ruas::transport::{
    client_login, decode_reply, send_frame, send_login, serve, tap, Reply, TapEntry, TransportError,
};

fn big(x: u64) -> BigUint {
    BigUint::from(x)
}

fn desk(scheme: SchemeKind) -> (Arc<Deployment>, ManualClock) {
    let params = SystemParams::desk();
    let secret = ServerSecret::new(big(7), [3; 16], &params).unwrap();
    let clock = ManualClock::new(9);
    let dep = Deployment::new(scheme, params, secret, PolicyKind::Strict, Arc::new(clock.clone()), 1)
        .with_mu_draws([(5, 12)]);
    (Arc::new(dep), clock)
}

#[test]
fn honest_hl_round_trip_at_desk_fixture() {
    let (dep, clock) = desk(SchemeKind::Hl);
    let cred = dep.register(5).unwrap();
    assert_eq!(cred.pw, big(17));
    let server = serve("127.0.0.1:0", Arc::clone(&dep)).unwrap();

    let req = login(&cred, &big(4), clock.now(), &dep.params);
    assert_eq!((req.c1.clone(), req.c2.clone()), (big(4), big(16)));
    let verdict = send_login(server.local_addr(), &req).unwrap();
    assert_eq!(verdict, Verdict::OK);

    let answer = send_frame(server.local_addr(), &ruas::transport::encode_login(&req).unwrap()).unwrap();
    assert_eq!(answer, [0x52, 0x55, 0x41, 0x53, 1, 2, 1, 1, 0]);
}

#[test]
fn imp_client_ok_and_wrong_pw_is_bad_proof() {
    let (dep, clock) = desk(SchemeKind::Imp);
    let cred = dep.register(5).unwrap();
    assert_eq!((cred.mu, cred.pw.clone()), (Some(12), big(4)));
    let server = serve("127.0.0.1:0", Arc::clone(&dep)).unwrap();

    let ok = client_login(server.local_addr(), &cred, 7, &clock, &dep.params).unwrap();
    assert_eq!(ok, Verdict::OK);

    let wrong = ruas::schemes::Credential { pw: big(5), ..cred };
    let bad = client_login(server.local_addr(), &wrong, 7, &clock, &dep.params).unwrap();
    assert_eq!(bad.reason, Reason::BadProof);
}

#[test]
fn replay_after_window_is_stale() {
    let (dep, clock) = desk(SchemeKind::Hl);
    let cred = dep.register(5).unwrap();
    let server = serve("127.0.0.1:0", Arc::clone(&dep)).unwrap();
    let req = login(&cred, &big(4), clock.now(), &dep.params);
    assert!(send_login(server.local_addr(), &req).unwrap().accepted);
    clock.advance(dep.params.delta_t + 1);
    assert_eq!(send_login(server.local_addr(), &req).unwrap().reason, Reason::StaleTimestamp);
}

#[test]
fn garbage_gets_decode_failure_and_server_stays_alive() {
    let (dep, clock) = desk(SchemeKind::Slh);
    let cred = dep.register_string("alice").unwrap();
    let server = serve("127.0.0.1:0", Arc::clone(&dep)).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut junk: Vec<Vec<u8>> = vec![Vec::new(), b"RUAX".to_vec(), vec![0xff; 5000]];
    for _ in 0..20 {
        let len = rng.gen_range(0..64);
        junk.push((0..len).map(|_| rng.gen()).collect());
    }
    for frame in &junk {
        let answer = send_frame(server.local_addr(), frame).unwrap();
        assert_eq!(decode_reply(&answer).unwrap(), (Reply::DecodeFailure, 0));
    }

    let verdict = client_login(server.local_addr(), &cred, 1, &clock, &dep.params).unwrap();
    assert_eq!(verdict, Verdict::OK);
}

#[test]
fn server_decode_failure_is_not_a_verdict() {
    let (dep, clock) = desk(SchemeKind::Hl);
    let cred = dep.register(5).unwrap();
    let server = serve("127.0.0.1:0", Arc::clone(&dep)).unwrap();
    // an oversized c1 passes the client codec but not the server's frame limit
    let mut req = login(&cred, &big(4), clock.now(), &dep.params);
    req.c1 = BigUint::from_bytes_be(&[1; 4080]);
    let err = send_login(server.local_addr(), &req).unwrap_err();
    assert!(matches!(err, TransportError::Wire(_) | TransportError::ServerDecodeFailure), "{err}");
}

#[test]
fn unreachable_endpoint_is_transport_error() {
    let addr: SocketAddr = {
        let l = TcpListener::bind("127.0.0.1:0").unwrap();
        l.local_addr().unwrap()
    };
    let (dep, clock) = desk(SchemeKind::Hl);
    let cred = dep.register(5).unwrap();
    let err = client_login(addr, &cred, 1, &clock, &dep.params).unwrap_err();
    assert!(matches!(err, TransportError::Io(_)), "{err}");
}

#[test]
fn wire_verdict_equals_direct_verdict() {
    for scheme in SchemeKind::ALL {
        let (dep, clock) = desk(scheme);
        let creds: Vec<_> = (5..9).map(|id| dep.register(id).unwrap()).collect();
        let server = serve("127.0.0.1:0", Arc::clone(&dep)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(scheme.wire_code().into());
        for _ in 0..150 {
            let cred = &creds[rng.gen_range(0..creds.len())];
            let r = dep.params.draw_r(&mut rng);
            let mut req = login(cred, &r, clock.now(), &dep.params);
            match rng.gen_range(0..5) {
                0 => req.c2 = big(rng.gen_range(0..30)),
                1 => req.t_stamp = rng.gen_range(0..200),
                2 => req.id = rng.gen_range(0..30),
                3 => clock.set(rng.gen_range(0..200)),
                _ => {}
            }
            let direct = dep.verify(&req);
            let wire = send_login(server.local_addr(), &req).unwrap();
            assert_eq!(wire, direct, "{scheme} {req:?}");
            clock.set(9);
        }
    }
}

#[test]
fn tap_records_logins_and_opaque_blobs() {
    let (dep, clock) = desk(SchemeKind::Hl);
    let cred = dep.register(5).unwrap();
    let server = serve("127.0.0.1:0", Arc::clone(&dep)).unwrap();
    let wire_tap = tap("127.0.0.1:0", server.local_addr(), Arc::new(clock.clone())).unwrap();

    let req = login(&cred, &big(4), clock.now(), &dep.params);
    assert_eq!(send_login(wire_tap.local_addr(), &req).unwrap(), Verdict::OK);
    assert_eq!(wire_tap.log().entries(), vec![TapEntry::Login { request: req.clone(), at: 9 }]);

    let answer = send_frame(wire_tap.local_addr(), b"not a frame").unwrap();
    assert_eq!(decode_reply(&answer).unwrap().0, Reply::DecodeFailure);
    let entries = wire_tap.log().entries();
    assert_eq!(entries.len(), 2);
    assert_eq!(entries[1], TapEntry::Opaque { bytes: b"not a frame".to_vec(), at: 9 });
}

#[test]
fn tapped_request_drives_replay_outcomes() {
    let (dep, clock) = desk(SchemeKind::Imp);
    let cred = dep.register(5).unwrap();
    let server = serve("127.0.0.1:0", Arc::clone(&dep)).unwrap();
    let wire_tap = tap("127.0.0.1:0", server.local_addr(), Arc::new(clock.clone())).unwrap();
    client_login(wire_tap.local_addr(), &cred, 3, &clock, &dep.params).unwrap();
    let captured = wire_tap.log().logins().pop().unwrap();

    let addr = server.local_addr();
    let over_wire = |req: &ruas::schemes::LoginRequest, t_now: u64| {
        clock.set(t_now);
        send_login(addr, req).unwrap()
    };
    let late = attack_replay(&captured, dep.params.delta_t + 1, &over_wire);
    assert!(!late.succeeded);
    assert_eq!(late.server_verdict.unwrap().reason, Reason::StaleTimestamp);

    let instant = attack_replay(&captured, 0, &over_wire);
    assert!(instant.succeeded);
    assert!(instant.note.is_some());
}
