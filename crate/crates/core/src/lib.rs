//! Smart-card remote user authentication in the ElGamal style.
//!
//! Three schemes (Hwang-Li, Shen-Lin-Hwang and an improved variant that
//! hashes the identity with a server-chosen `mu`), every published
//! credential-forgery and masquerade attack against them, and a TCP harness
//! that runs those attacks over a real byte stream.

pub mod encoding;
pub mod modmath;
pub mod attacks;
pub mod schemes;
pub mod transport;
pub mod cli;
