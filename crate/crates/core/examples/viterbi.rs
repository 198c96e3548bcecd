//! BER of soft Viterbi decoding over an SNR sweep, checked against
//! exhaustive maximum-likelihood search.
//!
//! cargo run --release --example viterbi

use metacc::channel::{transmit, ChannelSpec};
use metacc::codec::{ber, brute_force_ml, conv_encode, viterbi_decode, MessageBits, DEFAULT_K};
use metacc::rng::stream;
use rand::Rng;

fn main() -> metacc::Result<()> {
    let mut rng = stream(7, 0);
    let msg = MessageBits::new(vec![1, 0, 1, 1, 0, 0, 1, 0, 1, 1])?;
    let c = conv_encode(&msg);
    println!("message  {:?}\ncodeword {:?}", msg.bits(), c.symbols());

    println!("\n SNR dB   BER Viterbi   BER ML   block disagreements");
    for snr in [-4.0, -2.0, 0.0, 2.0, 4.0, 6.0] {
        let spec = ChannelSpec::awgn_db(snr);
        let (mut bv, mut bm, mut diff) = (0.0, 0.0, 0);
        let trials = 1000;
        for _ in 0..trials {
            let m = MessageBits::from_index(rng.random_range(0..1 << DEFAULT_K), DEFAULT_K)?;
            let y = transmit(&conv_encode(&m), &spec, &mut rng)?;
            let (v, ml) = (viterbi_decode(&y)?, brute_force_ml(&y)?);
            bv += ber(&v, &m)?;
            bm += ber(&ml, &m)?;
            diff += usize::from(v != ml);
        }
        println!("{snr:>7.1}   {:>11.4}   {:>6.4}   {diff}", bv / trials as f64, bm / trials as f64);
    }
    Ok(())
}
