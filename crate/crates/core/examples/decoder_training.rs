//! Train the convolutional decoder by pooled ERM on the expanded AWGN regime
//! and compare its BER with Viterbi at a few SNRs.
//!
//! cargo run --release --example decoder_training -- [iterations]

use metacc::channel::{transmit, ChannelSpec};
use metacc::codec::{ber, conv_encode, viterbi_decode, MessageBits, DEFAULT_K};
use metacc::decoder::{forward, predict_bits};
use metacc::metalearn::erm_train;
use metacc::rng::stream;
use metacc::taskdist::{build_dataset, scenario, DatasetCounts, Role};
use rand::Rng;

fn main() -> metacc::Result<()> {
    let iterations = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(500);
    let sc = scenario("awgn-expanded")?;
    let ds = build_dataset(&sc.train, DatasetCounts { setups: 20, messages: 200, examples: 20 }, Role::MetaTrain, 5)?;
    let params = erm_train(&ds, iterations, 1e-3, 6)?;
    println!("{} parameters after {iterations} Adam steps", params.param_count());

    let mut rng = stream(8, 0);
    println!(" SNR dB   decoder BER   Viterbi BER");
    for snr in [-2.0, 0.0, 2.0, 4.0] {
        let spec = ChannelSpec::awgn_db(snr);
        let (mut nn, mut vit) = (0.0, 0.0);
        let trials = 500;
        for _ in 0..trials {
            let m = MessageBits::from_index(rng.random_range(0..1 << DEFAULT_K), DEFAULT_K)?;
            let y = transmit(&conv_encode(&m), &spec, &mut rng)?;
            nn += ber(&predict_bits(&forward(&params, &y)?), &m)?;
            vit += ber(&viterbi_decode(&y)?, &m)?;
        }
        println!("{snr:>7.1}   {:>11.4}   {:>11.4}", nn / trials as f64, vit / trials as f64);
    }
    Ok(())
}
