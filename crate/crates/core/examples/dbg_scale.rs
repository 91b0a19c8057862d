use radcom::channels::*;
use radcom::dfrc::*;
use radcom::metrics::*;
use radcom::{C64, CVec, db_to_linear};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let noise = NoisePowers { sigma_b_sq: 1e-9, sigma_e_sq: 1e-9, sigma_a_sq: 1e-14 };
    let p = 1.0; // 30 dBm
    let gamma = db_to_linear(15.0);
    let geo = Geometry::default();
    let model = PathLossModel::default();
    let steer = SteeringParams::new(30f64.to_radians(), 2);
    let tau = std::f64::consts::TAU;
    let mut worse = 0;
    for t in 0..10 {
        let mut rch = ChaCha8Rng::seed_from_u64(100 + t);
        let ch = sample_channels(&geo, &model, &steer, 2, &mut rch).unwrap();
        // joint grid
        let qs = 90; let ws = 60;
        let mut best = f64::NEG_INFINITY;
        for qi in 0..qs { for qj in 0..qs {
            let q = CVec::from_vec(vec![
                C64::from_polar(1.0, tau * qi as f64 / qs as f64),
                C64::from_polar(1.0, tau * qj as f64 / qs as f64)]);
            let h_b = ch.effective_bob(&q);
            let h_e = ch.effective_eve(&q);
            let he2 = h_e.norm_squared();
            for ai in 0..=ws { let alpha = std::f64::consts::FRAC_PI_2 * ai as f64 / ws as f64;
            for bi in 0..(2*ws) { let beta = tau * bi as f64 / (2.0*ws as f64);
                let w = CVec::from_vec(vec![C64::new(alpha.cos(), 0.0), C64::from_polar(alpha.sin(), beta)]);
                let hew = (&h_e * &w)[(0,0)].norm_sqr();
                if p * he2 * hew / (2.0 * noise.sigma_a_sq) < gamma { continue; }
                let hbw = (&h_b * &w)[(0,0)].norm_sqr();
                let cs = ((1.0 + p*hbw/noise.sigma_b_sq)/(1.0 + p*hew/noise.sigma_e_sq)).log2();
                if cs > best { best = cs; }
            }}
        }}
        let best = best.max(0.0);
        let opts = DfrcOptions::default();
        let rcg = run_dfrc_rcg(&ch, &noise, p, gamma, &opts);
        let cs_r = dfrc_rates(&rcg.design, &ch, &noise, p).c_s;
        let mut rr = ChaCha8Rng::seed_from_u64(500 + t);
        let dink = run_dfrc_dinkelbach(&ch, &noise, p, RadarConstraint::EchoSnr { gamma }, &opts, &mut rr).unwrap();
        let cs_d = dfrc_rates(&dink.design, &ch, &noise, p).c_s;
        let ok_r = cs_r >= 0.95 * best; let ok_d = cs_d >= 0.95 * best;
        if !ok_r || !ok_d { worse += 1; }
        println!("t{t}: grid={best:.4} rcg={cs_r:.4}({}) dink={cs_d:.4}({}) it_r={} feas_r={}",
          ok_r, ok_d, rcg.trace.iterations, rcg.feasible);
    }
    println!("channels with a pipeline below 95%: {worse}/10");
}
