use blowlab::burgers2d::*;

#[test]
fn dbg_study() {
    let t0 = std::time::Instant::now();
    let samples = q_theta_decay_study(2, 10.0, 22.0, 0.1, 1.0).unwrap();
    eprintln!("study took {:?}", t0.elapsed());
    for s in &samples {
        eprintln!("study s={:5.2} sup={:10.4e} a={:.5} b={:.6}", s.s, s.sup_over_x, s.gauge_a, s.gauge_b);
    }
    let ats = |s: f64| samples.iter().min_by(|a,b| ((a.s-s).abs()).partial_cmp(&(b.s-s).abs()).unwrap()).unwrap();
    eprintln!("qtheta slope [16,22]: {:.4}", (ats(22.0).sup_over_x.ln() - ats(16.0).sup_over_x.ln()) / 6.0);
    eprintln!("qtheta slope [17,22]: {:.4}", (ats(22.0).sup_over_x.ln() - ats(17.0).sup_over_x.ln()) / 5.0);
}
