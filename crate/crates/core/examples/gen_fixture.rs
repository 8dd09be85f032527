//! Regenerates `data/weather_500.csv`, the synthetic weather-shaped fixture
//! used by the ingestion examples and tests. Deterministic; run from the
//! workspace root:
//!
//! ```text
//! cargo run -p attnlab --example gen_fixture
//! ```

use std::fmt::Write as _;

use attnlab::rng::Rng;

fn main() {
    let mut rng = Rng::new(0x57EA7);
    let mut out = String::from("hour,temp_c,pressure_hpa,humidity_pct,wind_mps,radiation_wm2\n");
    for t in 0..500usize {
        let day = t as f64 / 24.0 * 2.0 * std::f64::consts::PI;
        let season = t as f64 / 2000.0 * 2.0 * std::f64::consts::PI;
        let temp = 10.0 + 8.0 * day.sin() + 4.0 * season.sin() + 0.6 * rng.next_gaussian();
        let pressure = 1013.0 + 6.0 * (day / 3.0).cos() + 1.5 * rng.next_gaussian();
        let humidity =
            (65.0 - 1.8 * temp + 5.0 * (day / 2.0).sin() + 2.0 * rng.next_gaussian()).clamp(5.0, 100.0);
        let wind = (3.0 + 1.5 * (day / 1.7).sin() + 0.8 * rng.next_gaussian()).max(0.0);
        let radiation = (420.0 * day.sin().max(0.0) + 15.0 * rng.next_gaussian().abs()).max(0.0);
        let _ = writeln!(out, "{t},{temp:.4},{pressure:.4},{humidity:.4},{wind:.4},{radiation:.4}");
    }
    std::fs::create_dir_all("data").expect("create data dir");
    std::fs::write("data/weather_500.csv", out).expect("write fixture");
    println!("wrote data/weather_500.csv");
}
