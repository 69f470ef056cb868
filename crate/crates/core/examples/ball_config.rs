//! Print the default ball run configuration as JSON.
//!
//! cargo run --example ball_config -- 3 > ball_j3.json

use calabi_lab::pipeline::RunConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let stages = std::env::args().nth(1).map_or(Ok(3), |s| s.parse())?;
    let mut config = RunConfig::ball(stages);
    config.hit_set = vec![[0.5, 0.5, 0.5], [-1.0, 0.2, 0.0]];
    println!("{}", serde_json::to_string_pretty(&config)?);
    Ok(())
}
