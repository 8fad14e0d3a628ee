//! Localize through an OpenAI-compatible vision-language endpoint.
//!
//! Assembles the chat payload (system prompt, scene graph, hint
//! sentences, BEV image as a base64 PNG data URL) and, when an endpoint
//! is configured, posts it and parses the strict JSON answer.
//!
//! ```bash
//! # dry run: print the payload that would be sent
//! cargo run --example vlm_client
//!
//! # against a live endpoint
//! TEXTLOC_ENDPOINT=http://localhost:8000/v1 \
//! TEXTLOC_MODEL=my-vlm \
//! TEXTLOC_TOKEN=sk-... cargo run --example vlm_client
//! ```

use textloc::bev::render_bev;
use textloc::color::ColorPalette;
use textloc::localize::{assemble_prompt, vlm_localize, EndpointConfig, DEFAULT_SYSTEM_PROMPT};
use textloc::map_builder::{MapBuilder, MapConfig};
use textloc::query_gen::{generate_query, QueryGenConfig};
use textloc::rng::{tag, Seed};
use textloc::scene_graph::build_scene_graph;
use textloc::synth::{demo_town, synth_taxonomy};

fn main() -> textloc::Result<()> {
    let seed = Seed::new(19);
    let cloud = demo_town(&mut seed.stream(&[0]));
    let taxonomy = synth_taxonomy();
    let palette = ColorPalette::default_palette();
    let mut map_config = MapConfig::default();
    map_config.cluster.min_pts = 10;
    let builder = MapBuilder::new(&cloud, &taxonomy, map_config)?;
    let map = builder
        .build(0, (0.0, 0.0))?
        .expect("demo town is not empty");

    let georef = map.georef(224, 224)?;
    let bev = render_bev(&map, &georef)?;
    let graph = build_scene_graph(&map, &georef, &taxonomy)?;

    let xi = (1.0, 2.0);
    let mut hint_rng = seed.stream(&[tag::HINT_SELECT, 0, 0]);
    let query = generate_query(
        &builder,
        &map,
        0,
        xi,
        &QueryGenConfig::default(),
        &palette,
        &mut hint_rng,
    )?
    .expect("pose cell holds enough objects");

    match std::env::var("TEXTLOC_ENDPOINT") {
        Ok(base_url) => {
            let config = EndpointConfig {
                base_url,
                model: std::env::var("TEXTLOC_MODEL").unwrap_or_else(|_| "default".into()),
                token_env: std::env::var("TEXTLOC_TOKEN")
                    .is_ok()
                    .then(|| "TEXTLOC_TOKEN".into()),
                trace: std::env::var("TEXTLOC_TRACE").is_ok(),
                ..Default::default()
            };
            println!("posting query to {} ...", config.base_url);
            let result = vlm_localize(
                &config,
                0,
                &bev,
                &graph,
                &query.hints,
                DEFAULT_SYSTEM_PROMPT,
            );
            match result.predicted_world {
                Some((px, py)) => {
                    let error = ((px - xi.0).powi(2) + (py - xi.1).powi(2)).sqrt();
                    println!("prediction ({px:.2}, {py:.2}), error {error:.2} m");
                    for a in result.assignments.unwrap_or_default() {
                        println!(
                            "  {:12} grounded={} matched_node={:?}",
                            a.object_label, a.grounded, a.matched_node
                        );
                    }
                }
                None => println!("call failed: {}", result.failure.unwrap_or_default()),
            }
        }
        Err(_) => {
            // dry run: show what would go over the wire
            let payload = assemble_prompt(
                &graph,
                &query.hints,
                DEFAULT_SYSTEM_PROMPT,
                "default",
                "<png>",
            )?;
            let user_text = payload["messages"][1]["content"][0]["text"]
                .as_str()
                .unwrap();
            println!("TEXTLOC_ENDPOINT is not set; dry run.\n");
            println!("system message: {} chars", DEFAULT_SYSTEM_PROMPT.len());
            println!("user message:\n{user_text}");
            println!("image: {}x{} PNG attached as a base64 data URL", 224, 224);
            println!("decoding: temperature 0");
        }
    }
    Ok(())
}
