use flowplace_web::{compare, loss_config, place, sequence_pair_svg, DemoParams};

fn params() -> DemoParams {
    DemoParams {
        macros: 4,
        blocks: 3,
        cells_per_block: 40,
        bus_bits: 16,
        seed: 2,
        finetune: true,
        heat: true,
        edges: true,
    }
}

#[test]
fn place_returns_layout_and_report() {
    let run = place(params(), "eq8").unwrap();
    assert_eq!(run.svg().matches(r#"<g class="macro""#).count(), 4);
    assert!(run.svg().contains(r#"class="edge"#));
    assert!(run.report().contains("hpwl_total"));
    assert!(run.hpwl() > 0.0);
}

#[test]
fn loss_names() {
    assert!(loss_config("eq5").is_ok());
    assert_eq!(loss_config("agnostic").unwrap().mc_scale, 0.0);
    assert!(loss_config("eq7").is_err());
}

#[test]
fn sequence_pair_packing() {
    let svg = sequence_pair_svg("0 1", "1 0", "2 1; 3 2").unwrap();
    assert_eq!(svg.matches("<text").count(), 2);
    assert!(sequence_pair_svg("0 1", "0 0", "2 1; 3 2").is_err());
    assert!(sequence_pair_svg("0 1", "0 1", "2 1; 3").is_err());
}

#[test]
fn comparison_is_deterministic() {
    let (a, b) = compare(params(), "eq8", "agnostic").unwrap();
    let (c, d) = compare(params(), "eq8", "agnostic").unwrap();
    assert_eq!((a.svg(), b.svg()), (c.svg(), d.svg()));
}
