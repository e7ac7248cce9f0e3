//! Drives a session step by step the way an interactive client would: commands move it
//! through the stages, views read the current state, and a history replays it.

use chainclust::session::ExportKind;
use chainclust::{compute_distance_matrix, generate_toy, Command, Precision, Session, Stage, ToySpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ToySpec { points_per_cluster: 40, noise_points: 60, ..ToySpec::default() };
    let (points, truth) = generate_toy(&spec)?;
    let m = compute_distance_matrix(&points, Precision::F32)?;
    let mut session = Session::new(m.clone(), Some(truth.clone()))?;

    let commands = [
        r#"{"type": "reorder", "starts": {"kind": "evenly_spaced", "k": 10}, "stencil_pct": 1.0}"#,
        r#"{"type": "profile"}"#,
        r#"{"type": "scan"}"#,
        r#"{"type": "propose_merges", "alpha": 1.0}"#,
        r#"{"type": "apply_merges"}"#,
        r#"{"type": "expand", "beta": 2.0}"#,
    ];
    for json in commands {
        let stage = session.apply(serde_json::from_str::<Command>(json)?)?;
        println!("{stage:>9} <- {json}");
    }
    println!("{}", serde_json::to_string_pretty(&session.state())?);
    println!("{}", serde_json::to_string(&session.confusion_view()?)?);

    // going back to the cut stage drops the merge and expansion
    session.apply(Command::Reset { stage: Stage::Cut })?;
    println!("after reset: {}", session.stage());

    let replayed = Session::replay(m, Some(truth), session.history())?;
    assert_eq!(replayed.export(ExportKind::Order)?, session.export(ExportKind::Order)?);
    println!("replayed {} commands", session.history().len());
    Ok(())
}
