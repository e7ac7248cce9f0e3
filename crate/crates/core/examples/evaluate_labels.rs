//! Scores a labeling against ground truth and prints the contingency table with predicted
//! clusters reordered to line up with the true classes.

use chainclust::evaluate::auto_reorder_columns;
use chainclust::{confusion_matrix, score_labeling, ScoreCard, NOISE};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let truth = [0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2];
    let predicted = [7, 7, 7, NOISE, 3, 3, 3, 7, 5, 5, NOISE, 5];

    println!("{}", ScoreCard::TABLE_HEADER);
    println!("{}", score_labeling(&truth, &predicted)?.table_row("example"));

    let table = confusion_matrix(&truth, &predicted)?;
    let (aligned, _) = auto_reorder_columns(&table);
    print!("{}", aligned.to_csv());
    Ok(())
}
