//! Evaluate the two-stage training objectives on hand-picked discriminator
//! outputs, tracing how the losses move as the generator improves.

use edgeboost::losses::{stage1_loss, stage2_loss, DiscriminatorOutputs, ExitLosses};

fn main() {
    // stage 1: frame and instance discriminators vs the generator.
    // df_gen / di_gen rising toward 1 means the generator is fooling them.
    println!("{:<26} {:>10}", "generator state", "stage-1");
    for (label, g) in [("untrained", 0.02), ("early", 0.2), ("mid", 0.5), ("converged", 0.9)] {
        let outs = DiscriminatorOutputs {
            df_real: vec![0.9, 0.85],
            df_gen: vec![g, g * 0.9],
            di_real: vec![0.88],
            di_gen: vec![g],
        };
        println!("{label:<26} {:>10.4}", stage1_loss(&outs).unwrap());
    }

    // degenerate outputs are clamped, not NaN
    let saturated = DiscriminatorOutputs {
        df_real: vec![1.0],
        df_gen: vec![1.0],
        di_real: vec![1.0],
        di_gen: vec![1.0],
    };
    println!("\nsaturated discriminator: stage-1 {:.3} (probability floor keeps it finite)",
        stage1_loss(&saturated).unwrap());

    // stage 2: per-exit detection losses averaged over all exits, plus the
    // adversarial term carried over from stage 1
    let s1 = -2.1;
    let per_exit = ExitLosses { per_exit: vec![1.8, 1.2, 0.9, 0.7] };
    println!(
        "\nstage-2 over {} exits with s1 = {s1}: {:.4}",
        per_exit.per_exit.len(),
        stage2_loss(&per_exit, s1).unwrap()
    );

    // improving any single exit moves the total by delta / exit count
    let mut improved = per_exit.clone();
    improved.per_exit[0] -= 0.4;
    println!(
        "shaving 0.4 off exit 0: {:.4}",
        stage2_loss(&improved, s1).unwrap()
    );
}
