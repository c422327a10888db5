//! One automaton's state distribution under repeated feedback: a run of
//! reinforcing steps followed by a run of weakening ones.

use ptm::automata::{StateProbabilityVector, TpmKind, TransitionSet};

fn bar(spv: &StateProbabilityVector) -> String {
    spv.probs()
        .iter()
        .map(|p| match (p * 10.0).round() as u32 {
            0 if *p > 0.0 => '.',
            0 => ' ',
            1..=3 => ':',
            4..=6 => '+',
            _ => '#',
        })
        .collect()
}

fn main() -> ptm::Result<()> {
    let n = 10;
    let tpms = TransitionSet::new(3.0, n)?;
    let mut spv = StateProbabilityVector::new(n)?;
    println!("{:>5}  {:<20}  include", "step", "S1 .. S2N");
    println!("{:>5}  {:<20}  {:.3}", 0, bar(&spv), spv.include_probability());
    for step in 1..=30 {
        // Literal 1 while the clause fires, then the clause stops firing.
        let kind = if step <= 15 { TpmKind::Tpm1 } else { TpmKind::Tpm3 };
        spv.apply_in_place(tpms.get(kind))?;
        if step % 3 == 0 {
            println!("{step:>5}  {:<20}  {:.3}", bar(&spv), spv.include_probability());
        }
    }
    Ok(())
}
