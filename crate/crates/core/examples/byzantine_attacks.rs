// The three Byzantine behaviours applied to one round's messages.

use dp_rsa::attacks::{generate, AttackKind, AttackSpec, ByzantineContext, ByzantineOutput, MessageKind, WireMessage};
use dp_rsa::paramcore::{sign_vec, ParamVector};
use dp_rsa::rng::{stream, Purpose};

pub struct AttackSummary {
    pub gaussian_norm: f64,
    pub sign_flip: ParamVector,
    pub duplicate: WireMessage,
    pub victim_message: WireMessage,
}

pub fn run_example() -> dp_rsa::Result<AttackSummary> {
    let x0 = ParamVector::new(vec![0.0, 0.0, 0.0])?;
    let models = vec![ParamVector::new(vec![1.0, -2.0, 0.5])?, ParamVector::new(vec![3.0, 0.0, -0.5])?];
    let grads = vec![ParamVector::zeros(3), ParamVector::zeros(3)];
    let messages: Vec<WireMessage> = models
        .iter()
        .map(|m| Ok(WireMessage::Sign(sign_vec(&x0.sub(m)?)?)))
        .collect::<dp_rsa::Result<_>>()?;
    let ctx = ByzantineContext {
        x0: &x0,
        regular_messages: &messages,
        honest_models: &models,
        honest_grads: &grads,
    };
    let mut rng = stream(0, Purpose::Byzantine, 0, 0);
    let run = |kind, rng: &mut _| generate(&AttackSpec::new(kind), MessageKind::ModelMessage, &ctx, rng);

    let ByzantineOutput::Raw(noise) = run(AttackKind::Gaussian { sigma_b: 1e4 }, &mut rng)? else {
        unreachable!("gaussian attacks produce raw vectors")
    };
    let ByzantineOutput::Raw(flipped) = run(AttackKind::SignFlip { scale: -5.0 }, &mut rng)? else {
        unreachable!("sign flipping produces raw vectors")
    };
    let ByzantineOutput::Wire(copy) = run(AttackKind::SampleDuplicate { victim_index: 1 }, &mut rng)? else {
        unreachable!("duplication copies a wire message")
    };
    Ok(AttackSummary {
        gaussian_norm: noise.norm(),
        sign_flip: flipped,
        duplicate: copy,
        victim_message: messages[1].clone(),
    })
}

fn main() -> dp_rsa::Result<()> {
    let s = run_example()?;
    println!("gaussian attack vector norm: {:.1}", s.gaussian_norm);
    println!("sign-flip attack (-5 x mean model): {:?}", s.sign_flip.values());
    println!("duplicated message: {:?}", s.duplicate);
    Ok(())
}
