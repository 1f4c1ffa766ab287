use super::*;
use crate::embeddings::PAD_INDEX;
use crate::rng;

fn seq(indices: &[usize], max_length: usize) -> EncodedSequence {
    let mut padded = indices.to_vec();
    padded.resize(max_length, PAD_INDEX);
    EncodedSequence {
        indices: padded,
        true_length: indices.len(),
    }
}

fn tiny(cell: CellKind, dropout: f64) -> Model {
    let config = ModelConfig {
        cell,
        hidden_units: 4,
        embedding_dimension: 3,
        max_length: 6,
        dense_layers: vec![5, 3],
        recurrent_dropout: dropout,
        embeddings_trainable: true,
        seed: 1,
    };
    let mut rng = rng::seeded(11);
    let emb = Tensor::from_vec(&[7, 3], (0..21).map(|_| rng.random_range(-0.5..0.5)).collect());
    init_model(config, emb, &mut rng).unwrap()
}

#[test]
fn bilstm_recurrent_parameter_count() {
    let config = ModelConfig::default();
    let emb = Tensor::zeros(&[10, 100]);
    let model = init_model(config, emb, &mut rng::seeded(0)).unwrap();
    let enumerated: usize = model
        .params()
        .iter()
        .filter(|(name, _)| name.starts_with("encoder."))
        .map(|(_, t)| t.len())
        .sum();
    assert_eq!(enumerated, 2 * 4 * (32 * (100 + 32) + 32));
    assert_eq!(model.recurrent_parameter_count(), 34048);
    let out = model.params().find("dense.1.kernel").unwrap();
    assert_eq!(model.params().get(out).shape(), [64, 3]);
}

#[test]
fn init_is_deterministic_and_checks_shapes() {
    let a = tiny(CellKind::GRU, 0.0);
    let b = tiny(CellKind::GRU, 0.0);
    assert_eq!(a.params(), b.params());
    let bad = init_model(ModelConfig::default(), Tensor::zeros(&[5, 50]), &mut rng::seeded(0));
    assert!(matches!(bad, Err(ModelError::EmbeddingShape { .. })));
    let config = ModelConfig {
        dense_layers: vec![8, 2],
        ..Default::default()
    };
    assert!(matches!(config.validate(), Err(ModelError::Config(_))));
}

#[test]
fn lstm_forget_bias_starts_at_one_and_recurrent_kernels_are_orthogonal() {
    let model = tiny(CellKind::LSTM, 0.0);
    let params = model.params();
    let forget = params.find("encoder.forward.forget.bias").unwrap();
    assert!(params.get(forget).data().iter().all(|&v| v == 1.0));
    let input = params.find("encoder.forward.input.bias").unwrap();
    assert!(params.get(input).data().iter().all(|&v| v == 0.0));
    let u = params.get(params.find("encoder.forward.cell.recurrent_kernel").unwrap());
    let n = u.rows();
    for i in 0..n {
        for j in 0..n {
            let dot: f64 = (0..n).map(|k| u.data()[k * n + i] * u.data()[k * n + j]).sum();
            let expected = if i == j { 1.0 } else { 0.0 };
            assert!((dot - expected).abs() < 1e-12);
        }
    }
}

#[test]
fn probabilities_are_normalised() {
    for cell in CellKind::ALL {
        let model = tiny(cell, 0.3);
        let batch = [seq(&[2, 3, 4], 6), seq(&[], 6), seq(&[6, 6, 6, 6, 6, 6], 6)];
        let probs = model.forward_eval(&batch).unwrap();
        let mut rng = rng::seeded(5);
        let (train_probs, _) = model.forward(&batch, Mode::Train(&mut rng)).unwrap();
        for row in probs.iter().chain(&train_probs) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        }
    }
}

#[test]
fn trailing_padding_is_inert() {
    for cell in CellKind::ALL {
        let model = tiny(cell, 0.0);
        let short = seq(&[2, 5, 3], 3);
        let long = seq(&[2, 5, 3], 6);
        assert_eq!(
            model.forward_eval(&[short]).unwrap(),
            model.forward_eval(&[long]).unwrap()
        );
    }
}

#[test]
fn index_out_of_range_is_an_error() {
    let model = tiny(CellKind::SimpleRNN, 0.0);
    assert!(matches!(
        model.forward_eval(&[seq(&[2, 99], 4)]),
        Err(ModelError::IndexOutOfRange { index: 99, vocab: 7 })
    ));
}

#[test]
fn single_step_simple_rnn_matches_hand_arithmetic() {
    // x = (0.5, -1), W = [[0.1, 0.2], [0.3, 0.4]], b = (0, 0.1)
    // h = tanh(xW + b) = tanh(-0.25, -0.2)
    // logits = h·[[1, 0, -1], [0.5, 2, 0]] + (0, 0, 0.1); p = softmax(logits)
    let config = ModelConfig {
        cell: CellKind::SimpleRNN,
        hidden_units: 2,
        embedding_dimension: 2,
        max_length: 1,
        dense_layers: vec![3],
        recurrent_dropout: 0.0,
        embeddings_trainable: true,
        seed: 0,
    };
    let emb = Tensor::from_vec(&[3, 2], vec![0.0, 0.0, 0.0, 0.0, 0.5, -1.0]);
    let mut model = init_model(config, emb, &mut rng::seeded(0)).unwrap();
    let set = |model: &mut Model, name: &str, values: &[f64]| {
        let i = model.params().find(name).unwrap();
        model.params_mut().get_mut(i).data_mut().copy_from_slice(values);
    };
    set(&mut model, "encoder.forward.state.kernel", &[0.1, 0.2, 0.3, 0.4]);
    set(&mut model, "encoder.forward.state.bias", &[0.0, 0.1]);
    set(&mut model, "dense.0.kernel", &[1.0, 0.0, -1.0, 0.5, 2.0, 0.0]);
    set(&mut model, "dense.0.bias", &[0.0, 0.0, 0.1]);
    let p = model.forward_eval(&[seq(&[2], 1)]).unwrap()[0];
    let golden = [0.254, 0.241, 0.505];
    for (got, want) in p.iter().zip(golden) {
        assert!((got - want).abs() < 5e-4, "{p:?}");
    }
}

#[test]
fn loss_examples() {
    let third = 1.0 / 3.0;
    let uniform = loss(&[[third; 3]], &[ClassLabel::Offensive]).unwrap();
    assert!((uniform.value - 3f64.ln()).abs() < 1e-9);
    let perfect = loss(
        &[[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]],
        &[ClassLabel::NonOffensive, ClassLabel::HateInducing],
    )
    .unwrap();
    assert!(perfect.value < 1e-10);
    let mixed = loss(
        &[[0.5, 0.25, 0.25], [0.1, 0.8, 0.1]],
        &[ClassLabel::NonOffensive, ClassLabel::Offensive],
    )
    .unwrap();
    assert!((mixed.value - (-(0.5f64).ln() - (0.8f64).ln()) / 2.0).abs() < 1e-15);
    assert_eq!(mixed.per_example.len(), 2);
    assert!(matches!(
        loss(&[[third; 3]], &[]),
        Err(ModelError::LengthMismatch { .. })
    ));
}

#[test]
fn frozen_embeddings_get_zero_gradient() {
    let mut model = tiny(CellKind::BiLSTM, 0.2);
    model.config.embeddings_trainable = false;
    let batch = [seq(&[2, 3], 6), seq(&[4, 5, 6], 6)];
    let labels = [ClassLabel::Offensive, ClassLabel::HateInducing];
    let (_, cache) = model.forward(&batch, Mode::Train(&mut rng::seeded(1))).unwrap();
    let grads = model.backward(&cache, &labels).unwrap();
    let emb = grads.get(model.embedding_index());
    assert!(emb.data().iter().all(|&v| v == 0.0));
    assert!(grads.is_finite());
    assert!(!model.is_trainable(model.embedding_index()));
}

#[test]
fn zero_head_gives_symmetric_gradients() {
    let mut model = tiny(CellKind::LSTM, 0.0);
    let kernel = model.params().find("dense.1.kernel").unwrap();
    let bias = model.params().find("dense.1.bias").unwrap();
    model.params_mut().get_mut(kernel).fill(0.0);
    model.params_mut().get_mut(bias).fill(0.0);
    let (probs, cache) = model.forward_with_masks(&[seq(&[3, 4], 6)], None).unwrap();
    assert!(probs[0].iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-15));
    let grads = model.backward(&cache, &[ClassLabel::Offensive]).unwrap();
    let db = grads.get(bias).data();
    assert!((db[1] + 2.0 / 3.0).abs() < 1e-12);
    assert_eq!(db[0], db[2]);
    let dw = grads.get(kernel);
    for r in 0..dw.rows() {
        let row = dw.row(r);
        assert_eq!(row[0], row[2]);
    }
}

#[test]
fn stale_cache_is_rejected() {
    let mut model = tiny(CellKind::GRU, 0.0);
    let (_, cache) = model.forward_with_masks(&[seq(&[2], 6)], None).unwrap();
    model.params_mut();
    assert!(matches!(
        model.backward(&cache, &[ClassLabel::Offensive]),
        Err(ModelError::StaleCache)
    ));
    let (_, cache) = model.forward_with_masks(&[seq(&[2], 6)], None).unwrap();
    assert!(matches!(
        model.backward(&cache, &[ClassLabel::Offensive, ClassLabel::Offensive]),
        Err(ModelError::LengthMismatch { .. })
    ));
}

#[test]
fn bilstm_directions_mirror_on_palindromes() {
    let mut model = tiny(CellKind::BiLSTM, 0.0);
    // Copy every forward-direction tensor onto its backward twin.
    let names: Vec<String> = model.params().names().to_vec();
    for (i, name) in names.iter().enumerate() {
        if let Some(rest) = name.strip_prefix("encoder.forward.") {
            let twin = model.params().find(&format!("encoder.backward.{rest}")).unwrap();
            let values = model.params().get(i).clone();
            *model.params_mut().get_mut(twin) = values;
        }
    }
    let (_, cache) = model.forward_with_masks(&[seq(&[2, 5, 3, 5, 2], 6)], None).unwrap();
    let dirs = &cache.examples()[0].directions;
    let steps = dirs[0].states.len();
    for t in 0..steps {
        assert_eq!(dirs[0].states[t], dirs[1].states[t]);
    }
    let encoded = &cache.examples()[0].dense_inputs[0];
    assert_eq!(encoded[..4], encoded[4..]);
}

#[test]
fn predict_breaks_ties_low() {
    assert_eq!(argmax_label(&[0.2, 0.5, 0.3]), ClassLabel::Offensive);
    let third = 1.0 / 3.0;
    assert_eq!(argmax_label(&[third, third, third]), ClassLabel::NonOffensive);
    let model = tiny(CellKind::SimpleRNN, 0.5);
    let s = seq(&[2, 3, 4], 6);
    assert_eq!(model.predict(&s).unwrap(), model.predict(&s).unwrap());
}

#[test]
fn mask_shape_is_checked() {
    let model = tiny(CellKind::BiLSTM, 0.2);
    let masks = model.sample_dropout_masks(1, &mut rng::seeded(0));
    assert!(matches!(
        model.forward_with_masks(&[seq(&[2], 6), seq(&[3], 6)], Some(&masks)),
        Err(ModelError::MaskShape)
    ));
}

#[test]
fn dropout_masks_are_variational() {
    let model = tiny(CellKind::LSTM, 0.5);
    let masks = model.sample_dropout_masks(200, &mut rng::seeded(3));
    let values: Vec<f64> = masks.iter().flatten().flatten().copied().collect();
    assert!(values.iter().all(|&v| v == 0.0 || v == 2.0));
    let kept = values.iter().filter(|&&v| v > 0.0).count() as f64 / values.len() as f64;
    assert!((kept - 0.5).abs() < 0.06);
}
