#pragma once

#include "aero/data.hpp"
#include "aero/train_config.hpp"
#include "fixtures.hpp"

namespace aero::testing {

/// 8 -> 16 kHz, narrow generator and discriminators, quarter-second chunks.
inline train::TrainConfig tiny_train_config(bool adversarial) {
  train::TrainConfig c;
  c.total_steps = 4;
  c.batch_size = 2;
  c.log_every = 1;
  c.ckpt_every = 1000;
  c.chunk_seconds = 0.25;
  c.hop_seconds = 0.125;
  c.model.base_channels = 8;
  c.model.inner_layers_with_sequence_modules = {4};
  c.model.lstm_layers = 1;
  c.discriminator.layers = loss::DiscriminatorConfig::narrow_layers(16);
  c.discriminator.num_discriminators = 2;
  if (!adversarial) {
    c.weights.lambda_adv = 0.0;
    c.weights.lambda_feat = 0.0;
  }
  train::validate(c);
  return c;
}

/// One second of voiced material as an 8/16 kHz pair.
inline std::vector<data::SignalPair> voiced_pairs(std::size_t count = 1) {
  std::vector<data::SignalPair> out;
  for (std::size_t i = 0; i < count; ++i) {
    auto [lr, hr] = data::make_lr_hr_pair(voiced_clip(16000, 16000, 7 + i), {8000, 16000});
    out.push_back({lr, hr});
  }
  return out;
}

}  // namespace aero::testing
