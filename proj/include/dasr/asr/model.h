/*
 * Copyright 2026 The dasr Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DASR_ASR_MODEL_H_
#define DASR_ASR_MODEL_H_

#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dasr/ad/checkpoint.h"
#include "dasr/ad/ops.h"
#include "dasr/ad/params.h"
#include "dasr/asr/tokenizer.h"
#include "dasr/audio/features.h"

namespace dasr::asr {

struct AsrConfig {
  int n_mels = 40;
  int vgg_channels1 = 8;
  int vgg_channels2 = 16;
  int n_blstm_layers = 4;
  int hidden = 32;  // per direction
  int decoder_layers = 2;
  int decoder_hidden = 32;
  int embed_dim = 32;
  int att_conv_channels = 4;
  int att_conv_kernel = 7;
  int att_dim = 32;
  int vocab_size = 0;
  float init_scale = 0.2f;

  static AsrConfig Desk();
  static AsrConfig Paper();

  int feature_dim() const { return 3 * n_mels; }
  int encoder_dim() const { return 2 * hidden; }
  // Mel bins left after the two pooling stages.
  int pooled_mels() const { return (((n_mels + 1) / 2) + 1) / 2; }
  // Throws kConfig.
  // vocab_size may be 0 (taken from the tokenizer later) when !require_vocab.
  void Validate(bool require_vocab = true) const;

  std::map<std::string, std::string> ToMetadata() const;
  static AsrConfig FromMetadata(const std::map<std::string, std::string>& meta, bool require_vocab = true);
  bool operator==(const AsrConfig&) const = default;
};

// U = ceil(ceil(T / 2) / 2).
int EncoderLength(int num_frames);

inline std::string BlstmGroup(int layer) { return "encoder.blstm.layer" + std::to_string(layer); }
inline std::string VggGroup(int conv) { return "encoder.vgg.conv" + std::to_string(conv); }
inline constexpr const char* kCmvnGroup = "encoder.cmvn";

// Encoder groups: encoder.cmvn (frozen statistics), encoder.vgg.conv1-4,
// encoder.blstm.layer1-N.
void AddEncoderParams(ad::ParamStore& store, const AsrConfig& config, std::mt19937_64& rng);
// attention, decoder.embed, decoder.lstm1-N, decoder.output.
void AddDecoderParams(ad::ParamStore& store, const AsrConfig& config, std::mt19937_64& rng);

// Global per-column mean and inverse standard deviation over all frames of
// `corpus`, written into encoder.cmvn.
void SetCmvn(ad::ParamStore& store, std::span<const audio::FeatureMatrix* const> corpus);

// VGG frontend plus BiLSTM stack. Returns [U, 2H]; T < 4 raises kTooShort.
ad::Var<float> Encode(const ad::BoundParams& p, const AsrConfig& config, const audio::FeatureMatrix& features);

template <typename Real>
struct AttentionWeights {
  ad::Var<Real> w_query;   // [Ds, A]
  ad::Var<Real> w_key;     // [2H, A]
  ad::Var<Real> bias;      // [A]
  ad::Var<Real> w_loc;     // [C, A]
  ad::Var<Real> w_score;   // [A, 1]
  ad::Var<Real> filters;   // [C, K]
};

template <typename Real>
struct AttentionOutput {
  ad::Var<Real> context;    // [1, 2H]
  ad::Var<Real> alignment;  // [1, U]
};

// V h_u + b for every encoder frame; reused across decoder steps.
template <typename Real>
ad::Var<Real> AttentionKeys(const AttentionWeights<Real>& w, ad::Var<Real> encoder_out);

// Location-aware attention:
//   f = conv1d(prev_alignment), e_u = w' tanh(W s + V h_u + U f_u + b),
//   alignment = softmax(e), context = sum_u alignment_u h_u.
template <typename Real>
AttentionOutput<Real> Attend(const AttentionWeights<Real>& w, ad::Var<Real> query, ad::Var<Real> encoder_out,
                             ad::Var<Real> keys, ad::Var<Real> prev_alignment);

// Softmax over energies [1, U] and the resulting context.
template <typename Real>
AttentionOutput<Real> AlignFromScores(ad::Var<Real> scores, ad::Var<Real> encoder_out);

// Uniform [1, U] alignment used before the first decoder step.
template <typename Real>
ad::Var<Real> UniformAlignment(ad::Tape<Real>& tape, int frames);

AttentionWeights<float> BindAttention(const ad::BoundParams& p);

// Teacher-forced logits [L, V]: row i is the prediction after consuming
// inputs[0..i].
ad::Var<float> DecoderLogits(const ad::BoundParams& p, const AsrConfig& config, ad::Var<float> encoder_out,
                             std::span<const int> inputs);

// Teacher-forced mean cross-entropy. `targets` is sos, tokens..., eos.
ad::Var<float> DecoderLoss(const ad::BoundParams& p, const AsrConfig& config, ad::Var<float> encoder_out,
                           std::span<const int> targets);

struct DecodeResult {
  std::vector<int> tokens;  // without sos/eos
  std::vector<std::vector<float>> alignments;
};

// Argmax decoding until eos or max_len emitted tokens.
DecodeResult GreedyDecode(const ad::BoundParams& p, const AsrConfig& config, ad::Var<float> encoder_out,
                          int max_len);

struct AsrModel {
  AsrConfig config;
  Tokenizer tokenizer;
  ad::ParamStore params;
};

// Fresh model with uniform(-init_scale, init_scale) weights.
AsrModel InitAsrModel(AsrConfig config, Tokenizer tokenizer, std::uint64_t seed);

ad::Checkpoint ToCheckpoint(const AsrModel& model);
// Throws kCheckpoint unless the checkpoint holds a full ASR model.
AsrModel AsrModelFromCheckpoint(ad::Checkpoint ckpt);

// Greedy transcription of one utterance.
std::string Transcribe(const AsrModel& model, const audio::FeatureMatrix& features, int max_len);

}  // namespace dasr::asr

#endif  // DASR_ASR_MODEL_H_
