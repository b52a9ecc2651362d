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

#include "dasr/asr/model.h"

#include <algorithm>
#include <cmath>

#include "dasr/error.h"
#include "json.hpp"

namespace dasr::asr {

using ad::Var;
using nlohmann::json;

AsrConfig AsrConfig::Desk() { return AsrConfig{}; }

AsrConfig AsrConfig::Paper() {
  AsrConfig c;
  c.n_mels = 80;
  c.vgg_channels1 = 64;
  c.vgg_channels2 = 128;
  c.hidden = 1024;
  c.decoder_hidden = 1024;
  c.embed_dim = 1024;
  c.att_conv_channels = 10;
  c.att_conv_kernel = 101;
  c.att_dim = 1024;
  c.init_scale = 0.1f;
  return c;
}

void AsrConfig::Validate(bool require_vocab) const {
  const bool ok = n_mels >= 4 && vgg_channels1 >= 1 && vgg_channels2 >= 1 && n_blstm_layers >= 1 && hidden >= 1 &&
                  decoder_layers >= 1 && decoder_hidden >= 1 && embed_dim >= 1 && att_conv_channels >= 1 &&
                  att_conv_kernel >= 1 && att_conv_kernel % 2 == 1 && att_dim >= 1 &&
                  (vocab_size > Tokenizer::kNumReserved || (!require_vocab && vocab_size == 0)) && init_scale > 0.0f;
  if (!ok) throw Error(ErrorCode::kConfig, "invalid ASR configuration");
}

std::map<std::string, std::string> AsrConfig::ToMetadata() const {
  json j = {{"n_mels", n_mels},
            {"vgg_channels1", vgg_channels1},
            {"vgg_channels2", vgg_channels2},
            {"n_blstm_layers", n_blstm_layers},
            {"hidden", hidden},
            {"decoder_layers", decoder_layers},
            {"decoder_hidden", decoder_hidden},
            {"embed_dim", embed_dim},
            {"att_conv_channels", att_conv_channels},
            {"att_conv_kernel", att_conv_kernel},
            {"att_dim", att_dim},
            {"vocab_size", vocab_size},
            {"init_scale", init_scale}};
  return {{"asr_config", j.dump()}};
}

AsrConfig AsrConfig::FromMetadata(const std::map<std::string, std::string>& meta, bool require_vocab) {
  auto it = meta.find("asr_config");
  if (it == meta.end()) throw Error(ErrorCode::kCheckpoint, "checkpoint has no ASR configuration");
  AsrConfig c;
  try {
    const json j = json::parse(it->second);
    c.n_mels = j.at("n_mels");
    c.vgg_channels1 = j.at("vgg_channels1");
    c.vgg_channels2 = j.at("vgg_channels2");
    c.n_blstm_layers = j.at("n_blstm_layers");
    c.hidden = j.at("hidden");
    c.decoder_layers = j.at("decoder_layers");
    c.decoder_hidden = j.at("decoder_hidden");
    c.embed_dim = j.at("embed_dim");
    c.att_conv_channels = j.at("att_conv_channels");
    c.att_conv_kernel = j.at("att_conv_kernel");
    c.att_dim = j.at("att_dim");
    c.vocab_size = j.at("vocab_size");
    c.init_scale = j.at("init_scale");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCheckpoint, std::string("bad ASR configuration: ") + e.what());
  }
  c.Validate(require_vocab);
  return c;
}

int EncoderLength(int num_frames) { return ((num_frames + 1) / 2 + 1) / 2; }

namespace {

void AddLstmWeights(ad::ParamStore& s, const std::string& group, const std::string& prefix, int in, int hidden,
                    float scale, std::mt19937_64& rng) {
  s.AddUniform(group, prefix + "Wx", {in, 4 * hidden}, scale, rng);
  s.AddUniform(group, prefix + "Wh", {hidden, 4 * hidden}, scale, rng);
  s.AddUniform(group, prefix + "b", {4 * hidden}, scale, rng);
}

}  // namespace

void AddEncoderParams(ad::ParamStore& s, const AsrConfig& c, std::mt19937_64& rng) {
  const float k = c.init_scale;
  auto& cmvn = s.AddGroup(kCmvnGroup);
  cmvn.trainable = false;
  s.AddZeros(kCmvnGroup, "mean", {c.feature_dim()});
  s.AddZeros(kCmvnGroup, "inv_std", {c.feature_dim()}).value.assign(static_cast<std::size_t>(c.feature_dim()), 1.0f);
  const int in_ch[4] = {3, c.vgg_channels1, c.vgg_channels1, c.vgg_channels2};
  const int out_ch[4] = {c.vgg_channels1, c.vgg_channels1, c.vgg_channels2, c.vgg_channels2};
  for (int i = 0; i < 4; ++i) {
    s.AddUniform(VggGroup(i + 1), "weight", {out_ch[i], in_ch[i], 3, 3}, k, rng);
    s.AddUniform(VggGroup(i + 1), "bias", {out_ch[i]}, k, rng);
  }
  for (int l = 1; l <= c.n_blstm_layers; ++l) {
    const int in = l == 1 ? c.vgg_channels2 * c.pooled_mels() : c.encoder_dim();
    AddLstmWeights(s, BlstmGroup(l), "fw_", in, c.hidden, k, rng);
    AddLstmWeights(s, BlstmGroup(l), "bw_", in, c.hidden, k, rng);
  }
}

void AddDecoderParams(ad::ParamStore& s, const AsrConfig& c, std::mt19937_64& rng) {
  const float k = c.init_scale;
  s.AddUniform("attention", "w_query", {c.decoder_hidden, c.att_dim}, k, rng);
  s.AddUniform("attention", "w_key", {c.encoder_dim(), c.att_dim}, k, rng);
  s.AddUniform("attention", "bias", {c.att_dim}, k, rng);
  s.AddUniform("attention", "w_loc", {c.att_conv_channels, c.att_dim}, k, rng);
  s.AddUniform("attention", "w_score", {c.att_dim, 1}, k, rng);
  s.AddUniform("attention", "filters", {c.att_conv_channels, c.att_conv_kernel}, k, rng);
  s.AddUniform("decoder.embed", "table", {c.vocab_size, c.embed_dim}, k, rng);
  for (int l = 1; l <= c.decoder_layers; ++l) {
    const int in = l == 1 ? c.embed_dim + c.encoder_dim() : c.decoder_hidden;
    AddLstmWeights(s, "decoder.lstm" + std::to_string(l), "", in, c.decoder_hidden, k, rng);
  }
  s.AddUniform("decoder.output", "W", {c.decoder_hidden + c.encoder_dim(), c.vocab_size}, k, rng);
  s.AddUniform("decoder.output", "b", {c.vocab_size}, k, rng);
}

void SetCmvn(ad::ParamStore& store, std::span<const audio::FeatureMatrix* const> corpus) {
  auto& g = store.group(kCmvnGroup);
  auto& mean = g.tensor("mean").value;
  auto& inv_std = g.tensor("inv_std").value;
  const std::size_t d = mean.size();
  std::vector<double> sum(d, 0.0), sum_sq(d, 0.0);
  double n = 0.0;
  for (const auto* f : corpus) {
    if (static_cast<std::size_t>(f->dim()) != d) throw Error(ErrorCode::kShape, "feature width does not match model");
    for (int t = 0; t < f->num_frames(); ++t) {
      for (std::size_t j = 0; j < d; ++j) {
        const double v = f->frames(t, static_cast<int>(j));
        sum[j] += v;
        sum_sq[j] += v * v;
      }
    }
    n += f->num_frames();
  }
  if (n < 1.0) throw Error(ErrorCode::kEmptyFeature, "no frames for normalization statistics");
  for (std::size_t j = 0; j < d; ++j) {
    const double m = sum[j] / n;
    const double var = std::max(0.0, sum_sq[j] / n - m * m);
    mean[j] = static_cast<float>(m);
    inv_std[j] = static_cast<float>(1.0 / std::max(std::sqrt(var), 1e-2));
  }
}

Var<float> Encode(const ad::BoundParams& p, const AsrConfig& c, const audio::FeatureMatrix& features) {
  const int t = features.num_frames();
  if (t < 4) throw Error(ErrorCode::kTooShort, "encoder needs at least 4 frames, got " + std::to_string(t));
  if (features.dim() != c.feature_dim()) {
    throw Error(ErrorCode::kShape, "feature width " + std::to_string(features.dim()) + " but model expects " +
                                       std::to_string(c.feature_dim()));
  }
  const int m = c.n_mels;
  Var<float> mean = p(kCmvnGroup, "mean");
  auto& tape = mean.tape();
  const auto mu = mean.value();
  const auto inv = p(kCmvnGroup, "inv_std").value();
  // [T, 3M] rows of (fbank | delta | delta-delta) -> [3, T, M] image.
  std::vector<float> image(static_cast<std::size_t>(3) * t * m);
  for (int ti = 0; ti < t; ++ti) {
    const auto row = features.frames.row(ti);
    for (int ch = 0; ch < 3; ++ch) {
      for (int mi = 0; mi < m; ++mi) {
        const int j = ch * m + mi;
        image[(static_cast<std::size_t>(ch) * t + ti) * m + mi] = (row[j] - mu[j]) * inv[j];
      }
    }
  }
  Var<float> x = tape.Constant({3, t, m}, std::move(image));
  for (int i = 1; i <= 4; ++i) {
    x = ad::Relu(ad::Conv2d(x, p(VggGroup(i), "weight"), p(VggGroup(i), "bias"), 1, 1));
    if (i % 2 == 0) x = ad::MaxPool2d(x);
  }
  x = ad::ChannelsToFrames(x);
  for (int l = 1; l <= c.n_blstm_layers; ++l) {
    const std::string g = BlstmGroup(l);
    std::vector<Var<float>> halves = {
        ad::LstmSequence(ad::Linear(x, p(g, "fw_Wx"), p(g, "fw_b")), p(g, "fw_Wh"), false),
        ad::LstmSequence(ad::Linear(x, p(g, "bw_Wx"), p(g, "bw_b")), p(g, "bw_Wh"), true)};
    x = ad::ConcatCols<float>(halves);
  }
  return x;
}

template <typename Real>
Var<Real> AttentionKeys(const AttentionWeights<Real>& w, Var<Real> enc) {
  if (enc.rows() == 0 || enc.size() == 0) throw Error(ErrorCode::kEmptyEncoder, "attention over zero frames");
  return ad::AddRowBroadcast(ad::MatMul(enc, w.w_key), w.bias);
}

template <typename Real>
AttentionOutput<Real> AlignFromScores(Var<Real> scores, Var<Real> enc) {
  if (enc.size() == 0) throw Error(ErrorCode::kEmptyEncoder, "attention over zero frames");
  Var<Real> alignment = ad::SoftmaxRows(ad::Reshape(scores, {1, static_cast<int>(scores.size())}));
  return {ad::MatMul(alignment, enc), alignment};
}

template <typename Real>
AttentionOutput<Real> Attend(const AttentionWeights<Real>& w, Var<Real> query, Var<Real> enc, Var<Real> keys,
                             Var<Real> prev_alignment) {
  const int u = enc.size() == 0 ? 0 : enc.rows();
  if (u == 0) throw Error(ErrorCode::kEmptyEncoder, "attention over zero frames");
  if (static_cast<int>(prev_alignment.size()) != u) {
    throw Error(ErrorCode::kShape, "alignment length does not match encoder length");
  }
  Var<Real> location = ad::MatMul(ad::Conv1dSame(prev_alignment, w.filters), w.w_loc);
  Var<Real> pre = ad::AddRowBroadcast(ad::Add(keys, location), ad::MatMul(query, w.w_query));
  Var<Real> energies = ad::MatMul(ad::Tanh(pre), w.w_score);
  return AlignFromScores(energies, enc);
}

template <typename Real>
Var<Real> UniformAlignment(ad::Tape<Real>& tape, int frames) {
  if (frames < 1) throw Error(ErrorCode::kEmptyEncoder, "attention over zero frames");
  return tape.Constant({1, frames}, std::vector<Real>(static_cast<std::size_t>(frames), Real(1) / Real(frames)));
}

#define DASR_INSTANTIATE_ATTENTION(Real)                                                                       \
  template Var<Real> AttentionKeys(const AttentionWeights<Real>&, Var<Real>);                                 \
  template AttentionOutput<Real> AlignFromScores(Var<Real>, Var<Real>);                                       \
  template AttentionOutput<Real> Attend(const AttentionWeights<Real>&, Var<Real>, Var<Real>, Var<Real>,       \
                                        Var<Real>);                                                           \
  template Var<Real> UniformAlignment(ad::Tape<Real>&, int);

DASR_INSTANTIATE_ATTENTION(float)
DASR_INSTANTIATE_ATTENTION(double)
#undef DASR_INSTANTIATE_ATTENTION

AttentionWeights<float> BindAttention(const ad::BoundParams& p) {
  return {p("attention", "w_query"), p("attention", "w_key"), p("attention", "bias"),
          p("attention", "w_loc"),   p("attention", "w_score"), p("attention", "filters")};
}

namespace {

// Decoder handles looked up once per utterance.
struct Decoder {
  Decoder(const ad::BoundParams& p, const AsrConfig& c, Var<float> enc) : config(c), encoder_out(enc) {
    attention = BindAttention(p);
    embed = p("decoder.embed", "table");
    for (int l = 1; l <= c.decoder_layers; ++l) {
      const std::string g = "decoder.lstm" + std::to_string(l);
      layers.push_back({p(g, "Wx"), p(g, "Wh"), p(g, "b")});
    }
    out_w = p("decoder.output", "W");
    out_b = p("decoder.output", "b");
    auto& tape = enc.tape();
    keys = AttentionKeys(attention, enc);
    alignment = UniformAlignment(tape, enc.rows());
    const std::vector<float> zeros(static_cast<std::size_t>(c.decoder_hidden), 0.0f);
    for (int l = 0; l < c.decoder_layers; ++l) {
      h.push_back(tape.Constant({1, c.decoder_hidden}, zeros));
      cell.push_back(tape.Constant({1, c.decoder_hidden}, zeros));
    }
  }

  // Consumes the previous token and returns logits [1, V].
  Var<float> Step(int prev_token) {
    if (prev_token < 0 || prev_token >= config.vocab_size) throw Error(ErrorCode::kIndex, "token id out of range");
    AttentionOutput<float> att = Attend(attention, h.back(), encoder_out, keys, alignment);
    alignment = att.alignment;
    std::vector<Var<float>> in_parts = {ad::Row(embed, prev_token), att.context};
    Var<float> x = ad::ConcatCols<float>(in_parts);
    const int hd = config.decoder_hidden;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      Var<float> gates = ad::Add(ad::Linear(x, layers[l].wx, layers[l].b), ad::MatMul(h[l], layers[l].wh));
      Var<float> hc = ad::LstmCell(gates, cell[l]);
      h[l] = ad::SliceCols(hc, 0, hd);
      cell[l] = ad::SliceCols(hc, hd, 2 * hd);
      x = h[l];
    }
    std::vector<Var<float>> out_parts = {h.back(), att.context};
    return ad::Linear(ad::ConcatCols<float>(out_parts), out_w, out_b);
  }

  struct Layer {
    Var<float> wx, wh, b;
  };
  const AsrConfig& config;
  Var<float> encoder_out, keys, alignment, embed, out_w, out_b;
  AttentionWeights<float> attention;
  std::vector<Layer> layers;
  std::vector<Var<float>> h, cell;
};

}  // namespace

Var<float> DecoderLogits(const ad::BoundParams& p, const AsrConfig& c, Var<float> enc, std::span<const int> inputs) {
  if (inputs.empty()) throw Error(ErrorCode::kInvalidTarget, "no decoder inputs");
  Decoder dec(p, c, enc);
  std::vector<Var<float>> logits;
  for (int token : inputs) logits.push_back(dec.Step(token));
  return ad::StackRows<float>(logits);
}

Var<float> DecoderLoss(const ad::BoundParams& p, const AsrConfig& c, Var<float> enc, std::span<const int> targets) {
  if (targets.size() < 2 || targets.front() != Tokenizer::kSos || targets.back() != Tokenizer::kEos) {
    throw Error(ErrorCode::kInvalidTarget, "target must be sos ... eos");
  }
  return ad::SoftmaxCrossEntropy(DecoderLogits(p, c, enc, targets.first(targets.size() - 1)), targets.subspan(1));
}

DecodeResult GreedyDecode(const ad::BoundParams& p, const AsrConfig& c, Var<float> enc, int max_len) {
  if (max_len < 1) throw Error(ErrorCode::kInvalidParameter, "max_len must be at least 1");
  Decoder dec(p, c, enc);
  DecodeResult result;
  int prev = Tokenizer::kSos;
  for (int step = 0; step < max_len; ++step) {
    Var<float> logits = dec.Step(prev);
    const auto v = logits.value();
    prev = static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
    const auto a = dec.alignment.value();
    result.alignments.emplace_back(a.begin(), a.end());
    if (prev == Tokenizer::kEos) break;
    result.tokens.push_back(prev);
  }
  return result;
}

AsrModel InitAsrModel(AsrConfig config, Tokenizer tokenizer, std::uint64_t seed) {
  config.vocab_size = tokenizer.vocab_size();
  config.Validate();
  AsrModel m{config, std::move(tokenizer), {}};
  std::mt19937_64 rng(seed);
  AddEncoderParams(m.params, config, rng);
  AddDecoderParams(m.params, config, rng);
  return m;
}

ad::Checkpoint ToCheckpoint(const AsrModel& model) {
  ad::Checkpoint ckpt;
  ckpt.metadata = model.config.ToMetadata();
  ckpt.metadata["kind"] = "asr";
  ckpt.metadata["tokenizer"] = EncodeUtf8(model.tokenizer.chars());
  ckpt.params = model.params;
  return ckpt;
}

AsrModel AsrModelFromCheckpoint(ad::Checkpoint ckpt) {
  if (ckpt.metadata["kind"] != "asr") throw Error(ErrorCode::kCheckpoint, "not an ASR checkpoint");
  AsrModel m;
  m.config = AsrConfig::FromMetadata(ckpt.metadata);
  m.tokenizer = Tokenizer(DecodeUtf8(ckpt.metadata["tokenizer"]));
  if (m.tokenizer.vocab_size() != m.config.vocab_size) {
    throw Error(ErrorCode::kCheckpoint, "tokenizer does not match vocabulary size");
  }
  AsrModel fresh = InitAsrModel(m.config, m.tokenizer, 0);
  ad::CopyParams(ckpt.params, fresh.params, true);
  m.params = std::move(fresh.params);
  return m;
}

std::string Transcribe(const AsrModel& model, const audio::FeatureMatrix& features, int max_len) {
  ad::Tape<float> tape;
  ad::BoundParams p(tape, model.params);
  DecodeResult r = GreedyDecode(p, model.config, Encode(p, model.config, features), max_len);
  return model.tokenizer.Decode(r.tokens);
}

}  // namespace dasr::asr
