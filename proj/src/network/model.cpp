/*
 * Copyright (c) 2026, The npat Authors. All rights reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "network/model.hpp"

#include <algorithm>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace npat::net {

using ad::Tensor;

attention::AttentionDims ModelConfig::attention_dims() const {
  attention::AttentionDims d;
  d.query = query_dim;
  d.encoder = encoder_dim;
  d.hidden = att_hidden;
  d.embed = att_embed;
  d.channels = att_channels;
  d.kernel_width = att_kernel;
  return d;
}

void validate(const ModelConfig& c) {
  auto fail = [](const std::string& msg) { throw ConfigError("model config: " + msg); };
  for (std::size_t v : {c.encoder_dim, c.query_dim, c.decoder_dim, c.prenet1, c.prenet2, c.aux_embed,
                        c.postnet_channels, c.att_hidden, c.att_embed, c.att_channels}) {
    if (v == 0) fail("all layer sizes must be positive");
  }
  if (c.encoder_dim % 2 != 0) fail("encoder_dim must be even (two recurrence directions)");
  for (std::size_t w : {c.encoder_conv_width, c.postnet_width, c.att_kernel}) {
    if (w % 2 == 0) fail("convolution widths must be odd");
  }
  if (c.postnet_layers < 1) fail("postnet_layers must be >= 1");
  if (c.reduction < 1) fail("reduction factor must be >= 1");
  if (c.acoustic_dim < 3) fail("acoustic_dim must be >= 3");
  if (!(c.prenet_dropout >= 0.0 && c.prenet_dropout < 1.0)) fail("prenet_dropout must be in [0, 1)");
}

ad::ParamSet init_params(const ModelConfig& c) {
  validate(c);
  std::mt19937_64 rng(rng::mix(c.seed, 0x6d6f64656cULL));
  ad::ParamSet p;
  const std::size_t h2 = c.encoder_dim / 2;
  const std::size_t group = static_cast<std::size_t>(c.reduction) * c.acoustic_dim;
  add_dense(p, "enc.proj", c.encoder_dim, score::kPhonemeFeatureDim, rng);
  add_conv(p, "enc.conv", c.encoder_dim, c.encoder_dim, c.encoder_conv_width, rng);
  add_gru(p, "enc.fwd", h2, c.encoder_dim, rng);
  add_gru(p, "enc.bwd", h2, c.encoder_dim, rng);
  add_dense(p, "prenet.1", c.prenet1, group, rng);
  add_dense(p, "prenet.2", c.prenet2, c.prenet1, rng);
  add_dense(p, "aux.proj", c.aux_embed, score::kAuxFeatureDim, rng);
  add_gru(p, "att.rnn", c.query_dim, c.prenet2 + c.aux_embed + c.encoder_dim, rng);
  attention::init_params(p, c.attention_dims(), rng, "att.");
  add_gru(p, "dec.rnn", c.decoder_dim, c.query_dim + c.encoder_dim, rng);
  add_dense(p, "dec.out", group, c.decoder_dim + c.encoder_dim, rng);
  for (std::size_t l = 0; l < c.postnet_layers; ++l) {
    const bool last = l + 1 == c.postnet_layers;
    const std::size_t in = l == 0 ? c.acoustic_dim : c.postnet_channels;
    const std::size_t out = last ? c.acoustic_dim : c.postnet_channels;
    add_conv(p, "post." + std::to_string(l), out, in, c.postnet_width, rng, last);
  }
  return p;
}

void check_params(const ModelConfig& config, const ad::ParamSet& params) {
  const ad::ParamSet expected = init_params(config);
  for (const auto& [name, tensor] : expected) {
    if (!params.contains(name)) throw DimensionError("parameter '" + name + "' is missing");
    if (params.at(name).dims() != tensor.dims()) {
      throw DimensionError("parameter '" + name + "' is " + ad::dims_to_string(params.at(name).dims()) +
                           ", config expects " + ad::dims_to_string(tensor.dims()));
    }
  }
  for (const auto& [name, tensor] : params) {
    if (!expected.contains(name)) throw DimensionError("unexpected parameter '" + name + "'");
  }
}

SongInputs prepare_inputs(const score::Score& score, const ModelConfig& c) {
  SongInputs in;
  const Matrix feats = score::phoneme_features(score);
  in.phoneme_features = Tensor::matrix(feats.rows, feats.cols, feats.data);
  in.phonemes = feats.rows;
  in.aux = score::auxiliary_note_frames(score);
  in.frames = static_cast<std::size_t>(score.total_frames());
  const std::size_t r = static_cast<std::size_t>(c.reduction);
  in.steps = (in.frames + r - 1) / r;
  const auto entries = score::flatten(score);
  if (c.mode.use_position && !c.oracle_alignment) {
    for (std::size_t t = 0; t < in.steps; ++t) {
      const Matrix m = score::note_position_matrix(score, entries, static_cast<int>(t * r));
      in.positions.push_back(Tensor::matrix(m.rows, m.cols, m.data));
    }
  }
  in.note_pitch = Tensor::vector(score::note_pitch_vector(score));
  return in;
}

BoundModel bind(Graph& g, const ModelConfig& c, const ad::ParamSet& params) {
  BoundModel m;
  m.enc_proj = bind_dense(g, params, "enc.proj");
  m.enc_conv = bind_conv(g, params, "enc.conv", c.encoder_conv_width);
  m.enc_fwd = bind_gru(g, params, "enc.fwd");
  m.enc_bwd = bind_gru(g, params, "enc.bwd");
  m.prenet1 = bind_dense(g, params, "prenet.1");
  m.prenet2 = bind_dense(g, params, "prenet.2");
  m.aux_proj = bind_dense(g, params, "aux.proj");
  m.att_rnn = bind_gru(g, params, "att.rnn");
  m.att = attention::AttentionParams::bind(g, params, c.att_kernel, "att.");
  m.dec_rnn = bind_gru(g, params, "dec.rnn");
  m.out = bind_dense(g, params, "dec.out");
  for (std::size_t l = 0; l < c.postnet_layers; ++l) {
    m.postnet.push_back(bind_conv(g, params, "post." + std::to_string(l), c.postnet_width));
  }
  return m;
}

NodeRef encode(Graph& g, const BoundModel& m, const ModelConfig& c, NodeRef features) {
  const std::size_t n = g.value(features).rows();
  const std::size_t h2 = c.encoder_dim / 2;
  NodeRef conv = g.tanh(m.enc_conv(g, m.enc_proj(g, features)));
  NodeRef fx = m.enc_fwd.project(g, conv);
  NodeRef bx = m.enc_bwd.project(g, conv);
  std::vector<NodeRef> fwd, bwd(n);
  NodeRef h = g.input(Tensor::zeros({h2}));
  for (std::size_t i = 0; i < n; ++i) {
    h = m.enc_fwd.step(g, row(g, fx, i), h);
    fwd.push_back(h);
  }
  h = g.input(Tensor::zeros({h2}));
  for (std::size_t i = n; i-- > 0;) {
    h = m.enc_bwd.step(g, row(g, bx, i), h);
    bwd[i] = h;
  }
  NodeRef f = g.reshape(g.concat(fwd), {n, h2});
  NodeRef b = g.reshape(g.concat(bwd), {n, h2});
  return g.concat({f, b});
}

DecoderState initial_decoder_state(Graph& g, const ModelConfig& c, std::size_t phonemes) {
  DecoderState s;
  s.att_h = g.input(Tensor::zeros({c.query_dim}));
  s.dec_h = g.input(Tensor::zeros({c.decoder_dim}));
  s.context = g.input(Tensor::zeros({c.encoder_dim}));
  s.align = attention::initial_state(g, phonemes);
  return s;
}

namespace {

NodeRef dropout(Graph& g, NodeRef x, double p, std::mt19937_64* rng) {
  if (!rng || p == 0.0) return x;
  const double keep = 1.0 - p;
  std::vector<double> mask(g.value(x).size());
  for (double& v : mask) v = rng::uniform01(*rng) < keep ? 1.0 / keep : 0.0;
  return g.mul(x, g.input(Tensor::vector(std::move(mask))));
}

}  // namespace

StepOutput decode_step(Graph& g, const BoundModel& m, const ModelConfig& c, const StepContext& ctx,
                       const DecoderState& state, NodeRef prev_frames, std::size_t t) {
  const SongInputs& in = *ctx.inputs;
  const std::size_t r = static_cast<std::size_t>(c.reduction);
  const std::size_t frame = std::min(t * r, in.frames - 1);

  NodeRef pre = dropout(g, g.tanh(m.prenet1(g, prev_frames)), c.prenet_dropout, ctx.dropout_rng);
  pre = dropout(g, g.tanh(m.prenet2(g, pre)), c.prenet_dropout, ctx.dropout_rng);
  std::vector<double> aux(score::kAuxFeatureDim, 0.0);
  if (c.use_aux) {
    const auto src = in.aux.row(frame);
    aux.assign(src.begin(), src.end());
  }
  NodeRef aux_e = m.aux_proj(g, g.input(Tensor::vector(std::move(aux))));
  NodeRef query = m.att_rnn(g, g.concat({pre, aux_e, state.context}), state.att_h);

  StepOutput out;
  if (c.oracle_alignment) {
    if (!ctx.oracle_path) throw InvalidArgument("oracle alignment mode needs a ground-truth path");
    // Share of the step's frames on each phoneme.
    const std::size_t end = std::min(frame + r, in.frames);
    Tensor share = Tensor::zeros({in.phonemes});
    for (std::size_t f = frame; f < end; ++f) {
      share.mutable_data()[static_cast<std::size_t>((*ctx.oracle_path)[f])] += 1.0 / static_cast<double>(end - frame);
    }
    NodeRef alpha = g.input(std::move(share));
    out.alpha = alpha;
    out.state.align = {alpha, state.align.cumulative, state.align.prev_u};
    out.state.context = attention::context(g, alpha, *ctx.memory);
  } else {
    std::optional<NodeRef> triples;
    if (c.mode.use_position) triples = g.input(in.positions[t]);
    attention::AttendResult a = attention::attend(g, m.att, c.mode, query, *ctx.memory, triples, state.align);
    out.alpha = a.alpha;
    out.state.align = a.state;
    out.state.context = a.context;
  }
  out.state.att_h = query;
  out.state.dec_h = m.dec_rnn(g, g.concat({query, out.state.context}), state.dec_h);
  out.frames = m.out(g, g.concat({out.state.dec_h, out.state.context}));
  out.log_f0_base = g.sum(g.mul(out.alpha, ctx.note_pitch));
  return out;
}

NodeRef postnet(Graph& g, const BoundModel& m, NodeRef frames) {
  NodeRef x = frames;
  for (std::size_t l = 0; l < m.postnet.size(); ++l) {
    x = m.postnet[l](g, x);
    if (l + 1 < m.postnet.size()) x = g.tanh(x);
  }
  return x;
}

double pitch_normalize(const std::vector<double>& alpha, const std::vector<double>& note_pitch, double residual) {
  if (alpha.size() != note_pitch.size()) {
    throw DimensionError("pitch_normalize: " + std::to_string(alpha.size()) + " weights vs " +
                         std::to_string(note_pitch.size()) + " note pitches");
  }
  double m = 0.0;
  for (std::size_t n = 0; n < alpha.size(); ++n) m += alpha[n] * note_pitch[n];
  return m + residual;
}

namespace {

// Rows [0, rows) of `src`, padded by repeating its last row.
std::vector<double> padded_rows(const Matrix& src, std::size_t rows) {
  std::vector<double> out(rows * src.cols);
  for (std::size_t f = 0; f < rows; ++f) {
    const auto r = src.row(std::min(f, src.rows - 1));
    std::copy(r.begin(), r.end(), out.begin() + static_cast<std::ptrdiff_t>(f * src.cols));
  }
  return out;
}

// (r*D) x 1 selector placing a scalar on the log F0 channel of every frame.
Tensor pitch_selector(const ModelConfig& c) {
  const std::size_t d = c.acoustic_dim;
  Tensor s = Tensor::zeros({static_cast<std::size_t>(c.reduction) * d, 1});
  for (int k = 0; k < c.reduction; ++k) s.mutable_data()[static_cast<std::size_t>(k) * d + d - 2] = 1.0;
  return s;
}

struct Unrolled {
  NodeRef raw;  // T' x D residual form
  NodeRef decoder_abs;
  NodeRef postnet_abs;
  std::vector<NodeRef> alphas;
  std::vector<NodeRef> bases;  // weighted note pitch per step
};

// Runs every decoder step; `feedback(t)` yields the previous-frame input.
template <typename Feedback>
Unrolled unroll(Graph& g, const ModelConfig& c, const BoundModel& m, const SongInputs& in,
                const std::vector<int>* oracle_path, std::mt19937_64* dropout_rng, Feedback&& feedback) {
  NodeRef x = encode(g, m, c, g.input(in.phoneme_features));
  attention::EncoderMemory memory = attention::prepare_memory(g, m.att, x, c.mode);
  StepContext ctx{&in, &memory, g.input(in.note_pitch), dropout_rng, oracle_path};
  NodeRef selector = g.input(pitch_selector(c));
  DecoderState state = initial_decoder_state(g, c, in.phonemes);
  const std::size_t group = static_cast<std::size_t>(c.reduction) * c.acoustic_dim;
  std::vector<NodeRef> frames, shifts;
  Unrolled u;
  for (std::size_t t = 0; t < in.steps; ++t) {
    NodeRef prev = t == 0 ? g.input(Tensor::zeros({group})) : feedback(t, frames.back());
    StepOutput s = decode_step(g, m, c, ctx, state, prev, t);
    frames.push_back(s.frames);
    shifts.push_back(g.matvec(selector, s.log_f0_base));
    u.alphas.push_back(s.alpha);
    u.bases.push_back(s.log_f0_base);
    state = s.state;
  }
  const ad::Dims dims{in.steps * static_cast<std::size_t>(c.reduction), c.acoustic_dim};
  u.raw = g.reshape(g.concat(frames), dims);
  u.decoder_abs = g.add(u.raw, g.reshape(g.concat(shifts), dims));
  u.postnet_abs = g.add(u.decoder_abs, postnet(g, m, u.raw));
  return u;
}

}  // namespace

TeacherResult forward_teacher(Graph& g, const ModelConfig& c, const ad::ParamSet& params,
                              const TrainingExample& ex, const TeacherOptions& options) {
  if (!ex.score || !ex.frames || !ex.log_f0) throw InvalidArgument("forward_teacher: incomplete example");
  const SongInputs in = prepare_inputs(*ex.score, c);
  const Matrix& target = *ex.frames;
  if (target.rows != in.frames || ex.log_f0->size() != in.frames) {
    throw DimensionError("score has " + std::to_string(in.frames) + " frames, targets have " +
                         std::to_string(target.rows) + " (log F0 " + std::to_string(ex.log_f0->size()) + ")");
  }
  if (target.cols != c.acoustic_dim) {
    throw DimensionError("targets have " + std::to_string(target.cols) + " dims, model expects " +
                         std::to_string(c.acoustic_dim));
  }
  if (c.oracle_alignment && (!ex.alignment || ex.alignment->size() != in.frames)) {
    throw InvalidArgument("oracle alignment mode needs a frame path covering the song");
  }
  const Matrix& fb = options.feedback ? *options.feedback : target;
  if (fb.rows != in.frames || fb.cols != c.acoustic_dim) throw DimensionError("feedback frames do not match the song");

  const std::size_t r = static_cast<std::size_t>(c.reduction);
  const std::size_t padded = in.steps * r;
  const std::size_t group = r * c.acoustic_dim;
  const std::vector<double> fb_rows = padded_rows(fb, padded);

  BoundModel m = bind(g, c, params);
  Unrolled u = unroll(g, c, m, in, ex.alignment, options.dropout_rng, [&](std::size_t t, NodeRef) {
    const auto begin = fb_rows.begin() + static_cast<std::ptrdiff_t>((t - 1) * group);
    return g.input(Tensor::vector(std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(group))));
  });

  std::vector<double> target_abs = padded_rows(target, padded);
  for (std::size_t f = 0; f < padded; ++f) {
    target_abs[f * c.acoustic_dim + c.acoustic_dim - 2] = (*ex.log_f0)[std::min(f, in.frames - 1)];
  }
  const Tensor target_t = Tensor::matrix(padded, c.acoustic_dim, std::move(target_abs));
  const loss::PenaltyMatrix pen = loss::penalty_matrix(*ex.score, c.reduction, options.penalty_decay,
                                                       options.penalty_shift);
  TeacherResult res;
  res.decoder_out = u.decoder_abs;
  res.postnet_out = u.postnet_abs;
  res.alignment = u.alphas;
  res.loss = loss::total_loss(g, target_t, u.decoder_abs, u.postnet_abs, pen.g, u.alphas, options.lambda);
  res.report = loss::report(g, res.loss, options.lambda);
  return res;
}

Synthesis synthesize(const ModelConfig& c, const ad::ParamSet& params, const score::Score& score,
                     const std::vector<int>* oracle_path) {
  const SongInputs in = prepare_inputs(score, c);
  if (c.oracle_alignment && (!oracle_path || oracle_path->size() != in.frames)) {
    throw InvalidArgument("oracle alignment mode needs a frame path covering the song");
  }
  Graph g;
  BoundModel m = bind(g, c, params);
  Unrolled u = unroll(g, c, m, in, oracle_path, nullptr, [](std::size_t, NodeRef last) { return last; });

  Synthesis s;
  const std::size_t d = c.acoustic_dim;
  const Tensor& post = g.value(u.postnet_abs);
  const Tensor& raw = g.value(u.raw);
  s.frames = Matrix(in.frames, d);
  s.residual_frames = Matrix(in.frames, d);
  std::copy_n(post.data().begin(), in.frames * d, s.frames.data.begin());
  std::copy_n(raw.data().begin(), in.frames * d, s.residual_frames.data.begin());
  s.alignment = Matrix(in.phonemes, in.steps);
  for (std::size_t t = 0; t < in.steps; ++t) {
    const Tensor& a = g.value(u.alphas[t]);
    for (std::size_t n = 0; n < in.phonemes; ++n) s.alignment(n, t) = a[n];
  }
  s.log_f0.resize(in.frames);
  s.note_log_f0.resize(in.frames);
  const std::size_t r = static_cast<std::size_t>(c.reduction);
  for (std::size_t f = 0; f < in.frames; ++f) {
    s.log_f0[f] = s.frames(f, d - 2);
    s.note_log_f0[f] = g.value(u.bases[f / r]).item();
  }
  return s;
}

}  // namespace npat::net
