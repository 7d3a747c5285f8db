// Copyright 2026 The mcdepth Authors
// SPDX-License-Identifier: Apache-2.0

#include "mcdepth/train.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include <spdlog/spdlog.h>

#include "mcdepth/error.hpp"

namespace mcdepth {

void TrainConfig::validate() const {
  auto positive = [](double x, const char* what) {
    if (!(x > 0.0)) fail(ErrorKind::kConfig, std::string("train: ") + what + " must be positive");
  };
  positive(lr, "lr");
  positive(batch_size, "batch_size");
  positive(adam_eps, "adam_eps");
  positive(t_max, "t_max");
  positive(max_grad_norm, "max_grad_norm");
  positive(resize_min, "resize_min");
  positive(crop, "crop");
  positive(epochs, "epochs");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    fail(ErrorKind::kConfig, "train: Adam betas must lie in [0, 1)");
  }
  if (weight_decay < 0.0 || eta_min < 0.0 || eta_min > lr) {
    fail(ErrorKind::kConfig, "train: need weight_decay >= 0 and 0 <= eta_min <= lr");
  }
  if (resize_max < resize_min) fail(ErrorKind::kConfig, "train: resize_max < resize_min");
  if (crop % model.stride() != 0) {
    fail(ErrorKind::kConfig, "train: crop must be divisible by " + std::to_string(model.stride()));
  }
  if (mix_ratio < 0.0 || mix_ratio > 1.0) fail(ErrorKind::kConfig, "train: mix_ratio must lie in [0, 1]");
  if (max_skip_fraction < 0.0 || max_skip_fraction > 1.0) {
    fail(ErrorKind::kConfig, "train: max_skip_fraction must lie in [0, 1]");
  }
  if (!(caps.sparse > 0.0 && caps.dense > 0.0)) fail(ErrorKind::kConfig, "train: depth caps must be positive");
  if (model.enc1_channels <= 0 || model.enc2_channels <= 0 || model.enc3_channels < 0 || model.kernel <= 0 || model.kernel % 2 == 0 ||
      !(model.depth_scale > 0.0)) {
    fail(ErrorKind::kConfig, "train: invalid model configuration");
  }
  if (!(weights.lambda >= 0.0 && weights.lambda <= 1.0) || !(weights.epsilon > 0.0)) {
    fail(ErrorKind::kConfig, "train: need 0 <= lambda <= 1 and epsilon > 0");
  }
}

KeyValues TrainConfig::to_kv() const {
  KeyValues kv;
  kv.set("lr", lr);
  kv.set("batch_size", batch_size);
  kv.set("adam_beta1", adam_beta1);
  kv.set("adam_beta2", adam_beta2);
  kv.set("adam_eps", adam_eps);
  kv.set("weight_decay", weight_decay);
  kv.set("t_max", t_max);
  kv.set("eta_min", eta_min);
  kv.set("max_grad_norm", max_grad_norm);
  kv.set("resize_min", resize_min);
  kv.set("resize_max", resize_max);
  kv.set("crop", crop);
  kv.set("epochs", epochs);
  kv.set("seed", seed);
  kv.set("freeze_encoder", freeze_encoder);
  kv.set("freeze_weights", freeze_weights);
  kv.set("schedule_per_iteration", schedule_per_iteration);
  kv.set("augment", augment);
  kv.set("consistency", mode == LossMode::kConsistency);
  kv.set("depth_cap_sparse", caps.sparse);
  kv.set("depth_cap_dense", caps.dense);
  kv.set("mix_ratio", mix_ratio);
  kv.set("max_skip_fraction", max_skip_fraction);
  kv.set("enc1_channels", model.enc1_channels);
  kv.set("enc2_channels", model.enc2_channels);
  kv.set("enc3_channels", model.enc3_channels);
  kv.set("kernel", model.kernel);
  kv.set("depth_scale", model.depth_scale);
  kv.set("coord_channels", model.coord_channels);
  kv.set("alpha", weights.alpha);
  kv.set("beta", weights.beta);
  kv.set("gamma", weights.gamma);
  kv.set("lambda", weights.lambda);
  kv.set("epsilon", weights.epsilon);
  return kv;
}

TrainConfig TrainConfig::from_kv(const KeyValues& kv) {
  TrainConfig c;
  const KeyValues defaults = c.to_kv();
  std::set<std::string> known;
  for (const auto& [k, v] : defaults.entries()) known.insert(k);
  kv.reject_unknown(known);
  c.lr = kv.get_double("lr", c.lr);
  c.batch_size = static_cast<int>(kv.get_int("batch_size", c.batch_size));
  c.adam_beta1 = kv.get_double("adam_beta1", c.adam_beta1);
  c.adam_beta2 = kv.get_double("adam_beta2", c.adam_beta2);
  c.adam_eps = kv.get_double("adam_eps", c.adam_eps);
  c.weight_decay = kv.get_double("weight_decay", c.weight_decay);
  c.t_max = static_cast<int>(kv.get_int("t_max", c.t_max));
  c.eta_min = kv.get_double("eta_min", c.eta_min);
  c.max_grad_norm = kv.get_double("max_grad_norm", c.max_grad_norm);
  c.resize_min = kv.get_double("resize_min", c.resize_min);
  c.resize_max = kv.get_double("resize_max", c.resize_max);
  c.crop = static_cast<int>(kv.get_int("crop", c.crop));
  c.epochs = static_cast<int>(kv.get_int("epochs", c.epochs));
  c.seed = kv.get_u64("seed", c.seed);
  c.freeze_encoder = kv.get_bool("freeze_encoder", c.freeze_encoder);
  c.freeze_weights = kv.get_bool("freeze_weights", c.freeze_weights);
  c.schedule_per_iteration = kv.get_bool("schedule_per_iteration", c.schedule_per_iteration);
  c.augment = kv.get_bool("augment", c.augment);
  c.mode = kv.get_bool("consistency", true) ? LossMode::kConsistency : LossMode::kSilog;
  c.caps.sparse = kv.get_double("depth_cap_sparse", c.caps.sparse);
  c.caps.dense = kv.get_double("depth_cap_dense", c.caps.dense);
  c.mix_ratio = kv.get_double("mix_ratio", c.mix_ratio);
  c.max_skip_fraction = kv.get_double("max_skip_fraction", c.max_skip_fraction);
  c.model.enc1_channels = static_cast<int>(kv.get_int("enc1_channels", c.model.enc1_channels));
  c.model.enc2_channels = static_cast<int>(kv.get_int("enc2_channels", c.model.enc2_channels));
  c.model.enc3_channels = static_cast<int>(kv.get_int("enc3_channels", c.model.enc3_channels));
  c.model.kernel = static_cast<int>(kv.get_int("kernel", c.model.kernel));
  c.model.depth_scale = kv.get_double("depth_scale", c.model.depth_scale);
  c.model.coord_channels = kv.get_bool("coord_channels", c.model.coord_channels);
  c.weights.alpha = kv.get_double("alpha", c.weights.alpha);
  c.weights.beta = kv.get_double("beta", c.weights.beta);
  c.weights.gamma = kv.get_double("gamma", c.weights.gamma);
  c.weights.lambda = kv.get_double("lambda", c.weights.lambda);
  c.weights.epsilon = kv.get_double("epsilon", c.weights.epsilon);
  c.validate();
  return c;
}

void adamw_step(std::span<double> w, std::span<const double> g, AdamMoments& state, long t, double lr,
                double beta1, double beta2, double eps, double weight_decay) {
  require(w.size() == g.size(), "adamw_step: parameter and gradient sizes differ");
  require(t >= 1, "adamw_step: step count is 1-based");
  if (state.m.size() != w.size()) {
    state.m.assign(w.size(), 0.0);
    state.v.assign(w.size(), 0.0);
  }
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < w.size(); ++i) {
    state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g[i];
    state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g[i] * g[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    w[i] -= lr * (m_hat / (std::sqrt(v_hat) + eps) + weight_decay * w[i]);
  }
}

double cosine_lr(double t, const TrainConfig& config) {
  return config.eta_min +
         (config.lr - config.eta_min) / 2.0 * (1.0 + std::cos(std::numbers::pi * t / config.t_max));
}

double global_norm(std::span<const std::span<double>> grads) {
  double ss = 0.0;
  for (const auto& g : grads) {
    for (double x : g) ss += x * x;
  }
  return std::sqrt(ss);
}

double clip_grad_norm(std::span<const std::span<double>> grads, double max_norm) {
  require(max_norm > 0.0, "clip_grad_norm: max_norm must be positive");
  const double norm = global_norm(grads);
  if (norm > max_norm) {
    const double factor = max_norm / norm;
    for (const auto& g : grads) {
      for (double& x : g) x *= factor;
    }
  }
  return norm;
}

AugmentedSample augment_with(const SampleRecord& sample, double scale, int x0, int y0, int crop) {
  require(scale > 0.0 && crop > 0, "augment: scale and crop must be positive");
  const int w = sample.image.width, h = sample.image.height;
  const int rw = std::max(1, static_cast<int>(std::lround(w * scale)));
  const int rh = std::max(1, static_cast<int>(std::lround(h * scale)));
  require(x0 >= 0 && y0 >= 0 && x0 <= std::max(0, rw - crop) && y0 <= std::max(0, rh - crop),
          "augment: crop origin outside the resized image");

  AugmentedSample out;
  out.scale = scale;
  out.x0 = x0;
  out.y0 = y0;
  const double sx = static_cast<double>(rw) / w, sy = static_cast<double>(rh) / h;
  const CameraIntrinsics& K = sample.intrinsics;
  out.intrinsics = {K.fx * sx, K.fy * sy, sx * (K.cx + 0.5) - 0.5 - x0, sy * (K.cy + 0.5) - 0.5 - y0, crop, crop};

  const Image resized = rw == w && rh == h ? sample.image : resize_bilinear(sample.image, rw, rh);
  out.image = Image(crop, crop);
  for (int v = 0; v < crop && v + y0 < rh; ++v) {
    for (int u = 0; u < crop && u + x0 < rw; ++u) {
      for (int c = 0; c < 3; ++c) out.image.at(u, v, c) = resized.at(u + x0, v + y0, c);
    }
  }
  auto cut = [&](const DepthMap& depth) {
    const DepthMap r = rw == w && rh == h ? depth : resize_nearest(depth, rw, rh);
    DepthMap o(crop, crop, depth.kind);
    for (int v = 0; v < crop && v + y0 < rh; ++v) {
      for (int u = 0; u < crop && u + x0 < rw; ++u) o.at(u, v) = r.at(u + x0, v + y0) / scale;
    }
    return o;
  };
  out.sparse = cut(sample.sparse);
  if (sample.dense) out.dense = cut(*sample.dense);
  return out;
}

AugmentedSample augment(const SampleRecord& sample, const TrainConfig& config, SplitMix64& rng) {
  const double s = config.augment ? rng.uniform(config.resize_min, config.resize_max) : 1.0;
  const int rw = std::max(1, static_cast<int>(std::lround(sample.image.width * s)));
  const int rh = std::max(1, static_cast<int>(std::lround(sample.image.height * s)));
  const int x0 = rw > config.crop ? static_cast<int>(rng.below(static_cast<std::uint64_t>(rw - config.crop + 1))) : 0;
  const int y0 = rh > config.crop ? static_cast<int>(rng.below(static_cast<std::uint64_t>(rh - config.crop + 1))) : 0;
  return augment_with(sample, s, x0, y0, config.crop);
}

MixedSampler::MixedSampler(int n_dense, int n_sparse, int batch_size, double mix_ratio, std::uint64_t seed)
    : n_{n_dense, n_sparse}, batch_size_(batch_size), mix_ratio_(mix_ratio), seed_(seed) {
  require(n_dense >= 0 && n_sparse >= 0 && n_dense + n_sparse > 0, "sampler: no samples");
  require(batch_size > 0, "sampler: batch size must be positive");
  require(mix_ratio >= 0.0 && mix_ratio <= 1.0, "sampler: mix ratio must lie in [0, 1]");
}

std::vector<Batch> MixedSampler::epoch(int epoch) const {
  const SplitMix64 root = SplitMix64(seed_).split("sampler").split(static_cast<std::uint64_t>(epoch));
  std::vector<Batch> per[2];
  for (int s = 0; s < 2; ++s) {
    std::vector<int> order(static_cast<std::size_t>(n_[s]));
    for (int i = 0; i < n_[s]; ++i) order[static_cast<std::size_t>(i)] = i;
    SplitMix64 rng = root.split(static_cast<std::uint64_t>(s));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (std::size_t i = 0; i < order.size(); i += static_cast<std::size_t>(batch_size_)) {
      const std::size_t end = std::min(order.size(), i + static_cast<std::size_t>(batch_size_));
      per[s].push_back({s, std::vector<int>(order.begin() + static_cast<long>(i), order.begin() + static_cast<long>(end))});
    }
  }
  // Smooth weighted round robin between the two splits.
  const double weight[2] = {mix_ratio_, 1.0 - mix_ratio_};
  double credit[2] = {0.0, 0.0};
  std::size_t next[2] = {0, 0};
  std::vector<Batch> out;
  while (next[0] < per[0].size() || next[1] < per[1].size()) {
    const bool open0 = next[0] < per[0].size(), open1 = next[1] < per[1].size();
    int pick;
    if (open0 && open1) {
      credit[0] += weight[0];
      credit[1] += weight[1];
      pick = credit[0] >= credit[1] ? 0 : 1;
      credit[pick] -= weight[0] + weight[1];
    } else {
      pick = open0 ? 0 : 1;
    }
    out.push_back(per[pick][next[pick]++]);
  }
  return out;
}

CanonicalSpace training_space(const Dataset* dense_split, const Dataset* sparse_split) {
  std::vector<double> focals;
  if (dense_split) focals.push_back(dense_split->intrinsics.fx);
  if (sparse_split) focals.push_back(sparse_split->intrinsics.fx);
  require(!focals.empty(), "training_space: no datasets");
  return mean_focal(focals);
}

std::vector<ValidationRow> validate(const DepthNet& model, const CanonicalSpace& space,
                                    std::span<const ValidationSplit> splits, const LossCaps& caps) {
  std::vector<ValidationRow> rows;
  for (const auto& split : splits) {
    if (split.data == nullptr || split.data->samples.empty()) continue;
    std::vector<DepthMap> preds, sparse, dense;
    for (const auto& s : split.data->samples) {
      preds.push_back(from_canonical(model.predict(s.image, s.intrinsics), s.intrinsics.fx, space));
      sparse.push_back(s.sparse);
      if (s.dense) dense.push_back(*s.dense);
    }
    rows.push_back({split.name, "sparse", evaluate_corpus(preds, sparse, caps.sparse)});
    if (dense.size() == preds.size()) {
      rows.push_back({split.name, "dense", evaluate_corpus(preds, dense, caps.dense)});
    }
  }
  return rows;
}

namespace {

constexpr char kStateMagic[] = "MCDEPTH-STATE";

void put_u64(std::ostream& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_f64(std::ostream& out, double x) { put_u64(out, std::bit_cast<std::uint64_t>(x)); }

std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    const int c = in.get();
    if (c == EOF) fail(ErrorKind::kData, "trainer state: truncated file");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}
double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

void put_moments(std::ostream& out, const std::vector<AdamMoments>& all) {
  put_u64(out, all.size());
  for (const auto& m : all) {
    put_u64(out, m.m.size());
    for (double x : m.m) put_f64(out, x);
    for (double x : m.v) put_f64(out, x);
  }
}

std::vector<AdamMoments> get_moments(std::istream& in) {
  std::vector<AdamMoments> all(get_u64(in));
  for (auto& m : all) {
    const std::uint64_t n = get_u64(in);
    m.m.resize(n);
    m.v.resize(n);
    for (double& x : m.m) x = get_f64(in);
    for (double& x : m.v) x = get_f64(in);
  }
  return all;
}

bool same(const std::vector<AdamMoments>& a, const std::vector<AdamMoments>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].m != b[i].m || a[i].v != b[i].v) return false;
  }
  return true;
}

}  // namespace

void TrainerState::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  model.save(dir / "model.ckpt");
  std::ofstream out(dir / "trainer.state", std::ios::binary);
  if (!out) fail(ErrorKind::kIo, "cannot write trainer state in " + dir.string());
  out.write(kStateMagic, sizeof(kStateMagic) - 1);
  put_u64(out, static_cast<std::uint64_t>(step));
  put_u64(out, static_cast<std::uint64_t>(next_epoch));
  for (double x : {weights.alpha, weights.beta, weights.gamma, weights.lambda, weights.epsilon}) put_f64(out, x);
  put_moments(out, model_moments);
  put_moments(out, weight_moments);
  if (!out) fail(ErrorKind::kIo, "trainer state write failed in " + dir.string());
}

TrainerState TrainerState::load(const std::filesystem::path& dir) {
  TrainerState s;
  s.model = DepthNet::load(dir / "model.ckpt");
  std::ifstream in(dir / "trainer.state", std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open trainer state in " + dir.string());
  char magic[sizeof(kStateMagic) - 1];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kStateMagic, sizeof(magic)) != 0) {
    fail(ErrorKind::kData, "not an mcdepth trainer state: " + dir.string());
  }
  s.step = static_cast<long>(get_u64(in));
  s.next_epoch = static_cast<int>(get_u64(in));
  s.weights.alpha = get_f64(in);
  s.weights.beta = get_f64(in);
  s.weights.gamma = get_f64(in);
  s.weights.lambda = get_f64(in);
  s.weights.epsilon = get_f64(in);
  s.model_moments = get_moments(in);
  s.weight_moments = get_moments(in);
  return s;
}

bool TrainerState::operator==(const TrainerState& o) const {
  return model == o.model && weights.alpha == o.weights.alpha && weights.beta == o.weights.beta &&
         weights.gamma == o.weights.gamma && weights.lambda == o.weights.lambda &&
         weights.epsilon == o.weights.epsilon && same(model_moments, o.model_moments) &&
         same(weight_moments, o.weight_moments) && step == o.step && next_epoch == o.next_epoch;
}

TrainResult fit(const Dataset* dense_split, const Dataset* sparse_split, const TrainConfig& config,
                const FitOptions& options) {
  config.validate();
  require(dense_split != nullptr || sparse_split != nullptr, "fit: no training data", ErrorKind::kData);
  const std::size_t n_dense = dense_split ? dense_split->samples.size() : 0;
  const std::size_t n_sparse = sparse_split ? sparse_split->samples.size() : 0;
  require(n_dense + n_sparse > 0, "fit: training splits are empty", ErrorKind::kData);

  TrainResult result;
  result.space = training_space(n_dense ? dense_split : nullptr, n_sparse ? sparse_split : nullptr);
  TrainerState& st = result.state;
  if (options.resume) {
    st = *options.resume;
    require(st.model.config() == config.model, "fit: resumed model configuration differs", ErrorKind::kConfig);
  } else {
    st.model = DepthNet(config.model);
    st.model.init(SplitMix64(config.seed).split("init").next());
    st.weights = config.weights;
    st.weights.clamp();
  }
  auto& params = st.model.parameters();
  st.model_moments.resize(params.size());
  st.weight_moments.resize(3);

  const MixedSampler sampler(static_cast<int>(n_dense), static_cast<int>(n_sparse), config.batch_size,
                             n_dense && n_sparse ? config.mix_ratio : 0.5, config.seed);
  const int last_epoch = std::min(config.epochs, options.stop_after_epoch.value_or(config.epochs));
  const SplitMix64 aug_root = SplitMix64(config.seed).split("augment");
  long total_batches = 0, total_skipped = 0;

  for (int epoch = st.next_epoch; epoch < last_epoch; ++epoch) {
    const std::vector<Batch> batches = sampler.epoch(epoch);
    EpochRecord er;
    er.epoch = epoch;
    er.lr = cosine_lr(epoch, config);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const Batch& batch = batches[b];
      const Dataset& ds = batch.source == 0 ? *dense_split : *sparse_split;
      const double lr = config.schedule_per_iteration
                            ? cosine_lr(epoch + static_cast<double>(b) / static_cast<double>(batches.size()), config)
                            : er.lr;
      SplitMix64 rng = aug_root.split(static_cast<std::uint64_t>(epoch)).split(b);
      std::vector<AugmentedSample> views;
      std::vector<double> focals;
      for (int idx : batch.indices) {
        const SampleRecord& s = ds.samples[static_cast<std::size_t>(idx)];
        views.push_back(augment(s, config, rng));
        focals.push_back(s.intrinsics.fx);
      }
      std::vector<const Image*> images;
      std::vector<CameraIntrinsics> intrinsics;
      for (const auto& v : views) {
        images.push_back(&v.image);
        intrinsics.push_back(v.intrinsics);
      }

      ad::Tape tape;
      const DepthNet::Output out = st.model.forward(tape, model_input(images, intrinsics, config.model), true);
      const WeightVars wv = bind_weights(tape, st.weights, !config.freeze_weights);
      const std::size_t plane = static_cast<std::size_t>(config.crop) * config.crop;
      StepRecord rec;
      rec.epoch = epoch;
      rec.source = batch.source;
      rec.lr = lr;
      ad::Var total;
      for (std::size_t i = 0; i < views.size(); ++i) {
        const DepthMap* dense = views[i].dense ? &*views[i].dense : nullptr;
        try {
          FinalLoss fl = final_loss(out.depth, focals[i], result.space, views[i].sparse, dense, wv, st.weights,
                                    config.mode, config.caps, i * plane);
          total = total.valid() ? ad::add(total, fl.loss) : fl.loss;
          if (rec.used == 0) {
            rec.parts = fl.report;
          } else {
            rec.parts.l_silog_sparse += fl.report.l_silog_sparse;
            if (fl.report.l_silog_dense) {
              rec.parts.l_silog_dense = rec.parts.l_silog_dense.value_or(0.0) + *fl.report.l_silog_dense;
              rec.parts.l_con = rec.parts.l_con.value_or(0.0) + *fl.report.l_con;
            }
            rec.parts.n_valid_sparse += fl.report.n_valid_sparse;
            rec.parts.n_valid_dense += fl.report.n_valid_dense;
          }
          ++rec.used;
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::kEmptyOverlap) throw;
        }
      }
      ++total_batches;
      if (rec.used == 0) {
        rec.skipped = true;
        rec.weights = st.weights;
        ++er.skipped;
        ++total_skipped;
        spdlog::debug("epoch {} batch {}: no supervised pixels, skipped", epoch, b);
        result.steps.push_back(rec);
        if (options.on_step) options.on_step(rec);
        continue;
      }
      const double inv = 1.0 / rec.used;
      rec.parts.l_silog_sparse *= inv;
      if (rec.parts.l_silog_dense) {
        *rec.parts.l_silog_dense *= inv;
        *rec.parts.l_con *= inv;
      }
      const ad::Var loss = ad::scale(total, inv);
      rec.loss = loss.item();
      rec.parts.l_final = rec.loss;
      tape.backward(loss);

      ++st.step;
      rec.step = st.step;
      std::vector<std::vector<double>> grads;
      std::vector<std::size_t> trainable;
      for (std::size_t p = 0; p < params.size(); ++p) {
        if (config.freeze_encoder && params[p].encoder) continue;
        const auto g = out.params[p].grad().data();
        grads.emplace_back(g.begin(), g.end());
        trainable.push_back(p);
      }
      std::vector<std::span<double>> views_g(grads.begin(), grads.end());
      rec.grad_norm = clip_grad_norm(views_g, config.max_grad_norm);
      rec.clipped_norm = global_norm(views_g);
      for (std::size_t k = 0; k < trainable.size(); ++k) {
        const std::size_t p = trainable[k];
        adamw_step(params[p].value.data(), grads[k], st.model_moments[p], st.step, lr, config.adam_beta1,
                   config.adam_beta2, config.adam_eps, config.weight_decay);
      }
      if (!config.freeze_weights) {
        double* w[3] = {&st.weights.alpha, &st.weights.beta, &st.weights.gamma};
        const ad::Var* v[3] = {&wv.alpha, &wv.beta, &wv.gamma};
        for (int k = 0; k < 3; ++k) {
          const double g = v[k]->grad().item();
          adamw_step(std::span<double>(w[k], 1), std::span<const double>(&g, 1), st.weight_moments[static_cast<std::size_t>(k)],
                     st.step, lr, config.adam_beta1, config.adam_beta2, config.adam_eps, 0.0);
        }
        st.weights.clamp();
      }
      rec.weights = st.weights;
      loss_sum += rec.loss;
      ++er.batches;
      result.steps.push_back(rec);
      if (options.on_step) options.on_step(rec);
    }
    if (static_cast<double>(total_skipped) > config.max_skip_fraction * static_cast<double>(total_batches)) {
      fail(ErrorKind::kData, "train: " + std::to_string(total_skipped) + " of " + std::to_string(total_batches) +
                                 " batches had no supervised pixels");
    }
    er.mean_loss = er.batches ? loss_sum / er.batches : 0.0;
    er.validation = validate(st.model, result.space, options.validation, config.caps);
    st.next_epoch = epoch + 1;
    spdlog::info("epoch {} lr {:.6g} mean loss {:.6g} ({} batches, {} skipped)", epoch, er.lr, er.mean_loss,
                 er.batches, er.skipped);
    result.epochs.push_back(er);
    if (options.on_epoch) options.on_epoch(er);
  }
  return result;
}

std::string format_step(const StepRecord& s) {
  std::ostringstream out;
  out << "step=" << s.step << " epoch=" << s.epoch << " source=" << (s.source == 0 ? "dense_and_sparse" : "sparse_only")
      << " lr=" << format_double(s.lr) << " skipped=" << (s.skipped ? 1 : 0) << " used=" << s.used
      << " loss=" << format_double(s.loss) << " l_silog_sparse=" << format_double(s.parts.l_silog_sparse);
  if (s.parts.l_silog_dense) out << " l_silog_dense=" << format_double(*s.parts.l_silog_dense);
  if (s.parts.l_con) out << " l_con=" << format_double(*s.parts.l_con);
  out << " grad_norm=" << format_double(s.grad_norm) << " clipped_norm=" << format_double(s.clipped_norm)
      << " alpha=" << format_double(s.weights.alpha) << " beta=" << format_double(s.weights.beta)
      << " gamma=" << format_double(s.weights.gamma);
  return out.str();
}

std::string format_epoch(const EpochRecord& e) {
  std::ostringstream out;
  out << "epoch=" << e.epoch << " lr=" << format_double(e.lr) << " mean_loss=" << format_double(e.mean_loss)
      << " batches=" << e.batches << " skipped=" << e.skipped;
  for (const auto& row : e.validation) {
    out << ' ' << row.split << '/' << row.mask << ".rmse=" << format_double(row.metrics.rmse) << ' ' << row.split
        << '/' << row.mask << ".delta1=" << format_double(row.metrics.delta1);
  }
  return out.str();
}

}  // namespace mcdepth
