#include "vra/train.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "vra/serialization.hpp"

namespace vra {

TrainConfig TrainConfig::desk() { return TrainConfig{}; }

TrainConfig TrainConfig::full_scale() {
  TrainConfig c;
  c.epochs = 100;
  c.warmup_epochs = 5;
  c.batch_size = 32;
  c.frames_per_clip = 16;
  c.horizontal_flip = true;
  return c;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ParameterError("train.epochs must be >= 1");
  if (!(peak_lr > 0.0)) throw ParameterError("train.peak_lr must be > 0");
  if (warmup_epochs < 0 || warmup_epochs >= epochs) throw ParameterError("train.warmup_epochs must be in [0, epochs)");
  if (batch_size < 1) throw ParameterError("train.batch_size must be >= 1");
  if (frames_per_clip < 1) throw ParameterError("train.frames_per_clip must be >= 1");
  if (crop_padding < 0) throw ParameterError("train.crop_padding must be >= 0");
  if (momentum < 0.0 || momentum >= 1.0) throw ParameterError("train.momentum must be in [0, 1)");
  if (weight_decay < 0.0) throw ParameterError("train.weight_decay must be >= 0");
}

double learning_rate(const TrainConfig& cfg, long step, long steps_per_epoch) {
  const double warmup = double(cfg.warmup_epochs) * steps_per_epoch;
  const double total = double(cfg.epochs) * steps_per_epoch;
  const double s = double(step);
  if (s < warmup) return cfg.peak_lr * (s + 1.0) / warmup;
  const double progress = (s - warmup) / std::max(1.0, total - warmup);
  return 0.5 * cfg.peak_lr * (1.0 + std::cos(3.141592653589793 * std::min(progress, 1.0)));
}

namespace {

int temporal_offset(int frames, int window, Rng* rng) {
  if (frames <= window) return 0;
  return rng ? int(rng->below(frames - window + 1)) : (frames - window) / 2;
}

/// Temporal window of `window` frames, then a translation by up to `pad`
/// pixels with edge replication, then an optional horizontal flip.
VideoClip augment(const VideoClip& clip, const TrainConfig& cfg, Rng* rng) {
  const ClipShape in = clip.shape;
  const int frames = std::min(in.frames, cfg.frames_per_clip);
  const int t0 = temporal_offset(in.frames, frames, rng);
  int dy = 0, dx = 0;
  bool flip = false;
  if (rng && cfg.random_crop && cfg.crop_padding > 0) {
    dy = int(rng->below(2 * cfg.crop_padding + 1)) - cfg.crop_padding;
    dx = int(rng->below(2 * cfg.crop_padding + 1)) - cfg.crop_padding;
  }
  if (rng && cfg.horizontal_flip) flip = rng->bernoulli(0.5);
  if (t0 == 0 && frames == in.frames && dy == 0 && dx == 0 && !flip) return clip;

  VideoClip out(ClipShape{frames, in.height, in.width}, clip.label_id, clip.clip_id);
  for (int t = 0; t < frames; ++t) {
    for (int h = 0; h < in.height; ++h) {
      const int sh = std::clamp(h + dy, 0, in.height - 1);
      for (int w = 0; w < in.width; ++w) {
        int sw = std::clamp(w + dx, 0, in.width - 1);
        if (flip) sw = in.width - 1 - sw;
        for (int c = 0; c < 3; ++c) out.at(t, h, w, c) = clip.at(t0 + t, sh, sw, c);
      }
    }
  }
  return out;
}

template <typename Scalar>
void sgd_step(Network<Scalar>& net, const Gradients<Scalar>& g, Gradients<Scalar>& velocity, const TrainConfig& cfg,
              double lr) {
  const Scalar mu = Scalar(cfg.momentum), wd = Scalar(cfg.weight_decay), eta = Scalar(lr);
  auto update = [&](auto& param, const auto& grad, auto& vel, bool decay) {
    if (decay) {
      vel = mu * vel + grad + wd * param;
    } else {
      vel = mu * vel + grad;
    }
    param -= eta * vel;
  };
  auto& blocks = net.blocks();
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    update(blocks[i].weight, g.weight[i], velocity.weight[i], true);
    update(blocks[i].bias, g.bias[i], velocity.bias[i], false);
  }
  update(net.head_weight(), g.head_weight, velocity.head_weight, true);
  update(net.head_bias(), g.head_bias, velocity.head_bias, false);
}

}  // namespace

template <typename Scalar>
double evaluate_accuracy(const Network<Scalar>& model, const Dataset& data) {
  if (data.empty()) return 0.0;
  int correct = 0;
  for (const auto& clip : data.clips) correct += model.predict(clip) == clip.label_id;
  return double(correct) / data.size();
}

template <typename Scalar>
Network<Scalar> train_model(const Dataset& train, const Architecture& arch_in, const TrainConfig& cfg,
                            const Dataset* val, TrainLog* log) {
  cfg.validate();
  if (train.empty()) throw TrainingError("training dataset is empty", 0);
  Architecture arch = arch_in;
  if (arch.num_classes == 0) arch.num_classes = train.ontology.size();
  if (arch.num_classes != train.ontology.size()) {
    throw ParameterError("architecture class count does not match the training ontology");
  }
  for (const auto& c : train.clips) {
    if (c.label_id < 0 || c.label_id >= arch.num_classes) throw LabelError("clip '" + c.clip_id + "' has a bad label");
  }

  Network<Scalar> net(arch, mix_seed(cfg.seed, 0xA11CEULL));
  net.ontology = train.ontology;
  Rng rng(mix_seed(cfg.seed, 0xB0BULL));
  Gradients<Scalar> velocity = net.zero_gradients();
  Gradients<Scalar> grads = net.zero_gradients();

  const long n = train.size();
  const long steps_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  std::vector<long> order(n);
  std::iota(order.begin(), order.end(), 0L);
  long step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (long i = n - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
    double epoch_loss = 0.0;
    for (long start = 0; start < n; start += cfg.batch_size) {
      const long end = std::min(n, start + long(cfg.batch_size));
      grads.set_zero();
      const double inv_batch = 1.0 / double(end - start);
      for (long k = start; k < end; ++k) {
        const VideoClip& src = train.clips[order[k]];
        const VideoClip clip = augment(src, cfg, &rng);
        const auto trace = net.forward(clip);
        const Eigen::VectorXd p = softmax(trace.logits.template cast<double>());
        const double loss = -std::log(std::max(p[clip.label_id], 1e-300));
        if (!std::isfinite(loss) || !trace.logits.allFinite()) {
          throw TrainingError("loss became non-finite", epoch);
        }
        epoch_loss += loss;
        Eigen::VectorXd dlogits = p;
        dlogits[clip.label_id] -= 1.0;
        const Vector<Scalar> g = (dlogits * inv_batch).cast<Scalar>();
        net.backward(trace, {}, &g, &grads, false);
      }
      sgd_step(net, grads, velocity, cfg, learning_rate(cfg, step, steps_per_epoch));
      ++step;
    }
    epoch_loss /= double(n);
    if (!std::isfinite(epoch_loss)) throw TrainingError("loss became non-finite", epoch);
    if (log) log->epoch_loss.push_back(epoch_loss);
  }
  if (val && !val->empty()) net.val_accuracy = evaluate_accuracy(net, *val);
  if (log) log->val_accuracy = net.val_accuracy;
  return net;
}

namespace {

constexpr char kMagic[8] = {'V', 'R', 'A', 'C', 'K', 'P', 'T', '1'};

template <typename Scalar>
constexpr const char* scalar_name() {
  return sizeof(Scalar) == 4 ? "float32" : "float64";
}

template <typename T>
void write_raw(std::ostream& out, const T* data, Eigen::Index n) {
  static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");
  out.write(reinterpret_cast<const char*>(data), std::streamsize(sizeof(T) * n));
}

template <typename T>
void read_raw(std::istream& in, T* data, Eigen::Index n, const std::string& path) {
  in.read(reinterpret_cast<char*>(data), std::streamsize(sizeof(T) * n));
  if (!in) throw FormatError("checkpoint '" + path + "' is truncated");
}

template <typename Stored>
Network<Stored> read_parameters(std::istream& in, const nlohmann::json& header, const std::string& path) {
  Network<Stored> net(header.at("architecture").get<Architecture>(), 0);
  for (auto& b : net.blocks()) {
    read_raw(in, b.weight.data(), b.weight.size(), path);
    read_raw(in, b.bias.data(), b.bias.size(), path);
  }
  read_raw(in, net.head_weight().data(), net.head_weight().size(), path);
  read_raw(in, net.head_bias().data(), net.head_bias().size(), path);
  const auto& onto = header.at("ontology");
  net.ontology = LabelOntology(onto.at("dataset_name").get<std::string>(),
                               onto.at("class_names").get<std::vector<std::string>>());
  net.val_accuracy = header.at("val_accuracy").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                                         : header.at("val_accuracy").get<double>();
  return net;
}

}  // namespace

template <typename Scalar>
void save_checkpoint(const Network<Scalar>& model, const std::filesystem::path& path) {
  nlohmann::json header;
  header["format"] = "vra-checkpoint";
  header["version"] = 1;
  header["scalar"] = scalar_name<Scalar>();
  header["architecture"] = model.architecture();
  header["ontology"] = {{"dataset_name", model.ontology.dataset_name()},
                        {"class_names", model.ontology.class_names()}};
  header["val_accuracy"] = std::isnan(model.val_accuracy) ? nlohmann::json(nullptr) : nlohmann::json(model.val_accuracy);
  header["parameter_count"] = model.parameter_count();
  const std::string text = header.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint '" + path.string() + "'");
  out.write(kMagic, sizeof(kMagic));
  const std::uint64_t len = text.size();
  write_raw(out, &len, 1);
  out.write(text.data(), std::streamsize(text.size()));
  for (const auto& b : model.blocks()) {
    write_raw(out, b.weight.data(), b.weight.size());
    write_raw(out, b.bias.data(), b.bias.size());
  }
  write_raw(out, model.head_weight().data(), model.head_weight().size());
  write_raw(out, model.head_bias().data(), model.head_bias().size());
  if (!out) throw IoError("failed writing checkpoint '" + path.string() + "'");
}

template <typename Scalar>
Network<Scalar> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open checkpoint '" + path.string() + "'");
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("'" + path.string() + "' is not a checkpoint");
  }
  std::uint64_t len = 0;
  read_raw(in, &len, 1, path.string());
  if (len > (1u << 26)) throw FormatError("checkpoint header of '" + path.string() + "' is implausibly large");
  std::string text(len, '\0');
  in.read(text.data(), std::streamsize(len));
  if (!in) throw FormatError("checkpoint '" + path.string() + "' is truncated");
  try {
    const auto header = nlohmann::json::parse(text);
    const auto scalar = header.at("scalar").get<std::string>();
    if (scalar == scalar_name<Scalar>()) return read_parameters<Scalar>(in, header, path.string());
    if (scalar == "float32") return read_parameters<float>(in, header, path.string()).template cast<Scalar>();
    if (scalar == "float64") return read_parameters<double>(in, header, path.string()).template cast<Scalar>();
    throw FormatError("checkpoint '" + path.string() + "' has unknown scalar type '" + scalar + "'");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint '" + path.string() + "' has a malformed header: " + e.what());
  }
}

template Network<float> train_model(const Dataset&, const Architecture&, const TrainConfig&, const Dataset*, TrainLog*);
template Network<double> train_model(const Dataset&, const Architecture&, const TrainConfig&, const Dataset*, TrainLog*);
template double evaluate_accuracy(const Network<float>&, const Dataset&);
template double evaluate_accuracy(const Network<double>&, const Dataset&);
template void save_checkpoint(const Network<float>&, const std::filesystem::path&);
template void save_checkpoint(const Network<double>&, const std::filesystem::path&);
template Network<float> load_checkpoint(const std::filesystem::path&);
template Network<double> load_checkpoint(const std::filesystem::path&);

}  // namespace vra
