#include "sdagan/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "sdagan/data_io.hpp"
#include "sdagan/ops.hpp"

namespace sdagan {
namespace {

bool power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void require_finite(double v, std::uint64_t iteration, const char* name) {
  if (!std::isfinite(v)) throw DivergenceError(iteration, name);
}

template <typename T>
void configure(AdamState<T>& st, const TrainConfig& cfg, std::uint64_t iteration) {
  st.lr = cfg.lr * cfg.lr_factor(iteration);
  st.beta1 = cfg.beta1;
  st.beta2 = cfg.beta2;
}

template <typename T>
Tensor<T> disc_input(const Tensor<T>& img, std::size_t factor) {
  if (factor <= 1) return img;
  Tensor<T> batched = ops::reshape(img, Shape{1, img.dim(0), img.dim(1), img.dim(2)});
  return ops::upsample_nearest(batched, factor);
}

void check_image(const Tensor<float>& img, std::size_t size, const char* what) {
  if (img.shape() != Shape{3, size, size}) {
    throw DimensionError(std::string(what) + " image has shape " + shape_to_string(img.shape()) + ", expected " +
                         shape_to_string(Shape{3, size, size}));
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (iterations < 1) throw ArgumentError("iterations must be ≥ 1");
  if (!power_of_two(image_size) || image_size < 32) {
    throw ArgumentError("image size must be a power of two ≥ 32, got " + std::to_string(image_size));
  }
  if (generator.n < 2) throw ArgumentError("n must be ≥ 2");
  if (generator.base_width < 4 || disc_base_width < 1) throw ArgumentError("network widths too small");
  if (!(lr > 0)) throw ArgumentError("learning rate must be positive");
  if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1)) throw ArgumentError("Adam betas must lie in [0, 1)");
  if (losses.w_cycle < 0 || losses.w_identity < 0) throw ArgumentError("loss weights must be non-negative");
}

double TrainConfig::lr_factor(std::uint64_t i) const {
  const std::uint64_t ds = decay_start.value_or(iterations / 2);
  if (i <= ds || ds >= iterations) return 1.0;
  return 1.0 - static_cast<double>(i - ds) / static_cast<double>(iterations - ds + 1);
}

TrainState init_train_state(const TrainConfig& cfg) {
  std::mt19937_64 master(cfg.seed);
  std::uint64_t seeds[6];
  for (auto& s : seeds) s = master();
  TrainState s;
  s.image_size = cfg.image_size;
  s.gen_ab = init_generator(seeds[0], cfg.generator);
  s.gen_ba = init_generator(seeds[1], cfg.generator);
  s.disc_a = init_discriminator(seeds[2], cfg.disc_base_width);
  s.disc_b = init_discriminator(seeds[3], cfg.disc_base_width);
  s.adam_gen_ab = AdamState<float>::for_params(s.gen_ab.weights, cfg.lr, cfg.beta1, cfg.beta2);
  s.adam_gen_ba = AdamState<float>::for_params(s.gen_ba.weights, cfg.lr, cfg.beta1, cfg.beta2);
  s.adam_disc_a = AdamState<float>::for_params(s.disc_a.weights, cfg.lr, cfg.beta1, cfg.beta2);
  s.adam_disc_b = AdamState<float>::for_params(s.disc_b.weights, cfg.lr, cfg.beta1, cfg.beta2);
  s.pool_a = ImagePool(cfg.pool_size, seeds[4]);
  s.pool_b = ImagePool(cfg.pool_size, seeds[5]);
  return s;
}

template <typename T>
GeneratorLosses<T> generator_objective(const GeneratorConfig& g_cfg, const ParamStore<T>& g_ab,
                                       const GeneratorConfig& h_cfg, const ParamStore<T>& g_ba,
                                       const ParamStore<T>& d_a, const ParamStore<T>& d_b, const Tensor<T>& x,
                                       const Tensor<T>& y, const LossWeights& weights, std::size_t disc_upsample,
                                       const PhasePins* pins) {
  GeneratorLosses<T> out;
  auto opts = [pins](std::shared_ptr<const std::vector<double>> PhasePins::*which) {
    ForwardOptions o;
    if (pins) o.shared_phase = pins->*which;
    return o;
  };
  auto phase_of = [](const GeneratorOutput<T>& o) {
    return std::make_shared<const std::vector<double>>(o.shared_phase.vec().begin(), o.shared_phase.vec().end());
  };
  const GeneratorOutput<T> gx = generator_forward(g_cfg, g_ab, x, opts(&PhasePins::x));
  const GeneratorOutput<T> hy = generator_forward(h_cfg, g_ba, y, opts(&PhasePins::y));
  out.fake_b = gx.image;
  out.fake_a = hy.image;
  const GeneratorOutput<T> rec_a = generator_forward(h_cfg, g_ba, out.fake_b, opts(&PhasePins::fake_b));
  const GeneratorOutput<T> rec_b = generator_forward(g_cfg, g_ab, out.fake_a, opts(&PhasePins::fake_a));
  out.phases = {phase_of(gx), phase_of(hy), phase_of(rec_a), phase_of(rec_b)};
  out.cycle = cycle_loss(x, rec_a.image, y, rec_b.image);
  // Identity forwards are skipped when their weight is zero.
  if (weights.w_identity > 0) {
    out.identity = identity_loss(x, generator_forward(h_cfg, g_ba, x, opts(&PhasePins::x)).image, y,
                                 generator_forward(g_cfg, g_ab, y, opts(&PhasePins::y)).image);
  } else {
    out.identity = Tensor<T>::scalar(T(0));
  }
  out.adv_ab = adversarial_g(discriminator_forward(d_b, disc_input(out.fake_b, disc_upsample)), weights.gan_mode,
                             weights.minimax_generator);
  out.adv_ba = adversarial_g(discriminator_forward(d_a, disc_input(out.fake_a, disc_upsample)), weights.gan_mode,
                             weights.minimax_generator);
  out.total = total_generator_loss(out.adv_ab, out.adv_ba, out.cycle, out.identity, weights);
  return out;
}

template GeneratorLosses<float> generator_objective<float>(const GeneratorConfig&, const ParamStore<float>&,
                                                           const GeneratorConfig&, const ParamStore<float>&,
                                                           const ParamStore<float>&, const ParamStore<float>&,
                                                           const Tensor<float>&, const Tensor<float>&,
                                                           const LossWeights&, std::size_t, const PhasePins*);
template GeneratorLosses<double> generator_objective<double>(const GeneratorConfig&, const ParamStore<double>&,
                                                             const GeneratorConfig&, const ParamStore<double>&,
                                                             const ParamStore<double>&, const ParamStore<double>&,
                                                             const Tensor<double>&, const Tensor<double>&,
                                                             const LossWeights&, std::size_t, const PhasePins*);

std::pair<Tensor<float>, Tensor<float>> generator_step(TrainState& s, const TrainConfig& cfg, const Tensor<float>& x,
                                                       const Tensor<float>& y, LossReport& report) {
  Tape<float> tape;
  const ParamStore<float> g_ab = s.gen_ab.weights.bind(tape);
  const ParamStore<float> g_ba = s.gen_ba.weights.bind(tape);
  // Discriminator weights enter as constants: no leaves, no gradient.
  auto l = generator_objective(s.gen_ab.config, g_ab, s.gen_ba.config, g_ba, s.disc_a.weights.frozen(),
                               s.disc_b.weights.frozen(), x, y, cfg.losses);

  report.adv_g_ab = l.adv_ab.item();
  report.adv_g_ba = l.adv_ba.item();
  report.cycle = l.cycle.item();
  report.identity = l.identity.item();
  report.total_g = l.total.item();
  require_finite(report.adv_g_ab, s.iteration, "adv_g_ab");
  require_finite(report.adv_g_ba, s.iteration, "adv_g_ba");
  require_finite(report.cycle, s.iteration, "cycle");
  require_finite(report.identity, s.iteration, "identity");
  require_finite(report.total_g, s.iteration, "total_g");

  const Gradients<float> grads = tape.backward(l.total);
  configure(s.adam_gen_ab, cfg, s.iteration);
  configure(s.adam_gen_ba, cfg, s.iteration);
  adam_step(s.gen_ab.weights, collect_gradients(grads, g_ab), s.adam_gen_ab);
  adam_step(s.gen_ba.weights, collect_gradients(grads, g_ba), s.adam_gen_ba);
  return {l.fake_b.detach(), l.fake_a.detach()};
}

void discriminator_step(TrainState& s, const TrainConfig& cfg, const Tensor<float>& x, const Tensor<float>& y,
                        const Tensor<float>& fake_b, const Tensor<float>& fake_a, LossReport& report) {
  const Tensor<float> pooled_b = s.pool_b.query(fake_b);
  const Tensor<float> pooled_a = s.pool_a.query(fake_a);

  auto update = [&](DiscriminatorParams<float>& d, AdamState<float>& st, const Tensor<float>& real,
                    const Tensor<float>& fake, double& out, const char* name) {
    Tape<float> tape;
    const ParamStore<float> w = d.weights.bind(tape);
    Tensor<float> loss =
        adversarial_d(discriminator_forward(w, real), discriminator_forward(w, fake), cfg.losses.gan_mode);
    out = loss.item();
    require_finite(out, s.iteration, name);
    const Gradients<float> grads = tape.backward(loss);
    configure(st, cfg, s.iteration);
    adam_step(d.weights, collect_gradients(grads, w), st);
  };
  update(s.disc_b, s.adam_disc_b, y, pooled_b, report.d_b, "d_b");
  update(s.disc_a, s.adam_disc_a, x, pooled_a, report.d_a, "d_a");
}

LossReport train_iteration(TrainState& s, const TrainConfig& cfg, const Tensor<float>& x, const Tensor<float>& y) {
  LossReport report;
  report.iteration = s.iteration;
  auto [fake_b, fake_a] = generator_step(s, cfg, x, y, report);
  discriminator_step(s, cfg, x, y, fake_b, fake_a, report);
  s.iteration += 1;
  return report;
}

TrainResult train_loop(const TrainConfig& cfg, const std::vector<Tensor<float>>& domain_a,
                       const std::vector<Tensor<float>>& domain_b, const TrainLoopOptions& options) {
  cfg.validate();
  if (domain_a.empty()) throw ArgumentError("domain A dataset is empty");
  if (domain_b.empty()) throw ArgumentError("domain B dataset is empty");
  for (const auto& img : domain_a) check_image(img, cfg.image_size, "domain A");
  for (const auto& img : domain_b) check_image(img, cfg.image_size, "domain B");

  TrainResult result{options.resume ? *options.resume : init_train_state(cfg), {}};
  TrainState& s = result.state;
  if (options.resume) {
    if (s.image_size != cfg.image_size || !(s.gen_ab.config == cfg.generator) ||
        s.disc_a.base_width != cfg.disc_base_width || s.pool_a.capacity() != cfg.pool_size) {
      throw ArgumentError("checkpoint does not match the training configuration");
    }
  }

  if (!options.checkpoint_dir.empty()) std::filesystem::create_directories(options.checkpoint_dir);
  const UnpairedStream stream(domain_a.size(), domain_b.size(), cfg.seed);
  while (s.iteration < cfg.iterations) {
    auto [ia, ib] = stream.pair(s.iteration);
    result.history.push_back(train_iteration(s, cfg, domain_a[ia], domain_b[ib]));
    if (options.on_iteration) options.on_iteration(result.history.back());
    if (!options.checkpoint_dir.empty() && cfg.checkpoint_interval > 0 && s.iteration % cfg.checkpoint_interval == 0 &&
        s.iteration < cfg.iterations) {
      save_checkpoint(s, options.checkpoint_dir / ("checkpoint_" + std::to_string(s.iteration) + ".sdag"));
    }
  }
  if (!options.checkpoint_dir.empty()) save_checkpoint(s, options.checkpoint_dir / "final.sdag");
  return result;
}

std::string loss_csv_row(const LossReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%llu,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                static_cast<unsigned long long>(r.iteration), r.adv_g_ab, r.adv_g_ba, r.cycle, r.identity, r.total_g,
                r.d_a, r.d_b);
  return buf;
}

std::string loss_csv(const std::vector<LossReport>& history) {
  std::string out = std::string(kLossCsvHeader) + "\n";
  for (const auto& r : history) out += loss_csv_row(r);
  return out;
}

}  // namespace sdagan
