#include "sdagan/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <ostream>
#include <sstream>

#include "sdagan/data_io.hpp"
#include "sdagan/gradcheck_suite.hpp"
#include "sdagan/metrics.hpp"
#include "sdagan/networks.hpp"
#include "sdagan/spectral.hpp"
#include "sdagan/trainer.hpp"

namespace sdagan::cli {
namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// ---- option sets ----

struct TrainOptions {
  std::string data;
  std::string out;
  std::string resume;
  std::uint64_t seed = 0;
  std::uint64_t iters = 1000;
  std::size_t size = 64;
  std::size_t n = 4;
  std::string arch = "b";
  std::string gan = "ce";
  std::size_t base_width = 16;
  std::size_t disc_width = 16;
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  std::int64_t decay_start = -1;
  std::size_t pool_size = 50;
  std::uint64_t checkpoint_interval = 0;
  double w_cycle = 10.0;
  double w_identity = 5.0;
  bool learnable_lambdas = false;
  bool minimax = false;
  std::uint64_t log_every = 50;
};

struct TranslateOptions {
  std::string ckpt;
  std::string in;
  std::string out;
  std::string direction = "ab";
  bool dump_attention = false;
};

struct SpectrumOptions {
  std::string in;
  std::string out;
  std::string image_dir;
  std::size_t size = 0;
};

struct EvaluateOptions {
  std::string real;
  std::string fake;
  std::string out;
  std::size_t size = 64;
};

struct GradcheckOptions {
  std::uint64_t seed = 7;
};

// All options of every subcommand are registered here, so help text, config
// keys and parsing share one definition.
struct Parser {
  CLI::App app;
  TrainOptions train;
  TranslateOptions translate;
  SpectrumOptions spectrum;
  EvaluateOptions evaluate;
  GradcheckOptions gradcheck;

  explicit Parser(std::string_view command) : app(description(command), "sdagan " + std::string(command)) {
    app.set_help_flag("-h,--help", "Print this help and exit");
    app.set_config("--config", "", "Flat 'key = value' file ('#' comments); command-line flags take precedence");
    app.allow_config_extras(CLI::config_extras_mode::error);
    if (command == "train") add_train();
    else if (command == "translate") add_translate();
    else if (command == "spectrum") add_spectrum();
    else if (command == "evaluate") add_evaluate();
    else if (command == "gradcheck") add_gradcheck();
  }

  static std::string description(std::string_view command) {
    if (command == "train") return "Train both generators and discriminators on <data>/trainA and <data>/trainB.";
    if (command == "translate") return "Translate every .ppm image of a directory with a trained generator.";
    if (command == "spectrum") return "Write log-magnitude spectrum images and the radial spectral profile.";
    if (command == "evaluate") return "FID and IS of a fake image set against a real one (handcrafted backend).";
    if (command == "gradcheck") return "Run the central-difference gradient suite; exit 0 iff every check passes.";
    return "";
  }

  void add_train() {
    auto& t = train;
    app.add_option("--data", t.data, "Dataset root holding trainA/ and trainB/")->required();
    app.add_option("--out", t.out, "Output directory for checkpoints and losses.csv")->required();
    app.add_option("--resume", t.resume, "Continue from this checkpoint");
    app.add_option("--seed", t.seed, "Random seed")->capture_default_str();
    app.add_option("--iters", t.iters, "Number of training iterations (>= 1)")->capture_default_str();
    app.add_option("--size", t.size, "Image size (power of two >= 32)")->capture_default_str();
    app.add_option("--n", t.n, "Attention channels (>= 2)")->capture_default_str();
    app.add_option("--arch", t.arch, "Spectrum construction")
        ->check(CLI::IsMember({"a-direct", "a-phase", "b"}))
        ->capture_default_str();
    app.add_option("--gan", t.gan, "Adversarial loss")->check(CLI::IsMember({"ce", "ls"}))->capture_default_str();
    app.add_option("--base-width", t.base_width, "Generator base width")->capture_default_str();
    app.add_option("--disc-width", t.disc_width, "Discriminator base width")->capture_default_str();
    app.add_option("--lr", t.lr, "Adam learning rate")->capture_default_str();
    app.add_option("--beta1", t.beta1, "Adam beta1")->capture_default_str();
    app.add_option("--beta2", t.beta2, "Adam beta2")->capture_default_str();
    app.add_option("--decay-start", t.decay_start, "Iteration where linear lr decay starts (-1: iters/2)")
        ->capture_default_str();
    app.add_option("--pool-size", t.pool_size, "Generated-image pool capacity")->capture_default_str();
    app.add_option("--checkpoint-interval", t.checkpoint_interval, "Checkpoint every N iterations (0: final only)")
        ->capture_default_str();
    app.add_option("--w-cycle", t.w_cycle, "Cycle-consistency weight")->capture_default_str();
    app.add_option("--w-identity", t.w_identity, "Identity weight")->capture_default_str();
    app.add_flag("--learnable-lambdas", t.learnable_lambdas, "Train lambda_A and lambda_S");
    app.add_flag("--minimax", t.minimax, "Generator minimises log(1 - D(G(x))) (ce only)");
    app.add_option("--log-every", t.log_every, "Print losses every N iterations (0: never)")->capture_default_str();
  }

  void add_translate() {
    auto& t = translate;
    app.add_option("--ckpt", t.ckpt, "Checkpoint file")->required();
    app.add_option("--in", t.in, "Directory of .ppm inputs")->required();
    app.add_option("--out", t.out, "Output directory")->required();
    app.add_option("--direction", t.direction, "ab uses G (A to B), ba uses H (B to A)")
        ->check(CLI::IsMember({"ab", "ba"}))
        ->capture_default_str();
    app.add_flag("--dump-attention", t.dump_attention,
                 "Also write every spatial (A) and spectral (S) attention map as a grayscale image");
  }

  void add_spectrum() {
    auto& s = spectrum;
    app.add_option("--in", s.in, "Directory of .ppm images")->required();
    app.add_option("--out", s.out, "Profile CSV (standard output when omitted)");
    app.add_option("--image-dir", s.image_dir, "Where spectrum images go (default: spectra/ next to the CSV)");
    app.add_option("--size", s.size, "Resize to size x size first (0: native; must be a power of two)")
        ->capture_default_str();
  }

  void add_evaluate() {
    auto& e = evaluate;
    app.add_option("--real", e.real, "Directory of real .ppm images")->required();
    app.add_option("--fake", e.fake, "Directory of generated .ppm images")->required();
    app.add_option("--out", e.out, "Also write the report as CSV here");
    app.add_option("--size", e.size, "Images are resized to size x size")->capture_default_str();
  }

  void add_gradcheck() { app.add_option("--seed", gradcheck.seed, "Random seed")->capture_default_str(); }
};

// ---- helpers ----

void write_gray(const fs::path& path, const std::vector<double>& values, std::size_t h, std::size_t w, double lo,
                double hi) {
  ImageRecord img;
  img.width = w;
  img.height = h;
  img.pixels.resize(3 * h * w);
  const double range = hi - lo;
  for (std::size_t p = 0; p < h * w; ++p) {
    const double t = range > 0 ? (values[p] - lo) / range : 0.0;
    const auto v = static_cast<std::uint8_t>(std::floor(std::clamp(t, 0.0, 1.0) * 255.0 + 0.5));
    img.pixels[3 * p] = img.pixels[3 * p + 1] = img.pixels[3 * p + 2] = v;
  }
  write_ppm(path, img);
}

std::vector<Tensor<float>> load_images(const fs::path& dir, std::size_t size, std::vector<std::string>* names) {
  std::vector<Tensor<float>> out;
  for (const auto& f : list_images(dir)) {
    ImageRecord img = read_ppm(f);
    if (size) img = resize_bilinear(img, size);
    out.push_back(normalize(img));
    if (names) names->push_back(f.filename().string());
  }
  return out;
}

// ---- subcommands ----

int cmd_train(const TrainOptions& o, std::ostream& out) {
  TrainConfig cfg;
  cfg.seed = o.seed;
  cfg.iterations = o.iters;
  cfg.image_size = o.size;
  cfg.generator.n = o.n;
  cfg.generator.base_width = o.base_width;
  cfg.generator.arch = parse_arch(o.arch);
  cfg.generator.learnable_lambdas = o.learnable_lambdas;
  cfg.disc_base_width = o.disc_width;
  cfg.losses.w_cycle = o.w_cycle;
  cfg.losses.w_identity = o.w_identity;
  cfg.losses.gan_mode = o.gan == "ls" ? GanMode::least_squares : GanMode::cross_entropy;
  cfg.losses.minimax_generator = o.minimax;
  cfg.lr = o.lr;
  cfg.beta1 = o.beta1;
  cfg.beta2 = o.beta2;
  if (o.decay_start >= 0) cfg.decay_start = static_cast<std::uint64_t>(o.decay_start);
  cfg.pool_size = o.pool_size;
  cfg.checkpoint_interval = o.checkpoint_interval;
  cfg.validate();

  const fs::path root(o.data);
  std::vector<std::string> names_a, names_b;
  const auto a = load_domain(root / "trainA", cfg.image_size, &names_a);
  const auto b = load_domain(root / "trainB", cfg.image_size, &names_b);
  out << "loaded " << a.size() << " A and " << b.size() << " B images at " << cfg.image_size << "x" << cfg.image_size
      << "\n";

  TrainLoopOptions opts;
  opts.checkpoint_dir = o.out;
  TrainState resumed;
  if (!o.resume.empty()) {
    resumed = load_checkpoint(o.resume);
    opts.resume = &resumed;
    out << "resuming at iteration " << resumed.iteration << "\n";
  }
  fs::create_directories(o.out);
  const fs::path csv_path = fs::path(o.out) / "losses.csv";
  opts.on_iteration = [&](const LossReport& r) {
    if (o.log_every && (r.iteration + 1) % o.log_every == 0) {
      out << "iter " << r.iteration + 1 << " cycle " << fmt(r.cycle) << " total_g " << fmt(r.total_g) << " d_a "
          << fmt(r.d_a) << " d_b " << fmt(r.d_b) << "\n";
    }
  };
  const TrainResult result = train_loop(cfg, a, b, opts);
  write_text(csv_path, loss_csv(result.history));
  out << "wrote " << (fs::path(o.out) / "final.sdag").string() << " and " << csv_path.string() << "\n";
  return kOk;
}

int cmd_translate(const TranslateOptions& o, std::ostream& out) {
  const TrainState s = load_checkpoint(o.ckpt);
  const GeneratorParams<float>& g = o.direction == "ab" ? s.gen_ab : s.gen_ba;
  fs::create_directories(o.out);
  std::string scales = "image,map,index,min,max\n";
  std::size_t count = 0;
  for (const auto& f : list_images(o.in)) {
    const ImageRecord src = read_ppm(f);
    const Tensor<float> x = normalize(resize_bilinear(src, s.image_size));
    const GeneratorOutput<float> y = generator_forward(g, x);
    write_ppm(fs::path(o.out) / f.filename(), denormalize(y.image));
    ++count;
    if (!o.dump_attention) continue;
    const std::size_t n = g.config.n, hw = s.image_size * s.image_size;
    const std::string stem = f.stem().string();
    for (int family = 0; family < 2; ++family) {
      const Tensor<float>& maps = family == 0 ? y.spatial_attention : y.spectral_attention;
      const char* tag = family == 0 ? "A" : "S";
      for (std::size_t i = 0; i < n; ++i) {
        Grid<double> grid = Grid<double>::zeros(s.image_size, s.image_size);
        for (std::size_t p = 0; p < hw; ++p) grid.values[p] = maps[i * hw + p];
        // Spectral maps are shown with the DC bin in the centre.
        if (family == 1) grid = center_spectrum(grid);
        const auto [lo, hi] = std::minmax_element(grid.values.begin(), grid.values.end());
        const std::string name = stem + "_" + tag + std::to_string(i + 1) + ".ppm";
        write_gray(fs::path(o.out) / name, grid.values, s.image_size, s.image_size, *lo, *hi);
        scales += f.filename().string() + "," + tag + "," + std::to_string(i + 1) + "," + fmt(*lo) + "," + fmt(*hi) + "\n";
      }
    }
  }
  if (o.dump_attention) write_text(fs::path(o.out) / "attention_scales.csv", scales);
  out << "translated " << count << " images (" << o.direction << ") into " << o.out << "\n";
  return kOk;
}

int cmd_spectrum(const SpectrumOptions& o, std::ostream& out) {
  std::vector<std::string> names;
  const auto images = load_images(o.in, o.size, &names);
  fs::path image_dir = o.image_dir;
  if (image_dir.empty()) image_dir = o.out.empty() ? fs::path("spectra") : fs::path(o.out).parent_path() / "spectra";
  fs::create_directories(image_dir);

  std::string csv = "image,high_freq_ratio,radius,energy\n";
  for (std::size_t k = 0; k < images.size(); ++k) {
    const std::size_t h = images[k].dim(1), w = images[k].dim(2);
    Grid<double> lum = Grid<double>::zeros(h, w);
    lum.values = luminance(images[k]);
    const SpectralProfile prof = spectral_profile(lum);
    for (std::size_t r = 0; r < prof.radial_energy.size(); ++r) {
      csv += names[k] + "," + fmt(prof.high_freq_ratio) + "," + std::to_string(r) + "," + fmt(prof.radial_energy[r]) + "\n";
    }
    const ComplexGrid<double> f = fft2d(lum);
    Grid<double> mag = Grid<double>::zeros(h, w);
    for (std::size_t i = 0; i < mag.values.size(); ++i) mag.values[i] = std::log1p(std::hypot(f.real[i], f.imag[i]));
    mag = center_spectrum(mag);
    const auto [lo, hi] = std::minmax_element(mag.values.begin(), mag.values.end());
    write_gray(image_dir / (fs::path(names[k]).stem().string() + "_spectrum.ppm"), mag.values, h, w, *lo, *hi);
  }
  if (o.out.empty()) {
    out << csv;
  } else {
    write_text(o.out, csv);
    out << "wrote " << o.out << " and " << images.size() << " spectrum images in " << image_dir.string() << "\n";
  }
  return kOk;
}

int cmd_evaluate(const EvaluateOptions& o, std::ostream& out) {
  const auto real = load_images(o.real, o.size, nullptr);
  const auto fake = load_images(o.fake, o.size, nullptr);
  const EvaluationReport rep = evaluate_sets(real, fake);
  out << rep.summary();
  if (!o.out.empty()) write_text(o.out, rep.csv());
  return kOk;
}

int cmd_gradcheck(const GradcheckOptions& o, std::ostream& out) {
  const auto results = run_gradcheck_suite(o.seed);
  std::size_t failed = 0;
  for (const auto& r : results) {
    char line[256];
    std::snprintf(line, sizeof line, "%-62s max_rel_error %.3e  tol %.0e  %s\n", r.name.c_str(), r.max_rel_error,
                  r.tolerance, r.passed ? "PASS" : "FAIL");
    out << line;
    if (!r.passed) ++failed;
  }
  out << (failed ? std::to_string(failed) + " of " + std::to_string(results.size()) + " checks failed"
                 : "all " + std::to_string(results.size()) + " checks passed")
      << "\n";
  return failed ? kVerificationFailed : kOk;
}

std::string program_help() {
  std::string s = "Usage: sdagan <command> [options]\n\nCommands:\n";
  for (const auto& c : commands()) s += "  " + c + std::string(12 - c.size(), ' ') + Parser::description(c) + "\n";
  s += "\nRun 'sdagan <command> --help' for the options of a command.\n"
       "Exit codes: 0 success, 1 usage error, 2 I/O error, 3 numeric divergence, 4 verification failure.\n";
  return s;
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  while (!s.empty() && s.back() == ' ') s.pop_back();
  return s;
}

}  // namespace

const std::vector<std::string>& commands() {
  static const std::vector<std::string> c = {"train", "translate", "spectrum", "evaluate", "gradcheck"};
  return c;
}

std::vector<std::string> config_keys(std::string_view command) {
  if (std::find(commands().begin(), commands().end(), command) == commands().end()) return {};
  Parser p(command);
  std::vector<std::string> keys;
  for (const CLI::Option* opt : p.app.get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name == "config") continue;
    keys.push_back(name);
  }
  return keys;
}

std::string help_text(std::string_view command) {
  if (command.empty()) return program_help();
  Parser p(command);
  return p.app.help();
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.empty()) {
    err << "sdagan: missing command (try 'sdagan --help')\n";
    return kUsage;
  }
  const std::string& command = args[0];
  if (command == "-h" || command == "--help" || command == "help") {
    out << program_help();
    return kOk;
  }
  if (std::find(commands().begin(), commands().end(), command) == commands().end()) {
    err << "sdagan: unknown command '" << command << "'\n";
    return kUsage;
  }

  Parser p(command);
  try {
    // CLI11 consumes arguments in reverse order.
    std::vector<std::string> rest(args.rbegin(), args.rend() - 1);
    p.app.parse(rest);
  } catch (const CLI::CallForHelp&) {
    out << p.app.help();
    return kOk;
  } catch (const CLI::FileError& e) {
    err << "sdagan " << command << ": " << one_line(e.what()) << "\n";
    return kIo;
  } catch (const CLI::ParseError& e) {
    err << "sdagan " << command << ": " << one_line(e.what()) << "\n";
    return kUsage;
  }

  try {
    if (command == "train") return cmd_train(p.train, out);
    if (command == "translate") return cmd_translate(p.translate, out);
    if (command == "spectrum") return cmd_spectrum(p.spectrum, out);
    if (command == "evaluate") return cmd_evaluate(p.evaluate, out);
    return cmd_gradcheck(p.gradcheck, out);
  } catch (const DivergenceError& e) {
    err << "sdagan " << command << ": " << one_line(e.what()) << "\n";
    return kDivergence;
  } catch (const IoError& e) {
    err << "sdagan " << command << ": " << one_line(e.what()) << "\n";
    return kIo;
  } catch (const ParseError& e) {
    err << "sdagan " << command << ": " << one_line(e.what()) << "\n";
    return kIo;
  } catch (const CheckpointError& e) {
    err << "sdagan " << command << ": " << one_line(e.what()) << "\n";
    return kIo;
  } catch (const fs::filesystem_error& e) {
    err << "sdagan " << command << ": " << one_line(e.what()) << "\n";
    return kIo;
  } catch (const Error& e) {
    err << "sdagan " << command << ": " << one_line(e.what()) << "\n";
    return kUsage;
  }
}

}  // namespace sdagan::cli
