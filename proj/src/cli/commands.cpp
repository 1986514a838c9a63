#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "unmix3d/cli.hpp"
#include "unmix3d/cscnet.hpp"
#include "unmix3d/hsi_data.hpp"
#include "unmix3d/hsi_io.hpp"
#include "unmix3d/kernels.hpp"
#include "unmix3d/metrics.hpp"
#include "unmix3d/psvm.hpp"
#include "unmix3d/training.hpp"

namespace unmix3d::cli {

namespace fs = std::filesystem;

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Flat key=value record of a run, written next to its outputs.
class RunManifest {
 public:
  explicit RunManifest(std::string command) { add("command", std::move(command)); }

  void add(const std::string& key, std::string value) { entries_.emplace_back(key, std::move(value)); }
  void add(const std::string& key, double value) { add(key, fmt_double(value)); }
  void add(const std::string& key, int value) { add(key, std::to_string(value)); }
  void add(const std::string& key, std::uint64_t value) { add(key, std::to_string(value)); }

  void write(const fs::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << "version=" << UNMIX3D_VERSION << '\n';
    for (const auto& [k, v] : entries_) out << k << '=' << v << '\n';
    if (!out) throw IoError("write failed for " + path.string());
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

SnrDb parse_snr(const std::string& text) {
  if (text == "noiseless") return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument(text);
    return v;
  } catch (const std::logic_error&) {
    throw ConfigError("--snr must be a number of dB or 'noiseless', got '" + text + "'");
  }
}

std::string snr_text(SnrDb snr) { return snr ? fmt_double(*snr) : "noiseless"; }

GaussianSigma parse_sigma(const std::vector<double>& values) {
  if (values.size() == 1) return {values[0], values[0], values[0]};
  if (values.size() == 3) return {values[0], values[1], values[2]};
  throw ConfigError("--sigma takes one value or three (x y z)");
}

// Abundances in `dir`: a *.hsc container when present, otherwise the PGM series.
AbundanceMaps load_abundance_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
  for (const char* name : {"abundance.hsc", "gt_abundance.hsc"}) {
    if (fs::exists(dir / name)) return io::load_abundances(dir / name);
  }
  for (const char* prefix : {"abundance_", "gt_abundance_"}) {
    if (fs::exists(dir / (std::string(prefix) + "1.pgm"))) return io::load_abundance_pgms(dir, prefix);
  }
  throw IoError("no abundance maps found in " + dir.string());
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  int bands = 0;
  int height = 0;
  int width = 0;
  int materials = 0;
  std::string snr = "noiseless";
  std::uint64_t seed = 0;
  std::string out_dir;
  double field_sigma = 8.0;
  double contrast = 4.0;
  int pure_pixels = 0;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  if (a.materials < 2) throw ConfigError("--materials must be at least 2");
  if (a.bands <= a.materials) throw ConfigError("--bands must exceed --materials");
  if (a.height < 1 || a.width < 1) throw ConfigError("--height and --width must be positive");
  const SnrDb snr = parse_snr(a.snr);
  const fs::path dir(a.out_dir);
  ensure_dir(dir);

  const EndmemberMatrix e = generate_synthetic_endmembers(a.bands, a.materials, a.seed);
  AbundanceMaps maps = generate_gaussian_field_abundances(
      a.materials, a.height, a.width,
      {.field_sigma = a.field_sigma, .contrast = a.contrast, .seed = a.seed + 1});
  plant_pure_pixels(maps, a.pure_pixels);
  const SyntheticScene scene = synthesize_scene(e, maps, snr, a.seed + 2);

  io::store_cube(scene.cube, dir / "scene.hsc");
  io::store_endmembers_csv(e, dir / "gt_endmembers.csv");
  io::store_abundance_pgms(maps, dir, "gt_abundance_");
  io::store_abundances(maps, dir / "gt_abundance.hsc");

  RunManifest m("simulate");
  m.add("bands", a.bands);
  m.add("height", a.height);
  m.add("width", a.width);
  m.add("materials", a.materials);
  m.add("snr", snr_text(snr));
  m.add("seed", a.seed);
  m.add("field_sigma", a.field_sigma);
  m.add("contrast", a.contrast);
  m.add("pure_pixels", a.pure_pixels);
  m.add("out_dir", a.out_dir);
  m.write(dir / "manifest.txt");
  out << "wrote scene " << a.bands << "x" << a.height << "x" << a.width << " (P=" << a.materials
      << ", snr=" << snr_text(snr) << ") to " << dir.string() << '\n';
  return kSuccess;
}

// ----------------------------------------------------------------- extract

struct ExtractArgs {
  std::string in;
  int materials = 0;
  std::string method = "psvm";
  std::string out;
  std::vector<double> sigma{1.0};
  std::string snr_formula = "db";
  double snr_offset = 0.0;
  int max_sweeps = 50;
  int restarts = 16;
};

PsvmOptions psvm_options(const std::vector<double>& sigma, const std::string& formula,
                         double offset, int sweeps, int restarts, bool denoise) {
  PsvmOptions o;
  o.denoise = denoise;
  o.gaussian_sigma = parse_sigma(sigma);
  if (formula == "db") {
    o.snr_formula = SnrFormula::kDecibel;
  } else if (formula == "as-written") {
    o.snr_formula = SnrFormula::kAsWritten;
  } else {
    throw ConfigError("--snr-formula must be db or as-written");
  }
  o.snr_threshold_offset = offset;
  o.max_sweeps = sweeps;
  o.search_restarts = restarts;
  return o;
}

PsvmResult run_extraction(const HsiCube& cube, int materials, const std::string& method,
                          const PsvmOptions& options) {
  if (method == "psvm") return psvm_extract_detailed(cube, materials, options);
  if (method == "psvm-nd") {
    PsvmOptions nd = options;
    nd.denoise = false;
    return psvm_extract_detailed(cube, materials, nd);
  }
  if (method == "svm") return svm_baseline_extract(cube, materials, options.max_sweeps, options.search_restarts);
  throw ConfigError("--method must be psvm, psvm-nd or svm");
}

int cmd_extract(const ExtractArgs& a, std::ostream& out) {
  const PsvmOptions options =
      psvm_options(a.sigma, a.snr_formula, a.snr_offset, a.max_sweeps, a.restarts,
                   a.method == "psvm");
  const HsiCube cube = io::load_cube(a.in);
  const PsvmResult r = run_extraction(cube, a.materials, a.method, options);
  io::store_endmembers_csv(r.endmembers, a.out);

  RunManifest m("extract");
  m.add("in", a.in);
  m.add("materials", a.materials);
  m.add("method", a.method);
  m.add("sigma", fmt_double(options.gaussian_sigma.x) + " " + fmt_double(options.gaussian_sigma.y) +
                     " " + fmt_double(options.gaussian_sigma.z));
  m.add("snr_formula", a.snr_formula);
  m.add("snr_offset", a.snr_offset);
  m.add("max_sweeps", a.max_sweeps);
  m.add("restarts", a.restarts);
  m.add("out", a.out);
  m.add("snr_initial", r.snr_initial);
  m.add("snr_final", r.snr_final);
  m.add("denoised", r.denoised ? "yes" : "no");
  m.add("branch", r.high_snr_branch ? "high-snr" : "low-snr");
  std::string idx;
  for (int i : r.indices) idx += (idx.empty() ? "" : " ") + std::to_string(i);
  m.add("pixel_indices", idx);
  m.write(a.out + ".manifest.txt");

  out << "extracted " << r.endmembers.cols() << " endmembers (" << a.method << ", pixels " << idx
      << ") to " << a.out << '\n';
  return kSuccess;
}

// ------------------------------------------------------------------- unmix

struct UnmixArgs {
  std::string in;
  int materials = 0;
  std::string init;
  int channels = 48;
  int iterations = 6;
  double lr_e = 1.2e-4;
  double lr_d = 1e-4;
  int t1 = 900;
  int epochs = 1000;
  std::uint64_t seed = 0;
  std::string out_dir;
  double max_memory_gb = 16.0;
};

double estimated_training_bytes(const NetworkConfig& c) {
  const double n = static_cast<double>(c.height) * c.width;
  const double code = static_cast<double>(c.channels) * c.materials * n;
  const double cube = static_cast<double>(c.bands) * n;
  // Cached pre-activations, codes and syntheses plus backward temporaries.
  return 8.0 * (c.iterations * (2.0 * code + cube) + 6.0 * code + 6.0 * cube);
}

int cmd_unmix(const UnmixArgs& a, std::ostream& out) {
  const HsiCube cube = io::load_cube(a.in);
  const NetworkConfig net =
      make_config(cube.depth(), cube.height(), cube.width(), a.materials, a.channels, a.iterations);
  const double gb = estimated_training_bytes(net) / (1024.0 * 1024.0 * 1024.0);
  if (gb > a.max_memory_gb) {
    std::ostringstream msg;
    msg << "configuration needs about " << std::setprecision(3) << gb
        << " GiB, above --max-memory-gb " << a.max_memory_gb;
    throw ConfigError(msg.str());
  }

  const fs::path dir(a.out_dir);
  ensure_dir(dir);
  EndmemberMatrix init;
  if (a.init.empty()) {
    init = psvm_extract(cube, a.materials);
    io::store_endmembers_csv(init, dir / "init_endmembers.csv");
  } else {
    init = io::load_endmembers_csv(a.init);
    if (init.rows() != cube.depth() || init.cols() != a.materials) {
      throw DimensionError("--init endmembers must be " + std::to_string(cube.depth()) + " x " +
                           std::to_string(a.materials));
    }
  }

  TrainConfig tc;
  tc.lr_encoder = a.lr_e;
  tc.lr_decoder = a.lr_d;
  tc.stage1_epochs = a.t1;
  tc.total_epochs = a.epochs;
  tc.seed = a.seed;
  const TrainReport report = train(cube, net, tc, init);

  io::store_abundance_pgms(report.abundances, dir, "abundance_");
  io::store_abundances(report.abundances, dir / "abundance.hsc");
  io::store_endmembers_csv(report.endmembers, dir / "endmembers.csv");
  {
    std::ofstream loss(dir / "loss.csv", std::ios::trunc);
    if (!loss) throw IoError("cannot write loss.csv");
    loss << "epoch,loss\n";
    for (std::size_t e = 0; e < report.losses.size(); ++e) {
      loss << (e + 1) << ',' << fmt_double(report.losses[e]) << '\n';
    }
  }

  RunManifest m("unmix");
  m.add("in", a.in);
  m.add("materials", a.materials);
  m.add("init", a.init.empty() ? std::string("psvm") : a.init);
  m.add("channels", a.channels);
  m.add("iterations", a.iterations);
  m.add("spectral_stride", net.spectral_stride);
  m.add("pad_in", net.pad_in);
  m.add("pad_update", net.pad_update);
  m.add("lr_e", a.lr_e);
  m.add("lr_d", a.lr_d);
  m.add("t1", a.t1);
  m.add("epochs", a.epochs);
  m.add("seed", a.seed);
  m.add("out_dir", a.out_dir);
  m.add("final_loss", report.losses.back());
  m.write(dir / "manifest.txt");

  out << "trained " << a.epochs << " epochs, final SAD loss " << report.losses.back() << "; outputs in "
      << dir.string() << '\n';
  return kSuccess;
}

// -------------------------------------------------------------------- eval

struct EvalArgs {
  std::string est_endmembers;
  std::string est_abundances;
  std::string gt_endmembers;
  std::string gt_abundances;
  std::string out;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const EndmemberMatrix e_est = io::load_endmembers_csv(a.est_endmembers);
  const EndmemberMatrix e_gt = io::load_endmembers_csv(a.gt_endmembers);
  const AbundanceMaps a_est = load_abundance_dir(a.est_abundances);
  const AbundanceMaps a_gt = load_abundance_dir(a.gt_abundances);
  const EvalReport r = evaluate(e_est, a_est, e_gt, a_gt);

  std::ostringstream csv;
  csv << "material,matched_estimate,sad,rmse\n";
  for (std::size_t i = 0; i < r.sad.size(); ++i) {
    csv << (i + 1) << ',' << (r.permutation[i] + 1) << ',' << fmt_double(r.sad[i]) << ','
        << fmt_double(r.rmse[i]) << '\n';
  }
  csv << "average,," << fmt_double(r.mean_sad) << ',' << fmt_double(r.mean_rmse) << '\n';
  {
    std::ofstream f(a.out, std::ios::trunc);
    if (!f) throw IoError("cannot write " + a.out);
    f << csv.str();
  }

  out << "material  estimate       SAD      RMSE\n";
  out << std::fixed << std::setprecision(4);
  for (std::size_t i = 0; i < r.sad.size(); ++i) {
    out << std::setw(8) << (i + 1) << std::setw(10) << (r.permutation[i] + 1) << std::setw(10)
        << r.sad[i] << std::setw(10) << r.rmse[i] << '\n';
  }
  out << " average" << std::setw(10) << "" << std::setw(10) << r.mean_sad << std::setw(10)
      << r.mean_rmse << '\n';
  return kSuccess;
}

// --------------------------------------------------------------- gradcheck

int cmd_gradcheck(const GradCheckOptions& o, std::ostream& out, std::ostream& err) {
  const GradCheckReport report = gradient_check(o);
  out << std::left << std::setw(20) << "tensor" << std::right << std::setw(8) << "size"
      << std::setw(16) << "max rel err" << "  status\n";
  for (const GradCheckEntry& e : report.entries) {
    out << std::left << std::setw(20) << e.name << std::right << std::setw(8) << e.size
        << std::setw(16) << std::scientific << std::setprecision(3) << e.max_relative_error
        << "  " << (e.passed ? "ok" : "FAIL") << '\n';
  }
  out << std::defaultfloat;
  for (const GradCheckEntry& e : report.entries) {
    if (!e.passed) {
      err << "gradcheck failed: " << e.name << " relative error " << e.max_relative_error
          << " > " << o.tolerance << '\n';
      return kCheckFailed;
    }
  }
  return kSuccess;
}

void apply_thread_env() {
  const char* env = std::getenv("UNMIX3D_THREADS");
  if (!env || !*env) return;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 0) throw ConfigError("UNMIX3D_THREADS must be a non-negative integer");
  kernels::set_thread_count(static_cast<int>(n));
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"unmix3d: blind hyperspectral unmixing with simplex-volume endmember extraction and "
               "an unrolled 3D convolutional sparse-coding autoencoder"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic mixed scene");
  simulate->add_option("--bands", sim.bands, "Spectral bands L")->required();
  simulate->add_option("--height", sim.height, "Rows H")->required();
  simulate->add_option("--width", sim.width, "Columns W")->required();
  simulate->add_option("--materials", sim.materials, "Endmembers P (>= 2)")->required();
  simulate->add_option("--snr", sim.snr, "Noise level in dB, or 'noiseless'");
  simulate->add_option("--seed", sim.seed, "Generator seed");
  simulate->add_option("--out-dir", sim.out_dir, "Output directory")->required();
  simulate->add_option("--field-sigma", sim.field_sigma, "Abundance field blur (pixels)");
  simulate->add_option("--contrast", sim.contrast, "Abundance field contrast");
  simulate->add_option("--pure-pixels", sim.pure_pixels, "Pure pixels planted per material");

  ExtractArgs ext;
  auto* extract = app.add_subcommand("extract", "Extract endmembers from a cube");
  extract->add_option("--in", ext.in, "Input HSC cube")->required();
  extract->add_option("--materials", ext.materials, "Endmembers P")->required();
  extract->add_option("--method", ext.method, "psvm | psvm-nd | svm")
      ->check(CLI::IsMember({"psvm", "psvm-nd", "svm"}));
  extract->add_option("--out", ext.out, "Output endmember CSV")->required();
  extract->add_option("--sigma", ext.sigma, "Denoising sigma: s, or sx sy sz (voxels)")
      ->expected(1, 3);
  extract->add_option("--snr-formula", ext.snr_formula, "db | as-written")
      ->check(CLI::IsMember({"db", "as-written"}));
  extract->add_option("--snr-offset", ext.snr_offset, "dB added to the SNR threshold");
  extract->add_option("--max-sweeps", ext.max_sweeps, "Simplex refinement sweep cap");
  extract->add_option("--restarts", ext.restarts, "Simplex search starts");

  UnmixArgs um;
  auto* unmix = app.add_subcommand("unmix", "Train the unmixing network on a cube");
  unmix->add_option("--in", um.in, "Input HSC cube")->required();
  unmix->add_option("--materials", um.materials, "Endmembers P")->required();
  unmix->add_option("--init", um.init, "Initial endmember CSV (default: run PSVM)");
  unmix->add_option("--channels", um.channels, "Filters C");
  unmix->add_option("--iters", um.iterations, "Iteration modules K");
  unmix->add_option("--lr-e", um.lr_e, "Encoder learning rate");
  unmix->add_option("--lr-d", um.lr_d, "Decoder learning rate");
  unmix->add_option("--t1", um.t1, "Encoder-only epochs");
  unmix->add_option("--epochs", um.epochs, "Total epochs");
  unmix->add_option("--seed", um.seed, "Initialization seed");
  unmix->add_option("--out-dir", um.out_dir, "Output directory")->required();
  unmix->add_option("--max-memory-gb", um.max_memory_gb, "Reject larger configurations");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Score estimates against ground truth");
  eval->add_option("--est-endmembers", ev.est_endmembers, "Estimated endmember CSV")->required();
  eval->add_option("--est-abundances", ev.est_abundances, "Directory of estimated maps")->required();
  eval->add_option("--gt-endmembers", ev.gt_endmembers, "Reference endmember CSV")->required();
  eval->add_option("--gt-abundances", ev.gt_abundances, "Directory of reference maps")->required();
  eval->add_option("--out", ev.out, "Report CSV")->required();

  GradCheckOptions gc;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of the gradients");
  gradcheck->add_option("--seed", gc.seed, "Toy problem seed");
  gradcheck->add_option("--eps", gc.step, "Central-difference step");
  gradcheck->add_option("--corrupt", gc.corrupt_tensor)->group("");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsageError;
  }

  try {
    apply_thread_env();
    if (simulate->parsed()) return cmd_simulate(sim, out);
    if (extract->parsed()) return cmd_extract(ext, out);
    if (unmix->parsed()) return cmd_unmix(um, out);
    if (eval->parsed()) return cmd_eval(ev, out);
    if (gradcheck->parsed()) return cmd_gradcheck(gc, out, err);
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const DimensionError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kIoError;
  } catch (const FormatError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kIoError;
  } catch (const fs::filesystem_error& e) {
    err << "i/o error: " << e.what() << '\n';
    return kIoError;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumericalError;
  }
  return kUsageError;
}

}  // namespace unmix3d::cli
