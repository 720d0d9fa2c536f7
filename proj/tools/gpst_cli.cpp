#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gpst/gpst.hpp"

namespace {

using nlohmann::json;

void write_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw gpst::IoError("cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
  if (!out.good()) throw gpst::IoError("failed to write " + path);
}

json region_json(const gpst::Region& r) {
  return json{{"x1", r.x1}, {"y1", r.y1}, {"x2", r.x2}, {"y2", r.y2}};
}

json geom_json(const gpst::GaussianGeom& g) {
  return json{{"sigma_x", g.sigma_x},
              {"sigma_y", g.sigma_y},
              {"rho", g.rho},
              {"mu_x", g.mu_x},
              {"mu_y", g.mu_y}};
}

gpst::RasterImage map_to_image(const gpst::FeatureMap& map, float scale) {
  gpst::RasterImage img;
  img.width = map.width;
  img.height = map.height;
  img.channels = map.channels;
  img.data.resize(map.data.size());
  for (size_t i = 0; i < map.data.size(); ++i)
    img.data[i] = std::clamp(map.data[i] * scale, 0.0f, 255.0f);
  return img;
}

void run_partition(const std::string& image_path, int tokens, double lambda, int smin,
                   const std::string& importance_path, const std::string& out_path) {
  gpst::RasterImage img = gpst::load_image(image_path);
  gpst::PartitionConfig cfg;
  cfg.l = tokens;
  cfg.s_min = smin;
  cfg.complexity.lambda = lambda;

  gpst::GradientMap importance;
  const gpst::GradientMap* imp = nullptr;
  if (!importance_path.empty()) {
    importance = gpst::importance_from_image(gpst::load_image(importance_path));
    if (importance.width != img.width || importance.height != img.height)
      throw gpst::InvalidInput("importance map size does not match the image");
    imp = &importance;
  }

  gpst::PartitionResult res = gpst::partition_image(img, cfg, imp);

  json j;
  j["width"] = img.width;
  j["height"] = img.height;
  j["l"] = res.regions.size();
  j["lambda"] = lambda;
  j["s_min"] = smin;
  j["regions"] = json::array();
  for (const gpst::Region& r : res.regions) j["regions"].push_back(region_json(r));
  j["trace"] = json::array();
  for (const gpst::SplitRecord& t : res.trace)
    j["trace"].push_back(json{{"step", t.step},
                              {"region_index", t.region_index},
                              {"axis", gpst::to_string(t.axis)}});
  write_json(j, out_path);
}

void run_encode(const std::string& image_path, int tokens, int iters, uint64_t seed,
                bool deterministic, const std::string& out_path,
                const std::string& report_path) {
  gpst::RasterImage img = gpst::load_image(image_path);
  gpst::PartitionConfig pcfg;
  pcfg.l = tokens;
  gpst::PartitionResult part = gpst::partition_image(img, pcfg);
  gpst::TokenSet init = gpst::init_from_regions(part.regions, img.channels, 5.0f, &img);

  gpst::FitConfig fcfg;
  fcfg.iters = iters;
  fcfg.seed = seed;
  auto [fitted, report] = gpst::fit(img, init, fcfg);
  gpst::write_tokens(fitted, out_path);

  if (!report_path.empty()) {
    json j;
    j["width"] = img.width;
    j["height"] = img.height;
    j["l"] = fitted.tokens.size();
    j["c_f"] = fitted.channels();
    j["iterations_run"] = report.iterations_run;
    j["seed"] = seed;
    j["final_loss"] = report.loss_curve.empty() ? 0.0 : report.loss_curve.back();
    j["final_psnr"] = report.final_psnr;
    j["wall_time_s"] = deterministic ? json(nullptr) : json(report.wall_time);
    j["loss_curve"] = report.loss_curve;
    write_json(j, report_path);
  }
  std::printf("final_psnr %.4f dB after %d iterations\n", report.final_psnr,
              report.iterations_run);
}

void run_decode(const std::string& in_path, const std::string& out_path) {
  gpst::TokenSet ts = gpst::read_tokens(in_path);
  if (ts.channels() != 1 && ts.channels() != 3)
    throw gpst::UnsupportedFormat("cannot save a " + std::to_string(ts.channels()) +
                                  "-channel reconstruction as an image");
  gpst::save_image(map_to_image(gpst::render(ts), 255.0f), out_path);
}

void run_calibrate(const std::string& in_path, int smin, const std::string& out_path) {
  gpst::TokenSet ts = gpst::read_tokens(in_path);
  gpst::CalibConfig cfg;
  cfg.s_min = smin;
  cfg.width = ts.width;
  cfg.height = ts.height;
  std::vector<gpst::GaussianGeom> geoms;
  geoms.reserve(ts.tokens.size());
  for (const gpst::Token& t : ts.tokens) geoms.push_back(t.geom);
  gpst::CalibrationResult res = gpst::calibrate(geoms, cfg);

  json j;
  j["width"] = ts.width;
  j["height"] = ts.height;
  j["s_min"] = smin;
  j["l"] = res.geoms.size();
  j["geoms"] = json::array();
  for (const gpst::GaussianGeom& g : res.geoms) j["geoms"].push_back(geom_json(g));
  j["regions"] = json::array();
  for (const gpst::Region& r : res.regions) j["regions"].push_back(region_json(r));
  j["assignment"] = res.assignment;
  write_json(j, out_path);
}

void run_metrics(const std::string& ref_path, const std::string& test_path,
                 const std::string& out_path) {
  gpst::RasterImage ref = gpst::load_image(ref_path);
  gpst::RasterImage test = gpst::load_image(test_path);
  const double p = gpst::psnr(ref, test);
  const double s = gpst::ssim(ref, test);
  json j;
  j["psnr"] = p;  // null when the images are identical (infinite PSNR)
  j["ssim"] = s;
  if (!out_path.empty()) write_json(j, out_path);
  std::printf("psnr %s dB, ssim %.6f\n",
              std::isinf(p) ? "inf" : std::to_string(p).c_str(), s);
}

void run_render_map(const std::string& in_path, const std::string& out_path) {
  gpst::TokenSet ts = gpst::read_tokens(in_path);
  gpst::FeatureMap density = gpst::gaussian_density_map(ts);
  float peak = 0.0f;
  for (float v : density.data) peak = std::max(peak, v);
  gpst::RasterImage img = map_to_image(density, peak > 0.0f ? 255.0f / peak : 0.0f);
  gpst::save_image(img, out_path);
}

float* param_ptr(gpst::Token& t, int param) {
  switch (param) {
    case 0: return &t.geom.sigma_x;
    case 1: return &t.geom.sigma_y;
    case 2: return &t.geom.rho;
    case 3: return &t.geom.mu_x;
    case 4: return &t.geom.mu_y;
    default: return &t.f[static_cast<size_t>(param) - 5];
  }
}

// Central-difference audit of the analytic backward pass. Each probe checks
// one (token, pixel, parameter) triple on a fresh random token set; probe
// pixels stay strictly inside the truncation box since the truncation edge
// itself carries no gradient.
void run_gradcheck(uint64_t seed, int probes) {
  if (probes < 1) throw gpst::InvalidInput("probe count must be >= 1");
  std::mt19937 rng(static_cast<uint32_t>(seed));
  auto uni = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  auto uni_int = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };

  double max_rel = 0.0;
  double max_abs = 0.0;
  int failures = 0;
  for (int p = 0; p < probes; ++p) {
    gpst::TokenSet ts;
    ts.width = uni_int(8, 48);
    ts.height = uni_int(8, 48);
    const int l = uni_int(1, 12);
    const int c_f = uni_int(1, 4);
    ts.tokens.resize(l);
    for (gpst::Token& t : ts.tokens) {
      t.geom.sigma_x = static_cast<float>(uni(0.8, 6.0));
      t.geom.sigma_y = static_cast<float>(uni(0.8, 6.0));
      t.geom.rho = static_cast<float>(uni(-0.7, 0.7));
      t.geom.mu_x = static_cast<float>(uni(0.0, ts.width));
      t.geom.mu_y = static_cast<float>(uni(0.0, ts.height));
      t.f.resize(c_f);
      for (float& v : t.f) v = static_cast<float>(uni(0.0, 1.0));
    }

    const int ti = uni_int(0, l - 1);
    const int param = uni_int(0, 4 + c_f);
    const gpst::GaussianGeom& g = ts.tokens[ti].geom;
    auto pick = [&](double mu, double sig, int extent) {
      const double r = ts.s * sig - 0.05;
      int lo = std::max(0, static_cast<int>(std::ceil(mu - r - 0.5)));
      int hi = std::min(extent - 1, static_cast<int>(std::floor(mu + r - 0.5)));
      if (lo > hi) lo = hi = std::clamp(static_cast<int>(std::lround(mu - 0.5)), 0, extent - 1);
    return uni_int(lo, hi);
    };
    const int px = pick(g.mu_x, g.sigma_x, ts.width);
    const int py = pick(g.mu_y, g.sigma_y, ts.height);
    const int pk = param >= 5 ? param - 5 : uni_int(0, c_f - 1);

    gpst::FeatureMap up;
    up.width = ts.width;
    up.height = ts.height;
    up.channels = c_f;
    up.data.assign(static_cast<size_t>(ts.width) * ts.height * c_f, 0.0f);
    up.data[(static_cast<size_t>(py) * ts.width + px) * c_f + pk] = 1.0f;
    gpst::TokenGradients grads = gpst::backward(ts, up);
    const gpst::TokenGradient& tg = grads[ti];
    double analytic;
    switch (param) {
      case 0: analytic = tg.d_sigma_x; break;
      case 1: analytic = tg.d_sigma_y; break;
      case 2: analytic = tg.d_rho; break;
      case 3: analytic = tg.d_mu_x; break;
      case 4: analytic = tg.d_mu_y; break;
      default: analytic = tg.d_f[static_cast<size_t>(param) - 5]; break;
    }

    auto pixel_value = [&](const gpst::TokenSet& tset) {
      double acc = 0.0;
      for (const gpst::Token& t : tset.tokens)
        acc += gpst::eval_gaussian(t.geom, px + 0.5, py + 0.5, tset.s) * t.f[pk];
      return acc;
    };
    gpst::TokenSet plus = ts;
    gpst::TokenSet minus = ts;
    float* vp = param_ptr(plus.tokens[ti], param);
    float* vm = param_ptr(minus.tokens[ti], param);
    *vp = static_cast<float>(*vp + 1e-3);
    *vm = static_cast<float>(*vm - 1e-3);
    const double span = static_cast<double>(*vp) - static_cast<double>(*vm);
    const double fd = (pixel_value(plus) - pixel_value(minus)) / span;

    const double mag = std::max(std::abs(analytic), std::abs(fd));
    const double abs_err = std::abs(analytic - fd);
    if (mag >= 1e-4) {
      max_rel = std::max(max_rel, abs_err / mag);
      if (!(abs_err / mag < 1e-3)) ++failures;
    } else {
      max_abs = std::max(max_abs, abs_err);
      if (!(abs_err < 1e-6)) ++failures;
    }
  }

  std::printf("max relative error %.3e (small-magnitude max absolute %.3e) over %d probes\n",
              max_rel, max_abs, probes);
  if (failures > 0)
    throw gpst::InvariantViolation(std::to_string(failures) +
                                   " gradient probes exceeded the tolerance");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian token image codec"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker thread cap (0 = all hardware threads)");

  std::string image_path, importance_path, in_path, out_path, report_path, ref_path,
      test_path;
  int tokens = 1, iters = 500, smin = 4, probes = 200;
  double lambda = 2.5;
  uint64_t seed = 0;
  bool deterministic = false;

  auto apply_threads = [&] { gpst::set_max_threads(threads); };

  CLI::App* partition = app.add_subcommand("partition", "Complexity-driven region partition");
  partition->add_option("--image", image_path, "Input image (png/ppm/pgm)")->required();
  partition->add_option("--tokens", tokens, "Target region count")->required();
  partition->add_option("--lambda", lambda, "Entropy exponent (default 2.5)");
  partition->add_option("--smin", smin, "Minimal region side (default 4)");
  partition->add_option("--importance", importance_path, "Grayscale importance map");
  partition->add_option("--out", out_path, "Output regions JSON")->required();
  partition->callback([&] {
    apply_threads();
    run_partition(image_path, tokens, lambda, smin, importance_path, out_path);
  });

  CLI::App* encode = app.add_subcommand("encode", "Fit a token set to an image");
  encode->add_option("--image", image_path, "Input image (png/ppm/pgm)")->required();
  encode->add_option("--tokens", tokens, "Token count")->required();
  encode->add_option("--iters", iters, "Optimization iterations (default 500)");
  encode->add_option("--seed", seed, "Seed recorded in the report");
  encode->add_flag("--deterministic", deterministic,
                   "Omit wall-clock timing so reruns are byte-identical");
  encode->add_option("--out", out_path, "Output token file")->required();
  encode->add_option("--report", report_path, "Fit report JSON");
  encode->callback([&] {
    apply_threads();
    run_encode(image_path, tokens, iters, seed, deterministic, out_path, report_path);
  });

  CLI::App* decode = app.add_subcommand("decode", "Render a token file to an image");
  decode->add_option("--in", in_path, "Input token file")->required();
  decode->add_option("--out", out_path, "Output image")->required();
  decode->callback([&] { apply_threads(); run_decode(in_path, out_path); });

  CLI::App* calibrate = app.add_subcommand("calibrate", "Snap and re-derive a token layout");
  calibrate->add_option("--in", in_path, "Input token file")->required();
  calibrate->add_option("--smin", smin, "Grid spacing (default 4)");
  calibrate->add_option("--out", out_path, "Output calibration JSON")->required();
  calibrate->callback([&] { apply_threads(); run_calibrate(in_path, smin, out_path); });

  CLI::App* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient audit");
  gradcheck->add_option("--seed", seed, "Probe RNG seed");
  gradcheck->add_option("--probes", probes, "Probe count (default 200)");
  gradcheck->callback([&] { apply_threads(); run_gradcheck(seed, probes); });

  CLI::App* metrics = app.add_subcommand("metrics", "PSNR and SSIM between two images");
  metrics->add_option("--ref", ref_path, "Reference image")->required();
  metrics->add_option("--test", test_path, "Test image")->required();
  metrics->add_option("--out", out_path, "Output metrics JSON");
  metrics->callback([&] { apply_threads(); run_metrics(ref_path, test_path, out_path); });

  CLI::App* render_map = app.add_subcommand("render-map", "Gaussian density visualization");
  render_map->add_option("--in", in_path, "Input token file")->required();
  render_map->add_option("--out", out_path, "Output grayscale image")->required();
  render_map->callback([&] { apply_threads(); run_render_map(in_path, out_path); });

  for (CLI::App* sub : app.get_subcommands(nullptr)) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const gpst::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
