// orientrace: orientation-score transforms of 2D images with vessel
// tracking, vasculature modeling, phantoms, and completion-field math.
//
// Exit codes: 0 ok, 2 usage/format error, 3 ill-conditioned transform,
// 4 no seeds / low-confidence optic disk.

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "orientrace/ctos.hpp"
#include "orientrace/image_io.hpp"
#include "orientrace/model_io.hpp"
#include "orientrace/preprocess.hpp"
#include "orientrace/reference.hpp"

using namespace orientrace;
using json = nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void setup_threads(int flag_value) {
  if (const char* env = std::getenv("ORIENTRACE_THREADS"); env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && v >= 0) {
      set_thread_count(static_cast<int>(v));
      return;
    }
  }
  set_thread_count(flag_value);
}

// ------------------------------------------------------------ wavelet opts

struct WaveletOpts {
  std::string family = "cake";
  int orientations = 36;
  int spline_order = 2;
  int taylor_order = 60;
  double gamma = 0.8;
  double scale = 1.0;
  std::string sided = "double";
};

void add_wavelet_flags(CLI::App* cmd, WaveletOpts& o) {
  cmd->add_option("--wavelet", o.family, "wavelet family")
      ->check(CLI::IsMember({"cake", "gabor"}))
      ->capture_default_str();
  cmd->add_option("--orientations", o.orientations, "orientation count (even)")
      ->capture_default_str();
  cmd->add_option("--spline-order", o.spline_order, "angular B-spline order")
      ->capture_default_str();
  cmd->add_option("--taylor-order", o.taylor_order, "radial Taylor order")
      ->capture_default_str();
  cmd->add_option("--gamma", o.gamma, "protected pass-band fraction")->capture_default_str();
  cmd->add_option("--scale", o.scale, "gabor dilation")->capture_default_str();
  cmd->add_option("--sided", o.sided, "directional split")
      ->check(CLI::IsMember({"double", "plus", "minus"}))
      ->capture_default_str();
}

WaveletStack make_stack(int w, int h, const WaveletOpts& o) {
  if (o.family == "cake") {
    CakeParams p;
    p.n_orient = o.orientations;
    p.spline_order = o.spline_order;
    p.taylor_order = o.taylor_order;
    p.gamma = o.gamma;
    WaveletStack s = build_cake_stack(w, h, p);
    if (o.sided == "plus") return split_directional(s, Sidedness::Plus);
    if (o.sided == "minus") return split_directional(s, Sidedness::Minus);
    return s;
  }
  if (o.sided != "double")
    throw Error(ErrorCode::ParamError, "--sided applies to cake wavelets only");
  GaborParams p;
  p.n_orient = o.orientations;
  p.scale = o.scale;
  return build_gabor_stack(w, h, p);
}

// ------------------------------------------------------------ score files

void write_score_file(const std::string& path, const OrientationScore& u,
                      const WaveletOpts& o) {
  json h;
  h["schema"] = "orientrace-score-1";
  h["family"] = o.family;
  h["width"] = u.width;
  h["height"] = u.height;
  h["orientations"] = u.n_orient;
  h["spline_order"] = o.spline_order;
  h["taylor_order"] = o.taylor_order;
  h["gamma"] = o.gamma;
  h["scale"] = o.scale;
  h["sided"] = o.sided;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::NotFound, "cannot write " + path);
  out << "ORSC1\n" << h.dump() << "\n";
  for (const auto& layer : u.layers)
    out.write(reinterpret_cast<const char*>(layer.data()),
              static_cast<std::streamsize>(layer.size() * sizeof(cplx)));
}

OrientationScore read_score_file(const std::string& path, WaveletOpts* opts) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open " + path);
  std::string magic, header;
  if (!std::getline(in, magic) || magic != "ORSC1" || !std::getline(in, header))
    throw Error(ErrorCode::FormatError, "not a score file: " + path);
  json h;
  try {
    h = json::parse(header);
    if (h.at("schema").get<std::string>() != "orientrace-score-1")
      throw Error(ErrorCode::FormatError, "unsupported score schema");
    opts->family = h.at("family").get<std::string>();
    opts->orientations = h.at("orientations").get<int>();
    opts->spline_order = h.at("spline_order").get<int>();
    opts->taylor_order = h.at("taylor_order").get<int>();
    opts->gamma = h.at("gamma").get<double>();
    opts->scale = h.at("scale").get<double>();
    opts->sided = h.at("sided").get<std::string>();
    OrientationScore u;
    u.width = h.at("width").get<int>();
    u.height = h.at("height").get<int>();
    u.n_orient = opts->orientations;
    if (u.width <= 0 || u.height <= 0 || u.n_orient <= 0)
      throw Error(ErrorCode::FormatError, "bad score dimensions");
    const size_t npx = static_cast<size_t>(u.width) * u.height;
    u.layers.assign(u.n_orient, std::vector<cplx>(npx));
    u.thetas.resize(u.n_orient);
    for (int i = 0; i < u.n_orient; ++i) u.thetas[i] = kTwoPi * i / u.n_orient;
    for (auto& layer : u.layers) {
      in.read(reinterpret_cast<char*>(layer.data()),
              static_cast<std::streamsize>(npx * sizeof(cplx)));
      if (!in) throw Error(ErrorCode::FormatError, "truncated score data");
    }
    return u;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("bad score header: ") + e.what());
  }
}

// ------------------------------------------------------------ subcommands

int run_score(const std::string& input, const std::string& out, const WaveletOpts& o) {
  const Image2D f = load_image(input);
  const Image2D prepped = remove_dc(f);
  const WaveletStack stack = make_stack(f.width, f.height, o);
  const OrientationScore u = transform(prepped, stack);
  write_score_file(out, u, o);
  std::cout << "score layers " << u.n_orient << " size " << u.width << "x" << u.height << "\n";
  return 0;
}

int run_reconstruct(const std::string& score_path, const std::string& out,
                    const std::string& input, const std::string& mode) {
  WaveletOpts o;
  const OrientationScore u = read_score_file(score_path, &o);
  const WaveletStack stack = make_stack(u.width, u.height, o);
  Image2D rec;
  if (mode == "approx") {
    rec = reconstruct_approx(u, stack);
  } else {
    if (mode == "exact") {
      const MPsiReport rep = compute_m_psi(stack);
      if (!rep.invertible) {
        std::cerr << "verdict: " << rep.verdict << " (band " << fmt(rep.band_min) << " .. "
                  << fmt(rep.band_max) << ")\n";
        return 3;
      }
    }
    ReconstructOptions ro;
    ro.divide_m_psi = mode == "exact";
    rec = reconstruct(u, stack, ro);
  }
  if (!out.empty()) {
    Image2D clamped = rec;
    for (double& v : clamped.data) v = std::clamp(v, 0.0, 1.0);
    save_png_gray16(out, clamped);
  }
  if (!input.empty()) {
    const Image2D f = load_image(input);
    const Image2D prepped = remove_dc(f);
    std::cout << "relative_l2_error " << fmt(rel_l2(rec, prepped)) << "\n";
  }
  return 0;
}

int run_track(const std::string& input, const std::string& algo, const std::string& seed_path,
              const std::string& out, const std::string& overlay_path, const EtosParams& ep,
              int orientations) {
  const Image2D f = load_image(input);
  const Image2D prepped = remove_dc(f);
  const std::vector<SeedSpec> seeds = load_seeds(seed_path);

  VasculatureModel model;
  model.params.etos = ep;
  model.params.n_orient = orientations;

  if (!seeds.empty() && algo == "etos") {
    CakeParams ck;
    ck.n_orient = orientations;
    ck.dc_removed = true;
    const WaveletStack stack = build_cake_stack(f.width, f.height, ck);
    const OrientationScore u_plus = transform(prepped, split_directional(stack, Sidedness::Plus));
    double wsum = 0.0;
    for (const SeedSpec& s : seeds) {
      if (!s.u || !s.v)
        throw Error(ErrorCode::FormatError, "etos seeds need edge positions (ux..vy)");
      VesselSegment seg =
          etos_track(u_plus, TrackPoint::from_edges(*s.u, *s.v, s.theta), ep, nullptr);
      seg.id = static_cast<int>(model.segments.size());
      wsum += seg.points.empty() ? 0.0 : seg.points.front().width;
      model.segments.push_back(std::move(seg));
    }
    model.avg_width = wsum / static_cast<double>(seeds.size());
  } else if (!seeds.empty()) {
    CtosParams cp;
    cp.lambda = ep.lambda;
    cp.eta_max = ep.eta_max;
    cp.max_steps = ep.max_steps;
    const ScaleScoreSet ladder = build_gabor_ladder(prepped, cp, orientations);
    for (const SeedSpec& s : seeds) {
      VesselSegment seg = ctos_track(ladder, s.c, s.theta, cp, nullptr);
      seg.id = static_cast<int>(model.segments.size());
      model.segments.push_back(std::move(seg));
    }
  }

  if (!out.empty()) save_model(out, model);
  if (!overlay_path.empty()) save_overlay(overlay_path, render_overlay(f, model));
  std::cout << "segments " << model.segments.size() << "\n";
  return 0;
}

int run_vasculature(const std::string& input, const std::string& mask_path,
                    const std::string& out, const std::string& features_out,
                    const std::string& overlay_path, const std::string& seed_path,
                    VasculatureParams& p) {
  Image2D intensity = load_image(input, Channel::Gray);
  Image2D red = load_image(input, Channel::Red);
  if (!mask_path.empty()) {
    const Image2D m = load_image(mask_path);
    attach_mask(intensity, m);
    attach_mask(red, m);
  }
  std::vector<Seed> override_seeds;
  const std::vector<Seed>* override_ptr = nullptr;
  if (!seed_path.empty()) {
    for (const SeedSpec& s : load_seeds(seed_path)) {
      Seed sd;
      sd.c0 = s.c;
      sd.theta0 = s.theta;
      override_seeds.push_back(sd);
    }
    override_ptr = &override_seeds;
  }
  const VasculatureModel model = build_vasculature(intensity, red, p, override_ptr);
  if (!out.empty()) save_model(out, model);
  if (!features_out.empty()) {
    std::ofstream f(features_out, std::ios::binary);
    if (!f) throw Error(ErrorCode::NotFound, "cannot write " + features_out);
    f << features_csv(model_features(model));
  }
  if (!overlay_path.empty()) save_overlay(overlay_path, render_overlay(intensity, model));
  int nbif = 0, ncross = 0;
  for (const Junction& j : model.junctions)
    (j.kind == JunctionKind::Bifurcation ? nbif : ncross) += 1;
  std::cout << "segments " << model.segments.size() << "\n"
            << "bifurcations " << nbif << "\n"
            << "crossings " << ncross << "\n"
            << "disk " << fmt(model.disk.center.x) << " " << fmt(model.disk.center.y)
            << " radius " << fmt(model.disk.radius) << " confidence "
            << fmt(model.disk.confidence) << "\n";
  return 0;
}

int run_validate(const std::string& model_path, const std::string& truth_path,
                 double match_radius) {
  const VasculatureModel model = load_model(model_path);
  const std::vector<TruthProfile> truth = load_truth_csv(truth_path);
  if (truth.empty()) throw Error(ErrorCode::FormatError, "no truth profiles parsed");
  const WidthStats st = validate_widths(model, truth, match_radius);
  std::cout << "profiles " << st.total << "\n"
            << "matched " << st.matched << "\n"
            << "success_pct " << fmt(st.success_pct) << "\n"
            << "mean_width " << fmt(st.mean_width) << "\n"
            << "mean_chi " << fmt(st.mean_chi) << "\n"
            << "sigma_chi " << fmt(st.sigma_chi) << "\n"
            << "slope " << fmt(st.slope) << "\n"
            << "intercept " << fmt(st.intercept) << "\n";
  return 0;
}

struct PhantomOpts {
  std::string scene = "straight";
  int size = 256;
  double width = 8.0;
  double width2 = 14.0;
  double theta_deg = 0.0;
  double angle_deg = 60.0;
  double gap = 3.0;
  double contrast = 0.3;
  double reflex_contrast = 0.15;
  double radius = 60.0;
  int bars = 0;
  double noise = 0.0;
  unsigned seed = 1;
  double spacing = 4.0;
};

int run_phantom(const PhantomOpts& o, const std::string& out, const std::string& truth_json,
                const std::string& truth_csv_path) {
  phantom::Scene scene;
  if (o.scene == "straight")
    scene = phantom::scene_straight(o.size, o.width, o.theta_deg * kPi / 180.0, o.contrast);
  else if (o.scene == "crossing")
    scene = phantom::scene_crossing(o.size, o.width, o.angle_deg * kPi / 180.0, o.contrast);
  else if (o.scene == "parallel")
    scene = phantom::scene_parallel(o.size, o.width, o.gap, o.contrast);
  else if (o.scene == "reflex")
    scene = phantom::scene_reflex(o.size, o.width, o.contrast, o.reflex_contrast);
  else if (o.scene == "widening")
    scene = phantom::scene_widening(o.size, o.width, o.width2, o.contrast);
  else if (o.scene == "disk")
    scene = phantom::scene_disk(o.size, o.radius, o.bars);
  else if (o.scene == "tree")
    scene = phantom::scene_tree();
  else
    throw Error(ErrorCode::ParamError, "unknown scene: " + o.scene);
  scene.noise_sigma = o.noise;
  scene.noise_seed = o.seed;

  if (!out.empty()) save_png_gray16(out, phantom::render(scene));
  if (!truth_json.empty()) {
    std::ofstream f(truth_json, std::ios::binary);
    if (!f) throw Error(ErrorCode::NotFound, "cannot write " + truth_json);
    f << scene_truth_json(scene);
  }
  if (!truth_csv_path.empty()) {
    std::ofstream f(truth_csv_path, std::ios::binary);
    if (!f) throw Error(ErrorCode::NotFound, "cannot write " + truth_csv_path);
    f << phantom::truth_csv(scene, o.spacing);
  }
  std::cout << "scene " << o.scene << " " << scene.width << "x" << scene.height << "\n";
  return 0;
}

int run_completion(const std::vector<double>& boundary, double lambda, double d11, double beta,
                   const std::string& prefix) {
  CompletionSetup setup;
  setup.g1 = {boundary[0], boundary[1], boundary[2]};
  setup.g2 = {boundary[3], boundary[4], boundary[5]};
  setup.lambda_res = lambda;
  setup.d11 = d11;
  setup.beta = beta;
  setup.validate();

  const LiftedCurve mode = extract_mode(setup);
  const LiftedCurve cubic = cubic_hermite(setup.g1, setup.g2,
                                          static_cast<int>(mode.pos.size()));
  double dev = 0.0;
  for (size_t i = 0; i < mode.pos.size(); ++i) {
    dev = std::max(dev, std::abs(mode.pos[i].y - cubic.pos[i].y));
    dev = std::max(dev, std::abs(mode.theta[i] - cubic.theta[i]));
  }

  if (!prefix.empty()) {
    auto dump_curve = [](const std::string& path, const LiftedCurve& c) {
      std::ofstream f(path, std::ios::binary);
      if (!f) throw Error(ErrorCode::NotFound, "cannot write " + path);
      f << "x,y,theta\n";
      for (size_t i = 0; i < c.pos.size(); ++i)
        f << fmt(c.pos[i].x) << ',' << fmt(c.pos[i].y) << ',' << fmt(c.theta[i]) << '\n';
    };
    dump_curve(prefix + "_mode.csv", mode);
    dump_curve(prefix + "_hermite.csv", cubic);

    const FieldGrid grid;
    const CompletionField field = completion_field_h3(setup, grid);
    json h;
    h["schema"] = "orientrace-field-1";
    h["nx"] = grid.nx;
    h["ny"] = grid.ny;
    h["ntheta"] = grid.ntheta;
    h["y_min"] = grid.y_min;
    h["y_max"] = grid.y_max;
    h["theta_min"] = grid.theta_min;
    h["theta_max"] = grid.theta_max;
    std::ofstream f(prefix + "_field.bin", std::ios::binary);
    if (!f) throw Error(ErrorCode::NotFound, "cannot write " + prefix + "_field.bin");
    f << "ORCF1\n" << h.dump() << "\n";
    f.write(reinterpret_cast<const char*>(field.values.data()),
            static_cast<std::streamsize>(field.values.size() * sizeof(double)));
  }
  std::cout << "max_deviation " << fmt(dev) << "\n";
  return 0;
}

int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::IllConditioned:
      return 3;
    case ErrorCode::NoSeeds:
    case ErrorCode::Reject:
      return 4;
    default:
      return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"orientation-score transforms and retinal vessel tracking"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (0 = library default)")
      ->capture_default_str();

  // score
  auto* sc_score = app.add_subcommand("score", "orientation-score transform of an image");
  std::string score_input, score_out;
  WaveletOpts score_w;
  sc_score->add_option("--input", score_input, "input image")->required();
  sc_score->add_option("--out", score_out, "output score file")->required();
  add_wavelet_flags(sc_score, score_w);

  // reconstruct
  auto* sc_rec = app.add_subcommand("reconstruct", "invert a stored orientation score");
  std::string rec_score, rec_out, rec_input, rec_mode = "exact";
  sc_rec->add_option("--score", rec_score, "score file from `score`")->required();
  sc_rec->add_option("--out", rec_out, "reconstructed PNG");
  sc_rec->add_option("--input", rec_input, "original image (prints relative L2 error)");
  sc_rec->add_option("--mode", rec_mode, "reconstruction mode")
      ->check(CLI::IsMember({"exact", "nodiv", "approx"}))
      ->capture_default_str();

  // track
  auto* sc_track = app.add_subcommand("track", "track vessels from explicit seeds");
  std::string tr_input, tr_algo = "etos", tr_seeds, tr_out, tr_overlay;
  EtosParams tr_ep;
  int tr_orient = 36;
  sc_track->add_option("--input", tr_input, "input image")->required();
  sc_track->add_option("--algo", tr_algo, "tracking algorithm")
      ->check(CLI::IsMember({"etos", "ctos"}))
      ->capture_default_str();
  sc_track->add_option("--seeds", tr_seeds, "seed JSON file")->required();
  sc_track->add_option("--out", tr_out, "model JSON output");
  sc_track->add_option("--overlay", tr_overlay, "overlay PNG output");
  sc_track->add_option("--step", tr_ep.lambda, "step length (px)")->capture_default_str();
  sc_track->add_option("--eta-max", tr_ep.eta_max, "scan half-length (px)")
      ->capture_default_str();
  sc_track->add_option("--envelope-sigma", tr_ep.sigma, "edge envelope sigma (px)")
      ->capture_default_str();
  sc_track->add_option("--history", tr_ep.history, "width averaging history")
      ->capture_default_str();
  sc_track->add_option("--orientations", tr_orient, "orientation count")->capture_default_str();
  sc_track->add_option("--max-steps", tr_ep.max_steps, "step cap")->capture_default_str();

  // vasculature
  auto* sc_vasc = app.add_subcommand("vasculature", "fully automatic vasculature model");
  std::string va_input, va_mask, va_out, va_features, va_overlay, va_seeds;
  VasculatureParams va_p;
  sc_vasc->add_option("--input", va_input, "fundus-style image")->required();
  sc_vasc->add_option("--mask", va_mask, "field-of-view mask image");
  sc_vasc->add_option("--out", va_out, "model JSON output");
  sc_vasc->add_option("--features-out", va_features, "feature CSV output");
  sc_vasc->add_option("--overlay", va_overlay, "overlay PNG output");
  sc_vasc->add_option("--seed-file", va_seeds, "seed override JSON");
  sc_vasc->add_option("--expected-radius", va_p.expected_disk_radius,
                      "expected optic-disk radius (px)")
      ->capture_default_str();
  sc_vasc->add_option("--orientations", va_p.n_orient, "orientation count")
      ->capture_default_str();
  sc_vasc->add_option("--max-segments", va_p.max_segments, "segment cap")
      ->capture_default_str();

  // validate-widths
  auto* sc_val = app.add_subcommand("validate-widths", "compare a model against truth widths");
  std::string vw_model, vw_truth;
  double vw_radius = 3.0;
  sc_val->add_option("--model", vw_model, "model JSON")->required();
  sc_val->add_option("--truth", vw_truth, "truth CSV (id,ux,uy,vx,vy,width)")->required();
  sc_val->add_option("--match-radius", vw_radius, "matching radius (px)")
      ->capture_default_str();

  // phantom
  auto* sc_ph = app.add_subcommand("phantom", "synthesize a test scene");
  PhantomOpts ph;
  std::string ph_out, ph_truth, ph_truth_csv;
  sc_ph->add_option("--scene", ph.scene, "scene name")
      ->check(CLI::IsMember({"straight", "crossing", "parallel", "reflex", "widening", "disk",
                             "tree"}))
      ->capture_default_str();
  sc_ph->add_option("--size", ph.size)->capture_default_str();
  sc_ph->add_option("--width", ph.width)->capture_default_str();
  sc_ph->add_option("--width2", ph.width2, "end width (widening scene)")->capture_default_str();
  sc_ph->add_option("--theta-deg", ph.theta_deg)->capture_default_str();
  sc_ph->add_option("--angle-deg", ph.angle_deg)->capture_default_str();
  sc_ph->add_option("--gap", ph.gap)->capture_default_str();
  sc_ph->add_option("--contrast", ph.contrast)->capture_default_str();
  sc_ph->add_option("--reflex-contrast", ph.reflex_contrast)->capture_default_str();
  sc_ph->add_option("--radius", ph.radius)->capture_default_str();
  sc_ph->add_option("--bars", ph.bars)->capture_default_str();
  sc_ph->add_option("--noise", ph.noise, "gaussian noise sigma")->capture_default_str();
  sc_ph->add_option("--noise-seed", ph.seed)->capture_default_str();
  sc_ph->add_option("--spacing", ph.spacing, "truth profile spacing (px)")
      ->capture_default_str();
  sc_ph->add_option("--out", ph_out, "PNG output");
  sc_ph->add_option("--truth", ph_truth, "ground-truth JSON output");
  sc_ph->add_option("--truth-csv", ph_truth_csv, "width truth CSV output");

  // completion-demo
  auto* sc_comp = app.add_subcommand("completion-demo", "completion field + mode curves");
  std::vector<double> cd_boundary;
  double cd_lambda = 1.0, cd_d11 = 0.125, cd_beta = 1.0;
  std::string cd_prefix;
  sc_comp->add_option("--boundary", cd_boundary, "x1 y1 th1 x2 y2 th2")
      ->expected(6)
      ->required();
  sc_comp->add_option("--lambda", cd_lambda, "resolvent decay")->capture_default_str();
  sc_comp->add_option("--d11", cd_d11, "angular diffusion")->capture_default_str();
  sc_comp->add_option("--beta", cd_beta, "bending weight")->capture_default_str();
  sc_comp->add_option("--out-prefix", cd_prefix, "file prefix for CSVs + field");

  try {
    app.parse(argc, argv);
    setup_threads(threads);
    if (*sc_score) return run_score(score_input, score_out, score_w);
    if (*sc_rec) return run_reconstruct(rec_score, rec_out, rec_input, rec_mode);
    if (*sc_track)
      return run_track(tr_input, tr_algo, tr_seeds, tr_out, tr_overlay, tr_ep, tr_orient);
    if (*sc_vasc)
      return run_vasculature(va_input, va_mask, va_out, va_features, va_overlay, va_seeds, va_p);
    if (*sc_val) return run_validate(vw_model, vw_truth, vw_radius);
    if (*sc_ph) return run_phantom(ph, ph_out, ph_truth, ph_truth_csv);
    if (*sc_comp) return run_completion(cd_boundary, cd_lambda, cd_d11, cd_beta, cd_prefix);
    return 2;
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
