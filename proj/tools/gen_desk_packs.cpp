// Writes the two desk-scale domain packs shipped in packs/:
//   idp.json, idp_model.json, idp_labels.json   inverted double pendulum
//   cpu.json, cpu_model.json, cpu_labels.json   CPU usage, degree-3 polynomial
// plus data/cpu_synthetic.csv, the stand-in data the CPU polynomial is fitted on.
//
// usage: illum_gen_packs <repo root>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "illum/fit.hpp"
#include "illum/io.hpp"

using namespace illum;

namespace {

struct Var {
  std::string name;
  double lo, hi;
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string le(const std::string& v, double c) { return v + " <= " + num(c); }
std::string ge(const std::string& v, double c) { return v + " >= " + num(c); }

json range(const std::string& v, double lo, double hi) { return {{"range", {{v, {lo, hi}}}}}; }

struct PackBuilder {
  json preds = json::array();
  json labels = json::object();

  void add(const std::string& name, json formula, const char* label) {
    preds.push_back({{"name", name}, {"formula", std::move(formula)}});
    labels[name] = label ? json(label) : json(nullptr);
  }

  // Three granularities per variable. Halves are labeled MA, thirds are left
  // unlabeled, and the narrow tenths at the ends and centre are LA. Thirds and
  // tenths are deliberately not dyadic so they do not line up with the
  // refinement grid.
  void graded(const Var& v, const std::string& lo_word, const std::string& hi_word) {
    double w = v.hi - v.lo, mid = v.lo + w / 2;
    add(v.name + "_" + lo_word, le(v.name, mid), "MA");
    add(v.name + "_" + hi_word, ge(v.name, mid), "MA");
    add(v.name + "_low", le(v.name, v.lo + w / 3), nullptr);
    add(v.name + "_middle", range(v.name, v.lo + w / 3, v.lo + 2 * w / 3), nullptr);
    add(v.name + "_high", ge(v.name, v.lo + 2 * w / 3), nullptr);
    add(v.name + "_very_low", le(v.name, v.lo + 0.1 * w), "LA");
    add(v.name + "_near_centre", range(v.name, mid - 0.1 * w, mid + 0.1 * w), "LA");
    add(v.name + "_very_high", ge(v.name, v.hi - 0.1 * w), "LA");
  }

  json pack(const std::string& name, const std::vector<Var>& in, const std::vector<Var>& out) const {
    json vars = json::array();
    for (const auto& v : in) vars.push_back({{"name", v.name}, {"role", "input"}, {"bounds", {v.lo, v.hi}}});
    for (const auto& v : out) vars.push_back({{"name", v.name}, {"role", "output"}, {"bounds", {v.lo, v.hi}}});
    return {{"v", kFormatVersion}, {"name", name}, {"variables", vars}, {"predicates", preds}};
  }
};

void save(const std::string& path, const json& j) {
  write_file(path, j.dump(1) + "\n");
  std::cout << "wrote " << path << '\n';
}

// Small tanh policy. The weights are seeded random except for a hand-set
// bias towards the pole angles and rates, so the action depends on every
// input but mostly on the poles, like a balancing controller.
void idp(const std::string& root) {
  const std::vector<Var> in = {{"x", -1, 1},
                               {"vx", -0.8, 0.8},
                               {"pole2_endpoint", -0.5, 0.5},
                               {"pole1angle", -0.2, 0.2},
                               {"pole1rate", -0.6, 0.6},
                               {"pole2angle", -0.04, 0.04},
                               {"pole2rate", -0.7, 0.7}};
  const std::vector<Var> out = {{"force", -1, 1}};

  Rng rng(20240611);
  auto u = [&](double a) { return (2.0 * uniform01(rng) - 1.0) * a; };
  const std::vector<double> emphasis = {0.3, 0.4, 0.5, 1.2, 0.8, 1.0, 0.6};
  Layer h1, h2, o;
  h1.activation = h2.activation = o.activation = Activation::Tanh;
  for (int i = 0; i < 8; ++i) {
    std::vector<double> w;
    for (std::size_t k = 0; k < in.size(); ++k) w.push_back(u(1.0) * emphasis[k]);
    h1.weights.push_back(w);
    h1.bias.push_back(u(0.2));
  }
  for (int i = 0; i < 6; ++i) {
    std::vector<double> w;
    for (int k = 0; k < 8; ++k) w.push_back(u(1.0));
    h2.weights.push_back(w);
    h2.bias.push_back(u(0.2));
  }
  std::vector<double> w;
  for (int k = 0; k < 6; ++k) w.push_back(u(1.5));
  o.weights.push_back(w);
  o.bias.push_back(0.0);

  json layers = json::array();
  for (const auto* l : {&h1, &h2, &o})
    layers.push_back({{"weights", l->weights}, {"bias", l->bias}, {"activation", activation_name(l->activation)}});
  json mean = json::array(), sd = json::array(), names = json::array();
  for (const auto& v : in) {
    mean.push_back((v.lo + v.hi) / 2);
    sd.push_back((v.hi - v.lo) / 2);
    names.push_back(v.name);
  }
  save(root + "/packs/idp_model.json", {{"v", kFormatVersion},
                                        {"kind", "network"},
                                        {"inputs", names},
                                        {"outputs", {"force"}},
                                        {"standardize", {{"mean", mean}, {"std", sd}}},
                                        {"layers", layers}});

  PackBuilder b;
  b.graded(in[0], "left", "right");
  b.graded(in[1], "moving_left", "moving_right");
  b.graded(in[2], "left", "right");
  b.graded(in[3], "tilted_left", "tilted_right");
  b.graded(in[4], "rotating_left", "rotating_right");
  b.graded(in[5], "tilted_left", "tilted_right");
  b.graded(in[6], "rotating_left", "rotating_right");
  b.add("poles_lean_same_way_right", {{"and", {ge("pole1angle", 0), ge("pole2angle", 0)}}}, "MA");
  b.add("poles_lean_same_way_left", {{"and", {le("pole1angle", 0), le("pole2angle", 0)}}}, "MA");
  b.add("pole1_falling_right", {{"and", {ge("pole1angle", 0.05), ge("pole1rate", 0.15)}}}, "LA");
  b.add("pole1_falling_left", {{"and", {le("pole1angle", -0.05), le("pole1rate", -0.15)}}}, "LA");
  b.add("cart_near_centre_and_slow", {{"and", {range("x", -0.3, 0.3), range("vx", -0.2, 0.2)}}}, nullptr);
  b.graded(out[0], "push_left", "push_right");
  b.add("force_moderate", range("force", -0.5, 0.5), nullptr);
  save(root + "/packs/idp.json", b.pack("idp", in, out));
  save(root + "/packs/idp_labels.json", {{"v", kFormatVersion}, {"labels", b.labels}});
}

// Stand-in for the CPU activity data: smooth, mildly nonlinear responses of
// the three usage outputs to the five system counters, plus noise.
Dataset cpu_data(const std::vector<Var>& in, std::size_t n) {
  Rng rng(562);
  auto gauss = [&] {
    double a = uniform01(rng), c = uniform01(rng);
    return std::sqrt(-2.0 * std::log(std::max(a, 1e-300))) * std::cos(6.283185307179586 * c);
  };
  Dataset d;
  for (const auto& v : in) d.input_names.push_back(v.name);
  d.output_names = {"lwrite", "swrite", "usr"};
  for (std::size_t r = 0; r < n; ++r) {
    std::vector<double> x, t;
    for (const auto& v : in) {
      double s = uniform01(rng);
      t.push_back(s);
      x.push_back(v.lo + s * (v.hi - v.lo));
    }
    double lwrite = 0.002 + 0.02 * t[0] * t[0] + 0.006 * t[1] + 0.001 * gauss();
    double swrite = 0.01 + 0.12 * t[1] + 0.05 * t[2] * t[1] - 0.02 * t[3] + 0.004 * gauss();
    double usr = 0.95 - 0.35 * t[1] - 0.15 * t[2] * t[2] + 0.12 * t[3] + 0.08 * t[4] * t[3] - 0.1 * t[0] +
                 0.015 * gauss();
    d.x.push_back(x);
    d.y.push_back({lwrite, swrite, usr});
  }
  return d;
}

void cpu(const std::string& root) {
  const std::vector<Var> in = {{"lread", 0, 0.0369},
                               {"scall", 0.0095, 0.4245},
                               {"sread", 0.0028, 0.0992},
                               {"freemem", 0.0061, 0.6275},
                               {"freeswap", 0.4324, 0.8318}};
  auto data = cpu_data(in, 4000);
  {
    std::ofstream csv(root + "/data/cpu_synthetic.csv");
    csv << "lread,scall,sread,freemem,freeswap,lwrite,swrite,usr\n";
    for (std::size_t r = 0; r < data.rows(); ++r) {
      for (double v : data.x[r]) csv << format_real(v) << ',';
      csv << format_real(data.y[r][0]) << ',' << format_real(data.y[r][1]) << ',' << format_real(data.y[r][2]) << '\n';
    }
    std::cout << "wrote " << root << "/data/cpu_synthetic.csv\n";
  }
  FitOptions fo;
  fo.seed = 7;
  auto fit = fit_polynomial(data, 3, fo);
  std::printf("cpu stand-in fit: train R^2 %.4f, test R^2 %.4f\n", fit.train_r2, fit.test_r2);
  save(root + "/packs/cpu_model.json", model_to_json(fit.model, data.input_names, data.output_names));

  // Output bounds: the model's certified image over the input bounding box.
  std::vector<Interval> box;
  for (const auto& v : in) box.push_back({v.lo, v.hi});
  auto img = fit.model.image(box);
  std::vector<Var> out;
  for (std::size_t j = 0; j < 3; ++j) out.push_back({data.output_names[j], img[j].lo, img[j].hi});

  // Output predicates are graded over the range the data actually covers,
  // which is much narrower than the certified image.
  std::vector<Var> seen;
  for (std::size_t j = 0; j < 3; ++j) {
    double lo = 1e300, hi = -1e300;
    for (const auto& y : data.y) lo = std::min(lo, y[j]), hi = std::max(hi, y[j]);
    seen.push_back({data.output_names[j], lo, hi});
  }

  PackBuilder b;
  b.graded(in[0], "light", "heavy");
  b.graded(in[1], "few", "many");
  b.graded(in[2], "few", "many");
  b.graded(in[3], "scarce", "plentiful");
  b.graded(in[4], "scarce", "plentiful");
  b.add("memory_pressure", {{"and", {le("freemem", 0.2), le("freeswap", 0.55)}}}, "LA");
  b.add("busy_system", {{"and", {ge("scall", 0.2), ge("sread", 0.05)}}}, "MA");
  b.graded(seen[0], "light", "heavy");
  b.graded(seen[1], "light", "heavy");
  b.graded(seen[2], "idle", "busy");
  save(root + "/packs/cpu.json", b.pack("cpu", in, out));
  save(root + "/packs/cpu_labels.json", {{"v", kFormatVersion}, {"labels", b.labels}});
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: illum_gen_packs <repo root>\n";
    return 2;
  }
  std::string root = argv[1];
  try {
    idp(root);
    cpu(root);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
