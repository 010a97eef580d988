#include "mfcnn/cli.hpp"

#include <CLI11.hpp>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <sstream>

#include "mfcnn/covariance.hpp"
#include "mfcnn/errors.hpp"
#include "mfcnn/experiments.hpp"
#include "mfcnn/kernel_file.hpp"
#include "mfcnn/kernels.hpp"
#include "mfcnn/mean_field.hpp"
#include "mfcnn/parallel.hpp"
#include "mfcnn/simulator.hpp"
#include "mfcnn/spectra.hpp"

#ifndef MFCNN_VERSION
#define MFCNN_VERSION "unknown"
#endif

namespace mfcnn::cli {

using json = nlohmann::ordered_json;

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read config file '" + path + "'");
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidArgument(path + ":" + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

std::vector<std::string> merge_config(const std::vector<std::string>& args,
                                      const std::map<std::string, std::string>& config) {
  std::vector<std::string> out = args;
  for (const auto& [key, value] : config) {
    if (key == "config") continue;
    const std::string flag = "--" + key;
    bool given = false;
    for (const auto& a : args)
      if (a == flag || a.rfind(flag + "=", 0) == 0) given = true;
    if (!given) out.push_back(flag + "=" + value);
  }
  return out;
}

namespace {

json number(double x) {
  if (std::isfinite(x)) return x;
  return format_number(x);
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InvalidArgument("cannot parse number '" + item + "'");
    }
  }
  if (out.empty()) throw InvalidArgument("empty list");
  return out;
}

// "lo:hi:count" or a comma list
std::vector<double> parse_grid(const std::string& s) {
  if (s.find(':') == std::string::npos) return parse_list(s);
  std::vector<double> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(parse_list(item).front());
  if (parts.size() != 3 || parts[2] < 1 || parts[2] != std::floor(parts[2]))
    throw InvalidArgument("grid must be lo:hi:count");
  const int count = static_cast<int>(parts[2]);
  std::vector<double> out;
  for (int i = 0; i < count; ++i)
    out.push_back(count == 1 ? parts[0] : parts[0] + (parts[1] - parts[0]) * i / (count - 1));
  return out;
}

// "uniform:k", "one-hot:k" or explicit taps
VarianceVector parse_v(const std::string& s) {
  for (const char* kind : {"uniform:", "one-hot:"}) {
    const std::string prefix = kind;
    if (s.rfind(prefix, 0) == 0) {
      int k = 0;
      try {
        k = std::stoi(s.substr(prefix.size()));
      } catch (const std::exception&) {
        throw InvalidArgument("bad variance vector '" + s + "'");
      }
      if (k < 0) throw InvalidArgument("half width must be nonnegative");
      return prefix == "uniform:" ? VarianceVector::uniform(k) : VarianceVector::one_hot(k);
    }
  }
  return VarianceVector(parse_list(s));
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

struct Context {
  std::ostream& out;
  std::ostream& err;
  CLI::App* sub = nullptr;
};

json parameters(const CLI::App* sub) {
  json p = json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string name = opt->get_name(false, true);
    if (name.empty() || name == "--help" || name == "-h") continue;
    std::string key = opt->get_single_name();
    const auto res = opt->results();
    if (!res.empty())
      p[key] = res.size() == 1 ? json(res.front()) : json(res);
    else if (!opt->get_default_str().empty())
      p[key] = opt->get_default_str();
  }
  return p;
}

// Body goes to `path` (or stdout when empty); metadata with the timestamp goes
// to a sidecar next to it so the body stays byte-reproducible.
void emit(Context& ctx, const std::string& body, const std::string& path) {
  if (path.empty()) {
    ctx.out << body;
    return;
  }
  {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw InvalidArgument("cannot write '" + path + "'");
    f << body;
  }
  json meta;
  meta["command"] = ctx.sub->get_name();
  meta["artifact_version"] = MFCNN_VERSION;
  meta["rng"] = std::string(RandomSource::kAlgorithm);
  meta["parameters"] = parameters(ctx.sub);
  meta["created"] = timestamp();
  std::ofstream m(path + ".meta.json", std::ios::trunc);
  m << meta.dump(2) << "\n";
}

MeanFieldParams make_params(const std::string& activation, double sw, double sb) {
  MeanFieldParams p{sw, sb, find_activation(activation)};
  p.validate();
  return p;
}

// ---------------------------------------------------------------- fixed-point

struct FixedPointArgs {
  std::string activation = "tanh";
  double sigma_w2 = 1.0, sigma_b2 = 0.0, tol = kDefaultTol;
  int max_iter = kDefaultMaxIter;
  std::string out;
};

json fixed_point_json(const FixedPointArgs& a) {
  const MeanFieldParams p = make_params(a.activation, a.sigma_w2, a.sigma_b2);
  const CriticalPoint cp = solve_critical_point(p, a.tol, a.max_iter);
  const double xi = depth_scales(DepthScaleSpectrum{{1.0}, {}, {}, 0.0}, cp.chi_c).xis[0];
  json j;
  j["activation"] = a.activation;
  j["sigma_w2"] = a.sigma_w2;
  j["sigma_b2"] = a.sigma_b2;
  j["q_star"] = number(cp.q_star);
  j["c_star"] = number(cp.c_star);
  j["chi_q"] = number(cp.chi_q);
  j["chi_c"] = number(cp.chi_c);
  j["chi1"] = number(cp.chi1);
  j["kappa"] = number(cp.kappa);
  j["xi_c"] = number(xi);
  return j;
}

// -------------------------------------------------------------- phase-diagram

struct PhaseArgs {
  std::string activation = "tanh";
  std::string sw_grid = "0.5:4.5:50", sb_grid = "0:0.5:50";
  double tol = 1e-9;
  std::string out;
};

std::string phase_csv(const PhaseArgs& a) {
  const auto act = find_activation(a.activation);
  const auto sws = parse_grid(a.sw_grid), sbs = parse_grid(a.sb_grid);
  const int rows = static_cast<int>(sws.size() * sbs.size());
  std::vector<std::string> lines(rows);
  parallel_for(rows, [&](int r) {
    const double sb = sbs[r / sws.size()], sw = sws[r % sws.size()];
    std::ostringstream line;
    line << format_number(sw) << ',' << format_number(sb) << ',';
    try {
      MeanFieldParams p{sw, sb, act};
      p.validate();
      const double q = solve_q_star(p);
      const double c = solve_c_star(p, q);
      const double chi1 = chi_c(p, q, 1.0);
      const char* phase = std::fabs(chi1 - 1.0) < a.tol ? "critical" : chi1 < 1.0 ? "ordered" : "chaotic";
      line << format_number(q) << ',' << format_number(c) << ',' << format_number(chi1) << ','
           << phase << ',';
    } catch (const DivergenceError&) {
      line << "inf,nan,nan,chaotic,diverging variance";
    } catch (const std::exception& e) {
      std::string msg = e.what();
      for (auto& ch : msg)
        if (ch == ',' || ch == '\n') ch = ' ';
      line << "nan,nan,nan,error," << msg;
    }
    lines[r] = line.str();
  });
  std::string body = "sigma_w2,sigma_b2,q_star,c_star,chi1,phase,error\n";
  for (const auto& l : lines) body += l + "\n";
  return body;
}

// --------------------------------------------------------------- depth-scales

struct DepthArgs {
  std::string activation = "tanh";
  double sigma_w2 = 1.0, sigma_b2 = 0.0;
  std::string v = "uniform:1";
  int n = 10;
  std::string out;
};

std::string depth_csv(const DepthArgs& a) {
  const MeanFieldParams p = make_params(a.activation, a.sigma_w2, a.sigma_b2);
  const CriticalPoint cp = solve_critical_point(p);
  const auto spec = depth_scales(fourier_eigenvalues(parse_v(a.v), a.n), cp.chi_c);
  std::string body = "mode,lambda_re,lambda_im,lambda_abs,chi,xi,growing\n";
  for (int w = 0; w < a.n; ++w) {
    const auto lam = spec.lambdas[w];
    body += std::to_string(w) + "," + format_number(lam.real()) + "," + format_number(lam.imag()) +
            "," + format_number(std::abs(lam)) + "," + format_number(spec.chi) + "," +
            format_number(spec.xis[w]) + "," + (spec.growing[w] ? "1" : "0") + "\n";
  }
  return body;
}

// ----------------------------------------------------------------- gen-kernel

struct GenArgs {
  std::string kind = "orthogonal";
  int ksize = 3, cin = 4, cout = 4, rank = 2;
  double gain = 1.0;
  std::string v = "";
  std::uint64_t seed = 0;
  std::string out;
};

KernelFile generate_kernel(const GenArgs& a) {
  KernelFile f;
  f.header.kind = parse_kernel_kind(a.kind);
  f.header.gain = a.gain;
  f.header.seed = a.seed;
  f.header.rng_algorithm = std::string(RandomSource::kAlgorithm);
  if (a.rank != 1 && a.rank != 2) throw InvalidArgument("rank must be 1 or 2");
  RandomSource rng(a.seed);
  switch (f.header.kind) {
    case KernelKind::orthogonal:
      f.kernel = orthogonal_kernel(a.ksize, a.cin, a.cout, rng, a.gain, a.rank);
      break;
    case KernelKind::delta:
      f.kernel = delta_orthogonal_kernel(a.ksize, a.cin, a.cout, a.gain, rng, a.rank);
      break;
    case KernelKind::gaussian: {
      if (a.ksize % 2 == 0 && a.v.empty()) throw InvalidArgument("gaussian kernels need odd ksize");
      const VarianceVector v = parse_v(a.v.empty() ? "uniform:" + std::to_string(a.ksize / 2) : a.v);
      if (v.taps() != a.ksize) throw InvalidArgument("--v must have ksize taps");
      const Eigen::MatrixXd grid = a.rank == 2 ? outer_variance(v)
                                               : Eigen::MatrixXd(Eigen::Map<const Eigen::VectorXd>(
                                                     v.values().data(), v.taps()));
      f.kernel = a.rank == 1 && a.ksize == 1 ? gaussian_kernel(a.cin, a.cout, a.gain * a.gain, v, rng)
                                             : gaussian_kernel(a.ksize, a.cin, a.cout, a.gain * a.gain, grid, rng);
      break;
    }
  }
  return f;
}

struct VerifyArgs {
  std::string in;
  int n = 8, trials = 100;
  std::uint64_t seed = 0;
  bool zero_padding = false;
  double tol = 1e-10;
};

json verify_json(const VerifyArgs& a) {
  const KernelFile f = read_kernel_file(a.in);
  RandomSource rng(a.seed);
  const double err = norm_preservation_error(f.kernel, a.n, a.trials, f.header.gain, rng, a.zero_padding);
  json j;
  j["kind"] = kernel_kind_name(f.header.kind);
  j["rank"] = f.kernel.rank();
  j["ksize"] = f.kernel.k_size();
  j["cin"] = f.kernel.c_in();
  j["cout"] = f.kernel.c_out();
  j["gain"] = f.header.gain;
  j["n"] = a.n;
  j["trials"] = a.trials;
  j["max_norm_ratio_error"] = number(err);
  j["norm_preserving"] = f.header.kind != KernelKind::gaussian && err < a.tol;
  return j;
}

// ------------------------------------------------------------------- simulate

struct SimArgs {
  std::string mode = "covariance";
  std::string config_file;
  std::string activation = "tanh";
  double sigma_w2 = 1.0, sigma_b2 = 0.05;
  int depth = 10, channels = 100, n = 10;
  std::string v = "uniform:1";
  std::uint64_t seed = 0;
  int members = 64;
  std::string init = "gaussian";
  std::string input = "random";
  double input_q = 1.0;
  int l0 = 10, fit_layers = 30, skip = 10;
  std::string eps0;
  std::string out;
};

WeightInit parse_init(const std::string& s) {
  if (s == "gaussian") return WeightInit::gaussian;
  if (s == "orthogonal") return WeightInit::orthogonal;
  if (s == "delta") return WeightInit::delta_orthogonal;
  throw InvalidArgument("unknown init '" + s + "'");
}

std::string simulate_covariance(const SimArgs& a) {
  const MeanFieldParams p = make_params(a.activation, a.sigma_w2, a.sigma_b2);
  const VarianceVector v = parse_v(a.v);
  RandomSource rng = RandomSource(a.seed).substream(0);
  CovarianceMatrix s0;
  if (a.input == "random")
    s0 = random_spatial_covariance(a.n, a.input_q, rng);
  else if (a.input == "identity")
    s0 = CovarianceMatrix(a.input_q * Eigen::MatrixXd::Identity(a.n, a.n));
  else
    throw InvalidArgument("input must be random or identity");
  if (a.depth < 0) throw InvalidArgument("depth must be nonnegative");
  const auto theory = propagate_covariance(p, v, s0, a.depth);

  std::vector<Eigen::MatrixXd> mean, se;
  if (a.depth == 0) {
    mean.push_back(s0.matrix());
    se.push_back(Eigen::MatrixXd::Zero(a.n, a.n));
  } else {
    SimNetworkConfig cfg;
    cfg.depth = a.depth;
    cfg.channels = a.channels;
    cfg.spatial = a.n;
    cfg.v = v;
    cfg.params = p;
    cfg.seed = a.seed;
    cfg.init = parse_init(a.init);
    const auto ens = empirical_covariance(cfg, s0, a.members);
    mean = ens.mean;
    se = ens.std_error;
  }
  std::string body = "layer,row,col,empirical,std_error,theory\n";
  for (int l = 0; l <= a.depth; ++l)
    for (int r = 0; r < a.n; ++r)
      for (int c = 0; c < a.n; ++c)
        body += std::to_string(l) + "," + std::to_string(r) + "," + std::to_string(c) + "," +
                format_number(mean[l](r, c)) + "," + format_number(se[l](r, c)) + "," +
                format_number(theory[l](r, c)) + "\n";
  return body;
}

std::string simulate_gradients(const SimArgs& a, json& summary) {
  GradientExperiment e;
  e.params = make_params(a.activation, a.sigma_w2, a.sigma_b2);
  e.depth = a.depth;
  e.channels = a.channels;
  e.n = a.n;
  e.half_width = parse_v(a.v).half_width();
  e.seed = a.seed;
  e.skip = a.skip;
  const auto r = run_gradient_experiment(e);
  summary["chi1"] = number(r.chi1);
  summary["predicted_slope"] = number(r.predicted_slope);
  summary["fitted_slope"] = number(r.fitted_slope);
  summary["overflow"] = r.profile.overflow;
  std::string body = "layer,squared_norm,relative,theory\n";
  for (int l = 1; l <= a.depth; ++l)
    body += std::to_string(l) + "," + format_number(r.profile.squared_norms[l - 1]) + "," +
            format_number(r.profile.relative[l - 1]) + "," + format_number(r.theory[l - 1]) + "\n";
  return body;
}

std::string simulate_modes(const SimArgs& a, json& summary) {
  ModeExperiment e = ModeExperiment::standard();
  e.params = make_params(a.activation, a.sigma_w2, a.sigma_b2);
  e.v = parse_v(a.v);
  e.n = a.n;
  e.depth = a.depth;
  e.l0 = a.l0;
  e.fit_layers = a.fit_layers;
  if (!a.eps0.empty()) {
    e.eps0.clear();
    for (double x : parse_list(a.eps0)) e.eps0.emplace_back(x, 0.0);
  }
  if (static_cast<int>(e.eps0.size()) != e.n)
    throw InvalidArgument("eps0 needs one Fourier coefficient per position");
  const auto theory = mode_decay_theory(e);
  ModeTrajectory emp;
  const bool simulate = a.members > 0;
  if (simulate) emp = mode_decay_empirical(e, a.channels, a.members, a.seed);
  json modes = json::array();
  for (int w = 0; w < e.n; ++w) {
    json m;
    m["mode"] = w;
    m["lambda_abs"] = number(std::abs(theory.spectrum.lambdas[w]));
    m["xi"] = number(theory.spectrum.xis[w]);
    m["predicted_slope"] = number(theory.predicted_slopes[w]);
    m["theory_fitted_slope"] = number(theory.fitted_slopes[w]);
    m["empirical_fitted_slope"] = simulate ? number(emp.fitted_slopes[w]) : json(nullptr);
    modes.push_back(m);
  }
  summary["chi_c"] = number(theory.spectrum.chi);
  summary["modes"] = modes;
  std::string body = "layer,mode,theory,empirical,predicted_slope\n";
  for (int l = 0; l <= e.depth; ++l)
    for (int w = 0; w < e.n; ++w)
      body += std::to_string(l) + "," + std::to_string(w) + "," + format_number(theory.modes[l][w]) +
              "," + (simulate ? format_number(emp.modes[l][w]) : "nan") + "," +
              format_number(theory.predicted_slopes[w]) + "\n";
  return body;
}

// ------------------------------------------------------------------------ svd

struct SvdArgs {
  std::string ensemble = "blockcirc";
  int n = 26, c = 8, ksize = 5;
  std::uint64_t seed = 0;
  std::string in;
  int bins = 40;
  std::string out;
};

std::string svd_csv(const SvdArgs& a, json& summary) {
  RandomSource rng(a.seed);
  std::vector<double> sv;
  if (a.ensemble == "blockcirc") {
    if (a.ksize % 2 == 0) throw InvalidArgument("ksize must be odd");
    const auto k = gaussian_kernel(a.c, a.c, 1.0, VarianceVector::uniform(a.ksize / 2), rng);
    if (a.n < a.ksize) throw InvalidArgument("n must be at least ksize");
    sv = singular_values(conv_to_matrix(k, a.n).dense);
  } else if (a.ensemble == "dense") {
    sv = singular_values(dense_gaussian(a.n * a.c, rng));
  } else if (a.ensemble == "kernel-file") {
    if (a.in.empty()) throw InvalidArgument("--in is required for kernel-file");
    const auto f = read_kernel_file(a.in);
    sv = singular_values(conv_to_matrix(f.kernel, a.n).dense);
  } else {
    throw InvalidArgument("ensemble must be blockcirc, dense or kernel-file");
  }
  const double top = sv.front();
  const auto hist = histogram(sv, 0.0, std::max(2.0, top), a.bins);
  summary["count"] = sv.size();
  summary["max"] = number(top);
  summary["min"] = number(sv.back());
  summary["ks_quarter_circle"] = number(ks_distance_to_cdf(sv, quarter_circle_cdf));
  summary["histogram"] = {{"lo", hist.lo}, {"hi", hist.hi}, {"counts", hist.counts}};
  std::string body = "index,singular_value\n";
  for (std::size_t i = 0; i < sv.size(); ++i) body += std::to_string(i) + "," + format_number(sv[i]) + "\n";
  return body;
}

void error_json(std::ostream& err, const std::string& kind, const std::string& msg,
                const json& extra = json::object()) {
  json j;
  j["error"] = kind;
  j["message"] = msg;
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  err << j.dump() << "\n";
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args = raw_args;
  try {
    for (std::size_t i = 0; i < raw_args.size(); ++i) {
      std::string path;
      if (raw_args[i] == "--config" && i + 1 < raw_args.size())
        path = raw_args[i + 1];
      else if (raw_args[i].rfind("--config=", 0) == 0)
        path = raw_args[i].substr(9);
      if (!path.empty()) args = merge_config(raw_args, read_config_file(path));
    }
  } catch (const Error& e) {
    error_json(err, "usage", e.what());
    return kUsage;
  }

  CLI::App app{"Mean-field signal propagation in deep CNNs: fixed points, depth scales, "
               "orthogonal kernels, simulation and spectra"};
  app.require_subcommand(1);
  Context ctx{out, err};

  FixedPointArgs fp;
  auto* s_fp = app.add_subcommand("fixed-point", "q*, c*, chi_q, chi_c, kappa and xi_c as JSON");
  s_fp->add_option("--activation", fp.activation)->capture_default_str();
  s_fp->add_option("--sigma-w2", fp.sigma_w2, "weight variance")->required();
  s_fp->add_option("--sigma-b2", fp.sigma_b2, "bias variance")->required();
  s_fp->add_option("--tol", fp.tol)->capture_default_str();
  s_fp->add_option("--max-iter", fp.max_iter)->capture_default_str();
  s_fp->add_option("--out", fp.out, "write JSON here instead of stdout");

  PhaseArgs ph;
  auto* s_ph = app.add_subcommand("phase-diagram", "grid of q*, c*, chi1 and phase labels (CSV)");
  s_ph->add_option("--activation", ph.activation)->capture_default_str();
  s_ph->add_option("--sigma-w2-grid", ph.sw_grid, "lo:hi:count or comma list")->capture_default_str();
  s_ph->add_option("--sigma-b2-grid", ph.sb_grid, "lo:hi:count or comma list")->capture_default_str();
  s_ph->add_option("--tol", ph.tol, "|chi1 - 1| below this is labelled critical")->capture_default_str();
  s_ph->add_option("--out", ph.out);

  DepthArgs ds;
  auto* s_ds = app.add_subcommand("depth-scales", "per-mode Fourier eigenvalues and depth scales (CSV)");
  s_ds->add_option("--activation", ds.activation)->capture_default_str();
  s_ds->add_option("--sigma-w2", ds.sigma_w2)->required();
  s_ds->add_option("--sigma-b2", ds.sigma_b2)->required();
  s_ds->add_option("--v", ds.v, "taps, uniform:k or one-hot:k")->capture_default_str();
  s_ds->add_option("--n", ds.n)->capture_default_str();
  s_ds->add_option("--out", ds.out);

  GenArgs gk;
  auto* s_gk = app.add_subcommand("gen-kernel", "write an initialization kernel file");
  s_gk->add_option("--kind", gk.kind, "orthogonal, delta or gaussian")->capture_default_str();
  s_gk->add_option("--ksize", gk.ksize)->capture_default_str();
  s_gk->add_option("--cin", gk.cin)->capture_default_str();
  s_gk->add_option("--cout", gk.cout)->capture_default_str();
  s_gk->add_option("--rank", gk.rank, "spatial rank, 1 or 2")->capture_default_str();
  s_gk->add_option("--gain", gk.gain, "sigma_w; gaussian taps get variance gain^2 v/cin")
      ->capture_default_str();
  s_gk->add_option("--v", gk.v, "gaussian variance taps (2D uses the outer product)");
  s_gk->add_option("--seed", gk.seed)->capture_default_str();
  s_gk->add_option("--out", gk.out)->required();

  VerifyArgs vk;
  auto* s_vk = app.add_subcommand("verify-kernel", "check norm preservation of a kernel file");
  s_vk->add_option("--in", vk.in)->required();
  s_vk->add_option("--n", vk.n)->capture_default_str();
  s_vk->add_option("--trials", vk.trials)->capture_default_str();
  s_vk->add_option("--seed", vk.seed)->capture_default_str();
  s_vk->add_flag("--zero-padding", vk.zero_padding);
  s_vk->add_option("--tol", vk.tol)->capture_default_str();

  SimArgs sm;
  auto* s_sm = app.add_subcommand("simulate", "finite-width network experiments (CSV)");
  s_sm->add_option("--mode", sm.mode, "covariance, gradients or modes")->capture_default_str();
  s_sm->add_option("--config", sm.config_file, "key=value file; flags override it");
  s_sm->add_option("--activation", sm.activation)->capture_default_str();
  s_sm->add_option("--sigma-w2", sm.sigma_w2)->capture_default_str();
  s_sm->add_option("--sigma-b2", sm.sigma_b2)->capture_default_str();
  s_sm->add_option("--depth", sm.depth)->capture_default_str();
  s_sm->add_option("--channels", sm.channels)->capture_default_str();
  s_sm->add_option("--n", sm.n)->capture_default_str();
  s_sm->add_option("--v", sm.v)->capture_default_str();
  s_sm->add_option("--seed", sm.seed)->capture_default_str();
  s_sm->add_option("--members", sm.members, "ensemble size (modes: 0 skips simulation)")
      ->capture_default_str();
  s_sm->add_option("--init", sm.init, "gaussian, orthogonal or delta")->capture_default_str();
  s_sm->add_option("--input", sm.input, "random or identity input covariance")->capture_default_str();
  s_sm->add_option("--input-q", sm.input_q)->capture_default_str();
  s_sm->add_option("--l0", sm.l0)->capture_default_str();
  s_sm->add_option("--fit-layers", sm.fit_layers)->capture_default_str();
  s_sm->add_option("--skip", sm.skip, "transient layers dropped from each end of the gradient fit")
      ->capture_default_str();
  s_sm->add_option("--eps0", sm.eps0, "real Fourier coefficients of the perturbed diagonal");
  s_sm->add_option("--out", sm.out);

  SvdArgs sv;
  auto* s_sv = app.add_subcommand("svd", "singular values of random convolution matrices (CSV)");
  s_sv->add_option("--ensemble", sv.ensemble, "blockcirc, dense or kernel-file")->capture_default_str();
  s_sv->add_option("--n", sv.n)->capture_default_str();
  s_sv->add_option("--c", sv.c)->capture_default_str();
  s_sv->add_option("--ksize", sv.ksize)->capture_default_str();
  s_sv->add_option("--seed", sv.seed)->capture_default_str();
  s_sv->add_option("--in", sv.in, "kernel file for --ensemble kernel-file");
  s_sv->add_option("--bins", sv.bins)->capture_default_str();
  s_sv->add_option("--out", sv.out);

  // config keys are accepted on every subcommand
  for (auto* s : {s_fp, s_ph, s_ds, s_gk, s_vk, s_sv}) s->add_option("--config", "key=value file");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    error_json(err, "usage", e.what());
    return kUsage;
  }

  try {
    if (s_fp->parsed()) {
      ctx.sub = s_fp;
      emit(ctx, fixed_point_json(fp).dump(2) + "\n", fp.out);
    } else if (s_ph->parsed()) {
      ctx.sub = s_ph;
      emit(ctx, phase_csv(ph), ph.out);
    } else if (s_ds->parsed()) {
      ctx.sub = s_ds;
      emit(ctx, depth_csv(ds), ds.out);
    } else if (s_gk->parsed()) {
      ctx.sub = s_gk;
      const KernelFile f = generate_kernel(gk);
      write_kernel_file(gk.out, f);
      json j;
      j["out"] = gk.out;
      j["kind"] = gk.kind;
      j["rank"] = f.kernel.rank();
      j["ksize"] = f.kernel.k_size();
      j["cin"] = f.kernel.c_in();
      j["cout"] = f.kernel.c_out();
      j["gain"] = gk.gain;
      j["seed"] = gk.seed;
      out << j.dump(2) << "\n";
    } else if (s_vk->parsed()) {
      ctx.sub = s_vk;
      emit(ctx, verify_json(vk).dump(2) + "\n", "");
    } else if (s_sm->parsed()) {
      ctx.sub = s_sm;
      json summary;
      summary["mode"] = sm.mode;
      std::string body;
      if (sm.mode == "covariance")
        body = simulate_covariance(sm);
      else if (sm.mode == "gradients")
        body = simulate_gradients(sm, summary);
      else if (sm.mode == "modes")
        body = simulate_modes(sm, summary);
      else
        throw InvalidArgument("mode must be covariance, gradients or modes");
      emit(ctx, body, sm.out);
      if (!sm.out.empty()) out << summary.dump(2) << "\n";
    } else if (s_sv->parsed()) {
      ctx.sub = s_sv;
      json summary;
      const std::string body = svd_csv(sv, summary);
      emit(ctx, body, sv.out);
      if (!sv.out.empty()) out << summary.dump(2) << "\n";
    }
  } catch (const InvalidArgument& e) {
    error_json(err, "usage", e.what());
    return kUsage;
  } catch (const ConvergenceError& e) {
    error_json(err, "convergence", e.what(),
               {{"residual", number(e.residual())}, {"iterations", e.iterations()}});
    return kNumeric;
  } catch (const BracketError& e) {
    error_json(err, "bracket", e.what(), {{"lo", e.lo()}, {"hi", e.hi()}});
    return kNumeric;
  } catch (const Error& e) {
    error_json(err, "numeric", e.what());
    return kNumeric;
  }
  return kOk;
}

}  // namespace mfcnn::cli
